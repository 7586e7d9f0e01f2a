//! Evaluation metrics over rollouts against reference motions.
//!
//! Rates count every episode; tracking distances average only over episodes
//! that reached the end of their motion, since poses after a fall or a root
//! deviation carry no information about tracking quality.

use serde::{Deserialize, Serialize};

use crate::env::TerminationCause;

/// Per-tick tracking record of one episode.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EpisodeTrace {
    /// ‖root - root_ref‖ per tick, m.
    pub root_err: Vec<f64>,
    /// Squared root-position error per tick, m².
    pub root_sq_err: Vec<f64>,
    /// |pitch - pitch_ref| per tick, rad.
    pub pitch_err: Vec<f64>,
    /// Mean over joints of squared root-relative joint-position error per
    /// tick, m².
    pub style_sq_err: Vec<f64>,
}

/// One evaluated episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub motion: usize,
    pub cause: TerminationCause,
    pub trace: EpisodeTrace,
}

impl EpisodeOutcome {
    pub fn fell(&self) -> bool {
        self.cause == TerminationCause::Fall
    }

    pub fn completed(&self) -> bool {
        self.cause == TerminationCause::MotionEnd
    }
}

/// Fraction of episodes without a fall, in percent.
pub fn living_rate(episodes: &[EpisodeOutcome]) -> f64 {
    assert!(!episodes.is_empty(), "living rate needs at least one episode");
    let alive = episodes.iter().filter(|e| !e.fell()).count();
    100.0 * alive as f64 / episodes.len() as f64
}

/// Fraction of episodes that neither fell nor deviated beyond
/// `0.5 * ratio` meters from the reference root at any tick, in percent.
pub fn success_rate(episodes: &[EpisodeOutcome], ratio: f64) -> f64 {
    assert!(ratio > 0.0 && ratio <= 1.0, "ratio must be in (0, 1]");
    if episodes.is_empty() {
        return 0.0;
    }
    let threshold = 0.5 * ratio;
    let ok = episodes
        .iter()
        .filter(|e| !e.fell() && e.trace.root_err.iter().all(|&d| d <= threshold))
        .count();
    100.0 * ok as f64 / episodes.len() as f64
}

/// Mean over timesteps and joints of the squared root-relative joint
/// position error (m², reported in the meter-MSE convention).
pub fn style_distance(per_tick_mean_sq: &[f64]) -> f64 {
    if per_tick_mean_sq.is_empty() {
        return 0.0;
    }
    per_tick_mean_sq.iter().sum::<f64>() / per_tick_mean_sq.len() as f64
}

/// Mean squared root-position error, m².
pub fn root_pos_distance(root_sq_err: &[f64]) -> f64 {
    if root_sq_err.is_empty() {
        return 0.0;
    }
    root_sq_err.iter().sum::<f64>() / root_sq_err.len() as f64
}

/// Mean absolute pitch error, degrees.
pub fn root_rot_distance(pitch_err: &[f64]) -> f64 {
    if pitch_err.is_empty() {
        return 0.0;
    }
    let mean = pitch_err.iter().sum::<f64>() / pitch_err.len() as f64;
    mean.to_degrees()
}

/// Per-motion aggregate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotionReport {
    pub motion: usize,
    pub name: String,
    pub episodes: usize,
    pub living_rate: f64,
    pub success_rate: f64,
    pub style_distance: f64,
    pub root_pos_distance: f64,
    pub root_rot_distance: f64,
}

/// Evaluation summary across motions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub living_rate: f64,
    pub success_rate: f64,
    pub style_distance: f64,
    pub root_pos_distance: f64,
    pub root_rot_distance: f64,
    pub per_motion: Vec<MotionReport>,
}

impl EvalReport {
    /// Aggregate episode outcomes; distance averages use only episodes that
    /// reached their motion's end.
    pub fn build(episodes: &[EpisodeOutcome], motion_names: &[String], ratio: f64) -> EvalReport {
        assert!(!episodes.is_empty(), "report needs at least one episode");
        let n_motions = motion_names.len();
        let mut per_motion = Vec::new();
        for m in 0..n_motions {
            let eps: Vec<&EpisodeOutcome> =
                episodes.iter().filter(|e| e.motion == m).collect();
            if eps.is_empty() {
                continue;
            }
            let owned: Vec<EpisodeOutcome> = eps.iter().map(|e| (*e).clone()).collect();
            let (style, rpos, rrot) = distance_means(&owned);
            per_motion.push(MotionReport {
                motion: m,
                name: motion_names[m].clone(),
                episodes: owned.len(),
                living_rate: living_rate(&owned),
                success_rate: success_rate(&owned, ratio),
                style_distance: style,
                root_pos_distance: rpos,
                root_rot_distance: rrot,
            });
        }
        let (style, rpos, rrot) = distance_means(episodes);
        EvalReport {
            episodes: episodes.len(),
            living_rate: living_rate(episodes),
            success_rate: success_rate(episodes, ratio),
            style_distance: style,
            root_pos_distance: rpos,
            root_rot_distance: rrot,
            per_motion,
        }
    }

    /// CSV with one summary row and one row per motion.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "motion,episodes,living_rate,success_rate,style_distance,root_pos_distance,root_rot_distance\n",
        );
        s.push_str(&format!(
            "all,{},{},{},{},{},{}\n",
            self.episodes,
            self.living_rate,
            self.success_rate,
            self.style_distance,
            self.root_pos_distance,
            self.root_rot_distance
        ));
        for m in &self.per_motion {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                m.name,
                m.episodes,
                m.living_rate,
                m.success_rate,
                m.style_distance,
                m.root_pos_distance,
                m.root_rot_distance
            ));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "episodes: {}\nliving rate: {:.2} %\nsuccess rate: {:.2} %\nstyle distance: {:.4} m\nroot pos. distance: {:.4} m\nroot rot. distance: {:.4} deg\n",
            self.episodes,
            self.living_rate,
            self.success_rate,
            self.style_distance,
            self.root_pos_distance,
            self.root_rot_distance
        );
        for m in &self.per_motion {
            s.push_str(&format!(
                "  {:<12} episodes {:>3}  living {:6.2} %  success {:6.2} %  style {:.4}  root pos {:.4}  root rot {:.4}\n",
                m.name, m.episodes, m.living_rate, m.success_rate,
                m.style_distance, m.root_pos_distance, m.root_rot_distance
            ));
        }
        s
    }
}

/// Distance means over completed episodes only.
fn distance_means(episodes: &[EpisodeOutcome]) -> (f64, f64, f64) {
    let mut style = Vec::new();
    let mut rpos = Vec::new();
    let mut rrot = Vec::new();
    for e in episodes.iter().filter(|e| e.completed()) {
        style.extend(&e.trace.style_sq_err);
        rpos.extend(&e.trace.root_sq_err);
        rrot.extend(&e.trace.pitch_err);
    }
    (
        style_distance(&style),
        root_pos_distance(&rpos),
        root_rot_distance(&rrot),
    )
}
