//! Priority-based motion scheduler for multi-motion training.
//!
//! Each motion starts at a random index and trains on the clip from there to
//! its end. Completing a clip grows it backward (a new start drawn below the
//! old one); completing the whole motion bumps its completion count, lowers
//! its priority `P = 1 - N / max(N)`, and a new motion is drawn with
//! probability proportional to floored priority. Failures resample without
//! touching counts or clip starts, so hard motions stay hot without losing
//! progress.

use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::{Deserialize, Serialize};

/// Sampling floor added to every priority so mastered motions (P = 0) are
/// still revisited and the all-zero initial state is well-defined.
pub const PRIORITY_FLOOR: f64 = 0.05;

/// Shortest clip the scheduler will assign, in reference frames at 60 Hz
/// (0.5 s); sub-second clips carry no learning signal.
pub const MIN_CLIP_FRAMES: usize = 30;

/// Per-motion scheduling state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerState {
    /// Completion count per motion.
    pub counts: Vec<u64>,
    /// Priority per motion, in [0, 1].
    pub priorities: Vec<f64>,
    /// Clip start index per motion; the clip always runs to the final frame.
    pub starts: Vec<usize>,
}

/// The scheduler: owns per-motion state and its RNG. Only the state is
/// checkpointed; resuming re-seeds the RNG.
#[derive(Debug)]
pub struct Scheduler {
    pub state: SchedulerState,
    motion_lens: Vec<usize>,
    rng: StdRng,
}

/// Next episode assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub motion: usize,
    pub start: usize,
}

/// `P_j = 1 - N_j / max(N)`; all ones when nothing has completed yet.
pub fn update_priority(counts: &[u64]) -> Vec<f64> {
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return vec![1.0; counts.len()];
    }
    counts
        .iter()
        .map(|&n| 1.0 - n as f64 / max as f64)
        .collect()
}

/// Draw an index with probability `(P_i + floor) / sum(P + floor)`.
pub fn sample_by_priority(rng: &mut StdRng, priorities: &[f64]) -> usize {
    assert!(!priorities.is_empty(), "no motions to sample");
    debug_assert!(priorities.iter().all(|&p| p >= 0.0));
    let total: f64 = priorities.iter().map(|p| p + PRIORITY_FLOOR).sum();
    let mut u = rng.random_range(0.0..total);
    for (i, &p) in priorities.iter().enumerate() {
        u -= p + PRIORITY_FLOOR;
        if u < 0.0 {
            return i;
        }
    }
    priorities.len() - 1
}

impl Scheduler {
    /// All counts and priorities zero, clip starts uniform over each motion
    /// (clamped so clips keep at least [`MIN_CLIP_FRAMES`]).
    pub fn new(motion_lens: &[usize], seed: u64) -> Self {
        assert!(!motion_lens.is_empty(), "scheduler needs at least one motion");
        let mut rng = StdRng::seed_from_u64(seed);
        let starts = motion_lens
            .iter()
            .map(|&len| {
                let max_start = len.saturating_sub(MIN_CLIP_FRAMES);
                if max_start == 0 {
                    0
                } else {
                    rng.random_range(0..len).min(max_start)
                }
            })
            .collect();
        Self {
            state: SchedulerState {
                counts: vec![0; motion_lens.len()],
                priorities: vec![0.0; motion_lens.len()],
                starts,
            },
            motion_lens: motion_lens.to_vec(),
            rng,
        }
    }

    pub fn n_motions(&self) -> usize {
        self.motion_lens.len()
    }

    /// First assignment: sample by priority (all-zero priorities draw
    /// uniformly through the floor).
    pub fn initial_assignment(&mut self) -> Assignment {
        let motion = sample_by_priority(&mut self.rng, &self.state.priorities);
        Assignment {
            motion,
            start: self.state.starts[motion],
        }
    }

    /// Episode-end transition.
    ///
    /// Success with a partial clip grows the clip (same motion, lower start);
    /// success at start 0 counts a completion, recomputes priorities, and
    /// resamples; failure resamples by priority leaving counts and starts
    /// untouched.
    pub fn on_clip_end(&mut self, motion: usize, success: bool) -> Assignment {
        assert!(motion < self.n_motions(), "motion index out of range");
        if success {
            let start = self.state.starts[motion];
            if start > 0 {
                let new_start = self.rng.random_range(0..start);
                self.state.starts[motion] = new_start;
                return Assignment {
                    motion,
                    start: new_start,
                };
            }
            self.state.counts[motion] += 1;
            self.state.priorities = update_priority(&self.state.counts);
        }
        let next = sample_by_priority(&mut self.rng, &self.state.priorities);
        Assignment {
            motion: next,
            start: self.state.starts[next],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn priority_formula_matches_hand_oracle() {
        assert_eq!(update_priority(&[2, 0, 1]), vec![0.0, 1.0, 0.5]);
        assert_eq!(update_priority(&[0, 0, 0]), vec![1.0, 1.0, 1.0]);
        assert_eq!(update_priority(&[5, 5]), vec![0.0, 0.0]);
    }

    #[test]
    fn priorities_in_unit_interval_max_count_gets_zero() {
        let mut rng = StdRng::seed_from_u64(0);
        for _ in 0..200 {
            let n = rng.random_range(1..8usize);
            let counts: Vec<u64> = (0..n).map(|_| rng.random_range(0..50)).collect();
            let p = update_priority(&counts);
            assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            if let Some(max) = counts.iter().copied().max() {
                if max > 0 {
                    let arg = counts.iter().position(|&c| c == max).unwrap();
                    assert_eq!(p[arg], 0.0);
                }
            }
        }
    }

    #[test]
    fn priority_never_increases_as_own_count_grows() {
        let mut counts = vec![3u64, 1, 7];
        let mut last = update_priority(&counts)[1];
        for _ in 0..20 {
            counts[1] += 1;
            let p = update_priority(&counts)[1];
            assert!(p <= last + 1e-15);
            last = p;
        }
    }

    #[test]
    fn init_state_per_algorithm() {
        let mut s = Scheduler::new(&[240, 600, 90], 17);
        assert_eq!(s.state.counts, vec![0, 0, 0]);
        assert_eq!(s.state.priorities, vec![0.0, 0.0, 0.0]);
        for (j, &len) in [240usize, 600, 90].iter().enumerate() {
            assert!(s.state.starts[j] < len);
        }
        // Deterministic init for a fixed seed.
        let s2 = Scheduler::new(&[240, 600, 90], 17);
        assert_eq!(s.state, s2.state);
        let a = s.initial_assignment();
        assert!(a.motion < 3);
    }

    #[test]
    fn single_motion_always_sampled() {
        let mut s = Scheduler::new(&[120], 3);
        for _ in 0..50 {
            assert_eq!(s.initial_assignment().motion, 0);
            assert_eq!(s.on_clip_end(0, false).motion, 0);
        }
    }

    #[test]
    fn success_with_positive_start_grows_clip() {
        let mut s = Scheduler::new(&[600], 5);
        s.state.starts[0] = 10;
        let a = s.on_clip_end(0, true);
        assert_eq!(a.motion, 0);
        assert!(a.start < 10);
        assert_eq!(s.state.counts[0], 0, "no completion until start hits 0");
    }

    #[test]
    fn clip_starts_strictly_decrease_along_success_chain() {
        let mut s = Scheduler::new(&[600], 99);
        let mut start = s.state.starts[0].max(1);
        s.state.starts[0] = start;
        let mut guard = 0;
        while start > 0 {
            let a = s.on_clip_end(0, true);
            assert!(a.start < start, "clip must grow: {} -> {}", start, a.start);
            start = a.start;
            guard += 1;
            assert!(guard < 700, "chain did not reach 0");
        }
        // Completion at start 0 increments the count.
        s.on_clip_end(0, true);
        assert_eq!(s.state.counts[0], 1);
    }

    #[test]
    fn failure_keeps_counts_and_starts() {
        let mut s = Scheduler::new(&[240, 240], 7);
        let starts = s.state.starts.clone();
        let a = s.on_clip_end(0, false);
        assert_eq!(s.state.counts, vec![0, 0]);
        assert_eq!(s.state.starts, starts);
        assert!(a.motion < 2);
    }

    #[test]
    fn completion_updates_priorities_via_formula() {
        let mut s = Scheduler::new(&[240, 240, 240], 11);
        s.state.starts = vec![0, 0, 0];
        s.on_clip_end(0, true);
        assert_eq!(s.state.counts, vec![1, 0, 0]);
        assert_eq!(s.state.priorities, vec![0.0, 1.0, 1.0]);
        s.on_clip_end(1, true);
        s.on_clip_end(1, true);
        assert_eq!(s.state.counts, vec![1, 2, 0]);
        assert_eq!(s.state.priorities, vec![0.5, 0.0, 1.0]);
    }

    #[test]
    fn sampling_matches_floored_priorities() {
        // P = [1, 0, 0]: index 0 expected with (1 + f) / (1 + 3f).
        let mut rng = StdRng::seed_from_u64(42);
        let p = vec![1.0, 0.0, 0.0];
        let n = 100_000;
        let mut hits = [0usize; 3];
        for _ in 0..n {
            hits[sample_by_priority(&mut rng, &p)] += 1;
        }
        let expect0 = (1.0 + PRIORITY_FLOOR) / (1.0 + 3.0 * PRIORITY_FLOOR);
        let freq0 = hits[0] as f64 / n as f64;
        assert!(
            (freq0 - expect0).abs() < 0.01,
            "frequency {freq0} vs expected {expect0}"
        );
    }

    #[test]
    fn uniform_priorities_pass_chi_square() {
        let mut rng = StdRng::seed_from_u64(1234);
        let p = vec![0.5; 4];
        let n = 100_000usize;
        let mut hits = [0usize; 4];
        for _ in 0..n {
            hits[sample_by_priority(&mut rng, &p)] += 1;
        }
        let expected = n as f64 / 4.0;
        let chi2: f64 = hits
            .iter()
            .map(|&h| (h as f64 - expected).powi(2) / expected)
            .sum();
        // 99% quantile of chi-square with 3 degrees of freedom.
        assert!(chi2 < 11.345, "chi-square statistic {chi2}");
    }
}
