use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;

use tether_core::checkpoint::Checkpoint;
use tether_core::cli::{
    ablation_config, ablation_csv, run_ablation_arm, Cli, Command, ABLATION_ARMS,
};
use tether_core::trainer::{self, EvalSetup};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::User(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Divergence(msg)) => {
            eprintln!("divergence: {msg}");
            ExitCode::from(2)
        }
    }
}

enum AppError {
    User(String),
    Divergence(String),
}

impl From<trainer::TrainError> for AppError {
    fn from(e: trainer::TrainError) -> Self {
        if e.is_divergence() {
            AppError::Divergence(e.to_string())
        } else {
            AppError::User(e.to_string())
        }
    }
}

impl From<tether_core::checkpoint::CheckpointError> for AppError {
    fn from(e: tether_core::checkpoint::CheckpointError) -> Self {
        AppError::User(e.to_string())
    }
}

impl From<tether_core::config::ConfigError> for AppError {
    fn from(e: tether_core::config::ConfigError) -> Self {
        AppError::User(e.to_string())
    }
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), AppError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| AppError::User(format!("cannot create {}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| AppError::User(format!("cannot write {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Train(args) => {
            let config = args.build_config().map_err(AppError::User)?;
            let output = trainer::train(&config)?;
            println!(
                "trained {} iterations / {} env steps -> {}",
                output.iterations,
                output.env_steps,
                output.final_checkpoint.display()
            );
            if let Some(report) = &output.final_eval {
                print!("{}", report.to_text());
            }
            Ok(())
        }
        Command::Eval(args) => {
            let ckpt = Checkpoint::load(&args.checkpoint)?;
            let model = Arc::new(ckpt.config.load_model()?);
            ckpt.validate_against(&model)?;
            let motions = ckpt.config.build_motions(&model)?;
            let names: Vec<String> = motions.iter().map(|m| m.name.clone()).collect();
            let (report, _) = trainer::evaluate(&EvalSetup {
                model: &model,
                motions: &motions,
                motion_names: &names,
                actor: &ckpt.actor,
                actor_norm: &ckpt.actor_norm,
                env_config: &ckpt.config.env,
                dr: if args.dr { Some(&ckpt.config.dr) } else { None },
                episodes_per_motion: args.episodes,
                seed: args.seed,
                noise_sigma: 0.0,
            })?;
            let out_dir = args.out.unwrap_or_else(|| {
                args.checkpoint
                    .parent()
                    .map(|p| p.to_path_buf())
                    .unwrap_or_else(|| PathBuf::from("."))
            });
            write_file(&out_dir.join("eval_report.csv"), &report.to_csv())?;
            write_file(&out_dir.join("eval_report.txt"), &report.to_text())?;
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Replay(args) => {
            let ckpt = Checkpoint::load(&args.checkpoint)?;
            let model = Arc::new(ckpt.config.load_model()?);
            ckpt.validate_against(&model)?;
            let motions = ckpt.config.build_motions(&model)?;
            let motion = motions
                .iter()
                .find(|m| m.name == args.motion)
                .ok_or_else(|| {
                    AppError::User(format!(
                        "motion `{}` not in the run config (have: {})",
                        args.motion,
                        motions
                            .iter()
                            .map(|m| m.name.as_str())
                            .collect::<Vec<_>>()
                            .join(", ")
                    ))
                })?;
            let csv = trainer::replay(&ckpt, &model, motion)?;
            match args.out {
                Some(path) => write_file(&path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::NoiseSweep(args) => {
            let ckpt = Checkpoint::load(&args.checkpoint)?;
            let model = Arc::new(ckpt.config.load_model()?);
            ckpt.validate_against(&model)?;
            let all = ckpt.config.build_motions(&model)?;
            let motions: Vec<_> = match &args.motion {
                Some(name) => all.iter().filter(|m| m.name == *name).cloned().collect(),
                None => all.clone(),
            };
            if motions.is_empty() {
                return Err(AppError::User(format!(
                    "motion `{}` not in the run config",
                    args.motion.as_deref().unwrap_or("")
                )));
            }
            let names: Vec<String> = motions.iter().map(|m| m.name.clone()).collect();
            let sigmas_rad: Vec<f64> = args.sigmas.iter().map(|d| d.to_radians()).collect();
            let rows = trainer::noise_sweep(
                &ckpt,
                &model,
                &motions,
                &names,
                &sigmas_rad,
                args.episodes,
                args.seed,
            )?;
            let csv = trainer::noise_sweep_csv(&rows);
            let out = args.out.unwrap_or_else(|| PathBuf::from("noise_sweep.csv"));
            write_file(&out, &csv)?;
            for (sigma, report) in &rows {
                println!(
                    "sigma {:>5.1} deg: living {:6.2} %  success {:6.2} %",
                    sigma.to_degrees(),
                    report.living_rate,
                    report.success_rate
                );
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Ablate(args) => {
            std::fs::create_dir_all(&args.out).map_err(|e| {
                AppError::User(format!("cannot create {}: {e}", args.out.display()))
            })?;
            let mut rows = Vec::new();
            for arm in ABLATION_ARMS {
                for &seed in &args.seeds {
                    let config = ablation_config(arm, seed, args.steps, &args.hidden, &args.out);
                    println!("ablate: arm {} seed {seed}", arm.0);
                    let mut row = run_ablation_arm(&config)?;
                    row.arm = arm.0.to_string();
                    rows.push(row);
                }
            }
            let csv = ablation_csv(&rows);
            let path = args.out.join("ablation.csv");
            write_file(&path, &csv)?;
            print!("{csv}");
            println!("wrote {}", path.display());
            Ok(())
        }
    }
}
