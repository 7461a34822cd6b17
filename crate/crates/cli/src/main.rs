//! `spurt` — detect spurts/downfalls in daily event-count series and
//! attribute them to resilience or coordination changes.
//!
//! Subcommands: `simulate`, `fit`, `decode`, `classify`, `track`, `eval`,
//! `study {table1|alphacdf|divergence}`. Every command is a pure function
//! of its input files, configuration and seed; rerunning reproduces
//! byte-identical outputs.

#![forbid(unsafe_code)]

mod commands;
mod config;
mod io;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "spurt", version, about = "Spurt detection and tactic attribution for sparse daily count series")]
struct Cli {
    /// JSON config file; flags override config fields. Falls back to the
    /// SPURT_CONFIG environment variable.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Daily,
    ActiveDays,
    TotalAttacks,
    Joint,
}

impl ModeArg {
    fn to_mode(self) -> spurt_core::ObservationMode {
        match self {
            ModeArg::Daily => spurt_core::ObservationMode::DailyCounts,
            ModeArg::ActiveDays => spurt_core::ObservationMode::ActiveDays,
            ModeArg::TotalAttacks => spurt_core::ObservationMode::TotalAttacks,
            ModeArg::Joint => spurt_core::ObservationMode::Joint,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BinningArg {
    FreeRunning,
    WindowConstant,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Daily,
    Window,
    Majorization,
    Truth,
}

#[derive(Clone, Copy, ValueEnum)]
enum LabelArg {
    Resilient,
    Coordinating,
    Both,
    Active,
}

impl LabelArg {
    fn to_kind(self) -> spurt_core::evaluate::LabelKind {
        match self {
            LabelArg::Resilient => spurt_core::evaluate::LabelKind::Resilient,
            LabelArg::Coordinating => spurt_core::evaluate::LabelKind::Coordinating,
            LabelArg::Both => spurt_core::evaluate::LabelKind::Both,
            LabelArg::Active => spurt_core::evaluate::LabelKind::Active,
        }
    }
}

/// Threshold overrides shared by `classify` and `track`.
#[derive(Args, Default, Clone)]
struct ThresholdArgs {
    #[arg(long)]
    eta_x: Option<f64>,
    #[arg(long)]
    eta_y: Option<f64>,
    #[arg(long)]
    eta_hat: Option<f64>,
    #[arg(long)]
    eta_hat_x: Option<f64>,
    #[arg(long)]
    eta_hat_y: Option<f64>,
    #[arg(long)]
    eta_tilde_x: Option<f64>,
    #[arg(long)]
    eta_tilde_y: Option<f64>,
    #[arg(long)]
    se_floor: Option<f64>,
    #[arg(long)]
    npm_floor: Option<f64>,
    #[arg(long)]
    alpha_star: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an activity trace from the two-state model.
    Simulate {
        #[arg(long)]
        n_days: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long, value_enum)]
        binning: Option<BinningArg>,
        #[arg(long)]
        p0: Option<f64>,
        #[arg(long)]
        q0: Option<f64>,
        #[arg(long)]
        gamma0: Option<f64>,
        #[arg(long)]
        mu0: Option<f64>,
        #[arg(long)]
        gamma1: Option<f64>,
        #[arg(long)]
        mu1: Option<f64>,
        #[arg(long)]
        out_counts: std::path::PathBuf,
        #[arg(long)]
        out_states: std::path::PathBuf,
    },
    /// Fit the two-state model by Baum-Welch on a chosen observation mode.
    Fit {
        #[arg(long)]
        counts: std::path::PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out_model: std::path::PathBuf,
        #[arg(long)]
        out_trace: Option<std::path::PathBuf>,
    },
    /// Decode the most probable state sequence under a fitted model.
    Decode {
        #[arg(long)]
        counts: std::path::PathBuf,
        #[arg(long)]
        model: std::path::PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        out_states: std::path::PathBuf,
    },
    /// Turn states or window metrics into per-window tactic labels.
    Classify {
        #[arg(long)]
        counts: std::path::PathBuf,
        #[arg(long, value_enum)]
        rule: RuleArg,
        /// Decoded or true state file (daily for the daily/truth rules,
        /// per-window for the window rule; the truth rule also accepts
        /// per-window states via --states-per window).
        #[arg(long)]
        states: Option<std::path::PathBuf>,
        /// For the truth rule: whether --states carries one state per day
        /// or per window.
        #[arg(long, value_parser = ["day", "window"], default_value = "day")]
        states_per: String,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        delta: Option<usize>,
        #[command(flatten)]
        thresholds: ThresholdArgs,
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Cumulative resilience/coordination tracking functions.
    Track {
        #[arg(long)]
        counts: std::path::PathBuf,
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long)]
        alpha_star: Option<f64>,
        /// Horizon in windows; defaults to every complete window.
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Score predicted labels against truth labels.
    Eval {
        #[arg(long)]
        truth: std::path::PathBuf,
        #[arg(long)]
        pred: std::path::PathBuf,
        #[arg(long, value_enum)]
        label: LabelArg,
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Monte Carlo studies of the majorization functionals.
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Conditional single-function efficacy table.
    Table1 {
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Weight caps for the discrete-uniform rows.
        #[arg(long, value_delimiter = ',')]
        k_values: Option<Vec<u32>>,
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Empirical CDFs of the alpha extremes.
    Alphacdf {
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Weight cap for the discrete-uniform row.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Functional gaps against the benchmark spread patterns.
    Divergence {
        /// Total events spread across the window.
        #[arg(long)]
        total: Option<u32>,
        #[arg(long)]
        delta: Option<usize>,
        #[arg(long)]
        alpha_star: Option<f64>,
        #[arg(long)]
        out: std::path::PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let result = match cli.command {
        Command::Simulate {
            n_days,
            seed,
            delta,
            binning,
            p0,
            q0,
            gamma0,
            mu0,
            gamma1,
            mu1,
            out_counts,
            out_states,
        } => commands::simulate(
            config,
            commands::SimulateArgs {
                n_days,
                seed,
                delta,
                binning: binning.map(|b| match b {
                    BinningArg::FreeRunning => spurt_core::StateBinning::FreeRunning,
                    BinningArg::WindowConstant => spurt_core::StateBinning::WindowConstant,
                }),
                p0,
                q0,
                gamma0,
                mu0,
                gamma1,
                mu1,
                out_counts,
                out_states,
            },
        ),
        Command::Fit {
            counts,
            mode,
            delta,
            max_iters,
            tol,
            out_model,
            out_trace,
        } => commands::fit(
            config,
            &counts,
            mode.to_mode(),
            delta,
            max_iters,
            tol,
            &out_model,
            out_trace.as_deref(),
        ),
        Command::Decode {
            counts,
            model,
            mode,
            out_states,
        } => commands::decode(config, &counts, &model, mode.to_mode(), &out_states),
        Command::Classify {
            counts,
            rule,
            states,
            states_per,
            mode,
            delta,
            thresholds,
            out,
        } => commands::classify(
            config,
            &counts,
            match rule {
                RuleArg::Daily => commands::Rule::Daily,
                RuleArg::Window => commands::Rule::Window,
                RuleArg::Majorization => commands::Rule::Majorization,
                RuleArg::Truth => commands::Rule::Truth,
            },
            states.as_deref(),
            &states_per,
            mode.map(ModeArg::to_mode),
            delta,
            &thresholds,
            &out,
        ),
        Command::Track {
            counts,
            delta,
            alpha_star,
            n_max,
            out,
        } => commands::track(config, &counts, delta, alpha_star, n_max, &out),
        Command::Eval {
            truth,
            pred,
            label,
            out,
        } => commands::eval(config, &truth, &pred, label.to_kind(), &out),
        Command::Study(study) => match study {
            StudyCommand::Table1 {
                trials,
                delta,
                seed,
                workers,
                k_values,
                out,
            } => commands::study_table1(config, trials, delta, seed, workers, k_values, &out),
            StudyCommand::Alphacdf {
                trials,
                delta,
                seed,
                workers,
                k,
                out,
            } => commands::study_alphacdf(config, trials, delta, seed, workers, k, &out),
            StudyCommand::Divergence {
                total,
                delta,
                alpha_star,
                out,
            } => commands::study_divergence(config, total, delta, alpha_star, &out),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

impl ThresholdArgs {
    fn apply(&self, th: &mut spurt_core::Thresholds) {
        let fields = [
            (&self.eta_x, &mut th.eta_x),
            (&self.eta_y, &mut th.eta_y),
            (&self.eta_hat, &mut th.eta_hat),
            (&self.eta_hat_x, &mut th.eta_hat_x),
            (&self.eta_hat_y, &mut th.eta_hat_y),
            (&self.eta_tilde_x, &mut th.eta_tilde_x),
            (&self.eta_tilde_y, &mut th.eta_tilde_y),
            (&self.se_floor, &mut th.se_floor),
            (&self.npm_floor, &mut th.npm_floor),
            (&self.alpha_star, &mut th.alpha_star),
        ];
        for (src, dst) in fields {
            if let Some(v) = src {
                *dst = *v;
            }
        }
    }
}
