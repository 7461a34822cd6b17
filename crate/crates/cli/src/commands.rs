//! Subcommand implementations. Each builds its complete output in memory,
//! stamps provenance, and writes in one step.

use std::path::Path;

use spurt_core::classify::{
    ground_truth_labels, label_from_daily_states, label_from_window_states, label_majorization,
    tracking_update, TrueStates,
};
use spurt_core::evaluate::{
    alpha_extreme_samples, benchmark_divergence, confusion, single_function_counts,
    AlphaCdfStudy, AlphaExtremeSamples, EmpiricalCdf, LabelKind, SingleFunctionStudy,
    StudyCounts,
};
use spurt_core::hmm::{baum_welch, default_init, viterbi};
use spurt_core::majorize::AlphaGrid;
use spurt_core::simulate::simulate_hmm;
use spurt_core::{
    ActivityProfile, FitOptions, HmmModel, ObservationMode, SimConfig, StateBinning,
    VectorModel,
};

use crate::config::{core_error, CliError, RunConfig};
use crate::io;
use crate::ThresholdArgs;

pub struct SimulateArgs {
    pub n_days: Option<usize>,
    pub seed: Option<u64>,
    pub delta: Option<usize>,
    pub binning: Option<StateBinning>,
    pub p0: Option<f64>,
    pub q0: Option<f64>,
    pub gamma0: Option<f64>,
    pub mu0: Option<f64>,
    pub gamma1: Option<f64>,
    pub mu1: Option<f64>,
    pub out_counts: std::path::PathBuf,
    pub out_states: std::path::PathBuf,
}

pub fn simulate(mut config: RunConfig, args: SimulateArgs) -> Result<(), CliError> {
    if let Some(d) = args.delta {
        config.delta = d;
    }
    if let Some(n) = args.n_days {
        config.n_days = n;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(b) = args.binning {
        config.binning = b;
    }
    for (src, dst) in [
        (args.p0, &mut config.model.p0),
        (args.q0, &mut config.model.q0),
        (args.gamma0, &mut config.model.gamma0),
        (args.mu0, &mut config.model.mu0),
        (args.gamma1, &mut config.model.gamma1),
        (args.mu1, &mut config.model.mu1),
    ] {
        if let Some(v) = src {
            *dst = v;
        }
    }
    config.validate()?;

    let model = config.model.build(config.delta)?;
    let sim = SimConfig {
        model,
        n_days: config.n_days,
        seed: config.seed,
        binning: config.binning,
    };
    let (counts, states) = simulate_hmm(&sim).map_err(core_error)?;

    let head = io::provenance(&config, config.seed);
    let mut counts_out = head.clone();
    for c in &counts {
        counts_out.push_str(&format!("{c}\n"));
    }
    let mut states_out = head;
    for s in &states {
        states_out.push_str(&format!("{s}\n"));
    }
    io::write_output(&args.out_counts, &counts_out)?;
    io::write_output(&args.out_states, &states_out)
}

#[allow(clippy::too_many_arguments)]
pub fn fit(
    mut config: RunConfig,
    counts_path: &Path,
    mode: ObservationMode,
    delta: Option<usize>,
    max_iters: Option<usize>,
    tol: Option<f64>,
    out_model: &Path,
    out_trace: Option<&Path>,
) -> Result<(), CliError> {
    if let Some(d) = delta {
        config.delta = d;
    }
    if let Some(m) = max_iters {
        config.max_iters = m;
    }
    if let Some(t) = tol {
        config.tol = t;
    }
    config.validate()?;

    let counts = io::read_counts(counts_path)?;
    let profile = ActivityProfile::new(counts, config.delta).map_err(core_error)?;
    let opts = FitOptions {
        max_iters: config.max_iters,
        tol: config.tol,
    };
    let result = baum_welch(&profile, mode, default_init(&profile), opts).map_err(core_error)?;
    let model = result.model.clone().canonicalized();

    let doc = serde_json::json!({
        "meta": io::provenance_json(&config, config.seed),
        "mode": mode,
        "model": model,
        "converged": result.converged,
        "status": if result.converged { "converged" } else { "max-iters" },
        "iterations": result.loglik_trace.len(),
        "final_loglik": result.loglik_trace.last(),
        "warnings": result.warnings,
    });
    io::write_output(
        out_model,
        &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()),
    )?;

    if let Some(trace_path) = out_trace {
        let mut out = io::provenance(&config, config.seed);
        out.push_str("iteration,loglik\n");
        for (i, ll) in result.loglik_trace.iter().enumerate() {
            out.push_str(&format!("{},{:.12e}\n", i + 1, ll));
        }
        io::write_output(trace_path, &out)?;
    }
    Ok(())
}

fn read_model(path: &Path) -> Result<HmmModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("invalid model JSON {}: {e}", path.display())))?;
    // Accept both a fit document and a bare model object.
    let model_value = value.get("model").cloned().unwrap_or(value);
    serde_json::from_value(model_value)
        .map_err(|e| CliError::Data(format!("invalid model in {}: {e}", path.display())))
}

pub fn decode(
    config: RunConfig,
    counts_path: &Path,
    model_path: &Path,
    mode: ObservationMode,
    out_states: &Path,
) -> Result<(), CliError> {
    let counts = io::read_counts(counts_path)?;
    let model = read_model(model_path)?;
    let profile = ActivityProfile::new(counts, model.delta).map_err(core_error)?;
    let path = viterbi(&model, &profile, mode).map_err(core_error)?;

    let mut out = io::provenance(&config, config.seed);
    for s in &path {
        out.push_str(&format!("{s}\n"));
    }
    io::write_output(out_states, &out)
}

pub enum Rule {
    Daily,
    Window,
    Majorization,
    Truth,
}

#[allow(clippy::too_many_arguments)]
pub fn classify(
    mut config: RunConfig,
    counts_path: &Path,
    rule: Rule,
    states_path: Option<&Path>,
    states_per: &str,
    mode: Option<ObservationMode>,
    delta: Option<usize>,
    threshold_args: &ThresholdArgs,
    out: &Path,
) -> Result<(), CliError> {
    if let Some(d) = delta {
        config.delta = d;
    }
    threshold_args.apply(&mut config.thresholds);
    config.validate()?;
    let th = config.thresholds;

    let counts = io::read_counts(counts_path)?;
    let profile = ActivityProfile::new(counts, config.delta).map_err(core_error)?;
    let metrics = profile.all_windows();

    let need_states = || -> Result<Vec<u8>, CliError> {
        let path = states_path.ok_or_else(|| {
            CliError::Config("this rule needs --states with a state file".into())
        })?;
        io::read_states(path)
    };

    let labels = match rule {
        Rule::Daily => {
            let states = need_states()?;
            label_from_daily_states(&states, &metrics, config.delta, &th).map_err(core_error)?
        }
        Rule::Window => {
            let mode = mode.ok_or_else(|| {
                CliError::Config("the window rule needs --mode".into())
            })?;
            let states = need_states()?;
            if states.len() != metrics.len() {
                return Err(CliError::Data(format!(
                    "expected {} window states, found {}",
                    metrics.len(),
                    states.len()
                )));
            }
            label_from_window_states(&states, mode).map_err(core_error)?
        }
        Rule::Majorization => label_majorization(&metrics, &th),
        Rule::Truth => {
            let states = need_states()?;
            let true_states = match states_per {
                "day" => TrueStates::Daily(&states),
                "window" => TrueStates::PerWindow(&states),
                other => {
                    return Err(CliError::Config(format!(
                        "--states-per must be day or window, got {other}"
                    )))
                }
            };
            ground_truth_labels(true_states, &metrics, config.delta, &th).map_err(core_error)?
        }
    };

    let mut output = io::provenance(&config, config.seed);
    output.push_str(&io::labels_csv(&labels));
    io::write_output(out, &output)
}

pub fn track(
    mut config: RunConfig,
    counts_path: &Path,
    delta: Option<usize>,
    alpha_star: Option<f64>,
    n_max: Option<usize>,
    out: &Path,
) -> Result<(), CliError> {
    if let Some(d) = delta {
        config.delta = d;
    }
    if let Some(a) = alpha_star {
        config.thresholds.alpha_star = a;
    }
    config.validate()?;

    let counts = io::read_counts(counts_path)?;
    let profile = ActivityProfile::new(counts, config.delta).map_err(core_error)?;
    let metrics = profile.all_windows();
    let horizon = n_max.unwrap_or(metrics.len());
    let series = tracking_update(&metrics, config.thresholds.alpha_star, horizon)
        .map_err(core_error)?;

    let mut output = io::provenance(&config, config.seed);
    output.push_str("window,res,coord\n");
    for n in 0..=horizon {
        output.push_str(&format!("{n},{:.12e},{:.12e}\n", series.res[n], series.coord[n]));
    }
    io::write_output(out, &output)
}

pub fn eval(
    config: RunConfig,
    truth_path: &Path,
    pred_path: &Path,
    kind: LabelKind,
    out: &Path,
) -> Result<(), CliError> {
    let truth = io::read_labels(truth_path)?;
    let pred = io::read_labels(pred_path)?;
    let report = confusion(&truth, &pred, kind).map_err(core_error)?;
    let doc = serde_json::json!({
        "meta": io::provenance_json(&config, config.seed),
        "label": kind,
        "report": report,
    });
    io::write_output(out, &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))
}

/// Split `0..trials` into per-worker chunks and merge results in chunk
/// order, so the outcome does not depend on the pool size.
fn fan_out<T, F>(trials: u64, workers: usize, run: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync,
{
    let workers = workers.max(1).min(trials.max(1) as usize);
    let per = trials.div_ceil(workers as u64);
    let ranges: Vec<std::ops::Range<u64>> = (0..workers as u64)
        .map(|w| (w * per).min(trials)..((w + 1) * per).min(trials))
        .collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = ranges
            .into_iter()
            .map(|range| scope.spawn(|| run(range)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker")).collect()
    })
}

fn study_models(k_values: &[u32]) -> Vec<(String, VectorModel)> {
    let mut models = vec![
        ("uniform".to_string(), VectorModel::Uniform01),
        ("folded-normal".to_string(), VectorModel::FoldedNormal),
    ];
    for &k in k_values {
        models.push((
            format!("discrete-k{k}"),
            VectorModel::DiscreteUniform { k_max: k },
        ));
    }
    models
}

pub fn study_table1(
    mut config: RunConfig,
    trials: Option<u64>,
    delta: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    k_values: Option<Vec<u32>>,
    out: &Path,
) -> Result<(), CliError> {
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(d) = delta {
        config.delta = d;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(w) = workers {
        config.workers = w;
    }
    config.validate()?;

    let alphas = [-1.0, 0.0, 1.0, 2.0];
    let grid = AlphaGrid::default();
    let k_values = k_values.unwrap_or_else(|| vec![10, 15]);

    let mut output = io::provenance(&config, config.seed);
    let mut header = String::from("model,quantity");
    for a in alphas {
        header.push_str(&format!(",pm_{a}"));
    }
    for a in alphas {
        header.push_str(&format!(",npm_{a}"));
    }
    output.push_str(&header);
    output.push('\n');

    for (name, model) in study_models(&k_values) {
        let partials = fan_out(config.trials, config.workers, |range| {
            single_function_counts(model, config.delta, &alphas, config.seed, range, &grid)
        });
        let mut counts = StudyCounts::default();
        for (i, partial) in partials.iter().enumerate() {
            if i == 0 {
                counts = partial.clone();
            } else {
                counts.merge(partial);
            }
        }
        let study = SingleFunctionStudy::from_counts(&alphas, &counts);
        let row = |cells: &[spurt_core::evaluate::StudyCell], pick: fn(&spurt_core::evaluate::StudyCell) -> f64| {
            cells.iter().map(|c| format!(",{:.4}", pick(c))).collect::<String>()
        };
        output.push_str(&format!(
            "{name},p{}{}\n",
            row(&study.pm, |c| c.value),
            row(&study.npm, |c| c.value)
        ));
        output.push_str(&format!(
            "{name},se{}{}\n",
            row(&study.pm, |c| c.se),
            row(&study.npm, |c| c.se)
        ));
    }
    io::write_output(out, &output)
}

pub fn study_alphacdf(
    mut config: RunConfig,
    trials: Option<u64>,
    delta: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    k: Option<u32>,
    out: &Path,
) -> Result<(), CliError> {
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(d) = delta {
        config.delta = d;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(w) = workers {
        config.workers = w;
    }
    config.validate()?;

    let grid = AlphaGrid::default();
    let k = k.unwrap_or(10);

    let mut output = io::provenance(&config, config.seed);
    output.push_str("model,stat,value,cum\n");
    for (name, model) in study_models(&[k]) {
        let partials = fan_out(config.trials, config.workers, |range| {
            alpha_extreme_samples(model, config.delta, config.seed, range, &grid)
        });
        let mut samples = AlphaExtremeSamples::default();
        for partial in partials {
            samples.merge(partial);
        }
        let study = AlphaCdfStudy::from_samples(&samples);
        let blocks: [(&str, &EmpiricalCdf); 6] = [
            ("alpha_max_pm", &study.alpha_max_pm),
            ("alpha_max_npm", &study.alpha_max_npm),
            ("alpha_min_pm", &study.alpha_min_pm),
            ("alpha_min_npm", &study.alpha_min_npm),
            ("diff_max", &study.diff_max),
            ("diff_min", &study.diff_min),
        ];
        for (stat, cdf) in blocks {
            for (value, cum) in cdf.values.iter().zip(&cdf.cum) {
                output.push_str(&format!("{name},{stat},{value},{cum:.6}\n"));
            }
        }
    }
    io::write_output(out, &output)
}

pub fn study_divergence(
    mut config: RunConfig,
    total: Option<u32>,
    delta: Option<usize>,
    alpha_star: Option<f64>,
    out: &Path,
) -> Result<(), CliError> {
    if let Some(d) = delta {
        config.delta = d;
    }
    if let Some(a) = alpha_star {
        config.thresholds.alpha_star = a;
    }
    config.validate()?;
    let total = total.unwrap_or(10);

    let rows = benchmark_divergence(total, config.delta, config.thresholds.alpha_star)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut output = io::provenance(&config, config.seed);
    output.push_str("k,d_se_res,d_se_coord,d_npm_res,d_npm_coord\n");
    for row in rows {
        output.push_str(&format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            row.k, row.d_se_res, row.d_se_coord, row.d_npm_res, row.d_npm_coord
        ));
    }
    io::write_output(out, &output)
}
