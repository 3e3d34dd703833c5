//! Command implementations: parse the typed config, run the experiment,
//! write manifest + CSV/JSON outputs.

use std::path::PathBuf;

use num_rational::BigRational;
use serde::Deserialize;
use serde_json::json;

use chaotic_walks::config::{ProbabilityEntry, SubshiftConfig, SystemConfig, XiConfig};
use chaotic_walks::intermittency::{birkhoff_occupation, episode_segmentation};
use chaotic_walks::poisson::{
    solve_poisson_canonical, solve_poisson_general, srw_xi, PoissonData,
};
use chaotic_walks::scalar::Scalar;
use chaotic_walks::skew::{
    iterate_trajectory, lyapunov_exponents, to_line, validate_class_membership, DEFAULT_WINDOW,
};
use chaotic_walks::stopping::{
    drift_scaling_experiment, estimate_escape_compact, estimate_escape_halfline,
    estimate_stay_probability, EscapeStats, MarkovWalk, StayReport, SurvivalCurve,
};
use chaotic_walks::subshift::{encode_point, sample_path, SubshiftSpec};

use crate::output::{fmt_f64, Csv, RunDir};
use crate::{ArithmeticMode, Failure};

pub struct RunContext {
    pub command: &'static str,
    pub config: serde_json::Value,
    pub seed_override: Option<u64>,
    pub mode: ArithmeticMode,
    pub out_dir: PathBuf,
}

impl RunContext {
    fn parse<'de, T: Deserialize<'de>>(&'de self) -> Result<T, Failure> {
        T::deserialize(&self.config).map_err(|e| Failure::Usage(format!("config: {e}")))
    }

    fn resolve_seed(&self, config_seed: Option<u64>) -> u64 {
        self.seed_override.or(config_seed).unwrap_or(0)
    }

    fn run_dir(&self, seed: u64) -> Result<RunDir, Failure> {
        RunDir::create(&self.out_dir, self.command, &self.config, seed, self.mode.as_str())
    }
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateConfig {
    system: SystemConfig,
    steps: usize,
    x0: f64,
    #[serde(default = "default_window")]
    window: usize,
    #[serde(default)]
    seed: Option<u64>,
}

pub fn simulate(ctx: &RunContext) -> Result<(), Failure> {
    let cfg: SimulateConfig = ctx.parse()?;
    let seed = ctx.resolve_seed(cfg.seed.or(cfg.system.seed));
    let sys = cfg.system.build()?;
    // Class membership gate: refuse to simulate systems outside the class.
    let r0 = sys.r.budget();
    let report = validate_class_membership(&sys, r0.max(1.0), r0, 256);
    if !report.pass {
        return Err(Failure::Run(format!(
            "system fails class validation: {}",
            serde_json::to_string(&report).unwrap()
        )));
    }
    let dir = ctx.run_dir(seed)?;
    let spec = sys.subshift();
    let path = sample_path(&spec, seed, cfg.steps + cfg.window)?;
    let tr = iterate_trajectory(&sys, &path, cfg.x0, cfg.steps, cfg.window)?;
    let mut csv = Csv::new(&["step", "x_interval", "x_line"]);
    for (k, &x) in tr.x_line.iter().enumerate() {
        csv.row(&[
            k.to_string(),
            fmt_f64(chaotic_walks::skew::to_interval(x)),
            fmt_f64(x),
        ]);
    }
    dir.write_text("timeseries.csv", &csv.finish())?;
    if let Some(t) = &tr.truncation {
        eprintln!("warning: trajectory truncated at step {}: {}", t.step, t.reason);
    }
    println!("wrote {}", dir.dir.join("timeseries.csv").display());
    Ok(())
}

// ------------------------------------------------------------------ encode

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EncodeConfig {
    m: u32,
    #[serde(rename = "N")]
    level: u32,
    y: ProbabilityEntry,
    length: usize,
}

pub fn encode(ctx: &RunContext) -> Result<(), Failure> {
    let cfg: EncodeConfig = ctx.parse()?;
    let y = cfg.y.to_rational()?;
    let path = encode_point(&y, cfg.m, cfg.level, cfg.length)?;
    let dir = ctx.run_dir(0)?;
    let line = path.to_line();
    dir.write_text("path.txt", &format!("{line}\n"))?;
    println!("{line}");
    Ok(())
}

// ----------------------------------------------------------------- poisson

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum XiSource {
    Values { values: Vec<f64> },
    Displacement { displacement: XiConfig },
    Srw { srw: bool },
}

impl XiSource {
    fn build_f64(&self, spec: &SubshiftSpec) -> Result<Vec<f64>, Failure> {
        match self {
            XiSource::Values { values } => {
                if values.len() != spec.k() {
                    return Err(Failure::Usage(format!(
                        "xi has {} values, chain has {} symbols",
                        values.len(),
                        spec.k()
                    )));
                }
                Ok(values.clone())
            }
            XiSource::Displacement { displacement } => {
                let (m, level) = spec.canonical_params().ok_or_else(|| {
                    Failure::Usage("displacement discretization needs a canonical chain".into())
                })?;
                let xi = displacement.build()?;
                Ok(chaotic_walks::skew::discretize_displacement(&xi, m, level)?.values)
            }
            XiSource::Srw { srw } => {
                if !srw {
                    return Err(Failure::Usage("srw flag must be true when present".into()));
                }
                let (m, level) = spec.canonical_params().ok_or_else(|| {
                    Failure::Usage("srw steps need a canonical chain".into())
                })?;
                if m != 2 {
                    return Err(Failure::Usage("srw steps are defined for m = 2".into()));
                }
                Ok(srw_xi(level).iter().map(|&v| v as f64).collect())
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoissonConfig {
    chain: SubshiftConfig,
    xi: XiSource,
    #[serde(default)]
    seed: Option<u64>,
}

fn solve_scalar<T: Scalar>(spec: &SubshiftSpec, xi: Vec<T>) -> Result<PoissonData<T>, Failure> {
    if let Some((m, level)) = spec.canonical_params() {
        match solve_poisson_canonical(&xi, m, level) {
            Ok(pd) => return Ok(pd),
            Err(chaotic_walks::Error::Uncentered(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(solve_poisson_general(spec, &xi)?)
}

pub fn poisson(ctx: &RunContext) -> Result<(), Failure> {
    let cfg: PoissonConfig = ctx.parse()?;
    let seed = ctx.resolve_seed(cfg.seed);
    let spec = cfg.chain.build()?;
    let xi = cfg.xi.build_f64(&spec)?;
    let dir = ctx.run_dir(seed)?;

    let (pd, exact_delta): (PoissonData<f64>, Option<Vec<String>>) = match ctx.mode {
        ArithmeticMode::Float => (solve_scalar::<f64>(&spec, xi)?, None),
        ArithmeticMode::Rational => {
            let xi_exact: Vec<BigRational> = xi
                .iter()
                .map(|&v| {
                    BigRational::from_float(v)
                        .ok_or_else(|| Failure::Usage(format!("non-finite xi value {v}")))
                })
                .collect::<Result<_, _>>()?;
            let pd = solve_scalar::<BigRational>(&spec, xi_exact)?;
            let strings = pd.delta.iter().map(|d| d.to_string()).collect();
            (pd.to_f64(), Some(strings))
        }
    };

    let mut csv = Csv::new(&["index", "delta"]);
    for (i, d) in pd.delta.iter().enumerate() {
        csv.row(&[(i + 1).to_string(), fmt_f64(*d)]);
    }
    dir.write_text("delta.csv", &csv.finish())?;

    let mut bounds = json!({
        "k": pd.spec.k(),
        "d": pd.bounds.d,
        "v_minus": pd.bounds.v_minus,
        "v_plus": pd.bounds.v_plus,
        "g": pd.bounds.g,
        "residual_sup": pd.residual_sup,
        "row_centering_sup": pd.row_centering_sup,
        "mode": ctx.mode.as_str(),
    });
    if let Some(c) = pd.condition {
        bounds["condition_pivot_spread"] = json!(c);
    }
    if let Some(exact) = exact_delta {
        bounds["delta_exact"] = json!(exact);
    }
    dir.write_json("bounds.json", &bounds)?;
    println!("wrote {}", dir.dir.join("delta.csv").display());
    Ok(())
}

// ------------------------------------------------------------------ escape

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WalkConfig {
    chain: SubshiftConfig,
    xi: XiSource,
    #[serde(default)]
    alpha: f64,
    /// Walk on ζ-corrected increments (default) or raw ξ steps.
    #[serde(default = "default_true")]
    use_corrector: bool,
    #[serde(default)]
    x0: f64,
}

fn default_true() -> bool {
    true
}

impl WalkConfig {
    fn build(&self) -> Result<MarkovWalk, Failure> {
        let spec = self.chain.build()?;
        let xi = self.xi.build_f64(&spec)?;
        if self.use_corrector {
            let pd = solve_scalar::<f64>(&spec, xi)?;
            Ok(MarkovWalk::from_poisson(&pd, self.alpha, self.x0))
        } else {
            Ok(MarkovWalk::from_xi(spec, &xi, self.alpha, self.x0))
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ExperimentConfig {
    Compact {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        trials: u64,
        horizon: u64,
    },
    Halfline {
        #[serde(rename = "B")]
        b: f64,
        trials: u64,
        horizons: Vec<u64>,
    },
    Stay {
        #[serde(rename = "B")]
        b: f64,
        trials: u64,
        horizon: u64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EscapeConfig {
    walk: WalkConfig,
    experiment: ExperimentConfig,
    #[serde(default)]
    seed: Option<u64>,
}

fn escape_stats_csv(alpha: f64, stats: &EscapeStats) -> String {
    let mut csv = Csv::new(&[
        "alpha",
        "horizon",
        "trials",
        "exits_left",
        "exits_right",
        "censored",
        "p_left",
        "p_left_lo",
        "p_left_hi",
        "mean_time",
        "mean_time_lo",
        "mean_time_hi",
        "mean_time_left",
        "doob_z",
        "censoring_flagged",
        "horizon_warning",
        "guard_warning",
    ]);
    csv.row(&[
        fmt_f64(alpha),
        stats.horizon.to_string(),
        stats.trials.to_string(),
        stats.exits_left.to_string(),
        stats.exits_right.to_string(),
        stats.censored.to_string(),
        fmt_f64(stats.p_left.value),
        fmt_f64(stats.p_left.lo),
        fmt_f64(stats.p_left.hi),
        fmt_f64(stats.mean_time.value),
        fmt_f64(stats.mean_time.lo),
        fmt_f64(stats.mean_time.hi),
        stats.mean_time_left.as_ref().map(|e| fmt_f64(e.value)).unwrap_or_default(),
        fmt_f64(stats.doob_z),
        stats.censoring_flagged.to_string(),
        stats.horizon_warning.to_string(),
        stats.guard_warning.to_string(),
    ]);
    csv.finish()
}

fn survival_csv(alpha: f64, curve: &SurvivalCurve) -> String {
    let mut csv = Csv::new(&[
        "alpha",
        "horizon",
        "trials",
        "escaped_fraction",
        "escaped_lo",
        "escaped_hi",
        "censored_mean",
        "censored_mean_lo",
        "censored_mean_hi",
        "guard_warning",
    ]);
    for p in &curve.points {
        csv.row(&[
            fmt_f64(alpha),
            p.horizon.to_string(),
            curve.trials.to_string(),
            fmt_f64(p.escaped.value),
            fmt_f64(p.escaped.lo),
            fmt_f64(p.escaped.hi),
            p.censored_mean.as_ref().map(|e| fmt_f64(e.value)).unwrap_or_default(),
            p.censored_mean.as_ref().map(|e| fmt_f64(e.lo)).unwrap_or_default(),
            p.censored_mean.as_ref().map(|e| fmt_f64(e.hi)).unwrap_or_default(),
            curve.guard_warning.to_string(),
        ]);
    }
    csv.finish()
}

fn stay_csv(rep: &StayReport, trials: u64) -> String {
    let mut csv = Csv::new(&[
        "alpha",
        "horizon",
        "trials",
        "p_stay",
        "p_stay_lo",
        "p_stay_hi",
        "p_stay_doubled_horizon",
        "horizon_stable",
        "guard_warning",
    ]);
    csv.row(&[
        fmt_f64(rep.alpha),
        rep.horizon.to_string(),
        trials.to_string(),
        fmt_f64(rep.p_stay.value),
        fmt_f64(rep.p_stay.lo),
        fmt_f64(rep.p_stay.hi),
        fmt_f64(rep.p_stay_doubled),
        rep.horizon_stable.to_string(),
        rep.guard_warning.to_string(),
    ]);
    csv.finish()
}

pub fn escape(ctx: &RunContext) -> Result<(), Failure> {
    let cfg: EscapeConfig = ctx.parse()?;
    let seed = ctx.resolve_seed(cfg.seed);
    let walk = cfg.walk.build()?;
    let dir = ctx.run_dir(seed)?;
    let (csv, report) = match &cfg.experiment {
        ExperimentConfig::Compact { a, b, trials, horizon } => {
            let stats = estimate_escape_compact(&walk, *a, *b, *trials, *horizon, seed)?;
            if stats.horizon_warning {
                eprintln!("warning: more than half of the trials were censored");
            }
            (escape_stats_csv(walk.alpha, &stats), serde_json::to_value(&stats).unwrap())
        }
        ExperimentConfig::Halfline { b, trials, horizons } => {
            let curve = estimate_escape_halfline(&walk, *b, *trials, horizons, seed)?;
            (survival_csv(walk.alpha, &curve), serde_json::to_value(&curve).unwrap())
        }
        ExperimentConfig::Stay { b, trials, horizon } => {
            let rep = estimate_stay_probability(&walk, *b, *trials, *horizon, seed)?;
            if !rep.horizon_stable {
                eprintln!("warning: estimate not stable under horizon doubling");
            }
            (stay_csv(&rep, *trials), serde_json::to_value(&rep).unwrap())
        }
    };
    dir.write_text("escape.csv", &csv)?;
    dir.write_json("escape.json", &report)?;
    println!("wrote {}", dir.dir.join("escape.csv").display());
    Ok(())
}

// ----------------------------------------------------------------- scaling

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalConfig {
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalingConfig {
    walk: WalkConfig,
    alpha_list: Vec<f64>,
    interval: IntervalConfig,
    #[serde(default)]
    zero_drift_a_list: Vec<f64>,
    trials: u64,
    horizon: u64,
    #[serde(default)]
    seed: Option<u64>,
}

pub fn scaling(ctx: &RunContext) -> Result<(), Failure> {
    let cfg: ScalingConfig = ctx.parse()?;
    let seed = ctx.resolve_seed(cfg.seed);
    let walk = cfg.walk.build()?;
    let dir = ctx.run_dir(seed)?;
    let table = drift_scaling_experiment(
        &walk,
        &cfg.alpha_list,
        cfg.interval.a,
        cfg.interval.b,
        &cfg.zero_drift_a_list,
        cfg.trials,
        cfg.horizon,
        seed,
    )?;
    let mut csv = Csv::new(&[
        "alpha",
        "a",
        "b",
        "p_left",
        "mean_time_compact",
        "normalized_p_left",
        "expected_time_halfline",
        "alpha_times_e_tb",
        "escaped_fraction",
        "p_left_times_abs_a",
        "cond_mean_left",
        "cond_mean_left_over_a2",
    ]);
    for r in &table.rows {
        csv.row(&[
            fmt_f64(r.alpha),
            fmt_f64(cfg.interval.a),
            fmt_f64(cfg.interval.b),
            fmt_f64(r.p_left),
            fmt_f64(r.mean_time_compact),
            fmt_f64(r.normalized_p_left),
            fmt_f64(r.expected_time_halfline),
            fmt_f64(r.alpha_times_e_tb),
            fmt_f64(r.escaped_fraction),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    for r in &table.zero_rows {
        csv.row(&[
            "0".to_string(),
            fmt_f64(r.a),
            fmt_f64(cfg.interval.b),
            fmt_f64(r.p_left),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            fmt_f64(r.p_left_times_abs_a),
            fmt_f64(r.cond_mean_left),
            fmt_f64(r.cond_mean_left_over_a2),
        ]);
    }
    dir.write_text("scaling.csv", &csv.finish())?;
    dir.write_json("scaling.json", &serde_json::to_value(&table).unwrap())?;
    println!("wrote {}", dir.dir.join("scaling.csv").display());
    Ok(())
}

// ---------------------------------------------------------------- birkhoff

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BirkhoffConfig {
    system: SystemConfig,
    u: (f64, f64),
    x0: f64,
    steps: usize,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default = "default_window")]
    window: usize,
    /// Laminar threshold: episodes use the band [−L, L] with
    /// L = h⁻¹(1 − eps).
    #[serde(default = "default_eps")]
    episode_eps: f64,
    #[serde(default)]
    seed: Option<u64>,
}

fn default_samples() -> usize {
    64
}

fn default_eps() -> f64 {
    0.01
}

pub fn birkhoff(ctx: &RunContext) -> Result<(), Failure> {
    let cfg: BirkhoffConfig = ctx.parse()?;
    let seed = ctx.resolve_seed(cfg.seed.or(cfg.system.seed));
    let sys = cfg.system.build()?;
    let dir = ctx.run_dir(seed)?;
    let rep = birkhoff_occupation(&sys, cfg.u, cfg.x0, cfg.steps, cfg.samples, seed, cfg.window)?;
    let mut csv = Csv::new(&["n", "fraction_median", "fraction_q25", "fraction_q75"]);
    for (i, &n) in rep.checkpoints.iter().enumerate() {
        csv.row(&[
            n.to_string(),
            fmt_f64(rep.median[i]),
            fmt_f64(rep.q25[i]),
            fmt_f64(rep.q75[i]),
        ]);
    }
    dir.write_text("occupation.csv", &csv.finish())?;

    // Episode histogram pooled over a few representative trajectories.
    let l = to_line(1.0 - cfg.episode_eps);
    let spec = sys.subshift();
    let mut histogram: std::collections::BTreeMap<(String, usize), u64> = Default::default();
    for s in 0..cfg.samples.min(4) as u64 {
        let path_seed = chaotic_walks::seed::derive_seed(seed, s);
        let path = sample_path(&spec, path_seed, cfg.steps + cfg.window)?;
        let tr = iterate_trajectory(&sys, &path, cfg.x0, cfg.steps, cfg.window)?;
        let trace = episode_segmentation(&tr.x_line, l);
        for (kind, length, count) in trace.histogram() {
            let key = (format!("{kind:?}"), length);
            *histogram.entry(key).or_default() += count;
        }
    }
    let mut csv = Csv::new(&["length", "count", "kind"]);
    for ((kind, length), count) in &histogram {
        csv.row(&[length.to_string(), count.to_string(), kind.clone()]);
    }
    dir.write_text("episodes.csv", &csv.finish())?;
    println!("wrote {}", dir.dir.join("occupation.csv").display());
    Ok(())
}

// ---------------------------------------------------------------- validate

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValidateConfig {
    system: SystemConfig,
    #[serde(default = "default_c")]
    c: f64,
    #[serde(default)]
    r0: Option<f64>,
    #[serde(default = "default_grid")]
    grid: usize,
}

fn default_c() -> f64 {
    1.0
}

fn default_grid() -> usize {
    512
}

pub fn validate(ctx: &RunContext) -> Result<(), Failure> {
    let cfg: ValidateConfig = ctx.parse()?;
    let sys = cfg.system.build()?;
    let r0 = cfg.r0.unwrap_or_else(|| sys.r.budget());
    let report = validate_class_membership(&sys, cfg.c, r0, cfg.grid);
    let lyap = lyapunov_exponents(&sys, 1 << 16)?;
    let dir = ctx.run_dir(0)?;
    let value = json!({
        "class": serde_json::to_value(&report).unwrap(),
        "lyapunov": {
            "l0": lyap.l0,
            "l1": lyap.l1,
            "err0": lyap.err0,
            "err1": lyap.err1,
            "nodes": lyap.nodes,
        },
        "pass": report.pass,
    });
    dir.write_json("report.json", &value)?;
    println!("{}", serde_json::to_string_pretty(&value).unwrap());
    if !report.pass {
        return Err(Failure::Run("class membership validation failed".into()));
    }
    Ok(())
}
