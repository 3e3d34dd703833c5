//! Monte Carlo estimation of escape times and escape probabilities for the
//! corrected Markov random walks `v_{n+1} = v_n + ζ(ω_{n-1}, ω_n) + α`,
//! exact gambler's-ruin oracles on the product (position × symbol) state
//! space, exponential tilt rates, drift-scaling sweeps and recurrence
//! witness search.
//!
//! Trials are independent with per-trial seeds derived from (master seed,
//! trial index). Parallel execution splits trials into a fixed number of
//! blocks reduced in block order, so results are bitwise independent of the
//! worker count. Censored trials are always reported, never dropped:
//! divergence claims are expressed as censored-mean growth across a horizon
//! ladder.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::Error;
use crate::poisson::{BoundQuadruple, PoissonData};
use crate::seed;
use crate::stats::{self, Estimate, KahanSum};
use crate::subshift::{PathSampler, StartDistribution, SubshiftSpec, Symbol};
use crate::Result;

/// Fixed reduction granularity for parallel Monte Carlo.
const MC_BLOCKS: u64 = 64;

/// A Markov random walk with per-transition increments ζ(prev, next) + α.
#[derive(Debug, Clone)]
pub struct MarkovWalk {
    pub spec: SubshiftSpec,
    zeta_rows: Vec<Vec<(Symbol, f64)>>,
    pub alpha: f64,
    pub x0: f64,
    pub start: StartDistribution,
    pub bounds: Option<BoundQuadruple>,
}

impl MarkovWalk {
    /// Walk on the corrected increments of a solved Poisson system.
    pub fn from_poisson(pd: &PoissonData<f64>, alpha: f64, x0: f64) -> Self {
        Self {
            spec: pd.spec.clone(),
            zeta_rows: pd.zeta.rows().to_vec(),
            alpha,
            x0,
            start: StartDistribution::Stationary,
            bounds: Some(pd.bounds),
        }
    }

    /// Walk on raw displacements: increments ξ(next) + α (Δ ≡ 0).
    pub fn from_xi(spec: SubshiftSpec, xi: &[f64], alpha: f64, x0: f64) -> Self {
        let pd = PoissonData::from_parts(spec, xi.to_vec(), vec![0.0; xi.len()]);
        Self {
            spec: pd.spec.clone(),
            zeta_rows: pd.zeta.rows().to_vec(),
            alpha,
            x0,
            start: StartDistribution::Stationary,
            bounds: Some(pd.bounds),
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_x0(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_start(mut self, start: StartDistribution) -> Self {
        self.start = start;
        self
    }

    /// The increment table rows (successor, ζ).
    pub fn zeta_rows(&self) -> &[Vec<(Symbol, f64)>] {
        &self.zeta_rows
    }

    #[inline]
    fn increment(&self, prev: Symbol, next: Symbol) -> f64 {
        let row = &self.zeta_rows[prev as usize - 1];
        for &(j, z) in row {
            if j == next {
                return z + self.alpha;
            }
        }
        debug_assert!(false, "sampled pair must be admissible");
        self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Exit {
    Left,
    Right,
    Censored,
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    exit: Exit,
    steps: u64,
    v_final: f64,
}

fn simulate_trial(
    walk: &MarkovWalk,
    a: f64,
    b: f64,
    horizon: u64,
    trial_index: u64,
    master_seed: u64,
) -> Trial {
    let rng = seed::rng_for(master_seed, trial_index);
    let mut sampler = PathSampler::new(&walk.spec, rng, walk.start);
    let mut prev = sampler.next().unwrap();
    let mut v = walk.x0;
    for n in 1..=horizon {
        let next = sampler.next().unwrap();
        v += walk.increment(prev, next);
        prev = next;
        if v <= a {
            return Trial { exit: Exit::Left, steps: n, v_final: v };
        }
        if v >= b {
            return Trial { exit: Exit::Right, steps: n, v_final: v };
        }
    }
    Trial { exit: Exit::Censored, steps: horizon, v_final: v }
}

fn blocked<S: Send>(
    trials: u64,
    run: impl Fn(std::ops::Range<u64>) -> S + Sync + Send,
) -> Vec<S> {
    let ranges: Vec<std::ops::Range<u64>> = (0..MC_BLOCKS)
        .map(|blk| (trials * blk / MC_BLOCKS)..(trials * (blk + 1) / MC_BLOCKS))
        .collect();
    ranges.into_par_iter().map(run).collect()
}

/// Escape statistics for an interval experiment, with censoring reported
/// and an optional-stopping (Doob) consistency z-score.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EscapeStats {
    pub trials: u64,
    pub horizon: u64,
    pub exits_left: u64,
    pub exits_right: u64,
    pub censored: u64,
    /// P(exit left | exit), Wilson 95% CI.
    pub p_left: Estimate,
    /// Mean escape time among exited trials, normal CI.
    pub mean_time: Estimate,
    /// Mean escape time among left exits.
    pub mean_time_left: Option<Estimate>,
    /// Some trials hit the horizon.
    pub censoring_flagged: bool,
    /// More than half of the trials were censored; bounds unreliable.
    pub horizon_warning: bool,
    /// Interval is small against the corrector oscillation (|A| ≤ G or B ≤ G).
    pub guard_warning: bool,
    /// z-score of E[v_T − v_0 − αT] = 0 over all trials (stopped at T ∧ h).
    pub doob_z: f64,
}

#[derive(Default, Clone, Copy)]
struct CompactBlock {
    left: u64,
    right: u64,
    censored: u64,
    t_sum: f64,
    t_sumsq: f64,
    t_left_sum: f64,
    t_left_sumsq: f64,
    doob_sum: f64,
    doob_sumsq: f64,
}

/// Monte Carlo escape from the interval: a trial ends when the walk
/// leaves the open interval (A, B), so the boundaries act as absorbing
/// barriers (the convention matching the classical gambler's ruin; for
/// continuous-valued increments the distinction from [A, B] is null).
pub fn estimate_escape_compact(
    walk: &MarkovWalk,
    a: f64,
    b: f64,
    trials: u64,
    horizon: u64,
    master_seed: u64,
) -> Result<EscapeStats> {
    if !(a < walk.x0 && walk.x0 < b) {
        return Err(Error::Domain(format!(
            "need A < x0 < B, got A = {a}, x0 = {}, B = {b}",
            walk.x0
        )));
    }
    if horizon == 0 || trials == 0 {
        return Err(Error::Domain("trials and horizon must be positive".into()));
    }
    let blocks = blocked(trials, |range| {
        let mut acc = CompactBlock::default();
        for idx in range {
            let t = simulate_trial(walk, a, b, horizon, idx, master_seed);
            let steps = t.steps as f64;
            match t.exit {
                Exit::Left => {
                    acc.left += 1;
                    acc.t_sum += steps;
                    acc.t_sumsq += steps * steps;
                    acc.t_left_sum += steps;
                    acc.t_left_sumsq += steps * steps;
                }
                Exit::Right => {
                    acc.right += 1;
                    acc.t_sum += steps;
                    acc.t_sumsq += steps * steps;
                }
                Exit::Censored => acc.censored += 1,
            }
            let d = t.v_final - walk.x0 - walk.alpha * steps;
            acc.doob_sum += d;
            acc.doob_sumsq += d * d;
        }
        acc
    });

    let mut left = 0u64;
    let mut right = 0u64;
    let mut censored = 0u64;
    let mut t_sum = KahanSum::new();
    let mut t_sumsq = KahanSum::new();
    let mut tl_sum = KahanSum::new();
    let mut tl_sumsq = KahanSum::new();
    let mut doob_sum = KahanSum::new();
    let mut doob_sumsq = KahanSum::new();
    for blk in &blocks {
        left += blk.left;
        right += blk.right;
        censored += blk.censored;
        t_sum.add(blk.t_sum);
        t_sumsq.add(blk.t_sumsq);
        tl_sum.add(blk.t_left_sum);
        tl_sumsq.add(blk.t_left_sumsq);
        doob_sum.add(blk.doob_sum);
        doob_sumsq.add(blk.doob_sumsq);
    }
    let exited = left + right;
    let doob_se = stats::std_error(trials, doob_sum.value(), doob_sumsq.value());
    let doob_mean = doob_sum.value() / trials as f64;
    let guard_warning = walk
        .bounds
        .map(|bd| a.abs() <= bd.g || b.abs() <= bd.g)
        .unwrap_or(false);
    Ok(EscapeStats {
        trials,
        horizon,
        exits_left: left,
        exits_right: right,
        censored,
        p_left: stats::wilson(left, exited),
        mean_time: stats::mean_ci(exited, t_sum.value(), t_sumsq.value()),
        mean_time_left: (left > 0)
            .then(|| stats::mean_ci(left, tl_sum.value(), tl_sumsq.value())),
        censoring_flagged: censored > 0,
        horizon_warning: censored * 2 > trials,
        guard_warning,
        doob_z: if doob_se > 0.0 { doob_mean / doob_se } else { 0.0 },
    })
}

/// One horizon rung of a half-line escape experiment.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SurvivalPoint {
    pub horizon: u64,
    /// Fraction of trials escaped by this horizon (Wilson CI).
    pub escaped: Estimate,
    /// Mean escape time among the escapees, when any.
    pub censored_mean: Option<Estimate>,
}

/// Escape-by-horizon curve for T_B on (−∞, B].
#[derive(Debug, Clone, serde::Serialize)]
pub struct SurvivalCurve {
    pub trials: u64,
    pub points: Vec<SurvivalPoint>,
    pub guard_warning: bool,
}

/// Half-line escape experiment across an increasing horizon ladder.
pub fn estimate_escape_halfline(
    walk: &MarkovWalk,
    b: f64,
    trials: u64,
    horizons: &[u64],
    master_seed: u64,
) -> Result<SurvivalCurve> {
    if walk.x0 > b {
        return Err(Error::Domain(format!("need x0 ≤ B, got x0 = {}, B = {b}", walk.x0)));
    }
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("horizons must be strictly increasing".into()));
    }
    let max_h = *horizons.last().unwrap();
    let nh = horizons.len();
    let blocks = blocked(trials, |range| {
        let mut counts = vec![0u64; nh];
        let mut sums = vec![0.0f64; nh];
        let mut sumsqs = vec![0.0f64; nh];
        for idx in range {
            let t = simulate_trial(walk, f64::NEG_INFINITY, b, max_h, idx, master_seed);
            if t.exit == Exit::Right {
                for (hi, &h) in horizons.iter().enumerate() {
                    if t.steps <= h {
                        counts[hi] += 1;
                        sums[hi] += t.steps as f64;
                        sumsqs[hi] += (t.steps as f64) * (t.steps as f64);
                    }
                }
            }
        }
        (counts, sums, sumsqs)
    });
    let mut points = Vec::with_capacity(nh);
    for hi in 0..nh {
        let mut count = 0u64;
        let mut sum = KahanSum::new();
        let mut sumsq = KahanSum::new();
        for (c, s, s2) in &blocks {
            count += c[hi];
            sum.add(s[hi]);
            sumsq.add(s2[hi]);
        }
        points.push(SurvivalPoint {
            horizon: horizons[hi],
            escaped: stats::wilson(count, trials),
            censored_mean: (count > 0)
                .then(|| stats::mean_ci(count, sum.value(), sumsq.value())),
        });
    }
    let guard_warning = walk.bounds.map(|bd| b.abs() <= bd.g).unwrap_or(false);
    Ok(SurvivalCurve { trials, points, guard_warning })
}

/// Stay-probability estimate for negative drift.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StayReport {
    pub alpha: f64,
    pub horizon: u64,
    /// P(walk never exceeds B up to the horizon), Wilson CI. A finite
    /// horizon overestimates the true stay probability.
    pub p_stay: Estimate,
    /// Same estimate at twice the horizon (coupled trials).
    pub p_stay_doubled: f64,
    /// Doubling the horizon moved the estimate by less than the CI width.
    pub horizon_stable: bool,
    pub guard_warning: bool,
}

/// P(v_n < B for all n ≤ horizon) for a negative-drift walk, with an
/// automatic horizon-doubling stability check on coupled trials.
pub fn estimate_stay_probability(
    walk: &MarkovWalk,
    b: f64,
    trials: u64,
    horizon: u64,
    master_seed: u64,
) -> Result<StayReport> {
    if walk.alpha >= 0.0 {
        return Err(Error::Domain(format!(
            "stay probability needs negative drift, got alpha = {}",
            walk.alpha
        )));
    }
    let blocks = blocked(trials, |range| {
        let mut stayed_h = 0u64;
        let mut stayed_2h = 0u64;
        for idx in range {
            let t = simulate_trial(walk, f64::NEG_INFINITY, b, 2 * horizon, idx, master_seed);
            let escaped_by = |h: u64| t.exit == Exit::Right && t.steps <= h;
            if !escaped_by(horizon) {
                stayed_h += 1;
            }
            if !escaped_by(2 * horizon) {
                stayed_2h += 1;
            }
        }
        (stayed_h, stayed_2h)
    });
    let stayed_h: u64 = blocks.iter().map(|b| b.0).sum();
    let stayed_2h: u64 = blocks.iter().map(|b| b.1).sum();
    let p_stay = stats::wilson(stayed_h, trials);
    let p2 = stayed_2h as f64 / trials as f64;
    let stable = (p_stay.value - p2).abs() < (p_stay.hi - p_stay.lo).max(1e-12);
    let guard_warning = walk.bounds.map(|bd| b.abs() <= bd.g).unwrap_or(false);
    Ok(StayReport {
        alpha: walk.alpha,
        horizon,
        p_stay,
        p_stay_doubled: p2,
        horizon_stable: stable,
        guard_warning,
    })
}

/// Exact solution of the absorption problem on the product state space
/// (lattice position × symbol).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RuinSolution {
    pub p_left: f64,
    pub expected_time: f64,
    pub expected_time_left: f64,
    pub states: usize,
}

const RUIN_STATE_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    State(usize),
    AbsorbLeft,
    AbsorbRight,
}

struct RuinSystem {
    /// Per state: (probability, target) transitions.
    transitions: Vec<Vec<(f64, Target)>>,
    /// Initial distribution (weight, state).
    start: Vec<(f64, usize)>,
}

/// Gambler's-ruin oracle for integer-valued ζ increments and rational
/// drift α: solves the absorption system on the product state space by
/// Gauss-Seidel to 1e-12, returning the left-exit probability, the expected
/// absorption time and the conditional time given a left exit.
pub fn gambler_ruin_oracle(
    spec: &SubshiftSpec,
    zeta_rows: &[Vec<(Symbol, f64)>],
    alpha: &BigRational,
    a: i64,
    b: i64,
    x0: i64,
) -> Result<RuinSolution> {
    let sys = build_ruin_system(spec, zeta_rows, alpha, a, b, x0)?;
    let q = gauss_seidel(&sys, GsProblem::LeftProbability, None)?;
    let t = gauss_seidel(&sys, GsProblem::ExpectedTime, None)?;
    let tl = gauss_seidel(&sys, GsProblem::TimeGivenLeft, Some(&q))?;
    let mut p_left = 0.0;
    let mut e_t = 0.0;
    let mut e_tl = 0.0;
    for &(w, s) in &sys.start {
        p_left += w * q[s];
        e_t += w * t[s];
        e_tl += w * tl[s];
    }
    Ok(RuinSolution {
        p_left,
        expected_time: e_t,
        expected_time_left: if p_left > 0.0 { e_tl / p_left } else { f64::NAN },
        states: sys.transitions.len(),
    })
}

fn build_ruin_system(
    spec: &SubshiftSpec,
    zeta_rows: &[Vec<(Symbol, f64)>],
    alpha: &BigRational,
    a: i64,
    b: i64,
    x0: i64,
) -> Result<RuinSystem> {
    if !(a < x0 && x0 < b) {
        return Err(Error::Domain(format!("need A < x0 < B, got ({a}, {x0}, {b})")));
    }
    let k = spec.k();
    let den = alpha
        .denom()
        .to_i64()
        .filter(|&d| d > 0 && d <= 10_000)
        .ok_or_else(|| Error::Unsupported("drift denominator too large for the lattice".into()))?;
    let num = alpha
        .numer()
        .to_i64()
        .ok_or_else(|| Error::Unsupported("drift numerator too large".into()))?;
    let mut zeta_int = vec![Vec::with_capacity(4); k];
    for (i, row) in zeta_rows.iter().enumerate() {
        for &(j, z) in row {
            if (z - z.round()).abs() > 1e-12 {
                return Err(Error::Unsupported(format!(
                    "non-integer increment ζ({}, {j}) = {z}",
                    i + 1
                )));
            }
            zeta_int[i].push((j, z.round() as i64));
        }
    }
    // Scaled lattice: positions u = v·den, steps z·den + num. The
    // boundaries are absorbing, so interior states are (a·den, b·den).
    let lo = a * den + 1;
    let hi = b * den - 1;
    if hi < lo {
        return Err(Error::Domain("interval has no interior lattice points".into()));
    }
    let width = (hi - lo + 1) as usize;
    let states = width * k;
    if states > RUIN_STATE_CAP {
        return Err(Error::Size(format!(
            "ruin state space has {states} states, cap is {RUIN_STATE_CAP}"
        )));
    }
    let index = |u: i64, sym: Symbol| -> usize { (u - lo) as usize * k + (sym as usize - 1) };
    let mut transitions = vec![Vec::new(); states];
    for u in lo..=hi {
        for i in 1..=k as Symbol {
            let mut entry = Vec::with_capacity(zeta_int[i as usize - 1].len());
            for &(j, z) in &zeta_int[i as usize - 1] {
                let p = spec.transition_prob_f64(i, j);
                let v = u + z * den + num;
                let target = if v < lo {
                    Target::AbsorbLeft
                } else if v > hi {
                    Target::AbsorbRight
                } else {
                    Target::State(index(v, j))
                };
                entry.push((p, target));
            }
            transitions[index(u, i)] = entry;
        }
    }
    // ω₀ from the stationary distribution, all mass at position x0.
    let u0 = x0 * den;
    let start = spec
        .stationary_f64()
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(s, &w)| (w, index(u0, (s + 1) as Symbol)))
        .collect();
    Ok(RuinSystem { transitions, start })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GsProblem {
    /// q = P q + 1{left}: left-absorption probability.
    LeftProbability,
    /// t = P t + 1: expected absorption time.
    ExpectedTime,
    /// tl = P tl + q: expectation of T·1{left} (needs q as source).
    TimeGivenLeft,
}

fn gauss_seidel(sys: &RuinSystem, problem: GsProblem, q: Option<&[f64]>) -> Result<Vec<f64>> {
    let n = sys.transitions.len();
    let mut x = vec![0.0f64; n];
    let max_sweeps = 500_000usize;
    let tol = match problem {
        GsProblem::LeftProbability => 1e-14,
        _ => 1e-12,
    };
    for _ in 0..max_sweeps {
        let mut delta = 0.0f64;
        for s in 0..n {
            let mut acc = match problem {
                GsProblem::LeftProbability => 0.0,
                GsProblem::ExpectedTime => 1.0,
                GsProblem::TimeGivenLeft => q.unwrap()[s],
            };
            for &(p, t) in &sys.transitions[s] {
                match t {
                    Target::State(ns) => acc += p * x[ns],
                    Target::AbsorbLeft => {
                        if problem == GsProblem::LeftProbability {
                            acc += p;
                        }
                    }
                    Target::AbsorbRight => {}
                }
            }
            delta = delta.max((acc - x[s]).abs());
            x[s] = acc;
        }
        if delta < tol {
            return Ok(x);
        }
    }
    Err(Error::Convergence(format!(
        "Gauss-Seidel ({problem:?}) did not reach tolerance {tol:e} in {max_sweeps} sweeps"
    )))
}

/// Exact-rational gambler's-ruin solve (p_left, E[T]) for small state
/// spaces; the dense elimination is exact when probabilities, increments
/// and drift are rational.
pub fn gambler_ruin_oracle_exact(
    spec: &SubshiftSpec,
    zeta_rows: &[Vec<(Symbol, f64)>],
    alpha: &BigRational,
    a: i64,
    b: i64,
    x0: i64,
) -> Result<(BigRational, BigRational)> {
    let sys = build_ruin_system(spec, zeta_rows, alpha, a, b, x0)?;
    let n = sys.transitions.len();
    if n > 600 {
        return Err(Error::Size(format!("{n} states is too large for the exact dense solve")));
    }
    let mut mat = vec![vec![BigRational::zero(); n]; n];
    let mut rhs_q = vec![BigRational::zero(); n];
    let rhs_t = vec![BigRational::from_integer(1.into()); n];
    for s in 0..n {
        mat[s][s] = BigRational::from_integer(1.into());
        for &(p, t) in &sys.transitions[s] {
            let pr = BigRational::from_float(p).unwrap();
            match t {
                Target::State(ns) => mat[s][ns] -= pr,
                Target::AbsorbLeft => rhs_q[s] += pr,
                Target::AbsorbRight => {}
            }
        }
    }
    let (q, _) = crate::linalg::solve_dense(mat.clone(), rhs_q)?;
    let (t, _) = crate::linalg::solve_dense(mat, rhs_t)?;
    let mut p_left = BigRational::zero();
    let mut e_t = BigRational::zero();
    for &(w, s) in &sys.start {
        let wr = BigRational::from_float(w).unwrap();
        p_left += wr.clone() * q[s].clone();
        e_t += wr * t[s].clone();
    }
    Ok((p_left, e_t))
}

/// Exponential tilt rates with their certificates.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TiltRates {
    /// Most negative r with min-row MGF equal to one (submartingale edge).
    pub r_minus: f64,
    /// Most negative r with max-row MGF equal to one (supermartingale edge).
    pub r_plus: f64,
    /// Row MGF values at r_minus (all ≥ 1 up to bisection tolerance).
    pub certificate_minus: Vec<f64>,
    /// Row MGF values at r_plus (all ≤ 1 up to bisection tolerance).
    pub certificate_plus: Vec<f64>,
    /// r_minus / (−2α/V⁻): reported, not asserted.
    pub theory_ratio_minus: f64,
    /// r_plus / (−2α/V⁺).
    pub theory_ratio_plus: f64,
}

/// Find r ≤ 0 making e^{r v_n} a sub-/supermartingale for drift α ≥ 0, by
/// bisection of the min/max row moment generating functions on [−10/D, 0].
pub fn exponential_tilt_rates(pd: &PoissonData<f64>, alpha: f64) -> Result<TiltRates> {
    let bounds = pd.bounds;
    // Treat rows whose conditional variance is pure rounding noise as
    // deterministic.
    if bounds.v_minus <= (1e-14 * bounds.d.max(1e-300)).powi(2) {
        return Err(Error::Validation(
            "V⁻ = 0: a row has a deterministic transition, tilt rates are undefined".into(),
        ));
    }
    if alpha < 0.0 {
        return Err(Error::Domain("tilt rates are computed for drift α ≥ 0".into()));
    }
    let guard = bounds.v_minus / (2.0 * bounds.d);
    if alpha >= guard {
        return Err(Error::Domain(format!(
            "alpha = {alpha} outside the Taylor-regime guard |α| < V⁻/(2D) = {guard}"
        )));
    }
    if alpha == 0.0 {
        let cert = row_mgfs(pd, 0.0, 0.0);
        return Ok(TiltRates {
            r_minus: 0.0,
            r_plus: 0.0,
            certificate_minus: cert.clone(),
            certificate_plus: cert,
            theory_ratio_minus: 1.0,
            theory_ratio_plus: 1.0,
        });
    }

    let bracket_lo = -10.0 / bounds.d;
    let r_minus = bisect_root(
        |r| row_mgfs(pd, r, alpha).iter().copied().fold(f64::INFINITY, f64::min) - 1.0,
        bracket_lo,
    )?;
    let r_plus = bisect_root(
        |r| row_mgfs(pd, r, alpha).iter().copied().fold(f64::NEG_INFINITY, f64::max) - 1.0,
        bracket_lo,
    )?;
    Ok(TiltRates {
        r_minus,
        r_plus,
        certificate_minus: row_mgfs(pd, r_minus, alpha),
        certificate_plus: row_mgfs(pd, r_plus, alpha),
        theory_ratio_minus: r_minus / (-2.0 * alpha / bounds.v_minus),
        theory_ratio_plus: r_plus / (-2.0 * alpha / bounds.v_plus),
    })
}

fn row_mgfs(pd: &PoissonData<f64>, r: f64, alpha: f64) -> Vec<f64> {
    pd.zeta
        .rows()
        .iter()
        .enumerate()
        .map(|(i0, row)| {
            let i = (i0 + 1) as Symbol;
            row.iter()
                .map(|&(j, z)| pd.spec.transition_prob_f64(i, j) * (r * (z + alpha)).exp())
                .sum()
        })
        .collect()
}

/// Most negative root of `f` in [lo, 0): requires f(lo) > 0 > f near 0⁻.
fn bisect_root(f: impl Fn(f64) -> f64, lo0: f64) -> Result<f64> {
    let mut lo = lo0;
    let mut hi = -f64::EPSILON;
    if f(lo) <= 0.0 {
        return Err(Error::Convergence(format!(
            "bisection bracket [{lo0}, 0] does not enclose the tilt root"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-10 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One positive-drift row of a drift-scaling sweep.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DriftRow {
    pub alpha: f64,
    pub p_left: f64,
    pub mean_time_compact: f64,
    /// p_A · e^{−(2/V⁺)αA} / α.
    pub normalized_p_left: f64,
    pub expected_time_halfline: f64,
    pub alpha_times_e_tb: f64,
    pub escaped_fraction: f64,
}

/// One zero-drift row over the interval ladder.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ZeroDriftRow {
    pub a: f64,
    pub p_left: f64,
    pub p_left_times_abs_a: f64,
    pub cond_mean_left: f64,
    pub cond_mean_left_over_a2: f64,
}

/// Drift-scaling sweep results with the max/min spread of the normalized
/// columns.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DriftScalingTable {
    pub rows: Vec<DriftRow>,
    pub zero_rows: Vec<ZeroDriftRow>,
    /// max/min of α·E[T_B] across the α-list.
    pub ratio_alpha_etb: f64,
    /// max/min of p_A·|A| across the zero-drift ladder.
    pub ratio_pa_abs_a: f64,
}

/// Sweep positive drifts over [A, B] escape and half-line escape, plus a
/// zero-drift interval ladder; reports the scaling ratios the stopping-time
/// bounds predict to be O(1).
#[allow(clippy::too_many_arguments)]
pub fn drift_scaling_experiment(
    walk: &MarkovWalk,
    alphas: &[f64],
    a: f64,
    b: f64,
    zero_drift_as: &[f64],
    trials: u64,
    horizon: u64,
    master_seed: u64,
) -> Result<DriftScalingTable> {
    if alphas.iter().any(|&al| al <= 0.0) {
        return Err(Error::Domain("alpha list must be positive".into()));
    }
    let v_plus = walk.bounds.map(|bd| bd.v_plus).unwrap_or(f64::NAN);
    let mut rows = Vec::with_capacity(alphas.len());
    for (t, &alpha) in alphas.iter().enumerate() {
        let w = walk.clone().with_alpha(alpha);
        let compact = estimate_escape_compact(
            &w,
            a,
            b,
            trials,
            horizon,
            seed::derive_seed(master_seed, 1000 + t as u64),
        )?;
        let half = estimate_escape_halfline(
            &w,
            b,
            trials,
            &[horizon],
            seed::derive_seed(master_seed, 2000 + t as u64),
        )?;
        let point = &half.points[0];
        let e_tb = point.censored_mean.as_ref().map(|e| e.value).unwrap_or(f64::NAN);
        let p_a = compact.p_left.value;
        rows.push(DriftRow {
            alpha,
            p_left: p_a,
            mean_time_compact: compact.mean_time.value,
            normalized_p_left: p_a * (-(2.0 / v_plus) * alpha * a).exp() / alpha,
            expected_time_halfline: e_tb,
            alpha_times_e_tb: alpha * e_tb,
            escaped_fraction: point.escaped.value,
        });
    }
    let mut zero_rows = Vec::with_capacity(zero_drift_as.len());
    for (t, &a0) in zero_drift_as.iter().enumerate() {
        let w = walk.clone().with_alpha(0.0);
        let compact = estimate_escape_compact(
            &w,
            a0,
            b,
            trials,
            horizon,
            seed::derive_seed(master_seed, 3000 + t as u64),
        )?;
        let p_a = compact.p_left.value;
        let cond = compact.mean_time_left.as_ref().map(|e| e.value).unwrap_or(f64::NAN);
        zero_rows.push(ZeroDriftRow {
            a: a0,
            p_left: p_a,
            p_left_times_abs_a: p_a * a0.abs(),
            cond_mean_left: cond,
            cond_mean_left_over_a2: cond / (a0 * a0),
        });
    }
    let ratio = |vals: Vec<f64>| -> f64 {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi / lo
    };
    Ok(DriftScalingTable {
        ratio_alpha_etb: ratio(rows.iter().map(|r| r.alpha_times_e_tb).collect()),
        ratio_pa_abs_a: ratio(zero_rows.iter().map(|r| r.p_left_times_abs_a).collect()),
        rows,
        zero_rows,
    })
}

/// A finite admissible word with its cumulative displacement.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Witness {
    pub word: Vec<Symbol>,
    pub displacement: f64,
    pub length: usize,
}

/// Result of the recurrence-property search in both directions.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WitnessReport {
    pub target: f64,
    /// Shortest word with cumulative displacement > target.
    pub positive: Option<Witness>,
    /// Shortest word with cumulative displacement < −target.
    pub negative: Option<Witness>,
    /// Self-admissible cell with a positive step and its repetition length.
    pub fixed_cell_positive: Option<(Symbol, usize)>,
    pub fixed_cell_negative: Option<(Symbol, usize)>,
}

/// Level-synchronous search (dynamic programming over word length, a
/// breadth-first sweep) for admissible words whose cumulative displacement
/// exceeds ±L, with the fixed-point-cell repetition shortcut for
/// sign-definite cells. Failure after `max_len` is a result, not an error.
pub fn recurrence_witness_search(
    spec: &SubshiftSpec,
    xi: &[f64],
    l: f64,
    max_len: usize,
) -> Result<WitnessReport> {
    if l <= 0.0 {
        return Err(Error::Domain("target L must be positive".into()));
    }
    if xi.len() != spec.k() {
        return Err(Error::Size("xi length mismatch".into()));
    }
    let fixed = |sign: f64| -> Option<(Symbol, usize)> {
        (1..=spec.k() as Symbol)
            .filter(|&i| spec.is_admissible(i, i) && sign * xi[i as usize - 1] > 0.0)
            .map(|i| {
                let step = xi[i as usize - 1].abs();
                (i, (l / step).floor() as usize + 1)
            })
            .min_by_key(|&(_, len)| len)
    };
    let positive = dp_search(spec, xi, l, max_len)?;
    let neg_xi: Vec<f64> = xi.iter().map(|v| -v).collect();
    let negative = dp_search(spec, &neg_xi, l, max_len)?
        .map(|w| Witness { displacement: -w.displacement, ..w });
    Ok(WitnessReport {
        target: l,
        positive,
        negative,
        fixed_cell_positive: fixed(1.0),
        fixed_cell_negative: fixed(-1.0),
    })
}

fn dp_search(
    spec: &SubshiftSpec,
    xi: &[f64],
    l: f64,
    max_len: usize,
) -> Result<Option<Witness>> {
    let k = spec.k();
    if k.checked_mul(max_len).map(|v| v > 200_000_000).unwrap_or(true) {
        return Err(Error::Size("K × max_len too large for the witness search".into()));
    }
    // best[i]: max cumulative sum over words of the current length ending
    // at cell i+1; parents[t] records predecessors for reconstruction.
    let mut best: Vec<f64> = xi.to_vec();
    let mut parents: Vec<Vec<u32>> = vec![vec![u32::MAX; k]];
    for t in 1..=max_len {
        let hit = (0..k)
            .filter(|&i| best[i] > l)
            .max_by(|&x, &y| best[x].partial_cmp(&best[y]).unwrap());
        if let Some(i0) = hit {
            return Ok(Some(reconstruct(&parents, best[i0], i0, t - 1)));
        }
        if t == max_len {
            break;
        }
        let mut next = vec![f64::NEG_INFINITY; k];
        let mut parent = vec![u32::MAX; k];
        for i in 0..k {
            if best[i] == f64::NEG_INFINITY {
                continue;
            }
            for (j, _) in spec.successors((i + 1) as Symbol) {
                let jj = j as usize - 1;
                let cand = best[i] + xi[jj];
                if cand > next[jj] {
                    next[jj] = cand;
                    parent[jj] = i as u32;
                }
            }
        }
        parents.push(parent);
        best = next;
    }
    Ok(None)
}

fn reconstruct(parents: &[Vec<u32>], displacement: f64, end: usize, depth: usize) -> Witness {
    let mut word = vec![0 as Symbol; depth + 1];
    let mut cell = end;
    for t in (0..=depth).rev() {
        word[t] = (cell + 1) as Symbol;
        if t > 0 {
            cell = parents[t][cell] as usize;
        }
    }
    Witness { displacement, length: word.len(), word }
}
