//! Observable intermittency statistics on simulated trajectories: Birkhoff
//! occupation fractions of a compact interval, laminar/burst episode
//! segmentation, and escape-time censuses. Everything runs in the line
//! chart so that deep laminar excursions stay representable; limits are
//! replaced by trends across logarithmic checkpoints.

use rayon::prelude::*;

use crate::error::Error;
use crate::seed;
use crate::skew::{to_line, SkewSystem};
use crate::stats::{self, KahanSum};
use crate::stopping::{SurvivalCurve, SurvivalPoint};
use crate::subshift::{word_digits, PathSampler, StartDistribution, Symbol};
use crate::Result;

/// Occupation fractions of U, of the laminar region at 0 and of the
/// laminar region at 1, per sample and per checkpoint, with medians.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OccupationReport {
    pub checkpoints: Vec<usize>,
    /// \[sample\]\[checkpoint\] fraction of the first n steps inside U.
    pub fraction_in: Vec<Vec<f64>>,
    /// Fraction below U (laminar at 0) and above U (laminar at 1).
    pub fraction_below: Vec<Vec<f64>>,
    pub fraction_above: Vec<Vec<f64>>,
    /// \[sample\]\[checkpoint\] count of laminar→burst entries into U.
    pub transitions: Vec<Vec<u64>>,
    pub median: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
    pub transitions_median: Vec<f64>,
}

/// Logarithmic checkpoints 10², 10³, …, capped and terminated at n.
pub fn log_checkpoints(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut c = 100usize;
    while c < n {
        out.push(c);
        c = c.saturating_mul(10);
    }
    out.push(n);
    out
}

struct SampleCounters {
    fraction_in: Vec<f64>,
    fraction_below: Vec<f64>,
    fraction_above: Vec<f64>,
    transitions: Vec<u64>,
}

/// Stream one driven trajectory and collect occupation counters.
/// `u_line = (lo, hi)` in line-chart coordinates (±∞ allowed).
#[allow(clippy::too_many_arguments)]
fn run_occupation_sample(
    sys: &SkewSystem,
    u_line: (f64, f64),
    x0_line: f64,
    n: usize,
    window: usize,
    master_seed: u64,
    sample_index: u64,
    checkpoints: &[usize],
) -> SampleCounters {
    let spec = sys.subshift();
    let rng = seed::rng_for(master_seed, sample_index);
    let sampler = PathSampler::new(&spec, rng, StartDistribution::Stationary);
    let symbols: Vec<Symbol> = sampler.take(n + window).collect();
    let digits = word_digits(&symbols, sys.m, sys.level);
    let minv = 1.0 / sys.m as f64;
    let mut ys = vec![0.0f64; digits.len()];
    let mut y = 0.5;
    for k in (0..digits.len()).rev() {
        y = (digits[k] as f64 + y) * minv;
        ys[k] = y;
    }

    let mut x = x0_line;
    let mut in_u_count = 0u64;
    let mut below = 0u64;
    let mut above = 0u64;
    let mut transitions = 0u64;
    let mut was_in = u_line.0 <= x && x <= u_line.1;
    let mut ck = 0usize;
    let mut counters = SampleCounters {
        fraction_in: Vec::with_capacity(checkpoints.len()),
        fraction_below: Vec::with_capacity(checkpoints.len()),
        fraction_above: Vec::with_capacity(checkpoints.len()),
        transitions: Vec::with_capacity(checkpoints.len()),
    };
    for (k, &yk) in ys[..n].iter().enumerate() {
        x = crate::skew::fiber_map_line(sys.xi.eval(yk), x, &sys.r, yk);
        let in_u = u_line.0 <= x && x <= u_line.1;
        if in_u {
            in_u_count += 1;
            if !was_in {
                transitions += 1;
            }
        } else if x < u_line.0 {
            below += 1;
        } else {
            above += 1;
        }
        was_in = in_u;
        if ck < checkpoints.len() && k + 1 == checkpoints[ck] {
            let total = (k + 1) as f64;
            counters.fraction_in.push(in_u_count as f64 / total);
            counters.fraction_below.push(below as f64 / total);
            counters.fraction_above.push(above as f64 / total);
            counters.transitions.push(transitions);
            ck += 1;
        }
    }
    counters
}

/// Birkhoff occupation fractions of the interval-chart window `u` over
/// `samples` independent trajectories started at `x0` (interval chart).
#[allow(clippy::too_many_arguments)]
pub fn birkhoff_occupation(
    sys: &SkewSystem,
    u: (f64, f64),
    x0: f64,
    n: usize,
    samples: usize,
    master_seed: u64,
    window: usize,
) -> Result<OccupationReport> {
    if !(0.0 <= u.0 && u.0 < u.1 && u.1 <= 1.0) {
        return Err(Error::Domain(format!("U = [{}, {}] is not a subinterval of [0,1]", u.0, u.1)));
    }
    if n < 100 || samples == 0 {
        return Err(Error::Domain("need n ≥ 100 and at least one sample".into()));
    }
    if !(0.0 < x0 && x0 < 1.0) {
        return Err(Error::Domain(format!("x0 = {x0} must lie strictly inside (0,1)")));
    }
    let u_line = (to_line(u.0), to_line(u.1));
    let x0_line = to_line(x0);
    let checkpoints = log_checkpoints(n);
    let per_sample: Vec<SampleCounters> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            run_occupation_sample(sys, u_line, x0_line, n, window, master_seed, s, &checkpoints)
        })
        .collect();

    let ncp = checkpoints.len();
    let collect_q = |get: &dyn Fn(&SampleCounters) -> &Vec<f64>, q: f64| -> Vec<f64> {
        (0..ncp)
            .map(|c| {
                let vals: Vec<f64> = per_sample.iter().map(|s| get(s)[c]).collect();
                stats::quantile(&vals, q)
            })
            .collect()
    };
    let median = collect_q(&|s| &s.fraction_in, 0.5);
    let q25 = collect_q(&|s| &s.fraction_in, 0.25);
    let q75 = collect_q(&|s| &s.fraction_in, 0.75);
    let transitions_median: Vec<f64> = (0..ncp)
        .map(|c| {
            let vals: Vec<f64> = per_sample.iter().map(|s| s.transitions[c] as f64).collect();
            stats::quantile(&vals, 0.5)
        })
        .collect();
    Ok(OccupationReport {
        checkpoints,
        fraction_in: per_sample.iter().map(|s| s.fraction_in.clone()).collect(),
        fraction_below: per_sample.iter().map(|s| s.fraction_below.clone()).collect(),
        fraction_above: per_sample.iter().map(|s| s.fraction_above.clone()).collect(),
        transitions: per_sample.iter().map(|s| s.transitions.clone()).collect(),
        median,
        q25,
        q75,
        transitions_median,
    })
}

/// Kind of a trajectory episode relative to the band [−L, L].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeKind {
    LaminarAtZero,
    LaminarAtOne,
    Burst,
}

/// One maximal run of a single kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Episode {
    pub kind: EpisodeKind,
    pub start: usize,
    pub length: usize,
}

/// Alternating laminar/burst segmentation of a line-chart series.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EpisodeTrace {
    pub threshold: f64,
    pub episodes: Vec<Episode>,
    pub laminar_zero_count: usize,
    pub laminar_one_count: usize,
    pub burst_count: usize,
}

impl EpisodeTrace {
    /// Episode-length histogram: sorted (kind, length, count) rows.
    pub fn histogram(&self) -> Vec<(EpisodeKind, usize, u64)> {
        use std::collections::BTreeMap;
        let mut map: BTreeMap<(EpisodeKind, usize), u64> = BTreeMap::new();
        for e in &self.episodes {
            *map.entry((e.kind, e.length)).or_default() += 1;
        }
        map.into_iter().map(|((k, l), c)| (k, l, c)).collect()
    }

    /// Count of laminar→burst boundaries.
    pub fn laminar_to_burst_transitions(&self) -> usize {
        self.episodes
            .windows(2)
            .filter(|w| w[0].kind != EpisodeKind::Burst && w[1].kind == EpisodeKind::Burst)
            .count()
    }
}

fn classify(x: f64, l: f64) -> EpisodeKind {
    if x < -l {
        EpisodeKind::LaminarAtZero
    } else if x > l {
        EpisodeKind::LaminarAtOne
    } else {
        EpisodeKind::Burst
    }
}

/// Segment a line-chart series into maximal laminar/burst episodes
/// (laminar-at-0: x < −L, laminar-at-1: x > L, burst: |x| ≤ L). Episodes
/// tile [0, len) and adjacent episodes have distinct kinds.
pub fn episode_segmentation(series_line: &[f64], l: f64) -> EpisodeTrace {
    let mut episodes: Vec<Episode> = Vec::new();
    for (i, &x) in series_line.iter().enumerate() {
        let kind = classify(x, l);
        match episodes.last_mut() {
            Some(e) if e.kind == kind => e.length += 1,
            _ => episodes.push(Episode { kind, start: i, length: 1 }),
        }
    }
    let count = |k: EpisodeKind| episodes.iter().filter(|e| e.kind == k).count();
    EpisodeTrace {
        threshold: l,
        laminar_zero_count: count(EpisodeKind::LaminarAtZero),
        laminar_one_count: count(EpisodeKind::LaminarAtOne),
        burst_count: count(EpisodeKind::Burst),
        episodes,
    }
}

/// Escape-time census for the chaotic walk: per trial, the first time the
/// interval-chart coordinate exceeds `p_threshold` starting from `x_start`
/// (both in (0,1)); aggregated over a horizon ladder as escaped fractions
/// and censored means.
#[allow(clippy::too_many_arguments)]
pub fn escape_time_census(
    sys: &SkewSystem,
    p_threshold: f64,
    x_start: f64,
    trials: u64,
    horizons: &[u64],
    master_seed: u64,
    window: usize,
) -> Result<SurvivalCurve> {
    if !(0.0 < x_start && x_start < p_threshold && p_threshold < 1.0) {
        return Err(Error::Domain(format!(
            "need 0 < x = {x_start} < p = {p_threshold} < 1"
        )));
    }
    if horizons.is_empty() || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("horizons must be strictly increasing".into()));
    }
    let b_line = to_line(p_threshold);
    let x0_line = to_line(x_start);
    let max_h = *horizons.last().unwrap() as usize;
    let nh = horizons.len();
    let spec = sys.subshift();

    let escapes: Vec<Option<u64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let rng = seed::rng_for(master_seed, trial);
            let sampler = PathSampler::new(&spec, rng, StartDistribution::Stationary);
            let symbols: Vec<Symbol> = sampler.take(max_h + window).collect();
            let digits = word_digits(&symbols, sys.m, sys.level);
            let minv = 1.0 / sys.m as f64;
            let mut ys = vec![0.0f64; digits.len()];
            let mut y = 0.5;
            for k in (0..digits.len()).rev() {
                y = (digits[k] as f64 + y) * minv;
                ys[k] = y;
            }
            let mut x = x0_line;
            for (k, &yk) in ys[..max_h].iter().enumerate() {
                x = crate::skew::fiber_map_line(sys.xi.eval(yk), x, &sys.r, yk);
                if x > b_line {
                    return Some(k as u64 + 1);
                }
            }
            None
        })
        .collect();

    let mut points = Vec::with_capacity(nh);
    for &h in horizons {
        let mut count = 0u64;
        let mut sum = KahanSum::new();
        let mut sumsq = KahanSum::new();
        for t in escapes.iter().flatten() {
            if *t <= h {
                count += 1;
                sum.add(*t as f64);
                sumsq.add((*t as f64) * (*t as f64));
            }
        }
        points.push(SurvivalPoint {
            horizon: h,
            escaped: stats::wilson(count, trials),
            censored_mean: (count > 0)
                .then(|| stats::mean_ci(count, sum.value(), sumsq.value())),
        });
    }
    Ok(SurvivalCurve { trials, points, guard_warning: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skew::{
        Chart, DisplacementKind, DisplacementSpec, Monotonicity, PerturbationSpec, DEFAULT_WINDOW,
    };

    fn affine_over_e3() -> SkewSystem {
        SkewSystem::new(
            3,
            1,
            DisplacementSpec::new(
                DisplacementKind::Affine { a: -1.0, b: 2.0 },
                Monotonicity::Increasing,
            )
            .unwrap(),
            PerturbationSpec::zero(),
            Chart::Interval,
        )
        .unwrap()
    }

    fn zero_system() -> SkewSystem {
        SkewSystem::new(
            2,
            1,
            DisplacementSpec::new(
                DisplacementKind::Table { nodes: vec![(0.0, 0.0), (1.0, 0.0)] },
                Monotonicity::Unknown,
            )
            .unwrap(),
            PerturbationSpec::zero(),
            Chart::Interval,
        )
        .unwrap()
    }

    #[test]
    fn checkpoints_are_logarithmic() {
        assert_eq!(log_checkpoints(1_000_000), vec![100, 1000, 10_000, 100_000, 1_000_000]);
        assert_eq!(log_checkpoints(5000), vec![100, 1000, 5000]);
        assert_eq!(log_checkpoints(100), vec![100]);
    }

    #[test]
    fn occupation_constant_system_inside_u() {
        let sys = zero_system();
        let rep = birkhoff_occupation(&sys, (0.25, 0.75), 0.5, 1000, 4, 9, DEFAULT_WINDOW).unwrap();
        for s in &rep.fraction_in {
            assert!(s.iter().all(|&f| f == 1.0));
        }
        for s in &rep.transitions {
            assert!(s.iter().all(|&t| t == 0));
        }
    }

    #[test]
    fn occupation_fractions_partition_to_one() {
        let sys = affine_over_e3();
        let rep =
            birkhoff_occupation(&sys, (0.01, 0.99), 0.5, 20_000, 8, 2024, DEFAULT_WINDOW).unwrap();
        for s in 0..8 {
            for c in 0..rep.checkpoints.len() {
                let total =
                    rep.fraction_in[s][c] + rep.fraction_below[s][c] + rep.fraction_above[s][c];
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn occupation_median_decreases_on_affine_walk() {
        let sys = affine_over_e3();
        let rep =
            birkhoff_occupation(&sys, (0.01, 0.99), 0.5, 100_000, 24, 7, DEFAULT_WINDOW).unwrap();
        // checkpoints 100, 1000, 10^4, 10^5: median fraction trends down.
        let m = &rep.median;
        assert!(
            m[m.len() - 1] < m[1],
            "median occupation did not decrease: {m:?}"
        );
        // Transition counts keep growing.
        let t = &rep.transitions_median;
        assert!(t[t.len() - 1] > t[1], "transitions did not grow: {t:?}");
    }

    #[test]
    fn occupation_is_deterministic() {
        let sys = affine_over_e3();
        let a = birkhoff_occupation(&sys, (0.01, 0.99), 0.5, 2000, 4, 11, DEFAULT_WINDOW).unwrap();
        let b = birkhoff_occupation(&sys, (0.01, 0.99), 0.5, 2000, 4, 11, DEFAULT_WINDOW).unwrap();
        assert_eq!(a.fraction_in, b.fraction_in);
        assert_eq!(a.transitions, b.transitions);
    }

    #[test]
    fn segmentation_single_burst() {
        let series = vec![0.0, 1.0, -1.0, 0.5];
        let tr = episode_segmentation(&series, 2.0);
        assert_eq!(tr.episodes.len(), 1);
        assert_eq!(tr.episodes[0].kind, EpisodeKind::Burst);
        assert_eq!(tr.episodes[0].length, 4);
        assert_eq!(tr.burst_count, 1);
    }

    #[test]
    fn segmentation_tiles_and_alternates() {
        let series = vec![-5.0, -6.0, 0.0, 5.5, 5.1, 0.2, -7.0];
        let tr = episode_segmentation(&series, 4.0);
        let total: usize = tr.episodes.iter().map(|e| e.length).sum();
        assert_eq!(total, series.len());
        for w in tr.episodes.windows(2) {
            assert_ne!(w[0].kind, w[1].kind);
            assert_eq!(w[0].start + w[0].length, w[1].start);
        }
        assert_eq!(tr.laminar_zero_count, 2);
        assert_eq!(tr.laminar_one_count, 1);
        assert_eq!(tr.laminar_to_burst_transitions(), 2);
    }

    #[test]
    fn segmentation_threshold_monotone() {
        // Raising L cannot create new laminar episodes.
        let sys = affine_over_e3();
        let spec = sys.subshift();
        let path = crate::subshift::sample_path(&spec, 33, 20_000 + DEFAULT_WINDOW).unwrap();
        let tr = crate::skew::iterate_trajectory(&sys, &path, 0.5, 20_000, DEFAULT_WINDOW).unwrap();
        let low = episode_segmentation(&tr.x_line, 2.0);
        let high = episode_segmentation(&tr.x_line, 4.0);
        // The laminar SET shrinks pointwise: every index laminar at the
        // higher threshold is laminar at the lower one.
        let laminar_mask = |t: &EpisodeTrace| -> Vec<bool> {
            let n: usize = t.episodes.iter().map(|e| e.length).sum();
            let mut mask = vec![false; n];
            for e in &t.episodes {
                if e.kind != EpisodeKind::Burst {
                    mask[e.start..e.start + e.length].iter_mut().for_each(|b| *b = true);
                }
            }
            mask
        };
        let lo_mask = laminar_mask(&low);
        let hi_mask = laminar_mask(&high);
        assert!(hi_mask.iter().zip(&lo_mask).all(|(h, l)| !h || *l));
        let laminar_time = |m: &[bool]| m.iter().filter(|&&b| b).count();
        assert!(laminar_time(&hi_mask) <= laminar_time(&lo_mask));
    }

    #[test]
    fn segmentation_idempotent_on_episode_series() {
        let series = vec![-5.0, -6.0, 0.0, 5.5, 5.1, 0.2, -7.0];
        let a = episode_segmentation(&series, 4.0);
        let b = episode_segmentation(&series, 4.0);
        assert_eq!(a.episodes, b.episodes);
    }

    #[test]
    fn affine_walk_heavy_tailed_laminar_lengths() {
        // Max laminar episode ≫ median over a long run.
        let sys = affine_over_e3();
        let spec = sys.subshift();
        let n = 200_000;
        let path = crate::subshift::sample_path(&spec, 5150, n + DEFAULT_WINDOW).unwrap();
        let tr = crate::skew::iterate_trajectory(&sys, &path, 0.5, n, DEFAULT_WINDOW).unwrap();
        let l = to_line(0.99);
        let seg = episode_segmentation(&tr.x_line, l);
        let mut lengths: Vec<f64> = seg
            .episodes
            .iter()
            .filter(|e| e.kind != EpisodeKind::Burst)
            .map(|e| e.length as f64)
            .collect();
        assert!(lengths.len() > 10, "only {} laminar episodes", lengths.len());
        lengths.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = lengths[lengths.len() / 2];
        let max = *lengths.last().unwrap();
        assert!(max > 20.0 * median, "max {max} vs median {median}");
    }

    fn cubic_over_e3() -> SkewSystem {
        SkewSystem::new(
            3,
            1,
            DisplacementSpec::new(
                DisplacementKind::Affine { a: -1.0, b: 2.0 },
                Monotonicity::Increasing,
            )
            .unwrap(),
            crate::skew::PerturbationSpec::new(
                crate::skew::PerturbationKind::Cubic { rho: 0.2 },
                0.2,
            )
            .unwrap(),
            Chart::Interval,
        )
        .unwrap()
    }

    #[test]
    fn affine_walk_visits_both_boundaries() {
        // Neutral boundaries on both sides: sojourns below 1e-6 and
        // excursions above 0.9 in one long series.
        let sys = affine_over_e3();
        let spec = sys.subshift();
        let n = 100_000;
        let path = crate::subshift::sample_path(&spec, 12, n + DEFAULT_WINDOW).unwrap();
        let tr = crate::skew::iterate_trajectory(&sys, &path, 0.5, n, DEFAULT_WINDOW).unwrap();
        let ints: Vec<f64> = tr.x_interval();
        let deep = ints.iter().filter(|&&x| x < 1e-6).count();
        let high = ints.iter().filter(|&&x| x > 0.9).count();
        assert!(deep > 0, "no deep laminar sojourn near 0");
        assert!(high > 0, "no excursion above 0.9");
    }

    #[test]
    fn cubic_upper_boundary_repels() {
        // L1 > 0: visits above 0.9 are rare against sojourns below 1e-6.
        let sys = cubic_over_e3();
        let spec = sys.subshift();
        let n = 100_000;
        let path = crate::subshift::sample_path(&spec, 21, n + DEFAULT_WINDOW).unwrap();
        let tr = crate::skew::iterate_trajectory(&sys, &path, 0.5, n, DEFAULT_WINDOW).unwrap();
        let ints: Vec<f64> = tr.x_interval();
        let deep = ints.iter().filter(|&&x| x < 1e-6).count();
        let high = ints.iter().filter(|&&x| x > 0.9).count();
        assert!(deep > 10 * high.max(1), "deep = {deep}, high = {high}");
        assert!(deep > 1000, "deep = {deep}");
    }

    #[test]
    fn occupation_decreases_with_repelling_boundary() {
        // With a repelling upper boundary the occupation window is [ε, 1];
        // the decreasing trend still holds.
        let sys = cubic_over_e3();
        let rep =
            birkhoff_occupation(&sys, (0.01, 1.0), 0.5, 100_000, 16, 5, DEFAULT_WINDOW).unwrap();
        let m = &rep.median;
        assert!(m[m.len() - 1] < m[1], "median did not decrease: {m:?}");
    }

    #[test]
    fn occupation_chart_consistent() {
        // Counting in the interval chart (h-image series against the raw
        // window) gives the same crossings as the line-chart counters.
        let sys = affine_over_e3();
        let spec = sys.subshift();
        let n = 5000;
        let u = (0.01, 0.99);
        let path = crate::subshift::sample_path(&spec, 77, n + DEFAULT_WINDOW).unwrap();
        let tr = crate::skew::iterate_trajectory(&sys, &path, 0.5, n, DEFAULT_WINDOW).unwrap();
        let line_count = tr.x_line[1..]
            .iter()
            .filter(|&&x| to_line(u.0) <= x && x <= to_line(u.1))
            .count();
        let interval_count = tr.x_interval()[1..]
            .iter()
            .filter(|&&x| u.0 <= x && x <= u.1)
            .count();
        assert_eq!(line_count, interval_count);
    }

    #[test]
    fn census_zero_drift_grows_and_control_saturates() {
        let sys = affine_over_e3();
        let horizons = [300u64, 3000, 30_000];
        let curve =
            escape_time_census(&sys, 0.5, 0.001, 400, &horizons, 99, DEFAULT_WINDOW).unwrap();
        let means: Vec<f64> =
            curve.points.iter().map(|p| p.censored_mean.as_ref().unwrap().value).collect();
        assert!(means[1] > 1.5 * means[0], "{means:?}");
        assert!(means[2] > 1.5 * means[1], "{means:?}");

        // Positive-mean control: drift up ⇒ concentration, not growth.
        let control = SkewSystem::new(
            3,
            1,
            DisplacementSpec::unbalanced(
                DisplacementKind::Affine { a: -0.8, b: 2.0 },
                Monotonicity::Increasing,
            )
            .unwrap(),
            PerturbationSpec::zero(),
            Chart::Interval,
        )
        .unwrap();
        let curve2 =
            escape_time_census(&control, 0.5, 0.001, 400, &horizons, 99, DEFAULT_WINDOW).unwrap();
        let means2: Vec<f64> =
            curve2.points.iter().map(|p| p.censored_mean.as_ref().unwrap().value).collect();
        assert!(means2[2] < 1.2 * means2[1], "control did not saturate: {means2:?}");
        assert!(curve2.points[2].escaped.value > 0.999);
    }
}
