//! Poisson equation for Markov random walks: the corrector Δ with
//! `ΠΔ − Δ = Πξ − P_νξ` and `P_νΔ = 0`, the centered increments
//! `ζ(i,j) = ξ(j) − Δ(j) + Δ(i)`, and the bound quadruple {D, V⁻, V⁺, G}
//! feeding the stopping-time estimates.
//!
//! Two permanently maintained solver paths check each other: a general
//! dense linear solve for arbitrary primitive chains, and an O(K·N)
//! geometric-sum fast path exploiting the doubling structure
//! `Δ_N = −(Π_N + ⋯ + Π_N^{N-1}) ξ_N`, valid because `Π_N^N ξ_N = 0`.
//! Powers of Π_N act as averages over index bands
//! `[m^M(i-1)+1, m^M i] (mod K)`, so the sum needs only prefix sums.

use num_rational::BigRational;

use crate::error::Error;
use crate::scalar::Scalar;
use crate::seed;
use crate::skew::DisplacementSpec;
use crate::stats::{self, KahanSum};
use crate::subshift::{PathSampler, StartDistribution, SubshiftSpec, Symbol};
use crate::Result;

/// Sparse centered-increment table: row `i` holds (successor, ζ(i,j)) in
/// the chain's successor order (exactly m entries per row for canonical
/// chains).
#[derive(Debug, Clone)]
pub struct ZetaTable<T> {
    rows: Vec<Vec<(Symbol, T)>>,
}

impl<T: Scalar> ZetaTable<T> {
    pub fn rows(&self) -> &[Vec<(Symbol, T)>] {
        &self.rows
    }

    /// ζ(i, j) for an admissible pair.
    pub fn get(&self, i: Symbol, j: Symbol) -> Option<&T> {
        self.rows[i as usize - 1].iter().find(|(s, _)| *s == j).map(|(_, z)| z)
    }

    pub fn to_f64(&self) -> ZetaTable<f64> {
        ZetaTable {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|(s, z)| (*s, z.to_float())).collect())
                .collect(),
        }
    }
}

/// Sup/variance/oscillation bounds entering the stopping-time estimates.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct BoundQuadruple {
    /// D: sup of |ζ| over admissible pairs.
    pub d: f64,
    /// V⁻: min over rows of Σ_j π_ij ζ(i,j)².
    pub v_minus: f64,
    /// V⁺: max over rows of Σ_j π_ij ζ(i,j)².
    pub v_plus: f64,
    /// G: max_{i,j} |Δ(i) − Δ(j)|.
    pub g: f64,
}

/// Solved Poisson data for one chain and displacement vector.
#[derive(Debug, Clone)]
pub struct PoissonData<T> {
    pub spec: SubshiftSpec,
    pub xi: Vec<T>,
    pub delta: Vec<T>,
    pub zeta: ZetaTable<T>,
    pub bounds: BoundQuadruple,
    /// sup-norm of the Poisson residual ΠΔ − Δ − Πξ + P_νξ.
    pub residual_sup: f64,
    /// sup over rows of |Σ_j π_ij ζ(i,j)|.
    pub row_centering_sup: f64,
    /// Pivot-spread diagnostic of the linear solve (general path only).
    pub condition: Option<f64>,
}

impl<T: Scalar> PoissonData<T> {
    /// Assemble ζ, bounds and residuals from a chain, ξ and a given Δ.
    /// Does not check that Δ solves the Poisson equation; the residual
    /// field reports how far off it is.
    pub fn from_parts(spec: SubshiftSpec, xi: Vec<T>, delta: Vec<T>) -> Self {
        let zeta = compute_zeta(&spec, &xi, &delta);
        let bounds = compute_bounds(&spec, &zeta, &delta);
        let residual_sup = poisson_residual_sup(&spec, &xi, &delta);
        let row_centering_sup = row_centering_sup(&spec, &zeta);
        Self { spec, xi, delta, zeta, bounds, residual_sup, row_centering_sup, condition: None }
    }

    pub fn to_f64(&self) -> PoissonData<f64> {
        PoissonData {
            spec: self.spec.clone(),
            xi: self.xi.iter().map(Scalar::to_float).collect(),
            delta: self.delta.iter().map(Scalar::to_float).collect(),
            zeta: self.zeta.to_f64(),
            bounds: self.bounds,
            residual_sup: self.residual_sup,
            row_centering_sup: self.row_centering_sup,
            condition: self.condition,
        }
    }
}

/// ζ(i,j) = ξ(j) − Δ(j) + Δ(i) on admissible pairs.
pub fn compute_zeta<T: Scalar>(spec: &SubshiftSpec, xi: &[T], delta: &[T]) -> ZetaTable<T> {
    let rows = (1..=spec.k() as Symbol)
        .map(|i| {
            spec.successors(i)
                .into_iter()
                .map(|(j, _)| {
                    let z = xi[j as usize - 1].clone() - delta[j as usize - 1].clone()
                        + delta[i as usize - 1].clone();
                    (j, z)
                })
                .collect()
        })
        .collect();
    ZetaTable { rows }
}

/// {D, V⁻, V⁺, G} from ζ and Δ.
pub fn compute_bounds<T: Scalar>(
    spec: &SubshiftSpec,
    zeta: &ZetaTable<T>,
    delta: &[T],
) -> BoundQuadruple {
    let mut d = 0.0f64;
    let mut v_minus = f64::INFINITY;
    let mut v_plus = 0.0f64;
    for (i0, row) in zeta.rows.iter().enumerate() {
        let i = (i0 + 1) as Symbol;
        let mut moment = T::zero();
        for (j, z) in row {
            d = d.max(z.to_float().abs());
            let p = spec.transition_prob_scalar::<T>(i, *j);
            let term = p * z.clone() * z.clone();
            moment += &term;
        }
        let m = moment.to_float();
        v_minus = v_minus.min(m);
        v_plus = v_plus.max(m);
    }
    let dmax = delta.iter().map(Scalar::to_float).fold(f64::NEG_INFINITY, f64::max);
    let dmin = delta.iter().map(Scalar::to_float).fold(f64::INFINITY, f64::min);
    BoundQuadruple { d, v_minus, v_plus, g: dmax - dmin }
}

fn row_centering_sup<T: Scalar>(spec: &SubshiftSpec, zeta: &ZetaTable<T>) -> f64 {
    let mut worst = 0.0f64;
    for (i0, row) in zeta.rows.iter().enumerate() {
        let i = (i0 + 1) as Symbol;
        let mut acc = T::zero();
        for (j, z) in row {
            let term = spec.transition_prob_scalar::<T>(i, *j) * z.clone();
            acc += &term;
        }
        worst = worst.max(acc.to_float().abs());
    }
    worst
}

fn poisson_residual_sup<T: Scalar>(spec: &SubshiftSpec, xi: &[T], delta: &[T]) -> f64 {
    // ‖ΠΔ − Δ − Πξ + P_νξ‖∞ using the sparse successor structure.
    let mut mean = T::zero();
    for (i, x) in xi.iter().enumerate() {
        let term = T::from_rational(&spec.stationary()[i]) * x.clone();
        mean += &term;
    }
    let mut worst = 0.0f64;
    for i in 1..=spec.k() as Symbol {
        let mut acc = T::zero();
        for (j, _) in spec.successors(i) {
            let p = spec.transition_prob_scalar::<T>(i, j);
            let term =
                p * (delta[j as usize - 1].clone() - xi[j as usize - 1].clone());
            acc += &term;
        }
        let resid = acc - delta[i as usize - 1].clone() + mean.clone();
        worst = worst.max(resid.to_float().abs());
    }
    worst
}

const RESIDUAL_TOL: f64 = 1e-10;

/// Solve the Poisson equation for an arbitrary primitive chain by a dense
/// linear solve on the zero-mean subspace: one redundant row of (Π − I)
/// is replaced by the stationary vector, pinning P_νΔ = 0.
pub fn solve_poisson_general<T: Scalar>(
    spec: &SubshiftSpec,
    xi: &[T],
) -> Result<PoissonData<T>> {
    let k = spec.k();
    if xi.len() != k {
        return Err(Error::Size(format!("xi has {} entries, chain has {k}", xi.len())));
    }
    let rows = spec.matrix_rows::<T>();
    let mut mean = T::zero();
    for (i, x) in xi.iter().enumerate() {
        let term = T::from_rational(&spec.stationary()[i]) * x.clone();
        mean += &term;
    }
    let mut a = rows.clone();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = row[i].clone() - T::one();
    }
    let mut b: Vec<T> = (0..k)
        .map(|i| {
            let mut acc = T::zero();
            for (j, x) in xi.iter().enumerate() {
                if rows[i][j].is_zero() {
                    continue;
                }
                let term = rows[i][j].clone() * x.clone();
                acc += &term;
            }
            acc - mean.clone()
        })
        .collect();
    for (j, entry) in a[k - 1].iter_mut().enumerate() {
        *entry = T::from_rational(&spec.stationary()[j]);
    }
    b[k - 1] = T::zero();
    let (delta, diag) = solve_with_condition(a, b)?;

    let mut pd = PoissonData::from_parts(spec.clone(), xi.to_vec(), delta);
    pd.condition = Some(diag);
    check_residual::<T>(pd.residual_sup)?;
    Ok(pd)
}

fn solve_with_condition<T: Scalar>(a: Vec<Vec<T>>, b: Vec<T>) -> Result<(Vec<T>, f64)> {
    let (x, diag) = crate::linalg::solve_dense(a, b)?;
    Ok((x, diag.spread()))
}

fn check_residual<T: Scalar>(residual: f64) -> Result<()> {
    let bad = if T::EXACT { residual != 0.0 } else { residual > RESIDUAL_TOL };
    if bad {
        return Err(Error::Residual { residual, tolerance: if T::EXACT { 0.0 } else { RESIDUAL_TOL } });
    }
    Ok(())
}

/// Fast path for canonical chains: Δ = −Σ_{M=1}^{N−1} Π^M ξ via circular
/// band prefix sums, O(K·N) time, never materializing dense powers.
/// Requires ξ centered (the geometric sum needs Π^N ξ = 0).
pub fn solve_poisson_canonical<T: Scalar>(
    xi: &[T],
    m: u32,
    level: u32,
) -> Result<PoissonData<T>> {
    let spec = SubshiftSpec::canonical(m, level)?;
    let k = spec.k();
    if xi.len() != k {
        return Err(Error::Size(format!("xi has {} entries, expected {k}", xi.len())));
    }
    let mut mean_acc = T::zero();
    for x in xi {
        mean_acc += x;
    }
    let mean = mean_acc.to_float() / k as f64;
    let uncentered = if T::EXACT { !mean_acc.is_zero() } else { mean.abs() > 1e-12 };
    if uncentered {
        return Err(Error::Uncentered(mean));
    }

    let mut prefix = Vec::with_capacity(k + 1);
    prefix.push(T::zero());
    for x in xi {
        let mut next = prefix.last().unwrap().clone();
        next += x;
        prefix.push(next);
    }
    let total = prefix[k].clone();

    let mut delta = vec![T::zero(); k];
    let mut band: usize = 1;
    for _ in 1..level {
        band *= m as usize;
        let inv_len = T::one() / T::from_int(band as i64);
        for (i, d) in delta.iter_mut().enumerate() {
            let s = (band * i) % k;
            let e = s + band;
            let sum = if e <= k {
                prefix[e].clone() - prefix[s].clone()
            } else {
                total.clone() - prefix[s].clone() + prefix[e - k].clone()
            };
            let avg = sum * inv_len.clone();
            *d = d.clone() - avg;
        }
    }

    let pd = PoissonData::from_parts(spec, xi.to_vec(), delta);
    check_residual::<T>(pd.residual_sup)?;
    Ok(pd)
}

/// Closed-form Δ_N for the symmetric ±1 random walk on the level-N doubling
/// partition: Δ_N(i) = ξ_N(i) + |ξ_N(i)|·(#{ω_j = 2} − #{ω_j = 1}) over the
/// binary N-tuple of i.
pub fn srw_delta_closed_form(level: u32) -> Vec<i64> {
    let k = 1usize << level;
    (0..k)
        .map(|i| {
            let twos = (i as u64).count_ones() as i64; // bit 1 ↔ symbol 2
            let ones = level as i64 - twos;
            let xi: i64 = if i < k / 2 { 1 } else { -1 };
            xi + xi.abs() * (twos - ones)
        })
        .collect()
}

/// The ±1 step vector of the symmetric walk at level N (first half +1).
pub fn srw_xi(level: u32) -> Vec<i64> {
    let k = 1usize << level;
    (0..k).map(|i| if i < k / 2 { 1 } else { -1 }).collect()
}

/// One row of the Δ-growth table across partition levels.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GrowthRow {
    pub level: u32,
    pub k: usize,
    pub delta_sup: f64,
    pub d: f64,
    pub v_minus: f64,
    pub v_plus: f64,
    pub g: f64,
    /// min over rows of max_{j1,j2 ∈ succ(i)} |ζ(i,j1) − ζ(i,j2)|.
    pub row_spread_min: f64,
    pub row_spread_max: f64,
    /// Extremes of the signed sibling gap Δ(m·i) − Δ(m(i−1)+1).
    pub sibling_gap_min: f64,
    pub sibling_gap_max: f64,
}

/// Growth diagnostics with a least-squares fit of ‖Δ_N‖∞ against N.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GrowthTable {
    pub rows: Vec<GrowthRow>,
    pub fit_intercept: f64,
    pub fit_slope: f64,
    pub fit_max_residual: f64,
}

/// Tabulate ‖Δ_N‖∞, {D, V⁻, V⁺, G} and row spreads for a displacement
/// discretized at each level of `levels`.
pub fn growth_diagnostics(
    xi: &DisplacementSpec,
    m: u32,
    levels: std::ops::RangeInclusive<u32>,
) -> Result<GrowthTable> {
    let mut rows = Vec::new();
    for level in levels {
        let disc = crate::skew::discretize_displacement(xi, m, level)?;
        let pd = solve_poisson_canonical::<f64>(&disc.values, m, level)?;
        rows.push(growth_row(&pd, m, level));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.level as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.delta_sup).collect();
    let (fit_intercept, fit_slope, fit_max_residual) = if rows.len() >= 2 {
        stats::linear_fit(&xs, &ys)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(GrowthTable { rows, fit_intercept, fit_slope, fit_max_residual })
}

fn growth_row(pd: &PoissonData<f64>, m: u32, level: u32) -> GrowthRow {
    let k = pd.spec.k();
    let mut spread_min = f64::INFINITY;
    let mut spread_max = 0.0f64;
    for row in pd.zeta.rows() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (_, z) in row {
            lo = lo.min(*z);
            hi = hi.max(*z);
        }
        let spread = hi - lo;
        spread_min = spread_min.min(spread);
        spread_max = spread_max.max(spread);
    }
    let mut gap_min = f64::INFINITY;
    let mut gap_max = f64::NEG_INFINITY;
    for i in 0..k {
        let first = (m as usize * i) % k;
        let last = (m as usize * i + m as usize - 1) % k;
        let gap = pd.delta[last] - pd.delta[first];
        gap_min = gap_min.min(gap);
        gap_max = gap_max.max(gap);
    }
    GrowthRow {
        level,
        k,
        delta_sup: pd.delta.iter().fold(0.0f64, |a, &b| a.max(b.abs())),
        d: pd.bounds.d,
        v_minus: pd.bounds.v_minus,
        v_plus: pd.bounds.v_plus,
        g: pd.bounds.g,
        row_spread_min: spread_min,
        row_spread_max: spread_max,
        sibling_gap_min: gap_min,
        sibling_gap_max: gap_max,
    }
}

/// Per-state martingale z-scores.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MartingaleReport {
    pub worst_z: f64,
    pub worst_state: Symbol,
    pub total_increments: u64,
    pub per_state: Vec<StateZ>,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct StateZ {
    pub state: Symbol,
    pub count: u64,
    pub mean: f64,
    pub std_error: f64,
    pub z: f64,
}

/// Monte Carlo check of the martingale property: conditioned on the
/// previous symbol, the ζ-increments must have mean zero. Returns the
/// worst |z| over conditioning states.
pub fn martingale_check(
    pd: &PoissonData<f64>,
    trials: usize,
    horizon: usize,
    master_seed: u64,
) -> MartingaleReport {
    let k = pd.spec.k();
    let mut count = vec![0u64; k];
    let mut sum = vec![KahanSum::new(); k];
    let mut sumsq = vec![KahanSum::new(); k];
    for trial in 0..trials {
        let rng = seed::rng_for(master_seed, trial as u64);
        let mut sampler = PathSampler::new(&pd.spec, rng, StartDistribution::Stationary);
        let mut prev = sampler.next().unwrap();
        for _ in 0..horizon {
            let next = sampler.next().unwrap();
            let z = *pd.zeta.get(prev, next).expect("sampled pair admissible");
            let s = prev as usize - 1;
            count[s] += 1;
            sum[s].add(z);
            sumsq[s].add(z * z);
            prev = next;
        }
    }
    let mut per_state = Vec::with_capacity(k);
    let mut worst_z = 0.0f64;
    let mut worst_state = 1 as Symbol;
    for s in 0..k {
        let n = count[s];
        let mean = if n > 0 { sum[s].value() / n as f64 } else { 0.0 };
        let se = stats::std_error(n, sum[s].value(), sumsq[s].value());
        let z = if se > 0.0 && se.is_finite() { mean / se } else { 0.0 };
        if z.abs() > worst_z.abs() {
            worst_z = z;
            worst_state = (s + 1) as Symbol;
        }
        per_state.push(StateZ { state: (s + 1) as Symbol, count: n, mean, std_error: se, z });
    }
    MartingaleReport {
        worst_z,
        worst_state,
        total_increments: count.iter().sum(),
        per_state,
    }
}

/// Convert a rational vector to a scalar vector.
pub fn vec_from_rationals<T: Scalar>(v: &[BigRational]) -> Vec<T> {
    v.iter().map(|r| T::from_rational(r)).collect()
}

/// Exact rational vector from integers.
pub fn rationals_from_ints(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&n| BigRational::from_integer(n.into())).collect()
}
