//! Interval and line models of the skew product: fiber maps fixing the
//! endpoints, the logistic conjugacy `h(x) = e^x / (1 + e^x)` between the
//! two charts, symbol-driven trajectory integration, fiber Lyapunov
//! exponents, class-membership validation, and displacement discretization.
//!
//! Trajectories are integrated in the line chart throughout: near the
//! boundaries the interval chart underflows, while in the line chart deep
//! laminar excursions stay representable. The interval series is the exact
//! `h`-image of the line series.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::stats::KahanSum;
use crate::subshift::{word_digits, Symbol, SymbolPath};
use crate::Result;

/// Line-chart coordinates below which `h` underflows to exactly 0.
const SATURATION_X: f64 = 745.0;

/// Default number of driving symbols resolved per step.
pub const DEFAULT_WINDOW: usize = 50;

/// h : ℝ → (0,1), x ↦ eˣ / (1 + eˣ), computed tail-accurately.
pub fn to_interval(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// 1 − h(x), accurate for large positive x.
pub fn to_interval_complement(x: f64) -> f64 {
    to_interval(-x)
}

/// h⁻¹ : (0,1) → ℝ, x̂ ↦ ln(x̂ / (1 − x̂)). Returns ±∞ at the endpoints.
pub fn to_line(xhat: f64) -> f64 {
    if xhat <= 0.0 {
        f64::NEG_INFINITY
    } else if xhat >= 1.0 {
        f64::INFINITY
    } else {
        (xhat / (1.0 - xhat)).ln()
    }
}

/// Value together with a saturation flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Saturating {
    pub value: f64,
    pub saturated: bool,
}

/// h with a flag set when the result rounds to exactly 0 or 1
/// (guaranteed beyond |x| > 745).
pub fn to_interval_flagged(x: f64) -> Saturating {
    let value = to_interval(x);
    let saturated = value == 0.0 || value == 1.0 || x.abs() > SATURATION_X;
    Saturating { value: if x < -SATURATION_X { 0.0 } else if x > SATURATION_X { 1.0 } else { value }, saturated }
}

/// h⁻¹ with a flag set on the ±∞ sentinels at the endpoints.
pub fn to_line_flagged(xhat: f64) -> Saturating {
    let value = to_line(xhat);
    Saturating { value, saturated: value.is_infinite() }
}

/// Monotonicity declared for a displacement function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    Unknown,
}

/// Whitelisted displacement families ξ : [0,1] → ℝ.
#[derive(Debug, Clone, PartialEq)]
pub enum DisplacementKind {
    /// y ↦ a + b y.
    Affine { a: f64, b: f64 },
    /// y ↦ sign(y − 1/2).
    SignAboutHalf,
    /// Piecewise-linear through `(y, value)` nodes covering [0,1].
    Table { nodes: Vec<(f64, f64)> },
    /// y ↦ amplitude · cos(2πy); smooth, non-monotone, mean zero.
    CosTwoPi { amplitude: f64 },
}

/// A displacement function with a declared monotonicity.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementSpec {
    kind: DisplacementKind,
    monotone: Monotonicity,
    mean: f64,
}

impl DisplacementSpec {
    /// Validates the zero-mean condition (∫ξ = 0 within 1e-12; exact for
    /// affine and table kinds) and the declared monotonicity on a grid.
    pub fn new(kind: DisplacementKind, monotone: Monotonicity) -> Result<Self> {
        let spec = Self::build(kind, monotone)?;
        if spec.mean.abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "displacement mean over [0,1] is {:e}, not 0",
                spec.mean
            )));
        }
        Ok(spec)
    }

    /// Skips the zero-mean check; used for drifted control experiments.
    /// Class validation will still report the condition as failed.
    pub fn unbalanced(kind: DisplacementKind, monotone: Monotonicity) -> Result<Self> {
        Self::build(kind, monotone)
    }

    fn build(kind: DisplacementKind, monotone: Monotonicity) -> Result<Self> {
        if let DisplacementKind::Table { nodes } = &kind {
            if nodes.len() < 2 {
                return Err(Error::Validation("table needs at least two nodes".into()));
            }
            if nodes.first().unwrap().0 != 0.0 || nodes.last().unwrap().0 != 1.0 {
                return Err(Error::Validation("table nodes must span [0,1]".into()));
            }
            if nodes.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(Error::Validation("table node abscissae must increase".into()));
            }
        }
        let mean = exact_mean(&kind);
        let spec = Self { kind, monotone, mean };
        spec.check_monotone_samples()?;
        Ok(spec)
    }

    fn check_monotone_samples(&self) -> Result<()> {
        let want = match self.monotone {
            Monotonicity::Unknown => return Ok(()),
            Monotonicity::Increasing => 1.0,
            Monotonicity::Decreasing => -1.0,
        };
        let grid = 1024;
        for t in 0..grid {
            let y0 = t as f64 / grid as f64;
            let y1 = (t + 1) as f64 / grid as f64;
            let diff = self.eval(y1) - self.eval(y0);
            if diff * want < 0.0 {
                return Err(Error::Validation(format!(
                    "declared {:?} but sampled difference at y = {y0} has the wrong sign",
                    self.monotone
                )));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &DisplacementKind {
        &self.kind
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotone
    }

    /// Mean of ξ over [0,1] (exact for affine/table, analytic otherwise).
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn eval(&self, y: f64) -> f64 {
        match &self.kind {
            DisplacementKind::Affine { a, b } => a + b * y,
            DisplacementKind::SignAboutHalf => {
                if y < 0.5 {
                    -1.0
                } else if y > 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            DisplacementKind::Table { nodes } => {
                let pos = nodes.partition_point(|&(x, _)| x <= y);
                if pos == 0 {
                    nodes[0].1
                } else if pos == nodes.len() {
                    nodes[nodes.len() - 1].1
                } else {
                    let (x0, v0) = nodes[pos - 1];
                    let (x1, v1) = nodes[pos];
                    v0 + (v1 - v0) * (y - x0) / (x1 - x0)
                }
            }
            DisplacementKind::CosTwoPi { amplitude } => {
                amplitude * (2.0 * std::f64::consts::PI * y).cos()
            }
        }
    }

    /// sup |ξ| over [0,1].
    pub fn sup_abs(&self) -> f64 {
        match &self.kind {
            DisplacementKind::Affine { a, b } => a.abs().max((a + b).abs()),
            DisplacementKind::SignAboutHalf => 1.0,
            DisplacementKind::Table { nodes } => {
                nodes.iter().map(|&(_, v)| v.abs()).fold(0.0, f64::max)
            }
            DisplacementKind::CosTwoPi { amplitude } => amplitude.abs(),
        }
    }

    /// sup |ξ'|, `None` when the family is not Lipschitz (sign).
    pub fn sup_abs_derivative(&self) -> Option<f64> {
        match &self.kind {
            DisplacementKind::Affine { b, .. } => Some(b.abs()),
            DisplacementKind::SignAboutHalf => None,
            DisplacementKind::Table { nodes } => Some(
                nodes
                    .windows(2)
                    .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                    .fold(0.0, f64::max),
            ),
            DisplacementKind::CosTwoPi { amplitude } => {
                Some(2.0 * std::f64::consts::PI * amplitude.abs())
            }
        }
    }
}

fn exact_mean(kind: &DisplacementKind) -> f64 {
    match kind {
        DisplacementKind::Affine { a, b } => a + b / 2.0,
        DisplacementKind::SignAboutHalf => 0.0,
        DisplacementKind::Table { nodes } => {
            let mut acc = KahanSum::new();
            for w in nodes.windows(2) {
                acc.add((w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0);
            }
            acc.value()
        }
        DisplacementKind::CosTwoPi { .. } => 0.0,
    }
}

/// Whitelisted perturbation families r(y, x̂) on [0,1]².
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationKind {
    Zero,
    /// (y, x) ↦ ρ x²(x − 1); vanishes to second order at 0 and to first
    /// order at 1.
    Cubic { rho: f64 },
}

/// Perturbation with its sup-norm budget r₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    kind: PerturbationKind,
    r0: f64,
}

impl PerturbationSpec {
    /// Checks |r|, |∂r/∂x|, |∂r/∂y| ≤ r₀ on a validation grid.
    pub fn new(kind: PerturbationKind, r0: f64) -> Result<Self> {
        if r0 < 0.0 {
            return Err(Error::Domain("r0 must be nonnegative".into()));
        }
        let spec = Self { kind, r0 };
        let grid = 512;
        for t in 0..=grid {
            let x = t as f64 / grid as f64;
            let v = spec.eval(0.0, x).abs();
            let dx = spec.dx(0.0, x).abs();
            if v > r0 + 1e-15 || dx > r0 + 1e-15 {
                return Err(Error::Validation(format!(
                    "perturbation exceeds budget r0 = {r0} at x = {x}: |r| = {v:e}, |∂r/∂x| = {dx:e}"
                )));
            }
        }
        Ok(spec)
    }

    pub fn zero() -> Self {
        Self { kind: PerturbationKind::Zero, r0: 0.0 }
    }

    pub fn kind(&self) -> PerturbationKind {
        self.kind
    }

    pub fn budget(&self) -> f64 {
        self.r0
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PerturbationKind::Zero)
    }

    pub fn eval(&self, _y: f64, xhat: f64) -> f64 {
        match self.kind {
            PerturbationKind::Zero => 0.0,
            PerturbationKind::Cubic { rho } => rho * xhat * xhat * (xhat - 1.0),
        }
    }

    /// ∂r/∂x.
    pub fn dx(&self, _y: f64, xhat: f64) -> f64 {
        match self.kind {
            PerturbationKind::Zero => 0.0,
            PerturbationKind::Cubic { rho } => rho * (3.0 * xhat * xhat - 2.0 * xhat),
        }
    }

    /// ∂r/∂y (zero for the whitelisted families).
    pub fn dy(&self, _y: f64, _xhat: f64) -> f64 {
        0.0
    }
}

/// Output chart for trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    Interval,
    Line,
}

/// A skew product over `E_m` with symbolic driving at partition level `N`.
#[derive(Debug, Clone)]
pub struct SkewSystem {
    pub m: u32,
    pub level: u32,
    pub xi: DisplacementSpec,
    pub r: PerturbationSpec,
    pub chart: Chart,
}

impl SkewSystem {
    pub fn new(
        m: u32,
        level: u32,
        xi: DisplacementSpec,
        r: PerturbationSpec,
        chart: Chart,
    ) -> Result<Self> {
        crate::subshift::SubshiftSpec::canonical(m, level)?;
        Ok(Self { m, level, xi, r, chart })
    }

    /// The driving subshift.
    pub fn subshift(&self) -> crate::subshift::SubshiftSpec {
        crate::subshift::SubshiftSpec::canonical(self.m, self.level).unwrap()
    }

    /// ĝ'_y(0), analytic: e^{ξ(y)} + ∂r/∂x(y, 0).
    pub fn fiber_derivative_at_0(&self, y: f64) -> f64 {
        self.xi.eval(y).exp() + self.r.dx(y, 0.0)
    }

    /// ĝ'_y(1), analytic: e^{-ξ(y)} + ∂r/∂x(y, 1).
    pub fn fiber_derivative_at_1(&self, y: f64) -> f64 {
        (-self.xi.eval(y)).exp() + self.r.dx(y, 1.0)
    }
}

/// Möbius part of the interval fiber map: h(h⁻¹(x̂) + ξ).
fn mobius(xi_val: f64, xhat: f64) -> f64 {
    let e = xi_val.exp();
    e * xhat / (1.0 + (e - 1.0) * xhat)
}

/// Interval-chart fiber map ĝ(x̂) = e^ξ x̂ / (1 + (e^ξ − 1) x̂) + r(y, x̂).
/// Values overshooting [0,1] by more than 1e-15 are a class violation;
/// smaller overshoot is clamped.
pub fn fiber_map_interval(
    xi_val: f64,
    xhat: f64,
    r: &PerturbationSpec,
    y: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&xhat) {
        return Err(Error::Domain(format!("x = {xhat} outside [0,1]")));
    }
    let v = mobius(xi_val, xhat) + r.eval(y, xhat);
    if !(0.0..=1.0).contains(&v) {
        let overshoot = if v < 0.0 { -v } else { v - 1.0 };
        if overshoot < 1e-15 {
            return Ok(v.clamp(0.0, 1.0));
        }
        return Err(Error::ClassViolation(format!(
            "fiber image {v} leaves [0,1] (overshoot {overshoot:e}); perturbation too large"
        )));
    }
    Ok(v)
}

/// Line-chart fiber map g(x) = h⁻¹(ĝ(h(x))). For r ≡ 0 this is exactly
/// x + ξ; otherwise the correction is evaluated through `ln1p` so that the
/// exponential flatness near −∞ survives in floating point.
pub fn fiber_map_line(xi_val: f64, x: f64, r: &PerturbationSpec, y: f64) -> f64 {
    let t = x + xi_val;
    let rv = r.eval(y, to_interval(x));
    if rv == 0.0 {
        return t;
    }
    let ht = to_interval(t);
    let hct = to_interval_complement(t);
    let a = rv / ht;
    let b = rv / hct;
    if a > -1.0 && b < 1.0 && a.is_finite() && b.is_finite() {
        t + a.ln_1p() - (-b).ln_1p()
    } else {
        // Correction dominates the Möbius image; fall back to the direct
        // (possibly saturating) interval computation.
        to_line((ht + rv).clamp(0.0, 1.0))
    }
}

/// Reason a trajectory stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub step: usize,
    pub reason: String,
}

/// A line-chart time series of length n+1 (x₀ included).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub x_line: Vec<f64>,
    pub truncation: Option<Truncation>,
}

impl Trajectory {
    /// Interval-chart view: pointwise h-image of the line series.
    pub fn x_interval(&self) -> Vec<f64> {
        self.x_line.iter().map(|&x| to_interval(x)).collect()
    }
}

/// Driving values ξ(y_k) for every step along a symbol path: y_k is the
/// decode midpoint of the symbol window starting at k. The values are
/// produced by a single backward pass y_k = (d_k + y_{k+1}) / m over the
/// base-m digits, which agrees with the finite-window midpoint to within
/// m^{-window} and costs O(1) per step.
pub fn driving_values(
    path: &SymbolPath,
    m: u32,
    level: u32,
    steps: usize,
    window: usize,
    xi: &DisplacementSpec,
) -> Result<Vec<f64>> {
    if path.len() < steps + window {
        return Err(Error::Size(format!(
            "symbol path of length {} too short for {steps} steps with window {window}",
            path.len()
        )));
    }
    let digits = word_digits(path.symbols(), m, level);
    let mut y = 0.5; // midpoint of the unresolved tail
    let minv = 1.0 / m as f64;
    let mut ys = vec![0.0f64; digits.len()];
    for k in (0..digits.len()).rev() {
        y = (digits[k] as f64 + y) * minv;
        ys[k] = y;
    }
    Ok(ys[..steps].iter().map(|&yk| xi.eval(yk)).collect())
}

/// Iterate the fiber coordinate for `n` steps driven by `path`. `x0` is
/// given in the system's chart; integration happens in the line chart.
pub fn iterate_trajectory(
    sys: &SkewSystem,
    path: &SymbolPath,
    x0: f64,
    n: usize,
    window: usize,
) -> Result<Trajectory> {
    let x0_line = match sys.chart {
        Chart::Line => x0,
        Chart::Interval => {
            if !(0.0..=1.0).contains(&x0) {
                return Err(Error::Domain(format!("x0 = {x0} outside [0,1]")));
            }
            let v = to_line(x0);
            if v.is_infinite() {
                return Err(Error::Domain(
                    "x0 at a fixed boundary point; trajectory is constant there".into(),
                ));
            }
            v
        }
    };
    let xi_vals = driving_values(path, sys.m, sys.level, n, window, &sys.xi)?;
    // y_k for the perturbation term: same backward-pass midpoints.
    let digits = word_digits(path.symbols(), sys.m, sys.level);
    let minv = 1.0 / sys.m as f64;
    let mut y = 0.5;
    let mut ys = vec![0.0f64; digits.len()];
    for k in (0..digits.len()).rev() {
        y = (digits[k] as f64 + y) * minv;
        ys[k] = y;
    }

    let mut series = Vec::with_capacity(n + 1);
    series.push(x0_line);
    let mut x = x0_line;
    let mut truncation = None;
    for k in 0..n {
        x = fiber_map_line(xi_vals[k], x, &sys.r, ys[k]);
        if !x.is_finite() {
            truncation = Some(Truncation {
                step: k + 1,
                reason: format!("non-finite fiber value at step {}", k + 1),
            });
            break;
        }
        series.push(x);
    }
    Ok(Trajectory { x_line: series, truncation })
}

/// Fiber Lyapunov exponents at both boundaries by composite midpoint
/// quadrature with a Richardson halving error estimate.
#[derive(Debug, Clone, Copy)]
pub struct LyapunovEstimate {
    pub l0: f64,
    pub l1: f64,
    pub err0: f64,
    pub err1: f64,
    pub nodes: usize,
}

/// L₀ = ∫ ln ĝ'_y(0) dy and L₁ = ∫ ln ĝ'_y(1) dy by midpoint quadrature.
pub fn lyapunov_exponents(sys: &SkewSystem, nodes: usize) -> Result<LyapunovEstimate> {
    let quad = |n: usize, at_one: bool| -> Result<f64> {
        let mut acc = KahanSum::new();
        for t in 0..n {
            let y = (t as f64 + 0.5) / n as f64;
            let d = if at_one {
                sys.fiber_derivative_at_1(y)
            } else {
                sys.fiber_derivative_at_0(y)
            };
            if d <= 0.0 {
                return Err(Error::ClassViolation(format!(
                    "non-positive fiber derivative {d} at y = {y}"
                )));
            }
            acc.add(d.ln());
        }
        Ok(acc.value() / n as f64)
    };
    let n = nodes.max(16);
    let l0 = quad(n, false)?;
    let l0_half = quad(n / 2, false)?;
    let l1 = quad(n, true)?;
    let l1_half = quad(n / 2, true)?;
    Ok(LyapunovEstimate {
        l0,
        l1,
        err0: (l0 - l0_half).abs() / 3.0,
        err1: (l1 - l1_half).abs() / 3.0,
        nodes: n,
    })
}

/// One validated condition in a class-membership report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CheckOutcome {
    pub pass: bool,
    pub worst_value: f64,
    pub bound: f64,
    pub worst_y: f64,
    pub worst_x: f64,
}

/// Report for the defining conditions of the skew-product class.
#[derive(Debug, Clone, Serialize)]
pub struct ClassReport {
    /// Condition (1): ∫ ξ = 0.
    pub mean_zero: CheckOutcome,
    /// Condition (2): |r| ≤ C x² and |r| ≤ C|1−x|.
    pub r_flatness: CheckOutcome,
    /// Condition (3): |r|, |∂r/∂x|, |∂r/∂y| ≤ r₀.
    pub r_budget: CheckOutcome,
    /// Strict monotonicity of x ↦ ĝ_y(x) on the grid.
    pub monotone: CheckOutcome,
    pub pass: bool,
}

/// Grid validation of the class conditions with user-supplied constants
/// C and r₀. Failures are reported, not raised.
pub fn validate_class_membership(
    sys: &SkewSystem,
    c: f64,
    r0: f64,
    grid: usize,
) -> ClassReport {
    let grid = grid.max(8);
    let mean = sys.xi.mean();
    let mean_zero = CheckOutcome {
        pass: mean.abs() <= 1e-12,
        worst_value: mean.abs(),
        bound: 1e-12,
        worst_y: f64::NAN,
        worst_x: f64::NAN,
    };

    let mut flat_worst = 0.0f64;
    let mut flat_at = (0.0, 0.0);
    let mut budget_worst = 0.0f64;
    let mut budget_at = (0.0, 0.0);
    let mut mono_worst = f64::INFINITY;
    let mut mono_at = (0.0, 0.0);
    for yi in 0..grid {
        let y = (yi as f64 + 0.5) / grid as f64;
        let xi_val = sys.xi.eval(y);
        let mut prev = 0.0f64; // ĝ_y(0) = 0 + r(y,0)
        for xi_idx in 0..=grid {
            let x = xi_idx as f64 / grid as f64;
            let rv = sys.r.eval(y, x);
            // Condition (2): excess of |r| over C·min(x², |1-x|).
            let cap = c * (x * x).min(1.0 - x);
            let excess = rv.abs() - cap;
            if excess > flat_worst {
                flat_worst = excess;
                flat_at = (y, x);
            }
            // Condition (3).
            let b = rv.abs().max(sys.r.dx(y, x).abs()).max(sys.r.dy(y, x).abs());
            if b > budget_worst {
                budget_worst = b;
                budget_at = (y, x);
            }
            // Monotonicity via finite differences of ĝ_y.
            let g = mobius(xi_val, x) + rv;
            if xi_idx > 0 {
                let diff = g - prev;
                if diff < mono_worst {
                    mono_worst = diff;
                    mono_at = (y, x);
                }
            }
            prev = g;
        }
    }

    let r_flatness = CheckOutcome {
        pass: flat_worst <= 1e-12,
        worst_value: flat_worst,
        bound: 0.0,
        worst_y: flat_at.0,
        worst_x: flat_at.1,
    };
    let r_budget = CheckOutcome {
        pass: budget_worst <= r0 + 1e-12,
        worst_value: budget_worst,
        bound: r0,
        worst_y: budget_at.0,
        worst_x: budget_at.1,
    };
    let monotone = CheckOutcome {
        pass: mono_worst > 0.0,
        worst_value: mono_worst,
        bound: 0.0,
        worst_y: mono_at.0,
        worst_x: mono_at.1,
    };
    let pass = mean_zero.pass && r_flatness.pass && r_budget.pass && monotone.pass;
    ClassReport { mean_zero, r_flatness, r_budget, monotone, pass }
}

/// Discretized displacement over the level-N partition.
#[derive(Debug, Clone)]
pub struct DiscretizedXi {
    /// ξ_N(i) = ξ(midpoint of P_i) − shift; Σ p_i ξ_N(i) = 0.
    pub values: Vec<f64>,
    /// The uniform centering shift that was subtracted.
    pub centering_shift: f64,
    /// sup_i sup_{y ∈ P_i} |ξ(y) − ξ_N(i)| bound: sup|ξ'|·m^{-N} + |shift|
    /// (None when ξ is not Lipschitz).
    pub sup_deviation_bound: Option<f64>,
}

/// Cell-midpoint discretization ξ_N with uniform centering.
pub fn discretize_displacement(xi: &DisplacementSpec, m: u32, level: u32) -> Result<DiscretizedXi> {
    let spec = crate::subshift::SubshiftSpec::canonical(m, level)?;
    let k = spec.k();
    let mut values: Vec<f64> =
        (0..k).map(|i| xi.eval((2 * i + 1) as f64 / (2 * k) as f64)).collect();
    let mut acc = KahanSum::new();
    for &v in &values {
        acc.add(v);
    }
    let shift = acc.value() / k as f64;
    for v in values.iter_mut() {
        *v -= shift;
    }
    let cell = (m as f64).powi(-(level as i32));
    let bound = xi.sup_abs_derivative().map(|d| d * cell + shift.abs());
    Ok(DiscretizedXi { values, centering_shift: shift, sup_deviation_bound: bound })
}

/// Resolve a symbol to its cell midpoint (used for coarse ξ lookups).
pub fn cell_midpoint(symbol: Symbol, k: usize) -> f64 {
    (2 * (symbol as usize - 1) + 1) as f64 / (2 * k) as f64
}
