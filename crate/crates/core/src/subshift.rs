//! Subshifts of finite type from Markov partitions of `E_m`, their Markov
//! measures, cylinder arithmetic, the coding maps between the unit interval
//! and sequence space, block recoding between partition levels, and seeded
//! path sampling.
//!
//! Symbols are 1-based, matching the partition cells
//! `P_i = [(i-1)/K, i/K)`. The canonical chain at level `N` over base `m`
//! has `K = m^N` symbols with `j` admissible after `i` exactly when
//! `j ∈ {m(i-1)+1, …, mi} (mod K)` and transition probability `1/m`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::linalg;
use crate::scalar::Scalar;
use crate::seed::{self, uniform01};
use crate::Result;

/// 1-based symbol in `{1, …, K}`.
pub type Symbol = u32;

/// Largest symbol count we are willing to materialize.
const MAX_SYMBOLS: u128 = 1 << 26;

#[derive(Debug, Clone)]
enum Structure {
    /// Π = A_N / m over the level-N Markov partition of E_m.
    Canonical { m: u32, level: u32 },
    /// Explicit right-stochastic matrix with its adjacency implied by
    /// nonzero entries.
    Explicit { rows: Vec<Vec<BigRational>>, rows_f64: Vec<Vec<f64>> },
}

/// A subshift of finite type together with a Markov measure.
#[derive(Debug, Clone)]
pub struct SubshiftSpec {
    k: usize,
    structure: Structure,
    stationary: Vec<BigRational>,
    stationary_f64: Vec<f64>,
}

impl SubshiftSpec {
    /// Canonical chain of the level-`level` Markov partition for `E_m`.
    pub fn canonical(m: u32, level: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::Domain(format!("base multiplier m = {m} must be at least 2")));
        }
        if level < 1 {
            return Err(Error::Domain("partition level must be at least 1".into()));
        }
        let k = (m as u128).checked_pow(level).filter(|&k| k <= MAX_SYMBOLS).ok_or_else(
            || Error::Size(format!("m^N = {m}^{level} exceeds the supported symbol count")),
        )? as usize;
        let p = BigRational::new(BigInt::one(), BigInt::from(k));
        Ok(Self {
            k,
            structure: Structure::Canonical { m, level },
            stationary: vec![p; k],
            stationary_f64: vec![1.0 / k as f64; k],
        })
    }

    /// Chain from an explicit stochastic matrix. Validates stochasticity and
    /// primitivity and solves for the stationary vector (exactly).
    pub fn from_matrix(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::Domain("empty transition matrix".into()));
        }
        linalg::validate_stochastic(&rows)?;
        let adj: Vec<Vec<bool>> =
            rows.iter().map(|r| r.iter().map(|p| p.is_positive()).collect()).collect();
        if !linalg::is_primitive(&adj) {
            return Err(Error::NotPrimitive(
                "adjacency pattern of the matrix is not primitive".into(),
            ));
        }
        let stationary = linalg::stationary_vector(&rows)?;
        let stationary_f64 = stationary.iter().map(|p| p.to_f64().unwrap()).collect();
        let rows_f64 = rows
            .iter()
            .map(|r| r.iter().map(|p| p.to_f64().unwrap()).collect())
            .collect();
        Ok(Self {
            k,
            structure: Structure::Explicit { rows, rows_f64 },
            stationary,
            stationary_f64,
        })
    }

    /// Number of symbols K.
    pub fn k(&self) -> usize {
        self.k
    }

    /// `(m, N)` for canonical chains, `None` for explicit matrices.
    pub fn canonical_params(&self) -> Option<(u32, u32)> {
        match self.structure {
            Structure::Canonical { m, level } => Some((m, level)),
            Structure::Explicit { .. } => None,
        }
    }

    /// Stationary distribution, exact.
    pub fn stationary(&self) -> &[BigRational] {
        &self.stationary
    }

    /// Stationary distribution as floats.
    pub fn stationary_f64(&self) -> &[f64] {
        &self.stationary_f64
    }

    /// Transition probability π_ij (1-based symbols), exact.
    pub fn transition_prob(&self, i: Symbol, j: Symbol) -> BigRational {
        match &self.structure {
            Structure::Canonical { m, .. } => {
                if self.is_admissible(i, j) {
                    BigRational::new(BigInt::one(), BigInt::from(*m))
                } else {
                    BigRational::zero()
                }
            }
            Structure::Explicit { rows, .. } => rows[i as usize - 1][j as usize - 1].clone(),
        }
    }

    /// Transition probability π_ij as a float.
    pub fn transition_prob_f64(&self, i: Symbol, j: Symbol) -> f64 {
        match &self.structure {
            Structure::Canonical { m, .. } => {
                if self.is_admissible(i, j) {
                    1.0 / *m as f64
                } else {
                    0.0
                }
            }
            Structure::Explicit { rows_f64, .. } => rows_f64[i as usize - 1][j as usize - 1],
        }
    }

    /// Is the pair (i, j) admissible (a_ij = 1)?
    pub fn is_admissible(&self, i: Symbol, j: Symbol) -> bool {
        debug_assert!(1 <= i && i as usize <= self.k && 1 <= j && j as usize <= self.k);
        match &self.structure {
            Structure::Canonical { m, .. } => {
                let k = self.k as u64;
                let base = (*m as u64 * (i as u64 - 1)) % k;
                let off = (j as u64 - 1 + k - base) % k;
                off < *m as u64
            }
            Structure::Explicit { rows, .. } => {
                rows[i as usize - 1][j as usize - 1].is_positive()
            }
        }
    }

    /// Admissible successors of `i` with their probabilities (f64 view).
    pub fn successors(&self, i: Symbol) -> Vec<(Symbol, f64)> {
        match &self.structure {
            Structure::Canonical { m, .. } => {
                let k = self.k as u64;
                let base = (*m as u64 * (i as u64 - 1)) % k;
                (0..*m as u64)
                    .map(|t| (((base + t) % k) as Symbol + 1, 1.0 / *m as f64))
                    .collect()
            }
            Structure::Explicit { rows_f64, .. } => rows_f64[i as usize - 1]
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(j, &p)| (j as Symbol + 1, p))
                .collect(),
        }
    }

    /// Transition probability generic over the scalar mode.
    pub fn transition_prob_scalar<T: Scalar>(&self, i: Symbol, j: Symbol) -> T {
        T::from_rational(&self.transition_prob(i, j))
    }

    /// Dense Π rows in scalar mode (for the general Poisson solver).
    pub fn matrix_rows<T: Scalar>(&self) -> Vec<Vec<T>> {
        let k = self.k;
        match &self.structure {
            Structure::Canonical { m, .. } => {
                let p = T::from_rational(&BigRational::new(BigInt::one(), BigInt::from(*m)));
                let mut rows = vec![vec![T::zero(); k]; k];
                for i in 1..=k {
                    for (j, _) in self.successors(i as Symbol) {
                        rows[i - 1][j as usize - 1] = p.clone();
                    }
                }
                rows
            }
            Structure::Explicit { rows, .. } => rows
                .iter()
                .map(|r| r.iter().map(|p| T::from_rational(p)).collect())
                .collect(),
        }
    }
}

/// Stationary distribution of an arbitrary row-stochastic matrix.
/// Exact when called with rationals; residual ≤ 1e-12 with floats.
pub fn stationary_distribution<T: Scalar>(rows: &[Vec<T>]) -> Result<Vec<T>> {
    linalg::stationary_vector(rows)
}

/// A finite admissible symbol sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolPath {
    symbols: Vec<Symbol>,
}

impl SymbolPath {
    /// Build a path, validating range and pairwise admissibility.
    pub fn new(symbols: Vec<Symbol>, spec: &SubshiftSpec) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Validation("empty symbol path".into()));
        }
        for (pos, &s) in symbols.iter().enumerate() {
            if s < 1 || s as usize > spec.k() {
                return Err(Error::Validation(format!(
                    "symbol {s} at position {pos} outside 1..={}",
                    spec.k()
                )));
            }
        }
        for (pos, w) in symbols.windows(2).enumerate() {
            if !spec.is_admissible(w[0], w[1]) {
                return Err(Error::Validation(format!(
                    "inadmissible pair ({}, {}) at position {pos}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { symbols })
    }

    /// Build without validation; for sampler output that is admissible by
    /// construction.
    pub fn from_raw(symbols: Vec<Symbol>) -> Self {
        Self { symbols }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Whitespace-separated export, one path per line.
    pub fn to_line(&self) -> String {
        self.symbols.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
    }

    pub fn parse_line(line: &str, spec: &SubshiftSpec) -> Result<Self> {
        let symbols: std::result::Result<Vec<Symbol>, _> =
            line.split_whitespace().map(|t| t.parse::<Symbol>()).collect();
        let symbols =
            symbols.map_err(|e| Error::Validation(format!("bad symbol token: {e}")))?;
        Self::new(symbols, spec)
    }
}

/// How to pick ω₀ when sampling a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartDistribution {
    /// ω₀ from the stationary vector (default).
    Stationary,
    /// ω₋₁ given: ω₀ from the row π_{prev,·}.
    GivenPrev(Symbol),
    /// ω₀ fixed.
    Fixed(Symbol),
}

/// Streaming sampler of an admissible symbol sequence under the Markov
/// measure. Infinite iterator; deterministic for a given RNG state.
pub struct PathSampler<'a> {
    spec: &'a SubshiftSpec,
    rng: ChaCha8Rng,
    current: Option<Symbol>,
    start: StartDistribution,
}

impl<'a> PathSampler<'a> {
    pub fn new(spec: &'a SubshiftSpec, rng: ChaCha8Rng, start: StartDistribution) -> Self {
        Self { spec, rng, current: None, start }
    }

    fn draw_from_row(&mut self, i: Symbol) -> Symbol {
        match &self.spec.structure {
            Structure::Canonical { m, .. } => {
                let k = self.spec.k as u64;
                let base = (*m as u64 * (i as u64 - 1)) % k;
                let u = uniform01(&mut self.rng);
                let t = ((u * *m as f64) as u64).min(*m as u64 - 1);
                ((base + t) % k) as Symbol + 1
            }
            Structure::Explicit { rows_f64, .. } => {
                let row = &rows_f64[i as usize - 1];
                let u = uniform01(&mut self.rng);
                inverse_cdf(row, u)
            }
        }
    }

    fn draw_initial(&mut self) -> Symbol {
        match self.start {
            StartDistribution::Stationary => {
                let u = uniform01(&mut self.rng);
                inverse_cdf(&self.spec.stationary_f64, u)
            }
            StartDistribution::GivenPrev(prev) => self.draw_from_row(prev),
            StartDistribution::Fixed(s) => s,
        }
    }
}

fn inverse_cdf(weights: &[f64], u: f64) -> Symbol {
    let mut acc = 0.0;
    for (idx, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return idx as Symbol + 1;
        }
    }
    weights.len() as Symbol
}

impl Iterator for PathSampler<'_> {
    type Item = Symbol;

    fn next(&mut self) -> Option<Symbol> {
        let next = match self.current {
            None => self.draw_initial(),
            Some(i) => self.draw_from_row(i),
        };
        self.current = Some(next);
        Some(next)
    }
}

/// Sample a finite path: ω₀ from the stationary vector, transitions per Π,
/// deterministic in (spec, seed).
pub fn sample_path(spec: &SubshiftSpec, seed: u64, length: usize) -> Result<SymbolPath> {
    sample_path_from(spec, seed, length, StartDistribution::Stationary)
}

/// Sample with an explicit initial distribution.
pub fn sample_path_from(
    spec: &SubshiftSpec,
    seed: u64,
    length: usize,
    start: StartDistribution,
) -> Result<SymbolPath> {
    if length == 0 {
        return Err(Error::Domain("path length must be at least 1".into()));
    }
    let rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = PathSampler::new(spec, rng, start);
    Ok(SymbolPath::from_raw(sampler.take(length).collect()))
}

use rand_chacha::rand_core::SeedableRng;

/// Sampler for path number `index` of a batch keyed by `master_seed`.
pub fn batch_sampler<'a>(
    spec: &'a SubshiftSpec,
    master_seed: u64,
    index: u64,
    start: StartDistribution,
) -> PathSampler<'a> {
    PathSampler::new(spec, seed::rng_for(master_seed, index), start)
}

/// Itinerary of `y` under E_m against the level-`level` partition:
/// ω_i = j iff E_m^i(y) ∈ [(j-1)/K, j/K). Exact rational iteration; `y = 1`
/// is handled as the limit from the left (constant symbol K).
pub fn encode_point(
    y: &BigRational,
    m: u32,
    level: u32,
    length: usize,
) -> Result<SymbolPath> {
    if y.is_negative() || y > &BigRational::one() {
        return Err(Error::Domain(format!("y = {y} outside [0, 1]")));
    }
    let spec = SubshiftSpec::canonical(m, level)?;
    let k = spec.k();
    if y == &BigRational::one() {
        return Ok(SymbolPath::from_raw(vec![k as Symbol; length]));
    }
    let k_big = BigInt::from(k);
    let m_big = BigInt::from(m);
    let mut y = y.clone();
    let mut symbols = Vec::with_capacity(length);
    for _ in 0..length {
        let cell = (y.clone() * BigRational::from_integer(k_big.clone())).floor();
        let idx = cell.to_integer().to_u64().unwrap();
        symbols.push(idx as Symbol + 1);
        y *= BigRational::from_integer(m_big.clone());
        y -= y.floor();
    }
    Ok(SymbolPath::from_raw(symbols))
}

/// Closed interval data recovered from a truncated itinerary:
/// the intersection `∩_{i<L} E_m^{-i}(P_{ω_i})`.
#[derive(Debug, Clone)]
pub struct DecodedInterval {
    pub lo: BigRational,
    pub width: BigRational,
    pub midpoint: BigRational,
}

impl DecodedInterval {
    pub fn midpoint_f64(&self) -> f64 {
        self.midpoint.to_f64().unwrap()
    }
}

/// Base-m digits (0-based) pinned down by an admissible symbol word at
/// partition level `level`: the leading digit of every symbol plus the full
/// tail of the last symbol, `len + level - 1` digits in total.
pub fn word_digits(word: &[Symbol], m: u32, level: u32) -> Vec<u32> {
    let mut digits = Vec::with_capacity(word.len() + level as usize - 1);
    let lead_div = (m as u64).pow(level - 1);
    for &s in &word[..word.len() - 1] {
        digits.push(((s as u64 - 1) / lead_div) as u32);
    }
    let mut last = word[word.len() - 1] as u64 - 1;
    let mut tail = vec![0u32; level as usize];
    for d in tail.iter_mut().rev() {
        *d = (last % m as u64) as u32;
        last /= m as u64;
    }
    digits.extend(tail);
    digits
}

/// Invert a truncated itinerary. Validates admissibility; returns the
/// decoded interval of width `m^-(level + L - 1)` and its midpoint.
pub fn decode_sequence(word: &[Symbol], m: u32, level: u32) -> Result<DecodedInterval> {
    let spec = SubshiftSpec::canonical(m, level)?;
    let path = SymbolPath::new(word.to_vec(), &spec)?;
    let digits = word_digits(path.symbols(), m, level);
    let m_big = BigInt::from(m);
    let mut num = BigInt::zero();
    for &d in &digits {
        num = num * &m_big + BigInt::from(d);
    }
    let denom = m_big.pow(digits.len() as u32);
    let lo = BigRational::new(num, denom.clone());
    let width = BigRational::new(BigInt::one(), denom);
    let midpoint = &lo + &width / BigRational::from_integer(BigInt::from(2));
    Ok(DecodedInterval { lo, width, midpoint })
}

/// Block-recode a path between partition levels of the same base:
/// the topological conjugacy Θ_{N0,N1}. Output length is
/// `len + N0 - N1`; errors when the input is too short.
pub fn recode(path: &SymbolPath, m: u32, level_from: u32, level_to: u32) -> Result<SymbolPath> {
    let spec_from = SubshiftSpec::canonical(m, level_from)?;
    SubshiftSpec::canonical(m, level_to)?;
    let path = SymbolPath::new(path.symbols().to_vec(), &spec_from)?;
    if level_from == level_to {
        return Ok(path);
    }
    let digits = word_digits(path.symbols(), m, level_from);
    let out_len = (path.len() + level_from as usize).saturating_sub(level_to as usize);
    if out_len == 0 {
        return Err(Error::Size(format!(
            "path of length {} at level {level_from} is too short to recode to level {level_to}",
            path.len()
        )));
    }
    let mut out = Vec::with_capacity(out_len);
    for w in 0..out_len {
        let mut v: u64 = 0;
        for &d in &digits[w..w + level_to as usize] {
            v = v * m as u64 + d as u64;
        }
        out.push(v as Symbol + 1);
    }
    Ok(SymbolPath::from_raw(out))
}

/// A cylinder: finitely many prescribed consecutive entries from `offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderWord {
    pub offset: i64,
    letters: Vec<Symbol>,
}

impl CylinderWord {
    pub fn new(offset: i64, letters: Vec<Symbol>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::Validation("cylinder word must be nonempty".into()));
        }
        Ok(Self { offset, letters })
    }

    pub fn letters(&self) -> &[Symbol] {
        &self.letters
    }
}

/// Markov measure of a cylinder: ν(C) = p_{ω_k} ∏ π_{ω_i ω_{i+1}}.
/// Inadmissible words get measure zero.
pub fn cylinder_measure(spec: &SubshiftSpec, word: &CylinderWord) -> BigRational {
    let letters = word.letters();
    if letters.iter().any(|&s| s < 1 || s as usize > spec.k()) {
        return BigRational::zero();
    }
    let mut acc = spec.stationary()[letters[0] as usize - 1].clone();
    for w in letters.windows(2) {
        if !spec.is_admissible(w[0], w[1]) {
            return BigRational::zero();
        }
        acc *= spec.transition_prob(w[0], w[1]);
    }
    acc
}
