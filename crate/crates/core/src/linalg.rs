//! Dense linear algebra over a generic scalar, sized for the small chains
//! that need exact answers. Gaussian elimination with partial pivoting; the
//! pivot spread doubles as a cheap conditioning diagnostic.

use crate::error::Error;
use crate::scalar::Scalar;
use crate::Result;

/// Pivot statistics collected during elimination.
#[derive(Debug, Clone, Copy)]
pub struct PivotDiagnostic {
    pub max_abs_pivot: f64,
    pub min_abs_pivot: f64,
}

impl PivotDiagnostic {
    /// max/min pivot magnitude ratio; a rough condition proxy.
    pub fn spread(&self) -> f64 {
        self.max_abs_pivot / self.min_abs_pivot
    }
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
/// `a` is row-major, consumed. Fails on (numerically) singular input.
pub fn solve_dense<T: Scalar>(
    mut a: Vec<Vec<T>>,
    mut b: Vec<T>,
) -> Result<(Vec<T>, PivotDiagnostic)> {
    let n = a.len();
    assert!(a.iter().all(|r| r.len() == n) && b.len() == n);
    let mut max_p = 0.0f64;
    let mut min_p = f64::INFINITY;
    let scale: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x.to_float().abs())
        .fold(0.0, f64::max)
        .max(1e-300);

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        let pivot_abs = a[pivot_row][col].abs().to_float();
        let singular = if T::EXACT {
            a[pivot_row][col].is_zero()
        } else {
            pivot_abs <= 1e-13 * scale
        };
        if singular {
            return Err(Error::Singular(format!(
                "zero pivot in column {col} (|p| = {pivot_abs:e}); matrix is rank deficient"
            )));
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        max_p = max_p.max(pivot_abs);
        min_p = min_p.min(pivot_abs);

        let pivot = a[col][col].clone();
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = a[row][col].clone() / pivot.clone();
            for k in col..n {
                let sub = factor.clone() * a[col][k].clone();
                a[row][k] = a[row][k].clone() - sub;
            }
            let sub = factor * b[col].clone();
            b[row] = b[row].clone() - sub;
        }
    }

    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            let sub = a[row][k].clone() * x[k].clone();
            acc = acc - sub;
        }
        x[row] = acc / a[row][row].clone();
    }
    Ok((x, PivotDiagnostic { max_abs_pivot: max_p, min_abs_pivot: min_p }))
}

/// Validate that `rows` is a right-stochastic matrix: nonnegative entries,
/// rows summing to one (exactly for exact scalars, 1e-12 otherwise).
pub fn validate_stochastic<T: Scalar>(rows: &[Vec<T>]) -> Result<()> {
    let n = rows.len();
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NotStochastic(format!(
                "row {} has {} entries, expected {}",
                i + 1,
                row.len(),
                n
            )));
        }
        if row.iter().any(|p| p.is_negative()) {
            return Err(Error::NotStochastic(format!("row {} has a negative entry", i + 1)));
        }
        let mut sum = T::zero();
        for p in row {
            sum += p;
        }
        let dev = (sum - T::one()).to_float().abs();
        let bad = if T::EXACT { dev != 0.0 } else { dev > 1e-12 };
        if bad {
            return Err(Error::NotStochastic(format!(
                "row {} sums to 1 {} {:e}",
                i + 1,
                if dev > 0.0 { "+" } else { "-" },
                dev
            )));
        }
    }
    Ok(())
}

/// Left stationary probability vector of a row-stochastic matrix: solves
/// pᵀΠ = pᵀ, Σp = 1 by replacing one redundant row with the normalization.
pub fn stationary_vector<T: Scalar>(rows: &[Vec<T>]) -> Result<Vec<T>> {
    validate_stochastic(rows)?;
    let n = rows.len();
    // (Πᵀ - I) p = 0 with last equation replaced by Σ p_i = 1.
    let mut a = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            a[j][i] = rows[i][j].clone();
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = row[i].clone() - T::one();
    }
    for entry in a[n - 1].iter_mut() {
        *entry = T::one();
    }
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();
    let (p, _) = solve_dense(a, b).map_err(|e| {
        Error::NotPrimitive(format!("stationary vector is not unique ({e}); chain reducible?"))
    })?;
    if p.iter().any(|x| !x.is_positive()) {
        return Err(Error::NotPrimitive(
            "stationary vector has non-positive entries; chain not primitive".into(),
        ));
    }
    Ok(p)
}

/// Primitivity check via the Wielandt bound: A is primitive iff
/// A^((n-1)^2 + 1) has no zero entry.
pub fn is_primitive(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    if n == 0 {
        return false;
    }
    if n == 1 {
        return adj[0][0];
    }
    let target = (n - 1) * (n - 1) + 1;
    let mut acc: Option<Vec<Vec<bool>>> = None; // A^(bits consumed)
    let mut base = adj.to_vec();
    let mut e = target;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => bool_matmul(&a, &base),
            });
        }
        e >>= 1;
        if e > 0 {
            base = bool_matmul(&base, &base);
        }
    }
    acc.unwrap().iter().all(|row| row.iter().all(|&x| x))
}

fn bool_matmul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = a.len();
    let mut out = vec![vec![false; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] {
                for j in 0..n {
                    if b[k][j] {
                        out[i][j] = true;
                    }
                }
            }
        }
    }
    out
}
