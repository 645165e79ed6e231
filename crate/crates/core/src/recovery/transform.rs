use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Linear maps from a clique table to its observable-event probabilities.
///
/// Entry `(U, Z)` of `A_s μ` is the probability that the product of the
/// variables in `Z` is `+1` while every source in `U` abstains; `B_s μ` gives
/// the same with product `-1`. Rows and columns put the task first (fastest),
/// then each source in blocks with codes absent / in `Z` / in `U` for rows and
/// vote `+1 / 0 / -1` for columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformPair {
    pub s: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

fn base_d() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
}

fn base_e() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
}

/// `A_s = D ⊗ A_{s-1} + E ⊗ B_{s-1}`, `B_s = E ⊗ A_{s-1} + D ⊗ B_{s-1}`.
pub fn build_transform(s: usize) -> TransformPair {
    let mut a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
    let mut b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
    let (d, e) = (base_d(), base_e());
    for _ in 0..s {
        let next_a = d.kronecker(&a) + e.kronecker(&b);
        let next_b = e.kronecker(&a) + d.kronecker(&b);
        a = next_a;
        b = next_b;
    }
    TransformPair { s, a, b }
}

/// Result of one clique solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolvedTable {
    pub probs: Vec<f64>,
    /// Largest distance any raw entry moved when clipped into `[0, 1]`.
    pub clip: f64,
}

/// `μ = A_s⁻¹ r`, clipped into `[0, 1]` and renormalized. Raw entries
/// outside `[-threshold, 1 + threshold]` are an error.
pub fn solve_marginal(t: &TransformPair, r: &[f64], threshold: f64, clique: &str) -> Result<SolvedTable> {
    let rhs = DVector::from_column_slice(r);
    let raw = t
        .a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalInstability { clique: clique.to_string(), min: f64::NAN, max: f64::NAN })?;
    let (min, max) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(min >= -threshold && max <= 1.0 + threshold) {
        return Err(Error::NumericalInstability { clique: clique.to_string(), min, max });
    }
    let clipped: Vec<f64> = raw.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let clip = raw.iter().zip(&clipped).map(|(x, c)| (x - c).abs()).fold(0.0, f64::max);
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(Error::NumericalInstability { clique: clique.to_string(), min, max });
    }
    Ok(SolvedTable { probs: clipped.iter().map(|x| x / total).collect(), clip })
}
