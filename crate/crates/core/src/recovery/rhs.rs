use crate::error::{Error, Result};
use crate::moments::{Accuracies, MomentEstimates};

/// `E[∏_{k ∈ C} λ_k Y]` for a source clique `C` of size one or two.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueExpectation {
    pub task: usize,
    pub sources: Vec<usize>,
    pub value: f64,
}

/// `E[λ_i λ_j]`, preferring exact pair counts over the augmented moment.
fn pair_product(mom: &MomentEstimates, i: usize, j: usize) -> f64 {
    match (mom.pair_prob(i, j, 1, 1), mom.pair_prob(i, j, -1, -1)) {
        (Some(pp), Some(nn)) => {
            let pn = mom.pair_prob(i, j, 1, -1).unwrap_or(0.0);
            let np = mom.pair_prob(i, j, -1, 1).unwrap_or(0.0);
            pp + nn - pn - np
        }
        _ => mom.source_m(i, j),
    }
}

/// Single sources pass their accuracy through; for a pair the product of the
/// two votes is independent of the task, so `E[λ_i λ_j Y] = E[λ_i λ_j] E[Y]`.
pub fn clique_expectation(
    task: usize,
    sources: &[usize],
    acc: &Accuracies,
    mom: &MomentEstimates,
) -> Result<CliqueExpectation> {
    let value = match *sources {
        [i] => acc.source(i),
        [i, j] => pair_product(mom, i, j) * mom.prior.mean(task),
        _ => return Err(Error::UnsupportedCliqueSize { size: sources.len() }),
    };
    Ok(CliqueExpectation { task, sources: sources.to_vec(), value })
}

/// Right-hand side for a clique, in the row order of the transform.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsVector(pub Vec<f64>);

/// Conditional accuracies needed for a source pair `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConditionals {
    /// `E[λ_j Y | λ_i = 0]`.
    pub j_given_i: f64,
    /// `E[λ_i Y | λ_j = 0]`.
    pub i_given_j: f64,
}

fn single_entries(py: f64, p_pos: f64, p_zero: f64, acc: f64) -> [f64; 6] {
    [1.0, py, p_pos, 0.5 * (acc - p_zero + 1.0), p_zero, p_zero * py]
}

/// Builds `r_C` for a clique over `task` and one or two sources.
pub fn assemble_rhs(
    task: usize,
    sources: &[usize],
    acc: &Accuracies,
    mom: &MomentEstimates,
    cond: Option<PairConditionals>,
) -> Result<RhsVector> {
    let py = mom.prior.p_positive(task);
    match *sources {
        [i] => {
            let [p_pos, p_zero, _] = mom.vote_probs[i];
            Ok(RhsVector(single_entries(py, p_pos, p_zero, acc.source(i)).to_vec()))
        }
        [i, j] => {
            let pair = |vi: i8, vj: i8| {
                mom.pair_prob(i, j, vi, vj).ok_or_else(|| {
                    Error::Config(format!("no joint vote counts were collected for sources {} and {}", i + 1, j + 1))
                })
            };
            let cond = cond.ok_or_else(|| Error::Config("pair clique needs conditional accuracies".into()))?;
            let si = single_entries(py, mom.vote_probs[i][0], mom.vote_probs[i][1], acc.source(i));
            let sj = single_entries(py, mom.vote_probs[j][0], mom.vote_probs[j][1], acc.source(j));
            let (zi, zj) = (mom.vote_probs[i][1], mom.vote_probs[j][1]);
            let both_zero = pair(0, 0)?;
            let agree = pair(1, 1)? + pair(-1, -1)?;
            let both_voted = agree + pair(1, -1)? + pair(-1, 1)?;
            let e_lly = clique_expectation(task, sources, acc, mom)?.value;
            let mut r = vec![0.0; 18];
            for c2 in 0..3 {
                for c1 in 0..3 {
                    for y in 0..2 {
                        r[y + 2 * c1 + 6 * c2] = match (c1, c2, y) {
                            (_, 0, _) => si[y + 2 * c1],
                            (0, _, _) => sj[y + 2 * c2],
                            (1, 1, 0) => agree,
                            (1, 1, _) => 0.5 * (e_lly + both_voted),
                            (2, 1, 0) => pair(0, 1)?,
                            (2, 1, _) => 0.5 * (zi + cond.j_given_i * zi - both_zero),
                            (1, 2, 0) => pair(1, 0)?,
                            (1, 2, _) => 0.5 * (zj + cond.i_given_j * zj - both_zero),
                            (_, _, 0) => both_zero,
                            _ => both_zero * py,
                        };
                    }
                }
            }
            Ok(RhsVector(r))
        }
        _ => Err(Error::UnsupportedCliqueSize { size: sources.len() }),
    }
}
