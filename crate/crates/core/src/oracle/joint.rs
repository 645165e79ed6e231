use std::collections::BTreeMap;

use rayon::prelude::*;

use super::canonical::CanonicalParameters;
use crate::error::{Error, Result};
use crate::model::{
    build_junction_tree, task_value, validate_graph, value_code, ClassPrior, DependencyGraph, LabelModelParameters,
    MarginalTable, SeparatorTable, Vertex,
};
use crate::moments::{Accuracies, ConditionedMoments, MomentEstimates};

/// Largest number of binary variables the enumerator accepts.
pub const MAX_ENUMERATED_VARS: usize = 22;

/// Exact distribution over every task and observed binary variable.
///
/// State bits `0..D` hold the tasks and bits `D..D+2m` the observed columns;
/// a set bit means `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactJoint {
    tasks: usize,
    assignment: Vec<usize>,
    probs: Vec<f64>,
}

#[inline]
fn bit_value(state: usize, bit: usize) -> i8 {
    if state >> bit & 1 == 1 {
        -1
    } else {
        1
    }
}

/// Enumerates and normalizes the Ising density.
pub fn enumerate_joint(theta: &CanonicalParameters) -> Result<ExactJoint> {
    theta.validate()?;
    let g = &theta.graph;
    let (d, m) = (g.n_tasks(), g.n_sources());
    let vars = d + 2 * m;
    if vars > MAX_ENUMERATED_VARS {
        return Err(Error::TooLarge { vars, limit: MAX_ENUMERATED_VARS });
    }
    let logw: Vec<Option<f64>> = (0..1usize << vars)
        .into_par_iter()
        .map_init(
            || (vec![0i8; d], vec![0i8; 2 * m]),
            |(y, v), s| {
                for (k, slot) in y.iter_mut().enumerate() {
                    *slot = bit_value(s, k);
                }
                for (c, slot) in v.iter_mut().enumerate() {
                    *slot = bit_value(s, d + c);
                }
                theta.log_weight(y, v)
            },
        )
        .collect();
    let top = logw.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logw.iter().map(|w| w.map_or(0.0, |w| (w - top).exp())).collect();
    let z: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= z;
    }
    Ok(ExactJoint { tasks: d, assignment: g.assignment().to_vec(), probs })
}

impl ExactJoint {
    pub fn n_tasks(&self) -> usize {
        self.tasks
    }

    pub fn n_sources(&self) -> usize {
        self.assignment.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    fn column_bit(&self, c: usize) -> usize {
        self.tasks + c
    }

    /// `E[f(state)]` accumulated in parallel.
    fn expect_vec(&self, len: usize, f: impl Fn(usize, f64, &mut [f64]) + Sync) -> Vec<f64> {
        self.probs
            .par_iter()
            .enumerate()
            .fold(
                || vec![0.0; len],
                |mut acc, (s, &p)| {
                    if p != 0.0 {
                        f(s, p, &mut acc);
                    }
                    acc
                },
            )
            .reduce(
                || vec![0.0; len],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    a
                },
            )
    }

    /// `E[v_a v_b]` over all `2m` observed columns, summed state by state.
    pub fn second_moments(&self) -> Vec<f64> {
        let w = 2 * self.n_sources();
        self.expect_vec(w * w, |s, p, acc| {
            for a in 0..w {
                let va = bit_value(s, self.column_bit(a));
                for b in 0..w {
                    acc[a * w + b] += p * f64::from(va * bit_value(s, self.column_bit(b)));
                }
            }
        })
    }

    pub fn first_moments(&self) -> Vec<f64> {
        let w = 2 * self.n_sources();
        self.expect_vec(w, |s, p, acc| {
            for (a, slot) in acc.iter_mut().enumerate() {
                *slot += p * f64::from(bit_value(s, self.column_bit(a)));
            }
        })
    }

    /// `E[v_c Y(c)]` for every observed column.
    pub fn column_accuracies(&self) -> Vec<f64> {
        let w = 2 * self.n_sources();
        self.expect_vec(w, |s, p, acc| {
            for (c, slot) in acc.iter_mut().enumerate() {
                let y = bit_value(s, self.assignment[c / 2]);
                *slot += p * f64::from(bit_value(s, self.column_bit(c)) * y);
            }
        })
    }

    /// Odd-column moments on states where `source` abstains.
    pub fn conditioned_moments(&self, source: usize) -> ConditionedMoments {
        let m = self.n_sources();
        let (ba, bb) = (self.column_bit(2 * source), self.column_bit(2 * source + 1));
        let sums = self.expect_vec(m * m + m + 1, |s, p, acc| {
            if (s >> ba & 1) != (s >> bb & 1) {
                return;
            }
            acc[m * m + m] += p;
            for j in 0..m {
                let vj = bit_value(s, self.column_bit(2 * j));
                acc[m * m + j] += p * f64::from(vj);
                for k in 0..m {
                    acc[j * m + k] += p * f64::from(vj * bit_value(s, self.column_bit(2 * k)));
                }
            }
        });
        let mass = sums[m * m + m];
        let scale = if mass > 0.0 { 1.0 / mass } else { 0.0 };
        ConditionedMoments {
            rows: None,
            mass,
            second: sums[..m * m].iter().map(|x| x * scale).collect(),
            first: sums[m * m..m * m + m].iter().map(|x| x * scale).collect(),
        }
    }

    /// Largest gap between the two equal-sign states of any pair, holding all
    /// other variables fixed.
    pub fn abstain_symmetry_gap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n_sources() {
            let (ba, bb) = (self.column_bit(2 * i), self.column_bit(2 * i + 1));
            for (s, &p) in self.probs.iter().enumerate() {
                if s >> ba & 1 == 0 && s >> bb & 1 == 0 {
                    let twin = s | 1 << ba | 1 << bb;
                    worst = worst.max((p - self.probs[twin]).abs());
                }
            }
        }
        worst
    }

    /// Collapses pairs to ternary votes.
    pub fn observable(&self) -> ObservableJoint {
        let (d, m) = (self.tasks, self.n_sources());
        let mut probs = vec![0.0; (1 << d) * 3usize.pow(m as u32)];
        for (s, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut idx = 0;
            let mut stride = 1 << d;
            for i in 0..m {
                let (a, b) = (s >> self.column_bit(2 * i) & 1, s >> self.column_bit(2 * i + 1) & 1);
                let code = if a == b { 1 } else if a == 0 { 0 } else { 2 };
                idx += code * stride;
                stride *= 3;
            }
            probs[(s & ((1 << d) - 1)) + idx] += p;
        }
        ObservableJoint { tasks: d, sources: m, probs }
    }
}

/// Exact distribution over tasks and ternary votes. Entry index is the task
/// configuration (bit set means `-1`) plus `2^D Σ_i code_i 3^i` with vote
/// codes `+1 → 0`, `0 → 1`, `-1 → 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableJoint {
    tasks: usize,
    sources: usize,
    probs: Vec<f64>,
}

impl ObservableJoint {
    /// Builds a table directly (for models sampled or specified outside the enumerator).
    pub fn from_probs(tasks: usize, sources: usize, probs: Vec<f64>) -> Result<Self> {
        let size = (1usize << tasks) * 3usize.pow(sources as u32);
        if probs.len() != size {
            return Err(Error::ShapeMismatch { expected: format!("{size} entries"), found: format!("{}", probs.len()) });
        }
        Ok(Self { tasks, sources, probs })
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks
    }

    pub fn n_sources(&self) -> usize {
        self.sources
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Task configuration and vote row of entry `idx`.
    pub fn decode(&self, idx: usize) -> (Vec<i8>, Vec<i8>) {
        let y = (0..self.tasks).map(|d| task_value(idx, d)).collect();
        let mut rest = idx >> self.tasks;
        let lam = (0..self.sources)
            .map(|_| {
                let c = rest % 3;
                rest /= 3;
                1 - c as i8
            })
            .collect();
        (y, lam)
    }

    /// Index of a vote row's block; add the task configuration to get an entry.
    pub fn vote_offset(&self, lam: &[i8]) -> usize {
        let mut idx = 0;
        let mut stride = 1 << self.tasks;
        for &v in lam {
            idx += (1 - v) as usize * stride;
            stride *= 3;
        }
        idx
    }

    pub fn prob(&self, y_config: usize, lam: &[i8]) -> f64 {
        self.probs[y_config + self.vote_offset(lam)]
    }

    /// `P(Y = y | λ)` over task configurations; `None` when `P(λ) = 0`.
    pub fn conditional(&self, lam: &[i8]) -> Option<Vec<f64>> {
        let base = self.vote_offset(lam);
        let row: Vec<f64> = (0..1usize << self.tasks).map(|c| self.probs[base + c]).collect();
        let total: f64 = row.iter().sum();
        (total > 0.0).then(|| row.iter().map(|p| p / total).collect())
    }

    /// Marginal over `vars`, laid out like [`MarginalTable`].
    pub fn marginal(&self, vars: &[Vertex]) -> MarginalTable {
        let size: usize = vars.iter().map(|&v| crate::model::arity(v)).product();
        let mut out = vec![0.0; size];
        let mut codes = vec![0usize; self.sources];
        for (idx, &p) in self.probs.iter().enumerate() {
            let mut rest = idx >> self.tasks;
            for c in codes.iter_mut() {
                *c = rest % 3;
                rest /= 3;
            }
            let mut pos = 0;
            let mut stride = 1;
            for &v in vars {
                let code = match v {
                    Vertex::Task(d) => value_code(v, task_value(idx, d)),
                    Vertex::Source(i) => codes[i],
                };
                pos += code * stride;
                stride *= crate::model::arity(v);
            }
            out[pos] += p;
        }
        MarginalTable::new(vars.to_vec(), out).expect("sized from vars")
    }

    /// Exact class prior implied by the table.
    pub fn prior(&self) -> ClassPrior {
        let mut probs = vec![0.0; 1 << self.tasks];
        for (idx, &p) in self.probs.iter().enumerate() {
            probs[idx & ((1 << self.tasks) - 1)] += p;
        }
        let total: f64 = probs.iter().sum();
        ClassPrior::Joint { tasks: self.tasks, probs: probs.iter().map(|p| p / total).collect() }
    }

    /// True parameter tables over the junction tree of the validated graph.
    pub fn parameters(&self, g: &DependencyGraph) -> Result<LabelModelParameters> {
        let jt = build_junction_tree(&validate_graph(g)?)?;
        let cliques = jt.cliques().iter().map(|c| self.marginal(c)).collect();
        let separators = jt
            .separators()
            .iter()
            .map(|s| SeparatorTable { table: self.marginal(&s.members), degree: s.degree })
            .collect();
        Ok(LabelModelParameters::new(self.tasks, self.sources, cliques, separators))
    }
}

/// Everything the fitting pipeline would estimate, computed exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactStatistics {
    pub moments: MomentEstimates,
    pub accuracies: Accuracies,
    pub parameters: LabelModelParameters,
    pub observable: ObservableJoint,
}

/// Integrates moments, accuracies and parameter tables out of the joint.
pub fn exact_statistics(joint: &ExactJoint, g: &DependencyGraph) -> Result<ExactStatistics> {
    let m = joint.n_sources();
    if g.n_sources() != m || g.n_tasks() != joint.n_tasks() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} tasks and {m} sources", joint.n_tasks()),
            found: format!("{} tasks and {} sources", g.n_tasks(), g.n_sources()),
        });
    }
    let obs = joint.observable();
    let vote_probs = (0..m)
        .map(|i| {
            let t = obs.marginal(&[Vertex::Source(i)]);
            [t.probs()[0], t.probs()[1], t.probs()[2]]
        })
        .collect();
    let mut pair_probs = BTreeMap::new();
    let mut conditioned = BTreeMap::new();
    for &(i, j) in g.source_edges() {
        let t = obs.marginal(&[Vertex::Source(i), Vertex::Source(j)]);
        let mut arr = [0.0; 9];
        arr.copy_from_slice(t.probs());
        pair_probs.insert((i, j), arr);
        for s in [i, j] {
            conditioned.entry(s).or_insert_with(|| joint.conditioned_moments(s));
        }
    }
    let column_acc = joint.column_accuracies();
    let accuracies = Accuracies::from_values((0..m).map(|i| column_acc[2 * i]).collect());
    let moments = MomentEstimates::from_parts(
        m,
        joint.second_moments(),
        joint.first_moments(),
        vote_probs,
        pair_probs,
        conditioned,
        obs.prior(),
        None,
    )?;
    let parameters = obs.parameters(g)?;
    Ok(ExactStatistics { moments, accuracies, parameters, observable: obs })
}
