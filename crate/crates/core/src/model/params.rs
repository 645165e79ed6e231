use super::graph::{describe, Vertex};
use super::junction::{JunctionTree, Separator};
use crate::error::{Error, Result};

/// Number of values a vertex takes: tasks are binary, sources ternary.
pub fn arity(v: Vertex) -> usize {
    match v {
        Vertex::Task(_) => 2,
        Vertex::Source(_) => 3,
    }
}

/// Position of a value in table order: tasks `(+1, -1)`, sources `(+1, 0, -1)`.
#[inline]
pub fn value_code(v: Vertex, value: i8) -> usize {
    match v {
        Vertex::Task(_) => usize::from(value < 0),
        Vertex::Source(_) => (1 - value) as usize,
    }
}

/// Inverse of [`value_code`].
#[inline]
pub fn code_value(v: Vertex, code: usize) -> i8 {
    match v {
        Vertex::Task(_) => {
            if code == 0 {
                1
            } else {
                -1
            }
        }
        Vertex::Source(_) => 1 - code as i8,
    }
}

/// Probability table over a set of vertices.
///
/// Entries are laid out mixed-radix with the first vertex varying fastest.
/// With the task listed first, a single-source table reads
/// `P(Y=1,λ=1), P(Y=-1,λ=1), P(Y=1,λ=0), P(Y=-1,λ=0), P(Y=1,λ=-1), P(Y=-1,λ=-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    vars: Vec<Vertex>,
    probs: Vec<f64>,
}

impl MarginalTable {
    pub fn new(vars: Vec<Vertex>, probs: Vec<f64>) -> Result<Self> {
        let size: usize = vars.iter().map(|&v| arity(v)).product();
        if probs.len() != size {
            return Err(Error::ShapeMismatch {
                expected: format!("{size} entries for {}", describe(&vars)),
                found: format!("{} entries", probs.len()),
            });
        }
        Ok(Self { vars, probs })
    }

    pub fn vars(&self) -> &[Vertex] {
        &self.vars
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn name(&self) -> String {
        describe(&self.vars)
    }

    /// Table index of the assignment given full task and vote vectors.
    pub fn index_of(&self, y: &[i8], lam: &[i8]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for &v in &self.vars {
            let value = match v {
                Vertex::Task(d) => y[d],
                Vertex::Source(i) => lam[i],
            };
            idx += value_code(v, value) * stride;
            stride *= arity(v);
        }
        idx
    }

    pub fn prob(&self, y: &[i8], lam: &[i8]) -> f64 {
        self.probs[self.index_of(y, lam)]
    }

    /// Per-vertex codes of table entry `idx`.
    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        self.vars
            .iter()
            .map(|&v| {
                let c = idx % arity(v);
                idx /= arity(v);
                c
            })
            .collect()
    }

    /// Sums out every vertex not in `keep`; the result lists `keep` in the
    /// order the vertices appear in this table.
    pub fn marginalize(&self, keep: &[Vertex]) -> Result<MarginalTable> {
        let vars: Vec<Vertex> = self.vars.iter().copied().filter(|v| keep.contains(v)).collect();
        if vars.len() != keep.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("subset of {}", self.name()),
                found: describe(keep),
            });
        }
        let size: usize = vars.iter().map(|&v| arity(v)).product();
        let mut probs = vec![0.0; size];
        for (idx, p) in self.probs.iter().enumerate() {
            let codes = self.decode(idx);
            let mut out = 0;
            let mut stride = 1;
            for (k, &v) in self.vars.iter().enumerate() {
                if vars.contains(&v) {
                    out += codes[k] * stride;
                    stride *= arity(v);
                }
            }
            probs[out] += p;
        }
        MarginalTable::new(vars, probs)
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn is_distribution(&self, tol: f64) -> bool {
        self.probs.iter().all(|p| *p >= 0.0) && (self.total() - 1.0).abs() <= tol
    }
}

/// Separator table with its junction-tree degree.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparatorTable {
    pub table: MarginalTable,
    pub degree: usize,
}

/// Label model parameters: one marginal table per maximal clique and per
/// separator of the junction tree.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelModelParameters {
    tasks: usize,
    sources: usize,
    cliques: Vec<MarginalTable>,
    separators: Vec<SeparatorTable>,
}

impl LabelModelParameters {
    pub fn new(
        tasks: usize,
        sources: usize,
        cliques: Vec<MarginalTable>,
        separators: Vec<SeparatorTable>,
    ) -> Self {
        Self { tasks, sources, cliques, separators }
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks
    }

    pub fn n_sources(&self) -> usize {
        self.sources
    }

    pub fn cliques(&self) -> &[MarginalTable] {
        &self.cliques
    }

    pub fn separators(&self) -> &[SeparatorTable] {
        &self.separators
    }

    pub fn junction_tree(&self) -> JunctionTree {
        JunctionTree::from_parts(
            self.cliques.iter().map(|t| t.vars.clone()).collect(),
            self.separators
                .iter()
                .map(|s| Separator { members: s.table.vars.clone(), degree: s.degree })
                .collect(),
        )
    }

    /// All tables, cliques first.
    pub fn tables(&self) -> impl Iterator<Item = &MarginalTable> {
        self.cliques.iter().chain(self.separators.iter().map(|s| &s.table))
    }

    /// Table over exactly `vars`, if one exists.
    pub fn table_for(&self, vars: &[Vertex]) -> Option<&MarginalTable> {
        self.tables().find(|t| t.vars == vars)
    }

    /// Largest absolute difference between a separator table and the
    /// marginal of any clique that contains it.
    pub fn separator_inconsistency(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for sep in &self.separators {
            for clique in &self.cliques {
                if sep.table.vars.iter().all(|v| clique.vars.contains(v)) {
                    if let Ok(m) = clique.marginalize(&sep.table.vars) {
                        // marginalize keeps clique order; separators are stored sorted the same way
                        for (a, b) in m.probs.iter().zip(&sep.table.probs) {
                            worst = worst.max((a - b).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Largest absolute entry difference against another parameter set with the same layout.
    pub fn max_abs_difference(&self, other: &LabelModelParameters) -> Result<f64> {
        let mut worst: f64 = 0.0;
        let mine: Vec<&MarginalTable> = self.tables().collect();
        let theirs: Vec<&MarginalTable> = other.tables().collect();
        if mine.len() != theirs.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} tables", mine.len()),
                found: format!("{} tables", theirs.len()),
            });
        }
        for (a, b) in mine.iter().zip(&theirs) {
            if a.vars != b.vars {
                return Err(Error::ShapeMismatch { expected: a.name(), found: b.name() });
            }
            for (x, y) in a.probs.iter().zip(&b.probs) {
                worst = worst.max((x - y).abs());
            }
        }
        Ok(worst)
    }

    /// Euclidean distance over every table entry.
    pub fn l2_distance(&self, other: &LabelModelParameters) -> f64 {
        self.tables()
            .zip(other.tables())
            .flat_map(|(a, b)| a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y) * (x - y)))
            .sum::<f64>()
            .sqrt()
    }
}
