use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::joint::ExactJoint;
use crate::augment::collapse_pair;
use crate::error::{Error, Result};
use crate::model::{ClassPrior, DependencyGraph, LabelMatrix, LabelModelParameters, MarginalTable, SeparatorTable, Vertex, Vote};

/// Sampled votes with the hidden tasks kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub labels: LabelMatrix,
    /// `n × D` task values, row-major. Only for evaluation.
    pub truth: Vec<i8>,
    pub tasks: usize,
}

impl Sample {
    pub fn truth_row(&self, r: usize) -> &[i8] {
        &self.truth[r * self.tasks..(r + 1) * self.tasks]
    }
}

/// `n` i.i.d. draws by inverse CDF over the flattened joint.
pub fn sample(joint: &ExactJoint, n: usize, seed: u64) -> Sample {
    let mut cdf = Vec::with_capacity(joint.probs().len());
    let mut acc = 0.0;
    for &p in joint.probs() {
        acc += p;
        cdf.push(acc);
    }
    let (d, m) = (joint.n_tasks(), joint.n_sources());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut votes = Vec::with_capacity(n * m);
    let mut truth = Vec::with_capacity(n * d);
    for _ in 0..n {
        let u = rng.random::<f64>() * acc;
        let s = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let bit = |b: usize| if s >> b & 1 == 1 { -1i8 } else { 1 };
        truth.extend((0..d).map(bit));
        votes.extend((0..m).map(|i| collapse_pair(bit(d + 2 * i), bit(d + 2 * i + 1))));
    }
    Sample { labels: LabelMatrix::new(n, m, votes).expect("ternary votes"), truth, tasks: d }
}

/// Source of a conditionally independent single-task model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarSource {
    /// `P(λ = 0)`.
    pub abstain: f64,
    /// `P(λ = Y | λ ≠ 0)`.
    pub correct: f64,
}

impl StarSource {
    pub fn accuracy(&self) -> f64 {
        (1.0 - self.abstain) * (2.0 * self.correct - 1.0)
    }

    /// Never-abstaining source with accuracy `a`.
    pub fn with_accuracy(a: f64) -> Self {
        Self { abstain: 0.0, correct: (1.0 + a) / 2.0 }
    }
}

/// Single task with conditionally independent sources, sampled directly
/// without enumeration. This is the star Ising model: `θ_i` sets
/// `correct = σ(4 θ_i)` and `θ_ii` sets the abstain rate.
#[derive(Debug, Clone, PartialEq)]
pub struct StarModel {
    pub p_positive: f64,
    pub sources: Vec<StarSource>,
}

impl StarModel {
    pub fn new(p_positive: f64, sources: Vec<StarSource>) -> Result<Self> {
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if !ok(p_positive) || sources.iter().any(|s| !ok(s.abstain) || !ok(s.correct)) {
            return Err(Error::Config("star model probabilities must lie in [0, 1]".into()));
        }
        Ok(Self { p_positive, sources })
    }

    /// Star model equivalent to canonical parameters on a single task with
    /// no dependency edges.
    pub fn from_canonical(theta: &crate::oracle::CanonicalParameters) -> Result<Self> {
        theta.validate()?;
        let g = &theta.graph;
        if g.n_tasks() != 1 || !g.source_edges().is_empty() {
            return Err(Error::Config("a star model needs one task and no dependency edges".into()));
        }
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let sources = (0..g.n_sources())
            .map(|i| {
                let (t, tii) = (theta.theta_accuracy[i], theta.theta_abstain[i]);
                let abstain = if theta.never_abstain[i] {
                    0.0
                } else {
                    // weight 2e^θii for the equal-sign states against 2e^-θii cosh 2θi for votes
                    sig(2.0 * tii - (2.0 * t).cosh().ln())
                };
                StarSource { abstain, correct: sig(4.0 * t) }
            })
            .collect();
        Self::new(sig(2.0 * theta.theta_task[0]), sources)
    }

    pub fn graph(&self) -> DependencyGraph {
        DependencyGraph::star(self.sources.len())
    }

    pub fn prior(&self) -> ClassPrior {
        ClassPrior::balance(self.p_positive).expect("validated balance")
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.sources.iter().map(StarSource::accuracy).collect()
    }

    /// `P(λ_i = v | Y = y)`.
    pub fn vote_prob(&self, i: usize, y: i8, v: Vote) -> f64 {
        let s = self.sources[i];
        match v {
            0 => s.abstain,
            _ if v == y => (1.0 - s.abstain) * s.correct,
            _ => (1.0 - s.abstain) * (1.0 - s.correct),
        }
    }

    /// True tables for the star junction tree.
    pub fn parameters(&self) -> LabelModelParameters {
        let py = [self.p_positive, 1.0 - self.p_positive];
        let cliques = (0..self.sources.len())
            .map(|i| {
                let mut probs = Vec::with_capacity(6);
                for v in [1i8, 0, -1] {
                    for (k, y) in [1i8, -1].into_iter().enumerate() {
                        probs.push(py[k] * self.vote_prob(i, y, v));
                    }
                }
                MarginalTable::new(vec![Vertex::Task(0), Vertex::Source(i)], probs).expect("6 entries")
            })
            .collect();
        let separators = if self.sources.len() > 1 {
            vec![SeparatorTable {
                table: MarginalTable::new(vec![Vertex::Task(0)], py.to_vec()).expect("2 entries"),
                degree: self.sources.len(),
            }]
        } else {
            Vec::new()
        };
        LabelModelParameters::new(1, self.sources.len(), cliques, separators)
    }

    /// Exact `P(Y = +1 | λ)`.
    pub fn posterior(&self, lam: &[Vote]) -> f64 {
        let mut lp = self.p_positive.ln();
        let mut ln = (1.0 - self.p_positive).ln();
        for (i, &v) in lam.iter().enumerate() {
            lp += self.vote_prob(i, 1, v).ln();
            ln += self.vote_prob(i, -1, v).ln();
        }
        let top = lp.max(ln);
        let (a, b) = ((lp - top).exp(), (ln - top).exp());
        a / (a + b)
    }

    /// Draws one `(Y, λ)` row.
    pub fn draw(&self, rng: &mut impl Rng, votes: &mut Vec<Vote>) -> i8 {
        let y = if rng.random::<f64>() < self.p_positive { 1 } else { -1 };
        for s in &self.sources {
            let v = if rng.random::<f64>() < s.abstain {
                0
            } else if rng.random::<f64>() < s.correct {
                y
            } else {
                -y
            };
            votes.push(v);
        }
        y
    }

    pub fn sample(&self, n: usize, seed: u64) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut votes = Vec::with_capacity(n * self.sources.len());
        let truth = (0..n).map(|_| self.draw(&mut rng, &mut votes)).collect();
        Sample {
            labels: LabelMatrix::new(n, self.sources.len(), votes).expect("ternary votes"),
            truth,
            tasks: 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{enumerate_joint, exact_statistics, CanonicalParameters};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn seeded_sampling_is_deterministic() {
        let p = CanonicalParameters::random(DependencyGraph::star(3), 1);
        let j = enumerate_joint(&p).unwrap();
        assert_eq!(sample(&j, 500, 9), sample(&j, 500, 9));
        assert_ne!(sample(&j, 500, 9).labels, sample(&j, 500, 10).labels);
    }

    #[test]
    fn eight_state_goodness_of_fit() {
        // one task and one source: 3 binary variables
        let mut p = CanonicalParameters::zeros(DependencyGraph::star(1));
        p.theta_task = vec![0.2];
        p.theta_accuracy = vec![0.6];
        p.theta_abstain = vec![0.3];
        let j = enumerate_joint(&p).unwrap();
        let n = 100_000;
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for &q in j.probs() {
            acc += q;
            cdf.push(acc);
        }
        // count raw states with the same draw sequence as `sample`
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut counts = [0f64; 8];
        for _ in 0..n {
            let u = rng.random::<f64>() * acc;
            counts[cdf.partition_point(|&c| c <= u).min(7)] += 1.0;
        }
        let chi2: f64 = counts
            .iter()
            .zip(j.probs())
            .map(|(c, q)| (c - q * n as f64).powi(2) / (q * n as f64))
            .sum();
        let pval = 1.0 - ChiSquared::new(7.0).unwrap().cdf(chi2);
        assert!(pval > 0.001, "chi2 {chi2}, p {pval}");
    }

    #[test]
    fn abstain_rate_matches_enumeration() {
        let g = DependencyGraph::builder(1, 4).assign_all(0).source_edge(2, 3).build().unwrap();
        let p = CanonicalParameters::random(g.clone(), 5);
        let j = enumerate_joint(&p).unwrap();
        let exact = exact_statistics(&j, &g).unwrap();
        let s = sample(&j, 100_000, 2);
        for i in 0..4 {
            let rate = (0..s.labels.n_rows()).filter(|&r| s.labels.get(r, i) == 0).count() as f64 / 1e5;
            assert!((rate - exact.moments.abstain_rate(i)).abs() < 0.01);
        }
    }

    #[test]
    fn star_model_matches_canonical_star() {
        // θ_i and θ_ii map to (abstain, correct); compare against enumeration
        let mut p = CanonicalParameters::zeros(DependencyGraph::star(2));
        p.theta_task = vec![0.25];
        p.theta_accuracy = vec![0.4, 0.9];
        p.theta_abstain = vec![0.2, -0.3];
        let j = enumerate_joint(&p).unwrap();
        let truth = j.observable().parameters(&DependencyGraph::star(2)).unwrap();
        let star = StarModel::from_canonical(&p).unwrap();
        let diff = star.parameters().max_abs_difference(&truth).unwrap();
        assert!(diff < 1e-12, "{diff}");
        p.never_abstain = vec![true, false];
        let j = enumerate_joint(&p).unwrap();
        let truth = j.observable().parameters(&DependencyGraph::star(2)).unwrap();
        let diff = StarModel::from_canonical(&p).unwrap().parameters().max_abs_difference(&truth).unwrap();
        assert!(diff < 1e-12, "{diff}");
    }
}
