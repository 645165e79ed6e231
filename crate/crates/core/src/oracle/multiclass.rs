use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::multiclass::MulticlassMatrix;

/// A `k`-class source: abstains with probability `abstain`, otherwise names
/// the true class with probability `correct` and a uniformly chosen wrong
/// class the rest of the time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassSource {
    pub abstain: f64,
    pub correct: f64,
}

/// Conditionally independent `k`-class generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStarModel {
    pub class_probs: Vec<f64>,
    pub sources: Vec<ClassSource>,
}

impl ClassStarModel {
    pub fn new(class_probs: Vec<f64>, sources: Vec<ClassSource>) -> Result<Self> {
        let total: f64 = class_probs.iter().sum();
        if class_probs.len() < 2 || class_probs.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPrior("class probabilities must be a distribution over at least two classes".into()));
        }
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        if sources.iter().any(|s| !unit(s.abstain) || !unit(s.correct)) {
            return Err(Error::Config("source probabilities must lie in [0, 1]".into()));
        }
        Ok(Self { class_probs, sources })
    }

    pub fn n_classes(&self) -> usize {
        self.class_probs.len()
    }

    /// `P(λ_i = vote | class)`, classes and votes 1-based, 0 abstains.
    pub fn vote_prob(&self, i: usize, vote: u16, class: u16) -> f64 {
        let s = self.sources[i];
        let k = self.n_classes() as f64;
        match vote {
            0 => s.abstain,
            v if v == class => (1.0 - s.abstain) * s.correct,
            _ => (1.0 - s.abstain) * (1.0 - s.correct) / (k - 1.0),
        }
    }

    /// Exact class posterior for one vote row, index `c - 1` for class `c`.
    pub fn posterior(&self, votes: &[u16]) -> Vec<f64> {
        let mut out: Vec<f64> = (1..=self.n_classes() as u16)
            .map(|c| {
                votes.iter().enumerate().fold(self.class_probs[c as usize - 1], |p, (i, &v)| p * self.vote_prob(i, v, c))
            })
            .collect();
        let z: f64 = out.iter().sum();
        out.iter_mut().for_each(|p| *p /= z);
        out
    }

    /// Votes and the 1-based hidden class of each row.
    pub fn sample(&self, n: usize, seed: u64) -> (MulticlassMatrix, Vec<u16>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.n_classes() as u16;
        let m = self.sources.len();
        let mut votes = Vec::with_capacity(n * m);
        let mut truth = Vec::with_capacity(n);
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut y = k;
            for (c, p) in self.class_probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    y = c as u16 + 1;
                    break;
                }
            }
            truth.push(y);
            for s in &self.sources {
                let v = if rng.random::<f64>() < s.abstain {
                    0
                } else if rng.random::<f64>() < s.correct {
                    y
                } else {
                    let wrong = rng.random_range(1..k);
                    if wrong >= y { wrong + 1 } else { wrong }
                };
                votes.push(v);
            }
        }
        (MulticlassMatrix::new(n, m, self.n_classes(), votes).expect("votes in range"), truth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrong_votes_spread_evenly() {
        let model = ClassStarModel::new(vec![1.0, 0.0, 0.0], vec![ClassSource { abstain: 0.0, correct: 0.4 }]).unwrap();
        let (l, truth) = model.sample(30_000, 5);
        assert!(truth.iter().all(|&y| y == 1));
        let mut counts = [0usize; 4];
        for r in 0..l.n_rows() {
            counts[l.get(r, 0) as usize] += 1;
        }
        let share = |c: usize| counts[c] as f64 / 30_000.0;
        assert!((share(1) - 0.4).abs() < 0.01);
        assert!((share(2) - 0.3).abs() < 0.01 && (share(3) - 0.3).abs() < 0.01);
    }

    #[test]
    fn posterior_by_hand() {
        let src = ClassSource { abstain: 0.0, correct: 0.6 };
        let model = ClassStarModel::new(vec![0.5, 0.25, 0.25], vec![src]).unwrap();
        // class 1: 0.5 * 0.6, others: 0.25 * 0.2
        let p = model.posterior(&[1]);
        assert!((p[0] - 0.3 / 0.4).abs() < 1e-15);
        assert!((p[1] - 0.05 / 0.4).abs() < 1e-15);
    }
}
