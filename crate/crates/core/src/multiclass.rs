//! `k`-class labeling through one binary label model per class.
//!
//! For class `c`, a vote for `c` becomes `+1`, a vote for any other class
//! becomes `-1` and abstains stay `0`. Each binary posterior estimates
//! `P(Y = c | λ)`; the combined distribution divides them by their sum.

use crate::error::{Error, Result};
use crate::model::{ClassPrior, DependencyGraph, LabelMatrix, Vote};
use crate::recovery::{FitConfig, FittedModel, LabelModel};

/// `n × m` class votes: `0` abstains, `1..=k` names a class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MulticlassMatrix {
    rows: usize,
    sources: usize,
    classes: usize,
    votes: Vec<u16>,
}

impl MulticlassMatrix {
    pub fn new(rows: usize, sources: usize, classes: usize, votes: Vec<u16>) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config(format!("need at least two classes, got {classes}")));
        }
        if votes.len() != rows * sources {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{sources} votes"),
                found: format!("{} votes", votes.len()),
            });
        }
        if let Some(k) = votes.iter().position(|&v| usize::from(v) > classes) {
            return Err(Error::InvalidVote { row: k / sources, column: k % sources, value: i64::from(votes[k]) });
        }
        Ok(Self { rows, sources, classes, votes })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_sources(&self) -> usize {
        self.sources
    }

    pub fn n_classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, row: usize, source: usize) -> u16 {
        self.votes[row * self.sources + source]
    }

    pub fn row(&self, row: usize) -> &[u16] {
        &self.votes[row * self.sources..(row + 1) * self.sources]
    }

    /// Binary votes for `class` (1-based) against the rest.
    pub fn binarize(&self, class: u16) -> LabelMatrix {
        let votes = self.votes.iter().map(|&v| binary_vote(v, class)).collect();
        LabelMatrix::new(self.rows, self.sources, votes).expect("binary votes are ternary")
    }
}

fn binary_vote(v: u16, class: u16) -> Vote {
    match v {
        0 => 0,
        v if v == class => 1,
        _ => -1,
    }
}

/// Per-row class distributions, `n × k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProbabilities {
    classes: usize,
    probs: Vec<f64>,
}

impl ClassProbabilities {
    pub fn n_rows(&self) -> usize {
        self.probs.len() / self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.probs[row * self.classes..(row + 1) * self.classes]
    }

    /// Most probable class of each row, 1-based; ties go to the lower class.
    pub fn argmax(&self) -> Vec<u16> {
        self.probs
            .chunks(self.classes)
            .map(|r| {
                let best = r.iter().enumerate().fold(0, |b, (c, p)| if *p > r[b] { c } else { b });
                best as u16 + 1
            })
            .collect()
    }
}

/// One fitted binary model per class. With two classes a single model
/// covers both: class 1 is `+1` and class 2 is `-1`.
#[derive(Debug, Clone)]
pub struct OneVsAll {
    classes: usize,
    models: Vec<FittedModel>,
}

/// Fits the reduction. `g` must be a single-task graph over the sources and
/// `class_probs[c]` is the prior probability of class `c + 1`.
pub fn one_vs_all(l: &MulticlassMatrix, g: &DependencyGraph, class_probs: &[f64], cfg: &FitConfig) -> Result<OneVsAll> {
    let k = l.n_classes();
    if g.n_tasks() != 1 {
        return Err(Error::Config("one-vs-all needs a single-task graph".into()));
    }
    if class_probs.len() != k {
        return Err(Error::InvalidPrior(format!("{k} classes but {} class probabilities", class_probs.len())));
    }
    let total: f64 = class_probs.iter().sum();
    if class_probs.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidPrior("class probabilities must form a distribution".into()));
    }
    let mut voted = vec![false; k + 1];
    for &v in &l.votes {
        voted[usize::from(v)] = true;
    }
    if let Some(c) = (1..=k).find(|&c| !voted[c]) {
        return Err(Error::DegenerateClass { class: c - 1 });
    }
    let fit_class = |c: u16| -> Result<FittedModel> {
        let prior = ClassPrior::balance(class_probs[usize::from(c) - 1])?;
        LabelModel::new(g.clone(), prior)?.with_config(cfg.clone()).fit(&l.binarize(c))
    };
    let models = if k == 2 { vec![fit_class(1)?] } else { (1..=k as u16).map(fit_class).collect::<Result<_>>()? };
    Ok(OneVsAll { classes: k, models })
}

impl OneVsAll {
    pub fn n_classes(&self) -> usize {
        self.classes
    }

    /// Binary model for class `c` (1-based). With two classes both map to the same model.
    pub fn model(&self, class: u16) -> &FittedModel {
        &self.models[(usize::from(class) - 1).min(self.models.len() - 1)]
    }

    /// Combined class distribution for one vote row. Rows on which every
    /// binary posterior is zero get the uniform distribution.
    pub fn class_distribution(&self, votes: &[u16]) -> Result<Vec<f64>> {
        if self.models.len() == 1 {
            let lam: Vec<Vote> = votes.iter().map(|&v| binary_vote(v, 1)).collect();
            let p = self.models[0].posterior(&lam)?[0];
            return Ok(vec![p, 1.0 - p]);
        }
        let mut out = Vec::with_capacity(self.classes);
        let mut lam = Vec::with_capacity(votes.len());
        for (c, model) in (1..).zip(&self.models) {
            lam.clear();
            lam.extend(votes.iter().map(|&v| binary_vote(v, c)));
            out.push(model.posterior(&lam)?[0]);
        }
        let z: f64 = out.iter().sum();
        if z > 0.0 {
            out.iter_mut().for_each(|p| *p /= z);
        } else {
            out.fill(1.0 / self.classes as f64);
        }
        Ok(out)
    }

    pub fn predict_proba(&self, l: &MulticlassMatrix) -> Result<ClassProbabilities> {
        if l.n_classes() != self.classes {
            return Err(Error::ShapeMismatch {
                expected: format!("{} classes", self.classes),
                found: format!("{} classes", l.n_classes()),
            });
        }
        let mut probs = Vec::with_capacity(l.n_rows() * self.classes);
        for r in 0..l.n_rows() {
            probs.extend(self.class_distribution(l.row(r))?);
        }
        Ok(ClassProbabilities { classes: self.classes, probs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{ClassSource, ClassStarModel};

    fn sources(correct: &[f64]) -> Vec<ClassSource> {
        correct.iter().map(|&c| ClassSource { abstain: 0.2, correct: c }).collect()
    }

    #[test]
    fn two_classes_reduce_to_one_binary_model() {
        let model = ClassStarModel::new(vec![0.5, 0.5], sources(&[0.85, 0.75, 0.7])).unwrap();
        let (l, _) = model.sample(5000, 1);
        let g = DependencyGraph::star(3);
        let ova = one_vs_all(&l, &g, &[0.5, 0.5], &FitConfig::default()).unwrap();
        let binary = LabelModel::new(g, ClassPrior::balance(0.5).unwrap()).unwrap().fit(&l.binarize(1)).unwrap();
        let probs = ova.predict_proba(&l).unwrap();
        for r in 0..50 {
            let lam: Vec<Vote> = l.row(r).iter().map(|&v| binary_vote(v, 1)).collect();
            assert_eq!(probs.row(r)[0], binary.posterior(&lam).unwrap()[0]);
        }
    }

    #[test]
    fn symmetric_classes_give_uniform_on_abstain() {
        let third = 1.0 / 3.0;
        let model = ClassStarModel::new(vec![third; 3], sources(&[0.8, 0.75, 0.7, 0.7])).unwrap();
        let (l, _) = model.sample(20_000, 2);
        let ova = one_vs_all(&l, &DependencyGraph::star(4), &[third; 3], &FitConfig::default()).unwrap();
        for p in ova.class_distribution(&[0, 0, 0, 0]).unwrap() {
            assert!((p - third).abs() < 1e-12);
        }
    }

    #[test]
    fn dominant_source_argmax_tracks_oracle() {
        let model = ClassStarModel::new(vec![0.4, 0.35, 0.25], sources(&[0.95, 0.65, 0.6, 0.6, 0.55])).unwrap();
        let (l, _) = model.sample(50_000, 3);
        let ova = one_vs_all(&l, &DependencyGraph::star(5), &model.class_probs, &FitConfig::default()).unwrap();
        let ours = ova.predict_proba(&l).unwrap().argmax();
        let agree = (0..l.n_rows())
            .filter(|&r| {
                let p = model.posterior(l.row(r));
                let best = (0..3).fold(0, |b, c| if p[c] > p[b] { c } else { b });
                ours[r] == best as u16 + 1
            })
            .count();
        let share = agree as f64 / l.n_rows() as f64;
        assert!(share >= 0.95, "argmax agreement {share}");
    }

    #[test]
    fn silent_class_is_rejected() {
        let l = MulticlassMatrix::new(2, 3, 3, vec![1, 2, 0, 2, 1, 1]).unwrap();
        let err = one_vs_all(&l, &DependencyGraph::star(3), &[0.4, 0.3, 0.3], &FitConfig::default()).unwrap_err();
        assert!(matches!(err, Error::DegenerateClass { class: 2 }));
        assert_eq!(err.to_string(), "class 3 never receives a vote");
    }

    #[test]
    fn out_of_range_vote() {
        assert!(matches!(MulticlassMatrix::new(1, 2, 3, vec![1, 4]), Err(Error::InvalidVote { column: 1, .. })));
    }
}
