use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Largest task count for which a full joint table over `{-1,+1}^D` is kept.
pub const MAX_JOINT_TASKS: usize = 20;

/// Value of task `d` in configuration index `config`: bit `d` set means `-1`.
#[inline]
pub fn task_value(config: usize, d: usize) -> i8 {
    if config >> d & 1 == 1 {
        -1
    } else {
        1
    }
}

/// User-supplied class distribution `P(Y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassPrior {
    /// Exact table over `{-1,+1}^D`, indexed as in [`task_value`].
    Joint { tasks: usize, probs: Vec<f64> },
    /// Per-task means `E[Y_d]` and pairwise means `E[Y_d Y_e]` for task edges.
    Factorized { means: Vec<f64>, pair_means: BTreeMap<(usize, usize), f64> },
}

impl ClassPrior {
    /// Single task with `P(Y = +1) = p`.
    pub fn balance(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::InvalidPrior(format!("class balance {p} is not a probability")));
        }
        Ok(ClassPrior::Joint { tasks: 1, probs: vec![p, 1.0 - p] })
    }

    pub fn uniform(tasks: usize) -> Result<Self> {
        let size = 1usize << tasks;
        Self::joint(tasks, vec![1.0 / size as f64; size])
    }

    pub fn joint(tasks: usize, probs: Vec<f64>) -> Result<Self> {
        if tasks > MAX_JOINT_TASKS {
            return Err(Error::InvalidPrior(format!(
                "{tasks} tasks exceed the joint-table limit of {MAX_JOINT_TASKS}; use factorized means"
            )));
        }
        if probs.len() != 1 << tasks {
            return Err(Error::InvalidPrior(format!(
                "joint table over {tasks} tasks needs {} entries, got {}",
                1usize << tasks,
                probs.len()
            )));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidPrior("joint table has a negative or non-finite entry".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPrior(format!("joint table sums to {total}, not 1")));
        }
        Ok(ClassPrior::Joint { tasks, probs })
    }

    pub fn factorized(means: Vec<f64>, pair_means: BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let d = means.len();
        if means.iter().chain(pair_means.values()).any(|m| !(-1.0..=1.0).contains(m)) {
            return Err(Error::InvalidPrior("means must lie in [-1, 1]".into()));
        }
        let mut normalized = BTreeMap::new();
        for (&(a, b), &v) in &pair_means {
            if a >= d || b >= d || a == b {
                return Err(Error::InvalidPrior(format!("bad task pair ({a}, {b})")));
            }
            normalized.insert((a.min(b), a.max(b)), v);
        }
        let prior = ClassPrior::Factorized { means, pair_means: normalized };
        for &(a, b) in prior.pair_keys().iter() {
            if prior.marginal_table(&[a, b])?.iter().any(|p| *p < -1e-12) {
                return Err(Error::InvalidPrior(format!("pair means for tasks {a},{b} are inconsistent")));
            }
        }
        Ok(prior)
    }

    fn pair_keys(&self) -> Vec<(usize, usize)> {
        match self {
            ClassPrior::Joint { .. } => Vec::new(),
            ClassPrior::Factorized { pair_means, .. } => pair_means.keys().copied().collect(),
        }
    }

    pub fn n_tasks(&self) -> usize {
        match self {
            ClassPrior::Joint { tasks, .. } => *tasks,
            ClassPrior::Factorized { means, .. } => means.len(),
        }
    }

    /// `E[Y_d]`.
    pub fn mean(&self, d: usize) -> f64 {
        match self {
            ClassPrior::Joint { probs, .. } => probs
                .iter()
                .enumerate()
                .map(|(c, p)| p * task_value(c, d) as f64)
                .sum(),
            ClassPrior::Factorized { means, .. } => means[d],
        }
    }

    /// `P(Y_d = +1)`.
    pub fn p_positive(&self, d: usize) -> f64 {
        (1.0 + self.mean(d)) / 2.0
    }

    /// `E[Y_d Y_e]`; falls back to the product of means for factorized priors
    /// without an explicit pair entry.
    pub fn pair_mean(&self, d: usize, e: usize) -> f64 {
        match self {
            ClassPrior::Joint { probs, .. } => probs
                .iter()
                .enumerate()
                .map(|(c, p)| p * (task_value(c, d) * task_value(c, e)) as f64)
                .sum(),
            ClassPrior::Factorized { means, pair_means } => pair_means
                .get(&(d.min(e), d.max(e)))
                .copied()
                .unwrap_or(means[d] * means[e]),
        }
    }

    /// Marginal table over `tasks` (in the given order, first varying fastest;
    /// value index 0 is `+1`).
    pub fn marginal_table(&self, tasks: &[usize]) -> Result<Vec<f64>> {
        let k = tasks.len();
        match self {
            ClassPrior::Joint { probs, .. } => {
                let mut out = vec![0.0; 1 << k];
                for (c, p) in probs.iter().enumerate() {
                    let idx = tasks
                        .iter()
                        .enumerate()
                        .fold(0, |acc, (slot, &d)| acc | ((c >> d & 1) << slot));
                    out[idx] += p;
                }
                Ok(out)
            }
            ClassPrior::Factorized { .. } => match tasks {
                [] => Ok(vec![1.0]),
                [d] => {
                    let m = self.mean(*d);
                    Ok(vec![(1.0 + m) / 2.0, (1.0 - m) / 2.0])
                }
                [d, e] => {
                    let (md, me, mde) = (self.mean(*d), self.mean(*e), self.pair_mean(*d, *e));
                    Ok((0..4)
                        .map(|c| {
                            let (yd, ye) = (task_value(c, 0) as f64, task_value(c, 1) as f64);
                            (1.0 + yd * md + ye * me + yd * ye * mde) / 4.0
                        })
                        .collect())
                }
                _ => Err(Error::InvalidPrior(
                    "factorized priors only provide marginals over one or two tasks".into(),
                )),
            },
        }
    }

    /// Full table over all task configurations, if representable.
    pub fn joint_table(&self) -> Result<Vec<f64>> {
        let d = self.n_tasks();
        if d > MAX_JOINT_TASKS {
            return Err(Error::TooManyTasks { tasks: d, limit: MAX_JOINT_TASKS });
        }
        match self {
            ClassPrior::Joint { probs, .. } => Ok(probs.clone()),
            ClassPrior::Factorized { .. } if d <= 2 => self.marginal_table(&(0..d).collect::<Vec<_>>()),
            ClassPrior::Factorized { .. } => Err(Error::InvalidPrior(
                "factorized prior over more than two tasks has no joint table".into(),
            )),
        }
    }
}
