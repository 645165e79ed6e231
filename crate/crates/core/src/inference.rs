//! Junction-tree inference: joint probabilities from clique and separator
//! tables, exact posteriors over task configurations, and per-row labels.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{arity, task_value, value_code, LabelMatrix, LabelModelParameters, MarginalTable, Vertex, Vote, MAX_JOINT_TASKS};

#[derive(Debug, Clone, PartialEq)]
struct Factor {
    /// `(vertex, stride)` for each member.
    members: Vec<(Vertex, usize)>,
    log_probs: Vec<f64>,
    /// Times the factor appears: `+1` for cliques, `-(d(S) - 1)` for separators.
    power: f64,
}

impl Factor {
    fn new(t: &MarginalTable, power: f64) -> Self {
        let mut stride = 1;
        let members = t
            .vars()
            .iter()
            .map(|&v| {
                let s = stride;
                stride *= arity(v);
                (v, s)
            })
            .collect();
        Self { members, log_probs: t.probs().iter().map(|p| p.ln()).collect(), power }
    }

    #[inline]
    fn lookup(&self, y_config: usize, lam: &[Vote]) -> f64 {
        let mut idx = 0;
        for &(v, stride) in &self.members {
            let value = match v {
                Vertex::Task(d) => task_value(y_config, d),
                Vertex::Source(i) => lam[i],
            };
            idx += value_code(v, value) * stride;
        }
        self.log_probs[idx]
    }
}

/// Parameter tables prepared for repeated evaluation in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledModel {
    tasks: usize,
    sources: usize,
    factors: Vec<Factor>,
}

impl CompiledModel {
    pub fn new(params: &LabelModelParameters) -> Result<Self> {
        if params.n_tasks() > MAX_JOINT_TASKS {
            return Err(Error::TooManyTasks { tasks: params.n_tasks(), limit: MAX_JOINT_TASKS });
        }
        let mut factors: Vec<Factor> = params.cliques().iter().map(|t| Factor::new(t, 1.0)).collect();
        factors.extend(
            params
                .separators()
                .iter()
                .filter(|s| s.degree > 1)
                .map(|s| Factor::new(&s.table, -((s.degree - 1) as f64))),
        );
        Ok(Self { tasks: params.n_tasks(), sources: params.n_sources(), factors })
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks
    }

    pub fn n_sources(&self) -> usize {
        self.sources
    }

    /// `ln P(Y = y, λ)` for task configuration `y_config`; `-inf` for zero mass.
    pub fn log_joint(&self, y_config: usize, lam: &[Vote]) -> Result<f64> {
        let mut total = 0.0;
        let mut zero_separator = false;
        for f in &self.factors {
            let lp = f.lookup(y_config, lam);
            if lp == f64::NEG_INFINITY {
                if f.power > 0.0 {
                    return Ok(f64::NEG_INFINITY);
                }
                zero_separator = true;
            } else {
                total += f.power * lp;
            }
        }
        if zero_separator {
            return Err(Error::ZeroSeparator);
        }
        Ok(total)
    }

    /// `P(Y = y | λ)` over all task configurations.
    pub fn posterior(&self, lam: &[Vote]) -> Result<Vec<f64>> {
        if lam.len() != self.sources {
            return Err(Error::ShapeMismatch {
                expected: format!("{} votes", self.sources),
                found: format!("{} votes", lam.len()),
            });
        }
        let logs: Vec<f64> = (0..1usize << self.tasks).map(|c| self.log_joint(c, lam)).collect::<Result<_>>()?;
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top == f64::NEG_INFINITY {
            return Err(Error::AllZeroLikelihood);
        }
        let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = weights.iter().sum();
        Ok(weights.iter().map(|w| w / z).collect())
    }

    /// `P(Y_d = +1 | λ)` for each task.
    pub fn task_marginals(&self, lam: &[Vote], out: &mut [f64]) -> Result<()> {
        let post = self.posterior(lam)?;
        for (d, slot) in out.iter_mut().enumerate() {
            *slot = post.iter().enumerate().filter(|(c, _)| c >> d & 1 == 0).map(|(_, p)| p).sum();
        }
        Ok(())
    }
}

/// `P(Y = y, λ)` from the junction-tree product.
pub fn joint_probability(params: &LabelModelParameters, y: &[i8], lam: &[Vote]) -> Result<f64> {
    let model = CompiledModel::new(params)?;
    let config = y.iter().enumerate().fold(0, |acc, (d, &v)| acc | usize::from(v < 0) << d);
    Ok(model.log_joint(config, lam)?.exp())
}

/// Posterior over task configurations (index bit `d` set means `Y_d = -1`).
pub fn posterior(params: &LabelModelParameters, lam: &[Vote]) -> Result<Vec<f64>> {
    CompiledModel::new(params)?.posterior(lam)
}

/// Per-row, per-task `P(Y_d = +1 | λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorLabels {
    rows: usize,
    tasks: usize,
    probs: Vec<f64>,
}

impl PosteriorLabels {
    pub fn new(rows: usize, tasks: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != rows * tasks {
            return Err(Error::ShapeMismatch {
                expected: format!("{rows}x{tasks} probabilities"),
                found: format!("{}", probs.len()),
            });
        }
        Ok(Self { rows, tasks, probs })
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks
    }

    pub fn get(&self, row: usize, task: usize) -> f64 {
        self.probs[row * self.tasks + task]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.probs[row * self.tasks..(row + 1) * self.tasks]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Hard labels: `+1` where `P(Y_d = +1) > 0.5`, `-1` where below, `0` on exact ties.
    pub fn hard_labels(&self) -> Vec<i8> {
        self.probs
            .iter()
            .map(|&p| if p > 0.5 { 1 } else if p < 0.5 { -1 } else { 0 })
            .collect()
    }

    /// CSV with header `row,task,p_pos`, 1-based indices, 9 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "row,task,p_pos")?;
        for r in 0..self.rows {
            for d in 0..self.tasks {
                writeln!(w, "{},{},{}", r + 1, d + 1, format_sig9(self.get(r, d)))?;
            }
        }
        Ok(())
    }
}

/// Nine significant digits in plain or exponent notation.
pub fn format_sig9(p: f64) -> String {
    if p == 0.0 || (1e-4..1e9).contains(&p.abs()) {
        let digits = if p == 0.0 { 8 } else { (8 - p.abs().log10().floor() as i32).max(0) as usize };
        format!("{p:.digits$}")
    } else {
        format!("{p:.8e}")
    }
}

/// Posterior marginals for every row of `l`.
pub fn predict_proba(l: &LabelMatrix, params: &LabelModelParameters) -> Result<PosteriorLabels> {
    predict_with(l, &CompiledModel::new(params)?)
}

pub(crate) fn predict_with(l: &LabelMatrix, model: &CompiledModel) -> Result<PosteriorLabels> {
    if l.n_sources() != model.n_sources() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} sources", model.n_sources()),
            found: format!("{} sources", l.n_sources()),
        });
    }
    let d = model.n_tasks();
    let mut probs = vec![0.0; l.n_rows() * d];
    if d > 0 {
        probs
            .par_chunks_mut(d)
            .enumerate()
            .try_for_each(|(r, out)| model.task_marginals(l.row(r), out))?;
    }
    PosteriorLabels::new(l.n_rows(), d, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SeparatorTable};
    use crate::oracle::{enumerate_joint, exact_statistics, CanonicalParameters, StarModel, StarSource};
    use crate::model::DependencyGraph;
    use proptest::prelude::*;

    fn single() -> LabelModelParameters {
        let t = MarginalTable::new(vec![Vertex::Task(0), Vertex::Source(0)], vec![0.4, 0.1, 0.05, 0.05, 0.05, 0.35])
            .unwrap();
        LabelModelParameters::new(1, 1, vec![t], vec![])
    }

    #[test]
    fn single_clique_lookup() {
        let p = joint_probability(&single(), &[1], &[1]).unwrap();
        assert!((p - 0.4).abs() < 1e-15);
        let post = posterior(&single(), &[1]).unwrap();
        assert!((post[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn two_sources_divide_by_separator() {
        let t = |i| {
            MarginalTable::new(vec![Vertex::Task(0), Vertex::Source(i)], vec![0.2, 0.05, 0.1, 0.1, 0.2, 0.35]).unwrap()
        };
        let sep = SeparatorTable { table: MarginalTable::new(vec![Vertex::Task(0)], vec![0.5, 0.5]).unwrap(), degree: 2 };
        let params = LabelModelParameters::new(1, 2, vec![t(0), t(1)], vec![sep]);
        let p = joint_probability(&params, &[1], &[1, -1]).unwrap();
        assert!((p - 0.2 * 0.2 / 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_abstain_gives_prior() {
        let star = StarModel::new(0.3, vec![StarSource { abstain: 0.4, correct: 0.8 }; 3]).unwrap();
        let post = posterior(&star.parameters(), &[0, 0, 0]).unwrap();
        assert!((post[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn empty_and_repeated_rows() {
        let params = single();
        let empty = LabelMatrix::new(0, 1, vec![]).unwrap();
        assert_eq!(predict_proba(&empty, &params).unwrap().n_rows(), 0);
        let l = LabelMatrix::from_rows(&[[1i8], [1], [1]]).unwrap();
        let out = predict_proba(&l, &params).unwrap();
        assert_eq!(out.get(0, 0), out.get(2, 0));
        let wrong = LabelMatrix::from_rows(&[[1i8, 1]]).unwrap();
        assert!(matches!(predict_proba(&wrong, &params), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn csv_format() {
        let out = PosteriorLabels::new(2, 1, vec![0.8, 1.0 / 3.0]).unwrap();
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "row,task,p_pos\n1,1,0.800000000\n2,1,0.333333333\n");
        assert_eq!(format_sig9(1.0), "1.00000000");
        assert_eq!(format_sig9(1.23456789e-7), "1.23456789e-7");
    }

    #[test]
    fn exact_tables_reproduce_enumerated_joint() {
        let g = DependencyGraph::builder(1, 4).assign_all(0).source_edge(0, 1).build().unwrap();
        let j = enumerate_joint(&CanonicalParameters::random(g.clone(), 11)).unwrap();
        let stats = exact_statistics(&j, &g).unwrap();
        let model = CompiledModel::new(&stats.parameters).unwrap();
        let obs = &stats.observable;
        let mut total = 0.0;
        for idx in 0..obs.probs().len() {
            let (y, lam) = obs.decode(idx);
            let p = model.log_joint(usize::from(y[0] < 0), &lam).unwrap().exp();
            assert!((p - obs.probs()[idx]).abs() < 1e-12);
            total += p;
        }
        assert!((total - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn posteriors_normalize(votes in proptest::collection::vec(-1i8..=1, 4), seed in 0u64..20) {
            let g = DependencyGraph::chain(2, 2);
            let j = enumerate_joint(&CanonicalParameters::random(g.clone(), seed)).unwrap();
            let stats = exact_statistics(&j, &g).unwrap();
            let post = posterior(&stats.parameters, &votes).unwrap();
            prop_assert!((post.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(post.iter().all(|p| (0.0..=1.0).contains(p)));
        }

        #[test]
        fn stronger_source_raises_posterior(
            base in 0.55f64..0.9,
            bump in 0.01f64..0.09,
            abstain in 0.0f64..0.5,
        ) {
            let mk = |c: f64| StarModel::new(0.5, vec![
                StarSource { abstain, correct: c },
                StarSource { abstain, correct: 0.7 },
                StarSource { abstain, correct: 0.7 },
            ]).unwrap();
            let weak = posterior(&mk(base).parameters(), &[1, 0, 0]).unwrap()[0];
            let strong = posterior(&mk(base + bump).parameters(), &[1, 0, 0]).unwrap()[0];
            prop_assert!(strong >= weak);
        }
    }
}
