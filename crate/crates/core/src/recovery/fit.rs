use std::collections::BTreeMap;
use std::fmt;

use log::warn;

use super::rhs::{assemble_rhs, PairConditionals};
use super::transform::{build_transform, solve_marginal, TransformPair};
use crate::augment::{augment_graph, augment_matrix, AbstainPolicy, AugmentedGraph};
use crate::error::{Error, Result};
use crate::inference::{predict_with, CompiledModel, PosteriorLabels};
use crate::model::{
    build_junction_tree, describe, validate_graph, ClassPrior, DependencyGraph, LabelMatrix, LabelModelParameters,
    MarginalTable, SeparatorTable, Vertex, Vote,
};
use crate::moments::{
    conditional_accuracy, estimate_accuracies, Accuracies, AccuracyConfig, AccuracyReport, MomentEstimates,
    StatsLayout, SufficientStats,
};

/// Everything that controls a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub accuracy: AccuracyConfig,
    pub policy: AbstainPolicy,
    /// Raw solved entries may leave `[0, 1]` by at most this much before the
    /// solve counts as unstable.
    pub clip_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { accuracy: AccuracyConfig::default(), policy: AbstainPolicy::Alternating, clip_threshold: 0.05 }
    }
}

/// What happened during a fit, for reports and debugging.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub sample_count: Option<u64>,
    pub triplets_per_source: Vec<usize>,
    pub degenerate_triplets: usize,
    pub isolated_source: Option<usize>,
    pub sign_ties: Vec<usize>,
    pub ratio_sources: Vec<usize>,
    /// `(source, conditioning source)` pairs that fell back to the unconditional accuracy.
    pub conditional_fallbacks: Vec<(usize, usize)>,
    /// Clip magnitude per solved table.
    pub clips: Vec<(String, f64)>,
}

impl Diagnostics {
    pub fn max_clip(&self) -> f64 {
        self.clips.iter().map(|c| c.1).fold(0.0, f64::max)
    }
}

fn list(xs: &[usize], prefix: &str) -> String {
    if xs.is_empty() {
        "none".into()
    } else {
        xs.iter().map(|x| format!("{prefix}{}", x + 1)).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sample_count {
            Some(n) => writeln!(f, "samples: {n}")?,
            None => writeln!(f, "samples: exact")?,
        }
        let counts: Vec<String> =
            self.triplets_per_source.iter().enumerate().map(|(i, c)| format!("L{}={c}", i + 1)).collect();
        writeln!(f, "triplets per source: {}", counts.join(" "))?;
        writeln!(f, "degenerate triplets skipped: {}", self.degenerate_triplets)?;
        writeln!(f, "isolated low-accuracy source: {}", self.isolated_source.map_or("none".into(), |i| format!("L{}", i + 1)))?;
        writeln!(f, "ratio fallback: {}", list(&self.ratio_sources, "L"))?;
        writeln!(f, "sign ties: {}", list(&self.sign_ties, "Y"))?;
        let fb: Vec<String> =
            self.conditional_fallbacks.iter().map(|(j, i)| format!("L{}|L{}", j + 1, i + 1)).collect();
        writeln!(f, "conditional fallbacks: {}", if fb.is_empty() { "none".into() } else { fb.join(" ") })?;
        writeln!(f, "max clip: {:.3e}", self.max_clip())?;
        for (name, clip) in &self.clips {
            writeln!(f, "  {name}: {clip:.3e}")?;
        }
        Ok(())
    }
}

/// Output of parameter recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub parameters: LabelModelParameters,
    pub accuracies: Accuracies,
    pub diagnostics: Diagnostics,
}

struct Solver<'a> {
    mom: &'a MomentEstimates,
    graph: &'a AugmentedGraph,
    cfg: &'a FitConfig,
    acc: &'a AccuracyReport,
    transforms: [TransformPair; 2],
    conditionals: BTreeMap<(usize, usize), f64>,
    diagnostics: Diagnostics,
}

impl Solver<'_> {
    /// `E[λ_j Y | λ_given = 0]`, or the unconditional accuracy when too few rows abstain.
    fn conditional(&mut self, j: usize, given: usize) -> Result<f64> {
        if let Some(&v) = self.conditionals.get(&(j, given)) {
            return Ok(v);
        }
        let acc = &self.acc.accuracies;
        let v = match conditional_accuracy(j, given, self.mom, self.graph, acc, &self.cfg.accuracy) {
            Ok(v) => v,
            Err(e @ Error::TooFewAbstainRows { .. }) => {
                warn!("{e}; using the unconditional accuracy of L{}", j + 1);
                self.diagnostics.conditional_fallbacks.push((j, given));
                acc.source(j)
            }
            Err(e) => return Err(e),
        };
        self.conditionals.insert((j, given), v);
        Ok(v)
    }

    fn table(&mut self, vars: &[Vertex]) -> Result<MarginalTable> {
        let tasks: Vec<usize> = vars.iter().filter_map(|v| if let Vertex::Task(d) = v { Some(*d) } else { None }).collect();
        let sources: Vec<usize> =
            vars.iter().filter_map(|v| if let Vertex::Source(i) = v { Some(*i) } else { None }).collect();
        if sources.is_empty() {
            return MarginalTable::new(vars.to_vec(), self.mom.prior.marginal_table(&tasks)?);
        }
        let task = match tasks[..] {
            [d] => d,
            _ => return Err(Error::UnsupportedClique { members: describe(vars) }),
        };
        let cond = match sources[..] {
            [i, j] => Some(PairConditionals { j_given_i: self.conditional(j, i)?, i_given_j: self.conditional(i, j)? }),
            [_] => None,
            _ => return Err(Error::UnsupportedCliqueSize { size: sources.len() }),
        };
        let r = assemble_rhs(task, &sources, &self.acc.accuracies, self.mom, cond)?;
        let name = describe(vars);
        let solved = solve_marginal(&self.transforms[sources.len() - 1], &r.0, self.cfg.clip_threshold, &name)?;
        self.diagnostics.clips.push((name, solved.clip));
        MarginalTable::new(vars.to_vec(), solved.probs)
    }
}

/// Recovers every clique and separator table from observable moments.
pub fn recover_from_moments(mom: &MomentEstimates, g: &DependencyGraph, cfg: &FitConfig) -> Result<Recovery> {
    let g = validate_graph(g)?;
    if mom.n_sources() != g.n_sources() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} sources", g.n_sources()),
            found: format!("{} sources", mom.n_sources()),
        });
    }
    if mom.prior.n_tasks() != g.n_tasks() {
        return Err(Error::InvalidPrior(format!(
            "prior covers {} tasks, graph has {}",
            mom.prior.n_tasks(),
            g.n_tasks()
        )));
    }
    let ag = augment_graph(&g);
    let report = estimate_accuracies(mom, &ag, &cfg.accuracy)?;
    let jt = build_junction_tree(&g)?;
    let mut solver = Solver {
        mom,
        graph: &ag,
        cfg,
        acc: &report,
        transforms: [build_transform(1), build_transform(2)],
        conditionals: BTreeMap::new(),
        diagnostics: Diagnostics {
            sample_count: mom.sample_count,
            triplets_per_source: (0..g.n_sources()).map(|i| report.plan.triplets(i).len()).collect(),
            degenerate_triplets: report.degenerate_triplets,
            isolated_source: report.isolated,
            sign_ties: report.sign_ties.clone(),
            ratio_sources: report.ratio_sources.clone(),
            ..Diagnostics::default()
        },
    };
    let mut cliques = Vec::with_capacity(jt.cliques().len());
    for c in jt.cliques() {
        cliques.push(solver.table(c).map_err(|e| e.in_clique(describe(c)))?);
    }
    let mut separators = Vec::with_capacity(jt.separators().len());
    for s in jt.separators() {
        let table = solver.table(&s.members).map_err(|e| e.in_clique(describe(&s.members)))?;
        separators.push(SeparatorTable { table, degree: s.degree });
    }
    let diagnostics = solver.diagnostics;
    Ok(Recovery {
        parameters: LabelModelParameters::new(g.n_tasks(), g.n_sources(), cliques, separators),
        accuracies: report.accuracies,
        diagnostics,
    })
}

/// Augments, counts, and recovers in one call.
pub fn recover_parameters(
    l: &LabelMatrix,
    g: &DependencyGraph,
    prior: &ClassPrior,
    cfg: &FitConfig,
) -> Result<Recovery> {
    LabelModel::new(g.clone(), prior.clone())?.with_config(cfg.clone()).recover(l)
}

/// Unfitted model: structure, prior and settings.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelModel {
    graph: DependencyGraph,
    prior: ClassPrior,
    config: FitConfig,
}

impl LabelModel {
    pub fn new(graph: DependencyGraph, prior: ClassPrior) -> Result<Self> {
        let graph = validate_graph(&graph)?;
        if prior.n_tasks() != graph.n_tasks() {
            return Err(Error::InvalidPrior(format!(
                "prior covers {} tasks, graph has {}",
                prior.n_tasks(),
                graph.n_tasks()
            )));
        }
        Ok(Self { graph, prior, config: FitConfig::default() })
    }

    pub fn with_config(mut self, config: FitConfig) -> Self {
        self.config = config;
        self
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn prior(&self) -> &ClassPrior {
        &self.prior
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    /// Statistics this model needs from the data.
    pub fn stats_layout(&self) -> StatsLayout {
        StatsLayout::for_graph(&self.graph)
    }

    fn check_shape(&self, l: &LabelMatrix) -> Result<()> {
        if l.n_sources() != self.graph.n_sources() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} sources", self.graph.n_sources()),
                found: format!("{} sources", l.n_sources()),
            });
        }
        Ok(())
    }

    pub fn recover(&self, l: &LabelMatrix) -> Result<Recovery> {
        self.check_shape(l)?;
        let aug = augment_matrix(l, self.config.policy);
        let stats = SufficientStats::from_augmented(&aug, self.stats_layout())?;
        self.recover_stats(&stats)
    }

    pub fn recover_stats(&self, stats: &SufficientStats) -> Result<Recovery> {
        let mom = MomentEstimates::from_stats(stats, &self.prior)?;
        recover_from_moments(&mom, &self.graph, &self.config)
    }

    pub fn fit(&self, l: &LabelMatrix) -> Result<FittedModel> {
        FittedModel::from_recovery(self.recover(l)?)
    }

    pub fn fit_stats(&self, stats: &SufficientStats) -> Result<FittedModel> {
        FittedModel::from_recovery(self.recover_stats(stats)?)
    }

    pub fn fit_moments(&self, mom: &MomentEstimates) -> Result<FittedModel> {
        FittedModel::from_recovery(recover_from_moments(mom, &self.graph, &self.config)?)
    }
}

/// Fitted parameters ready for inference.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    parameters: LabelModelParameters,
    compiled: CompiledModel,
    accuracies: Option<Accuracies>,
    diagnostics: Diagnostics,
}

impl FittedModel {
    fn from_recovery(r: Recovery) -> Result<Self> {
        Ok(Self {
            compiled: CompiledModel::new(&r.parameters)?,
            parameters: r.parameters,
            accuracies: Some(r.accuracies),
            diagnostics: r.diagnostics,
        })
    }

    /// Wraps tables loaded from disk or built by hand.
    pub fn from_parameters(parameters: LabelModelParameters) -> Result<Self> {
        Ok(Self {
            compiled: CompiledModel::new(&parameters)?,
            parameters,
            accuracies: None,
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn parameters(&self) -> &LabelModelParameters {
        &self.parameters
    }

    /// Recovered accuracies; `None` for models loaded from tables.
    pub fn accuracies(&self) -> Option<&Accuracies> {
        self.accuracies.as_ref()
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn compiled(&self) -> &CompiledModel {
        &self.compiled
    }

    /// Posterior over task configurations for one vote row.
    pub fn posterior(&self, lam: &[Vote]) -> Result<Vec<f64>> {
        self.compiled.posterior(lam)
    }

    pub fn predict_proba(&self, l: &LabelMatrix) -> Result<PosteriorLabels> {
        predict_with(l, &self.compiled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{enumerate_joint, exact_statistics, CanonicalParameters, StarModel, StarSource};

    fn closure_error(g: &DependencyGraph, seed: u64, cfg: &FitConfig) -> f64 {
        let mut theta = CanonicalParameters::random(g.clone(), seed);
        for t in &mut theta.theta_task {
            *t = 0.5;
        }
        let stats = exact_statistics(&enumerate_joint(&theta).unwrap(), g).unwrap();
        let rec = recover_from_moments(&stats.moments, g, cfg).unwrap();
        rec.parameters.max_abs_difference(&stats.parameters).unwrap()
    }

    #[test]
    fn exact_moments_close_the_loop() {
        let graphs = [
            DependencyGraph::star(3),
            DependencyGraph::star(5),
            DependencyGraph::builder(1, 5).assign_all(0).source_edge(0, 1).build().unwrap(),
            DependencyGraph::builder(1, 6).assign_all(0).source_edge(0, 1).source_edge(1, 2).build().unwrap(),
            DependencyGraph::chain(2, 3),
        ];
        for g in &graphs {
            for seed in 0..3 {
                let err = closure_error(g, seed, &FitConfig::default());
                assert!(err < 1e-9, "{g:?} seed {seed}: {err}");
            }
        }
    }

    #[test]
    fn ratio_fallback_covers_small_models() {
        let mut cfg = FitConfig::default();
        cfg.accuracy.ratio_fallback = true;
        let g = DependencyGraph::builder(1, 3).assign_all(0).source_edge(0, 1).build().unwrap();
        assert!(closure_error(&g, 4, &cfg) < 1e-9);
        let two = DependencyGraph::star(2);
        assert!(closure_error(&two, 4, &cfg) < 1e-9);
        let err = recover_from_moments(
            &exact_statistics(&enumerate_joint(&CanonicalParameters::random(two.clone(), 1)).unwrap(), &two)
                .unwrap()
                .moments,
            &two,
            &FitConfig::default(),
        );
        assert!(matches!(err, Err(Error::TooFewSources { found: 2 })));
    }

    #[test]
    fn sampled_star_recovers_tables() {
        let star = StarModel::new(
            0.5,
            [0.8, 0.7, 0.6, 0.75, 0.65].iter().map(|&c| StarSource { abstain: 0.2, correct: c }).collect(),
        )
        .unwrap();
        let s = star.sample(100_000, 3);
        let model = LabelModel::new(star.graph(), star.prior()).unwrap();
        let fitted = model.fit(&s.labels).unwrap();
        let err = fitted.parameters().max_abs_difference(&star.parameters()).unwrap();
        assert!(err < 0.02, "{err}");
        assert!(fitted.parameters().separator_inconsistency() < 0.02);
        assert!(fitted.diagnostics().to_string().contains("samples: 100000"));
    }

    #[test]
    fn prior_must_match_tasks() {
        let err = LabelModel::new(DependencyGraph::chain(2, 3), ClassPrior::balance(0.5).unwrap());
        assert!(matches!(err, Err(Error::InvalidPrior(_))));
    }
}
