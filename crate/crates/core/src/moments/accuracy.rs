use log::warn;

use super::stats::MomentEstimates;
use super::triplets::{aggregate, combine, enumerate_triplets, solve_triplet, Aggregation, Tolerances, TripletMode, TripletPlan};
use crate::augment::AugmentedGraph;
use crate::error::{Error, Result};

/// How the sign ambiguity of triplet magnitudes is broken.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SignStrategy {
    /// Per task, pick the flip that makes the accuracy sum nonnegative.
    #[default]
    NonnegativeSum,
    /// Fix the listed `(source, sign)` pairs and propagate through agreement rates.
    Anchor(Vec<(usize, i8)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccuracyOrigin {
    Triplet { used: usize },
    Ratio,
}

/// Signed accuracies `a_i = E[v_{2i-1} Y]`, one per source. The second
/// column of each pair carries the negated value.
#[derive(Debug, Clone, PartialEq)]
pub struct Accuracies {
    values: Vec<f64>,
    origin: Vec<AccuracyOrigin>,
}

impl Accuracies {
    pub fn new(values: Vec<f64>, origin: Vec<AccuracyOrigin>) -> Self {
        Self { values, origin }
    }

    /// Triplet-origin accuracies from plain values.
    pub fn from_values(values: Vec<f64>) -> Self {
        let origin = vec![AccuracyOrigin::Triplet { used: 0 }; values.len()];
        Self { values, origin }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Accuracy of a 0-based observed column.
    pub fn column(&self, c: usize) -> f64 {
        if c.is_multiple_of(2) {
            self.values[c / 2]
        } else {
            -self.values[c / 2]
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin(&self, i: usize) -> AccuracyOrigin {
        self.origin[i]
    }
}

/// Settings for accuracy recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyConfig {
    pub aggregation: Aggregation,
    pub mode: TripletMode,
    pub signs: SignStrategy,
    pub ratio_fallback: bool,
    pub isolate_lowest: bool,
    pub tol: Tolerances,
}

impl Default for AccuracyConfig {
    fn default() -> Self {
        Self {
            aggregation: Aggregation::Mean,
            mode: TripletMode::All,
            signs: SignStrategy::NonnegativeSum,
            ratio_fallback: false,
            isolate_lowest: true,
            tol: Tolerances::default(),
        }
    }
}

/// Accuracies plus what it took to get them.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyReport {
    pub accuracies: Accuracies,
    pub plan: TripletPlan,
    pub degenerate_triplets: usize,
    pub isolated: Option<usize>,
    /// Tasks whose accuracy sum was zero under both flips.
    pub sign_ties: Vec<usize>,
    pub ratio_sources: Vec<usize>,
}

/// Signs for the given magnitudes. Returns signed values (`None` where no
/// magnitude was given) and the tasks that hit a sign tie.
///
/// Within each task the largest magnitude is fixed first; every other source
/// takes the sign of `Σ_k M_jk s_k` over already-signed, independent sources,
/// visiting sources in decreasing magnitude.
pub fn resolve_signs(
    magnitudes: &[Option<f64>],
    m: &dyn Fn(usize, usize) -> f64,
    g: &AugmentedGraph,
    strategy: &SignStrategy,
) -> Result<(Vec<Option<f64>>, Vec<usize>)> {
    let n = magnitudes.len();
    let mut signs: Vec<Option<f64>> = vec![None; n];
    let mut ties = Vec::new();
    if let SignStrategy::Anchor(anchors) = strategy {
        for &(i, s) in anchors {
            if i >= n {
                return Err(Error::IndexOutOfRange { what: "anchor source", index: i, limit: n });
            }
            if magnitudes[i].is_some() {
                signs[i] = Some(if s < 0 { -1.0 } else { 1.0 });
            }
        }
    }
    for task in 0..g.n_tasks() {
        let members: Vec<usize> =
            (0..n).filter(|&i| magnitudes[i].is_some() && g.task_of_source(i) == task).collect();
        let mag = |i: usize| magnitudes[i].unwrap_or(0.0);
        let by_size = |a: &usize, b: &usize| mag(*b).total_cmp(&mag(*a)).then(a.cmp(b));
        let mut components: Vec<Vec<usize>> = Vec::new();
        loop {
            let next = members
                .iter()
                .copied()
                .filter(|&j| signs[j].is_none())
                .filter(|&j| members.iter().any(|&k| signs[k].is_some() && !g.sources_dependent(j, k)))
                .min_by(by_size);
            match next {
                Some(j) => {
                    let pull: f64 = members
                        .iter()
                        .filter(|&&k| !g.sources_dependent(j, k))
                        .filter_map(|&k| signs[k].map(|s| m(j, k) * s))
                        .sum();
                    signs[j] = Some(if pull < 0.0 { -1.0 } else { 1.0 });
                    if let Some(c) = components.last_mut() {
                        c.push(j);
                    }
                }
                None => {
                    let rest = members.iter().copied().filter(|&j| signs[j].is_none()).min_by(by_size);
                    match (rest, strategy) {
                        (None, _) => break,
                        (Some(j), SignStrategy::Anchor(_)) => {
                            return Err(Error::AnchorUnreachable { source_index: j })
                        }
                        (Some(j), SignStrategy::NonnegativeSum) => {
                            signs[j] = Some(1.0);
                            components.push(vec![j]);
                        }
                    }
                }
            }
        }
        if *strategy == SignStrategy::NonnegativeSum {
            for comp in components {
                let total: f64 = comp.iter().map(|&i| mag(i) * signs[i].unwrap()).sum();
                if total < 0.0 {
                    for &i in &comp {
                        signs[i] = signs[i].map(|s| -s);
                    }
                } else if total == 0.0 {
                    ties.push(task);
                }
            }
        }
    }
    let signed = magnitudes.iter().zip(&signs).map(|(m, s)| m.zip(*s).map(|(m, s)| m * s)).collect();
    Ok((signed, ties))
}

/// `E[v_{2i-1}] / E[Y(i)]`, clamped to `[-1, 1]`.
pub fn ratio_accuracy(i: usize, mom: &MomentEstimates, g: &AugmentedGraph, tol: &Tolerances) -> Result<f64> {
    let task = g.task_of_source(i);
    let mean = mom.prior.mean(task);
    if mean.abs() < tol.eps_prior {
        return Err(Error::PriorNearZero { task, mean });
    }
    Ok((mom.first[2 * i] / mean).clamp(-1.0, 1.0))
}

/// Full accuracy recovery: triplets, aggregation, signs and the ratio fallback.
pub fn estimate_accuracies(mom: &MomentEstimates, g: &AugmentedGraph, cfg: &AccuracyConfig) -> Result<AccuracyReport> {
    let m_sources = g.n_sources();
    if m_sources < 3 && !cfg.ratio_fallback {
        return Err(Error::TooFewSources { found: m_sources });
    }
    let plan = enumerate_triplets(g, cfg.tol.max_triplets);
    if plan.is_empty() && !cfg.ratio_fallback {
        return Err(Error::InsufficientIndependence);
    }
    let m = |i: usize, j: usize| mom.source_m(i, j);
    let mags = aggregate(&plan, &m, cfg.aggregation, cfg.mode, cfg.isolate_lowest, &cfg.tol);
    let (signed, sign_ties) = resolve_signs(&mags.values, &m, g, &cfg.signs)?;
    let mut values = Vec::with_capacity(m_sources);
    let mut origin = Vec::with_capacity(m_sources);
    let mut ratio_sources = Vec::new();
    for i in 0..m_sources {
        match signed[i] {
            Some(v) => {
                values.push(v);
                origin.push(AccuracyOrigin::Triplet { used: mags.used[i] });
            }
            None if cfg.ratio_fallback => {
                let v = ratio_accuracy(i, mom, g, &cfg.tol)?;
                if v.abs() < cfg.tol.eps_acc {
                    warn!("source {} looks uninformative (ratio accuracy {v:.2e})", i + 1);
                }
                values.push(v);
                origin.push(AccuracyOrigin::Ratio);
                ratio_sources.push(i);
            }
            None => return Err(Error::NoUsableTriplet { source_index: i }),
        }
    }
    for &t in &sign_ties {
        warn!("accuracy signs for task {} are tied; keeping the reference source positive", t + 1);
    }
    Ok(AccuracyReport {
        accuracies: Accuracies::new(values, origin),
        plan,
        degenerate_triplets: mags.degenerate,
        isolated: mags.isolated,
        sign_ties,
        ratio_sources,
    })
}

/// `E[λ_j Y | λ_given = 0]` from the moments restricted to rows where
/// `given` abstains. Signs follow `Σ_k M^(given)_jk a_k` with the
/// unconditional accuracies.
pub fn conditional_accuracy(
    j: usize,
    given: usize,
    mom: &MomentEstimates,
    g: &AugmentedGraph,
    acc: &Accuracies,
    cfg: &AccuracyConfig,
) -> Result<f64> {
    let cm = mom.conditioned.get(&given).ok_or_else(|| {
        Error::Config(format!("no abstain-conditioned statistics were collected for source {}", given + 1))
    })?;
    if let Some(rows) = cm.rows {
        if rows < cfg.tol.min_abstain_rows {
            return Err(Error::TooFewAbstainRows {
                source_index: given,
                rows,
                required: cfg.tol.min_abstain_rows,
            });
        }
    }
    if cm.mass == 0.0 {
        return Ok(acc.source(j));
    }
    let m = g.n_sources();
    let task = g.task_of_source(j);
    let pool: Vec<usize> = (0..m)
        .filter(|&k| g.task_of_source(k) == task)
        .filter(|&k| !g.sources_dependent(k, j) && !g.sources_dependent(k, given))
        .collect();
    let cm_at = |a: usize, b: usize| cm.second[a * m + b];
    let mut mags = Vec::new();
    let mut partners = Vec::new();
    'outer: for (x, &k) in pool.iter().enumerate() {
        for &l in &pool[x + 1..] {
            if mags.len() == cfg.tol.max_triplets {
                break 'outer;
            }
            if g.sources_dependent(k, l) {
                continue;
            }
            if let Some(v) = solve_triplet(cm_at(j, k), cm_at(j, l), cm_at(k, l), &cfg.tol) {
                mags.push(v[0]);
                partners.extend([k, l]);
            }
        }
    }
    if let Some(mag) = combine(&mut mags, cfg.aggregation) {
        partners.sort_unstable();
        partners.dedup();
        let pull: f64 = partners.iter().map(|&k| cm_at(j, k) * acc.source(k)).sum();
        return Ok(if pull < 0.0 { -mag } else { mag });
    }
    if cfg.ratio_fallback {
        let mean = mom.prior.mean(task);
        if mean.abs() < cfg.tol.eps_prior {
            return Err(Error::PriorNearZero { task, mean });
        }
        // abstaining is independent of the task, so E[Y | λ_given = 0] = E[Y]
        return Ok((cm.first[j] / mean).clamp(-1.0, 1.0));
    }
    Err(Error::NoUsableTriplet { source_index: j })
}
