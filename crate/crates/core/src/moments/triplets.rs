use crate::augment::AugmentedGraph;
use crate::error::{Error, Result};

/// Numerical guards for the closed-form solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Smallest usable `|E[v_j v_k]|` in a triplet denominator.
    pub eps_den: f64,
    /// Floor for recovered accuracy magnitudes.
    pub eps_acc: f64,
    /// Smallest `|E[Y]|` for the ratio fallback.
    pub eps_prior: f64,
    /// Triplets kept per source, first in lexicographic order.
    pub max_triplets: usize,
    /// Abstain rows needed before a conditional accuracy is trusted.
    pub min_abstain_rows: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { eps_den: 1e-4, eps_acc: 1e-3, eps_prior: 1e-2, max_triplets: 500, min_abstain_rows: 50 }
    }
}

/// For each source, the partner pairs `(j, k)` whose odd columns are
/// pairwise conditionally independent of its own given its task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripletPlan {
    per_source: Vec<Vec<(usize, usize)>>,
}

impl TripletPlan {
    pub fn n_sources(&self) -> usize {
        self.per_source.len()
    }

    pub fn triplets(&self, source: usize) -> &[(usize, usize)] {
        &self.per_source[source]
    }

    /// Observed columns of every triple for `source` (0-based, odd columns).
    pub fn column_triples(&self, source: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.per_source[source].iter().map(move |&(j, k)| (2 * source, 2 * j, 2 * k))
    }

    /// Sources with at least one triplet.
    pub fn covered(&self) -> Vec<usize> {
        (0..self.per_source.len()).filter(|&i| !self.per_source[i].is_empty()).collect()
    }

    /// Sources left for the ratio fallback.
    pub fn uncovered(&self) -> Vec<usize> {
        (0..self.per_source.len()).filter(|&i| self.per_source[i].is_empty()).collect()
    }

    /// Total number of listed triplets.
    pub fn len(&self) -> usize {
        self.per_source.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Lists valid triplets, capped at `max_per_source` per source.
///
/// Partners must share the source's task: for a partner on another task the
/// pairwise moment mixes two hidden variables and the closed form no longer
/// isolates one accuracy.
pub fn enumerate_triplets(g: &AugmentedGraph, max_per_source: usize) -> TripletPlan {
    let m = g.n_sources();
    let mut by_task: Vec<Vec<usize>> = vec![Vec::new(); g.n_tasks()];
    for i in 0..m {
        by_task[g.task_of_source(i)].push(i);
    }
    let per_source = (0..m)
        .map(|i| {
            let pool: Vec<usize> = by_task[g.task_of_source(i)]
                .iter()
                .copied()
                .filter(|&j| !g.sources_dependent(i, j))
                .collect();
            let mut out = Vec::new();
            'outer: for (a, &j) in pool.iter().enumerate() {
                for &k in &pool[a + 1..] {
                    if out.len() == max_per_source {
                        break 'outer;
                    }
                    if !g.sources_dependent(j, k) {
                        out.push((j, k));
                    }
                }
            }
            out
        })
        .collect();
    TripletPlan { per_source }
}

/// Magnitudes `(|a_i|, |a_j|, |a_k|)` from the three pairwise moments,
/// each clamped into `[eps_acc, 1]`.
pub fn solve_triplet(m_ij: f64, m_ik: f64, m_jk: f64, tol: &Tolerances) -> Option<[f64; 3]> {
    if m_ij.abs() < tol.eps_den || m_ik.abs() < tol.eps_den || m_jk.abs() < tol.eps_den {
        return None;
    }
    let clamp = |x: f64| x.sqrt().clamp(tol.eps_acc, 1.0);
    Some([
        clamp((m_ij * m_ik / m_jk).abs()),
        clamp((m_ij * m_jk / m_ik).abs()),
        clamp((m_ik * m_jk / m_ij).abs()),
    ])
}

/// Checked variant of [`solve_triplet`] naming the offending sources.
pub fn try_solve_triplet(
    m: impl Fn(usize, usize) -> f64,
    (i, j, k): (usize, usize, usize),
    tol: &Tolerances,
) -> Result<[f64; 3]> {
    solve_triplet(m(i, j), m(i, k), m(j, k), tol).ok_or(Error::DegenerateTriplet { i, j, k })
}

/// How per-triplet magnitudes are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

/// Which triplets feed each source's estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TripletMode {
    /// Every listed triplet, aggregated.
    #[default]
    All,
    /// Single pass: each unsolved source takes its first usable triplet and
    /// all three members are solved from it.
    Greedy,
    /// Only the `n`-th usable triplet (modulo the count) of each source.
    Single(usize),
}

/// Combines values after sorting, so the result does not depend on the
/// order triplets were evaluated in.
pub fn combine(values: &mut [f64], how: Aggregation) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(match how {
        Aggregation::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Aggregation::Median => {
            let h = values.len() / 2;
            if values.len() % 2 == 1 {
                values[h]
            } else {
                (values[h - 1] + values[h]) / 2.0
            }
        }
    })
}

/// Per-source magnitude plus how many triplets contributed.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnitudes {
    pub values: Vec<Option<f64>>,
    pub used: Vec<usize>,
    pub degenerate: usize,
    /// Source left out of other sources' triplets by the isolation pass.
    pub isolated: Option<usize>,
}

/// Aggregated magnitudes for every covered source. `m(i, j)` gives the
/// second moment between sources `i` and `j`.
pub fn aggregate(
    plan: &TripletPlan,
    m: &(dyn Fn(usize, usize) -> f64 + Sync),
    how: Aggregation,
    mode: TripletMode,
    isolate_lowest: bool,
    tol: &Tolerances,
) -> Magnitudes {
    let n = plan.n_sources();
    let mut degenerate = 0;
    let solve = |i: usize, j: usize, k: usize| solve_triplet(m(i, j), m(i, k), m(j, k), tol);

    match mode {
        TripletMode::Greedy => {
            let mut values = vec![None; n];
            let mut used = vec![0; n];
            for i in 0..n {
                if values[i].is_some() {
                    continue;
                }
                for &(j, k) in plan.triplets(i) {
                    match solve(i, j, k) {
                        Some(mags) => {
                            for (src, mag) in [i, j, k].into_iter().zip(mags) {
                                if values[src].is_none() {
                                    values[src] = Some(mag);
                                    used[src] = 1;
                                }
                            }
                            break;
                        }
                        None => degenerate += 1,
                    }
                }
            }
            Magnitudes { values, used, degenerate, isolated: None }
        }
        TripletMode::Single(pick) => {
            let mut values = vec![None; n];
            let mut used = vec![0; n];
            for i in 0..n {
                let usable: Vec<f64> =
                    plan.triplets(i).iter().filter_map(|&(j, k)| solve(i, j, k).map(|x| x[0])).collect();
                degenerate += plan.triplets(i).len() - usable.len();
                if !usable.is_empty() {
                    values[i] = Some(usable[pick % usable.len()]);
                    used[i] = 1;
                }
            }
            Magnitudes { values, used, degenerate, isolated: None }
        }
        TripletMode::All => {
            let pass = |exclude: Option<usize>, degenerate: &mut usize| {
                let mut values = vec![None; n];
                let mut used = vec![0; n];
                for i in 0..n {
                    let mut mags = Vec::new();
                    let mut skipped = 0;
                    for &(j, k) in plan.triplets(i) {
                        if exclude.is_some_and(|x| x != i && (x == j || x == k)) {
                            continue;
                        }
                        match solve(i, j, k) {
                            Some(x) => mags.push(x[0]),
                            None => skipped += 1,
                        }
                    }
                    *degenerate += skipped;
                    used[i] = mags.len();
                    values[i] = combine(&mut mags, how);
                }
                (values, used)
            };
            let (first, first_used) = pass(None, &mut degenerate);
            let lowest = first
                .iter()
                .enumerate()
                .filter_map(|(i, v)| v.map(|v| (i, v)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|(i, _)| i);
            if !isolate_lowest || lowest.is_none() {
                return Magnitudes { values: first, used: first_used, degenerate, isolated: None };
            }
            let mut ignored = 0;
            let (second, second_used) = pass(lowest, &mut ignored);
            // keep the first-pass value wherever excluding the weakest source leaves nothing
            let mut values = first;
            let mut used = first_used;
            for i in 0..n {
                if second[i].is_some() {
                    values[i] = second[i];
                    used[i] = second_used[i];
                }
            }
            Magnitudes { values, used, degenerate, isolated: lowest }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::augment_graph;
    use crate::model::DependencyGraph;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn forward_products_invert() {
        let [a, b, c] = solve_triplet(0.48, 0.48, 0.36, &tol()).unwrap();
        assert!((a - 0.8).abs() < 1e-15 && (b - 0.6).abs() < 1e-15 && (c - 0.6).abs() < 1e-15);
        assert_eq!(solve_triplet(1.0, 1.0, 1.0, &tol()), Some([1.0, 1.0, 1.0]));
        let [a, b, c] = solve_triplet(-0.48, 0.48, -0.36, &tol()).unwrap();
        assert!((a - 0.8).abs() < 1e-15 && (b - 0.6).abs() < 1e-15 && (c - 0.6).abs() < 1e-15);
    }

    #[test]
    fn near_zero_denominator_is_degenerate() {
        assert!(solve_triplet(0.5, 0.5, 5e-5, &tol()).is_none());
        assert!(matches!(
            try_solve_triplet(|_, _| 0.0, (0, 1, 2), &tol()),
            Err(Error::DegenerateTriplet { i: 0, j: 1, k: 2 })
        ));
    }

    #[test]
    fn star_of_three() {
        let plan = enumerate_triplets(&augment_graph(&DependencyGraph::star(3)), 500);
        assert_eq!(plan.triplets(0), &[(1, 2)]);
        assert_eq!(plan.column_triples(0).collect::<Vec<_>>(), vec![(0, 2, 4)]);
        assert!(plan.uncovered().is_empty());
    }

    #[test]
    fn dependent_partner_excluded() {
        let g = DependencyGraph::builder(1, 4).assign_all(0).source_edge(0, 1).build().unwrap();
        let plan = enumerate_triplets(&augment_graph(&g), 500);
        assert_eq!(plan.triplets(0), &[(2, 3)]);
        // the dependent pair may appear together in no triple, but each may partner source 3
        assert_eq!(plan.triplets(2), &[(0, 3), (1, 3)]);
    }

    #[test]
    fn dependent_pair_alone_has_no_triplets() {
        let g = DependencyGraph::builder(1, 2).assign_all(0).source_edge(0, 1).build().unwrap();
        let plan = enumerate_triplets(&augment_graph(&g), 500);
        assert!(plan.is_empty());
        assert_eq!(plan.uncovered(), vec![0, 1]);
    }

    #[test]
    fn cap_is_lexicographic() {
        let plan = enumerate_triplets(&augment_graph(&DependencyGraph::star(6)), 3);
        assert_eq!(plan.triplets(0), &[(1, 2), (1, 3), (1, 4)]);
    }

    #[test]
    fn mean_and_median() {
        assert_eq!(combine(&mut [0.6, 0.8], Aggregation::Mean), Some(0.7));
        assert_eq!(combine(&mut [0.9, 0.5, 0.9], Aggregation::Median), Some(0.9));
        assert_eq!(combine(&mut [], Aggregation::Mean), None);
    }

    #[test]
    fn exact_moments_give_identical_triplets() {
        let a = [0.9, 0.7, 0.5, 0.3, 0.2];
        let plan = enumerate_triplets(&augment_graph(&DependencyGraph::star(5)), 500);
        let m = |i: usize, j: usize| if i == j { 1.0 } else { a[i] * a[j] };
        for how in [Aggregation::Mean, Aggregation::Median] {
            for isolate in [false, true] {
                let mags = aggregate(&plan, &m, how, TripletMode::All, isolate, &tol());
                for i in 0..5 {
                    assert!((mags.values[i].unwrap() - a[i]).abs() < 1e-14);
                }
                assert_eq!(mags.isolated, isolate.then_some(4));
            }
        }
        let greedy = aggregate(&plan, &m, Aggregation::Mean, TripletMode::Greedy, false, &tol());
        assert!(greedy.values.iter().zip(a).all(|(v, t)| (v.unwrap() - t).abs() < 1e-14));
    }
}
