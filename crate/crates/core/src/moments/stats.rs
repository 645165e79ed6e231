use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::augment::AugmentedLabelMatrix;
use crate::error::{Error, Result};
use crate::model::{ClassPrior, DependencyGraph, Vote};

/// Which extra statistics a model needs beyond the pairwise moments: joint
/// vote counts for dependent source pairs, and moments restricted to rows
/// where a conditioning source abstains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatsLayout {
    pub sources: usize,
    pub pairs: Vec<(usize, usize)>,
    pub conditioning: Vec<usize>,
}

impl StatsLayout {
    pub fn plain(sources: usize) -> Self {
        Self { sources, pairs: Vec::new(), conditioning: Vec::new() }
    }

    pub fn for_graph(g: &DependencyGraph) -> Self {
        let pairs: Vec<(usize, usize)> = g.source_edges().iter().copied().collect();
        let mut conditioning: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
        conditioning.sort_unstable();
        conditioning.dedup();
        Self { sources: g.n_sources(), pairs, conditioning }
    }
}

/// Sums restricted to rows where one source abstains, over odd columns only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionedSums {
    pub rows: u64,
    /// `m × m` sums of `v_{2j} v_{2k}` (0-based odd columns).
    pub cross: Vec<i64>,
    pub sums: Vec<i64>,
}

/// Integer sufficient statistics. Batch and incremental construction give
/// identical values, so windowed and batch fits agree exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SufficientStats {
    layout: StatsLayout,
    rows: u64,
    cross: Vec<i64>,
    col_sums: Vec<i64>,
    /// Per source counts of `+1, 0, -1`.
    votes: Vec<[u64; 3]>,
    /// Per dependent pair, counts indexed `code_i + 3 code_j` with code `1 - vote`.
    pair_counts: Vec<[u64; 9]>,
    conditioned: Vec<ConditionedSums>,
}

#[inline]
fn code(v: Vote) -> usize {
    (1 - v) as usize
}

impl SufficientStats {
    pub fn empty(layout: StatsLayout) -> Self {
        let w = 2 * layout.sources;
        let m = layout.sources;
        Self {
            rows: 0,
            cross: vec![0; w * w],
            col_sums: vec![0; w],
            votes: vec![[0; 3]; m],
            pair_counts: vec![[0; 9]; layout.pairs.len()],
            conditioned: layout
                .conditioning
                .iter()
                .map(|_| ConditionedSums { rows: 0, cross: vec![0; m * m], sums: vec![0; m] })
                .collect(),
            layout,
        }
    }

    pub fn layout(&self) -> &StatsLayout {
        &self.layout
    }

    pub fn n_rows(&self) -> u64 {
        self.rows
    }

    pub fn n_sources(&self) -> usize {
        self.layout.sources
    }

    pub fn cross(&self, a: usize, b: usize) -> i64 {
        self.cross[a * 2 * self.layout.sources + b]
    }

    pub fn col_sum(&self, c: usize) -> i64 {
        self.col_sums[c]
    }

    pub fn vote_counts(&self, source: usize) -> [u64; 3] {
        self.votes[source]
    }

    pub fn pair_counts(&self, i: usize, j: usize) -> Option<[u64; 9]> {
        self.layout.pairs.iter().position(|&p| p == (i, j)).map(|k| self.pair_counts[k])
    }

    pub fn conditioned(&self, source: usize) -> Option<&ConditionedSums> {
        self.layout.conditioning.iter().position(|&c| c == source).map(|k| &self.conditioned[k])
    }

    /// Adds (`weight = 1`) or removes (`weight = -1`) one augmented row.
    pub fn update(&mut self, row: &[i8], weight: i64) {
        let m = self.layout.sources;
        let w = 2 * m;
        debug_assert_eq!(row.len(), w);
        if weight > 0 {
            self.rows += 1;
        } else {
            self.rows -= 1;
        }
        for a in 0..w {
            let xa = i64::from(row[a]) * weight;
            self.col_sums[a] += xa;
            let line = &mut self.cross[a * w..(a + 1) * w];
            for (slot, &xb) in line.iter_mut().zip(row) {
                *slot += xa * i64::from(xb);
            }
        }
        let vote = |i: usize| crate::augment::collapse_pair(row[2 * i], row[2 * i + 1]);
        let bump = |c: &mut u64| {
            if weight > 0 {
                *c += 1
            } else {
                *c -= 1
            }
        };
        for i in 0..m {
            bump(&mut self.votes[i][code(vote(i))]);
        }
        for (k, &(i, j)) in self.layout.pairs.iter().enumerate() {
            bump(&mut self.pair_counts[k][code(vote(i)) + 3 * code(vote(j))]);
        }
        for (k, &c) in self.layout.conditioning.iter().enumerate() {
            if vote(c) != 0 {
                continue;
            }
            let cond = &mut self.conditioned[k];
            bump(&mut cond.rows);
            for j in 0..m {
                let xj = i64::from(row[2 * j]) * weight;
                cond.sums[j] += xj;
                for l in 0..m {
                    cond.cross[j * m + l] += xj * i64::from(row[2 * l]);
                }
            }
        }
    }

    pub fn add_row(&mut self, row: &[i8]) {
        self.update(row, 1);
    }

    pub fn remove_row(&mut self, row: &[i8]) {
        self.update(row, -1);
    }

    /// Batch statistics using per-column bitsets; cross products become
    /// popcounts of XORs.
    pub fn from_augmented(aug: &AugmentedLabelMatrix, layout: StatsLayout) -> Result<Self> {
        if aug.n_sources() != layout.sources {
            return Err(Error::ShapeMismatch {
                expected: format!("{} sources", layout.sources),
                found: format!("{} sources", aug.n_sources()),
            });
        }
        let n = aug.n_rows();
        let m = layout.sources;
        let w = 2 * m;
        let words = n.div_ceil(64);
        let tail_mask = if n.is_multiple_of(64) { u64::MAX } else { (1u64 << (n % 64)) - 1 };

        // bit set where the observed value is -1
        let columns: Vec<Vec<u64>> = (0..w)
            .into_par_iter()
            .map(|c| {
                let mut bits = vec![0u64; words];
                for r in 0..n {
                    if aug.get(r, c) < 0 {
                        bits[r / 64] |= 1 << (r % 64);
                    }
                }
                bits
            })
            .collect();
        let masks: Vec<[Vec<u64>; 3]> = (0..m)
            .into_par_iter()
            .map(|i| {
                let (a, b) = (&columns[2 * i], &columns[2 * i + 1]);
                let mut plus = vec![0u64; words];
                let mut zero = vec![0u64; words];
                let mut minus = vec![0u64; words];
                for k in 0..words {
                    let valid = if k + 1 == words { tail_mask } else { u64::MAX };
                    let abstain = !(a[k] ^ b[k]) & valid;
                    zero[k] = abstain;
                    minus[k] = a[k] & !abstain;
                    plus[k] = !a[k] & !abstain & valid;
                }
                [plus, zero, minus]
            })
            .collect();

        let nn = n as i64;
        let upper: Vec<Vec<i64>> = (0..w)
            .into_par_iter()
            .map(|a| {
                (a..w)
                    .map(|b| {
                        let diff: u32 =
                            columns[a].iter().zip(&columns[b]).map(|(x, y)| (x ^ y).count_ones()).sum();
                        nn - 2 * i64::from(diff)
                    })
                    .collect()
            })
            .collect();
        let mut cross = vec![0i64; w * w];
        for a in 0..w {
            for (off, &v) in upper[a].iter().enumerate() {
                let b = a + off;
                cross[a * w + b] = v;
                cross[b * w + a] = v;
            }
        }
        let col_sums = columns.iter().map(|c| nn - 2 * popcount(c) as i64).collect();
        let votes = masks.iter().map(|ms| [popcount(&ms[0]), popcount(&ms[1]), popcount(&ms[2])]).collect();
        let pair_counts = layout
            .pairs
            .iter()
            .map(|&(i, j)| {
                let mut out = [0u64; 9];
                for ci in 0..3 {
                    for cj in 0..3 {
                        out[ci + 3 * cj] = masks[i][ci]
                            .iter()
                            .zip(&masks[j][cj])
                            .map(|(x, y)| u64::from((x & y).count_ones()))
                            .sum();
                    }
                }
                out
            })
            .collect();
        let conditioned = layout
            .conditioning
            .par_iter()
            .map(|&c| {
                let mask = &masks[c][1];
                let rows = popcount(mask);
                let r = rows as i64;
                let masked = |x: &[u64], y: Option<&[u64]>| -> i64 {
                    let mut total = 0u64;
                    for k in 0..words {
                        let bits = match y {
                            Some(y) => x[k] ^ y[k],
                            None => x[k],
                        };
                        total += u64::from((bits & mask[k]).count_ones());
                    }
                    r - 2 * total as i64
                };
                let mut cross = vec![0i64; m * m];
                for j in 0..m {
                    for l in j..m {
                        let v = masked(&columns[2 * j], Some(&columns[2 * l]));
                        cross[j * m + l] = v;
                        cross[l * m + j] = v;
                    }
                }
                let sums = (0..m).map(|j| masked(&columns[2 * j], None)).collect();
                ConditionedSums { rows, cross, sums }
            })
            .collect();
        Ok(Self { layout, rows: n as u64, cross, col_sums, votes, pair_counts, conditioned })
    }
}

fn popcount(bits: &[u64]) -> u64 {
    bits.iter().map(|x| u64::from(x.count_ones())).sum()
}

/// Moments restricted to rows where `source` abstains.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedMoments {
    /// Number of rows behind the estimate; `None` for exact moments.
    pub rows: Option<u64>,
    /// `P(λ_source = 0)`.
    pub mass: f64,
    /// `m × m` conditional second moments over odd columns.
    pub second: Vec<f64>,
    /// Conditional means of odd columns.
    pub first: Vec<f64>,
}

/// Observable moments consumed by accuracy and parameter recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates {
    sources: usize,
    /// `2m × 2m` matrix `M_ab = E[v_a v_b]` (0-based columns).
    pub second: Vec<f64>,
    pub first: Vec<f64>,
    /// Per source `P(λ = +1), P(λ = 0), P(λ = -1)`.
    pub vote_probs: Vec<[f64; 3]>,
    /// Joint vote distribution for each dependent pair `(i, j)`, `i < j`.
    pub pair_probs: BTreeMap<(usize, usize), [f64; 9]>,
    pub conditioned: BTreeMap<usize, ConditionedMoments>,
    pub prior: ClassPrior,
    /// `None` when the moments are exact rather than sampled.
    pub sample_count: Option<u64>,
}

impl MomentEstimates {
    pub fn from_stats(stats: &SufficientStats, prior: &ClassPrior) -> Result<Self> {
        if stats.rows == 0 {
            return Err(Error::EmptyMatrix);
        }
        let n = stats.rows as f64;
        let m = stats.layout.sources;
        let second = stats.cross.iter().map(|&x| x as f64 / n).collect();
        let first = stats.col_sums.iter().map(|&x| x as f64 / n).collect();
        let vote_probs = stats.votes.iter().map(|c| c.map(|x| x as f64 / n)).collect();
        let pair_probs = stats
            .layout
            .pairs
            .iter()
            .zip(&stats.pair_counts)
            .map(|(&p, c)| (p, c.map(|x| x as f64 / n)))
            .collect();
        let conditioned = stats
            .layout
            .conditioning
            .iter()
            .zip(&stats.conditioned)
            .map(|(&src, cs)| {
                let r = cs.rows.max(1) as f64;
                let moments = ConditionedMoments {
                    rows: Some(cs.rows),
                    mass: cs.rows as f64 / n,
                    second: cs.cross.iter().map(|&x| x as f64 / r).collect(),
                    first: cs.sums.iter().map(|&x| x as f64 / r).collect(),
                };
                (src, moments)
            })
            .collect();
        Ok(Self {
            sources: m,
            second,
            first,
            vote_probs,
            pair_probs,
            conditioned,
            prior: prior.clone(),
            sample_count: Some(stats.rows),
        })
    }

    /// Assembles moments from precomputed values (exact or external).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        sources: usize,
        second: Vec<f64>,
        first: Vec<f64>,
        vote_probs: Vec<[f64; 3]>,
        pair_probs: BTreeMap<(usize, usize), [f64; 9]>,
        conditioned: BTreeMap<usize, ConditionedMoments>,
        prior: ClassPrior,
        sample_count: Option<u64>,
    ) -> Result<Self> {
        let w = 2 * sources;
        if second.len() != w * w || first.len() != w || vote_probs.len() != sources {
            return Err(Error::ShapeMismatch {
                expected: format!("moments for {sources} sources"),
                found: format!("{} second, {} first, {} vote entries", second.len(), first.len(), vote_probs.len()),
            });
        }
        Ok(Self { sources, second, first, vote_probs, pair_probs, conditioned, prior, sample_count })
    }

    pub fn n_sources(&self) -> usize {
        self.sources
    }

    /// `E[v_a v_b]` over 0-based observed columns.
    pub fn m(&self, a: usize, b: usize) -> f64 {
        self.second[a * 2 * self.sources + b]
    }

    /// Second moment between the odd columns of two sources.
    pub fn source_m(&self, i: usize, j: usize) -> f64 {
        self.m(2 * i, 2 * j)
    }

    pub fn abstain_rate(&self, i: usize) -> f64 {
        self.vote_probs[i][1]
    }

    /// Joint vote probability for a dependent pair in either order.
    pub fn pair_prob(&self, i: usize, j: usize, vi: Vote, vj: Vote) -> Option<f64> {
        if let Some(t) = self.pair_probs.get(&(i, j)) {
            Some(t[code(vi) + 3 * code(vj)])
        } else {
            self.pair_probs.get(&(j, i)).map(|t| t[code(vj) + 3 * code(vi)])
        }
    }
}

/// Counts statistics for `aug` and normalizes them, using the layout the
/// graph requires.
pub fn estimate_moments(
    aug: &AugmentedLabelMatrix,
    g: &DependencyGraph,
    prior: &ClassPrior,
) -> Result<MomentEstimates> {
    let stats = SufficientStats::from_augmented(aug, StatsLayout::for_graph(g))?;
    MomentEstimates::from_stats(&stats, prior)
}
