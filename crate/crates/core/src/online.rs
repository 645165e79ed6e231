//! Streaming re-estimation over a rolling window.
//!
//! Each incoming vote row updates integer running sums (and evicts the row
//! that leaves the window), the model is refit in closed form from those
//! sums, and the row is labeled with the fresh parameters. Because the sums
//! are exact integers, a window's fit matches a batch fit over the same
//! augmented rows bit for bit.

use std::collections::VecDeque;
use std::sync::Arc;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::augment::{AbstainPolicy, Augmenter, AugmentedLabelMatrix};
use crate::error::{Error, Result};
use crate::model::{ClassPrior, LabelModelParameters, Vote};
use crate::moments::SufficientStats;
use crate::oracle::{StarModel, StarSource};
use crate::recovery::{FittedModel, LabelModel};

/// How much history the estimator keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    /// The most recent `W` rows.
    Sliding(usize),
    /// Every row seen so far.
    Cumulative,
}

/// Default warmup: `max(100, 10 m)` rows.
pub fn default_warmup(sources: usize) -> usize {
    (10 * sources).max(100)
}

/// Where a step's labels came from.
#[derive(Debug, Clone, PartialEq)]
pub enum StepStatus {
    /// Too few rows yet; labels are the prior.
    Warmup,
    /// Parameters refit on the current window.
    Fresh,
    /// The refit failed; the last good parameters were reused.
    Stale { steps: u64, reason: String },
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    /// `P(Y_d = +1 | λ_t)` per task.
    pub posterior: Vec<f64>,
    pub status: StepStatus,
    /// Snapshot used for this row, if any.
    pub parameters: Option<Arc<LabelModelParameters>>,
}

/// Rolling estimator state.
#[derive(Debug, Clone)]
pub struct RollingState {
    model: LabelModel,
    window: Window,
    warmup: usize,
    augmenter: Augmenter,
    buffer: VecDeque<Vec<i8>>,
    stats: SufficientStats,
    seen: u64,
    last: Option<(Arc<LabelModelParameters>, FittedModel)>,
    stale_steps: u64,
}

impl RollingState {
    /// Streams always use the alternating abstain policy so a replay gives
    /// the same augmented rows.
    pub fn new(model: LabelModel, window: Window, warmup: Option<usize>) -> Result<Self> {
        if let Window::Sliding(0) = window {
            return Err(Error::Config("window must hold at least one row".into()));
        }
        let m = model.graph().n_sources();
        let mut cfg = model.config().clone();
        cfg.policy = AbstainPolicy::Alternating;
        let model = model.with_config(cfg);
        Ok(Self {
            augmenter: Augmenter::new(m, AbstainPolicy::Alternating),
            stats: SufficientStats::empty(model.stats_layout()),
            warmup: warmup.unwrap_or_else(|| default_warmup(m)),
            model,
            window,
            buffer: VecDeque::new(),
            seen: 0,
            last: None,
            stale_steps: 0,
        })
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn stats(&self) -> &SufficientStats {
        &self.stats
    }

    /// Augmented rows currently in the window, oldest first.
    pub fn window_rows(&self) -> AugmentedLabelMatrix {
        let m = self.model.graph().n_sources();
        let values = self.buffer.iter().flatten().copied().collect();
        AugmentedLabelMatrix::from_values(self.buffer.len(), m, values).expect("buffered rows are augmented")
    }

    /// Recomputes the sums from the buffered rows and compares.
    pub fn verify_sums(&self) -> bool {
        SufficientStats::from_augmented(&self.window_rows(), self.model.stats_layout())
            .is_ok_and(|batch| batch == self.stats)
    }

    /// Adds a row to the window without labeling it.
    pub fn ingest(&mut self, lam: &[Vote]) -> Result<()> {
        let m = self.model.graph().n_sources();
        if lam.len() != m {
            return Err(Error::ShapeMismatch { expected: format!("{m} votes"), found: format!("{} votes", lam.len()) });
        }
        if let Some((c, &v)) = lam.iter().enumerate().find(|(_, v)| !(-1..=1).contains(*v)) {
            return Err(Error::InvalidVote { row: self.seen as usize, column: c, value: i64::from(v) });
        }
        let row = self.augmenter.row(lam);
        self.stats.add_row(&row);
        self.buffer.push_back(row);
        if let Window::Sliding(w) = self.window {
            if self.buffer.len() > w {
                let old = self.buffer.pop_front().expect("non-empty");
                self.stats.remove_row(&old);
            }
        }
        self.seen += 1;
        Ok(())
    }

    /// Refits from the current sums, falling back to the last good model.
    fn refit(&mut self, prior: &ClassPrior) -> (Option<&FittedModel>, StepStatus) {
        if (self.seen as usize) < self.warmup {
            return (None, StepStatus::Warmup);
        }
        let fit = if prior == self.model.prior() {
            self.model.fit_stats(&self.stats)
        } else {
            LabelModel::new(self.model.graph().clone(), prior.clone())
                .map(|m| m.with_config(self.model.config().clone()))
                .and_then(|m| m.fit_stats(&self.stats))
        };
        match fit {
            Ok(f) => {
                self.stale_steps = 0;
                self.last = Some((Arc::new(f.parameters().clone()), f));
                (self.last.as_ref().map(|l| &l.1), StepStatus::Fresh)
            }
            Err(e) => {
                self.stale_steps += 1;
                if self.stale_steps == 1 {
                    warn!("refit failed at row {}: {e}; reusing the last parameters", self.seen);
                }
                let status = if self.last.is_some() {
                    StepStatus::Stale { steps: self.stale_steps, reason: e.to_string() }
                } else {
                    StepStatus::Warmup
                };
                (self.last.as_ref().map(|l| &l.1), status)
            }
        }
    }

    /// Ingests `lam`, refits and labels it under the model's prior.
    pub fn step(&mut self, lam: &[Vote]) -> Result<StepOutput> {
        let prior = self.model.prior().clone();
        self.step_with_prior(lam, &prior)
    }

    /// Same as [`step`](Self::step) with a per-step class prior.
    ///
    /// A row that every task configuration gives zero likelihood (possible
    /// once a short window clips a table entry to zero) is labeled with the
    /// prior instead of ending the stream.
    pub fn step_with_prior(&mut self, lam: &[Vote], prior: &ClassPrior) -> Result<StepOutput> {
        self.ingest(lam)?;
        let d = self.model.graph().n_tasks();
        let (fitted, status) = self.refit(prior);
        let mut posterior = vec![0.0; d];
        let labeled = match fitted {
            Some(f) => match f.compiled().task_marginals(lam, &mut posterior) {
                Err(Error::AllZeroLikelihood) => {
                    warn!("row {} has zero likelihood under the current fit; using the prior", self.seen);
                    false
                }
                other => other.map(|()| true)?,
            },
            None => false,
        };
        if !labeled {
            for (k, slot) in posterior.iter_mut().enumerate() {
                *slot = prior.p_positive(k);
            }
        }
        let parameters = match status {
            StepStatus::Warmup => None,
            _ => self.last.as_ref().map(|l| Arc::clone(&l.0)),
        };
        Ok(StepOutput { posterior, status, parameters })
    }

    /// Current fitted model, if any.
    pub fn current(&self) -> Option<&FittedModel> {
        self.last.as_ref().map(|l| &l.1)
    }
}

/// Synthetic single-task stream whose listed sources invert their votes
/// every `period` rows. Drives window comparisons against known truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    pub base: StarModel,
    pub flipped: Vec<usize>,
    /// Rows between inversions; `None` for a stationary stream.
    pub period: Option<usize>,
}

impl DriftSpec {
    /// Generating model in effect at row `t` (0-based).
    pub fn model_at(&self, t: usize) -> StarModel {
        let inverted = self.period.is_some_and(|p| (t / p) % 2 == 1);
        let mut model = self.base.clone();
        if inverted {
            for &i in &self.flipped {
                let s = model.sources[i];
                model.sources[i] = StarSource { abstain: s.abstain, correct: 1.0 - s.correct };
            }
        }
        model
    }

    /// Rows, hidden labels and the regime index of each row.
    pub fn generate(&self, steps: usize, seed: u64) -> DriftStream {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(steps);
        let mut truth = Vec::with_capacity(steps);
        let mut current = (usize::MAX, self.base.clone());
        for t in 0..steps {
            let regime = self.period.map_or(0, |p| t / p);
            if regime != current.0 {
                current = (regime, self.model_at(t));
            }
            let mut votes = Vec::with_capacity(self.base.sources.len());
            truth.push(current.1.draw(&mut rng, &mut votes));
            rows.push(votes);
        }
        DriftStream { rows, truth }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftStream {
    pub rows: Vec<Vec<Vote>>,
    pub truth: Vec<i8>,
}

/// Errors of one streamed run, averaged over post-warmup rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamScore {
    /// Mean squared gap between streamed and exact posteriors.
    pub posterior_mse: f64,
    /// Mean Euclidean distance between streamed and true parameter tables.
    pub parameter_error: f64,
    pub scored_rows: usize,
}

/// Runs the estimator over a generated stream and scores it against the
/// generating models.
pub fn run_stream(spec: &DriftSpec, window: Window, warmup: usize, steps: usize, seed: u64) -> Result<StreamScore> {
    let stream = spec.generate(steps, seed);
    let base = LabelModel::new(spec.base.graph(), spec.base.prior())?;
    let mut state = RollingState::new(base, window, Some(warmup))?;
    let (mut mse, mut perr, mut count) = (0.0, 0.0, 0usize);
    let mut truth_cache: Option<(usize, StarModel, LabelModelParameters)> = None;
    for (t, lam) in stream.rows.iter().enumerate() {
        let out = state.step(lam)?;
        let Some(params) = out.parameters else { continue };
        let regime = spec.period.map_or(0, |p| t / p);
        if truth_cache.as_ref().is_none_or(|c| c.0 != regime) {
            let model = spec.model_at(t);
            let tables = model.parameters();
            truth_cache = Some((regime, model, tables));
        }
        let (_, model, tables) = truth_cache.as_ref().expect("filled above");
        let gap = out.posterior[0] - model.posterior(lam);
        mse += gap * gap;
        perr += params.l2_distance(tables);
        count += 1;
    }
    let denom = count.max(1) as f64;
    Ok(StreamScore { posterior_mse: mse / denom, parameter_error: perr / denom, scored_rows: count })
}

/// One row of a window sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub window: usize,
    pub parameter_error: f64,
    pub posterior_mse: f64,
}

/// Mean error per candidate window over `seeds`. The empirical minimizer
/// stands in for the analytic optimum, whose constants are unobservable.
pub fn sweep_window(
    spec: &DriftSpec,
    windows: &[usize],
    warmup: usize,
    steps: usize,
    seeds: &[u64],
) -> Result<Vec<SweepPoint>> {
    windows
        .iter()
        .map(|&w| {
            let mut point = SweepPoint { window: w, parameter_error: 0.0, posterior_mse: 0.0 };
            for &s in seeds {
                let score = run_stream(spec, Window::Sliding(w), warmup.min(w), steps, s)?;
                point.parameter_error += score.parameter_error / seeds.len() as f64;
                point.posterior_mse += score.posterior_mse / seeds.len() as f64;
            }
            Ok(point)
        })
        .collect()
}

/// Window with the lowest mean parameter error.
pub fn best_window(points: &[SweepPoint]) -> Option<usize> {
    points.iter().min_by(|a, b| a.parameter_error.total_cmp(&b.parameter_error)).map(|p| p.window)
}
