//! Helpers shared by the integration tests.

#![allow(dead_code)]

use weaklabel::model::{LabelMatrix, Vertex};
use weaklabel::oracle::{ObservableJoint, StarModel, StarSource};
use weaklabel::PosteriorLabels;

/// Star model with the given probabilities of a correct vote and a shared abstain rate.
pub fn star(correct: &[f64], abstain: f64) -> StarModel {
    StarModel::new(0.5, correct.iter().map(|&c| StarSource { abstain, correct: c }).collect()).unwrap()
}

/// Share of rows whose thresholded posterior disagrees with the truth;
/// a posterior of exactly one half counts as half an error.
pub fn label_error(labels: &PosteriorLabels, truth: &[i8]) -> f64 {
    let wrong: f64 = truth
        .iter()
        .enumerate()
        .map(|(r, &y)| {
            let p = labels.get(r, 0);
            if p == 0.5 {
                0.5
            } else {
                f64::from(u8::from((p > 0.5) != (y > 0)))
            }
        })
        .sum();
    wrong / truth.len() as f64
}

/// Majority-vote error with ties counted as half an error.
pub fn majority_error(l: &LabelMatrix, truth: &[i8]) -> f64 {
    let wrong: f64 = truth
        .iter()
        .enumerate()
        .map(|(r, &y)| {
            let s: i32 = l.row(r).iter().map(|&v| i32::from(v)).sum();
            match s.signum() {
                0 => 0.5,
                sign => f64::from(u8::from(sign as i8 != y)),
            }
        })
        .sum();
    wrong / truth.len() as f64
}

/// Observable-event vector of a clique over task 0 and `sources`, straight
/// from the enumerated joint: entry `(U, Z)` is the probability that the
/// product over `Z` equals `target` while every source in `U` abstains.
/// Rows put the task first (absent / in `Z`), then each source (absent /
/// in `Z` / in `U`).
pub fn event_vector(obs: &ObservableJoint, sources: &[usize], target: i8) -> Vec<f64> {
    let rows = 2 * 3usize.pow(sources.len() as u32);
    let mut out = vec![0.0; rows];
    for (idx, &p) in obs.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let (y, lam) = obs.decode(idx);
        for (row, slot) in out.iter_mut().enumerate() {
            let mut product = if row % 2 == 1 { y[0] } else { 1 };
            let mut all_abstain = true;
            let mut rest = row / 2;
            for &i in sources {
                match rest % 3 {
                    1 => product *= lam[i],
                    2 => all_abstain &= lam[i] == 0,
                    _ => {}
                }
                rest /= 3;
            }
            if all_abstain && product == target {
                *slot += p;
            }
        }
    }
    out
}

/// `E[λ_j Y | λ_i = 0]` for task 0.
pub fn conditional_accuracy(obs: &ObservableJoint, j: usize, i: usize) -> f64 {
    let (mut mass, mut sum) = (0.0, 0.0);
    for (idx, &p) in obs.probs().iter().enumerate() {
        let (y, lam) = obs.decode(idx);
        if lam[i] == 0 {
            mass += p;
            sum += p * f64::from(lam[j] * y[0]);
        }
    }
    sum / mass
}

pub fn clique_vars(sources: &[usize]) -> Vec<Vertex> {
    std::iter::once(Vertex::Task(0)).chain(sources.iter().map(|&i| Vertex::Source(i))).collect()
}

/// Every vote row over `m` sources.
pub fn all_vote_rows(m: usize) -> Vec<Vec<i8>> {
    (0..3usize.pow(m as u32))
        .map(|mut k| {
            (0..m)
                .map(|_| {
                    let v = 1 - (k % 3) as i8;
                    k /= 3;
                    v
                })
                .collect()
        })
        .collect()
}
