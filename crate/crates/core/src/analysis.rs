//! Measurement semantics, success-probability estimation, population traces,
//! and majority-vote post-processing.
//!
//! A projective measurement asks each register atom "are you in |0⟩?". A
//! negative answer is read as digit 1, which is also what a lost atom
//! produces. Residual Rydberg population at measurement time is excluded
//! from the success count by default and can be included via the policy.

use crate::error::{Error, Result};
use crate::hilbert::{Level, RegisterConfig, Site};
use crate::linalg::{CMat, CVec};
use crate::mcwf::TrajectoryResult;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which levels count as "not |0⟩" when scoring a marked digit b_j = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementPolicy {
    pub count_ryd_as_nonzero: bool,
}

impl Default for MeasurementPolicy {
    fn default() -> Self {
        MeasurementPolicy {
            count_ryd_as_nonzero: false,
        }
    }
}

impl MeasurementPolicy {
    /// Levels scored as digit 1. |0⟩ is never in this set.
    pub fn nonzero_levels(&self) -> &'static [Level] {
        if self.count_ryd_as_nonzero {
            &[Level::Q1, Level::Lost, Level::Ryd]
        } else {
            &[Level::Q1, Level::Lost]
        }
    }

    pub fn digit_matches(&self, level: Level, bit: u8) -> bool {
        match bit {
            0 => level == Level::Q0,
            _ => self.nonzero_levels().contains(&level),
        }
    }
}

fn check_marked(cfg: &RegisterConfig, marked: &[u8]) -> Result<()> {
    if marked.len() != cfg.k() {
        return Err(Error::InvalidMarked {
            marked: marked.iter().map(|b| char::from(b'0' + b)).collect(),
            k: cfg.k(),
            reason: "length mismatch".into(),
        });
    }
    Ok(())
}

/// Probability of measuring the marked configuration: atom j in |0⟩ where
/// b_j = 0 and in a policy "nonzero" level where b_j = 1; the ancilla is
/// traced over.
pub fn success_probability(
    state: &CVec,
    cfg: &RegisterConfig,
    marked: &[u8],
    policy: &MeasurementPolicy,
) -> Result<f64> {
    check_marked(cfg, marked)?;
    let mut p = 0.0;
    for (idx, amp) in state.iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        if (0..cfg.k()).all(|j| policy.digit_matches(cfg.level_of(idx, j), marked[j])) {
            p += w;
        }
    }
    Ok(p)
}

/// Same as [`success_probability`] for a density matrix.
pub fn success_probability_rho(
    rho: &CMat,
    cfg: &RegisterConfig,
    marked: &[u8],
    policy: &MeasurementPolicy,
) -> Result<f64> {
    check_marked(cfg, marked)?;
    let mut p = 0.0;
    for idx in 0..rho.nrows() {
        if (0..cfg.k()).all(|j| policy.digit_matches(cfg.level_of(idx, j), marked[j])) {
            p += rho[[idx, idx]].re;
        }
    }
    Ok(p)
}

/// Population ⟨σ_μμ⟩ of one site level in a normalized state.
pub fn population(state: &CVec, cfg: &RegisterConfig, site: Site, level: usize) -> f64 {
    state
        .iter()
        .enumerate()
        .map(|(idx, amp)| {
            let here = match site {
                Site::Register(j) => cfg.level_of(idx, j).index(),
                Site::Ancilla => cfg.ancilla_level_of(idx).map_or(usize::MAX, |a| a.index()),
            };
            if here == level {
                amp.norm_sqr()
            } else {
                0.0
            }
        })
        .sum()
}

/// Population ⟨σ_μμ⟩ of one site level for a density matrix.
pub fn population_rho(rho: &CMat, cfg: &RegisterConfig, site: Site, level: usize) -> f64 {
    (0..rho.nrows())
        .map(|idx| {
            let here = match site {
                Site::Register(j) => cfg.level_of(idx, j).index(),
                Site::Ancilla => cfg.ancilla_level_of(idx).map_or(usize::MAX, |a| a.index()),
            };
            if here == level {
                rho[[idx, idx]].re
            } else {
                0.0
            }
        })
        .sum()
}

/// How ensemble success probabilities are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Average the marked-state probability over trajectory wavefunctions.
    Expectation,
    /// Score one projective sample per trajectory (binomial standard error).
    Sampling,
}

/// Per-iteration ensemble statistics.
#[derive(Debug, Clone)]
pub struct IterationStats {
    pub iteration: usize,
    pub p_hat: f64,
    pub std_err: f64,
    pub n_traj: usize,
    /// Counts of sampled measurement bitstrings (one sample per trajectory).
    pub histogram: BTreeMap<String, usize>,
}

/// Fold an ensemble of trajectories into per-iteration statistics.
pub fn aggregate(
    results: &[TrajectoryResult],
    cfg: &RegisterConfig,
    marked: &[u8],
    policy: &MeasurementPolicy,
    estimator: Estimator,
) -> Result<Vec<IterationStats>> {
    if results.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    check_marked(cfg, marked)?;
    let iterations = results[0].marker_states.len();
    if results
        .iter()
        .any(|r| r.marker_states.len() != iterations || r.marker_samples.len() != iterations)
    {
        return Err(Error::Config(
            "trajectories disagree on marker count".into(),
        ));
    }
    let n = results.len();
    let mut out = Vec::with_capacity(iterations);
    for m in 0..iterations {
        let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
        for r in results {
            *histogram
                .entry(r.marker_samples[m].bitstring.clone())
                .or_insert(0) += 1;
        }
        let (p_hat, std_err) = match estimator {
            Estimator::Expectation => {
                let ps: Vec<f64> = results
                    .iter()
                    .map(|r| success_probability(&r.marker_states[m], cfg, marked, policy))
                    .collect::<Result<_>>()?;
                let mean = ps.iter().sum::<f64>() / n as f64;
                let se = if n > 1 {
                    let var =
                        ps.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
                    (var / n as f64).sqrt()
                } else {
                    0.0
                };
                (mean, se)
            }
            Estimator::Sampling => {
                let hits = results
                    .iter()
                    .filter(|r| {
                        let s = &r.marker_samples[m];
                        (0..cfg.k()).all(|j| policy.digit_matches(s.levels[j], marked[j]))
                    })
                    .count();
                let p = hits as f64 / n as f64;
                (p, (p * (1.0 - p) / n as f64).sqrt())
            }
        };
        out.push(IterationStats {
            iteration: m + 1,
            p_hat,
            std_err,
            n_traj: n,
            histogram,
        });
    }
    Ok(out)
}

/// Majority-vote outcome over measured bitstrings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteOutcome {
    pub winner: String,
    /// True when the top count was shared; the lexicographically smallest
    /// string wins the tie.
    pub tie: bool,
}

pub fn majority_vote<S: AsRef<str>>(samples: &[S]) -> Result<VoteOutcome> {
    if samples.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in samples {
        *counts.entry(s.as_ref()).or_insert(0) += 1;
    }
    let best = counts.values().copied().max().unwrap();
    let mut winners = counts.iter().filter(|(_, c)| **c == best);
    let winner = winners.next().unwrap().0.to_string();
    let tie = winners.next().is_some();
    Ok(VoteOutcome { winner, tie })
}
