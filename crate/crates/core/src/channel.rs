//! Per-photon-number yields for honest channels and PNS eavesdroppers.
//!
//! Everything Eve does is summarized by the map `n -> y_n`. A session holds one
//! [`YieldVector`] that is applied to signal and decoy pulses alike, so pulses
//! with the same photon number can never see different detection probabilities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::expected_yield;
use crate::error::{Error, Result};
use crate::source::{multi_photon_prob, PhotonNumberDistribution};

/// Detection probability for each photon number, `y[0] = 0` (no dark counts).
#[derive(Debug, Clone, PartialEq)]
pub struct YieldVector {
    y: Vec<f64>,
}

impl YieldVector {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Config("yield vector is empty".into()));
        }
        if let Some((n, v)) = y
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::Config(format!("yield y[{n}] = {v} is outside [0, 1]")));
        }
        if y[0] != 0.0 {
            return Err(Error::Config(
                "vacuum pulses cannot be detected (y[0] must be 0)".into(),
            ));
        }
        Ok(Self { y })
    }

    pub fn zeros(n_max: usize) -> Self {
        Self {
            y: vec![0.0; n_max + 1],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.y
    }

    pub fn get(&self, n: usize) -> f64 {
        self.y.get(n).copied().unwrap_or(0.0)
    }

    pub fn n_max(&self) -> usize {
        self.y.len() - 1
    }
}

/// Eavesdropper or channel model, as written in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversarySpec {
    /// Honest lossy channel with transmittance `eta`.
    Passive { eta: f64 },
    /// Block single photons, forward every multi-photon pulse losslessly.
    NaivePns,
    /// Forward only two-photon pulses, with probability `beta`.
    OptimalPns { beta: f64 },
    /// Block single photons and forward multi-photon pulses at a uniform rate
    /// chosen so the signal yield equals `target_yield`, or the honest yield
    /// at transmittance `eta_mimic`.
    RateMatchingPns {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta_mimic: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target_yield: Option<f64>,
    },
    Explicit { y: Vec<f64> },
}

impl AdversarySpec {
    pub fn is_passive(&self) -> bool {
        matches!(self, AdversarySpec::Passive { .. })
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
    }
    Ok(())
}

/// Independent photon survival with a threshold detector: `y_n = 1 - (1 - eta)^n`.
pub fn passive_yield_vector(eta: f64, n_max: usize) -> Result<YieldVector> {
    check_unit("transmittance eta", eta)?;
    let y = (0..=n_max)
        .map(|n| 1.0 - (1.0 - eta).powi(n as i32))
        .collect();
    Ok(YieldVector { y })
}

/// Yield vector that blocks single photons and forwards every multi-photon
/// pulse with the same probability `c`, tuned so that the signal source shows
/// `target_yield`.
pub fn rate_matching_yield_vector(
    target_yield: f64,
    signal: &PhotonNumberDistribution,
) -> Result<YieldVector> {
    check_unit("target yield", target_yield)?;
    let multi = multi_photon_prob(signal);
    let c = if target_yield == 0.0 {
        0.0
    } else if multi == 0.0 {
        return Err(Error::Infeasible(
            "signal source emits no multi-photon pulses to forward".into(),
        ));
    } else {
        target_yield / multi
    };
    if c > 1.0 {
        return Err(Error::Infeasible(format!(
            "target yield {target_yield} exceeds the signal multi-photon probability {multi}"
        )));
    }
    let mut y = vec![c; signal.n_max() + 1];
    y[0] = 0.0;
    y[1] = 0.0;
    Ok(YieldVector { y })
}

/// Resolve an adversary description into the yield vector it induces.
///
/// `signal` is only consulted by the rate-matching attack.
pub fn adversary_yield_vector(
    spec: &AdversarySpec,
    n_max: usize,
    signal: &PhotonNumberDistribution,
) -> Result<YieldVector> {
    match spec {
        AdversarySpec::Passive { eta } => passive_yield_vector(*eta, n_max),
        AdversarySpec::NaivePns => {
            let mut y = vec![1.0; n_max + 1];
            y[0] = 0.0;
            y[1] = 0.0;
            Ok(YieldVector { y })
        }
        AdversarySpec::OptimalPns { beta } => {
            check_unit("beta", *beta)?;
            let mut y = YieldVector::zeros(n_max);
            if n_max >= 2 {
                y.y[2] = *beta;
            }
            Ok(y)
        }
        AdversarySpec::RateMatchingPns {
            eta_mimic,
            target_yield,
        } => {
            if signal.n_max() != n_max {
                return Err(Error::Dimension {
                    dist: signal.n_max() + 1,
                    yields: n_max + 1,
                });
            }
            let target = match (eta_mimic, target_yield) {
                (Some(eta), None) => expected_yield(signal, &passive_yield_vector(*eta, n_max)?)?,
                (None, Some(t)) => *t,
                _ => {
                    return Err(Error::Config(
                        "rate_matching_pns needs exactly one of eta_mimic or target_yield".into(),
                    ))
                }
            };
            rate_matching_yield_vector(target, signal)
        }
        AdversarySpec::Explicit { y } => {
            if y.len() > n_max + 1 {
                return Err(Error::Config(format!(
                    "explicit yield vector has {} entries but n_max = {n_max}",
                    y.len()
                )));
            }
            let mut padded = y.clone();
            padded.resize(n_max + 1, 0.0);
            YieldVector::new(padded)
        }
    }
}

/// Bernoulli draw: was an `n`-photon pulse registered by Bob?
///
/// Always consumes exactly one uniform draw.
pub fn realize_detection<R: Rng + ?Sized>(y: &YieldVector, n: usize, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    u < y.y[n]
}
