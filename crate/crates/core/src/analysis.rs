//! Yield bounds and security conditions for decoy-state BB84.
//!
//! The central fact is that Eve sees only photon numbers, so the signal
//! multi-photon yield `Y_s^m = sum_{n>=2} p_n y_n` is bounded by the decoy
//! yield `Y_d` times the largest ratio `p_n / p'_n` over multi-photon numbers.
//! For two Poissonian sources with `mu < mu'` that ratio is `P_2(mu) / P_2(mu')`.
//! The session is secure when the observed signal yield exceeds that bound.

use serde::Serialize;

use crate::channel::YieldVector;
use crate::error::{Error, Result};
use crate::protocol::YieldEstimate;
use crate::source::{multi_photon_prob, poisson_pmf, PhotonNumberDistribution, SourceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Secure,
    Insecure,
}

impl Verdict {
    pub fn is_secure(self) -> bool {
        self == Verdict::Secure
    }

    fn from_strict(lhs: f64, rhs: f64) -> Self {
        if lhs > rhs {
            Verdict::Secure
        } else {
            Verdict::Insecure
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Secure => "secure",
            Verdict::Insecure => "insecure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Empirical,
}

/// Outcome of the decoy security condition `Y_s > ratio * Y_d`.
///
/// Serializes to exactly the report's `security` object.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityReport {
    pub y_s: f64,
    pub y_d: f64,
    pub ratio_bound: f64,
    /// Upper bound on the signal multi-photon yield, clamped to 1.
    pub y_s_multi_upper: f64,
    pub condition_lhs: f64,
    pub condition_rhs: f64,
    pub verdict: Verdict,
    pub normal_op_margin: Option<f64>,
    pub mode: Mode,
    pub z: Option<f64>,
    pub margin: f64,
}

/// Which construction produced the coefficient used in the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioMethod {
    PoissonPair,
    General,
}

/// Supplementary quantities behind a [`SecurityReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundDetails {
    pub ratio_method: RatioMethod,
    /// Photon number at which `p_n / p'_n` peaks, if the signal has multi-photon weight.
    pub ratio_argmax_n: Option<usize>,
    pub general_ratio_bound: f64,
    pub poisson_pair_ratio_bound: Option<f64>,
    /// `epsilon / P_2(mu')` for a factorial-tail signal against a Poissonian decoy.
    pub near_single_ratio: Option<f64>,
    pub near_single_condition_rhs: Option<f64>,
    pub y_s_multi_upper_unclamped: f64,
    /// Bound on the normalized multi-photon yield, unclamped; may exceed 1.
    pub normalized_multi_upper: Option<f64>,
    pub normalized_multi_upper_effective: Option<f64>,
    pub signal_multi_photon_prob: f64,
    pub truncation_deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecurityAssessment {
    pub report: SecurityReport,
    pub details: BoundDetails,
}

/// Largest multi-photon likelihood ratio between two sources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBound {
    pub ratio: f64,
    pub argmax_n: Option<usize>,
}

/// Result of [`bound_multi_yield`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiYieldBound {
    pub value: f64,
    pub unclamped: f64,
}

fn check_dims(dist: &PhotonNumberDistribution, y: &YieldVector) -> Result<()> {
    if dist.probs().len() != y.as_slice().len() {
        return Err(Error::Dimension {
            dist: dist.probs().len(),
            yields: y.as_slice().len(),
        });
    }
    Ok(())
}

/// Source yield `Y = sum_n p_n y_n`.
pub fn expected_yield(dist: &PhotonNumberDistribution, y: &YieldVector) -> Result<f64> {
    check_dims(dist, y)?;
    Ok(dist
        .probs()
        .iter()
        .zip(y.as_slice())
        .map(|(p, y)| p * y)
        .sum())
}

/// Multi-photon part of the yield, `sum_{n>=2} p_n y_n`.
pub fn multi_photon_yield(dist: &PhotonNumberDistribution, y: &YieldVector) -> Result<f64> {
    check_dims(dist, y)?;
    Ok(dist
        .probs()
        .iter()
        .zip(y.as_slice())
        .skip(2)
        .map(|(p, y)| p * y)
        .sum())
}

/// Multi-photon yield divided by the multi-photon probability.
pub fn normalized_multi_yield(dist: &PhotonNumberDistribution, y: &YieldVector) -> Result<f64> {
    let multi = multi_photon_prob(dist);
    if multi <= 0.0 {
        return Err(Error::Undefined(
            "normalized multi-photon yield of a source with no multi-photon weight".into(),
        ));
    }
    Ok(multi_photon_yield(dist, y)? / multi)
}

/// `P_2(mu) / P_2(mu') = e^{mu' - mu} (mu / mu')^2`, valid for `0 < mu < mu'`.
pub fn poisson_pair_ratio_bound(mu: f64, mu_prime: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < mu_prime && mu_prime.is_finite()) {
        return Err(Error::Domain(format!(
            "pair bound needs 0 < mu < mu', got mu = {mu}, mu' = {mu_prime}"
        )));
    }
    Ok((mu_prime - mu).exp() * (mu / mu_prime).powi(2))
}

/// `max_{n>=2} p_n / p'_n` over photon numbers where the signal has weight.
///
/// Bounds `sum_{n>=2} p_n y_n <= ratio * sum_{n>=2} p'_n y_n` for every yield
/// vector. Fails if the signal puts weight on a photon number the decoy never emits.
pub fn general_ratio_bound(
    signal: &PhotonNumberDistribution,
    decoy: &PhotonNumberDistribution,
) -> Result<RatioBound> {
    let mut best = RatioBound {
        ratio: 0.0,
        argmax_n: None,
    };
    for (n, &p) in signal.probs().iter().enumerate().skip(2) {
        if p <= 0.0 {
            continue;
        }
        let q = decoy.prob(n);
        if q <= 0.0 {
            return Err(Error::UnboundedRatio(n));
        }
        let r = p / q;
        if best.argmax_n.is_none() || r > best.ratio {
            best = RatioBound {
                ratio: r,
                argmax_n: Some(n),
            };
        }
    }
    Ok(best)
}

/// The coefficient used by the security verdict: the closed-form pair bound
/// for Poissonian sources with `mu < mu'`, the general ratio otherwise.
pub fn security_ratio(
    signal: &PhotonNumberDistribution,
    decoy: &PhotonNumberDistribution,
) -> Result<(f64, RatioMethod, RatioBound)> {
    let general = general_ratio_bound(signal, decoy)?;
    match (signal.poisson_mu(), decoy.poisson_mu()) {
        (Some(mu), Some(mu_prime)) if mu > 0.0 && mu < mu_prime => Ok((
            poisson_pair_ratio_bound(mu, mu_prime)?,
            RatioMethod::PoissonPair,
            general,
        )),
        _ => Ok((general.ratio, RatioMethod::General, general)),
    }
}

/// `Y_s^m <= ratio * Y_d`, clamped to a probability.
pub fn bound_multi_yield(y_d: f64, ratio: f64) -> MultiYieldBound {
    let unclamped = ratio * y_d;
    MultiYieldBound {
        value: unclamped.min(1.0),
        unclamped,
    }
}

/// Bound on the normalized signal multi-photon yield for a Poissonian signal:
/// `P_2(mu) / (P_2(mu') sum_{n>=2} P_n(mu)) * Y_d`. Not clamped.
pub fn bound_normalized_multi_yield(
    y_d: f64,
    signal: &PhotonNumberDistribution,
    mu_prime: f64,
) -> Result<f64> {
    let Some(mu) = signal.poisson_mu() else {
        return Err(Error::Domain(
            "normalized bound is defined for a Poissonian signal".into(),
        ));
    };
    let ratio = poisson_pair_ratio_bound(mu, mu_prime)?;
    let multi = multi_photon_prob(signal);
    if multi <= 0.0 {
        return Err(Error::Undefined(
            "signal source has no multi-photon weight".into(),
        ));
    }
    Ok(ratio / multi * y_d)
}

/// Loss-only condition without decoys: the yield must beat the multi-photon probability.
pub fn check_basic_security(y: f64, p_multi: f64) -> Verdict {
    Verdict::from_strict(y, p_multi)
}

/// Decoy condition `Y_s > ratio * Y_d`, in analytic mode.
pub fn check_decoy_security(y_s: f64, y_d: f64, ratio: f64) -> SecurityReport {
    let bound = bound_multi_yield(y_d, ratio);
    SecurityReport {
        y_s,
        y_d,
        ratio_bound: ratio,
        y_s_multi_upper: bound.value,
        condition_lhs: y_s,
        condition_rhs: bound.unclamped,
        verdict: Verdict::from_strict(y_s, bound.unclamped),
        normal_op_margin: None,
        mode: Mode::Analytic,
        z: None,
        margin: y_s - bound.unclamped,
    }
}

/// `(e^{mu'} / mu') (mu / e^{mu})`: below 1 the decoy condition holds for an
/// honest channel at any loss.
pub fn normal_op_margin(mu: f64, mu_prime: f64) -> Result<f64> {
    if !(mu > 0.0 && mu_prime > 0.0 && mu.is_finite() && mu_prime.is_finite()) {
        return Err(Error::Domain(format!(
            "normal-operation margin needs positive means, got mu = {mu}, mu' = {mu_prime}"
        )));
    }
    Ok((mu_prime - mu).exp() * mu / mu_prime)
}

/// `epsilon / P_2(mu')`, the coefficient for a factorial-tail near-single-photon
/// signal against a Poissonian decoy.
pub fn near_single_ratio(epsilon: f64, mu_prime: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Domain(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    if !(mu_prime > 0.0) {
        return Err(Error::Domain(format!("decoy mean must be positive, got {mu_prime}")));
    }
    Ok(epsilon / poisson_pmf(2, mu_prime)?)
}

fn assess(
    signal: &PhotonNumberDistribution,
    decoy: &PhotonNumberDistribution,
    y_s: f64,
    y_d: f64,
) -> Result<SecurityAssessment> {
    let (ratio, method, general) = security_ratio(signal, decoy)?;
    let mut report = check_decoy_security(y_s, y_d, ratio);
    let pair = match (signal.poisson_mu(), decoy.poisson_mu()) {
        (Some(mu), Some(mu_prime)) => {
            report.normal_op_margin = normal_op_margin(mu, mu_prime).ok();
            poisson_pair_ratio_bound(mu, mu_prime).ok()
        }
        _ => None,
    };
    let near_single = match (signal.kind(), decoy.poisson_mu()) {
        (SourceKind::NearSingleFactorial { epsilon, .. }, Some(mu_prime)) => {
            near_single_ratio(epsilon, mu_prime).ok()
        }
        _ => None,
    };
    let multi = multi_photon_prob(signal);
    let unclamped = report.condition_rhs;
    let normalized = (multi > 0.0).then(|| unclamped / multi);
    Ok(SecurityAssessment {
        report,
        details: BoundDetails {
            ratio_method: method,
            ratio_argmax_n: general.argmax_n,
            general_ratio_bound: general.ratio,
            poisson_pair_ratio_bound: pair,
            near_single_ratio: near_single,
            near_single_condition_rhs: near_single.map(|r| r * y_d),
            y_s_multi_upper_unclamped: unclamped,
            normalized_multi_upper: normalized,
            normalized_multi_upper_effective: normalized.map(|v| v.min(1.0)),
            signal_multi_photon_prob: multi,
            truncation_deficit: signal.truncation_deficit().max(decoy.truncation_deficit()),
        },
    })
}

/// Evaluate the decoy condition from closed-form yields under `yields`.
pub fn assess_analytic(
    signal: &PhotonNumberDistribution,
    decoy: &PhotonNumberDistribution,
    yields: &YieldVector,
) -> Result<SecurityAssessment> {
    let y_s = expected_yield(signal, yields)?;
    let y_d = expected_yield(decoy, yields)?;
    assess(signal, decoy, y_s, y_d)
}

/// Evaluate the decoy condition from measured yields, using the conservative
/// confidence limits `Y_s - z SE` and `Y_d + z SE`.
pub fn assess_empirical(
    signal: &PhotonNumberDistribution,
    decoy: &PhotonNumberDistribution,
    signal_est: &YieldEstimate,
    decoy_est: &YieldEstimate,
    z: f64,
) -> Result<SecurityAssessment> {
    let y_s = (signal_est.y_hat - z * signal_est.std_err).max(0.0);
    let y_d = (decoy_est.y_hat + z * decoy_est.std_err).min(1.0);
    let mut out = assess(signal, decoy, y_s, y_d)?;
    out.report.mode = Mode::Empirical;
    out.report.z = Some(z);
    Ok(out)
}
