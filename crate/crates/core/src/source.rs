//! Photon-number distributions for signal and decoy sources.
//!
//! A phase-randomized coherent source is a Poissonian mixture of Fock states,
//! so every source in this crate is described by nothing more than a truncated
//! probability vector over photon numbers `0..=n_max`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation bound for photon numbers.
pub const DEFAULT_N_MAX: usize = 30;

/// Largest probability mass a constructor may drop by truncating at `n_max`.
pub const MAX_TRUNCATION_DEFICIT: f64 = 1e-9;

/// Above this photon number the Poisson pmf is evaluated in log space.
const DIRECT_PMF_LIMIT: usize = 20;

// Slack for round-off when a vector is supposed to sum to exactly one.
const SUM_ROUNDOFF: f64 = 1e-12;

/// Source description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Poisson { mu: f64 },
    NearSingleFactorial { epsilon: f64 },
    Spike { epsilon: f64, n: usize },
    Explicit { probs: Vec<f64> },
}

impl SourceSpec {
    pub fn build(&self, n_max: usize) -> Result<PhotonNumberDistribution> {
        match self {
            SourceSpec::Poisson { mu } => build_poissonian(*mu, n_max),
            SourceSpec::NearSingleFactorial { epsilon } => {
                build_near_single_factorial(*epsilon, n_max)
            }
            SourceSpec::Spike { epsilon, n } => build_spike(*epsilon, *n, n_max),
            SourceSpec::Explicit { probs } => build_explicit(probs, n_max),
        }
    }
}

/// How a distribution was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceKind {
    Poisson { mu: f64 },
    /// `p_1 = 1 - epsilon`, `p_i = k / i!` for `i >= 2`.
    NearSingleFactorial { epsilon: f64, k: f64 },
    /// `p_1 = 1 - epsilon`, `p_n = epsilon`.
    Spike { epsilon: f64, n: usize },
    Explicit,
}

/// Truncated probability vector over Fock photon numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonNumberDistribution {
    probs: Vec<f64>,
    cdf: Vec<f64>,
    kind: SourceKind,
    mean: f64,
}

impl PhotonNumberDistribution {
    fn new(probs: Vec<f64>, kind: SourceKind) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(Error::Config(
                "photon-number probabilities must lie in [0, 1]".into(),
            ));
        }
        let cdf: Vec<f64> = probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect();
        let total = *cdf.last().expect("distribution has at least one entry");
        if total > 1.0 + SUM_ROUNDOFF {
            return Err(Error::Config(format!(
                "probabilities sum to {total}, exceeding 1"
            )));
        }
        let deficit = 1.0 - total;
        if deficit > MAX_TRUNCATION_DEFICIT {
            return Err(Error::Config(format!(
                "truncation at n_max = {} drops {deficit:.3e} of the probability mass (limit {MAX_TRUNCATION_DEFICIT:e})",
                probs.len() - 1
            )));
        }
        let mean = match kind {
            SourceKind::Poisson { mu } => mu,
            _ => probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum(),
        };
        Ok(Self {
            probs,
            cdf,
            kind,
            mean,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn kind(&self) -> SourceKind {
        self.kind
    }

    /// `mu` for Poissonian sources, `sum n p_n` otherwise.
    pub fn mean_photon_number(&self) -> f64 {
        self.mean
    }

    /// Mean photon number if this is a Poissonian source.
    pub fn poisson_mu(&self) -> Option<f64> {
        match self.kind {
            SourceKind::Poisson { mu } => Some(mu),
            _ => None,
        }
    }

    /// Probability mass lost to truncation, `1 - sum p_n`.
    pub fn truncation_deficit(&self) -> f64 {
        (1.0 - self.cdf[self.cdf.len() - 1]).max(0.0)
    }

    pub fn multi_photon_prob(&self) -> f64 {
        multi_photon_prob(self)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_photon_number(self, rng)
    }
}

/// `e^{-mu} mu^n / n!`.
pub fn poisson_pmf(n: usize, mu: f64) -> Result<f64> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::Domain(format!(
            "mean photon number must be finite and non-negative, got {mu}"
        )));
    }
    if mu == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if n <= DIRECT_PMF_LIMIT {
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        Ok((-mu).exp() * mu.powi(n as i32) / factorial)
    } else {
        let ln_factorial: f64 = (2..=n).map(|k| (k as f64).ln()).sum();
        Ok((-mu + n as f64 * mu.ln() - ln_factorial).exp())
    }
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max < 2 {
        return Err(Error::Config(format!("n_max must be at least 2, got {n_max}")));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Config(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    Ok(())
}

/// Phase-randomized coherent source with mean photon number `mu`.
pub fn build_poissonian(mu: f64, n_max: usize) -> Result<PhotonNumberDistribution> {
    check_n_max(n_max)?;
    let probs = (0..=n_max)
        .map(|n| poisson_pmf(n, mu))
        .collect::<Result<Vec<_>>>()?;
    PhotonNumberDistribution::new(probs, SourceKind::Poisson { mu })
}

/// Near-single-photon source with a factorial multi-photon tail.
///
/// `k` is normalized over the truncated tail so that `sum_{i>=2} p_i = epsilon`
/// holds exactly; for `n_max = 30` this is `epsilon / (e - 2)` to machine precision.
/// The vacuum term `p_0` is zero.
pub fn build_near_single_factorial(epsilon: f64, n_max: usize) -> Result<PhotonNumberDistribution> {
    check_n_max(n_max)?;
    check_epsilon(epsilon)?;
    let mut inv_factorials = Vec::with_capacity(n_max + 1);
    let mut f = 1.0;
    for i in 0..=n_max {
        if i > 0 {
            f /= i as f64;
        }
        inv_factorials.push(f);
    }
    let tail: f64 = inv_factorials[2..].iter().sum();
    let k = epsilon / tail;
    let mut probs = vec![0.0; n_max + 1];
    probs[1] = 1.0 - epsilon;
    for i in 2..=n_max {
        probs[i] = k * inv_factorials[i];
    }
    PhotonNumberDistribution::new(probs, SourceKind::NearSingleFactorial { epsilon, k })
}

/// Near-single-photon source whose whole multi-photon budget sits at `spike_n`.
pub fn build_spike(epsilon: f64, spike_n: usize, n_max: usize) -> Result<PhotonNumberDistribution> {
    check_n_max(n_max)?;
    check_epsilon(epsilon)?;
    if spike_n < 2 || spike_n > n_max {
        return Err(Error::Config(format!(
            "spike photon number must lie in [2, {n_max}], got {spike_n}"
        )));
    }
    let mut probs = vec![0.0; n_max + 1];
    probs[1] = 1.0 - epsilon;
    probs[spike_n] = epsilon;
    PhotonNumberDistribution::new(
        probs,
        SourceKind::Spike {
            epsilon,
            n: spike_n,
        },
    )
}

/// Arbitrary distribution; shorter vectors are zero-padded up to `n_max`.
pub fn build_explicit(probs: &[f64], n_max: usize) -> Result<PhotonNumberDistribution> {
    check_n_max(n_max)?;
    if probs.is_empty() {
        return Err(Error::Config("explicit distribution is empty".into()));
    }
    if probs.len() > n_max + 1 {
        return Err(Error::Config(format!(
            "explicit distribution has {} entries but n_max = {n_max}",
            probs.len()
        )));
    }
    let mut padded = probs.to_vec();
    padded.resize(n_max + 1, 0.0);
    PhotonNumberDistribution::new(padded, SourceKind::Explicit)
}

/// Probability that a pulse carries two or more photons.
pub fn multi_photon_prob(dist: &PhotonNumberDistribution) -> f64 {
    dist.probs.iter().skip(2).sum()
}

/// Inverse-CDF draw of a photon number. The truncation deficit maps to vacuum.
pub fn sample_photon_number<R: Rng + ?Sized>(dist: &PhotonNumberDistribution, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let n = dist.cdf.partition_point(|&c| c <= u);
    if n < dist.probs.len() {
        n
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Independent oracle: e^{-mu} from its Taylor series, then the pmf
    // by the recurrence P_n = P_{n-1} mu / n.
    fn oracle_pmf(n: usize, mu: f64) -> f64 {
        let mut exp_neg = 0.0;
        let mut term = 1.0;
        for k in 0..200 {
            exp_neg += term;
            term *= -mu / (k as f64 + 1.0);
        }
        (1..=n).fold(exp_neg, |p, k| p * mu / k as f64)
    }

    #[test]
    fn pmf_examples() {
        assert_eq!(poisson_pmf(0, 0.0).unwrap(), 1.0);
        let p = poisson_pmf(2, 1.0).unwrap();
        assert!((p - oracle_pmf(2, 1.0)).abs() < 1e-15);
        assert!((p - 0.18393972).abs() < 5e-9);
        let p = poisson_pmf(2, 0.3).unwrap();
        assert!((p - oracle_pmf(2, 0.3)).abs() < 1e-15);
        assert!((p - 0.03333682).abs() < 5e-9);
    }

    #[test]
    fn pmf_log_space_branch_matches_recurrence() {
        for n in 15..=60 {
            for mu in [0.3, 1.0, 2.0, 5.0] {
                let got = poisson_pmf(n, mu).unwrap();
                let want = oracle_pmf(n, mu);
                assert!(((got - want) / want).abs() < 1e-12, "n={n} mu={mu}");
            }
        }
        assert!(poisson_pmf(170, 1.0).unwrap() > 0.0);
        assert!(poisson_pmf(500, 1.0).unwrap().is_finite());
    }

    #[test]
    fn pmf_rejects_bad_mu() {
        assert!(matches!(poisson_pmf(1, -0.1), Err(Error::Domain(_))));
        assert!(matches!(poisson_pmf(1, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(poisson_pmf(1, f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn poissonian_builder() {
        let vac = build_poissonian(0.0, 30).unwrap();
        assert_eq!(vac.prob(0), 1.0);
        assert!(vac.probs()[1..].iter().all(|&p| p == 0.0));

        let d = build_poissonian(1.0, 30).unwrap();
        assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(d.n_max(), 30);

        let d = build_poissonian(0.3, 30).unwrap();
        assert!((d.prob(1) - 0.22224547).abs() < 5e-9);
        assert_eq!(d.poisson_mu(), Some(0.3));
    }

    #[test]
    fn poissonian_truncation_too_tight() {
        assert!(matches!(build_poissonian(5.0, 10), Err(Error::Config(_))));
        assert!(matches!(build_poissonian(0.3, 1), Err(Error::Config(_))));
    }

    #[test]
    fn near_single_factorial_examples() {
        let perfect = build_near_single_factorial(0.0, 30).unwrap();
        assert_eq!(perfect.prob(1), 1.0);
        assert_eq!(multi_photon_prob(&perfect), 0.0);

        let d = build_near_single_factorial(0.01, 30).unwrap();
        let SourceKind::NearSingleFactorial { k, .. } = d.kind() else {
            panic!("wrong kind");
        };
        let e = std::f64::consts::E;
        assert!((k - 0.01 / (e - 2.0)).abs() < 1e-15);
        assert!((k - 0.01392211).abs() < 5e-9);
        assert!((d.prob(2) - 0.00696106).abs() < 5e-9);
        assert!((multi_photon_prob(&d) - 0.01).abs() < 1e-9);
        assert_eq!(d.prob(0), 0.0);
        assert!(matches!(
            build_near_single_factorial(1.0, 30),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn near_single_factorial_is_proportional_to_poisson_one() {
        let d = build_near_single_factorial(0.05, 30).unwrap();
        let base = d.prob(2) / poisson_pmf(2, 1.0).unwrap();
        for n in 3..=30 {
            let r = d.prob(n) / poisson_pmf(n, 1.0).unwrap();
            assert!(((r - base) / base).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn spike_examples() {
        let d = build_spike(0.001, 10, 30).unwrap();
        assert_eq!(d.prob(1), 0.999);
        assert_eq!(d.prob(10), 0.001);
        assert_eq!(d.probs().iter().filter(|&&p| p > 0.0).count(), 2);

        let perfect = build_spike(0.0, 10, 30).unwrap();
        assert_eq!(perfect.prob(1), 1.0);
        assert_eq!(multi_photon_prob(&perfect), 0.0);

        let half = build_spike(0.5, 2, 30).unwrap();
        assert_eq!(half.prob(1), 0.5);
        assert_eq!(half.prob(2), 0.5);
    }

    #[test]
    fn spike_out_of_range() {
        assert!(matches!(build_spike(0.1, 1, 30), Err(Error::Config(_))));
        assert!(matches!(build_spike(0.1, 31, 30), Err(Error::Config(_))));
    }

    #[test]
    fn multi_photon_examples() {
        let d = build_explicit(&[0.0, 0.9, 0.1], 30).unwrap();
        assert!((multi_photon_prob(&d) - 0.1).abs() < 1e-15);
        let d = build_poissonian(0.3, 30).unwrap();
        // 1 - e^{-0.3}(1 + 0.3)
        assert!((multi_photon_prob(&d) - 0.03693631).abs() < 5e-9);
    }

    #[test]
    fn explicit_validation() {
        assert!(build_explicit(&[], 30).is_err());
        assert!(build_explicit(&[0.5, 0.4], 30).is_err());
        assert!(build_explicit(&[0.5, 0.6], 30).is_err());
        assert!(build_explicit(&[-0.1, 1.1], 30).is_err());
        assert!(build_explicit(&[0.0, 1.0, 0.0, 0.0], 2).is_err());
        assert_eq!(build_explicit(&[0.0, 1.0], 5).unwrap().n_max(), 5);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec: SourceSpec =
            serde_json::from_str(r#"{"type":"spike","epsilon":0.001,"n":10}"#).unwrap();
        assert_eq!(
            spec,
            SourceSpec::Spike {
                epsilon: 0.001,
                n: 10
            }
        );
        let back: SourceSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<SourceSpec>(r#"{"type":"laser","mu":1}"#).is_err());
    }

    #[test]
    fn sampling_point_mass() {
        let d = build_poissonian(0.0, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert!((0..1000).all(|_| d.sample(&mut rng) == 0));
    }

    #[test]
    fn sampling_spike_frequency() {
        let d = build_spike(0.5, 2, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = 1_000_000;
        let twos = (0..m).filter(|_| d.sample(&mut rng) == 2).count();
        let sigma = (0.25 / m as f64).sqrt();
        assert!((twos as f64 / m as f64 - 0.5).abs() < 4.0 * sigma);
    }

    #[test]
    fn sampling_poisson_mean() {
        let d = build_poissonian(1.0, 30).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = 1_000_000;
        let total: usize = (0..m).map(|_| d.sample(&mut rng)).sum();
        let sigma = (1.0 / m as f64).sqrt();
        assert!((total as f64 / m as f64 - 1.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = build_poissonian(0.7, 30).unwrap();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| d.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }
}
