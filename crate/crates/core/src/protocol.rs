//! Monte Carlo decoy-state BB84 sessions.
//!
//! Each pulse is independently replaced by a decoy with probability `alpha`,
//! gets a photon number from its source, a uniformly random BB84 state, and a
//! detection outcome from the session's single yield vector. Sessions are cut
//! into fixed-size batches, each driven by its own ChaCha stream derived from
//! `(seed, batch_index)`, so results do not depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{adversary_yield_vector, realize_detection, AdversarySpec, YieldVector};
use crate::error::{Error, Result};
use crate::source::{PhotonNumberDistribution, SourceSpec};

/// Pulses per independently seeded batch in [`Session::run`].
pub const BATCH_PULSES: u64 = 1 << 16;

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_PULSES: u64 = 1_000_000;
pub const DEFAULT_Z: f64 = 3.0;
pub const DEFAULT_ABORT_TOLERANCE: f64 = 0.25;

/// Fully resolved session parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub pulses: u64,
    pub seed: u64,
    /// Probability of replacing a signal pulse by a decoy pulse.
    pub alpha: f64,
    pub n_max: usize,
    pub signal: SourceSpec,
    pub decoy: SourceSpec,
    pub adversary: AdversarySpec,
    pub confidence_z: f64,
    pub abort_tolerance: f64,
    /// Expected `Y_d / Y_s` on an honest channel. Defaults to the ratio of mean
    /// photon numbers, `mu' / mu` for Poissonian sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_ratio: Option<f64>,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pulses == 0 {
            return Err(Error::Config("pulses must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.confidence_z > 0.0 && self.confidence_z.is_finite()) {
            return Err(Error::Config(format!(
                "confidence_z must be positive, got {}",
                self.confidence_z
            )));
        }
        if !(self.abort_tolerance >= 0.0 && self.abort_tolerance.is_finite()) {
            return Err(Error::Config(format!(
                "abort_tolerance must be non-negative, got {}",
                self.abort_tolerance
            )));
        }
        if let Some(r) = self.expected_ratio {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("expected_ratio must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

/// Counts indexed by photon number, one vector per source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PerSource {
    pub signal: Vec<u64>,
    pub decoy: Vec<u64>,
}

impl PerSource {
    fn zeros(n_max: usize) -> Self {
        Self {
            signal: vec![0; n_max + 1],
            decoy: vec![0; n_max + 1],
        }
    }

    fn add(&mut self, other: &PerSource) {
        for (a, b) in self.signal.iter_mut().zip(&other.signal) {
            *a += b;
        }
        for (a, b) in self.decoy.iter_mut().zip(&other.decoy) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub n_max: usize,
    pub sent_signal: u64,
    pub sent_decoy: u64,
    pub detected_signal: u64,
    pub detected_decoy: u64,
    /// Detected signal pulses whose bases matched; these carry key bits.
    pub sifted_signal: u64,
    pub per_n_sent: PerSource,
    pub per_n_detected: PerSource,
}

impl Tally {
    pub fn empty(n_max: usize) -> Self {
        Self {
            n_max,
            sent_signal: 0,
            sent_decoy: 0,
            detected_signal: 0,
            detected_decoy: 0,
            sifted_signal: 0,
            per_n_sent: PerSource::zeros(n_max),
            per_n_detected: PerSource::zeros(n_max),
        }
    }

    pub fn pulses(&self) -> u64 {
        self.sent_signal + self.sent_decoy
    }
}

/// Componentwise sum of two tallies over the same photon-number range.
pub fn merge_tallies(a: &Tally, b: &Tally) -> Result<Tally> {
    if a.n_max != b.n_max {
        return Err(Error::Merge(format!(
            "n_max differs ({} vs {})",
            a.n_max, b.n_max
        )));
    }
    let mut out = a.clone();
    out.sent_signal += b.sent_signal;
    out.sent_decoy += b.sent_decoy;
    out.detected_signal += b.detected_signal;
    out.detected_decoy += b.detected_decoy;
    out.sifted_signal += b.sifted_signal;
    out.per_n_sent.add(&b.per_n_sent);
    out.per_n_detected.add(&b.per_n_detected);
    Ok(out)
}

/// Empirical yield `detected / sent` with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YieldEstimate {
    pub y_hat: f64,
    pub std_err: f64,
    pub sent: u64,
    pub detected: u64,
}

impl YieldEstimate {
    /// `None` when nothing was sent.
    pub fn from_counts(sent: u64, detected: u64) -> Option<Self> {
        if sent == 0 {
            return None;
        }
        let y_hat = detected as f64 / sent as f64;
        Some(Self {
            y_hat,
            std_err: (y_hat * (1.0 - y_hat) / sent as f64).sqrt(),
            sent,
            detected,
        })
    }
}

/// Signal and decoy yield estimates from a tally.
pub fn estimate_yields(tally: &Tally) -> Result<(YieldEstimate, YieldEstimate)> {
    let signal = YieldEstimate::from_counts(tally.sent_signal, tally.detected_signal)
        .ok_or(Error::EstimateUnavailable("signal"))?;
    let decoy = YieldEstimate::from_counts(tally.sent_decoy, tally.detected_decoy)
        .ok_or(Error::EstimateUnavailable("decoy"))?;
    Ok((signal, decoy))
}

/// Arithmetic behind an abort decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AbortTest {
    pub decoy_lower: f64,
    pub signal_upper: f64,
    pub ceiling: f64,
    pub expected_ratio: f64,
    pub tolerance: f64,
    pub z: f64,
    pub aborted: bool,
}

/// One-sided test: abort when the decoy yield is too large relative to the
/// signal yield, even after giving both the benefit of `z` standard errors.
pub fn abort_test(
    signal: &YieldEstimate,
    decoy: &YieldEstimate,
    expected_ratio: f64,
    tolerance: f64,
    z: f64,
) -> AbortTest {
    let decoy_lower = decoy.y_hat - z * decoy.std_err;
    let signal_upper = signal.y_hat + z * signal.std_err;
    let ceiling = expected_ratio * (1.0 + tolerance) * signal_upper;
    AbortTest {
        decoy_lower,
        signal_upper,
        ceiling,
        expected_ratio,
        tolerance,
        z,
        aborted: decoy.y_hat > 0.0 && decoy_lower > ceiling,
    }
}

pub fn abort_decision(
    signal: &YieldEstimate,
    decoy: &YieldEstimate,
    expected_ratio: f64,
    tolerance: f64,
    z: f64,
) -> bool {
    abort_test(signal, decoy, expected_ratio, tolerance, z).aborted
}

/// Honest-channel `Y_d / Y_s` in the high-loss limit: the ratio of mean photon numbers.
pub fn default_expected_ratio(
    signal: &PhotonNumberDistribution,
    decoy: &PhotonNumberDistribution,
) -> Result<f64> {
    let s = signal.mean_photon_number();
    let d = decoy.mean_photon_number();
    if !(s > 0.0 && d > 0.0) {
        return Err(Error::Undefined(format!(
            "expected yield ratio needs positive mean photon numbers (signal {s}, decoy {d})"
        )));
    }
    Ok(d / s)
}

/// A validated configuration with its sources and yield vector resolved.
#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    signal: PhotonNumberDistribution,
    decoy: PhotonNumberDistribution,
    yields: YieldVector,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self> {
        config.validate()?;
        let signal = config.signal.build(config.n_max)?;
        let decoy = config.decoy.build(config.n_max)?;
        let yields = adversary_yield_vector(&config.adversary, config.n_max, &signal)?;
        Ok(Self {
            config,
            signal,
            decoy,
            yields,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn signal(&self) -> &PhotonNumberDistribution {
        &self.signal
    }

    pub fn decoy(&self) -> &PhotonNumberDistribution {
        &self.decoy
    }

    pub fn yields(&self) -> &YieldVector {
        &self.yields
    }

    pub fn expected_ratio(&self) -> Result<f64> {
        match self.config.expected_ratio {
            Some(r) => Ok(r),
            None => default_expected_ratio(&self.signal, &self.decoy),
        }
    }

    /// Simulate `pulses` pulses on the stream `(seed, batch_index)`.
    pub fn run_batch(&self, batch_index: u64, pulses: u64) -> Tally {
        let mut rng = batch_rng(self.config.seed, batch_index);
        let mut t = Tally::empty(self.config.n_max);
        let alpha = self.config.alpha;
        for _ in 0..pulses {
            let is_decoy = rng.random::<f64>() < alpha;
            let source = if is_decoy { &self.decoy } else { &self.signal };
            let n = source.sample(&mut rng);
            // Decoys also get a random BB84 state so polarization reveals nothing.
            let alice: u32 = rng.random();
            let alice_basis = (alice >> 1) & 1 == 1;
            let detected = realize_detection(&self.yields, n, &mut rng);
            let bob_basis: bool = rng.random();

            if is_decoy {
                t.sent_decoy += 1;
                t.per_n_sent.decoy[n] += 1;
                if detected {
                    t.detected_decoy += 1;
                    t.per_n_detected.decoy[n] += 1;
                }
            } else {
                t.sent_signal += 1;
                t.per_n_sent.signal[n] += 1;
                if detected {
                    t.detected_signal += 1;
                    t.per_n_detected.signal[n] += 1;
                    if alice_basis == bob_basis {
                        t.sifted_signal += 1;
                    }
                }
            }
        }
        t
    }

    /// Run the session split into `batches` near-equal batches.
    pub fn run_batches(&self, batches: u64) -> Tally {
        let batches = batches.clamp(1, self.config.pulses);
        let base = self.config.pulses / batches;
        let extra = self.config.pulses % batches;
        let sizes: Vec<(u64, u64)> = (0..batches)
            .map(|i| (i, base + u64::from(i < extra)))
            .collect();
        self.run_sized(&sizes)
    }

    /// Run the whole session in batches of [`BATCH_PULSES`].
    pub fn run(&self) -> Tally {
        let total = self.config.pulses;
        let sizes: Vec<(u64, u64)> = (0..total.div_ceil(BATCH_PULSES))
            .map(|i| (i, BATCH_PULSES.min(total - i * BATCH_PULSES)))
            .collect();
        self.run_sized(&sizes)
    }

    fn run_sized(&self, sizes: &[(u64, u64)]) -> Tally {
        sizes
            .par_iter()
            .map(|&(index, pulses)| self.run_batch(index, pulses))
            .reduce(
                || Tally::empty(self.config.n_max),
                |a, b| merge_tallies(&a, &b).expect("batches share n_max"),
            )
    }
}

/// Random stream for batch `batch_index` of a session seeded with `seed`.
pub fn batch_rng(seed: u64, batch_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch_index);
    rng
}

pub fn run_session(config: &SessionConfig) -> Result<Tally> {
    Ok(Session::new(config.clone())?.run())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(alpha: f64, adversary: AdversarySpec, pulses: u64, seed: u64) -> SessionConfig {
        SessionConfig {
            pulses,
            seed,
            alpha,
            n_max: 30,
            signal: SourceSpec::Poisson { mu: 0.3 },
            decoy: SourceSpec::Poisson { mu: 1.0 },
            adversary,
            confidence_z: DEFAULT_Z,
            abort_tolerance: DEFAULT_ABORT_TOLERANCE,
            expected_ratio: None,
        }
    }

    #[test]
    fn alpha_zero_sends_no_decoys() {
        let t = run_session(&config(0.0, AdversarySpec::Passive { eta: 0.5 }, 10_000, 1)).unwrap();
        assert_eq!(t.sent_decoy, 0);
        assert_eq!(t.sent_signal, 10_000);
        assert!(matches!(estimate_yields(&t), Err(Error::EstimateUnavailable("decoy"))));
    }

    #[test]
    fn alpha_one_sends_only_decoys() {
        let t = run_session(&config(1.0, AdversarySpec::Passive { eta: 0.5 }, 10_000, 1)).unwrap();
        assert_eq!(t.sent_signal, 0);
        assert_eq!(t.sifted_signal, 0);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = config(0.1, AdversarySpec::NaivePns, 0, 1);
        assert!(matches!(Session::new(c.clone()), Err(Error::Config(_))));
        c.pulses = 10;
        c.alpha = 1.5;
        assert!(Session::new(c.clone()).is_err());
        c.alpha = 0.1;
        c.confidence_z = 0.0;
        assert!(Session::new(c.clone()).is_err());
        c.confidence_z = 3.0;
        c.adversary = AdversarySpec::RateMatchingPns {
            eta_mimic: None,
            target_yield: Some(0.5),
        };
        assert!(matches!(Session::new(c), Err(Error::Infeasible(_))));
    }

    #[test]
    fn estimate_examples() {
        let e = YieldEstimate::from_counts(1000, 0).unwrap();
        assert_eq!((e.y_hat, e.std_err), (0.0, 0.0));
        let e = YieldEstimate::from_counts(10_000, 1900).unwrap();
        assert!((e.y_hat - 0.19).abs() < 1e-15);
        assert!((e.std_err - (0.19f64 * 0.81 / 10_000.0).sqrt()).abs() < 1e-15);
        assert!((e.std_err - 0.00392).abs() < 5e-6);
        let e = YieldEstimate::from_counts(100, 100).unwrap();
        assert_eq!(e.y_hat, 1.0);
        assert_eq!(e.std_err, 0.0);
        assert!(YieldEstimate::from_counts(0, 0).is_none());
    }

    #[test]
    fn abort_rule() {
        // Closed-form yields at M = 10^6, alpha = 0.1 for the honest and naive-PNS channels.
        let honest_s = YieldEstimate::from_counts(900_000, 2_696).unwrap();
        let honest_d = YieldEstimate::from_counts(100_000, 995).unwrap();
        assert!(!abort_decision(&honest_s, &honest_d, 1.0 / 0.3, 0.25, 3.0));

        let pns_s = YieldEstimate::from_counts(900_000, 33_243).unwrap();
        let pns_d = YieldEstimate::from_counts(100_000, 26_424).unwrap();
        assert!(abort_decision(&pns_s, &pns_d, 1.0 / 0.3, 0.25, 3.0));

        let zero_d = YieldEstimate::from_counts(100_000, 0).unwrap();
        let zero_s = YieldEstimate::from_counts(100_000, 0).unwrap();
        assert!(!abort_decision(&zero_s, &zero_d, 1.0 / 0.3, 0.0, 0.0));
    }

    #[test]
    fn expected_ratio_default() {
        let s = Session::new(config(0.1, AdversarySpec::NaivePns, 10, 1)).unwrap();
        assert!((s.expected_ratio().unwrap() - 1.0 / 0.3).abs() < 1e-12);
        let mut c = config(0.1, AdversarySpec::NaivePns, 10, 1);
        c.expected_ratio = Some(2.5);
        assert_eq!(Session::new(c).unwrap().expected_ratio().unwrap(), 2.5);
    }

    #[test]
    fn merge_identity_and_mismatch() {
        let t = run_session(&config(0.2, AdversarySpec::Passive { eta: 0.3 }, 5_000, 9)).unwrap();
        assert_eq!(merge_tallies(&t, &Tally::empty(30)).unwrap(), t);
        assert!(matches!(
            merge_tallies(&t, &Tally::empty(20)),
            Err(Error::Merge(_))
        ));
    }

    #[test]
    fn batch_streams_differ() {
        let s = Session::new(config(0.5, AdversarySpec::Passive { eta: 0.5 }, 1000, 4)).unwrap();
        assert_ne!(s.run_batch(0, 1000), s.run_batch(1, 1000));
        assert_eq!(s.run_batch(3, 1000), s.run_batch(3, 1000));
    }
}
