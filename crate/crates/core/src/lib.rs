//! Decoy-state BB84 against photon-number-splitting attacks.
//!
//! - [`source`]: photon-number distributions (Poissonian and near-single-photon sources)
//! - [`channel`]: yield vectors for lossy channels and PNS eavesdroppers
//! - [`protocol`]: seeded Monte Carlo sessions, tallies, yield estimates, abort rule
//! - [`analysis`]: multi-photon yield bounds and the security verdict

pub mod analysis;
pub mod channel;
pub mod error;
pub mod protocol;
pub mod source;

pub use analysis::{
    assess_analytic, assess_empirical, bound_multi_yield, bound_normalized_multi_yield,
    check_basic_security, check_decoy_security, expected_yield, general_ratio_bound,
    multi_photon_yield, near_single_ratio, normal_op_margin, normalized_multi_yield,
    poisson_pair_ratio_bound, BoundDetails, Mode, SecurityAssessment, SecurityReport, Verdict,
};
pub use channel::{
    adversary_yield_vector, passive_yield_vector, realize_detection, AdversarySpec, YieldVector,
};
pub use error::{Error, Result};
pub use protocol::{
    abort_decision, estimate_yields, merge_tallies, run_session, Session, SessionConfig, Tally,
    YieldEstimate,
};
pub use source::{
    build_near_single_factorial, build_poissonian, build_spike, multi_photon_prob, poisson_pmf,
    sample_photon_number, PhotonNumberDistribution, SourceKind, SourceSpec,
};
