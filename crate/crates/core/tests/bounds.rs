use decoy_core::analysis::security_ratio;
use decoy_core::source::build_explicit;
use decoy_core::{
    bound_multi_yield, build_poissonian, check_decoy_security, general_ratio_bound,
    multi_photon_yield, poisson_pair_ratio_bound, poisson_pmf, PhotonNumberDistribution, Verdict,
    YieldVector,
};
use proptest::prelude::*;

fn yield_vector(raw: &[f64]) -> YieldVector {
    let mut y = raw.to_vec();
    y[0] = 0.0;
    YieldVector::new(y).unwrap()
}

fn mean_pair() -> impl Strategy<Value = (f64, f64)> {
    (1e-3..2.0f64, 0.0..1.0f64).prop_map(|(mu_prime, frac)| (mu_prime * frac.max(1e-3), mu_prime))
}

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.iter().map(|p| p / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn pmf_ratio_strictly_decreasing((mu, mu_prime) in mean_pair()) {
        prop_assume!(mu < mu_prime);
        let ratio = |n| poisson_pmf(n, mu).unwrap() / poisson_pmf(n, mu_prime).unwrap();
        for n in 1..30 {
            prop_assert!(ratio(n) > ratio(n + 1), "n={n} mu={mu} mu'={mu_prime}");
        }
    }

    #[test]
    fn pair_bound_is_sound(
        (mu, mu_prime) in mean_pair(),
        raw in prop::collection::vec(0.0..=1.0f64, 21),
    ) {
        prop_assume!(mu < mu_prime);
        let (s, d) = (build_poissonian(mu, 20), build_poissonian(mu_prime, 20));
        // Tight truncation at n_max = 20 only fails for means well above 2.
        let (s, d) = (s.unwrap(), d.unwrap());
        let y = yield_vector(&raw);
        let denom = multi_photon_yield(&d, &y).unwrap();
        prop_assume!(denom > 0.0);
        let a = multi_photon_yield(&s, &y).unwrap() / denom;
        prop_assert!(a <= poisson_pair_ratio_bound(mu, mu_prime).unwrap() + 1e-12);
    }

    #[test]
    fn general_bound_is_sound(
        sig in prop::collection::vec(0.0..1.0f64, 11),
        dec in prop::collection::vec(1e-6..1.0f64, 11),
        raw in prop::collection::vec(0.0..=1.0f64, 11),
    ) {
        prop_assume!(sig.iter().sum::<f64>() > 0.0);
        let s = build_explicit(&normalized(sig), 10).unwrap();
        let d = build_explicit(&normalized(dec), 10).unwrap();
        let y = yield_vector(&raw);
        let bound = general_ratio_bound(&s, &d).unwrap().ratio;
        let lhs = multi_photon_yield(&s, &y).unwrap();
        let rhs = bound * multi_photon_yield(&d, &y).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn general_bound_matches_pair_bound((mu, mu_prime) in mean_pair()) {
        prop_assume!(mu < mu_prime && mu > 1e-3);
        let s = build_poissonian(mu, 30).unwrap();
        let d = build_poissonian(mu_prime, 30).unwrap();
        let g = general_ratio_bound(&s, &d).unwrap();
        let p = poisson_pair_ratio_bound(mu, mu_prime).unwrap();
        prop_assert_eq!(g.argmax_n, Some(2));
        prop_assert!(((g.ratio - p) / p).abs() < 1e-12);
    }

    #[test]
    fn secure_verdict_beats_multi_photon_bound(
        y_s in 0.0..=1.0f64,
        y_d in 0.0..=1.0f64,
        ratio in 0.0..5.0f64,
    ) {
        let r = check_decoy_security(y_s, y_d, ratio);
        prop_assert_eq!(r.verdict == Verdict::Secure, r.condition_lhs > r.condition_rhs);
        if r.verdict == Verdict::Secure {
            prop_assert!(y_s > bound_multi_yield(y_d, ratio).value);
        }
    }
}

#[test]
fn two_photon_only_vector_saturates_pair_bound() {
    for (mu, mu_prime) in [(0.1, 0.2), (0.3, 1.0), (0.5, 1.0), (1.2, 1.9)] {
        let s = build_poissonian(mu, 20).unwrap();
        let d = build_poissonian(mu_prime, 20).unwrap();
        let mut raw = vec![0.0; 21];
        raw[2] = 0.37;
        let y = yield_vector(&raw);
        let a = multi_photon_yield(&s, &y).unwrap() / multi_photon_yield(&d, &y).unwrap();
        let bound = poisson_pair_ratio_bound(mu, mu_prime).unwrap();
        assert!(((a - bound) / bound).abs() < 1e-12);
    }
}

#[test]
fn verdict_ratio_falls_back_to_general_for_equal_means() {
    let d: PhotonNumberDistribution = build_poissonian(1.0, 30).unwrap();
    let (ratio, _, _) = security_ratio(&d, &d).unwrap();
    assert_eq!(ratio, 1.0);
}
