//! Policy construction and transforms against an independent quadrature
//! oracle, plus property tests of the transform invariants.

mod support;

use mixdat::policy::{bin_midpoint, Policy, UntiedScheme, WeightingFunction, DEFAULT_BINS};
use proptest::prelude::*;
use support::{beta_masses_by_quadrature, l1};

#[test]
fn quadrature_oracle_agrees_with_itself_on_uniform() {
    let masses = beta_masses_by_quadrature(1.0, 1.0, 64);
    for &m in &masses {
        assert!((m - 1.0 / 64.0).abs() < 1e-14);
    }
}

#[test]
fn beta_masses_match_quadrature_at_sub_one_shapes() {
    // shapes below 1 put integrable singularities at both endpoints
    let policy = Policy::beta(0.9, 0.9, 1024).unwrap();
    let oracle = beta_masses_by_quadrature(0.9, 0.9, 1024);
    let dist = l1(policy.masses(), &oracle);
    assert!(dist < 1e-8, "l1 = {dist:.3e}");
}

#[test]
fn beta_masses_match_quadrature_across_shapes() {
    for (a, b) in [(2.2, 0.9), (1.4, 0.7), (0.5, 0.5), (2.0, 2.0)] {
        let policy = Policy::beta(a, b, 512).unwrap();
        let oracle = beta_masses_by_quadrature(a, b, 512);
        let dist = l1(policy.masses(), &oracle);
        assert!(dist < 1e-8, "B({a},{b}): l1 = {dist:.3e}");
    }
}

/// Fine enough that the midpoint rule's O(h^{3/2}) endpoint error at
/// shape 0.5 sits well below the tolerance; see the module tests for the
/// default-resolution behaviour.
const IDENTITY_BINS: usize = 16_384;

#[test]
fn mix_to_dat_maps_symmetric_beta_to_shifted_beta() {
    // λ · 2·f_{α,α}(λ) is the Beta(α+1, α) density
    for alpha in [0.5, 0.9, 1.0, 2.0] {
        let p = Policy::beta(alpha, alpha, IDENTITY_BINS).unwrap();
        let image = p.mix_to_dat();
        let oracle = beta_masses_by_quadrature(alpha + 1.0, alpha, IDENTITY_BINS);
        let dist = l1(image.masses(), &oracle);
        assert!(dist < 1e-6, "alpha={alpha}: l1 = {dist:.3e}");
    }
}

#[test]
fn dat_to_untied_policy_is_the_symmetrized_mixture() {
    // the untied policy of B(2.2, 0.9) is the half-half mixture with its
    // reflection B(0.9, 2.2); mixture bin masses are mixtures of masses
    let p = Policy::beta(2.2, 0.9, DEFAULT_BINS).unwrap();
    let scheme = p.dat_to_untied();
    let fwd = beta_masses_by_quadrature(2.2, 0.9, DEFAULT_BINS);
    let rev = beta_masses_by_quadrature(0.9, 2.2, DEFAULT_BINS);
    let oracle: Vec<f64> = fwd.iter().zip(&rev).map(|(a, b)| 0.5 * (a + b)).collect();
    let dist = l1(scheme.policy.masses(), &oracle);
    assert!(dist < 1e-6, "l1 = {dist:.3e}");
}

fn arb_policy(n_bins: usize) -> impl Strategy<Value = Policy> {
    prop::collection::vec(0.0f64..1.0, n_bins)
        .prop_filter("needs positive total", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| Policy::from_weights(w).unwrap())
}

fn arb_weighting(n_bins: usize) -> impl Strategy<Value = WeightingFunction> {
    prop::collection::vec(0.0f64..=1.0, n_bins)
        .prop_map(|v| WeightingFunction::from_values(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn transforms_keep_masses_normalized(p in arb_policy(64)) {
        let image = p.mix_to_dat();
        prop_assert!(image.masses().iter().all(|&m| m >= 0.0));
        prop_assert!((image.masses().iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let scheme = p.dat_to_untied();
        prop_assert!((scheme.policy.masses().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let back = scheme.to_dat_policy();
        prop_assert!((back.masses().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn untied_policy_symmetric_and_weighting_pairs_sum_to_one(p in arb_policy(64)) {
        let scheme = p.dat_to_untied();
        let masses = scheme.policy.masses();
        let g = scheme.weighting.values();
        let n = masses.len();
        for i in 0..n {
            prop_assert_eq!(masses[i], masses[n - 1 - i]);
            let density_pair = (p.masses()[i] + p.masses()[n - 1 - i]) * n as f64;
            if density_pair >= 1e-12 {
                prop_assert!((g[i] + g[n - 1 - i] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn round_trip_recovers_the_policy(p in arb_policy(64)) {
        let back = p.dat_to_untied().to_dat_policy();
        prop_assert!(back.l1_distance(&p) < 1e-9);
    }

    #[test]
    fn identity_weighting_ties_untied_map_to_mix_map(p in arb_policy(64)) {
        let id = WeightingFunction::identity(64).unwrap();
        let via_untied = UntiedScheme::new(p.clone(), id).unwrap().to_dat_policy();
        prop_assert!(via_untied.l1_distance(&p.mix_to_dat()) < 1e-9);
    }

    #[test]
    fn untied_to_dat_total_mass_is_conserved(p in arb_policy(64), g in arb_weighting(64)) {
        let scheme = UntiedScheme::new(p, g).unwrap();
        let out = scheme.to_dat_policy();
        prop_assert!((out.masses().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(out.masses().iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn sampling_stays_in_unit_interval(p in arb_policy(32), seed in 0u64..1000) {
        for lam in p.sample(256, seed) {
            prop_assert!((0.0..1.0).contains(&lam));
        }
    }
}

#[test]
fn identity_weighting_values_are_midpoints() {
    let id = WeightingFunction::identity(16).unwrap();
    for (i, &v) in id.values().iter().enumerate() {
        assert_eq!(v, bin_midpoint(i, 16));
    }
}

#[test]
fn serialized_round_trip_through_both_maps() {
    // write 𝕌 output to text, read back, map to a DAT policy, compare
    let p = Policy::beta(1.4, 0.7, DEFAULT_BINS).unwrap();
    let scheme = p.dat_to_untied();
    let policy_text = scheme.policy.to_text();
    let gamma_text = scheme.weighting.to_text();
    let reloaded = UntiedScheme::new(
        Policy::from_text(&policy_text).unwrap(),
        WeightingFunction::from_text(&gamma_text).unwrap(),
    )
    .unwrap();
    let back = reloaded.to_dat_policy();
    let dist = back.l1_distance(&p);
    assert!(dist < 1e-9, "l1 = {dist:.3e}");
}
