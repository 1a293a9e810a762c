//! Chebyshev construction and L1 regression against closed-form oracles.

use adl_core::chebyshev::{build_approx, certify_approx, chebyshev_eval, ApproxTarget, UnivariatePoly};
use adl_core::distributions::{gen_random_labels, ExplicitDistribution, MarginalSpec};
use adl_core::domain::BitVector;
use adl_core::l1regression::{l1_fit, round_to_hypothesis, L1Options, ThresholdGrid};
use proptest::prelude::*;
use std::collections::HashMap;

fn random_dist(n: usize, seed: u64, support: usize) -> ExplicitDistribution {
    gen_random_labels(n, &MarginalSpec::WeightBand { lo: 0, hi: n, support_size: Some(support) }, 0.3, seed).unwrap()
}

/// Per-point label masses (p(x, 1), p(x, 0)).
fn label_masses(d: &ExplicitDistribution) -> HashMap<BitVector, (f64, f64)> {
    let mut m: HashMap<BitVector, (f64, f64)> = HashMap::new();
    for e in d.support() {
        let s = m.entry(e.x.clone()).or_default();
        if e.y {
            s.0 += e.p;
        } else {
            s.1 += e.p;
        }
    }
    m
}

proptest! {
    #[test]
    fn chebyshev_matches_trig_form(d in 0usize..40, t in -1.0f64..=1.0) {
        let trig = (d as f64 * t.acos()).cos();
        prop_assert!((chebyshev_eval(d, t) - trig).abs() < 1e-9);
    }

    #[test]
    fn chebyshev_outside_interval_is_cosh(d in 0usize..20, t in 1.0f64..3.0) {
        let hyp = (d as f64 * t.acosh()).cosh();
        prop_assert!((chebyshev_eval(d, t) - hyp).abs() <= 1e-9 * hyp.max(1.0));
    }

    #[test]
    fn approximation_certifies(r in 1usize..400, eps in 0.01f64..0.49) {
        let q = build_approx(r, eps).unwrap();
        let rep = certify_approx(&q, r, eps, ApproxTarget::Disjunction);
        prop_assert!(rep.pass, "r={} eps={} dev={}", r, eps, rep.max_dev());
        let bound = (2.0 * (r as f64).sqrt()).ceil() * (1.0 / eps).log2().ceil().max(1.0) + 1.0;
        prop_assert!((rep.degree as f64) <= bound);
    }

    #[test]
    fn monomial_form_agrees(r in 1usize..30, eps in 0.05f64..0.49, frac in 0.0f64..=1.0) {
        let q = build_approx(r, eps).unwrap();
        let coeffs = q.monomial_coefficients();
        let t = frac * r as f64;
        // Rounding error scale of the expanded form.
        let scale: f64 = coeffs.iter().enumerate().map(|(i, c)| c.abs() * t.powi(i as i32)).sum();
        let mono = UnivariatePoly::monomial(coeffs);
        prop_assert!((mono.eval(t) - q.eval(t)).abs() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn full_degree_fit_reaches_pointwise_optimum(seed in 0u64..200) {
        let n = 5;
        let d = random_dist(n, seed, 10);
        let fit = l1_fit(&d, &BitVector::ones(n), n, &L1Options::default()).unwrap();
        let oracle: f64 = label_masses(&d).values().map(|(a, b)| a.min(*b)).sum();
        prop_assert!((fit.loss - oracle).abs() < 1e-7, "fit {} vs pointwise {}", fit.loss, oracle);
    }

    #[test]
    fn degree_zero_fit_is_label_median(seed in 0u64..200) {
        let d = random_dist(6, seed, 15);
        let fit = l1_fit(&d, &BitVector::ones(6), 0, &L1Options::default()).unwrap();
        let p1: f64 = d.support().iter().filter(|e| e.y).map(|e| e.p).sum();
        prop_assert!((fit.loss - p1.min(1.0 - p1)).abs() < 1e-7);
    }

    #[test]
    fn loss_monotone_in_degree_and_rounding_bounded(seed in 0u64..100) {
        let n = 6;
        let d = random_dist(n, seed, 20);
        let mut prev = f64::INFINITY;
        for deg in 0..=3 {
            let fit = l1_fit(&d, &BitVector::ones(n), deg, &L1Options::default()).unwrap();
            prop_assert!(fit.loss <= prev + 1e-7);
            prev = fit.loss;
            let grid = ThresholdGrid { spacing: 0.01, midpoints: true };
            let rounded = round_to_hypothesis(&fit.poly, &d, &grid).unwrap();
            // Some threshold does at least as well as a uniformly random one,
            // whose expected 0-1 error is at most the L1 loss.
            prop_assert!(rounded.error <= fit.loss + 1e-7);
        }
    }
}
