//! SQ oracle contracts: answers within tolerance, budget accounting, and the
//! correlational embedding.

use std::sync::Arc;

use adl_core::distributions::{gen_random_labels, ExplicitDistribution, MarginalSpec};
use adl_core::domain::BitVector;
use adl_core::sqoracle::{
    empirical_draws, ratio_estimate, Backend, CorrQuery, CorrelationalOracle, CsqView, OracleSpec, SqOracle, StatQuery,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dist(seed: u64) -> ExplicitDistribution {
    gen_random_labels(6, &MarginalSpec::WeightBand { lo: 0, hi: 6, support_size: Some(20) }, 0.3, seed).unwrap()
}

/// Random bounded query given by a table over (point, label).
fn table_query(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..128).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn exact(d: &ExplicitDistribution, table: &[f64]) -> f64 {
    d.support().iter().map(|e| e.p * table[(e.x.to_u64() as usize) << 1 | e.y as usize]).sum()
}

fn check_backend(backend: Backend, queries: usize) -> (f64, u64) {
    let d = Arc::new(dist(3));
    let oracle = SqOracle::new(d.clone(), backend, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut violations = 0;
    for i in 0..queries {
        let table = table_query(&mut rng);
        let tau = [0.05, 0.1, 0.2][i % 3];
        let t = table.clone();
        let q = StatQuery::new("table", move |x: &BitVector, y| t[(x.to_u64() as usize) << 1 | y as usize]);
        let v = oracle.stat(&q, tau).unwrap();
        let err = (v - exact(&d, &table)).abs();
        worst = worst.max(err / tau);
        if err > tau {
            violations += 1;
        }
    }
    let b = oracle.budget();
    assert_eq!(b.queries, queries as u64);
    assert_eq!(b.stat_queries, queries as u64);
    assert_eq!(b.min_tolerance, Some(0.05));
    assert_eq!(b.tolerances.iter().map(|t| t.1).sum::<u64>(), queries as u64);
    (worst, violations)
}

#[test]
fn exact_backend_is_exact() {
    let (worst, bad) = check_backend(Backend::Exact, 10_000);
    assert!(worst < 1e-12 && bad == 0);
}

#[test]
fn adversarial_backend_within_tolerance() {
    let (worst, bad) = check_backend(Backend::Adversarial, 10_000);
    assert_eq!(bad, 0);
    assert!(worst > 0.98 && worst <= 0.99 + 1e-9, "adversarial offset ratio {worst}");
}

#[test]
fn empirical_backend_within_tolerance() {
    // delta = 1e-6 per query: with 10^4 queries no violation is expected.
    let (_, bad) = check_backend(Backend::empirical(), 10_000);
    assert_eq!(bad, 0);
}

#[test]
fn empirical_draw_count() {
    assert_eq!(empirical_draws(0.1, 0.05), (2.0 * 40f64.ln() / 0.01).ceil() as u64);
}

#[test]
fn cstat_matches_stat_embedding() {
    let d = dist(8);
    let oracle = SqOracle::exact(d.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let table: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let t1 = table.clone();
        let cq = CorrQuery::new("c", move |x: &BitVector| t1[x.to_u64() as usize]);
        let via_view = CsqView(&oracle).cstat(&cq, 0.1).unwrap();
        let manual: f64 =
            d.support().iter().map(|e| e.p * if e.y { 1.0 } else { -1.0 } * table[e.x.to_u64() as usize]).sum();
        assert!((via_view - manual).abs() < 1e-12);
        let via_stat = oracle.stat(&cq.to_stat(), 0.1).unwrap();
        assert!((via_stat - via_view).abs() < 1e-12);
    }
    let b = oracle.budget();
    assert_eq!(b.cstat_queries, 200);
    assert_eq!(b.stat_queries, 200);
}

#[test]
fn out_of_range_query_rejected() {
    let oracle = SqOracle::exact(dist(1));
    assert!(oracle.stat(&StatQuery::new("big", |_, _| 1.5), 0.1).is_err());
    assert!(oracle.stat(&StatQuery::new("ok", |_, _| 1.0), 0.0).is_err());
}

#[test]
fn trials_are_reproducible_and_independent() {
    let spec = OracleSpec::new(dist(2), Backend::empirical(), 4);
    let q = StatQuery::indicator("y", |_, y| y);
    let a = spec.make(0).stat(&q, 0.05).unwrap();
    assert_eq!(a, spec.make(0).stat(&q, 0.05).unwrap());
    let others: Vec<f64> = (1..6).map(|t| spec.make(t).stat(&q, 0.05).unwrap()).collect();
    assert!(others.iter().any(|&v| v != a));
}

proptest! {
    #[test]
    fn ratio_error_bound(p2 in 0.2f64..1.0, frac in 0.0f64..=1.0, tau in 0.0f64..0.02, s1 in -1.0f64..=1.0, s2 in -1.0f64..=1.0) {
        let gamma = 0.1;
        let p1 = frac * p2;
        let (e1, e2) = (p1 + s1 * tau, p2 + s2 * tau);
        match ratio_estimate(e1, e2, tau, gamma) {
            Ok(r) => prop_assert!((r - p1 / p2).abs() <= 2.0 * tau / gamma + 1e-12),
            Err(_) => prop_assert!(e2 - tau < gamma),
        }
    }
}
