//! Generators, sampling, and the data file format.

use adl_core::distributions::{
    condition_on, draw, gen_planted, gen_random_labels, realize_marginal, seeded_rng, MarginalSpec,
};
use adl_core::domain::io::{format_distribution, format_sample, parse_data, DataFile};
use adl_core::domain::{hypothesis_error, BitVector, Hypothesis, MonotoneDisjunction, Region};
use proptest::prelude::*;

fn marginals(n: usize) -> impl Strategy<Value = MarginalSpec> {
    prop_oneof![
        (0..=n, 1usize..30).prop_map(move |(hi, s)| MarginalSpec::WeightBand { lo: 0, hi, support_size: Some(s) }),
        (0.05f64..0.95, 1..n, 5usize..40).prop_map(|(p, r, s)| MarginalSpec::HeavyLightMixture {
            p_heavy: p,
            r,
            support_size: s,
            light_max_weight: None
        }),
    ]
}

proptest! {
    #[test]
    fn marginals_respect_their_spec(seed in 0u64..1000, spec in marginals(12)) {
        let pts = realize_marginal(12, &spec, &mut seeded_rng(seed, 0)).unwrap();
        prop_assert!((pts.iter().map(|p| p.1).sum::<f64>() - 1.0).abs() < 1e-9);
        match spec {
            MarginalSpec::WeightBand { lo, hi, .. } => {
                prop_assert!(pts.iter().all(|(x, _)| (lo..=hi).contains(&x.weight())));
            }
            MarginalSpec::HeavyLightMixture { p_heavy, r, .. } => {
                let heavy: f64 = pts.iter().filter(|(x, _)| x.weight() > r).map(|p| p.1).sum();
                prop_assert!((heavy - p_heavy).abs() < 1e-9);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn planted_target_error_is_eta(seed in 0u64..500, eta in 0.0f64..0.45, mask in 1u16..) {
        let n = 10;
        let support: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let f = MonotoneDisjunction::new(n, &support).unwrap();
        let spec = MarginalSpec::WeightBand { lo: 0, hi: n, support_size: Some(25) };
        let d = gen_planted(n, &f, &spec, eta, seed).unwrap();
        let err = hypothesis_error(&Hypothesis::disjunction(f), &d).unwrap();
        prop_assert!((err - eta).abs() < 1e-9);
    }

    #[test]
    fn text_roundtrip(seed in 0u64..300) {
        let d = gen_random_labels(7, &MarginalSpec::WeightBand { lo: 1, hi: 5, support_size: Some(9) }, 0.5, seed).unwrap();
        let back = parse_data(&format_distribution(&d)).unwrap();
        let DataFile::Explicit(e) = back else { panic!("expected explicit") };
        prop_assert_eq!(e.support().len(), d.support().len());
        for (a, b) in e.support().iter().zip(d.support()) {
            prop_assert_eq!(&a.x, &b.x);
            prop_assert_eq!(a.y, b.y);
            prop_assert!((a.p - b.p).abs() < 1e-15);
        }
        let s = draw(&d, 50, seed).unwrap();
        prop_assert_eq!(parse_data(&format_sample(&s)).unwrap(), DataFile::Sample(s));
    }
}

#[test]
fn sample_frequencies_converge() {
    let d = gen_random_labels(5, &MarginalSpec::WeightBand { lo: 0, hi: 5, support_size: Some(6) }, 0.0, 3).unwrap();
    let m = 200_000;
    let s = draw(&d, m, 17).unwrap();
    for e in d.support() {
        let count = s.examples().iter().filter(|z| z.x == e.x && z.y == e.y).count();
        let sd = (e.p * (1.0 - e.p) / m as f64).sqrt();
        assert!((count as f64 / m as f64 - e.p).abs() < 5.0 * sd + 1e-9, "{} {}", e.x, e.p);
    }
    assert_eq!(draw(&d, 100, 5).unwrap(), draw(&d, 100, 5).unwrap());
}

#[test]
fn conditioning_renormalizes() {
    let d = gen_random_labels(6, &MarginalSpec::WeightBand { lo: 0, hi: 6, support_size: None }, 0.2, 1).unwrap();
    let coords = BitVector::from_indices(6, &[0, 2, 4]).unwrap();
    let region = Region::WeightAtMost { coords, theta: 1 };
    let mass = d.mass(&region);
    let c = condition_on(&d, &region).unwrap();
    assert!((c.support().iter().map(|e| e.p).sum::<f64>() - 1.0).abs() < 1e-12);
    for e in c.support() {
        assert!(region.contains(&e.x));
        let orig = d.support().iter().find(|o| o.x == e.x && o.y == e.y).unwrap();
        assert!((e.p - orig.p / mass).abs() < 1e-12);
    }
}
