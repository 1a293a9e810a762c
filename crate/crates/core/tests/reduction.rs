//! The monotone reduction preserves OPT for general disjunctions.

use adl_core::bruteforce::{opt_enumerate, ConceptClass};
use adl_core::distributions::{gen_random_labels, MarginalSpec};
use adl_core::domain::io::DataFile;
use adl_core::domain::{hypothesis_error, monotonize_point, BitVector, GeneralDisjunction, Hypothesis};
use proptest::prelude::*;

/// Independent OPT over literal disjunctions: every assignment of each
/// coordinate to {absent, x_i, not x_i}, plus constant 1.
fn general_opt(d: &adl_core::distributions::ExplicitDistribution) -> f64 {
    let n = d.dim();
    let mut best = d.support().iter().filter(|e| !e.y).map(|e| e.p).sum::<f64>();
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let lits: Vec<usize> = (0..n)
            .map(|_| {
                let v = c % 3;
                c /= 3;
                v
            })
            .collect();
        let err: f64 = d
            .support()
            .iter()
            .filter(|e| {
                let h = lits.iter().enumerate().any(|(i, &l)| (l == 1 && e.x.get(i)) || (l == 2 && !e.x.get(i)));
                h != e.y
            })
            .map(|e| e.p)
            .sum();
        best = best.min(err);
    }
    best
}

#[test]
fn exhaustive_small_dimensions() {
    for n in 1..=3 {
        for seed in 0..15 {
            let d = gen_random_labels(n, &MarginalSpec::WeightBand { lo: 0, hi: n, support_size: None }, 0.4, seed)
                .unwrap();
            let oracle = general_opt(&d);
            let general = opt_enumerate(&d, ConceptClass::GeneralLiterals).unwrap().opt;
            let DataFile::Explicit(m) = DataFile::Explicit(d.clone()).monotonize_instance() else { unreachable!() };
            let mono = opt_enumerate(&m, ConceptClass::MonotoneConst1).unwrap().opt;
            assert!((oracle - general).abs() < 1e-12, "n={n} seed={seed}: {oracle} vs {general}");
            assert!((oracle - mono).abs() < 1e-12, "n={n} seed={seed}: {oracle} vs monotone {mono}");
        }
    }
}

proptest! {
    #[test]
    fn general_eval_matches_monotone_on_lifted_points(
        bits in prop::collection::vec(any::<bool>(), 1..12),
        pos_mask in any::<u16>(),
        neg_mask in any::<u16>(),
    ) {
        let n = bits.len();
        let pos: Vec<usize> = (0..n).filter(|i| pos_mask >> i & 1 == 1).collect();
        let neg: Vec<usize> = (0..n).filter(|i| neg_mask >> i & 1 == 1).collect();
        let g = GeneralDisjunction::new(n, &pos, &neg).unwrap();
        let x = BitVector::from_bools(&bits);
        let lifted = monotonize_point(&x);
        prop_assert_eq!(lifted.len(), 2 * n);
        prop_assert_eq!(g.eval(&x), g.to_monotone().eval(&lifted));
        let back = GeneralDisjunction::from_monotone(&g.to_monotone()).unwrap();
        prop_assert_eq!(back.eval(&x), g.eval(&x));
    }

    #[test]
    fn monotonized_error_equals_original(seed in 0u64..500, mask in any::<u16>()) {
        let n = 5;
        let d = gen_random_labels(n, &MarginalSpec::WeightBand { lo: 0, hi: n, support_size: Some(12) }, 0.2, seed).unwrap();
        let pos: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let neg: Vec<usize> = (0..n).filter(|i| mask >> (i + 8) & 1 == 1).collect();
        let g = GeneralDisjunction::new(n, &pos, &neg).unwrap();
        let direct: f64 = d.support().iter().filter(|e| g.eval(&e.x) != e.y).map(|e| e.p).sum();
        let DataFile::Explicit(m) = DataFile::Explicit(d).monotonize_instance() else { unreachable!() };
        let lifted = hypothesis_error(&Hypothesis::disjunction(g.to_monotone()), &m).unwrap();
        prop_assert!((direct - lifted).abs() < 1e-12);
    }
}
