//! Exhaustive ground truth: OPT over disjunction classes and full-cube
//! error evaluation.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{BitVector, GeneralDisjunction, Hypothesis, MonotoneDisjunction, WeightedData};
use crate::error::{Error, Result};

/// Cap on the number of concepts (or cube points) enumerated.
pub const ENUMERATION_CAP: u128 = 10_000_000;

/// Errors closer than this are treated as ties.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConceptClass {
    /// f_S for every S, including the empty (constant 0) disjunction.
    Monotone,
    /// The monotone class plus the constant-1 function.
    MonotoneConst1,
    /// Disjunctions of literals x_i and not-x_i, plus constant 1 (which
    /// covers every pattern containing both x_i and not-x_i).
    GeneralLiterals,
}

impl ConceptClass {
    pub fn name(&self) -> &'static str {
        match self {
            ConceptClass::Monotone => "monotone",
            ConceptClass::MonotoneConst1 => "monotone+const1",
            ConceptClass::GeneralLiterals => "general-literals",
        }
    }
}

impl std::str::FromStr for ConceptClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monotone" => Ok(ConceptClass::Monotone),
            "monotone+const1" | "monotone-const1" => Ok(ConceptClass::MonotoneConst1),
            "general-literals" | "general" => Ok(ConceptClass::GeneralLiterals),
            other => Err(Error::InvalidParameter(format!("unknown concept class `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Concept {
    Disjunction { support: Vec<usize> },
    General { positive: Vec<usize>, negative: Vec<usize> },
    ConstantOne,
}

impl Concept {
    pub fn eval(&self, x: &BitVector) -> bool {
        match self {
            Concept::Disjunction { support } => support.iter().any(|&i| x.get(i)),
            Concept::General { positive, negative } => {
                positive.iter().any(|&i| x.get(i)) || negative.iter().any(|&i| !x.get(i))
            }
            Concept::ConstantOne => true,
        }
    }

    /// The concept as a hypothesis over dimension n; general disjunctions
    /// have no direct hypothesis form and yield `None`.
    pub fn to_hypothesis(&self, n: usize) -> Option<Hypothesis> {
        match self {
            Concept::Disjunction { support } => MonotoneDisjunction::new(n, support).ok().map(Hypothesis::disjunction),
            Concept::ConstantOne => Some(Hypothesis::constant(true)),
            Concept::General { .. } => None,
        }
    }

    pub fn to_general(&self, n: usize) -> Option<GeneralDisjunction> {
        match self {
            Concept::General { positive, negative } => GeneralDisjunction::new(n, positive, negative).ok(),
            Concept::Disjunction { support } => GeneralDisjunction::new(n, support, &[]).ok(),
            Concept::ConstantOne => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptReport {
    pub opt: f64,
    pub argmin: Concept,
    pub class: ConceptClass,
    pub count_enumerated: u128,
}

/// Lex order on the sorted index lists of two masks.
fn cmp_mask_lex(a: u128, b: u128) -> Ordering {
    let diff = a ^ b;
    if diff == 0 {
        return Ordering::Equal;
    }
    let i = diff.trailing_zeros();
    let above = !((1u128 << i) - 1);
    // The lists agree below i. The one containing i is larger only if the
    // other one stops there (is a prefix).
    let (with_i, without_i) = if a >> i & 1 == 1 { (Ordering::Greater, b) } else { (Ordering::Less, a) };
    if without_i & above == 0 {
        with_i
    } else {
        with_i.reverse()
    }
}

fn mask_indices(mask: u64, limit: usize) -> Vec<usize> {
    (0..limit).filter(|&i| mask >> i & 1 == 1).collect()
}

/// P0 = Pr[y = 0] and the per-point signed masses d(x) = p1(x) - p0(x),
/// indexed by the point as an integer.
fn signed_masses(data: &impl WeightedData) -> (f64, HashMap<u64, f64>) {
    let mut p0 = 0.0;
    let mut d: HashMap<u64, f64> = HashMap::new();
    data.for_each_weighted(&mut |x, y, w| {
        let e = d.entry(x.to_u64()).or_insert(0.0);
        if y {
            *e += w;
        } else {
            *e -= w;
            p0 += w;
        }
    });
    (p0, d)
}

fn check_dim(n: usize, count: u128) -> Result<()> {
    if n > 40 || count > ENUMERATION_CAP {
        return Err(Error::CapExceeded { what: "concept enumeration", size: count, cap: ENUMERATION_CAP });
    }
    Ok(())
}

/// Exact OPT over the class with the lexicographically smallest minimizer
/// (by sorted index list; constant 1 ranks after every disjunction).
pub fn opt_enumerate(data: &impl WeightedData, class: ConceptClass) -> Result<OptReport> {
    if data.num_points() == 0 {
        return Err(Error::EmptyData);
    }
    match class {
        ConceptClass::Monotone | ConceptClass::MonotoneConst1 => opt_monotone(data, class),
        ConceptClass::GeneralLiterals => opt_general(data),
    }
}

fn opt_monotone(data: &impl WeightedData, class: ConceptClass) -> Result<OptReport> {
    let n = data.dim();
    let size = 1u128 << n.min(100);
    check_dim(n, size)?;
    let (p0, d) = signed_masses(data);
    // g(T) = sum over x subset of T of d(x); err(S) = P0 + g(complement S).
    let full: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut g = vec![0.0f64; 1usize << n];
    for (&x, &v) in &d {
        g[x as usize] += v;
    }
    for i in 0..n {
        let bit = 1usize << i;
        for t in 0..g.len() {
            if t & bit != 0 {
                g[t] += g[t ^ bit];
            }
        }
    }
    let err = |s: u64| p0 + g[(full & !s) as usize];
    let opt_disj = (0..=full).map(err).fold(f64::INFINITY, f64::min);
    let mut best: Option<u64> = None;
    for s in 0..=full {
        if err(s) <= opt_disj + TIE_TOL && best.map_or(true, |b| cmp_mask_lex(s as u128, b as u128) == Ordering::Less) {
            best = Some(s);
        }
    }
    let best = best.expect("at least one subset");
    let mut opt = err(best);
    let mut argmin = Concept::Disjunction { support: mask_indices(best, n) };
    let mut count = size;
    if class == ConceptClass::MonotoneConst1 {
        count += 1;
        if p0 < opt_disj - TIE_TOL {
            opt = p0;
            argmin = Concept::ConstantOne;
        }
    }
    Ok(OptReport { opt: opt.max(0.0), argmin, class, count_enumerated: count })
}

fn opt_general(data: &impl WeightedData) -> Result<OptReport> {
    let n = data.dim();
    let size = 3u128.checked_pow(n as u32).unwrap_or(u128::MAX);
    check_dim(n, size)?;
    let (p0, d) = signed_masses(data);
    // Ternary index, digit i: 0 = "x_i must be 0" (positive literal x_i),
    // 1 = "x_i must be 1" (negative literal), 2 = unconstrained. The general
    // disjunction predicts 0 exactly on points matching its pattern, so its
    // error is P0 + a[pattern] with a the sum of d over matching points.
    let len = size as usize;
    let mut pow3 = vec![1usize; n + 1];
    for i in 0..n {
        pow3[i + 1] = pow3[i] * 3;
    }
    let mut a = vec![0.0f64; len];
    for (&x, &v) in &d {
        let idx: usize = (0..n).map(|i| ((x >> i) & 1) as usize * pow3[i]).sum();
        a[idx] += v;
    }
    for i in 0..n {
        let p = pow3[i];
        for idx in 0..len {
            if (idx / p) % 3 == 2 {
                a[idx] = a[idx - 2 * p] + a[idx - p];
            }
        }
    }
    let decode = |idx: usize| -> (u64, u64) {
        let (mut pos, mut neg) = (0u64, 0u64);
        let mut r = idx;
        for i in 0..n {
            match r % 3 {
                0 => pos |= 1 << i,
                1 => neg |= 1 << i,
                _ => {}
            }
            r /= 3;
        }
        (pos, neg)
    };
    let opt_disj = a.iter().fold(f64::INFINITY, |m, v| m.min(p0 + v));
    // Lex order on the monotone image: positive indices, then n + negative.
    let key = |pos: u64, neg: u64| -> u128 { pos as u128 | (neg as u128) << n };
    let mut best: Option<(u64, u64)> = None;
    for (idx, v) in a.iter().enumerate() {
        if p0 + v <= opt_disj + TIE_TOL {
            let (pos, neg) = decode(idx);
            let better = match best {
                None => true,
                Some((bp, bn)) => cmp_mask_lex(key(pos, neg), key(bp, bn)) == Ordering::Less,
            };
            if better {
                best = Some((pos, neg));
            }
        }
    }
    let (pos, neg) = best.expect("at least one pattern");
    let (opt, argmin) = if p0 < opt_disj - TIE_TOL {
        (p0, Concept::ConstantOne)
    } else {
        (opt_disj, Concept::General { positive: mask_indices(pos, n), negative: mask_indices(neg, n) })
    };
    Ok(OptReport { opt: opt.max(0.0), argmin, class: ConceptClass::GeneralLiterals, count_enumerated: size + 1 })
}

/// Maximum dimension for full-cube summation.
pub const EXHAUSTIVE_MAX_DIM: usize = 24;

/// Pr[h(x) != y] by summing over all of {0,1}^n, looking each cube point up
/// in the data. Independent of the data's support order.
pub fn exhaustive_hypothesis_error(h: &Hypothesis, data: &impl WeightedData) -> Result<f64> {
    if data.num_points() == 0 {
        return Err(Error::EmptyData);
    }
    let n = data.dim();
    if n > EXHAUSTIVE_MAX_DIM {
        return Err(Error::CapExceeded { what: "cube summation", size: 1u128 << n, cap: 1u128 << EXHAUSTIVE_MAX_DIM });
    }
    let mut table: HashMap<u64, (f64, f64)> = HashMap::new();
    data.for_each_weighted(&mut |x, y, w| {
        let e = table.entry(x.to_u64()).or_insert((0.0, 0.0));
        if y {
            e.1 += w;
        } else {
            e.0 += w;
        }
    });
    let err = (0..1u64 << n)
        .into_par_iter()
        .map(|v| match table.get(&v) {
            None => 0.0,
            Some(&(p0, p1)) => {
                if h.eval(&BitVector::from_u64(n, v)) {
                    p0
                } else {
                    p1
                }
            }
        })
        .sum();
    Ok(err)
}

/// Every monotone disjunction over n coordinates, in mask order.
pub fn all_monotone(n: usize) -> Result<Vec<MonotoneDisjunction>> {
    check_dim(n, 1u128 << n.min(100))?;
    Ok((0..1u64 << n).map(|m| MonotoneDisjunction::from_mask(BitVector::from_u64(n, m))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ExplicitDistribution;
    use crate::domain::hypothesis_error;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    #[test]
    fn mask_lex_matches_index_lists() {
        for a in 0u64..64 {
            for b in 0u64..64 {
                let la = mask_indices(a, 6);
                let lb = mask_indices(b, 6);
                assert_eq!(cmp_mask_lex(a as u128, b as u128), la.cmp(&lb), "{a} {b}");
            }
        }
    }

    #[test]
    fn one_dimensional_half() {
        let d = ExplicitDistribution::from_weights(1, [(bv("0"), true, 0.5), (bv("1"), false, 0.5)]).unwrap();
        let r = opt_enumerate(&d, ConceptClass::MonotoneConst1).unwrap();
        assert!((r.opt - 0.5).abs() < 1e-15);
        assert_eq!(r.argmin, Concept::Disjunction { support: vec![] });
        assert_eq!(r.count_enumerated, 3);
    }

    #[test]
    fn brute_matches_direct() {
        let d = ExplicitDistribution::from_weights(
            3,
            [(bv("100"), true, 0.3), (bv("011"), false, 0.2), (bv("010"), true, 0.1), (bv("000"), false, 0.4)],
        )
        .unwrap();
        let r = opt_enumerate(&d, ConceptClass::Monotone).unwrap();
        let direct = all_monotone(3)
            .unwrap()
            .into_iter()
            .map(|f| hypothesis_error(&Hypothesis::disjunction(f), &d).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!((r.opt - direct).abs() < 1e-12);
        let h = r.argmin.to_hypothesis(3).unwrap();
        assert!((hypothesis_error(&h, &d).unwrap() - r.opt).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_matches_support_sum() {
        let d = ExplicitDistribution::from_weights(4, [(bv("1001"), true, 0.6), (bv("0110"), true, 0.4)]).unwrap();
        let h = Hypothesis::disjunction(MonotoneDisjunction::new(4, &[0]).unwrap());
        let a = exhaustive_hypothesis_error(&h, &d).unwrap();
        assert!((a - hypothesis_error(&h, &d).unwrap()).abs() < 1e-15);
    }
}
