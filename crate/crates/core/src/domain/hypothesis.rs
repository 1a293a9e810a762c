use serde::{Deserialize, Serialize};

use super::{BitVector, Region, WeightedData};
use crate::error::{Error, Result};
use crate::l1regression::MultilinearPolynomial;

/// f_S(x) = OR_{i in S} x_i. The empty support is the constant-0 function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonotoneDisjunction {
    pub support: BitVector,
}

impl MonotoneDisjunction {
    pub fn new(n: usize, support: &[usize]) -> Result<Self> {
        Ok(MonotoneDisjunction { support: BitVector::from_indices(n, support)? })
    }

    pub fn from_mask(support: BitVector) -> Self {
        MonotoneDisjunction { support }
    }

    pub fn dimension(&self) -> usize {
        self.support.len()
    }

    #[inline]
    pub fn eval(&self, x: &BitVector) -> bool {
        x.intersects(&self.support)
    }
}

/// Checked evaluation of a monotone disjunction.
pub fn eval_disjunction(f: &MonotoneDisjunction, x: &BitVector) -> Result<bool> {
    if f.dimension() != x.len() {
        return Err(Error::DimensionMismatch { expected: f.dimension(), found: x.len() });
    }
    Ok(f.eval(x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hypothesis {
    Constant {
        value: bool,
    },
    Disjunction {
        f: MonotoneDisjunction,
    },
    /// Predicts 1 iff poly(x) >= threshold.
    ThresholdPoly {
        poly: MultilinearPolynomial,
        threshold: f64,
    },
    RegionSplit {
        region: Region,
        inside: Box<Hypothesis>,
        outside: Box<Hypothesis>,
    },
    /// The first entry whose region contains x decides; `default` otherwise.
    DecisionList {
        entries: Vec<(Region, Hypothesis)>,
        default: bool,
    },
    /// Predicts 1 iff sum_k w_k * (2 h_k(x) - 1) > 0; ties go to 0.
    WeightedMajority {
        terms: Vec<(f64, Hypothesis)>,
    },
}

impl Hypothesis {
    pub fn constant(value: bool) -> Self {
        Hypothesis::Constant { value }
    }

    pub fn disjunction(f: MonotoneDisjunction) -> Self {
        Hypothesis::Disjunction { f }
    }

    pub fn split(region: Region, inside: Hypothesis, outside: Hypothesis) -> Self {
        Hypothesis::RegionSplit { region, inside: Box::new(inside), outside: Box::new(outside) }
    }

    pub fn eval(&self, x: &BitVector) -> bool {
        match self {
            Hypothesis::Constant { value } => *value,
            Hypothesis::Disjunction { f } => f.eval(x),
            Hypothesis::ThresholdPoly { poly, threshold } => poly.eval(x) >= *threshold,
            Hypothesis::RegionSplit { region, inside, outside } => {
                if region.contains(x) {
                    inside.eval(x)
                } else {
                    outside.eval(x)
                }
            }
            Hypothesis::DecisionList { entries, default } => {
                entries.iter().find(|(r, _)| r.contains(x)).map(|(_, h)| h.eval(x)).unwrap_or(*default)
            }
            Hypothesis::WeightedMajority { terms } => {
                let s: f64 = terms.iter().map(|(w, h)| if h.eval(x) { *w } else { -*w }).sum();
                s > 0.0
            }
        }
    }

    /// The pointwise flip 1 - h.
    pub fn negate(self) -> Hypothesis {
        match self {
            Hypothesis::Constant { value } => Hypothesis::Constant { value: !value },
            other => Hypothesis::WeightedMajority { terms: vec![(-1.0, other)] },
        }
    }

    /// Smallest dimension on which every referenced coordinate exists.
    pub fn min_dimension(&self) -> usize {
        match self {
            Hypothesis::Constant { .. } => 0,
            Hypothesis::Disjunction { f } => f.dimension(),
            Hypothesis::ThresholdPoly { poly, .. } => poly.dimension(),
            Hypothesis::RegionSplit { region, inside, outside } => {
                region.min_dimension().max(inside.min_dimension()).max(outside.min_dimension())
            }
            Hypothesis::DecisionList { entries, .. } => {
                entries.iter().map(|(r, h)| r.min_dimension().max(h.min_dimension())).max().unwrap_or(0)
            }
            Hypothesis::WeightedMajority { terms } => terms.iter().map(|(_, h)| h.min_dimension()).max().unwrap_or(0),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Hypothesis::Constant { .. } => "constant",
            Hypothesis::Disjunction { .. } => "disjunction",
            Hypothesis::ThresholdPoly { .. } => "threshold_poly",
            Hypothesis::RegionSplit { .. } => "region_split",
            Hypothesis::DecisionList { .. } => "decision_list",
            Hypothesis::WeightedMajority { .. } => "weighted_majority",
        }
    }
}

/// Pr[h(x) != y] under the data's weights.
pub fn hypothesis_error(h: &Hypothesis, data: &impl WeightedData) -> Result<f64> {
    if data.num_points() == 0 {
        return Err(Error::EmptyData);
    }
    let need = h.min_dimension();
    if need > data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), found: need });
    }
    let mut err = 0.0;
    data.for_each_weighted(&mut |x, y, w| {
        if h.eval(x) != y {
            err += w;
        }
    });
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    #[test]
    fn disjunction_examples() {
        let empty = MonotoneDisjunction::new(4, &[]).unwrap();
        assert!(!eval_disjunction(&empty, &bv("1011")).unwrap());
        let f = MonotoneDisjunction::new(4, &[0, 1]).unwrap();
        assert!(eval_disjunction(&f, &bv("0100")).unwrap());
        let g = MonotoneDisjunction::new(4, &[2]).unwrap();
        assert!(!eval_disjunction(&g, &bv("1101")).unwrap());
        assert!(eval_disjunction(&g, &bv("110")).is_err());
    }

    #[test]
    fn decision_list_first_match() {
        let h = Hypothesis::DecisionList {
            entries: vec![
                (Region::CoordinateOne { index: 0 }, Hypothesis::constant(true)),
                (Region::CoordinateOne { index: 1 }, Hypothesis::constant(false)),
            ],
            default: false,
        };
        assert!(h.eval(&bv("11")));
        assert!(!h.eval(&bv("01")));
        assert!(!h.eval(&bv("00")));
    }

    #[test]
    fn negation_flips() {
        let f = MonotoneDisjunction::new(3, &[1]).unwrap();
        let h = Hypothesis::disjunction(f);
        let g = h.clone().negate();
        for v in 0..8u64 {
            let x = BitVector::from_u64(3, v);
            assert_ne!(h.eval(&x), g.eval(&x));
        }
    }
}
