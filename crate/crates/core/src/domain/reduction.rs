use serde::{Deserialize, Serialize};

use super::{BitVector, LabeledExample, MonotoneDisjunction};
use crate::distributions::{EmpiricalSample, ExplicitDistribution, WeightedExample};
use crate::error::{Error, Result};

/// OR of positive literals x_i (i in `positive`) and negative literals
/// not-x_i (i in `negative`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneralDisjunction {
    pub positive: BitVector,
    pub negative: BitVector,
}

impl GeneralDisjunction {
    pub fn new(n: usize, positive: &[usize], negative: &[usize]) -> Result<Self> {
        Ok(GeneralDisjunction {
            positive: BitVector::from_indices(n, positive)?,
            negative: BitVector::from_indices(n, negative)?,
        })
    }

    pub fn dimension(&self) -> usize {
        self.positive.len()
    }

    pub fn eval(&self, x: &BitVector) -> bool {
        x.intersects(&self.positive) || x.complement().intersects(&self.negative)
    }

    /// Image under the monotone reduction: literal not-x_i becomes feature n+i.
    pub fn to_monotone(&self) -> MonotoneDisjunction {
        MonotoneDisjunction::from_mask(self.positive.concat(&self.negative))
    }

    /// Inverse of [`GeneralDisjunction::to_monotone`].
    pub fn from_monotone(f: &MonotoneDisjunction) -> Result<Self> {
        let m = f.dimension();
        if m % 2 != 0 {
            return Err(Error::InvalidParameter(format!("monotonized dimension {m} is odd")));
        }
        let n = m / 2;
        let mut positive = BitVector::zeros(n);
        let mut negative = BitVector::zeros(n);
        for i in f.support.iter_ones() {
            if i < n {
                positive.set(i, true);
            } else {
                negative.set(i - n, true);
            }
        }
        Ok(GeneralDisjunction { positive, negative })
    }
}

/// x -> (x, complement of x).
pub fn monotonize_point(x: &BitVector) -> BitVector {
    x.concat(&x.complement())
}

pub fn monotonize_distribution(d: &ExplicitDistribution) -> ExplicitDistribution {
    let support = d.support().iter().map(|e| WeightedExample { x: monotonize_point(&e.x), y: e.y, p: e.p }).collect();
    ExplicitDistribution::from_parts_unchecked(2 * d.dim(), support)
}

pub fn monotonize_sample(s: &EmpiricalSample) -> EmpiricalSample {
    let examples = s.examples().iter().map(|e| LabeledExample { x: monotonize_point(&e.x), y: e.y }).collect();
    EmpiricalSample::from_parts_unchecked(2 * s.dim(), examples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_agrees() {
        let g = GeneralDisjunction::new(2, &[0], &[1]).unwrap();
        let x: BitVector = "01".parse().unwrap();
        let mx = monotonize_point(&x);
        assert_eq!(mx.to_string(), "0110");
        assert!(!g.eval(&x));
        assert!(!g.to_monotone().eval(&mx));
        assert_eq!(g.to_monotone().support.indices(), vec![0, 3]);
        assert_eq!(GeneralDisjunction::from_monotone(&g.to_monotone()).unwrap(), g);
    }
}
