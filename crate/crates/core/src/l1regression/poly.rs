use serde::{Deserialize, Serialize};

use crate::domain::BitVector;
use crate::error::{Error, Result};

/// p(x) = sum over A of coeff(A) * prod_{i in A} x_i, with every A inside
/// the ambient coordinate set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultilinearPolynomial {
    coords: BitVector,
    terms: Vec<Monomial>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub set: BitVector,
    pub coeff: f64,
}

impl MultilinearPolynomial {
    pub fn zero(coords: BitVector) -> Self {
        MultilinearPolynomial { coords, terms: Vec::new() }
    }

    pub fn constant(coords: BitVector, c: f64) -> Self {
        let n = coords.len();
        let mut p = Self::zero(coords);
        if c != 0.0 {
            p.terms.push(Monomial { set: BitVector::zeros(n), coeff: c });
        }
        p
    }

    /// Terms with zero coefficients are dropped; every monomial must lie
    /// inside `coords`.
    pub fn new(coords: BitVector, terms: Vec<(BitVector, f64)>) -> Result<Self> {
        let mut out = Vec::with_capacity(terms.len());
        for (set, coeff) in terms {
            if set.len() != coords.len() {
                return Err(Error::DimensionMismatch { expected: coords.len(), found: set.len() });
            }
            if !set.is_subset_of(&coords) {
                let bad = set.and_not(&coords).iter_ones().next().unwrap_or(0);
                return Err(Error::InvalidParameter(format!("monomial uses coordinate {bad} outside the ambient set")));
            }
            if !coeff.is_finite() {
                return Err(Error::InvalidParameter("non-finite coefficient".into()));
            }
            if coeff != 0.0 {
                out.push(Monomial { set, coeff });
            }
        }
        Ok(MultilinearPolynomial { coords, terms: out })
    }

    pub fn dimension(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &BitVector {
        &self.coords
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> usize {
        self.terms.iter().map(|m| m.set.weight()).max().unwrap_or(0)
    }

    #[inline]
    pub fn eval(&self, x: &BitVector) -> f64 {
        self.terms.iter().filter(|m| m.set.is_subset_of(x)).map(|m| m.coeff).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_products() {
        let i = BitVector::ones(3);
        let p = MultilinearPolynomial::new(
            i,
            vec![
                (BitVector::zeros(3), 0.5),
                (BitVector::from_indices(3, &[0]).unwrap(), 1.0),
                (BitVector::from_indices(3, &[0, 2]).unwrap(), -2.0),
            ],
        )
        .unwrap();
        assert_eq!(p.eval(&"000".parse().unwrap()), 0.5);
        assert_eq!(p.eval(&"100".parse().unwrap()), 1.5);
        assert_eq!(p.eval(&"101".parse().unwrap()), -0.5);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn rejects_outside_monomial() {
        let i = BitVector::from_indices(3, &[0]).unwrap();
        let bad = BitVector::from_indices(3, &[1]).unwrap();
        assert!(MultilinearPolynomial::new(i, vec![(bad, 1.0)]).is_err());
    }
}
