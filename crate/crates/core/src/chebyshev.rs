//! One-sided polynomial approximators of disjunctions on bounded-weight
//! inputs, built from Chebyshev polynomials, plus exhaustive certification.

use serde::{Deserialize, Serialize};

use crate::domain::BitVector;
use crate::error::{Error, Result};

/// T_d(t) by the three-term recurrence.
pub fn chebyshev_eval(d: usize, t: f64) -> f64 {
    match d {
        0 => 1.0,
        1 => t,
        _ => {
            let (mut prev, mut cur) = (1.0, t);
            for _ in 1..d {
                let next = 2.0 * t * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// A univariate real polynomial.
///
/// The Chebyshev form stores
/// `offset + gain * (T_d(shift + scale*t) / anchor)^power`, where `anchor`
/// is T_d evaluated at `shift` (the image of t = 0). Evaluating through the
/// recurrence keeps high degrees accurate, and the ratio at t = 0 is exactly
/// one, so q(0) = offset + gain up to a single rounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum UnivariatePoly {
    Monomial { coeffs: Vec<f64> },
    ChebyshevPower { d: usize, power: u32, shift: f64, scale: f64, anchor: f64, offset: f64, gain: f64 },
}

impl UnivariatePoly {
    pub fn monomial(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        UnivariatePoly::Monomial { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(vec![c])
    }

    pub fn identity() -> Self {
        Self::monomial(vec![0.0, 1.0])
    }

    pub fn degree(&self) -> usize {
        match self {
            UnivariatePoly::Monomial { coeffs } => coeffs.len().saturating_sub(1),
            UnivariatePoly::ChebyshevPower { d, power, gain, .. } => {
                if *gain == 0.0 {
                    0
                } else {
                    d * *power as usize
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            UnivariatePoly::Monomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c),
            UnivariatePoly::ChebyshevPower { d, power, shift, scale, anchor, offset, gain } => {
                let ratio = chebyshev_eval(*d, shift + scale * t) / anchor;
                offset + gain * ratio.powi(*power as i32)
            }
        }
    }

    /// Coefficients c_0..c_deg in the monomial basis, expanded in double
    /// precision. Accurate only for modest degrees; evaluation never goes
    /// through this path.
    pub fn monomial_coefficients(&self) -> Vec<f64> {
        match self {
            UnivariatePoly::Monomial { coeffs } => coeffs.clone(),
            UnivariatePoly::ChebyshevPower { d, power, shift, scale, anchor, offset, gain } => {
                let s = [*shift, *scale];
                let (mut prev, mut cur) = (vec![1.0], s.to_vec());
                let td = if *d == 0 {
                    prev
                } else {
                    for _ in 1..*d {
                        let mut next = poly_mul(&s, &cur);
                        next.iter_mut().for_each(|c| *c *= 2.0);
                        for (i, c) in prev.iter().enumerate() {
                            next[i] -= c;
                        }
                        prev = cur;
                        cur = next;
                    }
                    cur
                };
                let base: Vec<f64> = td.iter().map(|c| c / anchor).collect();
                let mut acc = vec![1.0];
                for _ in 0..*power {
                    acc = poly_mul(&acc, &base);
                }
                let mut out: Vec<f64> = acc.iter().map(|c| c * gain).collect();
                out[0] += offset;
                out
            }
        }
    }
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Degree used by [`build_approx`] for (r, eps), without building.
pub fn approx_degree(r: usize, eps: f64) -> Result<usize> {
    Ok(build_approx(r, eps)?.degree())
}

/// q with q(0) in [0, eps] and |q(w) - 1| <= eps for integers w in [1, r].
pub fn build_approx(r: usize, eps: f64) -> Result<UnivariatePoly> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidParameter(format!("accuracy {eps} outside (0, 1/2)")));
    }
    if r == 0 {
        return Err(Error::InvalidParameter("weight bound r must be at least 1".into()));
    }
    let large = eps >= 0.25;
    if r == 1 {
        let q0 = if large { eps } else { 0.0 };
        return Ok(UnivariatePoly::monomial(vec![q0, 1.0 - q0]));
    }
    let rf = r as f64;
    // s(t) = (r - t) / (r - 1) maps [1, r] onto [0, 1] and 0 to r/(r-1).
    let shift = rf / (rf - 1.0);
    let scale = -1.0 / (rf - 1.0);
    let root_r = rf.sqrt();
    let (d, power, gain) = if large {
        let d = (2.0 * root_r * (1.0 - 2.0 * eps).sqrt()).ceil() as usize;
        (d, 1, -(1.0 - eps))
    } else {
        let d = (2.0 * root_r).ceil() as usize;
        let k = (1.0 / eps).log2().ceil().max(1.0) as u32;
        (d, k, -1.0)
    };
    let anchor = chebyshev_eval(d, shift);
    Ok(UnivariatePoly::ChebyshevPower { d, power, shift, scale, anchor, offset: 1.0, gain })
}

/// Which function a certificate compares against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxTarget {
    /// 0 at weight 0 and 1 at weights 1..=r.
    Disjunction,
    /// 1 at every weight.
    ConstantOne,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub r: usize,
    pub eps: f64,
    pub degree: usize,
    pub max_dev_at_zero: f64,
    pub max_dev_on_band: f64,
    pub pass: bool,
}

impl CertReport {
    pub fn max_dev(&self) -> f64 {
        self.max_dev_at_zero.max(self.max_dev_on_band)
    }
}

/// Slack allowed on top of eps at every certified weight.
pub const CERT_SLACK: f64 = 1e-9;

/// Evaluates q at every integer weight 0..=r against the target.
pub fn certify_approx(q: &UnivariatePoly, r: usize, eps: f64, target: ApproxTarget) -> CertReport {
    let at_zero = q.eval(0.0);
    let max_dev_at_zero = match target {
        ApproxTarget::Disjunction => at_zero.abs(),
        ApproxTarget::ConstantOne => (at_zero - 1.0).abs(),
    };
    let max_dev_on_band = (1..=r).map(|w| (q.eval(w as f64) - 1.0).abs()).fold(0.0, f64::max);
    let pass = max_dev_at_zero.is_finite()
        && max_dev_on_band.is_finite()
        && max_dev_at_zero <= eps + CERT_SLACK
        && max_dev_on_band <= eps + CERT_SLACK;
    CertReport { r, eps, degree: q.degree(), max_dev_at_zero, max_dev_on_band, pass }
}

/// x -> base(W_S(x)).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightPoly {
    pub base: UnivariatePoly,
    pub coords: BitVector,
}

impl WeightPoly {
    pub fn eval(&self, x: &BitVector) -> f64 {
        self.base.eval(x.weight_on(&self.coords) as f64)
    }
}

pub fn lift(q: &UnivariatePoly, coords: &BitVector) -> WeightPoly {
    WeightPoly { base: q.clone(), coords: coords.clone() }
}

/// One row of the degree/error frontier table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub r: usize,
    pub eps: f64,
    pub degree: usize,
    pub max_dev: f64,
}

pub fn frontier(rs: &[usize], epsilons: &[f64]) -> Result<Vec<FrontierRow>> {
    let mut rows = Vec::with_capacity(rs.len() * epsilons.len());
    for &r in rs {
        for &eps in epsilons {
            let q = build_approx(r, eps)?;
            let rep = certify_approx(&q, r, eps, ApproxTarget::Disjunction);
            rows.push(FrontierRow { r, eps, degree: rep.degree, max_dev: rep.max_dev() });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_values() {
        assert_eq!(chebyshev_eval(0, 0.37), 1.0);
        assert_eq!(chebyshev_eval(7, 1.0), 1.0);
        assert_eq!(chebyshev_eval(3, 2.0), 26.0);
    }

    #[test]
    fn anchors_at_zero() {
        let q = build_approx(9, 0.3).unwrap();
        assert!((q.eval(0.0) - 0.3).abs() < 1e-15);
        let q = build_approx(9, 0.1).unwrap();
        assert_eq!(q.eval(0.0), 0.0);
    }

    #[test]
    fn degree_formula() {
        assert_eq!(build_approx(25, 0.3).unwrap().degree(), 7);
        // small regime: d = ceil(2*3) = 6, k = ceil(log2 10) = 4
        assert_eq!(build_approx(9, 0.1).unwrap().degree(), 24);
    }

    #[test]
    fn constant_one_targets() {
        let one = UnivariatePoly::constant(1.0);
        assert!(!certify_approx(&one, 9, 0.3, ApproxTarget::Disjunction).pass);
        let rep = certify_approx(&one, 9, 0.3, ApproxTarget::ConstantOne);
        assert!(rep.pass);
        assert_eq!(rep.degree, 0);
    }

    #[test]
    fn r_one_interpolates() {
        for eps in [0.3, 0.1] {
            let q = build_approx(1, eps).unwrap();
            assert!(certify_approx(&q, 1, eps, ApproxTarget::Disjunction).pass);
            assert_eq!(q.eval(1.0), 1.0);
        }
    }

    #[test]
    fn monomial_expansion_matches_low_degree() {
        let q = build_approx(9, 0.3).unwrap();
        let m = UnivariatePoly::monomial(q.monomial_coefficients());
        for w in 0..=9 {
            assert!((m.eval(w as f64) - q.eval(w as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn lift_uses_weight() {
        let s = BitVector::from_indices(2, &[0]).unwrap();
        let p = lift(&UnivariatePoly::identity(), &s);
        assert_eq!(p.eval(&"10".parse().unwrap()), 1.0);
        let empty = lift(&build_approx(4, 0.3).unwrap(), &BitVector::zeros(3));
        assert!((empty.eval(&"111".parse().unwrap()) - 0.3).abs() < 1e-15);
    }
}
