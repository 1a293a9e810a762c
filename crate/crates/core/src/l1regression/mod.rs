//! Low-degree L1 polynomial regression: monomial features, an LP
//! formulation solved by the in-crate simplex, and threshold rounding.

mod features;
mod lp;
mod poly;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use features::{active_monomials, cmp_size_lex, independent_columns, monomial_features, DEFAULT_FEATURE_CAP};
pub use lp::{lp_solve, lp_solve_with, LpError, LpOptions, LpProblem, LpRow, LpSolution, LpStatus, Sense};
pub use poly::{Monomial, MultilinearPolynomial};

use crate::chebyshev::build_approx;
use crate::domain::{BitVector, Hypothesis, WeightedData};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Options {
    pub feature_cap: usize,
    pub lp: LpOptions,
}

impl Default for L1Options {
    fn default() -> Self {
        L1Options { feature_cap: DEFAULT_FEATURE_CAP, lp: LpOptions::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Fit {
    pub poly: MultilinearPolynomial,
    /// sum_j w_j |p(x_j) - y_j|, recomputed from the returned polynomial.
    pub loss: f64,
    /// Degree cap actually used: min(requested, |I|).
    pub degree: usize,
    /// Monomials that are non-zero somewhere on the data.
    pub active_features: usize,
    /// Linearly independent monomials entering the LP.
    pub lp_columns: usize,
    pub lp_iterations: usize,
}

/// Weighted (x, y) pairs with duplicates merged, sorted.
fn collect_weighted(data: &impl WeightedData) -> Vec<(BitVector, bool, f64)> {
    let mut acc: BTreeMap<(BitVector, bool), f64> = BTreeMap::new();
    data.for_each_weighted(&mut |x, y, w| {
        if w > 0.0 {
            *acc.entry((x.clone(), y)).or_insert(0.0) += w;
        }
    });
    acc.into_iter().map(|((x, y), w)| (x, y, w)).collect()
}

/// Weighted L1 loss of an arbitrary predictor.
pub fn l1_loss(data: &impl WeightedData, p: impl Fn(&BitVector) -> f64) -> f64 {
    let mut loss = 0.0;
    data.for_each_weighted(&mut |x, y, w| {
        let target = if y { 1.0 } else { 0.0 };
        loss += w * (p(x) - target).abs();
    });
    loss
}

/// Minimizes sum_j w_j |p(x_j) - y_j| over multilinear p of degree at most
/// `degree` supported on `coords`.
///
/// Only monomials that are non-zero on some data point can change the
/// loss, and among those only a linearly independent subset is needed, so
/// the LP is built over that reduced basis; the optimum is unchanged.
pub fn l1_fit(data: &impl WeightedData, coords: &BitVector, degree: usize, opts: &L1Options) -> Result<L1Fit> {
    if data.num_points() == 0 {
        return Err(Error::EmptyData);
    }
    if coords.len() != data.dim() {
        return Err(Error::DimensionMismatch { expected: data.dim(), found: coords.len() });
    }
    let degree = degree.min(coords.weight());
    let rows = collect_weighted(data);
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    let total: f64 = rows.iter().map(|r| r.2).sum();

    let mut points: Vec<BitVector> = rows.iter().map(|r| r.0.and(coords)).collect();
    points.sort();
    points.dedup();
    let active = active_monomials(&points, coords, degree, opts.feature_cap)?;
    let basis_idx = independent_columns(&points, &active);
    let monos: Vec<BitVector> = basis_idx.iter().map(|&k| active[k].clone()).collect();
    let f = monos.len();
    let m = rows.len();

    // Variables: c_k (free) for k < f, then e+_j, e-_j.
    let mut lp = LpProblem::new(f + 2 * m);
    for k in 0..f {
        lp.set_free(k);
    }
    let scale = m as f64 / total;
    for (j, (x, y, w)) in rows.iter().enumerate() {
        lp.objective[f + 2 * j] = w * scale;
        lp.objective[f + 2 * j + 1] = w * scale;
        let mut coeffs: Vec<(usize, f64)> =
            monos.iter().enumerate().filter(|(_, mono)| mono.is_subset_of(x)).map(|(k, _)| (k, 1.0)).collect();
        coeffs.push((f + 2 * j, -1.0));
        coeffs.push((f + 2 * j + 1, 1.0));
        lp.add_row(coeffs, Sense::Eq, if *y { 1.0 } else { 0.0 });
    }
    let sol = lp_solve_with(&lp, &opts.lp)?.into_optimal()?;
    let terms = monos.into_iter().zip(sol.x[..f].iter().copied()).collect();
    let poly = MultilinearPolynomial::new(coords.clone(), terms)?;
    let loss = l1_loss(data, |x| poly.eval(x)) / total;
    Ok(L1Fit { poly, loss, degree, active_features: active.len(), lp_columns: f, lp_iterations: sol.iterations })
}

/// Candidate thresholds for rounding a polynomial: an arithmetic grid on
/// [0, 1] with the given spacing, optionally every midpoint between sorted
/// distinct polynomial values on the data, and the two constant cut-offs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    pub spacing: f64,
    pub midpoints: bool,
}

impl ThresholdGrid {
    pub fn for_epsilon(eps: f64) -> Self {
        ThresholdGrid { spacing: eps / 8.0, midpoints: true }
    }

    /// Sorted, deduplicated candidates given the polynomial's values.
    pub fn candidates(&self, values: &[f64]) -> Vec<f64> {
        let mut c = Vec::new();
        if self.spacing > 0.0 {
            let steps = (1.0 / self.spacing).floor() as usize;
            for i in 0..=steps {
                c.push(i as f64 * self.spacing);
            }
        }
        let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        if self.midpoints {
            for w in v.windows(2) {
                c.push(0.5 * (w[0] + w[1]));
            }
        }
        if let (Some(lo), Some(hi)) = (v.first(), v.last()) {
            c.push(*lo);
            c.push(hi + 1.0);
        }
        c.sort_by(f64::total_cmp);
        c.dedup();
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rounded {
    pub hypothesis: Hypothesis,
    pub threshold: f64,
    pub error: f64,
}

/// Picks the threshold t minimizing the 0-1 error of [p(x) >= t] on the
/// data; ties go to the smallest t.
pub fn round_to_hypothesis(
    poly: &MultilinearPolynomial,
    data: &impl WeightedData,
    grid: &ThresholdGrid,
) -> Result<Rounded> {
    if data.num_points() == 0 {
        return Err(Error::EmptyData);
    }
    let mut vals: Vec<(f64, bool, f64)> = Vec::with_capacity(data.num_points());
    data.for_each_weighted(&mut |x, y, w| vals.push((poly.eval(x), y, w)));
    let values: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let cands = grid.candidates(&values);
    let total: f64 = vals.iter().map(|v| v.2).sum();

    // Sweep thresholds upward over points sorted by value.
    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Error at t below every value: all predicted 1, so the label-0 mass.
    let mut err: f64 = vals.iter().filter(|v| !v.1).map(|v| v.2).sum();
    let mut idx = 0;
    let mut best = (f64::INFINITY, f64::NAN);
    for &t in &cands {
        while idx < vals.len() && vals[idx].0 < t {
            // This point flips from predicted 1 to predicted 0.
            let (_, y, w) = vals[idx];
            if y {
                err += w;
            } else {
                err -= w;
            }
            idx += 1;
        }
        let e = err.max(0.0) / total;
        if e < best.0 - 1e-15 {
            best = (e, t);
        }
    }
    let (error, threshold) = best;
    let hypothesis = Hypothesis::ThresholdPoly { poly: poly.clone(), threshold };
    // Recompute directly to avoid drift from the incremental sweep.
    let error = crate::domain::hypothesis_error(&hypothesis, data).unwrap_or(error);
    Ok(Rounded { hypothesis, threshold, error })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1LearnerReport {
    pub r: usize,
    pub degree: usize,
    pub loss: f64,
    pub threshold: f64,
    pub error: f64,
}

/// Degree selection from the approximator at eps/4, L1 fit, then rounding
/// on a grid with spacing eps/8.
pub fn l1_regress_learner(
    data: &impl WeightedData,
    coords: &BitVector,
    eps: f64,
    opts: &L1Options,
) -> Result<(Hypothesis, L1LearnerReport)> {
    let mut r = 0;
    data.for_each_weighted(&mut |x, _, _| r = r.max(x.weight_on(coords)));
    let r = r.max(1);
    let degree = build_approx(r, eps / 4.0)?.degree();
    let fit = l1_fit(data, coords, degree, opts)?;
    let rounded = round_to_hypothesis(&fit.poly, data, &ThresholdGrid::for_epsilon(eps))?;
    let report =
        L1LearnerReport { r, degree: fit.degree, loss: fit.loss, threshold: rounded.threshold, error: rounded.error };
    Ok((rounded.hypothesis, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{ExplicitDistribution, WeightedExample};

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    #[test]
    fn zero_labels_fit_zero() {
        let d = ExplicitDistribution::from_weights(3, [(bv("101"), false, 1.0), (bv("011"), false, 2.0)]).unwrap();
        let fit = l1_fit(&d, &BitVector::ones(3), 2, &L1Options::default()).unwrap();
        assert!(fit.loss.abs() < 1e-12);
        assert!(fit.poly.terms().iter().all(|t| t.coeff.abs() < 1e-12));
    }

    #[test]
    fn two_point_rounding() {
        let d = ExplicitDistribution::new(
            1,
            vec![WeightedExample { x: bv("0"), y: false, p: 0.5 }, WeightedExample { x: bv("1"), y: true, p: 0.5 }],
        )
        .unwrap();
        let coords = BitVector::ones(1);
        let p = MultilinearPolynomial::new(coords, vec![(bv("0"), 0.2), (bv("1"), 0.6)]).unwrap();
        let r = round_to_hypothesis(&p, &d, &ThresholdGrid { spacing: 0.25, midpoints: false }).unwrap();
        assert_eq!(r.error, 0.0);
        assert!(r.threshold > 0.2 && r.threshold <= 0.8);
    }

    #[test]
    fn constant_one_rounds_clean() {
        let d = ExplicitDistribution::from_weights(2, [(bv("10"), true, 1.0), (bv("00"), true, 1.0)]).unwrap();
        let p = MultilinearPolynomial::constant(BitVector::ones(2), 1.0);
        let r = round_to_hypothesis(&p, &d, &ThresholdGrid::for_epsilon(0.1)).unwrap();
        assert_eq!(r.error, 0.0);
    }
}
