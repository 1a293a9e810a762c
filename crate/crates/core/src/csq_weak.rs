//! Weak agnostic learner using only correlational statistical queries:
//! estimate label correlations with low-degree parities, find a bounded
//! polynomial maximizing the estimated correlation by LP, and threshold it.
//!
//! Inside this module labels and parities use the {-1, 1} convention; the
//! conversions are `signed_label` and `ParityBasis::eval`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::seeded_rng;
use crate::domain::{BitVector, Hypothesis};
use crate::error::{Error, Result};
use crate::l1regression::{lp_solve, LpProblem, MultilinearPolynomial, Sense};
use crate::sqoracle::{CorrQuery, CorrelationalOracle};

/// Largest basis accepted.
pub const BASIS_CAP: usize = 1 << 14;
/// Dimension up to which the whole cube serves as constraint set.
pub const ENUMERATE_MAX_DIM: usize = 16;
/// Default advantage constant: error at most 1/2 - kappa eps.
pub const DEFAULT_KAPPA: f64 = 1.0 / 16.0;
/// Default grid constant: thresholds spaced c eps apart.
pub const DEFAULT_GRID_C: f64 = 1.0 / 8.0;

/// y in {0,1} to {-1,1}.
pub fn signed_label(y: bool) -> f64 {
    if y {
        1.0
    } else {
        -1.0
    }
}

/// All parities g_S(x) = prod_{i in S} (1 - 2 x_i) with |S| <= degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityBasis {
    pub n: usize,
    pub degree: usize,
    pub sets: Vec<BitVector>,
}

impl ParityBasis {
    pub fn new(n: usize, degree: usize) -> Result<Self> {
        let degree = degree.min(n);
        let mut size: u128 = 0;
        let mut binom: u128 = 1;
        for k in 0..=degree {
            size += binom;
            binom = binom * (n - k) as u128 / (k + 1) as u128;
        }
        if size > BASIS_CAP as u128 {
            return Err(Error::CapExceeded { what: "parity basis", size, cap: BASIS_CAP as u128 });
        }
        let mut sets = Vec::with_capacity(size as usize);
        let mut cur = Vec::new();
        fn rec(n: usize, start: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<BitVector>) {
            out.push(BitVector::from_indices(n, cur).expect("indices below n"));
            if left == 0 {
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(n, i + 1, left - 1, cur, out);
                cur.pop();
            }
        }
        rec(n, 0, degree, &mut cur, &mut sets);
        sets.sort_by(|a, b| a.weight().cmp(&b.weight()).then_with(|| a.cmp_lex_indices(b)));
        Ok(ParityBasis { n, degree, sets })
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn eval(&self, k: usize, x: &BitVector) -> f64 {
        if x.weight_on(&self.sets[k]) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// One CSTAT query per basis element: estimates of E[(2y - 1) g_S(x)].
pub fn parity_correlations(oracle: &dyn CorrelationalOracle, basis: &ParityBasis, tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {tau} must be positive")));
    }
    (0..basis.len())
        .map(|k| {
            let q = CorrQuery::new(format!("parity:{:?}", basis.sets[k].indices()), move |x| basis.eval(k, x));
            oracle.cstat(&q, tau)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintMode {
    /// Every point of {0,1}^n (n at most ENUMERATE_MAX_DIM).
    Enumerate,
    /// Caller-supplied points plus this many uniform random points.
    SupportRandom { random: usize },
}

/// Constraint points for the LP. `extra` is only used by `SupportRandom`.
pub fn constraint_points(mode: ConstraintMode, n: usize, extra: &[BitVector], seed: u64) -> Result<Vec<BitVector>> {
    match mode {
        ConstraintMode::Enumerate => {
            if n > ENUMERATE_MAX_DIM {
                return Err(Error::CapExceeded {
                    what: "constraint cube",
                    size: 1u128 << n,
                    cap: 1 << ENUMERATE_MAX_DIM,
                });
            }
            Ok((0..1u64 << n).map(|v| BitVector::from_u64(n, v)).collect())
        }
        ConstraintMode::SupportRandom { random } => {
            let mut rng = seeded_rng(seed, 31);
            let mut pts: Vec<BitVector> = extra.to_vec();
            for _ in 0..random {
                let bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
                pts.push(BitVector::from_bools(&bits));
            }
            pts.sort_by(|a, b| a.words().cmp(b.words()));
            pts.dedup();
            Ok(pts)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityPolynomial {
    pub basis: ParityBasis,
    pub coeffs: Vec<f64>,
    /// Sum of coeff * estimate.
    pub objective: f64,
    /// Constraint rows in the final LP.
    pub active_rows: usize,
    pub lp_rounds: usize,
}

impl ParityPolynomial {
    pub fn eval(&self, x: &BitVector) -> f64 {
        self.coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(k, c)| c * self.basis.eval(k, x)).sum()
    }

    /// The same function as a multilinear polynomial in x over {0,1}.
    pub fn to_multilinear(&self) -> Result<MultilinearPolynomial> {
        let n = self.basis.n;
        let mut acc: std::collections::BTreeMap<Vec<usize>, f64> = std::collections::BTreeMap::new();
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            // prod (1 - 2 x_i) = sum_{T subset S} (-2)^{|T|} x_T
            let s = self.basis.sets[k].indices();
            for mask in 0u64..1 << s.len() {
                let t: Vec<usize> = s.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 1).map(|(_, &i)| i).collect();
                *acc.entry(t.clone()).or_insert(0.0) += c * (-2f64).powi(t.len() as i32);
            }
        }
        let terms: Vec<(BitVector, f64)> = acc
            .into_iter()
            .filter(|(_, c)| c.abs() > 1e-15)
            .map(|(t, c)| Ok((BitVector::from_indices(n, &t)?, c)))
            .collect::<Result<_>>()?;
        MultilinearPolynomial::new(BitVector::ones(n), terms)
    }
}

/// Maximizes sum alpha_S est_S subject to |sum alpha_S g_S(x)| <= 1 on every
/// constraint point and alpha_S in [-1, 1].
///
/// Rows are generated lazily: the LP is re-solved with the most violated
/// points added until no point is violated by more than 1e-9, which gives
/// the optimum of the full LP.
pub fn solve_parity_lp(estimates: &[f64], basis: &ParityBasis, points: &[BitVector]) -> Result<ParityPolynomial> {
    if estimates.len() != basis.len() {
        return Err(Error::DimensionMismatch { expected: basis.len(), found: estimates.len() });
    }
    let m = basis.len();
    let row_of = |x: &BitVector| -> Vec<(usize, f64)> { (0..m).map(|k| (k, basis.eval(k, x))).collect() };
    // Every row reads (+-) a . v <= 1 with free variables, so the slack
    // basis (alpha = 0) is feasible and no phase-one artificials appear.
    // Right-hand sides carry a tiny seeded perturbation (at most 1e-9) that
    // breaks the heavy degeneracy of this LP.
    let mut rng = seeded_rng(m as u64, 37);
    let mut one = move || 1.0 + 1e-9 * rng.gen::<f64>();
    let mut lp = LpProblem::new(m);
    for k in 0..m {
        lp.objective[k] = -estimates[k];
        lp.set_free(k);
        lp.add_row(vec![(k, 1.0)], Sense::Le, one());
        lp.add_row(vec![(k, -1.0)], Sense::Le, one());
    }
    let mut used = vec![false; points.len()];
    let batch = (2 * m).max(32);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let sol = lp_solve(&lp)?.into_optimal()?;
        let coeffs = sol.x.clone();
        let mut viol: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .filter_map(|(j, x)| {
                let v: f64 = (0..m).map(|k| coeffs[k] * basis.eval(k, x)).sum();
                (v.abs() > 1.0 + 2e-9).then_some((v.abs(), j))
            })
            .collect();
        if viol.is_empty() {
            let objective = coeffs.iter().zip(estimates).map(|(a, p)| a * p).sum();
            let active_rows = lp.rows.len() - 2 * m;
            return Ok(ParityPolynomial { basis: basis.clone(), coeffs, objective, active_rows, lp_rounds: rounds });
        }
        viol.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, j) in viol.iter().take(batch) {
            used[j] = true;
            let row = row_of(&points[j]);
            let neg = row.iter().map(|&(k, a)| (k, -a)).collect();
            lp.add_row(row, Sense::Le, one());
            lp.add_row(neg, Sense::Le, one());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsqConfig {
    pub eps: f64,
    pub degree: usize,
    /// Tolerance of every CSTAT query.
    pub tau: f64,
    pub kappa: f64,
    pub grid_c: f64,
    pub constraints: ConstraintMode,
    pub seed: u64,
}

impl CsqConfig {
    /// Degree ceil(2 sqrt(n) log2(1/eps)), capped at n; tau = eps/64.
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidParameter(format!("eps {eps} outside (0, 1/2)")));
        }
        let degree = (2.0 * (n as f64).sqrt() * (1.0 / eps).log2() - 1e-9).ceil().max(1.0) as usize;
        Ok(CsqConfig {
            eps,
            degree: degree.min(n),
            tau: eps / 64.0,
            kappa: DEFAULT_KAPPA,
            grid_c: DEFAULT_GRID_C,
            constraints: ConstraintMode::Enumerate,
            seed: 0,
        })
    }

    /// Thresholds -1, -1 + c eps, ..., up to 1.
    pub fn thresholds(&self) -> Vec<f64> {
        let step = self.grid_c * self.eps;
        let count = (2.0 / step + 1e-9).floor() as usize;
        (0..=count).map(|k| -1.0 + k as f64 * step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsqReport {
    pub degree: usize,
    pub basis_size: usize,
    pub objective: f64,
    pub threshold: f64,
    /// Estimated error 1/2 (1 - corr) of the chosen threshold.
    pub estimated_error: f64,
    pub queries: u64,
    pub lp_rounds: usize,
}

/// The learner. `extra_points` feeds `ConstraintMode::SupportRandom` and is
/// ignored otherwise; the distribution is reached only through `cstat`.
pub fn csq_weak_learner(
    oracle: &dyn CorrelationalOracle,
    n: usize,
    cfg: &CsqConfig,
    extra_points: &[BitVector],
) -> Result<(Hypothesis, CsqReport)> {
    let start = oracle.budget().queries;
    let basis = ParityBasis::new(n, cfg.degree)?;
    let est = parity_correlations(oracle, &basis, cfg.tau)?;
    let points = constraint_points(cfg.constraints, n, extra_points, cfg.seed)?;
    let p = solve_parity_lp(&est, &basis, &points)?;
    let mut best: Option<(f64, f64)> = None;
    for t in cfg.thresholds() {
        let pq = &p;
        let q = CorrQuery::new(format!("threshold:{t}"), move |x| signed_label(pq.eval(x) >= t));
        let corr = oracle.cstat(&q, cfg.tau)?;
        let err = 0.5 * (1.0 - corr);
        if best.map_or(true, |b| err < b.0 - 1e-15) {
            best = Some((err, t));
        }
    }
    let (estimated_error, threshold) = best.expect("grid is never empty");
    if estimated_error > 0.5 - cfg.kappa * cfg.eps + cfg.tau / 2.0 {
        return Err(Error::NoHypothesis(format!(
            "best threshold has estimated error {estimated_error}, above 1/2 - {} eps",
            cfg.kappa
        )));
    }
    let poly = p.to_multilinear()?;
    let h = Hypothesis::ThresholdPoly { poly, threshold };
    let report = CsqReport {
        degree: basis.degree,
        basis_size: basis.len(),
        objective: p.objective,
        threshold,
        estimated_error,
        queries: oracle.budget().queries - start,
        lp_rounds: p.lp_rounds,
    };
    Ok((h, report))
}

/// E_uniform[g_S g_T] over the whole cube.
pub fn uniform_inner_product(basis: &ParityBasis, a: usize, b: usize) -> f64 {
    let n = basis.n;
    let total: f64 = (0..1u64 << n)
        .map(|v| {
            let x = BitVector::from_u64(n, v);
            basis.eval(a, &x) * basis.eval(b, &x)
        })
        .sum();
    total / (1u64 << n) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{gen_planted, ExplicitDistribution, MarginalSpec};
    use crate::domain::{hypothesis_error, MonotoneDisjunction};
    use crate::sqoracle::{CsqView, SqOracle};

    #[test]
    fn orthonormal() {
        let b = ParityBasis::new(5, 5).unwrap();
        assert_eq!(b.len(), 32);
        for i in 0..b.len() {
            for j in 0..b.len() {
                let v = uniform_inner_product(&b, i, j);
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dictator_correlation() {
        let n = 4;
        let d = ExplicitDistribution::from_weights(
            n,
            (0..16u64).map(|v| {
                let x = BitVector::from_u64(n, v);
                let y = x.get(0);
                (x, y, 1.0)
            }),
        )
        .unwrap();
        let o = SqOracle::exact(d);
        let b = ParityBasis::new(n, 1).unwrap();
        let est = parity_correlations(&CsqView(&o), &b, 0.01).unwrap();
        // g_{0} = 1 - 2 x_0 is -1 exactly where y = 1.
        assert!((est[1] + 1.0).abs() < 1e-12);
        assert!(est[0].abs() < 1e-12);
        assert!(est[2..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_estimates_give_zero_objective() {
        let b = ParityBasis::new(3, 2).unwrap();
        let pts = constraint_points(ConstraintMode::Enumerate, 3, &[], 0).unwrap();
        let p = solve_parity_lp(&vec![0.0; b.len()], &b, &pts).unwrap();
        assert_eq!(p.objective, 0.0);
    }

    #[test]
    fn planted_weak_learning() {
        let n = 8;
        let target = MonotoneDisjunction::new(n, &[1, 4, 6]).unwrap();
        let marg =
            MarginalSpec::UniformOverSupport { points: (0..256u64).map(|v| BitVector::from_u64(n, v)).collect() };
        let d = gen_planted(n, &target, &marg, 0.2, 3).unwrap();
        let o = SqOracle::exact(d.clone());
        let cfg = CsqConfig::new(n, 0.25).unwrap();
        let (h, rep) = csq_weak_learner(&CsqView(&o), n, &cfg, &[]).unwrap();
        let e = hypothesis_error(&h, &d).unwrap();
        assert!(e <= 0.5 - 0.25 / 16.0, "{e}");
        assert!((e - rep.estimated_error).abs() <= cfg.tau);
        let pts = constraint_points(ConstraintMode::Enumerate, n, &[], 0).unwrap();
        let p = solve_parity_lp(
            &parity_correlations(&CsqView(&o), &ParityBasis::new(n, cfg.degree).unwrap(), cfg.tau).unwrap(),
            &ParityBasis::new(n, cfg.degree).unwrap(),
            &pts,
        )
        .unwrap();
        assert!(pts.iter().all(|x| p.eval(x).abs() <= 1.0 + 1e-7));
        let ml = p.to_multilinear().unwrap();
        assert!(pts.iter().all(|x| (ml.eval(x) - p.eval(x)).abs() < 1e-9));
    }
}
