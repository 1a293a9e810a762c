//! Statistical query learner to additive error: repeatedly carve a region
//! B_t off the remaining domain, either through a guessed heavy coordinate
//! or through L1 regression on the light part, and assemble a decision list.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{seeded_rng, ExplicitDistribution};
use crate::domain::{BitVector, Hypothesis, MonotoneDisjunction, Region};
use crate::error::{Error, Result};
use crate::l1regression::{l1_fit, L1Options, MultilinearPolynomial, ThresholdGrid};
use crate::sqoracle::{ratio_estimate, OracleSpec, QueryBudget, SqOracle, StatQuery};

/// Default tolerance of the queries issued by the SQ regression.
pub const DEFAULT_L1_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqL1Report {
    /// Leaves of the reconstructed conditional distribution.
    pub leaves: usize,
    pub queries: u64,
    pub degree: usize,
    pub loss: f64,
    pub threshold: Option<f64>,
    /// Estimated Pr[h(x) != y | x in region].
    pub error: f64,
    pub region_mass: f64,
}

fn pattern_region(region: &Region, coords: &[usize], pattern: &BitVector) -> impl Fn(&BitVector) -> bool + Send + Sync {
    let region = region.clone();
    let coords = coords.to_vec();
    let pattern = pattern.clone();
    move |x: &BitVector| region.contains(x) && coords.iter().all(|&i| x.get(i) == pattern.get(i))
}

/// L1 regression on D conditioned on `region`, using only STAT queries.
///
/// The conditional law of (x restricted to `coords`, y) is rebuilt by a
/// descent over the coordinates: one query for the mass of each live
/// pattern extended by a one (the zero extension follows by subtraction),
/// pruning patterns of estimated mass at most 2 tau and patterns the region
/// rules out by weight. Each leaf gets one query for its label-1 mass. The
/// polynomial is fitted on the rebuilt distribution and its threshold is
/// picked with one query per candidate.
pub fn sq_l1_regression(
    oracle: &SqOracle,
    region: &Region,
    coords: &BitVector,
    degree: usize,
    eps: f64,
    tau: f64,
    opts: &L1Options,
) -> Result<(Hypothesis, SqL1Report)> {
    let n = oracle.dim();
    let start = oracle.budget().queries;
    let max_ones = match region {
        Region::WeightAtMost { coords: c, theta } if c == coords => Some(*theta),
        Region::Intersection { parts } => parts.iter().find_map(|p| match p {
            Region::WeightAtMost { coords: c, theta } if c == coords => Some(*theta),
            _ => None,
        }),
        _ => None,
    };
    let reg = region.clone();
    let mass = oracle.stat(&StatQuery::indicator("region", move |x, _| reg.contains(x)), tau)?;
    let idx = coords.indices();
    let mut live: Vec<(BitVector, f64)> = if mass > 2.0 * tau { vec![(BitVector::zeros(n), mass)] } else { vec![] };
    for (j, &i) in idx.iter().enumerate() {
        let prefix = &idx[..=j];
        let mut next = Vec::with_capacity(live.len() * 2);
        for (pat, m) in live {
            let mut one = pat.clone();
            one.set(i, true);
            let m1 = if max_ones.map_or(true, |k| one.weight() <= k) {
                let inside = pattern_region(region, prefix, &one);
                oracle.stat(&StatQuery::indicator(format!("pattern:{i}"), move |x, _| inside(x)), tau)?
            } else {
                0.0
            };
            let m0 = m - m1;
            if m0 > 2.0 * tau {
                next.push((pat, m0));
            }
            if m1 > 2.0 * tau {
                next.push((one, m1));
            }
        }
        live = next;
    }
    let mut items = Vec::with_capacity(2 * live.len());
    for (pat, m) in &live {
        let inside = pattern_region(region, &idx, pat);
        let m1 = oracle.stat(&StatQuery::indicator("leaf:y=1", move |x, y| y && inside(x)), tau)?;
        let m1 = m1.clamp(0.0, *m);
        items.push((pat.clone(), true, m1));
        items.push((pat.clone(), false, m - m1));
    }
    let leaves = live.len();
    if leaves == 0 {
        let report = SqL1Report {
            leaves,
            queries: oracle.budget().queries - start,
            degree: 0,
            loss: 0.0,
            threshold: None,
            error: 0.0,
            region_mass: mass,
        };
        return Ok((Hypothesis::constant(false), report));
    }
    let rebuilt = ExplicitDistribution::from_weights(n, items)?;
    let fit = l1_fit(&rebuilt, coords, degree, opts)?;
    let values: Vec<f64> = rebuilt.support().iter().map(|e| fit.poly.eval(&e.x)).collect();
    let cands = ThresholdGrid::for_epsilon(eps).candidates(&values);
    let mut best: Option<(f64, f64)> = None;
    for &t in &cands {
        let wrong = threshold_error_query(region, &fit.poly, t);
        let v = oracle.stat(&wrong, tau)?;
        if best.map_or(true, |b| v < b.0 - 1e-15) {
            best = Some((v, t));
        }
    }
    let (joint_err, threshold) = best.expect("candidate set is never empty");
    let h = Hypothesis::ThresholdPoly { poly: fit.poly, threshold };
    let report = SqL1Report {
        leaves,
        queries: oracle.budget().queries - start,
        degree: fit.degree,
        loss: fit.loss,
        threshold: Some(threshold),
        error: if mass > 0.0 { (joint_err / mass).clamp(0.0, 1.0) } else { 0.0 },
        region_mass: mass,
    };
    Ok((h, report))
}

fn threshold_error_query(region: &Region, poly: &MultilinearPolynomial, t: f64) -> StatQuery<'static> {
    let region = region.clone();
    let poly = poly.clone();
    StatQuery::indicator("threshold-error", move |x, y| region.contains(x) && (poly.eval(x) >= t) != y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alg2Guess {
    Random,
    /// Debug hook: guesses "heavy" exactly when some coordinate of the target
    /// is heavy (smallest such index), judged on the explicit distribution.
    ForcedCorrect {
        target: MonotoneDisjunction,
    },
    /// Fixed sequence: Some(i) guesses coordinate i heavy, None guesses no
    /// heavy coordinate; after the script ends every guess is None.
    Scripted {
        steps: Vec<Option<usize>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg2Config {
    pub eps: f64,
    pub r: usize,
    pub t: usize,
    /// Constant in T = ceil(c n ln(1/eps) / r).
    pub c_iter: f64,
    /// Constant in the regression degree ceil(c sqrt(r) ln(T/eps)).
    pub c_degree: f64,
    pub degree: usize,
    pub trials: usize,
    pub seed: u64,
    pub guess: Alg2Guess,
    pub l1_tolerance: f64,
    pub l1: L1Options,
}

impl Alg2Config {
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        Self::with_constants(n, eps, 4.0, 2.0)
    }

    pub fn with_constants(n: usize, eps: f64, c_iter: f64, c_degree: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidParameter(format!("eps {eps} outside (0, 1/2)")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let r = ((n as f64).powf(2.0 / 3.0) - 1e-9).ceil().max(1.0) as usize;
        let t = ((c_iter * n as f64 * (1.0 / eps).ln() / r as f64) - 1e-9).ceil().max(1.0) as usize;
        let degree = (c_degree * (r as f64).sqrt() * (t as f64 / eps).ln()).ceil().max(1.0) as usize;
        Ok(Alg2Config {
            eps,
            r,
            t,
            c_iter,
            c_degree,
            degree: degree.min(n),
            trials: 1,
            seed: 0,
            guess: Alg2Guess::Random,
            l1_tolerance: DEFAULT_L1_TOLERANCE,
            l1: L1Options::default(),
        })
    }

    /// Tolerance of the mass and coordinate queries in the light branch.
    pub fn coord_tolerance(&self, n: usize) -> f64 {
        self.eps * self.r as f64 / (800.0 * n as f64)
    }

    pub fn mass_tolerance(&self) -> f64 {
        self.eps / 100.0
    }

    pub fn stop_threshold(&self) -> f64 {
        self.eps / 3.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alg2Branch {
    Heavy { coord: usize },
    Light { dropped: Vec<usize>, ratio_guard: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg2Iteration {
    pub t: usize,
    pub branch: Alg2Branch,
    pub remaining: usize,
    /// The carved region B_t (already intersected with U_t).
    pub region: Region,
    pub remaining_mass_estimate: f64,
    pub queries: u64,
    pub l1: Option<SqL1Report>,
    /// Exact Pr[x in B_t | x in U_t] on the oracle's distribution.
    pub cond_mass: f64,
    /// Exact Pr[x in U_t].
    pub u_mass: f64,
    /// Heavy branch: whether the guessed coordinate is in the target and has
    /// conditional one-probability at least r/n. Only with a known target.
    pub truly_heavy: Option<bool>,
    /// Light branch: smallest exact conditional one-probability among the
    /// dropped coordinates.
    pub min_dropped_ratio: Option<f64>,
    /// Whether the target support lies in I_t (known target only).
    pub target_within: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg2Trace {
    pub trial: u64,
    pub iterations: Vec<Alg2Iteration>,
    pub terminated: bool,
    pub default: Option<bool>,
    pub budget: QueryBudget,
}

fn exact_mass(dist: &ExplicitDistribution, region: &Region) -> f64 {
    dist.mass(region)
}

/// One run of the learner. Returns the decision list when the remaining
/// mass drops to eps/3 within T + 1 iterations.
pub fn alg2_single_run(oracle: &SqOracle, cfg: &Alg2Config, trial: u64) -> Result<(Option<Hypothesis>, Alg2Trace)> {
    let n = oracle.dim();
    let dist = oracle.distribution();
    let mut rng = seeded_rng(cfg.seed, 10_000 + trial);
    let target = match &cfg.guess {
        Alg2Guess::ForcedCorrect { target } => Some(target.clone()),
        _ => None,
    };
    let heavy_cut = cfg.r as f64 / n as f64;
    let mut u = Region::everything();
    let mut coords = BitVector::ones(n);
    let mut entries: Vec<(Region, Hypothesis)> = Vec::new();
    let mut iterations = Vec::new();
    for t in 0..=cfg.t {
        let before = oracle.budget().queries;
        let u_mass = exact_mass(dist, &u);
        let cond = |i: usize| {
            if u_mass <= 0.0 {
                0.0
            } else {
                let ui = Region::intersect(u.clone(), Region::CoordinateOne { index: i });
                exact_mass(dist, &ui) / u_mass
            }
        };
        let guess: Option<usize> = match &cfg.guess {
            Alg2Guess::Random => {
                if rng.gen_bool(0.5) {
                    let live = coords.indices();
                    if live.is_empty() {
                        None
                    } else {
                        Some(live[rng.gen_range(0..live.len())])
                    }
                } else {
                    None
                }
            }
            Alg2Guess::ForcedCorrect { target } => {
                target.support.and(&coords).iter_ones().find(|&i| cond(i) >= heavy_cut)
            }
            Alg2Guess::Scripted { steps } => steps.get(t).copied().flatten(),
        };
        let target_within = target.as_ref().map(|s| s.support.is_subset_of(&coords));
        let (b, h, branch, l1, truly_heavy, min_dropped_ratio);
        match guess {
            Some(i) => {
                b = Region::intersect(u.clone(), Region::CoordinateOne { index: i });
                h = Hypothesis::constant(true);
                truly_heavy = target.as_ref().map(|s| s.support.get(i) && cond(i) >= heavy_cut);
                coords.set(i, false);
                branch = Alg2Branch::Heavy { coord: i };
                l1 = None;
                min_dropped_ratio = None;
            }
            None => {
                let tau = cfg.coord_tolerance(n);
                let ur = u.clone();
                let pu = oracle.stat(&StatQuery::indicator("in-U", move |x, _| ur.contains(x)), tau)?;
                let gamma = cfg.stop_threshold() - cfg.mass_tolerance() - 2.0 * tau;
                let mut ests = Vec::new();
                for i in coords.iter_ones() {
                    let ur = u.clone();
                    let q = StatQuery::indicator(format!("x{i}=1&in-U"), move |x, _| x.get(i) && ur.contains(x));
                    ests.push((i, oracle.stat(&q, tau)?));
                }
                let mut dropped = Vec::new();
                let mut guard = true;
                for (i, pi) in ests {
                    match ratio_estimate(pi, pu, tau, gamma) {
                        Ok(ratio) => {
                            if ratio >= 1.01 * heavy_cut {
                                dropped.push(i);
                            }
                        }
                        Err(Error::RatioGuard { .. }) => {
                            guard = false;
                            break;
                        }
                        Err(e) => return Err(e),
                    }
                }
                if !guard {
                    dropped.clear();
                }
                min_dropped_ratio = dropped.iter().map(|&i| cond(i)).reduce(f64::min);
                for &i in &dropped {
                    coords.set(i, false);
                }
                let light = Region::WeightAtMost { coords: coords.clone(), theta: 2 * cfg.r };
                b = Region::intersect(u.clone(), light);
                let (hl, rep) = sq_l1_regression(oracle, &b, &coords, cfg.degree, cfg.eps, cfg.l1_tolerance, &cfg.l1)?;
                h = hl;
                l1 = Some(rep);
                truly_heavy = None;
                branch = Alg2Branch::Light { dropped, ratio_guard: guard };
            }
        }
        let cond_mass = if u_mass > 0.0 { exact_mass(dist, &b) / u_mass } else { 0.0 };
        entries.push((b.clone(), h));
        u = Region::intersect(u, Region::complement_of(b.clone()));
        let ur = u.clone();
        let rest = oracle.stat(&StatQuery::indicator("in-U-next", move |x, _| ur.contains(x)), cfg.mass_tolerance())?;
        let mut it = Alg2Iteration {
            t,
            branch,
            remaining: coords.weight(),
            region: b,
            remaining_mass_estimate: rest,
            queries: 0,
            l1,
            cond_mass,
            u_mass,
            truly_heavy,
            min_dropped_ratio,
            target_within,
        };
        if rest <= cfg.stop_threshold() {
            let (u1, u0) = (u.clone(), u.clone());
            let ones =
                oracle.stat(&StatQuery::indicator("U&y=1", move |x, y| y && u1.contains(x)), cfg.mass_tolerance())?;
            let zeros =
                oracle.stat(&StatQuery::indicator("U&y=0", move |x, y| !y && u0.contains(x)), cfg.mass_tolerance())?;
            let default = ones > zeros;
            it.queries = oracle.budget().queries - before;
            iterations.push(it);
            let h = Hypothesis::DecisionList { entries, default };
            let trace =
                Alg2Trace { trial, iterations, terminated: true, default: Some(default), budget: oracle.budget() };
            return Ok((Some(h), trace));
        }
        it.queries = oracle.budget().queries - before;
        iterations.push(it);
    }
    Ok((None, Alg2Trace { trial, iterations, terminated: false, default: None, budget: oracle.budget() }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg2Report {
    pub hypothesis: Hypothesis,
    pub estimated_error: f64,
    pub trial: u64,
    pub produced: usize,
    pub trials: usize,
    pub budget: QueryBudget,
}

/// Runs `cfg.trials` independent single runs at accuracy eps/3 and returns
/// the candidate with the smallest error estimate (one STAT query at
/// tolerance eps/3 each); ties go to the lowest trial index.
pub fn alg2_learner(spec: &OracleSpec, cfg: &Alg2Config) -> Result<(Alg2Report, Vec<Alg2Trace>)> {
    let n = spec.dist.dim();
    let mut inner = Alg2Config::with_constants(n, cfg.eps / 3.0, cfg.c_iter, cfg.c_degree)?;
    inner.seed = cfg.seed;
    inner.guess = cfg.guess.clone();
    inner.l1_tolerance = cfg.l1_tolerance;
    inner.l1 = cfg.l1;
    let results: Vec<Result<(Option<(Hypothesis, f64)>, Alg2Trace)>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let oracle = spec.make(trial);
            let (h, mut trace) = alg2_single_run(&oracle, &inner, trial)?;
            let scored = match h {
                Some(h) => {
                    let hq = h.clone();
                    let est =
                        oracle.stat(&StatQuery::indicator("validate", move |x, y| hq.eval(x) != y), cfg.eps / 3.0)?;
                    Some((h, est))
                }
                None => None,
            };
            trace.budget = oracle.budget();
            Ok((scored, trace))
        })
        .collect();
    let mut traces = Vec::with_capacity(results.len());
    let mut budget = QueryBudget::default();
    let mut best: Option<(f64, u64, Hypothesis)> = None;
    let mut produced = 0;
    for res in results {
        let (scored, trace) = res?;
        budget.merge(&trace.budget);
        if let Some((h, est)) = scored {
            produced += 1;
            if best.as_ref().map_or(true, |b| est < b.0) {
                best = Some((est, trace.trial, h));
            }
        }
        traces.push(trace);
    }
    let (estimated_error, trial, hypothesis) =
        best.ok_or_else(|| Error::NoHypothesis(format!("no run terminated in {} trials", cfg.trials)))?;
    Ok((Alg2Report { hypothesis, estimated_error, trial, produced, trials: cfg.trials, budget }, traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{gen_planted, MarginalSpec};
    use crate::domain::hypothesis_error;
    use crate::l1regression::l1_regress_learner;
    use crate::sqoracle::Backend;

    fn planted(n: usize, s: &[usize], eta: f64, seed: u64) -> ExplicitDistribution {
        let target = MonotoneDisjunction::new(n, s).unwrap();
        let marg = MarginalSpec::WeightBand { lo: 0, hi: 3, support_size: Some(40) };
        gen_planted(n, &target, &marg, eta, seed).unwrap()
    }

    #[test]
    fn constant_region_gives_zero_error() {
        let n = 4;
        let dist =
            ExplicitDistribution::from_weights(n, (0..16u64).map(|v| (BitVector::from_u64(n, v), true, 1.0))).unwrap();
        let o = SqOracle::exact(dist.clone());
        let (h, rep) =
            sq_l1_regression(&o, &Region::everything(), &BitVector::ones(n), 2, 0.1, 1e-7, &L1Options::default())
                .unwrap();
        assert!(rep.error < 1e-9);
        assert_eq!(hypothesis_error(&h, &dist).unwrap(), 0.0);
    }

    #[test]
    fn sq_regression_matches_sample_path() {
        let dist = planted(7, &[0, 3], 0.1, 11);
        let o = SqOracle::exact(dist.clone());
        let coords = BitVector::ones(7);
        let (_, direct) = l1_regress_learner(&dist, &coords, 0.1, &L1Options::default()).unwrap();
        let (h, rep) =
            sq_l1_regression(&o, &Region::everything(), &coords, direct.degree, 0.1, 1e-7, &L1Options::default())
                .unwrap();
        let e = hypothesis_error(&h, &dist).unwrap();
        assert!((e - direct.error).abs() <= 0.05, "{e} vs {}", direct.error);
        assert!((rep.error - e).abs() < 1e-5);
    }

    #[test]
    fn light_only_terminates_in_one_pass() {
        let dist = planted(8, &[1, 2], 0.05, 5);
        let o = SqOracle::exact(dist.clone());
        let mut cfg = Alg2Config::new(8, 0.1).unwrap();
        cfg.guess = Alg2Guess::Scripted { steps: vec![] };
        let (h, trace) = alg2_single_run(&o, &cfg, 0).unwrap();
        assert_eq!(trace.iterations.len(), 1);
        assert!(hypothesis_error(&h.unwrap(), &dist).unwrap() <= 0.05 + 0.1);
    }

    #[test]
    fn wrapper_with_adversarial_backend() {
        let dist = planted(6, &[0], 0.1, 2);
        let spec = OracleSpec::new(dist.clone(), Backend::Adversarial, 9);
        let mut cfg = Alg2Config::new(6, 0.1).unwrap();
        cfg.trials = 4;
        let (rep, traces) = alg2_learner(&spec, &cfg).unwrap();
        assert_eq!(traces.len(), 4);
        assert!(hypothesis_error(&rep.hypothesis, &dist).unwrap() <= 0.1 + 0.1 + 1e-9);
    }
}
