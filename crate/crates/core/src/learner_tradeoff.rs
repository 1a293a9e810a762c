//! Approximation-tradeoff learner: a weak learner for disjunctions when
//! OPT <= 1/alpha, and its boosted form reaching error alpha OPT + eps.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::{aboost_di, BoostConfig, BoostDiReport, WeakLearner};
use crate::distributions::{seeded_rng, ExplicitDistribution};
use crate::domain::{hypothesis_error, BitVector, Hypothesis, MonotoneDisjunction, Region};
use crate::error::{Error, Result};
use crate::l1regression::L1Options;
use crate::learner_sample::CPrimePolicy;
use crate::learner_sq::{sq_l1_regression, Alg2Guess, SqL1Report, DEFAULT_L1_TOLERANCE};
use crate::sqoracle::{ratio_estimate, Backend, OracleSpec, QueryBudget, SqOracle, StatQuery};

/// Smallest alpha accepted in strict mode.
pub const STRICT_ALPHA_MIN: f64 = 64.0;
/// Smallest alpha accepted in relaxed mode.
pub const RELAXED_ALPHA_MIN: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alg3Mode {
    Strict,
    Relaxed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg3Config {
    pub alpha: f64,
    pub eps: f64,
    pub mode: Alg3Mode,
    /// Constant in T and in the degree.
    pub c: f64,
    pub r: usize,
    pub t: usize,
    pub degree: usize,
    pub trials: usize,
    pub seed: u64,
    pub guess: Alg2Guess,
    pub c_prime: CPrimePolicy,
    pub l1_tolerance: f64,
    pub l1: L1Options,
}

impl Alg3Config {
    pub fn new(n: usize, alpha: f64, eps: f64, mode: Alg3Mode) -> Result<Self> {
        Self::with_constant(n, alpha, eps, mode, 4.0)
    }

    pub fn with_constant(n: usize, alpha: f64, eps: f64, mode: Alg3Mode, c: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let lo = match mode {
            Alg3Mode::Strict => STRICT_ALPHA_MIN,
            Alg3Mode::Relaxed => RELAXED_ALPHA_MIN,
        };
        let hi = (n as f64).sqrt();
        if !(alpha >= lo && alpha <= hi + 1e-12) {
            return Err(Error::InvalidParameter(format!("alpha {alpha} outside [{lo}, sqrt(n) = {hi}]")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps {eps} outside (0, 1)")));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("constant c = {c} must be positive")));
        }
        let nf = n as f64;
        let r = (nf.powf(2.0 / 3.0) * alpha.powf(-1.0 / 3.0) - 1e-9).ceil().max(1.0) as usize;
        let t = (c * nf / (alpha * r as f64) - 1e-9).ceil().max(1.0) as usize;
        let degree = (c * (r as f64).sqrt() / alpha.sqrt() - 1e-9).ceil().max(1.0) as usize;
        Ok(Alg3Config {
            alpha,
            eps,
            mode,
            c,
            r,
            t,
            degree: degree.min(n),
            trials: 1,
            seed: 0,
            guess: Alg2Guess::Random,
            c_prime: CPrimePolicy::Minimize,
            l1_tolerance: DEFAULT_L1_TOLERANCE,
            l1: L1Options::default(),
        })
    }

    fn rn(&self, n: usize) -> f64 {
        self.r as f64 / n as f64
    }

    pub fn coord_tolerance(&self, n: usize) -> f64 {
        self.rn(n) / 800.0
    }

    pub fn agreement_tolerance(&self, n: usize) -> f64 {
        self.rn(n) / 100.0
    }

    pub fn return_threshold(&self, n: usize) -> f64 {
        self.rn(n) / 4.0
    }

    /// Advantage the weak learner promises: error at most 1/2 - margin.
    pub fn margin(&self, n: usize) -> f64 {
        self.rn(n) / 16.0
    }

    pub fn validate_tolerance(&self, n: usize) -> f64 {
        self.rn(n) / 64.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alg3Branch {
    Heavy { coord: usize },
    Light { dropped: Vec<usize>, ratio_guard: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg3Iteration {
    pub t: usize,
    pub branch: Alg3Branch,
    pub remaining: usize,
    pub region: Region,
    /// Estimated signed agreement E[1(B, h = y) - 1(B, h != y)].
    pub agreement: f64,
    pub returned: bool,
    pub queries: u64,
    pub l1: Option<SqL1Report>,
    /// Exact Pr[x in U_t] and Pr[x in U_{t+1}].
    pub u_mass: f64,
    pub u_next_mass: f64,
    pub truly_heavy: Option<bool>,
    pub target_within: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg3Trace {
    pub trial: u64,
    pub iterations: Vec<Alg3Iteration>,
    /// Error bound implied by the returning agreement estimate.
    pub implied_error: Option<f64>,
    pub c_prime: Option<bool>,
    pub budget: QueryBudget,
}

impl Alg3Trace {
    pub fn heavy_guesses(&self) -> usize {
        self.iterations.iter().filter(|it| matches!(it.branch, Alg3Branch::Heavy { .. })).count()
    }
}

fn pick_c_prime(oracle: &SqOracle, outside: &Region, cfg: &Alg3Config, rng: &mut impl Rng, tau: f64) -> Result<bool> {
    match cfg.c_prime {
        CPrimePolicy::Uniform => Ok(rng.gen_bool(0.5)),
        CPrimePolicy::Minimize => {
            let (o1, o0) = (outside.clone(), outside.clone());
            let ones = oracle.stat(&StatQuery::indicator("out&y=1", move |x, y| y && o1.contains(x)), tau)?;
            let zeros = oracle.stat(&StatQuery::indicator("out&y=0", move |x, y| !y && o0.contains(x)), tau)?;
            Ok(ones > zeros)
        }
    }
}

/// One run of the weak learner. Returns `RegionSplit(B_t, h'_t, c')` at the
/// first iteration whose signed agreement estimate reaches r/(4n).
pub fn alg3_single_run(oracle: &SqOracle, cfg: &Alg3Config, trial: u64) -> Result<(Option<Hypothesis>, Alg3Trace)> {
    let n = oracle.dim();
    let dist = oracle.distribution();
    let mut rng = seeded_rng(cfg.seed, 20_000 + trial);
    let target: Option<MonotoneDisjunction> = match &cfg.guess {
        Alg2Guess::ForcedCorrect { target } => Some(target.clone()),
        _ => None,
    };
    let heavy_cut = cfg.rn(n);
    let mut u = Region::everything();
    let mut coords = BitVector::ones(n);
    let mut iterations = Vec::new();
    for t in 0..=cfg.t {
        let before = oracle.budget().queries;
        let u_mass = dist.mass(&u);
        let cond = |i: usize| {
            if u_mass <= 0.0 {
                0.0
            } else {
                dist.mass(&Region::intersect(u.clone(), Region::CoordinateOne { index: i })) / u_mass
            }
        };
        let guess = match &cfg.guess {
            Alg2Guess::Random => {
                let live = coords.indices();
                if !live.is_empty() && rng.gen_bool(0.5) {
                    Some(live[rng.gen_range(0..live.len())])
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
        let (b, h, branch, l1, truly_heavy);
        match guess {
            Some(i) => {
                b = Region::intersect(u.clone(), Region::CoordinateOne { index: i });
                h = Hypothesis::constant(true);
                truly_heavy = target.as_ref().map(|s| s.support.get(i) && cond(i) >= heavy_cut);
                coords.set(i, false);
                branch = Alg3Branch::Heavy { coord: i };
                l1 = None;
            }
            None => {
                let tau = cfg.coord_tolerance(n);
                let ur = u.clone();
                let pu = oracle.stat(&StatQuery::indicator("in-U", move |x, _| ur.contains(x)), tau)?;
                let mut ests = Vec::new();
                for i in coords.iter_ones() {
                    let ur = u.clone();
                    let q = StatQuery::indicator(format!("x{i}=1&in-U"), move |x, _| x.get(i) && ur.contains(x));
                    ests.push((i, oracle.stat(&q, tau)?));
                }
                let mut dropped = Vec::new();
                let mut guard = true;
                for (i, pi) in ests {
                    match ratio_estimate(pi, pu, tau, 0.25) {
                        Ok(ratio) if ratio >= 1.01 * heavy_cut => dropped.push(i),
                        Ok(_) => {}
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
                for &i in &dropped {
                    coords.set(i, false);
                }
                let light = Region::WeightAtMost { coords: coords.clone(), theta: 2 * cfg.r };
                b = Region::intersect(u.clone(), light);
                let grid_eps = 1.0 / cfg.alpha;
                let (hl, rep) = sq_l1_regression(oracle, &b, &coords, cfg.degree, grid_eps, cfg.l1_tolerance, &cfg.l1)?;
                h = hl;
                l1 = Some(rep);
                truly_heavy = None;
                branch = Alg3Branch::Light { dropped, ratio_guard: guard };
            }
        }
        let (bq, hq) = (b.clone(), h.clone());
        let agree = StatQuery::new("signed-agreement", move |x, y| {
            if !bq.contains(x) {
                0.0
            } else if hq.eval(x) == y {
                1.0
            } else {
                -1.0
            }
        });
        let agreement = oracle.stat(&agree, cfg.agreement_tolerance(n))?;
        u = Region::intersect(u, Region::complement_of(b.clone()));
        let returned = agreement >= cfg.return_threshold(n);
        let mut it = Alg3Iteration {
            t,
            branch,
            remaining: coords.weight(),
            region: b.clone(),
            agreement,
            returned,
            queries: 0,
            l1,
            u_mass,
            u_next_mass: dist.mass(&u),
            truly_heavy,
            target_within,
        };
        if returned {
            let outside = Region::complement_of(b.clone());
            let c = pick_c_prime(oracle, &outside, cfg, &mut rng, cfg.agreement_tolerance(n))?;
            it.queries = oracle.budget().queries - before;
            iterations.push(it);
            // err = Pr[B, h != y] + Pr[not B, c' != y] <= (Pr[B] - A)/2 + Pr[not B]/2 + 2 tau'
            // with A >= agreement - tau', tau' = r/(100n).
            let tau = cfg.agreement_tolerance(n);
            let slack = match cfg.c_prime {
                CPrimePolicy::Minimize => 2.0 * tau,
                CPrimePolicy::Uniform => 0.0,
            };
            let implied = 0.5 - (agreement - tau) / 2.0 + slack;
            let hyp = Hypothesis::split(b, h, Hypothesis::constant(c));
            let trace = Alg3Trace {
                trial,
                iterations,
                implied_error: Some(implied),
                c_prime: Some(c),
                budget: oracle.budget(),
            };
            return Ok((Some(hyp), trace));
        }
        it.queries = oracle.budget().queries - before;
        iterations.push(it);
    }
    Ok((None, Alg3Trace { trial, iterations, implied_error: None, c_prime: None, budget: oracle.budget() }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg3Report {
    pub hypothesis: Hypothesis,
    pub estimated_error: f64,
    pub trial: u64,
    pub produced: usize,
    pub qualified: usize,
    pub trials: usize,
    pub budget: QueryBudget,
}

/// Best of `cfg.trials` runs, each candidate validated with one STAT query
/// at tolerance r/(64n). A candidate qualifies when its estimate is at most
/// 1/2 - r/(16n) - r/(64n), which puts its true error at or below
/// 1/2 - r/(16n).
pub fn alg3_weak_learner(spec: &OracleSpec, cfg: &Alg3Config) -> Result<(Alg3Report, Vec<Alg3Trace>)> {
    let n = spec.dist.dim();
    let vt = cfg.validate_tolerance(n);
    let accept = 0.5 - cfg.margin(n) - vt;
    let results: Vec<Result<(Option<(Hypothesis, f64)>, Alg3Trace)>> = (0..cfg.trials.max(1) as u64)
        .into_par_iter()
        .map(|trial| {
            let oracle = spec.make(trial);
            let (h, mut trace) = alg3_single_run(&oracle, cfg, trial)?;
            let scored = match h {
                Some(h) => {
                    let hq = h.clone();
                    let est = oracle.stat(&StatQuery::indicator("validate", move |x, y| hq.eval(x) != y), vt)?;
                    Some((h, est))
                }
                None => None,
            };
            trace.budget = oracle.budget();
            Ok((scored, trace))
        })
        .collect();
    let mut traces = Vec::new();
    let mut budget = QueryBudget::default();
    let mut best: Option<(f64, u64, Hypothesis)> = None;
    let (mut produced, mut qualified) = (0, 0);
    for res in results {
        let (scored, trace) = res?;
        budget.merge(&trace.budget);
        if let Some((h, est)) = scored {
            produced += 1;
            if est <= accept {
                qualified += 1;
                if best.as_ref().map_or(true, |b| est < b.0) {
                    best = Some((est, trace.trial, h));
                }
            }
        }
        traces.push(trace);
    }
    let (estimated_error, trial, hypothesis) = best.ok_or_else(|| {
        Error::NoHypothesis(format!("{produced} of {} runs returned, none validated at <= {accept}", cfg.trials.max(1)))
    })?;
    Ok((
        Alg3Report { hypothesis, estimated_error, trial, produced, qualified, trials: cfg.trials.max(1), budget },
        traces,
    ))
}

/// [`alg3_weak_learner`] behind the booster's interface; each view gets
/// its own oracle on `backend`.
pub struct Alg3Weak {
    pub cfg: Alg3Config,
    pub backend: Backend,
    pub n: usize,
}

impl WeakLearner for Alg3Weak {
    fn name(&self) -> &str {
        "alg3"
    }

    fn params(&self) -> (f64, f64) {
        (0.5 - 1.0 / (2.0 * self.cfg.alpha), self.cfg.margin(self.n))
    }

    fn learn(&self, view: &ExplicitDistribution, seed: u64) -> Result<Option<Hypothesis>> {
        let spec = OracleSpec::new(view.clone(), self.backend, seed);
        let cfg = Alg3Config { seed, ..self.cfg.clone() };
        match alg3_weak_learner(&spec, &cfg) {
            Ok((rep, _)) => Ok(Some(rep.hypothesis)),
            Err(Error::NoHypothesis(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffReport {
    pub hypothesis: Hypothesis,
    pub error: f64,
    /// The eps of the run that was kept.
    pub eps_used: f64,
    pub runs: Vec<(f64, Option<BoostDiReport>)>,
}

/// Boosts the weak learner to error alpha OPT + eps. The booster's alpha is
/// 1/2 - 1/(2 alpha), so OPT/(1 - 2 alpha_B) = alpha OPT. Runs at eps and at
/// eps/4 and keeps the better error on `data`.
pub fn tradeoff_learner(
    data: &ExplicitDistribution,
    backend: Backend,
    cfg: &Alg3Config,
    boost: &BoostConfig,
) -> Result<TradeoffReport> {
    let n = data.dim();
    let weak = Alg3Weak { cfg: cfg.clone(), backend, n };
    let alpha_b = 0.5 - 1.0 / (2.0 * cfg.alpha);
    let gamma = cfg.margin(n);
    let mut runs = Vec::new();
    let mut best: Option<(f64, f64, Hypothesis)> = None;
    let mut last_err = None;
    for eps in [cfg.eps, cfg.eps / 4.0] {
        match aboost_di(&weak, data, alpha_b, gamma, eps, boost) {
            Ok(rep) => {
                let e = hypothesis_error(&rep.hypothesis, data)?;
                if best.as_ref().map_or(true, |b| e < b.0 - 1e-15) {
                    best = Some((e, eps, rep.hypothesis.clone()));
                }
                runs.push((eps, Some(rep)));
            }
            Err(e @ (Error::WeakLearnerFailed { .. } | Error::NoHypothesis(_))) => {
                runs.push((eps, None));
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    match best {
        Some((error, eps_used, hypothesis)) => Ok(TradeoffReport { hypothesis, error, eps_used, runs }),
        None => Err(last_err.expect("no run succeeded, so one failed")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{gen_planted, MarginalSpec};

    fn sparse_instance(n: usize, s: &[usize], eta: f64, seed: u64) -> (ExplicitDistribution, MonotoneDisjunction) {
        let target = MonotoneDisjunction::new(n, s).unwrap();
        let marg = MarginalSpec::WeightBand { lo: 0, hi: 3, support_size: Some(40) };
        (gen_planted(n, &target, &marg, eta, seed).unwrap(), target)
    }

    #[test]
    fn parameters() {
        let cfg = Alg3Config::new(256, 8.0, 0.1, Alg3Mode::Relaxed).unwrap();
        assert_eq!((cfg.r, cfg.t, cfg.degree), (21, 7, 7));
        assert!(Alg3Config::new(256, 8.0, 0.1, Alg3Mode::Strict).is_err());
        assert!(Alg3Config::new(16, 5.0, 0.1, Alg3Mode::Relaxed).is_err());
        let cap = Alg3Config::new(4096, 64.0, 0.1, Alg3Mode::Strict).unwrap();
        assert_eq!(cap.r, 64);
        assert_eq!(cap.degree, 4);
    }

    #[test]
    fn all_ones_heavy_guess_fires() {
        let n = 16;
        let dist = ExplicitDistribution::from_weights(
            n,
            (0..n).map(|i| (BitVector::from_indices(n, &[i]).unwrap(), true, 1.0)),
        )
        .unwrap();
        let o = SqOracle::exact(dist.clone());
        let mut cfg = Alg3Config::new(n, 4.0, 0.1, Alg3Mode::Relaxed).unwrap();
        cfg.guess = Alg2Guess::Scripted { steps: vec![Some(3)] };
        let (h, trace) = alg3_single_run(&o, &cfg, 0).unwrap();
        assert_eq!(trace.iterations.len(), 1);
        let e = hypothesis_error(&h.unwrap(), &dist).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn forced_correct_returns_and_is_sound() {
        let (dist, target) = sparse_instance(16, &[0, 5], 1.0 / 16.0, 3);
        let o = SqOracle::exact(dist.clone());
        let mut cfg = Alg3Config::new(16, 4.0, 0.1, Alg3Mode::Relaxed).unwrap();
        cfg.guess = Alg2Guess::ForcedCorrect { target };
        let (h, trace) = alg3_single_run(&o, &cfg, 0).unwrap();
        let h = h.expect("returns");
        let e = hypothesis_error(&h, &dist).unwrap();
        assert!(e <= trace.implied_error.unwrap() + 1e-12);
        assert!(e <= 0.5 - cfg.margin(16));
    }

    #[test]
    fn tradeoff_realizable() {
        let (dist, _) = sparse_instance(16, &[2, 9], 0.0, 4);
        let mut cfg = Alg3Config::new(16, 4.0, 0.1, Alg3Mode::Relaxed).unwrap();
        cfg.trials = 4;
        let rep = tradeoff_learner(&dist, Backend::Exact, &cfg, &BoostConfig { max_rounds: 4, ..Default::default() })
            .unwrap();
        assert!(rep.error <= 0.1, "{}", rep.error);
    }
}
