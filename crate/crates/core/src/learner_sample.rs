//! Sample-based weak agnostic learner for monotone disjunctions: light/heavy
//! split on the remaining coordinates, L1 regression on the light part, and
//! random elimination of coordinates through heavy samples.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::{aboost, BoostConfig, BoostReport, WeakLearner};
use crate::chebyshev::build_approx;
use crate::distributions::{draw_stream, seeded_rng, vc_sample_size, EmpiricalSample, ExplicitDistribution};
use crate::domain::{hypothesis_error, BitVector, Hypothesis, LabeledExample, MonotoneDisjunction, Region};
use crate::error::{Error, Result};
use crate::l1regression::{l1_fit, round_to_hypothesis, L1Options, ThresholdGrid};

/// Default cap on the drawn sample size.
pub const DEFAULT_SAMPLE_CAP: usize = 4000;
/// Default number of independent runs in the wrapper.
pub const DEFAULT_REPEATS: usize = 500;

/// How the constant c' on the other side of the split is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CPrimePolicy {
    /// The value with the smaller empirical error.
    Minimize,
    /// A fair coin.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuessPolicy {
    Random,
    /// Debug hook: the guess is drawn among heavy samples the target labels 0,
    /// so no coordinate of the target is ever removed.
    ForcedCorrect {
        target: MonotoneDisjunction,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg1Config {
    pub eps: f64,
    pub r: usize,
    pub t: usize,
    pub sample_size: usize,
    pub repeats: usize,
    pub seed: u64,
    pub c_prime: CPrimePolicy,
    pub guess: GuessPolicy,
    /// Regression degree; defaults to the approximator degree for weight r
    /// at accuracy eps/40.
    pub degree: usize,
    pub l1: L1Options,
}

impl Alg1Config {
    pub fn new(n: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidParameter(format!("eps {eps} outside (0, 1/2)")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let r = ((n as f64).powf(2.0 / 3.0) - 1e-9).ceil().max(1.0) as usize;
        let t = n.div_ceil(r) + 1;
        let sample_size = vc_sample_size(n, eps / 20.0, 64.0)?.min(DEFAULT_SAMPLE_CAP);
        let degree = build_approx(r, eps / 40.0)?.degree();
        Ok(Alg1Config {
            eps,
            r,
            t,
            sample_size,
            repeats: DEFAULT_REPEATS,
            seed: 0,
            c_prime: CPrimePolicy::Minimize,
            guess: GuessPolicy::Random,
            degree,
            l1: L1Options::default(),
        })
    }

    /// Empirical error at or below this returns from a run.
    pub fn accept_threshold(&self) -> f64 {
        0.5 - self.eps / 10.0
    }

    /// Held-out error at or below this qualifies in the wrapper.
    pub fn validate_threshold(&self) -> f64 {
        0.5 - self.eps / 100.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg1Iteration {
    pub t: usize,
    pub remaining: usize,
    pub light: usize,
    pub heavy: usize,
    pub err1: Option<f64>,
    pub err2: f64,
    pub guess: Option<BitVector>,
    pub removed: usize,
    /// Forced-correct runs only: whether the target support lies in I_t.
    pub target_within: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alg1Outcome {
    ReturnedH1,
    ReturnedH2,
    NoHeavySample,
    NoConsistentGuess,
    Exhausted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg1Trace {
    pub run: u64,
    pub iterations: Vec<Alg1Iteration>,
    pub outcome: Alg1Outcome,
}

/// Everything about one iteration that depends only on (P, I_t).
struct SplitSummary {
    light_hyp: Option<Hypothesis>,
    /// Mistakes of the light-side regression hypothesis on light samples.
    light_mistakes: usize,
    light: (usize, usize),
    heavy: (usize, usize),
    heavy_idx: Vec<usize>,
}

type Cache = Mutex<HashMap<BitVector, Arc<SplitSummary>>>;

fn summarize(p: &EmpiricalSample, coords: &BitVector, cfg: &Alg1Config) -> Result<SplitSummary> {
    let mut light_examples = Vec::new();
    let mut heavy_idx = Vec::new();
    let (mut light, mut heavy) = ((0, 0), (0, 0));
    for (k, e) in p.examples().iter().enumerate() {
        let side = if e.x.weight_on(coords) <= cfg.r {
            light_examples.push(e.clone());
            &mut light
        } else {
            heavy_idx.push(k);
            &mut heavy
        };
        if e.y {
            side.1 += 1;
        } else {
            side.0 += 1;
        }
    }
    let (light_hyp, light_mistakes) = if light_examples.is_empty() {
        (None, 0)
    } else {
        let sample = EmpiricalSample::new(p.dim(), light_examples)?;
        let fit = l1_fit(&sample, coords, cfg.degree, &cfg.l1)?;
        let rounded = round_to_hypothesis(&fit.poly, &sample, &ThresholdGrid::for_epsilon(cfg.eps))?;
        let mistakes = sample.examples().iter().filter(|e| rounded.hypothesis.eval(&e.x) != e.y).count();
        (Some(rounded.hypothesis), mistakes)
    };
    Ok(SplitSummary { light_hyp, light_mistakes, light, heavy, heavy_idx })
}

fn cached(cache: &Cache, p: &EmpiricalSample, coords: &BitVector, cfg: &Alg1Config) -> Result<Arc<SplitSummary>> {
    if let Some(s) = cache.lock().expect("cache lock").get(coords) {
        return Ok(s.clone());
    }
    let s = Arc::new(summarize(p, coords, cfg)?);
    cache.lock().expect("cache lock").insert(coords.clone(), s.clone());
    Ok(s)
}

/// One run on the sample P. Returns the first candidate whose empirical
/// error on P is at most 1/2 - eps/10, or `None`.
pub fn alg1_single_run(p: &EmpiricalSample, cfg: &Alg1Config, run: u64) -> Result<(Option<Hypothesis>, Alg1Trace)> {
    run_with_cache(p, cfg, run, &Mutex::new(HashMap::new()))
}

fn run_with_cache(
    p: &EmpiricalSample,
    cfg: &Alg1Config,
    run: u64,
    cache: &Cache,
) -> Result<(Option<Hypothesis>, Alg1Trace)> {
    if p.is_empty() {
        return Err(Error::EmptyData);
    }
    let n = p.dim();
    let m = p.len() as f64;
    let mut rng = seeded_rng(cfg.seed, 1_000 + run);
    let mut coords = BitVector::ones(n);
    let mut iterations = Vec::new();
    let pick_c = |rng: &mut rand_chacha::ChaCha8Rng, zeros: usize, ones: usize| match cfg.c_prime {
        CPrimePolicy::Minimize => ones > zeros,
        CPrimePolicy::Uniform => rng.gen_bool(0.5),
    };
    for t in 0..=cfg.t {
        let s = cached(cache, p, &coords, cfg)?;
        let light_region = Region::WeightAtMost { coords: coords.clone(), theta: cfg.r };
        // h1: regression on the light side, c' on the heavy side.
        let c1 = pick_c(&mut rng, s.heavy.0, s.heavy.1);
        let err1 = s.light_hyp.as_ref().map(|_| {
            let heavy_wrong = if c1 { s.heavy.0 } else { s.heavy.1 };
            (s.light_mistakes + heavy_wrong) as f64 / m
        });
        // h2: constant 1 on the heavy side, c' on the light side.
        let c2 = pick_c(&mut rng, s.light.0, s.light.1);
        let light_wrong = if c2 { s.light.0 } else { s.light.1 };
        let err2 = (s.heavy.0 + light_wrong) as f64 / m;
        let target_within = match &cfg.guess {
            GuessPolicy::ForcedCorrect { target } => Some(target.support.is_subset_of(&coords)),
            GuessPolicy::Random => None,
        };
        let mut it = Alg1Iteration {
            t,
            remaining: coords.weight(),
            light: s.light.0 + s.light.1,
            heavy: s.heavy_idx.len(),
            err1,
            err2,
            guess: None,
            removed: 0,
            target_within,
        };
        let accept = cfg.accept_threshold();
        if let (Some(e1), Some(h)) = (err1, &s.light_hyp) {
            if e1 <= accept {
                iterations.push(it);
                let h1 = Hypothesis::split(light_region, h.clone(), Hypothesis::constant(c1));
                return Ok((Some(h1), Alg1Trace { run, iterations, outcome: Alg1Outcome::ReturnedH1 }));
            }
        }
        if err2 <= accept {
            iterations.push(it);
            let h2 = Hypothesis::split(light_region, Hypothesis::constant(c2), Hypothesis::constant(true));
            return Ok((Some(h2), Alg1Trace { run, iterations, outcome: Alg1Outcome::ReturnedH2 }));
        }
        let pool: Vec<usize> = match &cfg.guess {
            GuessPolicy::Random => s.heavy_idx.clone(),
            GuessPolicy::ForcedCorrect { target } => {
                s.heavy_idx.iter().copied().filter(|&k| !target.eval(&p.examples()[k].x)).collect()
            }
        };
        if pool.is_empty() {
            iterations.push(it);
            let outcome =
                if s.heavy_idx.is_empty() { Alg1Outcome::NoHeavySample } else { Alg1Outcome::NoConsistentGuess };
            return Ok((None, Alg1Trace { run, iterations, outcome }));
        }
        let guess = &p.examples()[pool[rng.gen_range(0..pool.len())]].x;
        let next = coords.and_not(guess);
        it.removed = coords.weight() - next.weight();
        it.guess = Some(guess.clone());
        iterations.push(it);
        coords = next;
    }
    Ok((None, Alg1Trace { run, iterations, outcome: Alg1Outcome::Exhausted }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alg1Report {
    pub hypothesis: Hypothesis,
    pub heldout_error: f64,
    pub run: u64,
    /// Runs that returned some hypothesis.
    pub returned: usize,
    /// Returned hypotheses that passed held-out validation.
    pub qualified: usize,
    pub runs: usize,
    pub sample_size: usize,
    pub degree: usize,
}

/// Runs the single-run learner `cfg.repeats` times on one training sample
/// and keeps the returned hypothesis with the lowest held-out error, if it
/// is at most 1/2 - eps/100 (ties to the lowest run index).
pub fn alg1_on_samples(
    train: &EmpiricalSample,
    holdout: &EmpiricalSample,
    cfg: &Alg1Config,
) -> Result<(Alg1Report, Vec<Alg1Trace>)> {
    if holdout.is_empty() {
        return Err(Error::EmptyData);
    }
    let cache: Cache = Mutex::new(HashMap::new());
    let results: Vec<Result<(Option<Hypothesis>, Alg1Trace, Option<f64>)>> = (0..cfg.repeats as u64)
        .into_par_iter()
        .map(|run| {
            let (h, trace) = run_with_cache(train, cfg, run, &cache)?;
            let err = match &h {
                Some(h) => Some(hypothesis_error(h, holdout)?),
                None => None,
            };
            Ok((h, trace, err))
        })
        .collect();
    let mut traces = Vec::with_capacity(results.len());
    let mut best: Option<(f64, u64, Hypothesis)> = None;
    let (mut returned, mut qualified) = (0, 0);
    for res in results {
        let (h, trace, err) = res?;
        if let (Some(h), Some(err)) = (h, err) {
            returned += 1;
            if err <= cfg.validate_threshold() {
                qualified += 1;
                if best.as_ref().map_or(true, |b| err < b.0) {
                    best = Some((err, trace.run, h));
                }
            }
        }
        traces.push(trace);
    }
    match best {
        Some((heldout_error, run, hypothesis)) => Ok((
            Alg1Report {
                hypothesis,
                heldout_error,
                run,
                returned,
                qualified,
                runs: cfg.repeats,
                sample_size: train.len(),
                degree: cfg.degree,
            },
            traces,
        )),
        None => Err(Error::NoHypothesis(format!(
            "{returned} of {} runs returned a hypothesis, none with held-out error <= {}",
            cfg.repeats,
            cfg.validate_threshold()
        ))),
    }
}

/// Draws a training sample and a held-out sample of `cfg.sample_size`
/// each from the distribution, then runs [`alg1_on_samples`].
pub fn alg1_weak_learner(dist: &ExplicitDistribution, cfg: &Alg1Config) -> Result<(Alg1Report, Vec<Alg1Trace>)> {
    let train = draw_stream(dist, cfg.sample_size, cfg.seed, 1)?;
    let holdout = draw_stream(dist, cfg.sample_size, cfg.seed, 2)?;
    alg1_on_samples(&train, &holdout, cfg)
}

/// Splits a fixed sample into training and held-out halves (alternating).
pub fn split_sample(s: &EmpiricalSample) -> Result<(EmpiricalSample, EmpiricalSample)> {
    let (mut a, mut b): (Vec<LabeledExample>, Vec<LabeledExample>) = (Vec::new(), Vec::new());
    for (k, e) in s.examples().iter().enumerate() {
        if k % 2 == 0 {
            a.push(e.clone());
        } else {
            b.push(e.clone());
        }
    }
    Ok((EmpiricalSample::new(s.dim(), a)?, EmpiricalSample::new(s.dim(), b)?))
}

/// [`alg1_weak_learner`] behind the booster's interface.
pub struct Alg1Weak {
    pub cfg: Alg1Config,
}

impl WeakLearner for Alg1Weak {
    fn name(&self) -> &str {
        "alg1"
    }

    fn params(&self) -> (f64, f64) {
        (self.cfg.eps, self.cfg.eps / 100.0)
    }

    fn learn(&self, view: &ExplicitDistribution, seed: u64) -> Result<Option<Hypothesis>> {
        let cfg = Alg1Config { seed, ..self.cfg.clone() };
        match alg1_weak_learner(view, &cfg) {
            Ok((rep, _)) => Ok(Some(rep.hypothesis)),
            Err(Error::NoHypothesis(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Boosts the sample-based weak learner with (alpha, gamma) = (eps, eps/100)
/// to error OPT + eps.
pub fn strong_learner_sample(
    dist: &ExplicitDistribution,
    cfg: &Alg1Config,
    boost: &BoostConfig,
) -> Result<BoostReport> {
    aboost(&Alg1Weak { cfg: cfg.clone() }, dist, cfg.eps, cfg.eps / 100.0, boost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{draw, gen_planted, MarginalSpec};

    #[test]
    fn defaults() {
        let c = Alg1Config::new(27, 0.2).unwrap();
        assert_eq!(c.r, 9);
        assert_eq!(c.t, 4);
        assert_eq!(c.sample_size, DEFAULT_SAMPLE_CAP);
        assert!((c.validate_threshold() - 0.498).abs() < 1e-15);
    }

    #[test]
    fn all_ones_returns_h2_immediately() {
        let n = 6;
        let dist =
            ExplicitDistribution::from_weights(n, (0..64u64).map(|v| (BitVector::from_u64(n, v), true, 1.0))).unwrap();
        let mut cfg = Alg1Config::new(n, 0.2).unwrap();
        cfg.sample_size = 200;
        let p = draw(&dist, 200, 1).unwrap();
        let (h, trace) = alg1_single_run(&p, &cfg, 0).unwrap();
        let h = h.unwrap();
        assert_eq!(trace.iterations.len(), 1);
        assert_eq!(hypothesis_error(&h, &dist).unwrap(), 0.0);
    }

    #[test]
    fn light_planted_target_found() {
        let n = 8;
        let s = MonotoneDisjunction::new(n, &[1, 4]).unwrap();
        let marg = MarginalSpec::WeightBand { lo: 0, hi: 3, support_size: None };
        let dist = gen_planted(n, &s, &marg, 0.05, 3).unwrap();
        let mut cfg = Alg1Config::new(n, 0.2).unwrap();
        cfg.repeats = 4;
        cfg.sample_size = 600;
        let (rep, _) = alg1_weak_learner(&dist, &cfg).unwrap();
        assert!(rep.heldout_error <= cfg.validate_threshold());
        assert!(hypothesis_error(&rep.hypothesis, &dist).unwrap() <= 0.5 - 0.02);
    }
}
