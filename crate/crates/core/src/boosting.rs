//! Agnostic boosting by relabeling: each round hands the weak learner a view
//! of the data where example (x, y) keeps its label with probability
//! w = min(1, exp(-y~ H(x))) and is relabeled by a fair coin otherwise
//! (y~ = 2y - 1, H the running real-valued combination). The x-marginal of
//! every view equals the data's.

use serde::{Deserialize, Serialize};

use crate::bruteforce::{opt_enumerate, ConceptClass};
use crate::distributions::ExplicitDistribution;
use crate::domain::{hypothesis_error, BitVector, Hypothesis};
use crate::error::{Error, Result};

/// A weak learner as the booster sees it.
pub trait WeakLearner: Sync {
    fn name(&self) -> &str;
    /// Declared (alpha, gamma): on views whose class OPT is at most
    /// 1/2 - alpha it should return h with error at most 1/2 - gamma.
    fn params(&self) -> (f64, f64);
    /// `Ok(None)` is a (possibly stochastic) failure; the booster retries
    /// with a fresh seed.
    fn learn(&self, view: &ExplicitDistribution, seed: u64) -> Result<Option<Hypothesis>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    /// Rounds = min(ceil(c / gamma^2), max_rounds).
    pub c: f64,
    pub max_rounds: usize,
    pub retries: usize,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig { c: 1.0, max_rounds: 20, retries: 10, seed: 0 }
    }
}

impl BoostConfig {
    pub fn rounds(&self, gamma: f64) -> usize {
        let r = (self.c / (gamma * gamma)).ceil();
        if r.is_finite() && r >= 1.0 {
            (r as usize).min(self.max_rounds).max(1)
        } else {
            self.max_rounds.max(1)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub round: usize,
    pub attempts: usize,
    pub view_error: f64,
    pub step: f64,
    /// E[phi(y~ H(x))] after the round, phi(z) = 1 - z for z <= 0 and
    /// exp(-z) otherwise.
    pub potential: f64,
    pub train_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostReport {
    pub hypothesis: Hypothesis,
    pub error: f64,
    pub best_round: usize,
    pub weak_calls: usize,
    pub rounds: Vec<BoostRound>,
    /// Set when the loop ended early on weak-learner failure.
    pub stopped_early: Option<String>,
}

fn potential(z: f64) -> f64 {
    if z <= 0.0 {
        1.0 - z
    } else {
        (-z).exp()
    }
}

fn signed(b: bool) -> f64 {
    if b {
        1.0
    } else {
        -1.0
    }
}

/// The relabeled view for margins `margin[k] = y~_k H(x_k)`.
pub fn relabeled_view(data: &ExplicitDistribution, margin: &[f64]) -> Result<ExplicitDistribution> {
    let items = data.support().iter().zip(margin).flat_map(|(e, &z)| {
        let w = (-z).exp().min(1.0);
        let keep = e.p * (w + (1.0 - w) / 2.0);
        let flip = e.p * (1.0 - w) / 2.0;
        [(e.x.clone(), e.y, keep), (e.x.clone(), !e.y, flip)]
    });
    ExplicitDistribution::from_weights(data.dim(), items)
}

/// Boosts `weak` on `data` for `rounds` rounds and returns the weighted
/// majority of the round prefix with the smallest error on `data`.
pub fn boost_rounds(
    weak: &dyn WeakLearner,
    data: &ExplicitDistribution,
    gamma: f64,
    rounds: usize,
    cfg: &BoostConfig,
) -> Result<BoostReport> {
    let m = data.support().len();
    let mut h_real = vec![0.0f64; m];
    let mut terms: Vec<(f64, Hypothesis)> = Vec::new();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Hypothesis)> = None;
    let mut weak_calls = 0;
    let mut stopped_early = None;
    'rounds: for round in 0..rounds {
        let margin: Vec<f64> = data.support().iter().zip(&h_real).map(|(e, h)| signed(e.y) * h).collect();
        let view = relabeled_view(data, &margin)?;
        let mut found = None;
        let mut attempts = 0;
        while attempts < cfg.retries.max(1) {
            let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((round * 101 + attempts) as u64);
            attempts += 1;
            weak_calls += 1;
            if let Some(h) = weak.learn(&view, seed)? {
                let e = hypothesis_error(&h, &view)?;
                if e <= 0.5 - gamma {
                    found = Some((h, e));
                    break;
                }
            }
        }
        let Some((h, view_error)) = found else {
            if round == 0 {
                return Err(Error::WeakLearnerFailed { round, attempts });
            }
            stopped_early = Some(format!("weak learner failed {attempts} attempts in round {round}"));
            break 'rounds;
        };
        let step = (1.0 - 2.0 * view_error).max(gamma);
        for (k, e) in data.support().iter().enumerate() {
            h_real[k] += step * signed(h.eval(&e.x));
        }
        terms.push((step, h));
        let candidate = Hypothesis::WeightedMajority { terms: terms.clone() };
        let train_error = hypothesis_error(&candidate, data)?;
        let pot: f64 = data.support().iter().zip(&h_real).map(|(e, h)| e.p * potential(signed(e.y) * h)).sum();
        history.push(BoostRound { round, attempts, view_error, step, potential: pot, train_error });
        if best.as_ref().map_or(true, |b| train_error < b.0 - 1e-15) {
            best = Some((train_error, round, candidate));
        }
    }
    let (error, best_round, hypothesis) = best.expect("round 0 either succeeds or returns an error");
    Ok(BoostReport { hypothesis, error, best_round, weak_calls, rounds: history, stopped_early })
}

/// Boosting to additive error: rounds = min(ceil(c/gamma^2), cap).
pub fn aboost(
    weak: &dyn WeakLearner,
    data: &ExplicitDistribution,
    alpha: f64,
    gamma: f64,
    cfg: &BoostConfig,
) -> Result<BoostReport> {
    check_params(alpha, gamma)?;
    boost_rounds(weak, data, gamma, cfg.rounds(gamma), cfg)
}

fn check_params(alpha: f64, gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 0.5) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "boosting needs alpha in (0,1), gamma in (0,1/2): {alpha}, {gamma}"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaStage {
    pub delta: f64,
    pub rounds: usize,
    /// Round count the schedule asks for before the cap.
    pub scheduled: f64,
    pub error: f64,
    pub weak_calls: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoostDiReport {
    pub hypothesis: Hypothesis,
    pub error: f64,
    pub stages: Vec<DeltaStage>,
    pub weak_calls: usize,
}

/// Boosting toward error OPT/(1 - 2 alpha) + eps. The round schedule
/// gamma^-2 Delta^-1 ln(1/Delta) depends on the unknown Delta, so Delta is
/// guessed geometrically, halving from 1/2 while it stays at least eps;
/// each guess gets its own boosting run and the run with the smallest
/// error on `data` is kept.
pub fn aboost_di(
    weak: &dyn WeakLearner,
    data: &ExplicitDistribution,
    alpha: f64,
    gamma: f64,
    eps: f64,
    cfg: &BoostConfig,
) -> Result<BoostDiReport> {
    check_params(alpha, gamma)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps {eps} outside (0, 1)")));
    }
    let mut delta = 0.5;
    let mut stages = Vec::new();
    let mut best: Option<(f64, Hypothesis)> = None;
    let mut weak_calls = 0;
    let mut first_err = None;
    loop {
        let scheduled = cfg.c / (gamma * gamma) / delta * (1.0 / delta).ln().max(1.0);
        let rounds = if scheduled.is_finite() {
            (scheduled.ceil() as usize).clamp(1, cfg.max_rounds.max(1))
        } else {
            cfg.max_rounds.max(1)
        };
        let stage_cfg = BoostConfig { seed: cfg.seed.wrapping_add(stages.len() as u64 * 7_919), ..*cfg };
        match boost_rounds(weak, data, gamma, rounds, &stage_cfg) {
            Ok(rep) => {
                weak_calls += rep.weak_calls;
                stages.push(DeltaStage { delta, rounds, scheduled, error: rep.error, weak_calls: rep.weak_calls });
                if best.as_ref().map_or(true, |b| rep.error < b.0 - 1e-15) {
                    best = Some((rep.error, rep.hypothesis));
                }
            }
            Err(e @ Error::WeakLearnerFailed { .. }) => {
                weak_calls += cfg.retries.max(1);
                stages.push(DeltaStage { delta, rounds, scheduled, error: f64::NAN, weak_calls: cfg.retries.max(1) });
                first_err.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
        if delta / 2.0 < eps {
            break;
        }
        delta /= 2.0;
    }
    match best {
        Some((error, hypothesis)) => Ok(BoostDiReport { hypothesis, error, stages, weak_calls }),
        None => Err(first_err.unwrap_or_else(|| Error::NoHypothesis("no boosting stage succeeded".into()))),
    }
}

/// Weak learner returning the exact best monotone disjunction (or constant
/// 1) on the view, by enumeration.
pub struct OptimalDisjunctionLearner;

impl WeakLearner for OptimalDisjunctionLearner {
    fn name(&self) -> &str {
        "opt-disjunction"
    }

    fn params(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn learn(&self, view: &ExplicitDistribution, _seed: u64) -> Result<Option<Hypothesis>> {
        let rep = opt_enumerate(view, ConceptClass::MonotoneConst1)?;
        Ok(rep.argmin.to_hypothesis(view.dim()))
    }
}

/// Weak learner that always answers a fixed constant.
pub struct ConstantLearner(pub bool);

impl WeakLearner for ConstantLearner {
    fn name(&self) -> &str {
        "constant"
    }

    fn params(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn learn(&self, _view: &ExplicitDistribution, _seed: u64) -> Result<Option<Hypothesis>> {
        Ok(Some(Hypothesis::constant(self.0)))
    }
}

/// Largest ratio view(x)/data(x) over the x-marginal; 1 for relabeled views.
pub fn marginal_density_ratio(data: &ExplicitDistribution, view: &ExplicitDistribution) -> f64 {
    use std::collections::BTreeMap;
    let mut base: BTreeMap<&BitVector, f64> = BTreeMap::new();
    for e in data.support() {
        *base.entry(&e.x).or_insert(0.0) += e.p;
    }
    let mut v: BTreeMap<&BitVector, f64> = BTreeMap::new();
    for e in view.support() {
        *v.entry(&e.x).or_insert(0.0) += e.p;
    }
    v.iter().map(|(x, p)| p / base.get(x).copied().unwrap_or(0.0)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{gen_planted, MarginalSpec};
    use crate::domain::MonotoneDisjunction;

    fn planted(eta: f64) -> ExplicitDistribution {
        let s = MonotoneDisjunction::new(5, &[0, 2]).unwrap();
        gen_planted(5, &s, &MarginalSpec::WeightBand { lo: 0, hi: 5, support_size: None }, eta, 1).unwrap()
    }

    #[test]
    fn optimal_learner_realizable_round_one() {
        let d = planted(0.0);
        let rep = aboost(&OptimalDisjunctionLearner, &d, 0.1, 0.05, &BoostConfig::default()).unwrap();
        assert_eq!(rep.error, 0.0);
        assert_eq!(rep.best_round, 0);
    }

    #[test]
    fn constant_zero_is_surfaced() {
        let d = planted(0.0);
        let err = aboost(&ConstantLearner(false), &d, 0.1, 0.05, &BoostConfig::default()).unwrap_err();
        assert!(matches!(err, Error::WeakLearnerFailed { round: 0, .. }));
    }

    #[test]
    fn views_keep_marginal_and_potential_falls() {
        let d = planted(0.1);
        let rep =
            aboost(&OptimalDisjunctionLearner, &d, 0.1, 0.05, &BoostConfig { max_rounds: 5, ..Default::default() })
                .unwrap();
        assert!(rep.error <= 0.1 + 1e-12);
        for w in rep.rounds.windows(2) {
            assert!(w[1].potential <= w[0].potential + 1e-12);
        }
        let margin = vec![0.7; d.support().len()];
        let view = relabeled_view(&d, &margin).unwrap();
        assert!((marginal_density_ratio(&d, &view) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delta_schedule_halves() {
        let d = planted(0.05);
        let rep = aboost_di(&OptimalDisjunctionLearner, &d, 0.1, 0.1, 0.1, &BoostConfig::default()).unwrap();
        let deltas: Vec<f64> = rep.stages.iter().map(|s| s.delta).collect();
        assert_eq!(deltas, vec![0.5, 0.25, 0.125]);
        assert!(rep.error <= 0.05 / 0.8 + 0.1);
    }
}
