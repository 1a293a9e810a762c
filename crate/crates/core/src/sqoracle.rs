//! Statistical query oracles over explicit distributions, with budget
//! accounting and the conditional-ratio estimator.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::distributions::{seeded_rng, ExplicitDistribution};
use crate::domain::BitVector;
use crate::error::{Error, Result};

/// Slack on the [-1, 1] range check of query values.
pub const RANGE_SLACK: f64 = 1e-12;

type StatFn<'a> = dyn Fn(&BitVector, bool) -> f64 + Send + Sync + 'a;
type CorrFn<'a> = dyn Fn(&BitVector) -> f64 + Send + Sync + 'a;

/// A bounded query q(x, y) in [-1, 1].
pub struct StatQuery<'a> {
    descriptor: String,
    f: Box<StatFn<'a>>,
}

impl<'a> StatQuery<'a> {
    pub fn new(descriptor: impl Into<String>, f: impl Fn(&BitVector, bool) -> f64 + Send + Sync + 'a) -> Self {
        StatQuery { descriptor: descriptor.into(), f: Box::new(f) }
    }

    /// q(x, y) = 1 if pred(x, y) else 0.
    pub fn indicator(
        descriptor: impl Into<String>,
        pred: impl Fn(&BitVector, bool) -> bool + Send + Sync + 'a,
    ) -> Self {
        Self::new(descriptor, move |x, y| if pred(x, y) { 1.0 } else { 0.0 })
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// Evaluates with the range check.
    pub fn eval(&self, x: &BitVector, y: bool) -> Result<f64> {
        checked(&self.descriptor, (self.f)(x, y))
    }
}

impl fmt::Debug for StatQuery<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StatQuery({})", self.descriptor)
    }
}

/// A label-free bounded query q(x) in [-1, 1], answered as E[(2y - 1) q(x)].
pub struct CorrQuery<'a> {
    descriptor: String,
    f: Box<CorrFn<'a>>,
}

impl<'a> CorrQuery<'a> {
    pub fn new(descriptor: impl Into<String>, f: impl Fn(&BitVector) -> f64 + Send + Sync + 'a) -> Self {
        CorrQuery { descriptor: descriptor.into(), f: Box::new(f) }
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn eval(&self, x: &BitVector) -> Result<f64> {
        checked(&self.descriptor, (self.f)(x))
    }

    /// The equivalent label-aware query (2y - 1) q(x).
    pub fn to_stat(&self) -> StatQuery<'_> {
        StatQuery::new(format!("corr:{}", self.descriptor), move |x, y| {
            let v = (self.f)(x);
            if y {
                v
            } else {
                -v
            }
        })
    }
}

impl fmt::Debug for CorrQuery<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CorrQuery({})", self.descriptor)
    }
}

fn checked(descriptor: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v.abs() <= 1.0 + RANGE_SLACK {
        Ok(v)
    } else {
        Err(Error::QueryRange { descriptor: descriptor.to_string(), value: v })
    }
}

/// Query accounting.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryBudget {
    pub queries: u64,
    pub stat_queries: u64,
    pub cstat_queries: u64,
    /// None until the first query.
    pub min_tolerance: Option<f64>,
    /// Distinct tolerances with their query counts, in first-use order.
    pub tolerances: Vec<(f64, u64)>,
    #[serde(skip)]
    pub wall: Duration,
}

impl QueryBudget {
    fn record(&mut self, tau: f64, correlational: bool, wall: Duration) {
        self.queries += 1;
        if correlational {
            self.cstat_queries += 1;
        } else {
            self.stat_queries += 1;
        }
        self.min_tolerance = Some(self.min_tolerance.map_or(tau, |m| m.min(tau)));
        match self.tolerances.iter_mut().find(|(t, _)| *t == tau) {
            Some(e) => e.1 += 1,
            None => self.tolerances.push((tau, 1)),
        }
        self.wall += wall;
    }

    pub fn merge(&mut self, other: &QueryBudget) {
        self.queries += other.queries;
        self.stat_queries += other.stat_queries;
        self.cstat_queries += other.cstat_queries;
        self.min_tolerance = match (self.min_tolerance, other.min_tolerance) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        for &(t, c) in &other.tolerances {
            match self.tolerances.iter_mut().find(|(u, _)| *u == t) {
                Some(e) => e.1 += c,
                None => self.tolerances.push((t, c)),
            }
        }
        self.wall += other.wall;
    }

    /// Report in the external JSON shape; wall time only on request so
    /// reports stay byte-stable.
    pub fn report(&self, backend: &Backend, timings: bool) -> BudgetReport {
        BudgetReport {
            queries: self.queries,
            min_tolerance: self.min_tolerance,
            backend: backend.name().to_string(),
            wall_ms: timings.then(|| self.wall.as_secs_f64() * 1e3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub queries: u64,
    pub min_tolerance: Option<f64>,
    pub backend: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_ms: Option<f64>,
}

/// Default per-query failure probability of the empirical backend.
pub const DEFAULT_DELTA: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    /// Exact expectations.
    Exact,
    /// Mean of m = ceil(2 ln(2/delta) / tau^2) fresh i.i.d. draws per query
    /// (Hoeffding for values in [-1, 1]).
    Empirical { delta: f64 },
    /// Exact value moved by 0.99 tau with a pseudorandom sign.
    Adversarial,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Empirical { .. } => "empirical",
            Backend::Adversarial => "adversarial",
        }
    }

    pub fn empirical() -> Self {
        Backend::Empirical { delta: DEFAULT_DELTA }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "empirical" => Ok(Backend::empirical()),
            "adversarial" => Ok(Backend::Adversarial),
            other => Err(Error::InvalidParameter(format!("unknown oracle backend `{other}`"))),
        }
    }
}

/// Sample count used by the empirical backend.
pub fn empirical_draws(tau: f64, delta: f64) -> u64 {
    (2.0 * (2.0 / delta).ln() / (tau * tau)).ceil().max(1.0) as u64
}

/// Read access to correlational statistical queries only.
pub trait CorrelationalOracle: Sync {
    fn cstat(&self, q: &CorrQuery<'_>, tau: f64) -> Result<f64>;
    fn budget(&self) -> QueryBudget;
}

/// SQ oracle over an explicit distribution. Safe to share across threads;
/// the budget is updated under a lock.
pub struct SqOracle {
    dist: Arc<ExplicitDistribution>,
    backend: Backend,
    seed: u64,
    trial: u64,
    next_query: AtomicU64,
    budget: Mutex<QueryBudget>,
}

impl SqOracle {
    pub fn new(dist: Arc<ExplicitDistribution>, backend: Backend, seed: u64) -> Self {
        Self::for_trial(dist, backend, seed, 0)
    }

    pub fn exact(dist: ExplicitDistribution) -> Self {
        Self::new(Arc::new(dist), Backend::Exact, 0)
    }

    fn for_trial(dist: Arc<ExplicitDistribution>, backend: Backend, seed: u64, trial: u64) -> Self {
        SqOracle {
            dist,
            backend,
            seed,
            trial,
            next_query: AtomicU64::new(0),
            budget: Mutex::new(QueryBudget::default()),
        }
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn dim(&self) -> usize {
        self.dist.dim()
    }

    /// The underlying distribution, for instrumentation and reporting only;
    /// learners go through `stat`/`cstat`.
    pub fn distribution(&self) -> &ExplicitDistribution {
        &self.dist
    }

    pub fn stat(&self, q: &StatQuery<'_>, tau: f64) -> Result<f64> {
        self.answer(q, tau, false)
    }

    pub fn budget(&self) -> QueryBudget {
        self.budget.lock().expect("budget lock").clone()
    }

    fn answer(&self, q: &StatQuery<'_>, tau: f64, correlational: bool) -> Result<f64> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tolerance {tau} must be positive")));
        }
        let start = Instant::now();
        let idx = self.next_query.fetch_add(1, Ordering::Relaxed);
        let stream = self.trial << 32 | (idx & 0xffff_ffff);
        let support = self.dist.support();
        let mut values = Vec::with_capacity(support.len());
        for e in support {
            values.push(q.eval(&e.x, e.y)?);
        }
        let exact: f64 = support.iter().zip(&values).map(|(e, v)| e.p * v).sum();
        let v = match self.backend {
            Backend::Exact => exact,
            Backend::Adversarial => {
                let mut rng = seeded_rng(self.seed, stream);
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                (exact + sign * 0.99 * tau).clamp(-1.0, 1.0)
            }
            Backend::Empirical { delta } => {
                // The counts of m i.i.d. draws over the support are
                // multinomial; draw them by sequential binomials.
                let m = empirical_draws(tau, delta);
                let mut rng = seeded_rng(self.seed, stream);
                let (mut left, mut mass_left, mut sum) = (m, 1.0f64, 0.0);
                for (e, val) in support.iter().zip(&values) {
                    if left == 0 {
                        break;
                    }
                    let p = if mass_left > 0.0 { (e.p / mass_left).clamp(0.0, 1.0) } else { 1.0 };
                    let c = Binomial::new(left, p).map(|b| b.sample(&mut rng)).unwrap_or(left);
                    sum += c as f64 * val;
                    left -= c;
                    mass_left -= e.p;
                }
                (sum / m as f64).clamp(-1.0, 1.0)
            }
        };
        self.budget.lock().expect("budget lock").record(tau, correlational, start.elapsed());
        Ok(v)
    }
}

impl CorrelationalOracle for SqOracle {
    fn cstat(&self, q: &CorrQuery<'_>, tau: f64) -> Result<f64> {
        self.answer(&q.to_stat(), tau, true)
    }

    fn budget(&self) -> QueryBudget {
        SqOracle::budget(self)
    }
}

/// A handle exposing only correlational queries of an oracle.
pub struct CsqView<'a>(pub &'a SqOracle);

impl CorrelationalOracle for CsqView<'_> {
    fn cstat(&self, q: &CorrQuery<'_>, tau: f64) -> Result<f64> {
        self.0.cstat(q, tau)
    }

    fn budget(&self) -> QueryBudget {
        self.0.budget()
    }
}

/// Makes independent oracles over one distribution, one per trial.
#[derive(Clone, Debug)]
pub struct OracleSpec {
    pub dist: Arc<ExplicitDistribution>,
    pub backend: Backend,
    pub seed: u64,
}

impl OracleSpec {
    pub fn new(dist: ExplicitDistribution, backend: Backend, seed: u64) -> Self {
        OracleSpec { dist: Arc::new(dist), backend, seed }
    }

    pub fn make(&self, trial: u64) -> SqOracle {
        SqOracle::for_trial(self.dist.clone(), self.backend, self.seed, trial + 1)
    }
}

/// P1/P2 from estimates with tolerance tau, guarded by P2 - tau >= gamma > 0.
/// When the true values satisfy P1 <= P2 the error is at most 2 tau / gamma.
pub fn ratio_estimate(p1: f64, p2: f64, tau: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !(tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("ratio needs gamma > 0 and tau >= 0, got {gamma}, {tau}")));
    }
    if p2 - tau < gamma {
        return Err(Error::RatioGuard { p2, tau, gamma });
    }
    Ok(p1 / p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::WeightedExample;

    fn bv(s: &str) -> BitVector {
        s.parse().unwrap()
    }

    fn coin() -> ExplicitDistribution {
        ExplicitDistribution::new(
            2,
            vec![
                WeightedExample { x: bv("10"), y: true, p: 0.3 },
                WeightedExample { x: bv("01"), y: false, p: 0.5 },
                WeightedExample { x: bv("11"), y: true, p: 0.2 },
            ],
        )
        .unwrap()
    }

    #[test]
    fn exact_answers_and_budget() {
        let o = SqOracle::exact(coin());
        assert_eq!(o.stat(&StatQuery::new("one", |_, _| 1.0), 0.1).unwrap(), 1.0);
        let y1 = o.stat(&StatQuery::indicator("y=1", |_, y| y), 0.01).unwrap();
        assert!((y1 - 0.5).abs() < 1e-15);
        let b = o.budget();
        assert_eq!(b.queries, 2);
        assert_eq!(b.min_tolerance, Some(0.01));
    }

    #[test]
    fn range_violation_is_an_error() {
        let o = SqOracle::exact(coin());
        assert!(matches!(o.stat(&StatQuery::new("two", |_, _| 2.0), 0.1), Err(Error::QueryRange { .. })));
    }

    #[test]
    fn adversarial_within_tolerance() {
        let o = SqOracle::new(Arc::new(coin()), Backend::Adversarial, 7);
        for k in 0..50 {
            let v = o.stat(&StatQuery::indicator("x0", |x, _| x.get(0)), 0.05).unwrap();
            assert!((v - 0.5).abs() <= 0.05, "query {k}");
            assert!((v - 0.5).abs() >= 0.0495 - 1e-12);
        }
    }

    #[test]
    fn empirical_close_and_deterministic() {
        let spec = OracleSpec::new(coin(), Backend::empirical(), 3);
        let a = spec.make(0).stat(&StatQuery::indicator("y", |_, y| y), 0.01).unwrap();
        let b = spec.make(0).stat(&StatQuery::indicator("y", |_, y| y), 0.01).unwrap();
        assert_eq!(a, b);
        assert!((a - 0.5).abs() <= 0.01);
    }

    #[test]
    fn cstat_embeds_into_stat() {
        let o = SqOracle::exact(coin());
        let c = o.cstat(&CorrQuery::new("one", |_| 1.0), 0.1).unwrap();
        assert!(c.abs() < 1e-15);
        assert_eq!(o.budget().cstat_queries, 1);
    }

    #[test]
    fn ratio_guard() {
        assert!((ratio_estimate(0.2, 0.5, 0.0, 0.1).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(ratio_estimate(0.2, 0.15, 0.1, 0.1), Err(Error::RatioGuard { .. })));
    }

    #[test]
    fn merge_budgets() {
        let mut a = QueryBudget::default();
        a.record(0.1, false, Duration::ZERO);
        let mut b = QueryBudget::default();
        b.record(0.01, true, Duration::ZERO);
        b.record(0.1, false, Duration::ZERO);
        a.merge(&b);
        assert_eq!(a.queries, 3);
        assert_eq!(a.min_tolerance, Some(0.01));
        assert_eq!(a.tolerances, vec![(0.1, 2), (0.01, 1)]);
    }
}
