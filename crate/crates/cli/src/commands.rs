use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use adl_core::acceptance;
use adl_core::boosting::{aboost, aboost_di, BoostConfig, ConstantLearner, OptimalDisjunctionLearner, WeakLearner};
use adl_core::bruteforce::{opt_enumerate, Concept, ConceptClass, OptReport};
use adl_core::chebyshev::{build_approx, certify_approx, frontier, ApproxTarget};
use adl_core::csq_weak::{csq_weak_learner, ConstraintMode, CsqConfig};
use adl_core::distributions::{
    draw, gen_planted, gen_random_labels, vc_sample_size, ExplicitDistribution, MarginalSpec,
};
use adl_core::domain::io::{read_data, write_data, DataFile};
use adl_core::domain::{hypothesis_error, BitVector, MonotoneDisjunction};
use adl_core::l1regression::{l1_fit, l1_regress_learner, round_to_hypothesis, L1Options, ThresholdGrid};
use adl_core::learner_sample::{
    alg1_on_samples, alg1_weak_learner, split_sample, strong_learner_sample, Alg1Config, Alg1Weak, CPrimePolicy,
    GuessPolicy,
};
use adl_core::learner_sq::{alg2_learner, Alg2Config, Alg2Guess};
use adl_core::learner_tradeoff::{alg3_weak_learner, tradeoff_learner, Alg3Config, Alg3Mode, Alg3Weak};
use adl_core::sqoracle::{Backend, CsqView, OracleSpec, SqOracle};

use crate::{
    AcceptArgs, ApproxCmd, BenchArgs, BoostArgs, Cli, Command, ConstraintKind, CsqArgs, Failure, GenArgs, GlobalOpts,
    L1fitArgs, MarginalKind, OptArgs, SampleArgs, SqLearnArgs, StrongSampleArgs, TradeoffArgs, WeakKind,
    EXIT_ACCEPTANCE,
};

type Res<T> = Result<T, Failure>;

pub fn run(cli: &Cli) -> Res<u8> {
    let g = &cli.global;
    let start = Instant::now();
    let report = match &cli.command {
        Command::Gen(a) => return gen(g, a),
        Command::Approx(ApproxCmd::Frontier { r, eps }) => return approx_frontier(g, r, eps),
        Command::Accept(a) => return accept(g, a),
        Command::Opt(a) => opt(a)?,
        Command::Approx(ApproxCmd::Certify { r, eps, coefficients }) => approx_certify(*r, *eps, *coefficients)?,
        Command::L1fit(a) => l1fit(a)?,
        Command::WeakSample(a) => weak_sample(g, a)?,
        Command::StrongSample(a) => strong_sample(g, a)?,
        Command::SqLearn(a) => sq_learn(g, a)?,
        Command::Tradeoff(a) => tradeoff(g, a)?,
        Command::Boost(a) => boost(g, a)?,
        Command::CsqWeak(a) => csq_weak(g, a)?,
        Command::Bench(a) => bench(g, a)?,
    };
    emit(g, report, start)?;
    Ok(0)
}

fn emit(g: &GlobalOpts, mut report: Value, start: Instant) -> Res<()> {
    if let Value::Object(m) = &mut report {
        m.insert("seed".into(), json!(g.seed));
        if g.timings {
            m.insert("wall_ms".into(), json!(start.elapsed().as_secs_f64() * 1e3));
        }
    }
    let text = serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?;
    write_text(g, &(text + "\n"))
}

fn write_text(g: &GlobalOpts, text: &str) -> Res<()> {
    match &g.out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_json_lines<T: Serialize>(path: &Path, rows: &[T]) -> Res<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in rows {
        serde_json::to_writer(&mut w, r).map_err(anyhow::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn to_value<T: Serialize>(v: &T) -> Res<Value> {
    Ok(serde_json::to_value(v).map_err(anyhow::Error::from)?)
}

fn load(path: &Path) -> Res<DataFile> {
    read_data(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_explicit(path: &Path) -> Res<ExplicitDistribution> {
    Ok(load(path)?.to_distribution()?)
}

fn parse_backend(s: &str) -> Res<Backend> {
    s.parse().map_err(|e| Failure::usage(format!("{e} (expected exact, empirical or adversarial)")))
}

fn check_dim(expected: Option<usize>, found: usize) -> Res<()> {
    match expected {
        Some(n) if n != found => Err(Failure::usage(format!("--n {n} but the input has dimension {found}"))),
        _ => Ok(()),
    }
}

/// OPT over monotone disjunctions and constant 1, when enumerable.
fn try_opt(data: &ExplicitDistribution) -> Option<OptReport> {
    opt_enumerate(data, ConceptClass::MonotoneConst1).ok()
}

/// Target for the forced-correct hooks: the given coordinates, or the
/// lexicographically smallest optimal monotone disjunction.
fn hook_target(data: &ExplicitDistribution, given: &Option<Vec<usize>>) -> Res<MonotoneDisjunction> {
    let n = data.dim();
    if let Some(s) = given {
        return Ok(MonotoneDisjunction::new(n, s)?);
    }
    let rep = opt_enumerate(data, ConceptClass::Monotone).map_err(|e| {
        Failure::usage(format!("cannot enumerate an optimal target ({e}); pass --target with the planted coordinates"))
    })?;
    match rep.argmin {
        Concept::Disjunction { support } => Ok(MonotoneDisjunction::new(n, &support)?),
        other => Err(Failure::usage(format!("optimal concept {other:?} is not a disjunction; pass --target"))),
    }
}

fn gen(g: &GlobalOpts, a: &GenArgs) -> Res<u8> {
    let n = a.n;
    if n == 0 {
        return Err(Failure::usage("--n must be positive"));
    }
    let marginal = match a.marginal {
        MarginalKind::WeightBand => {
            MarginalSpec::WeightBand { lo: a.lo, hi: a.hi.unwrap_or(n), support_size: a.support_size }
        }
        MarginalKind::Uniform => MarginalSpec::WeightBand { lo: 0, hi: n, support_size: a.support_size },
        MarginalKind::HeavyLight => MarginalSpec::HeavyLightMixture {
            p_heavy: a.p_heavy,
            r: a.r.unwrap_or_else(|| ((n as f64).powf(2.0 / 3.0) - 1e-9).ceil() as usize),
            support_size: a.support_size.unwrap_or(64),
            light_max_weight: a.light_max_weight,
        },
    };
    let dist = match (&a.planted, a.random_labels) {
        (Some(s), false) => gen_planted(n, &MonotoneDisjunction::new(n, s)?, &marginal, a.eta, g.seed)?,
        (None, true) => gen_random_labels(n, &marginal, a.pure_fraction, g.seed)?,
        _ => return Err(Failure::usage("give exactly one of --planted <coords> or --random-labels")),
    };
    let data = match a.sample {
        Some(m) => DataFile::Sample(draw(&dist, m, g.seed)?),
        None => DataFile::Explicit(dist),
    };
    match &g.out {
        Some(p) => write_data(p, &data)?,
        None => {
            let text = match &data {
                DataFile::Explicit(d) => adl_core::domain::io::format_distribution(d),
                DataFile::Sample(s) => adl_core::domain::io::format_sample(s),
            };
            std::io::stdout().lock().write_all(text.as_bytes())?;
        }
    }
    Ok(0)
}

fn opt(a: &OptArgs) -> Res<Value> {
    let class: ConceptClass = a.class.parse().map_err(Failure::usage)?;
    let data = load(&a.input)?;
    let rep = match &data {
        DataFile::Explicit(d) => opt_enumerate(d, class)?,
        DataFile::Sample(s) => opt_enumerate(s, class)?,
    };
    let mut v = to_value(&rep)?;
    v["count_enumerated"] = match u64::try_from(rep.count_enumerated) {
        Ok(c) => json!(c),
        Err(_) => json!(rep.count_enumerated.to_string()),
    };
    v["n"] = json!(data.dim());
    Ok(v)
}

fn approx_frontier(g: &GlobalOpts, rs: &[usize], eps: &[f64]) -> Res<u8> {
    let rows = frontier(rs, eps)?;
    let mut text = String::from("r,eps,degree,max_dev\n");
    for row in rows {
        text.push_str(&format!("{},{},{},{:e}\n", row.r, row.eps, row.degree, row.max_dev));
    }
    write_text(g, &text)?;
    Ok(0)
}

fn approx_certify(r: usize, eps: f64, coefficients: bool) -> Res<Value> {
    let q = build_approx(r, eps)?;
    let rep = certify_approx(&q, r, eps, ApproxTarget::Disjunction);
    let mut v = to_value(&rep)?;
    if coefficients {
        v["coefficients"] = json!(q.monomial_coefficients());
    }
    Ok(v)
}

fn l1fit(a: &L1fitArgs) -> Res<Value> {
    let data = load_explicit(&a.input)?;
    let n = data.dim();
    let coords = match &a.coords {
        Some(c) => BitVector::from_indices(n, c)?,
        None => BitVector::ones(n),
    };
    let opts = L1Options::default();
    let (loss, degree, threshold, error) = match a.degree {
        Some(d) => {
            let fit = l1_fit(&data, &coords, d, &opts)?;
            let rounded = round_to_hypothesis(&fit.poly, &data, &ThresholdGrid::for_epsilon(a.eps))?;
            (fit.loss, fit.degree, rounded.threshold, rounded.error)
        }
        None => {
            let (_, rep) = l1_regress_learner(&data, &coords, a.eps, &opts)?;
            (rep.loss, rep.degree, rep.threshold, rep.error)
        }
    };
    Ok(json!({
        "config": { "epsilon": a.eps, "degree": a.degree, "coords": coords.indices() },
        "loss": loss,
        "degree": degree,
        "threshold": threshold,
        "error": error,
        "opt": try_opt(&data).map(|o| o.opt),
    }))
}

fn alg1_config(n: usize, a: &SampleArgs, data: &ExplicitDistribution, seed: u64) -> Res<Alg1Config> {
    let mut cfg = Alg1Config::new(n, a.eps)?;
    cfg.seed = seed;
    if let Some(r) = a.repeats {
        cfg.repeats = r;
    }
    if let Some(m) = a.sample_size {
        cfg.sample_size = m;
    }
    if a.uniform_c_prime {
        cfg.c_prime = CPrimePolicy::Uniform;
    }
    if a.force_correct_guesses {
        cfg.guess = GuessPolicy::ForcedCorrect { target: hook_target(data, &a.target)? };
    }
    Ok(cfg)
}

fn weak_sample(g: &GlobalOpts, a: &SampleArgs) -> Res<Value> {
    let data = load(&a.input)?;
    check_dim(a.n, data.dim())?;
    let dist = data.to_distribution()?;
    let n = dist.dim();
    let cfg = alg1_config(n, a, &dist, g.seed)?;
    let (rep, traces) = match &data {
        DataFile::Explicit(d) => alg1_weak_learner(d, &cfg)?,
        DataFile::Sample(s) => {
            let (train, holdout) = split_sample(s)?;
            alg1_on_samples(&train, &holdout, &cfg)?
        }
    };
    if let Some(p) = &a.trace {
        write_json_lines(p, &traces)?;
    }
    let within = traces.iter().flat_map(|t| &t.iterations).filter_map(|it| it.target_within).all(|b| b);
    Ok(json!({
        "config": cfg,
        "hypothesis": rep.hypothesis,
        "heldout_error": rep.heldout_error,
        "error": hypothesis_error(&rep.hypothesis, &dist)?,
        "run": rep.run,
        "returned": rep.returned,
        "qualified": rep.qualified,
        "runs": rep.runs,
        "sample_size": rep.sample_size,
        "degree": rep.degree,
        "iterations": traces.iter().map(|t| t.iterations.len()).max().unwrap_or(0),
        "theoretical_log2_repeats": theoretical_log2_repeats(n, a.eps),
        "target_within_every_iteration": a.force_correct_guesses.then_some(within),
        "opt": try_opt(&dist).map(|o| o.opt),
    }))
}

fn strong_sample(g: &GlobalOpts, a: &StrongSampleArgs) -> Res<Value> {
    let dist = load_explicit(&a.sample.input)?;
    check_dim(a.sample.n, dist.dim())?;
    let cfg = alg1_config(dist.dim(), &a.sample, &dist, g.seed)?;
    let boost = BoostConfig { max_rounds: a.max_rounds, seed: g.seed, ..BoostConfig::default() };
    let rep = strong_learner_sample(&dist, &cfg, &boost)?;
    if let Some(p) = &a.sample.trace {
        write_json_lines(p, &rep.rounds)?;
    }
    Ok(json!({
        "config": { "alg1": cfg, "boost": boost },
        "hypothesis": rep.hypothesis,
        "error": rep.error,
        "best_round": rep.best_round,
        "weak_calls": rep.weak_calls,
        "rounds": rep.rounds,
        "stopped_early": rep.stopped_early,
        "degree": cfg.degree,
        "opt": try_opt(&dist).map(|o| o.opt),
    }))
}

fn sq_learn(g: &GlobalOpts, a: &SqLearnArgs) -> Res<Value> {
    let dist = load_explicit(&a.input)?;
    let backend = parse_backend(&a.backend)?;
    let n = dist.dim();
    let mut cfg = Alg2Config::new(n, a.eps)?;
    cfg.trials = a.trials.max(1);
    cfg.seed = g.seed;
    if a.force_correct_guesses {
        cfg.guess = Alg2Guess::ForcedCorrect { target: hook_target(&dist, &a.target)? };
    }
    let spec = OracleSpec::new(dist.clone(), backend, g.seed);
    let (rep, traces) = alg2_learner(&spec, &cfg)?;
    if let Some(p) = &a.trace {
        write_json_lines(p, &traces)?;
    }
    let budget = rep.budget.report(&backend, g.timings);
    if let Some(p) = &a.budget_out {
        std::fs::write(p, serde_json::to_string_pretty(&budget).map_err(anyhow::Error::from)? + "\n")?;
    }
    let error = hypothesis_error(&rep.hypothesis, &dist)?;
    let opt = try_opt(&dist).map(|o| o.opt);
    let chosen = traces.iter().find(|t| t.trial == rep.trial);
    Ok(json!({
        "config": cfg,
        "backend": backend,
        "hypothesis": rep.hypothesis,
        "estimated_error": rep.estimated_error,
        "error": error,
        "opt": opt,
        "within_opt_plus_eps": opt.map(|o| error <= o + a.eps + 1e-9),
        "trial": rep.trial,
        "produced": rep.produced,
        "trials": rep.trials,
        "degree": cfg.degree,
        "iterations": chosen.map(|t| t.iterations.len()),
        "iteration_bound": cfg.t,
        "budget": budget,
        "stat_queries": rep.budget.stat_queries,
        "tolerances": rep.budget.tolerances,
    }))
}

fn alg3_config(n: usize, a: &TradeoffArgs, dist: &ExplicitDistribution, seed: u64) -> Res<Alg3Config> {
    let mode = if a.relaxed_constants { Alg3Mode::Relaxed } else { Alg3Mode::Strict };
    let mut cfg = Alg3Config::with_constant(n, a.alpha, a.eps, mode, a.c)?;
    cfg.trials = a.trials.max(1);
    cfg.seed = seed;
    if a.force_correct_guesses {
        cfg.guess = Alg2Guess::ForcedCorrect { target: hook_target(dist, &a.target)? };
    }
    Ok(cfg)
}

fn tradeoff(g: &GlobalOpts, a: &TradeoffArgs) -> Res<Value> {
    let dist = load_explicit(&a.input)?;
    let backend = parse_backend(&a.backend)?;
    let n = dist.dim();
    let cfg = alg3_config(n, a, &dist, g.seed)?;
    let opt = try_opt(&dist).map(|o| o.opt);
    if a.weak_only {
        let spec = OracleSpec::new(dist.clone(), backend, g.seed);
        let (rep, traces) = alg3_weak_learner(&spec, &cfg)?;
        let chosen = traces.iter().find(|t| t.trial == rep.trial);
        return Ok(json!({
            "config": cfg,
            "hypothesis": rep.hypothesis,
            "estimated_error": rep.estimated_error,
            "error": hypothesis_error(&rep.hypothesis, &dist)?,
            "weak_target": 0.5 - cfg.margin(n),
            "opt": opt,
            "trial": rep.trial,
            "produced": rep.produced,
            "qualified": rep.qualified,
            "degree": cfg.degree,
            "iterations": chosen.map(|t| t.iterations.len()),
            "iteration_bound": cfg.t,
            "budget": rep.budget.report(&backend, g.timings),
        }));
    }
    let boost = BoostConfig { max_rounds: a.max_rounds, seed: g.seed, ..BoostConfig::default() };
    let rep = tradeoff_learner(&dist, backend, &cfg, &boost)?;
    Ok(json!({
        "config": { "alg3": cfg, "boost": boost },
        "hypothesis": rep.hypothesis,
        "error": rep.error,
        "eps_used": rep.eps_used,
        "runs": rep.runs,
        "opt": opt,
        "target": opt.map(|o| a.alpha * o + a.eps),
        "degree": cfg.degree,
    }))
}

fn boost(g: &GlobalOpts, a: &BoostArgs) -> Res<Value> {
    let dist = load_explicit(&a.input)?;
    let n = dist.dim();
    let weak: Box<dyn WeakLearner> = match a.weak {
        WeakKind::OptDisjunction => Box::new(OptimalDisjunctionLearner),
        WeakKind::Constant0 => Box::new(ConstantLearner(false)),
        WeakKind::Constant1 => Box::new(ConstantLearner(true)),
        WeakKind::Alg1 => {
            let mut cfg = Alg1Config::new(n, a.weak_epsilon)?;
            cfg.repeats = a.weak_repeats;
            Box::new(Alg1Weak { cfg })
        }
        WeakKind::Alg3 => {
            let mut cfg = Alg3Config::new(n, a.weak_alpha, a.weak_epsilon, Alg3Mode::Relaxed)?;
            cfg.trials = 8;
            Box::new(Alg3Weak { cfg, backend: Backend::Exact, n })
        }
    };
    // Learners without their own guarantee default to (1/4, 1/10).
    let (pa, pg) = weak.params();
    let alpha = a.alpha.unwrap_or(if pa > 0.0 { pa } else { 0.25 });
    let gamma = a.gamma.unwrap_or(if pg > 0.0 { pg } else { 0.1 });
    let cfg = BoostConfig { max_rounds: a.max_rounds, retries: a.retries, seed: g.seed, ..BoostConfig::default() };
    let config = json!({ "weak": weak.name(), "alpha": alpha, "gamma": gamma, "epsilon": a.eps, "boost": cfg });
    let opt = try_opt(&dist).map(|o| o.opt);
    let v = match a.eps {
        None => {
            let rep = aboost(weak.as_ref(), &dist, alpha, gamma, &cfg)?;
            json!({
                "config": config,
                "hypothesis": rep.hypothesis,
                "error": rep.error,
                "best_round": rep.best_round,
                "weak_calls": rep.weak_calls,
                "rounds": rep.rounds,
                "stopped_early": rep.stopped_early,
                "opt": opt,
            })
        }
        Some(eps) => {
            let rep = aboost_di(weak.as_ref(), &dist, alpha, gamma, eps, &cfg)?;
            json!({
                "config": config,
                "hypothesis": rep.hypothesis,
                "error": rep.error,
                "stages": rep.stages,
                "weak_calls": rep.weak_calls,
                "opt": opt,
            })
        }
    };
    Ok(v)
}

fn csq_weak(g: &GlobalOpts, a: &CsqArgs) -> Res<Value> {
    let dist = load_explicit(&a.input)?;
    let backend = parse_backend(&a.backend)?;
    let n = dist.dim();
    let mut cfg = CsqConfig::new(n, a.eps)?;
    cfg.seed = g.seed;
    if let Some(d) = a.degree {
        cfg.degree = d.min(n);
    }
    cfg.constraints = match a.constraint_mode {
        ConstraintKind::Enumerate => ConstraintMode::Enumerate,
        ConstraintKind::SupportRandom => ConstraintMode::SupportRandom { random: a.random_points },
    };
    let extra = dist.marginal_points();
    let oracle = SqOracle::new(Arc::new(dist.clone()), backend, g.seed);
    let (h, rep) = csq_weak_learner(&CsqView(&oracle), n, &cfg, &extra)?;
    let budget = oracle.budget();
    Ok(json!({
        "config": cfg,
        "hypothesis": h,
        "report": rep,
        "error": hypothesis_error(&h, &dist)?,
        "weak_target": 0.5 - cfg.kappa * cfg.eps,
        "opt": try_opt(&dist).map(|o| o.opt),
        "degree": rep.degree,
        "budget": budget.report(&backend, g.timings),
        "stat_queries": budget.stat_queries,
        "cstat_queries": budget.cstat_queries,
    }))
}

/// log2 of 2^(n^(1/3) log2(1/eps)), the repetition count the analysis asks for.
fn theoretical_log2_repeats(n: usize, eps: f64) -> f64 {
    (n as f64).cbrt() * (1.0 / eps).log2()
}

fn bench(g: &GlobalOpts, a: &BenchArgs) -> Res<Value> {
    let mut rows = Vec::new();
    for &n in &a.n {
        let a1 = Alg1Config::new(n, a.eps)?;
        let a2 = Alg2Config::new(n, a.eps)?;
        let a3 = Alg3Config::new(n, 4.0, a.eps, Alg3Mode::Relaxed).ok();
        let csq = CsqConfig::new(n, a.eps.min(0.49))?;
        let mut row = json!({
            "n": n,
            "alg1": { "r": a1.r, "t": a1.t, "degree": a1.degree, "sample_size": a1.sample_size,
                      "vc_sample_size": vc_sample_size(n, a.eps / 20.0, 64.0)?,
                      "repeats": a1.repeats, "theoretical_log2_repeats": theoretical_log2_repeats(n, a.eps) },
            "alg2": { "r": a2.r, "t": a2.t, "degree": a2.degree },
            "alg3_alpha4": a3.map(|c| json!({ "r": c.r, "t": c.t, "degree": c.degree })),
            "csq": { "degree": csq.degree },
        });
        if a.run && n <= 16 {
            let s: Vec<usize> = (0..n.min(3)).collect();
            let target = MonotoneDisjunction::new(n, &s)?;
            let marg = MarginalSpec::WeightBand { lo: 0, hi: n, support_size: Some(64) };
            let dist = gen_planted(n, &target, &marg, 0.05, g.seed)?;
            let mut cfg = a2.clone();
            cfg.seed = g.seed;
            cfg.guess = Alg2Guess::ForcedCorrect { target };
            let spec = OracleSpec::new(dist.clone(), Backend::Exact, g.seed);
            let start = Instant::now();
            let (rep, traces) = alg2_learner(&spec, &cfg)?;
            let mut run = json!({
                "error": hypothesis_error(&rep.hypothesis, &dist)?,
                "opt": try_opt(&dist).map(|o| o.opt),
                "iterations": traces.first().map(|t| t.iterations.len()),
                "queries": rep.budget.queries,
                "min_tolerance": rep.budget.min_tolerance,
            });
            if g.timings {
                run["wall_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
            }
            row["alg2_run"] = run;
        }
        rows.push(row);
    }
    Ok(json!({ "epsilon": a.eps, "rows": rows }))
}

fn suite_criteria(suite: &str) -> Option<Vec<usize>> {
    let ids = match suite {
        "all" => (1..=acceptance::CRITERIA).collect(),
        "approx" => vec![1, 2],
        "l1" => vec![3],
        "sample" => vec![4],
        "sq" => vec![5, 6, 7],
        "tradeoff" => vec![8],
        "csq" => vec![9],
        "boost" => vec![10],
        "reduction" => vec![11],
        "budget" => vec![12],
        _ => return None,
    };
    Some(ids)
}

fn accept(g: &GlobalOpts, a: &AcceptArgs) -> Res<u8> {
    let ids = match &a.criteria {
        Some(ids) => ids.clone(),
        None => suite_criteria(&a.suite).ok_or_else(|| {
            Failure::usage(format!(
                "unknown suite `{}` (all, approx, l1, sample, sq, tradeoff, csq, boost, reduction, budget)",
                a.suite
            ))
        })?,
    };
    if let Some(bad) = ids.iter().find(|&&i| i == 0 || i > acceptance::CRITERIA) {
        return Err(Failure::usage(format!("no criterion {bad}; valid are 1..={}", acceptance::CRITERIA)));
    }
    let mut text = String::new();
    let mut failed = 0;
    for id in ids {
        let mut res = acceptance::run(id);
        if !g.timings {
            res.elapsed_ms = 0;
        }
        let line = if g.timings {
            res.line()
        } else {
            format!("[{}] criterion {:>2} {}: {}", if res.passed { "PASS" } else { "FAIL" }, id, res.title, res.detail)
        };
        if g.out.is_none() {
            println!("{line}");
        }
        text.push_str(&line);
        text.push('\n');
        failed += usize::from(!res.passed);
    }
    if g.out.is_some() {
        write_text(g, &text)?;
    }
    Ok(if failed > 0 { EXIT_ACCEPTANCE } else { 0 })
}
