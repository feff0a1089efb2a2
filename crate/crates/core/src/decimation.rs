//! BP guided decimation: the natural-order driver, the random-order and
//! max-bias variants, and the guarded driver that falls back to a fair coin
//! whenever the current formula is not balanced.
//!
//! Every trial uses two independent streams derived from its seed: one for
//! the variable order and one for value sampling. Each step draws exactly
//! one uniform `u` from the value stream and sets the variable to true iff
//! `u < p`, so changing the order policy or the branch taken never shifts
//! later draws.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::bp::{self, BpSettings};
use crate::error::{Error, Result};
use crate::factor_graph::FactorGraph;
use crate::formula::{Assignment, CnfFormula, GenParams, Var};
use crate::quasirandom::{is_balanced, DeltaSchedule};
use crate::seeds;
use crate::stats;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderPolicy {
    NaturalOrder,
    RandomPermutation,
    /// The alive variable whose marginal is furthest from one half; ties go
    /// to the lowest index.
    MaxBias,
    /// A fixed order of the alive variables.
    Explicit(Vec<Var>),
}

impl OrderPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            OrderPolicy::NaturalOrder => "natural",
            OrderPolicy::RandomPermutation => "random",
            OrderPolicy::MaxBias => "maxbias",
            OrderPolicy::Explicit(_) => "explicit",
        }
    }
}

impl fmt::Display for OrderPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OrderPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "natural" | "naturalorder" => Ok(OrderPolicy::NaturalOrder),
            "random" | "randompermutation" | "perm" => Ok(OrderPolicy::RandomPermutation),
            "maxbias" | "max-bias" => Ok(OrderPolicy::MaxBias),
            other => Err(Error::InvalidParameters(format!("unknown policy '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ContradictionMode {
    /// Stop at the first empty clause.
    #[default]
    Abort,
    /// Keep assigning so that every trace has all steps.
    Continue,
}

impl ContradictionMode {
    pub fn name(self) -> &'static str {
        match self {
            ContradictionMode::Abort => "abort",
            ContradictionMode::Continue => "continue",
        }
    }
}

impl FromStr for ContradictionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "abort" => Ok(ContradictionMode::Abort),
            "continue" => Ok(ContradictionMode::Continue),
            other => Err(Error::InvalidParameters(format!("unknown contradiction mode '{other}'"))),
        }
    }
}

/// Optional per-step bias counting. Step `t` counts the alive variables of
/// `Φ_{t−1}` with `|μ − ½| > δ_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiasTracking {
    pub schedule: DeltaSchedule,
    /// Steps to record; `None` records every step.
    pub steps: Option<Vec<usize>>,
}

impl BiasTracking {
    fn wants(&self, t: usize) -> bool {
        self.steps.as_ref().is_none_or(|s| s.contains(&t))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecimationConfig {
    pub bp: BpSettings,
    pub policy: OrderPolicy,
    pub contradiction: ContradictionMode,
    pub bias: Option<BiasTracking>,
}

impl DecimationConfig {
    pub fn new(bp: BpSettings, policy: OrderPolicy) -> Self {
        DecimationConfig {
            bp,
            policy,
            contradiction: ContradictionMode::Abort,
            bias: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Bp,
    Coin,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Bp => "bp",
            Branch::Coin => "coin",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub var: Var,
    /// Probability of `true` that was used.
    pub mu: f64,
    pub bit: bool,
    pub branch: Branch,
    pub biased_count: Option<usize>,
    /// Alive variables of `Φ_{t−1}`.
    pub alive: usize,
    /// Clause-length histogram of `Φ_{t−1}`.
    pub length_histogram: Vec<usize>,
}

impl StepRecord {
    pub fn n_clauses(&self) -> usize {
        self.length_histogram.iter().sum()
    }

    pub fn min_len(&self) -> Option<usize> {
        self.length_histogram.iter().position(|&c| c > 0)
    }

    pub fn max_len(&self) -> Option<usize> {
        self.length_histogram.iter().rposition(|&c| c > 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Satisfying,
    /// Aborted at the step that produced the first empty clause (0 if the
    /// input already had one).
    Contradiction(usize),
    /// All steps ran but an empty clause appeared on the way.
    CompleteButUnsat,
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self == Outcome::Satisfying
    }

    pub fn label(self) -> String {
        match self {
            Outcome::Satisfying => "satisfying".into(),
            Outcome::Contradiction(t) => format!("contradiction@{t}"),
            Outcome::CompleteButUnsat => "complete-unsat".into(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "satisfying" => Some(Outcome::Satisfying),
            "complete-unsat" => Some(Outcome::CompleteButUnsat),
            _ => s.strip_prefix("contradiction@")?.parse().ok().map(Outcome::Contradiction),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecimationTrace {
    pub steps: Vec<StepRecord>,
    pub outcome: Outcome,
    pub first_contradiction: Option<usize>,
}

impl DecimationTrace {
    /// SHA-256 over everything that depends on the random draws: variable,
    /// probability bits, value, branch, clause-length profile and outcome.
    /// Bias counts are diagnostics and do not enter the hash.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for s in &self.steps {
            h.update((s.t as u64).to_le_bytes());
            h.update(s.var.to_le_bytes());
            h.update(s.mu.to_bits().to_le_bytes());
            h.update([s.bit as u8, s.branch as u8]);
            h.update((s.alive as u64).to_le_bytes());
            h.update((s.length_histogram.len() as u64).to_le_bytes());
            for &c in &s.length_histogram {
                h.update((c as u64).to_le_bytes());
            }
        }
        h.update(self.outcome.label().as_bytes());
        hex(&h.finalize())
    }

    /// `t,var,mu,bit,branch,biased_count,n_clauses,min_len,max_len,outcome`;
    /// the outcome column is filled on the last row only.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,var,mu,bit,branch,biased_count,n_clauses,min_len,max_len,outcome")?;
        let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
        for (i, s) in self.steps.iter().enumerate() {
            let outcome = if i + 1 == self.steps.len() {
                self.outcome.label()
            } else {
                String::new()
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                s.t,
                s.var,
                s.mu,
                s.bit as u8,
                s.branch.name(),
                opt(s.biased_count),
                s.n_clauses(),
                opt(s.min_len()),
                opt(s.max_len()),
                outcome
            )?;
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecimationRun {
    /// Values of every variable; variables fixed before the run keep their
    /// values.
    pub assignment: Assignment,
    pub trace: DecimationTrace,
}

fn check_order(f: &CnfFormula, order: &[Var]) -> Result<()> {
    let mut seen = vec![false; f.n() + 1];
    for &x in order {
        if x == 0 || x as usize > f.n() || !f.is_alive(x) || seen[x as usize] {
            return Err(Error::InvalidInput(format!(
                "order is not a permutation of the alive variables (x{x})"
            )));
        }
        seen[x as usize] = true;
    }
    if order.len() != f.num_alive() {
        return Err(Error::InvalidInput(format!(
            "order has {} variables, formula has {} alive",
            order.len(),
            f.num_alive()
        )));
    }
    Ok(())
}

/// The permutation `RandomPermutation` uses for this formula and seed.
pub fn random_order(f: &CnfFormula, seed: u64) -> Vec<Var> {
    let mut order: Vec<Var> = f.alive_vars().collect();
    order.shuffle(&mut seeds::rng(seeds::derive(seed, &[seeds::STREAM_ORDER])));
    order
}

fn bits_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    seeds::rng(seeds::derive(seed, &[seeds::STREAM_BITS]))
}

/// How a step picks its probability.
enum Guard<'a> {
    None(Option<&'a BiasTracking>),
    Balanced(&'a DeltaSchedule),
}

fn drive(
    f: &CnfFormula,
    bp_settings: &BpSettings,
    order: Option<Vec<Var>>,
    guard: Guard<'_>,
    contradiction: ContradictionMode,
    seed: u64,
) -> DecimationRun {
    let mut rng = bits_rng(seed);
    let mut current = f.clone();
    let mut steps = Vec::new();
    let mut first_contradiction = f.is_contradicted().then_some(0);
    let total = f.num_alive();
    let n = f.n();

    let aborted = |fc: Option<usize>| contradiction == ContradictionMode::Abort && fc.is_some();
    while steps.len() < total && !aborted(first_contradiction) {
        let t = steps.len() + 1;
        let g = FactorGraph::build(&current);
        let tracking = match guard {
            Guard::None(b) => b.filter(|b| b.wants(t)).map(|b| &b.schedule),
            Guard::Balanced(s) => Some(s),
        };
        let need_all = tracking.is_some() || order.is_none();
        let all = need_all.then(|| bp::all_marginals(&g, bp_settings));
        let x = match &order {
            Some(o) => o[t - 1],
            None => max_bias_var(&current, all.as_ref().expect("computed")),
        };
        let mu = match &all {
            Some(m) => m[x as usize],
            None => bp::target_marginal(&g, bp_settings, x),
        };
        // time index of the formula after this step, in the input's numbering
        let time = current.t() + 1;
        let biased_count = tracking.map(|sched| {
            let delta = sched.delta(time);
            let m = all.as_ref().expect("computed");
            current
                .alive_vars()
                .filter(|&y| (m[y as usize] - 0.5).abs() > delta)
                .count()
        });
        let branch = match guard {
            Guard::Balanced(sched) => {
                let delta = sched.delta(time);
                if is_balanced(biased_count.expect("computed"), delta, n - time) {
                    Branch::Bp
                } else {
                    Branch::Coin
                }
            }
            Guard::None(_) => Branch::Bp,
        };
        let p = match branch {
            Branch::Bp => mu,
            Branch::Coin => 0.5,
        };
        let u: f64 = rng.random();
        let bit = u < p;
        steps.push(StepRecord {
            t,
            var: x,
            mu: p,
            bit,
            branch,
            biased_count,
            alive: current.num_alive(),
            length_histogram: current.length_histogram(),
        });
        current.assign(x, bit).expect("alive variable");
        if current.is_contradicted() && first_contradiction.is_none() {
            first_contradiction = Some(t);
        }
    }

    let outcome = match first_contradiction {
        None => Outcome::Satisfying,
        Some(t) if contradiction == ContradictionMode::Abort => Outcome::Contradiction(t),
        Some(_) => Outcome::CompleteButUnsat,
    };
    let assignment = current.partial_assignment();
    DecimationRun {
        assignment,
        trace: DecimationTrace {
            steps,
            outcome,
            first_contradiction,
        },
    }
}

fn max_bias_var(f: &CnfFormula, marginals: &[f64]) -> Var {
    let mut best: Option<(Var, f64)> = None;
    for x in f.alive_vars() {
        let b = (marginals[x as usize] - 0.5).abs();
        if best.is_none_or(|(_, bb)| b > bb) {
            best = Some((x, b));
        }
    }
    best.expect("an alive variable").0
}

/// BP guided decimation of every alive variable in the order given by the
/// policy. Fails only for an `Explicit` order that is not a permutation of
/// the alive variables.
pub fn bpdec(f: &CnfFormula, cfg: &DecimationConfig, seed: u64) -> Result<DecimationRun> {
    let order = match &cfg.policy {
        OrderPolicy::NaturalOrder => Some(f.alive_vars().collect()),
        OrderPolicy::RandomPermutation => Some(random_order(f, seed)),
        OrderPolicy::MaxBias => None,
        OrderPolicy::Explicit(o) => {
            check_order(f, o)?;
            Some(o.clone())
        }
    };
    Ok(drive(
        f,
        &cfg.bp,
        order,
        Guard::None(cfg.bias.as_ref()),
        cfg.contradiction,
        seed,
    ))
}

/// Guarded decimation along `order`: step `t` uses the BP marginal when
/// `Φ_{t−1}` has at most `δ_t (n − t)` variables with `|μ − ½| > δ_t`, and a
/// fair coin otherwise.
pub fn bpdec_guarded(
    f: &CnfFormula,
    order: &[Var],
    sched: &DeltaSchedule,
    settings: &BpSettings,
    contradiction: ContradictionMode,
    seed: u64,
) -> Result<DecimationRun> {
    check_order(f, order)?;
    Ok(drive(
        f,
        settings,
        Some(order.to_vec()),
        Guard::Balanced(sched),
        contradiction,
        seed,
    ))
}

/// Where trial formulas come from.
#[derive(Clone, Debug, PartialEq)]
pub enum FormulaSource {
    Fixed(CnfFormula),
    /// A fresh formula per trial.
    Random(GenParams),
}

impl FormulaSource {
    pub fn formula(&self, trial_seed: u64) -> Result<CnfFormula> {
        match self {
            FormulaSource::Fixed(f) => Ok(f.clone()),
            FormulaSource::Random(p) => p.generate(seeds::derive(trial_seed, &[seeds::STREAM_FORMULA])),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuccessEstimate {
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SuccessEstimate {
    pub fn from_counts(successes: usize, trials: usize) -> Self {
        let (ci_low, ci_high) = stats::wilson_interval(successes, trials, stats::Z95);
        SuccessEstimate {
            trials,
            successes,
            rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
            ci_low,
            ci_high,
        }
    }

    /// Binomial standard error of the rate.
    pub fn std_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }
}

/// Seed of trial `i` under master seed `seed`.
pub fn trial_seed(seed: u64, i: usize) -> u64 {
    seeds::derive(seed, &[i as u64])
}

/// Runs `trials` independent trials in parallel; `trial` receives the
/// trial seed and reports success.
pub fn estimate_success_with<F>(trials: usize, seed: u64, trial: F) -> Result<SuccessEstimate>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidParameters("trials must be >= 1".into()));
    }
    let results = (0..trials)
        .into_par_iter()
        .map(|i| trial(trial_seed(seed, i)))
        .collect::<Result<Vec<bool>>>()?;
    let successes = results.iter().filter(|&&s| s).count();
    Ok(SuccessEstimate::from_counts(successes, trials))
}

/// Fraction of trials whose decimation ends in a satisfying assignment,
/// with a Wilson 95% interval.
pub fn estimate_success(
    source: &FormulaSource,
    cfg: &DecimationConfig,
    trials: usize,
    seed: u64,
) -> Result<SuccessEstimate> {
    estimate_success_with(trials, seed, |ts| {
        let f = source.formula(ts)?;
        let run = bpdec(&f, cfg, seeds::derive(ts, &[seeds::STREAM_ALGO]))?;
        Ok(run.trace.outcome.is_success())
    })
}
