//! Bias, balancedness and the structural conditions Q0 to Q4.
//!
//! `θ = 1 − t/n` is always passed explicitly: for a decimated formula read
//! from disk the number of assigned variables is known, but whether the
//! clause lengths should be judged against it is the caller's choice.
//! [`theta_of`] gives the usual value.

mod conditions;
mod cutnorm;

pub use conditions::{
    check_q0, check_q1, check_q2, check_q3, check_q4, write_reports_csv, ConditionReport,
    Measurement, Q0Thresholds, Q4Report, Q4Verdict,
};
pub use cutnorm::{
    cutnorm_exact, cutnorm_bound, cutnorm_lower_sampled, lambda_q, BoundMode, CutnormBound,
    LambdaOperator, LambdaWeight, EXACT_MAX_DIM, EXHAUSTIVE_MAX_DIM,
};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::bp::{self, BpSettings};
use crate::error::{Error, Result};
use crate::factor_graph::FactorGraph;
use crate::formula::{CnfFormula, Var};
use crate::seeds;

/// Default schedule constant `c`.
pub const DEFAULT_C: f64 = 0.2;

/// Bias threshold per decimation time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaSchedule {
    /// `δ_t = exp(−c (1 − t/n) k)` with horizon `T = (1 − r/2^k) n`.
    Exponential { c: f64, k: usize, n: usize, r: f64 },
    /// The same `δ` at every time; `f64::INFINITY` and `0.0` are allowed
    /// as sentinels.
    Constant(f64),
}

impl DeltaSchedule {
    pub fn exponential(c: f64, k: usize, n: usize, r: f64) -> Result<Self> {
        if !(c > 0.0) || k == 0 || n == 0 || !(r > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "schedule needs c > 0, k >= 1, n >= 1, r > 0 (got c={c}, k={k}, n={n}, r={r})"
            )));
        }
        Ok(DeltaSchedule::Exponential { c, k, n, r })
    }

    pub fn delta(&self, t: usize) -> f64 {
        match *self {
            DeltaSchedule::Exponential { c, k, n, .. } => {
                let theta = 1.0 - t as f64 / n as f64;
                (-c * theta * k as f64).exp()
            }
            DeltaSchedule::Constant(d) => d,
        }
    }

    /// `T`, or `None` for constant schedules.
    pub fn horizon(&self) -> Option<f64> {
        match *self {
            DeltaSchedule::Exponential { k, n, r, .. } => {
                Some((1.0 - r / 2f64.powi(k as i32)) * n as f64)
            }
            DeltaSchedule::Constant(_) => None,
        }
    }

    pub fn c(&self) -> Option<f64> {
        match *self {
            DeltaSchedule::Exponential { c, .. } => Some(c),
            DeltaSchedule::Constant(_) => None,
        }
    }
}

/// `θ = 1 − t/n` of a decimated formula.
pub fn theta_of(f: &CnfFormula) -> f64 {
    if f.n() == 0 {
        return 0.0;
    }
    1.0 - f.t() as f64 / f.n() as f64
}

/// Membership bitmap over variables `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarSet {
    members: Vec<bool>,
    len: usize,
}

impl VarSet {
    pub fn empty(n: usize) -> Self {
        VarSet {
            members: vec![false; n + 1],
            len: 0,
        }
    }

    pub fn from_vars(n: usize, vars: &[Var]) -> Self {
        let mut s = VarSet::empty(n);
        for &x in vars {
            s.insert(x);
        }
        s
    }

    pub fn insert(&mut self, x: Var) {
        if !self.members[x as usize] {
            self.members[x as usize] = true;
            self.len += 1;
        }
    }

    pub fn contains(&self, x: Var) -> bool {
        self.members.get(x as usize).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Var> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i as Var)
    }
}

/// Admissible clause lengths `[0.1 θ k, 10 θ k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LengthWindow {
    pub lo: f64,
    pub hi: f64,
}

impl LengthWindow {
    pub fn new(theta: f64, k: usize) -> Self {
        let tk = theta * k as f64;
        LengthWindow {
            lo: 0.1 * tk,
            hi: 10.0 * tk,
        }
    }

    pub fn contains(&self, len: usize) -> bool {
        let l = len as f64;
        self.lo <= l && l <= self.hi
    }
}

/// Number of distinct variables of clause `a` in `q`, ignoring `x`.
pub(crate) fn q_hits(g: &FactorGraph, a: usize, q: &VarSet, x: Option<Var>) -> usize {
    let mut seen: Vec<Var> = g
        .clause_adj(a)
        .map(|(y, _)| y)
        .filter(|&y| Some(y) != x && q.contains(y))
        .collect();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

/// Distinct clauses containing `x`, in index order.
pub(crate) fn clauses_of(g: &FactorGraph, x: Var) -> Vec<usize> {
    let mut out: Vec<usize> = g.var_edges(x).iter().map(|&e| g.edge_clause(e as usize)).collect();
    out.dedup();
    out
}

/// `N_{≤1}(x, Q)`: clauses containing `x` with at most one other variable
/// from `Q` and length inside `window`. Lengths count occurrences.
pub fn n_leq1(g: &FactorGraph, x: Var, q: &VarSet, window: LengthWindow) -> Vec<usize> {
    clauses_of(g, x)
        .into_iter()
        .filter(|&a| window.contains(g.clause_len(a)) && q_hits(g, a, q, Some(x)) <= 1)
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiasReport {
    pub t: usize,
    pub delta: f64,
    pub biased_vars: Vec<Var>,
    /// Number of unassigned variables, `n − t`.
    pub unassigned: usize,
    pub balanced: bool,
    /// BP marginals indexed by variable (NaN for assigned ones).
    pub marginals: Vec<f64>,
}

/// `|biased| ≤ δ · unassigned`, with an empty biased set always balanced so
/// that `δ = ∞` with nothing left to assign is not `∞ · 0`.
pub fn is_balanced(biased: usize, delta: f64, unassigned: usize) -> bool {
    biased == 0 || biased as f64 <= delta * unassigned as f64
}

/// Classifies precomputed marginals against `δ`.
pub fn classify(f: &CnfFormula, marginals: Vec<f64>, t: usize, delta: f64, unassigned: usize) -> BiasReport {
    let biased_vars: Vec<Var> = f
        .alive_vars()
        .filter(|&x| (marginals[x as usize] - 0.5).abs() > delta)
        .collect();
    BiasReport {
        t,
        delta,
        balanced: is_balanced(biased_vars.len(), delta, unassigned),
        biased_vars,
        unassigned,
        marginals,
    }
}

/// Runs BP on the decimated formula and compares every alive marginal with
/// `δ_t`, where `t` is the number of variables already assigned.
pub fn bias_report(f: &CnfFormula, settings: &BpSettings, sched: &DeltaSchedule) -> BiasReport {
    let t = f.t();
    let g = FactorGraph::build(f);
    let marginals = bp::all_marginals(&g, settings);
    classify(f, marginals, t, sched.delta(t), f.num_alive())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalancednessPoint {
    pub t: usize,
    pub delta: f64,
    pub balanced: usize,
    pub samples: usize,
    pub frequency: f64,
}

/// Estimates `Pr[(Φ, π, σ) is (δ_t, t)-balanced]` at each requested `t` by
/// sampling a uniform permutation and a uniform assignment per sample.
pub fn balancedness_probe(
    f: &CnfFormula,
    sched: &DeltaSchedule,
    settings: &BpSettings,
    times: &[usize],
    samples: usize,
    seed: u64,
) -> Result<Vec<BalancednessPoint>> {
    if samples == 0 {
        return Err(Error::InvalidParameters("samples must be >= 1".into()));
    }
    let free: Vec<Var> = f.alive_vars().collect();
    if let Some(&t) = times.iter().find(|&&t| t > free.len()) {
        return Err(Error::InvalidParameters(format!(
            "t={t} exceeds the {} unassigned variables",
            free.len()
        )));
    }
    let mut sorted: Vec<usize> = times.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let per_sample: Vec<Vec<bool>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds::rng(seeds::derive(seed, &[i as u64]));
            let mut order = free.clone();
            order.shuffle(&mut rng);
            let bits: Vec<bool> = order.iter().map(|_| rng.random_bool(0.5)).collect();
            let mut current = f.clone();
            let mut assigned = 0;
            let mut out = Vec::with_capacity(sorted.len());
            for &t in &sorted {
                while assigned < t {
                    current
                        .assign(order[assigned], bits[assigned])
                        .expect("alive variable");
                    assigned += 1;
                }
                out.push(bias_report(&current, settings, sched).balanced);
            }
            out
        })
        .collect();

    Ok(sorted
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let balanced = per_sample.iter().filter(|row| row[j]).count();
            BalancednessPoint {
                t,
                delta: sched.delta(f.t() + t),
                balanced,
                samples,
                frequency: balanced as f64 / samples as f64,
            }
        })
        .collect())
}
