//! Exact ground truth for small formulas.
//!
//! Counting enumerates assignments of each connected component separately,
//! pruning a branch as soon as a clause has all of its variables set and is
//! violated. Totals of independent components multiply.

use std::io::Write;

use rand::Rng;

use crate::bp::{self, BpSettings};
use crate::error::{Error, Result};
use crate::factor_graph::FactorGraph;
use crate::formula::{Assignment, CnfFormula, Var};
use crate::seeds;

pub const DEFAULT_BUDGET: usize = 26;

/// Hard cap so every count fits in a `u64`.
const MAX_BUDGET: usize = 62;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountResult {
    /// `|S(Φ)|` over the alive variables.
    pub total: u64,
    /// Indexed by variable; zero for dead variables.
    pub per_var_true: Vec<u64>,
}

impl CountResult {
    pub fn is_satisfiable(&self) -> bool {
        self.total > 0
    }

    /// `M_x`, or `None` when the formula is unsatisfiable.
    pub fn marginal(&self, x: Var) -> Option<f64> {
        (self.total > 0).then(|| self.per_var_true[x as usize] as f64 / self.total as f64)
    }
}

fn check_budget(f: &CnfFormula, budget: usize) -> Result<()> {
    let alive = f.num_alive();
    let budget = budget.min(MAX_BUDGET);
    if alive > budget {
        return Err(Error::BudgetExceeded { alive, budget });
    }
    Ok(())
}

/// Counts satisfying assignments of the alive variables.
pub fn count(f: &CnfFormula, budget: usize) -> Result<CountResult> {
    check_budget(f, budget)?;
    let n = f.n();
    let mut per_var_true = vec![0u64; n + 1];
    if f.is_contradicted() {
        return Ok(CountResult {
            total: 0,
            per_var_true,
        });
    }

    let components = components(f);
    let mut totals = Vec::with_capacity(components.len());
    for comp in &components {
        let t = count_component(f, comp, &mut per_var_true);
        if t == 0 {
            return Ok(CountResult {
                total: 0,
                per_var_true: vec![0; n + 1],
            });
        }
        totals.push(t);
    }
    let total: u64 = totals.iter().product();
    for (comp, &t) in components.iter().zip(&totals) {
        let others = total / t;
        for &x in &comp.vars {
            per_var_true[x as usize] *= others;
        }
    }
    Ok(CountResult {
        total,
        per_var_true,
    })
}

struct Component {
    vars: Vec<Var>,
    clauses: Vec<usize>,
}

fn components(f: &CnfFormula) -> Vec<Component> {
    let n = f.n();
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for c in f.clauses() {
        if let Some(first) = c.literals.first() {
            let r0 = find(&mut parent, first.var as usize);
            for l in &c.literals[1..] {
                let r = find(&mut parent, l.var as usize);
                parent[r] = r0;
            }
        }
    }
    let mut index_of_root = vec![usize::MAX; n + 1];
    let mut out: Vec<Component> = Vec::new();
    for x in f.alive_vars() {
        let r = find(&mut parent, x as usize);
        if index_of_root[r] == usize::MAX {
            index_of_root[r] = out.len();
            out.push(Component {
                vars: Vec::new(),
                clauses: Vec::new(),
            });
        }
        out[index_of_root[r]].vars.push(x);
    }
    for (i, c) in f.clauses().iter().enumerate() {
        let r = find(&mut parent, c.literals[0].var as usize);
        out[index_of_root[r]].clauses.push(i);
    }
    out
}

/// Depth-first enumeration of one component. Adds per-variable true counts
/// (within the component) into `per_var_true` and returns the total.
fn count_component(f: &CnfFormula, comp: &Component, per_var_true: &mut [u64]) -> u64 {
    let d = comp.vars.len();
    let mut pos = vec![usize::MAX; f.n() + 1];
    for (i, &x) in comp.vars.iter().enumerate() {
        pos[x as usize] = i;
    }
    // clauses checked once their last variable (in enumeration order) is set
    let mut closing: Vec<Vec<Vec<(usize, bool)>>> = vec![Vec::new(); d];
    for &ci in &comp.clauses {
        let lits: Vec<(usize, bool)> = f.clauses()[ci]
            .literals
            .iter()
            .map(|l| (pos[l.var as usize], l.positive))
            .collect();
        let last = lits.iter().map(|&(p, _)| p).max().expect("nonempty clause");
        closing[last].push(lits);
    }
    let mut values = vec![false; d];
    let mut true_counts = vec![0u64; d];
    let total = enumerate(0, &closing, &mut values, &mut true_counts);
    for (i, &x) in comp.vars.iter().enumerate() {
        per_var_true[x as usize] = true_counts[i];
    }
    total
}

fn enumerate(
    i: usize,
    closing: &[Vec<Vec<(usize, bool)>>],
    values: &mut [bool],
    true_counts: &mut [u64],
) -> u64 {
    if i == values.len() {
        return 1;
    }
    let mut total = 0;
    for value in [false, true] {
        values[i] = value;
        let ok = closing[i]
            .iter()
            .all(|lits| lits.iter().any(|&(p, positive)| values[p] == positive));
        if ok {
            let c = enumerate(i + 1, closing, values, true_counts);
            if value {
                true_counts[i] += c;
            }
            total += c;
        }
    }
    total
}

/// Plain loop over all `2^|alive|` assignments.
pub fn count_brute_force(f: &CnfFormula, budget: usize) -> Result<CountResult> {
    check_budget(f, budget)?;
    let vars: Vec<Var> = f.alive_vars().collect();
    let mut pos = vec![usize::MAX; f.n() + 1];
    for (i, &x) in vars.iter().enumerate() {
        pos[x as usize] = i;
    }
    let mut total = 0u64;
    let mut per_var_true = vec![0u64; f.n() + 1];
    for mask in 0u64..(1u64 << vars.len()) {
        let sat = f.clauses().iter().all(|c| {
            c.literals
                .iter()
                .any(|l| ((mask >> pos[l.var as usize]) & 1 == 1) == l.positive)
        });
        if sat {
            total += 1;
            for (i, &x) in vars.iter().enumerate() {
                if (mask >> i) & 1 == 1 {
                    per_var_true[x as usize] += 1;
                }
            }
        }
    }
    Ok(CountResult {
        total,
        per_var_true,
    })
}

/// All satisfying assignments of the alive variables, as full assignments
/// that also carry the already-fixed values.
pub fn enumerate_solutions(f: &CnfFormula, budget: usize) -> Result<Vec<Assignment>> {
    check_budget(f, budget)?;
    let vars: Vec<Var> = f.alive_vars().collect();
    let base = f.partial_assignment();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << vars.len()) {
        let mut a = base.clone();
        for (i, &x) in vars.iter().enumerate() {
            a.set(x, (mask >> i) & 1 == 1);
        }
        if f.evaluate(&a)? {
            out.push(a);
        }
    }
    Ok(out)
}

/// `M_x` of the formula.
pub fn exact_marginal(f: &CnfFormula, x: Var, budget: usize) -> Result<f64> {
    if !f.is_alive(x) {
        return Err(Error::InvalidVariable(x));
    }
    count(f, budget)?.marginal(x).ok_or(Error::Unsatisfiable)
}

/// `M_x(Φ, ω)`: the exact marginal of `x` on the ball of radius `ω`.
pub fn local_marginal(f: &CnfFormula, x: Var, omega: u32, budget: usize) -> Result<f64> {
    if x == 0 || x as usize > f.n() || !f.is_alive(x) {
        return Err(Error::InvalidVariable(x));
    }
    let g = FactorGraph::build(f);
    let sub = g.ball(x, omega).to_formula(f);
    exact_marginal(&sub, x, budget)
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdealStep {
    pub t: usize,
    pub var: Var,
    /// `M_{x_t}(Φ_{t−1})`.
    pub marginal: f64,
    pub bit: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdealRun {
    pub assignment: Assignment,
    pub steps: Vec<IdealStep>,
}

/// Ideal decimation: assigns the alive variables in index order, each true with
/// its exact marginal in the current decimated formula.
///
/// The bit is drawn as an integer uniform below the current solution count,
/// so the sampling probability is exactly the rational marginal.
pub fn ideal_decimation(f: &CnfFormula, seed: u64, budget: usize) -> Result<IdealRun> {
    ideal_trajectory(f, seed, budget, |_, _, _| Ok(()))
}

fn ideal_trajectory<F>(f: &CnfFormula, seed: u64, budget: usize, mut visit: F) -> Result<IdealRun>
where
    F: FnMut(&CnfFormula, Var, f64) -> Result<()>,
{
    let first = count(f, budget)?;
    if first.total == 0 {
        return Err(Error::Unsatisfiable);
    }
    let mut rng = seeds::rng(seed);
    let mut current = f.clone();
    let mut steps = Vec::new();
    let order: Vec<Var> = f.alive_vars().collect();
    let mut counts = first;
    for x in order {
        assert!(counts.total > 0, "ideal decimation reached an unsatisfiable state");
        let m = counts.per_var_true[x as usize] as f64 / counts.total as f64;
        visit(&current, x, m)?;
        let bit = rng.random_range(0..counts.total) < counts.per_var_true[x as usize];
        current.assign(x, bit)?;
        steps.push(IdealStep {
            t: steps.len() + 1,
            var: x,
            marginal: m,
            bit,
        });
        counts = count(&current, budget)?;
    }
    let assignment = current.partial_assignment();
    debug_assert!(f.evaluate(&assignment).unwrap_or(false));
    Ok(IdealRun { assignment, steps })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRow {
    pub t: usize,
    pub var: Var,
    pub m_exact: f64,
    pub m_local: f64,
    pub mu_bp: f64,
    pub dev_local: f64,
    pub dev_bp: f64,
}

/// Along one ideal-decimation trajectory, compares the exact marginal with
/// the local marginal and the BP marginal with `ω` iterations.
pub fn hypothesis_probe(f: &CnfFormula, omega: usize, seed: u64, budget: usize) -> Result<Vec<ProbeRow>> {
    let settings = BpSettings::fixed(omega);
    let mut rows = Vec::new();
    ideal_trajectory(f, seed, budget, |current, x, m_exact| {
        let m_local = local_marginal(current, x, omega as u32, budget)?;
        let g = FactorGraph::build(current);
        let mu_bp = bp::target_marginal(&g, &settings, x);
        rows.push(ProbeRow {
            t: rows.len() + 1,
            var: x,
            m_exact,
            m_local,
            mu_bp,
            dev_local: (m_exact - m_local).abs(),
            dev_bp: (m_exact - mu_bp).abs(),
        });
        Ok(())
    })?;
    Ok(rows)
}

pub fn write_probe_csv<W: Write>(rows: &[ProbeRow], mut out: W) -> Result<()> {
    writeln!(out, "t,variable,M_exact,M_local,mu_bp,dev_local,dev_bp")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t, r.var, r.m_exact, r.m_local, r.mu_bp, r.dev_local, r.dev_bp
        )?;
    }
    Ok(())
}

/// Index of a satisfying assignment among `solutions`, comparing values of
/// the variables `1..=n`.
pub fn solution_index(solutions: &[Assignment], a: &Assignment) -> Option<usize> {
    solutions.iter().position(|s| s == a)
}
