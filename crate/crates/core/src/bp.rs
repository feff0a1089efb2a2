//! The belief propagation operator for k-SAT and the BP marginals.
//!
//! Each variable-to-clause message is stored as the probability that the
//! variable takes the value *violating* its literal in that clause,
//! `v = mu_{x->a}((1 - sign(x,a)) / 2)`. The complementary component is
//! `1 - v`, so the pair always sums to exactly one, and negating every
//! occurrence of a variable leaves every stored value bit-for-bit unchanged.
//!
//! Clause-to-variable messages follow directly: the satisfying component is
//! 1, the violating component is `1 - prod v` over the other members of the
//! clause. Variable-side products are kept in a guarded form (exact zero
//! count plus a rescaled mantissa) so the one-half fallback for a zero
//! denominator fires on true zeros only, never on underflow.
//!
//! Updates are synchronous: a clause pass reads the previous iterate and
//! writes every clause message, then a variable pass rebuilds every variable
//! message from those.

use std::io::Write;

use crate::error::Result;
use crate::factor_graph::FactorGraph;
use crate::formula::Var;

/// When to stop iterating the BP operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    /// Exactly `omega` applications of the operator.
    FixedOmega,
    /// Until the largest message change is at most `tolerance`, or
    /// `max_iter` applications.
    FixedPoint { tolerance: f64, max_iter: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpSettings {
    pub omega: usize,
    pub stop: StopRule,
}

impl BpSettings {
    pub fn fixed(omega: usize) -> Self {
        BpSettings {
            omega,
            stop: StopRule::FixedOmega,
        }
    }

    pub fn fixed_point(tolerance: f64, max_iter: usize) -> Self {
        assert!(tolerance > 0.0, "fixed-point tolerance must be positive");
        BpSettings {
            omega: max_iter,
            stop: StopRule::FixedPoint {
                tolerance,
                max_iter,
            },
        }
    }

    /// `10 * ceil(ln n)` iterations.
    pub fn default_omega(n: usize) -> usize {
        10 * (n.max(2) as f64).ln().ceil() as usize
    }

    pub fn default_for(n: usize) -> Self {
        Self::fixed(Self::default_omega(n))
    }

    /// Tolerance `1e-7`, at most `10 * default_omega(n)` iterations.
    pub fn default_fixed_point(n: usize) -> Self {
        Self::fixed_point(1e-7, 10 * Self::default_omega(n))
    }
}

/// One BP iterate: a message per edge of the factor graph.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageState {
    violation: Vec<f64>,
    iteration: usize,
}

impl MessageState {
    /// All messages one half.
    pub fn init(g: &FactorGraph) -> Self {
        MessageState {
            violation: vec![0.5; g.num_edges()],
            iteration: 0,
        }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn len(&self) -> usize {
        self.violation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violation.is_empty()
    }

    /// `mu_{x->a}` of the value violating the literal on edge `e`.
    pub fn violation(&self, e: usize) -> f64 {
        self.violation[e]
    }

    /// `mu_{x->a}(1)` for edge `e`.
    pub fn mu_true(&self, g: &FactorGraph, e: usize) -> f64 {
        if g.edge_positive(e) {
            1.0 - self.violation[e]
        } else {
            self.violation[e]
        }
    }

    /// `(mu_{x->a}(0), mu_{x->a}(1))` for edge `e`.
    pub fn pair(&self, g: &FactorGraph, e: usize) -> (f64, f64) {
        let v = self.violation[e];
        if g.edge_positive(e) {
            (v, 1.0 - v)
        } else {
            (1.0 - v, v)
        }
    }

    /// Writes `edge,var,clause,mu_true` rows.
    pub fn write_csv<W: Write>(&self, g: &FactorGraph, mut out: W) -> Result<()> {
        writeln!(out, "edge,var,clause,mu")?;
        for e in 0..self.violation.len() {
            writeln!(
                out,
                "{},{},{},{}",
                e,
                g.edge_var(e),
                g.clause_id(g.edge_clause(e)),
                self.mu_true(g, e)
            )?;
        }
        Ok(())
    }
}

/// Outcome of [`run`].
#[derive(Clone, Debug)]
pub struct BpRun {
    pub state: MessageState,
    /// Operator applications the state corresponds to.
    pub iterations: usize,
    /// Largest message change in the last applied step.
    pub last_change: f64,
    /// Under `FixedPoint`: the tolerance was met. Under `FixedOmega`: an
    /// exact fixed point was hit early (remaining steps are identities).
    pub converged: bool,
}

/// Product of factors in `[0, 1]` with exact zeros counted separately and
/// the nonzero part stored as `mant * 2^exp`.
#[derive(Clone, Copy, Debug)]
struct Guarded {
    zeros: u32,
    mant: f64,
    exp: i32,
}

const RESCALE_BITS: i32 = 500;
const TINY: f64 = 3.054936363499605e-151; // 2^-500
const HUGE: f64 = 3.273390607896142e150; // 2^500

impl Guarded {
    const ONE: Guarded = Guarded {
        zeros: 0,
        mant: 1.0,
        exp: 0,
    };

    #[inline]
    fn split(q: f64) -> (f64, i32) {
        if q < TINY {
            (q * HUGE * HUGE, -2 * RESCALE_BITS)
        } else {
            (q, 0)
        }
    }

    #[inline]
    fn mul(&mut self, q: f64) {
        if q == 0.0 {
            self.zeros += 1;
            return;
        }
        let (qm, qe) = Self::split(q);
        self.mant *= qm;
        self.exp += qe;
        self.normalize();
    }

    #[inline]
    fn normalize(&mut self) {
        if self.mant < TINY {
            self.mant *= HUGE;
            self.exp -= RESCALE_BITS;
        } else if self.mant > HUGE {
            self.mant *= TINY;
            self.exp += RESCALE_BITS;
        }
    }

    /// The product with one factor `q` (previously multiplied in) removed.
    #[inline]
    fn without(self, q: f64) -> Guarded {
        if q == 0.0 {
            return Guarded {
                zeros: self.zeros - 1,
                ..self
            };
        }
        let (qm, qe) = Self::split(q);
        let mut out = Guarded {
            zeros: self.zeros,
            mant: self.mant / qm,
            exp: self.exp - qe,
        };
        out.normalize();
        out
    }
}

#[inline]
fn scale(m: f64, shift: i32) -> f64 {
    if shift == 0 {
        m
    } else if shift < -2200 {
        0.0
    } else {
        m * 2f64.powi(shift)
    }
}

/// `a / (a + b)`, or one half when both are exactly zero. Computed so that
/// `share(a, b) + share(b, a) == 1` holds exactly.
#[inline]
fn share(a: Guarded, b: Guarded) -> f64 {
    match (a.zeros > 0, b.zeros > 0) {
        (true, true) => 0.5,
        (true, false) => 0.0,
        (false, true) => 1.0,
        (false, false) => {
            let e = a.exp.max(b.exp);
            let av = scale(a.mant, a.exp - e);
            let bv = scale(b.mant, b.exp - e);
            let s = av + bv;
            if av <= bv {
                av / s
            } else {
                1.0 - bv / s
            }
        }
    }
}

/// [`share`] for marginals: the smaller side is taken as the exact
/// complement of the larger, so negating a variable maps its marginal to
/// `1 − μ` bit for bit. Costs resolution below `2^-53`.
#[inline]
fn marginal_share(a: Guarded, b: Guarded) -> f64 {
    let s = share(a, b);
    if s < 0.5 {
        1.0 - share(b, a)
    } else {
        s
    }
}

/// [`share`] for two positive normal numbers.
#[inline]
fn share_plain(a: f64, b: f64) -> f64 {
    let s = a + b;
    if a <= b {
        a / s
    } else {
        1.0 - b / s
    }
}

/// Writes `mu_{a->x}(violating value)` for every edge of one clause into
/// `out` (same length as `v`): one minus the product of the other members'
/// violation messages.
#[inline]
fn clause_messages(v: &[f64], out: &mut [f64]) {
    let mut prefix = 1.0;
    for (o, &x) in out.iter_mut().zip(v) {
        *o = prefix;
        prefix *= x;
    }
    let mut suffix = 1.0;
    for (o, &x) in out.iter_mut().zip(v).rev() {
        *o = 1.0 - *o * suffix;
        suffix *= x;
    }
}

/// Guarded products of the incoming clause messages of `x`, split by which
/// value of `x` they constrain: `[P0, P1]` with `P_z` the product of
/// `mu_{b->x}(z)` over all clauses `b` of `x`. Index 0 collects positive
/// occurrences (violated by `x = 0`).
#[inline]
fn incoming_products(g: &FactorGraph, u: &[f64], x: Var) -> [Guarded; 2] {
    let mut prod = [1.0f64; 2];
    let mut zeros = [0u32; 2];
    for &e in g.var_edges(x) {
        let e = e as usize;
        let side = !g.edge_positive(e) as usize;
        let q = u[e];
        let zero = q == 0.0;
        zeros[side] += zero as u32;
        prod[side] *= if zero { 1.0 } else { q };
    }
    if prod[0] >= TINY && prod[1] >= TINY {
        // no factor sequence can have left the normal range
        return [0, 1].map(|i| Guarded {
            zeros: zeros[i],
            mant: prod[i],
            exp: 0,
        });
    }
    let mut p = [Guarded::ONE; 2];
    for &e in g.var_edges(x) {
        let e = e as usize;
        p[!g.edge_positive(e) as usize].mul(u[e]);
    }
    p
}

/// Message buffers for one factor graph.
struct Engine<'g> {
    g: &'g FactorGraph,
    v: Vec<f64>,
    u: Vec<f64>,
}

#[derive(Clone, Copy, Default)]
struct Change {
    max_abs: f64,
    any: bool,
}

impl Change {
    fn merge(&mut self, other: Change) {
        self.max_abs = self.max_abs.max(other.max_abs);
        self.any |= other.any;
    }
}

impl<'g> Engine<'g> {
    fn new(g: &'g FactorGraph) -> Self {
        Engine {
            g,
            v: vec![0.5; g.num_edges()],
            u: vec![0.0; g.num_edges()],
        }
    }

    fn from_state(g: &'g FactorGraph, state: &MessageState) -> Self {
        Engine {
            g,
            v: state.violation.clone(),
            u: vec![0.0; g.num_edges()],
        }
    }

    #[inline]
    fn update_clause(&mut self, a: usize) {
        let r = self.g.clause_edges(a);
        clause_messages(&self.v[r.clone()], &mut self.u[r]);
    }

    #[inline]
    fn update_var(&mut self, x: Var) -> Change {
        let g = self.g;
        let edges = g.var_edges(x);
        let negative = g.var_negative(x);
        let mut prod = [1.0f64; 2];
        for (&e, &neg) in edges.iter().zip(negative) {
            prod[neg as usize] *= self.u[e as usize];
        }
        let mut change = Change::default();
        let mut write = |v: &mut f64, new: f64| {
            if new.to_bits() != v.to_bits() {
                change.any = true;
                change.max_abs = change.max_abs.max((new - *v).abs());
            }
            *v = new;
        };
        // a zero factor or a product near underflow takes the guarded path
        if prod[0] >= TINY && prod[1] >= TINY {
            // share(P_s / q, P_o) rescaled by q; q >= P_s keeps q P_o normal
            for (&e, &neg) in edges.iter().zip(negative) {
                let e = e as usize;
                let q = self.u[e];
                let (own, other) = if neg { (prod[1], prod[0]) } else { (prod[0], prod[1]) };
                write(&mut self.v[e], share_plain(own, q * other));
            }
        } else {
            let p = incoming_products(g, &self.u, x);
            for (&e, &neg) in edges.iter().zip(negative) {
                let e = e as usize;
                let side = neg as usize;
                let new = share(p[side].without(self.u[e]), p[1 - side]);
                write(&mut self.v[e], new);
            }
        }
        change
    }

    fn full_step(&mut self) -> Change {
        for a in 0..self.g.num_clauses() {
            self.update_clause(a);
        }
        let mut change = Change::default();
        for x in 1..=self.g.n() as Var {
            if self.g.is_alive(x) {
                change.merge(self.update_var(x));
            }
        }
        change
    }

    fn marginal_from_u(&self, x: Var) -> f64 {
        let [p0, p1] = incoming_products(self.g, &self.u, x);
        marginal_share(p1, p0)
    }
}

/// `(mu_{a->x}(0), mu_{a->x}(1))` for the clause and variable of edge `e`.
pub fn clause_to_var(state: &MessageState, g: &FactorGraph, e: usize) -> (f64, f64) {
    let r = g.clause_edges(g.edge_clause(e));
    let mut out = vec![0.0; r.len()];
    let offset = e - r.start;
    clause_messages(&state.violation[r], &mut out);
    let violated = out[offset];
    if g.edge_positive(e) {
        (violated, 1.0)
    } else {
        (1.0, violated)
    }
}

/// One synchronous application of the BP operator.
pub fn step(state: &MessageState, g: &FactorGraph) -> MessageState {
    let mut engine = Engine::from_state(g, state);
    engine.full_step();
    MessageState {
        violation: engine.v,
        iteration: state.iteration + 1,
    }
}

/// Iterates the BP operator from the all-one-half state.
pub fn run(g: &FactorGraph, settings: &BpSettings) -> BpRun {
    let mut engine = Engine::new(g);
    let (iterations, last_change, converged) = match settings.stop {
        StopRule::FixedOmega => {
            let mut last = 0.0;
            let mut fixed = false;
            for _ in 0..settings.omega {
                let c = engine.full_step();
                last = c.max_abs;
                if !c.any {
                    // exact fixed point: every further step is the identity
                    fixed = true;
                    break;
                }
            }
            (settings.omega, last, fixed)
        }
        StopRule::FixedPoint {
            tolerance,
            max_iter,
        } => {
            let mut last = 0.0;
            let mut done = 0;
            let mut converged = false;
            while done < max_iter {
                let c = engine.full_step();
                done += 1;
                last = c.max_abs;
                if c.max_abs <= tolerance {
                    converged = true;
                    break;
                }
            }
            (done, last, converged)
        }
    };
    BpRun {
        state: MessageState {
            violation: engine.v,
            iteration: iterations,
        },
        iterations,
        last_change,
        converged,
    }
}

/// BP marginal `mu_x`: one half for isolated variables and for a zero
/// denominator.
pub fn marginal(state: &MessageState, g: &FactorGraph, x: Var) -> f64 {
    let mut u = vec![0.0; g.num_edges()];
    let mut buf = Vec::new();
    for &e in g.var_edges(x) {
        let r = g.clause_edges(g.edge_clause(e as usize));
        buf.clear();
        buf.resize(r.len(), 0.0);
        clause_messages(&state.violation[r.clone()], &mut buf);
        u[r].copy_from_slice(&buf);
    }
    let [p0, p1] = incoming_products(g, &u, x);
    marginal_share(p1, p0)
}

/// Marginals of all alive variables, indexed by variable; `NaN` for
/// variables that are not alive.
pub fn marginals(state: &MessageState, g: &FactorGraph) -> Vec<f64> {
    let mut engine = Engine::from_state(g, state);
    for a in 0..g.num_clauses() {
        engine.update_clause(a);
    }
    let mut out = vec![f64::NAN; g.n() + 1];
    for x in g.alive_vars() {
        out[x as usize] = engine.marginal_from_u(x);
    }
    out
}

/// Runs BP and returns all marginals (see [`marginals`]).
pub fn all_marginals(g: &FactorGraph, settings: &BpSettings) -> Vec<f64> {
    let run = run(g, settings);
    marginals(&run.state, g)
}

/// The marginal of a single variable after `settings` iterations.
///
/// Under `FixedOmega` only the messages that can reach `x` within the
/// remaining iterations are updated, which gives the same bits as a full
/// run at a fraction of the cost on large graphs. `FixedPoint` has a global
/// stopping time and falls back to a full run.
pub fn target_marginal(g: &FactorGraph, settings: &BpSettings, x: Var) -> f64 {
    if settings.stop != StopRule::FixedOmega {
        let run = run(g, settings);
        return marginal(&run.state, g, x);
    }
    if g.degree(x) == 0 {
        return 0.5;
    }
    let omega = settings.omega as u32;
    let layers = g.layers(x, omega + 1);
    let depth = layers.max_var_depth();
    let mut engine = Engine::new(g);
    for level in 1..=omega {
        let lim = (omega - level + 1) as usize;
        for clauses in layers.clauses.iter().take(lim + 1) {
            for &a in clauses {
                engine.update_clause(a);
            }
        }
        let mut change = Change::default();
        for vars in layers.vars.iter().take(lim + 1) {
            for &y in vars {
                change.merge(engine.update_var(y));
            }
        }
        if layers.complete && lim as u32 >= depth && !change.any {
            break;
        }
    }
    for &a in &layers.clauses[0] {
        engine.update_clause(a);
    }
    engine.marginal_from_u(x)
}
