//! Bipartite variable/clause graph with signed edges.
//!
//! Edges are numbered clause by clause, so the edges of clause `a` form the
//! contiguous range [`FactorGraph::clause_edges`]. A variable repeated inside
//! one clause contributes one edge per occurrence (parallel edges).

use std::ops::Range;

use crate::formula::{ClauseId, CnfFormula, Var};

const UNSEEN: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct FactorGraph {
    n: usize,
    alive: Vec<bool>,
    clause_ids: Vec<ClauseId>,
    clause_start: Vec<usize>,
    edge_var: Vec<Var>,
    edge_positive: Vec<bool>,
    edge_clause: Vec<u32>,
    var_start: Vec<usize>,
    var_edges: Vec<u32>,
    /// `var_negative[i]` is the polarity of edge `var_edges[i]`, negated.
    var_negative: Vec<bool>,
}

impl FactorGraph {
    pub fn build(f: &CnfFormula) -> Self {
        let n = f.n();
        let mut alive = vec![false; n + 1];
        for x in f.alive_vars() {
            alive[x as usize] = true;
        }
        let mut clause_ids = Vec::with_capacity(f.num_clauses());
        let mut clause_start = Vec::with_capacity(f.num_clauses() + 1);
        let num_edges = f.num_literals();
        let mut edge_var = Vec::with_capacity(num_edges);
        let mut edge_positive = Vec::with_capacity(num_edges);
        let mut edge_clause = Vec::with_capacity(num_edges);
        let mut degree = vec![0usize; n + 2];
        clause_start.push(0);
        for (a, clause) in f.clauses().iter().enumerate() {
            clause_ids.push(clause.id);
            for lit in &clause.literals {
                edge_var.push(lit.var);
                edge_positive.push(lit.positive);
                edge_clause.push(a as u32);
                degree[lit.var as usize] += 1;
            }
            clause_start.push(edge_var.len());
        }
        let mut var_start = vec![0usize; n + 2];
        for x in 1..=n {
            var_start[x + 1] = var_start[x] + degree[x];
        }
        let mut fill = var_start.clone();
        let mut var_edges = vec![0u32; num_edges];
        for (e, &x) in edge_var.iter().enumerate() {
            var_edges[fill[x as usize]] = e as u32;
            fill[x as usize] += 1;
        }
        let var_negative = var_edges.iter().map(|&e| !edge_positive[e as usize]).collect();
        FactorGraph {
            n,
            alive,
            clause_ids,
            clause_start,
            edge_var,
            edge_positive,
            edge_clause,
            var_start,
            var_edges,
            var_negative,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.clause_ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    pub fn is_alive(&self, x: Var) -> bool {
        self.alive.get(x as usize).copied().unwrap_or(false)
    }

    pub fn alive_vars(&self) -> impl Iterator<Item = Var> + '_ {
        (1..=self.n as Var).filter(move |&x| self.alive[x as usize])
    }

    /// Stable id of the clause at local index `a`.
    pub fn clause_id(&self, a: usize) -> ClauseId {
        self.clause_ids[a]
    }

    pub fn clause_edges(&self, a: usize) -> Range<usize> {
        self.clause_start[a]..self.clause_start[a + 1]
    }

    pub fn clause_len(&self, a: usize) -> usize {
        self.clause_start[a + 1] - self.clause_start[a]
    }

    /// Edge ids incident to `x`, in increasing order.
    pub fn var_edges(&self, x: Var) -> &[u32] {
        let x = x as usize;
        if x > self.n {
            return &[];
        }
        &self.var_edges[self.var_start[x]..self.var_start[x + 1]]
    }

    /// Polarity flags aligned with [`FactorGraph::var_edges`]: `true` for a
    /// negative occurrence.
    pub fn var_negative(&self, x: Var) -> &[bool] {
        let x = x as usize;
        if x > self.n {
            return &[];
        }
        &self.var_negative[self.var_start[x]..self.var_start[x + 1]]
    }

    pub fn degree(&self, x: Var) -> usize {
        self.var_edges(x).len()
    }

    pub fn edge_var(&self, e: usize) -> Var {
        self.edge_var[e]
    }

    pub fn edge_positive(&self, e: usize) -> bool {
        self.edge_positive[e]
    }

    pub fn edge_clause(&self, e: usize) -> usize {
        self.edge_clause[e] as usize
    }

    /// `N(x)` as `(clause index, sign)` pairs.
    pub fn var_adj(&self, x: Var) -> impl Iterator<Item = (usize, i8)> + '_ {
        self.var_edges(x).iter().map(move |&e| {
            let e = e as usize;
            (self.edge_clause(e), sign(self.edge_positive[e]))
        })
    }

    /// `N(a)` as `(variable, sign)` pairs.
    pub fn clause_adj(&self, a: usize) -> impl Iterator<Item = (Var, i8)> + '_ {
        self.clause_edges(a)
            .map(move |e| (self.edge_var[e], sign(self.edge_positive[e])))
    }

    /// Breadth-first layers around `x`, stopping after variables at depth
    /// `max_var_depth` (graph distance `2 * max_var_depth`). A clause at
    /// graph distance `2d + 1` has depth `d`.
    pub fn layers(&self, x: Var, max_var_depth: u32) -> Layers {
        let mut var_depth = vec![UNSEEN; self.n + 1];
        let mut clause_depth = vec![UNSEEN; self.num_clauses()];
        let mut vars: Vec<Vec<Var>> = vec![vec![x]];
        let mut clauses: Vec<Vec<usize>> = Vec::new();
        var_depth[x as usize] = 0;
        let mut complete = true;
        let mut h = 0u32;
        loop {
            let mut next_clauses = Vec::new();
            for &y in &vars[h as usize] {
                for &e in self.var_edges(y) {
                    let a = self.edge_clause(e as usize);
                    if clause_depth[a] == UNSEEN {
                        clause_depth[a] = h;
                        next_clauses.push(a);
                    }
                }
            }
            if next_clauses.is_empty() {
                break;
            }
            if h == max_var_depth {
                complete = false;
                // clauses at depth h lie outside the requested radius
                for &a in &next_clauses {
                    clause_depth[a] = UNSEEN;
                }
                break;
            }
            let mut next_vars = Vec::new();
            for &a in &next_clauses {
                for e in self.clause_edges(a) {
                    let z = self.edge_var[e];
                    if var_depth[z as usize] == UNSEEN {
                        var_depth[z as usize] = h + 1;
                        next_vars.push(z);
                    }
                }
            }
            clauses.push(next_clauses);
            vars.push(next_vars);
            h += 1;
        }
        Layers {
            var_depth,
            clause_depth,
            vars,
            clauses,
            complete,
        }
    }

    /// Induced sub-formula of all vertices within distance `2 * radius` of `x`.
    pub fn ball(&self, x: Var, radius: u32) -> BallSubformula {
        let layers = self.layers(x, radius);
        let vars: Vec<Var> = layers.vars.iter().flatten().copied().collect();
        let clauses: Vec<usize> = layers.clauses.iter().flatten().copied().collect();
        let boundary_vars = if layers.vars.len() as u32 == radius + 1 {
            layers.vars[radius as usize].clone()
        } else {
            Vec::new()
        };
        let num_edges = clauses.iter().map(|&a| self.clause_len(a)).sum();
        let clause_ids = clauses.iter().map(|&a| self.clause_ids[a]).collect();
        BallSubformula {
            center: x,
            radius,
            vars,
            clauses,
            clause_ids,
            boundary_vars,
            num_edges,
        }
    }
}

fn sign(positive: bool) -> i8 {
    if positive {
        1
    } else {
        -1
    }
}

/// BFS layers produced by [`FactorGraph::layers`].
#[derive(Clone, Debug)]
pub struct Layers {
    /// Depth per variable, `u32::MAX` if unreached.
    pub var_depth: Vec<u32>,
    /// Depth per clause index, `u32::MAX` if unreached.
    pub clause_depth: Vec<u32>,
    pub vars: Vec<Vec<Var>>,
    pub clauses: Vec<Vec<usize>>,
    /// The search exhausted the connected component.
    pub complete: bool,
}

impl Layers {
    pub fn max_var_depth(&self) -> u32 {
        self.vars.len() as u32 - 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BallSubformula {
    pub center: Var,
    pub radius: u32,
    pub vars: Vec<Var>,
    /// Local clause indices into the graph.
    pub clauses: Vec<usize>,
    pub clause_ids: Vec<ClauseId>,
    /// Variables at distance exactly `2 * radius`.
    pub boundary_vars: Vec<Var>,
    /// Edge count of the induced subgraph, parallel edges included.
    pub num_edges: usize,
}

impl BallSubformula {
    /// The ball is connected by construction, so it is a tree iff it has
    /// one edge fewer than vertices.
    pub fn is_tree(&self) -> bool {
        self.num_edges + 1 == self.vars.len() + self.clauses.len()
    }

    pub fn to_formula(&self, f: &CnfFormula) -> CnfFormula {
        f.restrict(&self.vars, &self.clause_ids)
    }
}
