//! Oracles shared by the integration tests. They use only the public
//! clause lists, never the library's own counting or BP code.

#![allow(dead_code)]

use std::collections::VecDeque;

use bpdec_core::formula::{CnfFormula, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Clauses as signed DIMACS integers.
pub fn int_clauses(f: &CnfFormula) -> Vec<Vec<i64>> {
    f.clauses()
        .iter()
        .map(|c| c.literals.iter().map(|l| l.to_dimacs()).collect())
        .collect()
}

fn satisfied(clauses: &[Vec<i64>], value: impl Fn(usize) -> bool) -> bool {
    clauses
        .iter()
        .all(|c| c.iter().any(|&l| value(l.unsigned_abs() as usize) == (l > 0)))
}

/// `(|S|, #solutions with x true)` by enumerating every assignment of the
/// alive variables.
pub fn brute_count(f: &CnfFormula) -> (u64, Vec<u64>) {
    let vars: Vec<Var> = f.alive_vars().collect();
    assert!(vars.len() <= 22, "brute force limited to 22 variables");
    let mut pos = vec![usize::MAX; f.n() + 1];
    for (i, &x) in vars.iter().enumerate() {
        pos[x as usize] = i;
    }
    let clauses = int_clauses(f);
    let mut total = 0;
    let mut per = vec![0u64; f.n() + 1];
    for mask in 0u64..(1 << vars.len()) {
        let value = |x: usize| mask >> pos[x] & 1 == 1;
        if satisfied(&clauses, value) {
            total += 1;
            for (i, &x) in vars.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    per[x as usize] += 1;
                }
            }
        }
    }
    (total, per)
}

/// Satisfying assignments of the alive variables, as bit masks in
/// `alive_vars` order.
pub fn brute_solutions(f: &CnfFormula) -> Vec<u64> {
    let vars: Vec<Var> = f.alive_vars().collect();
    let mut pos = vec![usize::MAX; f.n() + 1];
    for (i, &x) in vars.iter().enumerate() {
        pos[x as usize] = i;
    }
    let clauses = int_clauses(f);
    (0u64..(1 << vars.len()))
        .filter(|&mask| satisfied(&clauses, |x| mask >> pos[x] & 1 == 1))
        .collect()
}

/// Adjacency of the bipartite factor graph: vertices `0..n` are variables
/// `1..=n`, vertices `n..n+m` are clauses. Repeated occurrences give
/// parallel edges.
pub fn bipartite(f: &CnfFormula) -> Vec<Vec<usize>> {
    let n = f.n();
    let mut adj = vec![Vec::new(); n + f.num_clauses()];
    for (a, c) in f.clauses().iter().enumerate() {
        for l in &c.literals {
            let x = l.var as usize - 1;
            adj[x].push(n + a);
            adj[n + a].push(x);
        }
    }
    adj
}

/// Whether the factor graph contains a cycle (parallel edges count), by
/// iterative DFS that skips only the edge it arrived on.
pub fn has_cycle(f: &CnfFormula) -> bool {
    let adj = bipartite(f);
    let mut seen = vec![false; adj.len()];
    for s in 0..adj.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        // (vertex, parent, index of the parent edge used in adj[vertex])
        let mut stack = vec![(s, usize::MAX)];
        let mut parent_skipped = vec![false; adj.len()];
        while let Some((v, p)) = stack.pop() {
            for &w in &adj[v] {
                if w == p && !parent_skipped[v] {
                    parent_skipped[v] = true;
                    continue;
                }
                if seen[w] {
                    return true;
                }
                seen[w] = true;
                stack.push((w, v));
            }
        }
    }
    false
}

/// Largest variable-to-variable hop distance from `x` inside its component.
pub fn eccentricity(f: &CnfFormula, x: Var) -> u32 {
    let adj = bipartite(f);
    let mut dist = vec![u32::MAX; adj.len()];
    let start = x as usize - 1;
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut far = 0;
    while let Some(v) = queue.pop_front() {
        far = far.max(dist[v]);
        for &w in &adj[v] {
            if dist[w] == u32::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    far / 2
}

/// A formula whose factor graph is a tree rooted at `x1`: every new clause
/// contains one existing variable and fresh ones. Variable depth stays at
/// most `max_depth`; clause lengths are 1 to 3.
pub fn random_tree(seed: u64, max_vars: usize, max_depth: u32) -> CnfFormula {
    let mut r = rng(seed);
    let mut depth = vec![0u32];
    let mut clauses: Vec<Vec<i64>> = Vec::new();
    let target = r.random_range(1..=max_vars);
    let mut guard = 0;
    while depth.len() < target && guard < 1000 {
        guard += 1;
        let parent = r.random_range(0..depth.len());
        if depth[parent] >= max_depth {
            continue;
        }
        let fresh = r.random_range(1..=2usize).min(target - depth.len());
        let sign = |r: &mut ChaCha8Rng| if r.random_bool(0.5) { 1 } else { -1 };
        let mut clause = vec![sign(&mut r) * (parent as i64 + 1)];
        for _ in 0..fresh {
            depth.push(depth[parent] + 1);
            clause.push(sign(&mut r) * depth.len() as i64);
        }
        clauses.push(clause);
    }
    // a lone root gets a unit clause half of the time
    if clauses.is_empty() && r.random_bool(0.5) {
        clauses.push(vec![1]);
    }
    let refs: Vec<&[i64]> = clauses.iter().map(Vec::as_slice).collect();
    CnfFormula::from_ints(depth.len(), &refs).expect("valid clauses")
}

/// `(#solutions with x false, #solutions with x true)` on the component of
/// `x`, by integer dynamic programming over the tree rooted at `x`.
pub fn tree_counts(f: &CnfFormula, x: Var) -> (u128, u128) {
    let clauses = int_clauses(f);
    let mut var_clauses = vec![Vec::new(); f.n() + 1];
    for (a, c) in clauses.iter().enumerate() {
        for &l in c {
            var_clauses[l.unsigned_abs() as usize].push(a);
        }
    }
    fn var_counts(
        v: usize,
        from: Option<usize>,
        clauses: &[Vec<i64>],
        var_clauses: &[Vec<usize>],
    ) -> [u128; 2] {
        let mut out = [1u128, 1u128];
        for &a in &var_clauses[v] {
            if Some(a) == from {
                continue;
            }
            let lit = clauses[a].iter().find(|l| l.unsigned_abs() as usize == v).unwrap();
            let mut all = 1u128;
            let mut violating = 1u128;
            for &l in &clauses[a] {
                let w = l.unsigned_abs() as usize;
                if w == v {
                    continue;
                }
                let c = var_counts(w, Some(a), clauses, var_clauses);
                all *= c[0] + c[1];
                violating *= c[(l < 0) as usize];
            }
            for (b, slot) in out.iter_mut().enumerate() {
                let sat_by_v = (b == 1) == (*lit > 0);
                *slot *= if sat_by_v { all } else { all - violating };
            }
        }
        out
    }
    let c = var_counts(x as usize, None, &clauses, &var_clauses);
    (c[0], c[1])
}

/// Exact probability that two independent uniform proper `k`-clauses on `n`
/// variables share at least two variables.
pub fn pair_collision_probability(n: u64, k: u64) -> f64 {
    fn binom(n: u64, k: u64) -> f64 {
        if k > n {
            return 0.0;
        }
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }
    let total = binom(n, k);
    let share0 = binom(n - k, k);
    let share1 = k as f64 * binom(n - k, k - 1);
    1.0 - (share0 + share1) / total
}

/// Random small formulas: `n` in `1..=max_n`, up to `max_m` clauses of
/// length 1 to `max_len`, variables may repeat inside a clause.
pub fn arb_formula(
    max_n: usize,
    max_m: usize,
    max_len: usize,
) -> impl proptest::strategy::Strategy<Value = CnfFormula> {
    use proptest::prelude::*;
    (1..=max_n).prop_flat_map(move |n| {
        let lit = (1..=n as i64, any::<bool>()).prop_map(|(v, s)| if s { v } else { -v });
        proptest::collection::vec(proptest::collection::vec(lit, 1..=max_len), 0..=max_m).prop_map(
            move |clauses| {
                let refs: Vec<&[i64]> = clauses.iter().map(Vec::as_slice).collect();
                CnfFormula::from_ints(n, &refs).expect("literals in range")
            },
        )
    })
}

/// Random zero-diagonal `d × d` matrix with dyadic entries `k / 4`,
/// `|k| ≤ 8`, about half of them zero. Sums of such entries are exact.
pub fn dyadic_matrix(r: &mut ChaCha8Rng, d: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if i == j || r.random_bool(0.5) {
                        0.0
                    } else {
                        r.random_range(-8i32..=8) as f64 / 4.0
                    }
                })
                .collect()
        })
        .collect()
}

/// `max_ζ Σ_i |Σ_j m_ij ζ_j|` over all `ζ ∈ {±1}^d`.
pub fn cutnorm_by_sign_vectors(m: &[Vec<f64>]) -> f64 {
    let d = m.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << d) {
        let mut total = 0.0;
        for row in m {
            let s: f64 = row
                .iter()
                .enumerate()
                .map(|(j, &v)| if mask >> j & 1 == 1 { -v } else { v })
                .sum();
            total += s.abs();
        }
        best = best.max(total);
    }
    best
}

/// `max |Σ_{i ∈ B, j ∈ A} m_ij|` over every pair of disjoint sets, visiting
/// all `3^d` pairs.
pub fn max_bilinear_disjoint(m: &[Vec<f64>]) -> f64 {
    let d = m.len();
    let full = (1usize << d) - 1;
    let mut sums = vec![0.0f64; 1 << d];
    let mut best = 0.0f64;
    for a in 0..=full {
        let u: Vec<f64> = (0..d)
            .map(|i| (0..d).filter(|&j| a >> j & 1 == 1).map(|j| m[i][j]).sum())
            .collect();
        let comp = full & !a;
        // submasks of comp in increasing order; each one extends a smaller
        // submask by its lowest bit
        let mut b = 0usize;
        loop {
            if b != 0 {
                let low = b.trailing_zeros() as usize;
                sums[b] = sums[b & (b - 1)] + u[low];
                best = best.max(sums[b].abs());
            }
            if b == comp {
                break;
            }
            b = (b.wrapping_sub(comp)) & comp;
        }
    }
    best
}
