//! The operator `Λ_Q` and its cut norm `max_ζ ‖Λζ‖₁ / ‖ζ‖∞`.

use std::collections::BTreeMap;

use rand::Rng;

use super::{n_leq1, LengthWindow, VarSet};
use crate::error::{Error, Result};
use crate::factor_graph::FactorGraph;
use crate::formula::Var;
use crate::seeds;

/// Largest dimension accepted by [`cutnorm_exact`].
pub const EXACT_MAX_DIM: usize = 20;
/// Largest dimension accepted by [`BoundMode::ExhaustiveAB`].
pub const EXHAUSTIVE_MAX_DIM: usize = 16;

/// Clause weight in `Λ_Q`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LambdaWeight {
    /// `2^{−|N(b)|}`.
    #[default]
    Half,
    /// `2^{1−|N(b)|}`.
    Full,
}

impl LambdaWeight {
    fn of(self, len: usize) -> f64 {
        let shift = match self {
            LambdaWeight::Half => -(len as i32),
            LambdaWeight::Full => 1 - len as i32,
        };
        2f64.powi(shift)
    }
}

/// Sparse square matrix indexed by `vars`; row and column `i` belong to
/// `vars[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaOperator {
    pub vars: Vec<Var>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl LambdaOperator {
    pub fn from_dense(m: &[Vec<f64>]) -> Self {
        let d = m.len();
        let rows = m
            .iter()
            .map(|row| {
                assert_eq!(row.len(), d, "matrix must be square");
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect();
        LambdaOperator {
            vars: (1..=d as Var).collect(),
            rows,
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|&&(c, _)| c == j)
            .map_or(0.0, |&(_, v)| v)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out = vec![vec![0.0; d]; d];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                out[i][j] = v;
            }
        }
        out
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        LambdaOperator {
            vars: self.vars.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(j, v)| (j, v * s)).collect())
                .collect(),
        }
    }

    /// `Λζ` summed row by row in column order.
    pub fn apply(&self, zeta: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * zeta[j]).sum())
            .collect()
    }

    /// `Σ |Λ_xy|`, an upper bound on the cut norm.
    pub fn entry_sum(&self) -> f64 {
        self.rows.iter().flatten().map(|&(_, v)| v.abs()).sum()
    }

    fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.dim()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                cols[j].push((i, v));
            }
        }
        cols
    }
}

/// Builds `Λ_Q` over the alive variables of `g`. Each occurrence pair of
/// `x` and `y ≠ x` in a clause of `N_{≤1}(x, Q)` contributes
/// `w(b) sign(x,b) sign(y,b)`.
pub fn lambda_q(g: &FactorGraph, q: &VarSet, window: LengthWindow, weight: LambdaWeight) -> LambdaOperator {
    let vars: Vec<Var> = g.alive_vars().collect();
    let mut index = vec![usize::MAX; g.n() + 1];
    for (i, &x) in vars.iter().enumerate() {
        index[x as usize] = i;
    }
    let rows = vars
        .iter()
        .map(|&x| {
            let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
            for a in n_leq1(g, x, q, window) {
                let w = weight.of(g.clause_len(a));
                let x_signs: Vec<i8> = g.clause_adj(a).filter(|&(v, _)| v == x).map(|(_, s)| s).collect();
                for (y, sy) in g.clause_adj(a).filter(|&(v, _)| v != x) {
                    for &sx in &x_signs {
                        *acc.entry(index[y as usize]).or_insert(0.0) += w * f64::from(sx * sy);
                    }
                }
            }
            acc.into_iter().filter(|&(_, v)| v != 0.0).collect()
        })
        .collect();
    LambdaOperator { vars, rows }
}

/// Exact cut norm by enumerating `ζ ∈ {±1}^d` in Gray-code order. The
/// maximiser's value is recomputed from scratch with [`LambdaOperator::apply`].
pub fn cutnorm_exact(l: &LambdaOperator) -> Result<f64> {
    let d = l.dim();
    if d > EXACT_MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: d,
            max: EXACT_MAX_DIM,
        });
    }
    if d == 0 {
        return Ok(0.0);
    }
    let cols = l.columns();
    let mut zeta = vec![1.0; d];
    let mut v = l.apply(&zeta);
    let norm1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    let mut best = norm1(&v);
    let mut best_zeta = zeta.clone();
    // ζ and −ζ have the same norm, so coordinate d−1 stays +1
    let steps: u64 = 1u64 << (d - 1);
    for step in 1..steps {
        let j = step.trailing_zeros() as usize;
        let delta = -2.0 * zeta[j];
        zeta[j] = -zeta[j];
        for &(i, a) in &cols[j] {
            v[i] += delta * a;
        }
        let val = norm1(&v);
        if val > best {
            best = val;
            best_zeta.copy_from_slice(&zeta);
        }
    }
    Ok(norm1(&l.apply(&best_zeta)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundMode {
    ExhaustiveAB,
    Sampled { count: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutnormBound {
    /// `max |⟨Λ 1_A, 1_B⟩|` over disjoint `A, B` (exact or sampled).
    pub max_bilinear: f64,
    /// `24 · max_bilinear`.
    pub bound: f64,
    /// The maximum was sampled, so `bound` is not a certified upper bound.
    pub heuristic: bool,
}

/// Best `B` disjoint from `A` for a fixed `u = Λ 1_A`: all positive or all
/// negative coordinates outside `A`.
fn best_b(u: &[f64], in_a: &[bool]) -> f64 {
    let (mut pos, mut neg) = (0.0, 0.0);
    for (i, &x) in u.iter().enumerate() {
        if !in_a[i] {
            if x > 0.0 {
                pos += x;
            } else {
                neg -= x;
            }
        }
    }
    f64::max(pos, neg)
}

/// The bound `⫿Λ⫿ ≤ 24 max |⟨Λ 1_A, 1_B⟩|` for zero-diagonal `Λ`.
pub fn cutnorm_bound(l: &LambdaOperator, mode: BoundMode) -> Result<CutnormBound> {
    let d = l.dim();
    let cols = l.columns();
    let (max_bilinear, heuristic) = match mode {
        BoundMode::ExhaustiveAB => {
            if d > EXHAUSTIVE_MAX_DIM {
                return Err(Error::DimensionTooLarge {
                    dim: d,
                    max: EXHAUSTIVE_MAX_DIM,
                });
            }
            let mut in_a = vec![false; d];
            let mut u = vec![0.0; d];
            let mut best: f64 = 0.0;
            for step in 1u64..(1u64 << d) {
                let j = step.trailing_zeros() as usize;
                let s = if in_a[j] { -1.0 } else { 1.0 };
                in_a[j] = !in_a[j];
                for &(i, a) in &cols[j] {
                    u[i] += s * a;
                }
                best = best.max(best_b(&u, &in_a));
            }
            (best, false)
        }
        BoundMode::Sampled { count, seed } => {
            let mut rng = seeds::rng(seed);
            let mut best: f64 = 0.0;
            let mut in_a = vec![false; d];
            for _ in 0..count {
                for m in in_a.iter_mut() {
                    *m = rng.random_bool(0.5);
                }
                let ind: Vec<f64> = in_a.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
                let u = l.apply(&ind);
                best = best.max(best_b(&u, &in_a));
            }
            (best, true)
        }
    };
    Ok(CutnormBound {
        max_bilinear,
        bound: 24.0 * max_bilinear,
        heuristic,
    })
}

/// A certified lower bound on the cut norm: the best `‖Λζ‖₁` over random
/// sign vectors, each improved by single-coordinate flips until no flip
/// helps.
pub fn cutnorm_lower_sampled(l: &LambdaOperator, count: usize, seed: u64) -> f64 {
    let d = l.dim();
    if d == 0 {
        return 0.0;
    }
    let cols = l.columns();
    let mut rng = seeds::rng(seed);
    let mut best: f64 = 0.0;
    for _ in 0..count.max(1) {
        let mut zeta: Vec<f64> = (0..d).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        let mut v = l.apply(&zeta);
        let mut current: f64 = v.iter().map(|x| x.abs()).sum();
        // bounded local search; each accepted flip strictly improves
        for _ in 0..4 * d {
            let mut improved = false;
            for j in 0..d {
                let delta = -2.0 * zeta[j];
                let gain: f64 = cols[j]
                    .iter()
                    .map(|&(i, a)| (v[i] + delta * a).abs() - v[i].abs())
                    .sum();
                if gain > 1e-12 {
                    zeta[j] = -zeta[j];
                    for &(i, a) in &cols[j] {
                        v[i] += delta * a;
                    }
                    current += gain;
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        let exact: f64 = l.apply(&zeta).iter().map(|x| x.abs()).sum();
        debug_assert!((exact - current).abs() <= 1e-9 * (1.0 + exact));
        best = best.max(exact);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::CnfFormula;

    fn two_by_two() -> LambdaOperator {
        LambdaOperator::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    #[test]
    fn hand_computed_norms() {
        assert_eq!(cutnorm_exact(&two_by_two()).unwrap(), 2.0);
        let b = cutnorm_bound(&two_by_two(), BoundMode::ExhaustiveAB).unwrap();
        assert_eq!(b.max_bilinear, 1.0);
        assert_eq!(b.bound, 24.0);
        let zero = LambdaOperator::from_dense(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]);
        assert_eq!(cutnorm_exact(&zero).unwrap(), 0.0);
        assert_eq!(cutnorm_bound(&zero, BoundMode::ExhaustiveAB).unwrap().bound, 0.0);
    }

    #[test]
    fn dimension_limits() {
        let big = LambdaOperator::from_dense(&vec![vec![0.0; 21]; 21]);
        assert!(matches!(cutnorm_exact(&big), Err(Error::DimensionTooLarge { .. })));
        let mid = LambdaOperator::from_dense(&vec![vec![0.0; 17]; 17]);
        assert!(cutnorm_bound(&mid, BoundMode::ExhaustiveAB).is_err());
        assert!(cutnorm_bound(&mid, BoundMode::Sampled { count: 4, seed: 1 }).unwrap().heuristic);
    }

    #[test]
    fn lambda_of_two_clause() {
        // (x1 ∨ ¬x2): entry (1,2) = 2^{-2} · (+1)(−1)
        let f = CnfFormula::from_ints(2, &[&[1, -2]]).unwrap();
        let g = FactorGraph::build(&f);
        let window = LengthWindow { lo: 0.0, hi: 10.0 };
        let l = lambda_q(&g, &VarSet::empty(2), window, LambdaWeight::Half);
        assert_eq!(l.get(0, 1), -0.25);
        assert_eq!(l.get(1, 0), -0.25);
        assert_eq!(l.get(0, 0), 0.0);
        let l2 = lambda_q(&g, &VarSet::empty(2), window, LambdaWeight::Full);
        assert_eq!(l2.get(0, 1), -0.5);
    }

    #[test]
    fn q_covering_every_clause_gives_zero() {
        let f = CnfFormula::from_ints(4, &[&[1, 2, 3], &[2, -3, 4]]).unwrap();
        let g = FactorGraph::build(&f);
        let q = VarSet::from_vars(4, &[1, 2, 3, 4]);
        let l = lambda_q(&g, &q, LengthWindow { lo: 0.0, hi: 10.0 }, LambdaWeight::Half);
        assert_eq!(l.nnz(), 0);
    }

    #[test]
    fn sampled_lower_bound_never_exceeds_exact() {
        let l = LambdaOperator::from_dense(&[
            vec![0.0, 1.0, -2.0, 0.5],
            vec![1.0, 0.0, 3.0, -1.0],
            vec![-2.0, 3.0, 0.0, 0.25],
            vec![0.5, -1.0, 0.25, 0.0],
        ]);
        let exact = cutnorm_exact(&l).unwrap();
        let lower = cutnorm_lower_sampled(&l, 20, 3);
        assert!(lower <= exact);
        assert_eq!(lower, exact);
    }
}
