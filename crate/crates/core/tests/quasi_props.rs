mod common;

use bpdec_core::factor_graph::FactorGraph;
use bpdec_core::formula::{GenModel, GenParams};
use bpdec_core::quasirandom::{
    cutnorm_bound, cutnorm_exact, cutnorm_lower_sampled, is_balanced, lambda_q, n_leq1,
    BoundMode, DeltaSchedule, LambdaOperator, LambdaWeight, LengthWindow, VarSet,
};
use common::{arb_formula, cutnorm_by_sign_vectors, dyadic_matrix, max_bilinear_disjoint, rng};
use proptest::prelude::*;

fn subset(n: usize, bits: u64) -> Vec<u32> {
    (1..=n as u32).filter(|&x| bits >> (x % 64) & 1 == 1).collect()
}

proptest! {
    #[test]
    fn delta_grows_with_time(c in 0.01f64..2.0, k in 2usize..12, n in 1usize..500, r in 0.1f64..50.0) {
        let s = DeltaSchedule::exponential(c, k, n, r).unwrap();
        for t in 0..n {
            prop_assert!(s.delta(t) <= s.delta(t + 1));
        }
        prop_assert_eq!(s.delta(n), 1.0);
        let horizon = s.horizon().unwrap();
        prop_assert!((horizon - (1.0 - r / 2f64.powi(k as i32)) * n as f64).abs() <= 1e-9 * n as f64);
        let at_horizon = (-c * (1.0 - horizon / n as f64) * k as f64).exp();
        let closed = (-c * k as f64 * r / 2f64.powi(k as i32)).exp();
        prop_assert!((at_horizon - closed).abs() <= 1e-12);
    }

    #[test]
    fn empty_biased_set_is_balanced(delta in 0.0f64..2.0, unassigned in 0usize..100) {
        prop_assert!(is_balanced(0, delta, unassigned));
        prop_assert!(is_balanced(0, f64::INFINITY, 0));
        prop_assert!(!is_balanced(1, 0.0, unassigned));
    }

    #[test]
    fn lambda_has_zero_diagonal(f in arb_formula(12, 20, 4), bits in any::<u64>(), half in any::<bool>()) {
        let g = FactorGraph::build(&f);
        let q = VarSet::from_vars(f.n(), &subset(f.n(), bits));
        let weight = if half { LambdaWeight::Half } else { LambdaWeight::Full };
        let l = lambda_q(&g, &q, LengthWindow::new(1.0, 3), weight);
        for i in 0..l.dim() {
            prop_assert_eq!(l.get(i, i), 0.0);
        }
    }

    #[test]
    fn lambda_is_symmetric_for_proper_clauses_and_empty_q(n in 6usize..30, m in 0usize..40, seed in any::<u64>()) {
        let f = GenParams { model: GenModel::ProperUniform, n, m, k: 3 }.generate(seed).unwrap();
        let g = FactorGraph::build(&f);
        let l = lambda_q(&g, &VarSet::empty(n), LengthWindow::new(1.0, 3), LambdaWeight::Half);
        let dense = l.to_dense();
        for (i, row) in dense.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                prop_assert_eq!(v, dense[j][i]);
            }
        }
    }

    #[test]
    fn full_weight_doubles_half_weight(f in arb_formula(10, 16, 4), bits in any::<u64>()) {
        let g = FactorGraph::build(&f);
        let q = VarSet::from_vars(f.n(), &subset(f.n(), bits));
        let w = LengthWindow::new(1.0, 3);
        let half = lambda_q(&g, &q, w, LambdaWeight::Half);
        let full = lambda_q(&g, &q, w, LambdaWeight::Full);
        prop_assert_eq!(half.scaled(2.0), full);
    }

    #[test]
    fn larger_q_shrinks_n_leq1(f in arb_formula(12, 20, 4), a in any::<u64>(), b in any::<u64>()) {
        let g = FactorGraph::build(&f);
        let small = VarSet::from_vars(f.n(), &subset(f.n(), a & b));
        let big = VarSet::from_vars(f.n(), &subset(f.n(), a));
        let w = LengthWindow::new(1.0, 3);
        for x in f.alive_vars() {
            let with_big = n_leq1(&g, x, &big, w);
            let with_small = n_leq1(&g, x, &small, w);
            prop_assert!(with_big.iter().all(|c| with_small.contains(c)));
        }
    }

    #[test]
    fn cutnorm_is_homogeneous(seed in any::<u64>(), d in 1usize..9, e in -3i32..4, neg in any::<bool>()) {
        let m = dyadic_matrix(&mut rng(seed), d);
        let l = LambdaOperator::from_dense(&m);
        let s = if neg { -2f64.powi(e) } else { 2f64.powi(e) };
        prop_assert_eq!(cutnorm_exact(&l.scaled(s)).unwrap(), s.abs() * cutnorm_exact(&l).unwrap());
    }

    #[test]
    fn cutnorm_bounds_bracket_the_exact_value(seed in any::<u64>(), d in 1usize..9) {
        let m = dyadic_matrix(&mut rng(seed), d);
        let l = LambdaOperator::from_dense(&m);
        let exact = cutnorm_exact(&l).unwrap();
        prop_assert_eq!(exact, cutnorm_by_sign_vectors(&m));
        prop_assert!(cutnorm_lower_sampled(&l, 8, seed) <= exact);
        prop_assert!(exact <= l.entry_sum());
        let b = cutnorm_bound(&l, BoundMode::ExhaustiveAB).unwrap();
        prop_assert_eq!(b.max_bilinear, max_bilinear_disjoint(&m));
        prop_assert!(exact <= b.bound);
        prop_assert!(!b.heuristic);
    }
}
