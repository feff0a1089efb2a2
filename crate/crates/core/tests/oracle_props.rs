mod common;

use bpdec_core::error::Error;
use bpdec_core::exact::{count, count_brute_force, enumerate_solutions, exact_marginal, ideal_decimation};
use common::{arb_formula, brute_count};
use proptest::prelude::*;

proptest! {
    #[test]
    fn component_count_matches_enumeration(f in arb_formula(16, 24, 4)) {
        let (total, per) = brute_count(&f);
        let c = count(&f, 26).unwrap();
        prop_assert_eq!(c.total, total);
        for x in f.alive_vars() {
            prop_assert_eq!(c.per_var_true[x as usize], per[x as usize]);
        }
        prop_assert_eq!(count_brute_force(&f, 26).unwrap(), c);
    }

    #[test]
    fn counts_after_partial_assignment(f in arb_formula(14, 20, 3), bits in any::<u8>()) {
        let mut g = f.clone();
        for x in 1..=(f.n() as u32).min(4) {
            g.assign(x, bits >> x & 1 == 1).unwrap();
        }
        let (total, _) = brute_count(&g);
        prop_assert_eq!(count(&g, 26).unwrap().total, total);
    }

    #[test]
    fn solutions_are_listed_once_and_satisfy(f in arb_formula(10, 14, 3)) {
        let sols = enumerate_solutions(&f, 26).unwrap();
        prop_assert_eq!(sols.len() as u64, brute_count(&f).0);
        for s in &sols {
            prop_assert!(f.evaluate(s).unwrap());
        }
        let mut keys: Vec<String> = sols.iter().map(|s| s.to_bitstring()).collect();
        keys.sort();
        keys.dedup();
        prop_assert_eq!(keys.len(), sols.len());
    }

    #[test]
    fn exact_marginal_is_the_solution_ratio(f in arb_formula(12, 16, 3), x in 1u32..=12) {
        prop_assume!(x as usize <= f.n());
        let (total, per) = brute_count(&f);
        match exact_marginal(&f, x, 26) {
            Ok(m) => prop_assert_eq!(m, per[x as usize] as f64 / total as f64),
            Err(e) => {
                prop_assert_eq!(total, 0);
                prop_assert!(matches!(e, Error::Unsatisfiable));
            }
        }
    }

    #[test]
    fn ideal_decimation_ends_in_a_solution(f in arb_formula(12, 18, 3), seed in any::<u64>()) {
        let satisfiable = brute_count(&f).0 > 0;
        match ideal_decimation(&f, seed, 26) {
            Ok(run) => {
                prop_assert!(satisfiable);
                prop_assert!(f.evaluate(&run.assignment).unwrap());
                prop_assert_eq!(run.steps.len(), f.num_alive());
            }
            Err(e) => {
                prop_assert!(!satisfiable);
                prop_assert!(matches!(e, Error::Unsatisfiable));
            }
        }
    }

    #[test]
    fn budget_is_enforced(f in arb_formula(12, 6, 2)) {
        let r = count(&f, f.num_alive().saturating_sub(1));
        if f.num_alive() > 0 {
            prop_assert!(matches!(r, Err(Error::BudgetExceeded { .. })), "expected budget error");
        }
    }
}
