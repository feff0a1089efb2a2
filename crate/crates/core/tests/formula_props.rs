mod common;

use std::collections::BTreeSet;

use bpdec_core::factor_graph::FactorGraph;
use bpdec_core::formula::{read_dimacs, write_dimacs, Assignment, CnfFormula, GenModel, GenParams};
use common::{arb_formula, brute_solutions, int_clauses};
use proptest::prelude::*;

fn naive_redundant(f: &CnfFormula) -> BTreeSet<usize> {
    let sets: Vec<BTreeSet<u64>> = int_clauses(f)
        .iter()
        .map(|c| c.iter().map(|l| l.unsigned_abs()).collect())
        .collect();
    let mut out = BTreeSet::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if sets[i].intersection(&sets[j]).count() >= 2 {
                out.insert(f.clauses()[i].id);
                out.insert(f.clauses()[j].id);
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn decimating_along_a_solution_never_contradicts(f in arb_formula(10, 14, 3), pick in any::<u64>()) {
        let sols = brute_solutions(&f);
        prop_assume!(!sols.is_empty());
        let mask = sols[(pick % sols.len() as u64) as usize];
        let vars: Vec<_> = f.alive_vars().collect();
        let mut g = f.clone();
        for (i, &x) in vars.iter().enumerate() {
            g.assign(x, mask >> i & 1 == 1).unwrap();
            prop_assert!(!g.is_contradicted());
        }
        prop_assert_eq!(g.num_clauses(), 0);
    }

    #[test]
    fn redundancy_matches_pairwise_scan(f in arb_formula(8, 12, 4)) {
        let r = f.redundant_clauses();
        prop_assert_eq!(&r.flagged, &naive_redundant(&f));
        for &(a, b) in &r.pairs {
            prop_assert!(a < b);
            prop_assert!(r.flagged.contains(&a) && r.flagged.contains(&b));
        }
    }

    #[test]
    fn degrees_sum_to_clause_lengths(f in arb_formula(12, 20, 4)) {
        let g = FactorGraph::build(&f);
        let by_var: usize = f.degrees().iter().sum();
        let by_clause: usize = f.clauses().iter().map(|c| c.len()).sum();
        prop_assert_eq!(by_var, by_clause);
        prop_assert_eq!(g.num_edges(), by_clause);
        let var_side: usize = (1..=f.n() as u32).map(|x| g.degree(x)).sum();
        prop_assert_eq!(var_side, g.num_edges());
    }

    #[test]
    fn dimacs_roundtrip_after_decimation(f in arb_formula(10, 12, 3), bits in any::<u16>()) {
        let mut g = f.clone();
        for x in 1..=(f.n() as u32).min(3) {
            g.assign(x, bits >> x & 1 == 1).unwrap();
        }
        let mut buf = Vec::new();
        write_dimacs(&g, &mut buf).unwrap();
        prop_assert_eq!(read_dimacs(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn evaluation_agrees_with_decimation(f in arb_formula(8, 10, 3), bits in any::<u8>()) {
        let values: Vec<bool> = (0..f.n()).map(|i| bits >> (i % 8) & 1 == 1).collect();
        let mut g = f.clone();
        for (i, &b) in values.iter().enumerate() {
            g.assign(i as u32 + 1, b).unwrap();
        }
        let sat = f.evaluate(&Assignment::from_bits(&values)).unwrap();
        prop_assert_eq!(sat, !g.is_contradicted());
    }

    #[test]
    fn proper_clauses_have_distinct_variables(n in 6usize..40, m in 0usize..60, seed in any::<u64>()) {
        let f = GenParams { model: GenModel::ProperUniform, n, m, k: 3 }.generate(seed).unwrap();
        prop_assert_eq!(f.num_clauses(), m);
        let mut seen = BTreeSet::new();
        for c in int_clauses(&f) {
            let vars: BTreeSet<u64> = c.iter().map(|l| l.unsigned_abs()).collect();
            prop_assert_eq!(vars.len(), 3);
            let mut key = c.clone();
            key.sort_unstable();
            prop_assert!(seen.insert(key));
        }
    }
}
