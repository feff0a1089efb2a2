//! CNF formulas over variables `x1..xn`, the decimation rule, and the
//! random formula models.
//!
//! A [`CnfFormula`] remembers which variables are still unassigned ("alive")
//! and the assignments made so far. Decimating a variable deletes every
//! clause it satisfies and strips the falsified literal from the others.
//! A clause that loses its last literal marks the formula as contradicted;
//! the formula stays fully queryable afterwards.

mod dimacs;
mod generate;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

pub use dimacs::{read_dimacs, write_dimacs};
pub use generate::{clauses_for_density, generate, universe_size, GenModel, GenParams};

use crate::error::{Error, Result};

/// 1-based variable index.
pub type Var = u32;

/// Stable clause identifier; survives decimation.
pub type ClauseId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: Var,
    pub positive: bool,
}

impl Literal {
    pub fn new(var: Var, positive: bool) -> Self {
        Literal { var, positive }
    }

    pub fn pos(var: Var) -> Self {
        Literal::new(var, true)
    }

    pub fn neg(var: Var) -> Self {
        Literal::new(var, false)
    }

    /// `+1` for a positive occurrence, `-1` otherwise.
    pub fn sign(self) -> i8 {
        if self.positive {
            1
        } else {
            -1
        }
    }

    pub fn negated(self) -> Self {
        Literal::new(self.var, !self.positive)
    }

    /// The value of `var` that satisfies this literal.
    pub fn satisfying_value(self) -> bool {
        self.positive
    }

    pub fn to_dimacs(self) -> i64 {
        if self.positive {
            self.var as i64
        } else {
            -(self.var as i64)
        }
    }

    pub fn from_dimacs(lit: i64) -> Option<Self> {
        if lit == 0 || lit.unsigned_abs() > Var::MAX as u64 {
            return None;
        }
        Some(Literal::new(lit.unsigned_abs() as Var, lit > 0))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "x{}", self.var)
        } else {
            write!(f, "!x{}", self.var)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub id: ClauseId,
    pub literals: Vec<Literal>,
}

impl Clause {
    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn is_tautology(&self) -> bool {
        self.literals
            .iter()
            .any(|l| self.literals.contains(&l.negated()))
    }

    /// Distinct variables of the clause, sorted.
    pub fn variables(&self) -> Vec<Var> {
        let mut vars: Vec<Var> = self.literals.iter().map(|l| l.var).collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    pub fn contains_var(&self, x: Var) -> bool {
        self.literals.iter().any(|l| l.var == x)
    }
}

/// Partial or total assignment, indexed by variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<Option<bool>>,
}

impl Assignment {
    pub fn new(n: usize) -> Self {
        Assignment {
            values: vec![None; n + 1],
        }
    }

    /// Total assignment from `bits[i]` = value of `x{i+1}`.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut values = Vec::with_capacity(bits.len() + 1);
        values.push(None);
        values.extend(bits.iter().map(|&b| Some(b)));
        Assignment { values }
    }

    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    pub fn get(&self, x: Var) -> Option<bool> {
        self.values.get(x as usize).copied().flatten()
    }

    pub fn set(&mut self, x: Var, value: bool) {
        self.values[x as usize] = Some(value);
    }

    pub fn is_total(&self) -> bool {
        self.values[1..].iter().all(Option::is_some)
    }

    /// `0`/`1` per variable, `-` where unassigned.
    pub fn to_bitstring(&self) -> String {
        self.values[1..]
            .iter()
            .map(|v| match v {
                Some(true) => '1',
                Some(false) => '0',
                None => '-',
            })
            .collect()
    }
}

/// Generation parameters carried along so a formula can be regenerated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Provenance {
    pub model: GenModel,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnfFormula {
    n: usize,
    alive: Vec<bool>,
    clauses: Vec<Clause>,
    fixed: Vec<Option<bool>>,
    history: Vec<Literal>,
    contradicted: bool,
    provenance: Option<Provenance>,
}

impl CnfFormula {
    /// Builds a formula on `x1..xn` with every variable alive. Clause ids are
    /// the positions in `clauses`.
    pub fn new(n: usize, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        let clauses = clauses
            .into_iter()
            .enumerate()
            .map(|(id, literals)| Clause { id, literals })
            .collect();
        Self::from_clauses(n, clauses)
    }

    pub(crate) fn from_clauses(n: usize, clauses: Vec<Clause>) -> Result<Self> {
        for clause in &clauses {
            for lit in &clause.literals {
                if lit.var == 0 || lit.var as usize > n {
                    return Err(Error::InvalidInput(format!(
                        "literal {} outside variable range 1..={}",
                        lit.to_dimacs(),
                        n
                    )));
                }
            }
        }
        let contradicted = clauses.iter().any(Clause::is_empty);
        let mut alive = vec![true; n + 1];
        alive[0] = false;
        Ok(CnfFormula {
            n,
            alive,
            clauses,
            fixed: vec![None; n + 1],
            history: Vec::new(),
            contradicted,
            provenance: None,
        })
    }

    /// Convenience constructor from DIMACS-style integer clauses.
    pub fn from_ints(n: usize, clauses: &[&[i64]]) -> Result<Self> {
        let clauses = clauses
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&l| {
                        Literal::from_dimacs(l)
                            .ok_or_else(|| Error::InvalidInput(format!("bad literal {l}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, clauses)
    }

    pub(crate) fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of decimated variables.
    pub fn t(&self) -> usize {
        self.history.len()
    }

    pub fn num_alive(&self) -> usize {
        self.n - self.t()
    }

    pub fn is_alive(&self, x: Var) -> bool {
        self.alive.get(x as usize).copied().unwrap_or(false)
    }

    pub fn alive_vars(&self) -> impl Iterator<Item = Var> + '_ {
        (1..=self.n as Var).filter(move |&x| self.alive[x as usize])
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn num_literals(&self) -> usize {
        self.clauses.iter().map(Clause::len).sum()
    }

    pub fn fixed(&self, x: Var) -> Option<bool> {
        self.fixed.get(x as usize).copied().flatten()
    }

    /// Assignments applied so far, in order, as the literal made true.
    pub fn history(&self) -> &[Literal] {
        &self.history
    }

    pub fn is_contradicted(&self) -> bool {
        self.contradicted
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// The values fixed so far as an [`Assignment`].
    pub fn partial_assignment(&self) -> Assignment {
        Assignment {
            values: self.fixed.clone(),
        }
    }

    /// Substitutes `value` for `x` and simplifies, returning the new formula.
    pub fn decimate(&self, x: Var, value: bool) -> Result<CnfFormula> {
        let mut next = self.clone();
        next.assign(x, value)?;
        Ok(next)
    }

    /// In-place form of [`CnfFormula::decimate`].
    pub fn assign(&mut self, x: Var, value: bool) -> Result<()> {
        if !self.is_alive(x) {
            return Err(Error::InvalidVariable(x));
        }
        let satisfied = Literal::new(x, value);
        let mut emptied = false;
        self.clauses.retain_mut(|clause| {
            if clause.literals.contains(&satisfied) {
                return false;
            }
            let before = clause.literals.len();
            clause.literals.retain(|l| l.var != x);
            if clause.literals.is_empty() && before > 0 {
                emptied = true;
            }
            true
        });
        self.contradicted |= emptied;
        self.alive[x as usize] = false;
        self.fixed[x as usize] = Some(value);
        self.history.push(satisfied);
        Ok(())
    }

    /// True iff every clause has a satisfied literal under `assignment`,
    /// which must cover every alive variable.
    pub fn evaluate(&self, assignment: &Assignment) -> Result<bool> {
        if let Some(x) = self.alive_vars().find(|&x| assignment.get(x).is_none()) {
            return Err(Error::InvalidInput(format!(
                "assignment leaves alive variable x{x} unset"
            )));
        }
        Ok(self.clauses.iter().all(|c| {
            c.literals
                .iter()
                .any(|l| assignment.get(l.var) == Some(l.positive))
        }))
    }

    /// Clauses sharing at least two variables with some other clause.
    pub fn redundant_clauses(&self) -> Redundancy {
        let mut by_pair: HashMap<(Var, Var), Vec<ClauseId>> = HashMap::new();
        for clause in &self.clauses {
            let vars = clause.variables();
            for (i, &u) in vars.iter().enumerate() {
                for &v in &vars[i + 1..] {
                    by_pair.entry((u, v)).or_default().push(clause.id);
                }
            }
        }
        let mut pairs = BTreeSet::new();
        for ids in by_pair.values().filter(|ids| ids.len() > 1) {
            for (i, &a) in ids.iter().enumerate() {
                for &b in &ids[i + 1..] {
                    pairs.insert((a.min(b), a.max(b)));
                }
            }
        }
        let flagged = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
        Redundancy { pairs, flagged }
    }

    /// `hist[L]` = number of clauses of length `L`.
    pub fn length_histogram(&self) -> Vec<usize> {
        let max = self.clauses.iter().map(Clause::len).max().unwrap_or(0);
        let mut hist = vec![0; max + 1];
        for c in &self.clauses {
            hist[c.len()] += 1;
        }
        hist
    }

    /// Occurrence count per variable (index 0 unused).
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n + 1];
        for c in &self.clauses {
            for l in &c.literals {
                deg[l.var as usize] += 1;
            }
        }
        deg
    }

    /// Largest clause length in the formula, or 0 if there are no clauses.
    pub fn max_clause_len(&self) -> usize {
        self.clauses.iter().map(Clause::len).max().unwrap_or(0)
    }

    /// Sub-formula on `vars` (kept alive) and the clauses with the given
    /// ids; everything else is dropped. Used to hand ball neighbourhoods to
    /// the exact oracle.
    pub fn restrict(&self, vars: &[Var], clause_ids: &[ClauseId]) -> CnfFormula {
        let mut alive = vec![false; self.n + 1];
        for &x in vars {
            alive[x as usize] = true;
        }
        let wanted: BTreeSet<ClauseId> = clause_ids.iter().copied().collect();
        let clauses: Vec<Clause> = self
            .clauses
            .iter()
            .filter(|c| wanted.contains(&c.id))
            .cloned()
            .collect();
        debug_assert!(clauses
            .iter()
            .all(|c| c.literals.iter().all(|l| alive[l.var as usize])));
        let contradicted = clauses.iter().any(Clause::is_empty);
        // Variables outside the ball count as fixed from the sub-formula's
        // point of view; only the alive set matters to consumers.
        let history = (1..=self.n as Var)
            .filter(|&x| !alive[x as usize])
            .map(|x| Literal::new(x, self.fixed(x).unwrap_or(false)))
            .collect();
        CnfFormula {
            n: self.n,
            alive,
            clauses,
            fixed: self.fixed.clone(),
            history,
            contradicted,
            provenance: None,
        }
    }
}

/// Result of [`CnfFormula::redundant_clauses`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Redundancy {
    /// Witness pairs `(a, b)` with `a < b` sharing at least two variables.
    pub pairs: BTreeSet<(ClauseId, ClauseId)>,
    pub flagged: BTreeSet<ClauseId>,
}

impl Redundancy {
    pub fn count(&self) -> usize {
        self.flagged.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lits(c: &Clause) -> Vec<i64> {
        c.literals.iter().map(|l| l.to_dimacs()).collect()
    }

    #[test]
    fn decimate_removes_satisfied_and_strips_falsified() {
        let f = CnfFormula::from_ints(3, &[&[1, 2, 3], &[-1, 2]]).unwrap();
        let g = f.decimate(1, true).unwrap();
        assert_eq!(g.num_clauses(), 1);
        assert_eq!(lits(&g.clauses()[0]), vec![2]);
        assert_eq!(g.clauses()[0].id, 1);
        assert!(!g.is_alive(1));
        assert_eq!(g.t(), 1);
        assert_eq!(g.num_alive(), 2);
        assert!(!g.is_contradicted());
    }

    #[test]
    fn decimate_to_empty_clause_contradicts() {
        let f = CnfFormula::from_ints(1, &[&[1]]).unwrap();
        let g = f.decimate(1, false).unwrap();
        assert!(g.is_contradicted());
        assert_eq!(g.num_clauses(), 1);
        assert!(g.clauses()[0].is_empty());
    }

    #[test]
    fn decimate_keeps_unrelated_clause() {
        let f = CnfFormula::from_ints(3, &[&[1, 2], &[3, -2]]).unwrap();
        let g = f.decimate(3, true).unwrap();
        assert_eq!(g.num_clauses(), 1);
        assert_eq!(lits(&g.clauses()[0]), vec![1, 2]);
    }

    #[test]
    fn decimate_dead_variable_is_an_error() {
        let f = CnfFormula::from_ints(2, &[&[1, 2]]).unwrap();
        let g = f.decimate(1, true).unwrap();
        assert!(matches!(g.decimate(1, false), Err(Error::InvalidVariable(1))));
        assert!(matches!(g.decimate(7, false), Err(Error::InvalidVariable(7))));
    }

    #[test]
    fn decimate_handles_repeated_and_tautological_literals() {
        let f = CnfFormula::from_ints(2, &[&[1, 1, 2], &[1, -1, 2]]).unwrap();
        let g = f.decimate(1, false).unwrap();
        assert_eq!(g.num_clauses(), 1);
        assert_eq!(lits(&g.clauses()[0]), vec![2]);
    }

    #[test]
    fn redundant_clauses_examples() {
        let f = CnfFormula::from_ints(4, &[&[1, 2, 3], &[-1, 2, 4]]).unwrap();
        let r = f.redundant_clauses();
        assert_eq!(r.flagged.iter().copied().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(r.pairs.len(), 1);

        let f = CnfFormula::from_ints(6, &[&[1, 2, 3], &[4, 5, 6]]).unwrap();
        assert_eq!(f.redundant_clauses().count(), 0);

        // one shared variable is not enough
        let f = CnfFormula::from_ints(5, &[&[1, 2, 3], &[3, 4, 5]]).unwrap();
        assert_eq!(f.redundant_clauses().count(), 0);
    }

    #[test]
    fn evaluate_examples() {
        let empty = CnfFormula::new(2, vec![]).unwrap();
        assert!(empty
            .evaluate(&Assignment::from_bits(&[false, true]))
            .unwrap());

        let f = CnfFormula::from_ints(1, &[&[1], &[-1]]).unwrap();
        for b in [false, true] {
            assert!(!f.evaluate(&Assignment::from_bits(&[b])).unwrap());
        }

        let f = CnfFormula::from_ints(2, &[&[1, 2]]).unwrap();
        assert!(f.evaluate(&Assignment::from_bits(&[false, true])).unwrap());
    }

    #[test]
    fn evaluate_rejects_partial_assignment() {
        let f = CnfFormula::from_ints(2, &[&[1, 2]]).unwrap();
        let mut a = Assignment::new(2);
        a.set(1, true);
        assert!(matches!(f.evaluate(&a), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn out_of_range_literal_rejected() {
        assert!(CnfFormula::from_ints(2, &[&[1, 3]]).is_err());
    }

    #[test]
    fn initial_empty_clause_is_contradiction() {
        let f = CnfFormula::new(2, vec![vec![]]).unwrap();
        assert!(f.is_contradicted());
    }
}
