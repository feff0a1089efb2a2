use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use super::{CnfFormula, Literal, Provenance, Var};
use crate::error::{Error, Result};

/// Random formula models.
///
/// The three tuple-based models draw clauses from the `(2n)^k` ordered
/// literal tuples, so a clause may repeat a variable or be a tautology.
/// `ProperUniform` draws clauses over `k` distinct variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GenModel {
    /// `m` distinct clauses, uniform over the tuple universe.
    UniformSet,
    /// Every tuple included independently with probability `m / (2n)^k`.
    BernoulliPrime,
    /// A sequence of `m` independent uniform tuples (duplicates kept).
    SequenceDoublePrime,
    /// `m` distinct clauses over `k` distinct variables.
    ProperUniform,
}

impl GenModel {
    pub fn name(self) -> &'static str {
        match self {
            GenModel::UniformSet => "uniform-set",
            GenModel::BernoulliPrime => "bernoulli",
            GenModel::SequenceDoublePrime => "sequence",
            GenModel::ProperUniform => "proper",
        }
    }

    fn is_tuple_model(self) -> bool {
        !matches!(self, GenModel::ProperUniform)
    }
}

impl fmt::Display for GenModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GenModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform-set" | "uniformset" | "uniform" => Ok(GenModel::UniformSet),
            "bernoulli" | "bernoulliprime" => Ok(GenModel::BernoulliPrime),
            "sequence" | "sequencedoubleprime" => Ok(GenModel::SequenceDoublePrime),
            "proper" | "properuniform" => Ok(GenModel::ProperUniform),
            other => Err(Error::InvalidParameters(format!("unknown model '{other}'"))),
        }
    }
}

/// Number of possible clauses under `model`, or `None` if it overflows.
pub fn universe_size(model: GenModel, n: usize, k: usize) -> Option<u128> {
    if model.is_tuple_model() {
        (2 * n as u128).checked_pow(k as u32)
    } else {
        binomial(n as u128, k as u128)?.checked_mul(1u128.checked_shl(k as u32)?)
    }
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

/// `ceil(r n)`, treating products within `1e-9` of an integer as that
/// integer so that decimal densities such as 4.2 are not rounded up by
/// binary representation error.
pub fn clauses_for_density(r: f64, n: usize) -> usize {
    let x = r * n as f64;
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        x.ceil() as usize
    }
}

/// Generator parameters without the seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub model: GenModel,
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

impl GenParams {
    /// `m = ceil(r n)`.
    pub fn with_density(model: GenModel, n: usize, r: f64, k: usize) -> Self {
        GenParams {
            model,
            n,
            m: clauses_for_density(r, n),
            k,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<CnfFormula> {
        generate(self.model, self.n, self.m, self.k, seed)
    }

    /// Checks the parameters without drawing a formula.
    pub fn validate(&self) -> Result<()> {
        check_params(self.model, self.n, self.m, self.k)
    }
}

fn check_params(model: GenModel, n: usize, m: usize, k: usize) -> Result<()> {
    if k < 2 || n == 0 {
        return Err(Error::InvalidParameters(format!(
            "need n >= 1 and k >= 2 (got n={n}, k={k})"
        )));
    }
    if n > Var::MAX as usize / 2 {
        return Err(Error::InvalidParameters(format!("n={n} too large")));
    }
    if model == GenModel::ProperUniform && n < k {
        return Err(Error::InvalidParameters(format!(
            "proper clauses need n >= k (got n={n}, k={k})"
        )));
    }
    if model != GenModel::SequenceDoublePrime {
        if let Some(u) = universe_size(model, n, k) {
            if m as u128 > u {
                return Err(Error::InvalidParameters(format!(
                    "m={m} exceeds the {u} possible clauses of model {model}"
                )));
            }
        }
    }
    Ok(())
}

/// Draws a random formula. Identical arguments give identical formulas.
pub fn generate(model: GenModel, n: usize, m: usize, k: usize, seed: u64) -> Result<CnfFormula> {
    check_params(model, n, m, k)?;
    let universe = universe_size(model, n, k);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clauses = match model {
        GenModel::SequenceDoublePrime => (0..m).map(|_| random_tuple(&mut rng, n, k)).collect(),
        GenModel::UniformSet => {
            let mut seen = HashSet::with_capacity(m);
            let mut out = Vec::with_capacity(m);
            while out.len() < m {
                let c = random_tuple(&mut rng, n, k);
                if seen.insert(c.clone()) {
                    out.push(c);
                }
            }
            out
        }
        GenModel::ProperUniform => {
            let mut seen = HashSet::with_capacity(m);
            let mut out = Vec::with_capacity(m);
            while out.len() < m {
                let c = random_proper(&mut rng, n, k);
                if seen.insert(c.clone()) {
                    out.push(c);
                }
            }
            out
        }
        GenModel::BernoulliPrime => {
            let u = universe
                .and_then(|u| u64::try_from(u).ok())
                .ok_or_else(|| {
                    Error::InvalidParameters(format!(
                        "tuple universe (2n)^k too large for the Bernoulli model (n={n}, k={k})"
                    ))
                })?;
            bernoulli_tuples(&mut rng, n, k, m, u)
        }
    };
    let formula = CnfFormula::new(n, clauses)?;
    Ok(formula.with_provenance(Provenance {
        model,
        n,
        m,
        k,
        seed,
    }))
}

fn literal_from_code(code: u64) -> Literal {
    Literal::new((code / 2) as Var + 1, code.is_multiple_of(2))
}

fn random_tuple(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Literal> {
    (0..k)
        .map(|_| literal_from_code(rng.random_range(0..2 * n as u64)))
        .collect()
}

fn random_proper(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<Literal> {
    let mut vars: Vec<usize> = index::sample(rng, n, k).into_vec();
    vars.sort_unstable();
    vars.into_iter()
        .map(|v| Literal::new(v as Var + 1, rng.random_bool(0.5)))
        .collect()
}

/// Walks the tuple index space with geometric gaps, which is equivalent to
/// an independent coin per tuple.
fn bernoulli_tuples(
    rng: &mut ChaCha8Rng,
    n: usize,
    k: usize,
    m: usize,
    universe: u64,
) -> Vec<Vec<Literal>> {
    if m == 0 {
        return Vec::new();
    }
    let p = m as f64 / universe as f64;
    if p >= 1.0 {
        return (0..universe).map(|i| decode_tuple(i, n, k)).collect();
    }
    let gaps = Geometric::new(p).expect("0 < p < 1");
    let mut out = Vec::new();
    let mut index: u64 = 0;
    loop {
        let skip = gaps.sample(rng);
        index = match index.checked_add(skip) {
            Some(i) if i < universe => i,
            _ => break,
        };
        out.push(decode_tuple(index, n, k));
        index += 1;
    }
    out
}

fn decode_tuple(mut index: u64, n: usize, k: usize) -> Vec<Literal> {
    let base = 2 * n as u64;
    let mut lits = vec![Literal::pos(1); k];
    for slot in lits.iter_mut().rev() {
        *slot = literal_from_code(index % base);
        index /= base;
    }
    lits
}

impl CnfFormula {
    /// Number of distinct clauses (as literal sequences).
    pub fn distinct_clause_count(&self) -> usize {
        self.clauses
            .iter()
            .map(|c| &c.literals)
            .collect::<HashSet<_>>()
            .len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proper_universe_of_three_variables() {
        assert_eq!(universe_size(GenModel::ProperUniform, 3, 3), Some(8));
        let f = generate(GenModel::ProperUniform, 3, 1, 3, 11).unwrap();
        assert_eq!(f.num_clauses(), 1);
        assert_eq!(f.clauses()[0].variables(), vec![1, 2, 3]);
        let all = generate(GenModel::ProperUniform, 3, 8, 3, 5).unwrap();
        assert_eq!(all.distinct_clause_count(), 8);
        assert!(matches!(
            generate(GenModel::ProperUniform, 3, 9, 3, 5),
            Err(Error::InvalidParameters(_))
        ));
    }

    #[test]
    fn proper_requires_n_at_least_k() {
        assert!(matches!(
            generate(GenModel::ProperUniform, 2, 1, 3, 0),
            Err(Error::InvalidParameters(_))
        ));
        // tuple models do not need distinct variables
        assert!(generate(GenModel::SequenceDoublePrime, 2, 4, 3, 0).is_ok());
    }

    #[test]
    fn proper_clauses_are_proper() {
        let f = generate(GenModel::ProperUniform, 50, 200, 4, 3).unwrap();
        assert_eq!(f.num_clauses(), 200);
        assert_eq!(f.distinct_clause_count(), 200);
        for c in f.clauses() {
            assert_eq!(c.len(), 4);
            assert_eq!(c.variables().len(), 4);
            assert!(!c.is_tautology());
        }
    }

    #[test]
    fn uniform_set_is_distinct() {
        let f = generate(GenModel::UniformSet, 10, 100, 2, 9).unwrap();
        assert_eq!(f.distinct_clause_count(), 100);
        assert!(generate(GenModel::UniformSet, 3, 36, 2, 9).is_ok());
        assert!(generate(GenModel::UniformSet, 3, 37, 2, 9).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        for model in [
            GenModel::UniformSet,
            GenModel::BernoulliPrime,
            GenModel::SequenceDoublePrime,
            GenModel::ProperUniform,
        ] {
            let a = generate(model, 40, 100, 3, 77).unwrap();
            let b = generate(model, 40, 100, 3, 77).unwrap();
            assert_eq!(a, b);
            let c = generate(model, 40, 100, 3, 78).unwrap();
            assert_ne!(a.clauses(), c.clauses());
        }
    }

    #[test]
    fn decode_covers_index_space() {
        let n = 2;
        let k = 2;
        let all: HashSet<Vec<Literal>> = (0..16).map(|i| decode_tuple(i, n, k)).collect();
        assert_eq!(all.len(), 16);
    }

    #[test]
    fn sequence_model_rarely_repeats_clauses() {
        // expected number of equal pairs is about m^2 / (2 (2n)^k) = 0.006
        let mut full = 0;
        for seed in 0..200 {
            let f = generate(GenModel::SequenceDoublePrime, 200, 400, 3, seed).unwrap();
            assert_eq!(f.num_clauses(), 400);
            if f.distinct_clause_count() == 400 {
                full += 1;
            }
        }
        assert!(full >= 195, "{full}");
    }

    #[test]
    fn bernoulli_count_concentrates_on_m() {
        let seeds = 1000;
        let total: usize = (0..seeds)
            .map(|s| generate(GenModel::BernoulliPrime, 100, 400, 3, s).unwrap().num_clauses())
            .sum();
        let mean = total as f64 / seeds as f64;
        assert!((mean - 400.0).abs() <= 3.0 * 400f64.sqrt(), "mean {mean}");
    }
}
