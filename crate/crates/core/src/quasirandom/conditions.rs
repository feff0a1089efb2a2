//! Checkers for Q0 to Q4 at fixed `n`.
//!
//! The asymptotic `o(n)` in Q0 is instantiated as `n / ln n`; every other
//! threshold is the displayed constant. `n − t` is the number of alive
//! variables.

use std::io::Write;

use super::cutnorm::{
    cutnorm_bound, cutnorm_exact, cutnorm_lower_sampled, lambda_q, BoundMode, LambdaWeight,
    EXACT_MAX_DIM,
};
use super::{clauses_of, n_leq1, q_hits, LengthWindow, VarSet};
use crate::error::{Error, Result};
use crate::factor_graph::FactorGraph;
use crate::formula::CnfFormula;

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub name: &'static str,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Measurement {
    fn at_most(name: &'static str, measured: f64, threshold: f64) -> Self {
        Measurement {
            name,
            measured,
            threshold,
            pass: measured <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub condition: &'static str,
    pub parameters: String,
    pub measurements: Vec<Measurement>,
}

impl ConditionReport {
    pub fn pass(&self) -> bool {
        self.measurements.iter().all(|m| m.pass)
    }
}

/// One CSV line per measurement:
/// `condition,parameters,measured,threshold,verdict`.
pub fn write_reports_csv<W: Write>(reports: &[ConditionReport], mut out: W) -> Result<()> {
    writeln!(out, "condition,parameters,measured,threshold,verdict")?;
    for r in reports {
        for m in &r.measurements {
            writeln!(
                out,
                "{}:{},{},{},{},{}",
                r.condition,
                m.name,
                r.parameters,
                m.measured,
                m.threshold,
                if m.pass { "pass" } else { "fail" }
            )?;
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Q0Thresholds {
    pub redundant: f64,
    pub high_degree: f64,
    /// A variable is high-degree when it occurs in more than this many
    /// clauses.
    pub degree_cap: f64,
}

impl Q0Thresholds {
    pub fn for_n(n: usize) -> Self {
        let ln = (n.max(2) as f64).ln();
        Q0Thresholds {
            redundant: n as f64 / ln,
            high_degree: n as f64 / ln,
            degree_cap: ln,
        }
    }
}

pub fn check_q0(f: &CnfFormula, thresholds: Option<Q0Thresholds>) -> ConditionReport {
    let th = thresholds.unwrap_or_else(|| Q0Thresholds::for_n(f.n()));
    let g = FactorGraph::build(f);
    let redundant = f.redundant_clauses().count();
    let high = g
        .alive_vars()
        .filter(|&x| clauses_of(&g, x).len() as f64 > th.degree_cap)
        .count();
    ConditionReport {
        condition: "Q0",
        parameters: format!("n={} degree_cap={:.4}", f.n(), th.degree_cap),
        measurements: vec![
            Measurement::at_most("redundant_clauses", redundant as f64, th.redundant),
            Measurement::at_most("high_degree_vars", high as f64, th.high_degree),
        ],
    }
}

fn weight(len: usize) -> f64 {
    2f64.powi(-(len as i32))
}

fn check_delta(delta: f64, theta: f64) -> Result<()> {
    if !(delta > 0.0) || !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidParameters(format!(
            "need delta > 0 and 0 <= theta <= 1 (got delta={delta}, theta={theta})"
        )));
    }
    Ok(())
}

fn check_q_alive(f: &CnfFormula, q: &VarSet) -> Result<()> {
    if let Some(x) = q.iter().find(|&x| !f.is_alive(x)) {
        return Err(Error::InvalidInput(format!("Q contains assigned variable x{x}")));
    }
    Ok(())
}

pub fn check_q1(f: &CnfFormula, delta: f64, theta: f64, k: usize) -> Result<ConditionReport> {
    check_delta(delta, theta)?;
    let g = FactorGraph::build(f);
    let window = LengthWindow::new(theta, k);
    let free = f.num_alive() as f64;
    let tk = theta * k as f64;
    let mut off_window = 0usize;
    let mut heavy = 0usize;
    for x in g.alive_vars() {
        let cl = clauses_of(&g, x);
        if cl.iter().any(|&a| !window.contains(g.clause_len(a))) {
            off_window += 1;
        }
        let w: f64 = cl.iter().map(|&a| weight(g.clause_len(a))).sum();
        if tk.powi(3) * delta * w > 1.0 {
            heavy += 1;
        }
    }
    Ok(ConditionReport {
        condition: "Q1",
        parameters: format!("delta={delta} theta={theta} k={k}"),
        measurements: vec![
            Measurement::at_most("off_window_vars", off_window as f64, 1e-5 * delta * free),
            Measurement::at_most("heavy_vars", heavy as f64, 1e-4 * delta * free),
        ],
    })
}

pub fn check_q2(f: &CnfFormula, delta: f64, theta: f64, k: usize, q: &VarSet) -> Result<ConditionReport> {
    check_delta(delta, theta)?;
    check_q_alive(f, q)?;
    let free = f.num_alive() as f64;
    let hi = delta * free;
    if q.len() as f64 > hi {
        return Err(Error::WindowViolation {
            size: q.len(),
            lo: 0.0,
            hi,
        });
    }
    let g = FactorGraph::build(f);
    let window = LengthWindow::new(theta, k);
    let tk = theta * k as f64;
    let (mut bad1, mut bad2, mut bad3, mut bad) = (0usize, 0usize, 0usize, 0usize);
    for x in g.alive_vars() {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for a in clauses_of(&g, x) {
            let len = g.clause_len(a);
            match q_hits(&g, a, q, Some(x)) {
                0 => {}
                1 => s1 += weight(len),
                h => s2 += 2f64.powi(h as i32 - len as i32),
            }
        }
        let s3: f64 = n_leq1(&g, x, q, window)
            .into_iter()
            .map(|a| {
                let w = weight(g.clause_len(a));
                g.clause_adj(a)
                    .filter(|&(v, _)| v == x)
                    .map(|(_, s)| f64::from(s) * w)
                    .sum::<f64>()
            })
            .sum();
        let f1 = s1 > tk.powi(5) * delta;
        let f2 = s2 > delta / tk;
        let f3 = s3.abs() > delta / 1000.0;
        bad1 += f1 as usize;
        bad2 += f2 as usize;
        bad3 += f3 as usize;
        bad += (f1 || f2 || f3) as usize;
    }
    let cap = 1e-4 * delta * free;
    Ok(ConditionReport {
        condition: "Q2",
        parameters: format!("delta={delta} theta={theta} k={k} q={}", q.len()),
        measurements: vec![
            Measurement::at_most("bad_vars", bad as f64, cap),
            Measurement::at_most("single_hit_sum_vars", bad1 as f64, cap),
            Measurement::at_most("multi_hit_sum_vars", bad2 as f64, cap),
            Measurement::at_most("sign_sum_vars", bad3 as f64, cap),
        ],
    })
}

pub fn check_q3(f: &CnfFormula, delta: f64, q: &VarSet, z: f64) -> Result<ConditionReport> {
    if !(0.01..=1.0).contains(&z) {
        return Err(Error::InvalidParameters(format!("z={z} outside [0.01, 1]")));
    }
    check_delta(delta, 1.0)?;
    check_q_alive(f, q)?;
    let free = f.num_alive() as f64;
    let (lo, hi) = (0.01 * delta * free, 100.0 * delta * free);
    let size = q.len() as f64;
    if size < lo || size > hi {
        return Err(Error::WindowViolation {
            size: q.len(),
            lo,
            hi,
        });
    }
    let g = FactorGraph::build(f);
    let total: usize = (0..g.num_clauses())
        .filter(|&a| q_hits(&g, a, q, None) as f64 >= z * g.clause_len(a) as f64)
        .map(|a| g.clause_len(a))
        .sum();
    Ok(ConditionReport {
        condition: "Q3",
        parameters: format!("delta={delta} z={z} q={}", q.len()),
        measurements: vec![Measurement::at_most("heavy_clause_length", total as f64, 1.01 * size / z)],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Q4Verdict {
    ProvedAtMost,
    ProvedAbove,
    Inconclusive,
}

impl Q4Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Q4Verdict::ProvedAtMost => "proved<=",
            Q4Verdict::ProvedAbove => "proved>",
            Q4Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Q4Report {
    pub dim: usize,
    pub threshold: f64,
    /// Certified lower bound on the cut norm.
    pub lower: f64,
    /// Certified upper bound on the cut norm.
    pub upper: f64,
    pub exact: bool,
    pub verdict: Q4Verdict,
}

impl Q4Report {
    pub fn to_report(&self, parameters: String) -> ConditionReport {
        ConditionReport {
            condition: "Q4",
            parameters: format!("{parameters} dim={} verdict={}", self.dim, self.verdict.as_str()),
            measurements: vec![
                Measurement::at_most("cutnorm_upper", self.upper, self.threshold),
                Measurement {
                    name: "cutnorm_lower",
                    measured: self.lower,
                    threshold: self.threshold,
                    pass: self.lower <= self.threshold,
                },
            ],
        }
    }
}

/// Compares `⫿Λ_Q⫿` with `δ⁴ (n − t)`.
///
/// Up to [`EXACT_MAX_DIM`] alive variables the norm is computed exactly.
/// Beyond that the upper bound is `Σ |Λ_xy|` and the lower bound the best of
/// locally improved random sign vectors and sampled `|⟨Λ 1_A, 1_B⟩|`; the
/// verdict is conclusive only when one of them clears the threshold.
#[allow(clippy::too_many_arguments)]
pub fn check_q4(
    f: &CnfFormula,
    delta: f64,
    theta: f64,
    k: usize,
    q: &VarSet,
    weight: LambdaWeight,
    samples: usize,
    seed: u64,
) -> Result<Q4Report> {
    check_delta(delta, theta)?;
    check_q_alive(f, q)?;
    let free = f.num_alive() as f64;
    let hi = 10.0 * delta * free;
    if q.len() as f64 > hi {
        return Err(Error::WindowViolation {
            size: q.len(),
            lo: 0.0,
            hi,
        });
    }
    let g = FactorGraph::build(f);
    let l = lambda_q(&g, q, LengthWindow::new(theta, k), weight);
    let threshold = delta.powi(4) * free;
    let dim = l.dim();
    let (lower, upper, exact) = if dim <= EXACT_MAX_DIM {
        let v = cutnorm_exact(&l)?;
        (v, v, true)
    } else {
        let sampled = cutnorm_bound(&l, BoundMode::Sampled { count: samples, seed })?;
        let lower = cutnorm_lower_sampled(&l, samples, seed ^ 1).max(sampled.max_bilinear);
        (lower, l.entry_sum(), false)
    };
    let verdict = if upper <= threshold {
        Q4Verdict::ProvedAtMost
    } else if lower > threshold {
        Q4Verdict::ProvedAbove
    } else {
        Q4Verdict::Inconclusive
    };
    Ok(Q4Report {
        dim,
        threshold,
        lower,
        upper,
        exact,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q0_on_variable_disjoint_formula() {
        let f = CnfFormula::from_ints(9, &[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]).unwrap();
        let r = check_q0(&f, None);
        assert_eq!(r.measurements[0].measured, 0.0);
        assert!(r.pass());
    }

    #[test]
    fn q2_with_empty_q() {
        // x1 occurs positively in two clauses of length 2, negatively in one
        let f = CnfFormula::from_ints(4, &[&[1, 2], &[1, 3], &[-1, 4]]).unwrap();
        let r = check_q2(&f, 0.5, 1.0, 2, &VarSet::empty(4)).unwrap();
        // sign sum for x1 = 1/4 + 1/4 − 1/4 = 1/4 > 0.5/1000
        assert!(r.measurements[3].measured >= 1.0);
        assert_eq!(r.measurements[1].measured, 0.0);
        assert_eq!(r.measurements[2].measured, 0.0);
    }

    #[test]
    fn q2_refuses_large_q() {
        let f = CnfFormula::from_ints(4, &[&[1, 2]]).unwrap();
        let q = VarSet::from_vars(4, &[1, 2, 3]);
        assert!(matches!(
            check_q2(&f, 0.5, 1.0, 2, &q),
            Err(Error::WindowViolation { size: 3, .. })
        ));
    }

    #[test]
    fn q3_single_clause() {
        let f = CnfFormula::from_ints(6, &[&[1, 2, 3], &[4, 5]]).unwrap();
        let q = VarSet::from_vars(6, &[1, 2, 3]);
        let r = check_q3(&f, 0.5, &q, 1.0).unwrap();
        assert_eq!(r.measurements[0].measured, 3.0);
        assert!(r.pass());
        assert!(check_q3(&f, 0.5, &q, 2.0).is_err());
        assert!(matches!(
            check_q3(&f, 0.001, &q, 1.0),
            Err(Error::WindowViolation { .. })
        ));
    }

    #[test]
    fn q4_small_is_exact() {
        let f = CnfFormula::from_ints(3, &[&[1, 2], &[-2, 3]]).unwrap();
        let r = check_q4(&f, 0.9, 1.0, 2, &VarSet::empty(3), LambdaWeight::Half, 10, 0).unwrap();
        assert!(r.exact);
        assert_eq!(r.lower, r.upper);
        // Λ has entries ±1/4 on (1,2),(2,1),(2,3),(3,2); best ζ gives 1/4+1/2+1/4
        assert_eq!(r.upper, 1.0);
        // threshold 0.9^4 * 3 = 1.9683
        assert_eq!(r.verdict, Q4Verdict::ProvedAtMost);
        let r = check_q4(&f, 0.5, 1.0, 2, &VarSet::empty(3), LambdaWeight::Half, 10, 0).unwrap();
        assert_eq!(r.verdict, Q4Verdict::ProvedAbove);
    }

    #[test]
    fn csv_has_one_line_per_measurement() {
        let f = CnfFormula::from_ints(3, &[&[1, 2, 3]]).unwrap();
        let reports = vec![check_q0(&f, None), check_q1(&f, 0.5, 1.0, 3).unwrap()];
        let mut buf = Vec::new();
        write_reports_csv(&reports, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
