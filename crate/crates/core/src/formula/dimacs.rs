//! DIMACS CNF reading and writing.
//!
//! Besides the standard `p cnf <n> <m>` header and zero-terminated clauses,
//! the writer emits key-value comments:
//!
//! ```text
//! c model=proper n=200 m=840 k=3 seed=17
//! c history=4 -9 12
//! c ids=0 1 5 8
//! ```
//!
//! `history` lists the assignments already applied (as the literal made
//! true, in order) and `ids` the stable clause identifiers when they are not
//! simply `0..m`. Readers that ignore comments still see a valid CNF.

use std::io::{BufRead, Write};

use super::{Clause, CnfFormula, GenModel, Literal, Provenance};
use crate::error::{Error, Result};

pub fn write_dimacs<W: Write>(f: &CnfFormula, mut out: W) -> Result<()> {
    if let Some(p) = f.provenance() {
        writeln!(
            out,
            "c model={} n={} m={} k={} seed={}",
            p.model, p.n, p.m, p.k, p.seed
        )?;
    }
    if !f.history().is_empty() {
        let hist: Vec<String> = f.history().iter().map(|l| l.to_dimacs().to_string()).collect();
        writeln!(out, "c history={}", hist.join(" "))?;
    }
    let identity_ids = f.clauses().iter().enumerate().all(|(i, c)| c.id == i);
    if !identity_ids {
        let ids: Vec<String> = f.clauses().iter().map(|c| c.id.to_string()).collect();
        writeln!(out, "c ids={}", ids.join(" "))?;
    }
    writeln!(out, "p cnf {} {}", f.n(), f.num_clauses())?;
    for clause in f.clauses() {
        for lit in &clause.literals {
            write!(out, "{} ", lit.to_dimacs())?;
        }
        writeln!(out, "0")?;
    }
    Ok(())
}

pub fn read_dimacs<R: BufRead>(input: R) -> Result<CnfFormula> {
    let mut header: Option<(usize, usize)> = None;
    let mut provenance = ProvenanceFields::default();
    let mut history: Vec<Literal> = Vec::new();
    let mut ids: Option<Vec<usize>> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();

    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('c') {
            parse_comment(comment, lineno, &mut provenance, &mut history, &mut ids)?;
            continue;
        }
        if trimmed.starts_with('p') {
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if header.is_some() {
                return Err(parse_err(lineno, "duplicate problem line"));
            }
            if fields.len() != 4 || fields[0] != "p" || fields[1] != "cnf" {
                return Err(parse_err(lineno, "expected 'p cnf <vars> <clauses>'"));
            }
            let n = parse_num(fields[2], lineno)?;
            let m = parse_num(fields[3], lineno)?;
            header = Some((n, m));
            continue;
        }
        let (n, _) = header.ok_or_else(|| parse_err(lineno, "clause before problem line"))?;
        for tok in trimmed.split_whitespace() {
            let value: i64 = tok
                .parse()
                .map_err(|_| parse_err(lineno, &format!("bad literal '{tok}'")))?;
            if value == 0 {
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            let lit = Literal::from_dimacs(value).expect("nonzero");
            if lit.var as usize > n {
                return Err(parse_err(
                    lineno,
                    &format!("variable {} exceeds declared {}", lit.var, n),
                ));
            }
            current.push(lit);
        }
    }

    let (n, m) = header.ok_or_else(|| parse_err(0, "missing problem line"))?;
    if !current.is_empty() {
        return Err(parse_err(0, "last clause is not terminated by 0"));
    }
    if clauses.len() != m {
        return Err(parse_err(
            0,
            &format!("header declares {m} clauses, found {}", clauses.len()),
        ));
    }
    let ids = ids.unwrap_or_else(|| (0..m).collect());
    if ids.len() != m {
        return Err(parse_err(0, "ids comment does not match clause count"));
    }
    let clauses = ids
        .into_iter()
        .zip(clauses)
        .map(|(id, literals)| Clause { id, literals })
        .collect();

    let mut formula = CnfFormula::from_clauses(n, clauses)?;
    for lit in history {
        if lit.var as usize > n || !formula.alive[lit.var as usize] {
            return Err(parse_err(0, &format!("bad history entry {}", lit.to_dimacs())));
        }
        if formula.clauses.iter().any(|c| c.contains_var(lit.var)) {
            return Err(parse_err(
                0,
                &format!("history variable x{} still occurs in a clause", lit.var),
            ));
        }
        formula.alive[lit.var as usize] = false;
        formula.fixed[lit.var as usize] = Some(lit.positive);
        formula.history.push(lit);
    }
    if let Some(p) = provenance.build() {
        formula.provenance = Some(p);
    }
    Ok(formula)
}

#[derive(Default)]
struct ProvenanceFields {
    model: Option<GenModel>,
    n: Option<usize>,
    m: Option<usize>,
    k: Option<usize>,
    seed: Option<u64>,
}

impl ProvenanceFields {
    fn build(&self) -> Option<Provenance> {
        Some(Provenance {
            model: self.model?,
            n: self.n?,
            m: self.m?,
            k: self.k?,
            seed: self.seed?,
        })
    }
}

fn parse_comment(
    comment: &str,
    lineno: usize,
    prov: &mut ProvenanceFields,
    history: &mut Vec<Literal>,
    ids: &mut Option<Vec<usize>>,
) -> Result<()> {
    let comment = comment.trim();
    if let Some(rest) = comment.strip_prefix("history=") {
        for tok in rest.split_whitespace() {
            let v: i64 = tok
                .parse()
                .map_err(|_| parse_err(lineno, &format!("bad history literal '{tok}'")))?;
            history.push(
                Literal::from_dimacs(v).ok_or_else(|| parse_err(lineno, "zero in history"))?,
            );
        }
        return Ok(());
    }
    if let Some(rest) = comment.strip_prefix("ids=") {
        let parsed = rest
            .split_whitespace()
            .map(|tok| parse_num(tok, lineno))
            .collect::<Result<Vec<_>>>()?;
        *ids = Some(parsed);
        return Ok(());
    }
    if comment.starts_with("model=") {
        for field in comment.split_whitespace() {
            let Some((key, value)) = field.split_once('=') else {
                continue;
            };
            match key {
                "model" => prov.model = value.parse().ok(),
                "n" => prov.n = value.parse().ok(),
                "m" => prov.m = value.parse().ok(),
                "k" => prov.k = value.parse().ok(),
                "seed" => prov.seed = value.parse().ok(),
                _ => {}
            }
        }
    }
    Ok(())
}

fn parse_num(tok: &str, lineno: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| parse_err(lineno, &format!("expected a count, got '{tok}'")))
}

fn parse_err(line: usize, msg: &str) -> Error {
    Error::Parse {
        line,
        msg: msg.to_string(),
    }
}
