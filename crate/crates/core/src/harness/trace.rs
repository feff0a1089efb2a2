//! Self-describing trace files.
//!
//! A trace file is a block of `#` header lines followed by the CSV written
//! by [`DecimationTrace::write_csv`]:
//!
//! ```text
//! # bpdec-trace v1
//! # formula=generated model=proper n=200 m=840 k=3 seed=17
//! # bp=fixed omega=20
//! # algorithm=bpdec policy=random contradiction=abort
//! # bias=none
//! # seed=99
//! # hash=5f1c...
//! t,var,mu,bit,branch,biased_count,n_clauses,min_len,max_len,outcome
//! 1,57,0.5,1,bp,,840,3,3,
//! ```
//!
//! A formula that was not generated is embedded as DIMACS after
//! `# formula=embedded`, one `#cnf ` line per DIMACS line. Guarded runs use
//! `# algorithm=guarded schedule=<exp:c:k:n:r|const:delta> order=<natural|random> contradiction=..`.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::bp::{BpSettings, StopRule};
use crate::decimation::{
    bpdec, bpdec_guarded, random_order, BiasTracking, ContradictionMode, DecimationConfig,
    DecimationRun, OrderPolicy, Outcome,
};
use crate::error::{Error, Result};
use crate::formula::{read_dimacs, write_dimacs, CnfFormula, GenModel, GenParams, Var};
use crate::quasirandom::DeltaSchedule;

pub const TRACE_FORMAT: &str = "bpdec-trace v1";

#[derive(Clone, Debug, PartialEq)]
pub enum FormulaSpec {
    Generated { params: GenParams, seed: u64 },
    Embedded(CnfFormula),
}

impl FormulaSpec {
    pub fn formula(&self) -> Result<CnfFormula> {
        match self {
            FormulaSpec::Generated { params, seed } => params.generate(*seed),
            FormulaSpec::Embedded(f) => Ok(f.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AlgorithmSpec {
    Bpdec {
        policy: OrderPolicy,
        contradiction: ContradictionMode,
        bias: Option<BiasTracking>,
    },
    Guarded {
        schedule: DeltaSchedule,
        /// `true` for a seeded random order, `false` for index order.
        random_order: bool,
        contradiction: ContradictionMode,
    },
}

/// Everything needed to re-run a decimation.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSpec {
    pub formula: FormulaSpec,
    pub bp: BpSettings,
    pub algorithm: AlgorithmSpec,
    pub seed: u64,
}

impl TraceSpec {
    pub fn execute(&self) -> Result<DecimationRun> {
        let f = self.formula.formula()?;
        match &self.algorithm {
            AlgorithmSpec::Bpdec {
                policy,
                contradiction,
                bias,
            } => {
                let cfg = DecimationConfig {
                    bp: self.bp,
                    policy: policy.clone(),
                    contradiction: *contradiction,
                    bias: bias.clone(),
                };
                bpdec(&f, &cfg, self.seed)
            }
            AlgorithmSpec::Guarded {
                schedule,
                random_order: random,
                contradiction,
            } => {
                let order: Vec<Var> = if *random {
                    random_order(&f, self.seed)
                } else {
                    f.alive_vars().collect()
                };
                bpdec_guarded(&f, &order, schedule, &self.bp, *contradiction, self.seed)
            }
        }
    }

    fn header(&self) -> Result<String> {
        let mut s = String::new();
        let w = |e: std::fmt::Error| Error::InvalidInput(e.to_string());
        writeln!(s, "# {TRACE_FORMAT}").map_err(w)?;
        match &self.formula {
            FormulaSpec::Generated { params, seed } => writeln!(
                s,
                "# formula=generated model={} n={} m={} k={} seed={}",
                params.model, params.n, params.m, params.k, seed
            )
            .map_err(w)?,
            FormulaSpec::Embedded(f) => {
                writeln!(s, "# formula=embedded").map_err(w)?;
                let mut buf = Vec::new();
                write_dimacs(f, &mut buf)?;
                for line in String::from_utf8_lossy(&buf).lines() {
                    writeln!(s, "#cnf {line}").map_err(w)?;
                }
            }
        }
        match self.bp.stop {
            StopRule::FixedOmega => writeln!(s, "# bp=fixed omega={}", self.bp.omega),
            StopRule::FixedPoint {
                tolerance,
                max_iter,
            } => writeln!(s, "# bp=fixedpoint tolerance={tolerance} max_iter={max_iter}"),
        }
        .map_err(w)?;
        match &self.algorithm {
            AlgorithmSpec::Bpdec {
                policy,
                contradiction,
                bias,
            } => {
                writeln!(
                    s,
                    "# algorithm=bpdec policy={} contradiction={}",
                    policy_text(policy),
                    contradiction.name()
                )
                .map_err(w)?;
                match bias {
                    None => writeln!(s, "# bias=none"),
                    Some(b) => {
                        let steps = match &b.steps {
                            None => "all".to_string(),
                            Some(v) => join(v),
                        };
                        writeln!(s, "# bias={} steps={steps}", schedule_text(&b.schedule))
                    }
                }
                .map_err(w)?;
            }
            AlgorithmSpec::Guarded {
                schedule,
                random_order,
                contradiction,
            } => writeln!(
                s,
                "# algorithm=guarded schedule={} order={} contradiction={}",
                schedule_text(schedule),
                if *random_order { "random" } else { "natural" },
                contradiction.name()
            )
            .map_err(w)?,
        }
        writeln!(s, "# seed={}", self.seed).map_err(w)?;
        Ok(s)
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn policy_text(p: &OrderPolicy) -> String {
    match p {
        OrderPolicy::Explicit(o) => format!("explicit:{}", join(o)),
        other => other.name().to_string(),
    }
}

fn schedule_text(s: &DeltaSchedule) -> String {
    match *s {
        DeltaSchedule::Exponential { c, k, n, r } => format!("exp:{c}:{k}:{n}:{r}"),
        DeltaSchedule::Constant(d) => format!("const:{d}"),
    }
}

/// A trace as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordedTrace {
    pub spec: TraceSpec,
    pub hash: String,
    /// CSV data rows, without the column header.
    pub rows: Vec<String>,
}

fn csv_rows(run: &DecimationRun) -> Result<Vec<String>> {
    let mut buf = Vec::new();
    run.trace.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(text.lines().skip(1).map(str::to_string).collect())
}

/// Runs `spec` and captures the result as a trace.
pub fn record(spec: &TraceSpec) -> Result<(DecimationRun, RecordedTrace)> {
    let run = spec.execute()?;
    let trace = RecordedTrace {
        spec: spec.clone(),
        hash: run.trace.hash(),
        rows: csv_rows(&run)?,
    };
    Ok((run, trace))
}

const CSV_HEADER: &str = "t,var,mu,bit,branch,biased_count,n_clauses,min_len,max_len,outcome";

pub fn write_trace<W: Write>(trace: &RecordedTrace, mut out: W) -> Result<()> {
    out.write_all(trace.spec.header()?.as_bytes())?;
    writeln!(out, "# hash={}", trace.hash)?;
    writeln!(out, "{CSV_HEADER}")?;
    for row in &trace.rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn fields(rest: &str, line: usize) -> Result<Vec<(&str, &str)>> {
    rest.split_whitespace()
        .map(|f| f.split_once('=').ok_or_else(|| perr(line, format!("expected key=value, got '{f}'"))))
        .collect()
}

fn get<'a>(fs: &[(&'a str, &'a str)], key: &str, line: usize) -> Result<&'a str> {
    fs.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| perr(line, format!("missing field '{key}'")))
}

fn num<T: std::str::FromStr>(fs: &[(&str, &str)], key: &str, line: usize) -> Result<T> {
    let v = get(fs, key, line)?;
    v.parse().map_err(|_| perr(line, format!("bad value for '{key}': '{v}'")))
}

fn parse_schedule(s: &str, line: usize) -> Result<DeltaSchedule> {
    let bad = || perr(line, format!("bad schedule '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["exp", c, k, n, r] => DeltaSchedule::exponential(
            c.parse().map_err(|_| bad())?,
            k.parse().map_err(|_| bad())?,
            n.parse().map_err(|_| bad())?,
            r.parse().map_err(|_| bad())?,
        )
        .map_err(|_| bad()),
        ["const", d] => Ok(DeltaSchedule::Constant(d.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

fn parse_policy(s: &str, line: usize) -> Result<OrderPolicy> {
    if let Some(list) = s.strip_prefix("explicit:") {
        let order = list
            .split(',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<Var>().map_err(|_| perr(line, format!("bad order entry '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        return Ok(OrderPolicy::Explicit(order));
    }
    s.parse().map_err(|e: Error| perr(line, e.to_string()))
}

fn parse_mode(s: &str, line: usize) -> Result<ContradictionMode> {
    s.parse().map_err(|e: Error| perr(line, e.to_string()))
}

pub fn read_trace<R: BufRead>(input: R) -> Result<RecordedTrace> {
    let mut version = false;
    let mut formula: Option<FormulaSpec> = None;
    let mut embedded: Option<String> = None;
    let mut bp: Option<BpSettings> = None;
    let mut algorithm: Option<AlgorithmSpec> = None;
    let mut bias: Option<Option<BiasTracking>> = None;
    let mut seed: Option<u64> = None;
    let mut hash: Option<String> = None;
    let mut columns = false;
    let mut rows = Vec::new();

    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let ln = i + 1;
        if let Some(cnf) = line.strip_prefix("#cnf ") {
            let buf = embedded
                .as_mut()
                .ok_or_else(|| perr(ln, "#cnf line without formula=embedded"))?;
            buf.push_str(cnf);
            buf.push('\n');
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            let h = h.trim();
            if h == TRACE_FORMAT {
                version = true;
            } else if let Some(rest) = h.strip_prefix("formula=") {
                if rest == "embedded" {
                    embedded = Some(String::new());
                } else if let Some(rest) = rest.strip_prefix("generated") {
                    let fs = fields(rest, ln)?;
                    let model: GenModel = get(&fs, "model", ln)?
                        .parse()
                        .map_err(|e: Error| perr(ln, e.to_string()))?;
                    formula = Some(FormulaSpec::Generated {
                        params: GenParams {
                            model,
                            n: num(&fs, "n", ln)?,
                            m: num(&fs, "m", ln)?,
                            k: num(&fs, "k", ln)?,
                        },
                        seed: num(&fs, "seed", ln)?,
                    });
                } else {
                    return Err(perr(ln, format!("unknown formula kind '{rest}'")));
                }
            } else if let Some(rest) = h.strip_prefix("bp=") {
                let (kind, rest) = rest.split_once(' ').unwrap_or((rest, ""));
                let fs = fields(rest, ln)?;
                bp = Some(match kind {
                    "fixed" => BpSettings::fixed(num(&fs, "omega", ln)?),
                    "fixedpoint" => {
                        let tol: f64 = num(&fs, "tolerance", ln)?;
                        if !(tol > 0.0) {
                            return Err(perr(ln, "tolerance must be positive"));
                        }
                        BpSettings::fixed_point(tol, num(&fs, "max_iter", ln)?)
                    }
                    other => return Err(perr(ln, format!("unknown bp rule '{other}'"))),
                });
            } else if let Some(rest) = h.strip_prefix("algorithm=") {
                let (kind, rest) = rest.split_once(' ').unwrap_or((rest, ""));
                let fs = fields(rest, ln)?;
                let contradiction = parse_mode(get(&fs, "contradiction", ln)?, ln)?;
                algorithm = Some(match kind {
                    "bpdec" => AlgorithmSpec::Bpdec {
                        policy: parse_policy(get(&fs, "policy", ln)?, ln)?,
                        contradiction,
                        bias: None,
                    },
                    "guarded" => AlgorithmSpec::Guarded {
                        schedule: parse_schedule(get(&fs, "schedule", ln)?, ln)?,
                        random_order: match get(&fs, "order", ln)? {
                            "random" => true,
                            "natural" => false,
                            o => return Err(perr(ln, format!("unknown order '{o}'"))),
                        },
                        contradiction,
                    },
                    other => return Err(perr(ln, format!("unknown algorithm '{other}'"))),
                });
            } else if let Some(rest) = h.strip_prefix("bias=") {
                bias = Some(if rest == "none" {
                    None
                } else {
                    let (sched, rest) = rest.split_once(' ').unwrap_or((rest, ""));
                    let fs = fields(rest, ln)?;
                    let steps = match get(&fs, "steps", ln)? {
                        "all" => None,
                        list => Some(
                            list.split(',')
                                .filter(|t| !t.is_empty())
                                .map(|t| t.parse().map_err(|_| perr(ln, format!("bad step '{t}'"))))
                                .collect::<Result<Vec<usize>>>()?,
                        ),
                    };
                    Some(BiasTracking {
                        schedule: parse_schedule(sched, ln)?,
                        steps,
                    })
                });
            } else if let Some(rest) = h.strip_prefix("seed=") {
                seed = Some(rest.parse().map_err(|_| perr(ln, format!("bad seed '{rest}'")))?);
            } else if let Some(rest) = h.strip_prefix("hash=") {
                hash = Some(rest.to_string());
            } else {
                return Err(perr(ln, format!("unknown header line '#{h}'")));
            }
            continue;
        }
        if !columns {
            if line.trim() != CSV_HEADER {
                return Err(perr(ln, "expected the trace column header"));
            }
            columns = true;
            continue;
        }
        if !line.trim().is_empty() {
            rows.push(line);
        }
    }

    if !version {
        return Err(perr(0, format!("missing '# {TRACE_FORMAT}' line")));
    }
    if let Some(text) = embedded {
        formula = Some(FormulaSpec::Embedded(read_dimacs(text.as_bytes())?));
    }
    let mut algorithm = algorithm.ok_or_else(|| perr(0, "missing algorithm line"))?;
    if let AlgorithmSpec::Bpdec { bias: b, .. } = &mut algorithm {
        *b = bias.ok_or_else(|| perr(0, "missing bias line"))?;
    }
    if !columns {
        return Err(perr(0, "missing trace column header"));
    }
    Ok(RecordedTrace {
        spec: TraceSpec {
            formula: formula.ok_or_else(|| perr(0, "missing formula line"))?,
            bp: bp.ok_or_else(|| perr(0, "missing bp line"))?,
            algorithm,
            seed: seed.ok_or_else(|| perr(0, "missing seed line"))?,
        },
        hash: hash.ok_or_else(|| perr(0, "missing hash line"))?,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayReport {
    pub steps: usize,
    pub outcome: Outcome,
    pub hash: String,
}

/// Re-runs a recorded trace and checks it row by row. The first differing
/// step is reported as [`Error::Reproducibility`]; step 0 means only the
/// hash differs.
pub fn replay_trace(recorded: &RecordedTrace) -> Result<ReplayReport> {
    let (run, fresh) = record(&recorded.spec)?;
    let common = fresh.rows.len().min(recorded.rows.len());
    for i in 0..common {
        if fresh.rows[i] != recorded.rows[i] {
            return Err(Error::Reproducibility {
                step: i + 1,
                detail: format!("recorded '{}', replayed '{}'", recorded.rows[i], fresh.rows[i]),
            });
        }
    }
    if fresh.rows.len() != recorded.rows.len() {
        return Err(Error::Reproducibility {
            step: common + 1,
            detail: format!(
                "recorded {} steps, replayed {}",
                recorded.rows.len(),
                fresh.rows.len()
            ),
        });
    }
    if fresh.hash != recorded.hash {
        return Err(Error::Reproducibility {
            step: 0,
            detail: format!("recorded hash {}, replayed {}", recorded.hash, fresh.hash),
        });
    }
    Ok(ReplayReport {
        steps: run.trace.steps.len(),
        outcome: run.trace.outcome,
        hash: fresh.hash,
    })
}

pub fn replay_reader<R: BufRead>(input: R) -> Result<ReplayReport> {
    replay_trace(&read_trace(input)?)
}

pub fn replay(path: &Path) -> Result<ReplayReport> {
    replay_reader(BufReader::new(std::fs::File::open(path)?))
}
