use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use super::config::{Density, ExperimentConfig};
use crate::decimation::{bpdec, trial_seed, BiasTracking, DecimationConfig, FormulaSource, SuccessEstimate};
use crate::error::{Error, Result};
use crate::formula::GenParams;
use crate::quasirandom::DeltaSchedule;
use crate::seeds;

pub const SCHEMA_VERSION: u32 = 1;

/// Cross product of densities, clause lengths and sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub densities: Vec<Density>,
    pub ks: Vec<usize>,
    pub ns: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPoint {
    pub k: usize,
    pub n: usize,
    pub density: Density,
}

impl SweepGrid {
    pub fn new(densities: Vec<Density>, ks: Vec<usize>, ns: Vec<usize>) -> Result<Self> {
        if densities.is_empty() || ks.is_empty() || ns.is_empty() {
            return Err(Error::Config("sweep grid lists must be nonempty".into()));
        }
        Ok(SweepGrid { densities, ks, ns })
    }

    pub fn ratios(rs: &[f64], ks: &[usize], ns: &[usize]) -> Result<Self> {
        SweepGrid::new(rs.iter().map(|&r| Density::Ratio(r)).collect(), ks.to_vec(), ns.to_vec())
    }

    /// The single point of `cfg`.
    pub fn single(cfg: &ExperimentConfig) -> Self {
        SweepGrid {
            densities: vec![cfg.density],
            ks: vec![cfg.k],
            ns: vec![cfg.n],
        }
    }

    /// Reads comma-separated `r` (or `m`), `k` and `n` lists, falling back
    /// to the values in `cfg`.
    pub fn from_kv(map: &BTreeMap<String, String>, cfg: &ExperimentConfig) -> Result<Self> {
        fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad value in {key} list: '{s}'")))
                })
                .collect()
        }
        let densities = if let Some(v) = map.get("r") {
            list::<f64>("r", v)?.into_iter().map(Density::Ratio).collect()
        } else if let Some(v) = map.get("m") {
            list::<usize>("m", v)?.into_iter().map(Density::Clauses).collect()
        } else {
            vec![cfg.density]
        };
        let ks = map.get("k").map_or(Ok(vec![cfg.k]), |v| list("k", v))?;
        let ns = map.get("n").map_or(Ok(vec![cfg.n]), |v| list("n", v))?;
        SweepGrid::new(densities, ks, ns)
    }

    /// Points in row order: `k`, then `n`, then density.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &k in &self.ks {
            for &n in &self.ns {
                for &density in &self.densities {
                    out.push(GridPoint { k, n, density });
                }
            }
        }
        out
    }
}

/// Seed of a grid point; depends only on the master seed and the point.
pub fn point_seed(master: u64, p: &GridPoint) -> u64 {
    seeds::derive(master, &[p.k as u64, p.n as u64, p.density.seed_label()])
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub point: usize,
    pub trial: usize,
    pub trial_seed: u64,
    pub success: bool,
    pub outcome: String,
    pub steps: usize,
    pub contradiction_t: Option<usize>,
    /// Biased fraction at `floor(T/2)` and `floor(T)` when the trial got
    /// there.
    pub biased_half: Option<f64>,
    pub biased_end: Option<f64>,
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub k: usize,
    pub n: usize,
    pub r: f64,
    pub m: usize,
    pub omega: usize,
    pub c: f64,
    pub policy: String,
    pub contradiction: String,
    pub master_seed: u64,
    pub point_seed: u64,
    pub t_half: Option<usize>,
    pub t_end: Option<usize>,
    pub estimate: SuccessEstimate,
    pub mean_biased_half: Option<f64>,
    pub n_biased_half: usize,
    pub mean_biased_end: Option<f64>,
    pub n_biased_end: usize,
    pub mean_contradiction_t: Option<f64>,
    pub n_contradictions: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SummaryRow>,
    pub trials: Vec<TrialRow>,
}

/// Mean in the given order, so it can be recomputed exactly from the rows.
fn mean(values: impl Iterator<Item = f64>) -> (Option<f64>, usize) {
    let mut sum = 0.0;
    let mut count = 0;
    for v in values {
        sum += v;
        count += 1;
    }
    ((count > 0).then(|| sum / count as f64), count)
}

/// Bias checkpoints `floor(T/2)` and `floor(T)`, clamped to `1..=n`; `None`
/// when `T < 1`.
fn checkpoints(sched: &DeltaSchedule, n: usize) -> (Option<usize>, Option<usize>) {
    let horizon = sched.horizon().unwrap_or(n as f64);
    let at = |x: f64| (x >= 1.0).then(|| (x.floor() as usize).min(n));
    (at(horizon / 2.0), at(horizon))
}

pub fn run_sweep(cfg: &ExperimentConfig, grid: &SweepGrid) -> Result<SweepResult> {
    cfg.validate()?;
    let points = grid.points();
    let mut jobs = Vec::new();
    let mut prepared = Vec::new();
    for (pi, p) in points.iter().enumerate() {
        let params = GenParams {
            model: cfg.model,
            n: p.n,
            m: p.density.clauses(p.n),
            k: p.k,
        };
        params.validate().map_err(|e| Error::Config(e.to_string()))?;
        let r = p.density.ratio(p.n);
        let sched = DeltaSchedule::exponential(cfg.c, p.k, p.n, r).map_err(|e| Error::Config(e.to_string()))?;
        let (t_half, t_end) = checkpoints(&sched, p.n);
        let dcfg = DecimationConfig {
            bp: cfg.bp_settings(p.n),
            policy: cfg.policy.clone(),
            contradiction: cfg.contradiction,
            bias: Some(BiasTracking {
                schedule: sched,
                steps: Some(t_half.into_iter().chain(t_end).collect()),
            }),
        };
        let seed = point_seed(cfg.seed, p);
        for trial in 0..cfg.trials {
            jobs.push((pi, trial));
        }
        prepared.push((params, dcfg, seed, r, t_half, t_end));
    }

    let work = || -> Result<Vec<TrialRow>> {
        jobs.par_iter()
            .map(|&(pi, trial)| {
                let (params, dcfg, seed, _, t_half, t_end) = &prepared[pi];
                let ts = trial_seed(*seed, trial);
                let f = FormulaSource::Random(*params).formula(ts)?;
                let run = bpdec(&f, dcfg, seeds::derive(ts, &[seeds::STREAM_ALGO]))?;
                let frac = |t: Option<usize>| {
                    let s = run.trace.steps.get(t? - 1)?;
                    Some(s.biased_count? as f64 / s.alive as f64)
                };
                Ok(TrialRow {
                    point: pi,
                    trial,
                    trial_seed: ts,
                    success: run.trace.outcome.is_success(),
                    outcome: run.trace.outcome.label(),
                    steps: run.trace.steps.len(),
                    contradiction_t: run.trace.first_contradiction,
                    biased_half: frac(*t_half),
                    biased_end: frac(*t_end),
                    hash: run.trace.hash(),
                })
            })
            .collect()
    };
    let trials = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let rows = points
        .iter()
        .enumerate()
        .map(|(pi, p)| {
            let (params, dcfg, seed, r, t_half, t_end) = &prepared[pi];
            let mine: Vec<&TrialRow> = trials.iter().filter(|t| t.point == pi).collect();
            let successes = mine.iter().filter(|t| t.success).count();
            let (mean_biased_half, n_biased_half) = mean(mine.iter().filter_map(|t| t.biased_half));
            let (mean_biased_end, n_biased_end) = mean(mine.iter().filter_map(|t| t.biased_end));
            let (mean_contradiction_t, n_contradictions) =
                mean(mine.iter().filter_map(|t| t.contradiction_t.map(|c| c as f64)));
            SummaryRow {
                k: p.k,
                n: p.n,
                r: *r,
                m: params.m,
                omega: dcfg.bp.omega,
                c: cfg.c,
                policy: cfg.policy.name().into(),
                contradiction: cfg.contradiction.name().into(),
                master_seed: cfg.seed,
                point_seed: *seed,
                t_half: *t_half,
                t_end: *t_end,
                estimate: SuccessEstimate::from_counts(successes, mine.len()),
                mean_biased_half,
                n_biased_half,
                mean_biased_end,
                n_biased_end,
                mean_contradiction_t,
                n_contradictions,
            }
        })
        .collect();
    Ok(SweepResult { rows, trials })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

pub fn write_summary_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    writeln!(out, "# bpdec sweep summary schema={SCHEMA_VERSION}")?;
    writeln!(
        out,
        "k,n,r,m,omega,c,policy,contradiction,seed,point_seed,trials,successes,rate,ci_low,ci_high,\
         t_half,mean_biased_half,n_biased_half,t_end,mean_biased_end,n_biased_end,\
         mean_contradiction_t,n_contradictions"
    )?;
    for r in &result.rows {
        let e = &r.estimate;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.n,
            r.r,
            r.m,
            r.omega,
            r.c,
            r.policy,
            r.contradiction,
            r.master_seed,
            r.point_seed,
            e.trials,
            e.successes,
            e.rate,
            e.ci_low,
            e.ci_high,
            opt(r.t_half),
            opt(r.mean_biased_half),
            r.n_biased_half,
            opt(r.t_end),
            opt(r.mean_biased_end),
            r.n_biased_end,
            opt(r.mean_contradiction_t),
            r.n_contradictions
        )?;
    }
    Ok(())
}

pub fn write_trials_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    writeln!(out, "# bpdec sweep trials schema={SCHEMA_VERSION}")?;
    writeln!(
        out,
        "k,n,r,m,trial,trial_seed,success,outcome,steps,contradiction_t,biased_half,biased_end,hash"
    )?;
    for t in &result.trials {
        let p = &result.rows[t.point];
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.k,
            p.n,
            p.r,
            p.m,
            t.trial,
            t.trial_seed,
            t.success as u8,
            t.outcome,
            t.steps,
            opt(t.contradiction_t),
            opt(t.biased_half),
            opt(t.biased_end),
            t.hash
        )?;
    }
    Ok(())
}
