use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bpdec_core::decimation::{bpdec, random_order, BiasTracking, DecimationConfig};
use bpdec_core::error::{Error, Result};
use bpdec_core::exact::{hypothesis_probe, write_probe_csv};
use bpdec_core::formula::{read_dimacs, write_dimacs, CnfFormula};
use bpdec_core::harness::{
    parse_kv, record, replay, run_sweep, write_summary_csv, write_trace, write_trials_csv,
    AlgorithmSpec, ExperimentConfig, FormulaSpec, Probe, SweepGrid, TraceSpec,
};
use bpdec_core::quasirandom::{
    bias_report, check_q0, check_q1, check_q2, check_q3, check_q4, is_balanced, theta_of, write_reports_csv, DeltaSchedule,
    LambdaWeight, VarSet,
};
use bpdec_core::seeds;

#[derive(Parser)]
#[command(name = "bpdec", version, about = "BP guided decimation experiments on random k-SAT")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random formula in DIMACS format.
    Generate(ExpArgs),
    /// Run one decimation and write a replayable trace.
    Run(RunArgs),
    /// Estimate success rates over a grid of (k, n, r) points.
    Sweep(ExpArgs),
    /// Re-run a trace file and check that it reproduces.
    Replay { trace: PathBuf },
    /// Diagnostics on a single formula.
    Probe(ExpArgs),
}

/// Flags mirror the keys of the `--config` file; flags win.
#[derive(Args, Default)]
struct ExpArgs {
    /// Flat `key=value` file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<String>,
    /// Clause length; comma-separated for sweeps.
    #[arg(long)]
    k: Option<String>,
    /// Number of variables; comma-separated for sweeps.
    #[arg(long)]
    n: Option<String>,
    /// Clause density, `m = ceil(r n)`; comma-separated for sweeps.
    #[arg(long, conflicts_with = "m")]
    r: Option<String>,
    /// Number of clauses; comma-separated for sweeps.
    #[arg(long)]
    m: Option<String>,
    /// BP iterations (default `10 ceil(ln n)`).
    #[arg(long)]
    omega: Option<String>,
    /// `fixed` or `fixedpoint`.
    #[arg(long)]
    stop: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    /// `natural`, `random` or `maxbias`.
    #[arg(long)]
    policy: Option<String>,
    /// `abort` or `continue`.
    #[arg(long)]
    contradiction: Option<String>,
    /// Bias schedule constant.
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output file (directory for `sweep`); stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long, value_parser = ["bias", "q", "hypothesis"])]
    probe: Option<String>,
    /// Largest variable count for exact enumeration.
    #[arg(long)]
    budget: Option<String>,
    /// Read the formula from a DIMACS file instead of generating it.
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Bpdec,
    Guarded,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    exp: ExpArgs,
    #[arg(long, value_enum, default_value = "bpdec")]
    algorithm: Algorithm,
    /// Constant bias threshold for `guarded` (`inf` or `0` for the
    /// degenerate cases); the exponential schedule otherwise.
    #[arg(long)]
    delta: Option<f64>,
}

impl ExpArgs {
    fn map(&self) -> Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(p) => parse_kv(&std::fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("model", &self.model),
            ("k", &self.k),
            ("n", &self.n),
            ("r", &self.r),
            ("m", &self.m),
            ("omega", &self.omega),
            ("stop", &self.stop),
            ("tolerance", &self.tolerance),
            ("policy", &self.policy),
            ("contradiction", &self.contradiction),
            ("c", &self.c),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("out", &self.out),
            ("jobs", &self.jobs),
            ("probe", &self.probe),
            ("budget", &self.budget),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                match key {
                    "r" => map.remove("m"),
                    "m" => map.remove("r"),
                    _ => None,
                };
                map.insert(key.to_string(), v.clone());
            }
        }
        Ok(map)
    }

    fn config(&self) -> Result<(ExperimentConfig, BTreeMap<String, String>)> {
        let map = self.map()?;
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&map)?;
        cfg.validate()?;
        Ok((cfg, map))
    }

    fn formula(&self, cfg: &ExperimentConfig) -> Result<FormulaSpec> {
        match &self.input {
            Some(p) => Ok(FormulaSpec::Embedded(read_dimacs(BufReader::new(File::open(p)?))?)),
            None => Ok(FormulaSpec::Generated {
                params: cfg.gen_params(),
                seed: seeds::derive(cfg.seed, &[seeds::STREAM_FORMULA]),
            }),
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn schedule(cfg: &ExperimentConfig, f: &CnfFormula) -> Result<DeltaSchedule> {
    let r = f.num_clauses() as f64 / f.n() as f64;
    DeltaSchedule::exponential(cfg.c, cfg.k, f.n(), r.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::Config(e.to_string()))
}

fn generate(args: &ExpArgs) -> Result<()> {
    let (cfg, _) = args.config()?;
    let f = args.formula(&cfg)?.formula()?;
    let mut out = output(cfg.out.as_deref())?;
    write_dimacs(&f, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let (cfg, _) = args.exp.config()?;
    let formula = args.exp.formula(&cfg)?;
    let f = formula.formula()?;
    let bp = cfg.bp_settings(f.n());
    let algorithm = match args.algorithm {
        Algorithm::Bpdec => AlgorithmSpec::Bpdec {
            policy: cfg.policy.clone(),
            contradiction: cfg.contradiction,
            bias: None,
        },
        Algorithm::Guarded => AlgorithmSpec::Guarded {
            schedule: match args.delta {
                Some(d) => DeltaSchedule::Constant(d),
                None => schedule(&cfg, &f)?,
            },
            random_order: match cfg.policy.name() {
                "random" => true,
                "natural" => false,
                other => {
                    return Err(Error::Config(format!(
                        "guarded decimation needs policy natural or random, got {other}"
                    )))
                }
            },
            contradiction: cfg.contradiction,
        },
    };
    let spec = TraceSpec {
        formula,
        bp,
        algorithm,
        seed: seeds::derive(cfg.seed, &[seeds::STREAM_ALGO]),
    };
    let (run, trace) = record(&spec)?;
    let mut out = output(cfg.out.as_deref())?;
    write_trace(&trace, &mut out)?;
    out.flush()?;
    eprintln!(
        "outcome={} steps={} hash={}",
        run.trace.outcome.label(),
        run.trace.steps.len(),
        trace.hash
    );
    Ok(())
}

fn sweep(args: &ExpArgs) -> Result<()> {
    let (cfg, map) = args.config()?;
    let grid = SweepGrid::from_kv(&map, &cfg)?;
    let result = run_sweep(&cfg, &grid)?;
    match &cfg.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut s = BufWriter::new(File::create(dir.join("summary.csv"))?);
            write_summary_csv(&result, &mut s)?;
            s.flush()?;
            let mut t = BufWriter::new(File::create(dir.join("trials.csv"))?);
            write_trials_csv(&result, &mut t)?;
            t.flush()?;
        }
        None => {
            let mut out = output(None)?;
            write_summary_csv(&result, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn probe(args: &ExpArgs) -> Result<()> {
    let (cfg, _) = args.config()?;
    let kind = cfg
        .probe
        .ok_or_else(|| Error::Config("probe needs --probe bias|q|hypothesis".into()))?;
    let f = args.formula(&cfg)?.formula()?;
    let algo_seed = seeds::derive(cfg.seed, &[seeds::STREAM_ALGO]);
    let mut out = output(cfg.out.as_deref())?;
    match kind {
        Probe::Bias => {
            let sched = schedule(&cfg, &f)?;
            let dcfg = DecimationConfig {
                bp: cfg.bp_settings(f.n()),
                policy: cfg.policy.clone(),
                contradiction: cfg.contradiction,
                bias: Some(BiasTracking {
                    schedule: sched,
                    steps: None,
                }),
            };
            let run = bpdec(&f, &dcfg, algo_seed)?;
            writeln!(out, "t,delta,biased,unassigned,biased_fraction,balanced")?;
            for s in &run.trace.steps {
                let time = f.t() + s.t;
                let delta = sched.delta(time);
                let biased = s.biased_count.unwrap_or(0);
                let unassigned = f.n() - time;
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    s.t,
                    delta,
                    biased,
                    unassigned,
                    biased as f64 / s.alive as f64,
                    is_balanced(biased, delta, unassigned) as u8
                )?;
            }
        }
        Probe::Q => {
            // decimate a uniformly random half of the variables to uniform
            // values, then check the conditions on what is left
            let order = random_order(&f, algo_seed);
            let mut g = f.clone();
            let bits = seeds::derive(algo_seed, &[seeds::STREAM_BITS]);
            for (i, &x) in order.iter().take(order.len() / 2).enumerate() {
                g.assign(x, seeds::derive(bits, &[i as u64]) & 1 == 1)?;
            }
            let theta = theta_of(&g);
            let sched = schedule(&cfg, &f)?;
            let delta = sched.delta(g.t());
            // Q is the biased set of the decimated formula
            let report = bias_report(&g, &cfg.bp_settings(g.n()), &sched);
            let q = VarSet::from_vars(g.n(), &report.biased_vars);
            eprintln!("t={} delta={delta} |Q|={} balanced={}", g.t(), q.len(), report.balanced);
            let mut reports = vec![check_q0(&g, None), check_q1(&g, delta, theta, cfg.k)?];
            match check_q2(&g, delta, theta, cfg.k, &q) {
                Ok(r) => reports.push(r),
                Err(e) => eprintln!("Q2 skipped: {e}"),
            }
            match check_q3(&g, delta, &q, 0.5) {
                Ok(r) => reports.push(r),
                Err(e) => eprintln!("Q3 skipped: {e}"),
            }
            match check_q4(&g, delta, theta, cfg.k, &q, LambdaWeight::Half, 200, algo_seed) {
                Ok(q4) => reports.push(q4.to_report(format!("delta={delta} theta={theta} k={}", cfg.k))),
                Err(e) => eprintln!("Q4 skipped: {e}"),
            }
            write_reports_csv(&reports, &mut out)?;
        }
        Probe::Hypothesis => {
            let omega = cfg.bp_settings(f.n()).omega;
            let rows = hypothesis_probe(&f, omega, algo_seed, cfg.budget)?;
            write_probe_csv(&rows, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameters(_) => 2,
        Error::Io(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Replay { trace } => replay(trace).map(|r| {
            println!(
                "pass: {} steps, outcome {}, hash {}",
                r.steps,
                r.outcome.label(),
                r.hash
            );
        }),
        Command::Probe(a) => probe(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
