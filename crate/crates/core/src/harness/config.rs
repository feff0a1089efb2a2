use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::bp::BpSettings;
use crate::decimation::{ContradictionMode, OrderPolicy};
use crate::error::{Error, Result};
use crate::exact::DEFAULT_BUDGET;
use crate::formula::{clauses_for_density, GenModel, GenParams};
use crate::quasirandom::DEFAULT_C;

/// Clause count given as a density or directly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Density {
    /// `m = ceil(r n)`.
    Ratio(f64),
    Clauses(usize),
}

impl Density {
    pub fn clauses(self, n: usize) -> usize {
        match self {
            Density::Ratio(r) => clauses_for_density(r, n),
            Density::Clauses(m) => m,
        }
    }

    /// `r` as given, or `m / n`.
    pub fn ratio(self, n: usize) -> f64 {
        match self {
            Density::Ratio(r) => r,
            Density::Clauses(m) => m as f64 / n as f64,
        }
    }

    /// Label used when deriving grid-point seeds.
    pub(crate) fn seed_label(self) -> u64 {
        match self {
            Density::Ratio(r) => r.to_bits(),
            Density::Clauses(m) => (m as u64) | (1 << 63),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StopKind {
    #[default]
    Fixed,
    FixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    Bias,
    Q,
    Hypothesis,
}

impl FromStr for Probe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bias" => Ok(Probe::Bias),
            "q" => Ok(Probe::Q),
            "hypothesis" => Ok(Probe::Hypothesis),
            other => Err(Error::Config(format!("unknown probe '{other}'"))),
        }
    }
}

impl fmt::Display for Probe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Probe::Bias => "bias",
            Probe::Q => "q",
            Probe::Hypothesis => "hypothesis",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: GenModel,
    pub k: usize,
    pub n: usize,
    pub density: Density,
    /// `None` uses `10 ceil(ln n)`.
    pub omega: Option<usize>,
    pub stop: StopKind,
    pub tolerance: f64,
    pub policy: OrderPolicy,
    pub contradiction: ContradictionMode,
    pub c: f64,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Worker threads; `None` lets the pool decide.
    pub jobs: Option<usize>,
    pub probe: Option<Probe>,
    pub budget: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: GenModel::ProperUniform,
            k: 3,
            n: 100,
            density: Density::Ratio(2.0),
            omega: None,
            stop: StopKind::Fixed,
            tolerance: 1e-7,
            policy: OrderPolicy::NaturalOrder,
            contradiction: ContradictionMode::Abort,
            c: DEFAULT_C,
            trials: 10,
            seed: 0,
            out: None,
            jobs: None,
            probe: None,
            budget: DEFAULT_BUDGET,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: '{value}'")))
}

/// Parses `key = value` lines; `#` starts a comment. Later keys win.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn bp_settings(&self, n: usize) -> BpSettings {
        match self.stop {
            StopKind::Fixed => BpSettings::fixed(self.omega.unwrap_or_else(|| BpSettings::default_omega(n))),
            StopKind::FixedPoint => BpSettings::fixed_point(
                self.tolerance,
                self.omega.unwrap_or_else(|| 10 * BpSettings::default_omega(n)),
            ),
        }
    }

    pub fn gen_params(&self) -> GenParams {
        GenParams {
            model: self.model,
            n: self.n,
            m: self.density.clauses(self.n),
            k: self.k,
        }
    }

    /// Applies `key=value` settings on top of `self`. List-valued keys
    /// (`r`, `k`, `n` with commas) take their first entry here; the sweep
    /// grid reads the full lists.
    pub fn apply(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        if map.contains_key("r") && map.contains_key("m") {
            return Err(Error::Config("r and m are mutually exclusive".into()));
        }
        for (key, value) in map {
            let first = value.split(',').next().unwrap_or("").trim();
            match key.as_str() {
                "model" => self.model = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
                "k" => self.k = parse(key, first)?,
                "n" => self.n = parse(key, first)?,
                "r" => self.density = Density::Ratio(parse(key, first)?),
                "m" => self.density = Density::Clauses(parse(key, first)?),
                "omega" => {
                    self.omega = if value == "default" { None } else { Some(parse(key, value)?) }
                }
                "stop" => {
                    self.stop = match value.as_str() {
                        "fixed" => StopKind::Fixed,
                        "fixedpoint" | "fixed-point" => StopKind::FixedPoint,
                        other => return Err(Error::Config(format!("unknown stop rule '{other}'"))),
                    }
                }
                "tolerance" => self.tolerance = parse(key, value)?,
                "policy" => self.policy = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?,
                "contradiction" => {
                    self.contradiction = value.parse().map_err(|e: Error| Error::Config(e.to_string()))?
                }
                "c" => self.c = parse(key, value)?,
                "trials" => self.trials = parse(key, value)?,
                "seed" => self.seed = parse(key, value)?,
                "out" => self.out = Some(PathBuf::from(value)),
                "jobs" => self.jobs = Some(parse(key, value)?),
                "probe" => self.probe = Some(value.parse()?),
                "budget" => self.budget = parse(key, value)?,
                other => return Err(Error::Config(format!("unknown key '{other}'"))),
            }
        }
        Ok(())
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&parse_kv(text)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if !(self.c > 0.0) {
            return Err(Error::Config(format!("c must be positive (got {})", self.c)));
        }
        if let Density::Ratio(r) = self.density {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::Config(format!("r must be positive (got {r})")));
            }
        }
        if self.stop == StopKind::FixedPoint && !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        if matches!(self.policy, OrderPolicy::Explicit(_)) {
            return Err(Error::Config("explicit orders are not configurable".into()));
        }
        self.gen_params()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// `key=value` lines that [`ExperimentConfig::from_kv`] reads back.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        put("model", self.model.to_string());
        put("k", self.k.to_string());
        put("n", self.n.to_string());
        match self.density {
            Density::Ratio(r) => put("r", r.to_string()),
            Density::Clauses(m) => put("m", m.to_string()),
        }
        put("omega", self.omega.map_or("default".into(), |o| o.to_string()));
        put(
            "stop",
            match self.stop {
                StopKind::Fixed => "fixed".into(),
                StopKind::FixedPoint => "fixedpoint".into(),
            },
        );
        put("tolerance", self.tolerance.to_string());
        put("policy", self.policy.name().into());
        put("contradiction", self.contradiction.name().into());
        put("c", self.c.to_string());
        put("trials", self.trials.to_string());
        put("seed", self.seed.to_string());
        if let Some(o) = &self.out {
            put("out", o.display().to_string());
        }
        if let Some(j) = self.jobs {
            put("jobs", j.to_string());
        }
        if let Some(p) = self.probe {
            put("probe", p.to_string());
        }
        put("budget", self.budget.to_string());
        s
    }
}
