//! Run configuration: flat `key=value` files, merged with CLI overrides.
//!
//! Keys mirror the long CLI flags without the leading dashes (`p`, `s`,
//! `rhs`, `n`, `L`, `p-list`, ...). Both sources go through the same
//! string parsers, so a value means the same thing in either place.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::fracops::Collocation;
use crate::solver::{Diffusivity, ProblemSpec, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Measure,
    Verify,
    Sweep,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solve" => Ok(Self::Solve),
            "measure" => Ok(Self::Measure),
            "verify" => Ok(Self::Verify),
            "sweep" => Ok(Self::Sweep),
            other => Err(Error::Parameter(format!("unknown command `{other}`"))),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Solve => "solve",
            Self::Measure => "measure",
            Self::Verify => "verify",
            Self::Sweep => "sweep",
        })
    }
}

/// Every key accepted in a config file.
pub const KEYS: &[&str] = &[
    "p",
    "s",
    "rhs",
    "diffusivity",
    "n",
    "L",
    "a",
    "tol",
    "out",
    "suite",
    "p-list",
    "s-list",
    "hmin",
    "hmax",
    "workers",
    "input",
    "collocation",
    "max-iter",
    "dump-operator",
];

/// Raw `key → value` settings in insertion-independent order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected key=value, got `{line}`",
                    lineno + 1
                ))
            })?;
            out.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(out)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.as_ref().display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// `other` wins on every key it sets.
    pub fn merged(mut self, other: &Settings) -> Self {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
        self
    }

    fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Parameter(format!("invalid value `{v}` for {key}")))
            })
            .transpose()
    }

    fn parse_list(&self, key: &str) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| Error::Parameter(format!("invalid entry `{t}` in {key}")))
                })
                .collect(),
        }
    }
}

/// Fully typed configuration of one CLI run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub p: f64,
    pub s: f64,
    pub rhs: String,
    pub diffusivity: Option<String>,
    pub n_cells: usize,
    pub window_half_width: f64,
    pub domain_half_width: f64,
    /// Stopping tolerance; `None` picks the default for `p`.
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub suites: Vec<String>,
    pub p_list: Vec<f64>,
    pub s_list: Vec<f64>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub workers: usize,
    /// Function probed by `measure`: `solve` or a field specification.
    pub input: String,
    pub collocation: Collocation,
    pub max_iter: usize,
    pub dump_operator: Option<PathBuf>,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        Self {
            command,
            p: 2.0,
            s: 0.5,
            rhs: "const:1".into(),
            diffusivity: None,
            n_cells: 2048,
            // Probing needs Δx ≤ 2^-9 to put four dyadic steps in the
            // default fit window at n = 2048, hence the narrower window.
            window_half_width: match command {
                Command::Measure | Command::Sweep => 2.0,
                _ => 8.0,
            },
            domain_half_width: 1.0,
            tol: None,
            out: None,
            suites: vec!["all".into()],
            p_list: Vec::new(),
            s_list: Vec::new(),
            h_min: None,
            h_max: None,
            workers: 1,
            input: "solve".into(),
            collocation: Collocation::Midpoints,
            max_iter: 50_000,
            dump_operator: None,
        }
    }

    /// Defaults overridden by `settings`, then validated.
    pub fn from_settings(command: Command, settings: &Settings) -> Result<Self> {
        let mut c = Self::defaults(command);
        if let Some(v) = settings.parse_value("p")? {
            c.p = v;
        }
        if let Some(v) = settings.parse_value("s")? {
            c.s = v;
        }
        if let Some(v) = settings.get("rhs") {
            c.rhs = v.to_string();
        }
        if let Some(v) = settings.get("diffusivity") {
            c.diffusivity = Some(v.to_string());
        }
        if let Some(v) = settings.parse_value("n")? {
            c.n_cells = v;
        }
        if let Some(v) = settings.parse_value("L")? {
            c.window_half_width = v;
        }
        if let Some(v) = settings.parse_value("a")? {
            c.domain_half_width = v;
        }
        c.tol = settings.parse_value("tol")?;
        c.out = settings.get("out").map(PathBuf::from);
        if let Some(v) = settings.get("suite") {
            c.suites = v
                .split(',')
                .map(|t| t.trim().to_string())
                .filter(|t| !t.is_empty())
                .collect();
        }
        c.p_list = settings.parse_list("p-list")?;
        c.s_list = settings.parse_list("s-list")?;
        c.h_min = settings.parse_value("hmin")?;
        c.h_max = settings.parse_value("hmax")?;
        if let Some(v) = settings.parse_value("workers")? {
            c.workers = v;
        }
        if let Some(v) = settings.get("input") {
            c.input = v.to_string();
        }
        if let Some(v) = settings.get("collocation") {
            c.collocation = Collocation::parse(v)?;
        }
        if let Some(v) = settings.parse_value("max-iter")? {
            c.max_iter = v;
        }
        c.dump_operator = settings.get("dump-operator").map(PathBuf::from);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::Parameter(format!("p must be > 1, got {}", self.p)));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::Parameter(format!(
                "s must lie in (0, 1), got {}",
                self.s
            )));
        }
        positive("L", self.window_half_width)?;
        positive("a", self.domain_half_width)?;
        if let Some(t) = self.tol {
            positive("tol", t)?;
        }
        if let Some(h) = self.h_min {
            positive("hmin", h)?;
        }
        if let Some(h) = self.h_max {
            positive("hmax", h)?;
        }
        if self.workers == 0 {
            return Err(Error::Parameter("workers must be >= 1".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Parameter("max-iter must be >= 1".into()));
        }
        if self.suites.is_empty() {
            return Err(Error::Parameter("suite selector is empty".into()));
        }
        Ok(())
    }

    /// Fit window, defaulting to `[2^-8 a, 2^-4 a]`.
    pub fn probe_window(&self) -> (f64, f64) {
        let a = self.domain_half_width;
        (
            self.h_min.unwrap_or(a / 256.0),
            self.h_max.unwrap_or(a / 16.0),
        )
    }

    /// The problem described by this configuration at `(p, s)`.
    pub fn problem_spec_at(&self, p: f64, s: f64) -> Result<ProblemSpec> {
        let rhs = Field::parse(&self.rhs)?;
        let mut options = SolverOptions::for_p(p);
        if let Some(t) = self.tol {
            options.tol_grad = t;
        }
        options.max_iter = self.max_iter;
        options.collocation = self.collocation;
        let mut spec = ProblemSpec::new(p, s, rhs).with_grid(
            self.window_half_width,
            self.domain_half_width,
            self.n_cells,
        );
        spec.options = options;
        if let Some(d) = &self.diffusivity {
            spec = spec.with_diffusivity(parse_diffusivity(d)?);
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        self.problem_spec_at(self.p, self.s)
    }
}

/// `const:<v>` or `file:<path>`; the ellipticity bounds are read off the data.
pub fn parse_diffusivity(spec: &str) -> Result<Diffusivity> {
    let field = Field::parse(spec)?;
    let (lo, hi) = match &field {
        Field::Const(c) => (*c, *c),
        Field::Table { us, .. } => us
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &u| {
                (lo.min(u), hi.max(u))
            }),
        _ => {
            return Err(Error::Parameter(format!(
                "diffusivity must be const:<v> or file:<path>, got `{spec}`"
            )))
        }
    };
    if !(lo > 0.0) {
        return Err(Error::Parameter(format!(
            "diffusivity must be bounded below by a positive constant, min = {lo}"
        )));
    }
    Ok(Diffusivity {
        field,
        a_min: lo,
        a_max: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let s = Settings::parse("# header\np = 3\n\ns=0.25 # trailing\nrhs = bump\n").unwrap();
        assert_eq!(s.get("p"), Some("3"));
        assert_eq!(s.get("s"), Some("0.25"));
        assert_eq!(s.get("rhs"), Some("bump"));
        assert!(Settings::parse("p 3").is_err());
        assert!(Settings::parse("colour = red").is_err());
    }

    #[test]
    fn later_settings_override() {
        let file = Settings::parse("p = 3\nn = 512").unwrap();
        let mut cli = Settings::new();
        cli.set("p", "1.5").unwrap();
        let c = RunConfig::from_settings(Command::Solve, &file.merged(&cli)).unwrap();
        assert_eq!(c.p, 1.5);
        assert_eq!(c.n_cells, 512);
    }

    #[test]
    fn validation() {
        let mut bad = Settings::new();
        bad.set("p", "0.9").unwrap();
        assert!(matches!(
            RunConfig::from_settings(Command::Solve, &bad),
            Err(Error::Parameter(_))
        ));
        let mut lists = Settings::new();
        lists.set("p-list", "2, 3,1.5").unwrap();
        let c = RunConfig::from_settings(Command::Sweep, &lists).unwrap();
        assert_eq!(c.p_list, vec![2.0, 3.0, 1.5]);
        assert_eq!(c.probe_window(), (1.0 / 256.0, 1.0 / 16.0));
        assert!(parse_diffusivity("const:0").is_err());
        assert!(parse_diffusivity("bump").is_err());
        assert_eq!(parse_diffusivity("const:2").unwrap().a_max, 2.0);
    }
}
