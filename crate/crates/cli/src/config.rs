//! Run configuration: a sectioned `key = value` file (TOML syntax).
//!
//! ```toml
//! [system]
//! builtin = "figure1"        # trivial | linear_sink | figure1 | circle_arc | cantor | fixed_set_field
//!
//! [grid]
//! n = 2000
//!
//! [run]
//! T = [2.0]
//! ```
//!
//! See the README for every key.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use scr_core::{CantorKind, Grid, IntegratorConfig, Interval, SystemSpec};

/// A config problem, reported with the offending field or source position.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn field_err(field: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("field `{field}`: {msg}"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: RawSystem,
    grid: RawGrid,
    run: RawRun,
    #[serde(default)]
    integrator: RawIntegrator,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    query: RawQuery,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    builtin: String,
    kind: Option<String>,
    depth: Option<u32>,
    domain: Option<[f64; 2]>,
    fixed: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    n: i64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    #[serde(rename = "T")]
    t: Vec<f64>,
    c_max: Option<f64>,
    tau: Option<f64>,
    eps_grid: Option<Vec<f64>>,
    eta_grid: Option<Vec<f64>>,
    samples: Option<i64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    dt: Option<f64>,
    pad: Option<f64>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawQuery {
    sources: Option<Vec<f64>>,
    #[serde(rename = "U")]
    u: Option<Vec<[f64; 2]>>,
    #[serde(rename = "B")]
    b: Option<Vec<[f64; 2]>>,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub n: usize,
    pub durations: Vec<f64>,
    /// Absolute jump cutoff; `None` selects the library default.
    pub c_max: Option<f64>,
    pub tau: Option<f64>,
    pub eps_grid: Option<Vec<f64>>,
    pub eta_grid: Option<Vec<f64>>,
    pub samples: usize,
    pub integrator: IntegratorConfig,
    pub output_dir: PathBuf,
    /// Source points (domain coordinates).
    pub sources: Vec<f64>,
    pub u: Vec<Interval>,
    pub b: Vec<Interval>,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string().trim_end().to_string()))?;
        validate(raw)
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.system.domain, self.n).expect("validated")
    }
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(field_err(field, format!("must be positive and finite, got {v}")))
    }
}

fn increasing(field: &str, v: Vec<f64>) -> Result<Vec<f64>, ConfigError> {
    if v.is_empty() {
        return Err(field_err(field, "must not be empty"));
    }
    for &x in &v {
        positive(field, x)?;
    }
    if v.windows(2).any(|w| w[0] >= w[1]) {
        return Err(field_err(field, "must be strictly increasing"));
    }
    Ok(v)
}

fn intervals(field: &str, raw: Option<Vec<[f64; 2]>>) -> Result<Vec<Interval>, ConfigError> {
    let mut out = Vec::new();
    for (k, [lo, hi]) in raw.unwrap_or_default().into_iter().enumerate() {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(field_err(&format!("{field}[{k}]"), format!("[{lo}, {hi}] is not an interval")));
        }
        out.push(Interval::new(lo, hi));
    }
    Ok(out)
}

const BUILTINS: &str = "trivial, linear_sink, figure1, circle_arc, cantor, fixed_set_field";

fn system(raw: RawSystem) -> Result<SystemSpec, ConfigError> {
    let unused = |field: &str, present: bool| {
        if present {
            Err(field_err(field, format!("not used by builtin '{}'", raw.builtin)))
        } else {
            Ok(())
        }
    };
    match raw.builtin.as_str() {
        "trivial" | "linear_sink" | "figure1" | "circle_arc" => {
            unused("system.kind", raw.kind.is_some())?;
            unused("system.depth", raw.depth.is_some())?;
            unused("system.domain", raw.domain.is_some())?;
            unused("system.fixed", raw.fixed.is_some())?;
            Ok(match raw.builtin.as_str() {
                "trivial" => SystemSpec::trivial(),
                "linear_sink" => SystemSpec::linear_sink(),
                "figure1" => SystemSpec::figure1(),
                _ => SystemSpec::circle_arc(),
            })
        }
        "cantor" => {
            unused("system.domain", raw.domain.is_some())?;
            unused("system.fixed", raw.fixed.is_some())?;
            let kind = match raw.kind.as_deref() {
                Some("standard") | None => CantorKind::Standard,
                Some("fat") => CantorKind::Fat,
                Some(other) => return Err(field_err("system.kind", format!("expected 'standard' or 'fat', got '{other}'"))),
            };
            let depth = raw.depth.ok_or_else(|| field_err("system.depth", "required for builtin 'cantor'"))?;
            SystemSpec::cantor(kind, depth).map_err(|e| field_err("system.depth", e))
        }
        "fixed_set_field" => {
            unused("system.kind", raw.kind.is_some())?;
            unused("system.depth", raw.depth.is_some())?;
            let [a, b] = raw.domain.unwrap_or([0.0, 1.0]);
            let fixed = intervals("system.fixed", raw.fixed)?;
            SystemSpec::fixed_set_field(a, b, fixed).map_err(|e| field_err("system.fixed", e))
        }
        other => Err(field_err("system.builtin", format!("unknown builtin '{other}' (expected one of {BUILTINS})"))),
    }
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let system = system(raw.system)?;
    if raw.grid.n < 2 {
        return Err(field_err("grid.n", format!("must be at least 2, got {}", raw.grid.n)));
    }
    let n = raw.grid.n as usize;
    if raw.run.t.is_empty() {
        return Err(field_err("run.T", "must list at least one duration"));
    }
    let durations = raw.run.t.iter().map(|&t| positive("run.T", t)).collect::<Result<Vec<_>, _>>()?;
    let c_max = raw.run.c_max.map(|v| positive("run.c_max", v)).transpose()?;
    let tau = raw.run.tau.map(|v| positive("run.tau", v)).transpose()?;
    let eps_grid = raw.run.eps_grid.map(|v| increasing("run.eps_grid", v)).transpose()?;
    let eta_grid = raw.run.eta_grid.map(|v| increasing("run.eta_grid", v)).transpose()?;
    let samples = match raw.run.samples {
        None => 1000,
        Some(s) if s >= 1 => s as usize,
        Some(s) => return Err(field_err("run.samples", format!("must be at least 1, got {s}"))),
    };
    let defaults = IntegratorConfig::default();
    let integrator = IntegratorConfig {
        dt: raw.integrator.dt.map(|v| positive("integrator.dt", v)).transpose()?.unwrap_or(defaults.dt),
        pad: match raw.integrator.pad {
            None => defaults.pad,
            Some(p) if p >= 0.0 && p.is_finite() => p,
            Some(p) => return Err(field_err("integrator.pad", format!("must be nonnegative, got {p}"))),
        },
    };
    let sources = raw.query.sources.unwrap_or_default();
    for (k, &p) in sources.iter().enumerate() {
        if !system.domain.contains(p) {
            return Err(field_err(&format!("query.sources[{k}]"), format!("{p} lies outside the domain")));
        }
    }
    let u = intervals("query.U", raw.query.u)?;
    let b = intervals("query.B", raw.query.b)?;
    for (field, set) in [("query.U", &u), ("query.B", &b)] {
        for (k, iv) in set.iter().enumerate() {
            if !system.domain.contains(iv.lo) || !system.domain.contains(iv.hi) {
                return Err(field_err(&format!("{field}[{k}]"), "leaves the domain"));
            }
        }
    }
    Ok(RunConfig {
        system,
        n,
        durations,
        c_max,
        tau,
        eps_grid,
        eta_grid,
        samples,
        integrator,
        output_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        sources,
        u,
        b,
    })
}
