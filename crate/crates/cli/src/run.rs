//! Command execution. Every command runs once per duration in the config's
//! `T` list; per-duration work runs in parallel and is written out in list
//! order, so file contents never depend on scheduling.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::ValueEnum;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use scr_core::analysis::{
    cost_from, cr_cells, cycle_cost, default_tau, field_from_values, omega_bar_cells, omega_limit_cells, CostField,
    CycleScratch,
};
use scr_core::decompose::{
    cr_attractor_decomposition, default_eps_grid, default_eta_grid, distinct_classes, enumerate_strongly_stable,
    is_attractor, is_repeller, is_strongly_stable, scr_decomposition, theorem1_check, DecompositionCandidate,
};
use scr_core::lemmas::verify_lemmas;
use scr_core::{build_chain_graph, build_chain_graph_default, CellSet, ChainGraph, Interval};

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Serialize the chain graph.
    Build,
    /// Chain recurrent cells and cycle costs.
    Cr,
    /// Strong chain recurrent cells and cycle costs.
    Scr,
    /// Cost field from the query sources.
    Cost,
    /// Cost field and Ω̄ estimate for the query sources.
    OmegaBar,
    /// ω-enclosure of each query interval `U`.
    OmegaLimit,
    /// Attractor/dual-repeller decomposition and attractor tests for `B`.
    Attractors,
    /// Enumerated strongly stable candidates and stability checks for `B`.
    Stable,
    /// Full decomposition report.
    Decompose,
    /// Sampled property checks.
    Check,
    /// Relation layer as a DOT digraph.
    ExportDot,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Cr => "cr",
            Command::Scr => "scr",
            Command::Cost => "cost",
            Command::OmegaBar => "omega-bar",
            Command::OmegaLimit => "omega-limit",
            Command::Attractors => "attractors",
            Command::Stable => "stable",
            Command::Decompose => "decompose",
            Command::Check => "check",
            Command::ExportDot => "export-dot",
        }
    }
}

/// How a run ended; maps onto the process exit code.
#[derive(Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    ChecksFailed,
}

/// Files and verdict produced for one duration.
struct Outcome {
    files: Vec<(String, String)>,
    pass: bool,
    summary: String,
}

#[derive(Serialize)]
struct Envelope<'a> {
    command: &'static str,
    system: &'a str,
    n: usize,
    h: f64,
    #[serde(rename = "T")]
    t: f64,
    c_max: f64,
    tau: f64,
    result: Value,
}

/// Runs `cmd` for every duration and writes its files into the output
/// directory. Config-level problems surface as [`ConfigError`].
///
/// Reports are compact JSON; candidate lists are reduced to the first
/// candidate of each class `B ∪ B•`.
pub fn run(cmd: Command, cfg: &RunConfig, out_dir: &Path) -> anyhow::Result<(Status, Vec<String>)> {
    precheck(cmd, cfg)?;
    let outcomes: Vec<Outcome> = cfg
        .durations
        .par_iter()
        .map(|&t| run_one(cmd, cfg, t))
        .collect::<anyhow::Result<_>>()?;
    fs::create_dir_all(out_dir).with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut lines = Vec::new();
    let mut pass = true;
    for o in outcomes {
        for (name, body) in &o.files {
            let path: PathBuf = out_dir.join(name);
            fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        }
        pass &= o.pass;
        lines.push(o.summary);
    }
    Ok((if pass { Status::Pass } else { Status::ChecksFailed }, lines))
}

fn precheck(cmd: Command, cfg: &RunConfig) -> Result<(), ConfigError> {
    let missing = |field: &str| ConfigError(format!("field `{field}`: required by command {}", cmd.name()));
    match cmd {
        Command::Cost | Command::OmegaBar if cfg.sources.is_empty() => Err(missing("query.sources")),
        Command::OmegaLimit if cfg.u.is_empty() => Err(missing("query.U")),
        _ => Ok(()),
    }
}

/// Duration label used in file names: `T2`, `T0.5`.
fn tag(t: f64) -> String {
    format!("T{t}")
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string(v).expect("serializable");
    s.push('\n');
    s
}

fn build(cfg: &RunConfig, t: f64) -> anyhow::Result<ChainGraph> {
    let grid = cfg.grid();
    Ok(match cfg.c_max {
        Some(c) => build_chain_graph(&grid, &cfg.system, t, c, &cfg.integrator)?,
        None => build_chain_graph_default(&grid, &cfg.system, t, &cfg.integrator)?,
    })
}

/// Cycle cost of every cell, split across the worker pool.
fn cycle_costs(g: &ChainGraph) -> CostField {
    let n = g.len();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map_init(|| CycleScratch::new(n), |s, i| cycle_cost(g, i, f64::INFINITY, s))
        .collect();
    field_from_values(g, values)
}

fn cells_of(g: &ChainGraph, iv: &Interval) -> anyhow::Result<CellSet> {
    Ok(g.grid.cells_between(iv.lo, iv.hi)?)
}

fn source_set(g: &ChainGraph, points: &[f64]) -> anyhow::Result<CellSet> {
    let mut s = CellSet::empty(g.len());
    for &p in points {
        s.insert(g.grid.cell_of(p)?);
    }
    Ok(s)
}

fn candidates(g: &ChainGraph, cfg: &RunConfig) -> anyhow::Result<Vec<DecompositionCandidate>> {
    let eps = cfg.eps_grid.clone().unwrap_or_else(|| default_eps_grid(g));
    Ok(enumerate_strongly_stable(g, &eps, None)?)
}

fn eta_for(g: &ChainGraph, cfg: &RunConfig, b: &CellSet) -> Vec<f64> {
    cfg.eta_grid.clone().unwrap_or_else(|| default_eta_grid(g, b))
}

fn run_one(cmd: Command, cfg: &RunConfig, t: f64) -> anyhow::Result<Outcome> {
    let g = build(cfg, t)?;
    let tau = cfg.tau.unwrap_or_else(|| default_tau(&g));
    let name = cmd.name();
    let tg = tag(t);
    let report_name = format!("{name}_{tg}.json");
    let mut files = Vec::new();
    let mut pass = true;

    let (result, summary) = match cmd {
        Command::Build => {
            let graph_file = format!("graph_{tg}.json");
            files.push((graph_file.clone(), g.to_json()));
            let r = json!({
                "graph_file": graph_file,
                "cost_edges": g.cost.edge_count(),
                "relation_edges": g.relation.edge_count(),
                "enclosure_edges": g.enclosure.edge_count(),
            });
            (r, format!("{} cost edges", g.cost.edge_count()))
        }
        Command::Cr | Command::Scr => {
            let field = cycle_costs(&g);
            let cells = if cmd == Command::Cr { cr_cells(&g) } else { field.sublevel(tau) };
            let csv = format!("{name}_cycle_cost_{tg}.csv");
            files.push((csv.clone(), field.to_csv(&g.grid)));
            let r = json!({ "count": cells.len(), "cells": cells, "cycle_cost_file": csv });
            (r, format!("{} of {} cells", cells.len(), g.len()))
        }
        Command::Cost | Command::OmegaBar => {
            let y = source_set(&g, &cfg.sources)?;
            let field = cost_from(&g, &y)?;
            let csv = format!("{name}_{tg}.csv");
            files.push((csv.clone(), field.to_csv(&g.grid)));
            let reachable = field.values.iter().filter(|v| v.is_finite()).count();
            if cmd == Command::Cost {
                (json!({ "sources": y, "reachable": reachable, "field_file": csv }), format!("{reachable} reachable cells"))
            } else {
                let sub = field.sublevel(tau);
                let bar = omega_bar_cells(&g, &y, tau)?;
                let r = json!({
                    "sources": y,
                    "reachable": reachable,
                    "field_file": csv,
                    "sublevel": sub,
                    "omega_bar": bar,
                });
                let s = format!("Ω̄ estimate has {} cells", bar.len());
                (r, s)
            }
        }
        Command::OmegaLimit => {
            let mut entries = Vec::new();
            for iv in &cfg.u {
                let u = cells_of(&g, iv)?;
                let w = omega_limit_cells(&g, &u)?;
                entries.push(json!({ "interval": [iv.lo, iv.hi], "U": u, "omega_limit": w }));
            }
            (json!({ "queries": entries }), format!("{} queries", cfg.u.len()))
        }
        Command::Attractors => {
            let cands = candidates(&g, cfg)?;
            let report = cr_attractor_decomposition(&g, &cands)?;
            pass = report.pass;
            let mut queries = Vec::new();
            for iv in &cfg.b {
                let b = cells_of(&g, iv)?;
                let eta = eta_for(&g, cfg, &b);
                queries.push(json!({
                    "interval": [iv.lo, iv.hi],
                    "B": b,
                    "eta_grid": eta,
                    "attractor": is_attractor(&g, &b, &eta).ok(),
                    "repeller": is_repeller(&g, &b, &eta).ok(),
                }));
            }
            let s = format!("{} attractors, pass = {}", report.attractors.len(), report.pass);
            (json!({ "report": report, "queries": queries }), s)
        }
        Command::Stable => {
            let cands = candidates(&g, cfg)?;
            let classes = distinct_classes(&cands);
            let mut queries = Vec::new();
            for iv in &cfg.b {
                let b = cells_of(&g, iv)?;
                let eta = eta_for(&g, cfg, &b);
                let check = is_strongly_stable(&g, &b, &eta)?;
                queries.push(json!({ "interval": [iv.lo, iv.hi], "check": check }));
            }
            let s = format!("{} candidates in {} classes", cands.len(), classes.len());
            (json!({ "candidate_count": cands.len(), "classes": classes, "queries": queries }), s)
        }
        Command::Decompose => {
            let cands = candidates(&g, cfg)?;
            let classes = distinct_classes(&cands);
            let domain = g.grid.domain();
            let ys = if cfg.sources.is_empty() {
                vec![domain.start() + domain.length() / 2.0]
            } else {
                cfg.sources.clone()
            };
            let mut t1 = Vec::new();
            let mut t1_pass = true;
            for &y in &ys {
                let set = CellSet::singleton(g.len(), g.grid.cell_of(y)?);
                let rep = theorem1_check(&g, &set, &cands, tau)?;
                t1_pass &= rep.pass;
                t1.push(json!({ "y": y, "report": rep }));
            }
            let scr = scr_decomposition(&g, &cands, tau)?;
            let con = cr_attractor_decomposition(&g, &cands)?;
            let flags = json!({
                "theorem1": t1_pass,
                "scr_decomposition": scr.pass,
                "cr_attractor_decomposition": con.pass,
            });
            pass = t1_pass && scr.pass && con.pass;
            let r = json!({
                "candidate_count": cands.len(),
                "classes": classes,
                "theorem1": t1,
                "scr_decomposition": scr,
                "cr_attractor_decomposition": con,
                "pass_flags": flags,
            });
            (r, format!("{} candidates in {} classes, pass = {pass}", cands.len(), classes.len()))
        }
        Command::Check => {
            let report = verify_lemmas(&g, cfg.samples);
            pass = report.all_pass();
            let failing: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            let s = if failing.is_empty() { "all checks pass".to_string() } else { format!("failing: {}", failing.join(", ")) };
            let mut r = serde_json::to_value(&report)?;
            r["all_pass"] = json!(pass);
            (r, s)
        }
        Command::ExportDot => {
            let dot = format!("relation_{tg}.dot");
            files.push((dot.clone(), g.relation_dot()));
            (json!({ "dot_file": dot }), format!("{} relation edges", g.relation.edge_count()))
        }
    };

    let env = Envelope {
        command: name,
        system: &g.system.id,
        n: g.len(),
        h: g.h(),
        t,
        c_max: g.c_max,
        tau,
        result,
    };
    files.push((report_name.clone(), to_json(&env)));
    Ok(Outcome { files, pass, summary: format!("{name} {tg}: {summary} -> {report_name}") })
}

/// Worker count from `SCR_THREADS`, if set.
pub fn thread_override() -> anyhow::Result<Option<usize>> {
    match std::env::var("SCR_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(Some(k)),
            _ => Err(anyhow!(ConfigError(format!("SCR_THREADS must be a positive integer, got '{v}'")))),
        },
    }
}
