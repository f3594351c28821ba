//! Sampled checks of the structural properties of chain costs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{cost_from, omega_limit_with, relation_cycle_cells, CostField};
use crate::graph::ChainGraph;
use crate::space::CellSet;

const SEED: u64 = 0x5c2_1e33a;
const FLOAT_SLACK: f64 = 1e-9;
const MAX_SOURCES: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheck {
    pub name: String,
    /// The inclusion or inequality being tested.
    pub anchor: String,
    pub pass: bool,
    /// Largest excess of the left side over the right side (≤ 0 is clean).
    pub worst_violation: f64,
    pub tolerance: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub system: String,
    pub n: usize,
    pub t: f64,
    pub checks: Vec<LemmaCheck>,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&LemmaCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Tally {
    worst: f64,
    samples: usize,
}

impl Tally {
    fn new() -> Self {
        Tally { worst: f64::NEG_INFINITY, samples: 0 }
    }

    fn add(&mut self, lhs: f64, rhs: f64) {
        self.samples += 1;
        if lhs.is_finite() || rhs.is_finite() {
            self.worst = self.worst.max(lhs - rhs);
        }
    }

    fn finish(self, name: &str, anchor: &str, tolerance: f64) -> LemmaCheck {
        let worst = if self.samples == 0 { 0.0 } else { self.worst.max(0.0) };
        LemmaCheck {
            name: name.into(),
            anchor: anchor.into(),
            pass: worst <= tolerance,
            worst_violation: worst,
            tolerance,
            samples: self.samples,
        }
    }
}

/// Radius used for the ω ⊆ Ω̄ check: `10·h·log₂(1/h)`.
pub fn omega_tolerance(h: f64) -> f64 {
    10.0 * h * (1.0 / h).log2()
}

/// Budgets `h, 2h, 4h, …` closed off by a quarter of the diameter.
pub fn log_eps_grid(g: &ChainGraph) -> Vec<f64> {
    let h = g.h();
    let top = g.grid.domain().diameter() / 4.0;
    let mut out = Vec::new();
    let mut e = h;
    while e < top - 1e-12 {
        out.push(e);
        e *= 2.0;
    }
    out.push(top.max(h));
    out
}

fn pick_finite(f: &CostField, rng: &mut ChaCha8Rng) -> Option<usize> {
    let finite: Vec<usize> = (0..f.len()).filter(|&i| f.values[i].is_finite()).collect();
    finite.choose(rng).copied()
}

fn cheapest_target(g: &ChainGraph, i: usize) -> usize {
    g.cheapest_edge(i).map(|e| e.0).expect("every cell has a cost edge")
}

/// Runs the six property checks on `sample_count` random samples each.
pub fn verify_lemmas(g: &ChainGraph, sample_count: usize) -> PropertyReport {
    let n = g.len();
    let h = g.h();
    let samples = sample_count.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut sources: Vec<usize> = (0..n).collect();
    sources.shuffle(&mut rng);
    sources.truncate(MAX_SOURCES.min(n));
    sources.sort_unstable();
    let fields: Vec<CostField> = sources
        .iter()
        .map(|&s| cost_from(g, &CellSet::singleton(n, s)).expect("nonempty source"))
        .collect();
    let field_of = |cell: usize, cache: &mut Vec<(usize, CostField)>| -> usize {
        if let Some(k) = cache.iter().position(|(c, _)| *c == cell) {
            return k;
        }
        cache.push((cell, cost_from(g, &CellSet::singleton(n, cell)).expect("nonempty source")));
        cache.len() - 1
    };
    let mut cache: Vec<(usize, CostField)> = sources.iter().copied().zip(fields.iter().cloned()).collect();

    // Subadditivity along an intermediate cell.
    let mut tran = Tally::new();
    for _ in 0..samples {
        let k = rng.gen_range(0..sources.len());
        let Some(x) = pick_finite(&fields[k], &mut rng) else { continue };
        let idx = field_of(x, &mut cache);
        let Some(z) = pick_finite(&cache[idx].1, &mut rng) else { continue };
        tran.add(fields[k].values[z], fields[k].values[x] + cache[idx].1.values[z]);
    }

    // Moving the last jump's endpoint.
    let mut dil = Tally::new();
    let domain = *g.grid.domain();
    for _ in 0..samples {
        let f = &fields[rng.gen_range(0..fields.len())];
        let x = rng.gen_range(0..n);
        if !f.values[x].is_finite() {
            continue;
        }
        let room = g.c_max - f.last_edge[x] - FLOAT_SLACK;
        let mx = g.grid.midpoint(x);
        let lo = g.grid.lifted_cell(mx - room.max(0.0));
        let hi = g.grid.lifted_cell(mx + room.max(0.0));
        for c in lo..=hi {
            if !g.grid.is_circle() && (c < 0 || c >= n as i64) {
                continue;
            }
            let xp = g.grid.wrap_index(c);
            let d = domain.metric(mx, g.grid.midpoint(xp));
            if f.last_edge[x] + d <= g.c_max - FLOAT_SLACK {
                dil.add(f.values[xp], f.values[x] + d);
            }
        }
    }

    // Following the cheapest edge costs at most h/2.
    let mut fwd = Tally::new();
    for f in &fields {
        for x in 0..n {
            if f.values[x].is_finite() {
                fwd.add(f.values[cheapest_target(g, x)] - f.values[x], 0.0);
            }
        }
    }

    // ω-enclosure of a cell stays within a cheap sublevel.
    let cycles = relation_cycle_cells(g);
    let mut omega = Tally::new();
    for (k, &y) in sources.iter().enumerate() {
        let w = omega_limit_with(g, &cycles, &CellSet::singleton(n, y)).expect("nonempty source");
        for c in w.iter() {
            omega.add(fields[k].values[c], 0.0);
        }
    }

    // ω of a sublevel stays within a slightly larger sublevel.
    let mut sandwich = Tally::new();
    for f in &fields {
        for &eps in &log_eps_grid(g) {
            let s = f.sublevel(eps);
            if s.is_empty() {
                continue;
            }
            let w = omega_limit_with(g, &cycles, &s).expect("nonempty sublevel");
            for c in w.iter() {
                sandwich.add(f.values[c] - eps, 0.0);
            }
        }
    }

    // Flow-shifting both ends of a pair in the SP relation.
    let mut shift = Tally::new();
    for _ in 0..samples {
        let k = rng.gen_range(0..sources.len());
        let Some(x) = pick_finite(&fields[k], &mut rng) else { continue };
        let fy = cheapest_target(g, sources[k]);
        let fx = cheapest_target(g, x);
        let idx = field_of(fy, &mut cache);
        shift.add(cache[idx].1.values[fx], fields[k].values[x]);
    }

    let checks = vec![
        tran.finish("transitivity", "Ω(Ω(Y,ε₁,T),ε₂,T) ⊆ Ω(Y,ε₁+ε₂,T)", FLOAT_SLACK),
        dil.finish("dilation", "d(x, Ω̄(Y,ε,T)) < η ⇒ x ∈ Ω(Y,ε+η,T)", FLOAT_SLACK),
        fwd.finish("forward_invariance", "φ_[T,∞)(Ω̄(Y,ε,T)) ⊆ Ω̄(Y,ε,T)", h / 2.0 + 1e-6),
        omega.finish("omega_in_omega_bar", "ω(Y) ⊆ Ω̄(Y,ε,T)", omega_tolerance(h)),
        sandwich.finish("sandwich", "ω(Ω̄(Y,ε,T)) ⊆ Ω̄(Y,ε+2h,T)", 2.0 * h),
        shift.finish("sp_flow_shift", "(y,x) ∈ SP ⇒ (φ_T(y), φ_T(x)) ∈ SP", h + 1e-6),
    ];
    PropertyReport { system: g.system.id.clone(), n, t: g.t, checks }
}
