//! Strongly stable sets, attractors and the decomposition identities.
//!
//! Set equalities are compared up to a one- or two-cell collar around the
//! boundaries involved; see [`Grid::compare_within_collar`].

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::analysis::{cost_from_bounded, cr_cells, omega_bar_cells, omega_limit_with, relation_cycle_cells, scr_cells};
use crate::error::{Error, Result};
use crate::graph::{reverse_graph, ChainGraph};
use crate::lemmas::log_eps_grid;
use crate::scc::{image, reach, tarjan};
use crate::space::{CellSet, CollarComparison, Grid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StronglyStableWitness {
    #[serde(rename = "B")]
    pub b: CellSet,
    pub eta_grid: Vec<f64>,
    /// Absorption step `k(η)` per radius (`None` if it never absorbs).
    pub absorption_steps: Vec<Option<usize>>,
    pub omega: Vec<CellSet>,
    /// `⋂_η ω(U_η)`.
    pub intersection: CellSet,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCheck {
    pub stable: bool,
    pub witness: StronglyStableWitness,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionCandidate {
    #[serde(rename = "B")]
    pub b: CellSet,
    #[serde(rename = "B_bullet")]
    pub b_bullet: CellSet,
    #[serde(rename = "class")]
    pub class_set: CellSet,
    pub source: usize,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Complement {
    pub b_bullet: CellSet,
    /// `X ∖ (B ∪ B•)`.
    pub connecting: CellSet,
}

/// Cells whose ω-enclosure misses `b`.
///
/// `ω(x) ∩ B ≠ ∅` iff some relation cycle reachable from `x` reaches `B`,
/// so the complement is one backward sweep from `B` and one from the
/// cycle cells it picks up.
pub fn complementary(g: &ChainGraph, b: &CellSet) -> Result<Complement> {
    let cycles = relation_cycle_cells(g);
    complementary_with(g, &cycles, &g.relation.transpose(), b)
}

fn complementary_with(g: &ChainGraph, cycles: &CellSet, back: &crate::scc::Csr, b: &CellSet) -> Result<Complement> {
    if b.is_empty() {
        return Err(Error::EmptySet);
    }
    let feeders = reach(back, b).intersection(cycles);
    let hits = reach(back, &feeders);
    let b_bullet = hits.complement();
    let connecting = b.union(&b_bullet).complement();
    debug_assert_eq!(b_bullet.universe(), g.len());
    Ok(Complement { b_bullet, connecting })
}

/// Default neighbourhood radii `{h, 2h, 4h, 8h, 16h}`, clipped below half
/// the distance from `b` to the nearest run of recurrent cells it does not
/// touch.
pub fn default_eta_grid(g: &ChainGraph, b: &CellSet) -> Vec<f64> {
    eta_grid_with(g, &relation_cycle_cells(g), b)
}

fn eta_grid_with(g: &ChainGraph, cycles: &CellSet, b: &CellSet) -> Vec<f64> {
    let h = g.h();
    let base: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0].iter().map(|k| k * h).collect();
    let rho = separation(g, cycles, b);
    let kept: Vec<f64> = base.iter().copied().filter(|&e| e < rho / 2.0).collect();
    if kept.is_empty() {
        vec![base[0]]
    } else {
        kept
    }
}

/// Distance from `b` to the nearest run of relation-recurrent cells that is
/// not adjacent to `b`.
fn separation(g: &ChainGraph, cycles: &CellSet, b: &CellSet) -> f64 {
    let grid = &g.grid;
    let steps = index_distance(grid, b);
    let mut best = f64::INFINITY;
    for run in runs(grid, cycles) {
        if run.iter().any(|&c| steps[c] <= 1) {
            continue;
        }
        for &c in &run {
            // Closed cells `d` index steps apart are `(d − 1)·h` apart.
            best = best.min((steps[c] - 1) as f64 * g.h());
        }
    }
    best
}

/// Index steps from every cell to the nearest member of `s`.
fn index_distance(grid: &Grid, s: &CellSet) -> Vec<usize> {
    let mut dist = vec![usize::MAX; grid.len()];
    let mut queue = std::collections::VecDeque::new();
    for i in s.iter() {
        dist[i] = 0;
        queue.push_back(i);
    }
    while let Some(i) = queue.pop_front() {
        for j in grid.neighbors(i) {
            if dist[j] == usize::MAX {
                dist[j] = dist[i] + 1;
                queue.push_back(j);
            }
        }
    }
    dist
}

/// Maximal index-contiguous runs of a set (joined across the seam on circles).
fn runs(grid: &Grid, s: &CellSet) -> Vec<Vec<usize>> {
    let n = grid.len();
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    for i in 0..n {
        if s.contains(i) {
            cur.push(i);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    if grid.is_circle() && out.len() > 1 && s.contains(0) && s.contains(n - 1) {
        let last = out.pop().expect("nonempty");
        out[0].splice(0..0, last);
    }
    out
}

/// Attractor test: some admissible `U_η` has its ω-enclosure inside `B`'s
/// one-cell collar. Radii whose neighbourhood does not reach beyond that
/// collar are not neighbourhoods at grid scale and are skipped.
pub fn is_attractor(g: &ChainGraph, b: &CellSet, eta_grid: &[f64]) -> Result<bool> {
    is_attractor_with(g, &relation_cycle_cells(g), b, eta_grid)
}

fn is_attractor_with(g: &ChainGraph, cycles: &CellSet, b: &CellSet, eta_grid: &[f64]) -> Result<bool> {
    if b.is_empty() {
        return Err(Error::EmptySet);
    }
    let collar = g.grid.dilate(b, 1);
    let wb = omega_limit_with(g, cycles, b)?;
    let escaped = wb.difference(&collar).len();
    if escaped > 0 {
        return Err(Error::NotInvariant(escaped));
    }
    let whole = collar.len() == g.len();
    for &eta in eta_grid {
        let u = g.grid.eta_neighborhood(b, eta);
        if !whole && u.is_subset(&collar) {
            continue;
        }
        if omega_limit_with(g, cycles, &u)?.is_subset(&collar) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Repeller test: the attractor test for the time-reversed graph.
pub fn is_repeller(g: &ChainGraph, b: &CellSet, eta_grid: &[f64]) -> Result<bool> {
    is_attractor(&reverse_graph(g), b, eta_grid)
}

/// Smallest `k ≤ n` with every relation iterate from step `k` on inside `u`.
fn absorption_step(g: &ChainGraph, u: &CellSet) -> Option<usize> {
    let mut seen: HashSet<CellSet> = HashSet::new();
    let mut cur = u.clone();
    for k in 1..=g.len() {
        cur = image(&g.relation, &cur);
        if reach(&g.relation, &cur).is_subset(u) {
            return Some(k);
        }
        if !seen.insert(cur.clone()) {
            return None;
        }
    }
    None
}

/// Checks the metric-ball family `U_η` for strong stability of `b`.
pub fn is_strongly_stable(g: &ChainGraph, b: &CellSet, eta_grid: &[f64]) -> Result<StabilityCheck> {
    if b.is_empty() {
        return Err(Error::EmptySet);
    }
    if eta_grid.is_empty() || eta_grid.windows(2).any(|w| w[0] >= w[1]) || eta_grid[0] <= 0.0 {
        return Err(Error::InvalidParameter("η grid must be positive and strictly increasing".into()));
    }
    let cycles = relation_cycle_cells(g);
    let mut failures = Vec::new();
    let mut steps = Vec::with_capacity(eta_grid.len());
    let mut omegas = Vec::with_capacity(eta_grid.len());
    let mut inter = CellSet::full(g.len());
    for &eta in eta_grid {
        let u = g.grid.eta_neighborhood(b, eta);
        let k = absorption_step(g, &u);
        if k.is_none() {
            failures.push(format!("U_η for η = {eta} is never absorbed"));
        }
        let w = omega_limit_with(g, &cycles, &u)?;
        inter.intersect_with(&w);
        steps.push(k);
        omegas.push(w);
    }
    let near_b = g.grid.dilate(b, 1);
    if !inter.is_subset(&near_b) {
        failures.push(format!("⋂ω(U_η) exceeds B by {} cells", inter.difference(&near_b).len()));
    }
    if !b.is_subset(&g.grid.dilate(&inter, 1)) {
        failures.push(format!("⋂ω(U_η) misses {} cells of B", b.difference(&g.grid.dilate(&inter, 1)).len()));
    }
    Ok(StabilityCheck {
        stable: failures.is_empty(),
        witness: StronglyStableWitness {
            b: b.clone(),
            eta_grid: eta_grid.to_vec(),
            absorption_steps: steps,
            omega: omegas,
            intersection: inter,
        },
        failures,
    })
}

/// One representative (smallest index) per relation SCC.
pub fn default_sources(g: &ChainGraph) -> CellSet {
    let mut s = CellSet::empty(g.len());
    for comp in tarjan(&g.relation) {
        s.insert(comp[0]);
    }
    s
}

/// Default enumeration budgets: `h·2^k` up to a quarter of the diameter.
pub fn default_eps_grid(g: &ChainGraph) -> Vec<f64> {
    log_eps_grid(g)
}

/// Candidates `B = ω(Ω̄({s}, ε))` with their complements, one per distinct
/// `B`, ordered by first appearance over (source, ε). Use
/// [`distinct_classes`] for one representative per class `B ∪ B•`.
pub fn enumerate_strongly_stable(
    g: &ChainGraph,
    eps_grid: &[f64],
    sources: Option<&CellSet>,
) -> Result<Vec<DecompositionCandidate>> {
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::InvalidParameter("ε grid must be nonempty and nonnegative".into()));
    }
    let defaults;
    let sources = match sources {
        Some(s) => s,
        None => {
            defaults = default_sources(g);
            &defaults
        }
    };
    let n = g.len();
    let cycles = relation_cycle_cells(g);
    let back = g.relation.transpose();
    let top = eps_grid.iter().copied().fold(0.0, f64::max);

    let mut omega_of: HashMap<CellSet, CellSet> = HashMap::new();
    let mut seen_b: HashSet<CellSet> = HashSet::new();
    let mut out = Vec::new();
    for s in sources.iter() {
        let field = cost_from_bounded(g, &CellSet::singleton(n, s), top)?;
        for &eps in eps_grid {
            let mut sub = field.sublevel(eps);
            if sub.is_empty() {
                // Budget below the snap cost of the first step: Ω̄ degenerates
                // to the forward orbit, whose ω-enclosure is that of s.
                sub.insert(s);
            }
            let b = match omega_of.get(&sub) {
                Some(b) => b.clone(),
                None => {
                    let b = omega_limit_with(g, &cycles, &sub)?;
                    omega_of.insert(sub, b.clone());
                    b
                }
            };
            if b.is_empty() || !seen_b.insert(b.clone()) {
                continue;
            }
            let comp = complementary_with(g, &cycles, &back, &b)?;
            let class_set = b.union(&comp.b_bullet);
            out.push(DecompositionCandidate { b, b_bullet: comp.b_bullet, class_set, source: s, eps });
        }
    }
    Ok(out)
}

/// First candidate of each class `B ∪ B•`.
pub fn distinct_classes(candidates: &[DecompositionCandidate]) -> Vec<DecompositionCandidate> {
    let mut seen = HashSet::new();
    candidates.iter().filter(|c| seen.insert(c.class_set.clone())).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    /// Ω̄(Y) estimate.
    pub omega_bar: CellSet,
    /// Intersection of the candidates containing ω(Y).
    pub intersection: CellSet,
    pub omega_y: CellSet,
    pub containing_candidates: usize,
    pub comparison: CollarComparison,
    pub pass: bool,
}

/// Compares Ω̄(Y) with the intersection of the candidates `B ⊇ ω(Y)`.
pub fn theorem1_check(
    g: &ChainGraph,
    y: &CellSet,
    candidates: &[DecompositionCandidate],
    tau: f64,
) -> Result<Theorem1Report> {
    let cycles = relation_cycle_cells(g);
    let l = omega_bar_cells(g, y, tau)?;
    let wy = omega_limit_with(g, &cycles, y)?;
    let mut r = CellSet::full(g.len());
    let mut count = 0;
    for c in candidates.iter().filter(|c| wy.is_subset(&c.b)) {
        r.intersect_with(&c.b);
        count += 1;
    }
    let comparison = g.grid.compare_within_collar(&l, &r, 2);
    Ok(Theorem1Report {
        pass: comparison.pass(),
        omega_bar: l,
        intersection: r,
        omega_y: wy,
        containing_candidates: count,
        comparison,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    /// Intersection of the classes (or of `A ∪ A*`).
    pub intersection: CellSet,
    /// The recurrent set it is compared with.
    pub reference: CellSet,
    pub comparison: CollarComparison,
    pub pass: bool,
}

/// `⋂ (B ∪ B•)` against `scr_cells(τ)`.
pub fn scr_decomposition(g: &ChainGraph, candidates: &[DecompositionCandidate], tau: f64) -> Result<DecompositionReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no candidates to intersect".into()));
    }
    let mut d = CellSet::full(g.len());
    for c in candidates {
        d.intersect_with(&c.class_set);
    }
    let scr = scr_cells(g, tau);
    let comparison = g.grid.compare_within_collar(&d, &scr, 2);
    Ok(DecompositionReport { pass: comparison.pass(), intersection: d, reference: scr, comparison })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorEntry {
    #[serde(rename = "A")]
    pub a: CellSet,
    #[serde(rename = "A_star")]
    pub a_star: CellSet,
    /// Cells with neither `ω(x) ⊆ A` (collar) nor `x ∈ A*`.
    pub dichotomy_violations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorReport {
    pub attractors: Vec<AttractorEntry>,
    pub decomposition: DecompositionReport,
    /// Dichotomy violations away from the two-cell collar of the CR boundary.
    pub stray_violations: Vec<usize>,
    pub pass: bool,
}

/// `⋂ (A ∪ A*)` over the attractors among the candidates (plus the whole
/// space) against `cr_cells`.
pub fn cr_attractor_decomposition(g: &ChainGraph, candidates: &[DecompositionCandidate]) -> Result<AttractorReport> {
    let n = g.len();
    let cycles = relation_cycle_cells(g);
    let back = g.relation.transpose();
    let cr = cr_cells(g);
    let cr_collar = g.grid.dilate(&g.grid.boundary(&cr), 2);
    let omegas: Vec<CellSet> = (0..n)
        .map(|x| omega_limit_with(g, &cycles, &CellSet::singleton(n, x)))
        .collect::<Result<_>>()?;

    let mut sets: Vec<CellSet> = vec![CellSet::full(n)];
    for c in candidates {
        // Sets whose collar is everything are the whole space at grid scale.
        if sets.contains(&c.b) || g.grid.dilate(&c.b, 1).len() == n {
            continue;
        }
        let eta = eta_grid_with(g, &cycles, &c.b);
        if matches!(is_attractor_with(g, &cycles, &c.b, &eta), Ok(true)) {
            sets.push(c.b.clone());
        }
    }

    let mut d = CellSet::full(n);
    let mut attractors = Vec::new();
    let mut stray = Vec::new();
    for a in sets {
        let a_star = complementary_with(g, &cycles, &back, &a)?.b_bullet;
        d.intersect_with(&a.union(&a_star));
        let near = g.grid.dilate(&a, 1);
        let violations: Vec<usize> =
            (0..n).filter(|&x| !omegas[x].is_subset(&near) && !a_star.contains(x)).collect();
        stray.extend(violations.iter().copied().filter(|&x| !cr_collar.contains(x)));
        attractors.push(AttractorEntry { a, a_star, dichotomy_violations: violations });
    }
    stray.sort_unstable();
    stray.dedup();
    let comparison = g.grid.compare_within_collar(&d, &cr, 2);
    let decomposition = DecompositionReport { pass: comparison.pass(), intersection: d, reference: cr, comparison };
    Ok(AttractorReport { pass: decomposition.pass && stray.is_empty(), attractors, decomposition, stray_violations: stray })
}
