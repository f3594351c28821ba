//! Chain costs on the cost layer and recurrence sets on the relation layers.
//!
//! All walks counted by a [`CostField`] have at least one edge: a cell is
//! not in its own sublevel unless some closed walk through it is cheap.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::ChainGraph;
use crate::scc::{cycle_cells, reach};
use crate::space::{CellSet, Grid};

/// Cheapest walk cost from a source set to every cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostField {
    pub values: Vec<f64>,
    /// Predecessor on a cheapest walk (`None` when unreachable).
    pub pred: Vec<Option<usize>>,
    /// Weight of the final edge of that walk.
    pub last_edge: Vec<f64>,
    pub source: CellSet,
    pub t: f64,
    pub c_max: f64,
}

impl CostField {
    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Cells with value `≤ eps`.
    pub fn sublevel(&self, eps: f64) -> CellSet {
        CellSet::from_mask(self.values.iter().map(|&v| v <= eps).collect())
    }

    /// `cell_index,midpoint,value` rows; unreachable cells print `inf`.
    pub fn to_csv(&self, grid: &Grid) -> String {
        let mut s = String::from("cell_index,midpoint,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{i},{},{}", grid.midpoint(i), fmt_value(*v));
        }
        s
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "inf".into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Reversed so that `BinaryHeap` pops the cheapest, then lowest index.
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra seeded with the out-edges of `y`; stops once the
/// frontier exceeds `limit`.
fn dijkstra(g: &ChainGraph, y: &CellSet, limit: f64) -> CostField {
    let n = g.len();
    let mut values = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut last_edge = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut relax = |from: usize, to: usize, c: f64, w: f64, heap: &mut BinaryHeap<Entry>, values: &mut [f64]| {
        if c < values[to] {
            values[to] = c;
            pred[to] = Some(from);
            last_edge[to] = w;
            heap.push(Entry { cost: c, cell: to });
        }
    };
    for s in y.iter() {
        for (j, w) in g.cost.edges(s) {
            relax(s, j, w, w, &mut heap, &mut values);
        }
    }
    while let Some(Entry { cost, cell }) = heap.pop() {
        if done[cell] || cost > values[cell] {
            continue;
        }
        if cost > limit {
            break;
        }
        done[cell] = true;
        for (j, w) in g.cost.edges(cell) {
            if !done[j] {
                relax(cell, j, cost + w, w, &mut heap, &mut values);
            }
        }
    }
    for i in 0..n {
        if values[i] > limit {
            values[i] = f64::INFINITY;
            pred[i] = None;
            last_edge[i] = f64::INFINITY;
        }
    }
    CostField { values, pred, last_edge, source: y.clone(), t: g.t, c_max: g.c_max }
}

pub fn cost_from(g: &ChainGraph, y: &CellSet) -> Result<CostField> {
    cost_from_bounded(g, y, f64::INFINITY)
}

/// As [`cost_from`], but values above `limit` are reported as unreachable.
pub fn cost_from_bounded(g: &ChainGraph, y: &CellSet, limit: f64) -> Result<CostField> {
    if y.is_empty() {
        return Err(Error::EmptySource);
    }
    check_universe(g, y)?;
    Ok(dijkstra(g, y, limit))
}

fn check_universe(g: &ChainGraph, s: &CellSet) -> Result<()> {
    if s.universe() != g.len() {
        return Err(Error::InvalidParameter(format!(
            "cell set over {} cells used with a {}-cell graph",
            s.universe(),
            g.len()
        )));
    }
    Ok(())
}

/// Reusable buffers for repeated single-cell searches.
pub struct CycleScratch {
    dist: Vec<f64>,
    touched: Vec<usize>,
    heap: BinaryHeap<Entry>,
}

impl CycleScratch {
    pub fn new(n: usize) -> Self {
        CycleScratch { dist: vec![f64::INFINITY; n], touched: Vec::new(), heap: BinaryHeap::new() }
    }
}

/// Cheapest closed walk through `i` (at least one edge), or `∞` if none
/// costs at most `bound`.
pub fn cycle_cost(g: &ChainGraph, i: usize, bound: f64, scratch: &mut CycleScratch) -> f64 {
    let CycleScratch { dist, touched, heap } = scratch;
    for &t in touched.iter() {
        dist[t] = f64::INFINITY;
    }
    touched.clear();
    heap.clear();
    for (j, w) in g.cost.edges(i) {
        if w < dist[j] {
            if dist[j].is_infinite() {
                touched.push(j);
            }
            dist[j] = w;
            heap.push(Entry { cost: w, cell: j });
        }
    }
    while let Some(Entry { cost, cell }) = heap.pop() {
        if cost > dist[cell] {
            continue;
        }
        if cost > bound {
            break;
        }
        if cell == i {
            return cost;
        }
        for (j, w) in g.cost.edges(cell) {
            let c = cost + w;
            if c < dist[j] {
                if dist[j].is_infinite() {
                    touched.push(j);
                }
                dist[j] = c;
                heap.push(Entry { cost: c, cell: j });
            }
        }
    }
    f64::INFINITY
}

/// Cheapest closed walk through every cell.
pub fn min_cycle_cost(g: &ChainGraph) -> CostField {
    min_cycle_cost_bounded(g, f64::INFINITY)
}

/// As [`min_cycle_cost`], reporting values above `bound` as `∞`.
pub fn min_cycle_cost_bounded(g: &ChainGraph, bound: f64) -> CostField {
    let n = g.len();
    let mut scratch = CycleScratch::new(n);
    let values: Vec<f64> = (0..n).map(|i| cycle_cost(g, i, bound, &mut scratch)).collect();
    field_from_values(g, values)
}

/// Wraps per-cell cycle costs (computed elsewhere, e.g. in parallel).
pub fn field_from_values(g: &ChainGraph, values: Vec<f64>) -> CostField {
    let n = g.len();
    CostField {
        values,
        pred: vec![None; n],
        last_edge: vec![f64::INFINITY; n],
        source: CellSet::full(n),
        t: g.t,
        c_max: g.c_max,
    }
}

/// Default sublevel threshold: two cell widths.
pub fn default_tau(g: &ChainGraph) -> f64 {
    2.0 * g.h()
}

/// Chain recurrent cells: recurrent cells of the closed enclosure layer.
pub fn cr_cells(g: &ChainGraph) -> CellSet {
    cycle_cells(&g.enclosure)
}

/// Cells on a cycle of the positive-overlap relation layer.
pub fn relation_cycle_cells(g: &ChainGraph) -> CellSet {
    cycle_cells(&g.relation)
}

/// Strong chain recurrent cells: `min_cycle_cost ≤ tau`.
pub fn scr_cells(g: &ChainGraph, tau: f64) -> CellSet {
    min_cycle_cost_bounded(g, tau).sublevel(tau)
}

pub fn omega_sublevel(g: &ChainGraph, y: &CellSet, eps: f64) -> Result<CellSet> {
    Ok(cost_from_bounded(g, y, eps)?.sublevel(eps))
}

/// Ω̄ stand-in: the ω-enclosure of the `tau` sublevel, which discards the
/// transient orbit cells a chain merely passes through.
pub fn omega_bar_cells(g: &ChainGraph, y: &CellSet, tau: f64) -> Result<CellSet> {
    let s = omega_sublevel(g, y, tau)?;
    if s.is_empty() {
        return Ok(s);
    }
    omega_limit_cells(g, &s)
}

/// ω-enclosure on the relation layer: everything reachable from the
/// relation cycles that `u` reaches.
pub fn omega_limit_cells(g: &ChainGraph, u: &CellSet) -> Result<CellSet> {
    let cycles = relation_cycle_cells(g);
    omega_limit_with(g, &cycles, u)
}

/// [`omega_limit_cells`] with precomputed relation cycle cells.
pub fn omega_limit_with(g: &ChainGraph, cycles: &CellSet, u: &CellSet) -> Result<CellSet> {
    if u.is_empty() {
        return Err(Error::EmptySource);
    }
    check_universe(g, u)?;
    let r = reach(&g.relation, u);
    Ok(reach(&g.relation, &r.intersection(cycles)))
}

/// `x ∈ Ω̄(y)` at threshold `tau`.
pub fn sp_contains(g: &ChainGraph, y: usize, x: usize, tau: f64) -> bool {
    let src = CellSet::singleton(g.len(), y);
    dijkstra(g, &src, tau).values[x] <= tau
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{IntegratorConfig, SystemSpec};
    use crate::graph::{build_chain_graph, build_chain_graph_default, WeightedCsr};
    use crate::scc::Csr;
    use crate::space::Domain;

    fn graph(sys: SystemSpec, n: usize, t: f64) -> ChainGraph {
        let grid = Grid::new(sys.domain, n).unwrap();
        build_chain_graph_default(&grid, &sys, t, &IntegratorConfig::default()).unwrap()
    }

    fn hand_graph(edges: &[(usize, usize, f64)], n: usize) -> ChainGraph {
        let mut g = graph(SystemSpec::trivial(), n, 1.0);
        let mut lists = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            lists[i].push((j, w));
        }
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for l in lists {
            for (j, w) in l {
                targets.push(j);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        g.cost = WeightedCsr { offsets, targets, weights };
        g.relation = Csr::from_lists(&vec![Vec::new(); n]);
        g
    }

    #[test]
    fn three_cell_hand_graph() {
        let g = hand_graph(&[(0, 1, 0.2), (1, 2, 0.3), (0, 2, 0.6)], 3);
        let f = cost_from(&g, &CellSet::singleton(3, 0)).unwrap();
        assert!(f.values[0].is_infinite());
        assert!((f.values[1] - 0.2).abs() < 1e-15);
        assert!((f.values[2] - 0.5).abs() < 1e-15);
        assert_eq!(f.pred[2], Some(1));
        assert!(min_cycle_cost(&g).values.iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn empty_source_is_rejected() {
        let g = graph(SystemSpec::trivial(), 10, 1.0);
        assert_eq!(cost_from(&g, &CellSet::empty(10)).unwrap_err(), Error::EmptySource);
        assert!(omega_limit_cells(&g, &CellSet::empty(10)).is_err());
    }

    #[test]
    fn fixed_cells_have_zero_cycle_cost() {
        let g = graph(SystemSpec::figure1(), 200, 2.0);
        let i = g.grid.cell_of(2.7).unwrap();
        assert_eq!(cost_from(&g, &CellSet::singleton(200, i)).unwrap().values[i], 0.0);
        assert_eq!(min_cycle_cost(&g).values[i], 0.0);
        assert!(sp_contains(&g, i, i, 0.0));
        assert!(omega_sublevel(&g, &CellSet::singleton(200, i), 0.0).unwrap().contains(i));
    }

    #[test]
    fn trivial_flow_everything_recurrent() {
        let g = graph(SystemSpec::trivial(), 50, 1.0);
        assert!(min_cycle_cost(&g).values.iter().all(|&v| v == 0.0));
        assert_eq!(cr_cells(&g), CellSet::full(50));
        assert_eq!(scr_cells(&g, 0.0), CellSet::full(50));
    }

    #[test]
    fn trivial_sublevel_is_metric_ball() {
        let grid = Grid::new(Domain::interval(0.0, 1.0).unwrap(), 100).unwrap();
        let g = build_chain_graph(&grid, &SystemSpec::trivial(), 1.0, 0.03 + 1e-12, &IntegratorConfig::default())
            .unwrap();
        let y = grid.cell_of(0.5).unwrap();
        let s = omega_sublevel(&g, &CellSet::singleton(100, y), 0.2 + 1e-9).unwrap();
        let expected: Vec<usize> =
            (0..100).filter(|&j| (grid.midpoint(j) - grid.midpoint(y)).abs() <= 0.2 + 1e-9).collect();
        assert_eq!(s.indices(), expected);
    }

    #[test]
    fn figure1_block_crossing_cost() {
        let g = graph(SystemSpec::figure1(), 2000, 2.0);
        let grid = &g.grid;
        let y = CellSet::singleton(2000, grid.cell_of(0.1).unwrap());
        let f = cost_from(&g, &y).unwrap();
        let v = f.values[grid.cell_of(4.9).unwrap()];
        assert!((v - 1.5).abs() <= 0.1, "cost to 4.9 was {v}");

        let s = omega_sublevel(&g, &y, 0.1).unwrap();
        // Every step flows for exactly T: the sublevel follows the orbit
        // samples φ_kT(0.1) and then penetrates the block by the budget.
        let first = g.midpoint_images[grid.cell_of(0.1).unwrap()];
        assert!(s.contains(grid.cell_of(first).unwrap()));
        for j in grid.cell_of(1.999).unwrap()..grid.cell_of(2.09).unwrap() {
            assert!(s.contains(j), "cell {j} missing from the sublevel");
        }
        assert!(!s.contains(grid.cell_of(2.2).unwrap()));
        assert!(!s.contains(grid.cell_of(0.05).unwrap()));
    }

    #[test]
    fn figure1_sp_relation() {
        let g = graph(SystemSpec::figure1(), 500, 2.0);
        let c = |x: f64| g.grid.cell_of(x).unwrap();
        assert!(sp_contains(&g, c(1.0), c(2.0), default_tau(&g)));
        assert!(!sp_contains(&g, c(2.5), c(1.0), 0.2));
    }

    #[test]
    fn circle_cycle_cost_pays_the_arc() {
        let g = graph(SystemSpec::circle_arc(), 2000, 2.0);
        let i = g.grid.cell_of(0.5).unwrap();
        let mut scratch = CycleScratch::new(2000);
        let v = cycle_cost(&g, i, f64::INFINITY, &mut scratch);
        assert!((v - 0.25).abs() <= 0.02, "cycle cost {v}");
        assert_eq!(cr_cells(&g), CellSet::full(2000));
    }

    #[test]
    fn linear_sink_recurrence_near_origin() {
        let g = graph(SystemSpec::linear_sink(), 2000, 2.0);
        let scr = scr_cells(&g, default_tau(&g));
        let h = g.h();
        let bound = 2.0 * h / (1.0 - (-2.0f64).exp());
        for i in 0..2000 {
            let m = g.grid.midpoint(i).abs();
            if m > bound + h {
                assert!(!scr.contains(i), "cell {i} at {m}");
            }
        }
        assert!(scr.contains(g.grid.cell_of(0.0).unwrap()));

        let y = CellSet::singleton(2000, g.grid.cell_of(0.7).unwrap());
        let ob = omega_bar_cells(&g, &y, default_tau(&g)).unwrap();
        assert!(!ob.is_empty());
        assert!(ob.iter().all(|i| g.grid.midpoint(i).abs() <= 2.0 * h));
    }

    #[test]
    fn omega_limit_examples() {
        let g = graph(SystemSpec::figure1(), 500, 2.0);
        let grid = &g.grid;
        let fixed = grid.cell_of(2.7).unwrap();
        let u = CellSet::singleton(500, fixed);
        assert_eq!(omega_limit_cells(&g, &u).unwrap(), u);

        let upper = grid.cells_between(4.0, 5.0).unwrap();
        assert_eq!(omega_limit_cells(&g, &upper).unwrap(), CellSet::singleton(500, 499));

        let back = crate::graph::reverse_graph(&g);
        let from_one = reach(&back.relation, &CellSet::singleton(500, grid.cell_of(1.0).unwrap()));
        assert!(from_one.contains(0));
    }

    #[test]
    fn circle_exit_leak_circulates() {
        let g = graph(SystemSpec::circle_arc(), 2000, 2.0);
        let mut u = g.grid.cells_between(0.0, 0.25 - 1e-9).unwrap();
        u.insert(g.grid.cell_of(0.25).unwrap());
        assert_eq!(omega_limit_cells(&g, &u).unwrap(), CellSet::full(2000));
    }

    #[test]
    fn csv_layout() {
        let g = graph(SystemSpec::trivial(), 4, 1.0);
        let csv = min_cycle_cost(&g).to_csv(&g.grid);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "cell_index,midpoint,value");
        assert_eq!(lines[1], "0,0.125,0");
        assert_eq!(lines.len(), 5);
    }
}
