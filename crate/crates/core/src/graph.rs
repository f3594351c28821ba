//! The dual-layer chain graph over the cells of a grid.
//!
//! * The **cost layer** has an edge `i → j` of weight `d(φ_T(m_i), m_j)`
//!   whenever that distance is at most `c_max` (`m_i` the midpoints). Walks
//!   in it are strong-chain surrogates whose total weight is the jump sum.
//! * The **relation layer** has `i → j` iff the image enclosure of cell `i`
//!   overlaps cell `j` in a set of positive length. Fixed cells therefore
//!   only map to themselves; this layer carries ω-limit enclosures.
//! * The **enclosure layer** is the closed-cell version of the relation
//!   layer (touching counts). It is the outer approximation whose recurrent
//!   cells enclose the chain recurrent set.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{IntegratorConfig, SystemSpec};
use crate::scc::Csr;
use crate::space::{Grid, Interval};

/// CSR adjacency with one weight per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedCsr {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
    pub weights: Vec<f64>,
}

impl WeightedCsr {
    pub fn from_lists(lists: Vec<Vec<(usize, f64)>>) -> Self {
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
        WeightedCsr { offsets, targets, weights }
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn edges(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()].binary_search(&j).ok().map(|k| self.weights[r.start + k])
    }

    pub fn transpose(&self) -> WeightedCsr {
        let mut lists = vec![Vec::new(); self.len()];
        for i in 0..self.len() {
            for (j, w) in self.edges(i) {
                lists[j].push((i, w));
            }
        }
        WeightedCsr::from_lists(lists)
    }

    fn check(&self, n: usize) -> std::result::Result<(), String> {
        Csr { offsets: self.offsets.clone(), targets: self.targets.clone() }.check(n)?;
        if self.weights.len() != self.targets.len() {
            return Err("weight count does not match edge count".into());
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err("negative or NaN weight".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGraph {
    pub grid: Grid,
    pub system: SystemSpec,
    /// Duration of every chain step.
    pub t: f64,
    pub c_max: f64,
    pub integrator: IntegratorConfig,
    /// Set by [`reverse_graph`]; images always describe the forward flow.
    pub reversed: bool,
    /// `φ_T` of each midpoint, wrapped into the domain.
    pub midpoint_images: Vec<f64>,
    /// Image enclosure of each cell (lifted on circles).
    pub cell_images: Vec<Interval>,
    pub cost: WeightedCsr,
    pub relation: Csr,
    pub enclosure: Csr,
}

/// Forward images of every midpoint and cell.
fn images(grid: &Grid, sys: &SystemSpec, t: f64, cfg: &IntegratorConfig) -> Result<(Vec<f64>, Vec<Interval>)> {
    if sys.domain != *grid.domain() {
        return Err(Error::InvalidParameter(format!(
            "system '{}' lives on a different domain than the grid",
            sys.id
        )));
    }
    cfg.validate()?;
    let n = grid.len();
    let mut mids = Vec::with_capacity(n);
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        mids.push(sys.time_t_map(grid.midpoint(i), t, cfg)?);
        cells.push(sys.cell_image(grid.cell(i), t, cfg)?);
    }
    Ok((mids, cells))
}

/// Default jump cutoff: `3h`, raised when the flow spreads neighbouring
/// midpoints so far apart that some cell would otherwise have no incoming
/// cost edge.
pub fn default_c_max(grid: &Grid, midpoint_images: &[f64]) -> f64 {
    let h = grid.h();
    let lifted: Vec<f64> = if grid.is_circle() {
        // Undo wrapping relative to each midpoint so consecutive images compare.
        (0..grid.len())
            .map(|i| {
                let m = grid.midpoint(i);
                let d = midpoint_images[i] - m;
                let l = grid.domain().length();
                m + d - l * (d / l).round()
            })
            .collect()
    } else {
        midpoint_images.to_vec()
    };
    let spread = lifted.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    (3.0 * h).max(0.5 * spread + 0.5 * h)
}

pub fn build_chain_graph(grid: &Grid, sys: &SystemSpec, t: f64, c_max: f64, cfg: &IntegratorConfig) -> Result<ChainGraph> {
    let (mids, cells) = images(grid, sys, t, cfg)?;
    assemble(grid, sys, t, c_max, cfg, mids, cells)
}

/// Builds with the cutoff chosen by [`default_c_max`].
pub fn build_chain_graph_default(grid: &Grid, sys: &SystemSpec, t: f64, cfg: &IntegratorConfig) -> Result<ChainGraph> {
    let (mids, cells) = images(grid, sys, t, cfg)?;
    let c_max = default_c_max(grid, &mids);
    assemble(grid, sys, t, c_max, cfg, mids, cells)
}

fn assemble(
    grid: &Grid,
    sys: &SystemSpec,
    t: f64,
    c_max: f64,
    cfg: &IntegratorConfig,
    mids: Vec<f64>,
    cells: Vec<Interval>,
) -> Result<ChainGraph> {
    let h = grid.h();
    if !(c_max >= h) || !c_max.is_finite() {
        return Err(Error::CutoffTooSmall { c_max, h });
    }
    let n = grid.len();
    let domain = *grid.domain();

    let mut cost = Vec::with_capacity(n);
    for &p in &mids {
        let mut edges: Vec<(usize, f64)> = lifted_range(grid, p - c_max, p + c_max, false)
            .into_iter()
            .filter_map(|j| {
                let w = domain.metric(p, grid.midpoint(j));
                (w <= c_max).then_some((j, w))
            })
            .collect();
        edges.sort_by_key(|e| e.0);
        edges.dedup_by_key(|e| e.0);
        cost.push(edges);
    }

    let mut relation = Vec::with_capacity(n);
    let mut enclosure = Vec::with_capacity(n);
    for img in &cells {
        relation.push(overlapping_cells(grid, *img));
        enclosure.push(lifted_range(grid, img.lo, img.hi, true));
    }

    Ok(ChainGraph {
        grid: grid.clone(),
        system: sys.clone(),
        t,
        c_max,
        integrator: *cfg,
        reversed: false,
        midpoint_images: mids,
        cell_images: cells,
        cost: WeightedCsr::from_lists(cost),
        relation: Csr::from_lists(&relation),
        enclosure: Csr::from_lists(&enclosure),
    })
}

/// Sorted cells met by `[lo, hi]`; with `closed`, a cell whose left edge
/// equals `lo` also pulls in its left neighbour.
fn lifted_range(grid: &Grid, lo: f64, hi: f64, closed: bool) -> Vec<usize> {
    let n = grid.len() as i64;
    let mut first = grid.lifted_cell(lo);
    let last = grid.lifted_cell(hi.max(lo));
    if closed && grid.lifted_edge(first) == lo && (grid.is_circle() || first > 0) {
        first -= 1;
    }
    wrap_range(grid, first, last, n)
}

/// Cells meeting the image in positive length (a degenerate image gives the
/// cell containing it).
fn overlapping_cells(grid: &Grid, img: Interval) -> Vec<usize> {
    let n = grid.len() as i64;
    let first = grid.lifted_cell(img.lo);
    if !(img.hi > img.lo) {
        return vec![grid.wrap_index(first)];
    }
    let mut last = grid.lifted_cell(img.hi);
    if last > first && grid.lifted_edge(last) >= img.hi {
        last -= 1;
    }
    wrap_range(grid, first, last, n)
}

fn wrap_range(grid: &Grid, first: i64, last: i64, n: i64) -> Vec<usize> {
    if last - first + 1 >= n {
        return (0..n as usize).collect();
    }
    let mut v: Vec<usize> = (first..=last).map(|c| grid.wrap_index(c)).collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Time reversal: every layer transposed.
pub fn reverse_graph(g: &ChainGraph) -> ChainGraph {
    ChainGraph {
        reversed: !g.reversed,
        cost: g.cost.transpose(),
        relation: g.relation.transpose(),
        enclosure: g.enclosure.transpose(),
        ..g.clone()
    }
}

impl ChainGraph {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    /// Cheapest outgoing cost edge, ties to the smaller target.
    pub fn cheapest_edge(&self, i: usize) -> Option<(usize, f64)> {
        self.cost.edges(i).fold(None, |best, e| match best {
            Some((_, w)) if w <= e.1 => best,
            _ => Some(e),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("chain graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: ChainGraph = serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        g.check().map_err(Error::Serialization)?;
        Ok(g)
    }

    fn check(&self) -> std::result::Result<(), String> {
        let n = self.len();
        self.cost.check(n)?;
        self.relation.check(n)?;
        self.enclosure.check(n)?;
        if self.midpoint_images.len() != n || self.cell_images.len() != n {
            return Err("image arrays do not match the cell count".into());
        }
        Ok(())
    }

    /// Graphviz rendering of the relation layer.
    pub fn relation_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph relation {{");
        let _ = writeln!(
            s,
            "  graph [label=\"{} n={} T={}\"];",
            self.system.id,
            self.len(),
            self.t
        );
        for i in 0..self.len() {
            let _ = writeln!(s, "  {i} [label=\"{i}\\n{:.6}\"];", self.grid.midpoint(i));
        }
        for i in 0..self.len() {
            for &j in self.relation.successors(i) {
                let _ = writeln!(s, "  {i} -> {j};");
            }
        }
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Domain;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn trivial_graph_edges() {
        let grid = Grid::new(Domain::interval(0.0, 1.0).unwrap(), 10).unwrap();
        let g = build_chain_graph(&grid, &SystemSpec::trivial(), 1.0, 0.3 + 1e-12, &cfg()).unwrap();
        for i in 0..10 {
            assert_eq!(g.relation.successors(i), &[i]);
            assert_eq!(g.cost.weight(i, i), Some(0.0));
            for (j, w) in g.cost.edges(i) {
                assert!((w - (i as f64 - j as f64).abs() * 0.1).abs() < 1e-12);
            }
            let lo = i.saturating_sub(3);
            let hi = (i + 3).min(9);
            assert_eq!(g.cost.edges(i).count(), hi - lo + 1);
        }
        assert_eq!(reverse_graph(&g).cost, g.cost);
        assert_eq!(reverse_graph(&g).relation, g.relation);
    }

    #[test]
    fn cutoff_below_cell_width_is_rejected() {
        let grid = Grid::new(Domain::interval(0.0, 1.0).unwrap(), 10).unwrap();
        let err = build_chain_graph(&grid, &SystemSpec::trivial(), 1.0, 0.05, &cfg()).unwrap_err();
        assert!(matches!(err, Error::CutoffTooSmall { .. }));
    }

    #[test]
    fn figure1_fixed_block_cells() {
        let grid = Grid::new(Domain::interval(0.0, 5.0).unwrap(), 500).unwrap();
        let g = build_chain_graph(&grid, &SystemSpec::figure1(), 2.0, 3.0 * grid.h(), &cfg()).unwrap();
        let h = grid.h();
        for i in 0..500 {
            let c = grid.cell(i);
            if c.lo >= 2.0 + h && c.hi <= 3.5 - h {
                assert_eq!(g.relation.successors(i), &[i]);
                assert_eq!(g.cost.weight(i, i), Some(0.0));
            }
        }
    }

    #[test]
    fn linear_sink_cheapest_edge() {
        let grid = Grid::new(Domain::interval(-1.0, 1.0).unwrap(), 20).unwrap();
        let g = build_chain_graph(&grid, &SystemSpec::linear_sink(), 1.0, 0.3, &cfg()).unwrap();
        let i = grid.cell_of(0.55).unwrap();
        assert!((grid.midpoint(i) - 0.55).abs() < 1e-12);
        let (j, w) = g.cheapest_edge(i).unwrap();
        assert!((grid.midpoint(j) - 0.25).abs() < 1e-12);
        assert!((w - (0.55 * (-1.0f64).exp() - 0.25).abs()).abs() < 1e-6);
        assert!((w - 0.0477).abs() < 1e-4);
    }

    #[test]
    fn json_round_trip_and_rejects_garbage() {
        let grid = Grid::new(Domain::circle(1.0).unwrap(), 40).unwrap();
        let g = build_chain_graph_default(&grid, &SystemSpec::circle_arc(), 2.0, &cfg()).unwrap();
        let back = ChainGraph::from_json(&g.to_json()).unwrap();
        assert!(back == g, "round trip changed the graph");
        assert!(ChainGraph::from_json("{}").is_err());
        let mut broken = g.clone();
        broken.relation.targets[0] = 99;
        assert!(ChainGraph::from_json(&broken.to_json()).is_err());
    }

    #[test]
    fn dot_lists_relation_edges() {
        let grid = Grid::new(Domain::interval(0.0, 1.0).unwrap(), 3).unwrap();
        let g = build_chain_graph(&grid, &SystemSpec::trivial(), 1.0, 1.0, &cfg()).unwrap();
        let dot = g.relation_dot();
        assert!(dot.starts_with("digraph relation {"));
        assert!(dot.contains("  1 -> 1;"));
    }
}
