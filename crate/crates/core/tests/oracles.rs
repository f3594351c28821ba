//! Results checked against independently computed values: closed-form flows,
//! brute-force walk enumeration and direct iteration of the cell relation.

use std::collections::VecDeque;

use scr_core::analysis::{cost_from, cr_cells, min_cycle_cost, omega_limit_cells};
use scr_core::decompose::complementary;
use scr_core::{
    build_chain_graph, build_chain_graph_default, reverse_graph, CantorKind, CellSet, ChainGraph, Grid,
    IntegratorConfig, SystemSpec,
};

fn graph(sys: &SystemSpec, n: usize, t: f64) -> ChainGraph {
    let grid = Grid::new(sys.domain, n).unwrap();
    build_chain_graph_default(&grid, sys, t, &IntegratorConfig::default()).unwrap()
}

/// Closed-form flow of `x' = d(x, {0} ∪ [2, 3.5] ∪ {5})` on (0, 2).
fn figure1_exact(x: f64, t: f64) -> f64 {
    if x <= 0.0 || x >= 2.0 {
        return x;
    }
    if x < 1.0 {
        // x' = x until x reaches 1, then (2 - x)' = -(2 - x).
        let t1 = (1.0 / x).ln();
        if t <= t1 {
            x * t.exp()
        } else {
            2.0 - (-(t - t1)).exp()
        }
    } else {
        2.0 - (2.0 - x) * (-t).exp()
    }
}

#[test]
fn figure1_flow_matches_closed_form() {
    let sys = SystemSpec::figure1();
    let cfg = IntegratorConfig::default();
    for k in 1..200 {
        let x = 0.01 * k as f64;
        for t in [0.3, 1.0, 2.0, 3.7] {
            let got = sys.time_t_map(x, t, &cfg).unwrap();
            let want = figure1_exact(x, t);
            // RK4 loses an order at the kink x = 1; elsewhere it is far tighter.
            assert!((got - want).abs() <= 1e-5, "x={x} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn linear_sink_cheapest_edge_is_nearest_midpoint() {
    let g = graph(&SystemSpec::linear_sink(), 20, 2.0);
    let h = g.h();
    for i in 0..20 {
        let m = -1.0 + (i as f64 + 0.5) * h;
        let img = m * (-2.0f64).exp();
        let want = (0..20)
            .map(|j| (-1.0 + (j as f64 + 0.5) * h - img).abs())
            .fold(f64::INFINITY, f64::min);
        let (_, w) = g.cheapest_edge(i).unwrap();
        assert!((w - want).abs() <= 1e-6, "cell {i}: {w} vs {want}");
    }
}

#[test]
fn cantor_measures_match_closed_forms() {
    for m in 1..=7u32 {
        let std = SystemSpec::cantor(CantorKind::Standard, m).unwrap();
        assert!((std.fixed_measure() - (2.0f64 / 3.0).powi(m as i32)).abs() < 1e-12);
        let fat = SystemSpec::cantor(CantorKind::Fat, m).unwrap();
        assert!((fat.fixed_measure() - (0.5 + 0.5f64.powi(m as i32 + 1))).abs() < 1e-12);
    }
}

/// Adjacency lists of a chain graph's relation layer.
fn relation_lists(g: &ChainGraph) -> Vec<Vec<usize>> {
    (0..g.len()).map(|i| g.relation.successors(i).to_vec()).collect()
}

fn step(adj: &[Vec<usize>], cur: &[bool]) -> Vec<bool> {
    let mut next = vec![false; cur.len()];
    for (i, &on) in cur.iter().enumerate() {
        if on {
            for &j in &adj[i] {
                next[j] = true;
            }
        }
    }
    next
}

/// ω-enclosure of a single cell as the union of the exact-length iterates
/// `F^k({x})`, `n < k ≤ 2n + 1`.
fn omega_by_iteration(adj: &[Vec<usize>], x: usize) -> Vec<bool> {
    let n = adj.len();
    let mut cur = vec![false; n];
    cur[x] = true;
    let mut out = vec![false; n];
    for k in 1..=2 * n + 1 {
        cur = step(adj, &cur);
        if k > n {
            for i in 0..n {
                out[i] |= cur[i];
            }
        }
    }
    out
}

#[test]
fn omega_limit_matches_iteration() {
    for sys in [SystemSpec::figure1(), SystemSpec::circle_arc(), SystemSpec::linear_sink()] {
        let g = graph(&sys, 120, 2.0);
        let adj = relation_lists(&g);
        for x in (0..120).step_by(7) {
            let want = omega_by_iteration(&adj, x);
            let got = omega_limit_cells(&g, &CellSet::singleton(120, x)).unwrap();
            assert_eq!(got.mask(), &want[..], "{} cell {x}", sys.id);
        }
    }
}

#[test]
fn complementary_matches_pointwise_omega() {
    let sys = SystemSpec::figure1();
    let g = graph(&sys, 100, 2.0);
    let adj = relation_lists(&g);
    let omegas: Vec<Vec<bool>> = (0..100).map(|x| omega_by_iteration(&adj, x)).collect();
    for b in [
        g.grid.cells_between(2.0, 3.5).unwrap(),
        CellSet::singleton(100, 99),
        CellSet::singleton(100, 0),
        g.grid.cells_between(2.4, 3.0).unwrap(),
    ] {
        let comp = complementary(&g, &b).unwrap();
        for x in 0..100 {
            let misses = b.iter().all(|c| !omegas[x][c]);
            assert_eq!(comp.b_bullet.contains(x), misses, "cell {x}");
        }
    }
}

#[test]
fn cr_matches_self_reachability() {
    for sys in [SystemSpec::figure1(), SystemSpec::circle_arc(), SystemSpec::trivial()] {
        let g = graph(&sys, 80, 2.0);
        let adj: Vec<Vec<usize>> = (0..80).map(|i| g.enclosure.successors(i).to_vec()).collect();
        let cr = cr_cells(&g);
        for x in 0..80 {
            // x lies on a cycle iff some nonzero-length walk returns to it.
            let mut seen = vec![false; 80];
            let mut queue: VecDeque<usize> = adj[x].iter().copied().collect();
            while let Some(i) = queue.pop_front() {
                if !seen[i] {
                    seen[i] = true;
                    queue.extend(adj[i].iter().copied());
                }
            }
            assert_eq!(cr.contains(x), seen[x], "{} cell {x}", sys.id);
        }
    }
}

#[test]
fn reversed_relation_is_backward_reachability() {
    let g = graph(&SystemSpec::figure1(), 90, 2.0);
    let r = reverse_graph(&g);
    for i in 0..90 {
        for j in 0..90 {
            assert_eq!(r.relation.has_edge(j, i), g.relation.has_edge(i, j));
            assert_eq!(r.cost.weight(j, i), g.cost.weight(i, j));
        }
    }
}

/// Cheapest walk with `1..=2n` edges from any source, by relaxation over lengths.
fn brute_costs(g: &ChainGraph, sources: &[usize]) -> Vec<f64> {
    let n = g.len();
    let mut cur = vec![f64::INFINITY; n];
    for &s in sources {
        for (j, w) in g.cost.edges(s) {
            cur[j] = cur[j].min(w);
        }
    }
    let mut best = cur.clone();
    for _ in 2..=2 * n {
        let mut next = vec![f64::INFINITY; n];
        for i in 0..n {
            if cur[i].is_finite() {
                for (j, w) in g.cost.edges(i) {
                    next[j] = next[j].min(cur[i] + w);
                }
            }
        }
        for j in 0..n {
            best[j] = best[j].min(next[j]);
        }
        cur = next;
    }
    best
}

fn close(a: f64, b: f64) -> bool {
    (a.is_infinite() && b.is_infinite()) || (a - b).abs() <= 1e-12
}

#[test]
fn built_graph_costs_match_brute_force() {
    for sys in [SystemSpec::figure1(), SystemSpec::circle_arc(), SystemSpec::linear_sink()] {
        let g = graph(&sys, 40, 2.0);
        for s in [0usize, 13, 39] {
            let want = brute_costs(&g, &[s]);
            let got = cost_from(&g, &CellSet::singleton(40, s)).unwrap();
            for j in 0..40 {
                assert!(close(got.values[j], want[j]), "{} {s}->{j}: {} vs {}", sys.id, got.values[j], want[j]);
            }
        }
        let cyc = min_cycle_cost(&g);
        for i in 0..40 {
            let want = brute_costs(&g, &[i])[i];
            assert!(close(cyc.values[i], want), "{} cycle {i}: {} vs {}", sys.id, cyc.values[i], want);
        }
    }
}

#[test]
fn cantor_cost_is_fixed_measure_at_moderate_resolution() {
    // The flow carries chains across the gaps for free; only the fixed
    // pieces, of total length (2/3)^m, have to be jumped over.
    let sys = SystemSpec::cantor(CantorKind::Standard, 2).unwrap();
    let grid = Grid::new(sys.domain, 4000).unwrap();
    let g = build_chain_graph(&grid, &sys, 2.0, 3.0 * grid.h(), &IntegratorConfig::default()).unwrap();
    let f = cost_from(&g, &CellSet::singleton(4000, 0)).unwrap();
    let c = f.values[3999];
    assert!((c - (2.0f64 / 3.0).powi(2)).abs() <= 0.02, "{c}");
}
