//! Iterative Tarjan SCC and plain reachability over CSR adjacency.

use serde::{Deserialize, Serialize};

use crate::space::CellSet;

/// Compressed sparse row adjacency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Csr {
    pub offsets: Vec<usize>,
    pub targets: Vec<usize>,
}

impl Csr {
    pub fn from_lists(lists: &[Vec<usize>]) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for l in lists {
            targets.extend_from_slice(l);
            offsets.push(targets.len());
        }
        Csr { offsets, targets }
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

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.successors(i).binary_search(&j).is_ok()
    }

    /// Transposed adjacency with targets sorted.
    pub fn transpose(&self) -> Csr {
        let n = self.len();
        let mut lists = vec![Vec::new(); n];
        for i in 0..n {
            for &j in self.successors(i) {
                lists[j].push(i);
            }
        }
        Csr::from_lists(&lists)
    }

    pub(crate) fn check(&self, n: usize) -> Result<(), String> {
        if self.offsets.len() != n + 1 || self.offsets[0] != 0 {
            return Err(format!("offsets must have length {} and start at 0", n + 1));
        }
        if self.offsets.windows(2).any(|w| w[0] > w[1]) || self.offsets[n] != self.targets.len() {
            return Err("offsets are not monotone or do not match the target count".into());
        }
        if self.targets.iter().any(|&t| t >= n) {
            return Err("edge target out of range".into());
        }
        Ok(())
    }
}

/// Strongly connected components in Tarjan's completion order; each
/// component is sorted ascending.
pub fn tarjan(adj: &Csr) -> Vec<Vec<usize>> {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    // (vertex, next successor position)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(top) = call.last_mut() {
            let v = top.0;
            let succ = adj.successors(v);
            if top.1 < succ.len() {
                let w = succ[top.1];
                top.1 += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                comps.push(comp);
            }
        }
    }
    comps
}

/// Cells lying on a cycle: members of a nontrivial SCC or carrying a self-loop.
pub fn cycle_cells(adj: &Csr) -> CellSet {
    let n = adj.len();
    let mut set = CellSet::empty(n);
    for comp in tarjan(adj) {
        if comp.len() > 1 || adj.has_edge(comp[0], comp[0]) {
            for c in comp {
                set.insert(c);
            }
        }
    }
    set
}

/// Cells reachable from `start` in zero or more steps.
pub fn reach(adj: &Csr, start: &CellSet) -> CellSet {
    let mut seen = start.clone();
    let mut queue: Vec<usize> = start.indices();
    while let Some(v) = queue.pop() {
        for &w in adj.successors(v) {
            if !seen.contains(w) {
                seen.insert(w);
                queue.push(w);
            }
        }
    }
    seen
}

/// Cells reachable from `start` in one or more steps.
pub fn reach_strict(adj: &Csr, start: &CellSet) -> CellSet {
    let mut first = CellSet::empty(adj.len());
    for v in start.iter() {
        for &w in adj.successors(v) {
            first.insert(w);
        }
    }
    reach(adj, &first)
}

/// One-step image of a set.
pub fn image(adj: &Csr, set: &CellSet) -> CellSet {
    let mut out = CellSet::empty(adj.len());
    for v in set.iter() {
        for &w in adj.successors(v) {
            out.insert(w);
        }
    }
    out
}
