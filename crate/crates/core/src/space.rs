//! Compact 1-D domains, their uniform cell grids and cell sets.
//!
//! Cells are half-open `[l, r)`; on an interval the right endpoint of the
//! domain belongs to the last cell, on a circle the cells wrap. Points on a
//! circle are coordinates in `[0, L)`; intervals handed to the set-distance
//! routines may use a lifted coordinate (`hi` may exceed `L`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Circle { length: f64 },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        let d = Domain::Interval { a, b };
        d.validate()?;
        Ok(d)
    }

    pub fn circle(length: f64) -> Result<Self> {
        let d = Domain::Circle { length };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Domain::Interval { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::InvalidDomain(format!("non-finite endpoints [{a}, {b}]")));
                }
                if b <= a {
                    return Err(Error::InvalidDomain(format!("empty interval [{a}, {b}]")));
                }
            }
            Domain::Circle { length } => {
                if !length.is_finite() || length <= 0.0 {
                    return Err(Error::InvalidDomain(format!("circumference {length}")));
                }
            }
        }
        Ok(())
    }

    /// Left end of the coordinate range (0 on circles).
    pub fn start(&self) -> f64 {
        match *self {
            Domain::Interval { a, .. } => a,
            Domain::Circle { .. } => 0.0,
        }
    }

    /// Lebesgue measure of the domain.
    pub fn length(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Circle { length } => length,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Interval { a, b } => b - a,
            Domain::Circle { length } => length / 2.0,
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, Domain::Circle { .. })
    }

    pub fn contains(&self, p: f64) -> bool {
        match *self {
            Domain::Interval { a, b } => p >= a && p <= b,
            Domain::Circle { .. } => p.is_finite(),
        }
    }

    /// Maps a (possibly lifted) circle coordinate to `[0, L)`; identity on intervals.
    pub fn wrap(&self, p: f64) -> f64 {
        match *self {
            Domain::Interval { .. } => p,
            Domain::Circle { length } => {
                let r = p.rem_euclid(length);
                if r >= length {
                    0.0
                } else {
                    r
                }
            }
        }
    }

    /// Metric without domain checks.
    pub fn metric(&self, p: f64, q: f64) -> f64 {
        match *self {
            Domain::Interval { .. } => (p - q).abs(),
            Domain::Circle { length } => {
                let r = (p - q).abs().rem_euclid(length);
                r.min(length - r)
            }
        }
    }
}

/// Closed interval `[lo, hi]`, used for cell images and arcs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    domain: Domain,
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(domain: Domain, n: usize) -> Result<Self> {
        domain.validate()?;
        if n < 2 {
            return Err(Error::InvalidResolution(n));
        }
        Ok(Grid { domain, n, h: domain.length() / n as f64 })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn is_circle(&self) -> bool {
        self.domain.is_circle()
    }

    /// Left edge of cell `i`; `i == n` gives the right end of the domain.
    /// Computed as `a + |X|·i/n` so that edges at rational positions are exact.
    pub fn edge(&self, i: usize) -> f64 {
        self.domain.start() + self.domain.length() * i as f64 / self.n as f64
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.domain.start() + self.domain.length() * (2 * i + 1) as f64 / (2 * self.n) as f64
    }

    pub fn midpoints(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.midpoint(i)).collect()
    }

    pub fn cell(&self, i: usize) -> Interval {
        Interval::new(self.edge(i), self.edge(i + 1))
    }

    /// Index of the cell containing `p` (half-open convention).
    pub fn cell_of(&self, p: f64) -> Result<usize> {
        if !self.domain.contains(p) {
            return Err(Error::OutOfDomain(p));
        }
        Ok(self.locate(self.domain.wrap(p)))
    }

    /// Cell index of a coordinate already known to lie in `[start, start + |X|]`.
    fn locate(&self, p: f64) -> usize {
        let guess = ((p - self.domain.start()) / self.h).floor();
        let mut i = if guess.is_nan() || guess < 0.0 {
            0
        } else {
            (guess as usize).min(self.n - 1)
        };
        while i > 0 && p < self.edge(i) {
            i -= 1;
        }
        while i + 1 < self.n && p >= self.edge(i + 1) {
            i += 1;
        }
        i
    }

    /// Cell index in lifted coordinates: on a circle, `k·n + i` for
    /// `p = k·L + x` with `x` in cell `i`. Intervals are clamped.
    pub fn lifted_cell(&self, p: f64) -> i64 {
        match self.domain {
            Domain::Interval { a, b } => self.locate(p.clamp(a, b)) as i64,
            Domain::Circle { length } => {
                let k = (p / length).floor();
                let mut x = p - k * length;
                let mut k = k as i64;
                if x >= length {
                    x -= length;
                    k += 1;
                }
                if x < 0.0 {
                    x = 0.0;
                }
                k * self.n as i64 + self.locate(x) as i64
            }
        }
    }

    /// Left edge of a lifted cell index.
    pub fn lifted_edge(&self, c: i64) -> f64 {
        let n = self.n as i64;
        let k = c.div_euclid(n);
        let i = c.rem_euclid(n) as usize;
        k as f64 * self.domain.length() + self.edge(i)
    }

    pub fn wrap_index(&self, c: i64) -> usize {
        c.rem_euclid(self.n as i64) as usize
    }

    pub fn dist(&self, p: f64, q: f64) -> Result<f64> {
        for x in [p, q] {
            if !self.domain.contains(x) {
                return Err(Error::OutOfDomain(x));
            }
        }
        Ok(self.domain.metric(p, q))
    }

    /// Infimum of the metric over `I × J`; wrap-aware on circles.
    pub fn set_distance(&self, i: Interval, j: Interval) -> Result<f64> {
        if i.is_empty() || j.is_empty() || !i.lo.is_finite() || !j.hi.is_finite() {
            return Err(Error::EmptySet);
        }
        let gap = |x: Interval, y: Interval| (x.lo - y.hi).max(y.lo - x.hi).max(0.0);
        match self.domain {
            Domain::Interval { .. } => Ok(gap(i, j)),
            Domain::Circle { length } => {
                if i.len() >= length || j.len() >= length {
                    return Ok(0.0);
                }
                let norm = |x: Interval| {
                    let lo = x.lo.rem_euclid(length);
                    Interval::new(lo, lo + x.len())
                };
                let (i, j) = (norm(i), norm(j));
                let best = (-2..=2)
                    .map(|k| {
                        let s = k as f64 * length;
                        gap(i, Interval::new(j.lo + s, j.hi + s))
                    })
                    .fold(f64::INFINITY, f64::min);
                Ok(best)
            }
        }
    }

    /// Distance from a point to the closure of cell `c`.
    pub fn point_cell_distance(&self, p: f64, c: usize) -> f64 {
        self.set_distance(Interval::new(p, p), self.cell(c)).unwrap_or(f64::INFINITY)
    }

    /// `S` together with every cell whose midpoint lies at distance `< eta`
    /// from the union of the closed cells of `S`.
    pub fn eta_neighborhood(&self, s: &CellSet, eta: f64) -> CellSet {
        let n = self.n;
        let mut out = s.clone();
        if s.is_empty() || eta <= 0.0 {
            return out;
        }
        // Nearest member of S on each side; on circles the scan starts from
        // the member that wraps around.
        let wrap = self.is_circle();
        let mut prev = vec![None; n];
        let mut next = vec![None; n];
        let mut last = if wrap { s.iter().last() } else { None };
        for j in 0..n {
            if s.contains(j) {
                last = Some(j);
            }
            prev[j] = last;
        }
        last = if wrap { s.iter().next() } else { None };
        for j in (0..n).rev() {
            if s.contains(j) {
                last = Some(j);
            }
            next[j] = last;
        }
        for j in 0..n {
            if out.contains(j) {
                continue;
            }
            let m = self.midpoint(j);
            let d = [prev[j], next[j]]
                .into_iter()
                .flatten()
                .map(|c| self.point_cell_distance(m, c))
                .fold(f64::INFINITY, f64::min);
            if d < eta {
                out.insert(j);
            }
        }
        out
    }

    /// Index-adjacent cells (wrapping on circles).
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> {
        let n = self.n;
        let circle = self.is_circle();
        let left = if i > 0 { Some(i - 1) } else if circle { Some(n - 1) } else { None };
        let right = if i + 1 < n { Some(i + 1) } else if circle { Some(0) } else { None };
        left.into_iter().chain(right)
    }

    /// Cells from the one containing `lo` through the one containing `hi`.
    pub fn cells_between(&self, lo: f64, hi: f64) -> Result<CellSet> {
        let first = self.cell_of(lo)?;
        let last = self.cell_of(hi)?;
        let mut set = CellSet::empty(self.n);
        let mut i = first;
        loop {
            set.insert(i);
            if i == last {
                break;
            }
            i = (i + 1) % self.n;
            if !self.is_circle() && i == 0 {
                break;
            }
        }
        Ok(set)
    }

    /// Cells whose closure meets the closed interval `[lo, hi]`.
    pub fn cells_meeting(&self, lo: f64, hi: f64) -> Result<CellSet> {
        let mut set = self.cells_between(lo, hi)?;
        let first = self.cell_of(lo)?;
        if self.domain.wrap(lo) == self.edge(first) && (first > 0 || self.is_circle()) {
            set.insert((first + self.n - 1) % self.n);
        }
        Ok(set)
    }

    /// Cells within `k` index steps of `s`.
    pub fn dilate(&self, s: &CellSet, k: usize) -> CellSet {
        let mut cur = s.clone();
        for _ in 0..k {
            let mut next = cur.clone();
            for i in cur.iter() {
                for j in self.neighbors(i) {
                    next.insert(j);
                }
            }
            cur = next;
        }
        cur
    }

    /// Cells on either side of a membership change of `s`.
    pub fn boundary(&self, s: &CellSet) -> CellSet {
        let mut b = CellSet::empty(self.n);
        for i in 0..self.n {
            if self.neighbors(i).any(|j| s.contains(j) != s.contains(i)) {
                b.insert(i);
            }
        }
        b
    }

    /// Compares two cell sets up to a `k`-cell collar around the boundary of
    /// either set.
    pub fn compare_within_collar(&self, a: &CellSet, b: &CellSet, k: usize) -> CollarComparison {
        let diff = a.symmetric_difference(b);
        let mut edges = self.boundary(a);
        edges.union_with(&self.boundary(b));
        let collar = self.dilate(&edges, k);
        let outside: Vec<usize> = diff.iter().filter(|&i| !collar.contains(i)).collect();
        CollarComparison {
            symmetric_difference: diff.indices(),
            outside_collar: outside,
            collar_cells: k,
        }
    }

    /// Hausdorff distance between the midpoint sets of two cell sets.
    pub fn hausdorff(&self, a: &CellSet, b: &CellSet) -> f64 {
        if a.is_empty() && b.is_empty() {
            return 0.0;
        }
        if a.is_empty() || b.is_empty() {
            return f64::INFINITY;
        }
        let directed = |x: &CellSet, y: &CellSet| {
            let ys: Vec<f64> = y.iter().map(|j| self.midpoint(j)).collect();
            x.iter()
                .map(|i| {
                    let m = self.midpoint(i);
                    ys.iter().map(|&q| self.domain.metric(m, q)).fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        directed(a, b).max(directed(b, a))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollarComparison {
    pub symmetric_difference: Vec<usize>,
    pub outside_collar: Vec<usize>,
    pub collar_cells: usize,
}

impl CollarComparison {
    pub fn pass(&self) -> bool {
        self.outside_collar.is_empty()
    }
}

/// Subset of the cells of a grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    mask: Vec<bool>,
}

impl CellSet {
    pub fn empty(n: usize) -> Self {
        CellSet { mask: vec![false; n] }
    }

    pub fn full(n: usize) -> Self {
        CellSet { mask: vec![true; n] }
    }

    pub fn from_indices(n: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut s = CellSet::empty(n);
        for i in indices {
            if i >= n {
                return Err(Error::InvalidParameter(format!("cell index {i} out of range 0..{n}")));
            }
            s.mask[i] = true;
        }
        Ok(s)
    }

    pub fn singleton(n: usize, i: usize) -> Self {
        let mut s = CellSet::empty(n);
        s.insert(i);
        s
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        CellSet { mask }
    }

    /// Number of cells of the underlying grid.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask.get(i).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, i: usize) {
        self.mask[i] = true;
    }

    pub fn remove(&mut self, i: usize) {
        self.mask[i] = false;
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn union_with(&mut self, other: &CellSet) {
        for (a, &b) in self.mask.iter_mut().zip(&other.mask) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &CellSet) {
        for (a, &b) in self.mask.iter_mut().zip(&other.mask) {
            *a &= b;
        }
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        CellSet {
            mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && !b).collect(),
        }
    }

    pub fn symmetric_difference(&self, other: &CellSet) -> CellSet {
        CellSet {
            mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a != b).collect(),
        }
    }

    pub fn complement(&self) -> CellSet {
        CellSet { mask: self.mask.iter().map(|&b| !b).collect() }
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn is_disjoint(&self, other: &CellSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !(a && b))
    }
}

impl Serialize for CellSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}
