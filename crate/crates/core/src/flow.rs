//! Vector fields on 1-D domains and their numerical time-T maps.
//!
//! Apart from the linear sink every built-in field is a distance field
//! `V(x) = d(x, S)` to a finite union of closed fixed intervals `S`, so the
//! flow moves in the positive direction off `S` and is stationary on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{Domain, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CantorKind {
    /// Middle-thirds construction.
    Standard,
    /// Smith–Volterra–Cantor construction (positive measure).
    Fat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Field {
    /// `V ≡ 0`.
    Zero,
    /// `V(x) = -x`.
    LinearSink,
    /// `V(x) = direction · d(x, S)` for sorted disjoint closed intervals `S`.
    Distance { fixed: Vec<Interval>, direction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    /// Short identifier echoed into graphs and reports.
    pub id: String,
    pub domain: Domain,
    pub field: Field,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// RK4 step size.
    pub dt: f64,
    /// Padding applied to both ends of every cell image.
    pub pad: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { dt: 0.01, pad: 0.0 }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("integrator step dt = {}", self.dt)));
        }
        if !(self.pad >= 0.0) || !self.pad.is_finite() {
            return Err(Error::InvalidParameter(format!("enclosure pad = {}", self.pad)));
        }
        Ok(())
    }
}

/// Closed intervals of the depth-`m` stage of a Cantor construction on [0, 1].
pub fn cantor_stage(kind: CantorKind, depth: u32) -> Vec<Interval> {
    let mut parts = vec![Interval::new(0.0, 1.0)];
    for k in 1..=depth {
        let mut next = Vec::with_capacity(parts.len() * 2);
        for iv in parts {
            match kind {
                CantorKind::Standard => {
                    let third = iv.len() / 3.0;
                    next.push(Interval::new(iv.lo, iv.lo + third));
                    next.push(Interval::new(iv.hi - third, iv.hi));
                }
                CantorKind::Fat => {
                    let half_gap = 0.25f64.powi(k as i32) / 2.0;
                    let c = (iv.lo + iv.hi) / 2.0;
                    next.push(Interval::new(iv.lo, c - half_gap));
                    next.push(Interval::new(c + half_gap, iv.hi));
                }
            }
        }
        parts = next;
    }
    parts
}

impl SystemSpec {
    /// The zero field on [0, 1].
    pub fn trivial() -> Self {
        SystemSpec {
            id: "trivial".into(),
            domain: Domain::Interval { a: 0.0, b: 1.0 },
            field: Field::Zero,
        }
    }

    /// `V(x) = -x` on [-1, 1].
    pub fn linear_sink() -> Self {
        SystemSpec {
            id: "linear_sink".into(),
            domain: Domain::Interval { a: -1.0, b: 1.0 },
            field: Field::LinearSink,
        }
    }

    /// Two isolated fixed endpoints and one interior fixed segment on [0, 5].
    pub fn figure1() -> Self {
        SystemSpec {
            id: "figure1".into(),
            domain: Domain::Interval { a: 0.0, b: 5.0 },
            field: Field::Distance {
                fixed: vec![
                    Interval::new(0.0, 0.0),
                    Interval::new(2.0, 3.5),
                    Interval::new(5.0, 5.0),
                ],
                direction: 1.0,
            },
        }
    }

    /// Unit circle with the fixed arc [0, 0.25]; everything else rotates
    /// toward the arc's entry end at 0.
    pub fn circle_arc() -> Self {
        SystemSpec {
            id: "circle_arc".into(),
            domain: Domain::Circle { length: 1.0 },
            field: Field::Distance { fixed: vec![Interval::new(0.0, 0.25)], direction: 1.0 },
        }
    }

    pub fn cantor(kind: CantorKind, depth: u32) -> Result<Self> {
        if depth < 1 {
            return Err(Error::InvalidParameter("cantor depth must be at least 1".into()));
        }
        let tag = match kind {
            CantorKind::Standard => "standard",
            CantorKind::Fat => "fat",
        };
        Ok(SystemSpec {
            id: format!("cantor_{tag}_{depth}"),
            domain: Domain::Interval { a: 0.0, b: 1.0 },
            field: Field::Distance { fixed: cantor_stage(kind, depth), direction: 1.0 },
        })
    }

    /// Distance field to user-supplied fixed intervals on `[a, b]`.
    pub fn fixed_set_field(a: f64, b: f64, mut fixed: Vec<Interval>) -> Result<Self> {
        let domain = Domain::interval(a, b)?;
        fixed.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        for iv in &fixed {
            if iv.is_empty() || !iv.lo.is_finite() || !iv.hi.is_finite() {
                return Err(Error::InvalidParameter(format!("fixed interval [{}, {}]", iv.lo, iv.hi)));
            }
            if iv.lo < a || iv.hi > b {
                return Err(Error::InvalidParameter(format!(
                    "fixed interval [{}, {}] leaves the domain [{a}, {b}]",
                    iv.lo, iv.hi
                )));
            }
        }
        for w in fixed.windows(2) {
            if w[1].lo <= w[0].hi {
                return Err(Error::InvalidParameter(format!(
                    "fixed intervals [{}, {}] and [{}, {}] are not disjoint",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(SystemSpec {
            id: "fixed_set_field".into(),
            domain,
            field: Field::Distance { fixed, direction: 1.0 },
        })
    }

    /// Declared fixed intervals; `None` when every point is fixed.
    pub fn fixed_intervals(&self) -> Option<Vec<Interval>> {
        match &self.field {
            Field::Zero => None,
            Field::LinearSink => Some(vec![Interval::new(0.0, 0.0)]),
            Field::Distance { fixed, .. } => Some(fixed.clone()),
        }
    }

    /// Lebesgue measure of the fixed set.
    pub fn fixed_measure(&self) -> f64 {
        match self.fixed_intervals() {
            None => self.domain.length(),
            Some(v) => v.iter().map(Interval::len).sum(),
        }
    }

    pub fn is_fixed(&self, x: f64) -> bool {
        self.velocity(x) == 0.0
    }

    /// Whether the closed interval lies entirely inside one fixed interval.
    pub fn is_fixed_interval(&self, cell: Interval) -> bool {
        match self.fixed_intervals() {
            None => true,
            Some(v) => v.iter().any(|iv| iv.lo <= cell.lo && cell.hi <= iv.hi),
        }
    }

    pub fn field_value(&self, x: f64) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain(x));
        }
        Ok(self.velocity(x))
    }

    /// Field value without a domain check; circle coordinates may be lifted.
    fn velocity(&self, x: f64) -> f64 {
        match &self.field {
            Field::Zero => 0.0,
            Field::LinearSink => -x,
            Field::Distance { fixed, direction } => direction * self.distance_to(fixed, x),
        }
    }

    fn distance_to(&self, fixed: &[Interval], x: f64) -> f64 {
        if fixed.is_empty() {
            return f64::INFINITY;
        }
        let x = self.domain.wrap(x);
        let to = |iv: &Interval| {
            if x >= iv.lo && x <= iv.hi {
                0.0
            } else {
                self.domain.metric(x, iv.lo).min(self.domain.metric(x, iv.hi))
            }
        };
        let k = fixed.partition_point(|iv| iv.lo <= x);
        let mut d = f64::INFINITY;
        if k > 0 {
            d = d.min(to(&fixed[k - 1]));
        }
        if k < fixed.len() {
            d = d.min(to(&fixed[k]));
        }
        if self.domain.is_circle() {
            d = d.min(to(&fixed[0])).min(to(&fixed[fixed.len() - 1]));
        }
        d
    }

    /// `φ_T(x)`; on circles the result is wrapped into `[0, L)`.
    pub fn time_t_map(&self, x: f64, t: f64, cfg: &IntegratorConfig) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(Error::OutOfDomain(x));
        }
        Ok(self.domain.wrap(self.flow_lifted(x, t, cfg)?))
    }

    /// `φ_T(x)` in the lifted coordinate (clamped on intervals).
    pub fn flow_lifted(&self, x: f64, t: f64, cfg: &IntegratorConfig) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("flow time T = {t}")));
        }
        cfg.validate()?;
        let steps = ((t / cfg.dt) - 1e-9).ceil().max(1.0) as usize;
        let mut y = x;
        for s in 0..steps {
            if self.velocity(y) == 0.0 {
                break;
            }
            let dt = if s + 1 == steps { t - cfg.dt * (steps - 1) as f64 } else { cfg.dt };
            let k1 = self.velocity(y);
            let k2 = self.velocity(y + 0.5 * dt * k1);
            let k3 = self.velocity(y + 0.5 * dt * k2);
            let k4 = self.velocity(y + dt * k3);
            y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !y.is_finite() {
                return Err(Error::IntegrationFailure { x0: x, t: dt * (s + 1) as f64 });
            }
        }
        Ok(match self.domain {
            Domain::Interval { a, b } => y.clamp(a, b),
            Domain::Circle { .. } => y,
        })
    }

    /// Enclosure `[φ_T(l) - pad, φ_T(r) + pad]` of the image of a cell. Flows
    /// on a line preserve order, so the endpoint images bound the image.
    pub fn cell_image(&self, cell: Interval, t: f64, cfg: &IntegratorConfig) -> Result<Interval> {
        let lo = self.flow_lifted(cell.lo, t, cfg)? - cfg.pad;
        let hi = self.flow_lifted(cell.hi, t, cfg)? + cfg.pad;
        Ok(match self.domain {
            Domain::Interval { a, b } => Interval::new(lo.clamp(a, b), hi.clamp(a, b)),
            Domain::Circle { .. } => Interval::new(lo, hi),
        })
    }
}
