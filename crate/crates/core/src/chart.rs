//! Interval charts: on each arc `Δₖ = (θₖ, θₖ₊₁)` of the uniform grid, the
//! monotone solution of `w(θ) f′(θ) = ±(1 − cos n f(θ))` with
//! `f(θ̄ₖ) = θ̄ₖ`.
//!
//! Separating variables gives `cot(n f / 2) = −n I(θ)` with
//! `I(θ) = ∫_{θ̄ₖ}^{θ} dϑ / |w(ϑ)|`; on the branch through the anchor this is
//!
//! ```text
//! f(θ) = θ̄ₖ + (2/n) · atan(n · I(θ))
//! ```
//!
//! which tends to `θₖ` and `θₖ₊₁` as `I → ∓∞`. `I` is tabulated on nodes
//! graded geometrically toward both endpoints, with 16-point Gauss–Legendre
//! on every cell, until `|n I|` passes [`SATURATION`]. Between the last node
//! and the endpoint the chart is continued linearly.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::circle_map::{monotone_solve, Jet};
use crate::field::{Coefficient, Evaluate};
use crate::quadrature::gauss16;
use crate::singularity::TAU_ZERO;

/// `|n·I|` beyond which the chart is in its asymptotic regime.
pub const SATURATION: f64 = 1e6;
/// Ratio between successive node distances to an endpoint.
const GRADING: f64 = 0.75;
const SIGN_SAMPLES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChartError {
    #[error("coefficient changes sign inside interval {k} (near θ = {at})")]
    SignChange { k: usize, at: f64 },
    #[error("coefficient vanishes throughout interval {k}")]
    Vanishes { k: usize },
}

/// Uniform singular grid `θₖ = 2πk/n` with midpoints `θ̄ₖ = π(2k+1)/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularGrid {
    n: usize,
}

impl SingularGrid {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "grid needs at least one point");
        SingularGrid { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `θₖ`; `point(n) = 2π`.
    pub fn point(&self, k: usize) -> f64 {
        if k == self.n {
            TAU
        } else {
            TAU * (k % self.n) as f64 / self.n as f64
        }
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        std::f64::consts::PI * (2 * (k % self.n) + 1) as f64 / self.n as f64
    }

    /// `(θₖ, θₖ₊₁)`.
    pub fn interval(&self, k: usize) -> (f64, f64) {
        (self.point(k), self.point(k + 1))
    }

    /// Index of the interval containing `theta ∈ [0, 2π)`; grid points belong
    /// to the interval on their right.
    pub fn locate(&self, theta: f64) -> usize {
        let k = (theta * self.n as f64 / TAU).floor() as usize;
        let k = k.min(self.n - 1);
        // correct the float estimate against the stored grid values
        if theta < self.point(k) {
            k.saturating_sub(1)
        } else if k + 1 < self.n && theta >= self.point(k + 1) {
            k + 1
        } else {
            k
        }
    }

    /// Whether `theta` is within `margin` of a grid point.
    pub fn near_point(&self, theta: f64, margin: f64) -> bool {
        (0..=self.n).any(|k| (theta - self.point(k)).abs() <= margin)
    }
}

/// Straightening chart on one grid interval.
#[derive(Debug, Clone)]
pub struct IntervalChart {
    n: usize,
    k: usize,
    sigma: f64,
    left: f64,
    right: f64,
    mid: f64,
    nodes: Vec<f64>,
    /// `I` at `nodes`, increasing.
    cum: Vec<f64>,
    source: Coefficient,
}

impl IntervalChart {
    pub fn build(source: &Coefficient, grid: SingularGrid, k: usize) -> Result<Self, ChartError> {
        let n = grid.n();
        let (left, right) = grid.interval(k);
        let mid = grid.midpoint(k);
        let sigma = interval_sign(source, left, right, k)?;
        let mut chart = IntervalChart {
            n,
            k,
            sigma,
            left,
            right,
            mid,
            nodes: Vec::new(),
            cum: Vec::new(),
            source: source.clone(),
        };
        let (mut ln, mut li) = chart.half_table(-1.0)?;
        let (rn, ri) = chart.half_table(1.0)?;
        ln.reverse();
        li.reverse();
        ln.push(mid);
        li.push(0.0);
        ln.extend(rn);
        li.extend(ri);
        chart.nodes = ln;
        chart.cum = li;
        Ok(chart)
    }

    /// Nodes from the midpoint toward one endpoint (`dir = −1` left).
    fn half_table(&self, dir: f64) -> Result<(Vec<f64>, Vec<f64>), ChartError> {
        let end = if dir < 0.0 { self.left } else { self.right };
        let half = 0.5 * (self.right - self.left);
        let (mut nodes, mut cum) = (Vec::new(), Vec::new());
        let (mut prev_x, mut prev_i) = (self.mid, 0.0);
        let mut d = half;
        loop {
            d *= GRADING;
            let x = end - dir * d;
            let wx = self.source.value(x) * self.sigma;
            if wx <= 0.0 {
                if wx.abs() > TAU_ZERO {
                    return Err(ChartError::SignChange { k: self.k, at: x });
                }
                break;
            }
            let piece = gauss16(|t| self.inv_abs_w(t), prev_x.min(x), prev_x.max(x));
            let i = prev_i + dir * piece;
            nodes.push(x);
            cum.push(i);
            (prev_x, prev_i) = (x, i);
            if (self.n as f64 * i).abs() > SATURATION || d < 1e-14 * (1.0 + end.abs()) {
                break;
            }
        }
        Ok((nodes, cum))
    }

    fn inv_abs_w(&self, t: f64) -> f64 {
        1.0 / (self.sigma * self.source.value(t))
    }

    /// +1 when the coefficient is positive on the interval, −1 when negative.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.left, self.right)
    }

    /// `I(θ) = ∫_{θ̄ₖ}^{θ} dϑ/|w|` from the table, or `None` outside the
    /// tabulated range.
    pub fn endpoint_integral(&self, x: f64) -> Option<f64> {
        let (first, last) = (self.nodes[0], *self.nodes.last().unwrap());
        if x < first || x > last {
            return None;
        }
        let j = self.nodes.partition_point(|&p| p <= x).clamp(1, self.nodes.len() - 1) - 1;
        let (a, b) = (self.nodes[j], self.nodes[j + 1]);
        Some(if x - a <= b - x {
            self.cum[j] + gauss16(|t| self.inv_abs_w(t), a, x)
        } else {
            self.cum[j + 1] - gauss16(|t| self.inv_abs_w(t), x, b)
        })
    }

    fn from_integral(&self, i: f64) -> f64 {
        let n = self.n as f64;
        self.mid + 2.0 / n * (n * i).atan()
    }

    /// Value and slope of the linear continuation between the outermost node
    /// and the endpoint on one side.
    fn band(&self, dir: f64) -> (f64, f64, f64) {
        let (node, i, end) = if dir < 0.0 {
            (self.nodes[0], self.cum[0], self.left)
        } else {
            (*self.nodes.last().unwrap(), *self.cum.last().unwrap(), self.right)
        };
        let f_node = self.from_integral(i);
        (node, f_node, (f_node - end) / (node - end))
    }

    pub fn jet(&self, x: f64) -> Jet {
        let n = self.n as f64;
        match self.endpoint_integral(x) {
            Some(i) => {
                let (w, dw) = self.source.jet(x);
                let (aw, daw) = (self.sigma * w, self.sigma * dw);
                let q = 1.0 + n * n * i * i;
                Jet {
                    value: self.from_integral(i),
                    d1: 2.0 / (aw * q),
                    d2: -2.0 * (daw * q + 2.0 * n * n * i) / (aw * aw * q * q),
                }
            }
            None => {
                let dir = if x < self.mid { -1.0 } else { 1.0 };
                let end = if dir < 0.0 { self.left } else { self.right };
                let (_, _, slope) = self.band(dir);
                Jet {
                    value: end + slope * (x - end),
                    d1: slope,
                    d2: 0.0,
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.jet(x).value
    }

    /// Preimage of `y` in the interval.
    pub fn inverse(&self, y: f64) -> f64 {
        let (ln, lf, ls) = self.band(-1.0);
        let (rn, rf, rs) = self.band(1.0);
        if y <= lf {
            return if y <= self.left { self.left } else { self.left + (y - self.left) / ls }
                .min(ln);
        }
        if y >= rf {
            return if y >= self.right { self.right } else { self.right + (y - self.right) / rs }
                .max(rn);
        }
        let n = self.n as f64;
        let target = (0.5 * n * (y - self.mid)).tan() / n;
        let j = self
            .cum
            .partition_point(|&c| c <= target)
            .clamp(1, self.cum.len() - 1)
            - 1;
        let (a, b) = (self.nodes[j], self.nodes[j + 1]);
        monotone_solve(
            |x| {
                let i = self.endpoint_integral(x).unwrap_or(target);
                (i - target, self.inv_abs_w(x))
            },
            a,
            b,
            0.5 * (a + b),
        )
    }

    /// One-sided limit of the slope at the left and right endpoints.
    pub fn end_slopes(&self) -> (f64, f64) {
        (self.band(-1.0).2, self.band(1.0).2)
    }
}

fn interval_sign(source: &Coefficient, left: f64, right: f64, k: usize) -> Result<f64, ChartError> {
    let (mut pos, mut neg) = (None, None);
    for i in 1..SIGN_SAMPLES {
        let x = left + (right - left) * i as f64 / SIGN_SAMPLES as f64;
        let w = source.value(x);
        if w > TAU_ZERO {
            pos = Some(x);
        } else if w < -TAU_ZERO {
            neg = Some(x);
        }
    }
    match (pos, neg) {
        (Some(_), Some(at)) => Err(ChartError::SignChange { k, at }),
        (Some(_), None) => Ok(1.0),
        (None, Some(_)) => Ok(-1.0),
        (None, None) => Err(ChartError::Vanishes { k }),
    }
}

/// All interval charts of a grid, glued into one circle map.
#[derive(Debug, Clone)]
pub struct GridChart {
    grid: SingularGrid,
    charts: Vec<IntervalChart>,
    source: Coefficient,
}

impl GridChart {
    /// Build the charts of every interval concurrently.
    pub fn build(source: &Coefficient, n: usize) -> Result<Self, ChartError> {
        let grid = SingularGrid::new(n);
        let charts = std::thread::scope(|s| {
            let handles: Vec<_> = (0..n)
                .map(|k| s.spawn(move || IntervalChart::build(source, grid, k)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chart worker panicked"))
                .collect::<Result<Vec<_>, _>>()
        })?;
        Ok(GridChart {
            grid,
            charts,
            source: source.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn grid(&self) -> SingularGrid {
        self.grid
    }

    pub fn source(&self) -> &Coefficient {
        &self.source
    }

    pub fn charts(&self) -> &[IntervalChart] {
        &self.charts
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.charts.iter().map(|c| c.sigma).collect()
    }

    /// Jet for `r ∈ [0, 2π)`. At a grid point the slope is the mean of the
    /// one-sided limits.
    pub fn jet(&self, r: f64) -> Jet {
        let k = self.grid.locate(r);
        if r == self.grid.point(k) {
            let n = self.grid.n();
            let left = self.charts[(k + n - 1) % n].end_slopes().1;
            let right = self.charts[k].end_slopes().0;
            return Jet {
                value: r,
                d1: 0.5 * (left + right),
                d2: 0.0,
            };
        }
        self.charts[k].jet(r)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        let k = self.grid.locate(y);
        if y == self.grid.point(k) {
            return y;
        }
        self.charts[k].inverse(y)
    }
}
