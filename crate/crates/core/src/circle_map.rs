//! Equivalence transformations of the circle.
//!
//! Every map is handled through its lift `F: ℝ → ℝ` with
//! `F(θ + 2π) = F(θ) + 2π·deg F`. Lifts expose a 2-jet (value, first and
//! second derivative) so that pushforwards keep an analytic slope.

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chart::GridChart;
use crate::field::{Coefficient, Contraction, Evaluate, VectorField};
use crate::trig::wrap_angle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("perturbation amplitude |ε| = {0} must be below 1")]
    PerturbationTooLarge(f64),
    #[error("perturbation harmonic must be at least 1")]
    ZeroHarmonic,
    #[error("affine knots must start at (0, 0), end at (2π, 2π) and increase strictly")]
    BadKnots,
    #[error("invalid interval ({0}, {1}): need 0 <= θ1 <= θ2 < 2π")]
    BadInterval(f64, f64),
    #[error("field does not vanish identically on ({0}, {1})")]
    NotZeroOnInterval(f64, f64),
    #[error("chart: {0}")]
    Chart(String),
}

/// Value, first and second derivative of a lift at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// A piecewise-C¹ bijection of the circle.
#[derive(Debug, Clone)]
pub enum CircleMap {
    Identity,
    /// `θ ↦ θ + angle`; the only map that moves 0.
    Rotation { angle: f64 },
    /// `θ ↦ −θ`, degree −1.
    Reflection,
    /// `θ ↦ θ + (ε/m)·sin(mθ)` with `|ε| < 1`.
    Perturbed { eps: f64, harmonic: u32 },
    /// Monotone piecewise-affine map through the given knots.
    Affine { knots: Vec<(f64, f64)> },
    /// Per-interval straightening charts of a reduction.
    Chart(Arc<GridChart>),
    /// `outer ∘ inner`.
    Compose {
        outer: Box<CircleMap>,
        inner: Box<CircleMap>,
    },
    Inverse(Box<CircleMap>),
}

impl CircleMap {
    pub fn identity() -> Self {
        CircleMap::Identity
    }

    pub fn rotation(angle: f64) -> Self {
        CircleMap::Rotation {
            angle: wrap_angle(angle),
        }
    }

    pub fn reflection() -> Self {
        CircleMap::Reflection
    }

    /// `θ + ε sin θ`.
    pub fn perturbed(eps: f64) -> Result<Self, MapError> {
        Self::perturbed_harmonic(eps, 1)
    }

    /// `θ + (ε/m) sin(mθ)`; its derivative `1 + ε cos(mθ)` stays positive.
    pub fn perturbed_harmonic(eps: f64, harmonic: u32) -> Result<Self, MapError> {
        if harmonic == 0 {
            return Err(MapError::ZeroHarmonic);
        }
        if !(eps.abs() < 1.0) {
            return Err(MapError::PerturbationTooLarge(eps));
        }
        Ok(CircleMap::Perturbed { eps, harmonic })
    }

    /// Piecewise-affine map through `knots`, which must run from `(0, 0)` to
    /// `(2π, 2π)` and increase strictly in both coordinates.
    pub fn affine(knots: Vec<(f64, f64)>) -> Result<Self, MapError> {
        let ok = knots.len() >= 2
            && knots[0] == (0.0, 0.0)
            && knots.last() == Some(&(TAU, TAU))
            && knots.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
        if !ok {
            return Err(MapError::BadKnots);
        }
        if knots.len() == 2 {
            return Ok(CircleMap::Identity);
        }
        Ok(CircleMap::Affine { knots })
    }

    pub fn chart(chart: GridChart) -> Self {
        CircleMap::Chart(Arc::new(chart))
    }

    /// `outer ∘ inner`, folding identities and rotation pairs.
    pub fn compose(outer: &CircleMap, inner: &CircleMap) -> CircleMap {
        match (outer, inner) {
            (CircleMap::Identity, m) | (m, CircleMap::Identity) => m.clone(),
            (CircleMap::Rotation { angle: a }, CircleMap::Rotation { angle: b }) => {
                let angle = wrap_angle(a + b);
                if angle == 0.0 {
                    CircleMap::Identity
                } else {
                    CircleMap::Rotation { angle }
                }
            }
            (CircleMap::Reflection, CircleMap::Reflection) => CircleMap::Identity,
            _ => CircleMap::Compose {
                outer: Box::new(outer.clone()),
                inner: Box::new(inner.clone()),
            },
        }
    }

    pub fn invert(&self) -> CircleMap {
        match self {
            CircleMap::Identity => CircleMap::Identity,
            CircleMap::Rotation { angle } => CircleMap::rotation(-angle),
            CircleMap::Reflection => CircleMap::Reflection,
            CircleMap::Inverse(m) => (**m).clone(),
            CircleMap::Compose { outer, inner } => {
                CircleMap::compose(&inner.invert(), &outer.invert())
            }
            other => CircleMap::Inverse(Box::new(other.clone())),
        }
    }

    /// +1 for orientation-preserving maps, −1 otherwise.
    pub fn degree(&self) -> i32 {
        match self {
            CircleMap::Reflection => -1,
            CircleMap::Compose { outer, inner } => outer.degree() * inner.degree(),
            CircleMap::Inverse(m) => m.degree(),
            _ => 1,
        }
    }

    /// Lift value with first and second derivatives.
    pub fn lift_jet(&self, x: f64) -> Jet {
        match self {
            CircleMap::Identity => Jet {
                value: x,
                d1: 1.0,
                d2: 0.0,
            },
            CircleMap::Rotation { angle } => Jet {
                value: x + angle,
                d1: 1.0,
                d2: 0.0,
            },
            CircleMap::Reflection => Jet {
                value: -x,
                d1: -1.0,
                d2: 0.0,
            },
            CircleMap::Perturbed { eps, harmonic } => {
                let m = f64::from(*harmonic);
                let (s, c) = (m * x).sin_cos();
                Jet {
                    value: x + eps / m * s,
                    d1: 1.0 + eps * c,
                    d2: -eps * m * s,
                }
            }
            CircleMap::Affine { knots } => {
                let (turns, r) = split_turns(x);
                let j = segment(knots.iter().map(|k| k.0), r);
                let (x0, y0) = knots[j];
                let (x1, y1) = knots[j + 1];
                let slope = (y1 - y0) / (x1 - x0);
                Jet {
                    value: y0 + slope * (r - x0) + TAU * turns,
                    d1: slope,
                    d2: 0.0,
                }
            }
            CircleMap::Chart(c) => {
                let (turns, r) = split_turns(x);
                let j = c.jet(r);
                Jet {
                    value: j.value + TAU * turns,
                    ..j
                }
            }
            CircleMap::Compose { outer, inner } => {
                let i = inner.lift_jet(x);
                let o = outer.lift_jet(i.value);
                Jet {
                    value: o.value,
                    d1: o.d1 * i.d1,
                    d2: o.d2 * i.d1 * i.d1 + o.d1 * i.d2,
                }
            }
            CircleMap::Inverse(m) => {
                let x0 = m.lift_inverse(x);
                let j = m.lift_jet(x0);
                Jet {
                    value: x0,
                    d1: 1.0 / j.d1,
                    d2: -j.d2 / (j.d1 * j.d1 * j.d1),
                }
            }
        }
    }

    /// Solve `F(x) = y` for the lift.
    pub fn lift_inverse(&self, y: f64) -> f64 {
        match self {
            CircleMap::Identity => y,
            CircleMap::Rotation { angle } => y - angle,
            CircleMap::Reflection => -y,
            CircleMap::Perturbed { eps, harmonic } => {
                let m = f64::from(*harmonic);
                let a = eps / m;
                monotone_solve(
                    |x| {
                        let (s, c) = (m * x).sin_cos();
                        (x + a * s - y, 1.0 + eps * c)
                    },
                    y - a.abs(),
                    y + a.abs(),
                    y,
                )
            }
            CircleMap::Affine { knots } => {
                let (turns, r) = split_turns(y);
                let j = segment(knots.iter().map(|k| k.1), r);
                let (x0, y0) = knots[j];
                let (x1, y1) = knots[j + 1];
                x0 + (r - y0) * (x1 - x0) / (y1 - y0) + TAU * turns
            }
            CircleMap::Chart(c) => {
                let (turns, r) = split_turns(y);
                c.inverse(r) + TAU * turns
            }
            CircleMap::Compose { outer, inner } => inner.lift_inverse(outer.lift_inverse(y)),
            CircleMap::Inverse(m) => m.lift_jet(y).value,
        }
    }

    /// Image of `theta` in `[0, 2π)`.
    pub fn apply(&self, theta: f64) -> f64 {
        wrap_angle(self.lift_jet(theta).value)
    }

    pub fn derivative(&self, theta: f64) -> f64 {
        self.lift_jet(theta).d1
    }

    /// Preimage of `theta` in `[0, 2π)`.
    pub fn apply_inverse(&self, theta: f64) -> f64 {
        wrap_angle(self.lift_inverse(theta))
    }

    /// One-sided derivative limits `(left, right)` at `theta`.
    pub fn derivative_limits(&self, theta: f64) -> (f64, f64) {
        const H: f64 = 1e-9;
        (self.derivative(theta - H), self.derivative(theta + H))
    }

    /// Random orientation-preserving map with fixed zero: a composition of
    /// one to three harmonic perturbations with `|ε| <= max_eps`.
    pub fn random_fixed_zero(rng: &mut impl Rng, max_eps: f64) -> CircleMap {
        let layers = rng.gen_range(1..=3);
        let mut map = CircleMap::Identity;
        for _ in 0..layers {
            let eps = rng.gen_range(-max_eps..=max_eps);
            let m = rng.gen_range(1..=3);
            let p = CircleMap::perturbed_harmonic(eps, m).expect("|ε| < 1");
            map = CircleMap::compose(&p, &map);
        }
        map
    }

    /// Random equivalence transformation: a fixed-zero map followed by a
    /// rotation, reflected with probability one half.
    pub fn random_equivalence(rng: &mut impl Rng, max_eps: f64) -> CircleMap {
        let mut map = Self::random_fixed_zero(rng, max_eps);
        if rng.gen_bool(0.5) {
            map = CircleMap::compose(&CircleMap::Reflection, &map);
        }
        CircleMap::compose(&CircleMap::rotation(rng.gen_range(0.0..TAU)), &map)
    }
}

fn split_turns(x: f64) -> (f64, f64) {
    let turns = (x / TAU).floor();
    let mut r = x - TAU * turns;
    let mut turns = turns;
    if r >= TAU {
        r -= TAU;
        turns += 1.0;
    }
    (turns, r.max(0.0))
}

/// Index `j` of the segment `[p_j, p_{j+1})` containing `r`.
fn segment(points: impl Iterator<Item = f64>, r: f64) -> usize {
    let pts: Vec<f64> = points.collect();
    let count = pts.partition_point(|&p| p <= r);
    count.clamp(1, pts.len() - 1) - 1
}

/// Root of an increasing function on `[lo, hi]` by Newton steps kept inside a
/// shrinking bisection bracket. `f` returns value and derivative.
pub(crate) fn monotone_solve(
    f: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    guess: f64,
) -> f64 {
    let mut x = guess.clamp(lo, hi);
    for _ in 0..200 {
        let (v, d) = f(x);
        if v == 0.0 {
            return x;
        }
        if v < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - v / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// The collapsing family `F_{θ1,θ2}(t, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homotopy {
    theta1: f64,
    theta2: f64,
}

impl Homotopy {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self, MapError> {
        if !(0.0 <= theta1 && theta1 < theta2 && theta2 < TAU) {
            return Err(MapError::BadInterval(theta1, theta2));
        }
        Ok(Homotopy { theta1, theta2 })
    }

    /// Evaluate at time `t ∈ [0, 1]` and angle `theta` (reduced to `[0, 2π)`).
    pub fn apply(&self, t: f64, theta: f64) -> f64 {
        let (a, b) = (self.theta1, self.theta2);
        let th = wrap_angle(theta);
        if a != 0.0 {
            if th < a {
                th + t * th / a * (b - a)
            } else if th < b {
                th + t * (b - th)
            } else {
                th
            }
        } else if th < b {
            th * (1.0 - t)
        } else {
            th - t * (TAU - th) / (TAU - b) * b
        }
    }
}

/// Collapse an arc `(θ1, θ2)` on which `field` vanishes identically, using
/// the end point of the homotopy `F_{θ1,θ2}(1, ·)`.
///
/// A zero field is accepted and gives the zero field back.
pub fn contract_interval(
    field: &VectorField,
    theta1: f64,
    theta2: f64,
) -> Result<VectorField, MapError> {
    if theta1 == theta2 && (0.0..TAU).contains(&theta1) {
        return Ok(field.clone());
    }
    Homotopy::new(theta1, theta2)?;
    const SAMPLES: usize = 512;
    let tol = crate::singularity::TAU_ZERO;
    let vanishes = (1..SAMPLES).all(|i| {
        let th = theta1 + (theta2 - theta1) * i as f64 / SAMPLES as f64;
        field.value(th).abs() <= tol
    });
    if !vanishes {
        return Err(MapError::NotZeroOnInterval(theta1, theta2));
    }
    Ok(VectorField::from_coefficient(Coefficient::Contracted(
        Arc::new(Contraction::new(field.coefficient().clone(), theta1, theta2)),
    )))
}

// serialization: {"kind": ..., ...}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MapRepr {
    Identity,
    Rotation {
        angle: f64,
    },
    Reflection,
    Perturbed {
        eps: f64,
        #[serde(default = "one")]
        harmonic: u32,
    },
    Affine {
        knots: Vec<(f64, f64)>,
    },
    Chart {
        n: usize,
        field: Coefficient,
    },
    Compose {
        outer: Box<CircleMap>,
        inner: Box<CircleMap>,
    },
    Inverse {
        map: Box<CircleMap>,
    },
}

fn one() -> u32 {
    1
}

impl Serialize for CircleMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            CircleMap::Identity => MapRepr::Identity,
            CircleMap::Rotation { angle } => MapRepr::Rotation { angle: *angle },
            CircleMap::Reflection => MapRepr::Reflection,
            CircleMap::Perturbed { eps, harmonic } => MapRepr::Perturbed {
                eps: *eps,
                harmonic: *harmonic,
            },
            CircleMap::Affine { knots } => MapRepr::Affine {
                knots: knots.clone(),
            },
            CircleMap::Chart(c) => MapRepr::Chart {
                n: c.n(),
                field: c.source().clone(),
            },
            CircleMap::Compose { outer, inner } => MapRepr::Compose {
                outer: outer.clone(),
                inner: inner.clone(),
            },
            CircleMap::Inverse(m) => MapRepr::Inverse { map: m.clone() },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CircleMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        Ok(match MapRepr::deserialize(d)? {
            MapRepr::Identity => CircleMap::Identity,
            MapRepr::Rotation { angle } => CircleMap::rotation(angle),
            MapRepr::Reflection => CircleMap::Reflection,
            MapRepr::Perturbed { eps, harmonic } => {
                CircleMap::perturbed_harmonic(eps, harmonic).map_err(D::Error::custom)?
            }
            MapRepr::Affine { knots } => CircleMap::affine(knots).map_err(D::Error::custom)?,
            MapRepr::Chart { n, field } => {
                let chart = GridChart::build(&field, n).map_err(D::Error::custom)?;
                CircleMap::chart(chart)
            }
            MapRepr::Compose { outer, inner } => CircleMap::Compose { outer, inner },
            MapRepr::Inverse { map } => CircleMap::Inverse(map),
        })
    }
}
