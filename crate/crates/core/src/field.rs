//! Vector fields `v(θ) d/dθ`, their Lie brackets and pushforwards.
//!
//! The bracket convention is `[V, W] = (v w′ − v′ w) d/dθ`, so the
//! noncommutative two-dimensional algebra reads `v w′ − v′ w = w`.

use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circle_map::CircleMap;
use crate::quadrature::adaptive_simpson;
use crate::trig::{PeriodicFunction, TrigPoly};

/// Grid used for cached pushforward samples and refitting.
pub const PUSHFORWARD_GRID: usize = 4096;
/// Maximum refit residual accepted by [`Coefficient::refit`].
pub const TAU_FIT: f64 = 1e-7;
/// Sampling used to test the nonvanishing precondition of [`solve_v_given_w`].
pub const NONVANISHING_SAMPLES: usize = 8192;
pub const NONVANISHING_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("pushforward is not representable by a trigonometric polynomial of degree <= {degree} (residual {residual:e})")]
    NotRepresentable { degree: usize, residual: f64 },
    #[error("coefficient vanishes near θ = {at} (|w| = {value:e})")]
    HasZero { at: f64, value: f64 },
}

/// Anything that can be evaluated with its slope on the circle.
pub trait Evaluate {
    /// `(f(θ), f′(θ))`.
    fn jet(&self, theta: f64) -> (f64, f64);

    fn value(&self, theta: f64) -> f64 {
        self.jet(theta).0
    }

    fn slope(&self, theta: f64) -> f64 {
        self.jet(theta).1
    }

    /// The exact representation, when there is one.
    fn exact(&self) -> Option<&PeriodicFunction> {
        None
    }
}

impl Evaluate for PeriodicFunction {
    fn jet(&self, theta: f64) -> (f64, f64) {
        (self.eval(theta), PeriodicFunction::slope(self, theta))
    }

    fn value(&self, theta: f64) -> f64 {
        self.eval(theta)
    }

    fn exact(&self) -> Option<&PeriodicFunction> {
        Some(self)
    }
}

impl Evaluate for TrigPoly {
    fn jet(&self, theta: f64) -> (f64, f64) {
        (self.eval(theta), TrigPoly::slope(self, theta))
    }
}

/// Coefficient of a vector field: exact, or an evaluable transform of
/// another coefficient.
#[derive(Debug, Clone)]
pub enum Coefficient {
    Exact(PeriodicFunction),
    Pushforward(Arc<Pushforward>),
    /// `v w′ − v′ w` of two non-exact coefficients.
    Bracket(Arc<(Coefficient, Coefficient)>),
    Contracted(Arc<Contraction>),
}

impl Evaluate for Coefficient {
    fn jet(&self, theta: f64) -> (f64, f64) {
        match self {
            Coefficient::Exact(f) => f.jet(theta),
            Coefficient::Pushforward(p) => p.jet(theta),
            Coefficient::Bracket(pair) => {
                let value = |t: f64| {
                    let (v, dv) = pair.0.jet(t);
                    let (w, dw) = pair.1.jet(t);
                    v * dw - dv * w
                };
                // five-point stencil; second derivatives are not tracked
                const H: f64 = 1e-4;
                let d = (value(theta - 2.0 * H) - 8.0 * value(theta - H) + 8.0 * value(theta + H)
                    - value(theta + 2.0 * H))
                    / (12.0 * H);
                (value(theta), d)
            }
            Coefficient::Contracted(c) => c.jet(theta),
        }
    }

    fn exact(&self) -> Option<&PeriodicFunction> {
        match self {
            Coefficient::Exact(f) => Some(f),
            _ => None,
        }
    }
}

impl From<PeriodicFunction> for Coefficient {
    fn from(f: PeriodicFunction) -> Self {
        Coefficient::Exact(f)
    }
}

impl Coefficient {
    /// Samples `(θᵢ, f(θᵢ))` on a uniform grid of `n` points from 0.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = TAU * i as f64 / n as f64;
                (t, self.value(t))
            })
            .collect()
    }

    /// Least-squares trigonometric fit of degree `<= max_degree` on the
    /// pushforward grid, accepted when the sup residual on the grid and its
    /// midpoints is within [`TAU_FIT`].
    pub fn refit(&self, max_degree: usize) -> Result<TrigPoly, FieldError> {
        if let Some(PeriodicFunction::Trig(p)) = self.exact() {
            if p.degree() <= max_degree {
                return Ok(p.clone());
            }
        }
        let n = PUSHFORWARD_GRID;
        let max_degree = max_degree.min(n / 2 - 1);
        let samples: Vec<f64> = match self {
            Coefficient::Pushforward(p) => p.grid().iter().map(|s| s.0).collect(),
            _ => self.sample(n).into_iter().map(|s| s.1).collect(),
        };
        let a0 = samples.iter().sum::<f64>() / n as f64;
        let mut cos = vec![0.0; max_degree];
        let mut sin = vec![0.0; max_degree];
        for m in 1..=max_degree {
            let (mut a, mut b) = (0.0, 0.0);
            for (i, f) in samples.iter().enumerate() {
                let (s, c) = (TAU * ((m * i) % n) as f64 / n as f64).sin_cos();
                a += f * c;
                b += f * s;
            }
            cos[m - 1] = 2.0 * a / n as f64;
            sin[m - 1] = 2.0 * b / n as f64;
        }
        let scale = samples.iter().fold(0.0f64, |m, f| m.max(f.abs())).max(1.0);
        for c in cos.iter_mut().chain(sin.iter_mut()) {
            if c.abs() < 1e-14 * scale {
                *c = 0.0;
            }
        }
        let fit = TrigPoly::new(a0, cos, sin).expect("equal lengths");
        let residual = (0..2 * n)
            .map(|i| {
                let t = TAU * i as f64 / (2 * n) as f64;
                (fit.eval(t) - self.value(t)).abs()
            })
            .fold(0.0, f64::max);
        if residual > TAU_FIT {
            return Err(FieldError::NotRepresentable {
                degree: max_degree,
                residual,
            });
        }
        Ok(fit)
    }
}

/// The coefficient `w̃` with `w̃(f(θ)) = w(θ)·f′(θ)`.
#[derive(Debug)]
pub struct Pushforward {
    source: Coefficient,
    map: CircleMap,
    grid: OnceLock<Vec<(f64, f64)>>,
}

impl Pushforward {
    pub fn new(source: Coefficient, map: CircleMap) -> Self {
        Pushforward {
            source,
            map,
            grid: OnceLock::new(),
        }
    }

    pub fn source(&self) -> &Coefficient {
        &self.source
    }

    pub fn map(&self) -> &CircleMap {
        &self.map
    }

    pub fn jet(&self, y: f64) -> (f64, f64) {
        let x = self.map.lift_inverse(y);
        let j = self.map.lift_jet(x);
        let (w, dw) = self.source.jet(x);
        (w * j.d1, dw + w * j.d2 / j.d1)
    }

    /// `(w̃, w̃′)` on the [`PUSHFORWARD_GRID`]-point grid, computed once.
    pub fn grid(&self) -> &[(f64, f64)] {
        self.grid.get_or_init(|| {
            (0..PUSHFORWARD_GRID)
                .map(|i| self.jet(TAU * i as f64 / PUSHFORWARD_GRID as f64))
                .collect()
        })
    }
}

/// Field on the circle obtained by collapsing a zero arc `[θ1, θ2]` to a
/// point with the end map of the collapsing homotopy.
#[derive(Debug)]
pub struct Contraction {
    source: Coefficient,
    theta1: f64,
    theta2: f64,
}

impl Contraction {
    pub(crate) fn new(source: Coefficient, theta1: f64, theta2: f64) -> Self {
        Contraction {
            source,
            theta1,
            theta2,
        }
    }

    /// Collapse point on the new circle.
    pub fn collapse_point(&self) -> f64 {
        if self.theta1 == 0.0 {
            0.0
        } else {
            self.theta2
        }
    }

    fn jet(&self, y: f64) -> (f64, f64) {
        let y = crate::trig::wrap_angle(y);
        let (a, b) = (self.theta1, self.theta2);
        // F(1, ·) is affine with slope `s` away from the collapsed arc
        let (x, s) = if a != 0.0 {
            if y < b {
                let s = b / a;
                (y / s, s)
            } else {
                (y, 1.0)
            }
        } else {
            let s = TAU / (TAU - b);
            (b + y / s, s)
        };
        let (w, dw) = self.source.jet(x);
        (s * w, dw)
    }
}

/// `v(θ) d/dθ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorField {
    coeff: Coefficient,
}

impl From<PeriodicFunction> for VectorField {
    fn from(f: PeriodicFunction) -> Self {
        VectorField::new(f)
    }
}

impl From<TrigPoly> for VectorField {
    fn from(p: TrigPoly) -> Self {
        VectorField::new(p.into())
    }
}

impl Evaluate for VectorField {
    fn jet(&self, theta: f64) -> (f64, f64) {
        self.coeff.jet(theta)
    }

    fn exact(&self) -> Option<&PeriodicFunction> {
        self.coeff.exact()
    }
}

impl VectorField {
    pub fn new(coeff: PeriodicFunction) -> Self {
        VectorField {
            coeff: Coefficient::Exact(coeff),
        }
    }

    pub fn from_coefficient(coeff: Coefficient) -> Self {
        VectorField { coeff }
    }

    pub fn coefficient(&self) -> &Coefficient {
        &self.coeff
    }

    pub fn bracket(&self, other: &VectorField) -> VectorField {
        bracket(self, other)
    }

    pub fn pushforward(&self, map: &CircleMap) -> VectorField {
        pushforward(self, map)
    }

    /// Sup norm of the coefficient on an `n`-point grid.
    pub fn sup_norm(&self, n: usize) -> f64 {
        (0..n)
            .map(|i| self.value(TAU * i as f64 / n as f64).abs())
            .fold(0.0, f64::max)
    }
}

/// `[V, W]` with coefficient `v w′ − v′ w`, exact when both inputs are.
pub fn bracket(v: &VectorField, w: &VectorField) -> VectorField {
    match (v.exact(), w.exact()) {
        (Some(a), Some(b)) => {
            let lhs = PeriodicFunction::multiply(a, &b.deriv());
            let rhs = PeriodicFunction::multiply(&a.deriv(), b);
            VectorField::new(PeriodicFunction::lincomb(1.0, &lhs, -1.0, &rhs))
        }
        _ => VectorField::from_coefficient(Coefficient::Bracket(Arc::new((
            v.coeff.clone(),
            w.coeff.clone(),
        )))),
    }
}

/// Pushforward of `x` under `f`: the field `w̃` with `w̃(f(θ)) = w(θ) f′(θ)`.
///
/// Rotations, reflections and the identity keep exact coefficients exact;
/// every other map yields an evaluable coefficient with a lazily cached
/// grid.
pub fn pushforward(x: &VectorField, f: &CircleMap) -> VectorField {
    VectorField::from_coefficient(push_coeff(&x.coeff, f))
}

fn push_coeff(c: &Coefficient, f: &CircleMap) -> Coefficient {
    match (c, f) {
        (_, CircleMap::Identity) => c.clone(),
        (Coefficient::Exact(p), CircleMap::Rotation { angle }) => Coefficient::Exact(p.shift(*angle)),
        // w̃(−θ) = −w(θ)
        (Coefficient::Exact(p), CircleMap::Reflection) => Coefficient::Exact(p.reflect().scale(-1.0)),
        (Coefficient::Exact(_), CircleMap::Compose { outer, inner }) if keeps_exact(inner) => {
            push_coeff(&push_coeff(c, inner), outer)
        }
        (Coefficient::Pushforward(p), _) => {
            let map = CircleMap::compose(f, p.map());
            push_coeff(p.source(), &map)
        }
        _ => Coefficient::Pushforward(Arc::new(Pushforward::new(c.clone(), f.clone()))),
    }
}

fn keeps_exact(f: &CircleMap) -> bool {
    match f {
        CircleMap::Identity | CircleMap::Rotation { .. } | CircleMap::Reflection => true,
        CircleMap::Compose { outer, inner } => keeps_exact(outer) && keeps_exact(inner),
        _ => false,
    }
}

/// Solution of `v w′ − v′ w = w` for a nonvanishing `w` on `[0, 2π)`:
/// `v(θ) = (−∫₀^θ dϑ/w(ϑ) + λ)·w(θ)`.
#[derive(Debug, Clone)]
pub struct PeriodicObstruction {
    w: PeriodicFunction,
    lambda: f64,
    /// `v(2π⁻) − v(0) = −w(0)·∫₀^{2π} dϑ/w`.
    pub defect: f64,
    /// `∫₀^{2π} dϑ/w`.
    pub period_integral: f64,
}

const SIMPSON_TOL: f64 = 1e-10;

impl PeriodicObstruction {
    /// `v(θ)` for `θ ∈ [0, 2π]` (no reduction mod 2π: `v` is not periodic).
    pub fn v(&self, theta: f64) -> f64 {
        let integral = adaptive_simpson(|t| 1.0 / self.w.eval(t), 0.0, theta, SIMPSON_TOL);
        (-integral + self.lambda) * self.w.eval(theta)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Attempt to solve the bracket relation for `v` given a nonvanishing `w`.
/// The returned defect is nonzero, so no periodic `v` exists.
pub fn solve_v_given_w(w: &PeriodicFunction, lambda: f64) -> Result<PeriodicObstruction, FieldError> {
    let mut min = (f64::INFINITY, 0.0);
    let mut signs = (false, false);
    for i in 0..NONVANISHING_SAMPLES {
        let t = TAU * i as f64 / NONVANISHING_SAMPLES as f64;
        let v = w.eval(t);
        if v.abs() < min.0 {
            min = (v.abs(), t);
        }
        signs.0 |= v > 0.0;
        signs.1 |= v < 0.0;
    }
    if min.0 < NONVANISHING_TOL || (signs.0 && signs.1) {
        return Err(FieldError::HasZero {
            at: min.1,
            value: min.0,
        });
    }
    let period_integral = adaptive_simpson(|t| 1.0 / w.eval(t), 0.0, TAU, SIMPSON_TOL);
    Ok(PeriodicObstruction {
        w: w.clone(),
        lambda,
        defect: -w.eval(0.0) * period_integral,
        period_integral,
    })
}

// serialization

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoefficientRepr {
    Pushforward {
        pushforward: PushRepr,
    },
    Bracket {
        bracket: (Coefficient, Coefficient),
    },
    Contracted {
        contracted: ContractRepr,
    },
    Exact(PeriodicFunction),
}

#[derive(Serialize, Deserialize)]
struct PushRepr {
    field: Coefficient,
    map: CircleMap,
}

#[derive(Serialize, Deserialize)]
struct ContractRepr {
    field: Coefficient,
    theta1: f64,
    theta2: f64,
}

impl Serialize for Coefficient {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            Coefficient::Exact(f) => CoefficientRepr::Exact(f.clone()),
            Coefficient::Pushforward(p) => CoefficientRepr::Pushforward {
                pushforward: PushRepr {
                    field: p.source.clone(),
                    map: p.map.clone(),
                },
            },
            Coefficient::Bracket(pair) => CoefficientRepr::Bracket {
                bracket: (pair.0.clone(), pair.1.clone()),
            },
            Coefficient::Contracted(c) => CoefficientRepr::Contracted {
                contracted: ContractRepr {
                    field: c.source.clone(),
                    theta1: c.theta1,
                    theta2: c.theta2,
                },
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Coefficient {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match CoefficientRepr::deserialize(d)? {
            CoefficientRepr::Exact(f) => Coefficient::Exact(f),
            CoefficientRepr::Pushforward { pushforward } => Coefficient::Pushforward(Arc::new(
                Pushforward::new(pushforward.field, pushforward.map),
            )),
            CoefficientRepr::Bracket { bracket } => Coefficient::Bracket(Arc::new(bracket)),
            CoefficientRepr::Contracted { contracted } => {
                Coefficient::Contracted(Arc::new(Contraction::new(
                    contracted.field,
                    contracted.theta1,
                    contracted.theta2,
                )))
            }
        })
    }
}
