//! Exact arithmetic on 2π-periodic trigonometric polynomials and their
//! piecewise (C¹-glued) counterparts.
//!
//! A [`TrigPoly`] stores `a0 + Σ a_m cos(mθ) + b_m sin(mθ)` for `m = 1..=M`.
//! A [`PiecewiseTrig`] stores one polynomial per arc between consecutive
//! breakpoints; each breakpoint belongs to the arc on its right.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for value and slope agreement at piecewise breakpoints.
pub const TAU_C1: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrigError {
    #[error("cosine and sine coefficient lists differ in length ({cos} vs {sin})")]
    LengthMismatch { cos: usize, sin: usize },
    #[error("breakpoints must be strictly increasing angles in [0, 2π)")]
    BadBreakpoints,
    #[error("piecewise function needs one polynomial per breakpoint ({breaks} breakpoints, {pieces} pieces)")]
    PieceCount { breaks: usize, pieces: usize },
    #[error("piece {index} ends at {to} but the next piece starts at {next_from}")]
    Gap { index: usize, to: f64, next_from: f64 },
    #[error("not C¹ at θ = {at}: value jump {value_jump:e}, slope jump {slope_jump:e}")]
    NotC1 {
        at: f64,
        value_jump: f64,
        slope_jump: f64,
    },
    #[error("non-finite coefficient")]
    NonFinite,
}

/// Reduce an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Finite trigonometric polynomial with real coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "TrigPolyRepr", into = "TrigPolyRepr")]
pub struct TrigPoly {
    a0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TrigPolyRepr {
    a0: f64,
    #[serde(default)]
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
}

impl TryFrom<TrigPolyRepr> for TrigPoly {
    type Error = TrigError;

    fn try_from(r: TrigPolyRepr) -> Result<Self, Self::Error> {
        TrigPoly::new(r.a0, r.cos, r.sin)
    }
}

impl From<TrigPoly> for TrigPolyRepr {
    fn from(p: TrigPoly) -> Self {
        TrigPolyRepr {
            a0: p.a0,
            cos: p.cos,
            sin: p.sin,
        }
    }
}

impl TrigPoly {
    /// Build from `a0`, cosine coefficients `a_1..a_M` and sine coefficients
    /// `b_1..b_M`. Lists of unequal length are rejected.
    pub fn new(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self, TrigError> {
        if cos.len() != sin.len() {
            return Err(TrigError::LengthMismatch {
                cos: cos.len(),
                sin: sin.len(),
            });
        }
        if !a0.is_finite() || cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
            return Err(TrigError::NonFinite);
        }
        Ok(Self::from_parts(a0, cos, sin))
    }

    fn from_parts(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        let mut p = TrigPoly { a0, cos, sin };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        TrigPoly {
            a0: c,
            ..Self::default()
        }
    }

    /// `c · cos(mθ)`; `m = 0` gives the constant `c`.
    pub fn cos_term(m: usize, c: f64) -> Self {
        let mut p = Self::with_degree(m);
        if m == 0 {
            p.a0 = c;
        } else {
            p.cos[m - 1] = c;
        }
        p.trim();
        p
    }

    /// `c · sin(mθ)`; `m = 0` gives zero.
    pub fn sin_term(m: usize, c: f64) -> Self {
        let mut p = Self::with_degree(m);
        if m > 0 {
            p.sin[m - 1] = c;
        }
        p.trim();
        p
    }

    fn with_degree(m: usize) -> Self {
        TrigPoly {
            a0: 0.0,
            cos: vec![0.0; m],
            sin: vec![0.0; m],
        }
    }

    fn trim(&mut self) {
        while matches!((self.cos.last(), self.sin.last()), (Some(&c), Some(&s)) if c == 0.0 && s == 0.0)
        {
            self.cos.pop();
            self.sin.pop();
        }
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// Cosine coefficient of harmonic `m` (`m = 0` is the constant term).
    pub fn cos_coeff(&self, m: usize) -> f64 {
        if m == 0 {
            self.a0
        } else {
            self.cos.get(m - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn sin_coeff(&self, m: usize) -> f64 {
        if m == 0 {
            0.0
        } else {
            self.sin.get(m - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn degree(&self) -> usize {
        self.cos.len()
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.cos
            .iter()
            .chain(self.sin.iter())
            .fold(self.a0.abs(), |m, c| m.max(c.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.a0 == 0.0 && self.cos.is_empty()
    }

    /// True when every coefficient is at most `tol` in magnitude.
    pub fn is_negligible(&self, tol: f64) -> bool {
        self.max_abs_coeff() <= tol
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let (c1, s1) = {
            let t = wrap_angle(theta);
            (t.cos(), t.sin())
        };
        let (mut c, mut s) = (1.0, 0.0);
        let mut acc = self.a0;
        for (a, b) in self.cos.iter().zip(&self.sin) {
            (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
            acc += a * c + b * s;
        }
        acc
    }

    /// Value of the derivative at `theta` without building it.
    pub fn slope(&self, theta: f64) -> f64 {
        let t = wrap_angle(theta);
        let (c1, s1) = (t.cos(), t.sin());
        let (mut c, mut s) = (1.0, 0.0);
        let mut acc = 0.0;
        for (i, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
            let m = (i + 1) as f64;
            acc += m * (b * c - a * s);
        }
        acc
    }

    pub fn deriv(&self) -> Self {
        let mut d = Self::with_degree(self.degree());
        for m in 1..=self.degree() {
            let k = m as f64;
            d.cos[m - 1] = k * self.sin[m - 1];
            d.sin[m - 1] = -k * self.cos[m - 1];
        }
        d.trim();
        d
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self::from_parts(
            alpha * self.a0,
            self.cos.iter().map(|c| alpha * c).collect(),
            self.sin.iter().map(|c| alpha * c).collect(),
        )
    }

    pub fn lincomb(alpha: f64, f: &TrigPoly, beta: f64, g: &TrigPoly) -> TrigPoly {
        let m = f.degree().max(g.degree());
        let mut out = Self::with_degree(m);
        out.a0 = alpha * f.a0 + beta * g.a0;
        for k in 1..=m {
            out.cos[k - 1] = alpha * f.cos_coeff(k) + beta * g.cos_coeff(k);
            out.sin[k - 1] = alpha * f.sin_coeff(k) + beta * g.sin_coeff(k);
        }
        out.trim();
        out
    }

    /// Product by the product-to-sum identities; the result has degree
    /// `deg f + deg g`.
    pub fn multiply(f: &TrigPoly, g: &TrigPoly) -> TrigPoly {
        let mut acc = Accumulator::new(f.degree() + g.degree());
        for i in 0..=f.degree() {
            let (fa, fb) = (f.cos_coeff(i), f.sin_coeff(i));
            if fa == 0.0 && fb == 0.0 {
                continue;
            }
            for j in 0..=g.degree() {
                let (ga, gb) = (g.cos_coeff(j), g.sin_coeff(j));
                if ga == 0.0 && gb == 0.0 {
                    continue;
                }
                let (i, j) = (i as i64, j as i64);
                // cos i · cos j
                acc.cos(i - j, 0.5 * fa * ga);
                acc.cos(i + j, 0.5 * fa * ga);
                // sin i · sin j
                acc.cos(i - j, 0.5 * fb * gb);
                acc.cos(i + j, -0.5 * fb * gb);
                // cos i · sin j
                acc.sin(i + j, 0.5 * fa * gb);
                acc.sin(i - j, -0.5 * fa * gb);
                // sin i · cos j
                acc.sin(i + j, 0.5 * fb * ga);
                acc.sin(i - j, 0.5 * fb * ga);
            }
        }
        acc.finish()
    }

    /// The polynomial `θ ↦ f(θ − α)`.
    pub fn shift(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for m in 1..=self.degree() {
            let (s, c) = (m as f64 * alpha).sin_cos();
            let (a, b) = (self.cos[m - 1], self.sin[m - 1]);
            out.cos[m - 1] = a * c - b * s;
            out.sin[m - 1] = a * s + b * c;
        }
        out
    }

    /// The polynomial `θ ↦ f(−θ)`.
    pub fn reflect(&self) -> Self {
        Self::from_parts(
            self.a0,
            self.cos.clone(),
            self.sin.iter().map(|b| -b).collect(),
        )
    }
}

/// Sparse-to-dense accumulator indexed by signed harmonic.
struct Accumulator {
    a0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Accumulator {
    fn new(degree: usize) -> Self {
        Accumulator {
            a0: 0.0,
            cos: vec![0.0; degree],
            sin: vec![0.0; degree],
        }
    }

    fn cos(&mut self, m: i64, c: f64) {
        match m.unsigned_abs() as usize {
            0 => self.a0 += c,
            k => self.cos[k - 1] += c,
        }
    }

    fn sin(&mut self, m: i64, c: f64) {
        match m.unsigned_abs() as usize {
            0 => {}
            k => self.sin[k - 1] += if m < 0 { -c } else { c },
        }
    }

    fn finish(self) -> TrigPoly {
        TrigPoly::from_parts(self.a0, self.cos, self.sin)
    }
}

/// Piecewise trigonometric polynomial on the circle.
///
/// Piece `j` covers `[breaks[j], breaks[j+1])`; the last piece wraps around
/// to `breaks[0] + 2π`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseTrig {
    breaks: Vec<f64>,
    pieces: Vec<TrigPoly>,
}

impl PiecewiseTrig {
    /// Build and check C¹ gluing at every breakpoint with [`TAU_C1`].
    pub fn new(breaks: Vec<f64>, pieces: Vec<TrigPoly>) -> Result<Self, TrigError> {
        Self::with_tolerance(breaks, pieces, TAU_C1)
    }

    pub fn with_tolerance(
        breaks: Vec<f64>,
        pieces: Vec<TrigPoly>,
        tol: f64,
    ) -> Result<Self, TrigError> {
        let p = Self::unchecked(breaks, pieces)?;
        if let Some((at, value_jump, slope_jump)) = p.worst_gluing() {
            if value_jump > tol || slope_jump > tol {
                return Err(TrigError::NotC1 {
                    at,
                    value_jump,
                    slope_jump,
                });
            }
        }
        Ok(p)
    }

    /// Build without the C¹ check (used for derivatives and brackets, which
    /// are only continuous).
    pub(crate) fn unchecked(breaks: Vec<f64>, pieces: Vec<TrigPoly>) -> Result<Self, TrigError> {
        if breaks.is_empty() || breaks.len() != pieces.len() {
            return Err(TrigError::PieceCount {
                breaks: breaks.len(),
                pieces: pieces.len(),
            });
        }
        let in_range = breaks.iter().all(|b| (0.0..TAU).contains(b));
        let increasing = breaks.windows(2).all(|w| w[0] < w[1]);
        if !in_range || !increasing {
            return Err(TrigError::BadBreakpoints);
        }
        Ok(PiecewiseTrig { breaks, pieces })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[TrigPoly] {
        &self.pieces
    }

    /// `(from, to, poly)` for every piece; `to` of the last piece may exceed 2π.
    pub fn arcs(&self) -> impl Iterator<Item = (f64, f64, &TrigPoly)> + '_ {
        let n = self.breaks.len();
        (0..n).map(move |j| {
            let to = if j + 1 < n {
                self.breaks[j + 1]
            } else {
                self.breaks[0] + TAU
            };
            (self.breaks[j], to, &self.pieces[j])
        })
    }

    /// Index of the piece that owns `theta`.
    pub fn piece_index(&self, theta: f64) -> usize {
        let t = wrap_angle(theta);
        // number of breakpoints <= t
        let count = self.breaks.partition_point(|&b| b <= t);
        if count == 0 {
            self.breaks.len() - 1
        } else {
            count - 1
        }
    }

    pub fn piece_at(&self, theta: f64) -> &TrigPoly {
        &self.pieces[self.piece_index(theta)]
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.piece_at(theta).eval(theta)
    }

    pub fn slope(&self, theta: f64) -> f64 {
        self.piece_at(theta).slope(theta)
    }

    /// Largest value and slope jumps across breakpoints, with the location.
    pub fn worst_gluing(&self) -> Option<(f64, f64, f64)> {
        let n = self.breaks.len();
        let mut worst: Option<(f64, f64, f64)> = None;
        for j in 0..n {
            let b = self.breaks[j];
            let left = &self.pieces[(j + n - 1) % n];
            let right = &self.pieces[j];
            let dv = (left.eval(b) - right.eval(b)).abs();
            let ds = (left.slope(b) - right.slope(b)).abs();
            let score = dv.max(ds);
            if worst.map_or(true, |(_, a, c)| score > a.max(c)) {
                worst = Some((b, dv, ds));
            }
        }
        worst
    }

    fn map_pieces(&self, f: impl Fn(&TrigPoly) -> TrigPoly) -> Self {
        PiecewiseTrig {
            breaks: self.breaks.clone(),
            pieces: self.pieces.iter().map(f).collect(),
        }
    }

    /// Merge breakpoint sets of two piecewise functions and combine the
    /// polynomials that are active on each resulting arc.
    fn merge_with(
        &self,
        other: &PiecewiseTrig,
        f: impl Fn(&TrigPoly, &TrigPoly) -> TrigPoly,
    ) -> Self {
        let mut breaks: Vec<f64> = self.breaks.iter().chain(&other.breaks).copied().collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let pieces = breaks
            .iter()
            .map(|&b| f(self.piece_at(b), other.piece_at(b)))
            .collect();
        PiecewiseTrig { breaks, pieces }
    }

    /// `θ ↦ f(θ − α)`, i.e. the function carried along a rotation by `α`.
    pub fn shift(&self, alpha: f64) -> Self {
        let mut arcs: Vec<(f64, TrigPoly)> = self
            .breaks
            .iter()
            .zip(&self.pieces)
            .map(|(&b, p)| (wrap_angle(b + alpha), p.shift(alpha)))
            .collect();
        arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
        arcs.dedup_by(|a, b| a.0 == b.0);
        let (breaks, pieces) = arcs.into_iter().unzip();
        PiecewiseTrig { breaks, pieces }
    }

    /// `θ ↦ f(−θ)`.
    pub fn reflect(&self) -> Self {
        // arc [b_j, b_{j+1}) maps to (−b_{j+1}, −b_j]; ownership moves to the
        // image of the right endpoint
        let n = self.breaks.len();
        let mut arcs: Vec<(f64, TrigPoly)> = (0..n)
            .map(|j| {
                let right = self.breaks[(j + 1) % n];
                (wrap_angle(-right), self.pieces[j].reflect())
            })
            .collect();
        arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (breaks, pieces) = arcs.into_iter().unzip();
        PiecewiseTrig { breaks, pieces }
    }
}

/// A C¹ 2π-periodic function: a single trigonometric polynomial or a
/// piecewise one.
#[derive(Debug, Clone, PartialEq)]
pub enum PeriodicFunction {
    Trig(TrigPoly),
    Piecewise(PiecewiseTrig),
}

impl From<TrigPoly> for PeriodicFunction {
    fn from(p: TrigPoly) -> Self {
        PeriodicFunction::Trig(p)
    }
}

impl From<PiecewiseTrig> for PeriodicFunction {
    fn from(p: PiecewiseTrig) -> Self {
        PeriodicFunction::Piecewise(p)
    }
}

impl PeriodicFunction {
    pub fn zero() -> Self {
        TrigPoly::zero().into()
    }

    pub fn constant(c: f64) -> Self {
        TrigPoly::constant(c).into()
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            PeriodicFunction::Trig(p) => p.eval(theta),
            PeriodicFunction::Piecewise(p) => p.eval(theta),
        }
    }

    pub fn slope(&self, theta: f64) -> f64 {
        match self {
            PeriodicFunction::Trig(p) => p.slope(theta),
            PeriodicFunction::Piecewise(p) => p.slope(theta),
        }
    }

    /// Term-wise derivative. For piecewise input the result is continuous
    /// but in general not C¹.
    pub fn deriv(&self) -> Self {
        match self {
            PeriodicFunction::Trig(p) => p.deriv().into(),
            PeriodicFunction::Piecewise(p) => p.map_pieces(TrigPoly::deriv).into(),
        }
    }

    pub fn scale(&self, alpha: f64) -> Self {
        match self {
            PeriodicFunction::Trig(p) => p.scale(alpha).into(),
            PeriodicFunction::Piecewise(p) => p.map_pieces(|q| q.scale(alpha)).into(),
        }
    }

    pub fn lincomb(alpha: f64, f: &Self, beta: f64, g: &Self) -> Self {
        Self::combine(f, g, |a, b| TrigPoly::lincomb(alpha, a, beta, b))
    }

    pub fn multiply(f: &Self, g: &Self) -> Self {
        Self::combine(f, g, TrigPoly::multiply)
    }

    fn combine(f: &Self, g: &Self, op: impl Fn(&TrigPoly, &TrigPoly) -> TrigPoly) -> Self {
        use PeriodicFunction::*;
        match (f, g) {
            (Trig(a), Trig(b)) => op(a, b).into(),
            (Piecewise(a), Trig(b)) => a.map_pieces(|p| op(p, b)).into(),
            (Trig(a), Piecewise(b)) => b.map_pieces(|p| op(a, p)).into(),
            (Piecewise(a), Piecewise(b)) => a.merge_with(b, op).into(),
        }
    }

    /// `θ ↦ f(θ − α)`.
    pub fn shift(&self, alpha: f64) -> Self {
        match self {
            PeriodicFunction::Trig(p) => p.shift(alpha).into(),
            PeriodicFunction::Piecewise(p) => p.shift(alpha).into(),
        }
    }

    /// `θ ↦ f(−θ)`.
    pub fn reflect(&self) -> Self {
        match self {
            PeriodicFunction::Trig(p) => p.reflect().into(),
            PeriodicFunction::Piecewise(p) => p.reflect().into(),
        }
    }

    pub fn as_trig(&self) -> Option<&TrigPoly> {
        match self {
            PeriodicFunction::Trig(p) => Some(p),
            PeriodicFunction::Piecewise(_) => None,
        }
    }

    /// Every polynomial piece (a single one for [`PeriodicFunction::Trig`]).
    pub fn polys(&self) -> Vec<&TrigPoly> {
        match self {
            PeriodicFunction::Trig(p) => vec![p],
            PeriodicFunction::Piecewise(p) => p.pieces.iter().collect(),
        }
    }

    /// Largest coefficient magnitude over all pieces.
    pub fn max_abs_coeff(&self) -> f64 {
        self.polys()
            .into_iter()
            .fold(0.0, |m, p| m.max(p.max_abs_coeff()))
    }

    /// Arcs on which the exact representation vanishes identically, as
    /// `(from, to)` with `to` possibly past 2π. A zero [`TrigPoly`] gives the
    /// whole circle.
    pub fn zero_arcs(&self, tol: f64) -> Vec<(f64, f64)> {
        match self {
            PeriodicFunction::Trig(p) => {
                if p.is_negligible(tol) {
                    vec![(0.0, TAU)]
                } else {
                    vec![]
                }
            }
            PeriodicFunction::Piecewise(p) => p
                .arcs()
                .filter(|(_, _, q)| q.is_negligible(tol))
                .map(|(a, b, _)| (a, b))
                .collect(),
        }
    }
}

impl fmt::Display for PeriodicFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PeriodicFunction::Trig(p) => write!(f, "{}", crate::parser::format(p)),
            PeriodicFunction::Piecewise(p) => {
                let parts: Vec<String> = p
                    .arcs()
                    .map(|(a, b, q)| format!("[{a}, {b}): {}", crate::parser::format(q)))
                    .collect();
                write!(f, "{}", parts.join("; "))
            }
        }
    }
}

// JSON: {"a0", "cos", "sin"} or {"pieces": [{"from", "to", "a0", "cos", "sin"}]}

#[derive(Serialize, Deserialize)]
struct PieceRepr {
    from: f64,
    to: f64,
    a0: f64,
    #[serde(default)]
    cos: Vec<f64>,
    #[serde(default)]
    sin: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PeriodicRepr {
    Pieces { pieces: Vec<PieceRepr> },
    Trig(TrigPoly),
}

impl Serialize for PeriodicFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            PeriodicFunction::Trig(p) => PeriodicRepr::Trig(p.clone()),
            PeriodicFunction::Piecewise(p) => PeriodicRepr::Pieces {
                pieces: p
                    .arcs()
                    .map(|(from, to, q)| PieceRepr {
                        from,
                        to,
                        a0: q.a0,
                        cos: q.cos.clone(),
                        sin: q.sin.clone(),
                    })
                    .collect(),
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PeriodicFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match PeriodicRepr::deserialize(d)? {
            PeriodicRepr::Trig(p) => Ok(p.into()),
            PeriodicRepr::Pieces { pieces } => {
                let n = pieces.len();
                for (j, p) in pieces.iter().enumerate() {
                    let next_from = if j + 1 < n {
                        pieces[j + 1].from
                    } else {
                        pieces[0].from + TAU
                    };
                    if (p.to - next_from).abs() > 1e-9 {
                        return Err(D::Error::custom(TrigError::Gap {
                            index: j,
                            to: p.to,
                            next_from,
                        }));
                    }
                }
                let mut breaks = Vec::with_capacity(n);
                let mut polys = Vec::with_capacity(n);
                for p in pieces {
                    breaks.push(p.from);
                    polys.push(TrigPoly::new(p.a0, p.cos, p.sin).map_err(D::Error::custom)?);
                }
                PiecewiseTrig::new(breaks, polys)
                    .map(Into::into)
                    .map_err(D::Error::custom)
            }
        }
    }
}
