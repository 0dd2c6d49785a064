//! Reduction of a realization `[V, W] = W` to its canonical form
//!
//! ```text
//! v = (1/n) sin nθ + λₖ (1 − cos nθ),   w = σₖ (1 − cos nθ)   on Δₖ
//! ```
//!
//! The zeros of `w` are first moved onto the uniform grid by a rotation and a
//! piecewise-affine map, then every interval is straightened by its chart.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::chart::{ChartError, GridChart, IntervalChart, SingularGrid};
use crate::circle_map::CircleMap;
use crate::field::{bracket, Coefficient, Evaluate, VectorField, PUSHFORWARD_GRID};
use crate::quadrature::adaptive_simpson;
use crate::singularity::{find_singular_with, SingularityError, SingularityOptions};
use crate::trig::{PeriodicFunction, PiecewiseTrig, TrigPoly};

pub const TAU_BRACKET: f64 = 1e-8;
pub const TAU_RESIDUAL: f64 = 1e-6;
/// Residuals are not checked closer than this to a grid point.
pub const ENDPOINT_MARGIN: f64 = 0.01;
const INTEGRAL_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("[V, W] − W has sup norm {residual:.3e}; not a realization")]
    NotARealization { residual: f64 },
    #[error("W has no singular points")]
    NoSingularPoints,
    #[error(transparent)]
    NotClassC(#[from] SingularityError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("θ = {theta} is outside interval {k}")]
    OutsideInterval { k: usize, theta: f64 },
    #[error("post-reduction residuals too large (w: {w_residual:.3e}, v: {v_residual:.3e})")]
    ResidualTooLarge {
        w_residual: f64,
        v_residual: f64,
        reduction: Box<Reduction>,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PairError {
    #[error("n must be positive")]
    ZeroN,
    #[error("expected {n} values for {what}, got {got}")]
    Length { what: &'static str, n: usize, got: usize },
    #[error("sigma entries must be +1 or -1, got {0}")]
    Sigma(i32),
    #[error("lambda must be finite")]
    NonFinite,
}

/// The canonical realization on an `n`-point grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairRepr")]
pub struct CanonicalPair {
    n: usize,
    lambda: Vec<f64>,
    sigma: Vec<i32>,
    /// Position of the zero that the reduction moved to θ = 0.
    rotation: f64,
}

#[derive(Deserialize)]
struct PairRepr {
    n: usize,
    lambda: Vec<f64>,
    sigma: Vec<i32>,
    #[serde(default)]
    rotation: f64,
}

impl TryFrom<PairRepr> for CanonicalPair {
    type Error = PairError;

    fn try_from(r: PairRepr) -> Result<Self, PairError> {
        let mut p = CanonicalPair::new(r.n, r.lambda, r.sigma)?;
        p.rotation = r.rotation;
        Ok(p)
    }
}

impl CanonicalPair {
    pub fn new(n: usize, lambda: Vec<f64>, sigma: Vec<i32>) -> Result<Self, PairError> {
        if n == 0 {
            return Err(PairError::ZeroN);
        }
        if lambda.len() != n {
            return Err(PairError::Length { what: "lambda", n, got: lambda.len() });
        }
        if sigma.len() != n {
            return Err(PairError::Length { what: "sigma", n, got: sigma.len() });
        }
        if let Some(&s) = sigma.iter().find(|s| s.abs() != 1) {
            return Err(PairError::Sigma(s));
        }
        if lambda.iter().any(|l| !l.is_finite()) {
            return Err(PairError::NonFinite);
        }
        Ok(CanonicalPair { n, lambda, sigma, rotation: 0.0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn sigma(&self) -> &[i32] {
        &self.sigma
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn grid(&self) -> SingularGrid {
        SingularGrid::new(self.n)
    }

    /// `v` on interval `k`.
    pub fn v_piece(&self, k: usize) -> TrigPoly {
        let n = self.n;
        let l = self.lambda[k];
        let mut cos = vec![0.0; n];
        let mut sin = vec![0.0; n];
        cos[n - 1] = -l;
        sin[n - 1] = 1.0 / n as f64;
        TrigPoly::new(l, cos, sin).expect("matching lengths")
    }

    /// `w` on interval `k`.
    pub fn w_piece(&self, k: usize) -> TrigPoly {
        let s = self.sigma[k] as f64;
        TrigPoly::lincomb(s, &TrigPoly::constant(1.0), -s, &TrigPoly::cos_term(self.n, 1.0))
    }

    fn assemble(&self, piece: impl Fn(usize) -> TrigPoly) -> PeriodicFunction {
        let pieces: Vec<TrigPoly> = (0..self.n).map(piece).collect();
        if pieces.windows(2).all(|w| w[0] == w[1]) {
            return PeriodicFunction::Trig(pieces[0].clone());
        }
        let grid = self.grid();
        let breaks = (0..self.n).map(|k| grid.point(k)).collect();
        // slopes agree at the grid only up to rounding of sin(2πk)
        PiecewiseTrig::with_tolerance(breaks, pieces, 1e-9)
            .map(PeriodicFunction::Piecewise)
            .expect("canonical pieces glue C¹")
    }

    /// `(V, W)` as exact fields.
    pub fn fields(&self) -> (VectorField, VectorField) {
        (
            VectorField::new(self.assemble(|k| self.v_piece(k))),
            VectorField::new(self.assemble(|k| self.w_piece(k))),
        )
    }

    /// Largest coefficient of `[V, W] − W` over all intervals, computed
    /// piece by piece on the trig polynomials.
    pub fn symbolic_residual(&self) -> f64 {
        (0..self.n)
            .map(|k| {
                let (v, w) = (self.v_piece(k), self.w_piece(k));
                let b = TrigPoly::lincomb(
                    1.0,
                    &TrigPoly::multiply(&v, &w.deriv()),
                    -1.0,
                    &TrigPoly::multiply(&v.deriv(), &w),
                );
                TrigPoly::lincomb(1.0, &b, -1.0, &w).max_abs_coeff()
            })
            .fold(0.0, f64::max)
    }

    /// Smallest cyclic shift `s` with `other[(k + s) mod n] ≈ self[k]`:
    /// σ equal and λ within `tol`.
    pub fn cyclic_match(&self, other: &CanonicalPair, tol: f64) -> Option<usize> {
        if self.n != other.n {
            return None;
        }
        let n = self.n;
        (0..n).find(|&s| {
            (0..n).all(|k| {
                let j = (k + s) % n;
                self.sigma[k] == other.sigma[j] && (self.lambda[k] - other.lambda[j]).abs() <= tol
            })
        })
    }

    /// Largest λ deviation under the best σ-compatible cyclic shift.
    pub fn cyclic_lambda_error(&self, other: &CanonicalPair) -> Option<f64> {
        if self.n != other.n {
            return None;
        }
        let n = self.n;
        (0..n)
            .filter(|&s| (0..n).all(|k| self.sigma[k] == other.sigma[(k + s) % n]))
            .map(|s| {
                (0..n)
                    .map(|k| (self.lambda[k] - other.lambda[(k + s) % n]).abs())
                    .fold(0.0, f64::max)
            })
            .min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReduceOptions {
    pub singularity: SingularityOptions,
    pub tol_bracket: f64,
    pub tol_residual: f64,
    pub endpoint_margin: f64,
    pub residual_samples: usize,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions {
            singularity: SingularityOptions::default(),
            tol_bracket: TAU_BRACKET,
            tol_residual: TAU_RESIDUAL,
            endpoint_margin: ENDPOINT_MARGIN,
            residual_samples: 2048,
        }
    }
}

/// Output of [`reduce`].
#[derive(Debug, Clone, Serialize)]
pub struct Reduction {
    pub pair: CanonicalPair,
    /// The reducing map `F`; `pushforward(W, F)` is the canonical `W`.
    pub map: CircleMap,
    pub w_residual: f64,
    pub v_residual: f64,
    pub bracket_residual: f64,
}

/// Sup norm of the coefficient of `[V, W] − W` on the standard grid.
pub fn bracket_residual(v: &VectorField, w: &VectorField) -> f64 {
    let b = bracket(v, w);
    (0..PUSHFORWARD_GRID)
        .map(|i| {
            let t = TAU * i as f64 / PUSHFORWARD_GRID as f64;
            (b.value(t) - w.value(t)).abs()
        })
        .fold(0.0, f64::max)
}

/// Map sending the sorted zeros of `w` to the uniform grid: a rotation that
/// takes the first zero to 0 followed by a piecewise-affine map. Returns the
/// map, the pushed field and the rotation offset.
pub fn normalize_singularities(
    w: &VectorField,
) -> Result<(CircleMap, VectorField, f64), ReductionError> {
    normalize_with(w, &SingularityOptions::default())
}

fn normalize_with(
    w: &VectorField,
    opts: &SingularityOptions,
) -> Result<(CircleMap, VectorField, f64), ReductionError> {
    let zeros = find_singular_with(w, opts)?.thetas();
    if zeros.is_empty() {
        return Err(ReductionError::NoSingularPoints);
    }
    let n = zeros.len();
    let grid = SingularGrid::new(n);
    let z0 = zeros[0];
    let on_grid = zeros
        .iter()
        .enumerate()
        .all(|(k, z)| (z - grid.point(k)).abs() < 1e-12);
    if on_grid {
        return Ok((CircleMap::identity(), w.clone(), 0.0));
    }
    let rotation = CircleMap::rotation(-z0);
    let mut knots = vec![(0.0, 0.0)];
    knots.extend((1..n).map(|k| (zeros[k] - z0, grid.point(k))));
    knots.push((TAU, TAU));
    let affine = CircleMap::affine(knots).map_err(|_| ReductionError::NoSingularPoints)?;
    let map = CircleMap::compose(&affine, &rotation);
    let pushed = w.pushforward(&map);
    Ok((map, pushed, z0))
}

/// `I(θ) = ∫_{θ̄ₖ}^{θ} dϑ / w(ϑ)` by adaptive quadrature from the midpoint.
pub fn endpoint_integral(
    w: &impl Evaluate,
    grid: SingularGrid,
    k: usize,
    theta: f64,
) -> Result<f64, ReductionError> {
    let (a, b) = grid.interval(k);
    if !(theta > a && theta < b) {
        return Err(ReductionError::OutsideInterval { k, theta });
    }
    Ok(adaptive_simpson(|t| 1.0 / w.value(t), grid.midpoint(k), theta, INTEGRAL_TOL))
}

/// Chart straightening `w` on interval `k`.
pub fn interval_chart(
    w: &Coefficient,
    grid: SingularGrid,
    k: usize,
) -> Result<IntervalChart, ReductionError> {
    Ok(IntervalChart::build(w, grid, k)?)
}

pub fn reduce(v: &VectorField, w: &VectorField) -> Result<Reduction, ReductionError> {
    reduce_with(v, w, &ReduceOptions::default())
}

pub fn reduce_with(
    v: &VectorField,
    w: &VectorField,
    opts: &ReduceOptions,
) -> Result<Reduction, ReductionError> {
    let bracket_res = bracket_residual(v, w);
    if !(bracket_res <= opts.tol_bracket) {
        return Err(ReductionError::NotARealization { residual: bracket_res });
    }
    let (normalize, w1, rotation) = normalize_with(w, &opts.singularity)?;
    let zeros = find_singular_with(w, &opts.singularity)?.count;
    let chart = GridChart::build(w1.coefficient(), zeros)?;
    let n = chart.n();
    let grid = chart.grid();
    let sigma: Vec<i32> = chart.sigmas().iter().map(|s| *s as i32).collect();
    let map = CircleMap::compose(&CircleMap::chart(chart), &normalize);
    let vt = v.pushforward(&map);
    let wt = w.pushforward(&map);
    let lambda: Vec<f64> = (0..n).map(|k| vt.value(grid.midpoint(k)) / 2.0).collect();
    let mut pair = CanonicalPair::new(n, lambda, sigma).map_err(|_| ReductionError::NoSingularPoints)?;
    pair.rotation = rotation;

    let (mut w_res, mut v_res) = (0.0f64, 0.0f64);
    let m = opts.residual_samples.max(n);
    let nf = n as f64;
    for i in 0..m {
        let y = TAU * (i as f64 + 0.5) / m as f64;
        if grid.near_point(y, opts.endpoint_margin) {
            continue;
        }
        let k = grid.locate(y);
        let s = pair.sigma[k] as f64;
        let c = 1.0 - (nf * y).cos();
        w_res = w_res.max((wt.value(y) - s * c).abs());
        v_res = v_res.max((vt.value(y) - ((nf * y).sin() / nf + pair.lambda[k] * c)).abs());
    }
    let out = Reduction {
        pair,
        map,
        w_residual: w_res,
        v_residual: v_res,
        bracket_residual: bracket_res,
    };
    if !(w_res <= opts.tol_residual && v_res <= opts.tol_residual) {
        return Err(ReductionError::ResidualTooLarge {
            w_residual: w_res,
            v_residual: v_res,
            reduction: Box::new(out),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn pair(n: usize, lambda: &[f64], sigma: &[i32]) -> CanonicalPair {
        CanonicalPair::new(n, lambda.to_vec(), sigma.to_vec()).unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = SingularGrid::new(4);
        assert_eq!(g.point(0), 0.0);
        assert_eq!(g.point(4), TAU);
        assert!((g.midpoint(1) - 0.75 * PI).abs() < 1e-15);
        let (a, b) = g.interval(2);
        assert!((0.5 * (a + b) - g.midpoint(2)).abs() < 1e-15);
        assert_eq!(g.locate(0.0), 0);
        assert_eq!(g.locate(g.point(3)), 3);
        assert_eq!(g.locate(TAU - 1e-12), 3);
    }

    #[test]
    fn canonical_pairs_commute_symbolically() {
        let p = pair(3, &[0.0, 1.0, -1.0], &[1, -1, 1]);
        assert!(p.symbolic_residual() < 1e-12);
        let (v, w) = p.fields();
        assert!(bracket_residual(&v, &w) < 1e-12);
    }

    #[test]
    fn pair_validation() {
        assert_eq!(CanonicalPair::new(0, vec![], vec![]), Err(PairError::ZeroN));
        assert!(matches!(
            CanonicalPair::new(2, vec![0.0], vec![1, 1]),
            Err(PairError::Length { what: "lambda", .. })
        ));
        assert_eq!(CanonicalPair::new(1, vec![0.0], vec![2]), Err(PairError::Sigma(2)));
        let json = r#"{"n":2,"lambda":[0.5,-1],"sigma":[1,1],"rotation":0.25}"#;
        let p: CanonicalPair = serde_json::from_str(json).unwrap();
        assert_eq!(p.rotation(), 0.25);
        let back = serde_json::to_value(&p).unwrap();
        assert_eq!(back["lambda"], serde_json::json!([0.5, -1.0]));
        assert!(serde_json::from_str::<CanonicalPair>(r#"{"n":1,"lambda":[0],"sigma":[0]}"#).is_err());
    }

    #[test]
    fn cyclic_matching() {
        let a = pair(3, &[1.0, 2.0, 3.0], &[1, 1, -1]);
        let b = pair(3, &[2.0, 3.0, 1.0], &[1, -1, 1]);
        assert_eq!(a.cyclic_match(&b, 1e-12), Some(2));
        assert_eq!(a.cyclic_lambda_error(&b), Some(0.0));
        let c = pair(3, &[2.0, 3.0, 1.0], &[1, 1, 1]);
        assert_eq!(a.cyclic_match(&c, 1.0), None);
    }

    #[test]
    fn endpoint_integral_closed_form() {
        let w = crate::parser::parse("1 - cos(t)").unwrap();
        let g = SingularGrid::new(1);
        let i = endpoint_integral(&w, g, 0, PI / 3.0).unwrap();
        assert!((i + 3f64.sqrt()).abs() < 1e-9);
        assert!((endpoint_integral(&w, g, 0, PI / 2.0).unwrap() + 1.0).abs() < 1e-9);
        assert_eq!(endpoint_integral(&w, g, 0, PI).unwrap(), 0.0);
        assert!(matches!(
            endpoint_integral(&w, g, 0, 0.0),
            Err(ReductionError::OutsideInterval { .. })
        ));
    }

    #[test]
    fn normalization_examples() {
        let (v, w) = pair(2, &[0.0, 0.0], &[1, 1]).fields();
        let _ = v;
        let (m, _, rot) = normalize_singularities(&w).unwrap();
        assert!(matches!(m, CircleMap::Identity));
        assert_eq!(rot, 0.0);

        let w = VectorField::new(crate::parser::parse("1 - cos(t - 1.1)").unwrap());
        let (m, _, rot) = normalize_singularities(&w).unwrap();
        assert!(matches!(m, CircleMap::Rotation { .. }));
        assert!((rot - 1.1).abs() < 1e-9);

        let w = VectorField::new(crate::parser::parse("2 + cos(t)").unwrap());
        assert!(matches!(
            normalize_singularities(&w),
            Err(ReductionError::NoSingularPoints)
        ));
    }

    #[test]
    fn canonical_input_is_a_fixed_point() {
        let p = pair(2, &[0.5, -1.0], &[1, 1]);
        let (v, w) = p.fields();
        let r = reduce(&v, &w).unwrap();
        assert_eq!(r.pair.n(), 2);
        assert_eq!(r.pair.sigma(), &[1, 1]);
        assert!(p.cyclic_lambda_error(&r.pair).unwrap() < 1e-9);
        for i in 1..50 {
            let t = TAU * i as f64 / 50.0;
            assert!((r.map.apply(t) - t).abs() < 1e-8, "{t}");
        }
    }

    #[test]
    fn rotated_and_perturbed_pair_is_recovered() {
        let p = pair(2, &[0.5, -1.0], &[1, -1]);
        let (v, w) = p.fields();
        let f = CircleMap::compose(
            &CircleMap::rotation(0.7),
            &CircleMap::perturbed_harmonic(0.3, 2).unwrap(),
        );
        let r = reduce(&v.pushforward(&f), &w.pushforward(&f)).unwrap();
        assert_eq!(r.pair.n(), 2);
        assert!(p.cyclic_match(&r.pair, 1e-6).is_some(), "{:?}", r.pair);
        assert!(r.w_residual < 1e-6 && r.v_residual < 1e-6);
    }

    #[test]
    fn non_realization_is_rejected() {
        let v = VectorField::new(crate::parser::parse("sin(t)").unwrap());
        let w = VectorField::new(crate::parser::parse("cos(t)").unwrap());
        assert!(matches!(reduce(&v, &w), Err(ReductionError::NotARealization { .. })));
    }
}
