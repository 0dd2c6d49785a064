//! Fields commuting with a given `V`: multiples `λⱼ v` of its coefficient on
//! the arcs between consecutive degenerate zeros.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{bracket, Evaluate, VectorField, PUSHFORWARD_GRID};
use crate::singularity::{find_singular, SingularityError};
use crate::trig::{PeriodicFunction, PiecewiseTrig, TrigPoly, TAU_C1};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommutantError {
    #[error("expected {expected} proportionality constants, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("V has {degenerate} degenerate point(s); every commuting field is a multiple of V")]
    TriviallyDependent { degenerate: usize },
    #[error("λ[{index}] is zero")]
    ZeroLambda { index: usize },
    #[error("V has no exact representation")]
    NotExact,
    #[error(transparent)]
    NotClassC(#[from] SingularityError),
    #[error("commuting field is not C¹ at θ = {at} (jumps {value_jump:.3e}, {slope_jump:.3e})")]
    NotC1 { at: f64, value_jump: f64, slope_jump: f64 },
}

/// Degenerate zeros of `v` and the open arcs between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegenerateDecomposition {
    pub degenerate_points: Vec<f64>,
    /// `(from, to)`; `to` of the last arc may exceed 2π.
    pub intervals: Vec<(f64, f64)>,
}

impl DegenerateDecomposition {
    /// Number of proportionality constants a commuting field needs.
    pub fn dimension(&self) -> usize {
        self.intervals.len()
    }
}

pub fn decompose(v: &VectorField) -> Result<DegenerateDecomposition, SingularityError> {
    let points = find_singular(v)?.degenerate_thetas();
    let intervals = match points.len() {
        0 => vec![(0.0, TAU)],
        d => (0..d)
            .map(|j| {
                let to = if j + 1 < d { points[j + 1] } else { points[0] + TAU };
                (points[j], to)
            })
            .collect(),
    };
    Ok(DegenerateDecomposition {
        degenerate_points: points,
        intervals,
    })
}

/// A field `W` with `[V, W] = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct Commuting {
    pub w: VectorField,
    pub lambda: Vec<f64>,
    pub decomposition: DegenerateDecomposition,
    /// `W` is a constant multiple of `V`.
    pub dependent: bool,
    /// Largest coefficient of the exact bracket.
    pub symbolic_residual: f64,
    /// Sup of the bracket coefficient on the standard grid.
    pub bracket_residual: f64,
    /// Largest value or slope jump of `w` at a gluing point.
    pub c1_jump: f64,
}

/// `W = λⱼ V` on the `j`-th arc between degenerate points.
pub fn build_commuting(v: &VectorField, lambda: &[f64]) -> Result<Commuting, CommutantError> {
    let dec = decompose(v)?;
    let d = dec.degenerate_points.len();
    if d <= 1 {
        return Err(CommutantError::TriviallyDependent { degenerate: d });
    }
    if lambda.len() != d {
        return Err(CommutantError::DimensionMismatch {
            expected: d,
            got: lambda.len(),
        });
    }
    if let Some(index) = lambda.iter().position(|&l| l == 0.0) {
        return Err(CommutantError::ZeroLambda { index });
    }
    let exact = v.exact().ok_or(CommutantError::NotExact)?;
    let steps = PiecewiseTrig::unchecked(
        dec.degenerate_points.clone(),
        lambda.iter().map(|&l| TrigPoly::constant(l)).collect(),
    )
    .expect("sorted degenerate points in [0, 2π)");
    let w = PeriodicFunction::multiply(exact, &PeriodicFunction::Piecewise(steps));
    let mut c1_jump = 0.0;
    if let PeriodicFunction::Piecewise(p) = &w {
        if let Some((at, value_jump, slope_jump)) = p.worst_gluing() {
            if value_jump > TAU_C1 || slope_jump > TAU_C1 {
                return Err(CommutantError::NotC1 { at, value_jump, slope_jump });
            }
            c1_jump = value_jump.max(slope_jump);
        }
    }
    let dependent = lambda.windows(2).all(|p| p[0] == p[1]);
    Ok(finish(v, VectorField::new(w), lambda.to_vec(), dec, dependent, c1_jump))
}

/// The commutant of `V` as reported by the command line: like
/// [`build_commuting`], but a field with at most one degenerate point yields
/// `W = λ₀ V` flagged as dependent instead of an error.
pub fn commutant(v: &VectorField, lambda: &[f64]) -> Result<Commuting, CommutantError> {
    match build_commuting(v, lambda) {
        Err(CommutantError::TriviallyDependent { .. }) => {
            let dec = decompose(v)?;
            let l = *lambda.first().ok_or(CommutantError::DimensionMismatch {
                expected: 1,
                got: 0,
            })?;
            if l == 0.0 {
                return Err(CommutantError::ZeroLambda { index: 0 });
            }
            let exact = v.exact().ok_or(CommutantError::NotExact)?;
            let w = VectorField::new(exact.scale(l));
            Ok(finish(v, w, vec![l], dec, true, 0.0))
        }
        other => other,
    }
}

fn finish(
    v: &VectorField,
    w: VectorField,
    lambda: Vec<f64>,
    decomposition: DegenerateDecomposition,
    dependent: bool,
    c1_jump: f64,
) -> Commuting {
    let b = bracket(v, &w);
    let symbolic_residual = b.exact().map_or(f64::NAN, PeriodicFunction::max_abs_coeff);
    let bracket_residual = (0..PUSHFORWARD_GRID)
        .map(|i| b.value(TAU * i as f64 / PUSHFORWARD_GRID as f64).abs())
        .fold(0.0, f64::max);
    Commuting {
        w,
        lambda,
        decomposition,
        dependent,
        symbolic_residual,
        bracket_residual,
        c1_jump,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use std::f64::consts::PI;

    fn field(s: &str) -> VectorField {
        VectorField::new(parse(s).unwrap())
    }

    #[test]
    fn decompositions() {
        let d = decompose(&field("1 - cos(2*t)")).unwrap();
        assert_eq!(d.degenerate_points.len(), 2);
        assert!((d.degenerate_points[1] - PI).abs() < 1e-9);
        assert_eq!(d.dimension(), 2);

        let d = decompose(&field("sin(t)")).unwrap();
        assert!(d.degenerate_points.is_empty());
        assert_eq!(d.intervals, vec![(0.0, TAU)]);

        let d = decompose(&field("1 - cos(t)")).unwrap();
        assert_eq!(d.degenerate_points, vec![0.0]);
        assert_eq!(d.intervals, vec![(0.0, TAU)]);
    }

    #[test]
    fn sign_flip_commutes() {
        let v = field("1 - cos(2*t)");
        let c = build_commuting(&v, &[1.0, -1.0]).unwrap();
        assert!(!c.dependent);
        assert!(c.symbolic_residual < 1e-12);
        assert!(c.bracket_residual < 1e-10);
        assert!(c.c1_jump < 1e-10);
        assert!((c.w.value(1.0) - v.value(1.0)).abs() < 1e-15);
        assert!((c.w.value(4.0) + v.value(4.0)).abs() < 1e-15);
    }

    #[test]
    fn equal_constants_are_dependent() {
        let c = build_commuting(&field("1 - cos(2*t)"), &[2.5, 2.5]).unwrap();
        assert!(c.dependent);
    }

    #[test]
    fn errors() {
        let v = field("1 - cos(2*t)");
        assert_eq!(
            build_commuting(&v, &[1.0]).unwrap_err(),
            CommutantError::DimensionMismatch { expected: 2, got: 1 }
        );
        assert_eq!(
            build_commuting(&v, &[1.0, 0.0]).unwrap_err(),
            CommutantError::ZeroLambda { index: 1 }
        );
        assert_eq!(
            build_commuting(&field("sin(t)"), &[3.0]).unwrap_err(),
            CommutantError::TriviallyDependent { degenerate: 0 }
        );
        let c = commutant(&field("sin(t)"), &[3.0]).unwrap();
        assert!(c.dependent);
        assert!(c.bracket_residual < 1e-12);
    }
}
