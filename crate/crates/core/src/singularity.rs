//! Zeros of field coefficients, their degeneracy, and class 𝒞 membership.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::Evaluate;
use crate::trig::wrap_angle;

pub const TAU_ZERO: f64 = 1e-9;
pub const TAU_DEG: f64 = 1e-7;
pub const SCAN_RESOLUTION: usize = 8192;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SingularityError {
    #[error("field vanishes identically on {intervals:?}; not in class 𝒞")]
    NotClassC { intervals: Vec<(f64, f64)> },
    #[error("θ = {theta} is not a zero (|f| = {value:e})")]
    NotAZero { theta: f64, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityOptions {
    pub resolution: usize,
    pub tol_zero: f64,
    pub tol_deg: f64,
    /// Bracket width at which bisection stops.
    pub refine: f64,
    /// Candidates closer than this are the same zero.
    pub merge: f64,
}

impl Default for SingularityOptions {
    fn default() -> Self {
        SingularityOptions {
            resolution: SCAN_RESOLUTION,
            tol_zero: TAU_ZERO,
            tol_deg: TAU_DEG,
            refine: 1e-12,
            merge: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularPoint {
    pub theta: f64,
    pub degenerate: bool,
    /// `|f(θ0)|`
    pub value_residual: f64,
    /// `|f′(θ0)|`
    pub slope_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub points: Vec<SingularPoint>,
    pub count: usize,
    pub class_c: bool,
    /// Arcs `(from, to)` on which the coefficient vanishes identically.
    pub interval_zero_ranges: Vec<(f64, f64)>,
}

impl SingularityReport {
    pub fn thetas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta).collect()
    }

    pub fn degenerate_thetas(&self) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.degenerate)
            .map(|p| p.theta)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    theta: f64,
    value: f64,
    /// found as a zero of the derivative
    tangential: bool,
}

/// Bisection for a sign change of `g` on `[a, b]` (`g(a)·g(b) < 0`).
fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut ga = g(a);
    while b - a > tol {
        let m = 0.5 * (a + b);
        let gm = g(m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (ga < 0.0) {
            a = m;
            ga = gm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

const FLAT_SLOPE: f64 = 1e-4;
const FLAT_WINDOW: f64 = 1e-5;

/// Ternary search for the minimum of `|f′|` on `[a, b]`.
fn argmin_abs_slope(f: &impl Evaluate, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..100 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f.slope(m1).abs() <= f.slope(m2).abs() {
            b = m2;
        } else {
            a = m1;
        }
    }
    0.5 * (a + b)
}

/// Circular distance between two angles.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// Scan `f` for zeros and zero arcs. Never fails; see [`find_singular`].
pub fn analyze(f: &impl Evaluate, opts: &SingularityOptions) -> SingularityReport {
    let n = opts.resolution.max(8);
    let h = TAU / n as f64;
    let samples: Vec<(f64, f64, f64)> = (0..=n)
        .map(|i| {
            let t = h * i as f64;
            let (v, d) = f.jet(t);
            (t, v, d)
        })
        .collect();

    let zero_ranges = zero_arcs(f, &samples, opts, h);
    let in_zero_range = |t: f64| {
        zero_ranges.iter().any(|&(a, b)| {
            let t = if t < a { t + TAU } else { t };
            t >= a - opts.merge && t <= b + opts.merge
        })
    };

    let mut cands = Vec::new();
    for w in samples.windows(2) {
        let ((a, fa, da), (b, fb, db)) = (w[0], w[1]);
        // sweep (a): sign changes of f
        if fa == 0.0 {
            cands.push(Candidate {
                theta: a,
                value: 0.0,
                tangential: da == 0.0,
            });
        } else if fa * fb < 0.0 {
            let t = bisect(|x| f.value(x), a, b, opts.refine);
            cands.push(Candidate {
                theta: t,
                value: f.value(t).abs(),
                tangential: false,
            });
            // a sign change through a double zero (sign-flipped pieces) leaves
            // f′ without a sign change; locate it as the minimum of |f′|
            if f.slope(t).abs() < FLAT_SLOPE {
                let m = argmin_abs_slope(f, t - FLAT_WINDOW, t + FLAT_WINDOW);
                let v = f.value(m).abs();
                if v < opts.tol_zero {
                    cands.push(Candidate {
                        theta: m,
                        value: v,
                        tangential: true,
                    });
                }
            }
        }
        // sweep (b): zeros of f′ where f is also small
        let t = if da == 0.0 {
            Some(a)
        } else if da * db < 0.0 {
            Some(bisect(|x| f.slope(x), a, b, opts.refine))
        } else {
            None
        };
        if let Some(t) = t {
            let v = f.value(t).abs();
            if v < opts.tol_zero {
                cands.push(Candidate {
                    theta: t,
                    value: v,
                    tangential: true,
                });
            }
        }
    }
    cands.retain(|c| !in_zero_range(c.theta));
    for c in &mut cands {
        c.theta = wrap_angle(c.theta);
        if TAU - c.theta < 1e-11 {
            c.theta = 0.0;
        }
    }
    cands.sort_by(|a, b| a.theta.total_cmp(&b.theta));

    let merged = merge(f, cands, opts, h);
    let points: Vec<SingularPoint> = merged
        .into_iter()
        .map(|c| {
            let (v, d) = f.jet(c.theta);
            SingularPoint {
                theta: c.theta,
                degenerate: d.abs() < opts.tol_deg,
                value_residual: v.abs(),
                slope_residual: d.abs(),
            }
        })
        .collect();
    SingularityReport {
        count: points.len(),
        class_c: zero_ranges.is_empty(),
        interval_zero_ranges: zero_ranges,
        points,
    }
}

/// Exact zero arcs of length at least one scan cell that the samples confirm.
fn zero_arcs(
    f: &impl Evaluate,
    samples: &[(f64, f64, f64)],
    opts: &SingularityOptions,
    h: f64,
) -> Vec<(f64, f64)> {
    let Some(exact) = f.exact() else {
        return Vec::new();
    };
    exact
        .zero_arcs(1e-14)
        .into_iter()
        .filter(|&(a, b)| {
            b - a >= h && {
                let inside: Vec<_> = samples
                    .iter()
                    .filter(|s| {
                        let t = if s.0 < a { s.0 + TAU } else { s.0 };
                        t > a && t < b
                    })
                    .collect();
                !inside.is_empty() && inside.iter().all(|s| s.1.abs() < opts.tol_zero)
            }
        })
        .collect()
}

fn merge(
    f: &impl Evaluate,
    cands: Vec<Candidate>,
    opts: &SingularityOptions,
    h: f64,
) -> Vec<Candidate> {
    let same = |a: &Candidate, b: &Candidate| {
        let d = circle_distance(a.theta, b.theta);
        d < opts.merge || (d < h && {
            // midpoint along the short arc
            let mid = if (b.theta - a.theta).abs() <= std::f64::consts::PI {
                0.5 * (a.theta + b.theta)
            } else {
                0.5 * (a.theta + b.theta) + std::f64::consts::PI
            };
            f.value(mid).abs() < opts.tol_zero
        })
    };
    let better = |a: &Candidate, b: &Candidate| {
        if a.tangential != b.tangential {
            a.tangential
        } else {
            a.value <= b.value
        }
    };
    let mut clusters: Vec<Vec<Candidate>> = Vec::new();
    for c in cands {
        match clusters.last_mut() {
            Some(cl) if same(cl.last().unwrap(), &c) => cl.push(c),
            _ => clusters.push(vec![c]),
        }
    }
    if clusters.len() > 1 {
        let first = clusters[0][0];
        let last = *clusters.last().unwrap().last().unwrap();
        if same(&last, &first) {
            let tail = clusters.pop().unwrap();
            clusters[0].extend(tail);
        }
    }
    let mut out: Vec<Candidate> = clusters
        .into_iter()
        .map(|cl| {
            cl.into_iter()
                .reduce(|a, b| if better(&a, &b) { a } else { b })
                .unwrap()
        })
        .collect();
    out.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    out
}

/// All zeros of `f` with degeneracy flags. Fails when `f` vanishes on an arc.
pub fn find_singular(f: &impl Evaluate) -> Result<SingularityReport, SingularityError> {
    find_singular_with(f, &SingularityOptions::default())
}

pub fn find_singular_with(
    f: &impl Evaluate,
    opts: &SingularityOptions,
) -> Result<SingularityReport, SingularityError> {
    let r = analyze(f, opts);
    if r.class_c {
        Ok(r)
    } else {
        Err(SingularityError::NotClassC {
            intervals: r.interval_zero_ranges,
        })
    }
}

/// Whether the zero `theta0` of `f` is degenerate (`|f′(θ0)| < τ_deg`).
pub fn is_degenerate(f: &impl Evaluate, theta0: f64) -> Result<bool, SingularityError> {
    let (v, d) = f.jet(theta0);
    if v.abs() > TAU_ZERO {
        return Err(SingularityError::NotAZero {
            theta: theta0,
            value: v.abs(),
        });
    }
    Ok(d.abs() < TAU_DEG)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::trig::{PeriodicFunction, PiecewiseTrig, TrigPoly};
    use std::f64::consts::PI;

    #[test]
    fn double_zeros_of_one_minus_cos() {
        let r = find_singular(&parse("1 - cos(2*t)").unwrap()).unwrap();
        assert_eq!(r.count, 2);
        assert!(r.class_c);
        assert!(r.points[0].theta.abs() < 1e-12);
        assert!((r.points[1].theta - PI).abs() < 1e-12);
        assert!(r.points.iter().all(|p| p.degenerate));
    }

    #[test]
    fn simple_zeros_of_sin() {
        let r = find_singular(&parse("sin(t)").unwrap()).unwrap();
        assert_eq!(r.thetas().len(), 2);
        assert!(r.points[0].theta.abs() < 1e-12 && (r.points[1].theta - PI).abs() < 1e-12);
        assert!(r.points.iter().all(|p| !p.degenerate));
    }

    #[test]
    fn canonical_grid_zeros() {
        for n in 1..=8 {
            let f = parse(&format!("1 - cos({n}*t)")).unwrap();
            let r = find_singular(&f).unwrap();
            assert_eq!(r.count, n, "n = {n}");
            for (k, p) in r.points.iter().enumerate() {
                assert!(circle_distance(p.theta, TAU * k as f64 / n as f64) < 1e-9);
                assert!(p.degenerate);
            }
        }
    }

    #[test]
    fn off_grid_and_higher_order_zeros() {
        // quartic zero at 1.234, simple zeros elsewhere
        let f = parse("(1 - cos(t - 1.234))^2 * sin(t - 3)").unwrap();
        let r = find_singular(&f).unwrap();
        let thetas = r.thetas();
        assert_eq!(thetas.len(), 3, "{thetas:?}");
        // f′ ~ x³ near a quartic zero, so rounding limits the location to ~1e-5
        assert!(thetas.iter().any(|&t| circle_distance(t, 1.234) < 1e-4));
        assert!(thetas.iter().any(|&t| circle_distance(t, 3.0) < 1e-12));
        assert!(thetas.iter().any(|&t| circle_distance(t, 3.0 + PI) < 1e-12));
    }

    #[test]
    fn double_zero_with_sign_flip() {
        // ±(1 − cos 5θ) glued at 2π/5 with opposite signs
        let z = TAU / 5.0;
        let w = TrigPoly::lincomb(1.0, &TrigPoly::constant(1.0), -1.0, &TrigPoly::cos_term(5, 1.0));
        let f = PeriodicFunction::Piecewise(
            PiecewiseTrig::with_tolerance(vec![0.0, z], vec![w.clone(), w.scale(-1.0)], 1e-9).unwrap(),
        );
        let r = find_singular(&f).unwrap();
        assert_eq!(r.count, 5);
        let p = r.points.iter().find(|p| circle_distance(p.theta, z) < 1e-6).unwrap();
        assert!(circle_distance(p.theta, z) < 1e-12);
        assert!(p.degenerate);
    }

    #[test]
    fn nonvanishing_has_no_points() {
        let r = find_singular(&parse("2 + cos(t)").unwrap()).unwrap();
        assert_eq!(r.count, 0);
    }

    fn zero_on_1_2() -> PeriodicFunction {
        // (1 − cos(θ−1))(1 − cos(θ−2)) has double zeros at 1 and 2
        let bump = TrigPoly::multiply(
            &TrigPoly::lincomb(1.0, &TrigPoly::constant(1.0), -1.0, &TrigPoly::cos_term(1, 1.0).shift(1.0)),
            &TrigPoly::lincomb(1.0, &TrigPoly::constant(1.0), -1.0, &TrigPoly::cos_term(1, 1.0).shift(2.0)),
        );
        PiecewiseTrig::new(vec![1.0, 2.0], vec![TrigPoly::zero(), bump])
            .unwrap()
            .into()
    }

    #[test]
    fn zero_interval_is_not_class_c() {
        let f = zero_on_1_2();
        match find_singular(&f) {
            Err(SingularityError::NotClassC { intervals }) => {
                assert_eq!(intervals, vec![(1.0, 2.0)]);
            }
            other => panic!("expected NotClassC, got {other:?}"),
        }
        let r = analyze(&f, &SingularityOptions::default());
        assert!(!r.class_c);
        assert!(r.points.is_empty());
        let zero = analyze(&PeriodicFunction::zero(), &SingularityOptions::default());
        assert!(!zero.class_c);
    }

    #[test]
    fn degeneracy_predicate() {
        assert!(is_degenerate(&parse("1 - cos(t)").unwrap(), 0.0).unwrap());
        assert!(!is_degenerate(&parse("sin(t)").unwrap(), 0.0).unwrap());
        assert!(matches!(
            is_degenerate(&parse("sin(t)").unwrap(), 1.0),
            Err(SingularityError::NotAZero { .. })
        ));
    }
}
