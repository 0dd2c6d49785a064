//! Structural checks a realization `[V, W] = W` must pass, and zero-count
//! invariance under equivalence maps.

use serde::{Deserialize, Serialize};

use crate::circle_map::CircleMap;
use crate::field::{Evaluate, VectorField};
use crate::reduction::{bracket_residual, TAU_BRACKET};
use crate::singularity::{analyze, circle_distance, SingularityOptions, SingularityReport};

/// Zeros of `W` must lie this close to a zero of `V`.
pub const TAU_INCLUSION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl VerificationReport {
    fn from_checks(checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.passed);
        VerificationReport { checks, overall }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn check(name: &str, passed: bool, residual: f64, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        residual,
        detail,
    }
}

/// Options for [`validate_noncommutative_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub singularity: SingularityOptions,
    pub tol_bracket: f64,
    pub tol_inclusion: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            singularity: SingularityOptions::default(),
            tol_bracket: TAU_BRACKET,
            tol_inclusion: TAU_INCLUSION,
        }
    }
}

pub fn validate_noncommutative(v: &VectorField, w: &VectorField) -> VerificationReport {
    validate_noncommutative_with(v, w, &VerifyOptions::default())
}

pub fn validate_noncommutative_with(
    v: &VectorField,
    w: &VectorField,
    opts: &VerifyOptions,
) -> VerificationReport {
    let mut checks = Vec::new();

    let r = bracket_residual(v, w);
    checks.push(check(
        "bracket",
        r <= opts.tol_bracket,
        r,
        format!("sup |[V,W] - W| = {r:.3e}"),
    ));

    let (rv, rw) = std::thread::scope(|s| {
        let hv = s.spawn(|| analyze(v, &opts.singularity));
        let rw = analyze(w, &opts.singularity);
        (hv.join().expect("scan worker panicked"), rw)
    });

    checks.push(check(
        "lemma1",
        rw.count > 0 || !rw.class_c,
        rw.count as f64,
        format!("W has {} singular point(s)", rw.count),
    ));

    // finite means fewer zeros than the scan can separate
    let bound = opts.singularity.resolution / 2;
    checks.push(check(
        "lemma3",
        rw.class_c && rw.count < bound,
        rw.count as f64,
        format!("{} zero(s), bound {bound}", rw.count),
    ));

    let vz = rv.thetas();
    let worst = rw
        .points
        .iter()
        .map(|p| {
            vz.iter()
                .map(|&z| circle_distance(z, p.theta))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    checks.push(check(
        "lemma2",
        worst <= opts.tol_inclusion,
        worst,
        format!("largest distance from a zero of W to a zero of V: {worst:.3e}"),
    ));

    let simple: Vec<f64> = rw.points.iter().filter(|p| !p.degenerate).map(|p| p.theta).collect();
    let slope = rw.points.iter().map(|p| w.slope(p.theta).abs()).fold(0.0, f64::max);
    checks.push(check(
        "lemma4",
        simple.is_empty(),
        slope,
        if simple.is_empty() {
            "every zero of W is degenerate".to_string()
        } else {
            format!("nondegenerate zeros of W at {simple:?}")
        },
    ));

    checks.push(class_c_check(&rv, &rw));
    VerificationReport::from_checks(checks)
}

fn class_c_check(rv: &SingularityReport, rw: &SingularityReport) -> Check {
    let arcs: Vec<(f64, f64)> = rv
        .interval_zero_ranges
        .iter()
        .chain(&rw.interval_zero_ranges)
        .copied()
        .collect();
    let measure: f64 = arcs.iter().map(|(a, b)| b - a).sum();
    check(
        "classC",
        rv.class_c && rw.class_c,
        measure,
        if arcs.is_empty() {
            "no zero arcs".to_string()
        } else {
            format!("zero arcs {arcs:?}")
        },
    )
}

/// Zero count of `pushforward(W, f)` against that of `W` for every map.
/// The residual of each check is the largest distance between the detected
/// zeros of the pushed field and the images of the zeros of `W`.
pub fn invariance_suite(w: &VectorField, maps: &[CircleMap]) -> VerificationReport {
    let opts = SingularityOptions::default();
    let base = analyze(w, &opts);
    let checks = std::thread::scope(|s| {
        let handles: Vec<_> = maps
            .iter()
            .enumerate()
            .map(|(j, f)| {
                let base = &base;
                s.spawn(move || {
                    let pushed = analyze(&w.pushforward(f), &opts);
                    let images: Vec<f64> = base.points.iter().map(|p| f.apply(p.theta)).collect();
                    let err = images
                        .iter()
                        .map(|&y| {
                            pushed
                                .points
                                .iter()
                                .map(|p| circle_distance(p.theta, y))
                                .fold(f64::INFINITY, f64::min)
                        })
                        .fold(0.0, f64::max);
                    check(
                        "countInvariance",
                        pushed.count == base.count,
                        err,
                        format!("map {j}: {} -> {} zero(s)", base.count, pushed.count),
                    )
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scan worker panicked"))
            .collect()
    });
    VerificationReport::from_checks(checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;
    use crate::reduction::CanonicalPair;

    fn field(s: &str) -> VectorField {
        VectorField::new(parse(s).unwrap())
    }

    #[test]
    fn canonical_pair_passes() {
        let p = CanonicalPair::new(3, vec![0.0, 1.0, -1.0], vec![1, -1, 1]).unwrap();
        let (v, w) = p.fields();
        let r = validate_noncommutative(&v, &w);
        assert!(r.overall, "{:#?}", r.failed().collect::<Vec<_>>());
        let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["bracket", "lemma1", "lemma3", "lemma2", "lemma4", "classC"]);
    }

    #[test]
    fn sin_cos_fails_bracket() {
        let r = validate_noncommutative(&field("sin(t)"), &field("cos(t)"));
        assert!(!r.check("bracket").unwrap().passed);
        assert!((r.check("bracket").unwrap().residual - 2.0).abs() < 1e-9);
        assert!(!r.check("lemma4").unwrap().passed);
        assert!(!r.overall);
    }

    #[test]
    fn simple_zero_fails_degeneracy() {
        // only the degeneracy entry matters here
        let r = validate_noncommutative(&field("sin(t)"), &field("sin(t)"));
        assert!(!r.check("lemma4").unwrap().passed);
        assert!(r.check("lemma2").unwrap().passed);
    }

    #[test]
    fn identity_and_rotation_keep_count() {
        let w = field("1 - cos(2*t)");
        let r = invariance_suite(&w, &[CircleMap::identity(), CircleMap::rotation(0.4)]);
        assert!(r.overall);
        assert!(r.checks.iter().all(|c| c.residual < 1e-9));
    }
}
