//! Realizations of two-dimensional Lie algebras by vector fields on the
//! circle: trigonometric coefficients, brackets and pushforwards, singular
//! point analysis, reduction of `[V, W] = W` to canonical form, and the
//! commutant of a field.

pub mod chart;
pub mod circle_map;
pub mod commutant;
pub mod field;
pub mod parser;
pub mod quadrature;
pub mod reduction;
pub mod singularity;
pub mod trig;
pub mod verify;

pub use circle_map::{CircleMap, Homotopy, Jet, MapError};
pub use commutant::{build_commuting, decompose, CommutantError, Commuting, DegenerateDecomposition};
pub use field::{bracket, pushforward, Coefficient, Evaluate, FieldError, VectorField};
pub use parser::{format, parse, ParseError};
pub use reduction::{reduce, CanonicalPair, Reduction, ReductionError, SingularGrid};
pub use singularity::{find_singular, SingularPoint, SingularityError, SingularityReport};
pub use trig::{PeriodicFunction, PiecewiseTrig, TrigError, TrigPoly};
pub use verify::{invariance_suite, validate_noncommutative, VerificationReport};
