//! Exact series arithmetic, closed-form expressions and polynomial roots.

pub mod exact;
pub mod expr;
pub mod poly;
pub mod puiseux;

pub use exact::{rat, ExactComplex};
pub use expr::{ExprError, RationalExpr, DEFAULT_POLE_EPS};
pub use poly::{canonical_order, poly_roots, ComplexPolynomial, ExactPolynomial, PolyError, Root};
pub use puiseux::{PuiseuxSeries, SeriesError, SeriesJson, Truncation, Var};
