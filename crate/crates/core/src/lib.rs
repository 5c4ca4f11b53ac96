//! Abelian sandpiles on square and triangular lattices, the set of
//! stabilizable quadratic growth rates, Apollonian circle packings, and the
//! piecewise-quadratic solutions of the sandpile PDE built on Apollonian
//! triangulations.
//!
//! The modules layer bottom up: [`symmat`] and [`lattice`] are independent,
//! [`circles`] and [`gamma`] sit on top of them, and [`fractal`] uses both
//! `symmat` and `circles`.

pub mod circles;
pub mod fractal;
pub mod gamma;
pub mod lattice;
pub mod symmat;
pub mod verify;

use thiserror::Error;

pub use circles::{GenCircle, Packing, PackingKind};
pub use fractal::{ApollonianCurve, ApollonianTriangle, Triangulation};
pub use gamma::{BoundaryRaster, C0Interval, QuadraticLift};
pub use lattice::{ChipConfig, Domain, Lattice, Odometer, Order, Status};
pub use symmat::{QuadraticPatch, RationalSym2, Sym2, Vec2};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate matrix: trace {0} is not above 2")]
    Degenerate(f64),
    #[error("no proper successor")]
    NoProperSuccessor,
    #[error("incompatible patches (mismatch {0:.3e})")]
    IncompatiblePatches(f64),
    #[error("collinear points")]
    Collinear,
    #[error("line has no matrix")]
    LineHasNoMatrix,
    #[error("trace ≤ 2 has no circle")]
    NoCircle,
    #[error("coincident tangency points")]
    CoincidentTangency,
    #[error("no bounded region")]
    NoBoundedRegion,
    #[error("window overflow: boundary site ({0}, {1}) must topple")]
    WindowOverflow(i64, i64),
    #[error("site ({0}, {1}) outside domain")]
    OutsideDomain(i64, i64),
    #[error("point ({0}, {1}) outside the triangulated domain")]
    OutsideRegion(f64, f64),
    #[error("fit residual exceeded ({0:.3e})")]
    FitResidual(f64),
    #[error("degenerate successor")]
    DegenerateSuccessor,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
