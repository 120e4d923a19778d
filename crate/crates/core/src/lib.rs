//! Numerics for the exponential family `f(z) = λ·e^z`.
//!
//! The crate is organised bottom-up:
//!
//! - [`dynamics`]: map evaluation, orbits, orbit and parameter derivatives,
//!   expansion estimates.
//! - [`cycle`]: locating, classifying and continuing periodic cycles.
//! - [`psf`]: parameters whose singular orbit lands on a repelling cycle.
//! - [`ladder`]: nested parameter disks whose singular orbit marches to the
//!   right, shadowing repelling cycles.
//! - [`probe`]: orbit statistics and escape-time renders.
//!
//! Every operation is a pure function. Non-finite numbers never leave an
//! operation; overflow and escape are reported as explicit statuses.

pub mod cycle;
pub mod dynamics;
pub mod ladder;
pub mod probe;
pub mod psf;
pub mod serde_complex;

pub use num_complex::Complex64;

pub use cycle::{Cycle, CycleError, SquareTarget, Stability};
pub use ladder::{LadderConfig, LadderError, LadderResult, Rung};
pub use probe::{AccumulationStats, FieldImage, GridSpec};
pub use psf::{PsfError, PsfParameter, PsfReport, PsfSpec};
pub use dynamics::{
    DerivativeTrace, DynError, EscapePolicy, ExpansionEstimate, OrbitStatus, OrbitTrace, Parameter,
};

/// `2π`, spelled out because it appears everywhere in this family.
pub const TWO_PI: f64 = std::f64::consts::TAU;
