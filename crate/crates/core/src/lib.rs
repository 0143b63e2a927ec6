//! Numerics for planar measures and the angular distribution of their mass.
//!
//! The crate represents finite measures in the punctured plane, evaluates
//! their logarithmic potentials, and checks the family of sector-mass
//! inequalities satisfied by measures whose potential is radially
//! majorized, `u(z) <= u(|z|)`:
//!
//! * [`measure`] holds the data model and the sector-mass function
//!   `m(t) = mu{ |Arg z| <= t }`;
//! * [`potential`] evaluates potentials and sweeps the majorization hypothesis;
//! * [`poly`] finds roots of positive-coefficient polynomials and builds their
//!   empirical measures;
//! * [`obrechkoff`] checks the averaged bound `(1/a) int_0^a m <= a / 2pi`,
//!   the pointwise bound `m(alpha) <= 2 alpha / pi`, and the limit kernel `J`;
//! * [`mellin`] reproduces the homogeneous-transform machinery behind the
//!   averaged bound as computed identities;
//! * [`extremal`] builds the measures attaining equality in the pointwise bound.
//!
//! Grid sweeps run on rayon when the `parallel` feature is enabled (the
//! default); see [`exec`].

pub mod error;
pub mod exec;
pub mod extremal;
pub mod measure;
pub mod mellin;
pub mod obrechkoff;
pub mod poly;
pub mod potential;
pub mod quadrature;
pub mod report;

pub use error::{Error, Result};
pub use exec::Execution;
pub use measure::{Atom, Component, ExtremalTail, Measure, SectorMassFunction, TabulatedDensity, UniformCircle};
pub use num_complex::Complex64;
pub use poly::{PositivePolynomial, RootSet};
pub use report::{CheckRecord, VerificationReport};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
