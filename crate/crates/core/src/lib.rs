//! Trivariate vine copulas.
//!
//! A three-dimensional copula density is decomposed into two unconditional
//! pair-copulas `c12`, `c23` and one conditional pair-copula `c13;2` whose
//! parameters may depend on the conditioning value `u2`:
//!
//! ```text
//! c(u1, u2, u3) = c13;2(C1|2(u1|u2), C3|2(u3|u2); u2) * c12(u1, u2) * c23(u2, u3)
//! ```
//!
//! The crate covers the bivariate building blocks ([`bicop`]), the
//! trivariate construction and its simulation ([`vine3d`]), a registry of
//! reference models ([`scenarios`]), likelihood-based fitting
//! ([`estimate`]), grid evaluation with iso-surface / contour extraction
//! ([`field`]) and data ingestion plus kernel density estimation ([`kde`]).

pub mod bicop;
pub mod error;
pub mod estimate;
pub mod field;
pub mod io;
pub mod kde;
pub mod quadrature;
pub mod roots;
pub mod rng;
pub mod scenarios;
pub mod special;
pub mod stats;
pub mod vine3d;

pub use bicop::{BivariateCopula, Family, Rotation};
pub use error::{Error, Result};
pub use vine3d::{ConditionalPair, Margins, ParamFunction, SampleMatrix, VineSpec3D};
