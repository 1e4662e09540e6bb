//! Weight classes on finite spaces of homogeneous type.
//!
//! The crate builds finite quasimetric measure spaces (grids and the comb),
//! adjacent dyadic systems over them, the non-centred, centred and localized
//! dyadic maximal operators, and estimators for the σ-weak A∞ and reverse
//! Hölder constants and their dyadic counterparts. The `experiments` module
//! runs the theorem checks and counterexample scans on top of these.

pub mod error;
pub mod field;
pub mod dyadic;
pub mod experiments;
pub mod maximal;
pub mod space;
pub mod weights;

pub use error::{Error, Result};
pub use field::Field;
