//! Mixed multifractal estimators for finitely many measures on `[0, 1]`,
//! with scaling quotients controlled by a gauge function `φ` in place of
//! `log r`.
//!
//! The measures are b-adic grid measures ([`measure::GridMeasure`]) bundled
//! into a [`measure::VectorMeasure`]. Partition sums over coverings and
//! packings ([`partition`]) are turned into dimension functions
//! ([`dimension`]) and spectra ([`spectrum`]). Multinomial cascades have
//! closed forms ([`oracle`]) against which everything is checked
//! ([`verify`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covering;
pub mod dimension;
pub mod error;
pub mod gauge;
pub mod ldp;
pub mod measure;
pub mod numeric;
pub mod oracle;
pub mod partition;
pub mod spectrum;
pub mod verify;

pub use error::{Error, Result};
