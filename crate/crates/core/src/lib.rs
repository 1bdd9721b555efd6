//! Universal communication over unknown causal channels with feedback.
//!
//! The crate covers channel models and their exact small-instance laws,
//! capacity computations, the iterated/arbitrary finite-block reference
//! systems and the epoch/super-symbol universal scheme, plus a scenario
//! harness that drives them.

// `!(x > 0.0)` is how argument checks reject NaN alongside bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channels;
pub mod checks;
pub mod error;
pub mod harness;
pub mod reference;
pub mod types;
pub mod universal;

pub use error::{Error, Result};
