//! Linear contextual bandits under misspecification.
//!
//! * [`linalg`]: incremental ridge regression and UCB bonuses.
//! * [`env`]: synthetic, dataset-backed and hard-family environments.
//! * [`policy`]: OFUL, DS-OFUL, SupLinUCB, LSW and multi-armed UCB.
//! * [`theory`]: closed-form constants, caps and regret bounds.
//! * [`harness`]: seeded trials, grid search, audits and CSV output.

pub mod env;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod policy;
pub mod theory;

pub use error::{BanditError, Result};
