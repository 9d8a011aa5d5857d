pub mod domain;
pub mod error;
pub mod experiments;
pub mod feasibility;
pub mod generate;
pub mod lp;
pub mod negotiation;
pub mod solver;

pub use error::{Error, Result};
