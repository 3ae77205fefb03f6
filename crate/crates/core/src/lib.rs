//! The MIDAS mildew decision model.

pub mod advisor;
pub mod assembly;
pub mod case;
pub mod chain;
pub mod cultivation;
pub mod discretize;
pub mod economics;
pub mod error;
pub mod evaluation;
pub mod filter;
pub mod module;
pub mod params;
pub mod quantify;
pub mod schema;
pub mod thermal;

pub use error::{CoreError, Result};
