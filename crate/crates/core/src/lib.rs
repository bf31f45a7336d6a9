pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod pipeline;
pub mod policy;
pub mod stream;
pub mod translator;
pub mod trace;

pub use error::{Error, Result};
