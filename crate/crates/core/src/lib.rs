pub mod chain;
pub mod channel;
pub mod dsp;
pub mod encoder;
pub mod error;
pub mod filternet;
pub mod keyrate;
pub mod scenario;
pub mod seed;
pub mod sensing;
pub mod signal;

pub use error::{Error, Result};
