pub mod error;
pub mod fca;
pub mod io;
pub mod minterm;
pub mod network;
pub mod pipeline;
pub mod qldt;
pub mod quantizer;
pub mod report;
pub mod shapley;

pub use error::{Error, Result};
