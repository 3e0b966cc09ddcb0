pub mod distributions;
pub mod error;
pub mod gof;
pub mod market_data;
pub mod models;
pub mod partition;
pub mod backtest;
pub mod cli;
pub mod rng;

pub use error::{Error, Result};
