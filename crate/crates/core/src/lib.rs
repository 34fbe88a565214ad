pub mod bench_io;
pub mod cli;
pub mod error;
pub mod gmr;
pub mod matrix;
pub mod rng;
pub mod sketch;
pub mod spsd;
pub mod svd_stream;

pub use error::{Error, Result};
