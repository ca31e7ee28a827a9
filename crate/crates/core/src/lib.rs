#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod blade;
pub mod cli;
pub mod error;
pub mod flow;
pub mod forms;
pub mod generalized;
pub mod io;
pub mod metric;
pub mod pointwise;
pub mod sampling;
pub mod sixdim;
pub mod spin55;
pub mod twisted;

pub use error::{Error, Result};
