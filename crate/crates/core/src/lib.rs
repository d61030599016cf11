//! Numerical laboratory for the critical SQG equation on bounded domains with
//! the spectral fractional Dirichlet Laplacian.

pub mod config;
pub mod degiorgi;
pub mod eigenbasis;
pub mod error;
pub mod io;
pub mod kernels;
pub mod lpcalib;
pub mod report;
pub mod solver;
pub mod special;
pub mod suites;

pub use error::{Error, Result};
