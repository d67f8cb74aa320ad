pub mod basis;
pub mod config;
pub mod convexset;
pub mod entropy;
pub mod error;
pub mod gramsearch;
pub mod harness;
pub mod io;
pub mod likelihood;
pub mod linalg;
mod nelder_mead;
pub mod random;
mod sdp;
pub mod witness;
