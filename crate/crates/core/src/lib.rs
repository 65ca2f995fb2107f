pub mod convergence;
pub mod error;
pub mod extension;
mod fft;
pub mod grid;
pub mod heisenberg;
pub mod io;
pub mod lca;
pub mod selftest;
pub mod semiclassics;
pub mod star;
pub mod wigner;

pub use error::{Error, Result};
pub use grid::{GridSpec, MomentumProfile, WaveFunction};
pub use wigner::{DensityKernel, PhaseSpaceFunction};
