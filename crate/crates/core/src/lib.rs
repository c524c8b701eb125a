//! Bifurcation analysis of the Delisi tumor-immune model.

pub mod cli;
pub mod continuation;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod io;
pub mod loci;
pub mod lyapunov;
pub mod model;
pub mod roots;
pub mod svg;

pub use error::{Error, Result};
pub use model::{ModelParams, ParamId, State};
