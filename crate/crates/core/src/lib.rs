pub mod check;
pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod par;
pub mod policy;
mod poly;
pub mod quad;
pub mod scale;
pub mod simulate;
pub mod valuation;

pub use error::{Error, Result};
pub use model::{LevyModel, ModelParams, PhaseTypeDist, VariationClass};
pub use par::Execution;
pub use policy::{Policy, SolveOptions, SolveReport};
pub use scale::ScaleBasis;
pub use simulate::{SimConfig, SimResult};
