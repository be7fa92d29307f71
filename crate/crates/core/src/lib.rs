pub mod asymptotics;
pub mod elliptic;
pub mod emit;
pub mod error;
pub mod floquet;
pub mod lame;
pub mod ode;
pub mod orbit;
pub mod potential;
pub mod quad;
pub mod scan;

pub use error::{Error, Result};
