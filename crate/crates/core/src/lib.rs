pub mod cli;
pub mod error;
pub mod grid;
pub mod io;
pub mod measures;
pub mod numerics;
pub mod pair_copulas;
pub mod partial;
pub mod sampler;
pub mod verify;

pub use error::{Error, Result};
pub use grid::GridConfig;
pub use pair_copulas::{Family, PairCopulaSpec, Rotation};
