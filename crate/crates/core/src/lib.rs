pub mod cmcg;
pub mod dg;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod filter;
pub mod frequency;
pub mod mesh;
pub mod msh;
pub mod propagation;
pub mod time;

pub use error::{Error, Result};
