//! Numerical laboratory for trapped-surface formation from short-pulse data:
//! regime parameters, characteristic data, transport to the slab, marginally
//! outer trapped spheres, the apparent horizon and the Penrose-type area bound.

pub mod check;
pub mod config;
pub mod container;
pub mod error;
pub mod horizon;
pub mod io;
pub mod linalg;
pub mod mots;
pub mod penrose;
pub mod pipeline;
pub mod plot;
pub mod regime;
pub mod shear;
pub mod sphere;
pub mod transport;

pub use error::{Error, Result};
