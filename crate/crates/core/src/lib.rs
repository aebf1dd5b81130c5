pub mod cli;
pub mod focal;
pub mod geomodel;
pub mod greenop;
pub mod liegroup;
pub mod spectral;
pub mod tolerance;

pub use tolerance::Tolerances;
