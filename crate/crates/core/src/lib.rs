pub mod compat;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod ideal;
pub mod linalg;
pub mod lp;
pub mod measures;
pub mod model;
pub mod scalar;
pub mod symmetry;
