//! Densities of normalized free convolution powers `mu_n` of a standardized
//! probability measure, computed along two independent routes (the
//! semicircular flow of the companion measure and the subordination fixed
//! point), together with the diagnostics of the local, `L^p` and entropic
//! free central limit theorems.

pub mod config;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod measures;
pub mod pipeline;
pub mod quadrature;
pub mod roots;
pub mod table;
pub mod transforms;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use measures::{make_measure, Atom, Measure, MeasureSpec};
pub use num_complex::Complex64;
pub use table::DensityTable;
