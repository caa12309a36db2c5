pub mod acceptance;
pub mod bessel;
pub mod charge_lattice;
pub mod cli;
pub mod ks_algebra;
pub mod metric_extract;
pub mod ov_exact;
pub mod quadrature;
pub mod rh_solver;
pub mod spectral_periods;
pub mod wall_gauge;

pub use num_complex::Complex64 as C64;
