pub mod basis;
pub mod gauss;
pub mod kernels;
pub mod geometry;
pub mod laplace;
pub mod linalg;
pub mod oracle;
pub mod potentials;
pub mod scalar;
pub mod solver;
