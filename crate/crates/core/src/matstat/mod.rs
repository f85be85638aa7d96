//! Dense symmetric-matrix kernels and distribution primitives.

pub mod decomp;
pub mod matrix;
pub mod special;
pub mod wishart;

pub use decomp::{
    chol_upper, cholesky_upper, log_det, polar_factor, positive_eigenvalues, sym_eigen, sym_inv_sqrt,
    EigenSpectrum, SymPosDef, UpperCholesky,
};
pub use matrix::{dot, Mat};
pub use special::{log_multigamma, student_t_logpdf, student_t_logpdf_sq};
pub use wishart::{bartlett_factor, standard_normal_vec, wishart_sample};
