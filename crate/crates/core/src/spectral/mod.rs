//! Spectrum of the single-card renewal chain.

mod eigen;
mod matrix;
mod roots;

pub use eigen::{eigen_residual, special_eigenvectors, Eigenfunction};
pub use matrix::{renewal_row, RenewalMatrix};
pub use roots::{
    all_gamma_roots, char_poly, log1p_c, solve_gamma, solve_zeta, SpectralPair,
    DEFAULT_MAX_ITER, DEFAULT_TOL, LOCALIZATION_THRESHOLD_N,
};
