use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::matrix::{kahan_sum, RenewalMatrix};
use super::roots::log1p_c;
use crate::error::{Error, Result};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Right eigenvector of the renewal matrix for a nontrivial root `gamma`,
/// normalized so that `f_1 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub n: usize,
    pub values: Vec<Complex64>,
    pub gamma: Complex64,
    pub lambda: Complex64,
    /// `(1/n) sum |f_i|^2`, summed in index order.
    pub norm2_sq: f64,
    pub norm2: f64,
    pub norm_inf: f64,
}

impl Eigenfunction {
    /// `f_0 = 0` and `f_k = 1 + (gamma - n/(n-1)) sum_{j=1}^{k-1} gamma^(j-1)`.
    ///
    /// Powers are taken as `exp(j log1p(gamma - 1))` and the geometric sum is
    /// compensated, which keeps the eigen-residual at rounding level even
    /// when `|1 - gamma|` is of order `1/n` with `n` in the hundreds of
    /// thousands.
    pub fn new(n: usize, gamma: Complex64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("deck size must be >= 2, got {n}")));
        }
        if gamma.norm() <= 1e-12 || (gamma - ONE).norm() <= 1e-12 {
            return Err(Error::SpecialEigenvalue(gamma));
        }
        let nf = n as f64;
        let log_gamma = log1p_c(gamma - ONE);
        let slope = (gamma - ONE) - Complex64::new(1.0 / (nf - 1.0), 0.0);
        let mut values = Vec::with_capacity(n);
        values.push(Complex64::new(0.0, 0.0));
        let mut sum = Complex64::new(0.0, 0.0);
        let mut comp = Complex64::new(0.0, 0.0);
        for k in 1..n {
            // sum holds sum_{j=1}^{k-1} gamma^(j-1)
            values.push(ONE + slope * sum);
            let term = (log_gamma * (k - 1) as f64).exp();
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        Ok(Self::from_values(n, values, gamma))
    }

    fn from_values(n: usize, values: Vec<Complex64>, gamma: Complex64) -> Self {
        let nf = n as f64;
        let norm2_sq = values.iter().map(|v| v.norm_sqr()).sum::<f64>() / nf;
        let norm_inf = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Eigenfunction {
            n,
            values,
            gamma,
            lambda: gamma * (1.0 - 1.0 / nf),
            norm2_sq,
            norm2: norm2_sq.sqrt(),
            norm_inf,
        }
    }

    /// The same eigenfunction multiplied by a nonzero complex constant.
    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        if c.norm() == 0.0 {
            return Err(Error::InvalidArgument("scale must be nonzero".into()));
        }
        let values = self.values.iter().map(|v| v * c).collect();
        Ok(Self::from_values(self.n, values, self.gamma))
    }

    pub fn sum(&self) -> Complex64 {
        kahan_sum(self.values.iter().copied())
    }

    /// `max_i |(M f)_i - lambda f_i|`.
    pub fn residual(&self) -> f64 {
        eigen_residual(&self.values, self.lambda)
    }
}

/// `max_i |(M f)_i - lambda f_i|` for the renewal matrix of size `f.len()`.
pub fn eigen_residual(f: &[Complex64], lambda: Complex64) -> f64 {
    let m = RenewalMatrix::new(f.len()).expect("n >= 2");
    m.apply(f)
        .iter()
        .zip(f)
        .map(|(mf, fi)| (mf - lambda * fi).norm())
        .fold(0.0, f64::max)
}

/// Eigenvectors for `lambda = 1` (constant) and `lambda = 0`
/// (`(-1, n-1, -1, ..., -1)`).
pub fn special_eigenvectors(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("deck size must be >= 2, got {n}")));
    }
    let ones = vec![1.0; n];
    let mut zero = vec![-1.0; n];
    zero[1] = (n - 1) as f64;
    Ok((ones, zero))
}
