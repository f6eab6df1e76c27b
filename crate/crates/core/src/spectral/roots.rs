//! Nonzero roots of `psi(z) = e^z - z - 1`, the nearby roots of
//! `phi_n(z) = (1 + z/n)^n - z - 1`, and the characteristic polynomial
//! `(n-1) g^n - n g^(n-1) + 1` whose roots give the renewal eigenvalues
//! through `lambda = (1 - 1/n) g`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 200;

/// Deck size from which `|1 - gamma| <= (|zeta| + 1)/n` and
/// `|1 - lambda| <= (|zeta + 1| + 1)/n` are asserted for the m = 1 branch.
/// The second-order terms are about `|zeta|^2 / (2 n^2)`, which the `1/n`
/// slack covers once `n` exceeds roughly `|zeta|^2 / 2`.
pub const LOCALIZATION_THRESHOLD_N: usize = 64;

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `ln(1 + w)` without cancellation for small `w`.
pub fn log1p_c(w: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * w.re + w.norm_sqr()).ln_1p();
    let im = w.im.atan2(1.0 + w.re);
    Complex64::new(re, im)
}

fn psi(z: Complex64) -> Complex64 {
    z.exp() - z - ONE
}

/// Residual of `(n-1) g^n - n g^(n-1) + 1`, expanded directly. Only sensible
/// for moderate `n`; large-n residuals go through `phi_n`.
pub fn char_poly(n: usize, g: Complex64) -> Complex64 {
    let nf = n as f64;
    let gn1 = g.powu(n as u32 - 1);
    gn1 * g * (nf - 1.0) - gn1 * nf + ONE
}

/// `h(y) = ln(y / sin y) - (y cot y - 1)`; its zero gives `Im(zeta)`.
fn branch_equation(y: f64) -> (f64, f64) {
    let (s, c) = y.sin_cos();
    let h = (y / s).ln() - (y * c / s - 1.0);
    let dh = 1.0 / y - 2.0 * c / s + y / (s * s);
    (h, dh)
}

/// The nonzero root of `e^z - z - 1` with imaginary part in
/// `(2 pi m + pi/4, 2 pi m + pi/2)`.
///
/// Solves the real equation for `y = Im(z)` by safeguarded Newton on the
/// bracket (the endpoints have opposite signs for every `m >= 1`), recovers
/// `x = y cot y - 1`, then polishes with two complex Newton steps.
pub fn solve_zeta(m: u32, tol: f64) -> Result<Complex64> {
    if m == 0 {
        return Err(Error::InvalidArgument("branch index m must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let base = 2.0 * PI * m as f64;
    let (mut lo, mut hi) = (base + FRAC_PI_4, base + FRAC_PI_2);
    debug_assert!(branch_equation(lo).0 < 0.0 && branch_equation(hi).0 > 0.0);
    let mut y = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..DEFAULT_MAX_ITER {
        let (h, dh) = branch_equation(y);
        if h == 0.0 {
            converged = true;
            break;
        }
        if h < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let newton = y - h / dh;
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - y).abs() <= 4.0 * f64::EPSILON * y {
            y = next;
            converged = true;
            break;
        }
        y = next;
    }
    let mut z = Complex64::new(y * y.cos() / y.sin() - 1.0, y);
    if !converged {
        return Err(Error::NoConvergence {
            solver: "solve_zeta bracket",
            iterations: DEFAULT_MAX_ITER,
            last: z,
            residual: psi(z).norm(),
        });
    }
    for _ in 0..3 {
        let r = psi(z);
        let next = z - r / (z.exp() - ONE);
        if psi(next).norm() < r.norm() {
            z = next;
        } else {
            break;
        }
    }
    let residual = psi(z).norm();
    if residual > tol || !(z.im > base + FRAC_PI_4 && z.im < base + FRAC_PI_2) {
        return Err(Error::NoConvergence {
            solver: "solve_zeta polish",
            iterations: 3,
            last: z,
            residual,
        });
    }
    Ok(z)
}

/// Spectral data for one branch of the renewal chain at deck size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPair {
    pub n: usize,
    pub m: u32,
    pub zeta: Complex64,
    pub z_n: Complex64,
    /// `1 + z_n / n`.
    pub omega: Complex64,
    /// `1 / omega`, a root of the characteristic polynomial.
    pub gamma: Complex64,
    /// `(1 - 1/n) gamma`.
    pub lambda: Complex64,
    /// `1 - lambda`, evaluated as `(1 + z_n) / (n omega)`.
    pub one_minus_lambda: Complex64,
    /// `n |1 - lambda|`.
    pub rho: f64,
    pub psi_residual: f64,
    /// `|phi_n(z_n)|`.
    pub phi_residual: f64,
    /// `|(n-1) g^n - n g^(n-1) + 1|`, evaluated as `|g|^n |phi_n(z_n)|`.
    pub poly_residual: f64,
}

impl SpectralPair {
    /// Radius `C/n` of the disc around `zeta` in which `z_n` must lie;
    /// `C = |zeta (1 + zeta)|`, twice the first-order displacement.
    pub fn localization_radius(zeta: Complex64, n: usize) -> f64 {
        (zeta * (ONE + zeta)).norm() / n as f64
    }

    /// `|1 - gamma| <= (|zeta| + 1)/n` and `|1 - lambda| <= (|zeta + 1| + 1)/n`.
    pub fn satisfies_localization(&self) -> bool {
        let nf = self.n as f64;
        let one_minus_gamma = (self.z_n / nf) / self.omega;
        one_minus_gamma.norm() <= (self.zeta.norm() + 1.0) / nf
            && self.one_minus_lambda.norm() <= ((ONE + self.zeta).norm() + 1.0) / nf
    }
}

fn phi_and_derivative(n: f64, z: Complex64) -> (Complex64, Complex64) {
    let l = log1p_c(z / n);
    let phi = (l * n).exp() - z - ONE;
    let dphi = (l * (n - 1.0)).exp() - ONE;
    (phi, dphi)
}

/// Newton on `phi` at (possibly fractional) size `n`. Returns the iterate,
/// its residual and whether the step size collapsed.
fn newton_phi(n: f64, mut z: Complex64) -> (Complex64, Complex64, bool) {
    for _ in 0..DEFAULT_MAX_ITER {
        let (p, dp) = phi_and_derivative(n, z);
        if dp.norm() == 0.0 || !p.norm().is_finite() {
            return (z, p, false);
        }
        let step = p / dp;
        z -= step;
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(1.0) {
            return (z, phi_and_derivative(n, z).0, true);
        }
    }
    (z, phi_and_derivative(n, z).0, false)
}

/// Number of continuation stages in `1/n` between `zeta` and the target.
const CONTINUATION_STAGES: usize = 64;

/// Newton iteration on `phi_n(z) = (1 + z/n)^n - z - 1` with the power
/// evaluated as `exp(n log1p(z/n))`.
///
/// The root is tracked from `zeta` (the `1/n = 0` limit) by continuation in
/// `s = 1/n` over [`CONTINUATION_STAGES`] equal stages, each solved by
/// Newton from the previous stage's root. A plain Newton start at `zeta`
/// wanders off for `n` near 8.
pub fn solve_gamma(n: usize, zeta: Complex64, m: u32, tol: f64) -> Result<SpectralPair> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!(
            "solve_gamma targets the asymptotic regime n >= 8 (got {n}); use all_gamma_roots"
        )));
    }
    let psi_residual = psi(zeta).norm();
    if zeta.norm() < 1e-8 || psi_residual > 1e3 * tol.max(DEFAULT_TOL) {
        return Err(Error::InvalidArgument(format!(
            "seed {zeta} is not a nonzero root of e^z - z - 1 (residual {psi_residual:e})"
        )));
    }
    let nf = n as f64;
    let mut z = zeta;
    let mut phi = Complex64::new(f64::NAN, f64::NAN);
    let mut converged = false;
    for stage in 1..=CONTINUATION_STAGES {
        let size = nf * CONTINUATION_STAGES as f64 / stage as f64;
        let (next, p, ok) = newton_phi(size, z);
        z = next;
        phi = p;
        converged = ok;
    }
    if z.norm() < 1e-6 {
        return Err(Error::TrivialRoot);
    }
    let phi_residual = phi.norm();
    if !converged || phi_residual > tol {
        return Err(Error::NoConvergence {
            solver: "solve_gamma newton",
            iterations: DEFAULT_MAX_ITER,
            last: z,
            residual: phi_residual,
        });
    }
    let radius = SpectralPair::localization_radius(zeta, n);
    let distance = (z - zeta).norm();
    if distance > radius {
        return Err(Error::RootNotLocalized {
            z_n: z,
            distance,
            radius,
        });
    }
    let omega = ONE + z / nf;
    let gamma = omega.inv();
    let lambda = gamma * (1.0 - 1.0 / nf);
    let one_minus_lambda = (ONE + z) / (omega * nf);
    let poly_residual = (gamma.norm().ln() * nf).exp() * phi_residual;
    Ok(SpectralPair {
        n,
        m,
        zeta,
        z_n: z,
        omega,
        gamma,
        lambda,
        one_minus_lambda,
        rho: one_minus_lambda.norm() * nf,
        psi_residual,
        phi_residual,
        poly_residual,
    })
}

/// All `n` roots of `(n-1) g^n - n g^(n-1) + 1`, for `2 <= n <= 64`.
///
/// The polynomial factors as `(g - 1)^2 (1 + 2g + 3g^2 + ... + (n-1) g^(n-2))`;
/// the double root is returned exactly and the cofactor is solved through
/// the eigenvalues of its companion matrix, each polished by Newton steps.
/// Roots are ordered by `|1 - g|`, the double root first.
pub fn all_gamma_roots(n: usize) -> Result<Vec<Complex64>> {
    if !(2..=64).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "all_gamma_roots supports 2 <= n <= 64, got {n}"
        )));
    }
    let degree = n - 2;
    let mut roots = vec![ONE, ONE];
    if degree > 0 {
        // monic cofactor: g^d + sum_k c_k g^k with c_k = (k+1)/(n-1)
        let lead = (n - 1) as f64;
        let mut companion = DMatrix::<f64>::zeros(degree, degree);
        for i in 1..degree {
            companion[(i, i - 1)] = 1.0;
        }
        for k in 0..degree {
            companion[(k, degree - 1)] = -((k + 1) as f64) / lead;
        }
        let coeffs: Vec<f64> = (0..=degree).map(|k| (k + 1) as f64).collect();
        for g in companion.complex_eigenvalues().iter() {
            roots.push(polish(&coeffs, *g));
        }
    }
    roots.sort_by(|a, b| (ONE - a).norm().total_cmp(&(ONE - b).norm()));
    Ok(roots)
}

/// Horner evaluation of `sum_k coeffs[k] x^k` and its derivative.
fn horner(coeffs: &[f64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

fn polish(coeffs: &[f64], mut x: Complex64) -> Complex64 {
    for _ in 0..8 {
        let (p, dp) = horner(coeffs, x);
        if dp.norm() == 0.0 {
            break;
        }
        let next = x - p / dp;
        if horner(coeffs, next).0.norm() >= p.norm() {
            break;
        }
        x = next;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_branch_matches_reported_digits() {
        let z = solve_zeta(1, DEFAULT_TOL).unwrap();
        assert_eq!((z.re * 1000.0).floor() / 1000.0, 2.088);
        assert_eq!((z.im * 1000.0).floor() / 1000.0, 7.461);
        assert_eq!(((ONE + z).norm() * 1000.0).floor() / 1000.0, 8.075);
        assert!(psi(z).norm() <= DEFAULT_TOL);
    }

    /// Plain bisection on the branch equation, independent of the
    /// safeguarded Newton path.
    fn bisect_branch(m: u32) -> f64 {
        let base = 2.0 * PI * m as f64;
        let (mut lo, mut hi) = (base + FRAC_PI_4, base + FRAC_PI_2);
        let g = |y: f64| y / y.sin() - (y * y.cos() / y.sin() - 1.0).exp();
        assert!(g(lo) < 0.0 && g(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn higher_branches_agree_with_bisection() {
        for m in 1..=6 {
            let z = solve_zeta(m, DEFAULT_TOL).unwrap();
            let base = 2.0 * PI * m as f64;
            assert!(z.im > base + FRAC_PI_4 && z.im < base + FRAC_PI_2);
            assert_abs_diff_eq!(z.im, bisect_branch(m), epsilon = 1e-10);
            assert!(psi(z).norm() <= DEFAULT_TOL);
            assert!(z.norm() > 1.0);
        }
    }

    #[test]
    fn zeta_rejects_bad_input() {
        assert!(solve_zeta(0, 1e-12).is_err());
        assert!(solve_zeta(1, 0.0).is_err());
    }

    #[test]
    fn log1p_is_accurate_for_tiny_arguments() {
        let w = Complex64::new(3e-17, -2e-17);
        let l = log1p_c(w);
        assert_abs_diff_eq!(l.re, 3e-17, epsilon = 1e-30);
        assert_abs_diff_eq!(l.im, -2e-17, epsilon = 1e-30);
    }

    #[test]
    fn small_n_roots() {
        let r3 = all_gamma_roots(3).unwrap();
        assert_eq!(&r3[..2], &[ONE, ONE]);
        assert_abs_diff_eq!(r3[2].re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r3[2].im, 0.0, epsilon = 1e-15);
        assert_eq!(all_gamma_roots(2).unwrap(), vec![ONE, ONE]);
        assert!(all_gamma_roots(1).is_err());
        assert!(all_gamma_roots(65).is_err());
    }

    #[test]
    fn roots_lie_in_closed_unit_disc_and_solve_the_polynomial() {
        for n in 2..=64 {
            let roots = all_gamma_roots(n).unwrap();
            assert_eq!(roots.len(), n);
            for g in roots {
                assert!(g.norm() <= 1.0 + 1e-8, "n={n} root {g}");
                assert!(char_poly(n, g).norm() <= 1e-9 * n as f64, "n={n} root {g}");
            }
        }
    }

    #[test]
    fn gamma_branch_for_large_n() {
        let zeta = solve_zeta(1, DEFAULT_TOL).unwrap();
        for n in [8usize, 16, 64, 1000, 10_000, 1_000_000] {
            let sp = solve_gamma(n, zeta, 1, DEFAULT_TOL).unwrap();
            assert!(sp.gamma.norm() <= 1.0, "n={n}");
            assert!(sp.poly_residual <= DEFAULT_TOL, "n={n}");
            assert_eq!(sp.lambda, sp.gamma * (1.0 - 1.0 / n as f64));
            if n >= LOCALIZATION_THRESHOLD_N {
                assert!(sp.satisfies_localization(), "n={n} {sp:?}");
            }
        }
    }

    #[test]
    fn gamma_matches_direct_polynomial_at_moderate_n() {
        let zeta = solve_zeta(1, DEFAULT_TOL).unwrap();
        let sp = solve_gamma(40, zeta, 1, DEFAULT_TOL).unwrap();
        assert!(char_poly(40, sp.gamma).norm() < 1e-10);
        let roots = all_gamma_roots(40).unwrap();
        let nearest = roots
            .iter()
            .map(|g| (g - sp.gamma).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-10);
    }

    #[test]
    fn gamma_rejects_non_roots() {
        assert!(solve_gamma(100, Complex64::new(2.0, 7.0), 1, DEFAULT_TOL).is_err());
        assert!(solve_gamma(4, Complex64::new(2.0, 7.0), 1, DEFAULT_TOL).is_err());
    }

    #[test]
    fn tracked_root_is_the_slowest_nontrivial_mode() {
        let zeta = solve_zeta(1, DEFAULT_TOL).unwrap();
        for n in 8..=64 {
            let sp = solve_gamma(n, zeta, 1, DEFAULT_TOL).unwrap();
            let roots = all_gamma_roots(n).unwrap();
            let nearest = roots.iter().map(|g| (g - sp.gamma).norm()).fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-9, "n={n}");
            // roots[2] has the smallest |1 - gamma| among nontrivial roots;
            // conjugates tie with it.
            let best = (ONE - roots[2]).norm();
            assert!((ONE - sp.gamma).norm() <= best + 1e-9, "n={n}");
        }
    }
}
