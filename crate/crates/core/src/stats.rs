//! Streaming mean/variance accumulators. Reductions in this crate feed
//! samples in replica order, so results do not depend on thread count.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Welford accumulator for real samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the running mean.
    pub m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Chan et al. parallel combination.
    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.sample_variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for Welford {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut w = Welford::new();
        iter.into_iter().for_each(|x| w.push(x));
        w
    }
}

/// Welford accumulator for complex samples; the variance is `E|X - EX|^2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexWelford {
    pub count: u64,
    pub mean: Complex64,
    pub m2: f64,
}

impl ComplexWelford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: Complex64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        let e = x - self.mean;
        self.m2 += d.re * e.re + d.im * e.im;
    }

    pub fn merge(&mut self, other: &ComplexWelford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * (other.count as f64 / n);
        self.m2 += other.m2 + d.norm_sqr() * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean, `sqrt(E|X - EX|^2 / count)`.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.sample_variance() / self.count as f64).sqrt()
        }
    }
}

impl FromIterator<Complex64> for ComplexWelford {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut w = ComplexWelford::new();
        iter.into_iter().for_each(|x| w.push(x));
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn welford_matches_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 101) as f64 * 0.37 - 3.0).collect();
        let w: Welford = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert_relative_eq!(w.mean, mean, max_relative = 1e-12);
        assert_relative_eq!(w.sample_variance(), var, max_relative = 1e-12);
    }

    #[test]
    fn merge_is_order_independent() {
        let xs: Vec<Complex64> = (0..500)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let whole: ComplexWelford = xs.iter().copied().collect();
        let mut a: ComplexWelford = xs[..123].iter().copied().collect();
        let b: ComplexWelford = xs[123..].iter().copied().collect();
        a.merge(&b);
        assert_eq!(a.count, whole.count);
        assert_relative_eq!(a.mean.re, whole.mean.re, max_relative = 1e-12);
        assert_relative_eq!(a.mean.im, whole.mean.im, max_relative = 1e-12);
        assert_relative_eq!(a.m2, whole.m2, max_relative = 1e-12);
    }

    #[test]
    fn constant_samples_are_exact() {
        let x = Complex64::new(0.1234567, -9.87654321);
        let w: ComplexWelford = std::iter::repeat(x).take(1000).collect();
        assert_eq!(w.mean, x);
        assert_eq!(w.m2, 0.0);
    }
}
