//! The eigenfunction test statistic `F(sigma) = (1/n) sum_i f(sigma(i)) conj f(i)`,
//! its moment formulas, the explicit total-variation lower bound, and Monte
//! Carlo estimates against them.
//!
//! All permutations passed here are in the renewal frame.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng::{stream, Domain};
use crate::shuffle::RenewalShuffle;
use crate::spectral::{all_gamma_roots, solve_gamma, solve_zeta, Eigenfunction, DEFAULT_TOL};
use crate::stats::{ComplexWelford, Welford};

/// Smallest deck size for which branches are located from the limit root.
pub const ASYMPTOTIC_MIN_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestStatistic {
    n: usize,
    eigenfunction: Eigenfunction,
}

impl TestStatistic {
    pub fn new(eigenfunction: Eigenfunction) -> Self {
        TestStatistic {
            n: eigenfunction.n,
            eigenfunction,
        }
    }

    /// Statistic for branch `m` of the spectrum: the root tracked from the
    /// `m`-th upper-half-plane zero of `e^z - z - 1`. Below
    /// [`ASYMPTOTIC_MIN_N`] only `m = 1` is accepted and the exact slowest
    /// root is used instead.
    pub fn branch(n: usize, m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("branch index starts at 1".into()));
        }
        if n < ASYMPTOTIC_MIN_N {
            if m != 1 {
                return Err(Error::InvalidArgument(format!(
                    "only branch 1 is available below n = {ASYMPTOTIC_MIN_N}"
                )));
            }
            return Self::slowest_exact(n);
        }
        let zeta = solve_zeta(m, DEFAULT_TOL)?;
        let pair = solve_gamma(n, zeta, m, DEFAULT_TOL)?;
        Ok(Self::new(Eigenfunction::new(n, pair.gamma)?))
    }

    /// Statistic from the nontrivial eigenvalue with the smallest `|1 - lambda|`
    /// (upper half plane on ties), found among all roots of the
    /// characteristic polynomial. Requires `3 <= n <= 64`.
    pub fn slowest_exact(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!(
                "no nontrivial eigenvalue for n = {n}"
            )));
        }
        let nf = n as f64;
        let gamma = all_gamma_roots(n)?
            .into_iter()
            .filter(|g| (g - 1.0).norm() > 1e-9)
            .min_by(|a, b| {
                let ka = ((1.0 - a * (1.0 - 1.0 / nf)).norm(), -a.im);
                let kb = ((1.0 - b * (1.0 - 1.0 / nf)).norm(), -b.im);
                ka.partial_cmp(&kb).expect("finite roots")
            })
            .ok_or(Error::EmptyInput("nontrivial roots"))?;
        Ok(Self::new(Eigenfunction::new(n, gamma)?))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenfunction(&self) -> &Eigenfunction {
        &self.eigenfunction
    }

    pub fn lambda(&self) -> Complex64 {
        self.eigenfunction.lambda
    }

    pub fn f(&self, state: usize) -> Complex64 {
        self.eigenfunction.values[state]
    }

    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        Ok(Self::new(self.eigenfunction.scaled(c)?))
    }

    pub fn evaluate(&self, perm: &Permutation) -> Result<Complex64> {
        evaluate_f(perm, self)
    }

    /// `F` evaluated directly on a running renewal shuffle.
    pub fn evaluate_renewal(&self, shuffle: &RenewalShuffle) -> Result<Complex64> {
        if shuffle.n() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                got: shuffle.n(),
            });
        }
        let f = &self.eigenfunction.values;
        let sum = (0..self.n).fold(Complex64::new(0.0, 0.0), |acc, card| {
            acc + f[shuffle.state_of(card)] * f[card].conj()
        });
        Ok(sum / self.n as f64)
    }

    pub fn predicted_mean(&self, t: u64) -> Complex64 {
        predicted_mean(self, t)
    }
}

/// `(1/n) sum_i f(sigma(i)) conj f(i)` for `sigma` in the renewal frame.
pub fn evaluate_f(perm: &Permutation, stat: &TestStatistic) -> Result<Complex64> {
    if perm.n() != stat.n {
        return Err(Error::SizeMismatch {
            expected: stat.n,
            got: perm.n(),
        });
    }
    let f = &stat.eigenfunction.values;
    let sum = perm
        .card_to_state()
        .iter()
        .enumerate()
        .fold(Complex64::new(0.0, 0.0), |acc, (card, &state)| {
            acc + f[state] * f[card].conj()
        });
    Ok(sum / stat.n as f64)
}

const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;

/// `t * theta` reduced to `[-pi, pi)`, with the product and the reduction
/// carried in two parts so the phase stays accurate for very large `t`.
fn reduced_phase(t: u64, theta: f64) -> f64 {
    let tf = t as f64;
    let hi = tf * theta;
    let lo = tf.mul_add(theta, -hi);
    let k = (hi / TAU).round();
    let r = k.mul_add(-TAU, hi);
    k.mul_add(-TAU_LO, r) + lo
}

/// `lambda^t ||f||_2^2`, with the modulus as `exp(t log|lambda|)` and the
/// phase as `t arg(lambda)` reduced mod `2 pi`.
pub fn predicted_mean(stat: &TestStatistic, t: u64) -> Complex64 {
    let lambda = stat.lambda();
    let norm = stat.eigenfunction.norm2_sq;
    if t == 0 {
        return Complex64::new(norm, 0.0);
    }
    let modulus = (t as f64 * lambda.norm().ln()).exp() * norm;
    Complex64::from_polar(modulus, reduced_phase(t, lambda.arg()))
}

/// `|lambda|^(2t)` as `exp(2t log|lambda|)`.
fn lambda_power_sq(stat: &TestStatistic, t: u64) -> f64 {
    if t == 0 {
        1.0
    } else {
        (2.0 * t as f64 * stat.lambda().norm().ln()).exp()
    }
}

/// `||f||_2^4 / (n - 1)`, the second moment of `F` under the uniform law.
pub fn stationary_second_moment(stat: &TestStatistic) -> Result<f64> {
    if stat.n < 2 {
        return Err(Error::InvalidArgument("n must be >= 2".into()));
    }
    Ok(stat.eigenfunction.norm2_sq.powi(2) / (stat.n - 1) as f64)
}

/// `(|lambda|^(2t) + (12 t + n)/n^2) ||f||_inf^4`.
pub fn second_moment_bound(stat: &TestStatistic, t: u64) -> f64 {
    let nf = stat.n as f64;
    (lambda_power_sq(stat, t) + (12.0 * t as f64 + nf) / (nf * nf))
        * stat.eigenfunction.norm_inf.powi(4)
}

/// `|lambda|^(2t) ||f||_2^4 / (4 ||f||_inf^4 (|lambda|^(2t) + (12 t + 3n)/n^2))`,
/// clamped to `[0, 1]`.
pub fn tv_lower_bound(stat: &TestStatistic, t: u64) -> f64 {
    let nf = stat.n as f64;
    let a = lambda_power_sq(stat, t);
    let ef = &stat.eigenfunction;
    let ratio = (ef.norm2_sq / (ef.norm_inf * ef.norm_inf)).powi(2);
    let denom = 4.0 * (a + (12.0 * t as f64 + 3.0 * nf) / (nf * nf));
    (a * ratio / denom).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub t: u64,
    pub predicted_mean: Complex64,
    pub empirical_mean: Complex64,
    pub empirical_second_moment: f64,
    pub second_moment_bound: f64,
    pub tv_lower_bound: f64,
    pub replicas: u64,
    /// Standard error of the complex mean, `sqrt(E|F - EF|^2 / replicas)`.
    pub std_error: f64,
    pub second_moment_std_error: f64,
}

impl MomentReport {
    pub fn from_samples(stat: &TestStatistic, t: u64, samples: &[Complex64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("samples"));
        }
        let mean: ComplexWelford = samples.iter().copied().collect();
        let second: Welford = samples.iter().map(|x| x.norm_sqr()).collect();
        Ok(MomentReport {
            t,
            predicted_mean: predicted_mean(stat, t),
            empirical_mean: mean.mean,
            empirical_second_moment: second.mean,
            second_moment_bound: second_moment_bound(stat, t),
            tv_lower_bound: tv_lower_bound(stat, t),
            replicas: mean.count,
            std_error: mean.std_error(),
            second_moment_std_error: second.std_error(),
        })
    }

    /// `|empirical - predicted| <= k * std_error`.
    pub fn mean_within(&self, k: f64) -> bool {
        (self.empirical_mean - self.predicted_mean).norm() <= k * self.std_error
    }

    /// `empirical second moment <= bound + k * std_error`.
    pub fn second_moment_within(&self, k: f64) -> bool {
        self.empirical_second_moment <= self.second_moment_bound + k * self.second_moment_std_error
    }
}

/// Samples of `F(sigma_t)` from the renewal-frame cyclic-to-random shuffle
/// started at the identity. `times` is sorted and deduplicated; the result
/// holds one sample vector per distinct time, in replica order. Replica `k`
/// draws from the swap stream `k` of `seed`.
pub fn sample_statistic(
    stat: &TestStatistic,
    times: &[u64],
    replicas: usize,
    seed: u64,
) -> Result<(Vec<u64>, Vec<Vec<Complex64>>)> {
    if replicas == 0 {
        return Err(Error::InvalidArgument("replicas must be >= 1".into()));
    }
    let mut times = times.to_vec();
    times.sort_unstable();
    times.dedup();
    let per_replica: Vec<Vec<Complex64>> = (0..replicas as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, Domain::Swap, k);
            let mut shuffle = RenewalShuffle::identity(stat.n);
            times
                .iter()
                .map(|&t| {
                    while shuffle.time() < t {
                        shuffle.step(&mut rng);
                    }
                    stat.evaluate_renewal(&shuffle).expect("matching size")
                })
                .collect()
        })
        .collect();
    let columns = (0..times.len())
        .map(|i| per_replica.iter().map(|row| row[i]).collect())
        .collect();
    Ok((times, columns))
}

/// Samples of `F` under independent uniform permutations.
pub fn sample_uniform(stat: &TestStatistic, replicas: usize, seed: u64) -> Result<Vec<Complex64>> {
    if replicas == 0 {
        return Err(Error::InvalidArgument("replicas must be >= 1".into()));
    }
    Ok((0..replicas as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, Domain::Uniform, k);
            let perm = Permutation::uniform(stat.n, &mut rng);
            evaluate_f(&perm, stat).expect("matching size")
        })
        .collect())
}

pub const MIN_MOMENT_REPLICAS: usize = 100;

/// Monte Carlo moments of `F` at the given times against the closed forms,
/// for branch `m` at deck size `n`. Rows come out in increasing `t`.
pub fn moment_experiment(
    n: usize,
    m: u32,
    times: &[u64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<MomentReport>> {
    moment_experiment_with(&TestStatistic::branch(n, m)?, times, replicas, seed)
}

pub fn moment_experiment_with(
    stat: &TestStatistic,
    times: &[u64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<MomentReport>> {
    if replicas < MIN_MOMENT_REPLICAS {
        return Err(Error::InvalidArgument(format!(
            "replicas must be >= {MIN_MOMENT_REPLICAS}, got {replicas}"
        )));
    }
    let (times, samples) = sample_statistic(stat, times, replicas, seed)?;
    times
        .iter()
        .zip(&samples)
        .map(|(&t, s)| MomentReport::from_samples(stat, t, s))
        .collect()
}

/// Moments of `F` under the uniform law, for comparison with zero and with
/// [`stationary_second_moment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformControl {
    pub replicas: u64,
    pub empirical_mean: Complex64,
    pub std_error: f64,
    pub empirical_second_moment: f64,
    pub second_moment_std_error: f64,
    pub stationary_second_moment: f64,
}

pub fn uniform_control(stat: &TestStatistic, replicas: usize, seed: u64) -> Result<UniformControl> {
    let samples = sample_uniform(stat, replicas, seed)?;
    let mean: ComplexWelford = samples.iter().copied().collect();
    let second: Welford = samples.iter().map(|x| x.norm_sqr()).collect();
    Ok(UniformControl {
        replicas: mean.count,
        empirical_mean: mean.mean,
        std_error: mean.std_error(),
        empirical_second_moment: second.mean,
        second_moment_std_error: second.std_error(),
        stationary_second_moment: stationary_second_moment(stat)?,
    })
}

pub const DEFAULT_ADVANTAGE_BINS: usize = 64;
pub const DEFAULT_ADVANTAGE_SIGMAS: f64 = 6.0;

/// Binned estimate of the total-variation separation between two samples
/// of `F`, after projecting onto the direction `exp(i phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Advantage {
    pub value: f64,
    pub bins: usize,
    /// Histogram range; values outside it fall into the edge bins.
    pub lo: f64,
    pub hi: f64,
}

/// Projects both samples to `Re(F exp(-i phase))` and bins them on a common
/// grid of `bins` cells spanning the pooled mean plus or minus `sigmas`
/// pooled standard deviations; returns half the `l1` distance between the
/// two empirical histograms.
pub fn distinguisher_advantage_with(
    samples_shuffle: &[Complex64],
    samples_uniform: &[Complex64],
    phase: f64,
    bins: usize,
    sigmas: f64,
) -> Result<Advantage> {
    if samples_shuffle.is_empty() {
        return Err(Error::EmptyInput("shuffle samples"));
    }
    if samples_uniform.is_empty() {
        return Err(Error::EmptyInput("uniform samples"));
    }
    if bins == 0 || !(sigmas > 0.0) {
        return Err(Error::InvalidArgument("bins and sigmas must be positive".into()));
    }
    let rot = Complex64::from_polar(1.0, -phase);
    let a: Vec<f64> = samples_shuffle.iter().map(|x| (x * rot).re).collect();
    let b: Vec<f64> = samples_uniform.iter().map(|x| (x * rot).re).collect();
    let pooled: Welford = a.iter().chain(&b).copied().collect();
    let sd = pooled.sample_variance().sqrt();
    if sd == 0.0 {
        return Ok(Advantage {
            value: 0.0,
            bins,
            lo: pooled.mean,
            hi: pooled.mean,
        });
    }
    let (lo, hi) = (pooled.mean - sigmas * sd, pooled.mean + sigmas * sd);
    let width = (hi - lo) / bins as f64;
    let histogram = |xs: &[f64]| {
        let mut h = vec![0.0; bins];
        for &x in xs {
            let k = ((x - lo) / width).floor().clamp(0.0, (bins - 1) as f64) as usize;
            h[k] += 1.0;
        }
        let total = xs.len() as f64;
        h.iter_mut().for_each(|c| *c /= total);
        h
    };
    let (ha, hb) = (histogram(&a), histogram(&b));
    let value = 0.5 * ha.iter().zip(&hb).map(|(p, q)| (p - q).abs()).sum::<f64>();
    Ok(Advantage {
        value: value.clamp(0.0, 1.0),
        bins,
        lo,
        hi,
    })
}

/// [`distinguisher_advantage_with`] using 64 bins over six pooled standard
/// deviations.
pub fn distinguisher_advantage(
    samples_shuffle: &[Complex64],
    samples_uniform: &[Complex64],
    phase: f64,
) -> Result<Advantage> {
    distinguisher_advantage_with(
        samples_shuffle,
        samples_uniform,
        phase,
        DEFAULT_ADVANTAGE_BINS,
        DEFAULT_ADVANTAGE_SIGMAS,
    )
}

/// One row of the lower-bound table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub report: MomentReport,
    pub advantage: Advantage,
}

/// Moments, bounds and the distinguisher advantage at each time. The
/// uniform control sample is shared across times.
pub fn lower_bound_experiment(
    stat: &TestStatistic,
    times: &[u64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<LowerBoundRow>> {
    if replicas < MIN_MOMENT_REPLICAS {
        return Err(Error::InvalidArgument(format!(
            "replicas must be >= {MIN_MOMENT_REPLICAS}, got {replicas}"
        )));
    }
    let (times, samples) = sample_statistic(stat, times, replicas, seed)?;
    let uniform = sample_uniform(stat, replicas, seed)?;
    times
        .iter()
        .zip(&samples)
        .map(|(&t, s)| {
            let report = MomentReport::from_samples(stat, t, s)?;
            let advantage = distinguisher_advantage(s, &uniform, report.predicted_mean.arg())?;
            Ok(LowerBoundRow { report, advantage })
        })
        .collect()
}

pub const MOMENT_CSV_HEADER: [&str; 11] = [
    "t", "pred_re", "pred_im", "emp_re", "emp_im", "emp_m2", "bound_m2", "tv_lb", "replicas",
    "stderr", "stderr_m2",
];

pub const LOWERBOUND_CSV_HEADER: [&str; 10] = [
    "t", "pred_re", "pred_im", "emp_re", "emp_im", "emp_m2", "bound_m2", "tv_lb", "advantage",
    "stderr",
];

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

pub fn write_moment_csv<W: Write>(out: W, rows: &[MomentReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MOMENT_CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            fmt(r.predicted_mean.re),
            fmt(r.predicted_mean.im),
            fmt(r.empirical_mean.re),
            fmt(r.empirical_mean.im),
            fmt(r.empirical_second_moment),
            fmt(r.second_moment_bound),
            fmt(r.tv_lower_bound),
            r.replicas.to_string(),
            fmt(r.std_error),
            fmt(r.second_moment_std_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_lowerbound_csv<W: Write>(out: W, rows: &[LowerBoundRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LOWERBOUND_CSV_HEADER)?;
    for row in rows {
        let r = &row.report;
        w.write_record([
            r.t.to_string(),
            fmt(r.predicted_mean.re),
            fmt(r.predicted_mean.im),
            fmt(r.empirical_mean.re),
            fmt(r.empirical_mean.im),
            fmt(r.empirical_second_moment),
            fmt(r.second_moment_bound),
            fmt(r.tv_lower_bound),
            fmt(row.advantage.value),
            fmt(r.std_error),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_evolution_from, perm_unrank, ExactDistribution};
    use crate::rule::ShuffleRule;
    use crate::shuffle::{from_renewal_frame, to_renewal_frame};
    use approx::assert_abs_diff_eq;

    fn n3() -> TestStatistic {
        TestStatistic::slowest_exact(3).unwrap()
    }

    #[test]
    fn n3_eigenfunction() {
        let s = n3();
        let f = &s.eigenfunction().values;
        assert_abs_diff_eq!(f[0].norm(), 0.0);
        assert_abs_diff_eq!((f[1] - 1.0).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((f[2] + 1.0).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((s.lambda() + 1.0 / 3.0).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn evaluate_examples() {
        let s = n3();
        let p = Permutation::from_card_to_state(vec![0, 2, 1]).unwrap();
        assert_abs_diff_eq!((evaluate_f(&p, &s).unwrap() + 2.0 / 3.0).norm(), 0.0, epsilon = 1e-14);
        let id = evaluate_f(&Permutation::identity(3), &s).unwrap();
        assert_eq!(id, Complex64::new(s.eigenfunction().norm2_sq, 0.0));
        let avg: Complex64 = (0..6)
            .map(|k| evaluate_f(&perm_unrank(3, k).unwrap(), &s).unwrap())
            .sum::<Complex64>()
            / 6.0;
        assert_abs_diff_eq!(avg.norm(), 0.0, epsilon = 1e-15);
        let m2: f64 = (0..6)
            .map(|k| evaluate_f(&perm_unrank(3, k).unwrap(), &s).unwrap().norm_sqr())
            .sum::<f64>()
            / 6.0;
        assert_abs_diff_eq!(m2, 2.0 / 9.0, epsilon = 1e-15);
        assert_abs_diff_eq!(stationary_second_moment(&s).unwrap(), 2.0 / 9.0, epsilon = 1e-15);
        assert!(evaluate_f(&Permutation::identity(4), &s).is_err());
    }

    #[test]
    fn n3_exact_means_and_bounds() {
        let s = n3();
        assert_abs_diff_eq!((predicted_mean(&s, 1) + 2.0 / 9.0).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((predicted_mean(&s, 2) - 2.0 / 27.0).norm(), 0.0, epsilon = 1e-15);
        let rule = ShuffleRule::cyclic(3);
        let start = from_renewal_frame(&Permutation::identity(3), 0);
        exact_evolution_from(&start, &rule, 6, |t, mu: &ExactDistribution| {
            let mean = mu.expect(|p| evaluate_f(&to_renewal_frame(p, t), &s).unwrap());
            assert_abs_diff_eq!((mean - predicted_mean(&s, t)).norm(), 0.0, epsilon = 1e-14);
            Ok(())
        })
        .unwrap();
        assert_abs_diff_eq!(second_moment_bound(&s, 0), 4.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(tv_lower_bound(&s, 0), 1.0 / 18.0, epsilon = 1e-15);
        assert!(tv_lower_bound(&s, 1000) < 1e-12);
    }

    #[test]
    fn n2_stationary_second_moment() {
        // n = 2 has no nontrivial root; use any f to check the formula
        let ef = Eigenfunction::new(2, Complex64::new(0.3, 0.2)).unwrap();
        let s = TestStatistic::new(ef);
        let nf = s.eigenfunction().norm2_sq;
        assert_abs_diff_eq!(stationary_second_moment(&s).unwrap(), nf * nf, epsilon = 1e-15);
    }

    #[test]
    fn predicted_mean_recursion() {
        let s = TestStatistic::branch(1000, 1).unwrap();
        let lambda = s.lambda();
        for &t in &[0u64, 1, 17, 999, 123_456, 10_000_000, 10_000_001] {
            let a = predicted_mean(&s, t + 1);
            let b = lambda * predicted_mean(&s, t);
            assert!((a - b).norm() <= 1e-12 * b.norm(), "t = {t}");
        }
        assert_eq!(predicted_mean(&s, 0), Complex64::new(s.eigenfunction().norm2_sq, 0.0));
    }

    #[test]
    fn rescaling_invariance() {
        let s = TestStatistic::branch(64, 1).unwrap();
        let c = Complex64::new(-2.5, 0.75);
        let r = s.scaled(c).unwrap();
        for t in [0, 10, 64, 300] {
            assert_abs_diff_eq!(tv_lower_bound(&s, t), tv_lower_bound(&r, t), epsilon = 1e-13);
        }
        let a = moment_experiment_with(&s, &[0, 32], 200, 5).unwrap();
        let b = moment_experiment_with(&r, &[0, 32], 200, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let ra = x.empirical_mean / x.predicted_mean;
            let rb = y.empirical_mean / y.predicted_mean;
            assert_abs_diff_eq!((ra - rb).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn t0_is_exact() {
        let s = TestStatistic::branch(64, 1).unwrap();
        let rows = moment_experiment_with(&s, &[0], 100, 1).unwrap();
        assert_eq!(rows[0].empirical_mean, rows[0].predicted_mean);
        assert_eq!(rows[0].std_error, 0.0);
        assert!(moment_experiment_with(&s, &[0], 99, 1).is_err());
    }

    #[test]
    fn advantage_edge_cases() {
        let a = vec![Complex64::new(1.0, 0.0); 50];
        let b = vec![Complex64::new(-1.0, 0.0); 50];
        assert_eq!(distinguisher_advantage(&a, &b, 0.0).unwrap().value, 1.0);
        assert_eq!(distinguisher_advantage(&a, &a, 0.0).unwrap().value, 0.0);
        let mixed: Vec<Complex64> = (0..1000).map(|k| Complex64::new((k as f64).sin(), 0.0)).collect();
        assert!(distinguisher_advantage(&mixed, &mixed, 0.3).unwrap().value < 1e-12);
        assert!(matches!(
            distinguisher_advantage(&[], &a, 0.0),
            Err(Error::EmptyInput(_))
        ));
    }
}
