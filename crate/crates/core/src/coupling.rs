//! Coupling of the cyclic-to-random shuffle with two independent
//! single-card copies.
//!
//! The true shuffle `sigma` runs in the renewal frame. Card `i` is shadowed
//! by a copy `eta` and card `j` by an independent copy `eta~`, each a chain
//! driven by the renewal matrix. While glued, one step draws a pair
//! `(r, v)` uniformly from `[n] x [n]`: `r` is the shuffle's partner state
//! and `v` decides the copies' moves through a fixed table, so that `sigma`
//! and each copy have the right marginal laws, the copies are independent,
//! and they agree with `sigma` as often as possible. Once unglued, all three
//! are driven by independent draws and the pair is never re-glued.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng::{stream, Domain};
use crate::shuffle::RenewalShuffle;
use crate::statistic::TestStatistic;
use crate::stats::ComplexWelford;

/// One step of a single card's state: the card at state 0 goes to `r + 1`,
/// the card at `r` goes to 1, everything else moves up by one.
#[inline]
pub fn card_step(n: usize, x: usize, r: usize) -> usize {
    if x == 0 {
        (r + 1) % n
    } else if r == x {
        1 % n
    } else {
        (x + 1) % n
    }
}

/// Which of the three glued tables applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CouplingCase {
    /// Card `i` at state 0.
    FirstAtZero,
    /// Card `j` at state 0.
    SecondAtZero,
    /// Neither at state 0.
    NeitherAtZero,
}

impl CouplingCase {
    pub fn of(a: usize, b: usize) -> Self {
        if a == 0 {
            CouplingCase::FirstAtZero
        } else if b == 0 {
            CouplingCase::SecondAtZero
        } else {
            CouplingCase::NeitherAtZero
        }
    }
}

/// Outcome of a glued step for the draw `(r, v)` when `sigma(i) = eta(i) = a`
/// and `sigma(j) = eta~(j) = b`: the new states `(sigma(i), sigma(j))` and
/// `(eta(i), eta~(j))`. Every draw has probability `1/n^2`; sampling and
/// exact enumeration both go through this table.
pub fn glued_outcome(
    n: usize,
    a: usize,
    b: usize,
    r: usize,
    v: usize,
) -> ((usize, usize), (usize, usize)) {
    let up = |x: usize| (x + 1) % n;
    let one = 1 % n;
    let sigma = (card_step(n, a, r), card_step(n, b, r));
    let last = v == n - 1;
    let eta = match CouplingCase::of(a, b) {
        CouplingCase::NeitherAtZero => {
            if r == a {
                if last {
                    (one, one)
                } else {
                    (one, up(b))
                }
            } else if r == b {
                if last {
                    (up(a), up(b))
                } else {
                    (up(a), one)
                }
            } else {
                (up(a), up(b))
            }
        }
        CouplingCase::FirstAtZero => {
            if r == b {
                if v == 0 {
                    (up(b), one)
                } else {
                    (up(b), up(b))
                }
            } else if last {
                (up(r), one)
            } else {
                (up(r), up(b))
            }
        }
        CouplingCase::SecondAtZero => {
            if r == a {
                if v == 0 {
                    (one, up(a))
                } else {
                    (up(a), up(a))
                }
            } else if last {
                (one, up(r))
            } else {
                (up(a), up(r))
            }
        }
    };
    (sigma, eta)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoupledState {
    pub n: usize,
    pub i: usize,
    pub j: usize,
    pub sigma: RenewalShuffle,
    pub eta_i: usize,
    pub etatilde_j: usize,
    /// `(sigma(i), sigma(j)) == (eta(i), eta~(j))` at every time so far.
    pub glued: bool,
}

impl CoupledState {
    /// Glued start at the identity.
    pub fn new(n: usize, i: usize, j: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("deck size must be >= 2, got {n}")));
        }
        if i == j {
            return Err(Error::InvalidArgument(format!("cards must differ, got i = j = {i}")));
        }
        if i >= n || j >= n {
            return Err(Error::InvalidArgument(format!("cards {i}, {j} out of range for n = {n}")));
        }
        Ok(CoupledState {
            n,
            i,
            j,
            sigma: RenewalShuffle::identity(n),
            eta_i: i,
            etatilde_j: j,
            glued: true,
        })
    }

    /// Glued state with the shuffle at `sigma` (renewal frame, time 0).
    pub fn glued_at(sigma: &Permutation, i: usize, j: usize) -> Result<Self> {
        let n = sigma.n();
        if i >= n || j >= n {
            return Err(Error::InvalidArgument(format!("cards {i}, {j} out of range for n = {n}")));
        }
        Self::with_copies(sigma, i, j, sigma.state_of(i), sigma.state_of(j))
    }

    /// State with the shuffle at `sigma` and the copies at the given
    /// states; glued exactly when they agree with `sigma`.
    pub fn with_copies(
        sigma: &Permutation,
        i: usize,
        j: usize,
        eta_i: usize,
        etatilde_j: usize,
    ) -> Result<Self> {
        let n = sigma.n();
        let mut state = Self::new(n, i, j)?;
        if eta_i >= n || etatilde_j >= n {
            return Err(Error::InconsistentState("copy state out of range".into()));
        }
        state.sigma = RenewalShuffle::new(sigma);
        state.eta_i = eta_i;
        state.etatilde_j = etatilde_j;
        state.glued = state.sigma_pair() == (eta_i, etatilde_j);
        Ok(state)
    }

    pub fn time(&self) -> u64 {
        self.sigma.time()
    }

    pub fn sigma_pair(&self) -> (usize, usize) {
        (self.sigma.state_of(self.i), self.sigma.state_of(self.j))
    }

    pub fn check(&self) -> Result<()> {
        if self.glued && self.sigma_pair() != (self.eta_i, self.etatilde_j) {
            return Err(Error::InconsistentState(format!(
                "glued flag set but sigma = {:?}, copies = {:?}",
                self.sigma_pair(),
                (self.eta_i, self.etatilde_j)
            )));
        }
        if self.eta_i >= self.n || self.etatilde_j >= self.n {
            return Err(Error::InconsistentState("copy state out of range".into()));
        }
        Ok(())
    }

    /// Advance with explicit draws. Glued steps use `(r, v)`; unglued steps
    /// use `r` for `sigma` and `(r1, r2)` for the two copies.
    pub fn step_with(&mut self, r: usize, v: usize, r1: usize, r2: usize) {
        let n = self.n;
        if self.glued {
            let (a, b) = (self.eta_i, self.etatilde_j);
            let (sig, eta) = glued_outcome(n, a, b, r, v);
            self.sigma.step_with(r);
            debug_assert_eq!(self.sigma_pair(), sig);
            self.eta_i = eta.0;
            self.etatilde_j = eta.1;
            self.glued = sig == eta;
        } else {
            self.sigma.step_with(r);
            self.eta_i = card_step(n, self.eta_i, r1);
            self.etatilde_j = card_step(n, self.etatilde_j, r2);
        }
    }
}

/// One coupled step. Glued steps draw `(r, v)`; unglued steps draw three
/// independent partners.
pub fn coupled_step<R: Rng + ?Sized>(state: &mut CoupledState, rng: &mut R) -> Result<()> {
    state.check()?;
    let n = state.n;
    if state.glued {
        let r = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        state.step_with(r, v, 0, 0);
    } else {
        let r = rng.gen_range(0..n);
        let r1 = rng.gen_range(0..n);
        let r2 = rng.gen_range(0..n);
        state.step_with(r, 0, r1, r2);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub i: usize,
    pub j: usize,
    pub t: u64,
    /// Number of `s < t` with card `i` or card `j` at state 0.
    pub n_ij: u64,
    /// First time at which the pair is no longer glued.
    pub unglue_time: Option<u64>,
    /// Final `(sigma_t(i), sigma_t(j))`.
    pub sigma_final: (usize, usize),
    /// Final `(eta_t(i), eta~_t(j))`.
    pub copies_final: (usize, usize),
    /// Number of `s < t` each card spent at state 0.
    pub zero_visits: Vec<u64>,
}

impl PairStats {
    /// `f(sigma_t(i)) conj f(sigma_t(j))`.
    pub fn product_sample(&self, stat: &TestStatistic) -> Complex64 {
        stat.f(self.sigma_final.0) * stat.f(self.sigma_final.1).conj()
    }

    /// `f(eta_t(i)) conj f(eta~_t(j))`.
    pub fn copies_product(&self, stat: &TestStatistic) -> Complex64 {
        stat.f(self.copies_final.0) * stat.f(self.copies_final.1).conj()
    }

    /// `N_ij` summed over all ordered pairs `i != j` from the per-card visit
    /// counts; equals `2 (n - 1) t` because exactly one card sits at state 0.
    pub fn all_pairs_n_ij(&self) -> u64 {
        let n = self.zero_visits.len() as u64;
        2 * n.saturating_sub(1) * self.zero_visits.iter().sum::<u64>()
    }
}

/// Replica `replica` of the coupling for `t` steps from the identity.
pub fn run_coupling_replica(
    n: usize,
    i: usize,
    j: usize,
    t: u64,
    seed: u64,
    replica: u64,
) -> Result<PairStats> {
    let mut state = CoupledState::new(n, i, j)?;
    let mut rng = stream(seed, Domain::Coupling, replica);
    let mut zero_visits = vec![0u64; n];
    let mut n_ij = 0;
    let mut unglue_time = None;
    for s in 0..t {
        let at_zero = state.sigma.card_at(0);
        zero_visits[at_zero] += 1;
        if at_zero == i || at_zero == j {
            n_ij += 1;
        }
        coupled_step(&mut state, &mut rng)?;
        if unglue_time.is_none() && !state.glued {
            unglue_time = Some(s + 1);
        }
    }
    Ok(PairStats {
        i,
        j,
        t,
        n_ij,
        unglue_time,
        sigma_final: state.sigma_pair(),
        copies_final: (state.eta_i, state.etatilde_j),
        zero_visits,
    })
}

/// [`run_coupling_replica`] for replica 0.
pub fn run_coupling(n: usize, i: usize, j: usize, t: u64, seed: u64) -> Result<PairStats> {
    run_coupling_replica(n, i, j, t, seed, 0)
}

/// Many independent replicas, in replica order.
pub fn run_coupling_batch(
    n: usize,
    i: usize,
    j: usize,
    t: u64,
    replicas: usize,
    seed: u64,
) -> Result<Vec<PairStats>> {
    CoupledState::new(n, i, j)?;
    (0..replicas as u64)
        .into_par_iter()
        .map(|k| run_coupling_replica(n, i, j, t, seed, k))
        .collect()
}

/// Empirical unglue probability against `(2/n) mean(N_ij) + 2t/n^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnglueReport {
    pub replicas: u64,
    pub unglue_prob: f64,
    pub std_error: f64,
    pub mean_n_ij: f64,
    pub bound: f64,
}

impl UnglueReport {
    pub fn from_runs(n: usize, t: u64, runs: &[PairStats]) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::EmptyInput("coupling runs"));
        }
        let k = runs.len() as f64;
        let ungl = runs.iter().filter(|r| r.unglue_time.is_some()).count() as f64;
        let p = ungl / k;
        let mean_n_ij = runs.iter().map(|r| r.n_ij as f64).sum::<f64>() / k;
        let nf = n as f64;
        let se = if runs.len() > 1 {
            (p * (1.0 - p) * k / (k - 1.0) / k).sqrt()
        } else {
            0.0
        };
        Ok(UnglueReport {
            replicas: runs.len() as u64,
            unglue_prob: p,
            std_error: se,
            mean_n_ij,
            bound: 2.0 / nf * mean_n_ij + 2.0 * t as f64 / (nf * nf),
        })
    }

    pub fn holds(&self, k: f64) -> bool {
        self.unglue_prob <= self.bound + k * self.std_error
    }
}

pub const MIN_CORRELATION_REPLICAS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub n: usize,
    pub i: usize,
    pub j: usize,
    pub t: u64,
    pub replicas: u64,
    /// Sample mean of `f(sigma_t(i)) conj f(sigma_t(j))`.
    pub correlation: Complex64,
    pub std_error: f64,
    pub mean_n_ij: f64,
    /// `(|lambda|^(2t) + (4t + 4n mean(N_ij))/n^2) ||f||_inf^2`.
    pub bound: f64,
    /// Sample mean of `f(eta_t(i)) conj f(eta~_t(j))`.
    pub copies_correlation: Complex64,
    pub copies_std_error: f64,
    /// `lambda^t f(i) conj(lambda^t f(j))`.
    pub copies_predicted: Complex64,
}

impl CorrelationReport {
    pub fn bound_holds(&self, k: f64) -> bool {
        self.correlation.norm() <= self.bound + k * self.std_error
    }

    pub fn copies_match(&self, k: f64) -> bool {
        (self.copies_correlation - self.copies_predicted).norm() <= k * self.copies_std_error
    }
}

pub fn pair_correlation_check(
    n: usize,
    i: usize,
    j: usize,
    t: u64,
    replicas: usize,
    seed: u64,
    stat: &TestStatistic,
) -> Result<CorrelationReport> {
    if replicas < MIN_CORRELATION_REPLICAS {
        return Err(Error::InvalidArgument(format!(
            "replicas must be >= {MIN_CORRELATION_REPLICAS}, got {replicas}"
        )));
    }
    if stat.n() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: stat.n(),
        });
    }
    let runs = run_coupling_batch(n, i, j, t, replicas, seed)?;
    Ok(correlation_from_runs(n, i, j, t, &runs, stat))
}

pub fn correlation_from_runs(
    n: usize,
    i: usize,
    j: usize,
    t: u64,
    runs: &[PairStats],
    stat: &TestStatistic,
) -> CorrelationReport {
    let sigma: ComplexWelford = runs.iter().map(|r| r.product_sample(stat)).collect();
    let copies: ComplexWelford = runs.iter().map(|r| r.copies_product(stat)).collect();
    let mean_n_ij = runs.iter().map(|r| r.n_ij as f64).sum::<f64>() / runs.len().max(1) as f64;
    let nf = n as f64;
    let lt = stat.predicted_mean(t) / stat.eigenfunction().norm2_sq;
    let pow2 = lt.norm_sqr();
    let finf = stat.eigenfunction().norm_inf;
    CorrelationReport {
        n,
        i,
        j,
        t,
        replicas: runs.len() as u64,
        correlation: sigma.mean,
        std_error: sigma.std_error(),
        mean_n_ij,
        bound: (pow2 + (4.0 * t as f64 + 4.0 * nf * mean_n_ij) / (nf * nf)) * finf * finf,
        copies_correlation: copies.mean,
        copies_std_error: copies.std_error(),
        copies_predicted: lt * stat.f(i) * (lt * stat.f(j)).conj(),
    }
}

pub const COUPLING_CSV_HEADER: [&str; 5] = ["replica", "unglue_time", "N_ij", "product_re", "product_im"];

/// `(replica, unglue_time, N_ij, product_re, product_im)`; an empty
/// `unglue_time` means the pair stayed glued.
pub fn write_coupling_csv<W: Write>(out: W, runs: &[PairStats], stat: &TestStatistic) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COUPLING_CSV_HEADER)?;
    for (k, r) in runs.iter().enumerate() {
        let p = r.product_sample(stat);
        w.write_record([
            k.to_string(),
            r.unglue_time.map(|u| u.to_string()).unwrap_or_default(),
            r.n_ij.to_string(),
            format!("{:.17e}", p.re),
            format!("{:.17e}", p.im),
        ])?;
    }
    w.flush()?;
    Ok(())
}
