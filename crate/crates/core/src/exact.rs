//! Exact evolution of the shuffle distribution over all `n!` permutations
//! (n <= 8), total variation to uniform, and exact mixing times.
//!
//! Distributions are dense vectors indexed by the lexicographic rank of the
//! card -> state array. That order is also the order of every distribution
//! dump written to disk.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng::{stream, Domain};
use crate::rule::{RuleKind, ShuffleRule};

pub const MAX_EXACT_N: usize = 8;
const MAX_RANK_N: usize = 20;

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Lexicographic rank of the card -> state array.
pub fn perm_rank(perm: &Permutation) -> u64 {
    let a = perm.card_to_state();
    let n = a.len();
    assert!(n <= MAX_RANK_N, "rank overflows u64 beyond n = {MAX_RANK_N}");
    let mut rank = 0u64;
    for i in 0..n {
        let smaller_after = a[i + 1..].iter().filter(|&&x| x < a[i]).count() as u64;
        rank = rank * (n - i) as u64 + smaller_after;
    }
    rank
}

pub fn perm_unrank(n: usize, index: u64) -> Result<Permutation> {
    if n == 0 || n > MAX_RANK_N {
        return Err(Error::InvalidArgument(format!(
            "unrank supports 1 <= n <= {MAX_RANK_N}, got {n}"
        )));
    }
    if index >= factorial(n) {
        return Err(Error::InvalidArgument(format!(
            "rank {index} out of range for n = {n} (n! = {})",
            factorial(n)
        )));
    }
    let mut digits = vec![0usize; n];
    let mut rest = index;
    for i in (0..n).rev() {
        let base = (n - i) as u64;
        digits[i] = (rest % base) as usize;
        rest /= base;
    }
    let mut pool: Vec<usize> = (0..n).collect();
    let states = digits.into_iter().map(|d| pool.remove(d)).collect();
    Permutation::from_card_to_state(states)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl ExactDistribution {
    fn check_n(n: usize) -> Result<()> {
        if n == 0 || n > MAX_EXACT_N {
            return Err(Error::InvalidArgument(format!(
                "exact distributions support 1 <= n <= {MAX_EXACT_N}, got {n}"
            )));
        }
        Ok(())
    }

    pub fn point_mass(perm: &Permutation) -> Result<Self> {
        let n = perm.n();
        Self::check_n(n)?;
        let mut probs = vec![0.0; factorial(n) as usize];
        probs[perm_rank(perm) as usize] = 1.0;
        Ok(ExactDistribution { n, probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::check_n(n)?;
        let size = factorial(n) as usize;
        Ok(ExactDistribution {
            n,
            probs: vec![1.0 / size as f64; size],
        })
    }

    pub fn from_probs(n: usize, probs: Vec<f64>) -> Result<Self> {
        Self::check_n(n)?;
        if probs.len() != factorial(n) as usize {
            return Err(Error::SizeMismatch {
                expected: factorial(n) as usize,
                got: probs.len(),
            });
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidArgument("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("mass {total} != 1")));
        }
        Ok(ExactDistribution { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, perm: &Permutation) -> f64 {
        self.probs[perm_rank(perm) as usize]
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `(1/2) sum |mu(sigma) - 1/n!|`.
    pub fn tv_to_uniform(&self) -> f64 {
        let u = 1.0 / self.probs.len() as f64;
        0.5 * self.probs.iter().map(|p| (p - u).abs()).sum::<f64>()
    }

    /// Law of the location of `card`.
    pub fn card_marginal(&self, card: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (rank, &p) in self.probs.iter().enumerate() {
            if p != 0.0 {
                let perm = perm_unrank(self.n, rank as u64).expect("rank in range");
                out[perm.state_of(card)] += p;
            }
        }
        out
    }

    /// Expectation of `g` under this distribution.
    pub fn expect<T, F>(&self, mut g: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(&Permutation) -> T,
    {
        let mut acc = T::default();
        for (rank, &p) in self.probs.iter().enumerate() {
            if p != 0.0 {
                let perm = perm_unrank(self.n, rank as u64).expect("rank in range");
                acc = acc + g(&perm) * p;
            }
        }
        acc
    }

    /// Write `(rank, prob)` rows in rank order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "prob"])?;
        for (rank, p) in self.probs.iter().enumerate() {
            w.write_record([rank.to_string(), format!("{p:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Precomputed transposition tables for one deck size: for each pair of
/// locations `l < r`, the rank of every permutation after exchanging the
/// cards at `l` and `r`.
#[derive(Debug, Clone)]
pub struct ExactKernel {
    n: usize,
    swaps: Vec<Vec<u32>>,
}

impl ExactKernel {
    pub fn new(n: usize) -> Result<Self> {
        ExactDistribution::check_n(n)?;
        let size = factorial(n);
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|l| (l + 1..n).map(move |r| (l, r)))
            .collect();
        let perms: Vec<Permutation> = (0..size)
            .into_par_iter()
            .map(|k| perm_unrank(n, k).expect("rank in range"))
            .collect();
        let swaps = pairs
            .par_iter()
            .map(|&(l, r)| {
                perms
                    .iter()
                    .map(|p| {
                        let mut q = p.clone();
                        q.swap_states_unchecked(l, r);
                        perm_rank(&q) as u32
                    })
                    .collect()
            })
            .collect();
        Ok(ExactKernel { n, swaps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn pair_index(&self, l: usize, r: usize) -> usize {
        let (a, b) = if l < r { (l, r) } else { (r, l) };
        // pairs enumerated row by row: (0,1),(0,2),...,(1,2),...
        a * (2 * self.n - a - 1) / 2 + (b - a - 1)
    }

    /// One step with location `l`: the mixture over `r` (weight `1/n` each)
    /// of exchanging the cards at `l` and `r`. Each transposition is an
    /// involution, so the pushforward is evaluated by pulling from
    /// `swap(pi)` for every destination `pi`.
    pub fn step(&self, mu: &ExactDistribution, l: usize) -> Result<ExactDistribution> {
        if mu.n != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                got: mu.n,
            });
        }
        if l >= self.n {
            return Err(Error::LocationOutOfRange {
                location: l,
                n: self.n,
            });
        }
        let tables: Vec<&[u32]> = (0..self.n)
            .filter(|&r| r != l)
            .map(|r| self.swaps[self.pair_index(l, r)].as_slice())
            .collect();
        let w = 1.0 / self.n as f64;
        let old = &mu.probs;
        let probs = (0..old.len())
            .into_par_iter()
            .with_min_len(1024)
            .map(|dest| {
                let mut acc = old[dest];
                for t in &tables {
                    acc += old[t[dest] as usize];
                }
                acc * w
            })
            .collect();
        Ok(ExactDistribution { n: self.n, probs })
    }

    /// Annealed step for i.i.d. uniform locations: the average of
    /// [`ExactKernel::step`] over `l`.
    pub fn step_uniform_location(&self, mu: &ExactDistribution) -> Result<ExactDistribution> {
        let mut acc = vec![0.0; mu.probs.len()];
        for l in 0..self.n {
            let next = self.step(mu, l)?;
            for (a, p) in acc.iter_mut().zip(next.probs) {
                *a += p;
            }
        }
        let w = 1.0 / self.n as f64;
        acc.iter_mut().for_each(|a| *a *= w);
        Ok(ExactDistribution {
            n: self.n,
            probs: acc,
        })
    }
}

/// One exact shuffle step; builds the transposition tables on each call.
/// Use [`ExactKernel`] directly for repeated steps.
pub fn step_kernel(mu: &ExactDistribution, l: usize) -> Result<ExactDistribution> {
    ExactKernel::new(mu.n())?.step(mu, l)
}

/// The conventional mixing threshold `1/(2e)`.
pub fn default_threshold() -> f64 {
    1.0 / (2.0 * std::f64::consts::E)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingResult {
    /// First `t` with TV at most `threshold`; `None` if not reached by the horizon.
    pub tau_mix: Option<u64>,
    pub threshold: f64,
    /// `(t, tv)` for `t = 0..=horizon` (or up to the crossing when stopping early).
    pub tv_curve: Vec<(u64, f64)>,
}

impl MixingResult {
    pub fn write_curve_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "tv"])?;
        for (t, tv) in &self.tv_curve {
            w.write_record([t.to_string(), format!("{tv:.17e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evolves the exact law from the identity for `horizon` steps and records
/// the whole TV curve. The chain is time-inhomogeneous in general, so the
/// curve is not assumed monotone; `tau_mix` is the first crossing.
///
/// For this shuffle the TV curve does not depend on the starting
/// permutation: relabeling cards commutes with every step and fixes the
/// uniform law.
pub fn exact_mixing_time(
    n: usize,
    rule: &ShuffleRule,
    threshold: f64,
    horizon: u64,
) -> Result<MixingResult> {
    let mut curve = Vec::new();
    let mut tau = None;
    exact_evolution(n, rule, horizon, |t, mu| {
        let tv = mu.tv_to_uniform();
        curve.push((t, tv));
        if tau.is_none() && tv <= threshold {
            tau = Some(t);
        }
        Ok(())
    })?;
    Ok(MixingResult {
        tau_mix: tau,
        threshold,
        tv_curve: curve,
    })
}

/// Calls `visit(t, mu_t)` for `t = 0..=horizon`, starting from the identity.
pub fn exact_evolution<F>(n: usize, rule: &ShuffleRule, horizon: u64, visit: F) -> Result<()>
where
    F: FnMut(u64, &ExactDistribution) -> Result<()>,
{
    exact_evolution_from(&Permutation::identity(n), rule, horizon, visit)
}

/// [`exact_evolution`] from an arbitrary starting permutation (raw frame).
pub fn exact_evolution_from<F>(
    start: &Permutation,
    rule: &ShuffleRule,
    horizon: u64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(u64, &ExactDistribution) -> Result<()>,
{
    let n = start.n();
    if rule.n() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: rule.n(),
        });
    }
    let annealed = match rule.kind() {
        RuleKind::Cyclic | RuleKind::Star | RuleKind::ExplicitSequence => false,
        RuleKind::UniformIid => true,
        k => return Err(Error::RandomRule(k.name())),
    };
    let kernel = ExactKernel::new(n)?;
    let mut rule = rule.clone();
    // deterministic kinds never draw from this stream
    let mut unused = stream(0, Domain::Rule, 0);
    let mut mu = ExactDistribution::point_mass(start)?;
    visit(0, &mu)?;
    for t in 1..=horizon {
        mu = if annealed {
            kernel.step_uniform_location(&mu)?
        } else {
            let l = rule.location(t, &mut unused)?;
            kernel.step(&mu, l)?
        };
        visit(t, &mu)?;
    }
    Ok(())
}
