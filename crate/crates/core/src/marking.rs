//! The card-marking strong uniform time for an arbitrary location rule.
//!
//! At `t = 1` the card at `L_1` is marked. At every step the card at `L_t`
//! becomes marked, before the transposition, if it is unmarked and either
//! the card at `R_t` is marked or `R_t = L_t`. Every step, including the
//! first, then exchanges the cards at `L_t` and `R_t`. `T` is the first time
//! all cards are marked; the deck at `T` is exactly uniform.
//!
//! The run is cut into epochs of `2n` steps starting right after the first
//! mark: epoch `k` covers steps `2 + (k-1) 2n ..= 1 + k 2n`.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::exact::{factorial, perm_rank};
use crate::perm::Permutation;
use crate::rng::{stream, Domain};
use crate::rule::ShuffleRule;
use crate::stats::Welford;

/// `theta = e^-2 (1 - e^-1) / 2` and `C_0 = 32 theta^-3 + theta^-1`.
pub fn theta_constants() -> (f64, f64) {
    let e1 = (-1.0f64).exp();
    let theta = e1 * e1 * (1.0 - e1) / 2.0;
    (theta, 32.0 / theta.powi(3) + 1.0 / theta)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkingState {
    /// Raw-frame deck.
    pub perm: Permutation,
    pub marked: Vec<bool>,
    pub marked_count: usize,
    pub t: u64,
}

/// A new mark made at step `t`. `partner` is the marked card found at
/// `R_t`, or `None` when `R_t = L_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkEvent {
    pub t: u64,
    pub card: usize,
    pub partner: Option<usize>,
}

impl MarkingState {
    /// Deck `start` at time 0 with the card at `l1` marked.
    pub fn init(start: Permutation, l1: usize) -> Result<Self> {
        let n = start.n();
        if l1 >= n {
            return Err(Error::LocationOutOfRange { location: l1, n });
        }
        let mut marked = vec![false; n];
        marked[start.card_at(l1)] = true;
        Ok(MarkingState {
            perm: start,
            marked,
            marked_count: 1,
            t: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.perm.n()
    }

    pub fn all_marked(&self) -> bool {
        self.marked_count == self.n()
    }
}

/// Step `t + 1`: evaluate the marking rule on the current deck, then
/// exchange the cards at `l` and `r`.
pub fn marking_step(state: &mut MarkingState, l: usize, r: usize) -> Result<Option<MarkEvent>> {
    let n = state.n();
    for loc in [l, r] {
        if loc >= n {
            return Err(Error::LocationOutOfRange { location: loc, n });
        }
    }
    state.t += 1;
    let card = state.perm.card_at(l);
    let mut event = None;
    if !state.marked[card] {
        let partner = state.perm.card_at(r);
        if r == l || state.marked[partner] {
            state.marked[card] = true;
            state.marked_count += 1;
            event = Some(MarkEvent {
                t: state.t,
                card,
                partner: (r != l).then_some(partner),
            });
        }
    }
    state.perm.swap_states_unchecked(l, r);
    Ok(event)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UniformTimeOutcome {
    Reached { t: u64 },
    NotYetUniform { cap: u64, marked: usize },
}

impl UniformTimeOutcome {
    pub fn time(&self) -> Option<u64> {
        match *self {
            UniformTimeOutcome::Reached { t } => Some(t),
            UniformTimeOutcome::NotYetUniform { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkingTrace {
    pub n: usize,
    /// Number of steps executed.
    pub steps: u64,
    /// The card marked at initialization.
    pub first_card: usize,
    pub events: Vec<MarkEvent>,
    /// For each card, the number of `s < steps` at which it sat at location 0.
    pub zero_visits: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkingRun {
    pub outcome: UniformTimeOutcome,
    pub final_perm: Permutation,
    pub trace: MarkingTrace,
}

/// Runs the marking process from the identity until every card is marked
/// or `cap` steps have run. Partners come from the marking stream
/// `replica` of `seed`; random rules draw from a separate stream.
pub fn run_until_uniform_time(
    n: usize,
    rule: &ShuffleRule,
    seed: u64,
    replica: u64,
    cap: u64,
) -> Result<MarkingRun> {
    if rule.n() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: rule.n(),
        });
    }
    if cap < n as u64 {
        return Err(Error::InvalidArgument(format!("cap must be >= n = {n}, got {cap}")));
    }
    let mut rule = rule.clone();
    let mut rule_rng = stream(seed, Domain::MarkingRule, replica);
    let mut rng = stream(seed, Domain::Marking, replica);
    let l1 = rule.location(1, &mut rule_rng)?;
    let mut state = MarkingState::init(Permutation::identity(n), l1)?;
    let first_card = state.perm.card_at(l1);
    let mut events = Vec::with_capacity(n);
    let mut zero_visits = vec![0u64; n];
    let mut outcome = None;
    while state.t < cap {
        let t = state.t + 1;
        let l = if t == 1 { l1 } else { rule.location(t, &mut rule_rng)? };
        let r = rng.gen_range(0..n);
        zero_visits[state.perm.card_at(0)] += 1;
        if let Some(e) = marking_step(&mut state, l, r)? {
            events.push(e);
        }
        if state.all_marked() {
            outcome = Some(UniformTimeOutcome::Reached { t: state.t });
            break;
        }
    }
    let outcome = outcome.unwrap_or(UniformTimeOutcome::NotYetUniform {
        cap,
        marked: state.marked_count,
    });
    Ok(MarkingRun {
        outcome,
        trace: MarkingTrace {
            n,
            steps: state.t,
            first_card,
            events,
            zero_visits,
        },
        final_perm: state.perm,
    })
}

/// Independent runs in replica order.
pub fn run_uniform_time_batch(
    n: usize,
    rule: &ShuffleRule,
    runs: usize,
    seed: u64,
    cap: u64,
) -> Result<Vec<MarkingRun>> {
    (0..runs as u64)
        .into_par_iter()
        .map(|k| run_until_uniform_time(n, rule, seed, k, cap))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub k: u64,
    /// Fraction unmarked at the start of the epoch.
    pub u_k: f64,
    pub m_k: f64,
    /// Fraction marked at the start of the next epoch.
    pub m_next: f64,
    /// New marks in the epoch made through a partner marked before it began.
    pub d_k: u64,
    pub growth: bool,
    pub good: bool,
}

/// Per-epoch statistics for every epoch that starts before the run ended.
/// The last epoch may be cut short by `T` (or the cap).
pub fn epoch_stats(trace: &MarkingTrace) -> Result<Vec<EpochStats>> {
    let n = trace.n;
    if n == 0 {
        return Err(Error::MalformedTrace("empty deck".into()));
    }
    let mut mark_time = vec![None; n];
    mark_time[trace.first_card] = Some(0u64);
    let mut prev = 0;
    for e in &trace.events {
        if e.card >= n || e.t < 2 || e.t < prev || e.t > trace.steps {
            return Err(Error::MalformedTrace(format!("bad event {e:?}")));
        }
        if mark_time[e.card].replace(e.t).is_some() {
            return Err(Error::MalformedTrace(format!("card {} marked twice", e.card)));
        }
        prev = e.t;
    }
    let (theta, _) = theta_constants();
    let nf = n as f64;
    let len = 2 * n as u64;
    let marked_before = |s: u64| mark_time.iter().filter(|m| matches!(m, Some(x) if *x < s)).count();
    let mut out = Vec::new();
    let mut k = 1u64;
    loop {
        let start = 2 + (k - 1) * len;
        if start > trace.steps {
            break;
        }
        let end = start + len - 1;
        let m_k = marked_before(start) as f64 / nf;
        let m_next = marked_before(end + 1) as f64 / nf;
        let d_k = trace
            .events
            .iter()
            .filter(|e| e.t >= start && e.t <= end)
            .filter(|e| matches!(e.partner, Some(p) if mark_time[p].is_some_and(|x| x < start)))
            .count() as u64;
        let growth = m_next >= (1.0 + theta / 2.0) * m_k;
        out.push(EpochStats {
            k,
            u_k: 1.0 - m_k,
            m_k,
            m_next,
            d_k,
            growth,
            good: growth || m_k >= 0.5,
        });
        k += 1;
    }
    Ok(out)
}

/// Chi-squared goodness of fit of `counts` against the uniform law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquaredTest {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

pub fn chi_squared_uniform(counts: &[u64]) -> Result<ChiSquaredTest> {
    if counts.len() < 2 {
        return Err(Error::InvalidArgument("need at least two cells".into()));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput("counts"));
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum::<f64>();
    let dof = counts.len() as u64 - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(ChiSquaredTest {
        statistic,
        dof,
        p_value: dist.sf(statistic),
    })
}

/// Counts of the deck at `T` over all `n!` permutations (lexicographic
/// rank), over runs that reached `T`.
pub fn final_deck_counts(n: usize, runs: &[MarkingRun]) -> Vec<u64> {
    let mut counts = vec![0u64; factorial(n) as usize];
    for r in runs.iter().filter(|r| r.outcome.time().is_some()) {
        counts[perm_rank(&r.final_perm) as usize] += 1;
    }
    counts
}

/// Aggregated epoch checks over many runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochCheck {
    /// Epochs violating `m_{k+1} >= m_k + D_k/n`.
    pub increment_violations: u64,
    /// Bins `(k, m bin)` with enough samples, and the worst standardized
    /// excess of `u_{k+1} - u_k (1 - 2 theta m_k)` among them.
    pub drift_bins: Vec<DriftBin>,
    /// Among epochs with `m_k < 1/2`: frequency of `D_k >= theta n m_k / 2`.
    pub big_d_frequency: f64,
    pub big_d_std_error: f64,
    pub big_d_epochs: u64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftBin {
    pub k: u64,
    pub m_bin: u64,
    pub samples: u64,
    /// Mean of `u_{k+1} - u_k (1 - 2 theta m_k)`.
    pub mean_excess: f64,
    pub std_error: f64,
}

impl EpochCheck {
    pub fn drift_holds(&self, k: f64) -> bool {
        self.drift_bins.iter().all(|b| b.mean_excess <= k * b.std_error)
    }

    pub fn big_d_holds(&self, k: f64) -> bool {
        self.big_d_frequency >= self.theta * self.theta / 8.0 - k * self.big_d_std_error
    }
}

pub const DRIFT_BINS_PER_UNIT: f64 = 32.0;
pub const DRIFT_MIN_SAMPLES: u64 = 30;

/// Bins epochs on `(k, floor(32 m_k))` and keeps bins with at least 30
/// samples.
pub fn epoch_check(n: usize, stats: &[Vec<EpochStats>]) -> EpochCheck {
    use std::collections::BTreeMap;
    let (theta, _) = theta_constants();
    let nf = n as f64;
    let mut violations = 0;
    let mut bins: BTreeMap<(u64, u64), Welford> = BTreeMap::new();
    let mut big = Welford::new();
    for run in stats {
        for e in run {
            if e.m_next < e.m_k + e.d_k as f64 / nf - 1e-12 {
                violations += 1;
            }
            let m_bin = (e.m_k * DRIFT_BINS_PER_UNIT).floor() as u64;
            let excess = (1.0 - e.m_next) - e.u_k * (1.0 - 2.0 * theta * e.m_k);
            bins.entry((e.k, m_bin)).or_default().push(excess);
            if e.m_k < 0.5 {
                big.push((e.d_k as f64 >= theta * nf * e.m_k / 2.0) as u8 as f64);
            }
        }
    }
    let drift_bins = bins
        .into_iter()
        .filter(|(_, w)| w.count >= DRIFT_MIN_SAMPLES)
        .map(|((k, m_bin), w)| DriftBin {
            k,
            m_bin,
            samples: w.count,
            mean_excess: w.mean,
            std_error: w.std_error(),
        })
        .collect();
    EpochCheck {
        increment_violations: violations,
        drift_bins,
        big_d_frequency: big.mean,
        big_d_std_error: big.std_error(),
        big_d_epochs: big.count,
        theta,
    }
}

pub const UNIFORM_TIME_CSV_HEADER: [&str; 2] = ["run", "T"];
pub const EPOCH_CSV_HEADER: [&str; 7] = ["run", "k", "u_k", "m_k", "D_k", "growth", "good"];

/// `(run, T)`; `T` is empty for runs that hit the cap.
pub fn write_uniform_time_csv<W: Write>(out: W, runs: &[MarkingRun]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(UNIFORM_TIME_CSV_HEADER)?;
    for (k, r) in runs.iter().enumerate() {
        w.write_record([
            k.to_string(),
            r.outcome.time().map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_epoch_csv<W: Write>(out: W, stats: &[Vec<EpochStats>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EPOCH_CSV_HEADER)?;
    for (run, epochs) in stats.iter().enumerate() {
        for e in epochs {
            w.write_record([
                run.to_string(),
                e.k.to_string(),
                format!("{:.17e}", e.u_k),
                format!("{:.17e}", e.m_k),
                e.d_k.to_string(),
                e.growth.to_string(),
                e.good.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
