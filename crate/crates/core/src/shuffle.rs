//! The semi-random transposition shuffle in both frames.
//!
//! The raw frame tracks `sigma*_t`, the actual location of every card. The
//! renewal frame tracks `sigma_t`, in which every step first exchanges the
//! card at state 0 with a uniformly chosen card and then moves every card one
//! state up (mod n). Under the cyclic rule the two are related at time `t` by
//!
//! ```text
//! location = (t + 1 - state) mod n
//! ```
//!
//! which is an involution for fixed `t`, so the same map converts in either
//! direction. A raw partner `R_t` corresponds to renewal partner
//! `(t - R_t) mod n`.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::rng::{stream, Domain};
use crate::rule::ShuffleRule;

/// One step of the shuffle: `L_t` from the rule and the uniform partner `R_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub l: usize,
    pub r: usize,
}

/// Exchange the cards at locations `l` and `r`.
pub fn transpose_step(perm: &Permutation, l: usize, r: usize) -> Result<Permutation> {
    let mut out = perm.clone();
    out.swap_states(l, r)?;
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub log_steps: bool,
    /// Cards whose state is recorded at every `t = 0..=steps`.
    pub trace_cards: Vec<usize>,
    /// Replica index, selecting the random streams under the seed.
    pub replica: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub final_perm: Permutation,
    pub steps: Vec<StepRecord>,
    /// `(t, card, state)` rows.
    pub card_trace: Vec<(u64, usize, usize)>,
}

/// Run `steps` steps of the shuffle generated by `rule` in the raw frame.
///
/// `R_t` comes from the swap stream and the rule's own randomness from the
/// rule stream, both selected by `(seed, options.replica)`.
pub fn run_shuffle(
    start: &Permutation,
    rule: &mut ShuffleRule,
    steps: u64,
    seed: u64,
    options: &RunOptions,
) -> Result<Trajectory> {
    let n = start.n();
    if rule.n() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: rule.n(),
        });
    }
    if let Some(&bad) = options.trace_cards.iter().find(|&&c| c >= n) {
        return Err(Error::InvalidArgument(format!("traced card {bad} out of range")));
    }
    let mut swap_rng = stream(seed, Domain::Swap, options.replica);
    let mut rule_rng = stream(seed, Domain::Rule, options.replica);
    let mut perm = start.clone();
    let mut log = Vec::new();
    let mut trace = Vec::new();
    let record = |perm: &Permutation, t: u64, trace: &mut Vec<(u64, usize, usize)>| {
        for &c in &options.trace_cards {
            trace.push((t, c, perm.state_of(c)));
        }
    };
    record(&perm, 0, &mut trace);
    for t in 1..=steps {
        let l = rule.location(t, &mut rule_rng)?;
        let r = swap_rng.gen_range(0..n);
        perm.swap_states_unchecked(l, r);
        debug_assert!(perm.is_consistent());
        if options.log_steps {
            log.push(StepRecord { t, l, r });
        }
        record(&perm, t, &mut trace);
    }
    Ok(Trajectory {
        final_perm: perm,
        steps: log,
        card_trace: trace,
    })
}

/// Convert a cyclic-to-random configuration at time `t` between the raw
/// frame and the renewal frame. The map is its own inverse.
pub fn to_renewal_frame(perm: &Permutation, t: u64) -> Permutation {
    let n = perm.n();
    let shift = ((t + 1) % n as u64) as usize;
    let states = perm
        .card_to_state()
        .iter()
        .map(|&s| (shift + n - s) % n)
        .collect();
    Permutation::from_card_to_state(states).expect("reflection of a bijection")
}

/// Inverse of [`to_renewal_frame`] (the same reflection).
pub fn from_renewal_frame(perm: &Permutation, t: u64) -> Permutation {
    to_renewal_frame(perm, t)
}

/// The renewal-frame partner state corresponding to raw partner `r` at step `t`.
pub fn renewal_partner(n: usize, t: u64, r: usize) -> usize {
    let tm = (t % n as u64) as usize;
    (tm + n - r % n) % n
}

/// The cyclic-to-random shuffle in the renewal frame.
///
/// States are stored relative to a moving origin so that the global "move
/// every card one state up" costs nothing: `state = (base + t) mod n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenewalShuffle {
    n: usize,
    t: u64,
    card_to_base: Vec<usize>,
    base_to_card: Vec<usize>,
}

impl RenewalShuffle {
    /// Start at `sigma_0 = start` (renewal frame) at time 0.
    pub fn new(start: &Permutation) -> Self {
        RenewalShuffle {
            n: start.n(),
            t: 0,
            card_to_base: start.card_to_state().to_vec(),
            base_to_card: start.state_to_card().to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        RenewalShuffle::new(&Permutation::identity(n))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    #[inline]
    fn origin(&self) -> usize {
        (self.t % self.n as u64) as usize
    }

    #[inline]
    pub fn state_of(&self, card: usize) -> usize {
        let s = self.card_to_base[card] + self.origin();
        if s >= self.n {
            s - self.n
        } else {
            s
        }
    }

    #[inline]
    pub fn card_at(&self, state: usize) -> usize {
        let b = state + self.n - self.origin();
        self.base_to_card[if b >= self.n { b - self.n } else { b }]
    }

    /// Exchange the card at state 0 with the card at state `r`, then move
    /// every card one state up.
    #[inline]
    pub fn step_with(&mut self, r: usize) {
        debug_assert!(r < self.n);
        let o = self.origin();
        let b0 = (self.n - o) % self.n;
        let br = (r + self.n - o) % self.n;
        let (c0, cr) = (self.base_to_card[b0], self.base_to_card[br]);
        self.base_to_card.swap(b0, br);
        self.card_to_base[c0] = br;
        self.card_to_base[cr] = b0;
        self.t += 1;
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let r = rng.gen_range(0..self.n);
        self.step_with(r);
        r
    }

    /// Current configuration `sigma_t` in the renewal frame.
    pub fn permutation(&self) -> Permutation {
        let states = (0..self.n).map(|c| self.state_of(c)).collect();
        Permutation::from_card_to_state(states).expect("renewal state is a bijection")
    }

    /// Current configuration converted to the raw frame.
    pub fn raw_permutation(&self) -> Permutation {
        from_renewal_frame(&self.permutation(), self.t)
    }
}

/// Write `(t, L_t, R_t)` rows.
pub fn write_step_log<W: Write>(out: W, steps: &[StepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "L_t", "R_t"])?;
    for s in steps {
        w.write_record([s.t.to_string(), s.l.to_string(), s.r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `(t, card, state)` rows.
pub fn write_card_trace<W: Write>(out: W, trace: &[(u64, usize, usize)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "card", "state"])?;
    for (t, c, s) in trace {
        w.write_record([t.to_string(), c.to_string(), s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
