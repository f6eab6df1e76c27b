//! Location rules: generators of the sequence `L_1, L_2, ...` of locations
//! transposed with a uniform random card.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleKind {
    /// `L_t = t mod n`.
    Cyclic,
    /// `L_t = 0`.
    Star,
    /// `L_t` i.i.d. uniform on `[n]` (the random transposition shuffle).
    UniformIid,
    /// Each block `L_{kn+1..=(k+1)n}` is a fresh uniform permutation of `[n]`.
    QuenchedEpochPermutation,
    /// Memory-two chain: `L_1 = 0`, `L_2 = 1`, then `L_{t+1} = 2 L_t - L_{t-1}`
    /// with probability `1 - 1/n`, else `L_{t+1} = L_{t-1}`.
    PakMemoryTwo,
    ExplicitSequence,
}

impl RuleKind {
    pub const ALL: [RuleKind; 6] = [
        RuleKind::Cyclic,
        RuleKind::Star,
        RuleKind::UniformIid,
        RuleKind::QuenchedEpochPermutation,
        RuleKind::PakMemoryTwo,
        RuleKind::ExplicitSequence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Cyclic => "cyclic",
            RuleKind::Star => "star",
            RuleKind::UniformIid => "uniform-iid",
            RuleKind::QuenchedEpochPermutation => "quenched-epoch-permutation",
            RuleKind::PakMemoryTwo => "pak-memory-two",
            RuleKind::ExplicitSequence => "explicit-sequence",
        }
    }

    pub fn is_random(self) -> bool {
        matches!(
            self,
            RuleKind::UniformIid | RuleKind::QuenchedEpochPermutation | RuleKind::PakMemoryTwo
        )
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RuleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let k = match s.to_ascii_lowercase().as_str() {
            "cyclic" | "cyclic-to-random" => RuleKind::Cyclic,
            "star" => RuleKind::Star,
            "uniform" | "uniform-iid" | "random" => RuleKind::UniformIid,
            "quenched" | "quenched-epoch-permutation" | "epoch-permutation" => {
                RuleKind::QuenchedEpochPermutation
            }
            "pak" | "pak-memory-two" | "memory-two" => RuleKind::PakMemoryTwo,
            "explicit" | "explicit-sequence" => RuleKind::ExplicitSequence,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown rule {other:?}; expected one of cyclic, star, uniform-iid, quenched, pak, explicit"
                )))
            }
        };
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum RuleState {
    Cyclic,
    Star,
    UniformIid,
    Quenched { epochs: Vec<Vec<usize>> },
    Pak { before_last: usize, last: usize },
    Explicit { seq: Vec<usize> },
}

/// A location rule together with whatever state it needs to emit the next
/// location. Random kinds draw from the stream passed to [`ShuffleRule::location`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShuffleRule {
    n: usize,
    state: RuleState,
    next_t: u64,
}

impl ShuffleRule {
    pub fn new(kind: RuleKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("deck size must be positive".into()));
        }
        let state = match kind {
            RuleKind::Cyclic => RuleState::Cyclic,
            RuleKind::Star => RuleState::Star,
            RuleKind::UniformIid => RuleState::UniformIid,
            RuleKind::QuenchedEpochPermutation => RuleState::Quenched { epochs: Vec::new() },
            RuleKind::PakMemoryTwo => {
                if n < 2 {
                    return Err(Error::InvalidArgument(
                        "pak-memory-two needs n >= 2 (L_2 = 1)".into(),
                    ));
                }
                RuleState::Pak {
                    before_last: 0,
                    last: 0,
                }
            }
            RuleKind::ExplicitSequence => {
                return Err(Error::InvalidArgument(
                    "explicit-sequence rules are built with ShuffleRule::explicit".into(),
                ))
            }
        };
        Ok(ShuffleRule {
            n,
            state,
            next_t: 1,
        })
    }

    pub fn cyclic(n: usize) -> Self {
        ShuffleRule::new(RuleKind::Cyclic, n).expect("n > 0")
    }

    pub fn star(n: usize) -> Self {
        ShuffleRule::new(RuleKind::Star, n).expect("n > 0")
    }

    /// A fixed sequence; `seq[t - 1]` is `L_t`.
    pub fn explicit(n: usize, seq: Vec<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("deck size must be positive".into()));
        }
        if let Some(&bad) = seq.iter().find(|&&l| l >= n) {
            return Err(Error::LocationOutOfRange { location: bad, n });
        }
        Ok(ShuffleRule {
            n,
            state: RuleState::Explicit { seq },
            next_t: 1,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> RuleKind {
        match self.state {
            RuleState::Cyclic => RuleKind::Cyclic,
            RuleState::Star => RuleKind::Star,
            RuleState::UniformIid => RuleKind::UniformIid,
            RuleState::Quenched { .. } => RuleKind::QuenchedEpochPermutation,
            RuleState::Pak { .. } => RuleKind::PakMemoryTwo,
            RuleState::Explicit { .. } => RuleKind::ExplicitSequence,
        }
    }

    /// Deterministic kinds can be queried at any `t`; their locations do not
    /// consume randomness.
    pub fn is_deterministic(&self) -> bool {
        !self.kind().is_random()
    }

    /// `L_t` for `t >= 1`. Random kinds must be queried in order
    /// (`t = 1, 2, ...`), except that already-emitted quenched locations
    /// may be replayed.
    pub fn location<R: Rng + ?Sized>(&mut self, t: u64, rng: &mut R) -> Result<usize> {
        if t == 0 {
            return Err(Error::InvalidArgument("steps are 1-based; t = 0 has no location".into()));
        }
        let n = self.n;
        let l = match &mut self.state {
            RuleState::Cyclic => (t % n as u64) as usize,
            RuleState::Star => 0,
            RuleState::Explicit { seq } => {
                let idx = (t - 1) as usize;
                *seq.get(idx).ok_or(Error::SequenceExhausted { t, len: seq.len() })?
            }
            RuleState::UniformIid => {
                check_order("uniform-iid", self.next_t, t)?;
                rng.gen_range(0..n)
            }
            RuleState::Quenched { epochs } => {
                let block = ((t - 1) / n as u64) as usize;
                let offset = ((t - 1) % n as u64) as usize;
                if block < epochs.len() {
                    epochs[block][offset]
                } else {
                    check_order("quenched-epoch-permutation", self.next_t, t)?;
                    let mut perm: Vec<usize> = (0..n).collect();
                    perm.shuffle(rng);
                    epochs.push(perm);
                    epochs[block][offset]
                }
            }
            RuleState::Pak { before_last, last } => {
                check_order("pak-memory-two", self.next_t, t)?;
                let next = match t {
                    1 => 0,
                    2 => 1,
                    _ => {
                        if rng.gen_range(0..n) == 0 {
                            *before_last
                        } else {
                            (2 * *last + n - *before_last) % n
                        }
                    }
                };
                *before_last = *last;
                *last = next;
                next
            }
        };
        if t >= self.next_t {
            self.next_t = t + 1;
        }
        Ok(l)
    }

    /// The quenched epoch permutations drawn so far, concatenated into a
    /// replayable explicit rule. Explicit rules return themselves.
    pub fn to_explicit(&self) -> Option<ShuffleRule> {
        let seq = match &self.state {
            RuleState::Quenched { epochs } => epochs.iter().flatten().copied().collect(),
            RuleState::Explicit { seq } => seq.clone(),
            _ => return None,
        };
        Some(ShuffleRule {
            n: self.n,
            state: RuleState::Explicit { seq },
            next_t: 1,
        })
    }
}

fn check_order(rule: &'static str, expected: u64, got: u64) -> Result<()> {
    if got != expected {
        return Err(Error::OutOfOrder {
            rule,
            expected,
            got,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Domain};

    #[test]
    fn cyclic_and_star() {
        let mut rng = stream(0, Domain::Rule, 0);
        let mut c = ShuffleRule::cyclic(5);
        assert_eq!(c.location(7, &mut rng).unwrap(), 2);
        let mut s = ShuffleRule::star(5);
        for t in 1..20 {
            assert_eq!(s.location(t, &mut rng).unwrap(), 0);
        }
    }

    #[test]
    fn pak_starts_at_zero_one_and_follows_recursion() {
        let n = 7;
        let mut rng = stream(11, Domain::Rule, 0);
        let mut rule = ShuffleRule::new(RuleKind::PakMemoryTwo, n).unwrap();
        let locs: Vec<usize> = (1..=500).map(|t| rule.location(t, &mut rng).unwrap()).collect();
        assert_eq!(&locs[..2], &[0, 1]);
        let mut jumps = 0;
        for w in locs.windows(3) {
            let arith = (2 * w[1] + n - w[0]) % n;
            assert!(w[2] == arith || w[2] == w[0]);
            if w[2] != arith {
                jumps += 1;
            }
        }
        assert!(jumps > 0);
    }

    #[test]
    fn pak_rejects_out_of_order() {
        let mut rng = stream(1, Domain::Rule, 0);
        let mut rule = ShuffleRule::new(RuleKind::PakMemoryTwo, 4).unwrap();
        rule.location(1, &mut rng).unwrap();
        assert!(matches!(
            rule.location(3, &mut rng),
            Err(Error::OutOfOrder { expected: 2, got: 3, .. })
        ));
    }

    #[test]
    fn quenched_blocks_are_permutations_and_replay() {
        let n = 6;
        let mut rng = stream(5, Domain::Rule, 0);
        let mut rule = ShuffleRule::new(RuleKind::QuenchedEpochPermutation, n).unwrap();
        let locs: Vec<usize> = (1..=4 * n as u64)
            .map(|t| rule.location(t, &mut rng).unwrap())
            .collect();
        for block in locs.chunks(n) {
            let mut b = block.to_vec();
            b.sort_unstable();
            assert_eq!(b, (0..n).collect::<Vec<_>>());
        }
        // replaying an emitted location does not consume randomness
        assert_eq!(rule.location(3, &mut rng).unwrap(), locs[2]);
        let mut replay = rule.to_explicit().unwrap();
        let again: Vec<usize> = (1..=4 * n as u64)
            .map(|t| replay.location(t, &mut rng).unwrap())
            .collect();
        assert_eq!(locs, again);
        assert!(matches!(
            replay.location(4 * n as u64 + 1, &mut rng),
            Err(Error::SequenceExhausted { .. })
        ));
    }

    #[test]
    fn explicit_validates_range() {
        assert!(ShuffleRule::explicit(3, vec![0, 3]).is_err());
    }

    #[test]
    fn parse_kinds() {
        for k in RuleKind::ALL {
            assert_eq!(k.name().parse::<RuleKind>().unwrap(), k);
        }
        assert!("riffle".parse::<RuleKind>().is_err());
    }
}
