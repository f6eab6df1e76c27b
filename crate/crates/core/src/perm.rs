use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A deck configuration in the card -> state convention: `card_to_state[i]`
/// is the current state (location) of card `i`.
///
/// The inverse view is stored alongside so that transpositions by location
/// are O(1).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    card_to_state: Vec<usize>,
    state_to_card: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        let v: Vec<usize> = (0..n).collect();
        Permutation {
            card_to_state: v.clone(),
            state_to_card: v,
        }
    }

    pub fn from_card_to_state(card_to_state: Vec<usize>) -> Result<Self> {
        let n = card_to_state.len();
        if n == 0 {
            return Err(Error::NotAPermutation {
                n,
                reason: "empty deck".into(),
            });
        }
        let mut state_to_card = vec![usize::MAX; n];
        for (card, &state) in card_to_state.iter().enumerate() {
            if state >= n {
                return Err(Error::NotAPermutation {
                    n,
                    reason: format!("card {card} has state {state}"),
                });
            }
            if state_to_card[state] != usize::MAX {
                return Err(Error::NotAPermutation {
                    n,
                    reason: format!("state {state} occupied twice"),
                });
            }
            state_to_card[state] = card;
        }
        Ok(Permutation {
            card_to_state,
            state_to_card,
        })
    }

    pub fn from_state_to_card(state_to_card: Vec<usize>) -> Result<Self> {
        let inv = Permutation::from_card_to_state(state_to_card)?;
        Ok(Permutation {
            card_to_state: inv.state_to_card,
            state_to_card: inv.card_to_state,
        })
    }

    /// A uniformly random permutation (Fisher-Yates).
    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(rng);
        Permutation::from_card_to_state(v).expect("shuffle of 0..n is a permutation")
    }

    pub fn n(&self) -> usize {
        self.card_to_state.len()
    }

    pub fn state_of(&self, card: usize) -> usize {
        self.card_to_state[card]
    }

    pub fn card_at(&self, state: usize) -> usize {
        self.state_to_card[state]
    }

    pub fn card_to_state(&self) -> &[usize] {
        &self.card_to_state
    }

    pub fn state_to_card(&self) -> &[usize] {
        &self.state_to_card
    }

    pub fn is_identity(&self) -> bool {
        self.card_to_state.iter().enumerate().all(|(i, &s)| i == s)
    }

    /// Exchange the cards occupying states `l` and `r`.
    pub fn swap_states(&mut self, l: usize, r: usize) -> Result<()> {
        let n = self.n();
        for loc in [l, r] {
            if loc >= n {
                return Err(Error::LocationOutOfRange { location: loc, n });
            }
        }
        self.swap_states_unchecked(l, r);
        Ok(())
    }

    #[inline]
    pub(crate) fn swap_states_unchecked(&mut self, l: usize, r: usize) {
        let a = self.state_to_card[l];
        let b = self.state_to_card[r];
        self.state_to_card.swap(l, r);
        self.card_to_state[a] = r;
        self.card_to_state[b] = l;
    }

    /// Checks the bijection and the inverse view. Used by debug assertions.
    pub fn is_consistent(&self) -> bool {
        let n = self.n();
        self.state_to_card.len() == n
            && self
                .card_to_state
                .iter()
                .enumerate()
                .all(|(card, &s)| s < n && self.state_to_card[s] == card)
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::from_card_to_state(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.card_to_state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::from_card_to_state(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_card_to_state(vec![0, 3, 1]).is_err());
        assert!(Permutation::from_card_to_state(vec![]).is_err());
    }

    #[test]
    fn swap_out_of_range() {
        let mut p = Permutation::identity(3);
        assert_eq!(
            p.swap_states(0, 3),
            Err(Error::LocationOutOfRange { location: 3, n: 3 })
        );
    }

    proptest! {
        #[test]
        fn swaps_preserve_bijection(n in 1usize..20, swaps in proptest::collection::vec((0usize..20, 0usize..20), 0..50)) {
            let mut p = Permutation::identity(n);
            for (l, r) in swaps {
                let (l, r) = (l % n, r % n);
                p.swap_states(l, r).unwrap();
                prop_assert!(p.is_consistent());
            }
            let q = Permutation::from_state_to_card(p.state_to_card().to_vec()).unwrap();
            prop_assert_eq!(p, q);
        }
    }
}
