use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{Obs, State};

/// A finite class of decoders `X -> S`, stored extensionally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptClass {
    members: Vec<Vec<State>>,
    num_obs: usize,
    num_states: usize,
    truth: usize,
}

impl ConceptClass {
    pub fn new(members: Vec<Vec<State>>, num_states: usize, truth: usize) -> Result<Self> {
        let num_obs = members
            .first()
            .map(|m| m.len())
            .ok_or_else(|| Error::InvalidModel("empty concept class".into()))?;
        for (i, m) in members.iter().enumerate() {
            if m.len() != num_obs {
                return Err(Error::InvalidModel(format!("decoder {i} is not total on the observation space")));
            }
            if m.iter().any(|&s| s >= num_states) {
                return Err(Error::InvalidModel(format!("decoder {i} maps outside the state space")));
            }
        }
        if truth >= members.len() {
            return Err(Error::InvalidModel(format!("ground-truth index {truth} out of range")));
        }
        Ok(Self { members, num_obs, num_states, truth })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
    pub fn num_obs(&self) -> usize {
        self.num_obs
    }
    pub fn num_states(&self) -> usize {
        self.num_states
    }
    pub fn members(&self) -> &[Vec<State>] {
        &self.members
    }
    pub fn member(&self, i: usize) -> &[State] {
        &self.members[i]
    }
    pub fn truth_index(&self) -> usize {
        self.truth
    }
    /// Verification only.
    pub fn ground_truth(&self) -> &[State] {
        &self.members[self.truth]
    }

    /// Extend every member with the two fixed special symbols.
    pub fn augmented(&self) -> AugmentedConceptClass {
        let space = AugSpace { base_obs: self.num_obs, base_states: self.num_states };
        let members = self
            .members
            .iter()
            .map(|m| {
                let mut ext = m.clone();
                ext.push(space.zero_state());
                ext.push(space.one_state());
                ext
            })
            .collect();
        AugmentedConceptClass {
            space,
            class: ConceptClass {
                members,
                num_obs: space.num_obs(),
                num_states: space.num_states(),
                truth: self.truth,
            },
        }
    }
}

/// Index layout of an augmented space: base symbols first, then "0", then "1".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugSpace {
    pub base_obs: usize,
    pub base_states: usize,
}

impl AugSpace {
    pub fn zero_obs(&self) -> Obs {
        self.base_obs
    }
    pub fn one_obs(&self) -> Obs {
        self.base_obs + 1
    }
    pub fn zero_state(&self) -> State {
        self.base_states
    }
    pub fn one_state(&self) -> State {
        self.base_states + 1
    }
    pub fn num_obs(&self) -> usize {
        self.base_obs + 2
    }
    pub fn num_states(&self) -> usize {
        self.base_states + 2
    }
    pub fn is_special_obs(&self, x: Obs) -> bool {
        x >= self.base_obs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedConceptClass {
    space: AugSpace,
    class: ConceptClass,
}

impl AugmentedConceptClass {
    pub fn space(&self) -> AugSpace {
        self.space
    }
    pub fn class(&self) -> &ConceptClass {
        &self.class
    }
    pub fn into_class(self) -> ConceptClass {
        self.class
    }

    /// Every member maps exactly the special observations to the special states.
    pub fn is_regular(&self) -> bool {
        let sp = self.space;
        self.class.members.iter().all(|m| {
            m.iter().enumerate().all(|(x, &s)| {
                let special_x = sp.is_special_obs(x);
                let special_s = s >= sp.base_states;
                special_x == special_s && (!special_x || (x == sp.zero_obs()) == (s == sp.zero_state()))
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_partial_members() {
        assert!(ConceptClass::new(vec![vec![0, 1], vec![0]], 2, 0).is_err());
        assert!(ConceptClass::new(vec![vec![0, 2]], 2, 0).is_err());
    }

    #[test]
    fn augmentation_is_regular() {
        let c = ConceptClass::new(vec![vec![0, 1, 1], vec![1, 0, 0]], 2, 1).unwrap();
        let aug = c.augmented();
        assert!(aug.is_regular());
        assert_eq!(aug.class().member(0), &[0, 1, 1, 2, 3]);
        assert_eq!(aug.class().ground_truth(), &[1, 0, 0, 2, 3]);
    }
}
