//! Non-stationary policies over observations.
//!
//! Policies are immutable and cheap to clone. Composition `π ∘_h π'` follows
//! `π` on layers before `h` and `π'` from layer `h` on.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::mdp::{Action, Obs};
use crate::regression::Predictor1;
use crate::rng::sample_index;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PolicyKind {
    Uniform,
    FixedActionSequence,
    GreedyTable,
    Composed,
}

enum Node {
    Uniform,
    Constant(Action),
    Sequence(Vec<Action>),
    Table(Vec<Vec<Action>>),
    /// Per layer, one value predictor per action; `None` plays uniformly.
    Greedy(Vec<Option<Vec<Predictor1>>>),
    Composed { below: Policy, switch: usize, above: Policy },
}

#[derive(Clone)]
pub struct Policy(Arc<Node>);

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            Node::Uniform => write!(f, "Uniform"),
            Node::Constant(a) => write!(f, "Constant({a})"),
            Node::Sequence(s) => write!(f, "Sequence({s:?})"),
            Node::Table(_) => write!(f, "Table"),
            Node::Greedy(l) => write!(f, "Greedy({} layers)", l.len()),
            Node::Composed { below, switch, above } => write!(f, "({below:?} ∘{switch} {above:?})"),
        }
    }
}

fn argmax(values: impl Iterator<Item = f64>) -> Action {
    let mut best = (0, f64::NEG_INFINITY);
    for (a, v) in values.enumerate() {
        if v > best.1 {
            best = (a, v);
        }
    }
    best.0
}

impl Policy {
    pub fn uniform() -> Self {
        Self(Arc::new(Node::Uniform))
    }
    pub fn constant(a: Action) -> Self {
        Self(Arc::new(Node::Constant(a)))
    }
    /// Action `seq[h]` at layer `h`, action 0 past the end.
    pub fn sequence(seq: Vec<Action>) -> Self {
        Self(Arc::new(Node::Sequence(seq)))
    }
    /// Deterministic lookup `table[h][x]`, action 0 outside the table.
    pub fn table(table: Vec<Vec<Action>>) -> Self {
        Self(Arc::new(Node::Table(table)))
    }
    /// Greedy with respect to per-action value predictors, ties to the lowest action.
    pub fn greedy(layers: Vec<Option<Vec<Predictor1>>>) -> Self {
        Self(Arc::new(Node::Greedy(layers)))
    }
    pub fn compose(below: &Policy, switch: usize, above: &Policy) -> Self {
        Self(Arc::new(Node::Composed { below: below.clone(), switch, above: above.clone() }))
    }

    /// `self ∘_h a ∘_{h+1} above`.
    pub fn then_action(&self, h: usize, a: Action, above: &Policy) -> Self {
        Self::compose(self, h, &Self::compose(&Self::constant(a), h + 1, above))
    }

    /// `self ∘_h Unif(A)`.
    pub fn then_uniform(&self, h: usize) -> Self {
        Self::compose(self, h, &Self::uniform())
    }

    pub fn kind(&self) -> PolicyKind {
        match &*self.0 {
            Node::Uniform => PolicyKind::Uniform,
            Node::Constant(_) | Node::Sequence(_) => PolicyKind::FixedActionSequence,
            Node::Table(_) | Node::Greedy(_) => PolicyKind::GreedyTable,
            Node::Composed { .. } => PolicyKind::Composed,
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(&*self.0, Node::Uniform)
    }

    pub fn ptr_eq(&self, other: &Policy) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// The action taken with probability one, if any.
    pub fn deterministic_action(&self, h: usize, x: Obs, num_actions: usize) -> Option<Action> {
        match &*self.0 {
            Node::Uniform => (num_actions == 1).then_some(0),
            Node::Constant(a) => Some(*a),
            Node::Sequence(s) => Some(s.get(h).copied().unwrap_or(0)),
            Node::Table(t) => Some(t.get(h).and_then(|row| row.get(x)).copied().unwrap_or(0)),
            Node::Greedy(layers) => match layers.get(h) {
                Some(Some(q)) => Some(argmax(q.iter().map(|p| p.eval(x)))),
                _ => (num_actions == 1).then_some(0),
            },
            Node::Composed { below, switch, above } => {
                if h < *switch {
                    below.deterministic_action(h, x, num_actions)
                } else {
                    above.deterministic_action(h, x, num_actions)
                }
            }
        }
    }

    /// Write `π_h(· | x)` into `out`, which must have length `num_actions`.
    pub fn fill_probs(&self, h: usize, x: Obs, out: &mut [f64]) {
        match self.deterministic_action(h, x, out.len()) {
            Some(a) => {
                out.iter_mut().for_each(|p| *p = 0.0);
                out[a] = 1.0;
            }
            None => {
                let u = 1.0 / out.len() as f64;
                out.iter_mut().for_each(|p| *p = u);
            }
        }
    }

    pub fn action_probs(&self, h: usize, x: Obs, num_actions: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_actions];
        self.fill_probs(h, x, &mut out);
        out
    }

    pub fn sample_action<R: rand::Rng + ?Sized>(&self, h: usize, x: Obs, num_actions: usize, rng: &mut R) -> Action {
        match self.deterministic_action(h, x, num_actions) {
            Some(a) => a,
            None => rng.random_range(0..num_actions),
        }
    }
}

/// A finite mixture over policies, sampled once per episode.
#[derive(Clone, Debug)]
pub struct PolicyMixture {
    members: Vec<(Policy, f64)>,
    weights: Vec<f64>,
}

impl PolicyMixture {
    pub fn new(members: Vec<(Policy, f64)>) -> Self {
        let total: f64 = members.iter().map(|(_, w)| w).sum();
        let weights = members.iter().map(|(_, w)| w / total).collect();
        Self { members, weights }
    }

    pub fn uniform_over(policies: &[Policy]) -> Self {
        if policies.is_empty() {
            return Self::new(vec![(Policy::uniform(), 1.0)]);
        }
        let w = 1.0 / policies.len() as f64;
        Self::new(policies.iter().map(|p| (p.clone(), w)).collect())
    }

    /// `½ Unif(Ψ) + ½ Unif(Γ)`. An empty side drops out; both empty gives the
    /// uniform policy.
    pub fn half_half(psi: &[Policy], gamma: &[Policy]) -> Self {
        match (psi.is_empty(), gamma.is_empty()) {
            (true, true) => Self::new(vec![(Policy::uniform(), 1.0)]),
            (false, true) => Self::uniform_over(psi),
            (true, false) => Self::uniform_over(gamma),
            (false, false) => {
                let wp = 0.5 / psi.len() as f64;
                let wg = 0.5 / gamma.len() as f64;
                Self::new(
                    psi.iter().map(|p| (p.clone(), wp)).chain(gamma.iter().map(|p| (p.clone(), wg))).collect(),
                )
            }
        }
    }

    pub fn members(&self) -> &[(Policy, f64)] {
        &self.members
    }

    pub fn weighted(&self) -> Vec<(Policy, f64)> {
        self.members.iter().zip(&self.weights).map(|((p, _), &w)| (p.clone(), w)).collect()
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> &Policy {
        &self.members[sample_index(&self.weights, rng)].0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composition_switches_at_the_layer() {
        let p = Policy::constant(1).then_action(2, 3, &Policy::constant(0));
        assert_eq!(p.deterministic_action(0, 0, 4), Some(1));
        assert_eq!(p.deterministic_action(1, 0, 4), Some(1));
        assert_eq!(p.deterministic_action(2, 0, 4), Some(3));
        assert_eq!(p.deterministic_action(3, 0, 4), Some(0));
        assert_eq!(p.kind(), PolicyKind::Composed);
    }

    #[test]
    fn greedy_breaks_ties_to_the_lowest_action() {
        let q = vec![Predictor1::constant(0.4), Predictor1::constant(0.7), Predictor1::constant(0.7)];
        let p = Policy::greedy(vec![Some(q), None]);
        assert_eq!(p.deterministic_action(0, 5, 3), Some(1));
        assert_eq!(p.action_probs(1, 5, 4), vec![0.25; 4]);
    }

    #[test]
    fn half_half_degrades_to_one_side() {
        let a = Policy::constant(0);
        let m = PolicyMixture::half_half(std::slice::from_ref(&a), &[]);
        assert_eq!(m.weighted().len(), 1);
        let m = PolicyMixture::half_half(&[], &[]);
        assert!(m.members()[0].0.is_uniform());
        let m = PolicyMixture::half_half(std::slice::from_ref(&a), &[a.clone(), a.clone()]);
        let w: Vec<f64> = m.weighted().iter().map(|(_, w)| *w).collect();
        assert_eq!(w, vec![0.5, 0.25, 0.25]);
    }
}
