//! Explicit horizon-2 gadget MDPs whose exploration encodes a regression
//! problem, plus the exact loss quantities used to verify the encoding.
//!
//! Layer-0 observations are base observations; layer 1 adds the special
//! observations "0" and "1" of the augmented space.

use crate::error::{Error, Result};
use crate::mdp::{BlockMdp, LatentModel, Obs, ObservationModel, State};
use crate::policy::Policy;
use crate::regression::AugSpace;

const REALIZABILITY_TOL: f64 = 1e-9;

/// `{0, ε_a, 2ε_a, …, ε_a ⌊1/ε_a⌋}`.
pub fn action_grid(eps_a: f64) -> Result<Vec<f64>> {
    if !(eps_a > 0.0 && eps_a <= 1.0) {
        return Err(Error::InvalidParameter(format!("grid step {eps_a} outside (0, 1]")));
    }
    // Guard against 1/ε_a landing a hair below an integer.
    let steps = (1.0 / eps_a + 1e-9).floor() as usize;
    Ok((0..=steps).map(|k| (k as f64 * eps_a).min(1.0)).collect())
}

/// Mean action value of a policy at the first layer.
pub fn policy_value(policy: &Policy, grid: &[f64], x: Obs) -> f64 {
    policy.action_probs(0, x, grid.len()).iter().zip(grid).map(|(p, a)| p * a).sum()
}

/// `E_{y~Ber(f)} (a - y)^2`.
pub fn flip_probability(a: f64, f: f64) -> f64 {
    a * a + (1.0 - 2.0 * a) * f
}

/// Factorisation of a realizable joint law over observation pairs.
#[derive(Clone, Debug)]
pub struct Factorization {
    /// `pair[s1][s2]`, the latent joint.
    pub pair: Vec<Vec<f64>>,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

/// Check that `joint[x1][x2] = p(φx1, φx2) q1(x1|φx1) q2(x2|φx2)`.
pub fn check_realizable(joint: &[Vec<f64>], decoder: &[State], num_states: usize) -> Result<Factorization> {
    let nx = decoder.len();
    if joint.len() != nx || joint.iter().any(|r| r.len() != nx) {
        return Err(Error::InvalidParameter("joint law does not match the decoder's domain".into()));
    }
    let total: f64 = joint.iter().flatten().sum();
    if (total - 1.0).abs() > 1e-6 || joint.iter().flatten().any(|&p| p < 0.0) {
        return Err(Error::InvalidDistribution { context: "D".into(), sum: total });
    }
    let mut pair = vec![vec![0.0; num_states]; num_states];
    let mut m1 = vec![0.0; nx];
    let mut m2 = vec![0.0; nx];
    for x1 in 0..nx {
        for x2 in 0..nx {
            let p = joint[x1][x2];
            pair[decoder[x1]][decoder[x2]] += p;
            m1[x1] += p;
            m2[x2] += p;
        }
    }
    let marg = |m: &[f64]| {
        let mut ms = vec![0.0; num_states];
        for x in 0..nx {
            ms[decoder[x]] += m[x];
        }
        (0..num_states)
            .map(|s| (0..nx).map(|x| if decoder[x] == s && ms[s] > 0.0 { m[x] / ms[s] } else { 0.0 }).collect())
            .collect::<Vec<Vec<f64>>>()
    };
    let first = marg(&m1);
    let second = marg(&m2);
    for x1 in 0..nx {
        for x2 in 0..nx {
            let (s1, s2) = (decoder[x1], decoder[x2]);
            let model = pair[s1][s2] * first[s1][x1] * second[s2][x2];
            if (model - joint[x1][x2]).abs() > REALIZABILITY_TOL {
                return Err(Error::RealizabilityViolation(format!(
                    "D({x1},{x2}) = {} but the factorisation gives {model}",
                    joint[x1][x2]
                )));
            }
        }
    }
    Ok(Factorization { pair, first, second })
}

/// Conditional law within a decoder cell, or uniform on the cell when it has no mass.
fn cell_emission(cond: &[f64], decoder: &[State], s: State, width: usize) -> Result<Vec<f64>> {
    let mut row = vec![0.0; width];
    let mass: f64 = cond.iter().sum();
    if mass > 0.0 {
        row[..cond.len()].copy_from_slice(cond);
        return Ok(row);
    }
    let cell: Vec<usize> = (0..decoder.len()).filter(|&x| decoder[x] == s).collect();
    if cell.is_empty() {
        return Err(Error::InvalidModel(format!("decoder has an empty preimage for state {s}")));
    }
    for &x in &cell {
        row[x] = 1.0 / cell.len() as f64;
    }
    Ok(row)
}

fn point(width: usize, at: usize) -> Vec<f64> {
    let mut v = vec![0.0; width];
    v[at] = 1.0;
    v
}

fn aug_decoder(decoder: &[State], space: AugSpace) -> Vec<State> {
    let mut d = decoder.to_vec();
    d.push(space.zero_state());
    d.push(space.one_state());
    d
}

/// The two-context gadget for decoder `φ*`, latent target `f[s1][s2]`, joint
/// context law `joint[x1][x2]` and grid step `eps_a`.
pub fn gadget_mdp(
    decoder: &[State],
    num_states: usize,
    f: &[Vec<f64>],
    joint: &[Vec<f64>],
    eps_a: f64,
) -> Result<BlockMdp> {
    let fac = check_realizable(joint, decoder, num_states)?;
    let grid = action_grid(eps_a)?;
    let space = AugSpace { base_obs: decoder.len(), base_states: num_states };
    let (ns, nx, na) = (space.num_states(), space.num_obs(), grid.len());

    let mut initial = vec![0.0; ns];
    for (p, row) in initial.iter_mut().zip(&fac.pair) {
        *p = row.iter().sum();
    }
    let mut layer = Vec::with_capacity(ns);
    for s1 in 0..num_states {
        let mass = initial[s1];
        let cond: Vec<f64> = (0..num_states)
            .map(|s2| if mass > 0.0 { fac.pair[s1][s2] / mass } else { 1.0 / num_states as f64 })
            .collect();
        let rows = grid
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; ns];
                for s2 in 0..num_states {
                    let flip = flip_probability(a, f[s1][s2]);
                    row[s2] = cond[s2] * (1.0 - flip);
                    row[space.zero_state()] += cond[s2] * flip;
                }
                row
            })
            .collect();
        layer.push(rows);
    }
    layer.push(vec![point(ns, space.zero_state()); na]);
    layer.push(vec![point(ns, space.one_state()); na]);

    let emissions = (0..2)
        .map(|h| {
            let cond = if h == 0 { &fac.first } else { &fac.second };
            let mut rows = (0..num_states)
                .map(|s| cell_emission(&cond[s], decoder, s, nx))
                .collect::<Result<Vec<_>>>()?;
            rows.push(point(nx, space.zero_obs()));
            rows.push(point(nx, space.one_obs()));
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;

    let latent = LatentModel::new(2, ns, na, initial, vec![layer])?;
    let obs = ObservationModel::new(ns, nx, emissions, aug_decoder(decoder, space))?;
    BlockMdp::new(latent, obs)
}

/// The one-context gadget: observation "0" after action `a` at a context with
/// latent `s` has probability `a² + (1 - 2a) g(s)`, otherwise "1".
pub fn one_context_gadget(decoder: &[State], num_states: usize, g: &[f64], law: &[f64], eps_a: f64) -> Result<BlockMdp> {
    let grid = action_grid(eps_a)?;
    let space = AugSpace { base_obs: decoder.len(), base_states: num_states };
    let (ns, nx, na) = (space.num_states(), space.num_obs(), grid.len());
    let mut initial = vec![0.0; ns];
    for (x, &p) in law.iter().enumerate() {
        initial[decoder[x]] += p;
    }
    let mut layer = Vec::with_capacity(ns);
    for &gs in g.iter().take(num_states) {
        layer.push(
            grid.iter()
                .map(|&a| {
                    let mut row = vec![0.0; ns];
                    let flip = flip_probability(a, gs);
                    row[space.zero_state()] = flip;
                    row[space.one_state()] = 1.0 - flip;
                    row
                })
                .collect(),
        );
    }
    layer.push(vec![point(ns, space.zero_state()); na]);
    layer.push(vec![point(ns, space.one_state()); na]);
    let first: Vec<Vec<f64>> = (0..num_states)
        .map(|s| {
            let cond: Vec<f64> = (0..decoder.len()).map(|x| if decoder[x] == s { law[x] } else { 0.0 }).collect();
            let mass: f64 = cond.iter().sum();
            let cond: Vec<f64> = cond.iter().map(|p| if mass > 0.0 { p / mass } else { 0.0 }).collect();
            cell_emission(&cond, decoder, s, nx)
        })
        .collect::<Result<_>>()?;
    let second: Vec<Vec<f64>> =
        (0..num_states).map(|s| cell_emission(&[], decoder, s, nx)).collect::<Result<_>>()?;
    let emissions = [first, second]
        .into_iter()
        .map(|mut rows| {
            rows.push(point(nx, space.zero_obs()));
            rows.push(point(nx, space.one_obs()));
            rows
        })
        .collect();
    let latent = LatentModel::new(2, ns, na, initial, vec![layer])?;
    let obs = ObservationModel::new(ns, nx, emissions, aug_decoder(decoder, space))?;
    BlockMdp::new(latent, obs)
}

/// `(L_s(π), Z_s)`: the expected squared error of `π` against `f` on the
/// event `φ*(x2) = s`, and the label variance on that event. Actions are
/// averaged under `π`'s distribution.
pub fn loss_tables(
    decoder: &[State],
    f: &[Vec<f64>],
    joint: &[Vec<f64>],
    grid: &[f64],
    policy: &Policy,
    s: State,
) -> (f64, f64) {
    let mut l = 0.0;
    let mut z = 0.0;
    for (x1, row) in joint.iter().enumerate() {
        let probs = policy.action_probs(0, x1, grid.len());
        for (x2, &p) in row.iter().enumerate() {
            if p == 0.0 || decoder[x2] != s {
                continue;
            }
            let target = f[decoder[x1]][decoder[x2]];
            l += p * probs.iter().zip(grid).map(|(pa, a)| pa * (a - target).powi(2)).sum::<f64>();
            z += p * target * (1.0 - target);
        }
    }
    (l, z)
}

/// Likelihood of `(x1, a, o)` under the dataset-driven simulation, computed
/// directly from the joint law and `f`.
#[allow(clippy::too_many_arguments)]
pub fn simulation_likelihood(
    decoder: &[State],
    f: &[Vec<f64>],
    joint: &[Vec<f64>],
    grid: &[f64],
    policy: &Policy,
    x1: Obs,
    a: usize,
    o: Obs,
) -> f64 {
    let zero = decoder.len();
    let pa = policy.action_probs(0, x1, grid.len())[a];
    let row = &joint[x1];
    let mut total = 0.0;
    for (x2, &p) in row.iter().enumerate() {
        let flip = flip_probability(grid[a], f[decoder[x1]][decoder[x2]]);
        if o == zero {
            total += p * flip;
        } else if o == x2 {
            total += p * (1.0 - flip);
        }
    }
    pa * total
}

/// Likelihood of `(x1, a, o)` under an explicit horizon-2 model.
pub fn model_likelihood(mdp: &BlockMdp, policy: &Policy, x1: Obs, a: usize, o: Obs) -> f64 {
    let pa = policy.action_probs(0, x1, mdp.num_actions())[a];
    let mut total = 0.0;
    for s1 in 0..mdp.num_states() {
        let p1 = mdp.initial()[s1] * mdp.emission(0, s1)[x1];
        if p1 == 0.0 {
            continue;
        }
        for (s2, &p2) in mdp.transition(0, s1, a).iter().enumerate() {
            total += p1 * p2 * mdp.emission(1, s2)[o];
        }
    }
    pa * total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_one_when_the_step_divides_it() {
        assert_eq!(action_grid(0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(action_grid(0.3).unwrap().len(), 4);
        assert!(action_grid(0.0).is_err());
    }

    #[test]
    fn non_realizable_law_is_rejected() {
        // Cell {0,1} maps to state 0; x2 depends on x1 within the cell.
        let joint = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
        let err = check_realizable(&joint, &[0, 0], 1).unwrap_err();
        assert!(matches!(err, Error::RealizabilityViolation(_)));
    }

    #[test]
    fn deterministic_correct_labels_never_flip() {
        let decoder = vec![0, 1];
        let f = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let joint = vec![vec![0.25; 2]; 2];
        let m = gadget_mdp(&decoder, 2, &f, &joint, 0.5).unwrap();
        // Action index 2 is the value 1.0, which equals y on the diagonal.
        let zero_state = 2;
        let p = m.transition(0, 0, 2);
        assert!((p[zero_state] - 0.5).abs() < 1e-15);
        assert_eq!(m.transition(0, 0, 2)[0], 0.5);
    }
}
