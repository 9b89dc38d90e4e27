use rand::Rng as _;

use crate::access::{roll_in, ResetEnv};
use crate::error::{Error, Result};
use crate::explore::{
    center_reward, is_new_center, outer_loop, DatasetMode, ExploreOutput, ExploreParams, LayerDiagnostics, Signatures,
};
use crate::mdp::Obs;
use crate::policy::{Policy, PolicyMixture};
use crate::psdp::{psdp, PsdpConfig};
use crate::regression::truth::{LabelTruth, SamplingProcess};
use crate::regression::{OneContextDataset, OneContextOracle};
use crate::rng::{Rng, Seed};

/// Datasets `D_{i,a}` indexed `i * |A| + a`. Each draw resets to a uniform
/// discriminator with a uniform action and labels whether it was `(i, a)`.
pub fn build_discriminator_datasets<E, R>(
    env: &mut E,
    h: usize,
    discriminators: &[Obs],
    samples: usize,
    mode: DatasetMode,
    rng: &mut R,
) -> Result<Vec<OneContextDataset>>
where
    E: ResetEnv + ?Sized,
    R: rand::Rng + ?Sized,
{
    let (m, na) = (discriminators.len(), env.num_actions());
    if m == 0 {
        return Err(Error::InvalidParameter("no discriminators".into()));
    }
    let draw = |env: &mut E, rng: &mut R| -> Result<(usize, usize, Obs)> {
        let j = rng.random_range(0..m);
        let b = rng.random_range(0..na);
        Ok((j, b, env.reset_step(h, discriminators[j], b)?))
    };
    let truth = |i: usize, a: usize| {
        LabelTruth::Process(SamplingProcess::Discriminator {
            layer: h,
            discriminators: discriminators.to_vec(),
            index: i,
            action: a,
        })
    };
    let mut out = Vec::with_capacity(m * na);
    match mode {
        DatasetMode::Independent => {
            for i in 0..m {
                for a in 0..na {
                    let mut s = Vec::with_capacity(samples);
                    for _ in 0..samples {
                        let (j, b, x) = draw(env, rng)?;
                        s.push((x, j == i && b == a));
                    }
                    out.push(OneContextDataset::new(s).with_truth(truth(i, a)));
                }
            }
        }
        DatasetMode::Shared => {
            let mut stream = Vec::with_capacity(samples);
            for _ in 0..samples {
                stream.push(draw(env, rng)?);
            }
            for i in 0..m {
                for a in 0..na {
                    let s = stream.iter().map(|&(j, b, x)| (x, j == i && b == a)).collect();
                    out.push(OneContextDataset::new(s).with_truth(truth(i, a)));
                }
            }
        }
    }
    Ok(out)
}

/// Build a cover for layer `h + 1` using resets to sampled discriminators.
pub fn epcr<E: ResetEnv + ?Sized>(
    reg1: &dyn OneContextOracle,
    h: usize,
    covers: &[Vec<Policy>],
    gamma: &[Policy],
    params: &ExploreParams,
    env: &mut E,
    rng: &mut Rng,
) -> Result<(Vec<Policy>, LayerDiagnostics)> {
    if h + 1 >= env.horizon() || covers.len() <= h {
        return Err(Error::InvalidParameter(format!("cannot extend covers for layers 0..={h}")));
    }
    let na = env.num_actions();
    let mixture = PolicyMixture::half_half(&covers[h], gamma);
    let mut diag = LayerDiagnostics { layer: h + 1, candidates: params.candidates, ..Default::default() };

    let start = env.episodes();
    let mut disc = Vec::with_capacity(params.test_points);
    for _ in 0..params.test_points {
        disc.push(roll_in(env, mixture.sample(rng), h, rng)?[h]);
    }
    diag.sampling_episodes = env.episodes() - start;

    let resets = env.reset_queries();
    let datasets = build_discriminator_datasets(env, h, &disc, params.samples, params.dataset_mode, rng)?;
    let w_hat = datasets
        .iter()
        .map(|d| reg1.fit_one(d, params.reg_eps, params.reg_delta))
        .collect::<Result<Vec<_>>>()?;
    diag.regression_resets = env.reset_queries() - resets;
    let sigs = Signatures::new(params.signature_scale, move |x| w_hat.iter().map(|w| w.eval(x)).collect());

    let psdp_cfg = PsdpConfig { samples: params.psdp_samples, eps: params.reg_eps, delta: params.reg_delta };
    let mut out = Vec::new();
    let resets = env.reset_queries();
    for _ in 0..params.candidates {
        let j = rng.random_range(0..disc.len());
        let center = env.reset_step(h, disc[j], rng.random_range(0..na))?;
        if !is_new_center(&sigs, &diag.accepted_centers, center, params.gamma_sep) {
            continue;
        }
        let reward = center_reward(&sigs, center, params.gamma);
        let res = psdp(h + 1, reg1, &reward, &covers[..=h], gamma, &psdp_cfg, env, rng)?;
        diag.psdp_episodes += res.episodes;
        diag.psdp_value_estimates.push(res.value_estimate);
        diag.accepted_centers.push(center);
        out.push(res.policy);
    }
    diag.sampling_resets = env.reset_queries() - resets;
    Ok((out, diag))
}

/// Reward-free exploration with resets through a one-context regression oracle.
pub fn pcr<E: ResetEnv + ?Sized>(
    reg1: &dyn OneContextOracle,
    params: &ExploreParams,
    env: &mut E,
    seed: Seed,
) -> Result<ExploreOutput> {
    params.validate()?;
    let mut rng = seed.stream("pcr");
    let horizon = env.horizon();
    outer_loop(horizon, params, |h, covers, gamma| epcr(reg1, h, covers, gamma, params, env, &mut rng))
}
