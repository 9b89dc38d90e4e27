use rand::Rng as _;

use crate::access::{roll_in, EpisodicEnv};
use crate::error::{Error, Result};
use crate::explore::{center_reward, is_new_center, outer_loop, ExploreOutput, ExploreParams, LayerDiagnostics, Signatures};
use crate::mdp::Action;
use crate::policy::{Policy, PolicyMixture};
use crate::psdp::{psdp, PsdpConfig};
use crate::regression::truth::{LabelTruth, SamplingProcess};
use crate::regression::{one_two, OneContextDataset, OneContextOracle, Predictor1, TwoContextDataset, TwoContextOracle};
use crate::rng::{Rng, Seed};

/// Contrastive pairs for action `a` at layer `h`: positives are real
/// transitions, negatives pair `x_h` with the next observation of an
/// independent episode that plays a uniform action at `h`. Two episodes per sample.
pub fn build_contrastive_dataset<E, R>(
    env: &mut E,
    h: usize,
    mixture: &PolicyMixture,
    a: Action,
    samples: usize,
    rng: &mut R,
) -> Result<TwoContextDataset>
where
    E: EpisodicEnv + ?Sized,
    R: rand::Rng + ?Sized,
{
    let na = env.num_actions();
    let mut out = Vec::with_capacity(samples);
    for _ in 0..samples {
        let pos = roll_in(env, mixture.sample(rng), h, rng)?;
        let x_h = pos[h];
        let x_next = env.act(a)?.ok_or(Error::HorizonExceeded)?;
        roll_in(env, mixture.sample(rng), h, rng)?;
        let b = rng.random_range(0..na);
        let x_alt = env.act(b)?.ok_or(Error::HorizonExceeded)?;
        let y = rng.random_bool(0.5);
        out.push((x_h, if y { x_next } else { x_alt }, y));
    }
    Ok(TwoContextDataset::new(out).with_truth(LabelTruth::Process(SamplingProcess::Contrastive {
        layer: h,
        action: a,
        mixture: mixture.weighted(),
    })))
}

struct OneTwoRef<'a>(&'a dyn TwoContextOracle);

impl OneContextOracle for OneTwoRef<'_> {
    fn fit_one(&self, data: &OneContextDataset, eps: f64, delta: f64) -> Result<Predictor1> {
        one_two(self.0, data, eps, delta)
    }
}

/// Build a cover for layer `h + 1` from covers for layers `0..=h`.
pub fn epco<E: EpisodicEnv + ?Sized>(
    reg2: &dyn TwoContextOracle,
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
    let mut f_hat = Vec::with_capacity(na);
    for a in 0..na {
        let data = build_contrastive_dataset(env, h, &mixture, a, params.samples, rng)?;
        f_hat.push(reg2.fit_two(&data, params.reg_eps, params.reg_delta)?);
    }
    diag.regression_episodes = env.episodes() - start;

    let start = env.episodes();
    let mut tests = Vec::with_capacity(params.test_points);
    for _ in 0..params.test_points {
        tests.push(roll_in(env, mixture.sample(rng), h, rng)?[h]);
    }
    let sigs = Signatures::new(params.signature_scale, move |x| {
        tests.iter().flat_map(|&xi| f_hat.iter().map(move |f| f.eval(xi, x))).collect()
    });

    let psdp_cfg = PsdpConfig { samples: params.psdp_samples, eps: params.reg_eps, delta: params.reg_delta };
    let reg1 = OneTwoRef(reg2);
    let mut out = Vec::new();
    let mut psdp_episodes = 0;
    for _ in 0..params.candidates {
        roll_in(env, mixture.sample(rng), h, rng)?;
        let center = env.act(rng.random_range(0..na))?.ok_or(Error::HorizonExceeded)?;
        if !is_new_center(&sigs, &diag.accepted_centers, center, params.gamma_sep) {
            continue;
        }
        let reward = center_reward(&sigs, center, params.gamma);
        let res = psdp(h + 1, &reg1, &reward, &covers[..=h], gamma, &psdp_cfg, env, rng)?;
        psdp_episodes += res.episodes;
        diag.psdp_value_estimates.push(res.value_estimate);
        diag.accepted_centers.push(center);
        out.push(res.policy);
    }
    diag.psdp_episodes = psdp_episodes;
    diag.sampling_episodes = env.episodes() - start - psdp_episodes;
    Ok((out, diag))
}

/// Episodic reward-free exploration through a two-context regression oracle.
pub fn pco<E: EpisodicEnv + ?Sized>(
    reg2: &dyn TwoContextOracle,
    params: &ExploreParams,
    env: &mut E,
    seed: Seed,
) -> Result<ExploreOutput> {
    params.validate()?;
    let mut rng = seed.stream("pco");
    let horizon = env.horizon();
    outer_loop(horizon, params, |h, covers, gamma| epco(reg2, h, covers, gamma, params, env, &mut rng))
}
