//! Parameter schedules. Theory mode evaluates the analysis formulas in log
//! space, since the tolerances underflow `f64` for all but toy sizes.
//! Practical mode uses small tuned constants with per-field overrides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetMode {
    /// A fresh stream of draws for every (discriminator, action) dataset.
    #[default]
    Independent,
    /// One stream of draws relabelled for every dataset.
    Shared,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExploreParams {
    pub rounds: usize,
    /// `m`: test observations (episodic) or discriminators (reset).
    pub test_points: usize,
    /// `n`: candidate cluster centers.
    pub candidates: usize,
    /// `N` for each kinematics regression dataset.
    pub samples: usize,
    /// `N` for each PSDP regression dataset.
    pub psdp_samples: usize,
    /// `γ`: reward width around a center.
    pub gamma: f64,
    /// `γ'`: separation needed to accept a new center.
    pub gamma_sep: f64,
    /// Multiplies kinematics values before distances are taken.
    pub signature_scale: f64,
    pub tau: f64,
    pub tau_small: f64,
    pub reg_eps: f64,
    pub reg_delta: f64,
    /// Layer sets larger than this are discarded as failed rounds.
    pub max_layer_size: usize,
    pub dataset_mode: DatasetMode,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub rounds: Option<usize>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub psdp_samples: Option<usize>,
    pub gamma: Option<f64>,
    pub gamma_sep: Option<f64>,
    pub signature_scale: Option<f64>,
    pub tau: Option<f64>,
    pub tau_small: Option<f64>,
    pub dataset_mode: Option<DatasetMode>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Pco,
    Pcr,
}

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_PSDP_SAMPLES: usize = 1000;
pub const PCR_SAMPLES: usize = 4000;
pub const PCR_SIGNATURE_SCALE: f64 = 3.0;

impl ExploreParams {
    pub fn practical(
        algorithm: Algorithm,
        s_count: usize,
        num_actions: usize,
        horizon: usize,
        eps_final: f64,
        delta: f64,
        o: &ParamOverrides,
    ) -> Result<Self> {
        if s_count == 0 || num_actions == 0 || horizon == 0 {
            return Err(Error::InvalidParameter("state count, actions and horizon must be positive".into()));
        }
        if !(eps_final > 0.0 && eps_final < 1.0 && delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter("eps_final and delta must lie in (0, 1)".into()));
        }
        let rounds = o.rounds.unwrap_or(s_count * horizon);
        let tau = o.tau.unwrap_or(eps_final / (4.0 + (horizon * s_count) as f64));
        let tau_small =
            o.tau_small.unwrap_or(tau * tau / (rounds.max(1) as f64 * (s_count * s_count * horizon * horizon) as f64));
        let m = o.m.unwrap_or(8 * s_count);
        // Discriminator labels are positive at rate 1/(m|A|), so PCR needs
        // more samples per dataset and a wider signature scale.
        let (gamma, gamma_sep, scale, samples) = match algorithm {
            Algorithm::Pco => (0.05, 0.15, 1.0, DEFAULT_SAMPLES),
            Algorithm::Pcr => (0.05, 0.15, PCR_SIGNATURE_SCALE, PCR_SAMPLES),
        };
        let p = Self {
            rounds,
            test_points: m,
            candidates: o.n.unwrap_or(8 * s_count * num_actions),
            samples: o.samples.unwrap_or(samples),
            psdp_samples: o.psdp_samples.unwrap_or(DEFAULT_PSDP_SAMPLES),
            gamma: o.gamma.unwrap_or(gamma),
            gamma_sep: o.gamma_sep.unwrap_or(gamma_sep),
            signature_scale: o.signature_scale.unwrap_or(scale),
            tau,
            tau_small,
            reg_eps: eps_final,
            reg_delta: delta,
            max_layer_size: s_count,
            dataset_mode: o.dataset_mode.unwrap_or_default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.test_points, self.candidates, self.samples, self.psdp_samples, self.rounds];
        if positive.contains(&0) {
            return Err(Error::InvalidParameter("sample counts and rounds must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma_sep > 0.0 && self.signature_scale > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Theory-mode schedule. Tolerances are reported as natural logarithms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryParams {
    pub tau: f64,
    pub rounds: usize,
    pub tau_small: f64,
    pub alpha: f64,
    pub m: f64,
    pub n: f64,
    pub ln_eps: f64,
    pub ln_gamma: f64,
    pub ln_gamma_sep: f64,
}

struct Common {
    tau: f64,
    rounds: usize,
    tau_small: f64,
    alpha: f64,
    m: f64,
}

fn common(eps_final: f64, delta: f64, h: usize, s: usize) -> Common {
    let (hf, sf) = (h as f64, s as f64);
    let tau = eps_final / (4.0 + hf * sf);
    let rounds = s * h;
    let tau_small = tau * tau / (rounds as f64 * sf * sf * hf * hf);
    let alpha = (1.0 - 4.0 * tau) / sf;
    let m = 2.0 / (alpha * tau).min(tau_small) * (sf / delta).ln();
    Common { tau, rounds, tau_small, alpha, m }
}

pub fn pco_theory(eps_final: f64, delta: f64, h: usize, s: usize, a: usize) -> TheoryParams {
    let c = common(eps_final, delta, h, s);
    let (hf, sf, af) = (h as f64, s as f64, a as f64);
    let n = c.m * af / c.tau;
    let first = 32.0 * c.alpha.ln() + 64.0 * c.tau.ln() + 32.0 * c.tau_small.ln()
        - 16.0 * 96f64.ln()
        - 16.0 * hf.ln()
        - 16.0 * sf.ln()
        - 32.0 * af.ln()
        - 8.0 * c.m.ln();
    let second = 4.0 * delta.ln() - 81f64.ln() - 4.0 * n.ln();
    let ln_eps = first.min(second);
    TheoryParams {
        tau: c.tau,
        rounds: c.rounds,
        tau_small: c.tau_small,
        alpha: c.alpha,
        m: c.m,
        n,
        ln_eps,
        ln_gamma: ln_eps / 16.0,
        ln_gamma_sep: 2f64.ln() + ln_eps / 8.0 + 0.5 * (c.m * af).ln(),
    }
}

pub fn pcr_theory(eps_final: f64, delta: f64, h: usize, s: usize, a: usize) -> TheoryParams {
    let c = common(eps_final, delta, h, s);
    let (hf, sf, af) = (h as f64, s as f64, a as f64);
    let n = c.m * af / c.tau * (sf / delta).ln();
    let first = 8.0 * c.alpha.ln() + 16.0 * c.tau.ln() + 8.0 * c.tau_small.ln()
        - 8.0 * 6f64.ln()
        - 8.0 * hf.ln()
        - 12.0 * c.m.ln()
        - 12.0 * af.ln();
    let second = 4.0 * delta.ln() - 2.0 * c.m.ln() - 2.0 * af.ln() - 4.0 * n.ln();
    let ln_eps = first.min(second);
    TheoryParams {
        tau: c.tau,
        rounds: c.rounds,
        tau_small: c.tau_small,
        alpha: c.alpha,
        m: c.m,
        n,
        ln_eps,
        ln_gamma: ln_eps / 8.0,
        ln_gamma_sep: 2f64.ln() + ln_eps / 4.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theory_schedule_matches_direct_evaluation_where_representable() {
        let t = pco_theory(0.5, 0.5, 1, 1, 1);
        assert!((t.tau - 0.1).abs() < 1e-15);
        assert_eq!(t.rounds, 1);
        assert!((t.tau_small - 0.01).abs() < 1e-15);
        assert!((t.alpha - 0.6).abs() < 1e-15);
        let m = 2.0 / 0.01 * 2f64.ln();
        assert!((t.m - m).abs() < 1e-9);
        let n = m / 0.1;
        let direct = (0.5f64.powi(4) / (81.0 * n.powi(4))).ln();
        assert!(t.ln_eps <= direct + 1e-9);
        assert!((t.ln_gamma * 16.0 - t.ln_eps).abs() < 1e-12);
    }

    #[test]
    fn theory_tolerances_are_ordered() {
        for (h, s, a) in [(2, 2, 2), (4, 3, 2), (10, 5, 4)] {
            let p = pco_theory(0.1, 0.1, h, s, a);
            assert!(p.ln_eps <= 4.0 * 0.1f64.ln() - 81f64.ln() - 4.0 * p.n.ln() + 1e-9);
            assert!(p.ln_gamma > p.ln_gamma_sep);
            let r = pcr_theory(0.1, 0.1, h, s, a);
            assert!(r.ln_gamma > r.ln_gamma_sep);
            assert!(r.n > p.n);
        }
    }

    #[test]
    fn practical_defaults() {
        let p = ExploreParams::practical(Algorithm::Pco, 3, 2, 4, 0.1, 0.1, &ParamOverrides::default()).unwrap();
        assert_eq!((p.test_points, p.candidates, p.rounds), (24, 48, 12));
        assert_eq!((p.gamma, p.gamma_sep), (0.05, 0.15));
        let o = ParamOverrides { m: Some(5), gamma: Some(0.3), ..Default::default() };
        let p = ExploreParams::practical(Algorithm::Pcr, 3, 2, 4, 0.1, 0.1, &o).unwrap();
        assert_eq!((p.test_points, p.gamma), (5, 0.3));
    }
}
