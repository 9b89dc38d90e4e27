use serde::Serialize;

use crate::analysis::reach::max_reach;
use crate::analysis::truncation::truncate;
use crate::analysis::visitation::exact_visitation;
use crate::mdp::BlockMdp;
use crate::policy::Policy;

/// Absolute slack on cover comparisons, absorbing floating-point noise.
pub const COVER_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct CoverEntry {
    pub layer: usize,
    pub state: usize,
    pub optimal: f64,
    pub achieved: f64,
    pub deficit: f64,
    pub best_policy: Option<usize>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoverReport {
    pub epsilon: f64,
    pub num_policies: usize,
    pub pass: bool,
    pub worst_deficit: f64,
    pub entries: Vec<CoverEntry>,
}

impl CoverReport {
    pub fn failures(&self) -> impl Iterator<Item = &CoverEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// Check `max_{π∈Ψ} d_h(s) >= max_π d_h(s) - eps` at every layer and state.
pub fn check_cover(mdp: &BlockMdp, psi: &[Policy], eps: f64) -> CoverReport {
    let tables: Vec<_> = psi.iter().map(|p| exact_visitation(mdp, p)).collect();
    let mut entries = Vec::new();
    for h in 0..mdp.horizon() {
        for s in 0..mdp.num_states() {
            let optimal = max_reach(mdp, h, s).0;
            let mut best = (None, 0.0);
            for (i, t) in tables.iter().enumerate() {
                if best.0.is_none() || t.state(h, s) > best.1 {
                    best = (Some(i), t.state(h, s));
                }
            }
            let deficit = optimal - best.1;
            entries.push(CoverEntry {
                layer: h,
                state: s,
                optimal,
                achieved: best.1,
                deficit,
                best_policy: best.0,
                pass: deficit <= eps + COVER_SLACK,
            });
        }
    }
    let worst_deficit = entries.iter().map(|e| e.deficit).fold(f64::NEG_INFINITY, f64::max);
    CoverReport { epsilon: eps, num_policies: psi.len(), pass: entries.iter().all(|e| e.pass), worst_deficit, entries }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CoverMode {
    Average,
    Max,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedCoverEntry {
    pub obs: usize,
    pub achieved: f64,
    pub required: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedCoverReport {
    pub layer: usize,
    pub alpha: f64,
    pub mode: CoverMode,
    pub pass: bool,
    pub entries: Vec<TruncatedCoverEntry>,
}

/// Check `agg_{π∈Ψ} d_h(x) >= alpha * max_π d^{trunc}_h(x)` for every observation,
/// with the truncation by the empty policy set at threshold `tau`.
pub fn check_truncated_cover(
    mdp: &BlockMdp,
    psi: &[Policy],
    h: usize,
    alpha: f64,
    mode: CoverMode,
    tau: f64,
) -> TruncatedCoverReport {
    let trunc = empty_truncation(mdp, tau);
    let best: Vec<f64> = (0..mdp.num_states()).map(|s| max_reach(&trunc, h, s).0).collect();
    let tables: Vec<_> = psi.iter().map(|p| exact_visitation(mdp, p)).collect();
    let entries: Vec<_> = (0..mdp.num_obs())
        .map(|x| {
            let s = mdp.decoder()[x];
            let vals = tables.iter().map(|t| t.observation(mdp, h, x));
            let achieved = match mode {
                CoverMode::Average if !psi.is_empty() => vals.sum::<f64>() / psi.len() as f64,
                CoverMode::Average => 0.0,
                CoverMode::Max => vals.fold(0.0, f64::max),
            };
            let required = alpha * best[s] * mdp.emission(h, s)[x];
            TruncatedCoverEntry { obs: x, achieved, required, pass: achieved >= required - COVER_SLACK }
        })
        .collect();
    TruncatedCoverReport { layer: h, alpha, mode, pass: entries.iter().all(|e| e.pass), entries }
}

fn empty_truncation(mdp: &BlockMdp, tau: f64) -> BlockMdp {
    let t = tau.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    truncate(mdp, &[], t, t).expect("valid thresholds").model().clone()
}
