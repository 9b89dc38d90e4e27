//! Exact dynamic-programming oracles on known models: visitation, optimal
//! reachability, truncation and cover checks. Used for verification only.

mod cover;
mod reach;
mod truncation;
mod visitation;

pub use cover::{
    check_cover, check_truncated_cover, CoverEntry, CoverMode, CoverReport, TruncatedCoverEntry,
    TruncatedCoverReport, COVER_SLACK,
};
pub use reach::{lift_plan, max_reach, max_reach_table, optimize_latent, optimize_reward};
pub use truncation::{truncate, truncate_with_sets, TruncatedMdp};
pub use visitation::{exact_visitation, mixture_visitation, VisitationTable};
pub(crate) use visitation::state_action_marginal;
