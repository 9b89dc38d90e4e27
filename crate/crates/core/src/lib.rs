//! Reward-free exploration in Block MDPs from regression oracles.
//!
//! The crate has three layers:
//!
//! * models and access: [`mdp`], [`access`], [`policy`];
//! * algorithms: regression oracles and reductions in [`regression`], policy
//!   optimisation in [`psdp`], exploration in [`explore`], and the converse
//!   reductions in [`reg_from_rl`];
//! * verification: exact dynamic-programming oracles in [`analysis`],
//!   generators in [`envs`] and the acceptance experiments in [`experiments`].

pub mod access;
pub mod analysis;
pub mod envs;
pub mod error;
pub mod experiments;
pub mod explore;
pub mod mdp;
pub mod policy;
pub mod psdp;
pub mod reg_from_rl;
pub mod regression;
pub mod rng;

pub use error::{Error, Result};
pub use mdp::{Action, BlockMdp, Obs, State};
pub use policy::Policy;
pub use rng::Seed;
