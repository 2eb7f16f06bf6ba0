//! Explore-Go on a cross-shaped contextual gridworld.
//!
//! The crate bundles everything needed to study how a pure-exploration phase
//! at the start of every episode changes zero-shot generalisation to tasks
//! that cannot be reached during training:
//!
//! - [`env`]: contextual-MDP primitives (tasks, states, transitions).
//! - [`cross`]: the cross-shaped gridworld with endpoint teleports.
//! - [`reachability`]: reachable-set search, value iteration and
//!   optimal-action abstraction tables.
//! - [`nn`]: a small dense-network kernel (MLP, categorical head, Adam).
//! - [`ppo`]: rollout collection, GAE and the clipped-surrogate trainer.
//! - [`explore_go`]: rollout collection with a pure-exploration prefix.
//! - [`exploration`]: uniform-random and RND-driven exploration agents.
//! - [`harness`]: multi-seed experiments, evaluation and reporting.

pub mod cross;
pub mod env;
pub mod error;
pub mod exploration;
pub mod explore_go;
pub mod harness;
pub mod nn;
pub mod ppo;
pub mod reachability;
pub mod rng;

pub use error::{Error, Result};
