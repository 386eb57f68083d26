//! Desk-scale model-based reinforcement learning for synthetic web navigation.
//!
//! The crate is organized around a small loop: a deterministic web environment
//! ([`webenv`]) produces accessibility-tree observations ([`acctree`]); a learned
//! world model ([`worldmodel`]) predicts how those trees change in response to
//! actions, as edit scripts; a tokenized softmax policy ([`policy`]) acts; the
//! [`rollout`] module generates real, imagined, and expert trajectories and mixes
//! them into groups; [`gspo`] optimizes the policy with sequence-level clipped
//! policy gradients; [`judge`] assigns terminal binary rewards; and [`harness`]
//! wires everything into a CLI with config files and ablation runners.

pub mod acctree;
pub mod gspo;
pub mod harness;
pub mod judge;
pub mod policy;
pub mod rollout;
pub mod seeding;
pub mod webenv;
pub mod worldmodel;
