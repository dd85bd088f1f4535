//! Passforge: a self-contained quantum circuit transpiler whose per-stage
//! pass selection is driven by a masked reinforcement-learning policy.
//!
//! The crate is organized around the compilation pipeline:
//!
//! - [`circuit`] — circuit IR, DAG/depth analysis, OpenQASM-subset and JSON
//!   serialization, benchmark and random circuit generators.
//! - [`backend`] — device models: coupling topology, calibration data, and
//!   the training-time perturbation generator.
//! - [`passes`] — the six-stage pass catalog; every pass is a pure
//!   circuit-to-circuit function with metadata for action masking.
//! - [`metrics`] — fidelity proxies (ESP, LQ, RQ), TVD, and reward math.
//! - [`sim`] — dense statevector simulator with stochastic noise injection.
//! - [`env`] — the compilation MDP: observations, dynamic action masking,
//!   transitions, shaped rewards.
//! - [`policy`] — dual-encoder policy/value network with explicit forward
//!   and backward passes (no ML framework).
//! - [`ppo`] — masked PPO with GAE, parallel rollouts, and inference.
//! - [`baselines`] — fixed pipelines, random/greedy selection, brute-force
//!   selective search, and a (mu,lambda) evolution strategy.

pub mod backend;
pub mod baselines;
pub mod circuit;
pub mod env;
pub mod metrics;
pub mod passes;
pub mod policy;
pub mod ppo;
pub mod scalar;
pub mod sim;
pub mod stats;

pub use scalar::Scalar;

/// Scalar type used for all circuit, calibration, and fidelity math.
pub type Real = f64;

/// Default scalar for policy parameters; matches the f32 checkpoint payload.
pub type PolicyScalar = f32;

/// Policy network instantiated at the shipped parameter precision.
pub type Policy = policy::PolicyParams<PolicyScalar>;

