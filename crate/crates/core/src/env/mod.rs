//! The compilation MDP: observation construction, dynamic action masking,
//! transitions through the pass catalog, and shaped rewards.
//!
//! One environment instance is single-threaded; trainers run several
//! independent instances in parallel.

mod features;
mod mask;

pub use features::Observation;
pub use mask::CatalogView;
use mask::mask_for;

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::BackendModel;
use crate::circuit::{QuantumCircuit, QubitSpace};
use crate::metrics::{
    esp, final_reward, layout_quality, quality_report, routing_quality, QualityReport,
    RewardWeights,
};
use crate::passes::{
    apply_pass, run_optimize_loop, Deadline, FailureReason, Layout, PassContext, PassId,
    PassOutcome, Stage,
};

/// Pass actions plus SKIP.
pub const NUM_ACTIONS: usize = PassId::ALL.len() + 1;

/// The stage-advance action id.
pub const SKIP_ACTION: usize = PassId::ALL.len();

/// Steps reserved before the episode cap for forced completion; covers the
/// worst-case mandatory-resolution tail from the init stage.
pub const WIND_DOWN_MARGIN: usize = 10;

/// Number of global feature dimensions.
pub const GLOBAL_DIM: usize = 32;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("circuit width {width} exceeds the configured q_max {q_max}")]
    WidthExceedsCap { width: usize, q_max: usize },
    #[error("circuit width {width} exceeds the {num_physical}-qubit device")]
    WidthExceedsDevice { width: usize, num_physical: usize },
    #[error("backend has {edges} edges but the config reserves {e_max} slots")]
    EdgeSlotsExceeded { edges: usize, e_max: usize },
    #[error("backend has {qubits} qubits but the config reserves {p_max} slots")]
    QubitSlotsExceeded { qubits: usize, p_max: usize },
    #[error("circuit must be logical at reset")]
    NotLogical,
    #[error("action {0} violates the current mask")]
    MaskedAction(usize),
    #[error("episode already finished; call reset")]
    EpisodeFinished,
    #[error("no active episode; call reset")]
    NoEpisode,
    #[error("metrics failure: {0}")]
    Metrics(#[from] crate::metrics::MetricsError),
}

/// Environment configuration; the observation layout is a pure function of
/// these fields, fingerprinted by [`EnvConfig::obs_hash`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    /// Logical-qubit cap for the pre-layout tensors.
    pub q_max: usize,
    /// Physical-qubit slots for the post-routing tensors.
    pub p_max: usize,
    /// Coupling-edge slots for the post-routing tensors.
    pub e_max: usize,
    /// Gate-kind channels.
    pub g_types: usize,
    /// Temporal bins.
    pub t_bins: usize,
    /// Pass-history window length.
    pub history_len: usize,
    pub max_episode_steps: usize,
    /// Per-pass wall-clock timeout, seconds.
    pub pass_timeout: f64,
    pub reward_weights: RewardWeights,
    /// Multiplier on per-step shaped deltas so the terminal reward dominates.
    pub shaping_weight: f64,
    /// Penalty slope per consecutive no-op.
    pub noop_penalty: f64,
    /// Fixed penalty for a failed pass.
    pub failure_penalty: f64,
    pub vf2_call_limit: usize,
    pub beam_width: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            q_max: 16,
            p_max: 16,
            e_max: 24,
            g_types: 8,
            t_bins: 4,
            history_len: 5,
            max_episode_steps: 64,
            pass_timeout: 2.0,
            reward_weights: RewardWeights::default(),
            shaping_weight: 0.5,
            noop_penalty: 0.01,
            failure_penalty: 0.05,
            vf2_call_limit: crate::passes::DEFAULT_VF2_CALL_LIMIT,
            beam_width: crate::passes::DEFAULT_BEAM_WIDTH,
        }
    }
}

impl EnvConfig {
    /// Same config sized for a small device; keeps tests and the desk
    /// curriculum cheap.
    pub fn sized_for(backend: &BackendModel, q_max: usize) -> Self {
        Self {
            q_max,
            p_max: backend.num_physical,
            e_max: backend.edges().len(),
            ..Self::default()
        }
    }

    pub fn pre_input_dim(&self) -> usize {
        self.q_max * self.q_max * self.g_types * self.t_bins
            + self.q_max * self.g_types * self.t_bins
    }

    pub fn post_input_dim(&self) -> usize {
        self.e_max * self.g_types * self.t_bins * 4 + self.p_max * self.g_types * self.t_bins * 5
    }

    pub fn history_dim(&self) -> usize {
        self.history_len + PassId::ALL.len()
    }

    pub fn aux_dim(&self) -> usize {
        6 + GLOBAL_DIM + self.history_dim()
    }

    /// Fingerprint of every dimension the observation layout depends on.
    pub fn obs_hash(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x100000001b3);
        };
        for v in [
            self.q_max,
            self.p_max,
            self.e_max,
            self.g_types,
            self.t_bins,
            self.history_len,
            NUM_ACTIONS,
        ] {
            mix(v as u64);
        }
        h
    }
}

/// Per-step validity bitvector over pass actions plus SKIP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionMask {
    bits: Vec<bool>,
}

impl ActionMask {
    pub fn new(bits: Vec<bool>) -> Self {
        debug_assert_eq!(bits.len(), NUM_ACTIONS);
        debug_assert!(bits.iter().any(|&b| b), "mask must have a valid action");
        Self { bits }
    }

    pub fn get(&self, action: usize) -> bool {
        self.bits.get(action).copied().unwrap_or(false)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn valid_actions(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn num_valid(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Step outcome facts for logging and the trainer.
#[derive(Debug, Clone, Serialize)]
pub struct StepInfo {
    pub stage: Stage,
    pub applied: Option<PassId>,
    pub changed: bool,
    pub pass_failed: bool,
    pub failure_reason: Option<FailureReason>,
    /// Stage-appropriate quality value after the step.
    pub quality: f64,
    /// Raw terminal reward component (present on the final step in
    /// training mode).
    pub final_reward: Option<f64>,
    pub forced_retranslation: bool,
    pub pass_elapsed: f64,
}

#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// One decision record as consumed by PPO.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub observation: Observation,
    pub mask: ActionMask,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub done: bool,
}

/// A full episode of records; `final_reward` is the raw terminal component.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    pub final_reward: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvMode {
    /// Computes the reference compilation and rewards.
    Train,
    /// No reference compile, no reward computation.
    Inference,
}

#[derive(Clone)]
pub(crate) struct EpisodeState {
    pub original: QuantumCircuit,
    pub circuit: QuantumCircuit,
    pub layout: Option<Layout>,
    pub stage: Stage,
    pub steps: usize,
    pub failed_passes: BTreeSet<PassId>,
    pub succeeded_passes: BTreeSet<PassId>,
    pub pending_follow_ups: BTreeSet<PassId>,
    pub selected_optimize: BTreeSet<PassId>,
    pub history: VecDeque<usize>,
    pub noop_counts: Vec<u32>,
    pub consecutive_noops: usize,
    pub start_cost: f64,
    pub reference: Option<QualityReport>,
    pub done: bool,
}

/// The pass-selection environment over one backend.
#[derive(Clone)]
pub struct Env {
    cfg: EnvConfig,
    backend: BackendModel,
    mode: EnvMode,
    seed: u64,
    state: Option<EpisodeState>,
    reference_cache: HashMap<u64, QualityReport>,
}

impl Env {
    pub fn new(cfg: EnvConfig, backend: BackendModel, mode: EnvMode, seed: u64) -> Result<Self, EnvError> {
        if backend.edges().len() > cfg.e_max {
            return Err(EnvError::EdgeSlotsExceeded {
                edges: backend.edges().len(),
                e_max: cfg.e_max,
            });
        }
        if backend.num_physical > cfg.p_max {
            return Err(EnvError::QubitSlotsExceeded {
                qubits: backend.num_physical,
                p_max: cfg.p_max,
            });
        }
        Ok(Self {
            cfg,
            backend,
            mode,
            seed,
            state: None,
            reference_cache: HashMap::new(),
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn backend(&self) -> &BackendModel {
        &self.backend
    }

    pub fn mode(&self) -> EnvMode {
        self.mode
    }

    /// Swaps the backend between episodes (training rotates through a pool).
    pub fn set_backend(&mut self, backend: BackendModel) -> Result<(), EnvError> {
        if backend.edges().len() > self.cfg.e_max {
            return Err(EnvError::EdgeSlotsExceeded {
                edges: backend.edges().len(),
                e_max: self.cfg.e_max,
            });
        }
        if backend.num_physical > self.cfg.p_max {
            return Err(EnvError::QubitSlotsExceeded {
                qubits: backend.num_physical,
                p_max: self.cfg.p_max,
            });
        }
        self.reference_cache.clear();
        self.backend = backend;
        Ok(())
    }

    /// Starts an episode on a logical circuit.
    pub fn reset(&mut self, circuit: QuantumCircuit) -> Result<Observation, EnvError> {
        if circuit.qubit_space != QubitSpace::Logical {
            return Err(EnvError::NotLogical);
        }
        if circuit.num_qubits > self.cfg.q_max {
            return Err(EnvError::WidthExceedsCap {
                width: circuit.num_qubits,
                q_max: self.cfg.q_max,
            });
        }
        if circuit.num_qubits > self.backend.num_physical {
            return Err(EnvError::WidthExceedsDevice {
                width: circuit.num_qubits,
                num_physical: self.backend.num_physical,
            });
        }
        let reference = match self.mode {
            EnvMode::Train => Some(self.reference_compile(&circuit)?),
            EnvMode::Inference => None,
        };
        let counts = circuit.gate_counts();
        let start_cost = (counts.gates() + circuit.depth()).max(1) as f64;
        self.state = Some(EpisodeState {
            original: circuit.clone(),
            circuit,
            layout: None,
            stage: Stage::Init,
            steps: 0,
            failed_passes: BTreeSet::new(),
            succeeded_passes: BTreeSet::new(),
            pending_follow_ups: BTreeSet::new(),
            selected_optimize: BTreeSet::new(),
            history: VecDeque::new(),
            noop_counts: vec![0; PassId::ALL.len()],
            consecutive_noops: 0,
            start_cost,
            reference,
            done: false,
        });
        Ok(self.build_observation())
    }

    /// Reference compilation for the terminal reward: the fidelity-optimized
    /// fixed pipeline, cached per circuit fingerprint.
    pub fn reference_compile(&mut self, circuit: &QuantumCircuit) -> Result<QualityReport, EnvError> {
        let key = circuit.fingerprint();
        if let Some(hit) = self.reference_cache.get(&key) {
            return Ok(hit.clone());
        }
        let (compiled, _) = crate::baselines::fidelity_optimized(circuit, &self.backend, &self.pass_ctx(0));
        let report = quality_report(&compiled, &self.backend)?;
        self.reference_cache.insert(key, report.clone());
        Ok(report)
    }

    fn pass_ctx(&self, step: usize) -> PassContext {
        PassContext {
            deadline: Deadline::after(std::time::Duration::from_secs_f64(self.cfg.pass_timeout)),
            seed: derive(self.seed, step as u64),
            vf2_call_limit: self.cfg.vf2_call_limit,
            beam_width: self.cfg.beam_width,
        }
    }

    /// Current mask; panics without an active episode.
    pub fn action_mask(&self) -> ActionMask {
        let state = self.state.as_ref().expect("active episode");
        mask_for(state, &self.cfg, &self.backend, &CatalogView::real())
    }

    pub fn stage(&self) -> Option<Stage> {
        self.state.as_ref().map(|s| s.stage)
    }

    pub fn current_circuit(&self) -> Option<&QuantumCircuit> {
        self.state.as_ref().map(|s| &s.circuit)
    }

    /// The logical input circuit of the active episode.
    pub fn original_circuit(&self) -> Option<&QuantumCircuit> {
        self.state.as_ref().map(|s| &s.original)
    }

    pub fn current_layout(&self) -> Option<&Layout> {
        self.state.as_ref().and_then(|s| s.layout.as_ref())
    }

    pub fn episode_done(&self) -> bool {
        self.state.as_ref().map(|s| s.done).unwrap_or(true)
    }

    /// Stage-appropriate quality of the current state.
    pub fn current_quality(&self) -> f64 {
        let state = self.state.as_ref().expect("active episode");
        Self::stage_quality(state, &self.backend)
    }

    /// Reference compilation report for the active training episode.
    pub fn reference_report(&self) -> Option<&QualityReport> {
        self.state.as_ref().and_then(|s| s.reference.as_ref())
    }

    /// Compiled output of a finished episode.
    pub fn take_result(&mut self) -> Option<(QuantumCircuit, Option<Layout>)> {
        let state = self.state.take()?;
        if !state.done {
            self.state = Some(state);
            return None;
        }
        Some((state.circuit, state.layout))
    }

    /// Stage-appropriate quality proxy of the current state.
    fn stage_quality(state: &EpisodeState, backend: &BackendModel) -> f64 {
        quality_proxy(
            state.stage,
            &state.circuit,
            state.layout.as_ref(),
            backend,
            state.start_cost,
        )
    }

    /// Applies one masked action.
    pub fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        let mask = {
            let state = self.state.as_ref().ok_or(EnvError::NoEpisode)?;
            if state.done {
                return Err(EnvError::EpisodeFinished);
            }
            mask_for(state, &self.cfg, &self.backend, &CatalogView::real())
        };
        if !mask.get(action) {
            return Err(EnvError::MaskedAction(action));
        }
        let ctx = {
            let state = self.state.as_ref().unwrap();
            self.pass_ctx(state.steps)
        };
        let backend = self.backend.clone();
        let cfg = self.cfg.clone();
        let mode = self.mode;
        let state = self.state.as_mut().unwrap();

        let mut reward = 0.0;
        let mut info = StepInfo {
            stage: state.stage,
            applied: None,
            changed: false,
            pass_failed: false,
            failure_reason: None,
            quality: 0.0,
            final_reward: None,
            forced_retranslation: false,
            pass_elapsed: 0.0,
        };
        let mut done = false;

        if action == SKIP_ACTION {
            match state.stage {
                Stage::Routing => {
                    // Leaving routing with a logical circuit means nothing
                    // needed SWAPs; bind the layout by relabeling.
                    if state.circuit.qubit_space == QubitSpace::Logical {
                        let layout = state
                            .layout
                            .clone()
                            .expect("mask requires a layout before leaving routing");
                        state.circuit = state.circuit.relabeled(
                            layout.as_slice(),
                            backend.num_physical,
                            QubitSpace::Physical,
                        );
                    }
                    state.stage = Stage::Translate;
                }
                Stage::Optimize => {
                    // The convergence loop runs over the accumulated set.
                    let before = Self::stage_quality(state, &backend);
                    if !state.selected_optimize.is_empty() {
                        let selected: Vec<PassId> =
                            state.selected_optimize.iter().copied().collect();
                        let outcome = run_optimize_loop(
                            &state.circuit,
                            &selected,
                            &backend,
                            state.layout.as_ref(),
                            &ctx,
                        );
                        if !outcome.failed {
                            state.circuit = outcome.circuit;
                            if outcome.layout.is_some() {
                                state.layout = outcome.layout;
                            }
                            info.changed = outcome.changed;
                        }
                    }
                    let after = Self::stage_quality(state, &backend);
                    if mode == EnvMode::Train {
                        reward += cfg.shaping_weight * (after - before);
                    }
                    state.stage = Stage::Cleanup;
                }
                Stage::Cleanup => {
                    // Episode end: the basis check forces retranslation if
                    // anything out-of-basis slipped through.
                    if !state.circuit.all_in_basis() {
                        let outcome = crate::passes::apply_basis_translation(
                            &state.circuit,
                            state.layout.as_ref(),
                        );
                        state.circuit = outcome.circuit;
                        info.forced_retranslation = true;
                    }
                    done = true;
                    state.done = true;
                    if mode == EnvMode::Train {
                        let reference = state.reference.as_ref().expect("train mode has reference");
                        let esp_rl = esp(&state.circuit, &backend).unwrap_or(0.0);
                        let counts = state.circuit.gate_counts();
                        let terminal = final_reward(
                            esp_rl,
                            reference.esp,
                            counts.gates(),
                            reference.gate_counts.gates(),
                            state.circuit.depth(),
                            reference.depth,
                            &cfg.reward_weights,
                        )?;
                        reward += terminal;
                        info.final_reward = Some(terminal);
                    }
                }
                stage => {
                    state.stage = stage.next().expect("cleanup handled above");
                }
            }
            info.stage = state.stage;
            state.consecutive_noops = 0;
        } else {
            let pass = PassId::from_index(action).expect("pass action id");
            info.applied = Some(pass);
            let q_before = Self::stage_quality(state, &backend);
            let outcome: PassOutcome =
                apply_pass(pass, &state.circuit, &backend, state.layout.as_ref(), &ctx);
            info.pass_elapsed = outcome.elapsed;
            if outcome.failed {
                info.pass_failed = true;
                info.failure_reason = outcome.failure_reason;
                state.failed_passes.insert(pass);
                if mode == EnvMode::Train {
                    reward -= cfg.failure_penalty;
                }
            } else {
                info.changed = outcome.changed;
                state.circuit = outcome.circuit;
                if outcome.layout.is_some() {
                    state.layout = outcome.layout;
                }
                state.succeeded_passes.insert(pass);
                state.pending_follow_ups.remove(&pass);
                if outcome.changed {
                    for &f in pass.follow_ups() {
                        state.pending_follow_ups.insert(f);
                    }
                }
                if state.stage == Stage::Optimize {
                    state.selected_optimize.insert(pass);
                }
                let q_after = Self::stage_quality(state, &backend);
                if mode == EnvMode::Train {
                    reward += cfg.shaping_weight * (q_after - q_before);
                }
                if outcome.changed {
                    state.consecutive_noops = 0;
                    state.noop_counts[action] = 0;
                } else {
                    if mode == EnvMode::Train {
                        reward -= cfg.noop_penalty * state.consecutive_noops as f64;
                    }
                    state.consecutive_noops += 1;
                    state.noop_counts[action] = state.noop_counts[action].saturating_add(1);
                }
            }
        }

        state.history.push_front(action);
        state.history.truncate(cfg.history_len);
        state.steps += 1;
        info.quality = Self::stage_quality(state, &backend);

        let observation = features::build_observation(state, &cfg, &backend);
        Ok(StepResult {
            observation,
            reward,
            done,
            info,
        })
    }

    /// Observation of the current state.
    pub fn build_observation(&self) -> Observation {
        let state = self.state.as_ref().expect("active episode");
        features::build_observation(state, &self.cfg, &self.backend)
    }
}

/// Stage-appropriate quality proxy: the shaped-reward ladder. Init uses a
/// normalized negative gate+depth composite, layout/routing the TQ
/// estimates, translate is flat, optimize/cleanup exact ESP.
pub fn quality_proxy(
    stage: Stage,
    circuit: &QuantumCircuit,
    layout: Option<&Layout>,
    backend: &BackendModel,
    start_cost: f64,
) -> f64 {
    match stage {
        Stage::Init => {
            let counts = circuit.gate_counts();
            -((counts.gates() + circuit.depth()) as f64) / start_cost.max(1.0)
        }
        Stage::Layout | Stage::Routing => {
            if circuit.qubit_space == QubitSpace::Physical {
                routing_quality(circuit, backend).unwrap_or(0.0)
            } else {
                let fallback;
                let layout = match layout {
                    Some(l) => l,
                    None => {
                        // Pre-layout baseline: the trivial fallback layout.
                        fallback = Layout::identity(circuit.num_qubits, backend.num_physical);
                        &fallback
                    }
                };
                layout_quality(circuit, backend, layout).unwrap_or(0.0)
            }
        }
        Stage::Translate => 0.0,
        Stage::Optimize | Stage::Cleanup => esp(circuit, backend).unwrap_or(0.0),
    }
}

/// Hardware-executability scan: routed, coupled, in basis, no 3q gates.
pub fn validity_scan(circuit: &QuantumCircuit, backend: &BackendModel) -> bool {
    if circuit.qubit_space != QubitSpace::Physical {
        return false;
    }
    if !circuit.all_in_basis() || !circuit.free_of_three_qubit_gates() {
        return false;
    }
    circuit
        .instructions()
        .iter()
        .filter(|i| i.kind.arity() == 2)
        .all(|i| backend.has_edge(i.qubits()[0], i.qubits()[1]))
}

pub(crate) fn derive(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{synthetic_backend, NoiseProfile, TopologyKind};
    use crate::circuit::generate::{benchmark_circuit, random_circuit, BenchmarkKind};
    use crate::circuit::GateKind;

    fn small_env(mode: EnvMode) -> Env {
        let backend =
            synthetic_backend(TopologyKind::Line, 6, NoiseProfile::default_uniform()).unwrap();
        let cfg = EnvConfig::sized_for(&backend, 6);
        Env::new(cfg, backend, mode, 123).unwrap()
    }

    #[test]
    fn reset_starts_at_init_with_clean_history() {
        let mut env = small_env(EnvMode::Inference);
        let obs = env
            .reset(benchmark_circuit(BenchmarkKind::Ghz, 3).unwrap())
            .unwrap();
        assert_eq!(obs.stage_onehot, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(obs.history.iter().all(|&h| h == 0.0));
    }

    #[test]
    fn ghz3_pre_tensor_has_two_interaction_cells() {
        let mut env = small_env(EnvMode::Inference);
        let obs = env
            .reset(benchmark_circuit(BenchmarkKind::Ghz, 3).unwrap())
            .unwrap();
        let cfg = env.config();
        // Count canonical (i < j) nonzero cells of the 2q block.
        let g = cfg.g_types;
        let t = cfg.t_bins;
        let q = cfg.q_max;
        let mut cells = std::collections::BTreeSet::new();
        for i in 0..q {
            for j in 0..q {
                if i >= j {
                    continue;
                }
                for ch in 0..g {
                    for bin in 0..t {
                        let idx = ((i * q + j) * g + ch) * t + bin;
                        if obs.circuit_tensor[idx] != 0.0 {
                            cells.insert((i, j));
                        }
                    }
                }
            }
        }
        assert_eq!(cells.len(), 2, "CX(0,1) and CX(1,2)");
    }

    #[test]
    fn skip_requires_mandatory_unroll_first() {
        let mut env = small_env(EnvMode::Inference);
        let mut c = QuantumCircuit::new(3, QubitSpace::Logical);
        c.push(GateKind::Ccx, &[0, 1, 2]);
        for q in 0..3 {
            c.push_measure(q);
        }
        env.reset(c).unwrap();
        let mask = env.action_mask();
        assert!(!mask.get(SKIP_ACTION), "skip blocked by 3q gate");
        assert!(mask.get(PassId::Unroll3q.index()));
        // Applying unroll unblocks skip.
        env.step(PassId::Unroll3q.index()).unwrap();
        assert!(env.action_mask().get(SKIP_ACTION));
    }

    #[test]
    fn skip_enabled_at_init_without_3q() {
        let mut env = small_env(EnvMode::Inference);
        env.reset(benchmark_circuit(BenchmarkKind::Ghz, 3).unwrap())
            .unwrap();
        assert!(env.action_mask().get(SKIP_ACTION));
    }

    #[test]
    fn masked_action_is_a_hard_error() {
        let mut env = small_env(EnvMode::Inference);
        env.reset(benchmark_circuit(BenchmarkKind::Ghz, 3).unwrap())
            .unwrap();
        // Layout passes are masked during init.
        let err = env.step(PassId::TrivialLayout.index()).unwrap_err();
        assert!(matches!(err, EnvError::MaskedAction(_)));
    }

    #[test]
    fn noop_penalty_applies_on_second_repeat() {
        let mut env = small_env(EnvMode::Train);
        env.reset(benchmark_circuit(BenchmarkKind::Ghz, 3).unwrap())
            .unwrap();
        // GHZ has no identities: both applications are no-ops.
        let first = env.step(PassId::RemoveIdentityInit.index()).unwrap();
        assert_eq!(first.reward, 0.0, "first no-op is free");
        let second = env.step(PassId::RemoveIdentityInit.index()).unwrap();
        assert!((second.reward + 0.01).abs() < 1e-12, "got {}", second.reward);
    }

    #[test]
    fn full_skip_walk_produces_valid_circuit() {
        let mut env = small_env(EnvMode::Inference);
        let mut c = QuantumCircuit::new(2, QubitSpace::Logical);
        c.push(GateKind::X, &[0]);
        c.push_measure(0);
        env.reset(c).unwrap();
        let mut steps = 0;
        loop {
            let mask = env.action_mask();
            // Walk using SKIP when allowed, otherwise the first valid action.
            let action = if mask.get(SKIP_ACTION) {
                SKIP_ACTION
            } else {
                mask.valid_actions().next().unwrap()
            };
            let result = env.step(action).unwrap();
            steps += 1;
            assert!(steps <= env.config().max_episode_steps);
            if result.done {
                break;
            }
        }
        let (compiled, _) = env.take_result().unwrap();
        assert!(validity_scan(&compiled, env.backend()));
    }

    #[test]
    fn random_masked_episodes_always_terminate_validly() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut env = small_env(EnvMode::Inference);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for ep in 0..50u64 {
            let c = random_circuit(3 + (ep as usize % 3), 8, ep);
            env.reset(c).unwrap();
            let mut steps = 0;
            loop {
                let mask = env.action_mask();
                let valid: Vec<usize> = mask.valid_actions().collect();
                let action = valid[rng.gen_range(0..valid.len())];
                let result = env.step(action).unwrap();
                steps += 1;
                assert!(
                    steps <= env.config().max_episode_steps,
                    "episode exceeded the step cap"
                );
                if result.done {
                    break;
                }
            }
            let (compiled, _) = env.take_result().unwrap();
            assert!(validity_scan(&compiled, env.backend()), "episode {ep}");
        }
    }

    #[test]
    fn stage_never_decreases() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut env = small_env(EnvMode::Inference);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        env.reset(random_circuit(4, 10, 3)).unwrap();
        let mut last = Stage::Init;
        loop {
            let valid: Vec<usize> = env.action_mask().valid_actions().collect();
            let action = valid[rng.gen_range(0..valid.len())];
            let result = env.step(action).unwrap();
            assert!(result.info.stage >= last);
            last = result.info.stage;
            if result.done {
                break;
            }
        }
    }

    #[test]
    fn deterministic_trajectories_for_fixed_seeds() {
        let run = || {
            let mut env = small_env(EnvMode::Train);
            env.reset(random_circuit(4, 10, 11)).unwrap();
            let mut rewards = Vec::new();
            loop {
                let mask = env.action_mask();
                let action = mask.valid_actions().next().unwrap();
                let r = env.step(action).unwrap();
                rewards.push(r.reward);
                if r.done {
                    break;
                }
            }
            rewards
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn train_mode_emits_final_reward() {
        let mut env = small_env(EnvMode::Train);
        env.reset(benchmark_circuit(BenchmarkKind::Ghz, 3).unwrap())
            .unwrap();
        let mut last = None;
        loop {
            let mask = env.action_mask();
            let action = if mask.get(SKIP_ACTION) {
                SKIP_ACTION
            } else {
                mask.valid_actions().next().unwrap()
            };
            let r = env.step(action).unwrap();
            last = Some(r.clone());
            if r.done {
                break;
            }
        }
        let last = last.unwrap();
        assert!(last.info.final_reward.is_some());
    }

    #[test]
    fn width_overflow_rejected() {
        let mut env = small_env(EnvMode::Inference);
        let wide = QuantumCircuit::new(7, QubitSpace::Logical);
        assert!(matches!(
            env.reset(wide),
            Err(EnvError::WidthExceedsCap { .. })
        ));
        // Cap above the device size: the device check fires instead.
        let backend =
            synthetic_backend(TopologyKind::Line, 6, NoiseProfile::default_uniform()).unwrap();
        let mut cfg = EnvConfig::sized_for(&backend, 8);
        cfg.p_max = 8;
        let mut env = Env::new(cfg, backend, EnvMode::Inference, 0).unwrap();
        let wide = QuantumCircuit::new(7, QubitSpace::Logical);
        assert!(matches!(
            env.reset(wide),
            Err(EnvError::WidthExceedsDevice { .. })
        ));
    }
}
