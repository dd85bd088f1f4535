//! The six-stage pass catalog.
//!
//! Every pass is a pure circuit-to-circuit function: deterministic given its
//! inputs and a fixed internal seed, never mutating its input, and reporting
//! failure through [`PassOutcome`] rather than errors. Long-running passes
//! poll a [`Deadline`] at instruction-granularity checkpoints.

mod init;
mod layout;
mod optimize;
mod routing;
mod translate;
mod vf2;

pub use init::{
    apply_commutative_cancellation, apply_inverse_cancellation,
    apply_remove_identity_equivalent, apply_unroll_3q,
};
pub use layout::{
    apply_dense_layout, apply_noise_aware_layout, apply_trivial_layout, apply_vf2_layout,
};
pub use optimize::{apply_contract_idle_wires, apply_optimize_1q_chains, run_optimize_loop};
pub use routing::{
    apply_basic_swap, apply_lookahead_swap_lite, apply_sabre_swap_lite, apply_vf2_post_layout,
};
pub use translate::apply_basis_translation;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::backend::BackendModel;
use crate::circuit::QuantumCircuit;

/// Default node-expansion budget for the VF2-style searches.
pub const DEFAULT_VF2_CALL_LIMIT: usize = 10_000;

/// Default wall-clock timeout per pass.
pub const DEFAULT_PASS_TIMEOUT: Duration = Duration::from_secs(2);

/// Default beam width for the lookahead router.
pub const DEFAULT_BEAM_WIDTH: usize = 4;

/// The six ordered pipeline stages; episodes visit them monotonically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Init = 0,
    Layout = 1,
    Routing = 2,
    Translate = 3,
    Optimize = 4,
    Cleanup = 5,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Init,
        Stage::Layout,
        Stage::Routing,
        Stage::Translate,
        Stage::Optimize,
        Stage::Cleanup,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Stage> {
        Stage::ALL.get(i).copied()
    }

    pub fn next(self) -> Option<Stage> {
        Stage::from_index(self.index() + 1)
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Init => "init",
            Stage::Layout => "layout",
            Stage::Routing => "routing",
            Stage::Translate => "translate",
            Stage::Optimize => "optimize",
            Stage::Cleanup => "cleanup",
        }
    }
}

/// Stage-qualified selectable pass. Each id belongs to exactly one stage;
/// transformations shared across stages appear once per stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PassId {
    // Init
    Unroll3q,
    RemoveIdentityInit,
    CommutativeCancellationInit,
    InverseCancellation,
    // Layout
    TrivialLayout,
    DenseLayout,
    Vf2Layout,
    NoiseAwareLayout,
    // Routing
    BasicSwap,
    SabreSwapLite,
    LookaheadSwapLite,
    Vf2PostRouting,
    // Translate
    BasisTranslation,
    // Optimize
    RemoveIdentityOptimize,
    CommutativeCancellationOptimize,
    Optimize1qChains,
    ContractIdleWires,
    // Cleanup
    RemoveIdentityCleanup,
    Optimize1qChainsCleanup,
    Vf2PostCleanup,
}

impl PassId {
    pub const ALL: [PassId; 20] = [
        PassId::Unroll3q,
        PassId::RemoveIdentityInit,
        PassId::CommutativeCancellationInit,
        PassId::InverseCancellation,
        PassId::TrivialLayout,
        PassId::DenseLayout,
        PassId::Vf2Layout,
        PassId::NoiseAwareLayout,
        PassId::BasicSwap,
        PassId::SabreSwapLite,
        PassId::LookaheadSwapLite,
        PassId::Vf2PostRouting,
        PassId::BasisTranslation,
        PassId::RemoveIdentityOptimize,
        PassId::CommutativeCancellationOptimize,
        PassId::Optimize1qChains,
        PassId::ContractIdleWires,
        PassId::RemoveIdentityCleanup,
        PassId::Optimize1qChainsCleanup,
        PassId::Vf2PostCleanup,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&p| p == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<PassId> {
        Self::ALL.get(i).copied()
    }

    pub fn stage(self) -> Stage {
        match self {
            PassId::Unroll3q
            | PassId::RemoveIdentityInit
            | PassId::CommutativeCancellationInit
            | PassId::InverseCancellation => Stage::Init,
            PassId::TrivialLayout
            | PassId::DenseLayout
            | PassId::Vf2Layout
            | PassId::NoiseAwareLayout => Stage::Layout,
            PassId::BasicSwap
            | PassId::SabreSwapLite
            | PassId::LookaheadSwapLite
            | PassId::Vf2PostRouting => Stage::Routing,
            PassId::BasisTranslation => Stage::Translate,
            PassId::RemoveIdentityOptimize
            | PassId::CommutativeCancellationOptimize
            | PassId::Optimize1qChains
            | PassId::ContractIdleWires => Stage::Optimize,
            PassId::RemoveIdentityCleanup
            | PassId::Optimize1qChainsCleanup
            | PassId::Vf2PostCleanup => Stage::Cleanup,
        }
    }

    /// Mandatory passes cannot be skipped while their precondition is unmet.
    pub fn mandatory(self) -> bool {
        matches!(self, PassId::Unroll3q | PassId::BasisTranslation)
    }

    /// Passes that must have run successfully earlier in the episode before
    /// this one becomes selectable (any listed pass satisfies the
    /// requirement).
    pub fn prerequisites(self) -> &'static [PassId] {
        match self {
            PassId::Vf2PostRouting => &[
                PassId::BasicSwap,
                PassId::SabreSwapLite,
                PassId::LookaheadSwapLite,
            ],
            _ => &[],
        }
    }

    /// Passes that must run after this one before the stage can be skipped.
    /// The curated catalog has none; the masking machinery supports them.
    pub fn follow_ups(self) -> &'static [PassId] {
        &[]
    }

    pub fn name(self) -> &'static str {
        match self {
            PassId::Unroll3q => "unroll_3q",
            PassId::RemoveIdentityInit => "remove_identity_init",
            PassId::CommutativeCancellationInit => "commutative_cancellation_init",
            PassId::InverseCancellation => "inverse_cancellation",
            PassId::TrivialLayout => "trivial_layout",
            PassId::DenseLayout => "dense_layout",
            PassId::Vf2Layout => "vf2_layout",
            PassId::NoiseAwareLayout => "noise_aware_layout",
            PassId::BasicSwap => "basic_swap",
            PassId::SabreSwapLite => "sabre_swap_lite",
            PassId::LookaheadSwapLite => "lookahead_swap_lite",
            PassId::Vf2PostRouting => "vf2_post_layout_routing",
            PassId::BasisTranslation => "basis_translation",
            PassId::RemoveIdentityOptimize => "remove_identity_optimize",
            PassId::CommutativeCancellationOptimize => "commutative_cancellation_optimize",
            PassId::Optimize1qChains => "optimize_1q_chains",
            PassId::ContractIdleWires => "contract_idle_wires",
            PassId::RemoveIdentityCleanup => "remove_identity_cleanup",
            PassId::Optimize1qChainsCleanup => "optimize_1q_chains_cleanup",
            PassId::Vf2PostCleanup => "vf2_post_layout_cleanup",
        }
    }

    pub fn from_name(name: &str) -> Option<PassId> {
        Self::ALL.iter().copied().find(|p| p.name() == name)
    }

    /// Passes of one stage, in id order.
    pub fn of_stage(stage: Stage) -> Vec<PassId> {
        Self::ALL
            .iter()
            .copied()
            .filter(|p| p.stage() == stage)
            .collect()
    }
}

/// Machine-readable catalog enumeration for the CLI and docs.
pub fn catalog_json() -> String {
    #[derive(Serialize)]
    struct Row {
        id: usize,
        name: &'static str,
        stage: &'static str,
        mandatory: bool,
        prerequisites: Vec<&'static str>,
        follow_ups: Vec<&'static str>,
    }
    let rows: Vec<Row> = PassId::ALL
        .iter()
        .map(|&p| Row {
            id: p.index(),
            name: p.name(),
            stage: p.stage().name(),
            mandatory: p.mandatory(),
            prerequisites: p.prerequisites().iter().map(|q| q.name()).collect(),
            follow_ups: p.follow_ups().iter().map(|q| q.name()).collect(),
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("catalog serializes")
}

/// Injective map from logical qubits to physical qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    to_physical: Vec<usize>,
    at_physical: Vec<Option<usize>>,
}

impl Layout {
    pub fn new(to_physical: Vec<usize>, num_physical: usize) -> Self {
        let mut at_physical = vec![None; num_physical];
        for (l, &p) in to_physical.iter().enumerate() {
            assert!(p < num_physical, "physical index {p} out of range");
            assert!(at_physical[p].is_none(), "layout must be injective");
            at_physical[p] = Some(l);
        }
        Self {
            to_physical,
            at_physical,
        }
    }

    pub fn identity(num_logical: usize, num_physical: usize) -> Self {
        assert!(num_logical <= num_physical);
        Self::new((0..num_logical).collect(), num_physical)
    }

    pub fn num_logical(&self) -> usize {
        self.to_physical.len()
    }

    pub fn num_physical(&self) -> usize {
        self.at_physical.len()
    }

    pub fn physical_of(&self, logical: usize) -> Option<usize> {
        self.to_physical.get(logical).copied()
    }

    pub fn logical_at(&self, physical: usize) -> Option<usize> {
        self.at_physical.get(physical).copied().flatten()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.to_physical
    }

    /// Exchanges the logical occupants of two physical qubits (SWAP effect).
    pub fn swap_physicals(&mut self, a: usize, b: usize) {
        let la = self.at_physical[a];
        let lb = self.at_physical[b];
        if let Some(l) = la {
            self.to_physical[l] = b;
        }
        if let Some(l) = lb {
            self.to_physical[l] = a;
        }
        self.at_physical.swap(a, b);
    }

    /// Composes with a physical-to-physical relabeling.
    pub fn compose_relabel(&self, relabel: &[usize]) -> Layout {
        let mapped: Vec<usize> = self.to_physical.iter().map(|&p| relabel[p]).collect();
        Layout::new(mapped, self.num_physical())
    }
}

/// Why a pass reported failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    Timeout,
    NoMappingFound,
    TooManyQubits,
    MissingLayout,
    PreconditionNotMet,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let text = match self {
            FailureReason::Timeout => "timeout",
            FailureReason::NoMappingFound => "no mapping found",
            FailureReason::TooManyQubits => "too many qubits",
            FailureReason::MissingLayout => "missing layout",
            FailureReason::PreconditionNotMet => "precondition not met",
        };
        f.write_str(text)
    }
}

/// Result of applying one pass. A failed outcome carries the input circuit
/// unchanged.
#[derive(Debug, Clone)]
pub struct PassOutcome {
    pub circuit: QuantumCircuit,
    pub changed: bool,
    pub layout: Option<Layout>,
    pub failed: bool,
    pub failure_reason: Option<FailureReason>,
    pub elapsed: f64,
}

impl PassOutcome {
    pub fn unchanged(circuit: &QuantumCircuit, layout: Option<&Layout>) -> Self {
        Self {
            circuit: circuit.clone(),
            changed: false,
            layout: layout.cloned(),
            failed: false,
            failure_reason: None,
            elapsed: 0.0,
        }
    }

    pub fn changed(circuit: QuantumCircuit, layout: Option<Layout>) -> Self {
        Self {
            circuit,
            changed: true,
            layout,
            failed: false,
            failure_reason: None,
            elapsed: 0.0,
        }
    }

    pub fn failed(circuit: &QuantumCircuit, layout: Option<&Layout>, reason: FailureReason) -> Self {
        Self {
            circuit: circuit.clone(),
            changed: false,
            layout: layout.cloned(),
            failed: true,
            failure_reason: Some(reason),
            elapsed: 0.0,
        }
    }
}

/// Wall-clock budget polled by interruptible passes.
#[derive(Debug, Clone, Copy)]
pub struct Deadline(Option<Instant>);

impl Deadline {
    pub fn none() -> Self {
        Deadline(None)
    }

    pub fn after(budget: Duration) -> Self {
        Deadline(Some(Instant::now() + budget))
    }

    /// Already expired; used to exercise timeout paths deterministically.
    pub fn expired_now() -> Self {
        Deadline(Some(Instant::now() - Duration::from_millis(1)))
    }

    pub fn expired(&self) -> bool {
        match self.0 {
            Some(t) => Instant::now() >= t,
            None => false,
        }
    }
}

/// Shared knobs for pass execution.
#[derive(Debug, Clone, Copy)]
pub struct PassContext {
    pub deadline: Deadline,
    pub seed: u64,
    pub vf2_call_limit: usize,
    pub beam_width: usize,
}

impl Default for PassContext {
    fn default() -> Self {
        Self {
            deadline: Deadline::none(),
            seed: 0,
            vf2_call_limit: DEFAULT_VF2_CALL_LIMIT,
            beam_width: DEFAULT_BEAM_WIDTH,
        }
    }
}

impl PassContext {
    pub fn with_timeout(budget: Duration) -> Self {
        Self {
            deadline: Deadline::after(budget),
            ..Self::default()
        }
    }
}

/// Applies a catalog pass by id, timing it. `layout` is the episode's
/// current layout (required by routing, advisory elsewhere).
pub fn apply_pass(
    id: PassId,
    circuit: &QuantumCircuit,
    backend: &BackendModel,
    layout: Option<&Layout>,
    ctx: &PassContext,
) -> PassOutcome {
    let start = Instant::now();
    let mut outcome = match id {
        PassId::Unroll3q => apply_unroll_3q(circuit, layout),
        PassId::RemoveIdentityInit
        | PassId::RemoveIdentityOptimize
        | PassId::RemoveIdentityCleanup => apply_remove_identity_equivalent(circuit, layout),
        PassId::CommutativeCancellationInit | PassId::CommutativeCancellationOptimize => {
            apply_commutative_cancellation(circuit, layout)
        }
        PassId::InverseCancellation => apply_inverse_cancellation(circuit, layout),
        PassId::TrivialLayout => apply_trivial_layout(circuit, backend, layout),
        PassId::DenseLayout => apply_dense_layout(circuit, backend, layout),
        PassId::Vf2Layout => {
            apply_vf2_layout(circuit, backend, layout, ctx.vf2_call_limit, &ctx.deadline)
        }
        PassId::NoiseAwareLayout => apply_noise_aware_layout(circuit, backend, layout),
        PassId::BasicSwap => apply_basic_swap(circuit, backend, layout),
        PassId::SabreSwapLite => {
            apply_sabre_swap_lite(circuit, backend, layout, ctx.seed, &ctx.deadline)
        }
        PassId::LookaheadSwapLite => {
            apply_lookahead_swap_lite(circuit, backend, layout, ctx.beam_width, &ctx.deadline)
        }
        PassId::Vf2PostRouting | PassId::Vf2PostCleanup => {
            apply_vf2_post_layout(circuit, backend, layout, ctx.vf2_call_limit, &ctx.deadline)
        }
        PassId::BasisTranslation => apply_basis_translation(circuit, layout),
        PassId::Optimize1qChains | PassId::Optimize1qChainsCleanup => {
            apply_optimize_1q_chains(circuit, layout)
        }
        PassId::ContractIdleWires => apply_contract_idle_wires(circuit, layout),
    };
    outcome.elapsed = start.elapsed().as_secs_f64();
    debug_assert!(
        !outcome.failed || outcome.circuit == *circuit,
        "failed pass must not mutate the circuit"
    );
    outcome
}
