//! Dynamic action masking: stage constraints, mandatory-pass enforcement,
//! failure tracking, prerequisites, and follow-up dependencies.

use std::collections::BTreeSet;

use crate::backend::BackendModel;
use crate::circuit::QubitSpace;
use crate::passes::{PassId, Stage};

use super::{ActionMask, EnvConfig, EpisodeState, NUM_ACTIONS, SKIP_ACTION, WIND_DOWN_MARGIN};

/// Catalog metadata access, indirected so dependency machinery can be unit
/// tested against synthetic tables.
pub struct CatalogView {
    pub stage_of: fn(PassId) -> Stage,
    pub prerequisites: fn(PassId) -> &'static [PassId],
    pub follow_ups: fn(PassId) -> &'static [PassId],
}

impl CatalogView {
    pub fn real() -> Self {
        Self {
            stage_of: PassId::stage,
            prerequisites: PassId::prerequisites,
            follow_ups: PassId::follow_ups,
        }
    }
}

/// Hard constraint that must be resolved before the current stage may end.
fn unresolved_constraint(state: &EpisodeState, backend: &BackendModel) -> Option<PassId> {
    match state.stage {
        Stage::Init if !state.circuit.free_of_three_qubit_gates() => Some(PassId::Unroll3q),
        Stage::Layout if state.layout.is_none() => Some(PassId::TrivialLayout),
        Stage::Routing if has_uncoupled_gate(state, backend) => Some(PassId::BasicSwap),
        Stage::Translate if !state.circuit.all_in_basis() => Some(PassId::BasisTranslation),
        _ => None,
    }
}

fn has_uncoupled_gate(state: &EpisodeState, backend: &BackendModel) -> bool {
    match state.circuit.qubit_space {
        QubitSpace::Physical => state
            .circuit
            .instructions()
            .iter()
            .filter(|i| i.kind.arity() == 2)
            .any(|i| !backend.has_edge(i.qubits()[0], i.qubits()[1])),
        QubitSpace::Logical => {
            let Some(layout) = &state.layout else {
                // No layout yet; routing cannot proceed, and the mask will
                // not reach the routing stage in this situation.
                return false;
            };
            state
                .circuit
                .instructions()
                .iter()
                .filter(|i| i.kind.arity() == 2)
                .any(|i| {
                    let pa = layout.physical_of(i.qubits()[0]).unwrap();
                    let pb = layout.physical_of(i.qubits()[1]).unwrap();
                    !backend.has_edge(pa, pb)
                })
        }
    }
}

pub(crate) fn mask_for(
    state: &EpisodeState,
    cfg: &EnvConfig,
    backend: &BackendModel,
    catalog: &CatalogView,
) -> ActionMask {
    let constraint = unresolved_constraint(state, backend);

    // Wind-down: close to the step cap only resolution passes and SKIP stay
    // enabled so the episode is guaranteed to finish within the cap.
    let winding_down = state.steps + WIND_DOWN_MARGIN >= cfg.max_episode_steps;
    if winding_down {
        let mut bits = vec![false; NUM_ACTIONS];
        match constraint {
            Some(pass) => bits[pass.index()] = true,
            None => bits[SKIP_ACTION] = true,
        }
        return ActionMask::new(bits);
    }

    let mut bits = vec![false; NUM_ACTIONS];
    for id in PassId::ALL {
        if (catalog.stage_of)(id) != state.stage {
            continue;
        }
        if state.failed_passes.contains(&id) {
            continue;
        }
        let prereqs = (catalog.prerequisites)(id);
        if !prereqs.is_empty() && !prereqs.iter().any(|p| state.succeeded_passes.contains(p)) {
            continue;
        }
        bits[id.index()] = true;
    }

    match state.stage {
        Stage::Translate => {
            // Only the mandatory translation until in-basis, then only SKIP.
            if state.circuit.all_in_basis() {
                bits[PassId::BasisTranslation.index()] = false;
            }
        }
        Stage::Layout => {
            // If every layout pass failed and no layout exists, fall back to
            // the trivial layout regardless of its failure mark.
            if state.layout.is_none() && !bits.iter().take(NUM_ACTIONS - 1).any(|&b| b) {
                bits[PassId::TrivialLayout.index()] = true;
            }
        }
        _ => {}
    }

    // SKIP is enabled unless a hard constraint or a pending same-stage
    // follow-up blocks stage exit.
    let follow_ups_pending = pending_in_stage(state, catalog);
    bits[SKIP_ACTION] = constraint.is_none() && follow_ups_pending.is_empty();
    for id in follow_ups_pending {
        if !state.failed_passes.contains(&id) {
            bits[id.index()] = true;
        }
    }

    ActionMask::new(bits)
}

fn pending_in_stage(state: &EpisodeState, catalog: &CatalogView) -> BTreeSet<PassId> {
    state
        .pending_follow_ups
        .iter()
        .copied()
        .filter(|&p| (catalog.stage_of)(p) == state.stage)
        .collect()
}
