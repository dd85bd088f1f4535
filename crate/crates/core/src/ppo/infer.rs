//! Frozen-policy inference: greedy masked argmax per step, no reference
//! compilation and no reward computation.

use std::time::Instant;

use serde::Serialize;

use crate::backend::BackendModel;
use crate::circuit::QuantumCircuit;
use crate::env::{Env, EnvConfig, EnvMode, StepInfo};
use crate::metrics::{quality_report, QualityReport};
use crate::passes::Stage;
use crate::policy::{forward, Mode, PolicyParams};

use super::TrainError;

/// One inference decision, serializable for episode traces.
#[derive(Debug, Clone, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub stage: Stage,
    pub action: usize,
    pub action_name: String,
    pub changed: bool,
    pub failed: bool,
    pub quality: f64,
}

#[derive(Debug, Clone)]
pub struct InferenceOutput {
    pub circuit: QuantumCircuit,
    pub report: QualityReport,
    pub trace: Vec<TraceStep>,
    /// Wall time spent in policy forward passes and the argmax.
    pub inference_seconds: f64,
    /// End-to-end compile wall time.
    pub total_seconds: f64,
}

/// Compiles one circuit with the frozen policy.
pub fn infer_pipeline(
    params: &PolicyParams<f32>,
    circuit: &QuantumCircuit,
    backend: &BackendModel,
    env_cfg: &EnvConfig,
) -> Result<InferenceOutput, TrainError> {
    let total_start = Instant::now();
    let mut env = Env::new(env_cfg.clone(), backend.clone(), EnvMode::Inference, 0)?;
    let mut obs = env.reset(circuit.clone())?;
    let mut trace = Vec::new();
    let mut inference_seconds = 0.0;
    let mut step_idx = 0usize;
    loop {
        let mask = env.action_mask();
        let infer_start = Instant::now();
        let input = obs.policy_input::<f32>();
        let tape = forward(params, &input, mask.as_slice(), Mode::Eval)?;
        let action = tape
            .probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .expect("probabilities are nonempty");
        inference_seconds += infer_start.elapsed().as_secs_f64();
        debug_assert!(mask.get(action), "argmax of a masked softmax is valid");

        let result = env.step(action)?;
        let info: &StepInfo = &result.info;
        trace.push(TraceStep {
            step: step_idx,
            stage: info.stage,
            action,
            action_name: info
                .applied
                .map(|p| p.name().to_string())
                .unwrap_or_else(|| "skip".to_string()),
            changed: info.changed,
            failed: info.pass_failed,
            quality: info.quality,
        });
        step_idx += 1;
        obs = result.observation;
        if result.done {
            break;
        }
    }
    let (compiled, _) = env.take_result().expect("episode finished");
    let report = quality_report(&compiled, backend).map_err(crate::env::EnvError::Metrics)?;
    Ok(InferenceOutput {
        circuit: compiled,
        report,
        trace,
        inference_seconds,
        total_seconds: total_start.elapsed().as_secs_f64(),
    })
}
