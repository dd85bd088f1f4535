//! `passforge bench`: strong-scaling structure. Records the pass sequence
//! chosen on a small instance and replays it at larger sizes, against the
//! fidelity-optimized pipeline, reporting depth/gate/compile-time curves.

use std::io::Write;

use anyhow::{bail, Context, Result};

use passforge_core::backend::BackendModel;
use passforge_core::baselines::{fixed_pipeline, greedy_select_traced, PipelineKind};
use passforge_core::circuit::generate::{benchmark_circuit, BenchmarkKind};
use passforge_core::circuit::QuantumCircuit;
use passforge_core::env::{Env, EnvConfig, EnvMode, SKIP_ACTION};
use passforge_core::metrics::{quality_report, QualityReport};
use passforge_core::policy::checkpoint::checkpoint_load_for_env;
use passforge_core::ppo::infer_pipeline;

use crate::config::RunConfig;
use crate::output::RunDir;

/// Replays a recorded action sequence at a new size, substituting forced
/// resolutions where the recording no longer applies, then finishes the
/// episode with SKIPs.
fn replay(
    actions: &[usize],
    circuit: &QuantumCircuit,
    backend: &BackendModel,
    env_cfg: &EnvConfig,
) -> Result<(QuantumCircuit, QualityReport, f64)> {
    let start = std::time::Instant::now();
    let mut env = Env::new(env_cfg.clone(), backend.clone(), EnvMode::Inference, 0)?;
    env.reset(circuit.clone())?;
    let mut done = false;
    for &action in actions {
        if done {
            break;
        }
        let mask = env.action_mask();
        let take = if mask.get(action) {
            action
        } else if mask.num_valid() == 1 {
            mask.valid_actions().next().unwrap()
        } else {
            continue; // recorded action inapplicable at this size
        };
        done = env.step(take)?.done;
    }
    while !done {
        let mask = env.action_mask();
        let action = if mask.get(SKIP_ACTION) {
            SKIP_ACTION
        } else {
            mask.valid_actions().next().unwrap()
        };
        done = env.step(action)?.done;
    }
    let (compiled, _) = env.take_result().expect("episode finished");
    let report = quality_report(&compiled, backend)?;
    Ok((compiled, report, start.elapsed().as_secs_f64()))
}

pub fn cmd_bench(cfg: &RunConfig, run: &RunDir) -> Result<()> {
    let backend = cfg.backend.build()?;
    let max_n = cfg.bench.sizes.iter().copied().max().unwrap_or(0);
    if cfg.bench.sizes.is_empty() {
        bail!("bench.sizes must not be empty");
    }
    if max_n > backend.num_physical {
        bail!(
            "bench size {} exceeds the {}-qubit backend",
            max_n,
            backend.num_physical
        );
    }
    let policy = cfg
        .bench
        .checkpoint
        .as_ref()
        .map(|path| {
            checkpoint_load_for_env(path, cfg.env.obs_hash())
                .with_context(|| format!("loading checkpoint {}", path.display()))
        })
        .transpose()?;
    // Without a checkpoint the observation dims are unconstrained; widen the
    // replay environment to fit the largest instance.
    let mut env_cfg = cfg.env.clone();
    if policy.is_none() {
        env_cfg.q_max = env_cfg.q_max.max(max_n);
    }
    let cfg = {
        let mut c = cfg.clone();
        c.env = env_cfg;
        c
    };
    let cfg = &cfg;

    let mut csv = run.csv(
        "bench.csv",
        "kind,n,method,gates_1q,gates_2q,depth,compile_ms",
    )?;
    for kind_name in &cfg.bench.kinds {
        let kind = BenchmarkKind::from_name(kind_name)
            .with_context(|| format!("unknown benchmark `{kind_name}`"))?;
        let base = benchmark_circuit(kind, cfg.bench.base_n)?;
        // Record the transferred sequence on the small instance.
        let actions: Vec<usize> = match &policy {
            Some(params) => infer_pipeline(params, &base, &backend, &cfg.env)?
                .trace
                .iter()
                .map(|t| t.action)
                .collect(),
            None => {
                // Greedy stands in when no checkpoint is configured.
                let (_, trace) = greedy_select_traced(&base, &backend, &cfg.env)?;
                trace.iter().map(|t| t.action).collect()
            }
        };
        for &n in &cfg.bench.sizes {
            let circuit = benchmark_circuit(kind, n)?;
            let (_, report, seconds) = replay(&actions, &circuit, &backend, &cfg.env)?;
            writeln!(
                csv,
                "{kind_name},{n},transferred,{},{},{},{:.3}",
                report.gate_counts.one_qubit,
                report.gate_counts.two_qubit,
                report.depth,
                seconds * 1e3
            )?;
            let fid = fixed_pipeline(PipelineKind::FidelityOptimized, &circuit, &backend)?;
            writeln!(
                csv,
                "{kind_name},{n},fidelity,{},{},{},{:.3}",
                fid.report.gate_counts.one_qubit,
                fid.report.gate_counts.two_qubit,
                fid.report.depth,
                fid.compile_seconds * 1e3
            )?;
        }
        println!("scaled {kind_name} from n={} over {:?}", cfg.bench.base_n, cfg.bench.sizes);
    }
    Ok(())
}
