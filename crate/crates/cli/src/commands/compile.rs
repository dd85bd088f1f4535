//! `passforge compile`: frozen-policy compilation of one circuit.

use std::io::Write;

use anyhow::{Context, Result};

use passforge_core::circuit::qasm::serialize_qasm_subset;
use passforge_core::policy::checkpoint::checkpoint_load_for_env;
use passforge_core::ppo::infer_pipeline;

use crate::config::{load_circuit, RunConfig};
use crate::output::RunDir;

pub fn cmd_compile(cfg: &RunConfig, run: &RunDir) -> Result<()> {
    let checkpoint = cfg
        .compile
        .checkpoint
        .as_ref()
        .context("compile.checkpoint is required")?;
    let circuit_path = cfg
        .compile
        .circuit
        .as_ref()
        .context("compile.circuit is required")?;
    let backend = cfg.backend.build()?;
    let circuit = load_circuit(circuit_path)?;
    let params = checkpoint_load_for_env(checkpoint, cfg.env.obs_hash())
        .with_context(|| format!("loading checkpoint {}", checkpoint.display()))?;

    let output = infer_pipeline(&params, &circuit, &backend, &cfg.env)?;

    run.write_text("compiled.qasm", &serialize_qasm_subset(&output.circuit))?;
    run.write_json("report.json", &output.report)?;
    let mut trace = std::fs::File::create(run.file("trace.jsonl"))?;
    for step in &output.trace {
        writeln!(trace, "{}", serde_json::to_string(step)?)?;
    }
    println!(
        "compiled {} -> {} ({} instructions, depth {}, ESP {:.5}; inference {:.1}% of {:.1} ms)",
        circuit_path.display(),
        run.file("compiled.qasm").display(),
        output.report.gate_counts.total(),
        output.report.depth,
        output.report.esp,
        100.0 * output.inference_seconds / output.total_seconds.max(1e-12),
        output.total_seconds * 1e3,
    );
    Ok(())
}
