//! `passforge bruteforce`: exhaustive per-circuit selective compilation over
//! a small toggle set; emits the heatmap table.

use std::io::Write;

use anyhow::{bail, Context, Result};

use passforge_core::baselines::brute_force_selective;
use passforge_core::circuit::generate::{benchmark_circuit, BenchmarkKind};
use passforge_core::passes::PassId;

use crate::config::{load_circuit, RunConfig};
use crate::output::RunDir;

pub fn cmd_bruteforce(cfg: &RunConfig, run: &RunDir) -> Result<()> {
    let backend = cfg.backend.build()?;
    let circuit = match (&cfg.bruteforce.circuit, &cfg.bruteforce.benchmark) {
        (Some(path), _) => load_circuit(path)?,
        (None, Some(entry)) => {
            let kind = BenchmarkKind::from_name(&entry.kind)
                .with_context(|| format!("unknown benchmark `{}`", entry.kind))?;
            benchmark_circuit(kind, entry.n)?
        }
        (None, None) => bail!("bruteforce requires either a circuit file or a benchmark entry"),
    };
    let toggles: Vec<PassId> = cfg
        .bruteforce
        .toggles
        .iter()
        .map(|name| {
            PassId::from_name(name).with_context(|| format!("unknown pass `{name}`"))
        })
        .collect::<Result<_>>()?;

    let (best, rows) = brute_force_selective(&circuit, &backend, &toggles)?;

    let mut csv = run.csv("bruteforce.csv", "bitmask,config,esp,gates,depth,compile_ms")?;
    for row in &rows {
        let config: String = (0..toggles.len())
            .map(|i| if row.bitmask & (1 << i) != 0 { '1' } else { '0' })
            .collect();
        writeln!(
            csv,
            "{},{config},{:.6},{},{},{:.3}",
            row.bitmask, row.esp, row.gates, row.depth, row.compile_ms
        )?;
    }
    let best_row = rows.iter().find(|r| r.bitmask == best).unwrap();
    run.write_json(
        "best_config.json",
        &serde_json::json!({
            "bitmask": best,
            "passes_enabled": toggles
                .iter()
                .enumerate()
                .filter(|(i, _)| best & (1 << i) != 0)
                .map(|(_, p)| p.name())
                .collect::<Vec<_>>(),
            "esp": best_row.esp,
            "gates": best_row.gates,
            "depth": best_row.depth,
        }),
    )?;
    println!(
        "enumerated {} configurations over {} toggles; best ESP {:.5} at mask {:05b}",
        rows.len(),
        toggles.len(),
        best_row.esp,
        best
    );
    Ok(())
}
