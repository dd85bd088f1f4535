//! `passforge train`: masked PPO over the configured backend pool.

use std::io::Write;

use anyhow::{Context, Result};

use passforge_core::policy::checkpoint::checkpoint_save;
use passforge_core::ppo::{config_hash, shape_for, train};

use crate::config::RunConfig;
use crate::output::RunDir;

pub fn cmd_train(cfg: &RunConfig, run: &RunDir) -> Result<()> {
    let backend = cfg.backend.build()?;
    let mut pool = vec![backend.clone()];
    for i in 0..cfg.train.perturbed_backends {
        pool.push(backend.perturb(cfg.ppo.seed.wrapping_add(i as u64 + 1)));
    }
    let shape = shape_for(&cfg.env, &cfg.train.encoder_widths, &cfg.train.trunk_widths);
    let ckpt_hash = config_hash(&cfg.env, &shape);

    let mut log_file = run.csv(
        "training_log.csv",
        "update,steps,mean_episode_reward,mean_esp_ratio,mean_episode_len,policy_loss,value_loss,entropy,clip_fraction,grad_norm",
    )?;
    let checkpoint_every = cfg.ppo.checkpoint_every.max(1);
    let run_path = run.path.clone();

    let output = train(
        &cfg.ppo,
        &cfg.env,
        &shape,
        &pool,
        &cfg.curriculum,
        |update, params, row| {
            let _ = writeln!(
                log_file,
                "{},{},{:.6},{:.6},{:.3},{:.6},{:.6},{:.6},{:.4},{:.6}",
                row.update,
                row.steps,
                row.mean_episode_reward,
                row.mean_esp_ratio,
                row.mean_episode_len,
                row.policy_loss,
                row.value_loss,
                row.entropy,
                row.clip_fraction,
                row.grad_norm
            );
            if (update + 1) % checkpoint_every == 0 {
                let path = run_path.join(format!("checkpoint-u{update:04}.ckpt"));
                let _ = checkpoint_save(params, ckpt_hash, &path);
            }
            println!(
                "update {:>4}  steps {:>8}  ep_reward {:>8.4}  esp_ratio {:>6.4}  entropy {:>6.4}",
                row.update, row.steps, row.mean_episode_reward, row.mean_esp_ratio, row.entropy
            );
        },
    )
    .context("training failed")?;

    let final_path = run.file("checkpoint.ckpt");
    checkpoint_save(&output.params, ckpt_hash, &final_path)
        .context("writing final checkpoint")?;
    println!(
        "trained {} updates; final checkpoint at {}",
        output.log.len(),
        final_path.display()
    );
    Ok(())
}
