//! Masked PPO with generalized advantage estimation: parallel rollout
//! collection, clipped-objective updates with exact gradients, and the
//! training curriculum over perturbed backends.

mod infer;

pub use infer::{infer_pipeline, InferenceOutput, TraceStep};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::BackendModel;
use crate::circuit::generate::random_circuit;
use crate::env::{derive, Env, EnvConfig, EnvError, EnvMode, Observation, NUM_ACTIONS};
use crate::policy::{
    accumulate, backward, forward, init_params, scale, zero_gradients, GradSpec, Gradients, Mode,
    PolicyError, PolicyParams, PolicyShape,
};
use crate::scalar::{soft_normalize, Scalar};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("environment error: {0}")]
    Env(#[from] EnvError),
    #[error("policy error: {0}")]
    Policy(#[from] PolicyError),
    #[error("rollout_steps {rollout} must be divisible by batch_size {batch} and num_envs {envs}")]
    BadShape {
        rollout: usize,
        batch: usize,
        envs: usize,
    },
    #[error("non-finite loss at update {update}; diagnostic: {diagnostic}")]
    NanLoss { update: usize, diagnostic: String },
}

/// PPO hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub learning_rate: f64,
    pub rollout_steps: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub epochs_per_update: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub num_envs: usize,
    pub total_steps: usize,
    pub seed: u64,
    /// Checkpoint cadence in updates (consumed by the training harness).
    pub checkpoint_every: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            rollout_steps: 2048,
            batch_size: 64,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            epochs_per_update: 10,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            num_envs: 8,
            total_steps: 65_536,
            seed: 0,
            checkpoint_every: 5,
        }
    }
}

/// Training circuit distribution: widths sampled uniformly, depth targets
/// sampled from `depth_factor * n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Curriculum {
    pub min_qubits: usize,
    pub max_qubits: usize,
    pub min_depth_factor: usize,
    pub max_depth_factor: usize,
}

impl Default for Curriculum {
    fn default() -> Self {
        Self {
            min_qubits: 4,
            max_qubits: 6,
            min_depth_factor: 2,
            max_depth_factor: 5,
        }
    }
}

impl Curriculum {
    pub fn sample(&self, seed: u64) -> crate::circuit::QuantumCircuit {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(self.min_qubits..=self.max_qubits);
        let depth = n * rng.gen_range(self.min_depth_factor..=self.max_depth_factor);
        random_circuit(n, depth, derive(seed, 0x51))
    }
}

/// Policy shape for an observation layout, with configurable encoder and
/// trunk widths. The checkpoint config hash combines both fingerprints.
pub fn shape_for(env_cfg: &EnvConfig, encoder_widths: &[usize], trunk_widths: &[usize]) -> PolicyShape {
    PolicyShape {
        pre_input: env_cfg.pre_input_dim(),
        post_input: env_cfg.post_input_dim(),
        encoder_widths: encoder_widths.to_vec(),
        aux_input: env_cfg.aux_dim(),
        trunk_widths: trunk_widths.to_vec(),
        num_actions: NUM_ACTIONS,
    }
}

/// Combined fingerprint stored in checkpoints: observation layout plus
/// network shape.
pub fn config_hash(env_cfg: &EnvConfig, shape: &PolicyShape) -> u64 {
    env_cfg.obs_hash() ^ shape.hash().rotate_left(17)
}

/// Standard GAE recursion; `last_value` bootstraps a truncated tail.
/// Returns (advantages, returns) with `returns = advantages + values`.
pub fn compute_gae<S: Scalar>(
    rewards: &[S],
    values: &[S],
    dones: &[bool],
    gamma: S,
    lambda: S,
    last_value: S,
) -> (Vec<S>, Vec<S>) {
    assert_eq!(rewards.len(), values.len());
    assert_eq!(rewards.len(), dones.len());
    let n = rewards.len();
    let mut advantages = vec![S::zero(); n];
    let mut next_adv = S::zero();
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let not_done = if dones[t] { S::zero() } else { S::one() };
        let delta = rewards[t] + gamma * next_value * not_done - values[t];
        next_adv = delta + gamma * lambda * not_done * next_adv;
        advantages[t] = next_adv;
        next_value = values[t];
    }
    let returns = advantages
        .iter()
        .zip(values)
        .map(|(&a, &v)| a + v)
        .collect();
    (advantages, returns)
}

/// One flattened training sample.
#[derive(Debug, Clone)]
pub struct LossSample<S> {
    pub observation: Observation,
    pub mask: Vec<bool>,
    pub action: usize,
    pub old_log_prob: S,
    pub advantage: S,
    pub ret: S,
    /// Per-sample dropout stream.
    pub dropout_seed: u64,
}

/// Loss components of one batch.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossParts {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Fixed chunk count for gradient reduction, independent of thread count so
/// results are bit-identical at any parallelism level.
const GRAD_CHUNKS: usize = 8;

/// Clipped-surrogate PPO loss with exact gradients, averaged over the batch.
///
/// `-E[min(rho A, clip(rho) A)] + value_coef * MSE - entropy_coef * H`.
pub fn ppo_loss<S: Scalar>(
    params: &PolicyParams<S>,
    batch: &[LossSample<S>],
    clip_epsilon: S,
    value_coef: S,
    entropy_coef: S,
    train_dropout: bool,
) -> Result<(LossParts, Gradients<S>), PolicyError> {
    let b = batch.len().max(1);
    let inv_b = S::one() / S::from_f64_lossy(b as f64);

    let chunk_len = batch.len().div_ceil(GRAD_CHUNKS).max(1);
    let chunks: Vec<&[LossSample<S>]> = batch.chunks(chunk_len).collect();
    let partials: Vec<Result<(LossParts, Gradients<S>), PolicyError>> = chunks
        .par_iter()
        .map(|chunk| {
            let mut grads = zero_gradients(params);
            let mut parts = LossParts::default();
            for sample in chunk.iter() {
                let mode = if train_dropout {
                    Mode::Train {
                        dropout_seed: sample.dropout_seed,
                    }
                } else {
                    Mode::Eval
                };
                let input = sample.observation.policy_input::<S>();
                let tape = forward(params, &input, &sample.mask, mode)?;
                let probs = &tape.probs;
                let p_a = probs[sample.action];
                let logp = p_a.max(S::from_f64_lossy(1e-300)).ln();
                let rho = (logp - sample.old_log_prob).exp();
                let adv = sample.advantage;
                let clipped_rho = rho.min(S::one() + clip_epsilon).max(S::one() - clip_epsilon);
                let unclipped = rho * adv;
                let clipped = clipped_rho * adv;
                let surrogate = unclipped.min(clipped);
                let clip_active = unclipped > clipped;

                // Entropy over the unmasked support.
                let mut entropy = S::zero();
                for (&p, &ok) in probs.iter().zip(&sample.mask) {
                    if ok && p > S::zero() {
                        entropy -= p * p.ln();
                    }
                }
                let value_err = tape.value - sample.ret;

                parts.policy -= surrogate.to_f64_lossy() / b as f64;
                parts.value += (value_err * value_err).to_f64_lossy() / b as f64;
                parts.entropy += entropy.to_f64_lossy() / b as f64;
                if clip_active {
                    parts.clip_fraction += 1.0 / b as f64;
                }

                // d loss / d logp_a = -(ds/drho) * rho / B.
                let ds_drho = if clip_active { S::zero() } else { adv };
                let dlogp = -ds_drho * rho * inv_b;
                // d loss / d logits via softmax jacobian, plus entropy term.
                let mut d_logits = vec![S::zero(); probs.len()];
                for (j, (&p, &ok)) in probs.iter().zip(&sample.mask).enumerate() {
                    if !ok {
                        continue;
                    }
                    let indicator = if j == sample.action { S::one() } else { S::zero() };
                    let mut g = dlogp * (indicator - p);
                    if p > S::zero() {
                        // d(-c_e H)/dz_j = c_e * p_j (ln p_j + H).
                        g += entropy_coef * p * (p.ln() + entropy) * inv_b;
                    }
                    d_logits[j] = g;
                }
                let d_value = value_coef
                    * S::from_f64_lossy(2.0)
                    * value_err
                    * inv_b;
                backward(params, &tape, &GradSpec { d_logits, d_value }, &mut grads);
            }
            Ok((parts, grads))
        })
        .collect();

    let mut total_parts = LossParts::default();
    let mut grads = zero_gradients(params);
    for partial in partials {
        let (parts, g) = partial?;
        total_parts.policy += parts.policy;
        total_parts.value += parts.value;
        total_parts.entropy += parts.entropy;
        total_parts.clip_fraction += parts.clip_fraction;
        accumulate(&mut grads, &g);
    }
    total_parts.total = total_parts.policy + value_coef.to_f64_lossy() * total_parts.value
        - entropy_coef.to_f64_lossy() * total_parts.entropy;
    Ok((total_parts, grads))
}

/// Adam optimizer state shaped like the parameters.
pub struct Adam<S> {
    m: Gradients<S>,
    v: Gradients<S>,
    step: usize,
}

impl<S: Scalar> Adam<S> {
    pub fn new(params: &PolicyParams<S>) -> Self {
        Self {
            m: zero_gradients(params),
            v: zero_gradients(params),
            step: 0,
        }
    }

    pub fn apply(&mut self, params: &mut PolicyParams<S>, grads: &Gradients<S>, lr: S) {
        self.step += 1;
        let beta1 = S::from_f64_lossy(0.9);
        let beta2 = S::from_f64_lossy(0.999);
        let eps = S::from_f64_lossy(1e-8);
        let t = S::from_f64_lossy(self.step as f64);
        let bias1 = S::one() - beta1.powf(t);
        let bias2 = S::one() - beta2.powf(t);

        // Walk all tensors in lockstep via the fixed tensor order.
        let g_tensors: Vec<Vec<S>> = grads.tensors().iter().map(|(t, _)| t.to_vec()).collect();
        let mut idx = 0;
        let mut m_copy = Vec::new();
        self.m.for_each_tensor_mut(|t| {
            for (mi, &gi) in t.iter_mut().zip(&g_tensors[idx]) {
                *mi = beta1 * *mi + (S::one() - beta1) * gi;
            }
            m_copy.push(t.to_vec());
            idx += 1;
        });
        idx = 0;
        let mut v_copy = Vec::new();
        self.v.for_each_tensor_mut(|t| {
            for (vi, &gi) in t.iter_mut().zip(&g_tensors[idx]) {
                *vi = beta2 * *vi + (S::one() - beta2) * gi * gi;
            }
            v_copy.push(t.to_vec());
            idx += 1;
        });
        idx = 0;
        params.for_each_tensor_mut(|t| {
            for ((pi, &mi), &vi) in t.iter_mut().zip(&m_copy[idx]).zip(&v_copy[idx]) {
                let m_hat = mi / bias1;
                let v_hat = vi / bias2;
                *pi -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            idx += 1;
        });
    }
}

/// Global L2-norm gradient clipping.
pub fn clip_grad_norm<S: Scalar>(grads: &mut Gradients<S>, max_norm: S) -> S {
    let mut sq = S::zero();
    for (t, _) in grads.tensors() {
        for &g in t {
            sq += g * g;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > S::zero() {
        scale(grads, max_norm / norm);
    }
    norm
}

/// One row of the training log CSV.
#[derive(Debug, Clone, Serialize)]
pub struct UpdateLog {
    pub update: usize,
    pub steps: usize,
    pub mean_episode_reward: f64,
    pub mean_esp_ratio: f64,
    pub mean_episode_len: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
}

pub struct TrainOutput {
    pub params: PolicyParams<f32>,
    pub log: Vec<UpdateLog>,
}

struct EnvSlot {
    env: Env,
    episode: usize,
    obs: Observation,
    rng: ChaCha8Rng,
    /// Running totals of the in-flight episode.
    ep_reward: f64,
    ep_len: usize,
}

struct StepTaken {
    observation: Observation,
    mask: Vec<bool>,
    action: usize,
    log_prob: f32,
    value: f32,
    reward: f64,
    done: bool,
    /// (episode reward, episode length, esp ratio) on termination.
    finished: Option<(f64, usize, f64)>,
}

fn env_backend(pool: &[BackendModel], env_idx: usize, episode: usize, num_envs: usize) -> &BackendModel {
    &pool[(env_idx + episode * num_envs) % pool.len()]
}

/// Rolls one environment forward one decision step.
fn step_env(
    slot: &mut EnvSlot,
    params: &PolicyParams<f32>,
    curriculum: &Curriculum,
    pool: &[BackendModel],
    env_idx: usize,
    num_envs: usize,
    master_seed: u64,
) -> Result<StepTaken, TrainError> {
    if slot.env.episode_done() {
        slot.env.take_result();
        slot.episode += 1;
        slot.env
            .set_backend(env_backend(pool, env_idx, slot.episode, num_envs).clone())?;
        let circuit = curriculum.sample(derive(
            master_seed,
            (env_idx as u64) << 32 | slot.episode as u64,
        ));
        slot.obs = slot.env.reset(circuit)?;
        slot.ep_reward = 0.0;
        slot.ep_len = 0;
    }
    let mask = slot.env.action_mask();
    let input = slot.obs.policy_input::<f32>();
    let tape = forward(params, &input, mask.as_slice(), Mode::Eval)?;
    // Sample from the masked categorical distribution.
    let draw: f64 = slot.rng.gen();
    let mut acc = 0.0f64;
    let mut action = mask
        .valid_actions()
        .next()
        .expect("mask always has a valid action");
    for (i, &p) in tape.probs.iter().enumerate() {
        acc += p as f64;
        if draw < acc {
            action = i;
            break;
        }
    }
    if !mask.get(action) {
        action = mask.valid_actions().next().unwrap();
    }
    let log_prob = (tape.probs[action].max(1e-30)).ln();
    let result = slot.env.step(action)?;

    // Soft-normalize only the terminal component at the buffer boundary.
    let buffer_reward = match result.info.final_reward {
        Some(final_part) => result.reward - final_part + soft_normalize(final_part),
        None => result.reward,
    };
    slot.ep_reward += buffer_reward;
    slot.ep_len += 1;

    let finished = if result.done {
        let esp_ratio = match (&result.info.final_reward, slot.env.reference_report()) {
            (_, Some(reference)) if reference.esp > 0.0 => {
                let esp_now = slot
                    .env
                    .current_circuit()
                    .and_then(|c| crate::metrics::esp(c, slot.env.backend()).ok())
                    .unwrap_or(0.0);
                esp_now / reference.esp
            }
            _ => 0.0,
        };
        Some((slot.ep_reward, slot.ep_len, esp_ratio))
    } else {
        None
    };

    let prev_obs = std::mem::replace(&mut slot.obs, result.observation);
    Ok(StepTaken {
        observation: prev_obs,
        mask: mask.as_slice().to_vec(),
        action,
        log_prob,
        value: tape.value,
        reward: buffer_reward,
        done: result.done,
        finished,
    })
}

/// Trains a masked PPO policy over the backend pool. `on_update` fires after
/// every update with the fresh parameters (checkpointing hook).
pub fn train(
    cfg: &PpoConfig,
    env_cfg: &EnvConfig,
    shape: &PolicyShape,
    pool: &[BackendModel],
    curriculum: &Curriculum,
    mut on_update: impl FnMut(usize, &PolicyParams<f32>, &UpdateLog),
) -> Result<TrainOutput, TrainError> {
    if cfg.rollout_steps % cfg.batch_size != 0 || cfg.rollout_steps % cfg.num_envs != 0 {
        return Err(TrainError::BadShape {
            rollout: cfg.rollout_steps,
            batch: cfg.batch_size,
            envs: cfg.num_envs,
        });
    }
    assert!(!pool.is_empty(), "backend pool must not be empty");
    let mut params = init_params::<f32>(shape, cfg.seed);
    let mut adam = Adam::new(&params);
    let mut log: Vec<UpdateLog> = Vec::new();

    let mut slots: Vec<EnvSlot> = (0..cfg.num_envs)
        .map(|i| -> Result<EnvSlot, TrainError> {
            let mut env = Env::new(
                env_cfg.clone(),
                env_backend(pool, i, 0, cfg.num_envs).clone(),
                EnvMode::Train,
                derive(cfg.seed, 0xE0 + i as u64),
            )?;
            let circuit = curriculum.sample(derive(cfg.seed, (i as u64) << 32));
            let obs = env.reset(circuit)?;
            Ok(EnvSlot {
                env,
                episode: 0,
                obs,
                rng: ChaCha8Rng::seed_from_u64(derive(cfg.seed, 0xA0 + i as u64)),
                ep_reward: 0.0,
                ep_len: 0,
            })
        })
        .collect::<Result<_, _>>()?;

    let steps_per_env = cfg.rollout_steps / cfg.num_envs;
    let num_updates = cfg.total_steps.div_ceil(cfg.rollout_steps);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive(cfg.seed, 0x5F));
    let mut total_steps = 0usize;

    for update in 0..num_updates {
        // Rollout phase: per-env streams, independent and seeded, collected
        // in parallel; the result equals the sequential run exactly.
        let curriculum_ref = &curriculum;
        let params_ref = &params;
        let pool_ref = pool;
        let streams: Vec<Result<Vec<StepTaken>, TrainError>> = slots
            .par_iter_mut()
            .enumerate()
            .map(|(env_idx, slot)| {
                let mut steps = Vec::with_capacity(steps_per_env);
                for _ in 0..steps_per_env {
                    steps.push(step_env(
                        slot,
                        params_ref,
                        curriculum_ref,
                        pool_ref,
                        env_idx,
                        cfg.num_envs,
                        cfg.seed,
                    )?);
                }
                Ok(steps)
            })
            .collect();

        let mut episode_rewards: Vec<f64> = Vec::new();
        let mut episode_lens: Vec<f64> = Vec::new();
        let mut esp_ratios: Vec<f64> = Vec::new();
        let mut samples: Vec<LossSample<f32>> = Vec::with_capacity(cfg.rollout_steps);

        for (env_idx, stream) in streams.into_iter().enumerate() {
            let steps = stream?;
            // Bootstrap value for a truncated episode.
            let last_value = if steps.last().map(|s| s.done).unwrap_or(true) {
                0.0f32
            } else {
                let slot = &slots[env_idx];
                let input = slot.obs.policy_input::<f32>();
                let mask = slot.env.action_mask();
                forward(&params, &input, mask.as_slice(), Mode::Eval)?.value
            };
            let rewards: Vec<f64> = steps.iter().map(|s| s.reward).collect();
            let values: Vec<f64> = steps.iter().map(|s| s.value as f64).collect();
            let dones: Vec<bool> = steps.iter().map(|s| s.done).collect();
            let (advantages, returns) = compute_gae(
                &rewards,
                &values,
                &dones,
                cfg.gamma,
                cfg.gae_lambda,
                last_value as f64,
            );
            for (i, step) in steps.into_iter().enumerate() {
                if let Some((r, l, ratio)) = step.finished {
                    episode_rewards.push(r);
                    episode_lens.push(l as f64);
                    esp_ratios.push(ratio);
                }
                samples.push(LossSample {
                    observation: step.observation,
                    mask: step.mask,
                    action: step.action,
                    old_log_prob: step.log_prob,
                    advantage: advantages[i] as f32,
                    ret: returns[i] as f32,
                    dropout_seed: 0, // assigned per epoch below
                });
            }
        }
        total_steps += samples.len();

        // Advantage normalization across the whole buffer.
        let mean_adv =
            samples.iter().map(|s| s.advantage as f64).sum::<f64>() / samples.len() as f64;
        let var_adv = samples
            .iter()
            .map(|s| (s.advantage as f64 - mean_adv).powi(2))
            .sum::<f64>()
            / samples.len() as f64;
        let std_adv = var_adv.sqrt().max(1e-8);
        for s in samples.iter_mut() {
            s.advantage = ((s.advantage as f64 - mean_adv) / std_adv) as f32;
            debug_assert!(s.advantage.is_finite());
        }

        // Update phase.
        let mut parts_sum = LossParts::default();
        let mut minibatches = 0usize;
        let mut grad_norm_last = 0.0f64;
        for epoch in 0..cfg.epochs_per_update {
            let mut order: Vec<usize> = (0..samples.len()).collect();
            for i in (1..order.len()).rev() {
                order.swap(i, shuffle_rng.gen_range(0..=i));
            }
            for chunk in order.chunks(cfg.batch_size) {
                let batch: Vec<LossSample<f32>> = chunk
                    .iter()
                    .enumerate()
                    .map(|(k, &idx)| {
                        let mut s = samples[idx].clone();
                        s.dropout_seed =
                            derive(cfg.seed, (update as u64) << 40 | (epoch as u64) << 20 | k as u64);
                        s
                    })
                    .collect();
                let (parts, mut grads) = ppo_loss(
                    &params,
                    &batch,
                    cfg.clip_epsilon as f32,
                    cfg.value_coef as f32,
                    cfg.entropy_coef as f32,
                    true,
                )?;
                if !parts.total.is_finite() {
                    let diagnostic = format!(
                        "update {update} epoch {epoch}: policy {} value {} entropy {} \
                         batch advantages {:?}",
                        parts.policy,
                        parts.value,
                        parts.entropy,
                        batch.iter().map(|s| s.advantage).collect::<Vec<_>>()
                    );
                    return Err(TrainError::NanLoss { update, diagnostic });
                }
                grad_norm_last = clip_grad_norm(&mut grads, cfg.max_grad_norm as f32) as f64;
                adam.apply(&mut params, &grads, cfg.learning_rate as f32);
                parts_sum.total += parts.total;
                parts_sum.policy += parts.policy;
                parts_sum.value += parts.value;
                parts_sum.entropy += parts.entropy;
                parts_sum.clip_fraction += parts.clip_fraction;
                minibatches += 1;
            }
        }
        let inv = 1.0 / minibatches.max(1) as f64;
        let row = UpdateLog {
            update,
            steps: total_steps,
            mean_episode_reward: crate::stats::mean(&episode_rewards),
            mean_esp_ratio: crate::stats::mean(&esp_ratios),
            mean_episode_len: crate::stats::mean(&episode_lens),
            policy_loss: parts_sum.policy * inv,
            value_loss: parts_sum.value * inv,
            entropy: parts_sum.entropy * inv,
            clip_fraction: parts_sum.clip_fraction * inv,
            grad_norm: grad_norm_last,
        };
        on_update(update, &params, &row);
        log.push(row);
    }

    Ok(TrainOutput { params, log })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gae_single_step_episode() {
        let (adv, ret) = compute_gae(&[2.0f64], &[0.5], &[true], 0.99, 0.95, 7.0);
        assert!((adv[0] - 1.5).abs() < 1e-12, "advantage = reward - value");
        assert!((ret[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gae_lambda_one_is_discounted_monte_carlo() {
        let rewards = [1.0f64, 0.5, -0.25, 2.0, 0.1];
        let values = [0.3f64, -0.1, 0.7, 0.2, 0.4];
        let dones = [false, false, false, false, true];
        let gamma = 0.9;
        let (adv, _) = compute_gae(&rewards, &values, &dones, gamma, 1.0, 0.0);
        for t in 0..rewards.len() {
            let mut mc = 0.0;
            for (k, &r) in rewards.iter().enumerate().skip(t) {
                mc += gamma.powi((k - t) as i32) * r;
            }
            assert!(
                (adv[t] - (mc - values[t])).abs() < 1e-10,
                "t={t}: {} vs {}",
                adv[t],
                mc - values[t]
            );
        }
    }

    #[test]
    fn gae_lambda_zero_is_one_step_td() {
        let rewards = [1.0f64, 0.5, 2.0];
        let values = [0.3f64, 0.6, 0.2];
        let dones = [false, false, false];
        let gamma = 0.95;
        let (adv, _) = compute_gae(&rewards, &values, &dones, gamma, 0.0, 0.9);
        assert!((adv[0] - (1.0 + gamma * 0.6 - 0.3)).abs() < 1e-12);
        assert!((adv[1] - (0.5 + gamma * 0.2 - 0.6)).abs() < 1e-12);
        assert!((adv[2] - (2.0 + gamma * 0.9 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn gae_matches_brute_force_on_grid() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for &gamma in &[0.0f64, 0.5, 0.95, 1.0] {
            for &lambda in &[0.0f64, 0.5, 0.95, 1.0] {
                for _ in 0..20 {
                    let n = rng.gen_range(1..=8);
                    let rewards: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    let mut dones = vec![false; n];
                    // Random episode boundaries.
                    for d in dones.iter_mut() {
                        *d = rng.gen_bool(0.3);
                    }
                    let last_value = rng.gen_range(-2.0..2.0);
                    let (adv, ret) =
                        compute_gae(&rewards, &values, &dones, gamma, lambda, last_value);
                    // Brute force: explicit lambda-weighted sum of TD errors.
                    for t in 0..n {
                        let mut expected = 0.0;
                        let mut weight = 1.0;
                        for k in t..n {
                            let next_v = if dones[k] {
                                0.0
                            } else if k + 1 < n {
                                values[k + 1]
                            } else {
                                last_value
                            };
                            let delta = rewards[k] + gamma * next_v - values[k];
                            expected += weight * delta;
                            if dones[k] {
                                break;
                            }
                            weight *= gamma * lambda;
                        }
                        assert!(
                            (adv[t] - expected).abs() < 1e-10,
                            "gamma={gamma} lambda={lambda} t={t}"
                        );
                        assert!((ret[t] - (adv[t] + values[t])).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn grad_norm_clipping_caps_large_gradients() {
        let shape = PolicyShape {
            pre_input: 4,
            post_input: 4,
            encoder_widths: vec![4],
            aux_input: 2,
            trunk_widths: vec![4],
            num_actions: 3,
        };
        let params = init_params::<f64>(&shape, 0);
        let mut grads = zero_gradients(&params);
        grads.for_each_tensor_mut(|t| t.fill(10.0));
        let norm = clip_grad_norm(&mut grads, 0.5);
        assert!(norm > 0.5);
        let mut sq = 0.0;
        for (t, _) in grads.tensors() {
            for &g in t {
                sq += g * g;
            }
        }
        assert!((sq.sqrt() - 0.5).abs() < 1e-9);
    }
}
