//! Action selection, Bellman targets and the temporal-difference update.

use rand::Rng;

use super::Transition;
use crate::nn::{argmax, NnError, Optimizer, QFunctionNet};
use crate::par::Exec;

/// Samples per gradient accumulation chunk. Fixed so that the floating-point summation
/// order, and therefore the result, is independent of the thread count.
const GRADIENT_CHUNK: usize = 8;

/// Epsilon-greedy choice. Greedy ties go to the lowest action code.
pub fn select_action<R: Rng + ?Sized>(
    net: &QFunctionNet,
    obs: &[f64],
    eps: f64,
    rng: &mut R,
) -> Result<usize, NnError> {
    if rng.gen::<f64>() < eps {
        return Ok(rng.gen_range(0..net.n_actions()));
    }
    greedy_action(net, obs)
}

pub fn greedy_action(net: &QFunctionNet, obs: &[f64]) -> Result<usize, NnError> {
    Ok(argmax(&net.q(obs)?))
}

/// `y = r` for terminal transitions, otherwise `r + gamma * max_a' Q_target(s', a')`.
pub fn bellman_target(
    batch: &[&Transition],
    target_net: &QFunctionNet,
    gamma: f64,
    exec: Exec,
) -> Result<Vec<f64>, NnError> {
    exec.map(batch, |t| {
        if t.done {
            return Ok(t.r);
        }
        let q_next = target_net.q(&t.s_next)?;
        Ok(t.r + gamma * q_next[argmax(&q_next)])
    })
    .into_iter()
    .collect()
}

/// Batch error statistics of one TD update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdStats {
    /// Mean of `(y - Q(s, a))^2`, the minimized loss.
    pub mse: f64,
    /// Mean of `|y - Q(s, a)|`.
    pub mean_abs: f64,
}

/// Residuals `y - Q(s, a)` and the gradient of the mean squared residual.
pub fn td_gradient(
    net: &QFunctionNet,
    batch: &[&Transition],
    targets: &[f64],
    exec: Exec,
) -> Result<(Vec<f64>, Vec<f64>), NnError> {
    assert_eq!(batch.len(), targets.len());
    let scale = -2.0 / batch.len() as f64;
    let paired: Vec<(&Transition, f64)> = batch.iter().copied().zip(targets.iter().copied()).collect();
    let chunks = exec.map_chunks(&paired, GRADIENT_CHUNK, |chunk| {
        let mut grads = vec![0.0; net.num_params()];
        let mut residuals = Vec::with_capacity(chunk.len());
        let mut d_q = vec![0.0; net.n_actions()];
        for (t, y) in chunk {
            let (q, cache) = net.q_values(&t.s)?;
            let residual = y - q[t.a];
            d_q.fill(0.0);
            d_q[t.a] = scale * residual;
            net.accumulate_gradient(&cache, &d_q, &mut grads)?;
            residuals.push(residual);
        }
        Ok::<_, NnError>((grads, residuals))
    });

    let mut total = vec![0.0; net.num_params()];
    let mut residuals = Vec::with_capacity(batch.len());
    for chunk in chunks {
        let (grads, res) = chunk?;
        for (t, g) in total.iter_mut().zip(grads) {
            *t += g;
        }
        residuals.extend(res);
    }
    Ok((total, residuals))
}

/// One gradient step on the squared TD error of `batch`. Only the taken action's Q
/// entry receives gradient.
pub fn td_update(
    net: &mut QFunctionNet,
    target_net: &QFunctionNet,
    batch: &[&Transition],
    optimizer: &mut Optimizer,
    gamma: f64,
    exec: Exec,
) -> Result<TdStats, NnError> {
    assert!(!batch.is_empty(), "td_update needs a non-empty batch");
    let targets = bellman_target(batch, target_net, gamma, exec)?;
    let (grads, residuals) = td_gradient(net, batch, &targets, exec)?;
    optimizer.apply(net.params_mut(), &grads)?;
    let n = residuals.len() as f64;
    Ok(TdStats {
        mse: residuals.iter().map(|r| r * r).sum::<f64>() / n,
        mean_abs: residuals.iter().map(|r| r.abs()).sum::<f64>() / n,
    })
}

/// Hard copy of the online parameters into the target network.
pub fn sync_target(net: &QFunctionNet, target_net: &mut QFunctionNet) -> Result<(), NnError> {
    target_net.copy_params_from(net)
}

/// `sum_k gamma^k r_k`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}
