use crate::{Error, Result};

/// Generalised advantage estimation over one environment's step sequence.
///
/// `terminated[t]` stops bootstrapping entirely; `truncated[t]` stops the
/// advantage flow but bootstraps from `bootstrap_values[t]`. The last step
/// always bootstraps from `bootstrap_values[last]` unless it terminated.
/// Returns `(advantages, returns)` with `returns = advantages + values`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    terminated: &[bool],
    truncated: &[bool],
    bootstrap_values: &[f64],
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    for len in [values.len(), terminated.len(), truncated.len(), bootstrap_values.len()] {
        if len != n {
            return Err(Error::Shape { expected: n, actual: len });
        }
    }
    let mut advantages = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let (next_value, cut) = if terminated[t] {
            (0.0, true)
        } else if truncated[t] || t + 1 == n {
            (bootstrap_values[t], true)
        } else {
            (values[t + 1], false)
        };
        let delta = rewards[t] + gamma * next_value - values[t];
        running = delta + if cut { 0.0 } else { gamma * lambda * running };
        advantages[t] = running;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}
