use crate::error::{Error, Result};

/// Generalized advantage estimates and value targets.
///
/// `dones[t]` marks that the episode ended with transition `t`; `last_value` bootstraps
/// the step after the final transition and is ignored when that transition is terminal.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    last_value: f64,
    gamma: f64,
    lambda: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rewards.len();
    if values.len() != n || dones.len() != n {
        return Err(Error::shape(
            format!("{n} values and dones"),
            format!("{} values, {} dones", values.len(), dones.len()),
        ));
    }
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        advantages[t] = next_adv;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    Ok((advantages, returns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_terminal_step() {
        let (a, r) = compute_gae(&[2.5], &[1.0], &[true], 100.0, 0.99, 0.95).unwrap();
        assert_eq!(a, vec![1.5]);
        assert_eq!(r, vec![2.5]);
    }

    #[test]
    fn lambda_zero_is_td_error() {
        let rewards = [1.0, -2.0, 0.5, 3.0];
        let values = [0.2, 0.4, -0.1, 0.7];
        let dones = [false, true, false, false];
        let (a, _) = compute_gae(&rewards, &values, &dones, 0.9, 0.99, 0.0).unwrap();
        let next = [0.4, 0.0, 0.7, 0.9];
        let live = [1.0, 0.0, 1.0, 1.0];
        for t in 0..4 {
            let delta = rewards[t] + 0.99 * next[t] * live[t] - values[t];
            assert!((a[t] - delta).abs() < 1e-15);
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(compute_gae(&[1.0, 2.0], &[0.0], &[false, false], 0.0, 0.99, 0.95).is_err());
    }
}
