//! Adam with decoupled weight decay for the encoder parameters.

use crate::error::{Error, Result};

/// Adam hyperparameters. Weight decay is decoupled: it is applied directly to
/// the parameters and never enters the moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 0.00035, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 5e-4 }
    }
}

/// First and second moment estimates for one parameter block.
#[derive(Debug, Clone, Default)]
pub struct MomentBlock {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl MomentBlock {
    pub fn new(len: usize) -> Self {
        MomentBlock { m: vec![0.0; len], v: vec![0.0; len] }
    }
}

/// Updates one parameter block in place.
///
/// ```text
/// m <- b1*m + (1-b1)*g          v <- b2*v + (1-b2)*g^2
/// w <- w - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * w
/// ```
///
/// `step` is the 1-based step count used for bias correction; `decay` selects
/// whether the decoupled weight-decay term applies to this block.
pub fn adam_update_block(
    params: &mut [f64],
    grads: &[f64],
    moments: &mut MomentBlock,
    cfg: &AdamConfig,
    step: u64,
    decay: bool,
) -> Result<()> {
    if grads.len() != params.len() || moments.m.len() != params.len() {
        return Err(Error::shape(format!(
            "adam block sizes disagree: params {}, grads {}, moments {}",
            params.len(),
            grads.len(),
            moments.m.len()
        )));
    }
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    let wd = if decay { cfg.weight_decay } else { 0.0 };
    for i in 0..params.len() {
        let g = grads[i];
        moments.m[i] = cfg.beta1 * moments.m[i] + (1.0 - cfg.beta1) * g;
        moments.v[i] = cfg.beta2 * moments.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = moments.m[i] / bc1;
        let v_hat = moments.v[i] / bc2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps) + cfg.lr * wd * params[i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_hand_rolled_recurrence() {
        let cfg = AdamConfig { lr: 0.1, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 };
        let mut params = vec![1.0];
        let mut moments = MomentBlock::new(1);
        let grads = [vec![0.5], vec![-0.25], vec![0.1]];

        // Independent reference recurrence.
        let (mut m, mut v, mut w) = (0.0f64, 0.0f64, 1.0f64);
        for (t, g) in grads.iter().enumerate() {
            adam_update_block(&mut params, g, &mut moments, &cfg, (t + 1) as u64, false).unwrap();
            m = 0.9 * m + 0.1 * g[0];
            v = 0.999 * v + 0.001 * g[0] * g[0];
            let m_hat = m / (1.0 - 0.9f64.powi(t as i32 + 1));
            let v_hat = v / (1.0 - 0.999f64.powi(t as i32 + 1));
            w -= 0.1 * m_hat / (v_hat.sqrt() + 1e-8);
            assert!((params[0] - w).abs() < 1e-15, "step {t}: {} vs {w}", params[0]);
        }
    }

    #[test]
    fn weight_decay_is_decoupled() {
        // With zero gradient the moments stay zero, so the only movement is
        // the pure decay term -lr * wd * w.
        let cfg = AdamConfig { lr: 0.1, weight_decay: 0.01, ..AdamConfig::default() };
        let mut params = vec![2.0];
        let mut moments = MomentBlock::new(1);
        adam_update_block(&mut params, &[0.0], &mut moments, &cfg, 1, true).unwrap();
        assert!((params[0] - (2.0 - 0.1 * 0.01 * 2.0)).abs() < 1e-15);

        // Without the decay flag the same step is a no-op.
        let mut frozen = vec![2.0];
        let mut moments = MomentBlock::new(1);
        adam_update_block(&mut frozen, &[0.0], &mut moments, &cfg, 1, false).unwrap();
        assert_eq!(frozen[0], 2.0);
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let cfg = AdamConfig::default();
        let mut params = vec![1.0, 2.0];
        let mut moments = MomentBlock::new(2);
        let err = adam_update_block(&mut params, &[1.0], &mut moments, &cfg, 1, true);
        assert!(err.is_err());
    }
}
