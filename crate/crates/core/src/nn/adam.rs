//! The ADAM optimizer with bias-corrected moment estimates.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for AdamConfig {
    /// mu = 0.001, beta1 = 0.9, beta2 = 0.999, 20 epochs, batches of 100.
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 20,
            batch_size: 100,
            seed: 0,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} = {b} must lie in [0, 1)")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}

/// First/second moment buffers plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One ADAM update in place. Rejects non-finite gradients, naming the
/// offending flat index.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::invalid(
            "parameter, gradient, and state lengths must agree",
        ));
    }
    if let Some(bad) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::numeric(
            format!("gradient at flat index {bad} is not finite"),
            grads[bad],
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bias1;
        let v_hat = state.v[i] / bias2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_leave_parameters_unchanged() {
        let cfg = AdamConfig::default();
        let mut params = vec![0.5, -1.0, 2.0];
        let before = params.clone();
        let mut state = AdamState::new(3);
        adam_step(&mut params, &[0.0, 0.0, 0.0], &mut state, &cfg).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate_times_sign() {
        // With zero moments, m_hat = g and v_hat = g^2, so the update is
        // -mu * g / (|g| + eps) which is -mu * sign(g) up to epsilon.
        let cfg = AdamConfig::default();
        let mut params = vec![0.0, 0.0];
        let mut state = AdamState::new(2);
        adam_step(&mut params, &[0.4, -2.5], &mut state, &cfg).unwrap();
        assert!((params[0] + cfg.learning_rate).abs() < 1e-6);
        assert!((params[1] - cfg.learning_rate).abs() < 1e-6);
    }

    #[test]
    fn constant_gradient_step_magnitude_approaches_learning_rate() {
        let cfg = AdamConfig::default();
        let mut params = vec![0.0];
        let mut state = AdamState::new(1);
        let mut last = params[0];
        let mut step = 0.0;
        for _ in 0..500 {
            adam_step(&mut params, &[0.37], &mut state, &cfg).unwrap();
            step = last - params[0];
            last = params[0];
        }
        assert!((step - cfg.learning_rate).abs() < 1e-5, "step {step}");
    }

    #[test]
    fn scalar_recomputation_oracle_for_two_steps() {
        // Recompute the ADAM formulas by hand for two updates of one scalar.
        let cfg = AdamConfig {
            learning_rate: 0.01,
            ..AdamConfig::default()
        };
        let g1 = 0.3;
        let g2 = -0.1;
        let mut params = vec![1.0];
        let mut state = AdamState::new(1);
        adam_step(&mut params, &[g1], &mut state, &cfg).unwrap();
        adam_step(&mut params, &[g2], &mut state, &cfg).unwrap();

        let (b1, b2, eps, mu) = (cfg.beta1, cfg.beta2, cfg.epsilon, cfg.learning_rate);
        let mut m = 0.0;
        let mut v = 0.0;
        let mut x = 1.0;
        for (t, g) in [(1, g1), (2, g2)] {
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = m / (1.0 - b1.powi(t));
            let v_hat = v / (1.0 - b2.powi(t));
            x -= mu * m_hat / (v_hat.sqrt() + eps);
        }
        assert!((params[0] - x).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradients_are_rejected() {
        let cfg = AdamConfig::default();
        let mut params = vec![0.0, 0.0];
        let mut state = AdamState::new(2);
        let err = adam_step(&mut params, &[0.0, f64::NAN], &mut state, &cfg).unwrap_err();
        assert!(err.to_string().contains("index 1"));
    }
}
