//! Adam with coupled L2 weight decay.
//!
//! ```text
//! g' = g + wd·θ
//! m  = β1·m + (1-β1)·g'
//! v  = β2·v + (1-β2)·g'²
//! θ  = θ - lr · (m / (1-β1^t)) / (sqrt(v / (1-β2^t)) + eps)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{ParamKind, ParamMut};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Apply weight decay to biases and LayerNorm affine parameters too.
    pub decay_norm_and_bias: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            weight_decay: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay_norm_and_bias: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    /// First and second moments, one buffer per parameter tensor, in model order.
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig) -> Self {
        AdamState {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// One update of every parameter. Moments are allocated on the first call.
    pub fn step(&mut self, params: &mut [ParamMut<'_>]) -> Result<()> {
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.value.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len() {
            return Err(Error::shape(
                "AdamState::step",
                format!(
                    "{} moment buffers for {} parameters",
                    self.m.len(),
                    params.len()
                ),
            ));
        }
        for (k, p) in params.iter().enumerate() {
            if p.value.len() != p.grad.len() || p.value.len() != self.m[k].len() {
                return Err(Error::shape(
                    "AdamState::step",
                    format!(
                        "parameter `{}` has {} values, {} grads, {} moments",
                        p.name,
                        p.value.len(),
                        p.grad.len(),
                        self.m[k].len()
                    ),
                ));
            }
            if p.grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of `{}`", p.name)));
            }
        }

        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for (k, p) in params.iter_mut().enumerate() {
            let decay = if p.kind == ParamKind::Weight || c.decay_norm_and_bias {
                c.weight_decay
            } else {
                0.0
            };
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.value.len() {
                let g = p.grad[i] + decay * p.value[i];
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.value[i] -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(value: &[f64], grad: &[f64]) -> AdamStepper {
        AdamStepper {
            value: value.to_vec(),
            grad: grad.to_vec(),
        }
    }

    struct AdamStepper {
        value: Vec<f64>,
        grad: Vec<f64>,
    }

    impl AdamStepper {
        fn step(&mut self, state: &mut AdamState) -> Result<()> {
            let mut params = [ParamMut {
                name: "theta",
                kind: ParamKind::Weight,
                value: &mut self.value,
                grad: &self.grad,
            }];
            state.step(&mut params)
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = AdamState::new(AdamConfig {
            weight_decay: 0.0,
            ..Default::default()
        });
        let mut p = one(&[1.0, -2.0, 3.0], &[0.0; 3]);
        p.step(&mut s).unwrap();
        assert_eq!(p.value, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut s = AdamState::new(AdamConfig {
            lr: 0.01,
            weight_decay: 0.0,
            ..Default::default()
        });
        let mut p = one(&[0.0], &[1.0]);
        p.step(&mut s).unwrap();
        // m̂ = 1, v̂ = 1 → Δ = -lr / (1 + eps)
        assert!((p.value[0] + 0.01 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_steps_are_bounded_by_lr() {
        let lr = 0.05;
        let mut s = AdamState::new(AdamConfig {
            lr,
            weight_decay: 0.0,
            ..Default::default()
        });
        let mut p = one(&[0.3], &[-2.5]);
        let mut prev = p.value[0];
        for _ in 0..500 {
            p.step(&mut s).unwrap();
            assert!((p.value[0] - prev).abs() <= lr * (1.0 + 1e-12));
            prev = p.value[0];
        }
    }

    #[test]
    fn weight_decay_is_coupled_and_optional_for_norms() {
        let cfg = AdamConfig {
            lr: 0.1,
            weight_decay: 0.5,
            decay_norm_and_bias: false,
            ..Default::default()
        };
        let mut s = AdamState::new(cfg);
        let mut w = vec![1.0];
        let mut b = vec![1.0];
        let zero = [0.0];
        let mut params = [
            ParamMut {
                name: "w",
                kind: ParamKind::Weight,
                value: &mut w,
                grad: &zero,
            },
            ParamMut {
                name: "b",
                kind: ParamKind::Bias,
                value: &mut b,
                grad: &zero,
            },
        ];
        s.step(&mut params).unwrap();
        assert!(w[0] < 1.0);
        assert_eq!(b[0], 1.0);
    }

    #[test]
    fn non_finite_gradient_is_named() {
        let mut s = AdamState::new(AdamConfig::default());
        let mut p = one(&[0.0], &[f64::NAN]);
        let err = p.step(&mut s).unwrap_err();
        assert!(matches!(err, Error::NonFinite(ref m) if m.contains("theta")));
        assert_eq!(s.step, 0);
    }

    #[test]
    fn identical_inputs_give_identical_trajectories() {
        let run = || {
            let mut s = AdamState::new(AdamConfig::default());
            let mut p = one(&[0.5, -0.25], &[0.0, 0.0]);
            for t in 0..50 {
                p.grad = vec![(t as f64).sin(), (t as f64 * 0.3).cos()];
                p.step(&mut s).unwrap();
            }
            (p.value, s)
        };
        let (a, sa) = run();
        let (b, sb) = run();
        assert_eq!(a, b);
        assert_eq!(sa, sb);
    }
}
