use crate::error::{Error, Result};
use crate::model::ModelWeights;
use crate::numkit::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Coupled L2: `l2 * theta` is added to each gradient.
    pub l2: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 5e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            l2: 1e-4,
        }
    }
}

/// First and second moment estimates, one pair per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl OptimizerState {
    pub fn new(params: &[Matrix]) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|p| vec![0.0; p.data().len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn for_weights(weights: &ModelWeights) -> Self {
        Self::new(weights.tensors())
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction over `params` in place.
pub fn adam_update(params: &mut [Matrix], grads: &[Matrix], state: &mut OptimizerState, cfg: &AdamConfig) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::InvalidArgument(format!(
            "optimizer got {} parameters, {} gradients, state for {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (p, g) in params.iter().zip(grads) {
        if p.shape() != g.shape() {
            return Err(Error::Shape {
                op: "adam_step",
                left: p.shape(),
                right: g.shape(),
            });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (j, (theta, &grad)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
            let g = grad as f64 + cfg.l2 * *theta as f64;
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[j] / c1;
            let v_hat = v[j] / c2;
            *theta = (*theta as f64 - cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps)) as f32;
        }
    }
    Ok(())
}

pub fn adam_step(weights: &mut ModelWeights, grads: &[Matrix], state: &mut OptimizerState, cfg: &AdamConfig) -> Result<()> {
    adam_update(weights.tensors_mut(), grads, state, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f32) -> Matrix {
        Matrix::new(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let mut p = vec![Matrix::zeros(2, 3)];
        let g = vec![Matrix::zeros(2, 3)];
        let mut s = OptimizerState::new(&p);
        adam_update(&mut p, &g, &mut s, &AdamConfig::default()).unwrap();
        assert!(p[0].data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn first_step_moves_by_lr() {
        let cfg = AdamConfig {
            l2: 0.1,
            ..AdamConfig::default()
        };
        let mut p = vec![scalar(1.0)];
        let mut s = OptimizerState::new(&p);
        adam_update(&mut p, &[scalar(0.0)], &mut s, &cfg).unwrap();
        let moved = 1.0 - p[0].data()[0] as f64;
        // parameters are stored in f32, whose spacing near 1 is 6e-8
        assert!((moved - cfg.lr).abs() < 1e-7, "{moved}");
    }

    #[test]
    fn l2_shrinks_norm_without_data_gradient() {
        let cfg = AdamConfig {
            lr: 1e-2,
            l2: 1e-2,
            ..AdamConfig::default()
        };
        let mut p = vec![Matrix::new(1, 3, vec![0.5, -1.0, 2.0]).unwrap()];
        let g = vec![Matrix::zeros(1, 3)];
        let mut s = OptimizerState::new(&p);
        let mut prev = p[0].frobenius_norm();
        for _ in 0..20 {
            adam_update(&mut p, &g, &mut s, &cfg).unwrap();
            let now = p[0].frobenius_norm();
            assert!(now < prev);
            prev = now;
        }
    }

    #[test]
    fn deterministic_and_shape_checked() {
        let cfg = AdamConfig::default();
        let run = || {
            let mut p = vec![Matrix::new(1, 2, vec![0.3, -0.2]).unwrap()];
            let mut s = OptimizerState::new(&p);
            for k in 0..5 {
                let g = vec![Matrix::new(1, 2, vec![0.1 * k as f32, -0.05]).unwrap()];
                adam_update(&mut p, &g, &mut s, &cfg).unwrap();
            }
            p
        };
        assert_eq!(run(), run());
        let mut p = vec![scalar(1.0)];
        let mut s = OptimizerState::new(&p);
        assert!(adam_update(&mut p, &[Matrix::zeros(2, 1)], &mut s, &cfg).is_err());
    }
}
