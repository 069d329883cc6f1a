use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam moments for one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

fn check_grads(params: &[f64], grads: &[f64]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::usage(format!(
            "gradient length {} does not match parameter count {}",
            grads.len(),
            params.len()
        )));
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::numerical(format!("non-finite gradient component {i}: {}", grads[i])));
    }
    Ok(())
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        AdamState { config, m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }

    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.t = 0;
    }

    /// One bias-corrected Adam step. On error neither `params` nor the
    /// state are modified.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        check_grads(params, grads)?;
        if self.m.len() != params.len() {
            return Err(Error::usage("Adam state does not match parameter count"));
        }
        let AdamConfig { beta1, beta2, eps } = self.config;
        self.t += 1;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

pub fn sgd_step(params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
    check_grads(params, grads)?;
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= lr * g;
    }
    Ok(())
}

/// Weighted sum `Σ w_k θ_k`, accumulated in list order.
pub fn combine(params: &[&[f64]], weights: &[f64]) -> Result<Vec<f64>> {
    if params.is_empty() || params.len() != weights.len() {
        return Err(Error::usage("combine needs one weight per parameter vector"));
    }
    let n = params[0].len();
    if params.iter().any(|p| p.len() != n) {
        return Err(Error::usage("combine: parameter shapes differ"));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::usage(format!("combine weights sum to {total}, not 1")));
    }
    let mut out: Vec<f64> = params[0].iter().map(|x| weights[0] * x).collect();
    for (p, &w) in params.iter().zip(weights).skip(1) {
        for (o, x) in out.iter_mut().zip(p.iter()) {
            *o += w * x;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_adam_step_closed_form() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(1, AdamConfig::default());
        s.step(&mut p, &[1.0], 1e-3).unwrap();
        assert!((p[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-15);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![0.5, -2.0];
        let mut s = AdamState::new(2, AdamConfig::default());
        for _ in 0..10 {
            s.step(&mut p, &[0.0, 0.0], 1e-3).unwrap();
        }
        assert_eq!(p, vec![0.5, -2.0]);
        sgd_step(&mut p, &[0.0, 0.0], 0.1).unwrap();
        assert_eq!(p, vec![0.5, -2.0]);
    }

    #[test]
    fn adam_is_deterministic() {
        let run = || {
            let mut p = vec![0.1, 0.2, 0.3];
            let mut s = AdamState::new(3, AdamConfig::default());
            for k in 0..50 {
                let g: Vec<f64> = p.iter().map(|x| (x * k as f64).sin()).collect();
                s.step(&mut p, &g, 1e-2).unwrap();
            }
            p
        };
        let (a, b) = (run(), run());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn non_finite_gradient_leaves_state() {
        let mut p = vec![1.0, 1.0];
        let mut s = AdamState::new(2, AdamConfig::default());
        s.step(&mut p, &[0.3, 0.1], 1e-3).unwrap();
        let (before_p, before_s) = (p.clone(), s.clone());
        let err = s.step(&mut p, &[f64::NAN, 1.0], 1e-3).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
        assert_eq!(p, before_p);
        assert_eq!(s, before_s);
        assert!(sgd_step(&mut p, &[f64::INFINITY, 0.0], 0.1).is_err());
    }

    #[test]
    fn sgd_examples() {
        let mut p = vec![1.0];
        sgd_step(&mut p, &[2.0], 0.1).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15);
        // (θ−1)² at θ=0 with η=0.1: θ ← 0 − 0.1·(−2) = 0.2
        let mut q = vec![0.0];
        let g = 2.0 * (q[0] - 1.0);
        sgd_step(&mut q, &[g], 0.1).unwrap();
        assert_eq!(q[0], 0.2);
    }

    #[test]
    fn combine_examples() {
        assert_eq!(combine(&[&[1.5, -3.0]], &[1.0]).unwrap(), vec![1.5, -3.0]);
        assert_eq!(combine(&[&[0.0], &[2.0]], &[0.5, 0.5]).unwrap(), vec![1.0]);
        assert_eq!(combine(&[&[0.0], &[4.0]], &[0.75, 0.25]).unwrap(), vec![1.0]);
        assert!(combine(&[&[0.0], &[4.0, 1.0]], &[0.5, 0.5]).is_err());
        assert!(combine(&[&[0.0], &[4.0]], &[0.5, 0.6]).is_err());
    }

    proptest! {
        #[test]
        fn sign_descent_limit(g in prop::num::f64::NORMAL.prop_filter("nonzero", |g| g.abs() > 1e-6 && g.abs() < 1e6)) {
            let cfg = AdamConfig { beta1: 0.0, beta2: 0.0, eps: 0.0 };
            let mut p = vec![0.0];
            AdamState::new(1, cfg).step(&mut p, &[g], 0.01).unwrap();
            prop_assert!((p[0] + 0.01 * g.signum()).abs() < 1e-15);
        }

        #[test]
        fn combine_is_affine(theta in prop::collection::vec(-1e3f64..1e3, 1..8), a in 0.0f64..1.0) {
            let out = combine(&[&theta, &theta], &[a, 1.0 - a]).unwrap();
            for (o, t) in out.iter().zip(&theta) {
                prop_assert!((o - t).abs() <= 1e-12 * t.abs().max(1.0));
            }
        }

        #[test]
        fn combine_matches_elementwise_sum(
            rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 4), 1..5),
        ) {
            let k = rows.len();
            let w = vec![1.0 / k as f64; k];
            let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let out = combine(&refs, &w).unwrap();
            for j in 0..4 {
                let expect: f64 = rows.iter().map(|r| r[j]).sum::<f64>() / k as f64;
                prop_assert!((out[j] - expect).abs() < 1e-12);
            }
        }
    }
}
