//! Adam and target-network updates.

use crate::error::{Result, TensorError};
use crate::params::ParamSet;
use crate::tensor::Tensor;

/// First/second-moment accumulators mirroring one [`ParamSet`] layout.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &ParamSet) -> Self {
        Self::with_coefficients(params, 0.9, 0.999, 1e-8)
    }

    pub fn with_coefficients(params: &ParamSet, beta1: f64, beta2: f64, eps: f64) -> Self {
        let m = params.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();
        let v = params.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();
        AdamState {
            m,
            v,
            step: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction. `grads` must align with the
/// parameter layout (see [`crate::params::BoundParams::gradients`]).
pub fn adam_step(
    params: &mut ParamSet,
    grads: &[Tensor],
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if grads.len() != params.len() || grads.len() != state.m.len() {
        return Err(TensorError::LayoutMismatch {
            context: format!(
                "{} gradients for {} parameters ({} moment slots)",
                grads.len(),
                params.len(),
                state.m.len()
            ),
        });
    }
    for ((_, p), g) in params.iter().zip(grads) {
        if p.shape() != g.shape() {
            return Err(TensorError::LayoutMismatch {
                context: format!(
                    "gradient shape {:?} for parameter shape {:?}",
                    g.shape(),
                    p.shape()
                ),
            });
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);

    // An all-zero gradient never moves parameter values, only the moments
    // decay. Otherwise stale momentum would keep drifting values on steps
    // that carry no signal at all.
    let all_zero = grads.iter().all(|g| g.data().iter().all(|&v| v == 0.0));
    if all_zero {
        for (m, v) in state.m.iter_mut().zip(state.v.iter_mut()) {
            for mv in m.data_mut() {
                *mv *= state.beta1;
            }
            for vv in v.data_mut() {
                *vv *= state.beta2;
            }
        }
        return Ok(());
    }

    for (i, tensor) in params.tensors_mut().enumerate() {
        let g = grads[i].data();
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        for ((p, &gv), (mv, vv)) in tensor
            .data_mut()
            .iter_mut()
            .zip(g)
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *mv = state.beta1 * *mv + (1.0 - state.beta1) * gv;
            *vv = state.beta2 * *vv + (1.0 - state.beta2) * gv * gv;
            let m_hat = *mv / bc1;
            let v_hat = *vv / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}

/// Polyak update: target <- (1-rate)*target + rate*online. `rate = 1` is a
/// hard copy, `rate = 0` leaves the target untouched.
pub fn target_update(target: &mut ParamSet, online: &ParamSet, rate: f64) -> Result<()> {
    if !target.same_layout(online) {
        return Err(TensorError::LayoutMismatch {
            context: "target_update layouts differ".into(),
        });
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(TensorError::InvalidArgument(format!(
            "target update rate {rate} outside [0,1]"
        )));
    }
    if rate == 1.0 {
        // Exact copy, bit for bit.
        for (t, (_, o)) in target.tensors_mut().zip(online.iter()) {
            t.data_mut().copy_from_slice(o.data());
        }
        return Ok(());
    }
    for (t, (_, o)) in target.tensors_mut().zip(online.iter()) {
        for (tv, &ov) in t.data_mut().iter_mut().zip(o.data()) {
            *tv = (1.0 - rate) * *tv + rate * ov;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_param(value: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("w", Tensor::from_vec(vec![value]).unwrap()).unwrap();
        p
    }

    #[test]
    fn zero_gradient_leaves_parameters_unchanged() {
        let mut p = single_param(1.25);
        let mut state = AdamState::new(&p);
        adam_step(&mut p, &[Tensor::zeros(&[1])], &mut state, 0.1).unwrap();
        assert_eq!(p.get("w").unwrap().data(), &[1.25]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_roughly_lr() {
        // grad=1, fresh state: m_hat = 1, v_hat = 1, so the step is
        // lr / (1 + eps) — computed by hand.
        let mut p = single_param(0.0);
        let mut state = AdamState::new(&p);
        adam_step(&mut p, &[Tensor::from_vec(vec![1.0]).unwrap()], &mut state, 0.1).unwrap();
        let got = p.get("w").unwrap().data()[0];
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((got - expected).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn zero_learning_rate_updates_moments_only() {
        let mut p = single_param(2.0);
        let mut state = AdamState::new(&p);
        adam_step(&mut p, &[Tensor::from_vec(vec![3.0]).unwrap()], &mut state, 0.0).unwrap();
        assert_eq!(p.get("w").unwrap().data(), &[2.0]);
        assert!(state.m[0].data()[0] > 0.0);
        assert!(state.v[0].data()[0] > 0.0);
    }

    #[test]
    fn misaligned_gradients_are_rejected() {
        let mut p = single_param(0.0);
        let mut state = AdamState::new(&p);
        assert!(adam_step(&mut p, &[], &mut state, 0.1).is_err());
        assert!(adam_step(&mut p, &[Tensor::zeros(&[2])], &mut state, 0.1).is_err());
    }

    #[test]
    fn hard_copy_is_idempotent() {
        let mut target = single_param(0.0);
        let online = single_param(std::f64::consts::PI);
        target_update(&mut target, &online, 1.0).unwrap();
        assert!(target.bit_identical(&online));
        target_update(&mut target, &online, 1.0).unwrap();
        assert!(target.bit_identical(&online));
    }

    #[test]
    fn polyak_rate_mixes_linearly() {
        let mut target = single_param(0.0);
        let online = single_param(1.0);
        target_update(&mut target, &online, 0.005).unwrap();
        assert!((target.get("w").unwrap().data()[0] - 0.005).abs() < 1e-15);
        let mut frozen = target.clone();
        target_update(&mut frozen, &online, 0.0).unwrap();
        assert!(frozen.bit_identical(&target));
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let mut target = single_param(0.0);
        let mut online = ParamSet::new();
        online.insert("other", Tensor::zeros(&[1])).unwrap();
        assert!(target_update(&mut target, &online, 0.5).is_err());
    }
}
