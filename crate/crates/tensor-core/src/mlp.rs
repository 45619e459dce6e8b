//! Dense multi-layer perceptrons over [`ParamSet`] weights.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TensorError};
use crate::kernels;
use crate::params::{BoundParams, ParamSet};
use crate::tape::{Tape, TapeTensor};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

/// Shape of a dense network: `input_dim -> hidden... -> output_dim` with the
/// given activation between layers and an optional activation on the output.
/// An empty `hidden_dims` gives a single linear layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
    #[serde(default)]
    pub final_activation: Option<Activation>,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_dims: Vec<usize>, output_dim: usize) -> Self {
        MlpSpec {
            input_dim,
            hidden_dims,
            output_dim,
            activation: Activation::Relu,
            final_activation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0
            || self.output_dim == 0
            || self.hidden_dims.iter().any(|&d| d == 0)
        {
            return Err(TensorError::InvalidArgument(format!(
                "MlpSpec dims must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// (fan_in, fan_out) per layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 1);
        let mut prev = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.output_dim));
        dims
    }

    fn activation_for_layer(&self, layer: usize) -> Option<Activation> {
        if layer + 1 < self.layer_count() {
            Some(self.activation)
        } else {
            self.final_activation
        }
    }

    pub fn layer_count(&self) -> usize {
        self.hidden_dims.len() + 1
    }
}

/// Fan-in-scaled uniform initialization (He-style bounds before relu,
/// Glorot-style otherwise), zero biases. Parameter names are
/// `{prefix}w{i}` / `{prefix}b{i}` in layer order.
pub fn init_mlp_params(spec: &MlpSpec, prefix: &str, rng: &mut impl Rng) -> Result<ParamSet> {
    spec.validate()?;
    let mut params = ParamSet::new();
    for (i, (fan_in, fan_out)) in spec.layer_dims().iter().enumerate() {
        let bound = match spec.activation_for_layer(i) {
            Some(Activation::Relu) => (6.0 / *fan_in as f64).sqrt(),
            _ => (6.0 / (*fan_in + *fan_out) as f64).sqrt(),
        };
        let data = (0..fan_in * fan_out)
            .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * bound)
            .collect();
        params.insert(
            format!("{prefix}w{i}"),
            Tensor::new(vec![*fan_in, *fan_out], data)?,
        )?;
        params.insert(format!("{prefix}b{i}"), Tensor::zeros(&[*fan_out]))?;
    }
    Ok(params)
}

fn check_input(spec: &MlpSpec, shape: &[usize]) -> Result<()> {
    let ok = match shape.len() {
        1 => shape[0] == spec.input_dim,
        2 => shape[1] == spec.input_dim,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(TensorError::ShapeMismatch {
            context: "mlp_forward input".into(),
            expected: vec![spec.input_dim],
            found: shape.to_vec(),
        })
    }
}

/// Forward pass recorded on the tape. `x` may be `[batch, in]` or `[in]`
/// (treated as a single row); the output is always `[batch, out]`.
pub fn mlp_forward(
    tape: &Tape,
    spec: &MlpSpec,
    params: &BoundParams,
    prefix: &str,
    x: TapeTensor,
) -> Result<TapeTensor> {
    spec.validate()?;
    check_input(spec, &tape.shape(x))?;
    let mut h = if tape.shape(x).len() == 1 {
        tape.reshape(x, &[1, spec.input_dim])?
    } else {
        x
    };
    for i in 0..spec.layer_count() {
        let w = params.get(&format!("{prefix}w{i}"))?;
        let b = params.get(&format!("{prefix}b{i}"))?;
        h = tape.add_row(tape.matmul(h, w)?, b)?;
        h = match spec.activation_for_layer(i) {
            Some(Activation::Relu) => tape.relu(h)?,
            Some(Activation::Tanh) => tape.tanh(h)?,
            None => h,
        };
    }
    Ok(h)
}

/// Tape-free forward pass over plain tensors; used for target networks and
/// evaluation. Numerics are shared with the tape path through the same
/// kernels, so both produce identical values.
pub fn mlp_forward_value(
    spec: &MlpSpec,
    params: &ParamSet,
    prefix: &str,
    x: &Tensor,
) -> Result<Tensor> {
    spec.validate()?;
    check_input(spec, x.shape())?;
    let mut h = if x.shape().len() == 1 {
        Tensor::new(vec![1, spec.input_dim], x.data().to_vec())?
    } else {
        x.clone()
    };
    for i in 0..spec.layer_count() {
        let w = params.get(&format!("{prefix}w{i}"))?;
        let b = params.get(&format!("{prefix}b{i}"))?;
        if w.rows() != h.cols() {
            return Err(TensorError::ShapeMismatch {
                context: format!("mlp layer {i}"),
                expected: vec![h.cols()],
                found: w.shape().to_vec(),
            });
        }
        h = kernels::add_row(&kernels::matmul(&h, w), b);
        h = match spec.activation_for_layer(i) {
            Some(Activation::Relu) => kernels::map(&h, |v| v.max(0.0)),
            Some(Activation::Tanh) => kernels::map(&h, f64::tanh),
            None => h,
        };
    }
    h.check_finite("mlp_forward_value")?;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_linear(dim: usize) -> (MlpSpec, ParamSet) {
        let spec = MlpSpec::new(dim, vec![], dim);
        let mut params = ParamSet::new();
        let mut eye = vec![0.0; dim * dim];
        for i in 0..dim {
            eye[i * dim + i] = 1.0;
        }
        params
            .insert("w0", Tensor::new(vec![dim, dim], eye).unwrap())
            .unwrap();
        params.insert("b0", Tensor::zeros(&[dim])).unwrap();
        (spec, params)
    }

    #[test]
    fn identity_layer_returns_input() {
        let (spec, params) = identity_linear(3);
        let x = Tensor::from_vec(vec![1.0, 2.0, 3.0]).unwrap();
        let y = mlp_forward_value(&spec, &params, "", &x).unwrap();
        assert_eq!(y.data(), &[1.0, 2.0, 3.0]);

        let tape = Tape::new();
        let xt = tape.leaf(x);
        let bound = params.bind(&tape);
        let yt = mlp_forward(&tape, &spec, &bound, "", xt).unwrap();
        assert_eq!(tape.value(yt).data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn zero_relu_layer_maps_everything_to_zero() {
        let mut spec = MlpSpec::new(4, vec![], 2);
        spec.final_activation = Some(Activation::Relu);
        let mut params = ParamSet::new();
        params.insert("w0", Tensor::zeros(&[4, 2])).unwrap();
        params.insert("b0", Tensor::zeros(&[2])).unwrap();
        let y = mlp_forward_value(
            &spec,
            &params,
            "",
            &Tensor::from_vec(vec![-3.0, 5.0, 0.1, 9.9]).unwrap(),
        )
        .unwrap();
        assert_eq!(y.data(), &[0.0, 0.0]);
    }

    /// Expected values computed with an independent scratch-script forward
    /// pass (plain Python loops over the same fixed weights).
    #[test]
    fn two_layer_forward_matches_independent_oracle() {
        let mut spec = MlpSpec::new(2, vec![3], 2);
        spec.activation = Activation::Relu;
        let mut params = ParamSet::new();
        params
            .insert(
                "w0",
                Tensor::from_rows(&[vec![0.5, -1.0, 0.25], vec![1.5, 0.75, -0.5]]).unwrap(),
            )
            .unwrap();
        params
            .insert("b0", Tensor::from_vec(vec![0.1, -0.2, 0.3]).unwrap())
            .unwrap();
        params
            .insert(
                "w1",
                Tensor::from_rows(&[vec![1.0, -1.0], vec![0.5, 0.5], vec![-0.25, 2.0]]).unwrap(),
            )
            .unwrap();
        params
            .insert("b1", Tensor::from_vec(vec![0.05, -0.05]).unwrap())
            .unwrap();
        let y = mlp_forward_value(
            &spec,
            &params,
            "",
            &Tensor::from_vec(vec![1.0, 0.0]).unwrap(),
        )
        .unwrap();
        // h = relu([0.6, -1.2, 0.55]) = [0.6, 0, 0.55]
        // y = [0.6*1.0 - 0.55*0.25 + 0.05, -0.6 + 2*0.55 - 0.05]
        let expected = [0.5125, 0.45];
        for (got, want) in y.data().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let spec = MlpSpec::new(5, vec![4], 3);
        let a = init_mlp_params(&spec, "m.", &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = init_mlp_params(&spec, "m.", &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let c = init_mlp_params(&spec, "m.", &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        assert!(a.bit_identical(&b));
        assert!(!a.bit_identical(&c));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let (spec, params) = identity_linear(3);
        let bad = Tensor::from_vec(vec![1.0, 2.0]).unwrap();
        assert!(mlp_forward_value(&spec, &params, "", &bad).is_err());
    }

    #[test]
    fn zero_dims_are_rejected() {
        let spec = MlpSpec::new(0, vec![], 2);
        assert!(spec.validate().is_err());
        let spec = MlpSpec::new(2, vec![3, 0], 2);
        assert!(spec.validate().is_err());
    }
}
