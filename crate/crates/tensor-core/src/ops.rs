//! Value-level operations for tape-free forward passes (target networks,
//! evaluation). These share kernels with the tape ops, so both paths compute
//! bit-identical values.

use crate::error::{Result, TensorError};
use crate::kernels;
use crate::tensor::Tensor;

fn require_same_shape(a: &Tensor, b: &Tensor, context: &str) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(TensorError::ShapeMismatch {
            context: context.into(),
            expected: a.shape().to_vec(),
            found: b.shape().to_vec(),
        })
    }
}

pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape().len() != 2 || b.shape().len() != 2 || a.cols() != b.rows() {
        return Err(TensorError::ShapeMismatch {
            context: "ops::matmul".into(),
            expected: a.shape().to_vec(),
            found: b.shape().to_vec(),
        });
    }
    Ok(kernels::matmul(a, b))
}

pub fn add_row(a: &Tensor, bias: &Tensor) -> Result<Tensor> {
    if bias.shape().len() != 1 || bias.numel() != a.cols() {
        return Err(TensorError::ShapeMismatch {
            context: "ops::add_row".into(),
            expected: vec![a.cols()],
            found: bias.shape().to_vec(),
        });
    }
    Ok(kernels::add_row(a, bias))
}

pub fn mul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    require_same_shape(a, b, "ops::mul")?;
    Ok(kernels::ewise(a, b, |x, y| x * y))
}

pub fn relu(a: &Tensor) -> Tensor {
    kernels::map(a, |x| x.max(0.0))
}

pub fn tanh(a: &Tensor) -> Tensor {
    kernels::map(a, f64::tanh)
}

pub fn layer_norm_row(a: &Tensor) -> Tensor {
    kernels::layer_norm_row(a, 1e-5)
}

pub fn sum_rows(a: &Tensor) -> Tensor {
    kernels::sum_rows(a)
}

pub fn logsumexp(a: &Tensor, axis: usize) -> Result<Tensor> {
    let ndim = a.shape().len().max(1);
    if axis >= ndim || a.numel() == 0 {
        return Err(TensorError::InvalidAxis {
            axis,
            shape: a.shape().to_vec(),
        });
    }
    Ok(kernels::logsumexp(a, axis))
}

pub fn concat_cols(parts: &[&Tensor]) -> Result<Tensor> {
    if parts.is_empty() {
        return Err(TensorError::InvalidArgument("concat of nothing".into()));
    }
    let m = parts[0].rows();
    for p in parts {
        if p.rows() != m {
            return Err(TensorError::ShapeMismatch {
                context: "ops::concat_cols".into(),
                expected: vec![m],
                found: p.shape().to_vec(),
            });
        }
    }
    Ok(kernels::concat_cols(parts))
}
