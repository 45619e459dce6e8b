//! Wengert-tape reverse-mode differentiation.
//!
//! A [`Tape`] records every operation of one loss evaluation; [`Tape::backward`]
//! replays the record in reverse and accumulates exact gradients. Tapes are
//! cheap, single-threaded and rebuilt per loss evaluation; values that must
//! not receive gradients (targets, sampled weights) are computed tape-free and
//! enter as constants.

use std::cell::RefCell;

use crate::error::{Result, TensorError};
use crate::kernels;
use crate::tensor::Tensor;

/// Handle to a node on a [`Tape`]. The node id indexes the owning tape;
/// constants never appear on the tape at all (see [`Op::MulConst`] et al.).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapeTensor {
    pub(crate) id: usize,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Neg(usize),
    Scale(usize, f64),
    AddScalar(usize),
    MulConst(usize, Tensor),
    Matmul(usize, usize),
    AddRow(usize, usize),
    SubCol(usize, usize),
    Relu(usize),
    Tanh(usize),
    Exp(usize),
    SumAll(usize),
    MeanAll(usize),
    SumRows(usize),
    LogSumExp(usize, usize),
    TakePerRow(usize, Vec<usize>),
    ConcatCols(Vec<usize>),
    Reshape(usize, Vec<usize>),
    LayerNormRow(usize),
}

const LAYER_NORM_EPS: f64 = 1e-5;

struct Node {
    value: Tensor,
    op: Op,
}

/// Gradients produced by [`Tape::backward`], indexed by tape node.
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. a node, if any path reached it.
    pub fn wrt(&self, t: TapeTensor) -> Option<&Tensor> {
        self.grads.get(t.id).and_then(Option::as_ref)
    }

    /// Gradient of the loss w.r.t. a node, zeros when unreached.
    pub fn wrt_or_zeros(&self, t: TapeTensor, shape: &[usize]) -> Tensor {
        match self.wrt(t) {
            Some(g) => g.clone(),
            None => Tensor::zeros(shape),
        }
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    fn push(&self, value: Tensor, op: Op) -> TapeTensor {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, op });
        TapeTensor {
            id: nodes.len() - 1,
        }
    }

    /// Record an input (variable) node. Parameters and any inputs that need
    /// gradients enter the tape this way.
    pub fn leaf(&self, value: Tensor) -> TapeTensor {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, t: TapeTensor) -> Tensor {
        self.nodes.borrow()[t.id].value.clone()
    }

    pub fn shape(&self, t: TapeTensor) -> Vec<usize> {
        self.nodes.borrow()[t.id].value.shape().to_vec()
    }

    fn check(&self, t: TapeTensor, context: &str) -> Result<()> {
        if t.id >= self.nodes.borrow().len() {
            return Err(TensorError::DetachedGraph { id: t.id });
        }
        let _ = context;
        Ok(())
    }

    fn binary_same_shape(
        &self,
        a: TapeTensor,
        b: TapeTensor,
        context: &str,
        f: impl Fn(f64, f64) -> f64,
        op: impl Fn(usize, usize) -> Op,
    ) -> Result<TapeTensor> {
        self.check(a, context)?;
        self.check(b, context)?;
        let nodes = self.nodes.borrow();
        let (va, vb) = (&nodes[a.id].value, &nodes[b.id].value);
        if !va.same_shape(vb) {
            return Err(TensorError::ShapeMismatch {
                context: context.into(),
                expected: va.shape().to_vec(),
                found: vb.shape().to_vec(),
            });
        }
        let out = kernels::ewise(va, vb, f);
        drop(nodes);
        Ok(self.push(out, op(a.id, b.id)))
    }

    pub fn add(&self, a: TapeTensor, b: TapeTensor) -> Result<TapeTensor> {
        self.binary_same_shape(a, b, "add", |x, y| x + y, Op::Add)
    }

    pub fn sub(&self, a: TapeTensor, b: TapeTensor) -> Result<TapeTensor> {
        self.binary_same_shape(a, b, "sub", |x, y| x - y, Op::Sub)
    }

    /// Elementwise product of same-shaped tensors.
    pub fn mul(&self, a: TapeTensor, b: TapeTensor) -> Result<TapeTensor> {
        self.binary_same_shape(a, b, "mul", |x, y| x * y, Op::Mul)
    }

    pub fn neg(&self, a: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "neg")?;
        let out = kernels::map(&self.nodes.borrow()[a.id].value, |x| -x);
        Ok(self.push(out, Op::Neg(a.id)))
    }

    pub fn scale(&self, a: TapeTensor, c: f64) -> Result<TapeTensor> {
        self.check(a, "scale")?;
        let out = kernels::map(&self.nodes.borrow()[a.id].value, |x| c * x);
        Ok(self.push(out, Op::Scale(a.id, c)))
    }

    pub fn add_scalar(&self, a: TapeTensor, c: f64) -> Result<TapeTensor> {
        self.check(a, "add_scalar")?;
        let out = kernels::map(&self.nodes.borrow()[a.id].value, |x| x + c);
        Ok(self.push(out, Op::AddScalar(a.id)))
    }

    /// Elementwise product with a constant tensor (no gradient to the constant).
    pub fn mul_const(&self, a: TapeTensor, c: &Tensor) -> Result<TapeTensor> {
        self.check(a, "mul_const")?;
        let nodes = self.nodes.borrow();
        let va = &nodes[a.id].value;
        if !va.same_shape(c) {
            return Err(TensorError::ShapeMismatch {
                context: "mul_const".into(),
                expected: va.shape().to_vec(),
                found: c.shape().to_vec(),
            });
        }
        let out = kernels::ewise(va, c, |x, y| x * y);
        drop(nodes);
        Ok(self.push(out, Op::MulConst(a.id, c.clone())))
    }

    /// [m,k] @ [k,n] -> [m,n]
    pub fn matmul(&self, a: TapeTensor, b: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "matmul")?;
        self.check(b, "matmul")?;
        let nodes = self.nodes.borrow();
        let (va, vb) = (&nodes[a.id].value, &nodes[b.id].value);
        if va.cols() != vb.rows() || va.shape().len() != 2 || vb.shape().len() != 2 {
            return Err(TensorError::ShapeMismatch {
                context: "matmul".into(),
                expected: va.shape().to_vec(),
                found: vb.shape().to_vec(),
            });
        }
        let out = kernels::matmul(va, vb);
        drop(nodes);
        Ok(self.push(out, Op::Matmul(a.id, b.id)))
    }

    /// [m,n] + [n] with the bias broadcast over rows.
    pub fn add_row(&self, a: TapeTensor, bias: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "add_row")?;
        self.check(bias, "add_row")?;
        let nodes = self.nodes.borrow();
        let (va, vb) = (&nodes[a.id].value, &nodes[bias.id].value);
        if va.cols() != vb.numel() || vb.shape().len() != 1 {
            return Err(TensorError::ShapeMismatch {
                context: "add_row".into(),
                expected: vec![va.cols()],
                found: vb.shape().to_vec(),
            });
        }
        let out = kernels::add_row(va, vb);
        drop(nodes);
        Ok(self.push(out, Op::AddRow(a.id, bias.id)))
    }

    /// [m,n] - [m] with the column broadcast over columns.
    pub fn sub_col(&self, a: TapeTensor, col: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "sub_col")?;
        self.check(col, "sub_col")?;
        let nodes = self.nodes.borrow();
        let (va, vc) = (&nodes[a.id].value, &nodes[col.id].value);
        if va.rows() != vc.numel() || vc.shape().len() != 1 {
            return Err(TensorError::ShapeMismatch {
                context: "sub_col".into(),
                expected: vec![va.rows()],
                found: vc.shape().to_vec(),
            });
        }
        let out = kernels::sub_col(va, vc);
        drop(nodes);
        Ok(self.push(out, Op::SubCol(a.id, col.id)))
    }

    pub fn relu(&self, a: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "relu")?;
        let out = kernels::map(&self.nodes.borrow()[a.id].value, |x| x.max(0.0));
        Ok(self.push(out, Op::Relu(a.id)))
    }

    pub fn tanh(&self, a: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "tanh")?;
        let out = kernels::map(&self.nodes.borrow()[a.id].value, f64::tanh);
        Ok(self.push(out, Op::Tanh(a.id)))
    }

    pub fn exp(&self, a: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "exp")?;
        let out = kernels::map(&self.nodes.borrow()[a.id].value, f64::exp);
        Ok(self.push(out, Op::Exp(a.id)))
    }

    pub fn sum_all(&self, a: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "sum_all")?;
        let out = Tensor::scalar(self.nodes.borrow()[a.id].value.data().iter().sum());
        out.check_finite("sum_all")?;
        Ok(self.push(out, Op::SumAll(a.id)))
    }

    pub fn mean_all(&self, a: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "mean_all")?;
        let nodes = self.nodes.borrow();
        let v = &nodes[a.id].value;
        if v.numel() == 0 {
            return Err(TensorError::InvalidArgument("mean of empty tensor".into()));
        }
        let out = Tensor::scalar(v.data().iter().sum::<f64>() / v.numel() as f64);
        out.check_finite("mean_all")?;
        drop(nodes);
        Ok(self.push(out, Op::MeanAll(a.id)))
    }

    /// Row sums of a [m,n] tensor -> [m].
    pub fn sum_rows(&self, a: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "sum_rows")?;
        let out = kernels::sum_rows(&self.nodes.borrow()[a.id].value);
        Ok(self.push(out, Op::SumRows(a.id)))
    }

    /// Stable log-sum-exp along `axis`; 1-D tensors reduce to a scalar.
    pub fn logsumexp(&self, a: TapeTensor, axis: usize) -> Result<TapeTensor> {
        self.check(a, "logsumexp")?;
        let nodes = self.nodes.borrow();
        let v = &nodes[a.id].value;
        let ndim = v.shape().len().max(1);
        if axis >= ndim || v.shape().iter().any(|&d| d == 0) || v.numel() == 0 {
            return Err(TensorError::InvalidAxis {
                axis,
                shape: v.shape().to_vec(),
            });
        }
        let out = kernels::logsumexp(v, axis);
        out.check_finite("logsumexp")?;
        drop(nodes);
        Ok(self.push(out, Op::LogSumExp(a.id, axis)))
    }

    /// out[i] = a[i, idx[i]] for a [m,n] tensor and m indices.
    pub fn take_per_row(&self, a: TapeTensor, idx: &[usize]) -> Result<TapeTensor> {
        self.check(a, "take_per_row")?;
        let nodes = self.nodes.borrow();
        let v = &nodes[a.id].value;
        if v.rows() != idx.len() || idx.iter().any(|&j| j >= v.cols()) {
            return Err(TensorError::InvalidArgument(format!(
                "take_per_row: {} indices for shape {:?}",
                idx.len(),
                v.shape()
            )));
        }
        let out = kernels::take_per_row(v, idx);
        drop(nodes);
        Ok(self.push(out, Op::TakePerRow(a.id, idx.to_vec())))
    }

    /// Per-row normalization to zero mean and unit variance (no affine).
    pub fn layer_norm_row(&self, a: TapeTensor) -> Result<TapeTensor> {
        self.check(a, "layer_norm_row")?;
        let nodes = self.nodes.borrow();
        let v = &nodes[a.id].value;
        if v.shape().len() != 2 || v.cols() == 0 {
            return Err(TensorError::ShapeMismatch {
                context: "layer_norm_row".into(),
                expected: vec![1, 1],
                found: v.shape().to_vec(),
            });
        }
        let out = kernels::layer_norm_row(v, LAYER_NORM_EPS);
        drop(nodes);
        Ok(self.push(out, Op::LayerNormRow(a.id)))
    }

    /// Same data, new shape; element count must match.
    pub fn reshape(&self, a: TapeTensor, shape: &[usize]) -> Result<TapeTensor> {
        self.check(a, "reshape")?;
        let nodes = self.nodes.borrow();
        let v = &nodes[a.id].value;
        if shape.iter().product::<usize>() != v.numel() {
            return Err(TensorError::ShapeMismatch {
                context: "reshape".into(),
                expected: v.shape().to_vec(),
                found: shape.to_vec(),
            });
        }
        let old_shape = v.shape().to_vec();
        let out = Tensor::from_raw(shape.to_vec(), v.data().to_vec());
        drop(nodes);
        Ok(self.push(out, Op::Reshape(a.id, old_shape)))
    }

    /// Horizontal concatenation of [m,n_i] blocks.
    pub fn concat_cols(&self, parts: &[TapeTensor]) -> Result<TapeTensor> {
        if parts.is_empty() {
            return Err(TensorError::InvalidArgument("concat of nothing".into()));
        }
        for p in parts {
            self.check(*p, "concat_cols")?;
        }
        let nodes = self.nodes.borrow();
        let m = nodes[parts[0].id].value.rows();
        for p in parts {
            if nodes[p.id].value.rows() != m {
                return Err(TensorError::ShapeMismatch {
                    context: "concat_cols".into(),
                    expected: vec![m],
                    found: vec![nodes[p.id].value.rows()],
                });
            }
        }
        let values: Vec<&Tensor> = parts.iter().map(|p| &nodes[p.id].value).collect();
        let out = kernels::concat_cols(&values);
        drop(nodes);
        Ok(self.push(out, Op::ConcatCols(parts.iter().map(|p| p.id).collect())))
    }

    /// Reverse sweep from a scalar loss; returns exact gradients for every
    /// node the loss depends on.
    pub fn backward(&self, loss: TapeTensor) -> Result<Gradients> {
        self.check(loss, "backward")?;
        let nodes = self.nodes.borrow();
        let loss_value = &nodes[loss.id].value;
        if !loss_value.is_scalar() {
            return Err(TensorError::NonScalarLoss {
                shape: loss_value.shape().to_vec(),
            });
        }
        loss_value.check_finite("backward loss")?;

        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.id] = Some(Tensor::full(loss_value.shape(), 1.0));

        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            match &node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g.clone());
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, kernels::map(&g, |x| -x));
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (&nodes[*a].value, &nodes[*b].value);
                    accumulate(&mut grads, *a, kernels::ewise(&g, vb, |x, y| x * y));
                    accumulate(&mut grads, *b, kernels::ewise(&g, va, |x, y| x * y));
                }
                Op::Neg(a) => accumulate(&mut grads, *a, kernels::map(&g, |x| -x)),
                Op::Scale(a, c) => {
                    let c = *c;
                    accumulate(&mut grads, *a, kernels::map(&g, |x| c * x));
                }
                Op::AddScalar(a) => accumulate(&mut grads, *a, g.clone()),
                Op::MulConst(a, c) => {
                    accumulate(&mut grads, *a, kernels::ewise(&g, c, |x, y| x * y));
                }
                Op::Matmul(a, b) => {
                    let (va, vb) = (&nodes[*a].value, &nodes[*b].value);
                    accumulate(&mut grads, *a, kernels::matmul_bt(&g, vb));
                    accumulate(&mut grads, *b, kernels::matmul_at(va, &g));
                }
                Op::AddRow(a, bias) => {
                    let (m, n) = (g.rows(), g.cols());
                    let mut db = vec![0.0; n];
                    for i in 0..m {
                        for (acc, &v) in db.iter_mut().zip(&g.data()[i * n..(i + 1) * n]) {
                            *acc += v;
                        }
                    }
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *bias, Tensor::from_raw(vec![n], db));
                }
                Op::SubCol(a, col) => {
                    let (m, n) = (g.rows(), g.cols());
                    let dc = (0..m)
                        .map(|i| -g.data()[i * n..(i + 1) * n].iter().sum::<f64>())
                        .collect();
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *col, Tensor::from_raw(vec![m], dc));
                }
                Op::Relu(a) => {
                    let va = &nodes[*a].value;
                    accumulate(
                        &mut grads,
                        *a,
                        kernels::ewise(&g, va, |gx, x| if x > 0.0 { gx } else { 0.0 }),
                    );
                }
                Op::Tanh(a) => {
                    let out = &node.value;
                    accumulate(
                        &mut grads,
                        *a,
                        kernels::ewise(&g, out, |gx, y| gx * (1.0 - y * y)),
                    );
                }
                Op::Exp(a) => {
                    let out = &node.value;
                    accumulate(&mut grads, *a, kernels::ewise(&g, out, |gx, y| gx * y));
                }
                Op::SumAll(a) => {
                    let va = &nodes[*a].value;
                    let gv = g.data()[0];
                    accumulate(&mut grads, *a, Tensor::full(va.shape(), gv));
                }
                Op::MeanAll(a) => {
                    let va = &nodes[*a].value;
                    let gv = g.data()[0] / va.numel() as f64;
                    accumulate(&mut grads, *a, Tensor::full(va.shape(), gv));
                }
                Op::SumRows(a) => {
                    let va = &nodes[*a].value;
                    let (m, n) = (va.rows(), va.cols());
                    let mut da = vec![0.0; m * n];
                    for i in 0..m {
                        let gv = g.data()[i];
                        for v in &mut da[i * n..(i + 1) * n] {
                            *v = gv;
                        }
                    }
                    accumulate(&mut grads, *a, Tensor::from_raw(va.shape().to_vec(), da));
                }
                Op::LogSumExp(a, axis) => {
                    let va = &nodes[*a].value;
                    let out = &node.value;
                    accumulate(&mut grads, *a, lse_backward(va, out, &g, *axis));
                }
                Op::TakePerRow(a, idx) => {
                    let va = &nodes[*a].value;
                    let (m, n) = (va.rows(), va.cols());
                    let mut da = vec![0.0; m * n];
                    for (i, &j) in idx.iter().enumerate() {
                        da[i * n + j] = g.data()[i];
                    }
                    accumulate(&mut grads, *a, Tensor::from_raw(va.shape().to_vec(), da));
                }
                Op::LayerNormRow(a) => {
                    let va = &nodes[*a].value;
                    let (m, n) = (va.rows(), va.cols());
                    let nf = n as f64;
                    let mut da = vec![0.0; m * n];
                    for i in 0..m {
                        let row = &va.data()[i * n..(i + 1) * n];
                        let grow = &g.data()[i * n..(i + 1) * n];
                        let mean = row.iter().sum::<f64>() / nf;
                        let var = row.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / nf;
                        let inv_std = 1.0 / (var + LAYER_NORM_EPS).sqrt();
                        let xhat: Vec<f64> = row.iter().map(|&x| (x - mean) * inv_std).collect();
                        let g_mean = grow.iter().sum::<f64>() / nf;
                        let gx_mean =
                            grow.iter().zip(&xhat).map(|(&gv, &xv)| gv * xv).sum::<f64>() / nf;
                        for j in 0..n {
                            da[i * n + j] =
                                inv_std * (grow[j] - g_mean - xhat[j] * gx_mean);
                        }
                    }
                    accumulate(&mut grads, *a, Tensor::from_raw(va.shape().to_vec(), da));
                }
                Op::Reshape(a, old_shape) => {
                    accumulate(
                        &mut grads,
                        *a,
                        Tensor::from_raw(old_shape.clone(), g.data().to_vec()),
                    );
                }
                Op::ConcatCols(parts) => {
                    let m = node.value.rows();
                    let total = node.value.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let n = nodes[p].value.cols();
                        let mut dp = Vec::with_capacity(m * n);
                        for i in 0..m {
                            dp.extend_from_slice(
                                &g.data()[i * total + offset..i * total + offset + n],
                            );
                        }
                        accumulate(
                            &mut grads,
                            p,
                            Tensor::from_raw(nodes[p].value.shape().to_vec(), dp),
                        );
                        offset += n;
                    }
                }
            }
            grads[id] = Some(g);
        }

        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Tensor>], id: usize, contribution: Tensor) {
    match &mut grads[id] {
        Some(existing) => {
            for (e, c) in existing.data_mut().iter_mut().zip(contribution.data()) {
                *e += c;
            }
        }
        slot @ None => *slot = Some(contribution),
    }
}

fn lse_backward(input: &Tensor, out: &Tensor, g: &Tensor, axis: usize) -> Tensor {
    let mut da = vec![0.0; input.numel()];
    match input.shape().len() {
        0 | 1 => {
            let gv = g.data()[0];
            let o = out.data()[0];
            for (d, &x) in da.iter_mut().zip(input.data()) {
                *d = gv * (x - o).exp();
            }
        }
        _ => {
            let (m, n) = (input.rows(), input.cols());
            if axis == 1 {
                for i in 0..m {
                    let gv = g.data()[i];
                    let o = out.data()[i];
                    for j in 0..n {
                        da[i * n + j] = gv * (input.data()[i * n + j] - o).exp();
                    }
                }
            } else {
                for j in 0..n {
                    let gv = g.data()[j];
                    let o = out.data()[j];
                    for i in 0..m {
                        da[i * n + j] = gv * (input.data()[i * n + j] - o).exp();
                    }
                }
            }
        }
    }
    Tensor::from_raw(input.shape().to_vec(), da)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_gradient_is_ones() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, -2.0, 3.5]).unwrap());
        let loss = tape.sum_all(x).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.wrt(x).unwrap().data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_scaled_loss_has_zero_gradients() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![0.3, 0.7]).unwrap());
        let y = tape.tanh(x).unwrap();
        let s = tape.sum_all(y).unwrap();
        let loss = tape.scale(s, 0.0).unwrap();
        let grads = tape.backward(loss).unwrap();
        assert_eq!(grads.wrt(x).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0]).unwrap());
        assert!(matches!(
            tape.backward(x),
            Err(TensorError::NonScalarLoss { .. })
        ));
    }

    #[test]
    fn logsumexp_matches_direct_evaluation() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1.0, 2.0, 3.0]).unwrap());
        let y = tape.logsumexp(x, 0).unwrap();
        // ln(e^1 + e^2 + e^3), evaluated independently.
        let expected = 3.407_605_964_444_807_9;
        assert!((tape.value(y).item().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_of_equal_entries_is_value_plus_ln_n() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::full(&[7], 2.5));
        let y = tape.logsumexp(x, 0).unwrap();
        assert!((tape.value(y).item().unwrap() - (2.5 + (7.0f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn logsumexp_singleton_is_identity() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![0.0]).unwrap());
        let y = tape.logsumexp(x, 0).unwrap();
        assert_eq!(tape.value(y).item().unwrap(), 0.0);
    }

    #[test]
    fn logsumexp_rejects_empty_axis() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::zeros(&[0]));
        assert!(matches!(
            tape.logsumexp(x, 0),
            Err(TensorError::InvalidAxis { .. })
        ));
    }

    #[test]
    fn logsumexp_is_stable_for_large_inputs() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::from_vec(vec![1000.0, 1000.0]).unwrap());
        let y = tape.logsumexp(x, 0).unwrap();
        assert!((tape.value(y).item().unwrap() - (1000.0 + (2.0f64).ln())).abs() < 1e-9);
    }

    #[test]
    fn matmul_shape_mismatch_is_rejected() {
        let tape = Tape::new();
        let a = tape.leaf(Tensor::zeros(&[2, 3]));
        let b = tape.leaf(Tensor::zeros(&[2, 3]));
        assert!(matches!(
            tape.matmul(a, b),
            Err(TensorError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn concat_cols_roundtrip_gradient() {
        let tape = Tape::new();
        let a = tape.leaf(Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap());
        let b = tape.leaf(Tensor::from_rows(&[vec![5.0], vec![6.0]]).unwrap());
        let c = tape.concat_cols(&[a, b]).unwrap();
        assert_eq!(tape.value(c).shape(), &[2, 3]);
        let s = tape.sum_all(c).unwrap();
        let grads = tape.backward(s).unwrap();
        assert_eq!(grads.wrt(a).unwrap().data(), &[1.0; 4]);
        assert_eq!(grads.wrt(b).unwrap().data(), &[1.0; 2]);
    }
}
