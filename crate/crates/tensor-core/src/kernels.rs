//! Raw value kernels shared by the tape ops and the tape-free forward passes.

use crate::tensor::Tensor;

pub(crate) fn ewise(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::from_raw(a.shape().to_vec(), data)
}

pub(crate) fn map(a: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::from_raw(a.shape().to_vec(), a.data().iter().map(|&x| f(x)).collect())
}

/// [m,k] @ [k,n] -> [m,n], cache-friendly i-k-j loop order.
pub(crate) fn matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = (a.rows(), a.cols());
    let n = b.cols();
    let mut out = vec![0.0; m * n];
    let ad = a.data();
    let bd = b.data();
    for i in 0..m {
        let a_row = &ad[i * k..(i + 1) * k];
        let o_row = &mut out[i * n..(i + 1) * n];
        for (p, &a_ip) in a_row.iter().enumerate() {
            if a_ip == 0.0 {
                continue;
            }
            let b_row = &bd[p * n..(p + 1) * n];
            for (o, &b_pj) in o_row.iter_mut().zip(b_row) {
                *o += a_ip * b_pj;
            }
        }
    }
    Tensor::from_raw(vec![m, n], out)
}

/// [m,k] @ [n,k]^T -> [m,n]
pub(crate) fn matmul_bt(a: &Tensor, b: &Tensor) -> Tensor {
    let (m, k) = (a.rows(), a.cols());
    let n = b.rows();
    let mut out = vec![0.0; m * n];
    let ad = a.data();
    let bd = b.data();
    for i in 0..m {
        let a_row = &ad[i * k..(i + 1) * k];
        for j in 0..n {
            let b_row = &bd[j * k..(j + 1) * k];
            out[i * n + j] = a_row.iter().zip(b_row).map(|(&x, &y)| x * y).sum();
        }
    }
    Tensor::from_raw(vec![m, n], out)
}

/// [k,m]^T @ [k,n] -> [m,n]
pub(crate) fn matmul_at(a: &Tensor, b: &Tensor) -> Tensor {
    let (k, m) = (a.rows(), a.cols());
    let n = b.cols();
    let mut out = vec![0.0; m * n];
    let ad = a.data();
    let bd = b.data();
    for p in 0..k {
        let a_row = &ad[p * m..(p + 1) * m];
        let b_row = &bd[p * n..(p + 1) * n];
        for (i, &a_pi) in a_row.iter().enumerate() {
            if a_pi == 0.0 {
                continue;
            }
            let o_row = &mut out[i * n..(i + 1) * n];
            for (o, &b_pj) in o_row.iter_mut().zip(b_row) {
                *o += a_pi * b_pj;
            }
        }
    }
    Tensor::from_raw(vec![m, n], out)
}

/// [m,n] + [n], bias broadcast over rows.
pub(crate) fn add_row(a: &Tensor, bias: &Tensor) -> Tensor {
    let (m, n) = (a.rows(), a.cols());
    let mut data = a.data().to_vec();
    for i in 0..m {
        for (v, &b) in data[i * n..(i + 1) * n].iter_mut().zip(bias.data()) {
            *v += b;
        }
    }
    Tensor::from_raw(a.shape().to_vec(), data)
}

/// [m,n] - [m], column broadcast over columns.
pub(crate) fn sub_col(a: &Tensor, col: &Tensor) -> Tensor {
    let (m, n) = (a.rows(), a.cols());
    let mut data = a.data().to_vec();
    for i in 0..m {
        let c = col.data()[i];
        for v in &mut data[i * n..(i + 1) * n] {
            *v -= c;
        }
    }
    Tensor::from_raw(a.shape().to_vec(), data)
}

pub(crate) fn sum_rows(a: &Tensor) -> Tensor {
    let (m, n) = (a.rows(), a.cols());
    let data = (0..m)
        .map(|i| a.data()[i * n..(i + 1) * n].iter().sum())
        .collect();
    Tensor::from_raw(vec![m], data)
}

/// Numerically stable log-sum-exp along `axis` of a 1-D or 2-D tensor.
/// 1-D with axis 0 yields a scalar; 2-D reduces the given axis.
pub(crate) fn logsumexp(a: &Tensor, axis: usize) -> Tensor {
    match a.shape().len() {
        0 | 1 => Tensor::scalar(lse_slice_strided(a.data(), 1)),
        _ => {
            let (m, n) = (a.rows(), a.cols());
            if axis == 1 {
                let data = (0..m)
                    .map(|i| lse_slice_strided(&a.data()[i * n..(i + 1) * n], 1))
                    .collect();
                Tensor::from_raw(vec![m], data)
            } else {
                let data = (0..n)
                    .map(|j| lse_slice_strided(&a.data()[j..], n))
                    .collect();
                Tensor::from_raw(vec![n], data)
            }
        }
    }
}

fn lse_slice_strided(xs: &[f64], stride: usize) -> f64 {
    let vals = xs.iter().step_by(stride);
    let max = vals.clone().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let sum: f64 = vals.map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// out[i] = a[i, idx[i]]
pub(crate) fn take_per_row(a: &Tensor, idx: &[usize]) -> Tensor {
    let n = a.cols();
    let data = idx
        .iter()
        .enumerate()
        .map(|(i, &j)| a.data()[i * n + j])
        .collect();
    Tensor::from_raw(vec![idx.len()], data)
}

/// Per-row standardization: (x - mean) / sqrt(var + eps), biased variance.
pub(crate) fn layer_norm_row(a: &Tensor, eps: f64) -> Tensor {
    let (m, n) = (a.rows(), a.cols());
    let nf = n as f64;
    let mut data = vec![0.0; m * n];
    for i in 0..m {
        let row = &a.data()[i * n..(i + 1) * n];
        let mean = row.iter().sum::<f64>() / nf;
        let var = row.iter().map(|&x| (x - mean).powi(2)).sum::<f64>() / nf;
        let inv_std = 1.0 / (var + eps).sqrt();
        for (o, &x) in data[i * n..(i + 1) * n].iter_mut().zip(row) {
            *o = (x - mean) * inv_std;
        }
    }
    Tensor::from_raw(a.shape().to_vec(), data)
}

pub(crate) fn concat_cols(parts: &[&Tensor]) -> Tensor {
    let m = parts[0].rows();
    let total: usize = parts.iter().map(|p| p.cols()).sum();
    let mut data = Vec::with_capacity(m * total);
    for i in 0..m {
        for p in parts {
            let n = p.cols();
            data.extend_from_slice(&p.data()[i * n..(i + 1) * n]);
        }
    }
    Tensor::from_raw(vec![m, total], data)
}
