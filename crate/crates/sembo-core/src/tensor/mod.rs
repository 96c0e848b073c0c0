//! Dense 2-D tensors and the forward kernels shared by the autodiff tape and
//! the inference path. Keeping one kernel per op guarantees training-time and
//! inference-time forwards are bit-identical.

pub mod adamw;
pub mod graph;

use crate::error::TensorError;
use crate::num::Scalar;

/// Row-major dense tensor. Everything in this crate is rank 2; scalars are
/// `[1,1]` and row vectors `[1,d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { shape: vec![rows, cols], data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, TensorError> {
        if data.len() != rows * cols {
            return Err(TensorError::ShapeMismatch {
                op: "from_vec",
                lhs: vec![rows, cols],
                rhs: vec![data.len()],
            });
        }
        Ok(Self { shape: vec![rows, cols], data })
    }

    pub fn scalar(v: T) -> Self {
        Self { shape: vec![1, 1], data: vec![v] }
    }

    pub fn row(data: Vec<T>) -> Self {
        Self { shape: vec![1, data.len()], data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape[1]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.shape[1] + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        let cols = self.shape[1];
        self.data[r * cols + c] = v;
    }

    /// The single element of a `[1,1]` tensor.
    pub fn item(&self) -> T {
        assert_eq!(self.data.len(), 1, "item() requires a scalar tensor");
        self.data[0]
    }

    pub fn is_scalar(&self) -> bool {
        self.rows() == 1 && self.cols() == 1
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Lossless-when-widening conversion between scalar types.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|v| U::of(v.as_f64())).collect() }
    }
}

/// Boolean attention mask, row-major `[rows, cols]`; `true` = may attend.
#[derive(Debug, Clone, PartialEq)]
pub struct BoolMask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl BoolMask {
    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn allowed(&self, r: usize, c: usize) -> bool {
        self.data[r * self.cols + c]
    }

    pub fn row_sum(&self, r: usize) -> usize {
        (0..self.cols).filter(|&c| self.allowed(r, c)).count()
    }
}

fn check_finite<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<(), TensorError> {
    if t.all_finite() {
        Ok(())
    } else {
        Err(TensorError::NonFinite { op })
    }
}

/// Forward kernels. Pure functions of their inputs; every kernel rejects
/// non-finite outputs rather than propagating NaN/Inf.
pub mod kernels {
    use super::*;

    /// `a @ b` or `a @ b^T`.
    pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, transpose_b: bool) -> Result<Tensor<T>, TensorError> {
        let (m, ka) = (a.rows(), a.cols());
        let (kb, n) = if transpose_b { (b.cols(), b.rows()) } else { (b.rows(), b.cols()) };
        if ka != kb {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let mut out = Tensor::zeros(m, n);
        if transpose_b {
            for i in 0..m {
                for j in 0..n {
                    let mut acc = T::zero();
                    for p in 0..ka {
                        acc = acc + a.at(i, p) * b.at(j, p);
                    }
                    out.set(i, j, acc);
                }
            }
        } else {
            // ikj order: streams over b's rows.
            for i in 0..m {
                for p in 0..ka {
                    let aip = a.at(i, p);
                    let row_out = i * n;
                    let row_b = p * n;
                    for j in 0..n {
                        out.data[row_out + j] = out.data[row_out + j] + aip * b.data[row_b + j];
                    }
                }
            }
        }
        check_finite("matmul", &out)?;
        Ok(out)
    }

    pub fn add<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        if a.shape() != b.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "add",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let mut out = a.clone();
        for (o, &x) in out.data.iter_mut().zip(&b.data) {
            *o = *o + x;
        }
        check_finite("add", &out)?;
        Ok(out)
    }

    /// `[N,d] + [1,d]`, the bias broadcast over rows.
    pub fn add_bias<T: Scalar>(a: &Tensor<T>, bias: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        if bias.rows() != 1 || bias.cols() != a.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias",
                lhs: a.shape().to_vec(),
                rhs: bias.shape().to_vec(),
            });
        }
        let mut out = a.clone();
        let d = a.cols();
        for r in 0..a.rows() {
            for c in 0..d {
                out.data[r * d + c] = out.data[r * d + c] + bias.data[c];
            }
        }
        check_finite("add_bias", &out)?;
        Ok(out)
    }

    pub fn scale<T: Scalar>(a: &Tensor<T>, c: T) -> Result<Tensor<T>, TensorError> {
        let mut out = a.clone();
        for o in &mut out.data {
            *o = *o * c;
        }
        check_finite("scale", &out)?;
        Ok(out)
    }

    pub fn add_scalar<T: Scalar>(a: &Tensor<T>, c: T) -> Result<Tensor<T>, TensorError> {
        let mut out = a.clone();
        for o in &mut out.data {
            *o = *o + c;
        }
        check_finite("add_scalar", &out)?;
        Ok(out)
    }

    pub fn mul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        if a.shape() != b.shape() {
            return Err(TensorError::ShapeMismatch {
                op: "mul",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let mut out = a.clone();
        for (o, &x) in out.data.iter_mut().zip(&b.data) {
            *o = *o * x;
        }
        check_finite("mul", &out)?;
        Ok(out)
    }

    pub fn sum_all<T: Scalar>(a: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        let total = a.data.iter().fold(T::zero(), |acc, &v| acc + v);
        let out = Tensor::scalar(total);
        check_finite("sum_all", &out)?;
        Ok(out)
    }

    /// Column means over the row axis: `[N,d] -> [1,d]`.
    pub fn mean_axis0<T: Scalar>(a: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        let n = a.rows();
        let d = a.cols();
        let inv = T::one() / T::of(n as f64);
        let mut out = Tensor::zeros(1, d);
        for r in 0..n {
            for c in 0..d {
                out.data[c] = out.data[c] + a.at(r, c);
            }
        }
        for o in &mut out.data {
            *o = *o * inv;
        }
        check_finite("mean_axis0", &out)?;
        Ok(out)
    }

    pub fn concat_cols<T: Scalar>(parts: &[&Tensor<T>]) -> Result<Tensor<T>, TensorError> {
        assert!(!parts.is_empty());
        let rows = parts[0].rows();
        for p in parts {
            if p.rows() != rows {
                return Err(TensorError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: parts[0].shape().to_vec(),
                    rhs: p.shape().to_vec(),
                });
            }
        }
        let total: usize = parts.iter().map(|p| p.cols()).sum();
        let mut out = Tensor::zeros(rows, total);
        for r in 0..rows {
            let mut offset = 0;
            for p in parts {
                for c in 0..p.cols() {
                    out.data[r * total + offset + c] = p.at(r, c);
                }
                offset += p.cols();
            }
        }
        check_finite("concat_cols", &out)?;
        Ok(out)
    }

    pub fn narrow_cols<T: Scalar>(a: &Tensor<T>, start: usize, len: usize) -> Result<Tensor<T>, TensorError> {
        if start + len > a.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "narrow_cols",
                lhs: a.shape().to_vec(),
                rhs: vec![start, len],
            });
        }
        let mut out = Tensor::zeros(a.rows(), len);
        for r in 0..a.rows() {
            for c in 0..len {
                out.data[r * len + c] = a.at(r, start + c);
            }
        }
        Ok(out)
    }

    pub fn narrow_rows<T: Scalar>(a: &Tensor<T>, start: usize, len: usize) -> Result<Tensor<T>, TensorError> {
        if start + len > a.rows() {
            return Err(TensorError::ShapeMismatch {
                op: "narrow_rows",
                lhs: a.shape().to_vec(),
                rhs: vec![start, len],
            });
        }
        let d = a.cols();
        let data = a.data[start * d..(start + len) * d].to_vec();
        Tensor::from_vec(len, d, data)
    }

    /// Row-wise softmax over allowed positions; disallowed entries are
    /// exactly zero. Every row must have at least one allowed column.
    pub fn softmax_masked<T: Scalar>(logits: &Tensor<T>, mask: &BoolMask) -> Result<Tensor<T>, TensorError> {
        if logits.rows() != mask.rows() || logits.cols() != mask.cols() {
            return Err(TensorError::ShapeMismatch {
                op: "softmax_masked",
                lhs: logits.shape().to_vec(),
                rhs: vec![mask.rows(), mask.cols()],
            });
        }
        let (n, d) = (logits.rows(), logits.cols());
        let mut out = Tensor::zeros(n, d);
        for r in 0..n {
            let mut max = T::neg_infinity();
            for c in 0..d {
                if mask.allowed(r, c) {
                    max = max.max(logits.at(r, c));
                }
            }
            if max == T::neg_infinity() {
                return Err(TensorError::FullyMaskedRow { row: r });
            }
            let mut denom = T::zero();
            for c in 0..d {
                if mask.allowed(r, c) {
                    let e = (logits.at(r, c) - max).exp();
                    out.data[r * d + c] = e;
                    denom = denom + e;
                }
            }
            for c in 0..d {
                if mask.allowed(r, c) {
                    out.data[r * d + c] = out.data[r * d + c] / denom;
                }
            }
        }
        check_finite("softmax_masked", &out)?;
        Ok(out)
    }

    /// Per-row layer normalization with affine parameters `gamma`, `beta`
    /// (both `[1,d]`). Returns `(output, xhat, inv_std)`; the latter two are
    /// the saved activations the backward pass needs.
    pub fn layer_norm<T: Scalar>(
        x: &Tensor<T>,
        gamma: &Tensor<T>,
        beta: &Tensor<T>,
        eps: T,
    ) -> Result<(Tensor<T>, Tensor<T>, Vec<T>), TensorError> {
        let d = x.cols();
        if gamma.rows() != 1 || gamma.cols() != d || beta.rows() != 1 || beta.cols() != d {
            return Err(TensorError::ShapeMismatch {
                op: "layer_norm",
                lhs: x.shape().to_vec(),
                rhs: gamma.shape().to_vec(),
            });
        }
        let n = x.rows();
        let inv_d = T::one() / T::of(d as f64);
        let mut out = Tensor::zeros(n, d);
        let mut xhat = Tensor::zeros(n, d);
        let mut inv_stds = Vec::with_capacity(n);
        for r in 0..n {
            let mut mean = T::zero();
            for c in 0..d {
                mean = mean + x.at(r, c);
            }
            mean = mean * inv_d;
            let mut var = T::zero();
            for c in 0..d {
                let dlt = x.at(r, c) - mean;
                var = var + dlt * dlt;
            }
            var = var * inv_d;
            let inv_std = T::one() / (var + eps).sqrt();
            inv_stds.push(inv_std);
            for c in 0..d {
                let h = (x.at(r, c) - mean) * inv_std;
                xhat.data[r * d + c] = h;
                out.data[r * d + c] = h * gamma.data[c] + beta.data[c];
            }
        }
        check_finite("layer_norm", &out)?;
        Ok((out, xhat, inv_stds))
    }

    /// GELU, tanh approximation.
    pub fn gelu<T: Scalar>(a: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        let mut out = a.clone();
        for o in &mut out.data {
            *o = gelu_scalar(*o);
        }
        check_finite("gelu", &out)?;
        Ok(out)
    }

    pub(crate) fn gelu_scalar<T: Scalar>(x: T) -> T {
        let c = T::of((2.0 / std::f64::consts::PI).sqrt());
        let a = T::of(0.044715);
        let u = c * (x + a * x * x * x);
        T::of(0.5) * x * (T::one() + u.tanh())
    }

    pub fn softplus<T: Scalar>(a: &Tensor<T>) -> Result<Tensor<T>, TensorError> {
        let mut out = a.clone();
        for o in &mut out.data {
            *o = softplus_scalar(*o);
        }
        check_finite("softplus", &out)?;
        Ok(out)
    }

    pub(crate) fn softplus_scalar<T: Scalar>(x: T) -> T {
        // max(x, 0) + ln(1 + exp(-|x|)) avoids overflow on both tails.
        x.max(T::zero()) + (T::one() + (-x.abs()).exp()).ln()
    }

    /// Summed Gaussian negative log-likelihood of observations `y` under the
    /// per-row `(mu, sigma)` columns: `sum_i ln s_i + ln(2 pi)/2 + (y-m)^2/(2 s^2)`.
    pub fn gaussian_nll_sum<T: Scalar>(
        mu: &Tensor<T>,
        sigma: &Tensor<T>,
        y: &[T],
    ) -> Result<Tensor<T>, TensorError> {
        if mu.shape() != sigma.shape() || mu.cols() != 1 || mu.rows() != y.len() {
            return Err(TensorError::ShapeMismatch {
                op: "gaussian_nll_sum",
                lhs: mu.shape().to_vec(),
                rhs: vec![y.len(), 1],
            });
        }
        let half_ln_2pi = T::of(0.5 * (2.0 * std::f64::consts::PI).ln());
        let mut total = T::zero();
        for i in 0..y.len() {
            let m = mu.data[i];
            let s = sigma.data[i];
            let z = y[i] - m;
            total = total + s.ln() + half_ln_2pi + z * z / (T::of(2.0) * s * s);
        }
        let out = Tensor::scalar(total);
        check_finite("gaussian_nll_sum", &out)?;
        Ok(out)
    }
}
