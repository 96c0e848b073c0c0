//! Define-by-run reverse-mode autodiff tape.
//!
//! Nodes are appended in forward order, so reverse insertion order is a
//! reverse topological order and the backward pass visits each node exactly
//! once. Saved activations (softmax probabilities, layer-norm statistics)
//! live on the node that produced them.

use std::rc::Rc;

use super::kernels;
use super::{BoolMask, Tensor};
use crate::error::TensorError;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op<T> {
    Leaf,
    MatMul { a: NodeId, b: NodeId, transpose_b: bool },
    Add { a: NodeId, b: NodeId },
    AddBias { a: NodeId, bias: NodeId },
    AddScalar { a: NodeId },
    Scale { a: NodeId, c: T },
    Mul { a: NodeId, b: NodeId },
    SumAll { a: NodeId },
    MeanAxis0 { a: NodeId },
    ConcatCols { parts: Vec<NodeId> },
    NarrowCols { a: NodeId, start: usize },
    NarrowRows { a: NodeId, start: usize },
    SoftmaxMasked { logits: NodeId, mask: Rc<BoolMask> },
    LayerNorm { x: NodeId, gamma: NodeId, beta: NodeId, xhat: Tensor<T>, inv_std: Vec<T> },
    Gelu { a: NodeId },
    Softplus { a: NodeId },
    GaussianNllSum { mu: NodeId, sigma: NodeId, y: Vec<T> },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
}

pub struct Graph<T> {
    nodes: Vec<Node<T>>,
    /// `(param index, leaf node)` registrations for gradient collection.
    params: Vec<(usize, NodeId)>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new(), params: Vec::new() }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { value, op });
        id
    }

    /// Constant input; receives no gradient of interest.
    pub fn leaf(&mut self, value: Tensor<T>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// Trainable input registered under `index` for gradient collection.
    pub fn param(&mut self, index: usize, value: Tensor<T>) -> NodeId {
        let id = self.push(value, Op::Leaf);
        self.params.push((index, id));
        id
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let v = kernels::matmul(self.value(a), self.value(b), false)?;
        Ok(self.push(v, Op::MatMul { a, b, transpose_b: false }))
    }

    /// `a @ b^T`.
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let v = kernels::matmul(self.value(a), self.value(b), true)?;
        Ok(self.push(v, Op::MatMul { a, b, transpose_b: true }))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let v = kernels::add(self.value(a), self.value(b))?;
        Ok(self.push(v, Op::Add { a, b }))
    }

    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId, TensorError> {
        let v = kernels::add_bias(self.value(a), self.value(bias))?;
        Ok(self.push(v, Op::AddBias { a, bias }))
    }

    pub fn add_scalar(&mut self, a: NodeId, c: T) -> Result<NodeId, TensorError> {
        let v = kernels::add_scalar(self.value(a), c)?;
        Ok(self.push(v, Op::AddScalar { a }))
    }

    pub fn scale(&mut self, a: NodeId, c: T) -> Result<NodeId, TensorError> {
        let v = kernels::scale(self.value(a), c)?;
        Ok(self.push(v, Op::Scale { a, c }))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let v = kernels::mul(self.value(a), self.value(b))?;
        Ok(self.push(v, Op::Mul { a, b }))
    }

    pub fn sum_all(&mut self, a: NodeId) -> Result<NodeId, TensorError> {
        let v = kernels::sum_all(self.value(a))?;
        Ok(self.push(v, Op::SumAll { a }))
    }

    pub fn mean_axis0(&mut self, a: NodeId) -> Result<NodeId, TensorError> {
        let v = kernels::mean_axis0(self.value(a))?;
        Ok(self.push(v, Op::MeanAxis0 { a }))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId, TensorError> {
        let tensors: Vec<&Tensor<T>> = parts.iter().map(|&p| self.value(p)).collect();
        let v = kernels::concat_cols(&tensors)?;
        Ok(self.push(v, Op::ConcatCols { parts: parts.to_vec() }))
    }

    pub fn narrow_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, TensorError> {
        let v = kernels::narrow_cols(self.value(a), start, len)?;
        Ok(self.push(v, Op::NarrowCols { a, start }))
    }

    pub fn narrow_rows(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, TensorError> {
        let v = kernels::narrow_rows(self.value(a), start, len)?;
        Ok(self.push(v, Op::NarrowRows { a, start }))
    }

    pub fn softmax_masked(&mut self, logits: NodeId, mask: Rc<BoolMask>) -> Result<NodeId, TensorError> {
        let v = kernels::softmax_masked(self.value(logits), &mask)?;
        Ok(self.push(v, Op::SoftmaxMasked { logits, mask }))
    }

    pub fn layer_norm(
        &mut self,
        x: NodeId,
        gamma: NodeId,
        beta: NodeId,
        eps: T,
    ) -> Result<NodeId, TensorError> {
        let (v, xhat, inv_std) = kernels::layer_norm(self.value(x), self.value(gamma), self.value(beta), eps)?;
        Ok(self.push(v, Op::LayerNorm { x, gamma, beta, xhat, inv_std }))
    }

    pub fn gelu(&mut self, a: NodeId) -> Result<NodeId, TensorError> {
        let v = kernels::gelu(self.value(a))?;
        Ok(self.push(v, Op::Gelu { a }))
    }

    pub fn softplus(&mut self, a: NodeId) -> Result<NodeId, TensorError> {
        let v = kernels::softplus(self.value(a))?;
        Ok(self.push(v, Op::Softplus { a }))
    }

    pub fn gaussian_nll_sum(&mut self, mu: NodeId, sigma: NodeId, y: Vec<T>) -> Result<NodeId, TensorError> {
        let v = kernels::gaussian_nll_sum(self.value(mu), self.value(sigma), &y)?;
        Ok(self.push(v, Op::GaussianNllSum { mu, sigma, y }))
    }

    /// Affine projection `x @ w + b` with `w: [in, out]`, `b: [1, out]`.
    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId, TensorError> {
        let xw = self.matmul(x, w)?;
        self.add_bias(xw, b)
    }

    /// Reverse-mode gradients of a scalar `loss` with respect to every node.
    /// Parameters not reachable from the loss get zero gradients when
    /// collected through [`Graph::collect_param_grads`].
    pub fn backward(&self, loss: NodeId) -> Result<Gradients<T>, TensorError> {
        let loss_value = self.value(loss);
        if !loss_value.is_scalar() {
            return Err(TensorError::NonScalarLoss { shape: loss_value.shape().to_vec() });
        }
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Tensor::scalar(T::one()));

        for id in (0..=loss.0).rev() {
            let Some(grad) = grads[id].take() else { continue };
            self.accumulate_parents(id, &grad, &mut grads);
            grads[id] = Some(grad);
        }
        Ok(Gradients { by_node: grads })
    }

    fn accumulate_parents(&self, id: usize, grad: &Tensor<T>, grads: &mut [Option<Tensor<T>>]) {
        let node = &self.nodes[id];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul { a, b, transpose_b } => {
                let av = self.value(*a);
                let bv = self.value(*b);
                if *transpose_b {
                    // C = A B^T: dA = dC B, dB = dC^T A.
                    let da = kernels::matmul(grad, bv, false).expect("backward matmul");
                    let db = kernels::matmul(&transpose(grad), av, false).expect("backward matmul");
                    add_grad(grads, *a, da);
                    add_grad(grads, *b, db);
                } else {
                    // C = A B: dA = dC B^T, dB = A^T dC.
                    let da = kernels::matmul(grad, bv, true).expect("backward matmul");
                    let db = kernels::matmul(&transpose(av), grad, false).expect("backward matmul");
                    add_grad(grads, *a, da);
                    add_grad(grads, *b, db);
                }
            }
            Op::Add { a, b } => {
                add_grad(grads, *a, grad.clone());
                add_grad(grads, *b, grad.clone());
            }
            Op::AddBias { a, bias } => {
                add_grad(grads, *a, grad.clone());
                let d = grad.cols();
                let mut db = Tensor::zeros(1, d);
                for r in 0..grad.rows() {
                    for c in 0..d {
                        db.data_mut()[c] = db.data_mut()[c] + grad.at(r, c);
                    }
                }
                add_grad(grads, *bias, db);
            }
            Op::AddScalar { a } => add_grad(grads, *a, grad.clone()),
            Op::Scale { a, c } => {
                add_grad(grads, *a, kernels::scale(grad, *c).expect("backward scale"));
            }
            Op::Mul { a, b } => {
                let da = kernels::mul(grad, self.value(*b)).expect("backward mul");
                let db = kernels::mul(grad, self.value(*a)).expect("backward mul");
                add_grad(grads, *a, da);
                add_grad(grads, *b, db);
            }
            Op::SumAll { a } => {
                let g = grad.item();
                let av = self.value(*a);
                let mut da = Tensor::zeros(av.rows(), av.cols());
                for v in da.data_mut() {
                    *v = g;
                }
                add_grad(grads, *a, da);
            }
            Op::MeanAxis0 { a } => {
                let av = self.value(*a);
                let n = av.rows();
                let d = av.cols();
                let inv = T::one() / T::of(n as f64);
                let mut da = Tensor::zeros(n, d);
                for r in 0..n {
                    for c in 0..d {
                        da.set(r, c, grad.at(0, c) * inv);
                    }
                }
                add_grad(grads, *a, da);
            }
            Op::ConcatCols { parts } => {
                let mut offset = 0;
                for &p in parts {
                    let pv = self.value(p);
                    let part = kernels::narrow_cols(grad, offset, pv.cols()).expect("backward concat");
                    offset += pv.cols();
                    add_grad(grads, p, part);
                }
            }
            Op::NarrowCols { a, start } => {
                let av = self.value(*a);
                let mut da = Tensor::zeros(av.rows(), av.cols());
                for r in 0..grad.rows() {
                    for c in 0..grad.cols() {
                        da.set(r, start + c, grad.at(r, c));
                    }
                }
                add_grad(grads, *a, da);
            }
            Op::NarrowRows { a, start } => {
                let av = self.value(*a);
                let mut da = Tensor::zeros(av.rows(), av.cols());
                for r in 0..grad.rows() {
                    for c in 0..grad.cols() {
                        da.set(start + r, c, grad.at(r, c));
                    }
                }
                add_grad(grads, *a, da);
            }
            Op::SoftmaxMasked { logits, mask } => {
                let probs = &node.value;
                let (n, d) = (probs.rows(), probs.cols());
                let mut dl = Tensor::zeros(n, d);
                for r in 0..n {
                    let mut dot = T::zero();
                    for c in 0..d {
                        if mask.allowed(r, c) {
                            dot = dot + grad.at(r, c) * probs.at(r, c);
                        }
                    }
                    for c in 0..d {
                        if mask.allowed(r, c) {
                            dl.set(r, c, probs.at(r, c) * (grad.at(r, c) - dot));
                        }
                    }
                }
                add_grad(grads, *logits, dl);
            }
            Op::LayerNorm { x, gamma, beta, xhat, inv_std } => {
                let gv = self.value(*gamma);
                let (n, d) = (xhat.rows(), xhat.cols());
                let inv_d = T::one() / T::of(d as f64);
                let mut dgamma = Tensor::zeros(1, d);
                let mut dbeta = Tensor::zeros(1, d);
                let mut dx = Tensor::zeros(n, d);
                for r in 0..n {
                    let mut s1 = T::zero();
                    let mut s2 = T::zero();
                    for c in 0..d {
                        let dxhat = grad.at(r, c) * gv.at(0, c);
                        s1 = s1 + dxhat;
                        s2 = s2 + dxhat * xhat.at(r, c);
                    }
                    for c in 0..d {
                        let g = grad.at(r, c);
                        dgamma.data_mut()[c] = dgamma.data_mut()[c] + g * xhat.at(r, c);
                        dbeta.data_mut()[c] = dbeta.data_mut()[c] + g;
                        let dxhat = g * gv.at(0, c);
                        let v = inv_std[r] * (dxhat - inv_d * s1 - xhat.at(r, c) * inv_d * s2);
                        dx.set(r, c, v);
                    }
                }
                add_grad(grads, *x, dx);
                add_grad(grads, *gamma, dgamma);
                add_grad(grads, *beta, dbeta);
            }
            Op::Gelu { a } => {
                let av = self.value(*a);
                let mut da = grad.clone();
                let c = T::of((2.0 / std::f64::consts::PI).sqrt());
                let k = T::of(0.044715);
                for (g, &x) in da.data_mut().iter_mut().zip(av.data()) {
                    let u = c * (x + k * x * x * x);
                    let t = u.tanh();
                    let sech2 = T::one() - t * t;
                    let du = c * (T::one() + T::of(3.0) * k * x * x);
                    let dgelu = T::of(0.5) * (T::one() + t) + T::of(0.5) * x * sech2 * du;
                    *g = *g * dgelu;
                }
                add_grad(grads, *a, da);
            }
            Op::Softplus { a } => {
                let av = self.value(*a);
                let mut da = grad.clone();
                for (g, &x) in da.data_mut().iter_mut().zip(av.data()) {
                    *g = *g * sigmoid(x);
                }
                add_grad(grads, *a, da);
            }
            Op::GaussianNllSum { mu, sigma, y } => {
                let g = grad.item();
                let muv = self.value(*mu);
                let sv = self.value(*sigma);
                let k = y.len();
                let mut dmu = Tensor::zeros(k, 1);
                let mut dsigma = Tensor::zeros(k, 1);
                for i in 0..k {
                    let m = muv.data()[i];
                    let s = sv.data()[i];
                    let z = y[i] - m;
                    dmu.data_mut()[i] = g * (m - y[i]) / (s * s);
                    dsigma.data_mut()[i] = g * (T::one() / s - z * z / (s * s * s));
                }
                add_grad(grads, *mu, dmu);
                add_grad(grads, *sigma, dsigma);
            }
        }
    }

    /// Gradients per parameter index; parameters the loss never touched get
    /// zeros of the registered shape.
    pub fn collect_param_grads(&self, grads: &Gradients<T>, n_params: usize) -> Vec<Tensor<T>> {
        let mut out: Vec<Option<Tensor<T>>> = vec![None; n_params];
        for &(index, node) in &self.params {
            let v = self.value(node);
            let g = grads.by_node[node.0]
                .clone()
                .unwrap_or_else(|| Tensor::zeros(v.rows(), v.cols()));
            out[index] = Some(match out[index].take() {
                Some(existing) => kernels::add(&existing, &g).expect("same shape"),
                None => g,
            });
        }
        out.into_iter()
            .enumerate()
            .map(|(i, g)| g.unwrap_or_else(|| panic!("parameter {i} was never registered")))
            .collect()
    }
}

/// Node-indexed gradient table produced by [`Graph::backward`].
pub struct Gradients<T> {
    by_node: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, id: NodeId) -> Option<&Tensor<T>> {
        self.by_node[id.0].as_ref()
    }
}

fn add_grad<T: Scalar>(grads: &mut [Option<Tensor<T>>], id: NodeId, g: Tensor<T>) {
    grads[id.0] = Some(match grads[id.0].take() {
        Some(existing) => kernels::add(&existing, &g).expect("gradient shapes match"),
        None => g,
    });
}

fn transpose<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    let (n, d) = (t.rows(), t.cols());
    let mut out = Tensor::zeros(d, n);
    for r in 0..n {
        for c in 0..d {
            out.set(c, r, t.at(r, c));
        }
    }
    out
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
