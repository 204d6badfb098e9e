//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation in creation order, which is already a
//! topological order, so [`Tape::backward`] is a single reverse sweep.
//! Operands are referred to by [`Var`] handles into the tape.

use crate::error::{Error, Result};
use crate::numkit::matrix::{Matrix, Real, kernels};
use crate::numkit::rng::Rng;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    MatMulBt(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddBroadcast(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    AddScalar(Var),
    Relu(Var),
    Sigmoid(Var),
    Ln(Var),
    Clamp(Var, T, T),
    SoftmaxRows(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Matrix<T>,
        inv_std: Vec<T>,
    },
    Dropout(Var, Vec<T>),
    ConcatCols(Vec<Var>),
    GatherFlat(Var, Vec<usize>),
    Sum(Var),
    Mean(Var),
}

#[derive(Debug)]
struct TapeNode<T> {
    op: Op<T>,
    value: Matrix<T>,
    requires_grad: bool,
}

/// Gradients produced by one backward sweep, indexed by [`Var`].
#[derive(Debug)]
pub struct Gradients<T> {
    grads: Vec<Option<Matrix<T>>>,
}

impl<T: Real> Gradients<T> {
    /// Gradient of the loss with respect to `v`, or `None` when `v` does not
    /// influence the loss or was registered as a constant.
    pub fn get(&self, v: Var) -> Option<&Matrix<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Like [`get`](Self::get) but materialises zeros for unreachable
    /// variables.
    pub fn get_or_zeros(&self, v: Var, shape: (usize, usize)) -> Matrix<T> {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(shape.0, shape.1))
    }
}

#[derive(Debug, Default)]
pub struct Tape<T = f32> {
    nodes: Vec<TapeNode<T>>,
}

fn check_finite<T: Real>(m: Matrix<T>, op: &'static str) -> Result<Matrix<T>> {
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::NonFinite(op))
    }
}

fn same_shape<T: Real>(op: &'static str, a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Shape {
            op,
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(())
}

fn map<T: Real>(m: &Matrix<T>, f: impl Fn(T) -> T) -> Matrix<T> {
    Matrix::from_raw(m.rows(), m.cols(), m.data().iter().map(|&v| f(v)).collect())
}

fn zip<T: Real>(a: &Matrix<T>, b: &Matrix<T>, f: impl Fn(T, T) -> T) -> Matrix<T> {
    Matrix::from_raw(
        a.rows(),
        a.cols(),
        a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect(),
    )
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix<T> {
        &self.nodes[v.0].value
    }

    /// Scalar value of a 1x1 node.
    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.0].value.get(0, 0)
    }

    fn push(&mut self, op: Op<T>, value: Matrix<T>, requires_grad: bool) -> Var {
        self.nodes.push(TapeNode {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Trainable leaf; receives a gradient on [`backward`](Self::backward).
    pub fn param(&mut self, m: Matrix<T>) -> Var {
        self.push(Op::Leaf, m, true)
    }

    /// Leaf that never receives a gradient (inputs, labels, encodings).
    pub fn constant(&mut self, m: Matrix<T>) -> Var {
        self.push(Op::Leaf, m, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.rows() {
            return Err(Error::Shape {
                op: "matmul",
                left: av.shape(),
                right: bv.shape(),
            });
        }
        let out = check_finite(kernels::matmul(av, bv), "matmul")?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::MatMul(a, b), out, rg))
    }

    /// a·bᵀ without materialising the transpose.
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.cols() {
            return Err(Error::Shape {
                op: "matmul_bt",
                left: av.shape(),
                right: bv.shape(),
            });
        }
        let out = check_finite(kernels::matmul_bt(av, bv), "matmul_bt")?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::MatMulBt(a, b), out, rg))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        let rg = self.rg(a);
        self.push(Op::Transpose(a), out, rg)
    }

    /// Elementwise sum. `b` may also be a 1xcols row, broadcast over the
    /// rows of `a` (bias addition).
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let rg = self.rg(a) || self.rg(b);
        if av.shape() == bv.shape() {
            let out = check_finite(zip(av, bv, |x, y| x + y), "add")?;
            return Ok(self.push(Op::Add(a, b), out, rg));
        }
        if bv.rows() == 1 && bv.cols() == av.cols() {
            let cols = av.cols();
            let mut out = av.clone();
            for (i, v) in out.data_mut().iter_mut().enumerate() {
                *v += bv.data()[i % cols];
            }
            let out = check_finite(out, "add")?;
            return Ok(self.push(Op::AddBroadcast(a, b), out, rg));
        }
        Err(Error::Shape {
            op: "add",
            left: av.shape(),
            right: bv.shape(),
        })
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        same_shape("sub", av, bv)?;
        let out = check_finite(zip(av, bv, |x, y| x - y), "sub")?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Sub(a, b), out, rg))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        same_shape("mul", av, bv)?;
        let out = check_finite(zip(av, bv, |x, y| x * y), "mul")?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Mul(a, b), out, rg))
    }

    pub fn scale(&mut self, a: Var, k: T) -> Result<Var> {
        let out = check_finite(map(self.value(a), |x| x * k), "scale")?;
        let rg = self.rg(a);
        Ok(self.push(Op::Scale(a, k), out, rg))
    }

    pub fn add_scalar(&mut self, a: Var, k: T) -> Result<Var> {
        let out = check_finite(map(self.value(a), |x| x + k), "add_scalar")?;
        let rg = self.rg(a);
        Ok(self.push(Op::AddScalar(a), out, rg))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = map(self.value(a), |x| if x > T::zero() { x } else { T::zero() });
        let rg = self.rg(a);
        self.push(Op::Relu(a), out, rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let out = map(self.value(a), sigmoid);
        let rg = self.rg(a);
        self.push(Op::Sigmoid(a), out, rg)
    }

    /// Natural logarithm; non-positive inputs yield a non-finite error.
    pub fn ln(&mut self, a: Var) -> Result<Var> {
        let out = check_finite(map(self.value(a), T::ln), "ln")?;
        let rg = self.rg(a);
        Ok(self.push(Op::Ln(a), out, rg))
    }

    /// Clamp into [lo, hi]; the gradient is zero where clamping was active.
    pub fn clamp(&mut self, a: Var, lo: T, hi: T) -> Var {
        let out = map(self.value(a), |x| x.max(lo).min(hi));
        let rg = self.rg(a);
        self.push(Op::Clamp(a, lo, hi), out, rg)
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let cols = av.cols();
        let mut out = av.clone();
        for row in out.data_mut().chunks_mut(cols) {
            let max = row.iter().copied().fold(T::neg_infinity(), T::max);
            let mut total = T::zero();
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                total += *v;
            }
            for v in row.iter_mut() {
                *v = *v / total;
            }
        }
        let rg = self.rg(a);
        self.push(Op::SoftmaxRows(a), out, rg)
    }

    /// Layer normalisation over each row, then `gain ⊙ x̂ + bias`.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: T) -> Result<Var> {
        let (xv, gv, bv) = (self.value(x), self.value(gain), self.value(bias));
        let cols = xv.cols();
        for (op, p) in [("layer_norm gain", gv), ("layer_norm bias", bv)] {
            if p.shape() != (1, cols) {
                return Err(Error::Shape {
                    op,
                    left: xv.shape(),
                    right: p.shape(),
                });
            }
        }
        if !(eps > T::zero()) {
            return Err(Error::InvalidArgument("layer_norm eps must be positive".into()));
        }
        let n = T::from_f64(cols as f64);
        let mut xhat = xv.clone();
        let mut inv_std = Vec::with_capacity(xv.rows());
        for row in xhat.data_mut().chunks_mut(cols) {
            let mean = row.iter().copied().sum::<T>() / n;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
            let is = T::one() / (var + eps).sqrt();
            for v in row.iter_mut() {
                *v = (*v - mean) * is;
            }
            inv_std.push(is);
        }
        let mut out = xhat.clone();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            let c = i % cols;
            *v = *v * gv.data()[c] + bv.data()[c];
        }
        let out = check_finite(out, "layer_norm")?;
        let rg = self.rg(x) || self.rg(gain) || self.rg(bias);
        Ok(self.push(
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            },
            out,
            rg,
        ))
    }

    /// Inverted dropout: in training each entry is zeroed with probability
    /// `rate` and survivors are scaled by `1/(1-rate)`. Outside training, or
    /// at rate 0, it is the identity and draws nothing from `rng`.
    pub fn dropout(&mut self, a: Var, rate: f64, rng: &mut Rng, training: bool) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {rate} outside [0, 1)"
            )));
        }
        if !training || rate == 0.0 {
            return Ok(a);
        }
        let keep = T::from_f64(1.0 / (1.0 - rate));
        let av = self.value(a);
        let mask: Vec<T> = (0..av.data().len())
            .map(|_| if rng.uniform() < rate { T::zero() } else { keep })
            .collect();
        let out = Matrix::from_raw(
            av.rows(),
            av.cols(),
            av.data().iter().zip(&mask).map(|(&x, &m)| x * m).collect(),
        );
        let rg = self.rg(a);
        Ok(self.push(Op::Dropout(a, mask), out, rg))
    }

    /// Horizontal concatenation of blocks with equal row counts.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat_cols of nothing".into()))?;
        let rows = self.value(first).rows();
        for &p in parts {
            if self.value(p).rows() != rows {
                return Err(Error::Shape {
                    op: "concat_cols",
                    left: self.value(first).shape(),
                    right: self.value(p).shape(),
                });
            }
        }
        let cols: usize = parts.iter().map(|&p| self.value(p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.value(p).row(r));
            }
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(
            Op::ConcatCols(parts.to_vec()),
            Matrix::from_raw(rows, cols, data),
            rg,
        ))
    }

    /// Picks rows of `a` (repetition allowed) and lays them end to end in a
    /// single 1x(len·cols) row.
    pub fn gather_flat(&mut self, a: Var, indices: &[usize]) -> Result<Var> {
        let av = self.value(a);
        if indices.is_empty() {
            return Err(Error::InvalidArgument("gather_flat needs indices".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= av.rows()) {
            return Err(Error::InvalidArgument(format!(
                "row index {bad} out of range for {} rows",
                av.rows()
            )));
        }
        let data: Vec<T> = indices
            .iter()
            .flat_map(|&i| av.row(i).iter().copied())
            .collect();
        let out = Matrix::from_raw(1, data.len(), data);
        let rg = self.rg(a);
        Ok(self.push(Op::GatherFlat(a, indices.to_vec()), out, rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let out = Matrix::from_raw(1, 1, vec![self.value(a).sum()]);
        let rg = self.rg(a);
        self.push(Op::Sum(a), out, rg)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let n = T::from_f64(av.data().len() as f64);
        let out = Matrix::from_raw(1, 1, vec![av.sum() / n]);
        let rg = self.rg(a);
        self.push(Op::Mean(a), out, rg)
    }

    /// Reverse sweep from a 1x1 `loss`. Accumulators start at zero on every
    /// call.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let lv = self.value(loss);
        if lv.shape() != (1, 1) {
            return Err(Error::InvalidArgument(format!(
                "backward needs a scalar loss, got {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Matrix<T>>> = Vec::with_capacity(self.nodes.len());
        grads.resize_with(self.nodes.len(), || None);
        grads[loss.0] = Some(Matrix::filled(1, 1, T::one()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        for (idx, node) in self.nodes.iter().enumerate() {
            if !node.requires_grad {
                grads[idx] = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &TapeNode<T>, g: &Matrix<T>, grads: &mut [Option<Matrix<T>>]) {
        let mut acc = |v: Var, d: Matrix<T>| {
            if !self.rg(v) {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => {
                    for (e, x) in existing.data_mut().iter_mut().zip(d.data()) {
                        *e += *x;
                    }
                }
                slot @ None => *slot = Some(d),
            }
        };
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    acc(*a, kernels::matmul_bt(g, self.value(*b)));
                }
                if self.rg(*b) {
                    acc(*b, kernels::matmul_at(self.value(*a), g));
                }
            }
            Op::MatMulBt(a, b) => {
                // C = A·Bᵀ: dA = dC·B, dB = dCᵀ·A
                if self.rg(*a) {
                    acc(*a, kernels::matmul(g, self.value(*b)));
                }
                if self.rg(*b) {
                    acc(*b, kernels::matmul_at(g, self.value(*a)));
                }
            }
            Op::Transpose(a) => acc(*a, g.transpose()),
            Op::Add(a, b) => {
                acc(*a, g.clone());
                acc(*b, g.clone());
            }
            Op::AddBroadcast(a, b) => {
                acc(*a, g.clone());
                let cols = g.cols();
                let mut db = vec![T::zero(); cols];
                for row in g.data().chunks(cols) {
                    for (d, &x) in db.iter_mut().zip(row) {
                        *d += x;
                    }
                }
                acc(*b, Matrix::from_raw(1, cols, db));
            }
            Op::Sub(a, b) => {
                acc(*a, g.clone());
                acc(*b, map(g, |x| -x));
            }
            Op::Mul(a, b) => {
                acc(*a, zip(g, self.value(*b), |x, y| x * y));
                acc(*b, zip(g, self.value(*a), |x, y| x * y));
            }
            Op::Scale(a, k) => acc(*a, map(g, |x| x * *k)),
            Op::AddScalar(a) => acc(*a, g.clone()),
            Op::Relu(a) => acc(
                *a,
                zip(g, self.value(*a), |d, x| if x > T::zero() { d } else { T::zero() }),
            ),
            Op::Sigmoid(a) => acc(*a, zip(g, y, |d, s| d * s * (T::one() - s))),
            Op::Ln(a) => acc(*a, zip(g, self.value(*a), |d, x| d / x)),
            Op::Clamp(a, lo, hi) => acc(
                *a,
                zip(g, self.value(*a), |d, x| {
                    if x >= *lo && x <= *hi { d } else { T::zero() }
                }),
            ),
            Op::SoftmaxRows(a) => {
                let cols = y.cols();
                let mut dx = Vec::with_capacity(y.data().len());
                for (yr, gr) in y.data().chunks(cols).zip(g.data().chunks(cols)) {
                    let dot: T = yr.iter().zip(gr).map(|(&p, &d)| p * d).sum();
                    dx.extend(yr.iter().zip(gr).map(|(&p, &d)| p * (d - dot)));
                }
                acc(*a, Matrix::from_raw(y.rows(), cols, dx));
            }
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                inv_std,
            } => {
                let cols = y.cols();
                let n = T::from_f64(cols as f64);
                let gv = self.value(*gain);
                let mut dgain = vec![T::zero(); cols];
                let mut dbias = vec![T::zero(); cols];
                let mut dx = Vec::with_capacity(y.data().len());
                let mut dxhat = vec![T::zero(); cols];
                for ((gr, xr), &is) in g
                    .data()
                    .chunks(cols)
                    .zip(xhat.data().chunks(cols))
                    .zip(inv_std)
                {
                    let mut sum_d = T::zero();
                    let mut sum_dx = T::zero();
                    for c in 0..cols {
                        dgain[c] += gr[c] * xr[c];
                        dbias[c] += gr[c];
                        dxhat[c] = gr[c] * gv.data()[c];
                        sum_d += dxhat[c];
                        sum_dx += dxhat[c] * xr[c];
                    }
                    for c in 0..cols {
                        dx.push(is / n * (n * dxhat[c] - sum_d - xr[c] * sum_dx));
                    }
                }
                acc(*x, Matrix::from_raw(y.rows(), cols, dx));
                acc(*gain, Matrix::from_raw(1, cols, dgain));
                acc(*bias, Matrix::from_raw(1, cols, dbias));
            }
            Op::Dropout(a, mask) => acc(
                *a,
                Matrix::from_raw(
                    g.rows(),
                    g.cols(),
                    g.data().iter().zip(mask).map(|(&d, &m)| d * m).collect(),
                ),
            ),
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let pc = self.value(p).cols();
                    let block = Matrix::from_fn(g.rows(), pc, |r, c| g.get(r, offset + c));
                    acc(p, block);
                    offset += pc;
                }
            }
            Op::GatherFlat(a, indices) => {
                let av = self.value(*a);
                let cols = av.cols();
                let mut d = Matrix::zeros(av.rows(), cols);
                for (k, &i) in indices.iter().enumerate() {
                    for c in 0..cols {
                        d.data_mut()[i * cols + c] += g.data()[k * cols + c];
                    }
                }
                acc(*a, d);
            }
            Op::Sum(a) => {
                let (r, c) = self.value(*a).shape();
                acc(*a, Matrix::filled(r, c, g.get(0, 0)));
            }
            Op::Mean(a) => {
                let (r, c) = self.value(*a).shape();
                let k = g.get(0, 0) / T::from_f64((r * c) as f64);
                acc(*a, Matrix::filled(r, c, k));
            }
        }
    }
}

#[inline]
pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}
