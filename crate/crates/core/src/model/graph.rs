//! Reverse-mode differentiation over 2-D tensors.
//!
//! A [`Graph`] records every operation of one forward pass. Leaves are
//! either parameters (gradients wanted) or constants. [`Graph::backward`]
//! walks the record in reverse and accumulates vector-Jacobian products.

use super::tensor::{matmul_acc, matmul_at_acc, matmul_bt_acc, Tensor};
use crate::error::{Error, Result};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    MatMulBt(usize, usize),
    Add(usize, usize),
    AddRow(usize, usize),
    Scale(usize, f64),
    Relu(usize),
    SoftmaxRows(usize),
    LayerNorm {
        x: usize,
        gamma: usize,
        beta: usize,
        /// normalized input, then per-row inverse std
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    SliceCols(usize, usize),
    ConcatCols(Vec<usize>),
    MeanRows(usize),
    Mask(usize, Vec<f64>),
    Mse(usize, Vec<f64>),
    SumSquares(usize),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
    macs: u64,
}

/// Gradients produced by [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    sizes: Vec<usize>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`; zeros when `v` did not
    /// influence the loss.
    pub fn wrt(&self, v: Var) -> Vec<f64> {
        self.grads[v.0].clone().unwrap_or_else(|| vec![0.0; self.sizes[v.0]])
    }

    /// Add the gradient of `v` into `acc`.
    pub fn accumulate_into(&self, v: Var, acc: &mut [f64]) {
        if let Some(g) = &self.grads[v.0] {
            for (a, b) in acc.iter_mut().zip(g) {
                *a += b;
            }
        }
    }
}

fn dims(t: &Tensor) -> (usize, usize) {
    (t.rows(), t.cols())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Multiply-accumulates performed by matrix products so far.
    pub fn macs(&self) -> u64 {
        self.macs
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node { value, op, needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn as_matrix(t: Tensor) -> Tensor {
        let (r, c) = dims(&t);
        Tensor { shape: vec![r, c], data: t.data }
    }

    /// Differentiable leaf.
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(Self::as_matrix(value), Op::Leaf, true)
    }

    /// Non-differentiable leaf.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(Self::as_matrix(value), Op::Leaf, false)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn dims(&self, v: Var) -> (usize, usize) {
        dims(&self.nodes[v.0].value)
    }

    fn check(cond: bool, what: &str) -> Result<()> {
        if cond {
            Ok(())
        } else {
            Err(Error::Config(format!("shape mismatch in {what}")))
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(a);
        let (k2, n) = self.dims(b);
        Self::check(k == k2, "matmul")?;
        let mut out = vec![0.0; m * n];
        matmul_acc(&self.nodes[a.0].value.data, &self.nodes[b.0].value.data, &mut out, m, k, n);
        self.macs += (m * k * n) as u64;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Tensor { shape: vec![m, n], data: out }, Op::MatMul(a.0, b.0), ng))
    }

    /// `a * b^T`
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(a);
        let (n, k2) = self.dims(b);
        Self::check(k == k2, "matmul_bt")?;
        let mut out = vec![0.0; m * n];
        matmul_bt_acc(&self.nodes[a.0].value.data, &self.nodes[b.0].value.data, &mut out, m, k, n);
        self.macs += (m * k * n) as u64;
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Tensor { shape: vec![m, n], data: out }, Op::MatMulBt(a.0, b.0), ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        Self::check(self.dims(a) == self.dims(b), "add")?;
        let data = self.nodes[a.0]
            .value
            .data
            .iter()
            .zip(&self.nodes[b.0].value.data)
            .map(|(x, y)| x + y)
            .collect();
        let shape = self.nodes[a.0].value.shape.clone();
        let ng = self.ng(a) || self.ng(b);
        Ok(self.push(Tensor { shape, data }, Op::Add(a.0, b.0), ng))
    }

    /// Broadcast-add a `[1 x n]` row to every row of `a`.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (_, n) = self.dims(a);
        Self::check(self.dims(row) == (1, n), "add_row")?;
        let r = &self.nodes[row.0].value.data;
        let data = self.nodes[a.0]
            .value
            .data
            .chunks(n)
            .flat_map(|c| c.iter().zip(r).map(|(x, y)| x + y))
            .collect();
        let shape = self.nodes[a.0].value.shape.clone();
        let ng = self.ng(a) || self.ng(row);
        Ok(self.push(Tensor { shape, data }, Op::AddRow(a.0, row.0), ng))
    }

    /// `x * w + b` for `x [m x k]`, `w [k x n]`, `b [1 x n]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add_row(xw, b)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let t = &self.nodes[a.0].value;
        let value = Tensor {
            shape: t.shape.clone(),
            data: t.data.iter().map(|x| x * c).collect(),
        };
        let ng = self.ng(a);
        self.push(value, Op::Scale(a.0, c), ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let t = &self.nodes[a.0].value;
        let value = Tensor {
            shape: t.shape.clone(),
            data: t.data.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect(),
        };
        let ng = self.ng(a);
        self.push(value, Op::Relu(a.0), ng)
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let t = &self.nodes[a.0].value;
        let n = t.cols();
        let mut data = Vec::with_capacity(t.data.len());
        for row in t.data.chunks(n) {
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let start = data.len();
            let mut sum = 0.0;
            for &x in row {
                let e = (x - max).exp();
                sum += e;
                data.push(e);
            }
            for e in &mut data[start..] {
                *e /= sum;
            }
        }
        let shape = t.shape.clone();
        let ng = self.ng(a);
        self.push(Tensor { shape, data }, Op::SoftmaxRows(a.0), ng)
    }

    /// Per-row normalization to zero mean and unit variance, then `gamma * xhat + beta`.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let (m, n) = self.dims(x);
        Self::check(self.dims(gamma) == (1, n) && self.dims(beta) == (1, n), "layer_norm")?;
        let xs = &self.nodes[x.0].value.data;
        let g = &self.nodes[gamma.0].value.data;
        let b = &self.nodes[beta.0].value.data;
        let mut xhat = Vec::with_capacity(m * n);
        let mut inv_std = Vec::with_capacity(m);
        let mut out = Vec::with_capacity(m * n);
        for row in xs.chunks(n) {
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std.push(inv);
            for (j, &v) in row.iter().enumerate() {
                let h = (v - mean) * inv;
                xhat.push(h);
                out.push(g[j] * h + b[j]);
            }
        }
        let ng = self.ng(x) || self.ng(gamma) || self.ng(beta);
        let op = Op::LayerNorm {
            x: x.0,
            gamma: gamma.0,
            beta: beta.0,
            xhat,
            inv_std,
        };
        Ok(self.push(Tensor { shape: vec![m, n], data: out }, op, ng))
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Result<Var> {
        let (m, n) = self.dims(a);
        Self::check(start + width <= n, "slice_cols")?;
        let src = &self.nodes[a.0].value.data;
        let data = src
            .chunks(n)
            .flat_map(|row| row[start..start + width].iter().copied())
            .collect();
        let ng = self.ng(a);
        Ok(self.push(Tensor { shape: vec![m, width], data }, Op::SliceCols(a.0, start), ng))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let m = self.dims(parts[0]).0;
        Self::check(parts.iter().all(|p| self.dims(*p).0 == m), "concat_cols")?;
        let widths: Vec<usize> = parts.iter().map(|p| self.dims(*p).1).collect();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(m * total);
        for i in 0..m {
            for (p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.nodes[p.0].value.data[i * w..(i + 1) * w]);
            }
        }
        let ng = parts.iter().any(|p| self.ng(*p));
        let ids = parts.iter().map(|p| p.0).collect();
        Ok(self.push(Tensor { shape: vec![m, total], data }, Op::ConcatCols(ids), ng))
    }

    /// Column means: `[m x n] -> [1 x n]`.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let (m, n) = self.dims(a);
        let mut data = vec![0.0; n];
        for row in self.nodes[a.0].value.data.chunks(n) {
            for (d, v) in data.iter_mut().zip(row) {
                *d += v;
            }
        }
        for d in &mut data {
            *d /= m as f64;
        }
        let ng = self.ng(a);
        self.push(Tensor { shape: vec![1, n], data }, Op::MeanRows(a.0), ng)
    }

    /// Elementwise product with a fixed mask (dropout).
    pub fn mask(&mut self, a: Var, mask: Vec<f64>) -> Result<Var> {
        Self::check(mask.len() == self.nodes[a.0].value.len(), "mask")?;
        let t = &self.nodes[a.0].value;
        let value = Tensor {
            shape: t.shape.clone(),
            data: t.data.iter().zip(&mask).map(|(x, m)| x * m).collect(),
        };
        let ng = self.ng(a);
        Ok(self.push(value, Op::Mask(a.0, mask), ng))
    }

    /// Mean squared error against a constant target; a `[1 x 1]` scalar.
    pub fn mse(&mut self, pred: Var, target: &[f64]) -> Result<Var> {
        let p = &self.nodes[pred.0].value.data;
        Self::check(p.len() == target.len() && !target.is_empty(), "mse")?;
        let loss = p.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.len() as f64;
        let ng = self.ng(pred);
        Ok(self.push(
            Tensor { shape: vec![1, 1], data: vec![loss] },
            Op::Mse(pred.0, target.to_vec()),
            ng,
        ))
    }

    /// Sum of squared entries; a `[1 x 1]` scalar.
    pub fn sum_squares(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.data.iter().map(|x| x * x).sum();
        let ng = self.ng(a);
        self.push(Tensor { shape: vec![1, 1], data: vec![s] }, Op::SumSquares(a.0), ng)
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if loss.0 >= self.nodes.len() {
            return Err(Error::State("backward called on a node that was never recorded".into()));
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::State("backward needs a scalar loss".into()));
        }
        let sizes: Vec<usize> = self.nodes.iter().map(|n| n.value.len()).collect();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let needs = |i: usize| self.nodes[i].needs_grad;
            let acc = |grads: &mut Vec<Option<Vec<f64>>>, i: usize, f: &mut dyn FnMut(&mut [f64])| {
                if !needs(i) {
                    return;
                }
                let slot = grads[i].get_or_insert_with(|| vec![0.0; sizes[i]]);
                f(slot);
            };
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let (m, k) = dims(&self.nodes[*a].value);
                    let n = node.value.cols();
                    let av = &self.nodes[*a].value.data;
                    let bv = &self.nodes[*b].value.data;
                    acc(&mut grads, *a, &mut |s| matmul_bt_acc(&g, bv, s, m, n, k));
                    acc(&mut grads, *b, &mut |s| matmul_at_acc(av, &g, s, m, k, n));
                }
                Op::MatMulBt(a, b) => {
                    // c = a b^T, a [m x k], b [n x k]
                    let (m, k) = dims(&self.nodes[*a].value);
                    let n = node.value.cols();
                    let av = &self.nodes[*a].value.data;
                    let bv = &self.nodes[*b].value.data;
                    acc(&mut grads, *a, &mut |s| matmul_acc(&g, bv, s, m, n, k));
                    acc(&mut grads, *b, &mut |s| matmul_at_acc(&g, av, s, m, n, k));
                }
                Op::Add(a, b) => {
                    for i in [*a, *b] {
                        acc(&mut grads, i, &mut |s| s.iter_mut().zip(&g).for_each(|(x, y)| *x += y));
                    }
                }
                Op::AddRow(a, r) => {
                    let n = node.value.cols();
                    acc(&mut grads, *a, &mut |s| s.iter_mut().zip(&g).for_each(|(x, y)| *x += y));
                    acc(&mut grads, *r, &mut |s| {
                        for row in g.chunks(n) {
                            s.iter_mut().zip(row).for_each(|(x, y)| *x += y);
                        }
                    });
                }
                Op::Scale(a, c) => {
                    acc(&mut grads, *a, &mut |s| s.iter_mut().zip(&g).for_each(|(x, y)| *x += c * y));
                }
                Op::Relu(a) => {
                    let x = &self.nodes[*a].value.data;
                    acc(&mut grads, *a, &mut |s| {
                        for ((o, gi), xi) in s.iter_mut().zip(&g).zip(x) {
                            if *xi > 0.0 {
                                *o += gi;
                            }
                        }
                    });
                }
                Op::SoftmaxRows(a) => {
                    let n = node.value.cols();
                    let y = &node.value.data;
                    acc(&mut grads, *a, &mut |s| {
                        for ((srow, grow), yrow) in s.chunks_mut(n).zip(g.chunks(n)).zip(y.chunks(n)) {
                            let dot: f64 = grow.iter().zip(yrow).map(|(a, b)| a * b).sum();
                            for ((o, gi), yi) in srow.iter_mut().zip(grow).zip(yrow) {
                                *o += yi * (gi - dot);
                            }
                        }
                    });
                }
                Op::LayerNorm { x, gamma, beta, xhat, inv_std } => {
                    let n = node.value.cols();
                    let gv = &self.nodes[*gamma].value.data;
                    acc(&mut grads, *gamma, &mut |s| {
                        for (grow, hrow) in g.chunks(n).zip(xhat.chunks(n)) {
                            for ((o, gi), hi) in s.iter_mut().zip(grow).zip(hrow) {
                                *o += gi * hi;
                            }
                        }
                    });
                    acc(&mut grads, *beta, &mut |s| {
                        for grow in g.chunks(n) {
                            s.iter_mut().zip(grow).for_each(|(o, gi)| *o += gi);
                        }
                    });
                    acc(&mut grads, *x, &mut |s| {
                        let nf = n as f64;
                        for (((srow, grow), hrow), inv) in
                            s.chunks_mut(n).zip(g.chunks(n)).zip(xhat.chunks(n)).zip(inv_std)
                        {
                            let dh: Vec<f64> = grow.iter().zip(gv).map(|(a, b)| a * b).collect();
                            let sum_dh: f64 = dh.iter().sum();
                            let sum_dh_h: f64 = dh.iter().zip(hrow).map(|(a, b)| a * b).sum();
                            for ((o, d), h) in srow.iter_mut().zip(&dh).zip(hrow) {
                                *o += inv / nf * (nf * d - sum_dh - h * sum_dh_h);
                            }
                        }
                    });
                }
                Op::SliceCols(a, start) => {
                    let w = node.value.cols();
                    let n = self.nodes[*a].value.cols();
                    acc(&mut grads, *a, &mut |s| {
                        for (srow, grow) in s.chunks_mut(n).zip(g.chunks(w)) {
                            srow[*start..*start + w].iter_mut().zip(grow).for_each(|(o, gi)| *o += gi);
                        }
                    });
                }
                Op::ConcatCols(parts) => {
                    let total = node.value.cols();
                    let mut off = 0;
                    for &p in parts {
                        let w = self.nodes[p].value.cols();
                        acc(&mut grads, p, &mut |s| {
                            for (srow, grow) in s.chunks_mut(w).zip(g.chunks(total)) {
                                srow.iter_mut().zip(&grow[off..off + w]).for_each(|(o, gi)| *o += gi);
                            }
                        });
                        off += w;
                    }
                }
                Op::MeanRows(a) => {
                    let (m, n) = dims(&self.nodes[*a].value);
                    acc(&mut grads, *a, &mut |s| {
                        for srow in s.chunks_mut(n) {
                            srow.iter_mut().zip(&g).for_each(|(o, gi)| *o += gi / m as f64);
                        }
                    });
                }
                Op::Mask(a, mask) => {
                    acc(&mut grads, *a, &mut |s| {
                        for ((o, gi), mi) in s.iter_mut().zip(&g).zip(mask) {
                            *o += gi * mi;
                        }
                    });
                }
                Op::Mse(a, target) => {
                    let p = &self.nodes[*a].value.data;
                    let scale = 2.0 * g[0] / p.len() as f64;
                    acc(&mut grads, *a, &mut |s| {
                        for ((o, pi), ti) in s.iter_mut().zip(p).zip(target) {
                            *o += scale * (pi - ti);
                        }
                    });
                }
                Op::SumSquares(a) => {
                    let p = &self.nodes[*a].value.data;
                    acc(&mut grads, *a, &mut |s| {
                        for (o, pi) in s.iter_mut().zip(p) {
                            *o += 2.0 * g[0] * pi;
                        }
                    });
                }
            }
        }
        // only leaves keep their gradients
        for (i, n) in self.nodes.iter().enumerate() {
            if !matches!(n.op, Op::Leaf) {
                grads[i] = None;
            }
        }
        Ok(Gradients { grads, sizes })
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn rand_tensor(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Tensor {
        Tensor::matrix(r, c, (0..r * c).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn quadratic_gradient_is_exact() {
        let mut g = Graph::new();
        let w = g.param(Tensor::matrix(2, 2, vec![1.0, -2.0, 0.5, 3.0]).unwrap());
        let loss = g.sum_squares(w);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.wrt(w), vec![2.0, -4.0, 1.0, 6.0]);
    }

    #[test]
    fn unused_parameter_has_zero_gradient() {
        let mut g = Graph::new();
        let w = g.param(Tensor::filled(&[1, 3], 1.0));
        let unused = g.param(Tensor::filled(&[2, 2], 5.0));
        let loss = g.sum_squares(w);
        let grads = g.backward(loss).unwrap();
        assert_eq!(grads.wrt(unused), vec![0.0; 4]);
    }

    #[test]
    fn backward_without_forward_is_state_error() {
        let g = Graph::new();
        let mut other = Graph::new();
        let v = other.param(Tensor::filled(&[1, 1], 1.0));
        assert!(matches!(g.backward(v), Err(Error::State(_))));
        let w = other.param(Tensor::filled(&[1, 2], 1.0));
        assert!(matches!(other.backward(w), Err(Error::State(_))));
    }

    /// Every op against central differences on a composite expression.
    #[test]
    fn composite_expression_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a0 = rand_tensor(&mut rng, 3, 4);
        let b0 = rand_tensor(&mut rng, 4, 4);
        let r0 = rand_tensor(&mut rng, 1, 4);
        let gm0 = rand_tensor(&mut rng, 1, 4);
        let target: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();

        let build = |a: &Tensor, b: &Tensor, r: &Tensor, gm: &Tensor| {
            let mut g = Graph::new();
            let (a, b, r, gm) = (g.param(a.clone()), g.param(b.clone()), g.param(r.clone()), g.param(gm.clone()));
            let ab = g.matmul(a, b).unwrap();
            let x = g.add_row(ab, r).unwrap();
            let zero = g.constant(Tensor::zeros(&[1, 4]));
            let n = g.layer_norm(x, gm, zero, 1e-5).unwrap();
            let s = g.matmul_bt(n, a).unwrap();
            let s = g.scale(s, 0.5);
            let p = g.softmax_rows(s);
            let left = g.slice_cols(n, 0, 2).unwrap();
            let right = g.slice_cols(n, 2, 2).unwrap();
            let right = g.relu(right);
            let cat = g.concat_cols(&[right, left]).unwrap();
            let mixed = g.matmul(p, cat).unwrap();
            let sum = g.add(mixed, x).unwrap();
            let pooled = g.mean_rows(sum);
            let loss = g.mse(pooled, &target).unwrap();
            (g, [a, b, r, gm], loss)
        };
        let (g, vars, loss) = build(&a0, &b0, &r0, &gm0);
        let grads = g.backward(loss).unwrap();
        let mut inputs = [a0, b0, r0, gm0];
        for k in 0..4 {
            let analytic = grads.wrt(vars[k]);
            for i in 0..inputs[k].len() {
                let orig = inputs[k].data[i];
                inputs[k].data[i] = orig + 1e-6;
                let (gp, _, lp) = build(&inputs[0], &inputs[1], &inputs[2], &inputs[3]);
                inputs[k].data[i] = orig - 1e-6;
                let (gmn, _, lm) = build(&inputs[0], &inputs[1], &inputs[2], &inputs[3]);
                inputs[k].data[i] = orig;
                let fd = (gp.value(lp).data[0] - gmn.value(lm).data[0]) / 2e-6;
                assert!(
                    (fd - analytic[i]).abs() < 1e-6 * (1.0 + fd.abs()),
                    "input {k} elem {i}: fd {fd} vs {}",
                    analytic[i]
                );
            }
        }
    }

    #[test]
    fn counts_matmul_macs() {
        let mut g = Graph::new();
        let a = g.constant(Tensor::zeros(&[3, 4]));
        let b = g.constant(Tensor::zeros(&[4, 5]));
        let c = g.matmul(a, b).unwrap();
        g.matmul_bt(c, c).unwrap();
        assert_eq!(g.macs(), 3 * 4 * 5 + 3 * 5 * 3);
    }
}
