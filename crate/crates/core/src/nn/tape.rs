use ndarray::{concatenate, s, Array2, Axis, Zip};

use super::params::{Gradients, ParamStore};

const LN_EPS: f64 = 1e-5;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Const,
    Param(usize),
    MatMul(Var, Var),
    /// `a · bᵀ`
    MatMulNt(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    /// Adds a `1 × n` row to every row.
    AddRow(Var, Var),
    /// Multiplies every row elementwise by a `1 × n` row.
    MulRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    /// Row-wise standardization; keeps the per-row inverse std.
    Normalize(Var, Vec<f64>),
    /// Row-wise softmax over allowed entries; disallowed entries are exactly zero.
    MaskedSoftmax(Var),
    ConcatRows(Vec<Var>),
    Rows(Var, Vec<usize>),
    /// Mean of squared entries, as a `1 × 1` value.
    MeanSquare(Var),
}

#[derive(Clone, Debug)]
struct Node {
    value: Array2<f64>,
    op: Op,
}

/// Reverse-mode automatic differentiation over dense `f64` matrices.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(value, Op::Const)
    }

    pub fn param(&mut self, store: &ParamStore, id: usize) -> Var {
        self.push(store.value(id).clone(), Op::Param(id))
    }

    /// Copies `v` as a constant: no gradient flows back through the result.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.value(v).clone();
        self.constant(value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(self.value(b));
        self.push(value, Op::MatMul(a, b))
    }

    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a).dot(&self.value(b).t());
        self.push(value, Op::MatMulNt(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) + self.value(b);
        self.push(value, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = self.value(a) - self.value(b);
        self.push(value, Op::Sub(a, b))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1, "add_row expects a single row");
        let value = self.value(a) + self.value(row);
        self.push(value, Op::AddRow(a, row))
    }

    pub fn mul_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1, "mul_row expects a single row");
        let value = self.value(a) * self.value(row);
        self.push(value, Op::MulRow(a, row))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = self.value(a) * c;
        self.push(value, Op::Scale(a, c))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|x| x.max(0.0));
        self.push(value, Op::Relu(a))
    }

    /// Row-wise zero mean, unit variance (no affine part).
    pub fn normalize(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let n = x.ncols() as f64;
        let mut out = x.clone();
        let mut inv = Vec::with_capacity(x.nrows());
        for mut row in out.rows_mut() {
            let mean = row.sum() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let r = 1.0 / (var + LN_EPS).sqrt();
            row.mapv_inplace(|v| (v - mean) * r);
            inv.push(r);
        }
        self.push(out, Op::Normalize(a, inv))
    }

    /// Softmax along each row, restricted to entries where `allowed` is true.
    /// Rows are shifted by their allowed maximum before exponentiation.
    pub fn masked_softmax(&mut self, a: Var, allowed: Option<&Array2<bool>>) -> Var {
        let x = self.value(a);
        if let Some(m) = allowed {
            assert_eq!(m.dim(), x.dim(), "mask shape mismatch");
        }
        let mut out = Array2::zeros(x.dim());
        for (i, row) in x.rows().into_iter().enumerate() {
            let ok = |j: usize| allowed.is_none_or(|m| m[[i, j]]);
            let max = (0..row.len()).filter(|&j| ok(j)).map(|j| row[j]).fold(f64::NEG_INFINITY, f64::max);
            if max == f64::NEG_INFINITY {
                continue;
            }
            let mut sum = 0.0;
            for j in 0..row.len() {
                if ok(j) {
                    let e = (row[j] - max).exp();
                    out[[i, j]] = e;
                    sum += e;
                }
            }
            out.row_mut(i).mapv_inplace(|v| v / sum);
        }
        self.push(out, Op::MaskedSoftmax(a))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = concatenate(Axis(0), &views).expect("row concatenation needs equal widths");
        self.push(value, Op::ConcatRows(parts.to_vec()))
    }

    pub fn rows(&mut self, a: Var, idx: &[usize]) -> Var {
        let value = self.value(a).select(Axis(0), idx);
        self.push(value, Op::Rows(a, idx.to_vec()))
    }

    pub fn mean_square(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let value = Array2::from_elem((1, 1), x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64);
        self.push(value, Op::MeanSquare(a))
    }

    /// Gradients of the scalar `loss` with respect to every parameter leaf,
    /// accumulated into `grads` with weight `scale`.
    pub fn backward_into(&self, loss: Var, scale: f64, grads: &mut Gradients) {
        assert_eq!(self.value(loss).dim(), (1, 1), "loss must be a scalar");
        let mut g: Vec<Option<Array2<f64>>> = vec![None; loss.0 + 1];
        g[loss.0] = Some(Array2::from_elem((1, 1), scale));
        fn acc(g: &mut [Option<Array2<f64>>], v: Var, d: Array2<f64>) {
            match &mut g[v.0] {
                Some(e) => *e += &d,
                slot => *slot = Some(d),
            }
        }
        for idx in (0..=loss.0).rev() {
            let Some(dy) = g[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Const => {}
                Op::Param(id) => grads.add(*id, &dy),
                Op::MatMul(a, b) => {
                    acc(&mut g, *a, dy.dot(&self.value(*b).t()));
                    acc(&mut g, *b, self.value(*a).t().dot(&dy));
                }
                Op::MatMulNt(a, b) => {
                    acc(&mut g, *a, dy.dot(self.value(*b)));
                    acc(&mut g, *b, dy.t().dot(self.value(*a)));
                }
                Op::Add(a, b) => {
                    acc(&mut g, *b, dy.clone());
                    acc(&mut g, *a, dy);
                }
                Op::Sub(a, b) => {
                    acc(&mut g, *b, -&dy);
                    acc(&mut g, *a, dy);
                }
                Op::AddRow(a, row) => {
                    acc(&mut g, *row, dy.sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(&mut g, *a, dy);
                }
                Op::MulRow(a, row) => {
                    let x = self.value(*a);
                    let r = self.value(*row);
                    acc(&mut g, *row, (&dy * x).sum_axis(Axis(0)).insert_axis(Axis(0)));
                    acc(&mut g, *a, &dy * r);
                }
                Op::Scale(a, c) => acc(&mut g, *a, dy * *c),
                Op::Relu(a) => {
                    let mut d = dy;
                    Zip::from(&mut d).and(self.value(*a)).for_each(|d, &x| {
                        if x <= 0.0 {
                            *d = 0.0;
                        }
                    });
                    acc(&mut g, *a, d);
                }
                Op::Normalize(a, inv) => {
                    let y = &node.value;
                    let n = y.ncols() as f64;
                    let mut dx = Array2::zeros(y.dim());
                    for i in 0..y.nrows() {
                        let (yr, dr) = (y.row(i), dy.row(i));
                        let mean_d = dr.sum() / n;
                        let mean_dy = dr.dot(&yr) / n;
                        let mut out = dx.row_mut(i);
                        for j in 0..yr.len() {
                            out[j] = inv[i] * (dr[j] - mean_d - yr[j] * mean_dy);
                        }
                    }
                    acc(&mut g, *a, dx);
                }
                Op::MaskedSoftmax(a) => {
                    let y = &node.value;
                    let mut dx = &dy * y;
                    for i in 0..y.nrows() {
                        let dot: f64 = dx.row(i).sum();
                        let yr = y.row(i);
                        let mut row = dx.row_mut(i);
                        for j in 0..yr.len() {
                            row[j] -= yr[j] * dot;
                        }
                    }
                    acc(&mut g, *a, dx);
                }
                Op::ConcatRows(parts) => {
                    let mut start = 0;
                    for p in parts {
                        let r = self.value(*p).nrows();
                        acc(&mut g, *p, dy.slice(s![start..start + r, ..]).to_owned());
                        start += r;
                    }
                }
                Op::Rows(a, idx) => {
                    let mut d = Array2::zeros(self.value(*a).dim());
                    for (k, &i) in idx.iter().enumerate() {
                        let mut row = d.row_mut(i);
                        row += &dy.row(k);
                    }
                    acc(&mut g, *a, d);
                }
                Op::MeanSquare(a) => {
                    let x = self.value(*a);
                    let c = dy[[0, 0]] * 2.0 / x.len() as f64;
                    acc(&mut g, *a, x * c);
                }
            }
        }
    }

    /// Parameter gradients of the scalar `loss`.
    pub fn backward(&self, loss: Var, store: &ParamStore) -> Gradients {
        let mut grads = Gradients::zeros_like(store);
        self.backward_into(loss, 1.0, &mut grads);
        grads
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn masked_entries_are_exactly_zero() {
        let mut t = Tape::new();
        let x = t.constant(array![[1.0, 50.0, 3.0], [0.0, 0.0, 0.0]]);
        let m = array![[true, false, true], [false, false, false]];
        let y = t.masked_softmax(x, Some(&m));
        let v = t.value(y);
        assert_eq!(v[[0, 1]], 0.0);
        assert!((v.row(0).sum() - 1.0).abs() < 1e-12);
        assert_eq!(v.row(1).sum(), 0.0);
    }

    #[test]
    fn normalize_rows() {
        let mut t = Tape::new();
        let x = t.constant(array![[1.0, 2.0, 3.0, 4.0]]);
        let y = t.normalize(x);
        let v = t.value(y);
        assert!(v.sum().abs() < 1e-12);
        assert!((v.mapv(|a| a * a).sum() / 4.0 - 1.0).abs() < 1e-4);
    }
}
