use std::collections::BTreeMap;

use super::{AutodiffError, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    RowSoftmax(Var),
    SumAll(Var),
    GatherRows(Var, Vec<usize>),
    ScatterAddRows(Var, Vec<usize>),
    Mask(Var, Tensor, f64),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Wengert list for reverse-mode differentiation of dense matrix programs.
///
/// Records are appended in evaluation order, so every input precedes its
/// consumer and a single reverse sweep visits each record once. Only
/// records downstream of a leaf carry gradients; constants and anything
/// computed purely from constants are skipped during [`Tape::backward`].
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    leaves: Vec<Var>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Registers a differentiable input.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        let v = self.push(value, Op::Leaf, true);
        self.leaves.push(v);
        v
    }

    /// Records a value that never receives a gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn leaves(&self) -> &[Var] {
        &self.leaves
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> [usize; 2] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn check(&self, v: Var) -> Result<(), AutodiffError> {
        if v.0 < self.nodes.len() {
            Ok(())
        } else {
            Err(AutodiffError::UnknownVar(v.0))
        }
    }

    fn record(&mut self, op_name: &'static str, value: Tensor, op: Op, inputs: &[Var]) -> Result<Var, AutodiffError> {
        if let Some(index) = value.data().iter().position(|x| !x.is_finite()) {
            return Err(AutodiffError::NonFinite { op: op_name, index });
        }
        let needs = inputs.iter().any(|&i| self.needs(i));
        Ok(self.push(value, op, needs))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<(), AutodiffError> {
        self.check(a)?;
        self.check(b)?;
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(AutodiffError::ShapeMismatch { op, left: sa, right: sb });
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        self.check(b)?;
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa[1] != sb[0] {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                left: sa,
                right: sb,
            });
        }
        let value = self.value(a).matmul(self.value(b));
        self.record("matmul", value, Op::MatMul(a, b), &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("add", a, b)?;
        let value = self.value(a).add(self.value(b));
        self.record("add", value, Op::Add(a, b), &[a, b])
    }

    /// Adds a `1 × k` row to every row of an `n × k` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        self.check(row)?;
        let (sa, sr) = (self.shape(a), self.shape(row));
        if sr[0] != 1 || sr[1] != sa[1] {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_row",
                left: sa,
                right: sr,
            });
        }
        let bias = self.value(row).data();
        let mut out = self.value(a).clone();
        for chunk in out.data_mut().chunks_mut(sa[1].max(1)) {
            for (o, b) in chunk.iter_mut().zip(bias) {
                *o += b;
            }
        }
        self.record("add_row", out, Op::AddRow(a, row), &[a, row])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a).sub(self.value(b));
        self.record("sub", value, Op::Sub(a, b), &[a, b])
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        self.same_shape("mul", a, b)?;
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data().iter().zip(vb.data()).map(|(x, y)| x * y).collect();
        let value = Tensor::from_raw(va.rows(), va.cols(), data);
        self.record("mul", value, Op::Mul(a, b), &[a, b])
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var, AutodiffError> {
        self.check(a)?;
        if !factor.is_finite() {
            return Err(AutodiffError::NonFinite { op: "scale", index: 0 });
        }
        let value = self.value(a).map(|x| x * factor);
        self.record("scale", value, Op::Scale(a, factor), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let value = self.value(a).map(sigmoid);
        self.record("sigmoid", value, Op::Sigmoid(a), &[a])
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let value = self.value(a).map(f64::tanh);
        self.record("tanh", value, Op::Tanh(a), &[a])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let value = self.value(a).map(|x| x.max(0.0));
        self.record("relu", value, Op::Relu(a), &[a])
    }

    pub fn row_softmax(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let input = self.value(a);
        let cols = input.cols();
        let mut out = input.clone();
        if cols > 0 {
            for row in out.data_mut().chunks_mut(cols) {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for x in row.iter_mut() {
                    *x = (*x - max).exp();
                    total += *x;
                }
                for x in row.iter_mut() {
                    *x /= total;
                }
            }
        }
        self.record("row_softmax", out, Op::RowSoftmax(a), &[a])
    }

    /// Sum of every entry, as a `1 × 1` tensor.
    pub fn sum_all(&mut self, a: Var) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let value = Tensor::from_raw(1, 1, vec![self.value(a).sum()]);
        self.record("sum_all", value, Op::SumAll(a), &[a])
    }

    /// Output row `r` is input row `index[r]`.
    pub fn gather_rows(&mut self, a: Var, index: &[usize]) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let input = self.value(a);
        let [rows, cols] = input.shape();
        if let Some(&bad) = index.iter().find(|&&i| i >= rows) {
            return Err(AutodiffError::RowIndex {
                op: "gather_rows",
                index: bad,
                rows,
            });
        }
        let mut data = Vec::with_capacity(index.len() * cols);
        for &i in index {
            data.extend_from_slice(input.row(i));
        }
        let value = Tensor::from_raw(index.len(), cols, data);
        self.record("gather_rows", value, Op::GatherRows(a, index.to_vec()), &[a])
    }

    /// Input row `r` is added into output row `index[r]` of an
    /// `out_rows × k` result.
    pub fn scatter_add_rows(&mut self, a: Var, index: &[usize], out_rows: usize) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let input = self.value(a);
        let [rows, cols] = input.shape();
        if index.len() != rows {
            return Err(AutodiffError::ShapeMismatch {
                op: "scatter_add_rows",
                left: [rows, cols],
                right: [index.len(), 1],
            });
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= out_rows) {
            return Err(AutodiffError::RowIndex {
                op: "scatter_add_rows",
                index: bad,
                rows: out_rows,
            });
        }
        let mut data = vec![0.0; out_rows * cols];
        for (r, &target) in index.iter().enumerate() {
            for (o, x) in data[target * cols..(target + 1) * cols].iter_mut().zip(input.row(r)) {
                *o += x;
            }
        }
        let value = Tensor::from_raw(out_rows, cols, data);
        self.record("scatter_add_rows", value, Op::ScatterAddRows(a, index.to_vec()), &[a])
    }

    /// `a ⊙ mask · scale` for a 0/1 mask.
    pub fn apply_mask(&mut self, a: Var, mask: &Tensor, scale: f64) -> Result<Var, AutodiffError> {
        self.check(a)?;
        let input = self.value(a);
        if input.shape() != mask.shape() {
            return Err(AutodiffError::ShapeMismatch {
                op: "apply_mask",
                left: input.shape(),
                right: mask.shape(),
            });
        }
        if let Some(index) = mask.data().iter().position(|&m| m != 0.0 && m != 1.0) {
            return Err(AutodiffError::NonBinaryMask { index });
        }
        if !scale.is_finite() {
            return Err(AutodiffError::NonFinite { op: "apply_mask", index: 0 });
        }
        let data = input
            .data()
            .iter()
            .zip(mask.data())
            .map(|(x, m)| x * m * scale)
            .collect();
        let value = Tensor::from_raw(input.rows(), input.cols(), data);
        self.record("apply_mask", value, Op::Mask(a, mask.clone(), scale), &[a])
    }

    /// Gradients of a scalar output with respect to every leaf.
    pub fn backward(&self, output: Var) -> Result<Gradients, AutodiffError> {
        self.backward_with_seed(output, 1.0)
    }

    /// Like [`Tape::backward`] but starts the sweep from `seed` instead of 1,
    /// which yields `seed · ∂output/∂leaf`. Training uses this to fold the
    /// loss derivative into the sweep.
    pub fn backward_with_seed(&self, output: Var, seed: f64) -> Result<Gradients, AutodiffError> {
        self.check(output)?;
        let shape = self.shape(output);
        if shape != [1, 1] {
            return Err(AutodiffError::NotScalar(shape));
        }
        let mut grads: Vec<Option<Tensor>> = (0..=output.0).map(|_| None).collect();
        grads[output.0] = Some(Tensor::from_raw(1, 1, vec![seed]));

        for idx in (0..=output.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(upstream) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &upstream, &mut grads);
            grads[idx] = Some(upstream);
        }

        let map = self
            .leaves
            .iter()
            .map(|&leaf| {
                let g = grads
                    .get_mut(leaf.0)
                    .and_then(Option::take)
                    .unwrap_or_else(|| {
                        let [r, c] = self.shape(leaf);
                        Tensor::zeros(r, c)
                    });
                (leaf, g)
            })
            .collect();
        Ok(Gradients { map })
    }

    fn propagate(&self, node: &Node, up: &Tensor, grads: &mut [Option<Tensor>]) {
        let send = |v: Var, g: Tensor, grads: &mut [Option<Tensor>]| {
            if !self.needs(v) {
                return;
            }
            match &mut grads[v.0] {
                Some(acc) => acc.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        };
        match &node.op {
            Op::Leaf | Op::Constant => {}
            Op::MatMul(a, b) => {
                if self.needs(*a) {
                    send(*a, up.matmul_rhs_t(self.value(*b)), grads);
                }
                if self.needs(*b) {
                    send(*b, self.value(*a).matmul_lhs_t(up), grads);
                }
            }
            Op::Add(a, b) => {
                send(*a, up.clone(), grads);
                send(*b, up.clone(), grads);
            }
            Op::AddRow(a, row) => {
                send(*a, up.clone(), grads);
                if self.needs(*row) {
                    let cols = up.cols();
                    let mut sums = vec![0.0; cols];
                    if cols > 0 {
                        for chunk in up.data().chunks(cols) {
                            for (s, x) in sums.iter_mut().zip(chunk) {
                                *s += x;
                            }
                        }
                    }
                    send(*row, Tensor::from_raw(1, cols, sums), grads);
                }
            }
            Op::Sub(a, b) => {
                send(*a, up.clone(), grads);
                send(*b, up.map(|x| -x), grads);
            }
            Op::Mul(a, b) => {
                if self.needs(*a) {
                    send(*a, hadamard(up, self.value(*b)), grads);
                }
                if self.needs(*b) {
                    send(*b, hadamard(up, self.value(*a)), grads);
                }
            }
            Op::Scale(a, factor) => send(*a, up.map(|x| x * factor), grads),
            Op::Sigmoid(a) => {
                let y = &node.value;
                let data = up.data().iter().zip(y.data()).map(|(g, s)| g * s * (1.0 - s)).collect();
                send(*a, Tensor::from_raw(y.rows(), y.cols(), data), grads);
            }
            Op::Tanh(a) => {
                let y = &node.value;
                let data = up.data().iter().zip(y.data()).map(|(g, t)| g * (1.0 - t * t)).collect();
                send(*a, Tensor::from_raw(y.rows(), y.cols(), data), grads);
            }
            Op::Relu(a) => {
                let x = self.value(*a);
                let data = up
                    .data()
                    .iter()
                    .zip(x.data())
                    .map(|(g, v)| if *v > 0.0 { *g } else { 0.0 })
                    .collect();
                send(*a, Tensor::from_raw(x.rows(), x.cols(), data), grads);
            }
            Op::RowSoftmax(a) => {
                let y = &node.value;
                let cols = y.cols();
                let mut data = vec![0.0; y.len()];
                if cols > 0 {
                    for ((out, g), s) in data.chunks_mut(cols).zip(up.data().chunks(cols)).zip(y.data().chunks(cols)) {
                        let dot: f64 = g.iter().zip(s).map(|(a, b)| a * b).sum();
                        for ((o, gi), si) in out.iter_mut().zip(g).zip(s) {
                            *o = si * (gi - dot);
                        }
                    }
                }
                send(*a, Tensor::from_raw(y.rows(), y.cols(), data), grads);
            }
            Op::SumAll(a) => {
                let [r, c] = self.shape(*a);
                send(*a, Tensor::filled(r, c, up.data()[0]), grads);
            }
            Op::GatherRows(a, index) => {
                let [r, c] = self.shape(*a);
                let mut g = Tensor::zeros(r, c);
                for (out_row, &src) in index.iter().enumerate() {
                    let dst = &mut g.data_mut()[src * c..(src + 1) * c];
                    for (d, u) in dst.iter_mut().zip(up.row(out_row)) {
                        *d += u;
                    }
                }
                send(*a, g, grads);
            }
            Op::ScatterAddRows(a, index) => {
                let c = up.cols();
                let mut data = Vec::with_capacity(index.len() * c);
                for &target in index {
                    data.extend_from_slice(up.row(target));
                }
                send(*a, Tensor::from_raw(index.len(), c, data), grads);
            }
            Op::Mask(a, mask, scale) => {
                let data = up.data().iter().zip(mask.data()).map(|(g, m)| g * m * scale).collect();
                send(*a, Tensor::from_raw(up.rows(), up.cols(), data), grads);
            }
        }
    }
}

fn hadamard(a: &Tensor, b: &Tensor) -> Tensor {
    Tensor::from_raw(
        a.rows(),
        a.cols(),
        a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect(),
    )
}

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Leaf gradients returned by [`Tape::backward`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    map: BTreeMap<Var, Tensor>,
}

impl Gradients {
    pub fn get(&self, leaf: Var) -> Option<&Tensor> {
        self.map.get(&leaf)
    }

    pub fn take(&mut self, leaf: Var) -> Option<Tensor> {
        self.map.remove(&leaf)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, &Tensor)> {
        self.map.iter().map(|(v, t)| (*v, t))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
