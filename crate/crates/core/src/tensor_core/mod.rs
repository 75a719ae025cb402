//! Dense symmetric-tensor algebra over `R^d`.
//!
//! Tensors are stored as dense `d^l` arrays in row-major order with 0-based
//! indices: entry `(i_1, ..., i_l)` lives at offset `sum_k i_k d^(l-k)`.
//! Every unfolding in the crate relies on this convention, so `Mat_{a,b}` of a
//! tensor is the same buffer read as a `d^a x d^b` row-major matrix.

mod coeffs;
mod frame;

pub use coeffs::{
    binomial, double_factorial, f_coeff, h_coeff, h_coeff_closed, h_coeffs, harmonic_dim, kappa,
    pochhammer, sym_dim,
};
pub use frame::{frame_distance, Frame};

use crate::error::{invalid, shape, Error, Result};

/// Largest order accepted by [`sym_project`].
pub const MAX_ORDER: usize = 6;

/// Dense order-`l` tensor over `R^d`, no symmetry assumed.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dim: usize,
    order: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dim: usize, order: usize) -> Self {
        Tensor { dim, order, data: vec![0.0; dim.pow(order as u32)] }
    }

    pub fn from_vec(dim: usize, order: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim.pow(order as u32) {
            return Err(shape(format!(
                "expected {} entries for d={dim}, l={order}, got {}",
                dim.pow(order as u32),
                data.len()
            )));
        }
        Ok(Tensor { dim, order, data })
    }

    pub fn scalar(dim: usize, c: f64) -> Self {
        Tensor { dim, order: 0, data: vec![c] }
    }

    pub fn vector(v: &[f64]) -> Self {
        Tensor { dim: v.len(), order: 1, data: v.to_vec() }
    }

    /// `z^{(x) l}`.
    pub fn outer_power(z: &[f64], order: usize) -> Self {
        let mut t = Tensor::scalar(z.len(), 1.0);
        for _ in 0..order {
            t = t.outer(&Tensor::vector(z));
        }
        t
    }

    /// `I^{(x) j}`, the order-`2j` tensor `delta(i1,i2) delta(i3,i4) ...`.
    pub fn identity_power(dim: usize, j: usize) -> Self {
        let mut eye = Tensor::zeros(dim, 2);
        for i in 0..dim {
            eye.data[i * dim + i] = 1.0;
        }
        let mut t = Tensor::scalar(dim, 1.0);
        for _ in 0..j {
            t = t.outer(&eye);
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn dot(&self, other: &Tensor) -> f64 {
        assert_eq!(self.data.len(), other.data.len());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, c: f64) -> Tensor {
        Tensor { dim: self.dim, order: self.order, data: self.data.iter().map(|x| x * c).collect() }
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Tensor) {
        assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &Tensor) -> Tensor {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Plain tensor product `self (x) other`.
    pub fn outer(&self, other: &Tensor) -> Tensor {
        assert_eq!(self.dim, other.dim);
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for &a in &self.data {
            data.extend(other.data.iter().map(|b| a * b));
        }
        Tensor { dim: self.dim, order: self.order + other.order, data }
    }

    /// Trace over the first two indices.
    pub fn trace_first_pair(&self) -> Result<Tensor> {
        if self.order < 2 {
            return Err(invalid("partial trace needs order >= 2"));
        }
        let d = self.dim;
        let block = d.pow(self.order as u32 - 2);
        let mut out = vec![0.0; block];
        for j in 0..d {
            let base = (j * d + j) * block;
            for (o, x) in out.iter_mut().zip(&self.data[base..base + block]) {
                *o += x;
            }
        }
        Ok(Tensor { dim: d, order: self.order - 2, data: out })
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.order < 2 {
            return true;
        }
        // adjacent transpositions generate the symmetric group
        let d = self.dim;
        let l = self.order;
        for k in 0..l - 1 {
            let s_hi = d.pow((l - 1 - k) as u32);
            let s_lo = d.pow((l - 2 - k) as u32);
            for (off, &v) in self.data.iter().enumerate() {
                let a = (off / s_hi) % d;
                let b = (off / s_lo) % d;
                if a == b {
                    continue;
                }
                let swapped = off - a * s_hi - b * s_lo + b * s_hi + a * s_lo;
                if (v - self.data[swapped]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Symmetric tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensor(Tensor);

impl SymTensor {
    /// Validating constructor.
    pub fn new(t: Tensor) -> Result<Self> {
        let scale = t.data.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        if !t.is_symmetric(1e-12 * scale) {
            return Err(invalid("tensor is not symmetric"));
        }
        Ok(SymTensor(t))
    }

    pub(crate) fn from_raw(t: Tensor) -> Self {
        SymTensor(t)
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn order(&self) -> usize {
        self.0.order
    }
}

/// Symmetric tensor in the kernel of the partial trace.
#[derive(Clone, Debug, PartialEq)]
pub struct TracelessSymTensor(SymTensor);

impl TracelessSymTensor {
    /// Validating constructor: symmetric and `|tau(A)| <= 1e-10 |A|`.
    pub fn new(t: Tensor) -> Result<Self> {
        let s = SymTensor::new(t)?;
        if s.order() >= 2 {
            let tr = s.0.trace_first_pair()?.norm();
            if tr > 1e-10 * s.0.norm().max(f64::MIN_POSITIVE) {
                return Err(invalid(format!("tensor is not traceless (|tau| = {tr:e})")));
            }
        }
        Ok(TracelessSymTensor(s))
    }

    pub(crate) fn from_raw(t: Tensor) -> Self {
        TracelessSymTensor(SymTensor(t))
    }

    pub fn sym(&self) -> &SymTensor {
        &self.0
    }

    pub fn tensor(&self) -> &Tensor {
        &self.0 .0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0 .0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn order(&self) -> usize {
        self.0.order()
    }
}

/// All permutations of `0..n` in lexicographic order.
pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// `P_sym`: average over all index permutations.
pub fn sym_project(t: &Tensor) -> Result<SymTensor> {
    let l = t.order;
    if l > MAX_ORDER {
        return Err(Error::OrderCap { order: l, cap: MAX_ORDER });
    }
    if l < 2 {
        return Ok(SymTensor(t.clone()));
    }
    let d = t.dim;
    let strides: Vec<usize> = (0..l).map(|k| d.pow((l - 1 - k) as u32)).collect();
    let perms = permutations(l);
    let mut out = vec![0.0; t.data.len()];
    let mut digits = vec![0usize; l];
    for (off, o) in out.iter_mut().enumerate() {
        let mut rem = off;
        for k in (0..l).rev() {
            digits[k] = rem % d;
            rem /= d;
        }
        let mut acc = 0.0;
        for p in &perms {
            let src: usize = p.iter().zip(&strides).map(|(&pk, &s)| digits[pk] * s).sum();
            acc += t.data[src];
        }
        *o = acc / perms.len() as f64;
    }
    Ok(SymTensor(Tensor { dim: d, order: l, data: out }))
}

/// `tau^j`: `j` successive partial traces.
pub fn partial_trace(t: &SymTensor, j: usize) -> Result<SymTensor> {
    if 2 * j > t.order() {
        return Err(invalid(format!("cannot take {j} traces of an order-{} tensor", t.order())));
    }
    let mut cur = t.0.clone();
    for _ in 0..j {
        cur = cur.trace_first_pair()?;
    }
    Ok(SymTensor(cur))
}

/// `P_sym(t (x) I^{(x) j})`.
pub fn sym_with_identity(t: &Tensor, j: usize) -> Result<SymTensor> {
    if j == 0 {
        return sym_project(t);
    }
    sym_project(&t.outer(&Tensor::identity_power(t.dim, j)))
}

/// Orthogonal projection onto traceless symmetric tensors.
///
/// Non-symmetric inputs are symmetrised first.
pub fn tf_project(t: &Tensor) -> Result<TracelessSymTensor> {
    let s = sym_project(t)?;
    let l = s.order();
    if l < 2 {
        return Ok(TracelessSymTensor(s));
    }
    let h = h_coeffs(t.dim, l);
    let mut out = s.0.clone();
    let mut tr = s.0.clone();
    for (j, &hj) in h.iter().enumerate().skip(1) {
        tr = tr.trace_first_pair()?;
        let term = sym_with_identity(&tr, j)?;
        out.axpy(hj, &term.0);
    }
    Ok(TracelessSymTensor(SymTensor(out)))
}

/// Fischer decomposition: components `C_j = P_tf(tau^j A)` for `j = 0..=l/2`.
pub fn fischer_decompose(a: &SymTensor) -> Result<Vec<(usize, TracelessSymTensor)>> {
    let mut out = Vec::new();
    for j in 0..=a.order() / 2 {
        let tr = partial_trace(a, j)?;
        out.push((j, tf_project(&tr.0)?));
    }
    Ok(out)
}

/// Inverse of [`fischer_decompose`]: `sum_j f_{l,j} P_sym(C_j (x) I^j)`.
pub fn fischer_reconstruct(
    dim: usize,
    order: usize,
    comps: &[(usize, TracelessSymTensor)],
) -> Result<SymTensor> {
    let mut out = Tensor::zeros(dim, order);
    for (j, c) in comps {
        if c.order() + 2 * j != order {
            return Err(shape("component order does not match"));
        }
        let term = sym_with_identity(c.tensor(), *j)?;
        out.axpy(f_coeff(dim, order, *j)?, &term.0);
    }
    Ok(SymTensor(out))
}

/// `A (x)_r B`: sums the last `r` indices of `A` against the first `r` of `B`.
pub fn contract(a: &Tensor, b: &Tensor, r: usize) -> Result<Tensor> {
    if a.dim != b.dim {
        return Err(shape("contract: dimension mismatch"));
    }
    if r > a.order.min(b.order) {
        return Err(invalid(format!("contract: r = {r} exceeds min order")));
    }
    let d = a.dim;
    let rows = d.pow((a.order - r) as u32);
    let inner = d.pow(r as u32);
    let cols = d.pow((b.order - r) as u32);
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        let arow = &a.data[i * inner..(i + 1) * inner];
        let orow = &mut out[i * cols..(i + 1) * cols];
        for (k, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b.data[k * cols..(k + 1) * cols];
            for (o, bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
    Ok(Tensor { dim: d, order: a.order + b.order - 2 * r, data: out })
}

/// `A <>_j B = P_tf(P_sym(A (x)_j B))`.
pub fn diamond(a: &TracelessSymTensor, b: &TracelessSymTensor, j: usize) -> Result<TracelessSymTensor> {
    if j > a.order().min(b.order()) {
        return Err(invalid(format!("diamond: j = {j} out of range")));
    }
    tf_project(&contract(a.tensor(), b.tensor(), j)?)
}

/// `(a,b)`-unfolding viewed as a `d^a x d^b` row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matricization {
    pub dim: usize,
    pub a: usize,
    pub b: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matricization {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `Mat * v`.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        self.data.chunks(self.cols).map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
    }
}

pub fn unfold(t: &Tensor, a: usize, b: usize) -> Result<Matricization> {
    if a + b != t.order {
        return Err(invalid(format!("unfold: a + b = {} but order is {}", a + b, t.order)));
    }
    Ok(Matricization {
        dim: t.dim,
        a,
        b,
        rows: t.dim.pow(a as u32),
        cols: t.dim.pow(b as u32),
        data: t.data.clone(),
    })
}

pub fn refold(m: &Matricization) -> Tensor {
    Tensor { dim: m.dim, order: m.a + m.b, data: m.data.clone() }
}

/// Multiply mode `mode` of a tensor with shape `dims` by the `p x dims[mode]`
/// row-major matrix `mat`.
pub(crate) fn mode_product(data: &[f64], dims: &[usize], mode: usize, mat: &[f64], p: usize) -> Vec<f64> {
    let n = dims[mode];
    let outer: usize = dims[..mode].iter().product();
    let inner: usize = dims[mode + 1..].iter().product();
    let mut out = vec![0.0; outer * p * inner];
    for o in 0..outer {
        for k in 0..n {
            let src = &data[(o * n + k) * inner..(o * n + k + 1) * inner];
            for q in 0..p {
                let m = mat[q * n + k];
                if m == 0.0 {
                    continue;
                }
                let dst = &mut out[(o * p + q) * inner..(o * p + q + 1) * inner];
                for (x, y) in dst.iter_mut().zip(src) {
                    *x += m * y;
                }
            }
        }
    }
    out
}

/// `W^{(x) l} T` for a frame `W` (d x s) and a tensor `T` over `R^s`.
pub fn apply_frame(w: &Frame, t: &Tensor) -> Result<Tensor> {
    if t.dim != w.rank() {
        return Err(shape(format!("apply_frame: tensor dim {} vs frame rank {}", t.dim, w.rank())));
    }
    let d = w.dim();
    let s = w.rank();
    let m = w.matrix();
    let mut mat = vec![0.0; d * s];
    for i in 0..d {
        for k in 0..s {
            mat[i * s + k] = m[(i, k)];
        }
    }
    let mut dims = vec![s; t.order];
    let mut data = t.data.clone();
    for mode in 0..t.order {
        data = mode_product(&data, &dims, mode, &mat, d);
        dims[mode] = d;
    }
    Ok(Tensor { dim: d, order: t.order, data })
}

/// `(W^T)^{(x) l} T`: the coordinates of an ambient tensor along a frame.
pub fn restrict_to_frame(w: &Frame, t: &Tensor) -> Result<Tensor> {
    if t.dim != w.dim() {
        return Err(shape("restrict_to_frame: dimension mismatch"));
    }
    let d = w.dim();
    let s = w.rank();
    let m = w.matrix();
    let mut mat = vec![0.0; s * d];
    for i in 0..d {
        for k in 0..s {
            mat[k * d + i] = m[(i, k)];
        }
    }
    let mut dims = vec![d; t.order];
    let mut data = t.data.clone();
    for mode in 0..t.order {
        data = mode_product(&data, &dims, mode, &mat, s);
        dims[mode] = s;
    }
    Ok(Tensor { dim: s, order: t.order, data })
}

#[cfg(test)]
mod tests;
