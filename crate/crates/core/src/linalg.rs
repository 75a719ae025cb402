//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Eigen-decomposition of a symmetric matrix, eigenvalues sorted descending.
///
/// Each eigenvector is sign-normalised so that its largest-magnitude entry is
/// positive; ties resolve to the first such entry.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (c, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        let mut best = 0;
        for r in 0..n {
            if col[r].abs() > col[best].abs() + 1e-14 {
                best = r;
            }
        }
        let sgn = if col[best] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vecs[(r, c)] = sgn * col[r];
        }
    }
    (vals, vecs)
}

/// Thin QR orthonormalisation with the positive-diagonal convention.
pub fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let qr = m.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..cols.min(rows) {
        if r[(c, c)] < 0.0 {
            for i in 0..rows {
                q[(i, c)] = -q[(i, c)];
            }
        }
    }
    q.columns(0, cols.min(rows)).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `u`, built by Gram-Schmidt over the coordinate vectors.
pub fn complement(u: &DMatrix<f64>) -> DMatrix<f64> {
    let d = u.nrows();
    let s = u.ncols();
    let mut basis: Vec<DVector<f64>> = (0..s).map(|c| u.column(c).into_owned()).collect();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(d - s);
    for i in 0..d {
        if out.len() == d - s {
            break;
        }
        let mut v = DVector::zeros(d);
        v[i] = 1.0;
        for _ in 0..2 {
            for b in basis.iter() {
                let p = b.dot(&v);
                v.axpy(-p, b, 1.0);
            }
        }
        let nrm = v.norm();
        if nrm > 1e-6 {
            v /= nrm;
            basis.push(v.clone());
            out.push(v);
        }
    }
    let mut m = DMatrix::zeros(d, out.len());
    for (c, v) in out.iter().enumerate() {
        m.set_column(c, v);
    }
    m
}

/// Inverse square root of a symmetric positive definite matrix.
pub fn inv_sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen_desc(m);
    let n = vals.len();
    let mut out = DMatrix::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        let w = 1.0 / l.sqrt();
        let v = vecs.column(k);
        out += (v * v.transpose()) * w;
    }
    out
}

/// Numerical rank: eigenvalues of the PSD matrix above `rel` times the largest.
pub fn psd_rank(m: &DMatrix<f64>, rel: f64) -> usize {
    let (vals, _) = sym_eigen_desc(m);
    let top = vals.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    vals.iter().filter(|&&v| v > rel * top).count()
}
