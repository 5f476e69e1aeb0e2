//! Vandermonde-with-Arnoldi orthogonalization of monomial blocks.
//!
//! Given nodes `x_1..x_M` and a degree `n`, builds `Q` (`M x (n+1)`,
//! orthonormal columns spanning `[1, x, .., x^n]`), the upper Hessenberg `H`
//! with `diag(x) Q[:, ..n] = Q H`, and the upper triangular `R` with
//! `V = Q R`. `R` comes from the Hessenberg recurrence, so the Vandermonde
//! matrix itself is never formed.

use faer::{Col, ColRef, Mat};
use num_complex::Complex64;

use crate::error::{MfsError, Result};
use crate::linalg::{DenseMatrix, ZERO};

#[derive(Debug, Clone)]
pub struct ArnoldiFactor {
    nodes: Vec<Complex64>,
    q: DenseMatrix,
    h: DenseMatrix,
    r: DenseMatrix,
    /// Columns of `H` truncated to their nonzero part, `h_cols[k].len() == k + 2`.
    h_cols: Vec<Vec<Complex64>>,
}

impl ArnoldiFactor {
    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    /// `M x (n+1)` orthonormal basis.
    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }

    /// `(n+1) x n` upper Hessenberg matrix.
    pub fn h(&self) -> &DenseMatrix {
        &self.h
    }

    /// `(n+1) x (n+1)` upper triangular change of basis, `V = Q R`.
    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    pub fn degree(&self) -> usize {
        self.q.ncols() - 1
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Evaluates the orthogonal polynomial basis at arbitrary nodes through
    /// the Hessenberg recurrence. Row `i` holds `q_0(x_i), .., q_n(x_i)`.
    pub fn eval(&self, new_nodes: &[Complex64]) -> Result<DenseMatrix> {
        let n = self.degree();
        let k = new_nodes.len();
        let mut out = Mat::<Complex64>::zeros(k, n + 1);
        out.col_mut(0)
            .fill(Complex64::new(1.0 / (self.nodes.len() as f64).sqrt(), 0.0));
        for (col, h) in self.h_cols.iter().enumerate() {
            let sub = h[col + 1];
            if sub.norm() == 0.0 {
                return Err(MfsError::Linalg(format!(
                    "zero Hessenberg subdiagonal at column {col}"
                )));
            }
            let proj = out.subcols(0, col + 1) * ColRef::from_slice(&h[..=col]);
            let inv = sub.inv();
            for i in 0..k {
                let v = new_nodes[i] * out[(i, col)] - proj[i];
                out[(i, col + 1)] = v * inv;
            }
        }
        Ok(out)
    }

    /// Single-node version of [`eval`](Self::eval) writing into `row`.
    pub fn eval_into(&self, x: Complex64, row: &mut [Complex64]) {
        let n = self.degree();
        debug_assert_eq!(row.len(), n + 1);
        row[0] = Complex64::new(1.0 / (self.nodes.len() as f64).sqrt(), 0.0);
        for (col, h) in self.h_cols.iter().enumerate() {
            let (done, rest) = row.split_at_mut(col + 1);
            let mut v = x * done[col];
            for (hj, qj) in h[..=col].iter().zip(done.iter()) {
                v -= hj * qj;
            }
            rest[0] = v / h[col + 1];
        }
    }
}

/// Arnoldi iteration on `diag(nodes)` from `q_0 = ones / sqrt(M)`, with
/// Gram-Schmidt against all previous columns repeated once.
pub fn arnoldi_vandermonde(nodes: &[Complex64], n: usize) -> Result<ArnoldiFactor> {
    let m = nodes.len();
    if n + 1 > m {
        return Err(MfsError::RankDeficient(format!(
            "degree {n} needs at least {} nodes, got {m}",
            n + 1
        )));
    }
    if nodes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(MfsError::Argument("Arnoldi nodes must be finite".into()));
    }
    let scale = nodes.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut q = Mat::<Complex64>::zeros(m, n + 1);
    q.col_mut(0)
        .fill(Complex64::new(1.0 / (m as f64).sqrt(), 0.0));
    let mut h_cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);

    for k in 0..n {
        let mut v = Col::<Complex64>::from_fn(m, |i| nodes[i] * q[(i, k)]);
        let mut hk = vec![ZERO; k + 2];
        for _pass in 0..2 {
            let basis = q.subcols(0, k + 1);
            let c = basis.adjoint() * &v;
            v -= basis * &c;
            for (h, cj) in hk.iter_mut().zip(c.iter()) {
                *h += cj;
            }
        }
        let beta = v.norm_l2();
        if !(beta > 1e-14 * scale) {
            return Err(MfsError::ArnoldiBreakdown {
                step: k + 1,
                value: beta,
            });
        }
        hk[k + 1] = Complex64::new(beta, 0.0);
        let inv = 1.0 / beta;
        for i in 0..m {
            q[(i, k + 1)] = v[i] * inv;
        }
        h_cols.push(hk);
    }
    let h = Mat::from_fn(n + 1, n, |i, j| h_cols[j].get(i).copied().unwrap_or(ZERO));

    // Columns of V satisfy v_{k+1} = X v_k, hence r_{k+1} = H[..=k+1, ..=k] r_k.
    let mut r = Mat::<Complex64>::zeros(n + 1, n + 1);
    r[(0, 0)] = Complex64::new((m as f64).sqrt(), 0.0);
    for k in 0..n {
        for i in 0..=k + 1 {
            let mut s = ZERO;
            for j in i.saturating_sub(1)..=k {
                s += h[(i, j)] * r[(j, k)];
            }
            r[(i, k + 1)] = s;
        }
    }

    Ok(ArnoldiFactor {
        nodes: nodes.to_vec(),
        q,
        h,
        r,
        h_cols,
    })
}

/// Coupling matrix `K = blkdiag(R_Z, R_W)^T`, `(2p+1) x (2p+2)`, where `R_W` is
/// the `W` factor's triangular matrix without its first column.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    k: DenseMatrix,
    p: usize,
}

impl CouplingMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.k
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    /// Square `(2p+1) x (2p+1)` form acting on `J' = [q_Z; q_W,1..p]`.
    ///
    /// `q_W,0` and `q_Z,0` are the same constant function, so the column of
    /// `K` multiplying `q_W,0` folds into column 0. The result is invertible.
    pub fn reduced(&self) -> DenseMatrix {
        let p = self.p;
        Mat::from_fn(2 * p + 1, 2 * p + 1, |r, c| {
            if c == 0 {
                self.k[(r, 0)] + self.k[(r, p + 1)]
            } else if c <= p {
                self.k[(r, c)]
            } else {
                self.k[(r, c + 1)]
            }
        })
    }
}

pub fn build_coupling(zfac: &ArnoldiFactor, wfac: &ArnoldiFactor) -> Result<CouplingMatrix> {
    let p = zfac.degree();
    if wfac.degree() != p {
        return Err(MfsError::Argument(format!(
            "Arnoldi degrees differ: {} vs {}",
            p,
            wfac.degree()
        )));
    }
    let mut k = Mat::<Complex64>::zeros(2 * p + 1, 2 * p + 2);
    for row in 0..=p {
        for col in 0..=p {
            k[(row, col)] = zfac.r[(col, row)];
        }
    }
    for m in 1..=p {
        for col in 0..=p {
            k[(p + m, p + 1 + col)] = wfac.r[(col, m)];
        }
    }
    Ok(CouplingMatrix { k, p })
}
