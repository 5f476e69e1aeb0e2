//! Dense complex linear algebra used by every solver: thin SVD, least squares
//! and 2-norm condition numbers.
//!
//! Matrices are [`faer::Mat`] values (column-major). Real matrices such as the
//! kernel collocation matrix are embedded with zero imaginary parts so that
//! all solvers share one code path.

use faer::prelude::*;
use faer::Mat;
use num_complex::Complex64;

use crate::error::{MfsError, Result};

pub type DenseMatrix = Mat<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Singular values below `sigma_max * CONDITION_FLOOR` make `cond2` infinite.
pub const CONDITION_FLOOR: f64 = 1e-300;

/// Thin SVD `A = U diag(S) Vh` with `k = min(m, n)`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub vh: DenseMatrix,
}

pub fn ensure_finite(a: &DenseMatrix) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(MfsError::Argument(format!(
                    "matrix entry ({i}, {j}) is not finite"
                )));
            }
        }
    }
    Ok(())
}

pub fn from_real(a: &Mat<f64>) -> DenseMatrix {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| Complex64::new(a[(i, j)], 0.0))
}

pub fn column_vector(v: &[Complex64]) -> DenseMatrix {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn matvec(a: &DenseMatrix, x: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.ncols(), x.len(), "matvec shape mismatch");
    let y = a * column_vector(x);
    (0..y.nrows()).map(|i| y[(i, 0)]).collect()
}

/// Plain (non-conjugating) transpose.
pub fn transpose(a: &DenseMatrix) -> DenseMatrix {
    a.transpose().to_owned()
}

pub fn adjoint(a: &DenseMatrix) -> DenseMatrix {
    a.adjoint().to_owned()
}

pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn max_abs(a: &DenseMatrix) -> f64 {
    let mut m: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn vector_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Thin SVD with singular values in nonincreasing order.
pub fn svd_thin(a: &DenseMatrix) -> Result<ThinSvd> {
    ensure_finite(a)?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(MfsError::Argument("SVD of an empty matrix".into()));
    }
    let svd = a
        .thin_svd()
        .map_err(|e| MfsError::Linalg(format!("SVD did not converge: {e:?}")))?;
    let k = a.nrows().min(a.ncols());
    let sd = svd.S().column_vector();
    let s: Vec<f64> = (0..k).map(|i| sd[i].re).collect();
    Ok(ThinSvd {
        u: svd.U().to_owned(),
        s,
        vh: svd.V().adjoint().to_owned(),
    })
}

/// Singular values only, nonincreasing.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    ensure_finite(a)?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(MfsError::Argument("SVD of an empty matrix".into()));
    }
    a.singular_values()
        .map_err(|e| MfsError::Linalg(format!("SVD did not converge: {e:?}")))
}

/// `sigma_max / sigma_min`; `+inf` when the smallest singular value is
/// negligible relative to the largest.
pub fn cond2(a: &DenseMatrix) -> Result<f64> {
    let s = singular_values(a)?;
    let (smax, smin) = (s[0], *s.last().unwrap());
    if smax == 0.0 {
        return Err(MfsError::Argument("condition number of a zero matrix".into()));
    }
    if smin < smax * CONDITION_FLOOR {
        return Ok(f64::INFINITY);
    }
    Ok(smax / smin)
}

/// Least-squares minimizer of `|A x - b|` for `m >= n`.
///
/// Householder QR is used when the triangular factor is numerically
/// nonsingular; otherwise falls back to the minimum-norm solution from a
/// truncated SVD with relative threshold `max(m, n) * eps`.
pub fn lstsq(a: &DenseMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let (m, n) = (a.nrows(), a.ncols());
    if m < n {
        return Err(MfsError::Shape(format!(
            "least squares needs rows >= cols, got {m}x{n}"
        )));
    }
    if b.len() != m {
        return Err(MfsError::Shape(format!(
            "right-hand side has length {}, expected {m}",
            b.len()
        )));
    }
    if n == 0 {
        return Err(MfsError::Argument("least squares with zero unknowns".into()));
    }
    ensure_finite(a)?;
    if b.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(MfsError::Argument("right-hand side is not finite".into()));
    }
    let tol = m.max(n) as f64 * f64::EPSILON;

    let qr = a.qr();
    let r = qr.thin_R();
    let diag: Vec<f64> = (0..n).map(|i| r[(i, i)].norm()).collect();
    let dmax = diag.iter().copied().fold(0.0, f64::max);
    let dmin = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if dmax > 0.0 && dmin > tol * dmax {
        let x = qr.solve_lstsq(column_vector(b));
        return Ok((0..n).map(|i| x[(i, 0)]).collect());
    }
    min_norm_lstsq(a, b, tol)
}

fn min_norm_lstsq(a: &DenseMatrix, b: &[Complex64], rtol: f64) -> Result<Vec<Complex64>> {
    let svd = svd_thin(a)?;
    let cutoff = svd.s[0] * rtol;
    let bcol = column_vector(b);
    let utb = svd.u.adjoint() * &bcol;
    let k = svd.s.len();
    let scaled = Mat::from_fn(k, 1, |i, _| {
        if svd.s[i] > cutoff {
            utb[(i, 0)] / svd.s[i]
        } else {
            ZERO
        }
    });
    let x = svd.vh.adjoint() * scaled;
    Ok((0..a.ncols()).map(|i| x[(i, 0)]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::linalg::solvers::DenseSolveCore;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DenseMatrix {
        Mat::from_fn(m, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn diag(values: &[f64]) -> DenseMatrix {
        Mat::from_fn(values.len(), values.len(), |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn svd_of_diagonals() {
        let s = svd_thin(&diag(&[1.0, 1.0, 1.0])).unwrap().s;
        assert!(s.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        let s = svd_thin(&diag(&[3.0, 2.0, 1.0])).unwrap().s;
        for (a, b) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let s = svd_thin(&diag(&[1.0, 3.0, 2.0])).unwrap().s;
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_residuals_on_random_wide_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 20, 30);
        let svd = svd_thin(&a).unwrap();
        assert_eq!(svd.u.shape(), (20, 20));
        assert_eq!(svd.vh.shape(), (20, 30));
        let sd = Mat::from_fn(20, 20, |i, j| {
            if i == j {
                Complex64::new(svd.s[i], 0.0)
            } else {
                ZERO
            }
        });
        let rec = &svd.u * sd * &svd.vh;
        assert!(frobenius_norm(&(&rec - &a)) <= 1e-13 * frobenius_norm(&a));
        let eye = Mat::<Complex64>::identity(20, 20);
        assert!(max_abs(&(svd.u.adjoint() * &svd.u - &eye)) <= 1e-12);
        assert!(max_abs(&(&svd.vh * svd.vh.adjoint() - &eye)) <= 1e-12);
        assert!(svd.s.iter().all(|&x| x >= 0.0));
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = diag(&[1.0, 2.0]);
        a[(0, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(svd_thin(&a), Err(MfsError::Argument(_))));
        assert!(matches!(cond2(&a), Err(MfsError::Argument(_))));
    }

    #[test]
    fn condition_numbers() {
        assert!((cond2(&diag(&[1.0, 1.0, 1.0])).unwrap() - 1.0).abs() < 1e-14);
        assert!((cond2(&diag(&[10.0, 1.0])).unwrap() - 10.0).abs() < 1e-13);
        assert!(cond2(&diag(&[1.0, 0.0])).unwrap().is_infinite());
        assert!(cond2(&diag(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn cond2_matches_inverse_power_iteration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 50, 50);
        let inv = a.partial_piv_lu().inverse();
        // ||B||_2 by power iteration on B^H B
        let norm2 = |b: &DenseMatrix| {
            let bhb = b.adjoint() * b;
            let mut v = Mat::from_fn(50, 1, |i, _| Complex64::new(1.0 + i as f64 * 0.01, 0.3));
            let mut lambda = 0.0;
            for _ in 0..20000 {
                let w = &bhb * &v;
                let nw = frobenius_norm(&w);
                let next = nw / frobenius_norm(&v);
                v = Mat::from_fn(50, 1, |i, _| w[(i, 0)] / nw);
                if (next - lambda).abs() <= 1e-15 * next {
                    lambda = next;
                    break;
                }
                lambda = next;
            }
            lambda.sqrt()
        };
        let oracle = norm2(&a) * norm2(&inv);
        let c = cond2(&a).unwrap();
        assert!((c - oracle).abs() <= 1e-8 * oracle, "{c} vs {oracle}");
    }

    #[test]
    fn lstsq_identity_and_consistent_systems() {
        let b: Vec<Complex64> = (0..4).map(|i| Complex64::new(i as f64, -1.0)).collect();
        let x = lstsq(&diag(&[1.0, 1.0, 1.0, 1.0]), &b).unwrap();
        for (u, v) in x.iter().zip(&b) {
            assert!((u - v).norm() < 1e-15);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(&mut rng, 40, 12);
        let x0: Vec<Complex64> = (0..12).map(|i| Complex64::new(0.5 * i as f64, 1.0)).collect();
        let rhs = matvec(&a, &x0);
        let x = lstsq(&a, &rhs).unwrap();
        let res: Vec<Complex64> = matvec(&a, &x).iter().zip(&rhs).map(|(p, q)| p - q).collect();
        assert!(vector_norm(&res) <= 1e-12 * vector_norm(&rhs));
    }

    #[test]
    fn lstsq_matches_normal_equations_oracle() {
        // A^T A x = A^T b solved by hand for a 4x2 real system
        let rows = [[1.0, 2.0], [3.0, -1.0], [0.5, 4.0], [-2.0, 1.0]];
        let b = [1.0, -2.0, 3.5, 0.25];
        let a = Mat::from_fn(4, 2, |i, j| Complex64::new(rows[i][j], 0.0));
        let (mut g, mut h) = ([[0.0; 2]; 2], [0.0; 2]);
        for i in 0..4 {
            for p in 0..2 {
                h[p] += rows[i][p] * b[i];
                for q in 0..2 {
                    g[p][q] += rows[i][p] * rows[i][q];
                }
            }
        }
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let oracle = [
            (g[1][1] * h[0] - g[0][1] * h[1]) / det,
            (g[0][0] * h[1] - g[1][0] * h[0]) / det,
        ];
        let bc: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let x = lstsq(&a, &bc).unwrap();
        for (xi, oi) in x.iter().zip(oracle) {
            assert!((xi.re - oi).abs() < 1e-10 && xi.im.abs() < 1e-12);
        }
    }

    #[test]
    fn lstsq_rank_deficient_returns_min_norm() {
        // duplicated column: minimizers form a line, min-norm splits evenly
        let a = Mat::from_fn(3, 2, |i, _| Complex64::new(1.0 + i as f64, 0.0));
        let b = vec![Complex64::new(2.0, 0.0), Complex64::new(4.0, 0.0), Complex64::new(6.0, 0.0)];
        let x = lstsq(&a, &b).unwrap();
        assert!((x[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((x[1] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn lstsq_shape_errors() {
        let a = Mat::<Complex64>::zeros(2, 3);
        assert!(matches!(lstsq(&a, &[ONE, ONE]), Err(MfsError::Shape(_))));
        let a = Mat::<Complex64>::identity(3, 3);
        assert!(matches!(lstsq(&a, &[ONE]), Err(MfsError::Shape(_))));
    }

    #[test]
    fn lstsq_residual_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let a = random_matrix(&mut rng, 60, 25);
            let b: Vec<Complex64> = (0..60)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
                .collect();
            let x = lstsq(&a, &b).unwrap();
            let r: Vec<Complex64> = matvec(&a, &x).iter().zip(&b).map(|(p, q)| p - q).collect();
            let atr = matvec(&adjoint(&a), &r);
            assert!(vector_norm(&atr) <= 1e-10 * frobenius_norm(&a) * vector_norm(&b));
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn singular_values_unitarily_invariant(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(&mut rng, 12, 8);
            let q1 = random_matrix(&mut rng, 12, 12).qr().compute_Q();
            let q2 = random_matrix(&mut rng, 8, 8).qr().compute_Q();
            let b = &q1 * &a * &q2;
            let sa = singular_values(&a).unwrap();
            let sb = singular_values(&b).unwrap();
            for (x, y) in sa.iter().zip(&sb) {
                proptest::prop_assert!((x - y).abs() <= 1e-12 * sa[0]);
            }
        }
    }
}
