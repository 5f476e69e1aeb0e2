//! Expansion of the logarithmic kernels in scaled harmonic monomials.
//!
//! For a source with polar form `(1/eps, alpha)` and a point `(r, theta)` with
//! `r <= R_Omega`,
//!
//! ```text
//! log|x - y| = -log(eps) - sum_{m>=1} (eps R_Omega)^m (z^m e^{-i m alpha} + w^m e^{i m alpha}) / (2m)
//! ```
//!
//! with `z = (r / R_Omega) e^{i theta}` and `w = conj(z)`. Truncating at
//! degree `p` gives `psi(x) = M F(x)` where `F = [1, z, .., z^p, w, .., w^p]`.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{MfsError, Result};
use crate::geometry::{check_source_constraint, Point2, SourceSet};
use crate::linalg::DenseMatrix;

/// Default truncation tolerance: binary64 machine epsilon.
pub const DEFAULT_TRUNCATION_TOL: f64 = f64::EPSILON;

/// `log|x - y|`.
pub fn log_kernel(x: Point2, y: Point2) -> Result<f64> {
    let d = x.distance(&y);
    if d == 0.0 {
        return Err(MfsError::Singularity(format!(
            "kernel evaluated at coincident points {x:?}"
        )));
    }
    Ok(d.ln())
}

/// Fundamental solution `-log|x - y| / (2 pi)` of `-Laplace`.
pub fn phi(x: Point2, y: Point2) -> Result<f64> {
    Ok(-log_kernel(x, y)? / (2.0 * PI))
}

/// Hurwitz-Lerch transcendent at `s = 1`: `sum_{k>=0} z^k / (a + k)`.
///
/// Terms are accumulated with compensated summation until the next term falls
/// below `1e-18` of the partial sum.
pub fn hurwitz_lerch_phi1(z: f64, a: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(MfsError::Domain(format!(
            "Hurwitz-Lerch series needs 0 <= z < 1, got {z}"
        )));
    }
    if a == 0 {
        return Err(MfsError::Argument("Hurwitz-Lerch offset must be >= 1".into()));
    }
    let a = a as f64;
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut zk = 1.0f64;
    let mut k = 0.0f64;
    loop {
        let term = zk / (a + k);
        // Neumaier summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        zk *= z;
        k += 1.0;
        if zk / (a + k) < 1e-18 * (sum + comp) {
            break;
        }
    }
    Ok(sum + comp)
}

/// Tail bound `q^{p+1} Phi(q, 1, p+1)` of the truncated expansion.
pub fn truncation_residual_bound(q: f64, p: usize) -> Result<f64> {
    Ok(q.powi(p as i32 + 1) * hurwitz_lerch_phi1(q, p as u32 + 1)?)
}

/// Smallest `p0 >= 0` with `q^{p0+1} Phi(q, 1, p0+1) <= tol`.
pub fn truncation_order(q: f64, tol: f64) -> Result<usize> {
    if q >= 1.0 {
        return Err(MfsError::ConstraintViolation { margin: 1.0 - q });
    }
    if !(q > 0.0) {
        return Err(MfsError::Argument(format!("truncation ratio must be positive, got {q}")));
    }
    if !(tol > 0.0) {
        return Err(MfsError::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let mut p0 = 0usize;
    while truncation_residual_bound(q, p0)? > tol {
        p0 += 1;
    }
    Ok(p0)
}

/// `p = max(p0, ceil((N - 1) / 2))`, so that `2p + 1 >= N`.
pub fn expansion_degree(p0: usize, n: usize) -> usize {
    p0.max(n.saturating_sub(1).div_ceil(2))
}

/// Scaled monomial vector `F(x) = [1, z, .., z^p, w, .., w^p]`.
pub fn monomial_vector(x: Point2, r_omega: f64, p: usize) -> Vec<Complex64> {
    let z = x.to_complex() / r_omega;
    let w = z.conj();
    let mut f = Vec::with_capacity(2 * p + 1);
    f.push(Complex64::new(1.0, 0.0));
    let mut zm = Complex64::new(1.0, 0.0);
    for _ in 0..p {
        zm *= z;
        f.push(zm);
    }
    let mut wm = Complex64::new(1.0, 0.0);
    for _ in 0..p {
        wm *= w;
        f.push(wm);
    }
    f
}

/// Truncated expansion `psi = M F` of a source set.
#[derive(Debug, Clone)]
pub struct ExpansionSetup {
    pub r_omega: f64,
    /// `max_j eps_j R_Omega`
    pub q: f64,
    pub p0: usize,
    pub p: usize,
    /// `N x (2p + 1)`
    pub matrix: DenseMatrix,
}

impl ExpansionSetup {
    /// Picks `p0` from the residual rule at tolerance `tol`, then
    /// `p = max(p0, ceil((N-1)/2))`, and builds `M`.
    pub fn new(sources: &SourceSet, r_omega: f64, tol: f64) -> Result<Self> {
        let check = check_source_constraint(sources, r_omega);
        if !check.ok {
            return Err(MfsError::ConstraintViolation {
                margin: check.margin,
            });
        }
        let q = sources.max_eps() * r_omega;
        let p0 = truncation_order(q, tol)?;
        let p = expansion_degree(p0, sources.len());
        let mut setup = build_m(sources, r_omega, p)?;
        setup.p0 = p0;
        Ok(setup)
    }

    pub fn n_sources(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn residual_bound(&self) -> Result<f64> {
        truncation_residual_bound(self.q, self.p)
    }

    /// `(M F(x))_j`, the truncated expansion of every kernel at `x`.
    pub fn reconstruct(&self, x: Point2) -> Vec<Complex64> {
        let f = monomial_vector(x, self.r_omega, self.p);
        (0..self.matrix.nrows())
            .map(|j| (0..f.len()).map(|c| self.matrix[(j, c)] * f[c]).sum())
            .collect()
    }
}

/// Builds the `N x (2p + 1)` expansion matrix for a given degree `p`.
pub fn build_m(sources: &SourceSet, r_omega: f64, p: usize) -> Result<ExpansionSetup> {
    if !(r_omega > 0.0 && r_omega.is_finite()) {
        return Err(MfsError::Argument(format!("R_Omega must be positive, got {r_omega}")));
    }
    let check = check_source_constraint(sources, r_omega);
    if !check.ok {
        return Err(MfsError::ConstraintViolation {
            margin: check.margin,
        });
    }
    let n = sources.len();
    let mut m = Mat::<Complex64>::zeros(n, 2 * p + 1);
    for (j, (&eps, &alpha)) in sources.eps().iter().zip(sources.alpha()).enumerate() {
        m[(j, 0)] = Complex64::new(-eps.ln(), 0.0);
        let ratio = eps * r_omega;
        let mut scale = 1.0;
        for k in 1..=p {
            scale *= ratio;
            let c = -scale / (2.0 * k as f64);
            let phase = Complex64::from_polar(1.0, -(k as f64) * alpha);
            m[(j, k)] = phase * c;
            m[(j, p + k)] = phase.conj() * c;
        }
    }
    Ok(ExpansionSetup {
        r_omega,
        q: sources.max_eps() * r_omega,
        p0: 0,
        p,
        matrix: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compute_r_omega, sample_collocation, sample_sources, BoundaryCurve};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    #[test]
    fn kernel_values() {
        let o = Point2::ORIGIN;
        assert_eq!(log_kernel(o, Point2::new(1.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(log_kernel(o, Point2::new(E, 0.0)).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            phi(o, Point2::new(0.0, E)).unwrap(),
            -1.0 / (2.0 * PI),
            epsilon = 1e-15
        );
        // ln 5 to 40 digits: 1.609437912434100374600759333226187639526
        assert_abs_diff_eq!(
            log_kernel(o, Point2::new(3.0, 4.0)).unwrap(),
            1.609_437_912_434_100_4,
            epsilon = 1e-15
        );
        assert!(matches!(log_kernel(o, o), Err(MfsError::Singularity(_))));
    }

    #[test]
    fn hurwitz_lerch_values() {
        for a in [1, 2, 7, 40] {
            assert_eq!(hurwitz_lerch_phi1(0.0, a).unwrap(), 1.0 / a as f64);
        }
        // 2 ln 2 to 40 digits: 1.386294361119890618834464242916353136151
        assert_abs_diff_eq!(
            hurwitz_lerch_phi1(0.5, 1).unwrap(),
            1.386_294_361_119_890_6,
            epsilon = 1e-15
        );
        let vals: Vec<f64> = (1..=50).map(|a| hurwitz_lerch_phi1(0.5, a).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(matches!(hurwitz_lerch_phi1(1.0, 1), Err(MfsError::Domain(_))));
        assert!(matches!(hurwitz_lerch_phi1(-0.1, 1), Err(MfsError::Domain(_))));
    }

    #[test]
    fn truncation_orders() {
        let p_half = truncation_order(0.5, 1e-16).unwrap();
        assert!(truncation_residual_bound(0.5, p_half).unwrap() <= 1e-16);
        assert!(truncation_residual_bound(0.5, p_half - 1).unwrap() > 1e-16);
        let p_tenth = truncation_order(0.1, 1e-16).unwrap();
        assert!(p_tenth < p_half);
        assert_eq!(truncation_order(0.3, 10.0).unwrap(), 0);
        assert_eq!(truncation_order(0.999, 10.0).unwrap(), 0);
        assert!(matches!(
            truncation_order(1.0, 1e-16),
            Err(MfsError::ConstraintViolation { .. })
        ));
    }

    #[test]
    fn degrees() {
        assert_eq!(expansion_degree(40, 100), 50);
        assert_eq!(expansion_degree(80, 100), 80);
        assert_eq!(expansion_degree(0, 1), 0);
        for n in 1..50 {
            for p0 in 0..30 {
                assert!(2 * expansion_degree(p0, n) + 1 >= n);
            }
        }
    }

    #[test]
    fn single_source_row() {
        let s = SourceSet::from_points(vec![Point2::new(2.0, 0.0)]).unwrap();
        let setup = build_m(&s, 1.0, 1).unwrap();
        let row: Vec<Complex64> = (0..3).map(|c| setup.matrix[(0, c)]).collect();
        assert_abs_diff_eq!(row[0].re, 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(row[1].re, -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(row[2].re, -0.25, epsilon = 1e-15);
        assert!(row.iter().all(|z| z.im.abs() < 1e-16));
    }

    #[test]
    fn rejects_constraint_violation() {
        let s = SourceSet::from_points(vec![Point2::new(0.9, 0.0)]).unwrap();
        assert!(matches!(
            build_m(&s, 1.0, 3),
            Err(MfsError::ConstraintViolation { .. })
        ));
    }

    #[test]
    fn origin_reproduces_column_zero() {
        let curve = BoundaryCurve::parse("osc_art").unwrap();
        let s = sample_sources(&curve, 12).unwrap();
        let setup = ExpansionSetup::new(&s, 1.4, DEFAULT_TRUNCATION_TOL).unwrap();
        let v = setup.reconstruct(Point2::ORIGIN);
        for (j, z) in v.iter().enumerate() {
            assert_eq!(*z, setup.matrix[(j, 0)]);
            assert_eq!(z.re, -s.eps()[j].ln());
        }
    }

    #[test]
    fn conjugate_symmetry_of_blocks() {
        let s = sample_sources(&BoundaryCurve::gamma_blob(), 17).unwrap();
        let setup = ExpansionSetup::new(&s, 1.0, DEFAULT_TRUNCATION_TOL).unwrap();
        let p = setup.p;
        for j in 0..17 {
            for m in 1..=p {
                assert_eq!(setup.matrix[(j, m)], setup.matrix[(j, p + m)].conj());
            }
        }
    }

    #[test]
    fn reconstruction_matches_direct_kernels() {
        let domain = BoundaryCurve::star_kite();
        let r_omega = compute_r_omega(&domain, 4096).unwrap();
        let s = sample_sources(&BoundaryCurve::circle(2.0), 40).unwrap();
        let setup = ExpansionSetup::new(&s, r_omega, DEFAULT_TRUNCATION_TOL).unwrap();
        let bound = setup.residual_bound().unwrap();
        let colloc = sample_collocation(&domain, 97).unwrap();
        for x in colloc.points() {
            let approx = setup.reconstruct(*x);
            for (j, y) in s.points().iter().enumerate() {
                let exact = log_kernel(*x, *y).unwrap();
                let err = (approx[j] - exact).norm();
                assert!(err <= 1e-12 * exact.abs().max(1.0), "err {err}");
                assert!(err <= bound.max(1e-14), "err {err} bound {bound}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn hurwitz_lerch_geometric_bounds(z in 0.001f64..0.99, a in 1u32..200) {
            let v = hurwitz_lerch_phi1(z, a).unwrap();
            let a = a as f64;
            proptest::prop_assert!(v > 1.0 / a);
            proptest::prop_assert!(v <= (1.0 / (a * (1.0 - z))) * (1.0 + 1e-15));
        }
    }
}
