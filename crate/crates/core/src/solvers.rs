//! Direct-MFS, MFS-QR and MFS-SVD backends.
//!
//! Each backend assembles a collocation matrix, solves it in the least-squares
//! sense and yields a [`Model`] that can be evaluated anywhere in the closed
//! domain. [`solve`] runs the whole pipeline for one method and one `N`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use faer::Mat;
use num_complex::Complex64;

use crate::arnoldi::{arnoldi_vandermonde, build_coupling, ArnoldiFactor};
use crate::error::{MfsError, Result};
use crate::exec::Exec;
use crate::expansion::{phi, truncation_order, ExpansionSetup, DEFAULT_TRUNCATION_TOL};
use crate::geometry::{
    check_source_constraint, compute_r_omega, sample_collocation, sample_sources, BoundaryCurve,
    CollocationSet, Point2, SourceSet,
};
use crate::linalg::{column_vector, cond2, lstsq, svd_thin, DenseMatrix, ZERO};

/// Samples used to locate `R_Omega`.
pub const R_OMEGA_SAMPLES: usize = 4096;

/// Default number of boundary points for the L-infinity error.
pub const DEFAULT_ERROR_SAMPLES: usize = 10001;

const EVAL_CHUNK: usize = 512;

/// Collocation count for the SVD backend: the configured rule, raised to
/// `4p + 2` so that the stacked orthonormal blocks `[Q_Z | Q_W]` stay well
/// conditioned on non-circular boundaries.
pub fn svd_collocation_count(m_rule: usize, p: usize) -> usize {
    m_rule.max(4 * p + 2)
}

/// Dirichlet data catalog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryData {
    /// `x^2 y^3`
    X2Y3,
    /// `cos(10x) sin(10y)`
    Osc10,
    /// `Re((x + iy)^k)`, harmonic in the whole plane.
    Harmonic(u32),
}

impl BoundaryData {
    pub fn eval(&self, x: Point2) -> f64 {
        match *self {
            BoundaryData::X2Y3 => x.x * x.x * x.y * x.y * x.y,
            BoundaryData::Osc10 => (10.0 * x.x).cos() * (10.0 * x.y).sin(),
            BoundaryData::Harmonic(k) => x.to_complex().powu(k).re,
        }
    }

    /// True when the data is the trace of a known harmonic function.
    pub fn is_harmonic(&self) -> bool {
        matches!(self, BoundaryData::Harmonic(_))
    }
}

impl FromStr for BoundaryData {
    type Err = MfsError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "x2y3" => Ok(BoundaryData::X2Y3),
            "osc10" => Ok(BoundaryData::Osc10),
            _ => {
                let k = s
                    .strip_prefix("harmonic_")
                    .and_then(|k| k.parse::<u32>().ok())
                    .ok_or_else(|| MfsError::Config(format!("unknown boundary data `{s}`")))?;
                Ok(BoundaryData::Harmonic(k))
            }
        }
    }
}

impl fmt::Display for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::X2Y3 => write!(f, "x2y3"),
            BoundaryData::Osc10 => write!(f, "osc10"),
            BoundaryData::Harmonic(k) => write!(f, "harmonic_{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Direct,
    Qr,
    Svd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Direct, Method::Qr, Method::Svd];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Qr => "qr",
            Method::Svd => "svd",
        }
    }
}

impl FromStr for Method {
    type Err = MfsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(Method::Direct),
            "qr" => Ok(Method::Qr),
            "svd" => Ok(Method::Svd),
            other => Err(MfsError::Config(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Number of collocation points as a function of `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollocationRule {
    /// `M = k N`
    PerSource(usize),
    /// `M` fixed
    Fixed(usize),
}

impl CollocationRule {
    pub fn count(&self, n: usize) -> usize {
        match *self {
            CollocationRule::PerSource(k) => k * n,
            CollocationRule::Fixed(m) => m,
        }
    }
}

impl Default for CollocationRule {
    fn default() -> Self {
        CollocationRule::PerSource(2)
    }
}

impl FromStr for CollocationRule {
    type Err = MfsError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || MfsError::Config(format!("invalid collocation rule `{s}`"));
        if let Some(k) = s.strip_suffix('N') {
            let k = if k.is_empty() { 1 } else { k.parse().map_err(|_| bad())? };
            if k == 0 {
                return Err(bad());
            }
            return Ok(CollocationRule::PerSource(k));
        }
        match s.parse::<usize>() {
            Ok(m) if m > 0 => Ok(CollocationRule::Fixed(m)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for CollocationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CollocationRule::PerSource(k) => write!(f, "{k}N"),
            CollocationRule::Fixed(m) => write!(f, "{m}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Direct-MFS

/// `A[i, j] = -log|x_i - y_j| / (2 pi)`.
pub fn assemble_direct(sources: &SourceSet, colloc: &CollocationSet, exec: Exec) -> Result<DenseMatrix> {
    let ys = sources.points();
    let xs = colloc.points();
    let rows: Vec<Result<Vec<f64>>> = exec.map_indices(xs.len(), |i| {
        ys.iter()
            .enumerate()
            .map(|(j, &y)| {
                phi(xs[i], y).map_err(|_| {
                    MfsError::Singularity(format!(
                        "collocation point {i} coincides with source {j} at ({}, {})",
                        y.x, y.y
                    ))
                })
            })
            .collect()
    });
    let mut a = Mat::<Complex64>::zeros(xs.len(), ys.len());
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row?.into_iter().enumerate() {
            a[(i, j)] = Complex64::new(v, 0.0);
        }
    }
    Ok(a)
}

pub fn solve_direct(a: &DenseMatrix, g: &[f64]) -> Result<Vec<Complex64>> {
    lstsq(a, &complexify(g))
}

#[derive(Debug, Clone)]
pub struct DirectModel {
    sources: Vec<Point2>,
    coefficients: Vec<Complex64>,
}

impl DirectModel {
    pub fn new(sources: &SourceSet, coefficients: Vec<Complex64>) -> Result<Self> {
        check_len(coefficients.len(), sources.len())?;
        Ok(Self {
            sources: sources.points().to_vec(),
            coefficients,
        })
    }

    fn basis_row(&self, x: Point2, row: &mut [Complex64]) {
        for (r, &y) in row.iter_mut().zip(&self.sources) {
            *r = Complex64::new(phi(x, y).unwrap_or(f64::INFINITY), 0.0);
        }
    }
}

// ---------------------------------------------------------------------------
// MFS-QR

/// Rescaled triangular factor `R~` of the source harmonics, so that
/// `Psi(x) = R~ F_real(x)` spans the same space as the kernels.
#[derive(Debug, Clone)]
pub struct QrBasis {
    rtilde: Mat<f64>,
    p: usize,
}

impl QrBasis {
    /// `N x (2p+1)`
    pub fn rtilde(&self) -> &Mat<f64> {
        &self.rtilde
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.rtilde.nrows()
    }

    fn basis_row(&self, x: Point2, f: &mut [f64], row: &mut [Complex64]) {
        real_harmonics(x, self.p, f);
        for (n, r) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for (c, fc) in f.iter().enumerate() {
                s += self.rtilde[(n, c)] * fc;
            }
            *r = Complex64::new(s, 0.0);
        }
    }
}

/// `[1, r cos t, r sin t, .., r^p cos pt, r^p sin pt]`.
fn real_harmonics(x: Point2, p: usize, out: &mut [f64]) {
    let z = x.to_complex();
    let mut zm = Complex64::new(1.0, 0.0);
    out[0] = 1.0;
    for m in 1..=p {
        zm *= z;
        out[2 * m - 1] = zm.re;
        out[2 * m] = zm.im;
    }
}

/// Scale of harmonic block `m`: `log eps` for `m = 0`, `eps^m / m` otherwise.
fn qr_block_scale(eps: f64, m: usize) -> f64 {
    if m == 0 {
        eps.ln()
    } else {
        eps.powi(m as i32) / m as f64
    }
}

/// Entry `T~[k, c]` of the rescaling matrix (row and column harmonic blocks
/// `(k+1)/2` and `(c+1)/2`).
pub fn qr_rescaling(eps: f64, k: usize, c: usize) -> f64 {
    qr_block_scale(eps, c.div_ceil(2)) / qr_block_scale(eps, k.div_ceil(2))
}

/// Builds `R~` and the `M x N` system matrix `F_real(x_i)^T R~^T`.
pub fn assemble_qr(
    sources: &SourceSet,
    colloc: &CollocationSet,
    p: usize,
    exec: Exec,
) -> Result<(QrBasis, DenseMatrix)> {
    let n = sources.len();
    if 2 * p + 1 <= n {
        return Err(MfsError::Argument(format!(
            "QR basis needs 2p+1 > N, got p = {p}, N = {n}"
        )));
    }
    let r0 = 1.0 / sources.eps()[0];
    for (j, &e) in sources.eps().iter().enumerate() {
        if (1.0 / e - r0).abs() > 1e-10 * r0 {
            return Err(MfsError::Unsupported(format!(
                "QR backend needs sources on one origin-centred circle; source {j} has radius {} vs {r0}",
                1.0 / e
            )));
        }
    }
    let eps = 1.0 / r0;
    if eps.ln().abs() < 1e-12 {
        return Err(MfsError::Unsupported(
            "QR backend cannot rescale a unit source circle".into(),
        ));
    }

    let cols = 2 * p + 1;
    let b = Mat::<f64>::from_fn(n, cols, |j, c| {
        let alpha = sources.alpha()[j];
        if c == 0 {
            -1.0
        } else {
            let m = c.div_ceil(2) as f64;
            if c % 2 == 1 {
                -(m * alpha).cos()
            } else {
                -(m * alpha).sin()
            }
        }
    });
    let r = b.qr().thin_R().to_owned();
    let rtilde = Mat::<f64>::from_fn(n, cols, |k, c| {
        if c < k {
            0.0
        } else {
            qr_rescaling(eps, k, c) * r[(k, c)]
        }
    });
    if rtilde.col_iter().any(|col| col.iter().any(|v| !v.is_finite())) {
        return Err(MfsError::Linalg("rescaled QR factor is not finite".into()));
    }
    let basis = QrBasis { rtilde, p };

    let xs = colloc.points();
    let a = basis_matrix(xs, n, exec, |x, row| {
        let mut f = vec![0.0; cols];
        basis.basis_row(x, &mut f, row);
    });
    Ok((basis, a))
}

#[derive(Debug, Clone)]
pub struct QrModel {
    basis: QrBasis,
    coefficients: Vec<Complex64>,
    /// `R~^T c`
    combined: Vec<Complex64>,
}

impl QrModel {
    pub fn new(basis: QrBasis, coefficients: Vec<Complex64>) -> Result<Self> {
        check_len(coefficients.len(), basis.n())?;
        let cols = basis.rtilde.ncols();
        let combined = (0..cols)
            .map(|c| {
                coefficients
                    .iter()
                    .enumerate()
                    .map(|(n, cn)| cn * basis.rtilde[(n, c)])
                    .sum()
            })
            .collect();
        Ok(Self {
            basis,
            coefficients,
            combined,
        })
    }

    pub fn basis(&self) -> &QrBasis {
        &self.basis
    }
}

// ---------------------------------------------------------------------------
// MFS-SVD

/// Well-conditioned basis `phi(x) = V1h J(x)`, where `J = [q_Z; q_W,1..p]`
/// stacks the Arnoldi bases in `z = x / R_Omega` and `w = conj(z)`. The
/// constant `q_W,0` coincides with `q_Z,0` and is kept only once.
#[derive(Debug, Clone)]
pub struct SvdBasis {
    v1h: DenseMatrix,
    s1: Vec<f64>,
    zfac: ArnoldiFactor,
    wfac: ArnoldiFactor,
    r_omega: f64,
    n: usize,
    p: usize,
    colloc: Vec<Point2>,
}

impl SvdBasis {
    /// `N x (2p+1)` with orthonormal rows.
    pub fn v1h(&self) -> &DenseMatrix {
        &self.v1h
    }

    /// Singular values of `M K`, nonincreasing.
    pub fn s1(&self) -> &[f64] {
        &self.s1
    }

    pub fn zfac(&self) -> &ArnoldiFactor {
        &self.zfac
    }

    pub fn wfac(&self) -> &ArnoldiFactor {
        &self.wfac
    }

    pub fn r_omega(&self) -> f64 {
        self.r_omega
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    /// `J'` rows `[q_Z(z), q_W,1..p(w)]` at `points`, `points x (2p+1)`.
    pub fn j_matrix(&self, points: &[Point2]) -> Result<DenseMatrix> {
        let z: Vec<Complex64> = points.iter().map(|x| x.to_complex() / self.r_omega).collect();
        let w: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
        let qz = self.zfac.eval(&z)?;
        let qw = self.wfac.eval(&w)?;
        let p = self.p;
        Ok(Mat::from_fn(points.len(), 2 * p + 1, |i, c| {
            if c <= p {
                qz[(i, c)]
            } else {
                qw[(i, c - p)]
            }
        }))
    }

    /// `phi_n(x_i)`, `points x N`.
    pub fn eval_basis(&self, points: &[Point2]) -> Result<DenseMatrix> {
        Ok(self.j_matrix(points)? * self.v1h.transpose())
    }
}

/// Rejects setups whose sources coincide: their expansion rows agree in the
/// constant and first-harmonic columns.
fn check_distinct_rows(setup: &ExpansionSetup) -> Result<()> {
    let m = &setup.matrix;
    let n = m.nrows();
    let keys: Vec<(f64, Complex64)> = (0..n)
        .map(|j| (m[(j, 0)].re, if setup.p >= 1 { m[(j, 1)] } else { ZERO }))
        .collect();
    for a in 0..n {
        for b in a + 1..n {
            let d0 = (keys[a].0 - keys[b].0).abs();
            let d1 = (keys[a].1 - keys[b].1).norm();
            let s = 1.0 + keys[a].0.abs() + keys[a].1.norm();
            if d0 <= 1e-13 * s && d1 <= 1e-13 * s {
                return Err(MfsError::RankDeficient(format!(
                    "sources {a} and {b} coincide; the expansion rows are redundant"
                )));
            }
        }
    }
    Ok(())
}

pub fn build_svd_basis(setup: &ExpansionSetup, colloc: &CollocationSet, exec: Exec) -> Result<SvdBasis> {
    let n = setup.n_sources();
    let p = setup.p;
    if 2 * p + 1 < n {
        return Err(MfsError::Argument(format!(
            "expansion degree {p} too small for {n} sources"
        )));
    }
    check_distinct_rows(setup)?;
    let z: Vec<Complex64> = colloc
        .points()
        .iter()
        .map(|x| x.to_complex() / setup.r_omega)
        .collect();
    let w: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
    let (zfac, wfac) = exec.join(|| arnoldi_vandermonde(&z, p), || arnoldi_vandermonde(&w, p));
    let (zfac, wfac) = (zfac?, wfac?);
    let k = build_coupling(&zfac, &wfac)?;
    let m1 = &setup.matrix * k.reduced();
    let svd = svd_thin(&m1)?;
    let s1 = svd.s;
    if !(s1[0] > 0.0 && s1.iter().all(|s| s.is_finite())) {
        return Err(MfsError::RankDeficient(format!(
            "expansion matrix has no usable singular values (largest {:.3e})",
            s1[0]
        )));
    }
    Ok(SvdBasis {
        v1h: svd.vh,
        s1,
        zfac,
        wfac,
        r_omega: setup.r_omega,
        n,
        p,
        colloc: colloc.points().to_vec(),
    })
}

/// `A = [Q_Z | Q_W,1..p] V1h^T`, `M x N`.
pub fn assemble_svd_system(basis: &SvdBasis, colloc: &CollocationSet) -> Result<DenseMatrix> {
    if colloc.points() != basis.colloc.as_slice() {
        return Err(MfsError::Argument(
            "collocation set differs from the one used to build the basis".into(),
        ));
    }
    let (qz, qw) = (basis.zfac.q(), basis.wfac.q());
    let m = qz.nrows();
    let p = basis.p;
    let j = Mat::<Complex64>::from_fn(m, 2 * p + 1, |i, c| {
        if c <= p {
            qz[(i, c)]
        } else {
            qw[(i, c - p)]
        }
    });
    Ok(&j * basis.v1h.transpose())
}

pub fn solve_svd(basis: &SvdBasis, a: &DenseMatrix, g: &[f64]) -> Result<Vec<Complex64>> {
    if a.ncols() != basis.n || a.nrows() != g.len() {
        return Err(MfsError::Shape(format!(
            "system is {}x{} for {} sources and {} data values",
            a.nrows(),
            a.ncols(),
            basis.n,
            g.len()
        )));
    }
    lstsq(a, &complexify(g))
}

#[derive(Debug, Clone)]
pub struct SvdModel {
    basis: SvdBasis,
    coefficients: Vec<Complex64>,
    /// `V1h^T c`
    combined: DenseMatrix,
}

impl SvdModel {
    pub fn new(basis: SvdBasis, coefficients: Vec<Complex64>) -> Result<Self> {
        check_len(coefficients.len(), basis.n)?;
        let combined = basis.v1h.transpose() * column_vector(&coefficients);
        Ok(Self {
            basis,
            coefficients,
            combined,
        })
    }

    pub fn basis(&self) -> &SvdBasis {
        &self.basis
    }
}

// ---------------------------------------------------------------------------
// Evaluation

/// A solved approximation `u_N`.
#[derive(Debug, Clone)]
pub enum Model {
    Direct(DirectModel),
    Qr(QrModel),
    Svd(SvdModel),
}

impl Model {
    pub fn method(&self) -> Method {
        match self {
            Model::Direct(_) => Method::Direct,
            Model::Qr(_) => Method::Qr,
            Model::Svd(_) => Method::Svd,
        }
    }

    pub fn coefficients(&self) -> &[Complex64] {
        match self {
            Model::Direct(m) => &m.coefficients,
            Model::Qr(m) => &m.coefficients,
            Model::Svd(m) => &m.coefficients,
        }
    }

    pub fn n(&self) -> usize {
        self.coefficients().len()
    }

    /// Complex value of `sum_n c_n b_n(x)`; the real part is the solution.
    pub fn evaluate_complex(&self, points: &[Point2]) -> Vec<Complex64> {
        match self {
            Model::Direct(m) => points
                .iter()
                .map(|&x| {
                    m.sources
                        .iter()
                        .zip(&m.coefficients)
                        .map(|(&y, c)| c * phi(x, y).unwrap_or(f64::INFINITY))
                        .sum()
                })
                .collect(),
            Model::Qr(m) => {
                let mut f = vec![0.0; m.combined.len()];
                points
                    .iter()
                    .map(|&x| {
                        real_harmonics(x, m.basis.p, &mut f);
                        f.iter().zip(&m.combined).map(|(fc, dc)| dc * fc).sum()
                    })
                    .collect()
            }
            Model::Svd(m) => match m.basis.j_matrix(points) {
                Ok(j) => {
                    let v = j * &m.combined;
                    (0..points.len()).map(|i| v[(i, 0)]).collect()
                }
                Err(_) => vec![Complex64::new(f64::NAN, f64::NAN); points.len()],
            },
        }
    }

    /// Values of every basis function at `points`, `points x N`.
    pub fn basis_values(&self, points: &[Point2], exec: Exec) -> DenseMatrix {
        let n = self.n();
        match self {
            Model::Direct(m) => basis_matrix(points, n, exec, |x, row| m.basis_row(x, row)),
            Model::Qr(m) => basis_matrix(points, n, exec, |x, row| {
                let mut f = vec![0.0; m.combined.len()];
                m.basis.basis_row(x, &mut f, row);
            }),
            Model::Svd(m) => {
                let chunks: Vec<&[Point2]> = points.chunks(EVAL_CHUNK).collect();
                let blocks = exec.map(&chunks, |c| {
                    m.basis.eval_basis(c).unwrap_or_else(|_| {
                        Mat::from_fn(c.len(), n, |_, _| Complex64::new(f64::NAN, f64::NAN))
                    })
                });
                let mut out = Mat::<Complex64>::zeros(points.len(), n);
                for (b, block) in blocks.iter().enumerate() {
                    out.subrows_mut(b * EVAL_CHUNK, block.nrows()).copy_from(block);
                }
                out
            }
        }
    }
}

/// `u_N(x)`, the real part of the (possibly complex) expansion.
pub fn evaluate_solution(model: &Model, x: Point2) -> f64 {
    model.evaluate_complex(&[x])[0].re
}

fn basis_matrix<F>(points: &[Point2], n: usize, exec: Exec, row_fn: F) -> DenseMatrix
where
    F: Fn(Point2, &mut [Complex64]) + Sync + Send,
{
    let mut flat = vec![ZERO; points.len() * n];
    exec.for_each_chunk_mut(&mut flat, EVAL_CHUNK * n.max(1), |off, chunk| {
        let first = off / n.max(1);
        for (k, row) in chunk.chunks_mut(n.max(1)).enumerate() {
            row_fn(points[first + k], row);
        }
    });
    Mat::from_fn(points.len(), n, |i, j| flat[i * n + j])
}

/// Sup-norm error of a model on the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryErrorReport {
    /// `max |Re u - g|`
    pub linf: f64,
    /// `max |Im u|`
    pub max_imag: f64,
    /// `max |g|`
    pub data_max: f64,
}

/// Evaluates at `t_i = 2 pi i / samples`, `i = 0..samples`.
pub fn boundary_error<G>(model: &Model, curve: &BoundaryCurve, g: G, samples: usize, exec: Exec) -> Result<BoundaryErrorReport>
where
    G: Fn(Point2) -> f64 + Sync + Send,
{
    if samples == 0 {
        return Err(MfsError::Argument("boundary error needs at least one sample".into()));
    }
    let chunks = samples.div_ceil(EVAL_CHUNK);
    let parts = exec.map_indices(chunks, |c| {
        let lo = c * EVAL_CHUNK;
        let hi = (lo + EVAL_CHUNK).min(samples);
        let pts: Vec<Point2> = (lo..hi)
            .map(|i| curve.point(TAU * i as f64 / samples as f64))
            .collect();
        let vals = model.evaluate_complex(&pts);
        let mut acc = [0.0f64; 3];
        for (x, v) in pts.iter().zip(vals) {
            let gx = g(*x);
            acc[0] = nan_max(acc[0], (v.re - gx).abs());
            acc[1] = nan_max(acc[1], v.im.abs());
            acc[2] = nan_max(acc[2], gx.abs());
        }
        acc
    });
    let acc = parts.into_iter().fold([0.0f64; 3], |a, b| {
        [nan_max(a[0], b[0]), nan_max(a[1], b[1]), nan_max(a[2], b[2])]
    });
    Ok(BoundaryErrorReport {
        linf: acc[0],
        max_imag: acc[1],
        data_max: acc[2],
    })
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn complexify(g: &[f64]) -> Vec<Complex64> {
    g.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

fn check_len(got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(MfsError::Shape(format!(
            "{got} coefficients for {want} basis functions"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Pipeline

/// Geometry, data and discretization shared by every solve of an experiment.
#[derive(Debug, Clone)]
pub struct Problem {
    pub domain: BoundaryCurve,
    pub sources: BoundaryCurve,
    pub data: BoundaryData,
    pub collocation: CollocationRule,
    pub tol: f64,
    pub error_samples: usize,
}

impl Problem {
    pub fn new(domain: BoundaryCurve, sources: BoundaryCurve, data: BoundaryData) -> Self {
        Self {
            domain,
            sources,
            data,
            collocation: CollocationRule::default(),
            tol: DEFAULT_TRUNCATION_TOL,
            error_samples: DEFAULT_ERROR_SAMPLES,
        }
    }

    pub fn r_omega(&self) -> Result<f64> {
        compute_r_omega(&self.domain, R_OMEGA_SAMPLES)
    }
}

#[derive(Debug, Clone)]
pub struct SolveRecord {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    /// Expansion degree; 0 for Direct-MFS.
    pub p: usize,
    pub coefficients: Vec<Complex64>,
    pub cond2: f64,
    pub linf_boundary_error: f64,
    pub max_imag_on_boundary: f64,
    pub runtime_ms: f64,
    /// `1 - max_j eps_j R_Omega`
    pub constraint_margin: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub record: SolveRecord,
    pub model: Model,
    pub collocation: CollocationSet,
    pub system: DenseMatrix,
}

/// Expansion degree used by the QR backend: the truncation rule, raised if
/// needed so that `2p + 1 > N`.
pub fn qr_degree(q: f64, tol: f64, n: usize) -> Result<usize> {
    let p0 = truncation_order(q, tol)?;
    Ok(p0.max(n.div_ceil(2)))
}

/// Assembles and solves one configuration, then measures conditioning and
/// the boundary error.
pub fn solve(problem: &Problem, method: Method, n: usize, exec: Exec) -> Result<Solution> {
    if n == 0 {
        return Err(MfsError::Argument("number of sources must be positive".into()));
    }
    let sources = sample_sources(&problem.sources, n)?;
    let r_omega = problem.r_omega()?;
    let margin = check_source_constraint(&sources, r_omega).margin;
    let m_rule = problem.collocation.count(n);
    if m_rule < n {
        return Err(MfsError::Config(format!(
            "collocation rule gives M = {m_rule} < N = {n}"
        )));
    }

    let start = Instant::now();
    let (colloc, system, model, p) = match method {
        Method::Direct => {
            let colloc = sample_collocation(&problem.domain, m_rule)?;
            let g = data_at(problem, &colloc);
            let a = assemble_direct(&sources, &colloc, exec)?;
            let c = solve_direct(&a, &g)?;
            (colloc, a, Model::Direct(DirectModel::new(&sources, c)?), 0)
        }
        Method::Qr => {
            if margin <= 0.0 {
                return Err(MfsError::ConstraintViolation { margin });
            }
            let p = qr_degree(sources.max_eps() * r_omega, problem.tol, n)?;
            let colloc = sample_collocation(&problem.domain, m_rule)?;
            let g = data_at(problem, &colloc);
            let (basis, a) = assemble_qr(&sources, &colloc, p, exec)?;
            let c = lstsq(&a, &complexify(&g))?;
            (colloc, a, Model::Qr(QrModel::new(basis, c)?), p)
        }
        Method::Svd => {
            let setup = ExpansionSetup::new(&sources, r_omega, problem.tol)?;
            let m = svd_collocation_count(m_rule, setup.p);
            let colloc = sample_collocation(&problem.domain, m)?;
            let g = data_at(problem, &colloc);
            let basis = build_svd_basis(&setup, &colloc, exec)?;
            let a = assemble_svd_system(&basis, &colloc)?;
            let c = solve_svd(&basis, &a, &g)?;
            let p = setup.p;
            (colloc, a, Model::Svd(SvdModel::new(basis, c)?), p)
        }
    };
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;

    let cond = cond2(&system)?;
    let data = problem.data;
    let report = boundary_error(&model, &problem.domain, |x| data.eval(x), problem.error_samples, exec)?;
    Ok(Solution {
        record: SolveRecord {
            method,
            n,
            m: colloc.len(),
            p,
            coefficients: model.coefficients().to_vec(),
            cond2: cond,
            linf_boundary_error: report.linf,
            max_imag_on_boundary: report.max_imag,
            runtime_ms,
            constraint_margin: margin,
        },
        model,
        collocation: colloc,
        system,
    })
}

fn data_at(problem: &Problem, colloc: &CollocationSet) -> Vec<f64> {
    colloc.points().iter().map(|&x| problem.data.eval(x)).collect()
}
