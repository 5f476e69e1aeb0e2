//! Experiment runner: configuration files, N sweeps, CSV tables, growth-rate
//! fits and basis-function dumps.
//!
//! Configuration is flat `key = value` text grouped under section headers:
//!
//! ```text
//! [domain]
//! curve = star_kite
//! [sources]
//! curve = circle(2)
//! [data]
//! g = x2y3
//! [run]
//! methods = direct, qr, svd
//! n = 50:500:50
//! ```
//!
//! Unknown sections or keys are rejected.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{MfsError, Result};
use crate::exec::Exec;
use crate::geometry::{BoundaryCurve, Point2};
use crate::solvers::{
    solve, BoundaryData, CollocationRule, Method, Model, Problem, SolveRecord,
    DEFAULT_ERROR_SAMPLES,
};

/// Fixed CSV header of a sweep table.
pub const CSV_HEADER: [&str; 9] = [
    "method",
    "N",
    "M",
    "p",
    "cond2",
    "linf_error",
    "max_imag",
    "runtime_ms",
    "constraint_margin",
];

/// Rows with `cond2` at or above this are treated as saturated by the fit.
pub const SATURATION: f64 = 1e15;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub domain: BoundaryCurve,
    pub sources: BoundaryCurve,
    pub data: BoundaryData,
    pub methods: Vec<Method>,
    pub n_values: Vec<usize>,
    pub collocation: CollocationRule,
    pub tol: f64,
    pub error_samples: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// When false, `runtime_ms` is written as 0 so reruns are byte-identical.
    pub timing: bool,
}

const SECTIONS: [(&str, &[&str]); 4] = [
    ("domain", &["curve"]),
    ("sources", &["curve"]),
    ("data", &["g"]),
    (
        "run",
        &["methods", "n", "m", "tol", "error_samples", "seed", "output", "timing"],
    ),
];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        text.parse()
    }

    pub fn problem(&self) -> Problem {
        Problem {
            domain: self.domain.clone(),
            sources: self.sources.clone(),
            data: self.data,
            collocation: self.collocation,
            tol: self.tol,
            error_samples: self.error_samples,
        }
    }
}

impl FromStr for ExperimentConfig {
    type Err = MfsError;

    fn from_str(text: &str) -> Result<Self> {
        let mut values: BTreeMap<(String, String), String> = BTreeMap::new();
        let mut section: Option<&str> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let at = |msg: String| MfsError::Config(format!("line {}: {msg}", lineno + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .find(|(s, _)| *s == name)
                        .map(|(s, _)| *s)
                        .ok_or_else(|| at(format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let sec = section.ok_or_else(|| at("key outside of any section".into()))?;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let allowed = SECTIONS.iter().find(|(s, _)| *s == sec).unwrap().1;
            if !allowed.contains(&key) {
                return Err(at(format!("unknown key `{key}` in [{sec}]")));
            }
            if value.is_empty() {
                return Err(at(format!("empty value for `{key}`")));
            }
            if values
                .insert((sec.to_string(), key.to_string()), value.to_string())
                .is_some()
            {
                return Err(at(format!("duplicate key `{key}` in [{sec}]")));
            }
        }

        let get = |s: &str, k: &str| values.get(&(s.to_string(), k.to_string())).map(String::as_str);
        let require = |s: &str, k: &str| {
            get(s, k).ok_or_else(|| MfsError::Config(format!("missing `{k}` in [{s}]")))
        };

        let domain = BoundaryCurve::parse(require("domain", "curve")?)?;
        let sources = BoundaryCurve::parse(require("sources", "curve")?)?;
        let data: BoundaryData = require("data", "g")?.parse()?;
        let methods = parse_methods(require("run", "methods")?)?;
        let n_values = parse_n_values(require("run", "n")?)?;
        let collocation = match get("run", "m") {
            Some(v) => v.parse()?,
            None => CollocationRule::default(),
        };
        let tol = match get("run", "tol") {
            Some(v) => parse_num::<f64>("tol", v)?,
            None => crate::expansion::DEFAULT_TRUNCATION_TOL,
        };
        if !(tol > 0.0 && tol < 1.0) {
            return Err(MfsError::Config(format!("tol must lie in (0, 1), got {tol}")));
        }
        let error_samples = match get("run", "error_samples") {
            Some(v) => parse_num::<usize>("error_samples", v)?,
            None => DEFAULT_ERROR_SAMPLES,
        };
        if error_samples == 0 {
            return Err(MfsError::Config("error_samples must be positive".into()));
        }
        let seed = match get("run", "seed") {
            Some(v) => parse_num::<u64>("seed", v)?,
            None => 0,
        };
        let timing = match get("run", "timing") {
            Some("true") | None => true,
            Some("false") => false,
            Some(v) => return Err(MfsError::Config(format!("timing must be true or false, got `{v}`"))),
        };
        Ok(Self {
            domain,
            sources,
            data,
            methods,
            n_values,
            collocation,
            tol,
            error_samples,
            seed,
            output: get("run", "output").map(PathBuf::from),
            timing,
        })
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| MfsError::Config(format!("invalid value `{v}` for `{key}`")))
}

fn parse_methods(v: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for part in v.split(',') {
        let m: Method = part.parse()?;
        if methods.contains(&m) {
            return Err(MfsError::Config(format!("method `{m}` listed twice")));
        }
        methods.push(m);
    }
    Ok(methods)
}

/// `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_n_values(v: &str) -> Result<Vec<usize>> {
    let values: Vec<usize> = if v.contains(':') {
        let parts: Vec<usize> = v
            .split(':')
            .map(|p| parse_num::<usize>("n", p.trim()))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(MfsError::Config(format!("range `{v}` must be start:stop:step")));
        };
        if step == 0 || stop < start {
            return Err(MfsError::Config(format!("empty or invalid range `{v}`")));
        }
        (start..=stop).step_by(step).collect()
    } else {
        v.split(',')
            .map(|p| parse_num::<usize>("n", p.trim()))
            .collect::<Result<_>>()?
    };
    if values.first() == Some(&0) {
        return Err(MfsError::Config("N values must be positive".into()));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MfsError::Config(format!("N values must be strictly ascending: `{v}`")));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub cond2: f64,
    pub linf_error: f64,
    pub max_imag: f64,
    pub runtime_ms: f64,
    pub constraint_margin: f64,
}

impl SweepRow {
    pub fn from_record(r: &SolveRecord) -> Self {
        Self {
            method: r.method,
            n: r.n,
            m: r.m,
            p: r.p,
            cond2: r.cond2,
            linf_error: r.linf_boundary_error,
            max_imag: r.max_imag_on_boundary,
            runtime_ms: r.runtime_ms,
            constraint_margin: r.constraint_margin,
        }
    }

    fn fields(&self) -> [String; 9] {
        [
            self.method.to_string(),
            self.n.to_string(),
            self.m.to_string(),
            self.p.to_string(),
            format!("{:e}", self.cond2),
            format!("{:e}", self.linf_error),
            format!("{:e}", self.max_imag),
            format!("{:e}", self.runtime_ms),
            format!("{:e}", self.constraint_margin),
        ]
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.fields())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().ne(CSV_HEADER.iter().copied()) {
            return Err(MfsError::Config(format!(
                "unexpected CSV header `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let f = |i: usize| -> Result<f64> { parse_num::<f64>(CSV_HEADER[i], &rec[i]) };
            let u = |i: usize| -> Result<usize> { parse_num::<usize>(CSV_HEADER[i], &rec[i]) };
            rows.push(SweepRow {
                method: rec[0].parse()?,
                n: u(1)?,
                m: u(2)?,
                p: u(3)?,
                cond2: f(4)?,
                linf_error: f(5)?,
                max_imag: f(6)?,
                runtime_ms: f(7)?,
                constraint_margin: f(8)?,
            });
        }
        Ok(Self { rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(fs::File::open(path)?)
    }
}

/// A `(method, N)` pair that could not be solved.
#[derive(Debug)]
pub struct RowFailure {
    pub method: Method,
    pub n: usize,
    pub error: MfsError,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub table: SweepTable,
    pub failures: Vec<RowFailure>,
}

/// Solves every `(method, N)` pair; failing pairs are reported separately and
/// do not stop the sweep. Rows are sorted by method, then `N`.
pub fn run_sweep(config: &ExperimentConfig, exec: Exec) -> SweepOutcome {
    let problem = config.problem();
    let mut jobs: Vec<(Method, usize)> = config
        .methods
        .iter()
        .flat_map(|&m| config.n_values.iter().map(move |&n| (m, n)))
        .collect();
    jobs.sort();
    let results = exec.map(&jobs, |&(method, n)| solve(&problem, method, n, exec).map(|s| s.record));

    let mut table = SweepTable::default();
    let mut failures = Vec::new();
    for (&(method, n), res) in jobs.iter().zip(results) {
        match res {
            Ok(rec) => {
                let mut row = SweepRow::from_record(&rec);
                if !config.timing {
                    row.runtime_ms = 0.0;
                }
                table.rows.push(row);
            }
            Err(error) => failures.push(RowFailure { method, n, error }),
        }
    }
    SweepOutcome { table, failures }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    /// `d ln(cond2) / dN`
    pub slope: f64,
    pub intercept: f64,
    pub rows_used: usize,
}

/// Ordinary least squares of `ln(cond2)` against `N` over the rows of
/// `method` that are not saturated.
pub fn fit_growth_rate(table: &SweepTable, method: Method) -> Result<GrowthFit> {
    let pts: Vec<(f64, f64)> = table
        .rows_for(method)
        .filter(|r| r.cond2.is_finite() && r.cond2 > 0.0 && r.cond2 < SATURATION)
        .map(|r| (r.n as f64, r.cond2.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(MfsError::InsufficientData(format!(
            "growth fit for {method} needs 4 unsaturated rows, found {}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(GrowthFit {
        slope,
        intercept: my - slope * mx,
        rows_used: pts.len(),
    })
}

/// Basis functions sampled along a boundary curve.
#[derive(Debug, Clone)]
pub struct BasisSamples {
    pub method: Method,
    /// `count` parameters spanning `[0, 2 pi]` inclusive.
    pub t: Vec<f64>,
    /// `values[k][n]` = basis function `n` at `t[k]`.
    pub values: Vec<Vec<Complex64>>,
}

impl BasisSamples {
    pub fn n(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Largest `|b_n(t_k)|` per basis function.
    pub fn column_max(&self) -> Vec<f64> {
        (0..self.n())
            .map(|n| self.values.iter().map(|row| row[n].norm()).fold(0.0, f64::max))
            .collect()
    }

    fn write_part<W: Write>(&self, out: W, part: impl Fn(Complex64, usize) -> f64) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.n()).map(|n| format!("b{n}")));
        w.write_record(&header)?;
        for (t, row) in self.t.iter().zip(&self.values) {
            let mut rec = vec![format!("{t:e}")];
            rec.extend(row.iter().enumerate().map(|(n, v)| format!("{:e}", part(*v, n))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Direct traces scaled to unit L-infinity norm; other methods raw.
    pub fn write_real<W: Write>(&self, out: W) -> Result<()> {
        let scale: Vec<f64> = if self.method == Method::Direct {
            self.column_max()
                .into_iter()
                .map(|m| if m > 0.0 { 1.0 / m } else { 1.0 })
                .collect()
        } else {
            vec![1.0; self.n()]
        };
        self.write_part(out, |v, n| v.re * scale[n])
    }

    pub fn write_imag<W: Write>(&self, out: W) -> Result<()> {
        self.write_part(out, |v, _| v.im)
    }

    /// Writes `path`; for the SVD basis writes `<stem>_re.<ext>` and
    /// `<stem>_im.<ext>` instead. Returns the files written.
    pub fn save(&self, path: &Path) -> Result<Vec<PathBuf>> {
        if self.method != Method::Svd {
            self.write_real(fs::File::create(path)?)?;
            return Ok(vec![path.to_path_buf()]);
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "basis".into());
        let ext = path
            .extension()
            .map(|e| format!(".{}", e.to_string_lossy()))
            .unwrap_or_default();
        let re = path.with_file_name(format!("{stem}_re{ext}"));
        let im = path.with_file_name(format!("{stem}_im{ext}"));
        self.write_real(fs::File::create(&re)?)?;
        self.write_imag(fs::File::create(&im)?)?;
        Ok(vec![re, im])
    }
}

/// Samples every basis function of `model` at `count` points of `curve`.
pub fn emit_basis_samples(model: &Model, curve: &BoundaryCurve, count: usize, exec: Exec) -> Result<BasisSamples> {
    if count < 2 {
        return Err(MfsError::Argument(format!("need at least 2 samples, got {count}")));
    }
    let t: Vec<f64> = (0..count).map(|k| TAU * k as f64 / (count - 1) as f64).collect();
    let pts: Vec<Point2> = t.iter().map(|&s| curve.point(s)).collect();
    let b = model.basis_values(&pts, exec);
    let values = (0..count)
        .map(|k| (0..b.ncols()).map(|n| b[(k, n)]).collect())
        .collect();
    Ok(BasisSamples {
        method: model.method(),
        t,
        values,
    })
}
