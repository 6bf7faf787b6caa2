//! Berry–Esseen experiment harness: distances from `ν_n = 𝔇_{1/√n}μ^{⊞n}` to
//! the standard semicircle, resumable CSV output and log-log rate fits.

use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, AnalyticError, GridDensity, MeasureSource, MeasureSpec, DEFAULT_POINTS, MIN_POINTS};
use crate::metrics;

/// Columns of the experiment CSV, in order.
pub const CSV_HEADER: [&str; 7] = [
    "n",
    "d_kol",
    "d_tv",
    "d_w1",
    "mass_deficit",
    "subord_iters",
    "runtime_ms",
];
/// `|m_1|` and `|m_2 - 1|` allowed for a base that is not normalized.
pub const STANDARD_TOLERANCE: f64 = 1e-12;
/// Points closer than this factor to the discretization floor are not fitted.
pub const FLOOR_FACTOR: f64 = 10.0;
/// Fewest usable points for a rate fit.
pub const MIN_FIT_POINTS: usize = 4;
/// The superconvergence diagnostic bound on mass outside `[-3, 3]`.
pub const SUPERCONVERGENCE_MASS: f64 = 1e-3;
/// Half-width of the window always covered so the reference semicircle is
/// never clipped.
const REFERENCE_HALF_WIDTH: f64 = 2.5;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] AnalyticError),
    #[error("fit refused: {0}")]
    Fit(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// 2 config, 3 numerical failure, 4 fit refusal; I/O problems count as
    /// config errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Numerical(_) => 3,
            Self::Fit(_) => 4,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Kol,
    Tv,
    W1,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Kol, Metric::Tv, Metric::W1];

    pub fn name(self) -> &'static str {
        match self {
            Self::Kol => "kol",
            Self::Tv => "tv",
            Self::W1 => "w1",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown metric {s:?}, expected kol, tv or w1")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Explicit `[lo, hi]`; the window is chosen per `n` when absent.
    #[serde(default)]
    pub window: Option<[f64; 2]>,
    #[serde(default = "default_points")]
    pub n_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            window: None,
            n_points: DEFAULT_POINTS,
        }
    }
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

fn default_n_values() -> Vec<usize> {
    vec![4, 8, 16, 32, 64, 128, 256, 512]
}

fn default_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub base_measure: MeasureSource,
    #[serde(default = "default_n_values")]
    pub n_values: Vec<usize>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub grid: GridConfig,
    pub output: PathBuf,
    /// Standardize the base measure affinely instead of rejecting it.
    #[serde(default)]
    pub normalize: bool,
    /// Fill the runtime_ms column. Off by default so outputs are reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// Parses and validates a config; relative paths are taken relative to
    /// `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self, ExperimentError> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        if let Some(dir) = base_dir {
            if cfg.output.is_relative() {
                cfg.output = dir.join(&cfg.output);
            }
            if let MeasureSource::Grid { path } = &mut cfg.base_measure {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    /// Checks the structural invariants; the base measure is checked by
    /// [`ExperimentConfig::base`].
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.n_values.len() < 2 {
            return bad("n_values needs at least two entries".into());
        }
        if self.n_values[0] == 0 {
            return bad("n_values must be positive".into());
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("n_values must be strictly increasing".into());
        }
        if self.metrics.is_empty() {
            return bad("metrics is empty".into());
        }
        if self.grid.n_points < MIN_POINTS {
            return bad(format!("grid.n_points must be at least {MIN_POINTS}"));
        }
        if let Some([lo, hi]) = self.grid.window {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return bad(format!("grid.window [{lo}, {hi}] is empty"));
            }
        }
        Ok(())
    }

    /// The base measure, standardized when `normalize` is set and otherwise
    /// required to be centred with unit variance.
    pub fn base(&self) -> Result<MeasureSpec, ExperimentError> {
        let spec = self
            .base_measure
            .resolve(None)
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        if self.normalize {
            return spec.standardized().map_err(|e| ExperimentError::Config(e.to_string()));
        }
        let m = spec.moments(2).map_err(|e| ExperimentError::Config(e.to_string()))?;
        if m.get(1).abs() >= STANDARD_TOLERANCE || (m.get(2) - 1.0).abs() >= STANDARD_TOLERANCE {
            return Err(ExperimentError::Config(format!(
                "base measure has mean {:e} and second moment {:e}; set \"normalize\": true to standardize it",
                m.get(1),
                m.get(2)
            )));
        }
        Ok(spec)
    }

    fn wants(&self, metric: Metric) -> bool {
        self.metrics.contains(&metric)
    }
}

/// One line of the experiment CSV. Unselected or unavailable distances are
/// `None`; a failed row carries NaN throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub n: usize,
    pub d_kol: Option<f64>,
    pub d_tv: Option<f64>,
    pub d_w1: Option<f64>,
    pub mass_deficit: f64,
    pub subord_iters: usize,
    pub runtime_ms: Option<f64>,
}

impl Row {
    fn failed(n: usize, runtime_ms: Option<f64>) -> Self {
        Self {
            n,
            d_kol: Some(f64::NAN),
            d_tv: Some(f64::NAN),
            d_w1: Some(f64::NAN),
            mass_deficit: f64::NAN,
            subord_iters: 0,
            runtime_ms,
        }
    }

    pub fn is_failed(&self) -> bool {
        self.mass_deficit.is_nan()
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Kol => self.d_kol,
            Metric::Tv => self.d_tv,
            Metric::W1 => self.d_w1,
        }
    }

    fn fields(&self) -> [String; 7] {
        let num = |v: f64| format!("{v:.16e}");
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        [
            self.n.to_string(),
            opt(self.d_kol),
            opt(self.d_tv),
            opt(self.d_w1),
            num(self.mass_deficit),
            self.subord_iters.to_string(),
            self.runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
        ]
    }

    fn parse(record: &csv::StringRecord) -> Option<Self> {
        if record.len() != CSV_HEADER.len() {
            return None;
        }
        let opt = |s: &str| -> Option<Option<f64>> {
            if s.is_empty() {
                Some(None)
            } else {
                s.parse().ok().map(Some)
            }
        };
        Some(Self {
            n: record[0].parse().ok()?,
            d_kol: opt(&record[1])?,
            d_tv: opt(&record[2])?,
            d_w1: opt(&record[3])?,
            mass_deficit: record[4].parse().ok()?,
            subord_iters: record[5].parse().ok()?,
            runtime_ms: opt(&record[6])?,
        })
    }
}

/// Reads an experiment CSV. A trailing line without a newline, or anything
/// after the first unreadable line, is treated as an interrupted write and
/// dropped.
pub fn read_rows(path: &Path) -> Result<Vec<Row>, ExperimentError> {
    Ok(read_complete(path)?.0)
}

fn read_complete(path: &Path) -> Result<(Vec<Row>, usize), ExperimentError> {
    let text = fs::read_to_string(path)?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut lines = complete.split_inclusive('\n');
    let header = lines.next().unwrap_or("");
    if header.trim_end() != CSV_HEADER.join(",") {
        return Err(ExperimentError::Config(format!(
            "{} does not start with the header {}",
            path.display(),
            CSV_HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    let mut good_bytes = header.len();
    for line in lines {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(line.as_bytes());
        let row = reader
            .records()
            .next()
            .and_then(|r| r.ok())
            .and_then(|r| Row::parse(&r));
        match row {
            Some(row) => {
                rows.push(row);
                good_bytes += line.len();
            }
            None => break,
        }
    }
    Ok((rows, good_bytes))
}

/// Appends rows to the output CSV, writing the header for a new file.
struct Appender {
    file: File,
}

impl Appender {
    /// Opens `path` for appending after truncating any interrupted tail.
    fn open(path: &Path) -> Result<(Self, Vec<Row>), ExperimentError> {
        let (rows, fresh) = if path.exists() && fs::metadata(path)?.len() > 0 {
            let (rows, good) = read_complete(path)?;
            let file = OpenOptions::new().write(true).open(path)?;
            file.set_len(good as u64)?;
            (rows, false)
        } else {
            (Vec::new(), true)
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if fresh {
            writeln!(file, "{}", CSV_HEADER.join(","))?;
        }
        Ok((Self { file }, rows))
    }

    fn push(&mut self, row: &Row) -> Result<(), ExperimentError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(row.fields())?;
        let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
        self.file.write_all(&bytes)?;
        self.file.flush()?;
        Ok(())
    }
}

/// `ν_n` recovered on a grid that also covers `[-2.5, 2.5]`, together with
/// the standard semicircle on the same grid.
pub struct Measured {
    pub density: GridDensity,
    pub reference: GridDensity,
    pub iterations: usize,
}

fn union(a: (f64, f64)) -> (f64, f64) {
    (a.0.min(-REFERENCE_HALF_WIDTH), a.1.max(REFERENCE_HALF_WIDTH))
}

/// Density of `𝔇_{1/√n} μ^{⊞n}` and the reference semicircle on one grid.
pub fn measure_nfold(base: &MeasureSpec, n: usize, grid: &GridConfig) -> Result<Measured, AnalyticError> {
    let ev = analytic::nfold_convolve(base, n, 1.0 / (n as f64).sqrt())?;
    let recovery = match grid.window {
        Some([lo, hi]) => analytic::stieltjes_recover(&*ev, lo, hi, grid.n_points)?,
        None => {
            let (lo, hi) = union(analytic::auto_window(&*ev)?);
            let first = analytic::stieltjes_recover(&*ev, lo, hi, grid.n_points)?;
            let (tlo, thi) = union(analytic::triangle_window(&*ev));
            if first.density.is_mass_complete() || (tlo, thi) == (lo, hi) {
                first
            } else {
                analytic::stieltjes_recover(&*ev, tlo, thi, grid.n_points)?
            }
        }
    };
    let d = &recovery.density;
    let s = MeasureSpec::standard_semicircle();
    let reference = GridDensity::from_fn(d.lo(), d.hi(), d.n_points(), |x| s.density(x).unwrap_or(0.0))?;
    Ok(Measured {
        density: recovery.density,
        reference,
        iterations: recovery.iterations,
    })
}

fn compute_row(cfg: &ExperimentConfig, base: &MeasureSpec, n: usize) -> Row {
    let start = Instant::now();
    let outcome = measure_nfold(base, n, &cfg.grid).and_then(|m| {
        let report = metrics::distances(&m.density, &m.reference)?;
        Ok((report, m.density.mass_deficit(), m.iterations))
    });
    let runtime = cfg.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    match outcome {
        Ok((report, deficit, iterations)) => Row {
            n,
            d_kol: cfg.wants(Metric::Kol).then_some(report.d_kol),
            d_tv: if cfg.wants(Metric::Tv) { report.d_tv } else { None },
            d_w1: cfg.wants(Metric::W1).then_some(report.d_w1),
            mass_deficit: deficit,
            subord_iters: iterations,
            runtime_ms: runtime,
        },
        Err(_) => Row::failed(n, runtime),
    }
}

/// Runs every `n` in the config not already present in the output CSV and
/// returns all rows in `n_values` order. A numerical failure at one `n`
/// yields a NaN row and the run continues.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<Row>, ExperimentError> {
    cfg.validate()?;
    let base = cfg.base()?;
    let (mut appender, existing) = Appender::open(&cfg.output)?;
    let mut rows = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        if let Some(done) = existing.iter().find(|r| r.n == n) {
            rows.push(done.clone());
            continue;
        }
        let row = compute_row(cfg, &base, n);
        appender.push(&row)?;
        rows.push(row);
    }
    Ok(rows)
}

/// Distances of the standard semicircle pushed through the same pipeline,
/// maximized over the config's `n` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Floor {
    pub kol: f64,
    pub tv: f64,
    pub w1: f64,
}

impl Floor {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Kol => self.kol,
            Metric::Tv => self.tv,
            Metric::W1 => self.w1,
        }
    }
}

pub fn discretization_floor(n_values: &[usize], grid: &GridConfig) -> Result<Floor, AnalyticError> {
    let s = MeasureSpec::standard_semicircle();
    let mut floor = Floor {
        kol: 0.0,
        tv: 0.0,
        w1: 0.0,
    };
    for &n in n_values {
        let m = measure_nfold(&s, n, grid)?;
        let r = metrics::distances(&m.density, &m.reference)?;
        floor.kol = floor.kol.max(r.d_kol);
        floor.tv = floor.tv.max(r.d_tv.unwrap_or(0.0));
        floor.w1 = floor.w1.max(r.d_w1);
    }
    Ok(floor)
}

/// Least-squares line through `(log n, log d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub metric: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(usize, f64)>,
}

/// Fits `d ≈ C n^slope` to the points whose distance is finite and above
/// `FLOOR_FACTOR · floor`; refuses with fewer than [`MIN_FIT_POINTS`].
pub fn fit_rate(metric: &str, points: &[(usize, f64)], floor: f64) -> Result<RateFit, ExperimentError> {
    let used: Vec<(usize, f64)> = points
        .iter()
        .copied()
        .filter(|&(n, d)| n > 0 && d.is_finite() && d > 0.0 && d > FLOOR_FACTOR * floor)
        .collect();
    if used.len() < MIN_FIT_POINTS {
        return Err(ExperimentError::Fit(format!(
            "{metric}: {} of {} points above {FLOOR_FACTOR} x floor {floor:.3e}, need {MIN_FIT_POINTS}",
            used.len(),
            points.len()
        )));
    }
    let xs: Vec<f64> = used.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(RateFit {
        metric: metric.to_string(),
        slope,
        intercept,
        r_squared,
        points: used,
    })
}

/// `(n, d)` pairs of one metric from experiment rows.
pub fn metric_points(rows: &[Row], metric: Metric) -> Vec<(usize, f64)> {
    rows.iter().filter_map(|r| r.get(metric).map(|d| (r.n, d))).collect()
}

/// Mass of `ν_n` outside `[-3, 3]` for each `n`, counting mass the grid
/// failed to recover as outside, and the smallest `n` from which it stays
/// below [`SUPERCONVERGENCE_MASS`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Superconvergence {
    pub mass_outside: Vec<(usize, f64)>,
    pub smallest_n: Option<usize>,
}

pub fn superconvergence(
    base: &MeasureSpec,
    n_values: &[usize],
    grid: &GridConfig,
) -> Result<Superconvergence, AnalyticError> {
    let mut mass_outside = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let d = measure_nfold(base, n, grid)?.density;
        mass_outside.push((n, d.mass_outside(-3.0, 3.0) + d.mass_deficit()));
    }
    let smallest_n = mass_outside
        .iter()
        .rposition(|&(_, m)| m >= SUPERCONVERGENCE_MASS)
        .map_or(Some(0), |i| Some(i + 1))
        .and_then(|i| mass_outside.get(i).map(|p| p.0));
    Ok(Superconvergence {
        mass_outside,
        smallest_n,
    })
}

/// Everything the `berry-esseen` command reports.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub output: PathBuf,
    pub failed_n: Vec<usize>,
    pub floor: Floor,
    pub fits: Vec<FitOutcome>,
    pub superconvergence: Superconvergence,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum FitOutcome {
    Fit(RateFit),
    Refused { metric: String, refused: String },
}

impl Summary {
    /// 3 if any `n` failed, else 4 if any fit was refused, else 0.
    pub fn exit_code(&self) -> i32 {
        if !self.failed_n.is_empty() {
            3
        } else if self.fits.iter().any(|f| matches!(f, FitOutcome::Refused { .. })) {
            4
        } else {
            0
        }
    }
}

/// Runs the experiment, then fits every selected metric above the floor.
pub fn berry_esseen(cfg: &ExperimentConfig) -> Result<Summary, ExperimentError> {
    let rows = run_experiment(cfg)?;
    let base = cfg.base()?;
    let floor = discretization_floor(&cfg.n_values, &cfg.grid)?;
    let mut fits = Vec::new();
    for &metric in &Metric::ALL {
        if !cfg.wants(metric) {
            continue;
        }
        match fit_rate(metric.name(), &metric_points(&rows, metric), floor.get(metric)) {
            Ok(fit) => fits.push(FitOutcome::Fit(fit)),
            Err(e) => fits.push(FitOutcome::Refused {
                metric: metric.name().into(),
                refused: e.to_string(),
            }),
        }
    }
    Ok(Summary {
        output: cfg.output.clone(),
        failed_n: rows.iter().filter(|r| r.is_failed()).map(|r| r.n).collect(),
        floor,
        fits,
        superconvergence: superconvergence(&base, &cfg.n_values, &cfg.grid)?,
    })
}

/// A measure given on the command line: a preset name, a JSON object in the
/// config's `base_measure` format, or a path to a file holding one.
pub fn parse_measure(arg: &str) -> Result<MeasureSpec, ExperimentError> {
    let config = |e: AnalyticError| ExperimentError::Config(e.to_string());
    match arg {
        "semicircle" => return Ok(MeasureSpec::standard_semicircle()),
        "bernoulli" => return Ok(MeasureSpec::bernoulli()),
        "two-atom" => return MeasureSpec::atomic(vec![(2.0, 0.2), (-0.5, 0.8)]).map_err(config),
        _ => {}
    }
    let (text, dir) = if arg.trim_start().starts_with('{') {
        (arg.to_string(), None)
    } else {
        let path = Path::new(arg);
        let text = fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{arg}: not a preset, JSON or readable file ({e})")))?;
        (text, path.parent())
    };
    let source: MeasureSource = serde_json::from_str(&text).map_err(|e| ExperimentError::Config(e.to_string()))?;
    source.resolve(dir).map_err(config)
}
