//! Cauchy transforms, free convolution by subordination, and density recovery.
//!
//! Every law is handled through an [`Evaluator`]: something that returns
//! `G(z)` and `G'(z)` on the upper half-plane and knows an interval that
//! contains its support. Free sums are solved pointwise for the subordination
//! function with a safeguarded Newton / fixed-point hybrid.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moments::{self, MomentError, MomentSequence};
use crate::quadrature::gauss_legendre;

pub type C64 = Complex64;

/// Relative tolerance on the fixed-point residual `|F(w) - w|`.
pub const SUBORDINATION_TOLERANCE: f64 = 1e-13;
/// Hard cap on subordination iterations per point.
pub const MAX_ITERATIONS: usize = 10_000;
/// Iteration count after which plain fixed-point steps are damped.
pub const DAMPING_AFTER: usize = 1_000;
const DAMPING: f64 = 0.5;

/// Imaginary offsets used for Stieltjes inversion, largest first.
pub const EPSILON_LADDER: [f64; 3] = [4e-3, 2e-3, 1e-3];
/// Default number of grid nodes.
pub const DEFAULT_POINTS: usize = 2001;
/// Minimum number of grid nodes accepted by [`stieltjes_density`].
pub const MIN_POINTS: usize = 64;
/// Recovered mass outside this band flags an atom or a clipped window.
pub const MASS_BAND: (f64, f64) = (0.97, 1.03);
/// Mass deficit tolerated for distance computations.
pub const MASS_COMPLETE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum AnalyticError {
    #[error("point {0} is not in the open upper half-plane")]
    HalfPlane(C64),
    #[error("subordination did not converge in {iterations} iterations (residual {residual:.3e})")]
    IterationLimit { iterations: usize, residual: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("support error: {0}")]
    Support(String),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One evaluation of a Cauchy transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub g: C64,
    /// `G'(z)`.
    pub dg: C64,
    /// Subordination iterations spent (0 for closed forms).
    pub iterations: usize,
    /// Subordination point, usable as a warm start at a nearby `z`.
    pub omega: Option<C64>,
}

/// A law seen through its Cauchy transform `G(z) = ∫ μ(dx)/(z - x)`.
pub trait CauchyTransform: Send + Sync + fmt::Debug {
    /// `G` and `G'` at `z` with `Im z > 0`. `warm` is a previous
    /// subordination point near the solution; closed forms ignore it.
    fn evaluate(&self, z: C64, warm: Option<C64>) -> Result<Evaluation, AnalyticError>;

    /// An interval containing the support.
    fn support(&self) -> (f64, f64);

    fn cauchy(&self, z: C64) -> Result<C64, AnalyticError> {
        Ok(self.evaluate(z, None)?.g)
    }
}

pub type Evaluator = Arc<dyn CauchyTransform>;

fn check_half_plane(z: C64) -> Result<(), AnalyticError> {
    if z.im > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(AnalyticError::HalfPlane(z))
    }
}

/// `Σ w_i δ_{x_i}`.
#[derive(Debug, Clone)]
pub struct AtomicLaw {
    atoms: Vec<(f64, f64)>,
}

impl CauchyTransform for AtomicLaw {
    fn evaluate(&self, z: C64, _: Option<C64>) -> Result<Evaluation, AnalyticError> {
        check_half_plane(z)?;
        let mut g = C64::new(0.0, 0.0);
        let mut dg = C64::new(0.0, 0.0);
        for &(x, w) in &self.atoms {
            let r = (z - x).inv();
            g += w * r;
            dg -= w * r * r;
        }
        Ok(Evaluation {
            g,
            dg,
            iterations: 0,
            omega: None,
        })
    }

    fn support(&self) -> (f64, f64) {
        self.atoms
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                (lo.min(a.0), hi.max(a.0))
            })
    }
}

/// Semicircle law with the given mean and variance.
#[derive(Debug, Clone)]
pub struct SemicircleLaw {
    mean: f64,
    variance: f64,
}

impl SemicircleLaw {
    /// Density `√(4σ² - (x-a)²) / (2πσ²)` on `[a - 2σ, a + 2σ]`.
    pub fn density(&self, x: f64) -> f64 {
        let u = x - self.mean;
        let r2 = 4.0 * self.variance - u * u;
        if r2 <= 0.0 {
            0.0
        } else {
            r2.sqrt() / (2.0 * std::f64::consts::PI * self.variance)
        }
    }
}

impl CauchyTransform for SemicircleLaw {
    fn evaluate(&self, z: C64, _: Option<C64>) -> Result<Evaluation, AnalyticError> {
        check_half_plane(z)?;
        let u = z - self.mean;
        let two_sigma = 2.0 * self.variance.sqrt();
        // Both factors lie in the upper half-plane, so the product of
        // principal roots is the branch with s ~ u at infinity.
        let s = (u - two_sigma).sqrt() * (u + two_sigma).sqrt();
        let g = 2.0 / (u + s);
        Ok(Evaluation {
            g,
            dg: -g / s,
            iterations: 0,
            omega: None,
        })
    }

    fn support(&self) -> (f64, f64) {
        let r = 2.0 * self.variance.sqrt();
        (self.mean - r, self.mean + r)
    }
}

/// Piecewise-linear density on a grid, zero outside the window.
#[derive(Debug, Clone)]
pub struct GridLaw {
    density: GridDensity,
}

impl CauchyTransform for GridLaw {
    fn evaluate(&self, z: C64, _: Option<C64>) -> Result<Evaluation, AnalyticError> {
        check_half_plane(z)?;
        let d = &self.density;
        let dx = d.dx();
        // On [x_i, x_{i+1}] put x = x_i + t dx, a = z - x_i, q = dx/a:
        //   ∫ f/(z-x)   = (dx/a)  ∫_0^1 φ(t)/(1 - qt)  dt
        //   ∫ f/(z-x)^2 = (dx/a²) ∫_0^1 φ(t)/(1 - qt)² dt
        // with φ linear between f_i and f_{i+1}.
        let mut g = C64::new(0.0, 0.0);
        let mut dg = C64::new(0.0, 0.0);
        for i in 0..d.values.len() - 1 {
            let (f0, f1) = (d.values[i], d.values[i + 1]);
            if f0 == 0.0 && f1 == 0.0 {
                continue;
            }
            let a = z - d.x(i);
            let q = dx / a;
            let k = segment_kernels(q);
            g += (dx / a) * (f0 * (k.i0 - k.i1) + f1 * k.i1);
            dg -= (dx / (a * a)) * (f0 * (k.j0 - k.j1) + f1 * k.j1);
        }
        Ok(Evaluation {
            g,
            dg,
            iterations: 0,
            omega: None,
        })
    }

    fn support(&self) -> (f64, f64) {
        (self.density.lo, self.density.hi)
    }
}

/// `∫_0^1 t^p (1 - qt)^{-1}` (`i_p`) and `∫_0^1 t^p (1 - qt)^{-2}` (`j_p`), `p = 0, 1`.
struct SegmentKernels {
    i0: C64,
    i1: C64,
    j0: C64,
    j1: C64,
}

fn segment_kernels(q: C64) -> SegmentKernels {
    if q.norm() < 0.25 {
        // i_0 = Σ q^k/(k+1), i_1 = Σ q^k/(k+2), j_1 = Σ (k+1) q^k/(k+2).
        let mut i0 = C64::new(0.0, 0.0);
        let mut i1 = C64::new(0.0, 0.0);
        let mut j1 = C64::new(0.0, 0.0);
        let mut p = C64::new(1.0, 0.0);
        for k in 0..32 {
            let k = k as f64;
            i0 += p / (k + 1.0);
            i1 += p / (k + 2.0);
            j1 += p * ((k + 1.0) / (k + 2.0));
            p *= q;
        }
        SegmentKernels {
            i0,
            i1,
            j0: (1.0 - q).inv(),
            j1,
        }
    } else {
        let i0 = -(1.0 - q).ln() / q;
        let j0 = (1.0 - q).inv();
        SegmentKernels {
            i0,
            i1: (i0 - 1.0) / q,
            j0,
            j1: (j0 - i0) / q,
        }
    }
}

/// `𝔇_r[μ]` for `r ≠ 0`: `G(z) = G_μ(z/r)/r`.
#[derive(Debug, Clone)]
pub struct Dilation {
    inner: Evaluator,
    r: f64,
}

impl CauchyTransform for Dilation {
    fn evaluate(&self, z: C64, warm: Option<C64>) -> Result<Evaluation, AnalyticError> {
        check_half_plane(z)?;
        let w = z / self.r;
        if self.r > 0.0 {
            let e = self.inner.evaluate(w, warm.map(|o| o / self.r))?;
            Ok(Evaluation {
                g: e.g / self.r,
                dg: e.dg / (self.r * self.r),
                iterations: e.iterations,
                omega: e.omega.map(|o| o * self.r),
            })
        } else {
            // z/r lies in the lower half-plane; use G(w̄) = conj G(w).
            let e = self.inner.evaluate(w.conj(), warm.map(|o| (o / self.r).conj()))?;
            Ok(Evaluation {
                g: e.g.conj() / self.r,
                dg: e.dg.conj() / (self.r * self.r),
                iterations: e.iterations,
                omega: e.omega.map(|o| o.conj() * self.r),
            })
        }
    }

    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.support();
        if self.r > 0.0 {
            (self.r * lo, self.r * hi)
        } else {
            (self.r * hi, self.r * lo)
        }
    }
}

/// Translation by `c`: `G(z) = G_μ(z - c)`.
#[derive(Debug, Clone)]
pub struct Translation {
    inner: Evaluator,
    c: f64,
}

impl CauchyTransform for Translation {
    fn evaluate(&self, z: C64, warm: Option<C64>) -> Result<Evaluation, AnalyticError> {
        let e = self.inner.evaluate(z - self.c, warm.map(|o| o - self.c))?;
        Ok(Evaluation {
            omega: e.omega.map(|o| o + self.c),
            ..e
        })
    }

    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.inner.support();
        (lo + self.c, hi + self.c)
    }
}

/// `h(w) = F(w) - w` and `h'(w)` with `F = 1/G`.
fn h_of(e: &Evaluation, w: C64) -> (C64, C64) {
    let f = e.g.inv();
    (f - w, -e.dg * f * f - 1.0)
}

/// Outcome of one fixed-point solve.
#[derive(Debug, Clone, Copy)]
struct Solve {
    omega: C64,
    iterations: usize,
    residual: f64,
}

/// Finds the fixed point in the upper half-plane of `F`, where `map(w)`
/// returns `(F(w), F'(w))`.
///
/// A Newton step on `F(w) - w` is taken when it stays in the half-plane and
/// reduces the residual; otherwise a plain step `w ← F(w)`, damped after
/// half-plane, so a fixed point found there is the Denjoy–Wolff point.
/// The stopping tolerance is scaled by `amplification`, the factor by which
/// the map enlarges rounding errors in its evaluation.
fn solve_fixed_point(
    start: C64,
    amplification: f64,
    mut map: impl FnMut(C64) -> Result<(C64, C64), AnalyticError>,
) -> Result<Solve, AnalyticError> {
    let mut w = start;
    let (mut f, mut df) = map(w)?;
    let mut residual = (f - w).norm();
    for it in 1..=MAX_ITERATIONS {
        let tol = SUBORDINATION_TOLERANCE * (1.0 + w.norm()) * amplification;
        if residual <= tol {
            return Ok(Solve {
                omega: w,
                iterations: it,
                residual,
            });
        }
        let newton = w - (f - w) / (df - 1.0);
        let mut accepted = false;
        if newton.im > 0.0 && newton.re.is_finite() && newton.im.is_finite() {
            if let Ok((fn_, dfn)) = map(newton) {
                let rn = (fn_ - newton).norm();
                if rn < residual {
                    let step = (newton - w).norm();
                    w = newton;
                    f = fn_;
                    df = dfn;
                    residual = rn;
                    accepted = true;
                    if step <= tol * 1e-3 {
                        return Ok(Solve {
                            omega: w,
                            iterations: it,
                            residual,
                        });
                    }
                }
            }
        }
        if !accepted {
            let next = if it > DAMPING_AFTER { w + DAMPING * (f - w) } else { f };
            if !(next.im > 0.0) {
                return Err(AnalyticError::HalfPlane(next));
            }
            w = next;
            let (fv, dfv) = map(w)?;
            f = fv;
            df = dfv;
            residual = (f - w).norm();
        }
    }
    Err(AnalyticError::IterationLimit {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// `a ⊞ b`, evaluated through `G(z) = G_a(ω_1(z))`, where `ω_1` is the
/// fixed point of `w ↦ z + h_b(z + h_a(w))` and `ω_2 = z + h_a(ω_1)`.
#[derive(Debug, Clone)]
pub struct FreeSum {
    a: Evaluator,
    b: Evaluator,
}

impl FreeSum {
    pub fn new(a: Evaluator, b: Evaluator) -> Self {
        Self { a, b }
    }

    /// Both subordination functions at `z`.
    pub fn subordinate(&self, z: C64, warm: Option<C64>) -> Result<SubordinationPoint, AnalyticError> {
        check_half_plane(z)?;
        let mut inner = 0usize;
        let solve = solve_fixed_point(warm.filter(|w| w.im > 0.0).unwrap_or(z), 1.0, |w| {
            let ea = self.a.evaluate(w, None)?;
            let (ha, dha) = h_of(&ea, w);
            let w2 = z + ha;
            let eb = self.b.evaluate(w2, None)?;
            inner += ea.iterations + eb.iterations;
            let (hb, dhb) = h_of(&eb, w2);
            Ok((z + hb, dhb * dha))
        })?;
        let w1 = solve.omega;
        let ea = self.a.evaluate(w1, None)?;
        let (ha, dha) = h_of(&ea, w1);
        let w2 = z + ha;
        let eb = self.b.evaluate(w2, None)?;
        let (_, dhb) = h_of(&eb, w2);
        let dw1 = (1.0 + dhb) / (1.0 - dhb * dha);
        Ok(SubordinationPoint {
            omega1: w1,
            omega2: w2,
            g: ea.g,
            dg: ea.dg * dw1,
            iterations: solve.iterations + inner,
            residual: solve.residual,
        })
    }
}

/// Subordination data at a single point.
#[derive(Debug, Clone, Copy)]
pub struct SubordinationPoint {
    pub omega1: C64,
    pub omega2: C64,
    pub g: C64,
    pub dg: C64,
    pub iterations: usize,
    pub residual: f64,
}

impl CauchyTransform for FreeSum {
    fn evaluate(&self, z: C64, warm: Option<C64>) -> Result<Evaluation, AnalyticError> {
        let p = self.subordinate(z, warm)?;
        Ok(Evaluation {
            g: p.g,
            dg: p.dg,
            iterations: p.iterations,
            omega: Some(p.omega1),
        })
    }

    fn support(&self) -> (f64, f64) {
        let (la, ha) = self.a.support();
        let (lb, hb) = self.b.support();
        (la + lb, ha + hb)
    }
}

/// `μ^{⊞n}`, evaluated through `G(z) = G_μ(ω(z))` with `ω` the fixed point
/// of `w ↦ z + (n - 1) h_μ(w)`.
#[derive(Debug, Clone)]
pub struct FreePower {
    base: Evaluator,
    n: usize,
}

impl CauchyTransform for FreePower {
    fn evaluate(&self, z: C64, warm: Option<C64>) -> Result<Evaluation, AnalyticError> {
        check_half_plane(z)?;
        let k = (self.n - 1) as f64;
        let mut inner = 0usize;
        // h carries a rounding error of order eps·|w|, which the map
        // multiplies by n - 1.
        let solve = solve_fixed_point(warm.filter(|w| w.im > 0.0).unwrap_or(z), k.max(1.0), |w| {
            let e = self.base.evaluate(w, None)?;
            inner += e.iterations;
            let (h, dh) = h_of(&e, w);
            Ok((z + k * h, k * dh))
        })?;
        let w = solve.omega;
        let e = self.base.evaluate(w, None)?;
        let (_, dh) = h_of(&e, w);
        let dw = 1.0 / (1.0 - k * dh);
        Ok(Evaluation {
            g: e.g,
            dg: e.dg * dw,
            iterations: solve.iterations + inner,
            omega: Some(w),
        })
    }

    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.base.support();
        (self.n as f64 * lo, self.n as f64 * hi)
    }
}

/// Density values at uniform nodes `lo + i (hi - lo)/(n - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl GridDensity {
    /// Values in `[-1e-12, 0)` are clamped to zero; anything more negative
    /// is rejected.
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self, AnalyticError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(AnalyticError::Grid(format!("window [{lo}, {hi}] is empty")));
        }
        if values.len() < 2 {
            return Err(AnalyticError::Grid("need at least two nodes".into()));
        }
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < -1e-12 {
                return Err(AnalyticError::Grid(format!("value {v} at node {i}")));
            }
            *v = v.max(0.0);
        }
        Ok(Self { lo, hi, values })
    }

    /// Samples `f` on the grid.
    pub fn from_fn(lo: f64, hi: f64, n_points: usize, f: impl Fn(f64) -> f64) -> Result<Self, AnalyticError> {
        if n_points < 2 {
            return Err(AnalyticError::Grid("need at least two nodes".into()));
        }
        let dx = (hi - lo) / (n_points - 1) as f64;
        Self::new(lo, hi, (0..n_points).map(|i| f(lo + i as f64 * dx)).collect())
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    /// Node `i`.
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.values.len() {
            self.hi
        } else {
            self.lo + i as f64 * self.dx()
        }
    }

    /// Trapezoid mass.
    pub fn mass(&self) -> f64 {
        let inner: f64 = self.values.iter().sum();
        self.dx() * (inner - 0.5 * (self.values[0] + self.values[self.values.len() - 1]))
    }

    /// `|1 - mass|`.
    pub fn mass_deficit(&self) -> f64 {
        (1.0 - self.mass()).abs()
    }

    /// Mass within [`MASS_COMPLETE`] of one.
    pub fn is_mass_complete(&self) -> bool {
        self.mass_deficit() < MASS_COMPLETE
    }

    /// Recovered mass outside [`MASS_BAND`]: an atom, or a window that
    /// clips the support.
    pub fn mass_flagged(&self) -> bool {
        let m = self.mass();
        !(MASS_BAND.0..=MASS_BAND.1).contains(&m)
    }

    /// Linear interpolation, zero outside the window.
    pub fn interpolate(&self, x: f64) -> f64 {
        if !(x >= self.lo && x <= self.hi) {
            return 0.0;
        }
        let t = (x - self.lo) / self.dx();
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Mass of the piecewise-linear density outside `[a, b]`.
    pub fn mass_outside(&self, a: f64, b: f64) -> f64 {
        let mut inside = 0.0;
        for i in 0..self.values.len() - 1 {
            let (x0, x1) = (self.x(i), self.x(i + 1));
            let (l, r) = (x0.max(a), x1.min(b));
            if r > l {
                inside += 0.5 * (self.interpolate(l) + self.interpolate(r)) * (r - l);
            }
        }
        self.mass() - inside
    }

    /// `∫ x^j f(x) dx` for the piecewise-linear density, exactly up to
    /// rounding, for `j = 0..=order`.
    pub fn raw_moments(&self, order: usize) -> Vec<f64> {
        let (nodes, weights) = gauss_legendre(order / 2 + 2);
        let mut out = vec![0.0; order + 1];
        let half = self.dx() / 2.0;
        for i in 0..self.values.len() - 1 {
            let (f0, f1) = (self.values[i], self.values[i + 1]);
            if f0 == 0.0 && f1 == 0.0 {
                continue;
            }
            let mid = self.x(i) + half;
            for (t, w) in nodes.iter().zip(&weights) {
                let x = mid + half * t;
                let mut p = half * w * (f0 * (1.0 - t) + f1 * (1.0 + t)) / 2.0;
                for slot in out.iter_mut() {
                    *slot += p;
                    p *= x;
                }
            }
        }
        out
    }

    /// CSV with header `x,density` and 17 significant digits.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), AnalyticError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "density"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:.16e}", self.x(i)), format!("{v:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, AnalyticError> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "density" {
            return Err(AnalyticError::Grid(format!(
                "expected header x,density, got {headers:?}"
            )));
        }
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| AnalyticError::Grid(format!("bad number {s:?}: {e}")))
            };
            xs.push(parse(&record[0])?);
            values.push(parse(&record[1])?);
        }
        if xs.len() < 2 {
            return Err(AnalyticError::Grid("need at least two rows".into()));
        }
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        let dx = (hi - lo) / (xs.len() - 1) as f64;
        for (i, x) in xs.iter().enumerate() {
            if (x - (lo + i as f64 * dx)).abs() > 1e-9 * (1.0 + dx.abs() * xs.len() as f64) {
                return Err(AnalyticError::Grid(format!("node {i} ({x}) is off the uniform grid")));
            }
        }
        Self::new(lo, hi, values)
    }

    pub fn save(&self, path: &Path) -> Result<(), AnalyticError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: &Path) -> Result<Self, AnalyticError> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// A symbolic law.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    /// `(position, weight)` pairs.
    Atomic(Vec<(f64, f64)>),
    Semicircle {
        mean: f64,
        variance: f64,
    },
    Grid(GridDensity),
}

impl MeasureSpec {
    /// Positive weights summing to one within `1e-12`, distinct positions.
    pub fn atomic(atoms: Vec<(f64, f64)>) -> Result<Self, AnalyticError> {
        if atoms.is_empty() {
            return Err(AnalyticError::InvalidMeasure("no atoms".into()));
        }
        for &(x, w) in &atoms {
            if !x.is_finite() || !(w > 0.0) || !w.is_finite() {
                return Err(AnalyticError::InvalidMeasure(format!("atom ({x}, {w})")));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(AnalyticError::InvalidMeasure(format!("weights sum to {total}")));
        }
        let mut xs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        xs.sort_by(f64::total_cmp);
        if xs.windows(2).any(|p| p[0] == p[1]) {
            return Err(AnalyticError::InvalidMeasure("repeated atom position".into()));
        }
        Ok(Self::Atomic(atoms))
    }

    pub fn semicircle(mean: f64, variance: f64) -> Result<Self, AnalyticError> {
        if !mean.is_finite() || !(variance > 0.0) || !variance.is_finite() {
            return Err(AnalyticError::InvalidMeasure(format!(
                "semicircle mean {mean}, variance {variance}"
            )));
        }
        Ok(Self::Semicircle { mean, variance })
    }

    /// The standard semicircle `s`.
    pub fn standard_semicircle() -> Self {
        Self::Semicircle {
            mean: 0.0,
            variance: 1.0,
        }
    }

    /// Requires unit mass within `1e-6`.
    pub fn grid(density: GridDensity) -> Result<Self, AnalyticError> {
        if (density.mass() - 1.0).abs() > 1e-6 {
            return Err(AnalyticError::InvalidMeasure(format!(
                "grid density has mass {}",
                density.mass()
            )));
        }
        Ok(Self::Grid(density))
    }

    /// `(±1 w.p. 1/2)`.
    pub fn bernoulli() -> Self {
        Self::Atomic(vec![(-1.0, 0.5), (1.0, 0.5)])
    }

    pub fn evaluator(&self) -> Evaluator {
        match self {
            Self::Atomic(atoms) => Arc::new(AtomicLaw { atoms: atoms.clone() }),
            Self::Semicircle { mean, variance } => Arc::new(SemicircleLaw {
                mean: *mean,
                variance: *variance,
            }),
            Self::Grid(d) => Arc::new(GridLaw { density: d.clone() }),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        self.evaluator().support()
    }

    /// Moments `m_0..m_order`.
    pub fn moments(&self, order: usize) -> Result<MomentSequence, AnalyticError> {
        Ok(match self {
            Self::Atomic(atoms) => moments::atomic_moments(atoms, order)?,
            Self::Semicircle { mean, variance } => moments::semicircle_moments_with(*mean, *variance, order)?,
            Self::Grid(d) => {
                let raw = d.raw_moments(order);
                let mass = raw[0];
                MomentSequence::new(raw.iter().map(|m| m / mass).collect())?
            }
        })
    }

    /// Density at `x` where one exists (semicircle, grid).
    pub fn density(&self, x: f64) -> Option<f64> {
        match self {
            Self::Atomic(_) => None,
            Self::Semicircle { mean, variance } => Some(
                SemicircleLaw {
                    mean: *mean,
                    variance: *variance,
                }
                .density(x),
            ),
            Self::Grid(d) => Some(d.interpolate(x)),
        }
    }

    /// Affine image `(X - mean)/sd`.
    pub fn standardized(&self) -> Result<Self, AnalyticError> {
        let m = self.moments(2)?;
        let sd = m.variance().sqrt();
        if !(sd > 0.0) {
            return Err(AnalyticError::InvalidMeasure("zero variance".into()));
        }
        let a = m.mean();
        Ok(match self {
            Self::Atomic(atoms) => Self::Atomic(atoms.iter().map(|&(x, w)| ((x - a) / sd, w)).collect()),
            Self::Semicircle { .. } => Self::standard_semicircle(),
            Self::Grid(d) => {
                let values = d.values.iter().map(|v| v * sd).collect();
                Self::Grid(GridDensity::new((d.lo - a) / sd, (d.hi - a) / sd, values)?)
            }
        })
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Atomic(atoms) => {
                write!(f, "atomic{{")?;
                for (i, (x, w)) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}: {w}")?;
                }
                write!(f, "}}")
            }
            Self::Semicircle { mean, variance } => write!(f, "semicircle(mean {mean}, variance {variance})"),
            Self::Grid(d) => write!(f, "grid[{}, {}; {} points]", d.lo, d.hi, d.n_points()),
        }
    }
}

/// `G_μ(z)`.
pub fn cauchy_transform(mu: &MeasureSpec, z: C64) -> Result<C64, AnalyticError> {
    mu.evaluator().cauchy(z)
}

/// `𝔇_r[μ]` as an evaluator.
pub fn dilate(inner: Evaluator, r: f64) -> Result<Evaluator, AnalyticError> {
    if r == 0.0 || !r.is_finite() {
        return Err(AnalyticError::Domain(format!("dilation by {r}")));
    }
    if r == 1.0 {
        return Ok(inner);
    }
    Ok(Arc::new(Dilation { inner, r }))
}

/// Law translated by `c`.
pub fn translate(inner: Evaluator, c: f64) -> Evaluator {
    if c == 0.0 {
        return inner;
    }
    Arc::new(Translation { inner, c })
}

/// `G_{a⊞b}(z)`.
pub fn subordination_convolve(a: &MeasureSpec, b: &MeasureSpec, z: C64) -> Result<C64, AnalyticError> {
    FreeSum::new(a.evaluator(), b.evaluator()).cauchy(z)
}

/// Subordination functions of `a ⊞ b` sampled at `points`.
#[derive(Debug, Clone)]
pub struct SubordinationResult {
    pub points: Vec<C64>,
    pub omega1: Vec<C64>,
    pub omega2: Vec<C64>,
    /// Total iterations over all points.
    pub iterations: usize,
    /// Largest fixed-point residual.
    pub residual: f64,
}

pub fn subordination_map(
    a: &MeasureSpec,
    b: &MeasureSpec,
    points: &[C64],
) -> Result<SubordinationResult, AnalyticError> {
    let sum = FreeSum::new(a.evaluator(), b.evaluator());
    let mut out = SubordinationResult {
        points: points.to_vec(),
        omega1: Vec::with_capacity(points.len()),
        omega2: Vec::with_capacity(points.len()),
        iterations: 0,
        residual: 0.0,
    };
    for &z in points {
        let p = sum.subordinate(z, None)?;
        out.omega1.push(p.omega1);
        out.omega2.push(p.omega2);
        out.iterations += p.iterations;
        out.residual = out.residual.max(p.residual);
    }
    Ok(out)
}

/// `(𝔇_scale μ)^{⊞n}`.
pub fn nfold_convolve(mu: &MeasureSpec, n: usize, scale: f64) -> Result<Evaluator, AnalyticError> {
    nfold_evaluator(mu.evaluator(), n, scale)
}

/// [`nfold_convolve`] for an arbitrary base evaluator.
pub fn nfold_evaluator(base: Evaluator, n: usize, scale: f64) -> Result<Evaluator, AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::Domain("n-fold convolution needs n >= 1".into()));
    }
    let base = dilate(base, scale)?;
    if n == 1 {
        return Ok(base);
    }
    Ok(Arc::new(FreePower { base, n }))
}

/// `P_θ*[μ] = 𝔇_{e^{-θ}}[μ] ⊞ 𝔇_{√(1-e^{-2θ})}[s]`.
pub fn ou_semigroup(mu: &MeasureSpec, theta: f64) -> Result<Evaluator, AnalyticError> {
    ou_evaluator(mu.evaluator(), theta)
}

/// [`ou_semigroup`] for an arbitrary evaluator.
pub fn ou_evaluator(mu: Evaluator, theta: f64) -> Result<Evaluator, AnalyticError> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(AnalyticError::Domain(format!("semigroup time {theta}")));
    }
    if theta == 0.0 {
        return Ok(mu);
    }
    let noise: Evaluator = Arc::new(SemicircleLaw {
        mean: 0.0,
        variance: -(-2.0 * theta).exp_m1(),
    });
    Ok(Arc::new(FreeSum::new(dilate(mu, (-theta).exp())?, noise)))
}

/// Density recovered by Stieltjes inversion, with solver statistics.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub density: GridDensity,
    /// Subordination iterations summed over every evaluation.
    pub iterations: usize,
}

/// `f(x) = -(1/π) lim Im G(x + iε)`, with the limit taken by quadratic
/// extrapolation through [`EPSILON_LADDER`] and clamped at zero.
pub fn stieltjes_density(
    evaluator: &dyn CauchyTransform,
    lo: f64,
    hi: f64,
    n_points: usize,
) -> Result<GridDensity, AnalyticError> {
    Ok(stieltjes_recover(evaluator, lo, hi, n_points)?.density)
}

/// [`stieltjes_density`] with iteration counts.
pub fn stieltjes_recover(
    evaluator: &dyn CauchyTransform,
    lo: f64,
    hi: f64,
    n_points: usize,
) -> Result<Recovery, AnalyticError> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(AnalyticError::Grid(format!("window [{lo}, {hi}] is empty")));
    }
    if n_points < MIN_POINTS {
        return Err(AnalyticError::Grid(format!("{n_points} points, need >= {MIN_POINTS}")));
    }
    const CHUNK: usize = 64;
    let dx = (hi - lo) / (n_points - 1) as f64;
    let starts: Vec<usize> = (0..n_points).step_by(CHUNK).collect();
    let chunks: Vec<Result<(Vec<f64>, usize), AnalyticError>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(n_points);
            let mut warm = [None; EPSILON_LADDER.len()];
            let mut values = Vec::with_capacity(end - start);
            let mut iterations = 0;
            for i in start..end {
                let x = if i + 1 == n_points { hi } else { lo + i as f64 * dx };
                let mut f = [0.0; EPSILON_LADDER.len()];
                for (k, &eps) in EPSILON_LADDER.iter().enumerate() {
                    let guess = warm[k].or(if k > 0 { warm[k - 1] } else { None });
                    let e = evaluator.evaluate(C64::new(x, eps), guess)?;
                    iterations += e.iterations;
                    warm[k] = e.omega;
                    f[k] = -e.g.im / std::f64::consts::PI;
                }
                let extrapolated = (f[0] - 6.0 * f[1] + 8.0 * f[2]) / 3.0;
                values.push(extrapolated.max(0.0));
            }
            Ok((values, iterations))
        })
        .collect();
    let mut values = Vec::with_capacity(n_points);
    let mut iterations = 0;
    for chunk in chunks {
        let (v, it) = chunk?;
        values.extend(v);
        iterations += it;
    }
    Ok(Recovery {
        density: GridDensity::new(lo, hi, values)?,
        iterations,
    })
}

/// `[-(R + 0.5), R + 0.5]` with `R` the larger end of the support bound.
pub fn triangle_window(evaluator: &dyn CauchyTransform) -> (f64, f64) {
    let (lo, hi) = evaluator.support();
    let r = lo.abs().max(hi.abs()) + 0.5;
    (-r, r)
}

/// Window for density recovery: the support located by a coarse scan,
/// widened by 0.5 on each side and clipped to [`triangle_window`].
///
/// Falls back to the triangle window when the scan mass is outside
/// [`MASS_BAND`]. The scan only places quantiles, so a coarse grid that
/// under-resolves a narrow support is still usable.
pub fn auto_window(evaluator: &dyn CauchyTransform) -> Result<(f64, f64), AnalyticError> {
    let (tlo, thi) = triangle_window(evaluator);
    let coarse = stieltjes_density(evaluator, tlo, thi, 1001)?;
    if coarse.mass_flagged() {
        return Ok((tlo, thi));
    }
    let total = coarse.mass();
    let dx = coarse.dx();
    let v = coarse.values();
    let mut cumulative = 0.0;
    let mut first = None;
    let mut last = 0;
    for i in 0..v.len() - 1 {
        cumulative += 0.5 * (v[i] + v[i + 1]) * dx;
        if first.is_none() && cumulative > 1e-9 * total {
            first = Some(i);
        }
        if cumulative < (1.0 - 1e-9) * total {
            last = i + 1;
        }
    }
    let first = first.unwrap_or(0);
    let lo = (coarse.x(first) - dx - 0.5).max(tlo);
    let hi = (coarse.x((last + 1).min(v.len() - 1)) + dx + 0.5).min(thi);
    Ok((lo, hi))
}

/// Density on an explicit window or, when `window` is `None`, on
/// [`auto_window`] with a retry on the triangle window if mass goes missing.
pub fn recover_density(
    evaluator: &dyn CauchyTransform,
    window: Option<(f64, f64)>,
    n_points: usize,
) -> Result<Recovery, AnalyticError> {
    if let Some((lo, hi)) = window {
        return stieltjes_recover(evaluator, lo, hi, n_points);
    }
    let (lo, hi) = auto_window(evaluator)?;
    let first = stieltjes_recover(evaluator, lo, hi, n_points)?;
    if first.density.is_mass_complete() {
        return Ok(first);
    }
    let (tlo, thi) = triangle_window(evaluator);
    if (tlo, thi) == (lo, hi) {
        return Ok(first);
    }
    stieltjes_recover(evaluator, tlo, thi, n_points)
}

/// Moments `m_j = (1/2πi)∮ z^j G(z) dz` on the circle `|z| = R + 1`, where
/// `[-R, R]` contains the support.
///
/// The trapezoid rule at midpoint angles of the upper half-circle is used,
/// with the lower half supplied by `G(z̄) = conj G(z)`. It converges
/// geometrically, like `(R/(R+1))^{2K}` for `K` nodes.
pub fn moments_from_evaluator(evaluator: &dyn CauchyTransform, order: usize) -> Result<MomentSequence, AnalyticError> {
    if order > moments::DEFAULT_ORDER {
        return Err(AnalyticError::Domain(format!("moment order {order} above 12")));
    }
    let (lo, hi) = evaluator.support();
    let r = lo.abs().max(hi.abs());
    if !r.is_finite() {
        return Err(AnalyticError::Support(format!("support bound [{lo}, {hi}]")));
    }
    let radius = r + 1.0;
    // (R/ρ)^{2K} ≤ 1e-18, with room for the growth of z^j.
    let decay = (radius / r.max(1e-300)).ln();
    let k = ((21.0 * std::f64::consts::LN_10 + order as f64 * radius.ln().max(0.0)) / (2.0 * decay))
        .ceil()
        .clamp(64.0, 20_000.0) as usize;
    let mut sums = vec![0.0; order + 1];
    let mut warm = None;
    for i in 0..k {
        let phi = std::f64::consts::PI * (i as f64 + 0.5) / k as f64;
        let z = C64::from_polar(radius, phi);
        let e = evaluator.evaluate(z, warm)?;
        warm = e.omega;
        let mut p = z * e.g;
        for s in sums.iter_mut() {
            *s += p.re;
            p *= z;
        }
    }
    let values: Vec<f64> = sums.iter().map(|s| s / k as f64).collect();
    Ok(MomentSequence::new(values)?)
}

/// Serializable form of a [`MeasureSpec`]. Grid densities are referenced by
/// path to a CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSource {
    Atomic { atoms: Vec<[f64; 2]> },
    Semicircle { mean: f64, variance: f64 },
    Grid { path: std::path::PathBuf },
}

impl MeasureSource {
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<MeasureSpec, AnalyticError> {
        match self {
            Self::Atomic { atoms } => MeasureSpec::atomic(atoms.iter().map(|a| (a[0], a[1])).collect()),
            Self::Semicircle { mean, variance } => MeasureSpec::semicircle(*mean, *variance),
            Self::Grid { path } => {
                let full = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                MeasureSpec::grid(GridDensity::load(&full)?)
            }
        }
    }
}
