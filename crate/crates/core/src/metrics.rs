//! Distances between laws given as grid densities.

use serde::{Deserialize, Serialize};

use crate::analytic::{self, AnalyticError, GridDensity, MeasureSpec, MASS_COMPLETE};

/// `∫|x| s(dx)` for the standard semicircle.
pub const SEMICIRCLE_ABS_MEAN: f64 = 8.0 / (3.0 * std::f64::consts::PI);

/// Cumulative distribution on the nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
    /// `|1 - mass|` before renormalization.
    pub mass_deficit: f64,
    /// Scaled so the last value is exactly one; only done when the deficit
    /// is below [`MASS_COMPLETE`].
    pub renormalized: bool,
}

impl Cdf {
    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.dx()
    }

    /// Linear interpolation, 0 left of the window and the last value right of it.
    pub fn at(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return self.values[self.values.len() - 1];
        }
        let t = (x - self.lo) / self.dx();
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let f = t - i as f64;
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }
}

/// Cumulative trapezoid, renormalized to end at one when the mass deficit is
/// below [`MASS_COMPLETE`].
pub fn cdf_from_density(g: &GridDensity) -> Cdf {
    let v = g.values();
    let dx = g.dx();
    let mut values = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    values.push(0.0);
    for i in 1..v.len() {
        acc += 0.5 * (v[i - 1] + v[i]) * dx;
        values.push(acc);
    }
    let mass_deficit = (1.0 - acc).abs();
    let renormalized = mass_deficit < MASS_COMPLETE && acc > 0.0;
    if renormalized {
        for x in values.iter_mut() {
            *x /= acc;
        }
        let last = values.len() - 1;
        values[last] = 1.0;
    }
    Cdf {
        lo: g.lo(),
        hi: g.hi(),
        values,
        mass_deficit,
        renormalized,
    }
}

fn same_grid(a: &GridDensity, b: &GridDensity) -> bool {
    a.lo() == b.lo() && a.hi() == b.hi() && a.n_points() == b.n_points()
}

/// Both densities on one uniform grid: unchanged when they already share a
/// grid, otherwise linearly interpolated onto the union window at the finer
/// of the two steps.
pub fn common_grid(a: &GridDensity, b: &GridDensity) -> Result<(GridDensity, GridDensity), AnalyticError> {
    if same_grid(a, b) {
        return Ok((a.clone(), b.clone()));
    }
    let lo = a.lo().min(b.lo());
    let hi = a.hi().max(b.hi());
    let step = a.dx().min(b.dx());
    let n = ((hi - lo) / step).ceil() as usize + 1;
    let ra = GridDensity::from_fn(lo, hi, n, |x| a.interpolate(x))?;
    let rb = GridDensity::from_fn(lo, hi, n, |x| b.interpolate(x))?;
    Ok((ra, rb))
}

fn max_abs_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn trapezoid_abs_difference(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    let inner: f64 = d.iter().sum();
    dx * (inner - 0.5 * (d[0] + d[d.len() - 1]))
}

/// `sup_x |F_a(x) - F_b(x)|` over grid nodes.
pub fn kolmogorov(a: &GridDensity, b: &GridDensity) -> Result<f64, AnalyticError> {
    let (a, b) = common_grid(a, b)?;
    Ok(max_abs_difference(
        &cdf_from_density(&a).values,
        &cdf_from_density(&b).values,
    ))
}

/// `½ ∫|f_a - f_b|`, or `None` when either density misses more than
/// [`MASS_COMPLETE`] of its mass (an atom or a clipped window).
///
/// Both densities are scaled to unit mass first, as in [`cdf_from_density`],
/// so that `kolmogorov <= total_variation` holds exactly on the grid.
pub fn total_variation(a: &GridDensity, b: &GridDensity) -> Result<Option<f64>, AnalyticError> {
    if !a.is_mass_complete() || !b.is_mass_complete() {
        return Ok(None);
    }
    let (a, b) = common_grid(a, b)?;
    let unit = |g: &GridDensity| -> Vec<f64> {
        let m = g.mass();
        g.values().iter().map(|v| v / m).collect()
    };
    Ok(Some(0.5 * trapezoid_abs_difference(&unit(&a), &unit(&b), a.dx())))
}

/// `∫|F_a - F_b|` over the window.
pub fn wasserstein1(a: &GridDensity, b: &GridDensity) -> Result<f64, AnalyticError> {
    let (a, b) = common_grid(a, b)?;
    let fa = cdf_from_density(&a);
    let fb = cdf_from_density(&b);
    Ok(trapezoid_abs_difference(&fa.values, &fb.values, a.dx()))
}

/// Distances between two laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub d_kol: f64,
    /// Absent when total variation was refused.
    pub d_tv: Option<f64>,
    pub d_w1: f64,
    /// Larger of the two mass deficits.
    pub mass_deficit: f64,
}

impl DistanceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain struct")
    }
}

pub fn distances(a: &GridDensity, b: &GridDensity) -> Result<DistanceReport, AnalyticError> {
    Ok(DistanceReport {
        d_kol: kolmogorov(a, b)?,
        d_tv: total_variation(a, b)?,
        d_w1: wasserstein1(a, b)?,
        mass_deficit: a.mass_deficit().max(b.mass_deficit()),
    })
}

/// `E|X - Y|` for independent `X, Y` with density `g`: `2∫F(1 - F)`.
pub fn mean_abs_difference(g: &GridDensity) -> f64 {
    let f = cdf_from_density(g);
    let v: Vec<f64> = f.values.iter().map(|p| p * (1.0 - p)).collect();
    let inner: f64 = v.iter().sum();
    2.0 * f.dx() * (inner - 0.5 * (v[0] + v[v.len() - 1]))
}

/// Spot check of `|⟨P_θμ ⊗ P_θμ - s ⊗ s, f⟩| ≤ 6e^{-θ}` for
/// `f(x, y) = x` and `f(x, y) = |x - y|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayCheck {
    pub theta: f64,
    /// `|E_θ[X] - E_s[X]|`.
    pub mean_gap: f64,
    /// `|E_θ|X - Y| - E_s|X - Y||`.
    pub spread_gap: f64,
    pub bound: f64,
}

impl DecayCheck {
    pub fn holds(&self) -> bool {
        self.mean_gap <= self.bound && self.spread_gap <= self.bound
    }
}

pub fn decay_diagnostic(mu: &MeasureSpec, theta: f64, n_points: usize) -> Result<DecayCheck, AnalyticError> {
    let flow = analytic::ou_semigroup(mu, theta)?;
    let recovered = analytic::recover_density(&*flow, None, n_points)?.density;
    let s = MeasureSpec::standard_semicircle();
    let reference = GridDensity::from_fn(recovered.lo(), recovered.hi(), n_points, |x| {
        s.density(x).unwrap_or(0.0)
    })?;
    let mean = mu.moments(2)?.mean() * (-theta).exp();
    Ok(DecayCheck {
        theta,
        mean_gap: mean.abs(),
        spread_gap: (mean_abs_difference(&recovered) - mean_abs_difference(&reference)).abs(),
        bound: 6.0 * (-theta).exp(),
    })
}
