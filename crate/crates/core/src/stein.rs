//! The free Stein operator, the semicircular Ornstein–Uhlenbeck generator and
//! the dual Stein pairing, all evaluated in moment space.

use thiserror::Error;

use crate::analytic::{AnalyticError, MeasureSpec};
use crate::moments::{self, MomentError, MomentSequence};
use crate::quadrature::gauss_legendre_on;

/// Largest polynomial degree accepted by [`dual_stein_pairing`].
pub const MAX_DEGREE: usize = 8;
/// Integrand size at `θ_max` above which the pairing reports truncation.
pub const TAIL_TOLERANCE: f64 = 1e-10;
const DIAGONAL: f64 = 1e-8;
const DERIVATIVE_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum SteinError {
    #[error("power {power} needs moments through order {power}, have {available}")]
    Truncation { power: usize, available: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

/// `L_⊞[g](x, y) = -x g(x) + (g(y) - g(x))/(y - x)`, continued to the
/// diagonal by `-x g(x) + g'(x)` with a central difference.
pub fn stein_operator_eval(g: impl Fn(f64) -> f64, x: f64, y: f64) -> f64 {
    let gx = g(x);
    if (y - x).abs() < DIAGONAL {
        let h = DERIVATIVE_STEP;
        -x * gx + (g(x + h) - g(x - h)) / (2.0 * h)
    } else {
        -x * gx + (g(y) - gx) / (y - x)
    }
}

/// `d_r = m_{r+1} - Σ_{k=0}^{r-1} m_k m_{r-1-k}` for `r = 0..N-1`, i.e.
/// `-⟨μ⊗μ, L_⊞[x^r]⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteinDiscrepancy {
    values: Vec<f64>,
}

impl SteinDiscrepancy {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `d_r`.
    pub fn get(&self, r: usize) -> f64 {
        self.values[r]
    }

    /// Number of entries, `N`.
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, b| a.max(b.abs()))
    }
}

pub fn stein_discrepancy(m: &MomentSequence) -> SteinDiscrepancy {
    let values = (0..m.order())
        .map(|r| {
            let lower: f64 = (0..r).map(|k| m.get(k) * m.get(r - 1 - k)).sum();
            m.get(r + 1) - lower
        })
        .collect();
    SteinDiscrepancy { values }
}

/// `d/dθ m_p(P_θ μ)` at `θ = 0`: `-p m_p + p Σ_{l=0}^{p-2} m_l m_{p-2-l}`.
pub fn generator_apply(m: &MomentSequence, p: usize) -> Result<f64, SteinError> {
    if p == 0 {
        return Err(SteinError::Precondition("power must be at least 1".into()));
    }
    if p > m.order() {
        return Err(SteinError::Truncation {
            power: p,
            available: m.order(),
        });
    }
    let pf = p as f64;
    let sum: f64 = (0..p.saturating_sub(1)).map(|l| m.get(l) * m.get(p - 2 - l)).sum();
    Ok(-pf * m.get(p) + pf * sum)
}

/// `(m_p(P_θ μ) - m_p(μ))/θ` at `θ = theta_step`, through cumulant evolution.
pub fn generator_finite_difference(mu: &MeasureSpec, p: usize, theta_step: f64) -> Result<f64, SteinError> {
    if !(theta_step > 0.0 && theta_step <= 1e-3) {
        return Err(SteinError::Precondition(format!(
            "θ step {theta_step} outside (0, 1e-3]"
        )));
    }
    let m = mu.moments(p.max(2))?;
    let evolved = moments::ou_evolve(&m, theta_step)?;
    Ok((evolved.get(p) - m.get(p)) / theta_step)
}

/// Value of the dual Stein pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualPairing {
    /// `∫_0^{θ_max} ⟨P_θμ ⊗ P_θμ, L_⊞[Dh]⟩ dθ`.
    pub value: f64,
    /// `|integrand(θ_max)|`.
    pub tail: f64,
    /// `tail` exceeds [`TAIL_TOLERANCE`].
    pub truncated: bool,
}

/// Integrand of the dual pairing at `θ`: `Σ_p h_p · generator_apply(m(P_θμ), p)`.
fn pairing_integrand(m: &MomentSequence, h: &[f64], theta: f64) -> Result<f64, SteinError> {
    let evolved = moments::ou_evolve(m, theta)?;
    let mut total = 0.0;
    for (p, &c) in h.iter().enumerate().skip(1) {
        if c != 0.0 {
            total += c * generator_apply(&evolved, p)?;
        }
    }
    Ok(total)
}

/// `∫_0^{θ_max} ⟨P_θμ ⊗ P_θμ, L_⊞[Dh]⟩ dθ` for `h = Σ h_p x^p`.
///
/// With `u = e^{-θ}` the integrand divided by `u` is a polynomial in `u`, so
/// Gauss–Legendre in `u` over `[e^{-θ_max}, 1]` is exact up to rounding.
/// The result should equal `⟨s, h⟩ - ⟨μ, h⟩`.
pub fn dual_stein_pairing(
    mu: &MeasureSpec,
    h: &[f64],
    theta_max: f64,
    n_quad: usize,
) -> Result<DualPairing, SteinError> {
    if h.is_empty() || h.len() > MAX_DEGREE + 1 {
        return Err(SteinError::Precondition(format!(
            "polynomial has {} coefficients, need 1..={}",
            h.len(),
            MAX_DEGREE + 1
        )));
    }
    if !(theta_max >= 20.0) || !theta_max.is_finite() {
        return Err(SteinError::Precondition(format!("θ_max = {theta_max} < 20")));
    }
    if n_quad < 200 {
        return Err(SteinError::Precondition(format!("{n_quad} quadrature nodes < 200")));
    }
    let m = mu.moments((h.len() - 1).max(2))?;
    let mut value = 0.0;
    for (u, w) in gauss_legendre_on(n_quad, (-theta_max).exp(), 1.0) {
        value += w * pairing_integrand(&m, h, -u.ln())? / u;
    }
    let tail = pairing_integrand(&m, h, theta_max)?.abs();
    Ok(DualPairing {
        value,
        tail,
        truncated: tail > TAIL_TOLERANCE,
    })
}

/// `⟨s, h⟩ - ⟨μ, h⟩`, the value the dual pairing must reproduce.
pub fn dual_stein_target(mu: &MeasureSpec, h: &[f64]) -> Result<f64, SteinError> {
    let order = (h.len().max(1) - 1).max(2);
    let s = moments::semicircle_moments(order)?;
    let m = mu.moments(order)?;
    Ok(s.integrate_polynomial(h)? - m.integrate_polynomial(h)?)
}

/// Measures used to check the generator and the dual pairing: standard
/// semicircle, symmetric Bernoulli, a symmetric three-point law, a skewed
/// two-point law and a non-centred three-point law.
pub fn test_battery() -> Vec<(&'static str, MeasureSpec)> {
    let r2 = std::f64::consts::SQRT_2;
    vec![
        ("semicircle", MeasureSpec::standard_semicircle()),
        ("bernoulli", MeasureSpec::bernoulli()),
        (
            "three-point",
            MeasureSpec::Atomic(vec![(-r2, 0.25), (0.0, 0.5), (r2, 0.25)]),
        ),
        (
            "skewed two-point",
            MeasureSpec::Atomic(vec![(r2, 1.0 / 3.0), (-1.0 / r2, 2.0 / 3.0)]),
        ),
        (
            "shifted",
            MeasureSpec::Atomic(vec![(-0.5, 0.3), (0.5, 0.5), (1.2, 0.2)]),
        ),
    ]
}
