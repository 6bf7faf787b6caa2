//! Moment sequences, free cumulants and the algebraic side of `⊞`.
//!
//! Moment–cumulant conversions sum over `NC(n)`. The sums only depend on the
//! multiset of block sizes, so each `NC(n)` is enumerated once and folded
//! into a table of block-size types with their multiplicity and their summed
//! Möbius weight `μ(σ, 1̂)`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::ncpart::{self, enumerate_nc, NcPartition, MAX_ENUMERATION};

/// Default truncation order used across the crate.
pub const DEFAULT_ORDER: usize = 12;

/// Tolerance on the smallest Hankel eigenvalue, relative to `max(1, ‖H‖)`.
pub const HANKEL_TOLERANCE: f64 = 1e-10;

/// Tolerance of moment comparisons in [`matching_rank`].
pub const MATCH_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error("moment sequence needs order >= 2, got {0}")]
    TooShort(usize),
    #[error("m_0 = {0} but a probability measure has unit mass")]
    NotNormalized(f64),
    #[error("entry {0} is not finite")]
    NonFinite(usize),
    #[error("Hankel matrix of size {size} has eigenvalue {eigenvalue:.3e}; not the moments of a measure")]
    NotPositive { size: usize, eigenvalue: f64 },
    #[error("order {order} exceeds the enumeration bound {max}")]
    EnumerationBound { order: usize, max: usize },
    #[error("order mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("dilation by zero is degenerate")]
    DegenerateDilation,
    #[error("variance {0:.3e} is not positive")]
    DegenerateLaw(f64),
    #[error("order {needed} needed but only {available} available")]
    Truncation { needed: usize, available: usize },
    #[error("negative semigroup time {0}")]
    NegativeTime(f64),
    #[error(transparent)]
    Lattice(#[from] ncpart::NcError),
}

/// Truncated moment vector `(m_0, …, m_N)` of a probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    values: Vec<f64>,
}

impl MomentSequence {
    /// Validates normalization, finiteness and Hankel positivity.
    ///
    /// `m_0` within `1e-9` of one is snapped to exactly one.
    pub fn new(values: Vec<f64>) -> Result<Self, MomentError> {
        if values.len() < 3 {
            return Err(MomentError::TooShort(values.len().saturating_sub(1)));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MomentError::NonFinite(i));
        }
        if (values[0] - 1.0).abs() > 1e-9 {
            return Err(MomentError::NotNormalized(values[0]));
        }
        let mut values = values;
        values[0] = 1.0;
        check_hankel(&values)?;
        Ok(Self { values })
    }

    /// Highest moment index `N`.
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `m_j`.
    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn mean(&self) -> f64 {
        self.values[1]
    }

    pub fn variance(&self) -> f64 {
        self.values[2] - self.values[1] * self.values[1]
    }

    /// The first `order + 1` entries.
    pub fn truncate(&self, order: usize) -> Result<Self, MomentError> {
        if order > self.order() {
            return Err(MomentError::Truncation {
                needed: order,
                available: self.order(),
            });
        }
        Self::new(self.values[..=order].to_vec())
    }

    /// Pairing `⟨μ, h⟩` for a polynomial `h = Σ c_k x^k`.
    pub fn integrate_polynomial(&self, coefficients: &[f64]) -> Result<f64, MomentError> {
        if coefficients.len() > self.values.len() {
            return Err(MomentError::Truncation {
                needed: coefficients.len() - 1,
                available: self.order(),
            });
        }
        Ok(coefficients.iter().zip(&self.values).map(|(c, m)| c * m).sum())
    }
}

fn check_hankel(values: &[f64]) -> Result<(), MomentError> {
    let k = (values.len() - 1) / 2;
    // Positive semidefiniteness of the largest H_k implies it for its
    // leading principal blocks.
    let size = k + 1;
    let h = DMatrix::from_fn(size, size, |i, j| values[i + j]);
    let eig = SymmetricEigen::new(h);
    let max = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if min < -HANKEL_TOLERANCE * max.max(1.0) {
        return Err(MomentError::NotPositive { size, eigenvalue: min });
    }
    Ok(())
}

/// Truncated free cumulants `(κ_1, …, κ_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeCumulantSequence {
    values: Vec<f64>,
}

impl FreeCumulantSequence {
    pub fn new(values: Vec<f64>) -> Result<Self, MomentError> {
        if values.is_empty() {
            return Err(MomentError::TooShort(0));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MomentError::NonFinite(i + 1));
        }
        Ok(Self { values })
    }

    pub fn order(&self) -> usize {
        self.values.len()
    }

    /// `κ_j` for `1 ≤ j ≤ N`.
    pub fn get(&self, j: usize) -> f64 {
        self.values[j - 1]
    }

    /// Entries `κ_1, …, κ_N` in order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Aggregated sums over `NC(n)` keyed by block-size multiset.
struct NcTable {
    /// `(block sizes, number of partitions, Σ μ(σ, 1̂))`
    types: Vec<(Vec<usize>, f64, f64)>,
}

fn nc_table(n: usize) -> &'static NcTable {
    static TABLES: [OnceLock<NcTable>; MAX_ENUMERATION + 1] = [const { OnceLock::new() }; MAX_ENUMERATION + 1];
    TABLES[n].get_or_init(|| {
        let mut acc: BTreeMap<Vec<usize>, (u64, i64)> = BTreeMap::new();
        for sigma in enumerate_nc(n).expect("n within bounds") {
            let mut sizes: Vec<usize> = sigma.block_sizes().collect();
            sizes.sort_unstable();
            let entry = acc.entry(sizes).or_insert((0, 0));
            entry.0 += 1;
            entry.1 += ncpart::mobius_to_top(&sigma);
        }
        NcTable {
            types: acc
                .into_iter()
                .map(|(sizes, (count, mob))| (sizes, count as f64, mob as f64))
                .collect(),
        }
    })
}

fn check_order(order: usize) -> Result<(), MomentError> {
    if order > MAX_ENUMERATION {
        return Err(MomentError::EnumerationBound {
            order,
            max: MAX_ENUMERATION,
        });
    }
    Ok(())
}

/// Moments of the standard semicircle through the recursion
/// `m_{r+1} = Σ_{k=0}^{r-1} m_k m_{r-1-k}`.
pub fn semicircle_moments(order: usize) -> Result<MomentSequence, MomentError> {
    if order < 2 {
        return Err(MomentError::TooShort(order));
    }
    let mut m = vec![0.0; order + 1];
    m[0] = 1.0;
    for r in 1..order {
        m[r + 1] = (0..r).map(|k| m[k] * m[r - 1 - k]).sum();
    }
    MomentSequence::new(m)
}

/// Free cumulants by Möbius inversion: `κ_n = Σ_{σ∈NC(n)} m_σ μ(σ, 1̂)`.
///
/// The sum runs on centered moments (so every σ with a singleton drops out)
/// in double-double arithmetic; `κ_1` is restored afterwards since
/// cumulants of order ≥ 2 are translation invariant.
pub fn moments_to_cumulants(m: &MomentSequence) -> Result<FreeCumulantSequence, MomentError> {
    check_order(m.order())?;
    let raw: Vec<Dd> = m.values().iter().map(|&v| Dd::from(v)).collect();
    let c = shift(&raw, -m.mean());
    let mut kappa = vec![m.mean()];
    for n in 2..=m.order() {
        kappa.push(table_sum(n, |_, mob| mob, |s| c[s]));
    }
    FreeCumulantSequence::new(kappa)
}

/// Moments from free cumulants: `m_n = Σ_{π∈NC(n)} Π_{V∈π} κ_{|V|}`.
///
/// Fails with [`MomentError::NotPositive`] when the cumulants do not come
/// from a probability measure.
pub fn cumulants_to_moments(k: &FreeCumulantSequence) -> Result<MomentSequence, MomentError> {
    check_order(k.order())?;
    let mut centered = vec![Dd::from(1.0), Dd::from(0.0)];
    for n in 2..=k.order() {
        let v = table_sum(n, |count, _| count, |s| Dd::from(k.get(s)));
        centered.push(Dd::from(v));
    }
    let shifted = shift(&centered, k.get(1));
    MomentSequence::new(shifted.iter().map(|d| d.value()).collect())
}

/// `Σ_types weight · Π_blocks entry(|V|)` over singleton-free types of `NC(n)`.
fn table_sum(n: usize, weight: impl Fn(f64, f64) -> f64, entry: impl Fn(usize) -> Dd) -> f64 {
    let mut acc = Dd::from(0.0);
    for (sizes, count, mob) in &nc_table(n).types {
        if sizes[0] == 1 {
            continue;
        }
        let mut term = Dd::from(weight(*count, *mob));
        for &s in sizes {
            term = term.mul(entry(s));
        }
        acc = acc.add(term);
    }
    acc.value()
}

/// Moments of the law translated by `c`: `Σ_i binom(k,i) c^i m_{k-i}`.
fn shift(values: &[Dd], c: f64) -> Vec<Dd> {
    if c == 0.0 {
        return values.to_vec();
    }
    (0..values.len())
        .map(|k| {
            let mut binom = 1.0;
            let mut power = Dd::from(1.0);
            let mut acc = Dd::from(0.0);
            for i in 0..=k {
                acc = acc.add(power.mul(values[k - i]).scale(binom));
                binom = binom * (k - i) as f64 / (i + 1) as f64;
                power = power.scale(c);
            }
            acc
        })
        .collect()
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }
}

impl Dd {
    fn value(self) -> f64 {
        self.hi + self.lo
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Self {
            hi: s,
            lo: (a - (s - bb)) + (b - bb),
        }
    }

    fn renormalize(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    fn add(self, other: Self) -> Self {
        let s = Self::two_sum(self.hi, other.hi);
        let t = Self::two_sum(self.lo, other.lo);
        let r = Self::renormalize(s.hi, s.lo + t.hi);
        Self::renormalize(r.hi, r.lo + t.lo)
    }

    fn mul(self, other: Self) -> Self {
        let p = self.hi * other.hi;
        let e = self.hi.mul_add(other.hi, -p);
        Self::renormalize(p, e + (self.hi * other.lo + self.lo * other.hi))
    }

    fn scale(self, b: f64) -> Self {
        self.mul(Self::from(b))
    }
}

/// Moments of `a ⊞ b` through additivity of free cumulants.
pub fn free_convolve_cumulants(a: &MomentSequence, b: &MomentSequence) -> Result<MomentSequence, MomentError> {
    if a.order() != b.order() {
        return Err(MomentError::Dimension {
            left: a.order(),
            right: b.order(),
        });
    }
    let ka = moments_to_cumulants(a)?;
    let kb = moments_to_cumulants(b)?;
    let sum = ka.values.iter().zip(&kb.values).map(|(x, y)| x + y).collect();
    cumulants_to_moments(&FreeCumulantSequence::new(sum)?)
}

/// Moments of `𝔇_r[μ]`: `m_j ↦ r^j m_j`.
pub fn dilate_moments(m: &MomentSequence, r: f64) -> Result<MomentSequence, MomentError> {
    if r == 0.0 {
        return Err(MomentError::DegenerateDilation);
    }
    let mut scale = 1.0;
    let values = m
        .values
        .iter()
        .map(|v| {
            let out = v * scale;
            scale *= r;
            out
        })
        .collect();
    MomentSequence::new(values)
}

/// `τ[(ab)^n]` for free `a`, `b`:
/// `Σ_{π∈NC(n)} Π_{V∈π} κ_{|V|}[a] · Π_{W∈K(π)} m_{|W|}[b]`.
pub fn mixed_moment(kappa_a: &FreeCumulantSequence, m_b: &MomentSequence, n: usize) -> Result<f64, MomentError> {
    if n == 0 || n > 8 {
        return Err(MomentError::EnumerationBound { order: n, max: 8 });
    }
    if kappa_a.order() < n {
        return Err(MomentError::Truncation {
            needed: n,
            available: kappa_a.order(),
        });
    }
    if m_b.order() < n {
        return Err(MomentError::Truncation {
            needed: n,
            available: m_b.order(),
        });
    }
    let mut total = 0.0;
    for pi in enumerate_nc(n)? {
        let k: f64 = pi.block_sizes().map(|s| kappa_a.get(s)).product();
        if k == 0.0 {
            continue;
        }
        let complement: NcPartition = pi.kreweras()?;
        let mb: f64 = complement.block_sizes().map(|s| m_b.get(s)).product();
        total += k * mb;
    }
    Ok(total)
}

/// Moments of the semicircle with mean `mean` and variance `variance`.
pub fn semicircle_moments_with(mean: f64, variance: f64, order: usize) -> Result<MomentSequence, MomentError> {
    if !(variance > 0.0) {
        return Err(MomentError::DegenerateLaw(variance));
    }
    let standard = semicircle_moments(order.max(2))?;
    // m_k = Σ_i binom(k,i) mean^{k-i} σ^i c_i, where only even i contribute,
    // so σ^i = variance^{i/2} stays exact for integer variances.
    let mut values = vec![0.0; order + 1];
    for (k, slot) in values.iter_mut().enumerate() {
        let mut binom = 1.0;
        let mut acc = 0.0;
        for i in 0..=k {
            if i % 2 == 0 {
                acc += binom * mean.powi((k - i) as i32) * variance.powi((i / 2) as i32) * standard.get(i);
            }
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
        *slot = acc;
    }
    MomentSequence::new(values)
}

/// `𝔤[m]`: the semicircle sharing the mean and variance of `m`, to the same order.
pub fn gauss_analog(m: &MomentSequence) -> Result<MomentSequence, MomentError> {
    let variance = m.variance();
    if !(variance > 0.0) {
        return Err(MomentError::DegenerateLaw(variance));
    }
    semicircle_moments_with(m.mean(), variance, m.order())
}

/// Moment matching rank: the largest `ℓ ≤ N` with `m_j = m_j[𝔤[m]]` for all `j ≤ ℓ`.
pub fn matching_rank(m: &MomentSequence) -> Result<usize, MomentError> {
    let g = gauss_analog(m)?;
    let first_mismatch = (0..=m.order()).find(|&j| {
        let (a, b) = (m.get(j), g.get(j));
        (a - b).abs() > MATCH_TOLERANCE * a.abs().max(b.abs()).max(1.0)
    });
    Ok(match first_mismatch {
        Some(j) => j - 1,
        None => m.order(),
    })
}

/// Moments of `P_θ*[μ] = 𝔇_{e^{-θ}}[μ] ⊞ 𝔇_{√(1-e^{-2θ})}[s]`.
///
/// At the cumulant level: `κ_2 ↦ e^{-2θ}κ_2 + 1 - e^{-2θ}` and
/// `κ_j ↦ e^{-jθ}κ_j` for `j ≠ 2`.
pub fn ou_evolve(m: &MomentSequence, theta: f64) -> Result<MomentSequence, MomentError> {
    if theta < 0.0 || theta.is_nan() {
        return Err(MomentError::NegativeTime(theta));
    }
    if theta == 0.0 {
        return Ok(m.clone());
    }
    let kappa = moments_to_cumulants(m)?;
    let decay = (-theta).exp();
    let mut scale = 1.0;
    let evolved = kappa
        .values
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            scale *= decay;
            if i == 1 {
                k * scale - (-2.0 * theta).exp_m1()
            } else {
                k * scale
            }
        })
        .collect();
    cumulants_to_moments(&FreeCumulantSequence::new(evolved)?)
}

/// Moments of a finitely supported law `Σ w_i δ_{x_i}`.
pub fn atomic_moments(atoms: &[(f64, f64)], order: usize) -> Result<MomentSequence, MomentError> {
    let mut values = vec![0.0; order + 1];
    for &(x, w) in atoms {
        let mut p = w;
        for slot in values.iter_mut() {
            *slot += p;
            p *= x;
        }
    }
    MomentSequence::new(values)
}
