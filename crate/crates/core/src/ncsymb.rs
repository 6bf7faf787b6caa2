//! Noncommutative polynomials in two letters `A`, `R` with coefficients in
//! `ℂ[z]`, and a matrix oracle for the resolvent expansion.
//!
//! `z` is a commuting scalar, never a letter. Words are stored as runs
//! `[(letter, exponent)]` with adjacent equal letters merged.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Term count above which [`expand_power`] gives up.
pub const MAX_TERMS: usize = 100_000;
/// Largest exponent accepted by [`expand_power`].
pub const MAX_POWER: u32 = 6;
/// Largest matrix dimension accepted by [`eval_matrix`].
pub const MAX_DIMENSION: usize = 12;
/// Condition number above which a resolvent is treated as singular.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbError {
    #[error("expansion exceeded {MAX_TERMS} terms")]
    BlowUp,
    #[error("exponent {0} above {MAX_POWER}")]
    Power(u32),
    #[error("dimension mismatch: A is {a}x{a}, R is {r_rows}x{r_cols}")]
    Dimension { a: usize, r_rows: usize, r_cols: usize },
    #[error("dimension {0} above {MAX_DIMENSION}")]
    TooLarge(usize),
    #[error("resolvent {which} has condition number {condition:.3e}")]
    Conditioning { which: &'static str, condition: f64 },
    #[error("exponent q = {0} outside 1..=5")]
    Exponent(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    A,
    R,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::A => "A",
            Letter::R => "R",
        })
    }
}

/// A word as maximal runs of equal letters. The empty word is the unit.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(Vec<(Letter, u32)>);

impl Word {
    pub fn unit() -> Self {
        Self(Vec::new())
    }

    pub fn letter(l: Letter) -> Self {
        Self(vec![(l, 1)])
    }

    /// Builds a word from single letters, merging runs.
    pub fn from_letters(letters: &[Letter]) -> Self {
        let mut w = Self::unit();
        for &l in letters {
            w.push(l, 1);
        }
        w
    }

    fn push(&mut self, l: Letter, e: u32) {
        if e == 0 {
            return;
        }
        match self.0.last_mut() {
            Some((last, exp)) if *last == l => *exp += e,
            _ => self.0.push((l, e)),
        }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut w = self.clone();
        for &(l, e) in &other.0 {
            w.push(l, e);
        }
        w
    }

    pub fn runs(&self) -> &[(Letter, u32)] {
        &self.0
    }

    /// Total number of letters.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|r| r.1).sum()
    }

    /// The exponents `(i_1, i_2, …)` of `Υ_1` (first run `A`) or `Υ_2`
    /// (first run `R`), padded with a trailing zero to even length.
    pub fn multi_index(&self) -> Vec<u32> {
        let mut idx: Vec<u32> = self.0.iter().map(|r| r.1).collect();
        if idx.len() % 2 == 1 {
            idx.push(0);
        }
        idx
    }

    /// `|𝕚|`: number of alternating `(A, R)` (or `(R, A)`) pairs.
    pub fn pair_count(&self) -> usize {
        self.0.len().div_ceil(2)
    }

    /// `Υ_1` words start with `A`, `Υ_2` words with `R`; `None` for the unit.
    pub fn upsilon_kind(&self) -> Option<u8> {
        self.0.first().map(|r| if r.0 == Letter::A { 1 } else { 2 })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("1");
        }
        for &(l, e) in &self.0 {
            if e == 1 {
                write!(f, "{l}")?;
            } else {
                write!(f, "{l}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Polynomial in `z` with complex coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZPoly(Vec<C64>);

impl ZPoly {
    pub fn constant(c: C64) -> Self {
        Self(vec![c]).trimmed()
    }

    /// `c z^k`.
    pub fn monomial(c: C64, k: usize) -> Self {
        let mut v = vec![C64::new(0.0, 0.0); k + 1];
        v[k] = c;
        Self(v).trimmed()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            self.0.pop();
        }
        self
    }

    fn add(&self, other: &Self) -> Self {
        let n = self.0.len().max(other.0.len());
        let zero = C64::new(0.0, 0.0);
        Self(
            (0..n)
                .map(|i| *self.0.get(i).unwrap_or(&zero) + *other.0.get(i).unwrap_or(&zero))
                .collect(),
        )
        .trimmed()
    }

    fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::default();
        }
        let mut v = vec![C64::new(0.0, 0.0); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        Self(v).trimmed()
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.0.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c)
    }
}

impl fmt::Display for ZPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.0.iter().enumerate() {
            if *c == C64::new(0.0, 0.0) {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if c.im == 0.0 {
                write!(f, "{}", c.re)?;
            } else {
                write!(f, "({c})")?;
            }
            match k {
                0 => {}
                1 => f.write_str("z")?,
                _ => write!(f, "z^{k}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// `Σ_w c_w(z) w` in canonical form: merged runs, no zero coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NcPolynomial {
    terms: BTreeMap<Word, ZPoly>,
}

impl NcPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::term(Word::unit(), ZPoly::constant(C64::new(1.0, 0.0)))
    }

    pub fn letter(l: Letter) -> Self {
        Self::term(Word::letter(l), ZPoly::constant(C64::new(1.0, 0.0)))
    }

    /// `c(z) · w`.
    pub fn term(w: Word, c: ZPoly) -> Self {
        let mut p = Self::zero();
        p.add_term(w, c);
        p
    }

    fn add_term(&mut self, w: Word, c: ZPoly) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.get(&w) {
            Some(existing) => existing.add(&c),
            None => c,
        };
        if sum.is_zero() {
            self.terms.remove(&w);
        } else {
            self.terms.insert(w, sum);
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &ZPoly)> {
        self.terms.iter()
    }

    /// Coefficient of `w`, zero if absent.
    pub fn coefficient(&self, w: &Word) -> ZPoly {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &ZPoly) -> Self {
        let mut out = Self::zero();
        for (w, k) in &self.terms {
            out.add_term(w.clone(), k.mul(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SymbError> {
        let mut out = Self::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_term(w1.concat(w2), c1.mul(c2));
                if out.len() > MAX_TERMS {
                    return Err(SymbError::BlowUp);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for NcPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "[{c}]{w}")?;
        }
        Ok(())
    }
}

fn real(c: f64) -> ZPoly {
    ZPoly::constant(C64::new(c, 0.0))
}

/// `Δ(a, r) = 2𝔰[(z - a) r] - r² = 2zR - AR - RA - R²`.
pub fn delta_poly() -> NcPolynomial {
    let mut p = NcPolynomial::zero();
    p.add_term(Word::letter(Letter::R), ZPoly::monomial(C64::new(2.0, 0.0), 1));
    p.add_term(Word::from_letters(&[Letter::A, Letter::R]), real(-1.0));
    p.add_term(Word::from_letters(&[Letter::R, Letter::A]), real(-1.0));
    p.add_term(Word::from_letters(&[Letter::R, Letter::R]), real(-1.0));
    p
}

/// `p^j`, canonically expanded.
pub fn expand_power(p: &NcPolynomial, j: u32) -> Result<NcPolynomial, SymbError> {
    if j > MAX_POWER {
        return Err(SymbError::Power(j));
    }
    let mut out = NcPolynomial::one();
    for _ in 0..j {
        out = out.mul(p)?;
    }
    Ok(out)
}

/// `A · Δ(A, R)`.
pub fn a_delta() -> NcPolynomial {
    NcPolynomial::letter(Letter::A).mul(&delta_poly()).expect("four terms")
}

/// Substitutes matrices for `A`, `R` and a complex number for `z`.
pub fn eval_matrix(p: &NcPolynomial, a: &CMatrix, r: &CMatrix, z: C64) -> Result<CMatrix, SymbError> {
    let d = check_pair(a, r)?;
    let mut out = CMatrix::zeros(d, d);
    for (w, c) in p.terms() {
        let mut m = CMatrix::identity(d, d);
        for &(l, e) in w.runs() {
            let x = if l == Letter::A { a } else { r };
            for _ in 0..e {
                m = &m * x;
            }
        }
        out += m * c.eval(z);
    }
    Ok(out)
}

fn check_pair(a: &CMatrix, r: &CMatrix) -> Result<usize, SymbError> {
    let d = a.nrows();
    if a.ncols() != d || r.nrows() != d || r.ncols() != d {
        return Err(SymbError::Dimension {
            a: d,
            r_rows: r.nrows(),
            r_cols: r.ncols(),
        });
    }
    if d > MAX_DIMENSION {
        return Err(SymbError::TooLarge(d));
    }
    Ok(d)
}

/// 2-norm condition number.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `g(X) = ((z - X)^{-1})²` after a conditioning check on `z - X`.
fn squared_resolvent(x: &CMatrix, z: C64, which: &'static str) -> Result<CMatrix, SymbError> {
    let d = x.nrows();
    let shifted = CMatrix::identity(d, d) * z - x;
    let condition = condition_number(&shifted);
    if !(condition < MAX_CONDITION) {
        return Err(SymbError::Conditioning { which, condition });
    }
    let inv = shifted.try_inverse().ok_or(SymbError::Conditioning {
        which,
        condition: f64::INFINITY,
    })?;
    Ok(&inv * &inv)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, c| a.max(c.norm()))
}

/// Max-abs entry of
/// `g(A+R) - [g(A+R)(Δ g(A))^q + Σ_{j<q} g(A)(Δ g(A))^j]`
/// with `g(X) = ((z - X)^{-1})²`.
pub fn resolvent_lemma_check(a: &CMatrix, r: &CMatrix, z: C64, q: usize) -> Result<f64, SymbError> {
    if q == 0 || q > 5 {
        return Err(SymbError::Exponent(q));
    }
    let d = check_pair(a, r)?;
    let g_a = squared_resolvent(a, z, "z - A")?;
    let g_ar = squared_resolvent(&(a + r), z, "z - A - R")?;
    let delta = eval_matrix(&delta_poly(), a, r, z)?;
    let step = &delta * &g_a;
    let mut power = CMatrix::identity(d, d);
    let mut expansion = CMatrix::zeros(d, d);
    for _ in 0..q {
        expansion += &g_a * &power;
        power = &power * &step;
    }
    expansion += &g_ar * &power;
    Ok(max_abs(&(g_ar - expansion)))
}

/// Max-abs entry of `Δ(A, R) - [(z - A)² - (z - A - R)²]`.
pub fn delta_identity_residual(a: &CMatrix, r: &CMatrix, z: C64) -> Result<f64, SymbError> {
    let d = check_pair(a, r)?;
    let za = CMatrix::identity(d, d) * z - a;
    let zar = &za - r;
    let direct = &za * &za - &zar * &zar;
    Ok(max_abs(&(eval_matrix(&delta_poly(), a, r, z)? - direct)))
}

fn unit_disc<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    loop {
        let (x, y) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if x * x + y * y < 1.0 {
            return C64::new(x, y);
        }
    }
}

/// `d×d` matrix with entries uniform in the unit disc.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| unit_disc(rng))
}

/// `(A, R)` with `A` Hermitian-symmetrized, resampled until both
/// `z - A` and `z - A - R` have condition number below [`MAX_CONDITION`].
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, d: usize, z: C64) -> (CMatrix, CMatrix) {
    loop {
        let m = random_matrix(rng, d);
        let a = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let r = random_matrix(rng, d);
        let id = CMatrix::identity(d, d);
        let ok =
            condition_number(&(&id * z - &a)) < MAX_CONDITION && condition_number(&(&id * z - &a - &r)) < MAX_CONDITION;
        if ok {
            return (a, r);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use Letter::{A, R};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn w(letters: &[Letter]) -> Word {
        Word::from_letters(letters)
    }

    #[test]
    fn words_are_canonical() {
        assert_eq!(w(&[A, A, R]).runs(), &[(A, 2), (R, 1)]);
        assert_eq!(w(&[A]).concat(&w(&[A, R])), w(&[A, A, R]));
        assert_eq!(w(&[A, R, A]).multi_index(), vec![1, 1, 1, 0]);
        assert_eq!(w(&[A, R, A]).pair_count(), 2);
        assert_eq!(w(&[R, A]).upsilon_kind(), Some(2));
        assert_eq!(Word::unit().upsilon_kind(), None);
        assert_eq!(w(&[A, A, R, R, R]).to_string(), "A^2R^3");
    }

    #[test]
    fn delta_coefficients() {
        let d = delta_poly();
        assert_eq!(d.len(), 4);
        assert_eq!(d.coefficient(&w(&[A, R])), real(-1.0));
        assert_eq!(d.coefficient(&w(&[R, A])), real(-1.0));
        assert_eq!(d.coefficient(&w(&[R, R])), real(-1.0));
        assert_eq!(d.coefficient(&w(&[R])), ZPoly::monomial(c(2.0, 0.0), 1));
    }

    #[test]
    fn delta_from_symmetrization() {
        // 2·½[(z - A)R + R(z - A)] - R² built from letters.
        let z = NcPolynomial::term(Word::unit(), ZPoly::monomial(c(1.0, 0.0), 1));
        let za = z.add(&NcPolynomial::letter(A).scale(&real(-1.0)));
        let r = NcPolynomial::letter(R);
        let sym = za.mul(&r).unwrap().add(&r.mul(&za).unwrap());
        let built = sym.add(&r.mul(&r).unwrap().scale(&real(-1.0)));
        assert_eq!(built, delta_poly());
    }

    #[test]
    fn expansion_examples() {
        assert_eq!(expand_power(&a_delta(), 0).unwrap(), NcPolynomial::one());
        let one = expand_power(&a_delta(), 1).unwrap();
        assert_eq!(one.len(), 4);
        assert_eq!(one.coefficient(&w(&[A, R])), ZPoly::monomial(c(2.0, 0.0), 1));
        assert_eq!(one.coefficient(&w(&[A, A, R])), real(-1.0));
        assert_eq!(one.coefficient(&w(&[A, R, A])), real(-1.0));
        assert_eq!(one.coefficient(&w(&[A, R, R])), real(-1.0));
        assert!(matches!(expand_power(&a_delta(), 7), Err(SymbError::Power(7))));
    }

    #[test]
    fn expansion_support_condition() {
        for j in 1..=6u32 {
            let p = expand_power(&a_delta(), j).unwrap();
            for (word, coeff) in p.terms() {
                assert!(word.pair_count() <= j as usize + 1);
                if j >= 2 {
                    assert!(word.pair_count() < 2 * j as usize, "j = {j}, {word}");
                }
                assert_eq!(word.upsilon_kind(), Some(1));
                // z only enters through 2zR, at most once per factor.
                assert!(coeff.coefficients().len() <= j as usize + 1);
            }
        }
        // At j = 1 the word ARA already has two pairs.
        assert_eq!(w(&[A, R, A]).pair_count(), 2);
    }

    #[test]
    fn expansion_matches_matrix_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (a, r) = random_instance(&mut rng, 3, c(2.5, 0.5));
        let z = c(0.3, -1.2);
        let base = eval_matrix(&a_delta(), &a, &r, z).unwrap();
        let mut power = CMatrix::identity(3, 3);
        for j in 0..=4 {
            let p = eval_matrix(&expand_power(&a_delta(), j).unwrap(), &a, &r, z).unwrap();
            assert!(max_abs(&(p - &power)) < 1e-9 * (1.0 + max_abs(&power)));
            power = &power * &base;
        }
    }

    #[test]
    fn eval_examples() {
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0, 0.0), c(-2.0, 0.0)]));
        let r = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5, 0.0), c(3.0, 0.0)]));
        let one = eval_matrix(&NcPolynomial::one(), &a, &r, c(1.0, 1.0)).unwrap();
        assert_eq!(one, CMatrix::identity(2, 2));
        let d = eval_matrix(&delta_poly(), &a, &r, c(0.0, 0.0)).unwrap();
        for i in 0..2 {
            let (ai, ri) = (a[(i, i)], r[(i, i)]);
            assert!((d[(i, i)] - (-2.0 * ai * ri - ri * ri)).norm() < 1e-15);
        }
        assert_eq!(d[(0, 1)], c(0.0, 0.0));
        let bad = CMatrix::zeros(3, 3);
        assert!(matches!(
            eval_matrix(&delta_poly(), &a, &bad, c(0.0, 0.0)),
            Err(SymbError::Dimension { .. })
        ));
        let big = CMatrix::zeros(13, 13);
        assert!(matches!(
            eval_matrix(&delta_poly(), &big, &big, c(0.0, 0.0)),
            Err(SymbError::TooLarge(13))
        ));
    }

    #[test]
    fn delta_identity_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2, 4, 6] {
            let a = random_matrix(&mut rng, d);
            let r = random_matrix(&mut rng, d);
            assert!(delta_identity_residual(&a, &r, c(2.0, 1.0)).unwrap() < 1e-12);
        }
    }

    #[test]
    fn homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 4);
        let r = random_matrix(&mut rng, 4);
        let z = c(0.7, 0.2);
        let p = delta_poly();
        let q = a_delta().add(&NcPolynomial::letter(R));
        let lhs = eval_matrix(&p.mul(&q).unwrap(), &a, &r, z).unwrap();
        let rhs = eval_matrix(&p, &a, &r, z).unwrap() * eval_matrix(&q, &a, &r, z).unwrap();
        assert!(max_abs(&(lhs - rhs)) < 1e-11);
    }

    #[test]
    fn scalar_resolvent_lemma() {
        let a = CMatrix::from_element(1, 1, c(0.0, 0.0));
        let r = CMatrix::from_element(1, 1, c(1.0, 0.0));
        let z = c(3.0, 0.0);
        let delta = eval_matrix(&delta_poly(), &a, &r, z).unwrap();
        assert_eq!(delta[(0, 0)], c(5.0, 0.0));
        assert!(resolvent_lemma_check(&a, &r, z, 1).unwrap() < 1e-15);
        // 1/4 = (1/4)(5)(1/9) + 1/9
        assert!((0.25f64 - (0.25 * 5.0 / 9.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn zero_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, _) = random_instance(&mut rng, 4, c(2.5, 0.5));
        let r = CMatrix::zeros(4, 4);
        assert_eq!(resolvent_lemma_check(&a, &r, c(2.5, 0.5), 1).unwrap(), 0.0);
    }

    #[test]
    fn resolvent_lemma_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let z = c(2.5, 0.5);
        for _ in 0..5 {
            let (a, r) = random_instance(&mut rng, 6, z);
            for q in 1..=3 {
                let res = resolvent_lemma_check(&a, &r, z, q).unwrap();
                assert!(res < 1e-9, "q = {q}: {res}");
            }
        }
    }

    #[test]
    fn resolvent_errors() {
        let a = CMatrix::from_element(1, 1, c(1.0, 0.0));
        let r = CMatrix::from_element(1, 1, c(0.0, 0.0));
        assert!(matches!(
            resolvent_lemma_check(&a, &r, c(1.0, 0.0), 1),
            Err(SymbError::Conditioning { .. })
        ));
        assert!(matches!(
            resolvent_lemma_check(&a, &r, c(3.0, 0.0), 6),
            Err(SymbError::Exponent(6))
        ));
        assert!(matches!(
            resolvent_lemma_check(&a, &r, c(3.0, 0.0), 0),
            Err(SymbError::Exponent(0))
        ));
    }

    #[test]
    fn blow_up_guard() {
        // (A + R)^k has 2^k words; 2^17 exceeds the cap.
        let sum = NcPolynomial::letter(A).add(&NcPolynomial::letter(R));
        let mut p = NcPolynomial::one();
        let mut hit = false;
        for _ in 0..17 {
            match p.mul(&sum) {
                Ok(next) => p = next,
                Err(SymbError::BlowUp) => {
                    hit = true;
                    break;
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(hit);
    }
}
