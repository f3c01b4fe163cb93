//! The `R_t` semiring, relative (max,+) functions and their three
//! presentations: the max-plus function `φ`, the interpolant `φ_t` and the
//! positive rational function `f_t`.
//!
//! For `t > 1` the semiring `R_t` is the real line with
//!
//! ```text
//! x ⊕_t y = log_t(t^x + t^y),    x ⊗_t y = x + y
//! ```
//!
//! and `⊕_t → max` as `t → ∞`. A relative (max,+) function is a difference
//! of two maxima of affine forms with integer slopes; replacing `max` by `⊕_t`
//! gives `φ_t`, and conjugating `φ_t` by `log_t` gives the subtraction-free
//! rational function `f_t`. The gap `|φ − φ_t|` is at most `log_t M` where
//! `M` is the number of components.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TropicalError {
    #[error("semiring parameter must satisfy t > 1, got {0}")]
    InvalidParam(f64),
    #[error("⊕_t of an empty sequence")]
    EmptySum,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("presentation needs at least one plus term and one minus term")]
    EmptyPresentation,
    #[error("entry {index} is not strictly positive ({value})")]
    NonPositive { index: usize, value: f64 },
    #[error("offset {0} is not an integer and cannot be used in exact arithmetic")]
    InexactOffset(f64),
    #[error("P_N(c) requires c >= 1, got {0}")]
    InvalidLipschitz(f64),
    #[error("malformed offset {0:?}")]
    BadOffset(String),
}

/// Scalars the max-plus machinery can run on.
///
/// `f64` is the general case. `i64` and `Ratio<i64>` keep the automaton and
/// the tropical invariants exact, so that periodicity and conservation can be
/// asserted with zero tolerance.
pub trait Scalar: Copy + PartialOrd + Num + fmt::Debug + 'static {
    fn from_i64(v: i64) -> Self;
    fn to_f64(self) -> f64;
    /// Exact conversion of a real offset, `None` when not representable.
    fn from_offset(v: f64) -> Option<Self>;
    /// Whether values of this type are compared exactly.
    fn is_exact() -> bool;

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn abs_diff(self, other: Self) -> Self {
        if self >= other {
            self - other
        } else {
            other - self
        }
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn from_offset(v: f64) -> Option<Self> {
        Some(v)
    }
    fn is_exact() -> bool {
        false
    }
}

impl Scalar for i64 {
    fn from_i64(v: i64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn from_offset(v: f64) -> Option<Self> {
        (v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
    }
    fn is_exact() -> bool {
        true
    }
}

impl Scalar for Ratio<i64> {
    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v)
    }
    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
    fn from_offset(v: f64) -> Option<Self> {
        i64::from_offset(v).map(Ratio::from_integer)
    }
    fn is_exact() -> bool {
        true
    }
}

/// The base `t > 1` of the semiring `R_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiringParam {
    t: f64,
    #[serde(skip)]
    ln_t: f64,
}

impl SemiringParam {
    pub fn new(t: f64) -> Result<Self, TropicalError> {
        if !(t.is_finite() && t > 1.0) {
            return Err(TropicalError::InvalidParam(t));
        }
        Ok(Self { t, ln_t: t.ln() })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn ln_t(&self) -> f64 {
        self.ln_t
    }

    /// `log_t v`.
    pub fn log(&self, v: f64) -> f64 {
        v.ln() / self.ln_t
    }

    /// `t^x`.
    pub fn pow(&self, x: f64) -> f64 {
        (x * self.ln_t).exp()
    }
}

impl<'de> Deserialize<'de> for SemiringParam {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            t: f64,
        }
        let raw = Raw::deserialize(d)?;
        SemiringParam::new(raw.t).map_err(serde::de::Error::custom)
    }
}

/// `v_1 ⊕_t … ⊕_t v_m = log_t Σ t^{v_i}`, evaluated as
/// `max v + log_t Σ t^{v_i − max v}` so nothing overflows.
pub fn oplus(t: SemiringParam, values: &[f64]) -> Result<f64, TropicalError> {
    let top = values
        .iter()
        .copied()
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .ok_or(TropicalError::EmptySum)?;
    let tail: f64 = values.iter().map(|&v| ((v - top) * t.ln_t).exp()).sum();
    Ok(top + tail.ln() / t.ln_t)
}

/// `0 ⊕_t a`, the only sum the pentagram dynamics needs.
pub(crate) fn oplus_zero(t: SemiringParam, a: f64) -> f64 {
    a.max(0.0) + (-(a.abs()) * t.ln_t).exp().ln_1p() / t.ln_t
}

/// One affine form `offset + slope·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineTerm {
    pub offset: f64,
    pub slope: Vec<i64>,
}

impl AffineTerm {
    pub fn new(offset: f64, slope: Vec<i64>) -> Self {
        Self { offset, slope }
    }

    fn eval<T: Scalar>(&self, x: &[T]) -> Result<T, TropicalError> {
        let offset = T::from_offset(self.offset).ok_or(TropicalError::InexactOffset(self.offset))?;
        Ok(self
            .slope
            .iter()
            .zip(x)
            .filter(|(a, _)| **a != 0)
            .fold(offset, |acc, (&a, &xi)| acc + T::from_i64(a) * xi))
    }

    fn l1(&self) -> i64 {
        self.slope.iter().map(|a| a.abs()).sum()
    }
}

/// A relative (max,+) function
/// `max_k(α_k + a_k·x) − max_k(β_k + b_k·x)`.
///
/// A pure maximum is stored with the single minus term `0 + 0·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxPlusPresentation {
    plus: Vec<AffineTerm>,
    minus: Vec<AffineTerm>,
    arity: usize,
}

impl MaxPlusPresentation {
    pub fn new(plus: Vec<AffineTerm>, minus: Vec<AffineTerm>) -> Result<Self, TropicalError> {
        let arity = plus
            .first()
            .or(minus.first())
            .map(|t| t.slope.len())
            .ok_or(TropicalError::EmptyPresentation)?;
        if plus.is_empty() || minus.is_empty() {
            return Err(TropicalError::EmptyPresentation);
        }
        for term in plus.iter().chain(&minus) {
            if term.slope.len() != arity {
                return Err(TropicalError::Dimension { expected: arity, got: term.slope.len() });
            }
            if !term.offset.is_finite() {
                return Err(TropicalError::BadOffset(term.offset.to_string()));
            }
        }
        Ok(Self { plus, minus, arity })
    }

    /// `max(plus terms)` with the trivial denominator.
    pub fn pure_max(plus: Vec<AffineTerm>) -> Result<Self, TropicalError> {
        let arity = plus.first().map(|t| t.slope.len()).ok_or(TropicalError::EmptyPresentation)?;
        Self::new(plus, vec![AffineTerm::new(0.0, vec![0; arity])])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn plus_terms(&self) -> &[AffineTerm] {
        &self.plus
    }

    pub fn minus_terms(&self) -> &[AffineTerm] {
        &self.minus
    }

    /// `M = m·l`.
    pub fn component_count(&self) -> usize {
        self.plus.len() * self.minus.len()
    }

    /// Sup-metric Lipschitz bound `max‖a_k‖₁ + max‖b_k‖₁`. Not necessarily tight.
    pub fn lipschitz_constant(&self) -> i64 {
        let top = |terms: &[AffineTerm]| terms.iter().map(AffineTerm::l1).max().unwrap_or(0);
        top(&self.plus) + top(&self.minus)
    }

    fn check_dim(&self, got: usize) -> Result<(), TropicalError> {
        if got != self.arity {
            return Err(TropicalError::Dimension { expected: self.arity, got });
        }
        Ok(())
    }

    /// `φ(x)`. Exact for `i64` / `Ratio<i64>` inputs with integral offsets.
    pub fn eval_maxplus<T: Scalar>(&self, x: &[T]) -> Result<T, TropicalError> {
        self.check_dim(x.len())?;
        let top = |terms: &[AffineTerm]| -> Result<T, TropicalError> {
            let mut values = terms.iter().map(|t| t.eval(x));
            let first = values.next().ok_or(TropicalError::EmptyPresentation)??;
            values.try_fold(first, |acc, v| Ok(acc.max_of(v?)))
        };
        Ok(top(&self.plus)? - top(&self.minus)?)
    }

    /// `φ_t(x)`: the same presentation with `max` replaced by `⊕_t`.
    pub fn eval_rt(&self, t: SemiringParam, x: &[f64]) -> Result<f64, TropicalError> {
        self.check_dim(x.len())?;
        let sum = |terms: &[AffineTerm]| -> Result<f64, TropicalError> {
            let values = terms.iter().map(|term| term.eval(x)).collect::<Result<Vec<f64>, _>>()?;
            oplus(t, &values)
        };
        Ok(sum(&self.plus)? - sum(&self.minus)?)
    }

    /// `f_t(z) = Σ t^{α_k} z^{a_k} / Σ t^{β_k} z^{b_k}` on the positive orthant.
    pub fn eval_elementary(&self, t: SemiringParam, z: &[f64]) -> Result<f64, TropicalError> {
        self.check_dim(z.len())?;
        if let Some((index, &value)) = z.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(TropicalError::NonPositive { index, value });
        }
        let sum = |terms: &[AffineTerm]| -> f64 {
            terms
                .iter()
                .map(|term| {
                    term.slope
                        .iter()
                        .zip(z)
                        .fold(t.pow(term.offset), |acc, (&a, &zi)| acc * zi.powi(a as i32))
                })
                .sum()
        };
        Ok(sum(&self.plus) / sum(&self.minus))
    }
}

/// `P_N(c) = (c^N − 1)/(c − 1)` for `c > 1` and `N` for `c = 1`.
///
/// Satisfies `c·P_N(c) + 1 = P_{N+1}(c)`.
pub fn p_number(n: u32, c: f64) -> Result<f64, TropicalError> {
    if !(c >= 1.0) {
        return Err(TropicalError::InvalidLipschitz(c));
    }
    if c == 1.0 {
        return Ok(n as f64);
    }
    Ok((c.powi(n as i32) - 1.0) / (c - 1.0))
}

/// `ln P_N(c)`, finite for exponents where `P_N(c)` itself overflows.
/// Returns `-inf` for `N = 0`.
pub fn ln_p_number(n: u32, c: f64) -> Result<f64, TropicalError> {
    if !(c >= 1.0) {
        return Err(TropicalError::InvalidLipschitz(c));
    }
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    if c == 1.0 {
        return Ok((n as f64).ln());
    }
    let n = n as f64;
    // c^N − 1 = c^N (1 − c^{−N})
    Ok(n * c.ln() + (-(-n * c.ln()).exp()).ln_1p() - (c - 1.0).ln())
}

/// Integer `P_N(c)`, `None` on overflow.
pub fn p_number_exact(n: u32, c: u64) -> Option<u128> {
    if c == 0 {
        return None;
    }
    (0..n).try_fold(0u128, |acc, _| acc.checked_mul(c as u128)?.checked_add(1))
}

// JSON: {"plus": [["alpha", [a...]], ...], "minus": [...]}, offsets as
// decimal strings so integral offsets survive without a trailing ".0".

fn format_offset(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OffsetRepr {
    Text(String),
    Number(f64),
}

impl OffsetRepr {
    fn value(&self) -> Result<f64, TropicalError> {
        match self {
            OffsetRepr::Number(v) => Ok(*v),
            OffsetRepr::Text(s) => f64::from_str(s.trim()).map_err(|_| TropicalError::BadOffset(s.clone())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PresentationRepr {
    plus: Vec<(OffsetRepr, Vec<i64>)>,
    minus: Vec<(OffsetRepr, Vec<i64>)>,
}

impl Serialize for MaxPlusPresentation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let side = |terms: &[AffineTerm]| {
            terms
                .iter()
                .map(|t| (OffsetRepr::Text(format_offset(t.offset)), t.slope.clone()))
                .collect()
        };
        PresentationRepr { plus: side(&self.plus), minus: side(&self.minus) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MaxPlusPresentation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PresentationRepr::deserialize(d)?;
        let side = |terms: Vec<(OffsetRepr, Vec<i64>)>| -> Result<Vec<AffineTerm>, TropicalError> {
            terms.into_iter().map(|(o, a)| Ok(AffineTerm::new(o.value()?, a))).collect()
        };
        let build = || MaxPlusPresentation::new(side(repr.plus)?, side(repr.minus)?);
        build().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn t(v: f64) -> SemiringParam {
        SemiringParam::new(v).unwrap()
    }

    /// `max(0, x1 + x2)`
    fn max0_sum() -> MaxPlusPresentation {
        MaxPlusPresentation::pure_max(vec![AffineTerm::new(0.0, vec![0, 0]), AffineTerm::new(0.0, vec![1, 1])]).unwrap()
    }

    #[test]
    fn param_must_exceed_one() {
        assert!(SemiringParam::new(1.0).is_err());
        assert!(SemiringParam::new(0.5).is_err());
        assert!(SemiringParam::new(f64::NAN).is_err());
        assert!(SemiringParam::new(1.0001).is_ok());
    }

    #[test]
    fn oplus_examples() {
        assert_eq!(oplus(t(2.0), &[0.0, 0.0]).unwrap(), 1.0);
        for a in [-3.5, 0.0, 17.25] {
            assert_eq!(oplus(t(7.0), &[a]).unwrap(), a);
        }
        assert_relative_eq!(oplus(t(10.0), &[0.0, 3.0]).unwrap(), 3.000434077479319, epsilon = 1e-12);
        assert_eq!(oplus(t(2.0), &[]), Err(TropicalError::EmptySum));
    }

    #[test]
    fn oplus_does_not_overflow() {
        let v = oplus(t(2.0), &[1.0e6, 1.0e6 - 1.0, -1.0e6]).unwrap();
        assert_relative_eq!(v, 1.0e6 + (1.5f64).log2(), epsilon = 1e-9);
        assert_eq!(oplus_zero(t(2.0), 1.0e6), 1.0e6);
        assert_relative_eq!(oplus_zero(t(2.0), 0.0), 1.0);
    }

    #[test]
    fn eval_maxplus_examples() {
        let p = max0_sum();
        assert_eq!(p.eval_maxplus(&[-1i64, 0]).unwrap(), 0);
        assert_eq!(p.eval_maxplus(&[2i64, 3]).unwrap(), 5);
        let q = MaxPlusPresentation::new(vec![AffineTerm::new(0.0, vec![0, 0])], vec![AffineTerm::new(1.0, vec![1, 0])]).unwrap();
        assert_eq!(q.eval_maxplus(&[4i64, 0]).unwrap(), -5);
        assert_eq!(q.eval_maxplus(&[4.0f64, 0.0]).unwrap(), -5.0);
        assert_eq!(
            p.eval_maxplus(&[1.0f64]),
            Err(TropicalError::Dimension { expected: 2, got: 1 })
        );
    }

    #[test]
    fn exact_eval_rejects_fractional_offset() {
        let p = MaxPlusPresentation::pure_max(vec![AffineTerm::new(0.5, vec![1])]).unwrap();
        assert_eq!(p.eval_maxplus(&[1i64]), Err(TropicalError::InexactOffset(0.5)));
        assert_eq!(p.eval_maxplus(&[1.0f64]).unwrap(), 1.5);
    }

    #[test]
    fn eval_rt_examples() {
        let p = MaxPlusPresentation::pure_max(vec![AffineTerm::new(0.0, vec![0]), AffineTerm::new(0.0, vec![1])]).unwrap();
        assert_eq!(p.eval_rt(t(2.0), &[0.0]).unwrap(), 1.0);
        assert_relative_eq!(p.eval_rt(t(2.0), &[10.0]).unwrap(), 10.001408194392809, epsilon = 1e-12);
    }

    #[test]
    fn eval_elementary_examples() {
        let p = max0_sum();
        assert_eq!(p.eval_elementary(t(3.0), &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(p.eval_elementary(t(3.0), &[2.0, 4.0]).unwrap(), 9.0);
        assert!(matches!(
            p.eval_elementary(t(3.0), &[2.0, 0.0]),
            Err(TropicalError::NonPositive { index: 1, .. })
        ));
    }

    #[test]
    fn presentation_shape() {
        let p = max0_sum();
        assert_eq!(p.component_count(), 2);
        assert_eq!(p.lipschitz_constant(), 2);
        assert_eq!(MaxPlusPresentation::new(vec![], vec![]), Err(TropicalError::EmptyPresentation));
        assert!(MaxPlusPresentation::new(vec![AffineTerm::new(0.0, vec![1])], vec![AffineTerm::new(0.0, vec![1, 2])]).is_err());
    }

    #[test]
    fn p_number_examples() {
        assert_eq!(p_number(2, 5.0).unwrap(), 6.0);
        assert_eq!(p_number(3, 5.0).unwrap(), 31.0);
        for n in 0..10 {
            assert_eq!(p_number(n, 1.0).unwrap(), n as f64);
        }
        assert!(p_number(3, 0.5).is_err());
        assert_eq!(p_number_exact(5, 5), Some(781));
        assert_eq!(p_number_exact(0, 5), Some(0));
    }

    #[test]
    fn p_number_recurrence_is_exact() {
        for c in [1u64, 2, 5] {
            for n in 0..=20 {
                let here = p_number_exact(n, c).unwrap();
                assert_eq!(c as u128 * here + 1, p_number_exact(n + 1, c).unwrap());
                assert_eq!(p_number(n, c as f64).unwrap(), here as f64);
            }
        }
    }

    #[test]
    fn log_form_matches_and_stays_finite() {
        for n in 1..=20 {
            assert_relative_eq!(ln_p_number(n, 5.0).unwrap(), p_number(n, 5.0).unwrap().ln(), max_relative = 1e-12);
        }
        let big = ln_p_number(64, 5.0).unwrap();
        assert!(big.is_finite());
        assert_relative_eq!(big, 64.0 * 5f64.ln() - 4f64.ln(), max_relative = 1e-12);
        assert_eq!(ln_p_number(0, 5.0).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn json_keeps_integer_offsets_as_strings() {
        let p = MaxPlusPresentation::new(
            vec![AffineTerm::new(3.0, vec![1, 0]), AffineTerm::new(-0.25, vec![0, 2])],
            vec![AffineTerm::new(0.0, vec![0, 0])],
        )
        .unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(text, r#"{"plus":[["3",[1,0]],["-0.25",[0,2]]],"minus":[["0",[0,0]]]}"#);
        let back: MaxPlusPresentation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        let numeric: MaxPlusPresentation = serde_json::from_str(r#"{"plus":[[1,[1]]],"minus":[["0",[0]]]}"#).unwrap();
        assert_eq!(numeric.eval_maxplus(&[2i64]).unwrap(), 3);
        assert!(serde_json::from_str::<MaxPlusPresentation>(r#"{"plus":[],"minus":[["0",[0]]]}"#).is_err());
    }
}
