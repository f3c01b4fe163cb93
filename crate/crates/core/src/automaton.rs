//! The pentagram automaton `φ` on `R^{2n}`,
//!
//! ```text
//! x_i ← x_i     + max(0, x_{i−1}+y_{i−1}) − max(0, x_{i+1}+y_{i+1})
//! y_i ← y_{i+1} + max(0, x_{i+2}+y_{i+2}) − max(0, x_i+y_i)
//! ```
//!
//! its `R_t` interpolant `φ_t` (each `max(0, ·)` replaced by `0 ⊕_t ·`),
//! periodicity detection, and the exponential lifts back to the domains of
//! `F` and `T`.
//!
//! `φ_t` is exactly `log_t ∘ F ∘ t^(·)`, and `|φ − φ_t| ≤ log_t 4`
//! componentwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{iterate, Block, DynamicsError, LogPositiveState, PositiveState, SignedState};
use crate::tropical::{oplus_zero, AffineTerm, MaxPlusPresentation, Scalar, SemiringParam};

/// `|x ln t|` above this cannot be exponentiated in `f64`.
pub const MAX_EXPONENT: f64 = 700.0;
/// Sup-metric tolerance for periodicity of floating-point states.
pub const PERIOD_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutomatonError {
    #[error("state needs n >= 5 with matching block lengths (x: {x}, y: {y})")]
    Shape { x: usize, y: usize },
    #[error("exponent {exponent} at {block}[{index}] overflows; use the log-domain lift")]
    Range { block: Block, index: usize, exponent: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// A point `(x̄, ȳ)` of the automaton's phase space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TropicalState<T> {
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Scalar> TropicalState<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self, AutomatonError> {
        if x.len() != y.len() || x.len() < 5 {
            return Err(AutomatonError::Shape { x: x.len(), y: y.len() });
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    /// `(x_1..x_n, y_1..y_n)`.
    pub fn flat(&self) -> Vec<T> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn to_f64(&self) -> TropicalState<f64> {
        TropicalState { x: self.x.iter().map(|v| v.to_f64()).collect(), y: self.y.iter().map(|v| v.to_f64()).collect() }
    }

    pub fn sum_x(&self) -> T {
        self.x.iter().fold(T::zero(), |a, &b| a + b)
    }

    pub fn sum_y(&self) -> T {
        self.y.iter().fold(T::zero(), |a, &b| a + b)
    }
}

#[inline]
fn at<T: Copy>(v: &[T], i: usize, offset: isize) -> T {
    v[(i as isize + offset).rem_euclid(v.len() as isize) as usize]
}

/// The sup metric `d(p, q) = max_i |p_i − q_i|` over both blocks.
pub fn sup_distance<T: Scalar>(a: &TropicalState<T>, b: &TropicalState<T>) -> T {
    a.x.iter()
        .zip(&b.x)
        .chain(a.y.iter().zip(&b.y))
        .fold(T::zero(), |m, (&p, &q)| m.max_of(p.abs_diff(q)))
}

/// One step of `φ`. Exact on integer and rational states.
pub fn step_phi<T: Scalar>(s: &TropicalState<T>) -> TropicalState<T> {
    let n = s.n();
    let m: Vec<T> = s.x.iter().zip(&s.y).map(|(&x, &y)| T::zero().max_of(x + y)).collect();
    let x = (0..n).map(|i| s.x[i] + at(&m, i, -1) - at(&m, i, 1)).collect();
    let y = (0..n).map(|i| at(&s.y, i, 1) + at(&m, i, 2) - m[i]).collect();
    TropicalState { x, y }
}

/// One step of `φ_t`.
pub fn step_phi_t(t: SemiringParam, s: &TropicalState<f64>) -> TropicalState<f64> {
    let n = s.n();
    let m: Vec<f64> = s.x.iter().zip(&s.y).map(|(&x, &y)| oplus_zero(t, x + y)).collect();
    let x = (0..n).map(|i| s.x[i] + at(&m, i, -1) - at(&m, i, 1)).collect();
    let y = (0..n).map(|i| at(&s.y, i, 1) + at(&m, i, 2) - m[i]).collect();
    TropicalState { x, y }
}

pub fn orbit_phi<T: Scalar>(s: &TropicalState<T>, steps: usize) -> Vec<TropicalState<T>> {
    iterate(s.clone(), steps, step_phi)
}

pub fn orbit_phi_t(t: SemiringParam, s: &TropicalState<f64>, steps: usize) -> Vec<TropicalState<f64>> {
    iterate(s.clone(), steps, |q| step_phi_t(t, q))
}

/// Membership in `B_n = {x_i + y_j ≤ 0 for all i, j}`, on which `φ` fixes
/// `x̄` and rotates `ȳ` by one place.
pub fn in_b_n<T: Scalar>(s: &TropicalState<T>) -> bool {
    let top = |v: &[T]| v.iter().copied().reduce(T::max_of).expect("n >= 5");
    top(&s.x) + top(&s.y) <= T::zero()
}

/// Smallest `k ≤ k_max` (default `n²`) with `φ^k(s) = s`.
///
/// Exact equality on exact scalar types, sup distance `≤ PERIOD_TOL` on `f64`.
pub fn detect_period<T: Scalar>(s: &TropicalState<T>, k_max: Option<usize>) -> Option<usize> {
    detect_period_with_tol(s, k_max, PERIOD_TOL)
}

pub fn detect_period_with_tol<T: Scalar>(s: &TropicalState<T>, k_max: Option<usize>, tol: f64) -> Option<usize> {
    let k_max = k_max.unwrap_or(s.n() * s.n());
    let mut cur = s.clone();
    for k in 1..=k_max {
        cur = step_phi(&cur);
        let back = if T::is_exact() { cur == *s } else { sup_distance(&cur, s).to_f64() <= tol };
        if back {
            return Some(k);
        }
    }
    None
}

fn check_range<T: Scalar>(t: SemiringParam, s: &TropicalState<T>) -> Result<(), AutomatonError> {
    for (block, values) in [(Block::Z, &s.x), (Block::W, &s.y)] {
        for (index, v) in values.iter().enumerate() {
            let exponent = v.to_f64() * t.ln_t();
            if !(exponent.abs() <= MAX_EXPONENT) {
                return Err(AutomatonError::Range { block, index, exponent });
            }
        }
    }
    Ok(())
}

/// `(t^{x_i}, t^{y_i})`, a point of the positive orthant.
pub fn lift_positive<T: Scalar>(t: SemiringParam, s: &TropicalState<T>) -> Result<PositiveState, AutomatonError> {
    check_range(t, s)?;
    let pow = |v: &[T]| v.iter().map(|x| t.pow(x.to_f64())).collect();
    Ok(PositiveState::new(pow(&s.x), pow(&s.y))?)
}

/// The same lift kept in natural logs, valid for any magnitude.
pub fn lift_positive_log<T: Scalar>(t: SemiringParam, s: &TropicalState<T>) -> LogPositiveState {
    let scale = |v: &[T]| v.iter().map(|x| x.to_f64() * t.ln_t()).collect();
    LogPositiveState { lz: scale(&s.x), lw: scale(&s.y) }
}

/// A quasi-periodic initial point for `T`: the positive lift with one
/// block negated.
pub fn lift_quasiperiodic<T: Scalar>(t: SemiringParam, s: &TropicalState<T>, block: Block) -> Result<SignedState, AutomatonError> {
    Ok(lift_positive(t, s)?.sign_conjugate(block))
}

/// `log_t` of a positive state, as a tropical state.
pub fn log_state(t: SemiringParam, p: &PositiveState) -> TropicalState<f64> {
    TropicalState { x: p.z().iter().map(|v| t.log(*v)).collect(), y: p.w().iter().map(|v| t.log(*v)).collect() }
}

/// The `2n` components of `φ` as relative (max,+) functions of
/// `(x_1..x_n, y_1..y_n)`; each has 4 components and Lipschitz bound 5.
pub fn pentagram_presentations(n: usize) -> Vec<MaxPlusPresentation> {
    let unit = |idx: &[usize]| {
        let mut v = vec![0i64; 2 * n];
        for &i in idx {
            v[i] += 1;
        }
        v
    };
    let xi = |i: isize| i.rem_euclid(n as isize) as usize;
    let yi = |i: isize| n + i.rem_euclid(n as isize) as usize;
    let mut out = Vec::with_capacity(2 * n);
    let build = |lead: usize, up: isize, down: isize| {
        // lead + max(0, s_up) − max(0, s_down)
        MaxPlusPresentation::new(
            vec![AffineTerm::new(0.0, unit(&[lead])), AffineTerm::new(0.0, unit(&[lead, xi(up), yi(up)]))],
            vec![AffineTerm::new(0.0, unit(&[])), AffineTerm::new(0.0, unit(&[xi(down), yi(down)]))],
        )
        .expect("well-formed")
    };
    for i in 0..n as isize {
        out.push(build(xi(i), i - 1, i + 1));
    }
    for i in 0..n as isize {
        out.push(build(yi(i + 1), i + 2, i));
    }
    out
}

/// One line of a JSON-lines orbit file for the automaton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TropicalRecord<T> {
    pub step: usize,
    pub x: Vec<T>,
    pub y: Vec<T>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step_f;
    use approx::assert_relative_eq;
    use num_rational::Ratio;

    fn int_state(x: &[i64], y: &[i64]) -> TropicalState<i64> {
        TropicalState::new(x.to_vec(), y.to_vec()).unwrap()
    }

    /// Straight transcription of the update rule, one scalar at a time.
    fn oracle_step(x: &[i64], y: &[i64]) -> (Vec<i64>, Vec<i64>) {
        let n = x.len() as i64;
        let g = |i: i64| i.rem_euclid(n) as usize;
        let m = |i: i64| std::cmp::max(0, x[g(i)] + y[g(i)]);
        let xs = (0..n).map(|i| x[g(i)] + m(i - 1) - m(i + 1)).collect();
        let ys = (0..n).map(|i| y[g(i + 1)] + m(i + 2) - m(i)).collect();
        (xs, ys)
    }

    #[test]
    fn shape_check() {
        assert!(TropicalState::new(vec![0i64; 4], vec![0; 4]).is_err());
        assert!(TropicalState::new(vec![0i64; 5], vec![0; 6]).is_err());
    }

    #[test]
    fn step_matches_scalar_oracle() {
        let s = int_state(&[1, 0, 0, 0, 0], &[0; 5]);
        let image = step_phi(&s);
        assert_eq!(image, int_state(&[1, 1, 0, 0, -1], &[-1, 0, 0, 1, 0]));
        let (x, y) = (vec![3, -1, 2, 0, -4], vec![1, 2, -3, 0, 5]);
        let (ox, oy) = oracle_step(&x, &y);
        assert_eq!(step_phi(&int_state(&x, &y)), int_state(&ox, &oy));
        assert_eq!(ox, vec![3, 3, 3, -1, -8]);
        assert_eq!(oy, vec![-2, -4, 1, 9, 1]);
    }

    #[test]
    fn b_n_states_rotate_y() {
        let s = int_state(&[-1; 5], &[0, -3, -1, -7, -2]);
        assert!(in_b_n(&s));
        let image = step_phi(&s);
        assert_eq!(image.x(), s.x());
        assert_eq!(image.y(), &[-3, -1, -7, -2, 0]);
        assert_eq!(detect_period(&s, None), Some(5));
        let all = orbit_phi(&int_state(&[-1; 5], &[0; 5]), 5);
        assert_eq!(all[5], all[0]);
    }

    #[test]
    fn b_n_membership() {
        assert!(in_b_n(&int_state(&[-1; 5], &[0; 5])));
        assert!(in_b_n(&int_state(&[0; 5], &[0; 5])));
        assert!(!in_b_n(&int_state(&[1, -5, -5, -5, -5], &[-5, -5, -5, -5, 0])));
        assert!(in_b_n(&int_state(&[1, -5, -5, -5, -5], &[-5, -5, -5, -5, -1])));
    }

    #[test]
    fn period_detection() {
        assert_eq!(detect_period(&int_state(&[-2; 5], &[-1; 5]), None), Some(1));
        let rational = TropicalState::new(
            vec![Ratio::new(-1, 2); 6],
            vec![Ratio::new(1, 3), Ratio::new(1, 3), Ratio::new(-1, 7), Ratio::new(1, 3), Ratio::new(1, 3), Ratio::new(-1, 7)],
        )
        .unwrap();
        assert_eq!(detect_period(&rational, None), Some(3));
        let real = TropicalState::new(vec![-0.5; 5], vec![0.1, 0.2, 0.3, 0.4, 0.45]).unwrap();
        assert_eq!(detect_period(&real, None), Some(5));
        assert_eq!(detect_period(&int_state(&[1, 0, 0, 0, 0], &[0; 5]), Some(3)), None);
    }

    #[test]
    fn sums_are_conserved() {
        let mut s = int_state(&[3, -1, 2, 0, -4], &[1, 2, -3, 0, 5]);
        let (sx, sy) = (s.sum_x(), s.sum_y());
        for _ in 0..50 {
            s = step_phi(&s);
            assert_eq!((s.sum_x(), s.sum_y()), (sx, sy));
        }
    }

    #[test]
    fn phi_t_is_conjugate_to_f() {
        let t = SemiringParam::new(2.0).unwrap();
        let s = TropicalState::new(vec![0.3, -1.2, 2.0, 0.7, -0.1, 1.5], vec![-0.4, 0.9, -2.2, 1.1, 0.0, -0.6]).unwrap();
        let via_f = log_state(t, &step_f(&lift_positive(t, &s).unwrap()));
        let direct = step_phi_t(t, &s);
        for (a, b) in via_f.flat().iter().zip(direct.flat()) {
            assert_relative_eq!(*a, b, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn phi_t_tends_to_phi() {
        let s = TropicalState::new(vec![0.3, -1.2, 2.0, 0.7, -0.1], vec![-0.4, 0.9, -2.2, 1.1, 0.0]).unwrap();
        let exact = step_phi(&s);
        let mut last = f64::INFINITY;
        for k in 1..=6 {
            let t = SemiringParam::new(10f64.powi(k)).unwrap();
            let gap = sup_distance(&exact, &step_phi_t(t, &s));
            let envelope = t.log(4.0);
            assert!(gap <= envelope);
            assert!(envelope < last);
            last = envelope;
        }
    }

    #[test]
    fn lifts() {
        let t = SemiringParam::new(2.0).unwrap();
        let p = lift_positive(t, &int_state(&[0; 5], &[0; 5])).unwrap();
        assert!(p.z().iter().chain(p.w()).all(|v| *v == 1.0));
        let p = lift_positive(t, &int_state(&[1, 0, 0, 0, 0], &[0; 5])).unwrap();
        assert_eq!(p.z()[0], 2.0);
        let back = log_state(t, &p);
        assert_eq!(back.x()[0], 1.0);
        assert!(matches!(
            lift_positive(t, &int_state(&[2000, 0, 0, 0, 0], &[0; 5])),
            Err(AutomatonError::Range { block: Block::Z, index: 0, .. })
        ));
        let log = lift_positive_log(t, &int_state(&[2000, 0, 0, 0, 0], &[0; 5]));
        assert_relative_eq!(log.lz[0], 2000.0 * 2f64.ln());
    }

    #[test]
    fn b_n_lifts_land_in_the_unit_product_region() {
        let t = SemiringParam::new(3.0).unwrap();
        let s = int_state(&[-1, -2, 0, -1, -3], &[0, -1, -4, 0, -2]);
        assert!(in_b_n(&s));
        let q = lift_quasiperiodic(t, &s, Block::W).unwrap();
        for z in q.z() {
            for w in q.w() {
                assert!(z * w >= -1.0 && z * w < 0.0);
            }
        }
        let q2 = lift_quasiperiodic(t, &s, Block::Z).unwrap();
        assert_eq!(q2.sign_conjugate(Block::Z), q.sign_conjugate(Block::W));
    }

    #[test]
    fn presentations_reproduce_phi() {
        for n in 5..9 {
            let ps = pentagram_presentations(n);
            assert_eq!(ps.len(), 2 * n);
            for p in &ps {
                assert_eq!(p.component_count(), 4);
                assert_eq!(p.lipschitz_constant(), 5);
            }
            let x: Vec<i64> = (0..n as i64).map(|i| (i * 7) % 5 - 2).collect();
            let y: Vec<i64> = (0..n as i64).map(|i| (i * 3) % 4 - 1).collect();
            let s = TropicalState::new(x, y).unwrap();
            let flat = s.flat();
            let via = ps.iter().map(|p| p.eval_maxplus(&flat).unwrap()).collect::<Vec<_>>();
            assert_eq!(via, step_phi(&s).flat());
            let t = SemiringParam::new(3.0).unwrap();
            let fl = s.to_f64().flat();
            let via_t = ps.iter().map(|p| p.eval_rt(t, &fl).unwrap()).collect::<Vec<_>>();
            for (a, b) in via_t.iter().zip(step_phi_t(t, &s.to_f64()).flat()) {
                assert_relative_eq!(*a, b, epsilon = 1e-12);
            }
        }
    }
}
