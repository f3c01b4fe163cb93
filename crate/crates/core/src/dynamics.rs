//! The pentagram map `T` in corner coordinates and its subtraction-free
//! conjugate `F`:
//!
//! ```text
//! T: z_i ← z_i (1 − z_{i−1}w_{i−1}) / (1 − z_{i+1}w_{i+1})
//!    w_i ← w_{i+1} (1 − z_{i+2}w_{i+2}) / (1 − z_i w_i)
//! F: the same with every `1 −` replaced by `1 +`
//! ```
//!
//! Negating either block turns one into the other:
//! `T ∘ conj = conj ∘ F`. Indices are taken mod `n`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tropical::SemiringParam;

/// `|1 − z_i w_i|` below this (relative to `max(1, |z_i w_i|)`) is singular.
pub const SINGULARITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("state needs n >= 5 with matching block lengths (z: {z}, w: {w})")]
    Shape { z: usize, w: usize },
    #[error("non-finite entry at {block}[{index}]")]
    NonFinite { block: Block, index: usize },
    #[error("entry {block}[{index}] = {value} is not strictly positive")]
    NonPositive { block: Block, index: usize, value: f64 },
    #[error("T is singular at index {index}: 1 - z w = {residual:e}")]
    Singular { index: usize, residual: f64 },
}

/// Which half of a state a sign change or lift acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Z,
    W,
}

impl std::fmt::Display for Block {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Block::Z => "z",
            Block::W => "w",
        })
    }
}

fn check_shape(z: &[f64], w: &[f64]) -> Result<(), DynamicsError> {
    if z.len() != w.len() || z.len() < 5 {
        return Err(DynamicsError::Shape { z: z.len(), w: w.len() });
    }
    for (block, values) in [(Block::Z, z), (Block::W, w)] {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFinite { block, index });
        }
    }
    Ok(())
}

#[inline]
fn wrap(i: usize, offset: isize, n: usize) -> usize {
    (i as isize + offset).rem_euclid(n as isize) as usize
}

/// A point of `R^{2n}` on which `T` acts; entries may have any sign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignedState {
    z: Vec<f64>,
    w: Vec<f64>,
}

impl SignedState {
    pub fn new(z: Vec<f64>, w: Vec<f64>) -> Result<Self, DynamicsError> {
        check_shape(&z, &w)?;
        Ok(Self { z, w })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.z, self.w)
    }

    /// Negate one block. An involution.
    pub fn sign_conjugate(&self, block: Block) -> SignedState {
        let flip = |v: &[f64]| v.iter().map(|x| -x).collect();
        match block {
            Block::Z => SignedState { z: flip(&self.z), w: self.w.clone() },
            Block::W => SignedState { z: self.z.clone(), w: flip(&self.w) },
        }
    }

    /// The positive state this one is the conjugate of, if any.
    pub fn to_positive(&self, block: Block) -> Result<PositiveState, DynamicsError> {
        let s = self.sign_conjugate(block);
        PositiveState::new(s.z, s.w)
    }
}

/// A point of the positive orthant, where `F` is globally defined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveState {
    z: Vec<f64>,
    w: Vec<f64>,
}

impl PositiveState {
    pub fn new(z: Vec<f64>, w: Vec<f64>) -> Result<Self, DynamicsError> {
        check_shape(&z, &w)?;
        for (block, values) in [(Block::Z, &z), (Block::W, &w)] {
            if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                return Err(DynamicsError::NonPositive { block, index, value });
            }
        }
        Ok(Self { z, w })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn to_signed(&self) -> SignedState {
        SignedState { z: self.z.clone(), w: self.w.clone() }
    }

    /// Negate one block, landing in the domain of `T`.
    pub fn sign_conjugate(&self, block: Block) -> SignedState {
        self.to_signed().sign_conjugate(block)
    }

    /// Natural logs of the entries.
    pub fn to_log(&self) -> LogPositiveState {
        LogPositiveState { lz: self.z.iter().map(|v| v.ln()).collect(), lw: self.w.iter().map(|v| v.ln()).collect() }
    }
}

/// A positive state stored as natural logs, for orbits whose entries
/// leave the range of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogPositiveState {
    pub lz: Vec<f64>,
    pub lw: Vec<f64>,
}

impl LogPositiveState {
    pub fn new(lz: Vec<f64>, lw: Vec<f64>) -> Result<Self, DynamicsError> {
        check_shape(&lz, &lw)?;
        Ok(Self { lz, lw })
    }

    pub fn n(&self) -> usize {
        self.lz.len()
    }

    pub fn to_linear(&self) -> Result<PositiveState, DynamicsError> {
        PositiveState::new(self.lz.iter().map(|v| v.exp()).collect(), self.lw.iter().map(|v| v.exp()).collect())
    }

    /// `log_t` of the entries.
    pub fn to_base(&self, t: SemiringParam) -> (Vec<f64>, Vec<f64>) {
        let scale = |v: &[f64]| v.iter().map(|x| x / t.ln_t()).collect();
        (scale(&self.lz), scale(&self.lw))
    }
}

/// One step of the pentagram map `T`.
pub fn step_t(s: &SignedState) -> Result<SignedState, DynamicsError> {
    step_t_with(s, SINGULARITY_TOL)
}

/// [`step_t`] with an explicit singularity threshold.
pub fn step_t_with(s: &SignedState, tol: f64) -> Result<SignedState, DynamicsError> {
    let n = s.n();
    let den: Vec<f64> = s.z.iter().zip(&s.w).map(|(z, w)| 1.0 - z * w).collect();
    for (index, (d, (z, w))) in den.iter().zip(s.z.iter().zip(&s.w)).enumerate() {
        if d.abs() <= tol * (z * w).abs().max(1.0) {
            return Err(DynamicsError::Singular { index, residual: *d });
        }
    }
    let z = (0..n).map(|i| s.z[i] * den[wrap(i, -1, n)] / den[wrap(i, 1, n)]).collect();
    let w = (0..n).map(|i| s.w[wrap(i, 1, n)] * den[wrap(i, 2, n)] / den[i]).collect();
    SignedState::new(z, w)
}

/// One step of `F` on the positive orthant.
pub fn step_f(s: &PositiveState) -> PositiveState {
    let n = s.n();
    let num: Vec<f64> = s.z.iter().zip(&s.w).map(|(z, w)| 1.0 + z * w).collect();
    let z = (0..n).map(|i| s.z[i] * num[wrap(i, -1, n)] / num[wrap(i, 1, n)]).collect();
    let w = (0..n).map(|i| s.w[wrap(i, 1, n)] * num[wrap(i, 2, n)] / num[i]).collect();
    PositiveState { z, w }
}

/// `ln(1 + e^u)` without overflow.
#[inline]
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

/// `F` in natural-log coordinates.
pub fn step_f_log(s: &LogPositiveState) -> LogPositiveState {
    let n = s.n();
    let sp: Vec<f64> = s.lz.iter().zip(&s.lw).map(|(a, b)| softplus(a + b)).collect();
    let lz = (0..n).map(|i| s.lz[i] + sp[wrap(i, -1, n)] - sp[wrap(i, 1, n)]).collect();
    let lw = (0..n).map(|i| s.lw[wrap(i, 1, n)] + sp[wrap(i, 2, n)] - sp[i]).collect();
    LogPositiveState { lz, lw }
}

/// The map being iterated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapKind {
    T,
    F,
    #[serde(rename = "phi")]
    Phi,
    #[serde(rename = "phi_t")]
    PhiT,
}

/// An orbit cut short by a singular step; `states` holds what was computed.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("orbit stopped at step {step}: {source}")]
pub struct OrbitError<S: std::fmt::Debug> {
    pub step: usize,
    pub states: Vec<S>,
    #[source]
    pub source: DynamicsError,
}

/// `[s, T s, …, T^steps s]`.
pub fn orbit_t(s: &SignedState, steps: usize) -> Result<Vec<SignedState>, OrbitError<SignedState>> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(s.clone());
    for step in 1..=steps {
        match step_t(&states[step - 1]) {
            Ok(next) => states.push(next),
            Err(source) => return Err(OrbitError { step, states, source }),
        }
    }
    Ok(states)
}

/// `[s, F s, …, F^steps s]`.
pub fn orbit_f(s: &PositiveState, steps: usize) -> Vec<PositiveState> {
    iterate(s.clone(), steps, step_f)
}

pub(crate) fn iterate<S>(first: S, steps: usize, step: impl Fn(&S) -> S) -> Vec<S> {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(first);
    for i in 0..steps {
        let next = step(&states[i]);
        states.push(next);
    }
    states
}

/// One line of a JSON-lines orbit file for the coordinate maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateRecord {
    pub step: usize,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}
