//! Conserved quantities of the pentagram map and their tropical shadows.
//!
//! The invariants are sums of admissible monomials. For the `O` family the
//! building blocks are `Z_i = z_i w_i z_{i+1}` and the singletons `z_j`; a
//! monomial `Z_{i_1}…Z_{i_s} z_{j_1}…z_{j_r}` is admissible when no two of
//! its factors are consecutive:
//!
//! * `Z_i ~ Z_j` iff `j ∈ {i−2, …, i+2}`
//! * `Z_i ~ z_j` iff `j ∈ {i−1, …, i+2}`
//! * `z_i ~ z_{i+1}`
//!
//! all indices mod `n`. Its weight is `s + r` and its sign `(−1)^r`. The `E`
//! family swaps the roles of `z` and `w`, with the three-letter block chosen
//! by [`EFactor`]. `O_n = Π z_i` and `E_n = Π w_i`.
//!
//! Which signs and which `E` block make these conserved by `T` is settled
//! numerically by [`resolve_sign_convention`]; the result used throughout is
//! signed sums for both families with `W_i = w_i z_{i+1} w_{i+1}`.
//!
//! Under the conjugation `z → −z` every resolved invariant becomes a
//! subtraction-free polynomial (up to a global sign), so replacing `(+, ×)`
//! by `(max, +)` gives functions that `φ` conserves exactly.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automaton::TropicalState;
use crate::dynamics::{step_t, PositiveState, SignedState};
use crate::linalg::exact_rank;
use crate::tropical::Scalar;

/// Relative drift allowed for a conserved quantity.
pub const DRIFT_TOL: f64 = 1e-8;
/// Gap required between the best and second-best monomial of a float state.
pub const GENERIC_MARGIN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvariantError {
    #[error("invariants need n >= 5, got {0}")]
    TooSmall(usize),
    #[error("weight {k} out of range for n = {n} (expected 1..={max} or {n})", max = n / 2)]
    WeightOutOfRange { n: usize, k: usize },
    #[error("weight n is the product Π z_i / Π w_i, not a sum of admissible monomials")]
    ProductWeight,
    #[error("state has n = {got}, table built for n = {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("point is not generic: {0}")]
    NotGeneric(String),
    #[error("no sign convention conserves the {family} family: {detail}")]
    NoConvention { family: Family, detail: String },
    #[error("several sign conventions conserve the {family} family: {detail}")]
    AmbiguousConvention { family: Family, detail: String },
    #[error("could only find {found} of {wanted} nonsingular sample orbits")]
    Sampling { found: usize, wanted: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    O,
    E,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::O => "O",
            Family::E => "E",
        })
    }
}

/// The three-letter factor of the `E` family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EFactor {
    /// `W_i = w_i z_i w_{i+1}`, the letter-for-letter swap of `Z_i`.
    SameIndex,
    /// `W_i = w_i z_{i+1} w_{i+1}`.
    NextIndex,
}

/// Sign rule per family and the `E` building block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SignConvention {
    pub o_signed: bool,
    pub e_signed: bool,
    pub e_factor: EFactor,
}

impl SignConvention {
    /// The convention [`resolve_sign_convention`] selects for every `n` tested.
    pub const CONSERVED: SignConvention = SignConvention { o_signed: true, e_signed: true, e_factor: EFactor::NextIndex };
}

/// One term of `O_k` or `E_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdmissibleMonomial {
    pub family: Family,
    /// Indices `i` with a three-letter factor.
    pub big: Vec<usize>,
    /// Indices `j` with a single-letter factor.
    pub small: Vec<usize>,
}

impl AdmissibleMonomial {
    pub fn weight(&self) -> usize {
        self.big.len() + self.small.len()
    }

    /// `(−1)^r`, `r` the number of single-letter factors.
    pub fn sign(&self) -> i64 {
        if self.small.len() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Exponents over `(z_0..z_{n−1}, w_0..w_{n−1})`.
    pub fn exponents(&self, n: usize, factor: EFactor) -> Vec<i64> {
        let mut e = vec![0i64; 2 * n];
        let (own, other) = match self.family {
            Family::O => (0, n),
            Family::E => (n, 0),
        };
        let middle = match (self.family, factor) {
            (Family::O, _) | (Family::E, EFactor::SameIndex) => 0,
            (Family::E, EFactor::NextIndex) => 1,
        };
        for &i in &self.big {
            e[own + i] += 1;
            e[own + (i + 1) % n] += 1;
            e[other + (i + middle) % n] += 1;
        }
        for &j in &self.small {
            e[own + j] += 1;
        }
        e
    }
}

/// `(j − i) mod n`.
fn gap(i: usize, j: usize, n: usize) -> usize {
    (j + n - i) % n
}

fn big_big(i: usize, j: usize, n: usize) -> bool {
    let d = gap(i, j, n);
    d <= 2 || d >= n - 2
}

fn big_small(i: usize, j: usize, n: usize) -> bool {
    let d = gap(i, j, n);
    d <= 2 || d == n - 1
}

fn small_small(i: usize, j: usize, n: usize) -> bool {
    let d = gap(i, j, n);
    d == 1 || d == n - 1
}

/// Whether the factors `big`, `small` are pairwise non-consecutive.
pub fn is_admissible(n: usize, big: &[usize], small: &[usize]) -> bool {
    let pairs_ok = |v: &[usize], clash: fn(usize, usize, usize) -> bool| {
        v.iter().enumerate().all(|(a, &i)| v[a + 1..].iter().all(|&j| i != j && !clash(i, j, n)))
    };
    pairs_ok(big, big_big)
        && pairs_ok(small, small_small)
        && big.iter().all(|&i| small.iter().all(|&j| !big_small(i, j, n)))
}

/// Increasing index sets of size `size` from `0..n` accepted by `fits`.
fn subsets(n: usize, size: usize, fits: &dyn Fn(&[usize], usize) -> bool) -> Vec<Vec<usize>> {
    fn go(n: usize, size: usize, from: usize, cur: &mut Vec<usize>, fits: &dyn Fn(&[usize], usize) -> bool, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in from..n {
            if fits(cur, i) {
                cur.push(i);
                go(n, size, i + 1, cur, fits, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(n, size, 0, &mut Vec::new(), fits, &mut out);
    out
}

fn check_weight(n: usize, k: usize) -> Result<(), InvariantError> {
    if n < 5 {
        return Err(InvariantError::TooSmall(n));
    }
    if k == n {
        return Err(InvariantError::ProductWeight);
    }
    if k == 0 || k > n / 2 {
        return Err(InvariantError::WeightOutOfRange { n, k });
    }
    Ok(())
}

/// All admissible monomials of weight `k`, ordered by `(big, small)`.
pub fn enumerate_admissible(n: usize, k: usize, family: Family) -> Result<Vec<AdmissibleMonomial>, InvariantError> {
    check_weight(n, k)?;
    let mut out = Vec::new();
    for s in 0..=k {
        for big in subsets(n, s, &|cur, i| cur.iter().all(|&j| !big_big(j, i, n))) {
            let fits = |cur: &[usize], j: usize| {
                cur.iter().all(|&m| !small_small(m, j, n)) && big.iter().all(|&b| !big_small(b, j, n))
            };
            for small in subsets(n, k - s, &fits) {
                out.push(AdmissibleMonomial { family, big: big.clone(), small });
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Names one invariant: `O_k` or `E_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InvariantId {
    pub family: Family,
    pub k: usize,
}

impl fmt::Display for InvariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.family, self.k)
    }
}

#[derive(Debug, Clone)]
struct Term {
    exponents: Vec<i64>,
    /// `(−1)^r`
    parity: i64,
}

/// Borrowed `(z, w)` views of the coordinate-space states.
pub trait Corners {
    fn corners(&self) -> (&[f64], &[f64]);
}

impl Corners for SignedState {
    fn corners(&self) -> (&[f64], &[f64]) {
        (self.z(), self.w())
    }
}

impl Corners for PositiveState {
    fn corners(&self) -> (&[f64], &[f64]) {
        (self.z(), self.w())
    }
}

/// Precomputed monomials for every invariant of one `n`.
#[derive(Debug, Clone)]
pub struct InvariantTable {
    n: usize,
    convention: SignConvention,
    entries: Vec<(InvariantId, Vec<Term>)>,
}

impl InvariantTable {
    pub fn new(n: usize, convention: SignConvention) -> Result<Self, InvariantError> {
        if n < 5 {
            return Err(InvariantError::TooSmall(n));
        }
        let mut entries = Vec::new();
        for family in [Family::O, Family::E] {
            for k in 1..=n / 2 {
                let terms = enumerate_admissible(n, k, family)?
                    .into_iter()
                    .map(|m| Term { exponents: m.exponents(n, convention.e_factor), parity: m.sign() })
                    .collect();
                entries.push((InvariantId { family, k }, terms));
            }
            let mut exponents = vec![0i64; 2 * n];
            let offset = if family == Family::O { 0 } else { n };
            exponents[offset..offset + n].fill(1);
            entries.push((InvariantId { family, k: n }, vec![Term { exponents, parity: 1 }]));
        }
        Ok(Self { n, convention, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn convention(&self) -> SignConvention {
        self.convention
    }

    /// `O_1..O_{⌊n/2⌋}, O_n, E_1..E_{⌊n/2⌋}, E_n`.
    pub fn ids(&self) -> impl Iterator<Item = InvariantId> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    fn terms(&self, id: InvariantId) -> Result<&[Term], InvariantError> {
        self.entries
            .iter()
            .find(|(i, _)| *i == id)
            .map(|(_, t)| t.as_slice())
            .ok_or(InvariantError::WeightOutOfRange { n: self.n, k: id.k })
    }

    fn signed(&self, family: Family) -> bool {
        match family {
            Family::O => self.convention.o_signed,
            Family::E => self.convention.e_signed,
        }
    }

    /// The value and `Σ |monomial|`, the natural scale for its rounding error.
    pub fn eval_with_scale(&self, id: InvariantId, s: &impl Corners) -> Result<(f64, f64), InvariantError> {
        let (z, w) = s.corners();
        if z.len() != self.n {
            return Err(InvariantError::Dimension { expected: self.n, got: z.len() });
        }
        let signed = self.signed(id.family) && id.k != self.n;
        let mut value = 0.0;
        let mut scale = 0.0;
        for term in self.terms(id)? {
            let mono = term
                .exponents
                .iter()
                .zip(z.iter().chain(w))
                .filter(|(e, _)| **e != 0)
                .fold(1.0, |acc, (&e, &v)| acc * v.powi(e as i32));
            value += if signed { term.parity as f64 * mono } else { mono };
            scale += mono.abs();
        }
        Ok((value, scale))
    }

    pub fn eval(&self, id: InvariantId, s: &impl Corners) -> Result<f64, InvariantError> {
        self.eval_with_scale(id, s).map(|(v, _)| v)
    }

    fn tropical_values<'a, T: Scalar>(
        &'a self,
        id: InvariantId,
        s: &TropicalState<T>,
    ) -> Result<impl Iterator<Item = (T, &'a Term)> + 'a, InvariantError> {
        if s.n() != self.n {
            return Err(InvariantError::Dimension { expected: self.n, got: s.n() });
        }
        let flat = s.flat();
        Ok(self.terms(id)?.iter().map(move |term| {
            let v = term
                .exponents
                .iter()
                .zip(&flat)
                .filter(|(e, _)| **e != 0)
                .fold(T::zero(), |acc, (&e, &x)| acc + T::from_i64(e) * x);
            (v, term)
        }))
    }

    /// Max over all monomials of the linear form `exponents · (x, y)`.
    pub fn tropical<T: Scalar>(&self, id: InvariantId, s: &TropicalState<T>) -> Result<T, InvariantError> {
        Ok(self
            .tropical_values(id, s)?
            .map(|(v, _)| v)
            .reduce(T::max_of)
            .expect("every invariant has at least one monomial"))
    }

    /// Maxima over the `(−1)^r = +1` and `(−1)^r = −1` monomials; `None` for
    /// an empty side.
    pub fn tropical_pm<T: Scalar>(&self, id: InvariantId, s: &TropicalState<T>) -> Result<(Option<T>, Option<T>), InvariantError> {
        let mut plus: Option<T> = None;
        let mut minus: Option<T> = None;
        for (v, term) in self.tropical_values(id, s)? {
            let side = if term.parity > 0 { &mut plus } else { &mut minus };
            *side = Some(side.map_or(v, |m| m.max_of(v)));
        }
        Ok((plus, minus))
    }

    /// Exponent vector of the unique maximizing monomial.
    pub fn maximizer<T: Scalar>(&self, id: InvariantId, s: &TropicalState<T>) -> Result<Vec<i64>, InvariantError> {
        let mut ranked: Vec<(T, &Term)> = self.tropical_values(id, s)?.collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite values"));
        if let [(top, term), (second, _), ..] = ranked.as_slice() {
            if !separated(*top, *second) {
                return Err(InvariantError::NotGeneric(format!("tropical {id} is attained by several monomials")));
            }
            return Ok(term.exponents.clone());
        }
        Ok(ranked[0].1.exponents.clone())
    }

    /// Rank of the local gradients of `tO_k`, `tE_k` (`k ≤ ⌊n/2⌋`), `Σx`, `Σy`
    /// at a generic point, computed over `Q`.
    pub fn rank_at<T: Scalar>(&self, s: &TropicalState<T>) -> Result<usize, InvariantError> {
        if s.n() != self.n {
            return Err(InvariantError::Dimension { expected: self.n, got: s.n() });
        }
        for (i, (&x, &y)) in s.x().iter().zip(s.y()).enumerate() {
            if !separated(x + y, T::zero()) && !separated(T::zero(), x + y) {
                return Err(InvariantError::NotGeneric(format!("x_{i} + y_{i} sits on the breakpoint of max(0, ·)")));
            }
        }
        let mut rows = Vec::with_capacity(self.entries.len());
        for id in self.ids() {
            rows.push(self.maximizer(id, s)?);
        }
        Ok(exact_rank(&rows))
    }

    /// `2⌊n/2⌋ + 2`, the rank at generic points.
    pub fn expected_rank(&self) -> usize {
        2 * (self.n / 2) + 2
    }
}

/// `a` exceeds `b` by a margin that survives rounding.
fn separated<T: Scalar>(a: T, b: T) -> bool {
    if T::is_exact() {
        a > b
    } else {
        (a - b).to_f64() > GENERIC_MARGIN
    }
}

/// `O_k` (`k = n` gives `Π z_i`).
pub fn eval_o_k(s: &impl Corners, k: usize, convention: SignConvention) -> Result<f64, InvariantError> {
    let n = s.corners().0.len();
    InvariantTable::new(n, convention)?.eval(InvariantId { family: Family::O, k }, s)
}

/// `E_k` (`k = n` gives `Π w_i`).
pub fn eval_e_k(s: &impl Corners, k: usize, convention: SignConvention) -> Result<f64, InvariantError> {
    let n = s.corners().0.len();
    InvariantTable::new(n, convention)?.eval(InvariantId { family: Family::E, k }, s)
}

/// Tropical `O_k`: max of `Σ X_i + Σ x_j`, `X_i = x_i + y_i + x_{i+1}`;
/// `Σ x_i` for `k = n`.
pub fn tropical_o_k<T: Scalar>(s: &TropicalState<T>, k: usize) -> Result<T, InvariantError> {
    InvariantTable::new(s.n(), SignConvention::CONSERVED)?.tropical(InvariantId { family: Family::O, k }, s)
}

/// Tropical `E_k(+1)`, `E_k(−1)`, with the `E` block given by `factor`.
pub fn tropical_e_pm<T: Scalar>(s: &TropicalState<T>, k: usize, factor: EFactor) -> Result<(Option<T>, Option<T>), InvariantError> {
    let convention = SignConvention { e_factor: factor, ..SignConvention::CONSERVED };
    InvariantTable::new(s.n(), convention)?.tropical_pm(InvariantId { family: Family::E, k }, s)
}

/// See [`InvariantTable::rank_at`].
pub fn invariant_rank_at<T: Scalar>(s: &TropicalState<T>) -> Result<usize, InvariantError> {
    InvariantTable::new(s.n(), SignConvention::CONSERVED)?.rank_at(s)
}

/// `|I_m − I_0|` relative to the larger monomial scale of the two.
pub fn relative_drift(start: (f64, f64), now: (f64, f64)) -> f64 {
    (now.0 - start.0).abs() / start.1.max(now.1).max(f64::MIN_POSITIVE)
}

/// Max drift of each candidate convention, per family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConventionDrifts {
    pub n: usize,
    pub orbits: usize,
    pub steps: usize,
    pub o: Vec<(bool, f64)>,
    pub e: Vec<((bool, EFactor), f64)>,
}

/// Nonsingular, well-conditioned random `T` orbits with mixed signs.
pub fn sample_t_orbits(n: usize, count: usize, steps: usize, seed: u64) -> Result<Vec<Vec<SignedState>>, InvariantError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 200 * count.max(1) {
        attempts += 1;
        let mut draw = || {
            (0..n)
                .map(|_| {
                    let m = rng.gen_range(0.2..1.2f64);
                    if rng.gen_bool(0.5) {
                        m
                    } else {
                        -m
                    }
                })
                .collect::<Vec<_>>()
        };
        let (z, w) = (draw(), draw());
        let mut orbit = vec![SignedState::new(z, w).expect("n >= 5 finite")];
        let good = |s: &SignedState| {
            s.z().iter().zip(s.w()).all(|(z, w)| (1.0 - z * w).abs() > 1e-2)
                && s.z().iter().chain(s.w()).all(|v| (1e-3..1e3).contains(&v.abs()))
        };
        while orbit.len() <= steps && good(orbit.last().unwrap()) {
            match step_t(orbit.last().unwrap()) {
                Ok(next) => orbit.push(next),
                Err(_) => break,
            }
        }
        if orbit.len() == steps + 1 && good(orbit.last().unwrap()) {
            out.push(orbit);
        }
    }
    if out.len() < count {
        return Err(InvariantError::Sampling { found: out.len(), wanted: count });
    }
    Ok(out)
}

fn max_drift(table: &InvariantTable, family: Family, orbits: &[Vec<SignedState>]) -> f64 {
    let mut worst: f64 = 0.0;
    for id in table.ids().filter(|id| id.family == family) {
        for orbit in orbits {
            let start = table.eval_with_scale(id, &orbit[0]).expect("shape checked");
            for s in &orbit[1..] {
                worst = worst.max(relative_drift(start, table.eval_with_scale(id, s).expect("shape checked")));
            }
        }
    }
    worst
}

/// Drift of every candidate convention over `orbits` random `T` orbits.
pub fn sign_convention_drifts(n: usize, orbits: usize, steps: usize, seed: u64) -> Result<ConventionDrifts, InvariantError> {
    let sample = sample_t_orbits(n, orbits, steps, seed)?;
    let mut o = Vec::new();
    for o_signed in [true, false] {
        let table = InvariantTable::new(n, SignConvention { o_signed, ..SignConvention::CONSERVED })?;
        o.push((o_signed, max_drift(&table, Family::O, &sample)));
    }
    let mut e = Vec::new();
    for e_signed in [true, false] {
        for e_factor in [EFactor::SameIndex, EFactor::NextIndex] {
            let table = InvariantTable::new(n, SignConvention { e_signed, e_factor, ..SignConvention::CONSERVED })?;
            e.push(((e_signed, e_factor), max_drift(&table, Family::E, &sample)));
        }
    }
    Ok(ConventionDrifts { n, orbits, steps, o, e })
}

fn pick<C: Copy + fmt::Debug>(family: Family, candidates: &[(C, f64)]) -> Result<C, InvariantError> {
    let detail = || format!("{candidates:?}");
    let passing: Vec<C> = candidates.iter().filter(|(_, d)| *d <= DRIFT_TOL).map(|(c, _)| *c).collect();
    match passing.as_slice() {
        [one] => Ok(*one),
        [] => Err(InvariantError::NoConvention { family, detail: detail() }),
        _ => Err(InvariantError::AmbiguousConvention { family, detail: detail() }),
    }
}

/// Pick, per family, the one candidate convention whose invariants stay
/// within [`DRIFT_TOL`] along 50 random nonsingular `T` orbits of 10 steps.
pub fn resolve_sign_convention(n: usize, seed: u64) -> Result<SignConvention, InvariantError> {
    let drifts = sign_convention_drifts(n, 50, 10, seed)?;
    let o_signed = pick(Family::O, &drifts.o)?;
    let (e_signed, e_factor) = pick(Family::E, &drifts.e)?;
    Ok(SignConvention { o_signed, e_signed, e_factor })
}
