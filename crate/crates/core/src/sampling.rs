//! Seeded random inputs for the experiments.
//!
//! Every trial draws from its own stream of `ChaCha8Rng::seed_from_u64(seed)`,
//! so trials are reproducible and independent of evaluation order.

use nalgebra::Matrix3;
use num_rational::Ratio;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::automaton::TropicalState;
use crate::dynamics::PositiveState;
use crate::geometry::{GeometryError, ProjectivePoint, TwistedPolygon};

/// Seed used when the caller gives none.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Integer state with entries uniform in `-range..=range`.
pub fn integer_state(rng: &mut impl Rng, n: usize, range: i64) -> TropicalState<i64> {
    let mut draw = || (0..n).map(|_| rng.gen_range(-range..=range)).collect();
    let x = draw();
    let y = draw();
    TropicalState::new(x, y).expect("n >= 5")
}

/// Real state with entries uniform in `[-radius, radius]`.
pub fn real_state(rng: &mut impl Rng, n: usize, radius: f64) -> TropicalState<f64> {
    let mut draw = || (0..n).map(|_| rng.gen_range(-radius..=radius)).collect();
    let x = draw();
    let y = draw();
    TropicalState::new(x, y).expect("n >= 5")
}

/// Positive state with log-uniform entries in `[e^-spread, e^spread]`.
pub fn positive_state(rng: &mut impl Rng, n: usize, spread: f64) -> PositiveState {
    let mut draw = || (0..n).map(|_| rng.gen_range(-spread..=spread).exp()).collect();
    let z = draw();
    let w = draw();
    PositiveState::new(z, w).expect("finite positive entries")
}

/// A rational point of `B_n`: random fractions with denominators up to
/// `max_den`, then `ȳ` shifted down so that `max x̄ + max ȳ ≤ 0`.
pub fn rational_b_n_point(rng: &mut impl Rng, n: usize, max_den: i64) -> TropicalState<Ratio<i64>> {
    let mut draw = || -> Vec<Ratio<i64>> {
        (0..n)
            .map(|_| {
                let den = rng.gen_range(1..=max_den);
                Ratio::new(rng.gen_range(-10 * den..=10 * den), den)
            })
            .collect()
    };
    let x = draw();
    let mut y = draw();
    let top = |v: &[Ratio<i64>]| *v.iter().max().expect("n >= 5");
    let excess = top(&x) + top(&y);
    // sometimes land exactly on the boundary of B_n
    let slack = if rng.gen_bool(0.2) { Ratio::from_integer(0) } else { Ratio::new(rng.gen_range(0..=20), 4) };
    if excess + slack > Ratio::from_integer(0) {
        for v in &mut y {
            *v -= excess + slack;
        }
    }
    TropicalState::new(x, y).expect("n >= 5")
}

/// Ratio of extreme singular values.
pub fn condition_number(m: &Matrix3<f64>) -> f64 {
    let sv = m.singular_values();
    sv.max() / sv.min()
}

/// Random projective transformation `I + ε·G` with condition number at most
/// `max_cond`.
pub fn projective_perturbation(rng: &mut impl Rng, scale: f64, max_cond: f64) -> Matrix3<f64> {
    loop {
        let g = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let m = Matrix3::identity() + g * scale;
        if condition_number(&m) <= max_cond {
            return m;
        }
    }
}

/// Convex n-gon: stratified angles on the unit circle, radial jitter up to
/// 10%, then a projective perturbation of condition number at most 10.
pub fn convex_polygon(rng: &mut impl Rng, n: usize) -> Result<TwistedPolygon, GeometryError> {
    let step = std::f64::consts::TAU / n as f64;
    let plane: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let angle = (i as f64 + rng.gen_range(0.15..0.85)) * step;
            let r = 1.0 + rng.gen_range(-0.1..0.1);
            (r * angle.cos(), r * angle.sin())
        })
        .collect();
    // keep the line at infinity away from the polygon so it stays convex
    let psi = loop {
        let psi = projective_perturbation(rng, 0.3, 10.0);
        if plane.iter().all(|&(x, y)| psi[(2, 0)] * x + psi[(2, 1)] * y + psi[(2, 2)] > 0.2) {
            break psi;
        }
    };
    let vertices = plane.iter().map(|&(x, y)| ProjectivePoint::affine(x, y)).collect::<Result<Vec<_>, _>>()?;
    TwistedPolygon::closed(vertices)?.transformed(&psi)
}

/// Convex n-gon vertices with monodromy `I + ε·G`: a genuinely twisted polygon.
pub fn twisted_polygon(rng: &mut impl Rng, n: usize, twist: f64) -> Result<TwistedPolygon, GeometryError> {
    let closed = convex_polygon(rng, n)?;
    let m = projective_perturbation(rng, twist, 10.0);
    TwistedPolygon::new(closed.base_vertices().to_vec(), m)
}
