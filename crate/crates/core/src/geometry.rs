//! Projective-plane primitives, twisted polygons and their cross-ratio
//! coordinates, plus the literal diagonal-intersection pentagram step.
//!
//! Representatives are kept scaled to unit max-absolute-entry. Incidence is
//! checked on unit-norm copies so the tolerances below are scale free.

use nalgebra::{Matrix3, Matrix4x3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::SignedState;

/// Incidence residual allowed for points that should be collinear.
pub const COLLINEAR_TOL: f64 = 1e-8;
/// Normalized determinants / denominators below this are degenerate.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Equality up to scale.
pub const SAME_POINT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("homogeneous coordinates must be finite and not all zero: {0:?}")]
    ZeroVector([f64; 3]),
    #[error("degenerate configuration: {0}")]
    Degenerate(&'static str),
    #[error("points are not collinear (residual {0:e})")]
    NotCollinear(f64),
    #[error("a twisted polygon needs at least 5 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("monodromy is singular (normalized det {0:e})")]
    SingularMonodromy(f64),
    #[error("polygon file declares n = {declared} but lists {actual} vertices")]
    VertexCount { declared: usize, actual: usize },
    #[error("at index {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<GeometryError>,
    },
}

impl GeometryError {
    fn at(self, index: usize) -> Self {
        GeometryError::AtIndex { index, source: Box::new(self) }
    }
}

fn normalize(h: Vector3<f64>) -> Result<Vector3<f64>, GeometryError> {
    let scale = h.amax();
    if !(scale > 0.0) || !h.iter().all(|v| v.is_finite()) {
        return Err(GeometryError::ZeroVector([h.x, h.y, h.z]));
    }
    Ok(h / scale)
}

/// Two representatives define the same projective element within `tol`.
fn same_up_to_scale(a: &Vector3<f64>, b: &Vector3<f64>, tol: f64) -> bool {
    a.normalize().cross(&b.normalize()).norm() <= tol
}

/// A point of `RP²` in homogeneous coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectivePoint(Vector3<f64>);

/// A line of `RP²`; incidence is `⟨line, point⟩ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectiveLine(Vector3<f64>);

impl ProjectivePoint {
    pub fn new(h: [f64; 3]) -> Result<Self, GeometryError> {
        normalize(Vector3::from(h)).map(Self)
    }

    /// The point `(x, y, 1)` of the affine chart.
    pub fn affine(x: f64, y: f64) -> Result<Self, GeometryError> {
        Self::new([x, y, 1.0])
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0.into()
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.0
    }

    /// Coordinates in the chart `h2 = 1`, `None` near the line at infinity.
    pub fn to_affine(&self) -> Option<(f64, f64)> {
        (self.0.z.abs() > DEGENERATE_TOL).then(|| (self.0.x / self.0.z, self.0.y / self.0.z))
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        same_up_to_scale(&self.0, &other.0, SAME_POINT_TOL)
    }

    pub fn transform(&self, m: &Matrix3<f64>) -> Result<Self, GeometryError> {
        normalize(m * self.0).map(Self)
    }
}

impl ProjectiveLine {
    pub fn new(h: [f64; 3]) -> Result<Self, GeometryError> {
        normalize(Vector3::from(h)).map(Self)
    }

    pub fn coords(&self) -> [f64; 3] {
        self.0.into()
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        same_up_to_scale(&self.0, &other.0, SAME_POINT_TOL)
    }

    /// `|⟨line, p⟩|` on unit-norm representatives.
    pub fn incidence(&self, p: &ProjectivePoint) -> f64 {
        self.0.normalize().dot(&p.0.normalize()).abs()
    }
}

/// Cross product of unit-norm copies, rejected when (nearly) zero.
fn join(a: &Vector3<f64>, b: &Vector3<f64>, what: &'static str) -> Result<Vector3<f64>, GeometryError> {
    let c = a.normalize().cross(&b.normalize());
    if c.norm() <= DEGENERATE_TOL {
        return Err(GeometryError::Degenerate(what));
    }
    normalize(c)
}

pub fn line_through(p: &ProjectivePoint, q: &ProjectivePoint) -> Result<ProjectiveLine, GeometryError> {
    join(&p.0, &q.0, "coincident points do not span a line").map(ProjectiveLine)
}

pub fn intersect(l1: &ProjectiveLine, l2: &ProjectiveLine) -> Result<ProjectivePoint, GeometryError> {
    join(&l1.0, &l2.0, "identical lines have no unique intersection").map(ProjectivePoint)
}

/// `[t1,t2,t3,t4] = (t1−t2)(t3−t4) / ((t1−t3)(t2−t4))`.
pub fn cross_ratio(t1: f64, t2: f64, t3: f64, t4: f64) -> Result<f64, GeometryError> {
    let scale = [t1, t2, t3, t4].iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let (d13, d24) = (t1 - t3, t2 - t4);
    if d13.abs() <= DEGENERATE_TOL * scale || d24.abs() <= DEGENERATE_TOL * scale {
        return Err(GeometryError::Degenerate("vanishing cross-ratio denominator"));
    }
    Ok((t1 - t2) * (t3 - t4) / (d13 * d24))
}

/// Best-fit line through four points: the smallest right singular vector.
fn fit_line(points: &[&ProjectivePoint; 4]) -> Vector3<f64> {
    let rows: Vec<f64> = points.iter().flat_map(|p| p.0.normalize().iter().copied().collect::<Vec<_>>()).collect();
    let m = Matrix4x3::from_row_slice(&rows);
    let svd = (m.transpose() * m).symmetric_eigen();
    let (min_idx, _) = svd.eigenvalues.argmin();
    svd.eigenvectors.column(min_idx).normalize()
}

/// Cross ratio of four collinear points.
///
/// Points of the line are parametrized by projecting from `center` (any
/// point off the line): `det(center, p_i, p_j)` is proportional to
/// `t_j − t_i` for any affine parameter `t`, so the result equals
/// [`cross_ratio`] of the parameters and does not depend on the center.
pub fn cross_ratio_points_from(
    center: &Vector3<f64>,
    p1: &ProjectivePoint,
    p2: &ProjectivePoint,
    p3: &ProjectivePoint,
    p4: &ProjectivePoint,
) -> Result<f64, GeometryError> {
    let pts = [p1, p2, p3, p4];
    let normal = fit_line(&pts);
    let residual = pts.iter().map(|p| normal.dot(&p.0.normalize()).abs()).fold(0.0, f64::max);
    if residual > COLLINEAR_TOL {
        return Err(GeometryError::NotCollinear(residual));
    }
    let u: Vec<Vector3<f64>> = pts.iter().map(|p| p.0.normalize()).collect();
    for i in 0..4 {
        for j in i + 1..4 {
            if u[i].cross(&u[j]).norm() <= DEGENERATE_TOL {
                return Err(GeometryError::Degenerate("coincident points in cross ratio"));
            }
        }
    }
    let c = center.normalize();
    if c.dot(&normal).abs() <= DEGENERATE_TOL {
        return Err(GeometryError::Degenerate("projection center lies on the line"));
    }
    let d = |i: usize, j: usize| c.dot(&u[i].cross(&u[j]));
    Ok(d(0, 1) * d(2, 3) / (d(0, 2) * d(1, 3)))
}

/// Cross ratio of four collinear points, projecting from the line's own
/// normal direction.
pub fn cross_ratio_points(
    p1: &ProjectivePoint,
    p2: &ProjectivePoint,
    p3: &ProjectivePoint,
    p4: &ProjectivePoint,
) -> Result<f64, GeometryError> {
    let normal = fit_line(&[p1, p2, p3, p4]);
    cross_ratio_points_from(&normal, p1, p2, p3, p4)
}

/// A twisted n-gon: `vertex(k + n) = M·vertex(k)` for all integers `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedPolygon {
    vertices: Vec<ProjectivePoint>,
    monodromy: Matrix3<f64>,
    inverse: Matrix3<f64>,
}

impl TwistedPolygon {
    pub fn new(vertices: Vec<ProjectivePoint>, monodromy: Matrix3<f64>) -> Result<Self, GeometryError> {
        if vertices.len() < 5 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let frob = monodromy.norm();
        if !(frob > 0.0) || !monodromy.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::SingularMonodromy(0.0));
        }
        let monodromy = monodromy / frob;
        let det = monodromy.determinant();
        if det.abs() <= DEGENERATE_TOL {
            return Err(GeometryError::SingularMonodromy(det));
        }
        let inverse = monodromy.try_inverse().ok_or(GeometryError::SingularMonodromy(det))?;
        Ok(Self { vertices, monodromy, inverse })
    }

    /// An ordinary closed polygon.
    pub fn closed(vertices: Vec<ProjectivePoint>) -> Result<Self, GeometryError> {
        Self::new(vertices, Matrix3::identity())
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn base_vertices(&self) -> &[ProjectivePoint] {
        &self.vertices
    }

    /// Monodromy scaled to unit Frobenius norm.
    pub fn monodromy(&self) -> &Matrix3<f64> {
        &self.monodromy
    }

    /// `v_k` for any integer `k`, applying `M` or `M⁻¹` `|⌊k/n⌋|` times.
    pub fn vertex(&self, k: i64) -> ProjectivePoint {
        let n = self.n() as i64;
        let (turns, r) = (k.div_euclid(n), k.rem_euclid(n));
        let step = if turns >= 0 { &self.monodromy } else { &self.inverse };
        let mut h = self.vertices[r as usize].0;
        for _ in 0..turns.unsigned_abs() {
            h = step * h;
            h /= h.amax();
        }
        ProjectivePoint(h)
    }

    /// `Ψ·φ`, whose monodromy is `Ψ M Ψ⁻¹`.
    pub fn transformed(&self, psi: &Matrix3<f64>) -> Result<Self, GeometryError> {
        let inv = psi
            .try_inverse()
            .ok_or(GeometryError::Degenerate("singular projective transformation"))?;
        let vertices = self.vertices.iter().map(|v| v.transform(psi)).collect::<Result<_, _>>()?;
        Self::new(vertices, psi * self.monodromy * inv)
    }

    fn line(&self, a: i64, b: i64) -> Result<ProjectiveLine, GeometryError> {
        line_through(&self.vertex(a), &self.vertex(b))
    }

    fn corner(&self, i: i64) -> Result<(f64, f64), GeometryError> {
        let back = self.line(i - 2, i - 1)?;
        let front = self.line(i + 1, i + 2)?;
        let meet = intersect(&back, &front)?;
        let z = cross_ratio_points(
            &self.vertex(i - 2),
            &self.vertex(i - 1),
            &intersect(&back, &self.line(i, i + 1)?)?,
            &meet,
        )?;
        let w = cross_ratio_points(
            &meet,
            &intersect(&self.line(i - 1, i)?, &front)?,
            &self.vertex(i + 1),
            &self.vertex(i + 2),
        )?;
        Ok((z, w))
    }

    /// The corner coordinates `(z_i, w_i)`, `i = 0..n`:
    ///
    /// ```text
    /// z_i = [v_{i−2}, v_{i−1}, (v_{i−2}v_{i−1}) ∩ (v_i v_{i+1}), (v_{i−2}v_{i−1}) ∩ (v_{i+1}v_{i+2})]
    /// w_i = [(v_{i−2}v_{i−1}) ∩ (v_{i+1}v_{i+2}), (v_{i−1}v_i) ∩ (v_{i+1}v_{i+2}), v_{i+1}, v_{i+2}]
    /// ```
    pub fn canonical_coordinates(&self) -> Result<SignedState, GeometryError> {
        let (z, w): (Vec<f64>, Vec<f64>) = (0..self.n())
            .map(|i| self.corner(i as i64).map_err(|e| e.at(i)))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .unzip();
        Ok(SignedState::new(z, w).expect("corner coordinates have n >= 5 finite entries"))
    }

    /// One pentagram step: new vertex `i` is `(v_{i−1}v_{i+1}) ∩ (v_i v_{i+2})`.
    ///
    /// With this labeling the corner coordinates of the image are exactly the
    /// coordinate map `T` applied to the corner coordinates of `self`.
    pub fn pentagram_step(&self) -> Result<Self, GeometryError> {
        let vertices = (0..self.n() as i64)
            .map(|i| {
                let a = self.line(i - 1, i + 1)?;
                let b = self.line(i, i + 2)?;
                intersect(&a, &b)
            })
            .enumerate()
            .map(|(i, r)| r.map_err(|e| e.at(i)))
            .collect::<Result<_, _>>()?;
        Ok(Self { vertices, monodromy: self.monodromy, inverse: self.inverse })
    }
}

/// On-disk polygon: `{"n": int, "monodromy": [[..3x3..]], "vertices": [[h0,h1,h2], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonFile {
    pub n: usize,
    pub monodromy: [[f64; 3]; 3],
    pub vertices: Vec<[f64; 3]>,
}

impl From<&TwistedPolygon> for PolygonFile {
    fn from(p: &TwistedPolygon) -> Self {
        let m = p.monodromy;
        PolygonFile {
            n: p.n(),
            monodromy: std::array::from_fn(|r| std::array::from_fn(|c| m[(r, c)])),
            vertices: p.vertices.iter().map(ProjectivePoint::coords).collect(),
        }
    }
}

impl TryFrom<PolygonFile> for TwistedPolygon {
    type Error = GeometryError;

    fn try_from(f: PolygonFile) -> Result<Self, Self::Error> {
        if f.n != f.vertices.len() {
            return Err(GeometryError::VertexCount { declared: f.n, actual: f.vertices.len() });
        }
        let vertices = f.vertices.iter().map(|h| ProjectivePoint::new(*h)).collect::<Result<_, _>>()?;
        let m = Matrix3::from_fn(|r, c| f.monodromy[r][c]);
        TwistedPolygon::new(vertices, m)
    }
}
