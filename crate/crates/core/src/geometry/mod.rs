//! Ellipsoids in Euclidean space and on the unit 3-sphere, their confocal
//! families, and point classification.
//!
//! A Euclidean ellipsoid with semi-axes `a` is `Σ xᵢ²/aᵢ² = 1`. Its confocal
//! member with shift `γ` has semi-axes `√(aᵢ² + γ)`.
//!
//! A spherical ellipsoid with parameters `(a, b, c, h)` is the intersection
//! of the cone `f = x²/a² + y²/b² + z²/c² − w²/h² = 0` with the unit sphere
//! `g = x² + y² + z² + w² = 1`. It has two components, one in `w > 0` and one
//! in `w < 0`. Confocal members shift `a², b², c²` by `+γ` and `h²` by `−γ`.

mod roots;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use roots::solve_decreasing;

/// Default absolute tolerance on classification witnesses.
pub const DEFAULT_SURFACE_TOL: f64 = 1e-9;

/// Tolerance on `|q|² − 1` accepted for points on the unit 3-sphere.
pub const UNIT_SPHERE_TOL: f64 = 1e-12;

/// A confocal shift `γ` in squared-length units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfocalShift(pub f64);

impl From<f64> for ConfocalShift {
    fn from(gamma: f64) -> Self {
        ConfocalShift(gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Interior,
    Surface,
    Exterior,
}

/// Side of the equator `w = 0` on the 3-sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    North,
    South,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::North => 1.0,
            Side::South => -1.0,
        }
    }

    pub fn of(w: f64) -> Side {
        if w < 0.0 {
            Side::South
        } else {
            Side::North
        }
    }
}

/// Which components of a spherical ellipsoid carry mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    #[default]
    Both,
    North,
    South,
}

impl Sheet {
    pub fn sides(self) -> &'static [Side] {
        match self {
            Sheet::Both => &[Side::North, Side::South],
            Sheet::North => &[Side::North],
            Sheet::South => &[Side::South],
        }
    }

    pub fn contains(self, side: Side) -> bool {
        self.sides().contains(&side)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub region: Region,
    /// Signed witness: `Σ pᵢ²/aᵢ² − 1` (Euclidean) or `f(q)` (spherical).
    pub witness: f64,
    pub tolerance: f64,
    /// Interior cap on the 3-sphere, `None` in Euclidean space or off the caps.
    pub cap: Option<Side>,
}

impl Classification {
    fn from_witness(witness: f64, tolerance: f64) -> Self {
        let region = if witness < -tolerance {
            Region::Interior
        } else if witness > tolerance {
            Region::Exterior
        } else {
            Region::Surface
        };
        Classification { region, witness, tolerance, cap: None }
    }
}

fn check_positive_finite(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn unit_norm_defect(u: &[f64]) -> f64 {
    (u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs()
}

/// An ellipsoid `Σ xᵢ²/aᵢ² = 1` centred at the origin of `ℝᵈ`, `d ≥ 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EuclideanEllipsoid {
    semi_axes: Vec<f64>,
}

impl TryFrom<Vec<f64>> for EuclideanEllipsoid {
    type Error = Error;

    fn try_from(semi_axes: Vec<f64>) -> Result<Self> {
        EuclideanEllipsoid::new(semi_axes)
    }
}

impl From<EuclideanEllipsoid> for Vec<f64> {
    fn from(e: EuclideanEllipsoid) -> Self {
        e.semi_axes
    }
}

impl EuclideanEllipsoid {
    pub fn new(semi_axes: impl Into<Vec<f64>>) -> Result<Self> {
        let semi_axes = semi_axes.into();
        if semi_axes.len() < 2 {
            return Err(Error::DimensionTooSmall(semi_axes.len()));
        }
        if let Some((index, &value)) = semi_axes.iter().enumerate().find(|(_, &a)| !check_positive_finite(a)) {
            return Err(Error::NonPositiveAxis { index, value });
        }
        Ok(EuclideanEllipsoid { semi_axes })
    }

    /// Sphere of radius `r` in `ℝᵈ`.
    pub fn sphere(dim: usize, r: f64) -> Result<Self> {
        Self::new(vec![r; dim])
    }

    pub fn dim(&self) -> usize {
        self.semi_axes.len()
    }

    pub fn semi_axes(&self) -> &[f64] {
        &self.semi_axes
    }

    pub fn min_sq_axis(&self) -> f64 {
        self.semi_axes.iter().map(|a| a * a).fold(f64::INFINITY, f64::min)
    }

    /// Image of the ellipsoid under the homothety of ratio `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.semi_axes.iter().map(|a| a * factor).collect::<Vec<_>>())
    }

    /// Member of the confocal family with semi-axes `√(aᵢ² + γ)`.
    pub fn confocal_shift(&self, gamma: ConfocalShift) -> Result<Self> {
        let g = gamma.0;
        let mut axes = Vec::with_capacity(self.dim());
        for (index, a) in self.semi_axes.iter().enumerate() {
            let sq = a * a + g;
            if !(sq > 0.0) {
                return Err(Error::ShiftTooNegative { gamma: g, index });
            }
            axes.push(sq.sqrt());
        }
        Self::new(axes)
    }

    /// Shift `γ` such that `other` is the confocal member with that shift, if
    /// the two are confocal to within `tol` (relative to the squared axes).
    pub fn confocal_offset(&self, other: &EuclideanEllipsoid, tol: f64) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::GeometryMismatch("ellipsoids of different dimension"));
        }
        let shifts: Vec<f64> = self.semi_axes.iter().zip(&other.semi_axes).map(|(a0, a1)| a1 * a1 - a0 * a0).collect();
        let scale = self.semi_axes.iter().chain(&other.semi_axes).map(|a| a * a).fold(1.0, f64::max);
        let lo = shifts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = shifts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > tol * scale {
            return Err(Error::NotConfocal(hi - lo));
        }
        Ok(shifts.iter().sum::<f64>() / shifts.len() as f64)
    }

    /// `Σ pᵢ²/aᵢ² − 1`.
    pub fn witness(&self, p: &[f64]) -> f64 {
        self.semi_axes.iter().zip(p).map(|(a, x)| (x / a) * (x / a)).sum::<f64>() - 1.0
    }

    pub fn classify(&self, p: &[f64], surface_tol: f64) -> Classification {
        Classification::from_witness(self.witness(p), surface_tol)
    }

    /// First-order distance estimate `|F|/|∇F|` from `p` to the surface,
    /// exact to second order near the surface.
    pub fn surface_gap(&self, p: &[f64]) -> f64 {
        let grad: f64 = self
            .semi_axes
            .iter()
            .zip(p)
            .map(|(a, x)| {
                let g = 2.0 * x / (a * a);
                g * g
            })
            .sum::<f64>()
            .sqrt();
        let w = self.witness(p).abs();
        if grad == 0.0 {
            // only the centre; its distance is at least the smallest semi-axis
            return self.min_sq_axis().sqrt();
        }
        w / grad
    }

    /// Confocal parameter `λ*` of the member passing through `p`: the root of
    /// `Σ pᵢ²/(aᵢ² + λ) = 1` on `(−min aᵢ², ∞)`.
    pub fn confocal_parameter_through(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.dim() {
            return Err(Error::GeometryMismatch("point dimension"));
        }
        if p.iter().all(|&x| x == 0.0) {
            return Err(Error::NoRoot);
        }
        let sq: Vec<f64> = self.semi_axes.iter().map(|a| a * a).collect();
        let lower = -self.min_sq_axis();
        let phi = |lam: f64| {
            let mut v = -1.0;
            let mut dv = 0.0;
            for (s, x) in sq.iter().zip(p) {
                let d = s + lam;
                v += x * x / d;
                dv -= x * x / (d * d);
            }
            (v, dv)
        };
        // the limit at the lower end is finite when p has no component along
        // the shortest axes; then a root exists only if that limit is positive
        let singular = sq.iter().zip(p).any(|(s, x)| *s + lower == 0.0 && *x != 0.0);
        if !singular {
            let limit: f64 =
                sq.iter().zip(p).filter(|(s, _)| **s + lower > 0.0).map(|(s, x)| x * x / (s + lower)).sum::<f64>()
                    - 1.0;
            if limit <= 0.0 {
                return Err(Error::NoRoot);
            }
        }
        let norm_sq: f64 = p.iter().map(|x| x * x).sum();
        let upper = lower.max(0.0) + norm_sq + 1.0;
        solve_decreasing(phi, lower, upper)
    }

    /// Point `(a₁u₁, …, a_d u_d)` for a unit vector `u`.
    pub fn surface_point(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim() {
            return Err(Error::BadParameter(format!("parameter has {} components, expected {}", u.len(), self.dim())));
        }
        let defect = unit_norm_defect(u);
        if defect > 1e-12 {
            return Err(Error::BadParameter(format!("parameter is not a unit vector (defect {defect:e})")));
        }
        Ok(self.semi_axes.iter().zip(u).map(|(a, x)| a * x).collect())
    }

    /// Parameter `u = A⁻¹p/|A⁻¹p|` of the surface point on the ray through `p`.
    pub fn parameter_of(&self, p: &[f64]) -> Option<Vec<f64>> {
        let v: Vec<f64> = self.semi_axes.iter().zip(p).map(|(a, x)| x / a).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (n > 0.0).then(|| v.into_iter().map(|x| x / n).collect())
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.semi_axes.iter().product::<f64>()
    }
}

/// Volume of the unit ball in `ℝᵈ`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = 2π/d · V_{d-2}
    let (mut v, mut k) = if dim.is_multiple_of(2) { (1.0, 2) } else { (2.0, 3) };
    while k <= dim {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// Area of the unit sphere `S^{d−1} ⊂ ℝᵈ`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    dim as f64 * unit_ball_volume(dim)
}

/// An ellipsoid on the unit 3-sphere, `{f = 0, g = 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SphericalEllipsoidRepr", into = "SphericalEllipsoidRepr")]
pub struct SphericalEllipsoid {
    params: [f64; 4],
    sheet: Sheet,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SphericalEllipsoidRepr {
    params: [f64; 4],
    #[serde(default)]
    sheet: Sheet,
}

impl TryFrom<SphericalEllipsoidRepr> for SphericalEllipsoid {
    type Error = Error;

    fn try_from(r: SphericalEllipsoidRepr) -> Result<Self> {
        let [a, b, c, h] = r.params;
        SphericalEllipsoid::new(a, b, c, h, r.sheet)
    }
}

impl From<SphericalEllipsoid> for SphericalEllipsoidRepr {
    fn from(s: SphericalEllipsoid) -> Self {
        SphericalEllipsoidRepr { params: s.params, sheet: s.sheet }
    }
}

impl SphericalEllipsoid {
    pub fn new(a: f64, b: f64, c: f64, h: f64, sheet: Sheet) -> Result<Self> {
        for (name, value) in [("a", a), ("b", b), ("c", c), ("h", h)] {
            if !check_positive_finite(value) {
                return Err(Error::NonPositiveParam { name, value });
            }
        }
        Ok(SphericalEllipsoid { params: [a, b, c, h], sheet })
    }

    pub fn params(&self) -> [f64; 4] {
        self.params
    }

    pub fn sheet(&self) -> Sheet {
        self.sheet
    }

    pub fn with_sheet(&self, sheet: Sheet) -> Self {
        SphericalEllipsoid { params: self.params, sheet }
    }

    fn sq(&self) -> [f64; 4] {
        self.params.map(|p| p * p)
    }

    /// Admissible shifts form the open interval `(−min(a²,b²,c²), h²)`.
    pub fn shift_interval(&self) -> (f64, f64) {
        let [a2, b2, c2, h2] = self.sq();
        (-a2.min(b2).min(c2), h2)
    }

    pub fn confocal_shift(&self, gamma: ConfocalShift) -> Result<Self> {
        let g = gamma.0;
        let (lower, upper) = self.shift_interval();
        if !(g > lower && g < upper) {
            return Err(Error::ShiftOutOfRange { gamma: g, lower, upper });
        }
        let [a2, b2, c2, h2] = self.sq();
        let (a, b, c, h) = ((a2 + g).sqrt(), (b2 + g).sqrt(), (c2 + g).sqrt(), (h2 - g).sqrt());
        // rounding can still produce a zero parameter at the very edge
        SphericalEllipsoid::new(a, b, c, h, self.sheet).map_err(|_| Error::ShiftOutOfRange { gamma: g, lower, upper })
    }

    /// Shift relating `self` to `other`, checked for confocality.
    pub fn confocal_offset(&self, other: &SphericalEllipsoid, tol: f64) -> Result<f64> {
        let s0 = self.sq();
        let s1 = other.sq();
        let shifts = [s1[0] - s0[0], s1[1] - s0[1], s1[2] - s0[2], s0[3] - s1[3]];
        let scale = s0.iter().chain(&s1).cloned().fold(1.0, f64::max);
        let lo = shifts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = shifts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > tol * scale {
            return Err(Error::NotConfocal(hi - lo));
        }
        Ok(shifts.iter().sum::<f64>() / 4.0)
    }

    /// `f(q) = x²/a² + y²/b² + z²/c² − w²/h²`.
    pub fn f(&self, q: &[f64; 4]) -> f64 {
        let [a, b, c, h] = self.params;
        (q[0] / a).powi(2) + (q[1] / b).powi(2) + (q[2] / c).powi(2) - (q[3] / h).powi(2)
    }

    pub fn grad_f(&self, q: &[f64; 4]) -> [f64; 4] {
        let [a2, b2, c2, h2] = self.sq();
        [2.0 * q[0] / a2, 2.0 * q[1] / b2, 2.0 * q[2] / c2, -2.0 * q[3] / h2]
    }

    pub fn classify(&self, q: &[f64; 4], surface_tol: f64) -> Result<Classification> {
        check_unit(q)?;
        let mut c = Classification::from_witness(self.f(q), surface_tol);
        if c.region == Region::Interior {
            c.cap = Some(Side::of(q[3]));
        }
        Ok(c)
    }

    /// First-order geodesic distance estimate from `q` to the quadric
    /// `{f = 0}` (both components), using the gradient of `f` tangent to
    /// the 3-sphere.
    pub fn surface_gap(&self, q: &[f64; 4]) -> f64 {
        let gf = self.grad_f(q);
        let radial: f64 = gf.iter().zip(q).map(|(g, x)| g * x).sum();
        let tangential: f64 = gf.iter().zip(q).map(|(g, x)| (g - radial * x).powi(2)).sum::<f64>().sqrt();
        if tangential == 0.0 {
            // critical points of f on the sphere are the coordinate axes,
            // where f is ±1/(axis)² and never zero
            return std::f64::consts::FRAC_PI_2.min(self.f(q).abs());
        }
        self.f(q).abs() / tangential
    }

    /// Root `γ*` of `ψ(γ) = x²/(a²+γ) + y²/(b²+γ) + z²/(c²+γ) − w²/(h²−γ)`
    /// on the admissible interval: the confocal member through `q`.
    pub fn confocal_parameter_through(&self, q: &[f64; 4]) -> Result<f64> {
        check_unit(q)?;
        if q[0] == 0.0 && q[1] == 0.0 && q[2] == 0.0 {
            return Err(Error::PolePoint);
        }
        let [a2, b2, c2, h2] = self.sq();
        let (lower, upper) = self.shift_interval();
        if q[3] == 0.0 {
            // ψ stays positive up to γ = h²
            return Err(Error::NoRoot);
        }
        let spatial = [(a2, q[0]), (b2, q[1]), (c2, q[2])];
        let singular = spatial.iter().any(|(s, x)| *s + lower == 0.0 && *x != 0.0);
        if !singular {
            let limit: f64 =
                spatial.iter().filter(|(s, _)| *s + lower > 0.0).map(|(s, x)| x * x / (s + lower)).sum::<f64>()
                    - q[3] * q[3] / (h2 - lower);
            if limit <= 0.0 {
                return Err(Error::NoRoot);
            }
        }
        let psi = |g: f64| {
            let mut v = 0.0;
            let mut dv = 0.0;
            for (s, x) in spatial {
                let d = s + g;
                v += x * x / d;
                dv -= x * x / (d * d);
            }
            let d = h2 - g;
            v -= q[3] * q[3] / d;
            dv -= q[3] * q[3] / (d * d);
            (v, dv)
        };
        solve_decreasing(psi, lower, upper)
    }

    /// Point of the given side with parameter `u ∈ S²`:
    /// `r·(a u₁, b u₂, c u₃, ±h)` with `r = 1/√(h² + a²u₁² + b²u₂² + c²u₃²)`.
    pub fn surface_point(&self, u: &[f64; 3], side: Side) -> Result<[f64; 4]> {
        let defect = unit_norm_defect(u);
        if defect > 1e-12 {
            return Err(Error::BadParameter(format!("parameter is not a unit vector (defect {defect:e})")));
        }
        Ok(self.point_at(u, side))
    }

    pub(crate) fn point_at(&self, u: &[f64; 3], side: Side) -> [f64; 4] {
        let [a, b, c, h] = self.params;
        let (x, y, z) = (a * u[0], b * u[1], c * u[2]);
        let r = 1.0 / (h * h + x * x + y * y + z * z).sqrt();
        [r * x, r * y, r * z, side.sign() * r * h]
    }

    /// `h² + a²u₁² + b²u₂² + c²u₃²`, the reciprocal of `r²` at parameter `u`.
    pub(crate) fn inverse_r_sq(&self, u: &[f64; 3]) -> f64 {
        let [a2, b2, c2, h2] = self.sq();
        h2 + a2 * u[0] * u[0] + b2 * u[1] * u[1] + c2 * u[2] * u[2]
    }

    /// Parameter and side of the surface point on the "ray" through `q`,
    /// i.e. `u ∝ (x/a, y/b, z/c)`.
    pub fn parameter_of(&self, q: &[f64; 4]) -> Option<([f64; 3], Side)> {
        let [a, b, c, _] = self.params;
        let v = [q[0] / a, q[1] / b, q[2] / c];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        (n > 0.0).then(|| ([v[0] / n, v[1] / n, v[2] / n], Side::of(q[3])))
    }
}

pub(crate) fn check_unit(q: &[f64; 4]) -> Result<()> {
    let defect = q.iter().map(|x| x * x).sum::<f64>() - 1.0;
    if defect.abs() > UNIT_SPHERE_TOL {
        return Err(Error::NotOnSphere(defect));
    }
    Ok(())
}

/// Normalise a nonzero 4-vector onto the unit 3-sphere.
pub fn normalize4(q: [f64; 4]) -> [f64; 4] {
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.map(|x| x / n)
}
