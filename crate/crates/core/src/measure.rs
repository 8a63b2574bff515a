//! Surface mass distributions.
//!
//! Every distribution is described by a weight per unit area of the
//! parameter sphere `u ∈ S^{d−1}`, so surface integrals never involve an area
//! Jacobian:
//!
//! * Euclidean homeoid on `x = A u`: the affine image of a uniform sphere,
//!   weight `M / |S^{d−1}|`.
//! * Spherical homeoid on `{f = 0, g = 1}`: the coarea (Gelfand–Leray)
//!   measure `δ(f) δ(g − 1) dV`. In the coordinates
//!   `(t a u₁, t b u₂, t c u₃, s h)` it equals `abc·h / (4 (h² + a²u₁² + b²u₂² + c²u₃²))`
//!   per sheet, i.e. it is proportional to `r²`.
//! * Focaloid on `E(λ)`: the limit of the confocal layer between `E(λ)` and
//!   `E(λ + dλ)`. The normal gap `(dλ/2)·√(Σ xᵢ²/αᵢ⁴)` times the area element
//!   `Πα·√(Σ uᵢ²/αᵢ²)` gives a weight proportional to `Σ uᵢ²/αᵢ²`.
//!
//! On a two-sheet spherical homeoid the `df ∧ dg` density is oriented by the
//! shared parametrisation `u`, and the reflection `w ↦ −w` that carries one
//! sheet to the other reverses that orientation, so the southern sheet enters
//! fields with the opposite sign. Weights returned here are magnitudes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_sphere_area, ConfocalShift, EuclideanEllipsoid, Sheet, Side, SphericalEllipsoid};
use crate::potential::FieldValue;
use crate::quadrature::{gauss_legendre, random_unit_vector, QuadratureMethod, QuadratureSpec, SphereRule};

/// A Euclidean ellipsoid `E(λ)` of the confocal family of `base`, carrying a
/// focaloid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocaloidSurface {
    base: EuclideanEllipsoid,
    lambda: f64,
}

impl FocaloidSurface {
    pub fn new(base: EuclideanEllipsoid, lambda: f64) -> Result<Self> {
        base.confocal_shift(ConfocalShift(lambda))?;
        Ok(FocaloidSurface { base, lambda })
    }

    pub fn base(&self) -> &EuclideanEllipsoid {
        &self.base
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// The carrying ellipsoid `E(λ)`.
    pub fn carrier(&self) -> EuclideanEllipsoid {
        self.base.confocal_shift(ConfocalShift(self.lambda)).expect("validated shift")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassKind {
    Homeoid,
    Focaloid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Carrier {
    Euclidean(EuclideanEllipsoid),
    Spherical(SphericalEllipsoid),
    Focaloid(FocaloidSurface),
}

/// A quadric surface with a surface mass distribution of total mass `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassSurface {
    carrier: Carrier,
    kind: MassKind,
    total_mass: f64,
    /// Weight per unit parameter area divided by the unnormalised density.
    scale: f64,
}

fn check_mass(m: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::BadParameter(format!("total mass must be positive, got {m}")));
    }
    Ok(())
}

impl MassSurface {
    pub fn euclidean_homeoid(e: EuclideanEllipsoid, total_mass: f64) -> Result<Self> {
        check_mass(total_mass)?;
        let scale = total_mass / unit_sphere_area(e.dim());
        Ok(MassSurface { carrier: Carrier::Euclidean(e), kind: MassKind::Homeoid, total_mass, scale })
    }

    pub fn spherical_homeoid(se: SphericalEllipsoid, total_mass: f64) -> Result<Self> {
        check_mass(total_mass)?;
        let norm = spherical_normalizer(&se);
        let sheets = se.sheet().sides().len() as f64;
        let scale = total_mass / (sheets * norm);
        Ok(MassSurface { carrier: Carrier::Spherical(se), kind: MassKind::Homeoid, total_mass, scale })
    }

    pub fn focaloid(surface: FocaloidSurface, total_mass: f64) -> Result<Self> {
        check_mass(total_mass)?;
        let carrier = surface.carrier();
        let d = carrier.dim() as f64;
        let inv_sq: f64 = carrier.semi_axes().iter().map(|a| 1.0 / (a * a)).sum();
        let scale = total_mass / (unit_sphere_area(carrier.dim()) / d * inv_sq);
        Ok(MassSurface { carrier: Carrier::Focaloid(surface), kind: MassKind::Focaloid, total_mass, scale })
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn kind(&self) -> MassKind {
        self.kind
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Same distribution with a different total mass.
    pub fn with_mass(&self, total_mass: f64) -> Result<Self> {
        check_mass(total_mass)?;
        Ok(MassSurface { scale: self.scale * total_mass / self.total_mass, total_mass, ..self.clone() })
    }

    /// Dimension of the parameter sphere's ambient space.
    pub fn param_dim(&self) -> usize {
        match &self.carrier {
            Carrier::Euclidean(e) => e.dim(),
            Carrier::Spherical(_) => 3,
            Carrier::Focaloid(f) => f.base().dim(),
        }
    }

    /// Dimension of the space the surface lives in.
    pub fn ambient_dim(&self) -> usize {
        match &self.carrier {
            Carrier::Spherical(_) => 4,
            _ => self.param_dim(),
        }
    }

    pub fn is_spherical(&self) -> bool {
        matches!(self.carrier, Carrier::Spherical(_))
    }

    /// The ellipsoid carrying the mass in Euclidean space.
    pub fn euclidean_carrier(&self) -> Option<EuclideanEllipsoid> {
        match &self.carrier {
            Carrier::Euclidean(e) => Some(e.clone()),
            Carrier::Focaloid(f) => Some(f.carrier()),
            Carrier::Spherical(_) => None,
        }
    }

    pub fn spherical_carrier(&self) -> Option<&SphericalEllipsoid> {
        match &self.carrier {
            Carrier::Spherical(se) => Some(se),
            _ => None,
        }
    }

    /// Weight per unit parameter area at `u`, without sheet sign.
    pub(crate) fn weight_unchecked(&self, u: &[f64]) -> f64 {
        match &self.carrier {
            Carrier::Euclidean(_) => self.scale,
            Carrier::Spherical(se) => self.scale / se.inverse_r_sq(&[u[0], u[1], u[2]]),
            Carrier::Focaloid(f) => {
                let lam = f.lambda();
                let s: f64 = f.base().semi_axes().iter().zip(u).map(|(a, x)| x * x / (a * a + lam)).sum();
                self.scale * s
            }
        }
    }

    /// Sign with which a sheet enters the field: the southern sheet of a
    /// two-sheet spherical homeoid is negatively oriented.
    pub(crate) fn side_sign(&self, side: Side) -> f64 {
        match &self.carrier {
            Carrier::Spherical(se) if se.sheet() == Sheet::Both => side.sign(),
            _ => 1.0,
        }
    }
}

/// `∫_{S²} dS(u) / (h² + a²u₁² + b²u₂² + c²u₃²)`.
fn spherical_normalizer(se: &SphericalEllipsoid) -> f64 {
    let integrate = |order: usize| -> f64 {
        let rule = SphereRule::gauss_product(3, order);
        // ring by ring keeps the rounding well below the tolerance
        rule.chunk_ranges()
            .into_iter()
            .map(|r| {
                r.map(|i| rule.weight(i) / se.inverse_r_sq(&[rule.node(i)[0], rule.node(i)[1], rule.node(i)[2]]))
                    .sum::<f64>()
            })
            .sum()
    };
    let mut order = 48;
    let mut prev = integrate(order);
    while order < 384 {
        order *= 2;
        let next = integrate(order);
        if (next - prev).abs() <= 4e-15 * next.abs() {
            return next;
        }
        prev = next;
    }
    prev
}

fn check_unit_param(u: &[f64], dim: usize) -> Result<()> {
    if u.len() != dim {
        return Err(Error::BadParameter(format!("parameter has {} components, expected {dim}", u.len())));
    }
    let defect = (u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs();
    if defect > 1e-12 {
        return Err(Error::BadParameter(format!("parameter is not a unit vector (defect {defect:e})")));
    }
    Ok(())
}

/// Mass per unit parameter area of a Euclidean homeoid; constant in `u`.
pub fn euclidean_homeoid_mass_element(ms: &MassSurface, u: &[f64]) -> Result<f64> {
    match (&ms.carrier, ms.kind) {
        (Carrier::Euclidean(e), MassKind::Homeoid) => {
            check_unit_param(u, e.dim())?;
            Ok(ms.weight_unchecked(u))
        }
        _ => Err(Error::WrongKind(kind_name(ms))),
    }
}

/// Mass per unit parameter area of one sheet of a spherical homeoid. Returns
/// zero for a side that carries no mass.
pub fn spherical_homeoid_mass_element(ms: &MassSurface, u: &[f64; 3], side: Side) -> Result<f64> {
    match &ms.carrier {
        Carrier::Spherical(se) => {
            check_unit_param(u, 3)?;
            Ok(if se.sheet().contains(side) { ms.weight_unchecked(u) } else { 0.0 })
        }
        _ => Err(Error::WrongKind(kind_name(ms))),
    }
}

/// Mass per unit parameter area of a focaloid.
pub fn focaloid_mass_element(ms: &MassSurface, u: &[f64]) -> Result<f64> {
    match &ms.carrier {
        Carrier::Focaloid(f) => {
            check_unit_param(u, f.base().dim())?;
            Ok(ms.weight_unchecked(u))
        }
        _ => Err(Error::WrongKind(kind_name(ms))),
    }
}

fn kind_name(ms: &MassSurface) -> &'static str {
    match (&ms.carrier, ms.kind) {
        (Carrier::Euclidean(_), _) => "Euclidean homeoid",
        (Carrier::Spherical(_), _) => "spherical homeoid",
        (Carrier::Focaloid(_), _) => "focaloid",
    }
}

/// Quadrature of the (unsigned) mass element over the whole surface.
pub fn total_mass(ms: &MassSurface, quad: &QuadratureSpec) -> Result<FieldValue<f64>> {
    quad.validate()?;
    let sides = match &ms.carrier {
        Carrier::Spherical(se) => se.sheet().sides().len() as f64,
        _ => 1.0,
    };
    let dim = ms.param_dim();
    let sum_rule = |rule: &SphereRule| -> (f64, f64) {
        let mut s = 0.0;
        let mut s2 = 0.0;
        for (u, w) in rule.iter() {
            let t = w * ms.weight_unchecked(u) * sides;
            s += t;
            s2 += t * t;
        }
        (s, s2)
    };
    let (value, error, order) = match quad.method {
        QuadratureMethod::GaussProduct { order } => {
            let coarse = sum_rule(&SphereRule::gauss_product(dim, order)).0;
            let fine_order = order * quad.refinement;
            let fine = sum_rule(&SphereRule::gauss_product(dim, fine_order)).0;
            (fine, (fine - coarse).abs(), Some(fine_order))
        }
        QuadratureMethod::MonteCarlo { samples, seed } => {
            let (s, s2) = sum_rule(&SphereRule::monte_carlo(dim, samples, seed));
            let n = samples as f64;
            let var = ((s2 - s * s / n) * n / (n - 1.0)).max(0.0);
            (s, var.sqrt(), None)
        }
    };
    if !value.is_finite() {
        return Err(Error::QuadratureFailure("non-finite mass".into()));
    }
    Ok(FieldValue::new(value, error, order, quad))
}

/// A spherical cap `{u : u·axis ≥ cos r}` of a parameter sphere `S²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamCap {
    pub axis: [f64; 3],
    pub angular_radius: f64,
}

impl ParamCap {
    pub fn new(axis: [f64; 3], angular_radius: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(n > 0.0) || !(angular_radius > 0.0 && angular_radius <= std::f64::consts::PI) {
            return Err(Error::BadParameter("degenerate parameter cap".into()));
        }
        Ok(ParamCap { axis: axis.map(|x| x / n), angular_radius })
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u[0] * self.axis[0] + u[1] * self.axis[1] + u[2] * self.axis[2] >= self.angular_radius.cos()
    }

    /// Product rule restricted to the cap: Gauss–Legendre in `u·axis` over
    /// `[cos r, 1]`, trapezoid in the azimuth about the axis.
    fn rule(&self, order: usize) -> Vec<([f64; 3], f64)> {
        let axis = self.axis;
        // orthonormal frame (e1, e2, axis)
        let helper = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let dot = helper[0] * axis[0] + helper[1] * axis[1] + helper[2] * axis[2];
        let mut e1 = [helper[0] - dot * axis[0], helper[1] - dot * axis[1], helper[2] - dot * axis[2]];
        let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
        e1 = e1.map(|x| x / n1);
        let e2 =
            [axis[1] * e1[2] - axis[2] * e1[1], axis[2] * e1[0] - axis[0] * e1[2], axis[0] * e1[1] - axis[1] * e1[0]];
        let lo = self.angular_radius.cos();
        let (t, wt) = gauss_legendre(order);
        let m = 2 * order;
        let h = 2.0 * std::f64::consts::PI / m as f64;
        let mut out = Vec::with_capacity(order * m);
        for (t, wt) in t.iter().zip(&wt) {
            let c = lo + (1.0 - lo) * 0.5 * (t + 1.0);
            let s = (1.0 - c * c).max(0.0).sqrt();
            let w = wt * 0.5 * (1.0 - lo) * h;
            for k in 0..m {
                let (sp, cp) = (h * k as f64).sin_cos();
                let u = [0, 1, 2].map(|i| s * (cp * e1[i] + sp * e2[i]) + c * axis[i]);
                out.push((u, w));
            }
        }
        out
    }
}

/// Mass carried by the parameter cap on the given side (ignored in
/// Euclidean space), as a fraction of the total mass. Only for surfaces
/// parametrised by `S²`.
pub fn cap_mass_fraction(ms: &MassSurface, cap: &ParamCap, side: Option<Side>, order: usize) -> Result<f64> {
    if ms.param_dim() != 3 {
        return Err(Error::GeometryMismatch("parameter caps need a two-dimensional surface"));
    }
    let sides = match (&ms.carrier, side) {
        (Carrier::Spherical(se), Some(s)) => f64::from(u8::from(se.sheet().contains(s))),
        (Carrier::Spherical(se), None) => se.sheet().sides().len() as f64,
        _ => 1.0,
    };
    let m: f64 = cap.rule(order).iter().map(|(u, w)| w * ms.weight_unchecked(u)).sum();
    Ok(m * sides / ms.total_mass)
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Samples that satisfied the acceptance condition.
    pub accepted: usize,
}

impl McEstimate {
    fn binomial(hits: usize, accepted: usize) -> Self {
        let n = accepted.max(1) as f64;
        let p = hits as f64 / n;
        McEstimate { value: p, std_error: (p * (1.0 - p) / n).sqrt(), accepted }
    }

    /// `|value − other| ≤ k·σ` where σ combines both standard errors.
    pub fn agrees_with(&self, other: f64, other_error: f64, k: f64) -> bool {
        (self.value - other).abs() <= k * (self.std_error.powi(2) + other_error.powi(2)).sqrt()
    }
}

const MC_CHUNK: usize = 1 << 16;

/// Run `samples` draws in fixed-size chunks, chunk `k` on ChaCha stream `k`.
fn chunked_mc<F>(samples: usize, seed: u64, draw: F) -> (usize, usize)
where
    F: Fn(&mut ChaCha8Rng) -> Option<bool> + Sync,
{
    let chunks: Vec<std::ops::Range<usize>> =
        (0..samples.div_ceil(MC_CHUNK)).map(|k| k * MC_CHUNK..((k + 1) * MC_CHUNK).min(samples)).collect();
    crate::quadrature::chunked_reduce(
        chunks,
        |range| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((range.start / MC_CHUNK) as u64);
            let (mut hits, mut accepted) = (0usize, 0usize);
            for _ in range {
                if let Some(hit) = draw(&mut rng) {
                    accepted += 1;
                    hits += usize::from(hit);
                }
            }
            (hits, accepted)
        },
        |a, b| (a.0 + b.0, a.1 + b.1),
        (0, 0),
    )
}

/// Fraction of the volume of `E` lying in the cone over the surface region
/// `{A u : u ∈ region}` with apex at the centre.
///
/// Points are drawn uniformly in the bounding box and rejected outside `E`.
pub fn cone_volume_oracle<R>(e: &EuclideanEllipsoid, region: R, samples: usize, seed: u64) -> McEstimate
where
    R: Fn(&[f64]) -> bool + Sync,
{
    let axes = e.semi_axes().to_vec();
    let (hits, accepted) = chunked_mc(samples, seed, |rng| {
        let x: Vec<f64> = axes.iter().map(|a| a * rng.gen_range(-1.0..1.0)).collect();
        if e.witness(&x) >= 0.0 {
            return None;
        }
        Some(e.parameter_of(&x).is_some_and(|u| region(&u)))
    });
    McEstimate::binomial(hits, accepted)
}

/// Fraction of the volume of the thin shell `{|f| < ε, |g − 1| < δ}` of
/// `ℝ⁴` lying over a parameter region of the selected sheets.
///
/// Points are drawn uniformly in the spherical shell `|g − 1| < δ` (uniform
/// direction, radius with `R⁴` uniform) and kept when `|f| < ε` on a sheet of
/// `se.sheet()`. The fraction is relative to all kept points, so it converges
/// to the normalised coarea mass of the region as `ε, δ → 0`.
pub fn thin_shell_oracle<R>(
    se: &SphericalEllipsoid,
    region: R,
    eps: f64,
    delta: f64,
    samples: usize,
    seed: u64,
) -> McEstimate
where
    R: Fn(&[f64; 3], Side) -> bool + Sync,
{
    let (r4_lo, r4_hi) = ((1.0 - delta).powi(2), (1.0 + delta).powi(2));
    let sheet = se.sheet();
    let (hits, accepted) = chunked_mc(samples, seed, |rng| {
        let dir = random_unit_vector(4, rng);
        let r = rng.gen_range(r4_lo..r4_hi).powf(0.25);
        let x = [r * dir[0], r * dir[1], r * dir[2], r * dir[3]];
        if se.f(&x).abs() >= eps {
            return None;
        }
        let (u, side) = se.parameter_of(&x)?;
        if !sheet.contains(side) {
            return None;
        }
        Some(region(&u, side))
    });
    McEstimate::binomial(hits, accepted)
}

/// How the inner boundary of a thick layer relates to the outer one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerRelation {
    /// Inner ellipsoid is `factor · outer`, `0 < factor < 1` (thick homeoid).
    Homothetic { factor: f64 },
    /// Inner ellipsoid is the confocal member with shift `shift < 0` (thick
    /// focaloid).
    Confocal { shift: f64 },
}

/// Solid layer between two ellipsoids with uniform volume density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThickLayer {
    outer: EuclideanEllipsoid,
    relation: LayerRelation,
    density: f64,
}

impl ThickLayer {
    pub fn new(outer: EuclideanEllipsoid, relation: LayerRelation, density: f64) -> Result<Self> {
        match relation {
            LayerRelation::Homothetic { factor } => {
                if !(factor > 0.0 && factor < 1.0) {
                    return Err(if factor >= 1.0 {
                        Error::ZeroMass
                    } else {
                        Error::BadParameter(format!("homothety factor {factor} outside (0, 1)"))
                    });
                }
            }
            LayerRelation::Confocal { shift } => {
                if shift >= 0.0 {
                    return Err(Error::ZeroMass);
                }
                outer.confocal_shift(ConfocalShift(shift))?;
            }
        }
        if !(density.is_finite() && density > 0.0) {
            return Err(Error::ZeroMass);
        }
        let layer = ThickLayer { outer, relation, density };
        if !(layer.mass() > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(layer)
    }

    /// Layer of the given total mass.
    pub fn with_mass(outer: EuclideanEllipsoid, relation: LayerRelation, mass: f64) -> Result<Self> {
        check_mass(mass)?;
        let unit = ThickLayer::new(outer, relation, 1.0)?;
        let density = mass / unit.mass();
        ThickLayer::new(unit.outer, relation, density)
    }

    pub fn outer(&self) -> &EuclideanEllipsoid {
        &self.outer
    }

    pub fn inner(&self) -> EuclideanEllipsoid {
        match self.relation {
            LayerRelation::Homothetic { factor } => self.outer.scaled(factor).expect("validated factor"),
            LayerRelation::Confocal { shift } => {
                self.outer.confocal_shift(ConfocalShift(shift)).expect("validated shift")
            }
        }
    }

    pub fn relation(&self) -> LayerRelation {
        self.relation
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn mass(&self) -> f64 {
        self.density * (self.outer.volume() - self.inner().volume())
    }
}
