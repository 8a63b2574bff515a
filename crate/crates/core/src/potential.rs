//! Harmonic kernels and the quadrature engine for potentials and forces.
//!
//! Conventions: `G = 1`, potentials are positive near a positive Euclidean
//! source and vanish at infinity for `d ≥ 3`, and the attraction is `+∇V`.
//!
//! | geometry      | kernel `K`            | force term per unit mass        |
//! |---------------|-----------------------|---------------------------------|
//! | `ℝ²`          | `−ln r`               | `(x − p)/r²`                    |
//! | `ℝ³`          | `1/r`                 | `(x − p)/r³`                    |
//! | `ℝᵈ`, `d ≥ 4` | `r^{2−d}`             | `(d − 2)(x − p)/r^d`            |
//! | `S³`          | `cot ρ`, `cos ρ = q·x` | `(x − (q·x) q)/sin³ρ`           |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_unit, EuclideanEllipsoid, Side};
use crate::measure::{Carrier, MassSurface, ThickLayer};
use crate::quadrature::{chunked_reduce, gauss_legendre_interval, QuadratureMethod, QuadratureSpec, SphereRule};

/// Default number of Gauss–Legendre nodes in the homothety parameter.
pub const DEFAULT_LAYERS: usize = 32;

/// Product rules are not refined beyond this many nodes.
const MAX_NODES: usize = 6_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "lowercase")]
pub enum Kernel {
    Euclidean { dim: usize },
    Spherical,
}

impl Kernel {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        Ok(Kernel::Euclidean { dim })
    }

    /// Kernel value at the evaluation point for a unit source.
    pub fn eval(&self, source: &[f64], eval: &[f64]) -> Result<f64> {
        match *self {
            Kernel::Euclidean { dim } => {
                if source.len() != dim || eval.len() != dim {
                    return Err(Error::GeometryMismatch("point dimension"));
                }
                let r2: f64 = source.iter().zip(eval).map(|(x, p)| (x - p) * (x - p)).sum();
                if r2 == 0.0 {
                    return Err(Error::Coincident);
                }
                Ok(euclidean_kernel(dim, r2))
            }
            Kernel::Spherical => {
                let (x, q) = (as4(source)?, as4(eval)?);
                check_unit(&x)?;
                check_unit(&q)?;
                let (minus, plus) = chord_pair(&x, &q);
                if minus == 0.0 {
                    return Err(Error::Coincident);
                }
                if plus == 0.0 {
                    return Err(Error::Antipodal);
                }
                let c: f64 = x.iter().zip(&q).map(|(a, b)| a * b).sum();
                Ok(c / (0.5 * (minus * plus).sqrt()))
            }
        }
    }
}

fn as4(p: &[f64]) -> Result<[f64; 4]> {
    p.try_into().map_err(|_| Error::GeometryMismatch("spherical points have four coordinates"))
}

#[inline]
fn euclidean_kernel(dim: usize, r2: f64) -> f64 {
    match dim {
        2 => -0.5 * r2.ln(),
        3 => 1.0 / r2.sqrt(),
        _ => r2.powf(1.0 - 0.5 * dim as f64),
    }
}

/// `(|x − q|², |x + q|²)`; their product is `4 sin²ρ`.
#[inline]
fn chord_pair(x: &[f64; 4], q: &[f64; 4]) -> (f64, f64) {
    let mut minus = 0.0;
    let mut plus = 0.0;
    for i in 0..4 {
        minus += (x[i] - q[i]) * (x[i] - q[i]);
        plus += (x[i] + q[i]) * (x[i] + q[i]);
    }
    (minus, plus)
}

/// Which quadrature produced a value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureMeta {
    pub method: String,
    /// Order of the rule whose value is reported (product rules).
    pub order: Option<usize>,
    pub samples: Option<usize>,
}

/// A computed potential or force with its error estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldValue<T> {
    pub value: T,
    /// Order-doubling difference (product rules) or standard error (Monte
    /// Carlo). For vectors, the Euclidean norm of the componentwise estimate.
    pub error_estimate: f64,
    pub meta: QuadratureMeta,
}

impl<T> FieldValue<T> {
    pub(crate) fn new(value: T, error_estimate: f64, order: Option<usize>, quad: &QuadratureSpec) -> Self {
        let (method, samples) = match quad.method {
            QuadratureMethod::GaussProduct { .. } => ("gauss_product", None),
            QuadratureMethod::MonteCarlo { samples, .. } => ("monte_carlo", Some(samples)),
        };
        FieldValue { value, error_estimate, meta: QuadratureMeta { method: method.into(), order, samples } }
    }
}

/// Potential and force at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub potential: FieldValue<f64>,
    pub force: FieldValue<Vec<f64>>,
}

#[derive(Debug, Clone, Default)]
struct Sums {
    v: f64,
    f: Vec<f64>,
    v2: f64,
    f2: Vec<f64>,
}

impl Sums {
    fn zero(dim: usize) -> Self {
        Sums { v: 0.0, f: vec![0.0; dim], v2: 0.0, f2: vec![0.0; dim] }
    }

    fn add(mut self, other: Sums) -> Sums {
        self.v += other.v;
        self.v2 += other.v2;
        for i in 0..self.f.len() {
            self.f[i] += other.f[i];
            self.f2[i] += other.f2[i];
        }
        self
    }
}

/// Refuse evaluation points too close to the carrying surface (or its
/// antipodal image on the 3-sphere).
pub fn check_separation(ms: &MassSurface, p: &[f64], min_sep: f64) -> Result<()> {
    match ms.carrier() {
        Carrier::Spherical(se) => {
            let q = as4(p)?;
            check_unit(&q)?;
            let distance = se.surface_gap(&q);
            if distance < min_sep {
                // the quadric {f = 0} is centrally symmetric: the component on
                // the other side of the equator is the antipodal image
                return Err(if se.sheet().contains(Side::of(q[3])) {
                    Error::TooCloseToSurface { distance, min_sep }
                } else {
                    Error::TooCloseToAntipode { distance, min_sep }
                });
            }
        }
        _ => {
            if p.len() != ms.ambient_dim() {
                return Err(Error::GeometryMismatch("point dimension"));
            }
            let e = ms.euclidean_carrier().expect("Euclidean carrier");
            let distance = e.surface_gap(p);
            if distance < min_sep {
                return Err(Error::TooCloseToSurface { distance, min_sep });
            }
        }
    }
    Ok(())
}

fn integrate_rule(ms: &MassSurface, p: &[f64], rule: &SphereRule) -> Sums {
    let dim = p.len();
    let map = |range: std::ops::Range<usize>| -> Sums {
        let mut s = Sums::zero(dim);
        match ms.carrier() {
            Carrier::Spherical(se) => {
                let q: [f64; 4] = p.try_into().expect("checked dimension");
                let sides = se.sheet().sides();
                for i in range {
                    let u = rule.node(i);
                    let u3 = [u[0], u[1], u[2]];
                    let base_w = rule.weight(i) * ms.weight_unchecked(u);
                    let (mut tv, mut tf) = (0.0, [0.0; 4]);
                    for &side in sides {
                        let w = base_w * ms.side_sign(side);
                        let x = se.point_at(&u3, side);
                        let (minus, plus) = chord_pair(&x, &q);
                        let sin = 0.5 * (minus * plus).sqrt();
                        let c: f64 = x.iter().zip(&q).map(|(a, b)| a * b).sum();
                        tv += w * c / sin;
                        let g = w / (sin * sin * sin);
                        for k in 0..4 {
                            tf[k] += g * (x[k] - c * q[k]);
                        }
                    }
                    s.v += tv;
                    s.v2 += tv * tv;
                    for k in 0..4 {
                        s.f[k] += tf[k];
                        s.f2[k] += tf[k] * tf[k];
                    }
                }
            }
            _ => {
                let e = ms.euclidean_carrier().expect("Euclidean carrier");
                let axes = e.semi_axes();
                let mut diff = vec![0.0; dim];
                for i in range {
                    let u = rule.node(i);
                    let w = rule.weight(i) * ms.weight_unchecked(u);
                    let mut r2 = 0.0;
                    for k in 0..dim {
                        diff[k] = axes[k] * u[k] - p[k];
                        r2 += diff[k] * diff[k];
                    }
                    let tv = w * euclidean_kernel(dim, r2);
                    let g = match dim {
                        2 => w / r2,
                        3 => w / (r2 * r2.sqrt()),
                        _ => w * (dim as f64 - 2.0) * r2.powf(-0.5 * dim as f64),
                    };
                    s.v += tv;
                    s.v2 += tv * tv;
                    for k in 0..dim {
                        let t = g * diff[k];
                        s.f[k] += t;
                        s.f2[k] += t * t;
                    }
                }
            }
        }
        s
    };
    chunked_reduce(rule.chunk_ranges(), map, Sums::add, Sums::zero(dim))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Potential and force of a mass surface at `p`.
pub fn field_surface(ms: &MassSurface, p: &[f64], quad: &QuadratureSpec) -> Result<Field> {
    quad.validate()?;
    check_separation(ms, p, quad.min_sep)?;
    let dim = ms.param_dim();
    let (v, f, ev, ef, order) = match quad.method {
        QuadratureMethod::GaussProduct { order } => {
            let mut n = order;
            let mut coarse = integrate_rule(ms, p, &SphereRule::gauss_product(dim, n));
            loop {
                let m = n * quad.refinement;
                let rule = SphereRule::gauss_product(dim, m);
                let fine = integrate_rule(ms, p, &rule);
                let ev = (fine.v - coarse.v).abs();
                let ef = diff_norm(&fine.f, &coarse.f);
                let converged =
                    ev <= quad.target_error * fine.v.abs().max(1.0) && ef <= quad.target_error * norm(&fine.f).max(1.0);
                let next = m * quad.refinement;
                let next_nodes = rule.len() * quad.refinement.pow(dim as u32 - 1);
                if converged || next > quad.max_order || next_nodes > MAX_NODES {
                    break (fine.v, fine.f, ev, ef, Some(m));
                }
                n = m;
                coarse = fine;
            }
        }
        QuadratureMethod::MonteCarlo { samples, seed } => {
            let rule = SphereRule::monte_carlo(dim, samples, seed);
            let s = integrate_rule(ms, p, &rule);
            let n = samples as f64;
            let se = |sum: f64, sum2: f64| (((sum2 - sum * sum / n) * n / (n - 1.0)).max(0.0)).sqrt();
            let ev = se(s.v, s.v2);
            let ef = s.f.iter().zip(&s.f2).map(|(a, b)| se(*a, *b).powi(2)).sum::<f64>().sqrt();
            (s.v, s.f, ev, ef, None)
        }
    };
    if !v.is_finite() || f.iter().any(|x| !x.is_finite()) {
        return Err(Error::QuadratureFailure("non-finite field value".into()));
    }
    Ok(Field { potential: FieldValue::new(v, ev, order, quad), force: FieldValue::new(f, ef, order, quad) })
}

pub fn potential_surface(ms: &MassSurface, p: &[f64], quad: &QuadratureSpec) -> Result<FieldValue<f64>> {
    field_surface(ms, p, quad).map(|f| f.potential)
}

/// Attraction `+∇V`. On the 3-sphere the vector is tangent at `q`.
pub fn force_surface(ms: &MassSurface, p: &[f64], quad: &QuadratureSpec) -> Result<FieldValue<Vec<f64>>> {
    field_surface(ms, p, quad).map(|f| f.force)
}

/// Exterior field of the solid ellipsoid `e` of uniform density and mass `M`,
/// as an integral over homothetic homeoids `λe`, `0 < λ < 1`, each carrying
/// mass `M·d·λ^{d−1} dλ`.
pub fn field_homogeneous_ellipsoid(
    e: &EuclideanEllipsoid,
    mass: f64,
    p: &[f64],
    quad: &QuadratureSpec,
    n_layers: usize,
) -> Result<Field> {
    quad.validate()?;
    if p.len() != e.dim() {
        return Err(Error::GeometryMismatch("point dimension"));
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    if n_layers < 2 {
        return Err(Error::BadParameter("at least two layers are needed".into()));
    }
    if e.witness(p) <= 0.0 || e.surface_gap(p) < quad.min_sep {
        return Err(Error::InteriorPoint);
    }
    let d = e.dim();
    let layered = |n: usize| -> Result<(f64, Vec<f64>, f64, f64)> {
        let (lam, w) = gauss_legendre_interval(n, 0.0, 1.0);
        let mut v = 0.0;
        let mut f = vec![0.0; d];
        let (mut ev, mut ef) = (0.0, 0.0);
        for (l, wl) in lam.iter().zip(&w) {
            let c = wl * mass * d as f64 * l.powi(d as i32 - 1);
            let shell = MassSurface::euclidean_homeoid(e.scaled(*l)?, 1.0)?;
            let field = field_surface(&shell, p, quad)?;
            v += c * field.potential.value;
            for (fk, x) in f.iter_mut().zip(&field.force.value) {
                *fk += c * x;
            }
            ev += c * field.potential.error_estimate;
            ef += c * field.force.error_estimate;
        }
        Ok((v, f, ev, ef))
    };
    let (v, f, ev, ef) = layered(n_layers)?;
    let (vh, fh, _, _) = layered(n_layers / 2)?;
    let ev = ev + (v - vh).abs();
    let ef = ef + diff_norm(&f, &fh);
    let order = match quad.method {
        QuadratureMethod::GaussProduct { order } => Some(order),
        QuadratureMethod::MonteCarlo { .. } => None,
    };
    Ok(Field { potential: FieldValue::new(v, ev, order, quad), force: FieldValue::new(f, ef, order, quad) })
}

pub fn potential_homogeneous_ellipsoid(
    e: &EuclideanEllipsoid,
    mass: f64,
    p: &[f64],
    quad: &QuadratureSpec,
    n_layers: usize,
) -> Result<FieldValue<f64>> {
    field_homogeneous_ellipsoid(e, mass, p, quad, n_layers).map(|f| f.potential)
}

/// Exterior field of a thick layer: outer solid minus inner solid at the
/// common density.
pub fn field_thick_layer(layer: &ThickLayer, p: &[f64], quad: &QuadratureSpec, n_layers: usize) -> Result<Field> {
    let rho = layer.density();
    let outer = layer.outer();
    let inner = layer.inner();
    let fo = field_homogeneous_ellipsoid(outer, rho * outer.volume(), p, quad, n_layers)?;
    let fi = field_homogeneous_ellipsoid(&inner, rho * inner.volume(), p, quad, n_layers)?;
    let v = fo.potential.value - fi.potential.value;
    let f: Vec<f64> = fo.force.value.iter().zip(&fi.force.value).map(|(a, b)| a - b).collect();
    Ok(Field {
        potential: FieldValue {
            value: v,
            error_estimate: fo.potential.error_estimate + fi.potential.error_estimate,
            meta: fo.potential.meta,
        },
        force: FieldValue {
            value: f,
            error_estimate: fo.force.error_estimate + fi.force.error_estimate,
            meta: fo.force.meta,
        },
    })
}

pub fn potential_thick_layer(layer: &ThickLayer, p: &[f64], quad: &QuadratureSpec) -> Result<FieldValue<f64>> {
    field_thick_layer(layer, p, quad, DEFAULT_LAYERS).map(|f| f.potential)
}
