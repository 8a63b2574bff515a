use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::{euclidean_samples, ld_points, param_samples, sphere_param, spherical_samples};
use super::{member, CheckConfig, CheckName, Recorder, SourceKind};
use crate::error::{Error, Result};
use crate::geometry::{EuclideanEllipsoid, Side, SphericalEllipsoid, DEFAULT_SURFACE_TOL};
use crate::ivory::{
    ivory_map, lemma1_residual, lemma1_residual_exact, lemma3_residuals, rational_confocal_pair,
    rational_point_on_ellipsoid, Quadric,
};
use crate::measure::{
    cap_mass_fraction, cone_volume_oracle, euclidean_homeoid_mass_element, spherical_homeoid_mass_element,
    thin_shell_oracle, FocaloidSurface, LayerRelation, MassSurface, ParamCap, ThickLayer,
};
use crate::potential::{field_homogeneous_ellipsoid, field_surface, field_thick_layer, Field, Kernel};
use crate::quadrature::{random_unit_vector, QuadratureSpec};

const EXTERIOR: (f64, f64) = (1.2, 3.0);
const INTERIOR: (f64, f64) = (0.0, 0.8);
const BOTH_SIDES: [Side; 2] = [Side::North, Side::South];

fn label(bi: usize) -> String {
    format!("base{bi}")
}

fn shift_label(bi: usize, g: f64) -> String {
    format!("base{bi}/gamma={g}")
}

enum Source {
    Surface(MassSurface),
    Solid(EuclideanEllipsoid, f64),
    Layer(ThickLayer),
}

impl Source {
    fn on(q: &Quadric, kind: SourceKind, mass: f64) -> Result<Source> {
        Ok(match (q, kind) {
            (Quadric::Euclidean(e), SourceKind::Homeoid) => {
                Source::Surface(MassSurface::euclidean_homeoid(e.clone(), mass)?)
            }
            (Quadric::Spherical(s), SourceKind::Homeoid) => {
                Source::Surface(MassSurface::spherical_homeoid(s.clone(), mass)?)
            }
            (Quadric::Euclidean(e), SourceKind::Homogeneous) => Source::Solid(e.clone(), mass),
            (Quadric::Euclidean(e), SourceKind::Focaloid) => {
                Source::Surface(MassSurface::focaloid(FocaloidSurface::new(e.clone(), 0.0)?, mass)?)
            }
            (Quadric::Spherical(_), _) => return Err(Error::GeometryMismatch("spherical sources are homeoids")),
        })
    }

    fn field(&self, p: &[f64], cfg: &CheckConfig) -> Result<Field> {
        self.field_with(p, &cfg.quadrature, cfg.n_layers)
    }

    fn field_with(&self, p: &[f64], quad: &QuadratureSpec, n_layers: usize) -> Result<Field> {
        match self {
            Source::Surface(ms) => field_surface(ms, p, quad),
            Source::Solid(e, m) => field_homogeneous_ellipsoid(e, *m, p, quad, n_layers),
            Source::Layer(l) => field_thick_layer(l, p, quad, n_layers),
        }
    }
}

fn homeoid(q: &Quadric, mass: f64) -> Result<Source> {
    Source::on(q, SourceKind::Homeoid, mass)
}

/// Member with the largest shift; its exterior lies in the exterior of every
/// other member in both geometries.
fn outermost(base: &Quadric, shifts: &[f64]) -> Result<Quadric> {
    let g = shifts.iter().copied().fold(0.0, f64::max);
    member(base, g)
}

fn points(q: &Quadric, n: usize, seed: u64, range: (f64, f64), sides: &[Side]) -> Vec<Vec<f64>> {
    match q {
        Quadric::Euclidean(e) => euclidean_samples(e, n, seed, range),
        Quadric::Spherical(s) => spherical_samples(s, n, seed, range, sides).into_iter().map(|q| q.to_vec()).collect(),
    }
}

fn surface_points(q: &Quadric, n: usize, seed: u64) -> Vec<Vec<f64>> {
    points(q, n, seed, (1.0, 1.0), &BOTH_SIDES)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

fn compare_fields(rec: &mut Recorder, key: &str, a: &Field, b: &Field, tol_v: f64, tol_f: Option<f64>) {
    rec.compare(
        format!("{key}/dV"),
        a.potential.value,
        b.potential.value,
        (a.potential.error_estimate, b.potential.error_estimate),
        tol_v,
    );
    if let Some(tol_f) = tol_f {
        let mut d = diff_norm(&a.force.value, &b.force.value);
        let mut err = a.force.error_estimate.max(b.force.error_estimate);
        if rec.relative {
            let scale = norm(&a.force.value).max(norm(&b.force.value)).max(f64::MIN_POSITIVE);
            d /= scale;
            err /= scale;
        }
        rec.error(err, tol_f);
        rec.residual(format!("{key}/dF"), d, tol_f);
    }
}

/// Interior constancy: spread of `V` and size of the force at interior
/// points, per cap on the 3-sphere.
pub(super) fn interior(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    let (tol_s, tol_f) = (cfg.tol("spread", 1e-7), cfg.tol("force", 1e-7));
    for (bi, base) in cfg.bases.iter().enumerate() {
        let src = homeoid(base, cfg.mass)?;
        let groups: Vec<(String, Vec<Side>)> = match base {
            Quadric::Euclidean(_) => vec![(label(bi), vec![Side::North])],
            Quadric::Spherical(_) => {
                BOTH_SIDES.iter().map(|s| (format!("{}/{}", label(bi), side_name(*s)), vec![*s])).collect()
            }
        };
        for (key, sides) in groups {
            let pts = points(base, cfg.samples, cfg.seed, INTERIOR, &sides);
            let mut values = Vec::with_capacity(pts.len());
            let mut max_f: f64 = 0.0;
            for p in &pts {
                let f = src.field(p, cfg)?;
                rec.error(f.potential.error_estimate, tol_s);
                rec.error(f.force.error_estimate, tol_f);
                values.push(f.potential.value);
                max_f = max_f.max(norm(&f.force.value));
            }
            rec.residual(format!("{key}/spread"), spread(&values), tol_s);
            rec.residual(format!("{key}/force"), max_f, tol_f);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            rec.record(format!("{key}/V"), mean);
            if let Some(expected) = sphere_interior_value(base, cfg.mass, sides[0]) {
                rec.residual(format!("{key}/sphere_value"), (mean - expected).abs(), tol_s);
            }
        }
    }
    Ok(())
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::North => "north",
        Side::South => "south",
    }
}

/// Closed-form interior value for spheres and equal-axes spherical homeoids.
fn sphere_interior_value(q: &Quadric, mass: f64, side: Side) -> Option<f64> {
    match q {
        Quadric::Euclidean(e) => {
            let r = e.semi_axes()[0];
            if e.semi_axes().iter().any(|a| *a != r) {
                return None;
            }
            let k = Kernel::euclidean(e.dim()).ok()?;
            let mut p = vec![0.0; e.dim()];
            p[0] = r;
            Some(mass * k.eval(&vec![0.0; e.dim()], &p).ok()?)
        }
        Quadric::Spherical(s) => {
            let [a, b, c, h] = s.params();
            if a != b || b != c {
                return None;
            }
            // polar cap of angular radius θ = atan(a/h)
            Some(side.sign() * mass * h / a)
        }
    }
}

/// Equal exterior potentials and forces of confocal members of equal mass.
pub(super) fn exterior(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    if cfg.source == SourceKind::Focaloid {
        return Err(Error::BadParameter("use the focaloid check for focaloids".into()));
    }
    let (tol_v, tol_f) = (cfg.tol("dV", 1e-6), cfg.tol("dF", 1e-6));
    for (bi, base) in cfg.bases.iter().enumerate() {
        let outer = outermost(base, &cfg.shifts)?;
        let pts = points(&outer, cfg.samples, cfg.seed, EXTERIOR, &BOTH_SIDES);
        if pts.is_empty() {
            return Err(Error::NoExteriorSamples);
        }
        let src0 = Source::on(base, cfg.source, cfg.mass)?;
        let base_fields: Vec<Field> = pts.iter().map(|p| src0.field(p, cfg)).collect::<Result<_>>()?;
        for &g in &cfg.shifts {
            let src = Source::on(&member(base, g)?, cfg.source, cfg.mass)?;
            for (p, f0) in pts.iter().zip(&base_fields) {
                let f = src.field(p, cfg)?;
                compare_fields(rec, &shift_label(bi, g), f0, &f, tol_v, Some(tol_f));
            }
        }
    }
    Ok(())
}

/// Least-squares fit of a homogeneous quadratic form to values on points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    /// Coefficients of `xᵢxⱼ`, `i ≤ j`, in row-major order.
    pub coefficients: Vec<f64>,
    pub max_residual: f64,
    pub condition: f64,
}

pub fn quadratic_fit(points: &[Vec<f64>], values: &[f64]) -> Result<QuadraticFit> {
    let d = points.first().map_or(0, Vec::len);
    let m = d * (d + 1) / 2;
    if points.len() < m || m == 0 {
        return Err(Error::DegenerateFit(f64::INFINITY));
    }
    let a = DMatrix::from_fn(points.len(), m, |r, c| {
        let (i, j) = pair_index(d, c);
        points[r][i] * points[r][j]
    });
    let b = DVector::from_column_slice(values);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > 1e12 {
        return Err(Error::DegenerateFit(condition));
    }
    let c = svd.solve(&b, 0.0).map_err(|e| Error::QuadratureFailure(e.to_string()))?;
    let r = &a * &c - b;
    Ok(QuadraticFit { coefficients: c.iter().copied().collect(), max_residual: r.amax(), condition })
}

fn pair_index(d: usize, c: usize) -> (usize, usize) {
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            if k == c {
                return (i, j);
            }
            k += 1;
        }
    }
    unreachable!("column index out of range")
}

/// Potential of the source on enclosing confocal surfaces: constant for
/// homeoids, a quadratic form otherwise.
pub(super) fn equipotential(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    let (tol_s, tol_fit) = (cfg.tol("spread", 1e-6), cfg.tol("fit", 1e-6));
    for (bi, base) in cfg.bases.iter().enumerate() {
        let src = Source::on(base, cfg.source, cfg.mass)?;
        for &g in &cfg.shifts {
            if g <= 0.0 {
                return Err(Error::BadParameter("the target surface must enclose the source (shift > 0)".into()));
            }
            let key = shift_label(bi, g);
            let target = member(base, g)?;
            let pts = surface_points(&target, cfg.samples, cfg.seed);
            let mut values = Vec::with_capacity(pts.len());
            let mut max_err: f64 = 0.0;
            for p in &pts {
                let f = src.field(p, cfg)?;
                max_err = max_err.max(f.potential.error_estimate);
                values.push(f.potential.value);
            }
            let spread_v = spread(&values);
            let scale = if cfg.relative { values.iter().fold(0.0f64, |m, v| m.max(v.abs())) } else { 1.0 };
            match cfg.source {
                SourceKind::Homeoid => {
                    rec.error(max_err / scale, tol_s);
                    rec.residual(format!("{key}/spread"), spread_v / scale, tol_s);
                }
                _ => rec.record(format!("{key}/spread"), spread_v),
            }
            if matches!(target, Quadric::Euclidean(_)) {
                let fit = quadratic_fit(&pts, &values)?;
                rec.record(format!("{key}/condition"), fit.condition);
                if cfg.source == SourceKind::Homeoid {
                    rec.record(format!("{key}/fit"), fit.max_residual);
                } else {
                    rec.error(max_err / scale, tol_fit);
                    rec.residual(format!("{key}/fit"), fit.max_residual / scale, tol_fit);
                }
            }
        }
    }
    Ok(())
}

/// `V_{H₁}(P₀(u)) = V_{H₀}(P₁(u))` at matched parameters.
pub(super) fn reciprocity(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    let tol = cfg.tol("dV", 1e-6);
    for (bi, base) in cfg.bases.iter().enumerate() {
        let h0 = homeoid(base, cfg.mass)?;
        for &g in &cfg.shifts {
            let target = member(base, g)?;
            if g == 0.0 {
                // both sides are V_H0 at the same surface point
                rec.residual(format!("{}/dV", shift_label(bi, g)), 0.0, tol);
                rec.record(format!("{}/identity", shift_label(bi, g)), 1.0);
                continue;
            }
            let h1 = homeoid(&target, cfg.mass)?;
            for (k, (p0, p1)) in matched_points(base, &target, cfg.samples, cfg.seed)?.into_iter().enumerate() {
                let v1 = h1.field(&p0, cfg)?.potential;
                let v0 = h0.field(&p1, cfg)?.potential;
                if k == 0 {
                    rec.record(format!("{}/first/V_H1(P0)", shift_label(bi, g)), v1.value);
                }
                rec.compare(
                    format!("{}/dV", shift_label(bi, g)),
                    v1.value,
                    v0.value,
                    (v1.error_estimate, v0.error_estimate),
                    tol,
                );
            }
        }
    }
    Ok(())
}

/// Surface points of two confocal quadrics with the same parameter (and
/// side, alternating).
fn matched_points(a: &Quadric, b: &Quadric, n: usize, seed: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    match (a, b) {
        (Quadric::Euclidean(a), Quadric::Euclidean(b)) => param_samples(a.dim(), n, seed, 0)
            .into_iter()
            .map(|(u, _)| Ok((a.surface_point(&u)?, b.surface_point(&u)?)))
            .collect(),
        (Quadric::Spherical(a), Quadric::Spherical(b)) => param_samples(3, n, seed, 0)
            .into_iter()
            .enumerate()
            .map(|(k, (u, _))| {
                let u = [u[0], u[1], u[2]];
                let side = BOTH_SIDES[k % 2];
                Ok((a.surface_point(&u, side)?.to_vec(), b.surface_point(&u, side)?.to_vec()))
            })
            .collect(),
        _ => Err(Error::GeometryMismatch("Euclidean and spherical quadrics")),
    }
}

/// Pointwise correspondence of mass elements, and the closed-form density
/// against a Monte Carlo volume oracle.
pub(super) fn density(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    let (tol_d, tol_mc) = (cfg.tol("density", 1e-9), cfg.tol("mc_sigma", 3.0));
    for (bi, base) in cfg.bases.iter().enumerate() {
        let ms0 = surface_of(base, cfg.mass)?;
        for &g in &cfg.shifts {
            let ms1 = surface_of(&member(base, g)?, cfg.mass * cfg.mass_ratio)?;
            let mut worst: f64 = 0.0;
            for (k, (u, _)) in param_samples(ms0.param_dim(), cfg.samples, cfg.seed, 0).into_iter().enumerate() {
                let (w0, w1) = match base {
                    Quadric::Euclidean(_) => {
                        (euclidean_homeoid_mass_element(&ms0, &u)?, euclidean_homeoid_mass_element(&ms1, &u)?)
                    }
                    Quadric::Spherical(s) => {
                        let u = [u[0], u[1], u[2]];
                        let side = s.sheet().sides()[k % s.sheet().sides().len()];
                        (
                            spherical_homeoid_mass_element(&ms0, &u, side)?,
                            spherical_homeoid_mass_element(&ms1, &u, side)?,
                        )
                    }
                };
                worst = worst.max((w1 / w0 - cfg.mass_ratio).abs() / cfg.mass_ratio);
            }
            rec.residual(format!("{}/density", shift_label(bi, g)), worst, tol_d);
        }
        if ms0.param_dim() != 3 {
            continue;
        }
        let axis = sphere_param(&ld_points(2, 1, cfg.seed ^ 0x5eed)[0], 3);
        let cap = ParamCap::new([axis[0], axis[1], axis[2]], std::f64::consts::FRAC_PI_3)?;
        let (mc, exact) = match base {
            Quadric::Euclidean(e) => {
                let mc = cone_volume_oracle(e, |u| cap.contains(u), cfg.monte_carlo_samples, cfg.seed);
                (mc, cap_mass_fraction(&ms0, &cap, None, 96)?)
            }
            Quadric::Spherical(s) => {
                let side = s.sheet().sides()[0];
                let mc = thin_shell_oracle(
                    s,
                    |u, sd| sd == side && cap.contains(u),
                    0.02,
                    0.1,
                    cfg.monte_carlo_samples,
                    cfg.seed,
                );
                (mc, cap_mass_fraction(&ms0, &cap, Some(side), 96)?)
            }
        };
        let key = label(bi);
        rec.record(format!("{key}/mc_fraction"), mc.value);
        rec.record(format!("{key}/mc_std_error"), mc.std_error);
        rec.record(format!("{key}/mc_accepted"), mc.accepted as f64);
        rec.record(format!("{key}/exact_fraction"), exact);
        let sigma = if mc.std_error > 0.0 { (mc.value - exact).abs() / mc.std_error } else { f64::INFINITY };
        rec.residual(format!("{key}/mc_sigma"), sigma, tol_mc);
    }
    Ok(())
}

fn surface_of(q: &Quadric, mass: f64) -> Result<MassSurface> {
    match q {
        Quadric::Euclidean(e) => MassSurface::euclidean_homeoid(e.clone(), mass),
        Quadric::Spherical(s) => MassSurface::spherical_homeoid(s.clone(), mass),
    }
}

/// The five quantities of the three-homeoid argument at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaslesTrace {
    /// Shift (relative to `H₀`) of the homeoid `H₂` through `P`.
    pub gamma2: f64,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    pub v_h0_p: f64,
    pub v_h2_p0: f64,
    pub v_h2_p1: f64,
    pub v_h1_p: f64,
    /// Spread of `V_{H₂}` over sample points inside `H₂`.
    pub interior_spread: f64,
    pub max_error_estimate: f64,
}

impl ChaslesTrace {
    /// Largest pairwise difference along `V_{H₀}(P) = V_{H₂}(P₀) = V_{H₂}(P₁) = V_{H₁}(P)`.
    pub fn chain_residual(&self) -> f64 {
        spread(&[self.v_h0_p, self.v_h2_p0, self.v_h2_p1, self.v_h1_p])
    }
}

fn witness(q: &Quadric, p: &[f64]) -> Result<f64> {
    match q {
        Quadric::Euclidean(e) => {
            if p.len() != e.dim() {
                return Err(Error::GeometryMismatch("point dimension"));
            }
            Ok(e.witness(p))
        }
        Quadric::Spherical(s) => {
            let q: [f64; 4] = p.try_into().map_err(|_| Error::GeometryMismatch("point dimension"))?;
            s.classify(&q, DEFAULT_SURFACE_TOL)?;
            Ok(s.f(&q))
        }
    }
}

fn parameter_through(q: &Quadric, p: &[f64]) -> Result<f64> {
    match q {
        Quadric::Euclidean(e) => e.confocal_parameter_through(p),
        Quadric::Spherical(s) => s.confocal_parameter_through(&p.try_into().expect("checked dimension")),
    }
}

/// Trace the three-homeoid argument for equal-mass homeoids on `h0`, `h1`
/// at the exterior point `p`. A point on `h0` itself is allowed: then
/// `H₂ = H₀`, `P₀ = P`, and both values on `H₀` are its interior constant.
pub fn chasles_proof_trace(
    h0: &Quadric,
    h1: &Quadric,
    mass: f64,
    p: &[f64],
    quad: &QuadratureSpec,
    seed: u64,
) -> Result<ChaslesTrace> {
    h0.confocal_offset(h1)?;
    let (w0, w1) = (witness(h0, p)?, witness(h1, p)?);
    let on_h0 = w0.abs() <= DEFAULT_SURFACE_TOL;
    if (w0 < 0.0 && !on_h0) || w1 <= DEFAULT_SURFACE_TOL {
        return Err(Error::PNotExterior);
    }
    let gamma2 = if on_h0 { 0.0 } else { parameter_through(h0, p)? };
    let h2 = member(h0, gamma2)?;
    let p0 = if on_h0 { p.to_vec() } else { ivory_map(h2.clone(), h0.clone())?.apply(p, true)? };
    let p1 = ivory_map(h2.clone(), h1.clone())?.apply(p, true)?;
    let (s0, s1, s2) = (homeoid(h0, mass)?, homeoid(h1, mass)?, homeoid(&h2, mass)?);
    let layers = crate::potential::DEFAULT_LAYERS;
    let mut max_err: f64 = 0.0;
    let mut eval = |s: &Source, x: &[f64]| -> Result<f64> {
        let v = s.field_with(x, quad, layers)?.potential;
        max_err = max_err.max(v.error_estimate);
        Ok(v.value)
    };
    // interior samples of H₂ in the cap containing P
    let side = Side::of(p[p.len() - 1]);
    let inside = points(&h2, 6, seed, INTERIOR, &[side]);
    let mut interior = Vec::with_capacity(inside.len());
    for x in &inside {
        interior.push(eval(&s2, x)?);
    }
    let (v_h0_p, v_h2_p0) = if on_h0 { (interior[0], interior[0]) } else { (eval(&s0, p)?, eval(&s2, &p0)?) };
    let v_h2_p1 = eval(&s2, &p1)?;
    let v_h1_p = eval(&s1, p)?;
    Ok(ChaslesTrace {
        gamma2,
        p0,
        p1,
        v_h0_p,
        v_h2_p0,
        v_h2_p1,
        v_h1_p,
        interior_spread: spread(&interior),
        max_error_estimate: max_err,
    })
}

pub(super) fn chasles(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    let (tol_c, tol_s) = (cfg.tol("chain", 1e-6), cfg.tol("spread", 1e-6));
    for (bi, base) in cfg.bases.iter().enumerate() {
        for &g in &cfg.shifts {
            let h1 = member(base, g)?;
            let key = shift_label(bi, g);
            let outer = if g > 0.0 { &h1 } else { base };
            for (k, p) in points(outer, cfg.samples, cfg.seed, EXTERIOR, &BOTH_SIDES).iter().enumerate() {
                let t = chasles_proof_trace(base, &h1, cfg.mass, p, &cfg.quadrature, cfg.seed)?;
                rec.error(t.max_error_estimate, tol_c.min(tol_s));
                rec.residual(format!("{key}/chain"), t.chain_residual(), tol_c);
                rec.residual(format!("{key}/spread"), t.interior_spread, tol_s);
                if k == 0 {
                    for (name, v) in [
                        ("gamma2", t.gamma2),
                        ("V_H0(P)", t.v_h0_p),
                        ("V_H2(P0)", t.v_h2_p0),
                        ("V_H2(P1)", t.v_h2_p1),
                        ("V_H1(P)", t.v_h1_p),
                    ] {
                        rec.record(format!("{key}/first/{name}"), v);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Focaloid against thick focaloids of equal mass, and the quadratic form of
/// its potential on enclosing confocal surfaces.
pub(super) fn focaloid(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    let (tol_v, tol_f, tol_fit) = (cfg.tol("dV", 1e-5), cfg.tol("dF", 1e-5), cfg.tol("fit", 1e-6));
    for (bi, base) in cfg.bases.iter().enumerate() {
        let Quadric::Euclidean(e) = base else {
            return Err(Error::GeometryMismatch("focaloids live in Euclidean space"));
        };
        let key = label(bi);
        let foc = Source::on(base, SourceKind::Focaloid, cfg.mass)?;
        let thick = |t: f64| -> Result<Source> {
            Ok(Source::Layer(ThickLayer::with_mass(e.clone(), LayerRelation::Confocal { shift: -t }, cfg.mass)?))
        };
        let (full, half) = (thick(cfg.thickness)?, thick(0.5 * cfg.thickness)?);
        for p in points(base, cfg.samples, cfg.seed, EXTERIOR, &BOTH_SIDES) {
            let ff = foc.field(&p, cfg)?;
            let f1 = full.field(&p, cfg)?;
            let f2 = half.field(&p, cfg)?;
            compare_fields(rec, &format!("{key}/thick"), &ff, &f1, tol_v, Some(tol_f));
            compare_fields(rec, &format!("{key}/half_thick"), &ff, &f2, tol_v, None);
            let rich = 2.0 * f2.potential.value - f1.potential.value;
            let rich_err = 2.0 * f2.potential.error_estimate + f1.potential.error_estimate;
            rec.compare(
                format!("{key}/richardson/dV"),
                ff.potential.value,
                rich,
                (ff.potential.error_estimate, rich_err),
                tol_v,
            );
        }
        let control =
            Source::Layer(ThickLayer::with_mass(e.clone(), LayerRelation::Homothetic { factor: 0.9 }, cfg.mass)?);
        for &g in &cfg.shifts {
            if g <= 0.0 {
                return Err(Error::BadParameter("the fit surface must enclose the source (shift > 0)".into()));
            }
            let target = member(base, g)?;
            let pts = surface_points(&target, cfg.samples.max(12), cfg.seed);
            let mut values = Vec::with_capacity(pts.len());
            let mut control_values = Vec::with_capacity(pts.len());
            for p in &pts {
                let f = foc.field(p, cfg)?;
                rec.error(f.potential.error_estimate, tol_fit);
                values.push(f.potential.value);
                control_values.push(control.field(p, cfg)?.potential.value);
            }
            let fit = quadratic_fit(&pts, &values)?;
            let k = shift_label(bi, g);
            rec.residual(format!("{k}/fit"), fit.max_residual, tol_fit);
            rec.record(format!("{k}/condition"), fit.condition);
            rec.record(format!("{k}/spread"), spread(&values));
            // a thick homeoid is not a quadratic form there
            rec.record(format!("{k}/control_fit"), quadratic_fit(&pts, &control_values)?.max_residual);
        }
    }
    Ok(())
}

/// Shell theorems with closed-form values.
pub(super) fn shell(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    use std::f64::consts::PI;
    for (bi, base) in cfg.bases.iter().enumerate() {
        let key = label(bi);
        let src = homeoid(base, cfg.mass)?;
        match base {
            Quadric::Euclidean(e) => {
                let r = e.semi_axes()[0];
                if e.semi_axes().iter().any(|a| *a != r) {
                    return Err(Error::BadParameter("the shell check needs equal semi-axes".into()));
                }
                let tol = if e.dim() == 3 { cfg.tol("euclidean3", 1e-8) } else { cfg.tol("euclidean", 1e-6) };
                let k = Kernel::euclidean(e.dim())?;
                let origin = vec![0.0; e.dim()];
                let inside = sphere_interior_value(base, cfg.mass, Side::North).expect("equal axes");
                for (region, range) in [("exterior", EXTERIOR), ("interior", INTERIOR)] {
                    for p in euclidean_samples(e, cfg.samples, cfg.seed, range) {
                        let v = src.field(&p, cfg)?.potential;
                        let expected = if region == "exterior" { cfg.mass * k.eval(&origin, &p)? } else { inside };
                        rec.compare(format!("{key}/{region}"), v.value, expected, (v.error_estimate, 0.0), tol);
                    }
                }
            }
            Quadric::Spherical(s) => {
                let [a, b, c, h] = s.params();
                if a != b || b != c {
                    return Err(Error::BadParameter("the shell check needs a = b = c".into()));
                }
                let tol = cfg.tol("spherical", 1e-6);
                let theta = (a / h).atan();
                let m = 0.05f64.min(0.25 * theta).min(0.25 * (PI - 2.0 * theta));
                let regions = [
                    ("cap", (m, theta - m)),
                    ("band", (theta + m, PI - theta - m)),
                    ("antipodal", (PI - theta + m, PI - m)),
                ];
                let n = cfg.samples + cfg.samples / 2;
                let cot = |x: f64| x.cos() / x.sin();
                for (k, t) in ld_points(3, n, cfg.seed).into_iter().enumerate() {
                    let (region, (lo, hi)) = regions[k % 3];
                    let alpha = lo + (hi - lo) * t[2];
                    let u = sphere_param(&t[..2], 3);
                    let q = [alpha.sin() * u[0], alpha.sin() * u[1], alpha.sin() * u[2], alpha.cos()];
                    let expected = cfg.mass
                        * match region {
                            "cap" => cot(theta),
                            "band" => cot(alpha),
                            _ => -cot(theta),
                        };
                    let v = src.field(&q, cfg)?.potential;
                    rec.compare(format!("{key}/{region}"), v.value, expected, (v.error_estimate, 0.0), tol);
                }
                let eq = src.field(&[1.0, 0.0, 0.0, 0.0], cfg)?;
                rec.record(format!("{key}/equator_force"), norm(&eq.force.value));
            }
        }
    }
    Ok(())
}

fn random_rational<R: Rng>(rng: &mut R, num: i64, den: i64) -> BigRational {
    BigRational::new(rng.gen_range(-num..=num).into(), rng.gen_range(1..=den).into())
}

/// Exact and floating Lemma 1 residuals over random rational configurations.
pub(super) fn lemma1(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    let (tol_exact, tol_float) = (cfg.tol("exact", 0.0), cfg.tol("float", 1e-12));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut nonzero = 0usize;
    let mut worst: f64 = 0.0;
    for i in 0..cfg.samples {
        let d = 2 + i % 3;
        let k = random_rational(&mut rng, 30, 6);
        // t ≥ 6 keeps t² > |k| ≤ 30
        let ts: Vec<BigRational> =
            (0..d).map(|_| BigRational::from_integer(6.into()) + random_rational(&mut rng, 40, 8).abs()).collect();
        let (a0, a1) = rational_confocal_pair(&k, &ts)?;
        let mut seed = || loop {
            let s: Vec<BigRational> = (0..d).map(|_| random_rational(&mut rng, 40, 12)).collect();
            if s.iter().any(|x| !x.is_zero()) {
                break s;
            }
        };
        let p = rational_point_on_ellipsoid(&a0, &seed())?;
        let x = rational_point_on_ellipsoid(&a0, &seed())?;
        if !lemma1_residual_exact(&a0, &a1, &p, &x)?.is_zero() {
            nonzero += 1;
        }
        let f = |v: &[BigRational]| -> Result<EuclideanEllipsoid> {
            EuclideanEllipsoid::new(v.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect::<Vec<_>>())
        };
        worst = worst.max(lemma1_residual(&f(&a0)?, &f(&a1)?, &p.to_f64(), &x.to_f64())?);
    }
    rec.residual("exact_nonzero", nonzero as f64, tol_exact);
    rec.residual("float_relative", worst, tol_float);
    rec.record("cases", cfg.samples as f64);
    Ok(())
}

/// Lemma 3 residuals over random admissible spherical configurations.
pub(super) fn lemma3(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    let tols = [cfg.tol("A", 1e-12), cfg.tol("B", 1e-12), cfg.tol("C", 1e-12)];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = [0.0f64; 3];
    for _ in 0..cfg.samples {
        let p: Vec<f64> = (0..4).map(|_| rng.gen_range(0.3..3.0)).collect();
        let se0 = SphericalEllipsoid::new(p[0], p[1], p[2], p[3], crate::geometry::Sheet::Both)?;
        let (lo, hi) = se0.shift_interval();
        let se1 = se0.confocal_shift((lo + rng.gen_range(0.02..0.98) * (hi - lo)).into())?;
        let mut point = || -> Result<[f64; 4]> {
            let u = random_unit_vector(3, &mut rng);
            let side = if rng.gen::<bool>() { Side::North } else { Side::South };
            se0.surface_point(&[u[0], u[1], u[2]], side)
        };
        let (q0, x0) = (point()?, point()?);
        let (a, b, c) = lemma3_residuals(&se0, &se1, &q0, &x0)?;
        for (w, r) in worst.iter_mut().zip([a, b, c]) {
            *w = w.max(r);
        }
    }
    for ((name, w), tol) in ["A", "B", "C"].iter().zip(worst).zip(tols) {
        rec.residual(*name, w, tol);
    }
    rec.record("cases", cfg.samples as f64);
    Ok(())
}

/// Orthonormal basis of the tangent space of `S³` at `q`.
fn tangent_basis(q: &[f64; 4]) -> Vec<[f64; 4]> {
    let mut basis: Vec<[f64; 4]> = vec![*q];
    for k in 0..4 {
        let mut v = [0.0; 4];
        v[k] = 1.0;
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for i in 0..4 {
                v[i] -= d * b[i];
            }
        }
        let n = norm(&v);
        if n > 1e-6 && basis.len() < 4 {
            basis.push(v.map(|x| x / n));
        }
    }
    basis.split_off(1)
}

/// Gradient, Laplacian, order-doubling and reproducibility spot checks.
pub(super) fn hygiene(cfg: &CheckConfig, rec: &mut Recorder) -> Result<()> {
    let tol_g = cfg.tol("gradient", 1e-5);
    let tol_d = cfg.tol("doubling", 0.1);
    let tol_l = cfg.tol("laplacian", 1e-4);
    let tol_r = cfg.tol("reproducibility", 0.0);
    // a fixed rule keeps V smooth in the evaluation point
    let fixed = QuadratureSpec { min_sep: cfg.quadrature.min_sep, ..QuadratureSpec::fixed(128) };
    let per_base = cfg.samples.div_ceil(cfg.bases.len());
    for (bi, base) in cfg.bases.iter().enumerate() {
        let key = label(bi);
        let src = homeoid(base, cfg.mass)?;
        let v = |p: &[f64]| -> Result<f64> { Ok(src.field_with(p, &fixed, cfg.n_layers)?.potential.value) };
        for p in points(base, per_base, cfg.seed, EXTERIOR, &BOTH_SIDES) {
            let f = src.field_with(&p, &fixed, cfg.n_layers)?;
            match base {
                Quadric::Euclidean(_) => {
                    let h = 1e-4;
                    let d = p.len();
                    let mut fd = vec![0.0; d];
                    let mut lap = -2.0 * d as f64 * f.potential.value;
                    let hl = 1e-3;
                    for i in 0..d {
                        let (mut a, mut b) = (p.clone(), p.clone());
                        a[i] += h;
                        b[i] -= h;
                        fd[i] = (v(&a)? - v(&b)?) / (2.0 * h);
                        let (mut a, mut b) = (p.clone(), p.clone());
                        a[i] += hl;
                        b[i] -= hl;
                        lap += v(&a)? + v(&b)?;
                    }
                    rec.residual(format!("{key}/gradient"), diff_norm(&fd, &f.force.value), tol_g);
                    let lap = (lap / (hl * hl)).abs() / f.potential.value.abs().max(f64::MIN_POSITIVE);
                    rec.residual(format!("{key}/laplacian"), lap, tol_l);
                }
                Quadric::Spherical(_) => {
                    let q: [f64; 4] = p.as_slice().try_into().expect("four coordinates");
                    let h = 1e-4;
                    let mut sq = 0.0;
                    for t in tangent_basis(&q) {
                        let step = |s: f64| -> Vec<f64> { (0..4).map(|i| q[i] * s.cos() + t[i] * s.sin()).collect() };
                        let fd = (v(&step(h))? - v(&step(-h))?) / (2.0 * h);
                        let ft: f64 = f.force.value.iter().zip(&t).map(|(a, b)| a * b).sum();
                        sq += (fd - ft) * (fd - ft);
                    }
                    rec.residual(format!("{key}/gradient"), sq.sqrt(), tol_g);
                }
            }
        }
        // order doubling at a well-separated point
        let p = points(base, 1, cfg.seed, (2.0, 2.0), &BOTH_SIDES).remove(0);
        let at = |n: usize| -> Result<f64> {
            let spec = QuadratureSpec { min_sep: cfg.quadrature.min_sep, ..QuadratureSpec::fixed(n) };
            Ok(src.field_with(&p, &spec, cfg.n_layers)?.potential.value)
        };
        let (v8, v16, v32) = (at(8)?, at(16)?, at(32)?);
        let (e8, e16) = ((v8 - v16).abs(), (v16 - v32).abs());
        rec.record(format!("{key}/doubling/e8"), e8);
        rec.record(format!("{key}/doubling/e16"), e16);
        // both at roundoff level says nothing about the rate
        let ratio = if e8 < 1e-13 { 0.0 } else { e16 / e8 };
        rec.residual(format!("{key}/doubling"), ratio, tol_d);
    }
    // bit-for-bit reruns, with and without random quadrature
    let small = CheckConfig { samples: 3, shifts: vec![-0.5], ..CheckName::Theorem1.default_config() };
    let small = CheckConfig { seed: cfg.seed, quadrature: cfg.quadrature, ..small };
    let a = CheckName::Theorem1.run(&small)?.without_time();
    let b = CheckName::Theorem1.run(&small)?.without_time();
    let mc = QuadratureSpec::monte_carlo(20_000, cfg.seed);
    let ms = MassSurface::euclidean_homeoid(EuclideanEllipsoid::new(vec![3.0, 2.0, 1.0])?, 1.0)?;
    let m1 = field_surface(&ms, &[4.0, 1.0, 1.0], &mc)?;
    let m2 = field_surface(&ms, &[4.0, 1.0, 1.0], &mc)?;
    let mismatches = usize::from(a != b) + usize::from(m1 != m2);
    rec.residual("reproducibility", mismatches as f64, tol_r);
    Ok(())
}
