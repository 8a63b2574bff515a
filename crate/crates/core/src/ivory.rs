//! Ivory's correspondence between confocal quadrics and the algebraic
//! identities behind it, in floating point and in exact rational arithmetic.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{check_unit, EuclideanEllipsoid, Sheet, SphericalEllipsoid, DEFAULT_SURFACE_TOL};

/// Relative tolerance for deciding that two quadrics are confocal.
pub const CONFOCAL_TOL: f64 = 1e-12;

/// Either kind of quadric the correspondence acts on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadricRepr", into = "QuadricRepr")]
pub enum Quadric {
    Euclidean(EuclideanEllipsoid),
    Spherical(SphericalEllipsoid),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "geometry", rename_all = "lowercase", deny_unknown_fields)]
enum QuadricRepr {
    Euclidean {
        semi_axes: Vec<f64>,
    },
    Spherical {
        params: [f64; 4],
        #[serde(default)]
        sheet: Sheet,
    },
}

impl TryFrom<QuadricRepr> for Quadric {
    type Error = Error;

    fn try_from(r: QuadricRepr) -> Result<Self> {
        Ok(match r {
            QuadricRepr::Euclidean { semi_axes } => Quadric::Euclidean(EuclideanEllipsoid::new(semi_axes)?),
            QuadricRepr::Spherical { params: [a, b, c, h], sheet } => {
                Quadric::Spherical(SphericalEllipsoid::new(a, b, c, h, sheet)?)
            }
        })
    }
}

impl From<Quadric> for QuadricRepr {
    fn from(q: Quadric) -> Self {
        match q {
            Quadric::Euclidean(e) => QuadricRepr::Euclidean { semi_axes: e.semi_axes().to_vec() },
            Quadric::Spherical(s) => QuadricRepr::Spherical { params: s.params(), sheet: s.sheet() },
        }
    }
}

impl From<EuclideanEllipsoid> for Quadric {
    fn from(e: EuclideanEllipsoid) -> Self {
        Quadric::Euclidean(e)
    }
}

impl From<SphericalEllipsoid> for Quadric {
    fn from(s: SphericalEllipsoid) -> Self {
        Quadric::Spherical(s)
    }
}

impl Quadric {
    fn params(&self) -> Vec<f64> {
        match self {
            Quadric::Euclidean(e) => e.semi_axes().to_vec(),
            Quadric::Spherical(s) => s.params().to_vec(),
        }
    }

    /// Confocal shift taking `self` to `other`.
    pub fn confocal_offset(&self, other: &Quadric) -> Result<f64> {
        match (self, other) {
            (Quadric::Euclidean(a), Quadric::Euclidean(b)) => a.confocal_offset(b, CONFOCAL_TOL),
            (Quadric::Spherical(a), Quadric::Spherical(b)) => a.confocal_offset(b, CONFOCAL_TOL),
            _ => Err(Error::GeometryMismatch("Euclidean and spherical quadrics")),
        }
    }

    /// Defect of `p` from the quadric: `|witness|`, and on the 3-sphere also
    /// the distance of `|p|²` from 1.
    fn defect(&self, p: &[f64]) -> Result<f64> {
        match self {
            Quadric::Euclidean(e) => {
                if p.len() != e.dim() {
                    return Err(Error::GeometryMismatch("point dimension"));
                }
                Ok(e.witness(p).abs())
            }
            Quadric::Spherical(s) => {
                let q: [f64; 4] = p.try_into().map_err(|_| Error::GeometryMismatch("point dimension"))?;
                let g = q.iter().map(|x| x * x).sum::<f64>() - 1.0;
                Ok(s.f(&q).abs().max(g.abs()))
            }
        }
    }
}

/// The diagonal linear map sending one confocal quadric onto another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalMap {
    ratios: Vec<f64>,
    source: Quadric,
    target: Quadric,
}

/// Ivory's correspondence from `source` to `target`.
pub fn ivory_map(source: impl Into<Quadric>, target: impl Into<Quadric>) -> Result<DiagonalMap> {
    let (source, target) = (source.into(), target.into());
    source.confocal_offset(&target)?;
    let ratios = source.params().iter().zip(target.params()).map(|(s, t)| t / s).collect();
    Ok(DiagonalMap { ratios, source, target })
}

impl DiagonalMap {
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn source(&self) -> &Quadric {
        &self.source
    }

    pub fn target(&self) -> &Quadric {
        &self.target
    }

    pub fn inverse(&self) -> DiagonalMap {
        ivory_map(self.target.clone(), self.source.clone()).expect("confocality is symmetric")
    }

    /// Image of `p`. With `strict`, `p` must lie on the source quadric.
    pub fn apply(&self, p: &[f64], strict: bool) -> Result<Vec<f64>> {
        if p.len() != self.ratios.len() {
            return Err(Error::GeometryMismatch("point dimension"));
        }
        if strict {
            let defect = self.source.defect(p)?;
            if defect > DEFAULT_SURFACE_TOL {
                return Err(Error::NotOnSource(defect));
            }
        }
        Ok(p.iter().zip(&self.ratios).map(|(x, r)| x * r).collect())
    }
}

pub fn apply_map(m: &DiagonalMap, p: &[f64], strict: bool) -> Result<Vec<f64>> {
    m.apply(p, strict)
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn relative(lhs: f64, rhs: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs());
    if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    }
}

/// `|dist²(P₀, 𝒜X₀) − dist²(𝒜P₀, X₀)|` relative to the larger side.
pub fn lemma1_residual(e0: &EuclideanEllipsoid, e1: &EuclideanEllipsoid, p0: &[f64], x0: &[f64]) -> Result<f64> {
    let map = ivory_map(e0.clone(), e1.clone())?;
    let (p1, x1) = (map.apply(p0, true)?, map.apply(x0, true)?);
    Ok(relative(dist_sq(p0, &x1), dist_sq(&p1, x0)))
}

/// Residuals of the three identities for a confocal pair on the 3-sphere:
/// (A) both images satisfy `f₁ = 0`, (B) both images are unit vectors,
/// (C) `|X₁ − Q₀|² = |Q₁ − X₀|²`. Each is relative to the size of the
/// terms involved.
pub fn lemma3_residuals(
    se0: &SphericalEllipsoid,
    se1: &SphericalEllipsoid,
    q0: &[f64; 4],
    x0: &[f64; 4],
) -> Result<(f64, f64, f64)> {
    let map = ivory_map(se0.clone(), se1.clone())?;
    for p in [q0, x0] {
        check_unit(p).map_err(|e| match e {
            Error::NotOnSphere(d) => Error::NotOnSource(d.abs()),
            other => other,
        })?;
        if se0.f(p).abs() > 1e-12 {
            return Err(Error::NotOnSource(se0.f(p).abs()));
        }
    }
    let q1: [f64; 4] = map.apply(q0, false)?.try_into().expect("four coordinates");
    let x1: [f64; 4] = map.apply(x0, false)?.try_into().expect("four coordinates");
    let [a, b, c, h] = se1.params();
    let f_rel = |p: &[f64; 4]| {
        let terms = [(p[0] / a).powi(2), (p[1] / b).powi(2), (p[2] / c).powi(2), (p[3] / h).powi(2)];
        let scale: f64 = terms.iter().sum();
        if scale == 0.0 {
            0.0
        } else {
            (terms[0] + terms[1] + terms[2] - terms[3]).abs() / scale
        }
    };
    let g = |p: &[f64; 4]| (p.iter().map(|x| x * x).sum::<f64>() - 1.0).abs();
    let res_a = f_rel(&q1).max(f_rel(&x1));
    let res_b = g(&q1).max(g(&x1));
    let res_c = relative(dist_sq(&x1, q0), dist_sq(&q1, x0));
    Ok((res_a, res_b, res_c))
}

/// A point with exact rational coordinates over a common denominator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoint {
    pub numerators: Vec<BigInt>,
    pub denominator: BigInt,
}

impl RationalPoint {
    fn from_coords(coords: &[BigRational]) -> Self {
        let denominator = coords.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let numerators = coords.iter().map(|c| c.numer() * (&denominator / c.denom())).collect();
        RationalPoint { numerators, denominator }
    }

    pub fn coords(&self) -> Vec<BigRational> {
        self.numerators.iter().map(|n| BigRational::new(n.clone(), self.denominator.clone())).collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords().iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

/// Rational unit vector from a nonzero rational seed: the second intersection
/// of the unit sphere with the line through a pole and the seed. Unit seeds
/// are returned unchanged.
pub fn rational_unit_vector(seed: &[BigRational]) -> Result<Vec<BigRational>> {
    if seed.is_empty() || seed.iter().all(Zero::is_zero) {
        return Err(Error::ZeroSeed);
    }
    let d = seed.len();
    // pole on the opposite side of the seed's last coordinate, so the chord
    // direction never vanishes
    let pole = if seed[d - 1].is_negative() { BigRational::one() } else { -BigRational::one() };
    let mut dir: Vec<BigRational> = seed.to_vec();
    dir[d - 1] = &dir[d - 1] - &pole;
    let norm_sq = dir.iter().fold(BigRational::zero(), |acc, x| acc + x * x);
    // |pole·e_d + τ·dir|² = 1  ⇔  τ = −2·pole·dir_d / |dir|²
    let tau = -(BigRational::from_integer(2.into()) * &pole * &dir[d - 1]) / norm_sq;
    let mut u: Vec<BigRational> = dir.iter().map(|x| &tau * x).collect();
    u[d - 1] = &u[d - 1] + &pole;
    Ok(u)
}

/// Exact point `(a₁u₁, …, a_d u_d)` of the ellipsoid with rational semi-axes.
pub fn rational_point_on_ellipsoid(axes: &[BigRational], seed: &[BigRational]) -> Result<RationalPoint> {
    if axes.len() != seed.len() {
        return Err(Error::GeometryMismatch("seed dimension"));
    }
    if let Some((index, a)) = axes.iter().enumerate().find(|(_, a)| !a.is_positive()) {
        return Err(Error::NonPositiveAxis { index, value: a.to_f64().unwrap_or(f64::NAN) });
    }
    let u = rational_unit_vector(seed)?;
    let coords: Vec<BigRational> = axes.iter().zip(&u).map(|(a, x)| a * x).collect();
    Ok(RationalPoint::from_coords(&coords))
}

/// Rational confocal pair sharing `a₀ᵢ² − a₁ᵢ² = k`: each axis is built as
/// `a₀ = (t + k/t)/2`, `a₁ = (t − k/t)/2`, which needs `t² > |k|`.
pub fn rational_confocal_pair(k: &BigRational, ts: &[BigRational]) -> Result<(Vec<BigRational>, Vec<BigRational>)> {
    let two = BigRational::from_integer(2.into());
    let mut a0 = Vec::with_capacity(ts.len());
    let mut a1 = Vec::with_capacity(ts.len());
    for t in ts {
        if !t.is_positive() || t * t <= k.abs() {
            return Err(Error::BadParameter("need t > 0 with t² > |k|".into()));
        }
        a0.push((t + k / t) / &two);
        a1.push((t - k / t) / &two);
    }
    Ok((a0, a1))
}

fn on_rational_ellipsoid(axes: &[BigRational], p: &[BigRational]) -> bool {
    let s = axes.iter().zip(p).fold(BigRational::zero(), |acc, (a, x)| acc + (x * x) / (a * a));
    s.is_one()
}

/// Exact Lemma 1 residual `dist²(P₀, 𝒜X₀) − dist²(𝒜P₀, X₀)`.
pub fn lemma1_residual_exact(
    a0: &[BigRational],
    a1: &[BigRational],
    p0: &RationalPoint,
    x0: &RationalPoint,
) -> Result<BigRational> {
    if a0.len() != a1.len() || p0.numerators.len() != a0.len() || x0.numerators.len() != a0.len() {
        return Err(Error::GeometryMismatch("dimension"));
    }
    let shifts: Vec<BigRational> = a0.iter().zip(a1).map(|(s, t)| t * t - s * s).collect();
    if shifts.iter().any(|s| s != &shifts[0]) {
        let spread = shifts.iter().map(|s| (s - &shifts[0]).abs()).max().unwrap_or_default();
        return Err(Error::NotConfocal(spread.to_f64().unwrap_or(f64::NAN)));
    }
    let (p, x) = (p0.coords(), x0.coords());
    for pt in [&p, &x] {
        if !on_rational_ellipsoid(a0, pt) {
            return Err(Error::NotOnSource(f64::NAN));
        }
    }
    let map = |v: &[BigRational]| -> Vec<BigRational> {
        v.iter().zip(a0.iter().zip(a1)).map(|(c, (s, t))| c * t / s).collect()
    };
    let d2 = |u: &[BigRational], v: &[BigRational]| {
        u.iter().zip(v).fold(BigRational::zero(), |acc, (a, b)| {
            let d = a - b;
            acc + &d * &d
        })
    };
    Ok(d2(&p, &map(&x)) - d2(&map(&p), &x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{normalize4, Sheet, Side};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn e321() -> EuclideanEllipsoid {
        EuclideanEllipsoid::new(vec![3.0, 2.0, 1.0]).unwrap()
    }

    fn e321_shifted() -> EuclideanEllipsoid {
        EuclideanEllipsoid::new(vec![8.5f64.sqrt(), 3.5f64.sqrt(), 0.5f64.sqrt()]).unwrap()
    }

    #[test]
    fn euclidean_map() {
        let m = ivory_map(e321(), e321_shifted()).unwrap();
        assert_relative_eq!(m.ratios()[0], 8.5f64.sqrt() / 3.0, max_relative = 1e-15);
        assert_relative_eq!(m.ratios()[2], 0.5f64.sqrt(), max_relative = 1e-15);
        let p = m.apply(&[3.0, 0.0, 0.0], true).unwrap();
        assert_relative_eq!(p[0], 8.5f64.sqrt(), max_relative = 1e-15);
        assert_eq!(ivory_map(e321(), e321()).unwrap().ratios(), &[1.0, 1.0, 1.0]);
        let bad = EuclideanEllipsoid::new(vec![4.0, 2.0, 1.0]).unwrap();
        assert!(matches!(ivory_map(e321(), bad), Err(Error::NotConfocal(_))));
        assert!(matches!(m.apply(&[1.0, 0.0, 0.0], true), Err(Error::NotOnSource(_))));
        assert!(m.apply(&[1.0, 0.0, 0.0], false).is_ok());
    }

    #[test]
    fn spherical_map() {
        let s0 = SphericalEllipsoid::new(1.0, 1.0, 1.0, 1.0, Sheet::Both).unwrap();
        let s1 =
            SphericalEllipsoid::new(1.5f64.sqrt(), 1.5f64.sqrt(), 1.5f64.sqrt(), 0.5f64.sqrt(), Sheet::Both).unwrap();
        let m = ivory_map(s0, s1).unwrap();
        let p = m.apply(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2], true).unwrap();
        assert_relative_eq!(p[0], 0.75f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(p[3], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn lemma1_examples() {
        let r = lemma1_residual(&e321(), &e321_shifted(), &[3.0, 0.0, 0.0], &[0.0, 2.0, 0.0]).unwrap();
        assert!(r < 1e-15);
        let p = e321().surface_point(&[0.6, 0.0, 0.8]).unwrap();
        assert_eq!(lemma1_residual(&e321(), &e321_shifted(), &p, &p).unwrap(), 0.0);
    }

    #[test]
    fn lemma3_examples() {
        let s0 = SphericalEllipsoid::new(1.0, 1.0, 1.0, 1.0, Sheet::Both).unwrap();
        let s1 = s0.confocal_shift(0.5.into()).unwrap();
        let q0 = [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2];
        let x0 = [0.0, FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
        let (a, b, c) = lemma3_residuals(&s0, &s1, &q0, &x0).unwrap();
        assert!(a < 1e-15 && b < 1e-15 && c < 1e-15);
        // both sides of (C) are 2 − 1/√2
        let m = ivory_map(s0.clone(), s1.clone()).unwrap();
        let x1 = m.apply(&x0, true).unwrap();
        assert_relative_eq!(dist_sq(&x1, &q0), 2.0 - FRAC_1_SQRT_2, max_relative = 1e-15);
        // identity map: only the rounding of |q0|² itself is left in (B)
        let (a, b, c) = lemma3_residuals(&s0, &s0, &q0, &x0).unwrap();
        assert_eq!((a, c), (0.0, 0.0));
        assert!(b <= f64::EPSILON);
        assert!(matches!(lemma3_residuals(&s0, &s1, &[1.0, 0.0, 0.0, 0.0], &x0), Err(Error::NotOnSource(_))));
    }

    #[test]
    fn rational_points() {
        let axes = [q(3, 1), q(2, 1), q(1, 1)];
        let p = rational_point_on_ellipsoid(&axes, &[q(3, 5), q(4, 5), q(0, 1)]).unwrap();
        assert_eq!(p.coords(), vec![q(9, 5), q(8, 5), q(0, 1)]);
        let p = rational_point_on_ellipsoid(&axes, &[q(2, 3), q(2, 3), q(1, 3)]).unwrap();
        assert_eq!(p.coords(), vec![q(2, 1), q(4, 3), q(1, 3)]);
        assert_eq!(p.denominator, 3.into());
        let ones = [q(1, 1), q(1, 1), q(1, 1)];
        let p = rational_point_on_ellipsoid(&ones, &[q(0, 1), q(0, 1), q(1, 1)]).unwrap();
        assert_eq!(p.coords(), vec![q(0, 1), q(0, 1), q(1, 1)]);
        assert_eq!(rational_point_on_ellipsoid(&ones, &[q(0, 1), q(0, 1), q(0, 1)]), Err(Error::ZeroSeed));
        let p = rational_point_on_ellipsoid(&axes, &[q(1, 1), q(-2, 7), q(5, 3)]).unwrap();
        assert!(on_rational_ellipsoid(&axes, &p.coords()));
    }

    #[test]
    fn exact_lemma1_example() {
        let (a0, a1) = rational_confocal_pair(&q(3, 1), &[q(3, 1), q(2, 1), q(5, 2)]).unwrap();
        let p = rational_point_on_ellipsoid(&a0, &[q(1, 2), q(1, 3), q(-1, 5)]).unwrap();
        let x = rational_point_on_ellipsoid(&a0, &[q(-2, 1), q(1, 1), q(3, 1)]).unwrap();
        assert!(lemma1_residual_exact(&a0, &a1, &p, &x).unwrap().is_zero());
        let mut wrong = a1.clone();
        wrong[0] = &wrong[0] + q(1, 7);
        assert!(matches!(lemma1_residual_exact(&a0, &wrong, &p, &x), Err(Error::NotConfocal(_))));
    }

    fn rational() -> impl Strategy<Value = BigRational> {
        (-40i64..=40, 1i64..=12).prop_map(|(n, d)| q(n, d))
    }

    fn seed(dim: usize) -> impl Strategy<Value = Vec<BigRational>> {
        prop::collection::vec(rational(), dim).prop_filter("nonzero", |v| v.iter().any(|x| !x.is_zero()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn lemma1_is_exact(
            (k, ts, s1, s2) in (2usize..=4).prop_flat_map(|d| (
                (-30i64..=30, 1i64..=6).prop_map(|(n, m)| q(n, m)),
                prop::collection::vec((1i64..=40, 1i64..=8).prop_map(|(n, m)| q(n, m) + q(6, 1)), d),
                seed(d),
                seed(d),
            ))
        ) {
            let (a0, a1) = rational_confocal_pair(&k, &ts).unwrap();
            let p = rational_point_on_ellipsoid(&a0, &s1).unwrap();
            let x = rational_point_on_ellipsoid(&a0, &s2).unwrap();
            prop_assert!(lemma1_residual_exact(&a0, &a1, &p, &x).unwrap().is_zero());
            let e0 = EuclideanEllipsoid::new(a0.iter().map(|a| a.to_f64().unwrap()).collect::<Vec<_>>()).unwrap();
            let e1 = EuclideanEllipsoid::new(a1.iter().map(|a| a.to_f64().unwrap()).collect::<Vec<_>>()).unwrap();
            prop_assert!(lemma1_residual(&e0, &e1, &p.to_f64(), &x.to_f64()).unwrap() <= 1e-12);
        }

        #[test]
        fn lemma3_holds(
            params in prop::array::uniform4(0.3f64..3.0),
            frac in 0.02f64..0.98,
            u in prop::array::uniform3(-1.0f64..1.0),
            v in prop::array::uniform3(-1.0f64..1.0),
            sides in (any::<bool>(), any::<bool>()),
        ) {
            prop_assume!(u.iter().map(|x| x * x).sum::<f64>() > 1e-4 && v.iter().map(|x| x * x).sum::<f64>() > 1e-4);
            let se0 = SphericalEllipsoid::new(params[0], params[1], params[2], params[3], Sheet::Both).unwrap();
            let (lo, hi) = se0.shift_interval();
            let se1 = se0.confocal_shift((lo + frac * (hi - lo)).into()).unwrap();
            let unit = |w: [f64; 3]| { let n = w.iter().map(|x| x * x).sum::<f64>().sqrt(); w.map(|x| x / n) };
            let side = |b: bool| if b { Side::North } else { Side::South };
            let q0 = se0.surface_point(&unit(u), side(sides.0)).unwrap();
            let x0 = se0.surface_point(&unit(v), side(sides.1)).unwrap();
            let (a, b, c) = lemma3_residuals(&se0, &se1, &q0, &x0).unwrap();
            prop_assert!(a <= 1e-12 && b <= 1e-12 && c <= 1e-12, "{a:e} {b:e} {c:e}");
        }

        #[test]
        fn map_round_trip_and_sheet(
            params in prop::array::uniform4(0.3f64..3.0),
            frac in 0.02f64..0.98,
            p in prop::array::uniform4(-1.0f64..1.0),
        ) {
            let se0 = SphericalEllipsoid::new(params[0], params[1], params[2], params[3], Sheet::Both).unwrap();
            let (lo, hi) = se0.shift_interval();
            let se1 = se0.confocal_shift((lo + frac * (hi - lo)).into()).unwrap();
            let m = ivory_map(se0, se1).unwrap();
            let q = normalize4(p);
            let back = m.inverse().apply(&m.apply(&q, false).unwrap(), false).unwrap();
            for k in 0..4 {
                prop_assert!((back[k] - q[k]).abs() <= 1e-14 * q[k].abs().max(1e-300) * 4.0);
            }
            prop_assert_eq!(Side::of(m.apply(&q, false).unwrap()[3]), Side::of(q[3]));
        }
    }
}
