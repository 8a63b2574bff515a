//! Browser bindings: a potential heat map, Ivory's correspondence on a
//! slice, and the spherical shell law along a meridian.

use wasm_bindgen::prelude::*;

use confocal_core::potential::{field_homogeneous_ellipsoid, field_surface, DEFAULT_LAYERS};
use confocal_core::{
    ConfocalShift, EuclideanEllipsoid, FocaloidSurface, MassSurface, QuadratureSpec, Result, Sheet, SphericalEllipsoid,
};

/// Cheaper than the library default; plenty for a picture.
fn demo_quadrature() -> QuadratureSpec {
    QuadratureSpec { max_order: 128, target_error: 1e-8, ..QuadratureSpec::gauss(32) }
}

/// Potentials on the `n × n` grid `[-half, half]²` at height `z`, row-major
/// with `y` varying slowest. Refused points are NaN.
pub fn slice(axes: [f64; 3], kind: &str, mass: f64, z: f64, half: f64, n: usize) -> Result<Vec<f64>> {
    let e = EuclideanEllipsoid::new(axes.to_vec())?;
    let quad = demo_quadrature();
    type Eval = Box<dyn Fn(&[f64]) -> Result<f64>>;
    let eval: Eval = match kind {
        "homogeneous" => Box::new(move |p: &[f64]| {
            Ok(field_homogeneous_ellipsoid(&e, mass, p, &quad, DEFAULT_LAYERS)?.potential.value)
        }),
        "focaloid" => {
            let ms = MassSurface::focaloid(FocaloidSurface::new(e, 0.0)?, mass)?;
            Box::new(move |p: &[f64]| Ok(field_surface(&ms, p, &quad)?.potential.value))
        }
        _ => {
            let ms = MassSurface::euclidean_homeoid(e, mass)?;
            Box::new(move |p: &[f64]| Ok(field_surface(&ms, p, &quad)?.potential.value))
        }
    };
    let step = if n > 1 { 2.0 * half / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let p = [-half + step * i as f64, -half + step * j as f64, z];
            out.push(eval(&p).unwrap_or(f64::NAN));
        }
    }
    Ok(out)
}

/// For `n` parameters on the `z = 0` section: `P₀`, `P₁` (x, y each),
/// `V_{H₁}(P₀)` and `V_{H₀}(P₁)`, six numbers per parameter.
pub fn ivory(axes: [f64; 3], gamma: f64, n: usize) -> Result<Vec<f64>> {
    let e0 = EuclideanEllipsoid::new(axes.to_vec())?;
    let e1 = e0.confocal_shift(ConfocalShift(gamma))?;
    let quad = demo_quadrature();
    let h0 = MassSurface::euclidean_homeoid(e0.clone(), 1.0)?;
    let h1 = MassSurface::euclidean_homeoid(e1.clone(), 1.0)?;
    let mut out = Vec::with_capacity(6 * n);
    for k in 0..n {
        let t = std::f64::consts::TAU * k as f64 / n as f64;
        let u = [t.cos(), t.sin(), 0.0];
        let p0 = e0.surface_point(&u)?;
        let p1 = e1.surface_point(&u)?;
        let v10 = field_surface(&h1, &p0, &quad)?.potential.value;
        let v01 = field_surface(&h0, &p1, &quad)?.potential.value;
        out.extend([p0[0], p0[1], p1[0], p1[1], v10, v01]);
    }
    Ok(out)
}

/// Along the meridian `(sin α, 0, 0, cos α)` of the homeoid `(a, a, a, h)`
/// with both sheets and unit mass: `α`, quadrature value (NaN if refused)
/// and the closed form, three numbers per sample.
pub fn shell_curve(a: f64, h: f64, n: usize) -> Result<Vec<f64>> {
    use std::f64::consts::PI;
    let se = SphericalEllipsoid::new(a, a, a, h, Sheet::Both)?;
    let ms = MassSurface::spherical_homeoid(se, 1.0)?;
    let quad = demo_quadrature();
    let theta = (a / h).atan();
    let cot = |x: f64| x.cos() / x.sin();
    let mut out = Vec::with_capacity(3 * n);
    for k in 0..n {
        let alpha = PI * (k as f64 + 0.5) / n as f64;
        let q = [alpha.sin(), 0.0, 0.0, alpha.cos()];
        let v = field_surface(&ms, &q, &quad).map(|f| f.potential.value).unwrap_or(f64::NAN);
        let exact = if alpha < theta {
            cot(theta)
        } else if alpha > PI - theta {
            -cot(theta)
        } else {
            cot(alpha)
        };
        out.extend([alpha, v, exact]);
    }
    Ok(out)
}

fn js(e: confocal_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen(js_name = potentialSlice)]
#[allow(clippy::too_many_arguments)]
pub fn potential_slice(
    a: f64,
    b: f64,
    c: f64,
    kind: &str,
    mass: f64,
    z: f64,
    half: f64,
    n: usize,
) -> std::result::Result<Vec<f64>, JsError> {
    slice([a, b, c], kind, mass, z, half, n).map_err(js)
}

#[wasm_bindgen(js_name = ivoryPairs)]
pub fn ivory_pairs(a: f64, b: f64, c: f64, gamma: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    ivory([a, b, c], gamma, n).map_err(js)
}

#[wasm_bindgen(js_name = sphericalShell)]
pub fn spherical_shell(a: f64, h: f64, n: usize) -> std::result::Result<Vec<f64>, JsError> {
    shell_curve(a, h, n).map_err(js)
}
