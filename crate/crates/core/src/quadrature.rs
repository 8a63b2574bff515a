//! Quadrature rules on intervals and on unit spheres `S^{d−1}`.
//!
//! Sphere rules are product rules: the uniform trapezoid rule in azimuth,
//! then one polar angle per extra dimension, integrated by Gauss–Legendre in
//! `cos ψ` when the Jacobian `sinᵏ ψ` has odd `k` and by the midpoint rule in
//! `ψ` when `k` is even. Nodes are grouped into fixed chunks so
//! reductions are deterministic whatever the degree of parallelism.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::unit_sphere_area;

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_interval(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    (x.iter().map(|t| mid + half * t).collect(), w.iter().map(|v| half * v).collect())
}

/// Nodes on `S^{d−1}` with weights summing to the sphere area.
#[derive(Debug, Clone)]
pub struct SphereRule {
    dim: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    chunk: usize,
    /// Order for product rules, `None` for random rules.
    order: Option<usize>,
}

impl SphereRule {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn order(&self) -> Option<usize> {
        self.order
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.nodes.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    /// Index ranges of the fixed reduction chunks.
    pub fn chunk_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let n = self.len();
        (0..n.div_ceil(self.chunk)).map(|k| k * self.chunk..((k + 1) * self.chunk).min(n)).collect()
    }

    /// Product rule of the given order on `S^{dim−1}`, cached.
    pub fn gauss_product(dim: usize, order: usize) -> Arc<SphereRule> {
        type Cache = Mutex<HashMap<(usize, usize), Arc<SphereRule>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&(dim, order)) {
            return rule.clone();
        }
        let rule = Arc::new(Self::build_product(dim, order));
        let mut guard = cache.lock().unwrap();
        // keep the cache from growing without bound in long sessions
        if guard.len() > 32 {
            guard.clear();
        }
        guard.entry((dim, order)).or_insert(rule).clone()
    }

    fn build_product(dim: usize, order: usize) -> SphereRule {
        assert!(dim >= 2 && order >= 1);
        let azimuth = 2 * order;
        if dim == 2 {
            let h = 2.0 * PI / azimuth as f64;
            let mut nodes = Vec::with_capacity(2 * azimuth);
            for k in 0..azimuth {
                let phi = h * k as f64;
                nodes.extend_from_slice(&[phi.cos(), phi.sin()]);
            }
            return SphereRule { dim, nodes, weights: vec![h; azimuth], chunk: order.max(1), order: Some(order) };
        }
        let base = Self::build_product(dim - 1, order);
        // The base rule is symmetric under v ↦ −v, so odd powers of sin ψ
        // cancel and the polar integrand is a polynomial in t = cos ψ times
        // (1 − t²)^{(d−3)/2}.
        let k = dim - 2;
        let (polar, polar_w): (Vec<(f64, f64)>, Vec<f64>) = if k % 2 == 1 {
            // Gauss–Legendre in t with the polynomial factor in the weights
            let (t, w) = gauss_legendre(order);
            let e = ((k - 1) / 2) as i32;
            let nodes = t.iter().map(|&t| ((1.0 - t * t).sqrt(), t)).collect();
            let weights = t.iter().zip(&w).map(|(t, w)| w * (1.0 - t * t).powi(e)).collect();
            (nodes, weights)
        } else {
            // midpoint rule in ψ, exact for trigonometric polynomials of
            // degree below 2·order on the full circle
            let h = PI / order as f64;
            let psi: Vec<f64> = (0..order).map(|j| h * (j as f64 + 0.5)).collect();
            let nodes = psi.iter().map(|p| (p.sin(), p.cos())).collect();
            let weights = psi.iter().map(|p| h * p.sin().powi(k as i32)).collect();
            (nodes, weights)
        };
        let mut nodes = Vec::with_capacity(dim * polar.len() * base.len());
        let mut weights = Vec::with_capacity(polar.len() * base.len());
        for (&(s, c), &pw) in polar.iter().zip(&polar_w) {
            for (v, bw) in base.iter() {
                nodes.extend(v.iter().map(|x| s * x));
                nodes.push(c);
                weights.push(pw * bw);
            }
        }
        SphereRule { dim, nodes, weights, chunk: base.len(), order: Some(order) }
    }

    /// Independent uniform samples on `S^{dim−1}`, each weighted `area/N`.
    ///
    /// Samples are drawn in chunks of 4096, chunk `k` from ChaCha stream `k`
    /// of the seed, so the rule does not depend on evaluation order.
    pub fn monte_carlo(dim: usize, samples: usize, seed: u64) -> SphereRule {
        const CHUNK: usize = 4096;
        let w = unit_sphere_area(dim) / samples as f64;
        let mut nodes = Vec::with_capacity(dim * samples);
        let mut remaining = samples;
        let mut stream = 0u64;
        while remaining > 0 {
            let take = remaining.min(CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            for _ in 0..take {
                nodes.extend(random_unit_vector(dim, &mut rng));
            }
            remaining -= take;
            stream += 1;
        }
        SphereRule { dim, nodes, weights: vec![w; samples], chunk: CHUNK, order: None }
    }
}

pub(crate) fn random_unit_vector<R: rand::Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// How surface integrals are discretised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuadratureMethod {
    /// Product rule of the given order, refined by `refinement` for the
    /// error estimate.
    GaussProduct {
        order: usize,
    },
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
}

/// Integration configuration shared by every field evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub method: QuadratureMethod,
    /// Order multiplier between the two rules of an error estimate.
    pub refinement: usize,
    /// Orders keep growing by `refinement` while the estimated error exceeds
    /// `target_error · max(1, |V|)` and the next order is at most this.
    pub max_order: usize,
    pub target_error: f64,
    /// Evaluations closer than this to the carrying surface (or, on the
    /// 3-sphere, to its antipodal image) are refused.
    pub min_sep: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            method: QuadratureMethod::GaussProduct { order: 64 },
            refinement: 2,
            max_order: 512,
            target_error: 1e-10,
            min_sep: 1e-3,
        }
    }
}

impl QuadratureSpec {
    pub fn gauss(order: usize) -> Self {
        QuadratureSpec { method: QuadratureMethod::GaussProduct { order }, ..Default::default() }
    }

    /// A single order-doubling step with no further adaptivity.
    pub fn fixed(order: usize) -> Self {
        QuadratureSpec {
            method: QuadratureMethod::GaussProduct { order },
            max_order: order * 2,
            target_error: f64::INFINITY,
            ..Default::default()
        }
    }

    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        QuadratureSpec { method: QuadratureMethod::MonteCarlo { samples, seed }, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            QuadratureMethod::GaussProduct { order } => {
                if order < 4 || order % 2 != 0 {
                    return Err(Error::BadParameter(format!("quadrature order {order} must be even and >= 4")));
                }
                if self.refinement < 2 {
                    return Err(Error::BadParameter("refinement factor must be >= 2".into()));
                }
            }
            QuadratureMethod::MonteCarlo { samples, .. } => {
                if samples < 1000 {
                    return Err(Error::BadParameter(format!("{samples} Monte Carlo samples, need >= 1000")));
                }
            }
        }
        if !(self.min_sep > 0.0) {
            return Err(Error::BadParameter("min_sep must be positive".into()));
        }
        if !(self.target_error > 0.0) {
            return Err(Error::BadParameter("target_error must be positive".into()));
        }
        Ok(())
    }
}

/// Sum per-chunk partial results in chunk order.
///
/// With the `parallel` feature the chunks are evaluated on the rayon pool;
/// the final reduction is sequential either way, so the result is
/// bit-identical across thread counts.
pub(crate) fn chunked_reduce<T, F, G>(ranges: Vec<std::ops::Range<usize>>, map: F, mut fold: G, init: T) -> T
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
    G: FnMut(T, T) -> T,
{
    #[cfg(feature = "parallel")]
    let partials: Vec<T> = {
        use rayon::prelude::*;
        ranges.into_par_iter().map(&map).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<T> = ranges.into_iter().map(&map).collect();
    let mut acc = init;
    for p in partials {
        acc = fold(acc, p);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_small_orders() {
        let (x, w) = gauss_legendre(2);
        assert_relative_eq!(x[1], 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-15);
        let (x, w) = gauss_legendre(3);
        assert_eq!(x[1], 0.0);
        assert_relative_eq!(x[2], 0.6f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(w[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [5usize, 16, 64, 200] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            // ∫ t^{2n−2} = 2/(2n−1)
            let k = 2 * n as i32 - 2;
            let q: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(k)).sum();
            assert_relative_eq!(q, 2.0 / (k as f64 + 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn sphere_rules_have_correct_area_and_moments() {
        for dim in 2..=5 {
            let rule = SphereRule::gauss_product(dim, 12);
            let area = unit_sphere_area(dim);
            assert_relative_eq!(rule.iter().map(|(_, w)| w).sum::<f64>(), area, max_relative = 1e-13);
            // ∫ u_i² dS = area/d, ∫ u_1² u_2² = area/(d(d+2))
            for i in 0..dim {
                let m: f64 = rule.iter().map(|(u, w)| w * u[i] * u[i]).sum();
                assert_relative_eq!(m, area / dim as f64, max_relative = 1e-12);
            }
            let m: f64 = rule.iter().map(|(u, w)| w * u[0] * u[0] * u[1] * u[1]).sum();
            assert_relative_eq!(m, area / (dim * (dim + 2)) as f64, max_relative = 1e-12);
            for (u, _) in rule.iter() {
                assert!((u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn monte_carlo_rule_is_seeded() {
        let a = SphereRule::monte_carlo(3, 5000, 7);
        let b = SphereRule::monte_carlo(3, 5000, 7);
        let c = SphereRule::monte_carlo(3, 5000, 8);
        assert_eq!(a.nodes, b.nodes);
        assert_ne!(a.nodes, c.nodes);
        let mean_z: f64 = a.iter().map(|(u, _)| u[2]).sum::<f64>() / 5000.0;
        assert!(mean_z.abs() < 0.05);
    }

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::default().validate().is_ok());
        assert!(QuadratureSpec::gauss(5).validate().is_err());
        assert!(QuadratureSpec::gauss(2).validate().is_err());
        assert!(QuadratureSpec::monte_carlo(999, 1).validate().is_err());
        let bad = QuadratureSpec { min_sep: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn chunk_ranges_cover_everything() {
        let rule = SphereRule::gauss_product(3, 8);
        let ranges = rule.chunk_ranges();
        assert_eq!(ranges.len(), 8);
        assert_eq!(ranges.last().unwrap().end, rule.len());
    }
}
