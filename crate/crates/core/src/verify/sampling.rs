//! Seeded low-discrepancy sample points.
//!
//! The additive recurrence with the generalised golden ratio, shifted by a
//! seeded random offset (Cranley–Patterson rotation).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{normalize4, EuclideanEllipsoid, Side, SphericalEllipsoid};

/// `n` points of `[0, 1)^dim`.
pub fn ld_points(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    // φ_d is the positive root of x^{d+1} = x + 1
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=dim).map(|j| phi.powi(-(j as i32)).fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (0..n).map(|k| alpha.iter().zip(&shift).map(|(a, s)| (s + (k as f64 + 1.0) * a).fract()).collect()).collect()
}

/// Number of unit-cube coordinates consumed by [`sphere_param`].
pub fn param_coords(dim: usize) -> usize {
    match dim {
        2 => 1,
        3 => 2,
        _ => 2 * dim.div_ceil(2),
    }
}

/// Map cube coordinates to a point of `S^{dim−1}`: area-preserving for
/// `dim ≤ 3`, Box–Muller Gaussians otherwise.
pub fn sphere_param(t: &[f64], dim: usize) -> Vec<f64> {
    use std::f64::consts::TAU;
    match dim {
        2 => vec![(TAU * t[0]).cos(), (TAU * t[0]).sin()],
        3 => {
            let z = 1.0 - 2.0 * t[0];
            let s = (1.0 - z * z).max(0.0).sqrt();
            vec![s * (TAU * t[1]).cos(), s * (TAU * t[1]).sin(), z]
        }
        _ => {
            let mut g = Vec::with_capacity(dim + 1);
            for pair in t.chunks_exact(2) {
                let r = (-2.0 * pair[0].max(1e-300).ln()).sqrt();
                g.push(r * (TAU * pair[1]).cos());
                g.push(r * (TAU * pair[1]).sin());
            }
            g.truncate(dim);
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            g.iter().map(|x| x / n).collect()
        }
    }
}

/// Parameters `u ∈ S^{dim−1}` together with `extra` further coordinates in
/// `[0, 1)`.
pub fn param_samples(dim: usize, n: usize, seed: u64, extra: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let k = param_coords(dim);
    ld_points(k + extra, n, seed).into_iter().map(|t| (sphere_param(&t[..k], dim), t[k..].to_vec())).collect()
}

/// Surface points of `e` scaled by factors spread over `[lo, hi]`.
pub fn euclidean_samples(e: &EuclideanEllipsoid, n: usize, seed: u64, (lo, hi): (f64, f64)) -> Vec<Vec<f64>> {
    param_samples(e.dim(), n, seed, 1)
        .into_iter()
        .map(|(u, t)| {
            let s = lo + (hi - lo) * t[0];
            e.semi_axes().iter().zip(&u).map(|(a, x)| s * a * x).collect()
        })
        .collect()
}

/// Points `normalise(s·r·(a u₁, b u₂, c u₃), ±r h)`: on the surface for
/// `s = 1`, inside the cap for `s < 1`, in the band for `s > 1`. Sides are
/// taken cyclically from `sides`.
pub fn spherical_samples(
    se: &SphericalEllipsoid,
    n: usize,
    seed: u64,
    (lo, hi): (f64, f64),
    sides: &[Side],
) -> Vec<[f64; 4]> {
    param_samples(3, n, seed, 1)
        .into_iter()
        .enumerate()
        .map(|(k, (u, t))| {
            let s = lo + (hi - lo) * t[0];
            let side = sides[k % sides.len()];
            let p = se.point_at(&[u[0], u[1], u[2]], side);
            normalize4([s * p[0], s * p[1], s * p[2], p[3]])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sheet;

    #[test]
    fn points_are_seeded_and_in_range() {
        let a = ld_points(3, 50, 7);
        assert_eq!(a, ld_points(3, 50, 7));
        assert_ne!(a, ld_points(3, 50, 8));
        assert!(a.iter().flatten().all(|x| (0.0..1.0).contains(x)));
    }

    #[test]
    fn sphere_params_are_unit() {
        for dim in 2..=5 {
            for (u, _) in param_samples(dim, 20, 1, 0) {
                assert_eq!(u.len(), dim);
                assert!((u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn spherical_samples_land_in_the_requested_region() {
        let se = SphericalEllipsoid::new(2.0, 1.0, 1.5, 1.0, Sheet::Both).unwrap();
        for q in spherical_samples(&se, 20, 3, (1.2, 3.0), &[Side::North, Side::South]) {
            assert!(se.f(&q) > 0.0);
        }
        for q in spherical_samples(&se, 20, 3, (0.0, 0.8), &[Side::South]) {
            assert!(se.f(&q) < 0.0 && q[3] < 0.0);
        }
    }
}
