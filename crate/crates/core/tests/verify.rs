use confocal_core::ivory::Quadric;
use confocal_core::potential::potential_surface;
use confocal_core::verify::{
    chasles_proof_trace, quadratic_fit, run_default, verify_density_correspondence, verify_equipotential,
    verify_exterior_equivalence, verify_interior, verify_ivory_reciprocity, CheckConfig, CheckName, SourceKind,
};
use confocal_core::{Error, EuclideanEllipsoid, MassSurface, QuadratureSpec, Sheet, SphericalEllipsoid};

fn euclid(axes: &[f64]) -> Quadric {
    Quadric::Euclidean(EuclideanEllipsoid::new(axes.to_vec()).unwrap())
}

fn sph(p: [f64; 4], sheet: Sheet) -> Quadric {
    Quadric::Spherical(SphericalEllipsoid::new(p[0], p[1], p[2], p[3], sheet).unwrap())
}

fn cfg(bases: Vec<Quadric>, shifts: Vec<f64>) -> CheckConfig {
    CheckConfig { bases, shifts, ..Default::default() }
}

#[test]
fn concentric_spheres_agree_outside() {
    let quad = QuadratureSpec::default();
    for r in [1.0, 2.0] {
        let ms = MassSurface::euclidean_homeoid(EuclideanEllipsoid::sphere(3, r).unwrap(), 1.0).unwrap();
        let v = potential_surface(&ms, &[3.0, 0.0, 0.0], &quad).unwrap();
        assert!((v.value - 1.0 / 3.0).abs() < 1e-13, "{}", v.value);
    }
    let report = verify_exterior_equivalence(&cfg(vec![euclid(&[1.0, 1.0, 1.0])], vec![3.0])).unwrap();
    assert!(report.pass, "{report:?}");
}

#[test]
fn exterior_equivalence_examples() {
    let r = verify_exterior_equivalence(&cfg(vec![euclid(&[3.0, 2.0, 1.0])], vec![-0.5])).unwrap();
    assert!(r.pass);
    assert!(r.residuals.values().all(|v| *v <= 1e-7));
    let r = verify_exterior_equivalence(&cfg(vec![sph([1.0; 4], Sheet::Both)], vec![0.5])).unwrap();
    assert!(r.pass);
    assert!(r.residuals.values().all(|v| *v <= 1e-7));
}

#[test]
fn homogeneous_pairs_need_the_same_mass() {
    let mut c = cfg(vec![euclid(&[3.0, 2.0, 1.0])], vec![2.0]);
    c.source = SourceKind::Homogeneous;
    c.samples = 6;
    assert!(verify_exterior_equivalence(&c).unwrap().pass);
}

#[test]
fn zero_tolerance_fails_honestly() {
    let mut c = cfg(vec![euclid(&[3.0, 2.0, 1.0])], vec![-0.5]);
    c.samples = 5;
    c.tolerances.insert("dV".into(), 0.0);
    let r = verify_exterior_equivalence(&c).unwrap();
    assert!(!r.pass);
}

#[test]
fn pass_is_monotone_in_tolerance() {
    let mut c = cfg(vec![euclid(&[3.0, 2.0, 1.0])], vec![-0.5]);
    c.samples = 5;
    let mut last = false;
    for tol in [0.0, 1e-17, 1e-16, 1e-15, 1e-14, 1e-10, 1e-6] {
        c.tolerances.insert("dV".into(), tol);
        c.tolerances.insert("dF".into(), tol);
        let pass = verify_exterior_equivalence(&c).unwrap().pass;
        assert!(pass || !last, "pass flipped back at tol {tol}");
        last = pass;
    }
    assert!(last);
}

#[test]
fn reciprocity_examples() {
    let r = verify_ivory_reciprocity(&cfg(vec![euclid(&[3.0, 2.0, 1.0]), sph([1.0; 4], Sheet::Both)], vec![-0.5, 0.5]));
    // -0.5 is admissible for the Euclidean base only
    assert!(matches!(r, Err(Error::ShiftOutOfRange { .. }) | Err(Error::ShiftTooNegative { .. })) || r.unwrap().pass);
    let r = verify_ivory_reciprocity(&cfg(vec![euclid(&[3.0, 2.0, 1.0])], vec![0.0])).unwrap();
    assert!(r.residuals.values().all(|v| *v == 0.0), "{:?}", r.residuals);
    let r = verify_ivory_reciprocity(&cfg(vec![sph([1.0; 4], Sheet::Both)], vec![0.5])).unwrap();
    assert!(r.pass && r.residuals.values().all(|v| *v <= 1e-7));
}

#[test]
fn density_examples() {
    let mut c = cfg(vec![sph([1.0; 4], Sheet::Both)], vec![0.0]);
    c.samples = 100;
    c.monte_carlo_samples = 200_000;
    let r = verify_density_correspondence(&c).unwrap();
    assert_eq!(r.residuals["base0/gamma=0/density"], 0.0);
    c.shifts = vec![0.5];
    c.mass_ratio = 2.0;
    let r = verify_density_correspondence(&c).unwrap();
    assert!(r.residuals["base0/gamma=0.5/density"] <= 1e-9);
}

#[test]
fn interior_examples() {
    let mut c = cfg(vec![euclid(&[3.0, 2.0, 1.0])], vec![]);
    c.samples = 50;
    let r = verify_interior(&c).unwrap();
    assert!(r.pass);
    assert!(r.residuals.values().all(|v| *v <= 1e-7));
    let r = verify_interior(&cfg(vec![euclid(&[2.0, 2.0, 2.0])], vec![])).unwrap();
    assert!((r.recorded["base0/V"] - 0.5).abs() < 1e-12);
    let r = verify_interior(&cfg(vec![sph([2.0, 1.0, 1.0, 1.0], Sheet::Both)], vec![])).unwrap();
    assert!(r.residuals["base0/north/spread"] <= 1e-6);
}

#[test]
fn equipotential_examples() {
    let mut c = cfg(vec![euclid(&[3.0, 2.0, 1.0])], vec![5.0]);
    c.samples = 100;
    let r = verify_equipotential(&c).unwrap();
    assert!(r.residuals["base0/gamma=5/spread"] <= 1e-7);
    let r = verify_equipotential(&cfg(vec![euclid(&[1.0, 1.0, 1.0])], vec![3.0])).unwrap();
    assert!(r.residuals["base0/gamma=3/spread"] <= 1e-10);
    c.source = SourceKind::Focaloid;
    let r = verify_equipotential(&c).unwrap();
    assert!(r.residuals["base0/gamma=5/fit"] <= 1e-6, "{:?}", r.residuals);
}

#[test]
fn equipotential_refuses_inner_surfaces() {
    assert!(verify_equipotential(&cfg(vec![euclid(&[3.0, 2.0, 1.0])], vec![-0.5])).is_err());
}

#[test]
fn quadratic_fit_recovers_a_form() {
    let pts: Vec<Vec<f64>> = (0..30)
        .map(|k| {
            let t = k as f64 * 0.37;
            vec![t.cos(), (1.3 * t).sin(), (0.7 * t).cos() * t.sin()]
        })
        .collect();
    let vals: Vec<f64> = pts.iter().map(|p| 2.0 * p[0] * p[0] - p[0] * p[2] + 0.5 * p[1] * p[1]).collect();
    let fit = quadratic_fit(&pts, &vals).unwrap();
    assert!(fit.max_residual < 1e-12);
    assert!((fit.coefficients[0] - 2.0).abs() < 1e-10);
    assert!(matches!(quadratic_fit(&pts[..3], &vals[..3]), Err(Error::DegenerateFit(_))));
}

#[test]
fn chasles_trace_examples() {
    let quad = QuadratureSpec::default();
    let h0 = euclid(&[3.0, 2.0, 1.0]);
    let h1 = match &h0 {
        Quadric::Euclidean(e) => Quadric::Euclidean(e.confocal_shift((-0.5).into()).unwrap()),
        _ => unreachable!(),
    };
    let t = chasles_proof_trace(&h0, &h1, 1.0, &[4.0, 1.0, 1.0], &quad, 0).unwrap();
    assert!(t.chain_residual() <= 1e-7, "{t:?}");
    assert!(t.interior_spread <= 1e-7);

    // P on H0: H2 is H0 itself
    let p = [3.0 * 0.6, 2.0 * 0.8, 0.0];
    let t = chasles_proof_trace(&h0, &h1, 1.0, &p, &quad, 0).unwrap();
    assert!(t.gamma2.abs() < 1e-12);
    assert!((t.v_h2_p0 - t.v_h0_p).abs() < 1e-9);

    assert!(matches!(chasles_proof_trace(&h0, &h1, 1.0, &[0.5, 0.0, 0.0], &quad, 0), Err(Error::PNotExterior)));

    let s0 = sph([1.0; 4], Sheet::Both);
    let s1 = match &s0 {
        Quadric::Spherical(s) => Quadric::Spherical(s.confocal_shift(0.5.into()).unwrap()),
        _ => unreachable!(),
    };
    let q = [0.9f64, 0.1, 0.2, 0.3];
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let q: Vec<f64> = q.iter().map(|x| x / n).collect();
    let t = chasles_proof_trace(&s0, &s1, 1.0, &q, &quad, 0).unwrap();
    assert!(t.chain_residual() <= 1e-7, "{t:?}");
}

#[test]
fn reports_are_reproducible() {
    for c in [CheckName::Theorem2, CheckName::Lemma3, CheckName::Interior] {
        let a = run_default(c, 11).unwrap();
        let b = run_default(c, 11).unwrap();
        assert_eq!(a.without_time(), b.without_time());
    }
}

#[test]
fn check_names_parse() {
    for c in CheckName::ALL {
        assert_eq!(c.as_str().parse::<CheckName>().unwrap(), c);
    }
    assert!(matches!("lemma7".parse::<CheckName>(), Err(Error::UnknownCheck(_))));
}

#[test]
fn monte_carlo_quadrature_flags_tolerance_limits() {
    let mut c = cfg(vec![euclid(&[3.0, 2.0, 1.0])], vec![-0.5]);
    c.samples = 3;
    c.quadrature = QuadratureSpec::monte_carlo(20_000, 5);
    let r = verify_exterior_equivalence(&c).unwrap();
    assert!(r.tolerance_limited);
    assert!(r.max_error_estimate > 1e-6);
}
