//! Executable checks of the confocal attraction theorems.
//!
//! Every check takes a [`CheckConfig`] and returns a [`VerificationReport`]
//! whose residuals are compared against named tolerances. Reports depend
//! only on the configuration (including its seed), apart from `time_ms`.

mod checks;
pub mod sampling;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConfocalShift, EuclideanEllipsoid, Sheet, SphericalEllipsoid};
use crate::ivory::Quadric;
use crate::quadrature::QuadratureSpec;

pub use checks::{chasles_proof_trace, quadratic_fit, ChaslesTrace, QuadraticFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckName {
    Lemma1,
    Lemma2,
    Lemma3,
    Lemma4,
    Lemma5,
    Lemma6,
    Corollary1,
    Corollary2,
    Theorem1,
    Theorem2,
    Interior,
    Focaloid,
    Chasles,
    Shell,
    Hygiene,
}

impl CheckName {
    pub const ALL: [CheckName; 15] = [
        CheckName::Lemma1,
        CheckName::Lemma2,
        CheckName::Lemma3,
        CheckName::Lemma4,
        CheckName::Lemma5,
        CheckName::Lemma6,
        CheckName::Corollary1,
        CheckName::Corollary2,
        CheckName::Theorem1,
        CheckName::Theorem2,
        CheckName::Interior,
        CheckName::Focaloid,
        CheckName::Chasles,
        CheckName::Shell,
        CheckName::Hygiene,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Lemma1 => "lemma1",
            CheckName::Lemma2 => "lemma2",
            CheckName::Lemma3 => "lemma3",
            CheckName::Lemma4 => "lemma4",
            CheckName::Lemma5 => "lemma5",
            CheckName::Lemma6 => "lemma6",
            CheckName::Corollary1 => "corollary1",
            CheckName::Corollary2 => "corollary2",
            CheckName::Theorem1 => "theorem1",
            CheckName::Theorem2 => "theorem2",
            CheckName::Interior => "interior",
            CheckName::Focaloid => "focaloid",
            CheckName::Chasles => "chasles",
            CheckName::Shell => "shell",
            CheckName::Hygiene => "hygiene",
        }
    }

    /// The statement a check exercises.
    pub fn anchor(self) -> &'static str {
        match self {
            CheckName::Lemma1 => "corresponding points: |P0 - A X0| = |A P0 - X0| for confocal ellipsoids",
            CheckName::Lemma2 => "reciprocity: V_H1(P0) = V_H0(P1) for confocal homeoids of equal mass",
            CheckName::Lemma3 => "spherical correspondence: images stay on the quadric and the sphere, distances swap",
            CheckName::Lemma4 => "a spherical homeoid has constant potential inside each cap",
            CheckName::Lemma5 => "mass elements of confocal spherical homeoids correspond under the diagonal map",
            CheckName::Lemma6 => "spherical reciprocity: V_H1(P0) = V_H0(P1)",
            CheckName::Corollary1 => "confocal homogeneous ellipsoids of equal mass attract exterior points equally",
            CheckName::Corollary2 => "the potential of a homeoid is constant on every exterior confocal ellipsoid",
            CheckName::Theorem1 => "confocal homeoids of equal mass attract exterior points equally",
            CheckName::Theorem2 => "confocal spherical homeoids of equal mass attract exterior points equally",
            CheckName::Interior => "a homeoid does not attract points in its interior",
            CheckName::Focaloid => {
                "a focaloid attracts like a confocal thick focaloid of equal mass; its potential on a confocal surface is a quadratic form"
            }
            CheckName::Chasles => "three-homeoid argument: V_H0(P) = V_H2(P0) = V_H2(P1) = V_H1(P)",
            CheckName::Shell => "shell theorem: sphere shells attract as point masses outside and not at all inside",
            CheckName::Hygiene => "force is the gradient of the potential, errors shrink with order, runs are reproducible",
        }
    }

    pub fn default_config(self) -> CheckConfig {
        let e321 = || Quadric::Euclidean(EuclideanEllipsoid::new(vec![3.0, 2.0, 1.0]).unwrap());
        let sph = |a: f64, b: f64, c: f64, h: f64, sheet: Sheet| {
            Quadric::Spherical(SphericalEllipsoid::new(a, b, c, h, sheet).unwrap())
        };
        let tol = |pairs: &[(&str, f64)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let base = CheckConfig::default();
        match self {
            CheckName::Lemma1 => CheckConfig {
                bases: vec![e321()],
                shifts: vec![],
                samples: 1000,
                tolerances: tol(&[("exact", 0.0), ("float", 1e-12)]),
                ..base
            },
            CheckName::Lemma2 => CheckConfig { shifts: vec![-0.5, 2.0], tolerances: tol(&[("dV", 1e-6)]), ..base },
            CheckName::Lemma3 => CheckConfig {
                bases: vec![sph(1.0, 1.0, 1.0, 1.0, Sheet::Both)],
                shifts: vec![],
                samples: 1000,
                tolerances: tol(&[("A", 1e-12), ("B", 1e-12), ("C", 1e-12)]),
                ..base
            },
            CheckName::Lemma4 => CheckConfig {
                bases: vec![sph(2.0, 1.0, 1.0, 1.0, Sheet::Both), sph(2.0, 1.0, 1.0, 1.0, Sheet::North)],
                shifts: vec![],
                tolerances: tol(&[("spread", 1e-6), ("force", 1e-6)]),
                ..base
            },
            CheckName::Lemma5 => CheckConfig {
                bases: vec![sph(1.0, 1.0, 1.0, 1.0, Sheet::Both), sph(2.0, 1.0, 1.5, 1.0, Sheet::Both)],
                shifts: vec![0.5],
                samples: 100,
                tolerances: tol(&[("density", 1e-9), ("mc_sigma", 3.0)]),
                ..base
            },
            CheckName::Lemma6 => CheckConfig {
                bases: vec![sph(1.0, 1.0, 1.0, 1.0, Sheet::Both), sph(2.0, 1.0, 1.5, 1.0, Sheet::Both)],
                shifts: vec![0.5],
                tolerances: tol(&[("dV", 1e-6)]),
                ..base
            },
            CheckName::Corollary1 => CheckConfig {
                shifts: vec![-0.5, 2.0, 5.0],
                source: SourceKind::Homogeneous,
                tolerances: tol(&[("dV", 1e-6), ("dF", 1e-6)]),
                ..base
            },
            CheckName::Corollary2 => {
                CheckConfig { shifts: vec![5.0], samples: 100, tolerances: tol(&[("spread", 1e-6)]), ..base }
            }
            CheckName::Theorem1 => {
                CheckConfig { shifts: vec![-0.5, 2.0, 5.0], tolerances: tol(&[("dV", 1e-6), ("dF", 1e-6)]), ..base }
            }
            CheckName::Theorem2 => CheckConfig {
                bases: vec![
                    sph(1.0, 1.0, 1.0, 1.0, Sheet::Both),
                    sph(2.0, 1.0, 1.5, 1.0, Sheet::Both),
                    sph(1.0, 1.0, 1.0, 1.0, Sheet::North),
                    sph(2.0, 1.0, 1.5, 1.0, Sheet::North),
                ],
                shifts: vec![0.3, 0.6],
                tolerances: tol(&[("dV", 1e-6), ("dF", 1e-6)]),
                ..base
            },
            CheckName::Interior => CheckConfig {
                shifts: vec![],
                samples: 50,
                tolerances: tol(&[("spread", 1e-7), ("force", 1e-7)]),
                ..base
            },
            CheckName::Focaloid => CheckConfig {
                shifts: vec![5.0],
                source: SourceKind::Focaloid,
                tolerances: tol(&[("dV", 1e-5), ("dF", 1e-5), ("fit", 1e-6)]),
                ..base
            },
            CheckName::Chasles => CheckConfig {
                bases: vec![e321(), sph(1.0, 1.0, 1.0, 1.0, Sheet::Both)],
                shifts: vec![-0.5, 0.5],
                samples: 5,
                tolerances: tol(&[("chain", 1e-6), ("spread", 1e-6)]),
                ..base
            },
            CheckName::Shell => CheckConfig {
                bases: vec![
                    Quadric::Euclidean(EuclideanEllipsoid::sphere(2, 1.0).unwrap()),
                    Quadric::Euclidean(EuclideanEllipsoid::sphere(3, 1.0).unwrap()),
                    Quadric::Euclidean(EuclideanEllipsoid::sphere(4, 1.0).unwrap()),
                    sph(1.0, 1.0, 1.0, 1.0, Sheet::Both),
                ],
                shifts: vec![],
                tolerances: tol(&[("euclidean3", 1e-8), ("euclidean", 1e-6), ("spherical", 1e-6)]),
                ..base
            },
            CheckName::Hygiene => CheckConfig {
                bases: vec![e321(), sph(2.0, 1.0, 1.5, 1.0, Sheet::Both)],
                shifts: vec![],
                tolerances: tol(&[
                    ("gradient", 1e-5),
                    ("doubling", 0.1),
                    ("laplacian", 1e-4),
                    ("reproducibility", 0.0),
                ]),
                ..base
            },
        }
    }

    pub fn run(self, cfg: &CheckConfig) -> Result<VerificationReport> {
        cfg.validate()?;
        let start = Instant::now();
        let mut rec = Recorder::new(cfg);
        match self {
            CheckName::Lemma1 => checks::lemma1(cfg, &mut rec)?,
            CheckName::Lemma3 => checks::lemma3(cfg, &mut rec)?,
            CheckName::Lemma2 | CheckName::Lemma6 => checks::reciprocity(cfg, &mut rec)?,
            CheckName::Lemma4 | CheckName::Interior => checks::interior(cfg, &mut rec)?,
            CheckName::Lemma5 => checks::density(cfg, &mut rec)?,
            CheckName::Corollary1 | CheckName::Theorem1 | CheckName::Theorem2 => checks::exterior(cfg, &mut rec)?,
            CheckName::Corollary2 => checks::equipotential(cfg, &mut rec)?,
            CheckName::Focaloid => checks::focaloid(cfg, &mut rec)?,
            CheckName::Chasles => checks::chasles(cfg, &mut rec)?,
            CheckName::Shell => checks::shell(cfg, &mut rec)?,
            CheckName::Hygiene => checks::hygiene(cfg, &mut rec)?,
        }
        Ok(rec.finish(self, cfg, start.elapsed().as_secs_f64() * 1e3))
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckName::ALL.into_iter().find(|c| c.as_str() == s).ok_or_else(|| Error::UnknownCheck(s.to_string()))
    }
}

/// What the base quadrics carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    Homeoid,
    Homogeneous,
    Focaloid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    /// Each check runs once per base quadric.
    pub bases: Vec<Quadric>,
    /// Confocal shifts of the members compared with each base.
    pub shifts: Vec<f64>,
    pub source: SourceKind,
    pub mass: f64,
    /// Mass of the shifted member relative to the base (density check).
    pub mass_ratio: f64,
    pub samples: usize,
    pub monte_carlo_samples: usize,
    /// Confocal thickness of thick focaloids.
    pub thickness: f64,
    pub n_layers: usize,
    pub quadrature: QuadratureSpec,
    /// Tolerances by residual class.
    pub tolerances: BTreeMap<String, f64>,
    /// Compare differences relative to the larger magnitude.
    pub relative: bool,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            bases: vec![Quadric::Euclidean(EuclideanEllipsoid::new(vec![3.0, 2.0, 1.0]).unwrap())],
            shifts: vec![-0.5],
            source: SourceKind::Homeoid,
            mass: 1.0,
            mass_ratio: 1.0,
            samples: 20,
            monte_carlo_samples: 4_000_000,
            thickness: 1e-3,
            n_layers: crate::potential::DEFAULT_LAYERS,
            quadrature: QuadratureSpec::default(),
            tolerances: BTreeMap::new(),
            relative: false,
            seed: 0,
        }
    }
}

impl CheckConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bases.is_empty() {
            return Err(Error::BadParameter("no base quadric".into()));
        }
        if self.samples == 0 {
            return Err(Error::BadParameter("samples must be positive".into()));
        }
        for (name, v) in [("mass", self.mass), ("mass_ratio", self.mass_ratio), ("thickness", self.thickness)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NonPositiveParam { name, value: v });
            }
        }
        if self.n_layers < 2 {
            return Err(Error::BadParameter("n_layers must be at least 2".into()));
        }
        if let Some((k, v)) = self.tolerances.iter().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::BadParameter(format!("tolerance {k} = {v} must be non-negative")));
        }
        self.quadrature.validate()?;
        for base in &self.bases {
            for &g in &self.shifts {
                member(base, g)?;
            }
        }
        Ok(())
    }

    /// Tolerance of a residual class, falling back to `default`.
    pub fn tol(&self, class: &str, default: f64) -> f64 {
        self.tolerances.get(class).copied().unwrap_or(default)
    }
}

/// Member of the confocal family of `base` with shift `gamma`.
pub fn member(base: &Quadric, gamma: f64) -> Result<Quadric> {
    Ok(match base {
        Quadric::Euclidean(e) => Quadric::Euclidean(e.confocal_shift(ConfocalShift(gamma))?),
        Quadric::Spherical(s) => Quadric::Spherical(s.confocal_shift(ConfocalShift(gamma))?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub name: String,
    pub anchor: String,
    pub config: CheckConfig,
    pub residuals: BTreeMap<String, f64>,
    pub tolerances: BTreeMap<String, f64>,
    /// Values reported but not asserted.
    pub recorded: BTreeMap<String, f64>,
    pub pass: bool,
    /// Some compared value carried a quadrature error estimate above a
    /// tenth of its tolerance.
    pub tolerance_limited: bool,
    pub max_error_estimate: f64,
    pub time_ms: f64,
}

impl VerificationReport {
    /// The same report with the wall time zeroed, for reproducibility checks.
    pub fn without_time(&self) -> Self {
        VerificationReport { time_ms: 0.0, ..self.clone() }
    }
}

/// Accumulates residuals while a check runs.
#[derive(Debug, Default)]
pub struct Recorder {
    relative: bool,
    residuals: BTreeMap<String, f64>,
    tolerances: BTreeMap<String, f64>,
    recorded: BTreeMap<String, f64>,
    limited: bool,
    max_err: f64,
}

impl Recorder {
    fn new(cfg: &CheckConfig) -> Self {
        Recorder { relative: cfg.relative, ..Default::default() }
    }

    /// Keep the worst residual under `key`.
    pub fn residual(&mut self, key: impl Into<String>, value: f64, tol: f64) {
        let key = key.into();
        let slot = self.residuals.entry(key.clone()).or_insert(0.0);
        // NaN must stick so the check fails
        if value.is_nan() || value > *slot {
            *slot = value;
        }
        self.tolerances.insert(key, tol);
    }

    /// Difference of two computed values with their error estimates.
    pub fn compare(&mut self, key: impl Into<String>, a: f64, b: f64, errors: (f64, f64), tol: f64) {
        let mut d = (a - b).abs();
        let mut err = errors.0.max(errors.1);
        if self.relative {
            let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
            d /= scale;
            err /= scale;
        }
        self.error(err, tol);
        self.residual(key, d, tol);
    }

    /// Track an error estimate against the tolerance it is judged by.
    pub fn error(&mut self, err: f64, tol: f64) {
        self.max_err = self.max_err.max(err);
        if 10.0 * err > tol {
            self.limited = true;
        }
    }

    pub fn record(&mut self, key: impl Into<String>, value: f64) {
        self.recorded.insert(key.into(), value);
    }

    fn finish(self, name: CheckName, cfg: &CheckConfig, time_ms: f64) -> VerificationReport {
        let pass = self.residuals.iter().all(|(k, r)| *r <= self.tolerances[k]);
        VerificationReport {
            name: name.to_string(),
            anchor: name.anchor().to_string(),
            config: cfg.clone(),
            residuals: self.residuals,
            tolerances: self.tolerances,
            recorded: self.recorded,
            pass,
            tolerance_limited: self.limited,
            max_error_estimate: self.max_err,
            time_ms,
        }
    }
}

/// Run `check` with its default configuration and the given seed.
pub fn run_default(check: CheckName, seed: u64) -> Result<VerificationReport> {
    let cfg = CheckConfig { seed, ..check.default_config() };
    check.run(&cfg)
}

/// Potential and force spread at interior points (per cap on the 3-sphere).
pub fn verify_interior(cfg: &CheckConfig) -> Result<VerificationReport> {
    CheckName::Interior.run(cfg)
}

/// Equal exterior fields of the base and its shifted confocal members.
pub fn verify_exterior_equivalence(cfg: &CheckConfig) -> Result<VerificationReport> {
    CheckName::Theorem1.run(cfg)
}

/// Constancy (homeoids) or quadratic form (other sources) of the potential
/// on enclosing confocal surfaces.
pub fn verify_equipotential(cfg: &CheckConfig) -> Result<VerificationReport> {
    CheckName::Corollary2.run(cfg)
}

pub fn verify_ivory_reciprocity(cfg: &CheckConfig) -> Result<VerificationReport> {
    CheckName::Lemma2.run(cfg)
}

pub fn verify_density_correspondence(cfg: &CheckConfig) -> Result<VerificationReport> {
    CheckName::Lemma5.run(cfg)
}
