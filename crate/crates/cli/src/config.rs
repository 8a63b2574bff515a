use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use confocal_core::geometry::{ConfocalShift, DEFAULT_SURFACE_TOL};
use confocal_core::ivory::Quadric;
use confocal_core::potential::{field_homogeneous_ellipsoid, field_surface, field_thick_layer, Field, DEFAULT_LAYERS};
use confocal_core::verify::{CheckConfig, CheckName};
use confocal_core::{
    EuclideanEllipsoid, FocaloidSurface, LayerRelation, MassSurface, QuadratureMethod, QuadratureSpec, Region,
    ThickLayer,
};

/// The single JSON document read by every subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub source: SourceConfig,
    pub quadrature: QuadratureSpec,
    /// Evaluation points for `eval`.
    pub points: Vec<Vec<f64>>,
    /// Slice for `sweep`.
    pub grid: Grid,
    /// Per-check overrides, merged key by key over the check's defaults.
    pub verify: BTreeMap<String, Value>,
    /// Default output path; `--out` wins.
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            source: SourceConfig::default(),
            quadrature: QuadratureSpec::default(),
            points: vec![vec![4.0, 0.0, 0.0], vec![0.0, 0.0, 0.5]],
            grid: Grid::default(),
            verify: BTreeMap::new(),
            out: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Homeoid,
    Focaloid,
    Homogeneous,
    ThickLayer,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    pub kind: Kind,
    pub quadric: Quadric,
    pub mass: f64,
    /// Confocal shift of the focaloid carrier relative to `quadric`.
    pub lambda: f64,
    /// Inner boundary of a thick layer.
    pub layer: Option<LayerRelation>,
    pub n_layers: usize,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            kind: Kind::Homeoid,
            quadric: Quadric::Euclidean(EuclideanEllipsoid::new(vec![3.0, 2.0, 1.0]).unwrap()),
            mass: 1.0,
            lambda: 0.0,
            layer: None,
            n_layers: DEFAULT_LAYERS,
        }
    }
}

pub enum Source {
    Surface(MassSurface),
    Solid(EuclideanEllipsoid, f64),
    Layer(ThickLayer),
}

impl SourceConfig {
    pub fn build(&self) -> Result<Source> {
        let euclid = |what: &str| match &self.quadric {
            Quadric::Euclidean(e) => Ok(e.clone()),
            Quadric::Spherical(_) => Err(anyhow!("a {what} source needs a Euclidean quadric")),
        };
        if self.kind != Kind::ThickLayer && self.layer.is_some() {
            bail!("`layer` only applies to thick_layer sources");
        }
        Ok(match self.kind {
            Kind::Homeoid => Source::Surface(match &self.quadric {
                Quadric::Euclidean(e) => MassSurface::euclidean_homeoid(e.clone(), self.mass)?,
                Quadric::Spherical(s) => MassSurface::spherical_homeoid(s.clone(), self.mass)?,
            }),
            Kind::Focaloid => Source::Surface(MassSurface::focaloid(
                FocaloidSurface::new(euclid("focaloid")?, self.lambda)?,
                self.mass,
            )?),
            Kind::Homogeneous => {
                let e = euclid("homogeneous")?;
                if !(self.mass.is_finite() && self.mass > 0.0) {
                    bail!("mass must be positive");
                }
                Source::Solid(e, self.mass)
            }
            Kind::ThickLayer => {
                let rel = self.layer.context("thick_layer sources need `layer`")?;
                Source::Layer(ThickLayer::with_mass(euclid("thick layer")?, rel, self.mass)?)
            }
        })
    }

    /// Ambient coordinate count of evaluation points.
    pub fn point_dim(&self) -> usize {
        match &self.quadric {
            Quadric::Euclidean(e) => e.dim(),
            Quadric::Spherical(_) => 4,
        }
    }

    /// Region relative to the outer boundary of the source.
    pub fn region(&self, p: &[f64]) -> String {
        let outer = match (&self.quadric, self.kind) {
            (Quadric::Euclidean(e), Kind::Focaloid) => e.confocal_shift(ConfocalShift(self.lambda)).ok(),
            (Quadric::Euclidean(e), _) => Some(e.clone()),
            (Quadric::Spherical(s), _) => {
                let Ok(q) = <[f64; 4]>::try_from(p) else { return String::new() };
                return match s.classify(&q, DEFAULT_SURFACE_TOL) {
                    Ok(c) => match c.cap {
                        Some(side) => format!("interior_{}", side_name(side)),
                        None => region_name(c.region).into(),
                    },
                    Err(_) => "off_sphere".into(),
                };
            }
        };
        match outer {
            Some(e) => region_name(e.classify(p, DEFAULT_SURFACE_TOL).region).into(),
            None => String::new(),
        }
    }
}

fn region_name(r: Region) -> &'static str {
    match r {
        Region::Interior => "interior",
        Region::Surface => "surface",
        Region::Exterior => "exterior",
    }
}

fn side_name(s: confocal_core::Side) -> &'static str {
    match s {
        confocal_core::Side::North => "north",
        confocal_core::Side::South => "south",
    }
}

impl Source {
    pub fn field(&self, p: &[f64], quad: &QuadratureSpec, n_layers: usize) -> confocal_core::Result<Field> {
        match self {
            Source::Surface(ms) => field_surface(ms, p, quad),
            Source::Solid(e, m) => field_homogeneous_ellipsoid(e, *m, p, quad, n_layers),
            Source::Layer(l) => field_thick_layer(l, p, quad, n_layers),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.n == 0 || !self.min.is_finite() || !self.max.is_finite() || self.max < self.min {
            bail!("bad grid axis {self:?}");
        }
        if self.n == 1 {
            return Ok(vec![self.min]);
        }
        let step = (self.max - self.min) / (self.n - 1) as f64;
        Ok((0..self.n).map(|i| if i + 1 == self.n { self.max } else { self.min + step * i as f64 }).collect())
    }
}

/// A planar slice of `ℝᵈ` or a great 2-sphere of the 3-sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Grid {
    /// Points `origin + s·u + t·v`; rows run over `t`, columns over `s`.
    Plane {
        #[serde(default)]
        origin: Option<Vec<f64>>,
        #[serde(default)]
        u: Option<Vec<f64>>,
        #[serde(default)]
        v: Option<Vec<f64>>,
        s: Axis,
        t: Axis,
    },
    /// Points `cos θ·e₀ + sin θ (cos φ·e₁ + sin φ·e₂)` for orthonormal
    /// `e₀, e₁, e₂`; rows run over `θ`, columns over `φ`.
    GreatSphere {
        #[serde(default)]
        axes: Option<[[f64; 4]; 3]>,
        polar: Axis,
        azimuth: Axis,
    },
}

impl Default for Grid {
    fn default() -> Self {
        let axis = Axis { min: -4.0, max: 4.0, n: 41 };
        Grid::Plane { origin: None, u: None, v: None, s: axis, t: axis }
    }
}

fn unit(dim: usize, i: usize) -> Vec<f64> {
    (0..dim).map(|k| if k == i { 1.0 } else { 0.0 }).collect()
}

impl Grid {
    /// Grid points in row-major order.
    pub fn points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            Grid::Plane { origin, u, v, s, t } => {
                let origin = origin.clone().unwrap_or_else(|| vec![0.0; dim]);
                let u = u.clone().unwrap_or_else(|| unit(dim, 0));
                let v = v.clone().unwrap_or_else(|| unit(dim, 1));
                if origin.len() != dim || u.len() != dim || v.len() != dim {
                    bail!("plane vectors must have {dim} components");
                }
                let (sv, tv) = (s.values()?, t.values()?);
                let mut out = Vec::with_capacity(sv.len() * tv.len());
                for tj in &tv {
                    for si in &sv {
                        out.push((0..dim).map(|k| origin[k] + si * u[k] + tj * v[k]).collect());
                    }
                }
                Ok(out)
            }
            Grid::GreatSphere { axes, polar, azimuth } => {
                if dim != 4 {
                    bail!("great_sphere grids need a spherical source");
                }
                let [e0, e1, e2] = axes.unwrap_or([[0.0, 0.0, 0.0, 1.0], [1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]);
                let dot = |a: &[f64; 4], b: &[f64; 4]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                for (i, a) in [e0, e1, e2].iter().enumerate() {
                    for (j, b) in [e0, e1, e2].iter().enumerate() {
                        let want = if i == j { 1.0 } else { 0.0 };
                        if (dot(a, b) - want).abs() > 1e-12 {
                            bail!("great_sphere axes must be orthonormal");
                        }
                    }
                }
                let (pv, av) = (polar.values()?, azimuth.values()?);
                let mut out = Vec::with_capacity(pv.len() * av.len());
                for th in &pv {
                    for ph in &av {
                        let (st, ct) = th.sin_cos();
                        let (sp, cp) = ph.sin_cos();
                        out.push((0..4).map(|k| ct * e0[k] + st * (cp * e1[k] + sp * e2[k])).collect());
                    }
                }
                Ok(out)
            }
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.quadrature.validate()?;
        if self.source.n_layers < 2 {
            bail!("n_layers must be at least 2");
        }
        self.source.build()?;
        for name in self.verify.keys() {
            name.parse::<CheckName>()?;
        }
        Ok(())
    }

    /// Quadrature with any Monte Carlo seed taken from the run seed.
    pub fn effective_quadrature(&self) -> QuadratureSpec {
        let mut q = self.quadrature;
        if let QuadratureMethod::MonteCarlo { samples, .. } = q.method {
            q.method = QuadratureMethod::MonteCarlo { samples, seed: self.seed };
        }
        q
    }

    /// Configuration of `check`: its defaults, overridden key by key by the
    /// `verify` entry, seeded with the run seed.
    pub fn check_config(&self, check: CheckName) -> Result<CheckConfig> {
        let mut base = serde_json::to_value(check.default_config())?;
        if let Some(over) = self.verify.get(check.as_str()) {
            let Value::Object(over) = over else { bail!("verify.{check} must be an object") };
            let obj = base.as_object_mut().expect("config serialises to an object");
            for (k, v) in over {
                obj.insert(k.clone(), v.clone());
            }
        }
        let mut cfg: CheckConfig = serde_json::from_value(base).with_context(|| format!("verify.{check}"))?;
        cfg.seed = self.seed;
        cfg.validate().with_context(|| format!("verify.{check}"))?;
        Ok(cfg)
    }

    /// The configuration with every check's settings spelled out.
    pub fn explicit(&self) -> Result<RunConfig> {
        let mut out = self.clone();
        out.verify = CheckName::ALL
            .iter()
            .map(|c| Ok((c.to_string(), serde_json::to_value(self.check_config(*c)?)?)))
            .collect::<Result<_>>()?;
        Ok(out)
    }
}
