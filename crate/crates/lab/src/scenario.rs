//! Scenario files: TOML (or JSON) descriptions of a domain, kernel,
//! coefficients and one experiment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nlkpp_core::kernel::ConvolutionMethod;
use nlkpp_core::{
    ApCoefficient, BoundaryShift, Dispersal, Domain, DomainKind, KernelFamily, KernelOptions, Model, Reaction,
    SpatialProfile, TemporalMode,
};
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Lyapunov,
    Eigen,
    Entire,
    #[serde(alias = "verify")]
    VerifyAll,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Lyapunov => "lyapunov",
            Experiment::Eigen => "eigen",
            Experiment::Entire => "entire",
            Experiment::VerifyAll => "verify-all",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    pub domain: Option<DomainSpec>,
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub a: CoefficientSpec,
    #[serde(default = "CoefficientSpec::unit")]
    pub b: CoefficientSpec,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub params: Params,
    /// Named expectations on measured quantities.
    #[serde(default)]
    pub expect: BTreeMap<String, Expectation>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    None,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainShape {
    Torus,
    Box,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainShape,
    /// `[lower, upper]` per axis; on a torus `upper - lower` is the period.
    pub bounds: Vec<[f64; 2]>,
    pub points: Vec<usize>,
    /// Optional nested sub-box for domain comparison.
    pub inner: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    Gaussian {
        sigma: f64,
        #[serde(flatten)]
        options: KernelTuning,
    },
    Bump {
        radius: f64,
        #[serde(flatten)]
        options: KernelTuning,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct KernelTuning {
    pub periodize: Option<bool>,
    pub threshold: Option<f64>,
    pub method: Option<Method>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Direct,
    Fft,
}

/// `a(t,x) = constant + Σ spatial cosines + Σ profile(x)·wave(ω t + phase)`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub spatial: Vec<CosineSpec>,
    #[serde(default)]
    pub modes: Vec<ModeSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosineSpec {
    pub amplitude: f64,
    pub wavevector: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wave {
    #[default]
    Cos,
    Sin,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub wave: Wave,
    /// Constant part of the spatial profile multiplying the wave.
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default)]
    pub spatial: Vec<CosineSpec>,
}

impl CoefficientSpec {
    pub fn unit() -> Self {
        CoefficientSpec { constant: 1.0, ..Default::default() }
    }

    pub fn build(&self) -> ApCoefficient {
        let profile = |constant: f64, spatial: &[CosineSpec]| SpatialProfile {
            constant,
            modes: spatial
                .iter()
                .map(|c| nlkpp_core::SpatialMode { wavevector: c.wavevector.clone(), amplitude: c.amplitude, phase: c.phase })
                .collect(),
        };
        let mut a = ApCoefficient::from_profile(profile(self.constant, &self.spatial));
        for m in &self.modes {
            let p = profile(m.amplitude, &m.spatial);
            let mode = match m.wave {
                Wave::Cos => TemporalMode::new(m.frequency, m.phase, p),
                Wave::Sin => TemporalMode::new(m.frequency, m.phase - std::f64::consts::FRAC_PI_2, p),
            };
            a = a.with_mode(mode);
        }
        a
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Constant(f64),
    /// Independent uniform values in `[lo, hi]` per node, drawn from the seed.
    Random { random: [f64; 2] },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Constant(1.0)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub save_every: Option<f64>,
    pub renorm: Option<f64>,
    pub window: Option<[f64; 2]>,
    pub tol: Option<f64>,
    #[serde(default)]
    pub initial: InitialSpec,
    /// Acceptance criteria to run for `verify-all`; all when empty.
    #[serde(default)]
    pub criteria: Vec<u8>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default)]
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Expectation {
    pub fn holds(&self, measured: f64) -> bool {
        self.value.is_none_or(|v| (measured - v).abs() <= self.tol)
            && self.min.is_none_or(|m| measured >= m - self.tol)
            && self.max.is_none_or(|m| measured <= m + self.tol)
    }
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io { path: path.to_owned(), source: e })?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        Self::parse(&text, is_json).map_err(|message| LabError::Parse { path: path.to_owned(), message })
    }

    /// Parses TOML, or JSON when `json` is set; the error string carries the
    /// line and field.
    pub fn parse(text: &str, json: bool) -> Result<Self, String> {
        let scenario: Scenario = if json {
            serde_json::from_str(text).map_err(|e| e.to_string())?
        } else {
            toml::from_str(text).map_err(|e| e.to_string())?
        };
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<(), String> {
        if self.experiment == Experiment::VerifyAll {
            return Ok(());
        }
        let Some(d) = &self.domain else {
            return Err(format!("scenario `{}`: missing [domain] section", self.name));
        };
        if self.kernel.is_none() {
            return Err(format!("scenario `{}`: missing [kernel] section", self.name));
        }
        if d.bounds.len() != d.points.len() || d.bounds.is_empty() || d.bounds.len() > 2 {
            return Err("domain: `bounds` and `points` must list the same one or two axes".into());
        }
        if let Some(inner) = &d.inner {
            if inner.len() != d.bounds.len() {
                return Err("domain.inner: wrong number of axes".into());
            }
        }
        if d.kind == DomainShape::Torus && d.inner.is_some() {
            return Err("domain.inner: nested domains need a box".into());
        }
        Ok(())
    }

    fn missing(&self, what: &str) -> LabError {
        LabError::Config { scenario: self.name.clone(), message: format!("missing [{what}] section") }
    }

    pub fn domain_spec(&self) -> Result<&DomainSpec, LabError> {
        self.domain.as_ref().ok_or_else(|| self.missing("domain"))
    }

    pub fn domain(&self) -> Result<Domain, LabError> {
        let spec = self.domain_spec()?;
        let kind = match spec.kind {
            DomainShape::Torus => DomainKind::Torus,
            DomainShape::Box => DomainKind::BoundedBox,
        };
        let bounds: Vec<(f64, f64)> = spec.bounds.iter().map(|b| (b[0], b[1])).collect();
        Ok(Domain::new(kind, &bounds, &spec.points)?)
    }

    pub fn kernel(&self) -> Result<(KernelFamily, KernelOptions), LabError> {
        let (family, tuning) = match self.kernel.as_ref().ok_or_else(|| self.missing("kernel"))? {
            KernelSpec::Gaussian { sigma, options } => (KernelFamily::Gaussian { sigma: *sigma }, options),
            KernelSpec::Bump { radius, options } => (KernelFamily::Bump { radius: *radius }, options),
        };
        let mut opts = KernelOptions::default();
        if let Some(p) = tuning.periodize {
            opts.periodize = p;
        }
        if let Some(t) = tuning.threshold {
            opts.threshold = t;
        }
        if let Some(m) = tuning.method {
            opts.method = match m {
                Method::Auto => ConvolutionMethod::Auto,
                Method::Direct => ConvolutionMethod::Direct,
                Method::Fft => ConvolutionMethod::Fft,
            };
        }
        Ok((family, opts))
    }

    pub fn dispersal_on(&self, domain: &Domain) -> Result<Dispersal, LabError> {
        let (family, opts) = self.kernel()?;
        Ok(Dispersal::new(domain, family, &opts)?)
    }

    pub fn dispersal(&self) -> Result<Dispersal, LabError> {
        self.dispersal_on(&self.domain()?)
    }

    pub fn boundary(&self) -> BoundaryShift {
        match self.boundary {
            Boundary::None => BoundaryShift::None,
            Boundary::Neumann => BoundaryShift::Neumann,
        }
    }

    pub fn reaction(&self) -> Reaction {
        Reaction { a: self.a.build(), b: self.b.build(), shift: self.boundary() }
    }

    pub fn nonlinear_on(&self, dispersal: &Dispersal) -> Result<Model, LabError> {
        Ok(Model::nonlinear(dispersal, &self.reaction())?)
    }

    pub fn nonlinear(&self) -> Result<Model, LabError> {
        self.nonlinear_on(&self.dispersal()?)
    }

    pub fn linear(&self) -> Result<Model, LabError> {
        Ok(Model::linear(&self.dispersal()?, &self.a.build(), self.boundary())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "m"
experiment = "eigen"
[domain]
kind = "box"
bounds = [[0.0, 1.0]]
points = [11]
[kernel]
family = "bump"
radius = 0.3
"#;

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::parse(MINIMAL, false).unwrap();
        assert_eq!(s.seed, 0);
        assert_eq!(s.boundary, Boundary::None);
        assert!(s.expect.is_empty());
        assert_eq!(s.b.build(), ApCoefficient::constant(1.0));
        assert_eq!(s.domain().unwrap().len(), 11);
    }

    #[test]
    fn torus_rejects_inner_box() {
        let text = MINIMAL.replace("\"box\"", "\"torus\"").replace("points = [11]", "points = [16]\ninner = [[0.2, 0.4]]");
        assert!(Scenario::parse(&text, false).unwrap_err().contains("inner"));
    }

    #[test]
    fn verify_alias() {
        let s = Scenario::parse("name = \"v\"\nexperiment = \"verify\"\n", false).unwrap();
        assert_eq!(s.experiment, Experiment::VerifyAll);
        assert!(s.domain().is_err());
    }

    #[test]
    fn expectation_bounds() {
        let exact = Expectation { value: Some(1.5), tol: 1e-6, min: None, max: None };
        assert!(exact.holds(1.5 + 5e-7) && !exact.holds(1.5 + 2e-6));
        let range = Expectation { value: None, tol: 0.0, min: Some(0.0), max: Some(1.0) };
        assert!(range.holds(0.0) && range.holds(1.0) && !range.holds(-1e-9) && !range.holds(1.1));
    }
}
