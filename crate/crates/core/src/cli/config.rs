//! Run configuration: problem, numerics, outputs and requested checks.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::anisotropy::conditions::{GuanMaVariant, HessianSampling};
use crate::anisotropy::{DataForm, PrescribedData, SphereFunction};
use crate::curvfun::CurvatureFunction;
use crate::error::{Error, Result};
use crate::flow::{Mode, ProblemSpec, RunOptions, Scheme, Shape, Side};
use crate::profile::{Grid, RadialProfile, SupportProfile};
use crate::spaceform::SpaceformConfig;
use crate::verify::{make_manufactured_expr, ManufacturedPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn lower() -> Side {
    Side::Lower
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub space: SpaceformConfig,
    pub function: CurvatureFunction,
    pub mode: Mode,
    #[serde(default = "lower")]
    pub start_side: Side,
    /// Right-hand side; omitted when `manufactured` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataForm>,
    /// Power-law data built so that `base` solves the problem exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<ManufacturedConfig>,
    /// Start profile; the starting barrier slice when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<SphereFunction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedConfig {
    pub q: f64,
    /// Support function as an expression in `theta`.
    pub base: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub grid: usize,
    pub tol: f64,
    pub max_steps: usize,
    pub record_every: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub pinching_cap: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let r = RunOptions::default();
        NumericsConfig {
            grid: r.grid_size,
            tol: r.tol,
            max_steps: r.max_steps,
            record_every: r.record_every,
            seed: 0,
            scheme: r.scheme,
            pinching_cap: r.pinching_cap,
        }
    }
}

impl NumericsConfig {
    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            tol: self.tol,
            max_steps: self.max_steps,
            grid_size: self.grid,
            record_every: self.record_every,
            pinching_cap: self.pinching_cap,
            scheme: self.scheme,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    pub dir: PathBuf,
    pub result: String,
    pub meta: String,
    pub profile: String,
    pub history: String,
    pub check: String,
    pub verify: String,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            dir: PathBuf::from("out"),
            result: "result.json".into(),
            meta: "result.meta.json".into(),
            profile: "profile.csv".into(),
            history: "residual_history.csv".into(),
            check: "check.json".into(),
            verify: "verify.json".into(),
        }
    }
}

impl OutputsConfig {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureProperty {
    InverseConcave,
    Concave,
    DualVanishes,
    DualNonVanishing,
    LambdaEps,
}

fn structure_samples() -> usize {
    10_000
}

fn eps_default() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureCheck {
    #[serde(default = "structure_samples")]
    pub samples: usize,
    #[serde(default = "eps_default")]
    pub eps: f64,
    /// Properties the function must have for the check to pass.
    #[serde(default)]
    pub expect: Vec<StructureProperty>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuanMaCheck {
    pub variant: GuanMaVariant,
    /// `φ` (or `ψ` for the Firey variant); defaults to the problem's `φ`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<SphereFunction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FireyCheck {
    pub psi: SphereFunction,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow_main: Option<HessianSampling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guanma: Option<GuanMaCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub firey: Option<FireyCheck>,
    /// Search the slice barriers of the problem.
    pub barriers: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub residual_tol: f64,
    pub oracle_tol: f64,
    pub firey_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub firey_k: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let v = crate::verify::VerifyOptions::default();
        VerifyConfig {
            residual_tol: v.residual_tol,
            oracle_tol: v.oracle_tol,
            firey_tol: v.firey_tol,
            firey_k: v.firey_k,
        }
    }
}

impl VerifyConfig {
    pub fn options(&self) -> crate::verify::VerifyOptions {
        crate::verify::VerifyOptions {
            residual_tol: self.residual_tol,
            oracle_tol: self.oracle_tol,
            firey_tol: self.firey_tol,
            firey_k: self.firey_k,
        }
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub max_steps: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(d) = &o.out {
            self.outputs.dir = d.clone();
        }
        if let Some(m) = o.grid {
            self.numerics.grid = m;
        }
        if let Some(t) = o.tol {
            self.numerics.tol = t;
        }
        if let Some(s) = o.max_steps {
            self.numerics.max_steps = s;
        }
        if let Some(s) = o.seed {
            self.numerics.seed = s;
        }
    }

    /// Schema-level consistency, checked before any computation.
    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        p.space.validate()?;
        match (&p.data, &p.manufactured) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either `data` or `manufactured`, not both".into()));
            }
            (None, None) => return Err(Error::Config("problem needs `data` or `manufactured`".into())),
            _ => {}
        }
        let n = &self.numerics;
        if !(n.tol.is_finite() && n.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", n.tol)));
        }
        if n.grid == 0 || n.max_steps == 0 {
            return Err(Error::Config("grid and max_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        let p = &self.problem;
        match p.space.kind {
            crate::spaceform::SpaceformKind::Euclid => Grid::for_dimension(p.function.n, self.numerics.grid),
            _ => Grid::new(crate::profile::Domain::FullCircle, self.numerics.grid),
        }
    }

    /// Assembles the flow problem (searching barriers) and, for manufactured
    /// configs, the exact solution.
    pub fn build(&self) -> Result<(ProblemSpec, Option<ManufacturedPair>)> {
        self.validate()?;
        let p = &self.problem;
        let n = p.function.n;
        let (data, pair) = match (&p.data, &p.manufactured) {
            (Some(form), None) => (PrescribedData::new(n, form.clone())?, None),
            (None, Some(m)) => {
                let pair = make_manufactured_expr(&p.function, m.q, &m.base, self.grid()?)?;
                (pair.data.clone(), Some(pair))
            }
            _ => unreachable!(),
        };
        let problem = ProblemSpec::new(p.space, p.function, data, p.mode, p.start_side)?;
        Ok((problem, pair))
    }

    pub fn initial_shape(&self, problem: &ProblemSpec) -> Result<Option<Shape>> {
        let Some(init) = &self.problem.initial else {
            return Ok(None);
        };
        init.validate()?;
        let grid = self.grid()?;
        let values = init.sample(grid)?;
        Ok(Some(match problem.parametrization {
            crate::flow::Parametrization::Support => {
                Shape::Support(SupportProfile::new(grid.domain, problem.n(), values)?)
            }
            crate::flow::Parametrization::Radial => Shape::Radial(RadialProfile::new(problem.space, values)?),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "problem": {
            "space": {"kind": "euclid", "annulus": [0.5, 2.0]},
            "function": {"family": "mean", "n": 1},
            "mode": "contracting",
            "data": {"family": "power_law", "q": 3, "phi": {"constant": 1.0}}
        }
    }"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.numerics.grid, 128);
        assert_eq!(cfg.problem.start_side, Side::Lower);
        let (p, pair) = cfg.build().unwrap();
        assert!(pair.is_none());
        assert!((p.barriers.r_lower - 0.5).abs() < 1e-5);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = MINIMAL.replace("\"mode\"", "\"colour\": 1, \"mode\"");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("\"q\": 3", "\"q\": 3, \"extra\": 0");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn data_and_manufactured_exclusive() {
        let both = MINIMAL.replace(
            "\"mode\"",
            "\"manufactured\": {\"q\": 3, \"base\": \"4 + cos(2*theta)\"}, \"mode\"",
        );
        assert!(matches!(RunConfig::from_json(&both), Err(Error::Config(_))));
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = RunConfig::from_json(MINIMAL).unwrap();
        cfg.apply(&Overrides {
            grid: Some(64),
            tol: Some(1e-6),
            ..Default::default()
        });
        assert_eq!(cfg.numerics.grid, 64);
        assert_eq!(cfg.numerics.tol, 1e-6);
        let echo = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&echo).unwrap(), cfg);
    }
}
