//! Prescribed data `f(s, x, ν)` and admissibility conditions on it.

pub mod conditions;
pub mod expr;
pub mod quadrature;
pub mod sphere;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use expr::{Expression, Vars};
pub use sphere::{GridFunction, SphereFunction};

/// Where `f` is evaluated. In warped products `abs_x` is the radial
/// coordinate of the point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub s: f64,
    pub abs_x: f64,
    /// Angle of the position `x/|x|`.
    pub x_angle: f64,
    /// Angle of the normal `ν`.
    pub nu: f64,
}

impl Point {
    /// Point on a slice of radius `r` whose support function is `s`.
    pub fn on_slice(r: f64, s: f64, angle: f64) -> Self {
        Point {
            s,
            abs_x: r,
            x_angle: angle,
            nu: angle,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataForm {
    /// `c·s^{1−q}φ(ν)`.
    PowerLaw {
        q: f64,
        phi: SphereFunction,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `(s^p |x|^{−(n+1)} φ(x/|x|))^{1/k}`.
    CurvatureMeasure { p: f64, k: usize, phi: SphereFunction },
    /// `(s |x|^{q−n−1} φ(ν))^{1/k}`.
    DualMinkowski { q: f64, k: usize, phi: SphereFunction },
    /// `(s^{1−p} |x|^{−(n+1)} φ(ν))^{1/k}`.
    LpAleksandrov { p: f64, k: usize, phi: SphereFunction },
    /// Free expression in `theta` (normal angle), `s` and `absx`.
    Expression { source: Expression },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrescribedData {
    pub n: usize,
    pub form: DataForm,
}

impl PrescribedData {
    pub fn new(n: usize, form: DataForm) -> Result<Self> {
        let d = PrescribedData { n, form };
        d.validate()?;
        Ok(d)
    }

    pub fn power_law(n: usize, q: f64, phi: SphereFunction) -> Result<Self> {
        PrescribedData::new(n, DataForm::PowerLaw { q, phi, scale: 1.0 })
    }

    pub fn expression(n: usize, src: &str) -> Result<Self> {
        PrescribedData::new(
            n,
            DataForm::Expression {
                source: Expression::parse(src)?,
            },
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Parameter("dimension n must be positive".into()));
        }
        match &self.form {
            DataForm::PowerLaw { phi, scale, .. } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::Parameter(format!(
                        "power-law scale must be positive, got {scale}"
                    )));
                }
                phi.validate()
            }
            DataForm::CurvatureMeasure { k, phi, .. }
            | DataForm::DualMinkowski { k, phi, .. }
            | DataForm::LpAleksandrov { k, phi, .. } => {
                if *k == 0 || *k > self.n {
                    return Err(Error::Parameter(format!(
                        "need 1 <= k <= n, got k = {k}, n = {}",
                        self.n
                    )));
                }
                phi.validate()
            }
            DataForm::Expression { .. } => Ok(()),
        }
    }

    pub fn phi(&self) -> Option<&SphereFunction> {
        match &self.form {
            DataForm::PowerLaw { phi, .. }
            | DataForm::CurvatureMeasure { phi, .. }
            | DataForm::DualMinkowski { phi, .. }
            | DataForm::LpAleksandrov { phi, .. } => Some(phi),
            DataForm::Expression { .. } => None,
        }
    }

    /// Index `k` of the σ_k-type families.
    pub fn sigma_index(&self) -> Option<usize> {
        match &self.form {
            DataForm::CurvatureMeasure { k, .. }
            | DataForm::DualMinkowski { k, .. }
            | DataForm::LpAleksandrov { k, .. } => Some(*k),
            _ => None,
        }
    }

    /// Whether `φ` is evaluated at the normal (so it can be cached per node).
    fn phi_at_normal(&self) -> bool {
        matches!(
            self.form,
            DataForm::PowerLaw { .. } | DataForm::DualMinkowski { .. } | DataForm::LpAleksandrov { .. }
        )
    }

    pub fn eval(&self, pt: &Point) -> Result<f64> {
        self.eval_with(pt, None)
    }

    fn eval_with(&self, pt: &Point, phi_nu: Option<f64>) -> Result<f64> {
        let n1 = (self.n + 1) as f64;
        let phi_of = |phi: &SphereFunction, angle: f64| match phi_nu {
            Some(v) => Ok(v),
            None => phi.eval(angle),
        };
        let v = match &self.form {
            DataForm::PowerLaw { q, phi, scale } => scale * pt.s.powf(1.0 - q) * phi_of(phi, pt.nu)?,
            DataForm::CurvatureMeasure { p, k, phi } => {
                let base = pt.s.powf(*p) * pt.abs_x.powf(-n1) * phi.eval(pt.x_angle)?;
                base.powf(1.0 / *k as f64)
            }
            DataForm::DualMinkowski { q, k, phi } => {
                let base = pt.s * pt.abs_x.powf(q - n1) * phi_of(phi, pt.nu)?;
                base.powf(1.0 / *k as f64)
            }
            DataForm::LpAleksandrov { p, k, phi } => {
                let base = pt.s.powf(1.0 - p) * pt.abs_x.powf(-n1) * phi_of(phi, pt.nu)?;
                base.powf(1.0 / *k as f64)
            }
            DataForm::Expression { source } => source.eval(&Vars {
                theta: pt.nu,
                s: pt.s,
                absx: pt.abs_x,
            })?,
        };
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NonPositiveData {
                value: v,
                location: format!("s = {}, |x| = {}, normal angle {}", pt.s, pt.abs_x, pt.nu),
            });
        }
        Ok(v)
    }

    /// Caches `φ(ν_j)` at fixed normal angles (support-function flows, where
    /// node `j` always carries the normal `ν(θ_j)`).
    pub fn bind(&self, normals: &[f64]) -> Result<BoundData<'_>> {
        let cached = match self.phi() {
            Some(phi) if self.phi_at_normal() => {
                let vals = phi.sample_at(normals)?;
                if let Some((j, v)) = vals.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::NonPositiveData {
                        value: *v,
                        location: format!("phi at normal angle {}", normals[j]),
                    });
                }
                Some(vals)
            }
            _ => None,
        };
        Ok(BoundData { data: self, cached })
    }

    /// Bind against the nodes of a grid, reusing nodal samples of grid functions.
    pub fn bind_grid(&self, grid: crate::profile::Grid) -> Result<BoundData<'_>> {
        match self.phi() {
            Some(phi) if self.phi_at_normal() => {
                let vals = phi.sample(grid)?;
                if let Some((j, v)) = vals.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
                    return Err(Error::NonPositiveData {
                        value: *v,
                        location: format!("phi at node {j}"),
                    });
                }
                Ok(BoundData {
                    data: self,
                    cached: Some(vals),
                })
            }
            _ => self.bind(&[]),
        }
    }

    /// Central-difference partials `(∂f/∂s, ∂f/∂|x|)`.
    pub fn partials(&self, pt: &Point) -> Result<(f64, f64)> {
        let hs = 1e-6 * pt.s.abs().max(1e-3);
        let hx = 1e-6 * pt.abs_x.abs().max(1e-3);
        let at = |s: f64, x: f64| self.eval(&Point { s, abs_x: x, ..*pt });
        let ds = (at(pt.s + hs, pt.abs_x)? - at(pt.s - hs, pt.abs_x)?) / (2.0 * hs);
        let dx = (at(pt.s, pt.abs_x + hx)? - at(pt.s, pt.abs_x - hx)?) / (2.0 * hx);
        Ok((ds, dx))
    }
}

/// Prescribed data with `φ` cached at a fixed set of normal angles.
#[derive(Debug, Clone)]
pub struct BoundData<'a> {
    data: &'a PrescribedData,
    cached: Option<Vec<f64>>,
}

impl BoundData<'_> {
    /// `f` at node `j`, whose normal angle must be the one bound.
    pub fn eval_node(&self, j: usize, pt: &Point) -> Result<f64> {
        self.data.eval_with(pt, self.cached.as_ref().map(|c| c[j]))
    }

    pub fn data(&self) -> &PrescribedData {
        self.data
    }
}
