//! Positive functions of the normal angle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::expr::{Expression, Var, Vars};
use crate::error::{Error, Result};
use crate::profile::{Differentiator, Domain, Grid, Interpolant};

/// Nodal samples on a grid, interpolated spectrally elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridFunction", into = "RawGridFunction")]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
    interp: Interpolant,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGridFunction {
    domain: Domain,
    values: Vec<f64>,
}

impl TryFrom<RawGridFunction> for GridFunction {
    type Error = Error;
    fn try_from(raw: RawGridFunction) -> Result<Self> {
        GridFunction::new(Grid::new(raw.domain, raw.values.len())?, raw.values)
    }
}

impl From<GridFunction> for RawGridFunction {
    fn from(g: GridFunction) -> Self {
        RawGridFunction {
            domain: g.grid.domain,
            values: g.values,
        }
    }
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.m {
            return Err(Error::Parameter(format!(
                "grid function has {} values for a grid of {}",
                values.len(),
                grid.m
            )));
        }
        let interp = Differentiator::new(grid).interpolant(&values);
        Ok(GridFunction { grid, values, interp })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereFunction {
    Constant(f64),
    /// Expression in `theta`.
    Expr(Expression),
    /// `Σ_j a_j cos(jθ)`.
    Cosine(Vec<f64>),
    Grid(GridFunction),
}

impl SphereFunction {
    pub fn constant(c: f64) -> Self {
        SphereFunction::Constant(c)
    }

    pub fn expr(src: &str) -> Result<Self> {
        let e = Expression::parse(src)?;
        let f = SphereFunction::Expr(e);
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SphereFunction::Expr(e) if e.uses(Var::S) || e.uses(Var::AbsX) => Err(Error::Parameter(format!(
                "function of the normal angle may only use `theta`: `{}`",
                e.source()
            ))),
            SphereFunction::Constant(c) if !(c.is_finite() && *c > 0.0) => Err(Error::NonPositiveData {
                value: *c,
                location: "constant sphere function".into(),
            }),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, theta: f64) -> Result<f64> {
        Ok(match self {
            SphereFunction::Constant(c) => *c,
            SphereFunction::Expr(e) => e.eval(&Vars::theta(theta))?,
            SphereFunction::Cosine(a) => a.iter().enumerate().map(|(j, c)| c * (j as f64 * theta).cos()).sum(),
            SphereFunction::Grid(g) => g.interp.value(theta),
        })
    }

    /// Values at the nodes of `grid`; grid functions on the same grid return
    /// their samples unchanged.
    pub fn sample(&self, grid: Grid) -> Result<Vec<f64>> {
        if let SphereFunction::Grid(g) = self {
            if g.grid == grid {
                return Ok(g.values.clone());
            }
        }
        grid.nodes().into_iter().map(|t| self.eval(t)).collect()
    }

    pub fn sample_at(&self, nodes: &[f64]) -> Result<Vec<f64>> {
        nodes.iter().map(|&t| self.eval(t)).collect()
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, SphereFunction::Constant(_))
    }

    /// `(inf, sup)` over a fine sampling of `domain` (exact for constants).
    pub fn bounds(&self, domain: Domain) -> Result<(f64, f64)> {
        if let SphereFunction::Constant(c) = self {
            return Ok((*c, *c));
        }
        let (lo, width) = match domain {
            Domain::FullCircle => (0.0, 2.0 * PI),
            Domain::Latitude => (-0.5 * PI, PI),
        };
        let count = 4096;
        let mut inf = f64::INFINITY;
        let mut sup = f64::NEG_INFINITY;
        for j in 0..=count {
            let v = self.eval(lo + width * j as f64 / count as f64)?;
            inf = inf.min(v);
            sup = sup.max(v);
        }
        if let SphereFunction::Grid(g) = self {
            for v in &g.values {
                inf = inf.min(*v);
                sup = sup.max(*v);
            }
        }
        Ok((inf, sup))
    }
}
