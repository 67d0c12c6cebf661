//! Axisymmetric support-function profiles and radial curve profiles on
//! uniform angular grids, with spectral derivatives and radii diagnostics.

pub mod spectral;

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::curvfun::MAX_DIM;
use crate::error::{Error, Result};
use crate::spaceform::SpaceformConfig;
use spectral::{Spectral, TrigInterpolant};

/// Smallest accepted grid size.
pub const MIN_GRID: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// `θ ∈ [0, 2π)`, nodes `2πj/M`; curves (`n = 1`).
    FullCircle,
    /// Latitude `θ ∈ (−π/2, π/2)`, midpoint nodes `−π/2 + (j+½)π/M`;
    /// axisymmetric hypersurfaces, even across both poles.
    Latitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub domain: Domain,
    pub m: usize,
}

impl Grid {
    pub fn new(domain: Domain, m: usize) -> Result<Self> {
        if m < MIN_GRID {
            return Err(Error::Parameter(format!("grid size {m} below minimum {MIN_GRID}")));
        }
        if domain == Domain::FullCircle && !m.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "full-circle grid size {m} must be a power of two"
            )));
        }
        Ok(Grid { domain, m })
    }

    /// Default domain for dimension `n`.
    pub fn for_dimension(n: usize, m: usize) -> Result<Self> {
        Grid::new(if n == 1 { Domain::FullCircle } else { Domain::Latitude }, m)
    }

    pub fn spacing(&self) -> f64 {
        match self.domain {
            Domain::FullCircle => 2.0 * PI / self.m as f64,
            Domain::Latitude => PI / self.m as f64,
        }
    }

    pub fn node(&self, j: usize) -> f64 {
        match self.domain {
            Domain::FullCircle => 2.0 * PI * j as f64 / self.m as f64,
            Domain::Latitude => -0.5 * PI + (j as f64 + 0.5) * PI / self.m as f64,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|j| self.node(j)).collect()
    }

    /// Length of the periodic extension used for transforms.
    fn periodic_len(&self) -> usize {
        match self.domain {
            Domain::FullCircle => self.m,
            Domain::Latitude => 2 * self.m,
        }
    }

    /// Lower end of the angular domain.
    pub fn start(&self) -> f64 {
        match self.domain {
            Domain::FullCircle => 0.0,
            Domain::Latitude => -0.5 * PI,
        }
    }

    fn extend(&self, values: &[f64]) -> Vec<f64> {
        match self.domain {
            Domain::FullCircle => values.to_vec(),
            Domain::Latitude => values.iter().chain(values.iter().rev()).copied().collect(),
        }
    }
}

/// Spectral differentiation on a fixed grid; transform plans are built once.
#[derive(Debug, Clone)]
pub struct Differentiator {
    grid: Grid,
    spectral: Spectral,
}

impl Differentiator {
    pub fn new(grid: Grid) -> Self {
        Differentiator {
            grid,
            spectral: Spectral::new(grid.periodic_len()),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `(f', f'')` at the nodes. Latitude data are extended evenly across
    /// both poles before transforming, so `f'` is odd about each pole.
    pub fn derivatives(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let ext = self.grid.extend(values);
        let len = ext.len();
        let mut d1 = vec![0.0; len];
        let mut d2 = vec![0.0; len];
        self.spectral.derivatives(&ext, &mut d1, &mut d2);
        d1.truncate(self.grid.m);
        d2.truncate(self.grid.m);
        (d1, d2)
    }

    pub fn interpolant(&self, values: &[f64]) -> Interpolant {
        let ext = self.grid.extend(values);
        let offset = match self.grid.domain {
            Domain::FullCircle => 0.0,
            Domain::Latitude => 0.5 * PI / self.grid.m as f64,
        };
        Interpolant {
            domain: self.grid.domain,
            inner: TrigInterpolant::new(&self.spectral, &ext, offset),
        }
    }

    /// Applies the Fourier multiplier `m(k)` (even in `k`) to nodal values.
    pub fn apply_multiplier(&self, values: &[f64], m: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut out = self.spectral.apply_multiplier(&self.grid.extend(values), m);
        out.truncate(self.grid.m);
        out
    }
}

/// Parity-aware trigonometric interpolant of nodal data, evaluable anywhere
/// on the domain including the poles.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    domain: Domain,
    inner: TrigInterpolant,
}

impl Interpolant {
    /// `(f, f', f'')` at `θ`.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        match self.domain {
            Domain::FullCircle => self.inner.eval(theta),
            Domain::Latitude => self.inner.eval(theta + 0.5 * PI),
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.eval(theta).0
    }
}

/// Principal radii of an axisymmetric support profile at one point:
/// `r₁ = s'' + s` (multiplicity one) and `r₂ = s − s'tanθ` (multiplicity
/// `n − 1`). On the full circle and at the poles `r₂ = r₁`.
pub fn axisymmetric_radii(domain: Domain, theta: f64, s: f64, ds: f64, dds: f64) -> (f64, f64) {
    let r1 = dds + s;
    let r2 = match domain {
        Domain::Latitude if theta.cos().abs() > 1e-12 => s - ds * theta.tan(),
        _ => r1,
    };
    (r1, r2)
}

/// Fills `out[..n]` with `(r₁, r₂, …, r₂)`.
pub fn radii_vector(n: usize, r1: f64, r2: f64, out: &mut [f64; MAX_DIM]) {
    out[0] = r1;
    for v in out.iter_mut().take(n).skip(1) {
        *v = r2;
    }
}

/// Nodewise geometry of a support profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Geometry {
    pub theta: Vec<f64>,
    pub s: Vec<f64>,
    pub ds: Vec<f64>,
    pub dds: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    /// `|x|` of the contact point with normal `ν(θ)`.
    pub abs_x: Vec<f64>,
    /// Polar angle of the contact point.
    pub x_angle: Vec<f64>,
}

impl Geometry {
    pub fn min_radius(&self, n: usize) -> f64 {
        let m1 = self.r1.iter().copied().fold(f64::INFINITY, f64::min);
        if n > 1 {
            m1.min(self.r2.iter().copied().fold(f64::INFINITY, f64::min))
        } else {
            m1
        }
    }

    pub fn max_radius(&self, n: usize) -> f64 {
        let m1 = self.r1.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if n > 1 {
            m1.max(self.r2.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        } else {
            m1
        }
    }

    /// First node with a nonpositive principal radius.
    pub fn convexity_defect(&self, n: usize) -> Option<(usize, f64)> {
        (0..self.r1.len()).find_map(|j| {
            if !(self.r1[j] > 0.0) {
                Some((j, self.r1[j]))
            } else if n > 1 && !(self.r2[j] > 0.0) {
                Some((j, self.r2[j]))
            } else {
                None
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSupportProfile")]
pub struct SupportProfile {
    pub domain: Domain,
    pub n: usize,
    pub m: usize,
    pub values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSupportProfile {
    domain: Domain,
    n: usize,
    m: usize,
    values: Vec<f64>,
}

impl TryFrom<RawSupportProfile> for SupportProfile {
    type Error = Error;

    fn try_from(raw: RawSupportProfile) -> Result<Self> {
        if raw.values.len() != raw.m {
            return Err(Error::Config(format!(
                "profile declares m = {} but has {} values",
                raw.m,
                raw.values.len()
            )));
        }
        SupportProfile::new(raw.domain, raw.n, raw.values)
    }
}

impl SupportProfile {
    pub fn new(domain: Domain, n: usize, values: Vec<f64>) -> Result<Self> {
        let grid = Grid::new(domain, values.len())?;
        if n == 0 || n > MAX_DIM {
            return Err(Error::Parameter(format!("dimension n = {n} not in 1..={MAX_DIM}")));
        }
        if (domain == Domain::FullCircle) != (n == 1) {
            return Err(Error::Parameter(format!(
                "domain {domain:?} does not match dimension n = {n}"
            )));
        }
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonPositiveData {
                value: *v,
                location: format!("support profile node {j}"),
            });
        }
        Ok(SupportProfile {
            domain,
            n,
            m: grid.m,
            values,
        })
    }

    pub fn from_fn(grid: Grid, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        SupportProfile::new(grid.domain, n, grid.nodes().into_iter().map(f).collect())
    }

    pub fn constant(grid: Grid, n: usize, value: f64) -> Result<Self> {
        SupportProfile::from_fn(grid, n, |_| value)
    }

    pub fn grid(&self) -> Grid {
        Grid {
            domain: self.domain,
            m: self.m,
        }
    }

    pub fn differentiate(&self, d: &Differentiator) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(d.grid(), self.grid());
        d.derivatives(&self.values)
    }

    pub fn geometry(&self, d: &Differentiator) -> Geometry {
        geometry_of(self.grid(), &self.values, d)
    }

    /// `(r₁, r₂)` at the nodes.
    pub fn radii(&self, d: &Differentiator) -> (Vec<f64>, Vec<f64>) {
        let g = self.geometry(d);
        (g.r1, g.r2)
    }

    /// `(κ₁, κ₂) = (1/r₁, 1/r₂)`; fails on the first nonpositive radius.
    pub fn curvatures(&self, d: &Differentiator) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.geometry(d);
        if let Some((node, radius)) = g.convexity_defect(self.n) {
            return Err(Error::ConvexityLoss { node, radius });
        }
        Ok((
            g.r1.iter().map(|r| 1.0 / r).collect(),
            g.r2.iter().map(|r| 1.0 / r).collect(),
        ))
    }

    /// Radii at an arbitrary angle (including the poles) by interpolation.
    pub fn radii_at(&self, d: &Differentiator, theta: f64) -> (f64, f64) {
        let (s, ds, dds) = d.interpolant(&self.values).eval(theta);
        axisymmetric_radii(self.domain, theta, s, ds, dds)
    }

    /// Contact point of the supporting hyperplane with normal `ν(θ_j)` in the
    /// meridian plane: `(x₁, x₂, |x|)`.
    pub fn contact_point(&self, d: &Differentiator, j: usize) -> (f64, f64, f64) {
        let (ds, _) = self.differentiate(d);
        let theta = self.grid().node(j);
        let (s, sp) = (self.values[j], ds[j]);
        let (sn, cs) = theta.sin_cos();
        let x1 = s * cs - sp * sn;
        let x2 = s * sn + sp * cs;
        (x1, x2, (s * s + sp * sp).sqrt())
    }

    /// CSV with header `theta,s`; values printed in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let grid = self.grid();
        let mut out = String::from("theta,s\n");
        for (j, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", grid.node(j), v);
        }
        out
    }

    pub fn from_csv(domain: Domain, n: usize, text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (line_no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let field = line
                .split(',')
                .nth(1)
                .ok_or_else(|| Error::Config(format!("line {}: expected two columns", line_no + 1)))?;
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("line {}: cannot parse `{}` as a number", line_no + 1, field)))?;
            values.push(v);
        }
        SupportProfile::new(domain, n, values)
    }
}

pub(crate) fn geometry_of(grid: Grid, values: &[f64], d: &Differentiator) -> Geometry {
    let (ds, dds) = d.derivatives(values);
    let theta = grid.nodes();
    let m = values.len();
    let mut r1 = vec![0.0; m];
    let mut r2 = vec![0.0; m];
    let mut abs_x = vec![0.0; m];
    let mut x_angle = vec![0.0; m];
    for j in 0..m {
        let (a, b) = axisymmetric_radii(grid.domain, theta[j], values[j], ds[j], dds[j]);
        r1[j] = a;
        r2[j] = b;
        abs_x[j] = values[j].hypot(ds[j]);
        x_angle[j] = theta[j] + ds[j].atan2(values[j]);
    }
    Geometry {
        theta,
        s: values.to_vec(),
        ds,
        dds,
        r1,
        r2,
        abs_x,
        x_angle,
    }
}

/// Closed curve `{(r(y), y)}` in a two-dimensional warped product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub space: SpaceformConfig,
    pub values: Vec<f64>,
}

/// Nodewise geometry of a radial graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGeometry {
    pub y: Vec<f64>,
    pub r: Vec<f64>,
    pub dr: Vec<f64>,
    pub ddr: Vec<f64>,
    pub curvature: Vec<f64>,
    /// `s = ϑ/v`.
    pub support: Vec<f64>,
    pub v: Vec<f64>,
    /// Angle of the outward normal measured like `y`.
    pub normal_angle: Vec<f64>,
}

impl RadialProfile {
    pub fn new(space: SpaceformConfig, values: Vec<f64>) -> Result<Self> {
        Grid::new(Domain::FullCircle, values.len())?;
        for (j, r) in values.iter().enumerate() {
            if !space.contains(*r) {
                return Err(Error::Domain(format!(
                    "radial profile node {j} at r = {r} leaves the annulus {:?}",
                    space.annulus
                )));
            }
        }
        Ok(RadialProfile { space, values })
    }

    pub fn constant(space: SpaceformConfig, m: usize, r: f64) -> Result<Self> {
        RadialProfile::new(space, vec![r; m])
    }

    pub fn grid(&self) -> Grid {
        Grid {
            domain: Domain::FullCircle,
            m: self.values.len(),
        }
    }

    pub fn geometry(&self, d: &Differentiator) -> Result<RadialGeometry> {
        radial_geometry_of(&self.space, &self.values, d)
    }

    pub fn to_csv(&self) -> String {
        let grid = self.grid();
        let mut out = String::from("y,r\n");
        for (j, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", grid.node(j), v);
        }
        out
    }
}

pub(crate) fn radial_geometry_of(
    space: &SpaceformConfig,
    values: &[f64],
    d: &Differentiator,
) -> Result<RadialGeometry> {
    let (dr, ddr) = d.derivatives(values);
    let y = d.grid().nodes();
    let m = values.len();
    let mut curvature = vec![0.0; m];
    let mut support = vec![0.0; m];
    let mut v = vec![0.0; m];
    let mut normal_angle = vec![0.0; m];
    for j in 0..m {
        let r = values[j];
        let (th, _) = space.warping(r)?;
        curvature[j] = space.radial_graph_curvature(r, dr[j], ddr[j])?;
        support[j] = space.graph_support(r, dr[j] * dr[j])?;
        v[j] = th / support[j];
        normal_angle[j] = y[j] + (-dr[j]).atan2(th);
    }
    Ok(RadialGeometry {
        y,
        r: values.to_vec(),
        dr,
        ddr,
        curvature,
        support,
        v,
        normal_angle,
    })
}

/// Diagnostics of a profile against a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowDiagnostics {
    pub min_radius: f64,
    pub max_radius: f64,
    /// Largest nodewise trace of the inverse Weingarten map, `Σ_i r_i`.
    pub pinching_b: f64,
    /// `max κ / min κ` over all nodes and directions.
    pub pinching_ratio: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// `sup |F − f|`.
    pub residual: f64,
    pub barrier_ok: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(m: usize) -> Grid {
        Grid::new(Domain::Latitude, m).unwrap()
    }

    fn circ(m: usize) -> Grid {
        Grid::new(Domain::FullCircle, m).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::new(Domain::FullCircle, 48).is_err());
        assert!(Grid::new(Domain::Latitude, 48).is_ok());
        assert!(Grid::new(Domain::FullCircle, 8).is_err());
        let g = lat(16);
        assert!((g.node(0) + 0.5 * PI - PI / 32.0).abs() < 1e-15);
        assert!((g.node(15) - 0.5 * PI + PI / 32.0).abs() < 1e-15);
    }

    #[test]
    fn differentiate_examples() {
        let g = circ(64);
        let d = Differentiator::new(g);
        let one = SupportProfile::constant(g, 1, 1.0).unwrap();
        let (a, b) = one.differentiate(&d);
        assert!(a.iter().chain(&b).all(|v| v.abs() < 1e-14));

        let (_, dds) = d.derivatives(&g.nodes().iter().map(|t| (2.0 * t).cos()).collect::<Vec<_>>());
        for (j, t) in g.nodes().iter().enumerate() {
            assert!((dds[j] + 4.0 * (2.0 * t).cos()).abs() < 1e-12);
        }

        let s = SupportProfile::from_fn(g, 1, |t| 4.0 + (2.0 * t).cos()).unwrap();
        let geo = s.geometry(&d);
        for (j, t) in g.nodes().iter().enumerate() {
            assert!((geo.r1[j] - (4.0 - 3.0 * (2.0 * t).cos())).abs() < 1e-12);
        }
    }

    #[test]
    fn latitude_parity_and_pole_limit() {
        let g = lat(64);
        let d = Differentiator::new(g);
        let s = SupportProfile::from_fn(g, 3, |t| 1.0 + 0.1 * (2.0 * t).cos() + 0.05 * (4.0 * t).cos()).unwrap();
        let it = d.interpolant(&s.values);
        let (_, dn, _) = it.eval(0.5 * PI);
        let (_, dsouth, _) = it.eval(-0.5 * PI);
        assert!(dn.abs() < 1e-12 && dsouth.abs() < 1e-12);
        let (r1, r2) = s.radii_at(&d, 0.5 * PI);
        assert_eq!(r1, r2);
        let near = 0.5 * PI - 1e-6;
        let (a, b) = s.radii_at(&d, near);
        assert!((a - r1).abs() < 1e-6 && (b - r1).abs() < 1e-6);
    }

    #[test]
    fn round_and_reciprocal() {
        let g = lat(32);
        let d = Differentiator::new(g);
        let s = SupportProfile::constant(g, 3, 2.0).unwrap();
        let (r1, r2) = s.radii(&d);
        assert!(r1.iter().chain(&r2).all(|r| (r - 2.0).abs() < 1e-13));
        let (k1, k2) = s.curvatures(&d).unwrap();
        assert!(k1.iter().chain(&k2).all(|k| (k - 0.5).abs() < 1e-13));

        let g = circ(64);
        let d = Differentiator::new(g);
        let s = SupportProfile::from_fn(g, 1, |t| 4.0 + (2.0 * t).cos()).unwrap();
        let (k1, _) = s.curvatures(&d).unwrap();
        let (r1, _) = s.radii(&d);
        for (k, r) in k1.iter().zip(&r1) {
            assert!((k * r - 1.0).abs() < 1e-14);
            assert!(*k >= 1.0 / 7.0 - 1e-12 && *k <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn convexity_loss_reports_node() {
        let g = circ(32);
        let d = Differentiator::new(g);
        let s = SupportProfile::from_fn(g, 1, |t| 1.0 + 0.5 * (2.0 * t).cos()).unwrap();
        match s.curvatures(&d) {
            Err(Error::ConvexityLoss { node, radius }) => {
                assert_eq!(node, 0);
                assert!((radius + 0.5).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn contact_point_identity() {
        let g = circ(64);
        let d = Differentiator::new(g);
        let s = SupportProfile::from_fn(g, 1, |t| 4.0 + (2.0 * t).cos()).unwrap();
        assert!((s.contact_point(&d, 0).2 - 5.0).abs() < 1e-12);
        let s = SupportProfile::from_fn(g, 1, |t| 2.0 + 0.5 * t.sin() + 0.1 * (3.0 * t).cos()).unwrap();
        let (ds, _) = s.differentiate(&d);
        for j in 0..g.m {
            let (x1, x2, ax) = s.contact_point(&d, j);
            assert!((x1.hypot(x2) - ax).abs() < 1e-12);
            assert!((ax * ax - s.values[j].powi(2) - ds[j].powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_is_spectral() {
        let f = |t: f64| 1.0 / (1.2 + 0.3 * t.cos());
        let mut prev: Option<Vec<f64>> = None;
        for m in [128, 256] {
            let g = circ(m);
            let d = Differentiator::new(g);
            let s = SupportProfile::from_fn(g, 1, f).unwrap();
            let (r1, _) = s.radii(&d);
            let coarse: Vec<f64> = r1.iter().step_by(m / 128).copied().collect();
            if let Some(p) = &prev {
                let gap = p.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(gap < 1e-10, "{gap}");
            }
            prev = Some(coarse);
        }
    }

    #[test]
    fn csv_and_json_roundtrip() {
        let g = circ(16);
        let s = SupportProfile::from_fn(g, 1, |t| 1.0 + 0.1 * t.sin() + 1e-17 * t).unwrap();
        let back = SupportProfile::from_csv(Domain::FullCircle, 1, &s.to_csv()).unwrap();
        assert_eq!(back, s);
        let json = serde_json::to_string(&s).unwrap();
        let back: SupportProfile = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let bad = json.replace("\"m\":16", "\"m\":17");
        assert!(serde_json::from_str::<SupportProfile>(&bad).is_err());
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(SupportProfile::new(Domain::FullCircle, 1, vec![1.0; 16]).is_ok());
        assert!(SupportProfile::new(Domain::FullCircle, 2, vec![1.0; 16]).is_err());
        let mut v = vec![1.0; 16];
        v[3] = -1.0;
        assert!(matches!(
            SupportProfile::new(Domain::FullCircle, 1, v),
            Err(Error::NonPositiveData { .. })
        ));
    }
}
