//! Curvature flows `ẋ = σ(Φ(f) − Φ(F))ν` integrated to steady state:
//! Euclidean support-function flows and radial-graph curve flows.

use serde::{Deserialize, Serialize};

use crate::anisotropy::{BoundData, DataForm, Point, PrescribedData};
use crate::barrier::{admissible_constant, find_spherical_barriers, BarrierPair};
use crate::curvfun::{binomial, CurvatureFunction, Family, MAX_DIM};
use crate::error::{Error, Result};
use crate::profile::{
    geometry_of, radial_geometry_of, radii_vector, Differentiator, Domain, FlowDiagnostics, Grid, RadialProfile,
    SupportProfile,
};
use crate::spaceform::{SpaceformConfig, SpaceformKind};

/// Smallest time step before a run is declared stalled.
pub const MIN_DT: f64 = 1e-14;
pub const DT_SAFETY: f64 = 0.2;
pub const DT_RANGE: (f64, f64) = (1e-12, 1e-1);
/// Semi-implicit step bound `IMEX_SAFETY/max(maxcoef, rate)`, clamped to `IMEX_DT_RANGE`.
pub const IMEX_SAFETY: f64 = 0.25;
pub const IMEX_DT_RANGE: (f64, f64) = (1e-12, 1.0);
/// Relative shift used to estimate the reaction rate.
const RATE_STEP: f64 = 1e-6;

/// Time integrator behind the common step contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Explicit midpoint rule under the parabolic step bound.
    #[default]
    ExplicitRk2,
    /// Linearly stabilized Euler: the second derivative, scaled by the
    /// largest diffusion coefficient, is treated implicitly.
    Imex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `Φ(y) = y`.
    Contracting,
    /// `Φ(y) = −1/y`.
    Expanding,
}

impl Mode {
    pub fn phi(self, y: f64) -> f64 {
        match self {
            Mode::Contracting => y,
            Mode::Expanding => -1.0 / y,
        }
    }

    pub fn dphi(self, y: f64) -> f64 {
        match self {
            Mode::Contracting => 1.0,
            Mode::Expanding => 1.0 / (y * y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parametrization {
    /// Support function over the Gauss map (Euclidean space).
    Support,
    /// Radial graph `r(y)` over the unit circle (`n = 1`).
    Radial,
}

/// Factor turning the raw σ_k-family data into a right-hand side for the
/// normalized power mean `n(σ_k/C(n,k))^{1/k}`; other data are used as is.
pub fn target_scale(function: &CurvatureFunction, data: &PrescribedData) -> Result<f64> {
    match data.sigma_index() {
        None => Ok(1.0),
        Some(k) => {
            if function.dual || function.family != (Family::PowerMean { k }) {
                return Err(Error::Parameter(format!(
                    "sigma_{k}-type data need the power-mean curvature function with k = {k}"
                )));
            }
            let n = function.n;
            Ok(n as f64 / binomial(n, k).powf(1.0 / k as f64))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub space: SpaceformConfig,
    pub function: CurvatureFunction,
    pub data: PrescribedData,
    pub mode: Mode,
    pub start_side: Side,
    pub parametrization: Parametrization,
    pub barriers: BarrierPair,
    pub target_scale: f64,
}

impl ProblemSpec {
    /// Assembles a flow problem and searches its slice barriers. Euclidean
    /// problems use the support parametrization, the hemisphere and
    /// hyperbolic space the radial one (`n = 1`).
    pub fn new(
        space: SpaceformConfig,
        function: CurvatureFunction,
        data: PrescribedData,
        mode: Mode,
        start_side: Side,
    ) -> Result<Self> {
        let param = match space.kind {
            SpaceformKind::Euclid => Parametrization::Support,
            _ => Parametrization::Radial,
        };
        ProblemSpec::with_parametrization(space, function, data, mode, start_side, param)
    }

    pub fn with_parametrization(
        space: SpaceformConfig,
        function: CurvatureFunction,
        data: PrescribedData,
        mode: Mode,
        start_side: Side,
        parametrization: Parametrization,
    ) -> Result<Self> {
        space.validate()?;
        data.validate()?;
        if space.kind == SpaceformKind::DeSitter {
            return Err(Error::Unsupported(
                "de Sitter space supports barrier arithmetic only, not flow runs".into(),
            ));
        }
        if function.n != data.n {
            return Err(Error::Parameter(format!(
                "curvature function has n = {} but data has n = {}",
                function.n, data.n
            )));
        }
        match parametrization {
            Parametrization::Support if space.kind != SpaceformKind::Euclid => {
                return Err(Error::Unsupported(
                    "support-function flows are only available in Euclidean space".into(),
                ))
            }
            Parametrization::Radial if function.n != 1 => {
                return Err(Error::Unsupported(
                    "radial-graph flows are only available for curves (n = 1)".into(),
                ))
            }
            _ => {}
        }
        if let (SpaceformKind::Sphere, DataForm::PowerLaw { q, phi, .. }) = (space.kind, &data.form) {
            let (_, sup) = phi.bounds(Domain::FullCircle)?;
            admissible_constant(&space, function.n, sup, *q, space.annulus.1)?;
        }
        let scale = target_scale(&function, &data)?;
        let barriers = find_spherical_barriers(&space, &function, &data, scale)?;
        Ok(ProblemSpec {
            space,
            function,
            data,
            mode,
            start_side,
            parametrization,
            barriers,
            target_scale: scale,
        })
    }

    pub fn n(&self) -> usize {
        self.function.n
    }

    /// Right-hand side `f` at a point, including the normalization factor.
    pub fn target(&self, pt: &Point) -> Result<f64> {
        Ok(self.target_scale * self.data.eval(pt)?)
    }

    pub fn default_grid(&self, m: usize) -> Result<Grid> {
        Grid::for_dimension(self.n(), m)
    }

    /// Barrier slice on the starting side, as a profile on `grid`.
    pub fn start_shape(&self, grid: Grid) -> Result<Shape> {
        let r = self.barriers.radius(self.start_side);
        self.round_shape(grid, r)
    }

    /// Slice `{r}×Sⁿ` as a profile.
    pub fn round_shape(&self, grid: Grid, r: f64) -> Result<Shape> {
        match self.parametrization {
            Parametrization::Support => Ok(Shape::Support(SupportProfile::constant(grid, self.n(), r)?)),
            Parametrization::Radial => Ok(Shape::Radial(RadialProfile::constant(self.space, grid.m, r)?)),
        }
    }
}

/// Profile in either parametrization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Support(SupportProfile),
    Radial(RadialProfile),
}

impl Shape {
    pub fn values(&self) -> &[f64] {
        match self {
            Shape::Support(p) => &p.values,
            Shape::Radial(p) => &p.values,
        }
    }

    pub fn grid(&self) -> Grid {
        match self {
            Shape::Support(p) => p.grid(),
            Shape::Radial(p) => p.grid(),
        }
    }

    fn with_values(&self, values: Vec<f64>) -> Shape {
        match self {
            Shape::Support(p) => Shape::Support(SupportProfile { values, ..p.clone() }),
            Shape::Radial(p) => Shape::Radial(RadialProfile { values, space: p.space }),
        }
    }

    pub fn to_csv(&self) -> String {
        match self {
            Shape::Support(p) => p.to_csv(),
            Shape::Radial(p) => p.to_csv(),
        }
    }

    fn matches(&self, problem: &ProblemSpec) -> Result<()> {
        let ok = match (self, problem.parametrization) {
            (Shape::Support(p), Parametrization::Support) => p.n == problem.n(),
            (Shape::Radial(_), Parametrization::Radial) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(
                "profile does not match the problem's parametrization".into(),
            ))
        }
    }
}

/// Everything computed from one profile: speed, elliptic defect and
/// diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// `∂ₜ` of the profile values.
    pub speed: Vec<f64>,
    /// `F(κ) − f` at the nodes.
    pub defect: Vec<f64>,
    /// Largest coefficient of the second derivative in the linearized speed.
    pub max_coefficient: f64,
    /// Largest rate `|Φ'(f)·∂f|` of the data under a uniform normal shift.
    pub reaction_rate: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub pinching_b: f64,
    pub pinching_ratio: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Range of `|x|` (support) or `r` (radial) over the nodes.
    pub extent: (f64, f64),
}

impl Evaluation {
    pub fn residual(&self) -> f64 {
        sup(&self.defect)
    }

    pub fn speed_sup(&self) -> f64 {
        sup(&self.speed)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// A problem bound to a grid: transform plans and cached data.
pub struct Flow<'a> {
    problem: &'a ProblemSpec,
    grid: Grid,
    diff: Differentiator,
    bound: BoundData<'a>,
    dual: CurvatureFunction,
}

impl<'a> Flow<'a> {
    pub fn new(problem: &'a ProblemSpec, grid: Grid) -> Result<Self> {
        let expected = match problem.parametrization {
            Parametrization::Support => Grid::for_dimension(problem.n(), grid.m)?.domain,
            Parametrization::Radial => Domain::FullCircle,
        };
        if grid.domain != expected {
            return Err(Error::Parameter(format!(
                "grid domain {:?} does not fit this problem (expected {expected:?})",
                grid.domain
            )));
        }
        let bound = match problem.parametrization {
            Parametrization::Support => problem.data.bind_grid(grid)?,
            Parametrization::Radial => problem.data.bind(&[])?,
        };
        Ok(Flow {
            problem,
            grid,
            diff: Differentiator::new(grid),
            bound,
            dual: problem.function.dual(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn problem(&self) -> &ProblemSpec {
        self.problem
    }

    pub fn differentiator(&self) -> &Differentiator {
        &self.diff
    }

    pub fn evaluate(&self, values: &[f64]) -> Result<Evaluation> {
        match self.problem.parametrization {
            Parametrization::Support => self.evaluate_support(values),
            Parametrization::Radial => self.evaluate_radial(values),
        }
    }

    fn evaluate_support(&self, values: &[f64]) -> Result<Evaluation> {
        let n = self.problem.n();
        let mode = self.problem.mode;
        if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonPositiveData {
                value: *v,
                location: format!("support function at node {j}"),
            });
        }
        let geo = geometry_of(self.grid, values, &self.diff);
        if let Some((node, radius)) = geo.convexity_defect(n) {
            return Err(Error::ConvexityLoss { node, radius });
        }
        let m = values.len();
        let mut ev = Evaluation::empty(m);
        let mut radii = [0.0; MAX_DIM];
        let mut grad = [0.0; MAX_DIM];
        for j in 0..m {
            radii_vector(n, geo.r1[j], geo.r2[j], &mut radii);
            let fstar = self.dual.grad_into(&radii[..n], &mut grad[..n]);
            let big_f = 1.0 / fstar;
            let pt = Point {
                s: values[j],
                abs_x: geo.abs_x[j],
                x_angle: geo.x_angle[j],
                nu: geo.theta[j],
            };
            let f = self.problem.target_scale * self.bound.eval_node(j, &pt)?;
            let h = RATE_STEP * values[j];
            let shifted = Point {
                s: pt.s + h,
                abs_x: pt.abs_x + h * pt.s / pt.abs_x,
                ..pt
            };
            let df = self.problem.target_scale * self.bound.eval_node(j, &shifted)? - f;
            ev.reaction_rate = ev.reaction_rate.max((mode.dphi(f) * df / h).abs());
            ev.speed[j] = mode.phi(f) - mode.phi(big_f);
            ev.defect[j] = big_f - f;
            let gsum: f64 = grad[..n].iter().sum();
            ev.max_coefficient = ev.max_coefficient.max(mode.dphi(big_f) * big_f * big_f * gsum);
            let b: f64 = radii[..n].iter().sum();
            let (rmin, rmax) = radii[..n]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), r| (a.min(*r), c.max(*r)));
            ev.note_radii(rmin, rmax, b);
            ev.f_min = ev.f_min.min(f);
            ev.f_max = ev.f_max.max(f);
            ev.extent = (ev.extent.0.min(geo.abs_x[j]), ev.extent.1.max(geo.abs_x[j]));
        }
        ev.pinching_ratio = ev.max_radius / ev.min_radius;
        Ok(ev)
    }

    fn evaluate_radial(&self, values: &[f64]) -> Result<Evaluation> {
        let space = &self.problem.space;
        let mode = self.problem.mode;
        let sigma = space.sigma();
        let geo = radial_geometry_of(space, values, &self.diff)?;
        let m = values.len();
        let mut ev = Evaluation::empty(m);
        let mut grad = [0.0; 1];
        for j in 0..m {
            let kappa = geo.curvature[j];
            if !(kappa > 0.0) {
                return Err(Error::ConvexityLoss {
                    node: j,
                    radius: 1.0 / kappa,
                });
            }
            let big_f = self.problem.function.grad_into(&[kappa], &mut grad);
            let pt = Point {
                s: geo.support[j],
                abs_x: values[j],
                x_angle: geo.y[j],
                nu: geo.normal_angle[j],
            };
            let f = self.problem.target(&pt)?;
            let v = geo.v[j];
            let h = RATE_STEP * values[j];
            let (th_h, _) = space.kind.warping(values[j] + h);
            let shifted = Point {
                s: th_h / v,
                abs_x: values[j] + h,
                ..pt
            };
            let df = self.problem.target(&shifted)? - f;
            ev.reaction_rate = ev.reaction_rate.max((mode.dphi(f) * df * v / h).abs());
            ev.speed[j] = sigma * (mode.phi(f) - mode.phi(big_f)) * v;
            ev.defect[j] = big_f - f;
            let (th, _) = space.warping(values[j])?;
            let dr = geo.dr[j];
            let coef = mode.dphi(big_f) * grad[0] * v * th / (dr * dr + th * th).powf(1.5);
            ev.max_coefficient = ev.max_coefficient.max(coef);
            ev.note_radii(1.0 / kappa, 1.0 / kappa, 1.0 / kappa);
            ev.f_min = ev.f_min.min(f);
            ev.f_max = ev.f_max.max(f);
            ev.extent = (ev.extent.0.min(values[j]), ev.extent.1.max(values[j]));
        }
        ev.pinching_ratio = ev.max_radius / ev.min_radius;
        Ok(ev)
    }

    /// Parabolic step bound `0.2·h²/maxcoef`, clamped to `[1e−12, 0.1]`.
    pub fn adaptive_dt(&self, ev: &Evaluation) -> f64 {
        let h = self.grid.spacing();
        let dt = DT_SAFETY * h * h / ev.max_coefficient.max(1e-300);
        dt.clamp(DT_RANGE.0, DT_RANGE.1)
    }

    /// Step bound for `scheme`.
    pub fn dt_for(&self, scheme: Scheme, ev: &Evaluation) -> f64 {
        match scheme {
            Scheme::ExplicitRk2 => self.adaptive_dt(ev),
            Scheme::Imex => {
                let dt = IMEX_SAFETY / ev.max_coefficient.max(ev.reaction_rate).max(1e-300);
                dt.clamp(IMEX_DT_RANGE.0, IMEX_DT_RANGE.1)
            }
        }
    }

    pub fn advance(&self, scheme: Scheme, values: &[f64], ev: &Evaluation, dt: f64) -> Result<(Vec<f64>, Evaluation)> {
        match scheme {
            Scheme::ExplicitRk2 => self.rk2_step(values, ev, dt),
            Scheme::Imex => self.imex_step(values, ev, dt),
        }
    }

    /// `u' = u + dt·(1 + dt·a·k²)^{−1} V(u)` with `a` the largest diffusion
    /// coefficient, i.e. `(1 − dt·a∂²)u' = u + dt(V(u) − a∂²u)`.
    pub fn imex_step(&self, values: &[f64], ev: &Evaluation, dt: f64) -> Result<(Vec<f64>, Evaluation)> {
        let a = ev.max_coefficient;
        let inc = self.diff.apply_multiplier(&ev.speed, |k| dt / (1.0 + dt * a * k * k));
        let next: Vec<f64> = values.iter().zip(&inc).map(|(u, d)| u + d).collect();
        self.accept(next)
    }

    fn accept(&self, next: Vec<f64>) -> Result<(Vec<f64>, Evaluation)> {
        let ev_next = self.evaluate(&next)?;
        if !self.inside_barriers(&ev_next) {
            return Err(Error::Domain(format!(
                "profile range [{}, {}] left the barrier shell [{}, {}]",
                ev_next.extent.0, ev_next.extent.1, self.problem.barriers.r_lower, self.problem.barriers.r_upper
            )));
        }
        Ok((next, ev_next))
    }

    /// Whether the profile lies between the barrier slices.
    pub fn inside_barriers(&self, ev: &Evaluation) -> bool {
        let bp = &self.problem.barriers;
        let slack = 1e-12 * bp.r_upper.abs().max(1.0);
        ev.extent.0 >= bp.r_lower - slack && ev.extent.1 <= bp.r_upper + slack
    }

    /// One explicit midpoint step. Fails if an intermediate or the final
    /// profile loses convexity or positivity, or leaves the barrier shell.
    pub fn rk2_step(&self, values: &[f64], ev: &Evaluation, dt: f64) -> Result<(Vec<f64>, Evaluation)> {
        let half: Vec<f64> = values.iter().zip(&ev.speed).map(|(u, k)| u + 0.5 * dt * k).collect();
        let ev_half = self.evaluate(&half)?;
        let next: Vec<f64> = values.iter().zip(&ev_half.speed).map(|(u, k)| u + dt * k).collect();
        self.accept(next)
    }

    pub fn diagnostics(&self, ev: &Evaluation) -> FlowDiagnostics {
        FlowDiagnostics {
            min_radius: ev.min_radius,
            max_radius: ev.max_radius,
            pinching_b: ev.pinching_b,
            pinching_ratio: ev.pinching_ratio,
            f_min: ev.f_min,
            f_max: ev.f_max,
            residual: ev.residual(),
            barrier_ok: self.inside_barriers(ev),
        }
    }
}

impl Evaluation {
    fn empty(m: usize) -> Self {
        Evaluation {
            speed: vec![0.0; m],
            defect: vec![0.0; m],
            max_coefficient: 0.0,
            reaction_rate: 0.0,
            min_radius: f64::INFINITY,
            max_radius: f64::NEG_INFINITY,
            pinching_b: 0.0,
            pinching_ratio: 1.0,
            f_min: f64::INFINITY,
            f_max: f64::NEG_INFINITY,
            extent: (f64::INFINITY, f64::NEG_INFINITY),
        }
    }

    fn note_radii(&mut self, rmin: f64, rmax: f64, b: f64) {
        self.min_radius = self.min_radius.min(rmin);
        self.max_radius = self.max_radius.max(rmax);
        self.pinching_b = self.pinching_b.max(b);
    }
}

/// `F(κ) − f` at the nodes of a profile.
pub fn nodal_defect(problem: &ProblemSpec, shape: &Shape) -> Result<Vec<f64>> {
    shape.matches(problem)?;
    Ok(Flow::new(problem, shape.grid())?.evaluate(shape.values())?.defect)
}

/// Support-function speed `Φ(f) − Φ(1/F_*(r))`.
pub fn rhs_support(problem: &ProblemSpec, profile: &SupportProfile) -> Result<Vec<f64>> {
    if problem.parametrization != Parametrization::Support {
        return Err(Error::Parameter("problem is not in the support parametrization".into()));
    }
    Ok(Flow::new(problem, profile.grid())?.evaluate(&profile.values)?.speed)
}

/// Radial speed `σ(Φ(f) − Φ(κ))v`.
pub fn rhs_radial(problem: &ProblemSpec, profile: &RadialProfile) -> Result<Vec<f64>> {
    if problem.parametrization != Parametrization::Radial {
        return Err(Error::Parameter("problem is not in the radial parametrization".into()));
    }
    Ok(Flow::new(problem, profile.grid())?.evaluate(&profile.values)?.speed)
}

pub fn diagnostics(problem: &ProblemSpec, shape: &Shape) -> Result<FlowDiagnostics> {
    shape.matches(problem)?;
    let flow = Flow::new(problem, shape.grid())?;
    let ev = flow.evaluate(shape.values())?;
    Ok(flow.diagnostics(&ev))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub residual: f64,
    pub speed: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub pinching_b: f64,
    pub pinching_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub shape: Shape,
    pub t: f64,
    pub step_count: usize,
    pub dt_last: f64,
    pub history: Vec<HistoryEntry>,
}

impl FlowState {
    pub fn new(shape: Shape) -> Self {
        FlowState {
            shape,
            t: 0.0,
            step_count: 0,
            dt_last: 0.0,
            history: Vec::new(),
        }
    }
}

/// One accepted midpoint step of size `dt`; errors mean the trial state was
/// rejected (the caller halves `dt`).
pub fn step(problem: &ProblemSpec, state: &FlowState, dt: f64) -> Result<FlowState> {
    step_with(problem, state, dt, Scheme::ExplicitRk2)
}

pub fn step_with(problem: &ProblemSpec, state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    state.shape.matches(problem)?;
    let flow = Flow::new(problem, state.shape.grid())?;
    let ev = flow.evaluate(state.shape.values())?;
    let (next, _) = flow.advance(scheme, state.shape.values(), &ev, dt)?;
    Ok(FlowState {
        shape: state.shape.with_values(next),
        t: state.t + dt,
        step_count: state.step_count + 1,
        dt_last: dt,
        history: state.history.clone(),
    })
}

pub fn adaptive_dt(problem: &ProblemSpec, state: &FlowState) -> Result<f64> {
    let flow = Flow::new(problem, state.shape.grid())?;
    let ev = flow.evaluate(state.shape.values())?;
    Ok(flow.adaptive_dt(&ev))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub tol: f64,
    pub max_steps: usize,
    pub grid_size: usize,
    pub record_every: usize,
    /// Upper bound on `max κ / min κ` before the run is aborted.
    pub pinching_cap: f64,
    #[serde(default)]
    pub scheme: Scheme,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            tol: 1e-8,
            max_steps: 100_000,
            grid_size: 128,
            record_every: 100,
            pinching_cap: 1e6,
            scheme: Scheme::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxSteps,
    Stalled,
    MonitorViolation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monitors {
    /// Profile stayed between the barrier slices at every accepted step.
    pub barrier_sandwich: bool,
    /// Profile moved monotonically away from the starting side. Enforced only
    /// for runs started on a barrier slice.
    pub monotone_motion: bool,
    /// Smallest signed speed seen, in the direction away from the start.
    pub min_directed_speed: f64,
    /// Pinching ratio stayed below the cap.
    pub pinching_bounded: bool,
    pub max_pinching_ratio: f64,
    /// Residual was nonincreasing over the last ten accepted steps.
    pub residual_monotone_tail: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub converged: bool,
    pub status: RunStatus,
    pub message: String,
    pub steps: usize,
    pub t: f64,
    pub residual: f64,
    pub speed: f64,
    pub profile: Shape,
    pub diagnostics: FlowDiagnostics,
    pub monitors: Monitors,
    pub history: Vec<HistoryEntry>,
}

const TAIL: usize = 10;

/// Integrates from `initial` (or the starting barrier slice) until
/// `sup|F − f| < tol` and `sup|∂ₜ| < tol`, or `max_steps`.
pub fn run(problem: &ProblemSpec, initial: Option<Shape>, opts: &RunOptions) -> Result<FlowResult> {
    let grid = match &initial {
        Some(s) => s.grid(),
        None => match problem.parametrization {
            Parametrization::Support => problem.default_grid(opts.grid_size)?,
            Parametrization::Radial => Grid::new(Domain::FullCircle, opts.grid_size)?,
        },
    };
    let from_barrier = initial.is_none();
    let shape = match initial {
        Some(s) => s,
        None => problem.start_shape(grid)?,
    };
    shape.matches(problem)?;
    let flow = Flow::new(problem, grid)?;
    let mut values = shape.values().to_vec();
    let mut ev = flow.evaluate(&values)?;
    let direction = match problem.start_side {
        Side::Lower => 1.0,
        Side::Upper => -1.0,
    };
    let record_every = opts.record_every.max(1);

    let mut monitors = Monitors {
        barrier_sandwich: flow.inside_barriers(&ev),
        monotone_motion: true,
        min_directed_speed: f64::INFINITY,
        pinching_bounded: ev.pinching_ratio <= opts.pinching_cap,
        max_pinching_ratio: ev.pinching_ratio,
        residual_monotone_tail: true,
    };
    let entry = |step: usize, t: f64, dt: f64, ev: &Evaluation| HistoryEntry {
        step,
        t,
        dt,
        residual: ev.residual(),
        speed: ev.speed_sup(),
        min_radius: ev.min_radius,
        max_radius: ev.max_radius,
        pinching_b: ev.pinching_b,
        pinching_ratio: ev.pinching_ratio,
    };
    let mut history = vec![entry(0, 0.0, 0.0, &ev)];
    let mut tail: Vec<f64> = vec![ev.residual()];
    let mut t = 0.0;
    let mut steps = 0;
    let mut dt = 0.0;
    let mut status = RunStatus::MaxSteps;
    let mut message = String::new();

    loop {
        if ev.residual() < opts.tol && ev.speed_sup() < opts.tol {
            status = RunStatus::Converged;
            message = format!("converged after {steps} steps");
            break;
        }
        if steps >= opts.max_steps {
            message = format!("step budget of {} exhausted", opts.max_steps);
            break;
        }
        dt = flow.dt_for(opts.scheme, &ev);
        let accepted = loop {
            match flow.advance(opts.scheme, &values, &ev, dt) {
                Ok(ok) => break Some(ok),
                Err(e) => {
                    dt *= 0.5;
                    if dt < MIN_DT {
                        message = Error::Stall { dt, step: steps }.to_string() + &format!(" ({e})");
                        break None;
                    }
                }
            }
        };
        let Some((next, ev_next)) = accepted else {
            status = RunStatus::Stalled;
            break;
        };
        values = next;
        ev = ev_next;
        t += dt;
        steps += 1;

        let directed = ev.speed.iter().map(|v| direction * v).fold(f64::INFINITY, f64::min);
        monitors.min_directed_speed = monitors.min_directed_speed.min(directed);
        monitors.max_pinching_ratio = monitors.max_pinching_ratio.max(ev.pinching_ratio);
        tail.push(ev.residual());
        if tail.len() > TAIL {
            tail.remove(0);
        }
        if steps % record_every == 0 {
            history.push(entry(steps, t, dt, &ev));
        }
        if !flow.inside_barriers(&ev) {
            monitors.barrier_sandwich = false;
        }
        if directed < -opts.tol {
            monitors.monotone_motion = false;
        }
        if ev.pinching_ratio > opts.pinching_cap {
            monitors.pinching_bounded = false;
        }
        let monotone_ok = monitors.monotone_motion || !from_barrier;
        if !(monitors.barrier_sandwich && monotone_ok && monitors.pinching_bounded) {
            status = RunStatus::MonitorViolation;
            message = format!(
                "monitor violated at step {steps}: sandwich {}, monotone {} (speed {directed:e}), pinching {}",
                monitors.barrier_sandwich, monitors.monotone_motion, monitors.pinching_bounded
            );
            break;
        }
    }
    if history.last().map(|h| h.step) != Some(steps) {
        history.push(entry(steps, t, dt, &ev));
    }
    monitors.residual_monotone_tail = tail.windows(2).all(|w| w[1] <= w[0]);
    let profile = shape.with_values(values);
    Ok(FlowResult {
        converged: status == RunStatus::Converged,
        status,
        message,
        steps,
        t,
        residual: ev.residual(),
        speed: ev.speed_sup(),
        diagnostics: flow.diagnostics(&ev),
        profile,
        monitors,
        history,
    })
}
