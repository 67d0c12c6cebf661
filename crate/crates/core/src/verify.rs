//! Independent checks of candidate solutions: elliptic residuals,
//! manufactured solutions, a Newton oracle for curves and the Firey identity.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::anisotropy::conditions::{firey_g, firey_product};
use crate::anisotropy::expr::{Expression, Vars};
use crate::anisotropy::{DataForm, GridFunction, Point, PrescribedData, SphereFunction};
use crate::curvfun::{elementary_symmetric, CurvatureFunction, MAX_DIM};
use crate::error::{Error, Result};
use crate::flow::{nodal_defect, Parametrization, ProblemSpec, Shape};
use crate::profile::{axisymmetric_radii, geometry_of, radii_vector, Differentiator, Domain, Grid, SupportProfile};

/// Nodewise `F(κ) − f` and its sup norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub sup: f64,
    pub values: Vec<f64>,
}

pub fn residual(problem: &ProblemSpec, shape: &Shape) -> Result<ResidualReport> {
    let values = nodal_defect(problem, shape)?;
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ResidualReport { sup, values })
}

/// A support function together with power-law data it solves exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedPair {
    pub s_star: SupportProfile,
    pub data: PrescribedData,
    pub function: CurvatureFunction,
    pub q: f64,
}

/// `φ := F(κ)·s^{q−1}` sampled at the nodes of `base`, so that
/// `F = s^{1−q}φ` holds on the grid.
pub fn make_manufactured(function: &CurvatureFunction, q: f64, base: &SupportProfile) -> Result<ManufacturedPair> {
    if function.n != base.n {
        return Err(Error::Parameter(format!(
            "curvature function has n = {} but the profile has n = {}",
            function.n, base.n
        )));
    }
    let grid = base.grid();
    let d = Differentiator::new(grid);
    let (k1, k2) = base.curvatures(&d)?;
    let n = base.n;
    let mut kappa = [0.0; MAX_DIM];
    let phi = (0..grid.m)
        .map(|j| {
            radii_vector(n, k1[j], k2[j], &mut kappa);
            Ok(function.eval(&kappa[..n])? * base.values[j].powf(q - 1.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let data = PrescribedData::new(
        n,
        DataForm::PowerLaw {
            q,
            phi: SphereFunction::Grid(GridFunction::new(grid, phi)?),
            scale: 1.0,
        },
    )?;
    Ok(ManufacturedPair {
        s_star: base.clone(),
        data,
        function: *function,
        q,
    })
}

/// [`make_manufactured`] with the base given as an expression in `theta`.
pub fn make_manufactured_expr(
    function: &CurvatureFunction,
    q: f64,
    base: &str,
    grid: Grid,
) -> Result<ManufacturedPair> {
    let e = Expression::parse(base)?;
    let values = grid
        .nodes()
        .into_iter()
        .map(|t| e.eval(&Vars::theta(t)))
        .collect::<Result<Vec<_>>>()?;
    let profile = SupportProfile::new(grid.domain, function.n, values)?;
    make_manufactured(function, q, &profile)
}

/// Removes the `cos θ`, `sin θ` components (translations of a curve).
pub fn gauge_fix(values: &[f64], grid: Grid) -> Vec<f64> {
    if grid.domain != Domain::FullCircle {
        return values.to_vec();
    }
    Differentiator::new(grid).apply_multiplier(values, |k| if k.abs() == 1.0 { 0.0 } else { 1.0 })
}

/// Sup-norm distance after removing first harmonics from both profiles.
pub fn gauge_fixed_gap(a: &[f64], b: &[f64], grid: Grid) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    gauge_fix(&diff, grid).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Pin the first harmonics of the solution to zero.
    pub gauge: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            tol: 1e-12,
            max_iter: 100,
            gauge: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub profile: SupportProfile,
    pub iterations: usize,
    /// `sup |s'' + s − 1/f|` at the returned profile.
    pub residual: f64,
}

struct CurveSystem<'a> {
    problem: &'a ProblemSpec,
    grid: Grid,
    diff: Differentiator,
    gauge: Option<(Vec<f64>, Vec<f64>)>,
}

impl CurveSystem<'_> {
    /// `s'' + s − 1/f(s, x, ν)`, plus the first harmonics of `s` when gauged.
    fn eval(&self, s: &[f64]) -> Result<Vec<f64>> {
        if let Some((j, v)) = s.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::NonPositiveData {
                value: *v,
                location: format!("oracle iterate at node {j}"),
            });
        }
        let geo = geometry_of(self.grid, s, &self.diff);
        let mut out = Vec::with_capacity(s.len());
        for j in 0..s.len() {
            let pt = Point {
                s: s[j],
                abs_x: geo.abs_x[j],
                x_angle: geo.x_angle[j],
                nu: geo.theta[j],
            };
            let f = self.problem.target(&pt)?;
            out.push(geo.r1[j] - 1.0 / f);
        }
        if let Some((c, sn)) = &self.gauge {
            let a = dot(c, s);
            let b = dot(sn, s);
            for j in 0..out.len() {
                out[j] += a * c[j] + b * sn[j];
            }
        }
        Ok(out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `s'' + s = 1/f(s, x(θ), ν(θ))` for a curve by damped Newton
/// iteration with a finite-difference Jacobian.
pub fn bvp_oracle_n1(problem: &ProblemSpec, init: &SupportProfile, opts: &OracleOptions) -> Result<OracleResult> {
    if problem.n() != 1 || problem.parametrization != Parametrization::Support {
        return Err(Error::Unsupported(
            "the curve oracle needs a Euclidean problem with n = 1".into(),
        ));
    }
    if init.n != 1 {
        return Err(Error::Parameter("initial guess must be a curve profile".into()));
    }
    let grid = init.grid();
    let m = grid.m;
    let gauge = opts.gauge.then(|| {
        let w = (2.0 / m as f64).sqrt();
        let nodes = grid.nodes();
        (
            nodes.iter().map(|t| w * t.cos()).collect::<Vec<_>>(),
            nodes.iter().map(|t| w * t.sin()).collect::<Vec<_>>(),
        )
    });
    let sys = CurveSystem {
        problem,
        grid,
        diff: Differentiator::new(grid),
        gauge,
    };
    let mut s = init.values.clone();
    let mut g = sys.eval(&s)?;
    for iter in 1..=opts.max_iter {
        let mut jac = DMatrix::zeros(m, m);
        for j in 0..m {
            let h = 1e-7 * s[j].abs().max(1.0);
            let mut sp = s.clone();
            sp[j] += h;
            let gp = sys.eval(&sp)?;
            for i in 0..m {
                jac[(i, j)] = (gp[i] - g[i]) / h;
            }
        }
        let rhs = DVector::from_iterator(m, g.iter().map(|v| -v));
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Oracle(format!("singular Jacobian at iteration {iter}")))?;
        let norm0 = sup(&g);
        let mut lambda = 1.0;
        let (next, g_next) = loop {
            let trial: Vec<f64> = s.iter().zip(delta.iter()).map(|(u, d)| u + lambda * d).collect();
            if let Ok(gt) = sys.eval(&trial) {
                if sup(&gt) < norm0 || sup(&gt) <= opts.tol {
                    break (trial, gt);
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(Error::Oracle(format!(
                    "line search failed at iteration {iter} (residual {norm0:e})"
                )));
            }
        };
        let step = lambda * sup(delta.as_slice());
        s = next;
        g = g_next;
        if step < opts.tol || sup(&g) < 1e-14 {
            let profile = SupportProfile::new(grid.domain, 1, s)?;
            return Ok(OracleResult {
                profile,
                iterations: iter,
                residual: sup(&g),
            });
        }
    }
    Err(Error::Oracle(format!(
        "no convergence in {} iterations (residual {:e})",
        opts.max_iter,
        sup(&g)
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireyCrosscheck {
    pub gap: f64,
    pub g_quadrature: Vec<f64>,
    pub g_product: Vec<f64>,
}

/// `G` of `ψ = σ_k(r)` by quadrature against `C(n−1,k−1)·r₁·r₂^{k−1}`.
pub fn firey_crosscheck(profile: &SupportProfile, k: usize) -> Result<FireyCrosscheck> {
    let n = profile.n;
    let grid = profile.grid();
    let d = Differentiator::new(grid);
    let geo = profile.geometry(&d);
    if let Some((node, radius)) = geo.convexity_defect(n) {
        return Err(Error::ConvexityLoss { node, radius });
    }
    let interp = d.interpolant(&profile.values);
    let psi = |theta: f64| {
        let (s, ds, dds) = interp.eval(theta);
        let (r1, r2) = axisymmetric_radii(grid.domain, theta, s, ds, dds);
        let mut radii = [0.0; MAX_DIM];
        let mut sig = [0.0; MAX_DIM + 1];
        radii_vector(n, r1, r2, &mut radii);
        elementary_symmetric(&radii[..n], &mut sig);
        sig[k]
    };
    let g = firey_g(psi, n, k, grid)?;
    let product: Vec<f64> = (0..grid.m).map(|j| firey_product(n, k, geo.r1[j], geo.r2[j])).collect();
    let gap = g.g.iter().zip(&product).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(FireyCrosscheck {
        gap,
        g_quadrature: g.g,
        g_product: product,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl InvariantCheck {
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        InvariantCheck {
            name: name.into(),
            passed: value < threshold,
            value,
            threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub residual_tol: f64,
    pub oracle_tol: f64,
    pub firey_tol: f64,
    /// Index `k` for the Firey cross-check (axisymmetric `n ≥ 3` only).
    pub firey_k: Option<usize>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            residual_tol: 1e-6,
            oracle_tol: 1e-5,
            firey_tol: 1e-7,
            firey_k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub residual_sup: f64,
    pub oracle_gap: Option<f64>,
    pub firey_gap: Option<f64>,
    pub invariants: Vec<InvariantCheck>,
    pub passed: bool,
}

/// Residual of a candidate, its gauge-fixed distance to the curve oracle
/// (Euclidean `n = 1`) and the Firey identity (when `firey_k` is set).
pub fn verify_profile(problem: &ProblemSpec, shape: &Shape, opts: &VerifyOptions) -> Result<VerificationReport> {
    let res = residual(problem, shape)?;
    let mut invariants = vec![InvariantCheck::below("elliptic residual", res.sup, opts.residual_tol)];
    let mut oracle_gap = None;
    let mut firey_gap = None;
    if let Shape::Support(p) = shape {
        if p.n == 1 {
            let mean = p.values.iter().sum::<f64>() / p.values.len() as f64;
            let init = SupportProfile::constant(p.grid(), 1, mean)?;
            let oracle = bvp_oracle_n1(problem, &init, &OracleOptions::default())?;
            let gap = gauge_fixed_gap(&oracle.profile.values, &p.values, p.grid());
            invariants.push(InvariantCheck::below("oracle gap", gap, opts.oracle_tol));
            oracle_gap = Some(gap);
        }
        if let Some(k) = opts.firey_k {
            let gap = firey_crosscheck(p, k)?.gap;
            invariants.push(InvariantCheck::below("firey gap", gap, opts.firey_tol));
            firey_gap = Some(gap);
        }
    }
    let passed = invariants.iter().all(|c| c.passed);
    Ok(VerificationReport {
        residual_sup: res.sup,
        oracle_gap,
        firey_gap,
        invariants,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvfun::Family;
    use crate::flow::{Mode, Side};
    use crate::spaceform::{SpaceformConfig, SpaceformKind};

    fn mean(n: usize) -> CurvatureFunction {
        CurvatureFunction::new(Family::Mean, n).unwrap()
    }

    fn problem(data: PrescribedData, a: f64, b: f64) -> ProblemSpec {
        ProblemSpec::new(
            SpaceformConfig::new(SpaceformKind::Euclid, a, b).unwrap(),
            mean(data.n),
            data,
            Mode::Contracting,
            Side::Lower,
        )
        .unwrap()
    }

    fn circ(m: usize) -> Grid {
        Grid::new(Domain::FullCircle, m).unwrap()
    }

    #[test]
    fn residual_examples() {
        let p = problem(
            PrescribedData::power_law(1, 3.0, SphereFunction::constant(1.0)).unwrap(),
            0.5,
            2.5,
        );
        let one = Shape::Support(SupportProfile::constant(circ(64), 1, 1.0).unwrap());
        assert!(residual(&p, &one).unwrap().sup < 1e-14);
        let two = Shape::Support(SupportProfile::constant(circ(64), 1, 2.0).unwrap());
        assert!((residual(&p, &two).unwrap().sup - 0.25).abs() < 1e-14);
    }

    #[test]
    fn manufactured_phi_closed_form() {
        let pair = make_manufactured_expr(&mean(1), 3.0, "4 + cos(2*theta)", circ(256)).unwrap();
        let phi = pair.data.phi().unwrap();
        for t in [0.0f64, 0.4, 1.3, 2.9] {
            let c = (2.0 * t).cos();
            let expect = (4.0 + c).powi(2) / (4.0 - 3.0 * c);
            assert!((phi.eval(t).unwrap() - expect).abs() < 1e-10);
        }
        let p = problem(pair.data.clone(), 1.0, 30.0);
        let r = residual(&p, &Shape::Support(pair.s_star.clone())).unwrap();
        assert!(r.sup < 1e-10, "{}", r.sup);

        let round = make_manufactured_expr(&mean(1), 3.0, "1.5", circ(32)).unwrap();
        assert!((round.data.phi().unwrap().eval(0.7).unwrap() - 1.5).abs() < 1e-12);
        assert!(make_manufactured_expr(&mean(1), 3.0, "1 + 0.3*cos(2*theta)", circ(64)).is_ok());
        assert!(matches!(
            make_manufactured_expr(&mean(1), 3.0, "1 + 0.5*cos(2*theta)", circ(64)),
            Err(Error::ConvexityLoss { .. })
        ));
    }

    #[test]
    fn oracle_recovers_round_and_manufactured_solutions() {
        let p = problem(
            PrescribedData::power_law(1, 3.0, SphereFunction::constant(1.0)).unwrap(),
            0.5,
            2.5,
        );
        let init = SupportProfile::from_fn(circ(64), 1, |t| 1.3 + 0.05 * (2.0 * t).cos()).unwrap();
        let o = bvp_oracle_n1(&p, &init, &OracleOptions::default()).unwrap();
        assert!(o.profile.values.iter().all(|v| (v - 1.0).abs() < 1e-11));

        let pair = make_manufactured_expr(&mean(1), 3.0, "4 + cos(2*theta)", circ(256)).unwrap();
        let p = problem(pair.data.clone(), 1.0, 30.0);
        let init = SupportProfile::constant(circ(256), 1, 4.0).unwrap();
        for gauge in [false, true] {
            let o = bvp_oracle_n1(
                &p,
                &init,
                &OracleOptions {
                    gauge,
                    ..Default::default()
                },
            )
            .unwrap();
            let gap = sup(&o
                .profile
                .values
                .iter()
                .zip(&pair.s_star.values)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>());
            assert!(gap < 1e-9, "gauge {gauge}: {gap}");
        }
    }

    #[test]
    fn oracle_rejects_higher_dimensions() {
        let p = problem(
            PrescribedData::power_law(2, 3.0, SphereFunction::constant(2.0)).unwrap(),
            0.5,
            2.5,
        );
        let init = SupportProfile::constant(Grid::new(Domain::Latitude, 32).unwrap(), 2, 1.0).unwrap();
        assert!(matches!(
            bvp_oracle_n1(&p, &init, &OracleOptions::default()),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn gauge_fix_removes_translations() {
        let g = circ(64);
        let a: Vec<f64> = g.nodes().iter().map(|t| 2.0 + 0.3 * t.cos() - 0.2 * t.sin()).collect();
        let b = vec![2.0; 64];
        assert!(gauge_fixed_gap(&a, &b, g) < 1e-14);
    }

    #[test]
    fn firey_crosscheck_examples() {
        let lat = Grid::new(Domain::Latitude, 256).unwrap();
        let one = SupportProfile::constant(lat, 3, 1.0).unwrap();
        let c = firey_crosscheck(&one, 2).unwrap();
        assert!(c.gap < 1e-10);
        assert!(c.g_product.iter().all(|v| (v - 2.0).abs() < 1e-14));
        let wobbly = SupportProfile::from_fn(lat, 3, |t| 1.0 + 0.05 * (2.0 * t).cos()).unwrap();
        assert!(firey_crosscheck(&wobbly, 2).unwrap().gap < 1e-8);
        // min r₁ = 1e−3 at the equator.
        let amp = (1.0 - 1e-3) / 3.0;
        let thin = SupportProfile::from_fn(lat, 3, |t| 1.0 + amp * (2.0 * t).cos()).unwrap();
        let r1 = thin.radii(&Differentiator::new(lat)).0;
        assert!(r1.iter().cloned().fold(f64::INFINITY, f64::min) < 2e-3);
        assert!(firey_crosscheck(&thin, 2).unwrap().gap < 1e-6);
    }

    #[test]
    fn verify_report_for_round_solution() {
        let p = problem(
            PrescribedData::power_law(1, 3.0, SphereFunction::constant(1.0)).unwrap(),
            0.5,
            2.5,
        );
        let one = Shape::Support(SupportProfile::constant(circ(64), 1, 1.0).unwrap());
        let rep = verify_profile(&p, &one, &VerifyOptions::default()).unwrap();
        assert!(rep.passed && rep.oracle_gap.unwrap() < 1e-10);
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"invariants\""));
    }
}
