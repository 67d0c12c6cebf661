use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use curveflow::anisotropy::conditions::check_firey;
use curveflow::anisotropy::{DataForm, PrescribedData, SphereFunction};
use curveflow::barrier::admissible_constant;
use curveflow::cli::{solve_config, RunConfig};
use curveflow::curvfun::{
    check_dual_boundary, check_inverse_concave, check_lambda_eps, default_boundary_sequence, CurvatureFunction, Family,
};
use curveflow::error::Result;
use curveflow::flow::{adaptive_dt, run, step, FlowState, Mode, ProblemSpec, RunOptions, Shape, Side};
use curveflow::profile::{Differentiator, Domain, Grid, SupportProfile};
use curveflow::spaceform::{SpaceformConfig, SpaceformKind};
use curveflow::verify::{firey_crosscheck, residual, verify_profile, VerifyOptions};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn sup_dist(values: &[f64], target: f64) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max((v - target).abs()))
}

fn round_steady_state() -> Result<Outcome> {
    let mut cfg = RunConfig::load(&example("lp_n1_q3.json"))?;
    let tmp = tempfile::tempdir()?;
    cfg.outputs.dir = tmp.path().to_path_buf();
    let started = Instant::now();
    let doc = solve_config(cfg)?;
    let wall = started.elapsed().as_secs_f64();
    let r = &doc.result;
    let gap = sup_dist(r.profile.values(), 1.0);
    outcome(
        r.converged && r.steps <= 100_000 && wall < 10.0 && gap < 1e-6,
        format!("steps {}, wall {wall:.2} s, |s - 1| = {gap:.2e}", r.steps),
    )
}

fn manufactured_solution() -> Result<Outcome> {
    let cfg = RunConfig::load(&example("manufactured_n1.json"))?;
    let (problem, pair) = cfg.build()?;
    let pair = pair.expect("manufactured config");
    let result = run(&problem, cfg.initial_shape(&problem)?, &cfg.numerics.run_options())?;
    let report = verify_profile(&problem, &result.profile, &VerifyOptions::default())?;
    let gap = report.oracle_gap.unwrap_or(f64::INFINITY);
    let exact = residual(&problem, &Shape::Support(pair.s_star))?.sup;
    outcome(
        result.converged && report.residual_sup < 1e-6 && gap < 1e-5 && exact < 1e-10,
        format!(
            "flow residual {:.2e}, oracle gap {gap:.2e}, exact residual {exact:.2e}",
            report.residual_sup
        ),
    )
}

fn axisymmetric_round_preservation() -> Result<Outcome> {
    let n = 3;
    let problem = ProblemSpec::new(
        SpaceformConfig::new(SpaceformKind::Euclid, 0.5, 2.0)?,
        CurvatureFunction::new(Family::Quotient { l: 3, k: 1 }, n)?,
        PrescribedData::power_law(n, 3.0, SphereFunction::constant(n as f64))?,
        Mode::Contracting,
        Side::Lower,
    )?;
    let grid = problem.default_grid(64)?;
    let mut state = FlowState::new(problem.round_shape(grid, 1.0)?);
    for _ in 0..1000 {
        let dt = adaptive_dt(&problem, &state)?;
        state = step(&problem, &state, dt)?;
    }
    let gap = sup_dist(state.shape.values(), 1.0);
    outcome(
        grid.domain == Domain::Latitude && state.step_count == 1000 && gap < 1e-8,
        format!("after {} steps |s - 1| = {gap:.2e}", state.step_count),
    )
}

fn firey_identity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let grid = Grid::new(Domain::Latitude, 256)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(3..=5usize);
        let k = rng.random_range(2..n);
        let c = rng.random_range(3.0..5.0);
        let a = rng.random_range(-0.3..0.3);
        let b = rng.random_range(-0.5..0.5);
        let d = rng.random_range(-0.05..0.05);
        let p = SupportProfile::from_fn(grid, n, |t: f64| {
            c + a * (2.0 * t).cos() + b * t.sin() + d * (4.0 * t).cos()
        })?;
        worst = worst.max(firey_crosscheck(&p, k)?.gap);
    }
    let mut constant: f64 = 0.0;
    for n in 3..=5 {
        for k in 2..n {
            let psi = 1.7;
            let rep = check_firey(|_| psi, n, k, grid)?;
            let expect = psi * k as f64 / n as f64;
            constant = constant.max(sup_dist(&rep.profile.g, expect));
        }
    }
    outcome(
        worst < 1e-7 && constant < 1e-10,
        format!("random gap {worst:.2e}, constant-psi gap {constant:.2e}"),
    )
}

fn lambda_eps() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut all = true;
    let mut worst_ratio: f64 = 0.0;
    for (l, k) in [(2, 1), (3, 1), (3, 2)] {
        for n in l..=5 {
            let f = CurvatureFunction::new(Family::Quotient { l, k }, n)?;
            let rep = check_lambda_eps(&f, 0.1, 10_000, &mut rng)?;
            all &= rep.holds;
            worst_ratio = worst_ratio.max(rep.fitted_constant / rep.constructive_constant);
        }
    }
    outcome(all, format!("worst fitted/constructive ratio {worst_ratio:.3}"))
}

fn structure_checks() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let ts = default_boundary_sequence();
    let mut worst_margin = f64::INFINITY;
    let mut power_means_vanish = true;
    let mut quotients_nonvanishing = true;
    for n in 1..=5 {
        for k in 1..=n {
            let f = CurvatureFunction::new(Family::PowerMean { k }, n)?;
            worst_margin = worst_margin.min(check_inverse_concave(&f, 10_000, &mut rng).worst_margin);
            power_means_vanish &= check_dual_boundary(&f, &ts).vanishes;
        }
        for k in 1..n {
            let f = CurvatureFunction::new(Family::Quotient { l: n, k: n - k }, n)?;
            quotients_nonvanishing &= !check_dual_boundary(&f, &ts).vanishes;
        }
    }
    outcome(
        worst_margin >= -1e-10 && power_means_vanish && quotients_nonvanishing,
        format!(
            "inverse-concavity margin {worst_margin:.2e}, power-mean duals vanish: {power_means_vanish}, \
             quotient duals non-vanishing: {quotients_nonvanishing}"
        ),
    )
}

fn barrier_constants() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        let nf = n as f64;
        let sphere = SpaceformConfig::new(SpaceformKind::Sphere, 0.1, FRAC_PI_4)?;
        let c = admissible_constant(&sphere, n, 1.0, 3.0, FRAC_PI_4)?;
        worst = worst.max((c - nf / 2.0).abs());
        let ds = SpaceformConfig::new(SpaceformKind::DeSitter, 1.0, 2.0)?;
        let c = admissible_constant(&ds, n, 1.0, -1.0, 1.0)?;
        worst = worst.max((c - nf * 1f64.sinh() / 1f64.cosh().powi(3)).abs());
    }
    let sphere = SpaceformConfig::new(SpaceformKind::Sphere, 0.1, FRAC_PI_4)?;
    let rejected = admissible_constant(&sphere, 1, 1.0, 2.0, FRAC_PI_4).is_err();
    let data = PrescribedData::power_law(1, 2.0, SphereFunction::constant(1.0))?;
    let flow_rejected = ProblemSpec::new(
        sphere,
        CurvatureFunction::new(Family::Mean, 1)?,
        data,
        Mode::Expanding,
        Side::Lower,
    )
    .is_err();
    outcome(
        worst < 1e-12 && rejected && flow_rejected,
        format!(
            "max formula error {worst:.2e}, q = 2 rejected: {}",
            rejected && flow_rejected
        ),
    )
}

fn spaceform_flow() -> Result<Outcome> {
    let cfg = RunConfig::load(&example("sphere_n1_q3.json"))?;
    let (problem, _) = cfg.build()?;
    let (a, b) = problem.space.annulus;
    let c_max = admissible_constant(&problem.space, 1, 1.0, 3.0, b)?;
    let DataForm::PowerLaw { scale, .. } = problem.data.form else {
        return outcome(false, "sphere example is not a power law".into());
    };
    let result = run(&problem, None, &cfg.numerics.run_options())?;
    let res = residual(&problem, &result.profile)?.sup;
    let (lo, hi) = (problem.barriers.r_lower, problem.barriers.r_upper);
    let inside = result.monitors.barrier_sandwich && a < lo && hi < b;
    outcome(
        (scale - 0.5 * c_max).abs() < 1e-15
            && problem.mode == Mode::Expanding
            && result.converged
            && res < 1e-6
            && inside
            && result.monitors.monotone_motion,
        format!(
            "steps {}, residual {res:.2e}, barrier clearance {:.1e} / {:.1e}",
            result.steps,
            lo - a,
            b - hi
        ),
    )
}

fn gradient_rel_error(f: &CurvatureFunction, kappa: &[f64]) -> Result<f64> {
    let g = f.grad(kappa)?;
    let mut worst: f64 = 0.0;
    for i in 0..kappa.len() {
        let h = 1e-5 * kappa[i];
        let mut p = kappa.to_vec();
        let mut m = kappa.to_vec();
        p[i] += h;
        m[i] -= h;
        let fd = (f.eval(&p)? - f.eval(&m)?) / (2.0 * h);
        worst = worst.max((fd - g[i]).abs() / g[i].abs());
    }
    Ok(worst)
}

fn monitor_suite() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    let mut max_pinching: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for case in 0..10 {
        let n = rng.random_range(1..=3usize);
        let family = match rng.random_range(0..3) {
            0 => Family::Mean,
            1 => Family::PowerMean {
                k: rng.random_range(1..=n),
            },
            _ if n >= 2 => Family::Quotient {
                l: n,
                k: rng.random_range(1..n),
            },
            _ => Family::Gauss,
        };
        let q = rng.random_range(2.5..4.0);
        let amp = rng.random_range(0.0..0.2);
        let mode = if rng.random_bool(0.5) {
            Mode::Contracting
        } else {
            Mode::Expanding
        };
        let side = if rng.random_bool(0.5) { Side::Lower } else { Side::Upper };
        let phi = SphereFunction::expr(&format!("{} * (1 + {amp} * cos(2*theta))", n as f64))?;
        let problem = ProblemSpec::new(
            SpaceformConfig::new(SpaceformKind::Euclid, 0.3, 3.0)?,
            CurvatureFunction::new(family, n)?,
            PrescribedData::power_law(n, q, phi)?,
            mode,
            side,
        )?;
        let opts = RunOptions {
            tol: 1e-8,
            grid_size: 32,
            ..RunOptions::default()
        };
        let r = run(&problem, None, &opts)?;
        let m = &r.monitors;
        max_pinching = max_pinching.max(m.max_pinching_ratio);
        let Shape::Support(p) = &r.profile else { unreachable!() };
        let d = Differentiator::new(p.grid());
        let (k1, k2) = p.curvatures(&d)?;
        for j in 0..p.m {
            let mut kappa = vec![k2[j]; n];
            kappa[0] = k1[j];
            worst_grad = worst_grad.max(gradient_rel_error(&problem.function, &kappa)?);
        }
        if !(r.converged
            && m.barrier_sandwich
            && m.monotone_motion
            && m.pinching_bounded
            && m.max_pinching_ratio.is_finite())
        {
            failures.push(format!(
                "case {case} ({family:?}, n = {n}, {mode:?}, {side:?}): {}",
                r.message
            ));
        }
    }
    outcome(
        failures.is_empty() && worst_grad < 1e-6,
        format!(
            "max pinching ratio {max_pinching:.3}, gradient rel err {worst_grad:.2e}{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join("; "))
            }
        ),
    )
}

fn determinism() -> Result<Outcome> {
    let tmp = tempfile::tempdir()?;
    let mut bytes = Vec::new();
    for _ in 0..2 {
        let mut cfg = RunConfig::load(&example("lp_n1_q3.json"))?;
        cfg.outputs.dir = tmp.path().to_path_buf();
        solve_config(cfg)?;
        bytes.push(std::fs::read(tmp.path().join("result.json"))?);
    }
    outcome(bytes[0] == bytes[1], format!("{} bytes per document", bytes[0].len()))
}

type Criterion = fn() -> Result<Outcome>;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("round steady state", round_steady_state),
        ("manufactured solution", manufactured_solution),
        ("axisymmetric round preservation", axisymmetric_round_preservation),
        ("Firey identity", firey_identity),
        ("Lambda_eps inequality", lambda_eps),
        ("structure checks", structure_checks),
        ("barrier constants", barrier_constants),
        ("spaceform flow", spaceform_flow),
        ("monitor suite", monitor_suite),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (passed, detail) = match check() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<32} {} ({detail}; {:.2} s)",
            i + 1,
            name,
            if passed { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/10 passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
