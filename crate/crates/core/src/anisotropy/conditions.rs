//! Sampled admissibility conditions on prescribed data.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::quadrature::GaussLegendre;
use super::{Point, PrescribedData, SphereFunction};
use crate::curvfun::{binomial, Verdict};
use crate::error::{Error, Result};
use crate::profile::{Differentiator, Domain, Grid};
use crate::spaceform::SpaceformConfig;

/// Margin turning strict inequalities into falsifiable predicates.
pub const STRICT_MARGIN: f64 = 1e-10;

/// Sampling used by [`check_flow_main_condition`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HessianSampling {
    pub radial_nodes: usize,
    pub angle_nodes: usize,
}

impl Default for HessianSampling {
    fn default() -> Self {
        HessianSampling {
            radial_nodes: 12,
            angle_nodes: 16,
        }
    }
}

/// Checks that `D²χ + K_N χ ḡ < 0` for `χ = −1/f`, with `(s, ν)` frozen,
/// on a product grid of radii, position angles, support values and normal
/// angles. Derivatives are central differences in `(r, α)`. The verdict's
/// margin is `−(largest eigenvalue)`.
pub fn check_flow_main_condition(
    data: &PrescribedData,
    space: &SpaceformConfig,
    sampling: HessianSampling,
) -> Result<Verdict> {
    if !space.kind.is_riemannian() {
        return Err(Error::Unsupported(
            "the ambient Hessian condition is only checked in Riemannian spaceforms".into(),
        ));
    }
    let n = data.n;
    let (a, b) = space.annulus;
    let width = b - a;
    let hr = 1e-4 * width;
    let ha = 1e-4 * PI;
    let kn = space.k_n() as f64;
    let nr = sampling.radial_nodes.max(2);
    let na = sampling.angle_nodes.max(4);
    let radii: Vec<f64> = (0..nr).map(|i| a + (i as f64 + 0.5) * width / nr as f64).collect();
    let angles: Vec<f64> = if n == 1 {
        (0..na).map(|j| 2.0 * PI * j as f64 / na as f64).collect()
    } else {
        (0..na).map(|j| -0.5 * PI + (j as f64 + 0.5) * PI / na as f64).collect()
    };
    let (tha, _) = space.warping(a)?;
    let (thb, _) = space.warping(b)?;
    let supports = [tha, 0.5 * (tha + thb), thb];

    let mut worst = f64::NEG_INFINITY;
    let mut samples = 0;
    for &s in &supports {
        for &nu in &angles {
            for &r in &radii {
                let (th, dth) = space.warping(r)?;
                for &al in &angles {
                    let chi = |rr: f64, aa: f64| -> Result<f64> {
                        let f = data.eval(&Point {
                            s,
                            abs_x: rr,
                            x_angle: aa,
                            nu,
                        })?;
                        Ok(-1.0 / f)
                    };
                    let c = chi(r, al)?;
                    let (rp, rm) = (chi(r + hr, al)?, chi(r - hr, al)?);
                    let (ap, am) = (chi(r, al + ha)?, chi(r, al - ha)?);
                    let g_r = (rp - rm) / (2.0 * hr);
                    let g_a = (ap - am) / (2.0 * ha);
                    let g_rr = (rp - 2.0 * c + rm) / (hr * hr);
                    let g_aa = (ap - 2.0 * c + am) / (ha * ha);
                    let g_ra = (chi(r + hr, al + ha)? - chi(r + hr, al - ha)? - chi(r - hr, al + ha)?
                        + chi(r - hr, al - ha)?)
                        / (4.0 * hr * ha);
                    let e_rr = g_rr + kn * c;
                    let e_ra = (g_ra - dth / th * g_a) / th;
                    let e_aa = (g_aa + th * dth * g_r) / (th * th) + kn * c;
                    let mean = 0.5 * (e_rr + e_aa);
                    let dev = (0.25 * (e_rr - e_aa).powi(2) + e_ra * e_ra).sqrt();
                    let mut top = mean + dev;
                    if n > 1 {
                        let e_ww = dth / th * g_r - al.tan() * g_a / (th * th) + kn * c;
                        top = top.max(e_ww);
                    }
                    worst = worst.max(top);
                    samples += 1;
                }
            }
        }
    }
    Ok(Verdict {
        holds: worst < -STRICT_MARGIN,
        worst_margin: -worst,
        samples,
    })
}

/// Spherical Hessian conditions on `u = φ^{1/q}` (or `ψ^{−1/(p+k−1)}`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum GuanMaVariant {
    /// `D²u + u g̃ > 0`.
    Convex { q: f64 },
    /// `D²u + ((q−1)/q) u g̃ > 0`.
    Shifted { q: f64 },
    /// `u g̃ − D²u > 0`.
    DeSitter { q: f64 },
    /// `D²u + u g̃ ≥ 0` with `u = ψ^{−1/(p+k−1)}`.
    Firey { p: f64, k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuanMaReport {
    pub holds: bool,
    /// Smallest eigenvalue of the tested operator over the grid.
    pub min_value: f64,
    pub samples: usize,
}

/// Evaluates the spherical Hessian operator of the variant on the grid. In
/// the axisymmetric reduction its eigenvalues are `u'' + cu` (meridian) and,
/// for `n ≥ 2`, `−tanθ·u' + cu` (parallels).
pub fn check_guanma(phi: &SphereFunction, variant: GuanMaVariant, n: usize, grid: Grid) -> Result<GuanMaReport> {
    let (power, c, sign, strict) = match variant {
        GuanMaVariant::Convex { q } | GuanMaVariant::Shifted { q } | GuanMaVariant::DeSitter { q } if q == 0.0 => {
            return Err(Error::Parameter("exponent q must be nonzero".into()))
        }
        GuanMaVariant::Convex { q } => (1.0 / q, 1.0, 1.0, true),
        GuanMaVariant::Shifted { q } => (1.0 / q, (q - 1.0) / q, 1.0, true),
        GuanMaVariant::DeSitter { q } => (1.0 / q, 1.0, -1.0, true),
        GuanMaVariant::Firey { p, k } => {
            let e = p + k as f64 - 1.0;
            if e == 0.0 {
                return Err(Error::Parameter("p + k - 1 must be nonzero".into()));
            }
            (-1.0 / e, 1.0, 1.0, false)
        }
    };
    if (grid.domain == Domain::FullCircle) != (n == 1) {
        return Err(Error::Parameter(format!(
            "grid domain {:?} does not match n = {n}",
            grid.domain
        )));
    }
    let values = phi.sample(grid)?;
    if let Some((j, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::NonPositiveData {
            value: *v,
            location: format!("sphere function at node {j}"),
        });
    }
    let u: Vec<f64> = values.iter().map(|v| v.powf(power)).collect();
    let (du, ddu) = Differentiator::new(grid).derivatives(&u);
    let mut min_value = f64::INFINITY;
    for (j, theta) in grid.nodes().into_iter().enumerate() {
        // D²u acts as −D²u for the de Sitter sign.
        let meridian = sign * ddu[j] + c * u[j];
        min_value = min_value.min(meridian);
        if n > 1 {
            let parallel = -sign * theta.tan() * du[j] + c * u[j];
            min_value = min_value.min(parallel);
        }
    }
    let holds = if strict {
        min_value > STRICT_MARGIN
    } else {
        min_value >= -STRICT_MARGIN
    };
    Ok(GuanMaReport {
        holds,
        min_value,
        samples: grid.m,
    })
}

/// Gauss–Legendre nodes per quadrature panel.
pub const PANEL_NODES: usize = 64;
/// Below this `cos θ` the pole limit `G = kψ/n` is used.
pub const POLE_CUTOFF: f64 = 1e-4;

/// `G(θ_j)` together with the integral `I(θ_j) = ∫_θ^{π/2} ψ cos^{n−1}α sinα dα`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireyProfile {
    pub theta: Vec<f64>,
    pub g: Vec<f64>,
    pub integral: Vec<f64>,
    /// `I(−π/2)`.
    pub total: f64,
}

fn check_firey_indices(n: usize, k: usize, grid: Grid) -> Result<()> {
    if !(1 < k && k < n) {
        return Err(Error::Parameter(format!("need 1 < k < n, got k = {k}, n = {n}")));
    }
    if grid.domain != Domain::Latitude {
        return Err(Error::Parameter("the Firey functional lives on a latitude grid".into()));
    }
    Ok(())
}

/// Computes `G(θ) = ψ(θ) − (n−k)/cosⁿθ · I(θ)` at the grid nodes by
/// composite Gauss–Legendre quadrature, one panel between consecutive nodes.
/// When `I(−π/2)` vanishes to quadrature tolerance, southern values are
/// integrated from the south pole to avoid cancellation.
pub fn firey_g(psi: impl Fn(f64) -> f64, n: usize, k: usize, grid: Grid) -> Result<FireyProfile> {
    check_firey_indices(n, k, grid)?;
    let gl = GaussLegendre::new(PANEL_NODES);
    let nodes = grid.nodes();
    let m = nodes.len();
    let w = |a: f64| psi(a) * a.cos().powi(n as i32 - 1) * a.sin();
    let half = 0.5 * PI;

    let mut from_north = vec![0.0; m];
    let mut acc = gl.integrate(nodes[m - 1], half, w);
    from_north[m - 1] = acc;
    for j in (0..m - 1).rev() {
        acc += gl.integrate(nodes[j], nodes[j + 1], w);
        from_north[j] = acc;
    }
    let total = acc + gl.integrate(-half, nodes[0], w);

    let mut from_south = vec![0.0; m];
    let mut acc = gl.integrate(-half, nodes[0], w);
    from_south[0] = acc;
    for j in 1..m {
        acc += gl.integrate(nodes[j - 1], nodes[j], w);
        from_south[j] = acc;
    }

    let closed = total.abs() < STRICT_MARGIN;
    let mut integral = vec![0.0; m];
    let mut g = vec![0.0; m];
    for j in 0..m {
        let theta = nodes[j];
        integral[j] = if closed && theta < 0.0 {
            -from_south[j]
        } else {
            from_north[j]
        };
        let c = theta.cos();
        let p = psi(theta);
        g[j] = if c < POLE_CUTOFF {
            k as f64 / n as f64 * p
        } else {
            p - (n - k) as f64 * integral[j] / c.powi(n as i32)
        };
    }
    Ok(FireyProfile {
        theta: nodes,
        g,
        integral,
        total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FireyReport {
    /// `ψ` has finite limits at both poles.
    pub finite_limits: Verdict,
    /// `I > 0` on the open interval and `I(−π/2) = 0`.
    pub closed_integral: Verdict,
    /// `G > 0` on the grid.
    pub positive_g: Verdict,
    pub profile: FireyProfile,
}

pub fn check_firey(psi: impl Fn(f64) -> f64, n: usize, k: usize, grid: Grid) -> Result<FireyReport> {
    let profile = firey_g(&psi, n, k, grid)?;
    let (south, north) = (psi(-0.5 * PI), psi(0.5 * PI));
    let m = grid.m;
    let jump = (south - psi(profile.theta[0]))
        .abs()
        .max((north - psi(profile.theta[m - 1])).abs());
    let finite_limits = Verdict {
        holds: south.is_finite() && north.is_finite(),
        worst_margin: if jump.is_finite() { -jump } else { f64::NEG_INFINITY },
        samples: 2,
    };
    let min_i = profile.integral.iter().copied().fold(f64::INFINITY, f64::min);
    let closure = STRICT_MARGIN - profile.total.abs();
    let closed_integral = Verdict {
        holds: min_i > 0.0 && closure > 0.0,
        worst_margin: min_i.min(closure),
        samples: m + 1,
    };
    let min_g = profile.g.iter().copied().fold(f64::INFINITY, f64::min);
    let positive_g = Verdict {
        holds: min_g > STRICT_MARGIN,
        worst_margin: min_g,
        samples: m,
    };
    Ok(FireyReport {
        finite_limits,
        closed_integral,
        positive_g,
        profile,
    })
}

/// Sphere-function front end of [`check_firey`].
pub fn check_firey_sphere(psi: &SphereFunction, n: usize, k: usize, grid: Grid) -> Result<FireyReport> {
    psi.validate()?;
    psi.eval(0.0)?;
    check_firey(|t| psi.eval(t).unwrap_or(f64::NAN), n, k, grid)
}

/// `G` from the product formula `C(n−1,k−1)·r₁·r₂^{k−1}`.
pub fn firey_product(n: usize, k: usize, r1: f64, r2: f64) -> f64 {
    binomial(n - 1, k - 1) * r1 * r2.powi(k as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaceform::SpaceformKind;

    fn lat(m: usize) -> Grid {
        Grid::new(Domain::Latitude, m).unwrap()
    }

    #[test]
    fn flow_main_examples() {
        let eu = SpaceformConfig::new(SpaceformKind::Euclid, 0.5, 2.0).unwrap();
        for n in [1, 2] {
            let d = PrescribedData::expression(n, "absx^(-2)").unwrap();
            let v = check_flow_main_condition(&d, &eu, HessianSampling::default()).unwrap();
            assert!(v.holds, "{v:?}");
            assert!((v.worst_margin - 2.0).abs() < 1e-4, "{v:?}");
        }
        // (n+1)/k = 2 curvature-measure data with φ ≡ 1.
        let d = PrescribedData::new(
            3,
            super::super::DataForm::CurvatureMeasure {
                p: 1.0,
                k: 2,
                phi: SphereFunction::constant(1.0),
            },
        )
        .unwrap();
        assert!(
            check_flow_main_condition(&d, &eu, HessianSampling::default())
                .unwrap()
                .holds
        );

        let sph = SpaceformConfig::new(SpaceformKind::Sphere, 0.2, 1.2).unwrap();
        let d = PrescribedData::expression(1, "2").unwrap();
        let v = check_flow_main_condition(&d, &sph, HessianSampling::default()).unwrap();
        assert!(v.holds && (v.worst_margin - 0.5).abs() < 1e-9);

        // Power laws do not depend on x: the Euclidean Hessian vanishes.
        let d = PrescribedData::power_law(1, 3.0, SphereFunction::constant(1.0)).unwrap();
        assert!(
            !check_flow_main_condition(&d, &eu, HessianSampling::default())
                .unwrap()
                .holds
        );
        // Concave −1/f fails.
        let d = PrescribedData::expression(1, "absx^2").unwrap();
        assert!(
            !check_flow_main_condition(&d, &eu, HessianSampling::default())
                .unwrap()
                .holds
        );
    }

    #[test]
    fn guanma_examples() {
        let circ = Grid::new(Domain::FullCircle, 64).unwrap();
        let one = SphereFunction::constant(1.0);
        let r = check_guanma(&one, GuanMaVariant::Convex { q: 3.0 }, 1, circ).unwrap();
        assert!(r.holds && (r.min_value - 1.0).abs() < 1e-12);
        let good = SphereFunction::expr("(1 + 0.2*cos(2*theta))^3").unwrap();
        let r = check_guanma(&good, GuanMaVariant::Convex { q: 3.0 }, 1, circ).unwrap();
        assert!(r.holds && (r.min_value - 0.4).abs() < 1e-10);
        let bad = SphereFunction::expr("(1 + 0.9*cos(2*theta))^3").unwrap();
        let r = check_guanma(&bad, GuanMaVariant::Convex { q: 3.0 }, 1, circ).unwrap();
        assert!(!r.holds && (r.min_value + 1.7).abs() < 1e-10);
        assert!(check_guanma(&one, GuanMaVariant::Convex { q: 0.0 }, 1, circ).is_err());

        let r = check_guanma(&one, GuanMaVariant::Shifted { q: 3.0 }, 1, circ).unwrap();
        assert!(r.holds && (r.min_value - 2.0 / 3.0).abs() < 1e-12);
        let r = check_guanma(&one, GuanMaVariant::DeSitter { q: -1.0 }, 1, circ).unwrap();
        assert!(r.holds);
        let r = check_guanma(&one, GuanMaVariant::Firey { p: 2.0, k: 2 }, 3, lat(32)).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn guanma_scale_invariance() {
        let circ = Grid::new(Domain::FullCircle, 64).unwrap();
        for (src, expect) in [("(1 + 0.2*cos(2*theta))^3", true), ("(1 + 0.9*cos(2*theta))^3", false)] {
            for lam in [0.1f64, 10.0] {
                let f = SphereFunction::expr(&format!("{lam}*{src}")).unwrap();
                let r = check_guanma(&f, GuanMaVariant::Convex { q: 3.0 }, 1, circ).unwrap();
                assert_eq!(r.holds, expect);
                let base = check_guanma(
                    &SphereFunction::expr(src).unwrap(),
                    GuanMaVariant::Convex { q: 3.0 },
                    1,
                    circ,
                )
                .unwrap();
                assert!((r.min_value - lam.powf(1.0 / 3.0) * base.min_value).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn firey_constant_psi() {
        for (n, k) in [(3, 2), (4, 2), (4, 3), (5, 3)] {
            let c = binomial(n, k);
            let prof = firey_g(|_| c, n, k, lat(64)).unwrap();
            let expect = binomial(n - 1, k - 1);
            assert!(prof.g.iter().all(|g| (g - expect).abs() < 1e-10), "{n} {k}");
            let rep = check_firey(|_| 1.0, n, k, lat(64)).unwrap();
            assert!(rep.finite_limits.holds && rep.closed_integral.holds && rep.positive_g.holds);
            assert!(rep.profile.g.iter().all(|g| (g - k as f64 / n as f64).abs() < 1e-10));
        }
        assert!(firey_g(|_| 1.0, 3, 3, lat(32)).is_err());
        assert!(firey_g(|_| 1.0, 3, 1, lat(32)).is_err());
    }
}
