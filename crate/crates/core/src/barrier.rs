//! Slice barriers `{r}×Sⁿ` for a problem and the barrier-constant
//! arithmetic in the hemisphere and de Sitter space.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::anisotropy::{Point, PrescribedData};
use crate::curvfun::CurvatureFunction;
use crate::error::{Error, Result};
use crate::flow::{ProblemSpec, Shape, Side};
use crate::spaceform::{SpaceformConfig, SpaceformKind};

pub const BISECTION_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 200;
/// Inward nudge of accepted barriers, relative to the annulus width.
pub const NUDGE: f64 = 1e-6;
/// Angles per slice used for the inf/sup of `f`.
pub const SLICE_ANGLES: usize = 64;
const SCAN_POINTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarrierPair {
    pub r_lower: f64,
    pub r_upper: f64,
    /// `σ(f − F)` at the lower slice, using the unfavourable extreme of `f`.
    pub margin_lower: f64,
    /// `σ(f − F)` at the upper slice, using the unfavourable extreme of `f`.
    pub margin_upper: f64,
}

impl BarrierPair {
    pub fn radius(&self, side: Side) -> f64 {
        match side {
            Side::Lower => self.r_lower,
            Side::Upper => self.r_upper,
        }
    }
}

/// Angles at which a slice is sampled.
pub fn slice_angles(n: usize) -> Vec<f64> {
    if n == 1 {
        (0..SLICE_ANGLES)
            .map(|j| 2.0 * PI * j as f64 / SLICE_ANGLES as f64)
            .collect()
    } else {
        (0..SLICE_ANGLES)
            .map(|j| -0.5 * PI + (j as f64 + 0.5) * PI / SLICE_ANGLES as f64)
            .collect()
    }
}

/// `σ(f − F)` on the slice of radius `r` with the least and the most
/// favourable value of `f`: `(g_low, g_up)`. A lower barrier needs
/// `g_low ≥ 0`, an upper one `g_up ≤ 0`.
pub fn slice_margins(
    space: &SpaceformConfig,
    function: &CurvatureFunction,
    data: &PrescribedData,
    scale: f64,
    angles: &[f64],
    r: f64,
) -> Result<(f64, f64)> {
    let (th, dth) = space.warping(r)?;
    let slice_f = function.n as f64 * dth / th;
    let mut fmin = f64::INFINITY;
    let mut fmax = f64::NEG_INFINITY;
    for &a in angles {
        let f = scale * data.eval(&Point::on_slice(r, th, a))?;
        fmin = fmin.min(f);
        fmax = fmax.max(f);
    }
    let sigma = space.sigma();
    let (for_lower, for_upper) = if sigma > 0.0 { (fmin, fmax) } else { (fmax, fmin) };
    Ok((sigma * (for_lower - slice_f), sigma * (for_upper - slice_f)))
}

fn bisect(mut good: f64, mut bad: f64, ok: &dyn Fn(f64) -> Result<bool>) -> Result<f64> {
    for _ in 0..BISECTION_MAX_ITER {
        if (good - bad).abs() < BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (good + bad);
        if ok(mid)? {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

/// Searches slice barriers: the lower one at `a` (or the first slice above
/// `a` where `g_low ≥ 0`), the upper one at `b` (or the first slice below
/// `b` where `g_up ≤ 0`), each nudged inward when the sign survives.
pub fn find_spherical_barriers(
    space: &SpaceformConfig,
    function: &CurvatureFunction,
    data: &PrescribedData,
    scale: f64,
) -> Result<BarrierPair> {
    let angles = slice_angles(function.n);
    let (a, b) = space.annulus;
    let width = b - a;
    let low_ok = |r: f64| -> Result<bool> { Ok(slice_margins(space, function, data, scale, &angles, r)?.0 >= 0.0) };
    let up_ok = |r: f64| -> Result<bool> { Ok(slice_margins(space, function, data, scale, &angles, r)?.1 <= 0.0) };
    let grid = |i: usize| a + width * i as f64 / SCAN_POINTS as f64;

    let r_lower = if low_ok(a)? {
        a
    } else {
        let i = (1..=SCAN_POINTS)
            .find(|&i| low_ok(grid(i)).unwrap_or(false))
            .ok_or_else(|| Error::NoBarrier("no slice in the annulus is a lower barrier".into()))?;
        bisect(grid(i), grid(i - 1), &low_ok)?
    };
    let r_upper = if up_ok(b)? {
        b
    } else {
        let i = (0..SCAN_POINTS)
            .rev()
            .find(|&i| up_ok(grid(i)).unwrap_or(false))
            .ok_or_else(|| Error::NoBarrier("no slice in the annulus is an upper barrier".into()))?;
        bisect(grid(i), grid(i + 1), &up_ok)?
    };
    let nudge = NUDGE * width;
    let r_lower = if low_ok(r_lower + nudge)? {
        r_lower + nudge
    } else {
        r_lower
    };
    let r_upper = if up_ok(r_upper - nudge)? {
        r_upper - nudge
    } else {
        r_upper
    };
    if r_lower >= r_upper {
        return Err(Error::NoBarrier(format!(
            "lower barrier slice {r_lower} does not lie inside upper barrier slice {r_upper}"
        )));
    }
    Ok(BarrierPair {
        r_lower,
        r_upper,
        margin_lower: slice_margins(space, function, data, scale, &angles, r_lower)?.0,
        margin_upper: slice_margins(space, function, data, scale, &angles, r_upper)?.1,
    })
}

/// Largest admissible constant `c` in `f = c·s^{1−q}φ(ν)` at the anchor
/// slice: `n·cos b/(sup φ·sin^{2−q} b)` in the hemisphere (`q > 2`) and
/// `n·sinh a/(sup φ·cosh^{2−q} a)` in de Sitter space (`q < 1`).
pub fn admissible_constant(space: &SpaceformConfig, n: usize, phi_sup: f64, q: f64, anchor: f64) -> Result<f64> {
    if !(phi_sup.is_finite() && phi_sup > 0.0) {
        return Err(Error::Parameter(format!(
            "sup of phi must be positive and finite, got {phi_sup}"
        )));
    }
    if !space.contains(anchor) {
        return Err(Error::Domain(format!(
            "anchor {anchor} outside annulus {:?}",
            space.annulus
        )));
    }
    let n = n as f64;
    match space.kind {
        SpaceformKind::Sphere => {
            if q <= 2.0 {
                return Err(Error::NoBarrier(format!(
                    "q = {q}: an inner lower barrier near the pole needs q > 2"
                )));
            }
            Ok(n * anchor.cos() / (phi_sup * anchor.sin().powf(2.0 - q)))
        }
        SpaceformKind::DeSitter => {
            if q >= 1.0 {
                return Err(Error::NoBarrier(format!(
                    "q = {q}: the de Sitter barrier constant needs q < 1"
                )));
            }
            Ok(n * anchor.sinh() / (phi_sup * anchor.cosh().powf(2.0 - q)))
        }
        kind => Err(Error::Unsupported(format!("no barrier-constant formula for {kind:?}"))),
    }
}

/// `min σ(f − F)` (lower side) or `max σ(f − F)` (upper side) over the nodes.
pub fn validate_barrier(problem: &ProblemSpec, shape: &Shape, side: Side) -> Result<f64> {
    let defect = crate::flow::nodal_defect(problem, shape)?;
    let sigma = problem.space.sigma();
    // defect is F − f.
    let margins = defect.iter().map(|d| -sigma * d);
    Ok(match side {
        Side::Lower => margins.fold(f64::INFINITY, f64::min),
        Side::Upper => margins.fold(f64::NEG_INFINITY, f64::max),
    })
}
