//! Ambient warped-product geometry `σ dr² + ϑ(r)² ĝ` of the simply connected
//! spaceforms, restricted to a strict annular region `(a, b) × Sⁿ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceformKind {
    Euclid,
    Sphere,
    Hyperbolic,
    /// Lorentzian de Sitter space. Only barrier arithmetic is supported.
    DeSitter,
}

impl SpaceformKind {
    /// Sectional curvature `K_N`.
    pub fn sectional_curvature(self) -> i32 {
        match self {
            SpaceformKind::Euclid => 0,
            SpaceformKind::Sphere | SpaceformKind::DeSitter => 1,
            SpaceformKind::Hyperbolic => -1,
        }
    }

    /// Signature `σ = ⟨ν, ν⟩` of the ambient space.
    pub fn signature(self) -> f64 {
        match self {
            SpaceformKind::DeSitter => -1.0,
            _ => 1.0,
        }
    }

    /// `(ϑ(r), ϑ'(r))` without any annulus check.
    pub fn warping(self, r: f64) -> (f64, f64) {
        match self {
            SpaceformKind::Euclid => (r, 1.0),
            SpaceformKind::Sphere => (r.sin(), r.cos()),
            SpaceformKind::Hyperbolic => (r.sinh(), r.cosh()),
            SpaceformKind::DeSitter => (r.cosh(), r.sinh()),
        }
    }

    pub fn is_riemannian(self) -> bool {
        self != SpaceformKind::DeSitter
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceformConfig {
    pub kind: SpaceformKind,
    /// Closed radial interval `[a, b]`.
    pub annulus: (f64, f64),
}

impl SpaceformConfig {
    pub fn new(kind: SpaceformKind, a: f64, b: f64) -> Result<Self> {
        let cfg = SpaceformConfig { kind, annulus: (a, b) };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.annulus;
        if !(a.is_finite() && b.is_finite()) || a <= 0.0 || a >= b {
            return Err(Error::Domain(format!("annulus must satisfy 0 < a < b, got ({a}, {b})")));
        }
        if self.kind == SpaceformKind::Sphere && b >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::Domain(format!(
                "spherical annulus must stay in the open hemisphere, b = {b} >= pi/2"
            )));
        }
        for r in [a, b] {
            let (th, dth) = self.kind.warping(r);
            if th <= 0.0 || dth <= 0.0 {
                return Err(Error::Domain(format!(
                    "warping factor not strictly increasing at r = {r}"
                )));
            }
        }
        Ok(())
    }

    pub fn k_n(&self) -> i32 {
        self.kind.sectional_curvature()
    }

    pub fn sigma(&self) -> f64 {
        self.kind.signature()
    }

    pub fn contains(&self, r: f64) -> bool {
        let (a, b) = self.annulus;
        r >= a && r <= b
    }

    fn check(&self, r: f64) -> Result<()> {
        if self.contains(r) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "radius {r} outside annulus [{}, {}]",
                self.annulus.0, self.annulus.1
            )))
        }
    }

    pub fn warping(&self, r: f64) -> Result<(f64, f64)> {
        self.check(r)?;
        Ok(self.kind.warping(r))
    }

    /// Principal curvature `ϑ'/ϑ` of the slice `{r} × Sⁿ`.
    pub fn slice_curvature(&self, r: f64) -> Result<f64> {
        let (th, dth) = self.warping(r)?;
        Ok(dth / th)
    }

    /// Support function `s = ϑ/v` of a radial graph, where `grad_sq` is
    /// `ĝ^{ij} r_i r_j` at the point.
    pub fn graph_support(&self, r: f64, grad_sq: f64) -> Result<f64> {
        let (th, _) = self.warping(r)?;
        let v2 = 1.0 + self.sigma() * grad_sq / (th * th);
        if v2 <= 0.0 {
            return Err(Error::NotSpacelike(v2));
        }
        Ok(th / v2.sqrt())
    }

    /// `v = sqrt(1 + σ ϑ⁻² |Dr|²)`.
    pub fn graph_v(&self, r: f64, grad_sq: f64) -> Result<f64> {
        let (th, _) = self.warping(r)?;
        let v2 = 1.0 + self.sigma() * grad_sq / (th * th);
        if v2 <= 0.0 {
            return Err(Error::NotSpacelike(v2));
        }
        Ok(v2.sqrt())
    }

    /// Geodesic curvature of the curve `{(r(y), y)}` with outward normal
    /// (n = 1, Riemannian kinds only).
    pub fn radial_graph_curvature(&self, r: f64, dr: f64, ddr: f64) -> Result<f64> {
        if !self.kind.is_riemannian() {
            return Err(Error::Unsupported(
                "radial graph curvature is only defined for Riemannian spaceforms".into(),
            ));
        }
        self.check(r)?;
        Ok(radial_curvature_unchecked(self.kind, r, dr, ddr))
    }
}

/// `κ = (ϑ²ϑ' + 2ϑ'r'² − ϑr'') / (r'² + ϑ²)^{3/2}`.
pub(crate) fn radial_curvature_unchecked(kind: SpaceformKind, r: f64, dr: f64, ddr: f64) -> f64 {
    let (th, dth) = kind.warping(r);
    let q = dr * dr + th * th;
    (th * th * dth + 2.0 * dth * dr * dr - th * ddr) / (q * q.sqrt())
}
