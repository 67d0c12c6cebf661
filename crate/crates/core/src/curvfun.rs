//! Symmetric, 1-homogeneous curvature functions on the positive cone Γ₊.
//!
//! Every supported family is a normalized quotient
//! `F(κ) = c · (σ_ℓ(κ) / σ_k(κ))^{1/(ℓ−k)}` with `0 ≤ k < ℓ ≤ n` and `c`
//! chosen so that `F(1, …, 1) = n`. Power means are the case `k = 0`.
//! The dual `F_*(r) = 1 / F(r⁻¹)` is again a quotient, with indices
//! `(n − k, n − ℓ)` and constant `1/c`, so duality is closed over the type.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension `n`.
pub const MAX_DIM: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// Normalized `σ_k^{1/k}`.
    PowerMean { k: usize },
    /// Normalized `(σ_ℓ/σ_k)^{1/(ℓ−k)}`, `1 ≤ k < ℓ ≤ n`.
    Quotient { l: usize, k: usize },
    /// `σ_1`.
    Mean,
    /// Normalized `σ_n^{1/n}`.
    Gauss,
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Writes `σ_0(x), …, σ_m(x)` into `out[..=m]` where `m = x.len()`.
pub fn elementary_symmetric(x: &[f64], out: &mut [f64]) {
    let m = x.len();
    out[..=m].iter_mut().for_each(|v| *v = 0.0);
    out[0] = 1.0;
    for (j, &xi) in x.iter().enumerate() {
        for p in (1..=j + 1).rev() {
            out[p] += xi * out[p - 1];
        }
    }
}

/// `σ_p(x | i)`: elementary symmetric polynomials with `x_i` removed.
fn elementary_symmetric_without(x: &[f64], skip: usize, out: &mut [f64]) {
    let m = x.len() - 1;
    out[..=m].iter_mut().for_each(|v| *v = 0.0);
    out[0] = 1.0;
    let mut j = 0;
    for (idx, &xi) in x.iter().enumerate() {
        if idx == skip {
            continue;
        }
        for p in (1..=j + 1).rev() {
            out[p] += xi * out[p - 1];
        }
        j += 1;
    }
}

/// Minimal interface the structure checkers need. Implemented by
/// [`CurvatureFunction`]; tests implement it for counterexamples.
pub trait SymmetricFunction {
    fn dim(&self) -> usize;
    fn value(&self, kappa: &[f64]) -> f64;

    /// `F_*(r) = 1 / F(r⁻¹)`.
    fn dual_value(&self, radii: &[f64]) -> f64 {
        let mut inv = [0.0; MAX_DIM];
        for (d, r) in inv.iter_mut().zip(radii) {
            *d = 1.0 / r;
        }
        1.0 / self.value(&inv[..radii.len()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurvatureFunction", into = "RawCurvatureFunction")]
pub struct CurvatureFunction {
    pub family: Family,
    pub n: usize,
    pub dual: bool,
    top: usize,
    bottom: usize,
    scale: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FamilyName {
    PowerMean,
    Quotient,
    Mean,
    Gauss,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCurvatureFunction {
    family: FamilyName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    n: usize,
    #[serde(default)]
    dual: bool,
}

impl TryFrom<RawCurvatureFunction> for CurvatureFunction {
    type Error = Error;

    fn try_from(raw: RawCurvatureFunction) -> Result<Self> {
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("curvature function is missing `{name}`")))
        };
        let family = match raw.family {
            FamilyName::PowerMean => Family::PowerMean { k: need(raw.k, "k")? },
            FamilyName::Quotient => Family::Quotient {
                l: need(raw.l, "l")?,
                k: need(raw.k, "k")?,
            },
            FamilyName::Mean | FamilyName::Gauss => {
                if raw.k.is_some() || raw.l.is_some() {
                    return Err(Error::Config("mean and Gauss curvature take no indices".into()));
                }
                if matches!(raw.family, FamilyName::Mean) {
                    Family::Mean
                } else {
                    Family::Gauss
                }
            }
        };
        if matches!(family, Family::PowerMean { .. }) && raw.l.is_some() {
            return Err(Error::Config("power mean takes only `k`".into()));
        }
        let f = CurvatureFunction::new(family, raw.n)?;
        Ok(if raw.dual { f.dual() } else { f })
    }
}

impl From<CurvatureFunction> for RawCurvatureFunction {
    fn from(f: CurvatureFunction) -> Self {
        let (family, l, k) = match f.family {
            Family::PowerMean { k } => (FamilyName::PowerMean, None, Some(k)),
            Family::Quotient { l, k } => (FamilyName::Quotient, Some(l), Some(k)),
            Family::Mean => (FamilyName::Mean, None, None),
            Family::Gauss => (FamilyName::Gauss, None, None),
        };
        RawCurvatureFunction {
            family,
            l,
            k,
            n: f.n,
            dual: f.dual,
        }
    }
}

impl CurvatureFunction {
    pub fn new(family: Family, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::Parameter(format!("dimension n = {n} not in 1..={MAX_DIM}")));
        }
        let (top, bottom) = match family {
            Family::PowerMean { k } => {
                if k == 0 || k > n {
                    return Err(Error::Parameter(format!("power mean needs 1 <= k <= n, got k = {k}")));
                }
                (k, 0)
            }
            Family::Quotient { l, k } => {
                if k == 0 || k >= l || l > n {
                    return Err(Error::Parameter(format!(
                        "quotient needs 1 <= k < l <= n, got (l, k) = ({l}, {k})"
                    )));
                }
                (l, k)
            }
            Family::Mean => (1, 0),
            Family::Gauss => (n, 0),
        };
        let deg = (top - bottom) as f64;
        let scale = n as f64 * (binomial(n, bottom) / binomial(n, top)).powf(1.0 / deg);
        Ok(CurvatureFunction {
            family,
            n,
            dual: false,
            top,
            bottom,
            scale,
        })
    }

    /// Indices `(ℓ, k)` of the quotient actually evaluated.
    pub fn indices(&self) -> (usize, usize) {
        (self.top, self.bottom)
    }

    pub fn normalization(&self) -> f64 {
        self.scale
    }

    pub fn dual(&self) -> CurvatureFunction {
        if self.dual {
            return CurvatureFunction::new(self.family, self.n).expect("validated at construction");
        }
        CurvatureFunction {
            family: self.family,
            n: self.n,
            dual: !self.dual,
            top: self.n - self.bottom,
            bottom: self.n - self.top,
            scale: 1.0 / self.scale,
        }
    }

    fn check_point(&self, kappa: &[f64]) -> Result<()> {
        if kappa.len() != self.n {
            return Err(Error::Domain(format!(
                "expected {} principal curvatures, got {}",
                self.n,
                kappa.len()
            )));
        }
        if let Some(bad) = kappa.iter().find(|k| !(k.is_finite() && **k > 0.0)) {
            return Err(Error::Domain(format!(
                "point outside the positive cone: component {bad}"
            )));
        }
        Ok(())
    }

    pub fn eval(&self, kappa: &[f64]) -> Result<f64> {
        self.check_point(kappa)?;
        Ok(self.value_unchecked(kappa))
    }

    pub fn value_unchecked(&self, kappa: &[f64]) -> f64 {
        let mut sig = [0.0; MAX_DIM + 1];
        elementary_symmetric(kappa, &mut sig);
        let ratio = sig[self.top] / sig[self.bottom];
        let deg = self.top - self.bottom;
        if deg == 1 {
            self.scale * ratio
        } else {
            self.scale * ratio.powf(1.0 / deg as f64)
        }
    }

    /// Analytic gradient `∂F/∂κ_i`, using `∂σ_p/∂κ_i = σ_{p−1}(κ|i)`.
    pub fn grad(&self, kappa: &[f64]) -> Result<Vec<f64>> {
        self.check_point(kappa)?;
        let mut out = vec![0.0; self.n];
        self.grad_into(kappa, &mut out);
        Ok(out)
    }

    /// Writes the gradient into `out` and returns `F(κ)`.
    pub fn grad_into(&self, kappa: &[f64], out: &mut [f64]) -> f64 {
        let mut sig = [0.0; MAX_DIM + 1];
        let mut part = [0.0; MAX_DIM + 1];
        elementary_symmetric(kappa, &mut sig);
        let (l, k) = (self.top, self.bottom);
        let deg = (l - k) as f64;
        let ratio = sig[l] / sig[k];
        let value = if l - k == 1 {
            self.scale * ratio
        } else {
            self.scale * ratio.powf(1.0 / deg)
        };
        for (i, g) in out.iter_mut().enumerate().take(kappa.len()) {
            elementary_symmetric_without(kappa, i, &mut part);
            let dl = part[l - 1] / sig[l];
            let dk = if k == 0 { 0.0 } else { part[k - 1] / sig[k] };
            *g = value / deg * (dl - dk);
        }
        value
    }

    /// `γ = ℓ − k + 1` for the primal quotient families (power means are
    /// quotients with `k = 0`); `None` for duals.
    pub fn lambda_gamma(&self) -> Option<f64> {
        if self.dual {
            None
        } else {
            Some((self.top - self.bottom + 1) as f64)
        }
    }

    /// Constant `C_{n,k,ℓ,ε}` with `Σ_i F^{ii}κ_i² ≤ C F^{ℓ−k+1}` on `Γ_ε`,
    /// obtained by chaining `σ_{p−1}/σ_p ≤ n/(ε(n−p+1))` from `p = k+2` to `ℓ`.
    pub fn lambda_constant(&self, eps: f64) -> Option<f64> {
        if self.dual {
            return None;
        }
        let (l, k) = (self.top, self.bottom);
        let n = self.n as f64;
        let deg = (l - k) as f64;
        let mut c = (k + 1) as f64 / deg * self.scale.powf(-deg);
        for p in (k + 2)..=l {
            c *= n / (eps * (self.n - p + 1) as f64);
        }
        Some(c)
    }
}

impl SymmetricFunction for CurvatureFunction {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, kappa: &[f64]) -> f64 {
        self.value_unchecked(kappa)
    }

    fn dual_value(&self, radii: &[f64]) -> f64 {
        self.dual().value_unchecked(radii)
    }
}

/// Log-uniform sample of a point in `[lo, hi]ⁿ`.
pub fn sample_cone<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64, out: &mut [f64]) {
    let (a, b) = (lo.ln(), hi.ln());
    for v in out.iter_mut().take(n) {
        *v = rng.random_range(a..b).exp();
    }
}

pub const SAMPLE_LO: f64 = 1e-3;
pub const SAMPLE_HI: f64 = 1e3;
pub const MIDPOINT_TOL: f64 = 1e-10;

/// Sampled verdict carrying the worst observed margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub holds: bool,
    pub worst_margin: f64,
    pub samples: usize,
}

fn midpoint_check<R: Rng>(n: usize, pairs: usize, rng: &mut R, g: impl Fn(&[f64]) -> f64) -> Verdict {
    let mut a = [0.0; MAX_DIM];
    let mut b = [0.0; MAX_DIM];
    let mut m = [0.0; MAX_DIM];
    let mut worst = f64::INFINITY;
    for _ in 0..pairs {
        sample_cone(rng, n, SAMPLE_LO, SAMPLE_HI, &mut a);
        sample_cone(rng, n, SAMPLE_LO, SAMPLE_HI, &mut b);
        for i in 0..n {
            m[i] = 0.5 * (a[i] + b[i]);
        }
        let margin = g(&m[..n]) - 0.5 * (g(&a[..n]) + g(&b[..n]));
        worst = worst.min(margin);
    }
    Verdict {
        holds: worst >= -MIDPOINT_TOL,
        worst_margin: worst,
        samples: pairs,
    }
}

/// Midpoint concavity of `F_*` on random pairs in Γ₊.
pub fn check_inverse_concave<F: SymmetricFunction, R: Rng>(f: &F, pairs: usize, rng: &mut R) -> Verdict {
    midpoint_check(f.dim(), pairs.max(1), rng, |r| f.dual_value(r))
}

/// Midpoint concavity of `F` on random pairs in Γ₊.
pub fn check_concave<F: SymmetricFunction, R: Rng>(f: &F, pairs: usize, rng: &mut R) -> Verdict {
    midpoint_check(f.dim(), pairs.max(1), rng, |k| f.value(k))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVerdict {
    pub vanishes: bool,
    /// `(t, F_*(t, 1, …, 1))` for decreasing `t`.
    pub values: Vec<(f64, f64)>,
    /// Local log-log slope of `F_*` over the last decade of `t`.
    pub tail_exponent: f64,
}

/// Smallest tail exponent accepted as power-law decay to zero.
pub const MIN_TAIL_EXPONENT: f64 = 1e-2;

/// Probes `F_*(t, 1, …, 1)` as `t ↓ 0` over the given (decreasing) sequence.
/// The dual vanishes on ∂Γ₊ when the values decrease monotonically and decay
/// like a positive power of `t` in the tail; a positive limit shows up as a
/// tail exponent tending to zero.
pub fn check_dual_boundary<F: SymmetricFunction>(f: &F, ts: &[f64]) -> BoundaryVerdict {
    let n = f.dim();
    let mut r = [1.0; MAX_DIM];
    let values: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| {
            r[0] = t;
            (t, f.dual_value(&r[..n]))
        })
        .collect();
    let monotone = values.windows(2).all(|w| w[1].1 < w[0].1);
    let tail_exponent = match values.len() {
        0 | 1 => 0.0,
        len => {
            let (t0, v0) = values[len - 2];
            let (t1, v1) = values[len - 1];
            (v0 / v1).ln() / (t0 / t1).ln()
        }
    };
    BoundaryVerdict {
        vanishes: monotone && tail_exponent >= MIN_TAIL_EXPONENT,
        values,
        tail_exponent,
    }
}

/// `t = 10^{-1}, …, 10^{-12}`.
pub fn default_boundary_sequence() -> Vec<f64> {
    (1..=12).map(|j| 10f64.powi(-j)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaEpsReport {
    pub holds: bool,
    pub eps: f64,
    pub gamma: f64,
    /// Smallest constant consistent with every sample.
    pub fitted_constant: f64,
    /// Constant from the chained Newton–Maclaurin type inequality.
    pub constructive_constant: f64,
    pub samples: usize,
}

/// Samples `κ ∈ [ε, 10³]ⁿ` and fits the smallest `C_ε` with
/// `max_i F^{ii}κ_i² ≤ C_ε F^γ`.
pub fn check_lambda_eps<R: Rng>(
    f: &CurvatureFunction,
    eps: f64,
    samples: usize,
    rng: &mut R,
) -> Result<LambdaEpsReport> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {eps}")));
    }
    let (gamma, bound) = match (f.lambda_gamma(), f.lambda_constant(eps)) {
        (Some(g), Some(c)) => (g, c),
        _ => {
            return Err(Error::NotClassified(
                "no Lambda_eps exponent is known for dual curvature functions".into(),
            ))
        }
    };
    let n = f.n;
    let mut k = [0.0; MAX_DIM];
    let mut g = [0.0; MAX_DIM];
    let mut fitted: f64 = 0.0;
    let hi = SAMPLE_HI.max(eps * 10.0);
    for _ in 0..samples.max(1) {
        sample_cone(rng, n, eps, hi, &mut k);
        let value = f.grad_into(&k[..n], &mut g[..n]);
        let lhs = (0..n).map(|i| g[i] * k[i] * k[i]).fold(0.0, f64::max);
        fitted = fitted.max(lhs / value.powf(gamma));
    }
    Ok(LambdaEpsReport {
        holds: fitted.is_finite() && fitted <= 10.0 * bound,
        eps,
        gamma,
        fitted_constant: fitted,
        constructive_constant: bound,
        samples: samples.max(1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub function: CurvatureFunction,
    pub inverse_concave: Verdict,
    pub concave: Verdict,
    pub dual_vanishes_on_boundary: BoundaryVerdict,
    pub lambda_eps: Option<LambdaEpsReport>,
    pub samples_used: usize,
}

pub fn structure_report<R: Rng>(f: &CurvatureFunction, samples: usize, eps: f64, rng: &mut R) -> StructureReport {
    let inverse_concave = check_inverse_concave(f, samples, rng);
    let concave = check_concave(f, samples, rng);
    let boundary = check_dual_boundary(f, &default_boundary_sequence());
    let lambda_eps = check_lambda_eps(f, eps, samples, rng).ok();
    StructureReport {
        function: *f,
        inverse_concave,
        concave,
        dual_vanishes_on_boundary: boundary,
        lambda_eps,
        samples_used: 2 * samples + lambda_eps.map_or(0, |r| r.samples),
    }
}
