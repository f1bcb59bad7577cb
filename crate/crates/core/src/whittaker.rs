//! The matrix Whittaker kernel `K(x,y)` on `R* = R_+ ⊔ R_-`, its correlation
//! determinants, and numerical verification of the closed forms and
//! symmetries it satisfies.
//!
//! With `t = z z'`, `mu = (z - z')/2` and the four scalar functions
//!
//! ```text
//! A_+(x) = x^{-1/2} W_{(z+z'+1)/2, mu}(x)    B_+(x) = x^{-1/2} W_{(z+z'-1)/2, mu}(x)
//! A_-(x) = x^{-1/2} W_{(-z-z'+1)/2, mu}(x)   B_-(x) = x^{-1/2} W_{(-z-z'-1)/2, mu}(x)
//! ```
//!
//! the kernel blocks (block arguments positive) are
//!
//! ```text
//! K_{++}(x,y) =  (A_+(x)B_+(y) - B_+(x)A_+(y)) / (Gamma(z)Gamma(z') (x-y))
//! K_{+-}(x,y) =  sqrt(sin pi z sin pi z')/pi * (A_+(x)A_-(y) + t B_+(x)B_-(y)) / (x+y)
//! K_{-+}(x,y) = -sqrt(sin pi z sin pi z')/pi * (A_+(y)A_-(x) + t B_+(y)B_-(x)) / (x+y)
//! K_{--}(x,y) =  (A_-(x)B_-(y) - B_-(x)A_-(y)) / (Gamma(-z)Gamma(-z') (x-y))
//! ```
//!
//! `K` is J-symmetric: the diagonal blocks are symmetric and
//! `K_{+-}(x,y) = -K_{-+}(y,x)`.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numerics::{integrate_1d, integrate_2d, DenseMatrix, Domain, QuadratureSpec};
use crate::specfun::{gamma, whittaker_w, whittaker_w_deriv, WhittakerArgs};

/// Validated kernel parameter pair: `z, z'` real, non-integer, inside the
/// same unit interval `(m, m+1)`.
#[derive(Debug, Clone, Copy)]
pub struct KernelParams {
    z: f64,
    zp: f64,
    /// t = z z' (> 0 under the admissibility condition).
    t: f64,
    /// The integer m with m < z, z' < m+1.
    interval: i64,
    mu: f64,
    /// 1 / (Gamma(z) Gamma(z')).
    inv_gamma_pp: f64,
    /// 1 / (Gamma(-z) Gamma(-z')).
    inv_gamma_mm: f64,
    /// sqrt(sin(pi z) sin(pi z')) / pi.
    sqrt_sin_over_pi: f64,
}

/// Spec-level alias for [`KernelParams::validate`].
pub fn validate_params(z: f64, zp: f64) -> Result<KernelParams> {
    KernelParams::validate(z, zp)
}

impl KernelParams {
    pub fn validate(z: f64, zp: f64) -> Result<KernelParams> {
        if !z.is_finite() || !zp.is_finite() {
            return Err(Error::InvalidParams(format!(
                "z and z' must be finite reals, got z = {z}, z' = {zp} \
                 (complex-conjugate pairs are an unsupported mode)"
            )));
        }
        if z == z.floor() || zp == zp.floor() {
            return Err(Error::InvalidParams(format!(
                "z and z' must not be integers, got z = {z}, z' = {zp}"
            )));
        }
        let m = z.floor();
        if zp.floor() != m {
            return Err(Error::InvalidParams(format!(
                "z and z' must lie in the same unit interval (m, m+1): \
                 z = {z} is in ({}, {}), z' = {zp} is in ({}, {})",
                m,
                m + 1.0,
                zp.floor(),
                zp.floor() + 1.0
            )));
        }
        let t = z * zp;
        let sin_prod = (std::f64::consts::PI * z).sin() * (std::f64::consts::PI * zp).sin();
        debug_assert!(t > 0.0 && sin_prod > 0.0);
        Ok(KernelParams {
            z,
            zp,
            t,
            interval: m as i64,
            mu: (z - zp) / 2.0,
            inv_gamma_pp: 1.0 / (gamma(z)? * gamma(zp)?),
            inv_gamma_mm: 1.0 / (gamma(-z)? * gamma(-zp)?),
            sqrt_sin_over_pi: sin_prod.sqrt() / std::f64::consts::PI,
        })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn zp(&self) -> f64 {
        self.zp
    }

    /// The derived constant t = z z'.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// The integer m with m < z, z' < m+1.
    pub fn interval_index(&self) -> i64 {
        self.interval
    }

    /// The constant `sqrt(sin pi z sin pi z')/pi` appearing in the mixed
    /// blocks.
    pub fn sqrt_sin_over_pi(&self) -> f64 {
        self.sqrt_sin_over_pi
    }

    fn w_over_sqrt(&self, kappa: f64, x: f64) -> Result<f64> {
        let w = whittaker_w(WhittakerArgs { kappa, mu: self.mu, x })?;
        Ok(w / x.sqrt())
    }

    fn w_over_sqrt_deriv(&self, kappa: f64, x: f64) -> Result<f64> {
        let args = WhittakerArgs { kappa, mu: self.mu, x };
        let w = whittaker_w(args)?;
        let dw = whittaker_w_deriv(args)?;
        Ok(dw / x.sqrt() - 0.5 * w / (x * x.sqrt()))
    }

    pub fn a_plus(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        self.w_over_sqrt((self.z + self.zp + 1.0) / 2.0, x)
    }

    pub fn b_plus(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        self.w_over_sqrt((self.z + self.zp - 1.0) / 2.0, x)
    }

    pub fn a_minus(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        self.w_over_sqrt((-self.z - self.zp + 1.0) / 2.0, x)
    }

    pub fn b_minus(&self, x: f64) -> Result<f64> {
        check_positive(x)?;
        self.w_over_sqrt((-self.z - self.zp - 1.0) / 2.0, x)
    }

    fn a_plus_deriv(&self, x: f64) -> Result<f64> {
        self.w_over_sqrt_deriv((self.z + self.zp + 1.0) / 2.0, x)
    }

    fn b_plus_deriv(&self, x: f64) -> Result<f64> {
        self.w_over_sqrt_deriv((self.z + self.zp - 1.0) / 2.0, x)
    }

    fn a_minus_deriv(&self, x: f64) -> Result<f64> {
        self.w_over_sqrt_deriv((-self.z - self.zp + 1.0) / 2.0, x)
    }

    fn b_minus_deriv(&self, x: f64) -> Result<f64> {
        self.w_over_sqrt_deriv((-self.z - self.zp - 1.0) / 2.0, x)
    }

    /// `K_{++}(x,y)` for block coordinates x, y > 0.
    pub fn block_pp(&self, x: f64, y: f64) -> Result<f64> {
        check_positive(x)?;
        check_positive(y)?;
        if near_diagonal(x, y) {
            // L'Hopital at the midpoint: second-order accurate in (x - y).
            let m = 0.5 * (x + y);
            return Ok(self.inv_gamma_pp
                * (self.a_plus_deriv(m)? * self.b_plus(m)?
                    - self.a_plus(m)? * self.b_plus_deriv(m)?));
        }
        Ok(self.inv_gamma_pp
            * (self.a_plus(x)? * self.b_plus(y)? - self.b_plus(x)? * self.a_plus(y)?)
            / (x - y))
    }

    /// `K_{+-}(x,y)` for block coordinates x, y > 0 (point arguments x, -y).
    pub fn block_pm(&self, x: f64, y: f64) -> Result<f64> {
        check_positive(x)?;
        check_positive(y)?;
        Ok(self.sqrt_sin_over_pi
            * (self.a_plus(x)? * self.a_minus(y)? + self.t * self.b_plus(x)? * self.b_minus(y)?)
            / (x + y))
    }

    /// `K_{-+}(x,y)` for block coordinates x, y > 0 (point arguments -x, y).
    pub fn block_mp(&self, x: f64, y: f64) -> Result<f64> {
        check_positive(x)?;
        check_positive(y)?;
        Ok(-self.sqrt_sin_over_pi
            * (self.a_plus(y)? * self.a_minus(x)? + self.t * self.b_plus(y)? * self.b_minus(x)?)
            / (x + y))
    }

    /// `K_{--}(x,y)` for block coordinates x, y > 0 (point arguments -x, -y).
    pub fn block_mm(&self, x: f64, y: f64) -> Result<f64> {
        check_positive(x)?;
        check_positive(y)?;
        if near_diagonal(x, y) {
            let m = 0.5 * (x + y);
            return Ok(self.inv_gamma_mm
                * (self.a_minus_deriv(m)? * self.b_minus(m)?
                    - self.a_minus(m)? * self.b_minus_deriv(m)?));
        }
        Ok(self.inv_gamma_mm
            * (self.a_minus(x)? * self.b_minus(y)? - self.b_minus(x)? * self.a_minus(y)?)
            / (x - y))
    }

    /// Kernel value at signed points: negative coordinates enter through
    /// their absolute value, e.g. `K(x, Y) = K_{+-}(x, |Y|)` for x > 0 > Y.
    pub fn kernel(&self, x: SignedPoint, y: SignedPoint) -> Result<f64> {
        let (xv, yv) = (x.value(), y.value());
        match (xv > 0.0, yv > 0.0) {
            (true, true) => self.block_pp(xv, yv),
            (true, false) => self.block_pm(xv, -yv),
            (false, true) => self.block_mp(-xv, yv),
            (false, false) => self.block_mm(-xv, -yv),
        }
    }

    /// Diagonal value `K(x,x)` (the one-point correlation density rho_1).
    pub fn kernel_diag(&self, x: SignedPoint) -> Result<f64> {
        let v = x.value();
        if v > 0.0 {
            Ok(self.inv_gamma_pp
                * (self.a_plus_deriv(v)? * self.b_plus(v)?
                    - self.a_plus(v)? * self.b_plus_deriv(v)?))
        } else {
            let u = -v;
            Ok(self.inv_gamma_mm
                * (self.a_minus_deriv(u)? * self.b_minus(u)?
                    - self.a_minus(u)? * self.b_minus_deriv(u)?))
        }
    }

    /// n-point correlation function: `det [K(x_i, x_j)]`. The empty
    /// configuration gives 1.
    pub fn correlation(&self, config: &Configuration) -> Result<f64> {
        let pts = config.points();
        let n = pts.len();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = if i == j {
                    self.kernel_diag(pts[i])?
                } else {
                    self.kernel(pts[i], pts[j])?
                };
            }
        }
        m.det()
    }

    /// The closed-form `Ntilde` blocks: the kernel conjugated by the gauge
    /// factor `g(u) = |u|^{(z+z')/2} e^{-u/2}`, together with the constant
    /// the kernel redistributes between its off-diagonal blocks:
    /// `Ntilde(x,y) = c^s g(x)/g(y) K(x,y)` with
    /// `c = sqrt(sin pi z sin pi z')/pi` and `s = +1, -1, 0` on the
    /// `(+,-)`, `(-,+)` and equal-sign blocks. Both the gauge and the
    /// constant cancel in determinants, so `det[Ntilde] = det[K]` over any
    /// configuration.
    pub fn ntilde(&self, x: SignedPoint, y: SignedPoint) -> Result<f64> {
        let k = self.kernel(x, y)?;
        let (xv, yv) = (x.value(), y.value());
        let s = (self.z + self.zp) / 2.0;
        let gauge = (xv.abs() / yv.abs()).powf(s) * ((yv - xv) / 2.0).exp();
        let block_const = match (xv > 0.0, yv > 0.0) {
            (true, false) => self.sqrt_sin_over_pi,
            (false, true) => 1.0 / self.sqrt_sin_over_pi,
            _ => 1.0,
        };
        Ok(block_const * gauge * k)
    }

    /// Determinant of the `Ntilde` matrix over a configuration.
    pub fn ntilde_correlation(&self, config: &Configuration) -> Result<f64> {
        let pts = config.points();
        let n = pts.len();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = if i == j {
                    self.kernel_diag(pts[i])?
                } else {
                    self.ntilde(pts[i], pts[j])?
                };
            }
        }
        m.det()
    }
}

fn check_positive(x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("block coordinate must be > 0, got {x}")))
    }
}

// Inside this band the 0/0 quotient of the diagonal blocks cancels
// catastrophically; route through the derivative formula instead.
const DIAGONAL_BAND: f64 = 1e-6;

fn near_diagonal(x: f64, y: f64) -> bool {
    (x - y).abs() < DIAGONAL_BAND * x.abs().max(y.abs())
}

/// A point of the punctured line `R* = R_+ ⊔ R_-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedPoint(f64);

impl SignedPoint {
    pub fn new(value: f64) -> Result<Self> {
        if value == 0.0 || !value.is_finite() {
            return Err(Error::Domain(format!(
                "points live on R* and must be finite and nonzero, got {value}"
            )));
        }
        Ok(SignedPoint(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Finite ordered configuration of points on `R*`; duplicates are permitted
/// (the correlation determinant then vanishes).
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    points: Vec<SignedPoint>,
}

impl Configuration {
    pub fn new(points: Vec<SignedPoint>) -> Self {
        Configuration { points }
    }

    pub fn from_values(values: &[f64]) -> Result<Self> {
        Ok(Configuration {
            points: values
                .iter()
                .map(|&v| SignedPoint::new(v))
                .collect::<Result<_>>()?,
        })
    }

    pub fn points(&self) -> &[SignedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Residuals of the three Stieltjes-transform relations tying the mixed
/// block to the other three:
///
/// ```text
/// N_{++}(x,y) = int_0^inf N_{+-}(x,s)/(s+y) ds
/// N_{--}(x,y) = int_0^inf N_{+-}(r,y)/(r+x) dr
/// N_{-+}(x,y) = iint N_{+-}(r,s)/((r+x)(s+y)) dr ds - 1/(x+y)
/// ```
///
/// Each residual is relative to the closed-form value.
#[derive(Debug, Clone, Copy)]
pub struct StieltjesReport {
    pub residual_pp: f64,
    pub residual_mm: f64,
    pub residual_mp: f64,
}

impl StieltjesReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_pp.max(self.residual_mm).max(self.residual_mp)
    }
}

/// Memoizing evaluator of the `Ntilde_{+-}` closed form; the quadratures
/// below revisit each W index family at thousands of abscissae.
struct CachedMixedBlock<'a> {
    params: &'a KernelParams,
    values: RefCell<HashMap<(u8, u64), f64>>,
    failure: RefCell<Option<Error>>,
}

impl<'a> CachedMixedBlock<'a> {
    fn new(params: &'a KernelParams) -> Self {
        CachedMixedBlock {
            params,
            values: RefCell::new(HashMap::new()),
            failure: RefCell::new(None),
        }
    }

    fn fetch(&self, which: u8, kappa: f64, x: f64) -> f64 {
        let key = (which, x.to_bits());
        if let Some(v) = self.values.borrow().get(&key) {
            return *v;
        }
        let mu = (self.params.z - self.params.zp) / 2.0;
        let v = match whittaker_w(WhittakerArgs { kappa, mu, x }) {
            Ok(w) => w / x.sqrt(),
            Err(e) => {
                let mut slot = self.failure.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                f64::NAN
            }
        };
        self.values.borrow_mut().insert(key, v);
        v
    }

    /// `Ntilde_{+-}(x, y)` for x, y > 0.
    fn ntilde_pm(&self, x: f64, y: f64) -> f64 {
        let p = self.params;
        let (z, zp, t) = (p.z, p.zp, p.t);
        let s = (z + zp) / 2.0;
        let a_p = self.fetch(0, (z + zp + 1.0) / 2.0, x);
        let b_p = self.fetch(1, (z + zp - 1.0) / 2.0, x);
        let a_m = self.fetch(2, (-z - zp + 1.0) / 2.0, y);
        let b_m = self.fetch(3, (-z - zp - 1.0) / 2.0, y);
        p.sqrt_sin_over_pi.powi(2)
            * (x / y).powf(s)
            * ((-x - y) / 2.0).exp()
            * (a_p * a_m + t * b_p * b_m)
            / (x + y)
    }

    fn into_failure(self) -> Option<Error> {
        self.failure.into_inner()
    }
}

/// Numerically certify the closed forms of `N_{++}`, `N_{--}`, `N_{-+}`
/// against Stieltjes transforms of `N_{+-}` at one pair of positive
/// coordinates.
pub fn verify_stieltjes_consistency(
    params: &KernelParams,
    x: f64,
    y: f64,
    spec: &QuadratureSpec,
) -> Result<StieltjesReport> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::Domain("Stieltjes check requires x, y > 0".into()));
    }
    spec.validate()?;
    let cache = CachedMixedBlock::new(params);

    let pt = |v: f64| SignedPoint::new(v).expect("nonzero");
    let closed_pp = params.ntilde(pt(x), pt(y))?;
    let closed_mm = params.ntilde(pt(-x), pt(-y))?;
    let closed_mp = params.ntilde(pt(-x), pt(y))?;

    let q_pp = integrate_1d(
        |s| cache.ntilde_pm(x, s) / (s + y),
        Domain::HalfLine { start: 0.0 },
        spec,
    );
    let q_mm = integrate_1d(
        |r| cache.ntilde_pm(r, y) / (r + x),
        Domain::HalfLine { start: 0.0 },
        spec,
    );
    let q_mp = integrate_2d(
        |r, s| cache.ntilde_pm(r, s) / ((r + x) * (s + y)),
        Domain::HalfLine { start: 0.0 },
        Domain::HalfLine { start: 0.0 },
        spec,
    );
    if let Some(e) = cache.into_failure() {
        return Err(e);
    }
    let q_pp = q_pp?;
    let q_mm = q_mm?;
    let q_mp = q_mp?;

    Ok(StieltjesReport {
        residual_pp: (q_pp.value - closed_pp).abs() / closed_pp.abs(),
        residual_mm: (q_mm.value - closed_mm).abs() / closed_mm.abs(),
        residual_mp: (q_mp.value - 1.0 / (x + y) - closed_mp).abs() / closed_mp.abs(),
    })
}

/// Largest absolute violation of the three J-symmetry relations over the
/// given sample pairs of positive coordinates.
#[derive(Debug, Clone, Copy, Default)]
pub struct JSymmetryReport {
    pub max_violation: f64,
    /// Pair and relation (0: ++, 1: --, 2: mixed) attaining the maximum.
    pub worst: Option<((f64, f64), u8)>,
}

pub fn verify_j_symmetry(params: &KernelParams, samples: &[(f64, f64)]) -> Result<JSymmetryReport> {
    let mut report = JSymmetryReport::default();
    for &(x, y) in samples {
        let checks = [
            (params.block_pp(x, y)? - params.block_pp(y, x)?, 0u8),
            (params.block_mm(x, y)? - params.block_mm(y, x)?, 1u8),
            (params.block_pm(x, y)? + params.block_mp(y, x)?, 2u8),
        ];
        for (violation, which) in checks {
            if violation.abs() > report.max_violation {
                report.max_violation = violation.abs();
                report.worst = Some(((x, y), which));
            }
        }
    }
    Ok(report)
}
