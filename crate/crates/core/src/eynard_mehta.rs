//! Two coupled random matrices: the coupling weight
//! `w(x,y) = exp(-U(y) - V(x) + c x y)`, pairing moments, biorthogonal
//! polynomials, the block kernel built from `H(x,y) = sum_i P_i(x) Q_i(y)`,
//! correlation functions as block determinants, a brute-force oracle that
//! integrates the eigenvalue density directly, and a Monte Carlo sampler for
//! the Gaussian case.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::numerics::{
    integrate_1d, ldu_biorthogonalize, sym_eigenvalues, DenseMatrix, Domain, Quadrature,
    QuadratureSpec, RngStream,
};

/// Polynomial potentials `U`, `V` (coefficients by ascending power),
/// coupling constant `c`, and matrix size `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoMatrixModel {
    u_coeffs: Vec<f64>,
    v_coeffs: Vec<f64>,
    c: f64,
    n: usize,
}

fn poly_degree(coeffs: &[f64]) -> usize {
    coeffs
        .iter()
        .rposition(|&c| c != 0.0)
        .unwrap_or(0)
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

impl TwoMatrixModel {
    /// Validates the potential shape: even degree with positive leading
    /// coefficient (constant potentials are admitted for weight-only use;
    /// integration requires degree >= 2).
    pub fn new(u_coeffs: Vec<f64>, v_coeffs: Vec<f64>, c: f64, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::Domain("matrix size N must be >= 1".into()));
        }
        if u_coeffs.is_empty() || v_coeffs.is_empty() {
            return Err(Error::Domain("potential coefficient arrays must be nonempty".into()));
        }
        if !c.is_finite() {
            return Err(Error::Domain("coupling c must be finite".into()));
        }
        for (name, coeffs) in [("U", &u_coeffs), ("V", &v_coeffs)] {
            let deg = poly_degree(coeffs);
            if deg % 2 != 0 {
                return Err(Error::Domain(format!("{name} must have even degree, got {deg}")));
            }
            if deg > 0 && coeffs[deg] <= 0.0 {
                return Err(Error::Domain(format!(
                    "{name} must have a positive leading coefficient, got {}",
                    coeffs[deg]
                )));
            }
        }
        Ok(TwoMatrixModel {
            u_coeffs,
            v_coeffs,
            c,
            n,
        })
    }

    /// Parse from the JSON object `{"U": [...], "V": [...], "c": ..., "N": ...}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct ModelFile {
            #[serde(rename = "U")]
            u: Vec<f64>,
            #[serde(rename = "V")]
            v: Vec<f64>,
            c: f64,
            #[serde(rename = "N")]
            n: usize,
        }
        let parsed: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::Domain(format!("invalid model file: {e}")))?;
        TwoMatrixModel::new(parsed.u, parsed.v, parsed.c, parsed.n)
    }

    pub fn u_coeffs(&self) -> &[f64] {
        &self.u_coeffs
    }

    pub fn v_coeffs(&self) -> &[f64] {
        &self.v_coeffs
    }

    pub fn coupling(&self) -> f64 {
        self.c
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn eval_u(&self, x: f64) -> f64 {
        poly_eval(&self.u_coeffs, x)
    }

    pub fn eval_v(&self, x: f64) -> f64 {
        poly_eval(&self.v_coeffs, x)
    }

    /// `(a, b)` when `U = a x^2`, `V = b x^2` exactly.
    fn pure_quadratic(&self) -> Option<(f64, f64)> {
        let quad = |c: &[f64]| -> Option<f64> {
            if poly_degree(c) == 2 && c[0] == 0.0 && c[1] == 0.0 {
                Some(c[2])
            } else {
                None
            }
        };
        Some((quad(&self.u_coeffs)?, quad(&self.v_coeffs)?))
    }

    /// Joint integrability of the pairing weight.
    fn check_integrable(&self) -> Result<()> {
        let (du, dv) = (poly_degree(&self.u_coeffs), poly_degree(&self.v_coeffs));
        if du < 2 || dv < 2 {
            return Err(Error::Domain(
                "pairing integrals need deg U >= 2 and deg V >= 2".into(),
            ));
        }
        if let Some((a, b)) = self.pure_quadratic() {
            if 4.0 * a * b <= self.c * self.c {
                return Err(Error::Domain(format!(
                    "quadratic model needs 4ab > c^2, got a = {a}, b = {b}, c = {}",
                    self.c
                )));
            }
        }
        Ok(())
    }
}

/// The coupling weight `w(x,y) = exp(-U(y) - V(x) + c x y)`.
pub fn weight(model: &TwoMatrixModel, x: f64, y: f64) -> f64 {
    (-model.eval_u(y) - model.eval_v(x) + model.c * x * y).exp()
}

/// Integral of a decaying integrand over the whole real line. The domain is
/// truncated where the integrand falls below 1e-18 of its observed maximum.
fn integrate_real_line<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<Quadrature> {
    let mut r = 1.0f64;
    let mut max_abs = 0.0f64;
    loop {
        for i in 0..=16 {
            let x = -r + 2.0 * r * (i as f64) / 16.0;
            max_abs = max_abs.max(f(x).abs());
        }
        let edge = f(-r).abs().max(f(r).abs());
        if r >= 4.0 && edge <= 1e-18 * max_abs.max(f64::MIN_POSITIVE) {
            break;
        }
        r *= 2.0;
        if r > 6.7e7 {
            return Err(Error::Domain(
                "integrand does not decay on the real line".into(),
            ));
        }
    }
    if max_abs == 0.0 {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    // Integrals that vanish by symmetry can never meet a purely relative
    // tolerance; floor the absolute tolerance at roundoff relative to the
    // integrand scale.
    let eff = QuadratureSpec {
        rel_tol: spec.rel_tol,
        abs_tol: spec.abs_tol.max(1e-14 * max_abs * r),
        max_subdivisions: spec.max_subdivisions,
    };
    integrate_1d(&f, Domain::Finite(-r, r), &eff)
}

/// Moment matrix of the pairing `<f, g> = iint f(x) g(y) w(y, x) dx dy`:
/// `M[(i, j)] = <x^i, y^j>` for `0 <= i, j < N`.
pub fn pairing_moments(model: &TwoMatrixModel, spec: &QuadratureSpec) -> Result<DenseMatrix> {
    model.check_integrable()?;
    let n = model.n;
    let spec = QuadratureSpec {
        rel_tol: spec.rel_tol.min(1e-10),
        abs_tol: spec.abs_tol.min(1e-16),
        max_subdivisions: spec.max_subdivisions.max(2000),
    };
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let failure = RefCell::new(None::<Error>);
            let outer = integrate_real_line(
                |x| {
                    let inner = integrate_real_line(
                        |y| y.powi(j as i32) * (-model.eval_v(y) + model.c * x * y).exp(),
                        &spec,
                    );
                    match inner {
                        Ok(q) => x.powi(i as i32) * (-model.eval_u(x)).exp() * q.value,
                        Err(e) => {
                            let mut slot = failure.borrow_mut();
                            if slot.is_none() {
                                *slot = Some(e);
                            }
                            f64::NAN
                        }
                    }
                },
                &spec,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            m[(i, j)] = outer?.value;
        }
    }
    Ok(m)
}

/// Coefficient triangles of the biorthogonal polynomials `P_0..P_{N-1}`,
/// `Q_0..Q_{N-1}` (ascending powers; `deg P_i = deg Q_i = i`).
#[derive(Debug, Clone, PartialEq)]
pub struct BiorthogonalSystem {
    p: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
}

impl BiorthogonalSystem {
    pub fn size(&self) -> usize {
        self.p.len()
    }

    pub fn p_coeffs(&self, i: usize) -> &[f64] {
        &self.p[i]
    }

    pub fn q_coeffs(&self, i: usize) -> &[f64] {
        &self.q[i]
    }

    pub fn eval_p(&self, i: usize, x: f64) -> f64 {
        poly_eval(&self.p[i], x)
    }

    pub fn eval_q(&self, i: usize, y: f64) -> f64 {
        poly_eval(&self.q[i], y)
    }

    /// `H(x,y) = sum_{i=0}^{N-1} P_i(x) Q_i(y)`.
    pub fn kernel_h(&self, x: f64, y: f64) -> f64 {
        (0..self.p.len())
            .map(|i| self.eval_p(i, x) * self.eval_q(i, y))
            .sum()
    }
}

/// Build the biorthogonal system from the moment matrix via `M = L D U`:
/// `P = S_P L^{-1}`, `Q = S_Q (U^{-1})^T` on the monomial basis, with the
/// symmetric normalization `S_P = |D|^{-1/2}` and the sign carried by `Q`
/// (`S_Q = sign(D) |D|^{-1/2}`), so that `<P_i, Q_j> = delta_ij`.
pub fn biorthogonalize(moments: &DenseMatrix) -> Result<BiorthogonalSystem> {
    let f = ldu_biorthogonalize(moments)?;
    let n = f.d.len();

    // Inverse of the unit lower factor (also unit lower).
    let mut linv = DenseMatrix::identity(n);
    for i in 0..n {
        for j in 0..i {
            let mut s = 0.0;
            for m in j..i {
                s -= f.l[(i, m)] * linv[(m, j)];
            }
            linv[(i, j)] = s;
        }
    }
    // Inverse of the unit upper factor (also unit upper).
    let mut uinv = DenseMatrix::identity(n);
    for j in (0..n).rev() {
        for i in (0..j).rev() {
            let mut s = 0.0;
            for m in (i + 1)..=j {
                s -= f.u[(i, m)] * uinv[(m, j)];
            }
            uinv[(i, j)] = s;
        }
    }

    let mut p = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        let sp = f.d[i].abs().powf(-0.5);
        let sq = f.d[i].signum() * sp;
        p.push((0..=i).map(|k| sp * linv[(i, k)]).collect());
        q.push((0..=i).map(|k| sq * uinv[(k, i)]).collect());
    }
    Ok(BiorthogonalSystem { p, q })
}

/// One block of the Eynard–Mehta kernel (`i, j` in `{1, 2}`):
///
/// ```text
/// K_11(x,y) = int H(x,s) w(s,y) ds        K_12(x,y) = H(x,y)
/// K_21(x,y) = iint w(x,r) H(r,s) w(s,y) dr ds - w(x,y)
/// K_22(x,y) = int w(x,r) H(r,y) dr
/// ```
pub fn em_kernel_block(
    sys: &BiorthogonalSystem,
    model: &TwoMatrixModel,
    i: usize,
    j: usize,
    x: f64,
    y: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    model.check_integrable()?;
    match (i, j) {
        (1, 1) => Ok(integrate_real_line(|s| sys.kernel_h(x, s) * weight(model, s, y), spec)?.value),
        (1, 2) => Ok(sys.kernel_h(x, y)),
        (2, 1) => {
            let failure = RefCell::new(None::<Error>);
            let outer = integrate_real_line(
                |r| {
                    let inner =
                        integrate_real_line(|s| sys.kernel_h(r, s) * weight(model, s, y), spec);
                    match inner {
                        Ok(q) => weight(model, x, r) * q.value,
                        Err(e) => {
                            let mut slot = failure.borrow_mut();
                            if slot.is_none() {
                                *slot = Some(e);
                            }
                            f64::NAN
                        }
                    }
                },
                spec,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            Ok(outer?.value - weight(model, x, y))
        }
        (2, 2) => Ok(integrate_real_line(|r| weight(model, x, r) * sys.kernel_h(r, y), spec)?.value),
        _ => Err(Error::Domain(format!("block indices must be in {{1,2}}, got ({i},{j})"))),
    }
}

/// Positions at which the mixed correlation `rho_{k,l}` is evaluated:
/// `x1` are first-matrix eigenvalue positions, `x2` second-matrix ones.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationQuery {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
}

impl CorrelationQuery {
    pub fn new(x1: Vec<f64>, x2: Vec<f64>) -> Result<Self> {
        if x1.len() + x2.len() < 1 {
            return Err(Error::Domain("correlation query needs k + l >= 1 points".into()));
        }
        Ok(CorrelationQuery { x1, x2 })
    }
}

/// `rho_{k,l}` as the `(k+l) x (k+l)` block determinant, rows and columns
/// ordered first-matrix points then second-matrix points.
pub fn rho_kl(
    sys: &BiorthogonalSystem,
    model: &TwoMatrixModel,
    query: &CorrelationQuery,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (k, l) = (query.x1.len(), query.x2.len());
    if k > model.n || l > model.n {
        return Err(Error::Domain(format!(
            "rho_{{k,l}} needs k, l <= N = {}, got k = {k}, l = {l}",
            model.n
        )));
    }
    let size = k + l;
    let mut m = DenseMatrix::zeros(size, size);
    let side = |r: usize| if r < k { (1, query.x1[r]) } else { (2, query.x2[r - k]) };
    for r in 0..size {
        let (i, xr) = side(r);
        for s in 0..size {
            let (j, xs) = side(s);
            m[(r, s)] = em_kernel_block(sys, model, i, j, xr, xs, spec)?;
        }
    }
    m.det()
}

const BRUTE_N_GUARD: usize = 3;
const BRUTE_KL_GUARD: usize = 2;

fn det_w_cross(model: &TwoMatrixModel, x1: &[f64], x2: &[f64]) -> f64 {
    let n = x1.len();
    let m = DenseMatrix::from_fn(n, n, |i, j| weight(model, x2[i], x1[j]));
    m.det().expect("square")
}

fn vandermonde(xs: &[f64]) -> f64 {
    let mut p = 1.0;
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            p *= xs[i] - xs[j];
        }
    }
    p
}

/// Unnormalized joint eigenvalue density
/// `det[w(x_{2i}, x_{1j})] * prod_{i<j} (x_{1i}-x_{1j})(x_{2i}-x_{2j})`.
fn density_unnormalized(model: &TwoMatrixModel, x1: &[f64], x2: &[f64]) -> f64 {
    det_w_cross(model, x1, x2) * vandermonde(x1) * vandermonde(x2)
}

/// Nested adaptive integrator over `dims` real-line variables.
struct NestedIntegrator<'a> {
    spec: &'a QuadratureSpec,
    failure: RefCell<Option<Error>>,
}

impl<'a> NestedIntegrator<'a> {
    fn new(spec: &'a QuadratureSpec) -> Self {
        NestedIntegrator {
            spec,
            failure: RefCell::new(None),
        }
    }

    fn run(&self, dims: usize, f: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
        let buf = RefCell::new(Vec::with_capacity(dims));
        let v = self.go(dims, f, &buf);
        if let Some(e) = self.failure.borrow_mut().take() {
            return Err(e);
        }
        Ok(v)
    }

    fn go(&self, dims_left: usize, f: &dyn Fn(&[f64]) -> f64, buf: &RefCell<Vec<f64>>) -> f64 {
        if dims_left == 0 {
            return f(&buf.borrow());
        }
        let result = integrate_real_line(
            |x| {
                buf.borrow_mut().push(x);
                let v = self.go(dims_left - 1, f, buf);
                buf.borrow_mut().pop();
                v
            },
            self.spec,
        );
        match result {
            Ok(q) => q.value,
            Err(e) => {
                let mut slot = self.failure.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                f64::NAN
            }
        }
    }
}

/// Direct numerical integration of the eigenvalue density: normalizes by
/// `int p_N = 1` computed the same way, then integrates out the mute
/// variables with the `N!^2 / ((N-k)!(N-l)!)` prefactor. Guarded to
/// `N <= 3`, `k + l <= 2` (the dimension of the normalization integral is
/// `2N`).
pub fn brute_force_rho(
    model: &TwoMatrixModel,
    query: &CorrelationQuery,
    spec: &QuadratureSpec,
) -> Result<f64> {
    model.check_integrable()?;
    let n = model.n;
    let (k, l) = (query.x1.len(), query.x2.len());
    if n > BRUTE_N_GUARD {
        return Err(Error::SizeGuard(format!(
            "brute-force correlation limited to N <= {BRUTE_N_GUARD}, got N = {n}"
        )));
    }
    if k + l > BRUTE_KL_GUARD {
        return Err(Error::SizeGuard(format!(
            "brute-force correlation limited to k + l <= {BRUTE_KL_GUARD}, got {}",
            k + l
        )));
    }
    if k > n || l > n {
        return Err(Error::Domain(format!("need k, l <= N, got k = {k}, l = {l}")));
    }

    let integrator = NestedIntegrator::new(spec);
    let z = integrator.run(2 * n, &|vars: &[f64]| {
        density_unnormalized(model, &vars[0..n], &vars[n..2 * n])
    })?;
    if z == 0.0 || !z.is_finite() {
        return Err(Error::Domain(format!("density normalization failed: Z = {z}")));
    }

    let integrator = NestedIntegrator::new(spec);
    let mute = 2 * n - k - l;
    let value = integrator.run(mute, &|vars: &[f64]| {
        let mut x1 = Vec::with_capacity(n);
        x1.extend_from_slice(&query.x1);
        x1.extend_from_slice(&vars[0..n - k]);
        let mut x2 = Vec::with_capacity(n);
        x2.extend_from_slice(&query.x2);
        x2.extend_from_slice(&vars[n - k..]);
        density_unnormalized(model, &x1, &x2)
    })?;

    let mut prefactor = 1.0;
    for i in 0..k {
        prefactor *= (n - i) as f64;
    }
    for i in 0..l {
        prefactor *= (n - i) as f64;
    }
    Ok(prefactor * value / z)
}

/// Eigenvalue samples from the coupled Gaussian ensemble with matrix density
/// `F(A,B) ∝ exp(-tr{U(A) + V(B) - cAB})`, the convention under which the
/// eigenvalue density matches `w(x,y) = exp(-U(y) - V(x) + cxy)`. Requires
/// pure quadratic potentials `U = a x^2`, `V = b x^2` with `4ab > c^2`.
#[derive(Debug, Clone)]
pub struct McSample {
    /// Sorted eigenvalues of the first matrix, one row per draw.
    pub a_eigenvalues: Vec<Vec<f64>>,
    /// Sorted eigenvalues of the second matrix, one row per draw.
    pub b_eigenvalues: Vec<Vec<f64>>,
}

/// Lower Cholesky factor of the inverse of the 2x2 precision
/// `[[p11, p12], [p12, p22]]`.
fn cov_cholesky(p11: f64, p12: f64, p22: f64) -> (f64, f64, f64) {
    let det = p11 * p22 - p12 * p12;
    let (c11, c12, c22) = (p22 / det, -p12 / det, p11 / det);
    let l11 = c11.sqrt();
    let l21 = c12 / l11;
    let l22 = (c22 - l21 * l21).sqrt();
    (l11, l21, l22)
}

pub fn mc_sample(model: &TwoMatrixModel, n_samples: usize, seed: u64) -> Result<McSample> {
    let (a, b) = model.pure_quadratic().ok_or_else(|| {
        Error::Domain("Monte Carlo sampling needs pure quadratic potentials U = a x^2, V = b x^2".into())
    })?;
    let c = model.c;
    if 4.0 * a * b <= c * c {
        return Err(Error::Domain(format!(
            "Gaussian sampler needs 4ab > c^2, got a = {a}, b = {b}, c = {c}"
        )));
    }
    let n = model.n;
    // Per-coordinate-pair precisions of (A-coord, B-coord): diagonal entries
    // carry [[2a, -c], [-c, 2b]], off-diagonal re/im coordinates twice that.
    let diag_chol = cov_cholesky(2.0 * a, -c, 2.0 * b);
    let off_chol = cov_cholesky(4.0 * a, -2.0 * c, 4.0 * b);

    let mut rng = RngStream::new(seed);
    let mut a_eigs = Vec::with_capacity(n_samples);
    let mut b_eigs = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let mut re_a = DenseMatrix::zeros(n, n);
        let mut im_a = DenseMatrix::zeros(n, n);
        let mut re_b = DenseMatrix::zeros(n, n);
        let mut im_b = DenseMatrix::zeros(n, n);
        let draw = |chol: (f64, f64, f64), rng: &mut RngStream| {
            let (g1, g2) = (rng.gaussian(), rng.gaussian());
            (chol.0 * g1, chol.1 * g1 + chol.2 * g2)
        };
        for i in 0..n {
            let (u, v) = draw(diag_chol, &mut rng);
            re_a[(i, i)] = u;
            re_b[(i, i)] = v;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (u, v) = draw(off_chol, &mut rng);
                re_a[(i, j)] = u;
                re_a[(j, i)] = u;
                re_b[(i, j)] = v;
                re_b[(j, i)] = v;
                let (u, v) = draw(off_chol, &mut rng);
                im_a[(i, j)] = u;
                im_a[(j, i)] = -u;
                im_b[(i, j)] = v;
                im_b[(j, i)] = -v;
            }
        }
        a_eigs.push(hermitian_eigenvalues(&re_a, &im_a)?);
        b_eigs.push(hermitian_eigenvalues(&re_b, &im_b)?);
    }
    Ok(McSample {
        a_eigenvalues: a_eigs,
        b_eigenvalues: b_eigs,
    })
}

/// Eigenvalues of the Hermitian matrix `Re + i Im` through the realified
/// 2N x 2N symmetric embedding `[[Re, -Im], [Im, Re]]` (each eigenvalue
/// appears twice).
fn hermitian_eigenvalues(re: &DenseMatrix, im: &DenseMatrix) -> Result<Vec<f64>> {
    let n = re.rows();
    let big = DenseMatrix::from_fn(2 * n, 2 * n, |i, j| {
        match (i < n, j < n) {
            (true, true) => re[(i, j)],
            (true, false) => -im[(i, j - n)],
            (false, true) => im[(i - n, j)],
            (false, false) => re[(i - n, j - n)],
        }
    });
    let doubled = sym_eigenvalues(&big)?;
    Ok(doubled.into_iter().step_by(2).collect())
}

/// Fixed-range histogram of eigenvalue counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

pub fn histogram(values: impl Iterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Histogram {
    let mut counts = vec![0u64; bins];
    let width = (hi - lo) / bins as f64;
    for v in values {
        if v >= lo && v < hi {
            counts[((v - lo) / width) as usize] += 1;
        }
    }
    Histogram { lo, hi, counts }
}

/// Discrete mirror of the four-block formula on finite grids (sums in place
/// of integrals): takes `H` on grid_x x grid_y and `w` on grid_y x grid_x,
/// returns `(K11, K12, K21, K22)`. This is the same expression as the
/// necklace module's collapsed `Ntilde` with `H` in the role of `N`.
pub fn em_blocks_discrete(
    h: &DenseMatrix,
    w: &DenseMatrix,
) -> Result<(DenseMatrix, DenseMatrix, DenseMatrix, DenseMatrix)> {
    let nx = h.rows();
    let ny = h.cols();
    if w.rows() != ny || w.cols() != nx {
        return Err(Error::Shape("w must be grid_y x grid_x".into()));
    }
    let k11 = DenseMatrix::from_fn(nx, nx, |x, y| {
        (0..ny).map(|s| h[(x, s)] * w[(s, y)]).sum()
    });
    let k12 = h.clone();
    let k21 = DenseMatrix::from_fn(ny, ny, |x, y| {
        let mut acc = 0.0;
        for r in 0..nx {
            for s in 0..ny {
                acc += w[(x, r)] * h[(r, s)] * w[(s, y)];
            }
        }
        acc - w[(x, y)]
    });
    let k22 = DenseMatrix::from_fn(ny, nx, |x, y| {
        (0..nx).map(|r| w[(x, r)] * h[(r, y)]).sum()
    });
    Ok((k11, k12, k21, k22))
}
