//! Closed-form evaluation and caching of the memory kernels driving the
//! amplitude dynamics (`A`) and the photon population (`B`), for constant
//! and linear spectral densities, with a quadrature-based oracle path.
//!
//! Dimensionless notation throughout: `phi = omega0 (t - tau)`,
//! `r = k0 |x_i - x_j|`, `lambda = Lambda/k0 > 1`, `r± = r ± phi`,
//! `phi± = phi ± r`. The defining integrals are
//!
//! ```text
//! A(r, phi)          = ∫_0^lambda dx w(x) cos(x r) (1 - e^{i(1-x)phi})/(x - 1)
//! B(r, phi) / Gamma0 = (1/pi)  ∫_0^lambda dx w(x) 2 cos(x r) e^{i(x-1)phi}
//! ```
//!
//! with weight `w(x) = 1/(1+x)^2` (constant) or `x/(1+x)^2` (linear). The
//! closed forms are antiderivative differences built from `ci`, `si`, `csi`;
//! they blow up termwise at `r = 0` (self-kernel) and on the line `r = phi`,
//! so those take dedicated limit paths, reported via [`KernelPath`].

use crate::fnv::Fnv1a;
use crate::geometry::DistanceClasses;
use crate::specfun::{
    adaptive_quad, ci_even, csi, si_shifted, QuadOptions, SpecfunError,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Which spectral density the waveguide coupling has.
///
/// Constant: `g_k^2 = Gamma0 v_g / 2`. Linear: `g_k^2 = Gamma0 v_g |k|/(2 k0)`.
/// Both use `g_k_jc = 2 g_k omega0/(omega_k + omega0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingModel {
    Constant,
    Linear,
}

impl CouplingModel {
    /// Spectral weight `|g^JC|^2 / (2 Gamma0 v_g)` at `x = |k|/k0`.
    pub fn weight(&self, x: f64) -> f64 {
        let d = 1.0 + x;
        match self {
            CouplingModel::Constant => 1.0 / (d * d),
            CouplingModel::Linear => x / (d * d),
        }
    }

    /// `|g^JC(k)|^2` in natural units, at `x = |k|/k0`.
    pub fn g_jc_squared(&self, gamma: f64, x: f64) -> f64 {
        2.0 * gamma * self.weight(x.abs())
    }

    pub fn tag(&self) -> &'static str {
        match self {
            CouplingModel::Constant => "constant",
            CouplingModel::Linear => "linear",
        }
    }
}

impl fmt::Display for CouplingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for CouplingModel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constant" | "const" => Ok(CouplingModel::Constant),
            "linear" | "lin" => Ok(CouplingModel::Linear),
            other => Err(format!(
                "unknown coupling model '{other}' (expected \"constant\" or \"linear\")"
            )),
        }
    }
}

/// Which evaluation path produced a kernel value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelPath {
    ClosedForm,
    /// Dedicated `r = 0` self-kernel limit.
    ZeroDistanceLimit,
    /// Analytic limit on the `r = phi` line (or `phi = ±r` for B).
    LineLimitAnalytic,
    /// Quadrature fallback inside the `|r - phi|` exclusion band.
    LineLimitQuadrature,
}

impl KernelPath {
    pub fn index(&self) -> usize {
        match self {
            KernelPath::ClosedForm => 0,
            KernelPath::ZeroDistanceLimit => 1,
            KernelPath::LineLimitAnalytic => 2,
            KernelPath::LineLimitQuadrature => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub enum KernelError {
    Domain(String),
    Quadrature { r: f64, phi: f64, source: SpecfunError },
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelError::Domain(msg) => write!(f, "kernel domain error: {msg}"),
            KernelError::Quadrature { r, phi, source } => write!(
                f,
                "kernel quadrature fallback failed at (r={r}, phi={phi}): {source}"
            ),
        }
    }
}

impl std::error::Error for KernelError {}

pub type Result<T> = std::result::Result<T, KernelError>;

/// Tunables for kernel evaluation.
#[derive(Debug, Clone)]
pub struct KernelConfig {
    /// Half-width of the `|r - phi|` exclusion band around the `r = phi` line.
    pub exclusion_band: f64,
    /// Inside the band, use the analytic limit instead of quadrature.
    pub use_analytic_line_limit: bool,
    /// Absolute tolerance of the quadrature fallback.
    pub quad_tol: f64,
    pub quad_max_evals: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig {
            exclusion_band: 1e-6,
            use_analytic_line_limit: false,
            quad_tol: 1e-11,
            quad_max_evals: 30_000_000,
        }
    }
}

const ZERO_DISTANCE_EPS: f64 = 1e-12;

fn validate_common(r: f64, phi: f64, lambda: f64) -> Result<()> {
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(KernelError::Domain(format!(
            "cutoff must satisfy lambda > 1, got {lambda}"
        )));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(KernelError::Domain(format!(
            "pair distance must be finite and >= 0, got {r}"
        )));
    }
    if !phi.is_finite() {
        return Err(KernelError::Domain(format!("lag must be finite, got {phi}")));
    }
    Ok(())
}

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn expi(theta: f64) -> Complex64 {
    Complex64::new(0.0, theta).exp()
}

fn csi_c(x: f64) -> Complex64 {
    csi(x).expect("csi argument guaranteed nonzero by caller")
}

/// General-position closed form, valid for `r > 0`, `phi > 0`, `r != phi`.
fn kernel_a_general(model: CouplingModel, r: f64, phi: f64, lambda: f64) -> Complex64 {
    let rm = r - phi;
    let rp = r + phi;
    let (cos_r, sin_r) = (r.cos(), r.sin());

    // I1 = ∫ cos(x r)(1-e^{i(1-x)phi})/(x-1) dx over [0, lambda],
    // antiderivative in the shifted variable u = x-1, bounds -1 and lambda-1.
    let f1 = |u: f64| -> Complex64 {
        cx(cos_r * ci_even(u * r).unwrap() - sin_r * si_shifted(u * r), 0.0)
            - 0.5 * expi(r) * csi_c(u * rm)
            - 0.5 * expi(-r) * csi_c(u * rp).conj()
    };
    let i1 = f1(lambda - 1.0) - f1(-1.0);

    // I2 = ∫ cos(x r)(1-e^{i(1-x)phi})/(x+1) dx, shifted v = x+1, bounds 1, lambda+1.
    let f2 = |v: f64| -> Complex64 {
        cx(cos_r * ci_even(v * r).unwrap() + sin_r * si_shifted(v * r), 0.0)
            - 0.5 * expi(2.0 * phi - r) * csi_c(v * rm)
            - 0.5 * expi(2.0 * phi + r) * csi_c(v * rp).conj()
    };
    let i2 = f2(lambda + 1.0) - f2(1.0);

    // I3 = ∫ cos(x r)(1-e^{i(1-x)phi})/(1+x)^2 dx, shifted v = x+1.
    let g3 = |v: f64| -> Complex64 {
        let boundary = ((v - 1.0) * r).cos() / v * (expi((2.0 - v) * phi) - 1.0);
        let trig = r * (cos_r * si_shifted(v * r) - sin_r * ci_even(v * r).unwrap());
        let osc = cx(0.0, 0.5 * rm) * expi(2.0 * phi - r) * csi_c(v * rm)
            - cx(0.0, 0.5 * rp) * expi(2.0 * phi + r) * csi_c(v * rp).conj();
        boundary - (cx(trig, 0.0) + osc)
    };
    let i3 = g3(lambda + 1.0) - g3(1.0);

    assemble_a(model, i1, i2, i3)
}

/// Self-kernel limit `r = 0` (the printed terms individually diverge there).
fn kernel_a_zero_distance(model: CouplingModel, phi: f64, lambda: f64) -> Complex64 {
    debug_assert!(phi > 0.0);
    let csi_lm = csi_c((lambda - 1.0) * phi).conj();
    let csi_lp = csi_c((lambda + 1.0) * phi).conj();
    let csi_p = csi_c(phi);
    let e2 = expi(2.0 * phi);

    let i1 = cx((lambda - 1.0).ln(), PI) - csi_lm + csi_p;
    let i2 = cx((lambda + 1.0).ln(), 0.0) - e2 * (csi_lp - csi_p.conj());
    let i3 = cx(lambda / (lambda + 1.0), 0.0) + expi((1.0 - lambda) * phi) / (lambda + 1.0)
        - expi(phi)
        + cx(0.0, phi) * e2 * (csi_lp - csi_p.conj());

    assemble_a(model, i1, i2, i3)
}

/// Analytic limit on the line `r = phi` (`r- = 0`): the csi bound
/// differences collapse to log ratios, `csi(a2 b) - csi(a1 b) -> ln|a2/a1|`.
fn kernel_a_line_limit(model: CouplingModel, r: f64, lambda: f64) -> Complex64 {
    debug_assert!(r > 0.0);
    let phi = r;
    let rp = 2.0 * r;
    let (cos_r, sin_r) = (r.cos(), r.sin());

    let f1 = |u: f64| -> Complex64 {
        cx(cos_r * ci_even(u * r).unwrap() - sin_r * si_shifted(u * r), 0.0)
            - 0.5 * expi(-r) * csi_c(u * rp).conj()
    };
    let i1 = f1(lambda - 1.0) - f1(-1.0) - 0.5 * expi(r) * (lambda - 1.0).ln();

    let f2 = |v: f64| -> Complex64 {
        cx(cos_r * ci_even(v * r).unwrap() + sin_r * si_shifted(v * r), 0.0)
            - 0.5 * expi(2.0 * phi + r) * csi_c(v * rp).conj()
    };
    let i2 = f2(lambda + 1.0) - f2(1.0) - 0.5 * expi(2.0 * phi - r) * (lambda + 1.0).ln();

    // In I3 the vanishing-argument csi carries an r- prefactor, so its
    // bound difference vanishes outright.
    let g3 = |v: f64| -> Complex64 {
        let boundary = ((v - 1.0) * r).cos() / v * (expi((2.0 - v) * phi) - 1.0);
        let trig = r * (cos_r * si_shifted(v * r) - sin_r * ci_even(v * r).unwrap());
        let osc = -cx(0.0, 0.5 * rp) * expi(2.0 * phi + r) * csi_c(v * rp).conj();
        boundary - (cx(trig, 0.0) + osc)
    };
    let i3 = g3(lambda + 1.0) - g3(1.0);

    assemble_a(model, i1, i2, i3)
}

fn assemble_a(model: CouplingModel, i1: Complex64, i2: Complex64, i3: Complex64) -> Complex64 {
    match model {
        CouplingModel::Constant => 0.25 * (i1 - i2 - 2.0 * i3),
        CouplingModel::Linear => 0.25 * (i1 - i2 + 2.0 * i3),
    }
}

/// Amplitude kernel `A(r, phi)` with the default configuration.
pub fn kernel_a(
    model: CouplingModel,
    r: f64,
    phi: f64,
    lambda: f64,
) -> Result<(Complex64, KernelPath)> {
    kernel_a_with(&KernelConfig::default(), model, r, phi, lambda)
}

pub fn kernel_a_with(
    cfg: &KernelConfig,
    model: CouplingModel,
    r: f64,
    phi: f64,
    lambda: f64,
) -> Result<(Complex64, KernelPath)> {
    validate_common(r, phi, lambda)?;
    if !(phi >= 0.0) {
        return Err(KernelError::Domain(format!(
            "amplitude-kernel lag must be >= 0, got {phi}"
        )));
    }
    // The factor (1 - e^{i(1-x)·0}) annihilates the integrand.
    if phi == 0.0 {
        return Ok((Complex64::new(0.0, 0.0), KernelPath::ClosedForm));
    }
    if r < ZERO_DISTANCE_EPS {
        return Ok((
            kernel_a_zero_distance(model, phi, lambda),
            KernelPath::ZeroDistanceLimit,
        ));
    }
    if (r - phi).abs() < cfg.exclusion_band {
        if cfg.use_analytic_line_limit && (r - phi).abs() < ZERO_DISTANCE_EPS {
            return Ok((
                kernel_a_line_limit(model, r, lambda),
                KernelPath::LineLimitAnalytic,
            ));
        }
        if cfg.use_analytic_line_limit {
            // Within the band but off the line: closed form still cancels
            // benignly; take it rather than perturbing the arguments.
            return Ok((
                kernel_a_general(model, r, phi, lambda),
                KernelPath::LineLimitAnalytic,
            ));
        }
        let value = kernel_a_quad(model, r, phi, lambda, cfg.quad_tol, cfg.quad_max_evals)
            .map_err(|source| KernelError::Quadrature { r, phi, source })?;
        return Ok((value, KernelPath::LineLimitQuadrature));
    }
    Ok((kernel_a_general(model, r, phi, lambda), KernelPath::ClosedForm))
}

/// Direct quadrature of the defining `A` integral (the oracle path).
pub fn kernel_a_quad(
    model: CouplingModel,
    r: f64,
    phi: f64,
    lambda: f64,
    tol: f64,
    max_evals: usize,
) -> std::result::Result<Complex64, SpecfunError> {
    // (1-e^{i(1-x)phi})/(x-1) in the cancellation-free form
    // i phi e^{ih} sinc(h), h = (1-x) phi / 2.
    let integrand = move |x: f64| -> Complex64 {
        let h = 0.5 * (1.0 - x) * phi;
        let sinc = if h.abs() < 1e-8 { 1.0 } else { h.sin() / h };
        let q = cx(0.0, phi) * expi(h) * sinc;
        model.weight(x) * (x * r).cos() * q
    };
    let opts = QuadOptions {
        max_evals,
        split_points: vec![1.0],
    };
    adaptive_quad(integrand, 0.0, lambda, tol, &opts).map(|q| q.value)
}

/// Photon-population kernel over `Gamma0 omega0`, i.e. `B/(Gamma0 omega0)`.
///
/// Negative lags use the Hermitian relation `B(-phi) = conj(B(phi))`.
fn kernel_b_over_gamma(
    model: CouplingModel,
    r: f64,
    phi: f64,
    lambda: f64,
) -> (Complex64, KernelPath) {
    if phi < 0.0 {
        let (v, p) = kernel_b_over_gamma(model, r, -phi, lambda);
        return (v.conj(), p);
    }
    let phi_s = [phi + r, phi - r];
    let mut line_hit = false;

    // csi((lambda+1) b) - csi(b), with the b -> 0 limit ln(lambda+1).
    let csi_diff = |b: f64, line_hit: &mut bool| -> Complex64 {
        if b.abs() < ZERO_DISTANCE_EPS {
            *line_hit = true;
            cx((lambda + 1.0).ln(), 0.0)
        } else {
            csi_c((lambda + 1.0) * b) - csi_c(b)
        }
    };

    let b_const = {
        // [-2 cos(x r) e^{i x phi}/(1+x)] from 0 to lambda.
        let boundary = cx(2.0, 0.0) - 2.0 * (lambda * r).cos() / (1.0 + lambda) * expi(lambda * phi);
        let mut sum = boundary;
        for &s in &phi_s {
            if s.abs() >= ZERO_DISTANCE_EPS {
                sum += cx(0.0, s) * expi(-s) * csi_diff(s, &mut line_hit);
            } else {
                line_hit = true; // the s-prefactor kills the term in the limit
            }
        }
        expi(-phi) / PI * sum
    };

    let value = match model {
        CouplingModel::Constant => b_const,
        CouplingModel::Linear => {
            let mut sum = Complex64::new(0.0, 0.0);
            for &s in &phi_s {
                sum += expi(-s) * csi_diff(s, &mut line_hit);
            }
            expi(-phi) / PI * sum - b_const
        }
    };
    let path = if line_hit {
        KernelPath::LineLimitAnalytic
    } else {
        KernelPath::ClosedForm
    };
    (value, path)
}

/// Photon-population kernel `B(r, phi)` (includes the `Gamma0 omega0` factor,
/// passed as `gamma` in natural units).
pub fn kernel_b(
    model: CouplingModel,
    r: f64,
    phi: f64,
    lambda: f64,
    gamma: f64,
) -> Result<(Complex64, KernelPath)> {
    validate_common(r, phi, lambda)?;
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(KernelError::Domain(format!(
            "gamma must be finite and >= 0, got {gamma}"
        )));
    }
    let (v, p) = kernel_b_over_gamma(model, r, phi, lambda);
    Ok((gamma * v, p))
}

/// Direct quadrature of the defining `B` integral (the oracle path).
pub fn kernel_b_quad(
    model: CouplingModel,
    r: f64,
    phi: f64,
    lambda: f64,
    gamma: f64,
    tol: f64,
    max_evals: usize,
) -> std::result::Result<Complex64, SpecfunError> {
    let integrand = move |x: f64| -> Complex64 {
        gamma / PI * model.weight(x) * 2.0 * (x * r).cos() * expi((x - 1.0) * phi)
    };
    let opts = QuadOptions {
        max_evals,
        split_points: vec![1.0],
    };
    adaptive_quad(integrand, 0.0, lambda, tol, &opts).map(|q| q.value)
}

// ---------------------------------------------------------------------------
// Kernel table
// ---------------------------------------------------------------------------

/// How many leading lags of the photon kernel are stored as hat-averaged
/// (product-integration) moments rather than point values. The linear
/// model's `B` has a logarithmic cusp of width `1/lambda` at zero lag that
/// point-sampled trapezoidal weights cannot see; averaging the kernel
/// against the interpolation hats restores the quadrature accuracy of the
/// double convolution near its diagonal.
pub const PHOTON_HAT_LAGS: usize = 8;

/// Precomputed kernel values on a uniform lag grid, one row per distance
/// class. Immutable once built; shared read-only across solver workers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelTable {
    pub model: CouplingModel,
    pub lambda: f64,
    pub dt: f64,
    /// Number of lag entries per class (`n_steps + 1`).
    pub n_lags: usize,
    /// Sorted distinct pair distances, `distances[0] = 0`.
    pub distances: Vec<f64>,
    a: Vec<Complex64>,
    b_over_gamma: Vec<Complex64>,
    /// Hat-averaged `B/(Gamma0 omega0)` for lags `0..hat_lags`, per class.
    b_hat_over_gamma: Vec<Complex64>,
    hat_lags: usize,
    /// Evaluations per [`KernelPath`] during construction (diagnostic).
    pub path_counts: [usize; 4],
}

impl KernelTable {
    pub fn n_classes(&self) -> usize {
        self.distances.len()
    }

    #[inline]
    pub fn a(&self, class: usize, lag: usize) -> Complex64 {
        self.a[class * self.n_lags + lag]
    }

    #[inline]
    pub fn a_row(&self, class: usize) -> &[Complex64] {
        &self.a[class * self.n_lags..(class + 1) * self.n_lags]
    }

    /// `B/(Gamma0 omega0)` at a signed lag index (negative lags conjugate).
    #[inline]
    pub fn b_over_gamma_signed(&self, class: usize, lag: i64) -> Complex64 {
        if lag >= 0 {
            self.b_over_gamma[class * self.n_lags + lag as usize]
        } else {
            self.b_over_gamma[class * self.n_lags + (-lag) as usize].conj()
        }
    }

    #[inline]
    pub fn b_over_gamma_row(&self, class: usize) -> &[Complex64] {
        &self.b_over_gamma[class * self.n_lags..(class + 1) * self.n_lags]
    }

    /// Photon-kernel value for the double convolution at a signed lag:
    /// hat-averaged moments near the diagonal, point values beyond.
    #[inline]
    pub fn b_photon_signed(&self, class: usize, lag: i64) -> Complex64 {
        let k = lag.unsigned_abs() as usize;
        let v = if k < self.hat_lags {
            self.b_hat_over_gamma[class * self.hat_lags + k]
        } else {
            self.b_over_gamma[class * self.n_lags + k]
        };
        if lag >= 0 {
            v
        } else {
            v.conj()
        }
    }

    /// Copy with the amplitude kernel sign flipped. Only for guard
    /// self-tests: feeding this to the solver must trip the blow-up guard.
    #[doc(hidden)]
    pub fn negated_amplitude_copy(&self) -> KernelTable {
        let mut t = self.clone();
        for v in t.a.iter_mut() {
            *v = -*v;
        }
        t
    }

    /// Copy with the photon kernel sign flipped (guard self-tests).
    #[doc(hidden)]
    pub fn negated_photon_copy(&self) -> KernelTable {
        let mut t = self.clone();
        for v in t.b_over_gamma.iter_mut() {
            *v = -*v;
        }
        for v in t.b_hat_over_gamma.iter_mut() {
            *v = -*v;
        }
        t
    }
}

/// `(1/dt) ∫ B(phi)/gamma · hat_k(phi) dphi` with the unit triangular hat
/// centered at `k dt`; the `k = 0` hat folds the negative lags in through
/// the Hermitian relation, so that moment is real.
fn kernel_b_hat_over_gamma(
    model: CouplingModel,
    r: f64,
    k: usize,
    dt: f64,
    lambda: f64,
) -> std::result::Result<Complex64, SpecfunError> {
    let center = k as f64 * dt;
    let weight = move |phi: f64| 1.0 - (phi - center).abs() / dt;
    let opts = QuadOptions {
        max_evals: 2_000_000,
        split_points: vec![center],
    };
    let integrand = move |phi: f64| -> Complex64 {
        let (v, _) = kernel_b_over_gamma(model, r, phi, lambda);
        v * weight(phi)
    };
    let value = if k == 0 {
        // Fold phi < 0 through B(-phi) = conj B(phi): twice the real part.
        let q = adaptive_quad(move |phi| integrand(phi), 0.0, dt, 1e-12, &opts)?;
        Complex64::new(2.0 * q.value.re, 0.0)
    } else {
        let lo = center - dt;
        let hi = center + dt;
        adaptive_quad(integrand, lo, hi, 1e-12, &opts)?.value
    };
    Ok(value / dt)
}

/// Build the kernel table: one evaluation per (distance class, lag).
pub fn build_kernel_table(
    cfg: &KernelConfig,
    model: CouplingModel,
    classes: &DistanceClasses,
    dt: f64,
    n_steps: usize,
    lambda: f64,
) -> Result<KernelTable> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(KernelError::Domain(format!("dt must be > 0, got {dt}")));
    }
    let n_lags = n_steps + 1;
    let n_classes = classes.distances.len();
    let mut a = vec![Complex64::new(0.0, 0.0); n_classes * n_lags];
    let mut b = vec![Complex64::new(0.0, 0.0); n_classes * n_lags];
    let mut path_counts = [0usize; 4];

    for (c, &r) in classes.distances.iter().enumerate() {
        for lag in 0..n_lags {
            let phi = lag as f64 * dt;
            let (va, pa) = kernel_a_with(cfg, model, r, phi, lambda)?;
            if !va.is_finite() {
                return Err(KernelError::Domain(format!(
                    "non-finite A kernel at (r={r}, phi={phi})"
                )));
            }
            let (vb, pb) = {
                validate_common(r, phi, lambda)?;
                kernel_b_over_gamma(model, r, phi, lambda)
            };
            if !vb.is_finite() {
                return Err(KernelError::Domain(format!(
                    "non-finite B kernel at (r={r}, phi={phi})"
                )));
            }
            path_counts[pa.index()] += 1;
            path_counts[pb.index()] += 1;
            a[c * n_lags + lag] = va;
            b[c * n_lags + lag] = vb;
        }
    }

    let hat_lags = PHOTON_HAT_LAGS.min(n_lags - 1).max(1);
    let mut b_hat = vec![Complex64::new(0.0, 0.0); n_classes * hat_lags];
    for (c, &r) in classes.distances.iter().enumerate() {
        for k in 0..hat_lags {
            b_hat[c * hat_lags + k] = kernel_b_hat_over_gamma(model, r, k, dt, lambda)
                .map_err(|source| KernelError::Quadrature {
                    r,
                    phi: k as f64 * dt,
                    source,
                })?;
        }
    }

    Ok(KernelTable {
        model,
        lambda,
        dt,
        n_lags,
        distances: classes.distances.clone(),
        a,
        b_over_gamma: b,
        b_hat_over_gamma: b_hat,
        hat_lags,
        path_counts,
    })
}

/// Cache key identifying a kernel table on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelCacheKey {
    pub model: CouplingModel,
    pub geometry_hash: u64,
    pub dt_bits: u64,
    pub n_lags: usize,
    pub lambda_bits: u64,
    pub code_version: String,
}

impl KernelCacheKey {
    pub fn new(
        model: CouplingModel,
        geometry_hash: u64,
        dt: f64,
        n_lags: usize,
        lambda: f64,
    ) -> Self {
        KernelCacheKey {
            model,
            geometry_hash,
            dt_bits: dt.to_bits(),
            n_lags,
            lambda_bits: lambda.to_bits(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn file_stem(&self) -> String {
        let mut h = Fnv1a::new();
        h.write(self.model.tag().as_bytes());
        h.write_u64(self.geometry_hash);
        h.write_u64(self.dt_bits);
        h.write_u64(self.n_lags as u64);
        h.write_u64(self.lambda_bits);
        h.write(self.code_version.as_bytes());
        format!("kernel_{:016x}", h.finish())
    }
}

#[derive(Serialize, Deserialize)]
struct CachedTable {
    key: KernelCacheKey,
    table: KernelTable,
}

pub fn save_kernel_table(
    dir: &std::path::Path,
    key: &KernelCacheKey,
    table: &KernelTable,
) -> std::io::Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.json", key.file_stem()));
    let payload = CachedTable {
        key: key.clone(),
        table: table.clone(),
    };
    let json = serde_json::to_vec(&payload)?;
    std::fs::write(&path, json)?;
    Ok(path)
}

/// Load a cached table if present and its key matches exactly.
pub fn load_kernel_table(dir: &std::path::Path, key: &KernelCacheKey) -> Option<KernelTable> {
    let path = dir.join(format!("{}.json", key.file_stem()));
    let bytes = std::fs::read(path).ok()?;
    let cached: CachedTable = serde_json::from_slice(&bytes).ok()?;
    if &cached.key == key {
        Some(cached.table)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChainGeometry;

    const QUAD_TOL: f64 = 1e-12;

    fn quad_a(model: CouplingModel, r: f64, phi: f64, lambda: f64) -> Complex64 {
        kernel_a_quad(model, r, phi, lambda, QUAD_TOL, 50_000_000).unwrap()
    }

    fn rel_err(got: Complex64, want: Complex64) -> f64 {
        (got - want).norm() / want.norm().max(1e-300)
    }

    #[test]
    fn closed_form_matches_quadrature_lambda_50() {
        let pi = std::f64::consts::PI;
        for model in [CouplingModel::Constant, CouplingModel::Linear] {
            for &r in &[0.05 * pi, 0.5 * pi, 2.0 * pi] {
                for &phi in &[0.1, 1.0, 5.0, 20.0] {
                    let (a, path) = kernel_a(model, r, phi, 50.0).unwrap();
                    assert_eq!(path, KernelPath::ClosedForm);
                    let q = quad_a(model, r, phi, 50.0);
                    assert!(
                        rel_err(a, q) < 1e-9,
                        "{model} A(r={r}, phi={phi}): closed {a} vs quad {q} (rel {:.2e})",
                        rel_err(a, q)
                    );
                }
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature_lambda_1e4_spot() {
        let pi = std::f64::consts::PI;
        for model in [CouplingModel::Constant, CouplingModel::Linear] {
            for &(r, phi) in &[(0.1 * pi, 1.0), (2.0 * pi, 5.0)] {
                let (a, _) = kernel_a(model, r, phi, 1e4).unwrap();
                let q = quad_a(model, r, phi, 1e4);
                assert!(
                    rel_err(a, q) < 1e-9,
                    "{model} A(r={r}, phi={phi}) at 1e4: {a} vs {q} (rel {:.2e})",
                    rel_err(a, q)
                );
            }
        }
    }

    #[test]
    fn a_vanishes_at_zero_lag() {
        for model in [CouplingModel::Constant, CouplingModel::Linear] {
            for &r in &[0.0, 0.3, 2.0] {
                let (a, _) = kernel_a(model, r, 0.0, 1e4).unwrap();
                assert_eq!(a, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn zero_distance_limit_matches_quadrature() {
        for model in [CouplingModel::Constant, CouplingModel::Linear] {
            for &lambda in &[50.0, 1e4] {
                for &phi in &[0.1, 1.0, 5.0, 20.0] {
                    let (a, path) = kernel_a(model, 0.0, phi, lambda).unwrap();
                    assert_eq!(path, KernelPath::ZeroDistanceLimit);
                    let q = quad_a(model, 0.0, phi, lambda);
                    assert!(
                        rel_err(a, q) < 1e-6,
                        "{model} A(0, {phi}) at {lambda}: {a} vs {q}"
                    );
                }
            }
        }
    }

    #[test]
    fn equal_line_paths_match_quadrature() {
        let cfg_quad = KernelConfig::default();
        let cfg_analytic = KernelConfig {
            use_analytic_line_limit: true,
            ..KernelConfig::default()
        };
        for model in [CouplingModel::Constant, CouplingModel::Linear] {
            for &r in &[0.5, 2.0] {
                let q = quad_a(model, r, r, 50.0);
                let (fallback, path) = kernel_a_with(&cfg_quad, model, r, r, 50.0).unwrap();
                assert_eq!(path, KernelPath::LineLimitQuadrature);
                assert!(rel_err(fallback, q) < 1e-6);
                let (analytic, path) = kernel_a_with(&cfg_analytic, model, r, r, 50.0).unwrap();
                assert_eq!(path, KernelPath::LineLimitAnalytic);
                assert!(
                    rel_err(analytic, q) < 1e-9,
                    "{model} line limit at r={r}: {analytic} vs {q}"
                );
            }
        }
    }

    #[test]
    fn near_line_closed_form_still_accurate() {
        // Just outside the exclusion band the assembled form must not lose
        // precision to cancellation, on either side of the line (the sign
        // of r - phi selects the principal-value branch of csi).
        for model in [CouplingModel::Constant, CouplingModel::Linear] {
            let r = 1.0;
            for phi in [1.0 + 2e-6, 1.0 - 2e-6] {
                let (a, path) = kernel_a(model, r, phi, 50.0).unwrap();
                assert_eq!(path, KernelPath::ClosedForm);
                let q = quad_a(model, r, phi, 50.0);
                assert!(rel_err(a, q) < 1e-9, "{model} at phi={phi}: {a} vs {q}");
            }
        }
    }

    #[test]
    fn pair_symmetry_by_construction() {
        // A depends on i, j only through |x_i - x_j|; spot-check both orders.
        let g = ChainGeometry::from_positions(vec![0.0, 0.7, 1.9]).unwrap();
        let r01 = g.pair_distance(0, 1);
        let r10 = g.pair_distance(1, 0);
        assert_eq!(r01, r10);
    }

    #[test]
    fn b_matches_quadrature() {
        let pi = std::f64::consts::PI;
        for model in [CouplingModel::Constant, CouplingModel::Linear] {
            for &(r, phi) in &[
                (0.05 * pi, 0.1),
                (0.1 * pi, 1.0),
                (0.5 * pi, 5.0),
                (2.0 * pi, 20.0),
                (0.3, -2.0),
                (0.0, 3.0),
            ] {
                let (b, _) = kernel_b(model, r, phi, 50.0, 1.0).unwrap();
                let q = kernel_b_quad(model, r, phi, 50.0, 1.0, QUAD_TOL, 50_000_000).unwrap();
                assert!(
                    rel_err(b, q) < 1e-9,
                    "{model} B(r={r}, phi={phi}): {b} vs {q} (rel {:.2e})",
                    rel_err(b, q)
                );
            }
        }
    }

    #[test]
    fn b_elementary_values_at_coincidence() {
        let lambda = 1e4;
        let gamma = 1.0;
        let (b_const, _) = kernel_b(CouplingModel::Constant, 0.0, 0.0, lambda, gamma).unwrap();
        let want = 2.0 / PI * lambda / (1.0 + lambda);
        assert!((b_const.re - want).abs() < 1e-12 * want);
        assert!(b_const.im.abs() < 1e-14);
        assert!(b_const.re > 0.0);

        let (b_lin, _) = kernel_b(CouplingModel::Linear, 0.0, 0.0, lambda, gamma).unwrap();
        let want = 2.0 / PI * ((1.0 + lambda).ln() - lambda / (1.0 + lambda));
        assert!((b_lin.re - want).abs() < 1e-12 * want);
        assert!(b_lin.re > 0.0);
    }

    #[test]
    fn b_hermitian_in_lag() {
        for model in [CouplingModel::Constant, CouplingModel::Linear] {
            for &(r, phi) in &[(0.3, 0.7), (1.2, 5.0), (0.0, 2.0)] {
                let (plus, _) = kernel_b(model, r, phi, 100.0, 1.0).unwrap();
                let (minus, _) = kernel_b(model, r, -phi, 100.0, 1.0).unwrap();
                assert!((minus - plus.conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn b_const_coincidence_approaches_2_over_pi_at_large_cutoff() {
        let (b, _) = kernel_b(CouplingModel::Constant, 0.0, 0.0, 1e6, 1.0).unwrap();
        let limit = 2.0 / PI;
        assert!(
            ((b.re - limit) / limit).abs() < 1e-5,
            "B(0,0) at 1e6 = {} vs {}",
            b.re,
            limit
        );
    }

    #[test]
    fn b_scales_linearly_in_gamma() {
        let (b1, _) = kernel_b(CouplingModel::Linear, 0.4, 1.3, 50.0, 1.0).unwrap();
        let (b2, _) = kernel_b(CouplingModel::Linear, 0.4, 1.3, 50.0, 1e-4).unwrap();
        assert!((b2 - 1e-4 * b1).norm() < 1e-16 + 1e-12 * b1.norm());
    }

    #[test]
    fn domain_errors() {
        assert!(kernel_a(CouplingModel::Constant, 0.1, 1.0, 1.0).is_err());
        assert!(kernel_a(CouplingModel::Constant, 0.1, 1.0, 0.5).is_err());
        assert!(kernel_a(CouplingModel::Constant, -0.1, 1.0, 50.0).is_err());
        assert!(kernel_a(CouplingModel::Constant, 0.1, -1.0, 50.0).is_err());
        assert!(kernel_b(CouplingModel::Constant, 0.1, 1.0, 50.0, -1.0).is_err());
        assert!(kernel_a(CouplingModel::Constant, f64::NAN, 1.0, 50.0).is_err());
    }

    #[test]
    fn table_matches_direct_calls_and_counts_paths() {
        let g = ChainGeometry::uniform(3, 0.4).unwrap();
        let classes = g.distance_classes();
        let cfg = KernelConfig::default();
        let table = build_kernel_table(&cfg, CouplingModel::Linear, &classes, 0.01, 50, 50.0)
            .unwrap();
        assert_eq!(table.n_classes(), 3);
        assert_eq!(table.n_lags, 51);
        // Zero lag row of A is exactly zero.
        for c in 0..3 {
            assert_eq!(table.a(c, 0), Complex64::new(0.0, 0.0));
        }
        // Spot-check transparency of the cache.
        let r = classes.distances[2];
        let phi = 37.0 * 0.01;
        let (direct, _) = kernel_a(CouplingModel::Linear, r, phi, 50.0).unwrap();
        assert_eq!(table.a(2, 37), direct);
        let (b_direct, _) = kernel_b(CouplingModel::Linear, r, phi, 50.0, 1.0).unwrap();
        assert!((table.b_over_gamma_signed(2, 37) - b_direct).norm() < 1e-15);
        // Negative lag is the conjugate.
        assert_eq!(
            table.b_over_gamma_signed(2, -37),
            table.b_over_gamma_signed(2, 37).conj()
        );
        assert!(table.path_counts[0] > 0);
    }

    #[test]
    fn table_cache_round_trip() {
        let g = ChainGeometry::uniform(2, 0.3).unwrap();
        let classes = g.distance_classes();
        let cfg = KernelConfig::default();
        let table =
            build_kernel_table(&cfg, CouplingModel::Constant, &classes, 0.02, 10, 50.0).unwrap();
        let key = KernelCacheKey::new(CouplingModel::Constant, g.content_hash(), 0.02, 11, 50.0);
        let dir = std::env::temp_dir().join("wqed_kernel_cache_test");
        save_kernel_table(&dir, &key, &table).unwrap();
        let loaded = load_kernel_table(&dir, &key).expect("cache hit");
        assert_eq!(loaded.a(1, 5), table.a(1, 5));
        // A different key misses.
        let other = KernelCacheKey::new(CouplingModel::Linear, g.content_hash(), 0.02, 11, 50.0);
        assert!(load_kernel_table(&dir, &other).is_none());
        let _ = std::fs::remove_dir_all(&dir);
    }
}
