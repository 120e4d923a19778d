//! Exact-formula kernel for `f(z) = λ·e^z`.
//!
//! Since `f' = f`, the derivative of an iterate is the product of the orbit
//! points it visits: `(f^n)'(z₀) = z₁·z₂·…·z_n`. Parameter derivatives of the
//! singular orbit `ξ_n(λ) = f^n(0)` follow `ξ'_{k+1} = ξ_{k+1}·(1/λ + ξ'_k)`.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::TWO_PI;

/// `Re z + ln|λ|` above this value is treated as overflow.
pub const OVERFLOW_LOG_MODULUS: f64 = 709.0;

/// Central finite-difference step used by the derivative oracles.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynError {
    #[error("parameter must be nonzero and finite, got {re}+{im}i")]
    InvalidParameter { re: f64, im: f64 },
    #[error("non-finite input point")]
    NonFinite,
    #[error("overflow at step {step}")]
    Overflow { step: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// A nonzero finite complex parameter `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameter", into = "RawParameter")]
pub struct Parameter {
    lambda: Complex64,
}

#[derive(Serialize, Deserialize)]
struct RawParameter {
    re: f64,
    im: f64,
}

impl TryFrom<RawParameter> for Parameter {
    type Error = DynError;
    fn try_from(raw: RawParameter) -> Result<Self, DynError> {
        Parameter::new(Complex64::new(raw.re, raw.im))
    }
}

impl From<Parameter> for RawParameter {
    fn from(p: Parameter) -> Self {
        RawParameter { re: p.lambda.re, im: p.lambda.im }
    }
}

impl Parameter {
    pub fn new(lambda: Complex64) -> Result<Self, DynError> {
        if !lambda.is_finite() || lambda == Complex64::new(0.0, 0.0) {
            return Err(DynError::InvalidParameter { re: lambda.re, im: lambda.im });
        }
        Ok(Parameter { lambda })
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self, DynError> {
        Self::new(Complex64::new(re, im))
    }

    /// `λ = 2πk·i`, the parameters whose singular value is a fixed point after one step.
    pub fn two_pi_i(k: i64) -> Result<Self, DynError> {
        Self::new(Complex64::new(0.0, k as f64 * TWO_PI))
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        self.lambda
    }

    /// Argument of `λ` in `[0, 2π)`.
    pub fn arg(&self) -> f64 {
        let a = self.lambda.im.atan2(self.lambda.re);
        let a = if a < 0.0 { a + TWO_PI } else { a };
        if a >= TWO_PI {
            0.0
        } else {
            a
        }
    }

    #[inline]
    pub fn ln_abs(&self) -> f64 {
        self.lambda.norm().ln()
    }

    /// Largest real part a point may have before its image overflows.
    #[inline]
    pub fn headroom(&self) -> f64 {
        OVERFLOW_LOG_MODULUS - self.ln_abs()
    }
}

impl std::fmt::Display for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{:+}i", self.lambda.re, self.lambda.im)
    }
}

/// Evaluate `λ·e^z`.
///
/// The imaginary part is reduced by whole turns before the trigonometric
/// evaluation so that `e^{2πik}` is exactly one; the modulus comes from
/// `e^{Re z}` (or from `e^{Re z + ln|λ|}` close to the overflow threshold).
pub fn apply(param: &Parameter, z: Complex64) -> Result<Complex64, DynError> {
    if !z.is_finite() {
        return Err(DynError::NonFinite);
    }
    let log_modulus = z.re + param.ln_abs();
    if log_modulus > OVERFLOW_LOG_MODULUS {
        return Err(DynError::Overflow { step: 1 });
    }
    let turns = (z.im / TWO_PI).round();
    let theta = z.im - turns * TWO_PI;
    let (s, c) = theta.sin_cos();
    let w = if z.re <= 700.0 {
        param.value() * Complex64::new(c, s) * z.re.exp()
    } else {
        Complex64::from_polar(log_modulus.exp(), theta + param.arg())
    };
    if w.is_finite() {
        Ok(w)
    } else {
        Err(DynError::Overflow { step: 1 })
    }
}

/// Iteration budget plus the real-part cutoff used as a finite stand-in for
/// "tends to infinity".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscapePolicy {
    pub re_cutoff: f64,
    pub max_iter: usize,
}

impl Default for EscapePolicy {
    fn default() -> Self {
        EscapePolicy { re_cutoff: 700.0, max_iter: 1000 }
    }
}

impl EscapePolicy {
    pub fn new(re_cutoff: f64, max_iter: usize) -> Result<Self, DynError> {
        if max_iter == 0 {
            return Err(DynError::InvalidInput("max_iter must be at least 1".into()));
        }
        if re_cutoff.is_nan() {
            return Err(DynError::InvalidInput("re_cutoff must not be NaN".into()));
        }
        Ok(EscapePolicy { re_cutoff, max_iter })
    }

    /// Overflow-only policy: escape is never declared before the exponential overflows.
    pub fn unbounded(max_iter: usize) -> Self {
        EscapePolicy { re_cutoff: f64::INFINITY, max_iter }
    }

    /// The cutoff clamped to the overflow headroom of `param`.
    pub fn cutoff_for(&self, param: &Parameter) -> f64 {
        if self.re_cutoff == f64::INFINITY {
            f64::INFINITY
        } else {
            self.re_cutoff.min(param.headroom())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum OrbitStatus {
    Completed,
    /// Index into `points` of the first point beyond the cutoff.
    Escaped(usize),
    /// Index at which the next point would have been stored.
    Overflowed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    #[serde(with = "crate::serde_complex::vec")]
    pub points: Vec<Complex64>,
    pub status: OrbitStatus,
}

impl OrbitTrace {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_completed(&self) -> bool {
        self.status == OrbitStatus::Completed
    }
}

/// Store `first` and then up to `steps` further images, stopping at escape or overflow.
fn trace_from(param: &Parameter, first: Complex64, steps: usize, cutoff: f64) -> OrbitTrace {
    let mut points = Vec::with_capacity(steps + 1);
    points.push(first);
    if first.re > cutoff {
        return OrbitTrace { points, status: OrbitStatus::Escaped(0) };
    }
    let mut z = first;
    for _ in 0..steps {
        match apply(param, z) {
            Ok(w) => {
                points.push(w);
                if w.re > cutoff {
                    let i = points.len() - 1;
                    return OrbitTrace { points, status: OrbitStatus::Escaped(i) };
                }
                z = w;
            }
            Err(_) => {
                let i = points.len();
                return OrbitTrace { points, status: OrbitStatus::Overflowed(i) };
            }
        }
    }
    OrbitTrace { points, status: OrbitStatus::Completed }
}

/// Forward orbit `z₀, f(z₀), …` for at most `policy.max_iter` steps.
pub fn orbit(param: &Parameter, z0: Complex64, policy: &EscapePolicy) -> Result<OrbitTrace, DynError> {
    if !z0.is_finite() {
        return Err(DynError::NonFinite);
    }
    Ok(trace_from(param, z0, policy.max_iter, policy.cutoff_for(param)))
}

/// Singular orbit `ξ_1, …, ξ_n` (`points[j] = ξ_{j+1}`, `ξ_1 = λ`).
pub fn singular_orbit(param: &Parameter, n: usize, policy: &EscapePolicy) -> Result<OrbitTrace, DynError> {
    if n == 0 {
        return Err(DynError::InvalidInput("n must be at least 1".into()));
    }
    Ok(trace_from(param, param.value(), n - 1, policy.cutoff_for(param)))
}

/// `ξ_1, …, ξ_n`, failing on overflow. No escape cutoff is applied.
pub fn singular_values(param: &Parameter, n: usize) -> Result<Vec<Complex64>, DynError> {
    let trace = singular_orbit(param, n, &EscapePolicy::unbounded(n))?;
    match trace.status {
        OrbitStatus::Completed => Ok(trace.points),
        // index i in points is ξ_{i+1}
        OrbitStatus::Overflowed(i) | OrbitStatus::Escaped(i) => Err(DynError::Overflow { step: i + 1 }),
    }
}

/// `f^n(z₀)` without intermediate storage.
pub fn iterate(param: &Parameter, z0: Complex64, n: usize) -> Result<Complex64, DynError> {
    let mut z = z0;
    for step in 1..=n {
        z = apply(param, z).map_err(|e| match e {
            DynError::Overflow { .. } => DynError::Overflow { step },
            other => other,
        })?;
    }
    Ok(z)
}

/// `(f^n)'(z₀) = z₁·…·z_n`.
pub fn orbit_derivative(param: &Parameter, z0: Complex64, n: usize) -> Result<Complex64, DynError> {
    if !z0.is_finite() {
        return Err(DynError::NonFinite);
    }
    let mut z = z0;
    let mut product = Complex64::new(1.0, 0.0);
    for step in 1..=n {
        z = apply(param, z).map_err(|_| DynError::Overflow { step })?;
        product *= z;
        if !product.is_finite() {
            return Err(DynError::Overflow { step });
        }
    }
    Ok(product)
}

/// Singular orbit together with its derivative in `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTrace {
    #[serde(with = "crate::serde_complex::vec")]
    pub xi: Vec<Complex64>,
    #[serde(with = "crate::serde_complex::vec")]
    pub dxi: Vec<Complex64>,
}

impl DerivativeTrace {
    /// `ξ_n` (1-based).
    pub fn xi(&self, n: usize) -> Complex64 {
        self.xi[n - 1]
    }

    /// `ξ'_n` (1-based).
    pub fn dxi(&self, n: usize) -> Complex64 {
        self.dxi[n - 1]
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

pub fn parameter_derivative(param: &Parameter, n: usize) -> Result<DerivativeTrace, DynError> {
    if n == 0 {
        return Err(DynError::InvalidInput("n must be at least 1".into()));
    }
    let xi = singular_values(param, n)?;
    let inv_lambda = param.value().inv();
    let mut dxi = Vec::with_capacity(n);
    dxi.push(Complex64::new(1.0, 0.0));
    for k in 1..n {
        let d = xi[k] * (inv_lambda + dxi[k - 1]);
        if !d.is_finite() {
            return Err(DynError::Overflow { step: k + 1 });
        }
        dxi.push(d);
    }
    Ok(DerivativeTrace { xi, dxi })
}

/// Empirical lower bound `|(f^n)'(z₀)| ≥ C·γ^n` over a window of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionEstimate {
    pub c: f64,
    pub gamma: f64,
    pub window: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpansionReport {
    Expanding(ExpansionEstimate),
    /// No growth detected; `fitted_gamma` is `None` for degenerate data.
    NoExpansion { fitted_gamma: Option<f64> },
}

/// Fit `log|(f^n)'(z₀)|` against `n` for `n` in `window`, where `segment[0] = z₀`
/// and `segment[j] = f^j(z₀)`. The intercept is then lowered until the bound
/// holds at every sampled `n`.
pub fn estimate_expansion(segment: &[Complex64], window: RangeInclusive<usize>) -> Result<ExpansionReport, DynError> {
    let (lo, hi) = (*window.start(), *window.end());
    if lo == 0 || lo > hi {
        return Err(DynError::InvalidInput(format!("window {lo}..={hi} must satisfy 1 <= start <= end")));
    }
    if hi >= segment.len() {
        return Err(DynError::InvalidInput(format!(
            "window end {hi} needs a segment of at least {} points, got {}",
            hi + 1,
            segment.len()
        )));
    }
    if segment.iter().any(|z| !z.is_finite()) {
        return Err(DynError::NonFinite);
    }

    let mut log_deriv = 0.0;
    let mut samples = Vec::with_capacity(hi - lo + 1);
    for (n, z) in segment.iter().enumerate().skip(1).take(hi) {
        log_deriv += z.norm().ln();
        if n >= lo {
            samples.push((n as f64, log_deriv));
        }
    }
    if samples.len() < 2 || samples.iter().any(|&(_, y)| !y.is_finite()) {
        return Ok(ExpansionReport::NoExpansion { fitted_gamma: None });
    }

    let count = samples.len() as f64;
    let mean_n = samples.iter().map(|s| s.0).sum::<f64>() / count;
    let mean_y = samples.iter().map(|s| s.1).sum::<f64>() / count;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mean_n).powi(2)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mean_n) * (s.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let gamma = slope.exp();
    if slope <= 0.0 {
        return Ok(ExpansionReport::NoExpansion { fitted_gamma: Some(gamma) });
    }
    let intercept = samples.iter().map(|&(n, y)| y - slope * n).fold(f64::INFINITY, f64::min);
    let intercept = intercept - 1e-12 * (1.0 + intercept.abs());
    Ok(ExpansionReport::Expanding(ExpansionEstimate { c: intercept.exp(), gamma, window: (lo, hi) }))
}
