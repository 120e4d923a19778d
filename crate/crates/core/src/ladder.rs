//! Finite-depth escaping-parameter ladder.
//!
//! Each rung is a post-singularly finite `λ_k` with a disk `D(λ_k, r_k)`. The
//! singular orbit follows the previous rung's orbit up to large scale, then is
//! launched onto a repelling cycle further right. Targets advance by `dx` per rung.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycle::{preimage_near, pullback_refine, scan_cycles_near_line, Cycle, CycleError, DEFAULT_DENSITY};
use crate::dynamics::{apply, parameter_derivative, singular_values, DynError, Parameter, OVERFLOW_LOG_MODULUS};
use crate::psf::{detect_psf, solve_psf, verify_psf, Check, PsfError, PsfParameter, PsfSpec};
use crate::TWO_PI;

/// Boundary parameters sampled on each disk.
pub const BOUNDARY_SAMPLES: usize = 16;
/// `shrink_radius` gives up below this radius.
pub const MIN_RADIUS: f64 = 1e-14;
/// Largest admissible `x_cap`.
pub const MAX_X_CAP: f64 = 650.0;
const START_MIN_X: f64 = 5.0;
const START_MIN_IMAGE: f64 = 1e3;
const AIM_NEWTON_STEPS: usize = 60;
const PSF_STEPS: usize = 60;
const MAX_M2: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LadderConfig {
    #[serde(rename = "S")]
    pub s: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub dx: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub x_cap: f64,
    pub tol: f64,
    pub seed: Parameter,
    /// Initial radius of the start-up disk.
    pub r0: f64,
    /// Largest cycle period tried when hunting the next target.
    pub p_max: usize,
    /// Iteration budget for large-scale times.
    pub n_max: usize,
}

impl Default for LadderConfig {
    fn default() -> Self {
        LadderConfig {
            s: 1.0,
            delta: 0.05,
            epsilon: 0.1,
            dx: TWO_PI,
            k: 3,
            x_cap: MAX_X_CAP,
            tol: 1e-10,
            seed: Parameter::two_pi_i(1).expect("2πi is a valid parameter"),
            r0: 0.1,
            p_max: 3,
            n_max: 256,
        }
    }
}

impl LadderConfig {
    pub fn validate(&self) -> Result<(), LadderError> {
        let bad = |field: &str, message: String| Err(LadderError::InvalidConfig { field: field.into(), message });
        let positive = [("S", self.s), ("delta", self.delta), ("epsilon", self.epsilon), ("tol", self.tol), ("r0", self.r0)];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(field, format!("must be positive and finite, got {v}"));
            }
        }
        if !(self.dx >= TWO_PI) || !self.dx.is_finite() {
            return bad("dx", format!("must be at least 2π, got {}", self.dx));
        }
        if !(self.x_cap <= MAX_X_CAP) {
            return bad(
                "x_cap",
                format!("must be at most {MAX_X_CAP} to respect the overflow guard Re z + ln|λ| ≤ 709, got {}", self.x_cap),
            );
        }
        if self.x_cap + self.seed.ln_abs() > OVERFLOW_LOG_MODULUS {
            return bad("x_cap", format!("x_cap + ln|λ| exceeds the overflow guard {OVERFLOW_LOG_MODULUS}"));
        }
        if self.p_max < 2 {
            return bad("p_max", format!("must be at least 2, got {}", self.p_max));
        }
        if self.n_max == 0 {
            return bad("n_max", "must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LadderError {
    #[error("invalid ladder config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("large scale {s} not reached within {n_max} steps")]
    NotReached { s: f64, n_max: usize, curve: Vec<f64> },
    #[error("orbit died at step {step} before reaching large scale")]
    OrbitDied { step: usize, curve: Vec<f64> },
    #[error("cannot shrink radius below {MIN_RADIUS:e}: {reason}")]
    CannotShrink { reason: String },
    #[error("next target beyond x_cap {x_cap}")]
    LadderComplete { x_cap: f64 },
    #[error("rung {index} failed at {stage}: {message}")]
    RungFailed { index: usize, stage: String, message: String, completed: Box<LadderResult>, partial: Option<Box<Rung>> },
    #[error(transparent)]
    Dynamics(#[from] DynError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Psf(#[from] PsfError),
}

/// Growth of the disk image `ξ_n(D(λ, r))` up to its large-scale time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeScale {
    pub m0: usize,
    /// `diam_n` for `n = 1..=m0`, from the boundary samples.
    pub diam_curve: Vec<f64>,
    /// `2r|ξ'_n(λ)|` for the same `n`.
    pub linear_curve: Vec<f64>,
    /// Whether sampled and linearized diameters agree within a factor 2 before large scale.
    pub linear_agrees: bool,
}

fn boundary(param: &Parameter, r: f64) -> Result<Vec<Parameter>, DynError> {
    (0..BOUNDARY_SAMPLES)
        .map(|b| Parameter::new(param.value() + Complex64::from_polar(r, TWO_PI * b as f64 / BOUNDARY_SAMPLES as f64)))
        .collect()
}

/// First `n ≤ n_max` at which `ξ_n(D(λ, r))` has diameter at least `s`, sampled on
/// 16 boundary parameters.
pub fn large_scale_time(param: &Parameter, r: f64, s: f64, n_max: usize) -> Result<LargeScale, LadderError> {
    if !(r > 0.0) || !(s > 0.0) || n_max == 0 {
        return Err(LadderError::InvalidInput(format!("need r > 0, S > 0, n_max > 0 (r={r}, S={s}, n_max={n_max})")));
    }
    let edge = boundary(param, r)?;
    let mut z = Complex64::new(0.0, 0.0);
    let mut dz = Complex64::new(0.0, 0.0);
    let mut zb = vec![Complex64::new(0.0, 0.0); edge.len()];
    let mut diam_curve = Vec::new();
    let mut linear_curve = Vec::new();
    let mut linear_agrees = true;
    let lambda_inv = param.value().inv();
    for n in 1..=n_max {
        let died = |curve: &Vec<f64>| LadderError::OrbitDied { step: n, curve: curve.clone() };
        let next = apply(param, z).map_err(|_| died(&diam_curve))?;
        dz = if n == 1 { Complex64::new(1.0, 0.0) } else { next * (lambda_inv + dz) };
        z = next;
        for (w, lb) in zb.iter_mut().zip(&edge) {
            *w = apply(lb, *w).map_err(|_| died(&diam_curve))?;
        }
        let diam = 2.0 * zb.iter().map(|w| (w - z).norm()).fold(0.0, f64::max);
        let linear = 2.0 * r * dz.norm();
        diam_curve.push(diam);
        linear_curve.push(linear);
        if diam >= s {
            return Ok(LargeScale { m0: n, diam_curve, linear_curve, linear_agrees });
        }
        if !(diam <= 2.0 * linear && linear <= 2.0 * diam) {
            linear_agrees = false;
        }
    }
    Err(LadderError::NotReached { s, n_max, curve: diam_curve })
}

/// Halve `r_init` until the large-scale time exceeds `2(m + p)`.
pub fn shrink_radius(param: &Parameter, m: usize, p: usize, s: f64, r_init: f64) -> Result<f64, LadderError> {
    if !(r_init > 0.0) {
        return Err(LadderError::InvalidInput(format!("r_init must be positive, got {r_init}")));
    }
    let need = 2 * (m + p);
    let n_max = need + 256;
    let mut r = r_init;
    while r >= MIN_RADIUS {
        match large_scale_time(param, r, s, n_max) {
            Ok(ls) if ls.m0 > need => return Ok(r),
            Ok(_) => r *= 0.5,
            Err(LadderError::OrbitDied { step, .. }) => {
                return Err(LadderError::CannotShrink { reason: format!("orbit died at step {step} before large scale (r={r:e})") })
            }
            Err(LadderError::NotReached { .. }) => {
                return Err(LadderError::CannotShrink { reason: format!("large scale not reached in {n_max} steps (r={r:e})") })
            }
            Err(e) => return Err(e),
        }
    }
    Err(LadderError::CannotShrink { reason: format!("M0 still ≤ {need} at r={:e}", 2.0 * r) })
}

/// `|ξ'_n(λ₁)/ξ'_n(λ₂) − 1|`.
pub fn distortion_ratio(param1: &Parameter, param2: &Parameter, n: usize) -> Result<f64, LadderError> {
    if n == 0 {
        return Err(LadderError::InvalidInput("n must be at least 1".into()));
    }
    let a = parameter_derivative(param1, n)?.dxi(n);
    let b = parameter_derivative(param2, n)?.dxi(n);
    Ok((a / b - 1.0).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShadowReport {
    pub from: usize,
    pub to: usize,
    pub delta: f64,
    #[serde(with = "crate::serde_complex::float")]
    pub max_distance: f64,
    pub first_violation: Option<usize>,
    pub pass: bool,
    pub detail: String,
}

/// Distance from `ξ_j(λ)` to the nearest point of `cycle` for `from ≤ j ≤ to`.
pub fn verify_shadowing(param: &Parameter, cycle: &Cycle, from: usize, to: usize, delta: f64) -> ShadowReport {
    match singular_values(param, to.max(1)) {
        Ok(xi) => shadow_on(&xi, cycle, from, to, delta),
        Err(e) => ShadowReport {
            from,
            to,
            delta,
            max_distance: f64::INFINITY,
            first_violation: Some(from),
            pass: false,
            detail: e.to_string(),
        },
    }
}

/// Where the next rung's singular orbit leaves the current one: at `time` the
/// orbit should sit at `aim`, and `m2` iterates later at `target.points[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Launch {
    pub time: usize,
    pub m2: usize,
    #[serde(with = "crate::serde_complex")]
    pub aim: Complex64,
    pub target: Cycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungReport {
    pub checks: Vec<Check>,
    pub shadowing: ShadowReport,
    pub large_scale: LargeScale,
}

impl RungReport {
    pub fn pass(&self) -> bool {
        self.shadowing.pass && self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub index: usize,
    pub lambda_k: Parameter,
    pub r_k: f64,
    pub m_k: usize,
    pub p_k: usize,
    #[serde(with = "crate::serde_complex::float")]
    pub x_km1: f64,
    pub x_k: f64,
    #[serde(with = "crate::serde_complex::float")]
    pub xp_k: f64,
    pub n_km1: usize,
    pub n_k: usize,
    #[serde(rename = "M0")]
    pub m0: usize,
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "M2")]
    pub m2: usize,
    pub cycle: Cycle,
    pub psf: PsfParameter,
    pub launch: Option<Launch>,
    pub launch_error: Option<String>,
    pub report: RungReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCertificate {
    pub rung: usize,
    pub from: usize,
    pub to: usize,
    #[serde(with = "crate::serde_complex::float")]
    pub min_re: f64,
    #[serde(with = "crate::serde_complex::float")]
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderResult {
    pub rungs: Vec<Rung>,
    pub final_lambda: Option<Parameter>,
    pub final_radius: f64,
    pub nested: bool,
    pub certificate: Vec<WindowCertificate>,
    /// Set when the ladder stopped at `x_cap` before `K` rungs.
    pub complete_at_cap: bool,
}

impl LadderResult {
    fn from_rungs(rungs: Vec<Rung>, complete_at_cap: bool) -> Self {
        let nested = rungs
            .windows(2)
            .all(|w| (w[1].lambda_k.value() - w[0].lambda_k.value()).norm() + w[1].r_k <= w[0].r_k);
        let (final_lambda, final_radius) = match rungs.last() {
            Some(r) => (Some(r.lambda_k), r.r_k),
            None => (None, 0.0),
        };
        let certificate = match rungs.last() {
            Some(last) => certify(&rungs, &last.psf),
            None => Vec::new(),
        };
        LadderResult { rungs, final_lambda, final_radius, nested, certificate, complete_at_cap }
    }

    /// Every rung report and certificate window passes.
    pub fn verified(&self) -> bool {
        self.nested && self.rungs.iter().all(|r| r.report.pass()) && self.certificate.iter().all(|c| c.pass)
    }
}

/// `ξ_1..ξ_n` of a post-singularly finite parameter, closed up periodically after
/// `ξ_{m+p−1}` so that rounding does not drift off a repelling cycle.
fn psf_orbit(psf: &PsfParameter, n: usize) -> Result<Vec<Complex64>, DynError> {
    let head = (psf.m + psf.p - 1).min(n);
    let mut xi = if head == 0 { Vec::new() } else { singular_values(&psf.lambda, head)? };
    for j in head + 1..=n {
        xi.push(psf.cycle.points[(j - psf.m) % psf.p]);
    }
    Ok(xi)
}

fn certify(rungs: &[Rung], last: &PsfParameter) -> Vec<WindowCertificate> {
    let horizon = rungs.iter().map(|r| r.n_k).max().unwrap_or(0);
    let Ok(xi) = psf_orbit(last, horizon) else { return Vec::new() };
    rungs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, r)| {
            let from = r.n_km1.max(1);
            let min_re = xi[from - 1..r.n_k].iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
            let bound = rungs[k - 1].x_km1;
            WindowCertificate { rung: k, from, to: r.n_k, min_re, bound, pass: min_re > bound }
        })
        .collect()
}

fn shadow_on(xi: &[Complex64], cycle: &Cycle, from: usize, to: usize, delta: f64) -> ShadowReport {
    let mut report =
        ShadowReport { from, to, delta, max_distance: 0.0, first_violation: None, pass: false, detail: String::new() };
    if from == 0 || from > to || to > xi.len() {
        report.detail = format!("empty window [{from}, {to}]");
        return report;
    }
    for j in from..=to {
        let d = cycle.distance_to(xi[j - 1]);
        report.max_distance = report.max_distance.max(d);
        if !(d <= delta) && report.first_violation.is_none() {
            report.first_violation = Some(j);
        }
    }
    report.pass = report.first_violation.is_none();
    report.detail = format!("max distance {:e} over [{from}, {to}]", report.max_distance);
    report
}

fn rung_failed(index: usize, stage: &str, message: impl ToString) -> LadderError {
    LadderError::RungFailed {
        index,
        stage: stage.into(),
        message: message.to_string(),
        completed: Box::new(LadderResult::from_rungs(Vec::new(), false)),
        partial: None,
    }
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.into(), pass, detail }
}

/// Band cycle at `x_target` for `psf.lambda`, and the first time `t ≥ t0` at which
/// a chain of at most three preimages of its band point lies inside the disk image.
fn find_launch(psf: &PsfParameter, r: f64, t0: usize, x_target: f64, config: &LadderConfig) -> Result<Launch, LadderError> {
    let param = &psf.lambda;
    let found = scan_cycles_near_line(param, x_target, config.p_max, config.tol, DEFAULT_DENSITY)?;
    let off_line = |c: &Cycle| (c.points[0].im + param.arg()).abs();
    let target = found
        .into_iter()
        .reduce(|best, c| if (c.period, off_line(&c)) < (best.period, off_line(&best)) { c } else { best })
        .expect("scan returns at least one cycle");
    let span = 4 * (psf.m + psf.p) + 16;
    let xi = psf_orbit(psf, t0 + span)?;
    let dxi = parameter_derivative(param, t0 + span).ok();
    for t in t0.max(1)..=t0 + span {
        let z = xi[t - 1];
        // linear image radius of the disk at time t
        let rho = match &dxi {
            Some(d) => r * d.dxi(t).norm(),
            None => r * (t as f64),
        };
        for m2 in 1..=MAX_M2 {
            let mut ahead = vec![z];
            for _ in 1..m2 {
                match apply(param, *ahead.last().unwrap()) {
                    Ok(w) => ahead.push(w),
                    Err(_) => break,
                }
            }
            if ahead.len() < m2 {
                continue;
            }
            let mut tau = Some(target.points[0]);
            for near in ahead.iter().rev() {
                tau = tau.and_then(|w| preimage_near(param, w, *near));
            }
            if let Some(aim) = tau {
                if (aim - z).norm() <= 0.5 * rho {
                    return Ok(Launch { time: t, m2, aim, target });
                }
            }
        }
    }
    Err(LadderError::InvalidInput(format!("no launch into the cycle at x={x_target} within {span} steps of {t0}")))
}

/// Newton in `λ` on `ξ_t(λ) = τ(λ)`, where `τ(λ)` pulls the target cycle's band
/// point (re-settled at the current `λ`) back `m2` times along the forward orbit.
fn aim_parameter(start: &Parameter, launch: &Launch, tol: f64) -> Result<Parameter, LadderError> {
    let t = launch.time;
    let mut lambda = *start;
    let mut miss_norm = f64::INFINITY;
    for _ in 0..AIM_NEWTON_STEPS {
        let w0 = pullback_refine(&lambda, &launch.target.points, AIM_NEWTON_STEPS)
            .ok_or_else(|| LadderError::InvalidInput("target cycle lost during aim".into()))?;
        let trace = parameter_derivative(&lambda, t)?;
        let mut ahead = vec![trace.xi(t)];
        for _ in 1..launch.m2 {
            ahead.push(apply(&lambda, *ahead.last().unwrap())?);
        }
        let mut tau = w0;
        for near in ahead.iter().rev() {
            tau = preimage_near(&lambda, tau, *near)
                .ok_or_else(|| LadderError::InvalidInput("preimage chain hit zero".into()))?;
        }
        let miss = trace.xi(t) - tau;
        miss_norm = miss.norm();
        if miss_norm <= tol * tau.norm().max(1.0) {
            return Ok(lambda);
        }
        let d = trace.dxi(t);
        if d.norm() == 0.0 {
            return Err(LadderError::InvalidInput("vanishing ξ' during aim".into()));
        }
        lambda = Parameter::new(lambda.value() - miss / d)?;
    }
    Err(LadderError::InvalidInput(format!("aim Newton did not converge (miss {miss_norm:e})")))
}

/// Finish a rung around a solved parameter: radius, large-scale time, `x'_k`,
/// `M1`, target, look-ahead launch and checks.
fn assemble(
    index: usize,
    psf: PsfParameter,
    r_start: f64,
    prev: Option<&Rung>,
    config: &LadderConfig,
) -> Result<Rung, LadderError> {
    let (m, p) = (psf.m, psf.p);
    let lambda = psf.lambda;
    let r = shrink_radius(&lambda, m, p, config.s, r_start).map_err(|e| rung_failed(index, "shrink_radius", e))?;
    let ls = large_scale_time(&lambda, r, config.s, 2 * (m + p) + 256)
        .map_err(|e| rung_failed(index, "large_scale_time", e))?;
    let m0 = ls.m0;
    let horizon = m0 + 2 * (m + p) + 4 * MAX_M2 + 64;
    let xi = psf_orbit(&psf, horizon).map_err(|e| rung_failed(index, "orbit", e))?;
    let re = |j: usize| xi[j - 1].re;

    let n_km1 = prev.map_or(0, |p| p.n_k);
    let xp_k = (n_km1.max(1)..=m0).map(re).fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * xp_k.abs().max(1.0);
    let m1 = (0..=m + p).find(|&j| re(m0 + j) >= xp_k - slack).unwrap_or(0);
    let orbit_max = (1..m + p).map(re).fold(f64::NEG_INFINITY, f64::max);

    let mut checks = Vec::new();
    let (x_km1, x_k) = match prev {
        Some(pr) => (pr.x_k, orbit_max + TWO_PI),
        None => {
            // start-up: x₀ clears the sampled start disk and makes |f(c₀)| > 10³
            let edge = boundary(&lambda, r)?;
            let disk_max = edge
                .par_iter()
                .map(|lb| singular_values(lb, m0).map(|v| v.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)))
                .collect::<Result<Vec<f64>, _>>()
                .map_err(|e| rung_failed(index, "start-up", e))?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            let centre_max = (1..=m0).map(re).fold(f64::NEG_INFINITY, f64::max);
            let image = (START_MIN_IMAGE / lambda.value().norm()).ln();
            let c0 = (START_MIN_X - centre_max).max(image + 1e-9 * image.abs().max(1.0)).max(disk_max - centre_max + 1e-9);
            let x0 = centre_max + c0;
            checks.push(check(
                "start_up",
                x0 >= START_MIN_X && lambda.value().norm() * c0.exp() > START_MIN_IMAGE && disk_max < x0,
                format!("x0={x0}, c0={c0}, max Re over sampled D0 = {disk_max}"),
            ));
            (disk_max, x0)
        }
    };

    let x_target = x_k + config.dx - TWO_PI + std::f64::consts::PI;
    let (launch, launch_error) = if x_k + config.dx > config.x_cap {
        (None, Some(format!("next target {} beyond x_cap {}", x_k + config.dx, config.x_cap)))
    } else {
        match find_launch(&psf, r, m0 + m1, x_target, config) {
            Ok(l) => (Some(l), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let m2 = launch.as_ref().map_or(0, |l| l.time + l.m2 - (m0 + m1));
    let n_k = m0 + m1 + m2;

    let from = if prev.is_some() { n_km1 } else { m };
    let shadowing = shadow_on(&xi, &psf.cycle, from.max(1), n_k.max(from), config.delta);

    checks.push(check("m0_bound", m0 > 2 * (m + p), format!("M0={m0}, 2(m+p)={}", 2 * (m + p))));
    checks.push(check("linear_regime", ls.linear_agrees, "sampled vs linearized diameter within factor 2".into()));
    let distortion = max_distortion(&lambda, r, m0).map_err(|e| rung_failed(index, "distortion", e))?;
    checks.push(check("distortion", distortion < config.epsilon, format!("max ratio {distortion:e} for n < M0={m0}")));
    let verified = verify_psf(&lambda, m, p, config.tol);
    checks.push(check("psf", verified.all_pass(), format!("residual {:e}", verified.residual)));

    if let Some(prev_rung) = prev {
        checks.push(check(
            "advance",
            x_k >= x_km1 + config.dx,
            format!("x_k={x_k}, x_km1={x_km1}, dx={}", config.dx),
        ));
        checks.push(check("n_increasing", n_k > n_km1, format!("n_k={n_k}, n_km1={n_km1}")));
        let shift = (lambda.value() - prev_rung.lambda_k.value()).norm();
        checks.push(check(
            "nested",
            shift + r <= prev_rung.r_k,
            format!("|Δλ|={shift:e}, r_k={r:e}, r_km1={:e}", prev_rung.r_k),
        ));
        let lo = n_km1.max(1);
        let min_re = (lo..=n_k.max(lo)).map(re).fold(f64::INFINITY, f64::min);
        checks.push(check(
            "right_of_previous",
            min_re > x_km1 - config.tol,
            format!("min Re ξ_j over [{lo}, {n_k}] = {min_re}, x_km1 = {x_km1}"),
        ));
        checks.push(itinerary(prev_rung, &psf, r, config).map_err(|e| rung_failed(index, "itinerary", e))?);
    }

    let report = RungReport { checks, shadowing, large_scale: ls };
    let cycle = psf.cycle.clone();
    Ok(Rung {
        index,
        lambda_k: lambda,
        r_k: r,
        m_k: m,
        p_k: p,
        x_km1,
        x_k,
        xp_k,
        n_km1,
        n_k,
        m0,
        m1,
        m2,
        cycle,
        psf,
        launch,
        launch_error,
        report,
    })
}

fn max_distortion(lambda: &Parameter, r: f64, n: usize) -> Result<f64, LadderError> {
    let centre = parameter_derivative(lambda, n)?;
    let mut worst: f64 = 0.0;
    for lb in boundary(lambda, r)? {
        let edge = parameter_derivative(&lb, n)?;
        for j in 1..n {
            worst = worst.max((edge.dxi(j) / centre.dxi(j) - 1.0).norm());
        }
    }
    Ok(worst)
}

/// `ξ_j(λ_k)` within `δ` of `ξ_j(λ_{k−1})` for `j ≤ M0(λ_{k−1}, r_k)`.
fn itinerary(prev: &Rung, psf: &PsfParameter, r: f64, config: &LadderConfig) -> Result<Check, LadderError> {
    let horizon = match large_scale_time(&prev.lambda_k, r, config.s, config.n_max + prev.n_k) {
        Ok(ls) => ls.m0,
        Err(LadderError::NotReached { n_max, .. }) => n_max,
        Err(e) => return Err(e),
    };
    let a = psf_orbit(&prev.psf, horizon)?;
    let b = psf_orbit(psf, horizon)?;
    let worst = a.iter().zip(&b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max);
    Ok(check("itinerary", worst <= config.delta, format!("max |Δξ_j| = {worst:e} for j ≤ {horizon}")))
}

/// Rung 0 around the seed parameter.
pub fn start_rung(config: &LadderConfig) -> Result<Rung, LadderError> {
    config.validate()?;
    let psf = detect_psf(&config.seed, 64, config.tol).ok_or_else(|| LadderError::InvalidConfig {
        field: "seed".into(),
        message: format!("{} is not post-singularly finite within 64 iterates", config.seed),
    })?;
    assemble(0, psf, config.r0, None, config)
}

/// Next rung: aim the previous parameter's orbit at its launch, land on the
/// target cycle, then shrink and verify.
pub fn build_rung(prev: &Rung, config: &LadderConfig) -> Result<Rung, LadderError> {
    let index = prev.index + 1;
    if prev.x_k + config.dx > config.x_cap {
        return Err(LadderError::LadderComplete { x_cap: config.x_cap });
    }
    let launch = prev
        .launch
        .as_ref()
        .ok_or_else(|| rung_failed(index, "launch", prev.launch_error.clone().unwrap_or_default()))?;
    let aimed = aim_parameter(&prev.lambda_k, launch, config.tol)
        .map_err(|e| rung_failed(index, "aim", e))?;
    let spec = PsfSpec::new(launch.time + launch.m2, launch.target.period, aimed, config.tol)?;
    let psf = solve_psf(&spec, PSF_STEPS).map_err(|e| rung_failed(index, "solve_psf", e))?;
    let shift = (psf.lambda.value() - prev.lambda_k.value()).norm();
    let r_start = (prev.r_k / 4.0).min(prev.r_k - shift);
    if !(r_start > 0.0) {
        return Err(rung_failed(index, "nesting", format!("|Δλ|={shift:e} leaves disk of radius {:e}", prev.r_k)));
    }
    assemble(index, psf, r_start, Some(prev), config)
}

/// Start-up rung, then up to `K` further rungs or until `x_cap`.
pub fn run_ladder(config: &LadderConfig) -> Result<LadderResult, LadderError> {
    let with_prefix = |e: LadderError, rungs: &[Rung], partial: Option<Rung>| match e {
        LadderError::RungFailed { index, stage, message, partial: p, .. } => LadderError::RungFailed {
            index,
            stage,
            message,
            completed: Box::new(LadderResult::from_rungs(rungs.to_vec(), false)),
            partial: p.or(partial.map(Box::new)),
        },
        other => other,
    };
    let first = start_rung(config).map_err(|e| with_prefix(e, &[], None))?;
    if !first.report.pass() {
        return Err(with_prefix(rung_failed(0, "verify", failed_checks(&first)), &[], Some(first)));
    }
    let mut rungs = vec![first];
    if rungs[0].x_k > config.x_cap {
        return Ok(LadderResult::from_rungs(rungs, true));
    }
    for _ in 0..config.k {
        let prev = rungs.last().expect("start rung present");
        match build_rung(prev, config) {
            Ok(rung) if rung.report.pass() => rungs.push(rung),
            Ok(rung) => {
                let e = rung_failed(rung.index, "verify", failed_checks(&rung));
                return Err(with_prefix(e, &rungs, Some(rung)));
            }
            Err(LadderError::LadderComplete { .. }) => return Ok(LadderResult::from_rungs(rungs, true)),
            Err(e) => return Err(with_prefix(e, &rungs, None)),
        }
    }
    Ok(LadderResult::from_rungs(rungs, false))
}

fn failed_checks(rung: &Rung) -> String {
    let mut names: Vec<String> =
        rung.report.checks.iter().filter(|c| !c.pass).map(|c| format!("{} ({})", c.name, c.detail)).collect();
    if !rung.report.shadowing.pass {
        names.push(format!("shadowing ({})", rung.report.shadowing.detail));
    }
    names.join("; ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pi_i() -> Parameter {
        Parameter::two_pi_i(1).unwrap()
    }

    #[test]
    fn large_scale_time_at_two_pi_i() {
        let ls = large_scale_time(&two_pi_i(), 1e-3, 1.0, 64).unwrap();
        assert!((4..=5).contains(&ls.m0), "M0 = {}", ls.m0);
        assert!(ls.linear_agrees);
        let finer = large_scale_time(&two_pi_i(), 1e-6, 1.0, 64).unwrap();
        assert!(finer.m0 > ls.m0);
        assert_eq!(large_scale_time(&two_pi_i(), 1e-3, 1e-4, 64).unwrap().m0, 1);
    }

    #[test]
    fn shrink_radius_examples() {
        let r = shrink_radius(&two_pi_i(), 1, 1, 1.0, 0.1).unwrap();
        assert!(large_scale_time(&two_pi_i(), r, 1.0, 64).unwrap().m0 >= 5);
        assert!(r < 0.1);
        assert_eq!(shrink_radius(&two_pi_i(), 1, 1, 1.0, r).unwrap(), r);
        let huge = shrink_radius(&two_pi_i(), 1, 1, 1e300, 0.1);
        assert!(matches!(huge, Err(LadderError::CannotShrink { .. })), "{huge:?}");
    }

    #[test]
    fn distortion_examples() {
        let a = two_pi_i();
        let b = Parameter::new(a.value() * 1.000_000_01).unwrap();
        assert_eq!(distortion_ratio(&a, &a, 7).unwrap(), 0.0);
        assert_eq!(distortion_ratio(&a, &b, 1).unwrap(), 0.0);
        // independent recurrence oracle: 2.40993e-6 at n=4, 0.146973 at n=10
        assert!((distortion_ratio(&a, &b, 4).unwrap() - 2.409930135575676e-6).abs() < 1e-9);
        assert!((distortion_ratio(&a, &b, 10).unwrap() - 0.1469734595336199).abs() < 1e-5);
    }

    #[test]
    fn shadowing_examples() {
        let fixed = detect_psf(&two_pi_i(), 8, 1e-10).unwrap().cycle;
        let exact = verify_shadowing(&two_pi_i(), &fixed, 1, 12, 1e-3);
        assert!(exact.pass);
        assert_eq!(exact.max_distance, 0.0);
        let near = Parameter::new(two_pi_i().value() * (1.0 + 1e-9)).unwrap();
        assert!(verify_shadowing(&near, &fixed, 1, 5, 1e-3).pass);
        assert_eq!(verify_shadowing(&near, &fixed, 1, 5, 0.0).first_violation, Some(1));
    }

    #[test]
    fn config_validation() {
        let bad_dx = LadderConfig { dx: 3.0, ..LadderConfig::default() };
        assert!(matches!(bad_dx.validate(), Err(LadderError::InvalidConfig { ref field, .. }) if field == "dx"));
        let bad_cap = LadderConfig { x_cap: 700.0, ..LadderConfig::default() };
        assert!(bad_cap.validate().is_err());
        assert!(LadderConfig::default().validate().is_ok());
    }

    #[test]
    fn start_rung_at_two_pi_i() {
        let rung = start_rung(&LadderConfig::default()).unwrap();
        assert!(rung.report.pass(), "{}", failed_checks(&rung));
        assert!(rung.x_k >= START_MIN_X);
        assert!(rung.m0 > 2 * (rung.m_k + rung.p_k));
    }

    #[test]
    fn zero_rungs_and_cap_below_start() {
        let only = run_ladder(&LadderConfig { k: 0, ..LadderConfig::default() }).unwrap();
        assert_eq!(only.rungs.len(), 1);
        assert!(only.nested);
        let capped = run_ladder(&LadderConfig { x_cap: 1.0, ..LadderConfig::default() }).unwrap();
        assert_eq!(capped.rungs.len(), 1);
        assert!(capped.complete_at_cap);
    }

    #[test]
    fn build_rung_stops_at_cap() {
        let config = LadderConfig::default();
        let mut rung = start_rung(&config).unwrap();
        rung.x_k = config.x_cap - std::f64::consts::PI;
        assert!(matches!(build_rung(&rung, &config), Err(LadderError::LadderComplete { .. })));
    }
}
