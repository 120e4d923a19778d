//! Post-singularly finite parameters: `λ` with `ξ_{m+p}(λ) = ξ_m(λ)` and a
//! repelling landing cycle.
//!
//! Residuals use the same condition scaling as [`crate::cycle`]: the closing
//! link `ξ_{m+p−1} ↦ ξ_{m+p} ≈ ξ_m` is measured as
//! `|ξ_{m+p} − ξ_m| / (max(1,|ξ_m|)·max(1,|ξ_{m+p−1}|))`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cycle::{cycle_from_point, cycle_residual, Cycle, CycleError, Stability};
use crate::dynamics::{parameter_derivative, singular_values, DynError, Parameter};

pub const DEFAULT_TOL: f64 = 1e-10;
/// Newton in `λ` stops with a domain error when an iterate comes this close to zero.
pub const COLLAPSE_RADIUS: f64 = 1e-12;
const POLISH_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsfSpec {
    pub m: usize,
    pub p: usize,
    pub seed_lambda: Parameter,
    pub tol: f64,
}

impl PsfSpec {
    pub fn new(m: usize, p: usize, seed_lambda: Parameter, tol: f64) -> Result<Self, PsfError> {
        if m == 0 || p == 0 {
            return Err(PsfError::InvalidInput(format!("pre-period and period must be positive (m={m}, p={p})")));
        }
        if !(tol > 0.0) {
            return Err(PsfError::InvalidInput(format!("tolerance must be positive, got {tol}")));
        }
        Ok(PsfSpec { m, p, seed_lambda, tol })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsfParameter {
    pub lambda: Parameter,
    pub m: usize,
    pub p: usize,
    pub residual: f64,
    pub cycle: Cycle,
    pub minimal: bool,
    /// Residual after each Newton step, starting with the seed.
    pub residual_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PsfError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no convergence after {steps} steps (residual {residual:e})")]
    NoConvergence { steps: usize, residual: f64 },
    #[error("landing cycle is {0:?}, expected repelling")]
    WrongStability(Stability),
    #[error("Newton iterate collapsed towards λ = 0")]
    Domain,
    #[error(transparent)]
    Cycle(#[from] CycleError),
}

/// Condition-scaled `|ξ_{m+p} − ξ_m|` from a list `xi[j] = ξ_{j+1}`.
fn closing_residual(xi: &[Complex64], m: usize, p: usize) -> f64 {
    let land = xi[m - 1];
    let back = xi[m + p - 1];
    let last = if m + p >= 2 { xi[m + p - 2] } else { Complex64::new(0.0, 0.0) };
    (back - land).norm() / (land.norm().max(1.0) * last.norm().max(1.0))
}

/// Newton on `G(λ) = ξ_{m+p}(λ) − ξ_m(λ)` with `G' = ξ'_{m+p} − ξ'_m`.
pub fn solve_psf(spec: &PsfSpec, max_steps: usize) -> Result<PsfParameter, PsfError> {
    let (m, p, tol) = (spec.m, spec.p, spec.tol);
    if m == 0 || p == 0 || !(tol > 0.0) {
        return Err(PsfError::InvalidInput("m, p and tol must be positive".into()));
    }
    let mut lambda = spec.seed_lambda;
    let mut history = Vec::new();
    let mut step = 0;
    loop {
        let trace = parameter_derivative(&lambda, m + p).map_err(|_| PsfError::NoConvergence {
            steps: step,
            residual: history.last().copied().unwrap_or(f64::INFINITY),
        })?;
        let residual = closing_residual(&trace.xi, m, p);
        history.push(residual);
        if residual < tol {
            break;
        }
        if step == max_steps {
            return Err(PsfError::NoConvergence { steps: step, residual });
        }
        let g = trace.xi(m + p) - trace.xi(m);
        let dg = trace.dxi(m + p) - trace.dxi(m);
        let next = lambda.value() - g / dg;
        if !next.is_finite() {
            return Err(PsfError::NoConvergence { steps: step, residual });
        }
        if next.norm() < COLLAPSE_RADIUS {
            return Err(PsfError::Domain);
        }
        lambda = Parameter::new(next).map_err(|_| PsfError::Domain)?;
        step += 1;
    }

    lambda = polish(lambda, m, p, &mut history);

    let xi = singular_values(&lambda, m + p).map_err(|_| PsfError::NoConvergence { steps: step, residual: f64::INFINITY })?;
    let cycle = landing_cycle(&lambda, &xi, m, p)?;
    if !cycle.is_repelling() {
        return Err(PsfError::WrongStability(cycle.stability));
    }
    let minimal = (1..m).all(|mm| closing_residual(&xi, mm, p) >= tol);
    Ok(PsfParameter {
        lambda,
        m,
        p,
        residual: *history.last().expect("at least one residual"),
        cycle,
        minimal,
        residual_history: history,
    })
}

/// Extra Newton steps past the tolerance, kept only while the residual keeps dropping.
fn polish(mut lambda: Parameter, m: usize, p: usize, history: &mut Vec<f64>) -> Parameter {
    for _ in 0..POLISH_STEPS {
        let current = *history.last().expect("residual recorded");
        if current == 0.0 {
            break;
        }
        let Ok(trace) = parameter_derivative(&lambda, m + p) else { break };
        let g = trace.xi(m + p) - trace.xi(m);
        let dg = trace.dxi(m + p) - trace.dxi(m);
        let Ok(next) = Parameter::new(lambda.value() - g / dg) else { break };
        let Ok(xi) = singular_values(&next, m + p) else { break };
        let r = closing_residual(&xi, m, p);
        if r >= current {
            break;
        }
        history.push(r);
        lambda = next;
    }
    lambda
}

/// The cycle `ξ_m, …, ξ_{m+p−1}` read off the singular orbit.
fn landing_cycle(lambda: &Parameter, xi: &[Complex64], m: usize, p: usize) -> Result<Cycle, CycleError> {
    let points = xi[m - 1..m + p - 1].to_vec();
    let mut cycle = cycle_from_point(lambda, points[0], p)?;
    // keep the orbit's own points; they are what the singular value actually visits
    cycle.residual = cycle_residual(lambda, &points);
    cycle.points = points;
    Ok(cycle)
}

/// Smallest pre-period `m` (then period `p`) with `m + p ≤ max_len` for which the
/// singular orbit of `param` closes up, as a [`PsfParameter`] (no Newton steps).
pub fn detect_psf(param: &Parameter, max_len: usize, tol: f64) -> Option<PsfParameter> {
    let xi = match singular_values(param, max_len) {
        Ok(xi) => xi,
        Err(DynError::Overflow { step }) if step > 2 => singular_values(param, step - 1).ok()?,
        Err(_) => return None,
    };
    let len = xi.len();
    for m in 1..len {
        for p in 1..=(len - m) {
            let residual = closing_residual(&xi, m, p);
            if residual < tol {
                let cycle = landing_cycle(param, &xi, m, p).ok()?;
                return Some(PsfParameter {
                    lambda: *param,
                    m,
                    p,
                    residual,
                    minimal: true,
                    cycle,
                    residual_history: vec![residual],
                });
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsfReport {
    pub lambda: Parameter,
    pub m: usize,
    pub p: usize,
    #[serde(with = "crate::serde_complex::float")]
    pub residual: f64,
    #[serde(with = "crate::serde_complex::option")]
    pub multiplier: Option<Complex64>,
    pub checks: Vec<Check>,
}

impl PsfReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Recompute residual, landing cycle, stability, minimality of `m` and of `p`,
/// and that the landing cycle stays away from the singular value.
pub fn verify_psf(param: &Parameter, m: usize, p: usize, tol: f64) -> PsfReport {
    let mut checks = Vec::new();
    let mut report = PsfReport { lambda: *param, m, p, residual: f64::INFINITY, multiplier: None, checks: Vec::new() };
    if m == 0 || p == 0 {
        checks.push(Check { name: "input".into(), pass: false, detail: "m and p must be positive".into() });
        report.checks = checks;
        return report;
    }
    let xi = match singular_values(param, m + p) {
        Ok(xi) => xi,
        Err(DynError::Overflow { step }) => {
            checks.push(Check { name: "orbit".into(), pass: false, detail: format!("overflow at step {step}") });
            report.checks = checks;
            return report;
        }
        Err(e) => {
            checks.push(Check { name: "orbit".into(), pass: false, detail: e.to_string() });
            report.checks = checks;
            return report;
        }
    };
    let residual = closing_residual(&xi, m, p);
    report.residual = residual;
    checks.push(Check { name: "residual".into(), pass: residual < tol, detail: format!("{residual:e} vs tol {tol:e}") });

    match landing_cycle(param, &xi, m, p) {
        Ok(cycle) => {
            report.multiplier = Some(cycle.multiplier);
            checks.push(Check {
                name: "repelling".into(),
                pass: cycle.is_repelling(),
                detail: format!("|multiplier| = {:e}", cycle.multiplier.norm()),
            });
            let nearest = cycle.points.iter().map(|w| w.norm()).fold(f64::INFINITY, f64::min);
            checks.push(Check {
                name: "non_recurrent".into(),
                pass: nearest > tol,
                detail: format!("min |w_j| = {nearest:e}"),
            });
        }
        Err(e) => checks.push(Check { name: "repelling".into(), pass: false, detail: e.to_string() }),
    }

    let earlier: Vec<usize> = (1..m).filter(|&mm| closing_residual(&xi, mm, p) < tol).collect();
    checks.push(Check {
        name: "m_minimal".into(),
        pass: earlier.is_empty(),
        detail: if earlier.is_empty() { "minimal".into() } else { format!("already periodic at m = {earlier:?}") },
    });

    let divisors: Vec<usize> = (1..p).filter(|d| p % d == 0 && closing_residual(&xi, m, *d) < tol).collect();
    checks.push(Check {
        name: "p_minimal".into(),
        pass: divisors.is_empty(),
        detail: if divisors.is_empty() { "minimal".into() } else { format!("closes with period {divisors:?}") },
    });

    report.checks = checks;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::TWO_PI;

    #[test]
    fn solves_two_pi_i() {
        let spec = PsfSpec::new(1, 1, Parameter::from_parts(0.0, 6.3).unwrap(), 1e-10).unwrap();
        let sol = solve_psf(&spec, 50).unwrap();
        assert!((sol.lambda.value() - Complex64::new(0.0, TWO_PI)).norm() < 1e-12);
        assert!(sol.residual < 1e-13);
        assert!(sol.minimal);
        assert!(sol.cycle.is_repelling());
    }

    #[test]
    fn solves_four_pi_i() {
        let spec = PsfSpec::new(1, 1, Parameter::from_parts(0.0, 12.5).unwrap(), 1e-10).unwrap();
        let sol = solve_psf(&spec, 50).unwrap();
        assert!((sol.lambda.value() - Complex64::new(0.0, 2.0 * TWO_PI)).norm() < 1e-12, "{:?}", sol);
    }

    #[test]
    fn spec_validation() {
        let seed = Parameter::from_parts(0.0, 6.3).unwrap();
        assert!(PsfSpec::new(0, 1, seed, 1e-10).is_err());
        assert!(PsfSpec::new(1, 0, seed, 1e-10).is_err());
        assert!(PsfSpec::new(1, 1, seed, 0.0).is_err());
    }

    #[test]
    fn verify_examples() {
        let tpi = Parameter::two_pi_i(1).unwrap();
        let r = verify_psf(&tpi, 1, 1, 1e-10);
        assert!(r.all_pass(), "{r:?}");
        assert_eq!(r.multiplier, Some(Complex64::new(0.0, TWO_PI)));

        let r = verify_psf(&tpi, 2, 1, 1e-10);
        assert!(!r.check("m_minimal").unwrap().pass);
        assert!(r.check("residual").unwrap().pass);

        let one = Parameter::from_parts(1.0, 0.0).unwrap();
        let r = verify_psf(&one, 1, 1, 1e-10);
        assert!(!r.check("residual").unwrap().pass);
        assert!((r.residual - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn detects_two_pi_i_family() {
        let found = detect_psf(&Parameter::two_pi_i(3).unwrap(), 16, 1e-10).unwrap();
        assert_eq!((found.m, found.p), (1, 1));
        assert!(detect_psf(&Parameter::from_parts(1.0, 0.0).unwrap(), 16, 1e-10).is_none());
    }

    #[test]
    fn verify_flags_non_minimal_period() {
        let tpi = Parameter::two_pi_i(1).unwrap();
        let r = verify_psf(&tpi, 1, 2, 1e-10);
        assert!(r.check("residual").unwrap().pass);
        assert!(!r.check("p_minimal").unwrap().pass);
    }
}
