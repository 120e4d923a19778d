//! Periodic cycles of `f(z) = λ·e^z`: Newton refinement, classification,
//! band searches near the line `Im z = −arg λ`, and continuation in `λ`.
//!
//! Cycle points far to the right have images of modulus `≈ |λ|e^{Re z}`, so a
//! plain absolute residual `|f(w_j) − w_{j+1}|` is dominated by rounding of the
//! large points. Residuals here are condition-scaled:
//!
//! ```text
//! |f(w_j) − w_{j+1}| / (max(1, |w_j|) · max(1, |w_{j+1}|))
//! ```
//!
//! which equals the absolute residual for points of modulus at most one and
//! otherwise measures the relative perturbation of `w_j` needed to close the link
//! (the condition number of `e^z` at `w` is `|w|`).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{apply, DynError, Parameter};
use crate::TWO_PI;

/// `|Λ|` within this distance of one is classified as indifferent.
pub const CLASS_MARGIN: f64 = 1e-9;
/// Newton gives up when `|F'|` drops below this.
pub const SINGULAR_JACOBIAN: f64 = 1e-14;
/// Default seed lattice is `DEFAULT_DENSITY × DEFAULT_DENSITY` per square.
pub const DEFAULT_DENSITY: usize = 8;
/// Default number of straight segments for continuation.
pub const DEFAULT_CONTINUATION_STEPS: usize = 16;

const PULLBACK_ITERS: usize = 80;
const NEWTON_POLISH_STEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Repelling,
    Attracting,
    Indifferent,
}

impl Stability {
    pub fn classify(multiplier: Complex64) -> Self {
        let m = multiplier.norm();
        if m > 1.0 + CLASS_MARGIN {
            Stability::Repelling
        } else if m < 1.0 - CLASS_MARGIN {
            Stability::Attracting
        } else {
            Stability::Indifferent
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub lambda: Parameter,
    pub period: usize,
    #[serde(with = "crate::serde_complex::vec")]
    pub points: Vec<Complex64>,
    #[serde(with = "crate::serde_complex")]
    pub multiplier: Complex64,
    pub stability: Stability,
    pub residual: f64,
}

impl Cycle {
    pub fn is_repelling(&self) -> bool {
        self.stability == Stability::Repelling
    }

    /// Distance from `z` to the nearest cycle point.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.points.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// A square of the ladder: by default side `2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SquareTarget {
    #[serde(with = "crate::serde_complex")]
    pub center: Complex64,
    pub side: f64,
}

impl SquareTarget {
    pub fn new(center: Complex64, side: f64) -> Result<Self, CycleError> {
        if !(side > 0.0 && side.is_finite()) || !center.is_finite() {
            return Err(CycleError::InvalidInput(format!("square side must be positive, got {side}")));
        }
        Ok(SquareTarget { center, side })
    }

    /// The square of side `2π` centred on the line `Im z = −arg λ` at real part `x`.
    pub fn on_line(param: &Parameter, x: f64) -> Self {
        SquareTarget { center: Complex64::new(x, -param.arg()), side: TWO_PI }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let h = 0.5 * self.side;
        (z.re - self.center.re).abs() <= h && (z.im - self.center.im).abs() <= h
    }
}

/// One line of the scan log carried by [`CycleError::NotFound`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub period: usize,
    pub seeds: usize,
    pub converged: usize,
    pub in_band: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CycleError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("Newton did not converge within {steps} steps (last iterate {last})")]
    NoConvergence { steps: usize, last: Complex64 },
    #[error("singular Jacobian at {at}")]
    SingularJacobian { at: Complex64 },
    #[error("product of cycle points overflowed")]
    Overflow,
    #[error("no repelling cycle near x = {x_target} (scanned {} periods)", log.len())]
    NotFound { x_target: f64, log: Vec<ScanEntry> },
    #[error("continuation lost; last good parameter {last_good}")]
    ContinuationLost { last_good: Parameter },
    #[error("stability changed from {from:?} to {to:?} at {at}")]
    BifurcationCrossed { at: Parameter, from: Stability, to: Stability },
}

impl From<DynError> for CycleError {
    fn from(e: DynError) -> Self {
        match e {
            DynError::Overflow { .. } => CycleError::Overflow,
            other => CycleError::InvalidInput(other.to_string()),
        }
    }
}

/// Condition-scaled residual of the link `w ↦ next`; infinite on overflow.
pub fn link_residual(param: &Parameter, w: Complex64, next: Complex64) -> f64 {
    match apply(param, w) {
        Ok(fw) => (fw - next).norm() / (w.norm().max(1.0) * next.norm().max(1.0)),
        Err(_) => f64::INFINITY,
    }
}

/// Largest link residual around the closed sequence `points`.
pub fn cycle_residual(param: &Parameter, points: &[Complex64]) -> f64 {
    let p = points.len();
    (0..p).map(|j| link_residual(param, points[j], points[(j + 1) % p])).fold(0.0, f64::max)
}

/// Product of the cycle points, which is the multiplier because `f' = f`.
pub fn multiplier_of(cycle: &Cycle) -> Result<Complex64, CycleError> {
    product_of(&cycle.points)
}

fn product_of(points: &[Complex64]) -> Result<Complex64, CycleError> {
    let prod = points.iter().fold(Complex64::new(1.0, 0.0), |acc, w| acc * w);
    if prod.is_finite() {
        Ok(prod)
    } else {
        Err(CycleError::Overflow)
    }
}

/// Build the cycle through `w0` by forward iteration (`p` points), without refinement.
pub fn cycle_from_point(param: &Parameter, w0: Complex64, p: usize) -> Result<Cycle, CycleError> {
    if p == 0 {
        return Err(CycleError::InvalidInput("period must be at least 1".into()));
    }
    let mut points = Vec::with_capacity(p);
    points.push(w0);
    for j in 1..p {
        points.push(apply(param, points[j - 1])?);
    }
    let multiplier = product_of(&points)?;
    Ok(Cycle {
        lambda: *param,
        period: p,
        residual: cycle_residual(param, &points),
        stability: Stability::classify(multiplier),
        multiplier,
        points,
    })
}

/// Newton on `F(z) = f^p(z) − z`, `F'(z) = (f^p)'(z) − 1`.
///
/// Converged when the closing link residual (condition-scaled, see module docs)
/// is below `tol`. The returned cycle always satisfies `residual < tol`.
pub fn refine_cycle(param: &Parameter, seed: Complex64, p: usize, tol: f64, max_steps: usize) -> Result<Cycle, CycleError> {
    if p == 0 {
        return Err(CycleError::InvalidInput("period must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(CycleError::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    if !seed.is_finite() {
        return Err(CycleError::InvalidInput("seed must be finite".into()));
    }
    let mut z = seed;
    for step in 0..=max_steps {
        let Some((image, derivative, last)) = orbit_with_derivative(param, z, p) else {
            return Err(CycleError::NoConvergence { steps: step, last: z });
        };
        let f = image - z;
        let closing = f.norm() / (last.norm().max(1.0) * z.norm().max(1.0));
        if closing < tol {
            let cycle = cycle_from_point(param, z, p)?;
            if cycle.residual < tol {
                return Ok(cycle);
            }
        }
        if step == max_steps {
            break;
        }
        let jac = derivative - 1.0;
        if jac.norm() < SINGULAR_JACOBIAN {
            return Err(CycleError::SingularJacobian { at: z });
        }
        let next = z - f / jac;
        if !next.is_finite() {
            return Err(CycleError::NoConvergence { steps: step, last: z });
        }
        z = next;
    }
    Err(CycleError::NoConvergence { steps: max_steps, last: z })
}

/// `(f^p(z), (f^p)'(z), f^{p−1}(z))`, or `None` on overflow.
fn orbit_with_derivative(param: &Parameter, z: Complex64, p: usize) -> Option<(Complex64, Complex64, Complex64)> {
    let mut w = z;
    let mut last = z;
    let mut d = Complex64::new(1.0, 0.0);
    for _ in 0..p {
        last = w;
        w = apply(param, w).ok()?;
        d *= w;
    }
    (d.is_finite()).then_some((w, d, last))
}

/// The branch of `f^{-1}(w)` whose imaginary part is closest to `near`.
pub fn preimage_near(param: &Parameter, w: Complex64, near: Complex64) -> Option<Complex64> {
    if w.norm() == 0.0 {
        return None;
    }
    let base = (w / param.value()).ln();
    let k = ((near.im - base.im) / TWO_PI).round();
    let z = Complex64::new(base.re, k.mul_add(TWO_PI, base.im));
    z.is_finite().then_some(z)
}

/// Fixed-point iteration of the inverse-branch composition selected by `guess`
/// (`guess[j]` approximates the `j`-th cycle point). Repelling cycles are
/// attracting for this map, so it converges from coarse guesses.
pub fn pullback_refine(param: &Parameter, guess: &[Complex64], max_iter: usize) -> Option<Complex64> {
    let p = guess.len();
    let mut w = *guess.first()?;
    for _ in 0..max_iter {
        let mut v = w;
        for j in (0..p).rev() {
            v = preimage_near(param, v, guess[j])?;
        }
        let delta = (v - w).norm();
        w = v;
        if delta <= 1e-15 * w.norm().max(1.0) {
            break;
        }
    }
    Some(w)
}

/// Row-major `density × density` lattice of cell centres, starting at the lower-left cell.
pub fn seed_grid(target: &SquareTarget, density: usize) -> Vec<Complex64> {
    let step = target.side / density as f64;
    let origin = target.center - Complex64::new(0.5 * target.side, 0.5 * target.side);
    let mut seeds = Vec::with_capacity(density * density);
    for iy in 0..density {
        for ix in 0..density {
            seeds.push(origin + Complex64::new((ix as f64 + 0.5) * step, (iy as f64 + 0.5) * step));
        }
    }
    seeds
}

/// Both band conditions: `|Re w − x| < π` and `|Im w + arg λ| < 2π`.
pub fn in_band(param: &Parameter, w: Complex64, x_target: f64) -> bool {
    (w.re - x_target).abs() < std::f64::consts::PI && (w.im + param.arg()).abs() < TWO_PI
}

/// Rotate so that the first band point comes first.
fn rotate_to_band(param: &Parameter, cycle: Cycle, x_target: f64, tol: f64) -> Option<Cycle> {
    let start = cycle.points.iter().position(|&w| in_band(param, w, x_target))?;
    let mut rotated = cycle;
    rotated.points.rotate_left(start);
    (rotated.is_repelling() && rotated.residual < tol).then_some(rotated)
}

/// Cycle through `w0` whose remaining points are obtained by pulling `w0` back
/// along the branches selected by `guess` (`guess[j]` approximates `w_j`).
pub fn cycle_from_point_backward(param: &Parameter, w0: Complex64, guess: &[Complex64]) -> Option<Cycle> {
    let p = guess.len();
    let mut points = vec![w0; p];
    let mut v = w0;
    for j in (1..p).rev() {
        v = preimage_near(param, v, guess[j])?;
        points[j] = v;
    }
    let multiplier = product_of(&points).ok()?;
    Some(Cycle {
        lambda: *param,
        period: p,
        residual: cycle_residual(param, &points),
        stability: Stability::classify(multiplier),
        multiplier,
        points,
    })
}

/// Settle onto a cycle near `guess`: inverse-branch pullback first (exact for
/// repelling cycles whose large points cannot be reached by forward iteration),
/// Newton on `f^p(z) − z` as the fallback.
fn settle(param: &Parameter, guess: &[Complex64], tol: f64) -> Option<Cycle> {
    if let Some(w0) = pullback_refine(param, guess, PULLBACK_ITERS) {
        let refreshed: Vec<Complex64> = std::iter::once(w0).chain(guess[1..].iter().copied()).collect();
        if let Some(c) = cycle_from_point_backward(param, w0, &refreshed) {
            if c.residual < tol && c.is_repelling() {
                return Some(c);
            }
        }
        if let Ok(c) = refine_cycle(param, w0, guess.len(), tol, NEWTON_POLISH_STEPS) {
            return Some(c);
        }
    }
    refine_cycle(param, guess[0], guess.len(), tol, NEWTON_POLISH_STEPS).ok()
}

fn try_seed(param: &Parameter, seed: Complex64, p: usize, tol: f64, x_target: f64) -> (bool, Option<Cycle>) {
    let mut guess = Vec::with_capacity(p);
    let mut z = seed;
    for j in 0..p {
        guess.push(z);
        if j + 1 < p {
            match apply(param, z) {
                Ok(w) => z = w,
                Err(_) => return (false, None),
            }
        }
    }
    match settle(param, &guess, tol) {
        Some(c) => (true, rotate_to_band(param, c, x_target, tol)),
        None => (false, None),
    }
}

fn same_cycle(a: &Cycle, b: &Cycle) -> bool {
    a.period == b.period
        && a.points.iter().any(|&w| (w - b.points[0]).norm() <= 1e-7 * w.norm().max(1.0))
}

/// All distinct repelling band cycles for the smallest period in `2..=p_max`
/// that yields any, in seed-scan order.
pub fn scan_cycles_near_line(
    param: &Parameter,
    x_target: f64,
    p_max: usize,
    tol: f64,
    density: usize,
) -> Result<Vec<Cycle>, CycleError> {
    if p_max < 2 {
        return Err(CycleError::InvalidInput(format!("p_max must be at least 2, got {p_max}")));
    }
    if density == 0 || !(tol > 0.0) || !x_target.is_finite() {
        return Err(CycleError::InvalidInput("density and tol must be positive, x_target finite".into()));
    }
    let seeds = seed_grid(&SquareTarget::on_line(param, x_target), density);
    let mut log = Vec::new();
    for p in 2..=p_max {
        let results: Vec<(bool, Option<Cycle>)> =
            seeds.par_iter().map(|&s| try_seed(param, s, p, tol, x_target)).collect();
        let converged = results.iter().filter(|r| r.0).count();
        let mut found: Vec<Cycle> = Vec::new();
        for c in results.into_iter().filter_map(|r| r.1) {
            if c.period == p && !found.iter().any(|f| same_cycle(f, &c)) {
                found.push(c);
            }
        }
        log.push(ScanEntry { period: p, seeds: seeds.len(), converged, in_band: found.len() });
        if !found.is_empty() {
            return Ok(found);
        }
    }
    Err(CycleError::NotFound { x_target, log })
}

/// A repelling cycle with a point `w` satisfying `|Re w − x_target| < π` and
/// `|Im w + arg λ| < 2π`; `points[0]` is that point. Smallest period wins, then
/// smallest residual, then scan order.
pub fn find_cycle_near_line(param: &Parameter, x_target: f64, p_max: usize, tol: f64) -> Result<Cycle, CycleError> {
    let found = scan_cycles_near_line(param, x_target, p_max, tol, DEFAULT_DENSITY)?;
    let mut best = found[0].clone();
    for c in found.into_iter().skip(1) {
        if c.residual < best.residual {
            best = c;
        }
    }
    Ok(best)
}

/// Follow `cycle` along the straight path from its parameter to `new_param`.
///
/// Each segment re-seeds from the previous cycle (pulled back along the same
/// branches when repelling) and polishes with Newton. Failed segments are halved,
/// down to 1/1024 of the initial segment length.
pub fn continue_cycle(cycle: &Cycle, new_param: &Parameter, steps: usize, tol: f64) -> Result<Cycle, CycleError> {
    if steps == 0 {
        return Err(CycleError::InvalidInput("steps must be at least 1".into()));
    }
    let from = cycle.lambda.value();
    let to = new_param.value();
    let mut current = cycle.clone();
    let mut t = 0.0_f64;
    let mut h = 1.0 / steps as f64;
    let min_h = h / 1024.0;
    let mut first = true;
    while first || t < 1.0 {
        first = false;
        let t_next = (t + h).min(1.0);
        let lambda = if t_next >= 1.0 { to } else { from + (to - from) * t_next };
        match continuation_step(&current, lambda, tol) {
            Some(next) => {
                if next.stability != cycle.stability {
                    return Err(CycleError::BifurcationCrossed { at: next.lambda, from: cycle.stability, to: next.stability });
                }
                current = next;
                t = t_next;
            }
            None => {
                h *= 0.5;
                if h < min_h {
                    return Err(CycleError::ContinuationLost { last_good: current.lambda });
                }
            }
        }
    }
    Ok(current)
}

fn continuation_step(current: &Cycle, lambda: Complex64, tol: f64) -> Option<Cycle> {
    let param = Parameter::new(lambda).ok()?;
    let next = if current.is_repelling() {
        settle(&param, &current.points, tol)?
    } else {
        refine_cycle(&param, current.points[0], current.period, tol, NEWTON_POLISH_STEPS).ok()?
    };
    // reject jumps to a different cycle
    let scale = current.points[0].norm().max(1.0);
    ((next.points[0] - current.points[0]).norm() <= 0.5 * scale).then_some(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::orbit_derivative;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn refine_exact_fixed_point_of_two_pi_i() {
        let p = Parameter::two_pi_i(1).unwrap();
        let cyc = refine_cycle(&p, c(0.0, 6.2), 1, 1e-12, 50).unwrap();
        assert!((cyc.points[0] - c(0.0, TWO_PI)).norm() < 1e-14);
        assert!((cyc.multiplier - c(0.0, TWO_PI)).norm() < 1e-14);
        assert_eq!(cyc.stability, Stability::Repelling);
    }

    #[test]
    fn refine_fixed_point_of_exp() {
        let one = Parameter::from_parts(1.0, 0.0).unwrap();
        let cyc = refine_cycle(&one, c(0.3, 1.3), 1, 1e-12, 50).unwrap();
        let w = cyc.points[0];
        assert!((w - c(0.318131505, 1.337235701)).norm() < 1e-8);
        assert_relative_eq!(cyc.multiplier.norm(), 1.374557, max_relative = 1e-6);
        assert!(cyc.residual < 1e-12);
        // multiplier of a fixed point is the point itself
        assert_eq!(multiplier_of(&cyc).unwrap(), w);
    }

    #[test]
    fn refine_from_zero_never_returns_a_bad_cycle() {
        let one = Parameter::from_parts(1.0, 0.0).unwrap();
        match refine_cycle(&one, c(0.0, 0.0), 1, 1e-12, 50) {
            Ok(cyc) => assert!(cyc.residual < 1e-12),
            Err(e) => assert!(matches!(e, CycleError::SingularJacobian { .. } | CycleError::NoConvergence { .. })),
        }
    }

    #[test]
    fn refine_rejects_bad_input() {
        let one = Parameter::from_parts(1.0, 0.0).unwrap();
        assert!(refine_cycle(&one, c(0.0, 1.0), 0, 1e-12, 5).is_err());
        assert!(refine_cycle(&one, c(0.0, 1.0), 1, 0.0, 5).is_err());
    }

    #[test]
    fn multiplier_of_period_two_is_product() {
        let one = Parameter::from_parts(1.0, 0.0).unwrap();
        let cyc = find_cycle_near_line(&one, 3.0, 3, 1e-10).unwrap();
        if cyc.period == 2 {
            assert_eq!(multiplier_of(&cyc).unwrap(), cyc.points[0] * cyc.points[1]);
        }
        let d = orbit_derivative(&one, cyc.points[0], cyc.period).unwrap();
        assert!((d - cyc.multiplier).norm() / cyc.multiplier.norm() < 1e-9);
    }

    #[test]
    fn seed_grid_examples() {
        let sq = SquareTarget::new(c(0.0, 0.0), TWO_PI).unwrap();
        assert_eq!(seed_grid(&sq, 1), vec![c(0.0, 0.0)]);
        let h = std::f64::consts::FRAC_PI_2;
        let g = seed_grid(&sq, 2);
        assert_eq!(g.len(), 4);
        let expect = [c(-h, -h), c(h, -h), c(-h, h), c(h, h)];
        for (a, b) in g.iter().zip(expect) {
            assert!((a - b).norm() < 1e-15);
        }
        let p = Parameter::from_parts(0.3, 0.8).unwrap();
        let sq = SquareTarget::on_line(&p, 10.0);
        let g = seed_grid(&sq, 8);
        assert_eq!(g.len(), 64);
        assert!(g.iter().all(|&z| sq.contains(z)));
        assert!(SquareTarget::new(c(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn band_cycle_for_exp_near_three() {
        let one = Parameter::from_parts(1.0, 0.0).unwrap();
        let cyc = find_cycle_near_line(&one, 3.0, 3, 1e-10).unwrap();
        assert!(cyc.is_repelling());
        assert!(in_band(&one, cyc.points[0], 3.0));
        assert!(cyc.residual < 1e-10);
        assert!(cyc.period >= 2);
    }

    #[test]
    fn band_cycle_far_right() {
        let one = Parameter::from_parts(1.0, 0.0).unwrap();
        let cyc = find_cycle_near_line(&one, 650.0, 2, 1e-10).unwrap();
        assert_eq!(cyc.period, 2);
        let w0 = cyc.points[0];
        let w1 = cyc.points[1];
        assert!((w0.re - 650.0).abs() < std::f64::consts::PI);
        assert_relative_eq!(w1.norm().ln(), w0.re, max_relative = 1e-12);
        // far point lies close to the imaginary axis
        assert!(w1.re.abs() < 1e-6 * w1.norm());
    }

    #[test]
    fn band_search_contract_for_two_pi_i() {
        let p = Parameter::two_pi_i(1).unwrap();
        match find_cycle_near_line(&p, 0.0, 3, 1e-10) {
            Ok(cyc) => {
                assert!(in_band(&p, cyc.points[0], 0.0));
                assert!(cyc.is_repelling());
            }
            Err(e) => assert!(matches!(e, CycleError::NotFound { .. })),
        }
    }

    #[test]
    fn continue_to_same_parameter_is_identity() {
        let p = Parameter::two_pi_i(1).unwrap();
        let cyc = refine_cycle(&p, c(0.0, 6.2), 1, 1e-12, 50).unwrap();
        let same = continue_cycle(&cyc, &p, DEFAULT_CONTINUATION_STEPS, 1e-12).unwrap();
        assert!((same.points[0] - cyc.points[0]).norm() < 1e-12);
    }

    #[test]
    fn continue_fixed_point_of_two_pi_i() {
        let p = Parameter::two_pi_i(1).unwrap();
        let cyc = refine_cycle(&p, c(0.0, 6.2), 1, 1e-12, 50).unwrap();
        let q = Parameter::new(p.value() * 1.001).unwrap();
        let moved = continue_cycle(&cyc, &q, DEFAULT_CONTINUATION_STEPS, 1e-12).unwrap();
        // implicit-function prediction: dz/dλ = z/(λ(1 − z)) at z = λ
        let lam = p.value();
        let predicted = lam + lam / (lam * (1.0 - lam)) * (q.value() - lam);
        assert!((moved.points[0] - predicted).norm() < 1e-4);
        assert!((moved.multiplier - lam).norm() < 0.05);
        assert!(moved.is_repelling());
    }

    #[test]
    fn continuation_detects_stability_change() {
        // fixed point z with λ = z·e^{−z}; |z| crosses one along the path
        let z_start = c(0.0, 0.5);
        let z_end = c(0.0, 2.0);
        let p0 = Parameter::new(z_start * (-z_start).exp()).unwrap();
        let p1 = Parameter::new(z_end * (-z_end).exp()).unwrap();
        let cyc = refine_cycle(&p0, z_start, 1, 1e-12, 50).unwrap();
        assert_eq!(cyc.stability, Stability::Attracting);
        let err = continue_cycle(&cyc, &p1, DEFAULT_CONTINUATION_STEPS, 1e-12).unwrap_err();
        assert!(matches!(err, CycleError::BifurcationCrossed { .. }), "{err:?}");
    }
}
