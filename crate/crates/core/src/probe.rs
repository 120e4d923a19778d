//! Orbit statistics and escape-time renders over grids of starts or parameters.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{orbit, singular_orbit, EscapePolicy, OrbitStatus, Parameter};

/// Largest number of cells a grid may have.
pub const MAX_CELLS: usize = 100_000_000;
/// Pixel value for parameters that are not valid (λ = 0).
pub const INVALID: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// `nx × ny` cells over an axis-aligned window; row 0 is the top (largest `Im`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    min: Complex64,
    max: Complex64,
    nx: usize,
    ny: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    #[serde(with = "crate::serde_complex")]
    min: Complex64,
    #[serde(with = "crate::serde_complex")]
    max: Complex64,
    nx: usize,
    ny: usize,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = ProbeError;
    fn try_from(raw: RawGrid) -> Result<Self, ProbeError> {
        GridSpec::new(raw.min, raw.max, raw.nx, raw.ny)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(g: GridSpec) -> Self {
        RawGrid { min: g.min, max: g.max, nx: g.nx, ny: g.ny }
    }
}

impl GridSpec {
    pub fn new(min: Complex64, max: Complex64, nx: usize, ny: usize) -> Result<Self, ProbeError> {
        if !(min.is_finite() && max.is_finite() && min.re < max.re && min.im < max.im) {
            return Err(ProbeError::InvalidGrid(format!("degenerate window {min} .. {max}")));
        }
        if nx == 0 || ny == 0 || nx.checked_mul(ny).map_or(true, |n| n > MAX_CELLS) {
            return Err(ProbeError::InvalidGrid(format!("{nx}×{ny} cells outside 1..={MAX_CELLS}")));
        }
        Ok(GridSpec { min, max, nx, ny })
    }

    /// Square window `[lo, hi]²`.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self, ProbeError> {
        GridSpec::new(Complex64::new(lo, lo), Complex64::new(hi, hi), n, n)
    }

    pub fn min(&self) -> Complex64 {
        self.min
    }

    pub fn max(&self) -> Complex64 {
        self.max
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn step(&self) -> (f64, f64) {
        ((self.max.re - self.min.re) / self.nx as f64, (self.max.im - self.min.im) / self.ny as f64)
    }

    /// Centre of cell `i` in row-major order.
    pub fn point(&self, i: usize) -> Complex64 {
        let (dx, dy) = self.step();
        let (ix, iy) = (i % self.nx, i / self.nx);
        Complex64::new(self.min.re + (ix as f64 + 0.5) * dx, self.max.im - (iy as f64 + 0.5) * dy)
    }

    /// Row-major index of the cell containing `z`, if inside the window.
    pub fn cell(&self, z: Complex64) -> Option<usize> {
        let (dx, dy) = self.step();
        let fx = (z.re - self.min.re) / dx;
        let fy = (self.max.im - z.im) / dy;
        if !(fx >= 0.0 && fy >= 0.0 && fx < self.nx as f64 && fy < self.ny as f64) {
            return None;
        }
        Some(fy as usize * self.nx + fx as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccumulationStats {
    pub boxes_total: usize,
    pub boxes_visited: usize,
    /// Fraction of boxes hit by orbit iterates. A lower bound for
    /// "accumulates everywhere": only a fixed window and finitely many iterates are seen.
    pub coverage: f64,
    pub escaped_fraction: f64,
    pub escaped: usize,
    /// Survived all iterates and visited the box window.
    pub accumulating: usize,
    /// Survived all iterates without visiting the box window.
    pub running: usize,
    pub statistic: String,
}

/// Iterate each start `n` times; orbits that hit the policy cutoff (or overflow)
/// are escaped. Iterates `f^j(z₀)`, `j ≥ 1`, before escape are binned into `boxes`,
/// so coverage never decreases with `n`.
pub fn bock_probe(param: &Parameter, starts: &GridSpec, n: usize, boxes: &GridSpec, policy: &EscapePolicy) -> AccumulationStats {
    let capped = EscapePolicy { max_iter: n, ..*policy };
    let nb = boxes.len();
    let (visited, escaped, accumulating) = (0..starts.len())
        .into_par_iter()
        .fold(
            || (vec![false; nb], 0usize, 0usize),
            |(mut seen, mut esc, mut acc), i| {
                let trace = match orbit(param, starts.point(i), &capped) {
                    Ok(trace) => trace,
                    Err(_) => return (seen, esc + 1, acc),
                };
                let mut hit = false;
                for z in trace.points.iter().skip(1) {
                    if let Some(c) = boxes.cell(*z) {
                        seen[c] = true;
                        hit = true;
                    }
                }
                if !trace.is_completed() {
                    esc += 1;
                } else if hit {
                    acc += 1;
                }
                (seen, esc, acc)
            },
        )
        .reduce(
            || (vec![false; nb], 0, 0),
            |(mut a, ea, aa), (b, eb, ab)| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x |= y);
                (a, ea + eb, aa + ab)
            },
        );
    let total = starts.len();
    let boxes_visited = visited.iter().filter(|&&v| v).count();
    AccumulationStats {
        boxes_total: nb,
        boxes_visited,
        coverage: boxes_visited as f64 / nb as f64,
        escaped_fraction: escaped as f64 / total as f64,
        escaped,
        accumulating,
        running: total - escaped - accumulating,
        statistic: "lower bound: box coverage on a fixed window after finitely many iterates".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeCurve {
    /// `(T, fraction of starts with Re f^N(z₀) > T)`.
    pub points: Vec<(f64, f64)>,
    /// Starts whose orbit cannot be continued past step `N`; they count as above every `T`.
    pub overflow_fraction: f64,
}

/// Fraction of starts whose `N`-th iterate has real part above each threshold.
pub fn escape_measure_probe(param: &Parameter, starts: &GridSpec, n: usize, thresholds: &[f64]) -> Result<EscapeCurve, ProbeError> {
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(ProbeError::InvalidInput("thresholds must be strictly ascending".into()));
    }
    let headroom = param.headroom();
    let finals: Vec<f64> = (0..starts.len())
        .into_par_iter()
        .map(|i| {
            let mut z = starts.point(i);
            for _ in 0..n {
                match crate::dynamics::apply(param, z) {
                    Ok(w) => z = w,
                    Err(_) => return f64::INFINITY,
                }
            }
            if z.re > headroom {
                f64::INFINITY
            } else {
                z.re
            }
        })
        .collect();
    let total = finals.len() as f64;
    let above = |t: f64| finals.iter().filter(|&&x| x > t).count() as f64 / total;
    Ok(EscapeCurve {
        points: thresholds.iter().map(|&t| (t, above(t))).collect(),
        overflow_fraction: finals.iter().filter(|x| x.is_infinite()).count() as f64 / total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "plane", rename_all = "snake_case")]
pub enum FieldSource {
    Dynamical { lambda: Parameter },
    Parameter,
}

/// Escape times on a grid: 0 means no escape within `max_iter`, [`INVALID`] marks
/// pixels with no valid parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldImage {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<u32>,
    pub grid: GridSpec,
    pub source: FieldSource,
    pub max_iter: usize,
    pub re_cutoff: f64,
}

impl FieldImage {
    pub fn get(&self, ix: usize, iy: usize) -> u32 {
        self.values[iy * self.nx + ix]
    }
}

fn escape_time(status: OrbitStatus, offset: usize) -> u32 {
    match status {
        OrbitStatus::Completed => 0,
        OrbitStatus::Escaped(i) | OrbitStatus::Overflowed(i) => u32::try_from((i + offset).max(1)).unwrap_or(u32::MAX - 1),
    }
}

/// First iterate of each pixel's orbit beyond the cutoff.
pub fn render_escape_time(param: &Parameter, grid: &GridSpec, policy: &EscapePolicy) -> FieldImage {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| orbit(param, grid.point(i), policy).map_or(INVALID, |t| escape_time(t.status, 0)))
        .collect();
    FieldImage {
        nx: grid.nx,
        ny: grid.ny,
        values,
        grid: *grid,
        source: FieldSource::Dynamical { lambda: *param },
        max_iter: policy.max_iter,
        re_cutoff: policy.re_cutoff,
    }
}

/// First `n` with `ξ_n(λ)` beyond the cutoff, for each pixel `λ`.
pub fn render_parameter_plane(grid: &GridSpec, policy: &EscapePolicy) -> FieldImage {
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let Ok(param) = Parameter::new(grid.point(i)) else { return INVALID };
            singular_orbit(&param, policy.max_iter, policy).map_or(INVALID, |t| escape_time(t.status, 1))
        })
        .collect();
    FieldImage {
        nx: grid.nx,
        ny: grid.ny,
        values,
        grid: *grid,
        source: FieldSource::Parameter,
        max_iter: policy.max_iter,
        re_cutoff: policy.re_cutoff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell_at(z: Complex64, half: f64) -> GridSpec {
        GridSpec::new(z - Complex64::new(half, half), z + Complex64::new(half, half), 1, 1).unwrap()
    }

    #[test]
    fn grid_guards_and_cells() {
        assert!(GridSpec::square(1.0, 1.0, 4).is_err());
        assert!(GridSpec::square(0.0, 1.0, 20_000).is_err());
        let g = GridSpec::square(-2.0, 2.0, 4).unwrap();
        assert_eq!(g.point(0), Complex64::new(-1.5, 1.5));
        for i in 0..g.len() {
            assert_eq!(g.cell(g.point(i)), Some(i));
        }
        assert_eq!(g.cell(Complex64::new(3.0, 0.0)), None);
    }

    #[test]
    fn fixed_orbit_covers_one_box() {
        let param = Parameter::two_pi_i(1).unwrap();
        let boxes = GridSpec::square(-20.0, 20.0, 32).unwrap();
        let stats = bock_probe(&param, &cell_at(Complex64::new(0.0, 0.0), 1.0), 100, &boxes, &EscapePolicy::default());
        assert_eq!(stats.boxes_visited, 1);
        assert_eq!(stats.coverage, 1.0 / 1024.0);
        assert_eq!(stats.accumulating, 1);
    }

    #[test]
    fn coverage_grows_with_n_and_counts_partition() {
        let param = Parameter::two_pi_i(1).unwrap();
        let starts = GridSpec::square(-2.0, 2.0, 8).unwrap();
        let boxes = GridSpec::square(-20.0, 20.0, 16).unwrap();
        let short = bock_probe(&param, &starts, 20, &boxes, &EscapePolicy::default());
        let long = bock_probe(&param, &starts, 200, &boxes, &EscapePolicy::default());
        assert!(long.coverage >= short.coverage);
        for s in [&short, &long] {
            assert_eq!(s.escaped + s.accumulating + s.running, starts.len());
        }
    }

    #[test]
    fn escape_curve_is_monotone() {
        let param = Parameter::from_parts(1.0, 0.0).unwrap();
        let starts = GridSpec::square(-3.0, 3.0, 32).unwrap();
        let curve = escape_measure_probe(&param, &starts, 20, &[-1e300, 0.0, 10.0, 100.0, 710.0]).unwrap();
        assert_eq!(curve.points[0].1, 1.0);
        assert!(curve.points.windows(2).all(|w| w[1].1 <= w[0].1));
        assert_eq!(curve.points[4].1, curve.overflow_fraction);
        assert!(escape_measure_probe(&param, &starts, 20, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn immediate_escape_renders_one() {
        let param = Parameter::from_parts(1.0, 0.0).unwrap();
        let img = render_escape_time(&param, &cell_at(Complex64::new(10.0, 0.0), 0.5), &EscapePolicy::default());
        assert_eq!(img.values, vec![1]);
    }

    #[test]
    fn parameter_plane_fixed_and_invalid_pixels() {
        let policy = EscapePolicy::new(700.0, 60).unwrap();
        let fixed = render_parameter_plane(&cell_at(Complex64::new(0.0, crate::TWO_PI), 0.5), &policy);
        assert_eq!(fixed.values, vec![0]);
        let origin = render_parameter_plane(&cell_at(Complex64::new(0.0, 0.0), 1.0), &policy);
        assert_eq!(origin.values, vec![INVALID]);
    }

    #[test]
    fn renders_do_not_depend_on_thread_count() {
        let param = Parameter::from_parts(1.0, 0.0).unwrap();
        let grid = GridSpec::square(-4.0, 4.0, 48).unwrap();
        let policy = EscapePolicy::new(700.0, 100).unwrap();
        let many = render_escape_time(&param, &grid, &policy);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let one = pool.install(|| render_escape_time(&param, &grid, &policy));
        assert_eq!(many, one);
    }
}
