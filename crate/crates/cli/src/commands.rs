//! Subcommand execution. Every run writes its artifacts plus `manifest.json`.

use std::path::{Path, PathBuf};

use expforge::cycle::find_cycle_near_line;
use expforge::dynamics::{orbit, singular_orbit, EscapePolicy, Parameter};
use expforge::ladder::{run_ladder, LadderConfig, LadderError, Rung};
use expforge::probe::{bock_probe, escape_measure_probe, render_escape_time, render_parameter_plane, FieldImage, GridSpec};
use expforge::psf::{solve_psf, verify_psf, PsfSpec};
use expforge::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::cli::{Cli, Command, ProbeKind, RenderKind};
use crate::complex::parse_complex;
use crate::config::{parse_config, ConfigError, RawConfig};
use crate::io::{curve_rows, encode_pgm, orbit_records, to_csv, IoError, RunManifest, RunWriter};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl CliError {
    /// 1 for domain and I/O failures, 2 for usage errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn domain(e: impl ToString) -> CliError {
    CliError::Domain(e.to_string())
}

fn parameter(text: &str) -> Result<Parameter, CliError> {
    Parameter::new(parse_complex(text).map_err(usage)?).map_err(usage)
}

/// `lo,hi,n` for a square grid or `x0,y0,x1,y1,nx,ny`.
pub fn parse_grid(text: &str) -> Result<GridSpec, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let f = |s: &str| s.parse::<f64>().map_err(|_| usage(format!("bad grid number `{s}` in `{text}`")));
    let n = |s: &str| s.parse::<usize>().map_err(|_| usage(format!("bad grid size `{s}` in `{text}`")));
    let grid = match parts.as_slice() {
        [lo, hi, k] => GridSpec::square(f(lo)?, f(hi)?, n(k)?),
        [x0, y0, x1, y1, nx, ny] => {
            GridSpec::new(Complex64::new(f(x0)?, f(y0)?), Complex64::new(f(x1)?, f(y1)?), n(nx)?, n(ny)?)
        }
        _ => return Err(usage(format!("grid `{text}` must be `lo,hi,n` or `x0,y0,x1,y1,nx,ny`"))),
    };
    grid.map_err(usage)
}

fn policy(cutoff: f64, max_iter: usize) -> Result<EscapePolicy, CliError> {
    EscapePolicy::new(cutoff, max_iter).map_err(usage)
}

/// Output directory: `EXPFORGE_OUT` if set, else `--out`.
pub fn output_dir(cli_out: &Path) -> PathBuf {
    match std::env::var_os("EXPFORGE_OUT") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => cli_out.to_path_buf(),
    }
}

pub fn ladder_config(cli: &Cli, k: Option<usize>) -> Result<LadderConfig, CliError> {
    let seed = cli.seed_override.as_deref();
    let mut config = match &cli.config {
        Some(path) => parse_config(path, seed)?,
        None => RawConfig::default().into_config(seed)?,
    };
    if let Some(k) = k {
        config.k = k;
    }
    Ok(config)
}

#[derive(Serialize)]
struct ImageMeta<'a> {
    image: &'a str,
    nx: usize,
    ny: usize,
    grid: &'a GridSpec,
    source: &'a expforge::probe::FieldSource,
    max_iter: usize,
    re_cutoff: f64,
    encoding: &'static str,
}

fn write_image(out: &mut RunWriter, stem: &str, image: &FieldImage) -> Result<(), CliError> {
    let name = format!("{stem}.pgm");
    out.write(&name, &encode_pgm(image))?;
    let meta = ImageMeta {
        image: &name,
        nx: image.nx,
        ny: image.ny,
        grid: &image.grid,
        source: &image.source,
        max_iter: image.max_iter,
        re_cutoff: image.re_cutoff,
        encoding: "P5 16-bit big-endian; 0 = no escape, 65535 = invalid parameter, counts saturate at 65534",
    };
    out.write_json(&format!("{stem}.json"), &meta)?;
    Ok(())
}

#[derive(Serialize)]
struct LadderFailure<'a> {
    index: usize,
    stage: &'a str,
    message: &'a str,
    partial: Option<&'a Rung>,
}

/// Execute one command; the manifest is written even when the command fails
/// after its inputs were accepted.
pub fn run(cli: &Cli) -> Result<RunManifest, CliError> {
    if cli.threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let dir = output_dir(&cli.out);
    let echo = serde_json::to_value(cli).map_err(domain)?;
    let mut failure = None;
    let mut out;
    match &cli.command {
        Command::Orbit(a) => {
            let param = parameter(&a.lambda)?;
            let policy = policy(a.cutoff, a.n)?;
            out = RunWriter::new(&dir, "orbit", echo);
            let trace = match &a.z0 {
                Some(z) => orbit(&param, parse_complex(z).map_err(usage)?, &policy),
                None => singular_orbit(&param, a.n + 1, &policy),
            }
            .map_err(usage)?;
            out.stage("orbit", true, format!("{:?} after {} points", trace.status, trace.len()));
            out.write("orbit.csv", &to_csv(&orbit_records(&trace))?)?;
        }
        Command::Cycle(a) => {
            let param = parameter(&a.lambda)?;
            out = RunWriter::new(&dir, "cycle", echo);
            match find_cycle_near_line(&param, a.x, a.p_max, a.tol) {
                Ok(c) => {
                    out.stage("find_cycle", true, format!("period {}, residual {:e}", c.period, c.residual));
                    out.write_json("cycle.json", &c)?;
                }
                Err(e @ expforge::CycleError::InvalidInput(_)) => return Err(usage(e)),
                Err(e) => {
                    out.stage("find_cycle", false, e.to_string());
                    failure = Some(domain(e));
                }
            }
        }
        Command::Psf(a) => {
            let seed = parameter(cli.seed_override.as_deref().unwrap_or(&a.seed))?;
            let spec = PsfSpec::new(a.m, a.p, seed, a.tol).map_err(usage)?;
            out = RunWriter::new(&dir, "psf", echo);
            match solve_psf(&spec, a.max_steps) {
                Ok(psf) => {
                    let report = verify_psf(&psf.lambda, psf.m, psf.p, a.tol);
                    out.stage("solve_psf", true, format!("λ = {}, residual {:e}", psf.lambda, psf.residual));
                    out.stage("verify_psf", report.all_pass(), format!("{} checks", report.checks.len()));
                    out.write_json("psf.json", &serde_json::json!({ "psf": psf, "report": report }))?;
                }
                Err(e) => {
                    out.stage("solve_psf", false, e.to_string());
                    failure = Some(domain(e));
                }
            }
        }
        Command::Ladder(a) => {
            let config = ladder_config(cli, a.k)?;
            let echo = serde_json::json!({ "args": echo, "ladder": config });
            out = RunWriter::new(&dir, "ladder", echo);
            match run_ladder(&config) {
                Ok(result) => {
                    out.stage("ladder", result.verified(), format!("{} rungs", result.rungs.len()));
                    out.write_json("rungs.json", &result.rungs)?;
                    out.write_json("ladder.json", &result)?;
                }
                Err(LadderError::RungFailed { index, stage, message, completed, partial }) => {
                    out.stage("ladder", false, format!("rung {index} failed at {stage}: {message}"));
                    out.write_json("rungs.json", &completed.rungs)?;
                    out.write_json("ladder.json", &completed)?;
                    let report = LadderFailure { index, stage: &stage, message: &message, partial: partial.as_deref() };
                    out.write_json("failure.json", &report)?;
                    failure = Some(domain(format!("rung {index} failed at {stage}: {message}")));
                }
                Err(e @ LadderError::InvalidConfig { .. }) => return Err(usage(e)),
                Err(e) => {
                    out.stage("ladder", false, e.to_string());
                    failure = Some(domain(e));
                }
            }
        }
        Command::Probe { kind } => match kind {
            ProbeKind::Bock { lambda, starts, boxes, n, cutoff } => {
                let (param, starts, boxes) = (parameter(lambda)?, parse_grid(starts)?, parse_grid(boxes)?);
                let policy = policy(*cutoff, *n)?;
                out = RunWriter::new(&dir, "probe bock", echo);
                let stats = bock_probe(&param, &starts, *n, &boxes, &policy);
                out.stage("bock_probe", true, format!("coverage {}", stats.coverage));
                out.write_json("bock.json", &stats)?;
            }
            ProbeKind::Escape { lambda, starts, n, thresholds } => {
                let (param, starts) = (parameter(lambda)?, parse_grid(starts)?);
                let ts = thresholds
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad threshold `{t}`"))))
                    .collect::<Result<Vec<f64>, _>>()?;
                let curve = escape_measure_probe(&param, &starts, *n, &ts).map_err(usage)?;
                out = RunWriter::new(&dir, "probe escape", echo);
                out.stage("escape_measure_probe", true, format!("overflow fraction {}", curve.overflow_fraction));
                out.write("escape.csv", &to_csv(&curve_rows(&curve))?)?;
                out.write_json("escape.json", &curve)?;
            }
        },
        Command::Render { kind } => match kind {
            RenderKind::Escape { lambda, grid, max_iter, cutoff } => {
                let (param, grid, policy) = (parameter(lambda)?, parse_grid(grid)?, policy(*cutoff, *max_iter)?);
                out = RunWriter::new(&dir, "render escape", echo);
                let image = render_escape_time(&param, &grid, &policy);
                out.stage("render_escape_time", true, format!("{}×{}", image.nx, image.ny));
                write_image(&mut out, "escape", &image)?;
            }
            RenderKind::Parameter { grid, max_iter, cutoff } => {
                let (grid, policy) = (parse_grid(grid)?, policy(*cutoff, *max_iter)?);
                out = RunWriter::new(&dir, "render parameter", echo);
                let image = render_parameter_plane(&grid, &policy);
                out.stage("render_parameter_plane", true, format!("{}×{}", image.nx, image.ny));
                write_image(&mut out, "parameter", &image)?;
            }
        },
    }
    let manifest = out.finish()?;
    match failure {
        Some(e) => Err(e),
        None => Ok(manifest),
    }
}
