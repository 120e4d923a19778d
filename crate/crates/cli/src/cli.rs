//! Argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "expforge", version, about = "Escaping parameters of λ·e^z: orbits, cycles, ladders, probes, renders")]
pub struct Cli {
    /// Ladder configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; EXPFORGE_OUT takes precedence.
    #[arg(long, global = true, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,
    /// Replace the ladder or PSF seed parameter.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub seed_override: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Forward orbit of a point (the singular orbit when --z0 is omitted).
    Orbit(OrbitArgs),
    /// Repelling cycle with a point near the line Im z = −arg λ at real part x.
    Cycle(CycleArgs),
    /// Post-singularly finite parameter with pre-period m and period p.
    Psf(PsfArgs),
    /// Run the escaping-parameter ladder.
    Ladder(LadderArgs),
    /// Orbit statistics.
    Probe {
        #[command(subcommand)]
        kind: ProbeKind,
    },
    /// Escape-time images (16-bit PGM).
    Render {
        #[command(subcommand)]
        kind: RenderKind,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct OrbitArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
    #[arg(long, allow_hyphen_values = true)]
    pub z0: Option<String>,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 700.0, allow_hyphen_values = true)]
    pub cutoff: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CycleArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
    #[arg(long, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, default_value_t = 3)]
    pub p_max: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PsfArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub seed: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 60)]
    pub max_steps: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct LadderArgs {
    /// Number of rungs after the start-up rung (overrides the config).
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbeKind {
    /// Box coverage of orbits from a grid of starts.
    Bock {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        /// Start grid `lo,hi,n` (square) or `x0,y0,x1,y1,nx,ny`.
        #[arg(long, default_value = "-2,2,64", allow_hyphen_values = true)]
        starts: String,
        #[arg(long, default_value = "-20,20,32", allow_hyphen_values = true)]
        boxes: String,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 700.0, allow_hyphen_values = true)]
        cutoff: f64,
    },
    /// Fraction of starts whose n-th iterate lies right of each threshold.
    Escape {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value = "-3,3,256", allow_hyphen_values = true)]
        starts: String,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value = "10,100,700", allow_hyphen_values = true)]
        thresholds: String,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RenderKind {
    /// Dynamical plane of one parameter.
    Escape {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value = "-4,4,512", allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 700.0, allow_hyphen_values = true)]
        cutoff: f64,
    },
    /// Parameter plane, by escape time of the singular orbit.
    Parameter {
        #[arg(long, default_value = "0,8,256", allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 60)]
        max_iter: usize,
        #[arg(long, default_value_t = 700.0, allow_hyphen_values = true)]
        cutoff: f64,
    },
}
