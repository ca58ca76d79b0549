use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dirac_lattice::{Error, ModeKind, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for C {
    fn from(z: Complex64) -> Self {
        C { re: z.re, im: z.im }
    }
}

impl From<C> for Complex64 {
    fn from(c: C) -> Self {
        Complex64::new(c.re, c.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Sum,
    Single,
    Solve,
    Reflect,
    Field,
    Limits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Scalar,
    Te,
    Tm,
    P,
}

impl From<ModeArg> for ModeKind {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Scalar => ModeKind::Scalar,
            ModeArg::Te => ModeKind::TE,
            ModeArg::Tm => ModeKind::TM,
            ModeArg::P => ModeKind::P,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    A,
    Kx,
    Ky,
    Omega,
}

/// Inverse coupling (`1/g` or `1/alpha`), either renormalized or bare at `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub inverse: C,
    pub renormalized: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub variable: SweepVar,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.start + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Axis {
    fn point(v: f64) -> Self {
        Axis { start: v, stop: v, points: 1 }
    }

    pub fn values(&self) -> Vec<f64> {
        Sweep { variable: SweepVar::A, start: self.start, stop: self.stop, points: self.points }.values()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub x: Axis,
    pub y: Axis,
    pub z: Axis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub sum: f64,
    pub flux_alert: f64,
    pub quadrature: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { sum: 1e-10, flux_alert: 1e-6, quadrature: 1e-10 }
    }
}

/// Fully resolved run description; echoed as `inputs` and accepted back by `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Command,
    pub mode: Option<ModeArg>,
    pub alpha_se: Option<f64>,
    pub coupling: Option<Coupling>,
    pub omega: Option<C>,
    pub k_par: [f64; 2],
    pub a: Option<f64>,
    pub rho: Option<f64>,
    pub eps: Option<f64>,
    pub s: Option<u32>,
    pub sweep: Option<Sweep>,
    pub centers: Option<Vec<[f64; 3]>>,
    pub grid: Option<Grid>,
    pub csv: Option<PathBuf>,
    pub tolerances: Tolerances,
}

#[derive(Debug, Parser)]
#[command(name = "dirac-lattice", version, about = "Scattering on lattices of zero-range scatterers")]
pub struct Cli {
    /// Run from a JSON config (a previous output's `inputs`, or the whole output).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Also write the value table as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Lattice sums J_s over an a or k sweep.
    Sum {
        #[arg(long, default_value_t = 1)]
        s: u32,
        #[command(flatten)]
        common: Common,
    },
    /// Single-center amplitude, bound state, phi_0 and boundary parameters.
    Single(Common),
    /// Multi-center amplitudes for centers read from CSV.
    Solve {
        #[arg(long)]
        centers: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Reflection coefficients of the propagating orders, with the flux deficit.
    Reflect(Common),
    /// Lattice field on a grid, in the spherical- and plane-wave representations.
    Field {
        #[arg(long, num_args = 3, allow_negative_numbers = true, value_names = ["START", "STOP", "N"])]
        x: Option<Vec<f64>>,
        #[arg(long, num_args = 3, allow_negative_numbers = true, value_names = ["START", "STOP", "N"])]
        y: Option<Vec<f64>>,
        #[arg(long, num_args = 3, allow_negative_numbers = true, value_names = ["START", "STOP", "N"])]
        z: Option<Vec<f64>>,
        #[command(flatten)]
        common: Common,
    },
    /// Order-of-limits report for the continuum sheet.
    Limits(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, value_enum, ignore_case = true)]
    pub mode: Option<ModeArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_se: Option<f64>,
    /// Inverse coupling RE [IM].
    #[arg(long, num_args = 1..=2, allow_negative_numbers = true, value_names = ["RE", "IM"])]
    pub inverse_coupling: Option<Vec<f64>>,
    /// The inverse coupling is bare at regularization --eps.
    #[arg(long)]
    pub bare: bool,
    #[arg(long, allow_negative_numbers = true)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub omega_im: Option<f64>,
    #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["KX", "KY"])]
    pub kpar: Option<Vec<f64>>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum, ignore_case = true)]
    pub sweep: Option<SweepVar>,
    #[arg(long, num_args = 3, allow_negative_numbers = true, value_names = ["START", "STOP", "N"])]
    pub range: Option<Vec<f64>>,
    #[arg(long)]
    pub tol_sum: Option<f64>,
    #[arg(long)]
    pub tol_flux: Option<f64>,
    #[arg(long)]
    pub tol_quad: Option<f64>,
}

fn count(v: f64, what: &str) -> Result<usize> {
    if v.fract() != 0.0 || !(v >= 1.0) || v > 1e7 {
        return Err(Error::invalid(format!("{what} needs a positive integer count, got {v}")));
    }
    Ok(v as usize)
}

fn axis(v: Option<Vec<f64>>, what: &str) -> Result<Axis> {
    match v {
        None => Ok(Axis::point(0.0)),
        Some(v) => Ok(Axis { start: v[0], stop: v[1], points: count(v[2], what)? }),
    }
}

impl Common {
    fn into_config(self, subcommand: Command, csv: Option<PathBuf>) -> Result<RunConfig> {
        let sweep = match (self.sweep, self.range) {
            (Some(variable), Some(r)) => Some(Sweep { variable, start: r[0], stop: r[1], points: count(r[2], "--range")? }),
            (None, None) => None,
            _ => return Err(Error::invalid("--sweep and --range go together")),
        };
        let coupling = self.inverse_coupling.map(|v| Coupling {
            inverse: C { re: v[0], im: v.get(1).copied().unwrap_or(0.0) },
            renormalized: !self.bare,
        });
        if self.bare && coupling.is_none() {
            return Err(Error::invalid("--bare needs --inverse-coupling"));
        }
        let omega = match (self.omega, self.omega_im) {
            (Some(re), im) => Some(C { re, im: im.unwrap_or(0.0) }),
            (None, Some(_)) => return Err(Error::invalid("--omega-im needs --omega")),
            (None, None) => None,
        };
        let d = Tolerances::default();
        Ok(RunConfig {
            subcommand,
            mode: self.mode,
            alpha_se: self.alpha_se,
            coupling,
            omega,
            k_par: self.kpar.map_or([0.0, 0.0], |v| [v[0], v[1]]),
            a: self.a,
            rho: self.rho,
            eps: self.eps,
            s: None,
            sweep,
            centers: None,
            grid: None,
            csv,
            tolerances: Tolerances {
                sum: self.tol_sum.unwrap_or(d.sum),
                flux_alert: self.tol_flux.unwrap_or(d.flux_alert),
                quadrature: self.tol_quad.unwrap_or(d.quadrature),
            },
        })
    }
}

/// Centers file: one `x,y,z` row per center, optional header.
pub fn read_centers(path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::invalid(format!("centers file {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::invalid(format!("centers file: {e}")))?;
        if rec.len() != 3 {
            return Err(Error::invalid(format!("centers row {}: expected x,y,z", line + 1)));
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => out.push([v[0], v[1], v[2]]),
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::invalid(format!("centers row {}: {e}", line + 1))),
        }
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))?;
    if let Some(inputs) = value.get_mut("inputs") {
        value = inputs.take();
    }
    serde_json::from_value(value).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))
}

impl Cli {
    pub fn into_config(self) -> Result<RunConfig> {
        match (self.config, self.command) {
            (Some(path), None) => {
                let mut cfg = load_config(&path)?;
                if self.csv.is_some() {
                    cfg.csv = self.csv;
                }
                Ok(cfg)
            }
            (Some(_), Some(_)) => Err(Error::invalid("--config replaces the subcommand; give one or the other")),
            (None, None) => Err(Error::invalid("a subcommand or --config is required")),
            (None, Some(sub)) => {
                let csv = self.csv;
                match sub {
                    Sub::Sum { s, common } => {
                        let mut cfg = common.into_config(Command::Sum, csv)?;
                        cfg.s = Some(s);
                        Ok(cfg)
                    }
                    Sub::Single(c) => c.into_config(Command::Single, csv),
                    Sub::Solve { centers, common } => {
                        let mut cfg = common.into_config(Command::Solve, csv)?;
                        cfg.centers = Some(read_centers(&centers)?);
                        Ok(cfg)
                    }
                    Sub::Reflect(c) => c.into_config(Command::Reflect, csv),
                    Sub::Field { x, y, z, common } => {
                        let mut cfg = common.into_config(Command::Field, csv)?;
                        cfg.grid = Some(Grid { x: axis(x, "--x")?, y: axis(y, "--y")?, z: axis(z, "--z")? });
                        Ok(cfg)
                    }
                    Sub::Limits(c) => c.into_config(Command::Limits, csv),
                }
            }
        }
    }
}
