//! Command-line flags, the JSON config file, and their merge (flags win).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use discrete_airy::stokes::Window;
use discrete_airy::{Params, C64};
use serde::{Deserialize, Serialize};

use crate::output::{usage, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "dairy",
    version,
    about = "Stokes structure, lattice solutions and late-order analysis of the discrete Airy equation"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON file with the same keys as the long flags (underscores for dashes).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma_re: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma_im: Option<f64>,
    /// re_min,re_max,im_min,im_max
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub window: Option<String>,
    /// Grid points per side for region maps.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Largest saddle row |s| used by tracing and path output.
    #[arg(long, global = true)]
    pub smax: Option<i64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg.
    #[arg(long, global = true)]
    pub format: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stokes, anti-Stokes and higher-order curves, crossing points and region map.
    Structure {
        /// Comma-separated subset of stokes,antistokes,higher.
        #[arg(long)]
        kind: Option<String>,
    },
    /// Decaying lattice solution.
    Solve {
        #[arg(long, allow_negative_numbers = true)]
        x0_re: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x0_im: Option<f64>,
        /// Initial half-width of the lattice, in steps.
        #[arg(long)]
        half_width: Option<i64>,
    },
    /// Resonant-lattice transseries against the lattice solution over an ε ladder.
    Compare {
        #[arg(long, allow_negative_numbers = true)]
        x0_re: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x0_im: Option<f64>,
        /// Comma-separated ε values.
        #[arg(long)]
        epsilons: Option<String>,
        /// Points closer than this to a turning point are left out.
        #[arg(long)]
        exclusion: Option<f64>,
    },
    /// Stokes multiplier measured across the Stokes curve between (0,+) and (0,−).
    Smoothing {
        /// Arc of the Stokes curve between (0,+) and (0,−): 0 upper, 1 lower.
        #[arg(long)]
        arc: Option<usize>,
        #[arg(long)]
        points: Option<usize>,
        /// Half-length of the transverse scan.
        #[arg(long)]
        span: Option<f64>,
        /// |χ| at which the scan crosses the curve.
        #[arg(long)]
        base_chi: Option<f64>,
        /// Second ε for the width-scaling check.
        #[arg(long)]
        compare_epsilon: Option<f64>,
    },
    /// Lattice solutions along complex lattice lines with envelope predictions.
    Lines {
        /// Comma-separated values of Arg σ; |σ| comes from the σ flags.
        #[arg(long, allow_hyphen_values = true)]
        sigma_args: Option<String>,
    },
    /// Series coefficients of one saddle and their late-order fit.
    Lateorder {
        #[arg(long, allow_negative_numbers = true)]
        x_re: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x_im: Option<f64>,
        /// Saddle label such as 0,+ or -1,-.
        #[arg(long, allow_hyphen_values = true)]
        saddle: Option<String>,
        #[arg(long)]
        kmax: Option<usize>,
    },
    /// Steepest-descent paths through the saddles and the contour value.
    Paths {
        #[arg(long, allow_negative_numbers = true)]
        x_re: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        x_im: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Structure { .. } => "structure",
            Command::Solve { .. } => "solve",
            Command::Compare { .. } => "compare",
            Command::Smoothing { .. } => "smoothing",
            Command::Lines { .. } => "lines",
            Command::Lateorder { .. } => "lateorder",
            Command::Paths { .. } => "paths",
        }
    }
}

/// A list given either as a JSON array or as a comma-separated string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ListSpec<T> {
    List(Vec<T>),
    Text(String),
}

/// The config file; also the `config` block of every manifest.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<ListSpec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smax: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<ListSpec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ListSpec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x0_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<ListSpec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arc: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_chi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_args: Option<ListSpec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_im: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saddle: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kmax: Option<usize>,
}

pub fn load_file(path: &Path) -> CliResult<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("bad config {}: {e}", path.display())))
}

pub fn parse_f64_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{what}: cannot parse '{t}' as a number")))
        })
        .collect()
}

fn f64_list(spec: &ListSpec<f64>, what: &str) -> CliResult<Vec<f64>> {
    match spec {
        ListSpec::List(v) => Ok(v.clone()),
        ListSpec::Text(t) => parse_f64_list(t, what),
    }
}

fn str_list(spec: &ListSpec<String>) -> Vec<String> {
    match spec {
        ListSpec::List(v) => v.clone(),
        ListSpec::Text(t) => t.split(',').map(|s| s.trim().to_string()).collect(),
    }
}

/// Flag first, then file, then default.
pub fn pick<T: Clone>(flag: Option<T>, file: &Option<T>, default: T) -> T {
    flag.or_else(|| file.clone()).unwrap_or(default)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    fn names(&self) -> Vec<String> {
        [(self.csv, "csv"), (self.json, "json"), (self.svg, "svg")]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, n)| n.to_string())
            .collect()
    }
}

/// Options shared by every command, after merging.
#[derive(Debug, Clone)]
pub struct Common {
    pub epsilon: f64,
    pub sigma: C64,
    pub window: Option<Window>,
    pub grid: usize,
    pub smax: i64,
    pub tol: f64,
    pub out_dir: PathBuf,
    pub formats: Formats,
}

impl Common {
    pub fn params(&self) -> CliResult<Params> {
        self.params_with(self.epsilon, self.sigma)
    }

    pub fn params_with(&self, epsilon: f64, sigma: C64) -> CliResult<Params> {
        Params::new(epsilon, sigma).map_err(|e| usage(e.to_string()))
    }

    pub fn window_for(&self, p: &Params) -> Window {
        self.window.unwrap_or_else(|| Window::default_for(p))
    }

    /// The merged values in config-file form.
    pub fn to_file(&self) -> FileConfig {
        FileConfig {
            epsilon: Some(self.epsilon),
            sigma_re: Some(self.sigma.re),
            sigma_im: Some(self.sigma.im),
            window: self
                .window
                .map(|w| ListSpec::List(vec![w.re_min, w.re_max, w.im_min, w.im_max])),
            grid: Some(self.grid),
            smax: Some(self.smax),
            tol: Some(self.tol),
            out_dir: Some(self.out_dir.clone()),
            format: Some(ListSpec::List(self.formats.names())),
            ..FileConfig::default()
        }
    }
}

pub fn resolve_common(flags: &CommonArgs, file: &FileConfig) -> CliResult<Common> {
    let epsilon = pick(flags.epsilon, &file.epsilon, 0.05);
    let sigma = C64::new(
        pick(flags.sigma_re, &file.sigma_re, 1.0),
        pick(flags.sigma_im, &file.sigma_im, 0.0),
    );
    let window = match (&flags.window, &file.window) {
        (Some(t), _) => Some(parse_f64_list(t, "--window")?),
        (None, Some(spec)) => Some(f64_list(spec, "window")?),
        (None, None) => None,
    };
    let window = match window {
        None => None,
        Some(v) if v.len() == 4 => {
            Some(Window::new(v[0], v[1], v[2], v[3]).map_err(|e| usage(format!("--window: {e}")))?)
        }
        Some(v) => {
            return Err(usage(format!(
                "--window needs four numbers, got {}",
                v.len()
            )))
        }
    };
    let grid = pick(flags.grid, &file.grid, 200);
    if grid < 2 {
        return Err(usage("--grid must be at least 2"));
    }
    let smax = pick(flags.smax, &file.smax, 2);
    if !(0..=20).contains(&smax) {
        return Err(usage("--smax must lie in 0..=20"));
    }
    let tol = pick(flags.tol, &file.tol, 1e-10);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(usage("--tol must lie in (0, 1)"));
    }
    let out_dir = pick(flags.out_dir.clone(), &file.out_dir, PathBuf::from("out"));
    let names = match (&flags.format, &file.format) {
        (Some(t), _) => t.split(',').map(|s| s.trim().to_string()).collect(),
        (None, Some(spec)) => str_list(spec),
        (None, None) => vec!["csv".into(), "json".into(), "svg".into()],
    };
    let mut formats = Formats {
        csv: false,
        json: false,
        svg: false,
    };
    for n in &names {
        match n.as_str() {
            "csv" => formats.csv = true,
            "json" => formats.json = true,
            "svg" => formats.svg = true,
            other => {
                return Err(usage(format!(
                    "--format: unknown format '{other}' (expected csv, json, svg)"
                )))
            }
        }
    }
    let common = Common {
        epsilon,
        sigma,
        window,
        grid,
        smax,
        tol,
        out_dir,
        formats,
    };
    common.params()?;
    Ok(common)
}

/// List-valued command option: flag text, else file value, else default.
pub fn pick_f64_list(
    flag: &Option<String>,
    file: &Option<ListSpec<f64>>,
    default: &[f64],
    what: &str,
) -> CliResult<Vec<f64>> {
    match (flag, file) {
        (Some(t), _) => parse_f64_list(t, what),
        (None, Some(spec)) => f64_list(spec, what),
        (None, None) => Ok(default.to_vec()),
    }
}

pub fn pick_str_list(
    flag: &Option<String>,
    file: &Option<ListSpec<String>>,
    default: &[&str],
) -> Vec<String> {
    match (flag, file) {
        (Some(t), _) => t.split(',').map(|s| s.trim().to_string()).collect(),
        (None, Some(spec)) => str_list(spec),
        (None, None) => default.iter().map(|s| s.to_string()).collect(),
    }
}
