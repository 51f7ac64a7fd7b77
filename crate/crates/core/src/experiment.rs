//! Experiment registry and result persistence.
//!
//! Each experiment turns a parameter set into one CSV table, a `key=value`
//! manifest next to it and, optionally, a small SVG line plot. Every
//! experiment also evaluates a list of [`Check`]s against theory so the CLI
//! can run in check mode.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::breakpoint::{coupled_reversal_walk, ReversalStep};
use crate::cqs::{self, ExcursionChain};
use crate::error::{Error, Result};
use crate::graphcouple::gnp_snapshot;
use crate::par;
use crate::stats;
use crate::theory;
use crate::walk::{self, TimeMode, WalkConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentName {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    Thm5,
    CqsBounds,
    Lemma3Tail,
    Eq4Trees,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 12] = [
        ExperimentName::Fig2,
        ExperimentName::Fig3,
        ExperimentName::Fig4,
        ExperimentName::Fig5,
        ExperimentName::Thm1,
        ExperimentName::Thm2,
        ExperimentName::Thm3,
        ExperimentName::Thm4,
        ExperimentName::Thm5,
        ExperimentName::CqsBounds,
        ExperimentName::Lemma3Tail,
        ExperimentName::Eq4Trees,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::Fig2 => "fig2",
            ExperimentName::Fig3 => "fig3",
            ExperimentName::Fig4 => "fig4",
            ExperimentName::Fig5 => "fig5",
            ExperimentName::Thm1 => "thm1",
            ExperimentName::Thm2 => "thm2",
            ExperimentName::Thm3 => "thm3",
            ExperimentName::Thm4 => "thm4",
            ExperimentName::Thm5 => "thm5",
            ExperimentName::CqsBounds => "cqs-bounds",
            ExperimentName::Lemma3Tail => "lemma3-tail",
            ExperimentName::Eq4Trees => "eq4-trees",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    CsvSvg,
}

impl OutputFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::CsvSvg => "csv+svg",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "csv+svg" | "svg" => Ok(OutputFormat::CsvSvg),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}`"))),
        }
    }
}

/// Parameters shared by all experiments; each experiment reads the subset it
/// needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub n: usize,
    pub c: f64,
    pub c_grid: Vec<f64>,
    pub reps: u64,
    /// Mass exponent for N↑ and the queue cutoff.
    pub a: f64,
    /// Largest size / level tabulated (cluster size, tree size, excursion
    /// level).
    pub x_max: u64,
    pub seed: u64,
}

fn grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step).round() as usize;
    (0..=count)
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

impl ExperimentParams {
    pub fn defaults(name: ExperimentName) -> Self {
        let base = ExperimentParams {
            n: 100,
            c: 1.0,
            c_grid: Vec::new(),
            reps: 10_000,
            a: walk::DEFAULT_MASS_EXPONENT,
            x_max: 10,
            seed: 0,
        };
        match name {
            ExperimentName::Fig2 => ExperimentParams {
                c_grid: grid(0.0, 2.0, 0.1),
                ..base
            },
            ExperimentName::Fig3 => base,
            ExperimentName::Fig4 => ExperimentParams {
                n: 1000,
                c_grid: grid(0.0, 3.0, 0.25),
                ..base
            },
            ExperimentName::Fig5 => ExperimentParams {
                reps: 100_000,
                c: 2.0,
                x_max: 4,
                ..base
            },
            ExperimentName::Thm1 => ExperimentParams {
                n: 2000,
                c: 0.8,
                reps: 5000,
                ..base
            },
            ExperimentName::Thm2 => ExperimentParams {
                n: 100_000,
                reps: 2000,
                c_grid: grid(0.0, 1.0, 0.1),
                ..base
            },
            ExperimentName::Thm3 => ExperimentParams {
                n: 10_000,
                reps: 200,
                c_grid: vec![1.5, 2.0, 3.0],
                ..base
            },
            ExperimentName::Thm4 => ExperimentParams {
                n: 10_000,
                c: 2.0,
                reps: 2000,
                ..base
            },
            ExperimentName::Thm5 => ExperimentParams {
                n: 10_000,
                c: 2.0,
                reps: 100,
                ..base
            },
            ExperimentName::CqsBounds => ExperimentParams {
                n: 10_000,
                c: 2.0,
                reps: 100,
                x_max: 4,
                ..base
            },
            ExperimentName::Lemma3Tail => ExperimentParams {
                n: 10_000,
                c_grid: vec![0.5, 0.8],
                x_max: 40,
                ..base
            },
            ExperimentName::Eq4Trees => ExperimentParams {
                n: 500,
                c: 1.0,
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub params: ExperimentParams,
    pub out_dir: PathBuf,
    pub format: OutputFormat,
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            name,
            params: ExperimentParams::defaults(name),
            out_dir: out_dir.into(),
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let bad = |msg: String| Err(Error::InvalidConfig(format!("{}: {msg}", self.name)));
        if p.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if p.n < 2 {
            return bad(format!("n must be at least 2, got {}", p.n));
        }
        if p.n > 50_000_000 {
            return bad(format!("n = {} is too large", p.n));
        }
        if !(p.a > 0.0 && p.a < 1.0) {
            return bad(format!("a must lie in (0, 1), got {}", p.a));
        }
        if !(p.c.is_finite() && p.c > 0.0) {
            return bad(format!("c must be positive, got {}", p.c));
        }
        if let Some(x) = p.c_grid.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return bad(format!("grid value {x} must be finite and >= 0"));
        }
        if p.x_max == 0 {
            return bad("x-max must be at least 1".into());
        }
        let needs_grid = matches!(
            self.name,
            ExperimentName::Fig2
                | ExperimentName::Fig4
                | ExperimentName::Thm2
                | ExperimentName::Thm3
                | ExperimentName::Lemma3Tail
        );
        if needs_grid && p.c_grid.is_empty() {
            return bad("a non-empty c grid is required".into());
        }
        match self.name {
            ExperimentName::Thm1 if p.c >= 1.0 => bad(format!("needs c < 1, got {}", p.c)),
            ExperimentName::Thm2 if p.c_grid.iter().any(|&r| r > 1.0) => {
                bad("r grid must lie in [0, 1]".into())
            }
            ExperimentName::Thm3 if p.c_grid.contains(&0.0) => {
                bad("c grid must be positive".into())
            }
            ExperimentName::Thm4 | ExperimentName::Thm5 if p.c <= 1.0 => {
                bad(format!("needs c > 1, got {}", p.c))
            }
            ExperimentName::Lemma3Tail if p.c_grid.iter().any(|&c| c == 0.0 || c >= 1.0) => {
                bad("c grid must lie in (0, 1)".into())
            }
            ExperimentName::Eq4Trees if p.x_max as usize > p.n => {
                bad("x-max cannot exceed n".into())
            }
            ExperimentName::Fig5 if p.x_max as usize > p.n => bad("x-max cannot exceed n".into()),
            _ => Ok(()),
        }
    }

    pub fn csv_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.csv", self.name))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.manifest", self.name))
    }

    pub fn svg_path(&self) -> PathBuf {
        self.out_dir.join(format!("{}.svg", self.name))
    }
}

/// One pass/fail comparison against theory.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Line plot description for the SVG emitter.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub x: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
}

/// Everything an experiment produces before it touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub csv: String,
    pub checks: Vec<Check>,
    pub plot: Option<Plot>,
}

impl ExperimentOutput {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub output: ExperimentOutput,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
    pub svg_path: Option<PathBuf>,
    pub manifest: RunManifest,
}

/// Stream scheme written into every manifest.
pub const STREAM_SCHEME: &str = "chacha8(seed) stream=replicate";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub name: ExperimentName,
    pub params: ExperimentParams,
    pub format: OutputFormat,
    pub wall_clock_secs: f64,
    pub version: String,
}

fn join_grid(grid: &[f64]) -> String {
    grid.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

impl RunManifest {
    pub fn render(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        line("experiment", self.name.to_string());
        line("n", p.n.to_string());
        line("c", p.c.to_string());
        line("c_grid", join_grid(&p.c_grid));
        line("reps", p.reps.to_string());
        line("a", p.a.to_string());
        line("x_max", p.x_max.to_string());
        line("seed", p.seed.to_string());
        line("format", self.format.as_str().to_string());
        line("streams", format!("0..{}", p.reps));
        line("stream_scheme", STREAM_SCHEME.to_string());
        line("wall_clock_secs", format!("{:.3}", self.wall_clock_secs));
        line("version", self.version.clone());
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut name = None;
        let mut params = None::<ExperimentParams>;
        let mut pending = Vec::new();
        let mut format = OutputFormat::Csv;
        let mut wall_clock_secs = 0.0;
        let mut version = String::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: k + 1,
                message: format!("expected key=value, got `{line}`"),
            })?;
            let err = |m: String| Error::Parse {
                line: k + 1,
                message: m,
            };
            match key {
                "experiment" => {
                    let n: ExperimentName = value.parse()?;
                    name = Some(n);
                    params = Some(ExperimentParams::defaults(n));
                }
                "format" => format = value.parse()?,
                "wall_clock_secs" => {
                    wall_clock_secs = value.parse().map_err(|e| err(format!("{e}")))?
                }
                "version" => version = value.to_string(),
                "streams" | "stream_scheme" => {}
                _ => pending.push((k + 1, key.to_string(), value.to_string())),
            }
        }
        let name = name.ok_or_else(|| Error::Parse {
            line: 0,
            message: "manifest has no experiment line".into(),
        })?;
        let mut params = params.expect("set together with name");
        for (line, key, value) in pending {
            let err = |m: String| Error::Parse { line, message: m };
            let num = |v: &str| v.parse::<f64>().map_err(|e| err(format!("{key}: {e}")));
            let int = |v: &str| v.parse::<u64>().map_err(|e| err(format!("{key}: {e}")));
            match key.as_str() {
                "n" => params.n = int(&value)? as usize,
                "c" => params.c = num(&value)?,
                "c_grid" => {
                    params.c_grid = value
                        .split(';')
                        .filter(|t| !t.is_empty())
                        .map(num)
                        .collect::<Result<_>>()?
                }
                "reps" => params.reps = int(&value)?,
                "a" => params.a = num(&value)?,
                "x_max" => params.x_max = int(&value)?,
                "seed" => params.seed = int(&value)?,
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(RunManifest {
            name,
            params,
            format,
            wall_clock_secs,
            version,
        })
    }

    pub fn to_spec(&self, out_dir: impl Into<PathBuf>) -> ExperimentSpec {
        ExperimentSpec {
            name: self.name,
            params: self.params.clone(),
            out_dir: out_dir.into(),
            format: self.format,
        }
    }
}

/// Validates, computes and writes `<name>.csv`, `<name>.manifest` and, for
/// `csv+svg`, `<name>.svg` into the output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let start = Instant::now();
    let output = evaluate(spec)?;
    let manifest = RunManifest {
        name: spec.name,
        params: spec.params.clone(),
        format: spec.format,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        version: crate::VERSION.to_string(),
    };
    fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    let write = |path: &Path, text: &str| fs::write(path, text).map_err(|e| Error::io(path, e));
    let (csv_path, manifest_path) = (spec.csv_path(), spec.manifest_path());
    write(&csv_path, &output.csv)?;
    write(&manifest_path, &manifest.render())?;
    let svg_path = match (&output.plot, spec.format) {
        (Some(plot), OutputFormat::CsvSvg) => {
            let path = spec.svg_path();
            write(&path, &render_svg(plot))?;
            Some(path)
        }
        _ => None,
    };
    Ok(ExperimentResult {
        output,
        csv_path,
        manifest_path,
        svg_path,
        manifest,
    })
}

/// Runs the experiment without writing anything.
pub fn evaluate(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let p = &spec.params;
    match spec.name {
        ExperimentName::Fig2 => fig2(p),
        ExperimentName::Fig3 => fig3(p),
        ExperimentName::Fig4 => fig4(p),
        ExperimentName::Fig5 => fig5(p),
        ExperimentName::Thm1 => thm1(p),
        ExperimentName::Thm2 => thm2(p),
        ExperimentName::Thm3 => thm3(p),
        ExperimentName::Thm4 => thm4(p),
        ExperimentName::Thm5 => thm5(p),
        ExperimentName::CqsBounds => cqs_bounds(p),
        ExperimentName::Lemma3Tail => lemma3_tail(p),
        ExperimentName::Eq4Trees => eq4_trees(p),
    }
}

/// Formats `x` with `digits` significant digits, trailing zeros trimmed.
pub fn format_significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = digits as i32 - 1 - magnitude;
    let s = if (0..=20).contains(&decimals) && magnitude > -5 {
        format!("{:.*}", decimals as usize, x)
    } else if decimals < 0 && magnitude < 16 {
        format!("{:.0}", x)
    } else {
        return format!("{:.*e}", digits - 1, x);
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

struct Csv(String);

impl Csv {
    fn new(header: &str) -> Self {
        Csv(format!("{header}\n"))
    }

    fn row(&mut self, cells: &[String]) {
        self.0.push_str(&cells.join(","));
        self.0.push('\n');
    }
}

macro_rules! cells {
    ($($x:expr),* $(,)?) => { &[$($x.to_string()),*] };
}

fn within(name: &str, value: f64, target: f64, tol: f64) -> Check {
    Check::new(
        name,
        (value - target).abs() <= tol,
        format!("{value:.6} vs {target:.6} (tol {tol})"),
    )
}

fn fig2(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let labels = p.n + 1;
    let horizon = p.c_grid.iter().copied().fold(0.0, f64::max);
    let traces: Vec<Vec<ReversalStep>> = par::replicate(p.seed, p.reps, |_, rng| {
        coupled_reversal_walk(p.n, horizon, rng).map(|t| t.steps)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut csv = Csv::new("c,k,mean_k_minus_D_over_n,mean_k_minus_d0_over_n,theory");
    let mut plot = Plot {
        title: "k - D_k and k - d0 over n".into(),
        x_label: "c".into(),
        x: Vec::new(),
        series: vec![
            ("transposition".into(), Vec::new()),
            ("reversal d0".into(), Vec::new()),
            ("c/2 - u(c)".into(), Vec::new()),
        ],
    };
    let nf = labels as f64;
    for &c in &p.c_grid {
        let k = (c * nf / 2.0).floor() as u64;
        let (mut sum_d, mut sum_d0) = (0.0, 0.0);
        if k > 0 {
            for steps in &traces {
                let s = &steps[k as usize - 1];
                sum_d += (k - s.transposition_distance) as f64;
                sum_d0 += (k - s.d0) as f64;
            }
        }
        let reps = p.reps as f64;
        let (md, md0) = (sum_d / reps / nf, sum_d0 / reps / nf);
        let th = if c <= 1.0 {
            0.0
        } else {
            (c / 2.0 - theory::u_distance(c)?).max(0.0)
        };
        csv.row(cells![c, k, md, md0, th]);
        plot.x.push(c);
        plot.series[0].1.push(md);
        plot.series[1].1.push(md0);
        plot.series[2].1.push(th);
    }
    let nonnegative = plot.series[..2]
        .iter()
        .all(|s| s.1.iter().all(|&v| v >= 0.0));
    let checks = vec![Check::new(
        "k - D and k - d0 nonnegative",
        nonnegative,
        "each step moves D and d0 by at most one".into(),
    )];
    Ok(ExperimentOutput {
        csv: csv.0,
        checks,
        plot: Some(plot),
    })
}

fn histogram_rows(
    hist: &[u64],
    reps: u64,
    reference: impl Fn(u64) -> f64,
    header: &str,
) -> (Csv, Plot) {
    let mut csv = Csv::new(header);
    let mut plot = Plot {
        title: String::new(),
        x_label: "value".into(),
        x: Vec::new(),
        series: vec![
            ("empirical".into(), Vec::new()),
            ("reference".into(), Vec::new()),
        ],
    };
    for (k, &count) in hist.iter().enumerate() {
        let freq = count as f64 / reps as f64;
        let r = reference(k as u64);
        csv.row(cells![k, count, freq, r]);
        plot.x.push(k as f64);
        plot.series[0].1.push(freq);
        plot.series[1].1.push(r);
    }
    (csv, plot)
}

fn fig3(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let census = walk::fragmentation_census(p.n, p.c, p.reps, p.seed, TimeMode::Discrete)?;
    let mean = census.mean();
    let hist = census.histogram();
    let (csv, mut plot) = histogram_rows(
        &hist,
        p.reps,
        |k| stats::poisson_pmf(mean, k),
        "z,count,freq,poisson_of_mean",
    );
    plot.title = format!("fragmentations, n={} c={}", p.n, p.c);
    let tv = stats::tv_distance_to_pmf(&hist, |k| stats::poisson_pmf(mean, k));
    let checks = vec![
        Check::new(
            "mean Z",
            (0.632..=0.692).contains(&mean),
            format!("{mean:.4} in [0.632, 0.692]"),
        ),
        Check::new("TV to Poisson(mean)", tv < 0.05, format!("{tv:.4} < 0.05")),
    ];
    Ok(ExperimentOutput {
        csv: csv.0,
        checks,
        plot: Some(plot),
    })
}

fn fig4(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let horizon = p
        .c_grid
        .iter()
        .copied()
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let config = WalkConfig {
        snapshots: p.c_grid.clone(),
        seed: p.seed,
        time_mode: TimeMode::Discrete,
        ..WalkConfig::new(p.n, horizon)
    };
    let traces = walk::run_replicates(&config, p.reps)?;
    let schedule = config.schedule();
    let mut csv = Csv::new("c,mean_K1_over_n,se,theta_sq_over_2");
    let mut plot = Plot {
        title: format!("K1/n, n={}", p.n),
        x_label: "c".into(),
        x: Vec::new(),
        series: vec![
            ("mean K1/n".into(), Vec::new()),
            ("theta^2/2".into(), Vec::new()),
        ],
    };
    let mut checks = Vec::new();
    for (k, &c) in schedule.iter().enumerate() {
        let xs: Vec<f64> = traces
            .iter()
            .map(|t| t.records[k].cycle_of_one as f64 / p.n as f64)
            .collect();
        let (m, se) = (stats::mean(&xs), stats::std_error(&xs));
        let th = if c <= 1.0 {
            0.0
        } else {
            theory::theta(c)?.powi(2) / 2.0
        };
        csv.row(cells![c, m, se, th]);
        plot.x.push(c);
        plot.series[0].1.push(m);
        plot.series[1].1.push(th);
        if c >= 1.5 {
            checks.push(within(&format!("K1/n at c={c}"), m, th, 0.02));
        } else if c <= 1.0 {
            checks.push(Check::new(
                format!("K1/n at c={c}"),
                m <= 0.01,
                format!("{m:.5} <= 0.01"),
            ));
        }
    }
    Ok(ExperimentOutput {
        csv: csv.0,
        checks,
        plot: Some(plot),
    })
}

fn fig5(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let config = WalkConfig {
        seed: p.seed,
        time_mode: TimeMode::Discrete,
        ..WalkConfig::new(p.n, p.c)
    };
    let sizes: Vec<u64> = walk::run_replicates(&config, p.reps)?
        .iter()
        .map(|t| t.records[0].cycle_of_one)
        .collect();
    let hist = stats::histogram(&sizes);
    let c = p.c;
    let borel = |k: u64| {
        if k == 0 {
            0.0
        } else {
            theory::borel_pmf(c, k).unwrap_or(0.0)
        }
    };
    let (csv, mut plot) = histogram_rows(&hist, p.reps, borel, "k,count,freq,borel");
    plot.title = format!("size of the cycle of 1, n={} c={}", p.n, p.c);
    let small = sizes.iter().filter(|&&k| k <= p.x_max).count() as f64 / p.reps as f64;
    let target: f64 = (1..=p.x_max).map(borel).sum();
    Ok(ExperimentOutput {
        csv: csv.0,
        checks: vec![within(
            &format!("P(K1 <= {})", p.x_max),
            small,
            target,
            0.02,
        )],
        plot: Some(plot),
    })
}

fn thm1(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let census = walk::fragmentation_census(p.n, p.c, p.reps, p.seed, TimeMode::ContinuousPoisson)?;
    let kappa = theory::kappa(p.c)?;
    let hist = census.histogram();
    let (csv, mut plot) = histogram_rows(
        &hist,
        p.reps,
        |k| stats::poisson_pmf(kappa, k),
        "z,count,freq,poisson_kappa",
    );
    plot.title = format!("fragmentations, n={} c={}", p.n, p.c);
    let (mean, se, var) = (census.mean(), census.std_error(), census.variance());
    let ratio = var / mean;
    let tv = stats::tv_distance_to_pmf(&hist, |k| stats::poisson_pmf(kappa, k));
    let checks = vec![
        within("mean Z vs kappa (3 se)", mean, kappa, 3.0 * se),
        Check::new(
            "variance/mean",
            (0.9..=1.1).contains(&ratio),
            format!("{ratio:.4} in [0.9, 1.1]"),
        ),
        Check::new("TV to Poisson(kappa)", tv < 0.03, format!("{tv:.4} < 0.03")),
    ];
    Ok(ExperimentOutput {
        csv: csv.0,
        checks,
        plot: Some(plot),
    })
}

fn thm2(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let mut r_grid = p.c_grid.clone();
    for r in [0.4, 0.9, 1.0] {
        if !r_grid.iter().any(|&x| (x - r).abs() < 1e-12) {
            r_grid.push(r);
        }
    }
    let samples = walk::critical_window_trace(p.n, &r_grid, p.reps, p.seed, Default::default())?;
    let mut csv = Csv::new("r,c_n_r,mean_W,se_W,var_W");
    let mut plot = Plot {
        title: format!("W_n(r), n={}", p.n),
        x_label: "r".into(),
        x: Vec::new(),
        series: vec![("mean".into(), Vec::new()), ("variance".into(), Vec::new())],
    };
    for (k, &r) in samples.r_grid.iter().enumerate() {
        let w = &samples.samples[k];
        let (m, se, v) = (stats::mean(w), stats::std_error(w), stats::variance(w));
        csv.row(cells![r, walk::critical_time(p.n, r), m, se, v]);
        plot.x.push(r);
        plot.series[0].1.push(m);
        plot.series[1].1.push(v);
    }
    let pick = |r: f64| {
        let k = samples
            .r_grid
            .iter()
            .position(|&x| (x - r).abs() < 1e-12)
            .expect("grid augmented above");
        &samples.samples[k]
    };
    let (w1, w04, w09) = (pick(1.0), pick(0.4), pick(0.9));
    let increments: Vec<f64> = w09.iter().zip(w04).map(|(a, b)| a - b).collect();
    let corr = stats::correlation(w04, &increments);
    let (m, se, v) = (stats::mean(w1), stats::std_error(w1), stats::variance(w1));
    let checks = vec![
        within("mean W(1) (3 se)", m, 0.0, 3.0 * se),
        Check::new(
            "variance W(1)",
            (0.85..=1.15).contains(&v),
            format!("{v:.4} in [0.85, 1.15]"),
        ),
        Check::new(
            "increment correlation",
            corr.abs() < 0.1,
            format!("|{corr:.4}| < 0.1"),
        ),
    ];
    Ok(ExperimentOutput {
        csv: csv.0,
        checks,
        plot: Some(plot),
    })
}

fn thm3(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let mut csv = Csv::new("c,mean_D_over_n,se,u_closed,u_series");
    let mut plot = Plot {
        title: format!("D/n, n={}", p.n),
        x_label: "c".into(),
        x: Vec::new(),
        series: vec![("mean D/n".into(), Vec::new()), ("u(c)".into(), Vec::new())],
    };
    let mut checks = Vec::new();
    for &c in &p.c_grid {
        let config = WalkConfig {
            seed: p.seed,
            ..WalkConfig::new(p.n, c)
        };
        let xs: Vec<f64> = walk::run_replicates(&config, p.reps)?
            .iter()
            .map(|t| t.records[0].distance as f64 / p.n as f64)
            .collect();
        let u = theory::u_distance(c)?;
        let u_series = 1.0 - theory::g_components_series(c, 1e-12)?.value;
        let (m, se) = (stats::mean(&xs), stats::std_error(&xs));
        csv.row(cells![c, m, se, u, u_series]);
        plot.x.push(c);
        plot.series[0].1.push(m);
        plot.series[1].1.push(u);
        checks.push(within(&format!("D/n at c={c}"), m, u, 0.005));
        checks.push(within(
            &format!("u closed vs series at c={c}"),
            u,
            u_series,
            1e-6,
        ));
    }
    Ok(ExperimentOutput {
        csv: csv.0,
        checks,
        plot: Some(plot),
    })
}

fn thm4(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let config = WalkConfig {
        seed: p.seed,
        ..WalkConfig::new(p.n, p.c)
    };
    let u = theory::u_distance(p.c)?;
    let nf = p.n as f64;
    let xs: Vec<f64> = walk::run_replicates(&config, p.reps)?
        .iter()
        .map(|t| (t.records[0].distance as f64 - u * nf) / nf.sqrt())
        .collect();
    let sigma = theory::sigma_clt(p.c)?;
    let (m, sd) = (stats::mean(&xs), stats::std_dev(&xs));
    let ks = stats::ks_statistic(&xs, |x| stats::normal_cdf((x - m) / sd));
    let mut csv = Csv::new("rep,scaled_deviation");
    for (r, x) in xs.iter().enumerate() {
        csv.row(cells![r, x]);
    }
    let checks = vec![
        Check::new(
            "sd vs sigma (10%)",
            (sd - sigma).abs() <= 0.1 * sigma,
            format!("{sd:.5} vs {sigma:.5}"),
        ),
        Check::new("KS to normal", ks < 0.05, format!("{ks:.4} < 0.05")),
    ];
    Ok(ExperimentOutput {
        csv: csv.0,
        checks,
        plot: None,
    })
}

fn thm5(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let config = WalkConfig {
        seed: p.seed,
        mass_exponent: p.a,
        ..WalkConfig::new(p.n, p.c)
    };
    let xs: Vec<f64> = walk::run_replicates(&config, p.reps)?
        .iter()
        .map(|t| t.records[0].mass_above as f64 / p.n as f64)
        .collect();
    let theta = theory::theta(p.c)?;
    let mut csv = Csv::new("rep,N_up_over_n");
    for (r, x) in xs.iter().enumerate() {
        csv.row(cells![r, x]);
    }
    let m = stats::mean(&xs);
    Ok(ExperimentOutput {
        csv: csv.0,
        checks: vec![Check::new(
            "mean N_up/n",
            m >= theta - 0.03,
            format!("{m:.4} >= {:.4}", theta - 0.03),
        )],
        plot: None,
    })
}

fn cqs_bounds(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let runs = cqs::simulate_cqs_replicates(p.n, p.a, p.c, p.reps, p.seed)?;
    let tail = cqs::excursion_max_distribution(ExcursionChain::Strip, 10_000, p.x_max, p.seed)?;
    let mut csv = Csv::new("kind,index,value,reference");
    let l2 = (p.n as f64).ln().powi(2);
    let mut within_total = 0;
    for (r, run) in runs.iter().enumerate() {
        csv.row(cells!["sup_total", r, run.sup_total, l2]);
        csv.row(cells![
            "sup_weighted",
            r,
            run.sup_weighted,
            (p.n as f64).powf(p.a) * l2
        ]);
        within_total += run.within_bounds(p.n, p.a).0 as u64;
    }
    for (x, (e, t)) in tail.empirical.iter().zip(&tail.exact).enumerate() {
        csv.row(cells!["tail", x, e, t]);
    }
    let checks = vec![
        Check::new(
            "sup sum xi <= (log n)^2",
            within_total == p.reps,
            format!("{within_total}/{} reps", p.reps),
        ),
        Check::new(
            "excursion tail",
            tail.max_abs_error() <= 0.02,
            format!("max error {:.4} <= 0.02", tail.max_abs_error()),
        ),
    ];
    Ok(ExperimentOutput {
        csv: csv.0,
        checks,
        plot: None,
    })
}

fn lemma3_tail(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let mut csv = Csv::new("c,y,empirical,se,bound");
    let mut checks = Vec::new();
    let mut plot = Plot {
        title: format!("P(|C1| >= y), n={}", p.n),
        x_label: "y".into(),
        x: (1..=p.x_max).map(|y| y as f64).collect(),
        series: Vec::new(),
    };
    for &c in &p.c_grid {
        let sizes: Vec<u64> = par::replicate(p.seed, p.reps, |_, rng| {
            gnp_snapshot(p.n, c / p.n as f64, rng)
                .and_then(|g| g.component_size(1))
                .map(|s| s as u64)
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let reps = p.reps as f64;
        let mut worst = f64::NEG_INFINITY;
        let mut series = Vec::new();
        for y in 1..=p.x_max {
            let q = sizes.iter().filter(|&&s| s >= y).count() as f64 / reps;
            let se = (q * (1.0 - q) / reps).sqrt();
            let bound = theory::cluster_tail_bound(c, y as f64)?;
            csv.row(cells![c, y, q, se, bound]);
            worst = worst.max(q - bound - 3.0 * se);
            series.push(q);
        }
        plot.series.push((format!("c={c}"), series));
        checks.push(Check::new(
            format!("tail bound at c={c}"),
            worst <= 0.0,
            format!("max excess over bound + 3 se = {worst:.5}"),
        ));
    }
    Ok(ExperimentOutput {
        csv: csv.0,
        checks,
        plot: Some(plot),
    })
}

fn eq4_trees(p: &ExperimentParams) -> Result<ExperimentOutput> {
    let prob = p.c / p.n as f64;
    let x_max = p.x_max as usize;
    let counts: Vec<Vec<usize>> = par::replicate(p.seed, p.reps, |_, rng| {
        gnp_snapshot(p.n, prob, rng)
            .map(|g| g.component_counts().tree_count_by_size[..=x_max].to_vec())
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut csv = Csv::new("k,mean_T_k,se,expected,lambda");
    let mut plot = Plot {
        title: format!("tree counts, n={} p={prob}", p.n),
        x_label: "k".into(),
        x: Vec::new(),
        series: vec![
            ("mean T_k".into(), Vec::new()),
            ("expected".into(), Vec::new()),
        ],
    };
    let mut worst = 0.0f64;
    for k in 1..=x_max {
        let xs: Vec<f64> = counts.iter().map(|c| c[k] as f64).collect();
        let (m, se) = (stats::mean(&xs), stats::std_error(&xs));
        let expected = theory::expected_tree_count(p.n as u64, k as u64, prob)?;
        let lambda = if p.c <= 1.0 {
            theory::lambda_asymptotic(p.n as u64, k as u64, p.c)
                .map_or(String::new(), |l| l.to_string())
        } else {
            String::new()
        };
        csv.row(cells![k, m, se, expected, lambda]);
        plot.x.push(k as f64);
        plot.series[0].1.push(m);
        plot.series[1].1.push(expected);
        if se > 0.0 {
            worst = worst.max((m - expected).abs() / se);
        }
    }
    Ok(ExperimentOutput {
        csv: csv.0,
        checks: vec![Check::new(
            "mean T_k vs expected (3 se)",
            worst <= 3.0,
            format!("largest deviation {worst:.2} se"),
        )],
        plot: Some(plot),
    })
}

/// A minimal SVG line chart: one polyline per series plus axis ticks.
pub fn render_svg(plot: &Plot) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let finite = |v: &&f64| v.is_finite();
    let (x0, x1) = min_max(plot.x.iter().filter(finite));
    let (y0, y1) = min_max(plot.series.iter().flat_map(|s| s.1.iter()).filter(finite));
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    out.push_str(&format!(
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        escape(&plot.title)
    ));
    out.push_str(&format!(
        "<path d=\"M{M} {M} V{} H{}\" fill=\"none\" stroke=\"black\"/>\n",
        H - M,
        W - M
    ));
    for t in 0..=4 {
        let f = t as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            sx(xv),
            H - M + 15.0,
            format_significant(xv, 3)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            M - 4.0,
            sy(yv) + 4.0,
            format_significant(yv, 3)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        H - 10.0,
        escape(&plot.x_label)
    ));
    for (k, (name, ys)) in plot.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = plot
            .x
            .iter()
            .zip(ys)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" points=\"{}\"/>\n",
            points.join(" ")
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>\n",
            W - M - 120.0,
            M + 14.0 * k as f64,
            escape(name)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn min_max<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
