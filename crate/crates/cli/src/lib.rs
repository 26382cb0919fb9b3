//! Command-line driver: sampling, direct and inverse problems, verification
//! and the end-to-end pipeline.
//!
//! Exit status: 0 success, 1 verification failure (KS above threshold),
//! 2 usage or input error, 3 numerical failure. Every file is written
//! atomically; each run leaves a `.meta.json` record with versions, seed and
//! a hash of its configuration.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sinlaw::inverse::{solve_inverse_with, SolveOptions};
use sinlaw::verify::{verify_batch, VerificationReport};
use sinlaw::{
    hankel0, limit_char_fn, limit_density, sample_vn, target_library, DecayClass, Estimate, QuadConfig64, RealFunction,
    SampleBatch,
};

pub mod inputs;
pub mod io;
pub mod selfcheck;

use io::{config_hash, csv, read_csv, sidecar_path, to_json_bytes, write_atomic, RunMetadata, Versions};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SINLAW_THREADS";

/// Exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    VerificationFailed = 1,
    Usage = 2,
    Numeric = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Numeric(#[from] sinlaw::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn status(&self) -> Status {
        use sinlaw::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io { .. } => Status::Usage,
            CliError::Numeric(E::Usage(_) | E::Domain(_) | E::Precondition(_)) => Status::Usage,
            CliError::Numeric(E::Convergence { .. } | E::Range(_) | E::ModelViolation { .. }) => Status::Numeric,
        }
    }
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "sinlaw", version, about = "Limit laws of f(U) sin(nU): sampling, transforms and verification")]
pub struct RunConfig {
    /// Suppress progress output.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Draw V_n[f] = f(U) sin(nU).
    Sample(SampleArgs),
    /// Limit characteristic function phi(t) of V_n[f].
    Charfn(CharfnArgs),
    /// Limit density of V_n[f].
    Density(DensityArgs),
    /// Build f = k_psi^-1 for a target characteristic function psi.
    Invert(InvertArgs),
    /// Compare a sample file with a target distribution.
    Verify(VerifyArgs),
    /// invert, sample and verify in one run.
    Pipeline(PipelineArgs),
    /// Run the built-in identity checks.
    Selfcheck,
    /// Order-0 Hankel transform of a built-in function.
    Transform(TransformArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Charfn(_) => "charfn",
            Command::Density(_) => "density",
            Command::Invert(_) => "invert",
            Command::Verify(_) => "verify",
            Command::Pipeline(_) => "pipeline",
            Command::Selfcheck => "selfcheck",
            Command::Transform(_) => "transform",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    /// gaussian, cauchy, const:<c> or table:<path>.
    #[arg(long = "f")]
    pub f: String,
    /// Oscillation index.
    #[arg(long, default_value_t = sinlaw::sampler::DEFAULT_N, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 10_000, value_parser = parse_positive)]
    pub count: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "samples.csv")]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CharfnArgs {
    #[arg(long = "f")]
    pub f: String,
    /// Comma-separated frequencies.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub t: Vec<f64>,
    /// Also write the table to this CSV file.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DensityArgs {
    #[arg(long = "f")]
    pub f: String,
    /// Comma-separated points.
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub x: Vec<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct InvertArgs {
    /// gaussian, cauchy or table:<path>.
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value_t = 512, value_parser = parse_grid_size)]
    pub grid_size: usize,
    #[arg(long, default_value = "f_table.csv")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Proceed even if psi fails the admissibility checks.
    #[arg(long)]
    pub allow_inadmissible: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub samples: PathBuf,
    /// std_normal, cauchy or cauchy_gamma:<gamma>.
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "report.json")]
    #[serde(skip)]
    pub report: PathBuf,
    #[arg(long, default_value_t = 0.03)]
    pub ks_threshold: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
    pub t_grid: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct PipelineArgs {
    /// gaussian, cauchy or table:<path>.
    #[arg(long)]
    pub psi: String,
    #[arg(long, default_value_t = sinlaw::sampler::DEFAULT_N, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 10_000, value_parser = parse_positive)]
    pub count: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 512, value_parser = parse_grid_size)]
    pub grid_size: usize,
    /// Defaults to the limit law of a built-in psi.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = 0.03)]
    pub ks_threshold: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
    pub t_grid: Vec<f64>,
    #[arg(long)]
    pub allow_inadmissible: bool,
    /// Directory for f_table.csv, samples.csv and report.json.
    #[arg(long, default_value = ".")]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TransformArgs {
    /// gaussian (e^{-r^2/2}) or exponential (e^{-sqrt(pi/2) r}).
    #[arg(long)]
    pub g: String,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub t: Vec<f64>,
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("expected a positive integer, got '{s}'")),
    }
}

fn parse_grid_size(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 16 => Ok(v),
        _ => Err(format!("grid size must be an integer >= 16, got '{s}'")),
    }
}

/// Parses arguments, applies the thread cap and runs. Returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Status::Usage.code() } else { Status::Success.code() };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return e.status().code();
    }
    run(&config).code()
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| CliError::usage(format!("{THREADS_ENV} must be a positive integer, got '{value}'")))?;
    // a pool built earlier in the process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one command, reporting errors on stderr.
pub fn run(config: &RunConfig) -> Status {
    let ctx = Ctx {
        quiet: config.quiet,
        cfg: QuadConfig64::default(),
    };
    let result = match &config.command {
        Command::Sample(a) => ctx.sample(a, &config.command),
        Command::Charfn(a) => ctx.charfn(a, &config.command),
        Command::Density(a) => ctx.density(a, &config.command),
        Command::Invert(a) => ctx.invert(a, &config.command),
        Command::Verify(a) => ctx.verify(a, &config.command),
        Command::Pipeline(a) => ctx.pipeline(a, &config.command),
        Command::Selfcheck => ctx.selfcheck(),
        Command::Transform(a) => ctx.transform(a),
    };
    match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    }
}

struct Ctx {
    quiet: bool,
    cfg: QuadConfig64,
}

#[derive(Serialize)]
struct SampleSidecar<'a> {
    f_id: &'a str,
    n: u64,
    count: usize,
    seed: u64,
    resamples: u64,
}

#[derive(Serialize)]
struct EcfRow {
    t: f64,
    re: f64,
    im: f64,
    target: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    ks: f64,
    ks_threshold: f64,
    pass: bool,
    ecf: Vec<EcfRow>,
    n: u64,
    count: usize,
    seed: u64,
    target: &'a str,
}

impl<'a> ReportJson<'a> {
    fn new(r: &VerificationReport, target: &'a str) -> Self {
        Self {
            ks: r.ks,
            ks_threshold: r.ks_threshold,
            pass: r.pass,
            ecf: r
                .ecf
                .iter()
                .map(|p| EcfRow {
                    t: p.t,
                    re: p.re,
                    im: p.im,
                    target: p.target,
                })
                .collect(),
            n: r.n,
            count: r.count,
            seed: r.seed,
            target,
        }
    }
}

#[derive(Serialize)]
struct NoExtra {}

#[derive(Serialize)]
struct AdmissibilityJson {
    name: &'static str,
    passed: bool,
    heuristic: bool,
    detail: String,
}

impl Ctx {
    fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn write_meta<E: Serialize>(&self, at: &Path, command: &Command, outputs: &[&Path], extra: E) -> Result<(), CliError> {
        let meta = RunMetadata {
            command: command.name(),
            versions: Versions::current(),
            config: command,
            config_hash: config_hash(command),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            extra,
        };
        write_atomic(at, &to_json_bytes(&meta))
    }

    fn write_samples(&self, batch: &SampleBatch<f64>, out: &Path, command: &Command) -> Result<(), CliError> {
        if let Some(w) = batch.warning() {
            eprintln!("warning: {w}");
        }
        write_atomic(out, csv(&["v"], batch.values.iter().map(|&v| vec![v])).as_bytes())?;
        let sidecar = SampleSidecar {
            f_id: &batch.f_id,
            n: batch.n,
            count: batch.count,
            seed: batch.seed,
            resamples: batch.resamples,
        };
        self.write_meta(&sidecar_path(out), command, &[out], sidecar)
    }

    fn sample(&self, a: &SampleArgs, command: &Command) -> Result<Status, CliError> {
        let f = inputs::parse_f(&a.f)?;
        self.progress(format!("sampling {} draws of {} with n = {}", a.count, f.id(), a.n));
        let batch = sample_vn(&f, a.n, a.count, a.seed)?;
        self.write_samples(&batch, &a.out, command)?;
        self.progress(format!("wrote {}", a.out.display()));
        Ok(Status::Success)
    }

    fn table_output(
        &self,
        header: [&str; 3],
        rows: Vec<Vec<f64>>,
        out: Option<&Path>,
        command: &Command,
    ) -> Result<Status, CliError> {
        let text = csv(&header, rows);
        print!("{text}");
        if let Some(out) = out {
            write_atomic(out, text.as_bytes())?;
            self.write_meta(&sidecar_path(out), command, &[out], NoExtra {})?;
        }
        Ok(Status::Success)
    }

    fn charfn(&self, a: &CharfnArgs, command: &Command) -> Result<Status, CliError> {
        let f = inputs::parse_f(&a.f)?;
        let rows = a
            .t
            .iter()
            .map(|&t| limit_char_fn(&f, t, &self.cfg).map(|e| vec![t, e.value, e.error]))
            .collect::<Result<Vec<_>, _>>()?;
        self.table_output(["t", "phi", "error"], rows, a.out.as_deref(), command)
    }

    fn density(&self, a: &DensityArgs, command: &Command) -> Result<Status, CliError> {
        let f = inputs::parse_f(&a.f)?;
        let rows = a
            .x
            .iter()
            .map(|&x| limit_density(&f, x, &self.cfg).map(|e| vec![x, e.value, e.error]))
            .collect::<Result<Vec<_>, _>>()?;
        self.table_output(["x", "density", "error"], rows, a.out.as_deref(), command)
    }

    fn transform(&self, a: &TransformArgs) -> Result<Status, CliError> {
        let g = match a.g.as_str() {
            "gaussian" => RealFunction::new(|r: f64| (-0.5 * r * r).exp(), DecayClass::Gaussian { scale: 1.0 }),
            "exponential" => {
                let rate = std::f64::consts::FRAC_PI_2.sqrt();
                RealFunction::new(move |r: f64| (-rate * r).exp(), DecayClass::Exponential { rate })
            }
            other => return Err(CliError::usage(format!("unknown function '{other}'"))),
        };
        let rows = a
            .t
            .iter()
            .map(|&t| hankel0(&g, t, &self.cfg).map(|e: Estimate<f64>| vec![t, e.value, e.error]))
            .collect::<Result<Vec<_>, _>>()?;
        print!("{}", csv(&["t", "hankel0", "error"], rows));
        Ok(Status::Success)
    }

    fn solve(&self, psi_spec: &str, grid_size: usize, allow: bool) -> Result<sinlaw::inverse::InverseSolution<f64>, CliError> {
        let psi = inputs::parse_psi(psi_spec)?;
        self.progress(format!("solving the inverse problem for {} on {grid_size} nodes", psi.id()));
        let sol = solve_inverse_with(
            &psi,
            grid_size,
            &self.cfg,
            SolveOptions {
                allow_inadmissible: allow,
            },
        )?;
        for w in sol.report.warnings() {
            eprintln!("warning: {} not satisfied ({}); continuing", w.name, w.detail);
        }
        Ok(sol)
    }

    fn write_f_table(&self, sol: &sinlaw::inverse::InverseSolution<f64>, out: &Path) -> Result<(), CliError> {
        let rows = sol.nodes().into_iter().map(|(u, f)| vec![u, f]);
        write_atomic(out, csv(&["u", "f_of_u"], rows).as_bytes())
    }

    fn admissibility(sol: &sinlaw::inverse::InverseSolution<f64>) -> Vec<AdmissibilityJson> {
        sol.report
            .checks
            .iter()
            .map(|c| AdmissibilityJson {
                name: c.name,
                passed: c.passed,
                heuristic: c.heuristic,
                detail: c.detail.clone(),
            })
            .collect()
    }

    fn invert(&self, a: &InvertArgs, command: &Command) -> Result<Status, CliError> {
        let sol = self.solve(&a.psi, a.grid_size, a.allow_inadmissible)?;
        self.write_f_table(&sol, &a.out)?;
        #[derive(Serialize)]
        struct Extra {
            f_id: String,
            admissibility: Vec<AdmissibilityJson>,
        }
        let extra = Extra {
            f_id: sol.f.id().to_string(),
            admissibility: Self::admissibility(&sol),
        };
        self.write_meta(&sidecar_path(&a.out), command, &[&a.out], extra)?;
        self.progress(format!("wrote {}", a.out.display()));
        Ok(Status::Success)
    }

    fn check(
        &self,
        batch: &SampleBatch<f64>,
        target_name: &str,
        t_grid: &[f64],
        threshold: f64,
        report_path: &Path,
    ) -> Result<VerificationReport, CliError> {
        let target = target_library(target_name)?;
        let report = verify_batch(batch, &target, t_grid, threshold);
        write_atomic(report_path, &to_json_bytes(&ReportJson::new(&report, &target.name)))?;
        self.progress(format!(
            "KS distance to {} = {:.5} (threshold {}): {}; max |ecf - target| = {:.5}",
            target.name,
            report.ks,
            threshold,
            if report.pass { "pass" } else { "FAIL" },
            report.ecf_sup_error()
        ));
        Ok(report)
    }

    fn verify(&self, a: &VerifyArgs, command: &Command) -> Result<Status, CliError> {
        let (header, rows) = read_csv(&a.samples)?;
        if header != ["v"] {
            return Err(CliError::usage(format!("{}: expected a single column 'v'", a.samples.display())));
        }
        if rows.is_empty() {
            return Err(CliError::usage(format!("{}: no samples", a.samples.display())));
        }
        let (n, seed, f_id) = read_sample_sidecar(&a.samples);
        let values = rows.into_iter().map(|r| r[0]).collect();
        let batch = SampleBatch::from_values(values, n, seed, f_id);
        let report = self.check(&batch, &a.target, &a.t_grid, a.ks_threshold, &a.report)?;
        self.write_meta(&sidecar_path(&a.report), command, &[&a.report], NoExtra {})?;
        Ok(if report.pass { Status::Success } else { Status::VerificationFailed })
    }

    fn pipeline(&self, a: &PipelineArgs, command: &Command) -> Result<Status, CliError> {
        let target = match (&a.target, inputs::default_target(&a.psi)) {
            (Some(t), _) => t.clone(),
            (None, Some(t)) => t.to_string(),
            (None, None) => return Err(CliError::usage("--target is required for a tabulated psi")),
        };
        // fail on a bad target before the expensive stages
        target_library(&target)?;
        let sol = self.solve(&a.psi, a.grid_size, a.allow_inadmissible)?;
        let table_path = a.out_dir.join("f_table.csv");
        self.write_f_table(&sol, &table_path)?;

        self.progress(format!("sampling {} draws with n = {}", a.count, a.n));
        let batch = sample_vn(&sol.f, a.n, a.count, a.seed)?;
        let samples_path = a.out_dir.join("samples.csv");
        self.write_samples(&batch, &samples_path, command)?;

        let report_path = a.out_dir.join("report.json");
        let report = self.check(&batch, &target, &a.t_grid, a.ks_threshold, &report_path)?;
        #[derive(Serialize)]
        struct Extra {
            f_id: String,
            target: String,
            seed: u64,
            ks: f64,
            pass: bool,
            admissibility: Vec<AdmissibilityJson>,
        }
        let extra = Extra {
            f_id: sol.f.id().to_string(),
            target,
            seed: a.seed,
            ks: report.ks,
            pass: report.pass,
            admissibility: Self::admissibility(&sol),
        };
        let meta_path = a.out_dir.join("pipeline.meta.json");
        self.write_meta(&meta_path, command, &[&table_path, &samples_path, &report_path], extra)?;
        Ok(if report.pass { Status::Success } else { Status::VerificationFailed })
    }

    fn selfcheck(&self) -> Result<Status, CliError> {
        let lines = selfcheck::run_all(&self.cfg);
        for l in &lines {
            println!(
                "{} {}: worst error {:.3e} (tolerance {:.0e})",
                if l.passed { "PASS" } else { "FAIL" },
                l.name,
                l.worst,
                l.tolerance
            );
        }
        Ok(if lines.iter().all(|l| l.passed) {
            Status::Success
        } else {
            Status::VerificationFailed
        })
    }
}

/// `(n, seed, f_id)` from a sample file's sidecar, or zeros when absent.
fn read_sample_sidecar(samples: &Path) -> (u64, u64, String) {
    let meta = std::fs::read(sidecar_path(samples))
        .ok()
        .and_then(|b| serde_json::from_slice::<serde_json::Value>(&b).ok());
    let field = |k: &str| meta.as_ref().and_then(|m| m.get(k)).and_then(|v| v.as_u64()).unwrap_or(0);
    let f_id = meta
        .as_ref()
        .and_then(|m| m.get("f_id"))
        .and_then(|v| v.as_str())
        .unwrap_or("unknown")
        .to_string();
    (field("n"), field("seed"), f_id)
}
