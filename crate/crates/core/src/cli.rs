//! Command-line front end: configuration resolution and CSV output.
//!
//! Values resolve as flag, then config file, then default. The seed falls
//! back to `BEAMFORGE_SEED` when neither flag nor file sets it.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::acceptance;
use crate::beampattern::{mc_beampattern, uniform_grid};
use crate::error::{Error, Result};
use crate::model::{db_to_linear, SystemParams};
use crate::sep::{mc_sep, mean_phasor, power_reduction_coefficient, sep_analytic_detailed, QuadSpec, SinrMap, XiRoute};
use crate::stochastic::ErrorModel;
use crate::sweep::{run_sep_sweep, SweepAxis, SweepSettings};

pub const SEED_ENV: &str = "BEAMFORGE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Beampattern,
    SepAnalytic,
    SepMc,
    SepSweep,
    Atau,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Perfect,
    Channel,
    ClosedLoop,
    OpenLoop,
}

impl ModelKind {
    fn for_axis(axis: SweepAxis) -> Self {
        match axis {
            SweepAxis::SigmaDeltaRatio => ModelKind::Channel,
            SweepAxis::RhoTauDb => ModelKind::ClosedLoop,
            SweepAxis::RMaxRatio | SweepAxis::PsiMaxRatio => ModelKind::OpenLoop,
        }
    }
}

#[derive(Parser, Debug, Default)]
#[command(name = "beamforge", version, about = "Collaborative beamforming SEP and beampattern evaluation")]
pub struct Cli {
    #[arg(long, value_enum)]
    pub command: Option<Command>,
    /// JSON file with any subset of the run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Collaborating nodes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Colliding sources.
    #[arg(long)]
    pub k: Option<usize>,
    /// PSK order.
    #[arg(long)]
    pub m: Option<usize>,
    /// Symbols per packet.
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma1_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma2_db: Option<f64>,
    #[arg(long)]
    pub r_over_lambda: Option<f64>,
    /// Amplification `μ_m`; defaults to `1/N`.
    #[arg(long)]
    pub mu_m: Option<f64>,
    #[arg(long, value_enum)]
    pub error_model: Option<ModelKind>,
    /// `σ_δ²/σ_a²`.
    #[arg(long)]
    pub sigma_delta_ratio: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho_tau_db: Option<f64>,
    /// `r_max/R`.
    #[arg(long)]
    pub r_max_ratio: Option<f64>,
    /// `ψ_max/(2π)`.
    #[arg(long)]
    pub psi_max_ratio: Option<f64>,
    /// `axis:v1,v2,...` with axis one of sigma-delta-ratio, rho-tau-db,
    /// r-max-ratio, psi-max-ratio.
    #[arg(long, allow_hyphen_values = true)]
    pub sweep: Option<String>,
    /// Monte Carlo trials (packets, or location draws for `beampattern`).
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Azimuths in the beampattern grid over [−180°, 180°].
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Destination azimuth in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub phi_m_deg: Option<f64>,
    /// Location-error draws for the open-loop mean phasor.
    #[arg(long)]
    pub phasor_samples: Option<u64>,
}

/// System parameters as entered, with SNRs in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamInputs {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub l: usize,
    pub gamma1_db: f64,
    pub gamma2_db: f64,
    pub r_over_lambda: f64,
    pub mu_m: Option<f64>,
}

impl ParamInputs {
    pub fn build(&self) -> Result<SystemParams> {
        let mut p = SystemParams::unit(self.n, self.k, self.m, self.l, self.r_over_lambda)?;
        if let Some(mu) = self.mu_m {
            p.mu_m = mu;
        }
        p.derive_powers(self.gamma1_db, self.gamma2_db)
    }
}

/// Error model as entered, with every knob in its ratio or dB form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelInputs {
    pub kind: ModelKind,
    pub sigma_delta_ratio: f64,
    pub rho_tau_db: f64,
    pub r_max_ratio: f64,
    pub psi_max_ratio: f64,
}

impl ModelInputs {
    pub fn build(&self, params: &SystemParams) -> Result<ErrorModel> {
        let model = match self.kind {
            ModelKind::Perfect => ErrorModel::Perfect,
            ModelKind::Channel => ErrorModel::ChannelError {
                sigma_delta_sq: self.sigma_delta_ratio * params.sigma_a_sq,
            },
            ModelKind::ClosedLoop => ErrorModel::ClosedLoopPhase {
                rho_tau: db_to_linear(self.rho_tau_db),
            },
            ModelKind::OpenLoop => ErrorModel::OpenLoopPhase {
                r_max: self.r_max_ratio * params.r_over_lambda,
                psi_max: self.psi_max_ratio * 2.0 * std::f64::consts::PI,
            },
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (axis, list) = text
            .split_once(':')
            .ok_or_else(|| Error::config("sweep", format!("expected `axis:v1,v2,...`, got `{text}`")))?;
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config("sweep", format!("`{v}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        axis.parse::<SweepAxis>()?;
        Ok(SweepSpec {
            axis: axis.to_string(),
            values,
        })
    }

    pub fn axis(&self) -> Result<SweepAxis> {
        self.axis.parse()
    }
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: ParamInputs,
    pub error_model: ModelInputs,
    pub sweep: Option<SweepSpec>,
    pub trials: u64,
    pub master_seed: u64,
    pub output_path: Option<PathBuf>,
    pub threads: Option<usize>,
    pub grid_points: usize,
    pub phi_m_deg: f64,
    pub phasor_samples: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileParams {
    n: Option<usize>,
    k: Option<usize>,
    m: Option<usize>,
    l: Option<usize>,
    gamma1_db: Option<f64>,
    gamma2_db: Option<f64>,
    r_over_lambda: Option<f64>,
    mu_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileModel {
    kind: Option<ModelKind>,
    sigma_delta_ratio: Option<f64>,
    rho_tau_db: Option<f64>,
    r_max_ratio: Option<f64>,
    psi_max_ratio: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSweep {
    axis: String,
    values: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<Command>,
    #[serde(default)]
    params: FileParams,
    #[serde(default)]
    error_model: FileModel,
    sweep: Option<FileSweep>,
    trials: Option<u64>,
    master_seed: Option<u64>,
    output_path: Option<PathBuf>,
    threads: Option<usize>,
    grid_points: Option<usize>,
    phi_m_deg: Option<f64>,
    phasor_samples: Option<u64>,
}

fn read_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))
}

/// Resolves flags, an optional config file, the seed environment value and
/// the defaults into a checked [`RunConfig`].
pub fn parse_config(cli: Cli, env_seed: Option<&str>) -> Result<RunConfig> {
    let file = match &cli.config {
        Some(path) => read_file_config(path)?,
        None => FileConfig::default(),
    };
    let command = cli
        .command
        .or(file.command)
        .ok_or_else(|| Error::config("command", "no command given (use --command)"))?;
    let fp = &file.params;
    let params = ParamInputs {
        n: cli.n.or(fp.n).unwrap_or(100),
        k: cli.k.or(fp.k).unwrap_or(4),
        m: cli.m.or(fp.m).unwrap_or(2),
        l: cli.l.or(fp.l).unwrap_or(16),
        gamma1_db: cli.gamma1_db.or(fp.gamma1_db).unwrap_or(20.0),
        gamma2_db: cli.gamma2_db.or(fp.gamma2_db).unwrap_or(20.0),
        r_over_lambda: cli.r_over_lambda.or(fp.r_over_lambda).unwrap_or(10.0),
        mu_m: cli.mu_m.or(fp.mu_m),
    };
    let sweep = match (&cli.sweep, file.sweep) {
        (Some(text), _) => Some(SweepSpec::parse(text)?),
        (None, Some(s)) => {
            s.axis.parse::<SweepAxis>()?;
            Some(SweepSpec {
                axis: s.axis,
                values: s.values,
            })
        }
        (None, None) => None,
    };
    let fm = &file.error_model;
    let kind = match (cli.error_model.or(fm.kind), &sweep) {
        (Some(k), _) => k,
        (None, Some(s)) => ModelKind::for_axis(s.axis()?),
        (None, None) => ModelKind::Perfect,
    };
    let error_model = ModelInputs {
        kind,
        sigma_delta_ratio: cli.sigma_delta_ratio.or(fm.sigma_delta_ratio).unwrap_or(0.1),
        rho_tau_db: cli.rho_tau_db.or(fm.rho_tau_db).unwrap_or(10.0),
        r_max_ratio: cli.r_max_ratio.or(fm.r_max_ratio).unwrap_or(0.1),
        psi_max_ratio: cli.psi_max_ratio.or(fm.psi_max_ratio).unwrap_or(0.02),
    };
    let master_seed = match cli.seed.or(file.master_seed) {
        Some(s) => s,
        None => match env_seed {
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::config("seed", format!("{SEED_ENV}=`{v}` is not a 64-bit unsigned integer")))?,
            None => 0,
        },
    };
    let config = RunConfig {
        command,
        params,
        error_model,
        sweep,
        trials: cli.trials.or(file.trials).unwrap_or(10_000),
        master_seed,
        output_path: cli.out.or(file.output_path),
        threads: cli.threads.or(file.threads),
        grid_points: cli.grid_points.or(file.grid_points).unwrap_or(361),
        phi_m_deg: cli.phi_m_deg.or(file.phi_m_deg).unwrap_or(0.0),
        phasor_samples: cli.phasor_samples.or(file.phasor_samples).unwrap_or(1_000_000),
    };
    check(&config)?;
    Ok(config)
}

fn as_config_error(e: Error) -> Error {
    match e {
        Error::Parameter { field, reason } => Error::config(field, reason),
        other => other,
    }
}

fn check(c: &RunConfig) -> Result<()> {
    let params = c.params.build().map_err(as_config_error)?;
    let model = c.error_model.build(&params).map_err(as_config_error)?;
    if c.trials == 0 && c.command != Command::SepAnalytic && c.command != Command::Validate {
        return Err(Error::config("trials", "must be at least 1"));
    }
    if c.threads == Some(0) {
        return Err(Error::config("threads", "must be at least 1"));
    }
    if c.grid_points == 0 {
        return Err(Error::config("grid_points", "must be at least 1"));
    }
    if !c.phi_m_deg.is_finite() {
        return Err(Error::config("phi_m_deg", "must be finite"));
    }
    if c.error_model.kind == ModelKind::OpenLoop && c.phasor_samples < 2 {
        return Err(Error::config("phasor_samples", "open-loop mean phasor needs at least 2 samples"));
    }
    match (&c.sweep, c.command) {
        (None, Command::SepSweep) => Err(Error::config("sweep", "sep-sweep needs --sweep axis:v1,v2,...")),
        (Some(s), Command::SepSweep | Command::Atau) => {
            if s.values.is_empty() {
                return Err(Error::config("sweep", "needs at least one value"));
            }
            let axis = s.axis()?;
            for &v in &s.values {
                axis.apply(&params, &model, v)?;
            }
            Ok(())
        }
        (Some(_), cmd) => Err(Error::config(
            "sweep",
            format!("--sweep does not apply to `{}`", command_name(cmd)),
        )),
        (None, Command::Atau) if !model.is_phase() => Err(Error::config(
            "error_model",
            "atau needs a closed-loop or open-loop phase model",
        )),
        _ => Ok(()),
    }
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Beampattern => "beampattern",
        Command::SepAnalytic => "sep-analytic",
        Command::SepMc => "sep-mc",
        Command::SepSweep => "sep-sweep",
        Command::Atau => "atau",
        Command::Validate => "validate",
    }
}

/// Formats a number with 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Rows of a CSV table, all as text.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let to_io = |e: csv::Error| Error::Io(io::Error::other(e));
        out.write_record(&self.header).map_err(to_io)?;
        for r in &self.rows {
            out.write_record(r).map_err(to_io)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// What a run produced.
pub struct Outcome {
    table: Table,
    pub summary: String,
    pub success: bool,
}

/// Executes a resolved configuration and returns its table and summary.
pub fn execute(c: &RunConfig) -> Result<Outcome> {
    let params = c.params.build()?;
    let model = c.error_model.build(&params)?;
    let quad = QuadSpec::default();
    match c.command {
        Command::Beampattern => {
            let grid = uniform_grid(c.grid_points);
            let curve = mc_beampattern(&params, &model, c.phi_m_deg.to_radians(), &grid, c.trials, c.master_seed)?;
            let mut t = Table::new(&["phi_rad", "power", "stderr"]);
            for i in 0..grid.len() {
                t.rows
                    .push(vec![fmt_num(curve.phis[i]), fmt_num(curve.power[i]), fmt_num(curve.stderr[i])]);
            }
            let peak = curve.power.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            Ok(Outcome {
                table: t,
                summary: format!(
                    "beampattern: {} angles, {} trials, {} model, peak power {peak:.4e}",
                    grid.len(),
                    c.trials,
                    model.name()
                ),
                success: true,
            })
        }
        Command::SepAnalytic => {
            let map = SinrMap::for_model(&params, &model, c.phasor_samples, c.master_seed)?;
            let e = sep_analytic_detailed(&map, &quad)?;
            let route = match e.route {
                XiRoute::GaussLaguerre => "gauss-laguerre",
                _ => "adaptive",
            };
            let mut t = Table::new(&["error_model", "sep_analytic", "route", "nodes", "self_convergence"]);
            t.rows.push(vec![
                model.name().to_string(),
                fmt_num(e.value),
                route.to_string(),
                e.nodes.to_string(),
                fmt_num(e.self_convergence),
            ]);
            Ok(Outcome {
                table: t,
                summary: format!("sep-analytic: {} model, SEP {:.6e} ({route})", model.name(), e.value),
                success: true,
            })
        }
        Command::SepMc => {
            let r = mc_sep(&params, &model, c.trials, c.master_seed)?;
            let mut t = Table::new(&["error_model", "sep_mc", "sep_mc_stderr", "errors", "symbols", "trials"]);
            t.rows.push(vec![
                model.name().to_string(),
                fmt_num(r.sep),
                fmt_num(r.stderr),
                r.errors.to_string(),
                r.symbols.to_string(),
                r.trials.to_string(),
            ]);
            Ok(Outcome {
                table: t,
                summary: format!(
                    "sep-mc: {} model, SEP {:.6e} ± {:.2e} ({} errors in {} symbols)",
                    model.name(),
                    r.sep,
                    r.stderr,
                    r.errors,
                    r.symbols
                ),
                success: true,
            })
        }
        Command::SepSweep => {
            let spec = c.sweep.as_ref().expect("checked at parse time");
            let axis = spec.axis()?;
            let settings = SweepSettings {
                trials: c.trials,
                master_seed: c.master_seed,
                phasor_samples: c.phasor_samples,
                quad,
            };
            let curve = run_sep_sweep(&params, &model, axis, &spec.values, &settings)?;
            let mut t = Table::new(&[axis.column(), "sep_analytic", "sep_mc", "sep_mc_stderr", "trials"]);
            for i in 0..curve.values.len() {
                t.rows.push(vec![
                    fmt_num(curve.values[i]),
                    fmt_num(curve.analytic[i]),
                    fmt_num(curve.mc[i]),
                    fmt_num(curve.mc_stderr[i]),
                    curve.trials.to_string(),
                ]);
            }
            Ok(Outcome {
                table: t,
                summary: format!("sep-sweep: {} points over {axis}, {} trials each", curve.values.len(), c.trials),
                success: true,
            })
        }
        Command::Atau => {
            let points: Vec<(String, ErrorModel)> = match &c.sweep {
                Some(s) => {
                    let axis = s.axis()?;
                    s.values
                        .iter()
                        .map(|&v| Ok((fmt_num(v), axis.apply(&params, &model, v)?)))
                        .collect::<Result<_>>()?
                }
                None => vec![(String::new(), model)],
            };
            let first = match &c.sweep {
                Some(s) => s.axis()?.column(),
                None => "error_model",
            };
            let mut t = Table::new(&[first, "mean_phasor_sq", "mean_phasor_stderr", "a_tau"]);
            let mut last = 0.0;
            for (label, m) in points {
                let est = mean_phasor(&params, &m, c.phasor_samples, c.master_seed)?;
                last = power_reduction_coefficient(params.nodes, est.value);
                let label = if c.sweep.is_some() { label } else { m.name().to_string() };
                t.rows.push(vec![label, fmt_num(est.value), fmt_num(est.stderr), fmt_num(last)]);
            }
            Ok(Outcome {
                summary: format!("atau: {} rows, last A_τ {last:.6}", t.rows.len()),
                table: t,
                success: true,
            })
        }
        Command::Validate => {
            let mut t = Table::new(&["criterion", "name", "passed", "detail"]);
            let mut passed = 0;
            let mut total = 0;
            for (id, _, _) in acceptance::CRITERIA {
                let r = acceptance::run_criterion(id);
                eprintln!("{r}");
                total += 1;
                passed += usize::from(r.passed);
                t.rows
                    .push(vec![r.id.to_string(), r.name.to_string(), r.passed.to_string(), r.detail]);
            }
            Ok(Outcome {
                table: t,
                summary: format!("validate: {passed}/{total} criteria passed"),
                success: passed == total,
            })
        }
    }
}

fn write_outcome(outcome: &Outcome, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| {
                Error::Io(io::Error::new(e.kind(), format!("cannot write {}: {e}", p.display())))
            })?;
            outcome.table.write_to(io::BufWriter::new(file))
        }
        None => outcome.table.write_to(io::stdout().lock()),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Parameter { .. } => 2,
        _ => 1,
    }
}

/// Runs the program on `args` (including the program name) and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I, env_seed: Option<&str>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let config = match parse_config(cli, env_seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("beamforge: {e}");
            return exit_code(&e);
        }
    };
    let run = || -> Result<Outcome> {
        let outcome = execute(&config)?;
        write_outcome(&outcome, config.output_path.as_deref())?;
        Ok(outcome)
    };
    let result = match config.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => Err(Error::Numeric(format!("cannot start worker pool: {e}"))),
        },
        None => run(),
    };
    match result {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            if outcome.success {
                0
            } else {
                1
            }
        }
        Err(e) => {
            // configuration was checked up front, so anything here is a run failure
            eprintln!("beamforge: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig> {
        let argv = std::iter::once("beamforge").chain(args.iter().copied());
        parse_config(Cli::try_parse_from(argv).unwrap(), None)
    }

    #[test]
    fn defaults() {
        let c = parse(&["--command", "sep-mc"]).unwrap();
        assert_eq!(
            c.params,
            ParamInputs {
                n: 100,
                k: 4,
                m: 2,
                l: 16,
                gamma1_db: 20.0,
                gamma2_db: 20.0,
                r_over_lambda: 10.0,
                mu_m: None
            }
        );
        assert_eq!(c.master_seed, 0);
        assert_eq!(c.error_model.kind, ModelKind::Perfect);
        let p = c.params.build().unwrap();
        assert!((p.mu_m - 0.01).abs() < 1e-18);
    }

    #[test]
    fn sweep_infers_model_and_checks_compatibility() {
        let c = parse(&["--command", "sep-sweep", "--sweep", "rho-tau-db:0,10"]).unwrap();
        assert_eq!(c.error_model.kind, ModelKind::ClosedLoop);
        let e = parse(&[
            "--command",
            "sep-sweep",
            "--error-model",
            "closed-loop",
            "--sweep",
            "sigma-delta-ratio:0.1",
        ])
        .unwrap_err();
        assert_eq!(exit_code(&e), 2);
        assert!(e.to_string().contains("sweep"));
    }

    #[test]
    fn seed_from_environment() {
        let argv = ["beamforge", "--command", "sep-mc"];
        let c = parse_config(Cli::try_parse_from(argv).unwrap(), Some("42")).unwrap();
        assert_eq!(c.master_seed, 42);
        let argv = ["beamforge", "--command", "sep-mc", "--seed", "7"];
        let c = parse_config(Cli::try_parse_from(argv).unwrap(), Some("42")).unwrap();
        assert_eq!(c.master_seed, 7);
        let argv = ["beamforge", "--command", "sep-mc"];
        assert!(parse_config(Cli::try_parse_from(argv).unwrap(), Some("x")).is_err());
    }

    #[test]
    fn invalid_values_name_the_field() {
        let e = parse(&["--command", "sep-mc", "--m", "3"]).unwrap_err();
        assert_eq!(exit_code(&e), 2);
        assert!(e.to_string().contains("psk_order") || e.to_string().contains('m'));
        let e = parse(&["--command", "sep-mc", "--trials", "0"]).unwrap_err();
        assert!(e.to_string().contains("trials"));
        assert!(parse(&["--command", "sep-sweep"]).is_err());
        assert!(parse(&["--command", "atau"]).is_err());
        assert!(parse(&["--command", "beampattern", "--sweep", "rho-tau-db:1"]).is_err());
    }

    #[test]
    fn negative_values_are_accepted() {
        let c = parse(&["--command", "sep-analytic", "--gamma2-db", "-5", "--phi-m-deg", "-30"]).unwrap();
        assert_eq!(c.params.gamma2_db, -5.0);
        assert_eq!(c.phi_m_deg, -30.0);
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 4.849e-11, 123456.789, 0.0] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_num(0.5), "5.0000000000000000e-1");
    }
}
