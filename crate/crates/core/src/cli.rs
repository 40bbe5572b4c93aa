//! Command-line front end. [`run`] is the whole program; the binary only
//! forwards `std::env::args_os` and the standard streams.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::channel::FrameCsi;
use crate::config::{load_csi, OracleKind, OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::oracle::{exact_blind_dp, exact_causal_dp, DpTable};
use crate::report::{fmt_num, moments_csv, to_json, waterfill_csv, waterfill_json};
use crate::sim::{compare, reports_csv, sweep, SimReport, SimSettings};
use crate::waterfill::waterfill;

/// Exit status for invalid configs and inputs.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for every other failure.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "secrecy-alloc",
    version,
    about = "Power allocation over block-fading wiretap channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Acausal secure waterfilling of one known frame.
    Waterfill {
        #[command(flatten)]
        common: Common,
        /// CSV of realized gains, header `alpha,beta`.
        #[arg(long)]
        csi: Option<PathBuf>,
        /// Average power per block.
        #[arg(long)]
        power: Option<f64>,
    },
    /// Monte Carlo evaluation of each configured policy.
    Simulate(Common),
    /// Monte Carlo comparison of policies on common frames.
    Compare(Common),
    /// Grid dynamic-programming benchmark for finite-support distributions.
    Oracle(Common),
    /// Moments consumed by the policies.
    Moments(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format, `csv` or `json`.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, env = "SECRECY_ALLOC_THREADS")]
    threads: Option<usize>,
}

/// Loaded config plus everything the flags override.
struct Context {
    cfg: RunConfig,
    base: PathBuf,
    out: Option<PathBuf>,
    threads: Option<usize>,
}

impl Context {
    fn new(common: &Common, required: bool) -> Result<Self> {
        let (mut cfg, base) = match &common.config {
            Some(path) => (
                RunConfig::load(path)?,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None if required => return Err(Error::Config("--config is required".into())),
            None => (RunConfig::default(), PathBuf::from(".")),
        };
        if let Some(f) = &common.format {
            cfg.format = f.parse()?;
        }
        if let Some(s) = common.seed {
            cfg.seed = s;
        }
        if common.threads == Some(0) {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        // A config `out` is relative to the config file; a flag to the cwd.
        let out = common
            .out
            .clone()
            .or_else(|| cfg.out.as_ref().map(|o| base.join(o)));
        Ok(Self {
            cfg,
            base,
            out,
            threads: common.threads,
        })
    }

    fn settings(&self, power: f64) -> Result<SimSettings> {
        Ok(SimSettings {
            horizon: self.cfg.require_horizon()?,
            avg_power: power,
            n_frames: self.cfg.n_frames,
            seed: self.cfg.seed,
            threads: self.threads,
        })
    }

    fn emit(
        &self,
        csv: impl FnOnce() -> String,
        json: impl FnOnce() -> Result<String>,
    ) -> Result<()> {
        let Some(path) = &self.out else {
            return Ok(());
        };
        let text = match self.cfg.format {
            OutputFormat::Csv => csv(),
            OutputFormat::Json => json()?,
        };
        fs::write(path, text)?;
        Ok(())
    }
}

/// Maps an error to the process exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Contract { .. } => EXIT_FAILURE,
        Error::Domain(_) | Error::Config(_) | Error::LengthMismatch { .. } => EXIT_CONFIG,
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_CONFIG
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Waterfill { common, csi, power } => {
            cmd_waterfill(&common, csi, power, stdout, stderr)
        }
        Command::Simulate(c) => cmd_simulate(&Context::new(&c, true)?, stdout),
        Command::Compare(c) => cmd_compare(&Context::new(&c, true)?, stdout),
        Command::Oracle(c) => cmd_oracle(&Context::new(&c, true)?, stdout),
        Command::Moments(c) => cmd_moments(&Context::new(&c, true)?, stdout),
    }
}

fn cmd_waterfill(
    common: &Common,
    csi_path: Option<PathBuf>,
    power: Option<f64>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<()> {
    let ctx = Context::new(common, false)?;
    let csi: FrameCsi = match (&csi_path, &ctx.cfg.csi) {
        (Some(p), _) => load_csi(p)?,
        (None, Some(spec)) => spec.build(&ctx.base)?,
        (None, None) => {
            return Err(Error::Config(
                "waterfill needs --csi or a `[csi]` config section".into(),
            ))
        }
    };
    let power = match power {
        Some(p) => p,
        None => ctx.cfg.require_power().map_err(|_| {
            Error::Config("waterfill needs --power or `power` in the config".into())
        })?,
    };
    let sol = waterfill(&csi, power)?;
    let capacity = sol.capacity(&csi)?;
    if csi.pairs().iter().all(|p| p.delta() <= 0.0) {
        writeln!(
            stderr,
            "warning: no block has alpha > beta; the allocation is zero"
        )?;
    }
    writeln!(stdout, "block  gamma")?;
    for (i, g) in sol.allocation.gammas().iter().enumerate() {
        writeln!(stdout, "{:>5}  {}", i + 1, fmt_num(*g))?;
    }
    writeln!(stdout, "waterlevel = {}", fmt_num(sol.waterlevel))?;
    writeln!(stdout, "capacity = {}", fmt_num(capacity))?;
    ctx.emit(
        || waterfill_csv(&csi, &sol),
        || waterfill_json(&csi, &sol, power),
    )
}

fn print_reports(reports: &[SimReport], stdout: &mut dyn Write) -> Result<()> {
    for r in reports {
        writeln!(
            stdout,
            "{:<24} M={} P={} mean={} ci=+-{} power={} zero={}",
            r.policy.as_str(),
            r.horizon,
            fmt_num(r.avg_power),
            fmt_num(r.mean),
            fmt_num(r.ci_half_width),
            fmt_num(r.mean_power),
            fmt_num(r.zero_fraction)
        )?;
    }
    Ok(())
}

fn run_sweep(ctx: &Context, stdout: &mut dyn Write) -> Result<()> {
    let policies = ctx.cfg.require_policies()?;
    let dist = ctx.cfg.build_distribution(&ctx.base)?;
    let powers = ctx.cfg.powers()?;
    let reports = sweep(policies, &dist, &ctx.settings(powers[0])?, &powers)?;
    print_reports(&reports, stdout)?;
    ctx.emit(|| reports_csv(&reports), || Ok(to_json(&reports)))
}

fn cmd_simulate(ctx: &Context, stdout: &mut dyn Write) -> Result<()> {
    run_sweep(ctx, stdout)
}

fn cmd_compare(ctx: &Context, stdout: &mut dyn Write) -> Result<()> {
    if ctx.cfg.sweep.is_some() {
        return run_sweep(ctx, stdout);
    }
    let policies = ctx.cfg.require_policies()?;
    let dist = ctx.cfg.build_distribution(&ctx.base)?;
    let cmp = compare(policies, &dist, &ctx.settings(ctx.cfg.require_power()?)?)?;
    print_reports(&cmp.reports, stdout)?;
    for d in &cmp.differences {
        writeln!(
            stdout,
            "{} - {} = {} +- {}",
            d.first,
            d.second,
            fmt_num(d.mean),
            fmt_num(d.ci_half_width)
        )?;
    }
    for d in &cmp.dominance {
        writeln!(
            stdout,
            "frames where {} beats waterfill-acausal: {}",
            d.policy, d.violations
        )?;
    }
    ctx.emit(|| reports_csv(&cmp.reports), || Ok(to_json(&cmp)))
}

#[derive(Serialize)]
struct OracleJson<'a> {
    kind: OracleKind,
    horizon: usize,
    avg_power: f64,
    grid_points: usize,
    grid_step: f64,
    optimal_value: f64,
    value_per_channel_use: f64,
    /// `values[m - 1][k]` is `V_m(k grid_step)`.
    values: Vec<&'a [f64]>,
}

fn cmd_oracle(ctx: &Context, stdout: &mut dyn Write) -> Result<()> {
    let dist = ctx.cfg.build_distribution(&ctx.base)?;
    if dist.finite_support().is_none() {
        return Err(Error::Config(format!(
            "the oracle needs a finite-support distribution; `{}` is not one (use kind = \"discrete\" or an empirical sample)",
            dist.kind_name()
        )));
    }
    let horizon = ctx.cfg.require_horizon()?;
    let power = ctx.cfg.require_power()?;
    let run = || match ctx.cfg.oracle.kind {
        OracleKind::Causal => exact_causal_dp(&dist, horizon, power, ctx.cfg.grid_points),
        OracleKind::Blind => exact_blind_dp(
            &dist,
            horizon,
            power,
            ctx.cfg.grid_points,
            ctx.cfg.oracle.clamped,
        ),
    };
    let table: DpTable = match ctx.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    writeln!(stdout, "V_1(MP) = {}", fmt_num(table.optimal_value()))?;
    writeln!(
        stdout,
        "per channel use = {}",
        fmt_num(table.value_per_channel_use())
    )?;
    ctx.emit(
        || table.to_csv(),
        || {
            Ok(to_json(&OracleJson {
                kind: ctx.cfg.oracle.kind,
                horizon,
                avg_power: power,
                grid_points: table.grid_points(),
                grid_step: table.grid_step(),
                optimal_value: table.optimal_value(),
                value_per_channel_use: table.value_per_channel_use(),
                values: (1..=horizon + 1).map(|m| table.values(m)).collect(),
            }))
        },
    )
}

fn cmd_moments(ctx: &Context, stdout: &mut dyn Write) -> Result<()> {
    let dist = ctx.cfg.build_distribution(&ctx.base)?;
    let m = dist.moments();
    let csv = moments_csv(&m);
    for line in csv.lines().skip(1) {
        let (k, v) = line.split_once(',').unwrap();
        writeln!(stdout, "{k} = {v}")?;
    }
    ctx.emit(|| csv.clone(), || Ok(to_json(&m)))
}
