//! Batch front end behind the `oswr` binary.
//!
//! Every subcommand resolves an [`ExperimentConfig`] (file, then flags),
//! writes it to `<out>/<subcommand>.config.toml` and emits CSV next to it.

pub mod config;
pub mod report;
pub mod sweep;

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{parse_h_list, parse_subdomains, DtRelation, ExperimentConfig, Overrides, ParamSource};
pub use report::{emit_summary, slope_checks, spread_checks, Check};
pub use sweep::{
    compare_closed_form_vs_oracle, fit_groups, fit_loglog, fit_slope, params_table, resolve_params, run_one,
    run_sweep, sweep_plan, write_comparison_csv, write_params_csv, write_slopes_csv, write_sweep_csv, ComparisonRow,
    ParamRow, RowKey, RowParams, SlopeFit, SweepRow,
};

use crate::error::{Error, Result};
use crate::problem::TransmissionKind;
use crate::swr::{Scheme, SwrStatus};

#[derive(Parser, Debug)]
#[command(name = "oswr", version, about = "Optimized transmission parameters and Schwarz waveform relaxation runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Transmission parameters and predicted contraction per mesh size.
    Params(CommonArgs),
    /// Closed-form parameters against the numerical min-max optimum.
    Oracle(CommonArgs),
    /// One waveform relaxation run per mesh size, with its residual history.
    Swr(CommonArgs),
    /// Iteration counts over every configured combination, with slope fits.
    Sweep(CommonArgs),
    /// Pass/fail summary of the CSV files in the output directory.
    Report(CommonArgs),
}

#[derive(Args, Debug, Default)]
pub struct CommonArgs {
    /// TOML experiment description.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Comma separated mesh sizes.
    #[arg(long, value_name = "LIST")]
    pub h: Option<String>,
    /// Decomposition as PxQ.
    #[arg(long, value_name = "PxQ")]
    pub subdomains: Option<String>,
    #[arg(long, value_name = "N")]
    pub overlap_cells: Option<usize>,
    /// dirichlet, robin or ventcel.
    #[arg(long)]
    pub transmission: Option<TransmissionKind>,
    /// closed, oracle or manual.
    #[arg(long)]
    pub param_source: Option<ParamSource>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// implicit or explicit.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Output directory.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Accelerate the interface iteration with GMRES.
    #[arg(long)]
    pub gmres: bool,
}

impl CommonArgs {
    pub fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let o = Overrides {
            h: self.h.as_deref().map(parse_h_list).transpose()?,
            subdomains: self.subdomains.clone(),
            overlap_cells: self.overlap_cells,
            transmission: self.transmission,
            param_source: self.param_source,
            p: self.p,
            q: self.q,
            scheme: self.scheme,
            seed: self.seed,
            tol: self.tol,
            max_iter: self.max_iter,
            out: self.out.clone(),
            gmres: self.gmres,
        };
        cfg.apply(&o);
        cfg.resolve()
    }
}

/// Caps the global thread pool with `OSWR_THREADS` when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("OSWR_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| Error::Config(format!("OSWR_THREADS must be an integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn create(cfg: &ExperimentConfig, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let p = cfg.output.path.join(name);
    Ok((p.clone(), BufWriter::new(File::create(p)?)))
}

fn cmd_params(cfg: &ExperimentConfig) -> Result<i32> {
    let rows = params_table(cfg)?;
    let (path, w) = create(cfg, "params.csv")?;
    write_params_csv(&rows, w)?;
    write_params_csv(&rows, std::io::stdout().lock())?;
    eprintln!("wrote {}", path.display());
    Ok(0)
}

fn cmd_oracle(cfg: &ExperimentConfig) -> Result<i32> {
    let rows = compare_closed_form_vs_oracle(cfg)?;
    let (path, w) = create(cfg, "oracle.csv")?;
    write_comparison_csv(&rows, w)?;
    write_comparison_csv(&rows, std::io::stdout().lock())?;
    eprintln!("wrote {}", path.display());
    Ok(0)
}

fn cmd_swr(cfg: &ExperimentConfig) -> Result<i32> {
    let (px, py) = cfg.decompositions()[0];
    let key = RowKey { px, py, kind: cfg.transmission.kind[0], overlap_cells: cfg.decomposition.overlap_cells[0] };
    let mut code = 0;
    for &h in &cfg.grid.h {
        let (rp, run) = run_one(cfg, h, &key, cfg.output.field)?;
        let stem = format!("swr_{}_{}x{}_ov{}_h{}", key.kind, px, py, key.overlap_cells, h);
        let (path, w) = create(cfg, &format!("{stem}.csv"))?;
        run.log.write_csv(w)?;
        if let Some(f) = &run.field {
            f.write_binary(&cfg.output.path.join(format!("{stem}.bin")))?;
        }
        let t = rp.params.vertical;
        match run.status {
            SwrStatus::Converged => println!(
                "h={h} {} p={:.6} q={:.6}: converged in {} iterations",
                key.kind,
                t.p,
                t.q,
                run.log.iterations_to_tol.unwrap_or(0)
            ),
            SwrStatus::MaxIterExceeded { final_residual } => {
                code = 1;
                println!("h={h} {}: no convergence after {} iterations, residual {final_residual:.3e}", key.kind, run.log.residuals.len())
            }
        }
        eprintln!("wrote {}", path.display());
    }
    Ok(code)
}

fn cmd_sweep(cfg: &ExperimentConfig) -> Result<i32> {
    let rows = run_sweep(cfg)?;
    let (path, w) = create(cfg, "sweep.csv")?;
    write_sweep_csv(&rows, w)?;
    write_sweep_csv(&rows, std::io::stdout().lock())?;
    let fits = fit_groups(&rows);
    let (spath, w) = create(cfg, "slopes.csv")?;
    write_slopes_csv(&fits, w)?;
    eprintln!("wrote {} and {}", path.display(), spath.display());
    Ok(0)
}

/// Rebuilds sweep rows from a written `sweep.csv`.
pub fn read_sweep_csv<R: std::io::Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    let bad = |what: &str| Error::Config(format!("malformed sweep row: {what}"));
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() < sweep::SWEEP_HEADER.len() {
            return Err(bad("too few columns"));
        }
        let f = |i: usize| rec[i].trim().parse::<f64>().ok();
        let u = |i: usize| rec[i].trim().parse::<usize>().ok();
        rows.push(SweepRow {
            h: f(0).ok_or_else(|| bad("h"))?,
            key: RowKey {
                px: u(1).ok_or_else(|| bad("px"))?,
                py: u(2).ok_or_else(|| bad("py"))?,
                kind: rec[3].parse()?,
                overlap_cells: u(4).ok_or_else(|| bad("overlap_cells"))?,
            },
            p: f(5),
            q: f(6),
            delta_predicted: f(7),
            delta_oracle: f(8),
            iterations: u(9),
            final_residual: f(10),
            error: (!rec[12].is_empty()).then(|| rec[12].to_string()),
        });
    }
    Ok(rows)
}

/// Rebuilds the spread checks from a written `oracle.csv`.
fn oracle_checks<R: std::io::Read>(r: R) -> Result<Vec<Check>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let col = |n: &str| header.iter().position(|h| h == n).ok_or_else(|| Error::Config(format!("oracle.csv lacks '{n}'")));
    let (ih, ik, io, is) = (col("h")?, col("kind")?, col("overlap_cells")?, col("spread")?);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if let Ok(s) = rec[is].parse::<f64>() {
            let m = if &rec[ik] == "robin" { 2 } else { 3 };
            out.push(Check::at_most(
                format!("equioscillation top-{m} {} overlap {} h={}", &rec[ik], &rec[io], &rec[ih]),
                s,
                report::SPREAD_TOL,
            ));
        }
    }
    Ok(out)
}

fn cmd_report(cfg: &ExperimentConfig) -> Result<i32> {
    let mut checks = Vec::new();
    let sweep = cfg.output.path.join("sweep.csv");
    if sweep.exists() {
        let rows = read_sweep_csv(File::open(&sweep)?)?;
        checks.extend(slope_checks(&fit_groups(&rows)));
    }
    let oracle = cfg.output.path.join("oracle.csv");
    if oracle.exists() {
        checks.extend(oracle_checks(File::open(&oracle)?)?);
    }
    let (text, code) = emit_summary(&checks);
    print!("{text}");
    Ok(code)
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let args = match &cli.command {
        Command::Params(a) | Command::Oracle(a) | Command::Swr(a) | Command::Sweep(a) | Command::Report(a) => a,
    };
    let result = init_threads().and_then(|_| args.load()).and_then(|cfg| {
        let name = match cli.command {
            Command::Params(_) => "params",
            Command::Oracle(_) => "oracle",
            Command::Swr(_) => "swr",
            Command::Sweep(_) => "sweep",
            Command::Report(_) => "report",
        };
        cfg.echo(name)?;
        match cli.command {
            Command::Params(_) => cmd_params(&cfg),
            Command::Oracle(_) => cmd_oracle(&cfg),
            Command::Swr(_) => cmd_swr(&cfg),
            Command::Sweep(_) => cmd_sweep(&cfg),
            Command::Report(_) => cmd_report(&cfg),
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
