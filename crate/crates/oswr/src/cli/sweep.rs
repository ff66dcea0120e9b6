//! Parameter tables, oracle comparisons and SWR sweeps.

use std::io::Write;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ParamSource};
use crate::closedform::{optimized, OptimizedParams, Overlap, Regime};
use crate::error::{Error, Result};
use crate::oracle::{optimize_robin, optimize_ventcel, verify_strict_local_min, OracleResult, Search};
use crate::problem::{
    check_hypothesis, default_frequency_box, transposed_frequency_box, Coefficients, FrequencyBox, GridSpec,
    TransmissionKind, TransmissionParams,
};
use crate::swr::{decompose, swr_gmres, swr_solve, InterfaceParams, SwrOptions, SwrRun, SwrStatus};
use crate::symbol::{sup_abs_rho, Sampling};

/// Decimal rendering shared by every CSV column.
pub(crate) fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.10e}")
    } else {
        v.to_string()
    }
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Expected exponent `s` in `iterations ~ h^-s`.
pub fn expected_exponent(kind: TransmissionKind, overlap_cells: usize) -> Option<f64> {
    match (kind, overlap_cells) {
        (TransmissionKind::Dirichlet, _) => None,
        (TransmissionKind::Robin, 0) => Some(0.5),
        (TransmissionKind::Robin, _) => Some(1.0 / 3.0),
        (TransmissionKind::Ventcel, 0) => Some(0.25),
        (TransmissionKind::Ventcel, _) => Some(0.2),
    }
}

fn regime(cfg: &ExperimentConfig, h: f64, overlap_cells: usize) -> Regime {
    let overlap = if overlap_cells == 0 { Overlap::None } else { Overlap::Discrete(overlap_cells as f64 * h) };
    Regime { overlap, relation: cfg.relation() }
}

/// The two orientations of an interface: coefficients and frequency box as
/// seen from a vertical and from a horizontal interface.
fn orientations(cfg: &ExperimentConfig, coeffs: &Coefficients, grid: &GridSpec) -> [(Coefficients, FrequencyBox); 2] {
    [
        (*coeffs, cfg.frequency_box(default_frequency_box(grid))),
        (coeffs.transposed(), cfg.frequency_box(transposed_frequency_box(grid))),
    ]
}

fn oracle_for(coeffs: &Coefficients, bx: &FrequencyBox, kind: TransmissionKind, l: f64, start: &OptimizedParams) -> Result<OracleResult> {
    let (p0, q0) = if start.valid { (start.p, start.q) } else { (1.0, if kind == TransmissionKind::Ventcel { 0.1 } else { 0.0 }) };
    let mut search = Search::around(p0, q0);
    if kind == TransmissionKind::Robin {
        search.q_range = (0.0, 0.0);
        search.start.1 = 0.0;
        optimize_robin(coeffs, bx, l, &search)
    } else {
        optimize_ventcel(coeffs, bx, l, &search)
    }
}

/// Transmission parameters of one sweep row.
#[derive(Clone, Debug)]
pub struct RowParams {
    pub params: InterfaceParams,
    /// Contraction predicted for the vertical interfaces by the chosen source.
    pub delta_predicted: Option<f64>,
    pub delta_oracle: Option<f64>,
}

/// Resolves the parameters of both interface orientations.
pub fn resolve_params(
    cfg: &ExperimentConfig,
    coeffs: &Coefficients,
    grid: &GridSpec,
    kind: TransmissionKind,
    overlap_cells: usize,
) -> Result<RowParams> {
    let h = grid.h;
    let l = overlap_cells as f64 * h;
    if kind == TransmissionKind::Dirichlet {
        let t = TransmissionParams::dirichlet(l)?;
        return Ok(RowParams { params: InterfaceParams::uniform(t), delta_predicted: None, delta_oracle: None });
    }
    let or = orientations(cfg, coeffs, grid);
    let same = or[0] == or[1];
    let mut out: Vec<(TransmissionParams, Option<f64>, Option<f64>)> = Vec::new();
    for (n, (c, bx)) in or.iter().enumerate() {
        if n == 1 && same {
            out.push(out[0]);
            continue;
        }
        if !check_hypothesis(c, bx) {
            return Err(Error::InvalidBox("Re z is not bounded away from zero on the frequency box".into()));
        }
        let row = match cfg.transmission.source {
            ParamSource::Manual => {
                let p = cfg.transmission.p.unwrap_or(f64::NAN);
                let t = match kind {
                    TransmissionKind::Robin => TransmissionParams::robin(p, l)?,
                    _ => TransmissionParams::ventcel(p, cfg.transmission.q.unwrap_or(f64::NAN), l)?,
                };
                if !(p > 0.0) {
                    return Err(Error::InvalidParams(format!("{kind} parameter p must be positive, got {p}")));
                }
                let d = sup_abs_rho(c, bx, &t, &Sampling::default())?.value;
                let o = if cfg.transmission.with_oracle {
                    let cf = optimized(kind, c, bx, h, regime(cfg, h, overlap_cells))?;
                    Some(oracle_for(c, bx, kind, l, &cf)?.delta)
                } else {
                    None
                };
                (t, Some(d), o)
            }
            ParamSource::Closed => {
                let cf = optimized(kind, c, bx, h, regime(cfg, h, overlap_cells))?;
                let o = if cfg.transmission.with_oracle { Some(oracle_for(c, bx, kind, l, &cf)?.delta) } else { None };
                (cf.transmission(kind, l)?, Some(cf.delta), o)
            }
            ParamSource::Oracle => {
                let cf = optimized(kind, c, bx, h, regime(cfg, h, overlap_cells))?;
                let r = oracle_for(c, bx, kind, l, &cf)?;
                let t = match kind {
                    TransmissionKind::Robin => TransmissionParams::robin(r.p, l)?,
                    _ => TransmissionParams::ventcel(r.p, r.q, l)?,
                };
                (t, Some(r.delta), Some(r.delta))
            }
        };
        out.push(row);
    }
    Ok(RowParams {
        params: InterfaceParams { vertical: out[0].0, horizontal: out[1].0 },
        delta_predicted: out[0].1,
        delta_oracle: out[0].2,
    })
}

/// One experiment of a sweep.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RowKey {
    pub px: usize,
    pub py: usize,
    pub kind: TransmissionKind,
    pub overlap_cells: usize,
}

/// Result of one sweep row.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub h: f64,
    pub key: RowKey,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub delta_predicted: Option<f64>,
    pub delta_oracle: Option<f64>,
    pub iterations: Option<usize>,
    pub final_residual: Option<f64>,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: [&str; 13] = [
    "h",
    "px",
    "py",
    "kind",
    "overlap_cells",
    "p",
    "q",
    "delta_predicted",
    "delta_oracle",
    "iterations",
    "final_residual",
    "status",
    "error",
];

impl SweepRow {
    fn record(&self) -> Vec<String> {
        let status = match (&self.error, self.iterations) {
            (Some(_), _) => "error",
            (None, Some(_)) => "converged",
            (None, None) => "max_iter",
        };
        vec![
            self.h.to_string(),
            self.key.px.to_string(),
            self.key.py.to_string(),
            self.key.kind.to_string(),
            self.key.overlap_cells.to_string(),
            opt_num(self.p),
            opt_num(self.q),
            opt_num(self.delta_predicted),
            opt_num(self.delta_oracle),
            self.iterations.map(|n| n.to_string()).unwrap_or_default(),
            opt_num(self.final_residual),
            status.into(),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// Runs one SWR experiment with the configured solver options.
pub fn run_one(cfg: &ExperimentConfig, h: f64, key: &RowKey, keep_field: bool) -> Result<(RowParams, SwrRun)> {
    let coeffs = cfg.coefficients()?;
    let grid = cfg.grid_for(h)?;
    let rp = resolve_params(cfg, &coeffs, &grid, key.kind, key.overlap_cells)?;
    let d = decompose(&grid, key.px, key.py, key.overlap_cells)?;
    let opts = SwrOptions {
        tol: cfg.solver.tol,
        max_iter: cfg.solver.max_iter,
        seed: cfg.solver.seed,
        keep_field,
        ..SwrOptions::default()
    };
    let run = if cfg.solver.gmres {
        swr_gmres(&coeffs, &grid, &d, &rp.params, cfg.grid.scheme, &opts)?
    } else {
        swr_solve(&coeffs, &grid, &d, &rp.params, cfg.grid.scheme, &opts)?
    };
    Ok((rp, run))
}

/// Every `(decomposition, kind, overlap, h)` combination in config order.
pub fn sweep_plan(cfg: &ExperimentConfig) -> Vec<(f64, RowKey)> {
    let mut plan = Vec::new();
    for (px, py) in cfg.decompositions() {
        for &kind in &cfg.transmission.kind {
            for &overlap_cells in &cfg.decomposition.overlap_cells {
                for &h in &cfg.grid.h {
                    plan.push((h, RowKey { px, py, kind, overlap_cells }));
                }
            }
        }
    }
    plan
}

/// Runs every combination of the config. Failures land in the error column.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let plan = sweep_plan(cfg);
    let rows = plan
        .par_iter()
        .map(|(h, key)| {
            let mut row = SweepRow {
                h: *h,
                key: key.clone(),
                p: None,
                q: None,
                delta_predicted: None,
                delta_oracle: None,
                iterations: None,
                final_residual: None,
                error: None,
            };
            match run_one(cfg, *h, key, false) {
                Ok((rp, run)) => {
                    if key.kind != TransmissionKind::Dirichlet {
                        row.p = Some(rp.params.vertical.p);
                        row.q = Some(rp.params.vertical.q);
                    }
                    row.delta_predicted = rp.delta_predicted;
                    row.delta_oracle = rp.delta_oracle;
                    row.final_residual = Some(run.log.final_residual());
                    if run.status == SwrStatus::Converged {
                        row.iterations = run.log.iterations_to_tol;
                    }
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            row
        })
        .collect();
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}

/// Least-squares slope of `log y` against `log x` and its `r^2`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 positive points, got {}", pts.len())));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((slope, r2))
}

/// Log-log slope of column `y` against column `x` of a CSV with a header row.
/// Rows with empty or non-positive entries are skipped.
pub fn fit_slope<R: std::io::Read>(csv_data: R, x_column: &str, y_column: &str) -> Result<(f64, f64)> {
    let mut rd = csv::Reader::from_reader(csv_data);
    let header = rd.headers()?.clone();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("no column named '{name}'")))
    };
    let (ix, iy) = (col(x_column)?, col(y_column)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in rd.records() {
        let rec = rec?;
        if let (Ok(x), Ok(y)) = (rec[ix].trim().parse::<f64>(), rec[iy].trim().parse::<f64>()) {
            xs.push(x);
            ys.push(y);
        }
    }
    fit_loglog(&xs, &ys)
}

/// Slope of iterations against `h` for one sweep group.
#[derive(Clone, Debug)]
pub struct SlopeFit {
    pub key: RowKey,
    pub slope: Option<f64>,
    pub r2: Option<f64>,
    pub points: usize,
    pub expected: Option<f64>,
}

/// Fits every group of sweep rows with at least three converged mesh sizes.
pub fn fit_groups(rows: &[SweepRow]) -> Vec<SlopeFit> {
    let mut keys: Vec<RowKey> = Vec::new();
    for r in rows {
        if !keys.contains(&r.key) {
            keys.push(r.key.clone());
        }
    }
    keys.into_iter()
        .map(|key| {
            let (hs, its): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter(|r| r.key == key)
                .filter_map(|r| r.iterations.map(|n| (r.h, n as f64)))
                .unzip();
            let fit = fit_loglog(&hs, &its).ok();
            SlopeFit {
                expected: expected_exponent(key.kind, key.overlap_cells).map(|s| -s),
                key,
                slope: fit.map(|f| f.0),
                r2: fit.map(|f| f.1),
                points: hs.len(),
            }
        })
        .collect()
}

pub fn write_slopes_csv<W: Write>(fits: &[SlopeFit], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(["px", "py", "kind", "overlap_cells", "points", "slope", "r2", "expected_slope"])?;
    for f in fits {
        out.write_record([
            f.key.px.to_string(),
            f.key.py.to_string(),
            f.key.kind.to_string(),
            f.key.overlap_cells.to_string(),
            f.points.to_string(),
            opt_num(f.slope),
            opt_num(f.r2),
            opt_num(f.expected),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Closed-form parameters per `(kind, overlap, h)` for vertical interfaces.
#[derive(Clone, Debug)]
pub struct ParamRow {
    pub h: f64,
    pub kind: TransmissionKind,
    pub overlap_cells: usize,
    pub result: std::result::Result<(f64, f64, f64, bool), String>,
}

pub fn params_table(cfg: &ExperimentConfig) -> Result<Vec<ParamRow>> {
    cfg.validate()?;
    let coeffs = cfg.coefficients()?;
    let mut rows = Vec::new();
    for &kind in &cfg.transmission.kind {
        for &ov in &cfg.decomposition.overlap_cells {
            for &h in &cfg.grid.h {
                let res = (|| -> Result<(f64, f64, f64, bool)> {
                    let grid = cfg.grid_for(h)?;
                    let bx = cfg.frequency_box(default_frequency_box(&grid));
                    if !check_hypothesis(&coeffs, &bx) {
                        return Err(Error::InvalidBox("Re z is not bounded away from zero on the frequency box".into()));
                    }
                    let l = ov as f64 * h;
                    match cfg.transmission.source {
                        ParamSource::Closed => {
                            let r = optimized(kind, &coeffs, &bx, h, regime(cfg, h, ov))?;
                            Ok((r.p, r.q, r.delta, r.valid))
                        }
                        ParamSource::Oracle => {
                            let cf = optimized(kind, &coeffs, &bx, h, regime(cfg, h, ov))?;
                            let r = oracle_for(&coeffs, &bx, kind, l, &cf)?;
                            Ok((r.p, r.q, r.delta, true))
                        }
                        ParamSource::Manual => {
                            let rp = resolve_params(cfg, &coeffs, &grid, kind, ov)?;
                            let t = rp.params.vertical;
                            Ok((t.p, t.q, rp.delta_predicted.unwrap_or(f64::NAN), true))
                        }
                    }
                })();
                rows.push(ParamRow { h, kind, overlap_cells: ov, result: res.map_err(|e| e.to_string()) });
            }
        }
    }
    Ok(rows)
}

pub fn write_params_csv<W: Write>(rows: &[ParamRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(["h", "kind", "overlap_cells", "p", "q", "delta", "valid", "error"])?;
    for r in rows {
        let (p, q, d, v, e) = match &r.result {
            Ok((p, q, d, v)) => (num(*p), num(*q), num(*d), v.to_string(), String::new()),
            Err(e) => (String::new(), String::new(), String::new(), String::new(), e.clone()),
        };
        out.write_record([r.h.to_string(), r.kind.to_string(), r.overlap_cells.to_string(), p, q, d, v, e])?;
    }
    out.flush()?;
    Ok(())
}

/// Closed form against oracle at one mesh size.
#[derive(Clone, Debug)]
pub struct ComparisonRow {
    pub h: f64,
    pub kind: TransmissionKind,
    pub overlap_cells: usize,
    pub closed: Option<OptimizedParams>,
    pub oracle: Option<OracleResult>,
    /// Relative spread of the top two (Robin) or three (Ventcel) maxima.
    pub spread: Option<f64>,
    pub strict_local_min: Option<bool>,
    pub error: Option<String>,
}

impl ComparisonRow {
    pub fn p_ratio(&self) -> Option<f64> {
        Some(self.oracle.as_ref()?.p / self.closed?.p)
    }

    pub fn q_ratio(&self) -> Option<f64> {
        let (o, c) = (self.oracle.as_ref()?, self.closed?);
        (c.q > 0.0).then(|| o.q / c.q)
    }

    /// `|(1 - delta_closed) - (1 - delta_oracle)| / (1 - delta_oracle)`.
    pub fn gap(&self) -> Option<f64> {
        let (o, c) = (self.oracle.as_ref()?.delta, self.closed?.delta);
        Some((o - c).abs() / (1.0 - o))
    }
}

/// Oracle optimum next to the closed form for every `(kind, overlap, h)`.
/// Fails before computing anything if a frequency box violates the
/// positivity hypothesis on `Re z`.
pub fn compare_closed_form_vs_oracle(cfg: &ExperimentConfig) -> Result<Vec<ComparisonRow>> {
    cfg.validate()?;
    let coeffs = cfg.coefficients()?;
    let mut plan = Vec::new();
    for &kind in cfg.transmission.kind.iter().filter(|k| **k != TransmissionKind::Dirichlet) {
        for &ov in &cfg.decomposition.overlap_cells {
            for &h in &cfg.grid.h {
                let grid = cfg.grid_for(h)?;
                let bx = cfg.frequency_box(default_frequency_box(&grid));
                bx.validate()?;
                if !check_hypothesis(&coeffs, &bx) {
                    return Err(Error::InvalidBox(format!(
                        "Re z is not bounded away from zero on the box of h = {h}: need x0^2 + 4 nu^2 k_min^2 > 0 or omega_min > 0"
                    )));
                }
                plan.push((h, kind, ov, bx));
            }
        }
    }
    let rows = plan
        .par_iter()
        .map(|&(h, kind, ov, bx)| {
            let mut row = ComparisonRow { h, kind, overlap_cells: ov, closed: None, oracle: None, spread: None, strict_local_min: None, error: None };
            let res = (|| -> Result<()> {
                let l = ov as f64 * h;
                let cf = optimized(kind, &coeffs, &bx, h, regime(cfg, h, ov))?;
                row.closed = Some(cf);
                let o = oracle_for(&coeffs, &bx, kind, l, &cf)?;
                let m = if kind == TransmissionKind::Robin { 2 } else { 3 };
                row.spread = Some(o.report.relative_spread(m));
                let t = if kind == TransmissionKind::Robin {
                    TransmissionParams::robin(o.p, l)?
                } else {
                    TransmissionParams::ventcel(o.p, o.q, l)?
                };
                row.strict_local_min = Some(verify_strict_local_min(&coeffs, &bx, &t, 1e-3, &Sampling::default())?);
                row.oracle = Some(o);
                Ok(())
            })();
            if let Err(e) = res {
                row.error = Some(e.to_string());
            }
            row
        })
        .collect();
    Ok(rows)
}

pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record([
        "h",
        "kind",
        "overlap_cells",
        "p_closed",
        "q_closed",
        "delta_closed",
        "p_oracle",
        "q_oracle",
        "delta_oracle",
        "spread",
        "p_ratio",
        "q_ratio",
        "gap",
        "strict_local_min",
        "error",
    ])?;
    for r in rows {
        let c = r.closed;
        let o = r.oracle.as_ref();
        out.write_record([
            r.h.to_string(),
            r.kind.to_string(),
            r.overlap_cells.to_string(),
            opt_num(c.map(|c| c.p)),
            opt_num(c.map(|c| c.q)),
            opt_num(c.map(|c| c.delta)),
            opt_num(o.map(|o| o.p)),
            opt_num(o.map(|o| o.q)),
            opt_num(o.map(|o| o.delta)),
            opt_num(r.spread),
            opt_num(r.p_ratio()),
            opt_num(r.q_ratio()),
            opt_num(r.gap()),
            r.strict_local_min.map(|b| b.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
