//! GMRES on the interface fixed-point equation `x = G(x)` of an affine map `G`.

use super::decompose::Decomposition;
use super::field::IterationLog;
use super::solver::{Engine, SwrOptions, SwrRun, SwrStatus};
use super::subdomain::InterfaceParams;
use super::Scheme;
use crate::error::{Error, Result};
use crate::problem::{Coefficients, GridSpec};
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    /// `residuals[k]` is the relative residual after `k` Krylov steps.
    pub log: IterationLog,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Unrestarted GMRES for `A x = b`, started from `x0`.
pub fn gmres<F: FnMut(&[f64], &mut [f64])>(
    mut apply: F,
    b: &[f64],
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<GmresOutcome> {
    let n = b.len();
    let mut x = x0;
    let mut ax = vec![0.0; n];
    let t0 = Instant::now();
    apply(&x, &mut ax);
    let r0: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let beta = norm(&r0);
    let mut log = IterationLog { residuals: vec![1.0], iterations_to_tol: None, seconds: vec![t0.elapsed().as_secs_f64()] };
    if beta == 0.0 {
        log.iterations_to_tol = Some(0);
        return Ok(GmresOutcome { x, log, converged: true });
    }
    let mut basis = vec![r0.iter().map(|v| v / beta).collect::<Vec<f64>>()];
    let mut hess: Vec<Vec<f64>> = Vec::new();
    let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut g = vec![beta];
    let mut converged = false;
    let mut w = vec![0.0; n];
    for k in 0..max_iter {
        let t = Instant::now();
        apply(&basis[k], &mut w);
        let mut col = vec![0.0; k + 2];
        for (j, v) in basis.iter().enumerate() {
            let hj = dot(&w, v);
            col[j] = hj;
            w.iter_mut().zip(v).for_each(|(a, b)| *a -= hj * b);
        }
        let hn = norm(&w);
        col[k + 1] = hn;
        for j in 0..k {
            let (a, b) = (col[j], col[j + 1]);
            col[j] = cs[j] * a + sn[j] * b;
            col[j + 1] = -sn[j] * a + cs[j] * b;
        }
        let r = col[k].hypot(col[k + 1]);
        if r == 0.0 {
            return Err(Error::Singular(format!("GMRES breakdown at step {}", k + 1)));
        }
        let (c, s) = (col[k] / r, col[k + 1] / r);
        cs.push(c);
        sn.push(s);
        col[k] = r;
        col[k + 1] = 0.0;
        g.push(-s * g[k]);
        g[k] *= c;
        hess.push(col);
        let rel = g[k + 1].abs() / beta;
        log.residuals.push(rel);
        log.seconds.push(t.elapsed().as_secs_f64());
        let happy = hn <= 1e-14 * beta;
        if rel <= tol || happy {
            converged = rel <= tol || happy;
            log.iterations_to_tol = Some(k + 1);
            break;
        }
        basis.push(w.iter().map(|v| v / hn).collect());
    }
    // back substitution for the Krylov coefficients
    let m = hess.len();
    let mut y = vec![0.0; m];
    for i in (0..m).rev() {
        let mut s = g[i];
        for j in i + 1..m {
            s -= hess[j][i] * y[j];
        }
        y[i] = s / hess[i][i];
    }
    for (j, yj) in y.iter().enumerate() {
        x.iter_mut().zip(&basis[j]).for_each(|(a, b)| *a += yj * b);
    }
    Ok(GmresOutcome { x, log, converged })
}

/// Accelerates the fixed point of an affine map `G` with GMRES on `(I - L) x = G(0)`,
/// where `L x = G(x) - G(0)`.
pub fn krylov_accelerate<G: FnMut(&[f64], &mut [f64])>(
    mut map: G,
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<GmresOutcome> {
    let n = x0.len();
    let zero = vec![0.0; n];
    let mut c = vec![0.0; n];
    map(&zero, &mut c);
    let mut gx = vec![0.0; n];
    let apply = |v: &[f64], out: &mut [f64]| {
        map(v, &mut gx);
        for i in 0..n {
            out[i] = v[i] - (gx[i] - c[i]);
        }
    };
    let b = c.clone();
    gmres(apply, &b, x0, tol, max_iter)
}

/// GMRES-accelerated waveform relaxation on the interface data.
///
/// Iteration counts are Krylov steps, each costing one sweep; the residual is
/// the interface residual `|x - G(x)|` relative to its initial value.
pub fn swr_gmres(
    coeffs: &Coefficients,
    grid: &GridSpec,
    decomp: &Decomposition,
    params: &InterfaceParams,
    scheme: Scheme,
    opts: &SwrOptions,
) -> Result<SwrRun> {
    let mut eng = Engine::new(coeffs, grid, decomp, params, scheme, opts)?;
    let sizes: Vec<usize> = eng.slot_counts().iter().map(|s| s * eng.levels()).collect();
    let x0: Vec<f64> = eng.random_data(opts.seed).concat();
    let mut din = eng.zero_data();
    let mut dout = eng.zero_data();
    let map = |x: &[f64], out: &mut [f64]| {
        let mut off = 0;
        for (d, &n) in din.iter_mut().zip(&sizes) {
            d.copy_from_slice(&x[off..off + n]);
            off += n;
        }
        eng.sweep(&din, &mut dout, None);
        let mut off = 0;
        for (d, &n) in dout.iter().zip(&sizes) {
            out[off..off + n].copy_from_slice(d);
            off += n;
        }
    };
    let res = krylov_accelerate(map, x0, opts.tol, opts.max_iter)?;
    let status = if res.converged {
        SwrStatus::Converged
    } else {
        SwrStatus::MaxIterExceeded { final_residual: res.log.final_residual() }
    };
    Ok(SwrRun { log: res.log, status, field: None })
}
