//! The waveform relaxation engine.
//!
//! Each subdomain marches over the whole time window with data on its
//! interface nodes. Interface data for the next iterate are the rows of the
//! receiving subdomain's step matrix evaluated on the neighbours' solutions,
//! so that a fixed point solves the monodomain scheme exactly.

use super::decompose::{decompose_cells, Decomposition, Subdomain};
use super::field::{IterationLog, SpaceTimeField};
use super::kron::KronOp;
use super::subdomain::{discretize_monodomain, subdomain_step_matrix, InterfaceParams, LocalSystem};
use super::Scheme;
use crate::error::{Error, Result};
use crate::problem::{Coefficients, GridSpec, TransmissionKind, TransmissionParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::sync::Arc;
use std::time::Instant;

pub type InitialFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type SourceFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Options of [`swr_solve`].
#[derive(Clone)]
pub struct SwrOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Keep the glued field of the last iterate (memory grows with the space-time grid).
    pub keep_field: bool,
    /// Initial condition; zero when absent.
    pub initial: Option<InitialFn>,
    /// Right-hand side; zero when absent.
    pub source: Option<SourceFn>,
}

impl Default for SwrOptions {
    fn default() -> Self {
        SwrOptions { tol: 1e-6, max_iter: 500, seed: 0, keep_field: false, initial: None, source: None }
    }
}

impl std::fmt::Debug for SwrOptions {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SwrOptions")
            .field("tol", &self.tol)
            .field("max_iter", &self.max_iter)
            .field("seed", &self.seed)
            .field("keep_field", &self.keep_field)
            .field("initial", &self.initial.is_some())
            .field("source", &self.source.is_some())
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SwrStatus {
    Converged,
    MaxIterExceeded { final_residual: f64 },
}

#[derive(Clone, Debug)]
pub struct SwrRun {
    pub log: IterationLog,
    pub status: SwrStatus,
    pub field: Option<SpaceTimeField>,
}

/// Stencil entry `(local index, coefficient at the new level, at the old level)`.
type Stencil = Vec<(usize, f64, f64)>;

enum Plan {
    /// Rows of the receiving matrix evaluated on each overlapping owner.
    Overlap { owners: Vec<(usize, Stencil)> },
    /// Abutting subdomains: transmission part on the averaged neighbour
    /// traces minus the neighbours' flux data.
    Abut { own_t: Stencil, other_t: Vec<(f64, f64, Vec<(usize, usize)>)>, lambdas: Vec<(usize, usize)> },
    /// Values copied from the owners.
    Value { owners: Vec<(usize, usize)> },
}

struct Slot {
    ext: usize,
    mass: f64,
    xy: (f64, f64),
    plan: Plan,
}

struct SubState {
    sub: Subdomain,
    sys: LocalSystem,
    slots: Vec<Slot>,
    /// Excluded-node couplings `(row, [(column, new coefficient)])`.
    couplings: Vec<(usize, Vec<(usize, f64)>)>,
    cur: Vec<f64>,
    next: Vec<f64>,
    work: Vec<f64>,
    rhs: Vec<f64>,
    tmp: Vec<f64>,
    lambda: Vec<f64>,
}

struct ActiveRow {
    mass: f64,
    xy: (f64, f64),
    stencil: Stencil,
}

struct Glue {
    sources: Vec<(usize, usize)>,
}

pub(crate) struct Engine {
    grid: GridSpec,
    scheme: Scheme,
    nt: usize,
    nxn: usize,
    nyn: usize,
    subs: Vec<SubState>,
    halo: Vec<Glue>,
    active: Vec<ActiveRow>,
    glue_all: Option<Vec<Glue>>,
    initial: Option<InitialFn>,
    source: Option<SourceFn>,
}

fn stencil_of(row_new: [[f64; 3]; 3], row_old: [[f64; 3]; 3]) -> Vec<((isize, isize), f64, f64)> {
    let mut out = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            if row_new[a][b] != 0.0 || row_old[a][b] != 0.0 {
                out.push(((a as isize - 1, b as isize - 1), row_new[a][b], row_old[a][b]));
            }
        }
    }
    out
}

fn sub_row(op: &KronOp, s: &Subdomain, g: (usize, usize)) -> [[f64; 3]; 3] {
    op.row(g.0 - s.ext_x.0, g.1 - s.ext_y.0)
}

fn shift(g: (usize, usize), d: (isize, isize)) -> (usize, usize) {
    ((g.0 as isize + d.0) as usize, (g.1 as isize + d.1) as usize)
}

fn minus(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut r = a;
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] -= b[i][j];
        }
    }
    r
}

fn par_enabled() -> bool {
    rayon::current_num_threads() > 1
}

impl Engine {
    pub(crate) fn new(
        coeffs: &Coefficients,
        grid: &GridSpec,
        decomp: &Decomposition,
        params: &InterfaceParams,
        scheme: Scheme,
        opts: &SwrOptions,
    ) -> Result<Self> {
        grid.validate()?;
        let (gx, gy) = (grid.nx()?, grid.ny()?);
        if (decomp.nx, decomp.ny) != (gx, gy) {
            return Err(Error::InvalidDecomposition("decomposition built for another grid".into()));
        }
        let nt = grid.nt()?;
        let (h, dt) = (grid.h, grid.dt);
        let kind = params.kind();
        let mut systems: Vec<LocalSystem> = decomp
            .subdomains
            .iter()
            .map(|s| subdomain_step_matrix(coeffs, h, dt, s, (gx, gy), params, scheme))
            .collect::<Result<_>>()?;
        let subs_d = &decomp.subdomains;
        let abutting = decomp.overlap_cells == 0;
        // Where three or more abutting subdomains meet, the summed neighbour
        // fluxes outweigh the local Robin term and the cross-point mode grows.
        // A diagonal shift on both sides of the exchange keeps the fixed point.
        // With a node response S up to the plain diagonal a, the mode's factor is
        // roughly (c-(n-1)S)/(c+S) for total shift c; c = (n-1)a/2 keeps it
        // inside (-1, 1) without stalling the smooth modes.
        let mut sigma: Vec<std::collections::HashMap<usize, f64>> = vec![Default::default(); subs_d.len()];
        if abutting && kind != TransmissionKind::Dirichlet {
            for (k, s) in subs_d.iter().enumerate() {
                let mut entries = Vec::new();
                for f in &s.interfaces {
                    for &g in &f.nodes {
                        let others = decomp.containing(g).filter(|&j| j != k).count();
                        let e = s.local(g);
                        if others >= 2 && !sigma[k].contains_key(&e) {
                            let a = sub_row(&systems[k].plain.new, s, g)[1][1];
                            let shift = 0.5 * others as f64 * a;
                            sigma[k].insert(e, shift);
                            entries.push((e, shift));
                        }
                    }
                }
                entries.sort_by_key(|x| x.0);
                systems[k].add_diagonal(&entries)?;
            }
        }
        let systems = systems;
        let is_unknown = |k: usize, g: (usize, usize)| {
            let s = &subs_d[k];
            s.contains(g) && systems[k].is_unknown(g.0 - s.ext_x.0, g.1 - s.ext_y.0)
        };
        let interior = |g: (usize, usize)| g.0 > 0 && g.0 < gx && g.1 > 0 && g.1 < gy;
        let xy = |g: (usize, usize)| (g.0 as f64 * h, g.1 as f64 * h);

        let mut states = Vec::with_capacity(subs_d.len());
        for (k, (s, sys)) in subs_d.iter().zip(&systems).enumerate() {
            let mut nodes: Vec<(usize, usize)> =
                s.interfaces.iter().flat_map(|f| f.nodes.iter().copied()).collect();
            nodes.sort_unstable();
            nodes.dedup();
            let mut slots = Vec::with_capacity(nodes.len());
            for &g in &nodes {
                let ext = s.local(g);
                let others: Vec<usize> = (0..subs_d.len()).filter(|&j| j != k && subs_d[j].owns(g)).collect();
                let plan = if kind == TransmissionKind::Dirichlet {
                    Plan::Value { owners: others.iter().map(|&j| (j, subs_d[j].local(g))).collect() }
                } else if abutting {
                    let mut tn = minus(sub_row(&sys.ops.new, s, g), sub_row(&sys.plain.new, s, g));
                    tn[1][1] += sigma[k].get(&ext).copied().unwrap_or(0.0);
                    let t = stencil_of(tn, minus(sub_row(&sys.ops.old, s, g), sub_row(&sys.plain.old, s, g)));
                    let own_t = t.iter().map(|&(d, cn, co)| (s.local(shift(g, d)), cn, co)).collect();
                    let other_t = t
                        .iter()
                        .map(|&(d, cn, co)| {
                            let v = shift(g, d);
                            let o = (0..subs_d.len())
                                .filter(|&j| j != k && is_unknown(j, v))
                                .map(|j| (j, subs_d[j].local(v)))
                                .collect();
                            (cn, co, o)
                        })
                        .collect();
                    let holders: Vec<usize> = (0..subs_d.len()).filter(|&j| j != k && subs_d[j].contains(g)).collect();
                    if holders.iter().any(|&j| !is_unknown(j, g)) {
                        return Err(Error::InvalidDecomposition(format!("interface node {g:?} is not an unknown of every neighbour")));
                    }
                    // lambda slots are resolved once all slot lists exist
                    Plan::Abut { own_t, other_t, lambdas: holders.into_iter().map(|j| (j, usize::MAX)).collect() }
                } else {
                    let rows = stencil_of(sub_row(&sys.ops.new, s, g), sub_row(&sys.ops.old, s, g));
                    let owners: Vec<(usize, Stencil)> = others
                        .iter()
                        .filter(|&&j| is_unknown(j, g) && rows.iter().all(|&(d, _, _)| subs_d[j].contains(shift(g, d))))
                        .map(|&j| (j, rows.iter().map(|&(d, cn, co)| (subs_d[j].local(shift(g, d)), cn, co)).collect()))
                        .collect();
                    if owners.is_empty() {
                        return Err(Error::InvalidDecomposition(format!("no neighbour covers the stencil of {g:?}")));
                    }
                    Plan::Overlap { owners }
                };
                slots.push(Slot { ext, mass: sys.ops.mass[ext], xy: xy(g), plan });
            }
            let mut couplings = Vec::new();
            if kind == TransmissionKind::Dirichlet {
                for li in sys.ux.0..=sys.ux.1 {
                    for lj in sys.uy.0..=sys.uy.1 {
                        let r = sys.ops.new.row(li, lj);
                        let mut c = Vec::new();
                        for a in 0..3 {
                            for b in 0..3 {
                                if r[a][b] != 0.0 {
                                    let (ni, nj) = (li + a - 1, lj + b - 1);
                                    let g = (s.ext_x.0 + ni, s.ext_y.0 + nj);
                                    if !sys.is_unknown(ni, nj) && interior(g) {
                                        c.push((ni * sys.ny + nj, r[a][b]));
                                    }
                                }
                            }
                        }
                        if !c.is_empty() {
                            couplings.push((li * sys.ny + lj, c));
                        }
                    }
                }
            }
            let n = sys.nx * sys.ny;
            let nsl = slots.len();
            states.push(SubState {
                sub: s.clone(),
                sys: sys.clone(),
                slots,
                couplings,
                cur: vec![0.0; n],
                next: vec![0.0; n],
                work: vec![0.0; n],
                rhs: Vec::new(),
                tmp: Vec::new(),
                lambda: vec![0.0; nsl],
            });
        }
        // resolve lambda references to slot indices of the neighbours
        let slot_index: Vec<std::collections::HashMap<usize, usize>> =
            states.iter().map(|st| st.slots.iter().enumerate().map(|(n, sl)| (sl.ext, n)).collect()).collect();
        for k in 0..states.len() {
            for sl in 0..states[k].slots.len() {
                let g = {
                    let s = &states[k].sub;
                    let e = states[k].slots[sl].ext;
                    (s.ext_x.0 + e / s.height(), s.ext_y.0 + e % s.height())
                };
                if let Plan::Abut { lambdas, .. } = &mut states[k].slots[sl].plan {
                    for (j, idx) in lambdas.iter_mut() {
                        let e = subs_d[*j].local(g);
                        *idx = *slot_index[*j]
                            .get(&e)
                            .ok_or_else(|| Error::InvalidDecomposition(format!("node {g:?} missing on a neighbour")))?;
                    }
                }
            }
        }

        // residual rows around multi-owner nodes
        let (nxn, nyn) = (gx + 1, gy + 1);
        let mono = discretize_monodomain(coeffs, grid, scheme)?;
        let count = |g: (usize, usize)| decomp.containing(g).count();
        let mut active_mask = vec![false; nxn * nyn];
        for i in 0..nxn {
            for j in 0..nyn {
                if count((i, j)) >= 2 {
                    for di in i.saturating_sub(1)..=(i + 1).min(gx) {
                        for dj in j.saturating_sub(1)..=(j + 1).min(gy) {
                            if interior((di, dj)) {
                                active_mask[di * nyn + dj] = true;
                            }
                        }
                    }
                }
            }
        }
        let mut halo_pos = vec![usize::MAX; nxn * nyn];
        let mut halo_len = 0;
        let mut active = Vec::new();
        let glue_of = |g: (usize, usize)| -> Glue {
            if !interior(g) {
                return Glue { sources: Vec::new() };
            }
            let mut src: Vec<(usize, usize)> =
                (0..subs_d.len()).filter(|&j| is_unknown(j, g)).map(|j| (j, subs_d[j].local(g))).collect();
            if src.is_empty() {
                src = decomp.containing(g).map(|j| (j, subs_d[j].local(g))).collect();
            }
            Glue { sources: src }
        };
        let mut halo = Vec::new();
        for i in 0..nxn {
            for j in 0..nyn {
                if !active_mask[i * nyn + j] {
                    continue;
                }
                let rows = stencil_of(mono.ops.new.row(i, j), mono.ops.old.row(i, j));
                let mut st = Vec::with_capacity(rows.len());
                for (d, cn, co) in rows {
                    let v = shift((i, j), d);
                    let p = &mut halo_pos[v.0 * nyn + v.1];
                    if *p == usize::MAX {
                        *p = halo_len;
                        halo_len += 1;
                        halo.push(glue_of(v));
                    }
                    st.push((*p, cn, co));
                }
                active.push(ActiveRow { mass: mono.ops.mass[i * nyn + j], xy: xy((i, j)), stencil: st });
            }
        }
        let glue_all = opts.keep_field.then(|| {
            let mut v = Vec::with_capacity(nxn * nyn);
            for i in 0..nxn {
                for j in 0..nyn {
                    v.push(glue_of((i, j)));
                }
            }
            v
        });
        Ok(Engine {
            grid: *grid,
            scheme,
            nt,
            nxn,
            nyn,
            subs: states,
            halo,
            active,
            glue_all,
            initial: opts.initial.clone(),
            source: opts.source.clone(),
        })
    }

    pub(crate) fn slot_counts(&self) -> Vec<usize> {
        self.subs.iter().map(|s| s.slots.len()).collect()
    }

    pub(crate) fn levels(&self) -> usize {
        self.nt
    }

    /// Interface data vectors, one per subdomain, laid out `[m * slots + s]` for levels 1..=N.
    pub(crate) fn zero_data(&self) -> Vec<Vec<f64>> {
        self.subs.iter().map(|s| vec![0.0; s.slots.len() * self.nt]).collect()
    }

    pub(crate) fn random_data(&self, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = self.zero_data();
        for v in d.iter_mut() {
            for x in v.iter_mut() {
                *x = rng.random_range(-1.0..=1.0);
            }
        }
        d
    }

    fn source_time(&self, m: usize) -> f64 {
        match self.scheme {
            Scheme::Implicit => (m + 1) as f64 * self.grid.dt,
            Scheme::Explicit => m as f64 * self.grid.dt,
        }
    }

    fn glue(&self, g: &Glue, next: bool) -> f64 {
        if g.sources.is_empty() {
            return 0.0;
        }
        let s: f64 = g
            .sources
            .iter()
            .map(|&(k, e)| if next { self.subs[k].next[e] } else { self.subs[k].cur[e] })
            .sum();
        s / g.sources.len() as f64
    }

    /// One sweep over the time window. Returns the unnormalized residual norm
    /// and fills `field` with the glued iterate when requested.
    pub(crate) fn sweep(&mut self, data_in: &[Vec<f64>], data_out: &mut [Vec<f64>], mut field: Option<&mut SpaceTimeField>) -> f64 {
        let h = self.grid.h;
        let init = self.initial.clone();
        for st in self.subs.iter_mut() {
            let hgt = st.sub.height();
            for (e, v) in st.cur.iter_mut().enumerate() {
                let g = (st.sub.ext_x.0 + e / hgt, st.sub.ext_y.0 + e % hgt);
                let inside = g.0 > 0 && g.0 < self.nxn - 1 && g.1 > 0 && g.1 < self.nyn - 1;
                *v = match (&init, inside) {
                    (Some(f), true) => f(g.0 as f64 * h, g.1 as f64 * h),
                    _ => 0.0,
                };
            }
        }
        if let Some(f) = field.as_deref_mut() {
            let lvl = f.level_mut(0);
            for i in 0..self.nxn {
                for j in 0..self.nyn {
                    let inside = i > 0 && i < self.nxn - 1 && j > 0 && j < self.nyn - 1;
                    lvl[i * self.nyn + j] = match (&init, inside) {
                        (Some(u0), true) => u0(i as f64 * h, j as f64 * h),
                        _ => 0.0,
                    };
                }
            }
        }
        let mut g_cur: Vec<f64> = self.halo.iter().map(|g| self.glue(g, false)).collect();
        let mut g_next = vec![0.0; g_cur.len()];
        let mut res2 = 0.0;
        let par = par_enabled();
        for m in 0..self.nt {
            let ts = self.source_time(m);
            let source = self.source.clone();
            let step = |(k, st): (usize, &mut SubState)| {
                let ns = st.slots.len();
                local_step(st, &data_in[k][m * ns..(m + 1) * ns], source.as_deref(), ts, h);
            };
            if par {
                self.subs.par_iter_mut().enumerate().for_each(step);
            } else {
                self.subs.iter_mut().enumerate().for_each(step);
            }
            let lam = |(k, st): (usize, &mut SubState)| {
                let ns = st.slots.len();
                let d = &data_in[k][m * ns..(m + 1) * ns];
                for (n, sl) in st.slots.iter().enumerate() {
                    if let Plan::Abut { own_t, .. } = &sl.plan {
                        let t: f64 = own_t.iter().map(|&(e, cn, co)| cn * st.next[e] - co * st.cur[e]).sum();
                        st.lambda[n] = d[n] - t;
                    }
                }
            };
            if par {
                self.subs.par_iter_mut().enumerate().for_each(lam);
            } else {
                self.subs.iter_mut().enumerate().for_each(lam);
            }
            {
                let subs = &self.subs;
                let exchange = |(k, out): (usize, &mut Vec<f64>)| {
                    let st = &subs[k];
                    let ns = st.slots.len();
                    let out = &mut out[m * ns..(m + 1) * ns];
                    for (n, sl) in st.slots.iter().enumerate() {
                        out[n] = slot_data(subs, sl, source.as_deref(), ts);
                    }
                };
                if par {
                    data_out.par_iter_mut().enumerate().for_each(exchange);
                } else {
                    data_out.iter_mut().enumerate().for_each(exchange);
                }
            }
            for (v, g) in g_next.iter_mut().zip(&self.halo) {
                *v = self.glue(g, true);
            }
            for row in &self.active {
                let mut r: f64 = row.stencil.iter().map(|&(p, cn, co)| cn * g_next[p] - co * g_cur[p]).sum();
                if let Some(f) = &source {
                    r -= row.mass * f(row.xy.0, row.xy.1, ts);
                }
                res2 += r * r;
            }
            if let (Some(f), Some(all)) = (field.as_deref_mut(), &self.glue_all) {
                let lvl = f.level_mut(m + 1);
                for (v, g) in lvl.iter_mut().zip(all) {
                    *v = self.glue(g, true);
                }
            }
            std::mem::swap(&mut g_cur, &mut g_next);
            for st in self.subs.iter_mut() {
                std::mem::swap(&mut st.cur, &mut st.next);
            }
        }
        res2.sqrt()
    }

    /// Interface data reproducing `field` exactly in every subdomain.
    #[cfg(test)]
    pub(crate) fn exact_data(&self, field: &SpaceTimeField) -> Vec<Vec<f64>> {
        let mut out = self.zero_data();
        for (k, st) in self.subs.iter().enumerate() {
            let (s, sys) = (&st.sub, &st.sys);
            let ns = st.slots.len();
            for m in 0..self.nt {
                let ts = self.source_time(m);
                for (n, sl) in st.slots.iter().enumerate() {
                    let g = (s.ext_x.0 + sl.ext / s.height(), s.ext_y.0 + sl.ext % s.height());
                    out[k][m * ns + n] = if matches!(sl.plan, Plan::Value { .. }) {
                        field.at(m + 1, g.0, g.1)
                    } else {
                        let mut d = sys.diagonal_shift(sl.ext) * field.at(m + 1, g.0, g.1);
                        for (dd, cn, co) in stencil_of(sub_row(&sys.ops.new, s, g), sub_row(&sys.ops.old, s, g)) {
                            let v = shift(g, dd);
                            d += cn * field.at(m + 1, v.0, v.1) - co * field.at(m, v.0, v.1);
                        }
                        if let Some(f) = &self.source {
                            d -= sl.mass * f(sl.xy.0, sl.xy.1, ts);
                        }
                        d
                    };
                }
            }
        }
        out
    }

    pub(crate) fn empty_field(&self) -> SpaceTimeField {
        SpaceTimeField::zeros(self.nxn, self.nyn, self.nt + 1, self.grid.h, self.grid.dt)
    }
}

fn local_step(st: &mut SubState, data: &[f64], source: Option<&(dyn Fn(f64, f64, f64) -> f64 + Send + Sync)>, ts: f64, h: f64) {
    let sys = &st.sys;
    let s = &st.sub;
    let ny = sys.ny;
    st.next.iter_mut().for_each(|v| *v = 0.0);
    let dirichlet = !st.couplings.is_empty() || st.slots.iter().any(|sl| matches!(sl.plan, Plan::Value { .. }));
    if dirichlet {
        for (sl, &d) in st.slots.iter().zip(data) {
            st.next[sl.ext] = d;
        }
    }
    sys.ops.old.apply(&st.cur, &mut st.work);
    if let Some(f) = source {
        for li in sys.ux.0..=sys.ux.1 {
            for lj in sys.uy.0..=sys.uy.1 {
                let e = li * ny + lj;
                let (x, y) = ((s.ext_x.0 + li) as f64 * h, (s.ext_y.0 + lj) as f64 * h);
                st.work[e] += sys.ops.mass[e] * f(x, y, ts);
            }
        }
    }
    if !dirichlet {
        for (sl, &d) in st.slots.iter().zip(data) {
            st.work[sl.ext] += d;
        }
    }
    for (row, cols) in &st.couplings {
        let c: f64 = cols.iter().map(|&(e, v)| v * st.next[e]).sum();
        st.work[*row] -= c;
    }
    let (wx, wy) = (sys.ux.1 - sys.ux.0 + 1, sys.uy.1 - sys.uy.0 + 1);
    st.rhs.resize(wx * wy, 0.0);
    for a in 0..wx {
        let src = (sys.ux.0 + a) * ny + sys.uy.0;
        st.rhs[a * wy..(a + 1) * wy].copy_from_slice(&st.work[src..src + wy]);
    }
    sys.solve(&mut st.rhs, &mut st.tmp);
    for a in 0..wx {
        let dst = (sys.ux.0 + a) * ny + sys.uy.0;
        st.next[dst..dst + wy].copy_from_slice(&st.rhs[a * wy..(a + 1) * wy]);
    }
}

fn slot_data(subs: &[SubState], sl: &Slot, source: Option<&(dyn Fn(f64, f64, f64) -> f64 + Send + Sync)>, ts: f64) -> f64 {
    match &sl.plan {
        Plan::Value { owners } => owners.iter().map(|&(j, e)| subs[j].next[e]).sum::<f64>() / owners.len() as f64,
        Plan::Overlap { owners } => {
            let mut acc = 0.0;
            for (j, st) in owners {
                let o = &subs[*j];
                acc += st.iter().map(|&(e, cn, co)| cn * o.next[e] - co * o.cur[e]).sum::<f64>();
            }
            let mut d = acc / owners.len() as f64;
            if let Some(f) = source {
                d -= sl.mass * f(sl.xy.0, sl.xy.1, ts);
            }
            d
        }
        Plan::Abut { other_t, lambdas, .. } => {
            let mut d = 0.0;
            for (cn, co, o) in other_t {
                if o.is_empty() {
                    continue;
                }
                let inv = 1.0 / o.len() as f64;
                let un: f64 = o.iter().map(|&(j, e)| subs[j].next[e]).sum::<f64>() * inv;
                let uo: f64 = o.iter().map(|&(j, e)| subs[j].cur[e]).sum::<f64>() * inv;
                d += cn * un - co * uo;
            }
            for &(j, n) in lambdas {
                d -= subs[j].lambda[n];
            }
            d
        }
    }
}

/// Runs the waveform relaxation from random interface data until the relative
/// monodomain residual of the glued iterate reaches `opts.tol`.
pub fn swr_solve(
    coeffs: &Coefficients,
    grid: &GridSpec,
    decomp: &Decomposition,
    params: &InterfaceParams,
    scheme: Scheme,
    opts: &SwrOptions,
) -> Result<SwrRun> {
    if opts.max_iter == 0 || !(opts.tol > 0.0) {
        return Err(Error::Config("max_iter must be positive and tol > 0".into()));
    }
    let mut eng = Engine::new(coeffs, grid, decomp, params, scheme, opts)?;
    let mut data_in = eng.random_data(opts.seed);
    let mut data_out = eng.zero_data();
    let mut log = IterationLog::default();
    let mut field = opts.keep_field.then(|| eng.empty_field());
    let mut first = None;
    for it in 1..=opts.max_iter {
        let t0 = Instant::now();
        let r = eng.sweep(&data_in, &mut data_out, field.as_mut());
        std::mem::swap(&mut data_in, &mut data_out);
        let r0 = *first.get_or_insert(r);
        let rel = if r0 > 0.0 { r / r0 } else { 0.0 };
        log.residuals.push(rel);
        log.seconds.push(t0.elapsed().as_secs_f64());
        if r0 == 0.0 || (it > 1 && rel <= opts.tol) {
            log.iterations_to_tol = Some(it);
            return Ok(SwrRun { log, status: SwrStatus::Converged, field });
        }
    }
    let final_residual = log.final_residual();
    Ok(SwrRun { log, status: SwrStatus::MaxIterExceeded { final_residual }, field })
}

/// Direct time marching on the undecomposed grid.
pub fn monodomain_reference(
    coeffs: &Coefficients,
    grid: &GridSpec,
    scheme: Scheme,
    initial: Option<InitialFn>,
    source: Option<SourceFn>,
) -> Result<SpaceTimeField> {
    let decomp = decompose_cells(grid.nx()?, grid.ny()?, 1, 1, 0)?;
    let params = InterfaceParams::uniform(TransmissionParams::dirichlet(0.0)?);
    let opts = SwrOptions { keep_field: true, initial, source, ..SwrOptions::default() };
    let mut eng = Engine::new(coeffs, grid, &decomp, &params, scheme, &opts)?;
    let data = eng.zero_data();
    let mut out = eng.zero_data();
    let mut field = eng.empty_field();
    eng.sweep(&data, &mut out, Some(&mut field));
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::TimeRelation;
    use crate::swr::decompose;

    fn setup(h: f64) -> (Coefficients, GridSpec, SwrOptions) {
        let c = Coefficients::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let g = GridSpec::new(h, TimeRelation::Linear(0.25), 1.2, 1.2, 0.25).unwrap();
        let opts = SwrOptions {
            keep_field: true,
            initial: Some(Arc::new(|x: f64, y: f64| (x * (1.2 - x) * y * (1.2 - y)).sqrt())),
            source: Some(Arc::new(|x: f64, y: f64, t: f64| (3.0 * x + t).sin() * (1.0 + y))),
            ..SwrOptions::default()
        };
        (c, g, opts)
    }

    fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> (f64, f64) {
        let d = a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let s = a.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
        (d, s)
    }

    #[test]
    fn exact_traces_are_a_fixed_point() {
        let (c, g, opts) = setup(0.1);
        let mono = monodomain_reference(&c, &g, Scheme::Implicit, opts.initial.clone(), opts.source.clone()).unwrap();
        let robin = InterfaceParams::uniform(TransmissionParams::robin(7.0, 0.0).unwrap());
        let ventcel = InterfaceParams::uniform(TransmissionParams::ventcel(3.0, 0.2, 0.0).unwrap());
        let dir = InterfaceParams::uniform(TransmissionParams::dirichlet(0.0).unwrap());
        for (px, py, ov, params) in [(2, 1, 0, robin), (2, 1, 2, robin), (2, 2, 0, ventcel), (3, 2, 1, ventcel), (2, 2, 2, dir)] {
            let d = decompose(&g, px, py, ov).unwrap();
            let mut eng = Engine::new(&c, &g, &d, &params, Scheme::Implicit, &opts).unwrap();
            let exact = eng.exact_data(&mono);
            let mut out = eng.zero_data();
            let mut field = eng.empty_field();
            let r = eng.sweep(&exact, &mut out, Some(&mut field));
            let (diff, scale) = max_diff(&out, &exact);
            assert!(diff <= 1e-10 * scale.max(1.0), "{px}x{py} ov {ov}: data moved by {diff}");
            assert!(field.relative_l2_diff(&mono).unwrap() < 1e-10, "{px}x{py} ov {ov}");
            assert!(r < 1e-9, "{px}x{py} ov {ov}: residual {r}");
        }
    }

    #[test]
    fn frozen_data_gives_identical_sweeps() {
        let (c, g, opts) = setup(0.1);
        let d = decompose(&g, 2, 2, 1).unwrap();
        let params = InterfaceParams::uniform(TransmissionParams::robin(5.0, 0.1).unwrap());
        let mut eng = Engine::new(&c, &g, &d, &params, Scheme::Implicit, &opts).unwrap();
        let data = eng.random_data(3);
        let (mut a, mut b) = (eng.zero_data(), eng.zero_data());
        let ra = eng.sweep(&data, &mut a, None);
        let rb = eng.sweep(&data, &mut b, None);
        assert_eq!(a, b);
        assert_eq!(ra.to_bits(), rb.to_bits());
    }

    #[test]
    fn changing_one_trace_only_moves_its_owner() {
        // with two abutting strips, data of the west strip reaches the east
        // strip only through the exchange, never inside the same sweep
        let (c, g, mut opts) = setup(0.1);
        opts.keep_field = false;
        let d = decompose(&g, 2, 1, 0).unwrap();
        let params = InterfaceParams::uniform(TransmissionParams::robin(5.0, 0.0).unwrap());
        let mut eng = Engine::new(&c, &g, &d, &params, Scheme::Implicit, &opts).unwrap();
        let data = eng.random_data(1);
        let mut pert = data.clone();
        pert[0][0] += 1.0;
        let mut out = eng.zero_data();
        eng.sweep(&data, &mut out, None);
        let east_before = eng.subs[1].cur.clone();
        eng.sweep(&pert, &mut out, None);
        assert_eq!(east_before, eng.subs[1].cur);
    }
}
