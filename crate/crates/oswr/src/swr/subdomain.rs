//! Local space discretization on one (sub)domain and its per-step matrices.
//!
//! Interior rows are the 5-point central scheme. An interface edge gets a
//! half cell with lumped mass and the transmission operator enters as a
//! natural boundary term, so a subdomain system stays a sum of Kronecker
//! products of tridiagonal factors.

use super::decompose::{Edge, Subdomain};
use super::kron::{KronOp, StepSolver};
use super::tridiag::Tridiag;
use super::Scheme;
use crate::error::{Error, Result};
use crate::problem::{Coefficients, TransmissionKind, TransmissionParams};
use nalgebra::{DMatrix, DVector};

/// How an end of an axis range is closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EndKind {
    /// Outer homogeneous Dirichlet boundary.
    Boundary,
    /// Interface where the value is imposed from the neighbour.
    Dirichlet,
    /// Interface carrying a Robin or Ventcel condition.
    Transmission,
}

impl EndKind {
    fn excluded(self) -> bool {
        self != EndKind::Transmission
    }
}

/// One-dimensional factors along an axis of `m` nodes.
#[derive(Clone, Debug)]
pub struct AxisOps {
    pub mass: Tridiag,
    pub stiff: Tridiag,
    /// Indicator of transmission ends.
    pub edge: Tridiag,
    pub lo: EndKind,
    pub hi: EndKind,
}

impl AxisOps {
    pub fn new(nu: f64, adv: f64, h: f64, m: usize, lo: EndKind, hi: EndKind) -> Self {
        let mut stiff = Tridiag::zeros(m);
        let mut mass = vec![h; m];
        let mut edge = vec![0.0; m];
        let (d, half) = (nu / h, 0.5 * adv);
        for r in 0..m {
            if r > 0 {
                stiff.diag[r] += d + half;
                stiff.lower[r] = -d - half;
            }
            if r + 1 < m {
                stiff.diag[r] += d - half;
                stiff.upper[r] = -d + half;
            }
        }
        if lo == EndKind::Transmission {
            stiff.diag[0] += half;
            mass[0] = 0.5 * h;
            edge[0] = 1.0;
        }
        if hi == EndKind::Transmission {
            stiff.diag[m - 1] -= half;
            mass[m - 1] = 0.5 * h;
            edge[m - 1] = 1.0;
        }
        AxisOps { mass: Tridiag::diagonal(mass), stiff, edge: Tridiag::diagonal(edge), lo, hi }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Local indices of the unknowns (inclusive).
    pub fn unknowns(&self) -> (usize, usize) {
        let lo = usize::from(self.lo.excluded());
        let hi = self.len() - 1 - usize::from(self.hi.excluded());
        (lo, hi)
    }
}

/// Matrices of one time step on an extended grid: `new u^{m+1} = old u^m + f + g`.
#[derive(Clone, Debug)]
pub struct StepOps {
    pub new: KronOp,
    pub old: KronOp,
    /// Lumped mass of the PDE part, used for the source.
    pub mass: Vec<f64>,
}

/// Assembles the step matrices. `pv` and `ph` are the `(p, q)` of edges
/// normal to x and to y.
pub fn step_ops(
    coeffs: &Coefficients,
    dt: f64,
    scheme: Scheme,
    ax: &AxisOps,
    ay: &AxisOps,
    pv: (f64, f64),
    ph: (f64, f64),
) -> StepOps {
    let xa = ax.stiff.axpy(0.5 * pv.0, &ax.edge);
    let xm = ax.mass.axpy(0.5 * pv.1, &ax.edge);
    let ya = ay.stiff.axpy(0.5 * ph.0, &ay.edge);
    let ym = ay.mass.axpy(0.5 * ph.1, &ay.edge);
    let (nx, ny) = (ax.len(), ay.len());
    let react = ax.mass.scaled(coeffs.b);
    let (new, old) = match scheme {
        Scheme::Implicit => (
            KronOp::new(
                nx,
                ny,
                vec![(xa.axpy(1.0 / dt, &xm), ym.clone()), (xm.clone(), ya), (react, ay.mass.clone())],
            ),
            KronOp::new(nx, ny, vec![(xm.scaled(1.0 / dt), ym)]),
        ),
        Scheme::Explicit => (
            KronOp::new(nx, ny, vec![(xm.scaled(1.0 / dt), ym.clone())]),
            KronOp::new(
                nx,
                ny,
                vec![(xm.scaled(1.0 / dt).axpy(-1.0, &xa), ym), (xm.scaled(-1.0), ya), (react.scaled(-1.0), ay.mass.clone())],
            ),
        ),
    };
    let mut mass = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            mass[i * ny + j] = ax.mass.diag[i] * ay.mass.diag[j];
        }
    }
    StepOps { new, old, mass }
}

/// Checks the explicit stability bound `dt <= h^2 / (4 nu)`.
pub fn check_explicit(coeffs: &Coefficients, h: f64, dt: f64) -> Result<()> {
    let limit = h * h / (4.0 * coeffs.nu);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::UnstableExplicit { dt, limit });
    }
    Ok(())
}

/// Factored per-step system of one subdomain.
#[derive(Clone, Debug)]
pub struct LocalSystem {
    pub ops: StepOps,
    /// Same matrices with the transmission terms removed.
    pub plain: StepOps,
    pub nx: usize,
    pub ny: usize,
    /// Unknown block as inclusive local ranges.
    pub ux: (usize, usize),
    pub uy: (usize, usize),
    pub solver: StepSolver,
    /// Diagonal additions to the new-level matrix at a few nodes.
    pub extra: Option<LowRank>,
}

/// Woodbury correction for `A + E S E^T` with `E` selecting a few unknowns.
#[derive(Clone, Debug)]
pub struct LowRank {
    /// `(local extended index, sigma)`.
    pub entries: Vec<(usize, f64)>,
    idx: Vec<usize>,
    cols: Vec<Vec<f64>>,
    cap_inv: DMatrix<f64>,
}

impl LocalSystem {
    /// Solves with the unknown-block right-hand side `rhs`.
    pub fn solve(&self, rhs: &mut [f64], tmp: &mut Vec<f64>) {
        self.solver.solve(rhs, tmp);
        if let Some(lr) = &self.extra {
            let y = DVector::from_iterator(lr.idx.len(), lr.idx.iter().map(|&k| rhs[k]));
            let w = &lr.cap_inv * y;
            for (c, wc) in lr.cols.iter().zip(w.iter()) {
                rhs.iter_mut().zip(c).for_each(|(r, v)| *r -= wc * v);
            }
        }
    }

    fn block_index(&self, ext: usize) -> usize {
        let (li, lj) = (ext / self.ny, ext % self.ny);
        (li - self.ux.0) * (self.uy.1 - self.uy.0 + 1) + (lj - self.uy.0)
    }

    /// Adds `sigma` to the new-level diagonal at the given unknowns.
    pub fn add_diagonal(&mut self, entries: &[(usize, f64)]) -> Result<()> {
        if entries.is_empty() {
            return Ok(());
        }
        let n = (self.ux.1 - self.ux.0 + 1) * (self.uy.1 - self.uy.0 + 1);
        let idx: Vec<usize> = entries.iter().map(|&(e, _)| self.block_index(e)).collect();
        let mut tmp = Vec::new();
        let cols: Vec<Vec<f64>> = idx
            .iter()
            .map(|&k| {
                let mut c = vec![0.0; n];
                c[k] = 1.0;
                self.solver.solve(&mut c, &mut tmp);
                c
            })
            .collect();
        let r = idx.len();
        let cap = DMatrix::from_fn(r, r, |a, b| cols[b][idx[a]] + if a == b { 1.0 / entries[a].1 } else { 0.0 });
        let cap_inv = cap.try_inverse().ok_or_else(|| Error::Singular("cross-point correction".into()))?;
        self.extra = Some(LowRank { entries: entries.to_vec(), idx, cols, cap_inv });
        Ok(())
    }

    /// Diagonal shift added by [`LocalSystem::add_diagonal`] at extended index `e`.
    pub fn diagonal_shift(&self, e: usize) -> f64 {
        self.extra
            .as_ref()
            .and_then(|x| x.entries.iter().find(|&&(k, _)| k == e).map(|&(_, s)| s))
            .unwrap_or(0.0)
    }

    pub fn is_unknown(&self, li: usize, lj: usize) -> bool {
        (self.ux.0..=self.ux.1).contains(&li) && (self.uy.0..=self.uy.1).contains(&lj)
    }
}

/// Transmission parameters for vertical and horizontal interfaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterfaceParams {
    pub vertical: TransmissionParams,
    pub horizontal: TransmissionParams,
}

impl InterfaceParams {
    pub fn uniform(p: TransmissionParams) -> Self {
        InterfaceParams { vertical: p, horizontal: p }
    }

    pub fn kind(&self) -> TransmissionKind {
        self.vertical.kind
    }

    pub fn validate(&self) -> Result<()> {
        self.vertical.validate()?;
        self.horizontal.validate()?;
        for t in [&self.vertical, &self.horizontal] {
            if t.kind != TransmissionKind::Dirichlet && !(t.p > 0.0) {
                return Err(Error::InvalidParams(format!("{} parameter p must be positive, got {}", t.kind, t.p)));
            }
        }
        if self.vertical.kind != self.horizontal.kind {
            return Err(Error::InvalidParams("vertical and horizontal interfaces must use the same kind".into()));
        }
        Ok(())
    }
}

fn end_kind(sub: &Subdomain, edge: Edge, nx: usize, ny: usize, kind: TransmissionKind) -> EndKind {
    if sub.is_outer(edge, nx, ny) {
        EndKind::Boundary
    } else if kind == TransmissionKind::Dirichlet {
        EndKind::Dirichlet
    } else {
        EndKind::Transmission
    }
}

/// Builds and factors the step system of `sub` inside a grid of `nx * ny` cells.
pub fn subdomain_step_matrix(
    coeffs: &Coefficients,
    h: f64,
    dt: f64,
    sub: &Subdomain,
    grid_cells: (usize, usize),
    params: &InterfaceParams,
    scheme: Scheme,
) -> Result<LocalSystem> {
    coeffs.validate()?;
    params.validate()?;
    if scheme == Scheme::Explicit {
        check_explicit(coeffs, h, dt)?;
    }
    let (gx, gy) = grid_cells;
    let kind = params.kind();
    let ek = |e| end_kind(sub, e, gx, gy, kind);
    let ax = AxisOps::new(coeffs.nu, coeffs.a, h, sub.width(), ek(Edge::West), ek(Edge::East));
    let ay = AxisOps::new(coeffs.nu, coeffs.c, h, sub.height(), ek(Edge::South), ek(Edge::North));
    let pv = (params.vertical.p, params.vertical.q);
    let ph = (params.horizontal.p, params.horizontal.q);
    let (pv, ph) = if kind == TransmissionKind::Dirichlet { ((0.0, 0.0), (0.0, 0.0)) } else { (pv, ph) };
    let ops = step_ops(coeffs, dt, scheme, &ax, &ay, pv, ph);
    let plain = step_ops(coeffs, dt, scheme, &ax, &ay, (0.0, 0.0), (0.0, 0.0));
    let (ux, uy) = (ax.unknowns(), ay.unknowns());
    if ux.0 > ux.1 || uy.0 > uy.1 {
        return Err(Error::InvalidDecomposition("subdomain has no unknowns".into()));
    }
    let solver = StepSolver::new(&ops.new.restrict(ux, uy))?;
    Ok(LocalSystem { ops, plain, nx: ax.len(), ny: ay.len(), ux, uy, solver, extra: None })
}

/// Per-step operator on the whole rectangle (all nodes, boundary rows included).
#[derive(Clone, Debug)]
pub struct MonodomainOperator {
    pub ops: StepOps,
    pub h: f64,
    pub dt: f64,
    pub scheme: Scheme,
    /// Nodes per axis (cells + 1).
    pub nx: usize,
    pub ny: usize,
}

impl MonodomainOperator {
    /// Stencil of the spatial operator `a.grad u - nu lap u + b u` at an
    /// interior node, divided by the lumped mass: `[di][dj]` multiplies
    /// node (i + di - 1, j + dj - 1).
    pub fn ah_row(&self, i: usize, j: usize) -> [[f64; 3]; 3] {
        let m = self.ops.mass[i * self.ny + j];
        let rn = self.ops.new.row(i, j);
        let ro = self.ops.old.row(i, j);
        let mut r = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                // both schemes satisfy new - old = K
                r[a][b] = (rn[a][b] - ro[a][b]) / m;
            }
        }
        r
    }
}

/// Discretizes the PDE on the full rectangle with homogeneous Dirichlet boundary.
pub fn discretize_monodomain(
    coeffs: &Coefficients,
    grid: &crate::problem::GridSpec,
    scheme: Scheme,
) -> Result<MonodomainOperator> {
    coeffs.validate()?;
    grid.validate()?;
    if scheme == Scheme::Explicit {
        check_explicit(coeffs, grid.h, grid.dt)?;
    }
    let (nx, ny) = (grid.nx()? + 1, grid.ny()? + 1);
    let ax = AxisOps::new(coeffs.nu, coeffs.a, grid.h, nx, EndKind::Boundary, EndKind::Boundary);
    let ay = AxisOps::new(coeffs.nu, coeffs.c, grid.h, ny, EndKind::Boundary, EndKind::Boundary);
    let ops = step_ops(coeffs, grid.dt, scheme, &ax, &ay, (0.0, 0.0), (0.0, 0.0));
    Ok(MonodomainOperator { ops, h: grid.h, dt: grid.dt, scheme, nx, ny })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{GridSpec, TimeRelation};

    #[test]
    fn interior_row_is_five_point_laplacian() {
        let c = Coefficients::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let h = 0.1;
        let g = GridSpec::new(h, TimeRelation::Linear(0.25), 1.0, 1.0, 1.0).unwrap();
        let op = discretize_monodomain(&c, &g, Scheme::Implicit).unwrap();
        let r = op.ah_row(4, 5);
        let expect = [[0.0, -1.0, 0.0], [-1.0, 4.0, -1.0], [0.0, -1.0, 0.0]];
        for a in 0..3 {
            for b in 0..3 {
                assert!((r[a][b] - expect[a][b] / (h * h)).abs() < 1e-9, "{a} {b}: {}", r[a][b]);
            }
        }
    }

    #[test]
    fn advection_is_central() {
        let c = Coefficients::new(0.5, 2.0, -1.0, 0.3).unwrap();
        let h = 0.1;
        let g = GridSpec::new(h, TimeRelation::Linear(0.25), 1.0, 1.0, 1.0).unwrap();
        let r = discretize_monodomain(&c, &g, Scheme::Implicit).unwrap().ah_row(3, 3);
        let nu = 0.5 / (h * h);
        assert!((r[1][1] - (4.0 * nu + 0.3)).abs() < 1e-9);
        assert!((r[0][1] - (-nu - 2.0 / (2.0 * h))).abs() < 1e-9);
        assert!((r[2][1] - (-nu + 2.0 / (2.0 * h))).abs() < 1e-9);
        assert!((r[1][0] - (-nu + 1.0 / (2.0 * h))).abs() < 1e-9);
        assert!((r[1][2] - (-nu - 1.0 / (2.0 * h))).abs() < 1e-9);
    }

    #[test]
    fn explicit_bound_is_enforced() {
        let c = Coefficients::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let g = GridSpec::new(0.1, TimeRelation::Linear(0.25), 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(discretize_monodomain(&c, &g, Scheme::Explicit), Err(Error::UnstableExplicit { .. })));
        let g = GridSpec::new(0.1, TimeRelation::Quadratic(0.25), 1.0, 1.0, 1.0).unwrap();
        assert!(discretize_monodomain(&c, &g, Scheme::Explicit).is_ok());
    }

    #[test]
    fn transmission_end_row_is_a_half_cell() {
        let a = AxisOps::new(1.0, 0.8, 0.1, 5, EndKind::Transmission, EndKind::Boundary);
        assert_eq!(a.mass.diag[0], 0.05);
        // flux form: nu/h at a natural end, the skew part cancels the advection
        assert!((a.stiff.diag[0] - 10.0).abs() < 1e-12);
        assert_eq!(a.unknowns(), (0, 3));
    }
}
