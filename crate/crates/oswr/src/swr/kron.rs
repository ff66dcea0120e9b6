//! Sums of Kronecker products of tridiagonal factors and their direct solvers.

use super::tridiag::{ThomasLu, Tridiag};
use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// `sum_t X_t (x) Y_t` acting on an `nx * ny` grid stored as `i * ny + j`.
#[derive(Clone, Debug)]
pub struct KronOp {
    pub nx: usize,
    pub ny: usize,
    pub terms: Vec<(Tridiag, Tridiag)>,
}

impl KronOp {
    pub fn new(nx: usize, ny: usize, terms: Vec<(Tridiag, Tridiag)>) -> Self {
        let terms = merge_terms(terms.into_iter().filter(|(x, y)| !is_zero(x) && !is_zero(y)).collect());
        KronOp { nx, ny, terms }
    }

    /// Stencil of row (i, j): entry `[di][dj]` multiplies node (i + di - 1, j + dj - 1).
    pub fn row(&self, i: usize, j: usize) -> [[f64; 3]; 3] {
        let mut r = [[0.0; 3]; 3];
        for (x, y) in &self.terms {
            let xs = [if i > 0 { x.lower[i] } else { 0.0 }, x.diag[i], if i + 1 < self.nx { x.upper[i] } else { 0.0 }];
            let ys = [if j > 0 { y.lower[j] } else { 0.0 }, y.diag[j], if j + 1 < self.ny { y.upper[j] } else { 0.0 }];
            for a in 0..3 {
                for b in 0..3 {
                    r[a][b] += xs[a] * ys[b];
                }
            }
        }
        r
    }

    /// Row (i, j) applied to a full grid vector.
    pub fn row_dot(&self, i: usize, j: usize, u: &[f64]) -> f64 {
        let r = self.row(i, j);
        let mut s = 0.0;
        for (a, ra) in r.iter().enumerate() {
            for (b, &c) in ra.iter().enumerate() {
                if c != 0.0 {
                    s += c * u[(i + a - 1) * self.ny + j + b - 1];
                }
            }
        }
        s
    }

    /// `out = A u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut tmp = vec![0.0; nx * ny];
        for (x, y) in &self.terms {
            for i in 0..nx {
                let src = &u[i * ny..(i + 1) * ny];
                let dst = &mut tmp[i * ny..(i + 1) * ny];
                for j in 0..ny {
                    let mut s = y.diag[j] * src[j];
                    if j > 0 {
                        s += y.lower[j] * src[j - 1];
                    }
                    if j + 1 < ny {
                        s += y.upper[j] * src[j + 1];
                    }
                    dst[j] = s;
                }
            }
            for i in 0..nx {
                let o = &mut out[i * ny..(i + 1) * ny];
                let d = x.diag[i];
                for (ov, tv) in o.iter_mut().zip(&tmp[i * ny..(i + 1) * ny]) {
                    *ov += d * tv;
                }
                if i > 0 && x.lower[i] != 0.0 {
                    let l = x.lower[i];
                    for (ov, tv) in o.iter_mut().zip(&tmp[(i - 1) * ny..i * ny]) {
                        *ov += l * tv;
                    }
                }
                if i + 1 < nx && x.upper[i] != 0.0 {
                    let up = x.upper[i];
                    for (ov, tv) in o.iter_mut().zip(&tmp[(i + 1) * ny..(i + 2) * ny]) {
                        *ov += up * tv;
                    }
                }
            }
        }
    }

    /// Principal block on node ranges `xr` by `yr` (inclusive).
    pub fn restrict(&self, xr: (usize, usize), yr: (usize, usize)) -> KronOp {
        KronOp::new(
            xr.1 - xr.0 + 1,
            yr.1 - yr.0 + 1,
            self.terms.iter().map(|(x, y)| (x.restrict(xr.0, xr.1), y.restrict(yr.0, yr.1))).collect(),
        )
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|(x, y)| x.is_diagonal() && y.is_diagonal())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nx * self.ny];
        for (x, y) in &self.terms {
            for i in 0..self.nx {
                for j in 0..self.ny {
                    d[i * self.ny + j] += x.diag[i] * y.diag[j];
                }
            }
        }
        d
    }
}

fn is_zero(t: &Tridiag) -> bool {
    t.diag.iter().chain(&t.lower).chain(&t.upper).all(|&v| v == 0.0)
}

/// Combines terms sharing an identical factor until no pair does.
fn merge_terms(mut terms: Vec<(Tridiag, Tridiag)>) -> Vec<(Tridiag, Tridiag)> {
    'outer: loop {
        for a in 0..terms.len() {
            for b in a + 1..terms.len() {
                if terms[a].0 == terms[b].0 {
                    let (_, yb) = terms.remove(b);
                    terms[a].1 = terms[a].1.axpy(1.0, &yb);
                    continue 'outer;
                }
                if terms[a].1 == terms[b].1 {
                    let (xb, _) = terms.remove(b);
                    terms[a].0 = terms[a].0.axpy(1.0, &xb);
                    continue 'outer;
                }
            }
        }
        return terms;
    }
}

/// Band LU without pivoting; rows ordered with the shorter axis fastest.
#[derive(Clone, Debug)]
pub struct BandedLu {
    n: usize,
    bw: usize,
    ab: Vec<f64>,
    transposed: bool,
    nx: usize,
    ny: usize,
}

impl BandedLu {
    pub fn new(op: &KronOp) -> Result<Self> {
        let (nx, ny) = (op.nx, op.ny);
        let transposed = nx < ny;
        let fast = if transposed { nx } else { ny };
        let n = nx * ny;
        let bw = fast + 1;
        let w = 2 * bw + 1;
        let mut ab = vec![0.0; n * w];
        let pos = |i: usize, j: usize| if transposed { j * nx + i } else { i * ny + j };
        let mut scale = 0.0f64;
        for i in 0..nx {
            for j in 0..ny {
                let r = op.row(i, j);
                let row = pos(i, j);
                for (a, ra) in r.iter().enumerate() {
                    for (b, &c) in ra.iter().enumerate() {
                        if c != 0.0 {
                            let col = pos(i + a - 1, j + b - 1);
                            ab[row * w + col + bw - row] = c;
                            scale = scale.max(c.abs());
                        }
                    }
                }
            }
        }
        for k in 0..n {
            let piv = ab[k * w + bw];
            if !(piv.abs() > 1e-13 * scale) {
                return Err(Error::Singular(format!("band pivot {piv:e} at row {k}")));
            }
            let last = (k + bw).min(n - 1);
            for i in k + 1..=last {
                let l = ab[i * w + k + bw - i] / piv;
                if l == 0.0 {
                    continue;
                }
                ab[i * w + k + bw - i] = l;
                for j in k + 1..=last {
                    let ukj = ab[k * w + j + bw - k];
                    ab[i * w + j + bw - i] -= l * ukj;
                }
            }
        }
        Ok(BandedLu { n, bw, ab, transposed, nx, ny })
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, 2 * self.bw + 1);
        let mut x: Vec<f64> = if self.transposed {
            let mut t = vec![0.0; n];
            for i in 0..self.nx {
                for j in 0..self.ny {
                    t[j * self.nx + i] = rhs[i * self.ny + j];
                }
            }
            t
        } else {
            rhs.to_vec()
        };
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = x[i];
            for k in lo..i {
                s -= self.ab[i * w + k + bw - i] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = x[i];
            for k in i + 1..=hi {
                s -= self.ab[i * w + k + bw - i] * x[k];
            }
            x[i] = s / self.ab[i * w + bw];
        }
        if self.transposed {
            for i in 0..self.nx {
                for j in 0..self.ny {
                    rhs[i * self.ny + j] = x[j * self.nx + i];
                }
            }
        } else {
            rhs.copy_from_slice(&x);
        }
    }
}

/// Fast solver for `P1 (x) M2 + M1 (x) P2` with diagonal positive `M1`, `M2`.
///
/// One axis is diagonalized through a symmetrized generalized eigenproblem,
/// the other is solved mode by mode with the Thomas algorithm.
#[derive(Clone, Debug)]
pub struct Separable {
    nx: usize,
    ny: usize,
    /// true: modes along j (the second axis), lines along i.
    modes_on_y: bool,
    v: Vec<f64>,
    w: Vec<f64>,
    /// Per (line, mode) Thomas data stored as `i * ny + j`.
    mult: Vec<f64>,
    inv_piv: Vec<f64>,
    upper: Vec<f64>,
}

/// Tries to split `op` as `P1 (x) M2 + M1 (x) P2` with diagonal `M1`, `M2`.
fn split_separable(op: &KronOp) -> Option<(Tridiag, Tridiag, Tridiag, Tridiag)> {
    if op.terms.len() != 2 {
        return None;
    }
    let (a, b) = (&op.terms[0], &op.terms[1]);
    if a.1.is_diagonal() && b.0.is_diagonal() {
        Some((a.0.clone(), a.1.clone(), b.0.clone(), b.1.clone()))
    } else if a.0.is_diagonal() && b.1.is_diagonal() {
        Some((b.0.clone(), b.1.clone(), a.0.clone(), a.1.clone()))
    } else {
        None
    }
}

/// Eigen-decomposition of `M^{-1} P` for tridiagonal `P` whose off-diagonal products are positive.
/// Returns `(lambda, V, W)` with `M^{-1} P = V diag(lambda) V^{-1}` and `W = (M V)^{-1}`, both row-major.
fn tridiag_eigen(p: &Tridiag, m: &[f64]) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = p.len();
    if m.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let rs: Vec<f64> = m.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut logd = vec![0.0; n];
    let mut s = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        s[(k, k)] = p.diag[k] * rs[k] * rs[k];
        if k + 1 < n {
            let up = p.upper[k] * rs[k] * rs[k + 1];
            let lo = p.lower[k + 1] * rs[k] * rs[k + 1];
            if up == 0.0 && lo == 0.0 {
                logd[k + 1] = logd[k];
                continue;
            }
            if !(up * lo > 0.0) {
                return None;
            }
            logd[k + 1] = logd[k] + 0.5 * (up / lo).ln();
            let off = up.signum() * (up * lo).sqrt();
            s[(k, k + 1)] = off;
            s[(k + 1, k)] = off;
        }
    }
    let (lmin, lmax) = logd.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    if lmax - lmin > 12.0 * std::f64::consts::LN_10 {
        return None;
    }
    let shift = 0.5 * (lmax + lmin);
    let d: Vec<f64> = logd.iter().map(|v| (v - shift).exp()).collect();
    let eig = SymmetricEigen::new(s);
    let q = eig.eigenvectors;
    let mut v = vec![0.0; n * n];
    let mut w = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            v[r * n + c] = rs[r] / d[r] * q[(r, c)];
            w[r * n + c] = q[(c, r)] * d[c] * rs[c];
        }
    }
    Some((eig.eigenvalues.iter().copied().collect(), v, w))
}

fn gemm(m: usize, k: usize, n: usize, a: &[f64], rsa: isize, csa: isize, b: &[f64], rsb: isize, csb: isize, c: &mut [f64]) {
    // Safety: the strides describe the row-major buffers passed in, all sized by the caller.
    unsafe {
        matrixmultiply::dgemm(m, k, n, 1.0, a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, 0.0, c.as_mut_ptr(), n as isize, 1);
    }
}

impl Separable {
    pub fn new(op: &KronOp) -> Option<Self> {
        let (p1, m2, m1, p2) = split_separable(op)?;
        let (nx, ny) = (op.nx, op.ny);
        let modes_on_y = ny <= nx;
        let (lambda, v, w) = if modes_on_y { tridiag_eigen(&p2, &m2.diag)? } else { tridiag_eigen(&p1, &m1.diag)? };
        let mut mult = vec![0.0; nx * ny];
        let mut inv_piv = vec![0.0; nx * ny];
        let mut upper = vec![0.0; nx * ny];
        if modes_on_y {
            // line operator along i for mode j: P1 + lambda_j M1
            for j in 0..ny {
                let t = p1.axpy(lambda[j], &m1);
                let lu = ThomasLu::new(&t).ok()?;
                store_thomas(&t, &lu, |i| i * ny + j, &mut mult, &mut inv_piv, &mut upper);
            }
        } else {
            for i in 0..nx {
                let t = p2.axpy(lambda[i], &m2);
                let lu = ThomasLu::new(&t).ok()?;
                store_thomas(&t, &lu, |j| i * ny + j, &mut mult, &mut inv_piv, &mut upper);
            }
        }
        if mult.iter().chain(&inv_piv).any(|v| !v.is_finite()) {
            return None;
        }
        Some(Separable { nx, ny, modes_on_y, v, w, mult, inv_piv, upper })
    }

    pub fn solve(&self, rhs: &mut [f64], tmp: &mut Vec<f64>) {
        let (nx, ny) = (self.nx, self.ny);
        tmp.resize(nx * ny, 0.0);
        if self.modes_on_y {
            let n = ny as isize;
            // tmp = rhs W^T
            gemm(nx, ny, ny, rhs, n, 1, &self.w, 1, n, tmp);
            // forward/backward sweeps along i, vectorized over modes j
            for i in 1..nx {
                let (prev, cur) = tmp.split_at_mut(i * ny);
                let prev = &prev[(i - 1) * ny..];
                let m = &self.mult[i * ny..(i + 1) * ny];
                for j in 0..ny {
                    cur[j] -= m[j] * prev[j];
                }
            }
            for i in (0..nx).rev() {
                let (head, tail) = tmp.split_at_mut((i + 1) * ny);
                let cur = &mut head[i * ny..];
                let ip = &self.inv_piv[i * ny..(i + 1) * ny];
                if i + 1 < nx {
                    let next = &tail[..ny];
                    let up = &self.upper[i * ny..(i + 1) * ny];
                    for j in 0..ny {
                        cur[j] = (cur[j] - up[j] * next[j]) * ip[j];
                    }
                } else {
                    for j in 0..ny {
                        cur[j] *= ip[j];
                    }
                }
            }
            // rhs = tmp V^T
            gemm(nx, ny, ny, tmp, n, 1, &self.v, 1, n, rhs);
        } else {
            let n = nx as isize;
            let nyi = ny as isize;
            gemm(nx, nx, ny, &self.w, n, 1, rhs, nyi, 1, tmp);
            for i in 0..nx {
                let row = &mut tmp[i * ny..(i + 1) * ny];
                let m = &self.mult[i * ny..(i + 1) * ny];
                let ip = &self.inv_piv[i * ny..(i + 1) * ny];
                let up = &self.upper[i * ny..(i + 1) * ny];
                for j in 1..ny {
                    row[j] -= m[j] * row[j - 1];
                }
                row[ny - 1] *= ip[ny - 1];
                for j in (0..ny - 1).rev() {
                    row[j] = (row[j] - up[j] * row[j + 1]) * ip[j];
                }
            }
            gemm(nx, nx, ny, &self.v, n, 1, tmp, nyi, 1, rhs);
        }
    }
}

fn store_thomas(
    t: &Tridiag,
    lu: &ThomasLu,
    idx: impl Fn(usize) -> usize,
    mult: &mut [f64],
    inv_piv: &mut [f64],
    upper: &mut [f64],
) {
    let (m, ip) = lu.parts();
    for r in 0..t.len() {
        mult[idx(r)] = m[r];
        inv_piv[idx(r)] = ip[r];
        upper[idx(r)] = t.upper[r];
    }
}

/// Direct solver for one subdomain step matrix, built once and reused.
#[derive(Clone, Debug)]
pub enum StepSolver {
    Diagonal(Vec<f64>),
    Separable(Box<Separable>),
    Banded(Box<BandedLu>),
}

impl StepSolver {
    pub fn new(op: &KronOp) -> Result<Self> {
        if op.is_diagonal() {
            let d = op.diagonal();
            if d.iter().any(|v| *v == 0.0 || !v.is_finite()) {
                return Err(Error::Singular("zero diagonal entry".into()));
            }
            return Ok(StepSolver::Diagonal(d.iter().map(|v| 1.0 / v).collect()));
        }
        if let Some(s) = Separable::new(op) {
            return Ok(StepSolver::Separable(Box::new(s)));
        }
        Ok(StepSolver::Banded(Box::new(BandedLu::new(op)?)))
    }

    pub fn banded(op: &KronOp) -> Result<Self> {
        Ok(StepSolver::Banded(Box::new(BandedLu::new(op)?)))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            StepSolver::Diagonal(_) => "diagonal",
            StepSolver::Separable(_) => "separable",
            StepSolver::Banded(_) => "banded",
        }
    }

    pub fn solve(&self, rhs: &mut [f64], tmp: &mut Vec<f64>) {
        match self {
            StepSolver::Diagonal(inv) => rhs.iter_mut().zip(inv).for_each(|(r, d)| *r *= d),
            StepSolver::Separable(s) => s.solve(rhs, tmp),
            StepSolver::Banded(b) => b.solve(rhs),
        }
    }
}
