//! Fourier symbol of the Schwarz iteration.
//!
//! After a Fourier transform in `y` and `t` with frequencies `(k, omega)`
//! the error contracts per double sweep by `rho = (s - z)/(s + z) exp(-L z / 2 nu)`
//! where `z = sqrt(x0^2 + 4 nu (nu k^2 + i(omega + c k)))` and
//! `s = p + q (nu k^2 + i(omega + c k))`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{Coefficients, FrequencyBox, TransmissionKind, TransmissionParams};

/// `(x, y) = (Re z, Im z)` computed from the explicit half-angle formulas.
///
/// The imaginary part is recovered from `2xy = 4 nu (omega + c k)`, which
/// avoids the cancellation in `sqrt(|w| - R)` when the real part dominates.
pub fn z_components(coeffs: &Coefficients, omega: f64, k: f64) -> (f64, f64) {
    let nu = coeffs.nu;
    let re = coeffs.x0sq() + 4.0 * nu * nu * k * k;
    let im = 4.0 * nu * (omega + coeffs.c * k);
    let modulus = re.hypot(im);
    let x = (0.5 * (modulus + re)).sqrt();
    if x == 0.0 {
        return (0.0, 0.0);
    }
    (x, im / (2.0 * x))
}

/// The change of variables `z(omega, k)` on the branch with `Re z >= 0`.
pub fn to_z(coeffs: &Coefficients, omega: f64, k: f64) -> Complex64 {
    let (x, y) = z_components(coeffs, omega, k);
    Complex64::new(x, y)
}

/// A point of the z-plane together with the frequency pair it came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZPoint {
    pub x: f64,
    pub y: f64,
    pub omega: f64,
    pub k: f64,
}

impl ZPoint {
    pub fn new(coeffs: &Coefficients, omega: f64, k: f64) -> Self {
        let (x, y) = z_components(coeffs, omega, k);
        Self { x, y, omega, k }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }
}

/// Symbol of the tangential operator, `nu k^2 + i (omega + c k)`.
fn tangential_symbol(coeffs: &Coefficients, omega: f64, k: f64) -> Complex64 {
    Complex64::new(coeffs.nu * k * k, omega + coeffs.c * k)
}

/// Convergence factor for Robin or Ventcel transmission.
pub fn rho(coeffs: &Coefficients, omega: f64, k: f64, params: &TransmissionParams) -> Result<Complex64> {
    if params.kind == TransmissionKind::Dirichlet {
        return Err(Error::InvalidParams("rho is defined for Robin and Ventcel conditions".into()));
    }
    let z = to_z(coeffs, omega, k);
    let s = params.p + params.q * tangential_symbol(coeffs, omega, k);
    let den = s + z;
    if den.norm() == 0.0 {
        return Err(Error::DegenerateDenominator { omega, k });
    }
    Ok((s - z) / den * (-params.l * z / (2.0 * coeffs.nu)).exp())
}

/// `|rho|` with the `z`-dependent pieces supplied by the caller.
#[inline]
pub(crate) fn abs_rho_at(z: Complex64, w: Complex64, p: f64, q: f64, l_over_2nu: f64) -> f64 {
    let s = p + q * w;
    let num = (s - z).norm();
    let den = (s + z).norm();
    if den == 0.0 {
        return f64::NAN;
    }
    num / den * (-l_over_2nu * z.re).exp()
}

#[inline]
pub(crate) fn abs_rho_fast(coeffs: &Coefficients, omega: f64, k: f64, p: f64, q: f64, l: f64) -> f64 {
    let z = to_z(coeffs, omega, k);
    abs_rho_at(z, tangential_symbol(coeffs, omega, k), p, q, l / (2.0 * coeffs.nu))
}

/// Sampling density for boundary searches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sampling {
    /// Log-spaced nodes on every boundary piece.
    pub nodes_per_curve: usize,
    /// Polish every discrete local maximum by a golden-section search.
    pub refine: bool,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { nodes_per_curve: 2048, refine: false }
    }
}

/// Names of the boundary curves of the image of the frequency box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Curve {
    West,
    East,
    North,
    SouthWest,
    SouthEast,
}

impl std::fmt::Display for Curve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Curve::West => "west",
            Curve::East => "east",
            Curve::North => "north",
            Curve::SouthWest => "south-west",
            Curve::SouthEast => "south-east",
        })
    }
}

/// One smooth piece of a boundary curve: either `omega` or `k` is fixed and
/// the other runs over `sign * [lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPiece {
    pub curve: Curve,
    pub fixed: Fixed,
    /// Sign of the running variable.
    pub sign: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fixed {
    Omega(f64),
    K(f64),
}

impl BoundaryPiece {
    /// Frequency pair at running magnitude `t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        match self.fixed {
            Fixed::Omega(w) => (w, self.sign * t),
            Fixed::K(k) => (self.sign * t, k),
        }
    }

    /// Running magnitude of the `i`-th of `n` log-spaced nodes.
    pub fn node(&self, i: usize, n: usize) -> f64 {
        if i == 0 {
            return self.lo;
        }
        if i + 1 == n {
            return self.hi;
        }
        let lo = self.log_lo();
        lo + (self.hi.ln() - lo) * i as f64 / (n - 1) as f64
    }

    fn log_lo(&self) -> f64 {
        // a zero lower end is replaced by a tiny positive magnitude for spacing
        if self.lo > 0.0 {
            self.lo.ln()
        } else {
            (self.hi * 1e-12).ln()
        }
    }

    fn node_value(&self, i: usize, n: usize) -> f64 {
        if i == 0 {
            self.lo
        } else if i + 1 == n {
            self.hi
        } else {
            self.node(i, n).exp()
        }
    }

    /// Log-spaced running magnitudes, endpoints included exactly.
    pub fn magnitudes(&self, n: usize) -> Vec<f64> {
        if self.hi <= self.lo {
            return vec![self.lo];
        }
        (0..n).map(|i| self.node_value(i, n)).collect()
    }
}

fn sign_of(c: f64) -> f64 {
    if c < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `x / |c|`, treated as `+inf` when `c = 0`.
fn over_abs_c(x: f64, c: f64) -> f64 {
    if c == 0.0 {
        f64::INFINITY
    } else {
        x / c.abs()
    }
}

/// Boundary pieces of the image of the box in the upper half z-plane.
///
/// Empty intervals are dropped. The box must be finite; use
/// [`FrequencyBox::truncated`] for the continuous overlap analysis.
pub fn boundary_pieces(coeffs: &Coefficients, bx: &FrequencyBox) -> Vec<BoundaryPiece> {
    let c = coeffs.c;
    let s = sign_of(c);
    let ac = c.abs();
    let (wm, wmax, km, kmax) = (bx.omega_min, bx.omega_max, bx.k_min, bx.k_max);
    let mut out = Vec::new();
    let mut push = |curve, fixed, sign, lo: f64, hi: f64| {
        if lo <= hi && hi.is_finite() {
            out.push(BoundaryPiece { curve, fixed, sign, lo, hi });
        }
    };
    push(Curve::West, Fixed::K(s * km), 1.0, wm, wmax);
    push(Curve::West, Fixed::K(-s * km), 1.0, wm.max(ac * km), wmax);
    push(Curve::East, Fixed::K(s * kmax), -1.0, wm, (ac * kmax).min(wmax));
    push(Curve::East, Fixed::K(s * kmax), 1.0, wm, wmax);
    push(Curve::East, Fixed::K(-s * kmax), 1.0, ac * kmax, wmax);
    push(Curve::North, Fixed::Omega(wmax), s, km, kmax);
    push(Curve::SouthWest, Fixed::Omega(wm), -s, km, over_abs_c(wm, c).min(kmax));
    if ac > 0.0 {
        push(Curve::SouthEast, Fixed::Omega(-wmax), s, over_abs_c(wmax, c), kmax);
    }
    out
}

/// Result of a supremum search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupResult {
    pub value: f64,
    pub omega: f64,
    pub k: f64,
}

/// Maximum of `|rho|` over the boundary of the box image, sampled
/// log-uniformly on each piece and at the tangent points.
pub fn sup_abs_rho(
    coeffs: &Coefficients,
    bx: &FrequencyBox,
    params: &TransmissionParams,
    sampling: &Sampling,
) -> Result<SupResult> {
    if params.kind == TransmissionKind::Dirichlet {
        return Err(Error::InvalidParams("sup_abs_rho needs Robin or Ventcel parameters".into()));
    }
    if sampling.nodes_per_curve < 3 {
        return Err(Error::InvalidSampling(format!(
            "need at least 3 nodes per boundary segment, got {}",
            sampling.nodes_per_curve
        )));
    }
    bx.validate()?;
    let bx = if bx.is_finite() { *bx } else { bx.truncated(coeffs.nu) };
    let mut best = SupResult { value: f64::NEG_INFINITY, omega: f64::NAN, k: f64::NAN };
    let mut consider = |v: f64, omega: f64, k: f64| {
        if v.is_nan() {
            return;
        }
        if v > best.value || (v == best.value && (omega, k) < (best.omega, best.k)) {
            best = SupResult { value: v, omega, k };
        }
    };
    let (p, q, l) = (params.p, params.q, params.l);
    for piece in boundary_pieces(coeffs, &bx) {
        let ts = piece.magnitudes(sampling.nodes_per_curve);
        let vals: Vec<f64> = ts
            .iter()
            .map(|&t| {
                let (w, k) = piece.at(t);
                abs_rho_fast(coeffs, w, k, p, q, l)
            })
            .collect();
        for (i, &v) in vals.iter().enumerate() {
            let (w, k) = piece.at(ts[i]);
            consider(v, w, k);
        }
        if sampling.refine {
            for (t, v) in refine_piece_maxima(coeffs, &piece, &ts, &vals, p, q, l) {
                let (w, k) = piece.at(t);
                consider(v, w, k);
            }
        }
    }
    for (w, k) in tangent_points(coeffs, &bx) {
        consider(abs_rho_fast(coeffs, w, k, p, q, l), w, k);
    }
    if !best.value.is_finite() {
        return Err(Error::DegenerateDenominator { omega: best.omega, k: best.k });
    }
    Ok(best)
}

/// Interior tangent points `z(omega_m, k1(omega_m))` and `z(omega_M, k2(omega_M))`
/// when they fall inside the wavenumber range.
pub fn tangent_points(coeffs: &Coefficients, bx: &FrequencyBox) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if coeffs.c == 0.0 {
        return out;
    }
    if let Ok(k1) = ktilde1(coeffs, bx.omega_min) {
        if k1.abs() >= bx.k_min && k1.abs() <= bx.k_max {
            out.push((bx.omega_min, k1));
        }
    }
    if let Ok(k2) = ktilde2(coeffs, bx.omega_max) {
        if k2.abs() >= bx.k_min && k2.abs() <= bx.k_max {
            out.push((bx.omega_max, k2));
        }
    }
    out
}

/// Golden-section polish of the discrete local maxima of one piece.
/// Returns `(running magnitude, |rho|)` pairs.
pub(crate) fn refine_piece_maxima(
    coeffs: &Coefficients,
    piece: &BoundaryPiece,
    ts: &[f64],
    vals: &[f64],
    p: f64,
    q: f64,
    l: f64,
) -> Vec<(f64, f64)> {
    let n = ts.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let f = |lt: f64| {
        let (w, k) = piece.at(lt.exp());
        -abs_rho_fast(coeffs, w, k, p, q, l)
    };
    for i in 1..n - 1 {
        if vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1] && ts[i - 1] > 0.0 {
            let (lt, fv) = crate::oracle::golden_section_minimize(f, ts[i - 1].ln(), ts[i + 1].ln(), 60);
            out.push((lt.exp(), -fv));
        }
    }
    out
}

/// `kbar`, the wavenumber where the low-frequency bound of `Re z` is attained.
///
/// Uses the rationalized form `2 |c| omega / (sqrt(S^2 + 16 nu^2 omega^2) + S)`,
/// `S = c^2 + x0^2`, which is exact for all `omega >= 0` and free of cancellation.
pub fn kbar(coeffs: &Coefficients, omega_min: f64) -> f64 {
    let s = coeffs.c * coeffs.c + coeffs.x0sq();
    let nu = coeffs.nu;
    if omega_min <= 0.0 || coeffs.c == 0.0 {
        return 0.0;
    }
    let root = s.hypot(4.0 * nu * omega_min);
    2.0 * coeffs.c.abs() * omega_min / (root + s)
}

/// `phi(k, xi) = 2 sqrt 2 sqrt(sqrt((x0^2 + 4 nu^2 k^2)^2 + 16 nu^2 xi^2) + x0^2 + 4 nu^2 k^2)`.
pub fn phi(coeffs: &Coefficients, k: f64, xi: f64) -> f64 {
    let nu = coeffs.nu;
    let r = coeffs.x0sq() + 4.0 * nu * nu * k * k;
    2.0 * std::f64::consts::SQRT_2 * (r.hypot(4.0 * nu * xi) + r).sqrt()
}

/// The constant `A`, twice the smallest real part of `z` in the leading order,
/// selected by the position of `k_min` relative to `kbar` and `omega_min / |c|`.
pub fn constant_a(coeffs: &Coefficients, bx: &FrequencyBox) -> f64 {
    let ac = coeffs.c.abs();
    let wm = bx.omega_min;
    let km = bx.k_min;
    let kb = kbar(coeffs, wm);
    if km <= kb {
        phi(coeffs, kb, -wm + ac * kb)
    } else if km <= over_abs_c(wm, coeffs.c) {
        phi(coeffs, km, -wm + ac * km)
    } else {
        phi(coeffs, km, 0.0)
    }
}

fn require_positive_omega(omega: f64) -> Result<()> {
    if omega > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain(format!("tangent points need omega > 0, got {omega}")))
    }
}

/// Wavenumber of the vertical tangent of `k -> z(omega, k)`.
pub fn ktilde1(coeffs: &Coefficients, omega: f64) -> Result<f64> {
    require_positive_omega(omega)?;
    let c = coeffs.c;
    let s = coeffs.x0sq() + c * c;
    let root = s.hypot(4.0 * coeffs.nu * omega);
    // c (S - root) / (8 nu^2 omega), rationalized
    Ok(-2.0 * c * omega / (s + root))
}

/// Wavenumber of the horizontal tangent of `k -> z(omega, k)`.
pub fn ktilde2(coeffs: &Coefficients, omega: f64) -> Result<f64> {
    require_positive_omega(omega)?;
    let c = coeffs.c;
    let nu = coeffs.nu;
    let s = coeffs.x0sq() + c * c;
    let root = s.hypot(4.0 * nu * omega);
    Ok(c * (s + root) / (8.0 * nu * nu * omega))
}

/// Corner points, tangent wavenumbers and the two distinguished points
/// `z_sw` and `z_n` of the box image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Landmarks {
    pub z1: ZPoint,
    pub z2: ZPoint,
    pub z3: ZPoint,
    pub z4: ZPoint,
    pub ktilde1: f64,
    pub ktilde2: f64,
    pub z_sw: ZPoint,
    pub z_n: ZPoint,
    /// Set when `|c| k_min == omega_min`, where the south-west case split is
    /// ambiguous and `z1` was taken.
    pub sw_degenerate: bool,
}

/// Landmarks of a finite box with `omega_min > 0`.
pub fn landmarks(coeffs: &Coefficients, bx: &FrequencyBox) -> Result<Landmarks> {
    bx.validate()?;
    if !bx.is_finite() {
        return Err(Error::InvalidBox("landmarks need a finite box".into()));
    }
    let s = sign_of(coeffs.c);
    let ac = coeffs.c.abs();
    let (wm, wmax, km, kmax) = (bx.omega_min, bx.omega_max, bx.k_min, bx.k_max);
    let z = |w: f64, k: f64| ZPoint::new(coeffs, w, k);
    let z1 = z(wm.max(ac * km), -s * km);
    let z2 = z(-wmax.min(ac * kmax), s * km);
    let z3 = z(wmax, s * kmax);
    let z4 = z(wmax, s * km);
    let kt1 = ktilde1(coeffs, wm)?;
    let kt2 = ktilde2(coeffs, wmax)?;
    let ckm = ac * km;
    let sw_degenerate = ckm == wm;
    // the vertical tangent can only sit on the south-west curve when that curve
    // is nonempty, i.e. when |c| k_min < omega_min
    let z_sw = if ckm < wm && kt1.abs() >= km && kt1.abs() <= over_abs_c(wm, coeffs.c) {
        z(wm, kt1)
    } else {
        z1
    };
    let z_n = if kt2.abs() >= km && kt2.abs() <= kmax { z(wmax, kt2) } else { z4 };
    Ok(Landmarks { z1, z2, z3, z4, ktilde1: kt1, ktilde2: kt2, z_sw, z_n, sw_degenerate })
}
