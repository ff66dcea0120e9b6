//! Continuous problem data, grid descriptors and the frequency box.
//!
//! The model equation is
//! `u_t + a u_x + c u_y - nu (u_xx + u_yy) + b u = f` on a rectangle
//! `(0, Lx) x (0, Ly)` over the time window `(0, T)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant coefficients of the advection-reaction-diffusion operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    /// Diffusion, strictly positive.
    pub nu: f64,
    /// Advection normal to vertical interfaces.
    pub a: f64,
    /// Advection tangential to vertical interfaces.
    pub c: f64,
    /// Reaction, nonnegative.
    pub b: f64,
}

impl Coefficients {
    pub fn new(nu: f64, a: f64, c: f64, b: f64) -> Result<Self> {
        let co = Self { nu, a, c, b };
        co.validate()?;
        Ok(co)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(Error::InvalidCoefficients(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return Err(Error::InvalidCoefficients(format!("b must be nonnegative, got {}", self.b)));
        }
        if !self.a.is_finite() || !self.c.is_finite() {
            return Err(Error::InvalidCoefficients("advection must be finite".into()));
        }
        Ok(())
    }

    /// `x0^2 = a^2 + 4 nu b`.
    pub fn x0sq(&self) -> f64 {
        self.a * self.a + 4.0 * self.nu * self.b
    }

    /// Coefficients seen from a horizontal interface: the normal and
    /// tangential advection components trade places.
    pub fn transposed(&self) -> Self {
        Self { nu: self.nu, a: self.c, c: self.a, b: self.b }
    }
}

/// How the time step follows the mesh size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "ch", rename_all = "lowercase")]
pub enum TimeRelation {
    /// `dt = ch * h`
    Linear(f64),
    /// `dt = ch * h^2`
    Quadratic(f64),
}

impl TimeRelation {
    pub fn ch(&self) -> f64 {
        match *self {
            TimeRelation::Linear(c) | TimeRelation::Quadratic(c) => c,
        }
    }

    pub fn dt(&self, h: f64) -> f64 {
        match *self {
            TimeRelation::Linear(c) => c * h,
            TimeRelation::Quadratic(c) => c * h * h,
        }
    }
}

/// Space-time grid on the rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub h: f64,
    pub dt: f64,
    pub relation: TimeRelation,
    pub lx: f64,
    pub ly: f64,
    pub t: f64,
}

/// Rounds `len / h` to an integer cell count, failing if it is not one.
fn cell_count(len: f64, h: f64, what: &str) -> Result<usize> {
    let r = len / h;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-8 * r.max(1.0) {
        return Err(Error::InvalidGrid(format!("h = {h} does not divide {what} = {len}")));
    }
    Ok(n as usize)
}

impl GridSpec {
    /// Builds a grid whose time step follows `relation`.
    pub fn new(h: f64, relation: TimeRelation, lx: f64, ly: f64, t: f64) -> Result<Self> {
        let g = Self { h, dt: relation.dt(h), relation, lx, ly, t };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h", self.h), ("dt", self.dt), ("Lx", self.lx), ("Ly", self.ly), ("T", self.t)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidGrid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.relation.ch() > 0.0) {
            return Err(Error::InvalidGrid("C_h must be positive".into()));
        }
        let expect = self.relation.dt(self.h);
        if (self.dt - expect).abs() > 1e-12 * expect {
            return Err(Error::InvalidGrid(format!(
                "dt = {} inconsistent with relation (expected {expect})",
                self.dt
            )));
        }
        self.nx()?;
        self.ny()?;
        self.nt()?;
        Ok(())
    }

    /// Cells along x.
    pub fn nx(&self) -> Result<usize> {
        cell_count(self.lx, self.h, "Lx")
    }

    /// Cells along y.
    pub fn ny(&self) -> Result<usize> {
        cell_count(self.ly, self.h, "Ly")
    }

    /// Time steps; `T / dt` is rounded to the nearest integer.
    pub fn nt(&self) -> Result<usize> {
        let n = (self.t / self.dt).round();
        if n < 1.0 {
            return Err(Error::InvalidGrid("T shorter than one time step".into()));
        }
        Ok(n as usize)
    }
}

/// Rectangle `[omega_min, omega_max] x [k_min, k_max]` of relevant frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyBox {
    pub omega_min: f64,
    pub omega_max: f64,
    pub k_min: f64,
    pub k_max: f64,
}

impl FrequencyBox {
    pub fn new(omega_min: f64, omega_max: f64, k_min: f64, k_max: f64) -> Result<Self> {
        let b = Self { omega_min, omega_max, k_min, k_max };
        b.validate()?;
        Ok(b)
    }

    /// Checks ordering and signs. Degenerate boxes (`min == max`) are allowed
    /// so that single frequencies can be probed.
    pub fn validate(&self) -> Result<()> {
        let ok = self.omega_min >= 0.0
            && self.k_min >= 0.0
            && self.omega_min <= self.omega_max
            && self.k_min <= self.k_max
            && self.omega_min.is_finite()
            && self.k_min.is_finite()
            && !self.omega_max.is_nan()
            && !self.k_max.is_nan();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidBox(format!("{self:?}")))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.omega_max.is_finite() && self.k_max.is_finite()
    }

    /// Replaces infinite upper bounds by `10^6 * max(1, omega_min, nu k_min^2)`.
    pub fn truncated(&self, nu: f64) -> Self {
        let cap = 1e6 * 1f64.max(self.omega_min).max(nu * self.k_min * self.k_min);
        Self {
            omega_max: if self.omega_max.is_finite() { self.omega_max } else { cap },
            k_max: if self.k_max.is_finite() { self.k_max } else { (cap / nu).sqrt() },
            ..*self
        }
    }
}

/// Lowest and highest resolved frequencies for vertical interfaces:
/// `(pi/T, pi/dt, pi/Ly, pi/h)`.
pub fn default_frequency_box(grid: &GridSpec) -> FrequencyBox {
    FrequencyBox {
        omega_min: PI / grid.t,
        omega_max: PI / grid.dt,
        k_min: PI / grid.ly,
        k_max: PI / grid.h,
    }
}

/// Frequency box seen from horizontal interfaces, whose tangential
/// direction is x.
pub fn transposed_frequency_box(grid: &GridSpec) -> FrequencyBox {
    FrequencyBox { k_min: PI / grid.lx, ..default_frequency_box(grid) }
}

/// True when `Re z` stays bounded away from zero on the box, i.e. when
/// `x0^2 + 4 nu^2 k_min^2 > 0` or `omega_min > 0`.
pub fn check_hypothesis(coeffs: &Coefficients, bx: &FrequencyBox) -> bool {
    coeffs.x0sq() + 4.0 * coeffs.nu * coeffs.nu * bx.k_min * bx.k_min > 0.0 || bx.omega_min > 0.0
}

/// Lower bound on `Re z` over the box when the hypothesis holds.
pub fn re_z_lower_bound(coeffs: &Coefficients, bx: &FrequencyBox) -> f64 {
    let r = (coeffs.x0sq() + 4.0 * coeffs.nu * coeffs.nu * bx.k_min * bx.k_min).sqrt();
    let w = (2.0 * coeffs.nu * bx.omega_min).sqrt();
    r.min(w)
}

/// Kind of transmission condition on the interfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransmissionKind {
    Dirichlet,
    Robin,
    Ventcel,
}

impl std::fmt::Display for TransmissionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TransmissionKind::Dirichlet => "dirichlet",
            TransmissionKind::Robin => "robin",
            TransmissionKind::Ventcel => "ventcel",
        })
    }
}

impl std::str::FromStr for TransmissionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Self::Dirichlet),
            "robin" => Ok(Self::Robin),
            "ventcel" => Ok(Self::Ventcel),
            _ => Err(Error::Config(format!("unknown transmission kind '{s}'"))),
        }
    }
}

/// Transmission operator `(nu d_n - a_n/2) + p/2 + q/2 (d_t + c d_y - nu d_yy)`
/// together with the overlap width `l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmissionParams {
    pub kind: TransmissionKind,
    pub p: f64,
    pub q: f64,
    pub l: f64,
}

impl TransmissionParams {
    pub fn dirichlet(l: f64) -> Result<Self> {
        let t = Self { kind: TransmissionKind::Dirichlet, p: 0.0, q: 0.0, l };
        t.validate()?;
        Ok(t)
    }

    pub fn robin(p: f64, l: f64) -> Result<Self> {
        let t = Self { kind: TransmissionKind::Robin, p, q: 0.0, l };
        t.validate()?;
        Ok(t)
    }

    pub fn ventcel(p: f64, q: f64, l: f64) -> Result<Self> {
        let t = Self { kind: TransmissionKind::Ventcel, p, q, l };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l >= 0.0) || !self.l.is_finite() {
            return Err(Error::InvalidParams(format!("overlap must be nonnegative, got {}", self.l)));
        }
        match self.kind {
            TransmissionKind::Dirichlet => Ok(()),
            TransmissionKind::Robin | TransmissionKind::Ventcel => {
                if !(self.p >= 0.0) || !self.p.is_finite() {
                    return Err(Error::InvalidParams(format!("p must be nonnegative, got {}", self.p)));
                }
                if !(self.q >= 0.0) || !self.q.is_finite() {
                    return Err(Error::InvalidParams(format!("q must be nonnegative, got {}", self.q)));
                }
                if self.kind == TransmissionKind::Robin && self.q != 0.0 {
                    return Err(Error::InvalidParams("Robin conditions require q = 0".into()));
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: f64, rel: TimeRelation) -> GridSpec {
        GridSpec::new(h, rel, 1.2, 1.2, 1.0).unwrap()
    }

    #[test]
    fn default_box_substitutes_grid_values() {
        let b = default_frequency_box(&grid(0.01, TimeRelation::Linear(0.25)));
        assert!((b.omega_min - PI).abs() < 1e-14);
        assert!((b.omega_max - 400.0 * PI).abs() < 1e-10);
        assert!((b.k_min - PI / 1.2).abs() < 1e-14);
        assert!((b.k_max - 100.0 * PI).abs() < 1e-10);

        let b = default_frequency_box(&grid(0.04, TimeRelation::Linear(0.25)));
        assert!((b.k_max - 25.0 * PI).abs() < 1e-10);
        assert!((b.omega_max - 100.0 * PI).abs() < 1e-10);

        let b = default_frequency_box(&grid(0.02, TimeRelation::Quadratic(0.25)));
        assert!((b.omega_max - 1e4 * PI).abs() < 1e-8);
    }

    #[test]
    fn hypothesis_cases() {
        let heat = Coefficients::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let adv = Coefficients::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let zero = FrequencyBox::new(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(!check_hypothesis(&heat, &zero));
        assert!(check_hypothesis(&adv, &zero));
        let wm = FrequencyBox { omega_min: PI, ..zero };
        assert!(check_hypothesis(&heat, &wm));
    }

    #[test]
    fn grid_rejects_non_dividing_h() {
        assert!(GridSpec::new(0.07, TimeRelation::Linear(0.25), 1.2, 1.2, 1.0).is_err());
        let g = grid(0.04, TimeRelation::Linear(0.25));
        assert_eq!(g.nx().unwrap(), 30);
        assert_eq!(g.nt().unwrap(), 100);
    }

    #[test]
    fn robin_rejects_q() {
        assert!(TransmissionParams { kind: TransmissionKind::Robin, p: 1.0, q: 0.1, l: 0.0 }
            .validate()
            .is_err());
        assert!(TransmissionParams::ventcel(1.0, 0.1, 0.0).is_ok());
    }

    #[test]
    fn x0sq_is_exact() {
        let c = Coefficients::new(0.3, 1.7, -2.0, 0.9).unwrap();
        assert_eq!(c.x0sq(), 1.7 * 1.7 + 4.0 * 0.3 * 0.9);
    }
}
