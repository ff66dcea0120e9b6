//! Asymptotically optimized transmission parameters in closed form.
//!
//! Every regime returns `p`, `q` and the predicted contraction `delta`.
//! The formulas are leading-order asymptotics in `h` or `L`, so for coarse
//! grids they can leave the meaningful range; [`OptimizedParams::valid`]
//! flags that instead of failing.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{Coefficients, FrequencyBox, TimeRelation, TransmissionKind, TransmissionParams};
use crate::symbol::constant_a;

/// Overlap regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Overlap {
    None,
    /// Overlap `L` with an unbounded frequency box.
    Continuous(f64),
    /// Overlap `L` proportional to `h` with the grid-limited box.
    Discrete(f64),
}

/// Case selector for the closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Regime {
    pub overlap: Overlap,
    pub relation: TimeRelation,
}

/// Closed-form parameters with their predicted contraction factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimizedParams {
    pub p: f64,
    pub q: f64,
    pub delta: f64,
    /// False when the asymptotic formula left `p > 0`, `0 < delta < 1`.
    pub valid: bool,
}

impl OptimizedParams {
    fn new(p: f64, q: f64, delta: f64) -> Self {
        let valid = p > 0.0 && q >= 0.0 && delta > 0.0 && delta < 1.0 && p.is_finite() && q.is_finite();
        Self { p, q, delta, valid }
    }

    /// Transmission parameters of the given kind with overlap `l`.
    pub fn transmission(&self, kind: TransmissionKind, l: f64) -> Result<TransmissionParams> {
        match kind {
            TransmissionKind::Robin => TransmissionParams::robin(self.p, l),
            TransmissionKind::Ventcel => TransmissionParams::ventcel(self.p, self.q, l),
            TransmissionKind::Dirichlet => TransmissionParams::dirichlet(l),
        }
    }
}

fn cubic(d: f64) -> f64 {
    ((d - 2.0) * d + 2.0) * d - 2.0
}

/// Real root of `d^3 - 2 d^2 + 2 d - 2`, about 1.543679.
pub fn d0() -> f64 {
    static D0: OnceLock<f64> = OnceLock::new();
    *D0.get_or_init(|| {
        let (mut lo, mut hi) = (1.0, 2.0);
        let mut d = 1.5;
        for _ in 0..100 {
            let f = cubic(d);
            if f == 0.0 {
                break;
            }
            if f < 0.0 {
                lo = d;
            } else {
                hi = d;
            }
            let df = (3.0 * d - 4.0) * d + 2.0;
            let newton = d - f / df;
            d = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo < 1e-15 {
                break;
            }
        }
        d
    })
}

/// The factor `C(d)`: 1 below `d0`, `sqrt((d + sqrt(1 + d^2)) / (1 + d^2))` above.
pub fn c_of_d(d: f64) -> f64 {
    if d < d0() {
        1.0
    } else {
        ((d + (1.0 + d * d).sqrt()) / (1.0 + d * d)).sqrt()
    }
}

/// The constant `B`: `2/(nu pi)` for `dt = C_h h`, `C sqrt(2d)/(nu pi)` with
/// `d = nu pi C_h` for `dt = C_h h^2`.
pub fn constant_b(coeffs: &Coefficients, relation: TimeRelation) -> f64 {
    let nu = coeffs.nu;
    match relation {
        TimeRelation::Linear(_) => 2.0 / (nu * PI),
        TimeRelation::Quadratic(ch) => {
            let d = nu * PI * ch;
            c_of_d(d) * (2.0 * d).sqrt() / (nu * PI)
        }
    }
}

/// `g(t) = (2t - sqrt(t^2 + 1)) / (t^2 + 1)`.
pub fn g(t: f64) -> f64 {
    let r = (t * t + 1.0).sqrt();
    (2.0 * t - r) / (t * t + 1.0)
}

/// Maximizer of `g`, `sqrt(54 + 6 sqrt 33) / 6`.
pub fn t0() -> f64 {
    (54.0 + 6.0 * 33f64.sqrt()).sqrt() / 6.0
}

/// Maximum of `g`, about 0.3690.
pub fn g0() -> f64 {
    g(t0())
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Root of `g(t) = Q` on the decreasing branch `t > t0`.
pub fn t2(q: f64) -> Result<f64> {
    if !(q > 0.0) || q >= g0() {
        return Err(Error::OutOfDomain(format!("t2 needs 0 < Q < g0 = {}, got {q}", g0())));
    }
    let lo = t0();
    let mut hi = 2.0 * lo;
    while g(hi) >= q {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoRoot(format!("g(t) = {q}")));
        }
    }
    Ok(bisect(lo, hi, |t| g(t) - q))
}

fn h1(t: f64) -> f64 {
    let r = (t * t + 1.0).sqrt();
    (1.0 + r).sqrt() * (1.0 / r + g(t))
}

fn h2(t: f64) -> f64 {
    1.0 + g(t)
}

/// Crossing of `h1` and `h2` beyond `t0`, about 2.5484.
pub fn tbar() -> f64 {
    static TBAR: OnceLock<f64> = OnceLock::new();
    *TBAR.get_or_init(|| bisect(t0(), 10.0, |t| h1(t) - h2(t)))
}

/// `g(tbar)`, about 0.3148.
pub fn g1() -> f64 {
    static G1: OnceLock<f64> = OnceLock::new();
    *G1.get_or_init(|| g(tbar()))
}

/// The function `P(Q)` entering the large-`A C_h` Ventcel case.
#[allow(non_snake_case)]
pub fn P_of_Q(q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::OutOfDomain(format!("P(Q) needs Q > 0, got {q}")));
    }
    if q >= g1() {
        return Ok(1.0 + q);
    }
    let t = t2(q)?;
    let r = (t * t + 1.0).sqrt();
    Ok((1.0 + r).sqrt() * (1.0 / r + q))
}

/// Robin without overlap: `p = sqrt(A/(B h))`, `delta = 1 - sqrt(A B h)/2`.
pub fn robin_no_overlap(coeffs: &Coefficients, bx: &FrequencyBox, h: f64, relation: TimeRelation) -> OptimizedParams {
    let a = constant_a(coeffs, bx);
    let b = constant_b(coeffs, relation);
    OptimizedParams::new((a / (b * h)).sqrt(), 0.0, 1.0 - 0.5 * (a * b * h).sqrt())
}

/// Robin with overlap and unbounded frequencies: `p = (nu A^2 / L)^(1/3) / 2`.
pub fn robin_overlap_continuous(coeffs: &Coefficients, bx: &FrequencyBox, l: f64) -> OptimizedParams {
    let a = constant_a(coeffs, bx);
    let p = 0.5 * (coeffs.nu * a * a / l).cbrt();
    OptimizedParams::new(p, 0.0, 1.0 - a / (2.0 * p))
}

/// Robin with overlap `L` proportional to `h`.
pub fn robin_overlap_discrete(coeffs: &Coefficients, bx: &FrequencyBox, l: f64, relation: TimeRelation) -> OptimizedParams {
    let a = constant_a(coeffs, bx);
    let mut p = 0.5 * (coeffs.nu * a * a / l).cbrt();
    if let TimeRelation::Linear(_) = relation {
        p /= 2f64.cbrt();
    }
    OptimizedParams::new(p, 0.0, 1.0 - a / (2.0 * p))
}

/// Ventcel without overlap.
pub fn ventcel_no_overlap(coeffs: &Coefficients, bx: &FrequencyBox, h: f64, relation: TimeRelation) -> OptimizedParams {
    let a = constant_a(coeffs, bx);
    let nu = coeffs.nu;
    let (p, q) = match relation {
        TimeRelation::Linear(ch) => {
            let p = if a * ch / 8.0 <= 1.0 {
                0.5 * (nu * PI * a.powi(3) / (4.0 * h)).powf(0.25)
            } else {
                // Q = 8/(C_h A) < 1 here, so P is defined
                let pq = P_of_Q(8.0 / (ch * a)).unwrap_or(f64::NAN);
                (nu * PI * a * a / (2.0 * ch * pq * pq * h)).powf(0.25)
            };
            (p, 8.0 * p * h / (PI * a))
        }
        TimeRelation::Quadratic(ch) => {
            let d = nu * PI * ch;
            let c = c_of_d(d);
            let p = 0.5 * (nu * PI * a.powi(3) * (2.0 / d).sqrt() / (4.0 * c * h)).powf(0.25);
            (p, 8.0 * c * p * h * (d / 2.0).sqrt() / (PI * a))
        }
    };
    OptimizedParams::new(p, q, 1.0 - a / (2.0 * p))
}

/// Ventcel with overlap and unbounded frequencies.
pub fn ventcel_overlap_continuous(coeffs: &Coefficients, bx: &FrequencyBox, l: f64) -> OptimizedParams {
    let a = constant_a(coeffs, bx);
    let nu = coeffs.nu;
    let p = 0.5 * (nu * a.powi(4) / (8.0 * l)).powf(0.2);
    let q = 4.0 * (nu * nu * l.powi(3) / (2.0 * a * a)).powf(0.2);
    OptimizedParams::new(p, q, 1.0 - a / (2.0 * p))
}

/// Ventcel with overlap `L` proportional to `h`.
pub fn ventcel_overlap_discrete(coeffs: &Coefficients, bx: &FrequencyBox, l: f64, relation: TimeRelation) -> OptimizedParams {
    let cont = ventcel_overlap_continuous(coeffs, bx, l);
    let a = constant_a(coeffs, bx);
    let (p, q) = match relation {
        TimeRelation::Quadratic(_) => (cont.p, cont.q),
        TimeRelation::Linear(_) => (cont.p * 2f64.powf(-0.2), cont.q * 2f64.powf(0.6)),
    };
    OptimizedParams::new(p, q, 1.0 - a / (2.0 * p))
}

/// Dispatches to the closed form matching `kind` and `regime`.
pub fn optimized(
    kind: TransmissionKind,
    coeffs: &Coefficients,
    bx: &FrequencyBox,
    h: f64,
    regime: Regime,
) -> Result<OptimizedParams> {
    let rel = regime.relation;
    match (kind, regime.overlap) {
        (TransmissionKind::Dirichlet, _) => {
            Err(Error::NotApplicable("Dirichlet transmission has no free parameters".into()))
        }
        (_, Overlap::Continuous(l) | Overlap::Discrete(l)) if !(l > 0.0) => {
            Err(Error::InvalidParams(format!("overlap must be positive, got {l}")))
        }
        (TransmissionKind::Robin, Overlap::None) => Ok(robin_no_overlap(coeffs, bx, h, rel)),
        (TransmissionKind::Robin, Overlap::Continuous(l)) => Ok(robin_overlap_continuous(coeffs, bx, l)),
        (TransmissionKind::Robin, Overlap::Discrete(l)) => Ok(robin_overlap_discrete(coeffs, bx, l, rel)),
        (TransmissionKind::Ventcel, Overlap::None) => Ok(ventcel_no_overlap(coeffs, bx, h, rel)),
        (TransmissionKind::Ventcel, Overlap::Continuous(l)) => Ok(ventcel_overlap_continuous(coeffs, bx, l)),
        (TransmissionKind::Ventcel, Overlap::Discrete(l)) => Ok(ventcel_overlap_discrete(coeffs, bx, l, rel)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_advection() -> (Coefficients, FrequencyBox) {
        // A = 4 x0 = 4 when k_min = omega_min = 0
        (Coefficients::new(1.0, 1.0, 0.0, 0.0).unwrap(), FrequencyBox::new(0.0, 1e4, 0.0, 1e3).unwrap())
    }

    #[test]
    fn d0_root() {
        let d = d0();
        // companion-matrix root computed independently: 1.5436890126920764;
        // the commonly quoted 1.543679 is off in the fifth decimal
        assert!((d - 1.5436890126920764).abs() < 1e-13);
        assert!(cubic(d).abs() < 1e-12);
        assert!(cubic(1.5) < 0.0 && cubic(1.6) > 0.0);
    }

    #[test]
    fn b_cases() {
        let c = Coefficients::new(1.0, 1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(constant_b(&c, TimeRelation::Linear(0.3)), 2.0 / PI, epsilon = 1e-15);
        let b = constant_b(&c, TimeRelation::Quadratic(0.25));
        assert_relative_eq!(b, (PI / 2.0).sqrt() / PI, epsilon = 1e-14);
        assert_relative_eq!(b, 0.398942, epsilon = 1e-6);
        let b = constant_b(&c, TimeRelation::Quadratic(2.0 / PI));
        let cc = ((2.0 + 5f64.sqrt()) / 5.0).sqrt();
        assert_relative_eq!(b, cc * 2.0 / PI, epsilon = 1e-14);
    }

    #[test]
    fn g_and_t2() {
        assert_relative_eq!(t0(), 1.567618292, epsilon = 1e-9);
        assert!((g0() - 0.3690).abs() < 5e-4);
        // t0 maximizes g
        assert!(g(t0()) > g(t0() - 1e-4) && g(t0()) > g(t0() + 1e-4));
        let q2 = (4.0 - 5f64.sqrt()) / 5.0;
        assert_relative_eq!(g(2.0), q2, epsilon = 1e-15);
        assert_relative_eq!(t2(q2).unwrap(), 2.0, epsilon = 1e-10);
        assert!((g(t2(q2).unwrap()) - q2).abs() < 1e-12);
        let q3 = (6.0 - 10f64.sqrt()) / 10.0;
        assert_relative_eq!(t2(q3).unwrap(), 3.0, epsilon = 1e-10);
        assert!(t2(0.5).is_err());
        assert!(t2(0.0).is_err());
    }

    #[test]
    fn p_of_q_branches() {
        assert!((g1() - 0.3148).abs() < 5e-4);
        assert!((tbar() - 2.5484).abs() < 5e-3);
        assert!((h1(tbar()) - h2(tbar())).abs() < 1e-12);
        assert_relative_eq!(P_of_Q(0.3527864).unwrap(), 1.3527864, epsilon = 1e-12);
        let q3 = (6.0 - 10f64.sqrt()) / 10.0;
        let want = (1.0 + 10f64.sqrt()).sqrt() * (1.0 / 10f64.sqrt() + q3);
        assert_relative_eq!(P_of_Q(q3).unwrap(), want, epsilon = 1e-10);
        assert_relative_eq!(P_of_Q(0.2837722).unwrap(), 1.224100, epsilon = 2e-6);
        assert!(P_of_Q(-1.0).is_err());
        // both branches meet at g1
        let g1 = g1();
        let below = P_of_Q(g1 * (1.0 - 1e-9)).unwrap();
        assert!((below - (1.0 + g1)).abs() < 1e-6);
    }

    #[test]
    fn robin_examples() {
        let (c, bx) = unit_advection();
        let r = robin_no_overlap(&c, &bx, 0.01, TimeRelation::Linear(0.25));
        assert_relative_eq!(r.p, 25.0663, epsilon = 1e-4);
        assert_relative_eq!(r.delta, 0.920211, epsilon = 1e-6);
        assert!(r.valid);
        let r4 = robin_no_overlap(&c, &bx, 0.0025, TimeRelation::Linear(0.25));
        assert_relative_eq!(r4.p / r.p, 2.0, epsilon = 1e-12);

        let heat = Coefficients::new(1.0, 0.0, 0.0, 0.0).unwrap();
        let hb = FrequencyBox::new(1.0, 1e4, 1.0, 1e3).unwrap();
        let r = robin_no_overlap(&heat, &hb, 0.01, TimeRelation::Linear(0.25));
        assert_relative_eq!(r.p, 37.157, epsilon = 1e-3);

        let o = robin_overlap_continuous(&c, &bx, 0.01);
        assert_relative_eq!(o.p, 0.5 * 1600f64.cbrt(), epsilon = 1e-12);
        assert_relative_eq!(o.p, 5.8480, epsilon = 1e-4);
        assert_relative_eq!(o.delta, 0.65801, epsilon = 1e-5);
        let o8 = robin_overlap_continuous(&c, &bx, 0.01 / 8.0);
        assert_relative_eq!(o8.p / o.p, 2.0, epsilon = 1e-12);
        assert_relative_eq!((1.0 - o8.delta) / (1.0 - o.delta), 0.5, epsilon = 1e-12);

        let q = robin_overlap_discrete(&c, &bx, 0.01, TimeRelation::Quadratic(0.25));
        assert_eq!(q, o);
        let l = robin_overlap_discrete(&c, &bx, 0.01, TimeRelation::Linear(0.25));
        assert_relative_eq!(l.p, 4.6416, epsilon = 1e-4);
        assert_relative_eq!(l.p / q.p, 2f64.powf(-1.0 / 3.0), epsilon = 1e-14);
    }

    #[test]
    fn ventcel_examples() {
        let (c, bx) = unit_advection();
        let v = ventcel_no_overlap(&c, &bx, 0.01, TimeRelation::Linear(0.25));
        assert_relative_eq!(v.p, 0.5 * (64.0 * PI / 0.04f64).powf(0.25), epsilon = 1e-13);
        assert_relative_eq!(v.p, 4.2101, epsilon = 1e-4);
        assert_relative_eq!(v.q, 0.026803, epsilon = 1e-6);
        assert_relative_eq!(v.delta, 1.0 - 4.0 / (2.0 * v.p), epsilon = 1e-15);
        assert_relative_eq!(v.delta, 0.52495, epsilon = 1e-5);
        let v16 = ventcel_no_overlap(&c, &bx, 0.01 / 16.0, TimeRelation::Linear(0.25));
        assert_relative_eq!(v16.p / v.p, 2.0, epsilon = 1e-12);

        let o = ventcel_overlap_continuous(&c, &bx, 0.01);
        assert_relative_eq!(o.p, 2.5119, epsilon = 1e-4);
        assert_relative_eq!(o.q, 4.0 * (1e-6f64 / 32.0).powf(0.2), epsilon = 1e-15);
        assert_relative_eq!(o.q, 0.12619, epsilon = 1e-5);
        assert_relative_eq!(o.delta, 0.20379, epsilon = 1e-5);
        let o32 = ventcel_overlap_continuous(&c, &bx, 0.01 / 32.0);
        assert_relative_eq!(o32.p / o.p, 2.0, epsilon = 1e-12);
        assert_relative_eq!(o.q / o32.q, 8.0, epsilon = 1e-12);

        assert_eq!(ventcel_overlap_discrete(&c, &bx, 0.01, TimeRelation::Quadratic(0.25)), o);
        let l = ventcel_overlap_discrete(&c, &bx, 0.01, TimeRelation::Linear(0.25));
        assert_relative_eq!(l.p, 2.1867, epsilon = 1e-4);
        assert_relative_eq!(l.q / o.q, 2f64.powf(0.6), epsilon = 1e-14);
    }

    #[test]
    fn ventcel_large_a_branch_is_continuous_at_switch() {
        // at A C_h / 8 = 1 the two Linear branches coincide: P(1) = 2 and
        // (nu pi A^2 / (2 C_h 4 h))^(1/4) = (nu pi A^3 / (64 h))^(1/4)
        let (c, bx) = unit_advection();
        let a = constant_a(&c, &bx);
        let ch = 8.0 / a;
        let v = ventcel_no_overlap(&c, &bx, 0.01, TimeRelation::Linear(ch));
        let v2 = ventcel_no_overlap(&c, &bx, 0.01, TimeRelation::Linear(ch * (1.0 + 1e-12)));
        assert_relative_eq!(v.p, v2.p, max_relative = 1e-9);
        assert_eq!(P_of_Q(1.0).unwrap(), 2.0);
    }

    #[test]
    fn power_laws_are_exact() {
        let c = Coefficients::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let bx = FrequencyBox::new(PI, 1e4, PI / 1.2, 1e3).unwrap();
        let rel = TimeRelation::Linear(0.25);
        let hs = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        for w in hs.windows(2) {
            let (r0, r1) = (robin_no_overlap(&c, &bx, w[0], rel), robin_no_overlap(&c, &bx, w[1], rel));
            assert_relative_eq!(r1.p / r0.p, 2f64.sqrt(), epsilon = 1e-12);
            let (v0, v1) = (ventcel_no_overlap(&c, &bx, w[0], rel), ventcel_no_overlap(&c, &bx, w[1], rel));
            assert_relative_eq!(v1.p / v0.p, 2f64.powf(0.25), epsilon = 1e-12);
            assert_relative_eq!(v1.q / v0.q, 2f64.powf(-0.75), epsilon = 1e-12);
            let (o0, o1) = (robin_overlap_discrete(&c, &bx, w[0], rel), robin_overlap_discrete(&c, &bx, w[1], rel));
            assert_relative_eq!(o1.p / o0.p, 2f64.powf(1.0 / 3.0), epsilon = 1e-12);
            let (u0, u1) = (ventcel_overlap_discrete(&c, &bx, w[0], rel), ventcel_overlap_discrete(&c, &bx, w[1], rel));
            assert_relative_eq!(u1.p / u0.p, 2f64.powf(0.2), epsilon = 1e-12);
            assert_relative_eq!(u1.q / u0.q, 2f64.powf(-0.6), epsilon = 1e-12);
        }
    }

    #[test]
    fn coarse_grids_are_flagged() {
        let (c, bx) = unit_advection();
        let r = robin_no_overlap(&c, &bx, 10.0, TimeRelation::Linear(0.25));
        assert!(!r.valid);
    }

    #[test]
    fn dispatcher() {
        let (c, bx) = unit_advection();
        let rel = TimeRelation::Linear(0.25);
        let reg = Regime { overlap: Overlap::Discrete(0.02), relation: rel };
        assert_eq!(optimized(TransmissionKind::Robin, &c, &bx, 0.01, reg).unwrap(), robin_overlap_discrete(&c, &bx, 0.02, rel));
        assert!(optimized(TransmissionKind::Dirichlet, &c, &bx, 0.01, reg).is_err());
        let bad = Regime { overlap: Overlap::Continuous(0.0), relation: rel };
        assert!(optimized(TransmissionKind::Ventcel, &c, &bx, 0.01, bad).is_err());
    }
}
