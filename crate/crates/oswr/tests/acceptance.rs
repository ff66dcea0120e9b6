//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not hidden. The process exits 0 unless
//! `OSWR_STRICT=1` is set, in which case any failure exits 1.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use oswr::cli::{compare_closed_form_vs_oracle, fit_groups, fit_loglog, run_one, run_sweep, ExperimentConfig, RowKey, SweepRow};
use oswr::closedform::{self, optimized, Overlap, Regime};
use oswr::oracle::{optimize_robin, optimize_ventcel, OracleResult, Search};
use oswr::problem::{Coefficients, FrequencyBox, GridSpec, TimeRelation, TransmissionKind, TransmissionParams};
use oswr::swr::{decompose, monodomain_reference, swr_solve, InterfaceParams, Scheme, SwrOptions, SwrStatus};

use TransmissionKind::{Dirichlet, Robin, Ventcel};

// Tolerances, pinned.
const D0: (f64, f64) = (1.543679, 1e-5);
const T0: (f64, f64) = (1.567618292, 1e-8);
const G0: (f64, f64) = (0.3690, 5e-4);
const G1: (f64, f64) = (0.3148, 5e-4);
const TBAR: (f64, f64) = (2.5484, 5e-3);
const POWER_LAW_TOL: f64 = 1e-12;
const GAP_FINAL_MAX: f64 = 0.25;
const SPREAD_MAX: f64 = 1e-2;
const RATE_TOL: f64 = 0.05;
const SWR_SLOPE_TOL: f64 = 0.15;
const DECOMP_SLOPE_TOL: f64 = 0.2;
const FIXED_POINT_MAX: f64 = 1e-4;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn line(&mut self, id: usize, name: &str, pass: bool, detail: String, t: Instant) {
        let tag = if pass { "PASS" } else { "FAIL" };
        let s = format!("{tag} [{id}] {name}: {detail} ({:.1}s)", t.elapsed().as_secs_f64());
        println!("{s}");
        self.lines.push((pass, s));
    }
}

fn reference_coeffs() -> Coefficients {
    Coefficients::new(1.0, 1.0, 1.0, 0.0).unwrap()
}

fn within(v: f64, (x, tol): (f64, f64)) -> bool {
    (v - x).abs() <= tol
}

fn constants(r: &mut Report) {
    let t = Instant::now();
    let vals = [
        ("d0", closedform::d0(), D0),
        ("t0", closedform::t0(), T0),
        ("g0", closedform::g0(), G0),
        ("g1", closedform::g1(), G1),
        ("tbar", closedform::tbar(), TBAR),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, v, want) in vals {
        let ok = within(v, want);
        pass &= ok;
        parts.push(format!("{n}={v:.10}{}", if ok { "" } else { " (out of band)" }));
    }
    pass &= t.elapsed().as_secs_f64() < 1.0;
    r.line(1, "constants", pass, parts.join(", "), t);
}

fn power_laws(r: &mut Report) {
    let t = Instant::now();
    let c = reference_coeffs();
    let rel = TimeRelation::Linear(0.25);
    let bx = FrequencyBox::new(PI, PI / 0.0025, PI / 1.2, PI / 0.01).unwrap();
    let regime = Regime { overlap: Overlap::None, relation: rel };
    let mut worst: f64 = 0.0;
    let hs = [1e-2, 5e-3, 2.5e-3];
    let ro: Vec<_> = hs.iter().map(|&h| optimized(Robin, &c, &bx, h, regime).unwrap()).collect();
    let vo: Vec<_> = hs.iter().map(|&h| optimized(Ventcel, &c, &bx, h, regime).unwrap()).collect();
    let ls = [4e-3, 2e-3, 1e-3];
    let unb = FrequencyBox::new(PI, f64::INFINITY, PI / 1.2, f64::INFINITY).unwrap();
    let rl: Vec<_> = ls.iter().map(|&l| closedform::robin_overlap_continuous(&c, &unb, l)).collect();
    let vl: Vec<_> = ls.iter().map(|&l| closedform::ventcel_overlap_continuous(&c, &unb, l)).collect();
    for w in 0..2 {
        worst = worst
            .max((ro[w + 1].p / ro[w].p - 2f64.powf(0.5)).abs())
            .max((vo[w + 1].p / vo[w].p - 2f64.powf(0.25)).abs())
            .max((vo[w + 1].q / vo[w].q - 2f64.powf(-0.75)).abs())
            .max((rl[w + 1].p / rl[w].p - 2f64.powf(1.0 / 3.0)).abs())
            .max((vl[w + 1].p / vl[w].p - 2f64.powf(0.2)).abs());
    }
    let pass = worst <= POWER_LAW_TOL && t.elapsed().as_secs_f64() < 1.0;
    r.line(2, "closed-form power laws", pass, format!("largest ratio error {worst:.2e}"), t);
}

fn regime_name(kind: TransmissionKind, ov: usize) -> String {
    format!("{kind}/{}", if ov == 0 { "L=0".to_string() } else { format!("L={ov}h") })
}

fn oracle_vs_closed(r: &mut Report) {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.grid.h = vec![0.02, 0.01, 0.005];
    cfg.transmission.kind = vec![Robin, Ventcel];
    cfg.decomposition.overlap_cells = vec![0, 2];
    let cfg = cfg.resolve().unwrap();
    let rows = compare_closed_form_vs_oracle(&cfg).unwrap();
    let elapsed = t.elapsed().as_secs_f64();
    let mut pass3 = elapsed < 300.0;
    let mut parts3 = Vec::new();
    let mut pass4 = true;
    let mut worst_spread: f64 = 0.0;
    let mut errors = Vec::new();
    for kind in [Robin, Ventcel] {
        for ov in [0, 2] {
            let g: Vec<_> = rows.iter().filter(|x| x.kind == kind && x.overlap_cells == ov).collect();
            let gaps: Vec<f64> = g.iter().map(|x| x.gap().unwrap_or(f64::NAN)).collect();
            let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
            let ok = decreasing && gaps.last().is_some_and(|&v| v < GAP_FINAL_MAX);
            pass3 &= ok;
            parts3.push(format!(
                "{} gaps [{}]{}",
                regime_name(kind, ov),
                gaps.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", "),
                if ok { "" } else { " x" }
            ));
            for x in &g {
                match x.spread {
                    Some(s) => {
                        worst_spread = worst_spread.max(s);
                        pass4 &= s <= SPREAD_MAX;
                    }
                    None => {
                        pass4 = false;
                        errors.push(x.error.clone().unwrap_or_default());
                    }
                }
            }
        }
    }
    r.line(3, "oracle vs closed form", pass3, parts3.join("; "), t);
    let mut d4 = format!("largest relative spread {worst_spread:.2e}");
    if !errors.is_empty() {
        d4 += &format!(", errors: {}", errors.join(" | "));
    }
    r.line(4, "equioscillation", pass4, d4, t);
}

fn oracle(kind: TransmissionKind, c: &Coefficients, bx: &FrequencyBox, l: f64, start: (f64, f64)) -> OracleResult {
    let mut s = Search::around(start.0, start.1);
    if kind == Robin {
        s.q_range = (0.0, 0.0);
        s.start.1 = 0.0;
        optimize_robin(c, bx, l, &s).unwrap()
    } else {
        optimize_ventcel(c, bx, l, &s).unwrap()
    }
}

fn contraction_rates(r: &mut Report) {
    let t = Instant::now();
    let c = reference_coeffs();
    let rel = TimeRelation::Linear(0.25);
    let mut pass = true;
    let mut parts = Vec::new();
    let hs = [1.6e-3, 8e-4, 4e-4, 2e-4, 1e-4];
    for (kind, want) in [(Robin, 0.5), (Ventcel, 0.25)] {
        let mut gaps = Vec::new();
        for &h in &hs {
            let bx = FrequencyBox::new(PI, PI / rel.dt(h), PI / 1.2, PI / h).unwrap();
            let cf = optimized(kind, &c, &bx, h, Regime { overlap: Overlap::None, relation: rel }).unwrap();
            gaps.push(1.0 - oracle(kind, &c, &bx, 0.0, (cf.p, cf.q)).delta);
        }
        let (s, _) = fit_loglog(&hs, &gaps).unwrap();
        let ok = (s - want).abs() <= RATE_TOL;
        pass &= ok;
        parts.push(format!("{kind} h-slope {s:.3} (want {want}){}", if ok { "" } else { " x" }));
    }
    let ls = [3.2e-3, 1.6e-3, 8e-4, 4e-4, 2e-4];
    let unb = FrequencyBox::new(PI, f64::INFINITY, PI / 1.2, f64::INFINITY).unwrap();
    for (kind, want) in [(Robin, 1.0 / 3.0), (Ventcel, 0.2)] {
        let mut gaps = Vec::new();
        let mut warned = false;
        for &l in &ls {
            let cf = optimized(kind, &c, &unb, l, Regime { overlap: Overlap::Continuous(l), relation: rel }).unwrap();
            let o = oracle(kind, &c, &unb, l, (cf.p, cf.q));
            warned |= !o.warnings.is_empty();
            gaps.push(1.0 - o.delta);
        }
        let (s, _) = fit_loglog(&ls, &gaps).unwrap();
        let ok = (s - want).abs() <= RATE_TOL;
        pass &= ok;
        parts.push(format!(
            "{kind} L-slope {s:.3} (want {want:.3}){}{}",
            if warned { " truncation warning" } else { "" },
            if ok { "" } else { " x" }
        ));
    }
    pass &= t.elapsed().as_secs_f64() < 600.0;
    r.line(5, "asymptotic contraction rates", pass, parts.join("; "), t);
}

fn counts(rows: &[SweepRow], px: usize, py: usize, kind: TransmissionKind, ov: usize, hs: &[f64]) -> Vec<Option<usize>> {
    hs.iter()
        .map(|&h| {
            rows.iter()
                .find(|x| x.h == h && x.key == RowKey { px, py, kind, overlap_cells: ov })
                .and_then(|x| x.iterations)
        })
        .collect()
}

fn fmt_counts(v: &[Option<usize>]) -> String {
    v.iter().map(|n| n.map_or("-".into(), |n| n.to_string())).collect::<Vec<_>>().join("/")
}

fn swr_counts_and_slopes(r: &mut Report) {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.grid.h = vec![0.04, 0.02, 0.01, 0.005];
    cfg.decomposition.subdomains = vec!["2x1".into(), "2x2".into(), "4x4".into()];
    cfg.decomposition.overlap_cells = vec![0, 2];
    cfg.transmission.kind = vec![Robin, Ventcel];
    let cfg = cfg.resolve().unwrap();
    let rows = run_sweep(&cfg).unwrap();

    // Counts at desk scale on two subdomains.
    let hs = [0.04, 0.02, 0.01];
    let mut pass6 = true;
    let mut parts6 = Vec::new();
    for (kind, ov, expected, band) in
        [(Robin, 0, [49.0, 71.0, 97.0], 0.3), (Robin, 2, [12.0, 14.0, 16.0], 0.3), (Ventcel, 0, [13.0, 15.0, 18.0], 0.4)]
    {
        let got = counts(&rows, 2, 1, kind, ov, &hs);
        let ok = got.iter().zip(expected).all(|(n, p)| n.is_some_and(|n| (n as f64 - p).abs() <= band * p));
        pass6 &= ok;
        parts6.push(format!(
            "{} {} vs {}{}",
            regime_name(kind, ov),
            fmt_counts(&got),
            expected.map(|p| p.to_string()).join("/"),
            if ok { "" } else { " x" }
        ));
    }
    r.line(6, "SWR iteration counts", pass6, parts6.join("; "), t);

    // Slopes of iterations against h.
    let fits = fit_groups(&rows);
    let slope = |px, py, kind, ov| {
        fits.iter().find(|f| f.key == RowKey { px, py, kind, overlap_cells: ov }).and_then(|f| f.slope).map(|s| -s)
    };
    let mut pass7 = true;
    let mut parts7 = Vec::new();
    for (kind, ov, want) in [(Robin, 0, 0.5), (Ventcel, 0, 0.25), (Robin, 2, 1.0 / 3.0), (Ventcel, 2, 0.2)] {
        let base = slope(2, 1, kind, ov);
        let mut ok = base.is_some_and(|s| (s - want).abs() <= SWR_SLOPE_TOL);
        let mut s = format!("{} 2x1 {}", regime_name(kind, ov), base.map_or("-".into(), |v| format!("{v:.3}")));
        for (px, py) in [(2, 2), (4, 4)] {
            let v = slope(px, py, kind, ov);
            ok &= matches!((v, base), (Some(v), Some(b)) if (v - b).abs() <= DECOMP_SLOPE_TOL);
            s += &format!(" {px}x{py} {}", v.map_or("-".into(), |v| format!("{v:.3}")));
        }
        pass7 &= ok;
        parts7.push(format!("{s}{}", if ok { "" } else { " x" }));
    }
    let all: Vec<String> = [(2, 1), (2, 2), (4, 4)]
        .iter()
        .flat_map(|&(px, py)| {
            let (rows, hs) = (&rows, &cfg.grid.h);
            [(Robin, 0), (Ventcel, 0), (Robin, 2), (Ventcel, 2)].map(move |(k, ov)| {
                format!("{px}x{py} {} {}", regime_name(k, ov), fmt_counts(&counts(rows, px, py, k, ov, hs)))
            })
        })
        .collect();
    r.line(7, "SWR slopes", pass7, format!("{}; counts {}", parts7.join("; "), all.join(", ")), t);
}

fn dirichlet_divergence(r: &mut Report) {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.transmission.kind = vec![Dirichlet];
    let cfg = cfg.resolve().unwrap();
    let key = RowKey { px: 2, py: 1, kind: Dirichlet, overlap_cells: 0 };
    let (_, run) = run_one(&cfg, 0.02, &key, false).unwrap();
    let (pass, d) = match run.status {
        SwrStatus::MaxIterExceeded { final_residual } => (
            final_residual > 1e-6 && run.log.residuals.len() == 500,
            format!("residual {final_residual:.3e} after {} iterations", run.log.residuals.len()),
        ),
        SwrStatus::Converged => (false, format!("converged in {:?} iterations", run.log.iterations_to_tol)),
    };
    r.line(8, "Dirichlet without overlap does not converge", pass, d, t);
}

fn fixed_point(r: &mut Report) {
    let t = Instant::now();
    let c = reference_coeffs();
    let h = 0.02;
    let g = GridSpec::new(h, TimeRelation::Linear(0.25), 1.2, 1.2, 1.0).unwrap();
    let opts = SwrOptions {
        keep_field: true,
        initial: Some(Arc::new(|x: f64, y: f64| (PI * x / 1.2).sin() * (PI * y / 1.2).sin())),
        source: Some(Arc::new(|x: f64, y: f64, t: f64| 1.0 + x * y * (2.0 * t).cos())),
        ..SwrOptions::default()
    };
    let mono = monodomain_reference(&c, &g, Scheme::Implicit, opts.initial.clone(), opts.source.clone()).unwrap();
    let bx = oswr::problem::default_frequency_box(&g);
    let l = 2.0 * h;
    let cf = optimized(Robin, &c, &bx, h, Regime { overlap: Overlap::Discrete(l), relation: g.relation }).unwrap();
    let params = InterfaceParams::uniform(TransmissionParams::robin(cf.p, l).unwrap());
    let mut pass = true;
    let mut parts = Vec::new();
    for (px, py) in [(2, 1), (2, 2)] {
        let d = decompose(&g, px, py, 2).unwrap();
        let run = swr_solve(&c, &g, &d, &params, Scheme::Implicit, &opts).unwrap();
        let diff = run.field.as_ref().map_or(f64::INFINITY, |f| f.relative_l2_diff(&mono).unwrap());
        let ok = run.status == SwrStatus::Converged && diff <= FIXED_POINT_MAX;
        pass &= ok;
        parts.push(format!("{px}x{py} relative L2 {diff:.2e}"));
    }
    r.line(9, "fixed-point consistency", pass, parts.join(", "), t);
}

fn main() {
    let mut r = Report { lines: Vec::new() };
    constants(&mut r);
    power_laws(&mut r);
    oracle_vs_closed(&mut r);
    contraction_rates(&mut r);
    swr_counts_and_slopes(&mut r);
    dirichlet_divergence(&mut r);
    fixed_point(&mut r);
    let failed = r.lines.iter().filter(|l| !l.0).count();
    println!("acceptance: {} of {} criteria met", r.lines.len() - failed, r.lines.len());
    if failed > 0 && std::env::var("OSWR_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
