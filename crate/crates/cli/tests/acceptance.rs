//! One line per acceptance criterion, then a single assertion over all of them.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use skdvb::coeffs::CoeffFn;
use skdvb::processes::{LangevinProcess, LinearSdeProcess};
use skdvb::scenario::presets;
use skdvb::verify::moments::{moment_suite, ProcessSpec};
use skdvb::verify::suite::{example3_identity_checks, residual_checks, wave_residual_checks, SuiteOptions};
use skdvb::verify::{convergence_study, CheckReport, Verdict};

const BIN: &str = env!("CARGO_BIN_EXE_skdvb");

struct Line {
    id: usize,
    ok: bool,
    what: &'static str,
    detail: String,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

/// Every decided report passes and at least one is decided.
fn all_pass(reports: &[CheckReport]) -> bool {
    let decided: Vec<_> = reports.iter().filter(|r| r.verdict != Verdict::Inconclusive).collect();
    !decided.is_empty() && decided.iter().all(|r| r.passed())
}

fn failures(reports: &[CheckReport]) -> String {
    let bad: Vec<String> = reports
        .iter()
        .filter(|r| r.failed())
        .map(|r| format!("{} {} exp {:.4e} obs {:.4e}", r.check, r.quantity, r.expected, r.observed))
        .collect();
    if bad.is_empty() {
        "none failed".into()
    } else {
        bad.join("; ")
    }
}

fn linear_moments() -> Line {
    let start = Instant::now();
    let p = LinearSdeProcess::new(CoeffFn::Const(1.0), CoeffFn::Const(1.0), 0.5, 0.0, 0.0).unwrap();
    let closed = [0.25, 0.5, 1.0].iter().all(|&t| {
        let law = p.x_law(t).unwrap();
        close(law.mean, 0.5 + t) && close(law.variance, t) && close(p.x_cov_w(t).unwrap(), t)
    });
    let reports = moment_suite(&ProcessSpec::Linear(p), &[0.25, 0.5, 1.0], 100_000, 1000, 101).unwrap();
    let elapsed = start.elapsed();
    let unconditional = reports.iter().filter(|r| !r.quantity.starts_with("cond_")).cloned().collect::<Vec<_>>();
    Line {
        id: 1,
        ok: closed && all_pass(&reports) && unconditional.len() == 9 && elapsed < Duration::from_secs(60),
        what: "linear SDE moments: closed form and 1e5-path Monte Carlo within 3 SE",
        detail: format!("closed form {closed}, {}, {:.1?}", failures(&reports), elapsed),
    }
}

fn langevin_moments() -> Line {
    let start = Instant::now();
    let p = LangevinProcess::new(CoeffFn::Const(1.0), CoeffFn::Const(1.0), 0.0, 0.0);
    let closed = close(p.z_law(1.0).unwrap().variance, 1.0 / 3.0)
        && close(p.z_cov_w(1.0).unwrap(), 0.5)
        && close(p.zdot_law(1.0).unwrap().variance, 1.0);
    let reports = moment_suite(&ProcessSpec::Langevin(p), &[0.25, 0.5, 1.0], 100_000, 1000, 202).unwrap();
    let elapsed = start.elapsed();
    let bins_at_one: Vec<_> = reports
        .iter()
        .filter(|r| r.quantity.starts_with("cond_mean") && r.quantity.ends_with("@t=1"))
        .collect();
    let bins_ok = bins_at_one.len() == 6 && bins_at_one.iter().all(|r| r.passed());
    Line {
        id: 2,
        ok: closed && bins_ok && all_pass(&reports) && elapsed < Duration::from_secs(120),
        what: "Langevin pair moments and conditional bins at w = -1, 0, 1",
        detail: format!("closed form {closed}, bins at t=1 {bins_ok}, {}, {:.1?}", failures(&reports), elapsed),
    }
}

fn wave_residual() -> Line {
    let reports = wave_residual_checks(3).unwrap();
    let ratios: Vec<String> = reports.iter().map(|r| format!("{:.3}", r.observed)).collect();
    Line {
        id: 3,
        ok: all_pass(&reports),
        what: "traveling-wave FD residual drops by >= 3.5 per halving over 3 levels",
        detail: format!("min ratios {}", ratios.join(", ")),
    }
}

fn example3_chain() -> Line {
    let reports = example3_identity_checks(None).unwrap();
    let detail = reports
        .iter()
        .map(|r| format!("{} {:.3e}", r.check, r.observed))
        .collect::<Vec<_>>()
        .join(", ");
    Line {
        id: 4,
        ok: reports.len() == 3 && all_pass(&reports),
        what: "exp-coefficient Burgers identity chain (Zdot = e^t W, printed formula to 1e-10)",
        detail,
    }
}

fn oracle_agreement() -> Line {
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["example2_sigma1", "example3"] {
        let cfg = presets::load(name).unwrap();
        let start = Instant::now();
        let t = convergence_study(&cfg.scenario, &cfg.study, cfg.seed.unwrap(), 3).unwrap();
        let elapsed = start.elapsed();
        let steps: Vec<usize> = t.rows.iter().map(|r| r.n_steps).collect();
        let order = t.fitted_order.unwrap_or(f64::NAN);
        ok &= steps == [512, 1024, 2048] && t.monotone() && order >= 0.4 && elapsed < Duration::from_secs(300);
        let errs: Vec<String> = t.errors().iter().map(|e| format!("{e:.2e}")).collect();
        detail.push(format!("{name}: errors [{}] order {order:.2} ({elapsed:.1?})", errs.join(", ")));
    }
    Line {
        id: 5,
        ok,
        what: "exact composition vs Euler-Maruyama: monotone L-inf error at T, order >= 0.4",
        detail: detail.join("; "),
    }
}

fn ito_residuals() -> Line {
    let (reports, studies) = residual_checks(&SuiteOptions::default()).unwrap();
    let detail = studies
        .iter()
        .map(|(n, s)| format!("{n} {:.2}", s.order.unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(", ");
    Line {
        id: 6,
        ok: reports.len() == presets::NAMES.len() && all_pass(&reports),
        what: "Ito residual of every preset decreases; zero-noise presets order >= 1",
        detail: format!("orders {detail}"),
    }
}

fn diagnostics_exist(dir: &Path) -> Line {
    let status = Command::new(BIN)
        .args(["verify", "--paths", "10000", "--out"])
        .arg(dir)
        .output()
        .unwrap();
    let code = status.status.code();
    let mut ok = matches!(code, Some(0) | Some(1));
    for name in ["example1_mu_eff", "multiplicative_derivatives"] {
        for ext in ["csv", "md"] {
            ok &= dir.join("diagnostics").join(format!("{name}.{ext}")).is_file();
        }
    }
    let md = std::fs::read_to_string(dir.join("diagnostics/example1_mu_eff.md")).unwrap_or_default();
    ok &= md.contains("**Finding:** `mu_eff=0.5` satisfies");
    ok &= dir.join("verdicts.csv").is_file();
    Line {
        id: 7,
        ok,
        what: "verify writes the effective-viscosity and derivative-term diagnostic reports",
        detail: format!("verify exit {code:?}"),
    }
}

fn reproducible(dir: &Path) -> Line {
    let run = |sub: &str, seed: &str| {
        let out = dir.join(sub);
        let st = Command::new(BIN)
            .args(["simulate", "--config", "example2_sigma1", "--seed", seed, "--no-svg", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(st.success());
        std::fs::read(out.join("example2_sigma1_field.csv")).unwrap()
    };
    let (a, b, c) = (run("a", "42"), run("b", "42"), run("c", "43"));
    Line {
        id: 8,
        ok: a == b && a != c,
        what: "simulate twice with the same seed gives byte-identical CSV",
        detail: format!("{} bytes, different seed differs: {}", a.len(), a != c),
    }
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let lines = [
        linear_moments(),
        langevin_moments(),
        wave_residual(),
        example3_chain(),
        oracle_agreement(),
        ito_residuals(),
        diagnostics_exist(&tmp.path().join("verify")),
        reproducible(tmp.path()),
    ];
    for l in &lines {
        println!(
            "criterion {}: {} - {} [{}]",
            l.id,
            if l.ok { "PASS" } else { "FAIL" },
            l.what,
            l.detail
        );
    }
    let failed: Vec<usize> = lines.iter().filter(|l| !l.ok).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
