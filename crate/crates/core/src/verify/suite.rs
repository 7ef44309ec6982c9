use super::convergence::{convergence_study, ConvergenceTable};
use super::diagnostics::{all_diagnostics, Diagnostic};
use super::moments::{moment_estimates, MomentEstimate, ProcessSpec, DEFAULT_STEPS};
use super::residual::{residual_study, ResidualStudy};
use super::{fitted_order, CheckReport, Verdict};
use crate::coeffs::CoeffFn;
use crate::det::{pde_residual, Profile, WaveParams};
use crate::error::Result;
use crate::ito::ito_integral;
use crate::paths::{sample_brownian, TimeGrid};
use crate::processes::{simulate_z, simulate_z_euler, LangevinProcess, LinearSdeProcess};
use crate::rng::{ensemble_seed, mix64};
use crate::scenario::{presets, StudyGrid};
use crate::spde_exact::solve_additive;

pub const DEFAULT_SEED: u64 = 20_240_521;
pub const PROBE_TIMES: [f64; 3] = [0.25, 0.5, 1.0];
pub const CONVERGENCE_PRESETS: [&str; 5] = [
    "example2_sigma1",
    "example2_sigma_t2",
    "example3",
    "wave_deterministic",
    "additive_deterministic",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub n_paths: usize,
    pub n_steps: usize,
    pub levels: usize,
    /// Overrides every seed in the suite; presets keep their own otherwise.
    pub seed: Option<u64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            n_paths: 100_000,
            n_steps: DEFAULT_STEPS,
            levels: 3,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub reports: Vec<CheckReport>,
    pub moments: Vec<MomentEstimate>,
    pub convergence: Vec<(String, ConvergenceTable)>,
    pub residuals: Vec<(String, ResidualStudy)>,
    pub diagnostics: Vec<Diagnostic>,
}

impl SuiteOutcome {
    pub fn any_failed(&self) -> bool {
        self.reports.iter().any(CheckReport::failed)
    }
}

fn fresh(seed: u64) -> u64 {
    mix64(seed ^ 0xA5A5_5A5A_F00D_BEEF)
}

/// Runs `f(seed)`, and once more with a fresh seed if anything failed;
/// failed reports are replaced by their rerun, tagged `:retry`.
fn with_retry<T>(seed: u64, f: impl Fn(u64) -> Result<(Vec<CheckReport>, T)>) -> Result<(Vec<CheckReport>, T)> {
    let (mut first, extra) = f(seed)?;
    if first.iter().any(CheckReport::failed) {
        let (second, _) = f(fresh(seed))?;
        for (a, b) in first.iter_mut().zip(second) {
            if a.failed() {
                *a = CheckReport {
                    check: format!("{}:retry", b.check),
                    ..b
                };
            }
        }
    }
    Ok((first, extra))
}

/// Moment specs covering every closed-form law: the unit linear SDE, the
/// unit Langevin pair, and the pair with `B = eᵗ`.
pub fn moment_specs() -> Vec<(&'static str, ProcessSpec)> {
    let one = || CoeffFn::Const(1.0);
    vec![
        (
            "moments_linear",
            ProcessSpec::Linear(LinearSdeProcess::new(one(), one(), 0.0, 0.0, 0.0).expect("valid process")),
        ),
        ("moments_langevin", ProcessSpec::Langevin(LangevinProcess::new(one(), one(), 0.0, 0.0))),
        (
            "moments_langevin_exp",
            ProcessSpec::Langevin(LangevinProcess::new(CoeffFn::exp(1.0, 1.0), one(), 0.0, 0.0)),
        ),
    ]
}

pub fn moment_checks(opts: &SuiteOptions) -> Result<(Vec<CheckReport>, Vec<MomentEstimate>)> {
    let base = opts.seed.unwrap_or(DEFAULT_SEED);
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for (k, (name, spec)) in moment_specs().into_iter().enumerate() {
        let (r, est) = with_retry(ensemble_seed(base, k as u64), |seed| {
            let est = moment_estimates(&spec, &PROBE_TIMES, opts.n_paths, opts.n_steps, seed)?;
            Ok((est.iter().map(|e| e.report(name)).collect(), est))
        })?;
        reports.extend(r);
        rows.extend(est);
    }
    Ok((reports, rows))
}

/// Deterministic residual of the exact traveling wave: ratio of successive
/// levels under halving of `h` and `Δt`, for several parameter sets.
pub fn wave_residual_checks(levels: usize) -> Result<Vec<CheckReport>> {
    let grid = StudyGrid {
        z_min: -40.0,
        z_max: 40.0,
        h: 0.4,
        n_steps: 10,
        safety: 1.0,
    };
    let mut out = Vec::new();
    for (d, m, b) in [(1.0, 1.0, 1.0), (0.5, 2.0, -1.5), (-2.0, 1.5, 3.0)] {
        let p = WaveParams::new(d, m, b)?;
        let mut res = Vec::new();
        for k in 0..levels {
            let (tg, sg) = grid.level(0.0, 1.0, k as u32)?;
            let c = CoeffFn::Const;
            res.push(pde_residual(
                &Profile::TravelingWave(p),
                &c(d),
                &c(m),
                &c(b),
                &CoeffFn::zero(),
                &CoeffFn::zero(),
                &sg,
                &tg,
            )?);
        }
        let worst = res.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
        let pass = worst >= 3.5;
        out.push(CheckReport {
            check: format!("wave_fd_residual({d},{m},{b})"),
            quantity: "min_halving_ratio".into(),
            expected: 3.5,
            observed: worst,
            band: f64::INFINITY,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            samples: levels,
        });
    }
    Ok(out)
}

/// Example 3 (`μ = β = eᵗ`, `σ = 1`, `δ = 0`): the Euler–Maruyama system for
/// `Ż` converges to `eᵗW`, the closed form matches it to rounding, and the
/// composed field equals
/// `W + 2/(1 + exp(−1 − z − eᵗ − eᵗW + ∫eˢdW))` on the same path.
pub fn example3_identity_checks(seed: Option<u64>) -> Result<Vec<CheckReport>> {
    let cfg = presets::load("example3")?;
    let seed = seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let b = CoeffFn::exp(1.0, 1.0);
    let lp = LangevinProcess::new(b.clone(), CoeffFn::Const(1.0), 0.0, 0.0);
    let finest = 2048;
    let fine = sample_brownian(TimeGrid::new(0.0, 1.0, finest)?, seed);
    let mut out = Vec::new();

    let mut dts = Vec::new();
    let mut errs = Vec::new();
    for n in [256, 512, 1024, 2048] {
        let path = if n == finest { fine.clone() } else { fine.restrict(finest / n)? };
        let (_, zd) = simulate_z_euler(&lp, &path)?;
        let e = zd
            .values
            .iter()
            .zip(path.grid().nodes().zip(path.values()))
            .map(|(v, (t, w))| (v - t.exp() * w).abs())
            .fold(0.0, f64::max);
        dts.push(path.grid().dt());
        errs.push(e);
    }
    let order = fitted_order(&dts, &errs).unwrap_or(f64::NAN);
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    out.push(CheckReport {
        check: "example3_zdot_euler".into(),
        quantity: "order_max_error".into(),
        expected: 0.5,
        observed: order,
        band: f64::INFINITY,
        verdict: if monotone && order >= 0.5 { Verdict::Pass } else { Verdict::Fail },
        samples: errs.len(),
    });

    let path = fine.restrict(2)?;
    let (_, zd) = simulate_z(&lp, &path)?;
    let closed = zd
        .values
        .iter()
        .zip(path.grid().nodes().zip(path.values()))
        .map(|(v, (t, w))| (v - t.exp() * w).abs())
        .fold(0.0, f64::max);
    out.push(CheckReport::banded("example3_zdot_closed", "max|Zdot-e^tW|", 0.0, closed, 1e-12, path.grid().n_nodes()));

    let u = solve_additive(&cfg.scenario, &path, &cfg.sgrid)?;
    let int_es = ito_integral(&b, &path);
    let mut worst = 0.0f64;
    for (i, t) in path.grid().nodes().enumerate() {
        let w = path.value(i);
        for (j, z) in cfg.sgrid.nodes().enumerate() {
            let printed = w + 2.0 / (1.0 + (-1.0 - z - t.exp() - t.exp() * w + int_es.values[i]).exp());
            worst = worst.max((u.value(i, j) - printed).abs());
        }
    }
    out.push(CheckReport::banded(
        "example3_printed_formula",
        "max|u-printed|",
        0.0,
        worst,
        1e-10,
        path.grid().n_nodes(),
    ));
    Ok(out)
}

fn study_seed(opts: &SuiteOptions, preset_seed: Option<u64>, k: u64) -> u64 {
    match opts.seed {
        Some(s) => ensemble_seed(s, 100 + k),
        None => preset_seed.unwrap_or(k),
    }
}

pub fn convergence_checks(opts: &SuiteOptions) -> Result<(Vec<CheckReport>, Vec<(String, ConvergenceTable)>)> {
    let mut reports = Vec::new();
    let mut tables = Vec::new();
    for (k, name) in CONVERGENCE_PRESETS.iter().enumerate() {
        let cfg = presets::load(name)?;
        let min = if cfg.scenario.is_noise_free() { 1.0 } else { 0.4 };
        let (r, t) = with_retry(study_seed(opts, cfg.seed, k as u64), |seed| {
            let t = convergence_study(&cfg.scenario, &cfg.study, seed, opts.levels)?;
            Ok((vec![t.check(&format!("convergence_{name}"), min)], t))
        })?;
        reports.extend(r);
        tables.push((name.to_string(), t));
    }
    Ok((reports, tables))
}

/// Itô residual of every preset: decreasing across levels, and order at
/// least 1 for the noise-free ones.
pub fn residual_checks(opts: &SuiteOptions) -> Result<(Vec<CheckReport>, Vec<(String, ResidualStudy)>)> {
    let mut reports = Vec::new();
    let mut studies = Vec::new();
    for (k, name) in presets::NAMES.iter().enumerate() {
        let cfg = presets::load(name)?;
        let min = if cfg.scenario.is_noise_free() { 1.0 } else { 0.0 };
        let (r, st) = with_retry(study_seed(opts, cfg.seed, 50 + k as u64), |seed| {
            let st = residual_study(&cfg.scenario, &cfg.study, seed, opts.levels)?;
            Ok((vec![st.check(&format!("residual_{name}"), min)], st))
        })?;
        reports.extend(r);
        studies.push((name.to_string(), st));
    }
    Ok((reports, studies))
}

/// The full default suite, checks merged in declaration order.
pub fn default_suite(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let (mut reports, moments) = moment_checks(opts)?;
    reports.extend(wave_residual_checks(opts.levels)?);
    reports.extend(example3_identity_checks(opts.seed)?);
    let (conv, convergence) = convergence_checks(opts)?;
    reports.extend(conv);
    let (res, residuals) = residual_checks(opts)?;
    reports.extend(res);
    Ok(SuiteOutcome {
        reports,
        moments,
        convergence,
        residuals,
        diagnostics: all_diagnostics(opts.levels)?,
    })
}
