//! Exact solutions by composition: a deterministic profile evaluated along
//! space-uniform characteristic processes.
//!
//! All spatial points share one Brownian path, so the characteristics are
//! `z + offset(tᵢ)` with one offset per time node.

use rayon::prelude::*;

use crate::coeffs::CoeffFn;
use crate::det::mol::MolProblem;
use crate::det::{logistic_burgers, traveling_wave, Profile, SpatialGrid, WaveParams};
use crate::error::{Error, Result};
use crate::field::{FieldTrajectory, Provenance};
use crate::ito::ito_integral;
use crate::paths::{BrownianPath, TimeGrid};
use crate::processes::{simulate_x, simulate_z, LangevinProcess, LinearSdeProcess};
use crate::scenario::{MultConvention, NoiseKind, Scenario};

const MATCH_TOL: f64 = 1e-12;

/// `R(t) = exp(∫_{t0}^t γ)`.
pub fn r_factor(gamma: &CoeffFn, t0: f64, t: f64) -> Result<f64> {
    Ok(gamma.integrate(t0, t)?.exp())
}

/// `R` and `1/R` as coefficient functions (zero or constant `γ` only).
fn r_functions(gamma: &CoeffFn, t0: f64) -> Result<(CoeffFn, CoeffFn)> {
    match gamma.normalize().as_constant() {
        Some(0.0) => Ok((CoeffFn::Const(1.0), CoeffFn::Const(1.0))),
        Some(g) => Ok((CoeffFn::exp((-g * t0).exp(), g), CoeffFn::exp((g * t0).exp(), -g))),
        None => Err(Error::Unsupported(format!(
            "additive noise needs a constant gamma so that R and the Langevin coefficients stay closed-form, got {gamma}"
        ))),
    }
}

fn constant_on(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Option<f64> {
    let c = f(a);
    (0..=32)
        .all(|i| {
            let v = f(a + (b - a) * f64::from(i) / 32.0);
            (v - c).abs() <= MATCH_TOL * c.abs().max(1.0)
        })
        .then_some(c)
}

fn matches_fn(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, a: f64, b: f64) -> bool {
    (0..=32).all(|i| {
        let t = a + (b - a) * f64::from(i) / 32.0;
        let (x, y) = (f(t), g(t));
        (x - y).abs() <= MATCH_TOL * x.abs().max(y.abs()).max(1.0)
    })
}

/// Closed-form solution of the deterministic equation for the shifted
/// coefficients `(δ, diffusion, nonlinearity)`, with no drift in `x` and the
/// given growth rate.
#[derive(Debug, Clone, Copy)]
enum Closed {
    Wave(WaveParams),
    Logistic,
    Constant(f64),
}

impl Closed {
    fn eval(&self, t: f64, t0: f64, x: f64, growth: f64) -> f64 {
        match self {
            Closed::Wave(p) => traveling_wave(p, t - t0, x),
            Closed::Logistic => logistic_burgers(t, x),
            Closed::Constant(c) => c * growth,
        }
    }
}

fn find_closed(
    phi: &Profile,
    delta: impl Fn(f64) -> f64,
    diffusion: impl Fn(f64) -> f64,
    nonlinear: impl Fn(f64) -> f64,
    gamma_zero: bool,
    t0: f64,
    t1: f64,
) -> Option<Closed> {
    match phi {
        Profile::Constant(c) => Some(Closed::Constant(*c)),
        Profile::TravelingWave(p) if gamma_zero => {
            let d = constant_on(&delta, t0, t1)?;
            let m = constant_on(&diffusion, t0, t1)?;
            let b = constant_on(&nonlinear, t0, t1)?;
            let here = WaveParams { delta: d, mu_eff: m, beta: b };
            here.matches(p, MATCH_TOL).then_some(Closed::Wave(*p))
        }
        Profile::LogisticBurgers if gamma_zero => {
            let ok = matches_fn(&delta, |_| 0.0, t0, t1)
                && matches_fn(&diffusion, f64::exp, t0, t1)
                && matches_fn(&nonlinear, f64::exp, t0, t1);
            ok.then_some(Closed::Logistic)
        }
        _ => None,
    }
}

fn check_interval(s: &Scenario, grid: &TimeGrid) -> Result<()> {
    let tol = 1e-12 * s.t_end.abs().max(1.0);
    if (grid.t0() - s.t0).abs() > tol || (grid.t_end() - s.t_end).abs() > tol {
        return Err(Error::GridMismatch(format!(
            "scenario runs on [{}, {}] but the path covers [{}, {}]",
            s.t0,
            s.t_end,
            grid.t0(),
            grid.t_end()
        )));
    }
    Ok(())
}

fn expect_kind(s: &Scenario, kind: NoiseKind) -> Result<()> {
    if s.kind != kind {
        return Err(Error::InvalidParameter(format!("scenario has {} noise, expected {kind}", s.kind)));
    }
    Ok(())
}

/// Fills a field row by row (rows in parallel).
fn fill(
    tgrid: &TimeGrid,
    sgrid: &SpatialGrid,
    provenance: Provenance,
    f: impl Fn(usize, f64) -> f64 + Sync,
) -> Result<FieldTrajectory> {
    let n = sgrid.n_points();
    let zs: Vec<f64> = sgrid.nodes().collect();
    let mut values = vec![0.0; n * tgrid.n_nodes()];
    values.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (v, z) in row.iter_mut().zip(&zs) {
            *v = f(i, *z);
        }
    });
    FieldTrajectory::new(*tgrid, *sgrid, values, provenance)
}

/// Method-of-lines profile on a grid widened to cover `z + offset` for every
/// offset; returns the grid and the solution.
fn numeric_profile(
    problem: &MolProblem,
    phi: &Profile,
    sgrid: &SpatialGrid,
    tgrid: &TimeGrid,
    max_offset: f64,
) -> Result<(SpatialGrid, FieldTrajectory)> {
    let (wide, _) = sgrid.widened(max_offset + 3.0 * sgrid.h());
    let init = phi.sample(&wide, tgrid.t0());
    let substeps = problem.substeps_for(&init, &wide, tgrid);
    let field = problem.solve_from(init, &wide, tgrid, substeps)?;
    Ok((wide, field))
}

fn widest(offsets: &[f64]) -> f64 {
    offsets.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

/// `u(t, z) = U(t, X_t(z))` with `dX = α dt + σ dW`, `X_{t0} = z`, and `U`
/// solving `U_t = δU_xxx + (μ − σ²/2)U_xx + βUU_x + γU`.
pub fn solve_advection(s: &Scenario, path: &BrownianPath, sgrid: &SpatialGrid) -> Result<FieldTrajectory> {
    expect_kind(s, NoiseKind::Advection)?;
    let tgrid = *path.grid();
    check_interval(s, &tgrid)?;
    let x = simulate_x(&LinearSdeProcess::new(s.alpha.clone(), s.sigma.clone(), 0.0, 0.0, s.t0)?, path, 0.0)?;
    let offsets = x.values;
    let sig = &s.sigma;
    let diffusion = |t: f64| s.mu.eval(t) - 0.5 * sig.eval(t).powi(2);
    let gamma_zero = s.gamma.is_zero();
    let growth: Vec<f64> = tgrid
        .nodes()
        .map(|t| r_factor(&s.gamma, s.t0, t))
        .collect::<Result<_>>()?;
    if let Some(closed) = find_closed(
        &s.phi,
        |t| s.delta.eval(t),
        diffusion,
        |t| s.beta.eval(t),
        gamma_zero,
        s.t0,
        s.t_end,
    ) {
        return fill(&tgrid, sgrid, Provenance::Exact, |i, z| {
            closed.eval(tgrid.node(i), s.t0, z + offsets[i], growth[i])
        });
    }
    let sigma_sq = sig.product(sig).ok_or_else(|| {
        Error::Unsupported(format!("sigma² of {sig} has no closed form for the numeric profile"))
    })?;
    let problem = MolProblem {
        delta: s.delta.clone(),
        mu: s.mu.minus(&CoeffFn::scale(0.5, sigma_sq)),
        beta: s.beta.clone(),
        alpha: CoeffFn::zero(),
        gamma: s.gamma.clone(),
    };
    let (wide, profile) = numeric_profile(&problem, &s.phi, sgrid, &tgrid, widest(&offsets))?;
    fill(&tgrid, sgrid, Provenance::ExactNumericProfile, |i, z| {
        wide.interpolate(profile.slice(i), z + offsets[i])
    })
}

/// The Langevin pair `(Z, Ż)` of an additive-noise scenario, with
/// `B = βR` and `K = σ/R`, started at `z0 = 0`.
pub fn langevin_pair(s: &Scenario) -> Result<LangevinProcess> {
    let (r, r_inv) = r_functions(&s.gamma, s.t0)?;
    let bb = s
        .beta
        .product(&r)
        .ok_or_else(|| Error::Unsupported(format!("beta·R for beta = {} has no closed form", s.beta)))?;
    let k = s
        .sigma
        .product(&r_inv)
        .ok_or_else(|| Error::Unsupported(format!("sigma/R for sigma = {} has no closed form", s.sigma)))?;
    let lp = LangevinProcess::new(bb, k, 0.0, s.t0);
    lp.validate_on(s.t_end)?;
    Ok(lp)
}

/// `u(t, z) = R(t)(V(t, Z_t) + Ż_t/𝔅(t))` with `R = exp∫γ`, `𝔅 = βR`, the
/// Langevin pair driven by `B = 𝔅`, `K = σ/R`, and `V` solving
/// `V_t = δV_xxx + μV_xx + 𝔅VV_x + αV_x`.
pub fn solve_additive(s: &Scenario, path: &BrownianPath, sgrid: &SpatialGrid) -> Result<FieldTrajectory> {
    expect_kind(s, NoiseKind::Additive)?;
    let tgrid = *path.grid();
    check_interval(s, &tgrid)?;
    let lp = langevin_pair(s)?;
    let r = r_functions(&s.gamma, s.t0)?.0;
    let bb = lp.b.clone();
    let (z, zdot) = simulate_z(&lp, path)?;
    let shift: Vec<f64> = tgrid.nodes().map(|t| s.alpha.integral(s.t0, t)).collect();
    let r_vals: Vec<f64> = tgrid.nodes().map(|t| r.eval(t)).collect();
    let forcing: Vec<f64> = (0..tgrid.n_nodes())
        .map(|i| zdot.values[i] / bb.eval(tgrid.node(i)))
        .collect();
    let offsets = z.values;
    if let Some(closed) = find_closed(
        &s.phi,
        |t| s.delta.eval(t),
        |t| s.mu.eval(t),
        |t| bb.eval(t),
        true,
        s.t0,
        s.t_end,
    ) {
        return fill(&tgrid, sgrid, Provenance::Exact, |i, x| {
            let v = closed.eval(tgrid.node(i), s.t0, x + offsets[i] + shift[i], 1.0);
            r_vals[i] * (v + forcing[i])
        });
    }
    let problem = MolProblem {
        delta: s.delta.clone(),
        mu: s.mu.clone(),
        beta: bb,
        alpha: s.alpha.clone(),
        gamma: CoeffFn::zero(),
    };
    let (wide, profile) = numeric_profile(&problem, &s.phi, sgrid, &tgrid, widest(&offsets))?;
    fill(&tgrid, sgrid, Provenance::ExactNumericProfile, |i, x| {
        r_vals[i] * (wide.interpolate(profile.slice(i), x + offsets[i]) + forcing[i])
    })
}

/// `X_t = ½∫σ² − ∫σ dW` at every node of the path.
pub fn multiplicative_exponent(sigma: &CoeffFn, path: &BrownianPath) -> Result<Vec<f64>> {
    let grid = path.grid();
    let noise = ito_integral(sigma, path);
    let sq = sigma.square();
    (0..grid.n_nodes())
        .map(|i| Ok(0.5 * sq.integrate(grid.t0(), grid.node(i))? - noise.values[i]))
        .collect()
}

/// `u = v·e^{−X}` with `v` solving the linear drift equation; see
/// [`MultConvention`] for the treatment of the spatial variable.
pub fn solve_multiplicative(s: &Scenario, path: &BrownianPath, sgrid: &SpatialGrid) -> Result<FieldTrajectory> {
    expect_kind(s, NoiseKind::Multiplicative)?;
    let tgrid = *path.grid();
    check_interval(s, &tgrid)?;
    let x = multiplicative_exponent(&s.sigma, path)?;
    let problem = MolProblem {
        delta: s.delta.clone(),
        mu: s.mu.clone(),
        beta: CoeffFn::zero(),
        alpha: s.alpha.clone(),
        gamma: s.gamma.clone(),
    };
    match s.convention {
        MultConvention::SpaceUniform => {
            if let Profile::Constant(c) = s.phi {
                let growth: Vec<f64> = tgrid
                    .nodes()
                    .map(|t| r_factor(&s.gamma, s.t0, t))
                    .collect::<Result<_>>()?;
                return fill(&tgrid, sgrid, Provenance::Exact, |i, _| c * growth[i] * (-x[i]).exp());
            }
            let init = s.phi.sample(sgrid, s.t0);
            let substeps = problem.substeps_for(&init, sgrid, &tgrid);
            let v = problem.solve_from(init, sgrid, &tgrid, substeps)?;
            let values = (0..tgrid.n_nodes())
                .flat_map(|i| {
                    let damp = (-x[i]).exp();
                    v.slice(i).iter().map(move |vv| vv * damp)
                })
                .collect();
            FieldTrajectory::new(tgrid, *sgrid, values, Provenance::ExactNumericProfile)
        }
        MultConvention::Literal => {
            let init: Vec<f64> = sgrid.nodes().map(|z| s.phi.initial(z, s.t0) * z.exp()).collect();
            let substeps = problem.substeps_for(&init, sgrid, &tgrid);
            let v = problem.solve_from(init, sgrid, &tgrid, substeps)?;
            let zs: Vec<f64> = sgrid.nodes().collect();
            let values = (0..tgrid.n_nodes())
                .flat_map(|i| {
                    let xi = x[i];
                    v.slice(i).iter().zip(&zs).map(move |(vv, z)| vv * (-z - xi).exp())
                })
                .collect();
            FieldTrajectory::new(tgrid, *sgrid, values, Provenance::ExactNumericProfile)
        }
    }
}

/// Dispatches on the scenario's noise kind.
pub fn solve(s: &Scenario, path: &BrownianPath, sgrid: &SpatialGrid) -> Result<FieldTrajectory> {
    match s.kind {
        NoiseKind::Advection => solve_advection(s, path, sgrid),
        NoiseKind::Additive => solve_additive(s, path, sgrid),
        NoiseKind::Multiplicative => solve_multiplicative(s, path, sgrid),
    }
}
