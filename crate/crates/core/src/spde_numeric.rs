//! Euler–Maruyama oracle on a method-of-lines discretization, driven by the
//! same Brownian path as the exact composition.

use crate::det::fd;
use crate::det::SpatialGrid;
use crate::error::{Error, Result};
use crate::field::{FieldTrajectory, Provenance};
use crate::paths::{BrownianPath, TimeGrid};
use crate::scenario::{NoiseKind, Scenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub sgrid: SpatialGrid,
    pub tgrid: TimeGrid,
    /// Safety factor `c ∈ (0, 1]` in the step bounds.
    pub safety: f64,
}

impl OracleConfig {
    pub fn new(sgrid: SpatialGrid, tgrid: TimeGrid, safety: f64) -> Result<Self> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::InvalidParameter(format!("safety factor {safety} is outside (0, 1]")));
        }
        Ok(Self { sgrid, tgrid, safety })
    }

    /// Largest step allowed by `Δt ≤ c·h³/max|δ|` and `Δt ≤ c·h²/(2max|μ|)`.
    pub fn max_dt(&self, s: &Scenario) -> (f64, &'static str) {
        let h = self.sgrid.h();
        let (a, b) = (self.tgrid.t0(), self.tgrid.t_end());
        let mut best = (f64::INFINITY, "none");
        let d = s.delta.max_abs_on(a, b);
        if d > 0.0 {
            best = (self.safety * h.powi(3) / d, "dispersive");
        }
        let m = s.mu.max_abs_on(a, b);
        if m > 0.0 && self.safety * h * h / (2.0 * m) < best.0 {
            best = (self.safety * h * h / (2.0 * m), "diffusive");
        }
        best
    }
}

/// `uⁿ⁺¹ = uⁿ + RHS(uⁿ, tₙ)Δt + Noise(uⁿ, tₙ)ΔWₙ` on `cfg.tgrid`, with
/// increments aggregated from a path whose grid refines `cfg.tgrid`.
pub fn em_solve(s: &Scenario, path: &BrownianPath, cfg: &OracleConfig) -> Result<FieldTrajectory> {
    let tgrid = cfg.tgrid;
    let factor = path.grid().refinement_factor_of(&tgrid).ok_or_else(|| {
        Error::GridMismatch(format!(
            "path grid with {} steps does not refine the oracle grid with {} steps",
            path.grid().n_steps(),
            tgrid.n_steps()
        ))
    })?;
    let coarse = if factor == 1 { path.clone() } else { path.restrict(factor)? };
    let dt = tgrid.dt();
    let (max_dt, limit) = cfg.max_dt(s);
    if dt > max_dt * (1.0 + 1e-12) {
        return Err(Error::Stability { dt, max_dt, limit });
    }
    let sgrid = cfg.sgrid;
    let n = sgrid.n_points();
    let h = sgrid.h();
    let mut u = s.phi.sample(&sgrid, s.t0);
    let mut values = Vec::with_capacity(n * tgrid.n_nodes());
    values.extend_from_slice(&u);
    let mut rhs = vec![0.0; n];
    let mut grad = vec![0.0; n];
    for i in 0..tgrid.n_steps() {
        let t = tgrid.node(i);
        let dw = coarse.increment(i);
        let sig = s.sigma.eval(t);
        fd::rhs(&s.frozen(t), &u, h, &mut rhs);
        match s.kind {
            NoiseKind::Advection => {
                fd::gradient(&u, h, &mut grad);
                for j in 0..n {
                    u[j] += rhs[j] * dt + sig * grad[j] * dw;
                }
            }
            NoiseKind::Additive => {
                for j in 0..n {
                    u[j] += rhs[j] * dt + sig * dw;
                }
            }
            NoiseKind::Multiplicative => {
                for j in 0..n {
                    u[j] += rhs[j] * dt + sig * u[j] * dw;
                }
            }
        }
        if u.iter().any(|v| !v.is_finite() || v.abs() > 1e300) {
            return Err(Error::NonFinite { step: i + 1 });
        }
        values.extend_from_slice(&u);
    }
    FieldTrajectory::new(tgrid, sgrid, values, Provenance::Oracle)
}

/// Space-time and per-slice distances between two fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    /// `max |a − b|` over all nodes.
    pub linf: f64,
    /// `(Δt·h·Σ|a − b|²)^{1/2}`.
    pub l2: f64,
    /// `max_j |a − b|` per time node.
    pub slice_linf: Vec<f64>,
    /// `(h·Σ_j|a − b|²)^{1/2}` per time node.
    pub slice_l2: Vec<f64>,
}

impl ErrorReport {
    pub fn final_linf(&self) -> f64 {
        *self.slice_linf.last().unwrap()
    }

    pub fn final_l2(&self) -> f64 {
        *self.slice_l2.last().unwrap()
    }
}

pub fn compare(a: &FieldTrajectory, b: &FieldTrajectory) -> Result<ErrorReport> {
    if !a.same_grids(b) {
        return Err(Error::GridMismatch("compared fields live on different grids".into()));
    }
    let h = a.sgrid().h();
    let dt = a.tgrid().dt();
    let mut slice_linf = Vec::with_capacity(a.tgrid().n_nodes());
    let mut slice_l2 = Vec::with_capacity(a.tgrid().n_nodes());
    let mut total = 0.0;
    for i in 0..a.tgrid().n_nodes() {
        let (mut m, mut sq) = (0.0f64, 0.0);
        for (x, y) in a.slice(i).iter().zip(b.slice(i)) {
            let d = (x - y).abs();
            m = m.max(d);
            sq += d * d;
        }
        slice_linf.push(m);
        slice_l2.push((h * sq).sqrt());
        total += sq;
    }
    Ok(ErrorReport {
        linf: slice_linf.iter().copied().fold(0.0, f64::max),
        l2: (dt * h * total).sqrt(),
        slice_linf,
        slice_l2,
    })
}
