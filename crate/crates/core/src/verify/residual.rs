use std::fmt::Write as _;

use super::{fitted_order, CheckReport, Verdict};
use crate::csvio::fmt17;
use crate::det::fd;
use crate::error::{Error, Result};
use crate::field::FieldTrajectory;
use crate::paths::{sample_brownian, BrownianPath};
use crate::scenario::{NoiseKind, Scenario, StudyGrid};
use crate::spde_exact::solve;

/// Discrete Itô residual `rⁿⱼ = Δu − RHS·Δt − Noise·ΔWₙ` over interior nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualMeasure {
    /// `max_j RMS_n(rⁿⱼ) / Δt^{1/2}`.
    pub normalized: f64,
    /// `max_{j,n} |Σ_{k<n} rᵏⱼ|`.
    pub cumulative: f64,
}

pub fn ito_residual(u: &FieldTrajectory, s: &Scenario, path: &BrownianPath) -> Result<ResidualMeasure> {
    let tg = u.tgrid();
    let factor = path
        .grid()
        .refinement_factor_of(tg)
        .ok_or_else(|| Error::GridMismatch("path grid does not refine the field's time grid".into()))?;
    let coarse = if factor == 1 { path.clone() } else { path.restrict(factor)? };
    let sg = u.sgrid();
    let n = sg.n_points();
    if n < 5 {
        return Err(Error::InvalidGrid("residual needs at least 5 spatial points".into()));
    }
    let (h, dt) = (sg.h(), tg.dt());
    let interior = 2..n - 2;
    let mut sum_sq = vec![0.0; n];
    let mut running = vec![0.0; n];
    let mut cumulative = 0.0f64;
    for i in 0..tg.n_steps() {
        let t = tg.node(i);
        let c = s.frozen(t);
        let sig = s.sigma.eval(t);
        let dw = coarse.increment(i);
        let (cur, next) = (u.slice(i), u.slice(i + 1));
        for j in interior.clone() {
            let (d1, d2, d3) = fd::derivatives(cur, j, h);
            let rhs = c.delta * d3 + c.mu * d2 + (c.beta * cur[j] + c.alpha) * d1 + c.gamma * cur[j];
            let noise = match s.kind {
                NoiseKind::Advection => sig * d1,
                NoiseKind::Additive => sig,
                NoiseKind::Multiplicative => sig * cur[j],
            };
            let r = next[j] - cur[j] - rhs * dt - noise * dw;
            sum_sq[j] += r * r;
            running[j] += r;
            cumulative = cumulative.max(running[j].abs());
        }
    }
    let steps = tg.n_steps() as f64;
    let worst = interior.map(|j| (sum_sq[j] / steps).sqrt()).fold(0.0, f64::max);
    Ok(ResidualMeasure {
        normalized: worst / dt.sqrt(),
        cumulative,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStudy {
    pub n_steps: Vec<usize>,
    pub h: Vec<f64>,
    pub measures: Vec<ResidualMeasure>,
    /// Fitted order of the normalized residual in `Δt`.
    pub order: Option<f64>,
    pub cumulative_order: Option<f64>,
}

impl ResidualStudy {
    pub fn normalized(&self) -> Vec<f64> {
        self.measures.iter().map(|m| m.normalized).collect()
    }

    /// CSV `level,n_steps,h,normalized_residual,cumulative_residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,n_steps,h,normalized_residual,cumulative_residual\n");
        for (k, m) in self.measures.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k},{},{},{},{}",
                self.n_steps[k],
                fmt17(self.h[k]),
                fmt17(m.normalized),
                fmt17(m.cumulative)
            );
        }
        out
    }

    pub fn decreasing(&self) -> bool {
        let v = self.normalized();
        v.windows(2).all(|w| w[1] < w[0]) || v.iter().all(|x| *x == 0.0)
    }

    /// Pass iff the normalized residual decreases at every level and its
    /// fitted order is at least `min_order`.
    pub fn check(&self, name: &str, min_order: f64) -> CheckReport {
        let order = self.order.unwrap_or(if self.normalized().iter().all(|x| *x == 0.0) {
            f64::INFINITY
        } else {
            f64::NAN
        });
        let ok = self.decreasing() && order >= min_order;
        CheckReport {
            check: name.into(),
            quantity: "residual_order".into(),
            expected: min_order,
            observed: order,
            band: f64::INFINITY,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            samples: self.measures.len(),
        }
    }
}

/// Residual of the exact composition under joint `(Δt, h)` refinement on one
/// realization.
pub fn residual_study(s: &Scenario, grid: &StudyGrid, seed: u64, levels: usize) -> Result<ResidualStudy> {
    residual_study_of(s, grid, seed, levels, &|s, p, sg| solve(s, p, sg))
}

pub type FieldSolver<'a> =
    dyn Fn(&Scenario, &BrownianPath, &crate::det::SpatialGrid) -> Result<FieldTrajectory> + 'a;

pub fn residual_study_of(
    s: &Scenario,
    grid: &StudyGrid,
    seed: u64,
    levels: usize,
    solver: &FieldSolver<'_>,
) -> Result<ResidualStudy> {
    if levels < 2 {
        return Err(Error::InvalidParameter("a residual study needs at least 2 levels".into()));
    }
    let (tg0, _) = grid.level(s.t0, s.t_end, 0)?;
    let base = sample_brownian(tg0, seed);
    let mut out = ResidualStudy {
        n_steps: Vec::new(),
        h: Vec::new(),
        measures: Vec::new(),
        order: None,
        cumulative_order: None,
    };
    for k in 0..levels {
        let (tg, sg) = grid.level(s.t0, s.t_end, k as u32)?;
        let path = if k == 0 { base.clone() } else { base.refine(1 << k)? };
        let u = solver(s, &path, &sg)?;
        out.measures.push(ito_residual(&u, s, &path)?);
        out.n_steps.push(tg.n_steps());
        out.h.push(sg.h());
    }
    let dts: Vec<f64> = out.n_steps.iter().map(|n| (s.t_end - s.t0) / *n as f64).collect();
    out.order = fitted_order(&dts, &out.normalized());
    let cum: Vec<f64> = out.measures.iter().map(|m| m.cumulative).collect();
    out.cumulative_order = fitted_order(&dts, &cum);
    Ok(out)
}
