//! Method of lines: central differences in space, classical RK4 in time.

use super::fd::{self, FrozenCoeffs};
use super::{Profile, SpatialGrid};
use crate::coeffs::CoeffFn;
use crate::error::{Error, Result};
use crate::field::{FieldTrajectory, Provenance};
use crate::paths::TimeGrid;

/// Default dispersive safety constant in `Δt ≤ c·h³/max|δ|`.
pub const DISPERSIVE_SAFETY: f64 = 0.1;
const DIFFUSIVE_SAFETY: f64 = 0.5;
const ADVECTIVE_SAFETY: f64 = 1.0;

/// `∂_t u = δ∂_zzzu + μ∂_zzu + βu∂_zu + α∂_zu + γu`.
#[derive(Debug, Clone, PartialEq)]
pub struct MolProblem {
    pub delta: CoeffFn,
    pub mu: CoeffFn,
    pub beta: CoeffFn,
    pub alpha: CoeffFn,
    pub gamma: CoeffFn,
}

impl MolProblem {
    pub fn frozen(&self, t: f64) -> FrozenCoeffs {
        FrozenCoeffs {
            delta: self.delta.eval(t),
            mu: self.mu.eval(t),
            beta: self.beta.eval(t),
            alpha: self.alpha.eval(t),
            gamma: self.gamma.eval(t),
        }
    }

    /// Largest admissible RK4 step and the term that limits it. `u_max`
    /// bounds the solution magnitude for the nonlinear advection speed.
    pub fn max_stable_dt(&self, h: f64, t0: f64, t1: f64, u_max: f64) -> (f64, &'static str) {
        let mut best = (f64::INFINITY, "none");
        let d = self.delta.max_abs_on(t0, t1);
        if d > 0.0 {
            best = (DISPERSIVE_SAFETY * h.powi(3) / d, "dispersive");
        }
        let m = self.mu.max_abs_on(t0, t1);
        if m > 0.0 && DIFFUSIVE_SAFETY * h * h / m < best.0 {
            best = (DIFFUSIVE_SAFETY * h * h / m, "diffusive");
        }
        let speed = self.alpha.max_abs_on(t0, t1) + self.beta.max_abs_on(t0, t1) * u_max;
        if speed > 0.0 && ADVECTIVE_SAFETY * h / speed < best.0 {
            best = (ADVECTIVE_SAFETY * h / speed, "advective");
        }
        let g = self.gamma.max_abs_on(t0, t1);
        if g > 0.0 && 2.0 / g < best.0 {
            best = (2.0 / g, "reaction");
        }
        best
    }

    fn u_bound(&self, u0: &[f64], t0: f64, t1: f64) -> f64 {
        let m = u0.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        m * (self.gamma.max_abs_on(t0, t1) * (t1 - t0)).exp()
    }

    /// Fewest RK4 substeps per grid step satisfying the stability bound.
    pub fn substeps_for(&self, initial: &[f64], sgrid: &SpatialGrid, tgrid: &TimeGrid) -> usize {
        let bound = self.u_bound(initial, tgrid.t0(), tgrid.t_end());
        let (max_dt, _) = self.max_stable_dt(sgrid.h(), tgrid.t0(), tgrid.t_end(), bound);
        ((tgrid.dt() / max_dt).ceil() as usize).max(1)
    }

    /// Integrates from nodal data, taking `substeps` RK4 steps per grid step.
    pub fn solve_from(
        &self,
        initial: Vec<f64>,
        sgrid: &SpatialGrid,
        tgrid: &TimeGrid,
        substeps: usize,
    ) -> Result<FieldTrajectory> {
        let n = sgrid.n_points();
        if initial.len() != n {
            return Err(Error::GridMismatch(format!("{} initial values for {n} points", initial.len())));
        }
        let substeps = substeps.max(1);
        let dt = tgrid.dt() / substeps as f64;
        let h = sgrid.h();
        let bound = self.u_bound(&initial, tgrid.t0(), tgrid.t_end());
        let (max_dt, limit) = self.max_stable_dt(h, tgrid.t0(), tgrid.t_end(), bound);
        if dt > max_dt {
            return Err(Error::Stability { dt, max_dt, limit });
        }
        let mut values = Vec::with_capacity(n * tgrid.n_nodes());
        values.extend_from_slice(&initial);
        let mut u = initial;
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..tgrid.n_steps() {
            let base = tgrid.node(i);
            for s in 0..substeps {
                let t = base + s as f64 * dt;
                fd::rhs(&self.frozen(t), &u, h, &mut k1);
                axpy(&u, 0.5 * dt, &k1, &mut tmp);
                let mid = self.frozen(t + 0.5 * dt);
                fd::rhs(&mid, &tmp, h, &mut k2);
                axpy(&u, 0.5 * dt, &k2, &mut tmp);
                fd::rhs(&mid, &tmp, h, &mut k3);
                axpy(&u, dt, &k3, &mut tmp);
                fd::rhs(&self.frozen(t + dt), &tmp, h, &mut k4);
                for j in 0..n {
                    u[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { step: i + 1 });
            }
            values.extend_from_slice(&u);
        }
        FieldTrajectory::new(*tgrid, *sgrid, values, Provenance::Deterministic)
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64], out: &mut [f64]) {
    for ((o, xv), yv) in out.iter_mut().zip(x).zip(y) {
        *o = xv + a * yv;
    }
}

/// One RK4 step per grid step; rejects grids violating the stability bound.
#[allow(clippy::too_many_arguments)]
pub fn mol_solve(
    delta: &CoeffFn,
    mu: &CoeffFn,
    beta: &CoeffFn,
    alpha: &CoeffFn,
    gamma: &CoeffFn,
    phi: &Profile,
    sgrid: &SpatialGrid,
    tgrid: &TimeGrid,
) -> Result<FieldTrajectory> {
    let problem = MolProblem {
        delta: delta.clone(),
        mu: mu.clone(),
        beta: beta.clone(),
        alpha: alpha.clone(),
        gamma: gamma.clone(),
    };
    problem.solve_from(phi.sample(sgrid, tgrid.t0()), sgrid, tgrid, 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det::{traveling_wave, WaveParams};

    fn zero() -> CoeffFn {
        CoeffFn::zero()
    }

    fn one() -> CoeffFn {
        CoeffFn::Const(1.0)
    }

    #[test]
    fn pure_growth() {
        let sg = SpatialGrid::new(0.0, 1.0, 10).unwrap();
        let tg = TimeGrid::new(0.0, 1.0, 100).unwrap();
        let out = mol_solve(&zero(), &zero(), &zero(), &zero(), &one(), &Profile::Constant(0.7), &sg, &tg).unwrap();
        for v in out.last_slice() {
            assert!((v - 0.7 * 1f64.exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn transport_second_order_in_h() {
        let phi = |x: f64| (-x * x).exp();
        let errs: Vec<f64> = [0.2f64, 0.1, 0.05]
            .iter()
            .map(|&h| {
                let n = (16.0 / h).round() as usize + 1;
                let sg = SpatialGrid::new(-8.0, 8.0, n).unwrap();
                let tg = TimeGrid::new(0.0, 1.0, (4.0 / h) as usize).unwrap();
                let p = MolProblem { delta: zero(), mu: zero(), beta: zero(), alpha: one(), gamma: zero() };
                let init: Vec<f64> = sg.nodes().map(phi).collect();
                let out = p.solve_from(init, &sg, &tg, 1).unwrap();
                sg.nodes()
                    .zip(out.last_slice())
                    .map(|(x, u)| (u - phi(x + 1.0)).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn tracks_traveling_wave() {
        let wp = WaveParams::new(1.0, 1.0, 1.0).unwrap();
        let errs: Vec<f64> = [1.0f64, 0.5, 0.25]
            .iter()
            .map(|&h| {
                let n = (300.0 / h).round() as usize + 1;
                let sg = SpatialGrid::new(-150.0, 150.0, n).unwrap();
                let steps = (1.0 / (DISPERSIVE_SAFETY * h * h * h)).ceil() as usize;
                let tg = TimeGrid::new(0.0, 1.0, steps).unwrap();
                let out = mol_solve(&one(), &one(), &one(), &zero(), &zero(), &Profile::TravelingWave(wp), &sg, &tg)
                    .unwrap();
                sg.nodes()
                    .zip(out.last_slice())
                    .map(|(x, u)| (u - traveling_wave(&wp, 1.0, x)).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn rejects_unstable_step() {
        let sg = SpatialGrid::new(0.0, 1.0, 11).unwrap();
        let tg = TimeGrid::new(0.0, 1.0, 10).unwrap();
        let err = mol_solve(&one(), &zero(), &zero(), &zero(), &zero(), &Profile::Constant(1.0), &sg, &tg).unwrap_err();
        match err {
            Error::Stability { max_dt, limit, .. } => {
                assert_eq!(limit, "dispersive");
                assert!((max_dt - 1e-4).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
