//! Gaussian processes driven by one Wiener path: the linear SDE
//! `dX = C(t)dt + E(t)dW` and the Langevin-type pair `(Z, Ż)` with
//! `Z̈ = (B′/B)Ż + B·K·Ẇ`.
//!
//! Closed-form laws use exact symbolic integrals. Conditional laws divide by
//! `t` (not `t − t0`) and are only meaningful for processes started at 0.

use std::fmt::Write as _;

use crate::coeffs::{CoeffFn, Integrand};
use crate::csvio::fmt17;
use crate::error::{Error, Result};
use crate::ito::{ito_integral, kernel_integral_path};
use crate::paths::{BrownianPath, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLaw {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianLaw {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        // Rounding in a difference of integrals may leave a tiny negative value.
        let scale = mean.abs().max(1.0);
        if variance < -1e-12 * scale || !variance.is_finite() || !mean.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Gaussian law needs a finite nonnegative variance, got {variance}"
            )));
        }
        Ok(Self {
            mean,
            variance: variance.max(0.0),
        })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// `dX_t = C(t)dt + E(t)dW_t`, `X_{t0} ~ N(x0_mean, x0_var)` independent of `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSdeProcess {
    pub drift: CoeffFn,
    pub diffusion: CoeffFn,
    pub x0_mean: f64,
    pub x0_var: f64,
    pub t0: f64,
}

impl LinearSdeProcess {
    pub fn new(drift: CoeffFn, diffusion: CoeffFn, x0_mean: f64, x0_var: f64, t0: f64) -> Result<Self> {
        if !(x0_var >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "initial variance must be nonnegative, got {x0_var}"
            )));
        }
        Ok(Self {
            drift,
            diffusion,
            x0_mean,
            x0_var,
            t0,
        })
    }

    fn check(&self, t: f64) -> Result<()> {
        if !(t >= self.t0) || !t.is_finite() {
            return Err(Error::OutOfInterval { t, t0: self.t0 });
        }
        Ok(())
    }

    pub fn x_law(&self, t: f64) -> Result<GaussianLaw> {
        self.check(t)?;
        let mean = self.x0_mean + self.drift.integrate(self.t0, t)?;
        let var = self.x0_var + self.diffusion.square().integrate(self.t0, t)?;
        GaussianLaw::new(mean, var)
    }

    /// `Cov(X_t, W_t) = ∫_{t0}^t E(s) ds`.
    pub fn x_cov_w(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        self.diffusion.integrate(self.t0, t)
    }

    /// Law of `X_t` given `W_t = w`.
    pub fn x_conditional(&self, t: f64, w: f64) -> Result<GaussianLaw> {
        self.check(t)?;
        if t <= self.t0 || t == 0.0 {
            return Err(Error::DegenerateConditioning { t });
        }
        let int_c = self.drift.integrate(self.t0, t)?;
        let int_e = self.diffusion.integrate(self.t0, t)?;
        let int_e2 = self.diffusion.square().integrate(self.t0, t)?;
        GaussianLaw::new(
            self.x0_mean + int_c + w * int_e / t,
            self.x0_var + int_e2 - int_e * int_e / t,
        )
    }
}

/// Langevin-type pair: `Z_t = z0 + ∫ B̄(s)K(s) dW_s`, `Ż_t = B(t)∫ K dW`,
/// `B̄(s) = ∫_s^t B(r) dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinProcess {
    pub b: CoeffFn,
    pub k: CoeffFn,
    pub z0: f64,
    pub t0: f64,
}

impl LangevinProcess {
    pub fn new(b: CoeffFn, k: CoeffFn, z0: f64, t0: f64) -> Self {
        Self { b, k, z0, t0 }
    }

    /// Reject `B` vanishing anywhere on `[t0, t_end]` (`B′/B` must exist).
    pub fn validate_on(&self, t_end: f64) -> Result<()> {
        if self.b.vanishes_on(self.t0, t_end) {
            return Err(Error::InvalidParameter(format!(
                "B(t) = {} vanishes on [{}, {t_end}]",
                self.b, self.t0
            )));
        }
        Ok(())
    }

    fn check(&self, t: f64) -> Result<()> {
        if !(t >= self.t0) || !t.is_finite() {
            return Err(Error::OutOfInterval { t, t0: self.t0 });
        }
        Ok(())
    }

    /// `B̄` for target time `t`, as a function of `s`.
    pub fn b_bar(&self, t: f64) -> CoeffFn {
        let anti = self.b.antiderivative();
        CoeffFn::Const(anti.eval(t)).minus(&anti)
    }

    fn kernel(&self, t: f64) -> Integrand {
        Integrand::of_factors(&[self.b_bar(t), self.k.clone()])
    }

    fn kernel_squared(&self, t: f64) -> Integrand {
        let bar = self.b_bar(t);
        Integrand::of_factors(&[bar.clone(), self.k.clone(), bar, self.k.clone()])
    }

    pub fn z_law(&self, t: f64) -> Result<GaussianLaw> {
        self.check(t)?;
        GaussianLaw::new(self.z0, self.kernel_squared(t).integrate(self.t0, t)?)
    }

    pub fn zdot_law(&self, t: f64) -> Result<GaussianLaw> {
        self.check(t)?;
        let b = self.b.eval(t);
        GaussianLaw::new(0.0, b * b * self.k.square().integrate(self.t0, t)?)
    }

    pub fn z_cov_w(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        self.kernel(t).integrate(self.t0, t)
    }

    pub fn zdot_cov_w(&self, t: f64) -> Result<f64> {
        self.check(t)?;
        Ok(self.b.eval(t) * self.k.integrate(self.t0, t)?)
    }

    pub fn z_conditional(&self, t: f64, w: f64) -> Result<GaussianLaw> {
        self.check(t)?;
        if t <= self.t0 || t == 0.0 {
            return Err(Error::DegenerateConditioning { t });
        }
        let cov = self.kernel(t).integrate(self.t0, t)?;
        let var = self.kernel_squared(t).integrate(self.t0, t)?;
        GaussianLaw::new(self.z0 + w * cov / t, var - cov * cov / t)
    }

    pub fn zdot_conditional(&self, t: f64, w: f64) -> Result<GaussianLaw> {
        self.check(t)?;
        if t <= self.t0 || t == 0.0 {
            return Err(Error::DegenerateConditioning { t });
        }
        let b = self.b.eval(t);
        let int_k = self.k.integrate(self.t0, t)?;
        let int_k2 = self.k.square().integrate(self.t0, t)?;
        GaussianLaw::new(w * b * int_k / t, b * b * (int_k2 - int_k * int_k / t))
    }
}

/// Values of a scalar process at every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

fn check_start(t0: f64, path: &BrownianPath) -> Result<()> {
    let g = path.grid();
    if (g.t0() - t0).abs() > 1e-12 * t0.abs().max(1.0) {
        return Err(Error::GridMismatch(format!(
            "process starts at {t0} but the path starts at {}",
            g.t0()
        )));
    }
    Ok(())
}

/// `X(tᵢ) = z_init + ∫_{t0}^{tᵢ} C + Σ E(tₖ)ΔWₖ`.
pub fn simulate_x(p: &LinearSdeProcess, path: &BrownianPath, z_init: f64) -> Result<Trajectory> {
    check_start(p.t0, path)?;
    let grid = *path.grid();
    let noise = ito_integral(&p.diffusion, path);
    let values = (0..grid.n_nodes())
        .map(|i| z_init + p.drift.integral(p.t0, grid.node(i)) + noise.values[i])
        .collect();
    Ok(Trajectory { grid, values })
}

/// `(Z, Ż)` along one path; `Z` via the kernel integral at every node.
pub fn simulate_z(p: &LangevinProcess, path: &BrownianPath) -> Result<(Trajectory, Trajectory)> {
    check_start(p.t0, path)?;
    let grid = *path.grid();
    let kernel = kernel_integral_path(&p.b, &p.k, path)?;
    let inner = ito_integral(&p.k, path);
    let z = kernel.values.iter().map(|v| p.z0 + v).collect();
    let zdot = (0..grid.n_nodes())
        .map(|i| p.b.eval(grid.node(i)) * inner.values[i])
        .collect();
    Ok((Trajectory { grid, values: z }, Trajectory { grid, values: zdot }))
}

/// Euler–Maruyama for the system `dZ = Ż dt`, `dŻ = (B′/B)Ż dt + B·K dW`
/// started at `(z0, 0)`; converges to [`simulate_z`] under refinement.
pub fn simulate_z_euler(p: &LangevinProcess, path: &BrownianPath) -> Result<(Trajectory, Trajectory)> {
    check_start(p.t0, path)?;
    let grid = *path.grid();
    p.validate_on(grid.t_end())?;
    let db = p.b.derivative();
    let dt = grid.dt();
    let (mut z, mut zd) = (p.z0, 0.0);
    let mut zs = Vec::with_capacity(grid.n_nodes());
    let mut zds = Vec::with_capacity(grid.n_nodes());
    zs.push(z);
    zds.push(zd);
    for (i, dw) in path.increments().enumerate() {
        let t = grid.node(i);
        let b = p.b.eval(t);
        let next = zd + db.eval(t) / b * zd * dt + b * p.k.eval(t) * dw;
        z += zd * dt;
        zd = next;
        zs.push(z);
        zds.push(zd);
    }
    Ok((Trajectory { grid, values: zs }, Trajectory { grid, values: zds }))
}

/// CSV `t,X`.
pub fn x_csv(x: &Trajectory) -> String {
    let mut out = String::from("t,X\n");
    for (t, v) in x.grid.nodes().zip(&x.values) {
        let _ = writeln!(out, "{},{}", fmt17(t), fmt17(*v));
    }
    out
}

/// CSV `t,Z,Zdot`.
pub fn z_csv(z: &Trajectory, zdot: &Trajectory) -> String {
    let mut out = String::from("t,Z,Zdot\n");
    for ((t, a), b) in z.grid.nodes().zip(&z.values).zip(&zdot.values) {
        let _ = writeln!(out, "{},{},{}", fmt17(t), fmt17(*a), fmt17(*b));
    }
    out
}
