//! Deterministic KdV–Burgers profiles: closed-form solutions, a
//! method-of-lines solver, and a finite-difference residual check.

pub mod fd;
pub mod mol;
pub mod residual;

use std::fmt::Write as _;

use crate::csvio::{self, fmt17};
use crate::error::{Error, Result};

pub use mol::{mol_solve, MolProblem};
pub use residual::pde_residual;

/// Uniform spatial grid with `n_points` nodes on `[z_min, z_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    z_min: f64,
    z_max: f64,
    n_points: usize,
}

impl SpatialGrid {
    pub fn new(z_min: f64, z_max: f64, n_points: usize) -> Result<Self> {
        if !(z_min.is_finite() && z_max.is_finite()) || z_min >= z_max {
            return Err(Error::InvalidGrid(format!(
                "spatial interval [{z_min}, {z_max}] must satisfy z_min < z_max"
            )));
        }
        if n_points < 8 {
            return Err(Error::InvalidGrid(format!(
                "spatial grid needs at least 8 points, got {n_points}"
            )));
        }
        Ok(Self { z_min, z_max, n_points })
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    pub fn z_max(&self) -> f64 {
        self.z_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn h(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_points - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j + 1 == self.n_points {
            self.z_max
        } else {
            self.z_min + (self.z_max - self.z_min) * (j as f64 / (self.n_points - 1) as f64)
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|j| self.node(j))
    }

    /// Same endpoints, spacing divided by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.z_min, self.z_max, (self.n_points - 1) * factor + 1)
    }

    /// Same spacing, widened by at least `margin` on each side. Nodes of
    /// `self` are nodes of the result, starting at index `offset`.
    pub fn widened(&self, margin: f64) -> (Self, usize) {
        let h = self.h();
        let k = (margin.max(0.0) / h).ceil() as usize;
        let grid = Self {
            z_min: self.z_min - k as f64 * h,
            z_max: self.z_max + k as f64 * h,
            n_points: self.n_points + 2 * k,
        };
        (grid, k)
    }

    /// Cubic Lagrange interpolation of nodal `values` at `x`; constant
    /// extension outside the grid.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        let n = self.n_points;
        if x <= self.z_min {
            return values[0];
        }
        if x >= self.z_max {
            return values[n - 1];
        }
        let h = self.h();
        let s = (x - self.z_min) / h;
        let i = (s.floor() as usize).min(n - 2);
        let start = i.saturating_sub(1).min(n - 4);
        let xi = s - start as f64;
        let mut acc = 0.0;
        for a in 0..4 {
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    w *= (xi - b as f64) / (a as f64 - b as f64);
                }
            }
            acc += w * values[start + a];
        }
        acc
    }
}

/// Constants of the sech²/tanh traveling front.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    pub delta: f64,
    pub mu_eff: f64,
    pub beta: f64,
}

impl WaveParams {
    pub fn new(delta: f64, mu_eff: f64, beta: f64) -> Result<Self> {
        if delta == 0.0 || beta == 0.0 || !(delta.is_finite() && mu_eff.is_finite() && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "traveling wave needs finite parameters with delta != 0 and beta != 0, got ({delta}, {mu_eff}, {beta})"
            )));
        }
        Ok(Self { delta, mu_eff, beta })
    }

    /// `(−δ, μ, −β)`: the front with the opposite orientation,
    /// `A sech²θ − 2A tanhθ + 2A` with `θ = μx/(10δ) − 6μ³t/(250δ²)`.
    pub fn mirrored(&self) -> Self {
        Self {
            delta: -self.delta,
            mu_eff: self.mu_eff,
            beta: -self.beta,
        }
    }

    pub fn matches(&self, other: &WaveParams, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0);
        close(self.delta, other.delta) && close(self.mu_eff, other.mu_eff) && close(self.beta, other.beta)
    }
}

/// Closed-form front solving `∂_t U = δ∂_xxxU + μ∂_xxU + βU∂_xU`:
/// `U = A sech²θ + 2A tanhθ + 2A`, `A = 3μ²/(25βδ)`,
/// `θ = μx/(10δ) + 6μ³t/(250δ²)`.
pub fn traveling_wave(p: &WaveParams, t: f64, x: f64) -> f64 {
    let (d, m, b) = (p.delta, p.mu_eff, p.beta);
    let amp = 3.0 * m * m / (25.0 * b * d);
    let theta = m / (10.0 * d) * x + 6.0 * m * m * m / (250.0 * d * d) * t;
    let sech = 1.0 / theta.cosh();
    amp * sech * sech + 2.0 * amp * theta.tanh() + 2.0 * amp
}

/// `V(t,x) = 2/(1 + exp(−1 − x − eᵗ))`, solving `∂_tV = eᵗ(∂_xxV + V∂_xV)`.
pub fn logistic_burgers(t: f64, x: f64) -> f64 {
    2.0 / (1.0 + (-1.0 - x - t.exp()).exp())
}

/// Initial data sampled on a spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    pub grid: SpatialGrid,
    pub values: Vec<f64>,
}

impl SampledProfile {
    pub fn new(grid: SpatialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "{} samples for {} grid points",
                values.len(),
                grid.n_points()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("sampled profile contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    /// CSV with header `z,u` on a uniform grid.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        csvio::expect_header(&mut lines, &["z", "u"])?;
        let mut zs = Vec::new();
        let mut us = Vec::new();
        for (k, line) in lines.enumerate() {
            let f = csvio::fields(line);
            if f.len() != 2 {
                return Err(Error::Csv {
                    line: k + 2,
                    msg: format!("expected 2 fields, found {}", f.len()),
                });
            }
            zs.push(csvio::parse_f64(f[0], k + 2)?);
            us.push(csvio::parse_f64(f[1], k + 2)?);
        }
        if zs.len() < 8 {
            return Err(Error::Csv {
                line: zs.len() + 1,
                msg: "sampled profile needs at least 8 rows".into(),
            });
        }
        let grid = SpatialGrid::new(zs[0], *zs.last().unwrap(), zs.len())?;
        for (j, z) in zs.iter().enumerate() {
            if (z - grid.node(j)).abs() > 1e-9 * grid.h() {
                return Err(Error::Csv {
                    line: j + 2,
                    msg: format!("z = {z} breaks the uniform grid"),
                });
            }
        }
        Self::new(grid, us)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,u\n");
        for (z, u) in self.grid.nodes().zip(&self.values) {
            let _ = writeln!(out, "{},{}", fmt17(z), fmt17(*u));
        }
        out
    }
}

/// A deterministic profile: initial data `φ`, and for the closed-form tags
/// also a solution `U(t, x)` of the matching deterministic equation.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    TravelingWave(WaveParams),
    LogisticBurgers,
    Constant(f64),
    Sampled(SampledProfile),
}

impl Profile {
    /// `φ(x)` for a problem starting at `t0`. Traveling waves are
    /// time-translation invariant and start from `θ = μx/(10δ)`; the logistic
    /// front is tied to absolute time through its `eᵗ` coefficients.
    pub fn initial(&self, x: f64, t0: f64) -> f64 {
        match self {
            Profile::TravelingWave(p) => traveling_wave(p, 0.0, x),
            Profile::LogisticBurgers => logistic_burgers(t0, x),
            Profile::Constant(c) => *c,
            Profile::Sampled(s) => s.grid.interpolate(&s.values, x),
        }
    }

    /// Closed-form value at absolute time `t` (sampled profiles are static).
    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Profile::TravelingWave(p) => traveling_wave(p, t, x),
            Profile::LogisticBurgers => logistic_burgers(t, x),
            Profile::Constant(c) => *c,
            Profile::Sampled(s) => s.grid.interpolate(&s.values, x),
        }
    }

    pub fn is_closed_form(&self) -> bool {
        !matches!(self, Profile::Sampled(_))
    }

    pub fn sample(&self, grid: &SpatialGrid, t0: f64) -> Vec<f64> {
        grid.nodes().map(|x| self.initial(x, t0)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> WaveParams {
        WaveParams::new(1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn wave_values() {
        assert_relative_eq!(traveling_wave(&unit(), 0.0, 0.0), 0.36, epsilon = 1e-15);
        assert_relative_eq!(traveling_wave(&unit(), 0.0, 1e4), 0.48, epsilon = 1e-15);
        assert!(traveling_wave(&unit(), 0.0, -1e4).abs() < 1e-15);
        let m = unit().mirrored();
        assert_relative_eq!(traveling_wave(&m, 0.0, 0.0), 0.36, epsilon = 1e-15);
        assert!(traveling_wave(&m, 0.0, 1e4).abs() < 1e-15);
        assert_relative_eq!(traveling_wave(&m, 0.0, -1e4), 0.48, epsilon = 1e-15);
        assert!(WaveParams::new(0.0, 1.0, 1.0).is_err());
        assert!(WaveParams::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn mirrored_front_formula() {
        // A sech²θ − 2A tanhθ + 2A, θ = x/10 − 6t/250 for unit constants.
        let m = unit().mirrored();
        for (t, x) in [(0.0, 3.0), (0.7, -12.0), (2.0, 40.0)] {
            let th: f64 = x / 10.0 - 6.0 * t / 250.0;
            let s = 1.0 / th.cosh();
            let expected = 0.12 * s * s - 0.24 * th.tanh() + 0.24;
            assert_relative_eq!(traveling_wave(&m, t, x), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn logistic_values() {
        assert_relative_eq!(logistic_burgers(0.0, -2.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(logistic_burgers(0.3, 800.0), 2.0);
        assert!(logistic_burgers(0.3, -800.0).abs() < 1e-300);
    }

    #[test]
    fn logistic_initial_condition_identity() {
        for i in 0..=4000 {
            let x = -20.0 + 40.0 * i as f64 / 4000.0;
            let stated = 2.0 / (1.0 + (-2.0 - x).exp());
            assert!((logistic_burgers(0.0, x) - stated).abs() <= 1e-14);
        }
    }

    #[test]
    fn grid_basics() {
        assert!(SpatialGrid::new(0.0, 1.0, 7).is_err());
        assert!(SpatialGrid::new(1.0, 0.0, 10).is_err());
        let g = SpatialGrid::new(-1.0, 1.0, 9).unwrap();
        assert_eq!(g.h(), 0.25);
        assert_eq!(g.refined(2).unwrap().n_points(), 17);
        let (w, k) = g.widened(0.6);
        assert_eq!(k, 3);
        assert_eq!(w.h(), g.h());
        assert_relative_eq!(w.node(k), g.node(0));
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let g = SpatialGrid::new(-2.0, 3.0, 11).unwrap();
        let f = |x: f64| 0.5 * x * x * x - x * x + 2.0;
        let vals: Vec<f64> = g.nodes().map(f).collect();
        for x in [-1.93, -0.2, 0.0, 1.7, 2.99] {
            assert_relative_eq!(g.interpolate(&vals, x), f(x), epsilon = 1e-12);
        }
        assert_eq!(g.interpolate(&vals, -10.0), vals[0]);
        assert_eq!(g.interpolate(&vals, 10.0), vals[10]);
    }

    #[test]
    fn sampled_profile_csv() {
        let g = SpatialGrid::new(0.0, 7.0, 8).unwrap();
        let s = SampledProfile::new(g, (0..8).map(|j| j as f64 * 0.5).collect()).unwrap();
        let back = SampledProfile::from_csv(&s.to_csv()).unwrap();
        assert_eq!(back, s);
        assert_relative_eq!(Profile::Sampled(s).initial(2.5, 0.0), 1.25, epsilon = 1e-14);
    }
}
