//! Uniform time grids and seeded Brownian sample paths.

use std::fmt::Write as _;

use crate::csvio::{self, fmt17};
use crate::error::{Error, Result};
use crate::rng::{mix64, NormalStream};

/// Uniform grid `tᵢ = t0 + i·Δt`, `Δt = (t_end − t0)/n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite()) || t0 >= t_end {
            return Err(Error::InvalidGrid(format!(
                "time interval [{t0}, {t_end}] must satisfy t0 < T"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidGrid("n_steps must be at least 1".into()));
        }
        Ok(Self { t0, t_end, n_steps })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t0) / self.n_steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            self.t0 + (self.t_end - self.t0) * (i as f64 / self.n_steps as f64)
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(|i| self.node(i))
    }

    /// Index of the node equal to `t` (to 1e-9 of a step), if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt();
        let i = x.round();
        ((x - i).abs() < 1e-9 && i >= 0.0 && i <= self.n_steps as f64).then_some(i as usize)
    }

    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.t0, self.t_end, self.n_steps * factor)
    }

    /// Same interval as `other`?
    pub fn same_interval(&self, other: &TimeGrid) -> bool {
        let tol = 1e-12 * (self.t_end - self.t0).abs().max(1.0);
        (self.t0 - other.t0).abs() <= tol && (self.t_end - other.t_end).abs() <= tol
    }

    /// `Some(k)` if this grid is `coarse` with every step split into `k`.
    pub fn refinement_factor_of(&self, coarse: &TimeGrid) -> Option<usize> {
        (self.same_interval(coarse) && self.n_steps.is_multiple_of(coarse.n_steps))
            .then(|| self.n_steps / coarse.n_steps)
    }
}

/// A discretized Wiener path with `W(t0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    grid: TimeGrid,
    values: Vec<f64>,
    seed: u64,
}

/// Sample a Brownian path on `grid`. Increments are `√Δt·ξᵢ` with `ξᵢ` drawn
/// in order from the normal stream `(seed, 0)`.
pub fn sample_brownian(grid: TimeGrid, seed: u64) -> BrownianPath {
    let mut normals = NormalStream::new(seed, 0);
    let sd = grid.dt().sqrt();
    let mut values = Vec::with_capacity(grid.n_nodes());
    let mut w = 0.0;
    values.push(w);
    for _ in 0..grid.n_steps {
        w += sd * normals.next_normal();
        values.push(w);
    }
    BrownianPath { grid, values, seed }
}

impl BrownianPath {
    /// Wrap externally supplied values. `values[0]` must be zero.
    pub fn from_values(grid: TimeGrid, values: Vec<f64>, seed: u64) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.n_nodes()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Brownian path must start at 0, got {}",
                values[0]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("path contains non-finite values".into()));
        }
        Ok(Self { grid, values, seed })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Seed that produced the latest values: the sampling seed, or the
    /// bridge seed for refined paths.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn increment(&self, i: usize) -> f64 {
        self.values[i + 1] - self.values[i]
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Split every step into `factor` substeps, filling the new nodes by
    /// Brownian-bridge sampling. Shared nodes keep their values bit-for-bit.
    /// Segment `i` draws from normal stream `(bridge_seed, i)`, where the
    /// bridge seed is derived from `(seed, n_steps, factor)`, so refinement is
    /// reproducible and repeated refinement uses fresh randomness.
    pub fn refine(&self, factor: usize) -> Result<BrownianPath> {
        if factor < 2 {
            return Err(Error::InvalidParameter(format!(
                "refinement factor must be at least 2, got {factor}"
            )));
        }
        let fine = self.grid.refined(factor)?;
        let bridge_seed = mix64(self.seed ^ mix64(((self.grid.n_steps as u64) << 24) ^ factor as u64));
        let delta = self.grid.dt();
        let sub = delta / factor as f64;
        let mut values = Vec::with_capacity(fine.n_nodes());
        for (i, w) in self.values.windows(2).enumerate() {
            let (start, end) = (w[0], w[1]);
            values.push(start);
            let mut normals = NormalStream::new(bridge_seed, i as u64);
            let mut prev = start;
            for k in 1..factor {
                let remaining = delta - (k - 1) as f64 * sub;
                let mean = prev + sub / remaining * (end - prev);
                let var = sub * (remaining - sub) / remaining;
                prev = mean + var.max(0.0).sqrt() * normals.next_normal();
                values.push(prev);
            }
        }
        values.push(*self.values.last().unwrap());
        Ok(BrownianPath {
            grid: fine,
            values,
            seed: bridge_seed,
        })
    }

    /// Keep every `factor`-th node.
    pub fn restrict(&self, factor: usize) -> Result<BrownianPath> {
        if factor == 0 || !self.grid.n_steps.is_multiple_of(factor) {
            return Err(Error::InvalidParameter(format!(
                "cannot restrict {} steps by factor {factor}",
                self.grid.n_steps
            )));
        }
        let grid = TimeGrid::new(self.grid.t0, self.grid.t_end, self.grid.n_steps / factor)?;
        let values = self.values.iter().step_by(factor).copied().collect();
        Ok(BrownianPath {
            grid,
            values,
            seed: self.seed,
        })
    }

    /// Restrict or refine to `target`, which must share the interval and be
    /// related to this grid by an integer factor.
    pub fn on_grid(&self, target: &TimeGrid) -> Result<BrownianPath> {
        if self.grid == *target {
            return Ok(self.clone());
        }
        if let Some(k) = self.grid.refinement_factor_of(target) {
            return self.restrict(k);
        }
        if let Some(k) = target.refinement_factor_of(&self.grid) {
            return self.refine(k);
        }
        Err(Error::GridMismatch(format!(
            "path grid with {} steps is not commensurate with {} steps",
            self.grid.n_steps, target.n_steps
        )))
    }

    /// CSV with header `t,W`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,W\n");
        for (t, w) in self.grid.nodes().zip(&self.values) {
            let _ = writeln!(out, "{},{}", fmt17(t), fmt17(*w));
        }
        out
    }

    pub fn from_csv(text: &str, seed: u64) -> Result<BrownianPath> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        csvio::expect_header(&mut lines, &["t", "W"])?;
        let mut ts = Vec::new();
        let mut ws = Vec::new();
        for (k, line) in lines.enumerate() {
            let lineno = k + 2;
            let f = csvio::fields(line);
            if f.len() != 2 {
                return Err(Error::Csv {
                    line: lineno,
                    msg: format!("expected 2 fields, found {}", f.len()),
                });
            }
            ts.push(csvio::parse_f64(f[0], lineno)?);
            ws.push(csvio::parse_f64(f[1], lineno)?);
        }
        if ts.len() < 2 {
            return Err(Error::Csv {
                line: 2,
                msg: "a path needs at least two rows".into(),
            });
        }
        let grid = TimeGrid::new(ts[0], *ts.last().unwrap(), ts.len() - 1)?;
        for (i, t) in ts.iter().enumerate() {
            if (t - grid.node(i)).abs() > 1e-9 * grid.dt() {
                return Err(Error::Csv {
                    line: i + 2,
                    msg: format!("time {t} breaks the uniform grid"),
                });
            }
        }
        BrownianPath::from_values(grid, ws, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::ensemble_seed;

    fn unit_grid(n: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        let g = unit_grid(10);
        assert_eq!(g.node(10), 1.0);
        assert!(g.nodes().collect::<Vec<_>>().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(g.index_of(0.3), Some(3));
        assert_eq!(g.index_of(0.35), None);
    }

    #[test]
    fn path_starts_at_zero_and_is_reproducible() {
        let g = unit_grid(100);
        let a = sample_brownian(g, 5);
        let b = sample_brownian(g, 5);
        assert_eq!(a.value(0), 0.0);
        let bits = |p: &BrownianPath| p.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(a, sample_brownian(g, 6));
    }

    #[test]
    fn terminal_value_moments() {
        let g = unit_grid(1000);
        let n = 100_000;
        let w1: Vec<f64> = (0..n)
            .map(|k| *sample_brownian(g, ensemble_seed(2024, k)).values().last().unwrap())
            .collect();
        let mean = w1.iter().sum::<f64>() / n as f64;
        let var = w1.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 3.0 * (1.0 / n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn covariance_matches_min() {
        let g = unit_grid(20);
        let n = 100_000usize;
        let probes = [(2usize, 10usize), (5, 5), (10, 20), (4, 16)];
        let paths: Vec<BrownianPath> = (0..n as u64).map(|k| sample_brownian(g, ensemble_seed(99, k))).collect();
        for (i, j) in probes {
            let prods: Vec<f64> = paths.iter().map(|p| p.value(i) * p.value(j)).collect();
            let m = prods.iter().sum::<f64>() / n as f64;
            let sd = (prods.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
            let expected = g.node(i).min(g.node(j));
            assert!((m - expected).abs() < 3.0 * sd / (n as f64).sqrt(), "cov({i},{j}) = {m}");
        }
    }

    #[test]
    fn refine_keeps_shared_nodes() {
        let p = sample_brownian(unit_grid(16), 3);
        let r = p.refine(2).unwrap();
        assert_eq!(r.grid().n_steps(), 32);
        for i in 0..=16 {
            assert_eq!(r.value(2 * i).to_bits(), p.value(i).to_bits());
        }
        assert_eq!(r.restrict(2).unwrap().values(), p.values());
        assert_eq!(p.refine(2).unwrap(), r);
        assert!(p.refine(1).is_err());
        let r4 = p.refine(4).unwrap();
        assert_eq!(r4.restrict(4).unwrap().values(), p.values());
    }

    #[test]
    fn bridge_midpoint_law() {
        let g = unit_grid(4);
        let n = 100_000;
        let resid: Vec<f64> = (0..n)
            .map(|k| {
                let p = sample_brownian(g, ensemble_seed(77, k));
                let r = p.refine(2).unwrap();
                r.value(3) - 0.5 * (p.value(1) + p.value(2))
            })
            .collect();
        let mean = resid.iter().sum::<f64>() / n as f64;
        let var = resid.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected_var = g.dt() / 4.0;
        assert!(mean.abs() < 3.0 * (expected_var / n as f64).sqrt(), "mean {mean}");
        assert!((var / expected_var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn csv_round_trip() {
        let p = sample_brownian(TimeGrid::new(0.0, 2.0, 7).unwrap(), 1);
        let text = p.to_csv();
        assert!(text.starts_with("t,W\n"));
        let back = BrownianPath::from_csv(&text, 1).unwrap();
        assert_eq!(back, p);
        assert!(BrownianPath::from_csv("W,t\n0,0\n1,0.5\n", 0).is_err());
        assert!(BrownianPath::from_csv("t,W\n0,0.1\n1,0.5\n", 0).is_err());
    }
}
