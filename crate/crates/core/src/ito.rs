//! Pathwise Wiener integrals.
//!
//! Stochastic sums use left endpoints (Itô); time integrals use the
//! trapezoid rule.

use crate::coeffs::CoeffFn;
use crate::error::{Error, Result};
use crate::paths::{BrownianPath, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralMethod {
    ItoSum,
    Ibp,
    Trapezoid,
}

/// Running integral over `[t0, tᵢ]` at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub method: IntegralMethod,
}

impl IntegralPath {
    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }
}

/// `Σ f(tᵢ)(W(tᵢ₊₁) − W(tᵢ))`, cumulated per node.
pub fn ito_integral(f: &CoeffFn, path: &BrownianPath) -> IntegralPath {
    let grid = *path.grid();
    let mut values = Vec::with_capacity(grid.n_nodes());
    let mut acc = 0.0;
    values.push(acc);
    for (i, dw) in path.increments().enumerate() {
        acc += f.eval(grid.node(i)) * dw;
        values.push(acc);
    }
    IntegralPath {
        grid,
        values,
        method: IntegralMethod::ItoSum,
    }
}

/// Integration by parts: `∫_{t0}^b f dW = f(b)W(b) − f(t0)W(t0) − ∫ f′(s)W(s) ds`
/// with the time integral by trapezoid.
pub fn ito_integral_ibp(f: &CoeffFn, path: &BrownianPath) -> IntegralPath {
    let grid = *path.grid();
    let df = f.derivative();
    let correction = weighted_time_integral(&df, path);
    let w0 = path.value(0);
    let f0 = f.eval(grid.t0());
    let values = (0..grid.n_nodes())
        .map(|i| f.eval(grid.node(i)) * path.value(i) - f0 * w0 - correction.values[i])
        .collect();
    IntegralPath {
        grid,
        values,
        method: IntegralMethod::Ibp,
    }
}

/// Trapezoid `∫_{t0}^{tᵢ} W(s) ds`.
pub fn time_integral_w(path: &BrownianPath) -> IntegralPath {
    weighted_time_integral(&CoeffFn::Const(1.0), path)
}

/// Trapezoid `∫_{t0}^{tᵢ} g(s)W(s) ds`.
pub fn weighted_time_integral(g: &CoeffFn, path: &BrownianPath) -> IntegralPath {
    let grid = *path.grid();
    let half_dt = 0.5 * grid.dt();
    let mut values = Vec::with_capacity(grid.n_nodes());
    let mut acc = 0.0;
    values.push(acc);
    let mut prev = g.eval(grid.node(0)) * path.value(0);
    for i in 1..grid.n_nodes() {
        let cur = g.eval(grid.node(i)) * path.value(i);
        acc += half_dt * (prev + cur);
        values.push(acc);
        prev = cur;
    }
    IntegralPath {
        grid,
        values,
        method: IntegralMethod::Trapezoid,
    }
}

/// Per-increment weights `B̄(tᵢ)K(tᵢ)` with `B̄(s) = ∫_s^{t_k} B(r) dr`, for
/// the Itô sum of the kernel integral up to node `k`.
pub fn kernel_weights(b: &CoeffFn, k: &CoeffFn, grid: &TimeGrid, target: usize) -> Result<Vec<f64>> {
    if target > grid.n_steps() {
        return Err(Error::InvalidParameter(format!(
            "target node {target} beyond grid with {} steps",
            grid.n_steps()
        )));
    }
    let t = grid.node(target);
    (0..target)
        .map(|i| {
            let s = grid.node(i);
            Ok(b.integrate(s, t)? * k.eval(s))
        })
        .collect()
}

/// Left-point Itô sum of `∫_{t0}^{t} B̄(s)K(s) dW_s` at grid node `target`.
pub fn kernel_integral(b: &CoeffFn, k: &CoeffFn, path: &BrownianPath, target: usize) -> Result<f64> {
    let weights = kernel_weights(b, k, path.grid(), target)?;
    Ok(weights
        .iter()
        .zip(path.increments())
        .map(|(w, dw)| w * dw)
        .sum())
}

/// Kernel integral at every node (`O(n²)`; `B̄` recomputed per target).
pub fn kernel_integral_path(b: &CoeffFn, k: &CoeffFn, path: &BrownianPath) -> Result<IntegralPath> {
    let grid = *path.grid();
    let k_vals: Vec<f64> = (0..grid.n_steps()).map(|i| k.eval(grid.node(i))).collect();
    let dws: Vec<f64> = path.increments().collect();
    let mut values = Vec::with_capacity(grid.n_nodes());
    for target in 0..grid.n_nodes() {
        let t = grid.node(target);
        let mut acc = 0.0;
        for i in 0..target {
            acc += b.integrate(grid.node(i), t)? * k_vals[i] * dws[i];
        }
        values.push(acc);
    }
    Ok(IntegralPath {
        grid,
        values,
        method: IntegralMethod::ItoSum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::sample_brownian;
    use crate::rng::ensemble_seed;
    use rayon::prelude::*;

    fn grid(n: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, n).unwrap()
    }

    fn sample_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
    }

    #[test]
    fn constant_integrand_telescopes() {
        let p = sample_brownian(grid(50), 1);
        let i1 = ito_integral(&CoeffFn::Const(1.0), &p);
        for (a, b) in i1.values.iter().zip(p.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let i0 = ito_integral(&CoeffFn::Const(0.0), &p);
        assert!(i0.values.iter().all(|v| *v == 0.0));
        let ibp = ito_integral_ibp(&CoeffFn::Const(1.0), &p);
        for (a, b) in ibp.values.iter().zip(p.values()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn time_integral_of_linear_path() {
        let g = grid(10);
        let lin = BrownianPath::from_values(g, g.nodes().collect(), 0).unwrap();
        let i = time_integral_w(&lin);
        assert_eq!(i.values[0], 0.0);
        assert!((i.last() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ito_isometry_for_linear_integrand() {
        let g = grid(1000);
        let f = CoeffFn::power(1.0, 1);
        let samples: Vec<f64> = (0..100_000u64)
            .into_par_iter()
            .map(|k| ito_integral(&f, &sample_brownian(g, ensemble_seed(5, k))).last())
            .collect();
        let (m, v) = sample_var(&samples);
        assert!(m.abs() < 3.0 * (1.0 / 3.0 / 1e5f64).sqrt());
        assert!((v / (1.0 / 3.0) - 1.0).abs() < 0.05, "var {v}");
    }

    #[test]
    fn time_integral_variance() {
        let g = grid(1000);
        let samples: Vec<f64> = (0..100_000u64)
            .into_par_iter()
            .map(|k| time_integral_w(&sample_brownian(g, ensemble_seed(6, k))).last())
            .collect();
        let (_, v) = sample_var(&samples);
        assert!((v / (1.0 / 3.0) - 1.0).abs() < 0.05, "var {v}");
    }

    #[test]
    fn ibp_and_ito_sum_converge_together() {
        // Fixed realization, refined four times.
        let f = CoeffFn::power(1.0, 1);
        let mut path = sample_brownian(grid(64), 8);
        let mut gaps = Vec::new();
        for _ in 0..5 {
            gaps.push((ito_integral(&f, &path).last() - ito_integral_ibp(&f, &path).last()).abs());
            path = path.refine(2).unwrap();
        }
        let orders: Vec<f64> = gaps.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        let mean_order = orders.iter().sum::<f64>() / orders.len() as f64;
        assert!(mean_order >= 0.5, "gaps {gaps:?}");
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "gaps {gaps:?}");
    }

    #[test]
    fn ibp_matches_power_expansion() {
        // ∫₀ᵗ sⁿ dW = tⁿW_t − ∫₀ᵗ n sⁿ⁻¹ W_s ds
        let n = 3;
        let p = sample_brownian(grid(400), 21);
        let ibp = ito_integral_ibp(&CoeffFn::power(1.0, n), &p);
        let inner = weighted_time_integral(&CoeffFn::power(f64::from(n), n - 1), &p);
        for i in 0..p.grid().n_nodes() {
            let t = p.grid().node(i);
            let expansion = t.powi(n as i32) * p.value(i) - inner.values[i];
            assert!((ibp.values[i] - expansion).abs() < 1e-13);
        }
        let ito = ito_integral(&CoeffFn::power(1.0, n), &p);
        assert!((ibp.last() - ito.last()).abs() < 0.05);
    }

    #[test]
    fn kernel_integral_examples() {
        let g = grid(1000);
        let one = CoeffFn::Const(1.0);
        let samples: Vec<f64> = (0..100_000u64)
            .into_par_iter()
            .map(|k| kernel_integral(&one, &one, &sample_brownian(g, ensemble_seed(7, k)), 1000).unwrap())
            .collect();
        let (_, v) = sample_var(&samples);
        assert!((v / (1.0 / 3.0) - 1.0).abs() < 0.05, "var {v}");

        let p = sample_brownian(g, 3);
        let e = CoeffFn::exp(1.0, 1.0);
        let ie = ito_integral(&e, &p);
        for target in [0, 1, 250, 1000] {
            let t = g.node(target);
            let z = kernel_integral(&e, &one, &p, target).unwrap();
            let printed = t.exp() * p.value(target) - ie.values[target];
            assert!((z - printed).abs() < 1e-12, "{z} vs {printed}");
        }
        assert_eq!(kernel_integral(&e, &CoeffFn::Const(0.0), &p, 700).unwrap(), 0.0);
        let full = kernel_integral_path(&e, &one, &p).unwrap();
        assert!((full.values[250] - kernel_integral(&e, &one, &p, 250).unwrap()).abs() < 1e-14);
    }
}
