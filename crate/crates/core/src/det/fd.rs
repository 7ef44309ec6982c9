//! Second-order central differences on a uniform grid. Two ghost nodes on
//! each side repeat the edge value (zero-gradient extension).

/// Coefficients of `δ∂_zzz + μ∂_zz + βu∂_z + α∂_z + γ` frozen at one time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrozenCoeffs {
    pub delta: f64,
    pub mu: f64,
    pub beta: f64,
    pub alpha: f64,
    pub gamma: f64,
}

#[inline]
fn at(u: &[f64], j: isize) -> f64 {
    let n = u.len() as isize;
    u[j.clamp(0, n - 1) as usize]
}

/// `(∂_z, ∂_zz, ∂_zzz)` at node `j`.
#[inline]
pub fn derivatives(u: &[f64], j: usize, h: f64) -> (f64, f64, f64) {
    let j = j as isize;
    let (m2, m1, c, p1, p2) = (at(u, j - 2), at(u, j - 1), at(u, j), at(u, j + 1), at(u, j + 2));
    let d1 = (p1 - m1) / (2.0 * h);
    let d2 = (p1 - 2.0 * c + m1) / (h * h);
    let d3 = (p2 - 2.0 * p1 + 2.0 * m1 - m2) / (2.0 * h * h * h);
    (d1, d2, d3)
}

/// Deterministic right-hand side at every node.
pub fn rhs(c: &FrozenCoeffs, u: &[f64], h: f64, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let (d1, d2, d3) = derivatives(u, j, h);
        *o = c.delta * d3 + c.mu * d2 + (c.beta * u[j] + c.alpha) * d1 + c.gamma * u[j];
    }
}

/// `∂_z u` at every node.
pub fn gradient(u: &[f64], h: f64, out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        let j = j as isize;
        *o = (at(u, j + 1) - at(u, j - 1)) / (2.0 * h);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_second_order() {
        // f = sin(x); errors of all three stencils shrink by ~4 when h halves.
        let err = |h: f64| {
            let n = 41;
            let x0 = 1.0 - 20.0 * h;
            let u: Vec<f64> = (0..n).map(|j| (x0 + j as f64 * h).sin()).collect();
            let (d1, d2, d3) = derivatives(&u, 20, h);
            ((d1 - 1f64.cos()).abs(), (d2 + 1f64.sin()).abs(), (d3 + 1f64.cos()).abs())
        };
        let (a, b) = (err(0.1), err(0.05));
        for (coarse, fine) in [(a.0, b.0), (a.1, b.1), (a.2, b.2)] {
            let ratio = coarse / fine;
            assert!((3.8..4.2).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn flat_field_has_zero_rhs_except_growth() {
        let u = vec![2.0; 10];
        let mut out = vec![0.0; 10];
        let c = FrozenCoeffs { delta: 1.0, mu: 1.0, beta: 1.0, alpha: 1.0, gamma: 0.5 };
        rhs(&c, &u, 0.1, &mut out);
        assert!(out.iter().all(|v| (*v - 1.0).abs() < 1e-15));
    }
}
