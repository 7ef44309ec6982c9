use super::{Profile, SpatialGrid};
use crate::coeffs::CoeffFn;
use crate::error::{Error, Result};
use crate::paths::TimeGrid;

/// Max over interior nodes of `|∂_tU − (δU_zzz + μU_zz + βUU_z + αU_z + γU)|`,
/// all derivatives by second-order central differences of the closed form.
#[allow(clippy::too_many_arguments)]
pub fn pde_residual(
    profile: &Profile,
    delta: &CoeffFn,
    mu: &CoeffFn,
    beta: &CoeffFn,
    alpha: &CoeffFn,
    gamma: &CoeffFn,
    sgrid: &SpatialGrid,
    tgrid: &TimeGrid,
) -> Result<f64> {
    if !profile.is_closed_form() {
        return Err(Error::Unsupported(
            "pde_residual needs a closed-form profile; sampled profiles cannot be evaluated off-grid".into(),
        ));
    }
    if tgrid.n_steps() < 2 {
        return Err(Error::InvalidGrid("pde_residual needs at least 2 time steps".into()));
    }
    let h = sgrid.h();
    let dt = tgrid.dt();
    let n = sgrid.n_points();
    let row = |t: f64| -> Vec<f64> { sgrid.nodes().map(|x| profile.eval(t, x)).collect() };
    let mut prev = row(tgrid.node(0));
    let mut cur = row(tgrid.node(1));
    let mut worst = 0.0f64;
    for i in 1..tgrid.n_steps() {
        let next = row(tgrid.node(i + 1));
        let t = tgrid.node(i);
        let (d, m, b, a, g) = (delta.eval(t), mu.eval(t), beta.eval(t), alpha.eval(t), gamma.eval(t));
        for j in 2..n - 2 {
            let ut = (next[j] - prev[j]) / (2.0 * dt);
            let d1 = (cur[j + 1] - cur[j - 1]) / (2.0 * h);
            let d2 = (cur[j + 1] - 2.0 * cur[j] + cur[j - 1]) / (h * h);
            let d3 = (cur[j + 2] - 2.0 * cur[j + 1] + 2.0 * cur[j - 1] - cur[j - 2]) / (2.0 * h * h * h);
            let rhs = d * d3 + m * d2 + (b * cur[j] + a) * d1 + g * cur[j];
            worst = worst.max((ut - rhs).abs());
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(worst)
}
