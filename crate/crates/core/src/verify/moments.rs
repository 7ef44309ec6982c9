use std::fmt::Write as _;

use rayon::prelude::*;

use super::{CheckReport, Verdict};
use crate::csvio::fmt17;
use crate::error::{Error, Result};
use crate::ito::kernel_weights;
use crate::paths::{sample_brownian, TimeGrid};
use crate::processes::{GaussianLaw, LangevinProcess, LinearSdeProcess};
use crate::rng::{ensemble_seed, NormalStream};

pub const MIN_PATHS: usize = 10_000;
pub const MIN_BIN_PATHS: usize = 500;
pub const DEFAULT_STEPS: usize = 1000;
/// Half-width of the conditioning bins around `W_t = w`.
pub const BIN_HALF_WIDTH: f64 = 0.02;
pub const CONDITION_POINTS: [f64; 3] = [-1.0, 0.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessSpec {
    Linear(LinearSdeProcess),
    Langevin(LangevinProcess),
}

impl ProcessSpec {
    fn t0(&self) -> f64 {
        match self {
            ProcessSpec::Linear(p) => p.t0,
            ProcessSpec::Langevin(p) => p.t0,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            ProcessSpec::Linear(_) => "linear",
            ProcessSpec::Langevin(_) => "langevin",
        }
    }
}

/// One Monte Carlo estimate beside its closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub t: f64,
    pub quantity: String,
    pub closed_form: f64,
    pub mc_estimate: f64,
    pub std_err: f64,
    /// Paths entering the estimate (bin population for conditional ones).
    pub n: usize,
    pub conditional: bool,
}

impl MomentEstimate {
    pub fn z_score(&self) -> f64 {
        let d = self.mc_estimate - self.closed_form;
        if self.std_err > 0.0 {
            d / self.std_err
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }

    /// 3-SE band, floored at `1e-12` for degenerate laws.
    pub fn report(&self, check: &str) -> CheckReport {
        let band = (3.0 * self.std_err).max(1e-12);
        let quantity = format!("{}@t={}", self.quantity, self.t);
        let r = CheckReport::banded(check, &quantity, self.closed_form, self.mc_estimate, band, self.n);
        if self.conditional && self.n < MIN_BIN_PATHS {
            r.with_verdict(Verdict::Inconclusive)
        } else {
            r
        }
    }
}

/// CSV `t,quantity,closed_form,mc_estimate,std_err,z_score`.
pub fn moment_csv(rows: &[MomentEstimate]) -> String {
    let mut out = String::from("t,quantity,closed_form,mc_estimate,std_err,z_score\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt17(r.t),
            r.quantity,
            fmt17(r.closed_form),
            fmt17(r.mc_estimate),
            fmt17(r.std_err),
            fmt17(r.z_score())
        );
    }
    out
}

struct Sample {
    mean: f64,
    var: f64,
    se_mean: f64,
    se_var: f64,
}

fn sample_stats(x: &[f64]) -> Sample {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in x {
        let d = (v - mean).powi(2);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    Sample {
        mean,
        var: m2,
        se_mean: (m2 / n).sqrt(),
        se_var: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    }
}

/// Sample covariance and its standard error from the centered products.
fn covariance(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let prods: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let s = sample_stats(&prods);
    (s.mean, s.se_mean)
}

/// One simulated component at one probe time.
struct Column<'a> {
    name: &'a str,
    values: Vec<f64>,
    law: GaussianLaw,
    cov_w: f64,
    conditional: Box<dyn Fn(f64) -> Result<GaussianLaw> + 'a>,
}

fn estimate(t: f64, quantity: String, closed_form: f64, mc: f64, se: f64, n: usize, conditional: bool) -> MomentEstimate {
    MomentEstimate {
        t,
        quantity,
        closed_form,
        mc_estimate: mc,
        std_err: se,
        n,
        conditional,
    }
}

fn column_estimates(t: f64, col: &Column<'_>, w: &[f64], out: &mut Vec<MomentEstimate>) -> Result<()> {
    let n = col.values.len();
    let s = sample_stats(&col.values);
    out.push(estimate(t, format!("mean_{}", col.name), col.law.mean, s.mean, s.se_mean, n, false));
    out.push(estimate(t, format!("var_{}", col.name), col.law.variance, s.var, s.se_var, n, false));
    let (cov, se) = covariance(&col.values, w);
    out.push(estimate(t, format!("cov_{}_W", col.name), col.cov_w, cov, se, n, false));
    if t <= 0.0 {
        return Ok(());
    }
    // Within a bin the law is linear in `W`, so the expected mean uses the
    // bin's average `W` and the expected variance adds the bin's spread.
    let slope = col.cov_w / t;
    for &wc in &CONDITION_POINTS {
        let (vals, ws): (Vec<f64>, Vec<f64>) = col
            .values
            .iter()
            .zip(w)
            .filter(|(_, wv)| (**wv - wc).abs() < BIN_HALF_WIDTH)
            .map(|(v, wv)| (*v, *wv))
            .unzip();
        let nb = vals.len();
        let (mc_mean, mc_var, se_mean, se_var, w_bar, w_var) = if nb >= 2 {
            let s = sample_stats(&vals);
            let sw = sample_stats(&ws);
            (s.mean, s.var, s.se_mean, s.se_var, sw.mean, sw.var)
        } else {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN, wc, 0.0)
        };
        let law = (col.conditional)(w_bar)?;
        out.push(estimate(t, format!("cond_mean_{}|W={wc}", col.name), law.mean, mc_mean, se_mean, nb, true));
        out.push(estimate(
            t,
            format!("cond_var_{}|W={wc}", col.name),
            law.variance + slope * slope * w_var,
            mc_var,
            se_var,
            nb,
            true,
        ));
    }
    Ok(())
}

/// Monte Carlo estimates of every closed-form quantity at each probe time.
/// Probe times are snapped to the nearest node of an `n_steps` grid on
/// `[t0, max probe]`; path `p` uses seed `ensemble_seed(seed, p)`.
pub fn moment_estimates(
    spec: &ProcessSpec,
    probe_times: &[f64],
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<MomentEstimate>> {
    if n_paths < MIN_PATHS {
        return Err(Error::InvalidParameter(format!(
            "moment checks need at least {MIN_PATHS} paths, got {n_paths}"
        )));
    }
    let t0 = spec.t0();
    let t_max = probe_times.iter().cloned().fold(f64::NAN, f64::max);
    if probe_times.is_empty() || probe_times.iter().any(|t| !(*t >= t0) || !t.is_finite()) {
        return Err(Error::InvalidParameter(format!("probe times must lie in [{t0}, ∞)")));
    }
    let end = if t_max > t0 { t_max } else { t0 + 1.0 };
    let grid = TimeGrid::new(t0, end, n_steps)?;
    let idx: Vec<usize> = probe_times
        .iter()
        .map(|t| (((t - t0) / grid.dt()).round() as usize).min(n_steps))
        .collect();

    // Per-probe linear functionals of the increments.
    let weights: Vec<Vec<Vec<f64>>> = match spec {
        ProcessSpec::Linear(p) => {
            let e: Vec<f64> = (0..n_steps).map(|i| p.diffusion.eval(grid.node(i))).collect();
            idx.iter().map(|&k| vec![e[..k].to_vec()]).collect()
        }
        ProcessSpec::Langevin(p) => {
            let kv: Vec<f64> = (0..n_steps).map(|i| p.k.eval(grid.node(i))).collect();
            idx.iter()
                .map(|&k| {
                    let bt = p.b.eval(grid.node(k));
                    let zw = kernel_weights(&p.b, &p.k, &grid, k)?;
                    Ok(vec![zw, kv[..k].iter().map(|v| bt * v).collect()])
                })
                .collect::<Result<_>>()?
        }
    };
    let (offsets, x0_sd): (Vec<Vec<f64>>, f64) = match spec {
        ProcessSpec::Linear(p) => (
            idx.iter()
                .map(|&k| Ok(vec![p.x0_mean + p.drift.integrate(t0, grid.node(k))?]))
                .collect::<Result<_>>()?,
            p.x0_var.sqrt(),
        ),
        ProcessSpec::Langevin(p) => (idx.iter().map(|_| vec![p.z0, 0.0]).collect(), 0.0),
    };

    // samples[path][probe] = (components, W)
    let samples: Vec<Vec<(Vec<f64>, f64)>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let s = ensemble_seed(seed, p as u64);
            let path = sample_brownian(grid, s);
            let dw: Vec<f64> = path.increments().collect();
            let x0 = if x0_sd > 0.0 {
                x0_sd * NormalStream::new(s, 1).next_normal()
            } else {
                0.0
            };
            idx.iter()
                .enumerate()
                .map(|(q, &k)| {
                    let comps = weights[q]
                        .iter()
                        .zip(&offsets[q])
                        .map(|(wt, off)| off + x0 + wt.iter().zip(&dw).map(|(a, b)| a * b).sum::<f64>())
                        .collect();
                    (comps, path.value(k))
                })
                .collect()
        })
        .collect();

    let mut out = Vec::new();
    for (q, &k) in idx.iter().enumerate() {
        let t = grid.node(k);
        let w: Vec<f64> = samples.iter().map(|s| s[q].1).collect();
        let comp = |c: usize| samples.iter().map(|s| s[q].0[c]).collect::<Vec<f64>>();
        let columns: Vec<Column<'_>> = match spec {
            ProcessSpec::Linear(p) => vec![Column {
                name: "X",
                values: comp(0),
                law: p.x_law(t)?,
                cov_w: p.x_cov_w(t)?,
                conditional: Box::new(move |w| p.x_conditional(t, w)),
            }],
            ProcessSpec::Langevin(p) => vec![
                Column {
                    name: "Z",
                    values: comp(0),
                    law: p.z_law(t)?,
                    cov_w: p.z_cov_w(t)?,
                    conditional: Box::new(move |w| p.z_conditional(t, w)),
                },
                Column {
                    name: "Zdot",
                    values: comp(1),
                    law: p.zdot_law(t)?,
                    cov_w: p.zdot_cov_w(t)?,
                    conditional: Box::new(move |w| p.zdot_conditional(t, w)),
                },
            ],
        };
        for col in &columns {
            column_estimates(t, col, &w, &mut out)?;
        }
    }
    Ok(out)
}

/// [`moment_estimates`] as 3-SE [`CheckReport`]s named `moments_<kind>`.
/// Conditional bins with fewer than [`MIN_BIN_PATHS`] paths are inconclusive.
pub fn moment_suite(
    spec: &ProcessSpec,
    probe_times: &[f64],
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<CheckReport>> {
    let check = format!("moments_{}", spec.label());
    Ok(moment_estimates(spec, probe_times, n_paths, n_steps, seed)?
        .iter()
        .map(|e| e.report(&check))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::CoeffFn;

    fn unit_linear(e: f64) -> ProcessSpec {
        ProcessSpec::Linear(LinearSdeProcess::new(CoeffFn::Const(1.0), CoeffFn::Const(e), 0.5, 0.0, 0.0).unwrap())
    }

    #[test]
    fn too_few_paths_rejected() {
        assert!(moment_suite(&unit_linear(1.0), &[1.0], 100, 10, 1).is_err());
    }

    #[test]
    fn degenerate_diffusion_has_zero_variance() {
        let rows = moment_estimates(&unit_linear(0.0), &[1.0], MIN_PATHS, 20, 3).unwrap();
        let var = rows.iter().find(|r| r.quantity == "var_X").unwrap();
        assert_eq!(var.closed_form, 0.0);
        assert!(var.mc_estimate.abs() < 1e-20);
        let reports = moment_suite(&unit_linear(0.0), &[1.0], MIN_PATHS, 20, 3).unwrap();
        assert!(reports.iter().find(|r| r.quantity == "var_X@t=1").unwrap().passed());
    }

    #[test]
    fn small_bins_are_inconclusive() {
        let reports = moment_suite(&unit_linear(1.0), &[0.25, 1.0], MIN_PATHS, 40, 5).unwrap();
        let bins: Vec<_> = reports.iter().filter(|r| r.quantity.starts_with("cond_")).collect();
        assert!(!bins.is_empty());
        assert!(bins.iter().all(|r| r.samples >= MIN_BIN_PATHS || r.verdict == Verdict::Inconclusive));
        assert!(bins.iter().any(|r| r.verdict == Verdict::Inconclusive));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = moment_estimates(&unit_linear(1.0), &[0.5], MIN_PATHS, 16, 9).unwrap();
        let b = moment_estimates(&unit_linear(1.0), &[0.5], MIN_PATHS, 16, 9).unwrap();
        assert_eq!(a, b);
        assert!(moment_csv(&a).starts_with("t,quantity,closed_form,mc_estimate,std_err,z_score\n"));
    }

    #[test]
    fn langevin_quantities_present() {
        let spec = ProcessSpec::Langevin(LangevinProcess::new(CoeffFn::Const(1.0), CoeffFn::Const(1.0), 0.0, 0.0));
        let rows = moment_estimates(&spec, &[1.0], MIN_PATHS, 50, 2).unwrap();
        let get = |q: &str| rows.iter().find(|r| r.quantity == q).unwrap().closed_form;
        assert!((get("var_Z") - 1.0 / 3.0).abs() < 1e-14);
        assert!((get("cov_Z_W") - 0.5).abs() < 1e-14);
        assert!((get("var_Zdot") - 1.0).abs() < 1e-14);
    }
}
