use std::fmt::Write as _;

use super::{fitted_order, CheckReport, Verdict};
use crate::csvio::fmt17;
use crate::det::SpatialGrid;
use crate::error::{Error, Result};
use crate::field::FieldTrajectory;
use crate::paths::{sample_brownian, BrownianPath, TimeGrid};
use crate::scenario::{Scenario, StudyGrid};
use crate::spde_exact::solve;
use crate::spde_numeric::{compare, em_solve, OracleConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRow {
    pub level: usize,
    pub n_steps: usize,
    pub h: f64,
    /// `None` when a solver failed at this level.
    pub error_linf: Option<f64>,
    pub error_l2: Option<f64>,
    /// Order against the previous level, in `Δt`.
    pub pairwise_order: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<LevelRow>,
    /// Least-squares order of the final-time L∞ error in `Δt`.
    pub fitted_order: Option<f64>,
}

impl ConvergenceTable {
    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error_linf.unwrap_or(f64::NAN)).collect()
    }

    /// Every level succeeded and the error never grows.
    pub fn monotone(&self) -> bool {
        let e = self.errors();
        e.iter().all(|v| v.is_finite()) && e.windows(2).all(|w| w[1] <= w[0])
    }

    /// CSV `level,n_steps,h,error_Linf,error_L2,estimated_order`; failed
    /// levels leave the error fields empty.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
        let mut out = String::from("level,n_steps,h,error_Linf,error_L2,estimated_order\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.level,
                r.n_steps,
                fmt17(r.h),
                opt(r.error_linf),
                opt(r.error_l2),
                opt(r.pairwise_order)
            );
        }
        out
    }

    /// Pass iff monotone with fitted order at least `min_order`.
    pub fn check(&self, name: &str, min_order: f64) -> CheckReport {
        let order = self.fitted_order.unwrap_or(f64::NAN);
        let ok = self.monotone() && order >= min_order;
        CheckReport {
            check: name.into(),
            quantity: "order_linf_T".into(),
            expected: min_order,
            observed: order,
            band: f64::INFINITY,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            samples: self.rows.len(),
        }
    }
}

/// Reference solver signature for [`convergence_study_with`].
pub type Solver<'a> = dyn Fn(&Scenario, &BrownianPath, &TimeGrid, &SpatialGrid, f64) -> Result<FieldTrajectory> + Sync + 'a;

/// Exact composition against the Euler–Maruyama oracle on one realization,
/// refined `levels` times: `n_steps` doubles and `h` halves per level.
pub fn convergence_study(s: &Scenario, grid: &StudyGrid, seed: u64, levels: usize) -> Result<ConvergenceTable> {
    let oracle = |s: &Scenario, path: &BrownianPath, tg: &TimeGrid, sg: &SpatialGrid, safety: f64| {
        em_solve(s, path, &OracleConfig::new(*sg, *tg, safety)?)
    };
    convergence_study_with(s, grid, seed, levels, &oracle)
}

pub fn convergence_study_with(
    s: &Scenario,
    grid: &StudyGrid,
    seed: u64,
    levels: usize,
    reference: &Solver<'_>,
) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(Error::InvalidParameter(format!("a convergence study needs at least 3 levels, got {levels}")));
    }
    let (tg0, _) = grid.level(s.t0, s.t_end, 0)?;
    let base = sample_brownian(tg0, seed);
    let mut rows = Vec::with_capacity(levels);
    for k in 0..levels {
        let (tg, sg) = grid.level(s.t0, s.t_end, k as u32)?;
        let path = if k == 0 { base.clone() } else { base.refine(1 << k)? };
        let outcome = solve(s, &path, &sg)
            .and_then(|exact| reference(s, &path, &tg, &sg, grid.safety).and_then(|r| compare(&exact, &r)));
        let (linf, l2, status) = match outcome {
            Ok(e) => (Some(e.final_linf()), Some(e.final_l2()), "ok".to_string()),
            Err(e) => (None, None, format!("failed: {e}")),
        };
        rows.push(LevelRow {
            level: k,
            n_steps: tg.n_steps(),
            h: sg.h(),
            error_linf: linf,
            error_l2: l2,
            pairwise_order: None,
            status,
        });
    }
    for k in 1..rows.len() {
        if let (Some(a), Some(b)) = (rows[k - 1].error_linf, rows[k].error_linf) {
            if a > 0.0 && b > 0.0 {
                rows[k].pairwise_order = Some((a / b).ln() / (rows[k - 1].n_steps as f64 / rows[k].n_steps as f64).ln().abs());
            }
        }
    }
    let dts: Vec<f64> = rows.iter().map(|r| (s.t_end - s.t0) / r.n_steps as f64).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error_linf.unwrap_or(f64::NAN)).collect();
    Ok(ConvergenceTable {
        fitted_order: fitted_order(&dts, &errs),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::presets;

    #[test]
    fn exact_against_itself_is_zero() {
        let cfg = presets::load("example3").unwrap();
        let same = |s: &Scenario, p: &BrownianPath, _: &TimeGrid, sg: &SpatialGrid, _: f64| solve(s, p, sg);
        let grid = StudyGrid { n_steps: 32, h: 2.0, ..cfg.study };
        let t = convergence_study_with(&cfg.scenario, &grid, 1, 3, &same).unwrap();
        assert!(t.rows.iter().all(|r| r.error_linf == Some(0.0)));
        assert!(t.fitted_order.is_none());
        assert!(t.to_csv().starts_with("level,n_steps,h,error_Linf,error_L2,estimated_order\n"));
    }

    #[test]
    fn failing_level_is_reported_and_study_continues() {
        let cfg = presets::load("example2_sigma1").unwrap();
        // Level 2 (32 steps, h = 0.25) breaks the dispersive bound.
        let grid = StudyGrid { n_steps: 8, h: 1.0, safety: 0.5, ..cfg.study };
        let t = convergence_study(&cfg.scenario, &grid, 3, 3).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert!(t.rows.iter().any(|r| r.status.starts_with("failed")));
        assert!(t.to_csv().lines().count() == 4);
        assert!(convergence_study(&cfg.scenario, &grid, 3, 2).is_err());
    }
}
