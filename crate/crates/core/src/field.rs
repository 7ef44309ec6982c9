//! Space-time fields `u(tᵢ, zⱼ)` on a tensor grid.

use std::fmt::Write as _;

use crate::csvio::{expect_header, fields, fmt17, parse_f64};
use crate::det::SpatialGrid;
use crate::error::{Error, Result};
use crate::paths::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Composition of a closed-form profile with simulated processes.
    Exact,
    /// Composition with a profile obtained from the method-of-lines solver.
    ExactNumericProfile,
    /// Deterministic method-of-lines output.
    Deterministic,
    /// Euler–Maruyama oracle.
    Oracle,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Exact => "exact",
            Provenance::ExactNumericProfile => "exact-numeric-profile",
            Provenance::Deterministic => "deterministic",
            Provenance::Oracle => "oracle",
        }
    }
}

/// Row-major values, one row per time node.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTrajectory {
    tgrid: TimeGrid,
    sgrid: SpatialGrid,
    values: Vec<f64>,
    provenance: Provenance,
}

impl FieldTrajectory {
    pub fn new(tgrid: TimeGrid, sgrid: SpatialGrid, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let expected = tgrid.n_nodes() * sgrid.n_points();
        if values.len() != expected {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                tgrid.n_nodes(),
                sgrid.n_points()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step: k / sgrid.n_points(),
            });
        }
        Ok(Self {
            tgrid,
            sgrid,
            values,
            provenance,
        })
    }

    pub fn tgrid(&self) -> &TimeGrid {
        &self.tgrid
    }

    pub fn sgrid(&self) -> &SpatialGrid {
        &self.sgrid
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slice(&self, i: usize) -> &[f64] {
        let n = self.sgrid.n_points();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn last_slice(&self) -> &[f64] {
        self.slice(self.tgrid.n_steps())
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.sgrid.n_points() + j]
    }

    pub fn same_grids(&self, other: &FieldTrajectory) -> bool {
        self.tgrid == other.tgrid && self.sgrid == other.sgrid
    }

    /// Every `factor`-th time row.
    pub fn restrict_time(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.tgrid.n_steps().is_multiple_of(factor) {
            return Err(Error::GridMismatch(format!(
                "cannot restrict {} steps by factor {factor}",
                self.tgrid.n_steps()
            )));
        }
        let tgrid = TimeGrid::new(self.tgrid.t0(), self.tgrid.t_end(), self.tgrid.n_steps() / factor)?;
        let values = (0..tgrid.n_nodes())
            .flat_map(|i| self.slice(i * factor).iter().copied())
            .collect();
        Ok(Self {
            tgrid,
            sgrid: self.sgrid,
            values,
            provenance: self.provenance,
        })
    }

    /// Long-format CSV `t,z,u`.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 72 + 8);
        out.push_str("t,z,u\n");
        let zs: Vec<String> = self.sgrid.nodes().map(fmt17).collect();
        for i in 0..self.tgrid.n_nodes() {
            let t = fmt17(self.tgrid.node(i));
            for (z, u) in zs.iter().zip(self.slice(i)) {
                let _ = writeln!(out, "{t},{z},{}", fmt17(*u));
            }
        }
        out
    }

    /// Parse the `t,z,u` format written by [`to_csv`](Self::to_csv). Rows
    /// must be time-major on uniform grids; provenance is not stored.
    pub fn from_csv(text: &str, provenance: Provenance) -> Result<Self> {
        let mut lines = text.lines();
        expect_header(&mut lines, &["t", "z", "u"])?;
        let mut ts: Vec<f64> = Vec::new();
        let mut zs: Vec<f64> = Vec::new();
        let mut values = Vec::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let n = k + 2;
            let f = fields(line);
            if f.len() != 3 {
                return Err(Error::Csv {
                    line: n,
                    msg: format!("expected 3 fields, found {}", f.len()),
                });
            }
            let (t, z, u) = (parse_f64(f[0], n)?, parse_f64(f[1], n)?, parse_f64(f[2], n)?);
            if ts.last() != Some(&t) {
                ts.push(t);
            }
            if ts.len() == 1 {
                zs.push(z);
            } else if zs.get(values.len() % zs.len().max(1)) != Some(&z) {
                return Err(Error::Csv {
                    line: n,
                    msg: "spatial nodes differ between time rows".into(),
                });
            }
            values.push(u);
        }
        if ts.len() < 2 || zs.len() < 2 || values.len() != ts.len() * zs.len() {
            return Err(Error::Csv {
                line: 1,
                msg: "field needs at least two complete time rows".into(),
            });
        }
        let tgrid = TimeGrid::new(ts[0], *ts.last().unwrap(), ts.len() - 1)?;
        let sgrid = SpatialGrid::new(zs[0], *zs.last().unwrap(), zs.len())?;
        let uniform = |nodes: &[f64], at: &dyn Fn(usize) -> f64| {
            nodes.iter().enumerate().all(|(i, x)| (x - at(i)).abs() <= 1e-9 * x.abs().max(1.0))
        };
        if !uniform(&ts, &|i| tgrid.node(i)) || !uniform(&zs, &|j| sgrid.node(j)) {
            return Err(Error::Csv {
                line: 1,
                msg: "field grids are not uniform".into(),
            });
        }
        Self::new(tgrid, sgrid, values, provenance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_restriction() {
        let tg = TimeGrid::new(0.0, 1.0, 4).unwrap();
        let sg = SpatialGrid::new(0.0, 7.0, 8).unwrap();
        let vals: Vec<f64> = (0..40).map(f64::from).collect();
        let f = FieldTrajectory::new(tg, sg, vals, Provenance::Exact).unwrap();
        assert_eq!(f.value(2, 3), 19.0);
        let r = f.restrict_time(2).unwrap();
        assert_eq!(r.tgrid().n_steps(), 2);
        assert_eq!(r.slice(1), f.slice(2));
        assert!(f.restrict_time(3).is_err());
        assert!(FieldTrajectory::new(tg, sg, vec![0.0; 39], Provenance::Exact).is_err());
        let csv = f.to_csv();
        assert_eq!(csv.lines().count(), 41);
        assert!(csv.starts_with("t,z,u\n"));
        let back = FieldTrajectory::from_csv(&csv, Provenance::Exact).unwrap();
        assert_eq!(back.values(), f.values());
        assert!(back.same_grids(&f));
        assert!(FieldTrajectory::from_csv("t,z,u\n0,0,1\n", Provenance::Exact).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let tg = TimeGrid::new(0.0, 1.0, 1).unwrap();
        let sg = SpatialGrid::new(0.0, 7.0, 8).unwrap();
        let mut vals = vec![0.0; 16];
        vals[9] = f64::NAN;
        assert!(matches!(
            FieldTrajectory::new(tg, sg, vals, Provenance::Oracle),
            Err(Error::NonFinite { step: 1 })
        ));
    }
}
