//! Particle-number sweeps comparing GHZ probes with the Heisenberg floor.
//!
//! Each row is independent, so rows are evaluated through [`Execution`] and
//! returned ordered by particle number.

use std::fmt;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::round_sig;
use crate::metrology::{covariance_pure, intrinsic_bound, SIGNIFICANT_DIGITS};
use crate::probes::{make_ghz_capped, optimize_probe, rep_for, OptimizerConfig};
use crate::representation::sector_dimension;

/// CSV header of a scan.
pub const SCAN_COLUMNS: [&str; 6] = ["n", "N", "casimir", "cs_ghz", "cs_floor", "cs_optimized"];

/// A single scan cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    Singular,
    Skipped,
    /// Series not requested.
    Empty,
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Value(v) => write!(f, "{}", round_sig(*v, SIGNIFICANT_DIGITS)),
            Cell::Singular => f.write_str("singular"),
            Cell::Skipped => f.write_str("skipped"),
            Cell::Empty => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub n: usize,
    pub particles: usize,
    pub casimir: Cell,
    pub cs_ghz: Cell,
    pub cs_floor: Cell,
    pub cs_optimized: Cell,
}

impl ScanRow {
    pub fn fields(&self) -> [String; 6] {
        [
            self.n.to_string(),
            self.particles.to_string(),
            self.casimir.to_string(),
            self.cs_ghz.to_string(),
            self.cs_floor.to_string(),
            self.cs_optimized.to_string(),
        ]
    }
}

/// Which curves to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Series {
    pub ghz: bool,
    pub floor: bool,
    pub optimized: bool,
}

impl Series {
    /// Parse a comma-separated subset of `ghz,floor,optimized`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut out = Series {
            ghz: false,
            floor: false,
            optimized: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "ghz" => out.ghz = true,
                "floor" => out.floor = true,
                "optimized" => out.optimized = true,
                other => {
                    return Err(Error::InvalidConfig(format!("unknown series '{other}'")));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub n: usize,
    pub particles_min: usize,
    pub particles_max: usize,
    pub series: Series,
    pub cap: usize,
    /// Required when `series.optimized` is set.
    pub optimizer: Option<OptimizerConfig>,
    pub execution: Execution,
}

/// Evaluate one row per particle number in `[particles_min, particles_max]`.
pub fn scan(cfg: &ScanConfig) -> Result<Vec<ScanRow>> {
    if cfg.n < 2 {
        return Err(Error::InvalidDimension(cfg.n));
    }
    if cfg.particles_min < 1 || cfg.particles_max < cfg.particles_min {
        return Err(Error::InvalidConfig(format!(
            "particle range [{}, {}] is empty or starts below 1",
            cfg.particles_min, cfg.particles_max
        )));
    }
    if cfg.series.optimized && cfg.optimizer.is_none() {
        return Err(Error::InvalidConfig(
            "optimized series needs an optimizer seed".into(),
        ));
    }
    let count = cfg.particles_max - cfg.particles_min + 1;
    cfg.execution
        .map(count, |i| scan_row(cfg, cfg.particles_min + i))
        .into_iter()
        .collect()
}

fn scan_row(cfg: &ScanConfig, particles: usize) -> Result<ScanRow> {
    let n = cfg.n;
    let skipped = ScanRow {
        n,
        particles,
        casimir: Cell::Skipped,
        cs_ghz: Cell::Skipped,
        cs_floor: Cell::Skipped,
        cs_optimized: Cell::Skipped,
    };
    if sector_dimension(n, particles) > cfg.cap {
        return Ok(skipped);
    }
    let rep = rep_for(n, particles, cfg.cap)?;
    let casimir = rep.casimir()?;
    let d = rep.algebra_dim() as f64;
    let floor = d * d / (4.0 * casimir);

    let cs_ghz = if cfg.series.ghz {
        let ghz = make_ghz_capped(n, particles, cfg.cap)?;
        let cov = covariance_pure(&ghz)?.covariance;
        match intrinsic_bound(&cov) {
            Ok(v) => Cell::Value(v),
            Err(Error::NotAllEstimable { .. }) => Cell::Singular,
            Err(e) => return Err(e),
        }
    } else {
        Cell::Empty
    };
    let cs_optimized = match (&cfg.optimizer, cfg.series.optimized) {
        (Some(opt), true) => match optimize_probe(rep, opt) {
            Ok(res) => Cell::Value(res.bound_achieved),
            Err(Error::OptimizationFailed { .. }) => Cell::Singular,
            Err(e) => return Err(e),
        },
        _ => Cell::Empty,
    };
    Ok(ScanRow {
        n,
        particles,
        casimir: Cell::Value(casimir),
        cs_ghz,
        cs_floor: if cfg.series.floor {
            Cell::Value(floor)
        } else {
            Cell::Empty
        },
        cs_optimized,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
