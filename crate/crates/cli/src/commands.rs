use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use sunbound::exec::with_jobs;
use sunbound::linalg::round_sig;
use sunbound::metrology::{
    bound_report, information_covariance, intrinsic_bound, saturation_check, unpolarized_report,
    SIGNIFICANT_DIGITS,
};
use sunbound::probes::{optimize_probe, rep_for, GradientMode, OptimizerConfig, OptimizerMethod};
use sunbound::scan::{ScanConfig, ScanRow, Series, SCAN_COLUMNS};
use sunbound::{Channel, Error, Execution, InverseMode, Parametrization, ProbeSpec, Weight};

use crate::plot::{loglog_svg, PlotSeries};
use crate::{BoundArgs, CheckArgs, OptimizeArgs, ScanArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_SINGULAR: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(io::BufReader::new(file))
        .with_context(|| format!("cannot parse {}", path.display()))
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(round_sig(x, SIGNIFICANT_DIGITS))
    } else {
        Value::Null
    }
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn diagnostic(kind: &str, message: &str, extra: Value) -> u8 {
    let mut body = json!({ "error": kind, "message": message });
    if let (Value::Object(b), Value::Object(e)) = (&mut body, extra) {
        b.extend(e);
    }
    eprintln!(
        "{}",
        serde_json::to_string_pretty(&body).unwrap_or_default()
    );
    EXIT_SINGULAR
}

/// Exit code for library errors that reach the top level.
pub fn report_error(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            err @ (Error::SingularInformation {
                rank,
                dim,
                condition,
            }
            | Error::NotAllEstimable {
                rank,
                dim,
                condition,
            }),
        ) => diagnostic(
            "singular_information",
            &err.to_string(),
            json!({ "rank": rank, "dim": dim, "condition_number": num(*condition) }),
        ),
        Some(err @ Error::OptimizationFailed { restarts, .. }) => diagnostic(
            "optimization_failed",
            &err.to_string(),
            json!({ "restarts": restarts }),
        ),
        _ => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn parse_weight(spec: &str) -> Result<Weight> {
    Ok(match spec {
        "intrinsic" => Weight::Intrinsic,
        "identity" => Weight::Identity,
        path => {
            let rows: Vec<Vec<f64>> = read_json(Path::new(path))?;
            let n = rows.len();
            if n == 0 || rows.iter().any(|r| r.len() != n) {
                bail!("weight matrix in {path} must be square and non-empty");
            }
            Weight::Matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        }
    })
}

pub fn bound(a: &BoundArgs) -> Result<u8> {
    let spec: ProbeSpec = read_json(&a.probe)?;
    let state = spec.build_capped(a.cap)?;
    let channel = match &a.param {
        Some(p) => Some(Channel::new(read_json::<Parametrization>(p)?)?),
        None => None,
    };
    let theta = match (&channel, &a.theta) {
        (Some(_), Some(t)) => t.clone(),
        (Some(ch), None) => vec![0.0; ch.param_count()],
        (None, Some(_)) => bail!("--theta needs --param"),
        (None, None) => Vec::new(),
    };
    if let Some(ch) = &channel {
        if ch.parametrization().n() != state.rep().basis().n() {
            bail!(
                "parametrization acts on SU({}) but the probe lives in an SU({}) representation",
                ch.parametrization().n(),
                state.rep().basis().n()
            );
        }
    }
    let weight = parse_weight(&a.weight)?;
    let mode = if a.pseudo_inverse {
        InverseMode::PseudoInverse
    } else {
        InverseMode::Strict
    };
    let report = bound_report(
        &state,
        channel.as_ref().map(|c| (c, theta.as_slice())),
        &weight,
        mode,
    )?;

    let weighted_missing = channel.is_some() && report.weighted_bound.is_none();
    // with the metric as weight the intrinsic bound stands in for Tr[gQ⁻¹]
    let weighted_needed = !matches!(weight, Weight::Intrinsic);
    if report.intrinsic_bound.is_none() || (weighted_missing && weighted_needed) {
        let message = if report.intrinsic_bound.is_none() {
            "generator covariance is singular: not all parameters are estimable"
        } else {
            "quantum Fisher information matrix is singular at this parameter point"
        };
        return Ok(diagnostic(
            "singular_information",
            message,
            json!({ "flags": report.flags, "report": report }),
        ));
    }
    print_json(&report)?;
    Ok(EXIT_OK)
}

pub fn check(a: &CheckArgs) -> Result<u8> {
    let spec: ProbeSpec = read_json(&a.probe)?;
    let state = spec.build_capped(a.cap)?;
    let rep = state.rep();
    let unpolarized = unpolarized_report(&state)?;
    let cov = information_covariance(&state)?.covariance;
    let intrinsic = match intrinsic_bound(&cov) {
        Ok(v) => num(v),
        Err(Error::NotAllEstimable { .. }) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    let n = rep.basis().n();
    let origin = Channel::new(Parametrization::Exponential { n })?
        .generators_closed_form(&vec![0.0; n * n - 1])?;
    let saturable = saturation_check(&state, &origin)?;
    print_json(&json!({
        "first_order": unpolarized.first_order,
        "second_order": unpolarized.second_order,
        "deviation": num(unpolarized.deviation),
        "intrinsic_bound": intrinsic,
        "floor": num(rep.intrinsic_floor()?),
        "saturable": saturable,
    }))?;
    Ok(EXIT_OK)
}

/// Optimizer settings file; every field is optional. The seed always comes
/// from `--seed`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizerFile {
    restarts: Option<usize>,
    max_iters: Option<usize>,
    tolerance: Option<f64>,
    method: Option<OptimizerMethod>,
    gradient: Option<GradientMode>,
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn optimizer_config(path: Option<&Path>, seed: u64, jobs: usize) -> Result<OptimizerConfig> {
    let file: OptimizerFile = match path {
        Some(p) => read_json(p)?,
        None => OptimizerFile::default(),
    };
    let mut cfg = OptimizerConfig::new(seed);
    if let Some(v) = file.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = file.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = file.tolerance {
        cfg.tolerance = v;
    }
    if let Some(v) = file.method {
        cfg.method = v;
    }
    if let Some(v) = file.gradient {
        cfg.gradient = v;
    }
    cfg.execution = execution(jobs);
    Ok(cfg)
}

fn execution(jobs: usize) -> Execution {
    if jobs == 1 {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

pub fn optimize(a: &OptimizeArgs) -> Result<u8> {
    let cfg = optimizer_config(a.config.as_deref(), a.seed, a.jobs)?;
    let rep = rep_for(a.n, a.particles, a.cap)?;
    let res = with_jobs(a.jobs, || optimize_probe(rep, &cfg))?;
    let psi = res.state.vector().expect("optimizer returns pure states");
    let amplitudes: Vec<[Value; 2]> = psi.iter().map(|z| [num(z.re), num(z.im)]).collect();
    print_json(&json!({
        "amplitudes": amplitudes,
        "bound_achieved": num(res.bound_achieved),
        "floor": num(res.floor),
        "converged": res.converged,
    }))?;
    Ok(if res.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    })
}

pub fn scan(a: &ScanArgs) -> Result<u8> {
    let series = Series::parse(&a.states)?;
    let optimizer = if series.optimized {
        let Some(seed) = a.seed else {
            bail!("the optimized series needs --seed");
        };
        Some(optimizer_config(a.config.as_deref(), seed, a.jobs)?)
    } else {
        None
    };
    let cfg = ScanConfig {
        n: a.n,
        particles_min: a.nmin,
        particles_max: a.nmax,
        series,
        cap: a.cap,
        optimizer,
        execution: execution(a.jobs),
    };
    let rows = with_jobs(a.jobs, || sunbound::scan::scan(&cfg))?;

    match &a.out {
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_csv(file, &rows)?;
        }
        None => write_csv(io::stdout().lock(), &rows)?,
    }
    if let Some(path) = &a.plot {
        std::fs::write(path, scan_plot(a.n, &rows, series))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(EXIT_OK)
}

fn write_csv<W: Write>(w: W, rows: &[ScanRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SCAN_COLUMNS)?;
    for row in rows {
        out.write_record(row.fields())?;
    }
    out.flush()?;
    Ok(())
}

fn scan_plot(n: usize, rows: &[ScanRow], series: Series) -> String {
    let pick = |f: fn(&ScanRow) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|r| f(r).map(|y| (r.particles as f64, y)))
            .collect()
    };
    let mut curves = Vec::new();
    if series.ghz {
        curves.push(PlotSeries::new(
            "GHZ",
            "#d62728",
            pick(|r| r.cs_ghz.value()),
        ));
    }
    if series.floor {
        curves.push(PlotSeries::new(
            "floor d²/(4C₂)",
            "#1f77b4",
            pick(|r| r.cs_floor.value()),
        ));
    }
    if series.optimized {
        curves.push(PlotSeries::new(
            "optimized",
            "#2ca02c",
            pick(|r| r.cs_optimized.value()),
        ));
    }
    loglog_svg(
        &format!("Minimum total variance, SU({n})"),
        "N",
        "C_S",
        &curves,
    )
}
