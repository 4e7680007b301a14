//! Command surface and result persistence. Every run writes a directory
//! with the verbatim configuration, a machine-readable summary, the data
//! CSVs, and an append-only run record; all numbers in the summaries come
//! from module operations, never from ad-hoc computation here.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::acceptance;
use crate::dimension::Dimension;
use crate::error::{Error, Result};
use crate::evolution::{
    self, build_gauge_projection, evolve, select_vertex, EvolutionConfig, EvolutionContext,
    GaugeHandling, TrajectoryRecord,
};
use crate::frames::ConeFrame;
use crate::grid::build_grid;
use crate::numerics::linear_fit;
use crate::profiles;
use crate::spectrum::{find_eigenvalues, wronskian_samples, SearchRegion};
use crate::{appendix, Error as WmError};

pub const SCHEMA_VERSION: u32 = 1;

/// A full run specification; serialized verbatim into the run directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub dims: Vec<u32>,
    pub n: usize,
    pub dtau: Option<f64>,
    pub tau_max: f64,
    pub nonlinear: bool,
    pub gauge: GaugeHandling,
    pub shape: Shape,
    pub amplitude: f64,
    pub seed: u64,
    pub region: Option<RegionSpec>,
    pub emit_samples: bool,
    pub out_dir: Option<String>,
    pub schema_version: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Spectrum,
    Appendix,
    Norms,
    VerifyAll,
}

impl std::fmt::Display for Command {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Command::Simulate => "simulate",
            Command::Spectrum => "spectrum",
            Command::Appendix => "appendix",
            Command::Norms => "norms",
            Command::VerifyAll => "verify-all",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Zero,
    Gauge,
    Random,
    Bump,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RegionSpec {
    pub re_min: f64,
    pub abs_max: f64,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        RunConfig {
            command,
            dims: vec![3],
            n: 48,
            dtau: None,
            tau_max: 8.0,
            nonlinear: false,
            gauge: GaugeHandling::None,
            shape: Shape::Random,
            amplitude: 1e-3,
            seed: 7,
            region: None,
            emit_samples: false,
            out_dir: None,
            schema_version: SCHEMA_VERSION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for &d in &self.dims {
            Dimension::new(d).map_err(|_| Error::InvalidConfig {
                field: "dims".into(),
                message: format!("dimension {d} must be odd and at least 3"),
            })?;
        }
        if self.dims.is_empty() {
            return Err(Error::InvalidConfig {
                field: "dims".into(),
                message: "need at least one dimension".into(),
            });
        }
        if self.n < 16 {
            return Err(Error::InvalidConfig {
                field: "n".into(),
                message: format!("grid size {} below the minimum 16", self.n),
            });
        }
        if !(self.tau_max > 0.0) {
            return Err(Error::InvalidConfig {
                field: "tau_max".into(),
                message: "tau_max must be positive".into(),
            });
        }
        if !self.amplitude.is_finite() {
            return Err(Error::InvalidConfig {
                field: "amplitude".into(),
                message: "amplitude must be finite".into(),
            });
        }
        if let Some(r) = &self.region {
            if !(r.abs_max > 0.0) || r.re_min >= r.abs_max {
                return Err(Error::InvalidConfig {
                    field: "region".into(),
                    message: "need re_min < abs_max and abs_max > 0".into(),
                });
            }
        }
        Ok(())
    }
}

/// Parse `re>=a,abs<=R` region syntax.
pub fn parse_region(s: &str) -> Result<RegionSpec> {
    let mut re_min = None;
    let mut abs_max = None;
    for part in s.split(',') {
        let p = part.trim();
        if let Some(v) = p.strip_prefix("re>=") {
            re_min = Some(v.parse::<f64>().map_err(|_| Error::InvalidConfig {
                field: "region".into(),
                message: format!("cannot parse '{v}' as a number"),
            })?);
        } else if let Some(v) = p.strip_prefix("abs<=") {
            abs_max = Some(v.parse::<f64>().map_err(|_| Error::InvalidConfig {
                field: "region".into(),
                message: format!("cannot parse '{v}' as a number"),
            })?);
        } else {
            return Err(Error::InvalidConfig {
                field: "region".into(),
                message: format!("unknown clause '{p}', expected re>=A,abs<=R"),
            });
        }
    }
    match (re_min, abs_max) {
        (Some(re_min), Some(abs_max)) => Ok(RegionSpec { re_min, abs_max }),
        _ => Err(Error::InvalidConfig {
            field: "region".into(),
            message: "both re>= and abs<= clauses are required".into(),
        }),
    }
}

/// Append-only record of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub version: &'static str,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub files: Vec<String>,
    pub criteria: Vec<CriterionStatus>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionStatus {
    pub name: String,
    pub passed: bool,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Stable float formatting for byte-identical outputs.
fn fmt_f(x: f64) -> String {
    format!("{x:.17e}")
}

fn write_text(dir: &Path, name: &str, content: &str, files: &mut Vec<String>) -> Result<()> {
    fs::write(dir.join(name), content)?;
    files.push(name.to_string());
    Ok(())
}

/// Trajectory CSV: tau, per-order seminorms of both components, total,
/// gauge amplitude. Header row, '.' decimal separator, UTF-8.
pub fn trajectory_csv(rec: &TrajectoryRecord, dim: Dimension) -> String {
    let m = dim.m() as usize;
    let mut header = vec!["tau".to_string()];
    for k in 0..=m {
        header.push(format!("h1_{k}"));
    }
    for k in 0..m {
        header.push(format!("h2_{k}"));
    }
    header.push("total".into());
    header.push("gauge_amplitude".into());
    let mut out = header.join(",") + "\n";
    for (i, &tau) in rec.taus.iter().enumerate() {
        let mut row = vec![fmt_f(tau)];
        for k in 0..=m {
            row.push(fmt_f(rec.seminorms1[i][k]));
        }
        for k in 0..m {
            row.push(fmt_f(rec.seminorms2[i][k]));
        }
        row.push(fmt_f(rec.total[i]));
        row.push(fmt_f(rec.gauge_amplitude[i]));
        out += &(row.join(",") + "\n");
    }
    out
}

fn simulate_one(
    dim: Dimension,
    config: &RunConfig,
) -> Result<(TrajectoryRecord, serde_json::Value)> {
    let ctx = EvolutionContext::new(dim, config.n)?;
    let needs_projection = config.gauge != GaugeHandling::None || config.shape == Shape::Bump;
    let proj = if needs_projection || true {
        // The gauge amplitude column is part of the record either way.
        Some(build_gauge_projection(&ctx)?)
    } else {
        None
    };
    let mut cfg = EvolutionConfig::new(dim, config.n);
    cfg.dtau = config.dtau;
    cfg.tau_max = config.tau_max;
    cfg.nonlinear = config.nonlinear;
    cfg.gauge = config.gauge;
    cfg.record_every = 8;

    let mut selected_vertex = None;
    let initial = match config.shape {
        Shape::Zero => evolution::State::zero(ctx.grid.n),
        Shape::Gauge => {
            let g = evolution::gauge_state(&ctx.grid, dim);
            scale_state(g, config.amplitude)
        }
        Shape::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ dim.d() as u64);
            evolution::random_smooth_state(&ctx.grid, config.amplitude, &mut rng)
        }
        Shape::Bump => {
            let frame = ConeFrame::centered(1.0, 0.05)?;
            let v = evolution::bump_data(config.amplitude);
            let vertex = if config.gauge == GaugeHandling::AdjustT {
                let mut sel_cfg = cfg.clone();
                sel_cfg.nonlinear = true;
                sel_cfg.tau_max = 12.0;
                sel_cfg.record_every = 4;
                let sel = select_vertex(&v, &frame, &sel_cfg, &ctx, proj.as_ref().unwrap())?;
                selected_vertex = Some(sel.vertex);
                sel.vertex
            } else {
                frame.t0
            };
            evolution::data_state(&v, vertex, &frame, &ctx)?
        }
    };
    let rec = evolve(&initial, &cfg, &ctx, proj.as_ref())?;
    let summary = json!({
        "d": dim.d(),
        "n": config.n,
        "dtau": rec.dtau,
        "cfl_constant": rec.cfl_constant,
        "decay_fit": rec.decay_fit.map(|(r, i, e)| json!({"rate": r, "intercept": i, "residual": e})),
        "diverged": rec.diverged,
        "selected_vertex": selected_vertex,
        "spectral_radius": ctx.spectral_radius,
    });
    Ok((rec, summary))
}

fn scale_state(mut s: evolution::State, amplitude: f64) -> evolution::State {
    s.phi1 *= amplitude;
    s.phi2 *= amplitude;
    s
}

/// Execute a validated configuration; returns the record after writing the
/// run directory. Partial failures still persist everything computed.
pub fn run(config: &RunConfig) -> Result<RunRecord> {
    config.validate()?;
    let started = now_unix();
    let root = config
        .out_dir
        .clone()
        .or_else(|| std::env::var("WMLAB_OUT").ok())
        .unwrap_or_else(|| "runs".to_string());
    let mut dir = PathBuf::from(&root).join(format!("{}-{}", started, config.command));
    let mut suffix = 0;
    while dir.exists() {
        suffix += 1;
        dir = PathBuf::from(&root).join(format!("{}-{}-{}", started, config.command, suffix));
    }
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    write_text(
        &dir,
        "config.json",
        &serde_json::to_string_pretty(config)?,
        &mut files,
    )?;

    let mut criteria = Vec::new();
    let mut pass = true;
    let mut summary = json!({
        "schema_version": SCHEMA_VERSION,
        "command": config.command.to_string(),
    });

    match config.command {
        Command::Simulate => {
            let mut entries = Vec::new();
            for &d in &config.dims {
                let dim = Dimension::new(d)?;
                let (rec, entry) = simulate_one(dim, config)?;
                write_text(
                    &dir,
                    &format!("trajectory_d{d}.csv"),
                    &trajectory_csv(&rec, dim),
                    &mut files,
                )?;
                entries.push(entry);
            }
            summary["runs"] = json!(entries);
        }
        Command::Spectrum => {
            let spec = config.region.unwrap_or(RegionSpec {
                re_min: 0.0,
                abs_max: 15.0,
            });
            let region = SearchRegion {
                re_min: spec.re_min,
                abs_max: spec.abs_max,
            };
            let mut entries = Vec::new();
            for &d in &config.dims {
                let dim = Dimension::new(d)?;
                let rep = find_eigenvalues(region, dim)?;
                if config.emit_samples {
                    let samples = wronskian_samples(region, dim)?;
                    let mut csv = String::from("lambda_re,lambda_im,abs_w\n");
                    for (re, im, w) in samples {
                        csv += &format!("{},{},{}\n", fmt_f(re), fmt_f(im), fmt_f(w));
                    }
                    write_text(&dir, &format!("w_samples_d{d}.csv"), &csv, &mut files)?;
                }
                entries.push(json!({
                    "d": d,
                    "region": rep.region,
                    "winding": rep.winding_count,
                    "eigenvalues": rep.eigenvalues,
                }));
            }
            summary["reports"] = json!(entries);
        }
        Command::Appendix => {
            let mut entries = Vec::new();
            for &d in &config.dims {
                let dim = Dimension::new(d)?;
                let grid = build_grid(config.n.max(64), dim)?;
                let cert = appendix::certificate(dim, &grid)?;
                write_text(
                    &dir,
                    &format!("certificate_d{d}.json"),
                    &serde_json::to_string_pretty(&cert)?,
                    &mut files,
                )?;
                entries.push(serde_json::to_value(&cert)?);
            }
            summary["certificates"] = json!(entries);
        }
        Command::Norms => {
            let mut entries = Vec::new();
            for &d in &config.dims {
                let dim = Dimension::new(d)?;
                let grid = build_grid(config.n, dim)?;
                let scales = [1.0, 0.5, 0.25];
                let mut rows = Vec::new();
                let mut csv = String::from("kind,order,fitted_exponent,expected_exponent\n");
                for k in 0..=dim.m() as usize {
                    let mut xs = Vec::new();
                    let mut ys = Vec::new();
                    for &s in &scales {
                        let u = grid.sample(|r| profiles::f0_over_rho(r, dim) / s);
                        xs.push(s.ln());
                        ys.push(grid.seminorm(&u, k, s)?.ln());
                    }
                    let (slope, _, _) = linear_fit(&xs, &ys);
                    let expected = dim.d_f64() / 2.0 - k as f64;
                    csv += &format!("profile,{k},{},{}\n", fmt_f(slope), fmt_f(expected));
                    rows.push(json!({"kind": "profile", "order": k, "fitted": slope, "expected": expected}));
                }
                for l in 0..dim.m() as usize {
                    let mut xs = Vec::new();
                    let mut ys = Vec::new();
                    for &s in &scales {
                        let u = grid.sample(|r| profiles::f0_prime(r, dim) / (s * s));
                        xs.push(s.ln());
                        ys.push(grid.seminorm(&u, l, s)?.ln());
                    }
                    let (slope, _, _) = linear_fit(&xs, &ys);
                    let expected = dim.d_f64() / 2.0 - l as f64 - 1.0;
                    csv += &format!("time_derivative,{l},{},{}\n", fmt_f(slope), fmt_f(expected));
                    rows.push(json!({"kind": "time_derivative", "order": l, "fitted": slope, "expected": expected}));
                }
                write_text(&dir, &format!("norm_scaling_d{d}.csv"), &csv, &mut files)?;
                entries.push(json!({"d": d, "rows": rows}));
            }
            summary["norms"] = json!(entries);
        }
        Command::VerifyAll => {
            let results = acceptance::run_all(config.seed)?;
            for r in &results {
                r.print_line();
                criteria.push(CriterionStatus {
                    name: r.name.to_string(),
                    passed: r.passed,
                });
                pass &= r.passed;
            }
            summary["criteria"] = serde_json::to_value(&results)?;
            summary["pass"] = json!(pass);
        }
    }

    write_text(
        &dir,
        "summary.json",
        &serde_json::to_string_pretty(&summary)?,
        &mut files,
    )?;
    let record = RunRecord {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: now_unix(),
        files,
        criteria,
        pass,
    };
    fs::write(dir.join("run.json"), serde_json::to_string_pretty(&record)?)?;
    println!("run directory: {}", dir.display());
    Ok(record)
}

/// The seed-dependent artifact set used by the determinism criterion:
/// a seeded trajectory CSV, a Wronskian sample CSV, and the d = 5 appendix
/// certificate, written with the same emitters as the run command.
pub fn write_determinism_artifacts(dir: &Path, seed: u64) -> Result<()> {
    let dim = Dimension::new(3)?;
    let ctx = EvolutionContext::new(dim, 32)?;
    let proj = build_gauge_projection(&ctx)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = evolution::random_smooth_state(&ctx.grid, 1e-2, &mut rng);
    let mut cfg = EvolutionConfig::new(dim, 32);
    cfg.tau_max = 2.0;
    cfg.gauge = GaugeHandling::Project;
    let rec = evolve(&s, &cfg, &ctx, Some(&proj))?;
    fs::write(dir.join("trajectory.csv"), trajectory_csv(&rec, dim))?;

    let region = SearchRegion {
        re_min: 0.0,
        abs_max: 2.0,
    };
    let samples = wronskian_samples(region, dim)?;
    let mut csv = String::from("lambda_re,lambda_im,abs_w\n");
    for (re, im, w) in samples {
        csv += &format!("{},{},{}\n", fmt_f(re), fmt_f(im), fmt_f(w));
    }
    fs::write(dir.join("w_samples.csv"), csv)?;

    let d5 = Dimension::new(5)?;
    let grid = build_grid(64, d5)?;
    let cert = appendix::certificate(d5, &grid)?;
    fs::write(
        dir.join("certificate.json"),
        serde_json::to_string_pretty(&cert)?,
    )?;
    Ok(())
}

/// Map library errors to a process exit code.
pub fn exit_code(result: &std::result::Result<RunRecord, WmError>) -> i32 {
    match result {
        Ok(rec) if rec.pass => 0,
        Ok(_) => 1,
        Err(_) => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_parsing() {
        let r = parse_region("re>=0,abs<=15").unwrap();
        assert_eq!(r.re_min, 0.0);
        assert_eq!(r.abs_max, 15.0);
        let r = parse_region("re>=-0.2, abs<=2").unwrap();
        assert_eq!(r.re_min, -0.2);
        assert!(parse_region("re>=0").is_err());
        assert!(parse_region("banana").is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::defaults(Command::Simulate);
        assert!(c.validate().is_ok());
        c.dims = vec![4];
        assert!(matches!(
            c.validate(),
            Err(Error::InvalidConfig { ref field, .. }) if field == "dims"
        ));
        c.dims = vec![3];
        c.n = 4;
        assert!(matches!(
            c.validate(),
            Err(Error::InvalidConfig { ref field, .. }) if field == "n"
        ));
    }
}
