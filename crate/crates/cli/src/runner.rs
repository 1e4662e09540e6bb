use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use homog::experiments::*;
use homog::space::{measure_doubling, FiniteSpace};
use homog::weights::{make_weight, WeightSpec};
use homog::Field;
use serde_json::{json, Value};

use crate::config::{build_systems, parse_family, parse_space, RunConfig};
use crate::svg;

/// Drivers that `run` accepts.
pub const EXPERIMENTS: &[&str] = &[
    "sharp",
    "weak-rhi",
    "gehring",
    "stopping",
    "counterexample",
    "ainf-stability",
    "doubling-ball",
    "equivalence",
    "exp-example",
    "convergence",
];

const DEFAULT_COMB: &str = "comb:13,64,2";

pub struct RunOutput {
    pub report: ExperimentReport,
    pub provenance: Value,
}

/// 0 for pass, diverging and bounded verdicts, 1 otherwise.
pub fn exit_code(v: Verdict) -> i32 {
    if v.is_success() {
        0
    } else {
        1
    }
}

/// Runs one experiment on a pool of `cfg.threads` threads (all cores when unset).
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let tol = cfg.load_tolerances()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads.unwrap_or(0)).build()?;
    pool.install(|| run_with(cfg, &tol))
}

fn need_space(cfg: &RunConfig, default: Option<&str>) -> Result<(String, FiniteSpace)> {
    let spec = match (&cfg.space, default) {
        (Some(s), _) => s.clone(),
        (None, Some(d)) => d.to_string(),
        (None, None) => bail!("experiment `{}` needs --space", cfg.experiment),
    };
    let space = parse_space(&spec)?;
    Ok((spec, space))
}

fn weight(space: &FiniteSpace, cfg: &RunConfig) -> Result<Field> {
    Ok(make_weight(space, &WeightSpec::parse(&cfg.weight)?)?.field)
}

fn run_with(cfg: &RunConfig, tol: &Tolerances) -> Result<RunOutput> {
    let p = &cfg.params;
    let mut space_used: Option<FiniteSpace> = None;
    let report = match cfg.experiment.as_str() {
        "sharp" => {
            let (_, space) = need_space(cfg, None)?;
            let w = weight(&space, cfg)?;
            let sys = build_systems(&space, cfg, None)?;
            let eps = (!p.eps.is_empty()).then_some(p.eps.as_slice());
            let r = verify_sharp_lemma(&sys, &space, &w, eps, tol)?;
            space_used = Some(space);
            r
        }
        "weak-rhi" | "gehring" | "equivalence" => {
            let (_, space) = need_space(cfg, None)?;
            let w = weight(&space, cfg)?;
            let fam = parse_family(&space, &cfg.family)?;
            let sys = build_systems(&space, cfg, Some(&fam))?;
            let r = match cfg.experiment.as_str() {
                "weak-rhi" => verify_weak_rhi(&sys, &space, Some(&fam), &w, tol)?,
                "gehring" => gehring_probe(&sys, &space, &fam, &w, p.q, tol)?,
                _ => equivalence_scan(&sys, &space, &fam, &w, &p.sigmas, tol)?,
            };
            space_used = Some(space);
            r
        }
        "stopping" => {
            let (_, space) = need_space(cfg, None)?;
            let w = weight(&space, cfg)?;
            let sys = build_systems(&space, cfg, None)?;
            let r = stopping_scan(&sys, &space, &w, p.lambdas, tol)?;
            space_used = Some(space);
            r
        }
        "counterexample" => {
            let (_, space) = need_space(cfg, Some(DEFAULT_COMB))?;
            let WeightSpec::Fh { h, ratio } = WeightSpec::parse(&p.variant)? else {
                bail!("--variant must be h1[:ratio] or h2:alpha[:ratio], got `{}`", p.variant);
            };
            let r = counterexample_scan(&space, h, ratio, &p.p, p.jmax, tol)?;
            space_used = Some(space);
            r
        }
        "ainf-stability" => {
            let (_, space) = need_space(cfg, Some(DEFAULT_COMB))?;
            let r = a_infty_stability_scan(&space, p.ratio, p.sigma.unwrap_or(1.0), p.jmax, tol)?;
            space_used = Some(space);
            r
        }
        "doubling-ball" => {
            let (_, space) = need_space(cfg, None)?;
            let r = doubling_ball_search(&space, p.sigma.unwrap_or(2.0), p.samples, p.sample_seed, tol)?;
            space_used = Some(space);
            r
        }
        "exp-example" => exponential_example(p.n, p.sigma.unwrap_or(3.0), p.kmax, tol)?,
        "convergence" => convergence_study(p.teeth, &p.pts, p.octaves, tol)?,
        other => bail!("unknown experiment `{other}`; expected one of {}", EXPERIMENTS.join(", ")),
    };
    let structural = structural(space_used.as_ref(), &report)?;
    let provenance = json!({
        "config": cfg,
        "config_hash": cfg.hash(),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": report.name,
        "verdict": report.verdict.name(),
        "witness": report.witness,
        "structural": structural,
        "summary": report.summary.iter().map(|(k, v)| (k.clone(), num(*v))).collect::<serde_json::Map<_, _>>(),
        "parameters": report.parameters.iter().map(|(k, v)| (k.clone(), Value::from(v.clone()))).collect::<serde_json::Map<_, _>>(),
        "notes": report.notes,
        "rows": report.rows.len(),
        "runtime_ms": report.runtime_ms,
    });
    Ok(RunOutput { report, provenance })
}

/// JSON has no infinities; they are written as strings.
fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn structural(space: Option<&FiniteSpace>, report: &ExperimentReport) -> Result<Value> {
    let mut m = serde_json::Map::new();
    if let Some(s) = space {
        let d = measure_doubling(s, None)?;
        m.insert("d_hat".into(), num(d.d_hat));
        m.insert("n_hat".into(), json!(d.n_hat));
        m.insert("points".into(), json!(s.len()));
    }
    for (key, name) in [("S", "S"), ("K", "K"), ("eps_star", "eps_star")] {
        if let Some(v) = report.summary_value(key) {
            m.insert(name.into(), num(v));
        }
    }
    Ok(Value::Object(m))
}

/// `report.csv` ↦ `report.provenance.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("provenance.json")
}

/// Writes the CSV (stdout when no path is set), the sidecar and the optional SVG.
pub fn write_artifacts(cfg: &RunConfig, out: &RunOutput) -> Result<()> {
    match &cfg.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            out.report.write_csv(BufWriter::new(f))?;
            let side = sidecar_path(path);
            std::fs::write(&side, serde_json::to_string_pretty(&out.provenance)? + "\n")
                .with_context(|| format!("writing {}", side.display()))?;
        }
        None => out.report.write_csv(std::io::stdout().lock())?,
    }
    if let Some(path) = &cfg.svg {
        let doc = svg::render(&out.report).with_context(|| format!("no chart is defined for `{}` reports", out.report.name))?;
        std::fs::write(path, doc).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
