use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use homog::dyadic::{build_adjacent_systems, default_family, AdjacentSystems, DyadicConfig, DyadicMode};
use homog::experiments::Tolerances;
use homog::space::{enumerate_balls, make_comb_space_with, make_grid_interval, read_space, BallFamily, CombParams, FamilySpec, FiniteSpace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Everything needed to reproduce one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    /// `grid:a,b,n`, `comb:J,n,trunc[,octaves]` or a space file. Some drivers pick their own.
    pub space: Option<String>,
    pub weight: String,
    /// `default`, `all`, `critical`, `sampled:k[:seed]`, or several joined by `+`.
    pub family: String,
    pub delta: f64,
    pub mode: DyadicMode,
    pub seed: u64,
    pub params: RunParams,
    pub tolerances: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: String::new(),
            space: None,
            weight: "constant:1".into(),
            family: "default".into(),
            delta: 0.125,
            mode: DyadicMode::Relaxed,
            seed: 1,
            params: RunParams::default(),
            tolerances: None,
            out: None,
            svg: None,
            threads: None,
        }
    }
}

/// Driver-specific knobs; each driver reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunParams {
    pub sigma: Option<f64>,
    pub sigmas: Vec<f64>,
    pub q: f64,
    pub p: Vec<f64>,
    pub jmax: usize,
    /// Comb weight for the counterexample scan: `h1[:ratio]` or `h2:alpha[:ratio]`.
    pub variant: String,
    pub ratio: f64,
    pub samples: usize,
    pub sample_seed: u64,
    pub lambdas: usize,
    pub eps: Vec<f64>,
    pub pts: Vec<usize>,
    pub teeth: usize,
    pub octaves: usize,
    pub n: usize,
    pub kmax: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            sigma: None,
            sigmas: vec![1.5, 2.0, 3.0],
            q: 2.0,
            p: vec![2.0],
            jmax: 12,
            variant: "h1".into(),
            ratio: 0.5,
            samples: 200,
            sample_seed: 1,
            lambdas: 20,
            eps: Vec::new(),
            pts: vec![16, 32, 64, 128],
            teeth: 4,
            octaves: 40,
            n: 2048,
            kmax: 5,
        }
    }
}

impl RunConfig {
    /// SHA-256 of the config with output paths and thread count removed.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.svg = None;
        c.threads = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn load_tolerances(&self) -> Result<Tolerances> {
        match &self.tolerances {
            Some(p) => load_tolerances(p),
            None => Ok(Tolerances::default()),
        }
    }
}

pub fn load_tolerances(path: &Path) -> Result<Tolerances> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn numbers<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',').map(|t| t.trim().parse::<T>().map_err(|_| anyhow!("bad {what} `{t}` in `{s}`"))).collect()
}

/// Builds a space from `grid:a,b,n`, `comb:J,n,trunc[,octaves]` or a file path.
pub fn parse_space(spec: &str) -> Result<FiniteSpace> {
    if let Some(rest) = spec.strip_prefix("grid:") {
        let v: Vec<f64> = numbers(rest, "grid parameter")?;
        let [a, b, n] = v[..] else { bail!("grid needs `grid:a,b,n`, got `{spec}`") };
        if n.fract() != 0.0 || n < 0.0 {
            bail!("grid point count must be a whole number, got {n}");
        }
        return Ok(make_grid_interval(a, b, n as usize)?);
    }
    if let Some(rest) = spec.strip_prefix("comb:") {
        let v: Vec<f64> = numbers(rest, "comb parameter")?;
        if !(3..=4).contains(&v.len()) || v.iter().enumerate().any(|(i, x)| i != 2 && (x.fract() != 0.0 || *x < 0.0)) {
            bail!("comb needs `comb:J,n,trunc[,octaves]`, got `{spec}`");
        }
        let mut p = CombParams::new(v[0] as usize, v[1] as usize, v[2]);
        if let Some(&o) = v.get(3) {
            p.junction_octaves = o as usize;
        }
        return Ok(make_comb_space_with(&p)?);
    }
    let path = spec.strip_prefix("file:").unwrap_or(spec);
    let f = File::open(path).with_context(|| format!("opening space file `{path}`"))?;
    Ok(read_space(BufReader::new(f))?)
}

/// `default` or one or more family specs joined by `+`.
pub fn parse_family(space: &FiniteSpace, spec: &str) -> Result<BallFamily> {
    if spec == "default" {
        return Ok(default_family(space)?);
    }
    let parts: Vec<&str> = spec.split('+').collect();
    if parts.len() == 1 {
        return Ok(enumerate_balls(space, &FamilySpec::parse(spec)?)?);
    }
    let mut balls = Vec::new();
    for p in parts {
        balls.extend(enumerate_balls(space, &FamilySpec::parse(p)?)?.balls);
    }
    Ok(BallFamily::custom(spec, balls))
}

/// Adjacent systems whose containment loop covers the default family and `extra`.
pub fn build_systems(space: &FiniteSpace, cfg: &RunConfig, extra: Option<&BallFamily>) -> Result<AdjacentSystems> {
    let mut fam = default_family(space)?;
    if let Some(e) = extra {
        if e.label() != fam.label() {
            fam = BallFamily::custom(format!("{}+{}", fam.label(), e.label()), fam.balls.into_iter().chain(e.balls.iter().cloned()).collect());
        }
    }
    let dc = DyadicConfig { delta: cfg.delta, mode: cfg.mode, seed: cfg.seed };
    Ok(build_adjacent_systems(space, &dc, &fam)?)
}
