use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use homog::dyadic::{CubeRef, DyadicMode};
use homog::maximal::{localized_dyadic_maximal, maximal, MaximalKind};
use homog::space::{measure_doubling, write_space};
use homog::weights::{a_infty_dyadic, a_infty_sigma, make_weight, rh_dyadic, rh_sigma, script_a_infty, ScriptMode, WeightSpec, EXACT_SUBSET_CAP};
use homog_cli::bundle::{bundle, load_bundle};
use homog_cli::config::{build_systems, parse_family, parse_space, RunConfig};
use homog_cli::{exit_code, run, write_artifacts};

#[derive(Parser)]
#[command(name = "homog", version, about = "Weight classes and dyadic systems on finite spaces of homogeneous type")]
struct Cli {
    /// Worker threads (default: all logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Tolerance manifest (TOML).
    #[arg(long, global = true)]
    tolerances: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a space and write it in the text format.
    Space {
        #[arg(long)]
        space: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dyadic systems.
    Dyadic {
        #[command(subcommand)]
        cmd: DyadicCmd,
    },
    /// Maximal operators.
    Maximal {
        #[command(subcommand)]
        cmd: MaximalCmd,
    },
    /// One weight-class constant as a CSV row.
    Constants(ConstArgs),
    /// Experiment drivers.
    Experiment {
        #[command(subcommand)]
        cmd: ExperimentCmd,
    },
    /// Shorthand for `experiment run --name NAME`.
    Run {
        name: String,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Run a list of configs into one long-format CSV and an index.
    Bundle {
        /// TOML file with `[[run]]` tables.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to `<out>.index.csv`.
        #[arg(long)]
        index: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct SystemArgs {
    #[arg(long, default_value_t = 0.125)]
    delta: f64,
    #[arg(long, default_value = "relaxed", value_parser = parse_mode)]
    mode: DyadicMode,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn parse_mode(s: &str) -> Result<DyadicMode, String> {
    match s {
        "strict" => Ok(DyadicMode::Strict),
        "relaxed" => Ok(DyadicMode::Relaxed),
        _ => Err(format!("mode must be strict or relaxed, got `{s}`")),
    }
}

#[derive(Subcommand)]
enum DyadicCmd {
    /// One cube per line: `t k alpha center sidelength member_count member_ids...`.
    Dump {
        #[arg(long)]
        space: String,
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value = "default")]
        family: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite; exit 1 if any invariant fails.
    Check {
        #[arg(long)]
        space: String,
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value = "default")]
        family: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Noncentered,
    Centered,
    Dyadic,
}

#[derive(Subcommand)]
enum MaximalCmd {
    /// Per-point CSV `id,value`.
    Eval {
        #[arg(long)]
        space: String,
        #[arg(long)]
        weight: String,
        #[arg(long, value_enum, default_value = "noncentered")]
        kind: KindArg,
        #[arg(long, default_value = "default")]
        family: String,
        /// Base cube `t:k:alpha` (t from 1) for the localized dyadic operator.
        #[arg(long)]
        cube: Option<String>,
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    Ainf,
    Rh,
    AinfDyadic,
    RhDyadic,
    ScriptAinf,
}

#[derive(Args)]
struct ConstArgs {
    #[arg(long)]
    space: String,
    #[arg(long)]
    weight: String,
    #[arg(long, value_enum)]
    stat: StatArg,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value = "default")]
    family: String,
    /// C for script-ainf.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// p for script-ainf.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[command(flatten)]
    sys: SystemArgs,
}

#[derive(Subcommand)]
enum ExperimentCmd {
    Run {
        #[arg(long)]
        name: String,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Args, Default)]
struct RunArgs {
    /// Base config (TOML); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    space: Option<String>,
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<DyadicMode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    sigmas: Option<Vec<f64>>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    #[arg(long)]
    jmax: Option<usize>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    sample_seed: Option<u64>,
    #[arg(long)]
    lambdas: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pts: Option<Vec<usize>>,
    #[arg(long)]
    teeth: Option<usize>,
    #[arg(long)]
    octaves: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl RunArgs {
    fn into_config(self, name: String, cli: &Cli) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => RunConfig::default(),
        };
        c.experiment = name;
        if self.space.is_some() {
            c.space = self.space;
        }
        set(&mut c.weight, self.weight);
        set(&mut c.family, self.family);
        set(&mut c.delta, self.delta);
        set(&mut c.mode, self.mode);
        set(&mut c.seed, self.seed);
        let p = &mut c.params;
        if self.sigma.is_some() {
            p.sigma = self.sigma;
        }
        set(&mut p.sigmas, self.sigmas);
        set(&mut p.q, self.q);
        set(&mut p.p, self.p);
        set(&mut p.jmax, self.jmax);
        set(&mut p.variant, self.variant);
        set(&mut p.ratio, self.ratio);
        set(&mut p.samples, self.samples);
        set(&mut p.sample_seed, self.sample_seed);
        set(&mut p.lambdas, self.lambdas);
        set(&mut p.eps, self.eps);
        set(&mut p.pts, self.pts);
        set(&mut p.teeth, self.teeth);
        set(&mut p.octaves, self.octaves);
        set(&mut p.n, self.n);
        set(&mut p.kmax, self.kmax);
        if self.out.is_some() {
            c.out = self.out;
        }
        if self.svg.is_some() {
            c.svg = self.svg;
        }
        if cli.tolerances.is_some() {
            c.tolerances = cli.tolerances.clone();
        }
        if cli.threads.is_some() {
            c.threads = cli.threads;
        }
        Ok(c)
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn system_config(space: Option<String>, sys: &SystemArgs, family: &str) -> RunConfig {
    RunConfig { space, family: family.into(), delta: sys.delta, mode: sys.mode, seed: sys.seed, ..RunConfig::default() }
}

fn parse_cube(s: &str) -> Result<CubeRef> {
    let v: Vec<&str> = s.split(':').collect();
    let [t, k, a] = v[..] else { bail!("cube must be `t:k:alpha`, got `{s}`") };
    let t: usize = t.parse().context("cube system")?;
    anyhow::ensure!(t >= 1, "cube systems are numbered from 1");
    Ok(CubeRef { system: t - 1, level: k.parse().context("cube level")?, index: a.parse().context("cube index")? })
}

fn fmt(v: f64) -> String {
    homog::experiments::fmt_num(v)
}

fn dispatch(cli: Cli) -> Result<i32> {
    let threads = cli.threads;
    match cli.cmd {
        Cmd::Space { ref space, ref out } => {
            let s = parse_space(space)?;
            let d = measure_doubling(&s, None)?;
            eprintln!(
                "points={} metric={} kappa={} diameter={} resolution={} mass={} d_hat={} n_hat={}",
                s.len(),
                s.metric_name(),
                s.kappa(),
                s.diameter(),
                s.resolution(),
                s.total_mass(),
                d.d_hat,
                d.n_hat
            );
            let mut w = output(out)?;
            write_space(&s, &mut w)?;
            w.flush()?;
            Ok(0)
        }
        Cmd::Dyadic { ref cmd } => match cmd {
            DyadicCmd::Dump { space, sys, family, out } => {
                let s = parse_space(space)?;
                let fam = parse_family(&s, family)?;
                let systems = build_systems(&s, &system_config(Some(space.clone()), sys, family), Some(&fam))?;
                let mut w = output(out)?;
                systems.dump(&mut w)?;
                w.flush()?;
                Ok(0)
            }
            DyadicCmd::Check { space, sys, family } => {
                let s = parse_space(space)?;
                let fam = parse_family(&s, family)?;
                let systems = build_systems(&s, &system_config(Some(space.clone()), sys, family), Some(&fam))?;
                let r = systems.check_invariants(&s, &fam);
                println!("{r:#?}");
                println!("S = {}", systems.s_const());
                Ok(if r.all_pass() { 0 } else { 1 })
            }
        },
        Cmd::Maximal { ref cmd } => {
            let MaximalCmd::Eval { space, weight, kind, family, cube, sys, out } = cmd;
            let s = parse_space(space)?;
            let w = make_weight(&s, &WeightSpec::parse(weight)?)?.field;
            let field = match kind {
                KindArg::Dyadic => {
                    let systems = build_systems(&s, &system_config(Some(space.clone()), sys, family), None)?;
                    let q0 = match cube {
                        Some(c) => parse_cube(c)?,
                        None => systems.cubes_at(systems.k_min() + 2).next().context("no working cube")?,
                    };
                    anyhow::ensure!(q0.system < systems.k() && systems.levels().contains(&q0.level), "cube {q0:?} out of range");
                    anyhow::ensure!(q0.index < systems.cube_count(q0.system, q0.level), "cube {q0:?} out of range");
                    localized_dyadic_maximal(&systems, &s, q0, &w)
                }
                KindArg::Noncentered | KindArg::Centered => {
                    let fam = parse_family(&s, family)?;
                    let k = if matches!(kind, KindArg::Centered) { MaximalKind::Centered } else { MaximalKind::Noncentered };
                    let r = maximal(&s, &fam, &w, k);
                    if r.restricted {
                        eprintln!("family is not exhaustive; values are lower bounds ({} fallback points)", r.fallback_points);
                    }
                    r.field
                }
            };
            let mut out = output(out)?;
            writeln!(out, "id,value")?;
            for (i, v) in field.values.iter().enumerate() {
                writeln!(out, "{i},{}", fmt(*v))?;
            }
            out.flush()?;
            Ok(0)
        }
        Cmd::Constants(ref a) => {
            let s = parse_space(&a.space)?;
            let w = make_weight(&s, &WeightSpec::parse(&a.weight)?)?.field;
            let fam = parse_family(&s, &a.family)?;
            let (stat, sigma, q, family, value, witness) = match a.stat {
                StatArg::Ainf | StatArg::Rh => {
                    let r = if matches!(a.stat, StatArg::Ainf) { a_infty_sigma(&s, &fam, &w, a.sigma)? } else { rh_sigma(&s, &fam, &w, a.q, a.sigma)? };
                    (r.stat.name().to_string(), fmt(a.sigma), r.q.map(fmt).unwrap_or_default(), r.family, r.value, r.witness.to_string())
                }
                StatArg::AinfDyadic | StatArg::RhDyadic => {
                    let systems = build_systems(&s, &system_config(Some(a.space.clone()), &a.sys, &a.family), None)?;
                    let r = if matches!(a.stat, StatArg::AinfDyadic) { a_infty_dyadic(&systems, &s, &w)? } else { rh_dyadic(&systems, &s, &w, a.q)? };
                    (r.stat.name().to_string(), String::new(), r.q.map(fmt).unwrap_or_default(), r.family, r.value, r.witness.to_string())
                }
                StatArg::ScriptAinf => {
                    let mode = if fam.balls.iter().all(|b| b.members.len() <= EXACT_SUBSET_CAP) { ScriptMode::Exact } else { ScriptMode::Prefix };
                    let r = script_a_infty(&s, &fam, &w, a.sigma, a.c, a.p, mode)?;
                    let witness = r.witness_ball.map(|i| format!("ball:{}:{:.17e}", fam.balls[i].center, fam.balls[i].radius)).unwrap_or("-".into());
                    ("script-ainf".to_string(), fmt(a.sigma), String::new(), fam.label(), r.worst, witness)
                }
            };
            let mut out = csv_stdout();
            out.write_record(["stat", "sigma", "q", "family", "value", "witness"])?;
            out.write_record([stat, sigma, q, family, fmt(value), witness])?;
            out.flush()?;
            Ok(0)
        }
        Cmd::Experiment { .. } | Cmd::Run { .. } => {
            let (name, args) = match cli.cmd {
                Cmd::Experiment { cmd: ExperimentCmd::Run { ref name, ref args } } => (name.clone(), args),
                Cmd::Run { ref name, ref args } => (name.clone(), args),
                _ => unreachable!(),
            };
            let cfg = clone_args(args).into_config(name, &cli)?;
            let out = run(&cfg)?;
            write_artifacts(&cfg, &out)?;
            let code = exit_code(out.report.verdict);
            eprintln!("verdict: {} ({} rows, {:.0} ms)", out.report.verdict.name(), out.report.rows.len(), out.report.runtime_ms);
            if code != 0 {
                eprintln!("witness: {}", out.report.witness.as_deref().unwrap_or("-"));
            }
            Ok(code)
        }
        Cmd::Bundle { ref config, ref out, ref index } => {
            let configs = load_bundle(config)?;
            let index = index.clone().unwrap_or_else(|| out.with_extension("index.csv"));
            let rows = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
            let idx = BufWriter::new(File::create(&index).with_context(|| format!("creating {}", index.display()))?);
            let (entries, code) = bundle(&configs, threads, rows, idx)?;
            for e in &entries {
                eprintln!("{} {} {} exit={}{}", e.run_id, e.experiment, e.verdict, e.exit, if e.error.is_empty() { String::new() } else { format!(" ({})", e.error) });
            }
            Ok(code)
        }
    }
}

fn csv_stdout() -> csv::Writer<std::io::Stdout> {
    csv::Writer::from_writer(std::io::stdout())
}

fn clone_args(a: &RunArgs) -> RunArgs {
    RunArgs {
        config: a.config.clone(),
        space: a.space.clone(),
        weight: a.weight.clone(),
        family: a.family.clone(),
        delta: a.delta,
        mode: a.mode,
        seed: a.seed,
        sigma: a.sigma,
        sigmas: a.sigmas.clone(),
        q: a.q,
        p: a.p.clone(),
        jmax: a.jmax,
        variant: a.variant.clone(),
        ratio: a.ratio,
        samples: a.samples,
        sample_seed: a.sample_seed,
        lambdas: a.lambdas,
        eps: a.eps.clone(),
        pts: a.pts.clone(),
        teeth: a.teeth,
        octaves: a.octaves,
        n: a.n,
        kmax: a.kmax,
        out: a.out.clone(),
        svg: a.svg.clone(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
