mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use skdvb::field::Provenance;
use skdvb::paths::sample_brownian;
use skdvb::processes::LinearSdeProcess;
use skdvb::rng::ensemble_seed;
use skdvb::scenario::{presets, Config, NoiseKind};
use skdvb::spde_exact::{langevin_pair, solve};
use skdvb::verify::moments::{moment_csv, moment_estimates, ProcessSpec, MIN_PATHS};
use skdvb::verify::suite::{default_suite, SuiteOptions};
use skdvb::verify::{convergence_study, residual_study, verdict_csv, Verdict};
use skdvb::{CoeffFn, FieldTrajectory};

#[derive(Parser)]
#[command(name = "skdvb", version, about = "Exact and numerical solutions of stochastic KdV–Burgers equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Config file, or the name of a built-in preset.
    #[arg(long)]
    config: Option<String>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write SVG plots (default).
    #[arg(long, overrides_with = "no_svg")]
    svg: bool,
    #[arg(long = "no-svg")]
    no_svg: bool,
}

impl Common {
    fn svg_enabled(&self) -> bool {
        self.svg || !self.no_svg
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact solution on one Brownian path: field CSV, path CSV and plots.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Many paths: per-path summaries and Monte Carlo moments.
    Ensemble {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
    },
    /// Default verification suite, plus checks for `--config` if given.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Exact composition against the Euler–Maruyama oracle under refinement.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Render plots from a field CSV written by `simulate`.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Core(String, skdvb::Error),
    Io(PathBuf, std::io::Error),
    Checks(usize),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Checks(_) => 1,
            Failure::Usage(_) | Failure::Io(..) => 2,
            Failure::Core(_, e) if e.is_numerical() => 3,
            Failure::Core(..) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(ctx, e) => format!("{ctx}: {e}"),
            Failure::Io(p, e) => format!("{}: {e}", p.display()),
            Failure::Checks(n) => format!("{n} check(s) failed"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

trait Context<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> Outcome<T>;
}

impl<T> Context<T> for skdvb::Result<T> {
    fn context(self, ctx: impl FnOnce() -> String) -> Outcome<T> {
        self.map_err(|e| Failure::Core(ctx(), e))
    }
}

/// Write through a temporary file in the target directory and rename it
/// into place.
fn write_file(path: &Path, contents: &str) -> Outcome<()> {
    let io = |e| Failure::Io(path.to_path_buf(), e);
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn load_config(spec: &str) -> Outcome<Config> {
    let path = Path::new(spec);
    if path.exists() {
        return Config::from_file(path).context(|| format!("config {spec}"));
    }
    if presets::text(spec).is_some() {
        return presets::load(spec).context(|| format!("preset {spec}"));
    }
    Err(Failure::Usage(format!(
        "no config file or preset named `{spec}` (presets: {})",
        presets::NAMES.join(", ")
    )))
}

fn required_config(common: &Common) -> Outcome<Config> {
    let spec = common
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("--config <path|preset> is required".into()))?;
    load_config(spec)
}

fn resolve_seed(common: &Common, cfg: &Config) -> Outcome<u64> {
    match common.seed.or(cfg.seed) {
        Some(s) => Ok(s),
        None if cfg.scenario.is_noise_free() => Ok(0),
        None => Err(Failure::Usage(format!(
            "scenario `{}` is stochastic: give a seed in the config or via --seed",
            cfg.name
        ))),
    }
}

fn plots(out: &Path, stem: &str, field: &FieldTrajectory) -> Outcome<()> {
    write_file(&out.join(format!("{stem}_slices.svg")), &svg::slice_plot(stem, field, 5))?;
    write_file(&out.join(format!("{stem}_heatmap.svg")), &svg::heatmap(stem, field))
}

fn simulate(common: &Common) -> Outcome<()> {
    let cfg = required_config(common)?;
    let seed = resolve_seed(common, &cfg)?;
    let path = sample_brownian(cfg.tgrid, seed);
    let u = solve(&cfg.scenario, &path, &cfg.sgrid).context(|| format!("scenario {}", cfg.name))?;
    let out = &common.out;
    write_file(&out.join(format!("{}_field.csv", cfg.name)), &u.to_csv())?;
    write_file(&out.join(format!("{}_path.csv", cfg.name)), &path.to_csv())?;
    if common.svg_enabled() {
        plots(out, &cfg.name, &u)?;
    }
    println!("provenance: {}", u.provenance().as_str());
    Ok(())
}

/// The Gaussian process underlying the composition for each noise kind.
fn underlying_process(cfg: &Config) -> skdvb::Result<Option<ProcessSpec>> {
    let s = &cfg.scenario;
    Ok(match s.kind {
        NoiseKind::Advection => Some(ProcessSpec::Linear(LinearSdeProcess::new(
            s.alpha.clone(),
            s.sigma.clone(),
            0.0,
            0.0,
            s.t0,
        )?)),
        NoiseKind::Additive => Some(ProcessSpec::Langevin(langevin_pair(s)?)),
        NoiseKind::Multiplicative => match s.sigma.product(&s.sigma) {
            Some(sq) => Some(ProcessSpec::Linear(LinearSdeProcess::new(
                CoeffFn::scale(0.5, sq),
                CoeffFn::scale(-1.0, s.sigma.clone()),
                0.0,
                0.0,
                s.t0,
            )?)),
            None => None,
        },
    })
}

fn ensemble(common: &Common, paths: usize) -> Outcome<()> {
    let cfg = required_config(common)?;
    let seed = resolve_seed(common, &cfg)?;
    if paths == 0 {
        return Err(Failure::Usage("--paths must be positive".into()));
    }
    let ctx = || format!("scenario {}", cfg.name);
    let rows = (0..paths)
        .into_par_iter()
        .map(|p| {
            let s = ensemble_seed(seed, p as u64);
            let path = sample_brownian(cfg.tgrid, s);
            let u = solve(&cfg.scenario, &path, &cfg.sgrid)?;
            let last = u.last_slice();
            let (lo, hi) = last.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            let mean = last.iter().sum::<f64>() / last.len() as f64;
            let f = skdvb::csvio::fmt17;
            Ok(format!("{p},{s},{},{},{},{}\n", f(*path.values().last().unwrap()), f(lo), f(hi), f(mean)))
        })
        .collect::<skdvb::Result<Vec<String>>>()
        .context(ctx)?;
    let mut csv = String::from("path,seed,W_T,u_min_T,u_max_T,u_mean_T\n");
    csv.extend(rows);
    write_file(&common.out.join(format!("{}_ensemble.csv", cfg.name)), &csv)?;
    if paths < MIN_PATHS {
        eprintln!("note: moment CSV needs at least {MIN_PATHS} paths; skipped");
        return Ok(());
    }
    let Some(spec) = underlying_process(&cfg).context(ctx)? else {
        eprintln!("note: no closed-form law for this sigma; moment CSV skipped");
        return Ok(());
    };
    let (t0, t1) = (cfg.scenario.t0, cfg.scenario.t_end);
    let probes = [t0 + 0.25 * (t1 - t0), t0 + 0.5 * (t1 - t0), t1];
    let est = moment_estimates(&spec, &probes, paths, cfg.tgrid.n_steps(), seed).context(ctx)?;
    write_file(&common.out.join(format!("{}_moments.csv", cfg.name)), &moment_csv(&est))
}

fn verify(common: &Common, paths: usize, levels: usize) -> Outcome<()> {
    let opts = SuiteOptions {
        n_paths: paths,
        levels,
        seed: common.seed,
        ..SuiteOptions::default()
    };
    let mut outcome = default_suite(&opts).context(|| "verification suite".into())?;
    let out = &common.out;
    if let Some(spec) = common.config.as_deref() {
        let cfg = load_config(spec)?;
        let seed = resolve_seed(common, &cfg)?;
        let ctx = || format!("scenario {}", cfg.name);
        let min = if cfg.scenario.is_noise_free() { 1.0 } else { 0.0 };
        let st = residual_study(&cfg.scenario, &cfg.study, seed, levels).context(ctx)?;
        outcome.reports.push(st.check(&format!("residual_{}", cfg.name), min));
        outcome.residuals.push((cfg.name.clone(), st));
    }
    write_file(&out.join("verdicts.csv"), &verdict_csv(&outcome.reports))?;
    write_file(&out.join("moments.csv"), &moment_csv(&outcome.moments))?;
    for (name, t) in &outcome.convergence {
        write_file(&out.join(format!("convergence_{name}.csv")), &t.to_csv())?;
    }
    for (name, st) in &outcome.residuals {
        write_file(&out.join(format!("residual_{name}.csv")), &st.to_csv())?;
    }
    for d in &outcome.diagnostics {
        let dir = out.join("diagnostics");
        write_file(&dir.join(format!("{}.csv", d.name)), &d.to_csv())?;
        write_file(&dir.join(format!("{}.md", d.name)), &d.to_markdown())?;
        println!("diagnostic {}: {}", d.name, d.finding);
    }
    let count = |v: Verdict| outcome.reports.iter().filter(|r| r.verdict == v).count();
    for r in outcome.reports.iter().filter(|r| r.failed()) {
        println!("FAIL {} {}: expected {} observed {} band {}", r.check, r.quantity, r.expected, r.observed, r.band);
    }
    println!(
        "{} checks: {} pass, {} fail, {} inconclusive",
        outcome.reports.len(),
        count(Verdict::Pass),
        count(Verdict::Fail),
        count(Verdict::Inconclusive)
    );
    match count(Verdict::Fail) {
        0 => Ok(()),
        n => Err(Failure::Checks(n)),
    }
}

fn converge(common: &Common, levels: usize) -> Outcome<()> {
    let cfg = required_config(common)?;
    let seed = resolve_seed(common, &cfg)?;
    let table = convergence_study(&cfg.scenario, &cfg.study, seed, levels).context(|| format!("scenario {}", cfg.name))?;
    write_file(&common.out.join(format!("{}_convergence.csv", cfg.name)), &table.to_csv())?;
    if common.svg_enabled() {
        let dt = |n: usize| (cfg.scenario.t_end - cfg.scenario.t0) / n as f64;
        let series = [
            svg::Series {
                label: "L∞ at T".into(),
                points: table.rows.iter().filter_map(|r| r.error_linf.map(|e| (dt(r.n_steps), e))).collect(),
            },
            svg::Series {
                label: "L2 at T".into(),
                points: table.rows.iter().filter_map(|r| r.error_l2.map(|e| (dt(r.n_steps), e))).collect(),
            },
        ];
        let plot = svg::line_plot(&cfg.name, "dt", "error", &series, svg::Scale::LogLog);
        write_file(&common.out.join(format!("{}_convergence.svg", cfg.name)), &plot)?;
    }
    for r in &table.rows {
        println!("level {} n_steps {} h {} error {:?} {}", r.level, r.n_steps, r.h, r.error_linf, r.status);
    }
    match table.fitted_order {
        Some(o) => println!("fitted order {o:.3}"),
        None => println!("fitted order unavailable"),
    }
    Ok(())
}

fn plot(input: &Path, out: &Path) -> Outcome<()> {
    let text = fs::read_to_string(input).map_err(|e| Failure::Io(input.to_path_buf(), e))?;
    let field = FieldTrajectory::from_csv(&text, Provenance::Exact).context(|| input.display().to_string())?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    plots(out, stem, &field)
}

fn run(cli: Cli) -> Outcome<()> {
    match cli.command {
        Command::Simulate { common } => simulate(&common),
        Command::Ensemble { common, paths } => ensemble(&common, paths),
        Command::Verify { common, paths, levels } => verify(&common, paths, levels),
        Command::Converge { common, levels } => converge(&common, levels),
        Command::Plot { input, out } => plot(&input, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
