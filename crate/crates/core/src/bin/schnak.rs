use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use schnak_core::fem::FemSpace;
use schnak_core::forward::{garvie_init, simulate, ForwardConfig};
use schnak_core::harness::{convergence_study, identify, ConvergenceConfig, ConvergenceRow, CostTerms, IdentifyConfig};
use schnak_core::io::{parse_key_values, write_vtk, JsonLines, NodalDump};
use schnak_core::sqp::{SqpConfig, SqpIteration};
use schnak_core::trajectory::Scheme;
use schnak_core::Error;

#[derive(Parser)]
#[command(name = "schnak", version, about = "Parameter identification for the Schnakenberg model")]
struct Cli {
    /// key=value file with defaults for any flag; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence study on the manufactured solution.
    Converge(ConvergeArgs),
    /// Forward simulation from a perturbed steady state.
    Forward(ForwardArgs),
    /// Identify controls from a target snapshot.
    Identify(IdentifyArgs),
}

#[derive(Args)]
struct ConvergeArgs {
    /// sv or bwe [default: sv]
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// [default: 2]
    #[arg(long)]
    gamma: Option<f64>,
    /// Inclusive level range such as 1..3 [default: 1..2]
    #[arg(long)]
    levels: Option<String>,
    /// Final time [default: 1]
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long = "tol-minres")]
    tol_minres: Option<f64>,
    #[arg(long = "tol-sqp")]
    tol_sqp: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ForwardArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Cells per side [default: 20]
    #[arg(long)]
    n: Option<usize>,
    /// Final time [default: 5]
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Time step [default: 1e-3]
    #[arg(long)]
    dt: Option<f64>,
    /// Nodal dump to write; a `.vtk` copy is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Nodal dump holding fields `u` and `v`.
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Final time [default: 2]
    #[arg(long = "T")]
    t_final: Option<f64>,
    /// Number of time steps [default: 200]
    #[arg(long)]
    nt: Option<usize>,
    /// sv or bwe [default: sv]
    #[arg(long)]
    scheme: Option<String>,
    /// [default: 1e-7]
    #[arg(long = "tol-minres")]
    tol_minres: Option<f64>,
    /// [default: 1e-6]
    #[arg(long = "tol-sqp")]
    tol_sqp: Option<f64>,
    /// Comma-separated times for VTK snapshots [default: T]
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Flag values merged over a config file, with defaults last.
struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self, Error> {
        let file = match path {
            Some(p) => parse_key_values(&fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        Ok(Self { file })
    }

    fn value<T: FromStr>(&self, key: &str, flag: Option<T>, default: Option<T>) -> Result<T, Error>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(raw) = self.file.get(key) {
            return raw
                .parse()
                .map_err(|e| Error::Parse(format!("config key `{key}` = {raw:?}: {e}")));
        }
        default.ok_or_else(|| Error::InvalidArgument(format!("--{key} is required")))
    }

    fn warn_unknown(&self, known: &[&str]) {
        for k in self.file.keys().filter(|k| !known.contains(&k.as_str())) {
            log::warn!("ignoring unknown config key `{k}`");
        }
    }
}

fn parse_levels(s: &str) -> Result<RangeInclusive<usize>, Error> {
    let bad = || Error::Parse(format!("levels must look like 1..3 or 2, got {s:?}"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a, b.trim_start_matches('=')),
        None => (s, s),
    };
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    Ok(lo..=hi)
}

fn parse_times(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|e| Error::Parse(format!("snapshot time {t:?}: {e}"))))
        .collect()
}

#[derive(Serialize)]
struct IterationRecord<'a> {
    level: Option<usize>,
    sqp_iteration: usize,
    #[serde(flatten)]
    iteration: &'a SqpIteration,
}

fn log_iterations<W: Write>(log: &mut JsonLines<W>, level: Option<usize>, its: &[SqpIteration]) -> Result<(), Error> {
    for (k, it) in its.iter().enumerate() {
        log.record(&IterationRecord {
            level,
            sqp_iteration: k + 1,
            iteration: it,
        })?;
    }
    Ok(())
}

fn converge(args: ConvergeArgs, s: &Settings) -> Result<bool, Error> {
    s.warn_unknown(&["scheme", "beta", "gamma", "levels", "T", "tol-minres", "tol-sqp", "out"]);
    let defaults = SqpConfig::default();
    let scheme: Scheme = s.value("scheme", args.scheme, Some("sv".into()))?.parse()?;
    let cfg = ConvergenceConfig {
        scheme,
        beta: s.value("beta", args.beta, None)?,
        gamma: s.value("gamma", args.gamma, Some(2.0))?,
        t_final: s.value("T", args.t_final, Some(1.0))?,
        levels: parse_levels(&s.value("levels", args.levels, Some("1..2".into()))?)?,
        sqp: SqpConfig {
            tol_minres: s.value("tol-minres", args.tol_minres, Some(defaults.tol_minres))?,
            tol_sqp: s.value("tol-sqp", args.tol_sqp, Some(defaults.tol_sqp))?,
            ..defaults
        },
    };
    cfg.sqp.validate()?;
    let out: PathBuf = s.value("out", args.out, Some(PathBuf::from("out")))?;
    fs::create_dir_all(&out)?;
    let mut csv = fs::File::create(out.join("convergence.csv"))?;
    writeln!(csv, "{}", ConvergenceRow::csv_header())?;
    println!("{}", ConvergenceRow::csv_header());
    let mut log = JsonLines::create(&out.join("run.jsonl"))?;
    let mut io_error = None;
    let rows = convergence_study(&cfg, |row, _| {
        let line = row.csv_line();
        println!("{line}");
        let res = writeln!(csv, "{line}")
            .map_err(Error::from)
            .and_then(|_| log_iterations(&mut log, Some(row.level), &row.stats.iterations));
        if let Err(e) = res {
            io_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    Ok(rows.iter().all(|r| r.errors.is_some() && r.stats.converged))
}

fn forward(args: ForwardArgs, s: &Settings) -> Result<bool, Error> {
    s.warn_unknown(&["a", "b", "gamma", "n", "T", "dt", "out"]);
    let n = s.value("n", args.n, Some(20))?;
    let mut cfg = ForwardConfig::new(
        s.value("a", args.a, None)?,
        s.value("b", args.b, None)?,
        s.value("gamma", args.gamma, None)?,
        n,
    );
    cfg.t_final = s.value("T", args.t_final, Some(cfg.t_final))?;
    cfg.dt = s.value("dt", args.dt, Some(cfg.dt))?;
    cfg.snapshot_times = vec![cfg.t_final];
    let out: PathBuf = s.value("out", args.out, None)?;
    cfg.validate()?;

    let space = FemSpace::new(n)?;
    let (u0, v0) = garvie_init(cfg.a, cfg.b, &space.mesh, &cfg.perturbation)?;
    let run = simulate(&cfg, &space, &u0, &v0)?;
    let snap = &run.snapshots[0];
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    NodalDump::new(n, vec![("u".into(), snap.u.clone()), ("v".into(), snap.v.clone())])?.write(&out)?;
    write_vtk(
        &out.with_extension("vtk"),
        &space.mesh,
        &format!("forward t={}", snap.time),
        &[("u", &snap.u), ("v", &snap.v)],
    )?;
    println!(
        "t = {}: {} steps, int u = {:.6e}, int v = {:.6e}",
        snap.time, run.steps, snap.mass[0], snap.mass[1]
    );
    Ok(true)
}

fn identify_cmd(args: IdentifyArgs, s: &Settings) -> Result<bool, Error> {
    s.warn_unknown(&[
        "target", "beta", "gamma", "T", "nt", "scheme", "tol-minres", "tol-sqp", "snapshots", "out",
    ]);
    let target: PathBuf = s.value("target", args.target, None)?;
    let scheme: Scheme = s.value("scheme", args.scheme, Some("sv".into()))?.parse()?;
    let mut cfg = IdentifyConfig::new(scheme, s.value("beta", args.beta, None)?, s.value("gamma", args.gamma, None)?);
    cfg.t_final = s.value("T", args.t_final, Some(cfg.t_final))?;
    cfg.n_t = s.value("nt", args.nt, Some(cfg.n_t))?;
    cfg.sqp.tol_minres = s.value("tol-minres", args.tol_minres, Some(cfg.sqp.tol_minres))?;
    cfg.sqp.tol_sqp = s.value("tol-sqp", args.tol_sqp, Some(cfg.sqp.tol_sqp))?;
    let times = match s.value::<String>("snapshots", args.snapshots, None) {
        Ok(raw) => parse_times(&raw)?,
        Err(_) => vec![cfg.t_final],
    };
    let out: PathBuf = s.value("out", args.out, Some(PathBuf::from("out")))?;

    let dump = NodalDump::read(&target)?;
    let field = |name: &str| {
        dump.field(name)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| Error::Parse(format!("{} has no field `{name}`", target.display())))
    };
    let (uf, vf) = (field("u")?, field("v")?);
    let space = FemSpace::new(dump.n)?;
    let res = identify(&cfg, &space, &uf, &vf)?;

    fs::create_dir_all(&out)?;
    let mut log = JsonLines::create(&out.join("run.jsonl"))?;
    log_iterations(&mut log, None, &res.stats.iterations)?;
    let mut costs = fs::File::create(out.join("costs.csv"))?;
    writeln!(costs, "beta,{},minres_mean,sqp_iters,cpu_s", CostTerms::csv_header())?;
    writeln!(
        costs,
        "{:e},{},{:.2},{},{:.3}",
        cfg.beta,
        res.costs.csv_fields(),
        res.stats.mean_minres(),
        res.stats.sqp_iterations(),
        res.stats.cpu_seconds
    )?;
    let mut means = fs::File::create(out.join("control_means.csv"))?;
    writeln!(means, "t,mean_a,mean_b")?;
    for (t, a, b) in &res.means {
        writeln!(means, "{t:.6},{a:.6e},{b:.6e}")?;
    }

    let traj = &res.trajectory;
    let (st, ct) = (traj.state_times(), traj.control_times());
    let nearest = |ts: &[f64], t: f64| {
        (0..ts.len())
            .min_by(|&i, &j| (ts[i] - t).abs().total_cmp(&(ts[j] - t).abs()))
            .unwrap_or(0)
    };
    for t in times {
        if !(0.0..=cfg.t_final).contains(&t) {
            return Err(Error::InvalidArgument(format!("snapshot time {t} outside [0, {}]", cfg.t_final)));
        }
        let (i, k) = (nearest(&st, t), nearest(&ct, t));
        write_vtk(
            &out.join(format!("snapshot_t{t}.vtk")),
            &space.mesh,
            &format!("states t={} controls t={}", st[i], ct[k]),
            &[
                ("u", &traj.u[i]),
                ("v", &traj.v[i]),
                ("u_hat", &res.data.target_u[i]),
                ("v_hat", &res.data.target_v[i]),
                ("a", &traj.a[k]),
                ("b", &traj.b[k]),
            ],
        )?;
    }
    println!("beta,{},minres_mean,sqp_iters", CostTerms::csv_header());
    println!(
        "{:e},{},{:.2},{}",
        cfg.beta,
        res.costs.csv_fields(),
        res.stats.mean_minres(),
        res.stats.sqp_iterations()
    );
    Ok(res.stats.converged)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Parse(_) | Error::DimensionMismatch { .. } => 2,
        Error::Diverged { .. } | Error::NumericDomain(_) | Error::Singular(_) => 3,
        Error::Io(_) | Error::Json(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = Settings::load(cli.config.as_deref()).and_then(|s| match cli.command {
        Command::Converge(a) => converge(a, &s),
        Command::Forward(a) => forward(a, &s),
        Command::Identify(a) => identify_cmd(a, &s),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: solver did not converge");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
