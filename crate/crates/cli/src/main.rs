use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use adrhp::analysis::{replica_seed, CouplingHarness, CouplingReport, HarnessOptions, ReplicaBudget};
use adrhp::config::{parse_config, validate_config, AssumptionReport, ExperimentConfig};
use adrhp::limit::{mean_intensity_bounded, solve_limit};
use adrhp::particle::{simulate_adrhp, SimOptions};
use adrhp::pde::SolverOptions;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "adrhp", version, about = "Age-dependent random Hawkes processes and their mean-field limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the n-particle system and export the event log.
    Simulate(Common),
    /// Solve the age-structured PDE and export u, u0 and X.
    SolvePde(Common),
    /// Compute the limit mean intensity curve.
    Limit(Common),
    /// Couple particles with limit copies at one n.
    Couple(Common),
    /// Coupling sweep over an n ladder with a log-log rate fit.
    Sweep(Common),
    /// Report the status of every model assumption.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to experiment.output_dir, then ".".
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Particle counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    dx: Option<f64>,
}

enum Failure {
    Core(adrhp::Error),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(e) => e.exit_code() as u8,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<adrhp::Error> for Failure {
    fn from(e: adrhp::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

struct Run {
    cfg: ExperimentConfig,
    report: AssumptionReport,
    out: PathBuf,
}

impl Run {
    fn load(args: &Common) -> Outcome<Run> {
        let text = fs::read_to_string(&args.config)
            .map_err(|e| adrhp::Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
        let mut cfg = parse_config(&text)?;
        let x = &mut cfg.experiment;
        if let Some(s) = args.seed {
            x.seed = s;
        }
        if let Some(t) = args.theta {
            x.theta = t;
        }
        if let Some(d) = args.dx {
            x.dx = d;
        }
        if let Some(r) = args.replicas {
            x.replicas = r;
        }
        if let Some(n) = &args.n {
            x.n_list = n.clone();
        }
        if !(x.theta > 0.0) || !(x.dx > 0.0) || x.n_list.is_empty() || x.n_list.contains(&0) || x.replicas == 0 {
            return Err(adrhp::Error::Config("need theta > 0, dx > 0, replicas >= 1 and n >= 1".into()).into());
        }
        let out = args
            .out
            .clone()
            .or_else(|| cfg.experiment.output_dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&out)?;
        let report = validate_config(&cfg);
        Ok(Run { cfg, report, out })
    }

    fn solver(&self) -> SolverOptions {
        let t = &self.cfg.experiment.tolerances;
        SolverOptions { fp_tol: t.fp_tol, max_iter: t.max_iter, snapshot_times: Vec::new() }
    }

    fn sim(&self) -> SimOptions {
        SimOptions { event_cap: self.cfg.experiment.tolerances.event_cap }
    }

    fn n(&self) -> usize {
        self.cfg.experiment.n_list[0]
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn harness(&self) -> Outcome<CouplingHarness> {
        self.report.require_pipeline()?;
        let x = &self.cfg.experiment;
        let opts = HarnessOptions {
            dx: x.dx,
            solver: self.solver(),
            sim: self.sim(),
            w1_times: x.w1_times.clone(),
            force_pde: x.force_pde,
        };
        Ok(CouplingHarness::new(&self.cfg.model, x.theta, opts)?)
    }

    fn summary(&self, command: &str, extra: Value) -> Value {
        let x = &self.cfg.experiment;
        let mut v = json!({
            "command": command,
            "seed": x.seed,
            "theta": x.theta,
            "dx": x.dx,
            "slope": Value::Null,
            "slope_se": Value::Null,
            "beta_theta_bound": Value::Null,
            "assumptions": self.report,
        });
        if let (Value::Object(base), Value::Object(more)) = (&mut v, extra) {
            base.extend(more);
        }
        v
    }

    fn write_summary(&self, v: &Value) -> Outcome<()> {
        let mut text = serde_json::to_string_pretty(v)?;
        text.push('\n');
        fs::write(self.path("summary.json"), text)?;
        Ok(())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn simulate(run: &Run) -> Outcome<()> {
    let x = &run.cfg.experiment;
    let n = run.n();
    let runs: Vec<_> = (0..x.replicas)
        .into_par_iter()
        .map(|r| simulate_adrhp(&run.cfg.model, n, x.theta, replica_seed(x.seed, n, r), run.sim()))
        .collect::<adrhp::Result<_>>()?;
    let mut events = csv::Writer::from_path(run.path("events.csv"))?;
    events.write_record(["replica", "particle", "time"])?;
    for (r, sys) in runs.iter().enumerate() {
        for (i, p) in sys.paths.iter().enumerate() {
            for &t in &p.events {
                events.write_record([r.to_string(), i.to_string(), num(t)])?;
            }
        }
    }
    events.flush()?;
    if x.audit {
        let mut audit = csv::Writer::from_path(run.path("audit.csv"))?;
        audit.write_record(["replica", "particle", "time", "intensity", "envelope"])?;
        for (r, sys) in runs.iter().enumerate() {
            for a in &sys.audit {
                audit.write_record([r.to_string(), a.particle.to_string(), num(a.time), num(a.intensity), num(a.envelope)])?;
            }
        }
        audit.flush()?;
    }
    let counts: Vec<usize> = runs.iter().map(|s| s.total_events()).collect();
    run.write_summary(&run.summary("simulate", json!({ "n": n, "replicas": x.replicas, "events": counts })))
}

fn solve_pde(run: &Run) -> Outcome<()> {
    let x = &run.cfg.experiment;
    let m = &run.cfg.model;
    let mut opts = run.solver();
    opts.snapshot_times = if x.w1_times.is_empty() {
        (0..=10).map(|k| x.theta * k as f64 / 10.0).collect()
    } else {
        x.w1_times.clone()
    };
    let (_, sol) = mean_intensity_bounded(&m.psi, |t| m.mean_kernel(t), |t| m.past_mean(t), &m.initial, x.dx, x.theta, &opts)?;
    let bound = m.initial.density_bound().unwrap_or(0.0).max(m.psi.sup_bound().unwrap_or(f64::INFINITY));
    sol.check_invariants(run.cfg.mass_tol(), bound)?;
    let quad_tol = x.tolerances.quad_tol;
    if sol.meta.max_boundary_residual > quad_tol * (1.0 + sol.meta.u_max) {
        return Err(adrhp::Error::Convergence(format!(
            "boundary identity residual {} exceeds {quad_tol}",
            sol.meta.max_boundary_residual
        ))
        .into());
    }
    let mut density = csv::Writer::from_path(run.path("density.csv"))?;
    density.write_record(["t", "s", "u"])?;
    for (&k, row) in sol.snapshot_rows.iter().zip(&sol.snapshots) {
        let t = sol.grid.t(k);
        for (j, u) in row.iter().enumerate() {
            density.write_record([num(t), num(sol.grid.s(j)), num(*u)])?;
        }
    }
    density.flush()?;
    let mut boundary = csv::Writer::from_path(run.path("boundary.csv"))?;
    boundary.write_record(["t", "u0", "X"])?;
    for (k, (u0, xk)) in sol.u0.iter().zip(&sol.x).enumerate() {
        boundary.write_record([num(sol.grid.t(k)), num(*u0), num(*xk)])?;
    }
    boundary.flush()?;
    run.write_summary(&run.summary("solve-pde", json!({ "solver": format!("{:?}", sol.meta) })))
}

fn limit(run: &Run) -> Outcome<()> {
    run.report.require_pipeline()?;
    let x = &run.cfg.experiment;
    let sol = solve_limit(&run.cfg.model, x.dx, x.theta, &run.solver(), x.force_pde)?;
    let mut w = csv::Writer::from_path(run.path("mean_intensity.csv"))?;
    w.write_record(["t", "lambda_bar", "gamma_bar"])?;
    for (k, (l, g)) in sol.curve.lambda.iter().zip(&sol.curve.gamma).enumerate() {
        w.write_record([num(k as f64 * sol.curve.dx), num(*l), num(*g)])?;
    }
    w.flush()?;
    let regime = format!("{:?}", sol.regime);
    run.write_summary(&run.summary(
        "limit",
        json!({
            "regime": regime,
            "provenance": format!("{:?}", sol.curve.provenance),
            "sup_lambda_bar": sol.curve.sup_lambda(),
        }),
    ))
}

fn write_report(run: &Run, command: &str, rep: &CouplingReport) -> Outcome<()> {
    let mut w = csv::Writer::from_path(run.path("coupling.csv"))?;
    let mut header = vec!["n".to_string(), "replica".into(), "delta_n".into(), "age_gap".into()];
    if rep.rows.first().is_some_and(|r| !r.w1.is_empty()) {
        header.extend(rep.w1_times.iter().map(|t| format!("w1_age@{t}")));
    }
    w.write_record(&header)?;
    for r in &rep.rows {
        let mut rec = vec![r.n.to_string(), r.replica.to_string(), num(r.delta_n), num(r.age_gap)];
        rec.extend(r.w1.iter().map(|v| num(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let slope = rep.fit.map(|f| f.slope);
    let ci = match (slope, rep.slope_se) {
        (Some(s), Some(se)) => json!([s - 1.96 * se, s + 1.96 * se]),
        _ => Value::Null,
    };
    let v = run.summary(
        command,
        json!({
            "regime": rep.regime,
            "slope": slope,
            "slope_se": rep.slope_se,
            "slope_ci95": ci,
            "intercept": rep.fit.map(|f| f.intercept),
            "fit_note": rep.fit_note,
            "underpowered": rep.underpowered,
            "beta_theta_bound": rep.beta.value,
            "beta": rep.beta,
            "per_n": rep.per_n,
        }),
    );
    run.write_summary(&v)
}

fn couple(run: &Run) -> Outcome<()> {
    let h = run.harness()?;
    let x = &run.cfg.experiment;
    let rep = h.couple(run.n(), x.replicas, x.seed)?;
    write_report(run, "couple", &rep)
}

fn sweep(run: &Run) -> Outcome<()> {
    let h = run.harness()?;
    let x = &run.cfg.experiment;
    let budget = ReplicaBudget {
        min: x.replicas,
        max: x.max_replicas.max(x.replicas),
        target_rel_se: x.tolerances.target_rel_se,
    };
    let rep = h.sweep(&x.n_list, x.seed, &budget)?;
    write_report(run, "sweep", &rep)
}

fn validate(run: &Run) -> Outcome<()> {
    println!("{}", serde_json::to_string_pretty(&run.report)?);
    run.write_summary(&run.summary("validate", json!({})))?;
    run.report.require_pipeline()?;
    Ok(())
}

fn dispatch(cli: Cli) -> Outcome<()> {
    let (args, f): (&Common, fn(&Run) -> Outcome<()>) = match &cli.command {
        Command::Simulate(a) => (a, simulate),
        Command::SolvePde(a) => (a, solve_pde),
        Command::Limit(a) => (a, limit),
        Command::Couple(a) => (a, couple),
        Command::Sweep(a) => (a, sweep),
        Command::Validate(a) => (a, validate),
    };
    if let Some(j) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Failure::Io(e.to_string()))?;
    }
    let run = Run::load(args)?;
    f(&run)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("adrhp: {e}");
            ExitCode::from(e.code())
        }
    }
}
