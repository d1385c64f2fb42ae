use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nlstop_core::closed_forms::{oracle_value, ValueTable};
use nlstop_core::majorant::{compute_majorant, MajorantOptions, MajorantResult};
use nlstop_core::mc_oracle::{verify_solution, MCConfig};
use nlstop_core::risk_mapping::{check_axioms, probe_strict_monotonicity};
use nlstop_core::solver::{posthoc_check, solve, Solution, SolveOptions};
use nlstop_core::{Error, GainSpec, Grid, RiskMapping};

const MIN_GRID: usize = 101;

#[derive(Parser)]
#[command(name = "nlstop", version, about = "Optimal stopping of absorbed Brownian motion under risk mappings")]
struct Cli {
    /// Worker threads (default: all cores); affects wall time only
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smooth-fit tangency solver
    Solve(SolveArgs),
    /// Direct search over two-point exit functions
    Majorant(MajorantArgs),
    /// Closed-form value function
    Oracle(OracleArgs),
    /// Monte Carlo check of a solution at one starting point
    Verify(VerifyArgs),
    /// Randomised check of the risk-mapping axioms
    Axioms(AxiomsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Risk {
    Linear,
    Entropic,
    WorstCase,
}

impl Risk {
    fn mapping(self) -> RiskMapping {
        match self {
            Risk::Linear => RiskMapping::linear(),
            Risk::Entropic => RiskMapping::entropic(),
            Risk::WorstCase => RiskMapping::worst_case(),
        }
    }
}

#[derive(Args)]
struct Problem {
    #[arg(long, value_enum)]
    risk: Risk,
    /// poly:c0,c1,..  |  sin:a,b,c,d  |  pwl:x0:y0,x1:y1,..
    #[arg(long)]
    gain: String,
    /// Grid points on [0, 1], at least 101
    #[arg(long, default_value_t = 1001)]
    grid: usize,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: Problem,
    /// Walk step (default: ten grid spacings)
    #[arg(long)]
    delta: Option<f64>,
    /// Cells per axis in the tangency scan
    #[arg(long, default_value_t = 400)]
    mesh: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    components: Option<PathBuf>,
    /// Compare against the direct majorant afterwards
    #[arg(long)]
    posthoc_check: bool,
    /// Resolution used by --posthoc-check
    #[arg(long, default_value_t = 201)]
    param_res: usize,
    /// Probe strict monotonicity of the mapping
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Args)]
struct MajorantArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long, default_value_t = 201)]
    param_res: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    components: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    problem: Problem,
    #[arg(long)]
    x0: f64,
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// CSV written by `solve` or `oracle`; computed on the fly if omitted
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Args)]
struct AxiomsArgs {
    #[arg(long, value_enum)]
    risk: Risk,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::AssumptionViolation(_) | Error::NoRoot(_) => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn config_error(message: String) -> Failure {
    Failure { code: 2, message }
}

type Outcome = std::result::Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads {n}: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Majorant(a) => run_majorant(a),
        Command::Oracle(a) => run_oracle(a),
        Command::Verify(a) => run_verify(a),
        Command::Axioms(a) => run_axioms(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn setup(p: &Problem) -> std::result::Result<(RiskMapping, GainSpec, Grid), Failure> {
    if p.grid < MIN_GRID {
        return Err(config_error(format!("--grid {} is below the minimum of {MIN_GRID}", p.grid)));
    }
    let g: GainSpec = p.gain.parse()?;
    Ok((p.risk.mapping(), g, Grid::uniform(p.grid)?))
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> std::result::Result<File, Failure> {
    File::create(path).map_err(|e| config_error(format!("cannot write `{}`: {e}", path.display())))
}

fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> std::result::Result<(), Failure> {
    let io = |e: csv::Error| config_error(format!("cannot write `{}`: {e}", path.display()));
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| config_error(format!("cannot write `{}`: {e}", path.display())))
}

fn write_table(path: &Path, t: &ValueTable) -> std::result::Result<(), Failure> {
    let rows = (0..t.grid.len()).map(|i| {
        vec![
            fmt_f(t.grid.points()[i]),
            fmt_f(t.g_values[i]),
            fmt_f(t.values[i]),
            if t.stopping_mask[i] { "1" } else { "0" }.to_string(),
        ]
    });
    write_rows(path, &["x", "g", "V", "stopping"], rows)
}

#[derive(Serialize)]
struct ComponentRecord {
    x_minus: f64,
    x_plus: f64,
    beta: f64,
    gamma: f64,
}

fn write_components(path: &Path, sol: &Solution) -> std::result::Result<(), Failure> {
    let records: Vec<ComponentRecord> = sol
        .components
        .iter()
        .map(|c| ComponentRecord {
            x_minus: c.x_minus,
            x_plus: c.x_plus,
            beta: c.h_params.beta,
            gamma: c.h_params.gamma,
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&records).expect("plain records serialise");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| config_error(format!("cannot write `{}`: {e}", path.display())))
}

fn summarise(sol: &Solution) {
    println!("components: {}", sol.components.len());
    for c in &sol.components {
        println!("  ({:.10}, {:.10})", c.x_minus, c.x_plus);
    }
}

fn run_solve(a: SolveArgs) -> Outcome {
    let (rm, g, grid) = setup(&a.problem)?;
    if a.diagnostics {
        match probe_strict_monotonicity(&rm, 1000, 42) {
            None => eprintln!("diagnostics: no strictness violation found in 1000 probes"),
            Some(w) => eprintln!("diagnostics: mapping not strictly monotone at {w:?}"),
        }
    }
    let sol = solve(&rm, &g, &grid, &SolveOptions { delta: a.delta, mesh: a.mesh })?;
    summarise(&sol);
    if let Some(path) = &a.out {
        write_table(path, &sol.value_table)?;
    }
    if let Some(path) = &a.components {
        write_components(path, &sol)?;
    }
    if a.posthoc_check {
        let opts = MajorantOptions { param_res: a.param_res, ..Default::default() };
        let report = posthoc_check(&rm, &g, &sol, &opts, 5e-3)?;
        println!("posthoc: max(w - V) = {:.3e} ({})", report.max_deficit, if report.passed { "ok" } else { "FAILED" });
        if !report.passed {
            return Ok(3);
        }
    }
    Ok(0)
}

fn write_majorant(path: &Path, m: &MajorantResult) -> std::result::Result<(), Failure> {
    let rows = (0..m.grid.len()).map(|i| {
        let hp = &m.argmin_params[i];
        vec![
            fmt_f(m.grid.points()[i]),
            fmt_f(m.g_values[i]),
            fmt_f(m.w_values[i]),
            fmt_f(hp.y),
            fmt_f(hp.z),
            fmt_f(hp.beta),
            fmt_f(hp.gamma),
        ]
    });
    write_rows(path, &["x", "g", "w", "y", "z", "beta", "gamma"], rows)
}

fn run_majorant(a: MajorantArgs) -> Outcome {
    let (rm, g, grid) = setup(&a.problem)?;
    let m = compute_majorant(&rm, &g, &grid, &MajorantOptions { param_res: a.param_res, ..Default::default() })?;
    let gap = m.w_values.iter().zip(&m.g_values).map(|(w, g)| w - g).fold(0.0, f64::max);
    println!("max(w - g) = {gap:.6e}");
    if let Some(path) = &a.out {
        write_majorant(path, &m)?;
    }
    Ok(0)
}

fn run_oracle(a: OracleArgs) -> Outcome {
    let (rm, g, grid) = setup(&a.problem)?;
    g.check_nonnegative(&grid)?;
    let sol = Solution::from_value_table(oracle_value(&rm, &g, &grid)?);
    summarise(&sol);
    if let Some(path) = &a.out {
        write_table(path, &sol.value_table)?;
    }
    if let Some(path) = &a.components {
        write_components(path, &sol)?;
    }
    Ok(0)
}

fn read_solution(path: &Path, g: &GainSpec) -> std::result::Result<Solution, Failure> {
    let bad = |what: String| config_error(format!("`{}`: {what}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["x", "g", "V", "stopping"] {
        return Err(bad("expected columns x,g,V,stopping".into()));
    }
    let (mut xs, mut vs, mut mask) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |k: usize| rec[k].trim().parse::<f64>().map_err(|_| bad(format!("`{}` is not a number", &rec[k])));
        xs.push(num(0)?);
        vs.push(num(2)?);
        mask.push(match rec[3].trim() {
            "1" => true,
            "0" => false,
            other => return Err(bad(format!("stopping flag `{other}` is not 0 or 1"))),
        });
    }
    let grid = Grid::uniform(xs.len()).map_err(|e| bad(e.to_string()))?;
    if xs.iter().zip(grid.points()).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(bad("x column is not a uniform grid on [0, 1]".into()));
    }
    let gs = g.sample(&grid);
    Ok(Solution::from_value_table(ValueTable { grid, g_values: gs, values: vs, stopping_mask: mask }))
}

fn run_verify(a: VerifyArgs) -> Outcome {
    let (rm, g, grid) = setup(&a.problem)?;
    let sol = match &a.solution {
        Some(path) => read_solution(path, &g)?,
        None => match solve(&rm, &g, &grid, &SolveOptions::default()) {
            Ok(s) => s,
            Err(Error::Unsupported(_)) => Solution::from_value_table(oracle_value(&rm, &g, &grid)?),
            Err(e) => return Err(e.into()),
        },
    };
    let cfg = MCConfig { dt: a.dt, n_paths: a.paths, seed: a.seed, ..Default::default() };
    let report = verify_solution(&rm, &g, &sol, a.x0, &cfg)?;
    println!("V({}) = {:.6}, allowance {:.3e}", report.x0, report.value, report.allowance);
    for c in &report.checks {
        println!(
            "{:<10} {:.6} +- {:.6}  {}{}",
            c.name,
            c.estimate.value,
            c.estimate.std_error,
            if c.passed { "pass" } else { "FAIL" },
            if c.estimate.horizon_warning { "  (horizon cap hit on >1% of paths)" } else { "" }
        );
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn run_axioms(a: AxiomsArgs) -> Outcome {
    let rm = a.risk.mapping();
    let report = check_axioms(&rm, a.trials, a.seed)?;
    println!("mapping: {}", report.mapping);
    for c in &report.checks {
        let detail = if c.passed { String::new() } else { format!(": {}", c.detail) };
        let status = if c.passed { "pass" } else { "FAIL" };
        println!("{:<24} {status} ({} trials){detail}", c.axiom.to_string(), c.trials);
    }
    Ok(if report.all_passed() { 0 } else { 1 })
}
