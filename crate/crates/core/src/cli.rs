//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on invalid input, 3 on numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::check::run_checks;
use crate::error::{Error, Result};
use crate::io::{curve_table, fmt_num, json_num, json_string, parse_list, parse_num, ModelFile, Table};
use crate::par::{set_global_threads, Execution};
use crate::policy::{self, objective_surface, Policy, SolveOptions, SolveReport};
use crate::scale::ScaleBasis;
use crate::simulate::{simulate_value, SimConfig};
use crate::valuation::{self, benchmark, linspace, optimal_curve, policy_curve, DEFAULT_GRID_POINTS};

#[derive(Debug, Parser)]
#[command(name = "dualdiv", version, about = "Optimal impulse dividends in the dual risk model")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format; defaults to json for solve/simulate/check and csv otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long, global = true, env = "DUALDIV_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file (TOML with drift_d, sigma, lambda, q, alpha, T).
    #[arg(long)]
    model: PathBuf,
    /// Override the discount rate.
    #[arg(long)]
    q: Option<f64>,
    /// Override a scalar model field, e.g. `--set lambda=1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ModelArgs {
    fn basis(&self) -> Result<ScaleBasis> {
        let mut file = ModelFile::load(&self.model)?;
        for o in &self.overrides {
            file.set(o)?;
        }
        if let Some(q) = self.q {
            file.q = q;
        }
        ScaleBasis::find_roots(&file.to_model()?)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Find the optimal (c1, c2) policy.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        beta: f64,
        /// Also emit the objective on an n x n grid of (c1, c2).
        #[arg(long, value_name = "N")]
        dump_surface: Option<usize>,
        /// Re-solve from 16 starting points and require agreement.
        #[arg(long)]
        verify_uniqueness: bool,
    },
    /// Value function of the optimal policy, or of `--policy c1,c2`.
    Value {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_name = "C1,C2")]
        policy: Option<String>,
        /// Single surplus level.
        #[arg(long, conflicts_with = "x_grid")]
        x: Option<f64>,
        #[arg(long, value_name = "LO:HI:STEP")]
        x_grid: Option<String>,
    },
    /// Monte Carlo estimate of a policy value.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_name = "C1,C2")]
        policy: String,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        paths: usize,
        #[arg(long)]
        seed: u64,
        /// Euler step for models with a Brownian part.
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 1e-8)]
        discount_floor: f64,
    },
    /// Solve for a descending list of costs and compare with the zero-cost benchmark.
    SweepBeta {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_name = "LIST")]
        betas: String,
        #[arg(long, value_name = "LO:HI:STEP")]
        x_grid: Option<String>,
    },
    /// Run the invariant checks; exits 3 if any fails.
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
}

/// Parses `c1,c2`.
pub fn parse_policy(raw: &str) -> Result<Policy> {
    match parse_list(raw)?.as_slice() {
        [c1, c2] => Policy::new(*c1, *c2),
        _ => Err(Error::Parse(format!("policy `{raw}` must be c1,c2"))),
    }
}

/// Parses `lo:hi:step` into `lo, lo + step, ...` up to `hi`.
pub fn parse_grid(raw: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = raw.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(Error::Parse(format!("grid `{raw}` must be lo:hi:step")));
    };
    let (lo, hi, step) = (parse_num(lo)?, parse_num(hi)?, parse_num(step)?);
    if !(step > 0.0) || !(hi >= lo) || !(lo >= 0.0) || !hi.is_finite() {
        return Err(Error::Domain(format!("grid `{raw}` needs 0 <= lo <= hi and step > 0")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    if n > 10_000_000 {
        return Err(Error::Domain(format!("grid `{raw}` has too many points")));
    }
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}

fn report_fields(basis: &ScaleBasis, rep: &SolveReport) -> Vec<(&'static str, f64)> {
    vec![
        ("c1", rep.policy.c1),
        ("c2", rep.policy.c2),
        ("vbar", rep.vbar),
        ("objective", rep.objective),
        ("gamma", rep.gamma),
        ("G_residual", rep.g_residual),
        ("H_value", rep.h_value),
        ("beta", rep.beta),
        ("ceiling", rep.ceiling),
        ("mu", basis.mu()),
        ("phi_q", basis.phi_q()),
    ]
}

fn solve_output(basis: &ScaleBasis, rep: &SolveReport, surface: Option<Table>, format: Format) -> Result<String> {
    let fields = report_fields(basis, rep);
    match format {
        Format::Json => {
            let mut m = Map::new();
            for (k, v) in &fields {
                m.insert((*k).into(), json_num(*v));
            }
            m.insert("corner".into(), Value::Bool(rep.corner));
            m.insert("iterations".into(), json!(rep.iterations));
            if let Some(s) = &surface {
                m.insert("surface".into(), s.to_json());
            }
            Ok(json_string(&Value::Object(m)))
        }
        Format::Csv => {
            let mut t = Table::new(fields.iter().map(|f| f.0).chain(["corner", "iterations"]));
            let mut row: Vec<f64> = fields.iter().map(|f| f.1).collect();
            row.push(if rep.corner { 1.0 } else { 0.0 });
            row.push(rep.iterations as f64);
            t.push_values(&row);
            let mut s = t.to_csv()?;
            if let Some(surf) = surface {
                s.push('\n');
                s.push_str(&surf.to_csv()?);
            }
            Ok(s)
        }
    }
}

fn table_output(t: &Table, format: Format) -> Result<String> {
    match format {
        Format::Csv => t.to_csv(),
        Format::Json => Ok(json_string(&t.to_json())),
    }
}

fn execute(cli: &Cli) -> Result<(String, bool)> {
    let exec = Execution::Parallel;
    match &cli.command {
        Command::Solve { model, beta, dump_surface, verify_uniqueness } => {
            let basis = model.basis()?;
            let opts = SolveOptions { verify_uniqueness: *verify_uniqueness, ..Default::default() };
            let rep = policy::solve(&basis, *beta, &opts)?;
            let surface = match dump_surface {
                Some(0) => return Err(Error::Config("--dump-surface needs n >= 1".into())),
                Some(n) => {
                    let mut t = Table::new(["c1", "c2", "objective"]);
                    for (c1, c2, v) in objective_surface(&basis, *beta, rep.ceiling, *n, exec) {
                        t.push(vec![Some(c1), Some(c2), v]);
                    }
                    Some(t)
                }
                None => None,
            };
            Ok((solve_output(&basis, &rep, surface, cli.format.unwrap_or(Format::Json))?, true))
        }
        Command::Value { model, beta, policy: pol, x, x_grid } => {
            let basis = model.basis()?;
            let optimum = match pol {
                Some(_) => None,
                None => Some(policy::solve(&basis, *beta, &SolveOptions::default())?),
            };
            let xs = match (x, x_grid) {
                (Some(x), _) => vec![*x],
                (None, Some(g)) => parse_grid(g)?,
                (None, None) => {
                    let c2 = match (&optimum, pol) {
                        (Some(rep), _) => rep.policy.c2,
                        (None, Some(p)) => parse_policy(p)?.c2,
                        (None, None) => unreachable!(),
                    };
                    linspace(0.0, 1.5 * c2, DEFAULT_GRID_POINTS)
                }
            };
            let curve = match (&optimum, pol) {
                (Some(rep), _) => optimal_curve(&basis, rep, &xs, exec)?,
                (None, Some(p)) => policy_curve(&basis, *beta, parse_policy(p)?, &xs, exec)?,
                (None, None) => unreachable!(),
            };
            Ok((table_output(&curve_table(&curve), cli.format.unwrap_or(Format::Csv))?, true))
        }
        Command::Simulate { model, beta, policy: pol, x, paths, seed, dt, discount_floor } => {
            let basis = model.basis()?;
            let cfg = SimConfig {
                paths: *paths,
                seed: *seed,
                dt: *dt,
                discount_floor: *discount_floor,
                execution: exec,
            };
            let r = simulate_value(basis.model(), parse_policy(pol)?, *beta, *x, &cfg)?;
            let out = match cli.format.unwrap_or(Format::Json) {
                Format::Json => json_string(&json!({
                    "mean": json_num(r.mean),
                    "std_error": json_num(r.std_error),
                    "paths": r.paths,
                    "seed": r.seed,
                    "truncated_fraction": json_num(r.truncated_fraction),
                })),
                Format::Csv => format!(
                    "mean,std_error,paths,seed,truncated_fraction\n{},{},{},{},{}\n",
                    fmt_num(r.mean),
                    fmt_num(r.std_error),
                    r.paths,
                    r.seed,
                    fmt_num(r.truncated_fraction)
                ),
            };
            Ok((out, true))
        }
        Command::SweepBeta { model, betas, x_grid } => {
            let basis = model.basis()?;
            let betas = parse_list(betas)?;
            let bench = benchmark(&basis)?;
            let a = bench.a_star();
            // solve first so the default grid can cover every trigger level
            let reports = valuation::beta_sweep(&basis, &betas, &[], &SolveOptions::default())?;
            let xs = match x_grid {
                Some(g) => parse_grid(g)?,
                None => {
                    let top = reports.iter().map(|r| r.report.policy.c2).fold(a, f64::max);
                    linspace(0.0, 1.5 * top, DEFAULT_GRID_POINTS)
                }
            };
            let mut rows = Table::new(["beta", "c1", "c2"]);
            let mut curves = Table::new(
                std::iter::once("x".to_string())
                    .chain(betas.iter().map(|b| format!("v_beta_{}", fmt_num(*b))))
                    .chain(std::iter::once("vhat".to_string())),
            );
            let mut cols = Vec::new();
            for r in &reports {
                rows.push_values(&[r.beta, r.report.policy.c1, r.report.policy.c2]);
                cols.push(optimal_curve(&basis, &r.report, &xs, exec)?.vs);
            }
            rows.push_values(&[0.0, a, a]);
            for (i, &x) in xs.iter().enumerate() {
                let mut row = vec![x];
                row.extend(cols.iter().map(|c| c[i]));
                row.push(bench.value(x)?);
                curves.push_values(&row);
            }
            let out = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => format!("{}\n{}", rows.to_csv()?, curves.to_csv()?),
                Format::Json => json_string(&json!({ "rows": rows.to_json(), "curves": curves.to_json() })),
            };
            Ok((out, true))
        }
        Command::Check { model, beta } => {
            let basis = model.basis()?;
            let checks = run_checks(&basis, *beta, exec)?;
            let all = checks.iter().all(|c| c.pass);
            let out = match cli.format.unwrap_or(Format::Json) {
                Format::Json => json_string(&Value::Array(
                    checks
                        .iter()
                        .map(|c| json!({ "check": c.name, "pass": c.pass, "value": json_num(c.value) }))
                        .collect(),
                )),
                Format::Csv => {
                    let mut s = String::from("check,pass,value\n");
                    for c in &checks {
                        s.push_str(&format!("{},{},{}\n", c.name, c.pass, fmt_num(c.value)));
                    }
                    s
                }
            };
            Ok((out, all))
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        set_global_threads(n);
    }
    match execute(&cli) {
        Ok((out, ok)) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &out),
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(out.as_bytes())
                }
            };
            if let Err(e) = written {
                eprintln!("error: cannot write output: {e}");
                return 2;
            }
            if ok {
                0
            } else {
                eprintln!("error: at least one check failed");
                3
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                3
            }
        }
    }
}
