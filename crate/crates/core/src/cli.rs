//! Command-line front end. Every command reads one config file and writes
//! its data files into `--out`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{self, LinearGains, StabilityReport};
use crate::config::RunConfig;
use crate::controller::ControlLaw;
use crate::error::Error;
use crate::family::GeneratorSpec;
use crate::plant::State;
use crate::sim::{self, Termination};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUN_FAILED: i32 = 2;
pub const EXIT_VERIFY_BREACH: i32 = 3;
pub const EXIT_FIT_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ballbeam", version, about = "Matching control laws for the ball-and-beam")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Feedback law for simulate, linearize and basin.
    #[arg(long, global = true, value_enum, default_value_t = Law::Nonlinear)]
    pub law: Law,
    /// Initial state `s,theta,s_dot,theta_dot` for simulate.
    #[arg(long, global = true, value_parser = parse_x0, allow_hyphen_values = true)]
    pub x0: Option<State>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Also write a plotting script next to each CSV.
    #[arg(long, global = true)]
    pub emit_plots: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Integrate the closed loop and write trajectory.csv.
    Simulate,
    /// Run the matching, dissipation and derivative residual suites.
    Verify,
    /// Evaluate the det/tr stability conditions at the equilibrium.
    Stability,
    /// Closed-loop Jacobian, poles and equivalent linear gains.
    Linearize,
    /// Fit the family to the linear gains in the [fit] block.
    Fit,
    /// Basin-of-attraction sweep over the [basin] grid.
    Basin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Law {
    Nonlinear,
    Linear,
    Open,
}

fn parse_x0(s: &str) -> Result<State, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        &[a, b, c, d] if v.iter().all(|x| x.is_finite()) => Ok(State::new(a, b, c, d)),
        _ => Err("expected four finite numbers s,theta,s_dot,theta_dot".into()),
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

struct Failure(i32, String);

fn config_error(msg: impl Into<String>) -> Failure {
    Failure(EXIT_CONFIG, msg.into())
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure(EXIT_RUN_FAILED, format!("cannot write {}: {e}", path.display())))
}

fn to_toml<T: Serialize>(v: &T) -> String {
    toml::to_string(v).expect("report types serialize to TOML")
}

fn execute(cli: &Cli) -> Result<i32, Failure> {
    let path = cli.config.as_deref().ok_or_else(|| config_error("--config <PATH> is required"))?;
    let cfg = RunConfig::load(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Failure(EXIT_RUN_FAILED, format!("cannot create {}: {e}", cli.out.display())))?;
    match cli.command {
        Command::Simulate => cmd_simulate(cli, &cfg),
        Command::Verify => cmd_verify(cli, &cfg),
        Command::Stability => cmd_stability(cli, &cfg),
        Command::Linearize => cmd_linearize(cli, &cfg),
        Command::Fit => cmd_fit(cli, &cfg),
        Command::Basin => cmd_basin(cli, &cfg),
    }
}

fn resolve_law(law: Law, cfg: &RunConfig) -> Result<ControlLaw, Failure> {
    Ok(match law {
        Law::Nonlinear => ControlLaw::NonlinearFamily,
        Law::Open => ControlLaw::OpenLoop,
        Law::Linear => ControlLaw::Linear(
            cfg.linear.ok_or_else(|| config_error("--law linear needs a [linear] block"))?,
        ),
    })
}

fn cmd_simulate(cli: &Cli, cfg: &RunConfig) -> Result<i32, Failure> {
    let law = resolve_law(cli.law, cfg)?;
    let x0 = cli.x0.unwrap_or_else(|| cfg.x0());
    let spec = cfg.spec();
    let traj = sim::simulate(x0, &spec, &cfg.sim, &law);
    let csv = cli.out.join("trajectory.csv");
    write(&csv, &traj.to_csv())?;
    if cli.emit_plots {
        write(&cli.out.join("plot_trajectory.py"), TRAJECTORY_PLOT)?;
    }
    let last = traj.final_state();
    println!(
        "law={} samples={} termination={} final=({:.6e}, {:.6e}, {:.6e}, {:.6e})",
        law.name(),
        traj.samples.len(),
        traj.termination.as_str(),
        last.s,
        last.theta,
        last.s_dot,
        last.theta_dot
    );
    if traj.termination == Termination::Completed {
        Ok(EXIT_OK)
    } else {
        eprintln!("simulation ended early: termination={}", traj.termination.as_str());
        Ok(EXIT_RUN_FAILED)
    }
}

fn cmd_verify(cli: &Cli, cfg: &RunConfig) -> Result<i32, Failure> {
    let report = verify::run(&cfg.spec(), &cfg.verify, &cfg.sim);
    let mut csv = String::from("check,max_residual,tolerance,passed,worst_point\n");
    for c in &report.checks {
        let status = if c.passed() { "ok" } else { "BREACH" };
        println!("{:<22} max={:<12.4e} tol={:<8.1e} {status}  at {}", c.name, c.max, c.tol, c.worst);
        let _ = writeln!(csv, "{},{:.16e},{:.16e},{},\"{}\"", c.name, c.max, c.tol, c.passed(), c.worst);
    }
    write(&cli.out.join("verify.csv"), &csv)?;
    if report.passed() {
        Ok(EXIT_OK)
    } else {
        for c in report.checks.iter().filter(|c| !c.passed()) {
            eprintln!("residual breach: {} = {:e} > {:e} at {}", c.name, c.max, c.tol, c.worst);
        }
        Ok(EXIT_VERIFY_BREACH)
    }
}

#[derive(Serialize)]
struct StabilityFile<'a> {
    overall: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<&'a StabilityReport>,
}

fn cmd_stability(cli: &Cli, cfg: &RunConfig) -> Result<i32, Failure> {
    let result = analysis::stability_conditions(&cfg.spec());
    let (file, csv) = match &result {
        Ok(r) => {
            let mut csv = String::from("condition,value,pass\n");
            for (name, c) in r.conditions() {
                println!("{name:<14} {:>+.6e} {}", c.value, if c.pass { "pass" } else { "FAIL" });
                let _ = writeln!(csv, "{name},{:.16e},{}", c.value, c.pass);
            }
            let _ = writeln!(csv, "overall,,{}", r.overall);
            (StabilityFile { overall: r.overall, error: None, report: Some(r) }, csv)
        }
        Err(e) => {
            eprintln!("stability conditions not evaluable: {e}");
            let csv = format!("condition,value,pass\noverall,,false\n# error={e}\n");
            (StabilityFile { overall: false, error: Some(e.to_string()), report: None }, csv)
        }
    };
    println!("overall={}", file.overall);
    write(&cli.out.join("stability.toml"), &to_toml(&file))?;
    write(&cli.out.join("stability.csv"), &csv)?;
    Ok(EXIT_OK)
}

fn cmd_linearize(cli: &Cli, cfg: &RunConfig) -> Result<i32, Failure> {
    let law = resolve_law(cli.law, cfg)?;
    let lin = analysis::linearize(&cfg.spec(), &law).map_err(|e| config_error(e.to_string()))?;
    let mut csv = String::from("re,im,residual\n");
    for (p, r) in lin.poles.iter().zip(&lin.pole_residuals) {
        println!("pole {:+.10e} {:+.10e}i", p.0, p.1);
        let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e}", p.0, p.1, r);
    }
    let g = &lin.gains_equivalent;
    println!("gains a8={} Kbp={} Kap={} Kbd={} Kad={}", g.a8, g.kbp, g.kap, g.kbd, g.kad);
    write(&cli.out.join("linearize.toml"), &to_toml(&lin))?;
    write(&cli.out.join("poles.csv"), &csv)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct FitFile<'a> {
    iterations: usize,
    residual: f64,
    mu1_prime_0: f64,
    w_second_0: f64,
    k1: f64,
    k2: f64,
    gains: &'a LinearGains,
    generator: &'a GeneratorSpec,
}

fn cmd_fit(cli: &Cli, cfg: &RunConfig) -> Result<i32, Failure> {
    let block = cfg.fit.ok_or_else(|| config_error("fit needs a [fit] block"))?;
    let out = match analysis::fit_linear_gains(&block.target(), &cfg.spec(), &block.options()) {
        Ok(o) => o,
        Err(e @ (Error::NoConvergence { .. } | Error::SingularJacobian | Error::GeneratorInvariant(_))) => {
            return Err(Failure(EXIT_FIT_FAILED, e.to_string()));
        }
        Err(e) => return Err(Failure(EXIT_FIT_FAILED, format!("fit failed: {e}"))),
    };
    let [m, w2, k1, k2] = out.scalars;
    let file = FitFile {
        iterations: out.iterations,
        residual: out.residual,
        mu1_prime_0: m,
        w_second_0: w2,
        k1,
        k2,
        gains: &out.gains,
        generator: &out.spec.gen,
    };
    println!("converged in {} iterations, residual {:e}", out.iterations, out.residual);
    println!("mu1'(0)={m} w''(0)={w2} k1={k1} k2={k2}");
    write(&cli.out.join("fit.toml"), &to_toml(&file))?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct BasinFile {
    law: &'static str,
    points: usize,
    captured: usize,
    fraction: f64,
    capture_radius: f64,
}

fn cmd_basin(cli: &Cli, cfg: &RunConfig) -> Result<i32, Failure> {
    let block = cfg.basin.ok_or_else(|| config_error("basin needs a [basin] block"))?;
    let law = resolve_law(cli.law, cfg)?;
    let est = analysis::basin_estimate(&cfg.spec(), &law, &block.grid(), &cfg.sim, block.capture_radius);
    let captured = est.points.iter().filter(|p| p.captured).count();
    let file = BasinFile {
        law: law.name(),
        points: est.points.len(),
        captured,
        fraction: est.fraction,
        capture_radius: block.capture_radius,
    };
    println!("law={} captured {captured}/{} fraction={}", law.name(), est.points.len(), est.fraction);
    write(&cli.out.join("basin.csv"), &est.to_csv())?;
    write(&cli.out.join("basin.toml"), &to_toml(&file))?;
    if cli.emit_plots {
        write(&cli.out.join("plot_basin.py"), BASIN_PLOT)?;
    }
    Ok(EXIT_OK)
}

const TRAJECTORY_PLOT: &str = r##"import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "trajectory.csv"
with open(path) as f:
    rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
col = lambda name: [float(r[name]) for r in rows]
t = col("t")

fig, ax = plt.subplots(3, 1, sharex=True, figsize=(8, 9))
for name in ("s", "theta", "s_dot", "theta_dot"):
    ax[0].plot(t, col(name), label=name)
for name in ("u", "u_g", "u_V", "u_c"):
    ax[1].plot(t, col(name), label=name)
ax[2].plot(t, col("H_hat"), label="H_hat")
ax[2].set_xlabel("t")
for a in ax:
    a.legend()
    a.grid(True)
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
"##;

const BASIN_PLOT: &str = r##"import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "basin.csv"
with open(path) as f:
    rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
x = sys.argv[2] if len(sys.argv) > 2 else "s"
y = sys.argv[3] if len(sys.argv) > 3 else "theta"

fig, ax = plt.subplots(figsize=(6, 5))
for outcome, marker in (("captured", "o"), ("not_captured", "x")):
    pts = [r for r in rows if r["outcome"] == outcome]
    ax.scatter([float(r[x]) for r in pts], [float(r[y]) for r in pts], marker=marker, label=outcome)
ax.set_xlabel(x)
ax.set_ylabel(y)
ax.legend()
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
"##;
