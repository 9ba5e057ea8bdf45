//! `geomech`: run geometric-mechanics checks on a JSON system description.
//!
//! Exit status is 0 when every check passes, 1 when one fails and 2 on
//! malformed input.

mod commands;
mod spec;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use commands::{CmdError, Ctx, Outcome};
use spec::{parse_box, System};

#[derive(Parser, Debug)]
#[command(name = "geomech", version, about = "Symbolic-numeric checks for geometric mechanics")]
struct Cli {
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 100)]
    samples: usize,
    /// Default residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Sampling box: "lo,hi" for every axis or "lo:hi,lo:hi,..." per axis.
    #[arg(long = "box", global = true)]
    bounds: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Poisson bracket with defining-equation, homomorphism and Jacobi checks.
    Bracket(On<commands::BracketArgs>),
    /// Check X(F) = 0 and the drift of F along a trajectory.
    FirstIntegral(On<commands::FirstIntegralArgs>),
    /// Noether constant of a Lagrangian symmetry.
    Noether(On<commands::NoetherArgs>),
    /// Lagrangian structures, Euler–Lagrange field and energy.
    Lagrangian(On<commands::LagrangianArgs>),
    /// Lax pair of a (1,1) tensor invariant and its trace integrals.
    Lax(On<commands::LaxArgs>),
    /// Characteristic polynomial of a symplectic pencil.
    Pencil(On<commands::PencilArgs>),
    /// Jacobi last multiplier check.
    Jacobi(On<commands::JacobiArgs>),
    /// Hojman's conserved quantity from a non-Noether symmetry.
    Hojman(On<commands::HojmanArgs>),
    /// Structure constants and solvability of a span of vector fields.
    Liealg(On<commands::LieAlgArgs>),
    /// First integral of a planar field by Lie quadrature.
    Quadrature2d(On<commands::QuadratureArgs>),
    /// Hamilton–Jacobi residual and lifted-trajectory comparison.
    HamiltonJacobi(On<commands::HamJacArgs>),
    /// Integrate a vector field.
    Integrate(On<commands::IntegrateArgs>),
    /// Certify Liouville integrability.
    CertifyLiouville(On<commands::LiouvilleArgs>),
}

/// A subcommand's own flags plus the system file it reads.
#[derive(clap::Args, Debug)]
struct On<A: clap::Args> {
    /// System description (JSON).
    system: PathBuf,
    #[command(flatten)]
    args: A,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Bracket(_) => "bracket",
            Command::FirstIntegral(_) => "first-integral",
            Command::Noether(_) => "noether",
            Command::Lagrangian(_) => "lagrangian",
            Command::Lax(_) => "lax",
            Command::Pencil(_) => "pencil",
            Command::Jacobi(_) => "jacobi",
            Command::Hojman(_) => "hojman",
            Command::Liealg(_) => "liealg",
            Command::Quadrature2d(_) => "quadrature2d",
            Command::HamiltonJacobi(_) => "hamilton-jacobi",
            Command::Integrate(_) => "integrate",
            Command::CertifyLiouville(_) => "certify-liouville",
        }
    }

    fn system(&self) -> &Path {
        match self {
            Command::Bracket(a) => &a.system,
            Command::FirstIntegral(a) => &a.system,
            Command::Noether(a) => &a.system,
            Command::Lagrangian(a) => &a.system,
            Command::Lax(a) => &a.system,
            Command::Pencil(a) => &a.system,
            Command::Jacobi(a) => &a.system,
            Command::Hojman(a) => &a.system,
            Command::Liealg(a) => &a.system,
            Command::Quadrature2d(a) => &a.system,
            Command::HamiltonJacobi(a) => &a.system,
            Command::Integrate(a) => &a.system,
            Command::CertifyLiouville(a) => &a.system,
        }
    }

    fn run(&self, ctx: &Ctx) -> Result<Outcome, CmdError> {
        match self {
            Command::Bracket(a) => commands::bracket(ctx, &a.args),
            Command::FirstIntegral(a) => commands::first_integral(ctx, &a.args),
            Command::Noether(a) => commands::noether(ctx, &a.args),
            Command::Lagrangian(a) => commands::lagrangian(ctx, &a.args),
            Command::Lax(a) => commands::lax(ctx, &a.args),
            Command::Pencil(a) => commands::pencil(ctx, &a.args),
            Command::Jacobi(a) => commands::jacobi(ctx, &a.args),
            Command::Hojman(a) => commands::hojman(ctx, &a.args),
            Command::Liealg(a) => commands::liealg(ctx, &a.args),
            Command::Quadrature2d(a) => commands::quadrature2d(ctx, &a.args),
            Command::HamiltonJacobi(a) => commands::hamilton_jacobi(ctx, &a.args),
            Command::Integrate(a) => commands::integrate_cmd(ctx, &a.args),
            Command::CertifyLiouville(a) => commands::certify_liouville(ctx, &a.args),
        }
    }
}

fn run(cli: Cli) -> Result<(Value, bool), CmdError> {
    let sys = System::load(cli.command.system())?;
    let region = match &cli.bounds {
        Some(b) => parse_box(b, sys.chart.dim())?,
        None => sys.region.clone(),
    };
    if cli.samples == 0 {
        return Err(CmdError::Flag {
            flag: "samples",
            message: "must be positive".into(),
        });
    }
    let ctx = Ctx {
        sys,
        seed: cli.seed,
        samples: cli.samples,
        tol: cli.tol,
        region,
    };
    let out = cli.command.run(&ctx)?;
    let report = json!({
        "tool": "geomech",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "system": ctx.sys.file,
        "description": ctx.sys.description,
        "seed": ctx.seed,
        "samples": ctx.samples,
        "box": {"lo": ctx.region.lo, "hi": ctx.region.hi},
        "tolerances": out.tolerances,
        "verdict": if out.passed { "pass" } else { "fail" },
        "results": out.results,
    });
    Ok((report, out.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((report, passed)) => {
            let text = serde_json::to_string_pretty(&report).expect("serializable");
            // a closed pipe downstream is not an error of ours
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("geomech: {e}");
            ExitCode::from(2)
        }
    }
}
