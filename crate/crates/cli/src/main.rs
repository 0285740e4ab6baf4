use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use chorefx::efx::solve_efx;
use chorefx::gen::{generate, Agent3Kind, GenSpec, Regime};
use chorefx::io::{allocation_json, instance_json, parse_allocation, parse_instance, trace_lines, AllocationDoc};
use chorefx::oracle::enumerate_check;
use chorefx::perturb::{auto_epsilon, delta, perturb_explicit};
use chorefx::tefx::solve_tefx;
use chorefx::{validate_instance, verify, Error, Mode, Rat, SolveOptions};

/// Exit code when a verdict or existence check comes back false.
const EXIT_FALSE: u8 = 4;

#[derive(Parser)]
#[command(name = "chorefx", version, about = "EFX and tEFX chore allocation for three agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMode {
    Efx,
    Tefx,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write the certified allocation
    Solve {
        #[arg(long, value_enum)]
        mode: SolveMode,
        #[arg(long)]
        input: PathBuf,
        /// Write the step trace here as JSON lines
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Compare raw costs only; requires a non-degenerate instance
        #[arg(long)]
        no_perturb: bool,
    },
    /// Check an allocation and print its certificate
    Verify {
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        allocation: PathBuf,
    },
    /// Enumerate every allocation of a small instance
    Oracle {
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        #[arg(long)]
        input: PathBuf,
    },
    /// Generate a seeded random instance
    Gen {
        #[arg(long)]
        m: usize,
        #[arg(long, value_parser = parse_regime)]
        regime: Regime,
        #[arg(long, value_parser = parse_agent3, default_value = "additive")]
        agent3: Agent3Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the explicitly perturbed instance
    Perturb {
        #[arg(long)]
        input: PathBuf,
        /// `auto` or an exact rational such as `1/1024`
        #[arg(long, default_value = "auto")]
        epsilon: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Report which structural assumptions an instance meets
    Check {
        #[arg(long)]
        input: PathBuf,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_agent3(s: &str) -> Result<Agent3Kind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_instance(path: &Path) -> Result<chorefx::Instance> {
    parse_instance(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => print(text),
    }
}

/// Writes a line to stdout; a closed pipe is not an error.
fn print(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => other.context("writing to stdout"),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("value serializes")
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Solve { mode, input, trace, output, no_perturb } => {
            let inst = read_instance(&input)?;
            let opts = SolveOptions { perturb: !no_perturb };
            let (doc, lines) = match mode {
                SolveMode::Efx => {
                    let sol = solve_efx(&inst, &opts)?;
                    let lines = trace_lines(&sol.trace);
                    (AllocationDoc { bundles: sol.bundles, assignment: Some(sol.assignment), certificate: Some(sol.certificate) }, lines)
                }
                SolveMode::Tefx => {
                    let sol = solve_tefx(&inst, &opts)?;
                    let lines = trace_lines(&sol.trace);
                    (AllocationDoc { bundles: sol.bundles, assignment: Some(sol.assignment), certificate: Some(sol.certificate) }, lines)
                }
            };
            if !doc.certificate.as_ref().is_some_and(|c| c.verdict) {
                bail!(Error::ContractViolated("solver returned an unverified allocation".into()));
            }
            if let Some(p) = trace {
                fs::write(&p, lines).with_context(|| format!("writing {}", p.display()))?;
            }
            emit(output.as_deref(), &allocation_json(&doc))?;
            Ok(0)
        }
        Command::Verify { mode, input, allocation } => {
            let inst = read_instance(&input)?;
            let doc = parse_allocation(&read(&allocation)?).with_context(|| format!("parsing {}", allocation.display()))?;
            let cert = verify(&inst, &doc.owned(), mode)?;
            print(&to_json(&cert))?;
            for w in &cert.witnesses {
                eprintln!("witness: agent {} envies agent {} even without chore {}", w.envier, w.envied, w.chore);
            }
            Ok(if cert.verdict { 0 } else { EXIT_FALSE })
        }
        Command::Oracle { mode, input } => {
            let inst = read_instance(&input)?;
            let result = enumerate_check(&inst, mode)?;
            print(&to_json(&result))?;
            Ok(if result.exists { 0 } else { EXIT_FALSE })
        }
        Command::Gen { m, regime, agent3, seed, output } => {
            let inst = generate(&GenSpec::new(m, regime, agent3, seed))?;
            emit(output.as_deref(), &instance_json(&inst, None))?;
            Ok(0)
        }
        Command::Perturb { input, epsilon, output } => {
            let inst = read_instance(&input)?;
            let eps: Rat = if epsilon == "auto" {
                auto_epsilon(&inst)?
            } else {
                epsilon.parse().with_context(|| format!("parsing --epsilon {epsilon:?}"))?
            };
            let perturbed = perturb_explicit(&inst, &eps)?;
            let delta = delta(&inst)?.map(|d| d.to_string());
            let meta = json!({ "epsilon": eps.to_string(), "delta": delta });
            emit(output.as_deref(), &instance_json(&perturbed, Some(meta)))?;
            Ok(0)
        }
        Command::Check { input } => {
            let inst = read_instance(&input)?;
            print(&to_json(&validate_instance(&inst)))?;
            Ok(0)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::AssumptionViolated(_)) => 2,
        Some(Error::ContractViolated(_) | Error::InvariantBroken(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
