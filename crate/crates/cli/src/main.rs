use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use efx_cli::commands::{
    self, Algorithm, CheckKind, GenerateRequest, SeedChoice, SolveRequest, VerifyRequest,
};
use efx_cli::error::{exit, CliError, CliResult};
use efx_cli::formats::{read_allocation, read_instance, render_instance};
use efx_cli::report::{digest, to_json};
use efx_core::oracle::DEFAULT_CAP;
use efx_core::rational::{parse_rational, Rational};

/// Exit codes: 0 success, 1 a requested check failed (or a replay
/// differed), 2 usage, 3 unreadable or invalid input, 4 oracle cap
/// exceeded, 5 internal invariant violated (including the restart cap).
#[derive(Parser)]
#[command(name = "efx", version, about = "EFX allocations by donating items")]
struct Cli {
    /// Largest number of assignments an exhaustive search may examine.
    #[arg(long, global = true, env = "EFX_ORACLE_CAP", default_value_t = DEFAULT_CAP)]
    oracle_cap: u128,

    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file and print its digest.
    Generate(GenerateArgs),
    /// Run a seeding and donation pipeline and emit a report.
    Solve(SolveArgs),
    /// Check an allocation against the requested properties.
    Verify(VerifyArgs),
    /// Re-run the pipeline recorded in a report and compare.
    Replay { report: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    LowerBound,
    Random,
    LargeMarket,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, value_parser = rational)]
    eps: Option<Rational>,
    #[arg(long)]
    max_value: Option<u64>,
    #[arg(long, alias = "seed", default_value_t = 0)]
    rng_seed: u64,
}

#[derive(Args)]
struct SolveArgs {
    instance: String,
    #[arg(long, default_value = "alg1")]
    algorithm: Algorithm,
    #[arg(long, default_value = "oracle", value_parser = ["oracle", "local-search", "file"])]
    seed_method: String,
    #[arg(long)]
    seed_file: Option<String>,
    #[arg(long, value_parser = rational)]
    delta: Option<Rational>,
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct VerifyArgs {
    instance: String,
    allocation: String,
    /// Comma-separated subset of ef, ef1, efx, pareto, large-market, ratio.
    #[arg(long, value_delimiter = ',', default_value = "efx")]
    checks: Vec<CheckKind>,
    #[arg(long, value_parser = rational)]
    eps: Option<Rational>,
    /// `alpha^n` for the ratio check; defaults to `2^(n-1)`.
    #[arg(long, value_parser = rational)]
    alpha_pow_n: Option<Rational>,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn need<T>(v: Option<T>, flag: &str, kind: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("{kind} needs --{flag}")))
}

fn emit(out: &Option<String>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::Generate(a) => {
            let req = match a.kind {
                Kind::LowerBound => GenerateRequest::LowerBound {
                    n: a.n,
                    eps: need(a.eps, "eps", "lower-bound")?,
                },
                Kind::Random => GenerateRequest::Random {
                    n: a.n,
                    m: need(a.m, "m", "random")?,
                    max_value: a.max_value.unwrap_or(10),
                    seed: a.rng_seed,
                },
                Kind::LargeMarket => GenerateRequest::LargeMarket {
                    n: a.n,
                    m: need(a.m, "m", "large-market")?,
                    eps: need(a.eps, "eps", "large-market")?,
                    max_value: a
                        .max_value
                        .unwrap_or(efx_core::instances::LARGE_MARKET_MAX_VALUE),
                    seed: a.rng_seed,
                },
            };
            let inst = commands::generate(&req)?;
            let text = render_instance(&inst);
            match &cli.out {
                Some(path) => {
                    std::fs::write(path, &text)?;
                    println!("{}", digest(&inst, &[]));
                }
                None => print!("{text}"),
            }
            Ok(exit::OK)
        }
        Command::Solve(a) => {
            let inst = read_instance(&a.instance)?;
            let seed = match (a.seed_method.as_str(), a.seed_file) {
                ("file", Some(path)) => SeedChoice::File(read_allocation(&path, &inst)?),
                ("file", None) => {
                    return Err(CliError::Usage(
                        "--seed-method file needs --seed-file".into(),
                    ))
                }
                (_, Some(_)) => {
                    return Err(CliError::Usage(
                        "--seed-file needs --seed-method file".into(),
                    ))
                }
                ("oracle", None) => SeedChoice::Oracle,
                _ => SeedChoice::LocalSearch,
            };
            let req = SolveRequest {
                algorithm: a.algorithm,
                seed,
                delta: a.delta,
                oracle_cap: cli.oracle_cap,
                trace: a.trace,
            };
            emit(&cli.out, &to_json(&commands::solve(&inst, &req)?))?;
            Ok(exit::OK)
        }
        Command::Verify(a) => {
            let inst = read_instance(&a.instance)?;
            let alloc = read_allocation(&a.allocation, &inst)?;
            let req = VerifyRequest {
                checks: a.checks,
                eps: a.eps,
                alpha_pow_n: a.alpha_pow_n,
                oracle_cap: cli.oracle_cap,
            };
            let report = commands::verify(&inst, &alloc, &req)?;
            emit(&cli.out, &to_json(&report))?;
            Ok(if report.all_pass {
                exit::OK
            } else {
                exit::CHECK_FAILED
            })
        }
        Command::Replay { report } => {
            let text = std::fs::read_to_string(&report)
                .map_err(|e| CliError::parse(&report, e.to_string()))?;
            let again = commands::replay(&text)?;
            emit(&cli.out, &again)?;
            if again == text {
                Ok(exit::OK)
            } else {
                eprintln!("efx: replay of {report} differs from the recorded report");
                Ok(exit::CHECK_FAILED)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("efx: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
