use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use demm::analytics::{self, Participant};
use demm::engine::{self, EngineError, RunOptions, RunOutput, ScenarioScript};
use demm::security::{replay_flash_attack, AttackPlan, Mitigation};
use demm::Dec;

#[derive(Parser)]
#[command(name = "demm", version, about = "Dynamic exponent market maker scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario script.
    Run {
        script: PathBuf,
        /// Directory for the transcript, final snapshot and reports.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Replay the flash attack on the textbook pool and print the report as JSON.
    ReplayAttack {
        #[arg(long, value_enum, default_value_t = MitigationArg::None)]
        mitigation: MitigationArg,
        /// Delay range for `--mitigation delay`.
        #[arg(long, default_value_t = 1)]
        delay_min: u64,
        #[arg(long, default_value_t = 3)]
        delay_max: u64,
        /// Window length for `--mitigation twap`.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a script, then write the impermanent loss curve of its final pool as CSV.
    IlCurve {
        script: PathBuf,
        /// `lo:hi:n`, relative prices spaced in log scale.
        #[arg(long, default_value = "0.0625:16:41")]
        grid: String,
        /// Token whose price moves; defaults to the pool's second token.
        #[arg(long)]
        token: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a script against the schema without running it.
    Validate { script: PathBuf },
    /// Run a script and write its final pool as a checksummed snapshot.
    Snapshot {
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a snapshot and print the pool it holds.
    Restore { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum MitigationArg {
    None,
    Delay,
    Twap,
}

/// Failure classes mapped to exit codes: input problems 1, assertion failures 2.
enum Outcome {
    Ok,
    AssertionsFailed,
}

fn load(path: &Path) -> Result<ScenarioScript> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    engine::parse_scenario(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<RunOutput> {
    let script = load(path)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let opts = RunOptions { base_dir, out_dir: out, seed };
    engine::run_scenario(&script, &opts).map_err(|e: EngineError| anyhow::Error::new(e))
}

fn parse_grid(spec: &str) -> Result<(Dec, Dec, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts[..] else { bail!("grid must be lo:hi:n, got {spec:?}") };
    Ok((lo.parse()?, hi.parse()?, n.parse()?))
}

fn execute(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Run { script, out, seed } => {
            let output = run(&script, out, seed)?;
            let t = &output.transcript;
            println!("scenario {}: {} events, digest {}", t.name, t.events.len(), t.digest());
            for (account, flows) in &t.flows {
                let parts: Vec<String> = flows.iter().map(|(tok, v)| format!("{tok} {v}")).collect();
                println!("  {account}: {}", parts.join(", "));
            }
            for f in &t.failures {
                eprintln!("FAIL block {} event {}: {}", f.block, f.index, f.message);
            }
            return Ok(if t.passed() { Outcome::Ok } else { Outcome::AssertionsFailed });
        }
        Command::ReplayAttack { mitigation, delay_min, delay_max, k, seed } => {
            let m = match mitigation {
                MitigationArg::None => Mitigation::None,
                MitigationArg::Delay => Mitigation::Delay { min: delay_min, max: delay_max },
                MitigationArg::Twap => Mitigation::Twap { k },
            };
            if delay_min > delay_max {
                bail!("--delay-min exceeds --delay-max");
            }
            let plan = AttackPlan { seed, ..AttackPlan::textbook() };
            let report = replay_flash_attack(&plan, &m)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::IlCurve { script, grid, token, out } => {
            let (lo, hi, n) = parse_grid(&grid)?;
            let output = run(&script, None, None)?;
            let t = output.transcript;
            let Some(pool) = t.final_pool else { bail!("scenario produced no pool") };
            let moving = match token {
                Some(tok) => tok,
                None => pool.tokens().get(1).context("pool has fewer than two tokens")?.to_string(),
            };
            let mut participants = Vec::new();
            let mut total = engine::Amounts::new();
            for (account, deposits) in &t.deposits {
                if pool.ledger().has_account(account.as_str()) {
                    participants.push(Participant { account: account.clone(), basis: pool.align(deposits)? });
                }
                for (tok, v) in deposits {
                    if pool.state().index_of(tok.as_str()).is_ok() {
                        *total.entry(tok.clone()).or_default() += v;
                    }
                }
            }
            let grid = analytics::log_grid(&lo, &hi, n)?;
            let table = analytics::il_curve(&pool, &t.final_prices, &moving, &grid, &pool.align(&total)?, &participants)?;
            match out {
                Some(path) => fs::write(&path, table.to_csv_string()).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{}", table.to_csv_string()),
            }
        }
        Command::Validate { script } => {
            let s = load(&script)?;
            println!("ok: {} ({} blocks, {} events)", s.name, s.blocks.len(), s.events().count());
        }
        Command::Snapshot { script, out } => {
            let output = run(&script, None, None)?;
            let Some(pool) = output.transcript.final_pool else { bail!("scenario produced no pool") };
            fs::write(&out, engine::snapshot(&pool)).with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} ({})", out.display(), engine::state_digest(&pool));
        }
        Command::Restore { file } => {
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let pool = engine::restore(&text)?;
            println!("{}", serde_json::to_string_pretty(&pool)?);
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::AssertionsFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
