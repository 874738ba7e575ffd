//! Command-line front end: `coverage`, `simulate`, `compare` and `hgm`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::handover::{best_partial_path, best_path};
use crate::io::{to_csv, windows_csv, write_atomic};
use crate::sim::{
    parse_scenario_str, populate_ues, run_traced, run_with, sweep_with, ue_handover_graph,
    Scenario, ScenarioError, SimContext, SimError, Strategy, BUNDLED_SCENARIO,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// UE counts `start..end:step`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UeSweep {
    pub start: usize,
    pub end: usize,
    pub step: usize,
}

impl UeSweep {
    pub fn counts(&self) -> Vec<usize> {
        (self.start..=self.end).step_by(self.step).collect()
    }
}

impl FromStr for UeSweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("expected start..end:step with positive integers, got `{s}`");
        let (range, step) = s.split_once(':').ok_or_else(bad)?;
        let (a, b) = range.split_once("..").ok_or_else(bad)?;
        let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
        let (start, end, step) = (num(a)?, num(b)?, num(step)?);
        if start == 0 || step == 0 || end < start {
            return Err(bad());
        }
        Ok(Self { start, end, step })
    }
}

impl std::fmt::Display for UeSweep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}:{}", self.start, self.end, self.step)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "caas",
    version,
    about = "Multi-constellation access simulator",
    max_term_width = 100
)]
pub struct CliConfig {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON file; the bundled two-shell scenario when omitted
    #[arg(long, global = true, value_name = "PATH", default_value = "bundled")]
    pub scenario: String,
    /// Directory receiving every output file
    #[arg(long, short, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Overrides the scenario seed
    #[arg(long, global = true, default_value = "scenario seed")]
    pub seed: SeedArg,
    /// More logging; with `simulate`, also dumps every beam allocation
    #[arg(long, short, global = true, action = clap::ArgAction::Count, default_value_t = 0)]
    pub verbose: u8,
}

/// `--seed`: a number, or the scenario's own seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedArg(pub Option<u64>);

impl FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "scenario seed" {
            return Ok(SeedArg(None));
        }
        s.parse()
            .map(|v| SeedArg(Some(v)))
            .map_err(|_| format!("invalid seed `{s}`"))
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coverage windows of every UE as CSV (coverage.csv)
    Coverage {
        /// Overrides the scenario UE count
        #[arg(long, default_value = "scenario count")]
        ues: CountArg,
    },
    /// One run: metrics.json and events.jsonl, plus allocations.csv with -v
    Simulate {
        #[arg(long, default_value = "caas", value_parser = ["caas", "standalone"])]
        strategy: String,
        /// Overrides the scenario UE count
        #[arg(long, default_value = "scenario count")]
        ues: CountArg,
    },
    /// Both strategies over a UE sweep and several seeds (compare.csv)
    Compare {
        /// UE counts as start..end:step, end included
        #[arg(long, default_value = "20..120:20")]
        ues: UeSweep,
        /// Number of seeds, counting up from the scenario seed
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// Handover graph of one UE as DOT and its best path as text
    Hgm {
        /// UE index
        #[arg(long)]
        ue: u32,
        /// Overrides the scenario UE count
        #[arg(long, default_value = "scenario count")]
        ues: CountArg,
    },
}

/// `--ues` for single runs: a count, or the scenario's own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountArg(pub Option<usize>);

impl FromStr for CountArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "scenario count" {
            return Ok(CountArg(None));
        }
        s.parse()
            .map(|v| CountArg(Some(v)))
            .map_err(|_| format!("invalid UE count `{s}`"))
    }
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<Scenario<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_scenario_str(&text)?)
}

fn load_scenario(common: &Common) -> Result<Scenario<f64>, CliError> {
    let mut sc = if common.scenario == "bundled" {
        parse_scenario_str(BUNDLED_SCENARIO)?
    } else {
        parse_scenario(Path::new(&common.scenario))?
    };
    if let Some(seed) = common.seed.0 {
        sc.seed = seed;
    }
    Ok(sc)
}

fn with_ues(mut sc: Scenario<f64>, ues: CountArg) -> Result<Scenario<f64>, CliError> {
    if let Some(n) = ues.0 {
        sc.ue_count = n;
        sc.validate()?;
    }
    Ok(sc)
}

fn emit(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let path = dir.join(name);
    write_atomic(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn serialize_err(dir: &Path, e: impl Into<std::io::Error>) -> CliError {
    CliError::io(dir, e.into())
}

/// Runs a parsed command.
pub fn execute(cfg: CliConfig) -> Result<(), CliError> {
    let sc = load_scenario(&cfg.common)?;
    let out = &cfg.common.out;
    match cfg.command {
        Command::Coverage { ues } => {
            let sc = with_ues(sc, ues)?;
            let ctx = SimContext::new(&sc)?;
            let mut windows = Vec::new();
            for u in populate_ues(&sc)? {
                windows.extend(ctx.ephemeris.windows(&u.position, u.ue_id));
            }
            emit(
                out,
                "coverage.csv",
                &windows_csv(&windows).map_err(|e| serialize_err(out, e))?,
            )
        }
        Command::Simulate { strategy, ues } => {
            let sc = with_ues(sc, ues)?;
            let strategy: Strategy = strategy.parse().map_err(CliError::Usage)?;
            let ctx = SimContext::new(&sc)?;
            let (report, log, rows) = if cfg.common.verbose > 0 {
                run_traced(&ctx, &sc, strategy)?
            } else {
                let (r, l) = run_with(&ctx, &sc, strategy)?;
                (r, l, Vec::new())
            };
            let mut metrics =
                serde_json::to_vec_pretty(&report).map_err(|e| serialize_err(out, e))?;
            metrics.push(b'\n');
            emit(out, "metrics.json", &metrics)?;
            emit(
                out,
                "events.jsonl",
                &log.to_jsonl().map_err(|e| serialize_err(out, e))?,
            )?;
            if cfg.common.verbose > 0 {
                emit(
                    out,
                    "allocations.csv",
                    &to_csv(&rows).map_err(|e| serialize_err(out, e))?,
                )?;
            }
            println!(
                "{strategy}: ue_count {} atr_bps {:.1} ho_per_ue {:.3} pingpong {} signaling {}",
                report.ue_count,
                report.atr_bps,
                report.ho_per_ue,
                report.pingpong_count,
                report.signaling_messages
            );
            Ok(())
        }
        Command::Compare { ues, seeds } => {
            if seeds == 0 {
                return Err(CliError::Usage("--seeds must be at least 1".into()));
            }
            let ctx = SimContext::new(&sc)?;
            let seed_list: Vec<u64> = (0..seeds).map(|k| sc.seed.wrapping_add(k)).collect();
            let rows = sweep_with(&ctx, &sc, &ues.counts(), &seed_list)?;
            emit(
                out,
                "compare.csv",
                &to_csv(&rows).map_err(|e| serialize_err(out, e))?,
            )
        }
        Command::Hgm { ue, ues } => {
            let sc = with_ues(sc, ues)?;
            let profiles = populate_ues(&sc)?;
            let Some(profile) = profiles.get(ue as usize) else {
                return Err(CliError::Usage(format!(
                    "--ue {ue} out of range: the scenario has {} UEs",
                    profiles.len()
                )));
            };
            let ctx = SimContext::new(&sc)?;
            let g = ue_handover_graph(&ctx, &sc, profile)?;
            let path = match best_path(&g) {
                Ok(p) => Some(p),
                Err(_) => best_partial_path(&g),
            };
            let mut text = format!(
                "ue {} at ({:.4}, {:.4}) deg: {} windows, {} edges\n",
                ue,
                profile.position.latitude_deg,
                profile.position.longitude_deg,
                g.vertex_count() - 1,
                g.edges.len()
            );
            match &path {
                Some(p) => {
                    let _ = writeln!(
                        text,
                        "benefit {:.6}, {} handovers",
                        p.cumulative_benefit,
                        p.handovers()
                    );
                    for (sat, at) in &p.sequence {
                        let _ = writeln!(text, "  t={at:.3} s -> {sat}");
                    }
                }
                None => text.push_str("no path\n"),
            }
            emit(out, &format!("hgm_ue{ue}.dot"), g.to_dot().as_bytes())?;
            emit(out, &format!("hgm_ue{ue}.txt"), text.as_bytes())?;
            print!("{text}");
            Ok(())
        }
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let env = env_logger::Env::new().filter_or("CAAS_LOG", default);
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .try_init();
}

/// Parses `argv`, runs and returns the process exit code.
pub fn main_with_args<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_VALIDATION
            } else {
                EXIT_OK
            };
        }
    };
    init_logging(cfg.common.verbose);
    match execute(cfg) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
