//! `pivotal primaries`: schedule studies and positional studies over the
//! sequential-election contest.

use std::io::Write;
use std::path::PathBuf;

use clap::ValueEnum;
use pivotal::primaries::{
    positional_study, read_states_csv, run_study, ScheduleMode, StudyConfig,
};

use crate::manifest::{fmt_f64, RunManifest};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Regular,
    Random,
    RankIncrease,
}

impl Mode {
    fn to_schedule(self) -> ScheduleMode {
        match self {
            Mode::Regular => ScheduleMode::Regular,
            Mode::Random => ScheduleMode::Random,
            Mode::RankIncrease => ScheduleMode::RankIncrease,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// States CSV (columns: name,date,delegates).
    #[arg(long, default_value = "data/primaries_2020.csv")]
    states: PathBuf,

    /// Schedule regime for the study.
    #[arg(long, value_enum, default_value_t = Mode::Regular)]
    mode: Mode,

    /// Preference samples to average over.
    #[arg(long, default_value_t = 1000)]
    samples: u64,

    /// Monte Carlo runs per conditional branch.
    #[arg(long = "n-mc", default_value_t = 5000)]
    n_mc: u64,

    /// Root seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Positional study: the state to move through the calendar
    /// (requires --positions; --mode is ignored).
    #[arg(long)]
    state: Option<String>,

    /// Comma-separated 1-based seat positions for the positional study.
    #[arg(long, value_delimiter = ',')]
    positions: Vec<usize>,

    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<(), CliError> {
    if args.samples == 0 {
        return Err(CliError::Usage("--samples must be >= 1".into()));
    }
    if args.n_mc == 0 {
        return Err(CliError::Usage("--n-mc must be >= 1".into()));
    }
    if args.state.is_some() != !args.positions.is_empty() {
        return Err(CliError::Usage(
            "--state and --positions must be given together".into(),
        ));
    }

    let states = read_states_csv(&args.states)?;
    match args.state.clone() {
        Some(state) => positional(args_into_positional(&args, state), &states),
        None => study(&args, &states),
    }
}

fn study(args: &Args, states: &[pivotal::primaries::StateRecord]) -> Result<(), CliError> {
    let mode = args.mode.to_schedule();
    let cfg = StudyConfig::new(mode, args.samples, args.n_mc, args.seed);

    let mut manifest = RunManifest::new("primaries");
    manifest.push_path("states", &args.states);
    manifest.push("mode", mode.as_str());
    manifest.push("samples", args.samples);
    manifest.push("n_mc", args.n_mc);
    manifest.push("seed", args.seed);
    manifest.push("distance", "win-prob-difference");
    manifest.log();

    let result = run_study(states, &cfg).map_err(|e| CliError::Internal(e.into()))?;

    let mut out =
        manifest.create_csv(&args.out, "state,mode,mean_ei,sd_ei,n_samples,n_mc,seed")?;
    for (i, state) in result.states.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            state.name,
            mode.as_str(),
            fmt_f64(result.mean_ei[i]),
            fmt_f64(result.sd_ei[i]),
            args.samples,
            args.n_mc,
            args.seed
        )?;
    }
    eprintln!("pivotal: wrote {} state rows to {}", result.states.len(), args.out.display());
    Ok(())
}

struct PositionalRequest {
    state: String,
    positions: Vec<usize>,
    samples: u64,
    n_mc: u64,
    seed: u64,
    states_path: PathBuf,
    out: PathBuf,
}

fn args_into_positional(args: &Args, state: String) -> PositionalRequest {
    PositionalRequest {
        state,
        positions: args.positions.clone(),
        samples: args.samples,
        n_mc: args.n_mc,
        seed: args.seed,
        states_path: args.states.clone(),
        out: args.out.clone(),
    }
}

fn positional(
    req: PositionalRequest,
    states: &[pivotal::primaries::StateRecord],
) -> Result<(), CliError> {
    let cfg = StudyConfig::new(ScheduleMode::Regular, req.samples, req.n_mc, req.seed);

    let mut manifest = RunManifest::new("primaries-positional");
    manifest.push_path("states", &req.states_path);
    manifest.push("state", &req.state);
    manifest.push(
        "positions",
        req.positions.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" "),
    );
    manifest.push("samples", req.samples);
    manifest.push("n_mc", req.n_mc);
    manifest.push("seed", req.seed);
    manifest.push("distance", "win-prob-difference");
    manifest.log();

    let result = positional_study(states, &req.state, &req.positions, &cfg).map_err(|e| {
        use pivotal::engine::EngineError;
        match e {
            EngineError::UnknownEvent(_) => {
                CliError::Data(anyhow::anyhow!("unknown state '{}'", req.state))
            }
            EngineError::InvalidConfig(msg) => CliError::Usage(msg),
            other => CliError::Internal(other.into()),
        }
    })?;

    let mut out = manifest.create_csv(&req.out, "state,position,sample,ei")?;
    for (p, values) in result.positions.iter().zip(&result.per_position) {
        for (sample, ei) in values.iter().enumerate() {
            writeln!(out, "{},{},{},{}", result.state, p, sample, fmt_f64(*ei))?;
        }
    }
    eprintln!(
        "pivotal: wrote {} positions x {} samples to {}",
        result.positions.len(),
        req.samples,
        req.out.display()
    );
    Ok(())
}
