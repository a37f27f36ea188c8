//! `pivotal oracle`: exact enumeration against the Monte Carlo engine on a
//! toy contest, as an end-to-end correctness harness.

use std::io::Write;
use std::path::PathBuf;

use pivotal::engine::EngineError;
use pivotal::toy::{compare_oracle, ToySpec};

use crate::manifest::{fmt_f64, RunManifest};
use crate::CliError;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Toy contest config.
    #[arg(long, default_value = "data/toy_contest.conf")]
    contest: PathBuf,

    /// Monte Carlo runs per conditional branch.
    #[arg(long = "n-mc", default_value_t = 50_000)]
    n_mc: u64,

    /// Root seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Maximum tolerated total-variation gap per conditional.
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,

    /// Output report CSV path.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<(), CliError> {
    if args.n_mc == 0 {
        return Err(CliError::Usage("--n-mc must be >= 1".into()));
    }

    let spec = ToySpec::from_file(&args.contest)?;
    let report = compare_oracle(&spec, args.n_mc, args.seed, args.tolerance).map_err(|e| {
        match e {
            EngineError::PathCountExceeded { paths, limit } => CliError::Data(anyhow::anyhow!(
                "contest has {paths} outcome paths, enumeration handles at most {limit}; \
                 use a smaller instance"
            )),
            other => CliError::Internal(other.into()),
        }
    })?;

    let mut manifest = RunManifest::new("oracle");
    manifest.push_path("contest", &args.contest);
    manifest.push("n_mc", args.n_mc);
    manifest.push("seed", args.seed);
    manifest.push("tolerance", fmt_f64(args.tolerance));
    manifest.push("max_gap", fmt_f64(report.max_gap()));
    manifest.push("verdict", if report.passed() { "PASS" } else { "FAIL" });
    manifest.log();

    let mut out = manifest.create_csv(&args.out, "event,outcome,contestant,tv_gap,within_tolerance")?;
    for row in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.event,
            row.outcome,
            row.contestant,
            fmt_f64(row.tv_gap),
            row.tv_gap <= args.tolerance
        )?;
    }
    eprintln!(
        "pivotal: oracle {} (max gap {:.6} vs tolerance {:.6}), report at {}",
        if report.passed() { "PASS" } else { "FAIL" },
        report.max_gap(),
        args.tolerance,
        args.out.display()
    );
    Ok(())
}
