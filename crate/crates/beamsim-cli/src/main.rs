//! Command-line runner: parses flags into an experiment spec, runs it, and
//! writes the CSV, manifest, and optional JSON dumps to the output
//! directory.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::Parser;

use beamsim::channel::DistanceUnit;
use beamsim::experiment::{run_experiment, write_artifacts, EtaSweep, ExperimentKind, ExperimentSpec};
use beamsim::power::Policy;
use beamsim::Error;

/// Deterministic multi-beam downlink simulator: beam training, user
/// grouping, and power allocation over a sectored millimeter-wave cell.
#[derive(Parser, Debug)]
#[command(name = "beamsim", version, about)]
struct Cli {
    /// Experiment to run: fig3 (sweep-scan counts), fig4 (sum rate versus
    /// admission threshold), custom (the rate pipeline on --config's scene)
    #[arg(long, value_parser = ExperimentKind::from_str)]
    experiment: ExperimentKind,

    /// Scene configuration file (TOML); required for custom, optional
    /// otherwise (defaults to the built-in reference scene)
    #[arg(long, required_if_eq("experiment", "custom"))]
    config: Option<PathBuf>,

    /// Directory the CSV, manifest, and dumps are written to
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Scene-generation seed; overrides the configuration's seed
    #[arg(long)]
    seed: Option<u64>,

    /// Admission-threshold sweep as start:stop:step in dB (default 0:20:1)
    #[arg(long, value_parser = EtaSweep::from_str)]
    eta: Option<EtaSweep>,

    /// Comma-separated side-lobe gains to sweep (default 0.01,0.1)
    #[arg(long, value_delimiter = ',')]
    z: Option<Vec<f64>>,

    /// Comma-separated simultaneous-beam counts for fig3 (default 1..10)
    #[arg(long, value_delimiter = ',')]
    ntx: Option<Vec<usize>>,

    /// Comma-separated power policies (default mu-siso,apa,ppa-fair,ppa-unfair)
    #[arg(long, value_delimiter = ',', value_parser = Policy::from_str)]
    policies: Option<Vec<Policy>>,

    /// Also write the first sweep point's training report as JSON
    #[arg(long)]
    dump_training: bool,

    /// Also write the first sweep point's grouping result as JSON
    #[arg(long)]
    dump_grouping: bool,

    /// Also write the first sweep point's power allocations as JSON
    #[arg(long)]
    dump_allocation: bool,

    /// Distance-unit convention for the path-loss laws: m or km
    #[arg(long, value_parser = DistanceUnit::from_str)]
    distance_unit: Option<DistanceUnit>,
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, Error> {
    let mut spec = ExperimentSpec::new(cli.experiment);
    spec.config_path = cli.config;
    if let Some(eta) = cli.eta {
        spec.eta = eta;
    }
    if let Some(gains) = cli.z {
        spec.sidelobe_gains = gains;
    }
    if let Some(counts) = cli.ntx {
        spec.n_tx_values = counts;
    }
    if let Some(policies) = cli.policies {
        spec.policies = policies;
    }
    spec.seed = cli.seed;
    spec.distance_unit = cli.distance_unit;
    spec.dump_training = cli.dump_training;
    spec.dump_grouping = cli.dump_grouping;
    spec.dump_allocation = cli.dump_allocation;

    let artifacts = run_experiment(&spec)?;
    write_artifacts(&artifacts, &cli.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(written) => {
            for path in written {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
