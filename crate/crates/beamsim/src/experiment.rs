//! Canned experiments over a configured scene: sweep definitions, the
//! deterministic runners behind the scan-count and rate-versus-threshold
//! tables, and the CSV / run-manifest rendering they share.
//!
//! Runners are pure: they take a scenario and sweep lists and return row
//! structs; [`run_experiment`] assembles whole runs into named file contents
//! so the binary only has to write them out. Identical inputs render
//! byte-identical artifacts.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::channel::DistanceUnit;
use crate::config;
use crate::error::Error;
use crate::grouping::{group_users, GroupingResult};
use crate::power::{allocate, evaluate_rate, InterferenceMode, Policy, PowerAllocation};
use crate::scenario::{generate_random_scenario, Scenario};
use crate::training::{train_all, TrainingReport};

/// Schema tag emitted as the first comment line of every CSV.
pub const CSV_SCHEMA_VERSION: &str = "beamsim-csv-v1";

/// Seed of the canonical three-user rate experiment. Chosen as the smallest
/// seed whose generated scene places all nine links on distinct transmit
/// sectors, so no user is deferred by beam contention.
pub const DEFAULT_SEED: u64 = 0;

/// Detection floor applied to rate experiments when the configuration
/// leaves it unset: effectively "log every sector", so the admission
/// threshold alone decides which links operate.
pub const OPEN_DETECTION_FLOOR_DB: f64 = -1000.0;

// ============================================================
// Sweep definitions
// ============================================================

/// Which canned experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExperimentKind {
    /// Sweep-scan comparison table over simultaneous beam counts.
    ScanCount,
    /// Sum-rate versus admission threshold over the full pipeline.
    RateVsEta,
    /// The rate pipeline over a user-supplied scene.
    Custom,
}

impl ExperimentKind {
    /// External name used on the command line and in the manifest.
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::ScanCount => "fig3",
            ExperimentKind::RateVsEta => "fig4",
            ExperimentKind::Custom => "custom",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fig3" => Ok(ExperimentKind::ScanCount),
            "fig4" => Ok(ExperimentKind::RateVsEta),
            "custom" => Ok(ExperimentKind::Custom),
            other => Err(Error::config(format!(
                "unknown experiment '{other}'; expected fig3, fig4, or custom"
            ))),
        }
    }
}

/// Inclusive arithmetic sweep over the admission threshold, dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaSweep {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl EtaSweep {
    pub fn new(start_db: f64, stop_db: f64, step_db: f64) -> Result<Self, Error> {
        let sweep = EtaSweep { start_db, stop_db, step_db };
        sweep.validate()?;
        Ok(sweep)
    }

    fn validate(&self) -> Result<(), Error> {
        if !self.step_db.is_finite() || self.step_db <= 0.0 {
            return Err(Error::config(format!(
                "threshold sweep step must be positive, got {}",
                self.step_db
            )));
        }
        if !self.start_db.is_finite() || !self.stop_db.is_finite() || self.stop_db < self.start_db
        {
            return Err(Error::config(format!(
                "threshold sweep must be nonempty, got {}:{}",
                self.start_db, self.stop_db
            )));
        }
        Ok(())
    }

    /// Grid points `start, start+step, …` up to and including `stop`
    /// (within a small guard against floating-point shortfall).
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize;
        (0..=count).map(|i| self.start_db + i as f64 * self.step_db).collect()
    }
}

impl fmt::Display for EtaSweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start_db, self.stop_db, self.step_db)
    }
}

impl FromStr for EtaSweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::config(format!(
                "threshold sweep must be start:stop:step, got '{s}'"
            )));
        }
        let mut nums = [0.0; 3];
        for (slot, part) in nums.iter_mut().zip(&parts) {
            *slot = part.trim().parse::<f64>().map_err(|_| {
                Error::config(format!("threshold sweep has a non-numeric field in '{s}'"))
            })?;
        }
        EtaSweep::new(nums[0], nums[1], nums[2])
    }
}

/// A fully parameterized run: which experiment, over which scene, sweeping
/// what, and which artifacts to emit.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Scene configuration file; `None` uses the built-in reference scene.
    pub config_path: Option<PathBuf>,
    pub eta: EtaSweep,
    pub sidelobe_gains: Vec<f64>,
    pub n_tx_values: Vec<usize>,
    pub policies: Vec<Policy>,
    /// Scene-generation seed; `None` keeps the configuration's seed.
    pub seed: Option<u64>,
    /// Distance-unit override for the path-loss laws.
    pub distance_unit: Option<DistanceUnit>,
    pub dump_training: bool,
    pub dump_grouping: bool,
    pub dump_allocation: bool,
}

impl ExperimentSpec {
    /// A spec with the canonical sweep defaults for the given experiment.
    pub fn new(kind: ExperimentKind) -> Self {
        ExperimentSpec {
            kind,
            config_path: None,
            eta: EtaSweep { start_db: 0.0, stop_db: 20.0, step_db: 1.0 },
            sidelobe_gains: vec![0.01, 0.1],
            n_tx_values: (1..=10).collect(),
            policies: Policy::all().to_vec(),
            seed: None,
            distance_unit: None,
            dump_training: false,
            dump_grouping: false,
            dump_allocation: false,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.eta.validate()?;
        if self.sidelobe_gains.is_empty() {
            return Err(Error::config("side-lobe gain list must be nonempty".to_string()));
        }
        for &z in &self.sidelobe_gains {
            if !z.is_finite() || !(0.0..1.0).contains(&z) {
                return Err(Error::config(format!(
                    "side-lobe gain must lie in [0, 1), got {z}"
                )));
            }
        }
        if self.n_tx_values.is_empty() {
            return Err(Error::config("simultaneous-beam list must be nonempty".to_string()));
        }
        if self.n_tx_values.iter().any(|&n| n == 0) {
            return Err(Error::config("simultaneous-beam counts must be positive".to_string()));
        }
        if self.policies.is_empty() {
            return Err(Error::config("policy list must be nonempty".to_string()));
        }
        if self.kind == ExperimentKind::Custom && self.config_path.is_none() {
            return Err(Error::config(
                "the custom experiment needs a scene configuration file".to_string(),
            ));
        }
        Ok(())
    }
}

// ============================================================
// Scan-count experiment
// ============================================================

/// One row of the sweep-scan comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanCountRow {
    pub tx_beamwidth_deg: f64,
    pub sector_count: usize,
    pub n_tx: usize,
    /// Rounds for the multi-beam sweep, `ceil(sectors / n_tx)`.
    pub proposed_scans: usize,
    /// Rounds for the one-beam-at-a-time sweep, always `sectors`.
    pub traditional_scans: usize,
}

/// Scan rounds needed to cover every transmit sector, multi-beam versus
/// single-beam, for each simultaneous-beam count.
pub fn run_scan_count(
    scenario: &Scenario,
    n_tx_values: &[usize],
) -> Result<Vec<ScanCountRow>, Error> {
    let sectors = scenario.mbs.sector_count;
    let bound = scenario.mbs.max_beams.min(sectors);
    let mut rows = Vec::with_capacity(n_tx_values.len());
    for &n_tx in n_tx_values {
        if n_tx == 0 || n_tx > bound {
            return Err(Error::contract(format!(
                "simultaneous beam count must lie in 1..={bound}, got {n_tx}"
            )));
        }
        rows.push(ScanCountRow {
            tx_beamwidth_deg: scenario.mbs.tx_beamwidth_rad.to_degrees(),
            sector_count: sectors,
            n_tx,
            proposed_scans: sectors.div_ceil(n_tx),
            traditional_scans: sectors,
        });
    }
    Ok(rows)
}

// ============================================================
// Rate-versus-threshold experiment
// ============================================================

/// One row of the rate-versus-threshold table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub eta_db: f64,
    pub sidelobe_gain: f64,
    pub policy: Policy,
    /// Side-lobe-aware sum rate, bits/s.
    pub total_rate_bps: f64,
    /// Links granted nonzero power.
    pub surviving_links: usize,
    /// Diagnostic for degenerate points (e.g. an infeasible split);
    /// empty on a clean run.
    pub note: String,
}

/// Runs the full pipeline — training, grouping, power allocation, side-lobe
/// rate scoring — at every `(side-lobe gain, threshold, policy)` point.
///
/// The scenario must carry explicit propagation paths. Rows come out in
/// deterministic sweep order: gains outermost, thresholds next, policies
/// innermost. Points where a policy cannot run (infeasible budget) yield a
/// zero-rate row with the diagnostic preserved.
pub fn run_rate_vs_eta(
    scenario: &Scenario,
    etas_db: &[f64],
    sidelobe_gains: &[f64],
    policies: &[Policy],
) -> Result<Vec<RateRow>, Error> {
    if scenario.paths.is_empty() {
        return Err(Error::contract(
            "rate experiment needs a scene with propagation paths".to_string(),
        ));
    }
    let n_tx = scenario.mbs.max_beams.min(scenario.mbs.sector_count);
    let mut rows = Vec::new();
    for &z in sidelobe_gains {
        for &eta_db in etas_db {
            let point = scenario.with_sidelobe_gain(z).with_snr_threshold_db(eta_db);
            let (grouping, _training) = pipeline_front(&point, n_tx)?;
            for &policy in policies {
                rows.push(rate_point(&point, &grouping, policy, eta_db, z)?);
            }
        }
    }
    Ok(rows)
}

/// Training and grouping for one sweep point.
fn pipeline_front(point: &Scenario, n_tx: usize) -> Result<(GroupingResult, TrainingReport), Error> {
    let training = train_all(point, n_tx)?;
    let grouping = group_users(point, &training)?;
    Ok((grouping, training))
}

fn rate_point(
    point: &Scenario,
    grouping: &GroupingResult,
    policy: Policy,
    eta_db: f64,
    z: f64,
) -> Result<RateRow, Error> {
    match allocate(point, grouping, policy) {
        Ok(allocation) => {
            let rate = evaluate_rate(point, &allocation, InterferenceMode::SideLobe)?;
            Ok(RateRow {
                eta_db,
                sidelobe_gain: z,
                policy,
                total_rate_bps: rate,
                surviving_links: allocation.powered().count(),
                note: String::new(),
            })
        }
        Err(Error::Infeasible(msg)) => Ok(RateRow {
            eta_db,
            sidelobe_gain: z,
            policy,
            total_rate_bps: 0.0,
            surviving_links: 0,
            note: msg.replace(',', ";"),
        }),
        Err(other) => Err(other),
    }
}

// ============================================================
// CSV rendering
// ============================================================

fn sanitize_note(note: &str) -> String {
    note.replace(['\n', '\r'], " ").replace(',', ";")
}

/// Renders the scan-count table; the first line carries the schema tag.
pub fn scan_count_csv(rows: &[ScanCountRow]) -> String {
    let mut out = format!("# {CSV_SCHEMA_VERSION} scan-count\n");
    out.push_str("tx_beamwidth_deg,sector_count,n_tx,proposed_scans,traditional_scans\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.tx_beamwidth_deg, r.sector_count, r.n_tx, r.proposed_scans, r.traditional_scans
        );
    }
    out
}

/// Renders the rate table; rates appear in full-precision bits/s plus a
/// Gbps convenience column.
pub fn rate_csv(rows: &[RateRow]) -> String {
    let mut out = format!("# {CSV_SCHEMA_VERSION} rate-vs-eta\n");
    out.push_str(
        "eta_db,sidelobe_gain,policy,total_rate_bps,total_rate_gbps,surviving_links,note\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.eta_db,
            r.sidelobe_gain,
            r.policy,
            r.total_rate_bps,
            r.total_rate_bps / 1e9,
            r.surviving_links,
            sanitize_note(&r.note)
        );
    }
    out
}

// ============================================================
// Whole-run assembly
// ============================================================

/// File contents produced by one run, keyed by relative file name.
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub files: BTreeMap<String, String>,
}

/// Loads the scene a spec points at, applying the seed and distance-unit
/// overrides; returns the scenario plus the manifest bookkeeping values.
fn prepare_scenario(spec: &ExperimentSpec) -> Result<(Scenario, String, String), Error> {
    let (text, label): (String, String) = match &spec.config_path {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
            (text, path.display().to_string())
        }
        None => (config::REFERENCE_CONFIG.to_string(), "builtin-reference".to_string()),
    };
    let digest = Sha256::digest(text.as_bytes());
    let mut hash = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hash, "{byte:02x}");
    }
    let mut scenario = config::load_scenario(&text).map_err(|e| match e {
        Error::Config(msg) => Error::config(format!("{label}: {msg}")),
        other => other,
    })?;
    if let Some(seed) = spec.seed {
        scenario.rng_seed = seed;
    }
    if let Some(unit) = spec.distance_unit {
        scenario = scenario.with_distance_unit(unit);
    }
    Ok((scenario, label, hash))
}

/// The scene a rate experiment actually runs on: explicit paths are used
/// as-is; a path-less configuration generates the canonical three-user
/// scene (one direct and two reflected paths each) from its template.
fn rate_scene(scenario: &Scenario) -> Result<Scenario, Error> {
    if scenario.paths.is_empty() {
        generate_random_scenario(scenario, 3, 3, scenario.rng_seed)
    } else {
        Ok(scenario.clone())
    }
}

/// Renders the reproducibility manifest: every input and convention toggle
/// that shapes the output.
fn render_manifest(spec: &ExperimentSpec, scenario: &Scenario, label: &str, hash: &str) -> String {
    let policies: Vec<&str> = spec.policies.iter().map(|p| p.name()).collect();
    let gains: Vec<String> = spec.sidelobe_gains.iter().map(|z| z.to_string()).collect();
    let ntx: Vec<String> = spec.n_tx_values.iter().map(|n| n.to_string()).collect();
    let detection = scenario
        .options
        .detection_threshold_db
        .map(|d| d.to_string())
        .unwrap_or_else(|| format!("{OPEN_DETECTION_FLOOR_DB} (open default)"));
    let mut out = String::new();
    let _ = writeln!(out, "schema = {CSV_SCHEMA_VERSION}");
    let _ = writeln!(out, "experiment = {}", spec.kind);
    let _ = writeln!(out, "config = {label}");
    let _ = writeln!(out, "config_sha256 = {hash}");
    let _ = writeln!(out, "seed = {}", scenario.rng_seed);
    let _ = writeln!(out, "distance_unit = {}", scenario.los_pathloss.distance_unit);
    let _ = writeln!(out, "eta_sweep_db = {}", spec.eta);
    let _ = writeln!(out, "sidelobe_gains = {}", gains.join(","));
    let _ = writeln!(out, "n_tx_values = {}", ntx.join(","));
    let _ = writeln!(out, "policies = {}", policies.join(","));
    let _ = writeln!(out, "detection_threshold_db = {detection}");
    let _ = writeln!(out, "ppa_prune = {}", scenario.options.ppa_prune);
    let _ = writeln!(out, "quasi_omni_gain = {}", scenario.options.quasi_omni_gain);
    let _ = writeln!(out, "sinr_scale = linear");
    let _ = writeln!(out, "rate_law = shannon log2(1 + SINR) over the full bandwidth");
    out
}

fn dump_json<T: Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::contract(format!("serialization failed: {e}")))
}

/// Runs the experiment end to end and returns every artifact as file
/// contents.
///
/// Rate experiments default the detection floor to
/// [`OPEN_DETECTION_FLOOR_DB`] when the configuration leaves it unset, so
/// the admission threshold alone governs link survival; the manifest
/// records the effective value. Dump flags add JSON snapshots of the first
/// sweep point.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunArtifacts, Error> {
    spec.validate()?;
    let (mut scenario, label, hash) = prepare_scenario(spec)?;
    let mut files = BTreeMap::new();

    match spec.kind {
        ExperimentKind::ScanCount => {
            let rows = run_scan_count(&scenario, &spec.n_tx_values)?;
            files.insert("scan_count.csv".to_string(), scan_count_csv(&rows));
        }
        ExperimentKind::RateVsEta | ExperimentKind::Custom => {
            if scenario.options.detection_threshold_db.is_none() {
                scenario.options.detection_threshold_db = Some(OPEN_DETECTION_FLOOR_DB);
            }
            let scene = rate_scene(&scenario)?;
            let etas = spec.eta.values();
            let rows = run_rate_vs_eta(&scene, &etas, &spec.sidelobe_gains, &spec.policies)?;
            files.insert("rate_vs_eta.csv".to_string(), rate_csv(&rows));

            if spec.dump_training || spec.dump_grouping || spec.dump_allocation {
                let first = scene
                    .with_sidelobe_gain(spec.sidelobe_gains[0])
                    .with_snr_threshold_db(etas[0]);
                let n_tx = first.mbs.max_beams.min(first.mbs.sector_count);
                let (grouping, training) = pipeline_front(&first, n_tx)?;
                if spec.dump_training {
                    files.insert("training.json".to_string(), dump_json(&training)?);
                }
                if spec.dump_grouping {
                    files.insert("grouping.json".to_string(), dump_json(&grouping)?);
                }
                if spec.dump_allocation {
                    for &policy in &spec.policies {
                        let allocation: PowerAllocation = match allocate(&first, &grouping, policy)
                        {
                            Ok(a) => a,
                            Err(Error::Infeasible(_)) => continue,
                            Err(e) => return Err(e),
                        };
                        files.insert(
                            format!("allocation-{}.json", policy),
                            dump_json(&allocation)?,
                        );
                    }
                }
            }
        }
    }

    files.insert("manifest".to_string(), render_manifest(spec, &scenario, &label, &hash));
    Ok(RunArtifacts { files })
}

/// Writes every artifact under the given directory, creating it if needed.
pub fn write_artifacts(artifacts: &RunArtifacts, out_dir: &Path) -> Result<Vec<PathBuf>, Error> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, contents) in &artifacts.files {
        let path = out_dir.join(name);
        std::fs::write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}

// ============================================================
// Tests
// ============================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::reference_scenario;
    use crate::scenario::sector_count_for_beamwidth;

    fn reference_spec(kind: ExperimentKind) -> ExperimentSpec {
        ExperimentSpec::new(kind)
    }

    // ---- sweep parsing ----

    #[test]
    fn eta_sweep_parses_and_enumerates_the_grid() {
        let sweep: EtaSweep = "0:20:1".parse().unwrap();
        let values = sweep.values();
        assert_eq!(values.len(), 21);
        assert_eq!(values[0], 0.0);
        assert_eq!(values[20], 20.0);

        let fractional: EtaSweep = "0:2:0.5".parse().unwrap();
        assert_eq!(fractional.values(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);

        let single: EtaSweep = "5:5:1".parse().unwrap();
        assert_eq!(single.values(), vec![5.0]);
    }

    #[test]
    fn eta_sweep_rejects_degenerate_ranges() {
        assert!("0:20:0".parse::<EtaSweep>().is_err());
        assert!("0:20:-1".parse::<EtaSweep>().is_err());
        assert!("5:3:1".parse::<EtaSweep>().is_err());
        assert!("0:20".parse::<EtaSweep>().is_err());
        assert!("a:b:c".parse::<EtaSweep>().is_err());
    }

    #[test]
    fn experiment_names_round_trip() {
        for kind in [ExperimentKind::ScanCount, ExperimentKind::RateVsEta, ExperimentKind::Custom]
        {
            assert_eq!(kind.name().parse::<ExperimentKind>().unwrap(), kind);
        }
        assert!("fig5".parse::<ExperimentKind>().is_err());
    }

    // ---- scan-count table ----

    #[test]
    fn scan_table_matches_the_ceiling_rule() {
        let scn = reference_scenario().unwrap();
        let rows = run_scan_count(&scn, &(1..=10).collect::<Vec<_>>()).unwrap();
        assert_eq!(rows.len(), 10);
        for row in &rows {
            assert_eq!(row.tx_beamwidth_deg.round(), 10.0);
            assert_eq!(row.sector_count, 36);
            assert_eq!(row.traditional_scans, 36);
            assert_eq!(row.proposed_scans, 36usize.div_ceil(row.n_tx));
        }
        assert_eq!(rows[4].n_tx, 5);
        assert_eq!(rows[4].proposed_scans, 8);
        assert_eq!(rows[0].proposed_scans, rows[0].traditional_scans);
    }

    #[test]
    fn scan_table_covers_wider_beams_too() {
        let mut scn = reference_scenario().unwrap();
        scn.mbs.tx_beamwidth_rad = 15f64.to_radians();
        scn.mbs.sector_count = sector_count_for_beamwidth(scn.mbs.tx_beamwidth_rad);
        let rows = run_scan_count(&scn, &[4]).unwrap();
        assert_eq!(rows[0].sector_count, 24);
        assert_eq!(rows[0].proposed_scans, 6);
        assert_eq!(rows[0].traditional_scans, 24);
    }

    #[test]
    fn scan_table_rejects_beam_counts_outside_the_training_bound() {
        let scn = reference_scenario().unwrap();
        assert!(run_scan_count(&scn, &[0]).is_err());
        assert!(run_scan_count(&scn, &[11]).is_err());
    }

    #[test]
    fn scan_csv_is_versioned_and_complete() {
        let scn = reference_scenario().unwrap();
        let rows = run_scan_count(&scn, &[1, 5, 10]).unwrap();
        let csv = scan_count_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# beamsim-csv-v1 scan-count");
        assert_eq!(
            lines[1],
            "tx_beamwidth_deg,sector_count,n_tx,proposed_scans,traditional_scans"
        );
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[3], "10,36,5,8,36");
    }

    // ---- rate table ----

    #[test]
    fn rate_rows_cover_the_sweep_in_order() {
        let mut spec = reference_spec(ExperimentKind::RateVsEta);
        spec.eta = EtaSweep::new(10.0, 12.0, 2.0).unwrap();
        spec.sidelobe_gains = vec![0.01];
        let artifacts = run_experiment(&spec).unwrap();
        let csv = &artifacts.files["rate_vs_eta.csv"];
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# beamsim-csv-v1 rate-vs-eta");
        // 2 thresholds × 4 policies + 2 header lines.
        assert_eq!(lines.len(), 10);
        assert!(lines[2].starts_with("10,0.01,MU-SISO,"));
        assert!(lines[3].starts_with("10,0.01,APA,"));
        assert!(lines[5].starts_with("10,0.01,PPA-unfair,"));
        assert!(lines[6].starts_with("12,0.01,MU-SISO,"));
    }

    #[test]
    fn default_seed_scene_serves_all_three_users() {
        let template = reference_scenario().unwrap();
        let scene = generate_random_scenario(&template, 3, 3, DEFAULT_SEED).unwrap();
        let mut sectors: Vec<usize> = scene.paths.iter().map(|p| p.tx_sector).collect();
        sectors.sort_unstable();
        sectors.dedup();
        assert_eq!(sectors.len(), 9, "canonical scene must be free of beam contention");
    }

    #[test]
    fn rate_at_moderate_threshold_matches_the_reference_level() {
        let template = reference_scenario().unwrap();
        let scene = generate_random_scenario(&template, 3, 3, DEFAULT_SEED).unwrap();
        let mut scene = scene;
        scene.options.detection_threshold_db = Some(OPEN_DETECTION_FLOOR_DB);
        let rows =
            run_rate_vs_eta(&scene, &[10.0], &[0.01], &[Policy::Apa, Policy::MuSiso]).unwrap();
        assert_eq!(rows.len(), 2);
        let apa = &rows[0];
        assert_eq!(apa.surviving_links, 9);
        assert!(
            apa.total_rate_bps > 60e9 && apa.total_rate_bps < 66e9,
            "equal split should land near 63 Gbps, got {}",
            apa.total_rate_bps / 1e9
        );
        let siso = &rows[1];
        assert_eq!(siso.surviving_links, 3);
        assert!(siso.total_rate_bps < apa.total_rate_bps);
    }

    #[test]
    fn thresholds_beyond_every_link_produce_zero_rate_rows() {
        let mut spec = reference_spec(ExperimentKind::RateVsEta);
        spec.eta = EtaSweep::new(30.0, 30.0, 1.0).unwrap();
        spec.sidelobe_gains = vec![0.01];
        let artifacts = run_experiment(&spec).unwrap();
        for line in artifacts.files["rate_vs_eta.csv"].lines().skip(2) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[3], "0", "rate must be zero in {line}");
            assert_eq!(fields[5], "0", "no link may survive in {line}");
        }
    }

    // ---- assembly, manifest, determinism ----

    #[test]
    fn identical_specs_render_identical_artifacts() {
        let mut spec = reference_spec(ExperimentKind::RateVsEta);
        spec.eta = EtaSweep::new(8.0, 12.0, 2.0).unwrap();
        spec.dump_training = true;
        spec.dump_grouping = true;
        spec.dump_allocation = true;
        let first = run_experiment(&spec).unwrap();
        let second = run_experiment(&spec).unwrap();
        assert_eq!(first, second);
        assert!(first.files.contains_key("training.json"));
        assert!(first.files.contains_key("grouping.json"));
        assert!(first.files.contains_key("allocation-APA.json"));
    }

    #[test]
    fn manifest_records_every_convention_toggle() {
        let spec = reference_spec(ExperimentKind::RateVsEta);
        let artifacts = run_experiment(&spec).unwrap();
        let manifest = &artifacts.files["manifest"];
        for key in [
            "schema = ",
            "experiment = fig4",
            "config = builtin-reference",
            "config_sha256 = ",
            "seed = ",
            "distance_unit = m",
            "eta_sweep_db = 0:20:1",
            "sidelobe_gains = 0.01,0.1",
            "policies = MU-SISO,APA,PPA-fair,PPA-unfair",
            "detection_threshold_db = ",
            "ppa_prune = true",
            "quasi_omni_gain = 1",
            "sinr_scale = linear",
        ] {
            assert!(manifest.contains(key), "manifest is missing '{key}':\n{manifest}");
        }
    }

    #[test]
    fn scan_experiment_emits_table_and_manifest() {
        let spec = reference_spec(ExperimentKind::ScanCount);
        let artifacts = run_experiment(&spec).unwrap();
        assert!(artifacts.files.contains_key("scan_count.csv"));
        assert!(artifacts.files.contains_key("manifest"));
        assert_eq!(artifacts.files.len(), 2);
    }

    #[test]
    fn custom_experiment_requires_a_configuration() {
        let spec = reference_spec(ExperimentKind::Custom);
        let err = run_experiment(&spec).unwrap_err();
        assert!(err.to_string().contains("configuration"));
    }

    #[test]
    fn seed_override_changes_the_generated_scene() {
        let mut spec = reference_spec(ExperimentKind::RateVsEta);
        spec.eta = EtaSweep::new(10.0, 10.0, 1.0).unwrap();
        spec.sidelobe_gains = vec![0.01];
        let base = run_experiment(&spec).unwrap();
        spec.seed = Some(DEFAULT_SEED);
        let same = run_experiment(&spec).unwrap();
        assert_eq!(
            base.files["rate_vs_eta.csv"], same.files["rate_vs_eta.csv"],
            "explicit default seed must match the configured default"
        );
        assert!(base.files["manifest"].contains(&format!("seed = {DEFAULT_SEED}")));
    }
}
