//! Cell description: one multi-beam base station, the users it serves, and
//! the sparse directional paths between them, plus the channel constants
//! shared by every link.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{AntennaPattern, DistanceUnit, NoiseModel, PathLossParams};
use crate::error::Error;

/// User identifier, unique within a scenario.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct MueId(pub u32);

impl fmt::Display for MueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mue{}", self.0)
    }
}

/// Propagation class of a physical path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Los,
    Nlos,
}

/// Base-station description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbsSpec {
    /// Most beams the station can form at once.
    pub max_beams: usize,
    /// Transmit sectors covering the full circle; `ceil(2π / beamwidth)`.
    pub sector_count: usize,
    /// Transmit beamwidth, radians.
    pub tx_beamwidth_rad: f64,
    /// Total transmit power budget, linear mW.
    pub max_total_power_mw: f64,
    /// Per-beam power cap, linear mW.
    pub max_beam_power_mw: f64,
}

/// User-equipment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MueSpec {
    pub id: MueId,
    /// Most receive beams the user can form at once.
    pub max_beams: usize,
    /// Receive sectors covering the full circle.
    pub sector_count: usize,
    /// Receive beamwidth, radians.
    pub rx_beamwidth_rad: f64,
    /// Beams the user sweeps simultaneously during receive training.
    pub sim_rx_beams: usize,
}

/// One resolvable propagation path between the station and a user.
///
/// A path is addressed by the transmit sector it leaves through and the
/// receive sector it arrives in; within one user, paths occupy distinct
/// transmit sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalPath {
    pub mue_id: MueId,
    pub tx_sector: usize,
    pub rx_sector: usize,
    pub kind: PathKind,
    /// Path length in meters (converted per the distance-unit convention
    /// when fed to the path-loss law).
    pub distance_m: f64,
}

/// Simulation switches that change conventions rather than the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// SNR floor (dB) a swept sector must clear to count as detected.
    /// `None` falls back to the admission threshold.
    pub detection_threshold_db: Option<f64>,
    /// Gain of the un-beamformed side during training sweeps.
    pub quasi_omni_gain: f64,
    /// Whether priority power policies prune links that miss the admission
    /// threshold (disable to keep every funded link regardless).
    pub ppa_prune: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            detection_threshold_db: None,
            quasi_omni_gain: 1.0,
            ppa_prune: true,
        }
    }
}

/// Full scenario: station, users, paths, channel constants, and switches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub mbs: MbsSpec,
    pub mues: Vec<MueSpec>,
    pub paths: Vec<PhysicalPath>,
    pub los_pathloss: PathLossParams,
    pub nlos_pathloss: PathLossParams,
    pub noise: NoiseModel,
    /// Side-lobe gain `z` shared by all patterns in the cell.
    pub sidelobe_gain: f64,
    /// Admission threshold η, dB.
    pub snr_threshold_db: f64,
    /// Default path lengths used when generating random scenes, meters.
    pub los_distance_m: f64,
    pub nlos_distance_m: f64,
    pub options: SimOptions,
    pub rng_seed: u64,
}

/// Sectors needed to tile the full circle with the given beamwidth.
///
/// The ratio is computed with a small guard so exact divisors (e.g. 36
/// sectors of 10°) do not round up through floating-point noise.
pub fn sector_count_for_beamwidth(beamwidth_rad: f64) -> usize {
    let ratio = TAU / beamwidth_rad;
    (ratio - 1e-9).ceil().max(1.0) as usize
}

impl Scenario {
    /// Transmit antenna pattern of the station.
    pub fn tx_pattern(&self) -> AntennaPattern {
        AntennaPattern {
            beamwidth_rad: self.mbs.tx_beamwidth_rad,
            sidelobe_gain: self.sidelobe_gain,
        }
    }

    /// Receive antenna pattern of one user.
    pub fn rx_pattern(&self, mue: &MueSpec) -> AntennaPattern {
        AntennaPattern {
            beamwidth_rad: mue.rx_beamwidth_rad,
            sidelobe_gain: self.sidelobe_gain,
        }
    }

    pub fn pathloss(&self, kind: PathKind) -> &PathLossParams {
        match kind {
            PathKind::Los => &self.los_pathloss,
            PathKind::Nlos => &self.nlos_pathloss,
        }
    }

    pub fn mue(&self, id: MueId) -> Option<&MueSpec> {
        self.mues.iter().find(|m| m.id == id)
    }

    /// Paths of one user with their indices into `self.paths`.
    pub fn paths_of(&self, id: MueId) -> impl Iterator<Item = (usize, &PhysicalPath)> {
        self.paths
            .iter()
            .enumerate()
            .filter(move |(_, p)| p.mue_id == id)
    }

    /// Path length expressed in the active distance unit.
    pub fn path_distance_in_unit(&self, path: &PhysicalPath) -> f64 {
        self.pathloss(path.kind)
            .distance_unit
            .from_meters(path.distance_m)
    }

    /// Detection floor for training sweeps; defaults to the admission
    /// threshold when not set explicitly.
    pub fn detection_threshold_db(&self) -> f64 {
        self.options
            .detection_threshold_db
            .unwrap_or(self.snr_threshold_db)
    }

    /// Admission threshold as a linear ratio.
    pub fn snr_threshold_linear(&self) -> f64 {
        crate::channel::db_to_linear(self.snr_threshold_db)
    }

    /// Main-lobe-only SNR of one path at the given transmit power, with
    /// both ends beamformed and interference ignored.
    pub fn pencil_path_snr(&self, path: &PhysicalPath, power_mw: f64) -> Result<f64, Error> {
        let mue = self.mue(path.mue_id).ok_or_else(|| {
            Error::contract(format!("path references unknown user {}", path.mue_id))
        })?;
        crate::channel::pencil_snr(
            power_mw,
            self.mbs.tx_beamwidth_rad,
            mue.rx_beamwidth_rad,
            self.pathloss(path.kind),
            self.path_distance_in_unit(path),
            &self.noise,
        )
    }

    /// Noise-floor-referenced SNR of one path with exactly one end
    /// beamformed (the other in quasi-omni mode), as seen during a
    /// training sweep.
    pub fn sweep_path_snr(
        &self,
        path: &PhysicalPath,
        power_mw: f64,
        beamformed_gain: f64,
    ) -> Result<f64, Error> {
        let loss_db = self.pathloss(path.kind).loss_db(self.path_distance_in_unit(path))?;
        let loss = crate::channel::db_to_linear(loss_db);
        let noise = self.noise.power_mw()?;
        Ok(power_mw * beamformed_gain * self.options.quasi_omni_gain / (loss * noise))
    }

    /// Copy with a different side-lobe gain.
    pub fn with_sidelobe_gain(&self, z: f64) -> Scenario {
        Scenario {
            sidelobe_gain: z,
            ..self.clone()
        }
    }

    /// Copy with a different admission threshold.
    pub fn with_snr_threshold_db(&self, eta_db: f64) -> Scenario {
        Scenario {
            snr_threshold_db: eta_db,
            ..self.clone()
        }
    }

    /// Copy with the distance-unit convention replaced on both path-loss
    /// laws.
    pub fn with_distance_unit(&self, unit: DistanceUnit) -> Scenario {
        let mut s = self.clone();
        s.los_pathloss.distance_unit = unit;
        s.nlos_pathloss.distance_unit = unit;
        s
    }

    /// Check every structural invariant, collecting all violations.
    pub fn validate(&self) -> Result<(), Error> {
        let mut problems = Vec::new();

        if self.mbs.max_beams < 1 {
            problems.push("mbs.max_beams: must be at least 1".to_string());
        }
        if !(self.mbs.tx_beamwidth_rad > 0.0 && self.mbs.tx_beamwidth_rad < TAU) {
            problems.push(format!(
                "mbs.tx_beamwidth: must lie in (0, 360) degrees, got {} rad",
                self.mbs.tx_beamwidth_rad
            ));
        } else if self.mbs.sector_count != sector_count_for_beamwidth(self.mbs.tx_beamwidth_rad) {
            problems.push(format!(
                "mbs.sector_count: {} does not tile the circle with the transmit beamwidth",
                self.mbs.sector_count
            ));
        }
        if !(self.mbs.max_total_power_mw > 0.0) {
            problems.push("mbs.max_total_power: must be positive".to_string());
        }
        if !(self.mbs.max_beam_power_mw > 0.0) {
            problems.push("mbs.max_beam_power: must be positive".to_string());
        }
        if self.mbs.max_beam_power_mw > self.mbs.max_total_power_mw {
            problems.push(format!(
                "mbs.max_beam_power: per-beam cap {:.6} mW exceeds the total budget {:.6} mW",
                self.mbs.max_beam_power_mw, self.mbs.max_total_power_mw
            ));
        }

        let mut seen_ids = BTreeSet::new();
        for mue in &self.mues {
            let tag = mue.id;
            if !seen_ids.insert(mue.id) {
                problems.push(format!("{tag}: duplicate user id"));
            }
            if mue.max_beams < 1 {
                problems.push(format!("{tag}.max_beams: must be at least 1"));
            }
            if mue.max_beams > self.mbs.max_beams {
                problems.push(format!(
                    "{tag}.max_beams: {} exceeds the station's beam capacity {}",
                    mue.max_beams, self.mbs.max_beams
                ));
            }
            if !(mue.rx_beamwidth_rad > 0.0 && mue.rx_beamwidth_rad < TAU) {
                problems.push(format!(
                    "{tag}.rx_beamwidth: must lie in (0, 360) degrees, got {} rad",
                    mue.rx_beamwidth_rad
                ));
            } else if mue.sector_count != sector_count_for_beamwidth(mue.rx_beamwidth_rad) {
                problems.push(format!(
                    "{tag}.sector_count: {} does not tile the circle with the receive beamwidth",
                    mue.sector_count
                ));
            }
            let sim_cap = mue.max_beams.min(mue.sector_count);
            if mue.sim_rx_beams < 1 || mue.sim_rx_beams > sim_cap {
                problems.push(format!(
                    "{tag}.sim_rx_beams: {} outside [1, {}]",
                    mue.sim_rx_beams, sim_cap
                ));
            }
        }

        let mut los_seen = BTreeSet::new();
        let mut tx_seen: BTreeSet<(MueId, usize)> = BTreeSet::new();
        for (idx, path) in self.paths.iter().enumerate() {
            let tag = format!("paths[{idx}]");
            let Some(mue) = self.mue(path.mue_id) else {
                problems.push(format!("{tag}.mue: unknown user id {}", path.mue_id.0));
                continue;
            };
            if path.tx_sector >= self.mbs.sector_count {
                problems.push(format!(
                    "{tag}.tx_sector: {} outside [0, {})",
                    path.tx_sector, self.mbs.sector_count
                ));
            }
            if path.rx_sector >= mue.sector_count {
                problems.push(format!(
                    "{tag}.rx_sector: {} outside [0, {})",
                    path.rx_sector, mue.sector_count
                ));
            }
            if !(path.distance_m > 0.0) {
                problems.push(format!(
                    "{tag}.distance: must be positive, got {}",
                    path.distance_m
                ));
            }
            if path.kind == PathKind::Los && !los_seen.insert(path.mue_id) {
                problems.push(format!(
                    "{tag}: second line-of-sight path for {}",
                    path.mue_id
                ));
            }
            if !tx_seen.insert((path.mue_id, path.tx_sector)) {
                problems.push(format!(
                    "{tag}: {} already has a path in transmit sector {}",
                    path.mue_id, path.tx_sector
                ));
            }
        }

        for (name, params) in [("los", &self.los_pathloss), ("nlos", &self.nlos_pathloss)] {
            if let Err(e) = params.validate() {
                problems.push(format!("channel.{name}: {e}"));
            }
        }
        if let Err(e) = self.noise.validate() {
            problems.push(format!("noise: {e}"));
        }
        if !(0.0..1.0).contains(&self.sidelobe_gain) {
            problems.push(format!(
                "channel.sidelobe_gain: must lie in [0, 1), got {}",
                self.sidelobe_gain
            ));
        }
        if !self.snr_threshold_db.is_finite() {
            problems.push("channel.snr_threshold: must be finite".to_string());
        }
        if !(self.los_distance_m > 0.0) || !(self.nlos_distance_m > 0.0) {
            problems.push("channel.default distances: must be positive".to_string());
        }
        if !(self.options.quasi_omni_gain > 0.0) {
            problems.push("options.quasi_omni_gain: must be positive".to_string());
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::config(format!(
                "scenario has {} invalid field(s):\n  - {}",
                problems.len(),
                problems.join("\n  - ")
            )))
        }
    }
}

/// Build a random scene from a template: `n_mues` clones of the template's
/// first user, each with one line-of-sight path at the default LOS distance
/// and `paths_per_mue − 1` reflected paths at the default NLOS distance.
///
/// Transmit and receive sectors are drawn uniformly without replacement
/// per user from the given seed; distinct users may share transmit
/// sectors, which is what creates beam conflicts downstream. Identical
/// seeds reproduce the scene exactly.
pub fn generate_random_scenario(
    template: &Scenario,
    n_mues: usize,
    paths_per_mue: usize,
    seed: u64,
) -> Result<Scenario, Error> {
    let prototype = template.mues.first().ok_or_else(|| {
        Error::config("template scenario must contain a prototype user".to_string())
    })?;
    if n_mues < 1 {
        return Err(Error::contract("at least one user must be generated".to_string()));
    }
    if paths_per_mue < 1 {
        return Err(Error::contract(
            "each user needs at least one path".to_string(),
        ));
    }
    if paths_per_mue > template.mbs.sector_count || paths_per_mue > prototype.sector_count {
        return Err(Error::infeasible(format!(
            "{paths_per_mue} paths per user cannot occupy distinct sectors \
             ({} transmit, {} receive available)",
            template.mbs.sector_count, prototype.sector_count
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenario = template.clone();
    scenario.rng_seed = seed;
    scenario.mues = (1..=n_mues)
        .map(|i| MueSpec {
            id: MueId(i as u32),
            ..prototype.clone()
        })
        .collect();

    scenario.paths = Vec::with_capacity(n_mues * paths_per_mue);
    for mue in &scenario.mues {
        let tx = sample(&mut rng, template.mbs.sector_count, paths_per_mue);
        let rx = sample(&mut rng, prototype.sector_count, paths_per_mue);
        for (k, (tx_sector, rx_sector)) in tx.iter().zip(rx.iter()).enumerate() {
            let (kind, distance_m) = if k == 0 {
                (PathKind::Los, scenario.los_distance_m)
            } else {
                (PathKind::Nlos, scenario.nlos_distance_m)
            };
            scenario.paths.push(PhysicalPath {
                mue_id: mue.id,
                tx_sector,
                rx_sector,
                kind,
                distance_m,
            });
        }
    }

    scenario.validate()?;
    Ok(scenario)
}
