//! Scenario configuration: TOML ingestion with unit conversion (degrees →
//! radians, dBm → linear mW, GHz → Hz) and full-document validation that
//! reports every failing field at once.

use std::path::Path;

use serde::Deserialize;

use crate::channel::{dbm_to_mw, DistanceUnit, NoiseModel, PathLossParams};
use crate::error::Error;
use crate::scenario::{
    sector_count_for_beamwidth, MbsSpec, MueId, MueSpec, PathKind, PhysicalPath, Scenario,
    SimOptions,
};

/// Reference cell description shipped with the crate (short-range indoor
/// 60 GHz deployment with one prototype user).
pub const REFERENCE_CONFIG: &str = include_str!("../../../configs/reference.toml");

// ====================================================================
// Raw document schema (user-facing units)
// ====================================================================

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    mbs: RawMbs,
    channel: RawChannel,
    noise: RawNoise,
    #[serde(default)]
    mues: Vec<RawMue>,
    #[serde(default)]
    paths: Vec<RawPath>,
    #[serde(default)]
    options: RawOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMbs {
    max_beams: usize,
    tx_beamwidth_deg: f64,
    max_total_power_dbm: f64,
    max_beam_power_dbm: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    carrier_freq_ghz: f64,
    sidelobe_gain: f64,
    snr_threshold_db: f64,
    #[serde(default)]
    distance_unit: Option<DistanceUnit>,
    los: RawPathClass,
    nlos: RawPathClass,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPathClass {
    attenuation_db: f64,
    exponent: f64,
    default_distance_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    bandwidth_ghz: f64,
    noise_figure_db: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMue {
    id: u32,
    max_beams: usize,
    rx_beamwidth_deg: f64,
    sim_rx_beams: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPath {
    mue: u32,
    tx_sector: usize,
    rx_sector: usize,
    kind: PathKind,
    distance_m: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    #[serde(default)]
    detection_threshold_db: Option<f64>,
    #[serde(default)]
    quasi_omni_gain: Option<f64>,
    #[serde(default)]
    ppa_prune: Option<bool>,
}

// ====================================================================
// Loading
// ====================================================================

/// Parse and validate a scenario document.
///
/// Parse errors carry the offending line and field; validation failures
/// list every violated constraint, not just the first.
pub fn load_scenario(text: &str) -> Result<Scenario, Error> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| Error::config(format!("scenario document: {e}")))?;

    let unit = raw.channel.distance_unit.unwrap_or(DistanceUnit::Meters);
    let defaults = SimOptions::default();

    let scenario = Scenario {
        mbs: MbsSpec {
            max_beams: raw.mbs.max_beams,
            sector_count: sector_count_for_beamwidth(raw.mbs.tx_beamwidth_deg.to_radians()),
            tx_beamwidth_rad: raw.mbs.tx_beamwidth_deg.to_radians(),
            max_total_power_mw: dbm_to_mw(raw.mbs.max_total_power_dbm),
            max_beam_power_mw: dbm_to_mw(raw.mbs.max_beam_power_dbm),
        },
        mues: raw
            .mues
            .iter()
            .map(|m| MueSpec {
                id: MueId(m.id),
                max_beams: m.max_beams,
                sector_count: sector_count_for_beamwidth(m.rx_beamwidth_deg.to_radians()),
                rx_beamwidth_rad: m.rx_beamwidth_deg.to_radians(),
                sim_rx_beams: m.sim_rx_beams,
            })
            .collect(),
        paths: raw
            .paths
            .iter()
            .map(|p| PhysicalPath {
                mue_id: MueId(p.mue),
                tx_sector: p.tx_sector,
                rx_sector: p.rx_sector,
                kind: p.kind,
                distance_m: p.distance_m,
            })
            .collect(),
        los_pathloss: PathLossParams {
            carrier_freq_ghz: raw.channel.carrier_freq_ghz,
            attenuation_db: raw.channel.los.attenuation_db,
            exponent: raw.channel.los.exponent,
            distance_unit: unit,
        },
        nlos_pathloss: PathLossParams {
            carrier_freq_ghz: raw.channel.carrier_freq_ghz,
            attenuation_db: raw.channel.nlos.attenuation_db,
            exponent: raw.channel.nlos.exponent,
            distance_unit: unit,
        },
        noise: NoiseModel {
            bandwidth_hz: raw.noise.bandwidth_ghz * 1e9,
            noise_figure_db: raw.noise.noise_figure_db,
        },
        sidelobe_gain: raw.channel.sidelobe_gain,
        snr_threshold_db: raw.channel.snr_threshold_db,
        los_distance_m: raw.channel.los.default_distance_m,
        nlos_distance_m: raw.channel.nlos.default_distance_m,
        options: SimOptions {
            detection_threshold_db: raw.options.detection_threshold_db,
            quasi_omni_gain: raw.options.quasi_omni_gain.unwrap_or(defaults.quasi_omni_gain),
            ppa_prune: raw.options.ppa_prune.unwrap_or(defaults.ppa_prune),
        },
        rng_seed: raw.seed,
    };

    scenario.validate()?;
    Ok(scenario)
}

/// Load a scenario document from disk.
pub fn load_scenario_file(path: &Path) -> Result<Scenario, Error> {
    let text = std::fs::read_to_string(path)?;
    load_scenario(&text).map_err(|e| match e {
        Error::Config(msg) => Error::config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// The shipped reference scenario.
pub fn reference_scenario() -> Result<Scenario, Error> {
    load_scenario(REFERENCE_CONFIG)
}
