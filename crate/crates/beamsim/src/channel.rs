//! Radio-link primitives: sectored-antenna directivity, log-distance path
//! loss, thermal noise, link SINR, pencil-beam SNR, and Shannon rate.
//!
//! Conventions used throughout the crate:
//! * power arithmetic is done in **linear milliwatts**; dBm/dB appear only
//!   at configuration and reporting boundaries,
//! * SINR/SNR values are **linear ratios**; the Shannon rate takes the
//!   linear value directly,
//! * angles are radians internally.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

// ============================================================
// Unit conversions
// ============================================================

/// dB ratio to linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear ratio to dB. Zero maps to `-inf`.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Absolute power, dBm to milliwatts.
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Absolute power, milliwatts to dBm.
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

// ============================================================
// Sectored antenna pattern
// ============================================================

/// Which lobe of the sectored pattern a signal passes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lobe {
    Main,
    Side,
}

/// Idealized sectored antenna: a flat main lobe of width `beamwidth_rad`
/// and a flat side-lobe floor `sidelobe_gain` everywhere else.
///
/// Valid patterns have `0 < beamwidth_rad < 2π` and
/// `0 <= sidelobe_gain < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    /// Main-lobe width, radians.
    pub beamwidth_rad: f64,
    /// Side-lobe gain `z`, linear, `0 <= z < 1`.
    pub sidelobe_gain: f64,
}

impl AntennaPattern {
    pub fn new(beamwidth_rad: f64, sidelobe_gain: f64) -> Result<Self, Error> {
        let pattern = AntennaPattern {
            beamwidth_rad,
            sidelobe_gain,
        };
        pattern.validate()?;
        Ok(pattern)
    }

    pub fn from_degrees(beamwidth_deg: f64, sidelobe_gain: f64) -> Result<Self, Error> {
        Self::new(beamwidth_deg.to_radians(), sidelobe_gain)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !self.beamwidth_rad.is_finite() || self.beamwidth_rad <= 0.0 || self.beamwidth_rad >= TAU
        {
            return Err(Error::domain(format!(
                "beamwidth must lie in (0, 2*pi) rad, got {}",
                self.beamwidth_rad
            )));
        }
        if !self.sidelobe_gain.is_finite() || self.sidelobe_gain < 0.0 || self.sidelobe_gain >= 1.0
        {
            return Err(Error::domain(format!(
                "side-lobe gain must lie in [0, 1), got {}",
                self.sidelobe_gain
            )));
        }
        Ok(())
    }

    /// Main-lobe gain; panics never, assumes a validated pattern.
    pub fn main_lobe_gain(&self) -> f64 {
        (TAU - (TAU - self.beamwidth_rad) * self.sidelobe_gain) / self.beamwidth_rad
    }
}

/// Directivity gain of a sectored pattern through the given lobe.
///
/// The main-lobe gain `(2π − (2π − ξ)z)/ξ` and side-lobe floor `z` conserve
/// radiated power: `ξ·g_main + (2π − ξ)·z = 2π`.
pub fn directivity_gain(pattern: &AntennaPattern, lobe: Lobe) -> Result<f64, Error> {
    pattern.validate()?;
    Ok(match lobe {
        Lobe::Main => pattern.main_lobe_gain(),
        Lobe::Side => pattern.sidelobe_gain,
    })
}

// ============================================================
// Path loss
// ============================================================

/// Unit in which distances enter the path-loss law.
///
/// The loss formula takes `log10` of the raw distance value, so the unit
/// convention changes absolute losses by `10·n·log10(1000)` between the two
/// choices. Meters reproduce free-space-consistent losses for room-scale
/// distances and are the default everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceUnit {
    #[serde(rename = "m")]
    Meters,
    #[serde(rename = "km")]
    Kilometers,
}

impl fmt::Display for DistanceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceUnit::Meters => write!(f, "m"),
            DistanceUnit::Kilometers => write!(f, "km"),
        }
    }
}

impl std::str::FromStr for DistanceUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m" | "meters" => Ok(DistanceUnit::Meters),
            "km" | "kilometers" => Ok(DistanceUnit::Kilometers),
            other => Err(Error::config(format!(
                "unknown distance unit '{other}'; expected m or km"
            ))),
        }
    }
}

impl DistanceUnit {
    /// Convert a length in meters into this unit.
    pub fn from_meters(&self, meters: f64) -> f64 {
        match self {
            DistanceUnit::Meters => meters,
            DistanceUnit::Kilometers => meters / 1000.0,
        }
    }
}

/// Log-distance path-loss law `L[dB] = A + 20·log10(f_c) + 10·n·log10(R)`
/// with `f_c` in GHz and `R` in `distance_unit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    /// Carrier frequency, GHz.
    pub carrier_freq_ghz: f64,
    /// Fixed attenuation `A`, dB.
    pub attenuation_db: f64,
    /// Path-loss exponent `n`.
    pub exponent: f64,
    /// Unit `R` is expressed in when fed to the law.
    pub distance_unit: DistanceUnit,
}

impl PathLossParams {
    pub fn validate(&self) -> Result<(), Error> {
        if !self.carrier_freq_ghz.is_finite() || self.carrier_freq_ghz <= 0.0 {
            return Err(Error::domain(format!(
                "carrier frequency must be positive, got {} GHz",
                self.carrier_freq_ghz
            )));
        }
        if !self.attenuation_db.is_finite() || !self.exponent.is_finite() {
            return Err(Error::domain(
                "attenuation and exponent must be finite".to_string(),
            ));
        }
        Ok(())
    }

    /// Loss in dB for a distance already expressed in `distance_unit`.
    pub fn loss_db(&self, distance: f64) -> Result<f64, Error> {
        path_loss_db(self, distance)
    }

    /// Loss in dB for a distance in meters, converted per `distance_unit`.
    pub fn loss_db_for_meters(&self, meters: f64) -> Result<f64, Error> {
        path_loss_db(self, self.distance_unit.from_meters(meters))
    }
}

/// Path loss in dB; `distance` is in the params' unit and must be positive.
pub fn path_loss_db(params: &PathLossParams, distance: f64) -> Result<f64, Error> {
    params.validate()?;
    if !distance.is_finite() || distance <= 0.0 {
        return Err(Error::domain(format!(
            "distance must be positive, got {distance}"
        )));
    }
    Ok(params.attenuation_db
        + 20.0 * params.carrier_freq_ghz.log10()
        + 10.0 * params.exponent * distance.log10())
}

// ============================================================
// Noise
// ============================================================

/// Thermal noise floor over a bandwidth plus receiver noise figure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Signal bandwidth `B`, Hz.
    pub bandwidth_hz: f64,
    /// Receiver noise figure, dB.
    pub noise_figure_db: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<(), Error> {
        if !self.bandwidth_hz.is_finite() || self.bandwidth_hz <= 0.0 {
            return Err(Error::domain(format!(
                "bandwidth must be positive, got {} Hz",
                self.bandwidth_hz
            )));
        }
        if !self.noise_figure_db.is_finite() || self.noise_figure_db < 0.0 {
            return Err(Error::domain(format!(
                "noise figure must be non-negative, got {} dB",
                self.noise_figure_db
            )));
        }
        Ok(())
    }

    /// Noise power in linear milliwatts.
    pub fn power_mw(&self) -> Result<f64, Error> {
        Ok(dbm_to_mw(noise_power_dbm(self)?))
    }
}

/// Noise power `P_N[dBm] = −174 + 10·log10(B) + NF` (thermal floor at
/// −174 dBm/Hz).
pub fn noise_power_dbm(noise: &NoiseModel) -> Result<f64, Error> {
    noise.validate()?;
    Ok(-174.0 + 10.0 * noise.bandwidth_hz.log10() + noise.noise_figure_db)
}

// ============================================================
// SINR and rate
// ============================================================

/// Linear SINR of one victim link inside a set of simultaneously powered
/// links.
///
/// The victim receives its own beam through both main lobes; every
/// interferer leaks through the transmit side-lobe floor into the victim's
/// main receive lobe, attenuated by the **victim's** path loss (all beams
/// leave the same transmitter, so the victim's propagation path applies):
///
/// ```text
///          P_victim · g_main(tx) · g_main(rx) / L(R)
/// SINR = -----------------------------------------------
///         P_N + Σ_j P_j · z_tx · g_main(rx) / L(R)
/// ```
///
/// `powers_mw` must contain every link in `interferers` and the victim;
/// the interferer set must not include the victim itself. `distance` is in
/// the path-loss params' unit.
#[allow(clippy::too_many_arguments)]
pub fn link_sinr<K: Ord + Copy + fmt::Debug>(
    victim: K,
    distance: f64,
    powers_mw: &BTreeMap<K, f64>,
    interferers: &BTreeSet<K>,
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    pathloss: &PathLossParams,
    noise: &NoiseModel,
) -> Result<f64, Error> {
    if interferers.contains(&victim) {
        return Err(Error::contract(format!(
            "interferer set must exclude the victim link {victim:?}"
        )));
    }
    let victim_power = *powers_mw.get(&victim).ok_or_else(|| {
        Error::contract(format!("no transmit power recorded for victim {victim:?}"))
    })?;
    if victim_power < 0.0 {
        return Err(Error::contract(format!(
            "negative transmit power {victim_power} mW on victim {victim:?}"
        )));
    }

    let loss_linear = db_to_linear(path_loss_db(pathloss, distance)?);
    let g_tx_main = directivity_gain(tx_pattern, Lobe::Main)?;
    let g_tx_side = directivity_gain(tx_pattern, Lobe::Side)?;
    let g_rx_main = directivity_gain(rx_pattern, Lobe::Main)?;
    let noise_mw = noise.power_mw()?;

    let signal = victim_power * g_tx_main * g_rx_main / loss_linear;

    // BTreeSet iteration keeps the summation order fixed, so identical
    // inputs produce bit-identical results.
    let mut interference = 0.0;
    for key in interferers {
        let p = *powers_mw
            .get(key)
            .ok_or_else(|| Error::contract(format!("no transmit power recorded for {key:?}")))?;
        if p < 0.0 {
            return Err(Error::contract(format!(
                "negative transmit power {p} mW on interferer {key:?}"
            )));
        }
        interference += p * g_tx_side * g_rx_main / loss_linear;
    }

    Ok(signal / (noise_mw + interference))
}

/// Linear SNR of an isolated pencil-beam link: both lobes collapse to ideal
/// sector gains `2π/ξ` and no interference remains.
///
/// `distance` is in the path-loss params' unit.
pub fn pencil_snr(
    power_mw: f64,
    tx_beamwidth_rad: f64,
    rx_beamwidth_rad: f64,
    pathloss: &PathLossParams,
    distance: f64,
    noise: &NoiseModel,
) -> Result<f64, Error> {
    if !power_mw.is_finite() || power_mw < 0.0 {
        return Err(Error::contract(format!(
            "transmit power must be non-negative, got {power_mw} mW"
        )));
    }
    for (name, bw) in [("tx", tx_beamwidth_rad), ("rx", rx_beamwidth_rad)] {
        if !bw.is_finite() || bw <= 0.0 || bw >= TAU {
            return Err(Error::domain(format!(
                "{name} beamwidth must lie in (0, 2*pi) rad, got {bw}"
            )));
        }
    }
    let loss_linear = db_to_linear(path_loss_db(pathloss, distance)?);
    let noise_mw = noise.power_mw()?;
    Ok(power_mw * (TAU / tx_beamwidth_rad) * (TAU / rx_beamwidth_rad) / (loss_linear * noise_mw))
}

/// Shannon rate `B·log2(1 + SINR)` in bits/s; SINR is a linear ratio.
pub fn shannon_rate(bandwidth_hz: f64, sinr_linear: f64) -> Result<f64, Error> {
    if !bandwidth_hz.is_finite() || bandwidth_hz <= 0.0 {
        return Err(Error::domain(format!(
            "bandwidth must be positive, got {bandwidth_hz} Hz"
        )));
    }
    if !sinr_linear.is_finite() || sinr_linear < 0.0 {
        return Err(Error::domain(format!(
            "SINR must be a non-negative linear ratio, got {sinr_linear}"
        )));
    }
    Ok(bandwidth_hz * (1.0 + sinr_linear).log2())
}

// ============================================================
// Tests
// ============================================================
