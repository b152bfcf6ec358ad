//! Three-phase beam training: a simultaneous multi-beam transmit sweep, a
//! per-user receive sweep, and pairwise beam combining that turns detected
//! sectors into jointly feasible transmit–receive beam pair sets.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use serde::Serialize;

use crate::channel::{db_to_linear, directivity_gain, link_sinr, Lobe};
use crate::error::Error;
use crate::scenario::{MueId, MueSpec, Scenario};

/// One transmit–receive beam pair of a user.
///
/// `path` indexes the physical path the pair rides on; a pair with no
/// path is undetectable and never enters a selected set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct BeamPair {
    pub mue_id: MueId,
    pub tx_sector: usize,
    pub rx_sector: usize,
    pub path: Option<usize>,
}

/// Outcome of the transmit sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TxSweep {
    /// Rounds needed to cover every transmit sector, `ceil(S / n_tx)`.
    pub scan_count: usize,
    /// Per-user transmit sectors whose sweep SNR cleared the detection
    /// threshold.
    pub detected: BTreeMap<MueId, BTreeSet<usize>>,
}

/// Outcome of the receive sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RxSweep {
    /// Rounds until the slowest user finishes, `max_u ceil(S_u / n_rx^u)`.
    pub multi_user_scan_count: usize,
    /// Rounds each user needs on its own.
    pub per_mue_scan_count: BTreeMap<MueId, usize>,
    /// Per-user receive sectors whose sweep SNR cleared the detection
    /// threshold.
    pub detected: BTreeMap<MueId, BTreeSet<usize>>,
}

/// Per-user training outcome: detected sectors, the selected operating
/// pair set, and ranked alternate sets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MueTraining {
    pub mue_id: MueId,
    pub best_tx: BTreeSet<usize>,
    pub best_rx: BTreeSet<usize>,
    /// Selected pair set; every member clears the joint admission check.
    pub best_pairs: Vec<BeamPair>,
    /// Alternate feasible pair sets, strongest aggregate first.
    pub candidates: Vec<Vec<BeamPair>>,
}

/// Training outcome for the whole cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingReport {
    pub tx_scan_count: usize,
    pub rx_scan_count: usize,
    pub mues: BTreeMap<MueId, MueTraining>,
}

impl TrainingReport {
    /// Users that came out of training with no usable pair set.
    pub fn untrainable(&self) -> Vec<MueId> {
        self.mues
            .values()
            .filter(|m| m.best_pairs.is_empty())
            .map(|m| m.mue_id)
            .collect()
    }
}

fn ceil_div(a: usize, b: usize) -> usize {
    (a + b - 1) / b
}

/// Partition `sector_count` sectors into consecutive sweep rounds of
/// `per_round` sectors each (the last round may be short).
pub fn sweep_rounds(sector_count: usize, per_round: usize) -> Vec<Range<usize>> {
    (0..ceil_div(sector_count, per_round))
        .map(|r| r * per_round..((r + 1) * per_round).min(sector_count))
        .collect()
}

// ====================================================================
// Phase i: transmit sweep
// ====================================================================

/// Sweep all transmit sectors with `n_tx` simultaneous beams while every
/// user listens in quasi-omni mode; report the rounds used and, per user,
/// the transmit sectors detected above the detection threshold.
pub fn transmit_training(scenario: &Scenario, n_tx: usize) -> Result<TxSweep, Error> {
    let cap = scenario.mbs.max_beams.min(scenario.mbs.sector_count);
    if n_tx < 1 || n_tx > cap {
        return Err(Error::contract(format!(
            "simultaneous transmit beams must lie in [1, {cap}], got {n_tx}"
        )));
    }

    // The n_tx parallel beams share the station budget equally, still
    // honoring the per-beam cap.
    let trial_mw = scenario
        .mbs
        .max_beam_power_mw
        .min(scenario.mbs.max_total_power_mw / n_tx as f64);
    let gain = directivity_gain(&scenario.tx_pattern(), Lobe::Main)?;
    let floor = db_to_linear(scenario.detection_threshold_db());

    let mut detected: BTreeMap<MueId, BTreeSet<usize>> =
        scenario.mues.iter().map(|m| (m.id, BTreeSet::new())).collect();
    for path in &scenario.paths {
        let snr = scenario.sweep_path_snr(path, trial_mw, gain)?;
        if snr >= floor {
            detected
                .get_mut(&path.mue_id)
                .expect("validated path references a known user")
                .insert(path.tx_sector);
        }
    }

    Ok(TxSweep {
        scan_count: ceil_div(scenario.mbs.sector_count, n_tx),
        detected,
    })
}

// ====================================================================
// Phase ii: receive sweep
// ====================================================================

/// Reverse the roles: the station probes in quasi-omni mode while each
/// user sweeps its receive sectors with its own number of simultaneous
/// beams. The multi-user count is gated by the slowest user.
pub fn receive_training(scenario: &Scenario) -> Result<RxSweep, Error> {
    for mue in &scenario.mues {
        let cap = mue.max_beams.min(mue.sector_count);
        if mue.sim_rx_beams < 1 || mue.sim_rx_beams > cap {
            return Err(Error::contract(format!(
                "{}: simultaneous receive beams must lie in [1, {cap}], got {}",
                mue.id, mue.sim_rx_beams
            )));
        }
    }

    let trial_mw = scenario.mbs.max_total_power_mw;
    let floor = db_to_linear(scenario.detection_threshold_db());

    let mut detected: BTreeMap<MueId, BTreeSet<usize>> =
        scenario.mues.iter().map(|m| (m.id, BTreeSet::new())).collect();
    for path in &scenario.paths {
        let mue = scenario
            .mue(path.mue_id)
            .expect("validated path references a known user");
        let gain = directivity_gain(&scenario.rx_pattern(mue), Lobe::Main)?;
        let snr = scenario.sweep_path_snr(path, trial_mw, gain)?;
        if snr >= floor {
            detected
                .get_mut(&path.mue_id)
                .expect("entry created above")
                .insert(path.rx_sector);
        }
    }

    let per_mue_scan_count: BTreeMap<MueId, usize> = scenario
        .mues
        .iter()
        .map(|m| (m.id, ceil_div(m.sector_count, m.sim_rx_beams)))
        .collect();
    let multi_user_scan_count = per_mue_scan_count.values().copied().max().unwrap_or(0);

    Ok(RxSweep {
        multi_user_scan_count,
        per_mue_scan_count,
        detected,
    })
}

// ====================================================================
// Phase iii: beam combining
// ====================================================================

/// Equal per-link trial power used by the joint admission check: the
/// station budget split over `k` links, honoring the per-beam cap.
pub fn joint_trial_power_mw(scenario: &Scenario, k: usize) -> f64 {
    scenario
        .mbs
        .max_beam_power_mw
        .min(scenario.mbs.max_total_power_mw / k.max(1) as f64)
}

/// Per-pair SINR when the given pairs of one user run simultaneously at
/// equal trial power, with every other pair in the set leaking through
/// its side lobes. Order matches the input.
pub fn joint_trial_sinrs(scenario: &Scenario, pairs: &[BeamPair]) -> Result<Vec<f64>, Error> {
    let trial_mw = joint_trial_power_mw(scenario, pairs.len());
    let powers: BTreeMap<usize, f64> = (0..pairs.len()).map(|i| (i, trial_mw)).collect();
    let tx_pattern = scenario.tx_pattern();

    pairs
        .iter()
        .enumerate()
        .map(|(i, pair)| {
            let path_idx = pair.path.ok_or_else(|| {
                Error::contract(format!(
                    "{}: undetectable pair ({}, {}) in joint admission check",
                    pair.mue_id, pair.tx_sector, pair.rx_sector
                ))
            })?;
            let path = &scenario.paths[path_idx];
            let mue = scenario
                .mue(pair.mue_id)
                .ok_or_else(|| Error::contract(format!("unknown user {}", pair.mue_id)))?;
            let interferers: BTreeSet<usize> =
                (0..pairs.len()).filter(|&j| j != i).collect();
            link_sinr(
                i,
                scenario.path_distance_in_unit(path),
                &powers,
                &interferers,
                &tx_pattern,
                &scenario.rx_pattern(mue),
                scenario.pathloss(path.kind),
                &scenario.noise,
            )
        })
        .collect()
}

/// True when every pair in the set clears the admission threshold under
/// the joint trial.
fn jointly_feasible(scenario: &Scenario, pairs: &[BeamPair], eta_linear: f64) -> Result<bool, Error> {
    Ok(joint_trial_sinrs(scenario, pairs)?
        .iter()
        .all(|&s| s >= eta_linear))
}

/// Pairwise qualification: all detected (tx, rx) combinations that ride a
/// physical path and clear the admission threshold under main-lobe-only
/// SNR at the per-beam power cap, strongest first (ties by lowest sector
/// indices).
fn qualifying_pairs(
    scenario: &Scenario,
    mue: &MueSpec,
    tx_set: &BTreeSet<usize>,
    rx_set: &BTreeSet<usize>,
) -> Result<Vec<(BeamPair, f64)>, Error> {
    let eta = scenario.snr_threshold_linear();
    let mut found = Vec::new();
    for (idx, path) in scenario.paths_of(mue.id) {
        if !tx_set.contains(&path.tx_sector) || !rx_set.contains(&path.rx_sector) {
            continue;
        }
        let snr = scenario.pencil_path_snr(path, scenario.mbs.max_beam_power_mw)?;
        if snr >= eta {
            found.push((
                BeamPair {
                    mue_id: mue.id,
                    tx_sector: path.tx_sector,
                    rx_sector: path.rx_sector,
                    path: Some(idx),
                },
                snr,
            ));
        }
    }
    found.sort_by(|(pa, sa), (pb, sb)| {
        sb.total_cmp(sa)
            .then_with(|| (pa.tx_sector, pa.rx_sector).cmp(&(pb.tx_sector, pb.rx_sector)))
    });
    Ok(found)
}

/// Alternate-set enumeration is capped at this many strongest pairs; joint
/// feasibility only shrinks with set size, so weaker tails cannot form
/// sets that outrank the enumerated ones.
const MAX_ENUMERATED_PAIRS: usize = 16;

/// Select one user's operating pair set and its ranked alternates from
/// the sectors its sweeps detected.
///
/// The operating set grows greedily through the qualifying pairs in
/// descending strength, keeping a pair only if the whole tentative set
/// stays jointly feasible, up to the user's beam budget. Alternates are
/// every other jointly feasible subset of the qualifying pairs, ranked by
/// aggregate SINR. A user with no qualifying pair gets an empty set.
pub fn beam_combining(
    scenario: &Scenario,
    mue_id: MueId,
    tx_set: &BTreeSet<usize>,
    rx_set: &BTreeSet<usize>,
) -> Result<(Vec<BeamPair>, Vec<Vec<BeamPair>>), Error> {
    let mue = scenario
        .mue(mue_id)
        .ok_or_else(|| Error::contract(format!("unknown user {mue_id}")))?;
    let eta = scenario.snr_threshold_linear();
    let ranked = qualifying_pairs(scenario, mue, tx_set, rx_set)?;

    let mut best: Vec<BeamPair> = Vec::new();
    for (pair, _) in &ranked {
        if best.len() == mue.max_beams {
            break;
        }
        let mut tentative = best.clone();
        tentative.push(*pair);
        if jointly_feasible(scenario, &tentative, eta)? {
            best = tentative;
        }
    }
    best.sort();
    let best_key: BTreeSet<BeamPair> = best.iter().copied().collect();

    let pool: Vec<BeamPair> = ranked
        .iter()
        .take(MAX_ENUMERATED_PAIRS)
        .map(|(p, _)| *p)
        .collect();
    let mut alternates: Vec<(f64, Vec<BeamPair>)> = Vec::new();
    for mask in 1u32..(1 << pool.len()) {
        if mask.count_ones() as usize > mue.max_beams {
            continue;
        }
        let subset: Vec<BeamPair> = pool
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, p)| *p)
            .collect();
        if subset.iter().copied().collect::<BTreeSet<_>>() == best_key {
            continue;
        }
        let sinrs = joint_trial_sinrs(scenario, &subset)?;
        if sinrs.iter().all(|&s| s >= eta) {
            let mut sorted = subset;
            sorted.sort();
            alternates.push((sinrs.iter().sum(), sorted));
        }
    }
    alternates.sort_by(|(sa, pa), (sb, pb)| sb.total_cmp(sa).then_with(|| pa.cmp(pb)));

    Ok((best, alternates.into_iter().map(|(_, p)| p).collect()))
}

/// Run all three phases for every user in the cell.
pub fn train_all(scenario: &Scenario, n_tx: usize) -> Result<TrainingReport, Error> {
    let tx = transmit_training(scenario, n_tx)?;
    let rx = receive_training(scenario)?;

    let mut mues = BTreeMap::new();
    for mue in &scenario.mues {
        let best_tx = tx.detected[&mue.id].clone();
        let best_rx = rx.detected[&mue.id].clone();
        let (best_pairs, candidates) = beam_combining(scenario, mue.id, &best_tx, &best_rx)?;
        mues.insert(
            mue.id,
            MueTraining {
                mue_id: mue.id,
                best_tx,
                best_rx,
                best_pairs,
                candidates,
            },
        );
    }

    Ok(TrainingReport {
        tx_scan_count: tx.scan_count,
        rx_scan_count: rx.multi_user_scan_count,
        mues,
    })
}
