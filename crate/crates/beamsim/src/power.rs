//! Transmit-power division across the admitted operating links and the rate
//! bookkeeping that turns an allocation into a sum throughput.
//!
//! Every policy starts from a grouping result and produces the same output
//! shape, so callers can sweep policies over one scene:
//!
//! * [`apa`] — the budget is split equally over all active links (capped per
//!   beam); while any link misses the SNR threshold the weakest one is
//!   dropped and the split recomputed.
//! * [`ppa_fair`] — each user's leading link is pinned at the per-beam cap
//!   and the leftover budget is shared evenly by the remaining links, so
//!   every user keeps one strong beam.
//! * [`ppa_unfair`] — links are funded at the per-beam cap in descending
//!   quality order until the budget runs out; one trailing link may take the
//!   partial remainder if it still clears the threshold.
//! * [`mu_siso`] — each user is cut back to its single best link before the
//!   equal split, the single-beam-per-user baseline.
//!
//! Policies grade links by their isolated pencil-beam SNR; a finished
//! allocation can then be re-scored under either interference model with
//! [`evaluate_rate`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::channel::{link_sinr, shannon_rate};
use crate::error::Error;
use crate::grouping::{GroupingResult, SelectedMue};
use crate::scenario::{MueId, PhysicalPath, Scenario};
use crate::training::BeamPair;

// ============================================================
// Policy and allocation types
// ============================================================

/// The power-division policies the simulator can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Policy {
    #[serde(rename = "MU-SISO")]
    MuSiso,
    #[serde(rename = "APA")]
    Apa,
    #[serde(rename = "PPA-fair")]
    PpaFair,
    #[serde(rename = "PPA-unfair")]
    PpaUnfair,
}

impl Policy {
    /// Canonical display name, also used in CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            Policy::MuSiso => "MU-SISO",
            Policy::Apa => "APA",
            Policy::PpaFair => "PPA-fair",
            Policy::PpaUnfair => "PPA-unfair",
        }
    }

    /// All policies in canonical order.
    pub fn all() -> [Policy; 4] {
        [Policy::MuSiso, Policy::Apa, Policy::PpaFair, Policy::PpaUnfair]
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "mu-siso" | "musiso" | "siso" => Ok(Policy::MuSiso),
            "apa" => Ok(Policy::Apa),
            "ppa-fair" | "ppafair" => Ok(Policy::PpaFair),
            "ppa-unfair" | "ppaunfair" => Ok(Policy::PpaUnfair),
            other => Err(Error::config(format!(
                "unknown power policy '{other}'; expected one of mu-siso, apa, ppa-fair, ppa-unfair"
            ))),
        }
    }
}

/// Which interference model scores an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InterferenceMode {
    /// Ideal pencil beams: full sector gains, no inter-beam leakage.
    Pencil,
    /// Side-lobe-aware: every other powered link leaks through the transmit
    /// side-lobe floor into the victim's receive main lobe.
    SideLobe,
}

/// Power, SNR, and rate granted to one operating link.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkAllocation {
    pub mue_id: MueId,
    pub pair: BeamPair,
    /// Granted transmit power, mW; zero means the link stays dark.
    pub power_mw: f64,
    /// Isolated pencil-beam SNR at the granted power, linear.
    pub snr: f64,
    /// Shannon rate at that SNR, bits/s.
    pub rate_bps: f64,
}

/// A finished power division over the admitted links.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    pub policy: Policy,
    /// Remaining links in `(user, tx sector, rx sector)` order; pruned links
    /// are removed, unfunded ones kept at zero power.
    pub links: Vec<LinkAllocation>,
    /// Sum of the per-link pencil-beam rates, bits/s.
    pub total_rate_bps: f64,
    /// Links dropped by threshold pruning before the split settled.
    pub pruning_rounds: usize,
}

impl PowerAllocation {
    fn empty(policy: Policy, pruning_rounds: usize) -> Self {
        PowerAllocation { policy, links: Vec::new(), total_rate_bps: 0.0, pruning_rounds }
    }

    /// Links actually granted power.
    pub fn powered(&self) -> impl Iterator<Item = &LinkAllocation> {
        self.links.iter().filter(|l| l.power_mw > 0.0)
    }

    /// Powered links grouped per user.
    pub fn powered_by_mue(&self) -> BTreeMap<MueId, Vec<&LinkAllocation>> {
        let mut map: BTreeMap<MueId, Vec<&LinkAllocation>> = BTreeMap::new();
        for link in self.powered() {
            map.entry(link.mue_id).or_default().push(link);
        }
        map
    }

    /// Total spent budget, mW.
    pub fn total_power_mw(&self) -> f64 {
        self.links.iter().map(|l| l.power_mw).sum()
    }
}

// ============================================================
// Link bookkeeping shared by the policies
// ============================================================

/// One candidate link while a policy is still deciding.
#[derive(Debug, Clone)]
struct Live {
    mue_id: MueId,
    pair: BeamPair,
    /// Pencil SNR per mW of transmit power; SNR scales linearly, so this
    /// fixed figure ranks links independently of the eventual grant.
    snr_per_mw: f64,
}

fn path_index(scenario: &Scenario, pair: &BeamPair) -> Result<usize, Error> {
    if let Some(idx) = pair.path {
        if let Some(p) = scenario.paths.get(idx) {
            if p.mue_id == pair.mue_id
                && p.tx_sector == pair.tx_sector
                && p.rx_sector == pair.rx_sector
            {
                return Ok(idx);
            }
        }
    }
    scenario
        .paths
        .iter()
        .position(|p| {
            p.mue_id == pair.mue_id
                && p.tx_sector == pair.tx_sector
                && p.rx_sector == pair.rx_sector
        })
        .ok_or_else(|| {
            Error::contract(format!(
                "operating pair {} tx{} rx{} does not ride any propagation path",
                pair.mue_id, pair.tx_sector, pair.rx_sector
            ))
        })
}

/// Flattens the admitted operating sets into `(user, tx, rx)`-ordered links.
fn collect_links(scenario: &Scenario, selected: &[SelectedMue]) -> Result<Vec<Live>, Error> {
    let mut live = Vec::new();
    for entry in selected {
        for pair in &entry.operating {
            let path_idx = path_index(scenario, pair)?;
            let snr_per_mw = scenario.pencil_path_snr(&scenario.paths[path_idx], 1.0)?;
            live.push(Live { mue_id: entry.mue_id, pair: *pair, snr_per_mw });
        }
    }
    live.sort_by(|a, b| a.pair.cmp(&b.pair));
    Ok(live)
}

/// Index of the weakest link under the given grants, ties to the lowest
/// `(user, tx, rx)`; `live` is already in that order, so the first strict
/// minimum wins.
fn weakest(live: &[Live], powers: &[f64]) -> usize {
    let mut min_idx = 0;
    let mut min_snr = f64::INFINITY;
    for (i, link) in live.iter().enumerate() {
        let snr = link.snr_per_mw * powers[i];
        if snr < min_snr {
            min_snr = snr;
            min_idx = i;
        }
    }
    min_idx
}

fn finalize(
    scenario: &Scenario,
    policy: Policy,
    live: Vec<Live>,
    powers: Vec<f64>,
    pruning_rounds: usize,
) -> Result<PowerAllocation, Error> {
    let bandwidth = scenario.noise.bandwidth_hz;
    let mut links = Vec::with_capacity(live.len());
    let mut total = 0.0;
    for (link, power) in live.into_iter().zip(powers) {
        let snr = link.snr_per_mw * power;
        let rate = shannon_rate(bandwidth, snr)?;
        total += rate;
        links.push(LinkAllocation {
            mue_id: link.mue_id,
            pair: link.pair,
            power_mw: power,
            snr,
            rate_bps: rate,
        });
    }
    Ok(PowerAllocation { policy, links, total_rate_bps: total, pruning_rounds })
}

// ============================================================
// Equal-split policy
// ============================================================

/// Splits the budget equally over all active links and prunes until every
/// survivor clears the SNR threshold.
///
/// Each round grants `min(per-beam cap, budget / active links)` to every
/// link; if the weakest falls short of the threshold it is dropped (ties to
/// the lowest `(user, tx, rx)`) and the split is recomputed. Users whose
/// links are all pruned drop out. Pruning every link yields an empty
/// allocation rather than an error.
pub fn apa(scenario: &Scenario, grouping: &GroupingResult) -> Result<PowerAllocation, Error> {
    let mut live = collect_links(scenario, &grouping.selected)?;
    let eta = scenario.snr_threshold_linear();
    let p_max = scenario.mbs.max_beam_power_mw;
    let budget = scenario.mbs.max_total_power_mw;
    let mut rounds = 0;

    loop {
        if live.is_empty() {
            return Ok(PowerAllocation::empty(Policy::Apa, rounds));
        }
        let share = p_max.min(budget / live.len() as f64);
        let powers = vec![share; live.len()];
        let idx = weakest(&live, &powers);
        if live[idx].snr_per_mw * share < eta {
            live.remove(idx);
            rounds += 1;
            continue;
        }
        return finalize(scenario, Policy::Apa, live, powers, rounds);
    }
}

// ============================================================
// Priority policies
// ============================================================

/// Grants per-link powers for one fair-priority round: the best link of
/// every user at the cap, the rest sharing the leftover evenly (itself
/// capped per beam).
fn fair_split(live: &[Live], p_max: f64, budget: f64) -> Vec<f64> {
    let mut best: BTreeMap<MueId, usize> = BTreeMap::new();
    for (i, link) in live.iter().enumerate() {
        match best.get(&link.mue_id) {
            Some(&j) if live[j].snr_per_mw >= link.snr_per_mw => {}
            _ => {
                best.insert(link.mue_id, i);
            }
        }
    }
    let users = best.len();
    let n_other = live.len() - users;
    let leftover = budget - users as f64 * p_max;
    let p_other = if n_other > 0 { p_max.min(leftover / n_other as f64) } else { 0.0 };
    let leaders: BTreeSet<usize> = best.into_values().collect();
    (0..live.len()).map(|i| if leaders.contains(&i) { p_max } else { p_other }).collect()
}

/// Pins each user's strongest link at the per-beam cap and splits the
/// leftover budget evenly over the remaining links.
///
/// Requires the budget to cover one capped beam per admitted user; anything
/// short of that is rejected up front. With pruning enabled, links that miss
/// the SNR threshold under the split are dropped weakest-first and the split
/// recomputed (a user whose leading link dies promotes its next best; users
/// with no links left drop out). The per-link grant never exceeds the
/// per-beam cap even when few links share a large leftover.
pub fn ppa_fair(scenario: &Scenario, grouping: &GroupingResult) -> Result<PowerAllocation, Error> {
    let p_max = scenario.mbs.max_beam_power_mw;
    let budget = scenario.mbs.max_total_power_mw;
    let users = grouping.selected.len();
    let need = users as f64 * p_max;
    if budget < need {
        return Err(Error::infeasible(format!(
            "fair priority split needs {need:.4} mW to pin {users} leading links at \
             {p_max:.4} mW each, but the budget is {budget:.4} mW (short {:.4} mW)",
            need - budget
        )));
    }

    let mut live = collect_links(scenario, &grouping.selected)?;
    let eta = scenario.snr_threshold_linear();
    let mut rounds = 0;

    loop {
        if live.is_empty() {
            return Ok(PowerAllocation::empty(Policy::PpaFair, rounds));
        }
        let powers = fair_split(&live, p_max, budget);
        let idx = weakest(&live, &powers);
        if scenario.options.ppa_prune && live[idx].snr_per_mw * powers[idx] < eta {
            live.remove(idx);
            rounds += 1;
            continue;
        }
        return finalize(scenario, Policy::PpaFair, live, powers, rounds);
    }
}

/// Funds links at the per-beam cap in descending quality order until the
/// budget runs out, ignoring which user owns them.
///
/// Quality is the pencil SNR at the cap; ties fund the lowest
/// `(user, tx, rx)` first. After `floor(budget / cap)` full grants the
/// remainder goes to the next link in line only if it still clears the SNR
/// threshold at that partial power. Everything else stays dark at zero
/// power. With pruning enabled, links that cannot reach the threshold even
/// at the full cap are skipped rather than funded.
pub fn ppa_unfair(
    scenario: &Scenario,
    grouping: &GroupingResult,
) -> Result<PowerAllocation, Error> {
    let live = collect_links(scenario, &grouping.selected)?;
    if live.is_empty() {
        return Ok(PowerAllocation::empty(Policy::PpaUnfair, 0));
    }
    let p_max = scenario.mbs.max_beam_power_mw;
    let budget = scenario.mbs.max_total_power_mw;
    let eta = scenario.snr_threshold_linear();

    let mut ranked: Vec<usize> = (0..live.len()).collect();
    ranked.sort_by(|&a, &b| {
        live[b]
            .snr_per_mw
            .total_cmp(&live[a].snr_per_mw)
            .then(live[a].pair.cmp(&live[b].pair))
    });
    let eligible: Vec<usize> = ranked
        .into_iter()
        .filter(|&i| !scenario.options.ppa_prune || live[i].snr_per_mw * p_max >= eta)
        .collect();

    let full_grants = ((budget / p_max).floor() as usize).min(eligible.len());
    let mut powers = vec![0.0; live.len()];
    for &i in &eligible[..full_grants] {
        powers[i] = p_max;
    }
    let residual = budget - full_grants as f64 * p_max;
    if residual > 0.0 {
        if let Some(&next) = eligible.get(full_grants) {
            if live[next].snr_per_mw * residual >= eta {
                powers[next] = residual;
            }
        }
    }
    finalize(scenario, Policy::PpaUnfair, live, powers, 0)
}

// ============================================================
// Single-beam baseline
// ============================================================

/// Cuts every admitted user's operating set down to its single best link
/// (highest pencil SNR at the per-beam cap, ties to the lowest `(tx, rx)`).
pub fn restrict_to_siso(
    scenario: &Scenario,
    grouping: &GroupingResult,
) -> Result<GroupingResult, Error> {
    let mut reduced = grouping.clone();
    for entry in &mut reduced.selected {
        let mut best: Option<(f64, BeamPair)> = None;
        for pair in &entry.operating {
            let idx = path_index(scenario, pair)?;
            let quality = scenario.pencil_path_snr(&scenario.paths[idx], 1.0)?;
            let better = match best {
                None => true,
                Some((q, p)) => quality > q || (quality == q && *pair < p),
            };
            if better {
                best = Some((quality, *pair));
            }
        }
        entry.operating = best.map(|(_, p)| vec![p]).unwrap_or_default();
    }
    reduced.pair_count = reduced.selected.iter().map(|s| s.operating.len()).sum();
    reduced.total_beams = reduced.pair_count;
    Ok(reduced)
}

/// The single-beam baseline: each user keeps only its best link, then the
/// equal split of [`apa`] runs over that reduced set.
pub fn mu_siso(scenario: &Scenario, grouping: &GroupingResult) -> Result<PowerAllocation, Error> {
    let reduced = restrict_to_siso(scenario, grouping)?;
    let mut allocation = apa(scenario, &reduced)?;
    allocation.policy = Policy::MuSiso;
    Ok(allocation)
}

/// Runs the named policy over the grouped users.
pub fn allocate(
    scenario: &Scenario,
    grouping: &GroupingResult,
    policy: Policy,
) -> Result<PowerAllocation, Error> {
    match policy {
        Policy::MuSiso => mu_siso(scenario, grouping),
        Policy::Apa => apa(scenario, grouping),
        Policy::PpaFair => ppa_fair(scenario, grouping),
        Policy::PpaUnfair => ppa_unfair(scenario, grouping),
    }
}

// ============================================================
// Rate evaluation
// ============================================================

/// Re-scores a finished allocation under the chosen interference model and
/// returns the sum rate in bits/s; the allocation itself is not modified.
///
/// `Pencil` recomputes each link's isolated full-sector-gain SNR.
/// `SideLobe` scores each powered link against the side-lobe leakage of
/// every other powered link. With a side-lobe gain of zero the two models
/// agree; for any positive gain `SideLobe` can only be lower.
pub fn evaluate_rate(
    scenario: &Scenario,
    allocation: &PowerAllocation,
    mode: InterferenceMode,
) -> Result<f64, Error> {
    let bandwidth = scenario.noise.bandwidth_hz;
    let mut total = 0.0;
    match mode {
        InterferenceMode::Pencil => {
            for link in &allocation.links {
                let idx = path_index(scenario, &link.pair)?;
                let snr = scenario.pencil_path_snr(&scenario.paths[idx], link.power_mw)?;
                total += shannon_rate(bandwidth, snr)?;
            }
        }
        InterferenceMode::SideLobe => {
            let powers: BTreeMap<usize, f64> =
                allocation.links.iter().enumerate().map(|(i, l)| (i, l.power_mw)).collect();
            let everyone: BTreeSet<usize> = powers.keys().copied().collect();
            let tx_pattern = scenario.tx_pattern();
            for (i, link) in allocation.links.iter().enumerate() {
                if link.power_mw <= 0.0 {
                    continue;
                }
                let path: &PhysicalPath = &scenario.paths[path_index(scenario, &link.pair)?];
                let mue = scenario.mue(link.mue_id).ok_or_else(|| {
                    Error::contract(format!("allocation references unknown user {}", link.mue_id))
                })?;
                let mut interferers = everyone.clone();
                interferers.remove(&i);
                let sinr = link_sinr(
                    i,
                    scenario.path_distance_in_unit(path),
                    &powers,
                    &interferers,
                    &tx_pattern,
                    &scenario.rx_pattern(mue),
                    scenario.pathloss(path.kind),
                    &scenario.noise,
                )?;
                total += shannon_rate(bandwidth, sinr)?;
            }
        }
    }
    Ok(total)
}

// ============================================================
// Tests
// ============================================================
