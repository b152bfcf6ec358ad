//! Conflict-aware user grouping: finds transmit beams claimed by several
//! users, admits one user per contested beam, lets losers switch to
//! alternate pair sets, and defers the rest to later cycles with an
//! age-based fairness priority.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::channel::link_sinr;
use crate::error::Error;
use crate::scenario::{MueId, Scenario};
use crate::training::{BeamPair, TrainingReport};

/// One contested transmit sector and the users claiming it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictSet {
    pub tx_sector: usize,
    pub mue_ids: BTreeSet<MueId>,
}

/// A user admitted for simultaneous transmission this cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectedMue {
    pub mue_id: MueId,
    /// The operating pair set: the trained best set, or the alternate it
    /// switched to when its best set lost a contested beam.
    pub operating: Vec<BeamPair>,
    pub switched: bool,
    /// Mean trial SINR of the operating set (linear), the ranking key.
    pub mean_trial_sinr: f64,
}

/// A user pushed to a later cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeferredMue {
    pub mue_id: MueId,
    /// Consecutive cycles deferred so far; higher goes first next cycle.
    pub priority: u32,
}

/// Outcome of one grouping cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct GroupingResult {
    /// Admitted users in final ranking order.
    pub selected: Vec<SelectedMue>,
    /// Deferred users, highest carryover priority first.
    pub deferred: Vec<DeferredMue>,
    /// Transmit beams the admitted sets occupy.
    pub total_beams: usize,
    /// Operating transmit–receive pairs; one per beam in this model.
    pub pair_count: usize,
}

impl GroupingResult {
    pub fn selected_ids(&self) -> Vec<MueId> {
        self.selected.iter().map(|s| s.mue_id).collect()
    }

    pub fn deferred_ids(&self) -> Vec<MueId> {
        self.deferred.iter().map(|d| d.mue_id).collect()
    }
}

// ====================================================================
// Conflict detection
// ====================================================================

/// Find every transmit sector claimed by two or more users' pair sets,
/// in ascending sector order.
pub fn detect_conflicts(best_pairs: &BTreeMap<MueId, Vec<BeamPair>>) -> Vec<ConflictSet> {
    let mut claims: BTreeMap<usize, BTreeSet<MueId>> = BTreeMap::new();
    for (&mue, pairs) in best_pairs {
        for pair in pairs {
            claims.entry(pair.tx_sector).or_default().insert(mue);
        }
    }
    claims
        .into_iter()
        .filter(|(_, mues)| mues.len() >= 2)
        .map(|(tx_sector, mue_ids)| ConflictSet { tx_sector, mue_ids })
        .collect()
}

// ====================================================================
// Trial SINR under the grouping-time equal split
// ====================================================================

/// Equal trial power used for all grouping decisions: the station budget
/// split over every link contending this cycle (the trained best sets).
pub fn grouping_trial_power_mw(scenario: &Scenario, training: &TrainingReport) -> f64 {
    let contending: usize = training.mues.values().map(|m| m.best_pairs.len()).sum();
    scenario.mbs.max_total_power_mw / contending.max(1) as f64
}

/// Trial SINR of each pair in `set` for one user, with the equal split
/// powering `set` itself plus every other user's trained best set.
///
/// Interference leaks through transmit side lobes into the victim's main
/// receive lobe, so only the number of co-active links matters, not
/// their geometry.
pub fn grouping_trial_sinrs(
    scenario: &Scenario,
    training: &TrainingReport,
    mue_id: MueId,
    set: &[BeamPair],
) -> Result<Vec<f64>, Error> {
    let trial_mw = grouping_trial_power_mw(scenario, training);
    let mue = scenario
        .mue(mue_id)
        .ok_or_else(|| Error::contract(format!("unknown user {mue_id}")))?;

    // Co-active links: `set` occupies slots 0..|set|, other users' best
    // sets fill the tail.
    let cross_links: usize = training
        .mues
        .values()
        .filter(|m| m.mue_id != mue_id)
        .map(|m| m.best_pairs.len())
        .sum();
    let total = set.len() + cross_links;
    let powers: BTreeMap<usize, f64> = (0..total).map(|i| (i, trial_mw)).collect();
    let tx_pattern = scenario.tx_pattern();
    let rx_pattern = scenario.rx_pattern(mue);

    set.iter()
        .enumerate()
        .map(|(i, pair)| {
            let path_idx = pair.path.ok_or_else(|| {
                Error::contract(format!(
                    "{mue_id}: undetectable pair ({}, {}) in grouping trial",
                    pair.tx_sector, pair.rx_sector
                ))
            })?;
            let path = &scenario.paths[path_idx];
            let interferers: BTreeSet<usize> = (0..total).filter(|&j| j != i).collect();
            link_sinr(
                i,
                scenario.path_distance_in_unit(path),
                &powers,
                &interferers,
                &tx_pattern,
                &rx_pattern,
                scenario.pathloss(path.kind),
                &scenario.noise,
            )
        })
        .collect()
}

/// Mean linear trial SINR of a pair set (the average link quality used
/// to rank users).
pub fn mean_trial_sinr(
    scenario: &Scenario,
    training: &TrainingReport,
    mue_id: MueId,
    set: &[BeamPair],
) -> Result<f64, Error> {
    if set.is_empty() {
        return Err(Error::contract(format!(
            "{mue_id}: average link quality of an empty pair set"
        )));
    }
    let sinrs = grouping_trial_sinrs(scenario, training, mue_id, set)?;
    Ok(sinrs.iter().sum::<f64>() / sinrs.len() as f64)
}

// ====================================================================
// Grouping cycles
// ====================================================================

/// First grouping cycle: all users start at equal priority.
pub fn group_users(
    scenario: &Scenario,
    training: &TrainingReport,
) -> Result<GroupingResult, Error> {
    group_with_priorities(scenario, training, &BTreeMap::new())
}

/// Subsequent cycle: users deferred last cycle outrank previously served
/// ones at every admission decision, oldest deferral first.
pub fn next_cycle(
    scenario: &Scenario,
    training: &TrainingReport,
    previous: &GroupingResult,
) -> Result<GroupingResult, Error> {
    let carry: BTreeMap<MueId, u32> = previous
        .deferred
        .iter()
        .map(|d| (d.mue_id, d.priority))
        .collect();
    group_with_priorities(scenario, training, &carry)
}

fn group_with_priorities(
    scenario: &Scenario,
    training: &TrainingReport,
    carry: &BTreeMap<MueId, u32>,
) -> Result<GroupingResult, Error> {
    // Users that finished training without a usable pair set take no part
    // in grouping; they neither transmit nor accrue priority.
    let trainable: Vec<MueId> = training
        .mues
        .values()
        .filter(|m| !m.best_pairs.is_empty())
        .map(|m| m.mue_id)
        .collect();
    if trainable.is_empty() {
        return Ok(GroupingResult::default());
    }

    let priority = |id: MueId| carry.get(&id).copied().unwrap_or(0);
    let best = |id: MueId| &training.mues[&id].best_pairs;

    // Mean trial quality of every user's trained best set.
    let mut mean_best: BTreeMap<MueId, f64> = BTreeMap::new();
    for &id in &trainable {
        mean_best.insert(id, mean_trial_sinr(scenario, training, id, best(id))?);
    }

    let best_map: BTreeMap<MueId, Vec<BeamPair>> = trainable
        .iter()
        .map(|&id| (id, best(id).clone()))
        .collect();
    let conflicts = detect_conflicts(&best_map);
    let conflicted: BTreeSet<MueId> = conflicts
        .iter()
        .flat_map(|c| c.mue_ids.iter().copied())
        .collect();
    let conflict_free: Vec<MueId> = trainable
        .iter()
        .copied()
        .filter(|id| !conflicted.contains(id))
        .collect();
    let conflict_free_beams: usize = conflict_free.iter().map(|&id| best(id).len()).sum();

    // Members of the admitted pool in admission order, before the final
    // capacity ranking: (id, operating set, switched).
    let mut pool: Vec<(MueId, Vec<BeamPair>, bool)>;

    if conflicts.is_empty() || conflict_free_beams > scenario.mbs.max_beams {
        // Either nobody conflicts, or the conflict-free users alone
        // overflow the station; rank them and keep the largest prefix
        // that fits. Conflicted users (if any) sit this cycle out.
        pool = conflict_free
            .iter()
            .map(|&id| (id, best(id).clone(), false))
            .collect();
    } else {
        // One winner per contested beam: highest priority, then trial
        // SINR on that beam, then lowest id. A user claiming several
        // contested beams is admitted with its best set only if it won
        // all of them.
        let mut lost: BTreeSet<MueId> = BTreeSet::new();
        for conflict in &conflicts {
            let mut winner: Option<(u32, f64, MueId)> = None;
            for &id in &conflict.mue_ids {
                let pair_on_m = best(id)
                    .iter()
                    .position(|p| p.tx_sector == conflict.tx_sector)
                    .expect("conflict members claim the sector");
                let sinr = grouping_trial_sinrs(scenario, training, id, best(id))?[pair_on_m];
                let contender = (priority(id), sinr, id);
                let beats = match &winner {
                    None => true,
                    Some(best_so_far) => {
                        contender.0 > best_so_far.0
                            || (contender.0 == best_so_far.0
                                && (contender.1 > best_so_far.1
                                    || (contender.1 == best_so_far.1 && contender.2 < best_so_far.2)))
                    }
                };
                if beats {
                    winner = Some(contender);
                }
            }
            let winner = winner.expect("conflict set is nonempty").2;
            for &id in &conflict.mue_ids {
                if id != winner {
                    lost.insert(id);
                }
            }
        }

        pool = conflict_free
            .iter()
            .map(|&id| (id, best(id).clone(), false))
            .collect();
        for &id in &conflicted {
            if !lost.contains(&id) {
                pool.push((id, best(id).clone(), false));
            }
        }

        // Losers try to switch to their best suitable alternate: beams
        // disjoint from every admitted set, every link clearing the
        // admission threshold under the trial split. Stronger losers
        // pick first.
        let mut losers: Vec<MueId> = lost.iter().copied().collect();
        losers.sort_by(|&a, &b| {
            (priority(b), mean_best[&b])
                .partial_cmp(&(priority(a), mean_best[&a]))
                .expect("trial SINR is finite")
                .then_with(|| a.cmp(&b))
        });
        let eta = scenario.snr_threshold_linear();
        for id in losers {
            let taken: BTreeSet<usize> = pool
                .iter()
                .flat_map(|(_, set, _)| set.iter().map(|p| p.tx_sector))
                .collect();
            let candidate = training.mues[&id]
                .candidates
                .iter()
                .find(|cand| {
                    cand.iter().all(|p| !taken.contains(&p.tx_sector))
                        && grouping_trial_sinrs(scenario, training, id, cand)
                            .map(|sinrs| sinrs.iter().all(|&s| s >= eta))
                            .unwrap_or(false)
                })
                .cloned();
            if let Some(cand) = candidate {
                pool.push((id, cand, true));
            }
        }
    }

    // Final capacity ranking over the admitted pool (priority, mean trial
    // quality of the operating set, id), then the largest prefix that
    // fits the station's beam budget.
    let mut ranked: Vec<(u32, f64, MueId, Vec<BeamPair>, bool)> = Vec::new();
    for (id, set, switched) in pool {
        let mean = mean_trial_sinr(scenario, training, id, &set)?;
        ranked.push((priority(id), mean, id, set, switched));
    }
    ranked.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then_with(|| b.1.total_cmp(&a.1))
            .then_with(|| a.2.cmp(&b.2))
    });

    let mut selected = Vec::new();
    let mut beams = 0usize;
    let mut chosen: BTreeSet<MueId> = BTreeSet::new();
    for (_, mean, id, set, switched) in ranked {
        if beams + set.len() > scenario.mbs.max_beams {
            break;
        }
        beams += set.len();
        chosen.insert(id);
        selected.push(SelectedMue {
            mue_id: id,
            operating: set,
            switched,
            mean_trial_sinr: mean,
        });
    }

    let mut deferred: Vec<DeferredMue> = trainable
        .iter()
        .filter(|id| !chosen.contains(id))
        .map(|&id| DeferredMue {
            mue_id: id,
            priority: priority(id) + 1,
        })
        .collect();
    deferred.sort_by(|a, b| b.priority.cmp(&a.priority).then_with(|| a.mue_id.cmp(&b.mue_id)));

    Ok(GroupingResult {
        total_beams: beams,
        pair_count: selected.iter().map(|s| s.operating.len()).sum(),
        selected,
        deferred,
    })
}
