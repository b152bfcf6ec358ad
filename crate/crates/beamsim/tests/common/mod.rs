//! Shared fixtures for the integration tests: the reference cell, the
//! canonical three-user scene, a seeded generator of small randomized
//! cells, and a deliberately naive re-derivation of the grouping cycle
//! used to cross-check the production implementation.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use beamsim::channel::link_sinr;
use beamsim::config::reference_scenario;
use beamsim::grouping::GroupingResult;
use beamsim::scenario::{
    generate_random_scenario, sector_count_for_beamwidth, MueId, MueSpec, PathKind, PhysicalPath,
    Scenario,
};
use beamsim::training::{BeamPair, TrainingReport};
use rand::rngs::StdRng;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};

// ====================================================================
// Fixtures
// ====================================================================

/// The built-in reference cell: station, channel constants, and one
/// prototype user, with no physical paths yet.
pub fn base_scenario() -> Scenario {
    reference_scenario().expect("reference configuration is valid")
}

/// The scene rate experiments run on by default: three users with one
/// direct and two reflected paths each, drawn from the reference cell
/// with its stored seed, and sweep detection floored so that admission
/// decisions rest on the threshold alone.
pub fn canonical_scene() -> Scenario {
    let mut template = base_scenario();
    template.options.detection_threshold_db = Some(-1000.0);
    generate_random_scenario(&template, 3, 3, template.rng_seed)
        .expect("reference scene generates cleanly")
}

/// Relative-error assertion for positive quantities.
pub fn assert_close(actual: f64, expected: f64, rel: f64, what: &str) {
    let err = (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
    assert!(
        err <= rel,
        "{what}: got {actual}, expected {expected} (relative error {err:.3e} > {rel:.1e})"
    );
}

// ====================================================================
// Randomized small cells
// ====================================================================

/// One randomized test cell plus the sweep width to train it with.
pub struct Instance {
    pub scenario: Scenario,
    pub n_tx: usize,
}

/// Seeded small cell: up to six users on an eight-sector station, one to
/// three paths per user (at most one direct), per-user beam budgets of
/// one or two, and an admission threshold drawn low enough that link
/// survival genuinely varies from instance to instance.
///
/// Half the instances reuse fixed path lengths so distinct links tie
/// exactly in quality and the tie-break rules get exercised; the rest
/// draw continuous lengths.
pub fn small_instance(seed: u64) -> Instance {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut scn = base_scenario();

    scn.mbs.tx_beamwidth_rad = 45f64.to_radians();
    scn.mbs.sector_count = sector_count_for_beamwidth(scn.mbs.tx_beamwidth_rad);
    scn.mbs.max_beams = rng.gen_range(1..=8);
    scn.sidelobe_gain = if rng.gen_bool(0.5) { 0.01 } else { 0.1 };
    scn.options.detection_threshold_db = Some(-1000.0);

    let tied = rng.gen_bool(0.5);
    scn.snr_threshold_db = if tied {
        rng.gen_range(0..=10) as f64
    } else {
        rng.gen_range(0.0..12.0)
    };

    let prototype = scn.mues[0].clone();
    let n_mues = rng.gen_range(1..=6);
    scn.mues = (1..=n_mues)
        .map(|i| {
            let max_beams = rng.gen_range(1..=2usize.min(scn.mbs.max_beams));
            MueSpec {
                id: MueId(i as u32),
                max_beams,
                sim_rx_beams: rng.gen_range(1..=max_beams),
                ..prototype.clone()
            }
        })
        .collect();

    scn.paths = Vec::new();
    for mue in scn.mues.clone() {
        let n_paths = rng.gen_range(1..=3);
        let tx = sample(&mut rng, scn.mbs.sector_count, n_paths);
        let rx = sample(&mut rng, prototype.sector_count, n_paths);
        let direct_first = rng.gen_bool(0.7);
        for (k, (tx_sector, rx_sector)) in tx.iter().zip(rx.iter()).enumerate() {
            let direct = k == 0 && direct_first;
            let kind = if direct { PathKind::Los } else { PathKind::Nlos };
            let distance_m = match (direct, tied) {
                (true, true) => 7.0,
                (false, true) => 10.0,
                (true, false) => rng.gen_range(4.0..10.0),
                (false, false) => rng.gen_range(7.0..14.0),
            };
            scn.paths.push(PhysicalPath {
                mue_id: mue.id,
                tx_sector,
                rx_sector,
                kind,
                distance_m,
            });
        }
    }

    scn.validate().expect("generated instance is structurally valid");
    let n_tx = rng.gen_range(1..=scn.mbs.max_beams.min(scn.mbs.sector_count));
    Instance { scenario: scn, n_tx }
}

// ====================================================================
// Step-by-step grouping executor
// ====================================================================

/// Outcome of the naive executor, in the production result's shape.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleGroup {
    /// Admitted users in final rank order: id, operating set, whether the
    /// set is a switched alternate, and its mean trial quality.
    pub selected: Vec<(MueId, Vec<BeamPair>, bool, f64)>,
    /// Deferred users with their next-cycle priority.
    pub deferred: Vec<(MueId, u32)>,
    pub total_beams: usize,
    pub pair_count: usize,
}

/// Equal split of the station budget over every trained best-set link,
/// re-derived from scratch.
fn oracle_trial_power(scn: &Scenario, training: &TrainingReport) -> f64 {
    let contending: usize = training.mues.values().map(|m| m.best_pairs.len()).sum();
    scn.mbs.max_total_power_mw / contending.max(1) as f64
}

/// Trial quality of each link in `set`, co-active with every other
/// user's trained best set, rebuilt from the channel primitives: the set
/// occupies the leading link slots and other users' best links fill the
/// tail, all at the equal trial split.
fn oracle_trial_sinrs(
    scn: &Scenario,
    training: &TrainingReport,
    id: MueId,
    set: &[BeamPair],
) -> Vec<f64> {
    let trial_mw = oracle_trial_power(scn, training);
    let cross: usize = training
        .mues
        .values()
        .filter(|m| m.mue_id != id)
        .map(|m| m.best_pairs.len())
        .sum();
    let total = set.len() + cross;
    let powers: BTreeMap<usize, f64> = (0..total).map(|slot| (slot, trial_mw)).collect();
    let mue = scn.mue(id).expect("set belongs to a known user");
    let tx_pattern = scn.tx_pattern();
    let rx_pattern = scn.rx_pattern(mue);

    set.iter()
        .enumerate()
        .map(|(slot, pair)| {
            let path = &scn.paths[pair.path.expect("trained pairs ride a physical path")];
            let interferers: BTreeSet<usize> = (0..total).filter(|&j| j != slot).collect();
            link_sinr(
                slot,
                scn.path_distance_in_unit(path),
                &powers,
                &interferers,
                &tx_pattern,
                &rx_pattern,
                scn.pathloss(path.kind),
                &scn.noise,
            )
            .expect("trial link quality evaluates")
        })
        .collect()
}

fn oracle_mean(scn: &Scenario, training: &TrainingReport, id: MueId, set: &[BeamPair]) -> f64 {
    let sinrs = oracle_trial_sinrs(scn, training, id, set);
    assert!(!sinrs.is_empty(), "{id}: mean quality of an empty set");
    sinrs.iter().sum::<f64>() / sinrs.len() as f64
}

/// Literal, quadratic re-derivation of one grouping cycle. Every step
/// rescans from first principles with no shared code beyond the channel
/// primitives, so it can arbitrate the optimized implementation:
///
/// 1. Users whose training produced no usable pair sit out.
/// 2. A transmit sector claimed by two or more best sets is contested;
///    each contested sector goes to the claimant with the highest
///    priority, then the best trial quality on that sector, then the
///    lowest id. Losing any claimed sector costs the user its best set.
/// 3. If nobody conflicts, or the conflict-free users alone already
///    overflow the station, conflicted users sit the cycle out and only
///    conflict-free users are ranked.
/// 4. Otherwise losers (strongest first) try their ranked alternates,
///    accepting the first whose sectors are untaken and whose links all
///    clear the admission threshold under the trial split.
/// 5. Admitted sets are ranked by priority, then mean trial quality,
///    then id, and the largest prefix that fits the beam budget is
///    served; everyone else is deferred with raised priority.
pub fn oracle_group(
    scn: &Scenario,
    training: &TrainingReport,
    carry: &BTreeMap<MueId, u32>,
) -> OracleGroup {
    let trainable: Vec<MueId> = training
        .mues
        .values()
        .filter(|m| !m.best_pairs.is_empty())
        .map(|m| m.mue_id)
        .collect();
    if trainable.is_empty() {
        return OracleGroup {
            selected: Vec::new(),
            deferred: Vec::new(),
            total_beams: 0,
            pair_count: 0,
        };
    }

    let priority = |id: MueId| carry.get(&id).copied().unwrap_or(0);
    let best = |id: MueId| training.mues[&id].best_pairs.clone();

    // Contested sectors: claimed by two or more best sets.
    let mut claims: BTreeMap<usize, BTreeSet<MueId>> = BTreeMap::new();
    for &id in &trainable {
        for pair in best(id) {
            claims.entry(pair.tx_sector).or_default().insert(id);
        }
    }
    let conflicts: Vec<(usize, BTreeSet<MueId>)> = claims
        .into_iter()
        .filter(|(_, ids)| ids.len() >= 2)
        .collect();
    let conflicted: BTreeSet<MueId> = conflicts
        .iter()
        .flat_map(|(_, ids)| ids.iter().copied())
        .collect();
    let conflict_free: Vec<MueId> = trainable
        .iter()
        .copied()
        .filter(|id| !conflicted.contains(id))
        .collect();
    let free_beams: usize = conflict_free.iter().map(|&id| best(id).len()).sum();

    // Admission pool: (id, operating set, switched), before final ranking.
    let mut pool: Vec<(MueId, Vec<BeamPair>, bool)> = conflict_free
        .iter()
        .map(|&id| (id, best(id), false))
        .collect();

    if !conflicts.is_empty() && free_beams <= scn.mbs.max_beams {
        let mut lost: BTreeSet<MueId> = BTreeSet::new();
        for (sector, ids) in &conflicts {
            let mut winner: Option<(u32, f64, MueId)> = None;
            for &id in ids {
                let set = best(id);
                let on_sector = set
                    .iter()
                    .position(|p| p.tx_sector == *sector)
                    .expect("claimants hold a pair on the contested sector");
                let quality = oracle_trial_sinrs(scn, training, id, &set)[on_sector];
                let better = match winner {
                    None => true,
                    Some((wp, wq, wid)) => {
                        priority(id) > wp
                            || (priority(id) == wp
                                && (quality > wq || (quality == wq && id < wid)))
                    }
                };
                if better {
                    winner = Some((priority(id), quality, id));
                }
            }
            let keeper = winner.expect("contested sector has claimants").2;
            lost.extend(ids.iter().copied().filter(|&id| id != keeper));
        }

        for &id in &conflicted {
            if !lost.contains(&id) {
                pool.push((id, best(id), false));
            }
        }

        let mut losers: Vec<MueId> = lost.into_iter().collect();
        losers.sort_by(|&a, &b| {
            (priority(b), oracle_mean(scn, training, b, &best(b)))
                .partial_cmp(&(priority(a), oracle_mean(scn, training, a, &best(a))))
                .expect("trial quality is finite")
                .then_with(|| a.cmp(&b))
        });
        let eta = scn.snr_threshold_linear();
        for id in losers {
            let taken: BTreeSet<usize> = pool
                .iter()
                .flat_map(|(_, set, _)| set.iter().map(|p| p.tx_sector))
                .collect();
            let switch = training.mues[&id].candidates.iter().find(|cand| {
                cand.iter().all(|p| !taken.contains(&p.tx_sector))
                    && oracle_trial_sinrs(scn, training, id, cand)
                        .iter()
                        .all(|&s| s >= eta)
            });
            if let Some(cand) = switch {
                pool.push((id, cand.clone(), true));
            }
        }
    }

    // Final ranking and the largest prefix that fits the beam budget.
    let mut ranked: Vec<(u32, f64, MueId, Vec<BeamPair>, bool)> = pool
        .into_iter()
        .map(|(id, set, switched)| {
            let mean = oracle_mean(scn, training, id, &set);
            (priority(id), mean, id, set, switched)
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then_with(|| b.1.total_cmp(&a.1))
            .then_with(|| a.2.cmp(&b.2))
    });

    let mut selected = Vec::new();
    let mut beams = 0usize;
    let mut chosen: BTreeSet<MueId> = BTreeSet::new();
    for (_, mean, id, set, switched) in ranked {
        if beams + set.len() > scn.mbs.max_beams {
            break;
        }
        beams += set.len();
        chosen.insert(id);
        selected.push((id, set, switched, mean));
    }

    let mut deferred: Vec<(MueId, u32)> = trainable
        .iter()
        .filter(|id| !chosen.contains(id))
        .map(|&id| (id, priority(id) + 1))
        .collect();
    deferred.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    OracleGroup {
        pair_count: selected.iter().map(|(_, set, _, _)| set.len()).sum(),
        total_beams: beams,
        selected,
        deferred,
    }
}

/// Field-by-field equality between the production grouping and the
/// naive executor, with a seed label for reproduction.
pub fn assert_grouping_matches(production: &GroupingResult, oracle: &OracleGroup, label: &str) {
    assert_eq!(
        production.selected.len(),
        oracle.selected.len(),
        "{label}: admitted user count diverged"
    );
    for (got, want) in production.selected.iter().zip(&oracle.selected) {
        assert_eq!(got.mue_id, want.0, "{label}: admitted order diverged");
        assert_eq!(got.operating, want.1, "{label}: {} operating set diverged", want.0);
        assert_eq!(got.switched, want.2, "{label}: {} switch flag diverged", want.0);
        assert!(
            got.mean_trial_sinr == want.3,
            "{label}: {} mean trial quality diverged ({} vs {})",
            want.0,
            got.mean_trial_sinr,
            want.3
        );
    }
    let deferred: Vec<(MueId, u32)> = production
        .deferred
        .iter()
        .map(|d| (d.mue_id, d.priority))
        .collect();
    assert_eq!(deferred, oracle.deferred, "{label}: deferral diverged");
    assert_eq!(production.total_beams, oracle.total_beams, "{label}: beam total diverged");
    assert_eq!(production.pair_count, oracle.pair_count, "{label}: pair count diverged");
}
