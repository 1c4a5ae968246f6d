//! Integer-time discrete-event simulation of blocks: random and adversarial
//! traces that validate every analytic bound, reordering experiments, and
//! scripted worst-case traces.
//!
//! All event times are signed 64-bit picoseconds. One simulation run is
//! single-threaded and fully determined by its seed; independent runs can be
//! fanned out across threads and merged by trial index.

pub mod experiments;
pub mod tightness;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{Block, BoundsError, BoundsResult, Element};
use crate::clocks::{sec_to_ps, ClockError, ClockTrajectory, TrajectoryMode};
use crate::dampers::{
    quantize, DamperError, DamperSpec, DamperVariant, HeaderErrorBudget, HeaderErrorMode, Rounding,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("generated trace would violate a declared bound: {0}")]
    NonConformingTrace(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("scripted trace infeasible: {0}")]
    InfeasibleTarget(String),
    #[error(transparent)]
    Clock(#[from] ClockError),
    #[error(transparent)]
    Damper(#[from] DamperError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

/// Packet-release pattern at the block entrance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceModel {
    /// Fixed interspacing.
    Periodic { spacing_ps: i64 },
    /// Fixed interspacing plus a uniform jitter in `[0, jitter_ps]`.
    Jittered { spacing_ps: i64, jitter_ps: i64 },
}

/// How each compensated element draws its internal delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelayPolicy {
    /// Uniform in `[lo_frac * delta, delta]` of the element's bound.
    Uniform { lo_frac: f64 },
    /// Every packet takes exactly the bound.
    PinnedMax,
    /// Explicit per-element, per-packet delays in picoseconds.
    Scripted(Vec<Vec<i64>>),
}

impl Default for DelayPolicy {
    fn default() -> Self {
        DelayPolicy::Uniform { lo_frac: 0.2 }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub block: Block,
    pub source: SourceModel,
    pub packets: usize,
    pub seed: u64,
    pub jcs_policy: DelayPolicy,
    pub clock_mode: TrajectoryMode,
    pub header_error_mode: HeaderErrorMode,
}

impl SimConfig {
    pub fn new(block: Block, packets: usize, seed: u64) -> SimConfig {
        SimConfig {
            block,
            source: SourceModel::Periodic {
                spacing_ps: 2_000_000_000, // 2 ms keeps consecutive packets independent
            },
            packets,
            seed,
            jcs_policy: DelayPolicy::default(),
            clock_mode: TrajectoryMode::Random,
            header_error_mode: HeaderErrorMode::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketOutcome {
    pub id: u64,
    pub entry_tai_ps: i64,
    pub exit_tai_ps: i64,
    pub delay_ps: i64,
    pub reordered: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    pub packets: Vec<PacketOutcome>,
    pub min_delay_ps: i64,
    pub max_delay_ps: i64,
    /// Packets overtaken between block entry and exit.
    pub reorder_count: usize,
    /// Inversions introduced by the damper itself, relative to its own
    /// arrival order; always zero for the order-preserving variants.
    pub damper_added_reorders: usize,
}

impl SimReport {
    fn from_outcomes(mut packets: Vec<PacketOutcome>, damper_added_reorders: usize) -> SimReport {
        packets.sort_by_key(|p| p.id);
        let min = packets.iter().map(|p| p.delay_ps).min().unwrap_or(0);
        let max = packets.iter().map(|p| p.delay_ps).max().unwrap_or(0);
        let reorders = packets.iter().filter(|p| p.reordered).count();
        SimReport {
            packets,
            min_delay_ps: min,
            max_delay_ps: max,
            reorder_count: reorders,
            damper_added_reorders,
        }
    }

    pub fn observed_jitter_ps(&self) -> i64 {
        if self.packets.is_empty() {
            0
        } else {
            self.max_delay_ps - self.min_delay_ps
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub packet_id: u64,
    pub delay_ps: i64,
    pub lower_ps: i64,
    pub upper_ps: i64,
}

/// Compare every simulated delay against an analytic result; the returned
/// list is empty exactly when all delays lie within `[d_lower, d_upper]` and
/// the observed spread is within the jitter bound.
pub fn check_bounds(report: &SimReport, bounds: &BoundsResult) -> Vec<Violation> {
    let lo = sec_to_ps(bounds.d_lower);
    let hi = sec_to_ps(bounds.d_upper);
    let mut out = Vec::new();
    for p in &report.packets {
        if p.delay_ps < lo || p.delay_ps > hi {
            out.push(Violation {
                packet_id: p.id,
                delay_ps: p.delay_ps,
                lower_ps: lo,
                upper_ps: hi,
            });
        }
    }
    if !report.packets.is_empty() && report.observed_jitter_ps() > sec_to_ps(bounds.jitter) {
        out.push(Violation {
            packet_id: u64::MAX,
            delay_ps: report.observed_jitter_ps(),
            lower_ps: 0,
            upper_ps: sec_to_ps(bounds.jitter),
        });
    }
    out
}

struct Packet {
    id: u64,
    entry_ps: i64,
    time_ps: i64,
    header_ps: i64,
}

/// Simulate one block: every packet passes each element in arrival order,
/// headers accumulate the measured earliness plus a bounded error, and the
/// terminal damper applies its release law on its own clock.
pub fn simulate_block(cfg: &SimConfig) -> Result<SimReport, SimError> {
    cfg.block.validate()?;
    if cfg.packets == 0 {
        return Ok(SimReport::from_outcomes(Vec::new(), 0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Entry times.
    let mut entries = Vec::with_capacity(cfg.packets);
    let mut t = 0i64;
    for _ in 0..cfg.packets {
        entries.push(t);
        t += match cfg.source {
            SourceModel::Periodic { spacing_ps } => spacing_ps.max(1),
            SourceModel::Jittered {
                spacing_ps,
                jitter_ps,
            } => spacing_ps.max(1) + rng.gen_range(0..=jitter_ps.max(0)),
        };
    }
    let span = *entries.last().unwrap() + 1;

    // Worst-case block traversal bounds the trajectory horizon.
    let total_delay_hint: f64 = cfg
        .block
        .elements
        .iter()
        .map(|e| match e {
            Element::Jcs(j) => j.delta,
            Element::Bds(b) => b.pi_upper,
        })
        .sum::<f64>()
        + cfg.block.damper.delta_u
        + 1e-3;
    let horizon = span + 2 * sec_to_ps(total_delay_hint) + 1_000_000_000;

    let mut packets: Vec<Packet> = entries
        .iter()
        .enumerate()
        .map(|(i, &e)| Packet {
            id: i as u64,
            entry_ps: e,
            time_ps: e,
            header_ps: 0,
        })
        .collect();

    // One clock per compensated element plus one for the damper.
    let mut clock_seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut next_traj = || {
        clock_seed = clock_seed.wrapping_add(0xA5A5_5A5A_1234_5678);
        ClockTrajectory::sample(&cfg.block.clock, clock_seed, cfg.clock_mode, horizon)
    };

    let scripted = match &cfg.jcs_policy {
        DelayPolicy::Scripted(s) => {
            let jcs_count = cfg.block.jcs_count();
            if s.len() != jcs_count || s.iter().any(|v| v.len() != cfg.packets) {
                return Err(SimError::InvalidConfig(format!(
                    "scripted policy needs {jcs_count} x {} delays",
                    cfg.packets
                )));
            }
            Some(s.clone())
        }
        _ => None,
    };

    let mut jcs_index = 0usize;
    for element in &cfg.block.elements {
        // Process packets in arrival order at this element.
        let mut order: Vec<usize> = (0..packets.len()).collect();
        order.sort_by_key(|&i| (packets[i].time_ps, packets[i].id));

        match element {
            Element::Jcs(jcs) => {
                let traj = next_traj()?;
                let delta_ps = sec_to_ps(jcs.delta);
                let budget = HeaderErrorBudget::uniform(jcs.epsilon);
                let mut prev_exit_local = i64::MIN;
                for &i in &order {
                    let p = &mut packets[i];
                    let local_in = traj.local_at(p.time_ps);
                    // Draw margin keeps rounding from exceeding the bound.
                    let hi = (delta_ps - 2).max(0);
                    let lo_policy = match &cfg.jcs_policy {
                        DelayPolicy::Uniform { lo_frac } => {
                            ((delta_ps as f64) * lo_frac) as i64
                        }
                        DelayPolicy::PinnedMax => hi,
                        DelayPolicy::Scripted(_) => 0,
                    };
                    let mut d_local = match &scripted {
                        Some(s) => s[jcs_index][p.id as usize],
                        None => {
                            if lo_policy >= hi {
                                hi
                            } else {
                                rng.gen_range(lo_policy..=hi)
                            }
                        }
                    };
                    if jcs.fifo {
                        // The packet cannot leave before its predecessor.
                        let forced = prev_exit_local.saturating_sub(local_in);
                        if forced > delta_ps {
                            return Err(SimError::NonConformingTrace(format!(
                                "FIFO backlog forces a delay of {forced} ps above the bound \
                                 {delta_ps} ps at element {jcs_index}"
                            )));
                        }
                        d_local = d_local.max(forced);
                    }
                    let exit_local = local_in + d_local;
                    let t_out = traj.tai_at_local(exit_local);
                    let measured = traj.local_elapsed(p.time_ps, t_out);
                    if measured > delta_ps {
                        return Err(SimError::NonConformingTrace(format!(
                            "measured delay {measured} ps exceeds bound {delta_ps} ps"
                        )));
                    }
                    let increment = delta_ps - measured;
                    p.header_ps = crate::dampers::apply_header_error(
                        p.header_ps + increment,
                        &budget,
                        cfg.header_error_mode,
                        &mut rng,
                    );
                    p.time_ps = t_out.max(p.time_ps);
                    if jcs.fifo {
                        prev_exit_local = exit_local;
                    }
                }
                jcs_index += 1;
            }
            Element::Bds(bds) => {
                let lo_ps = sec_to_ps(bds.pi_lower);
                let hi_ps = sec_to_ps(bds.pi_upper);
                let mut prev_exit = i64::MIN;
                for &i in &order {
                    let p = &mut packets[i];
                    let mut lo_eff = lo_ps;
                    if bds.fifo {
                        lo_eff = lo_eff.max(prev_exit.saturating_sub(p.time_ps));
                        if lo_eff > hi_ps {
                            return Err(SimError::NonConformingTrace(
                                "FIFO backlog exceeds the BDS delay bound".into(),
                            ));
                        }
                    }
                    let d = if lo_eff >= hi_ps {
                        hi_ps.max(lo_eff)
                    } else {
                        rng.gen_range(lo_eff..=hi_ps)
                    };
                    p.time_ps += d;
                    if bds.fifo {
                        prev_exit = p.time_ps;
                    }
                }
            }
        }
    }

    // Terminal damper.
    let damper_traj = next_traj()?;
    let (outcomes, damper_added) = run_damper(
        &cfg.block.damper,
        &damper_traj,
        &mut packets,
        &mut rng,
    )?;
    Ok(SimReport::from_outcomes(outcomes, damper_added))
}

fn run_damper(
    spec: &DamperSpec,
    traj: &ClockTrajectory,
    packets: &mut [Packet],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<PacketOutcome>, usize), SimError> {
    let dl_ps = sec_to_ps(spec.delta_l);
    let du_ps = sec_to_ps(spec.delta_u);
    let eps_d_ps = sec_to_ps(spec.preset_epsilon());
    let phi_min_ps = sec_to_ps(spec.phi_min);
    let phi_max_ps = sec_to_ps(spec.phi_max);

    let mut order: Vec<usize> = (0..packets.len()).collect();
    order.sort_by_key(|&i| (packets[i].time_ps, packets[i].id));

    // (id, entry, exit, damper arrival rank)
    let mut exits: Vec<(u64, i64, i64, usize)> = Vec::with_capacity(packets.len());
    let mut prev_release_local = i64::MIN;
    for (rank, &i) in order.iter().enumerate() {
        let p = &packets[i];
        let q_local = traj.local_at(p.time_ps);
        let e_tilde = q_local + p.header_ps;
        let e_d = if eps_d_ps > 0 {
            rng.gen_range(-eps_d_ps..=eps_d_ps)
        } else {
            0
        };
        let tentative = match (spec.variant, spec.rounding) {
            (DamperVariant::Ideal, _) => e_tilde,
            (_, Rounding::Floor) | (_, Rounding::Ceil) => quantize(e_tilde + e_d, spec)?,
            (DamperVariant::Tolerance, Rounding::None)
            | (DamperVariant::HeadOfLine, Rounding::None) => {
                e_tilde + rng.gen_range(-dl_ps..=du_ps)
            }
            (DamperVariant::Resequencing, Rounding::None) => {
                // Release between the initial and terminal eligibility times.
                let window = (dl_ps - eps_d_ps).max(0);
                e_tilde + e_d - if window > 0 { rng.gen_range(0..=window) } else { 0 }
            }
        };

        let release_local = match spec.variant {
            DamperVariant::Ideal | DamperVariant::Tolerance => tentative.max(q_local),
            DamperVariant::Resequencing => {
                let r = tentative.max(prev_release_local).max(q_local);
                prev_release_local = r;
                r
            }
            DamperVariant::HeadOfLine => {
                let phi = if phi_max_ps > phi_min_ps {
                    rng.gen_range(phi_min_ps..=phi_max_ps)
                } else {
                    phi_min_ps
                };
                let r = (tentative.max(prev_release_local) + phi).max(q_local);
                prev_release_local = r;
                r
            }
        };

        let exit = traj.tai_at_local(release_local).max(p.time_ps);
        exits.push((p.id, p.entry_ps, exit, rank));
    }

    // A packet is flagged when an earlier packet overtakes it: walking exits
    // in time order, its id is below the maximum id already released. The
    // same walk over damper-arrival ranks counts inversions added by the
    // damper itself.
    let mut by_exit: Vec<usize> = (0..exits.len()).collect();
    // Ties in release time are served in damper-arrival order.
    by_exit.sort_by_key(|&i| (exits[i].2, exits[i].3));
    let mut max_id_seen: i64 = -1;
    let mut max_rank_seen: i64 = -1;
    let mut damper_added = 0usize;
    let mut outcomes = Vec::with_capacity(exits.len());
    for &i in &by_exit {
        let (id, entry, exit, rank) = exits[i];
        let reordered = (id as i64) < max_id_seen;
        max_id_seen = max_id_seen.max(id as i64);
        if (rank as i64) < max_rank_seen {
            damper_added += 1;
        }
        max_rank_seen = max_rank_seen.max(rank as i64);
        outcomes.push(PacketOutcome {
            id,
            entry_tai_ps: entry,
            exit_tai_ps: exit,
            delay_ps: exit - entry,
            reordered,
        });
    }
    Ok((outcomes, damper_added))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{theorem1_bounds, BdsSpec, JcsSpec};
    use crate::clocks::ClockModel;

    const US: f64 = 1e-6;
    const NS: f64 = 1e-9;

    fn simple_block() -> Block {
        Block::new(
            vec![
                Element::Jcs(JcsSpec::new(250.0 * US, 50.0 * NS)),
                Element::Bds(BdsSpec::constant(5.0 * US)),
                Element::Jcs(JcsSpec::new(2.0 * US, 50.0 * NS)),
            ],
            DamperSpec::rcsp(1.0 * US - 2.0 * NS, 2.0 * NS),
            ClockModel::free_running(),
        )
    }

    #[test]
    fn conforming_run_respects_reference_bounds() {
        let block = simple_block();
        let bounds = theorem1_bounds(&block).unwrap();
        let cfg = SimConfig::new(block, 2000, 7);
        let report = simulate_block(&cfg).unwrap();
        assert_eq!(report.packets.len(), 2000);
        let violations = check_bounds(&report, &bounds);
        assert!(violations.is_empty(), "{violations:?}");
    }

    #[test]
    fn degenerate_block_has_exact_delay() {
        // All delays pinned at the bound, perfect clocks, ideal damper:
        // every packet takes exactly sum(delta) + sum(pi).
        let block = Block::new(
            vec![
                Element::Jcs(JcsSpec::new(250.0 * US, 0.0)),
                Element::Bds(BdsSpec::constant(5.0 * US)),
                Element::Jcs(JcsSpec::new(2.0 * US, 0.0)),
            ],
            DamperSpec::ideal(),
            ClockModel {
                rho: 1.0,
                eta: 0.0,
                omega: f64::INFINITY,
            },
        );
        let mut cfg = SimConfig::new(block, 50, 3);
        cfg.jcs_policy = DelayPolicy::Scripted(vec![vec![sec_to_ps(100.0 * US); 50], vec![
            sec_to_ps(1.0 * US);
            50
        ]]);
        // Headers make up for the remaining slack, so the damper holds every
        // packet to the full budget.
        let report = simulate_block(&cfg).unwrap();
        let expect = sec_to_ps(257.0 * US);
        for p in &report.packets {
            assert_eq!(p.delay_ps, expect);
        }
        assert_eq!(report.observed_jitter_ps(), 0);
    }

    #[test]
    fn deterministic_under_fixed_seed() {
        let cfg = SimConfig::new(simple_block(), 300, 11);
        let a = simulate_block(&cfg).unwrap();
        let b = simulate_block(&cfg).unwrap();
        assert_eq!(a.packets, b.packets);
        let cfg2 = SimConfig {
            seed: 12,
            ..cfg.clone()
        };
        let c = simulate_block(&cfg2).unwrap();
        assert_ne!(a.packets, c.packets);
    }

    /// Block whose non-FIFO middle element swaps packet order, feeding the
    /// damper eligibility times that are not monotone in packet id.
    fn swapping_block(damper: DamperSpec) -> Block {
        let mut bds = BdsSpec::new(2.0 * US, 6.0 * US, 4.0 * US);
        bds.fifo = false;
        Block::new(
            vec![
                Element::Jcs(JcsSpec::new(3.0 * US, 50.0 * NS)),
                Element::Bds(bds),
            ],
            damper,
            ClockModel::free_running(),
        )
    }

    fn tight_cfg(block: Block, seed: u64) -> SimConfig {
        let mut cfg = SimConfig::new(block, 1000, seed);
        cfg.source = SourceModel::Jittered {
            spacing_ps: 1_000_000,
            jitter_ps: 2_000_000,
        };
        cfg
    }

    #[test]
    fn resequencing_never_adds_reorders() {
        // The upstream non-FIFO element swaps packets; the damper preserves
        // its own arrival order (including the wrong order it received) and
        // never introduces new inversions.
        let block = swapping_block(DamperSpec::fopleq(1.0 * US - 2.0 * NS, 2.0 * NS));
        let report = simulate_block(&tight_cfg(block, 5)).unwrap();
        assert_eq!(report.damper_added_reorders, 0);
        assert!(report.reorder_count > 0, "the non-FIFO element should swap packets");

        let hol =
            swapping_block(DamperSpec::head_of_line(2.0 * NS, 2.0 * NS, 0.0, 5.0 * NS).unwrap());
        let report = simulate_block(&tight_cfg(hol, 6)).unwrap();
        assert_eq!(report.damper_added_reorders, 0);
    }

    #[test]
    fn tolerance_damper_does_reorder() {
        // The calendar damper releases by eligibility time, not by arrival
        // order, so it reorders relative to its own arrivals.
        let block = swapping_block(DamperSpec::rcsp(1.0 * US - 2.0 * NS, 2.0 * NS));
        let report = simulate_block(&tight_cfg(block, 5)).unwrap();
        assert!(report.damper_added_reorders > 0);
    }

    #[test]
    fn empty_run_is_empty() {
        let cfg = SimConfig::new(simple_block(), 0, 1);
        let report = simulate_block(&cfg).unwrap();
        assert!(report.packets.is_empty());
        let bounds = theorem1_bounds(&simple_block()).unwrap();
        assert!(check_bounds(&report, &bounds).is_empty());
    }

    #[test]
    fn shrunk_bounds_are_detected() {
        let block = simple_block();
        let mut bounds = theorem1_bounds(&block).unwrap();
        let cfg = SimConfig {
            jcs_policy: DelayPolicy::PinnedMax,
            header_error_mode: HeaderErrorMode::PinnedPositive,
            ..SimConfig::new(block, 200, 9)
        };
        let report = simulate_block(&cfg).unwrap();
        assert!(check_bounds(&report, &bounds).is_empty());
        // Shrinking the window below the observed extremes must trip.
        bounds.d_upper = crate::clocks::ps_to_sec(report.max_delay_ps - 1);
        assert!(!check_bounds(&report, &bounds).is_empty());
    }
}
