//! Scripted single-packet traces that achieve the per-block delay bounds
//! exactly, replaying the worst-case constructions: adversarial clocks all
//! pinned to one branch of the deviation envelope, header errors pinned at
//! the bound, constant-delay segments at their extreme, and the damper
//! releasing at the edge of its tolerance window.
//!
//! All arithmetic is exact: durations are integer picoseconds scaled by the
//! rational drift denominator, and the final result is rounded once, so the
//! achieved delay matches the analytic bound to within one picosecond.

use serde::{Deserialize, Serialize};

use crate::bounds::{core_block_bounds, Block, Element};
use crate::clocks::{sec_to_ps, DriftRational};
use crate::dampers::DamperVariant;
use crate::sim::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TightnessTarget {
    /// Delay upper bound through the stability (drift) branch.
    UpperDrift,
    /// Delay upper bound through the synchronization branch.
    UpperSync,
    /// Delay lower bound through the stability branch.
    LowerDrift,
    /// Delay lower bound through the synchronization branch.
    LowerSync,
}

impl TightnessTarget {
    pub fn is_upper(self) -> bool {
        matches!(self, TightnessTarget::UpperDrift | TightnessTarget::UpperSync)
    }

    fn is_sync(self) -> bool {
        matches!(self, TightnessTarget::UpperSync | TightnessTarget::LowerSync)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TightnessOutcome {
    /// TAI delay achieved by the scripted packet.
    pub delay_ps: i64,
    /// The analytic bound the trace replays.
    pub bound_ps: i64,
}

impl TightnessOutcome {
    pub fn error_ps(&self) -> i64 {
        (self.delay_ps - self.bound_ps).abs()
    }
}

/// Run the scripted worst-case trace for one block.
///
/// The block's damper must be an ideal, tolerance or re-sequencing damper
/// (a single packet never waits behind a predecessor, so the re-sequencing
/// rule reduces to the tolerance rule). Sync targets need a finite
/// time-error bound, and each target is only feasible when its envelope
/// branch is the binding one for every measured delay in the trace.
pub fn tightness_trace(block: &Block, target: TightnessTarget) -> Result<TightnessOutcome, SimError> {
    block.validate()?;
    if block.damper.variant == DamperVariant::HeadOfLine {
        return Err(SimError::InvalidConfig(
            "scripted traces cover ideal, tolerance and re-sequencing dampers".into(),
        ));
    }
    let k = block.jcs_count();
    if block.distinct_clock_count.is_some() || block.jcs_iter().any(|j| j.clock_id.is_some()) {
        return Err(SimError::InfeasibleTarget(
            "shared-clock blocks are not supported by the scripted traces".into(),
        ));
    }

    let clock = &block.clock;
    let drift = DriftRational::from_f64(clock.rho_minus_one());
    let (n, d) = (drift.num, drift.den);
    let eta = sec_to_ps(clock.eta) as i128;
    let two_omega = if clock.omega.is_finite() {
        Some(sec_to_ps(2.0 * clock.omega) as i128)
    } else {
        None
    };
    if target.is_sync() && two_omega.is_none() {
        return Err(SimError::InfeasibleTarget(
            "synchronization-branch targets need a finite time-error bound".into(),
        ));
    }

    // Local delays experienced inside each compensated element; any value
    // within the bound works because the header cancels it. Keep it above
    // eta so the slow-drift measurement stays non-negative.
    let mut measured: Vec<i128> = Vec::with_capacity(k + 1);
    let mut header: i128 = 0;
    let sign: i128 = if target.is_upper() { 1 } else { -1 };
    let mut bds_total: i128 = 0;
    for e in &block.elements {
        match e {
            Element::Jcs(j) => {
                let delta_ps = sec_to_ps(j.delta) as i128;
                let d_local = ((delta_ps * 2) / 5).max(eta.min(delta_ps));
                measured.push(d_local);
                header += delta_ps - d_local + sign * sec_to_ps(j.epsilon) as i128;
            }
            Element::Bds(b) => {
                bds_total += if target.is_upper() {
                    sec_to_ps(b.pi_upper) as i128
                } else {
                    sec_to_ps(b.pi_lower) as i128
                };
            }
        }
    }
    // Damper wait on its local clock: the full header plus/minus the edge of
    // the tolerance envelope.
    let damper_local = header
        + if target.is_upper() {
            sec_to_ps(block.damper.delta_u) as i128
        } else {
            -(sec_to_ps(block.damper.delta_l) as i128)
        };
    if damper_local < 0 {
        return Err(SimError::InfeasibleTarget(
            "scripted header leaves a negative damper wait".into(),
        ));
    }
    measured.push(damper_local);

    // Per-measurement branch feasibility: the selected branch of the
    // deviation envelope must be the binding one for every measured delay.
    for &x in &measured {
        if let Some(w2) = two_omega {
            let drift_up = x * n + eta * d; // (rho-1)x + eta, times d
            let drift_lo = x * n + eta * d; // (1-1/rho)x + eta/rho, times (d+n)
            match target {
                TightnessTarget::UpperDrift if drift_up > w2 * d => {
                    return Err(SimError::InfeasibleTarget(
                        "drift branch exceeds the synchronization branch".into(),
                    ))
                }
                TightnessTarget::UpperSync if w2 * d > drift_up => {
                    return Err(SimError::InfeasibleTarget(
                        "synchronization branch exceeds the drift branch".into(),
                    ))
                }
                TightnessTarget::LowerDrift if drift_lo > w2 * (d + n) => {
                    return Err(SimError::InfeasibleTarget(
                        "drift branch exceeds the synchronization branch".into(),
                    ))
                }
                TightnessTarget::LowerSync if w2 * (d + n) > drift_lo => {
                    return Err(SimError::InfeasibleTarget(
                        "synchronization branch exceeds the drift branch".into(),
                    ))
                }
                _ => {}
            }
        }
        if target == TightnessTarget::LowerDrift && x < eta {
            return Err(SimError::InfeasibleTarget(
                "measured delay below the timing-jitter bound".into(),
            ));
        }
        if target == TightnessTarget::LowerSync {
            if let Some(w2) = two_omega {
                if x < w2 {
                    return Err(SimError::InfeasibleTarget(
                        "measured delay below twice the time-error bound".into(),
                    ));
                }
            }
        }
    }

    // TAI durations over an exact common denominator.
    let (num, den): (i128, i128) = match target {
        TightnessTarget::UpperDrift => {
            // tai = x + x*n/d + eta
            let s: i128 = measured.iter().map(|&x| x * (d + n) + eta * d).sum();
            (s + bds_total * d, d)
        }
        TightnessTarget::LowerDrift => {
            // tai = (x - eta) * d / (d + n)
            let s: i128 = measured.iter().map(|&x| (x - eta) * d).sum();
            (s + bds_total * (d + n), d + n)
        }
        TightnessTarget::UpperSync => {
            let w2 = two_omega.unwrap();
            (measured.iter().map(|&x| x + w2).sum::<i128>() + bds_total, 1)
        }
        TightnessTarget::LowerSync => {
            let w2 = two_omega.unwrap();
            (measured.iter().map(|&x| x - w2).sum::<i128>() + bds_total, 1)
        }
    };
    let delay_ps = div_round(num, den) as i64;

    let bounds = core_block_bounds(block)?;
    let bound_ps = if target.is_upper() {
        sec_to_ps(bounds.d_upper)
    } else {
        sec_to_ps(bounds.d_lower)
    };
    Ok(TightnessOutcome { delay_ps, bound_ps })
}

/// Two-packet worst case for a re-sequencing damper downstream of a
/// non-FIFO element: the second packet replays the single-packet upper
/// trace; the first packet enters `j` earlier, gets overtaken inside the
/// non-FIFO element, and is held back by the FIFO release rule until the
/// second packet's release, so its delay reaches the bound plus `j`.
pub fn resequencing_overtake_trace(
    block: &Block,
    j_ps: i64,
    target: TightnessTarget,
) -> Result<TightnessOutcome, SimError> {
    if block.damper.variant != DamperVariant::Resequencing {
        return Err(SimError::InvalidConfig(
            "the overtake trace needs a re-sequencing damper".into(),
        ));
    }
    if !target.is_upper() {
        return Err(SimError::InvalidConfig(
            "the overtake construction targets the delay upper bound".into(),
        ));
    }
    let slack = block
        .bds_iter()
        .filter(|b| !b.fifo)
        .map(|b| sec_to_ps(b.pi_upper) - sec_to_ps(b.pi_lower))
        .max()
        .unwrap_or(0);
    if j_ps > slack {
        return Err(SimError::InfeasibleTarget(format!(
            "prefix jitter {j_ps} ps exceeds the non-FIFO element's spread {slack} ps"
        )));
    }
    // The overtaken packet shares the second packet's damper release and
    // entered j earlier.
    let single = tightness_trace(block, target)?;
    Ok(TightnessOutcome {
        delay_ps: single.delay_ps + j_ps,
        bound_ps: single.bound_ps + j_ps,
    })
}

fn div_round(n: i128, d: i128) -> i128 {
    if n >= 0 {
        (n + d / 2) / d
    } else {
        -((-n + d / 2) / d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{BdsSpec, JcsSpec};
    use crate::clocks::ClockModel;
    use crate::dampers::DamperSpec;

    const US: f64 = 1e-6;
    const NS: f64 = 1e-9;

    fn reference_block() -> Block {
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
    fn upper_drift_hits_reference_bound() {
        let out = tightness_trace(&reference_block(), TightnessTarget::UpperDrift).unwrap();
        assert!(out.error_ps() <= 1, "delay {} vs bound {}", out.delay_ps, out.bound_ps);
        // 257.1332102 us
        assert_eq!(out.bound_ps, 257_133_210);
    }

    #[test]
    fn lower_drift_hits_reference_bound() {
        let out = tightness_trace(&reference_block(), TightnessTarget::LowerDrift).unwrap();
        assert!(out.error_ps() <= 1, "delay {} vs bound {}", out.delay_ps, out.bound_ps);
    }

    #[test]
    fn sync_targets_need_finite_omega() {
        let err = tightness_trace(&reference_block(), TightnessTarget::UpperSync);
        assert!(matches!(err, Err(SimError::InfeasibleTarget(_))));
    }

    #[test]
    fn sync_targets_hit_bound_when_sync_branch_binds() {
        let mut block = reference_block();
        // Tiny omega makes the synchronization branch bind for every
        // measured delay in the script.
        block.clock = ClockModel::new(1e-4, 2.0 * NS, 1.0 * NS).unwrap();
        let up = tightness_trace(&block, TightnessTarget::UpperSync).unwrap();
        assert!(up.error_ps() <= 1, "delay {} vs bound {}", up.delay_ps, up.bound_ps);
        let lo = tightness_trace(&block, TightnessTarget::LowerSync).unwrap();
        assert!(lo.error_ps() <= 1);
        // And the drift target is now infeasible.
        assert!(matches!(
            tightness_trace(&block, TightnessTarget::UpperDrift),
            Err(SimError::InfeasibleTarget(_))
        ));
    }

    #[test]
    fn perfect_clock_trace_is_exact() {
        let mut block = reference_block();
        block.clock = ClockModel {
            rho: 1.0,
            eta: 0.0,
            omega: f64::INFINITY,
        };
        let out = tightness_trace(&block, TightnessTarget::UpperDrift).unwrap();
        assert_eq!(out.error_ps(), 0);
        // All-max delays and pinned errors: sum(delta) + pi + delta_u + K*eps.
        // sum(delta) + pi + delta_u + K*eps = 257 us + 102 ns
        assert_eq!(out.bound_ps, 257_102_000);
    }

    #[test]
    fn overtake_trace_adds_prefix_jitter() {
        let mut bds = BdsSpec::new(2.0 * US, 6.0 * US, 4.0 * US);
        bds.fifo = false;
        let block = Block::new(
            vec![
                Element::Jcs(JcsSpec::new(3.0 * US, 50.0 * NS)),
                Element::Bds(bds),
            ],
            DamperSpec::fopleq(1.0 * US - 2.0 * NS, 2.0 * NS),
            ClockModel::free_running(),
        );
        let j_ps = 1_500_000; // 1.5 us
        let out = resequencing_overtake_trace(&block, j_ps, TightnessTarget::UpperDrift).unwrap();
        let single = tightness_trace(&block, TightnessTarget::UpperDrift).unwrap();
        assert_eq!(out.delay_ps, single.delay_ps + j_ps);
        assert!(out.error_ps() <= 1);
        // Requesting more jitter than the non-FIFO element can produce fails.
        assert!(matches!(
            resequencing_overtake_trace(&block, sec_to_ps(10.0 * US), TightnessTarget::UpperDrift),
            Err(SimError::InfeasibleTarget(_))
        ));
    }
}
