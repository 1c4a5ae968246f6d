//! Reordering experiments for the calendar-queue dampers: empirical
//! frequencies of eligibility-order inversions caused by microscopic clock
//! speed differences and transmission-time inference errors, plus the exact
//! equivalence check between the head-of-line recursion and its
//! re-sequencing + FIFO-queue decomposition.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dampers::{hol_release, hol_release_closed_form, resequence_release};
use crate::sim::SimError;

/// Relative speed relation of the damper's clock versus the upstream clock
/// during one packet transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockPairMode {
    /// Either clock is equally likely to tick faster over the transmission.
    SymmetricSign,
    /// The damper-side clock measures longer durations.
    DownstreamSlower,
    /// The damper-side clock measures shorter durations.
    DownstreamFaster,
}

/// How the transmission-time inference error enters the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranErrorMode {
    Zero,
    /// Uniform in `[-bound, bound]`.
    Uniform,
    /// Pinned so the second packet's eligibility moves earlier (forces the
    /// inversion when it dominates the drift term).
    ForceInvert,
    /// Pinned the other way.
    ForcePreserve,
}

/// Two back-to-back packets cross a FIFO transmission stage and reach a
/// ceil-rounding damper on a different clock. The second packet's header is
/// smaller by the inferred transmission time; its measured arrival trails by
/// the actual transmission time as seen by the damper clock. The returned
/// frequency counts trials where the second packet's theoretical eligibility
/// precedes the first packet's.
pub fn rgcq_reorder_experiment(
    tau_local: f64,
    e_tran_bound: f64,
    rho_minus_one: f64,
    clock_mode: ClockPairMode,
    tran_mode: TranErrorMode,
    trials: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inversions = 0usize;
    for _ in 0..trials {
        // Inference error: actual transmission time on the upstream clock is
        // the inferred value minus the error.
        let e_tran = match tran_mode {
            TranErrorMode::Zero => 0.0,
            TranErrorMode::Uniform => {
                if e_tran_bound > 0.0 {
                    rng.gen_range(-e_tran_bound..=e_tran_bound)
                } else {
                    0.0
                }
            }
            TranErrorMode::ForceInvert => e_tran_bound,
            TranErrorMode::ForcePreserve => -e_tran_bound,
        };
        let tau_upstream = tau_local - e_tran;

        // Microscopic speed difference over one transmission time.
        let magnitude: f64 = rng.gen_range(0.0..=1.0) * rho_minus_one * tau_upstream.abs();
        let speed_term = match clock_mode {
            ClockPairMode::SymmetricSign => {
                if rng.gen_bool(0.5) {
                    magnitude
                } else {
                    -magnitude
                }
            }
            ClockPairMode::DownstreamSlower => magnitude,
            ClockPairMode::DownstreamFaster => -magnitude,
        };

        // Eligibility gap between packet 2 and packet 1:
        // (actual - inferred) upstream, plus the cross-clock measurement
        // difference of the actual transmission time.
        let gap = (tau_upstream - tau_local) + speed_term;
        if gap < 0.0 {
            inversions += 1;
        }
    }
    inversions as f64 / trials.max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackToBackOutcome {
    /// Fraction of trials where both packets land in the same calendar cell.
    pub p_backtoback: f64,
    /// Fraction of trials where they additionally swap at the next stage.
    pub p_reorder: f64,
}

/// Two packets enter with TAI interspacing `tau` and reach a floor-rounding
/// damper with grid step `delta_l`. The grid phase is uniform per trial; a
/// small disturbance stands in for the clock-drift and header-error jitter
/// accumulated on the way. Both packets share a cell with probability about
/// `1 - tau / delta_l`, and each such pair swaps downstream with
/// probability one half.
pub fn rcsp_backtoback_experiment(
    tau_tai: f64,
    delta_l: f64,
    trials: usize,
    seed: u64,
) -> Result<BackToBackOutcome, SimError> {
    if !(delta_l > 0.0) {
        return Err(SimError::InvalidConfig(
            "the calendar step must be positive".into(),
        ));
    }
    if !(tau_tai >= 0.0) {
        return Err(SimError::InvalidConfig(
            "the interspacing must be non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Disturbance scale: drift over the interspacing plus timing jitter and
    // header-error leftovers, all far below the grid step.
    let noise_bound = 1e-4 * tau_tai + 6e-9;
    let mut b2b = 0usize;
    let mut swapped = 0usize;
    for _ in 0..trials {
        let phase = rng.gen_range(0.0..delta_l);
        let noise = rng.gen_range(-noise_bound..=noise_bound);
        let gap = tau_tai + noise;
        if phase + gap < delta_l {
            b2b += 1;
            if rng.gen_bool(0.5) {
                swapped += 1;
            }
        }
    }
    let n = trials.max(1) as f64;
    Ok(BackToBackOutcome {
        p_backtoback: b2b as f64 / n,
        p_reorder: swapped as f64 / n,
    })
}

/// Exact equivalence between the head-of-line release recursion and the
/// composition of a re-sequencing stage with a single-server FIFO queue
/// (`O_n = max(I_n, O_{n-1}) + phi_n`), and between the recursion and its
/// closed form. Integer picoseconds, no tolerance.
pub fn hol_equivalence_check(
    trace: &[(i64, i64)],
    phi_min_ps: i64,
    phi_max_ps: i64,
) -> Result<bool, SimError> {
    let tentatives: Vec<i64> = trace.iter().map(|&(e, _)| e).collect();
    let processing: Vec<i64> = trace.iter().map(|&(_, p)| p).collect();

    let direct = hol_release(&tentatives, &processing, phi_min_ps, phi_max_ps)?;
    let closed = hol_release_closed_form(&tentatives, &processing);

    let reseq = resequence_release(&tentatives);
    let mut queued = Vec::with_capacity(reseq.len());
    let mut prev = i64::MIN;
    for (&z, &phi) in reseq.iter().zip(&processing) {
        let out = z.max(prev) + phi;
        queued.push(out);
        prev = out;
    }

    Ok(direct == queued && direct == closed)
}
