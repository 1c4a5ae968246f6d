//! Eligibility-time laws for every damper variant, damper-header (earliness)
//! computation in both modes, and the header-error budget.
//!
//! Release laws operate on integer picoseconds so that the simulator's
//! equality checks are exact. A damper receives packets carrying a header
//! `H`, computes the theoretical eligibility time `q + H` on its local clock
//! and releases within its tolerance envelope, possibly after quantization to
//! a calendar grid, re-sequencing, or head-of-line processing.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DamperError {
    #[error("granularity must be set for floor/ceil rounding")]
    GranularityUnset,
    #[error("granularity must be positive, got {0} ps")]
    GranularityInvalid(i64),
    #[error("processing time {0} ps outside [{1}, {2}] ps")]
    ProcessingOutOfRange(i64, i64, i64),
    #[error("processing/tentative sequences have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("decomposition target {z} outside feasible interval [{lo}, {hi}]")]
    DecompositionInfeasible { z: f64, lo: f64, hi: f64 },
    #[error("theoretical-eligibility stamping requires an upstream damper")]
    TeStampingWithoutUpstream,
    #[error("invalid damper parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DamperVariant {
    Ideal,
    Tolerance,
    Resequencing,
    HeadOfLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    None,
    Floor,
    Ceil,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderMode {
    Default,
    TeStamping,
}

/// Parameters of one damper. Tolerances are the analysis-side envelope
/// `[~E - delta_l, ~E + delta_u]`; for the calendar-based presets they fold
/// the grid step and the damper-side computation error together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamperSpec {
    pub variant: DamperVariant,
    /// Maximum early release relative to the theoretical eligibility time, seconds.
    pub delta_l: f64,
    /// Maximum late release, seconds.
    pub delta_u: f64,
    /// Calendar grid step, seconds; required when `rounding != None`.
    pub granularity: Option<f64>,
    /// Minimum head-of-line processing time, seconds.
    pub phi_min: f64,
    /// Maximum head-of-line processing time, seconds.
    pub phi_max: f64,
    pub header_mode: HeaderMode,
    pub rounding: Rounding,
}

impl DamperSpec {
    pub fn ideal() -> DamperSpec {
        DamperSpec {
            variant: DamperVariant::Ideal,
            delta_l: 0.0,
            delta_u: 0.0,
            granularity: None,
            phi_min: 0.0,
            phi_max: 0.0,
            header_mode: HeaderMode::Default,
            rounding: Rounding::None,
        }
    }

    /// Calendar queue that rounds the theoretical eligibility time down to a
    /// grid of step `delta`; with computation error `epsilon` the envelope is
    /// `(delta + epsilon, epsilon)`.
    pub fn rcsp(delta: f64, epsilon: f64) -> DamperSpec {
        DamperSpec {
            variant: DamperVariant::Tolerance,
            delta_l: delta + epsilon,
            delta_u: epsilon,
            granularity: Some(delta),
            rounding: Rounding::Floor,
            ..DamperSpec::ideal()
        }
    }

    /// Gate-control queues that round the theoretical eligibility time up;
    /// envelope `(epsilon, delta + epsilon)`.
    pub fn rgcq(delta: f64, epsilon: f64) -> DamperSpec {
        DamperSpec {
            variant: DamperVariant::Tolerance,
            delta_l: epsilon,
            delta_u: delta + epsilon,
            granularity: Some(delta),
            rounding: Rounding::Ceil,
            ..DamperSpec::ideal()
        }
    }

    /// Order-preserving calendar queue: floor rounding plus a running-max
    /// release rule; envelope `(delta + epsilon, epsilon)`.
    pub fn fopleq(delta: f64, epsilon: f64) -> DamperSpec {
        DamperSpec {
            variant: DamperVariant::Resequencing,
            delta_l: delta + epsilon,
            delta_u: epsilon,
            granularity: Some(delta),
            rounding: Rounding::Floor,
            ..DamperSpec::ideal()
        }
    }

    /// Earliest-deadline damper releasing between initial and terminal
    /// eligibility separated by `delta`; envelope `(delta + epsilon, epsilon)`.
    pub fn sced_plus(delta: f64, epsilon: f64) -> DamperSpec {
        DamperSpec {
            variant: DamperVariant::Resequencing,
            delta_l: delta + epsilon,
            delta_u: epsilon,
            granularity: Some(delta),
            rounding: Rounding::None,
            ..DamperSpec::ideal()
        }
    }

    /// FIFO-queue damper examining only the head packet.
    pub fn head_of_line(
        delta_l: f64,
        delta_u: f64,
        phi_min: f64,
        phi_max: f64,
    ) -> Result<DamperSpec, DamperError> {
        if !(0.0 <= phi_min && phi_min <= phi_max) {
            return Err(DamperError::InvalidParameter(format!(
                "need 0 <= phi_min <= phi_max, got ({phi_min}, {phi_max})"
            )));
        }
        Ok(DamperSpec {
            variant: DamperVariant::HeadOfLine,
            delta_l,
            delta_u,
            phi_min,
            phi_max,
            ..DamperSpec::ideal()
        })
    }

    pub fn with_te_stamping(mut self) -> DamperSpec {
        self.header_mode = HeaderMode::TeStamping;
        self
    }

    pub fn validate(&self) -> Result<(), DamperError> {
        if self.delta_l < 0.0 || self.delta_u < 0.0 {
            return Err(DamperError::InvalidParameter(
                "tolerances must be non-negative".into(),
            ));
        }
        if self.variant == DamperVariant::Ideal && (self.delta_l != 0.0 || self.delta_u != 0.0) {
            return Err(DamperError::InvalidParameter(
                "an ideal damper has zero tolerances".into(),
            ));
        }
        if !(0.0 <= self.phi_min && self.phi_min <= self.phi_max) {
            return Err(DamperError::InvalidParameter(
                "need 0 <= phi_min <= phi_max".into(),
            ));
        }
        if self.rounding != Rounding::None {
            match self.granularity {
                None => return Err(DamperError::GranularityUnset),
                Some(g) if g <= 0.0 => {
                    return Err(DamperError::InvalidParameter(
                        "granularity must be positive".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Damper-side computation error reserve folded into the tolerances of
    /// the calendar presets; zero for the other variants.
    pub fn preset_epsilon(&self) -> f64 {
        match (self.rounding, self.granularity) {
            (Rounding::Floor, Some(g)) => (self.delta_l - g).max(0.0),
            (Rounding::Ceil, Some(g)) => (self.delta_u - g).max(0.0),
            (Rounding::None, Some(g)) => (self.delta_l - g).max(0.0),
            _ => 0.0,
        }
    }
}

/// Theoretical eligibility time: arrival at the damper (local clock) plus
/// the carried header. A packet without a header has header 0 and is not
/// delayed.
pub fn theoretical_eligibility(q_local_ps: i64, header_ps: i64) -> i64 {
    q_local_ps + header_ps
}

/// Round a theoretical eligibility time to the calendar grid.
pub fn quantize(e_tilde_ps: i64, spec: &DamperSpec) -> Result<i64, DamperError> {
    let g = spec.granularity.ok_or(DamperError::GranularityUnset)?;
    let g_ps = crate::clocks::sec_to_ps(g);
    if g_ps <= 0 {
        return Err(DamperError::GranularityInvalid(g_ps));
    }
    match spec.rounding {
        Rounding::Floor => Ok(e_tilde_ps.div_euclid(g_ps) * g_ps),
        Rounding::Ceil => Ok(-((-e_tilde_ps).div_euclid(g_ps)) * g_ps),
        Rounding::None => Err(DamperError::InvalidParameter(
            "quantize requires floor or ceil rounding".into(),
        )),
    }
}

/// Re-sequencing release rule: each packet waits for its predecessors, so the
/// output is the running maximum of the tentative eligibility times (packet
/// order is the arrival order at the damper).
pub fn resequence_release(tentatives: &[i64]) -> Vec<i64> {
    let mut out = Vec::with_capacity(tentatives.len());
    let mut running = i64::MIN;
    for &e in tentatives {
        running = running.max(e);
        out.push(running);
    }
    out
}

/// Head-of-line release rule: packet `n` is examined only once packet `n-1`
/// has been released, and examination takes `phi_n`.
pub fn hol_release(
    tentatives: &[i64],
    processing: &[i64],
    phi_min_ps: i64,
    phi_max_ps: i64,
) -> Result<Vec<i64>, DamperError> {
    if tentatives.len() != processing.len() {
        return Err(DamperError::LengthMismatch(
            tentatives.len(),
            processing.len(),
        ));
    }
    let mut out = Vec::with_capacity(tentatives.len());
    let mut prev = i64::MIN;
    for (&e, &phi) in tentatives.iter().zip(processing) {
        if phi < phi_min_ps || phi > phi_max_ps {
            return Err(DamperError::ProcessingOutOfRange(phi, phi_min_ps, phi_max_ps));
        }
        let release = e.max(prev) + phi;
        out.push(release);
        prev = release;
    }
    Ok(out)
}

/// Closed form of the head-of-line recursion:
/// `E_n = max_{m <= n} { tent_m + sum_{i=m..n} phi_i }`.
///
/// Evaluated as `S_n + max_{m <= n} (tent_m - S_{m-1})` with `S` the prefix
/// sums of the processing times, which is the same maximum arranged for a
/// single pass.
pub fn hol_release_closed_form(tentatives: &[i64], processing: &[i64]) -> Vec<i64> {
    let mut out = Vec::with_capacity(tentatives.len());
    let mut prefix: i64 = 0;
    let mut best = i64::MIN;
    for (&e, &phi) in tentatives.iter().zip(processing) {
        best = best.max(e - prefix);
        prefix += phi;
        out.push(best + prefix);
    }
    out
}

/// Witness construction for the head-of-line envelope: given bounds on `x`
/// and `y` and a target `z` inside
/// `[x_min + max(a, y_min), x_max + max(a, y_max)]`, produce `(x, y)` with
/// `z = x + max(a, y)`.
pub fn hol_decompose(
    a: f64,
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    z: f64,
) -> Result<(f64, f64), DamperError> {
    let lo = x_min + a.max(y_min);
    let hi = x_max + a.max(y_max);
    if !(z >= lo && z <= hi) {
        return Err(DamperError::DecompositionInfeasible { z, lo, hi });
    }
    // Pick m = max(a, y) in the intersection of [z - x_max, z - x_min] and
    // [max(a, y_min), max(a, y_max)]; the feasibility interval guarantees it
    // is non-empty and m >= a always holds.
    let m = (z - x_max).max(a.max(y_min));
    let x = z - m;
    let y = if m > a { m } else { y_max.min(a) };
    Ok((x, y))
}

/// Earliness computed by a damper-header-update unit: the slack between the
/// configured delay bound and the measured delay, using the departure stamp
/// `w` and the arrival stamp `a` (or the upstream theoretical eligibility
/// stamp when `TeStamping` is active, which adds the upstream damper's
/// late-release tolerance).
pub fn earliness_ps(
    delta_ps: i64,
    a_ts_ps: i64,
    w_dhu_ps: i64,
    mode: HeaderMode,
    upstream_delta_u_ps: Option<i64>,
) -> Result<i64, DamperError> {
    match mode {
        HeaderMode::Default => Ok(delta_ps - (w_dhu_ps - a_ts_ps)),
        HeaderMode::TeStamping => {
            let up = upstream_delta_u_ps.ok_or(DamperError::TeStampingWithoutUpstream)?;
            Ok(delta_ps + up - (w_dhu_ps - a_ts_ps))
        }
    }
}

/// Per-component bounds on the damper-header computation error. The total
/// written into the header is the sum of the five components and never
/// exceeds `epsilon` in magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeaderErrorBudget {
    pub e_update: f64,
    pub e_ts: f64,
    pub e_tran: f64,
    pub e_acq: f64,
    pub e_clk: f64,
    pub epsilon: f64,
}

impl HeaderErrorBudget {
    /// Split a total bound evenly over the five sources.
    pub fn uniform(epsilon: f64) -> HeaderErrorBudget {
        let c = epsilon / 5.0;
        HeaderErrorBudget {
            e_update: c,
            e_ts: c,
            e_tran: c,
            e_acq: c,
            e_clk: c,
            epsilon,
        }
    }

    pub fn zero() -> HeaderErrorBudget {
        HeaderErrorBudget::uniform(0.0)
    }

    fn component_bounds(&self) -> [f64; 5] {
        [self.e_update, self.e_ts, self.e_tran, self.e_acq, self.e_clk]
    }

    /// Draw the five components and return their sum in picoseconds,
    /// rescaled when the draw exceeds the total bound.
    pub fn sample_ps<R: Rng>(&self, rng: &mut R) -> i64 {
        let mut total = 0.0;
        for b in self.component_bounds() {
            if b > 0.0 {
                total += rng.gen_range(-b..=b);
            }
        }
        if total.abs() > self.epsilon {
            total = self.epsilon * total.signum();
        }
        crate::clocks::sec_to_ps(total)
    }

    pub fn epsilon_ps(&self) -> i64 {
        crate::clocks::sec_to_ps(self.epsilon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderErrorMode {
    Random,
    PinnedPositive,
    PinnedNegative,
    Zero,
}

/// Header value actually written: the true increment plus the sampled (or
/// pinned) error.
pub fn apply_header_error<R: Rng>(
    true_increment_ps: i64,
    budget: &HeaderErrorBudget,
    mode: HeaderErrorMode,
    rng: &mut R,
) -> i64 {
    let e = match mode {
        HeaderErrorMode::Random => budget.sample_ps(rng),
        HeaderErrorMode::PinnedPositive => budget.epsilon_ps(),
        HeaderErrorMode::PinnedNegative => -budget.epsilon_ps(),
        HeaderErrorMode::Zero => 0,
    };
    true_increment_ps + e
}

/// Timestamps and eligibility milestones of one packet through a block, as
/// observed by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    pub id: u64,
    /// Arrival at the block entrance, TAI picoseconds.
    pub arrival_block_ps: i64,
    /// Arrival at the damper, damper-local picoseconds.
    pub arrival_damper_local_ps: i64,
    /// Header carried into the damper, picoseconds.
    pub header_ps: i64,
    /// `Q + H` on the damper clock.
    pub theoretical_elig_ps: i64,
    /// After tolerance/quantization, before FIFO constraints.
    pub tentative_elig_ps: i64,
    /// Actual release, damper-local picoseconds.
    pub actual_elig_ps: i64,
}
