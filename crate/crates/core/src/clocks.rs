//! Non-ideal clock model: deviation bounds between a local clock and TAI,
//! re-expression of arrival curves across clocks, and synthesizable clock
//! trajectories for the simulator.
//!
//! A clock is described by a stability bound `rho >= 1`, a timing-jitter
//! bound `eta >= 0` (charged once per measured delay) and a time-error bound
//! `omega > 0`. A non-synchronized clock carries `omega = +inf`, which
//! disables the synchronization branch of every `min(., 2*omega)` term.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::Curve;

#[derive(Debug, Error, PartialEq)]
pub enum ClockError {
    #[error("negative local delay: {0}")]
    NegativeDelay(f64),
    #[error("invalid clock parameter: {0}")]
    InvalidParameter(String),
    #[error("adversarial synchronized trajectory requires a finite time-error bound")]
    SyncModeUnbounded,
}

/// Network-wide clock parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockModel {
    /// Stability bound, `>= 1`.
    pub rho: f64,
    /// Timing-jitter bound in seconds, `>= 0`.
    pub eta: f64,
    /// Time-error bound in seconds; `+inf` for non-synchronized clocks.
    pub omega: f64,
}

impl ClockModel {
    pub fn new(rho_minus_one: f64, eta: f64, omega: f64) -> Result<ClockModel, ClockError> {
        if !(rho_minus_one >= 0.0) {
            return Err(ClockError::InvalidParameter(format!(
                "rho - 1 must be >= 0, got {rho_minus_one}"
            )));
        }
        if !(eta >= 0.0) {
            return Err(ClockError::InvalidParameter(format!(
                "eta must be >= 0, got {eta}"
            )));
        }
        if !(omega > 0.0) {
            return Err(ClockError::InvalidParameter(format!(
                "omega must be > 0 (use +inf for non-synchronized), got {omega}"
            )));
        }
        Ok(ClockModel {
            rho: 1.0 + rho_minus_one,
            eta,
            omega,
        })
    }

    /// Perfect clock: no drift, no jitter, synchronization irrelevant.
    pub fn ideal() -> ClockModel {
        ClockModel {
            rho: 1.0,
            eta: 0.0,
            omega: f64::INFINITY,
        }
    }

    /// TSN profile defaults with gPTP synchronization.
    pub fn gptp() -> ClockModel {
        ClockModel::new(1e-4, 2e-9, 1e-6).unwrap()
    }

    /// TSN profile defaults with White Rabbit synchronization.
    pub fn white_rabbit() -> ClockModel {
        ClockModel::new(1e-4, 2e-9, 100e-9).unwrap()
    }

    /// TSN profile defaults with NTP synchronization.
    pub fn ntp() -> ClockModel {
        ClockModel::new(1e-4, 2e-9, 100e-3).unwrap()
    }

    /// TSN profile defaults without synchronization.
    pub fn free_running() -> ClockModel {
        ClockModel::new(1e-4, 2e-9, f64::INFINITY).unwrap()
    }

    pub fn preset(name: &str) -> Result<ClockModel, ClockError> {
        match name {
            "gptp" => Ok(ClockModel::gptp()),
            "white_rabbit" => Ok(ClockModel::white_rabbit()),
            "ntp" => Ok(ClockModel::ntp()),
            "free_running" => Ok(ClockModel::free_running()),
            "ideal" => Ok(ClockModel::ideal()),
            other => Err(ClockError::InvalidParameter(format!(
                "unknown clock preset `{other}`"
            ))),
        }
    }

    pub fn rho_minus_one(&self) -> f64 {
        self.rho - 1.0
    }

    pub fn is_synchronized(&self) -> bool {
        self.omega.is_finite()
    }

    /// Bounds on `d_TAI - d_local` for a delay measured as `d_local` on this
    /// clock: the true TAI duration lies in `[d_local + lo, d_local + hi]`.
    pub fn delay_deviation_bounds(&self, d_local: f64) -> Result<DeviationInterval, ClockError> {
        if !(d_local >= 0.0) {
            return Err(ClockError::NegativeDelay(d_local));
        }
        let hi = ((self.rho - 1.0) * d_local + self.eta).min(2.0 * self.omega);
        let lo = -(((1.0 - 1.0 / self.rho) * d_local + self.eta / self.rho).min(2.0 * self.omega));
        Ok(DeviationInterval { lo, hi })
    }

    /// Re-express an arrival curve measured on this clock in TAI:
    /// `t -> alpha(min(rho * t + eta, t + 2 * omega))`.
    pub fn arrival_curve_to_tai(&self, alpha: &Curve) -> Curve {
        let drift = alpha.time_transform(self.rho, self.eta);
        if !self.omega.is_finite() {
            return drift;
        }
        if self.rho == 1.0 && self.eta == 0.0 {
            // The drift branch is the identity and always the tighter one.
            return drift;
        }
        let sync = alpha.time_transform(1.0, 2.0 * self.omega);
        Curve::Min {
            left: Box::new(drift),
            right: Box::new(sync),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationInterval {
    pub lo: f64,
    pub hi: f64,
}

/// How a simulated clock relates to TAI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMode {
    /// Piecewise-affine wander within the stability and time-error envelope.
    Random,
    /// Every measured local delay `d` corresponds to `rho * d + eta` in TAI.
    FastAdversarial,
    /// Every measured local delay `d` corresponds to `(d - eta) / rho` in TAI.
    SlowAdversarial,
    /// Every measured local delay `d` corresponds to `d + 2 * omega` in TAI.
    SyncAdversarialFast,
    /// Every measured local delay `d` corresponds to `d - 2 * omega` in TAI.
    SyncAdversarialSlow,
}

/// `rho - 1` as an exact rational, so adversarial trajectories stay exact in
/// integer picoseconds whenever the scripted quantities are grid-aligned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriftRational {
    pub num: i128,
    pub den: i128,
}

impl DriftRational {
    pub fn from_f64(rho_minus_one: f64) -> DriftRational {
        let mut den: i128 = 1;
        for _ in 0..12 {
            let scaled = rho_minus_one * den as f64;
            if (scaled - scaled.round()).abs() < 1e-9 && scaled.round() >= 0.0 {
                return DriftRational {
                    num: scaled.round() as i128,
                    den,
                };
            }
            den *= 10;
        }
        DriftRational {
            num: (rho_minus_one * 1e12).round() as i128,
            den: 1_000_000_000_000,
        }
    }
}

fn div_round(n: i128, d: i128) -> i128 {
    // Round half away from zero; d > 0.
    if n >= 0 {
        (n + d / 2) / d
    } else {
        -((-n + d / 2) / d)
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    tai0: i64,
    local0: i64,
    /// Slope is `1 + dx / SLOPE_DEN` over `[tai0, tai0 + len)`.
    dx: i64,
    len: i64,
}

const SLOPE_DEN: i128 = 1_000_000_000;

/// Realized mapping from TAI instants to local-time instants.
///
/// Random trajectories are explicit piecewise-affine non-decreasing maps.
/// Adversarial trajectories are defined by their per-measurement semantics:
/// absolute local readings are anchored at the trace epoch, and measured
/// durations follow the corresponding extreme of the deviation envelope.
#[derive(Debug, Clone)]
pub enum ClockTrajectory {
    Ideal,
    PiecewiseAffine { segments: Vec<Segment2>, omega_ps: Option<i64> },
    FastDrift { drift: DriftRational, eta_ps: i64 },
    SlowDrift { drift: DriftRational, eta_ps: i64 },
    FastSync { two_omega_ps: i64 },
    SlowSync { two_omega_ps: i64 },
}

/// Public affine segment of a random trajectory.
#[derive(Debug, Clone, Copy)]
pub struct Segment2 {
    pub tai0: i64,
    pub local0: i64,
    pub dx: i64,
    pub len: i64,
}

impl From<Segment> for Segment2 {
    fn from(s: Segment) -> Segment2 {
        Segment2 {
            tai0: s.tai0,
            local0: s.local0,
            dx: s.dx,
            len: s.len,
        }
    }
}

impl ClockTrajectory {
    /// Sample a trajectory for a clock with the given model.
    ///
    /// `horizon_ps` bounds the TAI span over which random trajectories
    /// wander; beyond it the map continues at slope one, which keeps the
    /// time-error bound satisfied.
    pub fn sample(
        clock: &ClockModel,
        seed: u64,
        mode: TrajectoryMode,
        horizon_ps: i64,
    ) -> Result<ClockTrajectory, ClockError> {
        let drift = DriftRational::from_f64(clock.rho_minus_one());
        let eta_ps = sec_to_ps(clock.eta);
        match mode {
            TrajectoryMode::Random => {
                if clock.rho == 1.0 && clock.eta == 0.0 {
                    return Ok(ClockTrajectory::Ideal);
                }
                Ok(ClockTrajectory::sample_affine(clock, seed, horizon_ps))
            }
            TrajectoryMode::FastAdversarial => Ok(ClockTrajectory::FastDrift { drift, eta_ps }),
            TrajectoryMode::SlowAdversarial => Ok(ClockTrajectory::SlowDrift { drift, eta_ps }),
            TrajectoryMode::SyncAdversarialFast => {
                if !clock.omega.is_finite() {
                    return Err(ClockError::SyncModeUnbounded);
                }
                Ok(ClockTrajectory::FastSync {
                    two_omega_ps: sec_to_ps(2.0 * clock.omega),
                })
            }
            TrajectoryMode::SyncAdversarialSlow => {
                if !clock.omega.is_finite() {
                    return Err(ClockError::SyncModeUnbounded);
                }
                Ok(ClockTrajectory::SlowSync {
                    two_omega_ps: sec_to_ps(2.0 * clock.omega),
                })
            }
        }
    }

    fn sample_affine(clock: &ClockModel, seed: u64, horizon_ps: i64) -> ClockTrajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Stay strictly inside the stability envelope so that integer
        // rounding cannot push a measured pair outside the bounds.
        let max_dx = ((clock.rho_minus_one() * 0.98) * SLOPE_DEN as f64) as i64;
        let omega_ps = if clock.omega.is_finite() {
            Some((sec_to_ps(clock.omega) - 2).max(0))
        } else {
            None
        };

        let mut segments = Vec::new();
        let mut tai0: i64 = 0;
        let mut local0: i64 = 0;
        while tai0 < horizon_ps.max(1) {
            let len = rng.gen_range(500_000_000..1_500_000_000); // 0.5 ms .. 1.5 ms
            let mut dx = if max_dx > 0 {
                rng.gen_range(-max_dx..=max_dx)
            } else {
                0
            };
            if let Some(w) = omega_ps {
                // Keep the offset walk |local - tai| within the time-error
                // bound; flip the drift direction when it would escape.
                let off_end = (local0 - tai0) as i128 + (len as i128 * dx as i128) / SLOPE_DEN;
                if off_end.unsigned_abs() as i64 > w {
                    dx = -dx;
                    let flipped = (local0 - tai0) as i128 + (len as i128 * dx as i128) / SLOPE_DEN;
                    if flipped.unsigned_abs() as i64 > w {
                        dx = 0;
                    }
                }
            }
            segments.push(Segment2 {
                tai0,
                local0,
                dx,
                len,
            });
            local0 += len + div_round(len as i128 * dx as i128, SLOPE_DEN) as i64;
            tai0 += len;
        }
        ClockTrajectory::PiecewiseAffine {
            segments,
            omega_ps,
        }
    }

    /// Local clock reading at a TAI instant. For adversarial trajectories the
    /// reading is anchored at the trace epoch with the pure-drift map; only
    /// measured durations carry the per-measurement adversarial terms.
    pub fn local_at(&self, tai_ps: i64) -> i64 {
        match self {
            ClockTrajectory::Ideal
            | ClockTrajectory::FastSync { .. }
            | ClockTrajectory::SlowSync { .. } => tai_ps,
            ClockTrajectory::FastDrift { drift, .. } => {
                // local such that tai = rho * local
                let n = tai_ps as i128 * drift.den;
                div_round(n, drift.den + drift.num) as i64
            }
            ClockTrajectory::SlowDrift { drift, .. } => {
                // local = rho * tai
                tai_ps + div_round(tai_ps as i128 * drift.num, drift.den) as i64
            }
            ClockTrajectory::PiecewiseAffine { segments, .. } => {
                let seg = match segments.binary_search_by(|s| s.tai0.cmp(&tai_ps)) {
                    Ok(i) => &segments[i],
                    Err(0) => {
                        return tai_ps; // before the first segment: slope one
                    }
                    Err(i) => &segments[i - 1],
                };
                let dt = (tai_ps - seg.tai0) as i128;
                if dt > seg.len as i128 {
                    // Beyond the sampled horizon the map continues at slope one.
                    let local_end =
                        seg.local0 as i128 + seg.len as i128 + div_round(seg.len as i128 * seg.dx as i128, SLOPE_DEN);
                    (local_end + (dt - seg.len as i128)) as i64
                } else {
                    (seg.local0 as i128 + dt + div_round(dt * seg.dx as i128, SLOPE_DEN)) as i64
                }
            }
        }
    }

    /// TAI instant at which the local clock reaches `local_ps` (inverse of
    /// [`local_at`], using the anchored map for adversarial trajectories).
    pub fn tai_at_local(&self, local_ps: i64) -> i64 {
        match self {
            ClockTrajectory::Ideal
            | ClockTrajectory::FastSync { .. }
            | ClockTrajectory::SlowSync { .. } => local_ps,
            ClockTrajectory::FastDrift { drift, .. } => {
                local_ps + div_round(local_ps as i128 * drift.num, drift.den) as i64
            }
            ClockTrajectory::SlowDrift { drift, .. } => {
                div_round(local_ps as i128 * drift.den, drift.den + drift.num) as i64
            }
            ClockTrajectory::PiecewiseAffine { segments, .. } => {
                let seg = match segments.binary_search_by(|s| s.local0.cmp(&local_ps)) {
                    Ok(i) => &segments[i],
                    Err(0) => return local_ps,
                    Err(i) => &segments[i - 1],
                };
                let local_end = seg.local0 as i128
                    + seg.len as i128
                    + div_round(seg.len as i128 * seg.dx as i128, SLOPE_DEN);
                let dl = (local_ps - seg.local0) as i128;
                if local_ps as i128 > local_end {
                    (seg.tai0 as i128 + seg.len as i128 + (local_ps as i128 - local_end)) as i64
                } else {
                    let dt = div_round(dl * SLOPE_DEN, SLOPE_DEN + seg.dx as i128);
                    (seg.tai0 as i128 + dt) as i64
                }
            }
        }
    }

    /// Duration in local time measured between two TAI instants.
    pub fn local_elapsed(&self, tai_start_ps: i64, tai_end_ps: i64) -> i64 {
        debug_assert!(tai_end_ps >= tai_start_ps);
        match self {
            ClockTrajectory::Ideal => tai_end_ps - tai_start_ps,
            ClockTrajectory::FastDrift { drift, eta_ps } => {
                let d = (tai_end_ps - tai_start_ps) as i128 - *eta_ps as i128;
                div_round(d * drift.den, drift.den + drift.num) as i64
            }
            ClockTrajectory::SlowDrift { drift, eta_ps } => {
                let d = (tai_end_ps - tai_start_ps) as i128;
                (d + div_round(d * drift.num, drift.den)) as i64 + eta_ps
            }
            ClockTrajectory::FastSync { two_omega_ps } => {
                tai_end_ps - tai_start_ps - two_omega_ps
            }
            ClockTrajectory::SlowSync { two_omega_ps } => {
                tai_end_ps - tai_start_ps + two_omega_ps
            }
            ClockTrajectory::PiecewiseAffine { .. } => {
                self.local_at(tai_end_ps) - self.local_at(tai_start_ps)
            }
        }
    }

    /// TAI instant after a duration of `d_local_ps` has elapsed on this clock
    /// starting from `tai_start_ps`.
    pub fn tai_after_local(&self, tai_start_ps: i64, d_local_ps: i64) -> i64 {
        match self {
            ClockTrajectory::Ideal => tai_start_ps + d_local_ps,
            ClockTrajectory::FastDrift { drift, eta_ps } => {
                let extra = div_round(d_local_ps as i128 * drift.num, drift.den) as i64;
                tai_start_ps + d_local_ps + extra + eta_ps
            }
            ClockTrajectory::SlowDrift { drift, eta_ps } => {
                let d = (d_local_ps - eta_ps) as i128;
                tai_start_ps + div_round(d * drift.den, drift.den + drift.num) as i64
            }
            ClockTrajectory::FastSync { two_omega_ps } => {
                tai_start_ps + d_local_ps + two_omega_ps
            }
            ClockTrajectory::SlowSync { two_omega_ps } => {
                tai_start_ps + d_local_ps - two_omega_ps
            }
            ClockTrajectory::PiecewiseAffine { .. } => {
                self.tai_at_local(self.local_at(tai_start_ps) + d_local_ps)
            }
        }
    }
}

pub fn sec_to_ps(s: f64) -> i64 {
    if s.is_infinite() {
        i64::MAX / 4
    } else {
        (s * 1e12).round() as i64
    }
}

pub fn ps_to_sec(ps: i64) -> f64 {
    ps as f64 * 1e-12
}
