//! Non-decreasing curve algebra: arrival and service curves, lower
//! pseudo-inverse, pointwise minimum and horizontal deviation.
//!
//! All curves map an interval length `t` (seconds) to a quantity (bytes or
//! packets). Every representation evaluates to 0 at `t = 0` and is
//! non-decreasing over `t >= 0`. Staircases are left-continuous step
//! functions: the value at a jump instant is the pre-jump value, so that
//! `curve(t)` counts what can arrive in any half-open window of length `t`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance for floating-point curve comparisons.
pub const REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum CurveError {
    #[error("negative time argument: {0}")]
    NegativeTime(f64),
    #[error("negative quantity argument: {0}")]
    NegativeQuantity(f64),
    #[error("unit mismatch: {0:?} vs {1:?}")]
    UnitMismatch(UnitKind, UnitKind),
    #[error("invalid curve parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Bytes,
    Packets,
}

/// A piecewise curve built from leaky buckets, rate-latency functions,
/// staircases, time shifts and pointwise minima.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    /// `t -> burst + rate * t` for `t > 0`, 0 at `t = 0`.
    LeakyBucket {
        rate: f64,
        burst: f64,
        unit: UnitKind,
    },
    /// `t -> rate * max(0, t - latency)`.
    RateLatency {
        rate: f64,
        latency: f64,
        unit: UnitKind,
    },
    /// Left-continuous staircase: `burst` on `(0, period]`, plus
    /// `per_period` for each further started period.
    Staircase {
        burst: f64,
        period: f64,
        per_period: f64,
        unit: UnitKind,
    },
    /// `t -> inner(t - shift)`. A negative shift advances the curve
    /// (larger values), a positive shift delays it.
    Shifted { inner: Box<Curve>, shift: f64 },
    /// Pointwise minimum of two curves with the same unit.
    Min { left: Box<Curve>, right: Box<Curve> },
    /// Pointwise sum of curves with the same unit; the aggregate of several
    /// flows at a shared port.
    Sum(Vec<Curve>),
}

impl Curve {
    pub fn leaky_bucket(rate: f64, burst: f64, unit: UnitKind) -> Curve {
        Curve::LeakyBucket { rate, burst, unit }
    }

    pub fn rate_latency(rate: f64, latency: f64, unit: UnitKind) -> Curve {
        Curve::RateLatency {
            rate,
            latency,
            unit,
        }
    }

    pub fn staircase(burst: f64, period: f64, per_period: f64, unit: UnitKind) -> Curve {
        Curve::Staircase {
            burst,
            period,
            per_period,
            unit,
        }
    }

    pub fn packet_staircase(burst_packets: f64, period: f64, packets_per_period: f64) -> Curve {
        Curve::staircase(burst_packets, period, packets_per_period, UnitKind::Packets)
    }

    /// Pointwise sum; fails on unit mismatch or an empty term list.
    pub fn sum_of(terms: Vec<Curve>) -> Result<Curve, CurveError> {
        match terms.len() {
            0 => Err(CurveError::InvalidParameter("empty aggregate".into())),
            1 => Ok(terms.into_iter().next().unwrap()),
            _ => {
                let unit = terms[0].unit();
                for t in &terms[1..] {
                    if t.unit() != unit {
                        return Err(CurveError::UnitMismatch(unit, t.unit()));
                    }
                }
                Ok(Curve::Sum(terms))
            }
        }
    }

    /// Pointwise minimum; fails on unit mismatch.
    pub fn min_of(left: Curve, right: Curve) -> Result<Curve, CurveError> {
        if left.unit() != right.unit() {
            return Err(CurveError::UnitMismatch(left.unit(), right.unit()));
        }
        Ok(Curve::Min {
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    /// Curve advanced by `advance >= 0`: `t -> self(t + advance)`.
    pub fn advanced(self, advance: f64) -> Curve {
        if advance == 0.0 {
            return self;
        }
        Curve::Shifted {
            inner: Box::new(self),
            shift: -advance,
        }
    }

    pub fn unit(&self) -> UnitKind {
        match self {
            Curve::LeakyBucket { unit, .. }
            | Curve::RateLatency { unit, .. }
            | Curve::Staircase { unit, .. } => *unit,
            Curve::Shifted { inner, .. } => inner.unit(),
            // Construction through `min_of`/`sum_of` keeps children consistent.
            Curve::Min { left, .. } => left.unit(),
            Curve::Sum(terms) => terms[0].unit(),
        }
    }

    /// Evaluate at `t >= 0`.
    pub fn eval(&self, t: f64) -> Result<f64, CurveError> {
        if t < 0.0 || t.is_nan() {
            return Err(CurveError::NegativeTime(t));
        }
        Ok(self.eval_real(t))
    }

    /// Evaluation extended to all reals: 0 for `t <= 0`.
    fn eval_real(&self, t: f64) -> f64 {
        match self {
            Curve::LeakyBucket { rate, burst, .. } => {
                if t <= 0.0 {
                    0.0
                } else {
                    burst + rate * t
                }
            }
            Curve::RateLatency { rate, latency, .. } => {
                if t <= *latency {
                    0.0
                } else {
                    rate * (t - latency)
                }
            }
            Curve::Staircase {
                burst,
                period,
                per_period,
                ..
            } => {
                if t <= 0.0 {
                    0.0
                } else {
                    burst + per_period * ((t / period).ceil() - 1.0).max(0.0)
                }
            }
            Curve::Shifted { inner, shift } => inner.eval_real(t - shift),
            Curve::Min { left, right } => left.eval_real(t).min(right.eval_real(t)),
            Curve::Sum(terms) => terms.iter().map(|c| c.eval_real(t)).sum(),
        }
    }

    /// Right limit `lim_{s -> t+} curve(s)`. Differs from `eval` only at
    /// jump instants of staircases (and at 0 for bursty curves).
    pub fn eval_right_limit(&self, t: f64) -> f64 {
        match self {
            Curve::LeakyBucket { rate, burst, .. } => {
                if t < 0.0 {
                    0.0
                } else {
                    burst + rate * t.max(0.0)
                }
            }
            Curve::RateLatency { rate, latency, .. } => {
                if t <= *latency {
                    0.0
                } else {
                    rate * (t - latency)
                }
            }
            Curve::Staircase {
                burst,
                period,
                per_period,
                ..
            } => {
                if t < 0.0 {
                    0.0
                } else {
                    burst + per_period * (t / period).floor()
                }
            }
            Curve::Shifted { inner, shift } => inner.eval_right_limit(t - shift),
            Curve::Min { left, right } => left.eval_right_limit(t).min(right.eval_right_limit(t)),
            Curve::Sum(terms) => terms.iter().map(|c| c.eval_right_limit(t)).sum(),
        }
    }

    /// Value just after the origin; the burst of an arrival curve.
    pub fn burst(&self) -> f64 {
        self.eval_right_limit(0.0)
    }

    /// Lower pseudo-inverse `inf { t >= 0 | curve(t) >= k }`, `+inf` when
    /// the level `k` is never reached.
    pub fn lower_pseudo_inverse(&self, k: f64) -> Result<f64, CurveError> {
        if k < 0.0 || k.is_nan() {
            return Err(CurveError::NegativeQuantity(k));
        }
        Ok(self.lpi(k))
    }

    fn lpi(&self, k: f64) -> f64 {
        if k <= 0.0 {
            return 0.0;
        }
        match self {
            Curve::LeakyBucket { rate, burst, .. } => {
                if k <= *burst {
                    0.0
                } else if *rate > 0.0 {
                    (k - burst) / rate
                } else {
                    f64::INFINITY
                }
            }
            Curve::RateLatency { rate, latency, .. } => {
                if *rate > 0.0 {
                    latency + k / rate
                } else {
                    f64::INFINITY
                }
            }
            Curve::Staircase {
                burst,
                period,
                per_period,
                ..
            } => {
                if k <= *burst {
                    0.0
                } else if *per_period > 0.0 {
                    period * ((k - burst) / per_period).ceil()
                } else {
                    f64::INFINITY
                }
            }
            Curve::Shifted { inner, shift } => {
                let v = inner.lpi(k);
                if v.is_infinite() {
                    v
                } else {
                    (v + shift).max(0.0)
                }
            }
            // min(l, r) >= k requires both branches >= k; the candidate sets
            // are upward closed, so the infimum is the larger of the two.
            Curve::Min { left, right } => left.lpi(k).max(right.lpi(k)),
            // No closed form for a sum: bisect on the monotone right limit.
            Curve::Sum(_) => self.lpi_bisect(k),
        }
    }

    fn lpi_bisect(&self, k: f64) -> f64 {
        if self.eval_right_limit(0.0) >= k {
            return 0.0;
        }
        let mut hi = 1e-6;
        let mut guard = 0;
        while self.eval_right_limit(hi) < k {
            hi *= 2.0;
            guard += 1;
            if guard > 120 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.eval_right_limit(mid) >= k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Long-term growth rate, used for stability checks.
    pub fn long_term_rate(&self) -> f64 {
        match self {
            Curve::LeakyBucket { rate, .. } | Curve::RateLatency { rate, .. } => *rate,
            Curve::Staircase {
                period, per_period, ..
            } => per_period / period,
            Curve::Shifted { inner, .. } => inner.long_term_rate(),
            Curve::Min { left, right } => left.long_term_rate().min(right.long_term_rate()),
            Curve::Sum(terms) => terms.iter().map(|c| c.long_term_rate()).sum(),
        }
    }

    /// `t -> self(scale * t + offset)` re-expressed in the same algebra.
    /// Requires `scale > 0` and `offset >= 0`.
    pub(crate) fn time_transform(&self, scale: f64, offset: f64) -> Curve {
        match self {
            Curve::LeakyBucket { rate, burst, unit } => Curve::LeakyBucket {
                rate: rate * scale,
                burst: burst + rate * offset,
                unit: *unit,
            },
            Curve::RateLatency {
                rate,
                latency,
                unit,
            } => {
                if offset <= *latency {
                    Curve::RateLatency {
                        rate: rate * scale,
                        latency: (latency - offset) / scale,
                        unit: *unit,
                    }
                } else {
                    // The latency is consumed by the offset; what remains is
                    // affine with an initial burst.
                    Curve::LeakyBucket {
                        rate: rate * scale,
                        burst: rate * (offset - latency),
                        unit: *unit,
                    }
                }
            }
            Curve::Staircase {
                burst,
                period,
                per_period,
                unit,
            } => {
                let rescaled = Curve::Staircase {
                    burst: *burst,
                    period: period / scale,
                    per_period: *per_period,
                    unit: *unit,
                };
                if offset == 0.0 {
                    rescaled
                } else {
                    Curve::Shifted {
                        inner: Box::new(rescaled),
                        shift: -offset / scale,
                    }
                }
            }
            Curve::Shifted { inner, shift } => inner.time_transform(scale, offset - shift * scale),
            Curve::Min { left, right } => Curve::Min {
                left: Box::new(left.time_transform(scale, offset)),
                right: Box::new(right.time_transform(scale, offset)),
            },
            Curve::Sum(terms) => Curve::Sum(
                terms
                    .iter()
                    .map(|c| c.time_transform(scale, offset))
                    .collect(),
            ),
        }
    }

    /// Abscissas where the curve changes slope or jumps, up to `horizon`.
    fn breakpoints_into(&self, shift: f64, horizon: f64, out: &mut Vec<f64>) {
        match self {
            Curve::LeakyBucket { .. } => out.push(shift.max(0.0)),
            Curve::RateLatency { latency, .. } => out.push((latency + shift).max(0.0)),
            Curve::Staircase { period, .. } => {
                let mut t = shift;
                // First jump at or after the (possibly shifted) origin.
                if shift < 0.0 {
                    let k = (-shift / period).floor();
                    t = shift + k * period;
                }
                let mut n = 0usize;
                while t <= horizon && n < 100_000 {
                    out.push(t.max(0.0));
                    t += period;
                    n += 1;
                }
            }
            Curve::Shifted { inner, shift: s } => inner.breakpoints_into(shift + s, horizon, out),
            Curve::Min { left, right } => {
                left.breakpoints_into(shift, horizon, out);
                right.breakpoints_into(shift, horizon, out);
            }
            Curve::Sum(terms) => {
                for c in terms {
                    c.breakpoints_into(shift, horizon, out);
                }
            }
        }
    }

    pub fn breakpoints(&self, horizon: f64) -> Vec<f64> {
        let mut out = vec![0.0];
        self.breakpoints_into(0.0, horizon, &mut out);
        out.retain(|t| t.is_finite() && *t >= 0.0 && *t <= horizon);
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup();
        out
    }
}

/// Horizontal deviation `sup_t inf { d >= 0 | service(t + d) >= arrival(t) }`,
/// the delay bound of a system offering `service` to traffic bounded by
/// `arrival`. Returns `+inf` when the arrival rate exceeds the service rate;
/// this is reported as a value, not an error.
pub fn horizontal_deviation(arrival: &Curve, service: &Curve) -> Result<f64, CurveError> {
    if arrival.unit() != service.unit() {
        return Err(CurveError::UnitMismatch(arrival.unit(), service.unit()));
    }
    if arrival.long_term_rate() > service.long_term_rate() * (1.0 + REL_TOL) {
        return Ok(f64::INFINITY);
    }

    // The supremum is approached just after arrival jumps and at slope
    // breakpoints of either curve; candidate instants are enriched with a
    // uniform grid between consecutive breakpoints to cover min-branch
    // crossovers.
    let horizon = deviation_horizon(arrival, service);
    let mut candidates = arrival.breakpoints(horizon);
    candidates.extend(service.breakpoints(horizon));
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let mut refined = Vec::with_capacity(candidates.len() * 9);
    for w in candidates.windows(2) {
        refined.push(w[0]);
        let step = (w[1] - w[0]) / 8.0;
        if step > 0.0 {
            for i in 1..8 {
                refined.push(w[0] + step * i as f64);
            }
        }
    }
    refined.push(*candidates.last().unwrap_or(&0.0));

    let mut sup: f64 = 0.0;
    for &t in &refined {
        let v = arrival.eval_right_limit(t);
        let d = service.lpi(v) - t;
        if d > sup {
            sup = d;
        }
    }
    Ok(sup.max(0.0))
}

/// Horizon beyond which the horizontal deviation can no longer grow: once the
/// service curve has caught up with the arrival curve's affine envelope, the
/// deviation is decreasing in `t`.
fn deviation_horizon(arrival: &Curve, service: &Curve) -> f64 {
    let ra = arrival.long_term_rate();
    let rs = service.long_term_rate();
    let base = match service {
        Curve::RateLatency { latency, .. } => *latency,
        _ => 0.0,
    };
    let spread = arrival_affine_excess(arrival);
    if rs > ra && rs > 0.0 {
        (base + spread / (rs - ra)) * 2.0 + 16.0 * coarse_period(arrival)
    } else {
        // Equal rates: the deviation saturates after the initial transient.
        base + 64.0 * coarse_period(arrival).max(1e-6)
    }
}

/// Upper bound on `arrival(t) - rate * t`, the deviation of the curve from
/// its long-term ray.
fn arrival_affine_excess(arrival: &Curve) -> f64 {
    match arrival {
        Curve::LeakyBucket { burst, .. } => *burst,
        Curve::RateLatency { .. } => 0.0,
        Curve::Staircase {
            burst, per_period, ..
        } => burst + per_period,
        Curve::Shifted { inner, shift } => {
            arrival_affine_excess(inner) + inner.long_term_rate() * (-shift).max(0.0)
        }
        Curve::Min { left, right } => arrival_affine_excess(left).min(arrival_affine_excess(right)),
        Curve::Sum(terms) => terms.iter().map(arrival_affine_excess).sum(),
    }
}

fn coarse_period(curve: &Curve) -> f64 {
    match curve {
        Curve::Staircase { period, .. } => *period,
        Curve::Shifted { inner, .. } => coarse_period(inner),
        Curve::Min { left, right } => coarse_period(left).max(coarse_period(right)),
        Curve::Sum(terms) => terms.iter().map(coarse_period).fold(0.0, f64::max),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lb(rate: f64, burst: f64) -> Curve {
        Curve::leaky_bucket(rate, burst, UnitKind::Bytes)
    }

    #[test]
    fn leaky_bucket_eval() {
        let c = lb(2e6, 10_000.0);
        // b + r*t
        assert!((c.eval(1.262e-6).unwrap() - 10_002.524).abs() < 1e-9);
        assert_eq!(c.eval(0.0).unwrap(), 0.0);
        assert_eq!(c.eval(-1.0), Err(CurveError::NegativeTime(-1.0)));
    }

    #[test]
    fn burst_free_curves_vanish_at_origin() {
        let rl = Curve::rate_latency(62.49e6, 12.5e-6, UnitKind::Bytes);
        assert_eq!(rl.eval(0.0).unwrap(), 0.0);
        assert_eq!(rl.eval(12.5e-6).unwrap(), 0.0);
        assert!(rl.eval(13.5e-6).unwrap() > 0.0);
    }

    #[test]
    fn pseudo_inverse_leaky_bucket() {
        let c = lb(2e6, 10_000.0);
        assert_eq!(c.lower_pseudo_inverse(200.0).unwrap(), 0.0);
        assert!((c.lower_pseudo_inverse(12_000.0).unwrap() - 1e-3).abs() < 1e-15);
        assert_eq!(
            c.lower_pseudo_inverse(-1.0),
            Err(CurveError::NegativeQuantity(-1.0))
        );
    }

    #[test]
    fn pseudo_inverse_staircase_step_boundary() {
        let c = Curve::packet_staircase(10.0, 8e-3, 10.0);
        assert_eq!(c.lower_pseudo_inverse(11.0).unwrap(), 8e-3);
        assert_eq!(c.lower_pseudo_inverse(10.0).unwrap(), 0.0);
        assert_eq!(c.lower_pseudo_inverse(21.0).unwrap(), 16e-3);
        // Left continuity: at the jump instant the value is still the old one.
        assert_eq!(c.eval(8e-3).unwrap(), 10.0);
        assert_eq!(c.eval_right_limit(8e-3), 20.0);
    }

    // Scan oracle: smallest grid point whose evaluation reaches k.
    fn lpi_grid_oracle(c: &Curve, k: f64, horizon: f64) -> f64 {
        let n = 2_000_000;
        for i in 0..=n {
            let t = horizon * i as f64 / n as f64;
            if c.eval_right_limit(t) >= k {
                return t;
            }
        }
        f64::INFINITY
    }

    #[test]
    fn pseudo_inverse_matches_grid_scan() {
        let c = Curve::packet_staircase(10.0, 8e-3, 10.0);
        for k in [1.0, 10.0, 11.0, 15.0, 20.0, 21.0, 35.0] {
            let exact = c.lower_pseudo_inverse(k).unwrap();
            let scanned = lpi_grid_oracle(&c, k, 64e-3);
            assert!(
                (exact - scanned).abs() <= 64e-3 / 2_000_000.0 + 1e-12,
                "k={k}: exact {exact} vs scanned {scanned}"
            );
        }
    }

    #[test]
    fn pseudo_inverse_non_decreasing_in_k() {
        let c = Curve::min_of(
            lb(2e6, 10_000.0),
            Curve::staircase(1470.0, 8e-3, 1470.0, UnitKind::Bytes),
        )
        .unwrap();
        let mut prev = 0.0;
        for i in 0..500 {
            let k = i as f64 * 37.0;
            let v = c.lower_pseudo_inverse(k).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn eval_of_pseudo_inverse_reaches_level() {
        let c = lb(2e6, 10_000.0);
        for k in [1.0, 9_999.0, 10_000.0, 10_001.0, 50_000.0] {
            let t = c.lower_pseudo_inverse(k).unwrap();
            assert!(c.eval_right_limit(t) >= k - k.abs() * 1e-12);
        }
    }

    #[test]
    fn horizontal_deviation_closed_form_pair() {
        let a = lb(2e6, 10_000.0);
        let b = Curve::rate_latency(62.49e6, 12.5e-6, UnitKind::Bytes);
        let d = horizontal_deviation(&a, &b).unwrap();
        let expect = 12.5e-6 + 10_000.0 / 62.49e6;
        assert!((d - expect).abs() / expect < 1e-9, "{d} vs {expect}");
    }

    #[test]
    fn horizontal_deviation_unstable_is_infinite() {
        let a = lb(62.49e6 + 1.0, 64.0);
        let b = Curve::rate_latency(62.49e6, 12.5e-6, UnitKind::Bytes);
        assert_eq!(horizontal_deviation(&a, &b).unwrap(), f64::INFINITY);
    }

    #[test]
    fn horizontal_deviation_unit_mismatch() {
        let a = Curve::packet_staircase(10.0, 8e-3, 10.0);
        let b = Curve::rate_latency(62.49e6, 12.5e-6, UnitKind::Bytes);
        assert!(matches!(
            horizontal_deviation(&a, &b),
            Err(CurveError::UnitMismatch(_, _))
        ));
    }

    // Brute-force grid oracle for the horizontal deviation.
    fn hdev_grid_oracle(a: &Curve, b: &Curve, horizon: f64, n: usize) -> f64 {
        let mut sup: f64 = 0.0;
        for i in 0..=n {
            let t = horizon * i as f64 / n as f64;
            let v = a.eval_right_limit(t);
            let d = b.lower_pseudo_inverse(v).unwrap() - t;
            sup = sup.max(d);
        }
        sup
    }

    #[test]
    fn horizontal_deviation_staircase_matches_grid() {
        // 147-byte packets, 10 per 8 ms, versus the class service curve.
        let a = Curve::staircase(1470.0, 8e-3, 1470.0, UnitKind::Bytes);
        let b = Curve::rate_latency(62.49e6, 12.5e-6, UnitKind::Bytes);
        let d = horizontal_deviation(&a, &b).unwrap();
        let oracle = hdev_grid_oracle(&a, &b, 80e-3, 400_000);
        assert!((d - oracle).abs() <= 1e-9 + oracle * 1e-6, "{d} vs {oracle}");
    }

    #[test]
    fn min_is_pointwise_minimum_and_commutes() {
        let a = lb(2e6, 10_000.0);
        let b = lb(3e6, 5_000.0);
        let m = Curve::min_of(a.clone(), b.clone()).unwrap();
        let m_rev = Curve::min_of(b.clone(), a.clone()).unwrap();
        for i in 0..200 {
            let t = i as f64 * 1e-4;
            let lhs = m.eval(t).unwrap();
            let rhs = a.eval(t).unwrap().min(b.eval(t).unwrap());
            assert!((lhs - rhs).abs() <= rhs.abs() * 1e-12 + 1e-12);
            let rev = m_rev.eval(t).unwrap();
            assert!((lhs - rev).abs() <= rhs.abs() * 1e-12 + 1e-12);
        }
    }

    #[test]
    fn advanced_staircase_grows_burst_by_one_period() {
        let c = Curve::packet_staircase(10.0, 8e-3, 10.0);
        let adv = c.advanced(8e-3);
        assert_eq!(adv.burst(), 20.0);
    }

    #[test]
    fn sum_aggregates_and_inverts() {
        let terms: Vec<Curve> = (0..5)
            .map(|i| {
                Curve::staircase(1470.0, 8e-3, 1470.0, UnitKind::Bytes).advanced(i as f64 * 1e-6)
            })
            .collect();
        let sum = Curve::sum_of(terms.clone()).unwrap();
        for i in 0..100 {
            let t = i as f64 * 1e-3;
            let direct: f64 = terms.iter().map(|c| c.eval(t).unwrap()).sum();
            assert!((sum.eval(t).unwrap() - direct).abs() < 1e-9);
        }
        // Pseudo-inverse lands where the sum first reaches the level.
        let k = 5.0 * 1470.0 + 1.0;
        let t = sum.lower_pseudo_inverse(k).unwrap();
        assert!(sum.eval_right_limit(t) >= k);
        assert!(sum.eval_right_limit(t * (1.0 - 1e-6) - 1e-12) < k);
        // Unit mixing is rejected.
        assert!(Curve::sum_of(vec![
            Curve::leaky_bucket(1.0, 1.0, UnitKind::Bytes),
            Curve::packet_staircase(1.0, 1.0, 1.0),
        ])
        .is_err());
    }

    #[test]
    fn shifted_negative_then_pseudo_inverse_clamps_at_zero() {
        let c = lb(2e6, 10_000.0).advanced(2e-6);
        assert_eq!(c.lower_pseudo_inverse(200.0).unwrap(), 0.0);
        assert!((c.burst() - 10_004.0).abs() < 1e-9);
    }
}
