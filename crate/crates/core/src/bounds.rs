//! Analytic delay and jitter bounds for blocks of jitter-compensated and
//! bounded-delay systems terminated by a damper, under network-wide clock
//! parameters.
//!
//! A block is an ordered sequence of JCS and BDS elements ending in one
//! damper. The bounds combine four contributions: the configured delay
//! bounds themselves, the damper tolerance envelope, the accumulated
//! header-computation errors, and the clock penalties `psi` (per block) or
//! `Psi` (end to end, with theoretical-eligibility stamping).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clocks::ClockModel;
use crate::curves::{Curve, CurveError, UnitKind};
use crate::dampers::{DamperError, DamperSpec, DamperVariant, HeaderMode};

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("damper variant {found:?} not covered by this result; {hint}")]
    WrongVariant {
        found: DamperVariant,
        hint: &'static str,
    },
    #[error("block contains a non-FIFO element; use the non-FIFO result with a prefix jitter")]
    NonFifoElement,
    #[error("header mode must be theoretical-eligibility stamping for the end-to-end result")]
    HeaderModeMismatch,
    #[error("empty part list")]
    EmptyParts,
    #[error("negative argument: {0}")]
    NegativeArgument(f64),
    #[error("element index {0} out of range ({1} elements)")]
    ElementIndexOutOfRange(usize, usize),
    #[error("head-of-line queuing bound needs a packet-unit arrival curve")]
    PacketCurveRequired,
    #[error("head-of-line queuing bound did not converge within {0} packets")]
    ThetaIterationCap(usize),
    #[error(transparent)]
    Damper(#[from] DamperError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("invalid block: {0}")]
    InvalidBlock(String),
}

/// Jitter-compensated system: a delay element whose jitter is compensated by
/// the downstream damper. `delta` is the local-time delay bound used by its
/// header-update unit and `epsilon` bounds the header-computation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcsSpec {
    pub delta: f64,
    pub epsilon: f64,
    pub fifo: bool,
    pub clock_id: Option<u32>,
}

impl JcsSpec {
    pub fn new(delta: f64, epsilon: f64) -> JcsSpec {
        JcsSpec {
            delta,
            epsilon,
            fifo: true,
            clock_id: None,
        }
    }
}

/// Bounded-delay system: known TAI delay interval and jitter bound, not
/// compensated by any damper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdsSpec {
    pub pi_lower: f64,
    pub pi_upper: f64,
    pub nu: f64,
    pub fifo: bool,
}

impl BdsSpec {
    pub fn constant(delay: f64) -> BdsSpec {
        BdsSpec {
            pi_lower: delay,
            pi_upper: delay,
            nu: 0.0,
            fifo: true,
        }
    }

    pub fn new(pi_lower: f64, pi_upper: f64, nu: f64) -> BdsSpec {
        BdsSpec {
            pi_lower,
            pi_upper,
            nu,
            fifo: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Element {
    Jcs(JcsSpec),
    Bds(BdsSpec),
}

impl Element {
    pub fn is_fifo(&self) -> bool {
        match self {
            Element::Jcs(j) => j.fifo,
            Element::Bds(b) => b.fifo,
        }
    }
}

/// Ordered elements terminated by one damper, analyzed as a unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub elements: Vec<Element>,
    pub damper: DamperSpec,
    pub clock: ClockModel,
    /// Number of distinct clocks among the JCSs, when known to be smaller
    /// than the JCS count; tightens the synchronization branch of `psi`.
    pub distinct_clock_count: Option<usize>,
}

impl Block {
    pub fn new(elements: Vec<Element>, damper: DamperSpec, clock: ClockModel) -> Block {
        Block {
            elements,
            damper,
            clock,
            distinct_clock_count: None,
        }
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        self.damper.validate()?;
        for e in &self.elements {
            match e {
                Element::Jcs(j) => {
                    if j.delta < 0.0 || j.epsilon < 0.0 {
                        return Err(BoundsError::InvalidBlock(
                            "JCS delta and epsilon must be non-negative".into(),
                        ));
                    }
                }
                Element::Bds(b) => {
                    if !(0.0 <= b.pi_lower && b.pi_lower <= b.pi_upper) || b.nu < 0.0 {
                        return Err(BoundsError::InvalidBlock(
                            "BDS needs 0 <= pi_lower <= pi_upper and nu >= 0".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn jcs_iter(&self) -> impl Iterator<Item = &JcsSpec> {
        self.elements.iter().filter_map(|e| match e {
            Element::Jcs(j) => Some(j),
            Element::Bds(_) => None,
        })
    }

    pub fn bds_iter(&self) -> impl Iterator<Item = &BdsSpec> {
        self.elements.iter().filter_map(|e| match e {
            Element::Bds(b) => Some(b),
            Element::Jcs(_) => None,
        })
    }

    pub fn jcs_count(&self) -> usize {
        self.jcs_iter().count()
    }

    pub fn all_fifo(&self) -> bool {
        self.elements.iter().all(|e| e.is_fifo())
    }

    /// Distinct JCS clock count for the synchronization penalty: an explicit
    /// override wins, else distinct declared clock ids, else one clock per
    /// JCS.
    fn clock_count(&self) -> usize {
        if let Some(x) = self.distinct_clock_count {
            return x;
        }
        let ids: Vec<Option<u32>> = self.jcs_iter().map(|j| j.clock_id).collect();
        if !ids.is_empty() && ids.iter().all(|i| i.is_some()) {
            let mut distinct: Vec<u32> = ids.into_iter().flatten().collect();
            distinct.sort_unstable();
            distinct.dedup();
            distinct.len()
        } else {
            self.jcs_count()
        }
    }
}

/// Additive decomposition of a jitter bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    /// Damper tolerances, BDS jitters, and any head-of-line queuing term.
    pub basic: f64,
    /// Header-computation errors: twice the per-JCS error bounds.
    pub error_term: f64,
    /// Clock penalties `psi_upper + psi_lower`.
    pub clock_term: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsResult {
    pub d_upper: f64,
    pub d_lower: f64,
    pub jitter: f64,
    pub psi_upper: f64,
    pub psi_lower: f64,
    pub breakdown: Breakdown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReorderMetrics {
    /// Reordering late-time offset: re-sequencing buffer timeout, seconds.
    pub rto: f64,
    /// Reordering byte offset: re-sequencing buffer size, bytes.
    pub rbo: f64,
}

struct BlockSums {
    k: usize,
    sum_delta: f64,
    sum_eps: f64,
    sum_pi_upper: f64,
    sum_pi_lower: f64,
    sum_nu: f64,
}

fn block_sums(block: &Block) -> BlockSums {
    let mut s = BlockSums {
        k: 0,
        sum_delta: 0.0,
        sum_eps: 0.0,
        sum_pi_upper: 0.0,
        sum_pi_lower: 0.0,
        sum_nu: 0.0,
    };
    for e in &block.elements {
        match e {
            Element::Jcs(j) => {
                s.k += 1;
                s.sum_delta += j.delta;
                s.sum_eps += j.epsilon;
            }
            Element::Bds(b) => {
                s.sum_pi_upper += b.pi_upper;
                s.sum_pi_lower += b.pi_lower;
                s.sum_nu += b.nu;
            }
        }
    }
    s
}

/// Clock penalties of a block: the worst-case total measurement deviation
/// accumulated over the K JCS delays and the damper delay, each taken at the
/// tighter of the drift and synchronization envelopes.
pub fn psi_terms(block: &Block) -> (f64, f64) {
    let s = block_sums(block);
    let c = &block.clock;
    let x = block.clock_count();
    let k1 = (s.k + 1) as f64;
    let sync = 2.0 * (x as f64 + 1.0) * c.omega;

    let drift_up = (c.rho - 1.0) * (block.damper.delta_u + s.sum_delta + s.sum_eps) + k1 * c.eta;
    let psi_upper = drift_up.min(sync);

    let drift_lo = (1.0 - 1.0 / c.rho) * (-block.damper.delta_l + s.sum_delta - s.sum_eps)
        + k1 * c.eta / c.rho;
    let psi_lower = drift_lo.min(sync);

    (psi_upper, psi_lower)
}

/// Core bound arithmetic shared by every per-block result (the FIFO
/// re-sequencing case reproduces it bit for bit).
pub(crate) fn core_block_bounds(block: &Block) -> Result<BoundsResult, BoundsError> {
    block.validate()?;
    let s = block_sums(block);
    let (psi_upper, psi_lower) = psi_terms(block);
    let d = &block.damper;

    let d_upper = s.sum_delta + s.sum_pi_upper + d.delta_u + s.sum_eps + psi_upper;
    let d_lower = s.sum_delta + s.sum_pi_lower - d.delta_l - s.sum_eps - psi_lower;
    let basic = s.sum_nu + d.delta_u + d.delta_l;
    let error_term = 2.0 * s.sum_eps;
    let clock_term = psi_upper + psi_lower;
    let jitter = basic + error_term + clock_term;

    Ok(BoundsResult {
        d_upper,
        d_lower,
        jitter,
        psi_upper,
        psi_lower,
        breakdown: Breakdown {
            basic,
            error_term,
            clock_term,
        },
    })
}

/// Delay and jitter bounds of a block ending in an ideal damper or a damper
/// with tolerances. Holds whether the JCSs and BDSs are FIFO or not.
pub fn theorem1_bounds(block: &Block) -> Result<BoundsResult, BoundsError> {
    match block.damper.variant {
        DamperVariant::Ideal | DamperVariant::Tolerance => core_block_bounds(block),
        found @ DamperVariant::Resequencing => Err(BoundsError::WrongVariant {
            found,
            hint: "use the re-sequencing result",
        }),
        found @ DamperVariant::HeadOfLine => Err(BoundsError::WrongVariant {
            found,
            hint: "use the head-of-line result",
        }),
    }
}

/// A component of an end-to-end path: either an analyzed block or a raw
/// bounded-delay segment outside any block.
#[derive(Debug, Clone, PartialEq)]
pub enum PathPart {
    Analyzed(BoundsResult),
    Bds(BdsSpec),
}

/// End-to-end assembly: componentwise sums of the delay and jitter bounds;
/// a raw BDS contributes its delay interval and jitter.
pub fn e2e_sum(parts: &[PathPart]) -> Result<BoundsResult, BoundsError> {
    if parts.is_empty() {
        return Err(BoundsError::EmptyParts);
    }
    let mut total = BoundsResult {
        d_upper: 0.0,
        d_lower: 0.0,
        jitter: 0.0,
        psi_upper: 0.0,
        psi_lower: 0.0,
        breakdown: Breakdown {
            basic: 0.0,
            error_term: 0.0,
            clock_term: 0.0,
        },
    };
    for part in parts {
        match part {
            PathPart::Analyzed(b) => {
                total.d_upper += b.d_upper;
                total.d_lower += b.d_lower;
                total.jitter += b.jitter;
                total.psi_upper += b.psi_upper;
                total.psi_lower += b.psi_lower;
                total.breakdown.basic += b.breakdown.basic;
                total.breakdown.error_term += b.breakdown.error_term;
                total.breakdown.clock_term += b.breakdown.clock_term;
            }
            PathPart::Bds(b) => {
                total.d_upper += b.pi_upper;
                total.d_lower += b.pi_lower;
                total.jitter += b.nu;
                total.breakdown.basic += b.nu;
            }
        }
    }
    Ok(total)
}

/// End-to-end bounds over N concatenated blocks whose dampers all use
/// theoretical-eligibility stamping; the tolerance jitter of every
/// intermediate damper is compensated downstream, so only the last damper's
/// envelope remains in the jitter bound.
pub fn theorem2_te_bounds(blocks: &[Block]) -> Result<BoundsResult, BoundsError> {
    if blocks.is_empty() {
        return Err(BoundsError::EmptyParts);
    }
    let mut m = 0usize;
    let mut x_total = 0usize;
    let mut delta_e2e = 0.0;
    let mut eps_e2e = 0.0;
    let mut pi_u = 0.0;
    let mut pi_l = 0.0;
    let mut nu = 0.0;
    let mut sum_delta_u = 0.0;
    for b in blocks {
        if b.damper.header_mode != HeaderMode::TeStamping {
            return Err(BoundsError::HeaderModeMismatch);
        }
        match b.damper.variant {
            DamperVariant::Ideal | DamperVariant::Tolerance => {}
            found => {
                return Err(BoundsError::WrongVariant {
                    found,
                    hint: "the end-to-end stamping result covers tolerance dampers",
                })
            }
        }
        b.validate()?;
        let s = block_sums(b);
        m += s.k;
        x_total += b.clock_count();
        delta_e2e += s.sum_delta;
        eps_e2e += s.sum_eps;
        pi_u += s.sum_pi_upper;
        pi_l += s.sum_pi_lower;
        nu += s.sum_nu;
        sum_delta_u += b.damper.delta_u;
    }
    let n = blocks.len();
    let last = &blocks[n - 1].damper;
    let clock = &blocks[0].clock;
    let count = (m + n) as f64;
    let sync = 2.0 * (x_total + n) as f64 * clock.omega;

    let psi_upper =
        ((clock.rho - 1.0) * (delta_e2e + sum_delta_u + eps_e2e) + count * clock.eta).min(sync);
    let psi_lower = ((1.0 - 1.0 / clock.rho)
        * (delta_e2e - last.delta_l + (sum_delta_u - last.delta_u) + eps_e2e)
        + count * clock.eta / clock.rho)
        .min(sync);

    let d_upper = delta_e2e + pi_u + sum_delta_u + eps_e2e + psi_upper;
    let d_lower = delta_e2e + pi_l + (sum_delta_u - last.delta_u) - last.delta_l - eps_e2e
        - psi_lower;
    let basic = nu + last.delta_u + last.delta_l;
    let error_term = 2.0 * eps_e2e;
    let clock_term = psi_upper + psi_lower;

    Ok(BoundsResult {
        d_upper,
        d_lower,
        jitter: basic + error_term + clock_term,
        psi_upper,
        psi_lower,
        breakdown: Breakdown {
            basic,
            error_term,
            clock_term,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncThreshold {
    /// `(K+1)/(rho-1) * (2*omega - eta) - delta_u - K*epsilon`: below this
    /// sum of JCS delay bounds, synchronization cannot improve the bounds.
    pub exact: f64,
    /// Sufficient condition independent of K: `2 * (2*omega - eta) / (rho-1)`.
    pub simplified: f64,
}

/// Minimum sum of JCS delay bounds at which time synchronization starts to
/// improve the per-block bounds. Infinite for a drift-free clock.
pub fn sync_threshold(
    k: usize,
    delta_u: f64,
    epsilon: f64,
    clock: &ClockModel,
) -> SyncThreshold {
    if clock.rho <= 1.0 {
        return SyncThreshold {
            exact: f64::INFINITY,
            simplified: f64::INFINITY,
        };
    }
    let spread = 2.0 * clock.omega - clock.eta;
    SyncThreshold {
        exact: (k as f64 + 1.0) / (clock.rho - 1.0) * spread - delta_u - k as f64 * epsilon,
        simplified: 2.0 * spread / (clock.rho - 1.0),
    }
}

/// Arrival curve at the output of a block with jitter bound `v`:
/// `t -> alpha(t + v)`.
pub fn propagate_curve(alpha: &Curve, v: f64) -> Result<Curve, BoundsError> {
    if !(v >= 0.0) {
        return Err(BoundsError::NegativeArgument(v));
    }
    Ok(alpha.clone().advanced(v))
}

/// Re-sequencing buffer dimensioning for a flow with arrival curve `alpha`
/// and jitter bound `v`: timeout `rto = [v - alpha_inv(2*l_min)]+` and size
/// `rbo = alpha(v) - l_min` (clamped at zero).
pub fn reorder_metrics(
    alpha: &Curve,
    v: f64,
    l_min: f64,
) -> Result<ReorderMetrics, BoundsError> {
    if !(v >= 0.0) {
        return Err(BoundsError::NegativeArgument(v));
    }
    if !(l_min > 0.0) {
        return Err(BoundsError::NegativeArgument(l_min));
    }
    let rto = (v - alpha.lower_pseudo_inverse(2.0 * l_min)?).max(0.0);
    let rbo = (alpha.eval(v)? - l_min).max(0.0);
    Ok(ReorderMetrics { rto, rbo })
}

const THETA_ITERATION_CAP: usize = 5_000_000;

/// Head-of-line queuing penalty: worst wait of a packet behind its
/// predecessors in a single-server FIFO queue with per-packet processing up
/// to `phi_max`, fed by traffic that conformed to `alpha_packets` before
/// being compressed by a jitter of `v`:
/// `theta = max_k { k * phi_max - alpha_inv(k) } + v`.
///
/// Returns `+inf` when the sustained packet rate reaches `1 / phi_max`.
pub fn hol_theta(alpha_packets: &Curve, phi_max: f64, v: f64) -> Result<f64, BoundsError> {
    if alpha_packets.unit() != UnitKind::Packets {
        return Err(BoundsError::PacketCurveRequired);
    }
    if !(phi_max >= 0.0) {
        return Err(BoundsError::NegativeArgument(phi_max));
    }
    if !(v >= 0.0) {
        return Err(BoundsError::NegativeArgument(v));
    }
    if phi_max == 0.0 {
        return Ok(v);
    }
    let rate = alpha_packets.long_term_rate();
    if rate * phi_max >= 1.0 {
        return Ok(f64::INFINITY);
    }

    // Beyond k_cap the affine envelope of alpha forces the objective below
    // its k = 1 value, so the maximum has been seen.
    let excess = super::curves::REL_TOL.max(packet_excess(alpha_packets));
    let k_cap = ((excess / (1.0 - rate * phi_max)).ceil() as usize + 2).max(8);
    if k_cap > THETA_ITERATION_CAP {
        return Err(BoundsError::ThetaIterationCap(THETA_ITERATION_CAP));
    }

    let mut best = f64::NEG_INFINITY;
    for k in 1..=k_cap {
        let term = k as f64 * phi_max - alpha_packets.lower_pseudo_inverse(k as f64)?;
        if term > best {
            best = term;
        }
    }
    Ok(best + v)
}

fn packet_excess(alpha: &Curve) -> f64 {
    match alpha {
        Curve::LeakyBucket { burst, .. } => *burst,
        Curve::RateLatency { .. } => 0.0,
        Curve::Staircase {
            burst, per_period, ..
        } => burst + per_period,
        Curve::Shifted { inner, shift } => {
            packet_excess(inner) + inner.long_term_rate() * (-shift).max(0.0)
        }
        Curve::Min { left, right } => packet_excess(left).min(packet_excess(right)),
        Curve::Sum(terms) => terms.iter().map(packet_excess).sum(),
    }
}

/// Bounds for a block ending in a re-sequencing damper when every element is
/// FIFO: identical to the tolerance-damper bounds.
pub fn theorem3_bounds(block: &Block) -> Result<BoundsResult, BoundsError> {
    if block.damper.variant != DamperVariant::Resequencing {
        return Err(BoundsError::WrongVariant {
            found: block.damper.variant,
            hint: "this result covers re-sequencing dampers only",
        });
    }
    if !block.all_fifo() {
        return Err(BoundsError::NonFifoElement);
    }
    core_block_bounds(block)
}

/// Bounds for a block ending in a head-of-line damper when every element is
/// FIFO. With zero processing time the damper behaves like a re-sequencing
/// damper; otherwise the queuing penalty `theta` is added.
pub fn theorem4_bounds(block: &Block, alpha_packets: &Curve) -> Result<BoundsResult, BoundsError> {
    if block.damper.variant != DamperVariant::HeadOfLine {
        return Err(BoundsError::WrongVariant {
            found: block.damper.variant,
            hint: "this result covers head-of-line dampers only",
        });
    }
    if !block.all_fifo() {
        return Err(BoundsError::NonFifoElement);
    }
    let base = core_block_bounds(block)?;
    apply_hol_penalty(base, block, alpha_packets, 0.0)
}

fn apply_hol_penalty(
    base: BoundsResult,
    block: &Block,
    alpha_packets: &Curve,
    j: f64,
) -> Result<BoundsResult, BoundsError> {
    let phi_max = block.damper.phi_max;
    let phi_min = block.damper.phi_min;
    if phi_max == 0.0 {
        return Ok(shift_by_prefix_jitter(base, j));
    }
    // The queue sees the jitter-compressed flow, whose jitter is the block
    // jitter plus any non-FIFO prefix contribution.
    let theta = hol_theta(alpha_packets, phi_max, base.jitter + j)?;
    let mut out = base;
    out.d_upper += j + theta;
    out.d_lower += phi_min;
    let jitter_add = j + theta - phi_min;
    out.jitter += jitter_add;
    out.breakdown.basic += jitter_add;
    Ok(out)
}

fn shift_by_prefix_jitter(base: BoundsResult, j: f64) -> BoundsResult {
    let mut out = base;
    out.d_upper += j;
    out.jitter += j;
    out.breakdown.basic += j;
    out
}

/// Bounds for a re-sequencing damper block containing non-FIFO elements:
/// the delay upper bound and jitter grow by the jitter `j` accumulated up to
/// the last non-FIFO system; the lower bound is unchanged.
pub fn theorem5_bounds(block: &Block, j: f64) -> Result<BoundsResult, BoundsError> {
    if block.damper.variant != DamperVariant::Resequencing {
        return Err(BoundsError::WrongVariant {
            found: block.damper.variant,
            hint: "this result covers re-sequencing dampers only",
        });
    }
    if !(j >= 0.0) {
        return Err(BoundsError::NegativeArgument(j));
    }
    let base = core_block_bounds(block)?;
    Ok(shift_by_prefix_jitter(base, j))
}

/// Bounds for a head-of-line damper block containing non-FIFO elements: the
/// prefix jitter `j` is paid once in the re-sequencing stage and, when the
/// processing time is nonzero, once more through the queue's propagated
/// arrival curve.
pub fn theorem6_bounds(
    block: &Block,
    j: f64,
    alpha_packets: &Curve,
) -> Result<BoundsResult, BoundsError> {
    if block.damper.variant != DamperVariant::HeadOfLine {
        return Err(BoundsError::WrongVariant {
            found: block.damper.variant,
            hint: "this result covers head-of-line dampers only",
        });
    }
    if !(j >= 0.0) {
        return Err(BoundsError::NegativeArgument(j));
    }
    let base = core_block_bounds(block)?;
    apply_hol_penalty(base, block, alpha_packets, j)
}

/// Jitter accumulated from the block entrance through element `e_index`
/// (inclusive), as seen at the damper after header compensation: the
/// per-block jitter formula applied to the prefix with zero tolerances and
/// the clock count restricted to the prefix's JCS clocks.
pub fn prefix_jitter(block: &Block, e_index: usize) -> Result<f64, BoundsError> {
    if e_index >= block.elements.len() {
        return Err(BoundsError::ElementIndexOutOfRange(
            e_index,
            block.elements.len(),
        ));
    }
    let prefix = Block {
        elements: block.elements[..=e_index].to_vec(),
        damper: DamperSpec::ideal(),
        clock: block.clock,
        distinct_clock_count: None,
    };
    Ok(core_block_bounds(&prefix)?.jitter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dampers::DamperSpec;

    const US: f64 = 1e-6;
    const NS: f64 = 1e-9;

    /// First block of the local-area reference path: source queuing (250 us)
    /// and one switching fabric (2 us), one 5 us propagation link, calendar
    /// damper with envelope (1 us, 2 ns), error bound 50 ns per JCS,
    /// free-running clocks.
    pub(crate) fn reference_block() -> Block {
        Block::new(
            vec![
                Element::Jcs(JcsSpec::new(250.0 * US, 50.0 * NS)),
                Element::Bds(BdsSpec::constant(5.0 * US)),
                Element::Jcs(JcsSpec::new(2.0 * US, 50.0 * NS)),
            ],
            DamperSpec::rcsp(1e-6 - 2e-9, 2e-9),
            ClockModel::free_running(),
        )
    }

    #[test]
    fn psi_terms_reference_block() {
        let block = reference_block();
        let (up, lo) = psi_terms(&block);
        // Drift branch: 1e-4 * (2 ns + 252.1 us) + 3 * 2 ns
        assert!((up - 31.2102 * NS).abs() < 1e-15, "psi_upper {up}");
        // 250.9 us * (1e-4 / 1.0001) + 6 ns / 1.0001
        assert!((lo - 31.0868913 * NS).abs() < 1e-14, "psi_lower {lo}");
        assert!((up + lo - 62.2970913 * NS).abs() < 1e-14);
    }

    #[test]
    fn psi_terms_perfect_clock() {
        let mut block = reference_block();
        block.clock = ClockModel {
            rho: 1.0,
            eta: 0.0,
            omega: f64::INFINITY,
        };
        let (up, lo) = psi_terms(&block);
        assert_eq!(up, 0.0);
        assert_eq!(lo, 0.0);
    }

    #[test]
    fn psi_terms_sync_branch_binds() {
        let mut block = reference_block();
        block.clock = ClockModel::new(1e-4, 2e-9, 1e-9).unwrap();
        let (up, _lo) = psi_terms(&block);
        // K = 2 so the synchronization branch is 2 * (K+1) * omega = 6 omega.
        assert!((up - 6e-9).abs() < 1e-18, "psi_upper {up}");
    }

    #[test]
    fn theorem1_reference_block_values() {
        let block = reference_block();
        let b = theorem1_bounds(&block).unwrap();
        assert!((b.d_upper - 257.1332102 * US).abs() < 1e-13, "{}", b.d_upper);
        assert!((b.d_lower - 255.8689131 * US).abs() < 1e-12, "{}", b.d_lower);
        assert!((b.jitter - 1.2642971 * US).abs() < 1e-13, "{}", b.jitter);
        assert!((b.breakdown.basic - 1.002 * US).abs() < 1e-15);
        assert!((b.breakdown.error_term - 200.0 * NS).abs() < 1e-15);
        assert!((b.breakdown.clock_term - 62.2970913 * NS).abs() < 1e-14);
        // Identity V = D_upper - D_lower holds when nu equals the BDS spread.
        assert!((b.jitter - (b.d_upper - b.d_lower)).abs() < 1e-15);
    }

    #[test]
    fn theorem1_rejects_fifo_constrained_variants() {
        let mut block = reference_block();
        block.damper = DamperSpec::fopleq(1e-6 - 2e-9, 2e-9);
        assert!(matches!(
            theorem1_bounds(&block),
            Err(BoundsError::WrongVariant { .. })
        ));
    }

    #[test]
    fn theorem1_zero_everything_reduces_to_bds_jitter() {
        let block = Block::new(
            vec![Element::Bds(BdsSpec::new(1.0 * US, 3.0 * US, 2.0 * US))],
            DamperSpec::ideal(),
            ClockModel {
                rho: 1.0,
                eta: 0.0,
                omega: f64::INFINITY,
            },
        );
        let b = theorem1_bounds(&block).unwrap();
        assert_eq!(b.jitter, 2.0 * US);
        assert_eq!(b.d_upper, 3.0 * US);
        assert_eq!(b.d_lower, 1.0 * US);
    }

    #[test]
    fn e2e_sum_reference_path() {
        let block = reference_block();
        let per = theorem1_bounds(&block).unwrap();
        let parts: Vec<PathPart> = (0..7).map(|_| PathPart::Analyzed(per)).collect();
        let e2e = e2e_sum(&parts).unwrap();
        assert!((e2e.d_upper - 1799.9324714 * US).abs() < 1e-11, "{}", e2e.d_upper);
        assert!((e2e.jitter - 8.8500796 * US).abs() < 1e-12, "{}", e2e.jitter);
        // Single part is the identity.
        let one = e2e_sum(&[PathPart::Analyzed(per)]).unwrap();
        assert_eq!(one, per);
        assert_eq!(e2e_sum(&[]), Err(BoundsError::EmptyParts));
    }

    #[test]
    fn monotonicity_in_each_argument() {
        let base = theorem1_bounds(&reference_block()).unwrap();
        // Increasing any delta, epsilon, delta_u or nu never decreases the bounds.
        let mut b1 = reference_block();
        if let Element::Jcs(j) = &mut b1.elements[0] {
            j.delta += 10.0 * US;
        }
        let r1 = theorem1_bounds(&b1).unwrap();
        assert!(r1.d_upper > base.d_upper && r1.jitter >= base.jitter);

        let mut b2 = reference_block();
        if let Element::Jcs(j) = &mut b2.elements[0] {
            j.epsilon += 10.0 * NS;
        }
        let r2 = theorem1_bounds(&b2).unwrap();
        assert!(r2.d_upper > base.d_upper && r2.jitter > base.jitter);

        let mut b3 = reference_block();
        b3.damper.delta_u += 10.0 * NS;
        let r3 = theorem1_bounds(&b3).unwrap();
        assert!(r3.d_upper > base.d_upper && r3.jitter > base.jitter);

        let mut b4 = reference_block();
        b4.elements[1] = Element::Bds(BdsSpec::new(5.0 * US, 6.0 * US, 1.0 * US));
        let r4 = theorem1_bounds(&b4).unwrap();
        assert!(r4.d_upper > base.d_upper && r4.jitter > base.jitter);
    }

    #[test]
    fn omega_saturation() {
        let mut far = reference_block();
        far.clock = ClockModel::new(1e-4, 2e-9, 1.0).unwrap();
        let mut inf = reference_block();
        inf.clock = ClockModel::free_running();
        assert_eq!(
            theorem1_bounds(&far).unwrap(),
            theorem1_bounds(&inf).unwrap()
        );
    }

    #[test]
    fn sync_threshold_rows() {
        let wr = sync_threshold(2, 2e-9, 50e-9, &ClockModel::white_rabbit());
        assert!((wr.simplified - 3.96e-3).abs() < 1e-9, "{}", wr.simplified);
        let gptp = sync_threshold(2, 2e-9, 50e-9, &ClockModel::gptp());
        assert!((gptp.simplified - 39.96e-3).abs() < 1e-8, "{}", gptp.simplified);
        // omega = eta / 2 makes the threshold vanish.
        let clock = ClockModel::new(1e-4, 2e-9, 1e-9).unwrap();
        let t = sync_threshold(2, 0.0, 0.0, &clock);
        assert!(t.exact.abs() < 1e-15 && t.simplified.abs() < 1e-15);
        // Drift-free clock never benefits from synchronization.
        let t2 = sync_threshold(2, 0.0, 0.0, &ClockModel::ideal());
        assert!(t2.exact.is_infinite() && t2.simplified.is_infinite());
    }

    #[test]
    fn propagate_curve_burst_growth() {
        let alpha = Curve::leaky_bucket(2e6, 10_000.0, UnitKind::Bytes);
        let out = propagate_curve(&alpha, 1.262e-6).unwrap();
        assert!((out.burst() - 10_002.524).abs() < 1e-9);
        let id = propagate_curve(&alpha, 0.0).unwrap();
        assert_eq!(id, alpha);
        assert!(propagate_curve(&alpha, -1e-9).is_err());
    }

    #[test]
    fn reorder_metrics_reference_values() {
        let alpha = Curve::leaky_bucket(2e6, 10_000.0, UnitKind::Bytes);
        // At the published jitter value the timeout equals the jitter because
        // 2 * l_min is below the burst.
        let m = reorder_metrics(&alpha, 1.262e-6, 100.0).unwrap();
        assert_eq!(m.rto, 1.262e-6);
        assert!((m.rbo - 9_902.524).abs() < 1e-9, "{}", m.rbo);
        let z = reorder_metrics(&alpha, 0.0, 100.0).unwrap();
        assert_eq!(z.rto, 0.0);
    }

    #[test]
    fn hol_theta_cases() {
        // 10-packet burst staircase: the pseudo-inverse is 0 up to the burst,
        // so k = 10 dominates.
        let alpha = Curve::packet_staircase(10.0, 8e-3, 10.0);
        let v = 1e-6;
        let theta = hol_theta(&alpha, 5e-9, v).unwrap();
        assert!((theta - (50e-9 + v)).abs() < 1e-15, "{theta}");
        // Brute-force maximum over a wide k range.
        let mut best = f64::NEG_INFINITY;
        for k in 1..=1000 {
            let term = k as f64 * 5e-9 - alpha.lower_pseudo_inverse(k as f64).unwrap();
            best = best.max(term);
        }
        assert!((theta - (best + v)).abs() < 1e-15);

        // Single-packet flow: k = 1 term.
        let single = Curve::packet_staircase(1.0, 1.0, 0.0);
        let t1 = hol_theta(&single, 5e-9, v).unwrap();
        assert!((t1 - (5e-9 + v)).abs() < 1e-15);

        // Zero processing time: the penalty is unused and equals v.
        assert_eq!(hol_theta(&alpha, 0.0, v).unwrap(), v);

        // Sustained rate at or above 1/phi_max diverges.
        let fast = Curve::packet_staircase(10.0, 1e-6, 1000.0);
        assert_eq!(hol_theta(&fast, 1e-6, v).unwrap(), f64::INFINITY);

        // Byte-unit curves are rejected.
        let bytes = Curve::leaky_bucket(1.0, 1.0, UnitKind::Bytes);
        assert!(matches!(
            hol_theta(&bytes, 1e-9, v),
            Err(BoundsError::PacketCurveRequired)
        ));
    }

    fn resequencing_block() -> Block {
        let mut b = reference_block();
        b.damper = DamperSpec::fopleq(1e-6 - 2e-9, 2e-9);
        b
    }

    #[test]
    fn theorem3_equals_theorem1_bit_for_bit() {
        let reseq = resequencing_block();
        let r3 = theorem3_bounds(&reseq).unwrap();
        let r1 = theorem1_bounds(&reference_block()).unwrap();
        assert_eq!(r3, r1);
    }

    #[test]
    fn theorem3_ideal_perfect_zero_jitter() {
        let block = Block::new(
            vec![Element::Bds(BdsSpec::constant(5.0 * US))],
            DamperSpec {
                variant: DamperVariant::Resequencing,
                ..DamperSpec::ideal()
            },
            ClockModel {
                rho: 1.0,
                eta: 0.0,
                omega: f64::INFINITY,
            },
        );
        assert_eq!(theorem3_bounds(&block).unwrap().jitter, 0.0);
    }

    #[test]
    fn theorem3_rejects_non_fifo() {
        let mut block = resequencing_block();
        if let Element::Bds(b) = &mut block.elements[1] {
            b.fifo = false;
        }
        assert_eq!(theorem3_bounds(&block), Err(BoundsError::NonFifoElement));
    }

    fn hol_block(phi_max: f64) -> Block {
        let mut b = reference_block();
        b.damper = DamperSpec::head_of_line(2e-9, 2e-9, 0.0, phi_max).unwrap();
        b
    }

    #[test]
    fn theorem4_zero_processing_matches_theorem1() {
        let alpha = Curve::packet_staircase(10.0, 8e-3, 10.0);
        let hol = hol_block(0.0);
        let r4 = theorem4_bounds(&hol, &alpha).unwrap();
        let mut tol = reference_block();
        tol.damper = DamperSpec {
            variant: DamperVariant::Tolerance,
            delta_l: 2e-9,
            delta_u: 2e-9,
            ..DamperSpec::ideal()
        };
        assert_eq!(r4, theorem1_bounds(&tol).unwrap());
    }

    #[test]
    fn theorem4_adds_queuing_penalty() {
        let alpha = Curve::packet_staircase(10.0, 8e-3, 10.0);
        let hol = hol_block(5e-9);
        let r4 = theorem4_bounds(&hol, &alpha).unwrap();
        let base = {
            let zero = hol_block(0.0);
            theorem4_bounds(&zero, &alpha).unwrap()
        };
        let theta = hol_theta(&alpha, 5e-9, base.jitter).unwrap();
        assert!((r4.d_upper - (base.d_upper + theta)).abs() < 1e-15);
        assert!((r4.d_lower - base.d_lower).abs() < 1e-18);
        assert!((r4.jitter - (base.jitter + theta)).abs() < 1e-15);
    }

    #[test]
    fn theorem4_constant_processing_single_packet() {
        let single = Curve::packet_staircase(1.0, 1.0, 0.0);
        let mut block = reference_block();
        block.damper = DamperSpec::head_of_line(2e-9, 2e-9, 3e-9, 3e-9).unwrap();
        let r = theorem4_bounds(&block, &single).unwrap();
        let base = {
            let mut b = reference_block();
            b.damper = DamperSpec::head_of_line(2e-9, 2e-9, 0.0, 0.0).unwrap();
            theorem4_bounds(&b, &single).unwrap()
        };
        // theta = phi_max + V for a single-packet flow.
        assert!((r.d_upper - (base.d_upper + 3e-9 + base.jitter)).abs() < 1e-15);
        assert!((r.d_lower - (base.d_lower + 3e-9)).abs() < 1e-18);
    }

    #[test]
    fn theorem5_additive_prefix_jitter() {
        let block = resequencing_block();
        let r0 = theorem5_bounds(&block, 0.0).unwrap();
        assert_eq!(r0, theorem3_bounds(&block).unwrap());
        let j = 1.5 * US;
        let r = theorem5_bounds(&block, j).unwrap();
        assert!((r.d_upper - (r0.d_upper + j)).abs() < 1e-15);
        assert!((r.jitter - (r0.jitter + j)).abs() < 1e-15);
        assert_eq!(r.d_lower, r0.d_lower);
    }

    #[test]
    fn theorem6_doubles_prefix_jitter_with_processing() {
        let alpha = Curve::packet_staircase(10.0, 8e-3, 10.0);
        let j = 1.5 * US;

        // Zero processing: same deltas as the re-sequencing case.
        let hol0 = hol_block(0.0);
        let r0 = theorem6_bounds(&hol0, j, &alpha).unwrap();
        let base0 = theorem4_bounds(&hol0, &alpha).unwrap();
        assert!((r0.d_upper - (base0.d_upper + j)).abs() < 1e-15);
        assert!((r0.jitter - (base0.jitter + j)).abs() < 1e-15);

        // Nonzero processing: the prefix jitter is paid twice.
        let hol = hol_block(5e-9);
        let r = theorem6_bounds(&hol, j, &alpha).unwrap();
        let base = theorem4_bounds(&hol, &alpha).unwrap();
        assert!((r.d_upper - (base.d_upper + 2.0 * j)).abs() < 1e-14);
        assert!((r.jitter - (base.jitter + 2.0 * j)).abs() < 1e-14);
        assert_eq!(r.d_lower, base.d_lower);

        // j = 0 reduces to the FIFO result.
        assert_eq!(theorem6_bounds(&hol, 0.0, &alpha).unwrap(), base);
    }

    #[test]
    fn prefix_jitter_values() {
        // Prefix of constant-delay BDSs with perfect clocks has zero jitter.
        let block = Block::new(
            vec![
                Element::Bds(BdsSpec::constant(5.0 * US)),
                Element::Bds(BdsSpec::constant(3.0 * US)),
            ],
            DamperSpec::ideal(),
            ClockModel {
                rho: 1.0,
                eta: 0.0,
                omega: f64::INFINITY,
            },
        );
        assert_eq!(prefix_jitter(&block, 1).unwrap(), 0.0);

        // Two JCSs with eps = 50 ns under near-perfect synchronization:
        // the error term 2*K*eps dominates.
        let mut sync_block = reference_block();
        sync_block.clock = ClockModel::new(1e-4, 2e-9, 1e-30).unwrap();
        let j = prefix_jitter(&sync_block, 2).unwrap();
        assert!((j - 200.0 * NS).abs() < 1e-12, "{j}");

        // Full prefix of the reference block: nu + 2*K*eps + psi with zero
        // tolerances.
        let block = reference_block();
        let j = prefix_jitter(&block, 2).unwrap();
        let expect = {
            let prefix = Block::new(
                block.elements.clone(),
                DamperSpec::ideal(),
                block.clock,
            );
            let (up, lo) = psi_terms(&prefix);
            200.0 * NS + up + lo
        };
        assert!((j - expect).abs() < 1e-15);
        assert!(matches!(
            prefix_jitter(&block, 9),
            Err(BoundsError::ElementIndexOutOfRange(9, 3))
        ));
    }
}
