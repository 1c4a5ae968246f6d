//! Bundled reference paths used by the `examples` command, the shipped
//! configuration files and the acceptance suite.
//!
//! Three path layouts are modeled:
//! 1. a local-area path where every switch compensates the jitter of the
//!    upstream queuing system and its own switching fabric,
//! 2. a wide-area path where only the access routers compensate jitter and
//!    the backbone remains a bounded-delay segment, and
//! 3. the same wide-area path with the backbone compensated through remote
//!    time stamping between synchronized provider-edge routers.

use crate::bounds::{
    e2e_sum, theorem1_bounds, theorem2_te_bounds, BdsSpec, Block, BoundsError, BoundsResult,
    Element, JcsSpec, PathPart,
};
use crate::clocks::ClockModel;
use crate::dampers::DamperSpec;

/// One hop-level component of a reference path.
#[derive(Debug, Clone, PartialEq)]
pub enum PathSegment {
    Block(Block),
    Bds(BdsSpec),
}

#[derive(Debug, Clone)]
pub struct ReferenceScenario {
    pub name: &'static str,
    pub segments: Vec<PathSegment>,
}

impl ReferenceScenario {
    pub fn blocks(&self) -> Vec<&Block> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                PathSegment::Block(b) => Some(b),
                PathSegment::Bds(_) => None,
            })
            .collect()
    }
}

const US: f64 = 1e-6;
const NS: f64 = 1e-9;

/// Calendar damper with release envelope (1 us early, 2 ns late).
fn rcsp_damper() -> DamperSpec {
    DamperSpec::rcsp(1.0 * US - 2.0 * NS, 2.0 * NS)
}

/// Local-area path: seven identical blocks, each covering one 250 us queuing
/// stage and one 2 us switching fabric, separated by 5 us constant links,
/// with free-running clocks and 50 ns header-error bounds.
pub fn local_area() -> ReferenceScenario {
    let block = Block::new(
        vec![
            Element::Jcs(JcsSpec::new(250.0 * US, 50.0 * NS)),
            Element::Bds(BdsSpec::constant(5.0 * US)),
            Element::Jcs(JcsSpec::new(2.0 * US, 50.0 * NS)),
        ],
        rcsp_damper(),
        ClockModel::free_running(),
    );
    ReferenceScenario {
        name: "local_area",
        segments: (0..7).map(|_| PathSegment::Block(block.clone())).collect(),
    }
}

fn access_block(first_delta: f64, first_eps: f64, middle: Element) -> Block {
    Block::new(
        vec![
            Element::Jcs(JcsSpec::new(first_delta, first_eps)),
            middle,
            Element::Jcs(JcsSpec::new(5.0 * US, 50.0 * NS)),
        ],
        rcsp_damper(),
        ClockModel::free_running(),
    )
}

/// Wide-area path with jitter compensation in the access routers only:
/// the source queuing, the backbone and the last queuing stage stay
/// uncompensated bounded-delay segments.
pub fn wide_area_edge() -> ReferenceScenario {
    let prop = Element::Bds(BdsSpec::constant(10.0 * US));
    let mut segments = Vec::new();

    // Entrance: source queuing (100 us bound, 80 us jitter), first link and
    // the first router's forwarding plane, compensated by its damper.
    segments.push(PathSegment::Block(Block::new(
        vec![
            Element::Bds(BdsSpec::new(20.0 * US, 100.0 * US, 80.0 * US)),
            prop.clone(),
            Element::Jcs(JcsSpec::new(5.0 * US, 50.0 * NS)),
        ],
        rcsp_damper(),
        ClockModel::free_running(),
    )));

    // Three more access hops toward the backbone.
    for _ in 0..3 {
        segments.push(PathSegment::Block(access_block(
            500.0 * US,
            50.0 * NS,
            prop.clone(),
        )));
    }
    // Backbone crossing: 30 ms bound with 1 ms jitter, uncompensated.
    segments.push(PathSegment::Block(access_block(
        500.0 * US,
        50.0 * NS,
        Element::Bds(BdsSpec::new(29_000.0 * US, 30_000.0 * US, 1_000.0 * US)),
    )));
    // Three access hops on the far side.
    for _ in 0..3 {
        segments.push(PathSegment::Block(access_block(
            500.0 * US,
            50.0 * NS,
            prop.clone(),
        )));
    }
    // Last queuing stage before the destination, uncompensated.
    segments.push(PathSegment::Bds(BdsSpec::new(
        400.0 * US,
        500.0 * US,
        100.0 * US,
    )));

    ReferenceScenario {
        name: "wide_area_edge",
        segments,
    }
}

/// Wide-area path with the backbone compensated as well: its departure is
/// stamped at the upstream provider edge and the earliness computed at the
/// synchronized downstream edge, so its header-error bound grows to 2.05 us
/// while the source queuing and the final queuing stage also become
/// compensated systems (with a damper at the destination).
pub fn wide_area_backbone() -> ReferenceScenario {
    let prop = Element::Bds(BdsSpec::constant(10.0 * US));
    let mut segments = Vec::new();

    segments.push(PathSegment::Block(access_block(
        100.0 * US,
        50.0 * NS,
        prop.clone(),
    )));
    for _ in 0..3 {
        segments.push(PathSegment::Block(access_block(
            500.0 * US,
            50.0 * NS,
            prop.clone(),
        )));
    }
    // Backbone as a compensated system: 30 ms bound, 2.05 us error bound
    // (50 ns computation error plus twice the 1 us synchronization error).
    segments.push(PathSegment::Block(access_block(
        500.0 * US,
        50.0 * NS,
        Element::Jcs(JcsSpec::new(30_000.0 * US, 2.05 * US)),
    )));
    for _ in 0..3 {
        segments.push(PathSegment::Block(access_block(
            500.0 * US,
            50.0 * NS,
            prop.clone(),
        )));
    }
    // Destination damper compensating the last queuing stage.
    segments.push(PathSegment::Block(Block::new(
        vec![Element::Jcs(JcsSpec::new(500.0 * US, 50.0 * NS))],
        rcsp_damper(),
        ClockModel::free_running(),
    )));

    ReferenceScenario {
        name: "wide_area_backbone",
        segments,
    }
}

pub fn by_index(which: usize) -> Option<ReferenceScenario> {
    match which {
        1 => Some(local_area()),
        2 => Some(wide_area_edge()),
        3 => Some(wide_area_backbone()),
        _ => None,
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioAnalysis {
    pub per_block: Vec<BoundsResult>,
    pub e2e: BoundsResult,
}

/// Analyze a reference path with the default header mode (per-block bounds
/// summed) or with theoretical-eligibility stamping (one end-to-end result
/// over the blocks, raw segments added on top).
pub fn analyze(
    scenario: &ReferenceScenario,
    te_stamping: bool,
) -> Result<ScenarioAnalysis, BoundsError> {
    if !te_stamping {
        let mut per_block = Vec::new();
        let mut parts = Vec::new();
        for seg in &scenario.segments {
            match seg {
                PathSegment::Block(b) => {
                    let r = theorem1_bounds(b)?;
                    per_block.push(r);
                    parts.push(PathPart::Analyzed(r));
                }
                PathSegment::Bds(b) => parts.push(PathPart::Bds(*b)),
            }
        }
        Ok(ScenarioAnalysis {
            e2e: e2e_sum(&parts)?,
            per_block,
        })
    } else {
        let blocks: Vec<Block> = scenario
            .segments
            .iter()
            .filter_map(|s| match s {
                PathSegment::Block(b) => {
                    let mut b = b.clone();
                    b.damper = b.damper.with_te_stamping();
                    Some(b)
                }
                PathSegment::Bds(_) => None,
            })
            .collect();
        let te = theorem2_te_bounds(&blocks)?;
        let mut parts = vec![PathPart::Analyzed(te)];
        for seg in &scenario.segments {
            if let PathSegment::Bds(b) = seg {
                parts.push(PathPart::Bds(*b));
            }
        }
        Ok(ScenarioAnalysis {
            e2e: e2e_sum(&parts)?,
            per_block: vec![te],
        })
    }
}
