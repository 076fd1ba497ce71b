//! Single-coincidence-window event sorting.
//!
//! The classical baseline: walk the time-sorted event list, let the earliest
//! unconsumed event open a window, and classify the window's occupancy.
//! A lone event is a single, exactly two events form a coincidence pair
//! (optionally screened by a ring-geometry filter), and three or more are
//! discarded as multiples. Every input event is consumed exactly once, so
//! `2 * pairs + singles + multiples` always equals the input length.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::types::{CoincidencePair, DetectorConfig, SpikeEvent, SpikeTrain};

/// Sorting parameters.
///
/// `window` is the coincidence window in time steps; an event joins the
/// anchor's cluster when its time difference from the anchor is strictly
/// below `window`. With `geometry_filter` set, a two-event cluster is kept
/// only when its crystals are at most `min_ring_separation` away from being
/// diametrically opposite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScwConfig {
    pub window: u32,
    pub min_ring_separation: u32,
    pub geometry_filter: bool,
}

impl Default for ScwConfig {
    fn default() -> Self {
        Self {
            window: 3,
            min_ring_separation: 2,
            geometry_filter: false,
        }
    }
}

impl ScwConfig {
    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidConfig("window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Outcome of a sorting pass.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScwResult {
    pub pairs: Vec<CoincidencePair>,
    pub singles: u64,
    pub multiples: u64,
}

impl ScwResult {
    /// Number of input events accounted for across all three buckets.
    pub fn total_events(&self) -> u64 {
        2 * self.pairs.len() as u64 + self.singles + self.multiples
    }
}

fn check_sorted(events: &[SpikeEvent]) -> Result<()> {
    for (i, pair) in events.windows(2).enumerate() {
        if pair[1] < pair[0] {
            return Err(Error::UnsortedEvents { index: i + 1 });
        }
    }
    Ok(())
}

/// Accepts a two-event cluster as a coincidence pair, or rejects it.
///
/// Equal crystals never form a pair: no line of response passes through a
/// single crystal, whatever the filter setting.
fn accept_pair(
    a: SpikeEvent,
    b: SpikeEvent,
    detector: &DetectorConfig,
    config: &ScwConfig,
) -> bool {
    if a.crystal == b.crystal {
        return false;
    }
    if !config.geometry_filter {
        return true;
    }
    let gap = detector.num_crystals() / 2 - detector.ring_distance(a.crystal, b.crystal);
    gap <= config.min_ring_separation
}

/// Sorts `events` into pairs, singles, and multiples.
///
/// `events` must be sorted by time with ties broken by crystal; a violation
/// is reported with the offending index. Runs in a single pass over the
/// input.
pub fn scw_sort(
    events: &[SpikeEvent],
    detector: &DetectorConfig,
    config: &ScwConfig,
) -> Result<ScwResult> {
    config.validate()?;
    check_sorted(events)?;

    let mut result = ScwResult::default();
    let mut i = 0;
    while i < events.len() {
        let anchor = events[i];
        let mut end = i + 1;
        while end < events.len() && events[end].time - anchor.time < config.window {
            end += 1;
        }
        match end - i {
            1 => {
                result.singles += 1;
            }
            2 => {
                let partner = events[i + 1];
                if accept_pair(anchor, partner, detector, config) {
                    result.pairs.push(
                        CoincidencePair::new(anchor.time, anchor.crystal, partner.crystal)
                            .expect("accepted pairs have distinct crystals"),
                    );
                } else {
                    result.multiples += 2;
                }
            }
            n => {
                result.multiples += n as u64;
            }
        }
        i = end;
    }
    Ok(result)
}

/// Reference implementation of [`scw_sort`].
///
/// Deliberately naive: rescans the whole tail for every anchor and spells
/// out the ring arithmetic inline. Kept as an oracle for randomized
/// agreement tests; use [`scw_sort`] everywhere else.
pub fn scw_reference(
    events: &[SpikeEvent],
    detector: &DetectorConfig,
    config: &ScwConfig,
) -> Result<ScwResult> {
    config.validate()?;
    check_sorted(events)?;

    let c = detector.num_crystals();
    let mut result = ScwResult::default();
    let mut i = 0;
    while i < events.len() {
        let cluster: Vec<SpikeEvent> = (i..events.len())
            .map(|j| events[j])
            .filter(|ev| ev.time - events[i].time < config.window)
            .collect();
        if cluster.len() == 1 {
            result.singles += 1;
        } else if cluster.len() == 2 {
            let (a, b) = (cluster[0], cluster[1]);
            let direct = a.crystal.abs_diff(b.crystal);
            let distance = direct.min(c - direct);
            let opposite_enough = c / 2 - distance <= config.min_ring_separation;
            if a.crystal != b.crystal && (!config.geometry_filter || opposite_enough) {
                result
                    .pairs
                    .push(CoincidencePair::new(a.time, a.crystal, b.crystal).unwrap());
            } else {
                result.multiples += 2;
            }
        } else {
            result.multiples += cluster.len() as u64;
        }
        i += cluster.len();
    }
    Ok(result)
}

/// Expands accepted pairs back into a spike train.
///
/// Each pair contributes its two crystals at the pair's time stamp;
/// coinciding contributions merge into one event.
pub fn scw_to_label(result: &ScwResult, config: DetectorConfig) -> Result<SpikeTrain> {
    let mut events = BTreeSet::new();
    for pair in &result.pairs {
        events.insert(SpikeEvent::new(pair.crystal_a, pair.time));
        events.insert(SpikeEvent::new(pair.crystal_b, pair.time));
    }
    SpikeTrain::new(config, events.into_iter().collect())
}
