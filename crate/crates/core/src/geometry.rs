//! Detector-geometry input features.
//!
//! For every photon hit, a geometry feature marks the band of crystals a
//! coincident partner could occupy: the opposite crystal plus `half_width`
//! neighbours on each side, at the same time step. Feeding the original
//! train together with this feature map gives a network the ring topology
//! without it having to learn crystal adjacency from data.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::types::{SpikeEvent, SpikeTrain};

/// Half-width of the opposite-crystal band, in crystals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometryConfig {
    pub half_width: u32,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { half_width: 2 }
    }
}

fn check_half_width(train: &SpikeTrain, half_width: u32) -> Result<()> {
    let crystals = train.config().num_crystals();
    if half_width >= crystals / 4 {
        return Err(Error::InvalidConfig(format!(
            "geometry half_width {} must be below a quarter ring ({} crystals)",
            half_width,
            crystals / 4
        )));
    }
    Ok(())
}

/// Computes the geometry feature train of `train`.
///
/// Output crystal `c` spikes at time `t` exactly when some input crystal
/// within `half_width` of `opposite(c)` spikes at `t`. The output shares the
/// detector configuration of the input.
pub fn geometry_features(train: &SpikeTrain, half_width: u32) -> Result<SpikeTrain> {
    check_half_width(train, half_width)?;
    let crystals = i64::from(train.config().num_crystals());
    let offset = i64::from(half_width);

    let mut events = BTreeSet::new();
    for ev in train.events() {
        let base = i64::from(ev.crystal) + crystals / 2;
        for j in -offset..=offset {
            let crystal = (base + j).rem_euclid(crystals) as u32;
            events.insert(SpikeEvent::new(crystal, ev.time));
        }
    }
    SpikeTrain::new(train.config(), events.into_iter().collect())
}

/// Stacks `train` with its geometry features on a doubled crystal ring.
///
/// Crystals `[0, C)` of the result carry the original events and crystals
/// `[C, 2C)` carry [`geometry_features`] shifted up by `C`.
pub fn augment(train: &SpikeTrain, half_width: u32) -> Result<SpikeTrain> {
    let features = geometry_features(train, half_width)?;
    let crystals = train.config().num_crystals();

    let mut events: Vec<SpikeEvent> = train.events().to_vec();
    events.extend(
        features
            .events()
            .iter()
            .map(|ev| SpikeEvent::new(ev.crystal + crystals, ev.time)),
    );
    SpikeTrain::new(train.config().doubled(), events)
}
