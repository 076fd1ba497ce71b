//! Domain types shared by every other module: detector geometry, sparse
//! spike trains, labeled samples and coincidence pairs.
//!
//! The sparse event list is the canonical representation throughout; dense
//! matrices are materialized only where the network engine needs them.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Geometry and discretization of a ring scanner.
///
/// Crystals are arranged as an ascending ring, so crystal `c` sits spatially
/// opposite crystal `(c + C/2) mod C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DetectorConfig {
    num_crystals: u32,
    num_timesteps: u32,
}

impl DetectorConfig {
    /// Build a config, enforcing an even crystal count of at least 4 and a
    /// positive number of time steps.
    pub fn new(num_crystals: u32, num_timesteps: u32) -> Result<Self> {
        if num_crystals < 4 || !num_crystals.is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "crystal count must be even and >= 4, got {num_crystals}"
            )));
        }
        if num_timesteps == 0 {
            return Err(Error::InvalidConfig(
                "number of time steps must be >= 1".into(),
            ));
        }
        Ok(Self {
            num_crystals,
            num_timesteps,
        })
    }

    pub fn num_crystals(&self) -> u32 {
        self.num_crystals
    }

    pub fn num_timesteps(&self) -> u32 {
        self.num_timesteps
    }

    /// Crystal spatially opposite `c` on the ring.
    pub fn opposite(&self, crystal: u32) -> u32 {
        (crystal + self.num_crystals / 2) % self.num_crystals
    }

    /// Ring distance `min(|a-b|, C-|a-b|)`, in [0, C/2].
    pub fn ring_distance(&self, a: u32, b: u32) -> u32 {
        let d = a.abs_diff(b);
        d.min(self.num_crystals - d)
    }

    /// Config with the same time axis but twice the channels, used for
    /// geometry-extended inputs.
    pub fn doubled(&self) -> Self {
        Self {
            num_crystals: self.num_crystals * 2,
            num_timesteps: self.num_timesteps,
        }
    }

    fn check_event(&self, ev: SpikeEvent) -> Result<()> {
        if ev.crystal >= self.num_crystals || ev.time >= self.num_timesteps {
            return Err(Error::EventOutOfBounds {
                crystal: ev.crystal,
                time: ev.time,
                crystals: self.num_crystals,
                timesteps: self.num_timesteps,
            });
        }
        Ok(())
    }
}

/// A single binary detection: crystal `crystal` fired at step `time`.
///
/// Field order gives the canonical (time, crystal) sort via the derived `Ord`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpikeEvent {
    pub time: u32,
    pub crystal: u32,
}

impl SpikeEvent {
    pub fn new(crystal: u32, time: u32) -> Self {
        Self { time, crystal }
    }
}

/// Sparse set of (crystal, time) events over a `C x T` grid, kept sorted by
/// (time, crystal) with no duplicates. Equivalent to a binary matrix in
/// `{0,1}^{C x T}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpikeTrain {
    config: DetectorConfig,
    events: Vec<SpikeEvent>,
}

impl SpikeTrain {
    /// Build a train from an arbitrary event list. The list is sorted into
    /// canonical order; out-of-bounds indices and duplicates are rejected.
    pub fn new(config: DetectorConfig, mut events: Vec<SpikeEvent>) -> Result<Self> {
        events.sort_unstable();
        for (i, ev) in events.iter().enumerate() {
            config.check_event(*ev)?;
            if i > 0 && events[i - 1] == *ev {
                return Err(Error::DuplicateEvent {
                    crystal: ev.crystal,
                    time: ev.time,
                });
            }
        }
        Ok(Self { config, events })
    }

    pub fn empty(config: DetectorConfig) -> Self {
        Self {
            config,
            events: Vec::new(),
        }
    }

    pub fn config(&self) -> DetectorConfig {
        self.config
    }

    pub fn events(&self) -> &[SpikeEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn contains(&self, ev: SpikeEvent) -> bool {
        self.events.binary_search(&ev).is_ok()
    }

    /// Spike times grouped per crystal, each list ascending.
    pub fn times_by_crystal(&self) -> Vec<Vec<u32>> {
        let mut rows = vec![Vec::new(); self.config.num_crystals as usize];
        for ev in &self.events {
            rows[ev.crystal as usize].push(ev.time);
        }
        // events are (time, crystal)-sorted, so each row is already ascending
        rows
    }

    /// Materialize the equivalent dense binary matrix, one row per crystal.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut m = Array2::zeros((
            self.config.num_crystals as usize,
            self.config.num_timesteps as usize,
        ));
        for ev in &self.events {
            m[(ev.crystal as usize, ev.time as usize)] = 1.0;
        }
        m
    }

    /// Inverse of [`to_dense`](Self::to_dense). The matrix shape must match
    /// the config and every entry must be exactly 0 or 1.
    pub fn from_dense(config: DetectorConfig, matrix: &Array2<f64>) -> Result<Self> {
        if matrix.nrows() != config.num_crystals as usize
            || matrix.ncols() != config.num_timesteps as usize
        {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", config.num_crystals, config.num_timesteps),
                found: format!("{}x{}", matrix.nrows(), matrix.ncols()),
            });
        }
        let events = dense_to_events(matrix)?;
        Ok(Self { config, events })
    }
}

/// Extract the sorted event list from a dense binary matrix (rows are
/// crystals, columns are time steps). Rejects entries other than 0 and 1.
pub fn dense_to_events(matrix: &Array2<f64>) -> Result<Vec<SpikeEvent>> {
    let mut events = Vec::new();
    for ((row, col), &v) in matrix.indexed_iter() {
        if v == 1.0 {
            events.push(SpikeEvent::new(row as u32, col as u32));
        } else if v != 0.0 {
            return Err(Error::NonBinaryValue { row, col, value: v });
        }
    }
    events.sort_unstable();
    Ok(events)
}

/// An (input, label) pair over one detector. Label spikes mark coincidence
/// photons and are always a subset of the input events.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    input: SpikeTrain,
    label: SpikeTrain,
}

impl Sample {
    pub fn new(input: SpikeTrain, label: SpikeTrain) -> Result<Self> {
        if input.config() != label.config() {
            return Err(Error::ConfigMismatch(format!(
                "input is {}x{}, label is {}x{}",
                input.config().num_crystals(),
                input.config().num_timesteps(),
                label.config().num_crystals(),
                label.config().num_timesteps(),
            )));
        }
        for ev in label.events() {
            if !input.contains(*ev) {
                return Err(Error::LabelNotInInput {
                    crystal: ev.crystal,
                    time: ev.time,
                });
            }
        }
        Ok(Self { input, label })
    }

    pub fn config(&self) -> DetectorConfig {
        self.input.config()
    }

    pub fn input(&self) -> &SpikeTrain {
        &self.input
    }

    pub fn label(&self) -> &SpikeTrain {
        &self.label
    }
}

/// An accepted coincidence: two distinct crystals that fired at one time
/// step, normalized so `crystal_a < crystal_b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoincidencePair {
    pub time: u32,
    pub crystal_a: u32,
    pub crystal_b: u32,
}

impl CoincidencePair {
    pub fn new(time: u32, c1: u32, c2: u32) -> Result<Self> {
        if c1 == c2 {
            return Err(Error::InvalidConfig(format!(
                "coincidence pair needs two distinct crystals, got {c1} twice"
            )));
        }
        Ok(Self {
            time,
            crystal_a: c1.min(c2),
            crystal_b: c1.max(c2),
        })
    }
}
