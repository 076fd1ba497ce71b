//! Monte Carlo generator of labeled coincidence datasets.
//!
//! Each decay places two photons on (near-)opposite crystals at the same
//! time step and each photon is detected independently with a fixed
//! probability. Events from decays where both photons were detected form
//! the label; every detected photon lands in the input train. Sample
//! generation is counter-based: sample `i` of a dataset is produced by a
//! dedicated RNG stream, so datasets are reproducible and order-independent
//! under parallel generation.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::DatasetManifest;
use crate::types::{DetectorConfig, Sample, SpikeEvent, SpikeTrain};

/// Parameters of the decay process and the detector it plays out on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulatorConfig {
    detector: DetectorConfig,
    events_per_sample: u32,
    detection_probability: f64,
    max_shift: u32,
    rng_seed: u64,
}

impl SimulatorConfig {
    /// Validates and builds a configuration.
    ///
    /// `detection_probability` must lie in (0, 1] and `max_shift` must stay
    /// below a quarter ring so that shifted partners remain closer to the
    /// opposite crystal than to the source.
    pub fn new(
        detector: DetectorConfig,
        events_per_sample: u32,
        detection_probability: f64,
        max_shift: u32,
        rng_seed: u64,
    ) -> Result<Self> {
        if events_per_sample == 0 {
            return Err(Error::InvalidConfig(
                "events_per_sample must be at least 1".into(),
            ));
        }
        if !(detection_probability > 0.0 && detection_probability <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "detection_probability must be in (0, 1], got {detection_probability}"
            )));
        }
        if max_shift >= detector.num_crystals() / 4 {
            return Err(Error::InvalidConfig(format!(
                "max_shift {} must be below a quarter ring ({} crystals)",
                max_shift,
                detector.num_crystals() / 4
            )));
        }
        Ok(Self {
            detector,
            events_per_sample,
            detection_probability,
            max_shift,
            rng_seed,
        })
    }

    /// Clinical-scale preset: 240 crystals, 2000 time steps, 40 decays.
    pub fn clinical(rng_seed: u64) -> Self {
        let detector = DetectorConfig::new(240, 2000).expect("preset dimensions are valid");
        Self::new(detector, 40, 0.8, 2, rng_seed).expect("preset parameters are valid")
    }

    /// SAFIR-scale preset: 2880 crystals, 2000 time steps, 400 decays.
    pub fn safir(rng_seed: u64) -> Self {
        let detector = DetectorConfig::new(2880, 2000).expect("preset dimensions are valid");
        Self::new(detector, 400, 0.8, 2, rng_seed).expect("preset parameters are valid")
    }

    pub fn detector(&self) -> DetectorConfig {
        self.detector
    }

    pub fn events_per_sample(&self) -> u32 {
        self.events_per_sample
    }

    pub fn detection_probability(&self) -> f64 {
        self.detection_probability
    }

    pub fn max_shift(&self) -> u32 {
        self.max_shift
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }
}

/// Outcome counts of the decays behind one sample.
///
/// `decays == pair_detected + single_detected + undetected` always holds;
/// the counts classify decays, not photons.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecayTally {
    pub decays: u64,
    pub pair_detected: u64,
    pub single_detected: u64,
    pub undetected: u64,
}

impl DecayTally {
    pub fn merge(&mut self, other: &DecayTally) {
        self.decays += other.decays;
        self.pair_detected += other.pair_detected;
        self.single_detected += other.single_detected;
        self.undetected += other.undetected;
    }
}

/// Generates sample `stream_index` of the dataset described by `config`.
pub fn generate_sample(config: &SimulatorConfig, stream_index: u64) -> Sample {
    generate_sample_tallied(config, stream_index).0
}

/// Like [`generate_sample`], also reporting how each decay was resolved.
pub fn generate_sample_tallied(config: &SimulatorConfig, stream_index: u64) -> (Sample, DecayTally) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(stream_index);

    let crystals = i64::from(config.detector.num_crystals());
    let timesteps = config.detector.num_timesteps();
    let shift = i64::from(config.max_shift);

    let mut input = BTreeSet::new();
    let mut label = BTreeSet::new();
    let mut tally = DecayTally::default();

    for _ in 0..config.events_per_sample {
        let time = rng.random_range(0..timesteps);
        let first = rng.random_range(0..crystals);
        let offset = rng.random_range(-shift..=shift);
        let second = (first + crystals / 2 + offset).rem_euclid(crystals);

        let hit_first = rng.random_bool(config.detection_probability);
        let hit_second = rng.random_bool(config.detection_probability);

        let first = SpikeEvent::new(first as u32, time);
        let second = SpikeEvent::new(second as u32, time);
        if hit_first {
            input.insert(first);
        }
        if hit_second {
            input.insert(second);
        }

        tally.decays += 1;
        match (hit_first, hit_second) {
            (true, true) => {
                label.insert(first);
                label.insert(second);
                tally.pair_detected += 1;
            }
            (true, false) | (false, true) => tally.single_detected += 1,
            (false, false) => tally.undetected += 1,
        }
    }

    let input = SpikeTrain::new(config.detector, input.into_iter().collect())
        .expect("generated events are in bounds and deduplicated");
    let label = SpikeTrain::new(config.detector, label.into_iter().collect())
        .expect("generated events are in bounds and deduplicated");
    let sample = Sample::new(input, label).expect("label events are a subset of input events");
    (sample, tally)
}

/// Generates `num_samples` samples plus the manifest describing them.
///
/// Samples are produced in parallel; sample `i` depends only on
/// `(config.rng_seed, i)`, so the output is independent of thread count.
pub fn generate_dataset(
    config: &SimulatorConfig,
    num_samples: u64,
) -> Result<(Vec<Sample>, DatasetManifest)> {
    if num_samples == 0 {
        return Err(Error::InvalidConfig("num_samples must be at least 1".into()));
    }
    let samples: Vec<Sample> = (0..num_samples)
        .into_par_iter()
        .map(|i| generate_sample(config, i))
        .collect();
    let manifest = DatasetManifest::new(config.detector, num_samples, false, config.rng_seed);
    Ok((samples, manifest))
}
