//! Bit-exact binary dataset format plus CSV export.
//!
//! Layout (all integers little-endian, no padding, no compression):
//!
//! ```text
//! magic            4 bytes  "PETN"
//! version          u32
//! num_crystals     u32
//! num_timesteps    u32
//! num_samples      u64
//! flags            u32      bit 0 = dataset intended for geometry features
//! rng_seed         u64
//! per sample:
//!   input_count    u32
//!   input events   (time u32, crystal u32) x input_count, (time, crystal)-sorted
//!   label_count    u32
//!   label events   likewise
//! ```
//!
//! Geometry features are never stored; they are a pure function of the input
//! and are recomputed on load.

use std::fs;
use std::io::Write;
use std::path::Path;

use byteorder::{LittleEndian, WriteBytesExt};

use crate::error::{Error, Result};
use crate::types::{DetectorConfig, Sample, SpikeEvent, SpikeTrain};

pub const MAGIC: &[u8; 4] = b"PETN";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 36;

const FLAG_GEOMETRY: u32 = 1;

/// Header metadata stored ahead of the sample records.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DatasetManifest {
    pub version: u32,
    pub config: DetectorConfig,
    pub num_samples: u64,
    pub has_geometry_features: bool,
    /// Seed used for generation; 0 marks external or derived data.
    pub rng_seed: u64,
}

impl DatasetManifest {
    pub fn new(
        config: DetectorConfig,
        num_samples: u64,
        has_geometry_features: bool,
        rng_seed: u64,
    ) -> Self {
        Self {
            version: FORMAT_VERSION,
            config,
            num_samples,
            has_geometry_features,
            rng_seed,
        }
    }
}

/// Serialize a dataset. Returns the number of bytes written.
pub fn write_dataset<W: Write>(
    samples: &[Sample],
    manifest: &DatasetManifest,
    mut dest: W,
) -> Result<u64> {
    if manifest.num_samples != samples.len() as u64 {
        return Err(Error::ConfigMismatch(format!(
            "manifest claims {} samples, {} given",
            manifest.num_samples,
            samples.len()
        )));
    }
    for s in samples {
        if s.config() != manifest.config {
            return Err(Error::ConfigMismatch(format!(
                "sample config {}x{} differs from manifest {}x{}",
                s.config().num_crystals(),
                s.config().num_timesteps(),
                manifest.config.num_crystals(),
                manifest.config.num_timesteps(),
            )));
        }
    }

    let mut written: u64 = 0;
    dest.write_all(MAGIC)?;
    written += 4;
    dest.write_u32::<LittleEndian>(manifest.version)?;
    dest.write_u32::<LittleEndian>(manifest.config.num_crystals())?;
    dest.write_u32::<LittleEndian>(manifest.config.num_timesteps())?;
    written += 12;
    dest.write_u64::<LittleEndian>(manifest.num_samples)?;
    written += 8;
    let flags = if manifest.has_geometry_features {
        FLAG_GEOMETRY
    } else {
        0
    };
    dest.write_u32::<LittleEndian>(flags)?;
    written += 4;
    dest.write_u64::<LittleEndian>(manifest.rng_seed)?;
    written += 8;

    for s in samples {
        written += write_train(s.input(), &mut dest)?;
        written += write_train(s.label(), &mut dest)?;
    }
    dest.flush()?;
    Ok(written)
}

fn write_train<W: Write>(train: &SpikeTrain, dest: &mut W) -> Result<u64> {
    dest.write_u32::<LittleEndian>(train.len() as u32)?;
    for ev in train.events() {
        dest.write_u32::<LittleEndian>(ev.time)?;
        dest.write_u32::<LittleEndian>(ev.crystal)?;
    }
    Ok(4 + 8 * train.len() as u64)
}

/// Convenience wrapper writing to a file path.
pub fn write_dataset_file<P: AsRef<Path>>(
    samples: &[Sample],
    manifest: &DatasetManifest,
    path: P,
) -> Result<u64> {
    let file = fs::File::create(path)?;
    write_dataset(samples, manifest, std::io::BufWriter::new(file))
}

/// Parse a dataset from bytes, validating magic, version, bounds and
/// sortedness. Errors carry the byte offset of the offending field.
pub fn read_dataset(bytes: &[u8]) -> Result<(DatasetManifest, Vec<Sample>)> {
    let mut p = Parser { bytes, pos: 0 };

    let magic = p.take(4)?;
    if magic != MAGIC {
        return Err(Error::BadMagic { offset: 0 });
    }
    let version = p.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let crystals = p.u32()?;
    let timesteps = p.u32()?;
    let config = DetectorConfig::new(crystals, timesteps)?;
    let num_samples = p.u64()?;
    let flags = p.u32()?;
    let rng_seed = p.u64()?;

    let manifest = DatasetManifest {
        version,
        config,
        num_samples,
        has_geometry_features: flags & FLAG_GEOMETRY != 0,
        rng_seed,
    };

    let mut samples = Vec::new();
    for _ in 0..num_samples {
        let input = read_train(&mut p, config)?;
        let label = read_train(&mut p, config)?;
        samples.push(Sample::new(input, label)?);
    }
    if p.pos != bytes.len() {
        return Err(Error::InvalidField {
            offset: p.pos as u64,
            reason: format!("{} trailing bytes after last sample", bytes.len() - p.pos),
        });
    }
    Ok((manifest, samples))
}

/// Convenience wrapper reading from a file path.
pub fn read_dataset_file<P: AsRef<Path>>(path: P) -> Result<(DatasetManifest, Vec<Sample>)> {
    let bytes = fs::read(path)?;
    read_dataset(&bytes)
}

fn read_train(p: &mut Parser<'_>, config: DetectorConfig) -> Result<SpikeTrain> {
    let count = p.u32()? as usize;
    let mut events = Vec::with_capacity(count.min(1 << 20));
    let mut prev: Option<SpikeEvent> = None;
    for _ in 0..count {
        let offset = p.pos as u64;
        let time = p.u32()?;
        let crystal = p.u32()?;
        if crystal >= config.num_crystals() || time >= config.num_timesteps() {
            return Err(Error::InvalidField {
                offset,
                reason: format!(
                    "event (t={time}, c={crystal}) out of bounds for {}x{}",
                    config.num_crystals(),
                    config.num_timesteps()
                ),
            });
        }
        let ev = SpikeEvent::new(crystal, time);
        if let Some(prev) = prev {
            if ev <= prev {
                return Err(Error::InvalidField {
                    offset,
                    reason: format!(
                        "event (t={time}, c={crystal}) not strictly after (t={}, c={})",
                        prev.time, prev.crystal
                    ),
                });
            }
        }
        prev = Some(ev);
        events.push(ev);
    }
    SpikeTrain::new(config, events)
}

/// Bounds-checked little-endian cursor shared by the binary readers.
pub(crate) struct Parser<'a> {
    pub(crate) bytes: &'a [u8],
    pub(crate) pos: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                offset: self.pos as u64,
                expected: n,
                available: self.bytes.len() - self.pos,
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().unwrap()))
    }
}

/// Export one sample as CSV with header `kind,time,crystal`, input rows
/// before label rows, each block (time, crystal)-sorted.
pub fn export_csv<W: Write>(sample: &Sample, mut dest: W) -> Result<()> {
    writeln!(dest, "kind,time,crystal")?;
    for ev in sample.input().events() {
        writeln!(dest, "input,{},{}", ev.time, ev.crystal)?;
    }
    for ev in sample.label().events() {
        writeln!(dest, "label,{},{}", ev.time, ev.crystal)?;
    }
    dest.flush()?;
    Ok(())
}
