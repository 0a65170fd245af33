//! Deterministic dataset synthesis.
//!
//! Every record is a pure function of `(class, seed, duration, sample_rate,
//! snr_db)`. The record seed is derived from the master seed and the global
//! record index; the clean waveform draws its parameters from child stream 0
//! and the channel noise from child stream 1. Evaluation uses this to
//! regenerate the clean reference and transmitted bits of any record.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::manifest::write_manifest;
use crate::io::raw::write_raw_f32;
use crate::record::{binary_label_for, DatasetRecord, SnrDb, NOISY_MAX_DB};
use crate::rng::{derive_seed, SeededRng};
use crate::signal::{sample_count, SampleBuffer, SignalClass, DEFAULT_SAMPLE_RATE};
use crate::synth::channel::{add_awgn, gaussian_noise, noise_variance_for};
use crate::synth::morse::{gen_cw, CwTimeline, MORSE_ALPHABET};
use crate::synth::psk31::{gen_psk31, symbol_len};
use crate::synth::tones::{fsk8_symbol_len, gen_am, gen_fm, gen_fsk8};

/// Peak amplitude of every synthesized clean signal.
pub const SIGNAL_AMPLITUDE: f64 = 0.5;
/// Power of a full-amplitude sine; the reference for NOISE-class levels.
pub const REFERENCE_POWER: f64 = SIGNAL_AMPLITUDE * SIGNAL_AMPLITUDE / 2.0;

pub const FSK8_SPACING_HZ: f64 = 6.25;
pub const FSK8_BAUD: f64 = 6.25;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SIGNAL_DIR: &str = "signals";

fn default_duration() -> f64 {
    1.0
}

fn default_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Records per class.
    pub classes: BTreeMap<SignalClass, usize>,
    /// Record `j` of a class gets `snr_grid[j % len]`.
    pub snr_grid: Vec<SnrDb>,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    #[serde(default)]
    pub master_seed: u64,
}

/// What was transmitted, for decoders and reference metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Cw {
        timeline: CwTimeline,
        tone_freq: f64,
    },
    Am {
        carrier_freq: f64,
        mod_freq: f64,
        depth: f64,
    },
    Fm {
        carrier_freq: f64,
        mod_freq: f64,
        deviation: f64,
    },
    Psk31 {
        bits: Vec<bool>,
        carrier_freq: f64,
    },
    Fsk8 {
        symbols: Vec<u8>,
        base_freq: f64,
    },
    Noise,
}

#[derive(Debug, Clone)]
pub struct Rendered {
    pub clean: SampleBuffer,
    pub observed: SampleBuffer,
    pub truth: Truth,
}

fn random_text(rng: &mut SeededRng) -> String {
    let alphabet: Vec<char> = MORSE_ALPHABET.chars().collect();
    let n_words = 1 + rng.below(2) as usize;
    (0..n_words)
        .map(|_| {
            let len = 2 + rng.below(4) as usize;
            (0..len)
                .map(|_| alphabet[rng.below(alphabet.len() as u64) as usize])
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// The noiseless waveform of a record and its transmitted content.
pub fn render_clean(
    class: SignalClass,
    seed: u64,
    duration_s: f64,
    sample_rate: u32,
) -> Result<(SampleBuffer, Truth)> {
    let n = sample_count(duration_s, sample_rate)?;
    let mut rng = SeededRng::new(derive_seed(seed, 0));
    let (unit, truth) = match class {
        SignalClass::Cw => {
            let wpm = 15.0 + rng.below(16) as f64;
            let tone_freq = rng.range(500.0, 900.0);
            let text = random_text(&mut rng);
            let (buf, timeline) = gen_cw(&text, wpm, tone_freq, sample_rate, duration_s)?;
            (buf, Truth::Cw { timeline, tone_freq })
        }
        SignalClass::Am => {
            let carrier_freq = rng.range(800.0, 2000.0);
            let mod_freq = rng.range(100.0, 400.0);
            let depth = rng.range(0.3, 0.9);
            let buf = gen_am(carrier_freq, mod_freq, depth, 1.0, duration_s, sample_rate)?;
            (buf, Truth::Am { carrier_freq, mod_freq, depth })
        }
        SignalClass::Fm => {
            let carrier_freq = rng.range(1000.0, 2000.0);
            let mod_freq = rng.range(50.0, 300.0);
            let deviation = rng.range(100.0, 500.0);
            let buf = gen_fm(carrier_freq, mod_freq, deviation, 1.0, duration_s, sample_rate)?;
            (buf, Truth::Fm { carrier_freq, mod_freq, deviation })
        }
        SignalClass::Psk31 => {
            let carrier_freq = rng.range(800.0, 2000.0);
            let n_bits = n.div_ceil(symbol_len(sample_rate));
            let bits: Vec<bool> = (0..n_bits).map(|_| rng.bit()).collect();
            let buf = gen_psk31(&bits, carrier_freq, sample_rate)?.fit_to(n)?;
            (buf, Truth::Psk31 { bits, carrier_freq })
        }
        SignalClass::Fsk8 => {
            let base_freq = rng.range(1000.0, 2000.0);
            let n_sym = n.div_ceil(fsk8_symbol_len(FSK8_BAUD, sample_rate));
            let symbols: Vec<u8> = (0..n_sym).map(|_| rng.below(8) as u8).collect();
            let buf = gen_fsk8(&symbols, base_freq, FSK8_SPACING_HZ, FSK8_BAUD, 1.0, sample_rate)?
                .fit_to(n)?;
            (buf, Truth::Fsk8 { symbols, base_freq })
        }
        SignalClass::Noise => (SampleBuffer::zeros(n, sample_rate)?, Truth::Noise),
    };
    let clean = unit.with_samples(unit.samples().iter().map(|x| x * SIGNAL_AMPLITUDE).collect())?;
    Ok((clean, truth))
}

/// Clean waveform plus channel noise at `snr`.
///
/// NOISE-class records have no clean component; their noise level is set
/// relative to [`REFERENCE_POWER`].
pub fn render(
    class: SignalClass,
    seed: u64,
    duration_s: f64,
    sample_rate: u32,
    snr: SnrDb,
) -> Result<Rendered> {
    let (clean, truth) = render_clean(class, seed, duration_s, sample_rate)?;
    let noise_seed = derive_seed(seed, 1);
    let observed = match (class, snr) {
        (SignalClass::Noise, SnrDb::Db(db)) => clean.with_samples(gaussian_noise(
            clean.len(),
            noise_variance_for(REFERENCE_POWER, db),
            noise_seed,
        ))?,
        (SignalClass::Noise, SnrDb::Clean) => {
            return Err(Error::Config("NOISE records need a numeric snr_db".into()))
        }
        (_, SnrDb::Clean) => clean.clone(),
        (_, SnrDb::Db(db)) => add_awgn(&clean, db, noise_seed)?,
    };
    Ok(Rendered {
        clean,
        observed,
        truth,
    })
}

pub fn render_record(record: &DatasetRecord) -> Result<Rendered> {
    render(
        record.class,
        record.seed,
        record.duration_s,
        record.sample_rate,
        record.snr_db,
    )
}

fn noise_grid(grid: &[SnrDb]) -> Vec<SnrDb> {
    grid.iter()
        .copied()
        .filter(|s| matches!(s, SnrDb::Db(x) if *x <= NOISY_MAX_DB))
        .collect()
}

/// Records a config describes, without rendering them.
pub fn plan_records(config: &DatasetConfig) -> Result<Vec<DatasetRecord>> {
    if config.classes.is_empty() || config.classes.values().all(|&n| n == 0) {
        return Err(Error::Config("class list is empty".into()));
    }
    if config.snr_grid.is_empty() {
        return Err(Error::Config("snr_grid is empty".into()));
    }
    sample_count(config.duration_s, config.sample_rate)?;
    let mut records = Vec::new();
    let mut index = 0u64;
    for (&class, &count) in &config.classes {
        let grid = if class == SignalClass::Noise {
            let g = noise_grid(&config.snr_grid);
            if g.is_empty() && count > 0 {
                return Err(Error::Config(format!(
                    "NOISE class needs at least one snr_grid entry <= {NOISY_MAX_DB} dB"
                )));
            }
            g
        } else {
            config.snr_grid.clone()
        };
        for j in 0..count {
            let id = format!("{class}-{index:05}");
            let snr_db = grid[j % grid.len()];
            records.push(DatasetRecord {
                path: format!("{SIGNAL_DIR}/{id}.f32"),
                id,
                class,
                snr_db,
                seed: derive_seed(config.master_seed, index),
                duration_s: config.duration_s,
                sample_rate: config.sample_rate,
                binary_label: binary_label_for(snr_db),
            });
            index += 1;
        }
    }
    Ok(records)
}

/// Renders every record into `out_dir/signals/` and writes
/// `out_dir/manifest.jsonl`. Returns the records in manifest order.
pub fn synth_dataset(config: &DatasetConfig, out_dir: &Path) -> Result<Vec<DatasetRecord>> {
    let records = plan_records(config)?;
    let signal_dir = out_dir.join(SIGNAL_DIR);
    fs::create_dir_all(&signal_dir).map_err(|e| Error::io(&signal_dir, e))?;
    for record in &records {
        let rendered = render_record(record)?;
        write_raw_f32(&out_dir.join(&record.path), &rendered.observed)?;
    }
    write_manifest(&out_dir.join(MANIFEST_FILE), &records)?;
    Ok(records)
}
