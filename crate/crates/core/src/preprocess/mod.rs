//! Raw audio conditioning: resampling, max scaling, energy-based silence
//! removal and fixed-length segmentation.

mod resample;
mod wav;

use std::ops::Range;
use std::path::Path;

pub use resample::resample;
pub use wav::{read_wav, write_wav_f32, write_wav_i16};

use crate::cochlear_transform::{frame_signal, FrameSpec, SpectrumAnalyzer};
use crate::error::{Error, Result};

pub const TARGET_RATE: u32 = 16_000;

/// Where a segment came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Origin {
    pub source: String,
    pub start_seconds: f64,
}

/// Mono waveform with speaker and rating metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSegment {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub speaker_id: String,
    pub arousal: Option<u8>,
    pub valence: Option<u8>,
    pub origin: Origin,
}

impl AudioSegment {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
            speaker_id: String::new(),
            arousal: None,
            valence: None,
            origin: Origin::default(),
        }
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn id(&self) -> String {
        format!("{}:{}@{:.3}", self.speaker_id, self.origin.source, self.origin.start_seconds)
    }

    fn child(&self, samples: Vec<f64>, offset_samples: usize) -> Self {
        Self {
            samples,
            sample_rate: self.sample_rate,
            speaker_id: self.speaker_id.clone(),
            arousal: self.arousal,
            valence: self.valence,
            origin: Origin {
                source: self.origin.source.clone(),
                start_seconds: self.origin.start_seconds + offset_samples as f64 / self.sample_rate as f64,
            },
        }
    }
}

/// Divides by the peak magnitude. Returns the scaled signal and whether the
/// input was all zeros (in which case it is returned unchanged).
pub fn max_scale(signal: &[f64]) -> (Vec<f64>, bool) {
    let peak = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        log::warn!("max scaling an all-zero signal of {} samples", signal.len());
        return (signal.to_vec(), true);
    }
    (signal.iter().map(|v| v / peak).collect(), false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VadConfig {
    pub frame: FrameSpec,
    /// Frames below this fraction of the median frame energy are silent.
    pub threshold_ratio: f64,
    /// Voiced runs closer than this are merged.
    pub merge_gap_ms: f64,
    /// Absolute energy at or below which a frame is always silent.
    pub min_energy: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self {
            frame: FrameSpec::default(),
            threshold_ratio: 0.1,
            merge_gap_ms: 100.0,
            min_energy: 1e-10,
        }
    }
}

/// Short-time spectral energy of every frame.
pub fn frame_energies(signal: &[f64], frame: &FrameSpec) -> Result<Vec<f64>> {
    let frames = frame_signal(signal, frame)?;
    let analyzer = SpectrumAnalyzer::new(frame.fft_size(), frame.sample_rate);
    frames
        .iter()
        .map(|f| Ok(analyzer.spectrum(f)?.bins.iter().map(|c| c.norm_sqr()).sum()))
        .collect()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Voiced sample intervals, ordered and disjoint.
///
/// Each frame stands for the hop-length span around its centre; the first
/// and last frames extend to the signal edges.
pub fn remove_silence(signal: &[f64], config: &VadConfig) -> Result<Vec<Range<usize>>> {
    let energies = frame_energies(signal, &config.frame)?;
    let threshold = config.threshold_ratio * median(&energies);
    let window = config.frame.window_len();
    let hop = config.frame.hop_len();
    let last = energies.len() - 1;
    let span = |t: usize| -> Range<usize> {
        let start = if t == 0 { 0 } else { t * hop + (window - hop) / 2 };
        let end = if t == last {
            signal.len()
        } else {
            t * hop + (window - hop) / 2 + hop
        };
        start..end
    };

    let mut runs: Vec<Range<usize>> = Vec::new();
    for (t, &e) in energies.iter().enumerate() {
        let voiced = e > config.min_energy && e >= threshold;
        if !voiced {
            continue;
        }
        let s = span(t);
        match runs.last_mut() {
            Some(r) if r.end == s.start => r.end = s.end,
            _ => runs.push(s),
        }
    }

    let gap = (config.merge_gap_ms * config.frame.sample_rate as f64 / 1000.0).round() as usize;
    let mut merged: Vec<Range<usize>> = Vec::with_capacity(runs.len());
    for r in runs {
        match merged.last_mut() {
            Some(prev) if r.start - prev.end < gap => prev.end = r.end,
            _ => merged.push(r),
        }
    }
    Ok(merged)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentConfig {
    pub seconds: f64,
    /// Remainders shorter than this are dropped; longer ones are padded.
    pub min_seconds: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            seconds: 3.0,
            min_seconds: 1.0,
        }
    }
}

/// A fixed-length cut and how many of its samples are real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCut {
    pub samples: Vec<f64>,
    pub start: usize,
    pub unpadded_len: usize,
}

/// Consecutive non-overlapping cuts of `seconds`; a final remainder of at
/// least `min_seconds` is zero-padded at the tail, a shorter one dropped.
pub fn segment_signal(signal: &[f64], sample_rate: u32, config: &SegmentConfig) -> Vec<SegmentCut> {
    let len = (config.seconds * sample_rate as f64).round() as usize;
    let min_len = (config.min_seconds * sample_rate as f64).round() as usize;
    let mut cuts = Vec::new();
    if len == 0 {
        return cuts;
    }
    let mut start = 0;
    while start < signal.len() {
        let end = (start + len).min(signal.len());
        let real = end - start;
        if real < len && real < min_len {
            break;
        }
        let mut samples = signal[start..end].to_vec();
        samples.resize(len, 0.0);
        cuts.push(SegmentCut {
            samples,
            start,
            unpadded_len: real,
        });
        start = end;
    }
    cuts
}

/// Three-second segments of `voiced` (metadata carried over).
pub fn segment_3s(voiced: &AudioSegment) -> Vec<AudioSegment> {
    segment_with(voiced, &SegmentConfig::default())
}

pub fn segment_with(voiced: &AudioSegment, config: &SegmentConfig) -> Vec<AudioSegment> {
    segment_signal(&voiced.samples, voiced.sample_rate, config)
        .into_iter()
        .map(|cut| voiced.child(cut.samples, cut.start))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PreprocessConfig {
    pub target_rate: Option<u32>,
    pub vad: VadConfig,
    pub segment: SegmentConfig,
}

impl PreprocessConfig {
    fn rate(&self) -> u32 {
        self.target_rate.unwrap_or(TARGET_RATE)
    }
}

/// Resample → max scale → silence removal → rescale each voiced run →
/// fixed-length segmentation.
pub fn preprocess_signal(recording: &AudioSegment, config: &PreprocessConfig) -> Result<Vec<AudioSegment>> {
    let rate = config.rate();
    if config.vad.frame.sample_rate != rate {
        return Err(Error::InvalidConfig(format!(
            "VAD frames at {} Hz but target rate is {rate} Hz",
            config.vad.frame.sample_rate
        )));
    }
    let resampled = resample(&recording.samples, recording.sample_rate, rate)?;
    let (scaled, _) = max_scale(&resampled);
    let base = AudioSegment {
        samples: Vec::new(),
        sample_rate: rate,
        ..recording.clone()
    };
    let mut out = Vec::new();
    if scaled.len() < config.vad.frame.window_len() {
        return Ok(out);
    }
    for run in remove_silence(&scaled, &config.vad)? {
        let (voiced, _) = max_scale(&scaled[run.clone()]);
        let voiced = base.child(voiced, run.start);
        out.extend(segment_with(&voiced, &config.segment));
    }
    Ok(out)
}

/// [`preprocess_signal`] on a WAV file.
pub fn preprocess_file(
    path: &Path,
    speaker_id: &str,
    arousal: Option<u8>,
    valence: Option<u8>,
    config: &PreprocessConfig,
) -> Result<Vec<AudioSegment>> {
    let (samples, sample_rate) = read_wav(path)?;
    let recording = AudioSegment {
        samples,
        sample_rate,
        speaker_id: speaker_id.to_string(),
        arousal,
        valence,
        origin: Origin {
            source: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            start_seconds: 0.0,
        },
    };
    preprocess_signal(&recording, config)
}
