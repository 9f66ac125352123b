//! Cochlear cepstral lifting and CCGRAM assembly.
//!
//! For every cochlear angle the log energies of its `K` frames are lifted
//! with
//!
//! ```text
//! c[m] = √(2/K) · Σ_{k=1..K} log X_k · cos(π·k/K · (m − ½)),   m = 1..M
//! ```
//!
//! giving an image with one row per angle and one column per quefrency
//! index. The sum is evaluated exactly as written; note that the `k = K` term
//! carries `cos(π(m − ½)) = 0` for every `m`, so the last frame of a row does
//! not contribute.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::cochlear_transform::{build_filterbank, signal_mode_energies, CochlearFilterbank, FrameSpec};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::preprocess::AudioSegment;
use crate::tonotopy::AngleGrid;

pub const DEFAULT_EPS_FLOOR: f64 = 1e-10;

/// Cochlear cepstrogram: rows are cochlear angles, columns quefrency indexes.
#[derive(Debug, Clone, PartialEq)]
pub struct CCGram {
    pub values: Matrix,
    pub spacing_deg: f64,
    pub source_id: String,
    pub config_hash: [u8; 16],
}

impl CCGram {
    pub fn new(values: Matrix, spacing_deg: f64) -> Self {
        Self {
            values,
            spacing_deg,
            source_id: String::new(),
            config_hash: [0; 16],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    /// Angle grid implied by the row count and spacing.
    pub fn grid(&self) -> Result<AngleGrid> {
        AngleGrid::new(self.spacing_deg, self.rows())
    }

    pub fn with_values(&self, values: Matrix) -> Self {
        Self {
            values,
            spacing_deg: self.spacing_deg,
            source_id: self.source_id.clone(),
            config_hash: self.config_hash,
        }
    }
}

/// Which axis the cepstral sum runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LiftAxis {
    /// Per angle, across frames: image is angle × quefrency.
    #[default]
    Frames,
    /// Per frame, across angles: image is quefrency × frame.
    Modes,
}

impl fmt::Display for LiftAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LiftAxis::Frames => "frames",
            LiftAxis::Modes => "modes",
        })
    }
}

impl FromStr for LiftAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frames" => Ok(LiftAxis::Frames),
            "modes" => Ok(LiftAxis::Modes),
            other => Err(Error::InvalidConfig(format!("unknown lift axis {other:?}"))),
        }
    }
}

/// Lifts `K` log energies to `m_count` cochlear cepstral coefficients.
pub fn cfcc_lift(log_energy: &[f64], m_count: usize) -> Result<Vec<f64>> {
    LiftMatrix::new(log_energy.len(), m_count)?.apply(log_energy)
}

/// Cached cosine table for repeated lifts of the same size.
#[derive(Debug, Clone)]
pub struct LiftMatrix {
    k_len: usize,
    m_count: usize,
    // row-major [m][k], k = 1..=K
    table: Vec<f64>,
    scale: f64,
}

impl LiftMatrix {
    pub fn new(k_len: usize, m_count: usize) -> Result<Self> {
        if k_len == 0 {
            return Err(Error::Empty("log-energy vector"));
        }
        if m_count == 0 {
            return Err(Error::InvalidConfig("coefficient count must be ≥ 1".into()));
        }
        let kf = k_len as f64;
        // cos(πk(m−½)/K) = cos(π·n/(2K)) with n = k(2m−1) reduced mod 4K.
        let period = 4 * k_len as u64;
        let mut table = Vec::with_capacity(k_len * m_count);
        for m in 1..=m_count as u64 {
            for k in 1..=k_len as u64 {
                let n = k * (2 * m - 1) % period;
                let c = if n == period / 4 || n == 3 * period / 4 {
                    0.0
                } else {
                    (PI * n as f64 / (2.0 * kf)).cos()
                };
                table.push(c);
            }
        }
        Ok(Self {
            k_len,
            m_count,
            table,
            scale: (2.0 / kf).sqrt(),
        })
    }

    pub fn apply(&self, log_energy: &[f64]) -> Result<Vec<f64>> {
        if log_energy.len() != self.k_len {
            return Err(Error::DimensionMismatch {
                context: "cfcc lift input",
                expected: self.k_len,
                actual: log_energy.len(),
            });
        }
        if log_energy.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cfcc lift input"));
        }
        Ok(self
            .table
            .chunks_exact(self.k_len)
            .map(|cosines| {
                let sum: f64 = cosines.iter().zip(log_energy).map(|(c, x)| x * c).sum();
                self.scale * sum
            })
            .collect())
    }

    /// The `M × K` lift as a matrix (scale included).
    pub fn to_matrix(&self) -> Matrix {
        let data = self.table.iter().map(|c| self.scale * c).collect();
        Matrix::from_vec(self.m_count, self.k_len, data).expect("table size")
    }
}

/// Everything that determines a CCGRAM besides the waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct CcgramConfig {
    pub frame: FrameSpec,
    pub grid_spacing_deg: f64,
    pub grid_count: usize,
    pub q_factor: f64,
    pub eps_floor: f64,
    pub lift_axis: LiftAxis,
    /// Truncate the quefrency axis to this many coefficients.
    pub num_coeffs: Option<usize>,
}

impl Default for CcgramConfig {
    fn default() -> Self {
        Self {
            frame: FrameSpec::default(),
            grid_spacing_deg: 45.0,
            grid_count: 20,
            q_factor: 4.0,
            eps_floor: DEFAULT_EPS_FLOOR,
            lift_axis: LiftAxis::Frames,
            num_coeffs: None,
        }
    }
}

impl CcgramConfig {
    /// 16-byte fingerprint of the canonical parameter text.
    pub fn fingerprint(&self) -> [u8; 16] {
        let canonical = format!(
            "window_ms={:?};overlap={:?};window=hamming;sample_rate={};spacing={:?};count={};q={:?};eps={:?};axis={};coeffs={:?}",
            self.frame.window_ms,
            self.frame.overlap_fraction,
            self.frame.sample_rate,
            self.grid_spacing_deg,
            self.grid_count,
            self.q_factor,
            self.eps_floor,
            self.lift_axis,
            self.num_coeffs,
        );
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = [0u8; 16];
        out.copy_from_slice(&digest[..16]);
        out
    }
}

/// Reusable CCGRAM extractor holding the filterbank for one configuration.
#[derive(Debug, Clone)]
pub struct CcgramExtractor {
    config: CcgramConfig,
    bank: CochlearFilterbank,
    hash: [u8; 16],
}

impl CcgramExtractor {
    pub fn new(config: CcgramConfig) -> Result<Self> {
        config.frame.validate()?;
        if !(config.eps_floor > 0.0) {
            return Err(Error::InvalidConfig("eps floor must be positive".into()));
        }
        let grid = AngleGrid::new(config.grid_spacing_deg, config.grid_count)?;
        let bank = build_filterbank(&grid, config.frame.fft_size(), config.frame.sample_rate, config.q_factor)?;
        let hash = config.fingerprint();
        Ok(Self { config, bank, hash })
    }

    pub fn config(&self) -> &CcgramConfig {
        &self.config
    }

    pub fn filterbank(&self) -> &CochlearFilterbank {
        &self.bank
    }

    pub fn extract(&self, segment: &AudioSegment) -> Result<CCGram> {
        if segment.sample_rate != self.config.frame.sample_rate {
            return Err(Error::InvalidConfig(format!(
                "segment at {} Hz, extractor expects {} Hz",
                segment.sample_rate, self.config.frame.sample_rate
            )));
        }
        let mut ccg = self.extract_samples(&segment.samples)?;
        ccg.source_id = segment.id();
        Ok(ccg)
    }

    pub fn extract_samples(&self, samples: &[f64]) -> Result<CCGram> {
        let energies = signal_mode_energies(samples, &self.config.frame, &self.bank)?;
        let values = lift_energies(
            &energies.energies,
            self.config.eps_floor,
            self.config.lift_axis,
            self.config.num_coeffs,
        )?;
        Ok(CCGram {
            values,
            spacing_deg: self.config.grid_spacing_deg,
            source_id: String::new(),
            config_hash: self.hash,
        })
    }
}

/// Floors, logs and lifts an angle × frame energy matrix.
pub fn lift_energies(
    energies: &Matrix,
    eps_floor: f64,
    axis: LiftAxis,
    num_coeffs: Option<usize>,
) -> Result<Matrix> {
    let log_energy = energies.map(|x| x.max(eps_floor).ln());
    let (lines, k_len) = match axis {
        LiftAxis::Frames => (log_energy, energies.cols()),
        LiftAxis::Modes => (log_energy.transpose(), energies.rows()),
    };
    let m_count = num_coeffs.unwrap_or(k_len);
    if m_count > k_len {
        return Err(Error::InvalidConfig(format!(
            "{m_count} coefficients requested from {k_len} inputs"
        )));
    }
    let lift = LiftMatrix::new(k_len, m_count)?;
    let rows = (0..lines.rows())
        .map(|r| lift.apply(lines.row(r)))
        .collect::<Result<Vec<_>>>()?;
    let out = Matrix::from_rows(&rows)?;
    Ok(match axis {
        LiftAxis::Frames => out,
        LiftAxis::Modes => out.transpose(),
    })
}

/// One-shot CCGRAM of a segment with an explicit filterbank.
pub fn compute_ccgram(
    segment: &AudioSegment,
    frame_spec: &FrameSpec,
    bank: &CochlearFilterbank,
    eps_floor: f64,
) -> Result<CCGram> {
    if segment.sample_rate != frame_spec.sample_rate {
        return Err(Error::InvalidConfig(format!(
            "segment at {} Hz, frame spec expects {} Hz",
            segment.sample_rate, frame_spec.sample_rate
        )));
    }
    let energies = signal_mode_energies(&segment.samples, frame_spec, bank)?;
    let values = lift_energies(&energies.energies, eps_floor, LiftAxis::Frames, None)?;
    Ok(CCGram {
        values,
        spacing_deg: bank.grid.spacing(),
        source_id: segment.id(),
        config_hash: [0; 16],
    })
}
