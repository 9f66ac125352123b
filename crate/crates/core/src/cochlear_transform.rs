//! Short-time framing, the cochlear filterbank and per-frame cochlear mode
//! energies.
//!
//! Each cochlear mode is the frame spectrum weighted by a real kernel centred
//! on the characteristic frequency of one grid angle, scaled by `√θ` with θ
//! in radians. Mode energy is the summed squared magnitude over all bins.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlannerScalar};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tonotopy::AngleGrid;

/// Fraction of Nyquist that out-of-band centre frequencies are clipped to.
pub const NYQUIST_CLIP: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowShape {
    /// Symmetric Hamming, `0.54 − 0.46·cos(2πn/(W−1))`.
    #[default]
    Hamming,
}

impl WindowShape {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowShape::Hamming => {
                if len == 1 {
                    return vec![1.0];
                }
                let denom = (len - 1) as f64;
                (0..len)
                    .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / denom).cos())
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSpec {
    pub window_ms: f64,
    pub overlap_fraction: f64,
    pub window_shape: WindowShape,
    pub sample_rate: u32,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self {
            window_ms: 25.0,
            overlap_fraction: 0.5,
            window_shape: WindowShape::Hamming,
            sample_rate: 16_000,
        }
    }
}

impl FrameSpec {
    pub fn window_len(&self) -> usize {
        (self.window_ms * self.sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn hop_len(&self) -> usize {
        ((self.window_len() as f64 * (1.0 - self.overlap_fraction)).round() as usize).max(1)
    }

    /// Smallest power of two holding one window.
    pub fn fft_size(&self) -> usize {
        self.window_len().next_power_of_two()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::InvalidConfig(format!(
                "overlap fraction {} not in [0, 1)",
                self.overlap_fraction
            )));
        }
        if self.window_len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "window of {} ms is under two samples",
                self.window_ms
            )));
        }
        Ok(())
    }

    pub fn frame_count(&self, len: usize) -> Result<usize> {
        frame_count(len, self.window_len(), self.hop_len())
    }
}

/// `floor((len − window)/hop) + 1`, or an error below one window.
pub fn frame_count(len: usize, window: usize, hop: usize) -> Result<usize> {
    if len < window {
        return Err(Error::SignalTooShort { len, window });
    }
    Ok((len - window) / hop + 1)
}

/// Cuts `samples` into overlapping frames, each multiplied by the window.
pub fn frame_signal(samples: &[f64], spec: &FrameSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let window = spec.window_shape.coefficients(spec.window_len());
    let hop = spec.hop_len();
    let count = frame_count(samples.len(), window.len(), hop)?;
    Ok((0..count)
        .map(|t| {
            samples[t * hop..t * hop + window.len()]
                .iter()
                .zip(&window)
                .map(|(x, w)| x * w)
                .collect()
        })
        .collect())
}

/// One-sided spectrum of a frame: bins `0..=fft_size/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    pub bins: Vec<Complex64>,
    pub bin_hz: f64,
}

impl SpectralFrame {
    pub fn freq_axis(&self) -> Vec<f64> {
        (0..self.bins.len()).map(|b| b as f64 * self.bin_hz).collect()
    }
}

/// Zero-padded real FFT of frames. Uses the scalar planner so results do
/// not depend on which SIMD paths the host supports.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    fft_size: usize,
    sample_rate: u32,
}

impl SpectrumAnalyzer {
    pub fn new(fft_size: usize, sample_rate: u32) -> Self {
        let fft = FftPlannerScalar::new().plan_fft_forward(fft_size);
        Self {
            fft,
            fft_size,
            sample_rate,
        }
    }

    pub fn spectrum(&self, frame: &[f64]) -> Result<SpectralFrame> {
        if frame.len() > self.fft_size {
            return Err(Error::DimensionMismatch {
                context: "frame longer than FFT",
                expected: self.fft_size,
                actual: frame.len(),
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_size];
        for (slot, &x) in buf.iter_mut().zip(frame) {
            slot.re = x;
        }
        self.fft.process(&mut buf);
        buf.truncate(self.fft_size / 2 + 1);
        Ok(SpectralFrame {
            bins: buf,
            bin_hz: self.sample_rate as f64 / self.fft_size as f64,
        })
    }
}

/// Shape of a filterbank kernel around its centre frequency.
///
/// Implementations return a gain in `[0, 1]` that equals 1 at the centre.
pub trait KernelShape {
    fn gain(&self, freq_hz: f64, center_hz: f64) -> f64;
}

/// Gaussian on the log-frequency axis with half-power bandwidth
/// `center / q_factor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGaussian {
    pub q_factor: f64,
}

impl LogGaussian {
    /// Standard deviation in natural-log units.
    ///
    /// Half-power points sit where `gain = 1/√2`, i.e. at `±σ·√ln2` in log
    /// frequency; their linear spacing `2·fc·sinh(σ√ln2)` must equal `fc/q`.
    pub fn sigma(&self) -> f64 {
        (0.5 / self.q_factor).asinh() / std::f64::consts::LN_2.sqrt()
    }
}

impl KernelShape for LogGaussian {
    fn gain(&self, freq_hz: f64, center_hz: f64) -> f64 {
        if freq_hz <= 0.0 || center_hz <= 0.0 {
            return if freq_hz == center_hz { 1.0 } else { 0.0 };
        }
        let d = (freq_hz / center_hz).ln();
        let s = self.sigma();
        (-d * d / (2.0 * s * s)).exp()
    }
}

/// Real gains `Φ(θ_k, ω)`: one row per grid angle, one column per bin.
#[derive(Debug, Clone)]
pub struct CochlearFilterbank {
    pub kernels: Matrix,
    pub grid: AngleGrid,
    pub q_factor: f64,
    /// Characteristic frequency per row after Nyquist clipping.
    pub centers_hz: Vec<f64>,
    /// Bin index at which each row peaks.
    pub center_bins: Vec<usize>,
    /// Rows whose characteristic frequency had to be clipped.
    pub clipped_rows: Vec<usize>,
    pub fft_size: usize,
    pub sample_rate: u32,
}

impl CochlearFilterbank {
    pub fn bin_count(&self) -> usize {
        self.kernels.cols()
    }

    /// `√θ_k` with θ in radians.
    pub fn mode_gain(&self, row: usize) -> f64 {
        self.grid.angles()[row].to_radians().sqrt()
    }
}

/// Log-Gaussian filterbank over `grid`.
pub fn build_filterbank(
    grid: &AngleGrid,
    fft_size: usize,
    sample_rate: u32,
    q_factor: f64,
) -> Result<CochlearFilterbank> {
    if !(q_factor > 0.0) || !q_factor.is_finite() {
        return Err(Error::InvalidConfig(format!("q factor must be positive, got {q_factor}")));
    }
    let mut bank = build_filterbank_with(grid, fft_size, sample_rate, &LogGaussian { q_factor })?;
    bank.q_factor = q_factor;
    Ok(bank)
}

/// Filterbank with an arbitrary kernel shape.
///
/// Each kernel is centred on the FFT bin nearest its characteristic
/// frequency so that the row peak (gain 1) lands exactly on that bin.
pub fn build_filterbank_with(
    grid: &AngleGrid,
    fft_size: usize,
    sample_rate: u32,
    shape: &dyn KernelShape,
) -> Result<CochlearFilterbank> {
    if fft_size < 2 || !fft_size.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "fft size {fft_size} is not a power of two ≥ 2"
        )));
    }
    if sample_rate == 0 {
        return Err(Error::InvalidConfig("sample rate must be positive".into()));
    }
    let nyquist = sample_rate as f64 / 2.0;
    let bin_hz = sample_rate as f64 / fft_size as f64;
    let bins = fft_size / 2 + 1;

    let mut kernels = Matrix::zeros(grid.len(), bins);
    let mut centers_hz = Vec::with_capacity(grid.len());
    let mut center_bins = Vec::with_capacity(grid.len());
    let mut clipped_rows = Vec::new();

    for (k, (&theta, f)) in grid.angles().iter().zip(grid.frequencies()).enumerate() {
        let mut center = f;
        if center >= nyquist {
            center = NYQUIST_CLIP * nyquist;
            log::warn!(
                "cochlear angle {theta}° maps to {f:.1} Hz ≥ Nyquist {nyquist} Hz; clipped to {center:.1} Hz"
            );
            clipped_rows.push(k);
        }
        if center >= nyquist {
            return Err(Error::Domain {
                what: "centre frequency",
                value: center,
                min: 0.0,
                max: nyquist,
            });
        }
        let peak_bin = ((center / bin_hz).round() as usize).min(bins - 1);
        let snapped = peak_bin as f64 * bin_hz;
        let row = kernels.row_mut(k);
        for (b, g) in row.iter_mut().enumerate() {
            *g = shape.gain(b as f64 * bin_hz, snapped);
        }
        row[peak_bin] = 1.0;
        centers_hz.push(center);
        center_bins.push(peak_bin);
    }

    Ok(CochlearFilterbank {
        kernels,
        grid: grid.clone(),
        q_factor: f64::NAN,
        centers_hz,
        center_bins,
        clipped_rows,
        fft_size,
        sample_rate,
    })
}

/// Filtered spectra `FCT[k][ω] = √θ_k · P(ω) · Φ(θ_k, ω)`.
pub fn cochlear_modes(frame: &SpectralFrame, bank: &CochlearFilterbank) -> Result<Vec<Vec<Complex64>>> {
    if frame.bins.len() != bank.bin_count() {
        return Err(Error::DimensionMismatch {
            context: "spectral frame vs filterbank",
            expected: bank.bin_count(),
            actual: frame.bins.len(),
        });
    }
    Ok((0..bank.kernels.rows())
        .map(|k| {
            let gain = bank.mode_gain(k);
            frame
                .bins
                .iter()
                .zip(bank.kernels.row(k))
                .map(|(p, &phi)| p * (gain * phi))
                .collect()
        })
        .collect())
}

/// Per-angle, per-frame mode energies `X[k][t] = Σ_ω |FCT[k][ω](t)|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEnergies {
    pub energies: Matrix,
}

impl ModeEnergies {
    pub fn angles(&self) -> usize {
        self.energies.rows()
    }

    pub fn frames(&self) -> usize {
        self.energies.cols()
    }

    /// Mean energy per angle over all frames.
    pub fn time_average(&self) -> Vec<f64> {
        (0..self.angles())
            .map(|k| self.energies.row(k).iter().sum::<f64>() / self.frames() as f64)
            .collect()
    }
}

/// Collects energies from the modes of every frame (outer index = frame).
pub fn mode_energies(modes: &[Vec<Vec<Complex64>>]) -> Result<ModeEnergies> {
    let angles = modes.first().map_or(0, Vec::len);
    let mut energies = Matrix::zeros(angles, modes.len());
    for (t, frame_modes) in modes.iter().enumerate() {
        if frame_modes.len() != angles {
            return Err(Error::DimensionMismatch {
                context: "mode count per frame",
                expected: angles,
                actual: frame_modes.len(),
            });
        }
        for (k, spectrum) in frame_modes.iter().enumerate() {
            energies.set(k, t, spectrum.iter().map(Complex64::norm_sqr).sum());
        }
    }
    Ok(ModeEnergies { energies })
}

/// Frame → spectrum → modes → energies for a whole waveform.
pub fn signal_mode_energies(
    samples: &[f64],
    spec: &FrameSpec,
    bank: &CochlearFilterbank,
) -> Result<ModeEnergies> {
    let frames = frame_signal(samples, spec)?;
    let analyzer = SpectrumAnalyzer::new(bank.fft_size, spec.sample_rate);
    let modes = frames
        .iter()
        .map(|f| analyzer.spectrum(f).and_then(|s| cochlear_modes(&s, bank)))
        .collect::<Result<Vec<_>>>()?;
    mode_energies(&modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tonotopy::{angle_grid, place_to_frequency};

    fn default_bank() -> CochlearFilterbank {
        build_filterbank(&AngleGrid::default(), 512, 16_000, 4.0).unwrap()
    }

    fn tone(freq: f64, amp: f64, len: usize, sr: f64) -> Vec<f64> {
        (0..len).map(|n| amp * (2.0 * PI * freq * n as f64 / sr).sin()).collect()
    }

    #[test]
    fn default_frame_geometry() {
        let spec = FrameSpec::default();
        assert_eq!(spec.window_len(), 400);
        assert_eq!(spec.hop_len(), 200);
        assert_eq!(spec.fft_size(), 512);
        assert_eq!(spec.frame_count(48_000).unwrap(), 239);
        assert_eq!(spec.frame_count(400).unwrap(), 1);
        assert!(matches!(
            spec.frame_count(399),
            Err(Error::SignalTooShort { len: 399, window: 400 })
        ));
    }

    #[test]
    fn frames_are_windowed() {
        let spec = FrameSpec::default();
        let frames = frame_signal(&vec![1.0; 600], &spec).unwrap();
        assert_eq!(frames.len(), 2);
        let w = WindowShape::Hamming.coefficients(400);
        assert_eq!(frames[1], w);
        assert!((w[0] - 0.08).abs() < 1e-15);
    }

    #[test]
    fn rows_peak_at_nearest_bin() {
        let bank = default_bank();
        assert_eq!(bank.kernels.rows(), 20);
        assert_eq!(bank.clipped_rows, vec![0]);
        for k in 0..20 {
            let row = bank.kernels.row(k);
            let argmax = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let f = place_to_frequency(bank.grid.angles()[k]).unwrap().min(0.95 * 8000.0);
            let nearest = (f / 31.25).round() as usize;
            assert_eq!(argmax, nearest, "row {k}");
            assert_eq!(row[argmax], 1.0);
            assert!(row.iter().all(|&g| (0.0..=1.0).contains(&g)));
        }
    }

    #[test]
    fn apex_kernel_is_dc() {
        let grid = angle_grid(990.0, 1).unwrap();
        let bank = build_filterbank(&grid, 512, 16_000, 4.0).unwrap();
        // ≈10.4 Hz is nearest to bin 0 at 31.25 Hz resolution.
        assert_eq!(bank.center_bins, vec![0]);
        assert_eq!(bank.kernels.row(0)[0], 1.0);
        assert!(bank.kernels.row(0)[1..].iter().all(|&g| g == 0.0));
    }

    #[test]
    fn narrow_kernels_are_one_hot() {
        let bank = build_filterbank(&AngleGrid::default(), 512, 16_000, 1e6).unwrap();
        for k in 0..bank.kernels.rows() {
            let row = bank.kernels.row(k);
            for (b, &g) in row.iter().enumerate() {
                if b == bank.center_bins[k] {
                    assert_eq!(g, 1.0);
                } else {
                    assert!(g < 1e-12, "row {k} bin {b} gain {g}");
                }
            }
        }
    }

    #[test]
    fn half_power_bandwidth() {
        let shape = LogGaussian { q_factor: 4.0 };
        let s = shape.sigma() * std::f64::consts::LN_2.sqrt();
        let fc = 1000.0;
        let (lo, hi) = (fc * (-s).exp(), fc * s.exp());
        assert!((hi - lo - fc / 4.0).abs() < 1e-9);
        assert!((shape.gain(lo, fc) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((shape.gain(hi, fc) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn invalid_filterbank_args() {
        let g = AngleGrid::default();
        assert!(build_filterbank(&g, 500, 16_000, 4.0).is_err());
        assert!(build_filterbank(&g, 512, 16_000, 0.0).is_err());
    }

    #[test]
    fn zero_spectrum_gives_zero_modes() {
        let bank = default_bank();
        let frame = SpectralFrame {
            bins: vec![Complex64::new(0.0, 0.0); 257],
            bin_hz: 31.25,
        };
        let modes = cochlear_modes(&frame, &bank).unwrap();
        assert!(modes.iter().flatten().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn impulse_through_one_hot_kernel() {
        let bank = build_filterbank(&AngleGrid::default(), 512, 16_000, 1e9).unwrap();
        let k = 7;
        let b = bank.center_bins[k];
        let mut bins = vec![Complex64::new(0.0, 0.0); 257];
        bins[b] = Complex64::new(1.0, 0.0);
        let modes = cochlear_modes(&SpectralFrame { bins, bin_hz: 31.25 }, &bank).unwrap();
        let theta = bank.grid.angles()[k].to_radians();
        assert!((modes[k][b].norm() - theta.sqrt()).abs() < 1e-15);
        let nonzero = modes[k].iter().filter(|c| c.norm() > 1e-300).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn flat_spectrum_follows_kernel() {
        let bank = default_bank();
        let bins = vec![Complex64::new(1.0, 0.0); 257];
        let modes = cochlear_modes(&SpectralFrame { bins, bin_hz: 31.25 }, &bank).unwrap();
        for k in 0..20 {
            let g = bank.grid.angles()[k].to_radians().sqrt();
            for (b, m) in modes[k].iter().enumerate() {
                assert_eq!(m.re, g * bank.kernels.get(k, b));
                assert_eq!(m.im, 0.0);
            }
        }
    }

    #[test]
    fn mismatched_bins_rejected() {
        let bank = default_bank();
        let frame = SpectralFrame {
            bins: vec![Complex64::new(0.0, 0.0); 129],
            bin_hz: 62.5,
        };
        assert!(cochlear_modes(&frame, &bank).is_err());
    }

    #[test]
    fn silence_has_zero_energy() {
        let e = signal_mode_energies(&vec![0.0; 48_000], &FrameSpec::default(), &default_bank()).unwrap();
        assert_eq!(e.energies.shape(), (20, 239));
        assert!(e.energies.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn doubling_amplitude_quadruples_energy() {
        let spec = FrameSpec::default();
        let bank = default_bank();
        let x: Vec<f64> = (0..8000).map(|n| ((n * 7919) % 1000) as f64 / 1000.0 - 0.5).collect();
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let e1 = signal_mode_energies(&x, &spec, &bank).unwrap();
        let e2 = signal_mode_energies(&x2, &spec, &bank).unwrap();
        for (a, b) in e1.energies.as_slice().iter().zip(e2.energies.as_slice()) {
            assert_eq!(4.0 * a, *b);
        }
    }

    #[test]
    fn one_khz_tone_selects_nearest_angle() {
        let spec = FrameSpec::default();
        let bank = default_bank();
        let e = signal_mode_energies(&tone(1000.0, 0.5, 48_000, 16_000.0), &spec, &bank).unwrap();
        let avg = e.time_average();
        let best = (0..avg.len()).max_by(|&a, &b| avg[a].total_cmp(&avg[b])).unwrap();
        let nearest = bank
            .grid
            .angles()
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let fa = (place_to_frequency(*a.1).unwrap() - 1000.0).abs();
                let fb = (place_to_frequency(*b.1).unwrap() - 1000.0).abs();
                fa.total_cmp(&fb)
            })
            .unwrap()
            .0;
        assert_eq!(bank.grid.angles()[nearest], 315.0);
        assert_eq!(best, nearest);
    }
}
