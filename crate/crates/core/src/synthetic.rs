//! Seeded synthetic data: blob-template CCGRAM sets and voiced/silent
//! test recordings.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cepstrogram::CCGram;
use crate::matrix::Matrix;
use crate::rng;

/// Four Gaussian blobs of peak `amplitude`, one near each image corner.
pub fn blob_templates(rows: usize, cols: usize, amplitude: f64) -> Vec<Matrix> {
    let (r_lo, r_hi) = (rows as f64 * 0.2, rows as f64 * 0.75);
    let (c_lo, c_hi) = (cols as f64 * 0.19, cols as f64 * 0.75);
    let (r_width, c_width) = (rows as f64 * 0.15, cols as f64 * 0.16);
    [(r_lo, c_lo), (r_lo, c_hi), (r_hi, c_lo), (r_hi, c_hi)]
        .iter()
        .map(|&(r0, c0)| {
            let mut m = Matrix::zeros(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    let d2 = ((r as f64 - r0) / r_width).powi(2) + ((c as f64 - c0) / c_width).powi(2);
                    m.set(r, c, amplitude * (-0.5 * d2).exp());
                }
            }
            m
        })
        .collect()
}

/// `count` noisy copies cycling through `templates`, with their template index.
pub fn template_dataset(templates: &[Matrix], count: usize, noise: f64, seed: u64) -> (Vec<CCGram>, Vec<usize>) {
    let mut r = rng::seeded(seed);
    let mut images = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let k = i % templates.len();
        let t = &templates[k];
        let values = t
            .as_slice()
            .iter()
            .map(|x| {
                let z: f64 = StandardNormal.sample(&mut r);
                x + noise * z
            })
            .collect();
        let mut g = CCGram::new(Matrix::from_vec(t.rows(), t.cols(), values).expect("template shape"), 45.0);
        g.source_id = format!("synthetic-{i}");
        images.push(g);
        labels.push(k);
    }
    (images, labels)
}

/// A speech-like recording: bursts of a harmonic tone at `f0` separated by
/// silences, with faint noise. Brighter and faster-modulated when `arousal`
/// is high, with a rising pitch when `valence` is high.
pub fn voiced_recording(seconds: f64, sample_rate: u32, f0: f64, arousal: u8, valence: u8, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    let n = (seconds * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    let brightness = 0.2 + 0.15 * arousal as f64;
    let tremolo = 2.0 + arousal as f64;
    let glide = (valence as f64 - 3.0) * 0.04;
    let burst = 2.2 + r.random_range(0.0..0.6);
    let gap = 0.5 + r.random_range(0.0..0.3);
    let period = burst + gap;
    let phase0 = r.random_range(0.0..2.0 * PI);
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let noise: f64 = StandardNormal.sample(&mut r);
            let in_burst = t % period < burst;
            let mut x = 0.001 * noise;
            if in_burst {
                let local = (t % period) / burst;
                let f = f0 * (1.0 + glide * local);
                let env = 0.6 + 0.4 * (2.0 * PI * tremolo * t).sin();
                for h in 1..=6 {
                    let amp = brightness.powi(h as i32 - 1);
                    x += 0.3 * env * amp * (2.0 * PI * f * h as f64 * t + phase0 * h as f64).sin();
                }
            }
            x
        })
        .collect()
}
