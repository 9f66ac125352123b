//! Rational windowed-sinc resampling.
//!
//! For rates `from → to` with `g = gcd(from, to)`, output sample `n` sits at
//! input position `n·M/L` where `L = to/g`, `M = from/g`. Its fractional part
//! is one of `L` phases, each with its own precomputed Kaiser-windowed sinc
//! kernel. The cutoff is placed just under the lower of the two Nyquist
//! rates so downsampling is anti-aliased.

use crate::error::{Error, Result};

/// Zero crossings of the sinc on each side of the kernel centre.
const ZERO_CROSSINGS: f64 = 16.0;
/// Cutoff as a fraction of the lower Nyquist rate.
const ROLLOFF: f64 = 0.95;
const KAISER_BETA: f64 = 8.0;
/// Phase tables larger than this are evaluated on the fly.
const MAX_TABLE_PHASES: u64 = 8192;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

struct Kernel {
    /// Cutoff in cycles per input sample.
    cutoff: f64,
    half_width: f64,
    /// Taps at integer offsets `-(reach-1)..=reach` around the base sample.
    reach: i64,
    norm: f64,
}

impl Kernel {
    fn new(from: u32, to: u32) -> Self {
        let cutoff = 0.5 * ROLLOFF * (to as f64 / from as f64).min(1.0);
        let half_width = ZERO_CROSSINGS / (2.0 * cutoff);
        Self {
            cutoff,
            half_width,
            reach: half_width.ceil() as i64,
            norm: bessel_i0(KAISER_BETA),
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let r = x / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let arg = 2.0 * self.cutoff * x;
        let sinc = if arg == 0.0 {
            1.0
        } else {
            (std::f64::consts::PI * arg).sin() / (std::f64::consts::PI * arg)
        };
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.norm;
        2.0 * self.cutoff * sinc * window
    }

    fn phase(&self, frac: f64) -> Vec<f64> {
        (-(self.reach - 1)..=self.reach).map(|j| self.eval(j as f64 - frac)).collect()
    }
}

/// Resamples `signal` from `from_rate` to `to_rate`.
///
/// Output length is `round(len·to/from)`. Equal rates return the input
/// unchanged.
pub fn resample(signal: &[f64], from_rate: u32, to_rate: u32) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::Empty("signal to resample"));
    }
    if from_rate == 0 || to_rate == 0 {
        return Err(Error::InvalidConfig("sample rates must be positive".into()));
    }
    if from_rate == to_rate {
        return Ok(signal.to_vec());
    }
    let g = gcd(from_rate as u64, to_rate as u64);
    let up = to_rate as u64 / g;
    let down = from_rate as u64 / g;
    let len = signal.len() as u64;
    let out_len = ((len * to_rate as u64 + from_rate as u64 / 2) / from_rate as u64) as usize;

    let kernel = Kernel::new(from_rate, to_rate);
    let table: Option<Vec<Vec<f64>>> = (up <= MAX_TABLE_PHASES)
        .then(|| (0..up).map(|p| kernel.phase(p as f64 / up as f64)).collect());

    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len as u64 {
        let pos = n * down;
        let base = (pos / up) as i64;
        let phase = pos % up;
        let owned;
        let taps: &[f64] = match &table {
            Some(t) => &t[phase as usize],
            None => {
                owned = kernel.phase(phase as f64 / up as f64);
                &owned
            }
        };
        let first = base - (kernel.reach - 1);
        let mut acc = 0.0;
        for (j, &h) in taps.iter().enumerate() {
            let idx = first + j as i64;
            if idx >= 0 && (idx as u64) < len {
                acc += h * signal[idx as usize];
            }
        }
        out.push(acc);
    }
    Ok(out)
}
