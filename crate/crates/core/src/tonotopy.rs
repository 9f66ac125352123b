//! Place-to-frequency map of the spiral cochlea and the discrete angle grid
//! that indexes CCGRAM rows.
//!
//! Angles are in degrees everywhere in this module. The base of the cochlea
//! sits at 0° (high frequencies) and the apex at 990° (low frequencies).

use crate::error::{Error, Result};

/// Angle of the cochlear base.
pub const THETA_MIN: f64 = 0.0;
/// Angle of the cochlear apex.
pub const THETA_MAX: f64 = 990.0;

const SCALE_HZ: f64 = 165.4;
const PLACE_CONSTANT: f64 = 3251.0;
const PLACE_OFFSET: f64 = 177.3;
const EXPONENT: f64 = 2.1;
const EXPONENT_SCALE: f64 = 1.149;
const FREQUENCY_OFFSET: f64 = 0.88;

/// The tonotopic place-pitch map `f(θ)` over `[0°, 990°]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TonotopicMap {
    pub theta_min: f64,
    pub theta_max: f64,
}

impl Default for TonotopicMap {
    fn default() -> Self {
        Self {
            theta_min: THETA_MIN,
            theta_max: THETA_MAX,
        }
    }
}

impl TonotopicMap {
    pub fn frequency(&self, theta: f64) -> Result<f64> {
        if !(self.theta_min..=self.theta_max).contains(&theta) {
            return Err(Error::Domain {
                what: "theta",
                value: theta,
                min: self.theta_min,
                max: self.theta_max,
            });
        }
        Ok(place_to_frequency_unchecked(theta))
    }
}

/// Characteristic frequency in Hz at angular position `theta` (degrees).
///
/// Strictly decreasing on the domain: ≈14.6 kHz at the base, ≈10.4 Hz at the
/// apex.
pub fn place_to_frequency(theta: f64) -> Result<f64> {
    TonotopicMap::default().frequency(theta)
}

fn place_to_frequency_unchecked(theta: f64) -> f64 {
    let decay = (theta + PLACE_OFFSET).powf(-EXPONENT * EXPONENT_SCALE);
    SCALE_HZ * (PLACE_CONSTANT.powf(EXPONENT) * decay - FREQUENCY_OFFSET)
}

/// Uniformly spaced cochlear angles `spacing, 2·spacing, …, count·spacing`.
///
/// The grid starts one step above the base so that no mode sits at θ = 0,
/// where the `√θ` mode gain vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    angles: Vec<f64>,
    spacing: f64,
}

impl AngleGrid {
    pub fn new(spacing: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidConfig("angle grid needs at least one angle".into()));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "angle spacing must be positive, got {spacing}"
            )));
        }
        let top = spacing * count as f64;
        if top > THETA_MAX {
            return Err(Error::Domain {
                what: "top grid angle",
                value: top,
                min: THETA_MIN,
                max: THETA_MAX,
            });
        }
        let angles = (1..=count).map(|k| k as f64 * spacing).collect();
        Ok(Self { angles, spacing })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Characteristic frequency of every grid angle, base to apex.
    pub fn frequencies(&self) -> Vec<f64> {
        self.angles.iter().map(|&t| place_to_frequency_unchecked(t)).collect()
    }
}

impl Default for AngleGrid {
    fn default() -> Self {
        Self::new(45.0, 20).expect("default grid is in range")
    }
}

/// Convenience wrapper matching [`AngleGrid::new`].
pub fn angle_grid(spacing: f64, count: usize) -> Result<AngleGrid> {
    AngleGrid::new(spacing, count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_points() {
        // Values from a 40-digit evaluation of the map.
        let cases = [
            (0.0, 14572.8897364929),
            (495.0, 444.844956475372),
            (990.0, 10.3912287305742),
            (45.0, 8382.32468262846),
            (900.0, 43.7024127937285),
        ];
        for (theta, expected) in cases {
            let f = place_to_frequency(theta).unwrap();
            assert!(((f - expected) / expected).abs() < 1e-12, "{theta}: {f}");
        }
    }

    #[test]
    fn out_of_domain() {
        assert!(place_to_frequency(-0.001).is_err());
        assert!(place_to_frequency(990.001).is_err());
        assert!(place_to_frequency(f64::NAN).is_err());
    }

    #[test]
    fn grid_examples() {
        let g = angle_grid(45.0, 20).unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g.angles()[0], 45.0);
        assert_eq!(g.angles()[19], 900.0);

        let g = angle_grid(990.0, 1).unwrap();
        assert_eq!(g.angles(), &[990.0]);

        assert!(angle_grid(45.0, 23).is_err());
        assert!(angle_grid(45.0, 0).is_err());
        assert!(angle_grid(0.0, 3).is_err());
    }

    #[test]
    fn grid_is_uniform() {
        let g = angle_grid(7.5, 132).unwrap();
        for w in g.angles().windows(2) {
            assert!((w[1] - w[0] - 7.5).abs() < 1e-12);
        }
    }
}
