use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Arousal/valence quadrant. Ratings are split at 3, ties going high.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuadrantLabel {
    Lalv,
    Lahv,
    Halv,
    Hahv,
}

pub const CLASS_COUNT: usize = 4;

impl QuadrantLabel {
    pub const ALL: [QuadrantLabel; CLASS_COUNT] =
        [QuadrantLabel::Lalv, QuadrantLabel::Lahv, QuadrantLabel::Halv, QuadrantLabel::Hahv];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            QuadrantLabel::Lalv => "LALV",
            QuadrantLabel::Lahv => "LAHV",
            QuadrantLabel::Halv => "HALV",
            QuadrantLabel::Hahv => "HAHV",
        }
    }
}

impl fmt::Display for QuadrantLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuadrantLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|q| q.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown quadrant {s:?}")))
    }
}

pub fn check_rating(r: i64) -> Result<u8> {
    if (1..=5).contains(&r) {
        Ok(r as u8)
    } else {
        Err(Error::RatingOutOfRange(r))
    }
}

pub fn quadrant_label(arousal: i64, valence: i64) -> Result<QuadrantLabel> {
    let a = check_rating(arousal)?;
    let v = check_rating(valence)?;
    Ok(match (a >= 3, v >= 3) {
        (false, false) => QuadrantLabel::Lalv,
        (false, true) => QuadrantLabel::Lahv,
        (true, false) => QuadrantLabel::Halv,
        (true, true) => QuadrantLabel::Hahv,
    })
}
