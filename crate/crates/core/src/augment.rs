//! Cepstral masking augmentation: angle, quefrency and combined masks, view
//! pair sampling, fold z-normalisation and nearest-neighbour resizing.
//!
//! Angle masks zero whole rows (one row per grid angle), quefrency masks zero
//! whole columns. A policy value of `n` means `n` masks are drawn, each with
//! a width sampled uniformly from `0..=n`. Masks may overlap.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::cepstrogram::CCGram;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskPolicy {
    /// Number of angle masks and their maximum width in rows.
    pub phi: usize,
    /// Number of quefrency masks and their maximum width in columns.
    pub q: usize,
    pub fill_value: f64,
}

impl Default for MaskPolicy {
    fn default() -> Self {
        Self {
            phi: 2,
            q: 5,
            fill_value: 0.0,
        }
    }
}

impl MaskPolicy {
    pub const IDENTITY: MaskPolicy = MaskPolicy {
        phi: 0,
        q: 0,
        fill_value: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaskAxis {
    Angle,
    Quefrency,
}

/// One band of consecutive masked rows (angle) or columns (quefrency).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskRecord {
    pub axis: MaskAxis,
    pub start_index: usize,
    pub width: usize,
}

impl MaskRecord {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start_index..self.start_index + self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transform {
    Angle,
    Quefrency,
    Cepstral,
}

impl Transform {
    pub const ALL: [Transform; 3] = [Transform::Angle, Transform::Quefrency, Transform::Cepstral];

    pub fn apply<R: Rng + ?Sized>(
        self,
        image: &Matrix,
        policy: &MaskPolicy,
        rng: &mut R,
    ) -> (Matrix, Vec<MaskRecord>) {
        match self {
            Transform::Angle => mask_axis(image, MaskAxis::Angle, policy.phi, policy.fill_value, rng),
            Transform::Quefrency => mask_axis(image, MaskAxis::Quefrency, policy.q, policy.fill_value, rng),
            Transform::Cepstral => {
                let (rows_masked, mut records) =
                    mask_axis(image, MaskAxis::Angle, policy.phi, policy.fill_value, rng);
                let (out, more) =
                    mask_axis(&rows_masked, MaskAxis::Quefrency, policy.q, policy.fill_value, rng);
                records.extend(more);
                (out, records)
            }
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::Angle => "angle",
            Transform::Quefrency => "quefrency",
            Transform::Cepstral => "cepstral",
        })
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "angle" => Ok(Transform::Angle),
            "quefrency" => Ok(Transform::Quefrency),
            "cepstral" => Ok(Transform::Cepstral),
            other => Err(Error::InvalidConfig(format!("unknown transform {other:?}"))),
        }
    }
}

fn mask_axis<R: Rng + ?Sized>(
    image: &Matrix,
    axis: MaskAxis,
    count: usize,
    fill: f64,
    rng: &mut R,
) -> (Matrix, Vec<MaskRecord>) {
    let len = match axis {
        MaskAxis::Angle => image.rows(),
        MaskAxis::Quefrency => image.cols(),
    };
    let mut out = image.clone();
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        // Widths beyond the axis length saturate at the full axis.
        let width = rng.random_range(0..=count).min(len);
        let start = rng.random_range(0..=len - width);
        let record = MaskRecord {
            axis,
            start_index: start,
            width,
        };
        fill_band(&mut out, &record, fill);
        records.push(record);
    }
    (out, records)
}

fn fill_band(image: &mut Matrix, record: &MaskRecord, fill: f64) {
    match record.axis {
        MaskAxis::Angle => {
            for r in record.range() {
                image.row_mut(r).fill(fill);
            }
        }
        MaskAxis::Quefrency => {
            for r in 0..image.rows() {
                image.row_mut(r)[record.range()].fill(fill);
            }
        }
    }
}

/// Per-cell flag: true where any record covers the cell.
pub fn mask_cells(records: &[MaskRecord], rows: usize, cols: usize) -> Vec<bool> {
    let mut cells = vec![false; rows * cols];
    for rec in records {
        match rec.axis {
            MaskAxis::Angle => {
                for r in rec.range() {
                    cells[r * cols..(r + 1) * cols].fill(true);
                }
            }
            MaskAxis::Quefrency => {
                for r in 0..rows {
                    cells[r * cols + rec.start_index..r * cols + rec.start_index + rec.width].fill(true);
                }
            }
        }
    }
    cells
}

pub fn angle_mask<R: Rng + ?Sized>(ccgram: &CCGram, policy: &MaskPolicy, rng: &mut R) -> (CCGram, Vec<MaskRecord>) {
    let (values, records) = Transform::Angle.apply(&ccgram.values, policy, rng);
    (ccgram.with_values(values), records)
}

pub fn quefrency_mask<R: Rng + ?Sized>(
    ccgram: &CCGram,
    policy: &MaskPolicy,
    rng: &mut R,
) -> (CCGram, Vec<MaskRecord>) {
    let (values, records) = Transform::Quefrency.apply(&ccgram.values, policy, rng);
    (ccgram.with_values(values), records)
}

/// Angle masking followed by quefrency masking on the same stream.
pub fn cepstral_mask<R: Rng + ?Sized>(
    ccgram: &CCGram,
    policy: &MaskPolicy,
    rng: &mut R,
) -> (CCGram, Vec<MaskRecord>) {
    let (values, records) = Transform::Cepstral.apply(&ccgram.values, policy, rng);
    (ccgram.with_values(values), records)
}

/// Two independently masked views of one CCGRAM.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewPair {
    pub view_i: CCGram,
    pub view_j: CCGram,
    pub transforms: [Transform; 2],
    pub masks: [Vec<MaskRecord>; 2],
    pub rng_seed: Option<u64>,
}

pub fn sample_transform<R: Rng + ?Sized>(rng: &mut R) -> Transform {
    Transform::ALL[rng.random_range(0..Transform::ALL.len())]
}

pub fn sample_view_pair<R: Rng + ?Sized>(ccgram: &CCGram, policy: &MaskPolicy, rng: &mut R) -> ViewPair {
    let t_i = sample_transform(rng);
    let (v_i, m_i) = t_i.apply(&ccgram.values, policy, rng);
    let t_j = sample_transform(rng);
    let (v_j, m_j) = t_j.apply(&ccgram.values, policy, rng);
    ViewPair {
        view_i: ccgram.with_values(v_i),
        view_j: ccgram.with_values(v_j),
        transforms: [t_i, t_j],
        masks: [m_i, m_j],
        rng_seed: None,
    }
}

pub fn sample_view_pair_seeded(ccgram: &CCGram, policy: &MaskPolicy, seed: u64) -> ViewPair {
    let mut pair = sample_view_pair(ccgram, policy, &mut rng::seeded(seed));
    pair.rng_seed = Some(seed);
    pair
}

/// Pooled scalar statistics of one fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldStats {
    pub mean: f64,
    pub std: f64,
}

impl FoldStats {
    pub fn of(images: &[&Matrix]) -> Result<Self> {
        let count: usize = images.iter().map(|m| m.as_slice().len()).sum();
        if count == 0 {
            return Err(Error::Empty("fold"));
        }
        let n = count as f64;
        let mean = images.iter().flat_map(|m| m.as_slice()).sum::<f64>() / n;
        let var = images
            .iter()
            .flat_map(|m| m.as_slice())
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n;
        let std = var.sqrt();
        if !(std > 0.0) {
            return Err(Error::ConstantFold);
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, image: &Matrix) -> Matrix {
        image.map(|v| (v - self.mean) / self.std)
    }
}

/// Standardises every cell of every image with the fold's pooled mean and
/// population standard deviation.
pub fn znormalize_fold(images: &[CCGram]) -> Result<(Vec<CCGram>, FoldStats)> {
    let stats = FoldStats::of(&images.iter().map(|c| &c.values).collect::<Vec<_>>())?;
    let out = images.iter().map(|c| c.with_values(stats.apply(&c.values))).collect();
    Ok((out, stats))
}

/// `out[r][c] = in[⌊r·A/rows⌋][⌊c·M/cols⌋]`.
pub fn resize_nearest(src: &Matrix, target_rows: usize, target_cols: usize) -> Matrix {
    assert!(!src.is_empty(), "resize of an empty matrix");
    let (a, m) = src.shape();
    let mut out = Matrix::zeros(target_rows, target_cols);
    for r in 0..target_rows {
        let sr = r * a / target_rows;
        let src_row = src.row(sr);
        for (c, slot) in out.row_mut(r).iter_mut().enumerate() {
            *slot = src_row[c * m / target_cols];
        }
    }
    out
}

/// Mask at native resolution, then resize: the order training views use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewPrep {
    pub policy: MaskPolicy,
    /// `None` keeps the native size.
    pub resize: Option<(usize, usize)>,
}

impl Default for ViewPrep {
    fn default() -> Self {
        Self {
            policy: MaskPolicy::default(),
            resize: Some((239, 239)),
        }
    }
}

impl ViewPrep {
    pub fn finish(&self, image: &Matrix) -> Matrix {
        match self.resize {
            Some((r, c)) if (r, c) != image.shape() => resize_nearest(image, r, c),
            _ => image.clone(),
        }
    }

    /// Flattened length of a prepared view of a `rows × cols` source.
    pub fn output_len(&self, rows: usize, cols: usize) -> usize {
        let (r, c) = self.resize.unwrap_or((rows, cols));
        r * c
    }

    /// Samples a view pair and returns both views resized and flattened.
    pub fn view_pair<R: Rng + ?Sized>(&self, image: &Matrix, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let t_i = sample_transform(rng);
        let (v_i, _) = t_i.apply(image, &self.policy, rng);
        let t_j = sample_transform(rng);
        let (v_j, _) = t_j.apply(image, &self.policy, rng);
        (self.finish(&v_i).into_vec(), self.finish(&v_j).into_vec())
    }
}
