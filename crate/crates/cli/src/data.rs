use std::path::{Path, PathBuf};

use cochceps::augment::{resize_nearest, FoldStats};
use cochceps::datasets::{read_ccgram, Checkpoint, FoldAssignment, Manifest, Role};
use cochceps::probe::{flatten_features, QuadrantLabel};
use cochceps::CCGram;

use crate::error::{At, CliError, CliResult};

pub struct Sample {
    pub ccgram: CCGram,
    pub label: Option<QuadrantLabel>,
    pub path: PathBuf,
}

/// Which speakers of a manifest to use.
pub struct Selection<'a> {
    pub folds: &'a FoldAssignment,
    pub rotation: usize,
    pub roles: &'a [Role],
}

pub fn read_manifest(path: &Path) -> CliResult<Manifest> {
    Manifest::read(path).at(path)
}

pub fn read_folds(path: &Path, rotation: usize) -> CliResult<FoldAssignment> {
    let folds = FoldAssignment::read(path).at(path)?;
    if rotation == 0 || rotation > folds.rotations.len() {
        return Err(CliError::Usage(format!(
            "rotation {rotation} out of range 1..={} for {}",
            folds.rotations.len(),
            path.display()
        )));
    }
    Ok(folds)
}

/// Reads every CCGRAM listed in `manifest_path` (optionally only speakers in
/// the selected roles). All must share one shape.
pub fn load_ccgrams(manifest_path: &Path, selection: Option<&Selection>) -> CliResult<Vec<Sample>> {
    let manifest = read_manifest(manifest_path)?;
    let mut out: Vec<Sample> = Vec::new();
    for entry in &manifest.entries {
        if let Some(sel) = selection {
            match sel.folds.role(sel.rotation - 1, &entry.speaker_id) {
                Some(role) if sel.roles.contains(&role) => {}
                Some(_) => continue,
                None => {
                    return Err(CliError::data(
                        manifest_path,
                        format!("speaker {} missing from fold assignment", entry.speaker_id),
                    ))
                }
            }
        }
        let path = manifest.resolve(entry);
        let ccgram = read_ccgram(&path).at(&path)?;
        if let Some(first) = out.first() {
            if first.ccgram.shape() != ccgram.shape() {
                return Err(CliError::data(
                    &path,
                    format!("shape {:?} differs from {:?}", ccgram.shape(), first.ccgram.shape()),
                ));
            }
        }
        out.push(Sample {
            ccgram,
            label: entry.label(),
            path,
        });
    }
    if out.is_empty() {
        return Err(CliError::data(manifest_path, "no CCGRAMs selected"));
    }
    Ok(out)
}

/// Keeps labelled samples, returning `(samples, class indices)`.
pub fn labelled(samples: Vec<Sample>, origin: &Path) -> CliResult<(Vec<Sample>, Vec<usize>)> {
    let before = samples.len();
    let kept: Vec<Sample> = samples.into_iter().filter(|s| s.label.is_some()).collect();
    if kept.len() < before {
        log::warn!("{}: skipping {} unlabelled entries", origin.display(), before - kept.len());
    }
    if kept.is_empty() {
        return Err(CliError::data(origin, "no labelled entries"));
    }
    let labels = kept.iter().map(|s| s.label.unwrap().index()).collect();
    Ok((kept, labels))
}

/// Z-normalisation and resize applied to every network input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeaturePrep {
    pub stats: FoldStats,
    pub resize: Option<(usize, usize)>,
}

impl FeaturePrep {
    pub fn fit(samples: &[Sample], resize: Option<(usize, usize)>) -> cochceps::Result<Self> {
        let images: Vec<_> = samples.iter().map(|s| &s.ccgram.values).collect();
        Ok(Self {
            stats: FoldStats::of(&images)?,
            resize,
        })
    }

    pub fn normalized(&self, ccgram: &CCGram) -> CCGram {
        ccgram.with_values(self.stats.apply(&ccgram.values))
    }

    pub fn input(&self, ccgram: &CCGram) -> Vec<f64> {
        let z = self.stats.apply(&ccgram.values);
        match self.resize {
            Some((r, c)) if (r, c) != z.shape() => resize_nearest(&z, r, c).into_vec(),
            _ => flatten_features(&ccgram.with_values(z)),
        }
    }

    pub fn store(&self, ck: &mut Checkpoint) {
        ck.metadata.insert("znorm.mean".into(), format!("{:?}", self.stats.mean));
        ck.metadata.insert("znorm.std".into(), format!("{:?}", self.stats.std));
        ck.metadata.insert(
            "view.resize".into(),
            self.resize.map_or_else(|| "none".into(), |(r, c)| format!("{r}x{c}")),
        );
    }

    pub fn load(ck: &Checkpoint, origin: &Path) -> CliResult<Self> {
        let num = |key: &str| -> CliResult<f64> {
            let raw = ck.meta(key).at(origin)?;
            raw.parse()
                .map_err(|_| CliError::data(origin, format!("bad metadata {key}={raw:?}")))
        };
        let resize = match ck.meta("view.resize").at(origin)? {
            "none" => None,
            raw => {
                let parsed = raw
                    .split_once('x')
                    .and_then(|(r, c)| Some((r.parse().ok()?, c.parse().ok()?)));
                Some(parsed.ok_or_else(|| CliError::data(origin, format!("bad metadata view.resize={raw:?}")))?)
            }
        };
        Ok(Self {
            stats: FoldStats {
                mean: num("znorm.mean")?,
                std: num("znorm.std")?,
            },
            resize,
        })
    }
}
