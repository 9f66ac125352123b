use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::probe::{check_rating, quadrant_label, QuadrantLabel};

pub const MANIFEST_HEADER: [&str; 6] = ["path", "speaker_id", "arousal", "valence", "duration", "pre_separated"];
pub const FOLD_SCHEME_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub speaker_id: String,
    pub arousal: Option<u8>,
    pub valence: Option<u8>,
    pub duration: f64,
    /// The audio has already been source-separated upstream.
    pub pre_separated: bool,
}

impl ManifestEntry {
    pub fn label(&self) -> Option<QuadrantLabel> {
        match (self.arousal, self.valence) {
            (Some(a), Some(v)) => quadrant_label(a.into(), v.into()).ok(),
            _ => None,
        }
    }
}

/// Tab-separated listing of audio or CCGRAM files with speaker and rating
/// metadata. Relative paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    pub fold_scheme_version: u32,
    pub base_dir: PathBuf,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            entries: Vec::new(),
            fold_scheme_version: FOLD_SCHEME_VERSION,
            base_dir: PathBuf::new(),
        }
    }
}

fn parse_rating(field: &str) -> std::result::Result<Option<u8>, String> {
    if field.is_empty() || field == "-" {
        return Ok(None);
    }
    let v: i64 = field.parse().map_err(|_| format!("bad rating {field:?}"))?;
    check_rating(v).map(Some).map_err(|e| e.to_string())
}

fn parse_bool(field: &str) -> std::result::Result<bool, String> {
    match field {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("bad flag {other:?}")),
    }
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut m = Self::parse(&text, path)?;
        m.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut version = FOLD_SCHEME_VERSION;
        let mut header_seen = false;
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("fold_scheme_version=") {
                    version = v.trim().parse().map_err(|_| err(line_no, format!("bad version {v:?}")))?;
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if !header_seen {
                if fields != MANIFEST_HEADER {
                    return Err(err(line_no, format!("expected header {:?}", MANIFEST_HEADER.join("\t"))));
                }
                header_seen = true;
                continue;
            }
            if fields.len() != MANIFEST_HEADER.len() {
                return Err(err(line_no, format!("expected 6 fields, found {}", fields.len())));
            }
            let speaker_id = fields[1].trim().to_string();
            if speaker_id.is_empty() {
                return Err(err(line_no, "empty speaker_id".into()));
            }
            entries.push(ManifestEntry {
                path: PathBuf::from(fields[0]),
                speaker_id,
                arousal: parse_rating(fields[2]).map_err(|m| err(line_no, m))?,
                valence: parse_rating(fields[3]).map_err(|m| err(line_no, m))?,
                duration: fields[4]
                    .parse()
                    .map_err(|_| err(line_no, format!("bad duration {:?}", fields[4])))?,
                pre_separated: parse_bool(fields[5]).map_err(|m| err(line_no, m))?,
            });
        }
        if !header_seen {
            return Err(err(0, "missing header line".into()));
        }
        Ok(Self {
            entries,
            fold_scheme_version: version,
            base_dir: PathBuf::new(),
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("# fold_scheme_version={}\n{}\n", self.fold_scheme_version, MANIFEST_HEADER.join("\t"));
        let rating = |r: Option<u8>| r.map_or_else(|| "-".to_string(), |v| v.to_string());
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                e.path.display(),
                e.speaker_id,
                rating(e.arousal),
                rating(e.valence),
                e.duration,
                e.pre_separated
            );
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::atomic_write(path, self.to_tsv().as_bytes())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    /// Speakers in order of first appearance.
    pub fn speakers(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for e in &self.entries {
            if !seen.contains(&e.speaker_id) {
                seen.push(e.speaker_id.clone());
            }
        }
        seen
    }
}
