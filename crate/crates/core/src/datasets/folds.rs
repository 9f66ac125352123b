//! Speaker-independent fold rotation.
//!
//! Speakers are shuffled once; rotation `r` (0-based) then takes the pair at
//! positions `2r, 2r+1` as test, the next pair as validation and the one after
//! as fine-tune (indices wrap), with everyone else in pre-training. Test,
//! validation and fine-tune pairs therefore never repeat across rotations as
//! long as there are at least `2·rotations + 4` speakers.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

pub const MIN_SPEAKERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Pretrain,
    Validation,
    Finetune,
    Test,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Pretrain, Role::Validation, Role::Finetune, Role::Test];
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Pretrain => "pretrain",
            Role::Validation => "validation",
            Role::Finetune => "finetune",
            Role::Test => "test",
        })
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown role {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    /// Speakers in input order.
    pub speakers: Vec<String>,
    /// One role map per rotation.
    pub rotations: Vec<BTreeMap<String, Role>>,
}

impl FoldAssignment {
    pub fn role(&self, rotation: usize, speaker: &str) -> Option<Role> {
        self.rotations.get(rotation)?.get(speaker).copied()
    }

    pub fn speakers_in(&self, rotation: usize, role: Role) -> Vec<String> {
        self.rotations[rotation]
            .iter()
            .filter(|(_, &r)| r == role)
            .map(|(s, _)| s.clone())
            .collect()
    }

    /// `(pretrain, validation, finetune, test)` counts for a rotation.
    pub fn role_sizes(&self, rotation: usize) -> (usize, usize, usize, usize) {
        let count = |role| self.rotations[rotation].values().filter(|&&r| r == role).count();
        (
            count(Role::Pretrain),
            count(Role::Validation),
            count(Role::Finetune),
            count(Role::Test),
        )
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("speaker_id");
        for r in 0..self.rotations.len() {
            let _ = write!(out, "\trotation_{}", r + 1);
        }
        out.push('\n');
        for s in &self.speakers {
            out.push_str(s);
            for rot in &self.rotations {
                let _ = write!(out, "\t{}", rot[s]);
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (_, header) = lines.next().ok_or_else(|| err(0, "empty folds file".into()))?;
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.first() != Some(&"speaker_id") || cols.len() < 2 {
            return Err(err(1, "expected header speaker_id\\trotation_1…".into()));
        }
        let n_rot = cols.len() - 1;
        let mut speakers = Vec::new();
        let mut rotations = vec![BTreeMap::new(); n_rot];
        for (i, line) in lines {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != cols.len() {
                return Err(err(i + 1, format!("expected {} fields", cols.len())));
            }
            let speaker = fields[0].to_string();
            for (r, f) in fields[1..].iter().enumerate() {
                let role = f.parse().map_err(|e: Error| err(i + 1, e.to_string()))?;
                rotations[r].insert(speaker.clone(), role);
            }
            speakers.push(speaker);
        }
        Ok(Self { speakers, rotations })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::atomic_write(path, self.to_tsv().as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FoldOptions {
    pub rotations: usize,
    pub seed: u64,
    /// Keep conversation partners together: each group of two speakers
    /// occupies one role pair.
    pub partner_groups: Option<Vec<[String; 2]>>,
}

pub fn make_folds(speakers: &[String], rotations: usize, seed: u64) -> Result<FoldAssignment> {
    make_folds_with(
        speakers,
        &FoldOptions {
            rotations,
            seed,
            partner_groups: None,
        },
    )
}

pub fn make_folds_with(speakers: &[String], options: &FoldOptions) -> Result<FoldAssignment> {
    let n = speakers.len();
    if n < MIN_SPEAKERS {
        return Err(Error::TooFewSpeakers {
            required: MIN_SPEAKERS,
            actual: n,
        });
    }
    if options.rotations == 0 {
        return Err(Error::InvalidConfig("need at least one rotation".into()));
    }
    let mut unique = speakers.to_vec();
    unique.sort();
    unique.dedup();
    if unique.len() != n {
        return Err(Error::InvalidConfig("duplicate speaker ids".into()));
    }

    let mut shuffle_rng = rng::seeded(options.seed);
    let order: Vec<String> = match &options.partner_groups {
        None => {
            let mut order = speakers.to_vec();
            order.shuffle(&mut shuffle_rng);
            order
        }
        Some(groups) => {
            let mut grouped: Vec<&String> = groups.iter().flatten().collect();
            grouped.sort();
            if grouped.len() != n || grouped.iter().zip(&unique).any(|(a, b)| *a != b) {
                return Err(Error::InvalidConfig(
                    "partner groups must cover every speaker exactly once".into(),
                ));
            }
            let mut groups = groups.clone();
            groups.shuffle(&mut shuffle_rng);
            groups.into_iter().flatten().collect()
        }
    };

    let rotations = (0..options.rotations)
        .map(|r| {
            let mut roles: BTreeMap<String, Role> = order.iter().map(|s| (s.clone(), Role::Pretrain)).collect();
            for (j, role) in [Role::Test, Role::Test, Role::Validation, Role::Validation, Role::Finetune, Role::Finetune]
                .into_iter()
                .enumerate()
            {
                roles.insert(order[(2 * r + j) % n].clone(), role);
            }
            roles
        })
        .collect();

    Ok(FoldAssignment {
        speakers: speakers.to_vec(),
        rotations,
    })
}
