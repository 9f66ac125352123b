//! Run configuration as `key = value` lines.
//!
//! Every module default is reachable through a dotted key. Unknown keys are
//! rejected. [`RunConfig::render`] prints the fully resolved configuration in
//! a fixed key order and [`RunConfig::hash`] fingerprints that text.

use std::fmt::Debug;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::augment::{MaskPolicy, ViewPrep};
use crate::cepstrogram::{CcgramConfig, LiftAxis};
use crate::contrastive::{EncoderSpec, PretrainConfig};
use crate::error::{Error, Result};
use crate::nn::Activation;
use crate::preprocess::PreprocessConfig;
use crate::probe::{FinetuneConfig, ProbeConfig};

pub const CONFIG_ENV: &str = "COCHCEPS_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub ccgram: CcgramConfig,
    pub preprocess: PreprocessConfig,
    /// Encoder layout; `input_dim` is filled in from the data.
    pub encoder: EncoderSpec,
    pub pretrain: PretrainConfig,
    pub probe: ProbeConfig,
    pub finetune: FinetuneConfig,
    pub fold_rotations: usize,
    pub manifest: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ccgram: CcgramConfig::default(),
            preprocess: PreprocessConfig::default(),
            encoder: EncoderSpec::new(0),
            pretrain: PretrainConfig::default(),
            probe: ProbeConfig::linear_probe(),
            finetune: FinetuneConfig::default(),
            fold_rotations: 5,
            manifest: None,
            output: None,
        }
    }
}

fn num<T: FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

fn list(v: &str) -> std::result::Result<Vec<usize>, String> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| num(s.trim())).collect()
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn optional<T: FromStr>(v: &str) -> std::result::Result<Option<T>, String> {
    if v == "none" {
        Ok(None)
    } else {
        num(v).map(Some)
    }
}

fn show<T: Debug>(v: T) -> String {
    format!("{v:?}")
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), ToString::to_string)
}

fn show_list(v: &[usize]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn path(v: &str) -> Option<PathBuf> {
    (v != "none" && !v.is_empty()).then(|| PathBuf::from(v))
}

impl RunConfig {
    /// `(key, rendered value)` for every setting, in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.ccgram;
        let p = &self.preprocess;
        let pt = &self.pretrain;
        let e = &self.encoder;
        vec![
            ("seed", self.seed.to_string()),
            ("frame.window_ms", show(c.frame.window_ms)),
            ("frame.overlap", show(c.frame.overlap_fraction)),
            ("frame.sample_rate", c.frame.sample_rate.to_string()),
            ("grid.spacing_deg", show(c.grid_spacing_deg)),
            ("grid.count", c.grid_count.to_string()),
            ("filter.q", show(c.q_factor)),
            ("ccgram.eps_floor", show(c.eps_floor)),
            ("ccgram.lift_axis", c.lift_axis.to_string()),
            ("ccgram.num_coeffs", show_opt(&c.num_coeffs)),
            ("vad.threshold_ratio", show(p.vad.threshold_ratio)),
            ("vad.merge_gap_ms", show(p.vad.merge_gap_ms)),
            ("vad.min_energy", show(p.vad.min_energy)),
            ("segment.seconds", show(p.segment.seconds)),
            ("segment.min_seconds", show(p.segment.min_seconds)),
            ("mask.phi", pt.prep.policy.phi.to_string()),
            ("mask.q", pt.prep.policy.q.to_string()),
            ("mask.fill", show(pt.prep.policy.fill_value)),
            (
                "view.resize",
                pt.prep.resize.map_or_else(|| "none".to_string(), |(r, c)| format!("{r}x{c}")),
            ),
            ("ntxent.temperature", show(pt.ntxent.temperature)),
            ("encoder.hidden", show_list(&e.hidden)),
            ("encoder.feature_dim", e.feature_dim.to_string()),
            ("encoder.activation", e.activation.to_string()),
            ("projector.hidden", e.projector_hidden.to_string()),
            ("projector.out", e.projector_out.to_string()),
            ("pretrain.epochs", pt.epochs.to_string()),
            ("pretrain.batch_size", pt.batch_size.to_string()),
            ("pretrain.lr", show(pt.learning_rate)),
            ("pretrain.momentum", show(pt.momentum)),
            ("pretrain.weight_decay", show(pt.weight_decay)),
            ("pretrain.warmup_fraction", show(pt.warmup_fraction)),
            ("probe.lr", show(self.probe.learning_rate)),
            ("probe.epochs", self.probe.epochs.to_string()),
            ("probe.batch_size", self.probe.batch_size.to_string()),
            ("probe.weight_decay", show(self.probe.weight_decay)),
            ("finetune.lr", show(self.finetune.train.learning_rate)),
            ("finetune.epochs", self.finetune.train.epochs.to_string()),
            ("finetune.batch_size", self.finetune.train.batch_size.to_string()),
            ("finetune.weight_decay", show(self.finetune.train.weight_decay)),
            ("finetune.head_hidden", show_list(&self.finetune.head_hidden)),
            ("finetune.freeze_encoder", self.finetune.freeze_encoder.to_string()),
            ("folds.rotations", self.fold_rotations.to_string()),
            ("paths.manifest", self.manifest.as_ref().map_or("none".into(), |p| p.display().to_string())),
            ("paths.output", self.output.as_ref().map_or("none".into(), |p| p.display().to_string())),
        ]
    }

    pub fn keys() -> Vec<&'static str> {
        Self::default().entries().into_iter().map(|(k, _)| k).collect()
    }

    /// Sets one key. The message names the problem when the value is bad.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        let c = &mut self.ccgram;
        let p = &mut self.preprocess;
        let pt = &mut self.pretrain;
        let e = &mut self.encoder;
        match key {
            "seed" => self.seed = num(v)?,
            "frame.window_ms" => c.frame.window_ms = num(v)?,
            "frame.overlap" => c.frame.overlap_fraction = num(v)?,
            "frame.sample_rate" => c.frame.sample_rate = num(v)?,
            "grid.spacing_deg" => c.grid_spacing_deg = num(v)?,
            "grid.count" => c.grid_count = num(v)?,
            "filter.q" => c.q_factor = num(v)?,
            "ccgram.eps_floor" => c.eps_floor = num(v)?,
            "ccgram.lift_axis" => c.lift_axis = v.parse::<LiftAxis>().map_err(|e| e.to_string())?,
            "ccgram.num_coeffs" => c.num_coeffs = optional(v)?,
            "vad.threshold_ratio" => p.vad.threshold_ratio = num(v)?,
            "vad.merge_gap_ms" => p.vad.merge_gap_ms = num(v)?,
            "vad.min_energy" => p.vad.min_energy = num(v)?,
            "segment.seconds" => p.segment.seconds = num(v)?,
            "segment.min_seconds" => p.segment.min_seconds = num(v)?,
            "mask.phi" => pt.prep.policy.phi = num(v)?,
            "mask.q" => pt.prep.policy.q = num(v)?,
            "mask.fill" => pt.prep.policy.fill_value = num(v)?,
            "view.resize" => {
                pt.prep.resize = if v == "none" {
                    None
                } else {
                    let (r, c) = v.split_once('x').ok_or_else(|| format!("expected RxC or none, got {v:?}"))?;
                    Some((num(r)?, num(c)?))
                }
            }
            "ntxent.temperature" => pt.ntxent.temperature = num(v)?,
            "encoder.hidden" => e.hidden = list(v)?,
            "encoder.feature_dim" => e.feature_dim = num(v)?,
            "encoder.activation" => e.activation = v.parse::<Activation>().map_err(|e| e.to_string())?,
            "projector.hidden" => e.projector_hidden = num(v)?,
            "projector.out" => e.projector_out = num(v)?,
            "pretrain.epochs" => pt.epochs = num(v)?,
            "pretrain.batch_size" => pt.batch_size = num(v)?,
            "pretrain.lr" => pt.learning_rate = num(v)?,
            "pretrain.momentum" => pt.momentum = num(v)?,
            "pretrain.weight_decay" => pt.weight_decay = num(v)?,
            "pretrain.warmup_fraction" => pt.warmup_fraction = num(v)?,
            "probe.lr" => self.probe.learning_rate = num(v)?,
            "probe.epochs" => self.probe.epochs = num(v)?,
            "probe.batch_size" => self.probe.batch_size = num(v)?,
            "probe.weight_decay" => self.probe.weight_decay = num(v)?,
            "finetune.lr" => self.finetune.train.learning_rate = num(v)?,
            "finetune.epochs" => self.finetune.train.epochs = num(v)?,
            "finetune.batch_size" => self.finetune.train.batch_size = num(v)?,
            "finetune.weight_decay" => self.finetune.train.weight_decay = num(v)?,
            "finetune.head_hidden" => self.finetune.head_hidden = list(v)?,
            "finetune.freeze_encoder" => self.finetune.freeze_encoder = flag(v)?,
            "folds.rotations" => self.fold_rotations = num(v)?,
            "paths.manifest" => self.manifest = path(v),
            "paths.output" => self.output = path(v),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            self.set(k.trim(), v).map_err(err)?;
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text, origin)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, path)
    }

    /// Loads `explicit`, else the file named by `COCHCEPS_CONFIG`, else the
    /// defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        if let Some(p) = explicit {
            return Self::load(p);
        }
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }

    /// Applies `key=value` overrides, as given on a command line.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for (i, o) in overrides.iter().enumerate() {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("override {o:?} is not key=value")))?;
            self.set(k.trim(), v)
                .map_err(|m| Error::InvalidConfig(format!("override {}: {m}", i + 1)))?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.ccgram.frame.validate()?;
        crate::tonotopy::AngleGrid::new(self.ccgram.grid_spacing_deg, self.ccgram.grid_count)?;
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.ccgram.q_factor > 0.0) {
            return bad("filter.q must be positive");
        }
        if !(self.ccgram.eps_floor > 0.0) {
            return bad("ccgram.eps_floor must be positive");
        }
        if self.ccgram.num_coeffs == Some(0) {
            return bad("ccgram.num_coeffs must be positive or none");
        }
        if !(self.pretrain.ntxent.temperature > 0.0) {
            return bad("ntxent.temperature must be positive");
        }
        if self.pretrain.prep.resize.is_some_and(|(r, c)| r == 0 || c == 0) {
            return bad("view.resize must be positive");
        }
        if !(0.0..=1.0).contains(&self.pretrain.warmup_fraction) {
            return bad("pretrain.warmup_fraction must lie in [0, 1]");
        }
        if self.pretrain.batch_size == 0 || self.probe.batch_size == 0 || self.finetune.train.batch_size == 0 {
            return bad("batch sizes must be positive");
        }
        if !(self.preprocess.segment.seconds > 0.0) {
            return bad("segment.seconds must be positive");
        }
        if self.fold_rotations == 0 {
            return bad("folds.rotations must be positive");
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn hash(&self) -> [u8; 16] {
        let digest = Sha256::digest(self.render().as_bytes());
        let mut out = [0u8; 16];
        out.copy_from_slice(&digest[..16]);
        out
    }

    pub fn hash_hex(&self) -> String {
        hex::encode(self.hash())
    }

    /// Logs the resolved configuration and its hash at info level.
    pub fn log_resolved(&self) {
        log::info!("config hash {}", self.hash_hex());
        for (k, v) in self.entries() {
            log::info!("  {k} = {v}");
        }
    }

    /// Preprocessing settings with VAD framing and target rate following the
    /// extraction frame.
    pub fn preprocess_config(&self) -> PreprocessConfig {
        let mut p = self.preprocess.clone();
        p.vad.frame = self.ccgram.frame.clone();
        p.target_rate = Some(self.ccgram.frame.sample_rate);
        p
    }

    pub fn encoder_spec(&self, input_dim: usize) -> EncoderSpec {
        EncoderSpec {
            input_dim,
            ..self.encoder.clone()
        }
    }

    pub fn mask_policy(&self) -> MaskPolicy {
        self.pretrain.prep.policy
    }

    pub fn view_prep(&self) -> ViewPrep {
        self.pretrain.prep.clone()
    }
}
