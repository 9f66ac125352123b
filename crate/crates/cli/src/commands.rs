use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use cochceps::augment::{sample_transform, sample_view_pair};
use cochceps::cepstrogram::CcgramExtractor;
use cochceps::contrastive::train_simclr;
use cochceps::datasets::{
    atomic_write, make_folds_with, read_ccgram, write_ccgram, Checkpoint, FoldOptions, Manifest, ManifestEntry, Role,
};
use cochceps::plot::{render_pgm, render_pgm_masked, with_comment};
use cochceps::preprocess::{preprocess_file, read_wav, resample, segment_with, write_wav_f32, AudioSegment};
use cochceps::probe::{finetune, train_linear_probe, Metrics};
use cochceps::{rng, Matrix, RunConfig};

use crate::data::{labelled, load_ccgrams, read_folds, read_manifest, FeaturePrep, Sample, Selection};
use crate::error::{At, CliError, CliResult};

const PREVIEW_SALT: u64 = 0x5052_4556;
const PLOT_SALT: u64 = 0x504c_4f54;

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).at(dir)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

/// Claims `name` in `taken`, failing on a clash between inputs.
fn claim(taken: &mut BTreeSet<String>, name: String, origin: &Path) -> CliResult<String> {
    if !taken.insert(name.clone()) {
        return Err(CliError::data(origin, format!("output name {name} produced twice")));
    }
    Ok(name)
}

fn write_manifest(path: &Path, manifest: &Manifest, cfg: &RunConfig) -> CliResult<()> {
    let text = format!("# config_hash={}\n{}", cfg.hash_hex(), manifest.to_tsv());
    atomic_write(path, text.as_bytes()).at(path)
}

pub struct Split<'a> {
    pub manifest: &'a Path,
    pub folds: Option<&'a Path>,
    pub rotation: usize,
    pub test: Option<&'a Path>,
}

fn select(split: &Split, roles: &[Role]) -> CliResult<Vec<Sample>> {
    match split.folds {
        Some(fp) => {
            let folds = read_folds(fp, split.rotation)?;
            let sel = Selection {
                folds: &folds,
                rotation: split.rotation,
                roles,
            };
            load_ccgrams(split.manifest, Some(&sel))
        }
        None => load_ccgrams(split.manifest, None),
    }
}

/// `(train, test)` samples: fold roles when folds are given, else the
/// manifest for training and `--test` (or the same manifest) for testing.
fn train_test(split: &Split) -> CliResult<((Vec<Sample>, Vec<usize>), (Vec<Sample>, Vec<usize>))> {
    let train = labelled(select(split, &[Role::Finetune])?, split.manifest)?;
    let test = match (split.folds, split.test) {
        (Some(_), _) => labelled(select(split, &[Role::Test])?, split.manifest)?,
        (None, Some(t)) => labelled(load_ccgrams(t, None)?, t)?,
        (None, None) => labelled(load_ccgrams(split.manifest, None)?, split.manifest)?,
    };
    if test.0[0].ccgram.shape() != train.0[0].ccgram.shape() {
        return Err(CliError::data(
            split.test.unwrap_or(split.manifest),
            "test CCGRAM shape differs from training shape",
        ));
    }
    Ok((train, test))
}

fn write_report(path: &Path, cfg: &RunConfig, metrics: &Metrics, prefix: &str) -> CliResult<()> {
    let text = format!("config_hash={}\n{}", cfg.hash_hex(), metrics.report(prefix));
    print!("{text}");
    atomic_write(path, text.as_bytes()).at(path)
}

fn report_path(out: &Path) -> PathBuf {
    out.with_extension("metrics")
}

pub fn preprocess(cfg: &RunConfig, input: &Path, out: &Path) -> CliResult<()> {
    let manifest = read_manifest(input)?;
    ensure_dir(out)?;
    let pcfg = cfg.preprocess_config();
    let mut taken = BTreeSet::new();
    let mut listing = Manifest::default();
    for entry in &manifest.entries {
        let path = manifest.resolve(entry);
        if !entry.pre_separated {
            log::warn!("{}: not pre-separated; no source separation is applied", path.display());
        }
        let segments = preprocess_file(&path, &entry.speaker_id, entry.arousal, entry.valence, &pcfg).at(&path)?;
        if segments.is_empty() {
            log::warn!("{}: no voiced segment long enough", path.display());
        }
        let stem = file_stem(&path);
        for (j, seg) in segments.iter().enumerate() {
            let name = claim(&mut taken, format!("{stem}_{j:03}.wav"), &path)?;
            let dest = out.join(&name);
            write_wav_f32(&dest, &seg.samples, seg.sample_rate).at(&dest)?;
            listing.entries.push(ManifestEntry {
                path: name.into(),
                duration: seg.duration_seconds(),
                ..entry.clone()
            });
        }
    }
    write_manifest(&out.join("manifest.tsv"), &listing, cfg)?;
    println!("segments={}", listing.entries.len());
    Ok(())
}

pub fn extract(cfg: &RunConfig, input: &Path, out: &Path) -> CliResult<()> {
    let manifest = read_manifest(input)?;
    let extractor = CcgramExtractor::new(cfg.ccgram.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
    let rate = cfg.ccgram.frame.sample_rate;
    ensure_dir(out)?;
    let mut taken = BTreeSet::new();
    let mut listing = Manifest::default();
    for entry in &manifest.entries {
        let path = manifest.resolve(entry);
        let (samples, sr) = read_wav(&path).at(&path)?;
        let samples = resample(&samples, sr, rate).at(&path)?;
        let audio = AudioSegment {
            speaker_id: entry.speaker_id.clone(),
            arousal: entry.arousal,
            valence: entry.valence,
            ..AudioSegment::new(samples, rate)
        };
        let stem = file_stem(&path);
        for (j, seg) in segment_with(&audio, &cfg.preprocess.segment).iter().enumerate() {
            let ccgram = extractor.extract(seg).at(&path)?;
            let name = claim(&mut taken, format!("{stem}_{j:03}.ccg"), &path)?;
            let dest = out.join(&name);
            write_ccgram(&dest, &ccgram).at(&dest)?;
            listing.entries.push(ManifestEntry {
                path: name.into(),
                duration: seg.duration_seconds(),
                ..entry.clone()
            });
        }
    }
    write_manifest(&out.join("manifest.tsv"), &listing, cfg)?;
    println!("ccgrams={}", listing.entries.len());
    Ok(())
}

pub fn augment_preview(cfg: &RunConfig, input: &Path, out: &Path, count: usize) -> CliResult<()> {
    let ccgram = read_ccgram(input).at(input)?;
    ensure_dir(out)?;
    let hash = cfg.hash_hex();
    let policy = cfg.mask_policy();
    let base = rng::derive_seed(cfg.seed, PREVIEW_SALT);
    for k in 0..count {
        let pair = sample_view_pair(&ccgram, &policy, &mut rng::stream(base, k as u64));
        for (side, view, transform, masks) in [
            ("i", &pair.view_i, pair.transforms[0], &pair.masks[0]),
            ("j", &pair.view_j, pair.transforms[1], &pair.masks[1]),
        ] {
            let pgm = render_pgm_masked(&view.values, masks).at(input)?;
            let comment = format!("config_hash={hash} transform={transform}");
            let dest = out.join(format!("view_{k:03}_{side}.pgm"));
            atomic_write(&dest, &with_comment(pgm, &comment)).at(&dest)?;
            println!("{} transform={transform} masks={}", dest.display(), masks.len());
        }
    }
    Ok(())
}

pub fn pretrain(cfg: &RunConfig, split: &Split, out: &Path) -> CliResult<()> {
    let samples = select(split, &[Role::Pretrain])?;
    let prep = FeaturePrep::fit(&samples, cfg.pretrain.prep.resize).at(split.manifest)?;
    let normed: Vec<_> = samples.iter().map(|s| prep.normalized(&s.ccgram)).collect();
    let (rows, cols) = normed[0].shape();
    let spec = cfg.encoder_spec(cfg.pretrain.prep.output_len(rows, cols));
    let outcome = train_simclr(&normed, &spec, &cfg.pretrain, cfg.seed).at(split.manifest)?;
    for (e, loss) in outcome.history.iter().enumerate() {
        println!("epoch={} loss={loss:.6}", e + 1);
    }
    let mut ck = Checkpoint::from_simclr(&outcome.model, cfg.hash());
    prep.store(&mut ck);
    ck.tensors.push(cochceps::datasets::Tensor {
        name: "history".into(),
        rows: 1,
        cols: outcome.history.len(),
        data: outcome.history.clone(),
    });
    ck.write(out).at(out)
}

fn load_encoder(model: &Path) -> CliResult<(Checkpoint, cochceps::SimclrModel, FeaturePrep)> {
    let ck = Checkpoint::read(model).at(model)?;
    let simclr = ck.to_simclr().at(model)?;
    let prep = FeaturePrep::load(&ck, model)?;
    Ok((ck, simclr, prep))
}

fn check_input_dim(expected: usize, actual: usize, origin: &Path) -> CliResult<()> {
    if expected != actual {
        return Err(CliError::data(
            origin,
            format!("model expects {expected} inputs but CCGRAMs give {actual}"),
        ));
    }
    Ok(())
}

pub fn probe(cfg: &RunConfig, split: &Split, model: Option<&Path>, out: &Path) -> CliResult<()> {
    let ((train, train_y), (test, test_y)) = train_test(split)?;
    let (encoder, prep) = match model {
        Some(m) => {
            let (_, simclr, prep) = load_encoder(m)?;
            (Some(simclr.encoder), prep)
        }
        None => (None, FeaturePrep::fit(&train, None).at(split.manifest)?),
    };
    let features = |set: &[Sample]| -> CliResult<Vec<Vec<f64>>> {
        set.iter()
            .map(|s| {
                let x = prep.input(&s.ccgram);
                match &encoder {
                    Some(e) => {
                        check_input_dim(e.input_dim(), x.len(), &s.path)?;
                        Ok(e.forward(&x))
                    }
                    None => Ok(x),
                }
            })
            .collect()
    };
    let train_x = features(&train)?;
    let test_x = features(&test)?;
    let probe = train_linear_probe(&train_x, &train_y, &cfg.probe, cfg.seed).at(split.manifest)?;
    let metrics = probe.evaluate(&test_x, &test_y).at(split.manifest)?;
    let mut ck = Checkpoint::from_probe(&probe, None, cfg.hash());
    if let Some(e) = &encoder {
        ck.push_mlp("encoder", e);
    }
    prep.store(&mut ck);
    ck.write(out).at(out)?;
    write_report(&report_path(out), cfg, &metrics, "test_")
}

pub fn finetune_cmd(cfg: &RunConfig, split: &Split, model: &Path, out: &Path) -> CliResult<()> {
    let ((train, train_y), (test, test_y)) = train_test(split)?;
    let (_, simclr, prep) = load_encoder(model)?;
    let inputs = |set: &[Sample]| -> CliResult<Vec<Vec<f64>>> {
        set.iter()
            .map(|s| {
                let x = prep.input(&s.ccgram);
                check_input_dim(simclr.encoder.input_dim(), x.len(), &s.path)?;
                Ok(x)
            })
            .collect()
    };
    let outcome = finetune(
        &simclr.encoder,
        &inputs(&train)?,
        &train_y,
        &inputs(&test)?,
        &test_y,
        &cfg.finetune,
        cfg.seed,
    )
    .at(split.manifest)?;
    let mut ck = Checkpoint::from_probe(&outcome.probe, Some(&outcome.encoder), cfg.hash());
    prep.store(&mut ck);
    ck.write(out).at(out)?;
    write_report(&report_path(out), cfg, &outcome.metrics, "test_")
}

pub fn eval(cfg: &RunConfig, split: &Split, model: &Path, report: Option<&Path>) -> CliResult<()> {
    let ck = Checkpoint::read(model).at(model)?;
    let (probe, encoder) = ck.to_probe().at(model)?;
    let prep = FeaturePrep::load(&ck, model)?;
    let samples = match split.folds {
        Some(_) => select(split, &[Role::Test])?,
        None => load_ccgrams(split.manifest, None)?,
    };
    let (samples, labels) = labelled(samples, split.manifest)?;
    let mut features = Vec::with_capacity(samples.len());
    for s in &samples {
        let x = prep.input(&s.ccgram);
        let f = match &encoder {
            Some(e) => {
                check_input_dim(e.input_dim(), x.len(), &s.path)?;
                e.forward(&x)
            }
            None => x,
        };
        check_input_dim(probe.head.input_dim(), f.len(), &s.path)?;
        features.push(f);
    }
    let metrics = probe.evaluate(&features, &labels).at(split.manifest)?;
    match report {
        Some(p) => write_report(p, cfg, &metrics, ""),
        None => {
            print!("config_hash={}\n{}", cfg.hash_hex(), metrics.report(""));
            Ok(())
        }
    }
}

fn read_partners(path: &Path) -> CliResult<Vec<[String; 2]>> {
    let text = std::fs::read_to_string(path).at(path)?;
    let mut groups = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(CliError::data(path, format!("line {}: expected two speaker ids", i + 1)));
        }
        groups.push([fields[0].to_string(), fields[1].to_string()]);
    }
    Ok(groups)
}

pub fn folds(cfg: &RunConfig, input: &Path, out: &Path, partners: Option<&Path>) -> CliResult<()> {
    let manifest = read_manifest(input)?;
    let options = FoldOptions {
        rotations: cfg.fold_rotations,
        seed: cfg.seed,
        partner_groups: partners.map(read_partners).transpose()?,
    };
    let assignment = make_folds_with(&manifest.speakers(), &options).at(input)?;
    let mut text = format!("# config_hash={}\n", cfg.hash_hex());
    text.push_str(&assignment.to_tsv());
    atomic_write(out, text.as_bytes()).at(out)?;
    for r in 0..assignment.rotations.len() {
        let (p, v, f, t) = assignment.role_sizes(r);
        println!("rotation={} pretrain={p} validation={v} finetune={f} test={t}", r + 1);
    }
    Ok(())
}

pub fn plot(cfg: &RunConfig, input: &Path, out: &Path, overlay: bool) -> CliResult<()> {
    let ccgram = read_ccgram(input).at(input)?;
    let hash = cfg.hash_hex();
    let (pgm, comment) = if overlay {
        let mut r = rng::stream(rng::derive_seed(cfg.seed, PLOT_SALT), 0);
        let t = sample_transform(&mut r);
        let (image, masks): (Matrix, _) = t.apply(&ccgram.values, &cfg.mask_policy(), &mut r);
        (
            render_pgm_masked(&image, &masks).at(input)?,
            format!("config_hash={hash} transform={t}"),
        )
    } else {
        (render_pgm(&ccgram.values, None).at(input)?, format!("config_hash={hash}"))
    };
    atomic_write(out, &with_comment(pgm, &comment)).at(out)
}
