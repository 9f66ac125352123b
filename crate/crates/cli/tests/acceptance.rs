//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cochceps::augment::{mask_cells, sample_view_pair_seeded, znormalize_fold, MaskAxis, MaskPolicy, Transform, ViewPrep};
use cochceps::cepstrogram::{cfcc_lift, CcgramConfig, CcgramExtractor};
use cochceps::cochlear_transform::{frame_signal, FrameSpec};
use cochceps::contrastive::{
    nt_xent, nt_xent_loss, train_simclr, EmbeddingBatch, EncoderSpec, NtXentConfig, PretrainConfig, SimclrModel,
};
use cochceps::datasets::{read_ccgram, write_ccgram};
use cochceps::matrix::Matrix;
use cochceps::nn::Activation;
use cochceps::preprocess::write_wav_i16;
use cochceps::probe::{evaluate_predictions, quadrant_label, train_linear_probe, ProbeConfig, QuadrantLabel};
use cochceps::synthetic::{blob_templates, template_dataset, voiced_recording};
use cochceps::tonotopy::place_to_frequency;
use cochceps::{rng, CCGram};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 40-digit evaluations of 165.4·(3251^2.1·(θ+177.3)^(−2.1·1.149) − 0.88).
const TONOTOPY_ORACLE: [(f64, f64); 23] = [
    (0.0, 14572.889736492895),
    (45.0, 8382.3246826284622),
    (90.0, 5320.3942107443712),
    (135.0, 3609.5211395754877),
    (180.0, 2568.1226418260571),
    (225.0, 1892.6741423672457),
    (270.0, 1432.5717643700837),
    (315.0, 1106.6943382470774),
    (360.0, 868.43158996484418),
    (405.0, 689.56716684904004),
    (450.0, 552.26736916050803),
    (495.0, 444.84495647537181),
    (540.0, 359.40059268913761),
    (585.0, 290.45103194738505),
    (630.0, 234.10071004159602),
    (675.0, 187.52490907932379),
    (720.0, 148.63795690430387),
    (765.0, 115.87476085085092),
    (810.0, 88.043686220202561),
    (855.0, 64.225458279726642),
    (900.0, 43.702412793728467),
    (945.0, 25.90815995109497),
    (990.0, 10.391228730574245),
];

fn tonotopy() -> Check {
    let f: Vec<f64> = (0..=990).map(|d| place_to_frequency(d as f64).unwrap()).collect();
    if let Some(d) = f.windows(2).position(|w| w[1] >= w[0]) {
        return Err(format!("not decreasing at {d}°"));
    }
    let mut worst: f64 = 0.0;
    for (theta, want) in TONOTOPY_ORACLE {
        let got = place_to_frequency(theta).map_err(|e| e.to_string())?;
        worst = worst.max(((got - want) / want).abs());
    }
    ensure(worst < 1e-3, || format!("relative error {worst:.2e}"))?;
    ensure(f[0] > 10_000.0 && f[990] < 20.0, || format!("f(0)={} f(990)={}", f[0], f[990]))?;
    Ok(format!("f(0)={:.1} Hz, f(990)={:.2} Hz, max rel err {worst:.1e}", f[0], f[990]))
}

fn ccgram_shape() -> Check {
    let ext = CcgramExtractor::new(CcgramConfig::default()).map_err(|e| e.to_string())?;
    let mut r = rng::seeded(2);
    let inputs: Vec<Vec<f64>> = vec![
        vec![0.0; 48_000],
        (0..48_000).map(|n| (2.0 * PI * 440.0 * n as f64 / 16_000.0).sin()).collect(),
        (0..48_000).map(|_| r.random_range(-1.0..1.0)).collect(),
        voiced_recording(3.0, 16_000, 150.0, 5, 1, 3),
    ];
    for x in &inputs {
        let shape = ext.extract_samples(x).map_err(|e| e.to_string())?.shape();
        ensure(shape == (20, 239), || format!("shape {shape:?}"))?;
    }
    let spec = FrameSpec::default();
    for i in 0..1000 {
        let len = r.random_range(400..200_000);
        let frames = frame_signal(&vec![0.1; len], &spec).map_err(|e| e.to_string())?;
        let want = (len - 400) / 200 + 1;
        ensure(frames.len() == want, || format!("len {len}: {} frames, want {want}", frames.len()))?;
        if i % 50 == 0 {
            let cols = ext.extract_samples(&vec![0.1; len]).map_err(|e| e.to_string())?.cols();
            ensure(cols == want, || format!("len {len}: {cols} columns"))?;
        }
    }
    Ok("20x239 on 4 inputs, frame count on 1000 lengths".into())
}

fn naive_lift(x: &[f64], m_count: usize) -> Vec<f64> {
    let k_len = x.len() as f64;
    (1..=m_count)
        .map(|m| {
            let mut acc = 0.0;
            for (i, v) in x.iter().enumerate() {
                acc += v * (PI * (i + 1) as f64 / k_len * (m as f64 - 0.5)).cos();
            }
            (2.0 / k_len).sqrt() * acc
        })
        .collect()
}

fn lift_fidelity() -> Check {
    let mut r = rng::seeded(3);
    let scale = |x: &[f64]| (2.0 / x.len() as f64).sqrt() * x.iter().map(|v| v.abs()).sum::<f64>();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = r.random_range(1..=64);
        let x: Vec<f64> = (0..k).map(|_| r.random_range(-25.0..5.0)).collect();
        let y: Vec<f64> = (0..k).map(|_| r.random_range(-25.0..5.0)).collect();
        let got = cfcc_lift(&x, k).map_err(|e| e.to_string())?;
        for (g, w) in got.iter().zip(naive_lift(&x, k)) {
            worst = worst.max((g - w).abs() / scale(&x));
        }
        let (a, b) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lm = cfcc_lift(&mix, k).map_err(|e| e.to_string())?;
        let ly = cfcc_lift(&y, k).map_err(|e| e.to_string())?;
        for i in 0..k {
            let err = (lm[i] - (a * got[i] + b * ly[i])).abs() / (a.abs() * scale(&x) + b.abs() * scale(&y));
            worst = worst.max(err);
        }
    }
    ensure(worst < 1e-12, || format!("relative error {worst:.2e}"))?;
    Ok(format!("100 vectors, max rel err {worst:.1e}"))
}

fn masking() -> Check {
    let data = (0..20 * 239).map(|i| 1.0 + i as f64).collect();
    let x = CCGram::new(Matrix::from_vec(20, 239, data).unwrap(), 45.0);
    let policy = MaskPolicy::default();
    let mut per_view = [HashMap::new(), HashMap::new()];
    for seed in 0..100_000u64 {
        let pair = sample_view_pair_seeded(&x, &policy, seed);
        for v in 0..2 {
            let (view, masks) = if v == 0 { (&pair.view_i, &pair.masks[0]) } else { (&pair.view_j, &pair.masks[1]) };
            for m in masks {
                let (len, max) = match m.axis {
                    MaskAxis::Angle => (20, policy.phi),
                    MaskAxis::Quefrency => (239, policy.q),
                };
                ensure(m.width <= max && m.start_index + m.width <= len, || format!("seed {seed}: {m:?}"))?;
            }
            let expected = mask_cells(masks, 20, 239);
            let differs = x.values.as_slice().iter().zip(view.values.as_slice()).map(|(a, b)| a != b);
            ensure(differs.eq(expected.into_iter()), || format!("seed {seed}: changed cells differ from bands"))?;
            if seed < 30_000 {
                *per_view[v].entry(pair.transforms[v]).or_insert(0usize) += 1;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for counts in &per_view {
        for t in Transform::ALL {
            worst = worst.max((counts[&t] as f64 / 30_000.0 - 1.0 / 3.0).abs());
        }
    }
    ensure(worst < 0.01, || format!("transform frequency off by {worst:.4}"))?;
    Ok(format!("1e5 pairs in bounds and exact, max frequency deviation {worst:.4}"))
}

fn brute_nt_xent(z: &[Vec<f64>], tau: f64) -> f64 {
    let n2 = z.len();
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        d / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    };
    let mut total = 0.0;
    for i in 0..n2 {
        let p = (i + n2 / 2) % n2;
        let denom: f64 = (0..n2).filter(|&k| k != i).map(|k| (cos(&z[i], &z[k]) / tau).exp()).sum();
        total -= ((cos(&z[i], &z[p]) / tau).exp() / denom).ln();
    }
    total / n2 as f64
}

fn views(r: &mut impl Rng, n: usize, dim: usize) -> EmbeddingBatch {
    let mut draw = || -> Vec<Vec<f64>> { (0..n).map(|_| (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()).collect() };
    let (a, b) = (draw(), draw());
    EmbeddingBatch::from_views(a, b).unwrap()
}

fn nt_xent_checks() -> Check {
    let mut r = rng::seeded(5);
    let err = |e: cochceps::Error| e.to_string();

    for _ in 0..20 {
        let b = views(&mut r, 1, 4);
        let loss = nt_xent_loss(&b, &NtXentConfig { temperature: 0.1 }).map_err(err)?;
        ensure(loss == 0.0, || format!("N=1 loss {loss}"))?;
    }

    let (e1, e2) = (vec![1.0, 0.0], vec![0.0, 1.0]);
    let hand = EmbeddingBatch::from_views(vec![e1.clone(), e2.clone()], vec![e1, e2]).unwrap();
    let loss = nt_xent_loss(&hand, &NtXentConfig { temperature: 1.0 }).map_err(err)?;
    let e = std::f64::consts::E;
    let want = -(e / (e + 2.0)).ln();
    ensure((loss - want).abs() < 1e-6, || format!("N=2 hand case {loss}"))?;

    let mut worst_loss: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(1..8);
        let dim = r.random_range(2..10);
        let cfg = NtXentConfig {
            temperature: r.random_range(0.1..1.0),
        };
        let b = views(&mut r, n, dim);
        let out = nt_xent(&b, &cfg).map_err(err)?;
        let brute = brute_nt_xent(b.vectors(), cfg.temperature);
        worst_loss = worst_loss.max((out.loss - brute).abs() / brute.abs().max(1.0));

        let h = 1e-5;
        for i in 0..b.len() {
            for d in 0..dim {
                let mut up = b.clone();
                up.vectors_mut()[i][d] += h;
                let mut dn = b.clone();
                dn.vectors_mut()[i][d] -= h;
                let fd = (nt_xent_loss(&up, &cfg).map_err(err)? - nt_xent_loss(&dn, &cfg).map_err(err)?) / (2.0 * h);
                let g = out.grad[i][d];
                worst_grad = worst_grad.max((fd - g).abs() / fd.abs().max(g.abs()).max(1e-7));
            }
        }
    }
    ensure(worst_loss < 1e-10, || format!("brute-force error {worst_loss:.2e}"))?;
    ensure(worst_grad < 1e-4, || format!("finite-difference error {worst_grad:.2e}"))?;
    Ok(format!(
        "N=2 loss {loss:.6}, brute-force err {worst_loss:.1e}, gradient err {worst_grad:.1e}"
    ))
}

const SSL_SEED: u64 = 2;

fn desk_ssl() -> Check {
    let templates = blob_templates(20, 64, 1.5);
    let (train, _) = template_dataset(&templates, 64, 1.0, SSL_SEED);
    let (held, held_y) = template_dataset(&templates, 256, 1.0, SSL_SEED + 1000);
    let (normed, stats) = znormalize_fold(&train).map_err(|e| e.to_string())?;
    let spec = EncoderSpec {
        input_dim: 20 * 64,
        hidden: vec![64],
        feature_dim: 8,
        activation: Activation::Relu,
        projector_hidden: 32,
        projector_out: 16,
    };
    let cfg = PretrainConfig {
        epochs: 50,
        batch_size: 16,
        learning_rate: 0.1,
        momentum: 0.9,
        weight_decay: 1e-6,
        warmup_fraction: 0.1,
        ntxent: NtXentConfig { temperature: 0.5 },
        prep: ViewPrep {
            policy: MaskPolicy::default(),
            resize: None,
        },
    };
    let out = train_simclr(&normed, &spec, &cfg, SSL_SEED).map_err(|e| e.to_string())?;
    let (first, last) = (out.history[0], *out.history.last().unwrap());
    ensure(last < first, || format!("loss {first:.4} -> {last:.4}"))?;

    let untrained = SimclrModel::init(&spec, &mut rng::stream(SSL_SEED, 0)).map_err(|e| e.to_string())?;
    let probe_cfg = ProbeConfig {
        learning_rate: 1e-2,
        epochs: 100,
        batch_size: 16,
        weight_decay: 1e-6,
    };
    let accuracy = |model: &SimclrModel| -> Result<f64, String> {
        let feats: Vec<Vec<f64>> = held
            .iter()
            .map(|g| model.features(stats.apply(&g.values).as_slice()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let probe = train_linear_probe(&feats[..128], &held_y[..128], &probe_cfg, SSL_SEED).map_err(|e| e.to_string())?;
        Ok(probe.evaluate(&feats[128..], &held_y[128..]).map_err(|e| e.to_string())?.weighted_accuracy)
    };
    let (ssl, random) = (accuracy(&out.model)?, accuracy(&untrained)?);
    ensure(ssl >= 0.90 && random <= 0.60, || format!("probe {ssl:.3} vs untrained {random:.3}"))?;
    Ok(format!(
        "loss {first:.3} -> {last:.3}, probe {ssl:.3} vs untrained {random:.3}"
    ))
}

fn metrics() -> Check {
    let mut sizes: BTreeMap<QuadrantLabel, usize> = BTreeMap::new();
    for a in 1..=5 {
        for v in 1..=5 {
            *sizes.entry(quadrant_label(a, v).map_err(|e| e.to_string())?).or_default() += 1;
        }
    }
    let got: Vec<usize> = sizes.values().copied().collect();
    ensure(got == [4, 6, 6, 9], || format!("partition {got:?}"))?;

    let m = evaluate_predictions(&[0, 0, 0, 0], &[0, 0, 0, 1], 4).map_err(|e| e.to_string())?;
    let want = 0.75 * 6.0 / 7.0;
    ensure((m.weighted_f1 - want).abs() < 1e-9, || format!("weighted F1 {}", m.weighted_f1))?;

    let mut r = rng::seeded(7);
    let actual: Vec<usize> = (0..10_000).map(|i| i % 4).collect();
    let predicted: Vec<usize> = (0..10_000).map(|_| r.random_range(0..4)).collect();
    let wa = evaluate_predictions(&predicted, &actual, 4).map_err(|e| e.to_string())?.weighted_accuracy;
    ensure((wa - 0.25).abs() <= 0.02, || format!("random weighted accuracy {wa}"))?;
    Ok(format!("partition (4,6,6,9), F1 {:.6}, random accuracy {wa:.4}", m.weighted_f1))
}

fn persistence() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut r = rng::seeded(8);
    for i in 0..1000 {
        let (rows, cols) = (r.random_range(1..25), r.random_range(1..260));
        let data: Vec<f64> = (0..rows * cols)
            .map(|k| match k {
                0 => -0.0,
                _ => loop {
                    let v = f64::from_bits(r.random());
                    if v.is_finite() {
                        break v;
                    }
                },
            })
            .collect();
        let g = CCGram::new(Matrix::from_vec(rows, cols, data).unwrap(), 45.0);
        let path = dir.path().join(format!("m{i}.ccg"));
        write_ccgram(&path, &g).map_err(|e| e.to_string())?;
        let back = read_ccgram(&path).map_err(|e| e.to_string())?;
        let exact = back.shape() == g.shape()
            && back.values.as_slice().iter().zip(g.values.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
        ensure(exact, || format!("matrix {i} changed"))?;
    }
    let path = dir.path().join("default.ccg");
    write_ccgram(&path, &CCGram::new(Matrix::zeros(20, 239), 45.0)).map_err(|e| e.to_string())?;
    let size = std::fs::metadata(&path).map_err(|e| e.to_string())?.len();
    ensure(size == 38_272, || format!("default file is {size} bytes"))?;
    Ok("1000 bit-exact round trips, default file 38272 bytes".into())
}

const SMOKE_CONFIG: &str = "\
seed = 11
view.resize = none
encoder.hidden = 32
encoder.feature_dim = 16
projector.hidden = 32
projector.out = 16
pretrain.epochs = 5
pretrain.batch_size = 8
ntxent.temperature = 0.5
probe.lr = 0.01
probe.epochs = 20
";

fn write_inputs(dir: &Path) -> Result<(), String> {
    let mut manifest = String::from("path\tspeaker_id\tarousal\tvalence\tduration\tpre_separated\n");
    for s in 0..8u64 {
        for u in 0..2u64 {
            let (a, v) = (1 + ((s + u) % 5) as u8, 1 + ((s * 3 + u) % 5) as u8);
            let x = voiced_recording(7.0, 22_050, 110.0 + 15.0 * s as f64, a, v, s * 10 + u);
            let name = format!("s{s}_u{u}.wav");
            write_wav_i16(&dir.join(&name), &x, 22_050).map_err(|e| e.to_string())?;
            manifest.push_str(&format!("{name}\tspk{s}\t{a}\t{v}\t7.0\ttrue\n"));
        }
    }
    std::fs::write(dir.join("raw.tsv"), manifest).map_err(|e| e.to_string())?;
    std::fs::write(dir.join("run.cfg"), SMOKE_CONFIG).map_err(|e| e.to_string())
}

fn run_chain(dir: &Path) -> Result<usize, String> {
    write_inputs(dir)?;
    let steps: [&[&str]; 5] = [
        &["preprocess", "--in", "raw.tsv", "--out", "seg"],
        &["extract", "--in", "seg/manifest.tsv", "--out", "ccg"],
        &["folds", "--in", "ccg/manifest.tsv", "--out", "folds.tsv"],
        &["pretrain", "--in", "ccg/manifest.tsv", "--folds", "folds.tsv", "--out", "simclr.ckp"],
        &[
            "probe", "--in", "ccg/manifest.tsv", "--folds", "folds.tsv", "--model", "simclr.ckp", "--out", "probe.ckp",
        ],
    ];
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_cochceps"))
            .current_dir(dir)
            .args(["--config", "run.cfg", "--quiet"])
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!("{} exited {}: {}", args[0], out.status, String::from_utf8_lossy(&out.stderr))
        })?;
    }
    let segments = std::fs::read_dir(dir.join("ccg")).map_err(|e| e.to_string())?.count() - 1;
    Ok(segments)
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap().flatten() {
            let p = entry.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn pipeline_smoke() -> Check {
    let (a, b) = (
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    );
    let segments = run_chain(a.path())?;
    run_chain(b.path())?;
    let (fa, fb) = (artifacts(a.path()), artifacts(b.path()));
    ensure(fa.keys().eq(fb.keys()), || "runs produced different file sets".into())?;
    for (name, bytes) in &fa {
        ensure(fb[name] == *bytes, || format!("{name} differs between runs"))?;
    }
    for needed in ["simclr.ckp", "probe.ckp", "probe.metrics", "folds.tsv"] {
        ensure(fa.contains_key(needed), || format!("{needed} missing"))?;
    }
    Ok(format!("{segments} segments, {} artifacts identical across runs", fa.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, Option<u64>, fn() -> Check); 9] = [
        ("tonotopy", Some(1), tonotopy),
        ("CCGRAM shape", Some(10), ccgram_shape),
        ("lift fidelity", None, lift_fidelity),
        ("masking", None, masking),
        ("NT-Xent", Some(30), nt_xent_checks),
        ("desk-scale SSL", Some(300), desk_ssl),
        ("metrics", None, metrics),
        ("persistence", None, persistence),
        ("pipeline smoke", Some(600), pipeline_smoke),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(s)) if elapsed > Duration::from_secs(s) => Err(format!("took {elapsed:.2?}, limit {s} s")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}; {elapsed:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({why}; {elapsed:.2?})", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
