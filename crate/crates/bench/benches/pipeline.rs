use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cochceps::augment::sample_view_pair_seeded;
use cochceps::cepstrogram::{CCGram, CcgramConfig, CcgramExtractor};
use cochceps::contrastive::{nt_xent, EmbeddingBatch, NtXentConfig};
use cochceps::MaskPolicy;
use cochceps_bench::{random_matrix, random_vectors, test_signal};

fn ccgram(c: &mut Criterion) {
    let extractor = CcgramExtractor::new(CcgramConfig::default()).unwrap();
    let signal = test_signal();
    c.bench_function("ccgram_3s", |b| b.iter(|| extractor.extract_samples(black_box(&signal)).unwrap()));
}

fn ntxent(c: &mut Criterion) {
    let batch = EmbeddingBatch::from_views(random_vectors(64, 256, 1), random_vectors(64, 256, 2)).unwrap();
    let cfg = NtXentConfig::default();
    c.bench_function("nt_xent_64x256", |b| b.iter(|| nt_xent(black_box(&batch), &cfg).unwrap()));
}

fn masking(c: &mut Criterion) {
    let g = CCGram::new(random_matrix(20, 239, 3), 45.0);
    let policy = MaskPolicy::default();
    let mut seed = 0u64;
    c.bench_function("view_pair_20x239", |b| {
        b.iter(|| {
            seed += 1;
            sample_view_pair_seeded(black_box(&g), &policy, seed)
        })
    });
}

criterion_group!(benches, ccgram, ntxent, masking);
criterion_main!(benches);
