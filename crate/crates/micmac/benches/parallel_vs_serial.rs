//! Criterion benches for the data-parallel inner loops. Build once with the
//! default `parallel` feature and once with `--no-default-features` to
//! compare the rayon and sequential paths:
//!
//!   cargo bench -p micmac
//!   cargo bench -p micmac --no-default-features

use criterion::{criterion_group, criterion_main, Criterion};

use micmac::cv;
use micmac::learners::LearnerConfig;
use micmac::selectors::{self, SelectorConfig};
use micmac::synth::{generate, SynthConfig};

fn bench_dataset() -> micmac::dataset::Dataset {
    let cfg = SynthConfig {
        n_subjects: 60,
        samples_per_subject: 9,
        n_features: 300,
        n_informative: 12,
        effect_size: 1.5,
        subject_effect_std: 1.0,
        n_redundant_copies: 1,
        rho: 0.8,
        seed: 17,
    };
    generate(&cfg).unwrap().0
}

fn bench_preselect(c: &mut Criterion) {
    let d = bench_dataset();
    let rows: Vec<usize> = (0..d.n_samples()).collect();
    let cfg = SelectorConfig::default();
    c.bench_function("rf_preselect_540x300", |b| {
        b.iter(|| selectors::preselect_rf(&d, &rows, &cfg).unwrap())
    });
}

fn bench_selection(c: &mut Criterion) {
    let d = bench_dataset();
    let labels: Vec<u8> = d
        .subjects()
        .iter()
        .map(|s| d.subject_label(s).unwrap())
        .collect();
    let plan = cv::make_fold_plan(d.subjects(), &labels, 10, 9, 3).unwrap();
    let of = &plan.outer[0];
    let tv_rows = d.rows_of_subjects(&of.train_val_subjects);
    let mut cfg = SelectorConfig::default();
    cfg.max_selected = 15;
    let f0 = selectors::preselect_rf(&d, &tv_rows, &cfg).unwrap();
    let inner = &of.inner[0];
    let train = d.rows_of_subjects(&inner.train_subjects);
    let val = d.rows_of_subjects(&inner.val_subjects);
    c.bench_function("micmac_knn_inner_fold", |b| {
        b.iter(|| selectors::micmac_select(&d, &train, &val, &f0, &cfg).unwrap())
    });
    let mut svm_cfg = cfg.clone();
    svm_cfg.wrapper = LearnerConfig::svm();
    svm_cfg.max_selected = 5;
    c.bench_function("micmac_svm_inner_fold", |b| {
        b.iter(|| selectors::micmac_select(&d, &train, &val, &f0, &svm_cfg).unwrap())
    });
}

fn bench_topk(c: &mut Criterion) {
    let d = bench_dataset();
    let labels: Vec<u8> = d
        .subjects()
        .iter()
        .map(|s| d.subject_label(s).unwrap())
        .collect();
    let plan = cv::make_fold_plan(d.subjects(), &labels, 10, 9, 3).unwrap();
    let rankings: Vec<Vec<usize>> = vec![(0..60).collect(); 10];
    c.bench_function("topk_curve_knn_k60", |b| {
        b.iter(|| {
            cv::evaluate_topk_curve(&d, &plan, &rankings, &LearnerConfig::knn(), 1..=60).unwrap()
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_preselect, bench_selection, bench_topk
}
criterion_main!(benches);
