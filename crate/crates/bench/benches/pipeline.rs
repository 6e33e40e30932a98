use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use roidiff_core::classifier::{NnModel, NnParams, TreeModel, TreeParams};
use roidiff_core::imaging::{harris_corners, to_grayscale, HarrisParams};
use roidiff_core::segmentation::segment;
use roidiff_core::synth::{gen_pair, harvest_samples, CorpusConfig, CorpusPair};
use roidiff_core::{compare_pages, CompareConfig, Raster, SegmentationConfig, Target, TrainingSet};

fn page(width: u32, height: u32) -> (CorpusPair, Raster, Raster) {
    let cfg = CorpusConfig {
        width,
        height,
        min_elements: (height / 60) as usize,
        max_elements: (height / 50) as usize,
        ..CorpusConfig::default()
    };
    let pair = gen_pair(0, 2024, &cfg).unwrap();
    let (b, t) = pair.render();
    (pair, b, t)
}

fn imaging(c: &mut Criterion) {
    let (_, b, _) = page(1280, 1000);
    let gray = to_grayscale(&b);
    let view = gray.view().unwrap();
    let params = HarrisParams::default();
    c.bench_function("harris_1280x1000", |bench| {
        bench.iter(|| harris_corners(black_box(&view), &params))
    });
    let seg = SegmentationConfig::default();
    c.bench_function("segment_1280x1000", |bench| {
        bench.iter(|| segment(black_box(&gray), &seg).unwrap())
    });
}

fn compare(c: &mut Criterion) {
    let mut group = c.benchmark_group("compare_pages");
    group.sample_size(10);
    for (w, h) in [(1280, 1000), (1280, 4000)] {
        let (pair, b, t) = page(w, h);
        let cfg = CompareConfig {
            config_index: pair.config_index,
            ..CompareConfig::default()
        };
        group.bench_function(format!("{w}x{h}"), |bench| {
            bench.iter(|| compare_pages(black_box(&b), black_box(&t), &cfg, None).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let samples = harvest_samples(
        7,
        &CorpusConfig::default(),
        &CompareConfig::default(),
        200,
        600,
        12,
    )
    .unwrap();
    let data = TrainingSet::from_samples(&samples, Target::Binary).unwrap();
    let mut group = c.benchmark_group("train");
    group.sample_size(10);
    group.bench_function(format!("nn_{}", data.len()), |bench| {
        bench.iter(|| NnModel::train(black_box(&data), NnParams::default()).unwrap())
    });
    group.bench_function(format!("tree_{}", data.len()), |bench| {
        bench.iter(|| TreeModel::train(black_box(&data), TreeParams::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, imaging, compare, training);
criterion_main!(benches);
