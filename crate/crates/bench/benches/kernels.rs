use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use frlstm_core::neural::{backward, forward_batch, init_model, predict_last, ModelShape};
use frlstm_core::pipeline::{synth_tone_mix, Partial};
use frlstm_core::{resample, FrftPlan, Kernel};
use ndarray::Array3;
use num_complex::Complex64;

fn frft(c: &mut Criterion) {
    let mut group = c.benchmark_group("frft");
    for len in [1024usize, 16_384, 50_000] {
        let signal: Vec<Complex64> = (0..len).map(|i| Complex64::new((i as f64 * 0.013).sin(), 0.0)).collect();
        for kernel in [Kernel::StandardChirp, Kernel::PaperLiteral] {
            let plan = FrftPlan::new(len, 0.05, kernel).unwrap();
            group.bench_with_input(BenchmarkId::new(kernel.to_string(), len), &signal, |b, s| {
                b.iter(|| plan.forward(black_box(s)).unwrap())
            });
        }
    }
    group.finish();
}

fn lstm(c: &mut Criterion) {
    let mut group = c.benchmark_group("lstm");
    group.sample_size(10);
    let shape = ModelShape {
        input_size: 1,
        hidden_size: 64,
        output_size: 1,
        num_layers: 2,
    };
    let model = init_model(shape, 0);
    let inputs = Array3::from_shape_fn((32, 200, 1), |(b, t, _)| ((b * 200 + t) as f64 * 0.05).sin());
    group.bench_function("forward_b32_t200_h64x2", |b| {
        b.iter(|| forward_batch(&model, black_box(inputs.view())).unwrap())
    });
    group.bench_function("predict_last_b32_t200_h64x2", |b| {
        b.iter(|| predict_last(&model, black_box(inputs.view())).unwrap())
    });
    let (out, cache) = forward_batch(&model, inputs.view()).unwrap();
    let d_out = out.mapv(|v| v * 1e-2);
    group.bench_function("backward_b32_t200_h64x2", |b| {
        b.iter(|| backward(&model, &cache, black_box(d_out.view())).unwrap())
    });
    group.finish();
}

fn resampling(c: &mut Criterion) {
    let clip = synth_tone_mix(10.0, 44_100, &[Partial::new(440.0, 0.5)], 0.0, 0).unwrap();
    c.bench_function("resample_10s_44100_to_5000", |b| {
        b.iter(|| resample(black_box(&clip), 5000).unwrap())
    });
}

criterion_group!(benches, frft, lstm, resampling);
criterion_main!(benches);
