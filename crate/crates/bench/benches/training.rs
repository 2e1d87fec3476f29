use criterion::{black_box, criterion_group, criterion_main, Criterion};

use biaslens::cnn::{adam_step, loss_and_grad};
use biaslens::{init_model, ImageTensor, ModelConfig, TrainConfig};

fn batch(n: usize, size: usize) -> Vec<ImageTensor> {
    (0..n)
        .map(|k| {
            let data = (0..size * size).map(|i| ((i * 31 + k * 17) % 97) as f64 / 96.0).collect();
            ImageTensor::new(size, size, 1, data).unwrap()
        })
        .collect()
}

fn training_step(c: &mut Criterion) {
    let tc = TrainConfig::default();
    let images = batch(16, 64);
    let refs: Vec<&ImageTensor> = images.iter().collect();
    let labels: Vec<usize> = (0..16).map(|i| i % 5).collect();
    for (name, mc) in [
        ("compact_64x64_batch16", ModelConfig::compact(64, 64, 1, 5)),
        ("vgg_mini_64x64_batch16", ModelConfig::vgg_mini(64, 64, 1, 5)),
    ] {
        let mut model = init_model(&mc, 0).unwrap();
        c.bench_function(name, |b| {
            b.iter(|| {
                let (_, grads) = loss_and_grad(&model, black_box(&refs), &labels).unwrap();
                adam_step(&mut model, &grads, &tc).unwrap();
            })
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = training_step
}
criterion_main!(benches);
