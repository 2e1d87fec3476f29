//! Statistical checks that the synthetic corpus carries bias exactly where
//! it was injected.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use biaslens::synth::CORNER_CLEARANCE;
use biaslens::{
    chance_threshold, crop_corner, generate_shape_dataset, inject_class_correlated_background, split_dataset,
    BiasPattern, BiasSpec, Corner, CropSpec, LabeledDataset, Partition, SynthSpec,
};

const BINS: usize = 10;

/// Chi-square p-value for homogeneity of the per-class histograms of all
/// corner-square pixels, binned at pooled deciles.
fn corner_homogeneity_p(ds: &LabeledDataset) -> f64 {
    let k = ds.num_classes();
    let size = ds.items()[0].image.height();
    let c = CORNER_CLEARANCE;
    let mut per_class: Vec<Vec<f64>> = vec![Vec::new(); k];
    for item in ds.items() {
        for y in 0..size {
            for x in 0..size {
                let in_corner = (y < c || y >= size - c) && (x < c || x >= size - c);
                if in_corner {
                    assert!(!item.mask.as_ref().unwrap().get(y, x), "corner pixel is foreground");
                    per_class[item.label].push(item.image.get(y, x, 0));
                }
            }
        }
    }
    let mut pooled: Vec<f64> = per_class.iter().flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (1..BINS).map(|b| pooled[b * pooled.len() / BINS]).collect();
    let table: Vec<Vec<f64>> = per_class
        .iter()
        .map(|vals| {
            let mut counts = vec![0.0; BINS];
            for &v in vals {
                counts[edges.partition_point(|&e| e <= v)] += 1.0;
            }
            counts
        })
        .collect();
    let total: f64 = table.iter().flatten().sum();
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..BINS).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut stat = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = rows[i] * cols[j] / total;
            stat += (obs - expected).powi(2) / expected;
        }
    }
    let df = ((k - 1) * (BINS - 1)) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

/// Nearest-class-mean probe on top-left 20×20 crops: fit on the training
/// partition, score on the test partition.
fn crop_probe_accuracy(ds: &LabeledDataset, seed: u64) -> (f64, usize) {
    let split = split_dataset(ds, [0.70, 0.15, 0.15], seed).unwrap();
    let crop = CropSpec { corner: Corner::TopLeft, size: 20 };
    let features = |i: usize| crop_corner(&ds.items()[i].image, crop).unwrap().into_data();
    let k = ds.num_classes();
    let mut means = vec![vec![0.0; 400]; k];
    let mut counts = vec![0usize; k];
    for i in split.indices(ds, Partition::Train) {
        let label = ds.items()[i].label;
        counts[label] += 1;
        for (m, v) in means[label].iter_mut().zip(features(i)) {
            *m += v;
        }
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= n as f64);
    }
    let test = split.indices(ds, Partition::Test);
    let correct = test
        .iter()
        .filter(|&&i| {
            let f = features(i);
            let dist = |m: &Vec<f64>| m.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            let best = (0..k).min_by(|&a, &b| dist(&means[a]).total_cmp(&dist(&means[b]))).unwrap();
            best == ds.items()[i].label
        })
        .count();
    (correct as f64 / test.len() as f64, test.len())
}

#[test]
fn corner_backgrounds_are_homogeneous_across_classes() {
    for seed in [0, 1, 2] {
        let ds = generate_shape_dataset(&SynthSpec { seed, ..SynthSpec::default() }).unwrap();
        let p = corner_homogeneity_p(&ds);
        assert!(p > 0.01, "seed {seed}: p = {p}");
    }
}

#[test]
fn linear_probe_separates_biased_crops() {
    for seed in [0, 1, 2] {
        let ds = generate_shape_dataset(&SynthSpec { seed, ..SynthSpec::default() }).unwrap();
        let bias = BiasSpec { amplitude: 0.04, pattern: BiasPattern::FixedHighFrequency, seed: seed + 1 };
        let biased = inject_class_correlated_background(&ds, &bias).unwrap();
        let (acc, _) = crop_probe_accuracy(&biased, seed);
        assert!(acc >= 0.99, "seed {seed}: probe accuracy {acc}");
    }
}

/// Corner offsets are K levels 2·amplitude/(K-1) apart: detectable, not separable.
#[test]
fn linear_probe_detects_corner_offsets() {
    for seed in [0, 1, 2] {
        let ds = generate_shape_dataset(&SynthSpec { seed, ..SynthSpec::default() }).unwrap();
        let bias = BiasSpec { amplitude: 0.04, pattern: BiasPattern::CornerOffset, seed: seed + 1 };
        let biased = inject_class_correlated_background(&ds, &bias).unwrap();
        let (acc, n) = crop_probe_accuracy(&biased, seed);
        let threshold = chance_threshold(n, ds.num_classes(), 0.99).unwrap();
        assert!(acc > threshold, "seed {seed}: probe accuracy {acc} not above {threshold}");
    }
}

#[test]
fn linear_probe_stays_in_chance_band_without_bias() {
    for seed in [0, 1, 2] {
        let ds = generate_shape_dataset(&SynthSpec { seed, ..SynthSpec::default() }).unwrap();
        let (acc, n) = crop_probe_accuracy(&ds, seed);
        let threshold = chance_threshold(n, ds.num_classes(), 0.99).unwrap();
        assert!(acc <= threshold, "seed {seed}: probe accuracy {acc} above {threshold}");
    }
}

#[test]
fn injected_change_is_bounded_and_background_only() {
    let ds = generate_shape_dataset(&SynthSpec::default()).unwrap();
    let bias = BiasSpec { amplitude: 0.04, ..BiasSpec::default() };
    let biased = inject_class_correlated_background(&ds, &bias).unwrap();
    for (a, b) in ds.items().iter().zip(biased.items()) {
        let mask = a.mask.as_ref().unwrap();
        for y in 0..a.image.height() {
            for x in 0..a.image.width() {
                let (before, after) = (a.image.get(y, x, 0), b.image.get(y, x, 0));
                if mask.get(y, x) {
                    assert_eq!(before.to_bits(), after.to_bits());
                } else {
                    assert!((after - before).abs() <= 0.04 + 1e-12);
                    assert!((0.0..=1.0).contains(&after));
                }
            }
        }
    }
    assert!(inject_class_correlated_background(&biased, &bias).is_err());
}
