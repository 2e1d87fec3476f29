//! Audits a synthetic biased/unbiased pair and prints the per-condition
//! accuracies. Arguments are `key=value` overrides, e.g.
//! `cargo run --example synthetic_audit -- seed=3 epochs=20 noise=0.08`.

use std::collections::HashMap;
use std::time::Instant;

use biaslens::{
    generate_shape_dataset, inject_class_correlated_background, run_transform_audit, AuditOptions, BiasPattern,
    BiasSpec, BlockSpec, CropSpec, ModelConfig, SynthSpec, TrainConfig, TransformSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: HashMap<String, String> = std::env::args()
        .skip(1)
        .filter_map(|a| a.split_once('=').map(|(k, v)| (k.to_owned(), v.to_owned())))
        .collect();
    let get = |k: &str, d: f64| args.get(k).map_or(d, |v| v.parse().expect("numeric argument"));
    let transforms = args
        .get("transforms")
        .map_or("wavelet:haar:approx,median:5,median:5+wavelet:haar:approx", String::as_str);
    let seed = get("seed", 0.0) as u64;

    let mut spec = SynthSpec {
        seed,
        ..SynthSpec::default()
    };
    spec.background.std = get("noise", spec.background.std);
    spec.background.mean = get("mean", spec.background.mean);
    spec.ink.contrast = get("contrast", spec.ink.contrast);
    spec.ink.stroke = get("stroke", spec.ink.stroke);
    spec.ink.min_radius = get("rmin", spec.ink.min_radius);
    spec.ink.max_radius = get("rmax", spec.ink.max_radius);
    spec.ink.max_shift = get("shift", spec.ink.max_shift);
    spec.ink.max_rotation_deg = get("rot", spec.ink.max_rotation_deg);
    let pattern = if get("corner_offset", 0.0) > 0.0 {
        BiasPattern::CornerOffset
    } else {
        BiasPattern::FixedHighFrequency
    };
    let bias = BiasSpec {
        amplitude: get("amplitude", 0.04),
        pattern,
        seed: seed + 1,
    };
    let width = get("width", 8.0) as usize;
    let blocks = get("blocks", 3.0) as usize;
    let mc = ModelConfig {
        input_h: 64,
        input_w: 64,
        input_c: 1,
        blocks: (0..blocks)
            .map(|i| BlockSpec { convs: 1, filters: width << i.min(1) })
            .collect(),
        dense_widths: vec![get("dense", 32.0) as usize],
        num_classes: spec.num_classes,
    };
    let crop_mc = ModelConfig {
        input_h: 20,
        input_w: 20,
        blocks: vec![BlockSpec { convs: 1, filters: width }, BlockSpec { convs: 1, filters: 2 * width }],
        ..mc.clone()
    };
    let tc = TrainConfig {
        epochs: get("epochs", 40.0) as usize,
        learning_rate: get("lr", 1e-3),
        batch_size: get("batch", 16.0) as usize,
        seed: seed + 2,
        ..TrainConfig::default()
    };
    let transforms = TransformSpec::parse_list(transforms)?;
    let opts = AuditOptions {
        split_seed: seed + 3,
        model_seed: seed + 4,
        ..AuditOptions::default()
    };

    let unbiased = generate_shape_dataset(&spec)?;
    let biased = inject_class_correlated_background(&unbiased, &bias)?;
    for (name, ds) in [("unbiased", &unbiased), ("biased", &biased)] {
        let t0 = Instant::now();
        let mut report = run_transform_audit(ds, &transforms, &mc, &tc, &opts)?;
        report.attach_crop_probe(ds, CropSpec::default(), &crop_mc, &tc, 0.99)?;
        print!("{name:>9}:");
        for c in &report.conditions {
            print!(" {}={:.3}({})", c.name, c.accuracy, &c.flag.as_str()[..2]);
        }
        if get("verbose", 0.0) > 0.0 {
            for c in &report.conditions {
                let losses: Vec<String> = c.history.iter().map(|h| format!("{:.2}/{:.2}", h.train_loss, h.train_accuracy)).collect();
                println!("  {}: {}", c.name, losses.join(" "));
            }
        }
        let p = report.crop_probe.as_ref().expect("probe attached");
        println!(
            " crop={:.3}/{:.3}({}) [{:.1}s]",
            p.accuracy.unwrap_or(f64::NAN),
            p.threshold.unwrap_or(f64::NAN),
            &p.flag.as_str()[..2],
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
