use proptest::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};

use biaslens::protocol::critical_count;
use biaslens::{
    chance_threshold, decide_bias_flags, evaluate, split_dataset, BiasFlag, ConditionResult, EvalMetrics,
    ImageTensor, Item, LabeledDataset, Partition, TransformSpec,
};

fn condition(transform: TransformSpec, accuracy: f64) -> ConditionResult {
    let metrics = EvalMetrics {
        confusion: vec![vec![1, 0], vec![0, 1]],
        accuracy,
        macro_precision: accuracy,
        macro_recall: accuracy,
        macro_f1: accuracy,
        undefined_precision: Vec::new(),
        undefined_recall: Vec::new(),
    };
    ConditionResult::new(transform, metrics, Vec::new())
}

fn audit_rows(original: f64, others: &[f64]) -> Vec<ConditionResult> {
    let specs = ["wavelet:haar", "median:5", "median:5+wavelet:haar", "fourier", "wavelet:db2"];
    let mut rows = vec![condition(TransformSpec::Identity, original)];
    rows.extend(
        others
            .iter()
            .zip(specs.iter().cycle())
            .map(|(&a, s)| condition(s.parse().unwrap(), a)),
    );
    rows
}

fn flags(rows: &[ConditionResult]) -> Vec<BiasFlag> {
    rows.iter().map(|c| c.flag).collect()
}

fn dataset(counts: &[usize]) -> LabeledDataset {
    let pixel = ImageTensor::filled(1, 1, 1, 0.5).unwrap();
    let names: Vec<String> = (0..counts.len()).map(|c| format!("class{c}")).collect();
    let items = counts
        .iter()
        .enumerate()
        .flat_map(|(label, &n)| {
            let pixel = pixel.clone();
            (0..n).map(move |i| Item {
                id: format!("class{label}/{i:04}.png"),
                image: pixel.clone(),
                label,
                mask: None,
            })
        })
        .collect();
    LabeledDataset::new(names, items).unwrap()
}

#[test]
fn exact_threshold_is_not_monotone_in_n() {
    // Two-class, 99%: 7 trials need 7 hits, 8 trials need 8.
    assert_eq!(chance_threshold(7, 2, 0.99).unwrap(), 6.0 / 7.0);
    assert_eq!(chance_threshold(8, 2, 0.99).unwrap(), 7.0 / 8.0);
}

#[test]
fn threshold_trends_down_towards_chance() {
    for k in [2, 5, 10, 28] {
        let chance = 1.0 / k as f64;
        let t: Vec<f64> = [10, 100, 1_000, 10_000]
            .iter()
            .map(|&n| chance_threshold(n, k, 0.99).unwrap())
            .collect();
        assert!(t.windows(2).all(|w| w[1] < w[0]), "{k}: {t:?}");
        assert!(t[3] > chance);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn raising_accuracy_never_clears_a_flag(
        original in 0.0f64..=1.0,
        others in prop::collection::vec(0.0f64..=1.0, 1..6),
        which in any::<prop::sample::Index>(),
        bump in 0.0f64..=1.0,
        tol in 0.0f64..10.0,
    ) {
        let mut before = audit_rows(original, &others);
        decide_bias_flags(&mut before, tol, false).unwrap();
        let i = 1 + which.index(others.len());
        let mut raised = others.clone();
        raised[i - 1] = (raised[i - 1] + bump).min(1.0);
        let mut after = audit_rows(original, &raised);
        decide_bias_flags(&mut after, tol, false).unwrap();
        if before[i].flag == BiasFlag::BiasIndicated {
            prop_assert_eq!(after[i].flag, BiasFlag::BiasIndicated);
        }
    }

    #[test]
    fn widening_tolerance_never_clears_a_flag(
        original in 0.0f64..=1.0,
        others in prop::collection::vec(0.0f64..=1.0, 1..6),
        tol in 0.0f64..10.0,
        extra in 0.0f64..10.0,
    ) {
        let mut narrow = audit_rows(original, &others);
        decide_bias_flags(&mut narrow, tol, false).unwrap();
        let mut wide = audit_rows(original, &others);
        decide_bias_flags(&mut wide, tol + extra, false).unwrap();
        for (a, b) in narrow.iter().zip(&wide) {
            if a.flag == BiasFlag::BiasIndicated {
                prop_assert_eq!(b.flag, BiasFlag::BiasIndicated);
            }
        }
    }

    #[test]
    fn identity_and_fourier_are_excluded(
        original in 0.0f64..=1.0,
        others in prop::collection::vec(0.0f64..=1.0, 1..6),
    ) {
        let mut rows = audit_rows(original, &others);
        decide_bias_flags(&mut rows, 2.0, false).unwrap();
        let f = flags(&rows);
        prop_assert_eq!(rows.iter().filter(|c| c.transform.is_identity()).count(), 1);
        prop_assert_eq!(f[0], BiasFlag::ExcludedFromRule);
        for c in &rows[1..] {
            prop_assert_eq!(c.flag == BiasFlag::ExcludedFromRule, c.transform.involves_fourier());
        }
    }

    #[test]
    fn threshold_rises_with_confidence(n in 1usize..400, k in 2usize..30, a in 0.5f64..0.999, b in 0.5f64..0.999) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(chance_threshold(n, k, lo).unwrap() <= chance_threshold(n, k, hi).unwrap());
    }

    /// One more trial raises the critical count by at most one.
    #[test]
    fn critical_count_grows_at_most_by_one(n in 1usize..400, k in 2usize..30, conf in 0.5f64..0.999) {
        let a = critical_count(n, k, conf).unwrap();
        let b = critical_count(n + 1, k, conf).unwrap();
        prop_assert!(b >= a && b <= a + 1);
    }

    #[test]
    fn critical_count_matches_statrs_tail(n in 1u64..2_000, k in 2usize..30, conf in prop::sample::select(vec![0.9, 0.95, 0.99, 0.999])) {
        let dist = Binomial::new(1.0 / k as f64, n).unwrap();
        // sf(c - 1) = P[X >= c].
        let tail = |c: u64| if c == 0 { 1.0 } else { dist.sf(c - 1) };
        let crit = critical_count(n as usize, k, conf).unwrap() as u64;
        let alpha = 1.0 - conf;
        prop_assert!(tail(crit) <= alpha + 1e-12);
        if crit > 0 {
            prop_assert!(tail(crit - 1) > alpha - 1e-12);
        }
    }

    #[test]
    fn split_is_a_stratified_partition(
        counts in prop::collection::vec(7usize..40, 2..6),
        seed in any::<u64>(),
    ) {
        let ds = dataset(&counts);
        let fractions = [0.70, 0.15, 0.15];
        let split = split_dataset(&ds, fractions, seed).unwrap();
        prop_assert_eq!(split.assignment.len(), ds.len());
        let parts = [Partition::Train, Partition::Val, Partition::Test];
        let total: usize = parts.iter().map(|&p| split.indices(&ds, p).len()).sum();
        prop_assert_eq!(total, ds.len());
        for (label, &n) in counts.iter().enumerate() {
            let in_part = |p| split.indices(&ds, p).iter().filter(|&&i| ds.items()[i].label == label).count();
            let floor = |f: f64| (n as f64 * f + 1e-9).floor() as usize;
            prop_assert_eq!(in_part(Partition::Val), floor(0.15));
            prop_assert_eq!(in_part(Partition::Test), floor(0.15));
            prop_assert!(in_part(Partition::Train) >= 1);
        }
        prop_assert_eq!(split_dataset(&ds, fractions, seed).unwrap(), split);
    }

    #[test]
    fn metrics_ignore_pair_order(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..50),
        rotate in 0usize..50,
    ) {
        let (p, l): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let mut shuffled = pairs.clone();
        shuffled.rotate_left(rotate % pairs.len());
        shuffled.reverse();
        let (ps, ls): (Vec<usize>, Vec<usize>) = shuffled.into_iter().unzip();
        prop_assert_eq!(evaluate(&p, &l, 4).unwrap(), evaluate(&ps, &ls, 4).unwrap());
    }

    #[test]
    fn relabeling_conjugates_the_confusion(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..50),
        perm in Just((0usize..4).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let (p, l): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let a = evaluate(&p, &l, 4).unwrap();
        let pp: Vec<usize> = p.iter().map(|&c| perm[c]).collect();
        let lp: Vec<usize> = l.iter().map(|&c| perm[c]).collect();
        let b = evaluate(&pp, &lp, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                prop_assert_eq!(a.confusion[i][j], b.confusion[perm[i]][perm[j]]);
            }
        }
        prop_assert_eq!(a.accuracy, b.accuracy);
        prop_assert!((a.macro_precision - b.macro_precision).abs() < 1e-12);
        prop_assert!((a.macro_recall - b.macro_recall).abs() < 1e-12);
        prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_is_one_only_for_perfect_coverage(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..40)) {
        let (p, l): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
        let m = evaluate(&p, &l, 3).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.macro_f1));
        let diagonal = p == l;
        let covered = (0..3).all(|c| l.contains(&c));
        prop_assert_eq!(m.macro_f1 == 1.0, diagonal && covered);
        let trace: u64 = (0..3).map(|i| m.confusion[i][i]).sum();
        prop_assert_eq!(m.accuracy, trace as f64 / p.len() as f64);
    }
}
