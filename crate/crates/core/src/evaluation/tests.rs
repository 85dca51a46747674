use proptest::prelude::*;

use super::*;
use crate::dataset::{AttributeSpec, Cell, Instance, Schema};
use crate::model::{Learner, LearnerConfig};

fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("c{i}")).collect()
}

fn labeled(classes: &[usize], k: usize) -> Dataset {
    let schema = Schema::new(
        vec![AttributeSpec::numeric("x"), AttributeSpec::nominal("class", names(k))],
        Some(1),
    )
    .unwrap();
    let rows = classes
        .iter()
        .enumerate()
        .map(|(i, &c)| Instance::new(vec![Cell::Number(i as f64), Cell::Category(c)]))
        .collect();
    Dataset::new("d", schema, rows).unwrap()
}

#[test]
fn diagonal_matrix_is_perfect() {
    let cm = ConfusionMatrix::from_cells(&names(3), vec![vec![4.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 7.0]]).unwrap();
    let (acc, p, r, f, _) = metrics_from_confusion(&cm);
    assert_eq!((acc, p, r, f), (1.0, 1.0, 1.0, 1.0));
}

#[test]
fn two_by_two_arithmetic() {
    let cm = ConfusionMatrix::from_cells(&names(2), vec![vec![8.0, 2.0], vec![3.0, 7.0]]).unwrap();
    let (acc, p, r, f, per) = metrics_from_confusion(&cm);
    assert_eq!(acc, 0.75);
    assert_eq!(r, 0.75);
    let (pa, pb) = (8.0 / 11.0, 7.0 / 10.0 * 10.0 / 9.0);
    assert!((p - (pa + pb) / 2.0).abs() < 1e-15);
    let fa = 2.0 * pa * 0.8 / (pa + 0.8);
    let fb = 2.0 * pb * 0.7 / (pb + 0.7);
    assert!((f - (fa + fb) / 2.0).abs() < 1e-15);
    assert_eq!(per[0].support, 10.0);
}

#[test]
fn empty_column_precision_is_zero_and_flagged() {
    let preds = vec![Scored::new(0, vec![0.9, 0.1]), Scored::new(1, vec![0.6, 0.4])];
    let report = evaluate_on(&preds, &names(2)).unwrap();
    assert_eq!(report.per_class[1].precision, 0.0);
    assert_eq!(report.per_class[1].f_measure, 0.0);
    assert_eq!(report.empty_predictions, vec!["c1".to_string()]);
    assert!(evaluate_on(&[], &names(2)).is_err());
}

#[test]
fn roc_fixture() {
    let s = |a, p: f64| Scored::new(a, vec![1.0 - p, p]);
    let preds = vec![s(1, 0.9), s(1, 0.3), s(0, 0.6), s(0, 0.1)];
    assert_eq!(class_auc(&preds, 1), Some(0.75));
    assert_eq!(roc_area(&preds, &names(2)).unwrap(), 0.75);
}

#[test]
fn roc_extremes() {
    let perfect = vec![
        Scored::new(0, vec![0.8, 0.2]),
        Scored::new(0, vec![0.7, 0.3]),
        Scored::new(1, vec![0.1, 0.9]),
    ];
    assert_eq!(roc_area(&perfect, &names(2)).unwrap(), 1.0);
    let flat = vec![Scored::new(0, vec![0.5, 0.5]), Scored::new(1, vec![0.5, 0.5])];
    assert_eq!(roc_area(&flat, &names(2)).unwrap(), 0.5);
    let one_class = vec![Scored::new(0, vec![0.5, 0.5]), Scored::new(0, vec![0.4, 0.6])];
    assert!(roc_area(&one_class, &names(2)).is_err());
}

fn brute_auc(scored: &[Scored], class: usize) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for p in scored.iter().filter(|s| s.actual == class) {
        for n in scored.iter().filter(|s| s.actual != class) {
            let w = p.weight * n.weight;
            den += w;
            num += w * match p.scores[class].partial_cmp(&n.scores[class]).unwrap() {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
        }
    }
    (den > 0.0).then(|| num / den)
}

fn scored_strategy() -> impl Strategy<Value = Vec<Scored>> {
    prop::collection::vec(
        (0usize..3, prop::collection::vec(0u8..16, 3), prop::sample::select(vec![1.0, 2.0, 0.5])),
        2..40,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .map(|(a, raw, w)| {
                let raw: Vec<f64> = raw.into_iter().map(|r| f64::from(r) + 1.0).collect();
                let sum: f64 = raw.iter().sum();
                Scored {
                    actual: a,
                    scores: raw.into_iter().map(|r| r / sum).collect(),
                    weight: w,
                }
            })
            .collect()
    })
}

fn cells_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6).prop_flat_map(|k| {
        prop::collection::vec(
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1000.0, (0u32..50).prop_map(f64::from)], k),
            k,
        )
    })
}

proptest! {
    #[test]
    fn auc_matches_pairwise(scored in scored_strategy()) {
        for c in 0..3 {
            match (class_auc(&scored, c), brute_auc(&scored, c)) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12),
                (a, b) => prop_assert_eq!(a, b),
            }
        }
    }

    #[test]
    fn auc_is_monotone_invariant(scored in scored_strategy()) {
        let transformed: Vec<Scored> = scored.iter().map(|s| Scored {
            scores: s.scores.iter().map(|x| (3.0 * x).exp() + x * x * x).collect(),
            ..s.clone()
        }).collect();
        for c in 0..3 {
            prop_assert_eq!(class_auc(&scored, c), class_auc(&transformed, c));
        }
    }

    #[test]
    fn weighted_recall_is_accuracy(cells in cells_strategy()) {
        let k = cells.len();
        let cm = ConfusionMatrix::from_cells(&names(k), cells).unwrap();
        let (acc, p, r, f, per) = metrics_from_confusion(&cm);
        prop_assert_eq!(acc, r);
        for v in [acc, p, r, f] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let total = cm.total();
        if total > 0.0 {
            let averaged: f64 = per.iter().map(|m| m.support * m.recall).sum::<f64>() / total;
            prop_assert!((averaged - acc).abs() < 1e-12);
        }
        for (c, m) in per.iter().enumerate() {
            prop_assert_eq!(m.support, cm.row_sum(c));
        }
    }

    #[test]
    fn folds_partition_and_balance(
        classes in prop::collection::vec(0usize..3, 2..80),
        k in 2usize..12,
        seed in any::<u64>(),
    ) {
        let ds = labeled(&classes, 3);
        prop_assume!(k <= ds.len());
        let folds = stratified_folds(&ds, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen: Vec<f64> = Vec::new();
        for (train, test) in &folds {
            prop_assert_eq!(train.len() + test.len(), ds.len());
            seen.extend(test.instances().iter().map(|i| i.values[0].as_number().unwrap()));
            for c in 0..3 {
                let n_c = classes.iter().filter(|&&x| x == c).count() as f64;
                let in_fold = test.instances().iter().filter(|i| ds.class_of(i) == Some(c)).count() as f64;
                prop_assert!((in_fold - n_c / k as f64).abs() < 1.0);
            }
        }
        seen.sort_by(f64::total_cmp);
        let expected: Vec<f64> = (0..ds.len()).map(|i| i as f64).collect();
        prop_assert_eq!(seen, expected);
    }
}

#[test]
fn ten_folds_of_twenty() {
    let classes: Vec<usize> = (0..20).map(|i| i % 2).collect();
    for (_, test) in stratified_folds(&labeled(&classes, 2), 10, 7).unwrap() {
        assert_eq!(test.len(), 2);
        let mut cs: Vec<_> = test.instances().iter().map(|i| test.class_of(i).unwrap()).collect();
        cs.sort();
        assert_eq!(cs, vec![0, 1]);
    }
}

#[test]
fn leave_one_out_and_errors() {
    let ds = labeled(&[0, 1, 2, 0, 1], 3);
    let folds = stratified_folds(&ds, 5, 1).unwrap();
    assert!(folds.iter().all(|(tr, te)| te.len() == 1 && tr.len() == 4));
    assert!(stratified_folds(&ds, 6, 1).is_err());
    assert!(stratified_folds(&ds, 1, 1).is_err());
    let unlabeled = Dataset::new(
        "u",
        Schema::new(vec![AttributeSpec::numeric("x")], None).unwrap(),
        vec![Instance::new(vec![Cell::Number(1.0)]); 3],
    )
    .unwrap();
    assert!(stratified_folds(&unlabeled, 2, 1).is_err());
}

#[test]
fn constant_class_cv_is_perfect() {
    let ds = labeled(&[1; 30], 3);
    for l in Learner::ALL {
        let cfg = LearnerConfig::new(l);
        let report = cross_validate(&ds, |d| cfg.train(d), 10, 3).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.roc_area, None);
    }
}

#[test]
fn cross_validation_is_deterministic() {
    let classes: Vec<usize> = (0..60).map(|i| (i / 20) % 3).collect();
    let ds = labeled(&classes, 3);
    let cfg = LearnerConfig::new(Learner::J48);
    let a = cross_validate(&ds, |d| cfg.train(d), 10, 42).unwrap();
    let b = cross_validate(&ds, |d| cfg.train(d), 10, 42).unwrap();
    assert_eq!(render_report(&a, false), render_report(&b, false));
    assert_eq!(report_to_json(&a, false).unwrap(), report_to_json(&b, false).unwrap());
    assert!(a.accuracy > 0.9);
    assert_eq!(a.evaluated_weight(), 60.0);
}

#[test]
fn report_has_all_rows_and_optimism_flag() {
    let classes: Vec<usize> = (0..30).map(|i| i % 3).collect();
    let ds = labeled(&classes, 3);
    let cfg = LearnerConfig::new(Learner::NaiveBayes);
    let report = evaluate_regime(&ds, |d| cfg.train(d), Regime::TrainingSet, 1, None).unwrap();
    let text = render_report(&report, true);
    for label in ["Accuracy", "Run time", "Precision", "Recall", "F-measure", "ROC Area"] {
        assert!(text.lines().any(|l| l.starts_with(label)), "missing {label}\n{text}");
    }
    assert!(text.contains("optimistic"));
    assert!(!render_report(&report, false).contains("Run time"));
    let json = report_to_json(&report, false).unwrap();
    assert!(json.contains("\"optimistic\": true") && !json.contains("train_seconds"));

    let split = evaluate_regime(
        &ds,
        |d| cfg.train(d),
        Regime::PercentageSplit { train_fraction: 0.67 },
        1,
        None,
    )
    .unwrap();
    assert_eq!(split.evaluated_weight(), 9.0);
    assert!(render_report(&split, false).contains("percentage split (67% train)"));
    assert!(evaluate_regime(&ds, |d| cfg.train(d), Regime::SuppliedTestSet, 1, None).is_err());
}

/// With one duplicate per row, leave-one-out J48 (no pruning, tiny leaves)
/// must recover each held-out row's class from its twin.
#[test]
fn leave_one_out_matches_brute_force() {
    let base = [(1.0, 0), (5.0, 1), (9.0, 2), (13.0, 0), (17.0, 1)];
    let schema = Schema::new(
        vec![AttributeSpec::numeric("x"), AttributeSpec::nominal("class", names(3))],
        Some(1),
    )
    .unwrap();
    let rows: Vec<Instance> = base
        .iter()
        .flat_map(|&(x, c)| vec![Instance::new(vec![Cell::Number(x), Cell::Category(c)]); 2])
        .collect();
    let ds = Dataset::new("dup", schema, rows).unwrap();
    let mut cfg = LearnerConfig::new(Learner::J48);
    cfg.j48.pruning = false;
    cfg.j48.min_leaf_weight = 1.0;
    let n = ds.len();
    let report = cross_validate(&ds, |d| cfg.train(d), n, 5).unwrap();
    // Brute force: train on all-but-one, predict the one.
    let mut expected = ConfusionMatrix::new(&names(3));
    for i in 0..n {
        let train: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let model = cfg.train(&ds.subset(&train)).unwrap();
        let inst = &ds.instances()[i];
        let p = crate::model::Classifier::predict_distribution(&model, inst).unwrap();
        expected.add(ds.class_of(inst).unwrap(), argmax(&p), 1.0);
    }
    assert_eq!(report.confusion, expected);
    assert_eq!(report.accuracy, 1.0);
}
