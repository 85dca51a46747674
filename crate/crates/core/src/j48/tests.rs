use super::*;
use crate::dataset::{AttributeSpec, Dataset, Instance, Schema};

fn nominal_rows(attrs: Vec<AttributeSpec>, rows: &[&[&str]]) -> Dataset {
    let class_index = attrs.len() - 1;
    let schema = Schema::new(attrs, Some(class_index)).unwrap();
    let instances = rows
        .iter()
        .map(|row| {
            let values = row
                .iter()
                .zip(schema.attributes())
                .map(|(v, a)| match &a.kind {
                    AttributeKind::Nominal(d) => Cell::Category(d.iter().position(|x| x == v).unwrap()),
                    AttributeKind::Numeric => Cell::Number(v.parse().unwrap()),
                    AttributeKind::Text => Cell::Text(v.to_string()),
                })
                .collect();
            Instance::new(values)
        })
        .collect();
    Dataset::new("t", schema, instances).unwrap()
}

pub(super) fn weather() -> Dataset {
    let attrs = vec![
        AttributeSpec::nominal("outlook", ["sunny", "overcast", "rainy"]),
        AttributeSpec::nominal("temperature", ["hot", "mild", "cool"]),
        AttributeSpec::nominal("humidity", ["high", "normal"]),
        AttributeSpec::nominal("windy", ["TRUE", "FALSE"]),
        AttributeSpec::nominal("play", ["yes", "no"]),
    ];
    nominal_rows(
        attrs,
        &[
            &["sunny", "hot", "high", "FALSE", "no"],
            &["sunny", "hot", "high", "TRUE", "no"],
            &["overcast", "hot", "high", "FALSE", "yes"],
            &["rainy", "mild", "high", "FALSE", "yes"],
            &["rainy", "cool", "normal", "FALSE", "yes"],
            &["rainy", "cool", "normal", "TRUE", "no"],
            &["overcast", "cool", "normal", "TRUE", "yes"],
            &["sunny", "mild", "high", "FALSE", "no"],
            &["sunny", "cool", "normal", "FALSE", "yes"],
            &["rainy", "mild", "normal", "FALSE", "yes"],
            &["sunny", "mild", "normal", "TRUE", "yes"],
            &["overcast", "mild", "high", "TRUE", "yes"],
            &["overcast", "hot", "normal", "FALSE", "yes"],
            &["rainy", "mild", "high", "TRUE", "no"],
        ],
    )
}

fn numeric_two_class(xs: &[f64], ys: &[&str]) -> Dataset {
    let schema = Schema::new(
        vec![AttributeSpec::numeric("x"), AttributeSpec::nominal("class", ["a", "b"])],
        Some(1),
    )
    .unwrap();
    let instances = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| Instance::new(vec![Cell::Number(x), Cell::Category(usize::from(y == "b"))]))
        .collect();
    Dataset::new("n", schema, instances).unwrap()
}

#[test]
fn single_class_gives_single_leaf() {
    let ds = numeric_two_class(&[1.0, 2.0, 3.0, 4.0, 5.0], &["b"; 5]);
    let model = train_tree(&ds, &J48Params::default()).unwrap();
    assert_eq!(model.root().num_leaves(), 1);
    assert!(matches!(model.root(), TreeNode::Leaf { predicted: 1, .. }));
}

#[test]
fn weather_root_is_outlook() {
    let model = train_tree(&weather(), &J48Params::default()).unwrap();
    assert_eq!(model.root().test(), Some(&SplitTest::Nominal { attribute: 0 }));
}

#[test]
fn weather_matches_weka_printout() {
    let model = train_tree(&weather(), &J48Params::default()).unwrap();
    let expected = "\
outlook = sunny
|   humidity = high: no (3.0)
|   humidity = normal: yes (2.0)
outlook = overcast: yes (4.0)
outlook = rainy
|   windy = TRUE: no (2.0)
|   windy = FALSE: yes (3.0)
";
    assert_eq!(render_text(&model), expected);
}

#[test]
fn numeric_midpoint_threshold() {
    let ds = numeric_two_class(&[1.0, 2.0, 3.0, 4.0], &["a", "a", "b", "b"]);
    let model = train_tree(&ds, &J48Params::default()).unwrap();
    assert_eq!(
        model.root().test(),
        Some(&SplitTest::Threshold {
            attribute: 0,
            threshold: 2.5
        })
    );
}

#[test]
fn training_errors_propagate() {
    let unlabeled = Dataset::new(
        "u",
        Schema::new(vec![AttributeSpec::numeric("x")], None).unwrap(),
        vec![Instance::new(vec![Cell::Number(1.0)])],
    )
    .unwrap();
    assert!(train_tree(&unlabeled, &J48Params::default()).is_err());
    let empty = numeric_two_class(&[], &[]);
    assert!(train_tree(&empty, &J48Params::default()).is_err());
    let bad = J48Params {
        confidence: 0.7,
        ..J48Params::default()
    };
    assert!(train_tree(&numeric_two_class(&[1.0], &["a"]), &bad).is_err());
}

#[test]
fn unlabeled_rows_are_dropped_and_counted() {
    let mut ds = numeric_two_class(&[1.0, 2.0, 3.0, 4.0], &["a", "a", "b", "b"]);
    let schema = ds.schema().clone();
    let mut rows = ds.instances().to_vec();
    rows.push(Instance::new(vec![Cell::Number(9.0), Cell::Missing]));
    ds = Dataset::new("n", schema, rows).unwrap();
    let model = train_tree(&ds, &J48Params::default()).unwrap();
    assert_eq!(model.dropped_unlabeled(), 1);
    assert_eq!(model.root().distribution().total(), 4.0);
}

fn three_class_schema() -> Schema {
    Schema::new(
        vec![
            AttributeSpec::numeric("Length"),
            AttributeSpec::nominal("class", ["browser using", "music playing", "trouble shooting"]),
        ],
        Some(1),
    )
    .unwrap()
}

fn dist(c: &[f64]) -> ClassDistribution {
    ClassDistribution::from_counts(c.to_vec()).unwrap()
}

fn two_leaf_model(left: &[f64], right: &[f64], weights: [f64; 2]) -> TreeModel {
    let mut parent = dist(left);
    for (i, c) in right.iter().enumerate() {
        parent.add(i, *c);
    }
    let root = TreeNode::Internal {
        test: SplitTest::Threshold {
            attribute: 0,
            threshold: 128.5,
        },
        distribution: parent,
        branch_weights: weights.to_vec(),
        children: vec![
            TreeNode::leaf(dist(left), dist(left).majority()),
            TreeNode::leaf(dist(right), dist(right).majority()),
        ],
    };
    TreeModel::from_parts(three_class_schema(), J48Params::default(), root).unwrap()
}

#[test]
fn laplace_on_pure_leaf() {
    let model = TreeModel::from_parts(
        three_class_schema(),
        J48Params::default(),
        TreeNode::leaf(dist(&[10.0, 0.0, 0.0]), 0),
    )
    .unwrap();
    let p = model
        .predict_distribution(&Instance::new(vec![Cell::Number(5.0), Cell::Missing]))
        .unwrap();
    let expected = [11.0 / 13.0, 1.0 / 13.0, 1.0 / 13.0];
    for (a, b) in p.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12);
    }
    // Same distribution regardless of the instance.
    let q = model
        .predict_distribution(&Instance::new(vec![Cell::Number(500.0), Cell::Missing]))
        .unwrap();
    assert_eq!(p, q);
}

#[test]
fn missing_value_mixes_branches() {
    let model = two_leaf_model(&[6.0, 0.0, 0.0], &[0.0, 4.0, 0.0], [0.6, 0.4]);
    let left = [7.0 / 9.0, 1.0 / 9.0, 1.0 / 9.0];
    let right = [1.0 / 7.0, 5.0 / 7.0, 1.0 / 7.0];
    let p = model
        .predict_distribution(&Instance::new(vec![Cell::Missing, Cell::Missing]))
        .unwrap();
    for i in 0..3 {
        assert!((p[i] - (0.6 * left[i] + 0.4 * right[i])).abs() < 1e-12);
    }
    let l = model
        .predict_distribution(&Instance::new(vec![Cell::Number(100.0), Cell::Missing]))
        .unwrap();
    assert!((l[0] - left[0]).abs() < 1e-12);
}

#[test]
fn predict_rejects_wrong_width() {
    let model = two_leaf_model(&[6.0, 0.0, 0.0], &[0.0, 4.0, 0.0], [0.6, 0.4]);
    assert!(model.predict_distribution(&Instance::new(vec![Cell::Missing])).is_err());
}

#[test]
fn render_single_leaf() {
    let model = TreeModel::from_parts(
        three_class_schema(),
        J48Params::default(),
        TreeNode::leaf(dist(&[12.0, 0.0, 0.0]), 0),
    )
    .unwrap();
    assert_eq!(render_text(&model), ": browser using (12.0)\n");
}

#[test]
fn render_depth_one_numeric() {
    let model = two_leaf_model(&[6.0, 0.0, 0.0], &[0.0, 3.0, 1.0], [0.6, 0.4]);
    let text = render_text(&model);
    assert_eq!(
        text,
        "Length <= 128.5: browser using (6.0)\nLength > 128.5: music playing (4.0/1.0)\n"
    );
    assert_eq!(render_text(&model), text);
    let parsed = parse_rendered(&text).unwrap();
    assert_eq!(parsed.num_leaves(), 2);
    assert_eq!(parsed.render(), text);
}

#[test]
fn rendered_weather_parses_back() {
    let model = train_tree(&weather(), &J48Params::default()).unwrap();
    let text = render_text(&model);
    let parsed = parse_rendered(&text).unwrap();
    assert_eq!(parsed.num_leaves(), model.root().num_leaves());
    assert_eq!(parsed.render(), text);
    assert!(parse_rendered("").is_err());
    assert!(parse_rendered("|   |   x = 1: a (1.0)\n").is_err());
}

#[test]
fn prune_collapses_same_class_children() {
    let model = two_leaf_model(&[5.0, 1.0, 0.0], &[4.0, 0.0, 1.0], [0.6, 0.4]);
    let pruned = prune(model.root(), 0.25);
    assert_eq!(pruned.num_leaves(), 1);
    assert!(matches!(pruned, TreeNode::Leaf { predicted: 0, .. }));
}

#[test]
fn prune_leaf_is_identity() {
    let leaf = TreeNode::leaf(dist(&[3.0, 1.0, 0.0]), 0);
    assert_eq!(prune(&leaf, 0.25), leaf);
}

#[test]
fn prune_keeps_strong_split() {
    let model = two_leaf_model(&[50.0, 0.0, 0.0], &[0.0, 50.0, 0.0], [0.5, 0.5]);
    assert_eq!(prune(model.root(), 0.25).num_leaves(), 2);
}

/// Noisy one-dimensional data: label mostly follows x but with flips.
fn noisy(n: usize, seed: u64) -> Dataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0f64).round()).collect();
    let ys: Vec<&str> = xs
        .iter()
        .map(|&x| {
            let base = x > 50.0;
            if rng.random_bool(0.2) { !base } else { base }
        })
        .map(|b| if b { "b" } else { "a" })
        .collect();
    numeric_two_class(&xs, &ys)
}

#[test]
fn lower_confidence_never_adds_leaves() {
    let unpruned = J48Params {
        pruning: false,
        min_leaf_weight: 1.0,
        ..J48Params::default()
    };
    for seed in 0..20 {
        let model = train_tree(&noisy(120, seed), &unpruned).unwrap();
        let mut prev = usize::MAX;
        for cf in [0.4, 0.25, 0.1, 0.05] {
            let leaves = prune(model.root(), cf).num_leaves();
            assert!(leaves <= prev, "seed {seed} cf {cf}: {leaves} > {prev}");
            assert!(leaves <= model.root().num_leaves());
            prev = leaves;
        }
    }
}

#[test]
fn pruning_during_growth_shrinks_noisy_trees() {
    for seed in 0..10 {
        let ds = noisy(200, seed);
        let full = train_tree(
            &ds,
            &J48Params {
                pruning: false,
                ..J48Params::default()
            },
        )
        .unwrap();
        let pruned = train_tree(&ds, &J48Params::default()).unwrap();
        assert!(pruned.root().num_leaves() <= full.root().num_leaves());
        assert!(pruned.root().num_leaves() < full.root().num_leaves(), "seed {seed}");
    }
}

#[test]
fn max_depth_limits_growth() {
    let ds = noisy(200, 3);
    let params = J48Params {
        pruning: false,
        max_depth: Some(2),
        ..J48Params::default()
    };
    assert!(train_tree(&ds, &params).unwrap().root().depth() <= 2);
    let params = J48Params {
        max_depth: Some(0),
        ..params
    };
    assert_eq!(train_tree(&ds, &params).unwrap().root().num_leaves(), 1);
}

#[test]
fn text_attributes_are_never_split() {
    let attrs = vec![
        AttributeSpec::text("Info"),
        AttributeSpec::nominal("class", ["a", "b"]),
    ];
    let ds = nominal_rows(attrs, &[&["x", "a"], &["x", "a"], &["y", "b"], &["y", "b"]]);
    let model = train_tree(&ds, &J48Params::default()).unwrap();
    assert_eq!(model.root().num_leaves(), 1);
}

#[test]
fn missing_values_during_growth() {
    let schema = Schema::new(
        vec![AttributeSpec::numeric("x"), AttributeSpec::nominal("class", ["a", "b"])],
        Some(1),
    )
    .unwrap();
    let mut rows: Vec<Instance> = (0..10)
        .map(|i| Instance::new(vec![Cell::Number(i as f64), Cell::Category(usize::from(i >= 5))]))
        .collect();
    rows.push(Instance::new(vec![Cell::Missing, Cell::Category(0)]));
    let ds = Dataset::new("m", schema, rows).unwrap();
    let model = train_tree(&ds, &J48Params::default()).unwrap();
    let TreeNode::Internal {
        test,
        branch_weights,
        children,
        ..
    } = model.root()
    else {
        panic!("expected a split");
    };
    assert_eq!(
        test,
        &SplitTest::Threshold {
            attribute: 0,
            threshold: 4.5
        }
    );
    assert_eq!(branch_weights, &vec![0.5, 0.5]);
    // The missing row went half to each side.
    assert!((children[0].distribution().total() - 5.5).abs() < 1e-12);
    assert!((children[1].distribution().total() - 5.5).abs() < 1e-12);
}
