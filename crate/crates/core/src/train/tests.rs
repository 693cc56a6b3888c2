use super::*;
use crate::data::stratified_kfold;
use crate::graph::{generators, operator_bank, Graph, OperatorKind};
use crate::model::Readout;
use crate::nn::Parameters;

fn precompute(g: &Graph, label: usize, cfg: &SpinConfig) -> PrecomputedGraph {
    PrecomputedGraph {
        bank: operator_bank(g, cfg.operator, cfg.r),
        label,
    }
}

fn small_cfg() -> SpinConfig {
    SpinConfig {
        r: 2,
        operator: OperatorKind::NormalizedPlusAdjacency,
        input_dim: 1,
        hidden_dim: 8,
        num_classes: 2,
        ..SpinConfig::default()
    }
}

fn memorization_set(cfg: &SpinConfig) -> Vec<PrecomputedGraph> {
    let a = precompute(&generators::path(5), 0, cfg);
    let b = precompute(&generators::star(4), 1, cfg);
    (0..8).map(|i| if i % 2 == 0 { a.clone() } else { b.clone() }).collect()
}

#[test]
fn memorizes_two_graphs() {
    let cfg = small_cfg();
    let set = memorization_set(&cfg);
    let tc = TrainConfig {
        batch_size: 4,
        learning_rate: 1e-2,
        max_epochs: 50,
        patience: 50,
        ..TrainConfig::default()
    };
    let params = SpinParams::init(&cfg, &mut rng_from_seed(1));
    let out = train_model(&cfg, params, &set, &[], &tc).unwrap();
    assert_eq!(evaluate(&out.params, &cfg, &set, false).unwrap().accuracy, 1.0);
    let first = out.curve[0].train_loss;
    let best_early = out.curve[..10]
        .iter()
        .map(|e| e.train_loss)
        .fold(f64::INFINITY, f64::min);
    assert!(best_early < first);
}

#[test]
fn patience_one_with_flat_validation_stops_after_two_epochs() {
    let cfg = small_cfg();
    let set = memorization_set(&cfg);
    let g = generators::cycle(4);
    // the same graph under both labels: accuracy is 0.5 whatever the parameters
    let val = vec![precompute(&g, 0, &cfg), precompute(&g, 1, &cfg)];
    let tc = TrainConfig {
        patience: 1,
        max_epochs: 30,
        ..TrainConfig::default()
    };
    let out = train_model(&cfg, SpinParams::init(&cfg, &mut rng_from_seed(2)), &set, &val, &tc).unwrap();
    assert_eq!(out.curve.len(), 2);
    assert_eq!(out.best_epoch, 1);
    assert_eq!(out.best_val_accuracy, 0.5);
}

#[test]
fn seeded_runs_are_identical() {
    let cfg = SpinConfig {
        dropout: 0.2,
        ..small_cfg()
    };
    let set = memorization_set(&cfg);
    let tc = TrainConfig {
        batch_size: 3,
        max_epochs: 5,
        seed: 17,
        ..TrainConfig::default()
    };
    let run = || {
        let params = SpinParams::init(&cfg, &mut rng_from_seed(3));
        train_model(&cfg, params, &set, &set[..2], &tc).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.params, b.params);
}

#[test]
fn returned_parameters_score_the_best_validation() {
    let cfg = small_cfg();
    let set = memorization_set(&cfg);
    let val = vec![
        precompute(&generators::path(4), 0, &cfg),
        precompute(&generators::star(5), 1, &cfg),
        precompute(&generators::cycle(5), 0, &cfg),
    ];
    let tc = TrainConfig {
        batch_size: 2,
        learning_rate: 5e-3,
        max_epochs: 25,
        patience: 25,
        ..TrainConfig::default()
    };
    let out = train_model(&cfg, SpinParams::init(&cfg, &mut rng_from_seed(4)), &set, &val, &tc).unwrap();
    let again = evaluate(&out.params, &cfg, &val, false).unwrap();
    assert_eq!(again.accuracy, out.best_val_accuracy);
    assert!(out.curve.iter().all(|e| e.val_accuracy <= out.best_val_accuracy));
    assert_eq!(again, evaluate(&out.params, &cfg, &val, false).unwrap());
}

#[test]
fn minibatch_gradient_is_mean_of_graph_gradients() {
    let cfg = small_cfg();
    let graphs: Vec<PrecomputedGraph> = (3..8).map(|n| precompute(&generators::cycle(n), n % 2, &cfg)).collect();
    let params = SpinParams::init(&cfg, &mut rng_from_seed(5));
    let refs: Vec<&PrecomputedGraph> = graphs.iter().collect();
    let (loss, batch) = batch_gradient(&params, &cfg, &refs, None);
    let mut sum = params.zero_gradients();
    let mut loss_sum = 0.0;
    for g in &graphs {
        let (l, grad) = graph_gradient(&params, &cfg, g, None);
        loss_sum += l;
        sum.accumulate(&grad);
    }
    sum.scale(1.0 / graphs.len() as f64);
    assert!((loss - loss_sum / graphs.len() as f64).abs() < 1e-10);
    for (a, b) in batch.tensors().iter().zip(sum.tensors()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn huge_learning_rate_reports_non_finite_loss() {
    let cfg = small_cfg();
    let set = memorization_set(&cfg);
    let tc = TrainConfig {
        learning_rate: 1e250,
        batch_size: 2,
        max_epochs: 20,
        ..TrainConfig::default()
    };
    let err = train_model(&cfg, SpinParams::init(&cfg, &mut rng_from_seed(6)), &set, &[], &tc).unwrap_err();
    assert!(matches!(err, TrainError::NonFiniteLoss { .. }));
    assert!(err.to_string().contains("smaller"));
}

#[test]
fn mismatched_inputs_and_configs_are_rejected() {
    let cfg = small_cfg();
    let short = SpinConfig { r: 0, ..cfg.clone() };
    let set = vec![precompute(&generators::path(3), 0, &short)];
    let params = SpinParams::init(&cfg, &mut rng_from_seed(0));
    assert!(matches!(
        train_model(&cfg, params.clone(), &set, &[], &TrainConfig::default()),
        Err(TrainError::Mismatch { .. })
    ));
    let bad = TrainConfig {
        batch_size: 0,
        ..TrainConfig::default()
    };
    assert!(matches!(
        train_model(&cfg, params.clone(), &set, &[], &bad),
        Err(TrainError::InvalidConfig(_))
    ));
    let three = SpinConfig {
        num_classes: 3,
        ..cfg.clone()
    };
    let p3 = SpinParams::init(&three, &mut rng_from_seed(0));
    let full = memorization_set(&three);
    assert_eq!(evaluate(&p3, &three, &full, true), Err(TrainError::AurocMulticlass(3)));
}

#[test]
fn perfect_scores_give_unit_auroc() {
    let cfg = small_cfg();
    let set = memorization_set(&cfg);
    let tc = TrainConfig {
        batch_size: 4,
        learning_rate: 1e-2,
        max_epochs: 60,
        patience: 60,
        ..TrainConfig::default()
    };
    let out = train_model(&cfg, SpinParams::init(&cfg, &mut rng_from_seed(1)), &set, &[], &tc).unwrap();
    let m = evaluate(&out.params, &cfg, &set, true).unwrap();
    assert_eq!(m.accuracy, 1.0);
    assert_eq!(m.auroc, Some(1.0));
}

/// Graphs of 4 or 7 nodes from several families; the class is the node-count
/// parity, which the sum readout of branch 0 separates linearly.
fn parity_dataset(cfg: &SpinConfig) -> Vec<PrecomputedGraph> {
    let mut out = Vec::new();
    for n in [4, 7] {
        for g in [
            generators::path(n),
            generators::cycle(n),
            generators::star(n - 1),
            generators::complete(n),
        ] {
            out.push(precompute(&g, n % 2, cfg));
        }
        for seed in 0..16 {
            let g = generators::erdos_renyi(n, 0.5, &mut rng_from_seed(seed * 10 + n as u64));
            out.push(precompute(&g, n % 2, cfg));
        }
    }
    out
}

#[test]
fn cross_validation_separates_node_count_parity() {
    let cfg = SpinConfig {
        r: 0,
        operator: OperatorKind::Adjacency,
        input_dim: 1,
        hidden_dim: 16,
        attention: false,
        readout: Readout::Sum,
        num_classes: 2,
        ..SpinConfig::default()
    };
    let graphs = parity_dataset(&cfg);
    let labels: Vec<usize> = graphs.iter().map(|g| g.label).collect();
    let plan = stratified_kfold(&labels, 5, 11).unwrap();
    let tc = TrainConfig {
        batch_size: 8,
        learning_rate: 2e-2,
        max_epochs: 400,
        patience: 60,
        repeats_per_fold: 3,
        seed: 5,
        ..TrainConfig::default()
    };
    let res = cross_validate(&graphs, &plan, &cfg, &tc, None, true).unwrap();
    assert_eq!(res.trainings, 15);
    assert_eq!(res.curves.len(), 15);
    assert_eq!(res.mean_accuracy, 1.0, "{}", res.summary());
    assert_eq!(res.std_accuracy, 0.0);
    assert!(res.to_csv().starts_with("fold,repeat,accuracy,auroc\n"));
    assert_eq!(res.to_csv().lines().count(), 16);
}
