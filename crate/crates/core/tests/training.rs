use kgalign_core::embedding::LossKind;
use kgalign_core::evaluation::{cross_validate, evaluate, CandidateScope};
use kgalign_core::kg::make_folds;
use kgalign_core::synthetic::{power_law_pair, SyntheticConfig};
use kgalign_core::training::{train, Interaction, ModelKind, OptimizerKind, RunConfig, SelfTrainConfig};
use kgalign_core::{DatasetBundle, Error};

fn bundle(n: usize, attrs: usize, seed: u64) -> DatasetBundle {
    let p = power_law_pair(&SyntheticConfig {
        entities: n,
        avg_degree: 5.0,
        attributes_per_entity: attrs,
        seed,
        ..SyntheticConfig::default()
    });
    let folds = make_folds(&p.links, seed).unwrap();
    DatasetBundle {
        kg1: p.kg1,
        kg2: p.kg2,
        links: p.links,
        folds: Some(folds),
    }
}

fn quick(epochs: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.training.max_epochs = epochs;
    cfg.training.patience = usize::MAX;
    cfg
}

fn test_hits1(b: &DatasetBundle, cfg: &RunConfig) -> f64 {
    let fold = &b.folds.as_ref().unwrap()[0];
    let out = train(b, fold, &cfg.training, cfg.self_training.as_ref()).unwrap();
    let (rep, _) = evaluate(&out.space, b, &fold.test, CandidateScope::Test, cfg).unwrap();
    rep.rank.hits[&1]
}

#[test]
fn every_mode_beats_chance() {
    let b = bundle(100, 2, 3);
    let modes: Vec<(&str, Box<dyn Fn(&mut RunConfig)>)> = vec![
        ("sharing", Box::new(|_| {})),
        ("calibration", Box::new(|c| c.training.interaction = Interaction::Calibration)),
        ("transformation", Box::new(|c| c.training.interaction = Interaction::Transformation)),
        ("swapping", Box::new(|c| c.training.interaction = Interaction::Swapping)),
        ("path", Box::new(|c| c.training.model = ModelKind::Path)),
        ("gcn", Box::new(|c| {
            c.training.model = ModelKind::Gcn;
            c.training.interaction = Interaction::Calibration;
        })),
        ("logistic", Box::new(|c| c.training.loss.kind = LossKind::Logistic)),
        ("limit", Box::new(|c| c.training.loss.kind = LossKind::Limit)),
        ("sgd", Box::new(|c| {
            c.training.optimizer = OptimizerKind::Sgd;
            c.training.learning_rate = 0.01;
        })),
        ("attributes+literals", Box::new(|c| {
            c.training.attributes = true;
            c.training.literals = true;
        })),
        ("self-training", Box::new(|c| c.self_training = Some(SelfTrainConfig::default()))),
    ];
    for (name, f) in modes {
        let mut cfg = quick(300);
        f(&mut cfg);
        let h = test_hits1(&b, &cfg);
        // 70 test candidates: chance is about 0.014.
        assert!(h > 0.1, "{name}: Hits@1 {h}");
    }
}

#[test]
fn identical_seeds_give_identical_tables() {
    let b = bundle(80, 1, 5);
    let fold = &b.folds.as_ref().unwrap()[1];
    let mut cfg = quick(60);
    cfg.training.attributes = true;
    cfg.training.literals = true;
    cfg.self_training = Some(SelfTrainConfig {
        start_epoch: 20,
        ..SelfTrainConfig::default()
    });
    let run = || train(&b, fold, &cfg.training, cfg.self_training.as_ref()).unwrap();
    let (a, c) = (run(), run());
    assert_eq!(a.space.entities.as_slice(), c.space.entities.as_slice());
    assert_eq!(a.space.relations.as_slice(), c.space.relations.as_slice());
    assert_eq!(a.log.to_csv(), c.log.to_csv());
    assert_eq!(a.augmented, c.augmented);
}

#[test]
fn early_stop_keeps_best_checkpoint() {
    let b = bundle(100, 0, 3);
    let fold = &b.folds.as_ref().unwrap()[0];
    let mut cfg = RunConfig::default();
    cfg.training.max_epochs = 400;
    let out = train(&b, fold, &cfg.training, None).unwrap();
    let checks: Vec<(usize, f64)> = out.log.checks().collect();
    assert!(checks.iter().all(|(e, _)| e % 10 == 0));
    let best = out.best_val_hits1.unwrap();
    assert!(checks.iter().all(|&(_, h)| h <= best));
    if out.stopped_at < 400 {
        // Stopped at the first check below the best, never before.
        let (last_epoch, last) = *checks.last().unwrap();
        assert_eq!(last_epoch, out.stopped_at);
        assert!(last < best);
        let prefix = &checks[..checks.len() - 1];
        let mut running = f64::NEG_INFINITY;
        for &(_, h) in prefix {
            assert!(h >= running);
            running = h;
        }
    }
    assert!(out.best_epoch <= out.stopped_at);
}

#[test]
fn zero_epochs_return_initialization() {
    let b = bundle(60, 0, 1);
    let fold = &b.folds.as_ref().unwrap()[0];
    let cfg = quick(0);
    let out = train(&b, fold, &cfg.training, None).unwrap();
    assert!(out.log.rows.is_empty());
    assert!(out.space.max_entity_norm_error() < 1e-12);
}

#[test]
fn exploding_updates_report_divergence() {
    let b = bundle(60, 0, 1);
    let fold = &b.folds.as_ref().unwrap()[0];
    let mut cfg = quick(50);
    cfg.training.optimizer = OptimizerKind::Sgd;
    cfg.training.normalize = false;
    cfg.training.learning_rate = f64::MAX;
    let err = train(&b, fold, &cfg.training, None).unwrap_err();
    assert!(matches!(err, Error::Diverged { .. }), "{err}");
}

#[test]
fn cross_validation_reports_five_folds() {
    let b = bundle(60, 0, 2);
    let cfg = quick(20);
    let cv = cross_validate(&b, &cfg, CandidateScope::Test).unwrap();
    assert_eq!(cv.folds.len(), 5);
    let csv = cv.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 5 + 2);
    assert!(lines[6].starts_with("mean,"));
    assert!(lines[7].starts_with("std,"));
}

#[test]
fn failing_fold_is_named() {
    let mut b = bundle(60, 0, 2);
    // Break fold 3's test set with an unknown entity.
    let folds = b.folds.as_mut().unwrap();
    let mut pairs = folds[2].test.pairs().to_vec();
    pairs.push(("kg1/missing".into(), "kg2/missing".into()));
    folds[2].test = pairs.into_iter().collect();
    let err = cross_validate(&b, &quick(5), CandidateScope::Test).unwrap_err();
    assert!(matches!(err, Error::Fold { fold: 3, .. }), "{err}");
}
