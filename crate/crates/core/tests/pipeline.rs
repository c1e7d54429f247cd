use std::fs;

use dlstream::batch::Strategy;
use dlstream::delay::DelayModel;
use dlstream::experiment::{
    prepare_stream, preset, pretrain, run_experiment, run_options, ExperimentSpec, LearnerSpec,
    PretrainedLearner,
};
use dlstream::harness::{run_stream, ChunkPlan, LearnerRef, RunOptions};
use dlstream::incremental::{HoeffdingTree, HoeffdingTreeConfig};
use dlstream::stream::schedule_events;
use dlstream::Instance;
use proptest::prelude::*;

fn small(name: &str, model: &str, alpha: f64, seed: u64) -> ExperimentSpec {
    let mut stream = preset(name).unwrap();
    stream.n_instances = 12_000;
    let mut s =
        ExperimentSpec::new(stream, alpha, LearnerSpec::from_name(model).unwrap(), seed).unwrap();
    s.timing = false;
    s
}

fn toy(n: usize) -> Vec<Instance> {
    (0..n as u64)
        .map(|i| {
            let x = ((i * 7919) % 101) as f64 / 101.0;
            Instance::new(i, vec![x, (i % 13) as f64], x > 0.4)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_chunk_reported_once(
        delays in prop::collection::vec(0i64..400, 300),
        sizes in prop::collection::vec(1usize..60, 1..12),
    ) {
        let total: usize = sizes.iter().sum();
        prop_assume!(total <= 300);
        let inst = toy(total);
        let plan = ChunkPlan::from_sizes(&sizes).unwrap();
        let events = schedule_events(&inst, &delays[..total]).unwrap();
        let mut tree = HoeffdingTree::new(HoeffdingTreeConfig::default(), 1).unwrap();
        let out = run_stream(events, &plan, LearnerRef::Incremental(&mut tree), &RunOptions::default()).unwrap();
        let ids: Vec<usize> = out.reports.iter().map(|r| r.chunk_id).collect();
        prop_assert_eq!(ids, (0..sizes.len()).collect::<Vec<_>>());
        let mut completion = out.completion_order.clone();
        completion.sort_unstable();
        prop_assert_eq!(completion, (0..sizes.len()).collect::<Vec<_>>());
        prop_assert_eq!(out.reports.iter().map(|r| r.n).sum::<usize>(), total);
        prop_assert_eq!(out.conservation_violations, 0);
        prop_assert!(out.max_unlabeled_excess <= 0);
        prop_assert_eq!(out.final_stats.unlabeled_features_held, 0);
    }
}

#[test]
fn chunks_complete_when_their_last_label_arrives() {
    let spec = small("agr_a_desk", "ht", 3.0, 2);
    let p = prepare_stream(&spec).unwrap();
    let out = run_experiment(&spec).unwrap();
    for r in &out.run.reports {
        let range = p.plan.range(r.chunk_id);
        let last = range
            .map(|id| id + p.delays[id as usize] as u64)
            .max()
            .unwrap();
        assert_eq!(r.completed_at, last);
    }
}

#[test]
fn longer_delays_hurt_on_drifting_data() {
    let spec = |a| {
        let mut s = small("agr_a_desk", "r_cart", a, 1);
        s.stream.n_instances = 60_000;
        s
    };
    let fast = run_experiment(&spec(0.0)).unwrap().mean.unwrap();
    let slow = run_experiment(&spec(7.0)).unwrap().mean.unwrap();
    assert!(fast > slow, "{fast} vs {slow}");
}

#[test]
fn train_every_groups_chunks() {
    let mut spec = small("sea_a_desk", "r_gbdt", 0.0, 3);
    if let LearnerSpec::Batch { train_every, .. } = &mut spec.learner {
        *train_every = 3;
    }
    let out = run_experiment(&spec).unwrap();
    assert_eq!(out.run.retained_after_step.len(), out.plan.n_chunks() / 3);
}

#[test]
fn fixed_delay_holds_back_training() {
    let mut spec = small("sea_a_desk", "propagate_cart", 0.0, 4);
    spec.delay = DelayModel::Fixed(100_000);
    let p = prepare_stream(&spec).unwrap();
    let PretrainedLearner::Batch(mut strategy) = pretrain(&spec, &p.offline).unwrap() else {
        panic!("expected a batch learner");
    };
    let events = schedule_events(&p.online, &p.delays).unwrap();
    let out = run_stream(
        events,
        &p.plan,
        LearnerRef::Batch(&mut strategy as &mut Strategy),
        &run_options(&spec),
    )
    .unwrap();
    // every label arrives after the last instance, so all predictions come from the pretrained model
    let reference = run_experiment(&{
        let mut s = spec.clone();
        s.learner = LearnerSpec::from_name("static_cart").unwrap();
        s
    })
    .unwrap();
    assert_eq!(out.reports, reference.run.reports);
}

#[test]
fn csv_delays_override_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("replay.csv");
    let mut text = String::from("f0,f1,label,delay\n");
    for i in 0..2_000u64 {
        let x = (i % 97) as f64 / 97.0;
        text.push_str(&format!(
            "{x},{},{},{}\n",
            (i % 5) as f64,
            (x > 0.5) as u8,
            i % 50
        ));
    }
    fs::write(&path, text).unwrap();
    let stream = dlstream::experiment::StreamSpec {
        name: "replay".into(),
        dataset: dlstream::experiment::DatasetSpec::Csv(path),
        n_instances: 0,
        offline_fraction: 0.25,
        chunk_mean: 100.0,
        delay_unit: 1000.0,
        metric: dlstream::harness::Metric::AucRoc,
    };
    let spec = ExperimentSpec::new(stream, 5.0, LearnerSpec::from_name("lr").unwrap(), 0).unwrap();
    let p = prepare_stream(&spec).unwrap();
    assert_eq!(p.offline.len(), 500);
    assert_eq!(p.online.len(), 1_500);
    let expected: Vec<i64> = (500..2_000).map(|i| i % 50).collect();
    assert_eq!(p.delays, expected);
    let out = run_experiment(&spec).unwrap();
    assert!(out.mean.unwrap() > 0.9);
}
