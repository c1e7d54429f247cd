//! End-to-end acceptance checks, one line per criterion.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use dlstream::batch::{BatchTrainer, LabeledChunk, Strategy, StrategyKind};
use dlstream::delay::DelayModel;
use dlstream::experiment::{
    prepare_stream, preset, pretrain, run_experiment, run_options, ExperimentOutput,
    ExperimentSpec, LearnerSpec, PretrainedLearner,
};
use dlstream::harness::{
    auc_pr, auc_roc, interleaved_reference, run_stream, LearnerRef, StreamClock,
};
use dlstream::incremental::{Adwin, OnlineLearner};
use dlstream::stream::{schedule_events, RunSeed, Substream};
use rand::Rng;

type Check = Result<String, String>;

fn spec(preset_name: &str, model: &str, alpha: f64, seed: u64) -> ExperimentSpec {
    let mut s = ExperimentSpec::new(
        preset(preset_name).unwrap(),
        alpha,
        LearnerSpec::from_name(model).unwrap(),
        seed,
    )
    .unwrap();
    s.timing = false;
    s
}

fn run(preset_name: &str, model: &str, alpha: f64, seed: u64) -> ExperimentOutput {
    run_experiment(&spec(preset_name, model, alpha, seed)).unwrap()
}

fn avg(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn seed_mean(
    preset_name: &str,
    model: &str,
    alpha: f64,
    seeds: std::ops::RangeInclusive<u64>,
) -> f64 {
    avg(seeds.map(|s| run(preset_name, model, alpha, s).mean.unwrap()))
}

fn pairwise_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            wins += if si > sj {
                1.0
            } else if si == sj {
                0.5
            } else {
                0.0
            };
        }
    }
    (pairs > 0.0).then(|| wins / pairs)
}

/// Precision at each distinct threshold, weighted by the recall gained there.
fn ranked_ap(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let p = labels.iter().filter(|&&l| l).count();
    if p == 0 {
        return None;
    }
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let (mut ap, mut prev_recall) = (0.0, 0.0);
    for t in thresholds {
        let above: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
        let tp = above.iter().filter(|&&i| labels[i]).count();
        let recall = tp as f64 / p as f64;
        ap += (recall - prev_recall) * tp as f64 / above.len() as f64;
        prev_recall = recall;
    }
    Some(ap)
}

fn metric_oracles() -> Check {
    let mut rng = RunSeed::new(2024).substream(Substream::Generator);
    let mut worst: f64 = 0.0;
    for case in 0..1000 {
        let n = rng.gen_range(2..=200);
        let tied = case % 2 == 0;
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if tied {
                    rng.gen_range(0..10) as f64 / 10.0
                } else {
                    rng.gen()
                }
            })
            .collect();
        let rate: f64 = rng.gen_range(0.02..0.98);
        let labels: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < rate).collect();
        for (fast, slow) in [
            (auc_roc(&scores, &labels), pairwise_auc(&scores, &labels)),
            (auc_pr(&scores, &labels), ranked_ap(&scores, &labels)),
        ] {
            match (fast, slow) {
                (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
                (None, None) => {}
                other => return Err(format!("case {case}: definedness differs {other:?}")),
            }
        }
    }
    if worst <= 1e-12 {
        Ok(format!("max |diff| {worst:e}"))
    } else {
        Err(format!("max |diff| {worst:e} > 1e-12"))
    }
}

fn delay_zero_equivalence() -> Check {
    let mut s = spec("sea_a_desk", "ht", 0.0, 11);
    s.delay = DelayModel::Zero;
    let prepared = prepare_stream(&s).unwrap();
    let mut a = pretrain(&s, &prepared.offline).unwrap();
    let events = schedule_events(&prepared.online, &prepared.delays).unwrap();
    let delayed = run_stream(events, &prepared.plan, a.as_learner_ref(), &run_options(&s)).unwrap();
    let mut b = pretrain(&s, &prepared.offline).unwrap();
    let reference = interleaved_reference(
        &prepared.online,
        &prepared.plan,
        b.as_learner_ref(),
        s.metric,
    )
    .unwrap();
    let got: Vec<Option<u64>> = delayed
        .reports
        .iter()
        .map(|r| r.value.map(f64::to_bits))
        .collect();
    let want: Vec<Option<u64>> = reference.iter().map(|v| v.map(f64::to_bits)).collect();
    if got == want {
        Ok(format!("{} chunks bit-identical", got.len()))
    } else {
        let first = got.iter().zip(&want).position(|(a, b)| a != b);
        Err(format!(
            "sequences differ (lengths {} vs {}, first mismatch {first:?})",
            got.len(),
            want.len()
        ))
    }
}

fn table_bands() -> Check {
    let seeds = 1..=3;
    let gbdt = seed_mean("agr_a_desk", "r_gbdt", 0.0, seeds.clone());
    let ht_sea = seed_mean("sea_a_desk", "ht", 0.0, seeds.clone());
    let lr = seed_mean("hyper_f_desk", "lr", 0.0, seeds.clone());
    let lb = seed_mean("agr_a_desk", "lb_ht", 0.0, seeds.clone());
    let ht_agr = seed_mean("agr_a_desk", "ht", 0.0, seeds);
    let line = format!(
        "GBDT-R AGR_a {gbdt:.4} (>= 0.92), HT SEA_a {ht_sea:.4} (>= 0.83), LR HYPER_f {lr:.4} (>= 0.90), LB_HT {lb:.4} vs HT {ht_agr:.4} on AGR_a"
    );
    if gbdt >= 0.92 && ht_sea >= 0.83 && lr >= 0.90 && lb > ht_agr {
        Ok(line)
    } else {
        Err(line)
    }
}

/// Chunks after the change-point chunk until one reaches 95% of the mean of
/// the five chunks before it; never recovering counts as one past the end.
fn recovery_chunks(out: &ExperimentOutput) -> Vec<usize> {
    let values = out.values();
    out.change_points
        .iter()
        .map(|&cp| {
            let d = out.plan.chunk_of(cp).unwrap();
            let pre: Vec<f64> = values[d.saturating_sub(5)..d]
                .iter()
                .flatten()
                .copied()
                .collect();
            let level = 0.95 * avg(pre);
            (1..values.len() - d)
                .find(|&j| values[d + j].is_some_and(|v| v >= level))
                .unwrap_or(values.len() - d)
        })
        .collect()
}

fn drift_recovery() -> Check {
    let seeds = 1..=5u64;
    let mut gbdt_worst = 0;
    let mut ht = [0.0; 3];
    let mut hat = [0.0; 3];
    for s in seeds.clone() {
        let g = recovery_chunks(&run("agr_a_desk", "r_gbdt", 0.0, s));
        gbdt_worst = gbdt_worst.max(*g.iter().max().unwrap());
        for (acc, model) in [(&mut ht, "ht"), (&mut hat, "hat")] {
            let r = recovery_chunks(&run("agr_a_desk", model, 0.0, s));
            assert_eq!(r.len(), 3);
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v as f64 / 5.0;
            }
        }
    }
    let slower = ht.iter().zip(&hat).filter(|(a, b)| a > b).count();
    let line = format!(
        "GBDT-R worst recovery {gbdt_worst} chunks (<= 10); mean chunks HT {ht:?} vs HAT {hat:?}, HT slower on {slower}/3 (>= 2)"
    );
    if gbdt_worst <= 10 && slower >= 2 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn delay_impact() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for model in ["arf", "r_gbdt"] {
        let a0 = seed_mean("agr_g_desk", model, 0.0, 1..=3);
        let a7 = seed_mean("agr_g_desk", model, 7.0, 1..=3);
        ok &= a0 - a7 >= 0.01;
        parts.push(format!("{model} {a0:.4} -> {a7:.4}"));
    }
    let line = format!("{} (drop >= 0.01)", parts.join(", "));
    if ok {
        Ok(line)
    } else {
        Err(line)
    }
}

fn propagate_benefit() -> Check {
    let mut chunks = 0;
    let mut mean = |model: &str| {
        avg((1..=5).map(|s| {
            let out = run("rare_event", model, 0.0, s);
            chunks = out.plan.n_chunks();
            out.mean.unwrap()
        }))
    };
    let prop = mean("propagate_gbdt");
    let retrain = mean("r_gbdt");
    let line = format!("{chunks} chunks, Propagate(3) AUCPR {prop:.4} vs Retrain {retrain:.4} (ratio {:.3} >= 1.05)", prop / retrain);
    if prop >= 1.05 * retrain {
        Ok(line)
    } else {
        Err(line)
    }
}

fn adwin_behaviour() -> Check {
    let mut detected = 0;
    for trial in 0..100u64 {
        let mut rng = RunSeed::new(trial).substream(Substream::Generator);
        let mut a = Adwin::new(0.002).unwrap();
        for _ in 0..1000 {
            a.update((rng.gen::<f64>() < 0.2) as u8 as f64).unwrap();
        }
        for _ in 0..300 {
            if a.update((rng.gen::<f64>() < 0.8) as u8 as f64).unwrap() {
                detected += 1;
                break;
            }
        }
    }
    let (mut cuts, n) = (0u64, 100_000u64);
    for seed in 0..20u64 {
        let mut rng = RunSeed::new(1000 + seed).substream(Substream::Generator);
        let mut a = Adwin::new(0.002).unwrap();
        for _ in 0..n {
            a.update((rng.gen::<f64>() < 0.2) as u8 as f64).unwrap();
        }
        cuts += a.detections();
    }
    let rate = cuts as f64 / (20 * n) as f64 * 10_000.0;
    let line =
        format!("detected {detected}/100 within 300 (>= 99); {rate:.3} false cuts per 10k (<= 1)");
    if detected >= 99 && rate <= 1.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

struct Audit {
    clock: StreamClock,
    due: Vec<u64>,
    by_features: HashMap<Vec<u64>, Vec<u64>>,
    accesses: u64,
    early: u64,
}

impl Audit {
    fn new(clock: StreamClock, online: &[dlstream::Instance], delays: &[i64]) -> Self {
        let mut by_features: HashMap<Vec<u64>, Vec<u64>> = HashMap::new();
        for inst in online {
            by_features
                .entry(bits(&inst.features))
                .or_default()
                .push(inst.id);
        }
        Self {
            clock,
            due: online
                .iter()
                .zip(delays)
                .map(|(i, &d)| i.id + d as u64)
                .collect(),
            by_features,
            accesses: 0,
            early: 0,
        }
    }

    fn check(&mut self, id: u64) {
        self.accesses += 1;
        if self.clock.now() < self.due[id as usize] {
            self.early += 1;
        }
    }

    /// Duplicated feature vectors pass if any of their labels is due.
    fn check_features(&mut self, x: &[f64]) {
        let now = self.clock.now();
        self.accesses += 1;
        let ids = &self.by_features[&bits(x)];
        if !ids.iter().any(|&id| now >= self.due[id as usize]) {
            self.early += 1;
        }
    }
}

fn bits(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

struct AuditedOnline<'a> {
    inner: &'a mut dyn OnlineLearner,
    audit: Audit,
}

impl OnlineLearner for AuditedOnline<'_> {
    fn predict_proba(&self, x: &[f64]) -> dlstream::Result<f64> {
        self.inner.predict_proba(x)
    }

    fn learn_weighted(&mut self, x: &[f64], y: bool, weight: u32) -> dlstream::Result<()> {
        self.audit.check_features(x);
        self.inner.learn_weighted(x, y, weight)
    }
}

struct AuditedBatch {
    inner: Strategy,
    audit: Audit,
}

impl BatchTrainer for AuditedBatch {
    fn predict_proba(&self, x: &[f64]) -> dlstream::Result<f64> {
        self.inner.predict_proba(x)
    }

    fn step(&mut self, chunk: LabeledChunk) -> dlstream::Result<()> {
        for &id in &chunk.ids {
            self.audit.check(id);
        }
        self.inner.step(chunk)
    }

    fn retained_chunks(&self) -> usize {
        self.inner.retained_chunks()
    }
}

fn cli_bytes(dir: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_dlstream"))
        .args([
            "run",
            "--preset",
            "agr_g_desk",
            "--model",
            "r_gbdt",
            "--alpha",
            "2",
            "--seed",
            "9",
            "--out",
        ])
        .arg(dir)
        .env_remove("DLSTREAM_OUT")
        .status()
        .unwrap();
    assert!(status.success());
    std::fs::read(dir.join("chunks.csv")).unwrap()
}

fn determinism_and_integrity() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let a = cli_bytes(&tmp.path().join("a"));
    let b = cli_bytes(&tmp.path().join("b"));
    let identical = a == b && !a.is_empty();

    let mut accesses = 0;
    let mut early = 0;
    for model in ["ht", "r_gbdt"] {
        let s = spec("agr_a_desk", model, 1.0, 4);
        let prepared = prepare_stream(&s).unwrap();
        let clock = StreamClock::default();
        let audit = Audit::new(clock.clone(), &prepared.online, &prepared.delays);
        let mut opts = run_options(&s);
        opts.clock = Some(clock);
        let events = schedule_events(&prepared.online, &prepared.delays).unwrap();
        let audit = match pretrain(&s, &prepared.offline).unwrap() {
            PretrainedLearner::Incremental(mut l) => {
                let mut w = AuditedOnline {
                    inner: l.as_mut(),
                    audit,
                };
                run_stream(
                    events,
                    &prepared.plan,
                    LearnerRef::Incremental(&mut w),
                    &opts,
                )
                .unwrap();
                w.audit
            }
            PretrainedLearner::Batch(st) => {
                let mut w = AuditedBatch { inner: st, audit };
                run_stream(events, &prepared.plan, LearnerRef::Batch(&mut w), &opts).unwrap();
                w.audit
            }
        };
        accesses += audit.accesses;
        early += audit.early;
    }
    let line = format!(
        "chunks.csv byte-identical: {identical}; {early} early label accesses out of {accesses} audited"
    );
    if identical && early == 0 && accesses > 0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn buffer_bound() -> Check {
    let s = spec("agr_a_desk", "propagate_gbdt", 2.0, 6);
    assert!(matches!(
        s.learner,
        LearnerSpec::Batch {
            strategy: StrategyKind::Propagate { chunks: 3 },
            ..
        }
    ));
    let out = run_experiment(&s).unwrap();
    let retained = &out.run.retained_after_step;
    let warm = retained.get(2..).unwrap_or(&[]);
    let peak = retained.iter().copied().max().unwrap_or(0);
    let steady = !warm.is_empty() && warm.iter().all(|&r| r == 3);
    let excess = out.run.max_unlabeled_excess;
    let line = format!(
        "peak retained {peak} over {} steps, steady at 3: {steady}; max unlabeled excess {excess}, conservation violations {}",
        retained.len(),
        out.run.conservation_violations
    );
    if peak == 3 && steady && excess <= 0 && out.run.conservation_violations == 0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("metric oracle equivalence", metric_oracles),
        ("delay-zero equivalence", delay_zero_equivalence),
        ("desk-scale table bands", table_bands),
        ("drift recovery", drift_recovery),
        ("delay impact", delay_impact),
        ("rare-event propagate benefit", propagate_benefit),
        ("ADWIN behaviour", adwin_behaviour),
        ("determinism and integrity", determinism_and_integrity),
        ("buffer GC bound", buffer_bound),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("criterion {n} PASS {name}: {msg} [{secs:.1}s]"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n} FAIL {name}: {msg} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
