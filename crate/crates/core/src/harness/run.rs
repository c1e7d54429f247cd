//! The delayed-label event loop.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::ledger::{ChunkLedger, ChunkPlan, LedgerStats};
use super::metrics::Metric;
use crate::batch::{BatchTrainer, Dataset, LabeledChunk};
use crate::error::{Error, Result};
use crate::incremental::OnlineLearner;
use crate::stream::{EventKind, Instance, Payload, StreamEvent};

/// Learner under evaluation.
pub enum LearnerRef<'a> {
    Incremental(&'a mut dyn OnlineLearner),
    Batch(&'a mut dyn BatchTrainer),
}

/// Time of the event being processed, readable from inside a learner.
#[derive(Debug, Clone, Default)]
pub struct StreamClock(Arc<AtomicU64>);

impl StreamClock {
    pub fn now(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }

    fn set(&self, t: u64) {
        self.0.store(t, Ordering::SeqCst)
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub metric: Metric,
    /// Completed chunks per batch training step.
    pub train_every: usize,
    /// Measure wall-clock time; when off every time column is zero.
    pub timing: bool,
    pub clock: Option<StreamClock>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            metric: Metric::AucRoc,
            train_every: 1,
            timing: true,
            clock: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkReport {
    pub chunk_id: usize,
    pub n: usize,
    pub positives: usize,
    pub metric: Metric,
    /// `None` when the metric is undefined for the chunk.
    pub value: Option<f64>,
    /// Stream time at which the chunk's last label arrived.
    pub completed_at: u64,
    pub predict_ms: f64,
    pub train_ms: f64,
    pub gc_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOutput {
    /// Sorted by chunk id.
    pub reports: Vec<ChunkReport>,
    /// Chunk ids in completion order.
    pub completion_order: Vec<usize>,
    pub final_stats: LedgerStats,
    /// Events after which the ledger counts did not add up.
    pub conservation_violations: usize,
    /// Largest excess of held unlabeled feature vectors over pending labels.
    pub max_unlabeled_excess: i64,
    /// Labeled chunks retained by the batch learner after each step.
    pub retained_after_step: Vec<usize>,
}

#[derive(Default, Clone, Copy)]
struct Timers {
    predict: Duration,
    train: Duration,
    gc: Duration,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

struct Stopwatch(Option<Instant>);

impl Stopwatch {
    fn start(on: bool) -> Self {
        Stopwatch(on.then(Instant::now))
    }

    fn elapsed(&self) -> Duration {
        self.0.map_or(Duration::ZERO, |t| t.elapsed())
    }
}

/// Runs the event loop: predict on feature arrival, store on label arrival,
/// score each chunk once all its labels are in, and train batch learners on
/// completed chunks.
pub fn run_stream<I>(
    events: I,
    plan: &ChunkPlan,
    learner: LearnerRef<'_>,
    opts: &RunOptions,
) -> Result<RunOutput>
where
    I: IntoIterator<Item = StreamEvent>,
{
    if opts.train_every == 0 {
        return Err(Error::config("train_every must be >= 1"));
    }
    let mut ledger = ChunkLedger::new(plan.clone());
    let mut timers = vec![Timers::default(); plan.n_chunks()];
    let mut reports = Vec::new();
    let mut out = RunOutput::default();
    let mut ready: Vec<usize> = Vec::new();
    let mut learner = learner;

    for ev in events {
        if let Some(clock) = &opts.clock {
            clock.set(ev.time);
        }
        let id = ev.instance_id;
        match (ev.kind, ev.payload) {
            (EventKind::FeatureArrival, Payload::Features(x)) => {
                let chunk = plan.chunk_of(id).ok_or_else(|| {
                    Error::Integrity(format!("instance {id} is outside the chunk plan"))
                })?;
                let sw = Stopwatch::start(opts.timing);
                let p = match &learner {
                    LearnerRef::Incremental(l) => l.predict_proba(&x)?,
                    LearnerRef::Batch(b) => b.predict_proba(&x)?,
                };
                timers[chunk].predict += sw.elapsed();
                ledger.record_prediction(id, x, p)?;
            }
            (EventKind::LabelArrival, Payload::Label(y)) => {
                let receipt = ledger.record_label(id, y)?;
                let c = receipt.chunk;
                if let LearnerRef::Incremental(l) = &mut learner {
                    let x = ledger.consume_instance(id)?;
                    let sw = Stopwatch::start(opts.timing);
                    l.learn_one(&x, y)?;
                    timers[c].train += sw.elapsed();
                }
                if receipt.complete {
                    let (scores, labels) = ledger.scores(c);
                    let value = opts.metric.compute(&scores, &labels);
                    out.completion_order.push(c);
                    let mut report = ChunkReport {
                        chunk_id: c,
                        n: labels.len(),
                        positives: labels.iter().filter(|&&l| l).count(),
                        metric: opts.metric,
                        value,
                        completed_at: ev.time,
                        predict_ms: 0.0,
                        train_ms: 0.0,
                        gc_ms: 0.0,
                    };
                    match &mut learner {
                        LearnerRef::Incremental(_) => {
                            let sw = Stopwatch::start(opts.timing);
                            ledger.release(c);
                            timers[c].gc += sw.elapsed();
                        }
                        LearnerRef::Batch(b) => {
                            ready.push(c);
                            if ready.len() >= opts.train_every {
                                let sw = Stopwatch::start(opts.timing);
                                let batch = merge(ready.iter().map(|&r| ledger.take_labeled(r)));
                                timers[c].gc += sw.elapsed();
                                let sw = Stopwatch::start(opts.timing);
                                b.step(batch)?;
                                timers[c].train += sw.elapsed();
                                out.retained_after_step.push(b.retained_chunks());
                                let sw = Stopwatch::start(opts.timing);
                                for r in ready.drain(..) {
                                    ledger.release(r);
                                }
                                timers[c].gc += sw.elapsed();
                            }
                        }
                    }
                    let t = timers[c];
                    report.predict_ms = ms(t.predict);
                    report.train_ms = ms(t.train);
                    report.gc_ms = ms(t.gc);
                    reports.push(report);
                }
            }
            (kind, _) => {
                return Err(Error::Integrity(format!(
                    "{kind:?} event for instance {id} carries the wrong payload"
                )))
            }
        }
        let st = ledger.stats();
        if !st.is_conserved() {
            out.conservation_violations += 1;
        }
        out.max_unlabeled_excess = out
            .max_unlabeled_excess
            .max(st.unlabeled_features_held as i64 - st.unlabeled as i64);
    }
    reports.sort_by_key(|r| r.chunk_id);
    out.reports = reports;
    out.final_stats = ledger.stats();
    Ok(out)
}

/// Concatenates completed chunks into one training batch, keeping the id
/// of the newest chunk.
fn merge(chunks: impl Iterator<Item = LabeledChunk>) -> LabeledChunk {
    let mut merged = LabeledChunk {
        chunk_id: 0,
        ids: Vec::new(),
        data: Dataset::default(),
    };
    for c in chunks {
        merged.chunk_id = c.chunk_id;
        merged.ids.extend(c.ids);
        merged.data.x.extend(c.data.x);
        merged.data.y.extend(c.data.y);
    }
    merged
}

/// Immediate-label interleaved-chunk evaluation without any event queue:
/// each chunk is scored, then learned from, in id order.
pub fn interleaved_reference(
    instances: &[Instance],
    plan: &ChunkPlan,
    learner: LearnerRef<'_>,
    metric: Metric,
) -> Result<Vec<Option<f64>>> {
    let mut learner = learner;
    let mut values = Vec::with_capacity(plan.n_chunks());
    for c in 0..plan.n_chunks() {
        let r = plan.range(c);
        let rows = &instances[r.start as usize..r.end as usize];
        let mut scores = Vec::with_capacity(rows.len());
        match &mut learner {
            LearnerRef::Incremental(l) => {
                for inst in rows {
                    scores.push(l.predict_proba(&inst.features)?);
                    l.learn_one(&inst.features, inst.label)?;
                }
            }
            LearnerRef::Batch(b) => {
                for inst in rows {
                    scores.push(b.predict_proba(&inst.features)?);
                }
                b.step(LabeledChunk {
                    chunk_id: c,
                    ids: rows.iter().map(|i| i.id).collect(),
                    data: Dataset {
                        x: rows.iter().map(|i| i.features.clone()).collect(),
                        y: rows.iter().map(|i| i.label).collect(),
                    },
                })?;
            }
        }
        let labels: Vec<bool> = rows.iter().map(|i| i.label).collect();
        values.push(metric.compute(&scores, &labels));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::{GbdtParams, ModelSpec, Strategy, StrategyKind};
    use crate::generators::{DriftSchedule, SeaConfig, SeaGenerator, StreamGenerator};
    use crate::incremental::{HoeffdingTree, HoeffdingTreeConfig};
    use crate::stream::{schedule_events, RunSeed};

    fn sea(n: usize) -> Vec<Instance> {
        SeaGenerator::new(
            SeaConfig {
                schedule: DriftSchedule::stationary(8.0),
                noise: 0.1,
            },
            RunSeed::new(1),
        )
        .unwrap()
        .take_instances(n)
    }

    fn quiet() -> RunOptions {
        RunOptions {
            timing: false,
            ..RunOptions::default()
        }
    }

    #[test]
    fn zero_delay_matches_interleaved_reference() {
        let data = sea(5000);
        let plan = ChunkPlan::from_sizes(&[700, 1300, 1000, 1000, 1000]).unwrap();
        let events = schedule_events(&data, &vec![0; data.len()]).unwrap();
        let mut a = HoeffdingTree::new(HoeffdingTreeConfig::default(), 1).unwrap();
        let out = run_stream(events, &plan, LearnerRef::Incremental(&mut a), &quiet()).unwrap();
        let mut b = HoeffdingTree::new(HoeffdingTreeConfig::default(), 1).unwrap();
        let reference = interleaved_reference(
            &data,
            &plan,
            LearnerRef::Incremental(&mut b),
            Metric::AucRoc,
        )
        .unwrap();
        let got: Vec<_> = out.reports.iter().map(|r| r.value).collect();
        assert_eq!(got, reference);
        assert_eq!(out.conservation_violations, 0);
    }

    #[test]
    fn batch_zero_delay_matches_reference() {
        let data = sea(3000);
        let plan = ChunkPlan::from_sizes(&[1000, 1000, 1000]).unwrap();
        let spec = ModelSpec::Gbdt(GbdtParams {
            n_trees: 10,
            ..GbdtParams::default()
        });
        let mut a = Strategy::new(StrategyKind::Retrain, spec, RunSeed::new(2)).unwrap();
        let events = schedule_events(&data, &vec![0; data.len()]).unwrap();
        let out = run_stream(events, &plan, LearnerRef::Batch(&mut a), &quiet()).unwrap();
        let mut b = Strategy::new(StrategyKind::Retrain, spec, RunSeed::new(2)).unwrap();
        let reference =
            interleaved_reference(&data, &plan, LearnerRef::Batch(&mut b), Metric::AucRoc).unwrap();
        assert_eq!(
            out.reports.iter().map(|r| r.value).collect::<Vec<_>>(),
            reference
        );
    }

    #[test]
    fn reports_wait_for_last_label() {
        let data = sea(40);
        let plan = ChunkPlan::from_sizes(&[10, 10, 10, 10]).unwrap();
        let mut delays = vec![0i64; 40];
        delays[3] = 100; // chunk 0 completes last
        let events = schedule_events(&data, &delays).unwrap();
        let mut t = HoeffdingTree::new(HoeffdingTreeConfig::default(), 1).unwrap();
        let out = run_stream(events, &plan, LearnerRef::Incremental(&mut t), &quiet()).unwrap();
        assert_eq!(out.completion_order, [1, 2, 3, 0]);
        assert_eq!(out.reports[0].completed_at, 103);
        assert_eq!(
            out.reports.iter().map(|r| r.chunk_id).collect::<Vec<_>>(),
            [0, 1, 2, 3]
        );
        assert!(out
            .reports
            .iter()
            .all(|r| r.predict_ms == 0.0 && r.train_ms == 0.0));
    }

    #[test]
    fn single_instance_chunks_are_undefined() {
        let data = sea(5);
        let plan = ChunkPlan::from_sizes(&[1; 5]).unwrap();
        let events = schedule_events(&data, &[0; 5]).unwrap();
        let mut t = HoeffdingTree::new(HoeffdingTreeConfig::default(), 1).unwrap();
        let out = run_stream(events, &plan, LearnerRef::Incremental(&mut t), &quiet()).unwrap();
        assert_eq!(out.reports.len(), 5);
        assert!(out.reports.iter().all(|r| r.value.is_none()));
    }

    #[test]
    fn duplicate_label_fails_fast() {
        let data = sea(4);
        let plan = ChunkPlan::from_sizes(&[4]).unwrap();
        let mut events = schedule_events(&data, &[0; 4]).unwrap();
        let dup = events[1].clone();
        events.insert(2, dup);
        let mut t = HoeffdingTree::new(HoeffdingTreeConfig::default(), 1).unwrap();
        let err = run_stream(events, &plan, LearnerRef::Incremental(&mut t), &quiet()).unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));
    }

    #[test]
    fn propagate_window_is_bounded() {
        let data = sea(6000);
        let plan = ChunkPlan::from_sizes(&[500; 12]).unwrap();
        let mut s = Strategy::new(
            StrategyKind::Propagate { chunks: 3 },
            ModelSpec::Gbdt(GbdtParams {
                n_trees: 5,
                ..GbdtParams::default()
            }),
            RunSeed::new(3),
        )
        .unwrap();
        let delays: Vec<i64> = (0..6000).map(|i| (i % 700) as i64).collect();
        let events = schedule_events(&data, &delays).unwrap();
        let out = run_stream(events, &plan, LearnerRef::Batch(&mut s), &quiet()).unwrap();
        assert_eq!(out.retained_after_step.len(), 12);
        assert_eq!(out.retained_after_step.iter().max(), Some(&3));
        assert!(out.retained_after_step[2..].iter().all(|&r| r == 3));
        assert_eq!(out.max_unlabeled_excess, 0);
        assert_eq!(out.final_stats.consumed, 6000);
    }
}
