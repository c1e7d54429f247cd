//! Experiment configuration files.
//!
//! A config is a TOML document whose keys are read by dotted path:
//!
//! ```toml
//! [stream]
//! preset = "agr_a_desk"      # or: csv = "data.csv"
//! instances = 50000          # optional overrides of the preset
//! offline_fraction = 0.1
//! chunk_mean = 1000
//!
//! [delay]
//! alpha = 2.0                # Poisson mean alpha * unit
//! unit = 1000
//!
//! [model]
//! name = "r_gbdt"
//! n_trees = 50               # any hyperparameter of the model
//!
//! [run]
//! seed = 7
//! metric = "AUCROC"
//! timing = false
//!
//! [tune]
//! trials = 0
//!
//! [sweep]                    # sweep only; each list overrides one field
//! presets = ["agr_a_desk", "sea_a_desk"]
//! models = ["ht", "r_gbdt"]
//! delay_factors = [0, 1, 7]
//! seeds = [1, 2, 3]
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dlstream::delay::DelayModel;
use dlstream::experiment::{preset, DatasetSpec, ExperimentSpec, LearnerSpec, StreamSpec};
use dlstream::harness::Metric;
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum DelayKind {
    Poisson,
    Zero,
    Fixed(u64),
    /// Separate Poisson factors for positives and negatives.
    ByClass {
        positive: f64,
        negative: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub presets: Vec<String>,
    pub models: Vec<String>,
    pub delay_factors: Vec<f64>,
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub preset: Option<String>,
    pub csv: Option<PathBuf>,
    pub name: Option<String>,
    pub instances: Option<usize>,
    pub offline_fraction: Option<f64>,
    pub chunk_mean: Option<f64>,
    pub delay: DelayKind,
    pub alpha: f64,
    pub unit: Option<f64>,
    pub model: String,
    /// Hyperparameter overrides in file order.
    pub params: Vec<(String, f64)>,
    pub seed: u64,
    pub metric: Option<Metric>,
    pub timing: bool,
    pub trials: usize,
    pub sweep: Option<Sweep>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            preset: None,
            csv: None,
            name: None,
            instances: None,
            offline_fraction: None,
            chunk_mean: None,
            delay: DelayKind::Poisson,
            alpha: 0.0,
            unit: None,
            model: "ht".to_string(),
            params: Vec::new(),
            seed: 0,
            metric: None,
            timing: false,
            trials: 0,
            sweep: None,
        }
    }
}

struct Reader<'a> {
    section: &'a str,
    table: &'a Table,
}

impl<'a> Reader<'a> {
    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.section)
    }

    fn get(&self, k: &str) -> Option<&'a Value> {
        self.table.get(k)
    }

    fn float(&self, k: &str) -> Result<Option<f64>> {
        self.get(k)
            .map(|v| as_float(v).ok_or_else(|| anyhow!("{}: expected a number", self.key(k))))
            .transpose()
    }

    fn uint(&self, k: &str) -> Result<Option<u64>> {
        self.get(k)
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Ok(*i as u64),
                _ => Err(anyhow!("{}: expected a non-negative integer", self.key(k))),
            })
            .transpose()
    }

    fn string(&self, k: &str) -> Result<Option<String>> {
        self.get(k)
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| anyhow!("{}: expected a string", self.key(k)))
            })
            .transpose()
    }

    fn bool(&self, k: &str) -> Result<Option<bool>> {
        self.get(k)
            .map(|v| {
                v.as_bool()
                    .ok_or_else(|| anyhow!("{}: expected true or false", self.key(k)))
            })
            .transpose()
    }

    fn list<T>(&self, k: &str, item: impl Fn(&Value) -> Option<T>) -> Result<Option<Vec<T>>> {
        let Some(v) = self.get(k) else {
            return Ok(None);
        };
        let arr = v
            .as_array()
            .ok_or_else(|| anyhow!("{}: expected a list", self.key(k)))?;
        arr.iter()
            .map(|x| item(x).ok_or_else(|| anyhow!("{}: unexpected list element {x}", self.key(k))))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        for k in self.table.keys() {
            if !allowed.contains(&k.as_str()) {
                bail!("{}: unknown key", self.key(k));
            }
        }
        Ok(())
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        if let Some(csv) = &cfg.csv {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.csv = Some(dir.join(csv));
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let root: Table = text.parse().context("malformed config")?;
        let mut cfg = Config::default();
        let empty = Table::new();
        let section = |name: &'static str| -> Result<Reader<'_>> {
            let table = match root.get(name) {
                None => &empty,
                Some(Value::Table(t)) => t,
                Some(_) => bail!("{name}: expected a table"),
            };
            Ok(Reader {
                section: name,
                table,
            })
        };
        for k in root.keys() {
            if !["stream", "delay", "model", "run", "tune", "sweep"].contains(&k.as_str()) {
                bail!("{k}: unknown section");
            }
        }

        let s = section("stream")?;
        s.only(&[
            "preset",
            "csv",
            "name",
            "instances",
            "offline_fraction",
            "chunk_mean",
        ])?;
        cfg.preset = s.string("preset")?;
        cfg.csv = s.string("csv")?.map(PathBuf::from);
        if cfg.preset.is_some() && cfg.csv.is_some() {
            bail!("stream.csv: cannot be combined with stream.preset");
        }
        cfg.name = s.string("name")?;
        cfg.instances = s.uint("instances")?.map(|v| v as usize);
        cfg.offline_fraction = s.float("offline_fraction")?;
        cfg.chunk_mean = s.float("chunk_mean")?;

        let d = section("delay")?;
        d.only(&[
            "model",
            "alpha",
            "unit",
            "instances",
            "positive_alpha",
            "negative_alpha",
        ])?;
        cfg.alpha = d.float("alpha")?.unwrap_or(0.0);
        cfg.unit = d.float("unit")?;
        let kind = d.string("model")?.unwrap_or_else(|| "poisson".to_string());
        cfg.delay = match kind.as_str() {
            "poisson" => DelayKind::Poisson,
            "zero" => DelayKind::Zero,
            "fixed" => DelayKind::Fixed(
                d.uint("instances")?
                    .ok_or_else(|| anyhow!("delay.instances: required for a fixed delay"))?,
            ),
            "class" => DelayKind::ByClass {
                positive: d
                    .float("positive_alpha")?
                    .ok_or_else(|| anyhow!("delay.positive_alpha: required"))?,
                negative: d
                    .float("negative_alpha")?
                    .ok_or_else(|| anyhow!("delay.negative_alpha: required"))?,
            },
            other => {
                bail!("delay.model: unknown delay model `{other}` (poisson, zero, fixed, class)")
            }
        };

        let m = section("model")?;
        if let Some(name) = m.string("name")? {
            cfg.model = name;
        }
        for (k, v) in m.table {
            if k == "name" {
                continue;
            }
            let x = as_float(v).ok_or_else(|| anyhow!("model.{k}: expected a number"))?;
            cfg.params.push((k.clone(), x));
        }

        let r = section("run")?;
        r.only(&["seed", "metric", "timing"])?;
        cfg.seed = r.uint("seed")?.unwrap_or(0);
        cfg.metric = r
            .string("metric")?
            .map(|m| m.parse::<Metric>().map_err(|e| anyhow!("run.metric: {e}")))
            .transpose()?;
        cfg.timing = r.bool("timing")?.unwrap_or(false);

        let t = section("tune")?;
        t.only(&["trials"])?;
        cfg.trials = t.uint("trials")?.unwrap_or(0) as usize;

        if root.contains_key("sweep") {
            let w = section("sweep")?;
            w.only(&["presets", "models", "delay_factors", "seeds"])?;
            let str_item = |v: &Value| v.as_str().map(str::to_string);
            cfg.sweep = Some(Sweep {
                presets: w.list("presets", str_item)?.unwrap_or_default(),
                models: w
                    .list("models", str_item)?
                    .unwrap_or_else(|| vec![cfg.model.clone()]),
                delay_factors: w
                    .list("delay_factors", as_float)?
                    .unwrap_or_else(|| vec![cfg.alpha]),
                seeds: w
                    .list("seeds", |v| {
                        v.as_integer().filter(|i| *i >= 0).map(|i| i as u64)
                    })?
                    .unwrap_or_else(|| vec![cfg.seed]),
            });
            if w.get("presets").is_none() {
                let base = cfg
                    .preset
                    .clone()
                    .or_else(|| cfg.csv.as_ref().map(|_| String::new()));
                cfg.sweep.as_mut().unwrap().presets = base.into_iter().collect();
            }
        }
        Ok(cfg)
    }

    /// The individual runs of a sweep, dataset-major; a plain config is a
    /// sweep of one.
    pub fn expand(&self) -> Vec<Config> {
        let Some(sweep) = &self.sweep else {
            return vec![self.clone()];
        };
        let mut out = Vec::new();
        for p in &sweep.presets {
            for m in &sweep.models {
                for &a in &sweep.delay_factors {
                    for &s in &sweep.seeds {
                        let mut c = self.clone();
                        c.sweep = None;
                        if !p.is_empty() {
                            c.preset = Some(p.clone());
                        }
                        if *m != self.model {
                            c.model = m.clone();
                            c.params.clear();
                        }
                        c.alpha = a;
                        c.seed = s;
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    pub fn stream(&self) -> Result<StreamSpec> {
        let mut stream = match (&self.preset, &self.csv) {
            (Some(p), _) => preset(p).map_err(|e| anyhow!("stream.preset: {e}"))?,
            (None, Some(path)) => StreamSpec {
                name: self.name.clone().unwrap_or_else(|| {
                    path.file_stem()
                        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned())
                }),
                dataset: DatasetSpec::Csv(path.clone()),
                n_instances: 0,
                offline_fraction: 0.1,
                chunk_mean: 1_000.0,
                delay_unit: 1_000.0,
                metric: Metric::AucRoc,
            },
            (None, None) => bail!("stream.preset: missing (or give stream.csv)"),
        };
        if let Some(n) = &self.name {
            stream.name = n.clone();
        }
        if let Some(n) = self.instances {
            stream.n_instances = n;
        }
        if let Some(f) = self.offline_fraction {
            stream.offline_fraction = f;
        }
        if let Some(c) = self.chunk_mean {
            stream.chunk_mean = c;
        }
        if let Some(u) = self.unit {
            stream.delay_unit = u;
        }
        if let Some(m) = self.metric {
            stream.metric = m;
        }
        stream.validate()?;
        Ok(stream)
    }

    pub fn learner(&self) -> Result<LearnerSpec> {
        let mut l = LearnerSpec::from_name(&self.model).map_err(|e| anyhow!("model.name: {e}"))?;
        for (k, v) in &self.params {
            l.set_param(k, *v)?;
        }
        l.validate()?;
        Ok(l)
    }

    pub fn experiment(&self) -> Result<ExperimentSpec> {
        let stream = self.stream()?;
        let unit = stream.delay_unit;
        let mut spec = ExperimentSpec::new(stream, 0.0, self.learner()?, self.seed)?;
        spec.delay = match &self.delay {
            DelayKind::Poisson => DelayModel::poisson_with_unit(self.alpha, unit)?,
            DelayKind::Zero => DelayModel::Zero,
            DelayKind::Fixed(n) => DelayModel::Fixed(*n),
            DelayKind::ByClass { positive, negative } => DelayModel::class_conditional(
                DelayModel::poisson_with_unit(*positive, unit)?,
                DelayModel::poisson_with_unit(*negative, unit)?,
            )?,
        };
        spec.timing = self.timing;
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = Config::parse("[stream]\npreset = \"sea_a_desk\"\n").unwrap();
        let e = c.experiment().unwrap();
        assert_eq!(e.stream.name, "sea_a_desk");
        assert_eq!(e.learner.name(), "ht");
        assert_eq!(e.delay, DelayModel::poisson_with_unit(0.0, 1000.0).unwrap());
        assert!(!e.timing);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("[stream]\npreset = \"sea_a\"\nbogus = 1\n", "stream.bogus"),
            ("[stream]\npreset = \"nope\"\n", "nope"),
            (
                "[stream]\npreset = \"sea_a\"\noffline_fraction = 1.5\n",
                "stream.offline_fraction",
            ),
            (
                "[stream]\npreset = \"sea_a\"\n[delay]\nalpha = -1\n",
                "delay.alpha",
            ),
            (
                "[stream]\npreset = \"sea_a\"\n[model]\nname = \"ht\"\nn_trees = 3\n",
                "model.n_trees",
            ),
            (
                "[stream]\npreset = \"sea_a\"\n[run]\nseed = \"x\"\n",
                "run.seed",
            ),
            ("[extra]\nx = 1\n", "extra"),
        ];
        for (text, key) in cases {
            let err = Config::parse(text).and_then(|c| c.experiment().map(|_| ()));
            let msg = format!("{:#}", err.unwrap_err());
            assert!(msg.contains(key), "`{msg}` lacks `{key}`");
        }
    }

    #[test]
    fn model_params_applied() {
        let c = Config::parse("[stream]\npreset = \"agr_a_desk\"\n[model]\nname = \"b_gbdt\"\nn_trees = 12\nstack_members = 5\n")
            .unwrap();
        assert_eq!(c.learner().unwrap().name(), "b5_gbdt");
    }

    #[test]
    fn sweep_expansion() {
        let c = Config::parse(
            "[stream]\npreset = \"sea_a_desk\"\n[model]\nname = \"ht\"\ngrace_period = 100\n[sweep]\nmodels = [\"ht\", \"r_cart\"]\ndelay_factors = [0, 1, 7]\nseeds = [1, 2]\n",
        )
        .unwrap();
        let runs = c.expand();
        assert_eq!(runs.len(), 12);
        assert_eq!(runs[0].params.len(), 1);
        assert!(runs[6].params.is_empty());
        assert_eq!(
            (runs[11].model.as_str(), runs[11].alpha, runs[11].seed),
            ("r_cart", 7.0, 2)
        );
        let empty = Config::parse("[stream]\npreset = \"sea_a\"\n[sweep]\nmodels = []\n").unwrap();
        assert!(empty.expand().is_empty());
    }
}
