//! Benchmark harness: presets or explicit parameters, paired seeded
//! episodes across policies, the metric suite, and machine-readable
//! reports.
//!
//! All policies see the same instances (paired comparison) and every
//! episode's RNG stream is derived injectively from (base seed, policy,
//! instance), so identical configs produce identical reports. Wall-clock
//! decision times are the one non-deterministic output and are written to
//! a separate timing file.

use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{run_episode, EpisodeResult, HeuristicRouter, Policy};
use crate::instance::{generate_instance, GenParams, Instance, SystemPreset};
use crate::policies::{
    ActionSet, FutureWindows, RanPolicy, RolloutConfig, RolloutPolicy, SbpConfig, SbpPolicy,
    SegPolicy,
};
use crate::routing::SolveBudget;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config needs a preset or explicit system and generation parameters")]
    MissingParameters,
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("config needs at least one policy")]
    NoPolicies,
    #[error("config needs at least one instance")]
    NoInstances,
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("config is not valid JSON: {0}")]
    Parse(#[from] serde_json::Error),
}

fn default_m() -> usize {
    10
}

fn default_q() -> usize {
    30
}

fn default_sampling_horizon() -> u32 {
    1
}

fn default_true() -> bool {
    true
}

/// A policy selected by name in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum PolicySpec {
    Ran,
    Seg,
    RanRe {
        #[serde(default = "default_m")]
        m: usize,
    },
    SegRe {
        #[serde(default = "default_m")]
        m: usize,
    },
    Sbp {
        #[serde(default = "default_q")]
        q: usize,
        #[serde(default = "default_sampling_horizon")]
        sampling_horizon: u32,
        #[serde(default = "default_true")]
        infinite_future_windows: bool,
    },
}

impl PolicySpec {
    pub fn label(&self) -> String {
        match self {
            PolicySpec::Ran => "ran".into(),
            PolicySpec::Seg => "seg".into(),
            PolicySpec::RanRe { .. } => "ran-re".into(),
            PolicySpec::SegRe { .. } => "seg-re".into(),
            PolicySpec::Sbp { .. } => "sbp".into(),
        }
    }

    /// Instantiates the policy for one system. Rollout policies route their
    /// simulated days with `fast_budget`.
    pub fn build<S: Scalar>(
        &self,
        system: &crate::domain::SystemParams<S>,
        gen: &GenParams<S>,
        fast_budget: SolveBudget,
    ) -> Box<dyn Policy<S>> {
        match self {
            PolicySpec::Ran => Box::new(RanPolicy),
            PolicySpec::Seg => Box::new(SegPolicy::new(gen.depot, system.calendar.clone())),
            PolicySpec::RanRe { m } => Box::new(RolloutPolicy::new(
                Box::new(RanPolicy),
                RolloutConfig {
                    rollouts: *m,
                    action_set: ActionSet::All,
                    future: gen.clone(),
                    fast_router: Box::new(HeuristicRouter::new(fast_budget)),
                },
                system.clone(),
            )),
            PolicySpec::SegRe { m } => Box::new(RolloutPolicy::new(
                Box::new(SegPolicy::new(gen.depot, system.calendar.clone())),
                RolloutConfig {
                    rollouts: *m,
                    action_set: ActionSet::All,
                    future: gen.clone(),
                    fast_router: Box::new(HeuristicRouter::new(fast_budget)),
                },
                system.clone(),
            )),
            PolicySpec::Sbp {
                q,
                sampling_horizon,
                infinite_future_windows,
            } => {
                let mut cfg = SbpConfig::new(gen.clone());
                cfg.scenarios = *q;
                cfg.sampling_horizon = *sampling_horizon;
                cfg.future_windows = if *infinite_future_windows {
                    FutureWindows::Infinite
                } else {
                    FutureWindows::Finite
                };
                Box::new(SbpPolicy::new(cfg, system.clone()))
            }
        }
    }
}

fn default_instances() -> usize {
    100
}

fn default_jobs() -> usize {
    1
}

fn default_router_sweeps() -> usize {
    500
}

fn default_fast_sweeps() -> usize {
    10
}

/// A benchmark run: which system, which policies, how many paired
/// instances, and the seeding and effort knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(
    serialize = "S: serde::Serialize",
    deserialize = "S: serde::de::DeserializeOwned"
))]
pub struct BenchConfig<S> {
    /// One of S1..=S6; explicit `system`/`gen` override it.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub system: Option<crate::domain::SystemParams<S>>,
    #[serde(default)]
    pub gen: Option<GenParams<S>>,
    pub policies: Vec<PolicySpec>,
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Local-search budget of the end-of-day router.
    #[serde(default = "default_router_sweeps")]
    pub router_sweeps: usize,
    /// Local-search budget of the router used inside rollouts.
    #[serde(default = "default_fast_sweeps")]
    pub fast_sweeps: usize,
    /// Worker threads for fanning out episodes.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

impl<S: Scalar> BenchConfig<S> {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn resolve_params(
        &self,
    ) -> Result<(crate::domain::SystemParams<S>, GenParams<S>), BenchError> {
        let preset = match &self.preset {
            Some(name) => Some(
                SystemPreset::parse(name).ok_or_else(|| BenchError::UnknownPreset(name.clone()))?,
            ),
            None => None,
        };
        let system = match (&self.system, preset) {
            (Some(s), _) => s.clone(),
            (None, Some(p)) => p.system_params(),
            (None, None) => return Err(BenchError::MissingParameters),
        };
        let gen = match (&self.gen, preset) {
            (Some(g), _) => g.clone(),
            (None, Some(p)) => p.gen_params(),
            (None, None) => return Err(BenchError::MissingParameters),
        };
        Ok((system, gen))
    }
}

/// SplitMix64 step; a bijection on u64.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Seed of instance `i`; shared by every policy so comparisons are paired.
pub fn instance_seed(base_seed: u64, instance: usize) -> u64 {
    splitmix64(base_seed ^ splitmix64(0x696E7374 + instance as u64))
}

/// Seed of the episode RNG for (policy, instance).
pub fn episode_seed(base_seed: u64, policy: usize, instance: usize) -> u64 {
    splitmix64(instance_seed(base_seed, instance) ^ splitmix64(0x706F6C + policy as u64))
}

/// FNV-1a over the canonical config JSON; stamped into every report.
/// Worker count is normalized out: parallelism does not change results.
pub fn config_hash<S: Scalar>(cfg: &BenchConfig<S>) -> String {
    let mut canonical = cfg.clone();
    canonical.jobs = 1;
    let text = serde_json::to_string(&canonical).expect("configs serialize");
    let mut hash: u64 = 0xCBF29CE484222325;
    for byte in text.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x100000001B3);
    }
    format!("{hash:016x}")
}

/// The benchmark metric suite over one policy's episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics<S> {
    /// Mean total cost per episode.
    pub tc: S,
    /// Mean travel cost.
    pub ttc: S,
    /// Mean delay penalty.
    pub dp: S,
    /// Mean waiting cost.
    pub wait: S,
    /// Mean assignment penalty.
    pub assignment: S,
    /// Pooled satisfied-assignment ratio over dynamic customers, percent.
    pub sar: f64,
    /// Mean (over episodes) std-dev of per-day served counts.
    pub se: f64,
    /// Mean wall-clock seconds per assignment decision.
    pub dt_secs: f64,
    /// Standard error of the episode total costs.
    pub sem: f64,
}

/// Aggregates the metric suite from finished episodes.
pub fn compute_metrics<S: Scalar>(results: &[EpisodeResult<S>]) -> Metrics<S> {
    assert!(!results.is_empty(), "metrics need at least one episode");
    let n = results.len();
    let n_s = S::from_f64(n as f64);
    let tc = results.iter().map(|r| r.totals.total).sum::<S>() / n_s;
    let ttc = results.iter().map(|r| r.totals.travel).sum::<S>() / n_s;
    let dp = results.iter().map(|r| r.totals.delay_penalty).sum::<S>() / n_s;
    let wait = results.iter().map(|r| r.totals.wait).sum::<S>() / n_s;
    let assignment = results
        .iter()
        .map(|r| r.totals.assignment_penalty)
        .sum::<S>()
        / n_s;

    let dynamic: usize = results.iter().map(|r| r.dynamic_customers()).sum();
    let satisfied: usize = results.iter().map(|r| r.satisfied_dynamic()).sum();
    let sar = if dynamic == 0 {
        100.0
    } else {
        100.0 * satisfied as f64 / dynamic as f64
    };

    let se = results.iter().map(|r| r.served_sd()).sum::<f64>() / n as f64;

    let decisions: usize = results.iter().map(|r| r.tsa_decision_secs.len()).sum();
    let dt_secs = if decisions == 0 {
        0.0
    } else {
        results
            .iter()
            .flat_map(|r| r.tsa_decision_secs.iter())
            .sum::<f64>()
            / decisions as f64
    };

    let sem = if n < 2 {
        0.0
    } else {
        let mean = tc.as_f64();
        let var = results
            .iter()
            .map(|r| (r.totals.total.as_f64() - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        (var / n as f64).sqrt()
    };

    Metrics {
        tc,
        ttc,
        dp,
        wait,
        assignment,
        sar,
        se,
        dt_secs,
        sem,
    }
}

/// One finished episode in the report.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow<S> {
    pub policy: String,
    pub instance: usize,
    pub seed: u64,
    pub result: EpisodeResult<S>,
}

/// Everything a benchmark run produced.
pub struct Report<S: Scalar> {
    pub config_hash: String,
    pub rows: Vec<EpisodeRow<S>>,
    /// (policy label, metrics) in config order.
    pub summaries: Vec<(String, Metrics<S>)>,
    /// (policy label, instance, error text) of failed episodes.
    pub failures: Vec<(String, usize, String)>,
}

impl<S: Scalar> Report<S> {
    /// Per-episode rows as comma-separated values, prefixed with `#`
    /// comment lines carrying the config hash and tool version.
    /// Deterministic: no wall-clock columns; floats print in shortest
    /// round-trip form.
    pub fn episodes_csv(&self) -> String {
        let mut out = format!(
            "# config_hash: {}\n# version: {}\n",
            self.config_hash,
            env!("CARGO_PKG_VERSION")
        );
        out.push_str(
            "policy,instance,seed,total_cost,travel_cost,wait_cost,delay_penalty,\
             assignment_penalty,sar,served_sd,customers,dynamic_customers\n",
        );
        for row in &self.rows {
            let t = &row.result.totals;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                row.policy,
                row.instance,
                row.seed,
                t.total,
                t.travel,
                t.wait,
                t.delay_penalty,
                t.assignment_penalty,
                row.result.sar(),
                row.result.served_sd(),
                row.result.assignments.len(),
                row.result.dynamic_customers(),
            ));
        }
        out
    }

    /// Wall-clock decision times per episode; the one non-deterministic
    /// artifact, kept apart from the reproducible reports.
    pub fn timing_csv(&self) -> String {
        let mut out = format!(
            "# config_hash: {}\n# version: {}\n",
            self.config_hash,
            env!("CARGO_PKG_VERSION")
        );
        out.push_str("policy,instance,tsa_epochs,mean_decision_secs\n");
        for row in &self.rows {
            let times = &row.result.tsa_decision_secs;
            let mean = if times.is_empty() {
                0.0
            } else {
                times.iter().sum::<f64>() / times.len() as f64
            };
            out.push_str(&format!(
                "{},{},{},{:.6}\n",
                row.policy,
                row.instance,
                times.len(),
                mean
            ));
        }
        out
    }

    /// Aggregate summary as a structured text document (without decision
    /// times, which go to the timing file).
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        out.push_str("benchmark summary\n");
        out.push_str(&format!("version: {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("config_hash: {}\n", self.config_hash));
        out.push_str(&format!("episodes: {}\n", self.rows.len()));
        out.push_str(&format!("failures: {}\n", self.failures.len()));
        for (label, m) in &self.summaries {
            out.push_str(&format!(
                "policy {label}: tc={} ttc={} dp={} wait={} assignment={} sar={} se={} sem={}\n",
                m.tc, m.ttc, m.dp, m.wait, m.assignment, m.sar, m.se, m.sem
            ));
        }
        for (label, instance, error) in &self.failures {
            out.push_str(&format!("failure {label} instance {instance}: {error}\n"));
        }
        out
    }

    /// Writes episodes.csv, summary.txt, and timing.csv into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<(), BenchError> {
        std::fs::create_dir_all(dir)?;
        let mut episodes = std::fs::File::create(dir.join("episodes.csv"))?;
        episodes.write_all(self.episodes_csv().as_bytes())?;
        let mut summary = std::fs::File::create(dir.join("summary.txt"))?;
        summary.write_all(self.summary_text().as_bytes())?;
        let mut timing = std::fs::File::create(dir.join("timing.csv"))?;
        timing.write_all(self.timing_csv().as_bytes())?;
        Ok(())
    }
}

/// Runs every policy over every instance with paired seeds and aggregates
/// the metric suite. Rows come back sorted by (policy, instance) no matter
/// how episodes were scheduled.
pub fn run_benchmark<S: Scalar>(cfg: &BenchConfig<S>) -> Result<Report<S>, BenchError> {
    if cfg.policies.is_empty() {
        return Err(BenchError::NoPolicies);
    }
    if cfg.instances == 0 {
        return Err(BenchError::NoInstances);
    }
    let (system, gen) = cfg.resolve_params()?;
    let exec_budget = SolveBudget::sweeps(cfg.router_sweeps);
    let fast_budget = SolveBudget::fast(cfg.fast_sweeps);

    let instances: Vec<Instance<S>> = (0..cfg.instances)
        .map(|i| generate_instance(&system, &gen, instance_seed(cfg.base_seed, i)))
        .collect();

    struct Slot<S: Scalar>(Option<Result<EpisodeRow<S>, (String, usize, String)>>);
    let total_jobs = cfg.policies.len() * cfg.instances;
    let results: Vec<Mutex<Slot<S>>> = (0..total_jobs).map(|_| Mutex::new(Slot(None))).collect();
    let next_job = AtomicUsize::new(0);
    let workers = cfg.jobs.max(1).min(total_jobs);

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let job = next_job.fetch_add(1, Ordering::Relaxed);
                if job >= total_jobs {
                    break;
                }
                let policy_idx = job / cfg.instances;
                let instance_idx = job % cfg.instances;
                let spec = &cfg.policies[policy_idx];
                let label = spec.label();
                let policy = spec.build(&system, &gen, fast_budget);
                let router = HeuristicRouter::new(exec_budget);
                let seed = episode_seed(cfg.base_seed, policy_idx, instance_idx);
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                let outcome =
                    run_episode(&instances[instance_idx], policy.as_ref(), &router, &mut rng)
                        .map(|result| EpisodeRow {
                            policy: label.clone(),
                            instance: instance_idx,
                            seed,
                            result,
                        })
                        .map_err(|e| (label.clone(), instance_idx, e.to_string()));
                results[job].lock().expect("no poisoned episodes").0 = Some(outcome);
            });
        }
    });

    let mut rows = Vec::with_capacity(total_jobs);
    let mut failures = Vec::new();
    for slot in results {
        match slot.into_inner().expect("no poisoned episodes").0 {
            Some(Ok(row)) => rows.push(row),
            Some(Err(failure)) => failures.push(failure),
            None => unreachable!("every job index is claimed by a worker"),
        }
    }

    let mut summaries = Vec::with_capacity(cfg.policies.len());
    for spec in &cfg.policies {
        let label = spec.label();
        let episodes: Vec<EpisodeResult<S>> = rows
            .iter()
            .filter(|r| r.policy == label)
            .map(|r| r.result.clone())
            .collect();
        if !episodes.is_empty() {
            summaries.push((label, compute_metrics(&episodes)));
        }
    }

    Ok(Report {
        config_hash: config_hash(cfg),
        rows,
        summaries,
        failures,
    })
}
