//! Experiment orchestration: many seeded runs per policy, aggregated into
//! mean cumulative-regret curves with standard errors.
//!
//! Run `r` of an experiment uses seed `base_seed + r`. Runs execute in
//! parallel but results are laid out by (policy, seed), so the output does
//! not depend on scheduling.

use rayon::prelude::*;

use crate::env::{derive_seed, Environment, InstanceTemplate, RunSeeds};
use crate::error::{Error, Result};
use crate::policy::{Policy, PolicyKind};
use crate::types::{AlgoConfig, InstanceSpec, RoundLog};

/// Whether policies share randomness at equal seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    /// Same instance, contexts and noise for every policy at a given seed.
    #[default]
    Coupled,
    /// Each policy draws its own instance and streams.
    Independent,
}

impl Coupling {
    pub fn as_str(self) -> &'static str {
        match self {
            Coupling::Coupled => "coupled",
            Coupling::Independent => "independent",
        }
    }
}

impl std::str::FromStr for Coupling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(Coupling::Coupled),
            "independent" => Ok(Coupling::Independent),
            other => Err(Error::InvalidParameter {
                name: "coupling",
                reason: format!("unknown coupling `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub template: InstanceTemplate,
    pub policies: Vec<PolicyKind>,
    pub runs: usize,
    pub base_seed: u64,
    pub cfg: AlgoConfig,
    pub coupling: Coupling,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidParameter {
                name: "runs",
                reason: "need at least one run".into(),
            });
        }
        if self.template.arms == 0 {
            return Err(Error::InvalidParameter {
                name: "K",
                reason: "need at least one arm".into(),
            });
        }
        self.cfg.check_arms(self.template.arms)
    }

    pub fn horizon(&self) -> usize {
        self.cfg.horizon()
    }

    /// Seed of run `r`.
    pub fn seed(&self, run: usize) -> u64 {
        self.base_seed.wrapping_add(run as u64)
    }

    /// Master seed used by `policy` at `seed`.
    pub fn master_seed(&self, policy: PolicyKind, seed: u64) -> u64 {
        match self.coupling {
            Coupling::Coupled => seed,
            Coupling::Independent => {
                let idx = PolicyKind::ALL.iter().position(|p| *p == policy).unwrap_or(0);
                derive_seed(seed, 16 + idx as u64)
            }
        }
    }

    /// Instance faced at master seed `master`.
    pub fn instance(&self, master: u64) -> Result<InstanceSpec> {
        self.template.draw(RunSeeds::from_master(master).instance)
    }
}

/// Logs of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub policy: PolicyKind,
    pub seed: u64,
    pub logs: Vec<RoundLog>,
    pub switch_round: Option<usize>,
}

impl RunRecord {
    /// Prefix sums of the per-round regret.
    pub fn cumulative_regret(&self) -> Vec<f64> {
        self.logs
            .iter()
            .scan(0.0, |acc, l| {
                *acc += l.inst_regret;
                Some(*acc)
            })
            .collect()
    }

    pub fn final_regret(&self) -> f64 {
        self.logs.iter().map(|l| l.inst_regret).sum()
    }
}

/// Plays `policy` against `env` for `horizon` rounds.
pub fn play(policy: &mut dyn Policy, env: &mut Environment, horizon: usize) -> Result<Vec<RoundLog>> {
    let mut logs = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let slate = env.sample_slate(t)?.clone();
        let decision = policy.select_arm(t, &slate)?;
        let reward = env.draw_reward(t, decision.arm)?;
        let inst_regret = env.inst_regret(t, decision.arm)?;
        policy.observe(t, decision.arm, reward, &slate)?;
        logs.push(RoundLog {
            round: t,
            arm: decision.arm,
            reward,
            mode: decision.mode,
            optimistic_value: decision.optimistic_value,
            inst_regret,
        });
    }
    Ok(logs)
}

/// One run of `kind` on `instance` with the streams of master seed `seed`.
pub fn run_single(kind: PolicyKind, instance: &InstanceSpec, seed: u64, cfg: AlgoConfig) -> Result<RunRecord> {
    let mut env = Environment::new(instance.clone(), RunSeeds::from_master(seed))?;
    let mut policy = kind.build(instance, cfg)?;
    let logs = play(policy.as_mut(), &mut env, cfg.horizon())?;
    Ok(RunRecord {
        policy: kind,
        seed,
        logs,
        switch_round: policy.switch_round(),
    })
}

/// Mean cumulative regret of one policy across runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub policy: PolicyKind,
    pub runs: usize,
    /// Entry `t - 1` holds round `t`.
    pub mean_regret: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Switch rounds of the runs that switched, in seed order.
    pub switch_rounds: Vec<usize>,
}

impl AggregateCurve {
    /// Aggregates runs of a single policy. Runs are ordered by seed first, so
    /// the result does not depend on the order of `runs`.
    pub fn from_runs(policy: PolicyKind, runs: &[&RunRecord]) -> Self {
        let mut ordered: Vec<&RunRecord> = runs.to_vec();
        ordered.sort_by_key(|r| r.seed);
        let curves: Vec<Vec<f64>> = ordered.iter().map(|r| r.cumulative_regret()).collect();
        let n = curves.iter().map(Vec::len).min().unwrap_or(0);
        let count = curves.len();
        let mut mean_regret = Vec::with_capacity(n);
        let mut stderr = Vec::with_capacity(n);
        for t in 0..n {
            let mut sum = 0.0;
            for c in &curves {
                sum += c[t];
            }
            let mean = sum / count as f64;
            let se = if count > 1 {
                let ss: f64 = curves.iter().map(|c| (c[t] - mean).powi(2)).sum();
                (ss / (count - 1) as f64).sqrt() / (count as f64).sqrt()
            } else {
                0.0
            };
            mean_regret.push(mean);
            stderr.push(se);
        }
        Self {
            policy,
            runs: count,
            mean_regret,
            stderr,
            switch_rounds: ordered.iter().filter_map(|r| r.switch_round).collect(),
        }
    }

    pub fn final_mean(&self) -> f64 {
        self.mean_regret.last().copied().unwrap_or(0.0)
    }

    pub fn final_stderr(&self) -> f64 {
        self.stderr.last().copied().unwrap_or(0.0)
    }

    pub fn switch_frequency(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.switch_rounds.len() as f64 / self.runs as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// One curve per policy, in the order the policies were requested.
    pub curves: Vec<AggregateCurve>,
    /// Ordered by policy (request order), then seed.
    pub runs: Vec<RunRecord>,
}

impl ExperimentResult {
    pub fn curve(&self, policy: PolicyKind) -> Option<&AggregateCurve> {
        self.curves.iter().find(|c| c.policy == policy)
    }

    pub fn runs_of(&self, policy: PolicyKind) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.policy == policy)
    }
}

/// Runs every (policy, seed) pair in parallel.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_with(spec, true)
}

/// Same as [`run_experiment`] on the calling thread only.
pub fn run_experiment_serial(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    run_with(spec, false)
}

fn run_with(spec: &ExperimentSpec, parallel: bool) -> Result<ExperimentResult> {
    spec.validate()?;
    let jobs: Vec<(PolicyKind, u64)> = spec
        .policies
        .iter()
        .flat_map(|&p| (0..spec.runs).map(move |r| (p, spec.seed(r))))
        .collect();
    let job = |&(policy, seed): &(PolicyKind, u64)| -> Result<RunRecord> {
        let master = spec.master_seed(policy, seed);
        let instance = spec.instance(master)?;
        let mut record = run_single(policy, &instance, master, spec.cfg)?;
        record.seed = seed;
        Ok(record)
    };
    let runs: Vec<RunRecord> = if parallel {
        jobs.par_iter().map(job).collect::<Result<_>>()?
    } else {
        jobs.iter().map(job).collect::<Result<_>>()?
    };
    let curves = spec
        .policies
        .iter()
        .map(|&p| {
            let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.policy == p).collect();
            AggregateCurve::from_runs(p, &mine)
        })
        .collect();
    Ok(ExperimentResult { curves, runs })
}
