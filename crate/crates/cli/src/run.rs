//! Batch execution of an (environment, algorithm, seed) matrix.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Result;
use rayon::prelude::*;
use rfcover::analysis::CoverReport;
use rfcover::experiments::explore_and_check;
use rfcover::explore::{pco_theory, pcr_theory, Algorithm, ExploreParams, RoundDiagnostics, TheoryParams};
use rfcover::Seed;
use serde::Serialize;

use crate::config::{Config, ParameterMode};

pub const SCHEMA: &str = "rfcover-report/1";

/// Semantics of the numeric fields that appear in reports.
const UNITS: &[(&str, &str)] = &[
    ("seed", "u64 seed of the run's random streams"),
    ("episodes", "episodes started through the access handle"),
    ("reset_queries", "reset-access queries, initial and one-step"),
    ("num_policies", "size of the returned policy set"),
    ("policy_bound", "H^2 |S|^2, the bound on the returned set size"),
    ("optimal", "max over all policies of the visitation probability"),
    ("achieved", "max over the returned set of the visitation probability"),
    ("deficit", "optimal minus achieved, a probability"),
    ("epsilon", "cover accuracy, a probability"),
    ("pass_rate", "fraction of runs whose cover passed"),
    ("wall_secs", "wall-clock seconds"),
    ("generated_unix_secs", "seconds since the Unix epoch"),
    ("ln_eps", "natural logarithm of the oracle accuracy"),
    ("ln_gamma", "natural logarithm of the reward width"),
    ("ln_gamma_sep", "natural logarithm of the center separation"),
];

#[derive(Debug, Serialize)]
pub struct Timing {
    pub wall_secs: f64,
}

#[derive(Debug, Serialize)]
pub struct RunResult {
    pub params: ExploreParams,
    pub num_policies: usize,
    pub policy_bound: usize,
    pub episodes: u64,
    pub reset_queries: u64,
    pub cover: CoverReport,
    pub layer_sizes: Vec<Vec<usize>>,
    pub rounds: Vec<RoundDiagnostics>,
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub env_index: usize,
    pub algorithm: Algorithm,
    pub run_index: usize,
    pub seed: u64,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<RunResult>,
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct TheoryRecord {
    pub env_index: usize,
    pub algorithm: Algorithm,
    pub horizon: usize,
    pub states: usize,
    pub actions: usize,
    pub schedule: TheoryParams,
}

#[derive(Debug, Serialize)]
pub struct GroupSummary {
    pub env_index: usize,
    pub algorithm: Algorithm,
    pub runs: usize,
    pub errors: usize,
    pub cover_passes: usize,
    pub pass_rate: f64,
    pub max_num_policies: usize,
    pub within_policy_bound: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub units: Vec<(&'static str, &'static str)>,
    pub config: Config,
    pub runs: Vec<RunRecord>,
    pub theory: Vec<TheoryRecord>,
    pub summary: Vec<GroupSummary>,
    pub timing: BatchTiming,
}

#[derive(Debug, Serialize)]
pub struct BatchTiming {
    pub wall_secs: f64,
    pub generated_unix_secs: u64,
}

struct Job {
    env_index: usize,
    algorithm: Algorithm,
    run_index: usize,
}

fn run_seed(base: Seed, env_index: usize, run_index: usize) -> Seed {
    base.derive("env").index(env_index as u64).index(run_index as u64)
}

fn execute(cfg: &Config, job: &Job) -> RunRecord {
    let start = Instant::now();
    let seed = run_seed(Seed(cfg.seed), job.env_index, job.run_index);
    let outcome = (|| -> rfcover::Result<RunResult> {
        let (mdp, class) = cfg.envs[job.env_index].build(seed.derive("instance"))?;
        let s_count = cfg.s_count.unwrap_or(mdp.num_states());
        let params = ExploreParams::practical(
            job.algorithm,
            s_count,
            mdp.num_actions(),
            mdp.horizon(),
            cfg.eps,
            cfg.delta,
            cfg.overrides.for_algorithm(job.algorithm),
        )?;
        let (h, s) = (mdp.horizon(), mdp.num_states());
        let run = explore_and_check(mdp, class, job.algorithm, &params, cfg.eps, seed.derive(alg_label(job.algorithm)))?;
        Ok(RunResult {
            params,
            num_policies: run.num_policies,
            policy_bound: h * h * s * s,
            episodes: run.episodes,
            reset_queries: run.resets,
            cover: run.cover,
            layer_sizes: run.layer_sizes,
            rounds: run.rounds,
        })
    })();
    let (status, error, result) = match outcome {
        Ok(r) => ("ok", None, Some(r)),
        Err(e) => ("error", Some(e.to_string()), None),
    };
    RunRecord {
        env_index: job.env_index,
        algorithm: job.algorithm,
        run_index: job.run_index,
        seed: seed.0,
        status,
        error,
        result,
        timing: Timing { wall_secs: start.elapsed().as_secs_f64() },
    }
}

fn alg_label(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Pco => "pco",
        Algorithm::Pcr => "pcr",
    }
}

fn theory_records(cfg: &Config) -> Result<Vec<TheoryRecord>> {
    let mut out = Vec::new();
    for (env_index, env) in cfg.envs.iter().enumerate() {
        let (mdp, _) = env.build(run_seed(Seed(cfg.seed), env_index, 0).derive("instance"))?;
        let (horizon, actions) = (mdp.horizon(), mdp.num_actions());
        let states = cfg.s_count.unwrap_or(mdp.num_states());
        for &algorithm in &cfg.algorithms {
            let schedule = match algorithm {
                Algorithm::Pco => pco_theory(cfg.eps, cfg.delta, horizon, states, actions),
                Algorithm::Pcr => pcr_theory(cfg.eps, cfg.delta, horizon, states, actions),
            };
            out.push(TheoryRecord { env_index, algorithm, horizon, states, actions, schedule });
        }
    }
    Ok(out)
}

fn summarise(cfg: &Config, runs: &[RunRecord]) -> Vec<GroupSummary> {
    let mut out = Vec::new();
    for env_index in 0..cfg.envs.len() {
        for &algorithm in &cfg.algorithms {
            let group: Vec<&RunRecord> =
                runs.iter().filter(|r| r.env_index == env_index && r.algorithm == algorithm).collect();
            if group.is_empty() {
                continue;
            }
            let results: Vec<&RunResult> = group.iter().filter_map(|r| r.result.as_ref()).collect();
            let cover_passes = results.iter().filter(|r| r.cover.pass).count();
            out.push(GroupSummary {
                env_index,
                algorithm,
                runs: group.len(),
                errors: group.len() - results.len(),
                cover_passes,
                pass_rate: cover_passes as f64 / group.len() as f64,
                max_num_policies: results.iter().map(|r| r.num_policies).max().unwrap_or(0),
                within_policy_bound: results.iter().all(|r| r.num_policies <= r.policy_bound),
            });
        }
    }
    out
}

/// Run the configured matrix on `jobs` threads. Per-run failures are recorded
/// in the report; only configuration problems are returned as errors.
pub fn run(cfg: Config, jobs: usize) -> Result<Report> {
    let start = Instant::now();
    let (runs, theory) = match cfg.parameter_mode {
        ParameterMode::Theory => (Vec::new(), theory_records(&cfg)?),
        ParameterMode::Practical => {
            let matrix: Vec<Job> = (0..cfg.envs.len())
                .flat_map(|env_index| {
                    cfg.algorithms.iter().flat_map(move |&algorithm| {
                        (0..cfg.runs).map(move |run_index| Job { env_index, algorithm, run_index })
                    })
                })
                .collect();
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
            let cfg_ref = &cfg;
            (pool.install(|| matrix.par_iter().map(|j| execute(cfg_ref, j)).collect()), Vec::new())
        }
    };
    let summary = summarise(&cfg, &runs);
    let generated_unix_secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Ok(Report {
        schema: SCHEMA,
        units: UNITS.to_vec(),
        config: cfg,
        runs,
        theory,
        summary,
        timing: BatchTiming { wall_secs: start.elapsed().as_secs_f64(), generated_unix_secs },
    })
}
