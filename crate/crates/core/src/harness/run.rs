//! Training runs: one seed end to end, and many seeds into an output
//! directory.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::report::{metrics_file_name, write_metrics, MetricsRow};
use super::visits::VisitTable;
use crate::cross::{walkable_cells, CrossEnv};
use crate::env::{Action, ContextualEnv, Task};
use crate::exploration::PeAgent;
use crate::explore_go::ExploreGoCollector;
use crate::ppo::{collect_rollout, PpoAgent, RolloutBuffer, VecEnv};
use crate::rng::{eval_stream, substream, Stream};
use crate::{Error, Result};

/// Mean undiscounted return of `policy` over `episodes_per_task` episodes
/// started from each task.
pub fn evaluate_with<E, R, P>(env: &E, tasks: &[Task], episodes_per_task: usize, rng: &mut R, mut policy: P) -> Result<f64>
where
    E: ContextualEnv,
    R: Rng + ?Sized,
    P: FnMut(&[f64], &mut R) -> Result<Action>,
{
    let episodes = tasks.len() * episodes_per_task;
    if episodes == 0 {
        return Err(Error::Config("evaluation needs at least one episode".into()));
    }
    let mut total = 0.0;
    for task in tasks {
        for _ in 0..episodes_per_task {
            let mut state = env.reset(task)?;
            loop {
                let obs = env.render(&state)?.into_vec();
                let t = env.step(&state, policy(&obs, rng)?)?;
                total += t.reward;
                if t.done {
                    break;
                }
                state = t.next_state;
            }
        }
    }
    Ok(total / episodes as f64)
}

/// Evaluates the main agent, sampling from its policy or acting greedily.
pub fn evaluate<E: ContextualEnv, R: Rng + ?Sized>(
    env: &E,
    agent: &PpoAgent,
    tasks: &[Task],
    episodes_per_task: usize,
    greedy: bool,
    rng: &mut R,
) -> Result<f64> {
    evaluate_with(env, tasks, episodes_per_task, rng, |obs, rng| {
        if greedy {
            agent.greedy_action(obs)
        } else {
            Ok(agent.act(obs, rng)?.action)
        }
    })
}

/// Statistics of one training iteration, written as a row of
/// `train_seed<N>.csv`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TrainLogRow {
    pub step: u64,
    pub main_samples: usize,
    pub explore_samples: usize,
    pub loss: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub grad_norm: f64,
    pub episodes: usize,
    pub mean_episode_return: f64,
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub metrics: Vec<MetricsRow>,
    /// Main-agent visits over the whole run.
    pub visits: VisitTable,
    /// Draws of each exploration length; empty for plain PPO.
    pub k_counts: Vec<u64>,
    pub agent: PpoAgent,
}

struct Evaluator<'a> {
    env: &'a CrossEnv,
    config: &'a ExperimentConfig,
    seed: u64,
    index: u64,
}

impl Evaluator<'_> {
    fn row(&mut self, agent: &PpoAgent, step: u64, window: &VisitTable) -> Result<MetricsRow> {
        let mut rng = eval_stream(self.seed, self.index);
        self.index += 1;
        let (n, greedy) = (self.config.eval_episodes, self.config.greedy_eval);
        let train_return = evaluate(self.env, agent, self.env.training_tasks(), n, greedy, &mut rng)?;
        let test_return = if self.env.testing_tasks().is_empty() {
            f64::NAN
        } else {
            evaluate(self.env, agent, self.env.testing_tasks(), n, greedy, &mut rng)?
        };
        Ok(MetricsRow {
            step,
            train_return,
            test_return,
            d_ppo_transitions: window.total(),
            coverage: window.coverage(),
            entropy: window.entropy(),
        })
    }
}

/// Trains one seed, evaluating at step 0, after every `eval_every`
/// environment steps, and at the end. `log` sees every iteration.
pub fn run_seed(config: &ExperimentConfig, seed: u64, mut log: impl FnMut(&TrainLogRow) -> Result<()>) -> Result<SeedRun> {
    config.validate()?;
    let env = CrossEnv::new(config.env.clone())?;
    let ppo = &config.ppo;
    let mut init_rng = substream(seed, Stream::Init);
    let mut agent = PpoAgent::new(env.observation_len(), env.num_actions(), ppo.clone(), &mut init_rng)?;
    let eg = config.explore_go;
    let mut explore = if eg.enabled {
        let explorer = PeAgent::build(eg.pe_agent, &env, ppo, &config.rnd, &mut init_rng)?;
        let collector = ExploreGoCollector::new(eg, ppo.n_envs, substream(seed, Stream::ExploreLength));
        Some((explorer, collector))
    } else {
        None
    };
    let mut venv = VecEnv::new(env.clone(), env.training_tasks().to_vec(), ppo.n_envs, substream(seed, Stream::Env))?;
    let mut action_rng = substream(seed, Stream::Action);
    let mut explore_rng = substream(seed, Stream::Explore);
    let mut shuffle_rng = substream(seed, Stream::Shuffle);

    let universe: Vec<_> =
        env.training_tasks().iter().flat_map(|t| walkable_cells().into_iter().map(move |p| (t.id, p))).collect();
    let mut window = VisitTable::new(universe.iter().copied());
    let mut visits = VisitTable::new(universe);
    let mut evaluator = Evaluator { env: &env, config, seed, index: 0 };
    let mut metrics = vec![evaluator.row(&agent, 0, &window)?];
    let per_iteration = (ppo.n_envs * ppo.rollout_len) as u64;
    let mut step = 0u64;
    let mut next_eval = config.eval_every;

    while step < config.total_timesteps {
        let (mut main, explore_buffer): (RolloutBuffer, Option<RolloutBuffer>) = match &mut explore {
            Some((explorer, collector)) => {
                let (m, e) = collector.collect(&mut venv, &agent, explorer, ppo.rollout_len, &mut action_rng, &mut explore_rng)?;
                (m, Some(e))
            }
            None => (collect_rollout(&mut venv, &agent, ppo.rollout_len, &mut action_rng)?, None),
        };
        step += per_iteration;
        for r in main.records() {
            window.record(r.task, r.position);
            visits.record(r.task, r.position);
        }
        main.compute_advantages(ppo.gamma, ppo.gae_lambda)?;
        let stats = agent.update(&main, &mut shuffle_rng)?.unwrap_or_default();
        let mut explore_samples = 0;
        if let (Some((explorer, _)), Some(mut buffer)) = (&mut explore, explore_buffer) {
            explore_samples = buffer.len();
            explorer.update(&mut buffer, &mut explore_rng)?;
        }
        let episodes = venv.drain_finished();
        let mean_episode_return = if episodes.is_empty() {
            f64::NAN
        } else {
            episodes.iter().map(|e| e.ret).sum::<f64>() / episodes.len() as f64
        };
        log(&TrainLogRow {
            step,
            main_samples: main.len(),
            explore_samples,
            loss: stats.loss,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            clip_fraction: stats.clip_fraction,
            approx_kl: stats.approx_kl,
            grad_norm: stats.grad_norm,
            episodes: episodes.len(),
            mean_episode_return,
        })?;
        if step >= next_eval || step >= config.total_timesteps {
            metrics.push(evaluator.row(&agent, step, &window)?);
            window.clear();
            next_eval = (step / config.eval_every + 1) * config.eval_every;
        }
    }
    let k_counts = explore.map(|(_, c)| c.k_counts().to_vec()).unwrap_or_default();
    Ok(SeedRun { seed, metrics, visits, k_counts, agent })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeedOutcome {
    Completed(u64),
    /// A metrics file already existed.
    Skipped(u64),
    Failed { seed: u64, reason: String },
}

/// Runs every configured seed in parallel, writing `metrics_seed<N>.csv`
/// and `train_seed<N>.csv` into `out`. Seeds whose metrics file exists are
/// skipped, so an interrupted experiment can be resumed. A seed that fails
/// leaves `failed_seed<N>.txt` and does not stop the others.
pub fn run_experiment(config: &ExperimentConfig, out: &Path) -> Result<Vec<SeedOutcome>> {
    config.validate()?;
    fs::create_dir_all(out)?;
    let outcomes = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let metrics_path = out.join(metrics_file_name(seed));
            if metrics_path.exists() {
                log::info!("seed {seed}: metrics present, skipping");
                return SeedOutcome::Skipped(seed);
            }
            match train_one(config, seed, out, &metrics_path) {
                Ok(()) => SeedOutcome::Completed(seed),
                Err(e) => {
                    log::error!("seed {seed} failed: {e}");
                    let _ = fs::write(failure_path(out, seed), format!("{e}\n"));
                    SeedOutcome::Failed { seed, reason: e.to_string() }
                }
            }
        })
        .collect();
    Ok(outcomes)
}

fn failure_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("failed_seed{seed}.txt"))
}

fn train_one(config: &ExperimentConfig, seed: u64, out: &Path, metrics_path: &Path) -> Result<()> {
    let _ = fs::remove_file(failure_path(out, seed));
    let mut log = csv::Writer::from_path(out.join(format!("train_seed{seed}.csv")))?;
    let run = run_seed(config, seed, |row| {
        log.serialize(row)?;
        if row.step % (config.eval_every.max(1) * 10) < config.ppo.batch_size() as u64 {
            log::info!("seed {seed}: step {} loss {:.4} entropy {:.3}", row.step, row.loss, row.entropy);
        }
        Ok(())
    })?;
    log.flush()?;
    let last = run.metrics.last().expect("evaluated at least once");
    log::info!("seed {seed}: train {:.3} test {:.3}", last.train_return, last.test_return);
    write_metrics(metrics_path, &run.metrics)
}
