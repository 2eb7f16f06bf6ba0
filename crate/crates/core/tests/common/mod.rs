#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use explore_go::cross::CrossEnv;
use explore_go::env::{Action, ContextualEnv, Position, Task};
use explore_go::nn::{Adam, AdamConfig, Mlp};
use explore_go::ppo::{PpoAgent, PpoConfig};
use explore_go::reachability::{ActionSet, CellState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cross() -> CrossEnv {
    CrossEnv::new(Default::default()).unwrap()
}

/// Every (colour, position) pair some action sequence of length at most
/// `max_len` reaches from the starts, driving the simulator directly. Each
/// layer holds the states reachable in exactly `t` steps, so after
/// `max_len` layers every sequence of that length is accounted for.
pub fn reachable_by_simulation(env: &CrossEnv, starts: &[Task], max_len: usize) -> BTreeSet<([u64; 3], Position)> {
    let mut seen = BTreeSet::new();
    let mut layer: BTreeMap<([u64; 3], Position), Task> = BTreeMap::new();
    for t in starts {
        layer.insert((t.color.key(), t.start), *t);
    }
    for _ in 0..=max_len {
        let mut next = BTreeMap::new();
        for (&key, task) in &layer {
            seen.insert(key);
            if env.is_goal(key.1) {
                continue;
            }
            for a in Action::ALL {
                // a fresh episode placed at the cell, so the timeout never binds
                let state = explore_go::env::EnvState { position: key.1, task: *task, steps_elapsed: 0, terminal: false };
                let t = env.step(&state, a).unwrap();
                next.insert((key.0, t.next_state.position), *task);
            }
        }
        layer = next;
    }
    seen
}

/// Literal enumeration of all `4^len` action sequences from one start.
pub fn endpoints_of_all_sequences(env: &CrossEnv, task: &Task, len: u32) -> BTreeSet<Position> {
    let mut out = BTreeSet::new();
    for code in 0..4usize.pow(len) {
        let mut state = env.reset(task).unwrap();
        out.insert(state.position);
        let mut c = code;
        for _ in 0..len {
            let a = Action::from_index(c % 4).unwrap();
            c /= 4;
            let t = env.step(&state, a).unwrap();
            out.insert(t.next_state.position);
            if t.done {
                break;
            }
            state = t.next_state;
        }
    }
    out
}

/// Optimal actions from shortest-path distances: with a single goal reward
/// and discount below one, an action is optimal exactly when it shortens
/// the remaining distance by one.
pub fn shortest_path_actions(env: &CrossEnv) -> BTreeMap<Position, ActionSet> {
    let cells = explore_go::cross::walkable_cells();
    let goal = env.config().goal;
    let mut dist: BTreeMap<Position, usize> = BTreeMap::new();
    dist.insert(goal, 0);
    let mut queue = VecDeque::from([goal]);
    // reverse BFS over the forward move relation
    while let Some(p) = queue.pop_front() {
        for &q in &cells {
            if dist.contains_key(&q) {
                continue;
            }
            if Action::ALL.iter().any(|&a| explore_go::cross::move_on_cross(q, a) == p) {
                dist.insert(q, dist[&p] + 1);
                queue.push_back(q);
            }
        }
    }
    cells
        .into_iter()
        .filter(|&p| p != goal)
        .map(|p| {
            let d = dist[&p];
            let best = Action::ALL
                .iter()
                .filter(|&&a| dist[&explore_go::cross::move_on_cross(p, a)] + 1 == d)
                .map(|a| a.index());
            (p, ActionSet::from_actions(best))
        })
        .collect()
}

pub fn cell(env: &CrossEnv, task: &Task, position: Position) -> CellState {
    CellState { position, context: env.context_of(task).unwrap() }
}

/// Advantages by explicit double summation over TD residuals.
pub fn direct_gae(
    rewards: &[f64],
    values: &[f64],
    terminated: &[bool],
    truncated: &[bool],
    bootstrap: &[f64],
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    let next_value = |t: usize| -> f64 {
        if terminated[t] {
            0.0
        } else if truncated[t] || t + 1 == n {
            bootstrap[t]
        } else {
            values[t + 1]
        }
    };
    let delta: Vec<f64> = (0..n).map(|t| rewards[t] + gamma * next_value(t) - values[t]).collect();
    (0..n)
        .map(|t| {
            let mut sum = 0.0;
            let mut weight = 1.0;
            for k in t..n {
                sum += weight * delta[k];
                if terminated[k] || truncated[k] {
                    break;
                }
                weight *= gamma * lambda;
            }
            sum
        })
        .collect()
}

/// Central finite differences of `f` with respect to every coordinate.
pub fn numeric_gradient(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Largest relative error, with an absolute floor so near-zero entries do
/// not dominate.
pub fn max_rel_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(1e-3)).fold(0.0, f64::max)
}

/// Random dims with `hidden` layers no wider than 8 and at least one input.
pub fn random_dims<R: Rng>(rng: &mut R, max_hidden: usize) -> Vec<usize> {
    let hidden = rng.gen_range(0..=max_hidden);
    let mut dims = vec![rng.gen_range(1..=6)];
    dims.extend((0..hidden).map(|_| rng.gen_range(1..=8)));
    dims.push(rng.gen_range(1..=4));
    dims
}

pub fn random_mlp<R: Rng>(dims: &[usize], rng: &mut R) -> Mlp {
    let n = explore_go::nn::num_params(dims);
    Mlp::from_params(dims, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Verifies the parameter and input gradients of `sum(c * out)` by
/// finite differences; returns the worst relative error.
pub fn mlp_gradient_error(mlp: &Mlp, input: &[f64], coeffs: &[f64]) -> f64 {
    let cache = mlp.forward(input).unwrap();
    let mut grads = vec![0.0; mlp.num_params()];
    let grad_in = mlp.backward(&cache, coeffs, &mut grads).unwrap();
    let objective = |m: &Mlp, x: &[f64]| -> f64 { m.predict(x).unwrap().iter().zip(coeffs).map(|(o, c)| o * c).sum() };
    let dims = mlp.dims().to_vec();
    let num_params = numeric_gradient(mlp.params(), 1e-4, |p| {
        objective(&Mlp::from_params(&dims, p.to_vec()).unwrap(), input)
    });
    let num_in = numeric_gradient(input, 1e-4, |x| objective(mlp, x));
    max_rel_error(&grads, &num_params).max(max_rel_error(&grad_in, &num_in))
}

/// Pre-activations of every hidden unit, so tests can skip inputs where a
/// ReLU sits within `margin` of its kink.
pub fn near_kink(mlp: &Mlp, input: &[f64], margin: f64) -> bool {
    let dims = mlp.dims();
    let p = mlp.params();
    let mut x = input.to_vec();
    let mut offset = 0;
    for l in 0..dims.len() - 1 {
        let (n_in, n_out) = (dims[l], dims[l + 1]);
        let mut z = vec![0.0; n_out];
        for j in 0..n_out {
            z[j] = p[offset + n_in * n_out + j] + (0..n_in).map(|i| p[offset + j * n_in + i] * x[i]).sum::<f64>();
        }
        offset += n_in * n_out + n_out;
        if l + 2 < dims.len() {
            if z.iter().any(|v| v.abs() < margin) {
                return true;
            }
            x = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    false
}

/// First Adam step from zero moments, by the closed form
/// `-lr * g / (|g| + eps)`.
pub fn adam_first_step(cfg: &AdamConfig, g: f64) -> f64 {
    -cfg.learning_rate * g / (g.abs() + cfg.epsilon)
}

pub fn adam_error(cfg: AdamConfig, grads: &[f64]) -> f64 {
    let mut params = vec![0.5; grads.len()];
    let mut adam = Adam::new(cfg, grads.len());
    adam.step(&mut params, grads).unwrap();
    params.iter().zip(grads).map(|(p, &g)| (p - 0.5 - adam_first_step(&cfg, g)).abs()).fold(0.0, f64::max)
}

pub fn small_ppo() -> PpoConfig {
    PpoConfig { hidden_dims: vec![16, 16], ..PpoConfig::default() }
}

pub fn agent_for(env: &impl ContextualEnv, config: PpoConfig, seed: u64) -> PpoAgent {
    PpoAgent::new(env.observation_len(), env.num_actions(), config, &mut rng(seed)).unwrap()
}

/// Upper `alpha` quantile of chi-squared with `dof` degrees of freedom.
pub fn chi2_critical(dof: usize, alpha: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(dof as f64).unwrap().inverse_cdf(1.0 - alpha)
}

pub fn chi2_statistic(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum()
}

pub struct StructuralReport {
    pub episodes: usize,
    pub steps: usize,
    pub main_records: usize,
    pub explore_records: usize,
    /// Steps where the two buffers together did not hold exactly one record
    /// per environment.
    pub partition_violations: usize,
    /// Exploration records seen after a main record of the same episode.
    pub prefix_violations: usize,
    /// Episodes whose exploration records are not numbered `0..m` with
    /// the main records continuing from `m`.
    pub numbering_violations: usize,
    pub k_counts: Vec<u64>,
    /// Positions where main-agent episodes started, per task.
    pub main_starts: BTreeMap<usize, BTreeSet<Position>>,
}

/// Collects with one step per call so the global order of records is known,
/// until `episodes` episodes have finished.
pub fn explore_go_structure(max_explore_steps: u32, episodes: usize, seed: u64) -> StructuralReport {
    use explore_go::exploration::{PeAgent, PeAgentKind};
    use explore_go::explore_go::{ExploreGoCollector, ExploreGoConfig};
    use explore_go::ppo::{Phase, VecEnv};
    use explore_go::rng::{substream, Stream};

    let env = cross();
    let agent = agent_for(&env, small_ppo(), seed);
    let explorer = PeAgent::UniformRandom { num_actions: 4 };
    let config = ExploreGoConfig { enabled: true, max_explore_steps, pe_agent: PeAgentKind::UniformRandom };
    let n_envs = 4;
    let mut collector = ExploreGoCollector::new(config, n_envs, substream(seed, Stream::ExploreLength));
    let mut venv = VecEnv::new(env.clone(), env.training_tasks().to_vec(), n_envs, substream(seed, Stream::Env)).unwrap();
    let (mut act, mut explore) = (substream(seed, Stream::Action), substream(seed, Stream::Explore));
    let mut report = StructuralReport {
        episodes: 0,
        steps: 0,
        main_records: 0,
        explore_records: 0,
        partition_violations: 0,
        prefix_violations: 0,
        numbering_violations: 0,
        k_counts: Vec::new(),
        main_starts: BTreeMap::new(),
    };
    // per env: main record seen in the current episode, exploration records so far
    let mut state = vec![(false, 0u32); n_envs];
    while report.episodes < episodes {
        let (main, pe) = collector.collect(&mut venv, &agent, &explorer, 1, &mut act, &mut explore).unwrap();
        report.steps += n_envs;
        report.main_records += main.len();
        report.explore_records += pe.len();
        for e in 0..n_envs {
            let (m, p) = (main.env(e), pe.env(e));
            if m.len() + p.len() != 1 {
                report.partition_violations += 1;
                continue;
            }
            let r = m.first().or(p.first()).unwrap();
            if r.episode_step == 0 {
                state[e] = (false, 0);
            }
            let (seen_main, explored) = &mut state[e];
            match r.phase {
                Phase::PureExploration => {
                    if *seen_main {
                        report.prefix_violations += 1;
                    }
                    if r.episode_step != *explored || r.episode_start != (r.episode_step == 0) {
                        report.numbering_violations += 1;
                    }
                    *explored += 1;
                }
                Phase::Main => {
                    if r.episode_start != !*seen_main || r.episode_step < *explored {
                        report.numbering_violations += 1;
                    }
                    if !*seen_main {
                        report.main_starts.entry(r.task).or_default().insert(r.position);
                        if r.episode_step != *explored {
                            report.numbering_violations += 1;
                        }
                    }
                    *seen_main = true;
                }
            }
        }
        report.episodes += venv.drain_finished().len();
    }
    report.k_counts = collector.k_counts().to_vec();
    report
}

pub fn cross_observations() -> Vec<Vec<f64>> {
    let env = cross();
    env.training_tasks()
        .iter()
        .chain(env.testing_tasks())
        .flat_map(|t| {
            let env = &env;
            explore_go::cross::walkable_cells().into_iter().filter(|&p| !env.is_goal(p)).map(move |p| {
                let s = explore_go::env::EnvState { position: p, task: *t, steps_elapsed: 0, terminal: false };
                env.render(&s).unwrap().into_vec()
            })
        })
        .collect()
}

pub fn default_rnd(seed: u64) -> explore_go::exploration::Rnd {
    explore_go::exploration::Rnd::new(
        explore_go::cross::OBSERVATION_LEN,
        &explore_go::exploration::RndConfig::default(),
        &mut rng(seed),
    )
    .unwrap()
}

/// Raw bonus of one observation before and after each of `steps` predictor
/// updates on it alone.
pub fn rnd_bonus_trace(seed: u64, obs: &[f64], steps: usize) -> Vec<f64> {
    let mut rnd = default_rnd(seed);
    let mut trace = vec![rnd.raw_bonus(obs).unwrap()];
    for _ in 0..steps {
        rnd.update_predictor(&[obs]).unwrap();
        trace.push(rnd.raw_bonus(obs).unwrap());
    }
    trace
}
