//! Tabular reachability and optimal-action analysis.
//!
//! Works on any finite deterministic environment exposed through
//! [`TabularEnv`]. For the cross gridworld the tabular state is the pair
//! (position, background context); the step counter is dropped because the
//! timeout never changes which cells can be reached or which move is best.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Debug;
use std::io::Write;

use crate::cross::{ContextId, CrossEnv};
use crate::env::{Action, ContextualEnv, Position, Task};
use crate::{Error, Result};

/// Largest state space [`compute_reachable_set`] will enumerate.
pub const MAX_TABULAR_STATES: usize = 1_000_000;

pub const VALUE_TOLERANCE: f64 = 1e-10;

/// Q-values within this distance of the best one count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome<S> {
    pub next: S,
    pub reward: f64,
    pub terminal: bool,
}

/// Finite, deterministic environment with enumerable actions.
pub trait TabularEnv {
    type State: Clone + Ord + Debug;

    fn num_actions(&self) -> usize;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Successor under `action`; `None` from terminal states.
    fn successor(&self, state: &Self::State, action: usize) -> Option<Outcome<Self::State>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellState {
    pub position: Position,
    pub context: ContextId,
}

impl TabularEnv for CrossEnv {
    type State = CellState;

    fn num_actions(&self) -> usize {
        Action::COUNT
    }

    fn is_terminal(&self, state: &CellState) -> bool {
        self.is_goal(state.position)
    }

    fn successor(&self, state: &CellState, action: usize) -> Option<Outcome<CellState>> {
        if self.is_goal(state.position) {
            return None;
        }
        let action = Action::from_index(action).ok()?;
        let next = crate::cross::move_on_cross(state.position, action);
        let terminal = self.is_goal(next);
        Some(Outcome {
            next: CellState { position: next, context: state.context },
            reward: if terminal { 1.0 } else { 0.0 },
            terminal,
        })
    }
}

impl CrossEnv {
    /// Tabular start state of `task`, if its colour is a known context.
    pub fn cell_state(&self, task: &Task) -> Option<CellState> {
        self.context_of(task).map(|context| CellState { position: task.start, context })
    }

    pub fn training_start_states(&self) -> Vec<CellState> {
        self.training_tasks().iter().filter_map(|t| self.cell_state(t)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReachableSet<S: Ord> {
    pub starts: BTreeSet<S>,
    pub states: BTreeSet<S>,
}

impl<S: Ord> ReachableSet<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn contains(&self, state: &S) -> bool {
        self.states.contains(state)
    }
}

/// Breadth-first closure over every action from every start state.
pub fn compute_reachable_set<E: TabularEnv>(
    env: &E,
    starts: impl IntoIterator<Item = E::State>,
) -> Result<ReachableSet<E::State>> {
    let starts: BTreeSet<E::State> = starts.into_iter().collect();
    let mut states = starts.clone();
    let mut queue: VecDeque<E::State> = starts.iter().cloned().collect();
    while let Some(state) = queue.pop_front() {
        for action in 0..env.num_actions() {
            if let Some(outcome) = env.successor(&state, action) {
                if states.insert(outcome.next.clone()) {
                    if states.len() > MAX_TABULAR_STATES {
                        return Err(Error::Unsupported(format!(
                            "state space exceeds {MAX_TABULAR_STATES} states"
                        )));
                    }
                    queue.push_back(outcome.next);
                }
            }
        }
    }
    Ok(ReachableSet { starts, states })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reachability {
    Reachable,
    Unreachable,
}

pub fn classify_task(env: &CrossEnv, task: &Task, reachable: &ReachableSet<CellState>) -> Reachability {
    match env.cell_state(task) {
        Some(s) if reachable.contains(&s) => Reachability::Reachable,
        _ => Reachability::Unreachable,
    }
}

/// Set of actions sharing the best Q-value, as a bitmask over action indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionSet(u64);

impl ActionSet {
    pub fn single(action: usize) -> Self {
        Self(1 << action)
    }

    pub fn from_actions(actions: impl IntoIterator<Item = usize>) -> Self {
        Self(actions.into_iter().fold(0, |m, a| m | (1 << a)))
    }

    pub fn contains(&self, action: usize) -> bool {
        self.0 & (1 << action) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn intersects(&self, other: &ActionSet) -> bool {
        self.0 & other.0 != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(|&a| self.contains(a))
    }

    /// Cardinal-action label, tied sets joined with `|`.
    pub fn label(&self) -> String {
        self.iter()
            .map(|a| Action::from_index(a).map(|a| a.name().to_string()).unwrap_or_else(|_| a.to_string()))
            .collect::<Vec<_>>()
            .join("|")
    }
}

#[derive(Debug, Clone)]
pub struct OptimalPolicy<S: Ord> {
    pub values: BTreeMap<S, f64>,
    pub actions: BTreeMap<S, ActionSet>,
    pub iterations: usize,
}

/// Value iteration over `states` (which must be closed under transitions).
/// Terminal states are valued 0 and left out of the action map.
pub fn optimal_policy<E: TabularEnv>(
    env: &E,
    states: &BTreeSet<E::State>,
    gamma: f64,
    max_iterations: usize,
) -> Result<OptimalPolicy<E::State>> {
    let index: BTreeMap<&E::State, usize> = states.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let list: Vec<&E::State> = states.iter().collect();
    // successor table: per state, per action, (next index, reward, terminal)
    let mut table = Vec::with_capacity(list.len());
    for s in &list {
        let mut row = Vec::with_capacity(env.num_actions());
        if !env.is_terminal(s) {
            for a in 0..env.num_actions() {
                let out = env
                    .successor(s, a)
                    .ok_or_else(|| Error::Usage(format!("non-terminal state {s:?} has no successor")))?;
                let next = *index
                    .get(&out.next)
                    .ok_or_else(|| Error::Usage(format!("state set not closed: {:?} missing", out.next)))?;
                row.push((next, out.reward, out.terminal));
            }
        }
        table.push(row);
    }

    let q = |values: &[f64], row: &[(usize, f64, bool)]| -> Vec<f64> {
        row.iter()
            .map(|&(next, r, terminal)| r + if terminal { 0.0 } else { gamma * values[next] })
            .collect()
    };

    let mut values = vec![0.0; list.len()];
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut delta: f64 = 0.0;
        let mut next_values = values.clone();
        for (i, row) in table.iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            let best = q(&values, row).into_iter().fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - values[i]).abs());
            next_values[i] = best;
        }
        values = next_values;
        if delta < VALUE_TOLERANCE || iterations >= max_iterations {
            break;
        }
    }

    let mut actions = BTreeMap::new();
    for (i, row) in table.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        let qs = q(&values, row);
        let best = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let set = ActionSet::from_actions(
            qs.iter().enumerate().filter(|(_, &v)| best - v <= TIE_TOLERANCE).map(|(a, _)| a),
        );
        actions.insert(list[i].clone(), set);
    }
    let values = list.iter().map(|s| (*s).clone()).zip(values).collect();
    Ok(OptimalPolicy { values, actions, iterations })
}

/// States grouped by row (task) and column (optimal action set).
#[derive(Debug, Clone)]
pub struct AbstractionTable<S: Ord, R: Ord> {
    pub rows: Vec<R>,
    pub columns: Vec<ActionSet>,
    pub cells: BTreeMap<(R, ActionSet), Vec<S>>,
}

impl<S: Ord + Clone, R: Ord + Clone> AbstractionTable<S, R> {
    pub fn build(
        states: impl IntoIterator<Item = S>,
        policy: &BTreeMap<S, ActionSet>,
        num_actions: usize,
        row_of: impl Fn(&S) -> R,
    ) -> Self {
        let mut cells: BTreeMap<(R, ActionSet), Vec<S>> = BTreeMap::new();
        let mut rows = BTreeSet::new();
        let mut ties = BTreeSet::new();
        for s in states {
            let Some(&set) = policy.get(&s) else { continue };
            let row = row_of(&s);
            rows.insert(row.clone());
            if set.len() > 1 {
                ties.insert(set);
            }
            cells.entry((row, set)).or_default().push(s);
        }
        for v in cells.values_mut() {
            v.sort();
        }
        let mut columns: Vec<ActionSet> = (0..num_actions).map(ActionSet::single).collect();
        columns.extend(ties);
        Self { rows: rows.into_iter().collect(), columns, cells }
    }

    pub fn cell(&self, row: &R, column: ActionSet) -> &[S] {
        self.cells.get(&(row.clone(), column)).map_or(&[], Vec::as_slice)
    }

    pub fn num_states(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }

    /// Columns whose optimal-action set is not a single action.
    pub fn tie_columns(&self) -> Vec<ActionSet> {
        self.columns.iter().copied().filter(|c| c.len() > 1).collect()
    }

    /// Number of distinct rows present in each column.
    pub fn column_row_spread(&self) -> Vec<usize> {
        self.columns
            .iter()
            .map(|&c| self.rows.iter().filter(|r| !self.cell(r, c).is_empty()).count())
            .collect()
    }
}

/// Non-terminal states visited by following every optimal action from the
/// start states.
pub fn optimal_trajectory_states<E: TabularEnv>(
    env: &E,
    starts: &BTreeSet<E::State>,
    policy: &BTreeMap<E::State, ActionSet>,
) -> BTreeSet<E::State> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<E::State> = starts.iter().cloned().collect();
    while let Some(s) = stack.pop() {
        if env.is_terminal(&s) || !seen.insert(s.clone()) {
            continue;
        }
        if let Some(set) = policy.get(&s) {
            for a in set.iter() {
                if let Some(out) = env.successor(&s, a) {
                    stack.push(out.next);
                }
            }
        }
    }
    seen
}

/// Complete analysis of the cross environment's training task set.
#[derive(Debug, Clone)]
pub struct CrossAnalysis {
    pub reachable: ReachableSet<CellState>,
    pub classification: Vec<(Task, bool, Reachability)>,
    pub policy: OptimalPolicy<CellState>,
    pub full_table: AbstractionTable<CellState, usize>,
    pub on_policy_table: AbstractionTable<CellState, usize>,
}

/// Rows of the tables are labelled with the id of the first training task
/// using each background context.
pub fn analyze_cross(env: &CrossEnv, gamma: f64) -> Result<CrossAnalysis> {
    let reachable = compute_reachable_set(env, env.training_start_states())?;
    let classification = env
        .training_tasks()
        .iter()
        .map(|t| (*t, true))
        .chain(env.testing_tasks().iter().map(|t| (*t, false)))
        .map(|(t, train)| (t, train, classify_task(env, &t, &reachable)))
        .collect();
    let max_iterations = 10 * env.timeout() as usize;
    let policy = optimal_policy(env, &reachable.states, gamma, max_iterations)?;
    let row_of = |s: &CellState| {
        env.training_tasks()
            .iter()
            .find(|t| env.context_of(t) == Some(s.context))
            .map_or(usize::MAX, |t| t.id)
    };
    let full_table =
        AbstractionTable::build(reachable.states.iter().copied(), &policy.actions, Action::COUNT, row_of);
    let on_trajectory = optimal_trajectory_states(env, &reachable.starts, &policy.actions);
    let on_policy_table = AbstractionTable::build(on_trajectory, &policy.actions, Action::COUNT, row_of);
    for t in full_table.tie_columns() {
        log::warn!("optimal-action tie column {}", t.label());
    }
    Ok(CrossAnalysis { reachable, classification, policy, full_table, on_policy_table })
}

/// Writes a table as CSV: one row per task, one column per action set, each
/// cell a `;`-separated list of positions.
pub fn write_table_csv<W: Write>(table: &AbstractionTable<CellState, usize>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["task".to_string()];
    header.extend(table.columns.iter().map(ActionSet::label));
    w.write_record(&header)?;
    for row in &table.rows {
        let mut record = vec![row.to_string()];
        for &col in &table.columns {
            let cell = table.cell(row, col).iter().map(|s| s.position.to_string()).collect::<Vec<_>>();
            record.push(cell.join(";"));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
