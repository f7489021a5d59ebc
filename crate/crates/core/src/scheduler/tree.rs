//! Finite-horizon scheduling by backward induction over a leveled tree of
//! predicted network states.
//!
//! Level `l` holds the states reachable `l` slots after the root. Every node
//! expands each admissible action into its success and failure outcomes; the
//! failure outcome of any action coincides with the idle outcome, so siblings
//! always share it. Costs are assigned from the leaves back to the root:
//! `J(s) = C(s) + min_a Σ Pr[s' | s, a] J(s')`, and `J(s) = C(s)` at level `H`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::{state_cost, PenaltyTable};
use crate::timing::{Action, SamplingCalendar, TimingState};

use super::SchedulerDecision;

/// How far identical predicted states are merged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dedup {
    /// Merge identical children of the same parent only (the shared failure
    /// outcome); the result is a tree.
    #[default]
    Parent,
    /// Merge identical states anywhere on a level; the result is a leveled DAG.
    Level,
}

/// Relative margin below which two action costs count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub action: Action,
    /// `(probability, index of the child on the next level)`
    pub outcomes: Vec<(f64, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub state: TimingState,
    pub level: usize,
    /// `C(state)`
    pub cost: f64,
    pub cost_to_go: f64,
    pub best_action: Option<Action>,
    pub branches: Vec<Branch>,
}

/// Next states of `state` under `action` with their probabilities.
///
/// Zero-probability outcomes are dropped, so a scheduled link with `p = 0`
/// yields only the success state and one with `p = 1` only the failure state.
pub fn build_children(
    state: &TimingState,
    action: Action,
    loss: &[f64],
    calendars: &[SamplingCalendar],
) -> Result<Vec<(f64, TimingState)>> {
    let successor = |success: bool| -> Result<TimingState> {
        let mut next = state.clone();
        next.step(calendars, action, success)?;
        Ok(next)
    };
    match action {
        Action::Idle => Ok(vec![(1.0, successor(false)?)]),
        Action::Transmit(i) => {
            if i >= state.len() || !state.is_admissible(i) {
                return Err(Error::InadmissibleAction {
                    action: action.to_string(),
                });
            }
            let p = loss[i];
            let mut out = Vec::with_capacity(2);
            if p < 1.0 {
                out.push((1.0 - p, successor(true)?));
            }
            if p > 0.0 {
                out.push((p, successor(false)?));
            }
            Ok(out)
        }
    }
}

/// Merges identical states, returning the distinct states in first-seen order
/// and, for every input, the index of its representative.
pub fn dedupe_level(states: Vec<TimingState>) -> (Vec<TimingState>, Vec<usize>) {
    let mut index: HashMap<TimingState, usize> = HashMap::with_capacity(states.len());
    let mut unique = Vec::new();
    let mut remap = Vec::with_capacity(states.len());
    for s in states {
        let next = unique.len();
        let idx = *index.entry(s.clone()).or_insert(next);
        if idx == next {
            unique.push(s);
        }
        remap.push(idx);
    }
    (unique, remap)
}

/// A fully expanded and evaluated horizon tree.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    pub levels: Vec<Vec<TreeNode>>,
}

impl DecisionTree {
    /// Expands `root` for `horizon` levels with the loss vector frozen at its
    /// observed value, then assigns costs by backward induction.
    pub fn build(
        root: &TimingState,
        calendars: &[SamplingCalendar],
        penalties: &PenaltyTable,
        loss: &[f64],
        horizon: usize,
        dedup: Dedup,
    ) -> Result<Self> {
        let node = |state: TimingState, level: usize| TreeNode {
            cost: state_cost(&state, calendars, penalties),
            state,
            level,
            cost_to_go: f64::NAN,
            best_action: None,
            branches: Vec::new(),
        };
        let mut levels = vec![vec![node(root.clone(), 0)]];

        for level in 0..horizon {
            let mut next: Vec<TreeNode> = Vec::new();
            let mut level_index: HashMap<TimingState, usize> = HashMap::new();
            for parent in levels[level].iter_mut() {
                let mut sibling_index: HashMap<TimingState, usize> = HashMap::new();
                for action in parent.state.admissible_actions() {
                    let mut outcomes = Vec::with_capacity(2);
                    for (prob, child) in build_children(&parent.state, action, loss, calendars)? {
                        let index = match dedup {
                            Dedup::Level => &mut level_index,
                            Dedup::Parent => &mut sibling_index,
                        };
                        let idx = match index.get(&child) {
                            Some(&idx) => idx,
                            None => {
                                let idx = next.len();
                                index.insert(child.clone(), idx);
                                next.push(node(child, level + 1));
                                idx
                            }
                        };
                        outcomes.push((prob, idx));
                    }
                    parent.branches.push(Branch { action, outcomes });
                }
            }
            levels.push(next);
        }

        let mut tree = Self { levels };
        tree.backward_induction();
        Ok(tree)
    }

    fn backward_induction(&mut self) {
        let depth = self.levels.len() - 1;
        for leaf in &mut self.levels[depth] {
            leaf.cost_to_go = leaf.cost;
        }
        for level in (0..depth).rev() {
            let (head, tail) = self.levels.split_at_mut(level + 1);
            let children = &tail[0];
            for node in &mut head[level] {
                let mut best: Option<(Action, f64)> = None;
                for branch in &node.branches {
                    let expected: f64 = branch
                        .outcomes
                        .iter()
                        .map(|&(p, c)| p * children[c].cost_to_go)
                        .sum();
                    if best.is_none_or(|(_, b)| improves(expected, b)) {
                        best = Some((branch.action, expected));
                    }
                }
                let (action, expected) = best.expect("idle is always admissible");
                node.best_action = Some(action);
                node.cost_to_go = node.cost + expected;
            }
        }
    }

    pub fn root(&self) -> &TreeNode {
        &self.levels[0][0]
    }

    pub fn horizon(&self) -> usize {
        self.levels.len() - 1
    }

    /// Number of distinct nodes, root included.
    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn decision(&self) -> SchedulerDecision {
        let root = self.root();
        SchedulerDecision {
            action: root.best_action.unwrap_or(Action::Idle),
            predicted_cost: root.cost_to_go,
            nodes_expanded: self.node_count() as u64,
        }
    }
}

/// Strictly better by more than the tie margin; earlier candidates win ties.
fn improves(candidate: f64, incumbent: f64) -> bool {
    if incumbent.is_infinite() || candidate.is_infinite() {
        return candidate < incumbent;
    }
    candidate < incumbent - TIE_TOLERANCE * incumbent.abs().max(1.0)
}

/// Level-0 optimal action of the `horizon`-stage problem rooted at `state`.
pub fn fh_decide(
    state: &TimingState,
    calendars: &[SamplingCalendar],
    penalties: &PenaltyTable,
    loss: &[f64],
    horizon: usize,
    dedup: Dedup,
) -> Result<SchedulerDecision> {
    if horizon == 0 {
        return Err(crate::error::invalid("horizon", "must be >= 1"));
    }
    Ok(DecisionTree::build(state, calendars, penalties, loss, horizon, dedup)?.decision())
}

/// `((N+1)^(H+1) - 1) / N`: size of the unpruned tree with every sub-system
/// always admissible.
pub fn worst_case_nodes(n: u64, horizon: u32) -> u64 {
    ((n + 1).pow(horizon + 1) - 1) / n
}
