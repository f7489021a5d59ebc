//! Scheduling policies: the finite-horizon optimal scheduler and baselines.

mod tree;

pub use tree::{
    build_children, dedupe_level, fh_decide, worst_case_nodes, Branch, DecisionTree, Dedup,
    TreeNode, TIE_TOLERANCE,
};

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::penalty::{state_cost, PenaltyTable};
use crate::timing::{Action, SamplingCalendar, TimingState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulerDecision {
    pub action: Action,
    /// Optimal expected horizon cost for tree policies; `C(s)` of the current
    /// state for the others.
    pub predicted_cost: f64,
    /// Distinct tree nodes built for this decision (0 for non-tree policies).
    pub nodes_expanded: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Finite-horizon optimal (`fh`).
    #[serde(rename = "fh")]
    FiniteHorizon,
    /// One-step lookahead, identical to `fh` with `H = 1`.
    Greedy,
    RoundRobin,
    Random,
    MaxAoi,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::FiniteHorizon,
        Policy::Greedy,
        Policy::RoundRobin,
        Policy::Random,
        Policy::MaxAoi,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Policy::FiniteHorizon => "fh",
            Policy::Greedy => "greedy",
            Policy::RoundRobin => "round_robin",
            Policy::Random => "random",
            Policy::MaxAoi => "max_aoi",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .iter()
            .copied()
            .find(|p| p.id() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = Policy::ALL.iter().map(Policy::id).collect();
                invalid(
                    "policy",
                    format!("unknown policy `{s}`; valid ids: {}", valid.join(", ")),
                )
            })
    }
}

/// A policy plus whatever memory it keeps between slots.
#[derive(Debug, Clone)]
pub struct Scheduler {
    policy: Policy,
    horizon: usize,
    dedup: Dedup,
    last_served: Option<usize>,
    rng: Option<ChaCha8Rng>,
}

impl Scheduler {
    pub fn new(policy: Policy, horizon: usize, dedup: Dedup) -> Self {
        Self {
            policy,
            horizon,
            dedup,
            last_served: None,
            rng: None,
        }
    }

    /// Random stream used by [`Policy::Random`].
    pub fn with_rng(mut self, rng: ChaCha8Rng) -> Self {
        self.rng = Some(rng);
        self
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn decide(
        &mut self,
        state: &TimingState,
        calendars: &[SamplingCalendar],
        penalties: &PenaltyTable,
        loss: &[f64],
    ) -> Result<SchedulerDecision> {
        let decision = match self.policy {
            Policy::FiniteHorizon => {
                fh_decide(state, calendars, penalties, loss, self.horizon, self.dedup)?
            }
            Policy::Greedy => fh_decide(state, calendars, penalties, loss, 1, self.dedup)?,
            Policy::RoundRobin => self.simple(
                state,
                calendars,
                penalties,
                round_robin(state, self.last_served),
            ),
            Policy::MaxAoi => self.simple(state, calendars, penalties, max_aoi(state, calendars)),
            Policy::Random => {
                let rng = self
                    .rng
                    .as_mut()
                    .ok_or_else(|| invalid("policy", "random policy needs an RNG stream"))?;
                let action = random_admissible(state, rng);
                self.simple(state, calendars, penalties, action)
            }
        };
        if let Action::Transmit(i) = decision.action {
            self.last_served = Some(i);
        }
        Ok(decision)
    }

    fn simple(
        &self,
        state: &TimingState,
        calendars: &[SamplingCalendar],
        penalties: &PenaltyTable,
        action: Action,
    ) -> SchedulerDecision {
        SchedulerDecision {
            action,
            predicted_cost: state_cost(state, calendars, penalties),
            nodes_expanded: 0,
        }
    }
}

/// Next admissible sub-system after `last_served` in cyclic order.
pub fn round_robin(state: &TimingState, last_served: Option<usize>) -> Action {
    let n = state.len();
    let start = last_served.map_or(0, |i| i + 1);
    (0..n)
        .map(|k| (start + k) % n)
        .find(|&i| state.is_admissible(i))
        .map_or(Action::Idle, Action::Transmit)
}

/// Admissible sub-system with the largest current age; lowest index on ties.
pub fn max_aoi(state: &TimingState, calendars: &[SamplingCalendar]) -> Action {
    let ages = state.ages(calendars);
    let mut best: Option<(usize, u64)> = None;
    for i in (0..state.len()).filter(|&i| state.is_admissible(i)) {
        if best.is_none_or(|(_, a)| ages[i] > a) {
            best = Some((i, ages[i]));
        }
    }
    best.map_or(Action::Idle, |(i, _)| Action::Transmit(i))
}

/// Uniform over admissible sub-systems; idle only when none is admissible.
pub fn random_admissible(state: &TimingState, rng: &mut impl Rng) -> Action {
    let candidates: Vec<usize> = (0..state.len())
        .filter(|&i| state.is_admissible(i))
        .collect();
    if candidates.is_empty() {
        Action::Idle
    } else {
        Action::Transmit(candidates[rng.random_range(0..candidates.len())])
    }
}
