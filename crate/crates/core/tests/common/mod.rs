//! Exhaustive finite-horizon oracle for scalar loops sampled every slot.
//!
//! Shares no code with the library scheduler: its own state, transitions and
//! penalty, and it enumerates whole policies (one action per outcome history)
//! instead of running backward induction.

#![allow(dead_code)]

/// `g(Δ) = σ² Σ_{r=1}^{Δ-1} a^{2r}`
pub fn penalty(a: f64, sigma2: f64, age: i64) -> f64 {
    (1..age).map(|r| sigma2 * a.powi(2 * r as i32)).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleState {
    pub t: i64,
    pub received: Vec<i64>,
    pub utilized: Vec<i64>,
}

pub struct Instance {
    pub a: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub loss: Vec<f64>,
}

impl Instance {
    fn cost(&self, s: &OracleState) -> f64 {
        (0..self.a.len())
            .map(|i| penalty(self.a[i], self.sigma2[i], s.t - s.utilized[i]))
            .sum()
    }

    /// `None` is idle. Every slot generates a sample, so every sensor always
    /// has something newer than the last delivery.
    fn outcomes(&self, s: &OracleState, action: Option<usize>) -> Vec<(f64, OracleState)> {
        let advance = |delivered: Option<usize>| {
            let mut received = s.received.clone();
            if let Some(i) = delivered {
                received[i] = s.t;
            }
            OracleState {
                t: s.t + 1,
                utilized: received.clone(),
                received,
            }
        };
        match action {
            None => vec![(1.0, advance(None))],
            Some(i) => vec![
                (1.0 - self.loss[i], advance(Some(i))),
                (self.loss[i], advance(None)),
            ],
        }
    }

    fn actions(&self) -> Vec<Option<usize>> {
        (0..self.a.len()).map(Some).chain([None]).collect()
    }
}

/// A deterministic policy: the action at the root and one sub-policy per
/// outcome of each root action.
#[derive(Debug, Clone)]
pub enum Plan {
    Leaf,
    Node {
        action: Option<usize>,
        next: Vec<Plan>,
    },
}

/// Every policy over `depth` decisions. Outcome counts depend only on the
/// action, so plans can be generated without states.
pub fn all_plans(inst: &Instance, depth: usize) -> Vec<Plan> {
    if depth == 0 {
        return vec![Plan::Leaf];
    }
    let subs = all_plans(inst, depth - 1);
    let mut plans = Vec::new();
    for action in inst.actions() {
        let branches = if action.is_some() { 2 } else { 1 };
        let mut combos: Vec<Vec<Plan>> = vec![Vec::new()];
        for _ in 0..branches {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    subs.iter().map(move |s| {
                        let mut c = c.clone();
                        c.push(s.clone());
                        c
                    })
                })
                .collect();
        }
        plans.extend(combos.into_iter().map(|next| Plan::Node { action, next }));
    }
    plans
}

/// Expected `Σ_{k=0}^{H} C(s(t+k))` under `plan`, by full expansion.
pub fn evaluate(inst: &Instance, s: &OracleState, plan: &Plan) -> f64 {
    let here = inst.cost(s);
    match plan {
        Plan::Leaf => here,
        Plan::Node { action, next } => {
            here + inst
                .outcomes(s, *action)
                .iter()
                .zip(next)
                .map(|((p, child), sub)| p * evaluate(inst, child, sub))
                .sum::<f64>()
        }
    }
}

/// Minimum expected cost over all policies and, per root action, the best
/// cost achievable after committing to it.
pub fn optimum(
    inst: &Instance,
    s: &OracleState,
    horizon: usize,
) -> (f64, Vec<(Option<usize>, f64)>) {
    let mut per_action: Vec<(Option<usize>, f64)> = inst
        .actions()
        .into_iter()
        .map(|a| (a, f64::INFINITY))
        .collect();
    for plan in all_plans(inst, horizon) {
        let value = evaluate(inst, s, &plan);
        if let Plan::Node { action, .. } = &plan {
            let slot = per_action.iter_mut().find(|(a, _)| a == action).unwrap();
            slot.1 = slot.1.min(value);
        }
    }
    let best = per_action
        .iter()
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    (best, per_action)
}

/// Lowest index first, idle last, among actions within `tol` of the best.
pub fn preferred_action(per_action: &[(Option<usize>, f64)], best: f64, tol: f64) -> Option<usize> {
    let close: Vec<Option<usize>> = per_action
        .iter()
        .filter(|(_, v)| *v <= best + tol * best.abs().max(1.0))
        .map(|(a, _)| *a)
        .collect();
    close.iter().flatten().min().copied()
}
