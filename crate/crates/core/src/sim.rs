//! Slot-by-slot simulation of N control loops sharing one lossy link.
//!
//! Per slot `t`:
//! 1. the channel redraws loss probabilities at coherence-block boundaries;
//! 2. every sub-system with a sampling event at `t` advances its plant one
//!    period, its sensor captures the new state, and its controller rebuilds
//!    the estimate from the freshest utilized packet and computes the input;
//! 3. per-slot squared error and age are recorded;
//! 4. the scheduler picks an action from `s(t)` and the observed `p(t)`;
//! 5. the scheduled link draws its outcome and the timing state moves to
//!    `t + 1`.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, LossProcess};
use crate::control::{
    estimation_error, plant_step, EstimatorState, LqgCost, PlantModel, PlantState,
};
use crate::error::{invalid, Error, Result};
use crate::penalty::PenaltyTable;
use crate::scheduler::{Dedup, Policy, Scheduler};
use crate::seeding::{Purpose, SeedSplitter};
use crate::timing::{Action, SamplingCalendar, Slot, TimingState};

/// One control loop: plant parameters and sampling period in slots.
#[derive(Debug, Clone)]
pub struct SubsystemSpec {
    pub model: PlantModel,
    pub period: i64,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub subsystems: Vec<SubsystemSpec>,
    pub horizon: usize,
    pub policy: Policy,
    pub dedup: Dedup,
    pub slots: u64,
    pub repetitions: u64,
    pub channel: ChannelParams,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subsystems.is_empty() {
            return Err(invalid("subsystem", "at least one sub-system is required"));
        }
        for (i, s) in self.subsystems.iter().enumerate() {
            if s.period < 1 {
                return Err(invalid(
                    format!("subsystem[{i}].period"),
                    format!("must be >= 1, got {}", s.period),
                ));
            }
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be >= 1"));
        }
        if self.slots == 0 {
            return Err(invalid("slots", "must be >= 1"));
        }
        if self.repetitions == 0 {
            return Err(invalid("repetitions", "must be >= 1"));
        }
        self.channel.validate()
    }

    pub fn models(&self) -> Vec<PlantModel> {
        self.subsystems.iter().map(|s| s.model.clone()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsystemMetrics {
    pub sq_error_sum: f64,
    pub aoi_sum: f64,
    pub transmissions: u64,
    pub successes: u64,
    pub lqg: LqgCost,
}

/// Sums collected over one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsAccumulator {
    pub subsystems: Vec<SubsystemMetrics>,
    pub nodes_sum: u64,
    pub idle_slots: u64,
    pub slots: u64,
    /// Slot at which a state left the representable range, if any.
    pub diverged_at: Option<Slot>,
}

impl MetricsAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            subsystems: vec![SubsystemMetrics::default(); n],
            ..Default::default()
        }
    }

    /// Per-slot average squared estimation error of sub-system `i`.
    pub fn mse(&self, i: usize) -> f64 {
        self.per_slot(self.subsystems[i].sq_error_sum)
    }

    pub fn aoi(&self, i: usize) -> f64 {
        self.per_slot(self.subsystems[i].aoi_sum)
    }

    pub fn network_mse(&self) -> f64 {
        self.network(|i| self.mse(i))
    }

    pub fn network_aoi(&self) -> f64 {
        self.network(|i| self.aoi(i))
    }

    /// Average LQG stage cost per sampling period of sub-system `i`.
    pub fn lqg_cost(&self, i: usize) -> f64 {
        self.subsystems[i].lqg.average()
    }

    pub fn nodes_mean(&self) -> f64 {
        self.per_slot(self.nodes_sum as f64)
    }

    pub fn transmissions(&self) -> u64 {
        self.subsystems.iter().map(|s| s.transmissions).sum()
    }

    pub fn successes(&self) -> u64 {
        self.subsystems.iter().map(|s| s.successes).sum()
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    fn per_slot(&self, sum: f64) -> f64 {
        if self.slots == 0 {
            0.0
        } else {
            sum / self.slots as f64
        }
    }

    fn network(&self, f: impl Fn(usize) -> f64) -> f64 {
        let n = self.subsystems.len();
        (0..n).map(f).sum::<f64>() / n as f64
    }
}

/// What happened in one slot, for tracing.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub t: Slot,
    pub state: TimingState,
    pub loss: Vec<f64>,
    pub action: Action,
    pub success: bool,
    pub ages: Vec<u64>,
    pub sq_errors: Vec<f64>,
    pub nodes: u64,
}

/// Plant, sensor and controller of one loop.
struct Loop {
    model: PlantModel,
    plant: Option<PlantState>,
    estimator: EstimatorState,
    pending_input: DVector<f64>,
    sensor_payload: Option<DVector<f64>>,
    received_payload: Option<DVector<f64>>,
    last_utilized: Slot,
    sq_error: f64,
    noise: ChaCha8Rng,
}

impl Loop {
    fn new(model: PlantModel, noise: ChaCha8Rng, cold: Slot) -> Self {
        let n = model.state_dim();
        let m = model.input_dim();
        Self {
            estimator: EstimatorState::cold(n),
            pending_input: DVector::zeros(m),
            model,
            plant: None,
            sensor_payload: None,
            received_payload: None,
            last_utilized: cold,
            sq_error: 0.0,
            noise,
        }
    }

    fn draw_noise(&mut self) -> DVector<f64> {
        let n = self.model.state_dim();
        let z = DVector::from_fn(n, |_, _| self.noise.sample::<f64, _>(StandardNormal));
        self.model.shape_noise(&z)
    }

    /// Sampling event: advance the plant to period `k`, capture the sensor
    /// sample, and compute the estimate and input for the period.
    fn sampling_event(
        &mut self,
        cal: &SamplingCalendar,
        utilized: Slot,
        metrics: &mut SubsystemMetrics,
    ) -> Result<()> {
        let plant = match self.plant.take() {
            None => PlantState::new(self.draw_noise()),
            Some(prev) => {
                let w = self.draw_noise();
                plant_step(&self.model, prev, &self.pending_input, &w)?
            }
        };
        let k = plant.k;

        if utilized != self.last_utilized {
            let payload = self
                .received_payload
                .clone()
                .expect("a utilized packet was received");
            let age = (k - cal.sampling_index(utilized)) as u64;
            self.estimator
                .utilize(&self.model, payload, age, &plant.inputs)?;
            self.last_utilized = utilized;
        } else if self.estimator.payload.is_some() {
            self.estimator.predict(&self.model, &self.pending_input);
        }

        self.sq_error = estimation_error(&plant.x, &self.estimator.x_hat);
        let u = self.model.control_input(&self.estimator.x_hat);
        metrics
            .lqg
            .accumulate(&plant.x, &u, &self.model.q, &self.model.r);
        self.pending_input = u;
        self.sensor_payload = Some(plant.x.clone());
        self.plant = Some(plant);
        Ok(())
    }

    fn is_diverged(&self) -> bool {
        self.plant.as_ref().is_some_and(PlantState::is_diverged)
            || self
                .estimator
                .x_hat
                .iter()
                .any(|v| !v.is_finite() || v.abs() > crate::control::DIVERGENCE_LIMIT)
            || !self.sq_error.is_finite()
    }
}

/// Sampling offsets of repetition `rep`, uniform on `{0, …, D_i - 1}`.
pub fn draw_offsets(cfg: &SimConfig, seeds: &SeedSplitter, rep: u64) -> Vec<i64> {
    let mut rng = seeds.stream(rep, Purpose::Offsets, 0);
    cfg.subsystems
        .iter()
        .map(|s| rng.random_range(0..s.period))
        .collect()
}

pub fn run(cfg: &SimConfig, rep: u64) -> Result<MetricsAccumulator> {
    run_traced(cfg, rep, |_| {})
}

/// [`run`] with a callback receiving every slot's record.
pub fn run_traced(
    cfg: &SimConfig,
    rep: u64,
    mut observe: impl FnMut(&SlotRecord),
) -> Result<MetricsAccumulator> {
    cfg.validate()?;
    let n = cfg.subsystems.len();
    let seeds = SeedSplitter::new(cfg.seed);
    let offsets = draw_offsets(cfg, &seeds, rep);
    let calendars: Vec<SamplingCalendar> = cfg
        .subsystems
        .iter()
        .zip(&offsets)
        .map(|(s, &o)| SamplingCalendar::new(s.period, o))
        .collect::<Result<_>>()?;

    let mut channel = LossProcess::new(cfg.channel, n, &seeds, rep)?;
    let mut penalties = PenaltyTable::new(&cfg.models());
    let mut scheduler = Scheduler::new(cfg.policy, cfg.horizon, cfg.dedup).with_rng(seeds.stream(
        rep,
        Purpose::Policy,
        0,
    ));
    let mut loops: Vec<Loop> = cfg
        .subsystems
        .iter()
        .zip(&calendars)
        .enumerate()
        .map(|(i, (s, cal))| {
            Loop::new(
                s.model.clone(),
                seeds.stream(rep, Purpose::PlantNoise, i as u32),
                cal.cold_start(),
            )
        })
        .collect();

    let mut state = TimingState::initial(&calendars);
    let mut metrics = MetricsAccumulator::new(n);

    for t in 0..cfg.slots as Slot {
        debug_assert_eq!(state.t, t);
        channel.redraw_if_boundary(t);

        for (i, cal) in calendars.iter().enumerate() {
            if cal.contains(t) {
                loops[i].sampling_event(cal, state.utilized[i], &mut metrics.subsystems[i])?;
            }
        }
        if loops.iter().any(Loop::is_diverged) {
            metrics.diverged_at = Some(t);
            break;
        }

        let ages = state.ages(&calendars);
        debug_assert!(ages.iter().all(|&a| a >= 1));
        for (i, m) in metrics.subsystems.iter_mut().enumerate() {
            m.sq_error_sum += loops[i].sq_error;
            m.aoi_sum += ages[i] as f64;
        }

        let max_age = *ages.iter().max().unwrap_or(&1) as usize;
        penalties.reserve(max_age + cfg.horizon + 2);
        let decision = scheduler.decide(&state, &calendars, &penalties, channel.observe())?;
        metrics.nodes_sum += decision.nodes_expanded;

        let success = match decision.action {
            Action::Transmit(i) => {
                let ok = channel.transmit(i, t);
                metrics.subsystems[i].transmissions += 1;
                if ok {
                    metrics.subsystems[i].successes += 1;
                    loops[i].received_payload = loops[i].sensor_payload.clone();
                }
                ok
            }
            Action::Idle => {
                metrics.idle_slots += 1;
                false
            }
        };
        metrics.slots += 1;

        observe(&SlotRecord {
            t,
            state: state.clone(),
            loss: channel.observe().to_vec(),
            action: decision.action,
            success,
            ages,
            sq_errors: loops.iter().map(|l| l.sq_error).collect(),
            nodes: decision.nodes_expanded,
        });
        state.step(&calendars, decision.action, success)?;
    }
    Ok(metrics)
}

/// Mean and normal-approximation 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub ci_half: f64,
}

pub fn aggregate(samples: &[f64]) -> Result<Estimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewRuns(n));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let stderr = (var / n as f64).sqrt();
    Ok(Estimate {
        mean,
        stderr,
        ci_half: 1.96 * stderr,
    })
}

/// Across-repetition statistics of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub mse: Vec<Estimate>,
    pub aoi: Vec<Estimate>,
    pub network_mse: Estimate,
    pub network_aoi: Estimate,
    pub nodes: Estimate,
    pub runs: usize,
    pub diverged: usize,
}

/// Summarizes the runs that did not diverge.
pub fn summarize(runs: &[MetricsAccumulator]) -> Result<RunSummary> {
    let ok: Vec<&MetricsAccumulator> = runs.iter().filter(|r| !r.diverged()).collect();
    let n = ok.first().map_or(0, |r| r.subsystems.len());
    let collect = |f: &dyn Fn(&MetricsAccumulator) -> f64| {
        aggregate(&ok.iter().map(|r| f(r)).collect::<Vec<_>>())
    };
    Ok(RunSummary {
        mse: (0..n)
            .map(|i| collect(&|r| r.mse(i)))
            .collect::<Result<_>>()?,
        aoi: (0..n)
            .map(|i| collect(&|r| r.aoi(i)))
            .collect::<Result<_>>()?,
        network_mse: collect(&|r| r.network_mse())?,
        network_aoi: collect(&|r| r.network_aoi())?,
        nodes: collect(&|r| r.nodes_mean())?,
        runs: runs.len(),
        diverged: runs.len() - ok.len(),
    })
}

/// The evaluation scenario: three scalar loops `A = 1.0, 1.25, 1.5`, `B = 1`,
/// `Σ = 1`, `Q = 1`, `R = 0`, sampled every 3 slots over a link with loss
/// `N(0.3, 0.2²)` clamped to `[0, 1]` and redrawn every 30 slots.
pub fn evaluation_scenario(horizon: usize, slots: u64, repetitions: u64, seed: u64) -> SimConfig {
    let subsystems = [1.0, 1.25, 1.5]
        .iter()
        .map(|&a| SubsystemSpec {
            model: PlantModel::scalar(a, 1.0, 1.0, 1.0, 0.0).expect("deadbeat synthesis"),
            period: 3,
        })
        .collect();
    SimConfig {
        subsystems,
        horizon,
        policy: Policy::FiniteHorizon,
        dedup: Dedup::default(),
        slots,
        repetitions,
        channel: ChannelParams {
            mean: 0.3,
            std_dev: 0.2,
            coherence: 30,
        },
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_loop(a: f64, loss: f64, slots: u64) -> SimConfig {
        SimConfig {
            subsystems: vec![SubsystemSpec {
                model: PlantModel::scalar(a, 1.0, 1.0, 1.0, 0.0).unwrap(),
                period: 1,
            }],
            horizon: 1,
            policy: Policy::FiniteHorizon,
            dedup: Dedup::Parent,
            slots,
            repetitions: 1,
            channel: ChannelParams {
                mean: loss,
                std_dev: 0.0,
                coherence: 10,
            },
            seed: 42,
        }
    }

    #[test]
    fn perfect_link_keeps_age_one_and_error_at_noise_level() {
        let cfg = single_loop(1.5, 0.0, 20_000);
        let mut late_ages = Vec::new();
        let m = run_traced(&cfg, 0, |r| {
            if r.t >= 2 {
                late_ages.push(r.ages[0]);
            }
        })
        .unwrap();
        assert!(late_ages.iter().all(|&a| a == 1));
        assert_eq!(m.subsystems[0].transmissions, m.subsystems[0].successes);
        assert!((m.mse(0) - 1.0).abs() < 0.05, "mse {}", m.mse(0));
        assert!(!m.diverged());
    }

    #[test]
    fn dead_link_starves_and_diverges() {
        let cfg = single_loop(1.5, 1.0, 20_000);
        let mut ages = Vec::new();
        let m = run_traced(&cfg, 0, |r| ages.push(r.ages[0])).unwrap();
        assert_eq!(m.successes(), 0);
        assert!(ages.windows(2).all(|w| w[1] == w[0] + 1));
        assert!(m.diverged());

        let stable = single_loop(1.0, 1.0, 500);
        let m = run(&stable, 0).unwrap();
        assert!(!m.diverged());
        assert_eq!(m.aoi(0), (1..=500).sum::<u64>() as f64 / 500.0);
    }

    #[test]
    fn same_seed_same_metrics() {
        let cfg = evaluation_scenario(2, 600, 1, 5);
        assert_eq!(run(&cfg, 3).unwrap(), run(&cfg, 3).unwrap());
        assert_ne!(run(&cfg, 3).unwrap(), run(&cfg, 4).unwrap());
    }

    #[test]
    fn slots_are_conserved() {
        for policy in Policy::ALL {
            let mut cfg = evaluation_scenario(2, 900, 1, 9);
            cfg.policy = policy;
            let m = run(&cfg, 0).unwrap();
            assert_eq!(m.transmissions() + m.idle_slots, m.slots);
            assert_eq!(m.slots, 900);
            for s in &m.subsystems {
                assert!(s.successes <= s.transmissions);
            }
        }
    }

    #[test]
    fn error_is_held_over_each_period() {
        let cfg = evaluation_scenario(1, 600, 1, 2);
        let seeds = SeedSplitter::new(cfg.seed);
        let offsets = draw_offsets(&cfg, &seeds, 0);
        let mut records = Vec::new();
        run_traced(&cfg, 0, |r| records.push(r.clone())).unwrap();
        for (i, &offset) in offsets.iter().enumerate() {
            let cal = SamplingCalendar::new(3, offset).unwrap();
            for w in records.windows(2) {
                if !cal.contains(w[1].t) {
                    assert_eq!(w[0].sq_errors[i], w[1].sq_errors[i]);
                }
            }
        }
    }

    #[test]
    fn age_trace_follows_sampling_events() {
        let cfg = evaluation_scenario(2, 3000, 1, 13);
        let seeds = SeedSplitter::new(cfg.seed);
        let offsets = draw_offsets(&cfg, &seeds, 0);
        let mut records = Vec::new();
        run_traced(&cfg, 0, |r| records.push(r.clone())).unwrap();
        for (i, &offset) in offsets.iter().enumerate() {
            let cal = SamplingCalendar::new(3, offset).unwrap();
            for w in records.windows(2) {
                let (prev, next) = (&w[0], &w[1]);
                let (a, b) = (prev.ages[i], next.ages[i]);
                if cal.contains(next.t) {
                    // no growth at a sampling slot; a drop needs a newly utilized packet
                    assert!(b <= a);
                    if b < a {
                        assert!(next.state.utilized[i] > prev.state.utilized[i]);
                    }
                } else if cal.contains(next.t - 1) {
                    assert_eq!(b, a + 1);
                } else {
                    assert_eq!(b, a);
                }
            }
        }
    }

    #[test]
    fn aggregate_examples() {
        let e = aggregate(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(e.ci_half, 0.0);
        let e = aggregate(&[1.0, 3.0]).unwrap();
        assert_eq!(e.mean, 2.0);
        assert!((e.stderr - 1.0).abs() < 1e-15);
        assert!((e.ci_half - 1.96).abs() < 1e-15);
        assert!(matches!(aggregate(&[1.0]), Err(Error::TooFewRuns(1))));
    }

    #[test]
    fn ci_shrinks_with_repetitions() {
        let cfg = evaluation_scenario(1, 300, 64, 21);
        let runs: Vec<f64> = (0..64)
            .map(|r| run(&cfg, r).unwrap().network_mse())
            .collect();
        // mean width over disjoint blocks of each size
        let widths: Vec<f64> = [4usize, 16, 64]
            .iter()
            .map(|&k| {
                let blocks: Vec<f64> = runs
                    .chunks(k)
                    .map(|c| aggregate(c).unwrap().ci_half)
                    .collect();
                blocks.iter().sum::<f64>() / blocks.len() as f64
            })
            .collect();
        assert!(widths[1] < widths[0] && widths[2] < widths[1], "{widths:?}");
        assert!(widths[2] / widths[0] < 0.6, "{widths:?}");
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = evaluation_scenario(1, 10, 1, 0);
        cfg.horizon = 0;
        assert!(run(&cfg, 0).is_err());
        let mut cfg = evaluation_scenario(1, 10, 1, 0);
        cfg.subsystems[0].period = 0;
        assert!(run(&cfg, 0).is_err());
    }
}
