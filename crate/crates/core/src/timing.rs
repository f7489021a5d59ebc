//! Slot timing: sampling calendars, the `(t_g, t_r, t_u)` network state and
//! the age of information derived from it.
//!
//! All timestamps are absolute slot indices. A sub-system's sensor samples at
//! every slot of its calendar; a packet transmitted in slot `t` is available
//! at the controller in slot `t + 1` and is utilized at the next sampling
//! event.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{invalid, Error, Result};

pub type Slot = i64;

/// Floor division toward negative infinity (`d > 0`).
pub fn floor_div(n: i64, d: i64) -> i64 {
    n.div_euclid(d)
}

/// Ceiling division toward positive infinity (`d > 0`).
pub fn ceil_div(n: i64, d: i64) -> i64 {
    -(-n).div_euclid(d)
}

/// Periodic sampling schedule of one sub-system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingCalendar {
    period: i64,
    offset: i64,
}

impl SamplingCalendar {
    pub fn new(period: i64, offset: i64) -> Result<Self> {
        if period < 1 {
            return Err(invalid("period", format!("must be >= 1, got {period}")));
        }
        if !(0..period).contains(&offset) {
            return Err(invalid(
                "offset",
                format!("must lie in [0, {period}), got {offset}"),
            ));
        }
        Ok(Self { period, offset })
    }

    pub fn period(&self) -> i64 {
        self.period
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Whether a sampling event happens in slot `t`.
    pub fn contains(&self, t: Slot) -> bool {
        t >= self.offset && (t - self.offset) % self.period == 0
    }

    /// Sampling-period index `k(t)`; negative before the first sampling event.
    pub fn sampling_index(&self, t: Slot) -> i64 {
        floor_div(t - self.offset, self.period)
    }

    /// First slot of sampling period `k`.
    pub fn period_start(&self, k: i64) -> Slot {
        self.offset + k * self.period
    }

    /// Timestamp every field of the state holds before the first sample.
    pub fn cold_start(&self) -> Slot {
        self.offset - self.period
    }
}

/// Age of information in sampling periods: `ceil((t - t_u) / D)`.
pub fn aoi(cal: &SamplingCalendar, t: Slot, t_u: Slot) -> u64 {
    let age = ceil_div(t - t_u, cal.period());
    debug_assert!(age >= 0, "utilization time {t_u} lies after slot {t}");
    age.max(0) as u64
}

/// A scheduling decision for one slot.
///
/// The derived ordering is the tie-break order: lower sub-system index first,
/// idle last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Transmit(usize),
    Idle,
}

impl Action {
    pub fn subsystem(&self) -> Option<usize> {
        match self {
            Action::Transmit(i) => Some(*i),
            Action::Idle => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // one-based, as sub-systems are named in reports
            Action::Transmit(i) => write!(f, "{}", i + 1),
            Action::Idle => write!(f, "idle"),
        }
    }
}

/// The network state `s(t) = [t_g t_r t_u]` at slot `t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimingState {
    pub t: Slot,
    pub generated: Vec<Slot>,
    pub received: Vec<Slot>,
    pub utilized: Vec<Slot>,
}

impl TimingState {
    /// State at slot 0 for the given calendars, with slot 0's sampling events
    /// already applied.
    pub fn initial(calendars: &[SamplingCalendar]) -> Self {
        let cold: Vec<Slot> = calendars.iter().map(SamplingCalendar::cold_start).collect();
        let mut state = Self {
            t: -1,
            generated: cold.clone(),
            received: cold.clone(),
            utilized: cold,
        };
        state.enter_next_slot(calendars);
        state
    }

    pub fn len(&self) -> usize {
        self.generated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generated.is_empty()
    }

    /// Sensor update for the slot `self.t + 1` being entered.
    pub fn advance_generation(&mut self, cal: &SamplingCalendar, i: usize) {
        let next = self.t + 1;
        if cal.contains(next) {
            self.generated[i] = next;
        }
    }

    /// Controller-side effect of slot `self.t`'s transmission for sub-system `i`.
    pub fn record_reception(&mut self, i: usize, scheduled: bool, success: bool) -> Result<()> {
        if success && !scheduled {
            return Err(Error::ProtocolViolation { subsystem: i + 1 });
        }
        if scheduled && success {
            self.received[i] = self.generated[i];
        }
        Ok(())
    }

    /// Controller utilization at the slot `self.t + 1` being entered; call after
    /// `record_reception` for slot `self.t`.
    pub fn utilize(&mut self, cal: &SamplingCalendar, i: usize) {
        let next = self.t + 1;
        if cal.contains(next) {
            self.utilized[i] = self.received[i];
        }
    }

    /// Generation and utilization updates for entering the next slot, then
    /// advances `t`.
    fn enter_next_slot(&mut self, calendars: &[SamplingCalendar]) {
        for (i, cal) in calendars.iter().enumerate() {
            self.advance_generation(cal, i);
            self.utilize(cal, i);
        }
        self.t += 1;
    }

    /// Full transition from slot `t` to `t + 1` given the slot's action and,
    /// when a sub-system was scheduled, its transmission outcome.
    pub fn step(
        &mut self,
        calendars: &[SamplingCalendar],
        action: Action,
        success: bool,
    ) -> Result<()> {
        match action {
            Action::Transmit(i) => self.record_reception(i, true, success)?,
            Action::Idle if success => {
                return Err(invalid("success", "idle slot cannot succeed"));
            }
            Action::Idle => {}
        }
        self.enter_next_slot(calendars);
        Ok(())
    }

    /// `{idle} ∪ {i : t_g_i > t_r_i}`, sub-systems in index order, idle last.
    pub fn admissible_actions(&self) -> Vec<Action> {
        let mut actions: Vec<Action> = (0..self.len())
            .filter(|&i| self.is_admissible(i))
            .map(Action::Transmit)
            .collect();
        actions.push(Action::Idle);
        actions
    }

    pub fn is_admissible(&self, i: usize) -> bool {
        self.generated[i] > self.received[i]
    }

    /// Per-slot age of information of every sub-system.
    pub fn ages(&self, calendars: &[SamplingCalendar]) -> Vec<u64> {
        calendars
            .iter()
            .zip(&self.utilized)
            .map(|(cal, &tu)| aoi(cal, self.t, tu))
            .collect()
    }

    /// Checks `t_u <= t_r <= t_g <= t` for every sub-system.
    pub fn is_ordered(&self) -> bool {
        (0..self.len()).all(|i| {
            self.utilized[i] <= self.received[i]
                && self.received[i] <= self.generated[i]
                && self.generated[i] <= self.t
        })
    }
}
