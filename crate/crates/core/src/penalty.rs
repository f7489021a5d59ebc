//! Age penalty `g(Δ) = Σ_{r=1}^{Δ-1} tr((A')^r A^r Σ)` and the network state cost.

use nalgebra::DMatrix;

use crate::control::PlantModel;
use crate::error::{Error, Result};
use crate::timing::{aoi, SamplingCalendar, TimingState};

/// Memoized prefix sums of one sub-system's penalty terms.
#[derive(Debug, Clone)]
struct PenaltyCurve {
    a: DMatrix<f64>,
    noise_cov: DMatrix<f64>,
    /// `values[Δ - 1] = g(Δ)`
    values: Vec<f64>,
    /// `A^r` for the next term to append, `r = values.len()`.
    power: DMatrix<f64>,
}

impl PenaltyCurve {
    fn new(model: &PlantModel) -> Self {
        Self {
            a: model.a.clone(),
            noise_cov: model.noise_cov.clone(),
            values: vec![0.0],
            power: model.a.clone(),
        }
    }

    fn term(&self, power: &DMatrix<f64>) -> f64 {
        (power.transpose() * power * &self.noise_cov).trace()
    }

    fn grow_to(&mut self, age: usize) {
        while self.values.len() < age {
            let last = *self.values.last().expect("g(1) is always present");
            let next = last + self.term(&self.power);
            self.values.push(next);
            self.power = &self.power * &self.a;
        }
    }

    fn value(&self, age: usize) -> f64 {
        if let Some(&v) = self.values.get(age - 1) {
            return v;
        }
        // past the memoized range: continue the sum without storing it
        let mut sum = *self.values.last().expect("g(1) is always present");
        let mut power = self.power.clone();
        for _ in self.values.len()..age {
            sum += self.term(&power);
            power = &power * &self.a;
        }
        sum
    }
}

/// Per-sub-system age penalties.
///
/// Lookups inside the filled range are O(1); [`PenaltyTable::reserve`] extends
/// the range, and lookups beyond it are still exact but recompute the tail.
#[derive(Debug, Clone)]
pub struct PenaltyTable {
    curves: Vec<PenaltyCurve>,
}

impl PenaltyTable {
    pub const DEFAULT_RESERVE: usize = 64;

    pub fn new(models: &[PlantModel]) -> Self {
        let mut table = Self {
            curves: models.iter().map(PenaltyCurve::new).collect(),
        };
        table.reserve(Self::DEFAULT_RESERVE);
        table
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Memoizes `g(Δ)` for every sub-system and `Δ <= max_age`.
    pub fn reserve(&mut self, max_age: usize) {
        for curve in &mut self.curves {
            curve.grow_to(max_age);
        }
    }

    pub fn g(&self, i: usize, age: u64) -> Result<f64> {
        if age < 1 {
            return Err(Error::InvalidAge(age));
        }
        Ok(self.lookup(i, age))
    }

    /// `g` without the age check; `age` must be at least 1.
    #[inline]
    pub fn lookup(&self, i: usize, age: u64) -> f64 {
        debug_assert!(age >= 1);
        self.curves[i].value(age as usize)
    }
}

/// `C(s) = Σ_i g_i(Δ_i(t))` with ages taken from the state's slot.
pub fn state_cost(
    s: &TimingState,
    calendars: &[SamplingCalendar],
    penalties: &PenaltyTable,
) -> f64 {
    calendars
        .iter()
        .zip(&s.utilized)
        .enumerate()
        .map(|(i, (cal, &tu))| penalties.lookup(i, aoi(cal, s.t, tu).max(1)))
        .sum()
}
