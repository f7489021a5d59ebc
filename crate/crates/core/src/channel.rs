//! Block-fading Bernoulli loss process shared by all links.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::seeding::{Purpose, SeedSplitter};
use crate::timing::Slot;

/// Parameters of the per-link rectified Gaussian loss probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Mean of the Gaussian before clamping.
    pub mean: f64,
    /// Standard deviation of the Gaussian before clamping.
    pub std_dev: f64,
    /// Coherence time in slots.
    pub coherence: u64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() {
            return Err(invalid("channel.mean", "must be finite"));
        }
        if !self.std_dev.is_finite() || self.std_dev < 0.0 {
            return Err(invalid("channel.std_dev", "must be finite and >= 0"));
        }
        if self.coherence == 0 {
            return Err(invalid("channel.coherence", "must be >= 1 slot"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LossProcess {
    params: ChannelParams,
    normal: Normal<f64>,
    loss: Vec<f64>,
    fading: Vec<ChaCha8Rng>,
    outcomes: Vec<ChaCha8Rng>,
    block: Option<i64>,
}

impl LossProcess {
    pub fn new(
        params: ChannelParams,
        links: usize,
        seeds: &SeedSplitter,
        rep: u64,
    ) -> Result<Self> {
        params.validate()?;
        let normal = Normal::new(params.mean, params.std_dev)
            .map_err(|e| invalid("channel.std_dev", e.to_string()))?;
        let fading = (0..links)
            .map(|i| seeds.stream(rep, Purpose::Fading, i as u32))
            .collect();
        let outcomes = (0..links)
            .map(|i| seeds.stream(rep, Purpose::Outcome, i as u32))
            .collect();
        Ok(Self {
            params,
            normal,
            loss: vec![params.mean.clamp(0.0, 1.0); links],
            fading,
            outcomes,
            block: None,
        })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn links(&self) -> usize {
        self.loss.len()
    }

    /// Draws fresh loss probabilities when `t` starts a coherence block.
    /// Blocks are anchored at slot 0 for every link.
    pub fn redraw_if_boundary(&mut self, t: Slot) {
        let tc = self.params.coherence as i64;
        let block = t.div_euclid(tc);
        if t.rem_euclid(tc) == 0 && self.block != Some(block) {
            for (p, rng) in self.loss.iter_mut().zip(self.fading.iter_mut()) {
                *p = self.normal.sample(rng).clamp(0.0, 1.0);
            }
            self.block = Some(block);
        }
    }

    /// Outcome of a transmission by link `i` in slot `t`: `true` with
    /// probability `1 - p_i(t)`.
    ///
    /// The uniform variate is addressed by `(link, slot)` inside the link's
    /// stream, so outcomes do not depend on which slots were scheduled before.
    pub fn transmit(&mut self, i: usize, t: Slot) -> bool {
        let rng = &mut self.outcomes[i];
        rng.set_word_pos(2 * t.max(0) as u128);
        let u: f64 = rng.random();
        u < 1.0 - self.loss[i]
    }

    /// Current loss probabilities; the coherence time is not exposed.
    pub fn observe(&self) -> &[f64] {
        &self.loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn process(mean: f64, std_dev: f64, coherence: u64, links: usize, seed: u64) -> LossProcess {
        let params = ChannelParams {
            mean,
            std_dev,
            coherence,
        };
        LossProcess::new(params, links, &SeedSplitter::new(seed), 0).unwrap()
    }

    /// Mean of clamp(X, 0, 1) for X ~ N(mu, sigma^2) by composite Simpson
    /// integration of the density over [0, 1] plus the upper tail mass.
    fn rectified_mean(mu: f64, sigma: f64) -> f64 {
        let pdf = |x: f64| {
            (-(x - mu).powi(2) / (2.0 * sigma * sigma)).exp()
                / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let simpson = |f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut s = f(a) + f(b);
            for k in 1..n {
                let x = a + k as f64 * h;
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            s * h / 3.0
        };
        let inside = simpson(&|x| x * pdf(x), 0.0, 1.0, 20_000);
        let upper = simpson(&pdf, 1.0, mu + 12.0 * sigma, 200_000);
        inside + upper
    }

    #[test]
    fn rejects_negative_spread() {
        let params = ChannelParams {
            mean: 0.3,
            std_dev: -0.1,
            coherence: 30,
        };
        assert!(LossProcess::new(params, 1, &SeedSplitter::new(0), 0).is_err());
        let params = ChannelParams {
            mean: 0.3,
            std_dev: 0.1,
            coherence: 0,
        };
        assert!(LossProcess::new(params, 1, &SeedSplitter::new(0), 0).is_err());
    }

    #[test]
    fn degenerate_gaussian_is_constant() {
        let mut ch = process(0.3, 0.0, 5, 3, 1);
        for t in 0..100 {
            ch.redraw_if_boundary(t);
            assert!(ch.observe().iter().all(|&p| p == 0.3));
        }
    }

    #[test]
    fn clamps_below_zero() {
        let mut ch = process(-1.0, 0.01, 1, 2, 2);
        for t in 0..1000 {
            ch.redraw_if_boundary(t);
            assert!(ch.observe().iter().all(|&p| p == 0.0));
        }
    }

    #[test]
    fn rectified_mean_matches_integration() {
        let expected = rectified_mean(0.3, 0.2);
        let mut ch = process(0.3, 0.2, 1, 1, 3);
        let n = 1_000_000;
        let mut sum = 0.0;
        for t in 0..n {
            ch.redraw_if_boundary(t);
            let p = ch.observe()[0];
            assert!((0.0..=1.0).contains(&p));
            sum += p;
        }
        let mean = sum / n as f64;
        assert!((mean - expected).abs() < 0.005, "mean {mean} vs {expected}");
    }

    #[test]
    fn outcome_extremes() {
        let mut never_lost = process(0.0, 0.0, 10, 1, 4);
        let mut always_lost = process(1.0, 0.0, 10, 1, 4);
        for t in 0..1000 {
            never_lost.redraw_if_boundary(t);
            always_lost.redraw_if_boundary(t);
            assert!(never_lost.transmit(0, t));
            assert!(!always_lost.transmit(0, t));
        }
    }

    #[test]
    fn success_frequency() {
        let mut ch = process(0.3, 0.0, 1000, 1, 5);
        ch.redraw_if_boundary(0);
        let n = 1_000_000i64;
        let ok = (0..n).filter(|&t| ch.transmit(0, t)).count() as f64 / n as f64;
        assert!((ok - 0.7).abs() < 0.002, "{ok}");
    }

    #[test]
    fn outcomes_are_addressed_by_slot() {
        let mut a = process(0.5, 0.0, 10, 2, 6);
        let mut b = process(0.5, 0.0, 10, 2, 6);
        a.redraw_if_boundary(0);
        b.redraw_if_boundary(0);
        let _ = a.transmit(0, 3);
        let _ = a.transmit(0, 4);
        assert_eq!(a.transmit(0, 7), b.transmit(0, 7));
    }

    #[test]
    fn blocks_are_constant_and_observations_sized() {
        let mut ch = process(0.3, 0.2, 30, 3, 7);
        let mut block_start = Vec::new();
        let mut changed = false;
        for t in 0..3000 {
            ch.redraw_if_boundary(t);
            assert_eq!(ch.observe().len(), 3);
            if t % 30 == 0 {
                if !block_start.is_empty() && block_start != ch.observe() {
                    changed = true;
                }
                block_start = ch.observe().to_vec();
            }
            assert_eq!(ch.observe(), block_start.as_slice());
        }
        assert!(changed);
    }

    #[test]
    fn reproducible_from_seed() {
        let run = |seed| {
            let mut ch = process(0.3, 0.2, 7, 2, seed);
            (0..500)
                .map(|t| {
                    ch.redraw_if_boundary(t);
                    (ch.observe().to_vec(), ch.transmit((t % 2) as usize, t))
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn links_fade_independently() {
        let mut ch = process(0.3, 0.2, 1, 2, 8);
        let blocks = 10_000;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for t in 0..blocks {
            ch.redraw_if_boundary(t);
            xs.push(ch.observe()[0]);
            ys.push(ch.observe()[1]);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (mx, my) = (mean(&xs), mean(&ys));
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 0.02, "correlation {corr}");
    }
}
