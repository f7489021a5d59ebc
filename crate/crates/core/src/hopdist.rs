//! Age distribution over a tandem of lossy hops.
//!
//! Each hop retransmits until success, so hop `j` adds a geometric delay with
//! `Pr[δ] = (1 - p_j) p_j^δ`; the end-to-end age is their sum.

use crate::error::{invalid, Error, Result};

/// Minimum pairwise separation of loss probabilities for the closed forms.
pub const SINGULARITY_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct HopChain {
    loss: Vec<f64>,
}

impl HopChain {
    pub fn new(loss: Vec<f64>) -> Result<Self> {
        if loss.is_empty() {
            return Err(invalid("loss", "a chain needs at least one hop"));
        }
        if let Some(p) = loss.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(invalid("loss", format!("{p} is outside [0, 1)")));
        }
        Ok(Self { loss })
    }

    pub fn loss(&self) -> &[f64] {
        &self.loss
    }

    pub fn hops(&self) -> usize {
        self.loss.len()
    }

    fn check_separation(&self) -> Result<()> {
        for (j, &a) in self.loss.iter().enumerate() {
            for &b in &self.loss[j + 1..] {
                if (a - b).abs() < SINGULARITY_GUARD {
                    return Err(Error::NearSingular { a, b });
                }
            }
        }
        Ok(())
    }
}

fn geometric(p: f64, delta: u32) -> f64 {
    (1.0 - p) * p.powi(delta as i32)
}

/// `(x^{k} - y^{k}) / (x - y)` for separated `x`, `y`.
fn power_quotient(x: f64, y: f64, k: u32) -> f64 {
    (x.powi(k as i32) - y.powi(k as i32)) / (x - y)
}

/// Closed-form PMF for one to three hops.
///
/// Fails with [`Error::NearSingular`] when two loss probabilities are closer
/// than [`SINGULARITY_GUARD`]; use [`pmf`] or [`pmf_oracle`] there.
pub fn pmf_closed(chain: &HopChain, delta: u32) -> Result<f64> {
    chain.check_separation()?;
    let k = delta + 1;
    match *chain.loss() {
        [p1] => Ok(geometric(p1, delta)),
        [p1, p2] => Ok((1.0 - p1) * (1.0 - p2) * power_quotient(p2, p1, k)),
        [p1, p2, p3] => {
            let scale = (1.0 - p1) * (1.0 - p2) * (1.0 - p3) / (p2 - p1);
            let sum = -p1 * power_quotient(p3, p1, k) + p2 * power_quotient(p3, p2, k);
            Ok(scale * sum)
        }
        _ => Err(Error::UnsupportedHops(chain.hops())),
    }
}

/// Direct convolution of the per-hop geometric PMFs. O(n·δ²).
pub fn pmf_oracle(chain: &HopChain, delta: u32) -> f64 {
    let len = delta as usize + 1;
    let mut acc: Vec<f64> = (0..len as u32)
        .map(|d| geometric(chain.loss[0], d))
        .collect();
    for &p in &chain.loss[1..] {
        acc = (0..len)
            .map(|d| (0..=d).map(|s| acc[s] * geometric(p, (d - s) as u32)).sum())
            .collect();
    }
    acc[delta as usize]
}

/// Closed form where it applies, convolution otherwise.
pub fn pmf(chain: &HopChain, delta: u32) -> f64 {
    pmf_closed(chain, delta).unwrap_or_else(|_| pmf_oracle(chain, delta))
}

/// `Pr[Δ = δ]` for `δ = 0..=max_delta`, via `q_n(δ) = p_n q_n(δ-1) + (1-p_n) q_{n-1}(δ)`.
pub fn pmf_series(chain: &HopChain, max_delta: u32) -> Vec<f64> {
    let len = max_delta as usize + 1;
    let mut q = vec![0.0; len];
    q[0] = 1.0; // zero hops: age 0 with certainty
    for &p in &chain.loss {
        let mut prev = 0.0;
        for v in q.iter_mut() {
            prev = p * prev + (1.0 - p) * *v;
            *v = prev;
        }
    }
    q
}

/// Upper bound on `Pr[Δ > k]`: some hop must have taken more than `k / n` retries.
pub fn tail_bound(chain: &HopChain, k: u64) -> f64 {
    let n = chain.hops() as u64;
    let exponent = (k + 1).div_ceil(n);
    chain
        .loss
        .iter()
        .map(|&p| p.powf(exponent as f64))
        .sum::<f64>()
        .min(1.0)
}

/// `E[Δ]` from the PMF, truncated once the Cauchy-Schwarz bound on the
/// neglected tail `E[Δ·1{Δ>K}]` drops below `tail_tol`.
pub fn mean_age(chain: &HopChain, tail_tol: f64) -> Result<f64> {
    if tail_tol.is_nan() || tail_tol <= 0.0 {
        return Err(invalid("tail_tol", "must be positive"));
    }
    let second_moment: f64 = {
        let means: Vec<f64> = chain.loss.iter().map(|p| p / (1.0 - p)).collect();
        let var: f64 = chain.loss.iter().map(|p| p / ((1.0 - p) * (1.0 - p))).sum();
        let mean: f64 = means.iter().sum();
        var + mean * mean
    };
    let mut k: u64 = 16;
    while (second_moment * tail_bound(chain, k)).sqrt() >= tail_tol {
        k *= 2;
    }
    let series = pmf_series(chain, k as u32);
    Ok(series.iter().enumerate().map(|(d, p)| d as f64 * p).sum())
}
