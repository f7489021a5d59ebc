//! LTI plants, LQR gain synthesis and the remote estimation-based controller.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};

pub const RICCATI_TOL: f64 = 1e-10;
pub const RICCATI_MAX_ITER: usize = 1_000_000;

/// State magnitude beyond which a run is declared diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e150;

/// Solves the discrete-time algebraic Riccati equation by fixed-point
/// iteration from `P = Q` and returns `(P, L*)` with
/// `L* = (R + B'PB)^-1 B'PA`.
pub fn solve_riccati(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut p = q.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let next = riccati_rhs(a, b, q, r, &p)?;
        residual = (&next - &p).amax();
        p = next;
        if residual < tol {
            let gain = feedback_gain(a, b, r, &p)?;
            return Ok((p, gain));
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(Error::RiccatiNonConvergence {
        iterations: max_iter,
        residual,
    })
}

/// `Q + A'(P - PB(R + B'PB)^-1 B'P)A`
pub fn riccati_rhs(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let pb = p * b;
    let s = r + b.transpose() * &pb;
    let s_inv = s.try_inverse().ok_or(Error::SingularGain)?;
    let inner = p - &pb * s_inv * pb.transpose();
    Ok(q + a.transpose() * inner * a)
}

pub fn feedback_gain(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let s = r + b.transpose() * p * b;
    let s_inv = s.try_inverse().ok_or(Error::SingularGain)?;
    Ok(s_inv * b.transpose() * p * a)
}

/// Parameters of one control loop together with its synthesized gain.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub noise_cov: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    riccati: DMatrix<f64>,
    gain: DMatrix<f64>,
    noise_factor: DMatrix<f64>,
}

fn check_square(name: &'static str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: name,
            expected: format!("{n}x{n}"),
            actual: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

fn check_symmetric_psd(name: &'static str, m: &DMatrix<f64>) -> Result<()> {
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * m.amax().max(1.0) {
        return Err(invalid(name, "must be symmetric"));
    }
    let eig = SymmetricEigen::new(m.clone());
    if eig
        .eigenvalues
        .iter()
        .any(|&l| l < -1e-12 * m.amax().max(1.0))
    {
        return Err(invalid(name, "must be positive semi-definite"));
    }
    Ok(())
}

impl PlantModel {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        noise_cov: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
    ) -> Result<Self> {
        Self::with_tolerance(a, b, noise_cov, q, r, RICCATI_TOL, RICCATI_MAX_ITER)
    }

    pub fn with_tolerance(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        noise_cov: DMatrix<f64>,
        q: DMatrix<f64>,
        r: DMatrix<f64>,
        tol: f64,
        max_iter: usize,
    ) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        if n == 0 || m == 0 {
            return Err(invalid("a/b", "dimensions must be positive"));
        }
        check_square("a", &a, n)?;
        if b.nrows() != n {
            return Err(Error::DimensionMismatch {
                context: "b",
                expected: format!("{n}x{m}"),
                actual: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
        check_square("noise_cov", &noise_cov, n)?;
        check_square("q", &q, n)?;
        check_square("r", &r, m)?;
        check_symmetric_psd("noise_cov", &noise_cov)?;
        check_symmetric_psd("q", &q)?;
        check_symmetric_psd("r", &r)?;

        let (riccati, gain) = solve_riccati(&a, &b, &q, &r, tol, max_iter)?;
        let eig = SymmetricEigen::new(noise_cov.clone());
        let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let noise_factor = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals);
        Ok(Self {
            a,
            b,
            noise_cov,
            q,
            r,
            riccati,
            gain,
            noise_factor,
        })
    }

    /// Scalar plant `x' = a x + b u + w`, `w ~ N(0, sigma2)`.
    pub fn scalar(a: f64, b: f64, sigma2: f64, q: f64, r: f64) -> Result<Self> {
        let s = |v| DMatrix::from_element(1, 1, v);
        Self::new(s(a), s(b), s(sigma2), s(q), s(r))
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn riccati(&self) -> &DMatrix<f64> {
        &self.riccati
    }

    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    /// Maps a standard normal vector to a `N(0, Σ)` draw.
    pub fn shape_noise(&self, standard: &DVector<f64>) -> DVector<f64> {
        &self.noise_factor * standard
    }

    pub fn control_input(&self, x_hat: &DVector<f64>) -> DVector<f64> {
        -(&self.gain * x_hat)
    }
}

/// True plant state at sampling period `k` plus every input applied so far
/// (`inputs[j]` is `u[j]`).
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub x: DVector<f64>,
    pub k: i64,
    pub inputs: Vec<DVector<f64>>,
}

impl PlantState {
    pub fn new(x0: DVector<f64>) -> Self {
        Self {
            x: x0,
            k: 0,
            inputs: Vec::new(),
        }
    }

    pub fn is_diverged(&self) -> bool {
        self.x
            .iter()
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
    }
}

/// `x' = A x + B u + w`; records `u` in the input history.
pub fn plant_step(
    model: &PlantModel,
    state: PlantState,
    u: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<PlantState> {
    let n = model.state_dim();
    let m = model.input_dim();
    if state.x.len() != n || w.len() != n || u.len() != m {
        return Err(Error::DimensionMismatch {
            context: "plant_step",
            expected: format!("x,w in R^{n}, u in R^{m}"),
            actual: format!(
                "x in R^{}, w in R^{}, u in R^{}",
                state.x.len(),
                w.len(),
                u.len()
            ),
        });
    }
    let x = &model.a * &state.x + &model.b * u + w;
    let mut inputs = state.inputs;
    inputs.push(u.clone());
    Ok(PlantState {
        x,
        k: state.k + 1,
        inputs,
    })
}

/// Minimum-MSE estimate `A^Δ x[k-Δ] + Σ_{q=1..Δ} A^(q-1) B u[k-q]` from a
/// packet that is `age` periods old. `inputs` is chronological and ends with
/// `u[k-1]`.
pub fn estimate(
    model: &PlantModel,
    payload: &DVector<f64>,
    age: u64,
    inputs: &[DVector<f64>],
) -> Result<DVector<f64>> {
    let age = age as usize;
    if inputs.len() < age {
        return Err(Error::InsufficientHistory {
            needed: age,
            available: inputs.len(),
        });
    }
    // Horner form: apply the recorded inputs oldest first.
    let mut x_hat = payload.clone();
    for u in &inputs[inputs.len() - age..] {
        x_hat = &model.a * x_hat + &model.b * u;
    }
    Ok(x_hat)
}

/// `(x - x̂)'(x - x̂)`
pub fn estimation_error(x: &DVector<f64>, x_hat: &DVector<f64>) -> f64 {
    (x - x_hat).norm_squared()
}

/// Controller-side estimator memory.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    pub x_hat: DVector<f64>,
    /// Payload `x[k-Δ]` of the packet last utilized, if any.
    pub payload: Option<DVector<f64>>,
    /// Age of that packet when it was utilized.
    pub age_at_utilization: u64,
}

impl EstimatorState {
    /// Zero estimate until the first packet is utilized.
    pub fn cold(n: usize) -> Self {
        Self {
            x_hat: DVector::zeros(n),
            payload: None,
            age_at_utilization: 0,
        }
    }

    /// Rebuilds the estimate from a newly utilized packet.
    pub fn utilize(
        &mut self,
        model: &PlantModel,
        payload: DVector<f64>,
        age: u64,
        inputs: &[DVector<f64>],
    ) -> Result<()> {
        self.x_hat = estimate(model, &payload, age, inputs)?;
        self.payload = Some(payload);
        self.age_at_utilization = age;
        Ok(())
    }

    /// One-period open-loop prediction `x̂ ← A x̂ + B u` used when no new
    /// packet arrived; identical to re-evaluating the estimate with age + 1.
    pub fn predict(&mut self, model: &PlantModel, last_input: &DVector<f64>) {
        self.x_hat = &model.a * &self.x_hat + &model.b * last_input;
    }
}

/// Running LQG cost `Σ x'Qx + u'Ru` over sampling periods.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LqgCost {
    pub sum: f64,
    pub periods: u64,
}

impl LqgCost {
    pub fn accumulate(
        &mut self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        q: &DMatrix<f64>,
        r: &DMatrix<f64>,
    ) {
        self.sum += (x.transpose() * q * x)[0] + (u.transpose() * r * u)[0];
        self.periods += 1;
    }

    pub fn average(&self) -> f64 {
        if self.periods == 0 {
            0.0
        } else {
            self.sum / self.periods as f64
        }
    }
}
