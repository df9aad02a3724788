//! On-the-fly first-harmonic filter `(2/T) int_0^T u(t) e^{-iwt} dt`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{Integrator, Observer, TimeGrid};

/// Below this `|w dt|` the moments are summed as a power series.
pub const SERIES_THRESHOLD: f64 = 2.0;

const PAR_CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quadrature {
    Trapezoid,
    Hermite,
}

impl Quadrature {
    /// Trapezoid for RK2, Hermite for RK4.
    pub fn for_integrator(integrator: Integrator) -> Self {
        match integrator {
            Integrator::Rk2 => Self::Trapezoid,
            Integrator::Rk4 => Self::Hermite,
        }
    }
}

/// `int_0^1 tau^k e^{-i theta tau} d tau` for `k = 0..=3`.
pub fn exp_moments(theta: f64) -> [Complex64; 4] {
    if theta.abs() < SERIES_THRESHOLD {
        moments_series(theta)
    } else {
        moments_recurrence(theta)
    }
}

// sum_j (-i theta)^j / (j! (k + j + 1))
fn moments_series(theta: f64) -> [Complex64; 4] {
    let mut mu = [Complex64::new(0.0, 0.0); 4];
    let z = Complex64::new(0.0, -theta);
    let mut term = Complex64::new(1.0, 0.0);
    for j in 0..80 {
        for (k, m) in mu.iter_mut().enumerate() {
            *m += term / (k + j + 1) as f64;
        }
        term *= z / (j + 1) as f64;
        if term.norm() < 1e-20 {
            break;
        }
    }
    mu
}

// Integration by parts: mu_k = (k mu_{k-1} - e^{-i theta}) / (i theta).
fn moments_recurrence(theta: f64) -> [Complex64; 4] {
    let mut mu = [Complex64::new(0.0, 0.0); 4];
    let it = Complex64::new(0.0, theta);
    let e = Complex64::from_polar(1.0, -theta);
    mu[0] = (1.0 - e) / it;
    for k in 1..4 {
        mu[k] = (k as f64 * mu[k - 1] - e) / it;
    }
    mu
}

/// `xi[d][j] = int_0^dt p_dj(s) e^{-iws} ds` with `p_0j` the value and `p_1j` the
/// derivative cubic Hermite basis at the left (`j = 0`) and right (`j = 1`) end.
pub fn hermite_weights(omega: f64, dt: f64) -> [[Complex64; 2]; 2] {
    let [m0, m1, m2, m3] = exp_moments(omega * dt);
    [
        [dt * (m0 - 3.0 * m2 + 2.0 * m3), dt * (3.0 * m2 - 2.0 * m3)],
        [dt * dt * (m1 - 2.0 * m2 + m3), dt * dt * (m3 - m2)],
    ]
}

/// Complex accumulator fed once per grid time `t_0, ..., t_M`.
#[derive(Debug, Clone)]
pub struct FilterAccumulator {
    quadrature: Quadrature,
    grid: TimeGrid,
    weights: [[Complex64; 2]; 2],
    acc: Vec<Complex64>,
    next: usize,
}

impl FilterAccumulator {
    pub fn new(quadrature: Quadrature, grid: &TimeGrid, ndofs: usize) -> Result<Self> {
        if grid.steps < 3 {
            return Err(Error::Filter(format!(
                "at least 3 steps per period are needed, got {}",
                grid.steps
            )));
        }
        Ok(Self {
            quadrature,
            grid: *grid,
            weights: hermite_weights(grid.omega, grid.dt),
            acc: vec![Complex64::new(0.0, 0.0); ndofs],
            next: 0,
        })
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    pub fn is_complete(&self) -> bool {
        self.next > self.grid.steps
    }

    /// `e^{-i w t_m}`, exact at the period grid points.
    fn phase(&self, m: usize) -> Complex64 {
        Complex64::from_polar(1.0, -2.0 * PI * (m % self.grid.steps) as f64 / self.grid.steps as f64)
    }

    /// Adds the contribution of `u_m` (and `rhs_m = Phi(t_m, u_m)` for Hermite).
    pub fn accumulate(&mut self, m: usize, u: &[f64], rhs: Option<&[f64]>) -> Result<()> {
        if m != self.next {
            return Err(Error::Filter(format!("expected step {}, got {m}", self.next)));
        }
        if u.len() != self.acc.len() {
            return Err(Error::DimensionMismatch { expected: self.acc.len(), got: u.len() });
        }
        let last = self.grid.steps;
        let zero = Complex64::new(0.0, 0.0);
        match self.quadrature {
            Quadrature::Trapezoid => {
                let w = if m == 0 || m == last { 0.5 } else { 1.0 };
                let cu = self.phase(m) * (w * self.grid.dt);
                self.acc
                    .par_chunks_mut(PAR_CHUNK)
                    .zip(u.par_chunks(PAR_CHUNK))
                    .for_each(|(a, x)| a.iter_mut().zip(x).for_each(|(ai, xi)| *ai += cu * xi));
            }
            Quadrature::Hermite => {
                let rhs = rhs.ok_or_else(|| Error::Filter("Hermite filter needs the right-hand side".into()))?;
                if rhs.len() != u.len() {
                    return Err(Error::DimensionMismatch { expected: u.len(), got: rhs.len() });
                }
                let [[v0, v1], [d0, d1]] = self.weights;
                let (mut cu, mut cr) = (zero, zero);
                if m < last {
                    let p = self.phase(m);
                    cu += v0 * p;
                    cr += d0 * p;
                }
                if m > 0 {
                    let p = self.phase(m - 1);
                    cu += v1 * p;
                    cr += d1 * p;
                }
                self.acc
                    .par_chunks_mut(PAR_CHUNK)
                    .zip(u.par_chunks(PAR_CHUNK).zip(rhs.par_chunks(PAR_CHUNK)))
                    .for_each(|(a, (x, r))| {
                        for i in 0..a.len() {
                            a[i] += cu * x[i] + cr * r[i];
                        }
                    });
            }
        }
        self.next += 1;
        Ok(())
    }

    /// Scales by `2/T` and returns the filtered field.
    pub fn finalize(self) -> Result<Vec<Complex64>> {
        if !self.is_complete() {
            return Err(Error::Filter(format!(
                "finalize after {} of {} samples",
                self.next,
                self.grid.steps + 1
            )));
        }
        let s = 2.0 / self.grid.period;
        Ok(self.acc.into_iter().map(|a| a * s).collect())
    }
}

impl Observer for FilterAccumulator {
    fn start(&mut self, _t0: f64, u0: &[f64], rhs: &[f64]) -> Result<()> {
        self.accumulate(0, u0, Some(rhs))
    }

    fn observe(&mut self, m: usize, _t: f64, u: &[f64], rhs: &[f64]) -> Result<()> {
        self.accumulate(m, u, Some(rhs))
    }
}
