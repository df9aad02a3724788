//! Explicit Runge-Kutta marching over one period.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dg::{DgOperator, Forcing};
use crate::error::{Error, Result};

/// Steps between finiteness checks of the state.
pub const DIVERGENCE_CHECK_INTERVAL: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Rk2,
    Rk4,
}

impl Integrator {
    /// The scheme paired with polynomial degree `q`.
    pub fn for_degree(q: usize) -> Result<Self> {
        match q {
            1 => Ok(Self::Rk2),
            3 => Ok(Self::Rk4),
            _ => Err(Error::UnsupportedDegree(q)),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Self::Rk2 => 2,
            Self::Rk4 => 4,
        }
    }

    /// Rejects mismatched degree/scheme pairs.
    pub fn check_pairing(self, q: usize) -> Result<()> {
        let expected = Self::for_degree(q)?;
        if expected == self {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "degree {q} must be paired with {expected:?}, got {self:?}"
            )))
        }
    }
}

/// CFL constant `c_q`.
pub fn cfl_constant(q: usize) -> Result<f64> {
    match q {
        1 => Ok(0.24),
        3 => Ok(0.12),
        _ => Err(Error::UnsupportedDegree(q)),
    }
}

/// Uniform grid `t_m = m dt`, `m = 0..=steps`, over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub omega: f64,
    pub period: f64,
    pub steps: usize,
    pub dt: f64,
}

impl TimeGrid {
    pub fn new(omega: f64, steps: usize) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "angular frequency must be positive, got {omega}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("time grid needs at least one step".into()));
        }
        let period = 2.0 * PI / omega;
        Ok(Self {
            omega,
            period,
            steps,
            dt: period / steps as f64,
        })
    }

    /// Smallest step count with `dt <= c_q min_K sqrt(mu_K eps_K) rho_K`.
    pub fn from_cfl(op: &DgOperator, omega: f64, cfl: f64) -> Result<Self> {
        if !(cfl > 0.0) {
            return Err(Error::InvalidParameter(format!("CFL constant must be positive, got {cfl}")));
        }
        let mesh = op.space().mesh();
        let bound = (0..mesh.num_elements())
            .map(|k| {
                let m = op.materials();
                cfl * (m.mu(k) * m.eps(k)).sqrt() * mesh.inradius(k)
            })
            .fold(f64::INFINITY, f64::min);
        let period = 2.0 * PI / omega;
        let mut steps = (period / bound).ceil() as usize;
        // Guard against rounding in the ceiling.
        while steps > 1 && period / (steps - 1) as f64 <= bound {
            steps -= 1;
        }
        while period / steps as f64 > bound {
            steps += 1;
        }
        Self::new(omega, steps)
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }
}

/// Grid from the default CFL constant of the operator's degree.
pub fn cfl_steps(op: &DgOperator, omega: f64) -> Result<TimeGrid> {
    TimeGrid::from_cfl(op, omega, cfl_constant(op.space().degree())?)
}

/// Right-hand side evaluator `out = f(t, u)`.
pub trait Rhs {
    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()>;
}

impl<F> Rhs for F
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        self(t, u, out)
    }
}

/// `Phi(t, u) = B u + Re(S e^{iwt})`.
pub struct DgRhs<'a> {
    pub op: &'a DgOperator,
    pub forcing: Option<&'a Forcing>,
}

impl Rhs for DgRhs<'_> {
    fn eval(&self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        match self.forcing {
            Some(f) => self.op.apply_rhs(f, t, u, out),
            None => self.op.apply_homogeneous(u, out),
        }
    }
}

/// Stage storage for one integrator, reused across steps.
#[derive(Debug, Clone)]
pub struct Stepper {
    integrator: Integrator,
    k: [Vec<f64>; 3],
    stage: Vec<f64>,
}

fn axpy_into(out: &mut [f64], u: &[f64], a: f64, x: &[f64]) {
    out.iter_mut()
        .zip(u.iter().zip(x))
        .for_each(|(o, (ui, xi))| *o = ui + a * xi);
}

impl Stepper {
    pub fn new(integrator: Integrator, n: usize) -> Self {
        Self {
            integrator,
            k: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            stage: vec![0.0; n],
        }
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    /// Advances `u` from `t` to `t + dt`, given `k1 = f(t, u)`.
    pub fn step_with(&mut self, f: &dyn Rhs, t: f64, dt: f64, u: &mut [f64], k1: &[f64]) -> Result<()> {
        let [k2, k3, k4] = &mut self.k;
        let stage = &mut self.stage;
        match self.integrator {
            Integrator::Rk2 => {
                axpy_into(stage, u, 0.5 * dt, k1);
                f.eval(t + 0.5 * dt, stage, k2)?;
                u.iter_mut().zip(k2.iter()).for_each(|(ui, ki)| *ui += dt * ki);
            }
            Integrator::Rk4 => {
                axpy_into(stage, u, 0.5 * dt, k1);
                f.eval(t + 0.5 * dt, stage, k2)?;
                axpy_into(stage, u, 0.5 * dt, k2);
                f.eval(t + 0.5 * dt, stage, k3)?;
                axpy_into(stage, u, dt, k3);
                f.eval(t + dt, stage, k4)?;
                let c = dt / 6.0;
                for i in 0..u.len() {
                    u[i] += c * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
                }
            }
        }
        Ok(())
    }

    /// One full step, evaluating `k1` itself.
    pub fn step(&mut self, f: &dyn Rhs, t: f64, dt: f64, u: &mut [f64]) -> Result<()> {
        let mut k1 = vec![0.0; u.len()];
        f.eval(t, u, &mut k1)?;
        self.step_with(f, t, dt, u, &k1)
    }
}

/// Midpoint RK2 step.
pub fn rk2_step(f: &dyn Rhs, t: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
    let mut out = u.to_vec();
    Stepper::new(Integrator::Rk2, u.len()).step(f, t, dt, &mut out)?;
    Ok(out)
}

/// Classical RK4 step.
pub fn rk4_step(f: &dyn Rhs, t: f64, dt: f64, u: &[f64]) -> Result<Vec<f64>> {
    let mut out = u.to_vec();
    Stepper::new(Integrator::Rk4, u.len()).step(f, t, dt, &mut out)?;
    Ok(out)
}

/// Receives the trajectory during a march.
pub trait Observer {
    /// Initial state with `rhs = Phi(t0, u0)`.
    fn start(&mut self, t0: f64, u0: &[f64], rhs: &[f64]) -> Result<()>;
    /// State after step `m` (`1..=M`) with `rhs = Phi(t_m, u_m)`.
    fn observe(&mut self, m: usize, t: f64, u: &[f64], rhs: &[f64]) -> Result<()>;
}

fn check_finite(u: &[f64], step: usize) -> Result<()> {
    if u.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { step })
    }
}

/// Marches `u` over one period of `grid`, in place.
pub fn march_period(
    f: &dyn Rhs,
    integrator: Integrator,
    grid: &TimeGrid,
    u: &mut [f64],
    observers: &mut [&mut dyn Observer],
) -> Result<()> {
    let n = u.len();
    let mut stepper = Stepper::new(integrator, n);
    let mut k1 = vec![0.0; n];
    f.eval(0.0, u, &mut k1)?;
    for obs in observers.iter_mut() {
        obs.start(0.0, u, &k1)?;
    }
    for m in 1..=grid.steps {
        let t = grid.time(m - 1);
        stepper.step_with(f, t, grid.dt, u, &k1)?;
        if m % DIVERGENCE_CHECK_INTERVAL == 0 || m == grid.steps {
            check_finite(u, m)?;
        }
        let tm = grid.time(m);
        f.eval(tm, u, &mut k1)?;
        for obs in observers.iter_mut() {
            obs.observe(m, tm, u, &k1)?;
        }
    }
    Ok(())
}

/// Convenience wrapper for the DG right-hand side.
pub fn march_dg(
    op: &DgOperator,
    forcing: Option<&Forcing>,
    integrator: Integrator,
    grid: &TimeGrid,
    u: &mut [f64],
    observers: &mut [&mut dyn Observer],
) -> Result<()> {
    op.space().check_len(u.len())?;
    march_period(&DgRhs { op, forcing }, integrator, grid, u, observers)
}
