//! One-period propagators `P_{psi,w}`, `P_w`, the sign-flip adjoint `P*_w` and `G = P_{psi,w} 0`.

use num_complex::Complex64;

use crate::dg::{DgOperator, Forcing};
use crate::error::{Error, Result};
use crate::filter::{FilterAccumulator, Quadrature};
use crate::time::{march_dg, Integrator, Observer, TimeGrid};

/// Negates the magnetic components of every element block.
pub fn flip_magnetic(op: &DgOperator, u: &mut [f64]) {
    let np = op.space().np();
    for block in u.chunks_mut(3 * np) {
        block[np..].iter_mut().for_each(|x| *x = -*x);
    }
}

/// Result of a forward period.
#[derive(Debug, Clone)]
pub struct Forward {
    pub state: Vec<f64>,
    pub filtered: Option<Vec<Complex64>>,
}

/// Bundles operator, sources and time grid for repeated period solves.
pub struct Propagator<'a> {
    op: &'a DgOperator,
    forcing: Forcing,
    grid: TimeGrid,
    integrator: Integrator,
    quadrature: Quadrature,
}

impl<'a> Propagator<'a> {
    pub fn new(op: &'a DgOperator, forcing: Forcing, grid: TimeGrid, integrator: Integrator) -> Result<Self> {
        op.space().check_len(forcing.amplitude.len())?;
        if (forcing.omega - grid.omega).abs() > 1e-12 * grid.omega {
            return Err(Error::InvalidParameter(format!(
                "source frequency {} differs from grid frequency {}",
                forcing.omega, grid.omega
            )));
        }
        integrator.check_pairing(op.space().degree())?;
        Ok(Self {
            op,
            forcing,
            grid,
            integrator,
            quadrature: Quadrature::for_integrator(integrator),
        })
    }

    pub fn op(&self) -> &DgOperator {
        self.op
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    pub fn ndofs(&self) -> usize {
        self.op.ndofs()
    }

    fn sources(&self) -> Option<&Forcing> {
        (!self.forcing.is_zero()).then_some(&self.forcing)
    }

    /// `P_{psi,w} u0`, optionally with the filtered trajectory.
    pub fn forward(&self, u0: &[f64], with_filter: bool) -> Result<Forward> {
        self.forward_observed(u0, with_filter, &mut [])
    }

    /// `forward` with extra observers on the trajectory.
    pub fn forward_observed(
        &self,
        u0: &[f64],
        with_filter: bool,
        extra: &mut [&mut dyn Observer],
    ) -> Result<Forward> {
        self.op.space().check_len(u0.len())?;
        let mut state = u0.to_vec();
        let mut filter = if with_filter {
            Some(FilterAccumulator::new(self.quadrature, &self.grid, u0.len())?)
        } else {
            None
        };
        let mut observers: Vec<&mut dyn Observer> = Vec::with_capacity(extra.len() + 1);
        if let Some(f) = filter.as_mut() {
            observers.push(f);
        }
        for o in extra.iter_mut() {
            observers.push(&mut **o);
        }
        march_dg(self.op, self.sources(), self.integrator, &self.grid, &mut state, &mut observers)?;
        drop(observers);
        let filtered = filter.map(FilterAccumulator::finalize).transpose()?;
        Ok(Forward { state, filtered })
    }

    /// Homogeneous propagator `P_w u0` (sources off).
    pub fn homogeneous(&self, u0: &[f64]) -> Result<Vec<f64>> {
        self.op.space().check_len(u0.len())?;
        let mut state = u0.to_vec();
        march_dg(self.op, None, self.integrator, &self.grid, &mut state, &mut [])?;
        Ok(state)
    }

    /// `(P_w u0, F_w u0)` with sources off.
    pub fn forward_homogeneous_filtered(&self, u0: &[f64]) -> Result<(Vec<f64>, Vec<Complex64>)> {
        self.op.space().check_len(u0.len())?;
        let mut state = u0.to_vec();
        let mut filter = FilterAccumulator::new(self.quadrature, &self.grid, u0.len())?;
        march_dg(self.op, None, self.integrator, &self.grid, &mut state, &mut [&mut filter])?;
        Ok((state, filter.finalize()?))
    }

    /// `P*_w wT`: flip the magnetic field, march one homogeneous period, flip back.
    pub fn backward(&self, wt: &[f64]) -> Result<Vec<f64>> {
        let mut state = wt.to_vec();
        flip_magnetic(self.op, &mut state);
        let mut state = self.homogeneous(&state)?;
        flip_magnetic(self.op, &mut state);
        Ok(state)
    }

    /// `G = P_{psi,w} 0`.
    pub fn inhomogeneous_term(&self) -> Result<Vec<f64>> {
        Ok(self.forward(&vec![0.0; self.ndofs()], false)?.state)
    }
}
