//! Controllability solver: energy functional, adjoint gradient, conjugate gradients,
//! and the limiting-amplitude (FW) baseline.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::Propagator;

/// One history row: simulated periods, error of the filtered field, relative misfit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub periods: usize,
    pub err: f64,
    pub misfit: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub rows: Vec<Row>,
}

impl ConvergenceRecord {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: Row) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.periods <= last.periods {
                return Err(Error::InvalidParameter(format!(
                    "period count must increase: {} after {}",
                    row.periods, last.periods
                )));
            }
        }
        if row.err.is_nan() || row.err < 0.0 {
            return Err(Error::InvalidParameter(format!("invalid error value {}", row.err)));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn last(&self) -> Option<&Row> {
        self.rows.last()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Whitespace-separated table headed `N err misfit`.
    pub fn to_text(&self) -> String {
        let mut s = String::from("N err misfit\n");
        for r in &self.rows {
            s.push_str(&format!("{} {:.12e} {:.12e}\n", r.periods, r.err, r.misfit));
        }
        s
    }
}

/// Scores a filtered field, typically its relative error against a reference.
pub type Monitor<'m> = dyn FnMut(&[Complex64]) -> Result<f64> + 'm;

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += a * xi);
}

fn axpy_complex(y: &mut [Complex64], a: f64, x: &[Complex64]) {
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += a * xi);
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.par_iter().zip(b.par_iter()).map(|(x, y)| x - y).collect()
}

/// `H d = (I - P*)(I - P) d` together with its by-products.
struct HessianAction {
    hd: Vec<f64>,
    /// `(P - I) d`
    wt: Vec<f64>,
    /// `F_w d`, the homogeneous filtered trajectory.
    filtered: Vec<Complex64>,
}

/// Quadratic controllability problem attached to one propagator.
pub struct Controllability<'p, 'a> {
    prop: &'p Propagator<'a>,
    g: Vec<f64>,
    g_star: Vec<f64>,
    filtered_zero: Vec<Complex64>,
}

impl<'p, 'a> Controllability<'p, 'a> {
    /// Computes `G = P_{psi,w} 0` (filtered) and `G* = G - P*_w G`: two period solves.
    pub fn initialize(prop: &'p Propagator<'a>) -> Result<Self> {
        let zero = vec![0.0; prop.ndofs()];
        let fwd = prop.forward(&zero, true)?;
        let g = fwd.state;
        let gt = prop.backward(&g)?;
        let g_star = sub(&g, &gt);
        Ok(Self {
            prop,
            g,
            g_star,
            filtered_zero: fwd.filtered.expect("filter requested"),
        })
    }

    pub fn propagator(&self) -> &Propagator<'a> {
        self.prop
    }

    /// `G = P_{psi,w} 0`.
    pub fn inhomogeneous_term(&self) -> &[f64] {
        &self.g
    }

    /// `G* = (I - P*) G`.
    pub fn g_star(&self) -> &[f64] {
        &self.g_star
    }

    /// `F_{psi,w} 0`.
    pub fn filtered_zero(&self) -> &[Complex64] {
        &self.filtered_zero
    }

    fn hessian(&self, d: &[f64]) -> Result<HessianAction> {
        let fwd = self.prop.forward_homogeneous_filtered(d)?;
        let wt = sub(&fwd.0, d);
        let w0 = self.prop.backward(&wt)?;
        Ok(HessianAction {
            hd: sub(&w0, &wt),
            wt,
            filtered: fwd.1,
        })
    }

    /// `J'(u0) = W_0 - W_T - G*` with `W_T = (P - I) u0`, `W_0 = P* W_T`.
    pub fn gradient(&self, u0: &[f64]) -> Result<Vec<f64>> {
        let wt = sub(&self.prop.homogeneous(u0)?, u0);
        let w0 = self.prop.backward(&wt)?;
        Ok(w0
            .par_iter()
            .zip(wt.par_iter())
            .zip(self.g_star.par_iter())
            .map(|((a, b), c)| a - b - c)
            .collect())
    }

    /// `J(u0) = 1/2 |P_{psi,w} u0 - u0|^2` in the weighted norm.
    pub fn functional(&self, u0: &[f64]) -> Result<f64> {
        let out = self.prop.forward(u0, false)?.state;
        let n = self.prop.op().norm(&sub(&out, u0))?;
        Ok(0.5 * n * n)
    }

    /// `H u0 = (I - P*)(I - P) u0`.
    pub fn apply_hessian(&self, u0: &[f64]) -> Result<Vec<f64>> {
        Ok(self.hessian(u0)?.hd)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CmcgOptions {
    /// Relative residual target `|R_k| <= delta |R_0|`.
    pub tolerance: f64,
    /// Simulated-period budget; each CG iteration costs two periods.
    pub max_periods: usize,
    /// Recompute `G* - H u` every this many iterations and compare with the recursive residual.
    pub residual_check: Option<usize>,
}

impl Default for CmcgOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_periods: 100,
            residual_check: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CmcgOutcome {
    pub u0: Vec<f64>,
    pub filtered: Vec<Complex64>,
    pub iterations: usize,
    pub converged: bool,
    /// `|R_k| / |R_0|` at termination (0 when `R_0 = 0`).
    pub residual_ratio: f64,
    /// `J(u0^(k))` per iteration, from the misfit recurrence.
    pub functional: Vec<f64>,
    /// Largest gap between recursive and recomputed residuals, relative to `|R_0|`.
    pub residual_drift: Option<f64>,
}

/// Conjugate gradients on `H u0 = G*` from `u0 = 0`.
///
/// Rows `N = 2(k+1)` are appended to `history` as iterations complete, so the caller keeps
/// the partial record when a solve fails.
pub fn cmcg_solve(
    ctl: &Controllability<'_, '_>,
    options: &CmcgOptions,
    monitor: &mut Monitor<'_>,
    history: &mut ConvergenceRecord,
) -> Result<CmcgOutcome> {
    let prop = ctl.prop;
    let op = prop.op();
    let n = prop.ndofs();
    let g_norm = op.norm(&ctl.g)?;
    let misfit_scale = if g_norm > 0.0 { g_norm } else { 1.0 };

    let mut u = vec![0.0; n];
    let mut filtered = ctl.filtered_zero.clone();
    // (P_psi - I) u = (P - I) u + G
    let mut misfit_vec = ctl.g.clone();
    let mut r = ctl.g_star.clone();
    let mut d = r.clone();
    let mut rr = op.inner(&r, &r)?;
    let rr0 = rr;
    let mut functional = Vec::new();
    let mut drift: Option<f64> = None;
    let max_iterations = (options.max_periods / 2).max(1) - 1;

    let mut k = 0;
    loop {
        let misfit = op.norm(&misfit_vec)?;
        functional.push(0.5 * misfit * misfit);
        let err = monitor(&filtered)?;
        history.push(Row {
            periods: 2 * (k + 1),
            err,
            misfit: misfit / misfit_scale,
        })?;

        if let Some(every) = options.residual_check {
            if every > 0 && k > 0 && k % every == 0 {
                let hu = ctl.apply_hessian(&u)?;
                let exact = sub(&ctl.g_star, &hu);
                let gap = op.norm(&sub(&exact, &r))? / rr0.sqrt();
                drift = Some(drift.map_or(gap, |g: f64| g.max(gap)));
            }
        }

        let converged = rr <= options.tolerance * options.tolerance * rr0;
        if converged || k >= max_iterations {
            return Ok(CmcgOutcome {
                u0: u,
                filtered,
                iterations: k,
                converged,
                residual_ratio: if rr0 > 0.0 { (rr / rr0).sqrt() } else { 0.0 },
                functional,
                residual_drift: drift,
            });
        }

        let h = ctl.hessian(&d)?;
        let curvature = op.inner(&d, &h.hd)?;
        if !(curvature > 0.0 && curvature.is_finite()) {
            return Err(Error::CgBreakdown { iteration: k, curvature });
        }
        let alpha = rr / curvature;
        axpy(&mut u, alpha, &d);
        axpy(&mut r, -alpha, &h.hd);
        axpy(&mut misfit_vec, alpha, &h.wt);
        axpy_complex(&mut filtered, alpha, &h.filtered);
        let rr_new = op.inner(&r, &r)?;
        let beta = rr_new / rr;
        rr = rr_new;
        d.par_iter_mut().zip(r.par_iter()).for_each(|(di, ri)| *di = ri + beta * *di);
        k += 1;
    }
}

#[derive(Debug, Clone)]
pub struct FwOutcome {
    pub state: Vec<f64>,
    pub filtered: Vec<Complex64>,
    pub periods: usize,
}

/// Limiting amplitude: march from rest with sources on, filtering each period.
/// Rows `N = k + 1` record the filtered field of period `k`.
pub fn fw_solve(
    prop: &Propagator<'_>,
    max_periods: usize,
    monitor: &mut Monitor<'_>,
    history: &mut ConvergenceRecord,
) -> Result<FwOutcome> {
    let op = prop.op();
    let mut state = vec![0.0; prop.ndofs()];
    let mut filtered = vec![Complex64::new(0.0, 0.0); prop.ndofs()];
    let mut g_norm = 0.0;
    for k in 0..max_periods {
        let fwd = prop.forward(&state, true)?;
        let change = op.norm(&sub(&fwd.state, &state))?;
        if k == 0 {
            g_norm = if change > 0.0 { change } else { 1.0 };
        }
        state = fwd.state;
        filtered = fwd.filtered.expect("filter requested");
        let err = monitor(&filtered)?;
        history.push(Row {
            periods: k + 1,
            err,
            misfit: change / g_norm,
        })?;
    }
    Ok(FwOutcome {
        state,
        filtered,
        periods: max_periods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{Coefficients, DgOperator, DgSpace, Forcing, MaterialField, SourceSpec};
    use crate::mesh::{BoundaryKind, Mesh, Rect};
    use crate::time::{cfl_steps, Integrator};

    fn operator(kind: BoundaryKind) -> DgOperator {
        let mesh = Mesh::cartesian(2, 2, Rect::unit(), &|_| kind).unwrap();
        let mats = MaterialField::uniform(&mesh, Coefficients::default(), 1.0).unwrap();
        DgOperator::new(DgSpace::new(mesh, 1).unwrap(), mats).unwrap()
    }

    fn propagator(op: &DgOperator, omega: f64, with_sources: bool) -> Propagator<'_> {
        let forcing = if with_sources {
            let j = |p: [f64; 2]| Complex64::new(1.0 + p[0], p[1]);
            let g = |p: [f64; 2], _n: [f64; 2]| Complex64::new(p[1], 0.3);
            op.forcing(&SourceSpec { omega, j: Some(&j), g: Some(&g) }).unwrap()
        } else {
            Forcing::zero(omega, op.ndofs())
        };
        Propagator::new(op, forcing, cfl_steps(op, omega).unwrap(), Integrator::Rk2).unwrap()
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed ^ 0x9e3779b97f4a7c15;
        (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn gradient_at_zero_is_minus_g_star() {
        let op = operator(BoundaryKind::Impedance);
        let p = propagator(&op, 3.0, true);
        let ctl = Controllability::initialize(&p).unwrap();
        let grad = ctl.gradient(&vec![0.0; op.ndofs()]).unwrap();
        for (a, b) in grad.iter().zip(ctl.g_star()) {
            assert_eq!(*a, -b);
        }
        let g = p.inhomogeneous_term().unwrap();
        let gt = p.backward(&g).unwrap();
        for i in 0..g.len() {
            assert_eq!(ctl.g_star()[i], g[i] - gt[i]);
        }
    }

    #[test]
    fn functional_affine_identity() {
        let op = operator(BoundaryKind::Impedance);
        let p = propagator(&op, 3.0, true);
        let ctl = Controllability::initialize(&p).unwrap();
        let u = random(op.ndofs(), 5);
        let direct = ctl.functional(&u).unwrap();
        let pu = p.homogeneous(&u).unwrap();
        let v: Vec<f64> = (0..u.len()).map(|i| u[i] - pu[i] - ctl.inhomogeneous_term()[i]).collect();
        let linear = 0.5 * op.norm(&v).unwrap().powi(2);
        assert!((direct - linear).abs() <= 1e-12 * direct);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let op = operator(BoundaryKind::Impedance);
        let p = propagator(&op, 3.0, true);
        let ctl = Controllability::initialize(&p).unwrap();
        let u = random(op.ndofs(), 7);
        let v = random(op.ndofs(), 8);
        let grad = ctl.gradient(&u).unwrap();
        let exact = op.inner(&grad, &v).unwrap();
        let h = 1e-4;
        let shift = |s: f64| -> Vec<f64> { u.iter().zip(&v).map(|(a, b)| a + s * b).collect() };
        let fd = (ctl.functional(&shift(h)).unwrap() - ctl.functional(&shift(-h)).unwrap()) / (2.0 * h);
        assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{fd} vs {exact}");
    }

    #[test]
    fn zero_sources_stop_immediately() {
        let op = operator(BoundaryKind::Pec);
        let p = propagator(&op, 3.0, false);
        let ctl = Controllability::initialize(&p).unwrap();
        let mut hist = ConvergenceRecord::new();
        let out = cmcg_solve(&ctl, &CmcgOptions::default(), &mut |_| Ok(0.0), &mut hist).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.converged);
        assert!(out.u0.iter().all(|&x| x == 0.0));
        assert_eq!(hist.rows.len(), 1);
        assert_eq!(hist.rows[0].periods, 2);
    }

    #[test]
    fn cg_decreases_functional_and_tracks_residual() {
        let op = operator(BoundaryKind::Impedance);
        let p = propagator(&op, 3.0, true);
        let ctl = Controllability::initialize(&p).unwrap();
        let options = CmcgOptions {
            tolerance: 1e-8,
            max_periods: 60,
            residual_check: Some(5),
        };
        let mut hist = ConvergenceRecord::new();
        let out = cmcg_solve(&ctl, &options, &mut |_| Ok(0.0), &mut hist).unwrap();
        assert!(out.functional[1] < out.functional[0]);
        for w in out.functional.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{w:?}");
        }
        // The recursive misfit agrees with a direct evaluation.
        let j = ctl.functional(&out.u0).unwrap();
        assert!((j - out.functional.last().unwrap()).abs() <= 1e-8 * out.functional[0]);
        // The recursive filter agrees with a fresh filtered run.
        let fresh = p.forward(&out.u0, true).unwrap().filtered.unwrap();
        let gap = fresh.iter().zip(&out.filtered).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = fresh.iter().map(|a| a.norm()).fold(0.0, f64::max);
        assert!(gap <= 1e-9 * scale);
        if let Some(d) = out.residual_drift {
            assert!(d <= 1e-8, "{d}");
        }
        for (i, r) in hist.rows.iter().enumerate() {
            assert_eq!(r.periods, 2 * (i + 1));
        }
    }

    #[test]
    fn fw_rows_count_periods() {
        let op = operator(BoundaryKind::Impedance);
        let p = propagator(&op, 3.0, true);
        let mut hist = ConvergenceRecord::new();
        let out = fw_solve(&p, 4, &mut |_| Ok(1.0), &mut hist).unwrap();
        assert_eq!(out.periods, 4);
        let ns: Vec<usize> = hist.rows.iter().map(|r| r.periods).collect();
        assert_eq!(ns, vec![1, 2, 3, 4]);
        assert!((hist.rows[0].misfit - 1.0).abs() < 1e-15);
    }

    #[test]
    fn record_rejects_bad_rows() {
        let mut h = ConvergenceRecord::new();
        h.push(Row { periods: 2, err: 0.1, misfit: 1.0 }).unwrap();
        assert!(h.push(Row { periods: 2, err: 0.1, misfit: 1.0 }).is_err());
        assert!(h.push(Row { periods: 4, err: -1.0, misfit: 1.0 }).is_err());
        assert_eq!(h.to_text().lines().next(), Some("N err misfit"));
    }
}
