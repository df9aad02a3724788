//! Analytic and semi-analytic reference fields and the weighted error norm.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dg::reference::triangle_quadrature;
use crate::dg::{DgOperator, FIELDS};
use crate::error::{Error, Result};
use crate::mesh::Point;

type Evaluator = dyn Fn(Point) -> [Complex64; 3] + Send + Sync;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A complex field `(e, h1, h2)` given pointwise.
#[derive(Clone)]
pub struct ExactSolution {
    pub name: String,
    pub omega: f64,
    eval: Arc<Evaluator>,
}

impl std::fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExactSolution")
            .field("name", &self.name)
            .field("omega", &self.omega)
            .finish_non_exhaustive()
    }
}

impl ExactSolution {
    pub fn new(
        name: impl Into<String>,
        omega: f64,
        eval: impl Fn(Point) -> [Complex64; 3] + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            omega,
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, x: Point) -> [Complex64; 3] {
        (self.eval)(x)
    }
}

fn direction(theta: f64) -> Point {
    [theta.cos(), theta.sin()]
}

/// `xi(x) = exp(i w d.x)` with `d = (cos theta, sin theta)`.
pub fn xi(theta: f64, omega: f64, x: Point) -> Complex64 {
    let d = direction(theta);
    Complex64::from_polar(1.0, omega * (d[0] * x[0] + d[1] * x[1]))
}

/// Plane wave `e = xi`, `h = curl_s e / (i w) = -xi d_perp` in vacuum.
pub fn plane_wave(theta: f64, omega: f64) -> Result<ExactSolution> {
    check_omega(omega)?;
    let d = direction(theta);
    Ok(ExactSolution::new("planewave", omega, move |x| {
        let e = xi(theta, omega, x);
        [e, e * d[1], -e * d[0]]
    }))
}

/// Impedance data `g = e + h x n` of the plane wave on a face with outward
/// normal `n` (`Z = 1`).
pub fn plane_wave_boundary(theta: f64, omega: f64, x: Point, n: Point) -> Complex64 {
    let d = direction(theta);
    xi(theta, omega, x) * (1.0 + d[0] * n[0] + d[1] * n[1])
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::Reference(format!("angular frequency must be positive, got {omega}")))
    }
}

/// `int_0^1 exp(i gamma y) dy`.
fn unit_exp_integral(gamma: f64) -> Complex64 {
    if gamma.abs() < 1e-3 {
        // Taylor series of (e^{iy} - 1)/(iy).
        let z = I * gamma;
        (0..8).map(|k| z.powu(k as u32) / factorial(k + 1)).sum()
    } else {
        (Complex64::from_polar(1.0, gamma) - 1.0) / (I * gamma)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Relative size of `k_n` below which a waveguide mode is treated as cutoff.
const CUTOFF_TOL: f64 = 1e-9;

enum Mode {
    Oscillating { npi: f64, k: Complex64, amp: Complex64 },
    Linear { npi: f64, amp: Complex64 },
}

/// Semi-analytic solution of the half-open waveguide `(0,4) x (0,1)`:
/// PEC on `x1 = 0` and `x2 in {0, 1}`, impedance data `g = xi` on `x1 = 4`.
/// The field is the sine series `sum_n e_n(x1) sin(n pi x2)`, `n <= n_max`.
pub fn waveguide_series(theta: f64, omega: f64, n_max: usize) -> Result<ExactSolution> {
    check_omega(omega)?;
    if n_max < 1 {
        return Err(Error::Reference("waveguide series needs n_max >= 1".into()));
    }
    let d = direction(theta);
    let mut modes = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let npi = n as f64 * PI;
        let k = Complex64::new(omega * omega - npi * npi, 0.0).sqrt();
        // g_n = 2 int_0^1 xi(4, y) sin(n pi y) dy.
        let phase = Complex64::from_polar(1.0, 4.0 * omega * d[0]);
        let a = omega * d[1];
        let g_n = phase * (unit_exp_integral(a + npi) - unit_exp_integral(a - npi)) / I;
        if k.norm() < CUTOFF_TOL * omega {
            // At the cutoff the mode is linear in x1.
            modes.push(Mode::Linear {
                npi,
                amp: g_n / (4.0 + 1.0 / (I * omega)),
            });
            continue;
        }
        // Robin condition e(4) + e'(4)/(i w) = g_n, scaled by e^{4ik}.
        let e8 = (I * k * 8.0).exp();
        let den = (e8 - 1.0) / (2.0 * I) + k * (e8 + 1.0) / (2.0 * I * omega);
        if den.norm() < 1e-300 {
            return Err(Error::Reference(format!("degenerate waveguide mode {n}")));
        }
        modes.push(Mode::Oscillating { npi, k, amp: g_n / den });
    }
    Ok(ExactSolution::new("waveguide", omega, move |x| {
        let mut e = Complex64::new(0.0, 0.0);
        let mut h1 = Complex64::new(0.0, 0.0);
        let mut h2 = Complex64::new(0.0, 0.0);
        for mode in &modes {
            let (npi, en, den) = match *mode {
                Mode::Oscillating { npi, k, amp } => {
                    let plus = (I * k * (x[0] + 4.0)).exp();
                    let minus = (I * k * (4.0 - x[0])).exp();
                    (npi, amp * (plus - minus) / (2.0 * I), amp * k * (plus + minus) / 2.0)
                }
                Mode::Linear { npi, amp } => (npi, amp * x[0], amp),
            };
            let (s, co) = (npi * x[1]).sin_cos();
            e += en * s;
            h1 += en * npi * co;
            h2 -= den * s;
        }
        [e, h1 / (I * omega), h2 / (I * omega)]
    }))
}

/// Closed PEC cavity `(0,1)^2` driven by `j = amplitude`.
///
/// The sine expansion in `x2` is truncated at `n_max`; the `x1` dependence of
/// each mode is summed in closed form.
pub fn cavity_series(omega: f64, amplitude: f64, n_max: usize) -> Result<ExactSolution> {
    check_omega(omega)?;
    if n_max < 1 {
        return Err(Error::Reference("cavity series needs n_max >= 1".into()));
    }
    for n in (1..=n_max).step_by(2) {
        for m in (1..=n_max).step_by(2) {
            let wr = PI * ((n * n + m * m) as f64).sqrt();
            if (omega - wr).abs() < 1e-9 * wr {
                return Err(Error::Reference(format!(
                    "frequency {omega} is the resonance ({n}, {m})"
                )));
            }
        }
    }
    let mut modes = Vec::new();
    for m in (1..=n_max).step_by(2) {
        let mpi = m as f64 * PI;
        let k2 = omega * omega - mpi * mpi;
        let k = Complex64::new(k2, 0.0).sqrt();
        // Sine coefficient of the constant source.
        let jm = 4.0 * amplitude / mpi;
        let denom = 1.0 + (I * k).exp();
        if denom.norm() < 1e-12 {
            return Err(Error::Reference(format!("frequency {omega} is resonant")));
        }
        modes.push((mpi, k, k2, jm, denom));
    }
    Ok(ExactSolution::new("cavity", omega, move |x| {
        let mut e = Complex64::new(0.0, 0.0);
        let mut h1 = Complex64::new(0.0, 0.0);
        let mut h2 = Complex64::new(0.0, 0.0);
        let t = x[0];
        for &(mpi, k, k2, jm, denom) in &modes {
            // f'' + k^2 f = -i w jm, f(0) = f(1) = 0.
            let (f, df) = if k.norm() < 1e-4 {
                let c = I * omega * jm;
                (c * t * (1.0 - t) / 2.0, c * (1.0 - 2.0 * t) / 2.0)
            } else {
                let a = (I * k * t).exp();
                let b = (I * k * (1.0 - t)).exp();
                let c = -I * omega * jm / k2;
                let ratio = (a + b) / denom;
                let ratio_s = (a - b) / (I * denom);
                (c * (1.0 - ratio), c * k * ratio_s)
            };
            let (s, co) = (mpi * x[1]).sin_cos();
            e += f * s;
            h1 += f * mpi * co;
            h2 -= df * s;
        }
        [e, h1 / (I * omega), h2 / (I * omega)]
    }))
}

/// Resonant frequency `pi sqrt(n^2 + m^2)` of the unit square.
pub fn cavity_resonance(n: usize, m: usize) -> f64 {
    PI * ((n * n + m * m) as f64).sqrt()
}

/// Relative (eps, mu)-weighted L2 error `|U - U_h| / |U|`, integrated with a
/// collapsed Gauss rule of `q + 3` points per direction.
pub fn relative_error(op: &DgOperator, numeric: &[Complex64], exact: &ExactSolution) -> Result<f64> {
    let (num, den) = error_norms(op, numeric, exact)?;
    if den == 0.0 {
        return Err(Error::Reference("exact solution has zero norm".into()));
    }
    Ok((num / den).sqrt())
}

/// Squared weighted norms `(|U - U_h|^2, |U|^2)`.
pub fn error_norms(
    op: &DgOperator,
    numeric: &[Complex64],
    exact: &ExactSolution,
) -> Result<(f64, f64)> {
    let space = op.space();
    space.check_len(numeric.len())?;
    let re = space.reference();
    let np = re.np;
    let bs = space.block_size();
    let (qr, qs, qw) = triangle_quadrature(space.degree() + 3);
    let interp = re.interpolation_matrix(&qr, &qs);
    let parts: Vec<(f64, f64)> = (0..space.num_elements())
        .into_par_iter()
        .map(|k| {
            let jac = space.geometry(k).area / 2.0;
            let weights = [
                op.materials().eps(k),
                op.materials().mu(k),
                op.materials().mu(k),
            ];
            let mut num = 0.0;
            let mut den = 0.0;
            for (p, w) in qw.iter().enumerate() {
                let x = space.map_point(k, qr[p], qs[p]);
                let u = exact.eval(x);
                let row = &interp[p * np..(p + 1) * np];
                for field in 0..FIELDS {
                    let off = k * bs + field * np;
                    let uh: Complex64 = (0..np).map(|i| numeric[off + i] * row[i]).sum();
                    let scale = w * jac * weights[field];
                    num += scale * (u[field] - uh).norm_sqr();
                    den += scale * u[field].norm_sqr();
                }
            }
            (num, den)
        })
        .collect();
    Ok(parts
        .iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1)))
}
