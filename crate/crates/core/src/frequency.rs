//! Direct frequency-domain solve of the same DG discretization.
//!
//! The system `(i w M + K) U = M S` with `K = -M B` is solved in the
//! equivalent form `(i w I - B) U = S`, by sparse LU by default.

use faer::c64;
use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dg::{DgOperator, Forcing};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Systems with fewer dofs than this are factorized densely.
pub const DENSE_LIMIT: usize = 5000;

/// Largest system handed to the sparse LU under [`Method::Auto`].
pub const SPARSE_LIMIT: usize = 80_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Sparse LU up to [`SPARSE_LIMIT`] dofs, GMRES beyond.
    Auto,
    /// Sparse LU of the assembled matrix.
    SparseLu,
    /// Restarted GMRES with element block-Jacobi preconditioning.
    Gmres,
    /// Dense LU; only for small systems.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub method: Method,
    /// Target for `|(i w M + K) u - load| / |load|`.
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
    /// With [`Method::Gmres`], factorize densely below [`DENSE_LIMIT`] dofs.
    pub dense_fallback: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            tolerance: 1e-10,
            restart: 60,
            max_iterations: 20_000,
            dense_fallback: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrequencySolution {
    pub field: Vec<Complex64>,
    pub iterations: usize,
    /// Final `|(i w M + K) u - load| / |load|`.
    pub residual: f64,
}

/// `(i w M + K)` together with its load `M S`.
pub struct FrequencySystem<'a> {
    op: &'a DgOperator,
    omega: f64,
    rhs: Vec<Complex64>,
}

impl<'a> FrequencySystem<'a> {
    pub fn assemble(op: &'a DgOperator, forcing: &Forcing) -> Result<Self> {
        op.space().check_len(forcing.amplitude.len())?;
        Ok(Self {
            op,
            omega: forcing.omega,
            rhs: forcing.amplitude.clone(),
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// `(i w I - B) u`.
    pub fn apply_reduced(&self, u: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        self.op.apply_homogeneous_complex(u, out)?;
        let iw = Complex64::new(0.0, self.omega);
        out.par_iter_mut()
            .zip(u.par_iter())
            .for_each(|(o, x)| *o = iw * x - *o);
        Ok(())
    }

    /// `(i w M + K) u`.
    pub fn apply(&self, u: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let mut tmp = vec![ZERO; u.len()];
        self.apply_reduced(u, &mut tmp)?;
        self.mass_complex(&tmp, out)
    }

    /// `M S`.
    pub fn load(&self) -> Result<Vec<Complex64>> {
        let mut out = vec![ZERO; self.rhs.len()];
        self.mass_complex(&self.rhs, &mut out)?;
        Ok(out)
    }

    fn mass_complex(&self, u: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let re: Vec<f64> = u.iter().map(|z| z.re).collect();
        let im: Vec<f64> = u.iter().map(|z| z.im).collect();
        let mut mr = vec![0.0; u.len()];
        let mut mi = vec![0.0; u.len()];
        self.op.apply_mass(&re, &mut mr)?;
        self.op.apply_mass(&im, &mut mi)?;
        for (o, (a, b)) in out.iter_mut().zip(mr.into_iter().zip(mi)) {
            *o = Complex64::new(a, b);
        }
        Ok(())
    }

    /// Relative residual in the mass-scaled form.
    pub fn residual(&self, u: &[Complex64]) -> Result<f64> {
        let load = self.load()?;
        let mut au = vec![ZERO; u.len()];
        self.apply(u, &mut au)?;
        let num: f64 = au.iter().zip(&load).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = load.iter().map(|z| z.norm_sqr()).sum();
        Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
    }

    pub fn solve(&self, options: &SolverOptions) -> Result<FrequencySolution> {
        let n = self.rhs.len();
        if self.rhs.iter().all(|z| *z == ZERO) {
            return Ok(FrequencySolution {
                field: vec![ZERO; n],
                iterations: 0,
                residual: 0.0,
            });
        }
        let dense = match options.method {
            Method::Dense => true,
            Method::Gmres => options.dense_fallback && n < DENSE_LIMIT,
            Method::SparseLu => return self.solve_sparse(options),
            Method::Auto if n <= SPARSE_LIMIT => return self.solve_sparse(options),
            Method::Auto => false,
        };
        if dense {
            let field = self.solve_dense()?;
            let residual = self.residual(&field)?;
            return Ok(FrequencySolution {
                field,
                iterations: 0,
                residual,
            });
        }
        self.solve_gmres(options)
    }

    /// Sparse `i w I - B`, assembled block by block.
    fn assemble_sparse(&self) -> Result<SparseColMat<usize, c64>> {
        let space = self.op.space();
        let bs = space.block_size();
        let n = space.ndofs();
        let per_element: Vec<Vec<Triplet<usize, usize, c64>>> = (0..space.num_elements())
            .into_par_iter()
            .map(|k| {
                let mut out = Vec::with_capacity(4 * bs * bs);
                let diag = self.op.element_block(k);
                for r in 0..bs {
                    for c in 0..bs {
                        let mut v = c64::new(-diag[r * bs + c], 0.0);
                        if r == c {
                            v.im += self.omega;
                        }
                        if v != c64::new(0.0, 0.0) {
                            out.push(Triplet::new(k * bs + r, k * bs + c, v));
                        }
                    }
                }
                for f in 0..3 {
                    if let Some((k2, block)) = self.op.coupling_block(k, f) {
                        for r in 0..bs {
                            for c in 0..bs {
                                let v = block[r * bs + c];
                                if v != 0.0 {
                                    out.push(Triplet::new(k * bs + r, k2 * bs + c, c64::new(-v, 0.0)));
                                }
                            }
                        }
                    }
                }
                out
            })
            .collect();
        let triplets: Vec<_> = per_element.into_iter().flatten().collect();
        SparseColMat::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::InvalidParameter(format!("sparse assembly failed: {e:?}")))
    }

    fn solve_sparse(&self, options: &SolverOptions) -> Result<FrequencySolution> {
        let n = self.rhs.len();
        let a = self.assemble_sparse()?;
        let lu = a
            .sp_lu()
            .map_err(|e| Error::InvalidParameter(format!("sparse LU failed: {e:?}")))?;
        let mut x = vec![ZERO; n];
        let mut r = self.rhs.clone();
        let mut residual = f64::INFINITY;
        let mut ax = vec![ZERO; n];
        for step in 0..4 {
            let b = Mat::<c64>::from_fn(n, 1, |i, _| c64::new(r[i].re, r[i].im));
            let dx = lu.solve(&b);
            for (i, xi) in x.iter_mut().enumerate() {
                let d = dx[(i, 0)];
                *xi += Complex64::new(d.re, d.im);
            }
            residual = self.residual(&x)?;
            if residual <= options.tolerance {
                return Ok(FrequencySolution {
                    field: x,
                    iterations: step,
                    residual,
                });
            }
            self.apply_reduced(&x, &mut ax)?;
            for ((ri, bi), ai) in r.iter_mut().zip(&self.rhs).zip(&ax) {
                *ri = bi - ai;
            }
        }
        Err(Error::NoConvergence {
            iterations: 4,
            residual,
        })
    }

    fn solve_dense(&self) -> Result<Vec<Complex64>> {
        let n = self.rhs.len();
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        let mut e = vec![ZERO; n];
        let mut col = vec![ZERO; n];
        for c in 0..n {
            e[c] = Complex64::new(1.0, 0.0);
            self.apply_reduced(&e, &mut col)?;
            e[c] = ZERO;
            for (r, v) in col.iter().enumerate() {
                a[(r, c)] = *v;
            }
        }
        let b = nalgebra::DVector::from_column_slice(&self.rhs);
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::InvalidParameter("frequency system is singular".into()))?;
        Ok(x.iter().copied().collect())
    }

    fn block_jacobi(&self) -> Vec<Vec<Complex64>> {
        let space = self.op.space();
        let bs = space.block_size();
        let iw = Complex64::new(0.0, self.omega);
        (0..space.num_elements())
            .into_par_iter()
            .map(|k| {
                let block = self.op.element_block(k);
                let m = DMatrix::<Complex64>::from_fn(bs, bs, |r, c| {
                    let diag = if r == c { iw } else { ZERO };
                    diag - block[r * bs + c]
                });
                let inv = m
                    .try_inverse()
                    .expect("element blocks of i w I - B are invertible for w > 0");
                let mut out = Vec::with_capacity(bs * bs);
                for r in 0..bs {
                    for c in 0..bs {
                        out.push(inv[(r, c)]);
                    }
                }
                out
            })
            .collect()
    }

    fn solve_gmres(&self, options: &SolverOptions) -> Result<FrequencySolution> {
        let bs = self.op.space().block_size();
        let blocks = self.block_jacobi();
        let precond = |v: &[Complex64], out: &mut [Complex64]| {
            out.par_chunks_mut(bs).enumerate().for_each(|(k, chunk)| {
                let inv = &blocks[k];
                let src = &v[k * bs..(k + 1) * bs];
                for r in 0..bs {
                    let row = &inv[r * bs..(r + 1) * bs];
                    chunk[r] = row.iter().zip(src).map(|(a, b)| a * b).sum();
                }
            });
        };
        let apply = |v: &[Complex64], out: &mut [Complex64]| {
            self.apply_reduced(v, out).expect("dimensions checked");
        };
        let mut x = vec![ZERO; self.rhs.len()];
        let mut total = 0;
        let mut tol = options.tolerance * 0.1;
        loop {
            let (iters, _) = gmres(
                &apply,
                &precond,
                &self.rhs,
                &mut x,
                tol,
                options.restart,
                options.max_iterations - total,
            );
            total += iters;
            let residual = self.residual(&x)?;
            if residual <= options.tolerance {
                return Ok(FrequencySolution {
                    field: x,
                    iterations: total,
                    residual,
                });
            }
            if total >= options.max_iterations || tol < 1e-15 {
                return Err(Error::NoConvergence {
                    iterations: total,
                    residual,
                });
            }
            tol *= 0.1;
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES for `A x = b`, updating `x` in place
/// until `|b - A x| <= tol |b|`. Returns `(iterations, relative residual)`.
pub fn gmres(
    apply: &dyn Fn(&[Complex64], &mut [Complex64]),
    precond: &dyn Fn(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    x: &mut [Complex64],
    tol: f64,
    restart: usize,
    max_iterations: usize,
) -> (usize, f64) {
    let n = b.len();
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = ZERO);
        return (0, 0.0);
    }
    let restart = restart.max(1);
    let mut iterations = 0;
    let mut r = vec![ZERO; n];
    let mut w = vec![ZERO; n];
    let mut z = vec![ZERO; n];
    loop {
        apply(x, &mut r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let beta = norm(&r);
        let relres = beta / bnorm;
        if relres <= tol || iterations >= max_iterations {
            return (iterations, relres);
        }
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = vec![vec![ZERO; restart]; restart + 1];
        let mut cs = vec![0.0; restart];
        let mut sn = vec![ZERO; restart];
        let mut g = vec![ZERO; restart + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..restart {
            precond(&basis[j], &mut z);
            apply(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let h = dot(v, &w);
                hess[i][j] = h;
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= h * vi);
            }
            let hn = norm(&w);
            hess[j + 1][j] = Complex64::new(hn, 0.0);
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i].conj() * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let (c, s) = givens(hess[j][j], hess[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            hess[j][j] = c * hess[j][j] + s * hess[j + 1][j];
            hess[j + 1][j] = ZERO;
            g[j + 1] = -s.conj() * g[j];
            g[j] *= c;
            used = j + 1;
            iterations += 1;
            if g[j + 1].norm() / bnorm <= tol || iterations >= max_iterations || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        let mut y = vec![ZERO; used];
        for i in (0..used).rev() {
            let mut acc = g[i];
            for k in i + 1..used {
                acc -= hess[i][k] * y[k];
            }
            y[i] = acc / hess[i][i];
        }
        let mut update = vec![ZERO; n];
        for (v, yi) in basis.iter().zip(&y) {
            update.iter_mut().zip(v).for_each(|(u, vi)| *u += yi * vi);
        }
        precond(&update, &mut z);
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
    }
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = (an * an + bn * bn).sqrt();
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{Coefficients, DgSpace, MaterialField};
    use crate::mesh::{BoundaryKind, Mesh, Rect};

    fn op(q: usize, n: usize) -> DgOperator {
        let mesh = Mesh::cartesian(n, n, Rect::unit(), &|p| {
            if p[0] > 0.99 {
                BoundaryKind::Impedance
            } else {
                BoundaryKind::Pec
            }
        })
        .unwrap();
        let mats = MaterialField::uniform(&mesh, Coefficients::default(), 1.0).unwrap();
        DgOperator::new(DgSpace::new(mesh, q).unwrap(), mats).unwrap()
    }

    fn random(n: usize, seed: &mut u64) -> Vec<Complex64> {
        (0..n)
            .map(|_| {
                *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (*seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = (*seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                Complex64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn gmres_and_dense_recover_known_solution() {
        let op = op(1, 4);
        let mut seed = 5;
        let w = random(op.ndofs(), &mut seed);
        let forcing0 = Forcing::zero(7.0, op.ndofs());
        let sys0 = FrequencySystem::assemble(&op, &forcing0).unwrap();
        let mut rhs = vec![ZERO; w.len()];
        sys0.apply_reduced(&w, &mut rhs).unwrap();
        let forcing = Forcing {
            omega: 7.0,
            amplitude: rhs,
        };
        let sys = FrequencySystem::assemble(&op, &forcing).unwrap();
        for method in [Method::Auto, Method::SparseLu, Method::Gmres, Method::Dense] {
            let sol = sys
                .solve(&SolverOptions {
                    method,
                    dense_fallback: false,
                    ..Default::default()
                })
                .unwrap();
            assert!(sol.residual <= 1e-10);
            let err = sol
                .field
                .iter()
                .zip(&w)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-9, "{method:?}: {err}");
        }
    }

    #[test]
    fn zero_load_gives_zero() {
        let op = op(1, 2);
        let sys = FrequencySystem::assemble(&op, &Forcing::zero(3.0, op.ndofs())).unwrap();
        assert!(sys.load().unwrap().iter().all(|z| *z == ZERO));
        let sol = sys.solve(&SolverOptions::default()).unwrap();
        assert!(sol.field.iter().all(|z| *z == ZERO));
    }
}
