//! Reference triangle `(-1,-1), (1,-1), (-1,1)`: orthonormal modal basis,
//! warp & blend nodal points, differentiation and lifting matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

fn gamma_int(x: f64) -> f64 {
    // Only integer arguments >= 1 occur here.
    let n = x.round() as i64;
    debug_assert!((x - n as f64).abs() < 1e-12 && n >= 1);
    (1..n).map(|k| k as f64).product()
}

/// Orthonormal Jacobi polynomial `P_n^{(alpha, beta)}` evaluated at `x`.
pub fn jacobi_p(x: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    let gamma0 = 2f64.powf(alpha + beta + 1.0) / (alpha + beta + 1.0) * gamma_int(alpha + 1.0)
        * gamma_int(beta + 1.0)
        / gamma_int(alpha + beta + 1.0);
    let p0 = 1.0 / gamma0.sqrt();
    if n == 0 {
        return p0;
    }
    let gamma1 = (alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0) * gamma0;
    let p1 = ((alpha + beta + 2.0) * x / 2.0 + (alpha - beta) / 2.0) / gamma1.sqrt();
    if n == 1 {
        return p1;
    }
    let mut aold = 2.0 / (2.0 + alpha + beta)
        * ((alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0)).sqrt();
    let (mut pm1, mut p) = (p0, p1);
    for i in 1..n {
        let i = i as f64;
        let h1 = 2.0 * i + alpha + beta;
        let anew = 2.0 / (h1 + 2.0)
            * ((i + 1.0) * (i + 1.0 + alpha + beta) * (i + 1.0 + alpha) * (i + 1.0 + beta)
                / (h1 + 1.0)
                / (h1 + 3.0))
                .sqrt();
        let bnew = -(alpha * alpha - beta * beta) / h1 / (h1 + 2.0);
        let next = (-aold * pm1 + (x - bnew) * p) / anew;
        pm1 = p;
        p = next;
        aold = anew;
    }
    p
}

pub fn grad_jacobi_p(x: f64, alpha: f64, beta: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        let nf = n as f64;
        (nf * (nf + alpha + beta + 1.0)).sqrt() * jacobi_p(x, alpha + 1.0, beta + 1.0, n - 1)
    }
}

/// Gauss-Jacobi quadrature with `n + 1` points (Golub-Welsch).
pub fn jacobi_gq(alpha: f64, beta: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 0 {
        return (vec![(alpha - beta) / (alpha + beta + 2.0)], vec![2.0]);
    }
    let size = n + 1;
    let mut jac = DMatrix::<f64>::zeros(size, size);
    for i in 0..size {
        let h1 = 2.0 * i as f64 + alpha + beta;
        jac[(i, i)] = if alpha + beta < 1e-14 && i == 0 {
            0.0
        } else {
            -(alpha * alpha - beta * beta) / (h1 + 2.0) / h1
        };
        if i + 1 < size {
            let k = (i + 1) as f64;
            let v = 2.0 / (h1 + 2.0)
                * (k * (k + alpha + beta) * (k + alpha) * (k + beta) / (h1 + 1.0) / (h1 + 3.0))
                    .sqrt();
            jac[(i, i + 1)] = v;
            jac[(i + 1, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(jac);
    let scale = 2f64.powf(alpha + beta + 1.0) / (alpha + beta + 1.0) * gamma_int(alpha + 1.0)
        * gamma_int(beta + 1.0)
        / gamma_int(alpha + beta + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..size)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0 * scale)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Gauss-Lobatto-Jacobi points, `n + 1` of them.
pub fn jacobi_gl(alpha: f64, beta: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![-1.0, 1.0];
    }
    let (inner, _) = jacobi_gq(alpha + 1.0, beta + 1.0, n - 2);
    let mut x = Vec::with_capacity(n + 1);
    x.push(-1.0);
    x.extend(inner);
    x.push(1.0);
    x
}

fn vandermonde_1d(n: usize, r: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), n + 1, |i, j| jacobi_p(r[i], 0.0, 0.0, j))
}

fn warp_factor(n: usize, rout: &[f64]) -> Vec<f64> {
    let lgl = jacobi_gl(0.0, 0.0, n);
    let req: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    let veq = vandermonde_1d(n, &req);
    let pmat = DMatrix::from_fn(n + 1, rout.len(), |i, j| jacobi_p(rout[j], 0.0, 0.0, i));
    let lmat = veq
        .transpose()
        .lu()
        .solve(&pmat)
        .expect("equispaced Vandermonde is invertible");
    let shift = DVector::from_iterator(n + 1, lgl.iter().zip(&req).map(|(a, b)| a - b));
    let warp = lmat.transpose() * shift;
    rout.iter()
        .zip(warp.iter())
        .map(|(&r, &w)| {
            if r.abs() < 1.0 - 1e-10 {
                w / (1.0 - r * r)
            } else {
                0.0
            }
        })
        .collect()
}

/// Warp & blend nodes on the reference triangle, in `(r, s)` coordinates.
pub fn nodes_2d(n: usize) -> (Vec<f64>, Vec<f64>) {
    const ALPHA_OPT: [f64; 15] = [
        0.0000, 0.0000, 1.4152, 0.1001, 0.2751, 0.9800, 1.0999, 1.2832, 1.3648, 1.4773, 1.4959,
        1.5743, 1.5770, 1.6223, 1.6258,
    ];
    let alpha = if n < 16 { ALPHA_OPT[n - 1] } else { 5.0 / 3.0 };
    let sqrt3 = 3f64.sqrt();
    let (mut l1, mut l2, mut l3) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..=n {
        for j in 0..=(n - i) {
            let a = i as f64 / n as f64;
            let c = j as f64 / n as f64;
            l1.push(a);
            l3.push(c);
            l2.push(1.0 - a - c);
        }
    }
    let np = l1.len();
    let mut x: Vec<f64> = (0..np).map(|i| -l2[i] + l3[i]).collect();
    let mut y: Vec<f64> = (0..np)
        .map(|i| (-l2[i] - l3[i] + 2.0 * l1[i]) / sqrt3)
        .collect();
    let d1: Vec<f64> = (0..np).map(|i| l3[i] - l2[i]).collect();
    let d2: Vec<f64> = (0..np).map(|i| l1[i] - l3[i]).collect();
    let d3: Vec<f64> = (0..np).map(|i| l2[i] - l1[i]).collect();
    let w1 = warp_factor(n, &d1);
    let w2 = warp_factor(n, &d2);
    let w3 = warp_factor(n, &d3);
    let (c2, s2) = ((2.0 * std::f64::consts::PI / 3.0).cos(), (2.0 * std::f64::consts::PI / 3.0).sin());
    let (c4, s4) = ((4.0 * std::f64::consts::PI / 3.0).cos(), (4.0 * std::f64::consts::PI / 3.0).sin());
    for i in 0..np {
        let b1 = 4.0 * l2[i] * l3[i];
        let b2 = 4.0 * l1[i] * l3[i];
        let b3 = 4.0 * l1[i] * l2[i];
        let warp1 = b1 * w1[i] * (1.0 + (alpha * l1[i]).powi(2));
        let warp2 = b2 * w2[i] * (1.0 + (alpha * l2[i]).powi(2));
        let warp3 = b3 * w3[i] * (1.0 + (alpha * l3[i]).powi(2));
        x[i] += warp1 + c2 * warp2 + c4 * warp3;
        y[i] += s2 * warp2 + s4 * warp3;
    }
    // Equilateral to right triangle.
    let mut r = Vec::with_capacity(np);
    let mut s = Vec::with_capacity(np);
    for i in 0..np {
        let l1 = (sqrt3 * y[i] + 1.0) / 3.0;
        let l2 = (-3.0 * x[i] - sqrt3 * y[i] + 2.0) / 6.0;
        let l3 = (3.0 * x[i] - sqrt3 * y[i] + 2.0) / 6.0;
        r.push(-l2 + l3 - l1);
        s.push(-l2 - l3 + l1);
    }
    (r, s)
}

fn rs_to_ab(r: f64, s: f64) -> (f64, f64) {
    let a = if (s - 1.0).abs() > 1e-14 {
        2.0 * (1.0 + r) / (1.0 - s) - 1.0
    } else {
        -1.0
    };
    (a, s)
}

fn simplex_2d(a: f64, b: f64, i: usize, j: usize) -> f64 {
    let h1 = jacobi_p(a, 0.0, 0.0, i);
    let h2 = jacobi_p(b, 2.0 * i as f64 + 1.0, 0.0, j);
    std::f64::consts::SQRT_2 * h1 * h2 * (1.0 - b).powi(i as i32)
}

fn grad_simplex_2d(a: f64, b: f64, id: usize, jd: usize) -> (f64, f64) {
    let fa = jacobi_p(a, 0.0, 0.0, id);
    let dfa = grad_jacobi_p(a, 0.0, 0.0, id);
    let gb = jacobi_p(b, 2.0 * id as f64 + 1.0, 0.0, jd);
    let dgb = grad_jacobi_p(b, 2.0 * id as f64 + 1.0, 0.0, jd);
    let half = 0.5 * (1.0 - b);
    let mut dr = dfa * gb;
    let mut ds = dfa * (gb * (0.5 * (1.0 + a)));
    if id > 0 {
        dr *= half.powi(id as i32 - 1);
        ds *= half.powi(id as i32 - 1);
    }
    let mut tmp = dgb * half.powi(id as i32);
    if id > 0 {
        tmp -= 0.5 * id as f64 * gb * half.powi(id as i32 - 1);
    }
    ds += fa * tmp;
    let scale = 2f64.powf(id as f64 + 0.5);
    (dr * scale, ds * scale)
}

fn modes(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..=n {
        for j in 0..=(n - i) {
            out.push((i, j));
        }
    }
    out
}

/// Modal Vandermonde matrix at arbitrary points.
pub fn vandermonde_2d(n: usize, r: &[f64], s: &[f64]) -> DMatrix<f64> {
    let m = modes(n);
    DMatrix::from_fn(r.len(), m.len(), |p, q| {
        let (a, b) = rs_to_ab(r[p], s[p]);
        simplex_2d(a, b, m[q].0, m[q].1)
    })
}

fn grad_vandermonde_2d(n: usize, r: &[f64], s: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = modes(n);
    let mut vr = DMatrix::zeros(r.len(), m.len());
    let mut vs = DMatrix::zeros(r.len(), m.len());
    for p in 0..r.len() {
        let (a, b) = rs_to_ab(r[p], s[p]);
        for (q, &(i, j)) in m.iter().enumerate() {
            let (dr, ds) = grad_simplex_2d(a, b, i, j);
            vr[(p, q)] = dr;
            vs[(p, q)] = ds;
        }
    }
    (vr, vs)
}

/// Quadrature on the reference triangle by collapsed Gauss rules, exact for
/// polynomials up to degree `2 * n_1d - 1`. Returns `(r, s, weights)`;
/// weights sum to the reference area 2.
pub fn triangle_quadrature(n_1d: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (xa, wa) = jacobi_gq(0.0, 0.0, n_1d - 1);
    let (xb, wb) = jacobi_gq(1.0, 0.0, n_1d - 1);
    let mut r = Vec::new();
    let mut s = Vec::new();
    let mut w = Vec::new();
    for (b, wbj) in xb.iter().zip(&wb) {
        for (a, wai) in xa.iter().zip(&wa) {
            r.push(0.5 * (1.0 + a) * (1.0 - b) - 1.0);
            s.push(*b);
            w.push(0.5 * wai * wbj);
        }
    }
    (r, s, w)
}

fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Nodal reference element of degree `q`.
#[derive(Debug, Clone)]
pub struct RefElement {
    pub degree: usize,
    /// Nodes per element, `(q+1)(q+2)/2`.
    pub np: usize,
    /// Nodes per face, `q + 1`.
    pub nfp: usize,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    /// Inverse Vandermonde, modal coefficients from nodal values.
    pub vinv: DMatrix<f64>,
    /// Differentiation matrices, row-major `np x np`.
    pub dr: Vec<f64>,
    pub ds: Vec<f64>,
    /// Reference mass matrix, row-major.
    pub mass: Vec<f64>,
    pub mass_inverse: Vec<f64>,
    /// Volume node indices of each face, ordered from the face's first
    /// vertex to its second.
    pub face_nodes: [Vec<usize>; 3],
    /// `M^{-1} E_f^T M_1d`, row-major `np x nfp`, per face.
    pub lift: [Vec<f64>; 3],
    /// 1D mass matrix on `[-1, 1]` for the face nodes.
    pub face_mass: Vec<f64>,
    /// Gauss points on `[-1, 1]` for face integrals.
    pub face_quad: Vec<f64>,
    /// L2 projection onto the face nodal basis from values at `face_quad`,
    /// row-major `nfp x face_quad.len()`.
    pub face_projection: Vec<f64>,
}

impl RefElement {
    pub fn new(degree: usize) -> Result<Self> {
        if degree != 1 && degree != 3 {
            return Err(Error::UnsupportedDegree(degree));
        }
        Ok(Self::build(degree))
    }

    pub(crate) fn build(degree: usize) -> Self {
        let n = degree;
        let (r, s) = nodes_2d(n);
        let np = r.len();
        let nfp = n + 1;
        let v = vandermonde_2d(n, &r, &s);
        let vinv = v.clone().try_inverse().expect("nodal set is unisolvent");
        let (vr, vs) = grad_vandermonde_2d(n, &r, &s);
        let dr = &vr * &vinv;
        let ds = &vs * &vinv;
        let mass = (&v * v.transpose())
            .try_inverse()
            .expect("mass matrix is invertible");
        let inv_mass = &v * v.transpose();

        let tol = 1e-10;
        let mut face_nodes: [Vec<usize>; 3] = Default::default();
        // Face coordinate in [-1, 1] running from the first vertex.
        let coord = |f: usize, i: usize| match f {
            0 => r[i],
            1 => s[i],
            _ => -s[i],
        };
        for (f, nodes) in face_nodes.iter_mut().enumerate() {
            let mut idx: Vec<usize> = (0..np)
                .filter(|&i| match f {
                    0 => (s[i] + 1.0).abs() < tol,
                    1 => (r[i] + s[i]).abs() < tol,
                    _ => (r[i] + 1.0).abs() < tol,
                })
                .collect();
            idx.sort_by(|&a, &b| coord(f, a).total_cmp(&coord(f, b)));
            assert_eq!(idx.len(), nfp);
            *nodes = idx;
        }
        let face_r: Vec<f64> = face_nodes[0].iter().map(|&i| r[i]).collect();
        let v1 = vandermonde_1d(n, &face_r);
        let m1 = (&v1 * v1.transpose())
            .try_inverse()
            .expect("1D mass is invertible");
        let lift = std::array::from_fn(|f| {
            let mut e = DMatrix::zeros(np, nfp);
            for (j, &i) in face_nodes[f].iter().enumerate() {
                for c in 0..nfp {
                    e[(i, c)] = m1[(j, c)];
                }
            }
            to_row_major(&(&inv_mass * e))
        });

        let (face_quad, face_w) = jacobi_gq(0.0, 0.0, n + 5);
        let v1_inv = v1.clone().try_inverse().expect("1D nodal set is unisolvent");
        let phi = vandermonde_1d(n, &face_quad) * &v1_inv;
        let mut weighted = phi.transpose();
        for (c, w) in face_w.iter().enumerate() {
            weighted.column_mut(c).scale_mut(*w);
        }
        let face_projection = to_row_major(&(&m1.clone().try_inverse().expect("1D mass is invertible") * weighted));

        Self {
            degree,
            np,
            nfp,
            r,
            s,
            vinv,
            dr: to_row_major(&dr),
            ds: to_row_major(&ds),
            mass: to_row_major(&mass),
            mass_inverse: to_row_major(&inv_mass),
            face_nodes,
            lift,
            face_mass: to_row_major(&m1),
            face_quad,
            face_projection,
        }
    }

    /// Interpolation matrix (row-major `points x np`) from nodal values to
    /// the given reference points.
    pub fn interpolation_matrix(&self, r: &[f64], s: &[f64]) -> Vec<f64> {
        let vq = vandermonde_2d(self.degree, r, s);
        to_row_major(&(vq * &self.vinv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_nodes_are_vertices() {
        let (r, s) = nodes_2d(1);
        assert_eq!(r.len(), 3);
        let expected = [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
        for (i, (er, es)) in expected.iter().enumerate() {
            assert!((r[i] - er).abs() < 1e-14 && (s[i] - es).abs() < 1e-14);
        }
    }

    #[test]
    fn p3_node_set() {
        let e = RefElement::new(3).unwrap();
        assert_eq!(e.np, 10);
        assert_eq!(e.nfp, 4);
        // Face nodes are the 1D Gauss-Lobatto points.
        let lgl = jacobi_gl(0.0, 0.0, 3);
        for (j, &i) in e.face_nodes[0].iter().enumerate() {
            assert!((e.r[i] - lgl[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn vandermonde_well_conditioned() {
        for q in [1, 3] {
            let (r, s) = nodes_2d(q);
            let v = vandermonde_2d(q, &r, &s);
            let sv = v.singular_values();
            let cond = sv.max() / sv.min();
            assert!(cond.is_finite() && cond < 100.0, "cond = {cond}");
        }
    }

    #[test]
    fn differentiation_exact_on_polynomials() {
        let e = RefElement::new(3).unwrap();
        let f: Vec<f64> = (0..e.np).map(|i| e.r[i].powi(3) + e.r[i] * e.s[i] * e.s[i]).collect();
        for i in 0..e.np {
            let dfr: f64 = (0..e.np).map(|j| e.dr[i * e.np + j] * f[j]).sum();
            let dfs: f64 = (0..e.np).map(|j| e.ds[i * e.np + j] * f[j]).sum();
            assert!((dfr - (3.0 * e.r[i].powi(2) + e.s[i].powi(2))).abs() < 1e-12);
            assert!((dfs - 2.0 * e.r[i] * e.s[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn p1_reference_mass_closed_form() {
        // Reference area 2: diag = 2/6 * 2 / 2 ... = area/6, off-diagonal area/12.
        let e = RefElement::new(1).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 / 6.0 } else { 2.0 / 12.0 };
                assert!((e.mass[i * 3 + j] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn quadrature_integrates_monomials() {
        let (r, s, w) = triangle_quadrature(5);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        // Integral of (1+r)^a (1+s)^b over the reference triangle equals
        // 2^(a+b+2) a! b! / (a+b+2)!.
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        for a in 0..5u32 {
            for b in 0..(9 - a).min(5) {
                let q: f64 = (0..w.len())
                    .map(|i| w[i] * (1.0 + r[i]).powi(a as i32) * (1.0 + s[i]).powi(b as i32))
                    .sum();
                let exact = 2f64.powi((a + b + 2) as i32) * fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-12 * exact.max(1.0), "a={a} b={b}");
            }
        }
    }

    #[test]
    fn unsupported_degree() {
        assert!(matches!(RefElement::new(2), Err(Error::UnsupportedDegree(2))));
    }
}
