use num_complex::Complex64;
use rayon::prelude::*;

use crate::dg::material::MaterialField;
use crate::dg::space::{DgSpace, FaceLink, FIELDS};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryKind, Point};

const MAX_NP: usize = 10;
const MAX_NFP: usize = 4;

/// Volume source `j(x)`.
pub type VolumeSource = dyn Fn(Point) -> Complex64 + Send + Sync;
/// Boundary source `g(x, n)` on impedance faces.
pub type BoundarySource = dyn Fn(Point, Point) -> Complex64 + Send + Sync;

/// Complex amplitudes of the harmonic forcing `Re(j e^{iwt})`, `Re(g e^{iwt})`.
pub struct SourceSpec<'a> {
    pub omega: f64,
    pub j: Option<&'a VolumeSource>,
    pub g: Option<&'a BoundarySource>,
}

impl<'a> SourceSpec<'a> {
    pub fn none(omega: f64) -> Self {
        Self {
            omega,
            j: None,
            g: None,
        }
    }
}

/// Discrete forcing vector `S`, so that the source part of the right-hand
/// side at time `t` is `Re(S e^{iwt})`.
#[derive(Debug, Clone)]
pub struct Forcing {
    pub omega: f64,
    pub amplitude: Vec<Complex64>,
}

impl Forcing {
    pub fn zero(omega: f64, ndofs: usize) -> Self {
        Self {
            omega,
            amplitude: vec![Complex64::new(0.0, 0.0); ndofs],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            omega: self.omega,
            amplitude: self.amplitude.iter().map(|z| z * factor).collect(),
        }
    }
}

/// Semi-discrete TM Maxwell operator `B = M^{-1} K` with upwind fluxes.
#[derive(Debug, Clone)]
pub struct DgOperator {
    space: DgSpace,
    materials: MaterialField,
    penalty: f64,
}

impl DgOperator {
    /// Jump weight of the characteristic upwind flux.
    pub const UPWIND: f64 = 1.0;
    /// Default interior jump weight.
    pub const DEFAULT_PENALTY: f64 = 2.0;

    pub fn new(space: DgSpace, materials: MaterialField) -> Result<Self> {
        Self::with_penalty(space, materials, Self::DEFAULT_PENALTY)
    }

    /// `penalty` scales the jump terms of the interior flux; `1` is the
    /// characteristic upwind flux, `0` the central flux.
    pub fn with_penalty(space: DgSpace, materials: MaterialField, penalty: f64) -> Result<Self> {
        if materials.num_elements() != space.num_elements() {
            return Err(Error::DimensionMismatch {
                expected: space.num_elements(),
                got: materials.num_elements(),
            });
        }
        if !(penalty >= 0.0 && penalty.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "flux penalty must be nonnegative, got {penalty}"
            )));
        }
        Ok(Self {
            space,
            materials,
            penalty,
        })
    }

    pub fn space(&self) -> &DgSpace {
        &self.space
    }

    pub fn materials(&self) -> &MaterialField {
        &self.materials
    }

    pub fn penalty(&self) -> f64 {
        self.penalty
    }

    pub fn ndofs(&self) -> usize {
        self.space.ndofs()
    }

    /// `out = B u`.
    pub fn apply_homogeneous(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.space.check_len(u.len())?;
        self.space.check_len(out.len())?;
        let bs = self.space.block_size();
        out.par_chunks_mut(bs).enumerate().for_each(|(k, chunk)| {
            self.element_rhs(k, &u[k * bs..(k + 1) * bs], |k2| Some(&u[k2 * bs..(k2 + 1) * bs]), chunk);
        });
        Ok(())
    }

    /// `out = Phi(t, u) = B u + Re(S e^{iwt})`.
    pub fn apply_rhs(&self, forcing: &Forcing, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.apply_homogeneous(u, out)?;
        self.space.check_len(forcing.amplitude.len())?;
        if !forcing.is_zero() {
            let phase = Complex64::from_polar(1.0, forcing.omega * t);
            out.par_iter_mut()
                .zip(forcing.amplitude.par_iter())
                .for_each(|(o, s)| *o += (s * phase).re);
        }
        Ok(())
    }

    /// `B` applied to a complex vector, real and imaginary parts separately.
    pub fn apply_homogeneous_complex(&self, u: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        self.space.check_len(u.len())?;
        self.space.check_len(out.len())?;
        let bs = self.space.block_size();
        let re: Vec<f64> = u.iter().map(|z| z.re).collect();
        let im: Vec<f64> = u.iter().map(|z| z.im).collect();
        out.par_chunks_mut(bs).enumerate().for_each(|(k, chunk)| {
            let mut br = [0.0; FIELDS * MAX_NP];
            let mut bi = [0.0; FIELDS * MAX_NP];
            let r = k * bs..(k + 1) * bs;
            self.element_rhs(k, &re[r.clone()], |k2| Some(&re[k2 * bs..(k2 + 1) * bs]), &mut br[..bs]);
            self.element_rhs(k, &im[r], |k2| Some(&im[k2 * bs..(k2 + 1) * bs]), &mut bi[..bs]);
            for (i, o) in chunk.iter_mut().enumerate() {
                *o = Complex64::new(br[i], bi[i]);
            }
        });
        Ok(())
    }

    /// Diagonal block `B_KK` of element `k` (neighbor traces set to zero),
    /// row-major `3np x 3np`.
    pub fn element_block(&self, k: usize) -> Vec<f64> {
        let bs = self.space.block_size();
        let mut block = vec![0.0; bs * bs];
        let mut e = vec![0.0; bs];
        let mut col = vec![0.0; bs];
        for c in 0..bs {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[c] = 1.0;
            self.element_rhs(k, &e, |_| None, &mut col);
            for r in 0..bs {
                block[r * bs + c] = col[r];
            }
        }
        block
    }

    /// Off-diagonal block `B_{K K'}` coupling element `k` to the neighbor
    /// across its local face `f`, or `None` on boundary faces.
    pub fn coupling_block(&self, k: usize, f: usize) -> Option<(usize, Vec<f64>)> {
        let FaceLink::Interior { element, .. } = self.space.geometry(k).links[f] else {
            return None;
        };
        let bs = self.space.block_size();
        let zero = vec![0.0; bs];
        let mut block = vec![0.0; bs * bs];
        let mut e = vec![0.0; bs];
        let mut col = vec![0.0; bs];
        for c in 0..bs {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[c] = 1.0;
            self.element_rhs(
                k,
                &zero,
                |k2| if k2 == element { Some(&e[..]) } else { None },
                &mut col,
            );
            for r in 0..bs {
                block[r * bs + c] = col[r];
            }
        }
        Some((element, block))
    }

    /// Strong-form residual on element `k`. `neighbor` returns the dof block
    /// of an adjacent element; `None` treats its traces as zero.
    fn element_rhs<'b>(
        &self,
        k: usize,
        local: &[f64],
        neighbor: impl Fn(usize) -> Option<&'b [f64]>,
        out: &mut [f64],
    ) {
        let re = self.space.reference();
        let np = re.np;
        let nfp = re.nfp;
        let geo = self.space.geometry(k);
        let [rx, sx, ry, sy] = geo.metric;
        let eps = self.materials.eps(k);
        let mu = self.materials.mu(k);
        let sigma = self.materials.sigma(k);
        let (e, rest) = local.split_at(np);
        let (h1, h2) = rest.split_at(np);

        let (oe, orest) = out.split_at_mut(np);
        let (oh1, oh2) = orest.split_at_mut(np);
        for i in 0..np {
            let row_r = &re.dr[i * np..(i + 1) * np];
            let row_s = &re.ds[i * np..(i + 1) * np];
            let (mut er, mut es, mut h1r, mut h1s, mut h2r, mut h2s) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..np {
                er += row_r[j] * e[j];
                es += row_s[j] * e[j];
                h1r += row_r[j] * h1[j];
                h1s += row_s[j] * h1[j];
                h2r += row_r[j] * h2[j];
                h2s += row_s[j] * h2[j];
            }
            let dx_e = rx * er + sx * es;
            let dy_e = ry * er + sy * es;
            let curl_h = (rx * h2r + sx * h2s) - (ry * h1r + sy * h1s);
            oe[i] = -sigma * e[i] - curl_h;
            oh1[i] = dy_e;
            oh2[i] = -dx_e;
        }

        let zm = self.materials.z_flux(k);
        let ym = 1.0 / zm;
        let alpha = self.penalty;
        for f in 0..3 {
            let t = geo.tangent[f];
            let nodes = &re.face_nodes[f];
            let mut fe = [0.0; MAX_NFP];
            let mut fh = [0.0; MAX_NFP];
            match &geo.links[f] {
                FaceLink::Interior {
                    element,
                    nodes: theirs,
                } => {
                    let zp = self.materials.z_flux(*element);
                    let yp = 1.0 / zp;
                    let other = neighbor(*element);
                    for i in 0..nfp {
                        let a = nodes[i];
                        let em = e[a];
                        let htm = h1[a] * t[0] + h2[a] * t[1];
                        let (ep, htp) = match other {
                            Some(g) => {
                                let b = theirs[i];
                                (g[b], g[np + b] * t[0] + g[2 * np + b] * t[1])
                            }
                            None => (0.0, 0.0),
                        };
                        let e_star =
                            (ym * em + yp * ep + alpha * (htm - htp)) / (ym + yp);
                        let h_star =
                            (zm * htm + zp * htp + alpha * (em - ep)) / (zm + zp);
                        fe[i] = htm - h_star;
                        fh[i] = em - e_star;
                    }
                }
                FaceLink::Boundary {
                    kind: BoundaryKind::Pec,
                    ..
                } => {
                    for i in 0..nfp {
                        let a = nodes[i];
                        fe[i] = -ym * e[a];
                        fh[i] = e[a];
                    }
                }
                FaceLink::Boundary {
                    kind: BoundaryKind::Impedance,
                    face,
                } => {
                    let z = self.materials.impedance(*face);
                    let y = 1.0 / z;
                    for i in 0..nfp {
                        let a = nodes[i];
                        let em = e[a];
                        let htm = h1[a] * t[0] + h2[a] * t[1];
                        fe[i] = 0.5 * y * (z * htm - em);
                        fh[i] = 0.5 * (em - z * htm);
                    }
                }
            }
            let lift = &re.lift[f];
            let scale = geo.lift_scale[f];
            for i in 0..np {
                let row = &lift[i * nfp..(i + 1) * nfp];
                let mut ae = 0.0;
                let mut ah = 0.0;
                for j in 0..nfp {
                    ae += row[j] * fe[j];
                    ah += row[j] * fh[j];
                }
                oe[i] += scale * ae;
                oh1[i] += scale * ah * t[0];
                oh2[i] += scale * ah * t[1];
            }
        }

        oe.iter_mut().for_each(|x| *x /= eps);
        oh1.iter_mut().for_each(|x| *x /= mu);
        oh2.iter_mut().for_each(|x| *x /= mu);
    }

    /// Discrete forcing `S` for the given sources: the nodal interpolant of
    /// `j / eps` on the E dofs plus the lifted impedance data, with `g`
    /// projected onto each face in L2.
    pub fn forcing(&self, sources: &SourceSpec<'_>) -> Result<Forcing> {
        if !(sources.omega > 0.0 && sources.omega.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "angular frequency must be positive, got {}",
                sources.omega
            )));
        }
        let re = self.space.reference();
        let np = re.np;
        let nfp = re.nfp;
        let bs = self.space.block_size();
        let mut amplitude = vec![Complex64::new(0.0, 0.0); self.ndofs()];
        amplitude
            .par_chunks_mut(bs)
            .enumerate()
            .for_each(|(k, chunk)| {
                let eps = self.materials.eps(k);
                let mu = self.materials.mu(k);
                if let Some(j) = sources.j {
                    for i in 0..np {
                        chunk[i] = j(self.space.node(k, i)) / eps;
                    }
                }
                let Some(g) = sources.g else { return };
                let geo = self.space.geometry(k);
                for f in 0..3 {
                    let FaceLink::Boundary {
                        kind: BoundaryKind::Impedance,
                        face,
                    } = geo.links[f]
                    else {
                        continue;
                    };
                    let y = 1.0 / self.materials.impedance(face);
                    let t = geo.tangent[f];
                    let n = geo.normal[f];
                    let mut gv = [Complex64::new(0.0, 0.0); MAX_NFP];
                    // L2 projection of g onto the face polynomials.
                    let verts = self.space.mesh().element_vertices(k);
                    let (va, vb) = (verts[f], verts[(f + 1) % 3]);
                    let nq = re.face_quad.len();
                    for (qi, &sq) in re.face_quad.iter().enumerate() {
                        let (wa, wb) = ((1.0 - sq) / 2.0, (1.0 + sq) / 2.0);
                        let val = g([wa * va[0] + wb * vb[0], wa * va[1] + wb * vb[1]], n);
                        for i in 0..nfp {
                            gv[i] += val * re.face_projection[i * nq + qi];
                        }
                    }
                    let lift = &re.lift[f];
                    let scale = geo.lift_scale[f];
                    for i in 0..np {
                        let row = &lift[i * nfp..(i + 1) * nfp];
                        let mut acc = Complex64::new(0.0, 0.0);
                        for jj in 0..nfp {
                            acc += gv[jj] * row[jj];
                        }
                        acc *= scale;
                        chunk[i] += acc * (0.5 * y / eps);
                        chunk[np + i] -= acc * (0.5 * t[0] / mu);
                        chunk[2 * np + i] -= acc * (0.5 * t[1] / mu);
                    }
                }
            });
        Ok(Forcing {
            omega: sources.omega,
            amplitude,
        })
    }

    /// Nodal interpolation of a scalar source onto the E dofs (H dofs zero).
    pub fn project_source(&self, j: &VolumeSource) -> Vec<Complex64> {
        self.interpolate(|p| [j(p), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)])
    }

    /// Nodal interpolant of a complex field `(e, h1, h2)`.
    pub fn interpolate(&self, f: impl Fn(Point) -> [Complex64; 3] + Sync) -> Vec<Complex64> {
        let np = self.space.np();
        let bs = self.space.block_size();
        let mut out = vec![Complex64::new(0.0, 0.0); self.ndofs()];
        out.par_chunks_mut(bs).enumerate().for_each(|(k, chunk)| {
            for i in 0..np {
                let v = f(self.space.node(k, i));
                for (field, val) in v.into_iter().enumerate() {
                    chunk[field * np + i] = val;
                }
            }
        });
        out
    }

    fn field_weight(&self, k: usize, field: usize) -> f64 {
        if field == 0 {
            self.materials.eps(k)
        } else {
            self.materials.mu(k)
        }
    }

    /// `out = M u` with `M` the (eps, mu)-weighted block-diagonal mass matrix.
    pub fn apply_mass(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.apply_blockwise(u, out, false)
    }

    /// `out = M^{-1} u`.
    pub fn apply_mass_inverse(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.apply_blockwise(u, out, true)
    }

    fn apply_blockwise(&self, u: &[f64], out: &mut [f64], inverse: bool) -> Result<()> {
        self.space.check_len(u.len())?;
        self.space.check_len(out.len())?;
        let re = self.space.reference();
        let np = re.np;
        let bs = self.space.block_size();
        out.par_chunks_mut(bs).enumerate().for_each(|(k, chunk)| {
            let area = self.space.geometry(k).area;
            // Reference triangle area is 2.
            let jac = area / 2.0;
            for field in 0..FIELDS {
                let w = self.field_weight(k, field) * jac;
                let src = &u[k * bs + field * np..k * bs + (field + 1) * np];
                for i in 0..np {
                    let mut acc = 0.0;
                    if inverse {
                        let row = &re.mass_inverse[i * np..(i + 1) * np];
                        for j in 0..np {
                            acc += row[j] * src[j];
                        }
                        chunk[field * np + i] = acc / w;
                    } else {
                        let row = &re.mass[i * np..(i + 1) * np];
                        for j in 0..np {
                            acc += row[j] * src[j];
                        }
                        chunk[field * np + i] = acc * w;
                    }
                }
            }
        });
        Ok(())
    }

    /// `v^T M u`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.space.check_len(u.len())?;
        self.space.check_len(v.len())?;
        let re = self.space.reference();
        let np = re.np;
        let bs = self.space.block_size();
        let parts: Vec<f64> = (0..self.space.num_elements())
            .into_par_iter()
            .map(|k| {
                let jac = self.space.geometry(k).area / 2.0;
                let mut total = 0.0;
                for field in 0..FIELDS {
                    let off = k * bs + field * np;
                    let mut acc = 0.0;
                    for i in 0..np {
                        let row = &re.mass[i * np..(i + 1) * np];
                        let mut mu_i = 0.0;
                        for j in 0..np {
                            mu_i += row[j] * u[off + j];
                        }
                        acc += v[off + i] * mu_i;
                    }
                    total += self.field_weight(k, field) * jac * acc;
                }
                total
            })
            .collect();
        Ok(parts.iter().sum())
    }

    pub fn norm(&self, u: &[f64]) -> Result<f64> {
        Ok(self.inner(u, u)?.max(0.0).sqrt())
    }

    /// `conj(v)^T M u`.
    pub fn inner_complex(&self, u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
        self.space.check_len(u.len())?;
        self.space.check_len(v.len())?;
        let re = self.space.reference();
        let np = re.np;
        let bs = self.space.block_size();
        let parts: Vec<Complex64> = (0..self.space.num_elements())
            .into_par_iter()
            .map(|k| {
                let jac = self.space.geometry(k).area / 2.0;
                let mut total = Complex64::new(0.0, 0.0);
                for field in 0..FIELDS {
                    let off = k * bs + field * np;
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..np {
                        let row = &re.mass[i * np..(i + 1) * np];
                        let mut mu_i = Complex64::new(0.0, 0.0);
                        for j in 0..np {
                            mu_i += u[off + j] * row[j];
                        }
                        acc += v[off + i].conj() * mu_i;
                    }
                    total += acc * (self.field_weight(k, field) * jac);
                }
                total
            })
            .collect();
        Ok(parts.iter().sum())
    }

    pub fn norm_complex(&self, u: &[Complex64]) -> Result<f64> {
        Ok(self.inner_complex(u, u)?.re.max(0.0).sqrt())
    }
}
