use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Element-wise constant coefficients at one point of the domain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct Coefficients {
    pub eps: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Self {
            eps: 1.0,
            mu: 1.0,
            sigma: 0.0,
        }
    }
}

/// Piecewise-constant `eps`, `mu`, `sigma` per element and surface
/// impedance `Z` per boundary face.
#[derive(Debug, Clone)]
pub struct MaterialField {
    eps: Vec<f64>,
    mu: Vec<f64>,
    sigma: Vec<f64>,
    impedance: Vec<f64>,
}

impl MaterialField {
    pub fn uniform(mesh: &Mesh, coeffs: Coefficients, impedance: f64) -> Result<Self> {
        Self::from_fn(mesh, |_| coeffs, impedance)
    }

    /// Coefficients sampled at element centroids. Elements must not straddle
    /// a material interface.
    pub fn from_fn(
        mesh: &Mesh,
        coeffs: impl Fn(Point) -> Coefficients,
        impedance: f64,
    ) -> Result<Self> {
        let n = mesh.num_elements();
        let mut out = Self {
            eps: Vec::with_capacity(n),
            mu: Vec::with_capacity(n),
            sigma: Vec::with_capacity(n),
            impedance: vec![impedance; mesh.faces().len()],
        };
        for k in 0..n {
            let c = coeffs(mesh.centroid(k));
            out.eps.push(c.eps);
            out.mu.push(c.mu);
            out.sigma.push(c.sigma);
        }
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        for k in 0..self.eps.len() {
            let (e, m, s) = (self.eps[k], self.mu[k], self.sigma[k]);
            if !(e > 0.0 && m > 0.0 && s >= 0.0 && e.is_finite() && m.is_finite() && s.is_finite())
            {
                return Err(Error::InvalidParameter(format!(
                    "element {k}: need eps > 0, mu > 0, sigma >= 0 (got {e}, {m}, {s})"
                )));
            }
        }
        if let Some(z) = self.impedance.iter().find(|z| !(**z > 0.0 && z.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "surface impedance must be positive, got {z}"
            )));
        }
        Ok(())
    }

    /// Overrides `Z` on one global face.
    pub fn set_impedance(&mut self, face: usize, z: f64) -> Result<()> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "surface impedance must be positive, got {z}"
            )));
        }
        self.impedance[face] = z;
        Ok(())
    }

    /// Copy with `eps` on element `k` replaced.
    pub fn with_eps(mut self, k: usize, eps: f64) -> Result<Self> {
        self.eps[k] = eps;
        self.validate()?;
        Ok(self)
    }

    pub fn eps(&self, k: usize) -> f64 {
        self.eps[k]
    }

    pub fn mu(&self, k: usize) -> f64 {
        self.mu[k]
    }

    pub fn sigma(&self, k: usize) -> f64 {
        self.sigma[k]
    }

    pub fn impedance(&self, face: usize) -> f64 {
        self.impedance[face]
    }

    pub fn z_flux(&self, k: usize) -> f64 {
        (self.mu[k] / self.eps[k]).sqrt()
    }

    pub fn y_flux(&self, k: usize) -> f64 {
        (self.eps[k] / self.mu[k]).sqrt()
    }

    pub fn num_elements(&self) -> usize {
        self.eps.len()
    }
}
