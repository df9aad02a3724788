//! Triangular meshes with face topology.
//!
//! Local face `j` of an element joins its vertices `j` and `(j + 1) % 3`.
//! Elements are stored counterclockwise. Interior face normals point from the
//! lower-indexed element to the higher-indexed one; boundary normals point out
//! of the domain.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Perfect electric conductor, `E = 0`.
    Pec,
    /// Silver-Müller type impedance condition.
    Impedance,
}

#[derive(Debug, Clone)]
pub struct Face {
    pub vertices: [usize; 2],
    /// Element owning the face and the face's local index in it.
    pub owner: (usize, usize),
    pub neighbor: Option<(usize, usize)>,
    /// Unit normal `n_F`.
    pub normal: Point,
    /// `n_F` rotated by +pi/2.
    pub tangent: Point,
    pub length: f64,
    pub boundary: Option<BoundaryKind>,
}

impl Face {
    pub fn midpoint(&self, mesh: &Mesh) -> Point {
        let a = mesh.vertices[self.vertices[0]];
        let b = mesh.vertices[self.vertices[1]];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

/// Axis-aligned rectangle `(x0, x1) x (y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    pub fn unit() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn diameter(&self) -> f64 {
        (self.x1 - self.x0).hypot(self.y1 - self.y0)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    /// Geometric tolerance used when classifying boundary faces.
    pub fn tolerance(&self) -> f64 {
        1e-10 * self.diameter()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    faces: Vec<Face>,
    element_faces: Vec<[usize; 3]>,
    area: Vec<f64>,
    inradius: Vec<f64>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: Point, b: Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

impl Mesh {
    /// Builds the face topology of a triangulation. Clockwise elements are
    /// reoriented; degenerate ones are rejected.
    pub fn from_triangles(
        vertices: Vec<Point>,
        mut elements: Vec<[usize; 3]>,
        classifier: &dyn Fn(Point) -> BoundaryKind,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidMesh("mesh has no elements".into()));
        }
        let scale = vertices
            .iter()
            .fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()))
            .max(f64::MIN_POSITIVE);

        let mut area = Vec::with_capacity(elements.len());
        let mut inradius = Vec::with_capacity(elements.len());
        for (k, el) in elements.iter_mut().enumerate() {
            if el.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "element {k} references a missing vertex"
                )));
            }
            let [a, b, c] = el.map(|v| vertices[v]);
            let mut s = signed_area(a, b, c);
            if s.abs() <= 1e-14 * scale * scale {
                return Err(Error::InvalidMesh(format!("element {k} is degenerate")));
            }
            if s < 0.0 {
                el.swap(1, 2);
                s = -s;
            }
            let perimeter = dist(a, b) + dist(b, c) + dist(c, a);
            area.push(s);
            inradius.push(2.0 * s / perimeter);
        }

        let mut faces: Vec<Face> = Vec::new();
        let mut element_faces = vec![[usize::MAX; 3]; elements.len()];
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        for (k, el) in elements.iter().enumerate() {
            for j in 0..3 {
                let (v0, v1) = (el[j], el[(j + 1) % 3]);
                let key = (v0.min(v1), v0.max(v1));
                match lookup.get(&key) {
                    Some(&f) => {
                        let face = &mut faces[f];
                        if face.neighbor.is_some() {
                            return Err(Error::InvalidMesh(format!(
                                "edge ({v0}, {v1}) is shared by more than two elements"
                            )));
                        }
                        face.neighbor = Some((k, j));
                        element_faces[k][j] = f;
                    }
                    None => {
                        let (pa, pb) = (vertices[v0], vertices[v1]);
                        let length = dist(pa, pb);
                        // Counterclockwise element: the outward normal of edge
                        // a -> b is the edge direction rotated by -pi/2.
                        let normal = [(pb[1] - pa[1]) / length, -(pb[0] - pa[0]) / length];
                        let tangent = [-normal[1], normal[0]];
                        lookup.insert(key, faces.len());
                        element_faces[k][j] = faces.len();
                        faces.push(Face {
                            vertices: [v0, v1],
                            owner: (k, j),
                            neighbor: None,
                            normal,
                            tangent,
                            length,
                            boundary: None,
                        });
                    }
                }
            }
        }

        let mut mesh = Self {
            vertices,
            elements,
            faces,
            element_faces,
            area,
            inradius,
        };
        for f in 0..mesh.faces.len() {
            if mesh.faces[f].is_boundary() {
                let kind = classifier(mesh.faces[f].midpoint(&mesh));
                mesh.faces[f].boundary = Some(kind);
            }
        }
        Ok(mesh)
    }

    /// Cartesian triangulation of `domain`: an `nx x ny` grid of rectangles,
    /// each split into four triangles through its barycentre.
    pub fn cartesian(
        nx: usize,
        ny: usize,
        domain: Rect,
        classifier: &dyn Fn(Point) -> BoundaryKind,
    ) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidMesh(format!(
                "cartesian mesh needs positive dimensions, got {nx} x {ny}"
            )));
        }
        if !(domain.x1 > domain.x0 && domain.y1 > domain.y0) {
            return Err(Error::InvalidMesh("degenerate rectangle".into()));
        }
        let hx = (domain.x1 - domain.x0) / nx as f64;
        let hy = (domain.y1 - domain.y0) / ny as f64;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([domain.x0 + i as f64 * hx, domain.y0 + j as f64 * hy]);
            }
        }
        let grid = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(4 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let c = vertices.len();
                vertices.push([
                    domain.x0 + (i as f64 + 0.5) * hx,
                    domain.y0 + (j as f64 + 0.5) * hy,
                ]);
                let (sw, se) = (grid(i, j), grid(i + 1, j));
                let (ne, nw) = (grid(i + 1, j + 1), grid(i, j + 1));
                elements.push([sw, se, c]);
                elements.push([se, ne, c]);
                elements.push([ne, nw, c]);
                elements.push([nw, sw, c]);
            }
        }
        Self::from_triangles(vertices, elements, classifier)
    }

    /// Copy with all coordinates multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vertices {
            v[0] *= factor;
            v[1] *= factor;
        }
        for f in &mut out.faces {
            f.length *= factor;
        }
        for a in &mut out.area {
            *a *= factor * factor;
        }
        for r in &mut out.inradius {
            *r *= factor;
        }
        out
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// Global face index of local face `j` of element `k`.
    pub fn element_face(&self, k: usize, j: usize) -> usize {
        self.element_faces[k][j]
    }

    pub fn element_vertices(&self, k: usize) -> [Point; 3] {
        self.elements[k].map(|v| self.vertices[v])
    }

    pub fn area(&self, k: usize) -> f64 {
        self.area[k]
    }

    /// Radius of the circle inscribed in element `k`.
    pub fn inradius(&self, k: usize) -> f64 {
        self.inradius[k]
    }

    pub fn centroid(&self, k: usize) -> Point {
        let [a, b, c] = self.element_vertices(k);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Outward unit normal of local face `j` of element `k`.
    pub fn outward_normal(&self, k: usize, j: usize) -> Point {
        let face = &self.faces[self.element_faces[k][j]];
        if face.owner == (k, j) {
            face.normal
        } else {
            [-face.normal[0], -face.normal[1]]
        }
    }

    pub fn total_area(&self) -> f64 {
        self.area.iter().sum()
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.is_boundary()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pec(_: Point) -> BoundaryKind {
        BoundaryKind::Pec
    }

    #[test]
    fn single_cell() {
        let m = Mesh::cartesian(1, 1, Rect::unit(), &pec).unwrap();
        assert_eq!(m.vertices().len(), 5);
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.faces().len(), 8);
        assert_eq!(m.num_boundary_faces(), 4);
    }

    #[test]
    fn preset_sized_meshes() {
        let m = Mesh::cartesian(32, 32, Rect::unit(), &pec).unwrap();
        assert_eq!(m.num_elements(), 4096);
        let m = Mesh::cartesian(64, 16, Rect::new(0.0, 4.0, 0.0, 1.0), &pec).unwrap();
        assert_eq!(m.num_elements(), 4096);
        // Sub-triangle of a square cell of side h: legs h/sqrt(2), base h.
        let h: f64 = 1.0 / 16.0;
        let expected = (h * h / 4.0) / (0.5 * h * (1.0 + 2f64.sqrt()));
        for k in 0..m.num_elements() {
            assert!((m.inradius(k) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_empty_grid() {
        assert!(Mesh::cartesian(0, 3, Rect::unit(), &pec).is_err());
        assert!(Mesh::cartesian(2, 2, Rect::new(0.0, 0.0, 0.0, 1.0), &pec).is_err());
    }

    #[test]
    fn topology_invariants() {
        let dom = Rect::new(-1.0, 2.0, 0.5, 1.5);
        let tol = dom.tolerance();
        let classify = |p: Point| {
            if (p[0] - dom.x1).abs() < tol {
                BoundaryKind::Impedance
            } else {
                BoundaryKind::Pec
            }
        };
        let m = Mesh::cartesian(5, 3, dom, &classify).unwrap();
        assert!((m.total_area() - dom.area()).abs() < 1e-12 * dom.area());
        for f in m.faces() {
            let t = f.tangent;
            assert_eq!(t, [-f.normal[1], f.normal[0]]);
            match f.neighbor {
                Some((k2, j2)) => {
                    assert!(f.boundary.is_none());
                    assert!(f.owner.0 < k2);
                    let n2 = m.outward_normal(k2, j2);
                    assert!((n2[0] + f.normal[0]).abs() < 1e-15);
                    assert!((n2[1] + f.normal[1]).abs() < 1e-15);
                }
                None => {
                    let mid = f.midpoint(&m);
                    let c = m.centroid(f.owner.0);
                    let out = (mid[0] - c[0]) * f.normal[0] + (mid[1] - c[1]) * f.normal[1];
                    assert!(out > 0.0);
                    let expected = if (mid[0] - 2.0).abs() < tol {
                        BoundaryKind::Impedance
                    } else {
                        BoundaryKind::Pec
                    };
                    assert_eq!(f.boundary, Some(expected));
                }
            }
        }
        for k in 0..m.num_elements() {
            assert!(m.area(k) > 0.0 && m.inradius(k) > 0.0);
            let mut sum = [0.0; 2];
            for j in 0..3 {
                let n = m.outward_normal(k, j);
                let len = m.faces()[m.element_face(k, j)].length;
                sum[0] += len * n[0];
                sum[1] += len * n[1];
            }
            assert!(sum[0].abs() < 1e-14 && sum[1].abs() < 1e-14);
        }
    }

    #[test]
    fn reorients_clockwise_input() {
        let v = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        let m = Mesh::from_triangles(v, vec![[0, 1, 2]], &pec).unwrap();
        assert_eq!(m.elements()[0], [0, 2, 1]);
        assert!((m.area(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scaling_doubles_inradius() {
        let m = Mesh::cartesian(2, 2, Rect::unit(), &pec).unwrap();
        let s = m.scaled(2.0);
        for k in 0..m.num_elements() {
            assert!((s.inradius(k) - 2.0 * m.inradius(k)).abs() < 1e-15);
        }
    }
}
