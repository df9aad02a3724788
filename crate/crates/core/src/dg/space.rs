use crate::dg::reference::RefElement;
use crate::error::{Error, Result};
use crate::mesh::{BoundaryKind, Mesh, Point};

/// Number of scalar fields per node: `E`, `H1`, `H2`.
pub const FIELDS: usize = 3;

/// What lies across a local face.
#[derive(Debug, Clone)]
pub enum FaceLink {
    /// Neighbor element and, for each of this face's nodes, the matching
    /// volume node of the neighbor.
    Interior { element: usize, nodes: Vec<usize> },
    /// Boundary face with its global face index.
    Boundary { kind: BoundaryKind, face: usize },
}

#[derive(Debug, Clone)]
pub struct ElementGeometry {
    /// `[rx, sx, ry, sy]`.
    pub metric: [f64; 4],
    pub area: f64,
    /// Outward normal and tangent per local face.
    pub normal: [Point; 3],
    pub tangent: [Point; 3],
    /// `face_length / area`, the lifting scale per local face.
    pub lift_scale: [f64; 3],
    pub links: [FaceLink; 3],
}

/// Broken polynomial space `P_q` for `(E, H1, H2)` on a mesh.
///
/// Dofs are element-major, field-major within an element:
/// `k * 3 * np + field * np + node`.
#[derive(Debug, Clone)]
pub struct DgSpace {
    mesh: Mesh,
    reference: RefElement,
    geometry: Vec<ElementGeometry>,
    nodes: Vec<Point>,
}

impl DgSpace {
    pub fn new(mesh: Mesh, degree: usize) -> Result<Self> {
        let reference = RefElement::new(degree)?;
        let np = reference.np;
        let nfp = reference.nfp;
        let mut nodes = Vec::with_capacity(mesh.num_elements() * np);
        for k in 0..mesh.num_elements() {
            let [a, b, c] = mesh.element_vertices(k);
            for i in 0..np {
                let (r, s) = (reference.r[i], reference.s[i]);
                let wa = -(r + s) / 2.0;
                let wb = (1.0 + r) / 2.0;
                let wc = (1.0 + s) / 2.0;
                nodes.push([
                    wa * a[0] + wb * b[0] + wc * c[0],
                    wa * a[1] + wb * b[1] + wc * c[1],
                ]);
            }
        }

        let mut geometry = Vec::with_capacity(mesh.num_elements());
        for k in 0..mesh.num_elements() {
            let [a, b, c] = mesh.element_vertices(k);
            let (xr, xs) = ((b[0] - a[0]) / 2.0, (c[0] - a[0]) / 2.0);
            let (yr, ys) = ((b[1] - a[1]) / 2.0, (c[1] - a[1]) / 2.0);
            let jac = xr * ys - xs * yr;
            let metric = [ys / jac, -yr / jac, -xs / jac, xr / jac];
            let area = mesh.area(k);
            let mut normal = [[0.0; 2]; 3];
            let mut tangent = [[0.0; 2]; 3];
            let mut lift_scale = [0.0; 3];
            let links = std::array::from_fn(|j| {
                let f = mesh.element_face(k, j);
                let face = &mesh.faces()[f];
                let n = mesh.outward_normal(k, j);
                normal[j] = n;
                tangent[j] = [-n[1], n[0]];
                lift_scale[j] = face.length / area;
                let other = if face.owner == (k, j) {
                    face.neighbor
                } else {
                    Some(face.owner)
                };
                match other {
                    None => FaceLink::Boundary {
                        kind: face.boundary.expect("boundary faces are classified"),
                        face: f,
                    },
                    Some((k2, j2)) => {
                        let mine = &reference.face_nodes[j];
                        let theirs = &reference.face_nodes[j2];
                        let node_map = mine
                            .iter()
                            .map(|&i| {
                                let p = nodes[k * np + i];
                                *theirs
                                    .iter()
                                    .min_by(|&&x, &&y| {
                                        let dx = dist2(nodes[k2 * np + x], p);
                                        let dy = dist2(nodes[k2 * np + y], p);
                                        dx.total_cmp(&dy)
                                    })
                                    .expect("face has nodes")
                            })
                            .collect::<Vec<_>>();
                        debug_assert_eq!(node_map.len(), nfp);
                        FaceLink::Interior {
                            element: k2,
                            nodes: node_map,
                        }
                    }
                }
            });
            geometry.push(ElementGeometry {
                metric,
                area,
                normal,
                tangent,
                lift_scale,
                links,
            });
        }
        Ok(Self {
            mesh,
            reference,
            geometry,
            nodes,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn reference(&self) -> &RefElement {
        &self.reference
    }

    pub fn degree(&self) -> usize {
        self.reference.degree
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_elements()
    }

    /// Nodes per element.
    pub fn np(&self) -> usize {
        self.reference.np
    }

    /// Dofs per element, `3 * np`.
    pub fn block_size(&self) -> usize {
        FIELDS * self.reference.np
    }

    pub fn ndofs(&self) -> usize {
        self.block_size() * self.num_elements()
    }

    pub fn geometry(&self, k: usize) -> &ElementGeometry {
        &self.geometry[k]
    }

    /// Physical coordinates of node `i` of element `k`.
    pub fn node(&self, k: usize, i: usize) -> Point {
        self.nodes[k * self.reference.np + i]
    }

    pub fn dof(&self, k: usize, field: usize, i: usize) -> usize {
        (k * FIELDS + field) * self.reference.np + i
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.ndofs() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.ndofs(),
                got: len,
            })
        }
    }

    /// Maps reference coordinates to physical coordinates in element `k`.
    pub fn map_point(&self, k: usize, r: f64, s: f64) -> Point {
        let [a, b, c] = self.mesh.element_vertices(k);
        let wa = -(r + s) / 2.0;
        let wb = (1.0 + r) / 2.0;
        let wc = (1.0 + s) / 2.0;
        [
            wa * a[0] + wb * b[0] + wc * c[0],
            wa * a[1] + wb * b[1] + wc * c[1],
        ]
    }
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    #[test]
    fn dof_count_and_face_matching() {
        let mesh = Mesh::cartesian(3, 2, Rect::unit(), &|_| BoundaryKind::Pec).unwrap();
        for q in [1, 3] {
            let space = DgSpace::new(mesh.clone(), q).unwrap();
            let np = (q + 1) * (q + 2) / 2;
            assert_eq!(space.ndofs(), 3 * np * 24);
            for k in 0..space.num_elements() {
                for j in 0..3 {
                    if let FaceLink::Interior { element, nodes } = &space.geometry(k).links[j] {
                        for (a, &b) in space.reference().face_nodes[j].iter().zip(nodes) {
                            let pa = space.node(k, *a);
                            let pb = space.node(*element, b);
                            assert!(dist2(pa, pb) < 1e-24);
                        }
                    }
                }
            }
        }
    }
}
