//! Conforming triangulations and P1 element geometry.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::field::NodalField;

/// Cached per-element geometry: area and the constant gradients of the three
/// barycentric (P1) shape functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    geometry: Vec<ElementGeometry>,
    boundary_nodes: Vec<usize>,
    /// Sorted node adjacency (including the node itself).
    neighbors: Vec<Vec<usize>>,
}

impl TriMesh {
    /// Builds a mesh from raw connectivity. Elements must be counter-clockwise.
    pub fn new(nodes: Vec<[f64; 2]>, elements: Vec<[usize; 3]>) -> Result<Self> {
        let n_nodes = nodes.len();
        let mut geometry = Vec::with_capacity(elements.len());
        for (k, tri) in elements.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= n_nodes) {
                return Err(Error::InvalidMesh(format!(
                    "element {k} references node {bad} (have {n_nodes})"
                )));
            }
            let geo = element_geometry(&nodes, tri);
            if !(geo.area > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "element {k} has non-positive signed area {}",
                    geo.area
                )));
            }
            geometry.push(geo);
        }

        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &elements {
            for (a, b) in local_edges(tri) {
                *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if let Some((e, c)) = edge_count.iter().find(|(_, &c)| c > 2) {
            return Err(Error::InvalidMesh(format!(
                "edge {e:?} shared by {c} elements"
            )));
        }
        let mut on_boundary = vec![false; n_nodes];
        for (&(a, b), &c) in &edge_count {
            if c == 1 {
                on_boundary[a] = true;
                on_boundary[b] = true;
            }
        }
        let boundary_nodes = (0..n_nodes).filter(|&i| on_boundary[i]).collect();

        let mut neighbors: Vec<Vec<usize>> = (0..n_nodes).map(|i| vec![i]).collect();
        for tri in &elements {
            for &a in tri {
                for &b in tri {
                    neighbors[a].push(b);
                }
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }

        Ok(Self {
            nodes,
            elements,
            geometry,
            boundary_nodes,
            neighbors,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn geometry(&self) -> &[ElementGeometry] {
        &self.geometry
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    /// Largest element diameter.
    pub fn mesh_size(&self) -> f64 {
        self.elements
            .iter()
            .map(|tri| {
                local_edges(tri)
                    .map(|(a, b)| {
                        let (p, q) = (self.nodes[a], self.nodes[b]);
                        (p[0] - q[0]).hypot(p[1] - q[1])
                    })
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Number of elements containing each undirected edge.
    pub fn edge_multiplicities(&self) -> HashMap<(usize, usize), usize> {
        let mut out = HashMap::new();
        for tri in &self.elements {
            for (a, b) in local_edges(tri) {
                *out.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        out
    }
}

fn local_edges(tri: &[usize; 3]) -> impl Iterator<Item = (usize, usize)> + '_ {
    (0..3).map(move |i| (tri[i], tri[(i + 1) % 3]))
}

fn element_geometry(nodes: &[[f64; 2]], tri: &[usize; 3]) -> ElementGeometry {
    let [p0, p1, p2] = tri.map(|i| nodes[i]);
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let grads = [
        [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
        [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
        [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
    ];
    ElementGeometry {
        area: 0.5 * det,
        grads,
    }
}

/// Uniform triangulation of `[0, lx] x [0, ly]` with `nx * ny` cells, each
/// split along its lower-left to upper-right diagonal. Nodes are numbered
/// row-major from the origin.
pub fn build_rect_mesh(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<TriMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh(format!(
            "cell counts must be positive (got {nx}x{ny})"
        )));
    }
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(Error::InvalidMesh(format!(
            "side lengths must be positive (got {lx}x{ly})"
        )));
    }
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (n00, n10, n01, n11) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            elements.push([n00, n10, n11]);
            elements.push([n00, n11, n01]);
        }
    }
    TriMesh::new(nodes, elements)
}

/// Constant gradient of the P1 interpolant on one element as an
/// `n x 2` row-major matrix (rows: target components, columns: x, y).
pub fn p1_gradient_on_element(
    mesh: &TriMesh,
    element: usize,
    field: &NodalField,
) -> Result<Vec<f64>> {
    if element >= mesh.n_elements() {
        return Err(Error::IndexOutOfRange {
            what: "element",
            index: element,
            len: mesh.n_elements(),
        });
    }
    field.check_on(mesh)?;
    let n = field.n_components();
    let mut g = vec![0.0; 2 * n];
    element_gradient(
        &mesh.elements[element],
        &mesh.geometry[element],
        field.values(),
        n,
        &mut g,
    );
    Ok(g)
}

#[inline]
pub(crate) fn element_gradient(
    tri: &[usize; 3],
    geo: &ElementGeometry,
    values: &[f64],
    n: usize,
    out: &mut [f64],
) {
    out.fill(0.0);
    for (a, &node) in tri.iter().enumerate() {
        let u = &values[node * n..(node + 1) * n];
        let [gx, gy] = geo.grads[a];
        for i in 0..n {
            out[2 * i] += u[i] * gx;
            out[2 * i + 1] += u[i] * gy;
        }
    }
}
