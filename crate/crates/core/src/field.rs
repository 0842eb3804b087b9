use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Vector-valued P1 coefficients, one `n_components`-vector per mesh node,
/// stored node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalField {
    n_components: usize,
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(n_components: usize, values: Vec<f64>) -> Result<Self> {
        if n_components < 2 {
            return Err(Error::UnsupportedDimension(n_components));
        }
        if !values.len().is_multiple_of(n_components) {
            return Err(Error::SizeMismatch(format!(
                "{} values is not a multiple of {} components",
                values.len(),
                n_components
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::SizeMismatch(format!("non-finite entry at {i}")));
        }
        Ok(Self {
            n_components,
            values,
        })
    }

    pub fn zeros(n_nodes: usize, n_components: usize) -> Self {
        assert!(n_components >= 2, "target dimension must be at least 2");
        Self {
            n_components,
            values: vec![0.0; n_nodes * n_components],
        }
    }

    pub fn constant(n_nodes: usize, value: &[f64]) -> Self {
        let mut f = Self::zeros(n_nodes, value.len());
        for node in f.values.chunks_exact_mut(value.len()) {
            node.copy_from_slice(value);
        }
        f
    }

    /// Nodal interpolant of `f(x, y)`; `f` writes the node value into its slice.
    pub fn from_fn<F>(mesh: &TriMesh, n_components: usize, mut f: F) -> Self
    where
        F: FnMut(f64, f64, &mut [f64]),
    {
        let mut field = Self::zeros(mesh.n_nodes(), n_components);
        for (node, p) in field
            .values
            .chunks_exact_mut(n_components)
            .zip(mesh.nodes())
        {
            f(p[0], p[1], node);
        }
        field
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn n_nodes(&self) -> usize {
        self.values.len() / self.n_components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, i: usize) -> &[f64] {
        let n = self.n_components;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n_components;
        &mut self.values[i * n..(i + 1) * n]
    }

    pub fn iter_nodes(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.n_components)
    }

    pub fn same_shape(&self, other: &NodalField) -> bool {
        self.n_components == other.n_components && self.values.len() == other.values.len()
    }

    pub fn check_on(&self, mesh: &TriMesh) -> Result<()> {
        if self.n_nodes() != mesh.n_nodes() {
            return Err(Error::SizeMismatch(format!(
                "field has {} nodes, mesh has {}",
                self.n_nodes(),
                mesh.n_nodes()
            )));
        }
        Ok(())
    }

    pub fn check_compatible(&self, other: &NodalField, what: &str) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::SizeMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.n_nodes(),
                self.n_components,
                other.n_nodes(),
                other.n_components
            )));
        }
        Ok(())
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &NodalField) -> NodalField {
        debug_assert!(self.same_shape(other));
        NodalField {
            n_components: self.n_components,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &NodalField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_nodal_modulus(&self) -> f64 {
        self.iter_nodes().map(norm).fold(0.0, f64::max)
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    norm_sq(v).sqrt()
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
