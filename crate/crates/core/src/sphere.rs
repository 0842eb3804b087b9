//! Sphere-valued field utilities and constraint diagnostics.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::{norm, norm_sq, NodalField};
use crate::integrate::integrate_fields;
use crate::mesh::TriMesh;
use crate::quadrature::quadrature_rule;

/// Nodes whose modulus is below this receive the fallback direction.
pub const DEGENERATE_MODULUS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstraintReport {
    /// `|| |u|^2 - 1 ||_{L2}`
    pub l2_violation: f64,
    /// `max_node | |u(node)| - 1 |`
    pub linf_nodal_violation: f64,
    /// `l2_violation / sqrt(delta)`
    pub scaled_violation: f64,
}

/// Normalizes every nodal vector; returns the projected field and the
/// number of nodes that received `fallback`.
pub fn project_to_sphere(u: &NodalField, fallback: &[f64]) -> Result<(NodalField, usize)> {
    if fallback.len() != u.n_components() {
        return Err(Error::SizeMismatch(format!(
            "fallback has {} components, field has {}",
            fallback.len(),
            u.n_components()
        )));
    }
    let mut out = u.clone();
    let mut count = 0;
    for i in 0..out.n_nodes() {
        let node = out.node_mut(i);
        let r = norm(node);
        if r < DEGENERATE_MODULUS {
            node.copy_from_slice(fallback);
            count += 1;
        } else {
            node.iter_mut().for_each(|x| *x /= r);
        }
    }
    Ok((out, count))
}

pub fn constraint_report(mesh: &TriMesh, u: &NodalField, delta: f64) -> Result<ConstraintReport> {
    constraint_report_with(mesh, u, delta, Execution::default())
}

pub fn constraint_report_with(
    mesh: &TriMesh,
    u: &NodalField,
    delta: f64,
    exec: Execution,
) -> Result<ConstraintReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "delta must be positive (got {delta})"
        )));
    }
    u.check_on(mesh)?;
    let rule = quadrature_rule(4)?;
    let l2_violation = integrate_fields(mesh, &[u], &rule, exec, |v| {
        let r = norm_sq(&v[0]) - 1.0;
        r * r
    })
    .sqrt();
    let linf_nodal_violation = u
        .iter_nodes()
        .map(|v| (norm(v) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(ConstraintReport {
        l2_violation,
        linf_nodal_violation,
        scaled_violation: l2_violation / delta.sqrt(),
    })
}

/// Antisymmetric product of two vectors in R^2 (scalar) or R^3 (cross product).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Wedge {
    Planar(f64),
    Spatial([f64; 3]),
}

pub fn wedge(a: &[f64], b: &[f64]) -> Result<Wedge> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(format!("{} vs {}", a.len(), b.len())));
    }
    match a.len() {
        2 => Ok(Wedge::Planar(a[0] * b[1] - a[1] * b[0])),
        3 => Ok(Wedge::Spatial([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])),
        n => Err(Error::UnsupportedDimension(n)),
    }
}

/// `∫ ( ((u - u_prev)/tau) . u )^2 dx`, zero for flows tangent to the sphere.
pub fn orthogonality_defect(
    mesh: &TriMesh,
    u: &NodalField,
    u_prev: &NodalField,
    tau: f64,
) -> Result<f64> {
    orthogonality_defect_with(mesh, u, u_prev, tau, Execution::default())
}

pub fn orthogonality_defect_with(
    mesh: &TriMesh,
    u: &NodalField,
    u_prev: &NodalField,
    tau: f64,
    exec: Execution,
) -> Result<f64> {
    u.check_on(mesh)?;
    u.check_compatible(u_prev, "orthogonality defect")?;
    let rule = quadrature_rule(4)?;
    Ok(integrate_fields(mesh, &[u, u_prev], &rule, exec, |v| {
        let d: f64 = v[0]
            .iter()
            .zip(&v[1])
            .map(|(a, b)| (a - b) * a)
            .sum::<f64>()
            / tau;
        d * d
    }))
}
