use crate::exec::Execution;
use crate::field::NodalField;
use crate::mesh::TriMesh;
use crate::quadrature::QuadratureRule;

/// Integrates `f(values)` over the mesh, where `values[m]` is the P1
/// interpolant of `fields[m]` at each quadrature point. Element sums are
/// reduced in element order.
pub fn integrate_fields<F>(
    mesh: &TriMesh,
    fields: &[&NodalField],
    rule: &QuadratureRule,
    exec: Execution,
    f: F,
) -> f64
where
    F: Fn(&[Vec<f64>]) -> f64 + Sync + Send,
{
    let per_element = exec.map(mesh.n_elements(), |k| {
        let tri = &mesh.elements()[k];
        let area = mesh.geometry()[k].area;
        let mut scratch: Vec<Vec<f64>> = fields
            .iter()
            .map(|fl| vec![0.0; fl.n_components()])
            .collect();
        let mut acc = 0.0;
        for (bary, w) in rule.iter() {
            for (buf, fl) in scratch.iter_mut().zip(fields) {
                interpolate(fl, tri, bary, buf);
            }
            acc += w * f(&scratch);
        }
        area * acc
    });
    per_element.into_iter().sum()
}

#[inline]
pub(crate) fn interpolate(field: &NodalField, tri: &[usize; 3], bary: &[f64; 3], out: &mut [f64]) {
    let n = field.n_components();
    let vals = field.values();
    out.fill(0.0);
    for (a, &node) in tri.iter().enumerate() {
        let l = bary[a];
        for (o, x) in out.iter_mut().zip(&vals[node * n..(node + 1) * n]) {
            *o += l * x;
        }
    }
}

/// Squared L2 norm of `a - b`.
pub fn l2_distance_sq(
    mesh: &TriMesh,
    a: &NodalField,
    b: &NodalField,
    rule: &QuadratureRule,
    exec: Execution,
) -> f64 {
    integrate_fields(mesh, &[a, b], rule, exec, |v| {
        v[0].iter().zip(&v[1]).map(|(x, y)| (x - y) * (x - y)).sum()
    })
}
