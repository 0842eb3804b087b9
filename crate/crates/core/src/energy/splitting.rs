use crate::field::{dot, norm_sq};

/// Splitting of the penalty density `F(v) = (|v|^2 - 1)^2 / 4` into a
/// difference `W+ - W-` of two convex functions. `W+` is treated implicitly
/// and `W-` explicitly in each time step.
pub trait ConvexSplitting: Sync {
    fn implicit_value(&self, v: &[f64]) -> f64;
    fn implicit_gradient(&self, v: &[f64], out: &mut [f64]);
    /// Row-major `n x n` Hessian of `W+`.
    fn implicit_hessian(&self, v: &[f64], out: &mut [f64]);
    fn explicit_value(&self, v: &[f64]) -> f64;
    fn explicit_gradient(&self, v: &[f64], out: &mut [f64]);
}

/// `W+ = |v|^4 / 4`, `W- = |v|^2 / 2 - 1/4`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QuarticSplitting;

impl ConvexSplitting for QuarticSplitting {
    fn implicit_value(&self, v: &[f64]) -> f64 {
        let r2 = norm_sq(v);
        0.25 * r2 * r2
    }

    fn implicit_gradient(&self, v: &[f64], out: &mut [f64]) {
        let r2 = norm_sq(v);
        for (o, x) in out.iter_mut().zip(v) {
            *o = r2 * x;
        }
    }

    fn implicit_hessian(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        let r2 = norm_sq(v);
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = 2.0 * v[i] * v[j] + if i == j { r2 } else { 0.0 };
            }
        }
    }

    fn explicit_value(&self, v: &[f64]) -> f64 {
        0.5 * norm_sq(v) - 0.25
    }

    fn explicit_gradient(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
    }
}

/// Quartic splitting with an extra `s |v|^2 / 2` moved into both parts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilizedSplitting {
    pub shift: f64,
}

impl ConvexSplitting for StabilizedSplitting {
    fn implicit_value(&self, v: &[f64]) -> f64 {
        QuarticSplitting.implicit_value(v) + 0.5 * self.shift * norm_sq(v)
    }

    fn implicit_gradient(&self, v: &[f64], out: &mut [f64]) {
        QuarticSplitting.implicit_gradient(v, out);
        for (o, x) in out.iter_mut().zip(v) {
            *o += self.shift * x;
        }
    }

    fn implicit_hessian(&self, v: &[f64], out: &mut [f64]) {
        QuarticSplitting.implicit_hessian(v, out);
        let n = v.len();
        for i in 0..n {
            out[i * n + i] += self.shift;
        }
    }

    fn explicit_value(&self, v: &[f64]) -> f64 {
        0.5 * (1.0 + self.shift) * dot(v, v) - 0.25
    }

    fn explicit_gradient(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = (1.0 + self.shift) * x;
        }
    }
}
