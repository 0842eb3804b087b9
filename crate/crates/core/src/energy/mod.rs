//! Energy functionals of the regularized, penalized p-harmonic problem and
//! the per-step convex functional with its gradient and Hessian.
//!
//! Gradient terms are integrated exactly (P1 gradients are elementwise
//! constant). Mass, fidelity and penalty terms use the configured quadrature
//! rule; the degree-4 default is exact for P1 fields.

mod splitting;

pub use splitting::{ConvexSplitting, QuarticSplitting, StabilizedSplitting};

use crate::config::SolverConfig;
use crate::error::Result;
use crate::field::{dot, norm_sq, NodalField};
use crate::integrate::{integrate_fields, interpolate};
use crate::mesh::{element_gradient, TriMesh};
use crate::quadrature::{quadrature_rule, QuadratureRule};
use crate::sparse::{BlockSparsity, CsrMatrix};

/// Ginzburg-Landau density `(|v|^2 - 1)^2 / 4`.
pub fn penalty_density(v: &[f64]) -> f64 {
    let r = norm_sq(v) - 1.0;
    0.25 * r * r
}

/// `sqrt(|G|^2 + a_p(eps)^2)` with the Frobenius norm.
pub fn regularized_gradient_norm(grad: &[f64], config: &SolverConfig) -> f64 {
    let a = config.a_p();
    (norm_sq(grad) + a * a).sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub diffusion: f64,
    pub p_term: f64,
    pub penalty: f64,
    pub fidelity: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn from_parts(diffusion: f64, p_term: f64, penalty: f64, fidelity: f64) -> Self {
        Self {
            diffusion,
            p_term,
            penalty,
            fidelity,
            total: diffusion + p_term + penalty + fidelity,
        }
    }
}

/// Pointwise gradient-term density `b/2 |G|^2 + (1/p)(|G|^2 + a^2)^(p/2)` and
/// its derivatives as functions of `|G|^2`.
#[derive(Clone, Copy, Debug)]
struct GradientDensity {
    b: f64,
    a2: f64,
    p: f64,
}

impl GradientDensity {
    fn new(config: &SolverConfig) -> Self {
        let a = config.a_p();
        Self {
            b: config.b_p(),
            a2: a * a,
            p: config.p,
        }
    }

    fn diffusion(&self, g2: f64) -> f64 {
        0.5 * self.b * g2
    }

    fn p_term(&self, g2: f64) -> f64 {
        (g2 + self.a2).powf(0.5 * self.p) / self.p
    }

    /// `s^((p-2)/2)`; equals 1 at `s = 0` for `p = 2` and 0 for `p > 2`.
    fn p_flux_coeff(&self, g2: f64) -> f64 {
        (g2 + self.a2).powf(0.5 * (self.p - 2.0))
    }

    /// `(p-2) s^((p-4)/2)`, with the removable singularity at `s = 0` set to 0.
    fn p_curvature_coeff(&self, g2: f64) -> f64 {
        let s = g2 + self.a2;
        if s == 0.0 || self.p == 2.0 {
            0.0
        } else {
            (self.p - 2.0) * s.powf(0.5 * (self.p - 4.0))
        }
    }
}

/// Selects which integrand terms of the per-step functional are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Terms {
    pub mass: bool,
    pub diffusion: bool,
    pub p_term: bool,
    pub fidelity: bool,
    pub penalty: bool,
}

impl Terms {
    pub const ALL: Terms = Terms {
        mass: true,
        diffusion: true,
        p_term: true,
        fidelity: true,
        penalty: true,
    };
    pub const NONE: Terms = Terms {
        mass: false,
        diffusion: false,
        p_term: false,
        fidelity: false,
        penalty: false,
    };

    /// Each term on its own, with a label.
    pub fn singles() -> [(&'static str, Terms); 5] {
        [
            (
                "mass",
                Terms {
                    mass: true,
                    ..Terms::NONE
                },
            ),
            (
                "diffusion",
                Terms {
                    diffusion: true,
                    ..Terms::NONE
                },
            ),
            (
                "p_term",
                Terms {
                    p_term: true,
                    ..Terms::NONE
                },
            ),
            (
                "fidelity",
                Terms {
                    fidelity: true,
                    ..Terms::NONE
                },
            ),
            (
                "penalty",
                Terms {
                    penalty: true,
                    ..Terms::NONE
                },
            ),
        ]
    }
}

/// The convex functional minimized by one implicit step:
///
/// ```text
/// G(v) = ∫ |v - u_prev|^2/(2 tau) + b/2 |∇v|^2 + (1/p)|∇v|_eps^p
///        + lambda/2 |v - g|^2 + W+(v)/delta  -  (1/delta) ∫ W-'(u_prev) . v
/// ```
pub struct StepFunctional<'a> {
    mesh: &'a TriMesh,
    u_prev: &'a NodalField,
    g: &'a NodalField,
    config: &'a SolverConfig,
    splitting: &'a dyn ConvexSplitting,
    rule: QuadratureRule,
    density: GradientDensity,
    terms: Terms,
}

impl<'a> StepFunctional<'a> {
    pub fn new(
        mesh: &'a TriMesh,
        u_prev: &'a NodalField,
        g: &'a NodalField,
        config: &'a SolverConfig,
        splitting: &'a dyn ConvexSplitting,
    ) -> Result<Self> {
        config.validate()?;
        u_prev.check_on(mesh)?;
        u_prev.check_compatible(g, "previous step vs datum")?;
        Ok(Self {
            mesh,
            u_prev,
            g,
            config,
            splitting,
            rule: quadrature_rule(config.quad_degree_zero_order)?,
            density: GradientDensity::new(config),
            terms: Terms::ALL,
        })
    }

    pub fn with_terms(mut self, terms: Terms) -> Self {
        self.terms = terms;
        self
    }

    pub fn mesh(&self) -> &TriMesh {
        self.mesh
    }

    pub fn n_components(&self) -> usize {
        self.u_prev.n_components()
    }

    fn check(&self, u: &NodalField) -> Result<()> {
        u.check_compatible(self.u_prev, "iterate vs previous step")
    }

    fn grad_coeffs(&self, g2: f64) -> (f64, f64) {
        let d = &self.density;
        let mut c1 = 0.0;
        let mut c2 = 0.0;
        if self.terms.diffusion {
            c1 += d.b;
        }
        if self.terms.p_term {
            c1 += d.p_flux_coeff(g2);
            c2 = d.p_curvature_coeff(g2);
        }
        (c1, c2)
    }

    fn element_value(&self, k: usize, u: &NodalField) -> f64 {
        let n = self.n_components();
        let tri = &self.mesh.elements()[k];
        let geo = &self.mesh.geometry()[k];
        let cfg = self.config;
        let mut grad = vec![0.0; 2 * n];
        element_gradient(tri, geo, u.values(), n, &mut grad);
        let g2 = norm_sq(&grad);
        let mut val = 0.0;
        if self.terms.diffusion {
            val += self.density.diffusion(g2);
        }
        if self.terms.p_term {
            val += self.density.p_term(g2);
        }

        let (mut v, mut w, mut gam, mut wm) =
            (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut zero = 0.0;
        for (bary, wq) in self.rule.iter() {
            interpolate(u, tri, bary, &mut v);
            interpolate(self.u_prev, tri, bary, &mut w);
            let mut f = 0.0;
            if self.terms.mass {
                f += v
                    .iter()
                    .zip(&w)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / (2.0 * cfg.tau);
            }
            if self.terms.fidelity {
                interpolate(self.g, tri, bary, &mut gam);
                f += 0.5
                    * cfg.lambda
                    * v.iter()
                        .zip(&gam)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>();
            }
            if self.terms.penalty {
                self.splitting.explicit_gradient(&w, &mut wm);
                f += (self.splitting.implicit_value(&v) - dot(&wm, &v)) / cfg.delta;
            }
            zero += wq * f;
        }
        geo.area * (val + zero)
    }

    fn element_gradient(&self, k: usize, u: &NodalField) -> Vec<f64> {
        let n = self.n_components();
        let tri = &self.mesh.elements()[k];
        let geo = &self.mesh.geometry()[k];
        let cfg = self.config;
        let mut out = vec![0.0; 3 * n];

        let mut grad = vec![0.0; 2 * n];
        element_gradient(tri, geo, u.values(), n, &mut grad);
        let (c1, _) = self.grad_coeffs(norm_sq(&grad));
        if c1 != 0.0 {
            for a in 0..3 {
                let [gx, gy] = geo.grads[a];
                for i in 0..n {
                    out[a * n + i] += c1 * (grad[2 * i] * gx + grad[2 * i + 1] * gy);
                }
            }
        }

        let (mut v, mut w, mut gam) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let (mut wp, mut wm, mut fp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for (bary, wq) in self.rule.iter() {
            interpolate(u, tri, bary, &mut v);
            interpolate(self.u_prev, tri, bary, &mut w);
            fp.fill(0.0);
            if self.terms.mass {
                for i in 0..n {
                    fp[i] += (v[i] - w[i]) / cfg.tau;
                }
            }
            if self.terms.fidelity {
                interpolate(self.g, tri, bary, &mut gam);
                for i in 0..n {
                    fp[i] += cfg.lambda * (v[i] - gam[i]);
                }
            }
            if self.terms.penalty {
                self.splitting.implicit_gradient(&v, &mut wp);
                self.splitting.explicit_gradient(&w, &mut wm);
                for i in 0..n {
                    fp[i] += (wp[i] - wm[i]) / cfg.delta;
                }
            }
            for a in 0..3 {
                for i in 0..n {
                    out[a * n + i] += wq * bary[a] * fp[i];
                }
            }
        }
        for o in &mut out {
            *o *= geo.area;
        }
        out
    }

    /// Row-major `3n x 3n` element Hessian, exactly symmetric.
    fn element_hessian(&self, k: usize, u: &NodalField) -> Vec<f64> {
        let n = self.n_components();
        let ln = 3 * n;
        let tri = &self.mesh.elements()[k];
        let geo = &self.mesh.geometry()[k];
        let cfg = self.config;

        let mut grad = vec![0.0; 2 * n];
        element_gradient(tri, geo, u.values(), n, &mut grad);
        let (c1, c2) = self.grad_coeffs(norm_sq(&grad));
        // proj[a * n + i] = G_i . grad(phi_a)
        let proj: Vec<f64> = (0..ln)
            .map(|r| {
                let (a, i) = (r / n, r % n);
                grad[2 * i] * geo.grads[a][0] + grad[2 * i + 1] * geo.grads[a][1]
            })
            .collect();
        let stiff = |a: usize, b: usize| {
            geo.grads[a][0] * geo.grads[b][0] + geo.grads[a][1] * geo.grads[b][1]
        };

        let diag_shift = if self.terms.mass { 1.0 / cfg.tau } else { 0.0 }
            + if self.terms.fidelity { cfg.lambda } else { 0.0 };
        let mut v = vec![0.0; n];
        let mut hw = vec![0.0; n * n];
        let point_hessians: Vec<(f64, [f64; 3], Vec<f64>)> = self
            .rule
            .iter()
            .map(|(bary, wq)| {
                let mut h = vec![0.0; n * n];
                if self.terms.penalty {
                    interpolate(u, tri, bary, &mut v);
                    self.splitting.implicit_hessian(&v, &mut hw);
                    for (o, x) in h.iter_mut().zip(&hw) {
                        *o = x / cfg.delta;
                    }
                }
                for i in 0..n {
                    h[i * n + i] += diag_shift;
                }
                (wq, *bary, h)
            })
            .collect();

        let mut out = vec![0.0; ln * ln];
        for r in 0..ln {
            let (a, i) = (r / n, r % n);
            for c in r..ln {
                let (b, j) = (c / n, c % n);
                let mut val = c2 * proj[r] * proj[c];
                if i == j {
                    val += c1 * stiff(a, b);
                }
                let mut zero = 0.0;
                for (wq, bary, h) in &point_hessians {
                    zero += wq * bary[a] * bary[b] * h[i * n + j];
                }
                val += zero;
                out[r * ln + c] = geo.area * val;
            }
        }
        for r in 0..ln {
            for c in 0..r {
                out[r * ln + c] = out[c * ln + r];
            }
        }
        out
    }

    pub fn value(&self, u: &NodalField) -> Result<f64> {
        self.check(u)?;
        let exec = self.config.execution;
        Ok(exec
            .map(self.mesh.n_elements(), |k| self.element_value(k, u))
            .into_iter()
            .sum())
    }

    /// `G(a) - G(b)` summed element by element, which avoids cancelling two
    /// large global sums. Also returns `sum_K |G_K(b)|` as a rounding scale.
    pub fn value_difference(&self, a: &NodalField, b: &NodalField) -> Result<(f64, f64)> {
        self.check(a)?;
        self.check(b)?;
        let parts = self.config.execution.map(self.mesh.n_elements(), |k| {
            let vb = self.element_value(k, b);
            (self.element_value(k, a) - vb, vb.abs())
        });
        Ok(parts
            .into_iter()
            .fold((0.0, 0.0), |(d, s), (dk, sk)| (d + dk, s + sk)))
    }

    pub fn gradient(&self, u: &NodalField) -> Result<NodalField> {
        self.check(u)?;
        let n = self.n_components();
        let locals = self
            .config
            .execution
            .map(self.mesh.n_elements(), |k| self.element_gradient(k, u));
        let mut out = NodalField::zeros(u.n_nodes(), n);
        let vals = out.values_mut();
        for (tri, local) in self.mesh.elements().iter().zip(&locals) {
            for (a, &node) in tri.iter().enumerate() {
                for i in 0..n {
                    vals[node * n + i] += local[a * n + i];
                }
            }
        }
        Ok(out)
    }

    pub fn hessian(&self, u: &NodalField, pattern: &BlockSparsity) -> Result<CsrMatrix> {
        self.check(u)?;
        let locals = self
            .config
            .execution
            .map(self.mesh.n_elements(), |k| self.element_hessian(k, u));
        Ok(pattern.assemble(self.mesh.elements(), locals.iter().map(|v| v.as_slice())))
    }
}

/// Four parts of the regularized, penalized objective with fidelity.
pub fn total_energy(
    mesh: &TriMesh,
    u: &NodalField,
    g: &NodalField,
    config: &SolverConfig,
) -> Result<EnergyBreakdown> {
    u.check_on(mesh)?;
    u.check_compatible(g, "field vs datum")?;
    let rule = quadrature_rule(config.quad_degree_zero_order)?;
    let density = GradientDensity::new(config);
    let n = u.n_components();
    let grads = config.execution.map(mesh.n_elements(), |k| {
        let mut grad = vec![0.0; 2 * n];
        element_gradient(
            &mesh.elements()[k],
            &mesh.geometry()[k],
            u.values(),
            n,
            &mut grad,
        );
        let g2 = norm_sq(&grad);
        let area = mesh.geometry()[k].area;
        (area * density.diffusion(g2), area * density.p_term(g2))
    });
    let (mut diffusion, mut p_term) = (0.0, 0.0);
    for (d, p) in grads {
        diffusion += d;
        p_term += p;
    }
    let (penalty, fidelity) = zero_order_parts(mesh, u, g, config, &rule);
    Ok(EnergyBreakdown::from_parts(
        diffusion, p_term, penalty, fidelity,
    ))
}

fn zero_order_parts(
    mesh: &TriMesh,
    u: &NodalField,
    g: &NodalField,
    config: &SolverConfig,
    rule: &QuadratureRule,
) -> (f64, f64) {
    let penalty = integrate_fields(mesh, &[u], rule, config.execution, |v| {
        penalty_density(&v[0])
    }) / config.delta;
    let fidelity = if config.lambda == 0.0 {
        0.0
    } else {
        0.5 * config.lambda
            * integrate_fields(mesh, &[u, g], rule, config.execution, |v| {
                v[0].iter().zip(&v[1]).map(|(a, b)| (a - b) * (a - b)).sum()
            })
    };
    (penalty, fidelity)
}

/// `(1/p) ∫ |∇u|^p + (lambda/2) ∫ |u - g|^2` without regularization or penalty.
pub fn total_energy_unregularized(
    mesh: &TriMesh,
    u: &NodalField,
    g: &NodalField,
    config: &SolverConfig,
) -> Result<f64> {
    u.check_on(mesh)?;
    u.check_compatible(g, "field vs datum")?;
    let rule = quadrature_rule(config.quad_degree_zero_order)?;
    let n = u.n_components();
    let p = config.p;
    let grad_part: f64 = config
        .execution
        .map(mesh.n_elements(), |k| {
            let mut grad = vec![0.0; 2 * n];
            element_gradient(
                &mesh.elements()[k],
                &mesh.geometry()[k],
                u.values(),
                n,
                &mut grad,
            );
            mesh.geometry()[k].area * norm_sq(&grad).powf(0.5 * p) / p
        })
        .into_iter()
        .sum();
    let (_, fidelity) = zero_order_parts(mesh, u, g, config, &rule);
    Ok(grad_part + fidelity)
}

pub fn gk_value(
    mesh: &TriMesh,
    u: &NodalField,
    u_prev: &NodalField,
    g: &NodalField,
    config: &SolverConfig,
    splitting: &dyn ConvexSplitting,
) -> Result<f64> {
    StepFunctional::new(mesh, u_prev, g, config, splitting)?.value(u)
}

pub fn gk_gradient(
    mesh: &TriMesh,
    u: &NodalField,
    u_prev: &NodalField,
    g: &NodalField,
    config: &SolverConfig,
    splitting: &dyn ConvexSplitting,
) -> Result<NodalField> {
    StepFunctional::new(mesh, u_prev, g, config, splitting)?.gradient(u)
}

pub fn gk_hessian(
    mesh: &TriMesh,
    u: &NodalField,
    u_prev: &NodalField,
    g: &NodalField,
    config: &SolverConfig,
    splitting: &dyn ConvexSplitting,
) -> Result<CsrMatrix> {
    let f = StepFunctional::new(mesh, u_prev, g, config, splitting)?;
    let pattern = BlockSparsity::new(mesh, u.n_components());
    f.hessian(u, &pattern)
}
