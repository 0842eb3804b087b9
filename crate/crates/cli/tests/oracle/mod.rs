//! Independent dense model of the per-step functional and a dense Newton
//! minimizer for it. Shares no code with the library beyond the mesh layout:
//! integrals use collapsed tensor Gauss-Legendre rules and gradients come
//! from the vertex linear system.

use pharmonic_core::{NodalField, SolverConfig, TriMesh};

pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    (0..m)
        .map(|i| {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (0.5 * (x + 1.0), 1.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

pub struct DenseStep<'a> {
    mesh: &'a TriMesh,
    n: usize,
    u_prev: Vec<f64>,
    g: Vec<f64>,
    p: f64,
    a: f64,
    b: f64,
    tau: f64,
    lambda: f64,
    delta: f64,
    rule: Vec<(f64, f64)>,
}

struct Element {
    nodes: [usize; 3],
    area: f64,
    grads: [[f64; 2]; 3],
}

impl<'a> DenseStep<'a> {
    pub fn new(mesh: &'a TriMesh, u_prev: &NodalField, g: &NodalField, cfg: &SolverConfig) -> Self {
        Self {
            mesh,
            n: u_prev.n_components(),
            u_prev: u_prev.values().to_vec(),
            g: g.values().to_vec(),
            p: cfg.p,
            a: if cfg.p < 2.0 { cfg.eps } else { 0.0 },
            b: cfg.eps.powf(cfg.alpha),
            tau: cfg.tau,
            lambda: cfg.lambda,
            delta: cfg.delta,
            rule: gauss_legendre(8),
        }
    }

    fn elements(&self) -> Vec<Element> {
        self.mesh
            .elements()
            .iter()
            .map(|&tri| {
                let [p0, p1, p2] = tri.map(|i| self.mesh.nodes()[i]);
                let e1 = [p1[0] - p0[0], p1[1] - p0[1]];
                let e2 = [p2[0] - p0[0], p2[1] - p0[1]];
                let det = e1[0] * e2[1] - e1[1] * e2[0];
                let g1 = [e2[1] / det, -e2[0] / det];
                let g2 = [-e1[1] / det, e1[0] / det];
                Element {
                    nodes: tri,
                    area: 0.5 * det,
                    grads: [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2],
                }
            })
            .collect()
    }

    /// Quadrature points of an element as barycentric coordinates and weights.
    fn points(&self, el: &Element) -> Vec<([f64; 3], f64)> {
        let mut out = Vec::new();
        for &(xi, wx) in &self.rule {
            for &(eta, wy) in &self.rule {
                let (s, t) = (xi, eta * (1.0 - xi));
                out.push(([1.0 - s - t, s, t], 2.0 * el.area * wx * wy * (1.0 - xi)));
            }
        }
        out
    }

    fn at(&self, f: &[f64], el: &Element, l: &[f64; 3]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..3).map(|k| l[k] * f[el.nodes[k] * self.n + i]).sum())
            .collect()
    }

    fn grad_matrix(&self, u: &[f64], el: &Element) -> Vec<[f64; 2]> {
        (0..self.n)
            .map(|i| {
                let mut g = [0.0; 2];
                for k in 0..3 {
                    for d in 0..2 {
                        g[d] += u[el.nodes[k] * self.n + i] * el.grads[k][d];
                    }
                }
                g
            })
            .collect()
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let mut total = 0.0;
        for el in self.elements() {
            let gm = self.grad_matrix(u, &el);
            let s: f64 = gm.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum();
            total +=
                el.area * (0.5 * self.b * s + (s + self.a * self.a).powf(0.5 * self.p) / self.p);
            for (l, w) in self.points(&el) {
                let (v, up, g) = (
                    self.at(u, &el, &l),
                    self.at(&self.u_prev, &el, &l),
                    self.at(&self.g, &el, &l),
                );
                let v2: f64 = v.iter().map(|x| x * x).sum();
                let mut f = 0.25 * v2 * v2 / self.delta;
                for i in 0..self.n {
                    f += (v[i] - up[i]).powi(2) / (2.0 * self.tau)
                        + 0.5 * self.lambda * (v[i] - g[i]).powi(2)
                        - up[i] * v[i] / self.delta;
                }
                total += w * f;
            }
        }
        total
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; u.len()];
        for el in self.elements() {
            let gm = self.grad_matrix(u, &el);
            let s: f64 = gm.iter().map(|r| r[0] * r[0] + r[1] * r[1]).sum();
            let coef = el.area * (self.b + (s + self.a * self.a).powf(0.5 * self.p - 1.0));
            for k in 0..3 {
                for i in 0..n {
                    out[el.nodes[k] * n + i] +=
                        coef * (gm[i][0] * el.grads[k][0] + gm[i][1] * el.grads[k][1]);
                }
            }
            for (l, w) in self.points(&el) {
                let (v, up, g) = (
                    self.at(u, &el, &l),
                    self.at(&self.u_prev, &el, &l),
                    self.at(&self.g, &el, &l),
                );
                let v2: f64 = v.iter().map(|x| x * x).sum();
                for i in 0..n {
                    let d = (v[i] - up[i]) / self.tau
                        + self.lambda * (v[i] - g[i])
                        + (v2 * v[i] - up[i]) / self.delta;
                    for k in 0..3 {
                        out[el.nodes[k] * n + i] += w * l[k] * d;
                    }
                }
            }
        }
        out
    }
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for c in (0..n).rev() {
        let s: f64 = (c + 1..n).map(|k| a[c][k] * x[k]).sum();
        x[c] = (b[c] - s) / a[c][c];
    }
    Some(x)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton on the dense model with a difference Hessian, stopped at
/// `||grad||_inf <= tol`.
pub fn minimize(model: &DenseStep, start: &[f64], tol: f64) -> Result<Vec<f64>, String> {
    let mut x = start.to_vec();
    let h = 1e-6;
    for _ in 0..500 {
        let g = model.gradient(&x);
        if inf_norm(&g) <= tol {
            return Ok(x);
        }
        let dim = x.len();
        let mut hess = vec![vec![0.0; dim]; dim];
        for j in 0..dim {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[j] += h;
            xm[j] -= h;
            let (gp, gm) = (model.gradient(&xp), model.gradient(&xm));
            for i in 0..dim {
                hess[i][j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        for i in 0..dim {
            for j in 0..i {
                let s = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = s;
                hess[j][i] = s;
            }
        }
        let d = solve_dense(hess, g.iter().map(|v| -v).collect()).ok_or("singular Hessian")?;
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let f0 = model.value(&x);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let f1 = model.value(&trial);
            let gn = inf_norm(&model.gradient(&trial));
            // Near the minimum the decrease is below the rounding of the
            // value, so a smaller gradient also counts as progress.
            let flat = (f1 - f0).abs() <= 1e-12 * f0.abs().max(1.0);
            if f1 <= f0 + 1e-4 * t * slope || (flat && gn < inf_norm(&g)) {
                x = trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(format!("line search failed at |grad| = {:e}", inf_norm(&g)));
            }
        }
    }
    Err("no convergence in 500 iterations".into())
}
