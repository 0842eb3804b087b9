//! Numerical self-test suites run by `pharmonic check`, on fixed seeds.

use pharmonic_core::energy::ConvexSplitting;
use pharmonic_core::sparse::BlockSparsity;
use pharmonic_core::{
    build_rect_mesh, implicit_step, penalty_density, quadrature_rule, run_flow, NodalField, Preset,
    QuarticSplitting, SolverConfig, StabilizedSplitting, StepFunctional, TriMesh,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

pub const GRADIENT_REL_TOL: f64 = 1e-6;
pub const HESSIAN_REL_TOL: f64 = 1e-5;
pub const CHECK_EXPONENTS: [f64; 4] = [1.0, 1.3, 2.0, 3.7];
const FD_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default)]
pub struct CheckOptions {
    /// Adds an error to the analytic gradient, to confirm the gradient suite can fail.
    pub perturb_gradient: bool,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    /// `Ok(summary)` or `Err(first failing assertion)`.
    pub outcome: Result<String, String>,
}

/// Worst relative errors over a batch of random fields.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConsistencyStats {
    pub samples: usize,
    pub max_gradient_rel_err: f64,
    pub max_hessian_rel_err: f64,
}

fn random_field(n_nodes: usize, n: usize, rng: &mut ChaCha8Rng) -> NodalField {
    let values = (0..n_nodes * n)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    NodalField::new(n, values).unwrap()
}

fn random_config(p: f64, rng: &mut ChaCha8Rng) -> SolverConfig {
    SolverConfig {
        p,
        eps: rng.random_range(0.01..0.5),
        alpha: rng.random_range(1.0..3.0),
        delta: rng.random_range(0.01..1.0),
        lambda: rng.random_range(0.0..2.0),
        tau: rng.random_range(0.01..0.5),
        ..Default::default()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn rel_err(approx: &[f64], exact: &[f64]) -> f64 {
    let diff: Vec<f64> = approx.iter().zip(exact).map(|(a, b)| a - b).collect();
    max_abs(&diff) / max_abs(exact).max(1e-12)
}

fn check_one_field(
    mesh: &TriMesh,
    pattern: &BlockSparsity,
    p: f64,
    rng: &mut ChaCha8Rng,
    opts: CheckOptions,
) -> Result<(f64, f64), CliError> {
    let n = 3;
    let cfg = random_config(p, rng);
    let u = random_field(mesh.n_nodes(), n, rng);
    let u_prev = random_field(mesh.n_nodes(), n, rng);
    let g = random_field(mesh.n_nodes(), n, rng);
    let f = StepFunctional::new(mesh, &u_prev, &g, &cfg, &QuarticSplitting)?;

    let mut grad = f.gradient(&u)?.into_values();
    if opts.perturb_gradient {
        grad[0] += 1e-3 * (1.0 + grad[0].abs());
    }
    let mut fd = vec![0.0; grad.len()];
    for (i, slot) in fd.iter_mut().enumerate() {
        let (mut plus, mut minus) = (u.clone(), u.clone());
        plus.values_mut()[i] += FD_STEP;
        minus.values_mut()[i] -= FD_STEP;
        *slot = f.value_difference(&plus, &minus)?.0 / (2.0 * FD_STEP);
    }
    let grad_err = rel_err(&fd, &grad);

    let dir = random_field(mesh.n_nodes(), n, rng);
    let hv = f.hessian(&u, pattern)?.mul_vec(dir.values());
    let gp = f.gradient(&u.axpy(FD_STEP, &dir))?;
    let gm = f.gradient(&u.axpy(-FD_STEP, &dir))?;
    let fd_hv: Vec<f64> = gp
        .values()
        .iter()
        .zip(gm.values())
        .map(|(a, b)| (a - b) / (2.0 * FD_STEP))
        .collect();
    Ok((grad_err, rel_err(&fd_hv, &hv)))
}

/// Compares analytic gradients and Hessian-vector products of the per-step
/// functional against central differences, `fields_per_p` random fields
/// for each exponent in [`CHECK_EXPONENTS`].
pub fn gradient_consistency(
    fields_per_p: usize,
    seed: u64,
    opts: CheckOptions,
) -> Result<ConsistencyStats, CliError> {
    let mesh = build_rect_mesh(3, 3, 1.0, 1.0)?;
    let pattern = BlockSparsity::new(&mesh, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = ConsistencyStats::default();
    for p in CHECK_EXPONENTS {
        for _ in 0..fields_per_p {
            let (ge, he) = check_one_field(&mesh, &pattern, p, &mut rng, opts)?;
            stats.samples += 1;
            stats.max_gradient_rel_err = stats.max_gradient_rel_err.max(ge);
            stats.max_hessian_rel_err = stats.max_hessian_rel_err.max(he);
        }
    }
    Ok(stats)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn quadrature_suite() -> Result<String, String> {
    for degree in [1usize, 2, 4] {
        let rule = quadrature_rule(degree).map_err(|e| e.to_string())?;
        for a in 0..=degree as u32 {
            for b in 0..=(degree as u32 - a) {
                let approx: f64 = rule
                    .iter()
                    .map(|(l, w)| 0.5 * w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                if (approx - exact).abs() > 1e-14 {
                    return Err(format!(
                        "degree {degree} rule integrates x^{a} y^{b} to {approx}, expected {exact}"
                    ));
                }
            }
        }
    }
    Ok("rules of degree 1, 2, 4 exact on their monomials".into())
}

fn splitting_suite() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let splittings: [(&str, &dyn ConvexSplitting); 2] = [
        ("quartic", &QuarticSplitting),
        ("stabilized", &StabilizedSplitting { shift: 2.0 }),
    ];
    for (name, s) in splittings {
        for _ in 0..1000 {
            let v: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let diff = s.implicit_value(&v) - s.explicit_value(&v);
            let f = penalty_density(&v);
            if (diff - f).abs() > 1e-12 * (1.0 + f.abs()) {
                return Err(format!("{name}: W+ - W- = {diff} but F = {f} at {v:?}"));
            }
        }
    }
    Ok("W+ - W- reproduces the penalty density".into())
}

fn gradient_suite(opts: CheckOptions) -> Result<String, String> {
    let stats = gradient_consistency(25, 2024, opts).map_err(|e| e.to_string())?;
    if stats.max_gradient_rel_err > GRADIENT_REL_TOL {
        return Err(format!(
            "max relative gradient error {:e} exceeds {GRADIENT_REL_TOL:e}",
            stats.max_gradient_rel_err
        ));
    }
    if stats.max_hessian_rel_err > HESSIAN_REL_TOL {
        return Err(format!(
            "max relative Hessian-vector error {:e} exceeds {HESSIAN_REL_TOL:e}",
            stats.max_hessian_rel_err
        ));
    }
    Ok(format!(
        "{} fields, gradient rel err {:.2e}, Hessian-vector rel err {:.2e}",
        stats.samples, stats.max_gradient_rel_err, stats.max_hessian_rel_err
    ))
}

fn energy_law_suite() -> Result<String, String> {
    let mesh = build_rect_mesh(6, 6, 1.0, 1.0).map_err(|e| e.to_string())?;
    let u0 = Preset::RandomUnit { seed: 5 }
        .build(&mesh, 3)
        .map_err(|e| e.to_string())?;
    let cfg = SolverConfig {
        p: 1.5,
        delta: 1e-2,
        t_final: 0.05,
        ..Default::default()
    };
    let out = run_flow(&mesh, &u0, &u0, &cfg, &QuarticSplitting).map_err(|e| e.to_string())?;
    if let Some(step) = out.trace.energy_estimate_violation(1e-9) {
        return Err(format!("discrete energy estimate violated at step {step}"));
    }
    if let Some(r) = out.trace.records.iter().find(|r| r.gk_decrease < -1e-12) {
        return Err(format!(
            "step {} increased G_k by {:e}",
            r.step, -r.gk_decrease
        ));
    }
    Ok(format!(
        "{} steps satisfy the energy estimate",
        out.trace.records.len() - 1
    ))
}

fn fixed_point_suite() -> Result<String, String> {
    let mesh = build_rect_mesh(4, 4, 1.0, 1.0).map_err(|e| e.to_string())?;
    let c = NodalField::constant(mesh.n_nodes(), &[0.0, 0.6, 0.8]);
    for p in [1.0, 1.5, 2.0, 3.0] {
        let cfg = SolverConfig {
            p,
            ..Default::default()
        };
        let step =
            implicit_step(&mesh, &c, &c, &cfg, &QuarticSplitting).map_err(|e| e.to_string())?;
        if step.newton_iterations != 0 || step.field != c {
            return Err(format!("p = {p}: constant unit field moved"));
        }
    }
    Ok("constant unit field is fixed for p in {1, 1.5, 2, 3}".into())
}

pub fn run_suites(opts: CheckOptions) -> Vec<SuiteReport> {
    vec![
        SuiteReport {
            name: "quadrature",
            outcome: quadrature_suite(),
        },
        SuiteReport {
            name: "splitting",
            outcome: splitting_suite(),
        },
        SuiteReport {
            name: "gradient",
            outcome: gradient_suite(opts),
        },
        SuiteReport {
            name: "energy-law",
            outcome: energy_law_suite(),
        },
        SuiteReport {
            name: "fixed-point",
            outcome: fixed_point_suite(),
        },
    ]
}

/// Prints one verdict line per suite; fails with the first failing suite's context.
pub fn cmd_check(opts: CheckOptions) -> Result<Vec<SuiteReport>, CliError> {
    let reports = run_suites(opts);
    for r in &reports {
        match &r.outcome {
            Ok(msg) => println!("PASS {}: {msg}", r.name),
            Err(msg) => println!("FAIL {}: {msg}", r.name),
        }
    }
    match reports
        .iter()
        .find_map(|r| r.outcome.as_ref().err().map(|m| (r.name, m)))
    {
        Some((name, msg)) => Err(CliError::Check(format!("{name} suite: {msg}"))),
        None => Ok(reports),
    }
}
