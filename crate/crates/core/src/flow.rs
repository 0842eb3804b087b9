//! Implicit time stepping: each step minimizes the convex per-step
//! functional with damped Newton and logs the discrete energy law.

use std::fmt::Write as _;

use crate::config::{LinearSolverKind, SolverConfig};
use crate::energy::{total_energy, ConvexSplitting, EnergyBreakdown, StepFunctional};
use crate::error::{Error, Result};
use crate::field::{dot, norm, NodalField};
use crate::integrate::l2_distance_sq;
use crate::mesh::TriMesh;
use crate::quadrature::quadrature_rule;
use crate::sparse::{conjugate_gradient, BlockSparsity, CsrMatrix, EnvelopeCholesky};
use crate::sphere::{constraint_report_with, orthogonality_defect_with};

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-10;
const CG_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct StepResult {
    pub field: NodalField,
    pub newton_iterations: usize,
    pub final_residual_norm: f64,
    /// `G_k(u_prev) - G_k(u_k)`; nonnegative up to rounding.
    pub gk_decrease: f64,
}

/// Minimizes the per-step functional starting from `u_prev`.
pub fn implicit_step(
    mesh: &TriMesh,
    u_prev: &NodalField,
    g: &NodalField,
    config: &SolverConfig,
    splitting: &dyn ConvexSplitting,
) -> Result<StepResult> {
    let pattern = BlockSparsity::new(mesh, u_prev.n_components());
    implicit_step_with_pattern(mesh, &pattern, u_prev, g, config, splitting)
}

pub fn implicit_step_with_pattern(
    mesh: &TriMesh,
    pattern: &BlockSparsity,
    u_prev: &NodalField,
    g: &NodalField,
    config: &SolverConfig,
    splitting: &dyn ConvexSplitting,
) -> Result<StepResult> {
    if u_prev.values().iter().any(|x| !x.is_finite()) {
        return Err(Error::SizeMismatch(
            "previous step has non-finite entries".into(),
        ));
    }
    let functional = StepFunctional::new(mesh, u_prev, g, config, splitting)?;
    let mut u = u_prev.clone();
    let mut iterations = 0;
    loop {
        let grad = functional.gradient(&u)?;
        let residual = norm(grad.values());
        if residual <= config.newton_tol {
            let gk_decrease = if iterations == 0 {
                0.0
            } else {
                functional.value_difference(u_prev, &u)?.0
            };
            return Ok(StepResult {
                field: u,
                newton_iterations: iterations,
                final_residual_norm: residual,
                gk_decrease,
            });
        }
        if iterations == config.newton_max_iter || !residual.is_finite() {
            return Err(Error::NonConvergence {
                iterations,
                residual,
            });
        }
        let hessian = functional.hessian(&u, pattern)?;
        let rhs: Vec<f64> = grad.values().iter().map(|x| -x).collect();
        let direction = NodalField::new(
            u.n_components(),
            solve(&hessian, &rhs, config.linear_solver)?,
        )
        .map_err(|_| Error::LinearSolveFailure("non-finite Newton direction".into()))?;
        let slope = dot(grad.values(), direction.values());
        if !(slope < 0.0) {
            return Err(Error::LinearSolveFailure(format!(
                "Newton direction is not a descent direction (slope {slope:e})"
            )));
        }

        // Armijo backtracking. Near convergence the predicted decrease drops
        // below the rounding of G, hence the small allowance.
        let mut t = 1.0;
        loop {
            let trial = u.axpy(t, &direction);
            let (change, scale) = functional.value_difference(&trial, &u)?;
            if change <= ARMIJO * t * slope + 4.0 * f64::EPSILON * scale {
                u = trial;
                break;
            }
            t *= 0.5;
            if t < MIN_STEP {
                return Err(Error::NonConvergence {
                    iterations,
                    residual,
                });
            }
        }
        iterations += 1;
    }
}

fn solve(a: &CsrMatrix, b: &[f64], kind: LinearSolverKind) -> Result<Vec<f64>> {
    match kind {
        LinearSolverKind::Direct => Ok(EnvelopeCholesky::factor(a)?.solve(b)),
        LinearSolverKind::Cg => {
            conjugate_gradient(a, b, CG_REL_TOL, 20 * a.dim().max(10)).map(|(x, _)| x)
        }
    }
}

/// Per-step diagnostics of a flow run. Step 0 records the initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub energy: EnergyBreakdown,
    /// `|| (u_k - u_{k-1}) / tau ||^2_{L2}`
    pub dt_norm_sq: f64,
    /// `(tau/2) sum_{j<=k} dt_norm_sq_j`
    pub cumulative_dissipation: f64,
    pub constraint_l2: f64,
    pub max_modulus: f64,
    pub orthogonality_defect: f64,
    pub newton_iterations: usize,
    pub gk_decrease: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowTrace {
    pub tau: f64,
    pub records: Vec<StepRecord>,
}

pub const TRACE_COLUMNS: [&str; 13] = [
    "step",
    "time",
    "e_diffusion",
    "e_pterm",
    "e_penalty",
    "e_fidelity",
    "e_total",
    "dt_norm_sq",
    "cum_dissipation",
    "constraint_l2",
    "max_modulus",
    "orth_defect",
    "newton_iters",
];

impl FlowTrace {
    pub fn last(&self) -> Option<&StepRecord> {
        self.records.last()
    }

    /// CSV with a header row; floats use the shortest round-trip representation.
    pub fn to_csv(&self) -> String {
        let mut s = TRACE_COLUMNS.join(",");
        s.push('\n');
        for r in &self.records {
            let e = &r.energy;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.step,
                r.time,
                e.diffusion,
                e.p_term,
                e.penalty,
                e.fidelity,
                e.total,
                r.dt_norm_sq,
                r.cumulative_dissipation,
                r.constraint_l2,
                r.max_modulus,
                r.orthogonality_defect,
                r.newton_iterations
            );
        }
        s
    }

    /// First step `l` violating `dissipation_l + J(u_l) <= J(u_0) + l * slack`.
    pub fn energy_estimate_violation(&self, slack_per_step: f64) -> Option<usize> {
        let j0 = self.records.first()?.energy.total;
        self.records.iter().find_map(|r| {
            let lhs = r.cumulative_dissipation + r.energy.total;
            (lhs > j0 + r.step as f64 * slack_per_step).then_some(r.step)
        })
    }
}

#[derive(Clone, Debug)]
pub struct FlowOutcome {
    pub trace: FlowTrace,
    pub final_field: NodalField,
    pub stopped_early: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

pub fn run_flow(
    mesh: &TriMesh,
    u0: &NodalField,
    g: &NodalField,
    config: &SolverConfig,
    splitting: &dyn ConvexSplitting,
) -> Result<FlowOutcome> {
    run_flow_with(mesh, u0, g, config, splitting, |_, _, _, _| {
        Control::Continue
    })
}

/// Runs `ceil(T / tau)` implicit steps. After every step the observer sees
/// the step index, the previous and new fields and the step record, and may
/// stop the run early.
pub fn run_flow_with<F>(
    mesh: &TriMesh,
    u0: &NodalField,
    g: &NodalField,
    config: &SolverConfig,
    splitting: &dyn ConvexSplitting,
    mut observer: F,
) -> Result<FlowOutcome>
where
    F: FnMut(usize, &NodalField, &NodalField, &StepRecord) -> Control,
{
    config.validate()?;
    u0.check_on(mesh)?;
    u0.check_compatible(g, "initial field vs datum")?;
    let (steps, _) = config.time_steps();
    let tau = config.tau;
    let exec = config.execution;
    let rule = quadrature_rule(config.quad_degree_zero_order)?;
    let pattern = BlockSparsity::new(mesh, u0.n_components());

    let initial = StepRecord {
        step: 0,
        time: 0.0,
        energy: total_energy(mesh, u0, g, config)?,
        dt_norm_sq: 0.0,
        cumulative_dissipation: 0.0,
        constraint_l2: constraint_report_with(mesh, u0, config.delta, exec)?.l2_violation,
        max_modulus: u0.max_nodal_modulus(),
        orthogonality_defect: 0.0,
        newton_iterations: 0,
        gk_decrease: 0.0,
        residual: 0.0,
    };
    let mut trace = FlowTrace {
        tau,
        records: vec![initial],
    };
    let mut current = u0.clone();
    let mut cumulative = 0.0;
    let mut stopped_early = false;
    for k in 1..=steps {
        let step = implicit_step_with_pattern(mesh, &pattern, &current, g, config, splitting)
            .map_err(|e| Error::Step {
                step: k,
                source: Box::new(e),
            })?;
        let dt_norm_sq = l2_distance_sq(mesh, &step.field, &current, &rule, exec) / (tau * tau);
        cumulative += 0.5 * tau * dt_norm_sq;
        let record = StepRecord {
            step: k,
            time: k as f64 * tau,
            energy: total_energy(mesh, &step.field, g, config)?,
            dt_norm_sq,
            cumulative_dissipation: cumulative,
            constraint_l2: constraint_report_with(mesh, &step.field, config.delta, exec)?
                .l2_violation,
            max_modulus: step.field.max_nodal_modulus(),
            orthogonality_defect: orthogonality_defect_with(
                mesh,
                &step.field,
                &current,
                tau,
                exec,
            )?,
            newton_iterations: step.newton_iterations,
            gk_decrease: step.gk_decrease,
            residual: step.final_residual_norm,
        };
        let control = observer(k, &current, &step.field, &record);
        trace.records.push(record);
        current = step.field;
        if control == Control::Stop {
            stopped_early = k < steps;
            break;
        }
    }
    Ok(FlowOutcome {
        trace,
        final_field: current,
        stopped_early,
    })
}

/// Piecewise-linear interpolant in time of the step fields `u^0, ..., u^L`.
pub fn time_interpolant(fields: &[NodalField], tau: f64, t: f64) -> Result<NodalField> {
    if fields.is_empty() {
        return Err(Error::SizeMismatch("no fields to interpolate".into()));
    }
    let last = fields.len() - 1;
    let t_max = last as f64 * tau;
    if !(t >= 0.0 && t <= t_max * (1.0 + 1e-14)) {
        return Err(Error::TimeOutOfRange { t, t_max });
    }
    let s = t / tau;
    let knot = s.round();
    if (s - knot).abs() <= 1e-12 * s.max(1.0) {
        return Ok(fields[(knot as usize).min(last)].clone());
    }
    let k = (s.ceil() as usize).clamp(1, last);
    let theta = (t - (k - 1) as f64 * tau) / tau;
    let (prev, next) = (&fields[k - 1], &fields[k]);
    prev.check_compatible(next, "time interpolant")?;
    let values = prev
        .values()
        .iter()
        .zip(next.values())
        .map(|(a, b)| theta * b + (1.0 - theta) * a)
        .collect();
    NodalField::new(prev.n_components(), values)
}

/// True iff `|| u - u_prev ||_{L2} / tau <= threshold`.
pub fn stationarity_check(
    mesh: &TriMesh,
    u: &NodalField,
    u_prev: &NodalField,
    tau: f64,
    threshold: f64,
) -> Result<bool> {
    u.check_on(mesh)?;
    u.check_compatible(u_prev, "stationarity check")?;
    let rule = quadrature_rule(4)?;
    let dist = l2_distance_sq(mesh, u, u_prev, &rule, Default::default()).sqrt();
    Ok(dist / tau <= threshold)
}
