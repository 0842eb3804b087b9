use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearSolverKind {
    /// Envelope Cholesky factorization.
    Direct,
    /// Jacobi-preconditioned conjugate gradients.
    Cg,
}

impl LinearSolverKind {
    pub fn name(self) -> &'static str {
        match self {
            LinearSolverKind::Direct => "direct",
            LinearSolverKind::Cg => "cg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(LinearSolverKind::Direct),
            "cg" => Some(LinearSolverKind::Cg),
            _ => None,
        }
    }
}

/// Model and discretization parameters of the regularized, penalized flow.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Energy exponent, `p >= 1`.
    pub p: f64,
    /// Regularization parameter.
    pub eps: f64,
    /// Exponent of the elliptic regularization weight `eps^alpha`.
    pub alpha: f64,
    /// Ginzburg-Landau penalty scale.
    pub delta: f64,
    /// Fidelity weight.
    pub lambda: f64,
    pub tau: f64,
    pub t_final: f64,
    /// Absolute tolerance on the Euclidean norm of the Newton residual.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Quadrature degree for the penalty, fidelity and mass integrals.
    pub quad_degree_zero_order: usize,
    pub linear_solver: LinearSolverKind,
    pub execution: Execution,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 1.0,
            eps: 1e-2,
            alpha: 2.0,
            delta: 1e-3,
            lambda: 1.0,
            tau: 1e-2,
            t_final: 1.0,
            newton_tol: 1e-10,
            newton_max_iter: 200,
            quad_degree_zero_order: 4,
            linear_solver: LinearSolverKind::Direct,
            execution: Execution::default(),
        }
    }
}

impl SolverConfig {
    /// Shift in the regularized gradient norm: `eps` for `p < 2`, zero otherwise.
    pub fn a_p(&self) -> f64 {
        if self.p >= 2.0 {
            0.0
        } else {
            self.eps
        }
    }

    /// Weight of the added Dirichlet term, `eps^alpha`.
    pub fn b_p(&self) -> f64 {
        self.eps.powf(self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps", self.eps),
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("tau", self.tau),
            ("t_final", self.t_final),
            ("newton_tol", self.newton_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be positive (got {v})"
                )));
            }
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "p must be >= 1 (got {})",
                self.p
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be >= 0 (got {})",
                self.lambda
            )));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::InvalidConfig(
                "newton_max_iter must be positive".into(),
            ));
        }
        if ![1, 2, 4].contains(&self.quad_degree_zero_order) {
            return Err(Error::UnsupportedQuadrature(self.quad_degree_zero_order));
        }
        Ok(())
    }

    /// Number of uniform steps `L = ceil(T / tau)` and the adjusted final time `L * tau`.
    pub fn time_steps(&self) -> (usize, f64) {
        let ratio = self.t_final / self.tau;
        let steps = ((ratio - 1e-9 * ratio.max(1.0)).ceil() as usize).max(1);
        (steps, steps as f64 * self.tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_weights() {
        let mut c = SolverConfig {
            p: 1.5,
            eps: 0.1,
            alpha: 2.0,
            ..Default::default()
        };
        assert_eq!(c.a_p(), 0.1);
        assert!((c.b_p() - 0.01).abs() < 1e-17);
        c.p = 2.0;
        assert_eq!(c.a_p(), 0.0);
        c.p = 7.0;
        assert_eq!(c.a_p(), 0.0);
    }

    #[test]
    fn validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig {
                p: 0.9,
                ..Default::default()
            },
            SolverConfig {
                eps: 0.0,
                ..Default::default()
            },
            SolverConfig {
                delta: -1.0,
                ..Default::default()
            },
            SolverConfig {
                tau: f64::NAN,
                ..Default::default()
            },
            SolverConfig {
                lambda: -0.1,
                ..Default::default()
            },
            SolverConfig {
                quad_degree_zero_order: 3,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn step_count_rounds_up() {
        let c = SolverConfig {
            t_final: 1.0,
            tau: 0.01,
            ..Default::default()
        };
        assert_eq!(c.time_steps().0, 100);
        let c = SolverConfig {
            t_final: 0.5,
            tau: 0.2,
            ..Default::default()
        };
        let (l, t) = c.time_steps();
        assert_eq!(l, 3);
        assert!((t - 0.6).abs() < 1e-15);
    }
}
