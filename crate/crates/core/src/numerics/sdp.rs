use nalgebra::{DMatrix, DVector};

use super::hermitian::HermitianMatrix;
use super::ipm::{self, IpmSettings, IpmStatus, RealProblem, Row, RowMatrix};
use super::{TOL_FEAS, TOL_GAP, TOL_INFEAS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpObjective {
    /// `min tr(X)`.
    MinimizeTrace,
    /// `max Σ α_i` over the residual variables.
    MaximizeResidualSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    GreaterEqual,
    Equal,
}

#[derive(Debug, Clone)]
pub struct SdpConstraint {
    pub coefficient: HermitianMatrix,
    pub bound: f64,
    pub sense: Sense,
}

impl SdpConstraint {
    pub fn at_least(coefficient: HermitianMatrix, bound: f64) -> Self {
        Self {
            coefficient,
            bound,
            sense: Sense::GreaterEqual,
        }
    }

    pub fn equal(coefficient: HermitianMatrix, bound: f64) -> Self {
        Self {
            coefficient,
            bound,
            sense: Sense::Equal,
        }
    }
}

/// Hermitian SDP over one PSD variable `X` plus `residual_count`
/// nonnegative scalars.
///
/// The first `residual_count` `≥`-constraints read
/// `tr(A_i X) − α_i ≥ b_i`; the remaining constraints do not involve any
/// residual.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub objective: SdpObjective,
    pub psd_dim: usize,
    pub constraints: Vec<SdpConstraint>,
    pub residual_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub psd_value: HermitianMatrix,
    pub residuals: Vec<f64>,
    pub objective_value: f64,
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub max_constraint_violation: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub tol_infeas: f64,
    pub max_iterations: usize,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            tol_feas: TOL_FEAS,
            tol_gap: TOL_GAP,
            tol_infeas: TOL_INFEAS,
            max_iterations: 200,
        }
    }
}

pub const MAX_PSD_DIM: usize = 256;

impl SdpProblem {
    pub fn validate(&self) -> Result<()> {
        if self.psd_dim == 0 || self.psd_dim > MAX_PSD_DIM {
            return Err(Error::MalformedSdp(format!(
                "psd_dim {} outside 1..={MAX_PSD_DIM}",
                self.psd_dim
            )));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coefficient.dim() != self.psd_dim {
                return Err(Error::MalformedSdp(format!(
                    "constraint {i} has dimension {} but psd_dim is {}",
                    c.coefficient.dim(),
                    self.psd_dim
                )));
            }
            if !c.bound.is_finite() {
                return Err(Error::MalformedSdp(format!(
                    "constraint {i} has a non-finite bound"
                )));
            }
        }
        let ge: Vec<usize> = self.ge_indices();
        if self.residual_count > ge.len() {
            return Err(Error::MalformedSdp(format!(
                "residual_count {} exceeds the {} inequality constraints",
                self.residual_count,
                ge.len()
            )));
        }
        Ok(())
    }

    fn ge_indices(&self) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.sense == Sense::GreaterEqual)
            .map(|(i, _)| i)
            .collect()
    }

    /// Real block form: `Y` (2n × 2n) embeds `X`, and the linear block holds
    /// `[α_1..α_r, surplus for every ≥ row]`.
    fn to_real(&self) -> RealProblem {
        let n = self.psd_dim;
        let ge = self.ge_indices();
        let r = self.residual_count;
        let n_lin = r + ge.len();
        let mut c_lin = DVector::zeros(n_lin);
        let c_mat = match self.objective {
            SdpObjective::MinimizeTrace => DMatrix::identity(2 * n, 2 * n) * 0.5,
            SdpObjective::MaximizeResidualSum => {
                for k in 0..r {
                    c_lin[k] = -1.0;
                }
                DMatrix::zeros(2 * n, 2 * n)
            }
        };
        let rows = self
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut lin = Vec::new();
                if let Some(pos) = ge.iter().position(|&g| g == i) {
                    if pos < r {
                        lin.push((pos, -1.0));
                    }
                    lin.push((r + pos, -1.0));
                }
                Row {
                    mat: embed_half(&c.coefficient),
                    lin,
                    rhs: c.bound,
                }
            })
            .collect();
        RealProblem {
            n: 2 * n,
            n_lin,
            c_mat,
            c_lin,
            rows,
        }
    }

    /// Worst violation of the constraints (including PSD-ness and α ≥ 0)
    /// at a candidate point.
    pub fn max_violation(&self, x: &HermitianMatrix, residuals: &[f64]) -> f64 {
        let ge = self.ge_indices();
        let mut worst = (-x.min_eigenvalue()).max(0.0);
        for &a in residuals {
            worst = worst.max(-a);
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let mut lhs = c.coefficient.inner(x);
            if let Some(pos) = ge.iter().position(|&g| g == i) {
                if pos < residuals.len() {
                    lhs -= residuals[pos];
                }
            }
            let v = match c.sense {
                Sense::GreaterEqual => (c.bound - lhs).max(0.0),
                Sense::Equal => (c.bound - lhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn objective_at(&self, x: &HermitianMatrix, residuals: &[f64]) -> f64 {
        match self.objective {
            SdpObjective::MinimizeTrace => x.trace(),
            SdpObjective::MaximizeResidualSum => residuals.iter().sum(),
        }
    }
}

/// Half of the real embedding, so that `<row, Y> = Re tr(A X)`.
fn embed_half(a: &HermitianMatrix) -> RowMatrix {
    let n = a.dim();
    if a.nnz() > n {
        return RowMatrix::Dense(a.embed() * 0.5);
    }
    let mut t = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let z = a.get(i, j);
            if z.re != 0.0 {
                t.push((i, j, 0.5 * z.re));
                t.push((i + n, j + n, 0.5 * z.re));
            }
            if z.im != 0.0 {
                t.push((i + n, j, 0.5 * z.im));
                t.push((i, j + n, -0.5 * z.im));
            }
        }
    }
    RowMatrix::Sparse(t)
}

pub fn solve_sdp(problem: &SdpProblem) -> Result<SdpSolution> {
    solve_sdp_with(problem, &SdpSettings::default())
}

pub fn solve_sdp_with(problem: &SdpProblem, settings: &SdpSettings) -> Result<SdpSolution> {
    problem.validate()?;
    let real = problem.to_real();
    // Internal tolerances sit an order below the reported ones so the
    // certificate survives mapping back to the complex variable.
    let out = ipm::solve(
        &real,
        &IpmSettings {
            tol_feas: 0.1 * settings.tol_feas,
            tol_gap: 0.1 * settings.tol_gap,
            tol_infeas: settings.tol_infeas,
            max_iterations: settings.max_iterations,
            accept_feas: settings.tol_feas,
            accept_gap: settings.tol_gap,
        },
    );
    let psd_value = HermitianMatrix::from_embedding(&out.x_mat);
    let residuals: Vec<f64> = out
        .x_lin
        .iter()
        .take(problem.residual_count)
        .copied()
        .collect();
    let violation = problem.max_violation(&psd_value, &residuals);
    let status = match out.status {
        IpmStatus::Optimal
            if violation <= settings.tol_feas && out.relative_gap <= settings.tol_gap =>
        {
            SdpStatus::Optimal
        }
        IpmStatus::PrimalInfeasible => SdpStatus::Infeasible,
        _ => SdpStatus::NumericalFailure,
    };
    let sign = match problem.objective {
        SdpObjective::MinimizeTrace => 1.0,
        SdpObjective::MaximizeResidualSum => -1.0,
    };
    Ok(SdpSolution {
        status,
        objective_value: problem.objective_at(&psd_value, &residuals),
        dual_objective: sign * out.dual_objective,
        duality_gap: out.relative_gap,
        max_constraint_violation: violation,
        iterations: out.iterations,
        psd_value,
        residuals,
    })
}
