//! Primal-dual interior-point method for real block SDPs of the form
//!
//! ```text
//! min  <C, X> + c_linᵀ x_lin
//! s.t. <A_i, X> + a_iᵀ x_lin = b_i,   i = 1..m
//!      X ⪰ 0,  x_lin ≥ 0
//! ```
//!
//! The iteration runs on the homogeneous self-dual embedding, so the same
//! loop either converges to a primal-dual optimal pair (τ > 0) or produces
//! a Farkas-type certificate of infeasibility (τ → 0). Search directions
//! use HKM scaling with a Mehrotra predictor-corrector step.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Constraint matrix of one row, stored dense or as a symmetric triplet list
/// (both triangles present).
#[derive(Debug, Clone)]
pub(crate) enum RowMatrix {
    Dense(DMatrix<f64>),
    Sparse(Vec<(usize, usize, f64)>),
}

impl RowMatrix {
    fn inner(&self, x: &DMatrix<f64>) -> f64 {
        match self {
            RowMatrix::Dense(a) => a.dot(x),
            RowMatrix::Sparse(t) => t.iter().map(|&(i, j, v)| v * x[(i, j)]).sum(),
        }
    }

    fn add_scaled_to(&self, s: f64, out: &mut DMatrix<f64>) {
        match self {
            RowMatrix::Dense(a) => *out += a * s,
            RowMatrix::Sparse(t) => {
                for &(i, j, v) in t {
                    out[(i, j)] += s * v;
                }
            }
        }
    }

    fn scale(&mut self, s: f64) {
        match self {
            RowMatrix::Dense(a) => *a *= s,
            RowMatrix::Sparse(t) => t.iter_mut().for_each(|e| e.2 *= s),
        }
    }

    fn norm_sq(&self) -> f64 {
        match self {
            RowMatrix::Dense(a) => a.norm_squared(),
            RowMatrix::Sparse(t) => t.iter().map(|e| e.2 * e.2).sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub mat: RowMatrix,
    pub lin: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct RealProblem {
    pub n: usize,
    pub n_lin: usize,
    pub c_mat: DMatrix<f64>,
    pub c_lin: DVector<f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    /// Stopping targets.
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub tol_infeas: f64,
    pub max_iterations: usize,
    /// Looser levels at which a run that stops making progress still
    /// counts as optimal.
    pub accept_feas: f64,
    pub accept_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    IterationLimit,
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmOutcome {
    pub status: IpmStatus,
    pub x_mat: DMatrix<f64>,
    pub x_lin: DVector<f64>,
    #[cfg_attr(not(test), allow(dead_code))]
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

struct State {
    x: DMatrix<f64>,
    xl: DVector<f64>,
    y: DVector<f64>,
    s: DMatrix<f64>,
    sl: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: DMatrix<f64>,
    dxl: DVector<f64>,
    dy: DVector<f64>,
    ds: DMatrix<f64>,
    dsl: DVector<f64>,
    dtau: f64,
    dkappa: f64,
}

/// Quantities that depend only on the current iterate.
struct Linearization {
    sinv: DMatrix<f64>,
    schur: SchurSystem,
    rp: DVector<f64>,
    rd: DMatrix<f64>,
    rdl: DVector<f64>,
    rg: f64,
    hc: DMatrix<f64>,
    hcl: DVector<f64>,
    a_hc: DVector<f64>,
    dy2: DVector<f64>,
    c_hc: f64,
}

/// Cholesky factor of the slightly regularized Schur complement, kept with
/// the exact matrix so solves can be refined against it. Near the optimum
/// the matrix is badly conditioned and a plain solve leaves a primal
/// residual that the iteration cannot remove.
struct SchurSystem {
    exact: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl SchurSystem {
    fn new(exact: DMatrix<f64>) -> Option<Self> {
        let mut reg = exact.clone();
        let max_diag = (0..reg.nrows()).map(|i| reg[(i, i)]).fold(0.0, f64::max);
        for i in 0..reg.nrows() {
            reg[(i, i)] += 1e-14 * max_diag.max(1e-300);
        }
        Some(Self {
            factor: Cholesky::new(reg)?,
            exact,
        })
    }

    fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut x = self.factor.solve(rhs);
        for _ in 0..2 {
            let r = rhs - &self.exact * &x;
            x += self.factor.solve(&r);
        }
        x
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn inv_spd(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    Cholesky::new(sym(m.clone())).map(|c| c.inverse())
}

/// Largest step `a` such that `m + a·dm` stays positive semidefinite.
fn max_step_psd(m: &DMatrix<f64>, dm: &DMatrix<f64>) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(f64::INFINITY);
    }
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l();
    let left = l.solve_lower_triangular(dm)?;
    let w = l.solve_lower_triangular(&left.transpose())?;
    let lambda_min = sym(w).symmetric_eigenvalues().min();
    Some(if lambda_min < 0.0 {
        -1.0 / lambda_min
    } else {
        f64::INFINITY
    })
}

fn max_step_orthant(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

fn max_step_scalar(v: f64, dv: f64) -> f64 {
    if dv < 0.0 {
        -v / dv
    } else {
        f64::INFINITY
    }
}

impl RealProblem {
    fn m(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, x: &DMatrix<f64>, xl: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows
                .iter()
                .map(|r| r.mat.inner(x) + r.lin.iter().map(|&(k, a)| a * xl[k]).sum::<f64>()),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let mut mat = DMatrix::zeros(self.n, self.n);
        let mut lin = DVector::zeros(self.n_lin);
        for (r, &yi) in self.rows.iter().zip(y.iter()) {
            r.mat.add_scaled_to(yi, &mut mat);
            for &(k, a) in &r.lin {
                lin[k] += yi * a;
            }
        }
        (mat, lin)
    }

    fn rhs(&self) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.rows.iter().map(|r| r.rhs))
    }

    /// Normalizes every row to unit norm and returns the original norms.
    /// The primal iterate is unaffected.
    fn equilibrate(&mut self) -> DVector<f64> {
        let m = self.rows.len();
        let norms = self.rows.iter_mut().map(|r| {
            let norm = (r.mat.norm_sq() + r.lin.iter().map(|e| e.1 * e.1).sum::<f64>()).sqrt();
            let norm = if norm > 0.0 { norm } else { 1.0 };
            r.mat.scale(1.0 / norm);
            r.lin.iter_mut().for_each(|e| e.1 /= norm);
            r.rhs /= norm;
            norm
        });
        DVector::from_iterator(m, norms.collect::<Vec<_>>())
    }

    /// Schur complement `M_ij = tr(A_i X A_j S⁻¹) + Σ_k a_ik a_jk x_k / s_k`.
    fn schur(&self, x: &DMatrix<f64>, sinv: &DMatrix<f64>, d_lin: &DVector<f64>) -> DMatrix<f64> {
        let m = self.m();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            if let RowMatrix::Dense(ai) = &self.rows[i].mat {
                let g = x * ai * sinv;
                for j in 0..m {
                    let v = self.rows[j].mat.inner(&g);
                    out[(i, j)] = v;
                    out[(j, i)] = v;
                }
            }
        }
        for i in 0..m {
            let RowMatrix::Sparse(ti) = &self.rows[i].mat else {
                continue;
            };
            for j in i..m {
                let RowMatrix::Sparse(tj) = &self.rows[j].mat else {
                    continue;
                };
                let mut v = 0.0;
                for &(a, b, vi) in ti {
                    for &(c, d, vj) in tj {
                        v += vi * vj * x[(b, c)] * sinv[(d, a)];
                    }
                }
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        for i in 0..m {
            for &(k, a) in &self.rows[i].lin {
                for j in 0..m {
                    for &(k2, a2) in &self.rows[j].lin {
                        if k == k2 {
                            out[(i, j)] += a * a2 * d_lin[k];
                        }
                    }
                }
            }
        }
        out
    }

    fn inner_c(&self, mat: &DMatrix<f64>, lin: &DVector<f64>) -> f64 {
        self.c_mat.dot(mat) + self.c_lin.dot(lin)
    }

    fn degree(&self) -> f64 {
        (self.n + self.n_lin + 1) as f64
    }
}

impl State {
    fn initial(p: &RealProblem) -> Self {
        Self {
            x: DMatrix::identity(p.n, p.n),
            xl: DVector::from_element(p.n_lin, 1.0),
            y: DVector::zeros(p.m()),
            s: DMatrix::identity(p.n, p.n),
            sl: DVector::from_element(p.n_lin, 1.0),
            tau: 1.0,
            kappa: 1.0,
        }
    }

    fn mu(&self, p: &RealProblem) -> f64 {
        (self.x.dot(&self.s) + self.xl.dot(&self.sl) + self.tau * self.kappa) / p.degree()
    }
}

struct Solver<'a> {
    p: &'a RealProblem,
    b: DVector<f64>,
    b_norm: f64,
    c_norm: f64,
    /// Row norms removed by equilibration.
    row_norms: DVector<f64>,
}

impl<'a> Solver<'a> {
    /// Worst feasibility residual and the relative duality gap of `st`.
    ///
    /// The primal side is measured both relative to `‖b‖` and row by row in
    /// the caller's units, so equilibration cannot hide a violated row.
    fn measure(
        &self,
        st: &State,
        rp: &DVector<f64>,
        rd: &DMatrix<f64>,
        rdl: &DVector<f64>,
    ) -> (f64, f64) {
        let pobj = self.p.inner_c(&st.x, &st.xl) / st.tau;
        let dobj = self.b.dot(&st.y) / st.tau;
        let pres = rp.norm() / st.tau / (1.0 + self.b_norm);
        let pres_abs = rp
            .iter()
            .zip(&self.row_norms)
            .fold(0.0f64, |m, (r, n)| m.max((r * n).abs()))
            / st.tau;
        let dres = (rd.norm_squared() + rdl.norm_squared()).sqrt() / st.tau / (1.0 + self.c_norm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
        (pres.max(pres_abs).max(dres), gap)
    }

    fn residuals(&self, st: &State) -> (DVector<f64>, DMatrix<f64>, DVector<f64>) {
        let p = self.p;
        let rp = p.apply(&st.x, &st.xl) - &self.b * st.tau;
        let (aty, atyl) = p.adjoint(&st.y);
        (
            rp,
            aty + &st.s - &p.c_mat * st.tau,
            atyl + &st.sl - &p.c_lin * st.tau,
        )
    }

    /// `H(U) = sym(X U S⁻¹)`, the HKM scaling applied to a dual-space matrix.
    fn scale_mat(x: &DMatrix<f64>, u: &DMatrix<f64>, sinv: &DMatrix<f64>) -> DMatrix<f64> {
        sym(x * u * sinv)
    }

    fn linearize(&self, st: &State) -> Option<Linearization> {
        let p = self.p;
        let sinv = if p.n > 0 {
            inv_spd(&st.s)?
        } else {
            DMatrix::zeros(0, 0)
        };
        let d_lin = st.xl.component_div(&st.sl);
        let schur = SchurSystem::new(p.schur(&st.x, &sinv, &d_lin))?;

        let (rp, rd, rdl) = self.residuals(st);
        let rg = p.inner_c(&st.x, &st.xl) - self.b.dot(&st.y) + st.kappa;

        let hc = Self::scale_mat(&st.x, &p.c_mat, &sinv);
        let hcl = p.c_lin.component_mul(&d_lin);
        let a_hc = p.apply(&hc, &hcl);
        let dy2 = schur.solve(&(&a_hc + &self.b));
        let c_hc = p.inner_c(&hc, &hcl);
        Some(Linearization {
            sinv,
            schur,
            rp,
            rd,
            rdl,
            rg,
            hc,
            hcl,
            a_hc,
            dy2,
            c_hc,
        })
    }

    fn direction(
        &self,
        st: &State,
        lin: &Linearization,
        eta: f64,
        sigma_mu: f64,
        corr: Option<&Direction>,
    ) -> Direction {
        let p = self.p;
        let mut rc = &lin.sinv * sigma_mu - &st.x;
        let mut rcl = st.sl.map(|s| sigma_mu / s) - &st.xl;
        let mut r_tk = sigma_mu - st.tau * st.kappa;
        if let Some(a) = corr {
            rc -= sym(&a.dx * &a.ds * &lin.sinv);
            rcl -= a.dxl.component_mul(&a.dsl).component_div(&st.sl);
            r_tk -= a.dtau * a.dkappa;
        }
        let d_lin = st.xl.component_div(&st.sl);

        let h_rd = Self::scale_mat(&st.x, &lin.rd, &lin.sinv);
        let h_rdl = lin.rdl.component_mul(&d_lin);
        let rhs1 = -&lin.rp * eta - p.apply(&(&rc + &h_rd * eta), &(&rcl + &h_rdl * eta));
        let dy1 = lin.schur.solve(&rhs1);

        let c_dx1 = p.inner_c(&rc, &rcl)
            + eta * (lin.hc.dot(&lin.rd) + lin.hcl.dot(&lin.rdl))
            + lin.a_hc.dot(&dy1);
        let c_dx2 = lin.a_hc.dot(&lin.dy2) - lin.c_hc;
        let num = -eta * lin.rg - c_dx1 + self.b.dot(&dy1) - r_tk / st.tau;
        let den = c_dx2 - self.b.dot(&lin.dy2) - st.kappa / st.tau;
        let dtau = num / den;

        let dy = dy1 + &lin.dy2 * dtau;
        let (aty, atyl) = p.adjoint(&dy);
        let ds = -&lin.rd * eta - aty + &p.c_mat * dtau;
        let dsl = -&lin.rdl * eta - atyl + &p.c_lin * dtau;
        let dx = rc - Self::scale_mat(&st.x, &ds, &lin.sinv);
        let dxl = rcl - dsl.component_mul(&d_lin);
        let dkappa = (r_tk - st.kappa * dtau) / st.tau;
        Direction {
            dx,
            dxl,
            dy,
            ds,
            dsl,
            dtau,
            dkappa,
        }
    }

    fn max_step(st: &State, d: &Direction) -> Option<f64> {
        let a = [
            max_step_psd(&st.x, &d.dx)?,
            max_step_psd(&st.s, &d.ds)?,
            max_step_orthant(&st.xl, &d.dxl),
            max_step_orthant(&st.sl, &d.dsl),
            max_step_scalar(st.tau, d.dtau),
            max_step_scalar(st.kappa, d.dkappa),
        ];
        Some(a.into_iter().fold(f64::INFINITY, f64::min))
    }

    fn mu_after(&self, st: &State, d: &Direction, a: f64) -> f64 {
        let x = &st.x + &d.dx * a;
        let s = &st.s + &d.ds * a;
        let xl = &st.xl + &d.dxl * a;
        let sl = &st.sl + &d.dsl * a;
        (x.dot(&s) + xl.dot(&sl) + (st.tau + a * d.dtau) * (st.kappa + a * d.dkappa))
            / self.p.degree()
    }
}

pub(crate) fn solve(problem: &RealProblem, settings: &IpmSettings) -> IpmOutcome {
    let mut p = problem.clone();
    let row_norms = p.equilibrate();
    let b = p.rhs();
    let solver = Solver {
        p: &p,
        b_norm: b.norm(),
        c_norm: (p.c_mat.norm_squared() + p.c_lin.norm_squared()).sqrt(),
        b: b.clone(),
        row_norms,
    };

    let mut st = State::initial(&p);
    let mut status = IpmStatus::IterationLimit;
    let mut iterations = 0;
    let mut small_steps = 0;
    // Best residual-to-target ratio and complementarity seen so far; the run
    // is cut short when neither halves within `PATIENCE` iterations.
    const PATIENCE: usize = 15;
    let mut best = (f64::INFINITY, f64::INFINITY, 0usize);

    for it in 0..=settings.max_iterations {
        iterations = it;
        let Some(lin) = solver.linearize(&st) else {
            status = IpmStatus::Stalled;
            break;
        };

        let (feas, gap) = solver.measure(&st, &lin.rp, &lin.rd, &lin.rdl);
        if feas <= settings.tol_feas && gap <= settings.tol_gap {
            status = IpmStatus::Optimal;
            break;
        }

        let by = b.dot(&st.y);
        if by > 0.0 {
            let (aty, atyl) = p.adjoint(&st.y);
            let cert = ((aty + &st.s).norm_squared() + (atyl + &st.sl).norm_squared()).sqrt();
            if cert <= settings.tol_infeas * by {
                status = IpmStatus::PrimalInfeasible;
                break;
            }
        }
        let cx = p.inner_c(&st.x, &st.xl);
        if cx < 0.0 && p.apply(&st.x, &st.xl).norm() <= settings.tol_infeas * -cx {
            status = IpmStatus::DualInfeasible;
            break;
        }
        let merit = (feas / settings.tol_feas).max(gap / settings.tol_gap);
        let mu = st.mu(&p);
        if merit < 0.5 * best.0 || mu < 0.5 * best.1 {
            best = (best.0.min(merit), best.1.min(mu), it);
        } else if it - best.2 > PATIENCE {
            status = IpmStatus::Stalled;
            break;
        }
        if it == settings.max_iterations {
            break;
        }

        let aff = solver.direction(&st, &lin, 1.0, 0.0, None);
        let Some(a_aff) = Solver::max_step(&st, &aff) else {
            status = IpmStatus::Stalled;
            break;
        };
        let a_aff = a_aff.min(1.0);
        let sigma = (solver.mu_after(&st, &aff, a_aff) / mu)
            .clamp(0.0, 1.0)
            .powi(3);
        let d = solver.direction(&st, &lin, 1.0 - sigma, sigma * mu, Some(&aff));
        let Some(a_max) = Solver::max_step(&st, &d) else {
            status = IpmStatus::Stalled;
            break;
        };
        let a = (0.98 * a_max).min(1.0);
        if !a.is_finite() || a < 1e-12 {
            status = IpmStatus::Stalled;
            break;
        }
        small_steps = if a < 1e-6 { small_steps + 1 } else { 0 };
        if small_steps > 5 {
            status = IpmStatus::Stalled;
            break;
        }

        st.x += &d.dx * a;
        st.x = sym(std::mem::take(&mut st.x));
        st.xl += &d.dxl * a;
        st.y += &d.dy * a;
        st.s += &d.ds * a;
        st.s = sym(std::mem::take(&mut st.s));
        st.sl += &d.dsl * a;
        st.tau += d.dtau * a;
        st.kappa += d.dkappa * a;
        if !(st.tau.is_finite() && st.kappa.is_finite()) {
            status = IpmStatus::Stalled;
            break;
        }
    }

    if matches!(status, IpmStatus::Stalled | IpmStatus::IterationLimit)
        && st.tau.is_finite()
        && st.tau > 0.0
    {
        let (rp, rd, rdl) = solver.residuals(&st);
        let (feas, gap) = solver.measure(&st, &rp, &rd, &rdl);
        if feas <= settings.accept_feas && gap <= settings.accept_gap {
            status = IpmStatus::Optimal;
        }
    }

    let tau = st.tau;
    let primal_objective = p.inner_c(&st.x, &st.xl) / tau;
    let dual_objective = b.dot(&st.y) / tau;
    IpmOutcome {
        status,
        x_mat: st.x / tau,
        x_lin: st.xl / tau,
        primal_objective,
        dual_objective,
        relative_gap: (primal_objective - dual_objective).abs() / (1.0 + primal_objective.abs()),
        iterations,
    }
}
