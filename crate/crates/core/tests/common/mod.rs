//! Oracles shared by the integration tests. Nothing here calls the solver
//! under test.

#![allow(dead_code)]

use irs_broadcast::channel::ChannelRealization;
use irs_broadcast::numerics::{SdpObjective, SdpProblem, Sense};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;

/// `‖h(Φ)‖²` for `h(Φ)ᴴ = h_rᴴ Φ H + h_bᴴ`, evaluated entry by entry.
pub fn effective_gain(ch: &ChannelRealization, user: usize, theta: &[f64]) -> f64 {
    let h = &ch.h_bs_irs;
    let hr = &ch.h_irs_mu[user];
    let hb = &ch.h_bs_mu[user];
    let mut total = 0.0;
    for m in 0..ch.m() {
        let mut v = hb[m].conj();
        for n in 0..ch.n() {
            v += hr[n].conj() * C64::from_polar(1.0, theta[n]) * h[(n, m)];
        }
        total += v.norm_sqr();
    }
    total
}

/// Minimum single-user MRT power over a uniform `points × points` grid of
/// two phase shifts.
pub fn grid_min_power(ch: &ChannelRealization, target: f64, points: usize) -> f64 {
    assert_eq!(ch.n(), 2);
    assert_eq!(ch.k(), 1);
    let step = 2.0 * std::f64::consts::PI / points as f64;
    let mut best = 0.0f64;
    for i in 0..points {
        for j in 0..points {
            best = best.max(effective_gain(ch, 0, &[i as f64 * step, j as f64 * step]));
        }
    }
    target / best
}

pub fn complex_gaussian<R: Rng>(rng: &mut R, dim: usize) -> DVector<C64> {
    DVector::from_fn(dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / 2f64.sqrt()
    })
}

// ---------------------------------------------------------------------------
// Burer–Monteiro oracle: X = R Rᴴ with R of n×p, inequality rows handled
// by an augmented Lagrangian, unit-diagonal rows by normalizing the rows of
// R. Inner problems are solved with L-BFGS.

enum Form {
    /// `min tr X  s.t. tr(A_i X) ≥ b_i`.
    Trace,
    /// `max Σ (tr(A_i X) − b_i)  s.t. tr(A_i X) ≥ b_i, diag X = 1`.
    Residual,
}

pub struct BmOracle {
    form: Form,
    n: usize,
    a: Vec<DMatrix<C64>>,
    b: Vec<f64>,
}

pub struct BmResult {
    pub objective: f64,
    pub violation: f64,
}

impl BmOracle {
    /// Accepts the two shapes used by the optimizer: trace minimization with
    /// `≥` rows, and residual maximization whose equality rows pin every
    /// diagonal entry to one.
    pub fn from_problem(p: &SdpProblem) -> Self {
        let n = p.psd_dim;
        let mut a = Vec::new();
        let mut b = Vec::new();
        let form = match p.objective {
            SdpObjective::MinimizeTrace => {
                assert_eq!(p.residual_count, 0);
                for c in &p.constraints {
                    assert_eq!(c.sense, Sense::GreaterEqual, "oracle handles ≥ rows only");
                    a.push(c.coefficient.as_matrix().clone());
                    b.push(c.bound);
                }
                Form::Trace
            }
            SdpObjective::MaximizeResidualSum => {
                let mut diag_seen = vec![false; n];
                for (i, c) in p.constraints.iter().enumerate() {
                    if i < p.residual_count {
                        assert_eq!(c.sense, Sense::GreaterEqual);
                        a.push(c.coefficient.as_matrix().clone());
                        b.push(c.bound);
                        continue;
                    }
                    assert_eq!(c.sense, Sense::Equal);
                    assert!((c.bound - 1.0).abs() < 1e-15);
                    let m = c.coefficient.as_matrix();
                    let hits: Vec<usize> = (0..n).filter(|&k| m[(k, k)].re != 0.0).collect();
                    assert_eq!(
                        hits.len(),
                        1,
                        "equality rows must select one diagonal entry"
                    );
                    assert!((m[(hits[0], hits[0])].re - 1.0).abs() < 1e-15);
                    diag_seen[hits[0]] = true;
                }
                assert!(
                    diag_seen.iter().all(|&s| s),
                    "every diagonal entry must be pinned"
                );
                Form::Residual
            }
        };
        BmOracle { form, n, a, b }
    }

    /// Best objective over `starts` random initial factors of rank `p`.
    pub fn solve<R: Rng>(&self, rank: usize, starts: usize, rng: &mut R) -> BmResult {
        let mut best: Option<BmResult> = None;
        for _ in 0..starts {
            let z0: Vec<f64> = (0..2 * self.n * rank)
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let r = self.solve_from(rank, z0);
            let better = match (&best, &self.form) {
                (None, _) => true,
                (Some(b), Form::Trace) => r.objective < b.objective,
                (Some(b), Form::Residual) => r.objective > b.objective,
            };
            if better && r.violation < 1e-6 {
                best = Some(r);
            }
        }
        best.expect("no start reached a feasible point")
    }

    fn unpack(&self, z: &[f64], rank: usize) -> DMatrix<C64> {
        let n = self.n;
        DMatrix::from_fn(n, rank, |i, j| {
            C64::new(z[i * rank + j], z[n * rank + i * rank + j])
        })
    }

    fn pack(&self, g: &DMatrix<C64>) -> Vec<f64> {
        let (n, rank) = g.shape();
        let mut z = vec![0.0; 2 * n * rank];
        for i in 0..n {
            for j in 0..rank {
                z[i * rank + j] = g[(i, j)].re;
                z[n * rank + i * rank + j] = g[(i, j)].im;
            }
        }
        z
    }

    /// Normalized factor for the residual form (unit rows), raw otherwise.
    fn factor(&self, raw: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>) {
        match self.form {
            Form::Trace => (raw.clone(), vec![]),
            Form::Residual => {
                let mut r = raw.clone();
                let norms: Vec<f64> = (0..self.n).map(|i| raw.row(i).norm().max(1e-300)).collect();
                for i in 0..self.n {
                    let s = norms[i];
                    r.row_mut(i).iter_mut().for_each(|v| *v /= s);
                }
                (r, norms)
            }
        }
    }

    /// Maps a gradient with respect to the normalized factor back to the raw
    /// parameters.
    fn pull_back(&self, g: DMatrix<C64>, r: &DMatrix<C64>, norms: &[f64]) -> DMatrix<C64> {
        match self.form {
            Form::Trace => g,
            Form::Residual => {
                let mut out = g.clone();
                for i in 0..self.n {
                    let radial: f64 = g
                        .row(i)
                        .iter()
                        .zip(r.row(i).iter())
                        .map(|(a, b)| (a.conj() * b).re)
                        .sum();
                    for j in 0..r.ncols() {
                        out[(i, j)] = (g[(i, j)] - r[(i, j)] * radial) / norms[i];
                    }
                }
                out
            }
        }
    }

    fn constraint_values(&self, r: &DMatrix<C64>) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(a, b)| (r.adjoint() * a * r).trace().re - b)
            .collect()
    }

    fn objective(&self, r: &DMatrix<C64>, g: &[f64]) -> f64 {
        match self.form {
            Form::Trace => r.norm_squared(),
            Form::Residual => g.iter().sum(),
        }
    }

    /// Minimized quantity: the trace, or minus the residual sum.
    fn loss(&self, r: &DMatrix<C64>, g: &[f64]) -> (f64, DMatrix<C64>) {
        match self.form {
            Form::Trace => (r.norm_squared(), r * C64::new(2.0, 0.0)),
            Form::Residual => {
                let mut grad = DMatrix::zeros(r.nrows(), r.ncols());
                for a in &self.a {
                    grad -= a * r * C64::new(2.0, 0.0);
                }
                (-g.iter().sum::<f64>(), grad)
            }
        }
    }

    fn solve_from(&self, rank: usize, mut z: Vec<f64>) -> BmResult {
        let m = self.a.len();
        // With zero multipliers and slack rows the trace form shrinks straight
        // onto R = 0, where every gradient vanishes. Start on the boundary of
        // the feasible cone with unit multipliers instead.
        let mut lambda = vec![0.0; m];
        if matches!(self.form, Form::Trace) {
            let (r, _) = self.factor(&self.unpack(&z, rank));
            let worst = (0..m)
                .map(|i| (r.adjoint() * &self.a[i] * &r).trace().re / self.b[i])
                .fold(f64::INFINITY, f64::min);
            let s = 1.0 / worst.max(1e-300).sqrt();
            z.iter_mut().for_each(|v| *v *= s);
            lambda.iter_mut().for_each(|l| *l = 1.0);
        }
        let mut rho = 10.0;
        let mut last_violation = f64::INFINITY;
        for _outer in 0..200 {
            let lagrangian = |z: &[f64]| -> (f64, Vec<f64>) {
                let raw = self.unpack(z, rank);
                let (r, norms) = self.factor(&raw);
                let g = self.constraint_values(&r);
                let (mut f, mut grad) = self.loss(&r, &g);
                for i in 0..m {
                    let t = (lambda[i] - rho * g[i]).max(0.0);
                    f += (t * t - lambda[i] * lambda[i]) / (2.0 * rho);
                    if t > 0.0 {
                        grad -= &self.a[i] * &r * C64::new(2.0 * t, 0.0);
                    }
                }
                (f, self.pack(&self.pull_back(grad, &r, &norms)))
            };
            z = lbfgs(lagrangian, z, 1e-9, 4000);

            let (r, _) = self.factor(&self.unpack(&z, rank));
            let g = self.constraint_values(&r);
            let violation = g.iter().fold(0.0f64, |v, &x| v.max(-x));
            for i in 0..m {
                lambda[i] = (lambda[i] - rho * g[i]).max(0.0);
            }
            // Complementarity of the multiplier estimate.
            let slack = g
                .iter()
                .zip(&lambda)
                .fold(0.0f64, |v, (&gi, &l)| v.max((gi.min(l)).abs()));
            if violation < 1e-10 && slack < 1e-9 {
                break;
            }
            if violation > 0.25 * last_violation {
                rho = (rho * 5.0).min(1e4);
            }
            last_violation = violation;
        }
        let (r, _) = self.factor(&self.unpack(&z, rank));
        let g = self.constraint_values(&r);
        BmResult {
            objective: self.objective(&r, &g),
            violation: g.iter().fold(0.0f64, |v, &x| v.max(-x)),
        }
    }
}

/// Limited-memory BFGS with a backtracking Armijo search.
pub fn lbfgs<F: Fn(&[f64]) -> (f64, Vec<f64>)>(
    f: F,
    mut x: Vec<f64>,
    gtol: f64,
    max_iter: usize,
) -> Vec<f64> {
    const MEMORY: usize = 12;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let (mut fx, mut g) = f(&x);
    let mut hist: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    for _it in 0..max_iter {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm <= gtol * fx.abs().max(1.0) {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = hist.last() {
            let scale = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= scale);
        } else {
            q.iter_mut().for_each(|v| *v /= gnorm.max(1.0));
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            hist.clear();
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + t * di).collect();
            let (fn_, gn) = f(&xn);
            if fn_ <= fx + 1e-4 * t * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if hist.len() == MEMORY {
                hist.remove(0);
            }
            hist.push((s, y, 1.0 / sy));
        }
        let converged = (fx - fn_).abs() <= 1e-16 * fx.abs().max(1.0);
        x = xn;
        fx = fn_;
        g = gn;
        if converged && dot(&g, &g).sqrt() <= 1e3 * gtol * fx.abs().max(1.0) {
            break;
        }
    }
    x
}
