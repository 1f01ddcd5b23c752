//! Interior-point solver for the lifted unit-diagonal programs.
//!
//! The problem family is
//!
//! ```text
//!   maximize   tr(C X)                      (objective mode)
//!   maximize   s                            (slack mode)
//!   subject to tr(A_j X) >= b_j  (+ s in slack mode)
//!              diag(X) = 1,  X Hermitian PSD
//! ```
//!
//! Internally it is written in the standard primal form
//! `min <C, X> + c_l' w  s.t.  <A_i, X> + g_i' w = b_i,  X >= 0,  w >= 0`
//! where the nonnegative block `w` carries inequality slacks (and the shifted
//! free slack `s` in slack mode). The method is an infeasible primal-dual
//! path-following scheme with the HKM search direction and a Mehrotra
//! predictor-corrector step. All arithmetic is complex Hermitian.
//!
//! Every constraint row and the objective are normalized to unit Frobenius
//! norm before solving. Slacks, gaps and violations are reported in those
//! normalized units; the sign of the slack is unaffected by the scaling.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{frobenius_sq, hermitian_defect, hermitian_part, max_eigenvalue, min_eigenvalue, trace_product, CMat, Cplx};
use crate::scenario::SolverTolerances;

/// `tr(A X) >= b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub a: CMat,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpMode {
    MaximizeObjective,
    /// Maximize the common slack `s` of all inequalities (feasibility form).
    MaximizeSlack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    pub n: usize,
    pub objective: CMat,
    pub inequalities: Vec<Inequality>,
    pub unit_diagonal: bool,
    pub mode: SdpMode,
}

/// Relative asymmetry above which a matrix is rejected instead of symmetrized.
const HERMITIAN_REJECT: f64 = 1e-8;

fn ingest(m: &CMat, n: usize, what: &str) -> Result<CMat> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Dimension(format!("{what} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Solver(format!("{what} has non-finite entries")));
    }
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let defect = hermitian_defect(m);
    if defect > HERMITIAN_REJECT * scale {
        return Err(Error::NotHermitian(defect / scale));
    }
    Ok(hermitian_part(m))
}

impl SdpProblem {
    /// `max tr(C X)` over unit-diagonal PSD matrices.
    pub fn maximize(objective: CMat) -> Result<Self> {
        let n = objective.nrows();
        Self::new(n, objective, Vec::new(), true, SdpMode::MaximizeObjective)
    }

    /// `max s` subject to `tr(A_j X) - b_j >= s`, unit diagonal.
    pub fn max_slack(n: usize, inequalities: Vec<Inequality>) -> Result<Self> {
        Self::new(n, CMat::zeros(n, n), inequalities, true, SdpMode::MaximizeSlack)
    }

    pub fn new(
        n: usize,
        objective: CMat,
        inequalities: Vec<Inequality>,
        unit_diagonal: bool,
        mode: SdpMode,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("SDP dimension must be >= 1".into()));
        }
        if mode == SdpMode::MaximizeSlack && inequalities.is_empty() {
            return Err(Error::Dimension("slack mode needs at least one inequality".into()));
        }
        if !unit_diagonal && mode == SdpMode::MaximizeSlack {
            return Err(Error::Dimension("slack mode requires the unit-diagonal constraint".into()));
        }
        let objective = ingest(&objective, n, "objective")?;
        let inequalities = inequalities
            .into_iter()
            .map(|q| {
                if !q.b.is_finite() {
                    return Err(Error::Solver("non-finite inequality bound".into()));
                }
                Ok(Inequality {
                    a: ingest(&q.a, n, "constraint matrix")?,
                    b: q.b,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n,
            objective,
            inequalities,
            unit_diagonal,
            mode,
        })
    }

    /// Equivalent real-symmetric program of size `2n` via
    /// `X -> [[Re X, -Im X], [Im X, Re X]]`. Objective and slack values agree
    /// with the complex program after accounting for the factor 1/2 in the traces.
    pub fn real_embedding(&self) -> Result<Self> {
        let embed = |m: &CMat| {
            let n = m.nrows();
            CMat::from_fn(2 * n, 2 * n, |i, j| {
                let (bi, ri) = (i / n, i % n);
                let (bj, rj) = (j / n, j % n);
                let z = m[(ri, rj)];
                let v = match (bi, bj) {
                    (0, 0) | (1, 1) => z.re,
                    (0, 1) => -z.im,
                    _ => z.im,
                };
                Cplx::new(v * 0.5, 0.0)
            })
        };
        let inequalities = self
            .inequalities
            .iter()
            .map(|q| Inequality { a: embed(&q.a), b: q.b })
            .collect();
        Self::new(2 * self.n, embed(&self.objective), inequalities, self.unit_diagonal, self.mode)
    }
}

/// Solver options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub psd_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverTolerances::default().into()
    }
}

impl From<SolverTolerances> for SolverOptions {
    fn from(t: SolverTolerances) -> Self {
        Self {
            gap_tol: t.gap,
            feas_tol: t.eq,
            psd_tol: t.psd,
            max_iter: t.max_iter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    /// Slack mode only: the optimal slack is below `-tol`.
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    /// Primal matrix, rescaled to an exact unit diagonal when that constraint is present.
    pub x: CMat,
    /// `tr(C X)` in the caller's units (objective mode) or the normalized slack (slack mode).
    pub objective: f64,
    /// `|pobj - dobj| / (1 + |pobj|)` in normalized units.
    pub gap: f64,
    /// Largest normalized equality residual before the diagonal rescaling.
    pub max_violation: f64,
    /// Smallest eigenvalue of X relative to tr(X).
    pub min_eig_rel: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

impl SdpSolution {
    /// Independent post-hoc checks of an optimal-status solution.
    pub fn certify(&self, opts: &SolverOptions) -> bool {
        let diag_ok = (0..self.x.nrows()).all(|i| (self.x[(i, i)].re - 1.0).abs() <= opts.feas_tol);
        self.status == SdpStatus::Optimal
            && self.gap <= opts.gap_tol * (1.0 + self.objective.abs())
            && self.max_violation <= opts.feas_tol
            && self.min_eig_rel >= -opts.psd_tol
            && diag_ok
    }
}

/// Outcome of a feasibility check at a fixed threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Certified lower bound on the optimal normalized slack (from `x`).
    pub slack_lower: f64,
    /// Certified upper bound on the optimal normalized slack (from the dual).
    pub slack_upper: f64,
    /// Unit-diagonal PSD matrix achieving `slack_lower`.
    pub x: CMat,
    pub iterations: usize,
    /// True when the decision was made from certificates before convergence.
    pub early_exit: bool,
    /// Certificate outcome when the solve converged with optimal status.
    pub certified: Option<bool>,
    /// Relative duality gap of the final iterate.
    pub gap: f64,
}

/// Solves to optimality (or to the iteration cap).
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    let mut ipm = Ipm::new(problem, opts)?;
    let out = ipm.run(false)?;
    Ok(out.solution)
}

/// Decides whether the optimal slack of a slack-mode problem is at least `-tol`.
///
/// With `early_exit` the interior-point iterations stop as soon as a primal
/// point with slack `>= -tol` or a dual bound `< -tol` is found.
pub fn check_feasibility(problem: &SdpProblem, opts: &SolverOptions, early_exit: bool) -> Result<FeasibilityReport> {
    if problem.mode != SdpMode::MaximizeSlack {
        return Err(Error::Solver("feasibility checks need a slack-mode problem".into()));
    }
    let mut ipm = Ipm::new(problem, opts)?;
    let out = ipm.run(early_exit)?;
    let tol = opts.gap_tol;
    let certified = (!out.early_exit && out.solution.status == SdpStatus::Optimal).then(|| out.solution.certify(opts));
    let feasible = if out.early_exit {
        out.slack_lower >= -tol
    } else {
        match out.solution.status {
            SdpStatus::Optimal => true,
            SdpStatus::Infeasible => false,
            SdpStatus::MaxIter => {
                if out.slack_lower >= -tol {
                    true
                } else if out.slack_upper < -tol {
                    false
                } else {
                    return Err(Error::Solver(format!(
                        "feasibility undecided after {} iterations (slack in [{:e}, {:e}])",
                        out.solution.iterations, out.slack_lower, out.slack_upper
                    )));
                }
            }
        }
    };
    Ok(FeasibilityReport {
        feasible,
        slack_lower: out.slack_lower,
        slack_upper: out.slack_upper,
        x: out.solution.x,
        iterations: out.solution.iterations,
        early_exit: out.early_exit,
        certified,
        gap: out.solution.gap,
    })
}

/// Largest `alpha` keeping `M + alpha D` PSD, given the Cholesky factor of `M`.
fn max_step(chol_l: &CMat, d: &CMat) -> f64 {
    let Some(t1) = chol_l.solve_lower_triangular(d) else {
        return 0.0;
    };
    let Some(t2) = chol_l.solve_lower_triangular(&t1.adjoint()) else {
        return 0.0;
    };
    let lmin = min_eigenvalue(&hermitian_part(&t2.adjoint()));
    if lmin < 0.0 {
        -1.0 / lmin
    } else {
        f64::INFINITY
    }
}

fn max_step_lp(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

/// Constraint row: `<A, X> + g' w = b`.
#[derive(Debug, Clone)]
enum RowMatrix {
    Diag(usize),
    Dense(usize),
}

struct RunOutput {
    solution: SdpSolution,
    slack_lower: f64,
    slack_upper: f64,
    early_exit: bool,
}

struct Ipm {
    n: usize,
    mode: SdpMode,
    opts: SolverOptions,
    /// Minimization cost (normalized).
    c: CMat,
    c_scale: f64,
    mats: Vec<CMat>,
    rows: Vec<RowMatrix>,
    b: DVector<f64>,
    /// m x p coefficients of the nonnegative block.
    g: DMatrix<f64>,
    c_lp: DVector<f64>,
    /// Normalized inequality bounds, for slack certificates.
    ineq_b: Vec<f64>,
    shift: f64,
}

impl Ipm {
    fn new(problem: &SdpProblem, opts: &SolverOptions) -> Result<Self> {
        let n = problem.n;
        let p = problem.inequalities.len();
        let mut mats = Vec::with_capacity(p);
        let mut ineq_b = Vec::with_capacity(p);
        for q in &problem.inequalities {
            let norm = frobenius_sq(&q.a).sqrt();
            let scale = if norm > 0.0 { norm } else { q.b.abs().max(1.0) };
            mats.push(q.a.unscale(scale));
            ineq_b.push(q.b / scale);
        }

        let mut rows = Vec::new();
        if problem.unit_diagonal {
            rows.extend((0..n).map(RowMatrix::Diag));
        }
        let diag_rows = rows.len();
        rows.extend((0..p).map(RowMatrix::Dense));
        let m = rows.len();
        if m == 0 {
            return Err(Error::Solver("problem has no constraints".into()));
        }

        let (c, c_scale, lp_dim, shift) = match problem.mode {
            SdpMode::MaximizeObjective => {
                let norm = frobenius_sq(&problem.objective).sqrt();
                let scale = if norm > 0.0 { norm } else { 1.0 };
                (-problem.objective.unscale(scale), scale, p, 0.0)
            }
            SdpMode::MaximizeSlack => {
                // Slack at X = I, which is primal feasible; the shift keeps every w_j >= 1 with u = 1.
                let worst = (0..p)
                    .map(|j| trace_of(&mats[j]) - ineq_b[j])
                    .fold(f64::INFINITY, f64::min);
                (CMat::zeros(n, n), 1.0, p + 1, (2.0 - worst).max(0.0))
            }
        };

        let mut b = DVector::zeros(m);
        let mut g = DMatrix::zeros(m, lp_dim);
        let mut c_lp = DVector::zeros(lp_dim);
        for i in 0..diag_rows {
            b[i] = 1.0;
        }
        for j in 0..p {
            let r = diag_rows + j;
            g[(r, j)] = -1.0;
            match problem.mode {
                SdpMode::MaximizeObjective => b[r] = ineq_b[j],
                SdpMode::MaximizeSlack => {
                    g[(r, p)] = -1.0;
                    b[r] = ineq_b[j] - shift;
                }
            }
        }
        if problem.mode == SdpMode::MaximizeSlack {
            c_lp[p] = -1.0;
        }
        Ok(Self {
            n,
            mode: problem.mode,
            opts: *opts,
            c,
            c_scale,
            mats,
            rows,
            b,
            g,
            c_lp,
            ineq_b,
            shift,
        })
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    /// `A(Y)_i = Re tr(A_i Y)`.
    fn op_a(&self, y: &CMat) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows.iter().map(|r| match r {
                RowMatrix::Diag(i) => y[(*i, *i)].re,
                RowMatrix::Dense(j) => trace_product(&self.mats[*j], y),
            }),
        )
    }

    /// `A^T(y) = sum_i y_i A_i`.
    fn op_at(&self, y: &DVector<f64>) -> CMat {
        let mut out = CMat::zeros(self.n, self.n);
        for (k, r) in self.rows.iter().enumerate() {
            match r {
                RowMatrix::Diag(i) => out[(*i, *i)] += Cplx::new(y[k], 0.0),
                RowMatrix::Dense(j) => out += self.mats[*j].scale(y[k]),
            }
        }
        out
    }

    /// Schur complement `M_ik = Re tr(A_i X A_k Z^-1) + (G diag(w/z) G')_ik`.
    fn schur(&self, x: &CMat, zinv: &CMat, ratio: &DVector<f64>) -> DMatrix<f64> {
        let m = self.m();
        let mut s = DMatrix::zeros(m, m);
        // X A_j and X A_j Z^-1 for the dense rows.
        let xa: Vec<CMat> = self.mats.iter().map(|a| x * a).collect();
        let xaz: Vec<CMat> = xa.iter().map(|p| p * zinv).collect();
        for (r1, row1) in self.rows.iter().enumerate() {
            for (r2, row2) in self.rows.iter().enumerate().skip(r1) {
                let v = match (row1, row2) {
                    (RowMatrix::Diag(i), RowMatrix::Diag(k)) => (x[(*i, *k)] * zinv[(*k, *i)]).re,
                    (RowMatrix::Diag(i), RowMatrix::Dense(j)) | (RowMatrix::Dense(j), RowMatrix::Diag(i)) => {
                        xaz[*j][(*i, *i)].re
                    }
                    (RowMatrix::Dense(j), RowMatrix::Dense(l)) => trace_product(&self.mats[*j], &xaz[*l]),
                };
                s[(r1, r2)] = v;
                s[(r2, r1)] = v;
            }
        }
        if self.g.ncols() > 0 {
            let gd = DMatrix::from_fn(m, self.g.ncols(), |i, j| self.g[(i, j)] * ratio[j]);
            s += &gd * self.g.transpose();
        }
        s
    }

    fn run(&mut self, early_exit: bool) -> Result<RunOutput> {
        let n = self.n;
        let m = self.m();
        let p_lp = self.g.ncols();
        let nu = (n + p_lp) as f64;
        let eye = CMat::identity(n, n);

        // Initial primal point: X = I, w from the inequality rows.
        let mut x = eye.clone();
        let mut w = DVector::from_element(p_lp, 1.0);
        let ax0 = self.op_a(&x);
        let p_ineq = self.mats.len();
        let diag_rows = m - p_ineq;
        for j in 0..p_ineq {
            let r = diag_rows + j;
            let lhs = ax0[r] - self.b[r];
            w[j] = match self.mode {
                SdpMode::MaximizeObjective => lhs.max(1.0),
                SdpMode::MaximizeSlack => (lhs - 1.0).max(1.0),
            };
        }
        // Initial dual point: strictly feasible in the nonnegative block, Z >= I.
        let mut y = DVector::zeros(m);
        for j in 0..p_ineq {
            y[diag_rows + j] = match self.mode {
                SdpMode::MaximizeObjective => 1.0,
                SdpMode::MaximizeSlack => 2.0 / p_ineq as f64,
            };
        }
        let base = &self.c - self.op_at(&y);
        let rho = frobenius_sq(&base).sqrt() + 1.0;
        if diag_rows > 0 {
            for i in 0..diag_rows {
                y[i] = -rho;
            }
        }
        let mut z_mat = &self.c - self.op_at(&y);
        if diag_rows == 0 {
            z_mat += eye.scale(rho);
        }
        let mut z = &self.c_lp - self.g.transpose() * &y;
        for v in z.iter_mut() {
            if *v <= 0.0 {
                *v = 1.0;
            }
        }

        let b_norm = 1.0 + self.b.norm();
        let c_norm = 1.0 + frobenius_sq(&self.c).sqrt() + self.c_lp.norm();
        let mut status = SdpStatus::MaxIter;
        let mut iterations = 0;
        let mut slack_lower = f64::NEG_INFINITY;
        let mut slack_upper = f64::INFINITY;
        let mut decided_early = false;
        let mut stalls = 0;
        let mut last_gap;
        let mut last_pinf;

        loop {
            let pobj = trace_product(&self.c, &x) + self.c_lp.dot(&w);
            let dobj = self.b.dot(&y);
            let rp = &self.b - self.op_a(&x) - &self.g * &w;
            let rd = hermitian_part(&(&self.c - self.op_at(&y) - &z_mat));
            let rdl = &self.c_lp - self.g.transpose() * &y - &z;
            let pinf = rp.norm() / b_norm;
            let dinf = (frobenius_sq(&rd).sqrt() + rdl.norm()) / c_norm;
            let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs());
            last_gap = rel_gap;
            last_pinf = pinf;

            if self.mode == SdpMode::MaximizeSlack && (early_exit || iterations + 1 >= self.opts.max_iter || rel_gap <= self.opts.gap_tol) {
                slack_lower = slack_lower.max(self.slack_of(&x));
                if early_exit {
                    slack_upper = slack_upper.min(self.slack_dual_bound(&y));
                    let tol = self.opts.gap_tol;
                    if slack_lower >= -tol || slack_upper < -tol {
                        decided_early = true;
                        break;
                    }
                }
            }

            if rel_gap <= self.opts.gap_tol && pinf <= self.opts.feas_tol && dinf <= self.opts.feas_tol {
                status = SdpStatus::Optimal;
                break;
            }
            if iterations >= self.opts.max_iter {
                break;
            }
            iterations += 1;

            let Some(z_chol) = Cholesky::new(z_mat.clone()) else {
                return Err(Error::Solver("dual matrix lost positive definiteness".into()));
            };
            let Some(x_chol) = Cholesky::new(x.clone()) else {
                return Err(Error::Solver("primal matrix lost positive definiteness".into()));
            };
            let zinv = hermitian_part(&z_chol.inverse());
            let ratio = w.component_div(&z);
            let mut schur = self.schur(&x, &zinv, &ratio);
            let mu = (trace_product(&x, &z_mat) + w.dot(&z)) / nu;
            let s_chol = match Cholesky::new(schur.clone()) {
                Some(c) => c,
                None => {
                    let bump = 1e-12 * (1.0 + schur.diagonal().amax());
                    for i in 0..m {
                        schur[(i, i)] += bump;
                    }
                    Cholesky::new(schur).ok_or_else(|| Error::Solver("Schur complement is singular".into()))?
                }
            };
            let x_rd_zinv = &x * &rd * &zinv;
            let a_x_rd_zinv = self.op_a(&x_rd_zinv);

            let direction = |target: f64, corr: Option<(&CMat, &DVector<f64>)>| {
                // R_c = target Z^-1 - X - corr_X;  rc_l = (target - w z - corr_w) / z.
                let mut r_c = zinv.scale(target) - &x;
                if let Some((cx, _)) = corr {
                    r_c -= cx;
                }
                let mut rc_l = DVector::from_fn(p_lp, |j, _| (target - w[j] * z[j]) / z[j]);
                if let Some((_, cw)) = corr {
                    for j in 0..p_lp {
                        rc_l[j] -= cw[j] / z[j];
                    }
                }
                let rhs = &rp - self.op_a(&r_c) + &a_x_rd_zinv - &self.g * &rc_l + &self.g * ratio.component_mul(&rdl);
                let dy = s_chol.solve(&rhs);
                let dz_mat = &rd - self.op_at(&dy);
                let dz = &rdl - self.g.transpose() * &dy;
                let dx = hermitian_part(&(r_c - &x * &dz_mat * &zinv));
                let dw = rc_l - ratio.component_mul(&dz);
                (dx, dw, dy, dz_mat, dz)
            };
            let step = |dx: &CMat, dw: &DVector<f64>, dz_mat: &CMat, dz: &DVector<f64>| {
                let ap = max_step(x_chol.l_dirty(), dx).min(max_step_lp(w.as_slice(), dw.as_slice()));
                let ad = max_step(z_chol.l_dirty(), dz_mat).min(max_step_lp(z.as_slice(), dz.as_slice()));
                (ap, ad)
            };

            // Predictor.
            let (dx_a, dw_a, _, dz_mat_a, dz_a) = direction(0.0, None);
            let (ap_a, ad_a) = step(&dx_a, &dw_a, &dz_mat_a, &dz_a);
            let ap_a = ap_a.min(1.0);
            let ad_a = ad_a.min(1.0);
            let x_a = &x + dx_a.scale(ap_a);
            let z_a = &z_mat + dz_mat_a.scale(ad_a);
            let mu_aff = (trace_product(&x_a, &z_a) + (&w + dw_a.scale(ap_a)).dot(&(&z + dz_a.scale(ad_a)))) / nu;
            let sigma = (mu_aff / mu).max(0.0).powi(3).min(1.0);

            // Corrector.
            let corr_x = hermitian_part(&(&dx_a * &dz_mat_a * &zinv));
            let corr_w = dw_a.component_mul(&dz_a);
            let (dx, dw, dy, dz_mat, dz) = direction(sigma * mu, Some((&corr_x, &corr_w)));
            let (ap, ad) = step(&dx, &dw, &dz_mat, &dz);
            let tau = 0.98;
            let ap = (tau * ap).min(1.0);
            let ad = (tau * ad).min(1.0);

            x = hermitian_part(&(&x + dx.scale(ap)));
            w += dw.scale(ap);
            y += dy.scale(ad);
            z_mat = hermitian_part(&(&z_mat + dz_mat.scale(ad)));
            z += dz.scale(ad);

            if ap < 1e-10 && ad < 1e-10 {
                stalls += 1;
                if stalls >= 3 {
                    break;
                }
            } else {
                stalls = 0;
            }
        }

        let max_violation = last_pinf;
        let (x_out, objective) = self.finalize_primal(&x, &w);
        let mut status = status;
        if self.mode == SdpMode::MaximizeSlack && status == SdpStatus::Optimal {
            slack_lower = slack_lower.max(self.slack_of(&x));
            if objective < -self.opts.gap_tol {
                status = SdpStatus::Infeasible;
            }
        }
        let tr = x_out.trace().re;
        let min_eig_rel = min_eigenvalue(&x_out) / tr.max(f64::MIN_POSITIVE);
        Ok(RunOutput {
            solution: SdpSolution {
                x: x_out,
                objective,
                gap: last_gap,
                max_violation,
                min_eig_rel,
                iterations,
                status,
            },
            slack_lower,
            slack_upper,
            early_exit: decided_early,
        })
    }

    /// Unit-diagonal version of `x` and the objective in caller units.
    fn finalize_primal(&self, x: &CMat, w: &DVector<f64>) -> (CMat, f64) {
        let has_diag = self.rows.iter().any(|r| matches!(r, RowMatrix::Diag(_)));
        let x_out = if has_diag { unit_diagonal(x) } else { x.clone() };
        let objective = match self.mode {
            SdpMode::MaximizeObjective => -trace_product(&self.c, &x_out) * self.c_scale,
            SdpMode::MaximizeSlack => {
                let p = self.mats.len();
                w[p] - self.shift
            }
        };
        (x_out, objective)
    }

    /// Exact slack of the unit-diagonal rescaling of `x`.
    fn slack_of(&self, x: &CMat) -> f64 {
        let xd = unit_diagonal(x);
        self.mats
            .iter()
            .zip(&self.ineq_b)
            .map(|(a, b)| trace_product(a, &xd) - b)
            .fold(f64::INFINITY, f64::min)
    }

    /// Certified upper bound on the optimal slack from the current dual iterate.
    ///
    /// For multipliers `lambda` on the simplex and any `mu`,
    /// `s* <= sum(mu) + n * max(0, lambda_max(sum lambda_j A_j - Diag(mu))) - sum lambda_j b_j`.
    fn slack_dual_bound(&self, y: &DVector<f64>) -> f64 {
        let n = self.n;
        let p = self.mats.len();
        let diag_rows = self.m() - p;
        let weights: Vec<f64> = (0..p).map(|j| y[diag_rows + j].max(0.0)).collect();
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return f64::INFINITY;
        }
        let mut bmat = CMat::zeros(n, n);
        let mut rhs = 0.0;
        for j in 0..p {
            let lam = weights[j] / total;
            bmat += self.mats[j].scale(lam);
            rhs += lam * self.ineq_b[j];
        }
        // Z = -Diag(y_d) - sum y_j A_j, so mu = -y_d / total.
        let mut mu_sum = 0.0;
        for i in 0..n {
            let mu = -y[i] / total;
            mu_sum += mu;
            bmat[(i, i)] -= Cplx::new(mu, 0.0);
        }
        let excess = max_eigenvalue(&bmat).max(0.0);
        mu_sum + n as f64 * excess - rhs
    }
}

fn trace_of(a: &CMat) -> f64 {
    (0..a.nrows()).map(|i| a[(i, i)].re).sum()
}

/// `D^-1/2 X D^-1/2` with `D = diag(X)`; PSD is preserved.
pub fn unit_diagonal(x: &CMat) -> CMat {
    let n = x.nrows();
    let d: Vec<f64> = (0..n).map(|i| 1.0 / x[(i, i)].re.max(f64::MIN_POSITIVE).sqrt()).collect();
    let mut out = CMat::from_fn(n, n, |i, j| x[(i, j)] * (d[i] * d[j]));
    for i in 0..n {
        out[(i, i)] = Cplx::new(1.0, 0.0);
    }
    out
}

/// `max tr(C X)` over unit-diagonal PSD matrices, certified.
pub fn maximize_unit_diagonal(c: &CMat, opts: &SolverOptions) -> Result<SdpSolution> {
    solve(&SdpProblem::maximize(c.clone())?, opts)
}
