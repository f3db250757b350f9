//! Dense semidefinite programming in standard primal-dual form,
//!
//! ```text
//!   (P)  min ⟨C, X⟩   s.t. ⟨A_i, X⟩ = b_i,  X ⪰ 0
//!   (D)  max bᵀy      s.t. Σ_i y_i A_i + S = C,  S ⪰ 0
//! ```
//!
//! over block-diagonal symmetric matrices. The solver is a path-following
//! interior-point method with Nesterov-Todd scaling and a Mehrotra
//! predictor-corrector, factoring the dense Schur complement by Cholesky.
//! In the scaled basis both iterates equal the same diagonal matrix, which
//! keeps every centrality computation cheap and stable.
//!
//! Weak duality is the contract consumers rely on: whenever the dual
//! residual is small, `dual_value` is a safe lower bound on the primal
//! optimum even if the gap has not closed (`WeakDualBoundOnly`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{frob_dot, sym_eigenvalues, symmetrize};
use crate::{Error, Result};

/// Total variable dimension accepted by the dense kernels.
pub const DENSE_DIM_BUDGET: usize = 1024;

/// A constraint matrix, stored only on the blocks it touches.
#[derive(Debug, Clone)]
pub struct SparseConstraint {
    /// `(block index, symmetric matrix)` pairs, block indices strictly
    /// increasing.
    pub parts: Vec<(usize, DMatrix<f64>)>,
}

impl SparseConstraint {
    pub fn new(mut parts: Vec<(usize, DMatrix<f64>)>) -> Self {
        parts.sort_by_key(|(b, _)| *b);
        Self { parts }
    }

    fn dot_blocks(&self, blocks: &[DMatrix<f64>]) -> f64 {
        self.parts.iter().map(|(b, m)| frob_dot(m, &blocks[*b])).sum()
    }

    fn norm(&self) -> f64 {
        self.parts.iter().map(|(_, m)| m.iter().map(|x| x * x).sum::<f64>()).sum::<f64>().sqrt()
    }
}

/// Standard-form problem container.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub block_dims: Vec<usize>,
    /// Objective blocks `C` (one per block, zero blocks allowed).
    pub objective: Vec<DMatrix<f64>>,
    pub constraints: Vec<SparseConstraint>,
    pub rhs: Vec<f64>,
}

impl SdpProblem {
    pub fn new(block_dims: Vec<usize>) -> Self {
        let objective = block_dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        Self { block_dims, objective, constraints: Vec::new(), rhs: Vec::new() }
    }

    pub fn set_objective(&mut self, block: usize, c: DMatrix<f64>) {
        self.objective[block] = c;
    }

    pub fn add_constraint(&mut self, constraint: SparseConstraint, rhs: f64) {
        self.constraints.push(constraint);
        self.rhs.push(rhs);
    }

    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.total_dim() > DENSE_DIM_BUDGET {
            return Err(Error::DimensionBudget(format!(
                "total SDP dimension {} over budget {DENSE_DIM_BUDGET}",
                self.total_dim()
            )));
        }
        if self.constraints.is_empty() {
            return Err(Error::InvalidParameter("SDP needs at least one constraint".into()));
        }
        let check_sym = |m: &DMatrix<f64>, what: &str| -> Result<()> {
            if m.nrows() != m.ncols() {
                return Err(Error::DimensionMismatch(format!("{what} not square")));
            }
            let asym = (m - m.transpose()).amax();
            if asym > 1e-12 * (1.0 + m.amax()) {
                return Err(Error::InvalidParameter(format!("{what} not symmetric ({asym:.2e})")));
            }
            Ok(())
        };
        for (i, (c, &d)) in self.objective.iter().zip(&self.block_dims).enumerate() {
            if c.nrows() != d {
                return Err(Error::DimensionMismatch(format!("objective block {i} has wrong size")));
            }
            check_sym(c, "objective block")?;
        }
        for con in &self.constraints {
            for (b, m) in &con.parts {
                if *b >= self.block_dims.len() || m.nrows() != self.block_dims[*b] {
                    return Err(Error::DimensionMismatch("constraint block out of range".into()));
                }
                check_sym(m, "constraint block")?;
            }
        }
        Ok(())
    }

    /// Sparse text dump (`block row col value` per entry, upper triangle),
    /// for cross-checks against external solvers.
    pub fn dump_sparse(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let dims: Vec<String> = self.block_dims.iter().map(|d| d.to_string()).collect();
        writeln!(out, "# blocks {}", dims.join(" ")).unwrap();
        let mut emit = |tag: &str, blocks: &[(usize, &DMatrix<f64>)], out: &mut String| {
            writeln!(out, "{tag}").unwrap();
            for (b, m) in blocks {
                for r in 0..m.nrows() {
                    for c in r..m.ncols() {
                        if m[(r, c)] != 0.0 {
                            writeln!(out, "{b} {r} {c} {:.17e}", m[(r, c)]).unwrap();
                        }
                    }
                }
            }
        };
        let obj: Vec<(usize, &DMatrix<f64>)> = self.objective.iter().enumerate().collect();
        emit("# objective", &obj, &mut out);
        for (i, (con, rhs)) in self.constraints.iter().zip(&self.rhs).enumerate() {
            let parts: Vec<(usize, &DMatrix<f64>)> =
                con.parts.iter().map(|(b, m)| (*b, m)).collect();
            emit(&format!("# constraint {i} rhs {rhs:.17e}"), &parts, &mut out);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    /// Relative gap and feasibility residuals below tolerance.
    Optimal,
    /// Dual iterate is feasible to tolerance but the gap did not close;
    /// `dual_value` is still a valid bound.
    WeakDualBoundOnly,
    /// A certificate of primal infeasibility was found.
    Infeasible,
    NumericalFailure,
}

/// Solver output. `primal_blocks` is `X`, `dual_vector` is `y`,
/// `dual_slack_blocks` is `S`.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub primal_value: f64,
    pub dual_value: f64,
    pub primal_blocks: Vec<DMatrix<f64>>,
    pub dual_vector: Vec<f64>,
    pub dual_slack_blocks: Vec<DMatrix<f64>>,
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rel_gap: f64,
    pub message: String,
}

/// Dual feasibility threshold under which `dual_value` is reported as a
/// trustworthy bound.
pub const FEAS_TOL: f64 = 1e-9;

struct Scaling {
    /// `W = G Gᵀ`; scaled iterates are `X̂ = G⁻¹ X G⁻ᵀ = Ŝ = Gᵀ S G = diag(σ)`
    g: Vec<DMatrix<f64>>,
    g_inv: Vec<DMatrix<f64>>,
    sigma: Vec<DVector<f64>>,
}

fn nt_scaling(x: &[DMatrix<f64>], s: &[DMatrix<f64>]) -> Result<Scaling> {
    let mut g = Vec::with_capacity(x.len());
    let mut g_inv = Vec::with_capacity(x.len());
    let mut sigma = Vec::with_capacity(x.len());
    for (xb, sb) in x.iter().zip(s) {
        let lx = xb
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("primal iterate lost positive definiteness".into()))?;
        let ls = sb
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("dual iterate lost positive definiteness".into()))?;
        let lx = lx.l();
        let ls = ls.l();
        let m = ls.transpose() * &lx;
        let svd = m.svd(true, true);
        let u = svd.u.as_ref().ok_or_else(|| Error::Numerical("SVD failed".into()))?;
        let vt = svd.v_t.as_ref().ok_or_else(|| Error::Numerical("SVD failed".into()))?;
        let sv = &svd.singular_values;
        if sv.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
            return Err(Error::Numerical("degenerate NT scaling".into()));
        }
        let d = sv.len();
        let inv_sqrt = DMatrix::from_fn(d, d, |r, c| if r == c { 1.0 / sv[r].sqrt() } else { 0.0 });
        let gb = &lx * vt.transpose() * &inv_sqrt;
        let gb_inv = &inv_sqrt * u.transpose() * ls.transpose();
        g.push(gb);
        g_inv.push(gb_inv);
        sigma.push(sv.clone());
    }
    Ok(Scaling { g, g_inv, sigma })
}

/// Largest step `α` keeping `diag(σ) + α Δ ⪰ 0`, via the extreme eigenvalue
/// of the σ-whitened direction.
fn max_step(sigma: &[DVector<f64>], delta: &[DMatrix<f64>]) -> Result<f64> {
    let mut alpha: f64 = f64::INFINITY;
    for (sig, del) in sigma.iter().zip(delta) {
        let d = sig.len();
        let mut w = del.clone();
        for r in 0..d {
            for c in 0..d {
                w[(r, c)] /= (sig[r] * sig[c]).sqrt();
            }
        }
        symmetrize(&mut w);
        let min_eig = sym_eigenvalues(&w)?[0];
        if min_eig < 0.0 {
            alpha = alpha.min(-1.0 / min_eig);
        }
    }
    Ok(alpha)
}

/// Solves the problem to relative duality gap `tol`.
pub fn solve(problem: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    problem.validate()?;
    match solve_inner(problem, tol) {
        Ok(sol) => Ok(sol),
        Err(Error::Numerical(msg)) => Ok(SdpSolution {
            primal_value: f64::NAN,
            dual_value: f64::NAN,
            primal_blocks: Vec::new(),
            dual_vector: Vec::new(),
            dual_slack_blocks: Vec::new(),
            status: SdpStatus::NumericalFailure,
            iterations: 0,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            rel_gap: f64::NAN,
            message: msg,
        }),
        Err(e) => Err(e),
    }
}

fn solve_inner(problem: &SdpProblem, tol: f64) -> Result<SdpSolution> {
    let dims = &problem.block_dims;
    let m = problem.constraints.len();
    let nu: f64 = dims.iter().map(|&d| d as f64).sum();
    let max_iter = 120;

    let norm_b = problem.rhs.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let norm_c = problem.objective.iter().map(|c| c.amax()).fold(0.0f64, f64::max);
    let norm_a = problem.constraints.iter().map(|a| a.norm()).fold(1.0f64, f64::max);

    // identity-scaled strictly feasible-side start
    let tau_p = (nu.sqrt()).max(1.0).max(nu * norm_b / (1.0 + norm_a));
    let tau_d = (nu.sqrt()).max(1.0).max(norm_c).max(norm_a / nu.sqrt());
    let mut x: Vec<DMatrix<f64>> =
        dims.iter().map(|&d| DMatrix::identity(d, d) * tau_p).collect();
    let mut s: Vec<DMatrix<f64>> =
        dims.iter().map(|&d| DMatrix::identity(d, d) * tau_d).collect();
    let mut y = DVector::zeros(m);

    let b = DVector::from_column_slice(&problem.rhs);
    let mut stalls = 0usize;
    let mut iterations = 0usize;

    for iter in 0..max_iter {
        iterations = iter + 1;
        // residuals
        let pobj: f64 =
            problem.objective.iter().zip(&x).map(|(c, xb)| frob_dot(c, xb)).sum();
        let dobj: f64 = b.dot(&y);
        let mut r_p = b.clone();
        for (i, con) in problem.constraints.iter().enumerate() {
            r_p[i] -= con.dot_blocks(&x);
        }
        let mut r_d: Vec<DMatrix<f64>> = problem
            .objective
            .iter()
            .zip(&s)
            .map(|(c, sb)| c - sb)
            .collect();
        for (i, con) in problem.constraints.iter().enumerate() {
            for (bidx, mat) in &con.parts {
                r_d[*bidx] -= mat * y[i];
            }
        }
        let gap: f64 = x.iter().zip(&s).map(|(xb, sb)| frob_dot(xb, sb)).sum();
        let mu = gap / nu;
        let rel_gap = gap / (1.0 + pobj.abs() + dobj.abs());
        let p_res = r_p.norm() / (1.0 + norm_b);
        let d_res =
            r_d.iter().map(|m| m.iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt()
                / (1.0 + norm_c);

        if rel_gap <= tol && p_res <= FEAS_TOL.max(tol) && d_res <= FEAS_TOL.max(tol) {
            return Ok(finish(problem, x, y, s, SdpStatus::Optimal, iterations, p_res, d_res, rel_gap, String::new()));
        }

        // primal infeasibility certificate: A*(y) + S ≈ 0 with bᵀy > 0
        if dobj > 0.0 {
            let mut cert: Vec<DMatrix<f64>> = s.clone();
            for (i, con) in problem.constraints.iter().enumerate() {
                for (bidx, mat) in &con.parts {
                    cert[*bidx] += mat * y[i];
                }
            }
            let cert_norm =
                cert.iter().map(|m| m.iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt();
            if cert_norm <= 1e-7 * dobj {
                return Ok(finish(
                    problem, x, y, s,
                    SdpStatus::Infeasible,
                    iterations, p_res, d_res, rel_gap,
                    "dual ray certifies primal infeasibility".into(),
                ));
            }
        }
        // unbounded primal (dual infeasible) heuristic
        if pobj < 0.0 {
            let ax_norm: f64 = problem.constraints.iter().map(|c| c.dot_blocks(&x).powi(2)).sum::<f64>().sqrt();
            if ax_norm <= 1e-9 * pobj.abs() && pobj < -1e8 * (1.0 + norm_b) {
                return Ok(finish(
                    problem, x, y, s,
                    SdpStatus::NumericalFailure,
                    iterations, p_res, d_res, rel_gap,
                    "primal appears unbounded below".into(),
                ));
            }
        }

        let scaling = nt_scaling(&x, &s)?;

        // scaled constraints and Schur complement M_ij = Σ_β ⟨Â_i, Â_j⟩
        let scaled: Vec<Vec<(usize, DMatrix<f64>)>> = problem
            .constraints
            .iter()
            .map(|con| {
                con.parts
                    .iter()
                    .map(|(bidx, mat)| {
                        let g = &scaling.g[*bidx];
                        (*bidx, g.transpose() * mat * g)
                    })
                    .collect()
            })
            .collect();
        let mut schur = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                let (mut pi, mut pj) = (0, 0);
                let (a, c) = (&scaled[i], &scaled[j]);
                while pi < a.len() && pj < c.len() {
                    match a[pi].0.cmp(&c[pj].0) {
                        std::cmp::Ordering::Less => pi += 1,
                        std::cmp::Ordering::Greater => pj += 1,
                        std::cmp::Ordering::Equal => {
                            acc += frob_dot(&a[pi].1, &c[pj].1);
                            pi += 1;
                            pj += 1;
                        }
                    }
                }
                schur[(i, j)] = acc;
                schur[(j, i)] = acc;
            }
        }
        // tiny Tikhonov floor keeps Cholesky alive on nearly dependent rows
        let diag_scale = (0..m).map(|i| schur[(i, i)]).fold(0.0f64, f64::max).max(1e-300);
        let mut chol = None;
        let mut reg = 0.0;
        for attempt in 0..4 {
            let mut trial = schur.clone();
            if attempt > 0 {
                reg = diag_scale * 1e-14 * 10f64.powi(attempt);
                for i in 0..m {
                    trial[(i, i)] += reg;
                }
            }
            if let Some(f) = trial.cholesky() {
                chol = Some(f);
                break;
            }
        }
        let chol = chol.ok_or_else(|| Error::Numerical("Schur complement not positive definite".into()))?;
        let _ = reg;

        let r_d_scaled: Vec<DMatrix<f64>> = r_d
            .iter()
            .enumerate()
            .map(|(bidx, rb)| {
                let g = &scaling.g[bidx];
                g.transpose() * rb * g
            })
            .collect();

        // one Newton solve for a given centrality target R_c
        let direction = |r_c: &[DMatrix<f64>]| -> (DVector<f64>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
            let mut rhs = r_p.clone();
            for (i, parts) in scaled.iter().enumerate() {
                for (bidx, mat) in parts {
                    rhs[i] -= frob_dot(mat, &r_c[*bidx]);
                    rhs[i] += frob_dot(mat, &r_d_scaled[*bidx]);
                }
            }
            let dy = chol.solve(&rhs);
            let mut ds_hat: Vec<DMatrix<f64>> = r_d_scaled.clone();
            for (i, parts) in scaled.iter().enumerate() {
                for (bidx, mat) in parts {
                    ds_hat[*bidx] -= mat * dy[i];
                }
            }
            let dx_hat: Vec<DMatrix<f64>> =
                r_c.iter().zip(&ds_hat).map(|(rc, ds)| rc - ds).collect();
            (dy, dx_hat, ds_hat)
        };

        // predictor: drive straight at complementarity zero
        let r_c_aff: Vec<DMatrix<f64>> = scaling
            .sigma
            .iter()
            .map(|sig| {
                let d = sig.len();
                DMatrix::from_fn(d, d, |r, c| if r == c { -sig[r] } else { 0.0 })
            })
            .collect();
        let (_dy_aff, dx_aff, ds_aff) = direction(&r_c_aff);
        let ap_aff = max_step(&scaling.sigma, &dx_aff)?.min(1.0);
        let ad_aff = max_step(&scaling.sigma, &ds_aff)?.min(1.0);
        let mut gap_aff = 0.0;
        for (bidx, sig) in scaling.sigma.iter().enumerate() {
            let d = sig.len();
            let mut xa = DMatrix::from_fn(d, d, |r, c| if r == c { sig[r] } else { 0.0 });
            let mut sa = xa.clone();
            xa += &dx_aff[bidx] * ap_aff;
            sa += &ds_aff[bidx] * ad_aff;
            gap_aff += frob_dot(&xa, &sa);
        }
        let mu_aff = (gap_aff / nu).max(0.0);
        let sigma_center = ((mu_aff / mu).powi(3)).clamp(1e-10, 1.0);

        // corrector with Mehrotra second-order term
        let r_c: Vec<DMatrix<f64>> = scaling
            .sigma
            .iter()
            .enumerate()
            .map(|(bidx, sig)| {
                let d = sig.len();
                let mut h = (&dx_aff[bidx] * &ds_aff[bidx] + &ds_aff[bidx] * &dx_aff[bidx]) * 0.5;
                // sym(V^{-1} H) with diagonal V
                let mut term = DMatrix::zeros(d, d);
                for r in 0..d {
                    for c in 0..d {
                        term[(r, c)] = 0.5 * h[(r, c)] * (1.0 / sig[r] + 1.0 / sig[c]);
                    }
                }
                h.fill(0.0);
                let mut rc = term * (-1.0);
                for r in 0..d {
                    rc[(r, r)] += sigma_center * mu / sig[r] - sig[r];
                }
                rc
            })
            .collect();
        let (dy, dx_hat, ds_hat) = direction(&r_c);
        let gamma = 0.98;
        let ap = (gamma * max_step(&scaling.sigma, &dx_hat)?).min(1.0);
        let ad = (gamma * max_step(&scaling.sigma, &ds_hat)?).min(1.0);

        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                let status = if d_res <= FEAS_TOL {
                    SdpStatus::WeakDualBoundOnly
                } else {
                    SdpStatus::NumericalFailure
                };
                return Ok(finish(problem, x, y, s, status, iterations, p_res, d_res, rel_gap,
                    "step lengths collapsed".into()));
            }
        } else {
            stalls = 0;
        }

        for (bidx, dxh) in dx_hat.iter().enumerate() {
            let g = &scaling.g[bidx];
            let mut step = g * dxh * g.transpose();
            symmetrize(&mut step);
            x[bidx] += step * ap;
            symmetrize(&mut x[bidx]);
        }
        for (bidx, dsh) in ds_hat.iter().enumerate() {
            let gi = &scaling.g_inv[bidx];
            let mut step = gi.transpose() * dsh * gi;
            symmetrize(&mut step);
            s[bidx] += step * ad;
            symmetrize(&mut s[bidx]);
        }
        y += dy * ad;

        let size_guard =
            x.iter().chain(&s).map(|m| m.amax()).fold(0.0f64, f64::max);
        if !size_guard.is_finite() || size_guard > 1e18 {
            return Ok(finish(problem, x, y, s, SdpStatus::NumericalFailure, iterations,
                p_res, d_res, rel_gap, "iterates diverged".into()));
        }
    }

    // out of iterations: classify what we have
    let (p_res, d_res, rel_gap) = residuals(problem, &x, &y, &s);
    let status = if d_res <= FEAS_TOL { SdpStatus::WeakDualBoundOnly } else { SdpStatus::NumericalFailure };
    Ok(finish(problem, x, y, s, status, iterations, p_res, d_res, rel_gap,
        "iteration limit reached".into()))
}

fn residuals(
    problem: &SdpProblem,
    x: &[DMatrix<f64>],
    y: &DVector<f64>,
    s: &[DMatrix<f64>],
) -> (f64, f64, f64) {
    let norm_b = problem.rhs.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let norm_c = problem.objective.iter().map(|c| c.amax()).fold(0.0f64, f64::max);
    let mut r_p = DVector::from_column_slice(&problem.rhs);
    for (i, con) in problem.constraints.iter().enumerate() {
        r_p[i] -= con.dot_blocks(x);
    }
    let mut r_d: Vec<DMatrix<f64>> =
        problem.objective.iter().zip(s).map(|(c, sb)| c - sb).collect();
    for (i, con) in problem.constraints.iter().enumerate() {
        for (bidx, mat) in &con.parts {
            r_d[*bidx] -= mat * y[i];
        }
    }
    let pobj: f64 = problem.objective.iter().zip(x).map(|(c, xb)| frob_dot(c, xb)).sum();
    let dobj: f64 = DVector::from_column_slice(&problem.rhs).dot(y);
    let gap: f64 = x.iter().zip(s).map(|(xb, sb)| frob_dot(xb, sb)).sum();
    (
        r_p.norm() / (1.0 + norm_b),
        r_d.iter().map(|m| m.iter().map(|v| v * v).sum::<f64>()).sum::<f64>().sqrt() / (1.0 + norm_c),
        gap / (1.0 + pobj.abs() + dobj.abs()),
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    problem: &SdpProblem,
    x: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    s: Vec<DMatrix<f64>>,
    status: SdpStatus,
    iterations: usize,
    p_res: f64,
    d_res: f64,
    rel_gap: f64,
    message: String,
) -> SdpSolution {
    let primal_value: f64 =
        problem.objective.iter().zip(&x).map(|(c, xb)| frob_dot(c, xb)).sum();
    let dual_value = DVector::from_column_slice(&problem.rhs).dot(&y);
    SdpSolution {
        primal_value,
        dual_value,
        primal_blocks: x,
        dual_vector: y.as_slice().to_vec(),
        dual_slack_blocks: s,
        status,
        iterations,
        primal_residual: p_res,
        dual_residual: d_res,
        rel_gap,
        message,
    }
}

/// `min Tr[M X] s.t. Tr X = 1, X ⪰ 0` — the minimal eigenvalue as an SDP.
pub fn min_eig_via_sdp(m: &DMatrix<f64>) -> Result<f64> {
    let d = m.nrows();
    let mut problem = SdpProblem::new(vec![d]);
    problem.set_objective(0, m.clone());
    problem.add_constraint(SparseConstraint::new(vec![(0, DMatrix::identity(d, d))]), 1.0);
    let sol = solve(&problem, 1e-9)?;
    match sol.status {
        SdpStatus::Optimal | SdpStatus::WeakDualBoundOnly => Ok(sol.primal_value),
        SdpStatus::Infeasible => Err(Error::SdpInfeasible),
        SdpStatus::NumericalFailure => Err(Error::Numerical(sol.message)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    #[test]
    fn minimal_eigenvalue_program_diag() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let mut p = SdpProblem::new(vec![2]);
        p.set_objective(0, c);
        p.add_constraint(SparseConstraint::new(vec![(0, DMatrix::identity(2, 2))]), 1.0);
        let sol = solve(&p, 1e-9).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_relative_eq!(sol.primal_value, 1.0, epsilon = 1e-7);
        assert_relative_eq!(sol.dual_value, 1.0, epsilon = 1e-7);
        assert_relative_eq!(sol.primal_blocks[0][(0, 0)], 1.0, epsilon = 1e-6);
        assert_relative_eq!(sol.primal_blocks[0][(1, 1)], 0.0, epsilon = 1e-6);

        assert_relative_eq!(min_eig_via_sdp(&DMatrix::identity(3, 3)).unwrap(), 1.0, epsilon = 1e-7);
        let d = DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 0.0, 5.0]);
        assert_relative_eq!(min_eig_via_sdp(&d).unwrap(), -3.0, epsilon = 1e-7);
    }

    #[test]
    fn min_eig_matches_dense_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [8, 16] {
            let m = random_sym(&mut rng, d);
            let want = crate::linalg::sym_eig_min_value(&m).unwrap();
            let got = min_eig_via_sdp(&m).unwrap();
            assert_relative_eq!(got, want, epsilon = 1e-7, max_relative = 1e-7);
        }
    }

    #[test]
    fn detects_infeasible_trace_pair() {
        let mut p = SdpProblem::new(vec![2]);
        p.set_objective(0, DMatrix::identity(2, 2));
        p.add_constraint(SparseConstraint::new(vec![(0, DMatrix::identity(2, 2))]), 1.0);
        p.add_constraint(SparseConstraint::new(vec![(0, DMatrix::identity(2, 2))]), 2.0);
        let sol = solve(&p, 1e-9).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn multi_block_and_weak_duality() {
        // two blocks sharing a budget: min x11 + 3 z11 with x11 + z11 = 1
        let mut p = SdpProblem::new(vec![2, 1]);
        p.set_objective(0, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]));
        p.set_objective(1, DMatrix::from_row_slice(1, 1, &[3.0]));
        let mut e11 = DMatrix::zeros(2, 2);
        e11[(0, 0)] = 1.0;
        p.add_constraint(
            SparseConstraint::new(vec![(0, e11), (1, DMatrix::identity(1, 1))]),
            1.0,
        );
        let sol = solve(&p, 1e-9).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_relative_eq!(sol.primal_value, 1.0, epsilon = 1e-7);
        // weak duality holds along the way: dual ≤ primal at optimum
        assert!(sol.dual_value <= sol.primal_value + 1e-7);
    }

    #[test]
    fn dual_bound_certifies_feasible_points() {
        // random feasible points of the min-eig program score at least the
        // dual value
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = 6;
        let m = random_sym(&mut rng, d);
        let mut p = SdpProblem::new(vec![d]);
        p.set_objective(0, m.clone());
        p.add_constraint(SparseConstraint::new(vec![(0, DMatrix::identity(d, d))]), 1.0);
        let sol = solve(&p, 1e-9).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        for _ in 0..40 {
            let v = DMatrix::from_fn(d, 1, |_, _| rng.random_range(-1.0..1.0));
            let x = &v * v.transpose();
            let x = &x / x.trace();
            let val = frob_dot(&m, &x);
            assert!(val >= sol.dual_value - 1e-7);
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = random_sym(&mut rng, 10);
        let a = min_eig_via_sdp(&m).unwrap();
        let b = min_eig_via_sdp(&m).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sparse_dump_format() {
        let mut p = SdpProblem::new(vec![2]);
        p.set_objective(0, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]));
        p.add_constraint(SparseConstraint::new(vec![(0, DMatrix::identity(2, 2))]), 1.0);
        let dump = p.dump_sparse();
        assert!(dump.starts_with("# blocks 2\n"));
        assert!(dump.contains("# constraint 0 rhs"));
        // upper triangle only: the 0.5 appears once
        assert_eq!(dump.matches("5.00000000000000000e-1").count(), 1);
    }
}
