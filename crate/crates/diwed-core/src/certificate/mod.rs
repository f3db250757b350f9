//! Lower-bound certificates from a relaxed marginal problem.
//!
//! For a fixed partition and fixed measurement settings, the minimum of the
//! Bell expression over states that factorize across the partition is lower
//! bounded by an SDP over the single-block and block-pair reduced density
//! matrices: unit traces, partial-trace consistency between each pair
//! marginal and its two block marginals, positivity of every marginal, and
//! positivity of the partial transpose of every pair marginal (the
//! separability relaxation). The optimization variables are the coefficients
//! of the marginals in per-block operator bases; the PPT matrix appears as
//! its own PSD block whose coefficients are the partial-transpose images of
//! the pair-marginal coefficients, so both blocks stay linearly tied without
//! duplicated equality rows.
//!
//! Blocks of three or more sites use the permutation-invariant reduced basis
//! (their sites must share settings — the builder symmetrizes the angles and
//! reports the flattened spread), which also block-diagonalizes every PSD
//! test into small spin sectors. Blocks of one or two sites keep the full
//! basis and need no assumption on the settings.

mod basis;

pub use basis::{full_basis, reduced_basis, BlockBasis};

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::inequality::PIBellInequality;
use crate::linalg::{frob_dot, sym_eig_min_value};
use crate::partitions::{candidate_signatures, canonical_partition, Partition, SizeSignature};
use crate::qops::{bell_operator_full, block_operators, MeasurementConfig};
use crate::sdp::{solve, SdpProblem, SdpStatus, SparseConstraint};
use crate::seesaw::{seesaw_from, seesaw_partition, BoundResult, SeesawOptions};
use crate::{Error, Result};

/// Basis policy for the certificate builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateMode {
    /// Full basis on blocks of ≤ 2 sites, reduced basis above.
    Auto,
    /// Full basis everywhere (any settings; small blocks only).
    FullSpace,
    /// Reduced basis everywhere (requires shared settings per block).
    Reduced,
}

/// Options of [`certify`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyOptions {
    pub seesaw: SeesawOptions,
    /// Relative duality-gap target handed to the SDP solver.
    pub sdp_tol: f64,
    /// Radius (radians) of the settings perturbation grid scanned with the
    /// discard rule.
    pub grid_radius: f64,
    /// Number of perturbed settings to test; 0 disables the scan.
    pub grid_points: usize,
    /// Restart the variational stage from perturbed settings that survive
    /// the discard rule.
    pub refine_settings: bool,
    pub mode: CertificateMode,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            seesaw: SeesawOptions::default(),
            sdp_tol: 1e-9,
            grid_radius: 1e-2,
            grid_points: 4,
            refine_settings: false,
            mode: CertificateMode::Auto,
        }
    }
}

/// Per-certificate record, one per (partition, settings) solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub signature: SizeSignature,
    /// Safe lower bound (dual side plus feasibility slack).
    pub beta_lower: f64,
    /// Value attained by the relaxation's minimizing marginals.
    pub attained: f64,
    pub status: String,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rel_gap: f64,
    /// Largest angle deviation flattened by per-block symmetrization.
    pub angle_spread: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

/// Output of [`certify`].
#[derive(Debug, Clone)]
pub struct CertifyOutput {
    pub bound: BoundResult,
    /// One report per candidate signature, in candidate order.
    pub reports: Vec<CertificateReport>,
    /// Perturbed settings rejected by the discard rule.
    pub discarded_settings: usize,
    /// Perturbed settings that survived (candidates for further descent).
    pub surviving_settings: usize,
}

// ---------------------------------------------------------------------------
// problem construction
// ---------------------------------------------------------------------------

struct PairLayout {
    first: usize,
    second: usize,
    ss_offset: usize,
    aa_offset: usize,
}

/// Assembled certificate: the standard-form SDP plus enough layout to map
/// solver output back to marginals and values.
pub struct CertificateProblem {
    pub sdp: SdpProblem,
    pub partition: Partition,
    /// Constant part of the objective (trace-fixed components).
    pub objective_offset: f64,
    /// Largest angle deviation removed by block symmetrization.
    pub angle_spread: f64,
    /// Settings actually certified (after symmetrization).
    pub config: MeasurementConfig,
    bases: Vec<BlockBasis>,
    single_offsets: Vec<usize>,
    pairs: Vec<PairLayout>,
    num_vars: usize,
    objective_linear: Vec<f64>,
}

/// `⟨G, A ⊗ B⟩` for `G` on the product space, contracting the first factor.
fn contract_first(g: &DMatrix<f64>, a: &DMatrix<f64>, d2: usize) -> DMatrix<f64> {
    let d1 = a.nrows();
    let mut out = DMatrix::zeros(d2, d2);
    for r1 in 0..d1 {
        for c1 in 0..d1 {
            let w = a[(r1, c1)];
            if w == 0.0 {
                continue;
            }
            for r2 in 0..d2 {
                for c2 in 0..d2 {
                    out[(r2, c2)] += w * g[(r1 * d2 + r2, c1 * d2 + c2)];
                }
            }
        }
    }
    out
}

/// Builds the certificate with the default policy (PPT on, mode `Auto`).
pub fn build_certificate(
    ineq: &PIBellInequality,
    partition: &Partition,
    cfg: &MeasurementConfig,
) -> Result<CertificateProblem> {
    build_certificate_with(ineq, partition, cfg, CertificateMode::Auto, true)
}

/// Builds the certificate SDP for fixed settings.
pub fn build_certificate_with(
    ineq: &PIBellInequality,
    partition: &Partition,
    cfg: &MeasurementConfig,
    mode: CertificateMode,
    include_ppt: bool,
) -> Result<CertificateProblem> {
    let n = ineq.n();
    if partition.n() != n || cfg.n() != n {
        return Err(Error::DimensionMismatch("party counts disagree".into()));
    }
    let blocks = partition.blocks();
    for pair in pair_list(blocks.len()) {
        let d = blocks[pair.0].len() + blocks[pair.1].len();
        if 1usize << d > 256 {
            return Err(Error::DimensionBudget(format!(
                "pair marginal of {d} qubits exceeds the 256-dimensional budget"
            )));
        }
    }

    // basis per block; reduced blocks get their angles symmetrized
    let mut cfg = cfg.clone();
    let mut angle_spread = 0.0f64;
    let mut bases = Vec::with_capacity(blocks.len());
    for block in blocks {
        let reduce = match mode {
            CertificateMode::Auto => block.len() >= 3,
            CertificateMode::FullSpace => false,
            CertificateMode::Reduced => true,
        };
        if reduce {
            angle_spread = angle_spread.max(cfg.symmetrize_block(block));
            bases.push(reduced_basis(block.len())?);
        } else {
            bases.push(full_basis(block.len())?);
        }
    }

    // objective operators
    let mut g_single: Vec<DMatrix<f64>> = Vec::with_capacity(blocks.len());
    let mut b_one: Vec<[DMatrix<f64>; 2]> = Vec::with_capacity(blocks.len());
    for block in blocks {
        let ops = block_operators(&cfg, block)?;
        let mut g = DMatrix::zeros(ops.dim(), ops.dim());
        for k in 0..2 {
            g += ops.one(k) * ineq.alpha_one(k);
        }
        for (k, l) in [(0, 0), (0, 1), (1, 1)] {
            g += ops.two(k, l) * ineq.alpha_two(k, l);
        }
        g_single.push(g);
        b_one.push([ops.one(0).clone(), ops.one(1).clone()]);
    }
    let pairs_idx = pair_list(blocks.len());
    let mut g_pair: Vec<DMatrix<f64>> = Vec::with_capacity(pairs_idx.len());
    for &(j1, j2) in &pairs_idx {
        let (d1, d2) = (1usize << blocks[j1].len(), 1usize << blocks[j2].len());
        let mut g = DMatrix::zeros(d1 * d2, d1 * d2);
        for (k, l) in [(0, 0), (0, 1), (1, 1)] {
            let a = ineq.alpha_two(k, l);
            if a == 0.0 {
                continue;
            }
            g += (b_one[j1][k].kronecker(&b_one[j2][l])
                + b_one[j1][l].kronecker(&b_one[j2][k]))
                * a;
        }
        g_pair.push(g);
    }

    // variable layout
    let mut single_offsets = Vec::with_capacity(blocks.len());
    let mut num_vars = 0usize;
    for basis in &bases {
        single_offsets.push(num_vars);
        num_vars += basis.sym.len() - 1;
    }
    let mut pairs = Vec::with_capacity(pairs_idx.len());
    for &(j1, j2) in &pairs_idx {
        let ss = (bases[j1].sym.len() - 1) * (bases[j2].sym.len() - 1);
        let aa = bases[j1].asym.len() * bases[j2].asym.len();
        pairs.push(PairLayout { first: j1, second: j2, ss_offset: num_vars, aa_offset: num_vars + ss });
        num_vars += ss + aa;
    }

    // LMI block enumeration
    let mut block_dims: Vec<usize> = Vec::new();
    let mut single_lmi: Vec<Vec<usize>> = Vec::new();
    for basis in &bases {
        let mut ids = Vec::new();
        for d in basis.sector_dims() {
            ids.push(block_dims.len());
            block_dims.push(d);
        }
        single_lmi.push(ids);
    }
    let mut pair_lmi: Vec<Vec<(usize, usize, usize)>> = Vec::new(); // (s1, s2, lmi idx)
    for &(j1, j2) in &pairs_idx {
        let mut ids = Vec::new();
        for (s1, d1) in bases[j1].sector_dims().into_iter().enumerate() {
            for (s2, d2) in bases[j2].sector_dims().into_iter().enumerate() {
                ids.push((s1, s2, block_dims.len()));
                block_dims.push(d1 * d2);
            }
        }
        pair_lmi.push(ids);
    }
    let mut ppt_lmi: Vec<Vec<(usize, usize, usize)>> = Vec::new();
    if include_ppt {
        for &(j1, j2) in &pairs_idx {
            let mut ids = Vec::new();
            for (s1, d1) in bases[j1].sector_dims().into_iter().enumerate() {
                for (s2, d2) in bases[j2].sector_dims().into_iter().enumerate() {
                    ids.push((s1, s2, block_dims.len()));
                    block_dims.push(d1 * d2);
                }
            }
            ppt_lmi.push(ids);
        }
    }

    let mut sdp = SdpProblem::new(block_dims.clone());

    // base point (all variables zero): maximally mixed marginals
    for (j, basis) in bases.iter().enumerate() {
        let scale = 1.0 / basis.dim as f64;
        for (&lmi, d) in single_lmi[j].iter().zip(basis.sector_dims()) {
            sdp.set_objective(lmi, DMatrix::identity(d, d) * scale);
        }
    }
    for (p, &(j1, j2)) in pairs_idx.iter().enumerate() {
        let scale = 1.0 / (bases[j1].dim * bases[j2].dim) as f64;
        for &(_, _, lmi) in &pair_lmi[p] {
            let d = block_dims[lmi];
            sdp.set_objective(lmi, DMatrix::identity(d, d) * scale);
        }
        if include_ppt {
            for &(_, _, lmi) in &ppt_lmi[p] {
                let d = block_dims[lmi];
                sdp.set_objective(lmi, DMatrix::identity(d, d) * scale);
            }
        }
    }

    // objective coefficients and constraint matrices per variable; the
    // standard form is max bᵀy with slack C − Σ y_i A_i, so A_i = −F_i and
    // b_i = −g_i.
    let mut objective_linear = vec![0.0; num_vars];
    let mut constraints: Vec<Vec<(usize, DMatrix<f64>)>> = vec![Vec::new(); num_vars];

    // single-marginal variables
    for (j, basis) in bases.iter().enumerate() {
        let t_j = basis.trace_scale();
        for a in 1..basis.sym.len() {
            let v = single_offsets[j] + a - 1;
            objective_linear[v] += frob_dot(&g_single[j], &basis.sym[a]);
            for (s, &lmi) in single_lmi[j].iter().enumerate() {
                constraints[v].push((lmi, -&basis.comp_sym[a][s]));
            }
            let _ = t_j;
        }
    }
    // pair contributions (interior variables and single-variable borders)
    for (p, &(j1, j2)) in pairs_idx.iter().enumerate() {
        let (b1, b2) = (&bases[j1], &bases[j2]);
        let d2 = b2.dim;
        let (t1, t2) = (b1.trace_scale(), b2.trace_scale());
        let ns1 = b1.sym.len();
        let ns2 = b2.sym.len();
        // first-factor contractions of the pair objective
        let contracted: Vec<DMatrix<f64>> =
            (0..ns1).map(|a| contract_first(&g_pair[p], &b1.sym[a], d2)).collect();

        // border terms: pair coefficient (a,0) is y^{j1}_a / t2, (0,b) is
        // y^{j2}_b / t1, and (0,0) is fixed
        for a in 1..ns1 {
            let v = single_offsets[j1] + a - 1;
            objective_linear[v] += frob_dot(&contracted[a], &b2.sym[0]) / t2;
            for &(s1, s2, lmi) in &pair_lmi[p] {
                let f = b1.comp_sym[a][s1].kronecker(&b2.comp_sym[0][s2]) / t2;
                constraints[v].push((lmi, -&f));
            }
            if include_ppt {
                for &(s1, s2, lmi) in &ppt_lmi[p] {
                    let f = b1.comp_sym[a][s1].kronecker(&b2.comp_sym[0][s2]) / t2;
                    constraints[v].push((lmi, -&f));
                }
            }
        }
        for b in 1..ns2 {
            let v = single_offsets[j2] + b - 1;
            objective_linear[v] += frob_dot(&contracted[0], &b2.sym[b]) / t1;
            for &(s1, s2, lmi) in &pair_lmi[p] {
                let f = b1.comp_sym[0][s1].kronecker(&b2.comp_sym[b][s2]) / t1;
                constraints[v].push((lmi, -&f));
            }
            if include_ppt {
                for &(s1, s2, lmi) in &ppt_lmi[p] {
                    let f = b1.comp_sym[0][s1].kronecker(&b2.comp_sym[b][s2]) / t1;
                    constraints[v].push((lmi, -&f));
                }
            }
        }
        // interior symmetric ⊗ symmetric variables
        for a in 1..ns1 {
            for b in 1..ns2 {
                let v = pairs[p].ss_offset + (a - 1) * (ns2 - 1) + (b - 1);
                objective_linear[v] += frob_dot(&contracted[a], &b2.sym[b]);
                for &(s1, s2, lmi) in &pair_lmi[p] {
                    let f = b1.comp_sym[a][s1].kronecker(&b2.comp_sym[b][s2]);
                    constraints[v].push((lmi, -&f));
                }
                if include_ppt {
                    for &(s1, s2, lmi) in &ppt_lmi[p] {
                        let f = b1.comp_sym[a][s1].kronecker(&b2.comp_sym[b][s2]);
                        constraints[v].push((lmi, -&f));
                    }
                }
            }
        }
        // antisymmetric ⊗ antisymmetric variables: traceless on both sides,
        // orthogonal to the objective, sign-flipped under partial transpose
        let na2 = b2.asym.len();
        for a in 0..b1.asym.len() {
            for b in 0..na2 {
                let v = pairs[p].aa_offset + a * na2 + b;
                for &(s1, s2, lmi) in &pair_lmi[p] {
                    let f = b1.comp_asym[a][s1].kronecker(&b2.comp_asym[b][s2]);
                    constraints[v].push((lmi, -&f));
                }
                if include_ppt {
                    for &(s1, s2, lmi) in &ppt_lmi[p] {
                        let f = b1.comp_asym[a][s1].kronecker(&b2.comp_asym[b][s2]);
                        constraints[v].push((lmi, f.clone()));
                    }
                }
            }
        }
    }

    // constant objective part from the fixed trace components
    let mut objective_offset = 0.0;
    for (j, basis) in bases.iter().enumerate() {
        objective_offset += frob_dot(&g_single[j], &basis.sym[0]) / basis.trace_scale();
    }
    for (p, &(j1, j2)) in pairs_idx.iter().enumerate() {
        let scale = bases[j1].trace_scale() * bases[j2].trace_scale();
        let c = contract_first(&g_pair[p], &bases[j1].sym[0], bases[j2].dim);
        objective_offset += frob_dot(&c, &bases[j2].sym[0]) / scale;
    }

    // expansion-completeness guard for the reduced flavor (Parseval)
    for (j, basis) in bases.iter().enumerate() {
        if !basis.reduced {
            continue;
        }
        let mut captured = (frob_dot(&g_single[j], &basis.sym[0])).powi(2);
        for a in 1..basis.sym.len() {
            captured += frob_dot(&g_single[j], &basis.sym[a]).powi(2);
        }
        let total = frob_dot(&g_single[j], &g_single[j]);
        if (captured - total).abs() > 1e-8 * (1.0 + total) {
            return Err(Error::Numerical(
                "objective leaks outside the permutation-invariant span".into(),
            ));
        }
    }

    for (v, parts) in constraints.into_iter().enumerate() {
        sdp.add_constraint(SparseConstraint::new(parts), -objective_linear[v]);
    }

    Ok(CertificateProblem {
        sdp,
        partition: partition.clone(),
        objective_offset,
        angle_spread,
        config: cfg,
        bases,
        single_offsets,
        pairs,
        num_vars,
        objective_linear,
    })
}

fn pair_list(num_blocks: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..num_blocks {
        for j in (i + 1)..num_blocks {
            out.push((i, j));
        }
    }
    out
}

impl CertificateProblem {
    /// Reconstructs the marginals described by a solver dual vector.
    pub fn marginals(&self, y: &[f64]) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut singles = Vec::with_capacity(self.bases.len());
        for (j, basis) in self.bases.iter().enumerate() {
            let mut rho = basis.sym[0].clone() / basis.trace_scale();
            for a in 1..basis.sym.len() {
                rho += &basis.sym[a] * y[self.single_offsets[j] + a - 1];
            }
            singles.push(rho);
        }
        let mut pair_marginals = Vec::with_capacity(self.pairs.len());
        for layout in &self.pairs {
            let (b1, b2) = (&self.bases[layout.first], &self.bases[layout.second]);
            let (t1, t2) = (b1.trace_scale(), b2.trace_scale());
            let mut rho = b1.sym[0].kronecker(&b2.sym[0]) / (t1 * t2);
            for a in 1..b1.sym.len() {
                let ya = y[self.single_offsets[layout.first] + a - 1];
                rho += b1.sym[a].kronecker(&b2.sym[0]) * (ya / t2);
            }
            for b in 1..b2.sym.len() {
                let yb = y[self.single_offsets[layout.second] + b - 1];
                rho += b1.sym[0].kronecker(&b2.sym[b]) * (yb / t1);
            }
            let ns2 = b2.sym.len() - 1;
            for a in 0..(b1.sym.len() - 1) {
                for b in 0..ns2 {
                    let v = y[layout.ss_offset + a * ns2 + b];
                    rho += b1.sym[a + 1].kronecker(&b2.sym[b + 1]) * v;
                }
            }
            let na2 = b2.asym.len();
            for a in 0..b1.asym.len() {
                for b in 0..na2 {
                    let v = y[layout.aa_offset + a * na2 + b];
                    rho += b1.asym[a].kronecker(&b2.asym[b]) * v;
                }
            }
            pair_marginals.push(rho);
        }
        (singles, pair_marginals)
    }

    /// Objective value of a marginal set described by the dual vector.
    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective_offset
            + self.objective_linear.iter().zip(y).map(|(g, v)| g * v).sum::<f64>()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }
}

// ---------------------------------------------------------------------------
// solving
// ---------------------------------------------------------------------------

/// Result of one certificate solve, before packaging into a report.
pub struct CertificateValue {
    pub beta_lower: f64,
    pub attained: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rel_gap: f64,
    pub angle_spread: f64,
    pub config: MeasurementConfig,
    pub marginals: (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>),
}

/// Solves the certificate at fixed settings and returns the safe bound.
pub fn lower_bound(
    ineq: &PIBellInequality,
    partition: &Partition,
    cfg: &MeasurementConfig,
    tol: f64,
) -> Result<f64> {
    Ok(lower_bound_detailed(ineq, partition, cfg, tol, CertificateMode::Auto)?.beta_lower)
}

/// Full diagnostics flavor of [`lower_bound`].
pub fn lower_bound_detailed(
    ineq: &PIBellInequality,
    partition: &Partition,
    cfg: &MeasurementConfig,
    tol: f64,
    mode: CertificateMode,
) -> Result<CertificateValue> {
    // single block: the relaxation is exactly the minimal eigenvalue of the
    // Bell operator
    if partition.num_blocks() == 1 {
        let b = bell_operator_full(ineq, cfg)?;
        let value = if b.nrows() <= 1024 {
            sym_eig_min_value(&b)?
        } else {
            let start = DVector::from_element(b.nrows(), 1.0);
            crate::linalg::lanczos_min_eig(&|v| &b * v, b.nrows(), &start, b.amax() * b.nrows() as f64, 1e-11)?.0
        };
        return Ok(CertificateValue {
            beta_lower: value,
            attained: value,
            status: SdpStatus::Optimal,
            iterations: 0,
            primal_residual: 0.0,
            dual_residual: 0.0,
            rel_gap: 0.0,
            angle_spread: 0.0,
            config: cfg.clone(),
            marginals: (Vec::new(), Vec::new()),
        });
    }

    let cert = build_certificate_with(ineq, partition, cfg, mode, true)?;
    let sol = solve(&cert.sdp, tol)?;
    match sol.status {
        SdpStatus::Optimal | SdpStatus::WeakDualBoundOnly => {}
        SdpStatus::Infeasible => return Err(Error::SdpInfeasible),
        SdpStatus::NumericalFailure => return Err(Error::Numerical(sol.message)),
    }
    if sol.primal_residual > 1e-6 {
        return Err(Error::Numerical(format!(
            "certificate side of the SDP did not reach feasibility ({:.2e})",
            sol.primal_residual
        )));
    }
    // weak duality: offset − ⟨C,X⟩ lower-bounds the relaxation for any
    // near-feasible X; discount the residual against the multiplier norm
    let y_norm = sol.dual_vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    let slack = sol.primal_residual * (1.0 + y_norm);
    let beta_lower = cert.objective_offset - sol.primal_value - slack;
    let attained = cert.objective_value(&sol.dual_vector);
    let marginals = cert.marginals(&sol.dual_vector);
    Ok(CertificateValue {
        beta_lower,
        attained,
        status: sol.status,
        iterations: sol.iterations,
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        rel_gap: sol.rel_gap,
        angle_spread: cert.angle_spread,
        config: cert.config,
        marginals,
    })
}

fn report_from(value: &CertificateValue, signature: SizeSignature) -> CertificateReport {
    CertificateReport {
        signature,
        beta_lower: value.beta_lower,
        attained: value.attained,
        status: format!("{:?}", value.status),
        iterations: value.iterations,
        primal_residual: value.primal_residual,
        dual_residual: value.dual_residual,
        rel_gap: value.rel_gap,
        angle_spread: value.angle_spread,
        theta: value.config.thetas().to_vec(),
        phi: value.config.phis().to_vec(),
    }
}

/// Variational upper bound plus certificate lower bound for every candidate
/// partition, with the perturbation-grid discard scan around the winner.
pub fn certify(ineq: &PIBellInequality, k: usize, opts: &CertifyOptions) -> Result<CertifyOutput> {
    let n = ineq.n();
    let sigs = candidate_signatures(n, k)?;
    let mut runs: Vec<(SizeSignature, BoundResult)> = Vec::with_capacity(sigs.len());
    for sig in &sigs {
        let partition = canonical_partition(sig);
        let run = seesaw_partition(ineq, &partition, &opts.seesaw)?;
        runs.push((sig.clone(), run));
    }
    let best_idx = (0..runs.len())
        .min_by(|&a, &b| runs[a].1.beta_upper.partial_cmp(&runs[b].1.beta_upper).unwrap())
        .expect("at least one candidate");

    let mut reports = Vec::with_capacity(runs.len());
    for (sig, run) in &runs {
        let partition = canonical_partition(sig);
        let value = lower_bound_detailed(ineq, &partition, &run.config, opts.sdp_tol, opts.mode)?;
        reports.push(report_from(&value, sig.clone()));
    }

    let mut bound = runs[best_idx].1.clone();
    bound.per_partition = runs.iter().map(|(s, r)| (s.clone(), r.beta_upper)).collect();
    bound.set_lower(reports[best_idx].beta_lower);

    // settings-space scan: a perturbed θ′ whose certificate already exceeds
    // the variational value cannot beat it and is discarded
    let mut discarded = 0usize;
    let mut surviving = 0usize;
    if opts.grid_points > 0 {
        let partition = canonical_partition(&runs[best_idx].0);
        let base_cfg = bound.config.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seesaw.seed ^ 0xC0FFEE);
        for _ in 0..opts.grid_points {
            let theta: Vec<f64> = base_cfg
                .thetas()
                .iter()
                .map(|t| t + rng.random_range(-opts.grid_radius..opts.grid_radius))
                .collect();
            let cfg = MeasurementConfig::new(theta, base_cfg.phis().to_vec())?;
            let value = lower_bound_detailed(ineq, &partition, &cfg, opts.sdp_tol, opts.mode)?;
            if value.beta_lower > bound.beta_upper + 1e-9 {
                discarded += 1;
                continue;
            }
            surviving += 1;
            if opts.refine_settings {
                let states = bound
                    .state
                    .blocks
                    .iter()
                    .zip(partition.blocks())
                    .map(|(s, b)| crate::qops::block_state_full(s, b.len()))
                    .collect();
                let outcome = seesaw_from(ineq, &partition, cfg, states, &opts.seesaw)?;
                if outcome.value < bound.beta_upper {
                    bound.beta_upper = outcome.value;
                    bound.config = outcome.config;
                    let blocks: Vec<crate::qops::BlockState> = outcome
                        .states
                        .iter()
                        .map(|v| crate::qops::BlockState::Full(v.as_slice().to_vec()))
                        .collect();
                    bound.state = crate::qops::ProductState::new(partition.clone(), blocks)?;
                    bound.trace = outcome.trace;
                    if let Some(lower) = bound.beta_lower {
                        bound.gap = Some(bound.beta_upper - lower);
                    }
                }
            }
        }
    }

    Ok(CertifyOutput { bound, reports, discarded_settings: discarded, surviving_settings: surviving })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::{builtin, classical_bound, Builtin};
    use crate::partitions::SizeSignature;
    use crate::qops::partial_trace;
    use approx::assert_relative_eq;

    fn seesaw_opts(restarts: usize, seed: u64) -> SeesawOptions {
        SeesawOptions { restarts, seed, ..SeesawOptions::default() }
    }

    #[test]
    fn block_structure_matches_expected_counts() {
        // signature [2,2] on 4 parties in full mode: two 4×4 single blocks,
        // one 16×16 pair block and one 16×16 partial-transpose block
        let ineq = builtin(Builtin::Ineq6, 4).unwrap();
        let sig = SizeSignature::new(vec![2, 2]).unwrap();
        let partition = canonical_partition(&sig);
        let cfg = MeasurementConfig::gauge_fixed(vec![0.3, 1.0, 2.0, 0.7]);
        let cert =
            build_certificate_with(&ineq, &partition, &cfg, CertificateMode::FullSpace, true)
                .unwrap();
        assert_eq!(cert.sdp.block_dims, vec![4, 4, 16, 16]);
    }

    #[test]
    fn zero_inequality_gives_zero() {
        let ineq = crate::inequality::PIBellInequality::new(4, [0.0; 2], [0.0; 3]).unwrap();
        let sig = SizeSignature::new(vec![2, 2]).unwrap();
        let partition = canonical_partition(&sig);
        let cfg = MeasurementConfig::gauge_fixed(vec![0.1, 0.5, 1.2, 2.2]);
        let value = lower_bound(&ineq, &partition, &cfg, 1e-9).unwrap();
        assert_relative_eq!(value, 0.0, epsilon = 1e-7);
    }

    #[test]
    fn singleton_partition_certifies_classical_bound() {
        // at the settings of the converged product-state optimum, two-qubit
        // PPT marginals are separable, so the relaxation is tight
        let ineq = builtin(Builtin::DickeIneq, 3).unwrap();
        let run = seesaw_partition(&ineq, &Partition::singletons(3), &seesaw_opts(24, 2)).unwrap();
        let value = lower_bound(&ineq, &Partition::singletons(3), &run.config, 1e-9).unwrap();
        let beta_c = classical_bound(&ineq);
        assert_relative_eq!(run.beta_upper, beta_c, epsilon = 1e-7);
        assert!(value <= beta_c + 1e-7);
        assert!(value >= beta_c - 1e-6, "certificate {value} far below classical {beta_c}");
    }

    #[test]
    fn chsh_certificate_closes_gap() {
        let ineq = builtin(Builtin::DickeIneq, 2).unwrap();
        // k=2: single block, certificate reduces to the operator ground state
        let whole = Partition::whole(2);
        let run = seesaw_partition(&ineq, &whole, &seesaw_opts(24, 5)).unwrap();
        assert_relative_eq!(run.beta_upper, -4.0 * 2f64.sqrt(), epsilon = 1e-6);
        let value =
            lower_bound_detailed(&ineq, &whole, &run.config, 1e-9, CertificateMode::Auto).unwrap();
        assert!(run.beta_upper - value.beta_lower <= 1e-7);
        // k=1: PPT pair marginal is separable, certificate meets the
        // product-state optimum
        let singles = Partition::singletons(2);
        let run = seesaw_partition(&ineq, &singles, &seesaw_opts(24, 5)).unwrap();
        assert_relative_eq!(run.beta_upper, -4.0, epsilon = 1e-7);
        let value =
            lower_bound_detailed(&ineq, &singles, &run.config, 1e-9, CertificateMode::Auto)
                .unwrap();
        assert!(value.beta_lower <= run.beta_upper + 1e-9);
        assert!(
            run.beta_upper - value.beta_lower <= 1e-6,
            "gap {} too wide",
            run.beta_upper - value.beta_lower
        );
    }

    #[test]
    fn commuting_settings_certify_classical_bound() {
        let ineq = builtin(Builtin::Ineq6, 4).unwrap();
        let sig = SizeSignature::new(vec![2, 2]).unwrap();
        let partition = canonical_partition(&sig);
        let cfg = MeasurementConfig::new(vec![0.0; 4], vec![0.0; 4]).unwrap();
        let value = lower_bound(&ineq, &partition, &cfg, 1e-9).unwrap();
        assert!(value >= classical_bound(&ineq) - 1e-6);
    }

    #[test]
    fn reduced_and_full_modes_agree() {
        let ineq = builtin(Builtin::DickeIneq, 4).unwrap();
        let sig = SizeSignature::new(vec![2, 2]).unwrap();
        let partition = canonical_partition(&sig);
        // shared angles per block so the reduced flavor applies exactly
        let cfg = MeasurementConfig::gauge_fixed(vec![0.9, 0.9, 2.1, 2.1]);
        let full = lower_bound_detailed(&ineq, &partition, &cfg, 1e-9, CertificateMode::FullSpace)
            .unwrap();
        let red = lower_bound_detailed(&ineq, &partition, &cfg, 1e-9, CertificateMode::Reduced)
            .unwrap();
        assert_relative_eq!(full.beta_lower, red.beta_lower, epsilon = 1e-6);

        let sig = SizeSignature::new(vec![3, 1]).unwrap();
        let partition = canonical_partition(&sig);
        let cfg = MeasurementConfig::gauge_fixed(vec![1.3, 1.3, 1.3, 0.4]);
        let full = lower_bound_detailed(&ineq, &partition, &cfg, 1e-9, CertificateMode::FullSpace)
            .unwrap();
        let auto =
            lower_bound_detailed(&ineq, &partition, &cfg, 1e-9, CertificateMode::Auto).unwrap();
        assert_relative_eq!(full.beta_lower, auto.beta_lower, epsilon = 1e-6);
    }

    #[test]
    fn marginals_are_consistent_and_ppt() {
        let ineq = builtin(Builtin::DickeIneq, 4).unwrap();
        let sig = SizeSignature::new(vec![2, 2]).unwrap();
        let partition = canonical_partition(&sig);
        let run = seesaw_partition(&ineq, &partition, &seesaw_opts(16, 9)).unwrap();
        let value =
            lower_bound_detailed(&ineq, &partition, &run.config, 1e-9, CertificateMode::Auto)
                .unwrap();
        let (singles, pairs) = &value.marginals;
        for rho in singles {
            assert_relative_eq!(rho.trace(), 1.0, epsilon = 1e-7);
            assert!(sym_eig_min_value(rho).unwrap() >= -1e-8);
        }
        let rho_pair = &pairs[0];
        assert_relative_eq!(rho_pair.trace(), 1.0, epsilon = 1e-7);
        assert!(sym_eig_min_value(rho_pair).unwrap() >= -1e-8);
        let pt = crate::qops::partial_transpose(rho_pair, (4, 4)).unwrap();
        assert!(sym_eig_min_value(&pt).unwrap() >= -1e-8);
        // partial traces reproduce the single marginals exactly by layout
        let ta = partial_trace(rho_pair, (4, 4), crate::qops::Keep::A).unwrap();
        assert_relative_eq!((ta - &singles[0]).amax(), 0.0, epsilon = 1e-8);
        let tb = partial_trace(rho_pair, (4, 4), crate::qops::Keep::B).unwrap();
        assert_relative_eq!((tb - &singles[1]).amax(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn dropping_ppt_never_raises_the_bound() {
        // evaluate at entangling settings so the PPT cut actually bites
        let ineq = builtin(Builtin::DickeIneq, 2).unwrap();
        let partition = Partition::singletons(2);
        let entangling = seesaw_partition(&ineq, &Partition::whole(2), &seesaw_opts(24, 3))
            .unwrap()
            .config;
        let with =
            build_certificate_with(&ineq, &partition, &entangling, CertificateMode::Auto, true)
                .unwrap();
        let without =
            build_certificate_with(&ineq, &partition, &entangling, CertificateMode::Auto, false)
                .unwrap();
        let sol_with = solve(&with.sdp, 1e-9).unwrap();
        let sol_without = solve(&without.sdp, 1e-9).unwrap();
        let v_with = with.objective_offset - sol_with.primal_value;
        let v_without = without.objective_offset - sol_without.primal_value;
        assert!(v_without <= v_with + 1e-7, "PPT made the relaxation looser");
        // without PPT the pair marginal is unconstrained beyond positivity
        // and consistency, so the optimum is the operator ground state
        let oracle = sym_eig_min_value(&bell_operator_full(&ineq, &entangling).unwrap()).unwrap();
        assert_relative_eq!(v_without, oracle, epsilon = 1e-5);
        assert!(v_without <= v_with - 0.5, "PPT should bite at entangling settings");
    }

    #[test]
    fn certify_closes_gap_small_instance() {
        let ineq = builtin(Builtin::DickeIneq, 3).unwrap();
        let opts = CertifyOptions {
            seesaw: seesaw_opts(24, 13),
            grid_points: 2,
            ..CertifyOptions::default()
        };
        let out = certify(&ineq, 2, &opts).unwrap();
        let gap = out.bound.gap.unwrap();
        assert!(gap >= -1e-8, "lower bound above upper bound: {gap}");
        assert!(gap <= 1e-6, "gap {gap} too wide");
        assert_eq!(out.reports.len(), 1); // only [2,1] is coarse-maximal
    }
}
