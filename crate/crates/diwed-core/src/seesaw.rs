//! Variational upper bound on the producibility bound: alternating
//! closed-form updates of single-site measurement angles and per-block
//! states, with multi-restart over random initial points.
//!
//! Each angle update minimizes the objective exactly (the effective operator
//! seen by one observable is 2×2 and its spectral sign is the minimizer), and
//! each state update replaces a block state by the minimal eigenvector of its
//! effective operator, so the objective is non-increasing step by step.

use nalgebra::DVector;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::inequality::PIBellInequality;
use crate::linalg;
use crate::partitions::{candidate_signatures, canonical_partition, Partition, SizeSignature};
use crate::qops::{
    block_observables, collective_apply, site_apply, BlockState, MeasurementConfig, ProductState,
};
use crate::{Error, Result};

/// Knobs of the variational search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeesawOptions {
    /// Independent random initial points.
    pub restarts: usize,
    /// Stop a restart when the objective improves by less than this.
    pub tol: f64,
    /// Hard cap on alternation sweeps per restart.
    pub max_sweeps: usize,
    /// Base seed; restart `r` derives its own stream from it.
    pub seed: u64,
    /// Also optimize the setting-0 angles instead of pinning them to `σ_z`.
    pub release_gauge: bool,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self { restarts: 200, tol: 1e-9, max_sweeps: 500, seed: 0, release_gauge: false }
    }
}

impl SeesawOptions {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Outcome of a bound computation, carrying full witness data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundResult {
    /// Variational bound `β_k^U`.
    pub beta_upper: f64,
    /// Certificate bound `β_k^L`, when one was computed.
    pub beta_lower: Option<f64>,
    /// `beta_upper - beta_lower`.
    pub gap: Option<f64>,
    pub partition: Partition,
    pub config: MeasurementConfig,
    pub state: ProductState,
    /// Objective after each sweep of the winning restart (non-increasing).
    pub trace: Vec<f64>,
    /// Bound per candidate signature, for figure labels.
    pub per_partition: Vec<(SizeSignature, f64)>,
    /// False iff the winning restart hit the sweep cap before the tolerance.
    pub converged: bool,
}

impl BoundResult {
    pub fn set_lower(&mut self, lower: f64) {
        self.beta_lower = Some(lower);
        self.gap = Some(self.beta_upper - lower);
    }
}

/// One converged restart.
#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub value: f64,
    pub config: MeasurementConfig,
    pub states: Vec<DVector<f64>>,
    pub trace: Vec<f64>,
    pub converged: bool,
}

// ---------------------------------------------------------------------------
// single-restart engine
// ---------------------------------------------------------------------------

struct Worker<'a> {
    ineq: &'a PIBellInequality,
    partition: Partition,
    cfg: MeasurementConfig,
    states: Vec<DVector<f64>>,
    /// cached `⟨ℬ_k^{A_j}⟩`
    s: Vec<[f64; 2]>,
}

impl<'a> Worker<'a> {
    fn new(
        ineq: &'a PIBellInequality,
        partition: Partition,
        cfg: MeasurementConfig,
        states: Vec<DVector<f64>>,
    ) -> Self {
        let blocks = partition.num_blocks();
        let mut w = Worker { ineq, partition, cfg, states, s: vec![[0.0; 2]; blocks] };
        for j in 0..blocks {
            w.refresh_one_body(j);
        }
        w
    }

    fn refresh_one_body(&mut self, j: usize) {
        let block = &self.partition.blocks()[j];
        let b = block.len();
        let psi = &self.states[j];
        for k in 0..2 {
            let obs = block_observables(&self.cfg, block, k);
            self.s[j][k] = psi.dot(&collective_apply(psi, b, &obs));
        }
    }

    /// Sum of `⟨ℬ_k^{A_i}⟩` over blocks other than `j`.
    fn cross_sums(&self, j: usize) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (i, s) in self.s.iter().enumerate() {
            if i != j {
                out[0] += s[0];
                out[1] += s[1];
            }
        }
        out
    }

    fn objective(&self) -> f64 {
        let mut total = 0.0;
        let ineq = self.ineq;
        for (j, block) in self.partition.blocks().iter().enumerate() {
            let b = block.len();
            let psi = &self.states[j];
            let obs = [
                block_observables(&self.cfg, block, 0),
                block_observables(&self.cfg, block, 1),
            ];
            let applied = [collective_apply(psi, b, &obs[0]), collective_apply(psi, b, &obs[1])];
            for k in 0..2 {
                total += ineq.alpha_one(k) * psi.dot(&applied[k]);
            }
            for (k, l) in [(0, 0), (0, 1), (1, 1)] {
                let mut t = applied[k].dot(&applied[l]);
                for site in 0..b {
                    let wk = site_apply(psi, b, site, obs[k][site]);
                    let wl = site_apply(psi, b, site, obs[l][site]);
                    t -= wk.dot(&wl);
                }
                total += ineq.alpha_two(k, l) * t;
            }
        }
        let sums = [
            self.s.iter().map(|s| s[0]).sum::<f64>(),
            self.s.iter().map(|s| s[1]).sum::<f64>(),
        ];
        for (k, l) in [(0, 0), (0, 1), (1, 1)] {
            let cross = sums[k] * sums[l] - self.s.iter().map(|s| s[k] * s[l]).sum::<f64>();
            total += self.ineq.alpha_two(k, l) * cross;
        }
        total
    }

    /// Closed-form minimizing angle for one observable; `None` means the
    /// effective field is degenerate and the angle should stay.
    fn best_site_angle(&self, site: usize, which: usize) -> Option<f64> {
        let j = self.partition.block_of(site);
        let block = &self.partition.blocks()[j];
        let b = block.len();
        let local = block.iter().position(|&i| i == site).expect("site in its block");
        let psi = &self.states[j];
        let ineq = self.ineq;

        let obs = [
            block_observables(&self.cfg, block, 0),
            block_observables(&self.cfg, block, 1),
        ];
        // collective and own-site applications at the current angles
        let v = [collective_apply(psi, b, &obs[0]), collective_apply(psi, b, &obs[1])];
        let w = [
            site_apply(psi, b, local, obs[0][local]),
            site_apply(psi, b, local, obs[1][local]),
        ];
        let cross = self.cross_sums(j);
        let mut cross_coeff = 0.0;
        for (k, l) in [(0, 0), (0, 1), (1, 1)] {
            let a = ineq.alpha_two(k, l);
            if k == which {
                cross_coeff += a * cross[l];
            }
            if l == which {
                cross_coeff += a * cross[k];
            }
        }
        let sz = [[1.0, 0.0], [0.0, -1.0]];
        let sx = [[0.0, 1.0], [1.0, 0.0]];
        let mut f = [0.0f64; 2];
        for (a, pauli) in [sz, sx].into_iter().enumerate() {
            let u = site_apply(psi, b, local, pauli);
            let mut fa = (ineq.alpha_one(which) + cross_coeff) * psi.dot(&u);
            for (k, l) in [(0, 0), (0, 1), (1, 1)] {
                let alpha = ineq.alpha_two(k, l);
                if k == which {
                    fa += alpha * (u.dot(&v[l]) - u.dot(&w[l]));
                }
                if l == which {
                    fa += alpha * (u.dot(&v[k]) - u.dot(&w[k]));
                }
            }
            f[a] = fa;
        }
        let norm = (f[0] * f[0] + f[1] * f[1]).sqrt();
        if norm < 1e-12 {
            return None;
        }
        // minimizer of f_z cos θ + f_x sin θ
        Some((-f[1]).atan2(-f[0]))
    }

    fn update_site(&mut self, site: usize, which: usize) {
        if let Some(angle) = self.best_site_angle(site, which) {
            self.cfg.set_angle(site, which, angle);
            self.refresh_one_body(self.partition.block_of(site));
        }
    }

    /// Effective operator of block `j` applied to a vector: the block's own
    /// terms plus the mean field of every other block.
    fn apply_effective(&self, j: usize, v: &DVector<f64>) -> DVector<f64> {
        let block = &self.partition.blocks()[j];
        let b = block.len();
        let ineq = self.ineq;
        let obs = [
            block_observables(&self.cfg, block, 0),
            block_observables(&self.cfg, block, 1),
        ];
        let coll = [collective_apply(v, b, &obs[0]), collective_apply(v, b, &obs[1])];
        let cross = self.cross_sums(j);
        let mut out = DVector::zeros(v.len());
        for k in 0..2 {
            let mut coeff = ineq.alpha_one(k);
            for (p, q) in [(0, 0), (0, 1), (1, 1)] {
                let a = ineq.alpha_two(p, q);
                if p == k {
                    coeff += a * cross[q];
                }
                if q == k {
                    coeff += a * cross[p];
                }
            }
            out += &coll[k] * coeff;
        }
        for (k, l) in [(0, 0), (0, 1), (1, 1)] {
            let a = ineq.alpha_two(k, l);
            if a == 0.0 {
                continue;
            }
            let mut pair = collective_apply(&coll[l], b, &obs[k]);
            for site in 0..b {
                let wl = site_apply(v, b, site, obs[l][site]);
                pair -= site_apply(&wl, b, site, obs[k][site]);
            }
            out += pair * a;
        }
        out
    }

    fn update_region(&mut self, j: usize) -> Result<()> {
        let b = self.partition.blocks()[j].len();
        let dim = 1usize << b;
        let ground = if dim <= 256 {
            let mut mat = nalgebra::DMatrix::zeros(dim, dim);
            let mut e = DVector::zeros(dim);
            for c in 0..dim {
                e[c] = 1.0;
                mat.set_column(c, &self.apply_effective(j, &e));
                e[c] = 0.0;
            }
            linalg::symmetrize(&mut mat);
            linalg::sym_eig_min(&mat)?.1
        } else {
            let scale: f64 = self.ineq.alpha_one_all().iter().map(|a| a.abs()).sum::<f64>()
                + self.ineq.alpha_two_all().iter().map(|a| a.abs()).sum::<f64>();
            let cross_scale: f64 = self.cross_sums(j).iter().map(|s| s.abs()).sum();
            let hint = scale * ((b * b) as f64 + cross_scale);
            let start = self.states[j].clone();
            linalg::lanczos_min_eig(&|v| self.apply_effective(j, v), dim, &start, hint.max(1.0), 1e-12)?
                .1
        };
        let mut psi = ground;
        psi /= psi.norm();
        self.states[j] = psi;
        self.refresh_one_body(j);
        Ok(())
    }

    fn sweep(&mut self, release_gauge: bool) -> Result<()> {
        let n = self.partition.n();
        for site in 0..n {
            if release_gauge {
                self.update_site(site, 0);
            }
            self.update_site(site, 1);
        }
        for j in 0..self.partition.num_blocks() {
            self.update_region(j)?;
        }
        Ok(())
    }
}

fn full_states(state: &ProductState) -> Vec<DVector<f64>> {
    state
        .partition
        .blocks()
        .iter()
        .zip(&state.blocks)
        .map(|(b, s)| crate::qops::block_state_full(s, b.len()))
        .collect()
}

/// Exact minimizing angle for observable `which` at `site`, everything else
/// held fixed. Returns the current angle when the effective field vanishes.
pub fn optimize_site(
    ineq: &PIBellInequality,
    state: &ProductState,
    cfg: &MeasurementConfig,
    site: usize,
    which: usize,
) -> Result<f64> {
    if state.partition.n() != ineq.n() {
        return Err(Error::DimensionMismatch("state/expression party counts differ".into()));
    }
    let worker = Worker::new(ineq, state.partition.clone(), cfg.clone(), full_states(state));
    Ok(worker.best_site_angle(site, which).unwrap_or_else(|| cfg.angle(site, which)))
}

/// Minimal-eigenvalue state of the effective operator of one block,
/// everything else held fixed.
pub fn optimize_region(
    ineq: &PIBellInequality,
    state: &ProductState,
    cfg: &MeasurementConfig,
    region: usize,
) -> Result<DVector<f64>> {
    if state.partition.n() != ineq.n() {
        return Err(Error::DimensionMismatch("state/expression party counts differ".into()));
    }
    let mut worker = Worker::new(ineq, state.partition.clone(), cfg.clone(), full_states(state));
    worker.update_region(region)?;
    Ok(worker.states[region].clone())
}

/// Runs the alternation from an explicit starting point until the objective
/// change drops below `tol` or `max_sweeps` is hit.
pub fn seesaw_from(
    ineq: &PIBellInequality,
    partition: &Partition,
    cfg: MeasurementConfig,
    states: Vec<DVector<f64>>,
    opts: &SeesawOptions,
) -> Result<RestartOutcome> {
    let mut worker = Worker::new(ineq, partition.clone(), cfg, states);
    let mut trace = vec![worker.objective()];
    let mut converged = false;
    for _ in 0..opts.max_sweeps {
        worker.sweep(opts.release_gauge)?;
        let value = worker.objective();
        let prev = *trace.last().expect("trace nonempty");
        trace.push(value);
        if (prev - value).abs() < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(RestartOutcome {
        value: *trace.last().expect("trace nonempty"),
        config: worker.cfg,
        states: worker.states,
        trace,
        converged,
    })
}

fn random_restart(
    ineq: &PIBellInequality,
    partition: &Partition,
    opts: &SeesawOptions,
    restart: usize,
) -> Result<RestartOutcome> {
    let n = partition.n();
    let mut rng = ChaCha8Rng::seed_from_u64(
        opts.seed.wrapping_add((restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    );
    let theta: Vec<f64> =
        (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let cfg = if opts.release_gauge {
        let phi: Vec<f64> =
            (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        MeasurementConfig::new(theta, phi)?
    } else {
        MeasurementConfig::gauge_fixed(theta)
    };
    let states: Vec<DVector<f64>> = partition
        .blocks()
        .iter()
        .map(|b| {
            let dim = 1usize << b.len();
            let mut v =
                DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            v /= v.norm();
            v
        })
        .collect();
    seesaw_from(ineq, partition, cfg, states, opts)
}

/// Best variational bound for a fixed partition over `opts.restarts` random
/// initial points. Deterministic for a fixed seed: ties across restarts break
/// towards the lower restart index.
pub fn seesaw_partition(
    ineq: &PIBellInequality,
    partition: &Partition,
    opts: &SeesawOptions,
) -> Result<BoundResult> {
    if partition.n() != ineq.n() {
        return Err(Error::DimensionMismatch("partition/expression party counts differ".into()));
    }
    let outcomes: Vec<Result<RestartOutcome>> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| random_restart(ineq, partition, opts, r))
        .collect();
    let mut best: Option<RestartOutcome> = None;
    for outcome in outcomes {
        let outcome = outcome?;
        let better = match &best {
            None => true,
            Some(b) => outcome.value < b.value,
        };
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one restart");
    let blocks: Vec<BlockState> =
        best.states.iter().map(|v| BlockState::Full(v.as_slice().to_vec())).collect();
    let state = ProductState::new(partition.clone(), blocks)?;
    Ok(BoundResult {
        beta_upper: best.value,
        beta_lower: None,
        gap: None,
        partition: partition.clone(),
        config: best.config,
        state,
        trace: best.trace,
        per_partition: vec![(partition.signature(), best.value)],
        converged: best.converged,
    })
}

/// `β_k^U`: minimum of [`seesaw_partition`] over the coarse-maximal candidate
/// signatures. The result records every candidate's value for labeling.
pub fn upper_bound(ineq: &PIBellInequality, k: usize, opts: &SeesawOptions) -> Result<BoundResult> {
    let n = ineq.n();
    let sigs = candidate_signatures(n, k)?;
    let mut best: Option<BoundResult> = None;
    let mut per_partition = Vec::with_capacity(sigs.len());
    for sig in &sigs {
        let partition = canonical_partition(sig);
        let result = seesaw_partition(ineq, &partition, opts)?;
        per_partition.push((sig.clone(), result.beta_upper));
        let better = match &best {
            None => true,
            Some(b) => result.beta_upper < b.beta_upper,
        };
        if better {
            best = Some(result);
        }
    }
    let mut best = best.expect("at least one candidate signature");
    best.per_partition = per_partition;
    Ok(best)
}
