//! Quantum linear-algebra substrate: XZ-plane observables, Bell-operator
//! assembly (full space and per block), the contraction evaluator that avoids
//! the `2^n` operator, Dicke isometries and collective-spin reductions, and
//! partial trace / partial transpose.
//!
//! Basis conventions, used everywhere:
//! - party `i` of an `n`-party register owns bit `n-1-i` of the basis index
//!   (leftmost tensor factor is the most significant bit);
//! - `|0⟩` is the `+1` eigenstate of `σ_z`; a Dicke excitation is a `|1⟩`;
//! - observables are `cos θ · σ_z + sin θ · σ_x`, so `θ = 0` is `σ_z`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::inequality::{GenericTwoBodyInequality, PIBellInequality};
use crate::partitions::Partition;
use crate::{Error, Result};

/// Largest block (in qubits) the dense paths accept.
pub const DENSE_QUBIT_BUDGET: usize = 12;

/// Binary observable in the XZ plane: `cos θ σ_z + sin θ σ_x`.
pub fn observable(theta: f64) -> [[f64; 2]; 2] {
    let (s, c) = theta.sin_cos();
    [[c, s], [s, -c]]
}

/// Dense 2×2 form of [`observable`].
pub fn observable_matrix(theta: f64) -> DMatrix<f64> {
    let m = observable(theta);
    DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

/// Per-party XZ-plane angles for the two settings. Setting 0 defaults to the
/// gauge `σ_z` (all phases zero); setting 1 carries the free angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    theta: Vec<f64>,
    phi: Vec<f64>,
}

fn reduce_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r < 0.0 {
        r += two_pi;
    }
    r
}

impl MeasurementConfig {
    /// Gauge-fixed configuration: setting 0 is `σ_z` on every site.
    pub fn gauge_fixed(theta: Vec<f64>) -> Self {
        let phi = vec![0.0; theta.len()];
        Self { theta: theta.into_iter().map(reduce_angle).collect(), phi }
    }

    pub fn new(theta: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if theta.len() != phi.len() {
            return Err(Error::DimensionMismatch("angle arrays of different length".into()));
        }
        Ok(Self {
            theta: theta.into_iter().map(reduce_angle).collect(),
            phi: phi.into_iter().map(reduce_angle).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    /// Angle of observable `setting` at site `i`.
    pub fn angle(&self, i: usize, setting: usize) -> f64 {
        match setting {
            0 => self.phi[i],
            _ => self.theta[i],
        }
    }

    pub fn set_angle(&mut self, i: usize, setting: usize, value: f64) {
        match setting {
            0 => self.phi[i] = reduce_angle(value),
            _ => self.theta[i] = reduce_angle(value),
        }
    }

    pub fn observable(&self, i: usize, setting: usize) -> [[f64; 2]; 2] {
        observable(self.angle(i, setting))
    }

    pub fn thetas(&self) -> &[f64] {
        &self.theta
    }

    pub fn phis(&self) -> &[f64] {
        &self.phi
    }

    /// Replaces the angles of every site in `block` by their circular mean,
    /// returning the largest deviation that was flattened out.
    pub fn symmetrize_block(&mut self, block: &[usize]) -> f64 {
        let mut spread = 0.0f64;
        for setting in 0..2 {
            let (mut sx, mut sy) = (0.0, 0.0);
            for &i in block {
                let a = self.angle(i, setting);
                sx += a.cos();
                sy += a.sin();
            }
            let mean = sy.atan2(sx);
            for &i in block {
                let a = self.angle(i, setting);
                let mut d = (a - mean) % std::f64::consts::TAU;
                if d > std::f64::consts::PI {
                    d -= std::f64::consts::TAU;
                }
                if d < -std::f64::consts::PI {
                    d += std::f64::consts::TAU;
                }
                spread = spread.max(d.abs());
                self.set_angle(i, setting, mean);
            }
        }
        spread
    }
}

/// One factor of a product state: either a full vector on the block's qubits
/// or a coefficient vector over the block's Dicke states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BlockState {
    /// Dimension `2^m` over computational basis states.
    Full(Vec<f64>),
    /// Dimension `m+1` over `|D_m^0⟩ .. |D_m^m⟩`.
    Dicke(Vec<f64>),
}

impl BlockState {
    pub fn norm(&self) -> f64 {
        let v = match self {
            BlockState::Full(v) | BlockState::Dicke(v) => v,
        };
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn coeffs(&self) -> &[f64] {
        match self {
            BlockState::Full(v) | BlockState::Dicke(v) => v,
        }
    }
}

/// A pure state that factorizes over the blocks of a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductState {
    pub partition: Partition,
    pub blocks: Vec<BlockState>,
}

impl ProductState {
    pub fn new(partition: Partition, blocks: Vec<BlockState>) -> Result<Self> {
        if blocks.len() != partition.num_blocks() {
            return Err(Error::DimensionMismatch("one state per block required".into()));
        }
        for (b, state) in partition.blocks().iter().zip(&blocks) {
            let m = b.len();
            let want = match state {
                BlockState::Full(v) => (1usize << m, v.len()),
                BlockState::Dicke(v) => (m + 1, v.len()),
            };
            if want.0 != want.1 {
                return Err(Error::DimensionMismatch(format!(
                    "block of {m} sites expects dimension {}, got {}",
                    want.0, want.1
                )));
            }
            if (state.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "block state norm {} differs from 1",
                    state.norm()
                )));
            }
        }
        Ok(Self { partition, blocks })
    }

    /// Expands the product state into the full `2^n` register (small `n` only).
    pub fn to_global_vector(&self) -> Result<DVector<f64>> {
        let n = self.partition.n();
        if n > DENSE_QUBIT_BUDGET {
            return Err(Error::DimensionBudget(format!("n = {n} over dense budget")));
        }
        let mut full_blocks: Vec<DVector<f64>> = Vec::new();
        for (block, state) in self.partition.blocks().iter().zip(&self.blocks) {
            full_blocks.push(block_state_full(state, block.len()));
        }
        let dim = 1usize << n;
        let mut out = DVector::zeros(dim);
        for c in 0..dim {
            let mut amp = 1.0;
            for (bi, block) in self.partition.blocks().iter().enumerate() {
                let m = block.len();
                let mut local = 0usize;
                for (pos, &site) in block.iter().enumerate() {
                    let bit = (c >> (n - 1 - site)) & 1;
                    local |= bit << (m - 1 - pos);
                }
                amp *= full_blocks[bi][local];
                if amp == 0.0 {
                    break;
                }
            }
            out[c] = amp;
        }
        Ok(out)
    }
}

/// Dense vector of a block state, expanding Dicke coefficients if needed.
pub(crate) fn block_state_full(state: &BlockState, m: usize) -> DVector<f64> {
    match state {
        BlockState::Full(v) => DVector::from_column_slice(v),
        BlockState::Dicke(c) => {
            let iso = dicke_isometry(m).expect("dicke isometry within budget");
            &iso * DVector::from_column_slice(c)
        }
    }
}

// ---------------------------------------------------------------------------
// site-local operator application
// ---------------------------------------------------------------------------

/// `M^{(site)} v` for a 2×2 operator on one site of a `b`-qubit block.
pub(crate) fn site_apply(v: &DVector<f64>, b: usize, site: usize, m: [[f64; 2]; 2]) -> DVector<f64> {
    let dim = 1usize << b;
    debug_assert_eq!(v.len(), dim);
    let shift = b - 1 - site;
    let mask = 1usize << shift;
    let mut out = DVector::zeros(dim);
    for c in 0..dim {
        let bit = (c >> shift) & 1;
        let c0 = c & !mask;
        let c1 = c | mask;
        out[c] = m[bit][0] * v[c0] + m[bit][1] * v[c1];
    }
    out
}

/// `(Σ_{i∈block} M_i) v` with a per-site operator list.
pub(crate) fn collective_apply(v: &DVector<f64>, b: usize, ops: &[[[f64; 2]; 2]]) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for (site, m) in ops.iter().enumerate() {
        out += site_apply(v, b, site, *m);
    }
    out
}

/// Observables of every site of `block` for one setting.
pub(crate) fn block_observables(cfg: &MeasurementConfig, block: &[usize], setting: usize) -> Vec<[[f64; 2]; 2]> {
    block.iter().map(|&i| cfg.observable(i, setting)).collect()
}

// ---------------------------------------------------------------------------
// Bell operators
// ---------------------------------------------------------------------------

/// Site-resolved coefficient access shared by both inequality forms.
pub trait TwoBodyCoefficients {
    fn parties(&self) -> usize;
    /// Coefficient of `M_k^{(i)}`.
    fn one_coeff(&self, i: usize, k: usize) -> f64;
    /// Coefficient of `M_k^{(i)} ⊗ M_l^{(j)}` for the ordered pair `i ≠ j`.
    fn two_coeff(&self, i: usize, j: usize, k: usize, l: usize) -> f64;
}

impl TwoBodyCoefficients for PIBellInequality {
    fn parties(&self) -> usize {
        self.n()
    }
    fn one_coeff(&self, _i: usize, k: usize) -> f64 {
        self.alpha_one(k)
    }
    fn two_coeff(&self, _i: usize, _j: usize, k: usize, l: usize) -> f64 {
        if k <= l {
            self.alpha_two(k, l)
        } else {
            0.0
        }
    }
}

impl TwoBodyCoefficients for GenericTwoBodyInequality {
    fn parties(&self) -> usize {
        self.n()
    }
    fn one_coeff(&self, i: usize, k: usize) -> f64 {
        self.one_body(i, k)
    }
    fn two_coeff(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.two_body(i, j, k, l)
    }
}

/// Dense Bell operator on the full `2^n` register.
pub fn bell_operator_full<E: TwoBodyCoefficients>(
    expr: &E,
    cfg: &MeasurementConfig,
) -> Result<DMatrix<f64>> {
    let n = expr.parties();
    if cfg.n() != n {
        return Err(Error::DimensionMismatch("config/expression party counts differ".into()));
    }
    if n > DENSE_QUBIT_BUDGET {
        return Err(Error::DimensionBudget(format!("n = {n} over dense budget")));
    }
    let dim = 1usize << n;
    let mut obs = [vec![[[0.0; 2]; 2]; n], vec![[[0.0; 2]; 2]; n]];
    for (k, per_setting) in obs.iter_mut().enumerate() {
        for (i, o) in per_setting.iter_mut().enumerate() {
            *o = cfg.observable(i, k);
        }
    }
    // Collect nonzero terms once; per-column application touches ≤ 4 entries
    // per term, and identical term order for every column keeps the output
    // bitwise symmetric.
    let mut one_terms: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for k in 0..2 {
            let c = expr.one_coeff(i, k);
            if c != 0.0 {
                one_terms.push((i, k, c));
            }
        }
    }
    let mut two_terms: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for k in 0..2 {
                for l in 0..2 {
                    let c = expr.two_coeff(i, j, k, l);
                    if c != 0.0 {
                        two_terms.push((i, j, k, l, c));
                    }
                }
            }
        }
    }
    let mut out = DMatrix::zeros(dim, dim);
    for c in 0..dim {
        let mut col = out.column_mut(c);
        for &(i, k, coeff) in &one_terms {
            let shift = n - 1 - i;
            let bit = (c >> shift) & 1;
            let m = &obs[k][i];
            for r in 0..2 {
                let idx = (c & !(1 << shift)) | (r << shift);
                col[idx] += coeff * m[r][bit];
            }
        }
        for &(i, j, k, l, coeff) in &two_terms {
            let si = n - 1 - i;
            let sj = n - 1 - j;
            let bi = (c >> si) & 1;
            let bj = (c >> sj) & 1;
            let mi = &obs[k][i];
            let mj = &obs[l][j];
            for ri in 0..2 {
                let vi = coeff * mi[ri][bi];
                if vi == 0.0 {
                    continue;
                }
                for rj in 0..2 {
                    let idx = (c & !(1 << si) & !(1 << sj)) | (ri << si) | (rj << sj);
                    col[idx] += vi * mj[rj][bj];
                }
            }
        }
    }
    Ok(out)
}

/// Grouped per-block operators `ℬ_k^A = Σ_{i∈A} M_k^{(i)}` and
/// `ℬ_kl^A = Σ_{i≠i'∈A} M_k^{(i)} M_l^{(i')}` (ordered pairs).
#[derive(Debug, Clone)]
pub struct BlockOperators {
    /// `[ℬ_0, ℬ_1]`
    pub b_one: [DMatrix<f64>; 2],
    /// `[ℬ_00, ℬ_01, ℬ_11]`
    pub b_two: [DMatrix<f64>; 3],
}

impl BlockOperators {
    pub fn one(&self, k: usize) -> &DMatrix<f64> {
        &self.b_one[k]
    }

    /// `ℬ_kl`, unordered lookup (`ℬ_lk = ℬ_kl` holds by the pair-sum
    /// definition).
    pub fn two(&self, k: usize, l: usize) -> &DMatrix<f64> {
        let (k, l) = if k <= l { (k, l) } else { (l, k) };
        &self.b_two[k + l]
    }

    pub fn dim(&self) -> usize {
        self.b_one[0].nrows()
    }
}

/// Dense block operators on the `2^|block|` space of `block`.
pub fn block_operators(cfg: &MeasurementConfig, block: &[usize]) -> Result<BlockOperators> {
    let b = block.len();
    if b > DENSE_QUBIT_BUDGET {
        return Err(Error::DimensionBudget(format!("block of {b} sites over dense budget")));
    }
    let dim = 1usize << b;
    let obs0 = block_observables(cfg, block, 0);
    let obs1 = block_observables(cfg, block, 1);
    let obs = [&obs0, &obs1];

    let dense_from = |f: &dyn Fn(&DVector<f64>) -> DVector<f64>| -> DMatrix<f64> {
        let mut m = DMatrix::zeros(dim, dim);
        let mut e = DVector::zeros(dim);
        for c in 0..dim {
            e[c] = 1.0;
            m.set_column(c, &f(&e));
            e[c] = 0.0;
        }
        m
    };

    let b_one = [
        dense_from(&|v| collective_apply(v, b, &obs0)),
        dense_from(&|v| collective_apply(v, b, &obs1)),
    ];
    let mut b_two_vec = Vec::with_capacity(3);
    for (k, l) in [(0, 0), (0, 1), (1, 1)] {
        let f = |v: &DVector<f64>| -> DVector<f64> {
            // Σ_{i≠i'} M_k^i M_l^{i'} v = ℬ_k (ℬ_l v) − Σ_i M_k^i M_l^i v
            let mut out = collective_apply(&collective_apply(v, b, obs[l]), b, obs[k]);
            for site in 0..b {
                let w = site_apply(v, b, site, obs[l][site]);
                out -= site_apply(&w, b, site, obs[k][site]);
            }
            out
        };
        b_two_vec.push(dense_from(&f));
    }
    let b_two = [b_two_vec.remove(0), b_two_vec.remove(0), b_two_vec.remove(0)];
    Ok(BlockOperators { b_one, b_two })
}

/// Per-block one-body expectations `⟨ℬ_k^A⟩` and same-region two-body
/// expectations `⟨ℬ_kl^A⟩` — the raw material of the contraction.
pub(crate) fn block_expectations(
    cfg: &MeasurementConfig,
    block: &[usize],
    state: &BlockState,
) -> Result<([f64; 2], [f64; 3])> {
    let m = block.len();
    match state {
        BlockState::Full(v) => {
            if m > DENSE_QUBIT_BUDGET {
                return Err(Error::DimensionBudget(format!("block of {m} sites over dense budget")));
            }
            let psi = DVector::from_column_slice(v);
            let obs0 = block_observables(cfg, block, 0);
            let obs1 = block_observables(cfg, block, 1);
            let obs = [&obs0, &obs1];
            let applied = [collective_apply(&psi, m, &obs0), collective_apply(&psi, m, &obs1)];
            let s = [psi.dot(&applied[0]), psi.dot(&applied[1])];
            let mut t = [0.0; 3];
            for (idx, (k, l)) in [(0usize, 0usize), (0, 1), (1, 1)].into_iter().enumerate() {
                let mut val = applied[k].dot(&applied[l]);
                for site in 0..m {
                    let wk = site_apply(&psi, m, site, obs[k][site]);
                    let wl = site_apply(&psi, m, site, obs[l][site]);
                    val -= wk.dot(&wl);
                }
                t[idx] = val;
            }
            Ok((s, t))
        }
        BlockState::Dicke(c) => {
            let (phi, theta) = uniform_block_angles(cfg, block)?;
            let ops = collective_block_operators((phi, theta), m)?;
            let psi = DVector::from_column_slice(c);
            let s = [psi.dot(&(ops.one(0) * &psi)), psi.dot(&(ops.one(1) * &psi))];
            let t = [
                psi.dot(&(ops.two(0, 0) * &psi)),
                psi.dot(&(ops.two(0, 1) * &psi)),
                psi.dot(&(ops.two(1, 1) * &psi)),
            ];
            Ok((s, t))
        }
    }
}

/// Requires all sites of `block` to share their angles; returns `(φ, θ)`.
pub(crate) fn uniform_block_angles(cfg: &MeasurementConfig, block: &[usize]) -> Result<(f64, f64)> {
    let phi = cfg.angle(block[0], 0);
    let theta = cfg.angle(block[0], 1);
    for &i in block {
        if (cfg.angle(i, 0) - phi).abs() > 1e-9 || (cfg.angle(i, 1) - theta).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "Dicke-represented block requires shared settings on its sites".into(),
            ));
        }
    }
    Ok((phi, theta))
}

/// `⟨Ψ_𝒫|ℬ|Ψ_𝒫⟩` without forming the `2^n` operator: per-block one-body and
/// same-region terms plus factorized crossed terms.
pub fn contraction_value(
    ineq: &PIBellInequality,
    state: &ProductState,
    cfg: &MeasurementConfig,
) -> Result<f64> {
    if ineq.n() != state.partition.n() || cfg.n() != ineq.n() {
        return Err(Error::DimensionMismatch("party counts disagree".into()));
    }
    let blocks = state.partition.blocks();
    let mut s_all = vec![[0.0; 2]; blocks.len()];
    let mut total = 0.0;
    for (j, block) in blocks.iter().enumerate() {
        let (s, t) = block_expectations(cfg, block, &state.blocks[j])?;
        s_all[j] = s;
        total += ineq.alpha_one(0) * s[0] + ineq.alpha_one(1) * s[1];
        total += ineq.alpha_two(0, 0) * t[0] + ineq.alpha_two(0, 1) * t[1] + ineq.alpha_two(1, 1) * t[2];
    }
    // crossed terms: Σ_{j≠j'} s_k^j s_l^{j'} = Σ_k Σ_l − diagonal
    let sums = [s_all.iter().map(|s| s[0]).sum::<f64>(), s_all.iter().map(|s| s[1]).sum::<f64>()];
    for (k, l) in [(0, 0), (0, 1), (1, 1)] {
        let cross =
            sums[k] * sums[l] - s_all.iter().map(|s| s[k] * s[l]).sum::<f64>();
        total += ineq.alpha_two(k, l) * cross;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Dicke sector
// ---------------------------------------------------------------------------

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Isometry from the `(m+1)`-dimensional Dicke space into `2^m`; column `j`
/// is the normalized symmetric state with `j` excitations.
pub fn dicke_isometry(m: usize) -> Result<DMatrix<f64>> {
    if m > 20 {
        return Err(Error::DimensionBudget(format!("dense Dicke isometry gated at m ≤ 20, got {m}")));
    }
    let dim = 1usize << m;
    let mut v = DMatrix::zeros(dim, m + 1);
    for idx in 0..dim {
        let j = (idx as u32).count_ones() as usize;
        v[(idx, j)] = 1.0 / binomial(m, j).sqrt();
    }
    Ok(v)
}

/// Collective `Σ σ_z` on the Dicke space: `diag(m - 2j)`.
pub fn collective_z(m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m + 1, m + 1, |r, c| if r == c { (m as f64) - 2.0 * r as f64 } else { 0.0 })
}

/// Collective `Σ σ_x` on the Dicke space: tridiagonal with
/// `√((j+1)(m-j))` couplings.
pub fn collective_x(m: usize) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(m + 1, m + 1);
    for j in 0..m {
        let v = (((j + 1) * (m - j)) as f64).sqrt();
        x[(j, j + 1)] = v;
        x[(j + 1, j)] = v;
    }
    x
}

/// Dicke-sector compressions of the block operators for a block of `m` sites
/// sharing the settings `(φ, θ)`. Built from collective-spin matrices; never
/// touches the `2^m` space.
pub fn collective_block_operators(angles: (f64, f64), m: usize) -> Result<BlockOperators> {
    let (phi, theta) = angles;
    let z = collective_z(m);
    let x = collective_x(m);
    let coll = |a: f64| -> DMatrix<f64> { &z * a.cos() + &x * a.sin() };
    let b0 = coll(phi);
    let b1 = coll(theta);
    let eye = DMatrix::identity(m + 1, m + 1);
    let pair = |bk: &DMatrix<f64>, bl: &DMatrix<f64>, ak: f64, al: f64| -> DMatrix<f64> {
        // Σ_{i≠i'} M_k M_l = ½{ℬ_k, ℬ_l} − m cos(θ_k − θ_l) 𝟙 in the sector
        (bk * bl + bl * bk) * 0.5 - &eye * (m as f64 * (ak - al).cos())
    };
    let b_two = [pair(&b0, &b0, phi, phi), pair(&b0, &b1, phi, theta), pair(&b1, &b1, theta, theta)];
    Ok(BlockOperators { b_one: [b0, b1], b_two })
}

// ---------------------------------------------------------------------------
// partial trace / partial transpose
// ---------------------------------------------------------------------------

/// Which tensor factor survives the partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace of an operator on `C^{d_A} ⊗ C^{d_B}`.
pub fn partial_trace(rho: &DMatrix<f64>, dims: (usize, usize), keep: Keep) -> Result<DMatrix<f64>> {
    let (da, db) = dims;
    if rho.nrows() != da * db || rho.ncols() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}×{}, dims give {}",
            rho.nrows(),
            rho.ncols(),
            da * db
        )));
    }
    match keep {
        Keep::A => {
            let mut out = DMatrix::zeros(da, da);
            for a in 0..da {
                for a2 in 0..da {
                    let mut acc = 0.0;
                    for b in 0..db {
                        acc += rho[(a * db + b, a2 * db + b)];
                    }
                    out[(a, a2)] = acc;
                }
            }
            Ok(out)
        }
        Keep::B => {
            let mut out = DMatrix::zeros(db, db);
            for b in 0..db {
                for b2 in 0..db {
                    let mut acc = 0.0;
                    for a in 0..da {
                        acc += rho[(a * db + b, a * db + b2)];
                    }
                    out[(b, b2)] = acc;
                }
            }
            Ok(out)
        }
    }
}

/// Partial transpose on the second factor of `C^{d_A} ⊗ C^{d_B}`.
pub fn partial_transpose(rho: &DMatrix<f64>, dims: (usize, usize)) -> Result<DMatrix<f64>> {
    let (da, db) = dims;
    if rho.nrows() != da * db || rho.ncols() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}×{}, dims give {}",
            rho.nrows(),
            rho.ncols(),
            da * db
        )));
    }
    let mut out = DMatrix::zeros(da * db, da * db);
    for a in 0..da {
        for a2 in 0..da {
            for b in 0..db {
                for b2 in 0..db {
                    out[(a * db + b, a2 * db + b2)] = rho[(a * db + b2, a2 * db + b)];
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::{builtin, classical_bound, Builtin};
    use crate::linalg::{sym_eig_min_value, sym_eigenvalues};
    use crate::partitions::{canonical_partition, SizeSignature};
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_full_state(rng: &mut ChaCha8Rng, m: usize) -> BlockState {
        let dim = 1usize << m;
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        BlockState::Full(v)
    }

    #[test]
    fn observable_basics() {
        let z = observable(0.0);
        assert_eq!(z, [[1.0, 0.0], [0.0, -1.0]]);
        let x = observable(std::f64::consts::FRAC_PI_2);
        assert_relative_eq!(x[0][1], 1.0, epsilon = 1e-15);
        assert_relative_eq!(x[0][0], 0.0, epsilon = 1e-15);
        // M² = 1 for any angle
        for i in 0..40 {
            let t = i as f64 * 0.157;
            let m = observable(t);
            let sq = [
                m[0][0] * m[0][0] + m[0][1] * m[1][0],
                m[0][0] * m[0][1] + m[0][1] * m[1][1],
            ];
            assert_relative_eq!(sq[0], 1.0, epsilon = 1e-14);
            assert_relative_eq!(sq[1], 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn bell_operator_symmetric_and_zero() {
        let zero = crate::inequality::PIBellInequality::new(3, [0.0; 2], [0.0; 3]).unwrap();
        let cfg = MeasurementConfig::gauge_fixed(vec![0.3, 1.1, 2.9]);
        let b = bell_operator_full(&zero, &cfg).unwrap();
        assert_eq!(b.amax(), 0.0);

        let ineq = builtin(Builtin::DickeIneq, 3).unwrap();
        let b = bell_operator_full(&ineq, &cfg).unwrap();
        let asym = (&b - b.transpose()).amax();
        assert_eq!(asym, 0.0);
    }

    #[test]
    fn commuting_settings_reach_classical_bound_only() {
        // θ_i = φ_i = 0 on every site: eigenvalues are deterministic values
        let ineq = builtin(Builtin::Ineq6, 2).unwrap();
        let cfg = MeasurementConfig::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let b = bell_operator_full(&ineq, &cfg).unwrap();
        let min = sym_eig_min_value(&b).unwrap();
        assert_relative_eq!(min, classical_bound(&ineq), epsilon = 1e-10);
    }

    #[test]
    fn chsh_tsirelson_eigenvalue() {
        // twice the CHSH expression; optimal angles give minimal eigenvalue -4√2
        let ineq = builtin(Builtin::DickeIneq, 2).unwrap();
        let quarter = std::f64::consts::FRAC_PI_4;
        let cfg = MeasurementConfig::new(
            vec![std::f64::consts::FRAC_PI_2, -quarter],
            vec![0.0, quarter],
        )
        .unwrap();
        let b = bell_operator_full(&ineq, &cfg).unwrap();
        let min = sym_eig_min_value(&b).unwrap();
        assert_relative_eq!(min, -4.0 * 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn block_operators_singleton_and_symmetry() {
        let cfg = MeasurementConfig::gauge_fixed(vec![0.7, 1.9, 0.2]);
        let ops = block_operators(&cfg, &[1]).unwrap();
        let m = observable_matrix(1.9);
        assert_relative_eq!((ops.one(1) - &m).amax(), 0.0);
        assert_eq!(ops.two(0, 1).amax(), 0.0);

        let ops = block_operators(&cfg, &[0, 2]).unwrap();
        for mat in ops.b_one.iter().chain(ops.b_two.iter()) {
            assert_relative_eq!((mat - mat.transpose()).amax(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn contraction_matches_full_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=7 {
            let ineq = builtin(Builtin::Ineq6, n).unwrap();
            for sig in crate::partitions::all_signatures(n, n).unwrap().iter().step_by(2) {
                let partition = canonical_partition(sig);
                let blocks: Vec<BlockState> = partition
                    .blocks()
                    .iter()
                    .map(|b| random_full_state(&mut rng, b.len()))
                    .collect();
                let state = ProductState::new(partition, blocks).unwrap();
                let theta: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
                let cfg = MeasurementConfig::gauge_fixed(theta);
                let fast = contraction_value(&ineq, &state, &cfg).unwrap();
                let b = bell_operator_full(&ineq, &cfg).unwrap();
                let psi = state.to_global_vector().unwrap();
                let slow = psi.dot(&(&b * &psi));
                assert_relative_eq!(fast, slow, epsilon = 1e-10, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn contraction_single_block_is_full_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 5;
        let ineq = builtin(Builtin::DickeIneq, n).unwrap();
        let partition = crate::partitions::Partition::whole(n);
        let state = ProductState::new(partition, vec![random_full_state(&mut rng, n)]).unwrap();
        let cfg = MeasurementConfig::gauge_fixed((0..n).map(|i| 0.3 * i as f64).collect());
        let fast = contraction_value(&ineq, &state, &cfg).unwrap();
        let b = bell_operator_full(&ineq, &cfg).unwrap();
        let psi = state.to_global_vector().unwrap();
        assert_relative_eq!(fast, psi.dot(&(&b * &psi)), epsilon = 1e-10);
    }

    #[test]
    fn dicke_isometry_columns() {
        let v = dicke_isometry(2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let expect = DMatrix::from_row_slice(4, 3, &[
            1.0, 0.0, 0.0,
            0.0, s, 0.0,
            0.0, s, 0.0,
            0.0, 0.0, 1.0,
        ]);
        assert_relative_eq!((&v - &expect).amax(), 0.0, epsilon = 1e-15);

        assert_eq!(dicke_isometry(1).unwrap(), DMatrix::identity(2, 2));

        for m in 1..=6 {
            let v = dicke_isometry(m).unwrap();
            let gram = v.transpose() * &v;
            assert_relative_eq!((gram - DMatrix::identity(m + 1, m + 1)).amax(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn collective_operators_match_conjugation() {
        let angles = (0.4, 2.2);
        for m in 1..=6 {
            let coll = collective_block_operators(angles, m).unwrap();
            let cfg = MeasurementConfig::new(vec![angles.1; m], vec![angles.0; m]).unwrap();
            let block: Vec<usize> = (0..m).collect();
            let dense = block_operators(&cfg, &block).unwrap();
            let v = dicke_isometry(m).unwrap();
            for k in 0..2 {
                let proj = v.transpose() * dense.one(k) * &v;
                assert_relative_eq!((coll.one(k) - proj).amax(), 0.0, epsilon = 1e-10);
            }
            for (k, l) in [(0, 0), (0, 1), (1, 1)] {
                let proj = v.transpose() * dense.two(k, l) * &v;
                assert_relative_eq!((coll.two(k, l) - proj).amax(), 0.0, epsilon = 1e-10);
            }
            // ℬ_kk = ℬ_k² − m·𝟙 inside the sector
            for k in 0..2 {
                let sq = coll.one(k) * coll.one(k) - DMatrix::identity(m + 1, m + 1) * m as f64;
                assert_relative_eq!((coll.two(k, k) - sq).amax(), 0.0, epsilon = 1e-10);
            }
        }
        // m = 1: ℬ_k is the observable itself, pair terms vanish
        let coll = collective_block_operators((0.0, 1.3), 1).unwrap();
        assert_relative_eq!((coll.one(1) - observable_matrix(1.3)).amax(), 0.0, epsilon = 1e-14);
        assert_eq!(coll.two(0, 1).amax(), 0.0);
    }

    #[test]
    fn dicke_block_contraction_matches_full() {
        // identical-angle blocks represented by Dicke coefficients
        let n = 6;
        let ineq = builtin(Builtin::Ineq6, n).unwrap();
        let sig = SizeSignature::new(vec![3, 3]).unwrap();
        let partition = canonical_partition(&sig);
        let c: Vec<f64> = vec![0.5, -0.5, 0.5, 0.5];
        let blocks = vec![BlockState::Dicke(c.clone()), BlockState::Dicke(c)];
        let state = ProductState::new(partition.clone(), blocks).unwrap();
        let cfg = MeasurementConfig::gauge_fixed(vec![2.61799; n]);
        let fast = contraction_value(&ineq, &state, &cfg).unwrap();

        let full_blocks: Vec<BlockState> = state
            .blocks
            .iter()
            .map(|s| BlockState::Full(block_state_full(s, 3).as_slice().to_vec()))
            .collect();
        let full_state = ProductState::new(partition, full_blocks).unwrap();
        let slow = contraction_value(&ineq, &full_state, &cfg).unwrap();
        assert_relative_eq!(fast, slow, epsilon = 1e-10);
    }

    #[test]
    fn partial_trace_basics() {
        let rho_a = DMatrix::from_row_slice(2, 2, &[0.7, 0.1, 0.1, 0.3]);
        let rho_b = DMatrix::from_row_slice(2, 2, &[0.5, -0.2, -0.2, 0.5]);
        let rho = rho_a.kronecker(&rho_b);
        let ta = partial_trace(&rho, (2, 2), Keep::A).unwrap();
        assert_relative_eq!((ta - &rho_a).amax(), 0.0, epsilon = 1e-14);
        let tb = partial_trace(&rho, (2, 2), Keep::B).unwrap();
        assert_relative_eq!((tb - &rho_b).amax(), 0.0, epsilon = 1e-14);

        // maximally entangled state reduces to 𝟙/2
        let phi = DVector::from_column_slice(&[1.0, 0.0, 0.0, 1.0]) / 2f64.sqrt();
        let rho = &phi * phi.transpose();
        let ta = partial_trace(&rho, (2, 2), Keep::A).unwrap();
        assert_relative_eq!((ta - DMatrix::identity(2, 2) * 0.5).amax(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(rho.trace(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_transpose_involution_and_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut m = DMatrix::zeros(6, 6);
        for i in 0..6 {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let g = partial_transpose(&m, (2, 3)).unwrap();
        let gg = partial_transpose(&g, (2, 3)).unwrap();
        assert_relative_eq!((gg - &m).amax(), 0.0);
        assert_relative_eq!(g.trace(), m.trace(), epsilon = 1e-14);

        // product state stays PSD under partial transpose
        let rho_a = DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.2, 0.2]);
        let rho_b = DMatrix::from_row_slice(2, 2, &[0.6, -0.3, -0.3, 0.4]);
        let rho = rho_a.kronecker(&rho_b);
        let pt = partial_transpose(&rho, (2, 2)).unwrap();
        assert!(sym_eigenvalues(&pt).unwrap()[0] > -1e-12);

        // |Φ+⟩⟨Φ+| picks up eigenvalue -1/2
        let phi = DVector::from_column_slice(&[1.0, 0.0, 0.0, 1.0]) / 2f64.sqrt();
        let rho = &phi * phi.transpose();
        let pt = partial_transpose(&rho, (2, 2)).unwrap();
        assert_relative_eq!(sym_eigenvalues(&pt).unwrap()[0], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn angle_symmetrization() {
        let mut cfg = MeasurementConfig::gauge_fixed(vec![1.0, 1.2, 3.0]);
        let spread = cfg.symmetrize_block(&[0, 1]);
        assert_relative_eq!(spread, 0.1, epsilon = 1e-12);
        assert_relative_eq!(cfg.angle(0, 1), 1.1, epsilon = 1e-12);
        assert_relative_eq!(cfg.angle(1, 1), 1.1, epsilon = 1e-12);
        assert_relative_eq!(cfg.angle(2, 1), 3.0, epsilon = 1e-12);
    }
}
