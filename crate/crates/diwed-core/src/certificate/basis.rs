//! Operator bases for the marginal-problem relaxation.
//!
//! Each block of the partition gets an orthonormal basis of real operators
//! on its `2^m`-dimensional space, split into a symmetric list (element 0 is
//! always `𝟙/√2^m`) and an antisymmetric list. Two flavors exist:
//!
//! - `full`: every real symmetric/antisymmetric matrix (small blocks);
//! - `reduced`: only operators invariant under qubit permutations within the
//!   block, spanned by symmetrized words over `{𝟙, σ_x, σ_z, iσ_y}`. Valid
//!   whenever all sites of the block share their measurement settings.
//!
//! For the positive-semidefiniteness tests the reduced flavor also carries
//! the spin-sector compressions: a permutation-invariant operator acts as
//! `⊕_s A_s ⊗ 𝟙` in the coupled basis, so PSD of the `2^m` matrix is PSD of
//! one small block per total-spin sector. Sector frames are built by solving
//! for highest-weight states and laddering down.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Letters of the operator alphabet. `YT = iσ_y` is the real antisymmetric
/// generator; a word is symmetric iff its `YT` count is even.
const LETTERS: [[[f64; 2]; 2]; 4] = [
    [[1.0, 0.0], [0.0, 1.0]],   // I
    [[0.0, 1.0], [1.0, 0.0]],   // X
    [[1.0, 0.0], [0.0, -1.0]],  // Z
    [[0.0, 1.0], [-1.0, 0.0]],  // iY
];

/// One block's basis and sector data.
#[derive(Debug, Clone)]
pub struct BlockBasis {
    pub m: usize,
    pub dim: usize,
    /// Orthonormal symmetric elements; `sym[0] = 𝟙/√dim`.
    pub sym: Vec<DMatrix<f64>>,
    /// Orthonormal antisymmetric elements.
    pub asym: Vec<DMatrix<f64>>,
    /// Sector frames `P_s` (`dim × d_s`); full flavor has one trivial sector.
    pub sectors: Vec<DMatrix<f64>>,
    /// `comp_sym[a][s] = P_sᵀ sym[a] P_s`
    pub comp_sym: Vec<Vec<DMatrix<f64>>>,
    pub comp_asym: Vec<Vec<DMatrix<f64>>>,
    pub reduced: bool,
}

impl BlockBasis {
    /// `√(2^m)`, the trace of the normalized identity element.
    pub fn trace_scale(&self) -> f64 {
        (self.dim as f64).sqrt()
    }

    pub fn sector_dims(&self) -> Vec<usize> {
        self.sectors.iter().map(|p| p.ncols()).collect()
    }
}

/// Full real symmetric + antisymmetric basis (one trivial sector).
pub fn full_basis(m: usize) -> Result<BlockBasis> {
    if m > 6 {
        return Err(Error::DimensionBudget(format!(
            "full operator basis gated at blocks of ≤ 6 sites, got {m}"
        )));
    }
    let dim = 1usize << m;
    let d = dim as f64;
    let mut sym = Vec::with_capacity(dim * (dim + 1) / 2);
    sym.push(DMatrix::identity(dim, dim) / d.sqrt());
    // traceless diagonal completion (generalized Gell-Mann diagonals)
    for k in 1..dim {
        let mut mat = DMatrix::zeros(dim, dim);
        let norm = (k as f64 * (k as f64 + 1.0)).sqrt();
        for i in 0..k {
            mat[(i, i)] = 1.0 / norm;
        }
        mat[(k, k)] = -(k as f64) / norm;
        sym.push(mat);
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut mat = DMatrix::zeros(dim, dim);
            mat[(i, j)] = inv_sqrt2;
            mat[(j, i)] = inv_sqrt2;
            sym.push(mat);
        }
    }
    let mut asym = Vec::with_capacity(dim * (dim - 1) / 2);
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut mat = DMatrix::zeros(dim, dim);
            mat[(i, j)] = inv_sqrt2;
            mat[(j, i)] = -inv_sqrt2;
            asym.push(mat);
        }
    }
    let sectors = vec![DMatrix::identity(dim, dim)];
    let comp_sym = sym.iter().map(|b| vec![b.clone()]).collect();
    let comp_asym = asym.iter().map(|b| vec![b.clone()]).collect();
    Ok(BlockBasis { m, dim, sym, asym, sectors, comp_sym, comp_asym, reduced: false })
}

/// Permutation-invariant basis with spin-sector compressions.
pub fn reduced_basis(m: usize) -> Result<BlockBasis> {
    if m > 8 {
        return Err(Error::DimensionBudget(format!(
            "reduced operator basis gated at blocks of ≤ 8 sites, got {m}"
        )));
    }
    let dim = 1usize << m;
    let mut sym = Vec::new();
    let mut asym = Vec::new();
    // identity orbit first
    sym.push(DMatrix::identity(dim, dim) / (dim as f64).sqrt());
    for counts in letter_counts(m) {
        let (ni, _nx, _nz, ny) = counts;
        if ni == m {
            continue; // already placed
        }
        let mat = orbit_matrix(m, counts);
        if ny % 2 == 0 {
            sym.push(mat);
        } else {
            asym.push(mat);
        }
    }
    let sectors = sector_frames(m)?;
    let compress = |mats: &[DMatrix<f64>]| -> Vec<Vec<DMatrix<f64>>> {
        mats.iter()
            .map(|b| sectors.iter().map(|p| p.transpose() * b * p).collect())
            .collect()
    };
    let comp_sym = compress(&sym);
    let comp_asym = compress(&asym);
    Ok(BlockBasis { m, dim, sym, asym, sectors, comp_sym, comp_asym, reduced: true })
}

/// All `(n_I, n_X, n_Z, n_Y)` with `Σ = m`.
fn letter_counts(m: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for ni in 0..=m {
        for nx in 0..=(m - ni) {
            for nz in 0..=(m - ni - nx) {
                out.push((ni, nx, nz, m - ni - nx - nz));
            }
        }
    }
    out
}

/// Normalized sum over all arrangements of the letter multiset.
fn orbit_matrix(m: usize, (ni, nx, nz, ny): (usize, usize, usize, usize)) -> DMatrix<f64> {
    let dim = 1usize << m;
    let mut acc = DMatrix::zeros(dim, dim);
    let mut word = vec![0usize; m];
    let mut remaining = [ni, nx, nz, ny];
    let mut orbit_size = 0usize;
    fn rec(
        pos: usize,
        m: usize,
        word: &mut Vec<usize>,
        remaining: &mut [usize; 4],
        acc: &mut DMatrix<f64>,
        orbit_size: &mut usize,
    ) {
        if pos == m {
            add_word(word, acc);
            *orbit_size += 1;
            return;
        }
        for letter in 0..4 {
            if remaining[letter] > 0 {
                remaining[letter] -= 1;
                word[pos] = letter;
                rec(pos + 1, m, word, remaining, acc, orbit_size);
                remaining[letter] += 1;
            }
        }
    }
    rec(0, m, &mut word, &mut remaining, &mut acc, &mut orbit_size);
    acc / ((orbit_size as f64) * dim as f64).sqrt()
}

/// Adds one Kronecker word (a signed permutation matrix) entrywise.
fn add_word(word: &[usize], acc: &mut DMatrix<f64>) {
    let m = word.len();
    let dim = 1usize << m;
    for row in 0..dim {
        let mut col = 0usize;
        let mut val = 1.0;
        for (site, &letter) in word.iter().enumerate() {
            let bit = (row >> (m - 1 - site)) & 1;
            let l = &LETTERS[letter];
            // each letter has exactly one nonzero per row
            let (c, v) = if l[bit][0] != 0.0 { (0, l[bit][0]) } else { (1, l[bit][1]) };
            col |= c << (m - 1 - site);
            val *= v;
        }
        acc[(row, col)] += val;
    }
}

// ---------------------------------------------------------------------------
// spin sectors
// ---------------------------------------------------------------------------

/// Collective lowering operator `Σ_i |1⟩⟨0|_i` applied to a register vector.
fn apply_lower(v: &DVector<f64>, m: usize) -> DVector<f64> {
    let dim = 1usize << m;
    let mut out = DVector::zeros(dim);
    for idx in 0..dim {
        let x = v[idx];
        if x == 0.0 {
            continue;
        }
        for site in 0..m {
            let mask = 1usize << (m - 1 - site);
            if idx & mask == 0 {
                out[idx | mask] += x;
            }
        }
    }
    out
}

/// One frame `P_s` per total-spin sector `s = m/2, m/2-1, ...`; columns are
/// `|s, m_z⟩` for `m_z = s .. -s` from a fixed multiplicity copy.
fn sector_frames(m: usize) -> Result<Vec<DMatrix<f64>>> {
    let dim = 1usize << m;
    // index maps per Hamming weight
    let mut by_weight: Vec<Vec<usize>> = vec![Vec::new(); m + 1];
    for idx in 0..dim {
        by_weight[(idx as u32).count_ones() as usize].push(idx);
    }
    let mut frames = Vec::new();
    let mut s2 = m; // 2s
    loop {
        let w = (m - s2) / 2; // excitations of the highest-weight space
        // raising operator block: weight w → weight w-1
        let hw = if w == 0 {
            let mut v = DVector::zeros(dim);
            v[0] = 1.0;
            v
        } else {
            let rows = &by_weight[w - 1];
            let cols = &by_weight[w];
            let mut jplus = DMatrix::zeros(rows.len(), cols.len());
            for (cj, &cidx) in cols.iter().enumerate() {
                // σ_+ = |0⟩⟨1| per site: clearing one set bit raises J_z
                for site in 0..m {
                    let mask = 1usize << (m - 1 - site);
                    if cidx & mask != 0 {
                        let ridx = cidx & !mask;
                        let ri = rows.binary_search(&ridx).expect("weight bookkeeping");
                        jplus[(ri, cj)] += 1.0;
                    }
                }
            }
            // highest-weight vectors span the kernel of J_+ on this weight
            // space; any one copy serves, they carry identical sector action.
            // The kernel is read off the Gram matrix's null eigenvector.
            let gram = jplus.transpose() * &jplus;
            let (min_eig, kernel_vec) = crate::linalg::sym_eig_min(&gram)?;
            if min_eig.abs() > 1e-8 * (m * m) as f64 {
                return Err(Error::Numerical(format!(
                    "no highest-weight state for 2s={s2} at m={m}"
                )));
            }
            let mut v = DVector::zeros(dim);
            for (ci, &cidx) in by_weight[w].iter().enumerate() {
                v[cidx] = kernel_vec[ci];
            }
            v
        };
        let mut hw = hw;
        hw /= hw.norm();
        let d_s = s2 + 1;
        let mut frame = DMatrix::zeros(dim, d_s);
        frame.set_column(0, &hw);
        let s = s2 as f64 / 2.0;
        let mut cur = hw;
        for t in 1..d_s {
            let mz = s - (t - 1) as f64;
            let coeff = (s * (s + 1.0) - mz * (mz - 1.0)).sqrt();
            cur = apply_lower(&cur, m) / coeff;
            frame.set_column(t, &cur);
        }
        frames.push(frame);
        if s2 < 2 {
            break;
        }
        s2 -= 2;
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::frob_dot;
    use approx::assert_relative_eq;

    fn orthonormal(mats: &[DMatrix<f64>]) {
        for (i, a) in mats.iter().enumerate() {
            for (j, b) in mats.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(frob_dot(a, b), want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn full_basis_counts_and_orthonormality() {
        let b = full_basis(2).unwrap();
        assert_eq!(b.sym.len(), 10);
        assert_eq!(b.asym.len(), 6);
        orthonormal(&b.sym);
        orthonormal(&b.asym);
        assert_relative_eq!(b.sym[0].trace(), b.trace_scale(), epsilon = 1e-14);
    }

    #[test]
    fn reduced_basis_counts() {
        // Σ_s (2s+1)² parameters split into even/odd word parity
        for (m, want_sym, want_asym) in [(1, 3, 1), (2, 7, 3), (3, 13, 7), (4, 22, 13)] {
            let b = reduced_basis(m).unwrap();
            assert_eq!(b.sym.len(), want_sym, "m={m}");
            assert_eq!(b.asym.len(), want_asym, "m={m}");
            orthonormal(&b.sym);
            orthonormal(&b.asym);
            let total: usize = b.sector_dims().iter().map(|d| d * d).sum();
            assert_eq!(total, want_sym + want_asym);
        }
    }

    #[test]
    fn reduced_elements_are_permutation_invariant() {
        let b = reduced_basis(3).unwrap();
        // swap of sites 0 and 1 as a permutation on basis indices
        let dim = 8;
        let swap = |idx: usize| -> usize {
            let b0 = (idx >> 2) & 1;
            let b1 = (idx >> 1) & 1;
            (idx & 1) | (b0 << 1) | (b1 << 2)
        };
        for mat in b.sym.iter().chain(&b.asym) {
            for r in 0..dim {
                for c in 0..dim {
                    assert_relative_eq!(mat[(r, c)], mat[(swap(r), swap(c))], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn sector_frames_are_isometries_spanning_invariants() {
        for m in 1..=5 {
            let frames = sector_frames(m).unwrap();
            let mut total = 0;
            for p in &frames {
                let gram = p.transpose() * p;
                assert_relative_eq!(
                    (gram - DMatrix::identity(p.ncols(), p.ncols())).amax(),
                    0.0,
                    epsilon = 1e-10
                );
                total += p.ncols();
            }
            // one copy per sector: dims are 2s+1 for s = m/2, m/2-1, ...
            let expect: usize = (0..=m).rev().step_by(2).map(|s2| s2 + 1).sum();
            assert_eq!(total, expect);
            // leading frame is the symmetric (Dicke) sector
            let dicke = crate::qops::dicke_isometry(m).unwrap();
            let overlap = frames[0].transpose() * &dicke;
            // same subspace: offdiagonal-free orthogonal overlap
            let gram = &overlap * overlap.transpose();
            assert_relative_eq!(
                (gram - DMatrix::identity(m + 1, m + 1)).amax(),
                0.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn compression_preserves_psd_threshold() {
        // a PI operator is PSD iff all its sector blocks are
        let m = 3;
        let b = reduced_basis(m).unwrap();
        // random PI symmetric operator from the basis
        let mut op = DMatrix::zeros(b.dim, b.dim);
        let mut seed = 1u64;
        for mat in &b.sym {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            let c = ((seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            op += mat * c;
        }
        let full_min = crate::linalg::sym_eig_min_value(&op).unwrap();
        let mut sector_min = f64::INFINITY;
        for p in &b.sectors {
            let comp = p.transpose() * &op * p;
            sector_min = sector_min.min(crate::linalg::sym_eig_min_value(&comp).unwrap());
        }
        assert_relative_eq!(full_min, sector_min, epsilon = 1e-9);
    }
}
