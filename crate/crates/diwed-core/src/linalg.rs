//! Internal dense/iterative linear-algebra helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Fixes the overall sign of an eigenvector deterministically: the first
/// component of magnitude above `1e-12 · ‖v‖_∞` is made positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if scale == 0.0 {
        return;
    }
    for &x in v.iter() {
        if x.abs() > 1e-12 * scale {
            if x < 0.0 {
                *v *= -1.0;
            }
            return;
        }
    }
}

/// Smallest eigenpair of a dense symmetric matrix.
pub fn sym_eig_min(mat: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let eig = mat
        .clone()
        .try_symmetric_eigen(1e-14, 10_000)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut best = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut v = eig.eigenvectors.column(best).into_owned();
    fix_sign(&mut v);
    Ok((eig.eigenvalues[best], v))
}

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn sym_eigenvalues(mat: &DMatrix<f64>) -> Result<Vec<f64>> {
    let eig = mat
        .clone()
        .try_symmetric_eigen(1e-14, 10_000)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver did not converge".into()))?;
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

pub fn sym_eig_min_value(mat: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eigenvalues(mat)?[0])
}

/// Smallest eigenpair of a symmetric operator given only through its action,
/// via Lanczos with full reorthogonalization and restarts.
///
/// `op_norm_hint` scales the residual test; pass an estimate of `‖A‖`.
pub fn lanczos_min_eig(
    apply: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    dim: usize,
    start: &DVector<f64>,
    op_norm_hint: f64,
    tol: f64,
) -> Result<(f64, DVector<f64>)> {
    assert_eq!(start.len(), dim);
    let max_basis = 80.min(dim);
    let max_restarts = 60;

    let mut q0 = start.clone();
    if q0.norm() < 1e-300 {
        q0 = DVector::from_element(dim, 1.0);
    }
    q0 /= q0.norm();

    let mut current = q0;
    let mut last_value = f64::INFINITY;
    for _ in 0..max_restarts {
        let mut basis: Vec<DVector<f64>> = vec![current.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        for j in 0..max_basis {
            let mut w = apply(&basis[j]);
            let alpha = basis[j].dot(&w);
            alphas.push(alpha);
            w -= &basis[j] * alpha;
            if j > 0 {
                let beta_prev = betas[j - 1];
                w -= &basis[j - 1] * beta_prev;
            }
            // full reorthogonalization, twice for good measure
            for _ in 0..2 {
                for q in &basis {
                    let c = q.dot(&w);
                    w -= q * c;
                }
            }
            let beta = w.norm();
            if beta < 1e-13 * op_norm_hint.max(1.0) || j + 1 == max_basis || basis.len() == dim {
                break;
            }
            betas.push(beta);
            basis.push(w / beta);
        }
        let m = alphas.len();
        let mut tri = DMatrix::zeros(m, m);
        for i in 0..m {
            tri[(i, i)] = alphas[i];
            if i + 1 < m {
                tri[(i, i + 1)] = betas[i];
                tri[(i + 1, i)] = betas[i];
            }
        }
        let (val, tvec) = sym_eig_min(&tri)?;
        let mut ritz = DVector::zeros(dim);
        for (i, q) in basis.iter().enumerate() {
            ritz += q * tvec[i];
        }
        ritz /= ritz.norm();
        let residual = (apply(&ritz) - &ritz * val).norm();
        if residual <= tol * op_norm_hint.max(1.0) {
            fix_sign(&mut ritz);
            return Ok((val, ritz));
        }
        if (last_value - val).abs() <= 1e-15 * op_norm_hint.max(1.0) && residual <= 1e3 * tol {
            fix_sign(&mut ritz);
            return Ok((val, ritz));
        }
        last_value = val;
        current = ritz;
    }
    Err(Error::Numerical("Lanczos iteration did not converge".into()))
}

/// Frobenius inner product of symmetric matrices.
pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Symmetrizes in place: `m ← (m + mᵀ)/2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dense_min_eig() {
        let m = DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 0.0, 5.0]);
        let (val, vec) = sym_eig_min(&m).unwrap();
        assert_relative_eq!(val, -3.0);
        assert_relative_eq!(vec[0].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lanczos_matches_dense() {
        // deterministic pseudo-random symmetric matrix
        let n = 60;
        let mut state = 1u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let dense = sym_eig_min_value(&m).unwrap();
        let start = DVector::from_fn(n, |i, _| 1.0 + (i as f64) * 0.01);
        let apply = |v: &DVector<f64>| &m * v;
        let (val, vec) = lanczos_min_eig(&apply, n, &start, m.norm(), 1e-11).unwrap();
        assert_relative_eq!(val, dense, epsilon = 1e-9);
        assert_relative_eq!((&m * &vec - &vec * val).norm(), 0.0, epsilon = 1e-8);
    }
}
