//! Dense linear-algebra helpers shared across the crate: matrix exponential
//! and principal logarithm, rank-revealing null spaces and spans, and small
//! complex utilities used by the spectral machinery.
//!
//! All matrices are `nalgebra` dynamic matrices; problem sizes stay in the
//! single digits, so algorithms favour transparency over asymptotics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::LieFlowError;
use crate::Result;

/// Relative singular-value threshold for rank decisions.
pub const RANK_REL_TOL: f64 = 1e-9;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Singular value decomposition `A = U diag(s) V^T` with `U: m x k`,
/// `V: n x k`, `k = min(m, n)`, singular values sorted descending.
///
/// One-sided Jacobi with a fixed sweep cap: slower than LAPACK but
/// convergence never stalls, which matters more here than speed at the
/// matrix sizes this crate touches.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.transpose());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    let mut work = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = work.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if scale > 0.0 {
        for _sweep in 0..64 {
            let mut rotated = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    let ci = work.column(i);
                    let cj = work.column(j);
                    let alpha = ci.dot(&ci);
                    let beta = cj.dot(&cj);
                    let gamma = ci.dot(&cj);
                    if gamma.abs() <= 1e-16 * (alpha * beta).sqrt().max(1e-300) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for r in 0..m {
                        let wi = work[(r, i)];
                        let wj = work[(r, j)];
                        work[(r, i)] = c * wi - s * wj;
                        work[(r, j)] = s * wi + c * wj;
                    }
                    for r in 0..n {
                        let vi = v[(r, i)];
                        let vj = v[(r, j)];
                        v[(r, i)] = c * vi - s * vj;
                        v[(r, j)] = s * vi + c * vj;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|c| work.column(c).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let mut u = DMatrix::<f64>::zeros(m, n);
    let mut v_sorted = DMatrix::<f64>::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (slot, &c) in order.iter().enumerate() {
        let sigma = norms[c];
        s.push(sigma);
        if sigma > 0.0 {
            let col = work.column(c) / sigma;
            u.set_column(slot, &col);
        }
        v_sorted.set_column(slot, &v.column(c));
    }
    Svd { u, s, v: v_sorted }
}

/// Operator 2-norm (largest singular value); 0 for empty matrices.
pub fn op_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    svd(a).s.first().copied().unwrap_or(0.0)
}

/// Operator infinity-norm: maximum absolute row sum.
pub fn inf_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 2-norm condition number; infinite when the smallest singular value is 0.
pub fn cond2(a: &DMatrix<f64>) -> f64 {
    let s = svd(a).s;
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => max / min,
        _ => f64::INFINITY,
    }
}

/// Matrix exponential by scaling and squaring with a truncated series.
///
/// The scaled norm is kept below 1/2, where the series truncation error is
/// far below f64 resolution after ~20 terms.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm expects a square matrix");
    let norm = inf_norm(a);
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let b = a / 2f64.powi(s as i32);

    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..=24 {
        term = (&term * &b) / k as f64;
        result += &term;
        if inf_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// Principal square root via the Denman-Beavers iteration.
fn sqrtm_db(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..60 {
        let y_inv = y
            .clone()
            .try_inverse()
            .ok_or_else(|| LieFlowError::Degeneracy("singular iterate in matrix sqrt".into()))?;
        let z_inv = z
            .clone()
            .try_inverse()
            .ok_or_else(|| LieFlowError::Degeneracy("singular iterate in matrix sqrt".into()))?;
        let y_next = (&y + z_inv) * 0.5;
        let z_next = (&z + y_inv) * 0.5;
        let delta = inf_norm(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if delta < 1e-15 * (1.0 + inf_norm(&y)) {
            return Ok(y);
        }
    }
    Err(LieFlowError::NoConvergence("matrix square root".into()))
}

/// Principal matrix logarithm by inverse scaling and squaring with the
/// Gregory series. Callers gate arguments to a neighbourhood of the
/// identity; far inputs are rejected.
pub fn logm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "logm expects a square matrix");
    let eye = DMatrix::<f64>::identity(n, n);
    if (a - &eye).norm() > 0.9 {
        return Err(LieFlowError::OutOfWindow(format!(
            "matrix too far from identity for principal log (|A - I|_F = {:.3})",
            (a - &eye).norm()
        )));
    }
    let mut b = a.clone();
    let mut s: i32 = 0;
    while (&b - &eye).norm() > 0.25 {
        b = sqrtm_db(&b)?;
        s += 1;
        if s > 20 {
            return Err(LieFlowError::NoConvergence("matrix log scaling".into()));
        }
    }
    // log B = 2 * sum_{k odd} G^k / k with G = (B - I)(B + I)^{-1}.
    let g = (&b - &eye)
        * (&b + &eye)
            .try_inverse()
            .ok_or_else(|| LieFlowError::Degeneracy("B + I singular in matrix log".into()))?;
    let g2 = &g * &g;
    let mut term = g.clone();
    let mut acc = g.clone();
    let mut k = 1u32;
    loop {
        term = &term * &g2;
        k += 2;
        let incr = &term / k as f64;
        acc += &incr;
        if inf_norm(&incr) < 1e-18 || k > 99 {
            break;
        }
    }
    Ok(acc * 2f64.powi(s + 1))
}

/// Orthonormal basis of the column space of `a`, as matrix columns.
/// Rank is decided at `rel_tol` times the largest singular value.
pub fn column_space_basis(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let m = a.nrows();
    if a.ncols() == 0 || a.iter().all(|x| *x == 0.0) {
        return DMatrix::<f64>::zeros(m, 0);
    }
    let f = svd(a);
    let tol = rel_tol * f.s[0];
    let keep = f.s.iter().take_while(|&&s| s > tol).count();
    f.u.columns(0, keep).into_owned()
}

/// Orthonormal basis of the null space of `a`, as matrix columns.
pub fn null_space(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    null_space_with_floor(a, rel_tol, 0.0)
}

/// Null space with an absolute singular-value floor in addition to the
/// relative cut. Needed for powered shifted matrices `(D - c I)^m`, where
/// the whole spectrum collapses and a purely relative cut sees full rank.
pub fn null_space_with_floor(a: &DMatrix<f64>, rel_tol: f64, abs_floor: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.iter().all(|x| *x == 0.0) {
        return DMatrix::<f64>::identity(n, n);
    }
    // For wide matrices pad with zero rows: the padded SVD then carries a
    // complete set of right singular vectors.
    let work = if a.nrows() < n {
        let mut padded = DMatrix::<f64>::zeros(n, n);
        padded.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let f = svd(&work);
    let tol = (rel_tol * f.s[0]).max(abs_floor);
    let rank = f.s.iter().take_while(|&&s| s > tol).count();
    f.v.columns(rank, n - rank).into_owned()
}

/// Rank of `a` at the shared relative threshold.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 || a.iter().all(|x| *x == 0.0) {
        return 0;
    }
    let s = svd(a).s;
    let tol = rel_tol * s[0];
    s.iter().filter(|&&x| x > tol).count()
}

/// Realification of a complex matrix: `M = A + iB` maps to
/// `[[A, -B], [B, A]]` acting on stacked real/imaginary parts.
fn realify(m: &CMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::<f64>::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
            out[(i + r, j + c)] = z.re;
        }
    }
    out
}

/// Orthonormal (over C) basis of the null space of a complex matrix.
///
/// Computed through the realified operator followed by complex
/// Gram-Schmidt selection; the realified null space has twice the complex
/// dimension because multiplication by `i` preserves it.
pub fn null_space_complex(m: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    null_space_complex_with_floor(m, rel_tol, 0.0)
}

/// Complex null space with an absolute singular-value floor, as in
/// [`null_space_with_floor`].
pub fn null_space_complex_with_floor(m: &CMatrix, rel_tol: f64, abs_floor: f64) -> Vec<CVector> {
    let n = m.ncols();
    let real_null = null_space_with_floor(&realify(m), rel_tol, abs_floor);
    let mut basis: Vec<CVector> = Vec::new();
    for col in 0..real_null.ncols() {
        let v = real_null.column(col);
        let mut w = CVector::zeros(n);
        for i in 0..n {
            w[i] = Complex64::new(v[i], v[i + n]);
        }
        // Project out the span of the vectors kept so far.
        for b in &basis {
            let coeff: Complex64 = b.iter().zip(w.iter()).map(|(a, x)| a.conj() * x).sum();
            w -= b * coeff;
        }
        let norm = w.norm();
        if norm > 1e-8 {
            basis.push(w / Complex64::new(norm, 0.0));
        }
    }
    basis
}

/// Inverse of a complex square matrix via LU.
pub fn complex_inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| LieFlowError::Degeneracy("singular complex matrix".into()))
}

/// Real Schur form `A = Q T Q^T` with `Q` orthogonal and `T` quasi
/// upper triangular (diagonal blocks of size 1 or 2).
///
/// The Francis iteration can stall outright on some matrices (near-axis
/// rotation generators among them). Conjugating by a fixed orthogonal
/// matrix leaves the spectrum unchanged and reshuffles the entries enough
/// for the iteration to escape; two fixed rotations cover the stall cases.
pub fn real_schur(a: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    // The QR iteration rejects the zero matrix outright.
    if inf_norm(a) == 0.0 {
        return Ok((DMatrix::identity(n, n), a.clone()));
    }
    // Repeated eigenvalues stall the QR iteration at machine epsilon;
    // 1e-12 still leaves eigenvalues far tighter than any typing check.
    if let Some(schur) = nalgebra::Schur::try_new(a.clone(), 1e-12, 20_000) {
        let (q, t) = schur.unpack();
        return Ok((q, t));
    }
    for salt in 0..2u64 {
        let seed = DMatrix::from_fn(n, n, |i, j| {
            ((i as u64 * 5 + j as u64 * 11 + 2 + salt * 17) as f64).sin()
        });
        let fixed = seed.qr().q();
        let b = fixed.transpose() * a * &fixed;
        if let Some(schur) = nalgebra::Schur::try_new(b, 1e-12, 20_000) {
            let (q, t) = schur.unpack();
            return Ok((&fixed * q, t));
        }
    }
    Err(LieFlowError::NoConvergence("Schur decomposition".into()))
}

/// Diagonal blocks of a quasi upper triangular matrix as `(offset, size)`
/// pairs; a subdiagonal entry at roundoff scale counts as zero.
pub fn quasi_diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let thresh = 32.0 * f64::EPSILON * (1.0 + inf_norm(t));
    let mut blocks = Vec::new();
    let mut at = 0;
    while at < n {
        if at + 1 < n && t[(at + 1, at)].abs() > thresh {
            blocks.push((at, 2));
            at += 2;
        } else {
            blocks.push((at, 1));
            at += 1;
        }
    }
    blocks
}

/// Eigenvalues of a 1x1 or 2x2 quasi triangular diagonal block.
pub fn block_eigenvalues(t: &DMatrix<f64>, offset: usize, size: usize) -> Vec<Complex64> {
    if size == 1 {
        return vec![Complex64::new(t[(offset, offset)], 0.0)];
    }
    let (a, b) = (t[(offset, offset)], t[(offset, offset + 1)]);
    let (c, d) = (t[(offset + 1, offset)], t[(offset + 1, offset + 1)]);
    let mean = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        vec![Complex64::new(mean + s, 0.0), Complex64::new(mean - s, 0.0)]
    } else {
        let s = (-disc).sqrt();
        vec![Complex64::new(mean, s), Complex64::new(mean, -s)]
    }
}

/// Eigenvalues of a real square matrix as complex numbers, via the real
/// Schur form with a bounded iteration count.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if inf_norm(a) == 0.0 {
        return Ok(vec![Complex64::new(0.0, 0.0); a.nrows()]);
    }
    let (_, t) = real_schur(a)?;
    let mut evs = Vec::with_capacity(a.nrows());
    for (offset, size) in quasi_diagonal_blocks(&t) {
        evs.extend(block_eigenvalues(&t, offset, size));
    }
    Ok(evs)
}

/// Largest eigenvalue magnitude.
pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}
