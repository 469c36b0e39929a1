//! Additive Jordan splitting of a real matrix into commuting hyperbolic,
//! elliptic, and nilpotent parts.
//!
//! The splitting is computed from a real Schur form. Eigenvalues are
//! clustered in the closed upper half plane so conjugate pairs and the
//! roundoff splitting of repeated eigenvalues land in one cluster; the
//! quasi triangular factor is reordered by orthogonal block swaps until
//! clusters are contiguous, then cross-cluster coupling is removed with
//! Sylvester solves. Cluster representatives come from block traces, which
//! stay accurate even when the individual computed eigenvalues of a
//! defective block spread like a root of the working precision.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::LieFlowError;
use crate::linalg;
use crate::tol;
use crate::Result;

/// One eigenvalue cluster and its real invariant subspace.
#[derive(Debug, Clone)]
pub struct SpectralCluster {
    /// Real part of the cluster representative.
    pub re: f64,
    /// Imaginary part of the representative; 0 for real clusters.
    pub im: f64,
    /// Real dimension of the invariant subspace.
    pub multiplicity: usize,
    /// Raw eigenvalues assigned to this cluster.
    pub members: Vec<Complex64>,
    /// Orthonormal real basis of the invariant subspace (dim x mult).
    pub basis: DMatrix<f64>,
}

impl SpectralCluster {
    pub fn is_real(&self) -> bool {
        self.im == 0.0
    }
}

/// Clustered spectrum of a real matrix with invariant subspace bases.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub clusters: Vec<SpectralCluster>,
    /// Clustering radius used.
    pub cluster_tol: f64,
    /// Set when two clusters sit within twice the clustering radius of
    /// each other, i.e. the grouping is close to flipping.
    pub ambiguous: bool,
}

/// Commuting additive splitting `D = H + E + N`.
#[derive(Debug, Clone)]
pub struct JordanDecomposition {
    /// Semisimple part with real spectrum.
    pub hyperbolic: DMatrix<f64>,
    /// Semisimple part with purely imaginary spectrum.
    pub elliptic: DMatrix<f64>,
    /// Nilpotent part.
    pub nilpotent: DMatrix<f64>,
    pub spectral: SpectralData,
}

/// Coarse type of a matrix under the additive splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivationClass {
    Hyperbolic,
    Elliptic,
    Nilpotent,
    Mixed,
}

impl std::fmt::Display for DerivationClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DerivationClass::Hyperbolic => "hyperbolic",
            DerivationClass::Elliptic => "elliptic",
            DerivationClass::Nilpotent => "nilpotent",
            DerivationClass::Mixed => "mixed",
        };
        f.write_str(s)
    }
}

/// Solves `A X - X B = C` through the Kronecker system; `A` and `B` must
/// have disjoint spectra for the system to be regular.
fn solve_sylvester(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p = a.nrows();
    let q = b.nrows();
    let mut m = DMatrix::<f64>::zeros(p * q, p * q);
    for col in 0..q {
        m.view_mut((col * p, col * p), (p, p)).copy_from(a);
    }
    for i in 0..q {
        for j in 0..q {
            let coef = b[(j, i)];
            for k in 0..p {
                m[(i * p + k, j * p + k)] -= coef;
            }
        }
    }
    let rhs = DVector::from_column_slice(c.as_slice());
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| LieFlowError::Degeneracy("Sylvester system is singular".into()))?;
    Ok(DMatrix::from_column_slice(p, q, sol.as_slice()))
}

/// Extends the independent columns of `z` to an orthonormal basis; the
/// first `z.ncols()` output columns span the column space of `z`.
fn orthonormal_completion(z: &DMatrix<f64>) -> DMatrix<f64> {
    let n = z.nrows();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut candidates: Vec<DVector<f64>> =
        (0..z.ncols()).map(|c| z.column(c).into_owned()).collect();
    for k in 0..n {
        candidates.push(DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 }));
    }
    for cand in candidates {
        if cols.len() == n {
            break;
        }
        let mut v = cand;
        for _ in 0..2 {
            for b in &cols {
                let coeff = b.dot(&v);
                v -= b * coeff;
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    let mut g = DMatrix::<f64>::zeros(n, n);
    for (c, v) in cols.iter().enumerate() {
        g.set_column(c, v);
    }
    g
}

/// One diagonal block of the working quasi triangular factor.
#[derive(Debug, Clone)]
struct SchurBlock {
    offset: usize,
    size: usize,
    evs: Vec<Complex64>,
    cluster: usize,
}

/// Contiguous cluster segment of the adapted form.
#[derive(Debug, Clone)]
struct Segment {
    offset: usize,
    size: usize,
    re: f64,
    im: f64,
    members: Vec<Complex64>,
    block: DMatrix<f64>,
}

/// Block diagonal similarity adapted to the eigenvalue clusters:
/// `D = P (block diag) P^{-1}` with one block per cluster.
struct AdaptedForm {
    p: DMatrix<f64>,
    p_inv: DMatrix<f64>,
    segments: Vec<Segment>,
    cluster_tol: f64,
    ambiguous: bool,
}

/// Splits 2x2 diagonal blocks with real eigenvalues into 1x1 blocks so
/// every remaining 2x2 block carries a conjugate pair.
fn split_real_pair_blocks(t: &mut DMatrix<f64>, q: &mut DMatrix<f64>) -> Result<()> {
    let scale = 1.0 + linalg::inf_norm(t);
    for (offset, size) in linalg::quasi_diagonal_blocks(t) {
        if size != 2 {
            continue;
        }
        let (a, b) = (t[(offset, offset)], t[(offset, offset + 1)]);
        let (c, d) = (t[(offset + 1, offset)], t[(offset + 1, offset + 1)]);
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        if disc < 0.0 {
            continue;
        }
        let lambda = 0.5 * (a + d) + disc.sqrt();
        let v_row = DVector::from_vec(vec![b, lambda - a]);
        let v_col = DVector::from_vec(vec![lambda - d, c]);
        let v = if v_row.norm() >= v_col.norm() { v_row } else { v_col };
        let norm = v.norm();
        if norm <= f64::EPSILON * scale {
            return Err(LieFlowError::Degeneracy(
                "degenerate rotation while splitting a real pair block".into(),
            ));
        }
        let (c0, s0) = (v[0] / norm, v[1] / norm);
        let g = DMatrix::from_row_slice(2, 2, &[c0, -s0, s0, c0]);
        let rows = t.rows(offset, 2).into_owned();
        t.rows_mut(offset, 2).copy_from(&(g.transpose() * rows));
        let cols = t.columns(offset, 2).into_owned();
        t.columns_mut(offset, 2).copy_from(&(cols * &g));
        let qcols = q.columns(offset, 2).into_owned();
        q.columns_mut(offset, 2).copy_from(&(qcols * &g));
        let leak = t[(offset + 1, offset)].abs();
        if leak > 1e-8 * scale {
            return Err(LieFlowError::Degeneracy(format!(
                "real pair block failed to split (residual {leak:.3e})"
            )));
        }
        t[(offset + 1, offset)] = 0.0;
    }
    Ok(())
}

/// Swaps two adjacent diagonal blocks with an orthogonal similarity. The
/// trailing block's spectrum moves to the front.
fn swap_adjacent_blocks(
    t: &mut DMatrix<f64>,
    q: &mut DMatrix<f64>,
    offset: usize,
    first: usize,
    second: usize,
) -> Result<()> {
    let s = first + second;
    let scale = 1.0 + linalg::inf_norm(t);
    let a11 = t.view((offset, offset), (first, first)).into_owned();
    let a12 = t.view((offset, offset + first), (first, second)).into_owned();
    let a22 = t
        .view((offset + first, offset + first), (second, second))
        .into_owned();
    let x = solve_sylvester(&a11, &a22, &a12)?;
    let mut z = DMatrix::<f64>::zeros(s, second);
    z.view_mut((0, 0), (first, second)).copy_from(&(-&x));
    z.view_mut((first, 0), (second, second))
        .copy_from(&DMatrix::identity(second, second));
    let g = orthonormal_completion(&z);

    let rows = t.rows(offset, s).into_owned();
    t.rows_mut(offset, s).copy_from(&(g.transpose() * rows));
    let cols = t.columns(offset, s).into_owned();
    t.columns_mut(offset, s).copy_from(&(cols * &g));
    let qcols = q.columns(offset, s).into_owned();
    q.columns_mut(offset, s).copy_from(&(qcols * &g));

    let leak = linalg::inf_norm(&t.view((offset + second, offset), (first, second)).into_owned());
    if leak > 1e-8 * scale {
        return Err(LieFlowError::Degeneracy(format!(
            "block swap failed to deflate (residual {leak:.3e})"
        )));
    }
    t.view_mut((offset + second, offset), (first, second)).fill(0.0);
    Ok(())
}

/// Computes the cluster-adapted block diagonal similarity of `d`.
fn adapted_form(d: &DMatrix<f64>) -> Result<AdaptedForm> {
    let n = d.nrows();
    if n != d.ncols() {
        return Err(LieFlowError::DimensionMismatch("square matrix required".into()));
    }
    if n == 0 {
        return Ok(AdaptedForm {
            p: DMatrix::identity(0, 0),
            p_inv: DMatrix::identity(0, 0),
            segments: Vec::new(),
            cluster_tol: tol::CLUSTER_ABS_FLOOR,
            ambiguous: false,
        });
    }

    let (mut q, mut t) = linalg::real_schur(d)?;
    split_real_pair_blocks(&mut t, &mut q)?;

    let mut blocks: Vec<SchurBlock> = linalg::quasi_diagonal_blocks(&t)
        .into_iter()
        .map(|(offset, size)| SchurBlock {
            offset,
            size,
            evs: linalg::block_eigenvalues(&t, offset, size),
            cluster: 0,
        })
        .collect();

    let radius = blocks
        .iter()
        .flat_map(|b| b.evs.iter())
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let cluster_tol = (tol::CLUSTER_REL_TOL * radius).max(tol::CLUSTER_ABS_FLOOR);

    // Single-linkage clustering of the half-plane keys (Re, |Im|); each
    // block carries one key since its eigenvalues are a point or a pair.
    let keys: Vec<(f64, f64)> = blocks
        .iter()
        .map(|b| (b.evs[0].re, b.evs[0].im.abs()))
        .collect();
    let mut assignment: Vec<usize> = (0..blocks.len()).collect();
    for i in 0..blocks.len() {
        for j in (i + 1)..blocks.len() {
            let dist =
                ((keys[i].0 - keys[j].0).powi(2) + (keys[i].1 - keys[j].1).powi(2)).sqrt();
            if dist <= cluster_tol {
                let (a, b) = (assignment[i], assignment[j]);
                if a != b {
                    for slot in assignment.iter_mut() {
                        if *slot == b {
                            *slot = a;
                        }
                    }
                }
            }
        }
    }

    // Cluster ranks ordered by (Re, |Im|) of the preliminary key means.
    let mut roots: Vec<usize> = assignment.clone();
    roots.sort_unstable();
    roots.dedup();
    let mut rank_info: Vec<(f64, f64, usize)> = roots
        .iter()
        .map(|&root| {
            let members: Vec<usize> =
                (0..blocks.len()).filter(|&i| assignment[i] == root).collect();
            let re = members.iter().map(|&i| keys[i].0).sum::<f64>() / members.len() as f64;
            let im = members.iter().map(|&i| keys[i].1).sum::<f64>() / members.len() as f64;
            (re, im, root)
        })
        .collect();
    rank_info.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    for (i, block) in blocks.iter_mut().enumerate() {
        block.cluster = rank_info
            .iter()
            .position(|&(_, _, root)| root == assignment[i])
            .unwrap();
    }

    // Bubble same-cluster blocks together, swapping only across distinct
    // clusters so every Sylvester system stays well separated.
    loop {
        let mut swapped = false;
        for i in 0..blocks.len().saturating_sub(1) {
            if blocks[i].cluster > blocks[i + 1].cluster {
                let offset = blocks[i].offset;
                let (first, second) = (blocks[i].size, blocks[i + 1].size);
                swap_adjacent_blocks(&mut t, &mut q, offset, first, second)?;
                blocks.swap(i, i + 1);
                blocks[i].offset = offset;
                blocks[i + 1].offset = offset + blocks[i].size;
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }

    // Contiguous cluster segments.
    let cluster_count = rank_info.len();
    let mut segments: Vec<Segment> = Vec::with_capacity(cluster_count);
    let mut at = 0;
    for ci in 0..cluster_count {
        let members: Vec<&SchurBlock> = blocks.iter().filter(|b| b.cluster == ci).collect();
        let size: usize = members.iter().map(|b| b.size).sum();
        let evs: Vec<Complex64> = members.iter().flat_map(|b| b.evs.iter().copied()).collect();
        segments.push(Segment {
            offset: at,
            size,
            re: 0.0,
            im: 0.0,
            members: evs,
            block: DMatrix::zeros(0, 0),
        });
        at += size;
    }

    // Remove cross-cluster coupling: for each segment pair solve
    // T_ii X - X T_jj = -T_ij and conjugate by the unit block elementary.
    let mut r = DMatrix::<f64>::identity(n, n);
    let mut r_inv = DMatrix::<f64>::identity(n, n);
    for span in 1..cluster_count {
        for i in 0..cluster_count - span {
            let j = i + span;
            let (oi, si) = (segments[i].offset, segments[i].size);
            let (oj, sj) = (segments[j].offset, segments[j].size);
            let tii = t.view((oi, oi), (si, si)).into_owned();
            let tjj = t.view((oj, oj), (sj, sj)).into_owned();
            let tij = t.view((oi, oj), (si, sj)).into_owned();
            let x = solve_sylvester(&tii, &tjj, &(-&tij))?;
            let col_i = t.columns(oi, si).into_owned();
            let row_j = t.rows(oj, sj).into_owned();
            let mut dst = t.columns_mut(oj, sj);
            dst += &col_i * &x;
            let mut dst = t.rows_mut(oi, si);
            dst -= &x * &row_j;
            t.view_mut((oi, oj), (si, sj)).fill(0.0);

            let r_col_i = r.columns(oi, si).into_owned();
            let mut dst = r.columns_mut(oj, sj);
            dst += &r_col_i * &x;
            let r_inv_row_j = r_inv.rows(oj, sj).into_owned();
            let mut dst = r_inv.rows_mut(oi, si);
            dst -= &x * &r_inv_row_j;
        }
    }

    let p = &q * &r;
    let p_inv = &r_inv * q.transpose();

    for segment in segments.iter_mut() {
        let block = t.view((segment.offset, segment.offset), (segment.size, segment.size));
        segment.block = block.into_owned();
        // Block traces are exact symmetric functions of the true cluster
        // eigenvalues, unlike the individually computed members.
        segment.re = segment.block.trace() / segment.size as f64;
        let is_pair = segment.members.iter().any(|z| z.im.abs() > cluster_tol);
        if is_pair {
            if segment.size % 2 != 0 {
                return Err(LieFlowError::Degeneracy(format!(
                    "complex cluster at {:.6}+{:.6}i has odd multiplicity {}",
                    segment.re,
                    segment.members[0].im.abs(),
                    segment.size
                )));
            }
            let tr2 = (&segment.block * &segment.block).trace() / segment.size as f64;
            segment.im = (segment.re * segment.re - tr2).max(0.0).sqrt();
        }
    }

    let mut ambiguous = false;
    for i in 0..segments.len() {
        for j in (i + 1)..segments.len() {
            let gap = ((segments[i].re - segments[j].re).powi(2)
                + (segments[i].im - segments[j].im).powi(2))
            .sqrt();
            if gap < 2.0 * cluster_tol {
                ambiguous = true;
            }
        }
    }

    Ok(AdaptedForm { p, p_inv, segments, cluster_tol, ambiguous })
}

impl AdaptedForm {
    fn spectral_data(&self) -> SpectralData {
        let clusters = self
            .segments
            .iter()
            .map(|segment| {
                let raw = self.p.columns(segment.offset, segment.size).into_owned();
                let basis = raw.qr().q();
                SpectralCluster {
                    re: segment.re,
                    im: segment.im,
                    multiplicity: segment.size,
                    members: segment.members.clone(),
                    basis,
                }
            })
            .collect();
        SpectralData {
            clusters,
            cluster_tol: self.cluster_tol,
            ambiguous: self.ambiguous,
        }
    }
}

/// Clusters the spectrum of `d` and computes orthonormal bases of the
/// cluster invariant subspaces.
///
/// Conjugate pairs are merged by clustering on `(Re, |Im|)`; a cluster
/// whose members all have `|Im|` below the clustering radius is real.
pub fn generalized_eigenspaces(d: &DMatrix<f64>) -> Result<SpectralData> {
    Ok(adapted_form(d)?.spectral_data())
}

/// Semisimple part of a block whose spectrum is the conjugate pair
/// `re +- i im`, as the Newton limit for the annihilating quadratic.
/// Every iterate is a polynomial in the block, so the result commutes
/// with it.
fn pair_semisimple(block: &DMatrix<f64>, re: f64, im: f64) -> Result<DMatrix<f64>> {
    let m = block.nrows();
    let id = DMatrix::<f64>::identity(m, m);
    let c0 = re * re + im * im;
    let scale2 = (1.0 + linalg::inf_norm(block)).powi(2);
    let mut x = block.clone();
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for _ in 0..8 {
        let qx = &x * &x - &x * (2.0 * re) + &id * c0;
        let residual = linalg::inf_norm(&qx);
        if best.as_ref().map_or(true, |(b, _)| residual < *b) {
            best = Some((residual, x.clone()));
        }
        if residual <= 64.0 * f64::EPSILON * scale2 {
            break;
        }
        let dq = &x * 2.0 - &id * (2.0 * re);
        let Some(dq_inv) = dq.try_inverse() else { break };
        x = &x - qx * dq_inv;
    }
    let (residual, s) = best.unwrap();
    if residual > 1e-8 * scale2 {
        return Err(LieFlowError::Degeneracy(format!(
            "pair cluster at {re:.6}+{im:.6}i fails to split (residual {residual:.3e})"
        )));
    }
    Ok(s)
}

/// Additive Jordan splitting `D = H + E + N` with commuting parts.
pub fn jordan_additive(d: &DMatrix<f64>) -> Result<JordanDecomposition> {
    let n = d.nrows();
    let af = adapted_form(d)?;
    let scale = 1.0 + linalg::inf_norm(d);

    let mut h_adapted = DMatrix::<f64>::zeros(n, n);
    let mut e_adapted = DMatrix::<f64>::zeros(n, n);
    for segment in &af.segments {
        let m = segment.size;
        let h_block = DMatrix::<f64>::identity(m, m) * segment.re;
        h_adapted
            .view_mut((segment.offset, segment.offset), (m, m))
            .copy_from(&h_block);
        if segment.im != 0.0 {
            let s = pair_semisimple(&segment.block, segment.re, segment.im)?;
            e_adapted
                .view_mut((segment.offset, segment.offset), (m, m))
                .copy_from(&(s - h_block));
        }
    }

    let h = &af.p * h_adapted * &af.p_inv;
    let e = &af.p * e_adapted * &af.p_inv;
    let nil = d - &h - &e;

    for (name, a, b) in [
        ("hyperbolic/elliptic", &h, &e),
        ("hyperbolic/nilpotent", &h, &nil),
        ("elliptic/nilpotent", &e, &nil),
    ] {
        let defect = linalg::inf_norm(&(a * b - b * a));
        if defect > tol::JORDAN_COMMUTE_TOL * scale {
            return Err(LieFlowError::Degeneracy(format!(
                "{name} parts fail to commute (defect {defect:.3e})"
            )));
        }
    }

    let spectral = af.spectral_data();
    Ok(JordanDecomposition { hyperbolic: h, elliptic: e, nilpotent: nil, spectral })
}

/// Classifies `d` by which parts of its additive splitting are nonzero.
/// The zero matrix counts as nilpotent.
pub fn classify(d: &DMatrix<f64>) -> Result<DerivationClass> {
    let jd = jordan_additive(d)?;
    let threshold = tol::SPECTRAL_TYPE_TOL * (1.0 + linalg::inf_norm(d));
    let h = linalg::inf_norm(&jd.hyperbolic) > threshold;
    let e = linalg::inf_norm(&jd.elliptic) > threshold;
    let n = linalg::inf_norm(&jd.nilpotent) > threshold;
    Ok(match (h, e, n) {
        (true, false, false) => DerivationClass::Hyperbolic,
        (false, true, false) => DerivationClass::Elliptic,
        (false, false, _) => DerivationClass::Nilpotent,
        _ => DerivationClass::Mixed,
    })
}
