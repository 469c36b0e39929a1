//! Quotients of a flow by an invariant normal connected subgroup.
//!
//! The subgroup is exp of an ideal that the derivation preserves; the
//! flow then descends to the quotient group, chains project pointwise,
//! and quotient chains lift back with a controlled correction in the
//! fiber. The lift follows a recursion that drags the accumulated fiber
//! error along the flow and absorbs it, one coset solve per jump.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{AlgebraVector, LieAlgebra};
use crate::chain::Chain;
use crate::group::{ChartKind, FlowMode, FlowSpec, GroupChart, GroupElement};
use crate::linalg;
use crate::tol;
use crate::{LieFlowError, Result};

/// Ambient flow together with an ideal and the induced quotient flow.
#[derive(Debug, Clone)]
pub struct QuotientMap {
    pub ambient: FlowSpec,
    /// Orthonormal basis of the ideal, ambient coordinates.
    pub h_basis: DMatrix<f64>,
    /// Orthonormal basis of the complement carrying the quotient chart.
    pub complement: DMatrix<f64>,
    pub quotient: FlowSpec,
}

impl QuotientMap {
    /// Quotient by the span of the named ambient basis directions.
    pub fn from_indices(ambient: &FlowSpec, indices: &[usize]) -> Result<Self> {
        let n = ambient.chart.dim();
        let mut sorted: Vec<usize> = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() {
            return Err(LieFlowError::Parse {
                context: "quotient ideal".into(),
                message: "repeated basis index".into(),
            });
        }
        if let Some(&bad) = sorted.iter().find(|&&i| i >= n) {
            return Err(LieFlowError::Parse {
                context: "quotient ideal".into(),
                message: format!("basis index {bad} out of range for dimension {n}"),
            });
        }
        let mut basis = DMatrix::<f64>::zeros(n, sorted.len());
        for (col, &i) in sorted.iter().enumerate() {
            basis[(i, col)] = 1.0;
        }
        QuotientMap::from_basis(ambient, basis)
    }

    /// Quotient by the column span of an arbitrary ideal basis.
    pub fn from_basis(ambient: &FlowSpec, basis: DMatrix<f64>) -> Result<Self> {
        let n = ambient.chart.dim();
        if basis.nrows() != n {
            return Err(LieFlowError::DimensionMismatch(format!(
                "ideal basis has {} rows for dimension {n}",
                basis.nrows()
            )));
        }
        if ambient.chart.kind == ChartKind::MatrixEmbedded {
            return Err(LieFlowError::Unsupported(
                "quotients are defined on exponential charts only".into(),
            ));
        }
        let h = if basis.ncols() == 0 {
            basis
        } else {
            linalg::column_space_basis(&basis, tol::RANK_REL_TOL)
        };
        let alg = &ambient.chart.algebra;

        let projector_off = DMatrix::<f64>::identity(n, n) - &h * h.transpose();
        for i in 0..n {
            let e = alg.basis_vector(i);
            for col in 0..h.ncols() {
                let defect = (&projector_off * alg.bracket(&e, &h.column(col).into_owned())).norm();
                if defect > tol::QUOTIENT_TOL {
                    return Err(LieFlowError::Degeneracy(format!(
                        "the subspace is not an ideal: bracket leaks {defect:.3e}"
                    )));
                }
            }
        }
        for col in 0..h.ncols() {
            let defect = (&projector_off * (&ambient.derivation * h.column(col))).norm();
            if defect > tol::QUOTIENT_TOL {
                return Err(LieFlowError::Degeneracy(format!(
                    "the ideal is not flow-invariant: derivation leaks {defect:.3e}"
                )));
            }
        }

        let complement = if h.ncols() == n {
            DMatrix::<f64>::zeros(n, 0)
        } else {
            linalg::column_space_basis(&projector_off, tol::RANK_REL_TOL)
        };
        let m = complement.ncols();
        if m + h.ncols() != n {
            return Err(LieFlowError::Degeneracy(
                "complement dimension does not match the ideal codimension".into(),
            ));
        }

        let mut c = vec![vec![vec![0.0; m]; m]; m];
        let mut flat = true;
        for i in 0..m {
            for j in 0..m {
                let br = alg.bracket(&complement.column(i).into_owned(), &complement.column(j).into_owned());
                let reduced = complement.transpose() * br;
                for k in 0..m {
                    let v = if reduced[k].abs() < 1e-12 { 0.0 } else { reduced[k] };
                    c[i][j][k] = v;
                    if v != 0.0 {
                        flat = false;
                    }
                }
            }
        }
        let labels = (0..m)
            .map(|k| {
                let mut best = 0usize;
                for r in 1..n {
                    if complement[(r, k)].abs() > complement[(best, k)].abs() {
                        best = r;
                    }
                }
                format!("q_{}", alg.labels()[best])
            })
            .collect();
        let q_alg = LieAlgebra::new(labels, c)?;
        let q_chart = if flat {
            GroupChart::abelian(q_alg)?
        } else {
            GroupChart::nilpotent_exp(q_alg)?
        };
        let induced = complement.transpose() * &ambient.derivation * &complement;
        let quotient = FlowSpec::new(q_chart, FlowMode::Derivation(induced))?;

        Ok(QuotientMap { ambient: ambient.clone(), h_basis: h, complement, quotient })
    }

    pub fn h_dim(&self) -> usize {
        self.h_basis.ncols()
    }

    pub fn quotient_dim(&self) -> usize {
        self.complement.ncols()
    }

    /// Complement components of an ambient log vector.
    pub fn project_coords(&self, v: &AlgebraVector) -> AlgebraVector {
        self.complement.transpose() * v
    }

    /// Ideal components of an ambient log vector, in the h basis.
    pub fn ideal_coords(&self, v: &AlgebraVector) -> AlgebraVector {
        self.h_basis.transpose() * v
    }

    /// Norm of the part of an ambient log vector outside the ideal.
    pub fn off_ideal_norm(&self, v: &AlgebraVector) -> f64 {
        (v - &self.h_basis * (self.h_basis.transpose() * v)).norm()
    }

    pub fn project_point(&self, g: &GroupElement) -> Result<GroupElement> {
        let v = self.ambient.chart.log_point(g)?;
        Ok(GroupElement::Coords(self.project_coords(&v)))
    }

    /// Canonical section: the quotient point realized on the complement.
    pub fn section(&self, q: &GroupElement) -> Result<GroupElement> {
        let v = self.ambient.chart.exp_point(&(&self.complement * q.coords()?))?;
        Ok(v)
    }

    /// Whether the ideal lies in the center of the ambient algebra.
    pub fn is_central(&self) -> bool {
        let alg = &self.ambient.chart.algebra;
        let n = alg.dim();
        (0..self.h_basis.ncols()).all(|col| {
            let w = self.h_basis.column(col).into_owned();
            (0..n).all(|i| alg.bracket(&alg.basis_vector(i), &w).norm() < 1e-12)
        })
    }

    /// Largest sampled mismatch between flowing then projecting and
    /// projecting then flowing.
    pub fn intertwining_defect(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.ambient.chart.dim();
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let t = rng.gen_range(-2.0..2.0);
            let g = self.ambient.chart.exp_point(&v)?;
            let a = self.project_point(&self.ambient.apply(t, &g)?)?;
            let b = self.quotient.apply(t, &self.project_point(&g)?)?;
            worst = worst.max(self.quotient.chart.distance(&a, &b)?);
        }
        Ok(worst)
    }
}

/// Pointwise image of a chain in the quotient, same times. Jump residuals
/// never grow: the quotient log is an orthogonal component of the
/// ambient log on these charts.
pub fn project_chain(qm: &QuotientMap, chain: &Chain) -> Result<Chain> {
    let points = chain
        .points
        .iter()
        .map(|p| qm.project_point(p))
        .collect::<Result<Vec<_>>>()?;
    Chain::new(points, chain.times.clone())
}

/// Result of lifting a quotient chain: the ambient chain, the fiber
/// element absorbing the accumulated correction, and how far that
/// element strays from the ideal.
#[derive(Debug)]
pub struct LiftedChain {
    pub chain: Chain,
    pub terminal: GroupElement,
    pub off_ideal: f64,
}

/// Lifts a quotient chain to the ambient group with jumps inside the
/// given radius, following the recursion h_{k+1} = h' phi_tau(h_k) and
/// emitting the points (x_k h_k)^{-1}.
pub fn lift_chain(qm: &QuotientMap, zeta: &Chain, u_radius: f64) -> Result<LiftedChain> {
    let chart = &qm.ambient.chart;
    let reps: Vec<GroupElement> =
        zeta.points.iter().map(|q| qm.section(q)).collect::<Result<_>>()?;

    let mut h = chart.identity();
    let mut points = vec![chart.inv(&reps[0])?];
    let central = qm.is_central();
    for k in 0..zeta.n() {
        let tau_k = zeta.times[k];
        let flowed = qm.ambient.apply(tau_k, &reps[k])?;
        let flowed_inv = chart.inv(&flowed)?;
        let base = chart.mul(&reps[k + 1], &flowed_inv)?;
        let log_base = chart.log_point(&base)?;
        let w = if central {
            // exp(w) commutes out: the product's log is log_base + h w.
            -qm.ideal_coords(&log_base)
        } else {
            let residual_at = |w: &AlgebraVector| -> Result<f64> {
                let shifted = chart.mul(&reps[k + 1], &chart.exp_point(&(&qm.h_basis * w))?)?;
                Ok(chart.log_point(&chart.mul(&shifted, &flowed_inv)?)?.norm())
            };
            let (w, best) =
                minimize_over_ideal(qm.h_dim(), &residual_at, -qm.ideal_coords(&log_base), u_radius)?;
            if best >= u_radius {
                return Err(LieFlowError::NoConvergence(format!(
                    "coset representative search at jump {k}: best residual {best:.3e} exceeds {u_radius}"
                )));
            }
            w
        };
        let h_prime = chart.exp_point(&(&qm.h_basis * w))?;
        h = chart.mul(&h_prime, &qm.ambient.apply(tau_k, &h)?)?;
        points.push(chart.inv(&chart.mul(&reps[k + 1], &h)?)?);
    }

    let log_h = chart.log_point(&h)?;
    Ok(LiftedChain {
        chain: Chain::new(points, zeta.times.clone())?,
        off_ideal: qm.off_ideal_norm(&log_h),
        terminal: h,
    })
}

/// Grid minimization of a residual over ideal coordinates, widening the
/// search radius until the residual clears the target or the radius cap
/// of ten times the target is exhausted.
fn minimize_over_ideal(
    k: usize,
    residual_at: &dyn Fn(&AlgebraVector) -> Result<f64>,
    start: AlgebraVector,
    target: f64,
) -> Result<(AlgebraVector, f64)> {
    let mut best_w = start;
    let mut best = residual_at(&best_w)?;
    let steps = 6i64;
    for stage in 1..=10 {
        if best < target {
            break;
        }
        let radius = target * stage as f64;
        let anchor = best_w.clone();
        let mut idx = vec![-steps; k];
        loop {
            let w = DVector::from_fn(k, |d, _| anchor[d] + radius * idx[d] as f64 / steps as f64);
            let r = residual_at(&w)?;
            if r < best {
                best = r;
                best_w = w;
            }
            let mut pos = 0usize;
            loop {
                if pos == k {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] <= steps {
                    break;
                }
                idx[pos] = -steps;
                pos += 1;
            }
            if pos == k {
                break;
            }
        }
    }
    Ok((best_w, best))
}

/// Validated radius for which every quotient ball of that size around a
/// projected point is covered by projecting a bounded neighborhood of
/// the point. Tries radii from u_radius downward and returns the first
/// that survives the sampled coset solves.
pub fn homo_witness(
    qm: &QuotientMap,
    u_radius: f64,
    window_radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if qm.quotient_dim() == 0 {
        // Every quotient ball is a point covered by the identity.
        return Ok(u_radius);
    }
    let chart = &qm.ambient.chart;
    let n = chart.dim();
    let m = qm.quotient_dim();
    let central = qm.is_central();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut cases = Vec::with_capacity(samples);
    for _ in 0..samples {
        let x = DVector::from_fn(n, |_, _| rng.gen_range(-window_radius..window_radius));
        let mut dir = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        while dir.norm() < 1e-6 {
            dir = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
        }
        dir /= dir.norm();
        // Boundary and interior targets both exercise the covering.
        let scale = if cases.len() % 2 == 0 { 1.0 } else { rng.gen_range(0.0..1.0) };
        cases.push((x, dir, scale));
    }

    for step in (1..=20).rev() {
        let eps = u_radius * step as f64 / 20.0;
        let mut ok = true;
        for (xv, dir, scale) in &cases {
            let x = chart.exp_point(xv)?;
            let x_inv = chart.inv(&x)?;
            let target = qm.project_coords(xv) + dir * (eps * scale);
            let section = qm.section(&GroupElement::Coords(target))?;
            // Smallest u with u x = section exp(w): solve over the fiber.
            let reach = if central {
                // Central exp(w) commutes to the right of x_inv, so the
                // best residual is the off-ideal part of log(section / x).
                let base = chart.mul(&section, &x_inv)?;
                qm.off_ideal_norm(&chart.log_point(&base)?)
            } else {
                let residual_at = |w: &AlgebraVector| -> Result<f64> {
                    let g = chart.mul(&section, &chart.exp_point(&(&qm.h_basis * w))?)?;
                    Ok(chart.log_point(&chart.mul(&g, &x_inv)?)?.norm())
                };
                let base = chart.mul(&section, &x_inv)?;
                let start = -qm.ideal_coords(&chart.log_point(&base)?);
                minimize_over_ideal(qm.h_dim(), &residual_at, start, u_radius)?.1
            };
            if reach > u_radius + 1e-9 {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(eps);
        }
    }
    Err(LieFlowError::NoConvergence(
        "no candidate radius survived the covering samples".into(),
    ))
}
