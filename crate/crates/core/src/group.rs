//! Group charts, the flow itself, and the geometry the chain engine needs.
//!
//! Three chart kinds cover the catalog: abelian coordinates, global
//! exponential coordinates on a nilpotent group, and a matrix group probed
//! through the principal logarithm near the identity. Elements of the two
//! coordinate charts are algebra vectors; products go through the
//! Baker-Campbell-Hausdorff series, which terminates for nilpotency step
//! at most four and is therefore exact there. Matrix-chart distance
//! queries outside the logarithm window fail closed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::algebra::{AlgebraVector, LieAlgebra, LinearMap};
use crate::grading::{self, TriDecomposition};
use crate::jordan::{self, JordanDecomposition};
use crate::linalg;
use crate::tol;
use crate::{LieFlowError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    Abelian,
    NilpotentExp,
    MatrixEmbedded,
}

/// Faithful matrix images of the algebra basis, validated against the
/// structure constants at construction.
#[derive(Debug, Clone)]
pub struct MatrixRep {
    pub size: usize,
    pub basis: Vec<DMatrix<f64>>,
    /// Flattened basis images as columns, with its pseudo-inverse, for
    /// expressing a matrix logarithm in algebra coordinates.
    flat: DMatrix<f64>,
    pinv: DMatrix<f64>,
}

impl MatrixRep {
    pub fn new(alg: &LieAlgebra, basis: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = alg.dim();
        if basis.len() != n {
            return Err(LieFlowError::DimensionMismatch(format!(
                "representation has {} basis images for a dimension-{n} algebra",
                basis.len()
            )));
        }
        let size = basis[0].nrows();
        for b in &basis {
            if b.nrows() != size || b.ncols() != size {
                return Err(LieFlowError::DimensionMismatch(
                    "representation basis images differ in size".into(),
                ));
            }
        }
        for i in 0..n {
            for j in 0..n {
                let mut expected = DMatrix::<f64>::zeros(size, size);
                for k in 0..n {
                    let c = alg.structure_constant(i, j, k);
                    if c != 0.0 {
                        expected += &basis[k] * c;
                    }
                }
                let commutator = &basis[i] * &basis[j] - &basis[j] * &basis[i];
                if linalg::inf_norm(&(&commutator - &expected)) > 1e-10 {
                    return Err(LieFlowError::Degeneracy(format!(
                        "representation violates the bracket table at pair ({i}, {j})"
                    )));
                }
            }
        }
        let mut flat = DMatrix::<f64>::zeros(size * size, n);
        for (k, b) in basis.iter().enumerate() {
            for (idx, value) in b.iter().enumerate() {
                flat[(idx, k)] = *value;
            }
        }
        let f = linalg::svd(&flat);
        let cut = tol::RANK_REL_TOL * f.s[0];
        let mut sinv = DMatrix::<f64>::zeros(f.v.ncols(), f.u.ncols());
        for (i, &s) in f.s.iter().enumerate() {
            if s > cut {
                sinv[(i, i)] = 1.0 / s;
            }
        }
        let pinv = &f.v * sinv * f.u.transpose();
        Ok(MatrixRep { size, basis, flat, pinv })
    }

    /// Matrix image of an algebra coordinate vector.
    pub fn embed(&self, v: &AlgebraVector) -> DMatrix<f64> {
        let mut out = DMatrix::<f64>::zeros(self.size, self.size);
        for (k, b) in self.basis.iter().enumerate() {
            if v[k] != 0.0 {
                out += b * v[k];
            }
        }
        out
    }

    /// Algebra coordinates of a matrix known to lie in the representation
    /// image, with a residual gate.
    pub fn coords(&self, m: &DMatrix<f64>) -> Result<AlgebraVector> {
        let flatm = DVector::from_iterator(self.size * self.size, m.iter().copied());
        let a = &self.pinv * &flatm;
        let residual = (&self.flat * &a - &flatm).norm();
        if residual > 1e-8 * (1.0 + flatm.norm()) {
            return Err(LieFlowError::Degeneracy(format!(
                "matrix lies off the representation image (residual {residual:.3e})"
            )));
        }
        Ok(a)
    }
}

/// Chart for concrete computation on the group.
#[derive(Debug, Clone)]
pub struct GroupChart {
    pub kind: ChartKind,
    pub algebra: LieAlgebra,
    pub rep: Option<MatrixRep>,
    /// Matrix-embedded only: distance queries require the group-difference
    /// to satisfy `|m - I| <= log_window` before taking the logarithm.
    pub log_window: f64,
}

/// Point on the group: exponential-chart coordinates or a concrete matrix.
#[derive(Debug, Clone)]
pub enum GroupElement {
    Coords(AlgebraVector),
    Matrix(DMatrix<f64>),
}

impl GroupElement {
    pub fn coords(&self) -> Result<&AlgebraVector> {
        match self {
            GroupElement::Coords(v) => Ok(v),
            GroupElement::Matrix(_) => Err(LieFlowError::ChartMismatch(
                "expected a coordinate-chart element, got a matrix".into(),
            )),
        }
    }

    pub fn matrix(&self) -> Result<&DMatrix<f64>> {
        match self {
            GroupElement::Matrix(m) => Ok(m),
            GroupElement::Coords(_) => Err(LieFlowError::ChartMismatch(
                "expected a matrix element, got coordinates".into(),
            )),
        }
    }
}

/// Baker-Campbell-Hausdorff product truncated at degree four; exact for
/// nilpotency step at most four since every longer bracket vanishes.
pub fn bch(alg: &LieAlgebra, u: &AlgebraVector, v: &AlgebraVector) -> AlgebraVector {
    let uv = alg.bracket(u, v);
    let uuv = alg.bracket(u, &uv);
    let vvu = alg.bracket(v, &alg.bracket(v, u));
    let vuuv = alg.bracket(v, &uuv);
    u + v + uv * 0.5 + (uuv + vvu) / 12.0 - vuuv / 24.0
}

impl GroupChart {
    pub fn abelian(algebra: LieAlgebra) -> Result<Self> {
        if algebra.nilpotency_step() != Some(1) && algebra.dim() > 0 {
            let abelian_ok = (0..algebra.dim()).all(|i| {
                (0..algebra.dim()).all(|j| {
                    (0..algebra.dim()).all(|k| algebra.structure_constant(i, j, k) == 0.0)
                })
            });
            if !abelian_ok {
                return Err(LieFlowError::Unsupported(
                    "abelian chart requires a trivial bracket".into(),
                ));
            }
        }
        Ok(GroupChart { kind: ChartKind::Abelian, algebra, rep: None, log_window: f64::INFINITY })
    }

    pub fn nilpotent_exp(algebra: LieAlgebra) -> Result<Self> {
        match algebra.nilpotency_step() {
            Some(step) if step <= 4 => Ok(GroupChart {
                kind: ChartKind::NilpotentExp,
                algebra,
                rep: None,
                log_window: f64::INFINITY,
            }),
            Some(step) => Err(LieFlowError::Unsupported(format!(
                "nilpotency step {step} exceeds the degree-four product truncation"
            ))),
            None => Err(LieFlowError::Unsupported(
                "exponential chart requires a nilpotent algebra".into(),
            )),
        }
    }

    pub fn matrix_embedded(algebra: LieAlgebra, rep: MatrixRep, log_window: f64) -> Result<Self> {
        if log_window <= 0.0 {
            return Err(LieFlowError::Unsupported("log window must be positive".into()));
        }
        Ok(GroupChart {
            kind: ChartKind::MatrixEmbedded,
            algebra,
            rep: Some(rep),
            log_window,
        })
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn identity(&self) -> GroupElement {
        match self.kind {
            ChartKind::Abelian | ChartKind::NilpotentExp => {
                GroupElement::Coords(AlgebraVector::zeros(self.algebra.dim()))
            }
            ChartKind::MatrixEmbedded => {
                let size = self.rep.as_ref().unwrap().size;
                GroupElement::Matrix(DMatrix::identity(size, size))
            }
        }
    }

    /// Exponential of an algebra coordinate vector.
    pub fn exp_point(&self, v: &AlgebraVector) -> Result<GroupElement> {
        if v.len() != self.algebra.dim() {
            return Err(LieFlowError::DimensionMismatch(format!(
                "coordinate vector of length {} on a dimension-{} chart",
                v.len(),
                self.algebra.dim()
            )));
        }
        match self.kind {
            ChartKind::Abelian | ChartKind::NilpotentExp => Ok(GroupElement::Coords(v.clone())),
            ChartKind::MatrixEmbedded => {
                let rep = self.rep.as_ref().unwrap();
                Ok(GroupElement::Matrix(linalg::expm(&rep.embed(v))))
            }
        }
    }

    /// Algebra coordinates of the principal logarithm.
    pub fn log_point(&self, g: &GroupElement) -> Result<AlgebraVector> {
        match self.kind {
            ChartKind::Abelian | ChartKind::NilpotentExp => Ok(g.coords()?.clone()),
            ChartKind::MatrixEmbedded => {
                let m = g.matrix()?;
                let size = m.nrows();
                let dev = m - DMatrix::<f64>::identity(size, size);
                if dev.norm() > self.log_window {
                    return Err(LieFlowError::OutOfWindow(format!(
                        "element at distance {:.3} from the identity exceeds the log window {:.3}",
                        dev.norm(),
                        self.log_window
                    )));
                }
                let log = linalg::logm(m)?;
                self.rep.as_ref().unwrap().coords(&log)
            }
        }
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        match self.kind {
            ChartKind::Abelian => Ok(GroupElement::Coords(a.coords()? + b.coords()?)),
            ChartKind::NilpotentExp => {
                Ok(GroupElement::Coords(bch(&self.algebra, a.coords()?, b.coords()?)))
            }
            ChartKind::MatrixEmbedded => Ok(GroupElement::Matrix(a.matrix()? * b.matrix()?)),
        }
    }

    pub fn inv(&self, a: &GroupElement) -> Result<GroupElement> {
        match self.kind {
            ChartKind::Abelian | ChartKind::NilpotentExp => Ok(GroupElement::Coords(-a.coords()?.clone())),
            ChartKind::MatrixEmbedded => {
                let m = a.matrix()?;
                let inv = m.clone().try_inverse().ok_or_else(|| {
                    LieFlowError::Degeneracy("singular matrix element".into())
                })?;
                Ok(GroupElement::Matrix(inv))
            }
        }
    }

    /// Left-invariant distance `|log(a^{-1} b)|` in algebra coordinates.
    pub fn distance(&self, a: &GroupElement, b: &GroupElement) -> Result<f64> {
        match self.kind {
            ChartKind::Abelian => Ok((b.coords()? - a.coords()?).norm()),
            ChartKind::NilpotentExp => {
                let diff = bch(&self.algebra, &-a.coords()?.clone(), b.coords()?);
                Ok(diff.norm())
            }
            ChartKind::MatrixEmbedded => {
                let rel = GroupElement::Matrix(a.matrix()?.clone().try_inverse().ok_or_else(
                    || LieFlowError::Degeneracy("singular matrix element".into()),
                )? * b.matrix()?);
                Ok(self.log_point(&rel)?.norm())
            }
        }
    }
}

/// How the one-parameter family of automorphisms is generated.
#[derive(Debug, Clone)]
pub enum FlowMode {
    /// Flow through the exponential chart with the given derivation.
    Derivation(LinearMap),
    /// Conjugation by the one-parameter subgroup of an algebra element.
    Inner(AlgebraVector),
}

/// A flow of automorphisms together with its spectral decomposition data.
#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub chart: GroupChart,
    pub mode: FlowMode,
    pub derivation: LinearMap,
    pub jordan: JordanDecomposition,
    pub tri: TriDecomposition,
}

impl FlowSpec {
    pub fn new(chart: GroupChart, mode: FlowMode) -> Result<Self> {
        let derivation = match (&mode, chart.kind) {
            (FlowMode::Derivation(d), ChartKind::Abelian | ChartKind::NilpotentExp) => {
                chart.algebra.check_derivation(d)?;
                d.clone()
            }
            (FlowMode::Derivation(_), ChartKind::MatrixEmbedded) => {
                return Err(LieFlowError::Unsupported(
                    "derivation-generated flows need a global exponential chart".into(),
                ));
            }
            (FlowMode::Inner(x), ChartKind::MatrixEmbedded) => chart.algebra.ad(x),
            (FlowMode::Inner(_), _) => {
                return Err(LieFlowError::Unsupported(
                    "inner flows need a matrix-embedded chart".into(),
                ));
            }
        };
        let jordan = jordan::jordan_additive(&derivation)?;
        let layers = grading::layer_decomposition(&chart.algebra, &jordan)?;
        let tri = grading::tri_decomposition(&chart.algebra, &jordan, &layers)?;
        Ok(FlowSpec { chart, mode, derivation, jordan, tri })
    }

    /// The reverse flow, generated by the negated derivation.
    pub fn reverse(&self) -> Result<FlowSpec> {
        let mode = match &self.mode {
            FlowMode::Derivation(d) => FlowMode::Derivation(-d),
            FlowMode::Inner(x) => FlowMode::Inner(-x),
        };
        FlowSpec::new(self.chart.clone(), mode)
    }

    /// Coordinate matrix of the time-t map on the exponential chart.
    pub fn flow_matrix(&self, t: f64) -> DMatrix<f64> {
        linalg::expm(&(&self.derivation * t))
    }

    /// Conjugation pair `(e^{tX}, e^{-tX})` for inner flows.
    pub fn inner_pair(&self, t: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        match &self.mode {
            FlowMode::Inner(x) => {
                let rep = self.chart.rep.as_ref().unwrap();
                let xm = rep.embed(x);
                Ok((linalg::expm(&(&xm * t)), linalg::expm(&(&xm * -t))))
            }
            FlowMode::Derivation(_) => Err(LieFlowError::Unsupported(
                "conjugation pair is only defined for inner flows".into(),
            )),
        }
    }

    /// The automorphism at time t applied to a group element.
    pub fn apply(&self, t: f64, g: &GroupElement) -> Result<GroupElement> {
        match &self.mode {
            FlowMode::Derivation(_) => {
                let v = g.coords()?;
                Ok(GroupElement::Coords(self.flow_matrix(t) * v))
            }
            FlowMode::Inner(_) => {
                let (e, einv) = self.inner_pair(t)?;
                Ok(GroupElement::Matrix(e * g.matrix()? * einv))
            }
        }
    }

    /// Norm of the component of log g off the central subalgebra.
    pub fn central_distance(&self, g: &GroupElement) -> Result<f64> {
        let v = self.chart.log_point(g)?;
        Ok(self.central_distance_coords(&v))
    }

    /// Central distance from known chart coordinates, skipping the log.
    pub fn central_distance_coords(&self, v: &AlgebraVector) -> f64 {
        let q0 = &self.tri.zero;
        if q0.ncols() == 0 {
            return v.norm();
        }
        (v - q0 * (q0.transpose() * v)).norm()
    }

    /// Unique factorization g = u c s through the unstable, central and
    /// stable subgroups, by Newton iteration on exponential coordinates.
    pub fn factorize(&self, g: &GroupElement) -> Result<(GroupElement, GroupElement, GroupElement)> {
        if self.chart.kind == ChartKind::MatrixEmbedded {
            return Err(LieFlowError::Unsupported(
                "factorization requires a global exponential chart".into(),
            ));
        }
        let alg = &self.chart.algebra;
        let n = alg.dim();
        let target = self.chart.log_point(g)?;
        let (p, z, m) = (&self.tri.plus, &self.tri.zero, &self.tri.minus);
        let (pd, zd, md) = (p.ncols(), z.ncols(), m.ncols());

        // Unknowns are stacked subspace coordinates (a, c, b).
        let compose = |w: &DVector<f64>| -> AlgebraVector {
            let a = p * w.rows(0, pd);
            let c = z * w.rows(pd, zd);
            let b = m * w.rows(pd + zd, md);
            bch(alg, &bch(alg, &a, &c), &b)
        };

        let mut w = DVector::<f64>::zeros(n);
        w.rows_mut(0, pd).copy_from(&(p.transpose() * &target));
        w.rows_mut(pd, zd).copy_from(&(z.transpose() * &target));
        w.rows_mut(pd + zd, md).copy_from(&(m.transpose() * &target));

        let mut converged = false;
        for _ in 0..tol::NEWTON_MAX_ITER {
            let f = compose(&w) - &target;
            let mut jac = DMatrix::<f64>::zeros(n, n);
            let h = 1e-6;
            for col in 0..n {
                let mut wp = w.clone();
                wp[col] += h;
                let mut wm = w.clone();
                wm[col] -= h;
                let deriv = (compose(&wp) - compose(&wm)) / (2.0 * h);
                jac.set_column(col, &deriv);
            }
            let step = jac.lu().solve(&-&f).ok_or_else(|| {
                LieFlowError::NoConvergence("singular Jacobian in factorization".into())
            })?;
            w += &step;
            if step.norm() < tol::NEWTON_STEP_TOL {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(LieFlowError::NoConvergence(
                "factorization Newton iteration did not converge".into(),
            ));
        }

        let u = GroupElement::Coords(p * w.rows(0, pd));
        let c = GroupElement::Coords(z * w.rows(pd, zd));
        let s = GroupElement::Coords(m * w.rows(pd + zd, md));
        let product = self.chart.mul(&self.chart.mul(&u, &c)?, &s)?;
        let residual = self.chart.distance(g, &product)?;
        if residual > tol::FACTORIZE_RESIDUAL_TOL {
            return Err(LieFlowError::NoConvergence(format!(
                "factorization residual {residual:.3e}"
            )));
        }
        Ok((u, c, s))
    }

    /// Checks that the product of the unstable and central subgroups with a
    /// stable-subgroup ball stays a right uniform neighborhood of its own
    /// time-tau image, probing sampled points with balls of decreasing
    /// radius. Reports the largest grid radius that passes.
    pub fn uniform_neighborhood_check(
        &self,
        v_radius: f64,
        tau: f64,
        samples: usize,
        seed: u64,
    ) -> Result<UniformReport> {
        use rand::SeedableRng;
        if self.chart.kind == ChartKind::MatrixEmbedded {
            return Err(LieFlowError::Unsupported(
                "the uniform-neighborhood check requires a global exponential chart".into(),
            ));
        }
        let alg = &self.chart.algebra;
        let n = alg.dim();
        let (p, z, m) = (&self.tri.plus, &self.tri.zero, &self.tri.minus);
        let (pd, zd, md) = (p.ncols(), z.ncols(), m.ncols());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

        let random_unit = |rng: &mut rand_chacha::ChaCha8Rng, dim: usize| -> DVector<f64> {
            if dim == 0 {
                return DVector::zeros(0);
            }
            loop {
                let v = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
                let norm = v.norm();
                if norm > 1e-3 {
                    return v / norm;
                }
            }
        };

        // Sampled points on the closure of the time-tau image, with half the
        // stable factors pinned to the boundary sphere where membership of a
        // surrounding ball is tightest.
        let slice_radius = 1.0;
        let mut points: Vec<(AlgebraVector, AlgebraVector)> = Vec::with_capacity(samples);
        for k in 0..samples {
            let up = random_unit(&mut rng, pd) * (slice_radius * rng.gen::<f64>());
            let zp = random_unit(&mut rng, zd) * (slice_radius * rng.gen::<f64>());
            let scale = if k % 2 == 0 { 1.0 } else { rng.gen::<f64>() };
            let sdir = random_unit(&mut rng, md);
            let sp = &sdir * (v_radius * scale);
            let interior = bch(alg, &bch(alg, &(p * up), &(z * zp)), &(m * &sp));
            let x = self.flow_matrix(tau) * interior;
            let mut sfull = DVector::<f64>::zeros(n);
            if md > 0 {
                sfull.copy_from(&(m * sdir));
            }
            points.push((x, sfull));
        }

        // Probe directions: every signed basis axis, the stable direction
        // of the sample itself, and a few random ones.
        let mut probes: Vec<AlgebraVector> = Vec::new();
        for i in 0..n {
            probes.push(DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 }));
            probes.push(DVector::from_fn(n, |r, _| if r == i { -1.0 } else { 0.0 }));
        }
        for _ in 0..4 {
            probes.push(random_unit(&mut rng, n));
        }

        let member = |w: &GroupElement| -> Result<bool> {
            let (_, _, s) = self.factorize(w)?;
            let snorm = self.chart.log_point(&s)?.norm();
            Ok(snorm <= v_radius + 1e-9)
        };

        let rho_grid: Vec<f64> = (1..=10).rev().map(|k| 0.05 * k as f64).collect();
        let mut rho_found = 0.0;
        let mut failures_at_last = 0usize;
        for &rho in &rho_grid {
            let mut failures = 0usize;
            'outer: for (x, sdir) in &points {
                let base = GroupElement::Coords(x.clone());
                for probe in probes.iter().chain(std::iter::once(sdir)) {
                    if probe.norm() == 0.0 {
                        continue;
                    }
                    let moved =
                        self.chart.mul(&base, &GroupElement::Coords(probe * rho))?;
                    if !member(&moved)? {
                        failures += 1;
                        continue 'outer;
                    }
                }
            }
            failures_at_last = failures;
            if failures == 0 {
                rho_found = rho;
                break;
            }
        }

        Ok(UniformReport {
            v_radius,
            tau,
            rho: rho_found,
            pass: rho_found > 0.0,
            samples,
            failing_samples: failures_at_last,
        })
    }
}

/// Outcome of the uniform-neighborhood probe.
#[derive(Debug, Clone)]
pub struct UniformReport {
    pub v_radius: f64,
    pub tau: f64,
    /// Largest tested ball radius for which every probe stayed inside;
    /// zero when even the smallest grid radius failed.
    pub rho: f64,
    pub pass: bool,
    pub samples: usize,
    /// Failing sample count at the last radius tried.
    pub failing_samples: usize,
}

/// Standard two-dimensional faithful images of the sl2 basis (H, E, F).
pub fn sl2_rep(alg: &LieAlgebra) -> Result<MatrixRep> {
    MatrixRep::new(
        alg,
        vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]),
        ],
    )
}

/// Rotation-generator images of the so3 basis, cyclic bracket table.
pub fn so3_rep(alg: &LieAlgebra) -> Result<MatrixRep> {
    MatrixRep::new(
        alg,
        vec![
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0]),
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]),
            DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
        ],
    )
}
