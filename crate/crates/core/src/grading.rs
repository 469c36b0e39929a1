//! Eigenspace layers of the hyperbolic part and the sign-graded split.
//!
//! A derivation's hyperbolic part is semisimple with real spectrum, so it
//! splits the algebra into eigenspace layers. Brackets add layer labels,
//! and grouping layers by sign yields the unstable, central and stable
//! subalgebras. The functions here build those objects and measure how far
//! a numerical decomposition strays from the exact picture.

use nalgebra::DMatrix;

use crate::algebra::LieAlgebra;
use crate::jordan::JordanDecomposition;
use crate::linalg;
use crate::tol;
use crate::{LieFlowError, Result};

/// Eigenspace layer of the hyperbolic part: vectors with `H v = lambda v`.
#[derive(Debug, Clone)]
pub struct EigenLayer {
    pub lambda: f64,
    /// Orthonormal columns spanning the layer.
    pub basis: DMatrix<f64>,
}

impl EigenLayer {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Sign-graded split of the algebra induced by the hyperbolic spectrum.
#[derive(Debug, Clone)]
pub struct TriDecomposition {
    /// Orthonormal basis of the unstable subalgebra (positive layers).
    pub plus: DMatrix<f64>,
    /// Orthonormal basis of the central subalgebra (zero layer).
    pub zero: DMatrix<f64>,
    /// Orthonormal basis of the stable subalgebra (negative layers).
    pub minus: DMatrix<f64>,
    pub layers: Vec<EigenLayer>,
    /// Set when some eigenvalue lies within twice the zero threshold, so
    /// its sign classification is fragile.
    pub sign_ambiguous: bool,
}

impl TriDecomposition {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.plus.ncols(), self.zero.ncols(), self.minus.ncols())
    }

    /// True when the zero layer is the whole algebra.
    pub fn zero_spans(&self, dim: usize) -> bool {
        self.zero.ncols() == dim
    }
}

/// Group-class metadata attached to a scenario. Cross-checked against
/// computed diagnostics before any decomposability rule is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassHint {
    Solvable,
    SemisimpleCompact,
    SemisimpleNoncompact,
    General,
}

impl std::str::FromStr for ClassHint {
    type Err = LieFlowError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "solvable" => Ok(ClassHint::Solvable),
            "semisimple-compact" => Ok(ClassHint::SemisimpleCompact),
            "semisimple-noncompact" => Ok(ClassHint::SemisimpleNoncompact),
            "general" => Ok(ClassHint::General),
            other => Err(LieFlowError::parse("class_hint", format!("unknown class hint {other:?}"))),
        }
    }
}

impl std::fmt::Display for ClassHint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ClassHint::Solvable => "solvable",
            ClassHint::SemisimpleCompact => "semisimple-compact",
            ClassHint::SemisimpleNoncompact => "semisimple-noncompact",
            ClassHint::General => "general",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecomposabilityVerdict {
    Decomposable,
    NotDecomposable,
    Unknown,
}

impl std::fmt::Display for DecomposabilityVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DecomposabilityVerdict::Decomposable => "decomposable",
            DecomposabilityVerdict::NotDecomposable => "not-decomposable",
            DecomposabilityVerdict::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct DecomposabilityReport {
    pub verdict: DecomposabilityVerdict,
    pub class_hint: ClassHint,
    pub zero_spans: bool,
    /// Dimensions of the derived series, recorded for the report.
    pub derived_dims: Vec<usize>,
}

/// Splits the algebra into eigenspace layers of the hyperbolic part,
/// sorted by ascending eigenvalue.
pub fn layer_decomposition(alg: &LieAlgebra, jd: &JordanDecomposition) -> Result<Vec<EigenLayer>> {
    let h = &jd.hyperbolic;
    let n = alg.dim();
    if h.nrows() != n {
        return Err(LieFlowError::DimensionMismatch(format!(
            "hyperbolic part is {}x{} but the algebra has dimension {n}",
            h.nrows(),
            h.ncols()
        )));
    }
    let spectral = crate::jordan::generalized_eigenspaces(h)?;
    let scale = 1.0 + linalg::inf_norm(h);
    let mut layers = Vec::with_capacity(spectral.clusters.len());
    for cluster in &spectral.clusters {
        if cluster.im != 0.0 {
            return Err(LieFlowError::Degeneracy(format!(
                "hyperbolic part has a nonreal eigenvalue cluster at {:.6}+{:.6}i",
                cluster.re, cluster.im
            )));
        }
        let basis = linalg::column_space_basis(&cluster.basis, tol::RANK_REL_TOL);
        // A semisimple real map acts as a scalar on each layer; anything
        // else means the Jordan split upstream went wrong.
        for col in 0..basis.ncols() {
            let v = basis.column(col).into_owned();
            let residual = (h * &v - &v * cluster.re).norm();
            if residual > tol::GRADING_TOL * scale {
                return Err(LieFlowError::Degeneracy(format!(
                    "layer basis vector at lambda {:.6} has eigen-residual {residual:.3e}",
                    cluster.re
                )));
            }
        }
        layers.push(EigenLayer { lambda: cluster.re, basis });
    }
    let total: usize = layers.iter().map(EigenLayer::dim).sum();
    if total != n {
        return Err(LieFlowError::Degeneracy(format!(
            "layers span dimension {total} of {n}"
        )));
    }
    layers.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());
    Ok(layers)
}

/// Assembles the unstable, central and stable subalgebras from the layers
/// and verifies closure, nilpotency and invariance under all four maps.
pub fn tri_decomposition(
    alg: &LieAlgebra,
    jd: &JordanDecomposition,
    layers: &[EigenLayer],
) -> Result<TriDecomposition> {
    let n = alg.dim();
    let rho = layers.iter().map(|l| l.lambda.abs()).fold(0.0, f64::max);
    let tol_lambda = tol::LAYER_SIGN_REL_TOL * (1.0 + rho);

    let mut plus_cols = Vec::new();
    let mut zero_cols = Vec::new();
    let mut minus_cols = Vec::new();
    let mut sign_ambiguous = false;
    for layer in layers {
        let dest = if layer.lambda > tol_lambda {
            &mut plus_cols
        } else if layer.lambda < -tol_lambda {
            &mut minus_cols
        } else {
            &mut zero_cols
        };
        let mag = layer.lambda.abs();
        if mag > tol_lambda && mag < 2.0 * tol_lambda {
            sign_ambiguous = true;
        }
        for col in 0..layer.basis.ncols() {
            dest.push(layer.basis.column(col).into_owned());
        }
    }

    let assemble = |cols: &[crate::algebra::AlgebraVector]| -> DMatrix<f64> {
        if cols.is_empty() {
            DMatrix::<f64>::zeros(n, 0)
        } else {
            linalg::column_space_basis(&DMatrix::from_columns(cols), tol::RANK_REL_TOL)
        }
    };
    let plus = assemble(&plus_cols);
    let zero = assemble(&zero_cols);
    let minus = assemble(&minus_cols);

    if plus.ncols() + zero.ncols() + minus.ncols() != n {
        return Err(LieFlowError::Degeneracy(format!(
            "sign split dimensions {}+{}+{} do not sum to {n}",
            plus.ncols(),
            zero.ncols(),
            minus.ncols()
        )));
    }

    for (name, basis) in [("plus", &plus), ("zero", &zero), ("minus", &minus)] {
        let closure = subspace_closure_defect(alg, basis);
        if closure > tol::GRADING_TOL {
            return Err(LieFlowError::Degeneracy(format!(
                "{name} subspace bracket-closure defect {closure:.3e}"
            )));
        }
        let d = &jd.hyperbolic + &jd.elliptic + &jd.nilpotent;
        for (map_name, map) in [
            ("D", &d),
            ("hyperbolic part", &jd.hyperbolic),
            ("elliptic part", &jd.elliptic),
            ("nilpotent part", &jd.nilpotent),
        ] {
            let defect = invariance_defect(map, basis);
            if defect > tol::GRADING_TOL * (1.0 + linalg::inf_norm(map)) {
                return Err(LieFlowError::Degeneracy(format!(
                    "{name} subspace not invariant under {map_name}: defect {defect:.3e}"
                )));
            }
        }
    }

    for (name, basis) in [("plus", &plus), ("minus", &minus)] {
        if !restricted_nilpotent(alg, basis) {
            return Err(LieFlowError::Degeneracy(format!(
                "{name} subalgebra's lower central series does not vanish"
            )));
        }
    }

    Ok(TriDecomposition {
        plus,
        zero,
        minus,
        layers: layers.to_vec(),
        sign_ambiguous,
    })
}

/// Largest component of any basis-pair bracket outside the subspace span.
fn subspace_closure_defect(alg: &LieAlgebra, basis: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..basis.ncols() {
        for b in 0..basis.ncols() {
            let w = alg.bracket(&basis.column(a).into_owned(), &basis.column(b).into_owned());
            let off = &w - basis * (basis.transpose() * &w);
            worst = worst.max(off.norm());
        }
    }
    worst
}

/// Largest off-subspace component of the map applied to the basis columns.
fn invariance_defect(map: &DMatrix<f64>, basis: &DMatrix<f64>) -> f64 {
    if basis.ncols() == 0 {
        return 0.0;
    }
    let image = map * basis;
    let off = &image - basis * (basis.transpose() * &image);
    linalg::op_norm(&off)
}

/// Lower central series of the subalgebra spanned by the given basis,
/// checked to reach zero within `dim` steps.
fn restricted_nilpotent(alg: &LieAlgebra, basis: &DMatrix<f64>) -> bool {
    let mut term = basis.clone();
    for _ in 0..=alg.dim() {
        if term.ncols() == 0 {
            return true;
        }
        let next = alg.bracket_span(basis, &term);
        // Series terms are nested, so a non-drop means it stabilized above zero.
        if next.ncols() >= term.ncols() {
            return false;
        }
        term = next;
    }
    false
}

/// Worst component of a layer-pair bracket outside the layer at the summed
/// eigenvalue; outside zero entirely when no such layer exists.
pub fn bracket_grading_defect(alg: &LieAlgebra, layers: &[EigenLayer]) -> f64 {
    let rho = layers.iter().map(|l| l.lambda.abs()).fold(0.0, f64::max);
    let match_tol = tol::LAYER_SIGN_REL_TOL * (1.0 + rho);
    let mut worst = 0.0f64;
    for la in layers {
        for lb in layers {
            let target = la.lambda + lb.lambda;
            let dest = layers
                .iter()
                .find(|l| (l.lambda - target).abs() < match_tol)
                .map(|l| &l.basis);
            for a in 0..la.basis.ncols() {
                for b in 0..lb.basis.ncols() {
                    let w = alg.bracket(
                        &la.basis.column(a).into_owned(),
                        &lb.basis.column(b).into_owned(),
                    );
                    let off = match dest {
                        Some(t) => (&w - t * (t.transpose() * &w)).norm(),
                        None => w.norm(),
                    };
                    worst = worst.max(off);
                }
            }
        }
    }
    worst
}

/// Applies the decomposability rules for the declared group class after
/// checking the class against derived-series and Killing-form diagnostics.
pub fn algebra_decomposability_report(
    alg: &LieAlgebra,
    tri: &TriDecomposition,
    class_hint: ClassHint,
) -> Result<DecomposabilityReport> {
    let derived = alg.derived_series();
    let derived_dims: Vec<usize> = derived.iter().map(DMatrix::ncols).collect();
    let solvable = alg.is_solvable();

    match class_hint {
        ClassHint::Solvable => {
            if !solvable {
                return Err(LieFlowError::Degeneracy(format!(
                    "class hint says solvable but the derived series stabilizes at dimension {}",
                    derived_dims.last().copied().unwrap_or(0)
                )));
            }
        }
        ClassHint::SemisimpleCompact | ClassHint::SemisimpleNoncompact => {
            let killing = alg.killing_form();
            let evals = killing_spectrum(&killing)?;
            let scale = 1.0 + linalg::inf_norm(&killing);
            let near_zero = 1e-9 * scale;
            if evals.iter().any(|&e| e.abs() < near_zero) {
                return Err(LieFlowError::Degeneracy(
                    "class hint says semisimple but the Killing form is degenerate".into(),
                ));
            }
            let negative_definite = evals.iter().all(|&e| e < -near_zero);
            if class_hint == ClassHint::SemisimpleCompact && !negative_definite {
                return Err(LieFlowError::Degeneracy(
                    "class hint says compact but the Killing form is not negative definite".into(),
                ));
            }
            if class_hint == ClassHint::SemisimpleNoncompact && negative_definite {
                return Err(LieFlowError::Degeneracy(
                    "class hint says noncompact but the Killing form is negative definite".into(),
                ));
            }
        }
        ClassHint::General => {}
    }

    let zero_spans = tri.zero_spans(alg.dim());
    let verdict = match class_hint {
        ClassHint::Solvable => DecomposabilityVerdict::Decomposable,
        ClassHint::SemisimpleCompact | ClassHint::SemisimpleNoncompact => {
            if zero_spans {
                DecomposabilityVerdict::Decomposable
            } else {
                DecomposabilityVerdict::NotDecomposable
            }
        }
        ClassHint::General => {
            if zero_spans {
                DecomposabilityVerdict::Decomposable
            } else {
                DecomposabilityVerdict::Unknown
            }
        }
    };

    Ok(DecomposabilityReport { verdict, class_hint, zero_spans, derived_dims })
}

fn killing_spectrum(killing: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(linalg::eigenvalues(killing)?.iter().map(|z| z.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LieAlgebra;
    use crate::jordan::jordan_additive;
    use nalgebra::DVector;

    fn layers_of(alg: &LieAlgebra, d: &DMatrix<f64>) -> Vec<EigenLayer> {
        let jd = jordan_additive(d).unwrap();
        layer_decomposition(alg, &jd).unwrap()
    }

    fn tri_of(alg: &LieAlgebra, d: &DMatrix<f64>) -> TriDecomposition {
        let jd = jordan_additive(d).unwrap();
        let layers = layer_decomposition(alg, &jd).unwrap();
        tri_decomposition(alg, &jd, &layers).unwrap()
    }

    fn spans_axis(basis: &DMatrix<f64>, axis: usize) -> bool {
        if basis.ncols() != 1 {
            return false;
        }
        let v = basis.column(0);
        (v[axis].abs() - 1.0).abs() < 1e-9
            && v.iter().enumerate().all(|(i, &x)| i == axis || x.abs() < 1e-9)
    }

    #[test]
    fn heisenberg_saddle_layers() {
        let h3 = LieAlgebra::heisenberg();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0]));
        let layers = layers_of(&h3, &d);
        let lambdas: Vec<f64> = layers.iter().map(|l| l.lambda).collect();
        assert_eq!(lambdas.len(), 3);
        assert!((lambdas[0] + 1.0).abs() < 1e-12);
        assert!(lambdas[1].abs() < 1e-12);
        assert!((lambdas[2] - 1.0).abs() < 1e-12);
        assert!(spans_axis(&layers[0].basis, 1));
        assert!(spans_axis(&layers[1].basis, 2));
        assert!(spans_axis(&layers[2].basis, 0));
    }

    #[test]
    fn nilpotent_derivation_gives_single_zero_layer() {
        let h3 = LieAlgebra::heisenberg();
        let d = h3.ad(&h3.basis_vector(0));
        let layers = layers_of(&h3, &d);
        assert_eq!(layers.len(), 1);
        assert_eq!(layers[0].lambda, 0.0);
        assert_eq!(layers[0].dim(), 3);
    }

    #[test]
    fn abelian_diagonal_layers_sorted() {
        let alg = LieAlgebra::abelian(2);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0]));
        let layers = layers_of(&alg, &d);
        assert_eq!(layers.len(), 2);
        assert!((layers[0].lambda - 2.0).abs() < 1e-12);
        assert!((layers[1].lambda - 3.0).abs() < 1e-12);
        assert!(spans_axis(&layers[0].basis, 1));
        assert!(spans_axis(&layers[1].basis, 0));
    }

    #[test]
    fn heisenberg_saddle_tri_split() {
        let h3 = LieAlgebra::heisenberg();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0]));
        let tri = tri_of(&h3, &d);
        assert_eq!(tri.dims(), (1, 1, 1));
        assert!(spans_axis(&tri.plus, 0));
        assert!(spans_axis(&tri.zero, 2));
        assert!(spans_axis(&tri.minus, 1));
        assert!(!tri.sign_ambiguous);
    }

    #[test]
    fn elliptic_flow_centralizes_everything() {
        let alg = LieAlgebra::abelian(2);
        let d = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let tri = tri_of(&alg, &d);
        assert_eq!(tri.dims(), (0, 2, 0));
        assert!(tri.zero_spans(2));
    }

    #[test]
    fn plane_saddle_tri_split() {
        let alg = LieAlgebra::abelian(2);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let tri = tri_of(&alg, &d);
        assert_eq!(tri.dims(), (1, 0, 1));
        assert!(spans_axis(&tri.plus, 0));
        assert!(spans_axis(&tri.minus, 1));
    }

    #[test]
    fn grading_defect_vanishes_on_heisenberg_saddle() {
        let h3 = LieAlgebra::heisenberg();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0]));
        let layers = layers_of(&h3, &d);
        assert!(bracket_grading_defect(&h3, &layers) < 1e-9);
    }

    #[test]
    fn grading_defect_vanishes_on_abelian() {
        let alg = LieAlgebra::abelian(3);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, -0.7, 2.0]));
        let layers = layers_of(&alg, &d);
        assert!(bracket_grading_defect(&alg, &layers) < 1e-12);
    }

    #[test]
    fn sl2_adjoint_saddle_grading() {
        // ad(H) has layers -2, 0, 2; the 2+2 bracket must land in the
        // empty layer at 4, so [E, E] = 0 carries the whole check there.
        let sl2 = LieAlgebra::sl2();
        let d = sl2.ad(&sl2.basis_vector(0));
        let layers = layers_of(&sl2, &d);
        let lambdas: Vec<f64> = layers.iter().map(|l| l.lambda).collect();
        assert!((lambdas[0] + 2.0).abs() < 1e-9);
        assert!(lambdas[1].abs() < 1e-9);
        assert!((lambdas[2] - 2.0).abs() < 1e-9);
        assert!(bracket_grading_defect(&sl2, &layers) < 1e-9);
        let jd = jordan_additive(&d).unwrap();
        let tri = tri_decomposition(&sl2, &jd, &layers).unwrap();
        assert_eq!(tri.dims(), (1, 1, 1));
    }

    #[test]
    fn solvable_hint_is_decomposable() {
        let h3 = LieAlgebra::heisenberg();
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0]));
        let tri = tri_of(&h3, &d);
        let report = algebra_decomposability_report(&h3, &tri, ClassHint::Solvable).unwrap();
        assert_eq!(report.verdict, DecomposabilityVerdict::Decomposable);
        assert_eq!(report.derived_dims, vec![3, 1, 0]);
    }

    #[test]
    fn sl2_saddle_is_not_decomposable() {
        let sl2 = LieAlgebra::sl2();
        let d = sl2.ad(&sl2.basis_vector(0));
        let tri = tri_of(&sl2, &d);
        let report =
            algebra_decomposability_report(&sl2, &tri, ClassHint::SemisimpleNoncompact).unwrap();
        assert_eq!(report.verdict, DecomposabilityVerdict::NotDecomposable);
        assert!(!report.zero_spans);
    }

    #[test]
    fn so3_inner_flow_is_decomposable() {
        let so3 = LieAlgebra::so3();
        let x = DVector::from_vec(vec![0.4, -1.1, 0.7]);
        let d = so3.ad(&x);
        let tri = tri_of(&so3, &d);
        let report =
            algebra_decomposability_report(&so3, &tri, ClassHint::SemisimpleCompact).unwrap();
        assert_eq!(report.verdict, DecomposabilityVerdict::Decomposable);
        assert!(report.zero_spans);
    }

    #[test]
    fn wrong_class_hint_is_rejected() {
        let sl2 = LieAlgebra::sl2();
        let d = sl2.ad(&sl2.basis_vector(0));
        let tri = tri_of(&sl2, &d);
        assert!(algebra_decomposability_report(&sl2, &tri, ClassHint::Solvable).is_err());
        assert!(algebra_decomposability_report(&sl2, &tri, ClassHint::SemisimpleCompact).is_err());
        let h3 = LieAlgebra::heisenberg();
        let dh = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0]));
        let trih = tri_of(&h3, &dh);
        assert!(
            algebra_decomposability_report(&h3, &trih, ClassHint::SemisimpleCompact).is_err()
        );
    }

    #[test]
    fn dimension_identity_on_catalog_derivations() {
        let cases: Vec<(LieAlgebra, DMatrix<f64>)> = vec![
            (
                LieAlgebra::abelian(2),
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0])),
            ),
            (
                LieAlgebra::abelian(2),
                DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            ),
            (
                LieAlgebra::abelian(2),
                DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            ),
            (
                LieAlgebra::heisenberg(),
                DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, 0.0])),
            ),
            (LieAlgebra::heisenberg(), {
                let h3 = LieAlgebra::heisenberg();
                h3.ad(&h3.basis_vector(0))
            }),
            (LieAlgebra::sl2(), {
                let sl2 = LieAlgebra::sl2();
                sl2.ad(&sl2.basis_vector(1))
            }),
            (LieAlgebra::so3(), {
                let so3 = LieAlgebra::so3();
                so3.ad(&so3.basis_vector(2))
            }),
        ];
        for (alg, d) in cases {
            let jd = jordan_additive(&d).unwrap();
            let layers = layer_decomposition(&alg, &jd).unwrap();
            let tri = tri_decomposition(&alg, &jd, &layers).unwrap();
            let (p, z, m) = tri.dims();
            assert_eq!(p + z + m, alg.dim());
            assert!(bracket_grading_defect(&alg, &layers) < 1e-9);
        }
    }
}
