//! Finite-dimensional real Lie algebras given by structure constants.
//!
//! The constant array `c[i][j][k]` holds the coefficient of `e_k` in
//! `[e_i, e_j]`. Construction validates antisymmetry and the Jacobi
//! identity; everything downstream may then assume both.

use nalgebra::{DMatrix, DVector};

use crate::error::LieFlowError;
use crate::linalg;
use crate::tol;
use crate::Result;

/// Coordinate vector in the algebra's chosen basis.
pub type AlgebraVector = DVector<f64>;

/// Linear map on the algebra, as a matrix in the chosen basis.
pub type LinearMap = DMatrix<f64>;

/// Real Lie algebra with dense structure constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    labels: Vec<String>,
    /// `c[i][j][k]`: coefficient of `e_k` in `[e_i, e_j]`.
    c: Vec<Vec<Vec<f64>>>,
}

impl LieAlgebra {
    /// Builds an algebra from structure constants, rejecting tables that
    /// break antisymmetry or the Jacobi identity.
    pub fn new(labels: Vec<String>, c: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let dim = labels.len();
        if c.len() != dim || c.iter().any(|p| p.len() != dim || p.iter().any(|q| q.len() != dim)) {
            return Err(LieFlowError::DimensionMismatch(format!(
                "structure constants must form a {dim}x{dim}x{dim} array"
            )));
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let defect = (c[i][j][k] + c[j][i][k]).abs();
                    if defect > 1e-12 {
                        return Err(LieFlowError::Antisymmetry { i, j, k, defect });
                    }
                }
            }
        }
        let algebra = LieAlgebra { dim, labels, c };
        algebra.check_jacobi()?;
        Ok(algebra)
    }

    fn check_jacobi(&self) -> Result<()> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    let ei = self.basis_vector(i);
                    let ej = self.basis_vector(j);
                    let ek = self.basis_vector(k);
                    let cycle = self.bracket(&self.bracket(&ei, &ej), &ek)
                        + self.bracket(&self.bracket(&ej, &ek), &ei)
                        + self.bracket(&self.bracket(&ek, &ei), &ej);
                    let defect = cycle.amax();
                    if defect > tol::JACOBI_TOL {
                        return Err(LieFlowError::Jacobi { i, j, k, defect });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn basis_vector(&self, i: usize) -> AlgebraVector {
        let mut v = AlgebraVector::zeros(self.dim);
        v[i] = 1.0;
        v
    }

    /// Structure constant `c[i][j][k]`.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[i][j][k]
    }

    /// Lie bracket of two coordinate vectors.
    pub fn bracket(&self, u: &AlgebraVector, v: &AlgebraVector) -> AlgebraVector {
        assert_eq!(u.len(), self.dim);
        assert_eq!(v.len(), self.dim);
        let mut out = AlgebraVector::zeros(self.dim);
        for i in 0..self.dim {
            if u[i] == 0.0 {
                continue;
            }
            for j in 0..self.dim {
                if v[j] == 0.0 {
                    continue;
                }
                let uv = u[i] * v[j];
                for k in 0..self.dim {
                    let cijk = self.c[i][j][k];
                    if cijk != 0.0 {
                        out[k] += uv * cijk;
                    }
                }
            }
        }
        out
    }

    /// Largest Jacobi-cycle residual over all basis triples.
    pub fn jacobi_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                for k in 0..self.dim {
                    let ei = self.basis_vector(i);
                    let ej = self.basis_vector(j);
                    let ek = self.basis_vector(k);
                    let cycle = self.bracket(&self.bracket(&ei, &ej), &ek)
                        + self.bracket(&self.bracket(&ej, &ek), &ei)
                        + self.bracket(&self.bracket(&ek, &ei), &ej);
                    worst = worst.max(cycle.amax());
                }
            }
        }
        worst
    }

    /// Adjoint map of `x`: the matrix of `y -> [x, y]`.
    pub fn ad(&self, x: &AlgebraVector) -> LinearMap {
        assert_eq!(x.len(), self.dim);
        let mut m = LinearMap::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let col = self.bracket(x, &self.basis_vector(j));
            m.set_column(j, &col);
        }
        m
    }

    /// Largest Leibniz defect `|M[u,v] - [Mu,v] - [u,Mv]|` over basis pairs.
    pub fn leibniz_defect(&self, m: &LinearMap) -> f64 {
        assert_eq!(m.nrows(), self.dim);
        assert_eq!(m.ncols(), self.dim);
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let ei = self.basis_vector(i);
                let ej = self.basis_vector(j);
                let lhs = m * self.bracket(&ei, &ej);
                let rhs = self.bracket(&(m * &ei), &ej) + self.bracket(&ei, &(m * &ej));
                worst = worst.max((lhs - rhs).amax());
            }
        }
        worst
    }

    /// Whether `m` satisfies the Leibniz rule within tolerance.
    pub fn is_derivation(&self, m: &LinearMap) -> bool {
        self.leibniz_defect(m) < tol::DERIVATION_TOL
    }

    /// Rejects maps whose Leibniz defect exceeds the tolerance.
    pub fn check_derivation(&self, m: &LinearMap) -> Result<()> {
        let mut worst = (0, 0, 0.0f64);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let ei = self.basis_vector(i);
                let ej = self.basis_vector(j);
                let lhs = m * self.bracket(&ei, &ej);
                let rhs = self.bracket(&(m * &ei), &ej) + self.bracket(&ei, &(m * &ej));
                let defect = (lhs - rhs).amax();
                if defect > worst.2 {
                    worst = (i, j, defect);
                }
            }
        }
        if worst.2 > tol::DERIVATION_TOL {
            return Err(LieFlowError::NotADerivation { i: worst.0, j: worst.1, defect: worst.2 });
        }
        Ok(())
    }

    /// Killing form matrix `K[i][j] = tr(ad e_i ad e_j)`.
    pub fn killing_form(&self) -> DMatrix<f64> {
        let ads: Vec<LinearMap> = (0..self.dim).map(|i| self.ad(&self.basis_vector(i))).collect();
        let mut k = DMatrix::<f64>::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                let t = (&ads[i] * &ads[j]).trace();
                k[(i, j)] = t;
                k[(j, i)] = t;
            }
        }
        k
    }

    /// Orthonormal basis of the span of brackets `[a, b]` over the columns
    /// of the two inputs.
    pub fn bracket_span(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut cols: Vec<AlgebraVector> = Vec::new();
        for p in 0..a.ncols() {
            for q in 0..b.ncols() {
                cols.push(self.bracket(&a.column(p).into_owned(), &b.column(q).into_owned()));
            }
        }
        if cols.is_empty() {
            return DMatrix::<f64>::zeros(self.dim, 0);
        }
        let stacked = DMatrix::from_columns(&cols);
        linalg::column_space_basis(&stacked, tol::RANK_REL_TOL)
    }

    /// Derived series `g, [g,g], [[g,g],[g,g]], ...` as orthonormal bases,
    /// ending when a term vanishes or the dimension stops dropping.
    pub fn derived_series(&self) -> Vec<DMatrix<f64>> {
        let mut series = vec![DMatrix::<f64>::identity(self.dim, self.dim)];
        loop {
            let last = series.last().unwrap();
            let next = self.bracket_span(last, last);
            let stop = next.ncols() == 0 || next.ncols() >= last.ncols();
            series.push(next);
            if stop {
                break;
            }
        }
        series
    }

    /// Lower central series `g, [g,g], [g,[g,g]], ...` as orthonormal bases.
    pub fn lower_central_series(&self) -> Vec<DMatrix<f64>> {
        let full = DMatrix::<f64>::identity(self.dim, self.dim);
        let mut series = vec![full.clone()];
        loop {
            let last = series.last().unwrap();
            let next = self.bracket_span(&full, last);
            let stop = next.ncols() == 0 || next.ncols() >= last.ncols();
            series.push(next);
            if stop {
                break;
            }
        }
        series
    }

    /// Whether the derived series reaches zero.
    pub fn is_solvable(&self) -> bool {
        self.derived_series().last().unwrap().ncols() == 0
    }

    /// Nilpotency step: smallest `s` with `g^{s+1} = 0` in the lower
    /// central series, or `None` when the series stabilizes above zero.
    pub fn nilpotency_step(&self) -> Option<usize> {
        let series = self.lower_central_series();
        if series.last().unwrap().ncols() == 0 {
            Some(series.len() - 1)
        } else {
            None
        }
    }

    // -- catalog constructors -------------------------------------------

    /// Abelian algebra of the given dimension.
    pub fn abelian(dim: usize) -> Self {
        let labels = (0..dim).map(|i| format!("e{}", i + 1)).collect();
        let c = vec![vec![vec![0.0; dim]; dim]; dim];
        LieAlgebra::new(labels, c).expect("abelian constants are valid")
    }

    /// Heisenberg algebra: `[X, Y] = Z`.
    pub fn heisenberg() -> Self {
        let labels = vec!["X".into(), "Y".into(), "Z".into()];
        let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
        c[0][1][2] = 1.0;
        c[1][0][2] = -1.0;
        LieAlgebra::new(labels, c).expect("heisenberg constants are valid")
    }

    /// sl(2, R) in the basis `H, E, F`: `[H,E] = 2E`, `[H,F] = -2F`,
    /// `[E,F] = H`.
    pub fn sl2() -> Self {
        let labels = vec!["H".into(), "E".into(), "F".into()];
        let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
        c[0][1][1] = 2.0;
        c[1][0][1] = -2.0;
        c[0][2][2] = -2.0;
        c[2][0][2] = 2.0;
        c[1][2][0] = 1.0;
        c[2][1][0] = -1.0;
        LieAlgebra::new(labels, c).expect("sl2 constants are valid")
    }

    /// so(3) in the cyclic basis: `[e1,e2] = e3`, `[e2,e3] = e1`,
    /// `[e3,e1] = e2`.
    pub fn so3() -> Self {
        let labels = vec!["e1".into(), "e2".into(), "e3".into()];
        let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
        c[0][1][2] = 1.0;
        c[1][0][2] = -1.0;
        c[1][2][0] = 1.0;
        c[2][1][0] = -1.0;
        c[2][0][1] = 1.0;
        c[0][2][1] = -1.0;
        LieAlgebra::new(labels, c).expect("so3 constants are valid")
    }

    // -- definition file format -----------------------------------------

    /// Parses the plain-text definition format:
    ///
    /// ```text
    /// # comment
    /// dim 3
    /// labels X Y Z
    /// c 0 1 2 1.0
    /// ```
    ///
    /// Each `c i j k v` line sets `[e_i, e_j] += v e_k`; the antisymmetric
    /// mirror entry is filled in automatically and checked when given
    /// explicitly.
    pub fn from_definition_str(text: &str) -> Result<Self> {
        let ctx = "algebra definition";
        let mut dim: Option<usize> = None;
        let mut labels: Option<Vec<String>> = None;
        let mut entries: Vec<(usize, usize, usize, f64)> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap();
            match key {
                "dim" => {
                    let v = parts
                        .next()
                        .ok_or_else(|| LieFlowError::parse(ctx, format!("line {}: dim needs a value", lineno + 1)))?;
                    dim = Some(v.parse().map_err(|_| {
                        LieFlowError::parse(ctx, format!("line {}: bad dim '{}'", lineno + 1, v))
                    })?);
                }
                "labels" => {
                    labels = Some(parts.map(str::to_owned).collect());
                }
                "c" => {
                    let vals: Vec<&str> = parts.collect();
                    if vals.len() != 4 {
                        return Err(LieFlowError::parse(
                            ctx,
                            format!("line {}: expected 'c i j k value'", lineno + 1),
                        ));
                    }
                    let idx: Vec<usize> = vals[..3]
                        .iter()
                        .map(|s| {
                            s.parse().map_err(|_| {
                                LieFlowError::parse(ctx, format!("line {}: bad index '{}'", lineno + 1, s))
                            })
                        })
                        .collect::<Result<_>>()?;
                    let value: f64 = vals[3].parse().map_err(|_| {
                        LieFlowError::parse(ctx, format!("line {}: bad value '{}'", lineno + 1, vals[3]))
                    })?;
                    entries.push((idx[0], idx[1], idx[2], value));
                }
                other => {
                    return Err(LieFlowError::parse(ctx, format!("line {}: unknown key '{}'", lineno + 1, other)));
                }
            }
        }

        let dim = dim.ok_or_else(|| LieFlowError::parse(ctx, "missing 'dim'"))?;
        let labels = labels.unwrap_or_else(|| (0..dim).map(|i| format!("e{}", i + 1)).collect());
        if labels.len() != dim {
            return Err(LieFlowError::parse(ctx, format!("{} labels for dim {dim}", labels.len())));
        }

        let mut c = vec![vec![vec![0.0f64; dim]; dim]; dim];
        let mut set = vec![vec![vec![false; dim]; dim]; dim];
        for (i, j, k, v) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(LieFlowError::parse(ctx, format!("index out of range in c {i} {j} {k}")));
            }
            if set[i][j][k] && (c[i][j][k] - v).abs() > 1e-12 {
                return Err(LieFlowError::parse(ctx, format!("conflicting entries for c {i} {j} {k}")));
            }
            c[i][j][k] = v;
            set[i][j][k] = true;
            if !set[j][i][k] {
                c[j][i][k] = -v;
                set[j][i][k] = true;
            } else if (c[j][i][k] + v).abs() > 1e-12 {
                return Err(LieFlowError::parse(ctx, format!("entries for c {i} {j} {k} break antisymmetry")));
            }
        }
        LieAlgebra::new(labels, c)
    }

    /// Loads a definition file from disk.
    pub fn load_definition(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_definition_str(&text)
    }
}
