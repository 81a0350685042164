//! Cones represented as linear images of symmetric cones: the linear map,
//! its adjoint, and constructors for the cone families used by the
//! experiment harness (polyhedral, Schur, ellipsoidal, semidefinite, and
//! entrywise-nonnegative symmetric matrices).

use nalgebra::{DMatrix, DVector};

use crate::eja::{Algebra, AlgebraElement, AlgebraKind};
use crate::error::{Error, Result};
use crate::projection::{project_simplex, SimplexSpec};

/// Norm below which an image vector counts as vanishing.
const ZERO_IMAGE_TOL: f64 = 1e-12;

/// Coordinate realization of the map `G : 𝕏 → 𝕍` and its adjoint.
///
/// Ambient vectors are flat: plain coordinates for `ℝⁿ`, dense column-major
/// storage for symmetric-matrix spaces (where the flat dot product equals
/// the trace inner product).
#[derive(Debug, Clone)]
pub enum LinearMap {
    /// Pass-through; source coordinates and ambient vectors coincide.
    Identity { dim: usize },
    /// Dense matrix, `out_dim × in_dim`. Columns are the generator images of
    /// the canonical basis.
    Dense(DMatrix<f64>),
    /// `(ξ, t) ↦ (Wξ, t)` with `W` symmetric positive definite; self-adjoint.
    EllipsoidalFactor { factor: DMatrix<f64> },
    /// Embedding of `ℝ^{n(n+1)/2}` onto symmetric matrices: coordinate `k`
    /// maps to the canonical symmetric basis matrix `E_{i_k, j_k}`, with the
    /// upper triangle enumerated column-wise.
    SymEmbedding { n: usize },
}

impl LinearMap {
    pub fn in_dim(&self) -> usize {
        match self {
            LinearMap::Identity { dim } => *dim,
            LinearMap::Dense(m) => m.ncols(),
            LinearMap::EllipsoidalFactor { factor } => factor.nrows() + 1,
            LinearMap::SymEmbedding { n } => n * (n + 1) / 2,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            LinearMap::Identity { dim } => *dim,
            LinearMap::Dense(m) => m.nrows(),
            LinearMap::EllipsoidalFactor { factor } => factor.nrows() + 1,
            LinearMap::SymEmbedding { n } => n * n,
        }
    }

    pub fn apply_coords(&self, x: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(x.len(), self.in_dim());
        match self {
            LinearMap::Identity { .. } => x.clone(),
            LinearMap::Dense(m) => m * x,
            LinearMap::EllipsoidalFactor { factor } => {
                let k = factor.nrows();
                let mut out = DVector::zeros(k + 1);
                out.rows_mut(0, k).copy_from(&(factor * x.rows(0, k)));
                out[k] = x[k];
                out
            }
            LinearMap::SymEmbedding { n } => {
                let n = *n;
                let mut out = DVector::zeros(n * n);
                for (k, &v) in x.iter().enumerate() {
                    let (i, j) = sym_index(k);
                    out[j * n + i] = v;
                    out[i * n + j] = v;
                }
                out
            }
        }
    }

    pub fn adjoint_coords(&self, v: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(v.len(), self.out_dim());
        match self {
            LinearMap::Identity { .. } => v.clone(),
            LinearMap::Dense(m) => m.transpose() * v,
            LinearMap::EllipsoidalFactor { .. } => self.apply_coords(v),
            LinearMap::SymEmbedding { n } => {
                let n = *n;
                let count = n * (n + 1) / 2;
                DVector::from_iterator(
                    count,
                    (0..count).map(|k| {
                        let (i, j) = sym_index(k);
                        if i == j {
                            v[j * n + i]
                        } else {
                            v[j * n + i] + v[i * n + j]
                        }
                    }),
                )
            }
        }
    }
}

/// Position `(i, j)` of the k-th upper-triangle entry, enumerated
/// column-wise (0-based): `j = min{ℓ : (ℓ+1)(ℓ+2)/2 > k}`, `i = k − j(j+1)/2`.
fn sym_index(k: usize) -> (usize, usize) {
    let mut j = 0usize;
    while (j + 1) * (j + 2) / 2 <= k {
        j += 1;
    }
    (k - j * (j + 1) / 2, j)
}

/// A closed convex cone `P = G(K)` given by an algebra and a linear map
/// whose image of the cone of squares is `P`.
#[derive(Debug, Clone)]
pub struct LiscCone {
    algebra: Algebra,
    map: LinearMap,
    label: String,
}

impl LiscCone {
    /// Wraps an algebra and a map, checking dimensions and that no canonical
    /// frame idempotent maps to zero.
    pub fn new(algebra: Algebra, map: LinearMap, label: impl Into<String>) -> Result<Self> {
        if map.in_dim() != algebra.dim() {
            return Err(Error::DimensionMismatch(format!(
                "map expects {} source coordinates, algebra has {}",
                map.in_dim(),
                algebra.dim()
            )));
        }
        let cone = Self { algebra, map, label: label.into() };
        for c in algebra.canonical_frame() {
            if cone.map.apply_coords(c.coords()).norm() <= ZERO_IMAGE_TOL {
                return Err(Error::InvalidCone(format!(
                    "map vanishes on a canonical frame idempotent of {}",
                    cone.label
                )));
            }
        }
        Ok(cone)
    }

    pub fn algebra(&self) -> Algebra {
        self.algebra
    }

    pub fn map(&self) -> &LinearMap {
        &self.map
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn out_dim(&self) -> usize {
        self.map.out_dim()
    }

    pub fn apply(&self, x: &AlgebraElement) -> Result<DVector<f64>> {
        if x.algebra() != self.algebra {
            return Err(Error::AlgebraMismatch(format!(
                "element algebra {:?} does not match cone {}",
                x.algebra(),
                self.label
            )));
        }
        Ok(self.map.apply_coords(x.coords()))
    }

    pub fn adjoint_apply(&self, v: &DVector<f64>) -> Result<AlgebraElement> {
        if v.len() != self.map.out_dim() {
            return Err(Error::DimensionMismatch(format!(
                "ambient vector has length {}, cone {} maps into dimension {}",
                v.len(),
                self.label,
                self.map.out_dim()
            )));
        }
        Ok(AlgebraElement::symmetrized(self.algebra, self.map.adjoint_coords(v)))
    }

    /// Pointedness check for cones over `ℝⁿ`: searches for a nonzero
    /// nonnegative combination of generators summing to zero by minimizing
    /// `‖Gx‖` over the simplex with a projected gradient loop. Returns
    /// `true` when the residual stays above `1e-9`.
    pub fn verify_pointed(&self) -> Result<bool> {
        if self.algebra.kind() != AlgebraKind::RealVector {
            return Err(Error::Unsupported(
                "pointedness check is only available for cones over ℝⁿ".into(),
            ));
        }
        let p = self.algebra.dim();
        let spec = SimplexSpec::unit(p);
        // Lipschitz constant of the gradient via a few power iterations on GᵀG.
        let mut z = DVector::from_element(p, 1.0 / (p as f64).sqrt());
        let mut lip = 1.0;
        for _ in 0..30 {
            let w = self.map.adjoint_coords(&self.map.apply_coords(&z));
            let nw = w.norm();
            if nw == 0.0 {
                break;
            }
            lip = nw / z.norm();
            z = w / nw;
        }
        let step = 1.0 / lip.max(1e-12);
        let mut best = f64::INFINITY;
        // a handful of starts: barycenter plus vertices
        let mut starts = vec![DVector::from_element(p, 1.0 / p as f64)];
        for i in 0..p.min(16) {
            let mut v = DVector::zeros(p);
            v[i] = 1.0;
            starts.push(v);
        }
        for mut x in starts {
            for _ in 0..2000 {
                let g = self.map.adjoint_coords(&self.map.apply_coords(&x));
                let next = project_simplex(&(&x - &g * step), &spec);
                let moved = (&next - &x).norm();
                x = next;
                if moved < 1e-14 {
                    break;
                }
            }
            best = best.min(self.map.apply_coords(&x).norm());
        }
        Ok(best > 1e-9)
    }
}

/// A pair of cones in a common ambient space.
#[derive(Debug, Clone)]
pub struct ConePair {
    p: LiscCone,
    q: LiscCone,
}

impl ConePair {
    pub fn new(p: LiscCone, q: LiscCone) -> Result<Self> {
        if p.out_dim() != q.out_dim() {
            return Err(Error::DimensionMismatch(format!(
                "cones {} and {} live in different ambient spaces ({} vs {})",
                p.label(),
                q.label(),
                p.out_dim(),
                q.out_dim()
            )));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &LiscCone {
        &self.p
    }

    pub fn q(&self) -> &LiscCone {
        &self.q
    }
}

/// Polyhedral cone generated by the columns of `generators`.
pub fn make_polyhedral(generators: DMatrix<f64>) -> Result<LiscCone> {
    if generators.ncols() == 0 || generators.nrows() == 0 {
        return Err(Error::InvalidCone("generator matrix is empty".into()));
    }
    for j in 0..generators.ncols() {
        if generators.column(j).norm() <= ZERO_IMAGE_TOL {
            return Err(Error::InvalidCone(format!("generator column {j} is zero")));
        }
    }
    let algebra = Algebra::real_vector(generators.ncols())?;
    LiscCone::new(algebra, LinearMap::Dense(generators), "polyhedral")
}

/// Nonnegative orthant of `ℝⁿ` (identity map).
pub fn make_orthant(n: usize) -> Result<LiscCone> {
    let algebra = Algebra::real_vector(n)?;
    LiscCone::new(algebra, LinearMap::Identity { dim: n }, "orthant")
}

/// Schur cone in `ℝⁿ`: generated by the `n−1` normalized difference vectors
/// `(e_k − e_{k+1})/√2`.
pub fn make_schur(n: usize) -> Result<LiscCone> {
    if n < 2 {
        return Err(Error::InvalidArgument("schur cone needs n >= 2".into()));
    }
    let inv = 1.0 / 2.0_f64.sqrt();
    let mut g = DMatrix::zeros(n, n - 1);
    for k in 0..n - 1 {
        g[(k, k)] = inv;
        g[(k + 1, k)] = -inv;
    }
    let mut cone = make_polyhedral(g)?;
    cone.label = "schur".into();
    Ok(cone)
}

/// Symmetric inverse square root of a positive definite matrix:
/// returns `B` with `B·A·B = I`.
pub fn sym_inv_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    let asym = (a - a.transpose()).abs().max();
    if asym > 1e-10 * (1.0 + a.abs().max()) {
        return Err(Error::InvalidArgument("matrix must be symmetric".into()));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("symmetric eigensolver failed".into()))?;
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 1e-10 {
        return Err(Error::InvalidCone(format!(
            "matrix is not positive definite (min eigenvalue {min:.3e})"
        )));
    }
    let inv_sqrt = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| 1.0 / l.sqrt()),
    );
    let b = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    Ok((&b + b.transpose()) * 0.5)
}

/// Ellipsoidal cone `{(ξ, t) : √(ξᵀAξ) ≤ t}` in `ℝⁿ`, represented over the
/// spin algebra by `(ξ, t) ↦ (A^{-1/2} ξ, t)`. `A` has order `n−1`.
pub fn make_ellipsoidal(a: &DMatrix<f64>, n: usize) -> Result<LiscCone> {
    if n < 2 {
        return Err(Error::InvalidArgument("ellipsoidal cone needs n >= 2".into()));
    }
    if a.nrows() != n - 1 || a.ncols() != n - 1 {
        return Err(Error::DimensionMismatch(format!(
            "expected a matrix of order {}, got {}×{}",
            n - 1,
            a.nrows(),
            a.ncols()
        )));
    }
    let factor = sym_inv_sqrt(a)?;
    let algebra = Algebra::spin_factor(n)?;
    LiscCone::new(algebra, LinearMap::EllipsoidalFactor { factor }, "ellipsoidal")
}

/// The positive semidefinite cone of order `n` as the identity image of
/// itself.
pub fn make_sdp_identity(n: usize) -> Result<LiscCone> {
    let algebra = Algebra::sym_matrix(n)?;
    LiscCone::new(algebra, LinearMap::Identity { dim: n * n }, "sdp")
}

/// The cone of entrywise-nonnegative symmetric matrices of order `n` as the
/// image of the orthant of `ℝ^{n(n+1)/2}` under the canonical-basis
/// embedding.
pub fn make_nonneg_sym(n: usize) -> Result<LiscCone> {
    if n == 0 {
        return Err(Error::InvalidArgument("matrix order must be positive".into()));
    }
    let algebra = Algebra::real_vector(n * (n + 1) / 2)?;
    LiscCone::new(algebra, LinearMap::SymEmbedding { n }, "nonneg_sym")
}
