//! Euclidean Jordan algebra primitives for the three algebra kinds used by
//! the cone representations: coordinate vectors (`ℝⁿ`), the spin algebra
//! (`ℝ^{n-1} × ℝ`), and real symmetric matrices.
//!
//! Every element carries its algebra tag; inner products, traces, unit
//! elements and spectral decompositions dispatch on it. All values are
//! immutable after construction and safe to share across threads.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated when adopting raw symmetric-matrix coordinates.
const SYM_ASYM_TOL: f64 = 1e-12;

/// The three supported algebra kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgebraKind {
    /// `ℝⁿ` with componentwise product; cone of squares is the nonnegative orthant.
    RealVector,
    /// Spin algebra `ℝ^{n-1} × ℝ`; cone of squares is the Lorentz cone.
    SpinFactor,
    /// Symmetric matrices of order n with the trace inner product; cone of
    /// squares is the positive semidefinite cone.
    SymMatrix,
}

/// An algebra descriptor: kind plus ambient parameter.
///
/// Rank, scaling factor and coordinate dimension are derived from the kind,
/// so no inconsistent combination is constructible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Algebra {
    kind: AlgebraKind,
    n: usize,
}

impl Algebra {
    pub fn real_vector(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("real vector algebra needs n >= 1".into()));
        }
        Ok(Self { kind: AlgebraKind::RealVector, n })
    }

    /// Spin algebra on `ℝ^{n-1} × ℝ`; requires `n >= 2`.
    pub fn spin_factor(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("spin factor algebra needs n >= 2".into()));
        }
        Ok(Self { kind: AlgebraKind::SpinFactor, n })
    }

    pub fn sym_matrix(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("symmetric matrix algebra needs n >= 1".into()));
        }
        Ok(Self { kind: AlgebraKind::SymMatrix, n })
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    /// Ambient parameter: vector length, spin dimension, or matrix order.
    pub fn ambient(&self) -> usize {
        self.n
    }

    /// Rank of the algebra: n, 2, or n.
    pub fn rank(&self) -> usize {
        match self.kind {
            AlgebraKind::RealVector | AlgebraKind::SymMatrix => self.n,
            AlgebraKind::SpinFactor => 2,
        }
    }

    /// Scaling factor relating the inner product to the trace form:
    /// `⟨x, y⟩ = kappa · tr(x ∘ y)`.
    pub fn kappa(&self) -> f64 {
        match self.kind {
            AlgebraKind::RealVector | AlgebraKind::SymMatrix => 1.0,
            AlgebraKind::SpinFactor => 0.5,
        }
    }

    /// Coordinate storage dimension: n, n, or n² (dense symmetric storage).
    pub fn dim(&self) -> usize {
        match self.kind {
            AlgebraKind::RealVector | AlgebraKind::SpinFactor => self.n,
            AlgebraKind::SymMatrix => self.n * self.n,
        }
    }

    /// The unit element: all-ones vector, `(0,…,0,1)`, or the identity matrix.
    pub fn unit_element(&self) -> AlgebraElement {
        let coords = match self.kind {
            AlgebraKind::RealVector => DVector::from_element(self.n, 1.0),
            AlgebraKind::SpinFactor => {
                let mut c = DVector::zeros(self.n);
                c[self.n - 1] = 1.0;
                c
            }
            AlgebraKind::SymMatrix => {
                DVector::from_vec(DMatrix::<f64>::identity(self.n, self.n).as_slice().to_vec())
            }
        };
        AlgebraElement { algebra: *self, coords }
    }

    /// Canonical Jordan frame: basis vectors, `½(±e₁, 1)`, or `eᵢeᵢᵀ`.
    pub fn canonical_frame(&self) -> Vec<AlgebraElement> {
        match self.kind {
            AlgebraKind::RealVector => (0..self.n)
                .map(|i| {
                    let mut c = DVector::zeros(self.n);
                    c[i] = 1.0;
                    AlgebraElement { algebra: *self, coords: c }
                })
                .collect(),
            AlgebraKind::SpinFactor => {
                let mut u = DVector::zeros(self.n - 1);
                u[0] = 1.0;
                spin_frame(*self, &u)
            }
            AlgebraKind::SymMatrix => (0..self.n)
                .map(|i| {
                    let mut m = DMatrix::zeros(self.n, self.n);
                    m[(i, i)] = 1.0;
                    AlgebraElement {
                        algebra: *self,
                        coords: DVector::from_vec(m.as_slice().to_vec()),
                    }
                })
                .collect(),
        }
    }
}

/// A point of a Euclidean Jordan algebra in flat coordinates.
///
/// Symmetric matrices are stored densely (n² coordinates, column-major);
/// construction symmetrizes inputs whose asymmetry is below `1e-12` relative
/// and rejects anything worse.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    algebra: Algebra,
    coords: DVector<f64>,
}

impl AlgebraElement {
    pub fn new(algebra: Algebra, coords: DVector<f64>) -> Result<Self> {
        if coords.len() != algebra.dim() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} coordinates, got {}",
                algebra.dim(),
                coords.len()
            )));
        }
        if algebra.kind() == AlgebraKind::SymMatrix {
            let n = algebra.ambient();
            let mut asym: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let a = coords[j * n + i];
                    let b = coords[i * n + j];
                    asym = asym.max((a - b).abs());
                    scale = scale.max(a.abs());
                }
            }
            if asym > SYM_ASYM_TOL * (1.0 + scale) {
                return Err(Error::InvalidArgument(format!(
                    "matrix coordinates are asymmetric: max |A - Aᵀ| = {asym:.3e}"
                )));
            }
            return Ok(Self::symmetrized(algebra, coords));
        }
        Ok(Self { algebra, coords })
    }

    /// Internal constructor that forces exact symmetry for matrix elements.
    /// Used on adjoint images and reconstructions, where rounding may leave
    /// asymmetry of a few ulps.
    pub(crate) fn symmetrized(algebra: Algebra, mut coords: DVector<f64>) -> Self {
        debug_assert_eq!(coords.len(), algebra.dim());
        if algebra.kind() == AlgebraKind::SymMatrix {
            let n = algebra.ambient();
            for i in 0..n {
                for j in 0..i {
                    let avg = 0.5 * (coords[j * n + i] + coords[i * n + j]);
                    coords[j * n + i] = avg;
                    coords[i * n + j] = avg;
                }
            }
        }
        Self { algebra, coords }
    }

    pub fn zeros(algebra: Algebra) -> Self {
        Self { algebra, coords: DVector::zeros(algebra.dim()) }
    }

    /// Builds a symmetric-matrix element from an explicit matrix.
    pub fn from_matrix(mat: &DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch("matrix element must be square".into()));
        }
        let algebra = Algebra::sym_matrix(mat.nrows())?;
        Self::new(algebra, DVector::from_vec(mat.as_slice().to_vec()))
    }

    /// Views a symmetric-matrix element as a matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.algebra.kind() != AlgebraKind::SymMatrix {
            return Err(Error::Unsupported("to_matrix on a non-matrix element".into()));
        }
        let n = self.algebra.ambient();
        Ok(DMatrix::from_column_slice(n, n, self.coords.as_slice()))
    }

    pub fn algebra(&self) -> Algebra {
        self.algebra
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    /// Inner product of the algebra. For all three kinds it coincides with
    /// the dot product of the flat coordinates (the trace inner product for
    /// matrices, since both factors are symmetric).
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch(format!(
                "{:?} vs {:?}",
                self.algebra, other.algebra
            )));
        }
        Ok(self.coords.dot(&other.coords))
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    /// Trace: sum of eigenvalues. Coordinate sum, `2t`, or the matrix trace.
    pub fn trace(&self) -> f64 {
        match self.algebra.kind() {
            AlgebraKind::RealVector => self.coords.sum(),
            AlgebraKind::SpinFactor => 2.0 * self.coords[self.algebra.ambient() - 1],
            AlgebraKind::SymMatrix => {
                let n = self.algebra.ambient();
                (0..n).map(|i| self.coords[i * n + i]).sum()
            }
        }
    }

    /// Spectral decomposition with eigenvalues sorted nonincreasing.
    pub fn spectral_decompose(&self) -> Result<SpectralDecomposition> {
        match self.algebra.kind() {
            AlgebraKind::RealVector => {
                let n = self.algebra.ambient();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| self.coords[b].total_cmp(&self.coords[a]));
                let mut eigenvalues = DVector::zeros(n);
                let mut frame = Vec::with_capacity(n);
                for (slot, &i) in order.iter().enumerate() {
                    eigenvalues[slot] = self.coords[i];
                    let mut c = DVector::zeros(n);
                    c[i] = 1.0;
                    frame.push(AlgebraElement { algebra: self.algebra, coords: c });
                }
                Ok(SpectralDecomposition { eigenvalues, frame })
            }
            AlgebraKind::SpinFactor => {
                let n = self.algebra.ambient();
                let t = self.coords[n - 1];
                let xi = self.coords.rows(0, n - 1);
                let r = xi.norm();
                // At ξ = 0 the frame is not unique; fix u = e₁ for reproducibility.
                let u = if r > 0.0 {
                    DVector::from_iterator(n - 1, xi.iter().map(|v| v / r))
                } else {
                    let mut u = DVector::zeros(n - 1);
                    u[0] = 1.0;
                    u
                };
                let eigenvalues = DVector::from_vec(vec![t + r, t - r]);
                Ok(SpectralDecomposition { eigenvalues, frame: spin_frame(self.algebra, &u) })
            }
            AlgebraKind::SymMatrix => {
                let n = self.algebra.ambient();
                let mat = self.to_matrix()?;
                let eig = nalgebra::SymmetricEigen::try_new(mat, f64::EPSILON, 0)
                    .ok_or_else(|| Error::Numerical("symmetric eigensolver failed".into()))?;
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
                let mut eigenvalues = DVector::zeros(n);
                let mut frame = Vec::with_capacity(n);
                for (slot, &i) in order.iter().enumerate() {
                    eigenvalues[slot] = eig.eigenvalues[i];
                    let q = eig.eigenvectors.column(i);
                    let m = &q * q.transpose();
                    frame.push(AlgebraElement::symmetrized(
                        self.algebra,
                        DVector::from_vec(m.as_slice().to_vec()),
                    ));
                }
                Ok(SpectralDecomposition { eigenvalues, frame })
            }
        }
    }

    /// Smallest eigenvalue; nonnegative exactly when the element lies in the
    /// cone of squares. Cheap closed forms for vectors and spin elements.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        match self.algebra.kind() {
            AlgebraKind::RealVector => {
                Ok(self.coords.iter().copied().fold(f64::INFINITY, f64::min))
            }
            AlgebraKind::SpinFactor => {
                let n = self.algebra.ambient();
                Ok(self.coords[n - 1] - self.coords.rows(0, n - 1).norm())
            }
            AlgebraKind::SymMatrix => {
                let mat = self.to_matrix()?;
                let vals = mat.symmetric_eigenvalues();
                Ok(vals.iter().copied().fold(f64::INFINITY, f64::min))
            }
        }
    }

    pub fn scale(&self, t: f64) -> Self {
        Self { algebra: self.algebra, coords: &self.coords * t }
    }

    /// `self + t · d`.
    pub fn add_scaled(&self, t: f64, d: &Self) -> Self {
        debug_assert_eq!(self.algebra, d.algebra);
        Self { algebra: self.algebra, coords: &self.coords + &d.coords * t }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.algebra, other.algebra);
        Self { algebra: self.algebra, coords: &self.coords - &other.coords }
    }
}

fn spin_frame(algebra: Algebra, u: &DVector<f64>) -> Vec<AlgebraElement> {
    let n = algebra.ambient();
    debug_assert_eq!(u.len(), n - 1);
    let mut plus = DVector::zeros(n);
    let mut minus = DVector::zeros(n);
    for i in 0..n - 1 {
        plus[i] = 0.5 * u[i];
        minus[i] = -0.5 * u[i];
    }
    plus[n - 1] = 0.5;
    minus[n - 1] = 0.5;
    vec![
        AlgebraElement { algebra, coords: plus },
        AlgebraElement { algebra, coords: minus },
    ]
}

/// Eigenvalues plus Jordan frame of an element.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Sorted nonincreasing.
    pub eigenvalues: DVector<f64>,
    /// Primitive idempotents; mutually orthogonal, summing to the unit element.
    pub frame: Vec<AlgebraElement>,
}

impl SpectralDecomposition {
    /// `Σᵢ λᵢ cᵢ`.
    pub fn reconstruct(&self) -> AlgebraElement {
        let algebra = self.frame[0].algebra;
        let mut acc = AlgebraElement::zeros(algebra);
        for (lam, c) in self.eigenvalues.iter().zip(&self.frame) {
            acc = acc.add_scaled(*lam, c);
        }
        acc
    }

    /// Rebuilds an element with the same frame but new eigenvalues.
    pub fn with_eigenvalues(&self, vals: &DVector<f64>) -> AlgebraElement {
        debug_assert_eq!(vals.len(), self.frame.len());
        let algebra = self.frame[0].algebra;
        let mut acc = AlgebraElement::zeros(algebra);
        for (lam, c) in vals.iter().zip(&self.frame) {
            acc = acc.add_scaled(*lam, c);
        }
        acc
    }
}
