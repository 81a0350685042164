//! Orthogonal projections onto spectraplexes: the scaled simplex for
//! coordinate vectors and matrix eigenvalues, and the unit-ball slice for
//! spin elements.

use nalgebra::DVector;

use crate::eja::{AlgebraElement, AlgebraKind};
use crate::error::{Error, Result};

/// Target simplex `{x ≥ 0 : Σx = radius}`.
#[derive(Debug, Clone, Copy)]
pub struct SimplexSpec {
    pub m: usize,
    pub radius: f64,
}

impl SimplexSpec {
    pub fn new(m: usize, radius: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::InvalidArgument("simplex radius must be positive".into()));
        }
        Ok(Self { m, radius })
    }

    pub fn unit(m: usize) -> Self {
        Self { m, radius: 1.0 }
    }
}

/// Euclidean projection onto the simplex, sort-based threshold method.
///
/// Returns `x = max(0, b + μ·1)` where μ is the unique multiplier with
/// `Σ max(0, bᵢ + μ) = radius`.
pub fn project_simplex(b: &DVector<f64>, spec: &SimplexSpec) -> DVector<f64> {
    assert_eq!(b.len(), spec.m, "input length must match the simplex spec");
    let mut sorted: Vec<f64> = b.iter().copied().collect();
    sorted.sort_by(|a, c| c.total_cmp(a));

    let mut cumsum = 0.0;
    let mut mu = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (spec.radius - cumsum) / (j + 1) as f64;
        if u + candidate > 0.0 {
            mu = candidate;
        } else {
            break;
        }
    }
    DVector::from_iterator(b.len(), b.iter().map(|&v| (v + mu).max(0.0)))
}

/// Euclidean projection onto the simplex, linear-time scan (alternative
/// backend with the same contract as [`project_simplex`]).
pub fn project_simplex_condat(b: &DVector<f64>, spec: &SimplexSpec) -> DVector<f64> {
    assert_eq!(b.len(), spec.m, "input length must match the simplex spec");
    let a = spec.radius;
    let y = b.as_slice();

    let mut v: Vec<f64> = Vec::with_capacity(y.len());
    let mut v_tilde: Vec<f64> = Vec::new();
    v.push(y[0]);
    let mut rho = y[0] - a;

    for &yn in &y[1..] {
        if yn > rho {
            rho += (yn - rho) / (v.len() + 1) as f64;
            if rho > yn - a {
                v.push(yn);
            } else {
                v_tilde.append(&mut v);
                v.push(yn);
                rho = yn - a;
            }
        }
    }
    for &yv in &v_tilde {
        if yv > rho {
            v.push(yv);
            rho += (yv - rho) / v.len() as f64;
        }
    }
    loop {
        let before = v.len();
        let mut i = 0;
        while i < v.len() {
            if v[i] <= rho {
                let yv = v.swap_remove(i);
                rho += (rho - yv) / v.len() as f64;
            } else {
                i += 1;
            }
        }
        if v.len() == before {
            break;
        }
    }
    let tau = rho;
    DVector::from_iterator(y.len(), y.iter().map(|&val| (val - tau).max(0.0)))
}

/// Euclidean projection onto the spectraplex `{x ∈ K : ⟨e, x⟩ = 1}` of the
/// element's algebra.
///
/// Coordinate vectors project onto the unit simplex; a spin element
/// `(b̃, b₀)` maps to `(b̃ / max(1, ‖b̃‖), 1)`; a symmetric matrix projects
/// its eigenvalues onto the unit simplex on its own eigenvector frame.
pub fn project_spectraplex(b: &AlgebraElement) -> Result<AlgebraElement> {
    let algebra = b.algebra();
    match algebra.kind() {
        AlgebraKind::RealVector => {
            let x = project_simplex(b.coords(), &SimplexSpec::unit(algebra.dim()));
            AlgebraElement::new(algebra, x)
        }
        AlgebraKind::SpinFactor => {
            let n = algebra.ambient();
            let tail = b.coords().rows(0, n - 1);
            let scale = 1.0 / tail.norm().max(1.0);
            let mut out = DVector::zeros(n);
            for i in 0..n - 1 {
                out[i] = tail[i] * scale;
            }
            out[n - 1] = 1.0;
            AlgebraElement::new(algebra, out)
        }
        AlgebraKind::SymMatrix => {
            let mat = b.to_matrix()?;
            let eig = nalgebra::SymmetricEigen::try_new(mat, f64::EPSILON, 0)
                .ok_or_else(|| Error::Numerical("symmetric eigensolver failed".into()))?;
            // The simplex projection commutes with permutations, so the
            // eigenvalues do not need sorting here.
            let lam = project_simplex(&eig.eigenvalues, &SimplexSpec::unit(eig.eigenvalues.len()));
            let out = &eig.eigenvectors
                * nalgebra::DMatrix::from_diagonal(&lam)
                * eig.eigenvectors.transpose();
            Ok(AlgebraElement::symmetrized(
                algebra,
                DVector::from_vec(out.as_slice().to_vec()),
            ))
        }
    }
}
