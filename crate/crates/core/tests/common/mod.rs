//! Shared test support: independent projection oracles, a finite-difference
//! gradient, and an instrumented batch runner that retains full solve
//! results.
//!
//! The oracles deliberately avoid the library's projection code paths: the
//! simplex oracle enumerates the KKT active sets exhaustively, the ball
//! oracle bisects on the multiplier.

use cone_angles::eja::{AlgebraElement, AlgebraKind};
use cone_angles::harness::{sample_initial, ProblemSpec};
use cone_angles::solver::{solve, SolveResult, SolverConfig};
use cone_angles::verify::phi;
use cone_angles::ConePair;
use nalgebra::DVector;

/// Projection onto `{x ≥ 0, Σx = radius}` by exhaustive enumeration of the
/// 2^m − 1 candidate active sets.
pub fn simplex_oracle(b: &DVector<f64>, radius: f64) -> DVector<f64> {
    let m = b.len();
    assert!(m <= 20, "oracle is exponential in the dimension");
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 1u32..(1 << m) {
        let support: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let sum: f64 = support.iter().map(|&i| b[i]).sum();
        let mu = (radius - sum) / support.len() as f64;
        // KKT: positive entries on the support, nonpositive slacks off it
        let feasible = (0..m).all(|i| {
            if support.contains(&i) {
                b[i] + mu >= -1e-9
            } else {
                b[i] + mu <= 1e-9
            }
        });
        if !feasible {
            continue;
        }
        let mut x = DVector::zeros(m);
        for &i in &support {
            x[i] = (b[i] + mu).max(0.0);
        }
        let dist = (&x - b).norm();
        if best.as_ref().map_or(true, |(d, _)| dist < *d) {
            best = Some((dist, x));
        }
    }
    best.expect("some active set is always feasible").1
}

/// Projection of a spin element onto its spectraplex via bisection on the
/// ball-projection multiplier.
pub fn spin_oracle(b: &AlgebraElement) -> AlgebraElement {
    let n = b.algebra().ambient();
    let tail = b.coords().rows(0, n - 1).clone_owned();
    let nt = tail.norm();
    let xi = if nt <= 1.0 {
        tail
    } else {
        // ξ = b̃ / (1 + ν) with ν ≥ 0 solving ‖b̃‖/(1 + ν) = 1
        let (mut lo, mut hi) = (0.0f64, nt);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if nt / (1.0 + mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let nu = 0.5 * (lo + hi);
        tail / (1.0 + nu)
    };
    let mut coords = DVector::zeros(n);
    coords.rows_mut(0, n - 1).copy_from(&xi);
    coords[n - 1] = 1.0;
    AlgebraElement::new(b.algebra(), coords).unwrap()
}

/// Spectraplex projection oracle for all three kinds; for matrices, the
/// eigenvalue projection runs through the enumeration oracle.
pub fn spectraplex_oracle(b: &AlgebraElement) -> AlgebraElement {
    match b.algebra().kind() {
        AlgebraKind::RealVector => {
            AlgebraElement::new(b.algebra(), simplex_oracle(b.coords(), 1.0)).unwrap()
        }
        AlgebraKind::SpinFactor => spin_oracle(b),
        AlgebraKind::SymMatrix => {
            let d = b.spectral_decompose().unwrap();
            let lam = simplex_oracle(&d.eigenvalues, 1.0);
            d.with_eigenvalues(&lam)
        }
    }
}

/// Orthogonal coordinate basis of an algebra: canonical vectors, or the
/// symmetrized matrix units `E_ij`.
pub fn coordinate_basis(el: &AlgebraElement) -> Vec<AlgebraElement> {
    let a = el.algebra();
    match a.kind() {
        AlgebraKind::RealVector | AlgebraKind::SpinFactor => (0..a.dim())
            .map(|i| {
                let mut c = DVector::zeros(a.dim());
                c[i] = 1.0;
                AlgebraElement::new(a, c).unwrap()
            })
            .collect(),
        AlgebraKind::SymMatrix => {
            let n = a.ambient();
            let mut basis = Vec::with_capacity(n * (n + 1) / 2);
            for j in 0..n {
                for i in 0..=j {
                    let mut c = DVector::zeros(n * n);
                    c[j * n + i] = 1.0;
                    c[i * n + j] = 1.0;
                    basis.push(AlgebraElement::new(a, c).unwrap());
                }
            }
            basis
        }
    }
}

/// Central finite-difference estimate of `∇ₓΦ` (side = 0) or `∇ᵧΦ`
/// (side = 1), assembled over an orthogonal basis of the side's coordinates.
pub fn fd_gradient(
    x: &AlgebraElement,
    y: &AlgebraElement,
    pair: &ConePair,
    side: usize,
    h: f64,
) -> AlgebraElement {
    let at = if side == 0 { x } else { y };
    let mut grad = AlgebraElement::zeros(at.algebra());
    for d in coordinate_basis(at) {
        let (plus, minus) = if side == 0 {
            (
                phi(&x.add_scaled(h, &d), y, pair).unwrap(),
                phi(&x.add_scaled(-h, &d), y, pair).unwrap(),
            )
        } else {
            (
                phi(x, &y.add_scaled(h, &d), pair).unwrap(),
                phi(x, &y.add_scaled(-h, &d), pair).unwrap(),
            )
        };
        let deriv = (plus - minus) / (2.0 * h);
        let dd = d.inner(&d).unwrap();
        grad = grad.add_scaled(deriv / dd, &d);
    }
    grad
}

/// Replays the exact start streams of `run_batch`, retaining the full solve
/// results for invariant checks. Panics on any individual solve error.
pub fn instrumented_batch(
    spec: &ProblemSpec,
    config: &SolverConfig,
    starts: usize,
) -> (ConePair, Vec<SolveResult>) {
    let pair = spec.build_pair().expect("pair construction");
    let results = (0..starts)
        .map(|i| {
            let mut rng = spec.start_rng(i);
            let (x0, y0) = sample_initial(&pair, &mut rng);
            solve(&pair, config, &x0, &y0).expect("solve")
        })
        .collect();
    (pair, results)
}

pub fn best_angle(results: &[SolveResult]) -> f64 {
    results.iter().map(|r| r.angle).fold(f64::NEG_INFINITY, f64::max)
}
