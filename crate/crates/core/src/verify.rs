//! Independent evaluation of the objective `Φ(x, y) = ⟨Gx, Hy⟩ / (‖Gx‖‖Hy‖)`,
//! its gradient, stationarity and criticality residuals, and a brute-force
//! angle oracle for desk-scale validation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{ConePair, LinearMap, LiscCone};
use crate::eja::{Algebra, AlgebraElement, AlgebraKind};
use crate::error::{Error, Result};

/// Image norms below this are treated as a structural failure of the cone
/// data rather than a valid evaluation point.
const IMAGE_NORM_TOL: f64 = 1e-14;

/// Point budget for the brute-force grid (product of the two side grids).
const GRID_BUDGET: usize = 20_000_000;

fn images(x: &AlgebraElement, y: &AlgebraElement, pair: &ConePair) -> Result<(DVector<f64>, DVector<f64>, f64, f64)> {
    let gx = pair.p().apply(x)?;
    let hy = pair.q().apply(y)?;
    let ngx = gx.norm();
    let nhy = hy.norm();
    if ngx <= IMAGE_NORM_TOL || nhy <= IMAGE_NORM_TOL {
        return Err(Error::Numerical(format!(
            "vanishing image norm (‖Gx‖ = {ngx:.3e}, ‖Hy‖ = {nhy:.3e})"
        )));
    }
    Ok((gx, hy, ngx, nhy))
}

/// Cosine objective at a feasible point.
pub fn phi(x: &AlgebraElement, y: &AlgebraElement, pair: &ConePair) -> Result<f64> {
    let (gx, hy, ngx, nhy) = images(x, y, pair)?;
    Ok(gx.dot(&hy) / (ngx * nhy))
}

/// Partial gradients of `Φ` with respect to both arguments.
pub fn grad_phi(
    x: &AlgebraElement,
    y: &AlgebraElement,
    pair: &ConePair,
) -> Result<(AlgebraElement, AlgebraElement)> {
    let (gx, hy, ngx, nhy) = images(x, y, pair)?;
    let delta = gx.dot(&hy) / (ngx * nhy);

    let gt_hy = pair.p().adjoint_apply(&hy)?;
    let gt_gx = pair.p().adjoint_apply(&gx)?;
    let grad_x = gt_hy.scale(1.0 / (ngx * nhy)).add_scaled(-delta / (ngx * ngx), &gt_gx);

    let ht_gx = pair.q().adjoint_apply(&gx)?;
    let ht_hy = pair.q().adjoint_apply(&hy)?;
    let grad_y = ht_gx.scale(1.0 / (ngx * nhy)).add_scaled(-delta / (nhy * nhy), &ht_hy);

    Ok((grad_x, grad_y))
}

/// Componentwise residuals of the first-order system for the fractional
/// program: primal feasibility of `(x, y)`, trace normalization, dual
/// feasibility of the slack elements, and complementarity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationarityReport {
    pub primal_feas_x: f64,
    pub primal_feas_y: f64,
    pub norm_x: f64,
    pub norm_y: f64,
    pub dual_feas_x: f64,
    pub dual_feas_y: f64,
    pub compl_x: f64,
    pub compl_y: f64,
    pub total: f64,
}

/// Builds the slack elements
/// `s_x = Gᵀ(Hy)/‖Hy‖ − δ·GᵀGx/‖Gx‖` (and symmetrically `s_y`) and reports
/// all residual components; `total = 0` characterizes stationarity.
pub fn stationarity_residual(
    x: &AlgebraElement,
    y: &AlgebraElement,
    pair: &ConePair,
) -> Result<StationarityReport> {
    let (gx, hy, ngx, nhy) = images(x, y, pair)?;
    let delta = gx.dot(&hy) / (ngx * nhy);

    let sx = pair
        .p()
        .adjoint_apply(&(&hy / nhy))?
        .add_scaled(-delta / ngx, &pair.p().adjoint_apply(&gx)?);
    let sy = pair
        .q()
        .adjoint_apply(&(&gx / ngx))?
        .add_scaled(-delta / nhy, &pair.q().adjoint_apply(&hy)?);

    let ex = pair.p().algebra().unit_element();
    let ey = pair.q().algebra().unit_element();

    let report = StationarityReport {
        primal_feas_x: (-x.min_eigenvalue()?).max(0.0),
        primal_feas_y: (-y.min_eigenvalue()?).max(0.0),
        norm_x: (x.inner(&ex)? - 1.0).abs(),
        norm_y: (y.inner(&ey)? - 1.0).abs(),
        dual_feas_x: (-sx.min_eigenvalue()?).max(0.0),
        dual_feas_y: (-sy.min_eigenvalue()?).max(0.0),
        compl_x: x.inner(&sx)?.abs(),
        compl_y: y.inner(&sy)?.abs(),
        total: 0.0,
    };
    let total = [
        report.primal_feas_x,
        report.primal_feas_y,
        report.norm_x,
        report.norm_y,
        report.dual_feas_x,
        report.dual_feas_y,
        report.compl_x,
        report.compl_y,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    Ok(StationarityReport { total, ..report })
}

/// Criticality residual of a unit pair `(u, v)`: the distance of
/// `Gᵀ(v − ⟨u,v⟩u)` from the cone of squares (dual feasibility through the
/// preimage space), the symmetric quantity for `Hᵀ(u − ⟨u,v⟩v)`, and, when
/// verifiable, membership residuals of `u` and `v` in their cones.
///
/// Membership is certified by supplied preimages, or by a nonnegative
/// least-squares fit for cones over `ℝⁿ` with explicit generators; for other
/// cones without preimages it is left unchecked.
pub fn criticality_residual(
    u: &DVector<f64>,
    v: &DVector<f64>,
    pair: &ConePair,
    preimages: Option<(&AlgebraElement, &AlgebraElement)>,
) -> Result<f64> {
    if (u.norm() - 1.0).abs() > 1e-8 || (v.norm() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "pair must be unit vectors (‖u‖ = {}, ‖v‖ = {})",
            u.norm(),
            v.norm()
        )));
    }
    let c = u.dot(v);

    let slack_x = pair.p().adjoint_apply(&(v - u * c))?;
    let slack_y = pair.q().adjoint_apply(&(u - v * c))?;
    let mut residual = (-slack_x.min_eigenvalue()?).max(0.0);
    residual = residual.max((-slack_y.min_eigenvalue()?).max(0.0));

    match preimages {
        Some((x, y)) => {
            let gx = pair.p().apply(x)?;
            let hy = pair.q().apply(y)?;
            let (ngx, nhy) = (gx.norm(), hy.norm());
            if ngx <= IMAGE_NORM_TOL || nhy <= IMAGE_NORM_TOL {
                return Err(Error::Numerical("vanishing preimage image norm".into()));
            }
            residual = residual.max((&gx / ngx - u).norm());
            residual = residual.max((&hy / nhy - v).norm());
        }
        None => {
            // Nonnegative least-squares membership for polyhedral cones only.
            if let Some(r) = nnls_membership(pair.p(), u) {
                residual = residual.max(r);
            }
            if let Some(r) = nnls_membership(pair.q(), v) {
                residual = residual.max(r);
            }
        }
    }
    Ok(residual)
}

/// Distance of `u` to the cone via nonnegative least squares over the
/// generators; `None` when the cone is not polyhedral.
fn nnls_membership(cone: &LiscCone, u: &DVector<f64>) -> Option<f64> {
    if cone.algebra().kind() != AlgebraKind::RealVector {
        return None;
    }
    match cone.map() {
        LinearMap::Identity { .. } | LinearMap::Dense(_) => {}
        _ => return None,
    }
    let p = cone.algebra().dim();
    // power iteration for the gradient Lipschitz constant of ½‖Gw − u‖²
    let mut z = DVector::from_element(p, 1.0 / (p as f64).sqrt());
    let mut lip: f64 = 1.0;
    for _ in 0..30 {
        let w = cone.map().adjoint_coords(&cone.map().apply_coords(&z));
        let nw = w.norm();
        if nw == 0.0 {
            break;
        }
        lip = nw / z.norm();
        z = w / nw;
    }
    let step = 1.0 / lip.max(1e-12);
    let gt_u = cone.map().adjoint_coords(u);
    let mut w = DVector::from_iterator(p, gt_u.iter().map(|&v| v.max(0.0)));
    let mut prev = f64::INFINITY;
    for _ in 0..5000 {
        let grad = cone.map().adjoint_coords(&cone.map().apply_coords(&w)) - &gt_u;
        w = DVector::from_iterator(p, (0..p).map(|i| (w[i] - step * grad[i]).max(0.0)));
        let res = (cone.map().apply_coords(&w) - u).norm();
        if (prev - res).abs() < 1e-14 {
            break;
        }
        prev = res;
    }
    Some((cone.map().apply_coords(&w) - u).norm())
}

/// Maximum of `arccos Φ` over a deterministic grid of the two spectraplexes
/// (including the canonical frame vertices), polished by a short solver run
/// from the best grid point. A certified lower bound on the maximal angle.
pub fn brute_force_angle(pair: &ConePair, resolution: usize) -> Result<f64> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let grid_p = side_grid(pair.p().algebra(), resolution)?;
    let grid_q = side_grid(pair.q().algebra(), resolution)?;
    let total = grid_p.len().checked_mul(grid_q.len()).unwrap_or(usize::MAX);
    if total > GRID_BUDGET {
        return Err(Error::BudgetExceeded(format!(
            "{} × {} grid points exceed the {GRID_BUDGET} budget",
            grid_p.len(),
            grid_q.len()
        )));
    }

    let images_p: Vec<DVector<f64>> = grid_p.iter().map(|x| pair.p().apply(x).unwrap()).collect();
    let images_q: Vec<DVector<f64>> = grid_q.iter().map(|y| pair.q().apply(y).unwrap()).collect();

    let mut best = f64::INFINITY;
    let mut best_idx = (0usize, 0usize);
    for (i, gx) in images_p.iter().enumerate() {
        let ngx = gx.norm();
        if ngx <= IMAGE_NORM_TOL {
            continue;
        }
        for (j, hy) in images_q.iter().enumerate() {
            let nhy = hy.norm();
            if nhy <= IMAGE_NORM_TOL {
                continue;
            }
            let val = gx.dot(hy) / (ngx * nhy);
            if val < best {
                best = val;
                best_idx = (i, j);
            }
        }
    }
    let mut angle = best.clamp(-1.0, 1.0).acos();

    // polish the best grid point with a short solver run; any feasible point
    // yields a valid lower bound, so taking the max is safe
    let config = crate::solver::SolverConfig {
        mu1: 0.01,
        mu2: 0.01,
        eps1: 1e-9,
        eps2: 1e-9,
        eps3: 1e-10,
        max_iter: 500,
        ..crate::solver::SolverConfig::default()
    };
    if let Ok(result) = crate::solver::solve(pair, &config, &grid_p[best_idx.0], &grid_q[best_idx.1]) {
        angle = angle.max(result.angle);
    }
    Ok(angle)
}

fn side_grid(algebra: Algebra, resolution: usize) -> Result<Vec<AlgebraElement>> {
    match algebra.kind() {
        AlgebraKind::RealVector => {
            let m = algebra.dim();
            let count = lattice_size(resolution, m);
            if count > GRID_BUDGET {
                return Err(Error::BudgetExceeded(format!(
                    "simplex lattice of {count} points exceeds the budget"
                )));
            }
            let mut points = Vec::with_capacity(count);
            let mut current = vec![0usize; m];
            lattice_recurse(resolution, 0, &mut current, &mut points, algebra);
            Ok(points)
        }
        AlgebraKind::SpinFactor => {
            let n = algebra.ambient();
            let d = n - 1;
            let mut dirs: Vec<DVector<f64>> = Vec::new();
            for i in 0..d {
                let mut e = DVector::zeros(d);
                e[i] = 1.0;
                dirs.push(e.clone());
                dirs.push(-e);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            for _ in 0..resolution.saturating_mul(4) {
                let mut g = DVector::from_iterator(
                    d,
                    (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0),
                );
                if g.norm() < 1e-9 {
                    g[0] = 1.0;
                }
                let ng = g.norm();
                dirs.push(g / ng);
            }
            let mut points = Vec::with_capacity(dirs.len() * (resolution + 1));
            // center of the disk is the same for every direction; add it once
            let mut center = DVector::zeros(n);
            center[n - 1] = 1.0;
            points.push(AlgebraElement::new(algebra, center)?);
            for dir in &dirs {
                for r in 1..=resolution {
                    let radius = r as f64 / resolution as f64;
                    let mut c = DVector::zeros(n);
                    for i in 0..d {
                        c[i] = radius * dir[i];
                    }
                    c[n - 1] = 1.0;
                    points.push(AlgebraElement::new(algebra, c)?);
                }
            }
            Ok(points)
        }
        AlgebraKind::SymMatrix => {
            // heuristic: diagonal simplex lattices conjugated by a small set
            // of deterministic rotations
            let n = algebra.ambient();
            let diag_algebra = Algebra::real_vector(n)?;
            let diag_res = resolution.min(8);
            let count = lattice_size(diag_res, n);
            if count > GRID_BUDGET / 8 {
                return Err(Error::BudgetExceeded(format!(
                    "diagonal lattice of {count} points exceeds the budget"
                )));
            }
            let mut diag_points = Vec::with_capacity(count);
            let mut current = vec![0usize; n];
            lattice_recurse(diag_res, 0, &mut current, &mut diag_points, diag_algebra);

            let mut rng = ChaCha8Rng::seed_from_u64(0x0c0e);
            let mut rotations = vec![DMatrix::identity(n, n)];
            for _ in 0..(resolution / 2 + 2).min(12) {
                let m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
                rotations.push(m.qr().q());
            }
            let mut points = Vec::with_capacity(diag_points.len() * rotations.len());
            for q in &rotations {
                for lam in &diag_points {
                    let mat = q * DMatrix::from_diagonal(lam.coords()) * q.transpose();
                    points.push(AlgebraElement::symmetrized(
                        algebra,
                        DVector::from_vec(mat.as_slice().to_vec()),
                    ));
                }
            }
            Ok(points)
        }
    }
}

fn lattice_size(resolution: usize, m: usize) -> usize {
    // C(resolution + m - 1, m - 1), saturating
    let mut acc: usize = 1;
    for i in 0..m - 1 {
        acc = acc.saturating_mul(resolution + i + 1) / (i + 1);
    }
    acc
}

fn lattice_recurse(
    remaining: usize,
    idx: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<AlgebraElement>,
    algebra: Algebra,
) {
    let m = current.len();
    if idx == m - 1 {
        current[idx] = remaining;
        let total: usize = current.iter().sum();
        let coords = DVector::from_iterator(m, current.iter().map(|&k| k as f64 / total as f64));
        out.push(AlgebraElement::new(algebra, coords).expect("lattice point"));
        return;
    }
    for k in (0..=remaining).rev() {
        current[idx] = k;
        lattice_recurse(remaining - k, idx + 1, current, out, algebra);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{make_ellipsoidal, make_orthant, make_schur, ConePair};
    use std::f64::consts::PI;

    fn orthant_pair(n: usize) -> ConePair {
        ConePair::new(make_orthant(n).unwrap(), make_orthant(n).unwrap()).unwrap()
    }

    fn basis(n: usize, i: usize) -> AlgebraElement {
        let mut c = DVector::zeros(n);
        c[i] = 1.0;
        AlgebraElement::new(Algebra::real_vector(n).unwrap(), c).unwrap()
    }

    #[test]
    fn phi_values() {
        let pair = orthant_pair(2);
        let e0 = basis(2, 0);
        let e1 = basis(2, 1);
        assert_eq!(phi(&e0, &e0, &pair).unwrap(), 1.0);
        assert_eq!(phi(&e0, &e1, &pair).unwrap(), 0.0);

        let mixed = ConePair::new(make_orthant(3).unwrap(), make_schur(3).unwrap()).unwrap();
        let x = basis(3, 0);
        let y = basis(2, 0);
        assert!((phi(&x, &y, &mixed).unwrap() - 1.0 / 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gradient_is_radially_orthogonal() {
        let mixed = ConePair::new(make_orthant(3).unwrap(), make_schur(3).unwrap()).unwrap();
        let x = AlgebraElement::new(
            Algebra::real_vector(3).unwrap(),
            DVector::from_row_slice(&[0.5, 0.3, 0.2]),
        )
        .unwrap();
        let y = AlgebraElement::new(
            Algebra::real_vector(2).unwrap(),
            DVector::from_row_slice(&[0.6, 0.4]),
        )
        .unwrap();
        let (gx, gy) = grad_phi(&x, &y, &mixed).unwrap();
        assert!(gx.inner(&x).unwrap().abs() < 1e-12);
        assert!(gy.inner(&y).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gradient_closed_form_case() {
        let pair = orthant_pair(2);
        let (gx, _) = grad_phi(&basis(2, 0), &basis(2, 1), &pair).unwrap();
        assert!((gx.coords() - DVector::from_row_slice(&[0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn stationarity_zero_at_critical_pairs() {
        let pair = orthant_pair(2);
        let r = stationarity_residual(&basis(2, 0), &basis(2, 1), &pair).unwrap();
        assert!(r.total < 1e-15, "residual {}", r.total);
        let r = stationarity_residual(&basis(2, 0), &basis(2, 0), &pair).unwrap();
        assert!(r.total < 1e-15, "residual {}", r.total);
    }

    #[test]
    fn stationarity_discriminates() {
        let pair = orthant_pair(3);
        let x = AlgebraElement::new(
            Algebra::real_vector(3).unwrap(),
            DVector::from_row_slice(&[0.5, 0.25, 0.25]),
        )
        .unwrap();
        let y = AlgebraElement::new(
            Algebra::real_vector(3).unwrap(),
            DVector::from_row_slice(&[0.2, 0.5, 0.3]),
        )
        .unwrap();
        let r = stationarity_residual(&x, &y, &pair).unwrap();
        assert!(r.total > 1e-3, "interior nonstationary point must be flagged, got {}", r.total);
    }

    #[test]
    fn criticality_values() {
        let pair = orthant_pair(2);
        let u = DVector::from_row_slice(&[1.0, 0.0]);
        let v = DVector::from_row_slice(&[0.0, 1.0]);
        assert!(criticality_residual(&u, &v, &pair, None).unwrap() < 1e-12);
        assert!(criticality_residual(&u, &u, &pair, None).unwrap() < 1e-12);

        let bad = DVector::from_row_slice(&[2.0, 0.0]);
        assert!(criticality_residual(&bad, &v, &pair, None).is_err());
    }

    #[test]
    fn criticality_flags_noncritical_pairs() {
        // u interior to the orthant with v orthogonal-ish but not critical
        let pair = orthant_pair(2);
        let u = DVector::from_row_slice(&[0.6, 0.8]);
        let v = DVector::from_row_slice(&[1.0, 0.0]);
        let r = criticality_residual(&u, &v, &pair, None).unwrap();
        assert!(r > 1e-3, "expected a positive residual, got {r}");
    }

    #[test]
    fn brute_force_orthant_right_angle() {
        let pair = orthant_pair(2);
        let angle = brute_force_angle(&pair, 8).unwrap();
        assert!((angle - PI / 2.0).abs() < 1e-9, "got {angle}");
    }

    #[test]
    fn brute_force_lorentz_self_pair() {
        let a = DMatrix::identity(5, 5);
        let p = make_ellipsoidal(&a, 6).unwrap();
        let q = make_ellipsoidal(&a, 6).unwrap();
        let pair = ConePair::new(p, q).unwrap();
        let angle = brute_force_angle(&pair, 20).unwrap();
        assert!((angle - PI / 2.0).abs() < 1e-9, "got {angle}");
    }

    #[test]
    fn brute_force_budget() {
        let pair = orthant_pair(12);
        assert!(matches!(
            brute_force_angle(&pair, 60),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn phi_agrees_with_solver_delta() {
        use crate::harness::{sample_initial, ProblemSpec};
        use crate::solver::compute_delta;
        let specs = [
            ProblemSpec::schur_vs_orthant(5, 0x11),
            ProblemSpec::ellipsoidal_pair(5, 0.5, 0x12),
            ProblemSpec::sdp_vs_nonneg(4, 0x13),
        ];
        for spec in &specs {
            let pair = spec.build_pair().unwrap();
            for i in 0..1000 {
                let mut rng = spec.start_rng(i);
                let (x, y) = sample_initial(&pair, &mut rng);
                let a = phi(&x, &y, &pair).unwrap();
                let b = compute_delta(&x, &y, &pair).unwrap();
                assert!((a - b).abs() <= 1e-14, "phi {a} vs delta {b}");
            }
        }
    }

    #[test]
    fn scale_consistency_of_normalized_pairs() {
        // rescaling a near-stationary point between the two normalizations
        // must leave the induced unit pair unchanged
        let mixed = ConePair::new(make_orthant(3).unwrap(), make_schur(3).unwrap()).unwrap();
        let x = AlgebraElement::new(
            Algebra::real_vector(3).unwrap(),
            DVector::from_row_slice(&[0.7, 0.2, 0.1]),
        )
        .unwrap();
        let y = AlgebraElement::new(
            Algebra::real_vector(2).unwrap(),
            DVector::from_row_slice(&[0.35, 0.65]),
        )
        .unwrap();
        let gx = mixed.p().apply(&x).unwrap();
        let hy = mixed.q().apply(&y).unwrap();
        let (u1, v1) = (&gx / gx.norm(), &hy / hy.norm());

        // normalize onto the unit-image slice and back onto the spectraplex
        let xs = x.scale(1.0 / gx.norm());
        let ys = y.scale(1.0 / hy.norm());
        let ex = mixed.p().algebra().unit_element();
        let ey = mixed.q().algebra().unit_element();
        let xt = xs.scale(1.0 / xs.inner(&ex).unwrap());
        let yt = ys.scale(1.0 / ys.inner(&ey).unwrap());
        let gxt = mixed.p().apply(&xt).unwrap();
        let hyt = mixed.q().apply(&yt).unwrap();
        assert!((&gxt / gxt.norm() - u1).norm() < 1e-10);
        assert!((&hyt / hyt.norm() - v1).norm() < 1e-10);
    }
}
