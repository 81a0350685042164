//! Regularized partial-linearization solver for the fractional program
//! `min Φ(x, y)` over the product of spectraplexes.
//!
//! Each iteration linearizes the bilinear part of the Dinkelbach parametric
//! objective at the current point, solves one regularized subproblem per
//! block (a spectraplex projection when the prox parameter is positive, a
//! vertex step when it is zero), and applies an Armijo backtracking step on
//! `Φ` along the combined direction. Terminal iterates are mapped to unit
//! vectors in the ambient cones, yielding a critical pair.

use std::collections::VecDeque;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cones::{ConePair, LiscCone};
use crate::eja::AlgebraElement;
use crate::error::{Error, Result};
use crate::projection::project_spectraplex;
use crate::verify::{stationarity_residual, StationarityReport};

/// Starting points farther than this from the feasible set are rejected
/// instead of silently projected.
const START_TOL: f64 = 1e-8;

/// Feasibility drift beyond this triggers re-projection of the iterate.
const DRIFT_TOL: f64 = 1e-10;

/// First-order residual a decrease-rule termination must certify. The
/// `|Lᵢ(dᵢ)| ≤ εᵢ` gate alone only bounds the step norm by `√(2εᵢ/μᵢ)`, so
/// with a large prox parameter the iterate can still sit ~`μᵢ‖dᵢ‖` away from
/// stationarity; when that happens the effective tolerances are tightened
/// and the iteration continues.
const RESIDUAL_TARGET: f64 = 1e-4;

/// Effective tolerances are never tightened below this.
const EPS_FLOOR: f64 = 1e-15;

/// Tightening factor applied to the effective tolerances per refinement.
const EPS_TIGHTEN: f64 = 16.0;

/// Solver parameters. `beta` is the initial step and must stay in `(0, 1]`
/// so that accepted steps remain inside the feasible set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Prox parameter of the first block subproblem (≥ 0).
    pub mu1: f64,
    /// Prox parameter of the second block subproblem (≥ 0).
    pub mu2: f64,
    /// Initial Armijo step, in (0, 1].
    pub beta: f64,
    /// Armijo sufficient-decrease constant, in (0, 1).
    pub alpha: f64,
    /// Backtracking factor, in (0, 1).
    pub rho: f64,
    /// Subproblem-decrease tolerance for the first block.
    pub eps1: f64,
    /// Subproblem-decrease tolerance for the second block.
    pub eps2: f64,
    /// Stall tolerance on the objective over `stall_window` iterations.
    pub eps3: f64,
    pub stall_window: usize,
    pub max_iter: usize,
    pub max_backtracks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu1: 0.01,
            mu2: 0.01,
            beta: 1.0,
            alpha: 1e-4,
            rho: 0.5,
            eps1: 1e-6,
            eps2: 1e-6,
            eps3: 1e-7,
            stall_window: 5,
            max_iter: 5000,
            max_backtracks: 60,
        }
    }
}

impl SolverConfig {
    /// Tuned values for polyhedral pairs.
    pub fn polyhedral() -> Self {
        Self { mu1: 0.01, mu2: 2.6, eps3: 1e-5, ..Self::default() }
    }

    /// Tuned values for ellipsoidal pairs.
    pub fn ellipsoidal() -> Self {
        Self { mu1: 0.005, mu2: 0.005, eps3: 1e-7, ..Self::default() }
    }

    /// Tuned values for the semidefinite vs nonnegative-matrix pair.
    pub fn sdp_nonneg() -> Self {
        Self { mu1: 0.01, mu2: 5.0, eps3: 1e-7, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu1 < 0.0 || self.mu2 < 0.0 {
            return Err(Error::InvalidArgument("prox parameters must be nonnegative".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidArgument("beta must lie in (0, 1]".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidArgument("alpha must lie in (0, 1)".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidArgument("rho must lie in (0, 1)".into()));
        }
        if self.eps1 <= 0.0 || self.eps2 <= 0.0 || self.eps3 <= 0.0 {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.stall_window == 0 || self.max_iter == 0 || self.max_backtracks == 0 {
            return Err(Error::InvalidArgument(
                "stall_window, max_iter and max_backtracks must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Which block a subproblem refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    X,
    Y,
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Both subproblems returned the current iterate exactly.
    SubproblemFixedPoint,
    /// Both linearized decreases fell below their tolerances and the
    /// stationarity residual met its target.
    DecreaseTolerance,
    /// The objective stabilized over the stall window.
    Stalled,
    MaxIterations,
    /// Armijo backtracking exhausted its budget.
    LineSearchFailure,
}

impl Termination {
    /// Terminations that certify an approximate stationary point.
    pub fn is_eps_converged(&self) -> bool {
        matches!(self, Termination::SubproblemFixedPoint | Termination::DecreaseTolerance)
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Termination::SubproblemFixedPoint => "subproblem_fixed_point",
            Termination::DecreaseTolerance => "decrease_tolerance",
            Termination::Stalled => "stalled",
            Termination::MaxIterations => "max_iterations",
            Termination::LineSearchFailure => "line_search_failure",
        };
        f.write_str(s)
    }
}

/// Current iterate with cached images, norms, and objective value.
#[derive(Debug, Clone)]
pub struct IterState {
    pub x: AlgebraElement,
    pub y: AlgebraElement,
    pub gx: DVector<f64>,
    pub hy: DVector<f64>,
    pub ngx: f64,
    pub nhy: f64,
    pub delta: f64,
    pub k: usize,
    /// Objective values of the last `stall_window + 1` iterations, oldest first.
    delta_history: VecDeque<f64>,
}

impl IterState {
    fn new(pair: &ConePair, x: AlgebraElement, y: AlgebraElement, window: usize) -> Result<Self> {
        let mut state = Self {
            x,
            y,
            gx: DVector::zeros(pair.p().out_dim()),
            hy: DVector::zeros(pair.q().out_dim()),
            ngx: 0.0,
            nhy: 0.0,
            delta: 0.0,
            k: 0,
            delta_history: VecDeque::with_capacity(window + 2),
        };
        state.refresh(pair)?;
        state.delta_history.push_back(state.delta);
        Ok(state)
    }

    fn refresh(&mut self, pair: &ConePair) -> Result<()> {
        self.gx = pair.p().apply(&self.x)?;
        self.hy = pair.q().apply(&self.y)?;
        self.ngx = self.gx.norm();
        self.nhy = self.hy.norm();
        if self.ngx <= 1e-14 || self.nhy <= 1e-14 {
            return Err(Error::Numerical(format!(
                "vanishing image norm on the spectraplex (‖Gx‖ = {:.3e}, ‖Hy‖ = {:.3e})",
                self.ngx, self.nhy
            )));
        }
        self.delta = (self.gx.dot(&self.hy) / (self.ngx * self.nhy)).clamp(-1.0, 1.0);
        Ok(())
    }

    fn advance(
        &mut self,
        pair: &ConePair,
        new_x: AlgebraElement,
        new_y: AlgebraElement,
        window: usize,
    ) -> Result<()> {
        self.x = guard_feasibility(pair.p(), new_x)?;
        self.y = guard_feasibility(pair.q(), new_y)?;
        self.refresh(pair)?;
        self.k += 1;
        self.delta_history.push_back(self.delta);
        while self.delta_history.len() > window + 1 {
            self.delta_history.pop_front();
        }
        Ok(())
    }

    /// Objective value `stall_window` iterations ago (oldest retained).
    fn stall_reference(&self) -> f64 {
        *self.delta_history.front().expect("history is never empty")
    }
}

/// Re-projects an iterate that drifted off the spectraplex beyond `1e-10`.
fn guard_feasibility(cone: &LiscCone, el: AlgebraElement) -> Result<AlgebraElement> {
    let e = cone.algebra().unit_element();
    let trace_drift = (el.inner(&e)? - 1.0).abs();
    if trace_drift > DRIFT_TOL || el.min_eigenvalue()? < -DRIFT_TOL {
        return project_spectraplex(&el);
    }
    Ok(el)
}

/// Objective value `⟨Gx, Hy⟩ / (‖Gx‖‖Hy‖)`, clamped to `[-1, 1]`.
pub fn compute_delta(x: &AlgebraElement, y: &AlgebraElement, pair: &ConePair) -> Result<f64> {
    let gx = pair.p().apply(x)?;
    let hy = pair.q().apply(y)?;
    let (ngx, nhy) = (gx.norm(), hy.norm());
    if ngx <= 1e-14 || nhy <= 1e-14 {
        return Err(Error::Numerical(
            "vanishing image norm; cone data violates its structural assumptions".into(),
        ));
    }
    Ok((gx.dot(&hy) / (ngx * nhy)).clamp(-1.0, 1.0))
}

/// Linearization coefficient of one block:
/// `c = Gᵀ(Hy − δ·(‖Hy‖/‖Gx‖)·Gx)` for the first block, symmetric for the
/// second. The linearized decrease of a direction `d` is `⟨d, c⟩`.
pub(crate) fn subproblem_coefficient(
    side: Side,
    state: &IterState,
    pair: &ConePair,
) -> Result<AlgebraElement> {
    match side {
        Side::X => {
            let ambient = &state.hy - &state.gx * (state.delta * state.nhy / state.ngx);
            pair.p().adjoint_apply(&ambient)
        }
        Side::Y => {
            let ambient = &state.gx - &state.hy * (state.delta * state.ngx / state.nhy);
            pair.q().adjoint_apply(&ambient)
        }
    }
}

/// Solves one block subproblem given its linearization coefficient: the
/// spectraplex projection of `base − c/μ` when `μ > 0`, or the vertex
/// `(1/κ)·c_min` of the spectraplex minimizing the linear term when `μ = 0`
/// (with `c_min` a frame idempotent of the smallest eigenvalue of `c`).
pub(crate) fn subproblem_from_coefficient(
    base: &AlgebraElement,
    coeff: &AlgebraElement,
    mu: f64,
) -> Result<AlgebraElement> {
    if mu > 0.0 {
        project_spectraplex(&base.add_scaled(-1.0 / mu, coeff))
    } else {
        let d = coeff.spectral_decompose()?;
        let idx = d.eigenvalues.len() - 1;
        Ok(d.frame[idx].scale(1.0 / base.algebra().kappa()))
    }
}

/// One block subproblem of the current iteration.
pub fn subproblem(side: Side, state: &IterState, pair: &ConePair, mu: f64) -> Result<AlgebraElement> {
    if mu < 0.0 {
        return Err(Error::InvalidArgument("prox parameter must be nonnegative".into()));
    }
    let coeff = subproblem_coefficient(side, state, pair)?;
    let base = match side {
        Side::X => &state.x,
        Side::Y => &state.y,
    };
    subproblem_from_coefficient(base, &coeff, mu)
}

/// Armijo backtracking along `(d1, d2)` from the current iterate.
///
/// `decrease` must be the (negative) predicted directional derivative
/// `(L₁(d₁) + L₂(d₂)) / (‖Gx‖‖Hy‖)`. Returns the accepted step `t = β·ρ^ℓ`
/// with minimal `ℓ` and the objective value at the accepted point.
pub fn armijo_search(
    state: &IterState,
    d1: &AlgebraElement,
    d2: &AlgebraElement,
    decrease: f64,
    config: &SolverConfig,
    pair: &ConePair,
) -> Result<(f64, f64)> {
    if decrease >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "armijo_search requires a descent direction, got predicted decrease {decrease}"
        )));
    }
    // The maps are linear, so the trial objective is a ratio of quadratics
    // in t; each backtrack is O(1) after these dot products.
    let gd1 = pair.p().apply(d1)?;
    let hd2 = pair.q().apply(d2)?;
    let aa = state.gx.dot(&state.hy);
    let ab = state.gx.dot(&hd2);
    let ba = gd1.dot(&state.hy);
    let bb = gd1.dot(&hd2);
    let gg = state.ngx * state.ngx;
    let gq = state.gx.dot(&gd1);
    let qq = gd1.dot(&gd1);
    let hh = state.nhy * state.nhy;
    let hr = state.hy.dot(&hd2);
    let rr = hd2.dot(&hd2);

    let mut t = config.beta;
    for _ in 0..=config.max_backtracks {
        let num = aa + t * (ab + ba) + t * t * bb;
        let den = (gg + 2.0 * t * gq + t * t * qq).sqrt() * (hh + 2.0 * t * hr + t * t * rr).sqrt();
        let phi_t = num / den;
        if phi_t <= state.delta + config.alpha * t * decrease {
            return Ok((t, phi_t));
        }
        t *= config.rho;
    }
    Err(Error::LineSearchExhausted { backtracks: config.max_backtracks })
}

/// Terminal iterate, the induced unit critical pair, the angle, and
/// per-solve diagnostics.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: AlgebraElement,
    pub y: AlgebraElement,
    /// `Gx/‖Gx‖` at the terminal iterate.
    pub u: DVector<f64>,
    /// `Hy/‖Hy‖` at the terminal iterate.
    pub v: DVector<f64>,
    pub cos_angle: f64,
    /// `arccos` of the terminal objective, in `[0, π]`.
    pub angle: f64,
    /// Number of subproblem rounds performed.
    pub iterations: usize,
    pub termination: Termination,
    pub stationarity: StationarityReport,
    /// Max over iterations of `L_i(d_i) + (μ_i/2)‖d_i‖²`; nonpositive up to
    /// rounding when the subproblems are solved exactly.
    pub max_lemma_gap: f64,
    /// Max over accepted steps of `δ_{k+1} − δ_k`; nonpositive up to rounding.
    pub max_delta_increase: f64,
}

/// Runs the solver from `(x0, y0)`. Starting points within `1e-8` of the
/// feasible set are adopted (exactly projected); anything farther is an
/// error.
///
/// Termination: exact subproblem fixed point; both `|Lᵢ(dᵢ)| ≤ εᵢ` with a
/// certified first-order residual (tolerances tighten and the iteration
/// continues while the residual exceeds its target); objective stall over
/// the last `stall_window` iterations; iteration cap; or an exhausted line
/// search (reported, not an error).
pub fn solve(
    pair: &ConePair,
    config: &SolverConfig,
    x0: &AlgebraElement,
    y0: &AlgebraElement,
) -> Result<SolveResult> {
    config.validate()?;
    let x = adopt_start(pair.p(), x0)?;
    let y = adopt_start(pair.q(), y0)?;
    let mut state = IterState::new(pair, x, y, config.stall_window)?;

    let mut termination = Termination::MaxIterations;
    let mut iterations = 0usize;
    let mut max_lemma_gap = f64::NEG_INFINITY;
    let mut max_delta_increase = f64::NEG_INFINITY;
    let mut terminal_report: Option<StationarityReport> = None;
    let mut eps1 = config.eps1;
    let mut eps2 = config.eps2;
    let mut refining = false;

    while state.k < config.max_iter {
        iterations = state.k + 1;

        let cx = subproblem_coefficient(Side::X, &state, pair)?;
        let cy = subproblem_coefficient(Side::Y, &state, pair)?;
        let xt = subproblem_from_coefficient(&state.x, &cx, config.mu1)?;
        let yt = subproblem_from_coefficient(&state.y, &cy, config.mu2)?;
        let d1 = xt.sub(&state.x);
        let d2 = yt.sub(&state.y);
        let l1 = d1.inner(&cx)?;
        let l2 = d2.inner(&cy)?;

        let gap1 = l1 + 0.5 * config.mu1 * d1.norm().powi(2);
        let gap2 = l2 + 0.5 * config.mu2 * d2.norm().powi(2);
        max_lemma_gap = max_lemma_gap.max(gap1).max(gap2);

        if l1 == 0.0 && l2 == 0.0 {
            termination = Termination::SubproblemFixedPoint;
            break;
        }
        if l1.abs() <= eps1 && l2.abs() <= eps2 {
            let report = stationarity_residual(&state.x, &state.y, pair)?;
            if report.total <= RESIDUAL_TARGET || (eps1 <= EPS_FLOOR && eps2 <= EPS_FLOOR) {
                termination = Termination::DecreaseTolerance;
                terminal_report = Some(report);
                break;
            }
            eps1 = (eps1 / EPS_TIGHTEN).max(EPS_FLOOR);
            eps2 = (eps2 / EPS_TIGHTEN).max(EPS_FLOOR);
            refining = true;
        } else if !refining
            && state.k >= config.stall_window
            && state.stall_reference() - state.delta <= config.eps3
        {
            termination = Termination::Stalled;
            break;
        }

        let decrease = (l1 + l2) / (state.ngx * state.nhy);
        if decrease >= 0.0 {
            return Err(Error::Numerical(format!(
                "subproblems produced a non-descent direction (predicted decrease {decrease})"
            )));
        }
        match armijo_search(&state, &d1, &d2, decrease, config, pair) {
            Ok((t, _)) => {
                let new_x = state.x.add_scaled(t, &d1);
                let new_y = state.y.add_scaled(t, &d2);
                let prev = state.delta;
                state.advance(pair, new_x, new_y, config.stall_window)?;
                max_delta_increase = max_delta_increase.max(state.delta - prev);
            }
            Err(Error::LineSearchExhausted { .. }) => {
                termination = Termination::LineSearchFailure;
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let u = &state.gx / state.ngx;
    let v = &state.hy / state.nhy;
    let cos_angle = state.delta;
    let stationarity = match terminal_report {
        Some(report) => report,
        None => stationarity_residual(&state.x, &state.y, pair)?,
    };
    Ok(SolveResult {
        x: state.x,
        y: state.y,
        u,
        v,
        cos_angle,
        angle: cos_angle.acos(),
        iterations,
        termination,
        stationarity,
        max_lemma_gap,
        max_delta_increase,
    })
}

fn adopt_start(cone: &LiscCone, z0: &AlgebraElement) -> Result<AlgebraElement> {
    if z0.algebra() != cone.algebra() {
        return Err(Error::AlgebraMismatch(format!(
            "starting point algebra {:?} does not match cone {}",
            z0.algebra(),
            cone.label()
        )));
    }
    let projected = project_spectraplex(z0)?;
    let dist = projected.sub(z0).norm();
    if dist > START_TOL {
        return Err(Error::InfeasibleStart(format!(
            "starting point is {dist:.3e} away from the spectraplex"
        )));
    }
    Ok(projected)
}
