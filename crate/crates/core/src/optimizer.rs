//! Population ridge-logistic minimization through the `u = w_z + w_s`,
//! `v = w_z - w_s` channel split.
//!
//! With ridge term `(λ/2)(w_z² + w_s²) = (λ/4)(u² + v²)`, every objective in
//! this crate (deterministic, noisy, empirical) is a sum of two independent
//! scalar terms `c·ℓ(x) + d·x + (λ/4)x²`. Each is strictly convex, so the
//! minimizer is the unique root of its derivative, found by
//! [`solve_scalar_channel`].

use std::fmt;

use rayon::prelude::*;

use crate::closed_form::{
    det_surrogate, det_surrogate_grad, logistic, noisy_channel_coeffs, noisy_surrogate,
    noisy_surrogate_grad, sigmoid, RulePair,
};
use crate::model::{ChannelCoords, StateDistribution, Weights};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizerError {
    #[error("invalid ridge configuration: {0}")]
    InvalidConfig(String),
    #[error("no sign change found while expanding the bracket out to |x| = {limit}")]
    NoBracket { limit: f64 },
    #[error(
        "tolerance not reached after {iterations} iterations (x = {x}, residual = {residual})"
    )]
    MaxIter {
        iterations: usize,
        x: f64,
        residual: f64,
    },
    #[error("channel derivative is not finite at x = {x}")]
    NotFinite { x: f64 },
    #[error("parameter out of range: {0}")]
    BadParameter(String),
}

/// Bracket expansion limit for [`solve_scalar_channel`].
pub const BRACKET_LIMIT: f64 = 1e6;

/// Ridge strength and solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeConfig<T> {
    pub lambda: T,
    /// Root tolerance on the channel derivative value.
    pub tol: T,
    /// Threshold below which a channel root is treated as zero for sign claims.
    pub tol_sign: T,
    pub max_iter: usize,
}

impl<T: Real> RidgeConfig<T> {
    pub fn new(lambda: T) -> Result<Self, OptimizerError> {
        Self {
            lambda,
            tol: T::DEFAULT_TOL,
            tol_sign: T::DEFAULT_TOL_SIGN,
            max_iter: 200,
        }
        .validated()
    }

    pub fn with_tol(self, tol: T) -> Result<Self, OptimizerError> {
        Self { tol, ..self }.validated()
    }

    pub fn with_tol_sign(self, tol_sign: T) -> Result<Self, OptimizerError> {
        Self { tol_sign, ..self }.validated()
    }

    pub fn with_max_iter(self, max_iter: usize) -> Result<Self, OptimizerError> {
        Self { max_iter, ..self }.validated()
    }

    fn validated(self) -> Result<Self, OptimizerError> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !positive(self.lambda) {
            return Err(OptimizerError::InvalidConfig(format!(
                "lambda must be positive and finite, got {:?}",
                self.lambda
            )));
        }
        if !positive(self.tol) {
            return Err(OptimizerError::InvalidConfig(format!(
                "tol must be positive, got {:?}",
                self.tol
            )));
        }
        if self.tol_sign.is_nan() || self.tol_sign < T::zero() {
            return Err(OptimizerError::InvalidConfig(format!(
                "tol_sign must be nonnegative, got {:?}",
                self.tol_sign
            )));
        }
        if self.max_iter == 0 {
            return Err(OptimizerError::InvalidConfig(
                "max_iter must be positive".into(),
            ));
        }
        Ok(self)
    }
}

/// Root of a strictly increasing scalar function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarRoot<T> {
    pub x: T,
    pub residual: T,
    pub evaluations: usize,
}

fn finite_or_err<T: Real>(x: T, fx: T) -> Result<T, OptimizerError> {
    if fx.is_finite() {
        Ok(fx)
    } else {
        Err(OptimizerError::NotFinite { x: x.approx_f64() })
    }
}

/// Root of a continuous, strictly increasing `dphi` that diverges to `±∞`.
///
/// The bracket grows by doubling outward from zero in the downhill direction.
/// Refinement alternates a secant step with a bisection step whenever the
/// secant step fails to halve the bracket, so the bracket at least halves on
/// every iteration. Returns the first evaluated point with `|dphi| <= tol`.
pub fn solve_scalar_channel<T, F>(
    dphi: F,
    config: &RidgeConfig<T>,
) -> Result<ScalarRoot<T>, OptimizerError>
where
    T: Real,
    F: Fn(T) -> T,
{
    let tol = config.tol;
    let mut evaluations = 0usize;
    let mut eval = |x: T| {
        evaluations += 1;
        finite_or_err(x, dphi(x))
    };

    let f0 = eval(T::zero())?;
    if f0.abs() <= tol {
        return Ok(ScalarRoot {
            x: T::zero(),
            residual: f0.abs(),
            evaluations,
        });
    }

    // f increasing: a negative value means the root lies to the right.
    let dir = if f0 < T::zero() { T::one() } else { -T::one() };
    let limit = T::lit(BRACKET_LIMIT);
    let (mut inner, mut f_inner) = (T::zero(), f0);
    let mut step = T::one();
    let (outer, f_outer) = loop {
        let x = dir * step;
        let fx = eval(x)?;
        if fx.abs() <= tol {
            return Ok(ScalarRoot {
                x,
                residual: fx.abs(),
                evaluations,
            });
        }
        if (fx < T::zero()) != (f_inner < T::zero()) {
            break (x, fx);
        }
        if step >= limit {
            return Err(OptimizerError::NoBracket {
                limit: BRACKET_LIMIT,
            });
        }
        inner = x;
        f_inner = fx;
        step = (step + step).min(limit);
    };

    let (mut lo, mut f_lo, mut hi, mut f_hi) = if inner < outer {
        (inner, f_inner, outer, f_outer)
    } else {
        (outer, f_outer, inner, f_inner)
    };
    let (mut best, mut f_best) = if f_lo.abs() < f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };

    for iteration in 0..config.max_iter {
        let width = hi - lo;

        let secant = lo - f_lo * width / (f_hi - f_lo);
        let candidates = [secant, lo + width / T::two()];
        for (k, x) in candidates.into_iter().enumerate() {
            // midpoint only if the secant step did not halve the bracket
            if k == 1 && hi - lo <= width / T::two() {
                break;
            }
            if !(x > lo && x < hi) {
                continue;
            }
            let fx = eval(x)?;
            if fx.abs() < f_best.abs() {
                best = x;
                f_best = fx;
            }
            if fx.abs() <= tol {
                return Ok(ScalarRoot {
                    x,
                    residual: fx.abs(),
                    evaluations,
                });
            }
            if fx < T::zero() {
                lo = x;
                f_lo = fx;
            } else {
                hi = x;
                f_hi = fx;
            }
        }

        let mid = lo + (hi - lo) / T::two();
        if !(mid > lo && mid < hi) {
            // bracket has collapsed to adjacent floats
            return Err(OptimizerError::MaxIter {
                iterations: iteration + 1,
                x: best.approx_f64(),
                residual: f_best.abs().approx_f64(),
            });
        }
    }
    Err(OptimizerError::MaxIter {
        iterations: config.max_iter,
        x: best.approx_f64(),
        residual: f_best.abs().approx_f64(),
    })
}

/// One channel term `loss·ℓ(x) + linear·x + (λ/4)x²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelTerm<T> {
    pub loss: T,
    pub linear: T,
}

impl<T: Real> ChannelTerm<T> {
    pub fn new(loss: T, linear: T) -> Self {
        Self { loss, linear }
    }

    pub fn value(&self, x: T, lambda: T) -> T {
        self.loss * logistic(x) + self.linear * x + lambda / T::lit(4.0) * x * x
    }

    pub fn derivative(&self, x: T, lambda: T) -> T {
        -self.loss * sigmoid(-x) + self.linear + lambda / T::two() * x
    }

    pub fn minimize(&self, config: &RidgeConfig<T>) -> Result<ScalarRoot<T>, OptimizerError> {
        let lambda = config.lambda;
        solve_scalar_channel(|x| self.derivative(x, lambda), config)
    }
}

/// Ridge minimizer expressed in both coordinate systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelSolution<T> {
    pub u_star: T,
    pub v_star: T,
    pub w: Weights<T>,
    pub residual_u: T,
    pub residual_v: T,
}

impl<T: Real> ChannelSolution<T> {
    pub fn from_roots(u: ScalarRoot<T>, v: ScalarRoot<T>) -> Self {
        Self {
            u_star: u.x,
            v_star: v.x,
            w: ChannelCoords::new(u.x, v.x).weights(),
            residual_u: u.residual,
            residual_v: v.residual,
        }
    }

    /// Solution with prescribed channel roots (residuals zero), for tests and
    /// for evaluating hand-picked weight prototypes.
    pub fn from_channels(u_star: T, v_star: T) -> Self {
        Self {
            u_star,
            v_star,
            w: ChannelCoords::new(u_star, v_star).weights(),
            residual_u: T::zero(),
            residual_v: T::zero(),
        }
    }
}

/// Minimize `term_u(u) + term_v(v)` channel by channel.
pub fn solve_channels<T: Real>(
    term_u: ChannelTerm<T>,
    term_v: ChannelTerm<T>,
    config: &RidgeConfig<T>,
) -> Result<ChannelSolution<T>, OptimizerError> {
    let u = term_u.minimize(config)?;
    let v = term_v.minimize(config)?;
    Ok(ChannelSolution::from_roots(u, v))
}

fn check_unit<T: Real>(name: &str, x: T, open_low: bool) -> Result<(), OptimizerError> {
    let low_ok = if open_low {
        x > -T::one()
    } else {
        x >= -T::one()
    };
    if low_ok && x <= T::one() {
        Ok(())
    } else {
        Err(OptimizerError::BadParameter(format!("{name} = {:?}", x)))
    }
}

/// Channel terms of the deterministic objective: masses `(1±ρ̄)/2`, no linear part.
pub fn deterministic_terms<T: Real>(rho_bar: T) -> (ChannelTerm<T>, ChannelTerm<T>) {
    let (a, b) = crate::closed_form::channel_weights(rho_bar);
    (
        ChannelTerm::new(a, T::zero()),
        ChannelTerm::new(b, T::zero()),
    )
}

/// Ridge-logistic minimizer of the deterministic population objective.
pub fn solve_deterministic<T: Real>(
    rho_bar: T,
    config: &RidgeConfig<T>,
) -> Result<ChannelSolution<T>, OptimizerError> {
    check_unit("rho_bar", rho_bar, false)?;
    let (tu, tv) = deterministic_terms(rho_bar);
    solve_channels(tu, tv, config)
}

/// Channel terms of the noisy population objective.
pub fn noisy_terms<T: Real>(gamma: T, rho_bar: T) -> (ChannelTerm<T>, ChannelTerm<T>) {
    let k = noisy_channel_coeffs(gamma, rho_bar);
    (
        ChannelTerm::new(k.u_loss, k.u_linear),
        ChannelTerm::new(k.v_loss, k.v_linear),
    )
}

/// Channel terms of the objective `E_states[ℓ(Y g_w)]` for an arbitrary state law.
///
/// Uses `ℓ(-x) = ℓ(x) + x` to fold the `(-,-)` and `(-,+)` states onto the
/// `u` and `v` channels.
pub fn state_terms<T: Real>(states: &StateDistribution<T>) -> (ChannelTerm<T>, ChannelTerm<T>) {
    (
        ChannelTerm::new(states.p_pp + states.p_mm, states.p_mm),
        ChannelTerm::new(states.p_pm + states.p_mp, states.p_mp),
    )
}

/// Ridge-logistic minimizer of the noisy population objective.
pub fn solve_noisy<T: Real>(
    gamma: T,
    rho_bar: T,
    config: &RidgeConfig<T>,
) -> Result<ChannelSolution<T>, OptimizerError> {
    if !(gamma > T::zero() && gamma <= T::one()) {
        return Err(OptimizerError::BadParameter(format!("gamma = {:?}", gamma)));
    }
    check_unit("rho_bar", rho_bar, false)?;
    let (tu, tv) = noisy_terms(gamma, rho_bar);
    solve_channels(tu, tv, config)
}

/// `(Φ_u'(0), Φ_v'(0))` for the noisy objective, evaluated from the channel terms.
pub fn noisy_derivatives_at_zero<T: Real>(gamma: T, rho_bar: T) -> (T, T) {
    let (tu, tv) = noisy_terms(gamma, rho_bar);
    // the ridge part vanishes at zero, so lambda is irrelevant
    (
        tu.derivative(T::zero(), T::one()),
        tv.derivative(T::zero(), T::one()),
    )
}

/// `J(w) = L_det(w) + (λ/2)|w|²`.
pub fn det_ridge_objective<T: Real>(w: &Weights<T>, rho_bar: T, lambda: T) -> T {
    det_surrogate(w, rho_bar) + lambda / T::two() * (w.w_z * w.w_z + w.w_s * w.w_s)
}

pub fn det_ridge_gradient<T: Real>(w: &Weights<T>, rho_bar: T, lambda: T) -> Weights<T> {
    let g = det_surrogate_grad(w, rho_bar);
    Weights::new(g.w_z + lambda * w.w_z, g.w_s + lambda * w.w_s)
}

/// `J(w) = E_states[ℓ(Y g_w)] + (λ/2)|w|²`.
pub fn noisy_ridge_objective<T: Real>(
    w: &Weights<T>,
    states: &StateDistribution<T>,
    lambda: T,
) -> T {
    noisy_surrogate(w, states) + lambda / T::two() * (w.w_z * w.w_z + w.w_s * w.w_s)
}

pub fn noisy_ridge_gradient<T: Real>(
    w: &Weights<T>,
    states: &StateDistribution<T>,
    lambda: T,
) -> Weights<T> {
    let g = noisy_surrogate_grad(w, states);
    Weights::new(g.w_z + lambda * w.w_z, g.w_s + lambda * w.w_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DegenerateReason {
    /// `u* ≈ 0`: score is zero on inputs with `z = s`.
    TieOnAgreeingInputs,
    /// `v* ≈ 0`: score is zero on inputs with `z = -s`.
    TieOnDisagreeingInputs,
    /// `u* < 0 < v*`: the classifier is `-s`.
    FlippedShortcut,
    /// `u* < 0` and `v* < 0`: the classifier is `-z`.
    FlippedInvariant,
}

impl DegenerateReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            DegenerateReason::TieOnAgreeingInputs => "tie_on_z_eq_s",
            DegenerateReason::TieOnDisagreeingInputs => "tie_on_z_eq_neg_s",
            DegenerateReason::FlippedShortcut => "flipped_shortcut",
            DegenerateReason::FlippedInvariant => "flipped_invariant",
        }
    }
}

/// The classifier `sign(g_w)` on `{±1}²`, when it is one of the two rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InducedRule {
    Rule(RulePair),
    Degenerate(DegenerateReason),
}

impl InducedRule {
    pub fn is_shortcut(&self) -> bool {
        matches!(self, InducedRule::Rule(RulePair::ShortcutRule))
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            InducedRule::Rule(r) => r.as_str(),
            InducedRule::Degenerate(d) => d.as_str(),
        }
    }
}

impl fmt::Display for InducedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// On `z = s` the score is `u*·s`; on `z = -s` it is `v*·z`.
pub fn induced_rule<T: Real>(sol: &ChannelSolution<T>, tol_sign: T) -> InducedRule {
    let (u, v) = (sol.u_star, sol.v_star);
    if u.abs() <= tol_sign {
        return InducedRule::Degenerate(DegenerateReason::TieOnAgreeingInputs);
    }
    if v.abs() <= tol_sign {
        return InducedRule::Degenerate(DegenerateReason::TieOnDisagreeingInputs);
    }
    match (u > T::zero(), v > T::zero()) {
        (true, true) => InducedRule::Rule(RulePair::InvariantRule),
        (true, false) => InducedRule::Rule(RulePair::ShortcutRule),
        (false, true) => InducedRule::Degenerate(DegenerateReason::FlippedShortcut),
        (false, false) => InducedRule::Degenerate(DegenerateReason::FlippedInvariant),
    }
}

/// Sign of `v* = ŵ_z - ŵ_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    InvariantSide,
    BoundaryLine,
    ShortcutSide,
}

impl Phase {
    pub fn from_v_star<T: Real>(v_star: T, tol_sign: T) -> Self {
        if v_star.abs() <= tol_sign {
            Phase::BoundaryLine
        } else if v_star > T::zero() {
            Phase::InvariantSide
        } else {
            Phase::ShortcutSide
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::InvariantSide => "invariant",
            Phase::BoundaryLine => "boundary",
            Phase::ShortcutSide => "shortcut",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCell<T> {
    pub gamma: T,
    pub rho_bar: T,
    pub solution: ChannelSolution<T>,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid<T> {
    pub gammas: Vec<T>,
    pub rho_bars: Vec<T>,
    /// Row-major: all `rho_bars` for `gammas[0]`, then `gammas[1]`, ...
    pub cells: Vec<PhaseCell<T>>,
    pub tol_sign: T,
}

impl<T: Real> PhaseGrid<T> {
    pub fn cell(&self, gamma_idx: usize, rho_idx: usize) -> &PhaseCell<T> {
        &self.cells[gamma_idx * self.rho_bars.len() + rho_idx]
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("grid cell (gamma = {gamma}, rho_bar = {rho_bar}): {source}")]
pub struct GridCellError {
    pub gamma: f64,
    pub rho_bar: f64,
    pub source: OptimizerError,
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / T::from_usize(n - 1).expect("grid size representable");
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else {
                        lo + step * T::from_usize(i).expect("grid index representable")
                    }
                })
                .collect()
        }
    }
}

/// Default phase-diagram axis: 101 points on `[0.01, 0.99]`.
pub fn default_phase_axis<T: Real>() -> Vec<T> {
    linspace(T::lit(0.01), T::lit(0.99), 101)
}

/// Solve the noisy problem on every `(γ, ρ̄)` cell.
///
/// Cells are solved in parallel and returned in row-major order.
pub fn phase_grid<T: Real>(
    gammas: &[T],
    rho_bars: &[T],
    config: &RidgeConfig<T>,
) -> Result<PhaseGrid<T>, GridCellError> {
    let cells = gammas
        .iter()
        .flat_map(|&g| rho_bars.iter().map(move |&r| (g, r)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(gamma, rho_bar)| {
            solve_noisy(gamma, rho_bar, config)
                .map(|solution| PhaseCell {
                    gamma,
                    rho_bar,
                    solution,
                    phase: Phase::from_v_star(solution.v_star, config.tol_sign),
                })
                .map_err(|source| GridCellError {
                    gamma: gamma.approx_f64(),
                    rho_bar: rho_bar.approx_f64(),
                    source,
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PhaseGrid {
        gammas: gammas.to_vec(),
        rho_bars: rho_bars.to_vec(),
        cells,
        tol_sign: config.tol_sign,
    })
}

/// `v*(ρ̄)` along a line of training correlations at fixed `γ`.
pub fn sign_boundary_sweep<T: Real>(
    gamma: T,
    rho_bars: &[T],
    config: &RidgeConfig<T>,
) -> Result<Vec<(T, T)>, OptimizerError> {
    rho_bars
        .iter()
        .map(|&r| solve_noisy(gamma, r, config).map(|s| (r, s.v_star)))
        .collect()
}

/// Locate the training correlation at which `v*` changes sign, by bisection
/// over `ρ̄ ∈ [-1, 1]`. `v*` is decreasing in `ρ̄`.
pub fn locate_sign_boundary<T: Real>(
    gamma: T,
    config: &RidgeConfig<T>,
) -> Result<T, OptimizerError> {
    let v_at = |r: T| solve_noisy(gamma, r, config).map(|s| s.v_star);
    let (mut lo, mut hi) = (-T::one(), T::one());
    let (v_lo, v_hi) = (v_at(lo)?, v_at(hi)?);
    if v_lo < T::zero() || v_hi > T::zero() {
        return Err(OptimizerError::BadParameter(format!(
            "v* does not change sign on [-1, 1] at gamma = {:?}",
            gamma
        )));
    }
    for _ in 0..config.max_iter {
        let mid = lo + (hi - lo) / T::two();
        if !(mid > lo && mid < hi) {
            break;
        }
        let v = v_at(mid)?;
        if v == T::zero() {
            return Ok(mid);
        }
        if v > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + (hi - lo) / T::two())
}
