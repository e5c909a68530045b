//! Exact population formulas: 0-1 risks on the cone geometry, logistic
//! surrogates and their derivatives, rule-level risks in the noisy model,
//! and the selector-level Hoeffding bound.
//!
//! The 0-1 quantities are generic over [`Scalar`] so they can be evaluated in
//! exact arithmetic; the surrogate quantities need [`Real`].

use std::fmt;

use crate::model::{Cone, StateDistribution, TrainingMixture, Weights};
use crate::scalar::{Real, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClosedFormError {
    #[error("Hoeffding selection bound needs delta_train > 0, got {0}")]
    NonPositiveDelta(f64),
    #[error("sample size must be positive")]
    ZeroSampleSize,
}

/// The two rules compared at the rule level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RulePair {
    /// `f_Z(z, s) = z`
    InvariantRule,
    /// `f_S(z, s) = s`
    ShortcutRule,
}

impl RulePair {
    pub fn as_str(&self) -> &'static str {
        match self {
            RulePair::InvariantRule => "invariant",
            RulePair::ShortcutRule => "shortcut",
        }
    }

    pub fn predict(&self, z: i8, s: i8) -> i8 {
        match self {
            RulePair::InvariantRule => z,
            RulePair::ShortcutRule => s,
        }
    }
}

impl fmt::Display for RulePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Error indicator of a margin: 1 below zero, ½ at exactly zero, 0 above.
///
/// The tie test is exact equality.
pub fn psi<T: Scalar>(t: T) -> T {
    if t < T::zero() {
        T::one()
    } else if t == T::zero() {
        T::half()
    } else {
        T::zero()
    }
}

/// 0-1 risk of `sign(w_z z + w_s s)` on a deterministic family with
/// shortcut correlation `rho`.
pub fn deterministic_risk<T: Scalar>(w: &Weights<T>, rho: T) -> T {
    let c = w.channels();
    (T::one() + rho) / T::two() * psi(c.u) + (T::one() - rho) / T::two() * psi(c.v)
}

/// Constant risk on an open cone; `None` on the boundary.
pub fn cone_table_risk<T: Scalar>(cone: Cone, rho: T) -> Option<T> {
    match cone {
        Cone::Invariant => Some(T::zero()),
        Cone::Shortcut => Some((T::one() - rho) / T::two()),
        Cone::AntiShortcut => Some((T::one() + rho) / T::two()),
        Cone::AntiInvariant => Some(T::one()),
        Cone::Boundary => None,
    }
}

/// Test-minus-train 0-1 risk on the nonnegative shortcut cone
/// (`w_s > w_z >= 0`), where it does not depend on the weights.
pub fn cone_gap<T: Scalar>(mixture: &TrainingMixture<T>, rho_test: T) -> T {
    (mixture.rho_bar() - rho_test) / T::two()
}

/// Expected test margin `E_test[Y g_w(X)]` in the deterministic model.
pub fn test_margin<T: Scalar>(w: &Weights<T>, rho_test: T) -> T {
    w.w_z + rho_test * w.w_s
}

/// Logistic loss `log(1 + e^{-t})`.
pub fn logistic<T: Real>(t: T) -> T {
    if t > T::zero() {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `1 / (1 + e^{-t})`.
pub fn sigmoid<T: Real>(t: T) -> T {
    if t >= T::zero() {
        T::one() / (T::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (T::one() + e)
    }
}

/// `d/dt log(1 + e^{-t}) = -σ(-t)`.
#[inline]
pub fn logistic_derivative<T: Real>(t: T) -> T {
    -sigmoid(-t)
}

/// Population logistic objective in the deterministic model.
pub fn det_surrogate<T: Real>(w: &Weights<T>, rho_bar: T) -> T {
    let c = w.channels();
    let (a, b) = channel_weights(rho_bar);
    a * logistic(c.u) + b * logistic(c.v)
}

/// Gradient of [`det_surrogate`] in `(w_z, w_s)`.
pub fn det_surrogate_grad<T: Real>(w: &Weights<T>, rho_bar: T) -> Weights<T> {
    let c = w.channels();
    let (a, b) = channel_weights(rho_bar);
    let du = a * logistic_derivative(c.u);
    let dv = b * logistic_derivative(c.v);
    Weights::new(du + dv, du - dv)
}

/// `((1+ρ̄)/2, (1-ρ̄)/2)`, the masses on the `u` and `v` channels.
pub fn channel_weights<T: Scalar>(rho_bar: T) -> (T, T) {
    (
        (T::one() + rho_bar) / T::two(),
        (T::one() - rho_bar) / T::two(),
    )
}

/// `∂L_train/∂w_s` at `w_s = 0`: `-ρ̄ σ(-w_z)`.
pub fn det_shortcut_derivative<T: Real>(w_z: T, rho_bar: T) -> T {
    -rho_bar * sigmoid(-w_z)
}

/// `L_test - L_train` for the deterministic surrogate.
pub fn det_surrogate_gap<T: Real>(w: &Weights<T>, rho_bar: T, rho_test: T) -> T {
    let c = w.channels();
    (rho_test - rho_bar) / T::two() * (logistic(c.u) - logistic(c.v))
}

/// 0-1 risk of a rule in the noisy model. `rho` is the shortcut correlation
/// of the distribution being evaluated (ρ̄ for training, ρ_test for a test
/// family); the invariant rule ignores it.
pub fn noisy_rule_risk<T: Scalar>(rule: RulePair, gamma: T, rho: T) -> T {
    match rule {
        RulePair::InvariantRule => (T::one() - gamma) / T::two(),
        RulePair::ShortcutRule => (T::one() - rho) / T::two(),
    }
}

/// `R_test(f_S) - R_test(f_Z) = (γ - ρ_test)/2`.
pub fn noisy_test_gap<T: Scalar>(gamma: T, rho_test: T) -> T {
    (gamma - rho_test) / T::two()
}

/// `E[ℓ(Y(w_z Z + w_s S))]` under the given state law.
///
/// `Y·g = w_z A + w_s B`, so the four states map to `u, v, -v, -u`.
pub fn noisy_surrogate<T: Real>(w: &Weights<T>, states: &StateDistribution<T>) -> T {
    let c = w.channels();
    states.p_pp * logistic(c.u)
        + states.p_pm * logistic(c.v)
        + states.p_mp * logistic(-c.v)
        + states.p_mm * logistic(-c.u)
}

/// Gradient of [`noisy_surrogate`] in `(w_z, w_s)`.
pub fn noisy_surrogate_grad<T: Real>(w: &Weights<T>, states: &StateDistribution<T>) -> Weights<T> {
    let c = w.channels();
    let du = states.p_pp * logistic_derivative(c.u) - states.p_mm * logistic_derivative(-c.u);
    let dv = states.p_pm * logistic_derivative(c.v) - states.p_mp * logistic_derivative(-c.v);
    Weights::new(du + dv, du - dv)
}

/// Coefficients `(c, d)` of a noisy channel term `c·ℓ(x) + d·x` for the
/// product law with invariant agreement `gamma` and shortcut mean `rho_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyChannelCoeffs<T> {
    pub u_loss: T,
    pub u_linear: T,
    pub v_loss: T,
    pub v_linear: T,
}

pub fn noisy_channel_coeffs<T: Scalar>(gamma: T, rho_bar: T) -> NoisyChannelCoeffs<T> {
    let one = T::one();
    NoisyChannelCoeffs {
        u_loss: (one + gamma * rho_bar) / T::two(),
        u_linear: (one - gamma) * (one - rho_bar) * T::quarter(),
        v_loss: (one - gamma * rho_bar) / T::two(),
        v_linear: (one - gamma) * (one + rho_bar) * T::quarter(),
    }
}

/// The noisy population objective written as `φ_u(u) + φ_v(v)`.
pub fn noisy_surrogate_split<T: Real>(w: &Weights<T>, gamma: T, rho_bar: T) -> T {
    let c = w.channels();
    let k = noisy_channel_coeffs(gamma, rho_bar);
    k.u_loss * logistic(c.u) + k.u_linear * c.u + k.v_loss * logistic(c.v) + k.v_linear * c.v
}

/// Lower bound `1 - exp(-nΔ²/8)` on the probability that selector ERM over
/// `{f_Z, f_S}` picks the shortcut rule from `n` i.i.d. training draws.
pub fn hoeffding_selection_bound<T: Real>(n: u64, delta_train: T) -> Result<T, ClosedFormError> {
    if n == 0 {
        return Err(ClosedFormError::ZeroSampleSize);
    }
    if delta_train.is_nan() || delta_train <= T::zero() {
        return Err(ClosedFormError::NonPositiveDelta(delta_train.approx_f64()));
    }
    let n = T::from_u64(n).expect("sample size representable");
    let exponent = n * delta_train * delta_train / T::lit(8.0);
    Ok(-(-exponent).exp_m1())
}
