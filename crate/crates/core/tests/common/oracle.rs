//! Brute-force enumeration over the raw outcome space `(Y, A, B) ∈ {±1}³`.
//!
//! These oracles build `Z = Y·A`, `S = Y·B`, score the linear classifier on
//! the actual inputs and compare against `Y`. They never use channel
//! coordinates or the closed-form expressions they are checking.

#![allow(dead_code)]

use shortcut_core::{RulePair, Scalar, Weights};

const SIGNS: [i8; 2] = [1, -1];

fn sign_value<T: Scalar>(s: i8) -> T {
    if s > 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// Probability that an agreement variable with the given mean equals `s`.
fn agree_prob<T: Scalar>(mean: T, s: i8) -> T {
    (T::one() + sign_value::<T>(s) * mean) / T::two()
}

/// Loss of predicting with score `g` when the label is `y`; ties cost ½.
fn zero_one<T: Scalar>(g: T, y: i8) -> T {
    if g == T::zero() {
        T::half()
    } else if (g > T::zero()) == (y > 0) {
        T::zero()
    } else {
        T::one()
    }
}

/// 0-1 risk of `sign(w·x)` when `P(A = 1) = (1+gamma)/2`, `P(B = 1) = (1+rho)/2`.
pub fn linear_error<T: Scalar>(w: &Weights<T>, gamma: T, rho: T) -> T {
    let mut total = T::zero();
    for y in SIGNS {
        for a in SIGNS {
            for b in SIGNS {
                let p = T::half() * agree_prob(gamma, a) * agree_prob(rho, b);
                let z: T = sign_value(y * a);
                let s: T = sign_value(y * b);
                total = total + p * zero_one(w.w_z * z + w.w_s * s, y);
            }
        }
    }
    total
}

/// Deterministic model: `Z = Y`, i.e. `A ≡ 1`.
pub fn deterministic_error<T: Scalar>(w: &Weights<T>, rho: T) -> T {
    linear_error(w, T::one(), rho)
}

pub fn rule_error<T: Scalar>(rule: RulePair, gamma: T, rho: T) -> T {
    let mut total = T::zero();
    for y in SIGNS {
        for a in SIGNS {
            for b in SIGNS {
                let p = T::half() * agree_prob(gamma, a) * agree_prob(rho, b);
                let (z, s) = (y * a, y * b);
                if rule.predict(z, s) != y {
                    total = total + p;
                }
            }
        }
    }
    total
}
