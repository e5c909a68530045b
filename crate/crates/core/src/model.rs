//! Domain types for the two-coordinate family model.
//!
//! Labels are `Y ∈ {±1}`, the invariant coordinate is `Z = Y·A` and the
//! shortcut coordinate is `S = Y·B_e`, with `A` and `B_e` independent
//! agreement variables. The deterministic model is the special case `A ≡ 1`.
//! All types here are immutable after construction.

use std::fmt;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("correlation {0} outside [-1, 1]")]
    CorrelationOutOfRange(f64),
    #[error("invariant agreement gamma = {0} outside (0, 1]")]
    GammaOutOfRange(f64),
    #[error("mixture needs at least one family")]
    EmptyMixture,
    #[error("{families} families but {weights} weights")]
    LengthMismatch { families: usize, weights: usize },
    #[error("mixture weight {0} is negative")]
    NegativeWeight(f64),
    #[error("mixture weights sum to zero")]
    ZeroWeights,
    #[error("state probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("state probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("sample batch is empty")]
    EmptyBatch,
}

fn check_correlation<T: Scalar>(rho: T) -> Result<T, ModelError> {
    if rho >= -T::one() && rho <= T::one() {
        Ok(rho)
    } else {
        Err(ModelError::CorrelationOutOfRange(rho.approx_f64()))
    }
}

/// A family, described by its shortcut-label correlation `ρ_e = E_e[SY]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec<T> {
    rho: T,
}

impl<T: Scalar> FamilySpec<T> {
    pub fn new(rho: T) -> Result<Self, ModelError> {
        check_correlation(rho).map(|rho| Self { rho })
    }

    pub fn rho(&self) -> T {
        self.rho
    }
}

/// Weighted mixture of training families.
///
/// Weights are rescaled to sum to one at construction, so callers may pass
/// unnormalized nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMixture<T> {
    families: Vec<FamilySpec<T>>,
    weights: Vec<T>,
}

impl<T: Scalar> TrainingMixture<T> {
    pub fn new(families: Vec<FamilySpec<T>>, weights: Vec<T>) -> Result<Self, ModelError> {
        if families.is_empty() {
            return Err(ModelError::EmptyMixture);
        }
        if families.len() != weights.len() {
            return Err(ModelError::LengthMismatch {
                families: families.len(),
                weights: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| **w < T::zero()) {
            return Err(ModelError::NegativeWeight(w.approx_f64()));
        }
        let total = weights.iter().fold(T::zero(), |acc, w| acc + *w);
        if total <= T::zero() {
            return Err(ModelError::ZeroWeights);
        }
        let weights = if total == T::one() {
            weights
        } else {
            weights.into_iter().map(|w| w / total).collect()
        };
        Ok(Self { families, weights })
    }

    /// Convenience constructor from raw correlations.
    pub fn from_rhos(rhos: &[T], weights: &[T]) -> Result<Self, ModelError> {
        let families = rhos
            .iter()
            .map(|&r| FamilySpec::new(r))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(families, weights.to_vec())
    }

    /// Single family with weight one.
    pub fn single(rho: T) -> Result<Self, ModelError> {
        Self::new(vec![FamilySpec::new(rho)?], vec![T::one()])
    }

    pub fn families(&self) -> &[FamilySpec<T>] {
        &self.families
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    /// Average training shortcut correlation `Σ α_i ρ_i`.
    pub fn rho_bar(&self) -> T {
        rho_bar(self)
    }
}

/// Average training shortcut correlation `Σ α_i ρ_i`.
pub fn rho_bar<T: Scalar>(mixture: &TrainingMixture<T>) -> T {
    mixture
        .families
        .iter()
        .zip(&mixture.weights)
        .fold(T::zero(), |acc, (f, &a)| acc + a * f.rho)
}

/// Linear score weights `g_w(z, s) = w_z·z + w_s·s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights<T> {
    pub w_z: T,
    pub w_s: T,
}

impl<T: Scalar> Weights<T> {
    pub fn new(w_z: T, w_s: T) -> Self {
        Self { w_z, w_s }
    }

    pub fn channels(&self) -> ChannelCoords<T> {
        ChannelCoords {
            u: self.w_z + self.w_s,
            v: self.w_z - self.w_s,
        }
    }

    pub fn scale(&self, c: T) -> Self {
        Self::new(c * self.w_z, c * self.w_s)
    }

    /// Swap the two coordinates.
    pub fn swapped(&self) -> Self {
        Self::new(self.w_s, self.w_z)
    }
}

/// Channel coordinates `u = w_z + w_s`, `v = w_z - w_s`.
///
/// `u` is the score on inputs where both coordinates agree with the label,
/// `v` the score where only the invariant one does.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelCoords<T> {
    pub u: T,
    pub v: T,
}

impl<T: Scalar> ChannelCoords<T> {
    pub fn new(u: T, v: T) -> Self {
        Self { u, v }
    }

    pub fn weights(&self) -> Weights<T> {
        Weights {
            w_z: (self.u + self.v) / T::two(),
            w_s: (self.u - self.v) / T::two(),
        }
    }
}

/// Parameters of the noisy-invariant model.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyParams<T> {
    gamma: T,
    mixture: TrainingMixture<T>,
    rho_test: T,
}

impl<T: Scalar> NoisyParams<T> {
    pub fn new(gamma: T, mixture: TrainingMixture<T>, rho_test: T) -> Result<Self, ModelError> {
        if !(gamma > T::zero() && gamma <= T::one()) {
            return Err(ModelError::GammaOutOfRange(gamma.approx_f64()));
        }
        check_correlation(rho_test)?;
        Ok(Self {
            gamma,
            mixture,
            rho_test,
        })
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn mixture(&self) -> &TrainingMixture<T> {
        &self.mixture
    }

    pub fn rho_bar(&self) -> T {
        self.mixture.rho_bar()
    }

    pub fn rho_test(&self) -> T {
        self.rho_test
    }

    /// Same training side, different held-out family.
    pub fn with_rho_test(&self, rho_test: T) -> Result<Self, ModelError> {
        Self::new(self.gamma, self.mixture.clone(), rho_test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSource {
    Population,
    Empirical,
}

/// Law (or empirical fractions) of the agreement pair `(A, B) = (YZ, YS)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDistribution<T> {
    pub p_pp: T,
    pub p_pm: T,
    pub p_mp: T,
    pub p_mm: T,
    pub source: StateSource,
}

const STATE_SUM_TOL: f64 = 1e-12;

impl<T: Scalar> StateDistribution<T> {
    pub fn new(
        p_pp: T,
        p_pm: T,
        p_mp: T,
        p_mm: T,
        source: StateSource,
    ) -> Result<Self, ModelError> {
        for p in [p_pp, p_pm, p_mp, p_mm] {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(ModelError::ProbabilityOutOfRange(p.approx_f64()));
            }
        }
        let total = (p_pp + p_pm + p_mp + p_mm).approx_f64();
        if (total - 1.0).abs() > STATE_SUM_TOL {
            return Err(ModelError::NotNormalized(total));
        }
        Ok(Self {
            p_pp,
            p_pm,
            p_mp,
            p_mm,
            source,
        })
    }

    /// Product law with `E[A] = mean_a`, `E[B] = mean_b`.
    pub fn product(mean_a: T, mean_b: T) -> Result<Self, ModelError> {
        let a = check_correlation(mean_a)?;
        let b = check_correlation(mean_b)?;
        let q = T::quarter();
        let (ap, am) = (T::one() + a, T::one() - a);
        let (bp, bm) = (T::one() + b, T::one() - b);
        Self::new(
            ap * bp * q,
            ap * bm * q,
            am * bp * q,
            am * bm * q,
            StateSource::Population,
        )
    }

    /// Empirical fractions from state counts `[n_pp, n_pm, n_mp, n_mm]`.
    pub fn from_counts(counts: [u64; 4]) -> Result<Self, ModelError> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(ModelError::EmptyBatch);
        }
        let total = T::from_u64(n).expect("count representable");
        let frac = |c: u64| T::from_u64(c).expect("count representable") / total;
        Self::new(
            frac(counts[0]),
            frac(counts[1]),
            frac(counts[2]),
            frac(counts[3]),
            StateSource::Empirical,
        )
    }

    pub fn mean_a(&self) -> T {
        self.p_pp + self.p_pm - self.p_mp - self.p_mm
    }

    pub fn mean_b(&self) -> T {
        self.p_pp + self.p_mp - self.p_pm - self.p_mm
    }

    /// `(a, b, probability)` for the four states in canonical order.
    pub fn cells(&self) -> [(i8, i8, T); 4] {
        [
            (1, 1, self.p_pp),
            (1, -1, self.p_pm),
            (-1, 1, self.p_mp),
            (-1, -1, self.p_mm),
        ]
    }
}

/// Independent product law of `(A, B)` on the training or test side.
pub fn population_states<T: Scalar>(params: &NoisyParams<T>, side: Side) -> StateDistribution<T> {
    let mean_b = match side {
        Side::Train => params.rho_bar(),
        Side::Test => params.rho_test(),
    };
    StateDistribution::product(params.gamma(), mean_b)
        .expect("validated parameters give a valid product law")
}

/// Region of weight space on which the 0-1 risk is constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cone {
    Invariant,
    Shortcut,
    AntiShortcut,
    AntiInvariant,
    Boundary,
}

impl Cone {
    pub fn as_str(&self) -> &'static str {
        match self {
            Cone::Invariant => "invariant",
            Cone::Shortcut => "shortcut",
            Cone::AntiShortcut => "anti_shortcut",
            Cone::AntiInvariant => "anti_invariant",
            Cone::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Cone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify_cone<T: Scalar>(w: &Weights<T>) -> Cone {
    let z = w.w_z;
    let s = w.w_s;
    if z > s.magnitude() {
        Cone::Invariant
    } else if s > z.magnitude() {
        Cone::Shortcut
    } else if -s > z.magnitude() {
        Cone::AntiShortcut
    } else if z < -s.magnitude() {
        Cone::AntiInvariant
    } else {
        Cone::Boundary
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rho_bar_examples() {
        let m = TrainingMixture::from_rhos(&[0.9f64, 0.7], &[0.5, 0.5]).unwrap();
        assert!((m.rho_bar() - 0.8).abs() < 1e-15);
        assert_eq!(TrainingMixture::single(0.8).unwrap().rho_bar(), 0.8);
        let m = TrainingMixture::from_rhos(&[1.0, -1.0], &[0.5, 0.5]).unwrap();
        assert_eq!(m.rho_bar(), 0.0);
    }

    #[test]
    fn mixture_rescales_and_rejects() {
        let m = TrainingMixture::from_rhos(&[0.9, 0.7], &[2.0, 2.0]).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert_eq!(
            TrainingMixture::from_rhos(&[0.9, 0.7], &[0.0, 0.0]),
            Err(ModelError::ZeroWeights)
        );
        assert_eq!(
            TrainingMixture::<f64>::from_rhos(&[], &[]),
            Err(ModelError::EmptyMixture)
        );
        assert!(matches!(
            TrainingMixture::from_rhos(&[0.9], &[0.5, 0.5]),
            Err(ModelError::LengthMismatch { .. })
        ));
        assert!(matches!(
            TrainingMixture::from_rhos(&[0.9, 0.1], &[1.5, -0.5]),
            Err(ModelError::NegativeWeight(_))
        ));
        assert!(matches!(
            FamilySpec::new(1.5),
            Err(ModelError::CorrelationOutOfRange(_))
        ));
    }

    #[test]
    fn noisy_params_validation() {
        let m = TrainingMixture::single(0.8).unwrap();
        assert!(NoisyParams::new(0.0, m.clone(), 0.0).is_err());
        assert!(NoisyParams::new(1.2, m.clone(), 0.0).is_err());
        assert!(NoisyParams::new(0.5, m.clone(), -1.1).is_err());
        assert!(NoisyParams::new(1.0, m, -1.0).is_ok());
    }

    #[test]
    fn population_states_examples() {
        let p = NoisyParams::new(0.55f64, TrainingMixture::single(0.80).unwrap(), -0.3).unwrap();
        let s = population_states(&p, Side::Train);
        assert!((s.p_pp - 0.6975).abs() < 1e-15);
        let t = population_states(&p, Side::Test);
        assert!((t.mean_b() + 0.3).abs() < 1e-12);

        let p = NoisyParams::new(1.0, TrainingMixture::single(1.0).unwrap(), 1.0).unwrap();
        let s = population_states(&p, Side::Train);
        assert_eq!((s.p_pp, s.p_pm, s.p_mp, s.p_mm), (1.0, 0.0, 0.0, 0.0));

        let s = StateDistribution::product(0.0, 0.0).unwrap();
        assert_eq!((s.p_pp, s.p_pm, s.p_mp, s.p_mm), (0.25, 0.25, 0.25, 0.25));
    }

    #[test]
    fn state_distribution_rejects_bad_input() {
        assert!(matches!(
            StateDistribution::new(0.5, 0.5, 0.5, -0.5, StateSource::Empirical),
            Err(ModelError::ProbabilityOutOfRange(_))
        ));
        assert!(matches!(
            StateDistribution::new(0.5, 0.5, 0.5, 0.0, StateSource::Empirical),
            Err(ModelError::NotNormalized(_))
        ));
        assert_eq!(
            StateDistribution::<f64>::from_counts([0, 0, 0, 0]),
            Err(ModelError::EmptyBatch)
        );
        let s = StateDistribution::<f64>::from_counts([70, 10, 15, 5]).unwrap();
        assert_eq!(s.source, StateSource::Empirical);
        assert_eq!(s.p_mp, 0.15);
    }

    #[test]
    fn cone_examples() {
        assert_eq!(classify_cone(&Weights::new(2.0, 1.0)), Cone::Invariant);
        assert_eq!(classify_cone(&Weights::new(1.0, 2.0)), Cone::Shortcut);
        assert_eq!(classify_cone(&Weights::new(1.0, 1.0)), Cone::Boundary);
        assert_eq!(classify_cone(&Weights::new(1.0, -2.0)), Cone::AntiShortcut);
        assert_eq!(classify_cone(&Weights::new(-2.0, 1.0)), Cone::AntiInvariant);
        assert_eq!(classify_cone(&Weights::new(0.0, 0.0)), Cone::Boundary);
        assert_eq!(classify_cone(&Weights::new(-1.0, 1.0)), Cone::Boundary);
    }

    proptest! {
        #[test]
        fn channel_round_trip_is_exact(z in -(1i64 << 40)..(1i64 << 40), s in -(1i64 << 40)..(1i64 << 40), e in 0i32..30) {
            // dyadic rationals with short mantissas: u, v and the halving are exact
            let scale = 2f64.powi(-e);
            let w = Weights::new(z as f64 * scale, s as f64 * scale);
            let back = w.channels().weights();
            prop_assert_eq!(back.w_z.to_bits(), w.w_z.to_bits());
            prop_assert_eq!(back.w_s.to_bits(), w.w_s.to_bits());
        }

        #[test]
        fn marginals_recovered(a in -1.0f64..=1.0, b in -1.0f64..=1.0) {
            let s = StateDistribution::product(a, b).unwrap();
            prop_assert!((s.mean_a() - a).abs() <= 1e-12);
            prop_assert!((s.mean_b() - b).abs() <= 1e-12);
            prop_assert!((s.p_pp + s.p_pm - (1.0 + a) / 2.0).abs() <= 1e-12);
            prop_assert!((s.p_pp + s.p_mp - (1.0 + b) / 2.0).abs() <= 1e-12);
        }

        #[test]
        fn cone_scale_invariant(z in -10.0f64..10.0, s in -10.0f64..10.0, c in 1e-3f64..1e3) {
            let w = Weights::new(z, s);
            let scaled = w.scale(c);
            // scaling can round a near-tie onto the boundary; skip those
            prop_assume!((z.abs() - s.abs()).abs() > 1e-9 * (z.abs() + s.abs()));
            prop_assert_eq!(classify_cone(&w), classify_cone(&scaled));
        }
    }
}
