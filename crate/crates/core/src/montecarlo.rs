//! Finite-sample noisy ERM.
//!
//! A training sample only enters ridge-logistic ERM through the counts of the
//! four agreement states `(A, B) = (YZ, YS)`, so batches are stored as counts.
//! Test risk of each learned rule is computed exactly; the only Monte Carlo
//! noise is over training draws.
//!
//! Every repetition owns a ChaCha8 stream selected by `(n, rep)` from the
//! master seed, so results do not depend on thread scheduling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closed_form::{psi, RulePair};
use crate::model::{ModelError, NoisyParams, StateDistribution, Weights};
use crate::optimizer::{
    induced_rule, solve_channels, state_terms, ChannelSolution, InducedRule, OptimizerError,
    RidgeConfig,
};
use crate::scalar::{Real, Scalar};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonteCarloError {
    #[error("sample size must be at least 1")]
    EmptySample,
    #[error("sample size {0} exceeds the supported maximum of 2^32 - 1")]
    SampleTooLarge(usize),
    #[error("need at least 2 repetitions, got {0}")]
    TooFewRepetitions(usize),
    #[error("no sample sizes given")]
    NoSizes,
    #[error("sample size {n}, repetition {rep}: {source}")]
    Solver {
        n: usize,
        rep: usize,
        source: OptimizerError,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// State counts of one training sample, per family and in total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleBatch {
    /// `[n_pp, n_pm, n_mp, n_mm]` for each training family, in mixture order.
    pub family_counts: Vec<[u64; 4]>,
}

impl SampleBatch {
    pub fn from_counts(counts: [u64; 4]) -> Result<Self, MonteCarloError> {
        if counts.iter().sum::<u64>() == 0 {
            return Err(MonteCarloError::EmptySample);
        }
        Ok(Self {
            family_counts: vec![counts],
        })
    }

    pub fn counts(&self) -> [u64; 4] {
        self.family_counts.iter().fold([0; 4], |mut acc, c| {
            for (a, b) in acc.iter_mut().zip(c) {
                *a += b;
            }
            acc
        })
    }

    pub fn n(&self) -> u64 {
        self.counts().iter().sum()
    }

    pub fn states<T: Real>(&self) -> StateDistribution<T> {
        StateDistribution::from_counts(self.counts()).expect("batch is nonempty")
    }
}

/// Largest-remainder allocation of `n` across `weights` (ties to the lower index).
pub fn allocate(n: usize, weights: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&i, &j| {
        let (ri, rj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
        rj.partial_cmp(&ri)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Draw `n` training points with family counts fixed by [`allocate`].
///
/// Within family `e`, `A` is `+1` with probability `(1+γ)/2` and `B_e` is `+1`
/// with probability `(1+ρ_e)/2`, independently. `Y` never needs to be drawn.
pub fn sample_batch<R: Rng + ?Sized>(
    params: &NoisyParams<f64>,
    n: usize,
    rng: &mut R,
) -> Result<SampleBatch, MonteCarloError> {
    if n == 0 {
        return Err(MonteCarloError::EmptySample);
    }
    let mixture = params.mixture();
    let p_a = (1.0 + params.gamma()) / 2.0;
    let family_counts = allocate(n, mixture.weights())
        .into_iter()
        .zip(mixture.families())
        .map(|(n_e, family)| {
            let p_b = (1.0 + family.rho()) / 2.0;
            let mut c = [0u64; 4];
            for _ in 0..n_e {
                let a = rng.random::<f64>() < p_a;
                let b = rng.random::<f64>() < p_b;
                let idx = match (a, b) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                };
                c[idx] += 1;
            }
            c
        })
        .collect();
    Ok(SampleBatch { family_counts })
}

/// Ridge-logistic minimizer for an arbitrary state law (empirical or population).
pub fn erm_on_states<T: Real>(
    states: &StateDistribution<T>,
    config: &RidgeConfig<T>,
) -> Result<ChannelSolution<T>, OptimizerError> {
    let (tu, tv) = state_terms(states);
    solve_channels(tu, tv, config)
}

/// Empirical ridge-logistic ERM from the four state counts.
pub fn empirical_erm<T: Real>(
    batch: &SampleBatch,
    config: &RidgeConfig<T>,
) -> Result<ChannelSolution<T>, OptimizerError> {
    erm_on_states(&batch.states(), config)
}

/// Empirical risk minimization over `{f_Z, f_S}`.
///
/// `f_Z` errs on states with `A = -1`, `f_S` on states with `B = -1`; they
/// differ only on `(+,-)` and `(-,+)`. Ties go to the invariant rule.
pub fn selector_erm(batch: &SampleBatch) -> RulePair {
    let [_, n_pm, n_mp, _] = batch.counts();
    if n_pm < n_mp {
        RulePair::ShortcutRule
    } else {
        RulePair::InvariantRule
    }
}

/// Exact 0-1 test risk of `sign(w_z z + w_s s)` when `A` has mean `gamma`
/// and `B` has mean `rho_test`, independently.
pub fn exact_weight_error<T: Scalar>(w: &Weights<T>, gamma: T, rho_test: T) -> T {
    let prob = |mean: T, sign: T| (T::one() + sign * mean) / T::two();
    [T::one(), -T::one()].into_iter().fold(T::zero(), |acc, b| {
        let inner = [T::one(), -T::one()]
            .into_iter()
            .fold(T::zero(), |inner, a| {
                inner + prob(gamma, a) * psi(a * w.w_z + b * w.w_s)
            });
        acc + prob(rho_test, b) * inner
    })
}

/// Exact test risk of a learned solution.
pub fn exact_test_error<T: Real>(sol: &ChannelSolution<T>, gamma: T, rho_test: T) -> T {
    exact_weight_error(&sol.w, gamma, rho_test)
}

/// Mean with a normal-approximation 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub sd: f64,
    pub ci_half_width: f64,
}

impl Estimate {
    /// Uses the first value as a shift, so constant samples give their exact
    /// value and zero spread. Sums are compensated and run in input order.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        assert!(n >= 2, "need at least two samples");
        let shift = values[0];
        let mut s1 = NeumaierSum::default();
        let mut s2 = NeumaierSum::default();
        for &x in values {
            let d = x - shift;
            s1.add(d);
            s2.add(d * d);
        }
        let nf = n as f64;
        let (s1, s2) = (s1.total(), s2.total());
        let mean = shift + s1 / nf;
        let var = ((s2 - s1 * s1 / nf) / (nf - 1.0)).max(0.0);
        let sd = var.sqrt();
        Self {
            mean,
            sd,
            ci_half_width: Z_95 * sd / nf.sqrt(),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.mean - x).abs() <= self.ci_half_width
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub sizes: Vec<usize>,
    pub reps: usize,
    pub ridge: RidgeConfig<f64>,
    pub master_seed: u64,
    /// Held-out shortcut correlations to evaluate every learned rule on.
    pub rho_tests: Vec<f64>,
}

/// What one repetition produced.
#[derive(Debug, Clone, PartialEq)]
pub struct RepOutcome {
    pub counts: [u64; 4],
    pub solution: ChannelSolution<f64>,
    pub rule: InducedRule,
    pub selector: RulePair,
    pub test_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFamilyError {
    pub rho_test: f64,
    pub error: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepetitionSummary {
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Fraction of repetitions whose induced rule is the shortcut rule.
    pub shortcut_rate: Estimate,
    pub selector_shortcut_rate: Estimate,
    pub test_errors: Vec<TestFamilyError>,
    pub invariant_count: usize,
    pub degenerate_count: usize,
}

/// The RNG stream for repetition `rep` at sample size `n`.
pub fn repetition_rng(master_seed: u64, n: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((n as u64) << 32) | rep as u64);
    rng
}

pub fn run_repetition(
    params: &NoisyParams<f64>,
    n: usize,
    rep: usize,
    config: &McConfig,
) -> Result<RepOutcome, MonteCarloError> {
    let mut rng = repetition_rng(config.master_seed, n, rep);
    let batch = sample_batch(params, n, &mut rng)?;
    let solution = empirical_erm(&batch, &config.ridge)
        .map_err(|source| MonteCarloError::Solver { n, rep, source })?;
    let test_errors = config
        .rho_tests
        .iter()
        .map(|&rt| exact_test_error(&solution, params.gamma(), rt))
        .collect();
    Ok(RepOutcome {
        counts: batch.counts(),
        solution,
        rule: induced_rule(&solution, config.ridge.tol_sign),
        selector: selector_erm(&batch),
        test_errors,
    })
}

pub fn summarize(n: usize, config: &McConfig, outcomes: &[RepOutcome]) -> RepetitionSummary {
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };
    let shortcut: Vec<f64> = outcomes
        .iter()
        .map(|o| indicator(o.rule.is_shortcut()))
        .collect();
    let selector: Vec<f64> = outcomes
        .iter()
        .map(|o| indicator(o.selector == RulePair::ShortcutRule))
        .collect();
    let test_errors = config
        .rho_tests
        .iter()
        .enumerate()
        .map(|(k, &rho_test)| {
            let errs: Vec<f64> = outcomes.iter().map(|o| o.test_errors[k]).collect();
            TestFamilyError {
                rho_test,
                error: Estimate::from_samples(&errs),
            }
        })
        .collect();
    RepetitionSummary {
        n,
        reps: outcomes.len(),
        seed: config.master_seed,
        shortcut_rate: Estimate::from_samples(&shortcut),
        selector_shortcut_rate: Estimate::from_samples(&selector),
        test_errors,
        invariant_count: outcomes
            .iter()
            .filter(|o| o.rule == InducedRule::Rule(RulePair::InvariantRule))
            .count(),
        degenerate_count: outcomes
            .iter()
            .filter(|o| matches!(o.rule, InducedRule::Degenerate(_)))
            .count(),
    }
}

/// Run `reps` independent repetitions at every sample size.
///
/// Repetitions run in parallel; outcomes are aggregated in repetition order.
pub fn run_repetitions(
    params: &NoisyParams<f64>,
    config: &McConfig,
) -> Result<Vec<RepetitionSummary>, MonteCarloError> {
    if config.sizes.is_empty() {
        return Err(MonteCarloError::NoSizes);
    }
    if config.reps < 2 {
        return Err(MonteCarloError::TooFewRepetitions(config.reps));
    }
    for &n in &config.sizes {
        if n == 0 {
            return Err(MonteCarloError::EmptySample);
        }
        if n > u32::MAX as usize {
            return Err(MonteCarloError::SampleTooLarge(n));
        }
    }
    config
        .sizes
        .iter()
        .map(|&n| {
            let outcomes = (0..config.reps)
                .into_par_iter()
                .map(|rep| run_repetition(params, n, rep, config))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(summarize(n, config, &outcomes))
        })
        .collect()
}

/// `count` sample sizes evenly spaced on `[lo, hi]`, rounded to integers.
pub fn linear_sizes(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                (lo as f64 + t * (hi as f64 - lo as f64)).round() as usize
            })
            .collect(),
    }
}
