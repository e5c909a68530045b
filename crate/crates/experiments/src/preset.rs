//! Named parameter presets.

use clap::ValueEnum;

/// Master seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetName {
    /// Reference protocol for the population and finite-sample figures.
    Paper,
}

impl PresetName {
    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::Paper => "paper",
        }
    }

    pub fn values(&self) -> Preset {
        match self {
            PresetName::Paper => Preset::PAPER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub lambda: f64,
    pub tol: f64,
    pub tol_sign: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub gamma: f64,
    pub families: &'static [f64],
    pub weights: &'static [f64],
    pub rho_tests: &'static [f64],
    pub size_min: usize,
    pub size_max: usize,
    pub size_count: usize,
    pub reps: usize,
    /// Axis of the deterministic weight curve.
    pub det_axis: (f64, f64, usize),
    /// Both axes of the noisy phase diagram.
    pub phase_axis: (f64, f64, usize),
}

impl Preset {
    pub const PAPER: Preset = Preset {
        lambda: 0.1,
        tol: 1e-12,
        tol_sign: 1e-8,
        max_iter: 200,
        seed: DEFAULT_SEED,
        gamma: 0.55,
        // two balanced families averaging to 0.8
        families: &[0.9, 0.7],
        weights: &[0.5, 0.5],
        rho_tests: &[-0.30, 0.70],
        size_min: 20,
        size_max: 600,
        size_count: 15,
        reps: 1400,
        det_axis: (0.01, 0.99, 99),
        phase_axis: (0.01, 0.99, 101),
    };

    pub fn rho_bar(&self) -> f64 {
        self.families
            .iter()
            .zip(self.weights)
            .map(|(r, w)| r * w)
            .sum()
    }
}
