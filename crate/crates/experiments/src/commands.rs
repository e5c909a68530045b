//! Subcommand implementations. Each returns tables plus the parameters that
//! produced them; writing is left to the caller.

use serde_json::{Map, Value};
use shortcut_core::{
    classify_cone, cone_gap, deterministic_risk, exact_test_error, hoeffding_selection_bound,
    induced_rule, linspace, noisy_derivatives_at_zero, noisy_rule_risk, noisy_test_gap, phase_grid,
    run_repetitions, solve_deterministic, solve_noisy, test_margin, Cone, McConfig, NoisyParams,
    Phase, RidgeConfig, RulePair, TrainingMixture, Weights,
};

use crate::error::AppError;
use crate::preset::Preset;
use crate::table::{Cell, Table};

pub const CI_METHOD: &str = "normal approximation: mean +/- 1.96 sd / sqrt(reps)";
pub const RNG_SCHEME: &str = "ChaCha8, seeded with the master seed, stream (n << 32) | rep";

/// Solver and seeding settings shared by every command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub lambda: f64,
    pub tol: f64,
    pub tol_sign: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Settings {
    pub fn from_preset(p: &Preset) -> Self {
        Self {
            lambda: p.lambda,
            tol: p.tol,
            tol_sign: p.tol_sign,
            max_iter: p.max_iter,
            seed: p.seed,
        }
    }

    pub fn ridge(&self) -> Result<RidgeConfig<f64>, AppError> {
        Ok(RidgeConfig::new(self.lambda)?
            .with_tol(self.tol)?
            .with_tol_sign(self.tol_sign)?
            .with_max_iter(self.max_iter)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub command: &'static str,
    pub params: Map<String, Value>,
    /// `(file stem, table)` in output order.
    pub tables: Vec<(String, Table)>,
}

/// Evenly spaced grid `lo..=hi` with `points` entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, points: usize) -> Self {
        Self { lo, hi, points }
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.points)
    }

    fn check(&self, name: &str, range: ParamRange) -> Result<(), AppError> {
        if self.points == 0 {
            return Err(AppError::usage(format!("{name} grid is empty")));
        }
        if self.lo > self.hi {
            return Err(AppError::usage(format!("{name} grid has lo > hi")));
        }
        range.check(name, self.lo)?;
        range.check(name, self.hi)
    }

    fn to_json(self) -> Value {
        serde_json::json!([self.lo, self.hi, self.points])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ParamRange {
    /// `[-1, 1]`
    Correlation,
    /// `(0, 1]`
    Agreement,
    /// `(0, inf)`
    Positive,
}

impl ParamRange {
    fn check(self, name: &str, x: f64) -> Result<(), AppError> {
        let ok = match self {
            ParamRange::Correlation => (-1.0..=1.0).contains(&x),
            ParamRange::Agreement => x > 0.0 && x <= 1.0,
            ParamRange::Positive => x > 0.0 && x.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            let range = match self {
                ParamRange::Correlation => "[-1, 1]",
                ParamRange::Agreement => "(0, 1]",
                ParamRange::Positive => "(0, inf)",
            };
            Err(AppError::usage(format!("{name} = {x} is outside {range}")))
        }
    }
}

fn check_all(name: &str, xs: &[f64], range: ParamRange) -> Result<(), AppError> {
    if xs.is_empty() {
        return Err(AppError::usage(format!("{name} needs at least one value")));
    }
    xs.iter().try_for_each(|&x| range.check(name, x))
}

/// Column suffix for a test correlation: `-0.30 -> m030`, `0.70 -> p070`.
pub fn rho_tag(rho: f64) -> String {
    let sign = if rho < 0.0 { 'm' } else { 'p' };
    format!("{sign}{:03}", (rho.abs() * 100.0).round() as i64)
}

fn rho_tags(rho_tests: &[f64]) -> Result<Vec<String>, AppError> {
    let tags: Vec<String> = rho_tests.iter().map(|&r| rho_tag(r)).collect();
    for (i, t) in tags.iter().enumerate() {
        if tags[..i].contains(t) {
            return Err(AppError::usage(format!(
                "test correlations {:?} map to the same column suffix {t}",
                rho_tests
            )));
        }
    }
    Ok(tags)
}

fn params(pairs: impl IntoIterator<Item = (&'static str, Value)>) -> Map<String, Value> {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskArgs {
    pub w_z: f64,
    pub w_s: f64,
    pub rhos: Vec<f64>,
    pub rho_test: Option<f64>,
}

pub fn cmd_risk(args: &RiskArgs) -> Result<RunOutput, AppError> {
    check_all("rho", &args.rhos, ParamRange::Correlation)?;
    if let Some(rt) = args.rho_test {
        ParamRange::Correlation.check("rho_test", rt)?;
    }
    if !(args.w_z.is_finite() && args.w_s.is_finite()) {
        return Err(AppError::usage("weights must be finite"));
    }
    let w = Weights::new(args.w_z, args.w_s);
    let cone = classify_cone(&w);
    let mut cols = vec!["w_z", "w_s", "rho", "risk", "cone"];
    if args.rho_test.is_some() {
        cols.extend(["rho_test", "test_margin", "cone_gap"]);
    }
    let mut table = Table::new(cols);
    for &rho in &args.rhos {
        let mut row: Vec<Cell> = vec![
            w.w_z.into(),
            w.w_s.into(),
            rho.into(),
            deterministic_risk(&w, rho).into(),
            cone.as_str().into(),
        ];
        if let Some(rt) = args.rho_test {
            // the gap is weight-free only on the nonnegative shortcut cone
            let gap = (cone == Cone::Shortcut && w.w_z >= 0.0)
                .then(|| TrainingMixture::single(rho).map(|m| cone_gap(&m, rt)))
                .transpose()?;
            row.extend([rt.into(), test_margin(&w, rt).into(), gap.into()]);
        }
        table.push(row);
    }
    Ok(RunOutput {
        command: "risk",
        params: params([
            ("w_z", args.w_z.into()),
            ("w_s", args.w_s.into()),
            ("rho", args.rhos.clone().into()),
            ("rho_test", args.rho_test.map_or(Value::Null, Value::from)),
        ]),
        tables: vec![("risk".into(), table)],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeDetArgs {
    pub rho_bars: Vec<f64>,
}

pub fn cmd_optimize_det(
    args: &OptimizeDetArgs,
    settings: &Settings,
) -> Result<RunOutput, AppError> {
    check_all("rho_bar", &args.rho_bars, ParamRange::Correlation)?;
    let cfg = settings.ridge()?;
    let mut table = Table::new(["rho_bar", "w_z", "w_s", "u_star", "v_star", "rule"]);
    for &rb in &args.rho_bars {
        let sol = solve_deterministic(rb, &cfg)
            .map_err(|e| cell_error(AppError::from(e), &[("rho_bar", rb)]))?;
        table.push(vec![
            rb.into(),
            sol.w.w_z.into(),
            sol.w.w_s.into(),
            sol.u_star.into(),
            sol.v_star.into(),
            induced_rule(&sol, cfg.tol_sign).as_str().into(),
        ]);
    }
    Ok(RunOutput {
        command: "optimize-det",
        params: params([("rho_bar", args.rho_bars.clone().into())]),
        tables: vec![("optimize_det".into(), table)],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeNoisyArgs {
    pub gammas: Vec<f64>,
    pub rho_bars: Vec<f64>,
    pub rho_tests: Vec<f64>,
}

pub fn cmd_optimize_noisy(
    args: &OptimizeNoisyArgs,
    settings: &Settings,
) -> Result<RunOutput, AppError> {
    check_all("gamma", &args.gammas, ParamRange::Agreement)?;
    check_all("rho_bar", &args.rho_bars, ParamRange::Correlation)?;
    args.rho_tests
        .iter()
        .try_for_each(|&r| ParamRange::Correlation.check("rho_test", r))?;
    let tags = rho_tags(&args.rho_tests)?;
    let cfg = settings.ridge()?;
    let mut cols: Vec<String> = [
        "gamma", "rho_bar", "w_z", "w_s", "u_star", "v_star", "phase", "rule",
    ]
    .map(String::from)
    .to_vec();
    cols.extend(tags.iter().map(|t| format!("test_error_{t}")));
    let mut table = Table::new(cols);
    for &g in &args.gammas {
        for &rb in &args.rho_bars {
            let sol = solve_noisy(g, rb, &cfg)
                .map_err(|e| cell_error(AppError::from(e), &[("gamma", g), ("rho_bar", rb)]))?;
            let mut row: Vec<Cell> = vec![
                g.into(),
                rb.into(),
                sol.w.w_z.into(),
                sol.w.w_s.into(),
                sol.u_star.into(),
                sol.v_star.into(),
                Phase::from_v_star(sol.v_star, cfg.tol_sign).as_str().into(),
                induced_rule(&sol, cfg.tol_sign).as_str().into(),
            ];
            row.extend(
                args.rho_tests
                    .iter()
                    .map(|&rt| exact_test_error(&sol, g, rt).into()),
            );
            table.push(row);
        }
    }
    Ok(RunOutput {
        command: "optimize-noisy",
        params: params([
            ("gamma", args.gammas.clone().into()),
            ("rho_bar", args.rho_bars.clone().into()),
            ("rho_tests", args.rho_tests.clone().into()),
        ]),
        tables: vec![("optimize_noisy".into(), table)],
    })
}

fn cell_error(e: AppError, at: &[(&str, f64)]) -> AppError {
    let loc = at
        .iter()
        .map(|(k, v)| format!("{k} = {v}"))
        .collect::<Vec<_>>()
        .join(", ");
    match e {
        AppError::Numerical(m) => AppError::Numerical(format!("at ({loc}): {m}")),
        AppError::Usage(m) => AppError::Usage(format!("at ({loc}): {m}")),
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseArgs {
    pub gamma_axis: Axis,
    pub rho_axis: Axis,
}

fn phase_table(args: &PhaseArgs, settings: &Settings) -> Result<Table, AppError> {
    args.gamma_axis.check("gamma", ParamRange::Agreement)?;
    args.rho_axis.check("rho_bar", ParamRange::Correlation)?;
    let cfg = settings.ridge()?;
    let grid = phase_grid(&args.gamma_axis.values(), &args.rho_axis.values(), &cfg)?;
    let mut table = Table::new(["gamma", "rho_bar", "u_star", "v_star", "phase"]);
    for c in &grid.cells {
        table.push(vec![
            c.gamma.into(),
            c.rho_bar.into(),
            c.solution.u_star.into(),
            c.solution.v_star.into(),
            c.phase.as_str().into(),
        ]);
    }
    Ok(table)
}

pub fn cmd_phase(args: &PhaseArgs, settings: &Settings) -> Result<RunOutput, AppError> {
    Ok(RunOutput {
        command: "phase",
        params: params([
            ("gamma_grid", args.gamma_axis.to_json()),
            ("rho_bar_grid", args.rho_axis.to_json()),
        ]),
        tables: vec![("phase".into(), phase_table(args, settings)?)],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationArgs {
    pub det_axis: Axis,
    pub phase: PhaseArgs,
}

pub fn cmd_fig_population(
    args: &PopulationArgs,
    settings: &Settings,
) -> Result<RunOutput, AppError> {
    args.det_axis.check("rho_bar", ParamRange::Correlation)?;
    let cfg = settings.ridge()?;
    let mut det = Table::new(["rho_bar", "w_z", "w_s"]);
    for rb in args.det_axis.values() {
        let sol = solve_deterministic(rb, &cfg)
            .map_err(|e| cell_error(AppError::from(e), &[("rho_bar", rb)]))?;
        det.push(vec![rb.into(), sol.w.w_z.into(), sol.w.w_s.into()]);
    }
    let full = phase_table(&args.phase, settings)?;
    // the figure only needs the sign coordinate
    let mut phase = Table::new(["gamma", "rho_bar", "v_star", "phase"]);
    for row in full.rows {
        let [g, rb, _u, v, ph]: [Cell; 5] = row.try_into().expect("phase rows have five cells");
        phase.push(vec![g, rb, v, ph]);
    }
    Ok(RunOutput {
        command: "fig-population",
        params: params([
            ("det_rho_bar_grid", args.det_axis.to_json()),
            ("gamma_grid", args.phase.gamma_axis.to_json()),
            ("rho_bar_grid", args.phase.rho_axis.to_json()),
        ]),
        tables: vec![
            ("population_deterministic".into(), det),
            ("population_phase".into(), phase),
        ],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSampleArgs {
    pub gamma: f64,
    pub families: Vec<f64>,
    pub weights: Vec<f64>,
    pub rho_tests: Vec<f64>,
    pub sizes: Vec<usize>,
    pub reps: usize,
}

impl FiniteSampleArgs {
    pub fn from_preset(p: &Preset) -> Self {
        Self {
            gamma: p.gamma,
            families: p.families.to_vec(),
            weights: p.weights.to_vec(),
            rho_tests: p.rho_tests.to_vec(),
            sizes: shortcut_core::linear_sizes(p.size_min, p.size_max, p.size_count),
            reps: p.reps,
        }
    }
}

pub fn cmd_fig_finite_sample(
    args: &FiniteSampleArgs,
    settings: &Settings,
) -> Result<RunOutput, AppError> {
    ParamRange::Agreement.check("gamma", args.gamma)?;
    check_all("rho_test", &args.rho_tests, ParamRange::Correlation)?;
    let tags = rho_tags(&args.rho_tests)?;
    let mixture = TrainingMixture::from_rhos(&args.families, &args.weights)?;
    let rho_bar = mixture.rho_bar();
    let noisy = NoisyParams::new(args.gamma, mixture, args.rho_tests[0])?;
    let config = McConfig {
        sizes: args.sizes.clone(),
        reps: args.reps,
        ridge: settings.ridge()?,
        master_seed: settings.seed,
        rho_tests: args.rho_tests.clone(),
    };
    let summaries = run_repetitions(&noisy, &config)?;

    let delta = rho_bar - args.gamma;
    let mut cols: Vec<String> = [
        "n",
        "shortcut_rate",
        "shortcut_rate_ci",
        "selector_rate",
        "selector_rate_ci",
        "hoeffding_bound",
    ]
    .map(String::from)
    .to_vec();
    for t in &tags {
        cols.push(format!("test_error_{t}"));
        cols.push(format!("test_error_{t}_ci"));
    }
    cols.extend(["invariant_baseline", "chance_baseline"].map(String::from));
    let invariant = noisy_rule_risk(RulePair::InvariantRule, args.gamma, args.rho_tests[0]);
    let mut table = Table::new(cols);
    for s in &summaries {
        let bound = (delta > 0.0)
            .then(|| hoeffding_selection_bound::<f64>(s.n as u64, delta))
            .transpose()
            .map_err(|e| AppError::Numerical(e.to_string()))?;
        let mut row: Vec<Cell> = vec![
            s.n.into(),
            s.shortcut_rate.mean.into(),
            s.shortcut_rate.ci_half_width.into(),
            s.selector_shortcut_rate.mean.into(),
            s.selector_shortcut_rate.ci_half_width.into(),
            bound.into(),
        ];
        for e in &s.test_errors {
            row.push(e.error.mean.into());
            row.push(e.error.ci_half_width.into());
        }
        row.push(invariant.into());
        row.push(0.5.into());
        table.push(row);
    }
    Ok(RunOutput {
        command: "fig-finite-sample",
        params: params([
            ("gamma", args.gamma.into()),
            ("families", args.families.clone().into()),
            ("weights", mixtures_weights(&noisy).into()),
            ("rho_bar", rho_bar.into()),
            ("rho_tests", args.rho_tests.clone().into()),
            ("sizes", args.sizes.clone().into()),
            ("reps", args.reps.into()),
            ("hoeffding_delta", delta.into()),
            ("ci_method", CI_METHOD.into()),
            ("rng", RNG_SCHEME.into()),
            (
                "test_error",
                "exact risk of each fitted weight vector on the test family".into(),
            ),
            (
                "invariant_counts",
                summaries
                    .iter()
                    .map(|s| s.invariant_count)
                    .collect::<Vec<_>>()
                    .into(),
            ),
            (
                "degenerate_counts",
                summaries
                    .iter()
                    .map(|s| s.degenerate_count)
                    .collect::<Vec<_>>()
                    .into(),
            ),
        ]),
        tables: vec![("finite_sample".into(), table)],
    })
}

fn mixtures_weights(p: &NoisyParams<f64>) -> Vec<f64> {
    p.mixture().weights().to_vec()
}

/// Parameters a sweep may vary.
pub const SWEEP_PARAMS: [&str; 5] = ["gamma", "rho_bar", "rho_test", "lambda", "n"];

/// Statistics a sweep may report.
pub const SWEEP_STATS: [&str; 16] = [
    "u_star",
    "v_star",
    "w_z",
    "w_s",
    "det_w_z",
    "det_w_s",
    "dphi_u0",
    "dphi_v0",
    "train_risk_invariant",
    "train_risk_shortcut",
    "test_error_invariant",
    "test_error_shortcut",
    "test_error_learned",
    "noisy_test_gap",
    "cone_gap",
    "hoeffding_bound",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    /// Parses `name=lo:hi:points` or `name=v1,v2,...`.
    pub fn parse(spec: &str) -> Result<Self, AppError> {
        let (name, rest) = spec.split_once('=').ok_or_else(|| {
            AppError::usage(format!(
                "axis `{spec}` is not of the form name=lo:hi:points"
            ))
        })?;
        let name = name.trim().to_owned();
        if !SWEEP_PARAMS.contains(&name.as_str()) {
            return Err(AppError::usage(format!(
                "unknown sweep parameter `{name}` (expected one of {})",
                SWEEP_PARAMS.join(", ")
            )));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| AppError::usage(format!("cannot parse `{s}` in axis `{spec}`")))
        };
        let values = if rest.contains(':') {
            let parts: Vec<&str> = rest.split(':').collect();
            let [lo, hi, pts] = parts[..] else {
                return Err(AppError::usage(format!("axis `{spec}` needs lo:hi:points")));
            };
            let pts: usize = pts
                .trim()
                .parse()
                .map_err(|_| AppError::usage(format!("bad point count in axis `{spec}`")))?;
            linspace(num(lo)?, num(hi)?, pts)
        } else if rest.trim().is_empty() {
            Vec::new()
        } else {
            rest.split(',').map(num).collect::<Result<_, _>>()?
        };
        if values.is_empty() {
            return Err(AppError::usage(format!("axis `{spec}` is empty")));
        }
        Ok(Self { name, values })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepArgs {
    pub x: SweepAxis,
    pub y: Option<SweepAxis>,
    pub stats: Vec<String>,
    pub gamma: f64,
    pub rho_bar: f64,
    pub rho_test: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy)]
struct SweepPoint {
    gamma: f64,
    rho_bar: f64,
    rho_test: f64,
    lambda: f64,
    n: usize,
}

impl SweepPoint {
    fn set(&mut self, name: &str, x: f64) -> Result<(), AppError> {
        match name {
            "gamma" => self.gamma = x,
            "rho_bar" => self.rho_bar = x,
            "rho_test" => self.rho_test = x,
            "lambda" => self.lambda = x,
            "n" => {
                if !(x >= 1.0 && x.fract() == 0.0 && x <= u32::MAX as f64) {
                    return Err(AppError::usage(format!(
                        "n = {x} is not a positive integer"
                    )));
                }
                self.n = x as usize;
            }
            _ => return Err(AppError::usage(format!("unknown sweep parameter `{name}`"))),
        }
        Ok(())
    }

    fn check(&self) -> Result<(), AppError> {
        ParamRange::Agreement.check("gamma", self.gamma)?;
        ParamRange::Correlation.check("rho_bar", self.rho_bar)?;
        ParamRange::Correlation.check("rho_test", self.rho_test)?;
        ParamRange::Positive.check("lambda", self.lambda)
    }

    fn stat(&self, name: &str, settings: &Settings) -> Result<Option<f64>, AppError> {
        let cfg = || {
            Settings {
                lambda: self.lambda,
                ..*settings
            }
            .ridge()
        };
        let (g, rb, rt) = (self.gamma, self.rho_bar, self.rho_test);
        let v = match name {
            "u_star" => solve_noisy(g, rb, &cfg()?)?.u_star,
            "v_star" => solve_noisy(g, rb, &cfg()?)?.v_star,
            "w_z" => solve_noisy(g, rb, &cfg()?)?.w.w_z,
            "w_s" => solve_noisy(g, rb, &cfg()?)?.w.w_s,
            "det_w_z" => solve_deterministic(rb, &cfg()?)?.w.w_z,
            "det_w_s" => solve_deterministic(rb, &cfg()?)?.w.w_s,
            "dphi_u0" => noisy_derivatives_at_zero(g, rb).0,
            "dphi_v0" => noisy_derivatives_at_zero(g, rb).1,
            "train_risk_invariant" => noisy_rule_risk(RulePair::InvariantRule, g, rb),
            "train_risk_shortcut" => noisy_rule_risk(RulePair::ShortcutRule, g, rb),
            "test_error_invariant" => noisy_rule_risk(RulePair::InvariantRule, g, rt),
            "test_error_shortcut" => noisy_rule_risk(RulePair::ShortcutRule, g, rt),
            "test_error_learned" => exact_test_error(&solve_noisy(g, rb, &cfg()?)?, g, rt),
            "noisy_test_gap" => noisy_test_gap(g, rt),
            "cone_gap" => cone_gap(&TrainingMixture::single(rb)?, rt),
            "hoeffding_bound" => {
                let delta = rb - g;
                if delta <= 0.0 {
                    return Ok(None);
                }
                hoeffding_selection_bound::<f64>(self.n as u64, delta)
                    .map_err(|e| AppError::Numerical(e.to_string()))?
            }
            _ => return Err(AppError::usage(format!("unknown statistic `{name}`"))),
        };
        Ok(Some(v))
    }
}

pub fn cmd_sweep(args: &SweepArgs, settings: &Settings) -> Result<RunOutput, AppError> {
    if args.stats.is_empty() {
        return Err(AppError::usage("no statistic requested"));
    }
    for s in &args.stats {
        if !SWEEP_STATS.contains(&s.as_str()) {
            return Err(AppError::usage(format!(
                "unknown statistic `{s}` (expected one of {})",
                SWEEP_STATS.join(", ")
            )));
        }
    }
    if let Some(y) = &args.y {
        if y.name == args.x.name {
            return Err(AppError::usage("the two sweep axes must differ"));
        }
    }
    let base = SweepPoint {
        gamma: args.gamma,
        rho_bar: args.rho_bar,
        rho_test: args.rho_test,
        lambda: settings.lambda,
        n: args.n,
    };
    let mut cols = vec![args.x.name.clone()];
    if let Some(y) = &args.y {
        cols.push(y.name.clone());
    }
    cols.extend(["statistic".to_owned(), "value".to_owned()]);
    let mut table = Table::new(cols);
    let y_values: Vec<Option<f64>> = match &args.y {
        Some(y) => y.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    for &xv in &args.x.values {
        for &yv in &y_values {
            let mut p = base;
            p.set(&args.x.name, xv)?;
            let mut at = vec![(args.x.name.as_str(), xv)];
            if let (Some(y), Some(yv)) = (&args.y, yv) {
                p.set(&y.name, yv)?;
                at.push((y.name.as_str(), yv));
            }
            p.check().map_err(|e| cell_error(e, &at))?;
            for s in &args.stats {
                let value = p.stat(s, settings).map_err(|e| cell_error(e, &at))?;
                let mut row: Vec<Cell> = vec![xv.into()];
                if let Some(yv) = yv {
                    row.push(yv.into());
                }
                row.push(s.as_str().into());
                row.push(value.into());
                table.push(row);
            }
        }
    }
    let axis_json = |a: &SweepAxis| serde_json::json!({ "name": a.name, "values": a.values });
    let mut p = params([
        ("x_axis", axis_json(&args.x).to_string().into()),
        ("statistics", args.stats.clone().into()),
        ("gamma", args.gamma.into()),
        ("rho_bar", args.rho_bar.into()),
        ("rho_test", args.rho_test.into()),
        ("n", args.n.into()),
    ]);
    if let Some(y) = &args.y {
        p.insert("y_axis".into(), axis_json(y).to_string().into());
    }
    Ok(RunOutput {
        command: "sweep",
        params: p,
        tables: vec![("sweep".into(), table)],
    })
}
