//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::cell::RefCell;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shortcut_core::closed_form::{det_surrogate_grad, noisy_surrogate_grad};
use shortcut_core::optimizer::default_phase_axis;
use shortcut_core::{
    det_surrogate, deterministic_risk, exact_test_error, hoeffding_selection_bound, induced_rule,
    noisy_rule_risk, noisy_surrogate, noisy_test_gap, phase_grid, population_states,
    solve_deterministic, ChannelSolution, InducedRule, NoisyParams, RidgeConfig, RulePair, Side,
    StateDistribution, TrainingMixture, Weights,
};

struct Verdict {
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn secs(d: Duration) -> String {
    format!("{:.3} s", d.as_secs_f64())
}

fn criterion_1() -> Verdict {
    let margin = 1e-8;
    let lambdas: Vec<f64> = (0..=15)
        .map(|k| 10f64.powf(-3.0 + k as f64 / 3.0))
        .collect();
    let start = Instant::now();
    let mut points = 0;
    let mut worst = f64::INFINITY;
    let mut bad = Vec::new();
    for k in 1..=19 {
        let rho_bar = k as f64 * 0.05;
        for &lambda in &lambdas {
            let sol = solve_deterministic(rho_bar, &RidgeConfig::new(lambda).unwrap()).unwrap();
            let gap = sol.w.w_s.min(sol.w.w_z - sol.w.w_s);
            worst = worst.min(gap);
            if gap <= margin {
                bad.push((rho_bar, lambda));
            }
            points += 1;
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        bad.is_empty() && elapsed <= Duration::from_secs(5),
        format!(
            "{points} points, min(w_s, w_z - w_s) = {worst:.3e} > {margin:e}, {} violations, {}",
            bad.len(),
            secs(elapsed)
        ),
    )
}

fn criterion_2() -> Verdict {
    let axis: Vec<f64> = default_phase_axis();
    let cfg = RidgeConfig::new(0.1).unwrap();
    let start = Instant::now();
    let grid = phase_grid(&axis, &axis, &cfg).unwrap();
    let elapsed = start.elapsed();

    let mut above_bad = 0;
    let mut below_bad = 0;
    let mut band_max = 0f64;
    let mut off_min = f64::INFINITY;
    let mut exact_diag_max = 0f64;
    let mut row_ok = true;
    for (i, _) in grid.gammas.iter().enumerate() {
        let mut row_band_max = 0f64;
        let mut row_off_min = f64::INFINITY;
        for (j, _) in grid.rho_bars.iter().enumerate() {
            let c = grid.cell(i, j);
            let v = c.solution.v_star;
            let d = c.rho_bar - c.gamma;
            if d > 0.01 {
                let rule = induced_rule(&c.solution, cfg.tol_sign);
                if !(c.solution.u_star > 0.0
                    && v < 0.0
                    && rule == InducedRule::Rule(RulePair::ShortcutRule))
                {
                    above_bad += 1;
                }
            } else if d < -0.01 && v <= 0.0 {
                below_bad += 1;
            }
            if d.abs() <= 0.01 {
                band_max = band_max.max(v.abs());
                row_band_max = row_band_max.max(v.abs());
            } else {
                off_min = off_min.min(v.abs());
                row_off_min = row_off_min.min(v.abs());
            }
            if i == j {
                exact_diag_max = exact_diag_max.max(v.abs());
            }
        }
        row_ok &= row_band_max < row_off_min;
    }
    let diagonal_ok = band_max < off_min;
    let timing_ok = elapsed <= Duration::from_secs(10);
    Verdict::new(
        above_bad == 0 && below_bad == 0 && diagonal_ok && timing_ok,
        format!(
            "{} cells in {}; shortcut side violations {above_bad}, invariant side violations {below_bad}, \
             band max |v*| = {band_max:.5} vs off-band min |v*| = {off_min:.5}",
            grid.cells.len(),
            secs(elapsed)
        ),
    )
    .note(format!("shortcut side (rho_bar > gamma + 0.01): {}", ok(above_bad == 0)))
    .note(format!("invariant side (rho_bar < gamma - 0.01): {}", ok(below_bad == 0)))
    .note(format!("band |rho_bar - gamma| <= 0.01 below global off-band minimum: {}", ok(diagonal_ok)))
    .note(format!("info: exact diagonal max |v*| = {exact_diag_max:.3e}; band below off-band minimum row by row: {row_ok}"))
}

fn ok(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

fn criterion_3() -> Verdict {
    let mut r = rng(3);
    let mut worst = [0f64; 4];
    let mut weight = || -> f64 {
        // zero weights and the k % 4 cases below put draws on ties and cone boundaries
        match r.random_range(0..8) {
            0 => 0.0,
            _ => r.random_range(-3.0..3.0),
        }
    };
    let mut draws = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let (z, s) = (weight(), weight());
        draws.push((z, s));
    }
    let mut r = rng(33);
    for (k, &(z, s0)) in draws.iter().enumerate() {
        let s = match k % 4 {
            1 => z,
            2 => -z,
            _ => s0,
        };
        let w = Weights::new(z, s);
        let rho: f64 = r.random_range(-1.0..=1.0);
        let gamma: f64 = r.random_range(1e-9..=1.0);
        let rule = if r.random_bool(0.5) {
            RulePair::ShortcutRule
        } else {
            RulePair::InvariantRule
        };

        let e = [
            (deterministic_risk(&w, rho) - oracle::deterministic_error(&w, rho)).abs(),
            (noisy_rule_risk(rule, gamma, rho) - oracle::rule_error(rule, gamma, rho)).abs(),
            (noisy_test_gap(gamma, rho)
                - (oracle::rule_error(RulePair::ShortcutRule, gamma, rho)
                    - oracle::rule_error(RulePair::InvariantRule, gamma, rho)))
            .abs(),
            (exact_test_error(&ChannelSolution::from_channels(z + s, z - s), gamma, rho)
                - oracle::linear_error(&Weights::new(z, s), gamma, rho))
            .abs(),
        ];
        for (m, x) in worst.iter_mut().zip(e) {
            *m = m.max(x);
        }
    }
    let tol = 1e-12;
    Verdict::new(
        worst.iter().all(|&x| x <= tol),
        format!(
            "1000 draws, max |error|: deterministic_risk {:.1e}, noisy_rule_risk {:.1e}, noisy_test_gap {:.1e}, exact_test_error {:.1e} (tol {tol:e})",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn central_difference(f: impl Fn(&Weights<f64>) -> f64, w: &Weights<f64>) -> Weights<f64> {
    let h = 1e-5;
    let dz = (f(&Weights::new(w.w_z + h, w.w_s)) - f(&Weights::new(w.w_z - h, w.w_s))) / (2.0 * h);
    let ds = (f(&Weights::new(w.w_z, w.w_s + h)) - f(&Weights::new(w.w_z, w.w_s - h))) / (2.0 * h);
    Weights::new(dz, ds)
}

fn relative_error(a: Weights<f64>, b: Weights<f64>) -> f64 {
    (a.w_z - b.w_z).hypot(a.w_s - b.w_s) / a.w_z.hypot(a.w_s)
}

fn criterion_4() -> Verdict {
    let mut r = rng(4);
    let (mut det, mut noisy) = (0f64, 0f64);
    for _ in 0..1000 {
        let w = Weights::new(r.random_range(-3.0..=3.0), r.random_range(-3.0..=3.0));
        let rho: f64 = r.random_range(-1.0..=1.0);
        let fd = central_difference(|w| det_surrogate(w, rho), &w);
        det = det.max(relative_error(det_surrogate_grad(&w, rho), fd));
        let states = StateDistribution::product(r.random_range(0.0..=1.0), rho).unwrap();
        let fd = central_difference(|w| noisy_surrogate(w, &states), &w);
        noisy = noisy.max(relative_error(noisy_surrogate_grad(&w, &states), fd));
    }
    Verdict::new(
        det <= 1e-6 && noisy <= 1e-6,
        format!("1000 points, step 1e-5, max relative error: det {det:.2e}, noisy {noisy:.2e} (tol 1e-6)"),
    )
}

fn criterion_5() -> Verdict {
    let mut r = rng(5);
    let mut worst = 0f64;
    for _ in 0..10_000 {
        let gamma: f64 = r.random_range(1e-9..=1.0);
        let rho_bar: f64 = r.random_range(-1.0..=1.0);
        let params =
            NoisyParams::new(gamma, TrainingMixture::single(rho_bar).unwrap(), 0.0).unwrap();
        let states = population_states(&params, Side::Train);
        let w = Weights::new(r.random_range(-5.0..5.0), r.random_range(-5.0..5.0));
        let lhs = noisy_surrogate(&w, &states) - noisy_surrogate(&w.swapped(), &states);
        let rhs = (rho_bar - gamma) * (w.w_z - w.w_s) / 2.0;
        worst = worst.max((lhs - rhs).abs());
    }
    Verdict::new(
        worst <= 1e-10,
        format!("10000 draws, max deviation {worst:.2e} (tol 1e-10)"),
    )
}

struct FiniteSampleRun {
    csv: Vec<u8>,
    elapsed: Duration,
}

fn run_finite_sample(dir: &Path, threads: Option<usize>) -> FiniteSampleRun {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shortcut-lab"));
    cmd.args(["--preset", "paper", "fig-finite-sample", "--out"])
        .arg(dir);
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t.to_string());
    }
    let start = Instant::now();
    let out = cmd.output().expect("binary runs");
    let elapsed = start.elapsed();
    assert!(
        out.status.success(),
        "fig-finite-sample failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    FiniteSampleRun {
        csv: std::fs::read(dir.join("finite_sample.csv")).expect("csv written"),
        elapsed,
    }
}

fn parse_csv(bytes: &[u8]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rd = csv::Reader::from_reader(bytes);
    let header = rd.headers().unwrap().iter().map(String::from).collect();
    let rows = rd
        .records()
        .map(|r| {
            r.unwrap()
                .iter()
                .map(|f| f.parse::<f64>().unwrap())
                .collect()
        })
        .collect();
    (header, rows)
}

fn criterion_6(run: &FiniteSampleRun) -> Verdict {
    let (header, rows) = parse_csv(&run.csv);
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .unwrap_or_else(|| panic!("column {name}"))
    };
    let last = rows.last().unwrap();
    // CSV values carry 12 significant digits
    let slack = 1e-12;
    let within = |mean: &str, ci: &str, target: f64| {
        (last[col(mean)] - target).abs() <= last[col(ci)] + slack
    };
    let m030 = within("test_error_m030", "test_error_m030_ci", 0.65);
    let p070 = within("test_error_p070", "test_error_p070_ci", 0.15);
    let rate_ok = last[col("shortcut_rate")] >= 0.95;
    let mut hoeffding_ok = true;
    let mut min_slack = f64::INFINITY;
    for r in &rows {
        let sigma = r[col("selector_rate_ci")] / 1.96;
        let excess = r[col("selector_rate")] + 4.0 * sigma - r[col("hoeffding_bound")];
        min_slack = min_slack.min(excess);
        hoeffding_ok &= excess >= 0.0;
    }
    let sizes_ok = rows.len() == 15 && rows[0][col("n")] == 20.0 && last[col("n")] == 600.0;
    let timing_ok = run.elapsed <= Duration::from_secs(60);
    Verdict::new(
        m030 && p070 && rate_ok && hoeffding_ok && sizes_ok && timing_ok,
        format!(
            "n = {}: test_error_m030 {:.6} +/- {:.2e}, test_error_p070 {:.6} +/- {:.2e}, shortcut_rate {:.4}; \
             min(selector + 4 sigma - bound) = {min_slack:.4}; single-threaded run {}",
            last[col("n")],
            last[col("test_error_m030")],
            last[col("test_error_m030_ci")],
            last[col("test_error_p070")],
            last[col("test_error_p070_ci")],
            last[col("shortcut_rate")],
            secs(run.elapsed)
        ),
    )
    .note(format!("sizes: 15 on [20, 600]: {}", ok(sizes_ok)))
    .note(format!("ci contains 0.65 / 0.15: {} / {}", ok(m030), ok(p070)))
    .note(format!("selector rate above Hoeffding column within 4 sigma: {}", ok(hoeffding_ok)))
}

fn criterion_7(first: &FiniteSampleRun, dir: &Path) -> Verdict {
    let again = run_finite_sample(&dir.join("repeat"), None);
    let threaded = run_finite_sample(&dir.join("four_threads"), Some(4));
    let same = first.csv == again.csv && first.csv == threaded.csv;
    Verdict::new(
        same,
        format!(
            "{} bytes; repeat run identical: {}, 4-thread run identical: {}",
            first.csv.len(),
            first.csv == again.csv,
            first.csv == threaded.csv
        ),
    )
}

fn criterion_8() -> Verdict {
    let checks = [
        (
            "R_train(f_Z) at gamma = 0.55",
            noisy_rule_risk(RulePair::InvariantRule, 0.55, 0.8),
            0.225,
        ),
        (
            "R_train(f_S) at rho_bar = 0.80",
            noisy_rule_risk(RulePair::ShortcutRule, 0.55, 0.8),
            0.10,
        ),
        (
            "noisy_test_gap(0.55, -0.30)",
            noisy_test_gap(0.55, -0.30),
            0.425,
        ),
        (
            "hoeffding bound (n = 128, delta = 0.25)",
            hoeffding_selection_bound::<f64>(128, 0.25).unwrap(),
            1.0 - (-1f64).exp(),
        ),
    ];
    let mut v = Verdict::new(true, "");
    let mut worst = 0f64;
    for (name, got, want) in checks {
        let err = (got - want).abs();
        worst = worst.max(err);
        v.pass &= err <= 1e-12;
        v = v.note(format!(
            "{name}: {got:.15} vs {want:.15} ({})",
            ok(err <= 1e-12)
        ));
    }
    v.detail = format!("4 values, max |error| {worst:.1e} (tol 1e-12)");
    v
}

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::new(false, format!("panicked: {msg}"))
        }
    }
}

type Criterion<'a> = (u8, &'static str, Box<dyn FnOnce() -> Verdict + 'a>);

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let first: RefCell<Option<FiniteSampleRun>> = RefCell::new(None);
    let criteria: Vec<Criterion> = vec![
        (
            1,
            "deterministic minimizer in invariant cone",
            Box::new(criterion_1),
        ),
        (
            2,
            "noisy phase diagram at lambda = 0.1",
            Box::new(criterion_2),
        ),
        (3, "exact formulas vs enumeration", Box::new(criterion_3)),
        (
            4,
            "surrogate gradients vs finite differences",
            Box::new(criterion_4),
        ),
        (5, "coordinate-swap identity", Box::new(criterion_5)),
        (
            6,
            "finite-sample protocol",
            Box::new(|| {
                let run = run_finite_sample(&dir.path().join("single"), Some(1));
                let v = criterion_6(&run);
                *first.borrow_mut() = Some(run);
                v
            }),
        ),
        (
            7,
            "byte-identical reruns",
            Box::new(|| match &*first.borrow() {
                Some(run) => criterion_7(run, dir.path()),
                None => Verdict::new(false, "criterion 6 run unavailable"),
            }),
        ),
        (8, "boundary-value spot checks", Box::new(criterion_8)),
    ];

    let mut failed = Vec::new();
    println!();
    for (id, name, f) in criteria {
        let v = guarded(f);
        println!(
            "criterion {id} [{}] {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        for n in &v.notes {
            println!("    {n}");
        }
        if !v.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("\nacceptance: all 8 criteria passed");
    } else {
        println!("\nacceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
