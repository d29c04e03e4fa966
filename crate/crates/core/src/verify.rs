//! Acceptance checks, one function per criterion.
//!
//! Every check compares the library against an independent route to the same
//! number: adaptive quadrature of a density, a literal formula, or a pinned
//! reference value. [`VerifyOptions::erf_perturbation`] replaces `erf` in the
//! closed-form powers with `erf·(1 + δ)` so the suite can be shown to fail
//! when the closed forms are wrong.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, SQRT_2};
use std::time::Instant;

use serde::Serialize;

use crate::distributions::{
    pdf_ps, pdf_ps_expanded, postselection_probability, ProbeDistribution, ProbeKind, DEGENERACY_THRESHOLD,
};
use crate::hypothesis::{c_grid, table1, ClosedForms, DecisionRule, WeakValueRatio};
use crate::montecarlo::{run, simulate, Mode, SimulationConfig, SimulationOutcome};
use crate::numerics::{self, integrate, Tolerance};
use crate::optics::{
    condition_c, refraction_shifts, weak_value_ratio_squared, Case, CrystalSpec, ExperimentSetup, ShiftPair,
};

pub const BEAM_WAIST_UM: f64 = 55.0;
/// `gλ₋` used for the operating points of cases (b) and (c).
pub const OPERATING_G_LAMBDA_MINUS: f64 = 0.32;
/// `gλ₊` used wherever a raw (unadjusted) density is needed.
pub const OPERATING_G_LAMBDA_PLUS: f64 = 67.6;
pub const RUNTIME_BUDGET_S: f64 = 60.0;

pub const GRID_ANGLES: [f64; 8] = [
    0.0,
    FRAC_PI_8,
    FRAC_PI_4,
    3.0 * FRAC_PI_8,
    PI / 2.0,
    3.0 * FRAC_PI_4 - 0.022,
    3.0 * FRAC_PI_4,
    3.0 * FRAC_PI_4 + 0.022,
];
/// `gλ₋/w₀`.
pub const GRID_SPLITTINGS: [f64; 6] = [0.0, 1e-3, 5.8e-3, 0.1, 0.5, 1.0];
pub const GRID_CRITICAL_POINTS: [f64; 4] = [0.5, 1.0, 1.96, 3.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub erf_perturbation: f64,
    pub mc_seeds: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            erf_perturbation: 0.0,
            mc_seeds: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub expected: String,
    pub actual: String,
    pub tolerance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub elapsed_s: f64,
    pub checks: Vec<CheckRecord>,
}

impl CriterionReport {
    fn new(id: u8, title: &str, checks: Vec<CheckRecord>, started: Instant) -> Self {
        Self {
            id,
            title: title.to_string(),
            passed: checks.iter().all(|c| c.passed),
            elapsed_s: started.elapsed().as_secs_f64(),
            checks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub elapsed_s: f64,
    pub criteria: Vec<CriterionReport>,
}

fn record(
    name: impl Into<String>,
    passed: bool,
    expected: impl ToString,
    actual: impl ToString,
    tolerance: impl ToString,
) -> CheckRecord {
    CheckRecord {
        name: name.into(),
        passed,
        expected: expected.to_string(),
        actual: actual.to_string(),
        tolerance: tolerance.to_string(),
    }
}

fn within(name: &str, expected: f64, actual: f64, tol: f64) -> CheckRecord {
    record(
        name,
        (actual - expected).abs() <= tol,
        expected,
        actual,
        format!("±{tol:e}"),
    )
}

fn closed_forms(opts: &VerifyOptions) -> ClosedForms<impl Fn(f64) -> f64> {
    let delta = opts.erf_perturbation;
    ClosedForms::with_erf(move |x| numerics::erf(x) * (1.0 + delta))
}

fn grid_setup(alpha: f64, beta: f64) -> ExperimentSetup {
    ExperimentSetup::reference_case(Case::C).with_angles(alpha, beta)
}

fn rule(c: f64) -> DecisionRule {
    DecisionRule::new(c).expect("grid critical points are positive")
}

fn quad_tol() -> Tolerance {
    Tolerance {
        abs_tol: 1e-14,
        rel_tol: 1e-13,
        max_iterations: 4000,
    }
}

/// `∫ pdf` over `|y| ≥ c·w₀`, truncated ten waists past the farthest centre.
fn tail_mass<F: Fn(f64) -> f64>(pdf: F, c: f64, m: f64, w0: f64) -> crate::Result<f64> {
    let cw = c * w0;
    let reach = cw.max(m.abs()) + 10.0 * w0;
    Ok(integrate(&pdf, -reach, -cw, quad_tol())? + integrate(&pdf, cw, reach, quad_tol())?)
}

/// Every `(α, β, gλ₋)` grid point.
fn grid_points() -> impl Iterator<Item = (f64, f64, f64)> {
    GRID_ANGLES.into_iter().flat_map(|a| {
        GRID_ANGLES
            .into_iter()
            .flat_map(move |b| GRID_SPLITTINGS.into_iter().map(move |s| (a, b, s * BEAM_WAIST_UM)))
    })
}

fn is_degenerate(setup: &ExperimentSetup, m: f64) -> bool {
    postselection_probability(setup, &ShiftPair::from_plus_minus(0.0, m)) <= DEGENERACY_THRESHOLD
}

pub fn criterion_1_shifts() -> CriterionReport {
    let t = Instant::now();
    let shifts = refraction_shifts(&CrystalSpec::quartz_633nm());
    let checks = vec![
        within("shift_H (um)", 67.92, shifts.shift_h, 0.01),
        within("shift_V (um)", 67.28, shifts.shift_v, 0.01),
        within("g*lambda_minus (um)", 0.32, shifts.g_lambda_minus(), 0.005),
    ];
    CriterionReport::new(1, "Snell-shift reproduction", checks, t)
}

pub fn criterion_2_table() -> CriterionReport {
    let t = Instant::now();
    let (a, b, c) = (Case::A, Case::B, Case::C);
    let ca = condition_c(a.alpha(), a.beta());
    let cc = condition_c(c.alpha(), c.beta());
    let mut checks = vec![
        record("C(pi/4, pi/4) exact", ca == 1.0, 1.0, ca, "exact"),
        record("C(pi/4, 3pi/4) exact", cc == -1.0, -1.0, cc, "exact"),
        within("C(pi/4, 3pi/4+0.022)", -0.999, condition_c(b.alpha(), b.beta()), 5e-4),
    ];
    match weak_value_ratio_squared(b.alpha(), b.beta()) {
        Ok(r) => checks.push(within("weak-value ratio squared, row (b)", 2065.0, r, 1.0)),
        Err(e) => checks.push(record("weak-value ratio squared, row (b)", false, 2065.0, e, "±1")),
    }
    let row_c = table1().into_iter().find(|r| r.label == c.label());
    let indeterminate = matches!(
        row_c.as_ref().map(|r| r.weak_value_ratio_sq),
        Some(WeakValueRatio::Indeterminate)
    );
    let shown = row_c
        .map(|r| r.weak_value_ratio_sq.to_string())
        .unwrap_or_else(|| "missing".into());
    checks.push(record(
        "row (c) weak-value ratio",
        indeterminate,
        "indeterminate",
        shown,
        "exact",
    ));
    CriterionReport::new(2, "Condition and weak-value table", checks, t)
}

pub fn criterion_3_postselection_loss() -> CriterionReport {
    let t = Instant::now();
    let setup = ExperimentSetup::reference_case(Case::C);
    let m = OPERATING_G_LAMBDA_MINUS;
    let w0 = setup.beam_waist_um;
    let p = postselection_probability(&setup, &ShiftPair::from_plus_minus(OPERATING_G_LAMBDA_PLUS, m));
    // Literal three-term normalisation; harmless cancellation at this size.
    let (ca, sa, cb, sb) = (setup.alpha.cos(), setup.alpha.sin(), setup.beta.cos(), setup.beta.sin());
    let oracle = ca * ca * cb * cb + sa * sa * sb * sb + 0.5 * setup.condition_c() * (-(m * m) / (2.0 * w0 * w0)).exp();
    let order = p.log10().round();
    let checks = vec![
        record(
            "P vs 8.46e-6",
            ((p - 8.46e-6) / 8.46e-6).abs() <= 0.02,
            8.46e-6,
            p,
            "2% relative",
        ),
        record(
            "P vs literal normalisation",
            ((p - oracle) / oracle).abs() <= 0.02,
            oracle,
            p,
            "2% relative",
        ),
        record(
            "order of magnitude",
            order == -5.0,
            "1e-5",
            format!("1e{order}"),
            "exact",
        ),
    ];
    CriterionReport::new(3, "Postselection loss", checks, t)
}

pub fn criterion_4_power_curves(opts: &VerifyOptions) -> CriterionReport {
    let t = Instant::now();
    let forms = closed_forms(opts);
    let m = OPERATING_G_LAMBDA_MINUS;
    let mut checks = Vec::new();

    let setup_c = ExperimentSetup::reference_case(Case::C);
    let w0 = setup_c.beam_waist_um;
    let r1 = rule(1.0);
    let quadrature = ProbeDistribution::new(ProbeKind::PsAdjusted, setup_c, ShiftPair::from_plus_minus(0.0, m))
        .and_then(|d| tail_mass(|y| d.pdf(y), 1.0, m, w0));
    match quadrature {
        Ok(q) => checks.push(within("case (c) b_ps at c=1, quadrature", 0.801, q, 0.005)),
        Err(e) => checks.push(record("case (c) b_ps at c=1, quadrature", false, 0.801, e, "±0.005")),
    }
    match forms.power_ps(m, &setup_c, &r1) {
        Ok(b_ps) => {
            checks.push(within("case (c) b_ps at c=1, closed form", 0.801, b_ps, 0.005));
            let gap = b_ps - forms.power_nps(m, w0, &r1);
            checks.push(record(
                "case (c) b_ps - b_nps at c=1",
                gap >= 0.45,
                ">= 0.45",
                gap,
                "one-sided",
            ));
        }
        Err(e) => checks.push(record("case (c) b_ps at c=1, closed form", false, 0.801, e, "±0.005")),
    }

    let setup_b = ExperimentSetup::reference_case(Case::B);
    let grid = c_grid(0.5, 2.0, 151).expect("valid range");
    let mut worst = (0.0f64, 0.0f64);
    let mut failure = None;
    for &c in &grid {
        let r = rule(c);
        match forms.power_ps(m, &setup_b, &r) {
            Ok(b_ps) => {
                let gap = (b_ps - forms.power_nps(m, w0, &r)).abs();
                if gap > worst.0 {
                    worst = (gap, c);
                }
            }
            Err(e) => failure = Some(e),
        }
    }
    let name = "case (b) max |b_ps - b_nps| over c in [0.5, 2]";
    checks.push(match failure {
        Some(e) => record(name, false, "<= 0.02", e, "one-sided"),
        None => record(
            name,
            worst.0 <= 0.02,
            "<= 0.02",
            format!("{:.6} at c={:.3}", worst.0, worst.1),
            "one-sided",
        ),
    });
    CriterionReport::new(4, "Power-curve behaviour", checks, t)
}

pub fn criterion_5_inequality(opts: &VerifyOptions) -> CriterionReport {
    let t = Instant::now();
    let forms = closed_forms(opts);
    let w0 = BEAM_WAIST_UM;
    let mut points = 0usize;
    let mut violations = Vec::new();
    let mut margin_min = f64::INFINITY;
    let mut margin_bad = Vec::new();
    for (a, b, m) in grid_points() {
        let setup = grid_setup(a, b);
        for c in GRID_CRITICAL_POINTS {
            let r = rule(c);
            if m != 0.0 {
                match forms.erf_inequality_margin(m, w0, &r) {
                    Ok(margin) if margin > 0.0 => margin_min = margin_min.min(margin),
                    Ok(margin) => margin_bad.push(format!("m={m} c={c}: {margin:e}")),
                    Err(e) => margin_bad.push(format!("m={m} c={c}: {e}")),
                }
            }
            if m == 0.0 || is_degenerate(&setup, m) {
                continue;
            }
            points += 1;
            let b_nps = forms.power_nps(m, w0, &r);
            let ok = match forms.power_ps(m, &setup, &r) {
                Ok(b_ps) if setup.condition_c() <= 0.0 => b_ps >= b_nps - 1e-12,
                Ok(b_ps) => b_ps <= b_nps + 1e-12,
                Err(_) => false,
            };
            if !ok {
                violations.push(format!("a={a:.4} b={b:.4} m={m} c={c}"));
            }
        }
    }
    let checks = vec![
        record(
            "grid points with gλ₋ != 0, non-degenerate",
            points >= 500,
            ">= 500",
            points,
            "count",
        ),
        record(
            "b_ps vs b_nps ordered by sign of C",
            violations.is_empty(),
            "0 violations",
            format!("{} violations{}", violations.len(), first(&violations)),
            "1e-12",
        ),
        record(
            "erf-inequality margin > 0",
            margin_bad.is_empty(),
            "> 0 everywhere",
            format!("min {margin_min:e}, {} bad{}", margin_bad.len(), first(&margin_bad)),
            "strict",
        ),
    ];
    CriterionReport::new(5, "Inequality theorem", checks, t)
}

fn first(items: &[String]) -> String {
    items.first().map(|s| format!(" (first: {s})")).unwrap_or_default()
}

pub fn criterion_6_size_symmetry(opts: &VerifyOptions) -> CriterionReport {
    let t = Instant::now();
    let forms = closed_forms(opts);
    let w0 = BEAM_WAIST_UM;
    let mut checks = Vec::new();

    let mut size_err = 0.0f64;
    let mut size_points = 0usize;
    for a in GRID_ANGLES {
        for b in GRID_ANGLES {
            let setup = grid_setup(a, b);
            if setup.condition_c() <= -1.0 || is_degenerate(&setup, 0.0) {
                continue;
            }
            for c in GRID_CRITICAL_POINTS {
                let r = rule(c);
                let size = numerics::erfc(c / SQRT_2);
                let b_nps = forms.power_nps(0.0, w0, &r);
                let b_ps = forms.power_ps(0.0, &setup, &r).unwrap_or(f64::NAN);
                size_err = size_err.max((b_nps - size).abs()).max((b_ps - size).abs());
                size_points += 1;
            }
        }
    }
    checks.push(record(
        "b_ps(0) = b_nps(0) = 1 - erf(c/sqrt2)",
        size_err <= 1e-12,
        0.0,
        format!("max error {size_err:e} over {size_points} points"),
        "1e-12",
    ));

    let mut even_err = 0.0f64;
    for (a, b, m) in grid_points() {
        let setup = grid_setup(a, b);
        if m == 0.0 {
            continue;
        }
        for c in GRID_CRITICAL_POINTS {
            let r = rule(c);
            even_err = even_err.max((forms.power_nps(m, w0, &r) - forms.power_nps(-m, w0, &r)).abs());
            if !is_degenerate(&setup, m) {
                let plus = forms.power_ps(m, &setup, &r).unwrap_or(f64::NAN);
                let minus = forms.power_ps(-m, &setup, &r).unwrap_or(f64::NAN);
                even_err = even_err.max((plus - minus).abs());
            }
        }
    }
    checks.push(record(
        "powers even in gλ₋",
        even_err <= 1e-12,
        0.0,
        format!("max |b(m) - b(-m)| {even_err:e}"),
        "1e-12",
    ));

    let mut norm_err = 0.0f64;
    let mut norm_count = 0usize;
    let mut norm_failures = Vec::new();
    for (a, b, m) in grid_points() {
        let setup = grid_setup(a, b);
        let shifts = ShiftPair::from_plus_minus(OPERATING_G_LAMBDA_PLUS, m);
        for kind in ProbeKind::ALL {
            let Ok(density) = ProbeDistribution::new(kind, setup, shifts) else {
                continue;
            };
            let (lo, hi) = density.window();
            match integrate(|y| density.pdf(y), lo, hi, quad_tol()) {
                Ok(total) => norm_err = norm_err.max((total - 1.0).abs()),
                Err(e) => norm_failures.push(format!("{kind:?} a={a:.4} b={b:.4} m={m}: {e}")),
            }
            norm_count += 1;
        }
    }
    checks.push(record(
        "all four densities normalise",
        norm_err <= 1e-9 && norm_failures.is_empty(),
        1.0,
        format!(
            "max |mass - 1| {norm_err:e} over {norm_count} densities{}",
            first(&norm_failures)
        ),
        "1e-9",
    ));

    // Pointwise relative agreement of the amplitude form with the literal
    // three-term form on a 401-point window per grid point.
    let mut rel_worst = (0.0f64, String::new());
    let mut scaled_worst = 0.0f64;
    let mut compared = 0usize;
    let mut over = 0usize;
    for (a, b, m) in grid_points() {
        let setup = grid_setup(a, b);
        let shifts = ShiftPair::from_plus_minus(OPERATING_G_LAMBDA_PLUS, m);
        if is_degenerate(&setup, m) {
            continue;
        }
        let p = postselection_probability(&setup, &shifts);
        let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
        let term_scale =
            (ca * ca * cb * cb + sa * sa * sb * sb + 0.5 * setup.condition_c().abs()) / ((2.0 * PI).sqrt() * w0 * p);
        for k in 0..=400 {
            let y = OPERATING_G_LAMBDA_PLUS - 8.0 * w0 + 16.0 * w0 * k as f64 / 400.0;
            let amp = pdf_ps(y, &setup, &shifts).unwrap_or(f64::NAN);
            let lit = pdf_ps_expanded(y, &setup, &shifts).unwrap_or(f64::NAN);
            if amp == 0.0 && lit == 0.0 {
                continue;
            }
            compared += 1;
            let rel = (amp - lit).abs() / amp.abs().max(lit.abs());
            if rel.is_nan() || rel > 1e-12 {
                over += 1;
            }
            if rel.is_nan() || rel > rel_worst.0 {
                rel_worst = (rel, format!("a={a:.4} b={b:.4} m={m} y={y:.3}"));
            }
            scaled_worst = scaled_worst.max((amp - lit).abs() / term_scale);
        }
    }
    checks.push(record(
        "amplitude vs three-term density, relative",
        over == 0,
        "<= 1e-12 at every point",
        format!(
            "{over}/{compared} points above; worst {:e} at {}; worst relative to term magnitude {scaled_worst:e}",
            rel_worst.0, rel_worst.1
        ),
        "1e-12",
    ));
    CriterionReport::new(6, "Size and symmetry suite", checks, t)
}

pub fn criterion_7_closed_vs_quadrature(opts: &VerifyOptions) -> CriterionReport {
    let t = Instant::now();
    let forms = closed_forms(opts);
    let w0 = BEAM_WAIST_UM;
    let mut worst = (0.0f64, String::new());
    let mut count = 0usize;
    let mut failures = Vec::new();
    for (a, b, m) in grid_points() {
        let setup = grid_setup(a, b);
        let shifts = ShiftPair::from_plus_minus(0.0, m);
        let nps = ProbeDistribution::new(ProbeKind::NpsAdjusted, setup, shifts).expect("valid setup");
        let ps = ProbeDistribution::new(ProbeKind::PsAdjusted, setup, shifts).ok();
        for c in GRID_CRITICAL_POINTS {
            let r = rule(c);
            let mut compare = |label: &str, analytic: crate::Result<f64>, density: &ProbeDistribution| {
                let q = tail_mass(|y| density.pdf(y), c, m, w0);
                match (analytic, q) {
                    (Ok(x), Ok(q)) => {
                        let err = (x - q).abs();
                        if err.is_nan() || err > worst.0 {
                            worst = (err, format!("{label} a={a:.4} b={b:.4} m={m} c={c}"));
                        }
                    }
                    (Err(e), _) | (_, Err(e)) => failures.push(format!("{label} a={a:.4} b={b:.4} m={m} c={c}: {e}")),
                }
                count += 1;
            };
            compare("nps", Ok(forms.power_nps(m, w0, &r)), &nps);
            if let Some(ps) = &ps {
                compare("ps", forms.power_ps(m, &setup, &r), ps);
            }
        }
    }
    let checks = vec![record(
        "closed-form powers vs tail quadrature",
        worst.0 <= 1e-8 && failures.is_empty(),
        "<= 1e-8",
        format!(
            "worst {:e} at {} over {count} comparisons{}",
            worst.0,
            worst.1,
            first(&failures)
        ),
        "1e-8",
    )];
    CriterionReport::new(7, "Closed form vs definition", checks, t)
}

struct McCase {
    case: Case,
    n_emitted: u64,
}

pub fn criterion_8_monte_carlo(opts: &VerifyOptions) -> CriterionReport {
    let t = Instant::now();
    let forms = closed_forms(opts);
    let r = rule(1.0);
    let m = OPERATING_G_LAMBDA_MINUS;
    let shifts = ShiftPair::from_plus_minus(OPERATING_G_LAMBDA_PLUS, m);
    let mut checks = Vec::new();
    for mc in [
        McCase {
            case: Case::B,
            n_emitted: 1_000_000,
        },
        McCase {
            case: Case::C,
            n_emitted: 10_000_000,
        },
    ] {
        let setup = ExperimentSetup::reference_case(mc.case);
        let label = mc.case.label();
        let p = postselection_probability(&setup, &shifts);
        let Ok(b) = forms.power_ps(m, &setup, &r) else {
            checks.push(record(
                format!("case ({label}) analytic power"),
                false,
                "finite",
                "error",
                "-",
            ));
            continue;
        };
        let n = mc.n_emitted as f64;
        let count_sigma = (n * p * (1.0 - p)).sqrt();
        let mut passes = 0usize;
        let mut first_miss = None;
        for seed in 0..opts.mc_seeds as u64 {
            let config = SimulationConfig {
                setup,
                shifts,
                rule: r,
                n_emitted: mc.n_emitted,
                seed,
                mode: Mode::Ps,
            };
            let ok = match run(&config) {
                Ok(SimulationOutcome::Detected { power, .. }) => {
                    let k = power.n_detected as f64;
                    let power_sigma = (b * (1.0 - b) / k).sqrt();
                    let count_z = (k - n * p) / count_sigma;
                    let power_z = (power.estimate - b) / power_sigma;
                    let ok = count_z.abs() <= 3.0 && power_z.abs() <= 3.0;
                    if !ok && first_miss.is_none() {
                        first_miss = Some(format!("seed {seed}: count z={count_z:.2}, power z={power_z:.2}"));
                    }
                    ok
                }
                _ => false,
            };
            passes += ok as usize;
        }
        let needed = (0.99 * opts.mc_seeds as f64).ceil() as usize;
        checks.push(record(
            format!("case ({label}) n={} within 3 sigma", mc.n_emitted),
            passes >= needed,
            format!(">= {needed}/{} seeds", opts.mc_seeds),
            format!(
                "{passes}/{}{}",
                opts.mc_seeds,
                first_miss.map(|s| format!(" (first miss {s})")).unwrap_or_default()
            ),
            "3 binomial sigma",
        ));
    }

    let config = SimulationConfig {
        setup: ExperimentSetup::reference_case(Case::C),
        shifts,
        rule: r,
        n_emitted: 10_000_000,
        seed: 7,
        mode: Mode::Ps,
    };
    let on = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(|| simulate(&config))
    };
    let (one, four) = (on(1), on(4));
    let identical = match (&one, &four) {
        (Ok(x), Ok(y)) => {
            x.photon_indices == y.photon_indices
                && x.positions
                    .iter()
                    .zip(&y.positions)
                    .all(|(a, b)| a.to_bits() == b.to_bits())
                && x.positions.len() == y.positions.len()
        }
        _ => false,
    };
    let detected = one.as_ref().map(|b| b.n_detected()).unwrap_or(0);
    checks.push(record(
        "batch bitwise identical on 1 and 4 threads",
        identical,
        "identical",
        format!(
            "{} ({detected} photons)",
            if identical { "identical" } else { "different" }
        ),
        "bitwise",
    ));
    CriterionReport::new(8, "Monte Carlo validation", checks, t)
}

pub fn criterion_9_no_data() -> CriterionReport {
    let t = Instant::now();
    let mut crystal = CrystalSpec::quartz_633nm();
    crystal.n_extraordinary = crystal.n_ordinary;
    let setup = ExperimentSetup {
        crystal,
        ..ExperimentSetup::reference_case(Case::C)
    };
    let shifts = refraction_shifts(&crystal);
    let config = SimulationConfig {
        setup,
        shifts,
        rule: rule(1.0),
        n_emitted: 1_000_000,
        seed: 0,
        mode: Mode::Ps,
    };
    let outcome = std::panic::catch_unwind(|| run(&config));
    let (passed, actual) = match outcome {
        Ok(Ok(SimulationOutcome::NoData { n_emitted, acceptance })) => (
            acceptance.is_finite(),
            format!("no data: 0 of {n_emitted} detected, acceptance {acceptance:e}"),
        ),
        Ok(Ok(SimulationOutcome::Detected { batch, .. })) => {
            (false, format!("{} photons detected", batch.n_detected()))
        }
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(_) => (false, "panic".to_string()),
    };
    let checks = vec![record(
        "case (c) with n_e = n_o",
        passed,
        "no data detected",
        actual,
        "exact",
    )];
    CriterionReport::new(9, "H0 no-data regime", checks, t)
}

/// Runs every criterion, then the total runtime budget as criterion 10.
pub fn run_all(opts: &VerifyOptions) -> VerifyReport {
    let t = Instant::now();
    let mut criteria = vec![
        criterion_1_shifts(),
        criterion_2_table(),
        criterion_3_postselection_loss(),
        criterion_4_power_curves(opts),
        criterion_5_inequality(opts),
        criterion_6_size_symmetry(opts),
        criterion_7_closed_vs_quadrature(opts),
        criterion_8_monte_carlo(opts),
        criterion_9_no_data(),
    ];
    let elapsed = t.elapsed().as_secs_f64();
    criteria.push(CriterionReport {
        id: 10,
        title: "Runtime budget".into(),
        passed: elapsed < RUNTIME_BUDGET_S,
        elapsed_s: 0.0,
        checks: vec![record(
            "total runtime (s)",
            elapsed < RUNTIME_BUDGET_S,
            format!("< {RUNTIME_BUDGET_S}"),
            format!("{elapsed:.2}"),
            "one-sided",
        )],
    });
    VerifyReport {
        passed: criteria.iter().all(|c| c.passed),
        elapsed_s: elapsed,
        criteria,
    }
}
