//! Testing whether the crystal is birefringent: `H₀: gλ₋ = 0` against
//! `H₁: gλ₋ ≠ 0`, by rejecting H₀ when the adjusted position satisfies
//! `|y|/w₀ ≥ c`.
//!
//! The closed-form powers are written in terms of
//!
//! * `e = erf(c/√2)`, the acceptance under H₀, and
//! * `E = ½[erf((cw₀−gλ₋)/√2w₀) + erf((cw₀+gλ₋)/√2w₀)]`, the acceptance of
//!   the unpostselected probe under H₁,
//!
//! so that `b_nps = 1 − E` and `b_ps = b_nps − C·e^{−(gλ₋)²/2w₀²}·(e − E)/D`
//! with `D` twice the postselection probability. The difference `e − E` is
//! evaluated from an integral with a positive integrand rather than by
//! subtracting two nearly equal error functions.

use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::distributions::{postselection_probability, DEGENERACY_THRESHOLD};
use crate::error::{Error, Result};
use crate::numerics::{self, erf_inv, integrate, Tolerance};
use crate::optics::{self, Case, ExperimentSetup, ShiftPair};

/// Slack allowed when clamping evaluated powers back into [0, 1].
pub const CLAMP_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    critical_point: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    AcceptNull = 0,
    RejectNull = 1,
}

impl Decision {
    pub fn as_bit(self) -> u8 {
        self as u8
    }
}

impl DecisionRule {
    pub fn new(critical_point: f64) -> Result<Self> {
        if !(critical_point > 0.0 && critical_point.is_finite()) {
            return Err(Error::InvalidParameter {
                field: "critical_point",
                reason: format!("must be a finite value > 0, got {critical_point}"),
            });
        }
        Ok(Self { critical_point })
    }

    pub fn critical_point(&self) -> f64 {
        self.critical_point
    }

    /// Decide on an adjusted position (already translated by `−gλ₊`).
    /// `|y|/w₀ = c` exactly rejects.
    pub fn decide(&self, y_adjusted: f64, w0: f64) -> Decision {
        if y_adjusted.abs() / w0 >= self.critical_point {
            Decision::RejectNull
        } else {
            Decision::AcceptNull
        }
    }

    /// Decide on a raw screen position, given `gλ₊` from a calibration run
    /// without the analyzer.
    pub fn decide_raw(&self, y: f64, g_lambda_plus: f64, w0: f64) -> Decision {
        self.decide(y - g_lambda_plus, w0)
    }
}

pub fn decide(y_adjusted: f64, w0: f64, rule: &DecisionRule) -> Decision {
    rule.decide(y_adjusted, w0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nps,
    Ps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub power: f64,
    pub method: Method,
    pub g_lambda_minus: f64,
    pub critical_point: f64,
    pub alpha: f64,
    pub beta: f64,
    pub beam_waist_um: f64,
}

/// Closed-form power expressions parameterized by the error function used.
///
/// [`ClosedForms::new`] uses [`numerics::erf`]; [`ClosedForms::with_erf`]
/// swaps in another implementation, which the verification suite uses as a
/// negative control.
#[derive(Debug, Clone, Copy)]
pub struct ClosedForms<E = fn(f64) -> f64> {
    erf: E,
}

impl ClosedForms {
    pub fn new() -> Self {
        Self { erf: numerics::erf }
    }
}

impl Default for ClosedForms {
    fn default() -> Self {
        Self::new()
    }
}

impl<E: Fn(f64) -> f64> ClosedForms<E> {
    pub fn with_erf(erf: E) -> Self {
        Self { erf }
    }

    /// `(e, E)` as described in the module docs.
    fn acceptances(&self, g_lambda_minus: f64, w0: f64, rule: &DecisionRule) -> (f64, f64) {
        let c = rule.critical_point();
        let cw = c * w0;
        let scale = SQRT_2 * w0;
        let central = (self.erf)(c / SQRT_2);
        let shifted = 0.5 * ((self.erf)((cw - g_lambda_minus) / scale) + (self.erf)((cw + g_lambda_minus) / scale));
        (central, shifted)
    }

    /// Unpostselected power.
    pub fn power_nps(&self, g_lambda_minus: f64, w0: f64, rule: &DecisionRule) -> f64 {
        let (_, shifted) = self.acceptances(g_lambda_minus, w0, rule);
        clamp_power(1.0 - shifted)
    }

    /// `b_ps − b_nps`. Its sign is exactly `−sign(C)` for `gλ₋ ≠ 0`.
    pub fn power_gap(&self, g_lambda_minus: f64, setup: &ExperimentSetup, rule: &DecisionRule) -> Result<f64> {
        let w0 = setup.beam_waist_um;
        let denominator = ps_denominator(g_lambda_minus, setup)?;
        let c = setup.condition_c();
        let decoherence = (-(g_lambda_minus * g_lambda_minus) / (2.0 * w0 * w0)).exp();
        let deficit = acceptance_deficit(g_lambda_minus, w0, rule)?;
        Ok(-c * decoherence * deficit / denominator)
    }

    /// Postselected power.
    pub fn power_ps(&self, g_lambda_minus: f64, setup: &ExperimentSetup, rule: &DecisionRule) -> Result<f64> {
        let gap = self.power_gap(g_lambda_minus, setup, rule)?;
        let (_, shifted) = self.acceptances(g_lambda_minus, setup.beam_waist_um, rule);
        Ok(clamp_power(1.0 - shifted + gap))
    }

    /// `2·erf(c/√2)/[erf((cw₀−gλ₋)/√2w₀) + erf((cw₀+gλ₋)/√2w₀)] − 1`, i.e.
    /// `(e − E)/E`. Strictly positive for `gλ₋ ≠ 0`.
    pub fn erf_inequality_margin(&self, g_lambda_minus: f64, w0: f64, rule: &DecisionRule) -> Result<f64> {
        let (_, shifted) = self.acceptances(g_lambda_minus, w0, rule);
        Ok(acceptance_deficit(g_lambda_minus, w0, rule)? / shifted)
    }

    /// `(1 − b_ps)/(1 − b_nps) − 1`, evaluated as `(b_nps − b_ps)/(1 − b_nps)`.
    pub fn power_relation(&self, g_lambda_minus: f64, setup: &ExperimentSetup, rule: &DecisionRule) -> Result<f64> {
        let (_, shifted) = self.acceptances(g_lambda_minus, setup.beam_waist_um, rule);
        if shifted.is_nan() || shifted <= 0.0 {
            return Err(Error::Domain(
                "power relation undefined: unpostselected power is 1".into(),
            ));
        }
        Ok(-self.power_gap(g_lambda_minus, setup, rule)? / shifted)
    }

    /// `C·e^{−(gλ₋)²/2w₀²}·margin / D`: the other side of the power relation,
    /// built from the erf-inequality margin.
    pub fn power_relation_rhs(&self, g_lambda_minus: f64, setup: &ExperimentSetup, rule: &DecisionRule) -> Result<f64> {
        let w0 = setup.beam_waist_um;
        let denominator = ps_denominator(g_lambda_minus, setup)?;
        let decoherence = (-(g_lambda_minus * g_lambda_minus) / (2.0 * w0 * w0)).exp();
        let margin = self.erf_inequality_margin(g_lambda_minus, w0, rule)?;
        Ok(setup.condition_c() * decoherence * margin / denominator)
    }
}

fn clamp_power(p: f64) -> f64 {
    debug_assert!(p > -CLAMP_GUARD && p < 1.0 + CLAMP_GUARD, "power {p} out of range");
    p.clamp(0.0, 1.0)
}

/// `2(cos²α cos²β + sin²α sin²β) + C·e^{−(gλ₋)²/2w₀²}`, twice the
/// postselection probability.
fn ps_denominator(g_lambda_minus: f64, setup: &ExperimentSetup) -> Result<f64> {
    let p = postselection_probability(setup, &ShiftPair::from_plus_minus(0.0, g_lambda_minus));
    if p <= DEGENERACY_THRESHOLD {
        return Err(Error::DegeneratePostselection { probability: p });
    }
    Ok(2.0 * p)
}

/// `e − E ≥ 0`, computed as
/// `(1/√π)·∫₀^d e^{−(a−s)²}·(1 − e^{−4as}) ds` with `a = c/√2`,
/// `d = |gλ₋|/(√2 w₀)`.
fn acceptance_deficit(g_lambda_minus: f64, w0: f64, rule: &DecisionRule) -> Result<f64> {
    let a = rule.critical_point() / SQRT_2;
    let d = g_lambda_minus.abs() / (SQRT_2 * w0);
    if d == 0.0 {
        return Ok(0.0);
    }
    let integrand = |s: f64| -(-(a - s) * (a - s)).exp() * (-4.0 * a * s).exp_m1();
    let tol = Tolerance {
        abs_tol: f64::MIN_POSITIVE,
        rel_tol: 1e-14,
        max_iterations: 500,
    };
    // Past a + 40 the integrand is below e^{-1600}; split there so the
    // quadrature sees the bump rather than a long flat tail.
    let cut = (a + 40.0).min(d);
    let mut total = integrate(integrand, 0.0, cut, tol)?;
    if d > cut {
        total += integrate(integrand, cut, d, Tolerance { abs_tol: 1e-300, ..tol }).unwrap_or(0.0);
    }
    Ok(0.5 * FRAC_2_SQRT_PI * total)
}

pub fn power_nps(g_lambda_minus: f64, w0: f64, rule: &DecisionRule) -> f64 {
    ClosedForms::new().power_nps(g_lambda_minus, w0, rule)
}

pub fn power_ps(g_lambda_minus: f64, setup: &ExperimentSetup, rule: &DecisionRule) -> Result<f64> {
    ClosedForms::new().power_ps(g_lambda_minus, setup, rule)
}

pub fn power_relation(g_lambda_minus: f64, setup: &ExperimentSetup, rule: &DecisionRule) -> Result<f64> {
    ClosedForms::new().power_relation(g_lambda_minus, setup, rule)
}

pub fn erf_inequality_margin(g_lambda_minus: f64, w0: f64, rule: &DecisionRule) -> Result<f64> {
    ClosedForms::new().erf_inequality_margin(g_lambda_minus, w0, rule)
}

pub fn evaluate_power(
    method: Method,
    g_lambda_minus: f64,
    setup: &ExperimentSetup,
    rule: &DecisionRule,
) -> Result<PowerResult> {
    let power = match method {
        Method::Nps => power_nps(g_lambda_minus, setup.beam_waist_um, rule),
        Method::Ps => power_ps(g_lambda_minus, setup, rule)?,
    };
    Ok(PowerResult {
        power,
        method,
        g_lambda_minus,
        critical_point: rule.critical_point(),
        alpha: setup.alpha,
        beta: setup.beta,
        beam_waist_um: setup.beam_waist_um,
    })
}

/// Critical point whose size (power under H₀) is `target_size`:
/// `c = √2·erf⁻¹(1 − size)`.
pub fn calibrate_critical_point(target_size: f64) -> Result<DecisionRule> {
    if !(target_size > 0.0 && target_size < 1.0) {
        return Err(Error::Domain(format!(
            "target size must lie in (0, 1), got {target_size}"
        )));
    }
    DecisionRule::new(SQRT_2 * erf_inv(1.0 - target_size)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCurve {
    pub case_label: String,
    pub g_lambda_minus: f64,
    pub c_grid: Vec<f64>,
    pub ps_powers: Vec<f64>,
    pub nps_powers: Vec<f64>,
}

impl PowerCurve {
    pub fn len(&self) -> usize {
        self.c_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c_grid.is_empty()
    }

    pub fn max_abs_gap(&self) -> f64 {
        self.ps_powers
            .iter()
            .zip(&self.nps_powers)
            .map(|(p, n)| (p - n).abs())
            .fold(0.0, f64::max)
    }
}

/// Uniform grid of `n_points` critical points on `[c_min, c_max]`.
pub fn c_grid(c_min: f64, c_max: f64, n_points: usize) -> Result<Vec<f64>> {
    if !(c_min > 0.0 && c_min < c_max && c_max.is_finite()) {
        return Err(Error::Domain(format!("need 0 < c_min < c_max, got [{c_min}, {c_max}]")));
    }
    if n_points < 2 {
        return Err(Error::Domain(format!("need at least 2 grid points, got {n_points}")));
    }
    let step = (c_max - c_min) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| {
            if i + 1 == n_points {
                c_max
            } else {
                c_min + step * i as f64
            }
        })
        .collect())
}

pub fn power_curve(
    setup: &ExperimentSetup,
    g_lambda_minus: f64,
    c_min: f64,
    c_max: f64,
    n_points: usize,
) -> Result<PowerCurve> {
    let grid = c_grid(c_min, c_max, n_points)?;
    let forms = ClosedForms::new();
    let mut ps_powers = Vec::with_capacity(grid.len());
    let mut nps_powers = Vec::with_capacity(grid.len());
    for &c in &grid {
        let rule = DecisionRule::new(c)?;
        ps_powers.push(forms.power_ps(g_lambda_minus, setup, &rule)?);
        nps_powers.push(forms.power_nps(g_lambda_minus, setup.beam_waist_um, &rule));
    }
    let case_label = Case::matching(setup.alpha, setup.beta)
        .map(|c| c.label().to_string())
        .unwrap_or_else(|| "custom".to_string());
    Ok(PowerCurve {
        case_label,
        g_lambda_minus,
        c_grid: grid,
        ps_powers,
        nps_powers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeakValueRatio {
    Value(f64),
    Indeterminate,
}

impl std::fmt::Display for WeakValueRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeakValueRatio::Value(v) => write!(f, "{v}"),
            WeakValueRatio::Indeterminate => f.write_str("indeterminate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub label: String,
    pub beta: f64,
    pub condition_c: f64,
    pub weak_value_ratio_sq: WeakValueRatio,
}

/// One row per `(label, beta)` at preselection angle `alpha`.
pub fn table1_rows(alpha: f64, betas: &[(String, f64)]) -> Vec<Table1Row> {
    betas
        .iter()
        .map(|(label, beta)| Table1Row {
            label: label.clone(),
            beta: *beta,
            condition_c: optics::condition_c(alpha, *beta),
            weak_value_ratio_sq: match optics::weak_value_ratio_squared(alpha, *beta) {
                Ok(v) => WeakValueRatio::Value(v),
                Err(_) => WeakValueRatio::Indeterminate,
            },
        })
        .collect()
}

/// The three operating points (a), (b), (c) at `α = π/4`.
pub fn table1() -> Vec<Table1Row> {
    let betas: Vec<(String, f64)> = Case::ALL.iter().map(|c| (c.label().to_string(), c.beta())).collect();
    table1_rows(Case::A.alpha(), &betas)
}
