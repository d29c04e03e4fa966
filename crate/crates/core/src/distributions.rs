//! Probe position densities after the crystal, with and without the
//! analyzer, in raw and adjusted (centred on `g·λ₊`) coordinates.
//!
//! All lengths are μm and densities 1/μm. The postselected density is built
//! from the squared real amplitude `(cosα cosβ·G_H + sinα sinβ·G_V)²`, which is
//! nonnegative by construction; the expanded three-term form is kept as
//! [`pdf_ps_expanded`] for cross-checking.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::erfc;
use crate::optics::{ExperimentSetup, ShiftPair, ORTHOGONALITY_THRESHOLD};

/// Postselection acceptance at or below this is the undefined 0/0 case.
pub const DEGENERACY_THRESHOLD: f64 = 1e-30;

/// Half-width, in beam waists, of the window that carries all but ~1e-23 of
/// any density here.
pub const WINDOW_WAISTS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeKind {
    Nps,
    Ps,
    NpsAdjusted,
    PsAdjusted,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 4] = [
        ProbeKind::Nps,
        ProbeKind::Ps,
        ProbeKind::NpsAdjusted,
        ProbeKind::PsAdjusted,
    ];

    pub fn is_postselected(self) -> bool {
        matches!(self, ProbeKind::Ps | ProbeKind::PsAdjusted)
    }

    pub fn is_adjusted(self) -> bool {
        matches!(self, ProbeKind::NpsAdjusted | ProbeKind::PsAdjusted)
    }
}

/// Real Gaussian amplitude of the initial beam, centred at `center`.
fn amplitude(y: f64, center: f64, w0: f64) -> f64 {
    let norm = (2.0 * PI * w0 * w0).powf(-0.25);
    let d = y - center;
    norm * (-d * d / (4.0 * w0 * w0)).exp()
}

fn gauss_pdf(y: f64, center: f64, w0: f64) -> f64 {
    let d = (y - center) / w0;
    (-0.5 * d * d).exp() / ((2.0 * PI).sqrt() * w0)
}

fn gauss_cdf(y: f64, center: f64, w0: f64) -> f64 {
    0.5 * erfc(-(y - center) / (SQRT_2 * w0))
}

/// Amplitude coefficients `(cosα cosβ, sinα sinβ)` of the H and V branches
/// after the analyzer.
fn branch_amplitudes(setup: &ExperimentSetup) -> (f64, f64) {
    let (a, b) = (setup.alpha, setup.beta);
    (a.cos() * b.cos(), a.sin() * b.sin())
}

/// `|cos(α − β)|` snapped to zero for crossed polarizers.
fn overlap(setup: &ExperimentSetup) -> f64 {
    let c = (setup.alpha - setup.beta).cos();
    if c.abs() < ORTHOGONALITY_THRESHOLD {
        0.0
    } else {
        c
    }
}

/// Unpostselected density: equal-width Gaussians at `g·λ_H` and `g·λ_V`
/// weighted by `cos²α` and `sin²α`.
pub fn pdf_nps(y: f64, setup: &ExperimentSetup, shifts: &ShiftPair) -> f64 {
    let w0 = setup.beam_waist_um;
    let (c, s) = (setup.alpha.cos(), setup.alpha.sin());
    c * c * gauss_pdf(y, shifts.shift_h, w0) + s * s * gauss_pdf(y, shifts.shift_v, w0)
}

/// Probability that a photon passes the analyzer.
///
/// Evaluated as `cos²(α−β) + ½·C·expm1(−(gλ₋)²/2w₀²)`, which equals
/// `cos²α cos²β + sin²α sin²β + ½·C·e^{−(gλ₋)²/2w₀²}` but keeps full relative
/// precision when the polarizers are nearly crossed.
pub fn postselection_probability(setup: &ExperimentSetup, shifts: &ShiftPair) -> f64 {
    let w0 = setup.beam_waist_um;
    let m = shifts.g_lambda_minus();
    let overlap = overlap(setup);
    let c = setup.condition_c();
    let p = overlap * overlap + 0.5 * c * (-(m * m) / (2.0 * w0 * w0)).exp_m1();
    p.clamp(0.0, 1.0)
}

fn check_postselection(setup: &ExperimentSetup, shifts: &ShiftPair) -> Result<f64> {
    let p = postselection_probability(setup, shifts);
    if p <= DEGENERACY_THRESHOLD {
        return Err(Error::DegeneratePostselection { probability: p });
    }
    Ok(p)
}

/// Postselected density.
pub fn pdf_ps(y: f64, setup: &ExperimentSetup, shifts: &ShiftPair) -> Result<f64> {
    let p = check_postselection(setup, shifts)?;
    Ok(ps_unnormalized(y, setup, shifts) / p)
}

fn ps_unnormalized(y: f64, setup: &ExperimentSetup, shifts: &ShiftPair) -> f64 {
    let w0 = setup.beam_waist_um;
    let (a, b) = branch_amplitudes(setup);
    let psi = a * amplitude(y, shifts.shift_h, w0) + b * amplitude(y, shifts.shift_v, w0);
    psi * psi
}

/// The postselected density written out term by term: two branch Gaussians
/// plus the interference Gaussian at `g·λ₊`, over the literal normalization.
/// Loses relative accuracy to cancellation when `C(α, β) < 0`.
pub fn pdf_ps_expanded(y: f64, setup: &ExperimentSetup, shifts: &ShiftPair) -> Result<f64> {
    check_postselection(setup, shifts)?;
    let w0 = setup.beam_waist_um;
    let two_w2 = 2.0 * w0 * w0;
    let (ca, sa, cb, sb) = (setup.alpha.cos(), setup.alpha.sin(), setup.beta.cos(), setup.beta.sin());
    let c = setup.condition_c();
    let plus = shifts.g_lambda_plus();
    let m = shifts.g_lambda_minus();
    let decoherence = (-(m * m) / two_w2).exp();
    let numerator = ca * ca * cb * cb * (-(y - shifts.shift_h).powi(2) / two_w2).exp()
        + sa * sa * sb * sb * (-(y - shifts.shift_v).powi(2) / two_w2).exp()
        + 0.5 * c * (-(y - plus).powi(2) / two_w2 - m * m / two_w2).exp();
    let denominator = (2.0 * PI * w0 * w0).sqrt() * (ca * ca * cb * cb + sa * sa * sb * sb + 0.5 * c * decoherence);
    Ok(numerator / denominator)
}

/// Unpostselected density translated by `−g·λ₊`.
pub fn pdf_nps_adjusted(y: f64, setup: &ExperimentSetup, g_lambda_minus: f64) -> f64 {
    pdf_nps(y, setup, &ShiftPair::from_plus_minus(0.0, g_lambda_minus))
}

/// Postselected density translated by `−g·λ₊`.
pub fn pdf_ps_adjusted(y: f64, setup: &ExperimentSetup, g_lambda_minus: f64) -> Result<f64> {
    pdf_ps(y, setup, &ShiftPair::from_plus_minus(0.0, g_lambda_minus))
}

pub fn cdf_nps(y: f64, setup: &ExperimentSetup, shifts: &ShiftPair) -> f64 {
    let w0 = setup.beam_waist_um;
    let (c, s) = (setup.alpha.cos(), setup.alpha.sin());
    c * c * gauss_cdf(y, shifts.shift_h, w0) + s * s * gauss_cdf(y, shifts.shift_v, w0)
}

/// Cumulative distribution of the postselected density.
pub fn cdf_ps(y: f64, setup: &ExperimentSetup, shifts: &ShiftPair) -> Result<f64> {
    let p = check_postselection(setup, shifts)?;
    Ok(ps_cdf_unnormalized(y, setup, shifts, p))
}

fn ps_cdf_unnormalized(y: f64, setup: &ExperimentSetup, shifts: &ShiftPair, p: f64) -> f64 {
    let w0 = setup.beam_waist_um;
    let (a, b) = branch_amplitudes(setup);
    let m = shifts.g_lambda_minus();
    let decoherence = (-(m * m) / (2.0 * w0 * w0)).exp();
    let mass = a * a * gauss_cdf(y, shifts.shift_h, w0)
        + b * b * gauss_cdf(y, shifts.shift_v, w0)
        + 2.0 * a * b * decoherence * gauss_cdf(y, shifts.g_lambda_plus(), w0);
    (mass / p).clamp(0.0, 1.0)
}

/// A fully specified probe density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeDistribution {
    kind: ProbeKind,
    setup: ExperimentSetup,
    shifts: ShiftPair,
    acceptance: f64,
}

impl ProbeDistribution {
    pub fn new(kind: ProbeKind, setup: ExperimentSetup, shifts: ShiftPair) -> Result<Self> {
        setup.validate()?;
        let evaluated = Self::evaluated_shifts(kind, &shifts);
        let acceptance = if kind.is_postselected() {
            check_postselection(&setup, &evaluated)?
        } else {
            1.0
        };
        Ok(Self {
            kind,
            setup,
            shifts,
            acceptance,
        })
    }

    fn evaluated_shifts(kind: ProbeKind, shifts: &ShiftPair) -> ShiftPair {
        if kind.is_adjusted() {
            ShiftPair::from_plus_minus(0.0, shifts.g_lambda_minus())
        } else {
            *shifts
        }
    }

    pub fn kind(&self) -> ProbeKind {
        self.kind
    }

    pub fn setup(&self) -> &ExperimentSetup {
        &self.setup
    }

    pub fn shifts(&self) -> &ShiftPair {
        &self.shifts
    }

    /// Fraction of emitted photons this density describes.
    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }

    pub fn pdf(&self, y: f64) -> f64 {
        let shifts = Self::evaluated_shifts(self.kind, &self.shifts);
        if self.kind.is_postselected() {
            ps_unnormalized(y, &self.setup, &shifts) / self.acceptance
        } else {
            pdf_nps(y, &self.setup, &shifts)
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let shifts = Self::evaluated_shifts(self.kind, &self.shifts);
        if self.kind.is_postselected() {
            ps_cdf_unnormalized(y, &self.setup, &shifts, self.acceptance)
        } else {
            cdf_nps(y, &self.setup, &shifts)
        }
    }

    /// Interval holding the density up to Gaussian tails beyond
    /// [`WINDOW_WAISTS`] waists of either branch centre.
    pub fn window(&self) -> (f64, f64) {
        let shifts = Self::evaluated_shifts(self.kind, &self.shifts);
        let reach = WINDOW_WAISTS * self.setup.beam_waist_um;
        let lo = shifts.shift_h.min(shifts.shift_v) - reach;
        let hi = shifts.shift_h.max(shifts.shift_v) + reach;
        (lo, hi)
    }
}
