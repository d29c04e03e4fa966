//! Special functions and numerical kernels.
//!
//! Everything here is a pure function of its inputs. The error function is
//! the FreeBSD/SunPro `s_erf.c` rational approximation (< 1 ulp), inverted by
//! a safeguarded Newton iteration. Quadrature is globally adaptive
//! Gauss–Kronrod (7/15) bisection; root finding is plain bisection.

// Coefficients are kept digit for digit as published.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};

/// Stopping criteria shared by the iterative kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iterations: usize,
}

impl Tolerance {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iterations: usize) -> Result<Self> {
        if abs_tol.is_nan() || abs_tol <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "abs_tol",
                reason: format!("must be > 0, got {abs_tol}"),
            });
        }
        if rel_tol.is_nan() || rel_tol < 0.0 {
            return Err(Error::InvalidParameter {
                field: "rel_tol",
                reason: format!("must be >= 0, got {rel_tol}"),
            });
        }
        if max_iterations == 0 {
            return Err(Error::InvalidParameter {
                field: "max_iterations",
                reason: "must be >= 1".into(),
            });
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_iterations,
        })
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_iterations: 2000,
        }
    }
}

// ---------------------------------------------------------------------------
// erf
// ---------------------------------------------------------------------------

const ERX: f64 = 8.45062911510467529297e-01;
const EFX: f64 = 1.28379167095512586316e-01;
const TINY_X: f64 = 3.7252902984619140625e-9; // 2^-28

// erf on [0, 0.84375)
const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];

// erf on [0.84375, 1.25)
const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];

// erfc on [1.25, 1/0.35)
const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];

// erfc on [1/0.35, 28)
const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

/// Horner evaluation, lowest-order coefficient first.
fn poly(coeffs: &[f64], z: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
}

/// `1 + z*(q[0] + z*(q[1] + ...))`
fn poly1(coeffs: &[f64], z: f64) -> f64 {
    1.0 + z * poly(coeffs, z)
}

/// erfc(x) for x >= 1.25, evaluated as exp(-x^2 - 0.5625 + R/S) / x.
fn erfc_tail(x: f64) -> f64 {
    if x >= 28.0 {
        return 0.0;
    }
    let s = 1.0 / (x * x);
    let (r, q) = if x < 1.0 / 0.35 {
        (poly(&RA, s), poly1(&SA, s))
    } else {
        (poly(&RB, s), poly1(&SB, s))
    };
    // split x so that -x^2 is formed without rounding in the leading part
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    (-z * z - 0.5625).exp() * ((z - x) * (z + x) + r / q).exp() / x
}

fn erf_nonneg(x: f64) -> f64 {
    if x < 0.84375 {
        if x < TINY_X {
            return x + EFX * x;
        }
        let z = x * x;
        return x + x * (poly(&PP, z) / poly1(&QQ, z));
    }
    if x < 1.25 {
        let s = x - 1.0;
        return ERX + poly(&PA, s) / poly1(&QA, s);
    }
    if x >= 6.0 {
        return 1.0;
    }
    1.0 - erfc_tail(x)
}

/// The error function. Odd symmetry holds bit-for-bit.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let y = erf_nonneg(x.abs());
    if x.is_sign_negative() {
        -y
    } else {
        y
    }
}

/// Complementary error function, accurate in the upper tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 1.25 {
        return 1.0 - erf_nonneg(x);
    }
    erfc_tail(x)
}

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Inverse error function on (-1, 1).
///
/// Newton steps on `erf(x) - p` kept inside a shrinking bisection bracket on
/// `[0, 6]`, so the iteration cannot diverge near the endpoints.
pub fn erf_inv(p: f64) -> Result<f64> {
    if p.is_nan() || p.abs() >= 1.0 {
        return Err(Error::Domain(format!("erf_inv requires |p| < 1, got {p}")));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    let target = p.abs();
    let (mut lo, mut hi) = (0.0_f64, 6.0_f64);
    // Good start for the bulk; the bracket takes care of the tails.
    let mut x = (target * std::f64::consts::PI.sqrt() / 2.0).min(3.0);
    for _ in 0..200 {
        let fx = erf_nonneg(x) - target;
        if fx == 0.0 {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = FRAC_2_SQRT_PI * (-x * x).exp();
        let mut next = x - fx / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= f64::EPSILON * hi {
            x = next;
            break;
        }
        x = next;
    }
    Ok(if p < 0.0 { -x } else { x })
}

// ---------------------------------------------------------------------------
// quadrature
// ---------------------------------------------------------------------------

// Kronrod abscissae on [0, 1]; odd indices are the embedded Gauss nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrate `f` over `[a, b]` by adaptive bisection.
///
/// The panel with the largest Kronrod–Gauss discrepancy is split until the
/// summed discrepancy drops below `max(abs_tol, rel_tol * |result|)`.
/// `max_iterations` bounds the number of splits.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() || a >= b {
        return Err(Error::Domain(format!(
            "integrate requires finite a < b, got [{a}, {b}]"
        )));
    }
    let mut panels = vec![gauss_kronrod(&f, a, b)];
    for _ in 0..tol.max_iterations {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::Domain("integrand is not finite on the interval".into()));
        }
        if error <= tol.target(value) {
            return Ok(value);
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // panel is at machine resolution; its error cannot shrink further
            return Err(Error::Convergence {
                iterations: panels.len(),
                estimate: error,
            });
        }
        panels.push(gauss_kronrod(&f, p.a, mid));
        panels.push(gauss_kronrod(&f, mid, p.b));
    }
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    if error <= tol.target(value) {
        Ok(value)
    } else {
        Err(Error::Convergence {
            iterations: tol.max_iterations,
            estimate: error,
        })
    }
}

// ---------------------------------------------------------------------------
// root finding
// ---------------------------------------------------------------------------

/// Bracketed bisection. Stops once `|f(x)| <= abs_tol` or the bracket is no
/// wider than `abs_tol`.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<f64> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    for _ in 0..tol.max_iterations {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= tol.abs_tol || hi - lo <= tol.abs_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence {
        iterations: tol.max_iterations,
        estimate: hi - lo,
    })
}
