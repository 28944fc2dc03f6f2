//! Rebuilding a Jost function from its zeros.
//!
//! A Jost function restricted to a disc of radius `R` is determined, up to a
//! degree-one exponential factor, by its zeros inside the disc: the model is
//!
//! ```text
//! f(z) = z^{n0} · e^{a1·z + a0} · ∏_n E(z / z_n),     E(w) = (1 − w) e^w
//! ```
//!
//! where `n0` is the multiplicity of a zero at the origin and the product runs
//! over the remaining zeros with multiplicity.  The linear coefficients are
//! pinned down by a two-point calibration on the positive imaginary axis,
//! where the true function is close to one; [`normalize`] performs that fit
//! with a branch-continuous logarithm so the constant term is not polluted by
//! 2πi ambiguities.
//!
//! The same machinery covers two side quantities used elsewhere: the
//! perturbation ratio `W(z) = ∏ (z − z_n)/(z − z̃_n)` comparing two paired
//! zero lists ([`ratio_w`]), and the a-priori bound on the influence of zeros
//! outside the disc ([`tail_bound_pi`]).

use std::fmt;

use num_complex::Complex64;

use crate::jost::JostModel;
use crate::numerics::wrap_angle;
use crate::zeros::ZeroSet;

/// A zero this close to the origin is treated as sitting at the origin and
/// must be carried by `n0`, not by an elementary factor.
const ORIGIN_RADIUS: f64 = 1e-12;

/// Below this modulus `log E(w)` is summed as a series; above it the closed
/// form `ln(1−w) + w` has no cancellation worth worrying about.
const SERIES_RADIUS: f64 = 1e-8;

/// Factor count beyond which [`truncated_product`] switches from direct
/// multiplication to summing logarithms.
const DIRECT_PRODUCT_LIMIT: usize = 64;

/// Failures in factorization, calibration, and the paired-set ratio.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorError {
    /// A listed zero sits at the origin; it must be expressed through the
    /// `n0` power instead of an elementary factor `E(z/0)`.
    ZeroAtOrigin,
    /// The two calibration heights coincide, so the 2x2 system for
    /// `(a1, a0)` is singular.
    SingularCalibration { height: f64 },
    /// The product vanishes at a calibration height because a listed zero
    /// lies on the positive imaginary axis at that height.
    ZeroAtCalibration { height: f64 },
    /// `ratio_w` needs two lists of equal length with matching
    /// multiplicities entry by entry.
    UnpairedSets { left: usize, right: usize },
    /// Paired entries disagree in multiplicity.
    MultiplicityMismatch { index: usize },
    /// The evaluation point coincides with a perturbed zero, where the
    /// ratio has a pole.
    PoleAtSample { index: usize },
    /// `tail_bound_pi` was asked about a point outside its regime of
    /// validity (`|z| <= R/2` and `R >= 18·kappa`).
    TailOutOfRange { radius: f64, z_abs: f64, kappa: f64 },
}

impl fmt::Display for FactorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorError::ZeroAtOrigin => {
                write!(
                    f,
                    "zero at the origin must be represented by n0, not a product factor"
                )
            }
            FactorError::SingularCalibration { height } => {
                write!(
                    f,
                    "calibration heights coincide at y = {height}; system is singular"
                )
            }
            FactorError::ZeroAtCalibration { height } => {
                write!(f, "model vanishes at calibration height y = {height}")
            }
            FactorError::UnpairedSets { left, right } => {
                write!(f, "zero lists are not paired: {left} vs {right} entries")
            }
            FactorError::MultiplicityMismatch { index } => {
                write!(f, "paired zeros at index {index} differ in multiplicity")
            }
            FactorError::PoleAtSample { index } => {
                write!(
                    f,
                    "evaluation point equals perturbed zero {index}; ratio has a pole there"
                )
            }
            FactorError::TailOutOfRange {
                radius,
                z_abs,
                kappa,
            } => {
                write!(
                    f,
                    "tail bound needs |z| <= R/2 and R >= 18*kappa; got |z| = {z_abs}, R = {radius}, kappa = {kappa}"
                )
            }
        }
    }
}

impl std::error::Error for FactorError {}

/// The Weierstrass factor of genus one, `E(w) = (1 − w) e^w`.
///
/// Satisfies `E(0) = 1` and vanishes only at `w = 1`.  For tiny `|w|` the
/// value is recovered from [`elementary_factor_minus_1`] so that callers
/// composing `E(w) − 1` by hand do not lose the leading `−w²/2` term.
pub fn elementary_factor(w: Complex64) -> Complex64 {
    if w.norm() < SERIES_RADIUS {
        return elementary_factor_minus_1(w) + 1.0;
    }
    (Complex64::new(1.0, 0.0) - w) * w.exp()
}

/// `E(w) − 1`, accurate for small `|w|` where direct subtraction cancels.
///
/// Uses `E(w) − 1 = expm1(log E(w))` with `log E(w) = −Σ_{k≥2} w^k/k`
/// summed as a series when `|w|` is small.  The leading behaviour is
/// `−w²/2`, quadratically small, which the naive form loses entirely once
/// `|w|²` drops below the rounding error of `1`.
pub fn elementary_factor_minus_1(w: Complex64) -> Complex64 {
    if w.norm() >= 0.5 {
        return elementary_factor(w) - 1.0;
    }
    complex_expm1(elementary_factor_log_series(w))
}

/// `log E(w)` for `|w| < 1` via the series `−Σ_{k≥2} w^k/k`.
fn elementary_factor_log_series(w: Complex64) -> Complex64 {
    // Converges geometrically for |w| < 1; callers stay below 1/2.
    let mut term = w * w; // w^k, starting at k = 2
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 2..200 {
        let contribution = term / k as f64;
        sum -= contribution;
        if contribution.norm() < 1e-20 * sum.norm().max(1e-300) {
            break;
        }
        term *= w;
    }
    sum
}

/// Principal-branch `log E(w)`, with the series used near the origin.
fn elementary_factor_log(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        elementary_factor_log_series(w)
    } else {
        (Complex64::new(1.0, 0.0) - w).ln() + w
    }
}

/// `e^s − 1` without cancellation for small `s`.
fn complex_expm1(s: Complex64) -> Complex64 {
    // e^{a+bi} − 1 = expm1(a)·cos b + (cos b − 1) + i e^a sin b, with each
    // piece individually stable for small arguments.
    let (a, b) = (s.re, s.im);
    let cos_b = b.cos();
    let re = a.exp_m1() * cos_b + 2.0 * (0.5 * b).sin().powi(2) * (-1.0);
    let im = a.exp() * b.sin();
    Complex64::new(re, im)
}

/// Product of elementary factors over every zero in the set, with
/// multiplicity: `∏_n E(z/z_n)^{m_n}`.
///
/// Large sets (more than 64 factors counted with multiplicity) are
/// accumulated as a sum of logarithms to keep intermediate magnitudes tame;
/// an exact hit `z = z_n` short-circuits to zero in either regime.
pub fn truncated_product(zs: &ZeroSet, z: Complex64) -> Result<Complex64, FactorError> {
    for zero in &zs.zeros {
        if zero.position.norm() < ORIGIN_RADIUS {
            return Err(FactorError::ZeroAtOrigin);
        }
    }
    if zs.zeros.iter().any(|zero| zero.position == z) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if zs.total_multiplicity() <= DIRECT_PRODUCT_LIMIT {
        let mut product = Complex64::new(1.0, 0.0);
        for zero in &zs.zeros {
            let factor = elementary_factor(z / zero.position);
            for _ in 0..zero.multiplicity {
                product *= factor;
            }
        }
        Ok(product)
    } else {
        Ok(truncated_product_log(zs, z)?.exp())
    }
}

/// `Σ_n m_n · log E(z/z_n)` with principal branches per factor.
///
/// The imaginary part is a sum of principal values, not a continued
/// argument; consumers that need branch continuity must track it along a
/// path themselves.
fn truncated_product_log(zs: &ZeroSet, z: Complex64) -> Result<Complex64, FactorError> {
    let mut sum = Complex64::new(0.0, 0.0);
    for zero in &zs.zeros {
        if zero.position.norm() < ORIGIN_RADIUS {
            return Err(FactorError::ZeroAtOrigin);
        }
        sum += zero.multiplicity as f64 * elementary_factor_log(z / zero.position);
    }
    Ok(sum)
}

/// A Jost function rebuilt from a finite zero list.
///
/// Evaluates as `z^{n0} · e^{a1 z + a0} · ∏ E(z/z_n)` where the product runs
/// over `zeros` (origin zeros excluded; their order is `n0`).  Instances are
/// immutable and evaluation is pure, so a single model may be shared across
/// threads freely.
#[derive(Debug, Clone)]
pub struct FactorizedJost {
    /// Zeros inside the disc, origin excluded.
    pub zeros: ZeroSet,
    /// Order of the zero at the origin.
    pub n0: usize,
    /// Constant and linear coefficients `(a0, a1)` of the exponent.
    pub g_coeffs: (Complex64, Complex64),
    /// Real half-width of the interval on which the model tracks the true
    /// function; set to the cube root of the search radius.
    pub window: f64,
}

impl FactorizedJost {
    fn log_unwrapped(&self, z: Complex64) -> Result<Complex64, FactorError> {
        let (a0, a1) = self.g_coeffs;
        let mut sum = a1 * z + a0;
        if self.n0 > 0 {
            sum += self.n0 as f64 * z.ln();
        }
        sum += truncated_product_log(&self.zeros, z)?;
        Ok(sum)
    }
}

impl JostModel for FactorizedJost {
    fn eval(&self, z: Complex64) -> Complex64 {
        let (a0, a1) = self.g_coeffs;
        let mut value = (a1 * z + a0).exp() * z.powu(self.n0 as u32);
        value *= truncated_product(&self.zeros, z).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
        value
    }

    fn eval_log(&self, z: Complex64) -> Complex64 {
        match self.log_unwrapped(z) {
            Ok(sum) => Complex64::new(sum.re, wrap_angle(sum.im)),
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    fn log_deriv(&self, z: Complex64) -> Complex64 {
        let (_, a1) = self.g_coeffs;
        let mut sum = a1;
        if self.n0 > 0 {
            sum += self.n0 as f64 / z;
        }
        for zero in &self.zeros.zeros {
            // d/dz log E(z/z_n) = z / (z_n (z − z_n)); simple pole, residue 1.
            sum += zero.multiplicity as f64 * z / (zero.position * (z - zero.position));
        }
        sum
    }
}

/// Calibration targets for [`normalize`]: either log-values of a reference
/// model on the positive imaginary axis, or the pure-inverse default
/// `target ≡ 1` when no reference survives the problem statement.
fn target_log(reference: Option<&dyn JostModel>, z: Complex64) -> Complex64 {
    match reference {
        Some(model) => model.eval_log(z),
        None => Complex64::new(0.0, 0.0),
    }
}

/// Builds a [`FactorizedJost`] from a zero list by fixing the exponential
/// prefactor against values on the positive imaginary axis.
///
/// The zero order at the origin becomes `n0` and the remaining zeros form
/// the product.  Writing `F(y) = log target(iy) − n0 log(iy) − log Π(iy)`,
/// the model demands `F(y) = a1·iy + a0` at the two heights
/// `y_1 = 3 R^{1/3}` and `y_2 = 6 R^{1/3}`, a determined 2x2 system.  `F` is
/// sampled with a logarithm continued along the axis from
/// `y = 10 max(1, R^{1/3})` downward, so the fitted `a0` carries a branch
/// chosen consistently at both heights rather than two independent
/// principal values.  Without a `reference` the targets are identically one,
/// which is exact in the limit of large height and costs only the same
/// `R^{−1/3}` already lost to truncating the zero list.
pub fn normalize(
    zs: &ZeroSet,
    reference: Option<&dyn JostModel>,
) -> Result<FactorizedJost, FactorError> {
    let mut n0 = 0usize;
    let mut interior = ZeroSet {
        zeros: Vec::new(),
        ..zs.clone()
    };
    for zero in &zs.zeros {
        if zero.position.norm() < ORIGIN_RADIUS {
            n0 += zero.multiplicity;
        } else {
            interior.zeros.push(*zero);
        }
    }

    let scale = zs.radius.max(0.0).cbrt().max(1e-6);
    let y1 = 3.0 * scale;
    let y2 = 6.0 * scale;
    if !(y2 > y1) {
        return Err(FactorError::SingularCalibration { height: y1 });
    }
    for height in [y1, y2] {
        if interior.zeros.iter().any(|zero| {
            zero.position.re.abs() < ORIGIN_RADIUS && (zero.position.im - height).abs() < 1e-9
        }) {
            return Err(FactorError::ZeroAtCalibration { height });
        }
    }

    let sample = |y: f64| -> Result<Complex64, FactorError> {
        let z = Complex64::new(0.0, y);
        let mut value = target_log(reference, z) - truncated_product_log(&interior, z)?;
        if n0 > 0 {
            value -= n0 as f64 * z.ln();
        }
        Ok(value)
    };

    // Walk the axis from high above the disc down to y1, keeping the
    // imaginary part continuous; record the continued values at y2 and y1.
    let y_top = 10.0 * scale.max(1.0);
    let mut cursor = sample(y_top)?;
    if !cursor.is_finite() {
        return Err(FactorError::ZeroAtCalibration { height: y_top });
    }
    cursor.im = wrap_angle(cursor.im);
    let continued_at = |lo: f64, hi: f64, start: Complex64| -> Result<Complex64, FactorError> {
        let mut prev = start;
        let steps = 256;
        let mut k = 0usize;
        let mut y_prev = hi;
        while k < steps {
            k += 1;
            let mut y = hi + (lo - hi) * k as f64 / steps as f64;
            if k == steps {
                y = lo;
            }
            // Refine until the phase step is unambiguous.
            let mut depth = 0;
            loop {
                let raw = sample(y)?;
                if !raw.is_finite() {
                    return Err(FactorError::ZeroAtCalibration { height: y });
                }
                let jump = wrap_angle(raw.im - prev.im);
                if jump.abs() < std::f64::consts::FRAC_PI_2 || depth >= 24 {
                    prev = Complex64::new(raw.re, prev.im + jump);
                    y_prev = y;
                    break;
                }
                depth += 1;
                y = 0.5 * (y_prev + y);
            }
        }
        Ok(prev)
    };

    let at_y2 = continued_at(y2, y_top, cursor)?;
    let at_y1 = continued_at(y1, y2, at_y2)?;

    // F(y_j) = a1·(i y_j) + a0 solved in closed form.
    let iy1 = Complex64::new(0.0, y1);
    let iy2 = Complex64::new(0.0, y2);
    let a1 = (at_y2 - at_y1) / (iy2 - iy1);
    let a0 = at_y1 - a1 * iy1;

    Ok(FactorizedJost {
        zeros: interior,
        n0,
        g_coeffs: (a0, a1),
        window: scale,
    })
}

/// The perturbation ratio `W(z) = ∏_n ((z − z_n)/(z − z̃_n))^{m_n}` between
/// a zero list and its perturbed counterpart, paired entry by entry.
///
/// Accumulated as a sum of log differences so that long products neither
/// overflow nor lose the near-cancellation structure; identical pairs
/// contribute an exact zero and the whole ratio is exactly one when the two
/// lists coincide.
pub fn ratio_w(zs: &ZeroSet, zs_tilde: &ZeroSet, z: Complex64) -> Result<Complex64, FactorError> {
    if zs.zeros.len() != zs_tilde.zeros.len() {
        return Err(FactorError::UnpairedSets {
            left: zs.zeros.len(),
            right: zs_tilde.zeros.len(),
        });
    }
    let mut log_sum = Complex64::new(0.0, 0.0);
    let mut exact_zero = false;
    for (index, (zero, tilde)) in zs.zeros.iter().zip(&zs_tilde.zeros).enumerate() {
        if zero.multiplicity != tilde.multiplicity {
            return Err(FactorError::MultiplicityMismatch { index });
        }
        let denominator = z - tilde.position;
        if denominator.norm() == 0.0 {
            return Err(FactorError::PoleAtSample { index });
        }
        let numerator = z - zero.position;
        if numerator.norm() == 0.0 {
            exact_zero = true;
            continue;
        }
        if zero.position == tilde.position {
            continue; // identical pair cancels exactly
        }
        log_sum += zero.multiplicity as f64 * (numerator.ln() - denominator.ln());
    }
    if exact_zero {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(log_sum.exp())
}

/// Upper bound on `|log Π(R, z)|`, the influence of zeros outside the disc
/// of radius `R` on a Jost function evaluated at `z`: `t·e^t` with
/// `t = 72 |z|² / R`.
///
/// Valid only for `|z| ≤ R/2` and `R ≥ 18·kappa`, where `kappa` is the
/// growth constant of the underlying potential; outside that regime the
/// bound is meaningless and an error is returned rather than a number.
pub fn tail_bound_pi(radius: f64, z: Complex64, kappa: f64) -> Result<f64, FactorError> {
    let z_abs = z.norm();
    if !(z_abs <= radius / 2.0) || !(radius >= 18.0 * kappa) {
        return Err(FactorError::TailOutOfRange {
            radius,
            z_abs,
            kappa,
        });
    }
    let t = 72.0 * z_abs * z_abs / radius;
    Ok(t * t.exp())
}
