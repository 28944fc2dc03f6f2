//! The inverse pipeline: from differences of Jost functions, or from a
//! zero list plus a reference potential, back to the tail integral
//! `x -> int_x^1 (q-tilde - q)`.
//!
//! The chain runs: factorize the zero list into an analytic model of
//! the unknown Jost function; subtract the same truncated model built
//! from the reference's own zeros, so the two calibration errors
//! cancel; invert the Fourier transform of the difference over a
//! finite window
//! with an explicit `1/z` tail correction to get the boundary kernel
//! row `D = (K_{q-tilde} - K_q)(0, .)`; push that row through the
//! inverse transformation kernel to reach `B(0, .)`; and read the tail
//! integral off the diagonal relation `2 B(x,x) = int_x^1 (q-tilde - q)`.
//! The zeroth-order estimate uses `B(0, 2x)` directly; an optional
//! fixed-point loop grows the full kernel from its boundary row to
//! supply the diagonal correction.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::bounds::{theorem61_envelope, BoundError};
use crate::factorization::{normalize, FactorError};
use crate::jost::{ForwardJost, JostModel};
use crate::kernels::{b_from_boundary, boundary_b0, k_kernel, l_kernel, KernelError};
use crate::numerics::{clenshaw_curtis, sine_integral};
use crate::potential::{Piece, Potential};
use crate::zeros::{find_zeros, ZeroError, ZeroSet};

/// Truncation tolerance for kernel series grown inside the pipeline.
const SERIES_TOL: f64 = 1e-10;
/// Fixed-point refinement stops after this many passes.
const REFINE_CAP: usize = 5;
/// ... or once successive estimates agree to this sup-norm.
const REFINE_TOL: f64 = 1e-4;
/// Tolerance for locating the reference's own zeros inside the data
/// disc.
const REF_ZERO_TOL: f64 = 1e-9;
/// Tail-envelope exponent `(p-1)/(6p)` at the default `p = 2`.
const NU_DEFAULT: f64 = 1.0 / 12.0;

/// Boundary kernel difference `D(t) = (K_{q-tilde} - K_q)(0, t)` on a
/// `t` grid, as produced by windowed Fourier inversion.
#[derive(Debug, Clone)]
pub struct BoundaryKernelDiff {
    pub t_grid: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Half-width of the finite inversion window.
    pub window: f64,
    /// Band-split radius; the window is always `tail_r^{1/6}`.
    pub tail_r: f64,
    /// Non-fatal diagnostics (inconsistent tail coefficient, ...).
    pub warnings: Vec<String>,
}

/// Output of the inverse pipeline: the tail-integral estimate on a
/// uniform `x` grid plus the diagnostics needed to judge it.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub xs: Vec<f64>,
    /// Estimate of `int_x^1 (q-tilde - q)` at the nodes of `xs`.
    pub estimate: Vec<Complex64>,
    pub sup_norm: f64,
    /// Stability-envelope value at these parameters (exact-data term).
    pub shape: f64,
    pub big_r: f64,
    pub epsilon: f64,
    pub p: f64,
    pub h: f64,
    pub window: f64,
    /// Successive sup-norm gaps of the fixed-point refinement.
    pub refine_residuals: Vec<f64>,
    /// Refinement contracted after its first pass; when it failed to,
    /// the zeroth-order estimate is returned and this flag is set.
    pub diverged: bool,
    pub warnings: Vec<String>,
}

impl ReconstructionResult {
    /// Estimate at arbitrary `x` by linear interpolation; exact zero at
    /// the right endpoint.
    pub fn estimate_at(&self, x: f64) -> Complex64 {
        let clamped = x.clamp(0.0, 1.0);
        let scaled = clamped / self.h;
        let lo = (scaled.floor() as usize).min(self.xs.len().saturating_sub(2));
        let frac = scaled - lo as f64;
        self.estimate[lo] * (1.0 - frac) + self.estimate[lo + 1] * frac
    }

    /// CSV dump: a parameter header, a column header, then one row per
    /// node, with optional truth columns.
    pub fn to_csv(&self, truth: Option<&dyn Fn(f64) -> Complex64>) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "# reconstruction R={} eps={} p={} h={} Z={}",
            self.big_r, self.epsilon, self.p, self.h, self.window
        )
        .unwrap();
        match truth {
            Some(_) => writeln!(s, "x,est_re,est_im,truth_re,truth_im").unwrap(),
            None => writeln!(s, "x,est_re,est_im").unwrap(),
        }
        for (x, est) in self.xs.iter().zip(&self.estimate) {
            match truth {
                Some(f) => {
                    let t = f(*x);
                    writeln!(s, "{},{},{},{},{}", x, est.re, est.im, t.re, t.im).unwrap();
                }
                None => writeln!(s, "{},{},{}", x, est.re, est.im).unwrap(),
            }
        }
        s
    }
}

#[derive(Debug)]
pub enum ReconstructionError {
    WindowTooSmall {
        window: f64,
    },
    EmptyGrid,
    /// The zero list must come from a disc of radius at least 20.
    RadiusTooSmall {
        radius: f64,
    },
    Factor(FactorError),
    Kernel(KernelError),
    Bound(BoundError),
    /// Locating the reference's own zeros failed.
    Zero(ZeroError),
}

impl fmt::Display for ReconstructionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReconstructionError::WindowTooSmall { window } => {
                write!(
                    f,
                    "inversion window must be positive and finite; got {window}"
                )
            }
            ReconstructionError::EmptyGrid => write!(f, "empty t grid"),
            ReconstructionError::RadiusTooSmall { radius } => {
                write!(
                    f,
                    "zero list covers a disc of radius {radius}; need at least 20"
                )
            }
            ReconstructionError::Factor(e) => write!(f, "normalization failed: {e}"),
            ReconstructionError::Kernel(e) => write!(f, "kernel stage failed: {e}"),
            ReconstructionError::Bound(e) => write!(f, "bad envelope parameters: {e}"),
            ReconstructionError::Zero(e) => write!(f, "reference zero search failed: {e}"),
        }
    }
}

impl std::error::Error for ReconstructionError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ReconstructionError::Factor(e) => Some(e),
            ReconstructionError::Kernel(e) => Some(e),
            ReconstructionError::Bound(e) => Some(e),
            ReconstructionError::Zero(e) => Some(e),
            _ => None,
        }
    }
}

impl From<FactorError> for ReconstructionError {
    fn from(e: FactorError) -> Self {
        ReconstructionError::Factor(e)
    }
}

impl From<KernelError> for ReconstructionError {
    fn from(e: KernelError) -> Self {
        ReconstructionError::Kernel(e)
    }
}

impl From<BoundError> for ReconstructionError {
    fn from(e: BoundError) -> Self {
        ReconstructionError::Bound(e)
    }
}

impl From<ZeroError> for ReconstructionError {
    fn from(e: ZeroError) -> Self {
        ReconstructionError::Zero(e)
    }
}

/// Principal value of `(i/2pi) int_{|z| > Rband^{1/6}} e^{-izt}/z dz`,
/// the kernel multiplying the `1/z` tail coefficient.
///
/// Closed form `(1/pi) (pi/2 - Si(t Rband^{1/6}))` for `t > 0`; the
/// symmetric principal value at `t = 0` cancels to zero.  Satisfies
/// `|value| <= (2/pi) min(1, 1/(t Rband^{1/6}))`.
pub fn pv_tail_kernel(rband: f64, t: f64) -> Complex64 {
    assert!(
        rband > 0.0 && t >= 0.0,
        "tail kernel needs Rband > 0, t >= 0"
    );
    if t == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(
        (FRAC_PI_2 - sine_integral(t * rband.powf(1.0 / 6.0))) / PI,
        0.0,
    )
}

/// Tail kernel at an explicit cut, with the one-sided `t -> 0+` limit
/// at the origin.  The inverted function is supported on `t >= 0`, so
/// its value at the endpoint is the right-hand limit, and using the
/// symmetric principal value there would drop half the jump.
fn tail_weight(cut: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.5
    } else {
        (FRAC_PI_2 - sine_integral(cut * t)) / PI
    }
}

fn invert_window(
    df: &dyn Fn(f64) -> Complex64,
    cut: f64,
    t_grid: &[f64],
    with_tail: bool,
    tail_r: f64,
) -> Result<BoundaryKernelDiff, ReconstructionError> {
    if !(cut > 0.0) || !cut.is_finite() {
        return Err(ReconstructionError::WindowTooSmall { window: cut });
    }
    if t_grid.is_empty() {
        return Err(ReconstructionError::EmptyGrid);
    }
    // Panels narrow enough that the oscillation e^{-izt} stays below a
    // quarter turn per panel at the largest |t| requested.
    let t_scale = t_grid.iter().fold(1.0f64, |m, t| m.max(t.abs()));
    let n_panels = ((2.0 * cut * t_scale / FRAC_PI_2).ceil() as usize).max(4);
    let (nodes, weights) = clenshaw_curtis(16);
    let panel_w = 2.0 * cut / n_panels as f64;
    let mut samples = Vec::with_capacity(n_panels * nodes.len());
    for panel in 0..n_panels {
        let mid = -cut + (panel as f64 + 0.5) * panel_w;
        let half = 0.5 * panel_w;
        for (x, w) in nodes.iter().zip(&weights) {
            let z = mid + half * x;
            samples.push((z, df(z), half * w));
        }
    }

    let mut warnings = Vec::new();
    let mut c0 = Complex64::new(0.0, 0.0);
    if with_tail {
        // df(z) ~ i c0 / z beyond the window; read c0 off both edges.
        let e_plus = -Complex64::i() * cut * df(cut);
        let e_minus = Complex64::i() * cut * df(-cut);
        c0 = 0.5 * (e_plus + e_minus);
        let lo = e_plus.norm().min(e_minus.norm());
        let hi = e_plus.norm().max(e_minus.norm());
        if hi > 3.0 * lo && hi > 1e-10 {
            warnings.push(format!(
                "tail coefficient estimates disagree across the window: {:.3e} vs {:.3e}",
                e_plus.norm(),
                e_minus.norm()
            ));
        }
    }

    let values = t_grid
        .iter()
        .map(|&t| {
            if t >= 2.0 {
                return Complex64::new(0.0, 0.0);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (z, v, w) in &samples {
                acc += v * (-Complex64::i() * *z * t).exp() * *w;
            }
            let mut out = acc / TAU;
            if with_tail {
                out += c0 * tail_weight(cut, t);
            }
            out
        })
        .collect();

    Ok(BoundaryKernelDiff {
        t_grid: t_grid.to_vec(),
        values,
        window: cut,
        tail_r,
        warnings,
    })
}

/// Windowed Fourier inversion of a Jost-function difference:
/// `D(t) = (1/2pi) int_{-Z}^{Z} df(z) e^{-izt} dz` by composite
/// Clenshaw-Curtis panels, plus the explicit `1/z`-tail correction with
/// the tail coefficient estimated from `Z df(+-Z)`.
///
/// Values at `t >= 2` are zero by construction.  A tail coefficient
/// that disagrees between the two window edges by more than a factor of
/// three is reported as a warning, not an error.
pub fn fourier_invert_diff(
    df: &dyn Fn(f64) -> Complex64,
    window: f64,
    t_grid: &[f64],
) -> Result<BoundaryKernelDiff, ReconstructionError> {
    invert_window(df, window, t_grid, true, window.powi(6))
}

/// Splits the inversion at `Rband^{1/6}`: the inner part is the plain
/// windowed integral (no tail term), and the returned envelope
/// `min(1, 1/(t Rband^nu))` is the shape bounding everything outside,
/// with `nu = 1/12` (the `p = 2` exponent).  Constants are fitted by
/// the caller.
pub fn band_split_diff(
    df: &dyn Fn(f64) -> Complex64,
    rband: f64,
    t_grid: &[f64],
) -> Result<(BoundaryKernelDiff, Vec<f64>), ReconstructionError> {
    if !(rband > 0.0) || !rband.is_finite() {
        return Err(ReconstructionError::WindowTooSmall { window: rband });
    }
    let cut = rband.powf(1.0 / 6.0);
    let i_part = invert_window(df, cut, t_grid, false, rband)?;
    let envelope = t_grid
        .iter()
        .map(|&t| {
            if t <= 0.0 {
                1.0
            } else {
                (1.0 / (t * rband.powf(NU_DEFAULT))).min(1.0)
            }
        })
        .collect();
    Ok((i_part, envelope))
}

/// Full inverse pipeline from a zero list and a reference potential.
///
/// Stages: factorize the zeros into a Jost model calibrated to unit
/// targets; factorize the reference's own zeros from the same disc
/// through the identical truncation, so that the finite-window
/// calibration error common to both sides cancels in the difference;
/// invert the Fourier transform of `model - model_ref` over the window
/// `Z = R^{1/6}`; push the boundary row through the reference's inverse
/// kernel; read the estimate off `2 B(0, 2x)`.  A fixed-point loop then
/// grows the full kernel from the boundary row to move the diagonal
/// from `(0, 2x)` to `(x, x)`, re-deriving the unknown potential from
/// the current estimate, for as long as the iteration keeps contracting
/// (at most five passes).  If it ever expands after its first pass, the
/// pipeline reports divergence and falls back to the zeroth-order
/// estimate.
pub fn reconstruct_from_zeros(
    zs_tilde: &ZeroSet,
    q_ref: &Potential,
    p: f64,
    h: f64,
) -> Result<ReconstructionResult, ReconstructionError> {
    let big_r = zs_tilde.radius;
    if !(big_r >= 20.0) {
        return Err(ReconstructionError::RadiusTooSmall { radius: big_r });
    }
    let shape = theorem61_envelope(big_r, 0.0, p)?;

    let model = normalize(zs_tilde, None)?;
    let reference = ForwardJost::new(q_ref.clone());
    // Same disc, same truncation, same unit-target calibration for the
    // reference.  Both models then miss the true functions by the same
    // exterior-zero tail, which drops out of the difference; comparing
    // the truncated model against the exact reference instead would
    // leave that common O(R^{-1/3}) calibration error as a bias
    // swamping the zero-shift signal.
    let ref_zeros = find_zeros(&reference, big_r, REF_ZERO_TOL)?;
    let model_ref = normalize(&ref_zeros, None)?;
    let df = |z: f64| {
        let at = Complex64::new(z, 0.0);
        model.eval(at) - model_ref.eval(at)
    };

    let k_ref = k_kernel(&Potential::zero(), q_ref, h, SERIES_TOL)?;
    let l_ref = l_kernel(&k_ref)?;
    let m = k_ref.order();
    let t_grid: Vec<f64> = (0..=2 * m).map(|j| j as f64 * h).collect();

    let window = big_r.powf(1.0 / 6.0);
    let d = invert_window(&df, window, &t_grid, true, big_r)?;
    let b0 = boundary_b0(&d.values, &l_ref)?;

    let xs: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let est0: Vec<Complex64> = (0..=m).map(|i| 2.0 * b0[2 * i]).collect();

    // Fixed-point refinement: grow B from the boundary row against the
    // current guess for the unknown potential, read the new estimate
    // off the diagonal, and re-derive the guess from it.  The first
    // pass runs with the guess still equal to the reference, so
    // contraction is only judged between successive loop outputs, from
    // the second computed gap onward.
    let mut estimate = est0.clone();
    let mut q_guess = q_ref.clone();
    let mut residuals: Vec<f64> = Vec::new();
    let mut diverged = false;
    let mut last_pass: Option<Vec<Complex64>> = None;
    for _ in 0..REFINE_CAP {
        let grown = b_from_boundary(&b0, q_ref, &q_guess, h, SERIES_TOL)?;
        let next: Vec<Complex64> = (0..=m).map(|i| 2.0 * grown.value(i, i)).collect();
        let mut settled = false;
        if let Some(prev) = &last_pass {
            let gap = prev
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if let Some(&prev_gap) = residuals.last() {
                if gap > prev_gap * (1.0 + 1e-9) + 1e-15 {
                    diverged = true;
                    break;
                }
            }
            residuals.push(gap);
            settled = gap < REFINE_TOL;
        }
        last_pass = Some(next);
        if settled {
            break;
        }
        // q-tilde = q_ref - d/dx estimate, cellwise constant.
        let latest = last_pass.as_ref().expect("just set");
        let pieces: Vec<Piece> = (0..m)
            .map(|i| {
                let slope = (latest[i + 1] - latest[i]) / h;
                let mid = (i as f64 + 0.5) * h;
                Piece {
                    x_lo: i as f64 * h,
                    x_hi: (i + 1) as f64 * h,
                    coeffs: vec![q_ref.eval(mid) - slope],
                }
            })
            .collect();
        q_guess = Potential::from_pieces(pieces).expect("cells are ordered and disjoint");
    }
    if !diverged {
        if let Some(last) = last_pass {
            estimate = last;
        }
    }

    let refinements = residuals;
    let sup_norm = estimate.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(ReconstructionResult {
        xs,
        estimate,
        sup_norm,
        shape,
        big_r,
        epsilon: zs_tilde.epsilon,
        p,
        h,
        window,
        refine_residuals: refinements,
        diverged,
        warnings: d.warnings,
    })
}
