//! Zero location and counting for Jost-function models.
//!
//! Zeros in the upper half-plane are eigenvalues of the underlying
//! operator (z^2 in the discrete spectrum), zeros in the closed lower
//! half-plane are resonances.  Everything here works through the
//! [`JostModel`] log interface, so discs of radius several hundred are
//! handled without overflowing the function values themselves.
//!
//! Winding numbers come from discrete argument continuation with
//! per-step phase change kept below pi/2, refined adaptively and then
//! cross-checked at doubled resolution.  `find_zeros` quadrisects the
//! disc's bounding square, polishes isolated zeros by Newton's method
//! in the logarithmic derivative, and reports unresolvably tight
//! clusters as single zeros with multiplicity.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt::Write as _;
use thiserror::Error;

use crate::jost::JostModel;
use crate::numerics::wrap_angle;

/// A contour sample sitting this far (in log) below the largest |f| in
/// its own arclength window counts as a zero on the contour (relative
/// floor 1e-8).  The window is local because a Jost model legitimately
/// spans e^{2R} orders between the real axis and the bottom of a large
/// circle; only a *local* collapse of |f| indicates a nearby zero.
const PROXIMITY_LOG: f64 = -18.420680743952367; // ln(1e-8)
/// Arclength half-width of the proximity window.  Smooth exponential
/// variation of log|f| along these contours has rate O(1) per unit
/// length, so |f| moves by far less than the 1e-8 floor across it.
const PROXIMITY_WINDOW: f64 = 2.0;
/// Boxes tighter than this holding several zeros become one reported
/// zero with multiplicity.
const CLUSTER_DIAMETER: f64 = 1e-6;
const MAX_DEPTH: u32 = 48;
/// Newton is converged once the step drops below this times max(1,|z|).
const NEWTON_STEP_TOL: f64 = 1e-8;
/// Keep perturbed zeros at least this far from the real axis.
const AXIS_MARGIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZeroError {
    #[error("contour of radius {radius} about {center} passes within the relative floor of a zero (min log|f| = {min_log:.3}, scale log = {max_log:.3})")]
    ContourTooClose {
        center: Complex64,
        radius: f64,
        min_log: f64,
        max_log: f64,
    },
    #[error("winding number failed to settle on an integer near {at} (last estimate {turns_estimate:.4})")]
    NonIntegerWinding { at: Complex64, turns_estimate: f64 },
    #[error("subdivision exceeded depth {MAX_DEPTH} near {at}")]
    SubdivisionDepthExceeded { at: Complex64 },
    #[error("zero accounting mismatch: contour reports {expected}, boxes account for {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("Newton polish failed to converge near {near}")]
    PolishDiverged { near: Complex64 },
    #[error("disc radius {0} is invalid (need finite r, r >= 1 for searches, r > 0 for counts)")]
    BadRadius(f64),
    #[error("tolerance {0} is invalid (need tol >= 1e-12)")]
    BadTolerance(f64),
    #[error("zero sets of sizes {left} and {right} cannot be paired")]
    UnpairedSets { left: usize, right: usize },
    #[error("zero-set text, line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

/// Half-plane classification of a zero of the Jost function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroKind {
    /// Im z > 0: z^2 is an eigenvalue.
    Eigenvalue,
    /// Im z < 0: z^2 is a resonance.
    Resonance,
    /// Exactly on the real axis.
    RealAxis,
}

fn classify(im: f64) -> ZeroKind {
    if im > 0.0 {
        ZeroKind::Eigenvalue
    } else if im < 0.0 {
        ZeroKind::Resonance
    } else {
        ZeroKind::RealAxis
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Zero {
    pub position: Complex64,
    pub multiplicity: usize,
    pub kind: ZeroKind,
}

/// All zeros of a model inside |z - center| < radius, sorted by
/// (Re, Im).  `residual` is the largest |f| over the listed positions
/// (copied from the source set after perturbation); `epsilon` records
/// the perturbation level that produced the set, 0 for exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSet {
    pub zeros: Vec<Zero>,
    pub radius: f64,
    pub center: Complex64,
    pub residual: f64,
    pub epsilon: f64,
}

impl ZeroSet {
    pub fn empty(radius: f64, center: Complex64) -> Self {
        ZeroSet {
            zeros: Vec::new(),
            radius,
            center,
            residual: 0.0,
            epsilon: 0.0,
        }
    }

    pub fn total_multiplicity(&self) -> usize {
        self.zeros.iter().map(|z| z.multiplicity).sum()
    }

    pub fn positions(&self) -> Vec<Complex64> {
        self.zeros.iter().map(|z| z.position).collect()
    }

    /// Text form: header `# zeroset R=<R> center=<re>,<im>`, then one
    /// `<re> <im> <multiplicity>` line per zero.  Round-trips bit-exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "# zeroset R={} center={},{}",
            self.radius, self.center.re, self.center.im
        )
        .unwrap();
        for z in &self.zeros {
            writeln!(s, "{} {} {}", z.position.re, z.position.im, z.multiplicity).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ZeroError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(ZeroError::Malformed {
            line: 1,
            msg: "empty input".into(),
        })?;
        let bad = |line: usize, msg: &str| ZeroError::Malformed {
            line,
            msg: msg.into(),
        };
        let rest = header
            .strip_prefix("# zeroset R=")
            .ok_or_else(|| bad(1, "expected `# zeroset R=<R> center=<re>,<im>`"))?;
        let (r_str, c_str) = rest
            .split_once(" center=")
            .ok_or_else(|| bad(1, "missing ` center=`"))?;
        let radius: f64 = r_str.parse().map_err(|_| bad(1, "bad radius"))?;
        let (cre, cim) = c_str
            .split_once(',')
            .ok_or_else(|| bad(1, "center needs `<re>,<im>`"))?;
        let center = Complex64::new(
            cre.parse().map_err(|_| bad(1, "bad center real part"))?,
            cim.parse()
                .map_err(|_| bad(1, "bad center imaginary part"))?,
        );
        let mut zeros = Vec::new();
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let lno = idx + 1;
            let re: f64 = parts
                .next()
                .ok_or_else(|| bad(lno, "missing real part"))?
                .parse()
                .map_err(|_| bad(lno, "bad real part"))?;
            let im: f64 = parts
                .next()
                .ok_or_else(|| bad(lno, "missing imaginary part"))?
                .parse()
                .map_err(|_| bad(lno, "bad imaginary part"))?;
            let mult: usize = parts
                .next()
                .ok_or_else(|| bad(lno, "missing multiplicity"))?
                .parse()
                .map_err(|_| bad(lno, "bad multiplicity"))?;
            if mult == 0 {
                return Err(bad(lno, "multiplicity must be positive"));
            }
            if parts.next().is_some() {
                return Err(bad(lno, "trailing fields"));
            }
            zeros.push(Zero {
                position: Complex64::new(re, im),
                multiplicity: mult,
                kind: classify(im),
            });
        }
        Ok(ZeroSet {
            zeros,
            radius,
            center,
            residual: 0.0,
            epsilon: 0.0,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct ContourStats {
    turns: i64,
    max_log: f64,
    /// Worst local collapse of |f|: (sample log, window max log),
    /// present when some sample breaches the 1e-8 relative floor
    /// against its own arclength neighborhood.
    dip: Option<(f64, f64)>,
}

/// Discrete argument continuation over a closed contour given by
/// `gamma: [0,1) -> C`.  Refines any step with phase change >= pi/2,
/// then repeats at doubled base resolution until two passes agree.
fn contour_winding<M: JostModel + ?Sized>(
    f: &M,
    gamma: &dyn Fn(f64) -> Complex64,
    arclen: f64,
) -> Result<ContourStats, ZeroError> {
    let mut n = ((8.0 * arclen).ceil() as usize).max(48);
    let mut previous: Option<(i64, Vec<(f64, f64)>)> = None;
    let mut last_estimate = f64::NAN;
    for _ in 0..5 {
        match single_pass(f, gamma, n) {
            Ok((turns_f, samples)) => {
                let t = turns_f / TAU;
                last_estimate = t;
                if (t - t.round()).abs() < 0.05 {
                    let turns = t.round() as i64;
                    if let Some((p_turns, p_samples)) = previous.take() {
                        if p_turns == turns {
                            let mut max_log = f64::NEG_INFINITY;
                            for &(_, re) in p_samples.iter().chain(&samples) {
                                max_log = max_log.max(re);
                            }
                            return Ok(ContourStats {
                                turns,
                                max_log,
                                dip: proximity_dip(&samples, arclen),
                            });
                        }
                    }
                    previous = Some((turns, samples));
                } else {
                    previous = None;
                }
            }
            Err(()) => {
                previous = None;
            }
        }
        n *= 2;
    }
    Err(ZeroError::NonIntegerWinding {
        at: gamma(0.0),
        turns_estimate: last_estimate,
    })
}

/// One adaptive pass; Err(()) means refinement depth ran out, which
/// the caller treats as "try again finer".  On success returns the
/// accumulated phase and every sampled (t, log|f|) pair sorted by t.
fn single_pass<M: JostModel + ?Sized>(
    f: &M,
    gamma: &dyn Fn(f64) -> Complex64,
    n: usize,
) -> Result<(f64, Vec<(f64, f64)>), ()> {
    let logs: Vec<Complex64> = (0..n)
        .map(|k| f.eval_log(gamma(k as f64 / n as f64)))
        .collect();
    let mut total = 0.0;
    let mut samples: Vec<(f64, f64)> = logs
        .iter()
        .enumerate()
        .map(|(k, l)| (k as f64 / n as f64, l.re))
        .collect();
    for k in 0..n {
        let t0 = k as f64 / n as f64;
        let t1 = (k + 1) as f64 / n as f64;
        let l1 = logs[(k + 1) % n];
        refine_segment(f, gamma, t0, t1, logs[k], l1, 0, &mut total, &mut samples)?;
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok((total, samples))
}

#[allow(clippy::too_many_arguments)]
fn refine_segment<M: JostModel + ?Sized>(
    f: &M,
    gamma: &dyn Fn(f64) -> Complex64,
    t0: f64,
    t1: f64,
    l0: Complex64,
    l1: Complex64,
    depth: u32,
    total: &mut f64,
    samples: &mut Vec<(f64, f64)>,
) -> Result<(), ()> {
    let d = wrap_angle(l1.im - l0.im);
    if d.abs() < FRAC_PI_2 {
        *total += d;
        return Ok(());
    }
    if depth >= 30 {
        return Err(());
    }
    let tm = 0.5 * (t0 + t1);
    let lm = f.eval_log(gamma(tm));
    if !lm.im.is_finite() {
        return Err(());
    }
    samples.push((tm, lm.re));
    refine_segment(f, gamma, t0, tm, l0, lm, depth + 1, total, samples)?;
    refine_segment(f, gamma, tm, t1, lm, l1, depth + 1, total, samples)
}

/// Scans a closed contour's samples for a point where |f| collapses
/// 1e-8 below the largest |f| within arclength [`PROXIMITY_WINDOW`] on
/// either side.  Returns the worst offender as (sample, window max).
///
/// Exponential growth across a large contour moves log|f| smoothly and
/// never trips this; a zero within ~1e-8 of the contour cuts a sharp
/// local notch that does.  Window maxima come from a monotonic deque
/// over the circularly extended sample list, so the scan is linear.
fn proximity_dip(samples: &[(f64, f64)], arclen: f64) -> Option<(f64, f64)> {
    let n = samples.len();
    if n < 3 {
        return None;
    }
    let wt = (PROXIMITY_WINDOW / arclen.max(f64::MIN_POSITIVE)).min(0.25);
    let ext: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(t, re)| (t - 1.0, re))
        .chain(samples.iter().copied())
        .chain(samples.iter().map(|&(t, re)| (t + 1.0, re)))
        .collect();
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut hi = 0usize;
    let mut worst: Option<(f64, f64)> = None;
    for i in n..2 * n {
        let t = ext[i].0;
        while hi < ext.len() && ext[hi].0 <= t + wt {
            while let Some(&back) = deque.back() {
                if ext[back].1 <= ext[hi].1 {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(hi);
            hi += 1;
        }
        while let Some(&front) = deque.front() {
            if ext[front].0 < t - wt {
                deque.pop_front();
            } else {
                break;
            }
        }
        let window_max = deque.front().map_or(ext[i].1, |&front| ext[front].1);
        let re = ext[i].1;
        if re <= window_max + PROXIMITY_LOG
            && worst.is_none_or(|(w_re, w_max)| re - window_max < w_re - w_max)
        {
            worst = Some((re, window_max));
        }
    }
    worst
}

fn circle_stats<M: JostModel + ?Sized>(
    f: &M,
    center: Complex64,
    r: f64,
) -> Result<ContourStats, ZeroError> {
    let gamma = move |t: f64| center + Complex64::from_polar(r, TAU * t);
    let stats = contour_winding(f, &gamma, TAU * r)?;
    if let Some((dip_log, window_log)) = stats.dip {
        return Err(ZeroError::ContourTooClose {
            center,
            radius: r,
            min_log: dip_log,
            max_log: window_log,
        });
    }
    Ok(stats)
}

/// Circle winding with the radius nudged outward (three +1e-6 r steps)
/// when the contour runs too close to a zero.  Returns the radius that
/// was actually used.
fn circle_with_nudge<M: JostModel + ?Sized>(
    f: &M,
    center: Complex64,
    r: f64,
) -> Result<(f64, ContourStats), ZeroError> {
    let mut last = ZeroError::BadRadius(r);
    for attempt in 0..=3 {
        let rr = r * (1.0 + 1e-6 * attempt as f64);
        match circle_stats(f, center, rr) {
            Ok(stats) => return Ok((rr, stats)),
            // A zero sitting on the circle shows up either as a local
            // collapse of |f| or as a phase march that never settles;
            // both are cured by the same nudge.
            Err(e @ ZeroError::ContourTooClose { .. }) => last = e,
            Err(e @ ZeroError::NonIntegerWinding { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// Number of zeros (by multiplicity) of `f` strictly inside
/// |z - center| < r, via the argument principle.
pub fn count_zeros<M: JostModel + ?Sized>(
    f: &M,
    center: Complex64,
    r: f64,
) -> Result<usize, ZeroError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(ZeroError::BadRadius(r));
    }
    let (rr, stats) = circle_with_nudge(f, center, r)?;
    if stats.turns < 0 {
        return Err(ZeroError::NonIntegerWinding {
            at: center + Complex64::new(rr, 0.0),
            turns_estimate: stats.turns as f64,
        });
    }
    Ok(stats.turns as usize)
}

/// Winding count over the rectangle [lo.re, hi.re] x [lo.im, hi.im].
/// No automatic retry: a contour through a zero is the caller's cue to
/// move the box edges.
pub fn count_zeros_in_box<M: JostModel + ?Sized>(
    f: &M,
    lo: Complex64,
    hi: Complex64,
) -> Result<usize, ZeroError> {
    let stats = box_stats(f, lo, hi)?;
    if stats.turns < 0 {
        return Err(ZeroError::NonIntegerWinding {
            at: lo,
            turns_estimate: stats.turns as f64,
        });
    }
    Ok(stats.turns as usize)
}

fn box_stats<M: JostModel + ?Sized>(
    f: &M,
    lo: Complex64,
    hi: Complex64,
) -> Result<ContourStats, ZeroError> {
    let w = hi.re - lo.re;
    let h = hi.im - lo.im;
    let per = 2.0 * (w + h);
    let gamma = move |t: f64| {
        let s = t * per;
        if s < w {
            Complex64::new(lo.re + s, lo.im)
        } else if s < w + h {
            Complex64::new(hi.re, lo.im + (s - w))
        } else if s < 2.0 * w + h {
            Complex64::new(hi.re - (s - w - h), hi.im)
        } else {
            Complex64::new(lo.re, hi.im - (s - 2.0 * w - h))
        }
    };
    let stats = contour_winding(f, &gamma, per)?;
    if let Some((dip_log, window_log)) = stats.dip {
        return Err(ZeroError::ContourTooClose {
            center: 0.5 * (lo + hi),
            radius: 0.5 * w.max(h),
            min_log: dip_log,
            max_log: window_log,
        });
    }
    Ok(stats)
}

fn log1p_exp(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Newton iteration z -> z - 1/(log f)'.  Converged when the residual
/// drops under the threshold and the step under NEWTON_STEP_TOL.
fn newton_polish<M: JostModel + ?Sized>(
    f: &M,
    start: Complex64,
    threshold_log: f64,
    step_cap: f64,
) -> Option<Complex64> {
    let mut z = start;
    let mut last_step = f64::INFINITY;
    for _ in 0..60 {
        let lg = f.eval_log(z);
        if lg.re < threshold_log && last_step < NEWTON_STEP_TOL * z.norm().max(1.0) {
            return Some(z);
        }
        let ld = f.log_deriv(z);
        if !ld.re.is_finite() || !ld.im.is_finite() || ld.norm() == 0.0 {
            return None;
        }
        let mut step = -1.0 / ld;
        if step.norm() > step_cap {
            step *= step_cap / step.norm();
        }
        z += step;
        last_step = step.norm();
    }
    None
}

struct SearchCtx<'a, M: ?Sized> {
    f: &'a M,
    threshold_log: f64,
    found: Vec<Zero>,
}

/// Quadrisect `lo..hi`, which is known to hold `count` zeros, jittering
/// the split lines when a child contour lands on a zero.
fn subdivide<M: JostModel + ?Sized>(
    ctx: &mut SearchCtx<'_, M>,
    lo: Complex64,
    hi: Complex64,
    count: usize,
    depth: u32,
) -> Result<(), ZeroError> {
    let mid = 0.5 * (lo + hi);
    let diam = (hi - lo).norm();
    if count == 1 {
        let polished = newton_polish(ctx.f, mid, ctx.threshold_log, diam.max(1e-3));
        if let Some(z) = polished {
            let margin = 0.25 * diam + 1e-9;
            let inside = z.re >= lo.re - margin
                && z.re <= hi.re + margin
                && z.im >= lo.im - margin
                && z.im <= hi.im + margin;
            if inside {
                ctx.found.push(Zero {
                    position: z,
                    multiplicity: 1,
                    kind: classify(z.im),
                });
                return Ok(());
            }
        }
        if diam < CLUSTER_DIAMETER {
            return Err(ZeroError::PolishDiverged { near: mid });
        }
    } else if count >= 2 && diam < CLUSTER_DIAMETER {
        ctx.found.push(Zero {
            position: mid,
            multiplicity: count,
            kind: classify(mid.im),
        });
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(ZeroError::SubdivisionDepthExceeded { at: mid });
    }
    // split with jitter retries so no child edge sits on a zero
    let w = hi.re - lo.re;
    let h = hi.im - lo.im;
    let mut split_err = None;
    for attempt in 0..4 {
        let j = attempt as f64 * 1e-3;
        let cx = mid.re + j * w;
        let cy = mid.im + j * h;
        let children = [
            (lo, Complex64::new(cx, cy)),
            (Complex64::new(cx, lo.im), Complex64::new(hi.re, cy)),
            (Complex64::new(lo.re, cy), Complex64::new(cx, hi.im)),
            (Complex64::new(cx, cy), hi),
        ];
        let mut counts = [0usize; 4];
        let mut ok = true;
        for (i, (clo, chi)) in children.iter().enumerate() {
            match count_zeros_in_box(ctx.f, *clo, *chi) {
                Ok(c) => counts[i] = c,
                Err(e @ ZeroError::ContourTooClose { .. })
                | Err(e @ ZeroError::NonIntegerWinding { .. }) => {
                    split_err = Some(e);
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !ok {
            continue;
        }
        let total: usize = counts.iter().sum();
        if total != count {
            return Err(ZeroError::CountMismatch {
                expected: count,
                found: total,
            });
        }
        for (i, (clo, chi)) in children.iter().enumerate() {
            if counts[i] > 0 {
                subdivide(ctx, *clo, *chi, counts[i], depth + 1)?;
            }
        }
        return Ok(());
    }
    Err(split_err.unwrap_or(ZeroError::SubdivisionDepthExceeded { at: mid }))
}

/// Locate every zero of `f` inside |z| < R (nudged radius reported in
/// the result).  `tol` sets the relative residual target for Newton.
pub fn find_zeros<M: JostModel + ?Sized>(
    f: &M,
    big_r: f64,
    tol: f64,
) -> Result<ZeroSet, ZeroError> {
    if !(big_r >= 1.0) || !big_r.is_finite() {
        return Err(ZeroError::BadRadius(big_r));
    }
    if !(tol >= 1e-12) {
        return Err(ZeroError::BadTolerance(tol));
    }
    let center = Complex64::new(0.0, 0.0);
    let (rr, stats) = circle_with_nudge(f, center, big_r)?;
    if stats.turns < 0 {
        return Err(ZeroError::NonIntegerWinding {
            at: Complex64::new(rr, 0.0),
            turns_estimate: stats.turns as f64,
        });
    }
    let expected = stats.turns as usize;
    if expected == 0 {
        return Ok(ZeroSet::empty(rr, center));
    }
    let threshold_log = tol.ln() + log1p_exp(stats.max_log);
    // bounding square, expanded slightly if its edges hit a zero
    let mut half = rr;
    let mut square = None;
    for _ in 0..4 {
        let lo = Complex64::new(-half, -half);
        let hi = Complex64::new(half, half);
        match count_zeros_in_box(f, lo, hi) {
            Ok(c) => {
                square = Some((lo, hi, c));
                break;
            }
            Err(ZeroError::ContourTooClose { .. }) => half *= 1.0 + 1e-5,
            Err(e) => return Err(e),
        }
    }
    let (lo, hi, in_square) = square.ok_or(ZeroError::ContourTooClose {
        center,
        radius: half,
        min_log: f64::NAN,
        max_log: f64::NAN,
    })?;
    let mut ctx = SearchCtx {
        f,
        threshold_log,
        found: Vec::new(),
    };
    if in_square > 0 {
        subdivide(&mut ctx, lo, hi, in_square, 0)?;
    }
    let mut zeros: Vec<Zero> = ctx
        .found
        .into_iter()
        .filter(|z| z.position.norm() < rr)
        .collect();
    zeros.sort_by(|a, b| {
        a.position
            .re
            .total_cmp(&b.position.re)
            .then(a.position.im.total_cmp(&b.position.im))
    });
    let total: usize = zeros.iter().map(|z| z.multiplicity).sum();
    if total != expected {
        return Err(ZeroError::CountMismatch {
            expected,
            found: total,
        });
    }
    let residual = zeros
        .iter()
        .map(|z| f.eval_log(z.position).re.exp())
        .fold(0.0, f64::max);
    Ok(ZeroSet {
        zeros,
        radius: rr,
        center,
        residual,
        epsilon: 0.0,
    })
}

/// Cumulative zero counts |z - center| <= r for each radius in
/// ascending order.
pub fn counting_function(zs: &ZeroSet, center: Complex64, radii: &[f64]) -> Vec<usize> {
    assert!(
        radii.windows(2).all(|w| w[0] <= w[1]),
        "radii must be ascending"
    );
    radii
        .iter()
        .map(|&r| {
            zs.zeros
                .iter()
                .filter(|z| (z.position - center).norm() <= r)
                .map(|z| z.multiplicity)
                .sum()
        })
        .collect()
}

/// Displace every zero by an independent uniform draw from the closed
/// disc of radius `epsilon`, deterministically in `seed`.  A draw that
/// would bring a zero within 1e-3 of the real axis (or across it) is
/// reflected about the margin line on the zero's own side, which never
/// increases the displacement.
pub fn perturb_zeros(zs: &ZeroSet, epsilon: f64, seed: u64) -> ZeroSet {
    assert!(epsilon >= 0.0, "perturbation level must be nonnegative");
    if epsilon == 0.0 {
        let mut out = zs.clone();
        out.epsilon = 0.0;
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zeros = zs
        .zeros
        .iter()
        .map(|z| {
            let u1: f64 = rng.gen();
            let u2: f64 = rng.gen();
            let d = Complex64::from_polar(epsilon * u1.sqrt(), TAU * u2);
            let mut p = z.position + d;
            let side = if z.position.im > 0.0 {
                1.0
            } else if z.position.im < 0.0 {
                -1.0
            } else {
                0.0
            };
            if side != 0.0 {
                let m = AXIS_MARGIN.min(z.position.im.abs());
                if side * p.im < m {
                    // reflect across Im = side*m; |new - old| <= |p - old|
                    p = Complex64::new(p.re, 2.0 * side * m - p.im);
                }
            }
            Zero {
                position: p,
                multiplicity: z.multiplicity,
                kind: classify(p.im),
            }
        })
        .collect();
    ZeroSet {
        zeros,
        radius: zs.radius,
        center: zs.center,
        residual: zs.residual,
        epsilon,
    }
}

/// Match the entries of two equally sized zero sets by minimal total
/// displacement; `result[i]` is the index in `b` paired with `a[i]`.
pub fn pair_zeros(a: &ZeroSet, b: &ZeroSet) -> Result<Vec<usize>, ZeroError> {
    if a.zeros.len() != b.zeros.len() {
        return Err(ZeroError::UnpairedSets {
            left: a.zeros.len(),
            right: b.zeros.len(),
        });
    }
    let n = a.zeros.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let cost: Vec<Vec<f64>> = a
        .zeros
        .iter()
        .map(|za| {
            b.zeros
                .iter()
                .map(|zb| (za.position - zb.position).norm())
                .collect()
        })
        .collect();
    Ok(min_cost_assignment(&cost))
}

/// Hungarian algorithm with potentials (shortest augmenting paths),
/// O(n^3); cost is a square matrix.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    // p[j] = row matched to column j (1-based; 0 = free)
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            result[p[j] - 1] = j - 1;
        }
    }
    result
}
