//! Forward problem: the outgoing solution of -y'' + q y = z^2 y that
//! equals e^{izx} for x >= 1, evaluated by backward propagation.
//!
//! Propagation runs in the reduced gauge m(z,x) = psi(z,x) e^{-izx},
//! which starts from the exact data (m, m') = (1, 0) at x = 1 and makes
//! the free evolution the identity.  Constant segments use exact 2x2
//! transfer matrices written in exponential-split form,
//!   m(a)  = (sigma/k) e^{i delta l}/2 m(b) - (delta/k) e^{i sigma l}/2 m(b) - ...,
//! with delta = z - k, sigma = z + k, k^2 = z^2 - c: the growing
//! exponential is always paired with the O(c/z^2) coefficient, so deep
//! in the lower half-plane no catastrophic cancellation occurs (the
//! naive cosh-minus-sinh form loses all digits already at |Im z| ~ 20).
//! The z-derivative rides along through the differentiated matrices.
//! Polynomial segments fall back to an adaptive Dormand-Prince 5(4)
//! integrator on the reduced system m'' = q m - 2iz m'.
//!
//! The state is renormalized whenever it grows past 1e100, with the
//! discarded magnitude accumulated in a log offset; `eval_log` exposes
//! log psi directly so contours of radius several hundred stay finite.

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{cosc, sinxc, sinxc_prime};
use crate::potential::Potential;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JostError {
    #[error("non-finite spectral parameter z = {0}")]
    NonFinite(Complex64),
    #[error("step size underflow near x = {x} (|z| = {z_abs})")]
    IntegratorStall { x: f64, z_abs: f64 },
    #[error("batch element {index}: {source}")]
    BatchElement {
        index: usize,
        #[source]
        source: Box<JostError>,
    },
}

/// Jost solution data at one (z, x): value, x-derivative, z-derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JostEvaluation {
    pub z: Complex64,
    pub x: f64,
    pub value: Complex64,
    pub dx_value: Complex64,
    pub dz_value: Complex64,
}

/// Anything that can evaluate a Jost-function candidate on the plane.
///
/// `eval_log` must stay finite wherever log|psi| does, even when psi
/// itself overflows f64 range; `log_deriv` is psi'/psi.
pub trait JostModel: Sync {
    fn eval(&self, z: Complex64) -> Complex64;
    /// log psi with imaginary part in (-pi, pi].
    fn eval_log(&self, z: Complex64) -> Complex64;
    /// Logarithmic derivative d/dz log psi.
    fn log_deriv(&self, z: Complex64) -> Complex64;

    /// Value together with its z-derivative.
    fn eval_deriv(&self, z: Complex64) -> (Complex64, Complex64) {
        let v = self.eval(z);
        (v, v * self.log_deriv(z))
    }
}

/// Scaled reduced-gauge state: (m, m', dm/dz, dm'/dz) times
/// exp(log_offset), where m = psi e^{-izx}.
#[derive(Debug, Clone, Copy)]
struct State {
    u: Complex64,
    du: Complex64,
    v: Complex64,
    dv: Complex64,
    log_offset: f64,
}

impl State {
    fn renormalize(&mut self) {
        let m = self
            .u
            .norm()
            .max(self.du.norm())
            .max(self.v.norm())
            .max(self.dv.norm());
        if m > 1e100 || (m < 1e-100 && m > 0.0) {
            let s = 1.0 / m;
            self.u *= s;
            self.du *= s;
            self.v *= s;
            self.dv *= s;
            self.log_offset += m.ln();
        }
    }
}

/// Backward transfer across a constant-potential segment of length
/// `len` ending where the state currently sits.  Long segments at
/// large |z| are cut so a single matrix application never grows the
/// state past f64 range (growth is at most e^{2 |Im z| len}).
fn constant_step(st: &mut State, z: Complex64, c: Complex64, len: f64) {
    let cap = 50.0 / (1.0 + z.norm());
    if len > cap {
        let n = (len / cap).ceil() as usize;
        let sub = len / n as f64;
        for _ in 0..n {
            constant_substep(st, z, c, sub);
        }
    } else {
        constant_substep(st, z, c, len);
    }
}

fn constant_substep(st: &mut State, z: Complex64, c: Complex64, len: f64) {
    let k2 = z * z - c;
    let k = k2.sqrt();
    let l = len;
    let (m11, m12, m21, m22, d11, d12, d21, d22);
    if (k * l).norm() < 1e-3 {
        // near the turning point z^2 = c the split form divides by k;
        // the even-function formulas are stable there (|z| is moderate)
        let w = k2 * l * l;
        let big_c = cosc(w);
        let big_s = l * sinxc(w);
        let dw = 2.0 * z * l * l;
        let d_big_c = -0.5 * sinxc(w) * dw;
        let d_big_s = l * sinxc_prime(w) * dw;
        let i = Complex64::new(0.0, 1.0);
        let e = (i * z * l).exp();
        m11 = e * (big_c - i * z * big_s);
        m12 = -e * big_s;
        m21 = -c * e * big_s;
        m22 = e * (big_c + i * z * big_s);
        let phase = i * l;
        d11 = e * (phase * (big_c - i * z * big_s) + d_big_c - i * big_s - i * z * d_big_s);
        d12 = -e * (phase * big_s + d_big_s);
        d21 = c * d12;
        d22 = e * (phase * (big_c + i * z * big_s) + d_big_c + i * big_s + i * z * d_big_s);
    } else {
        // delta = z - k and sigma = z + k with delta*sigma = c; take the
        // larger sum directly and the smaller via c to dodge cancellation
        let s_plus = z + k;
        let s_minus = z - k;
        let (delta, sigma) = if s_plus.norm() >= s_minus.norm() {
            (c / s_plus, s_plus)
        } else {
            (s_minus, c / s_minus)
        };
        let i = Complex64::new(0.0, 1.0);
        let a = (i * delta * l).exp();
        let b = (i * sigma * l).exp();
        let dk = delta / k;
        let sk = sigma / k;
        m11 = 0.5 * (sk * a - dk * b);
        m12 = (a - b) / (2.0 * i * k);
        m21 = c * m12;
        m22 = 0.5 * (sk * b - dk * a);
        // d(delta/k)/dz = d(sigma/k)/dz = -c/k^3; A' = -il (delta/k) A,
        // B' = il (sigma/k) B
        let g = -c / (k * k * k);
        d11 = 0.5 * (g * (a - b) - i * l * (c / k2) * (a + b));
        d12 = -l * (delta * a + sigma * b) / (2.0 * k2) + i * z * (a - b) / (2.0 * k2 * k);
        d21 = c * d12;
        d22 = 0.5 * (g * (b - a) + i * l * (delta * delta * a + sigma * sigma * b) / k2);
    }

    let (u, du) = (st.u, st.du);
    let (v, dv) = (st.v, st.dv);
    st.u = m11 * u + m12 * du;
    st.du = m21 * u + m22 * du;
    st.v = m11 * v + m12 * dv + d11 * u + d12 * du;
    st.dv = m21 * v + m22 * dv + d21 * u + d22 * du;
    st.renormalize();
}

/// Dormand-Prince 5(4) backward sweep across a polynomial segment.
fn polynomial_sweep(
    st: &mut State,
    z: Complex64,
    q: &Potential,
    b: f64,
    a: f64,
) -> Result<(), JostError> {
    const RTOL: f64 = 1e-11;
    const ATOL: f64 = 1e-13;
    // reduced gauge: m'' = q m - 2iz m', plus its z-variation
    let two_iz = Complex64::new(0.0, 2.0) * z;
    let deriv = |x: f64, y: &[Complex64; 4]| -> [Complex64; 4] {
        let qx = q.eval(x);
        [
            y[1],
            qx * y[0] - two_iz * y[1],
            y[3],
            qx * y[2] - two_iz * y[3] - Complex64::new(0.0, 2.0) * y[1],
        ]
    };
    let mut x = b;
    let mut y = [st.u, st.du, st.v, st.dv];
    let span = b - a;
    let mut h = -(span.min(0.1 / (1.0 + z.norm()))).max(1e-12);
    let mut steps = 0u32;
    while x > a + 1e-14 {
        if x + h < a {
            h = a - x;
        }
        let (y5, err_est) = dp54_step(&deriv, x, &y, h);
        let scale: f64 = y.iter().map(|c| c.norm()).fold(ATOL / RTOL, f64::max);
        let err = err_est / (ATOL + RTOL * scale);
        if err <= 1.0 {
            x += h;
            y = y5;
            let m = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if m > 1e100 || (m < 1e-100 && m > 0.0) {
                let s = 1.0 / m;
                for c in y.iter_mut() {
                    *c *= s;
                }
                st.log_offset += m.ln();
            }
        }
        let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        h *= factor;
        if h.abs() < 1e-14 {
            return Err(JostError::IntegratorStall { x, z_abs: z.norm() });
        }
        steps += 1;
        if steps > 2_000_000 {
            return Err(JostError::IntegratorStall { x, z_abs: z.norm() });
        }
    }
    st.u = y[0];
    st.du = y[1];
    st.v = y[2];
    st.dv = y[3];
    Ok(())
}

/// One Dormand-Prince 5(4) step; returns the 5th-order solution and an
/// error-estimate norm.
fn dp54_step<F: Fn(f64, &[Complex64; 4]) -> [Complex64; 4]>(
    f: &F,
    x: f64,
    y: &[Complex64; 4],
    h: f64,
) -> ([Complex64; 4], f64) {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const E: [f64; 7] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];
    let mut k: [[Complex64; 4]; 7] = [[Complex64::new(0.0, 0.0); 4]; 7];
    k[0] = f(x, y);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for i in 0..4 {
                    ys[i] += kj[i] * (h * a);
                }
            }
        }
        k[s] = f(x + C[s] * h, &ys);
    }
    // stage 7 already evaluates at the 5th-order solution point
    let mut y5 = *y;
    for (j, kj) in k.iter().enumerate().take(6) {
        let a = A[6][j];
        if a != 0.0 {
            for i in 0..4 {
                y5[i] += kj[i] * (h * a);
            }
        }
    }
    let mut err = 0.0f64;
    for i in 0..4 {
        let mut e = Complex64::new(0.0, 0.0);
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                e += kj[i] * (h * E[j]);
            }
        }
        err = err.max(e.norm());
    }
    (y5, err)
}

/// Propagate the full scaled state from x = 1 down to `x` (< 1).
fn propagate(q: &Potential, z: Complex64, x: f64) -> Result<State, JostError> {
    // m = psi e^{-izx} is identically 1 for x >= 1, in z as well
    let mut st = State {
        u: Complex64::new(1.0, 0.0),
        du: Complex64::new(0.0, 0.0),
        v: Complex64::new(0.0, 0.0),
        dv: Complex64::new(0.0, 0.0),
        log_offset: 0.0,
    };
    // walk segments of [x, 1] delimited by piece edges, from the top down
    let mut cuts: Vec<f64> = q
        .breakpoints()
        .into_iter()
        .filter(|&b| b > x + 1e-15 && b < 1.0 - 1e-15)
        .collect();
    cuts.push(x);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    for w in cuts.windows(2).rev() {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let piece = q.pieces().iter().find(|p| p.x_lo <= mid && mid < p.x_hi);
        match piece {
            None => constant_step(&mut st, z, Complex64::new(0.0, 0.0), b - a),
            Some(p) if p.coeffs.len() == 1 || p.coeffs[1..].iter().all(|c| c.norm() == 0.0) => {
                constant_step(&mut st, z, p.coeffs[0], b - a)
            }
            Some(_) => polynomial_sweep(&mut st, z, q, b, a)?,
        }
    }
    Ok(st)
}

/// Evaluate the Jost solution and its derivatives at (z, x).
pub fn jost_eval(q: &Potential, z: Complex64, x: f64) -> Result<JostEvaluation, JostError> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(JostError::NonFinite(z));
    }
    let i = Complex64::new(0.0, 1.0);
    if x >= 1.0 {
        let e = (i * z * x).exp();
        return Ok(JostEvaluation {
            z,
            x,
            value: e,
            dx_value: i * z * e,
            dz_value: i * x * e,
        });
    }
    let st = propagate(q, z, x)?;
    // psi = e^{izx} m, psi' = e^{izx} (iz m + m'), d_z psi = e^{izx} (ix m + dm/dz)
    let e = (i * z * x).exp() * st.log_offset.exp();
    Ok(JostEvaluation {
        z,
        x,
        value: st.u * e,
        dx_value: (i * z * st.u + st.du) * e,
        dz_value: (i * x * st.u + st.v) * e,
    })
}

/// The Jost function psi(z) = psi(z, 0).
pub fn jost_function(q: &Potential, z: Complex64) -> Result<Complex64, JostError> {
    Ok(jost_eval(q, z, 0.0)?.value)
}

/// Element-wise Jost function over a spectral grid; order-preserving.
pub fn batch_jost(q: &Potential, zs: &[Complex64]) -> Result<Vec<Complex64>, JostError> {
    zs.iter()
        .enumerate()
        .map(|(index, &z)| {
            jost_function(q, z).map_err(|e| JostError::BatchElement {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Jost function of a concrete potential, as a reusable model.
#[derive(Debug, Clone)]
pub struct ForwardJost {
    q: Potential,
}

impl ForwardJost {
    pub fn new(q: Potential) -> Self {
        ForwardJost { q }
    }

    pub fn potential(&self) -> &Potential {
        &self.q
    }

    fn state_at_origin(&self, z: Complex64) -> State {
        propagate(&self.q, z, 0.0).unwrap_or(State {
            u: Complex64::new(f64::NAN, 0.0),
            du: Complex64::new(f64::NAN, 0.0),
            v: Complex64::new(f64::NAN, 0.0),
            dv: Complex64::new(f64::NAN, 0.0),
            log_offset: 0.0,
        })
    }
}

impl JostModel for ForwardJost {
    // at x = 0 the gauge factor e^{izx} is 1: psi(z) = m, d_z psi = dm/dz
    fn eval(&self, z: Complex64) -> Complex64 {
        let st = self.state_at_origin(z);
        st.u * st.log_offset.exp()
    }

    fn eval_log(&self, z: Complex64) -> Complex64 {
        let st = self.state_at_origin(z);
        let l = st.u.ln();
        Complex64::new(l.re + st.log_offset, l.im)
    }

    fn log_deriv(&self, z: Complex64) -> Complex64 {
        let st = self.state_at_origin(z);
        st.v / st.u
    }

    fn eval_deriv(&self, z: Complex64) -> (Complex64, Complex64) {
        let st = self.state_at_origin(z);
        let scale = st.log_offset.exp();
        (st.u * scale, st.v * scale)
    }
}
