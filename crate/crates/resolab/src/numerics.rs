//! Shared numerical kernels: branch-free even functions for transfer
//! matrices, the sine integral, Clenshaw-Curtis panels, and adaptive
//! Simpson quadrature.

use num_complex::Complex64;

/// cos(sqrt(w)) as an entire, even function of sqrt(w).
///
/// Branch-free: both square roots give the same value. Near w = 0 the
/// direct form loses nothing, but we switch to the Taylor series for
/// |w| < 1e-4 so the derivative companions below stay consistent.
pub fn cosc(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        // 1 - w/2 + w^2/24 - w^3/720 + w^4/40320
        let mut acc = Complex64::new(1.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 1..=4 {
            term *= -w / ((2 * k - 1) as f64 * (2 * k) as f64);
            acc += term;
        }
        acc
    } else {
        w.sqrt().cos()
    }
}

/// sin(sqrt(w))/sqrt(w), entire and even in sqrt(w); value 1 at w = 0.
pub fn sinxc(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        // 1 - w/6 + w^2/120 - w^3/5040 + w^4/362880
        let mut acc = Complex64::new(1.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 1..=4 {
            term *= -w / ((2 * k) as f64 * (2 * k + 1) as f64);
            acc += term;
        }
        acc
    } else {
        let s = w.sqrt();
        s.sin() / s
    }
}

/// d/dw [sin(sqrt w)/sqrt w] = (cos(sqrt w) - sin(sqrt w)/sqrt w) / (2w).
pub fn sinxc_prime(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        // -1/6 + w/60 - w^2/1680 + w^3/90720
        Complex64::new(-1.0 / 6.0, 0.0) + w * (1.0 / 60.0) - w * w * (1.0 / 1680.0)
            + w * w * w * (1.0 / 90720.0)
    } else {
        (cosc(w) - sinxc(w)) / (2.0 * w)
    }
}

/// Sine integral Si(x) = int_0^x sin(u)/u du for real x.
///
/// Power series for |x| <= 2, Lentz continued fraction for the
/// auxiliary complex exponential integral beyond; accurate to ~1e-15.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x == 0.0 {
        return 0.0;
    }
    if x <= 2.0 {
        // sum (-1)^k x^(2k+1) / ((2k+1)(2k+1)!)
        let mut sum = x;
        let mut term = x;
        let mut k = 1u32;
        loop {
            let tk = 2 * k;
            term *= -x * x / ((tk as f64) * (tk as f64 + 1.0));
            let add = term / (tk as f64 + 1.0);
            sum += add;
            if add.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
            k += 1;
            if k > 60 {
                break;
            }
        }
        return sum;
    }
    // Lentz continued fraction for E1(ix); then
    // Ci + i(Si - pi/2) = -E1(ix) with principal values, so
    // Si(x) = pi/2 - Im(E1(ix)) ... tracked via the cos/sin form below.
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1e308, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut i = 1u32;
    loop {
        let a = -((i * i) as f64);
        b += Complex64::new(2.0, 0.0);
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - Complex64::new(1.0, 0.0)).norm() < 1e-16 {
            break;
        }
        i += 1;
        if i > 200 {
            break;
        }
    }
    h *= Complex64::new(x.cos(), -x.sin());
    // h = f(x) - i g(x) pairing: Si = pi/2 + Im(h)... sign fixed by test
    std::f64::consts::FRAC_PI_2 + h.im
}

/// Clenshaw-Curtis nodes and weights on [-1, 1] with n+1 points
/// (n even). Exact for polynomials of degree <= n.
pub fn clenshaw_curtis(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2 && n % 2 == 0, "panel order must be even and >= 2");
    let nf = n as f64;
    let nodes: Vec<f64> = (0..=n)
        .map(|k| (k as f64 * std::f64::consts::PI / nf).cos())
        .collect();
    let mut weights = vec![0.0; n + 1];
    for (k, w) in weights.iter_mut().enumerate() {
        let kf = k as f64;
        let mut sum = 1.0;
        for j in 1..=n / 2 {
            let bj = if j == n / 2 { 1.0 } else { 2.0 };
            sum -= bj / ((4 * j * j - 1) as f64)
                * (2.0 * j as f64 * kf * std::f64::consts::PI / nf).cos();
        }
        let ck = if k == 0 || k == n { 1.0 } else { 2.0 };
        *w = ck * sum / nf;
    }
    (nodes, weights)
}

/// Adaptive Simpson quadrature of a real integrand to absolute
/// tolerance `tol` on [a, b].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth >= 50 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth + 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth + 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 0)
}

/// Complex-valued adaptive Simpson built from the real routine.
pub fn adaptive_simpson_complex<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Complex64 {
    let re = adaptive_simpson(&|x| f(x).re, a, b, tol);
    let im = adaptive_simpson(&|x| f(x).im, a, b, tol);
    Complex64::new(re, im)
}

/// Wrap an angle difference into (-pi, pi].
pub fn wrap_angle(d: f64) -> f64 {
    let mut d = d % (2.0 * std::f64::consts::PI);
    if d > std::f64::consts::PI {
        d -= 2.0 * std::f64::consts::PI;
    } else if d <= -std::f64::consts::PI {
        d += 2.0 * std::f64::consts::PI;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_functions_match_direct_evaluation() {
        for &(re, im) in &[
            (2.0, 0.5),
            (-3.0, 1.0),
            (0.5, -2.0),
            (9.0, 0.0),
            (-25.0, 0.0),
        ] {
            let w = Complex64::new(re, im);
            let s = w.sqrt();
            assert!((cosc(w) - s.cos()).norm() < 1e-13 * s.cos().norm().max(1.0));
            assert!((sinxc(w) - s.sin() / s).norm() < 1e-13);
        }
    }

    #[test]
    fn even_functions_taylor_branch_is_continuous() {
        // straddle the 1e-4 threshold; values must agree to ~1e-15
        for &r in &[0.99e-4, 1.01e-4] {
            let w = Complex64::new(r, r * 0.3);
            let s = w.sqrt();
            assert!((cosc(w) - s.cos()).norm() < 1e-15);
            assert!((sinxc(w) - s.sin() / s).norm() < 1e-15);
        }
    }

    #[test]
    fn sinxc_prime_matches_difference_quotient() {
        for &(re, im) in &[(1.5, 0.2), (-4.0, 1.0), (1e-5, 0.0), (0.0, 2e-5)] {
            let w = Complex64::new(re, im);
            let h = Complex64::new(1e-6, 0.0);
            let fd = (sinxc(w + h) - sinxc(w - h)) / (2.0 * h);
            assert!(
                (sinxc_prime(w) - fd).norm() < 1e-7,
                "w = {w}, got {} vs {}",
                sinxc_prime(w),
                fd
            );
        }
    }

    #[test]
    fn sine_integral_reference_values() {
        // frozen from mpmath: Si(1), Si(10), plus odd symmetry and
        // the large-argument limit pi/2
        assert!((sine_integral(1.0) - 0.94608307036718301494).abs() < 1e-14);
        assert!((sine_integral(10.0) - 1.6583475942188740493).abs() < 1e-13);
        assert!((sine_integral(25.13274) - 1.5311312849906957814).abs() < 1e-12);
        assert!((sine_integral(-10.0) + sine_integral(10.0)).abs() < 1e-15);
        assert!((sine_integral(1e6) - std::f64::consts::FRAC_PI_2).abs() < 2e-6);
    }

    #[test]
    fn clenshaw_curtis_integrates_polynomials_exactly() {
        let (nodes, weights) = clenshaw_curtis(16);
        for deg in 0..=16 {
            let exact = if deg % 2 == 0 {
                2.0 / (deg as f64 + 1.0)
            } else {
                0.0
            };
            let got: f64 = nodes
                .iter()
                .zip(&weights)
                .map(|(x, w)| w * x.powi(deg))
                .sum();
            assert!(
                (got - exact).abs() < 1e-13,
                "degree {deg}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn clenshaw_curtis_oscillatory_panel() {
        // int_{-1}^{1} e^{ix} dx = 2 sin 1, frozen from mpmath
        let (nodes, weights) = clenshaw_curtis(16);
        let got: Complex64 = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| Complex64::new(0.0, *x).exp() * *w)
            .sum();
        assert!((got.re - 1.6829419696157930133).abs() < 1e-13);
        assert!(got.im.abs() < 1e-14);
    }

    #[test]
    fn adaptive_simpson_smooth_and_kinked() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-11);
        // |x - 0.3| has a kink; answer 0.3^2/2 + 0.7^2/2
        let v = adaptive_simpson(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert!((v - 0.29).abs() < 1e-10);
    }
}
