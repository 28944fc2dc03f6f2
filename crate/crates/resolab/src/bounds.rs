//! Closed-form growth constants and error envelopes.
//!
//! Every explicit constant or envelope the analysis provides in closed
//! form lives here: the modulus bound `kappa` for a Jost function built
//! from an integrable potential, the Jensen-type zero-counting bound,
//! and the reconstruction error envelopes in the disc radius `R`, the
//! zero perturbation `epsilon`, and the integrability exponent `p`.
//! Envelopes carry only the shape; the multiplicative constants are
//! existential and must be fitted against measurements with
//! [`fit_constant`], never hardcoded.

use std::f64::consts::E;
use std::fmt;

/// Failures from envelope preconditions or degenerate fits.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundError {
    /// The counting bound is only proved for `rho >= 2*kappa`.
    RhoBelowTwiceKappa { rho: f64, kappa: f64 },
    /// Perturbation envelopes require `epsilon` in `[0, 3/4)`.
    EpsilonOutOfRange { epsilon: f64 },
    /// The integrability exponent must lie in `(1, 2]`.
    ExponentOutOfRange { p: f64 },
    /// The potential budget (an L1 norm) cannot be negative.
    BudgetNegative { q: f64 },
    /// A least-squares fit needs at least three samples.
    TooFewPairs { got: usize },
    /// Envelope shapes must be strictly positive to fit against.
    NonPositiveShape { index: usize },
}

impl fmt::Display for BoundError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundError::RhoBelowTwiceKappa { rho, kappa } => {
                write!(
                    f,
                    "counting bound needs rho >= 2*kappa; got rho = {rho}, kappa = {kappa}"
                )
            }
            BoundError::EpsilonOutOfRange { epsilon } => {
                write!(f, "perturbation level must lie in [0, 3/4); got {epsilon}")
            }
            BoundError::ExponentOutOfRange { p } => {
                write!(f, "integrability exponent must lie in (1, 2]; got {p}")
            }
            BoundError::BudgetNegative { q } => {
                write!(f, "potential budget is an L1 norm and cannot be {q}")
            }
            BoundError::TooFewPairs { got } => {
                write!(
                    f,
                    "constant fit needs at least 3 (shape, empirical) pairs; got {got}"
                )
            }
            BoundError::NonPositiveShape { index } => {
                write!(
                    f,
                    "envelope shape at index {index} is not strictly positive"
                )
            }
        }
    }
}

impl std::error::Error for BoundError {}

/// The parameter bundle the envelopes are phrased in.
///
/// `nu` and `gamma` are derived from `p`; `kappa` from the budget `q_l1`;
/// `rho` defaults to `max(2*kappa, R^{1/3})`, the balance point the
/// counting estimates are tuned for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    /// L1 norm of the potential.
    pub q_l1: f64,
    /// Lp norm of the potential.
    pub q_p: f64,
    /// Integrability exponent in (1, 2].
    pub p: f64,
    /// Modulus bound for the associated Jost function.
    pub kappa: f64,
    /// Counting-disc height parameter, at least `2*kappa`.
    pub rho: f64,
    /// Reconstruction rate exponent, `(p-1)/(6p)`.
    pub nu: f64,
    /// Band-splitting exponent, `(p-1)/p = 6*nu`.
    pub gamma: f64,
    /// Zero-search disc radius.
    pub big_r: f64,
    /// Zero perturbation level in [0, 3/4).
    pub epsilon: f64,
}

impl BoundParams {
    pub fn new(q_l1: f64, q_p: f64, p: f64, big_r: f64, epsilon: f64) -> Result<Self, BoundError> {
        if !(q_l1 >= 0.0) {
            return Err(BoundError::BudgetNegative { q: q_l1 });
        }
        if !(p > 1.0 && p <= 2.0) {
            return Err(BoundError::ExponentOutOfRange { p });
        }
        if !(0.0..0.75).contains(&epsilon) {
            return Err(BoundError::EpsilonOutOfRange { epsilon });
        }
        let kappa = kappa(q_l1);
        let gamma = (p - 1.0) / p;
        Ok(BoundParams {
            q_l1,
            q_p,
            p,
            kappa,
            rho: (2.0 * kappa).max(big_r.cbrt()),
            nu: gamma / 6.0,
            gamma,
            big_r,
            epsilon,
        })
    }
}

/// Modulus bound for the Jost function of a potential with L1 norm `q`:
/// `kappa = 1 + 2q e^{2q}`.
///
/// Dominates `|psi(z)|` for real `z`, `|psi(z) - 1|` against `kappa/|z|`
/// decay, and the growth `kappa e^{2|Im z|}` below the axis, all at
/// once.  Free potential gives exactly 1.
pub fn kappa(q: f64) -> f64 {
    assert!(q >= 0.0, "L1 budget cannot be negative");
    1.0 + 2.0 * q * (2.0 * q).exp()
}

/// Jensen-type bound on the number of zeros in the disc of radius `r`
/// about `3i*rho`: `N(r) <= log(2*kappa) + 6*rho + 2e*r`.
///
/// Proved only for `rho >= 2*kappa`; anything less is rejected.
pub fn jensen_bound(rho: f64, kappa: f64, r: f64) -> Result<f64, BoundError> {
    if !(rho >= 2.0 * kappa) {
        return Err(BoundError::RhoBelowTwiceKappa { rho, kappa });
    }
    Ok((2.0 * kappa).ln() + 6.0 * rho + 2.0 * E * r)
}

/// Decay shape of the zero-truncation error in the disc radius:
/// `R^{-1/3}`.  Shape only; the constant in front is fitted.
pub fn theorem31_envelope(big_r: f64) -> f64 {
    assert!(big_r >= E, "envelope stated for R >= e");
    big_r.powf(-1.0 / 3.0)
}

/// Reconstruction error envelope under zero perturbation: the sum of
/// the approximation term
/// `(log R)^{(2p-2)/(2p-1)} R^{-(p-1)^2/(6p(2p-1))}`
/// and the perturbation term `eps R^{1/6} log(R) exp(17e eps R^{1/6})`.
///
/// At `eps = 0` only the approximation term survives.  Shape only.
pub fn theorem61_envelope(big_r: f64, epsilon: f64, p: f64) -> Result<f64, BoundError> {
    assert!(big_r >= E, "envelope stated for R >= e");
    if !(p > 1.0 && p <= 2.0) {
        return Err(BoundError::ExponentOutOfRange { p });
    }
    if !(0.0..0.75).contains(&epsilon) {
        return Err(BoundError::EpsilonOutOfRange { epsilon });
    }
    let log_r = big_r.ln();
    let approx = log_r.powf((2.0 * p - 2.0) / (2.0 * p - 1.0))
        * big_r.powf(-(p - 1.0) * (p - 1.0) / (6.0 * p * (2.0 * p - 1.0)));
    let root6 = big_r.powf(1.0 / 6.0);
    let perturb = epsilon * root6 * log_r * (17.0 * E * epsilon * root6).exp();
    Ok(approx + perturb)
}

/// Least-squares scale `C` matching measurements to an envelope shape:
/// minimizes `sum (empirical_i - C * shape_i)^2`, clamped at zero.
///
/// Returns the fitted constant and the relative fit residual
/// `||empirical - C*shape|| / ||empirical||` (zero when the data is
/// identically zero).
pub fn fit_constant(pairs: &[(f64, f64)]) -> Result<(f64, f64), BoundError> {
    if pairs.len() < 3 {
        return Err(BoundError::TooFewPairs { got: pairs.len() });
    }
    let mut cross = 0.0;
    let mut shape_sq = 0.0;
    let mut emp_sq = 0.0;
    for (index, &(shape, empirical)) in pairs.iter().enumerate() {
        if !(shape > 0.0) {
            return Err(BoundError::NonPositiveShape { index });
        }
        cross += shape * empirical;
        shape_sq += shape * shape;
        emp_sq += empirical * empirical;
    }
    let c = (cross / shape_sq).max(0.0);
    let residual_sq: f64 = pairs
        .iter()
        .map(|&(shape, empirical)| {
            let miss = empirical - c * shape;
            miss * miss
        })
        .sum();
    let relative = if emp_sq > 0.0 {
        (residual_sq / emp_sq).sqrt()
    } else {
        0.0
    };
    Ok((c, relative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jost::{jost_function, ForwardJost};
    use crate::potential::Potential;
    use crate::zeros::count_zeros;
    use num_complex::Complex64;

    #[test]
    fn kappa_matches_hand_values_and_free_case() {
        assert_eq!(kappa(0.0), 1.0);
        assert!((kappa(1.0) - 15.778112197861300454).abs() < 1e-12);
    }

    #[test]
    fn kappa_dominates_real_axis_samples() {
        let q = Potential::constant(Complex64::new(1.0, 0.0));
        let bound = kappa(1.0);
        let mut largest = 0f64;
        for k in 0..=200 {
            let x = -100.0 + k as f64;
            let value = jost_function(&q, Complex64::new(x, 0.0)).unwrap();
            largest = largest.max(value.norm());
        }
        assert!(
            largest <= bound,
            "sampled |psi| = {largest} exceeds kappa = {bound}"
        );
    }

    #[test]
    fn counting_bound_value_and_slope() {
        let at_origin = jensen_bound(2.0, 1.0, 0.0).unwrap();
        assert!((at_origin - (2f64.ln() + 12.0)).abs() < 1e-14);

        // Monotone in r with slope exactly 2e.
        let lo = jensen_bound(5.0, 1.0, 1.0).unwrap();
        let hi = jensen_bound(5.0, 1.0, 11.0).unwrap();
        assert!(((hi - lo) / 10.0 - 2.0 * E).abs() < 1e-12);

        assert_eq!(
            jensen_bound(1.9, 1.0, 0.0).unwrap_err(),
            BoundError::RhoBelowTwiceKappa {
                rho: 1.9,
                kappa: 1.0
            }
        );
    }

    #[test]
    fn counting_bound_is_nonnegative_over_valid_samples() {
        for rho_scale in [2.0, 3.0, 10.0] {
            for kappa in [1.0, 2.5, 40.0] {
                for r in [0.0, 0.5, 7.0, 300.0] {
                    let value = jensen_bound(rho_scale * kappa, kappa, r).unwrap();
                    assert!(value >= 0.0);
                }
            }
        }
    }

    #[test]
    fn winding_counts_stay_under_the_counting_bound() {
        // Zeros of the q = 1 model counted in discs about 3i*rho must
        // respect the Jensen-type bound; generous, but it is the
        // cross-module statement that matters.
        let q = Potential::constant(Complex64::new(1.0, 0.0));
        let forward = ForwardJost::new(q);
        let kappa = kappa(1.0);
        let rho = 2.0 * kappa;
        let center = Complex64::new(0.0, 3.0 * rho);
        for r in [40.0, 110.0] {
            let count = count_zeros(&forward, center, r).unwrap();
            let bound = jensen_bound(rho, kappa, r).unwrap();
            assert!(
                (count as f64) <= bound,
                "count {count} in radius {r} exceeds bound {bound}"
            );
        }
    }

    #[test]
    fn truncation_envelope_follows_the_cube_root_law() {
        assert!((theorem31_envelope(1000.0) - 0.1).abs() < 1e-16);
        assert!((theorem31_envelope(E) - (-1.0f64 / 3.0).exp()).abs() < 1e-16);
        for big_r in [30.0, 100.0, 777.0] {
            let ratio = theorem31_envelope(4.0 * big_r) / theorem31_envelope(big_r);
            assert!((ratio - 4f64.powf(-1.0 / 3.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn perturbation_envelope_terms_behave_as_printed() {
        // eps = 0 keeps only the approximation term.
        let p = 2.0;
        let big_r = 1e6;
        let at_zero = theorem61_envelope(big_r, 0.0, p).unwrap();
        let expected = big_r.ln().powf(2.0 / 3.0) * big_r.powf(-1.0 / 36.0);
        assert!((at_zero - expected).abs() < 1e-15 * expected);

        // Strictly increasing in eps at fixed R.
        let mut previous = at_zero;
        for eps in [0.01, 0.1, 0.3, 0.5, 0.7] {
            let value = theorem61_envelope(big_r, eps, p).unwrap();
            assert!(value > previous);
            previous = value;
        }

        assert_eq!(
            theorem61_envelope(big_r, 0.75, p).unwrap_err(),
            BoundError::EpsilonOutOfRange { epsilon: 0.75 }
        );
        assert_eq!(
            theorem61_envelope(big_r, 0.1, 1.0).unwrap_err(),
            BoundError::ExponentOutOfRange { p: 1.0 }
        );
    }

    #[test]
    fn envelopes_vary_continuously_over_their_domains() {
        // Sampled continuity: small parameter steps move the value
        // proportionally, no jumps.
        let mut prev = theorem31_envelope(20.0);
        let mut r = 20.0;
        while r < 400.0 {
            r += 0.5;
            let next = theorem31_envelope(r);
            assert!((next - prev).abs() < 1e-2);
            prev = next;
        }
        // The perturbation term grows exponentially in eps, so judge
        // smoothness by relative steps.
        let mut prev = theorem61_envelope(100.0, 0.0, 1.5).unwrap();
        let mut eps = 0.0;
        while eps < 0.74 {
            eps += 0.002;
            let next = theorem61_envelope(100.0, eps, 1.5).unwrap();
            assert!(
                (next - prev).abs() < 0.3 * next.max(prev),
                "jump near eps = {eps}"
            );
            prev = next;
        }
    }

    #[test]
    fn constant_fit_recovers_exact_scales() {
        let zeroed = [(1.0, 0.0), (2.0, 0.0), (0.5, 0.0)];
        let (c, residual) = fit_constant(&zeroed).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(residual, 0.0);

        let doubled: Vec<(f64, f64)> = [0.3, 1.0, 2.0, 5.5].iter().map(|&s| (s, 2.0 * s)).collect();
        let (c, residual) = fit_constant(&doubled).unwrap();
        assert!((c - 2.0).abs() < 1e-14);
        assert!(residual < 1e-14);

        // Negative correlation clamps to zero rather than predicting
        // negative envelopes.
        let negated: Vec<(f64, f64)> = [0.3, 1.0, 2.0].iter().map(|&s| (s, -s)).collect();
        let (c, _) = fit_constant(&negated).unwrap();
        assert_eq!(c, 0.0);

        assert_eq!(
            fit_constant(&[(1.0, 1.0), (2.0, 2.0)]).unwrap_err(),
            BoundError::TooFewPairs { got: 2 }
        );
        assert_eq!(
            fit_constant(&[(1.0, 1.0), (0.0, 2.0), (1.0, 1.0)]).unwrap_err(),
            BoundError::NonPositiveShape { index: 1 }
        );
    }

    #[test]
    fn parameter_bundle_derives_exponents_consistently() {
        let params = BoundParams::new(1.0, 1.0, 1.5, 64.0, 0.01).unwrap();
        assert!((params.gamma - 1.0 / 3.0).abs() < 1e-16);
        assert!((params.nu - 1.0 / 18.0).abs() < 1e-16);
        assert!((params.gamma - 6.0 * params.nu).abs() < 1e-16);
        assert!((params.kappa - kappa(1.0)).abs() == 0.0);
        // rho defaults to the larger of 2*kappa and R^{1/3}.
        assert_eq!(params.rho, 2.0 * params.kappa);
        let wide = BoundParams::new(0.0, 0.5, 2.0, 1e6, 0.0).unwrap();
        assert_eq!(wide.rho, 100.0);

        assert!(BoundParams::new(-1.0, 1.0, 1.5, 64.0, 0.0).is_err());
        assert!(BoundParams::new(1.0, 1.0, 2.5, 64.0, 0.0).is_err());
        assert!(BoundParams::new(1.0, 1.0, 1.5, 64.0, 0.8).is_err());
    }
}
