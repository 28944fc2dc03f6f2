//! Piecewise-polynomial complex potentials supported in [0, 1].
//!
//! The canonical representation is a sorted list of non-overlapping
//! pieces, each a polynomial in (x - x_lo) with complex coefficients.
//! Evaluation outside the pieces (and outside [0, 1]) is exactly zero.
//!
//! Text grammar, one piece per line, `#` starts a comment:
//!
//! ```text
//! piece <x_lo> <x_hi> const <re> <im>
//! piece <x_lo> <x_hi> poly <c0_re> <c0_im> [<c1_re> <c1_im> ...]
//! ```

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::adaptive_simpson;

/// Maximum polynomial degree kept by the canonical representation.
pub const MAX_DEGREE: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("pieces overlap near x = {at}")]
    Overlap { at: f64 },
    #[error("piece [{x_lo}, {x_hi}] reaches outside the unit interval")]
    OutsideSupport { x_lo: f64, x_hi: f64 },
    #[error("piece has empty extent: x_lo = {x_lo} >= x_hi = {x_hi}")]
    EmptyPiece { x_lo: f64, x_hi: f64 },
    #[error("polynomial degree {deg} exceeds the supported maximum {MAX_DEGREE}")]
    DegreeTooHigh { deg: usize },
    #[error("exponent p = {p} outside the supported range (1, 2]")]
    BadExponent { p: f64 },
}

/// One polynomial piece; coefficients are in powers of (x - x_lo).
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub x_lo: f64,
    pub x_hi: f64,
    pub coeffs: Vec<Complex64>,
}

impl Piece {
    fn eval(&self, x: f64) -> Complex64 {
        let u = x - self.x_lo;
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * u + c;
        }
        acc
    }

    fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|c| c.norm() != 0.0)
            .unwrap_or(0)
    }

    /// Exact antiderivative value int_{x_lo}^{x} of the piece polynomial.
    fn primitive(&self, x: f64) -> Complex64 {
        let u = x - self.x_lo;
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            acc = acc * u + c / (k as f64 + 1.0);
        }
        acc * u
    }
}

/// A compactly supported potential built from polynomial pieces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Potential {
    pieces: Vec<Piece>,
}

impl Potential {
    /// The zero potential.
    pub fn zero() -> Self {
        Potential { pieces: Vec::new() }
    }

    /// Constant value `c` on all of [0, 1].
    pub fn constant(c: Complex64) -> Self {
        Potential::from_pieces(vec![Piece {
            x_lo: 0.0,
            x_hi: 1.0,
            coeffs: vec![c],
        }])
        .expect("unit-interval constant is always valid")
    }

    /// Constant value `c` on [a, b] within the unit interval.
    pub fn step(c: Complex64, a: f64, b: f64) -> Result<Self, PotentialError> {
        Potential::from_pieces(vec![Piece {
            x_lo: a,
            x_hi: b,
            coeffs: vec![c],
        }])
    }

    /// Validate and normalize a raw piece list.
    pub fn from_pieces(mut pieces: Vec<Piece>) -> Result<Self, PotentialError> {
        for p in &pieces {
            if !(p.x_lo < p.x_hi) {
                return Err(PotentialError::EmptyPiece {
                    x_lo: p.x_lo,
                    x_hi: p.x_hi,
                });
            }
            if p.x_lo < 0.0 || p.x_hi > 1.0 {
                return Err(PotentialError::OutsideSupport {
                    x_lo: p.x_lo,
                    x_hi: p.x_hi,
                });
            }
            if p.coeffs.len() > MAX_DEGREE + 1 {
                return Err(PotentialError::DegreeTooHigh {
                    deg: p.coeffs.len() - 1,
                });
            }
        }
        pieces.sort_by(|a, b| a.x_lo.total_cmp(&b.x_lo));
        for w in pieces.windows(2) {
            if w[0].x_hi > w[1].x_lo + 1e-15 {
                return Err(PotentialError::Overlap { at: w[1].x_lo });
            }
        }
        // drop identically-zero pieces so the zero potential is canonical
        pieces.retain(|p| p.coeffs.iter().any(|c| c.norm() != 0.0));
        Ok(Potential { pieces })
    }

    /// Parse the piece-per-line grammar.
    pub fn parse(text: &str) -> Result<Self, PotentialError> {
        let mut pieces = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let mut tok = body.split_whitespace();
            let head = tok.next().unwrap();
            if head != "piece" {
                return Err(PotentialError::Malformed {
                    line,
                    msg: format!("expected 'piece', found '{head}'"),
                });
            }
            let mut next_f64 = |what: &str| -> Result<f64, PotentialError> {
                tok.next()
                    .ok_or_else(|| PotentialError::Malformed {
                        line,
                        msg: format!("missing {what}"),
                    })?
                    .parse::<f64>()
                    .map_err(|e| PotentialError::Malformed {
                        line,
                        msg: format!("bad {what}: {e}"),
                    })
            };
            let x_lo = next_f64("x_lo")?;
            let x_hi = next_f64("x_hi")?;
            let kind = tok.next().ok_or_else(|| PotentialError::Malformed {
                line,
                msg: "missing piece kind (const|poly)".into(),
            })?;
            let mut rest: Vec<f64> = Vec::new();
            for t in tok {
                rest.push(t.parse::<f64>().map_err(|e| PotentialError::Malformed {
                    line,
                    msg: format!("bad coefficient: {e}"),
                })?);
            }
            let coeffs: Vec<Complex64> = match kind {
                "const" => {
                    if rest.len() != 2 {
                        return Err(PotentialError::Malformed {
                            line,
                            msg: format!("const takes 2 numbers, found {}", rest.len()),
                        });
                    }
                    vec![Complex64::new(rest[0], rest[1])]
                }
                "poly" => {
                    if rest.is_empty() || rest.len() % 2 != 0 {
                        return Err(PotentialError::Malformed {
                            line,
                            msg: "poly takes an even, nonzero number of values".into(),
                        });
                    }
                    rest.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
                }
                other => {
                    return Err(PotentialError::Malformed {
                        line,
                        msg: format!("unknown piece kind '{other}'"),
                    })
                }
            };
            pieces.push(Piece { x_lo, x_hi, coeffs });
        }
        Potential::from_pieces(pieces)
    }

    /// Serialize back into the text grammar.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.pieces {
            if p.degree() == 0 {
                out.push_str(&format!(
                    "piece {} {} const {} {}\n",
                    p.x_lo, p.x_hi, p.coeffs[0].re, p.coeffs[0].im
                ));
            } else {
                out.push_str(&format!("piece {} {} poly", p.x_lo, p.x_hi));
                for c in &p.coeffs {
                    out.push_str(&format!(" {} {}", c.re, c.im));
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Pointwise value; exactly zero off the pieces and outside [0, 1].
    pub fn eval(&self, x: f64) -> Complex64 {
        if !(0.0..=1.0).contains(&x) {
            return Complex64::new(0.0, 0.0);
        }
        for p in &self.pieces {
            if x >= p.x_lo && x < p.x_hi {
                return p.eval(x);
            }
        }
        // right endpoint of the last covering piece
        if let Some(p) = self.pieces.iter().find(|p| x == p.x_hi) {
            return p.eval(x);
        }
        Complex64::new(0.0, 0.0)
    }

    /// Sorted breakpoints (piece edges) of the representation.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = Vec::new();
        for p in &self.pieces {
            b.push(p.x_lo);
            b.push(p.x_hi);
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// L1 norm: int_0^1 |q|. Exact for constant pieces and for pieces
    /// proportional to a real polynomial (split at its real roots);
    /// adaptive quadrature to 1e-12 otherwise.
    pub fn l1_norm(&self) -> f64 {
        let mut total = 0.0;
        for p in &self.pieces {
            total += piece_abs_integral(p);
        }
        total
    }

    /// Lp norm (int |q|^p)^(1/p) for p in (1, 2].
    pub fn lp_norm(&self, p: f64) -> Result<f64, PotentialError> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(PotentialError::BadExponent { p });
        }
        let mut total = 0.0;
        for piece in &self.pieces {
            if piece.degree() == 0 {
                total += piece.coeffs[0].norm().powf(p) * (piece.x_hi - piece.x_lo);
            } else {
                total += adaptive_simpson(
                    &|x| piece.eval(x).norm().powf(p),
                    piece.x_lo,
                    piece.x_hi,
                    1e-13,
                );
            }
        }
        Ok(total.powf(1.0 / p))
    }

    /// Tail integral int_x^1 q(s) ds, exact piecewise antiderivatives.
    pub fn tail_integral(&self, x: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.pieces {
            if p.x_hi <= x {
                continue;
            }
            let lo = p.x_lo.max(x);
            acc += p.primitive(p.x_hi) - p.primitive(lo);
        }
        acc
    }

    /// Pointwise difference self - other as a new piecewise polynomial.
    pub fn subtract(&self, other: &Potential) -> Potential {
        let mut cuts: Vec<f64> = self
            .breakpoints()
            .into_iter()
            .chain(other.breakpoints())
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let a = self.local_coeffs(lo, hi);
            let b = other.local_coeffs(lo, hi);
            let n = a.len().max(b.len());
            let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
            for (k, c) in a.iter().enumerate() {
                coeffs[k] += c;
            }
            for (k, c) in b.iter().enumerate() {
                coeffs[k] -= c;
            }
            if coeffs.iter().any(|c| c.norm() != 0.0) {
                pieces.push(Piece {
                    x_lo: lo,
                    x_hi: hi,
                    coeffs,
                });
            }
        }
        Potential { pieces }
    }

    /// Pointwise sum, via subtraction of the negation.
    pub fn add(&self, other: &Potential) -> Potential {
        let neg = Potential {
            pieces: other
                .pieces
                .iter()
                .map(|p| Piece {
                    x_lo: p.x_lo,
                    x_hi: p.x_hi,
                    coeffs: p.coeffs.iter().map(|c| -c).collect(),
                })
                .collect(),
        };
        self.subtract(&neg)
    }

    /// Piecewise-linear interpolant of samples on an ascending grid,
    /// used when a sampled estimate has to re-enter the pipeline as a
    /// potential.
    pub fn from_samples(xs: &[f64], values: &[Complex64]) -> Result<Self, PotentialError> {
        assert_eq!(xs.len(), values.len(), "grid/value length mismatch");
        let mut pieces = Vec::new();
        for k in 0..xs.len().saturating_sub(1) {
            let (x0, x1) = (xs[k], xs[k + 1]);
            if !(x0 < x1) {
                return Err(PotentialError::EmptyPiece { x_lo: x0, x_hi: x1 });
            }
            let slope = (values[k + 1] - values[k]) / (x1 - x0);
            pieces.push(Piece {
                x_lo: x0,
                x_hi: x1,
                coeffs: vec![values[k], slope],
            });
        }
        Potential::from_pieces(pieces)
    }

    /// Coefficients of this potential on [lo, hi] in powers of (x - lo),
    /// assuming no breakpoint lies strictly inside.
    fn local_coeffs(&self, lo: f64, hi: f64) -> Vec<Complex64> {
        let mid = 0.5 * (lo + hi);
        for p in &self.pieces {
            if p.x_lo <= mid && mid < p.x_hi {
                return shift_basis(&p.coeffs, lo - p.x_lo);
            }
        }
        Vec::new()
    }
}

/// Rewrite sum c_k u^k with u = (x - a) into powers of (x - a - delta),
/// i.e. expand around the shifted origin.
fn shift_basis(coeffs: &[Complex64], delta: f64) -> Vec<Complex64> {
    // p(x) = sum_k c_k (x - a)^k; with v = x - (a + delta):
    // (x - a)^k = (v + delta)^k -> binomial expansion
    let n = coeffs.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, c) in coeffs.iter().enumerate() {
        let mut binom = 1.0f64;
        for j in 0..=k {
            // coefficient of v^j in (v + delta)^k
            out[j] += c * binom * delta.powi((k - j) as i32);
            binom *= (k - j) as f64 / (j as f64 + 1.0);
        }
    }
    out
}

/// Integral of |piece polynomial| over the piece.
fn piece_abs_integral(p: &Piece) -> f64 {
    let deg = p.degree();
    let len = p.x_hi - p.x_lo;
    if deg == 0 {
        return p.coeffs[0].norm() * len;
    }
    // factor out a common phase when the polynomial is a complex
    // multiple of a real one: then |p| = |real poly| and the real
    // polynomial can be integrated exactly between its roots
    if let Some(real_coeffs) = common_phase(&p.coeffs) {
        let poly = |u: f64| -> f64 {
            let mut acc = 0.0;
            for c in real_coeffs.iter().rev() {
                acc = acc * u + c;
            }
            acc
        };
        let prim = |u: f64| -> f64 {
            let mut acc = 0.0;
            for (k, c) in real_coeffs.iter().enumerate().rev() {
                acc = acc * u + c / (k as f64 + 1.0);
            }
            acc * u
        };
        let mut cuts = vec![0.0];
        cuts.extend(real_roots_in(&poly, 0.0, len));
        cuts.push(len);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += (prim(w[1]) - prim(w[0])).abs();
        }
        return total;
    }
    adaptive_simpson(&|x| p.eval(x).norm(), p.x_lo, p.x_hi, 1e-13)
}

/// If all coefficients are real multiples of one unit complex number,
/// return the real coefficient list (|polynomial| is then its modulus).
fn common_phase(coeffs: &[Complex64]) -> Option<Vec<f64>> {
    let lead = coeffs.iter().rev().find(|c| c.norm() != 0.0)?;
    let unit = lead / lead.norm();
    let scale: f64 = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut reals = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        let r = c / unit;
        if r.im.abs() > 1e-14 * scale {
            return None;
        }
        reals.push(r.re);
    }
    Some(reals)
}

/// Real roots of a continuous function on [a, b] via dense sampling and
/// bisection; adequate for the degree <= 4 piece polynomials.
fn real_roots_in(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Vec<f64> {
    const SAMPLES: usize = 256;
    let mut roots = Vec::new();
    let mut x0 = a;
    let mut f0 = f(a);
    for k in 1..=SAMPLES {
        let x1 = a + (b - a) * k as f64 / SAMPLES as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi) = (x0, x1);
            for _ in 0..80 {
                let m = 0.5 * (lo + hi);
                if f(lo) * f(m) <= 0.0 {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}
