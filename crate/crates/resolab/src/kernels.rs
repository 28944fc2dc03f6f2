//! Transformation-operator kernels between pairs of potentials.
//!
//! The kernel `K` turning the Jost solution of `q1` into that of `q2`
//! satisfies `psi_2(z,x) = psi_1(z,x) + int_x^{2-x} K(x,t) psi_1(z,t) dt`
//! and is built here as the absolutely convergent series `K = sum K_n`,
//! with `K_0` an exact tail integral of `q2 - q1` and each `K_n` one more
//! pass of a double integral over the previous term.  Inverting the
//! relation gives `L` (a Volterra equation, solved by marching), and
//! composing `K` with `L` gives the kernel `B` between two nonzero
//! potentials.  `B` can alternatively be grown from its boundary row
//! `B(0,t)` by the characteristic iteration; agreement of the two routes
//! is the module's central self-check.
//!
//! Everything lives on a uniform triangular mesh `x = i h, t = j h` with
//! `0 <= x <= t <= 2 - x`.  The series are integrated in characteristic
//! coordinates `(xi, eta) = (t + x, t - x)`, where both recursions
//! become rectangle integrals of a fixed cell table and one iteration
//! costs a pair of cumulative sums.  Cells whose potential argument
//! crosses a breakpoint are split exactly at the potential's own pieces,
//! which keeps the quadrature second order for step potentials.

use std::fmt;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::potential::Potential;

/// Truncation cap for both kernel series.  The factorial bounds make
/// reaching it impossible for any budget the mesh can resolve, so
/// hitting the cap signals a defect rather than a hard problem.
const SERIES_CAP: usize = 60;

/// Which transformation a grid holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Forward kernel, reference potential to target potential.
    K,
    /// Inverse kernel, potential back to the free reference.
    L,
    /// Two-potential kernel, `q` to `q-tilde`.
    B,
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::K => write!(f, "K"),
            KernelKind::L => write!(f, "L"),
            KernelKind::B => write!(f, "B"),
        }
    }
}

/// Where a grid came from and the L1 budget governing its sup bound.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMeta {
    pub description: String,
    /// `int |q2 - q1|` for series-built grids; the relevant L1 budget
    /// otherwise.  Drives the `Q e^{2Q}` sup-norm invariant.
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelError {
    /// Mesh steps must be `1/M` with `M` a power of two and `h <= 1/16`.
    BadMesh {
        h: f64,
    },
    BadTolerance {
        tol: f64,
    },
    /// A kernel series failed to fall under its tolerance before the
    /// cap; the factorial bound makes this impossible unless something
    /// upstream is wrong.
    SeriesDiverged {
        terms: usize,
        sup: f64,
    },
    MeshMismatch {
        left_h: f64,
        right_h: f64,
    },
    KindMismatch {
        expected: KernelKind,
        got: KernelKind,
    },
    BoundaryLengthMismatch {
        expected: usize,
        got: usize,
    },
    Malformed {
        line: usize,
        msg: String,
    },
}

impl fmt::Display for KernelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelError::BadMesh { h } => {
                write!(f, "mesh step must be 1/2^k with k >= 4; got {h}")
            }
            KernelError::BadTolerance { tol } => {
                write!(f, "series tolerance must be at least 1e-12; got {tol}")
            }
            KernelError::SeriesDiverged { terms, sup } => {
                write!(
                    f,
                    "kernel series still at sup {sup:.3e} after {terms} terms"
                )
            }
            KernelError::MeshMismatch { left_h, right_h } => {
                write!(f, "grids use different meshes: {left_h} vs {right_h}")
            }
            KernelError::KindMismatch { expected, got } => {
                write!(f, "expected a grid of kind {expected}, got {got}")
            }
            KernelError::BoundaryLengthMismatch { expected, got } => {
                write!(f, "boundary data needs {expected} samples, got {got}")
            }
            KernelError::Malformed { line, msg } => {
                write!(f, "kernel grid text, line {line}: {msg}")
            }
        }
    }
}

impl std::error::Error for KernelError {}

/// Kernel values on the triangle `0 <= x <= t <= 2 - x` at mesh nodes
/// `(i h, j h)`, stored as a dense rectangle with exact zeros outside
/// the triangle and on the support boundary `x + t >= 2`.
#[derive(Debug, Clone)]
pub struct TriangularKernelGrid {
    pub h: f64,
    pub kind: KernelKind,
    pub meta: KernelMeta,
    m: usize,
    /// Row-major by x-index: `values[i * (2m + 1) + j]`.
    values: Vec<Complex64>,
}

fn mesh_order(h: f64) -> Result<usize, KernelError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(KernelError::BadMesh { h });
    }
    let m = (1.0 / h).round();
    if (1.0 / h - m).abs() > 1e-9 || m < 16.0 || (m as u64) & (m as u64 - 1) != 0 {
        return Err(KernelError::BadMesh { h });
    }
    Ok(m as usize)
}

impl TriangularKernelGrid {
    pub fn zero(h: f64, kind: KernelKind, meta: KernelMeta) -> Result<Self, KernelError> {
        let m = mesh_order(h)?;
        Ok(TriangularKernelGrid {
            h,
            kind,
            meta,
            m,
            values: vec![Complex64::new(0.0, 0.0); (m + 1) * (2 * m + 1)],
        })
    }

    /// Mesh order `M = 1/h`.
    pub fn order(&self) -> usize {
        self.m
    }

    fn in_triangle(&self, i: usize, j: usize) -> bool {
        i <= self.m && j <= 2 * self.m && j >= i && i + j < 2 * self.m
    }

    /// Node value; exact zero outside the triangle and on `x + t >= 2`.
    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        if self.in_triangle(i, j) {
            self.values[i * (2 * self.m + 1) + j]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        if self.in_triangle(i, j) {
            self.values[i * (2 * self.m + 1) + j] = v;
        }
    }

    /// Largest node modulus.
    pub fn sup(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Diagonal sample `K(x_i, x_i)` for `i = 0..=M`.
    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..=self.m).map(|i| self.value(i, i)).collect()
    }

    /// Value along `t = x` with linear interpolation between nodes.
    pub fn diagonal_at(&self, x: f64) -> Complex64 {
        let clamped = x.clamp(0.0, 1.0);
        let scaled = clamped / self.h;
        let lo = (scaled.floor() as usize).min(self.m.saturating_sub(1));
        let frac = scaled - lo as f64;
        self.value(lo, lo) * (1.0 - frac) + self.value(lo + 1, lo + 1) * frac
    }

    /// Text dump: header `# kernelgrid kind=<K|L|B> h=<h>`, then one
    /// `x t re im` row per triangle node with `x + t < 2`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# kernelgrid kind={} h={}", self.kind, self.h).unwrap();
        for i in 0..=self.m {
            for j in i..=(2 * self.m).saturating_sub(i) {
                if i + j >= 2 * self.m {
                    continue;
                }
                let v = self.value(i, j);
                writeln!(
                    s,
                    "{} {} {} {}",
                    i as f64 * self.h,
                    j as f64 * self.h,
                    v.re,
                    v.im
                )
                .unwrap();
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, KernelError> {
        let bad = |line: usize, msg: &str| KernelError::Malformed {
            line,
            msg: msg.into(),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty input"))?;
        let rest = header
            .strip_prefix("# kernelgrid kind=")
            .ok_or_else(|| bad(1, "expected `# kernelgrid kind=<K|L|B> h=<h>`"))?;
        let (kind_str, h_str) = rest
            .split_once(" h=")
            .ok_or_else(|| bad(1, "missing ` h=`"))?;
        let kind = match kind_str {
            "K" => KernelKind::K,
            "L" => KernelKind::L,
            "B" => KernelKind::B,
            _ => return Err(bad(1, "kind must be K, L, or B")),
        };
        let h: f64 = h_str.trim().parse().map_err(|_| bad(1, "bad mesh step"))?;
        let mut grid = TriangularKernelGrid::zero(
            h,
            kind,
            KernelMeta {
                description: "parsed from text".into(),
                budget: f64::NAN,
            },
        )?;
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(bad(line_no, "expected `x t re im`"));
            }
            let x: f64 = fields[0].parse().map_err(|_| bad(line_no, "bad x"))?;
            let t: f64 = fields[1].parse().map_err(|_| bad(line_no, "bad t"))?;
            let re: f64 = fields[2].parse().map_err(|_| bad(line_no, "bad re"))?;
            let im: f64 = fields[3].parse().map_err(|_| bad(line_no, "bad im"))?;
            let i = (x / h).round();
            let j = (t / h).round();
            if (x - i * h).abs() > 1e-12 || (t - j * h).abs() > 1e-12 {
                return Err(bad(line_no, "node off the mesh"));
            }
            let (i, j) = (i as usize, j as usize);
            if !grid.in_triangle(i, j) {
                return Err(bad(line_no, "node outside the kernel triangle"));
            }
            grid.set(i, j, Complex64::new(re, im));
        }
        Ok(grid)
    }
}

/// Exact integral of a potential over `[from, 1]`, summing polynomial
/// antiderivatives piece by piece.  `from` below the support clamps.
pub fn tail_integral(q: &Potential, from: f64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    for piece in q.pieces() {
        let lo = piece.x_lo.max(from);
        if lo >= piece.x_hi {
            continue;
        }
        let (a, b) = (lo - piece.x_lo, piece.x_hi - piece.x_lo);
        let mut pa = a;
        let mut pb = b;
        for (k, c) in piece.coeffs.iter().enumerate() {
            pa *= if k == 0 { 1.0 } else { a };
            pb *= if k == 0 { 1.0 } else { b };
            total += *c * (pb - pa) / (k + 1) as f64;
        }
    }
    total
}

/// Average of `q` over `[center - w, center + w]` against the triangular
/// weight `w - |s - center|`, splitting exactly at `q`'s breakpoints
/// (and the weight's kink) and evaluating `q` at sub-piece midpoints.
///
/// Exact for step potentials; second order for polynomial pieces.  This
/// is precisely the average of `q((xi -+ eta)/2)` over one mesh cell in
/// characteristic coordinates, where the diagonal argument sweeps the
/// interval with triangular density.
fn tent_average(q: &Potential, center: f64, w: f64) -> Complex64 {
    let lo = center - w;
    let hi = center + w;
    let mut cuts: Vec<f64> = vec![lo, center, hi];
    for b in q.breakpoints() {
        if b > lo && b < hi {
            cuts.push(b);
        }
    }
    cuts.sort_by(f64::total_cmp);
    // Triangular-weight mass over [p, r]: G(r - center) - G(p - center)
    // with G(d) = w d - d|d|/2.
    let mass = |p: f64, r: f64| {
        let g = |d: f64| w * d - 0.5 * d * d.abs();
        g(r - center) - g(p - center)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for pair in cuts.windows(2) {
        let (p, r) = (pair[0], pair[1]);
        if r <= p {
            continue;
        }
        acc += q.eval(0.5 * (p + r)) * mass(p, r);
    }
    acc / (w * w)
}

/// Characteristic-coordinate node array: `xi = a h`, `eta = b h`, both
/// indices `0..=n2` with `n2 = 2M`.  Only the wedge `b <= a` is ever
/// meaningful; everything else stays zero.
struct CharGrid {
    n2: usize,
    v: Vec<Complex64>,
}

impl CharGrid {
    fn new(n2: usize) -> Self {
        CharGrid {
            n2,
            v: vec![Complex64::new(0.0, 0.0); (n2 + 1) * (n2 + 1)],
        }
    }

    fn at(&self, a: usize, b: usize) -> Complex64 {
        self.v[a * (self.n2 + 1) + b]
    }

    fn set(&mut self, a: usize, b: usize, value: Complex64) {
        self.v[a * (self.n2 + 1) + b] = value;
    }

    fn wedge_sup(&self) -> f64 {
        let mut sup = 0f64;
        for a in 0..=self.n2 {
            for b in 0..=a {
                sup = sup.max(self.at(a, b).norm());
            }
        }
        sup
    }
}

/// One series pass shared by both kernel recursions: given the previous
/// term on the characteristic grid and the per-cell average of the
/// potential factor, produces cumulative sums `S[A][B] = sum over cells
/// a >= A, b < B` of `cell_dq * cell_average(prev) * h^2`.
fn cumulative_cells(prev: &CharGrid, cell_dq: &[Complex64], h: f64) -> Vec<Complex64> {
    let n2 = prev.n2;
    let mut table = vec![Complex64::new(0.0, 0.0); (n2 + 1) * (n2 + 1)];
    // colpref[b] for the current cell-row while sweeping a downward.
    let mut spread = vec![Complex64::new(0.0, 0.0); n2 + 1];
    for a in (0..n2).rev() {
        let mut acc = Complex64::new(0.0, 0.0);
        for b in 0..=n2 {
            if b > 0 {
                let cb = b - 1;
                if cb < a {
                    let corner_mean = 0.25
                        * (prev.at(a, cb)
                            + prev.at(a + 1, cb)
                            + prev.at(a, cb + 1)
                            + prev.at(a + 1, cb + 1));
                    acc += cell_dq[a * n2 + cb] * corner_mean * h * h;
                }
            }
            spread[b] = acc;
            table[a * (n2 + 1) + b] = table[(a + 1) * (n2 + 1) + b] + spread[b];
        }
    }
    table
}

fn series_sum<FirstTerm, NextTerm>(
    n2: usize,
    tol: f64,
    first: FirstTerm,
    next: NextTerm,
) -> Result<(CharGrid, Vec<CharGrid>), KernelError>
where
    FirstTerm: FnOnce(&mut CharGrid),
    NextTerm: Fn(&CharGrid) -> CharGrid,
{
    let mut current = CharGrid::new(n2);
    first(&mut current);
    let mut total = CharGrid::new(n2);
    let mut terms: Vec<CharGrid> = Vec::new();
    for _ in 0..=SERIES_CAP {
        for a in 0..=n2 {
            for b in 0..=a {
                let sum = total.at(a, b) + current.at(a, b);
                total.set(a, b, sum);
            }
        }
        let sup = current.wedge_sup();
        terms.push(current);
        if sup < tol {
            return Ok((total, terms));
        }
        current = next(terms.last().unwrap());
    }
    Err(KernelError::SeriesDiverged {
        terms: SERIES_CAP,
        sup: terms.last().map_or(f64::NAN, CharGrid::wedge_sup),
    })
}

fn sample_to_triangle(
    char_grid: &CharGrid,
    h: f64,
    kind: KernelKind,
    meta: KernelMeta,
) -> TriangularKernelGrid {
    let m = char_grid.n2 / 2;
    let mut grid = TriangularKernelGrid::zero(h, kind, meta).expect("mesh validated upstream");
    for i in 0..=m {
        for j in i..=(2 * m - i) {
            grid.set(i, j, char_grid.at(i + j, j - i));
        }
    }
    grid
}

/// L1 norm of the difference of two potentials, integrated exactly over
/// merged pieces (the difference is polynomial between merged cuts, so
/// its modulus is smooth there and adaptive quadrature converges fast).
fn difference_budget(q1: &Potential, q2: &Potential) -> f64 {
    let mut cuts: Vec<f64> = q1.breakpoints();
    cuts.extend(q2.breakpoints());
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        total += crate::numerics::adaptive_simpson(
            &|s: f64| (q2.eval(s) - q1.eval(s)).norm(),
            lo,
            hi,
            1e-12,
        );
    }
    total
}

/// Transformation kernel from the potential `q1` to the potential `q2`
/// as the convergent series of iterated double integrals.
///
/// `K_0` is the exact half tail integral of `q2 - q1`; each later term
/// feeds the previous one through the cell table and two cumulative
/// sums, so a full iteration is `O(M^2)`.  Terms are added until their
/// sup falls under `tol`.
pub fn k_kernel(
    q1: &Potential,
    q2: &Potential,
    h: f64,
    tol: f64,
) -> Result<TriangularKernelGrid, KernelError> {
    let m = mesh_order(h)?;
    if !(tol >= 1e-12) {
        return Err(KernelError::BadTolerance { tol });
    }
    let n2 = 2 * m;
    // Per-cell average of q2((xi - eta)/2) - q1((xi + eta)/2), fixed
    // across iterations.
    let mut cell_dq = vec![Complex64::new(0.0, 0.0); n2 * n2];
    for a in 0..n2 {
        for b in 0..a.max(1).min(n2) {
            if b >= a {
                continue;
            }
            let u_center = (a as f64 - b as f64) * h / 2.0;
            let v_center = (a as f64 + b as f64 + 1.0) * h / 2.0;
            cell_dq[a * n2 + b] =
                tent_average(q2, u_center, h / 2.0) - tent_average(q1, v_center, h / 2.0);
        }
    }

    let (total, _) = series_sum(
        n2,
        tol,
        |start: &mut CharGrid| {
            for a in 0..=n2 {
                let value = 0.5
                    * (tail_integral(q2, a as f64 * h / 2.0)
                        - tail_integral(q1, a as f64 * h / 2.0));
                for b in 0..=a {
                    start.set(a, b, value);
                }
            }
        },
        |prev: &CharGrid| {
            let table = cumulative_cells(prev, &cell_dq, h);
            let mut next = CharGrid::new(n2);
            for a in 0..=n2 {
                for b in 0..=a {
                    next.set(a, b, 0.25 * table[a * (n2 + 1) + b]);
                }
            }
            next
        },
    )?;

    let meta = KernelMeta {
        description: "series kernel between two stored potentials".into(),
        budget: difference_budget(q1, q2),
    };
    Ok(sample_to_triangle(&total, h, KernelKind::K, meta))
}

/// Inverse kernel: solves `0 = K(x,t) + L(x,t) + int_x^t K(x,s) L(s,t) ds`
/// for `L` on the same mesh, marching outward in `t - x`.
///
/// The integral couples `L(s,t)` only for `t - s` strictly smaller than
/// `t - x` except for the trapezoid's own endpoint weight, which moves
/// to the left-hand side; each layer is then explicit.  On the diagonal
/// the integral is empty and `L(x,x) = -K(x,x)` exactly.
pub fn l_kernel(k: &TriangularKernelGrid) -> Result<TriangularKernelGrid, KernelError> {
    if k.kind != KernelKind::K {
        return Err(KernelError::KindMismatch {
            expected: KernelKind::K,
            got: k.kind,
        });
    }
    let m = k.order();
    let h = k.h;
    let mut l = TriangularKernelGrid::zero(
        h,
        KernelKind::L,
        KernelMeta {
            description: format!("inverse of: {}", k.meta.description),
            budget: k.meta.budget,
        },
    )?;
    for i in 0..=m {
        l.set(i, i, -k.value(i, i));
    }
    for d in 1..=2 * m {
        for i in 0..=m.min((2 * m).saturating_sub(d)) {
            let j = i + d;
            if i + j >= 2 * m {
                continue;
            }
            let mut rhs = k.value(i, j);
            for s in 1..=d {
                let weight = if s == d { 0.5 * h } else { h };
                rhs += weight * k.value(i, i + s) * l.value(i + s, j);
            }
            let divisor = Complex64::new(1.0, 0.0) + 0.5 * h * k.value(i, i);
            l.set(i, j, -rhs / divisor);
        }
    }
    Ok(l)
}

/// Sup over nodes of the Volterra identity residual
/// `K + L + int_x^t K(x,s) L(s,t) ds`, with the integral taken exactly
/// over the product of the two piecewise-linear node interpolants.
///
/// The grids solve the trapezoid discretization, so this independent
/// quadrature exposes the genuine `O(h^2)` consistency error instead of
/// reporting zero by construction.
pub fn volterra_residual(k: &TriangularKernelGrid, l: &TriangularKernelGrid) -> f64 {
    let m = k.order();
    let h = k.h;
    let mut worst = 0f64;
    for i in 0..=m {
        for j in i..=(2 * m).saturating_sub(i) {
            let mut value = k.value(i, j) + l.value(i, j);
            for s in 0..(j - i) {
                let a = k.value(i, i + s);
                let b = k.value(i, i + s + 1);
                let c = l.value(i + s, j);
                let d = l.value(i + s + 1, j);
                // Exact integral of two linear interpolants over a cell.
                value += h / 6.0 * (2.0 * a * c + a * d + b * c + 2.0 * b * d);
            }
            worst = worst.max(value.norm());
        }
    }
    worst
}

/// Two-potential kernel by composition:
/// `B = K_tilde + L + int_x^t K_tilde(x,s) L(s,t) ds` (trapezoid).
pub fn compose_b(
    k_tilde: &TriangularKernelGrid,
    l: &TriangularKernelGrid,
) -> Result<TriangularKernelGrid, KernelError> {
    if k_tilde.h != l.h {
        return Err(KernelError::MeshMismatch {
            left_h: k_tilde.h,
            right_h: l.h,
        });
    }
    let m = k_tilde.order();
    let h = k_tilde.h;
    let mut b = TriangularKernelGrid::zero(
        h,
        KernelKind::B,
        KernelMeta {
            description: format!(
                "composition of ({}) with ({})",
                k_tilde.meta.description, l.meta.description
            ),
            budget: k_tilde.meta.budget + l.meta.budget,
        },
    )?;
    for i in 0..=m {
        for j in i..=(2 * m).saturating_sub(i) {
            if i + j >= 2 * m {
                continue;
            }
            let mut value = k_tilde.value(i, j) + l.value(i, j);
            for s in 0..=(j - i) {
                let weight = if s == 0 || s == j - i { 0.5 * h } else { h };
                value += weight * k_tilde.value(i, i + s) * l.value(i + s, j);
            }
            b.set(i, j, value);
        }
    }
    Ok(b)
}

/// Boundary row of `B` from the boundary difference
/// `D = (K_tilde - K)(0, .)`:
/// `B(0,t) = D(t) + int_0^t D(s) L(s,t) ds` (trapezoid).
///
/// `d` must be sampled on the grid's `t` nodes, `0, h, ..., 2`.
pub fn boundary_b0(
    d: &[Complex64],
    l: &TriangularKernelGrid,
) -> Result<Vec<Complex64>, KernelError> {
    let m = l.order();
    if d.len() != 2 * m + 1 {
        return Err(KernelError::BoundaryLengthMismatch {
            expected: 2 * m + 1,
            got: d.len(),
        });
    }
    let h = l.h;
    let mut out = Vec::with_capacity(2 * m + 1);
    for j in 0..=2 * m {
        let mut value = d[j];
        for s in 0..=j {
            let weight = if s == 0 || s == j { 0.5 * h } else { h };
            value += weight * d[s] * l.value(s, j);
        }
        out.push(value);
    }
    Ok(out)
}

/// Grows the full kernel `B` from its boundary row by the
/// characteristic iteration
/// `B_{n+1}(x,t) = int int (q(alpha+beta) - q_tilde(alpha-beta))
/// B_n(alpha-beta, alpha+beta)`, starting from `B_0(x,t) = B0(x+t)`.
///
/// Boundary samples at `t >= 2` are treated as zero, which the support
/// condition forces anyway.  Terms are summed until their sup falls
/// under `tol`.
pub fn b_from_boundary(
    b0: &[Complex64],
    q: &Potential,
    q_tilde: &Potential,
    h: f64,
    tol: f64,
) -> Result<TriangularKernelGrid, KernelError> {
    let (total, _) = b_series(b0, q, q_tilde, h, tol)?;
    let m = mesh_order(h)?;
    let meta = KernelMeta {
        description: "grown from boundary row by characteristic iteration".into(),
        budget: difference_budget(q, q_tilde),
    };
    let _ = m;
    Ok(sample_to_triangle(&total, h, KernelKind::B, meta))
}

/// Boundary remainder `g(t) = (q2 - q1)(t/2) - 4 H_t(0,t)` on the `t`
/// nodes, where `H = K - K_0` is the smooth part of the kernel.
///
/// `K_0(0,t)` is the exact half tail integral, so `H` is formed without
/// quadrature error; `H_t` uses centered differences in the interior
/// and one-sided second-order stencils at the ends.  Splitting off `g`
/// exposes the `1/z` structure of the transform `psi_2 - psi_1`:
/// `iz (psi_2 - psi_1)(z) = -K(0,0) + (1/4) int_0^2 g(t) e^{izt} dt`.
pub fn remainder_g(
    k: &TriangularKernelGrid,
    q1: &Potential,
    q2: &Potential,
) -> Result<Vec<Complex64>, KernelError> {
    if k.kind != KernelKind::K {
        return Err(KernelError::KindMismatch {
            expected: KernelKind::K,
            got: k.kind,
        });
    }
    let m = k.order();
    let h = k.h;
    let smooth: Vec<Complex64> = (0..=2 * m)
        .map(|j| {
            let half_t = j as f64 * h / 2.0;
            k.value(0, j) - 0.5 * (tail_integral(q2, half_t) - tail_integral(q1, half_t))
        })
        .collect();
    let deriv = |j: usize| -> Complex64 {
        if j == 0 {
            (-3.0 * smooth[0] + 4.0 * smooth[1] - smooth[2]) / (2.0 * h)
        } else if j == 2 * m {
            (3.0 * smooth[2 * m] - 4.0 * smooth[2 * m - 1] + smooth[2 * m - 2]) / (2.0 * h)
        } else {
            (smooth[j + 1] - smooth[j - 1]) / (2.0 * h)
        }
    };
    Ok((0..=2 * m)
        .map(|j| {
            let half_t = j as f64 * h / 2.0;
            q2.eval(half_t) - q1.eval(half_t) - 4.0 * deriv(j)
        })
        .collect())
}

/// Iteration engine behind [`b_from_boundary`], also handing back the
/// individual terms so their factorial envelope can be audited.
fn b_series(
    b0: &[Complex64],
    q: &Potential,
    q_tilde: &Potential,
    h: f64,
    tol: f64,
) -> Result<(CharGrid, Vec<CharGrid>), KernelError> {
    let m = mesh_order(h)?;
    if !(tol >= 1e-12) {
        return Err(KernelError::BadTolerance { tol });
    }
    let n2 = 2 * m;
    if b0.len() != n2 + 1 {
        return Err(KernelError::BoundaryLengthMismatch {
            expected: n2 + 1,
            got: b0.len(),
        });
    }
    let mut cell_dq = vec![Complex64::new(0.0, 0.0); n2 * n2];
    for a in 0..n2 {
        for b in 0..n2 {
            if b >= a {
                continue;
            }
            let v_center = (a as f64 + b as f64 + 1.0) * h / 2.0;
            let u_center = (a as f64 - b as f64) * h / 2.0;
            cell_dq[a * n2 + b] =
                tent_average(q, v_center, h / 2.0) - tent_average(q_tilde, u_center, h / 2.0);
        }
    }
    series_sum(
        n2,
        tol,
        |start: &mut CharGrid| {
            for a in 0..=n2 {
                let value = if a < n2 {
                    b0[a]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                for b in 0..=a {
                    start.set(a, b, value);
                }
            }
        },
        |prev: &CharGrid| {
            let table = cumulative_cells(prev, &cell_dq, h);
            let mut next = CharGrid::new(n2);
            let width = n2 + 1;
            for a in 0..=n2 {
                for b in 0..=a {
                    next.set(a, b, 0.25 * (table[a * width + a] - table[a * width + b]));
                }
            }
            next
        },
    )
}
