//! Membership in Γ, the set of matrices A for which ½xᵀAx has an
//! integer-valued majorant with discrete Laplacian ≤ stable_max, and the
//! boundary height c₀(a, b) = sup{c : M(a,b,c) ∈ Γ}.
//!
//! For A with entries in (1/n)ℤ, A ∈ Γ iff η = Δ¹⌈q_A⌉ stabilizes on the
//! torus of side 2n. Everything here is exact integer arithmetic.

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::lattice::{stabilize, ChipConfig, Domain, Lattice, Status};
use crate::symmat::RationalSym2;
use crate::{Error, Result};

/// Largest torus side a c₀ probe may use unless configured otherwise.
pub const DEFAULT_TORUS_CAP: usize = 4096;

fn ceil_div(num: i128, den: i128) -> i128 {
    let q = num.div_euclid(den);
    if num.rem_euclid(den) == 0 {
        q
    } else {
        q + 1
    }
}

/// ⌈q_A⌉ for q_A(x) = ½xᵀAx, with A given in lattice coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticLift {
    pub a: RationalSym2,
    /// Period of ⌈q_A⌉ − q_A: twice the common denominator of A.
    pub period: usize,
}

impl QuadraticLift {
    pub fn new(a: RationalSym2) -> Self {
        QuadraticLift {
            a,
            period: 2 * a.den() as usize,
        }
    }

    /// ⌈½xᵀAx⌉ at an arbitrary lattice point, exactly.
    pub fn ceil_q(&self, x: i64, y: i64) -> i64 {
        let [n11, n12, n22] = self.a.numerators().map(|v| v as i128);
        let (x, y) = (x as i128, y as i128);
        let num = n11 * x * x + 2 * n12 * x * y + n22 * y * y;
        ceil_div(num, 2 * self.a.den() as i128) as i64
    }

    /// ⌈q_A⌉ − q_A at a lattice point, exactly.
    pub fn fractional_gap(&self, x: i64, y: i64) -> Rational64 {
        let [n11, n12, n22] = self.a.numerators();
        let num = n11 * x * x + 2 * n12 * x * y + n22 * y * y;
        Rational64::from_integer(self.ceil_q(x, y)) - Rational64::new(num, 2 * self.a.den())
    }

    /// Δ¹⌈q_A⌉ on the torus of side `period`.
    pub fn eta(&self, lattice: Lattice) -> ChipConfig {
        self.eta_on(lattice, self.period)
    }

    /// Δ¹⌈q_A⌉ sampled on [0, m)², evaluated with true ℤ² neighbors.
    pub fn eta_on(&self, lattice: Lattice, m: usize) -> ChipConfig {
        let side = m + 2;
        let mut cq = vec![0i64; side * side];
        for yy in 0..side {
            for xx in 0..side {
                cq[yy * side + xx] = self.ceil_q(xx as i64 - 1, yy as i64 - 1);
            }
        }
        let offsets = lattice.offsets();
        let mut values = Vec::with_capacity(m * m);
        for y in 0..m {
            for x in 0..m {
                let c = cq[(y + 1) * side + x + 1];
                let mut s = 0i64;
                for &(dx, dy) in offsets {
                    let nx = (x as i64 + 1 + dx) as usize;
                    let ny = (y as i64 + 1 + dy) as usize;
                    s += cq[ny * side + nx] - c;
                }
                values.push(s as i32);
            }
        }
        ChipConfig {
            domain: Domain::Torus { m },
            lattice,
            values,
        }
    }
}

/// The Laplacian of ½xᵀAx on the lattice; the mean of η equals it.
pub fn density(a: &RationalSym2, lattice: Lattice) -> Rational64 {
    let [g11, g12, g22] = a.entries();
    match lattice {
        Lattice::Square => g11 + g22,
        Lattice::Triangular => (g11 + g22 - g12) * 2,
    }
}

/// η = Δ¹⌈q_A⌉ on the 2n-torus.
pub fn build_eta(a: &RationalSym2, lattice: Lattice) -> ChipConfig {
    QuadraticLift::new(*a).eta(lattice)
}

pub fn gamma_member(a: &RationalSym2, lattice: Lattice) -> Result<bool> {
    let (_, _, status) = stabilize(&build_eta(a, lattice))?;
    Ok(status == Status::Stable)
}

/// Gram form in lattice coordinates of the Euclidean Hessian ⅔M(a, b, c)
/// with b = √3·β, so that its triangular-lattice Laplacian equals c.
pub fn triangular_gram(a: Rational64, beta: Rational64, c: Rational64) -> RationalSym2 {
    let r = |n: i64, d: i64| Rational64::new(n, d);
    RationalSym2::from_entries(
        (c + a) / 3,
        (c + a) / 6 + beta * r(1, 2),
        (c * 2 - a) / 6 + beta * r(1, 2),
    )
}

/// The probe matrix at height c above the pixel (a, b); for the triangular
/// lattice the second coordinate is β = b/√3.
pub fn probe_matrix(a: Rational64, b: Rational64, c: Rational64, lattice: Lattice) -> RationalSym2 {
    match lattice {
        Lattice::Square => RationalSym2::from_params(a, b, c),
        Lattice::Triangular => triangular_gram(a, b, c),
    }
}

/// Bisection bracket: density below the edge count per site always
/// stabilizes, density above stable_max never does.
pub fn search_range(lattice: Lattice) -> (Rational64, Rational64) {
    match lattice {
        Lattice::Square => (Rational64::from_integer(2), Rational64::from_integer(3)),
        Lattice::Triangular => (Rational64::from_integer(3), Rational64::from_integer(5)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct C0Interval {
    #[serde(serialize_with = "ser_rational")]
    pub lo: Rational64,
    #[serde(serialize_with = "ser_rational")]
    pub hi: Rational64,
    /// hi − lo reached the requested precision.
    pub certified: bool,
    pub probes: u32,
}

fn ser_rational<S: serde::Serializer>(q: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

impl C0Interval {
    pub fn width(&self) -> Rational64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        ((self.lo + self.hi) / 2).to_f64().unwrap_or(f64::NAN)
    }

    pub fn contains(&self, c: Rational64) -> bool {
        self.lo <= c && c <= self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct C0Options {
    pub lattice: Lattice,
    pub torus_cap: usize,
}

impl Default for C0Options {
    fn default() -> Self {
        C0Options {
            lattice: Lattice::Square,
            torus_cap: DEFAULT_TORUS_CAP,
        }
    }
}

/// Checks that `precision` is 2^−k for some k ≥ 0.
pub fn check_dyadic(precision: Rational64) -> Result<()> {
    let ok = precision > Rational64::zero()
        && *precision.numer() == 1
        && (*precision.denom() as u64).is_power_of_two();
    if ok {
        Ok(())
    } else {
        Err(Error::Invalid(format!("precision {precision} is not a power of 1/2")))
    }
}

/// c₀(a, b) on the square lattice with the default torus cap.
pub fn c0(a: Rational64, b: Rational64, precision: Rational64) -> Result<C0Interval> {
    c0_with(a, b, precision, C0Options::default())
}

/// Certified bisection for c₀. lo is a member (or the bracket's lower end),
/// hi a non-member (or the upper end). If a probe would need a torus larger
/// than the cap, the bisection stops early and the interval is uncertified.
pub fn c0_with(a: Rational64, b: Rational64, precision: Rational64, opts: C0Options) -> Result<C0Interval> {
    check_dyadic(precision)?;
    let (mut lo, mut hi) = search_range(opts.lattice);
    let mut probes = 0;
    while hi - lo > precision {
        let mid = (lo + hi) / 2;
        let m = probe_matrix(a, b, mid, opts.lattice);
        if 2 * m.den() as usize > opts.torus_cap {
            break;
        }
        probes += 1;
        if gamma_member(&m, opts.lattice)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(C0Interval {
        lo,
        hi,
        certified: hi - lo <= precision,
        probes,
    })
}

/// Axis-aligned parameter rectangle [a0, a1] × [b0, b1].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub a0: Rational64,
    pub a1: Rational64,
    pub b0: Rational64,
    pub b1: Rational64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryRaster {
    pub rect: Rect,
    pub width: usize,
    pub height: usize,
    pub precision: Rational64,
    pub lattice: Lattice,
    /// Row-major from (a0, b0); pixel (i, j) sits at [`pixel`](Self::pixel).
    pub cells: Vec<C0Interval>,
}

fn grid_coord(lo: Rational64, hi: Rational64, i: usize, n: usize) -> Rational64 {
    if n <= 1 {
        lo
    } else {
        lo + (hi - lo) * Rational64::new(i as i64, n as i64 - 1)
    }
}

impl BoundaryRaster {
    pub fn pixel(&self, i: usize, j: usize) -> (Rational64, Rational64) {
        (
            grid_coord(self.rect.a0, self.rect.a1, i, self.width),
            grid_coord(self.rect.b0, self.rect.b1, j, self.height),
        )
    }

    pub fn cell(&self, i: usize, j: usize) -> &C0Interval {
        &self.cells[j * self.width + i]
    }

    pub fn all_certified(&self) -> bool {
        self.cells.iter().all(|c| c.certified)
    }

    /// Gray level per pixel from the interval midpoint: the bracket's lower
    /// height is white and one unit above it is black. Rows run from b1 down.
    pub fn image(&self) -> Vec<u8> {
        let (base, _) = search_range(self.lattice);
        let base = base.to_f64().unwrap();
        let mut out = Vec::with_capacity(self.cells.len());
        for j in (0..self.height).rev() {
            for i in 0..self.width {
                let t = (self.cell(i, j).mid() - base).clamp(0.0, 1.0);
                out.push((255.0 * (1.0 - t)).round() as u8);
            }
        }
        out
    }

    /// CSV with columns a,b,lo,hi,certified.
    pub fn csv(&self) -> String {
        let mut s = String::from("a,b,lo,hi,certified\n");
        for j in 0..self.height {
            for i in 0..self.width {
                let (a, b) = self.pixel(i, j);
                let c = self.cell(i, j);
                let f = |q: Rational64| q.to_f64().unwrap();
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    f(a),
                    f(b),
                    f(c.lo),
                    f(c.hi),
                    c.certified
                ));
            }
        }
        s
    }

    /// Largest excess of lo(p) − hi(q) over |p − q| + precision between
    /// horizontally or vertically adjacent pixels; ≤ 0 when 1-Lipschitz.
    pub fn lipschitz_excess(&self) -> f64 {
        let prec = self.precision.to_f64().unwrap();
        let mut worst = f64::NEG_INFINITY;
        let dist = |p: (Rational64, Rational64), q: (Rational64, Rational64)| {
            let da = (p.0 - q.0).to_f64().unwrap();
            let db = (p.1 - q.1).to_f64().unwrap();
            match self.lattice {
                Lattice::Square => da.hypot(db),
                Lattice::Triangular => da.hypot(db * 3f64.sqrt()),
            }
        };
        for j in 0..self.height {
            for i in 0..self.width {
                let mut nbrs = Vec::new();
                if i + 1 < self.width {
                    nbrs.push((i + 1, j));
                }
                if j + 1 < self.height {
                    nbrs.push((i, j + 1));
                }
                for (k, l) in nbrs {
                    let (p, q) = (self.cell(i, j), self.cell(k, l));
                    let d = dist(self.pixel(i, j), self.pixel(k, l));
                    let e1 = (p.lo - q.hi).to_f64().unwrap() - d - prec;
                    let e2 = (q.lo - p.hi).to_f64().unwrap() - d - prec;
                    worst = worst.max(e1).max(e2);
                }
            }
        }
        worst
    }
}

/// c₀ over a W × H grid of the rectangle; pixels are independent tasks and
/// the result does not depend on the thread pool.
pub fn raster_gamma(
    rect: Rect,
    grid: (usize, usize),
    precision: Rational64,
    opts: C0Options,
) -> Result<BoundaryRaster> {
    check_dyadic(precision)?;
    let (w, h) = grid;
    if w == 0 || h == 0 {
        return Err(Error::Invalid("empty grid".into()));
    }
    let cells = (0..w * h)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % w, k / w);
            let a = grid_coord(rect.a0, rect.a1, i, w);
            let b = grid_coord(rect.b0, rect.b1, j, h);
            c0_with(a, b, precision, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryRaster {
        rect,
        width: w,
        height: h,
        precision,
        lattice: opts.lattice,
        cells,
    })
}

/// Mean of η over its torus, as an exact rational.
pub fn eta_mean(eta: &ChipConfig) -> Rational64 {
    Rational64::new(eta.sum(), eta.values.len() as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    #[test]
    fn ceil_division() {
        assert_eq!(ceil_div(7, 2), 4);
        assert_eq!(ceil_div(-7, 2), -3);
        assert_eq!(ceil_div(6, 3), 2);
        assert_eq!(ceil_div(-6, 3), -2);
    }

    #[test]
    fn identity_has_density_two() {
        let a = RationalSym2::from_params(q(0, 1), q(0, 1), q(2, 1));
        let eta = build_eta(&a, Lattice::Square);
        assert_eq!(eta_mean(&eta), q(2, 1));
    }

    #[test]
    fn zero_matrix_gives_zero() {
        let a = RationalSym2::from_params(q(0, 1), q(0, 1), q(0, 1));
        let eta = build_eta(&a, Lattice::Square);
        assert!(eta.values.iter().all(|&v| v == 0));
    }

    #[test]
    fn half_integer_example() {
        // M(1, 0, 5/2) = diag(7/4, 3/4): n = 4, torus side 8.
        let a = RationalSym2::from_params(q(1, 1), q(0, 1), q(5, 2));
        let eta = build_eta(&a, Lattice::Square);
        assert_eq!(eta.domain, Domain::Torus { m: 8 });
        // Independent brute force over the same torus.
        let cq = |x: i64, y: i64| -> i64 {
            let twice = q(7, 4) * x * x + q(3, 4) * y * y;
            (twice / 2).ceil().to_integer()
        };
        let mut total = 0i64;
        for y in 0..8 {
            for x in 0..8 {
                let v = cq(x + 1, y) + cq(x - 1, y) + cq(x, y + 1) + cq(x, y - 1) - 4 * cq(x, y);
                assert_eq!(eta.get(x, y), Some(v as i32));
                total += v;
            }
        }
        assert_eq!(q(total, 64), q(5, 2));
    }

    #[test]
    fn trace_facts() {
        let low = RationalSym2::from_params(q(0, 1), q(0, 1), q(1, 1));
        assert!(gamma_member(&low, Lattice::Square).unwrap());
        let high = RationalSym2::from_params(q(0, 1), q(0, 1), q(7, 2));
        assert!(!gamma_member(&high, Lattice::Square).unwrap());
    }

    #[test]
    fn triangular_gram_density() {
        let g = triangular_gram(q(1, 2), q(1, 3), q(7, 2));
        assert_eq!(density(&g, Lattice::Triangular), q(7, 2));
        let eta = build_eta(&g, Lattice::Triangular);
        assert_eq!(eta_mean(&eta), q(7, 2));
    }

    #[test]
    fn precision_must_be_dyadic() {
        assert!(check_dyadic(q(1, 64)).is_ok());
        assert!(check_dyadic(q(1, 1)).is_ok());
        assert!(check_dyadic(q(1, 3)).is_err());
        assert!(check_dyadic(q(3, 64)).is_err());
    }

    #[test]
    fn cap_makes_interval_uncertified() {
        let opts = C0Options {
            lattice: Lattice::Square,
            torus_cap: 8,
        };
        let r = c0_with(q(0, 1), q(0, 1), q(1, 64), opts).unwrap();
        assert!(!r.certified);
        assert!(r.width() > q(1, 64));
    }
}
