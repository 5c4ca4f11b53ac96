//! Symmetric 2×2 matrices in the chart M(a,b,c) = ½[[c+a, b], [b, c−a]].
//!
//! In this chart tr M = c and det M = (c² − a² − b²)/4, so M(a,b,c) is
//! positive semidefinite iff c ≥ |(a,b)|. A proper circle with center
//! (x, y) and radius r corresponds to M(x, y, r+2); two circles are
//! externally tangent iff A₁ − A₂⁻ has rank one, where A⁻ reflects A across
//! the trace-2 plane.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{Num, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default tolerance of the floating rank-one test.
pub const RANK1_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Counterclockwise rotation by a right angle: (x, y) ↦ (−y, x).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn unit(self) -> Vec2 {
        self / self.norm()
    }

    pub fn dist(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Square as a complex number.
    pub fn square(self) -> Vec2 {
        Vec2::new(self.x * self.x - self.y * self.y, 2.0 * self.x * self.y)
    }

    /// Principal complex square root, argument in (−π/2, π/2].
    pub fn sqrt(self) -> Vec2 {
        let s = Complex64::new(self.x, self.y).sqrt();
        if s.re == 0.0 && s.im < 0.0 {
            Vec2::new(0.0, -s.im)
        } else {
            Vec2::new(s.re, s.im)
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(z: Complex64) -> Vec2 {
        Vec2::new(z.re, z.im)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

pub fn vec_square(v: Vec2) -> Vec2 {
    v.square()
}

pub fn sqrt_vector(u: Vec2) -> Vec2 {
    u.sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl Sym2 {
    pub const fn new(m11: f64, m12: f64, m22: f64) -> Self {
        Sym2 { m11, m12, m22 }
    }

    pub fn m_of(a: f64, b: f64, c: f64) -> Self {
        Sym2::new((c + a) / 2.0, b / 2.0, (c - a) / 2.0)
    }

    pub fn identity() -> Self {
        Sym2::new(1.0, 0.0, 1.0)
    }

    /// The rank-one matrix v⊗v; equals M(u, |u|) with u = v².
    pub fn outer(v: Vec2) -> Self {
        Sym2::new(v.x * v.x, v.x * v.y, v.y * v.y)
    }

    pub fn params(&self) -> (f64, f64, f64) {
        (self.m11 - self.m22, 2.0 * self.m12, self.m11 + self.m22)
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m12
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.m11 * self.m11 + 2.0 * self.m12 * self.m12 + self.m22 * self.m22).sqrt()
    }

    /// ρ̄(M(a,b,c)) = (a, b).
    pub fn rho(&self) -> Vec2 {
        let (a, b, _) = self.params();
        Vec2::new(a, b)
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.m11 * v.x + self.m12 * v.y, self.m12 * v.x + self.m22 * v.y)
    }

    /// vᵀ A v.
    pub fn quad(&self, v: Vec2) -> f64 {
        v.dot(self.apply(v))
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(self.m11 * s, self.m12 * s, self.m22 * s)
    }

    pub fn reflect_trace2(&self) -> Sym2 {
        let t = self.trace() - 2.0;
        Sym2::new(self.m11 - t, self.m12, self.m22 - t)
    }

    pub fn max_abs_diff(&self, o: &Sym2) -> f64 {
        (self.m11 - o.m11)
            .abs()
            .max((self.m12 - o.m12).abs())
            .max((self.m22 - o.m22).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.m11.is_finite() && self.m12.is_finite() && self.m22.is_finite()
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.m11 + o.m11, self.m12 + o.m12, self.m22 + o.m22)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.m11 - o.m11, self.m12 - o.m12, self.m22 - o.m22)
    }
}

pub fn m_of(a: f64, b: f64, c: f64) -> Sym2 {
    Sym2::m_of(a, b, c)
}

pub fn params_of(a: &Sym2) -> (f64, f64, f64) {
    a.params()
}

/// A⁻ = A − (tr A − 2)·I; in the chart, (a, b, c) ↦ (a, b, 4 − c).
pub fn reflect_trace2(a: &Sym2) -> Sym2 {
    a.reflect_trace2()
}

/// Scale-free rank-one test: |det D| ≤ tol·(1 + ‖D‖²) and D ≠ 0.
pub fn is_rank1(d: &Sym2, tol: f64) -> bool {
    let n = d.norm();
    n > tol && d.det().abs() <= tol * (1.0 + n * n)
}

fn check_proper(a: &Sym2) -> Result<()> {
    if a.trace() > 2.0 {
        Ok(())
    } else {
        Err(Error::Degenerate(a.trace()))
    }
}

pub fn is_ext_tangent(a1: &Sym2, a2: &Sym2, tol: f64) -> Result<bool> {
    check_proper(a1)?;
    check_proper(a2)?;
    Ok(is_rank1(&(*a1 - a2.reflect_trace2()), tol))
}

pub fn is_int_tangent(a1: &Sym2, a2: &Sym2, tol: f64) -> Result<bool> {
    check_proper(a1)?;
    check_proper(a2)?;
    Ok(is_rank1(&(*a1 - *a2), tol))
}

/// Symmetric matrix with entries in (1/den)·ℤ, stored as integer numerators
/// over the least common denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RationalSym2 {
    num: [i64; 3],
    den: i64,
}

impl RationalSym2 {
    /// Entries m11, m12, m22.
    pub fn from_entries(m11: Rational64, m12: Rational64, m22: Rational64) -> Self {
        let den = m11.denom().lcm(m12.denom()).lcm(m22.denom());
        let scale = |q: Rational64| q.numer() * (den / q.denom());
        RationalSym2 {
            num: [scale(m11), scale(m12), scale(m22)],
            den,
        }
    }

    pub fn from_params(a: Rational64, b: Rational64, c: Rational64) -> Self {
        let two = Rational64::from_integer(2);
        RationalSym2::from_entries((c + a) / two, b / two, (c - a) / two)
    }

    /// Integer numerators over [`den`](Self::den).
    pub fn numerators(&self) -> [i64; 3] {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn entries(&self) -> [Rational64; 3] {
        self.num.map(|n| Rational64::new(n, self.den))
    }

    pub fn params(&self) -> (Rational64, Rational64, Rational64) {
        let [m11, m12, m22] = self.entries();
        (m11 - m22, m12 * 2, m11 + m22)
    }

    pub fn trace(&self) -> Rational64 {
        Rational64::new(self.num[0] + self.num[2], self.den)
    }

    pub fn reflect_trace2(&self) -> Self {
        let (a, b, c) = self.params();
        RationalSym2::from_params(a, b, Rational64::from_integer(4) - c)
    }

    pub fn to_sym2(&self) -> Sym2 {
        let d = self.den as f64;
        Sym2::new(self.num[0] as f64 / d, self.num[1] as f64 / d, self.num[2] as f64 / d)
    }

    fn diff_det_is_rank1(&self, o: &RationalSym2) -> bool {
        let l = self.den.lcm(&o.den) as i128;
        let s1 = l / self.den as i128;
        let s2 = l / o.den as i128;
        let d: Vec<i128> = (0..3)
            .map(|i| self.num[i] as i128 * s1 - o.num[i] as i128 * s2)
            .collect();
        d.iter().any(|&x| x != 0) && d[0] * d[2] == d[1] * d[1]
    }

    /// Exact external tangency: A₁ − A₂⁻ has rank exactly one.
    pub fn is_ext_tangent(&self, o: &RationalSym2) -> Result<bool> {
        self.check_proper()?;
        o.check_proper()?;
        Ok(self.diff_det_is_rank1(&o.reflect_trace2()))
    }

    pub fn is_int_tangent(&self, o: &RationalSym2) -> Result<bool> {
        self.check_proper()?;
        o.check_proper()?;
        Ok(self.diff_det_is_rank1(o))
    }

    fn check_proper(&self) -> Result<()> {
        if self.trace() > Rational64::from_integer(2) {
            Ok(())
        } else {
            Err(Error::Degenerate(self.to_sym2().trace()))
        }
    }
}

/// ½xᵀHx + g·x + e.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadraticPatch {
    pub h: Sym2,
    pub g: Vec2,
    pub e: f64,
}

impl QuadraticPatch {
    pub fn new(h: Sym2, g: Vec2, e: f64) -> Self {
        QuadraticPatch { h, g, e }
    }

    pub fn value(&self, x: Vec2) -> f64 {
        0.5 * self.h.quad(x) + self.g.dot(x) + self.e
    }

    pub fn gradient(&self, x: Vec2) -> Vec2 {
        self.h.apply(x) + self.g
    }

    pub fn laplacian(&self) -> f64 {
        self.h.trace()
    }

    /// Value and gradient mismatch against another patch at x.
    pub fn mismatch(&self, o: &QuadraticPatch, x: Vec2) -> (f64, f64) {
        (
            (self.value(x) - o.value(x)).abs(),
            (self.gradient(x) - o.gradient(x)).norm(),
        )
    }

    /// [h11, h12, h22, g1, g2, e].
    pub fn coefficients(&self) -> [f64; 6] {
        [self.h.m11, self.h.m12, self.h.m22, self.g.x, self.g.y, self.e]
    }
}

/// Exact-rational counterpart of [`QuadraticPatch`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExactPatch {
    pub h: [BigRational; 3],
    pub g: [BigRational; 2],
    pub e: BigRational,
}

impl ExactPatch {
    pub fn value(&self, x: &[BigRational; 2]) -> BigRational {
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        let q = &self.h[0] * &x[0] * &x[0]
            + BigRational::from_integer(BigInt::from(2)) * &self.h[1] * &x[0] * &x[1]
            + &self.h[2] * &x[1] * &x[1];
        half * q + &self.g[0] * &x[0] + &self.g[1] * &x[1] + &self.e
    }

    pub fn gradient(&self, x: &[BigRational; 2]) -> [BigRational; 2] {
        [
            &self.h[0] * &x[0] + &self.h[1] * &x[1] + &self.g[0],
            &self.h[1] * &x[0] + &self.h[2] * &x[1] + &self.g[1],
        ]
    }
}

/// Center, signed radius of the circle of a matrix with trace > 2.
fn circle_of(a: &Sym2) -> (Vec2, f64) {
    let (x, y, c) = a.params();
    (Vec2::new(x, y), c - 2.0)
}

/// The matrix of the bounded Soddy circle of three pairwise externally
/// tangent circles given by their matrices.
///
/// Solved directly from |p − cᵢ| = r + rᵢ: differences of the three
/// equations are linear in p, leaving a quadratic in r whose least positive
/// root is the inner circle.
pub fn successor_matrix(a1: &Sym2, a2: &Sym2, a3: &Sym2) -> Result<Sym2> {
    for a in [a1, a2, a3] {
        check_proper(a)?;
    }
    let (c1, r1) = circle_of(a1);
    let (c2, r2) = circle_of(a2);
    let (c3, r3) = circle_of(a3);
    let x2 = c2 - c1;
    let x3 = c3 - c1;
    let det = 4.0 * x2.cross(x3);
    let scale = (x2.norm2() + x3.norm2()).max(f64::MIN_POSITIVE);
    if det.abs() <= 1e-14 * scale {
        return Err(Error::NoProperSuccessor);
    }
    // Rows 2x2ᵀ, 2x3ᵀ; solve M p = u + r·w.
    let solve = |u2: f64, u3: f64| {
        Vec2::new(
            (u2 * 2.0 * x3.y - u3 * 2.0 * x2.y) / det,
            (2.0 * x2.x * u3 - 2.0 * x3.x * u2) / det,
        )
    };
    let p0 = solve(
        x2.norm2() - r2 * r2 + r1 * r1,
        x3.norm2() - r3 * r3 + r1 * r1,
    );
    let p1 = solve(-2.0 * (r2 - r1), -2.0 * (r3 - r1));
    let qa = p1.norm2() - 1.0;
    let qb = 2.0 * (p0.dot(p1) - r1);
    let qc = p0.norm2() - r1 * r1;
    let roots: Vec<f64> = if qa.abs() <= 1e-14 * (qb.abs() + qc.abs()) {
        vec![-qc / qb]
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < -1e-12 * qb * qb {
            return Err(Error::NoProperSuccessor);
        }
        let s = disc.max(0.0).sqrt();
        let q = -0.5 * (qb + qb.signum() * s);
        if q == 0.0 {
            vec![0.0]
        } else {
            vec![q / qa, qc / q]
        }
    };
    let r = roots
        .into_iter()
        .filter(|r| r.is_finite() && *r > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !r.is_finite() {
        return Err(Error::NoProperSuccessor);
    }
    let p = c1 + p0 + p1 * r;
    Ok(Sym2::m_of(p.x, p.y, r + 2.0))
}

/// Result of recovering B and the αᵢ from three compatible patches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rank1Recovery {
    pub b: Sym2,
    pub alpha: [f64; 3],
    pub residual: f64,
}

/// Solves Hᵢ = B⁻ + αᵢ wᵢ⊗wᵢ with wᵢ = (pⱼ − pₖ)^⊥ by least squares on the
/// differences H₁ − H₂ and H₁ − H₃. Returns (B⁻ entries, α), or `None` if
/// the normal equations are singular.
fn solve_rank1<T>(p: &[[T; 2]; 3], h: &[[T; 3]; 3]) -> Option<([T; 3], [T; 3])>
where
    T: Clone + Num,
{
    let w: Vec<[T; 3]> = (0..3)
        .map(|i| {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            let dx = p[j][0].clone() - p[k][0].clone();
            let dy = p[j][1].clone() - p[k][1].clone();
            // (dx, dy)^⊥ = (−dy, dx); outer product entries.
            [
                dy.clone() * dy.clone(),
                T::zero() - dy.clone() * dx.clone(),
                dx.clone() * dx,
            ]
        })
        .collect();
    let two = T::one() + T::one();
    let weight = [T::one(), two.clone(), T::one()];
    // Rows of G (6 × 3) with right-hand sides.
    let mut rows: Vec<([T; 3], T, T)> = Vec::with_capacity(6);
    for e in 0..3 {
        rows.push((
            [w[0][e].clone(), T::zero() - w[1][e].clone(), T::zero()],
            h[0][e].clone() - h[1][e].clone(),
            weight[e].clone(),
        ));
        rows.push((
            [w[0][e].clone(), T::zero(), T::zero() - w[2][e].clone()],
            h[0][e].clone() - h[2][e].clone(),
            weight[e].clone(),
        ));
    }
    let mut n: [[T; 3]; 3] = std::array::from_fn(|_| std::array::from_fn(|_| T::zero()));
    let mut rhs: [T; 3] = std::array::from_fn(|_| T::zero());
    for (g, d, wt) in &rows {
        for r in 0..3 {
            for c in 0..3 {
                n[r][c] = n[r][c].clone() + wt.clone() * g[r].clone() * g[c].clone();
            }
            rhs[r] = rhs[r].clone() + wt.clone() * g[r].clone() * d.clone();
        }
    }
    let alpha = cramer3(&n, &rhs)?;
    let three = two + T::one();
    let bm: [T; 3] = std::array::from_fn(|e| {
        let s = (0..3).fold(T::zero(), |acc, i| {
            acc + h[i][e].clone() - alpha[i].clone() * w[i][e].clone()
        });
        s / three.clone()
    });
    Some((bm, alpha))
}

fn det3<T: Clone + Num>(m: &[[T; 3]; 3]) -> T {
    let c = |r: usize, k: usize| m[r][k].clone();
    c(0, 0) * (c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1)) - c(0, 1) * (c(1, 0) * c(2, 2) - c(1, 2) * c(2, 0))
        + c(0, 2) * (c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0))
}

fn cramer3<T: Clone + Num>(m: &[[T; 3]; 3], b: &[T; 3]) -> Option<[T; 3]> {
    let d = det3(m);
    if d.is_zero() {
        return None;
    }
    Some(std::array::from_fn(|col| {
        let mut mc = m.clone();
        for r in 0..3 {
            mc[r][col] = b[r].clone();
        }
        det3(&mc) / d.clone()
    }))
}

fn agreement_mismatch(p: &[Vec2; 3], q: &[QuadraticPatch; 3]) -> (f64, f64) {
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        let (dv, dg) = q[j].mismatch(&q[k], p[i]);
        worst = worst.max(dv).max(dg);
        scale = scale
            .max(q[j].value(p[i]).abs())
            .max(q[j].gradient(p[i]).norm());
    }
    (worst, scale)
}

/// Recovers B with D²qᵢ = B⁻ + αᵢ (pⱼ − pₖ)^⊥⊗(pⱼ − pₖ)^⊥ from three patches
/// that agree pairwise in value and gradient at the opposite points.
pub fn rank1_recover(p: [Vec2; 3], q: [QuadraticPatch; 3], tol: f64) -> Result<Rank1Recovery> {
    let span = (p[1] - p[0]).norm().max((p[2] - p[0]).norm());
    if (p[1] - p[0]).cross(p[2] - p[0]).abs() <= 1e-12 * span * span {
        return Err(Error::Collinear);
    }
    let (mis, scale) = agreement_mismatch(&p, &q);
    if mis > tol * scale {
        return Err(Error::IncompatiblePatches(mis));
    }
    let pts = p.map(|v| [v.x, v.y]);
    let hs = q.map(|qi| [qi.h.m11, qi.h.m12, qi.h.m22]);
    let (bm, alpha) = solve_rank1(&pts, &hs).ok_or(Error::Collinear)?;
    let bminus = Sym2::new(bm[0], bm[1], bm[2]);
    let mut residual = 0.0f64;
    let mut hscale = 1.0f64;
    for i in 0..3 {
        let w = (p[(i + 1) % 3] - p[(i + 2) % 3]).perp();
        let model = bminus + Sym2::outer(w).scale(alpha[i]);
        residual = residual.max(model.max_abs_diff(&q[i].h));
        hscale = hscale.max(q[i].h.norm());
    }
    if residual > tol * hscale {
        return Err(Error::IncompatiblePatches(residual));
    }
    Ok(Rank1Recovery {
        b: bminus.reflect_trace2(),
        alpha,
        residual,
    })
}

/// Exact version of [`rank1_recover`]: returns the entries of B and the αᵢ,
/// requiring every relation to hold with zero residual.
pub fn rank1_recover_exact(
    p: &[[BigRational; 2]; 3],
    q: &[ExactPatch; 3],
) -> Result<([BigRational; 3], [BigRational; 3])> {
    let e1 = [&p[1][0] - &p[0][0], &p[1][1] - &p[0][1]];
    let e2 = [&p[2][0] - &p[0][0], &p[2][1] - &p[0][1]];
    if (&e1[0] * &e2[1] - &e1[1] * &e2[0]).is_zero() {
        return Err(Error::Collinear);
    }
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let dv = q[j].value(&p[i]) - q[k].value(&p[i]);
        let gj = q[j].gradient(&p[i]);
        let gk = q[k].gradient(&p[i]);
        if !dv.is_zero() || gj != gk {
            let approx = |r: &BigRational| r.to_string();
            return Err(Error::IncompatiblePatches(
                approx(&dv.abs()).parse::<f64>().unwrap_or(f64::NAN),
            ));
        }
    }
    let hs = [q[0].h.clone(), q[1].h.clone(), q[2].h.clone()];
    let (bm, alpha) = solve_rank1(p, &hs).ok_or(Error::Collinear)?;
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let dx = &p[j][0] - &p[k][0];
        let dy = &p[j][1] - &p[k][1];
        let w = [&dy * &dy, -(&dy * &dx), &dx * &dx];
        for e in 0..3 {
            if &bm[e] + &alpha[i] * &w[e] != hs[i][e] {
                return Err(Error::IncompatiblePatches(f64::NAN));
            }
        }
    }
    let two = BigRational::from_integer(BigInt::from(2));
    let t = &bm[0] + &bm[2] - &two;
    let b = [&bm[0] - &t, bm[1].clone(), &bm[2] - &t];
    Ok((b, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_examples() {
        assert_eq!(m_of(1.0, 0.0, 3.0), Sym2::new(2.0, 0.0, 1.0));
        assert_eq!(m_of(0.0, 0.0, 2.0), Sym2::identity());
        assert_eq!(params_of(&Sym2::new(1.0, 1.0, 1.0)), (0.0, 2.0, 2.0));
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(reflect_trace2(&m_of(1.0, 0.0, 3.0)), m_of(1.0, 0.0, 1.0));
        assert_eq!(reflect_trace2(&m_of(0.0, 0.0, 2.0)), m_of(0.0, 0.0, 2.0));
        let a = m_of(5.0, -3.0, 7.0);
        assert_eq!(reflect_trace2(&reflect_trace2(&a)), a);
    }

    #[test]
    fn tangency_examples() {
        let a1 = m_of(1.0, 0.0, 3.0);
        let a2 = m_of(3.0, 0.0, 3.0);
        assert!(is_ext_tangent(&a1, &a2, RANK1_TOL).unwrap());
        assert!(!is_ext_tangent(&a1, &a1, RANK1_TOL).unwrap());
        let big = m_of(0.0, 0.0, 4.0);
        let small = m_of(0.0, -1.0, 3.0);
        assert!(is_int_tangent(&big, &small, RANK1_TOL).unwrap());
        assert!(!is_ext_tangent(&big, &small, RANK1_TOL).unwrap());
        assert_eq!(
            is_ext_tangent(&m_of(0.0, 0.0, 2.0), &a1, RANK1_TOL),
            Err(Error::Degenerate(2.0))
        );
    }

    #[test]
    fn rational_tangency_is_exact() {
        let q = |n: i64, d: i64| Rational64::new(n, d);
        let a1 = RationalSym2::from_params(q(1, 1), q(0, 1), q(3, 1));
        let a2 = RationalSym2::from_params(q(3, 1), q(0, 1), q(3, 1));
        assert!(a1.is_ext_tangent(&a2).unwrap());
        let a3 = RationalSym2::from_params(q(3, 1), q(1, 1_000_000), q(3, 1));
        assert!(!a1.is_ext_tangent(&a3).unwrap());
    }

    #[test]
    fn rational_denominator_is_least() {
        let q = |n: i64, d: i64| Rational64::new(n, d);
        let a = RationalSym2::from_params(q(1, 1), q(0, 1), q(5, 2));
        assert_eq!(a.den(), 4);
        assert_eq!(a.numerators(), [7, 0, 3]);
        assert_eq!(a.params(), (q(1, 1), q(0, 1), q(5, 2)));
        assert_eq!(a.trace(), q(5, 2));
    }

    #[test]
    fn sqrt_vector_branch() {
        let r = sqrt_vector(Vec2::new(-4.0, 0.0));
        assert_eq!(r, Vec2::new(0.0, 2.0));
        let r = sqrt_vector(Vec2::new(-4.0, -0.0));
        assert_eq!(r, Vec2::new(0.0, 2.0));
        let u = Vec2::new(0.3, -1.7);
        let back = vec_square(sqrt_vector(u));
        assert!((back - u).norm() <= 1e-12 * u.norm());
        assert!(sqrt_vector(u).x > 0.0);
    }

    #[test]
    fn outer_is_chart_of_square() {
        let v = Vec2::new(0.8, -1.3);
        let u = v.square();
        let m = Sym2::outer(v);
        let e = m_of(u.x, u.y, u.norm());
        assert!(m.max_abs_diff(&e) < 1e-15);
    }

    #[test]
    fn successor_of_equilateral_unit_triple() {
        // Descartes: k4 = 3 + 2√3, so r4 = 1/(3 + 2√3).
        let s3 = 3f64.sqrt();
        let a = [
            m_of(0.0, 2.0, 3.0),
            m_of(2.0, 2.0, 3.0),
            m_of(1.0, 2.0 + s3, 3.0),
        ];
        let b = successor_matrix(&a[0], &a[1], &a[2]).unwrap();
        let (x, y, c) = b.params();
        let r = 1.0 / (3.0 + 2.0 * s3);
        assert!((c - (r + 2.0)).abs() < 1e-12);
        assert!((x - 1.0).abs() < 1e-12);
        assert!((y - (2.0 + s3 / 3.0)).abs() < 1e-12);
        for ai in &a {
            assert!(is_ext_tangent(ai, &b, RANK1_TOL).unwrap());
        }
    }

    #[test]
    fn successor_requires_proper_inputs() {
        let a = m_of(0.0, 0.0, 3.0);
        assert!(matches!(
            successor_matrix(&a, &a, &m_of(0.0, 0.0, 2.0)),
            Err(Error::Degenerate(_))
        ));
        assert_eq!(successor_matrix(&a, &a, &a), Err(Error::NoProperSuccessor));
    }

    #[test]
    fn rank1_recover_constant_family() {
        let h = m_of(0.4, -0.2, 3.1);
        let q = QuadraticPatch::new(h, Vec2::new(0.1, 0.2), 0.3);
        let p = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.2, 0.9)];
        let r = rank1_recover(p, [q; 3], 1e-10).unwrap();
        for a in r.alpha {
            assert!(a.abs() < 1e-12);
        }
        assert!(r.b.reflect_trace2().max_abs_diff(&h) < 1e-12);
    }

    #[test]
    fn rank1_recover_rejects_collinear() {
        let q = QuadraticPatch::default();
        let p = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(2.0, 2.0)];
        assert_eq!(rank1_recover(p, [q; 3], 1e-9), Err(Error::Collinear));
    }

    #[test]
    fn rank1_recover_rejects_disagreeing_patches() {
        let p = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        let q0 = QuadraticPatch::new(Sym2::identity(), Vec2::ZERO, 0.0);
        let q1 = QuadraticPatch::new(Sym2::identity(), Vec2::ZERO, 1.0);
        assert!(matches!(
            rank1_recover(p, [q0, q1, q0], 1e-9),
            Err(Error::IncompatiblePatches(_))
        ));
    }
}
