use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;
use sandstone::circles::{circle_to_matrix, successor_circle};
use sandstone::symmat::{
    is_ext_tangent, params_of, rank1_recover, rank1_recover_exact, sqrt_vector, successor_matrix, vec_square,
    ExactPatch, RANK1_TOL,
};
use sandstone::{GenCircle, QuadraticPatch, Sym2, Vec2};

/// Three pairwise externally tangent circles, rotated by `theta` and moved
/// by `shift`.
fn tangent_triple(r: [f64; 3], theta: f64, shift: Vec2) -> [(Vec2, f64); 3] {
    let (d12, d13, d23) = (r[0] + r[1], r[0] + r[2], r[1] + r[2]);
    let x3 = (d12 * d12 + d13 * d13 - d23 * d23) / (2.0 * d12);
    let y3 = (d13 * d13 - x3 * x3).sqrt();
    let (s, c) = theta.sin_cos();
    let place = |x: f64, y: f64| Vec2::new(c * x - s * y, s * x + c * y) + shift;
    [(place(0.0, 0.0), r[0]), (place(d12, 0.0), r[1]), (place(x3, y3), r[2])]
}

/// Complex Descartes: the inner circle of the curvilinear triangle.
fn descartes_inner(t: &[(Vec2, f64); 3]) -> (Vec2, f64) {
    let k: Vec<f64> = t.iter().map(|c| 1.0 / c.1).collect();
    let z: Vec<Complex64> = t.iter().map(|c| Complex64::new(c.0.x, c.0.y)).collect();
    let k4 = k[0] + k[1] + k[2] + 2.0 * (k[0] * k[1] + k[1] * k[2] + k[2] * k[0]).sqrt();
    let lin = z[0] * k[0] + z[1] * k[1] + z[2] * k[2];
    let root = (z[0] * z[1] * k[0] * k[1] + z[1] * z[2] * k[1] * k[2] + z[2] * z[0] * k[2] * k[0]).sqrt() * 2.0;
    let r4 = 1.0 / k4;
    let defect = |w: Complex64| -> f64 {
        t.iter()
            .map(|c| ((w - Complex64::new(c.0.x, c.0.y)).norm() - (c.1 + r4)).abs())
            .fold(0.0, f64::max)
    };
    let (a, b) = ((lin + root) / k4, (lin - root) / k4);
    let w = if defect(a) <= defect(b) { a } else { b };
    (Vec2::new(w.re, w.im), r4)
}

fn m(center: Vec2, r: f64) -> Sym2 {
    Sym2::m_of(center.x, center.y, r + 2.0)
}

fn params_close(a: &Sym2, b: &Sym2, tol: f64) -> bool {
    let (p, q) = (params_of(a), params_of(b));
    (p.0 - q.0).abs() <= tol && (p.1 - q.1).abs() <= tol && (p.2 - q.2).abs() <= tol
}

#[test]
fn chart_examples() {
    assert_eq!(Sym2::m_of(1.0, 0.0, 3.0), Sym2::new(2.0, 0.0, 1.0));
    assert_eq!(Sym2::m_of(0.0, 0.0, 2.0), Sym2::identity());
    assert_eq!(params_of(&Sym2::new(1.0, 1.0, 1.0)), (0.0, 2.0, 2.0));
}

#[test]
fn tangency_examples() {
    let a1 = Sym2::m_of(1.0, 0.0, 3.0);
    assert!(is_ext_tangent(&a1, &Sym2::m_of(3.0, 0.0, 3.0), RANK1_TOL).unwrap());
    assert!(!is_ext_tangent(&a1, &a1, RANK1_TOL).unwrap());
    assert_eq!(a1.reflect_trace2(), Sym2::m_of(1.0, 0.0, 1.0));
}

#[test]
fn successor_of_unit_row() {
    let s3 = 3f64.sqrt();
    let t = [(Vec2::new(0.0, 2.0), 1.0), (Vec2::new(2.0, 2.0), 1.0), (Vec2::new(1.0, 2.0 + s3), 1.0)];
    let (c4, r4) = descartes_inner(&t);
    assert!((r4 - 1.0 / (3.0 + 2.0 * s3)).abs() < 1e-15);
    let b = successor_matrix(&m(t[0].0, 1.0), &m(t[1].0, 1.0), &m(t[2].0, 1.0)).unwrap();
    assert!(params_close(&b, &m(c4, r4), 1e-12));
}

/// Patches Hᵢ = B⁻ + αᵢ wᵢ⊗wᵢ whose rank-one parts vanish to second order on
/// the edge opposite pᵢ, plus a shared affine part.
fn forward_patches(b: Sym2, alpha: [f64; 3], p: [Vec2; 3], g: Vec2, e: f64) -> [QuadraticPatch; 3] {
    let bm = b.reflect_trace2();
    std::array::from_fn(|i| {
        let pj = p[(i + 1) % 3];
        let w = (pj - p[(i + 2) % 3]).perp();
        let s = w.dot(pj);
        QuadraticPatch::new(bm + Sym2::outer(w).scale(alpha[i]), g - w * (alpha[i] * s), e + 0.5 * alpha[i] * s * s)
    })
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn exact_forward(
    b: [BigRational; 3],
    alpha: &[BigRational; 3],
    p: &[[BigRational; 2]; 3],
    g: &[BigRational; 2],
    e: &BigRational,
) -> [ExactPatch; 3] {
    let two = q(2, 1);
    let t = &b[0] + &b[2] - &two;
    let bm = [&b[0] - &t, b[1].clone(), &b[2] - &t];
    std::array::from_fn(|i| {
        let (pj, pk) = (&p[(i + 1) % 3], &p[(i + 2) % 3]);
        let (dx, dy) = (&pj[0] - &pk[0], &pj[1] - &pk[1]);
        let w = [-dy.clone(), dx.clone()];
        let s = &w[0] * &pj[0] + &w[1] * &pj[1];
        let a = &alpha[i];
        ExactPatch {
            h: [
                &bm[0] + a * &w[0] * &w[0],
                &bm[1] + a * &w[0] * &w[1],
                &bm[2] + a * &w[1] * &w[1],
            ],
            g: [&g[0] - a * &s * &w[0], &g[1] - a * &s * &w[1]],
            e: e + a * &s * &s / &two,
        }
    })
}

fn small_rational() -> impl Strategy<Value = (i64, i64)> {
    (-40i64..=40, 1i64..=12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chart_round_trip(a in -50i32..50, b in -50i32..50, c in -50i32..50) {
        // Quarter-integers keep every operation exact.
        let (a, b, c) = (a as f64 / 4.0, b as f64 / 4.0, c as f64 / 4.0);
        let s = Sym2::m_of(a, b, c);
        prop_assert_eq!(params_of(&s), (a, b, c));
        prop_assert_eq!(s.trace(), c);
    }

    #[test]
    fn reflection_is_an_involution_fixing_ab(a in -1e3..1e3f64, b in -1e3..1e3f64, c in -1e3..1e3f64,
                                             a2 in -1e3..1e3f64, b2 in -1e3..1e3f64) {
        let s = Sym2::m_of(a, b, c);
        let r = s.reflect_trace2();
        prop_assert!(r.reflect_trace2().max_abs_diff(&s) <= 1e-12 * (1.0 + s.norm()));
        let (ra, rb, rc) = params_of(&r);
        prop_assert!((ra - a).abs() <= 1e-12 * (1.0 + a.abs()) && (rb - b).abs() <= 1e-12 * (1.0 + b.abs()));
        prop_assert!((rc - (4.0 - c)).abs() <= 1e-12 * (1.0 + c.abs()));
        // Distances in (a, b) are unchanged.
        let t = Sym2::m_of(a2, b2, c);
        let (pa, pb, _) = params_of(&t.reflect_trace2());
        let before = (a - a2).hypot(b - b2);
        let after = (ra - pa).hypot(rb - pb);
        prop_assert!((before - after).abs() <= 1e-9 * (1.0 + before));
    }

    #[test]
    fn sqrt_vector_squares_back(x in -1e6..1e6f64, y in -1e6..1e6f64) {
        let u = Vec2::new(x, y);
        let back = vec_square(sqrt_vector(u));
        prop_assert!((back - u).norm() <= 1e-12 * u.norm().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matrix_tangency_matches_geometry(x1 in -5.0..5.0f64, y1 in -5.0..5.0f64, r1 in 0.05..4.0f64,
                                        r2 in 0.05..4.0f64, theta in 0.0..std::f64::consts::TAU,
                                        gap in prop_oneof![Just(0.0), 1e-3..3.0f64, -0.5..-1e-3f64]) {
        let c1 = Vec2::new(x1, y1);
        let d = (r1 + r2 + gap).max(0.0);
        let c2 = c1 + Vec2::new(theta.cos(), theta.sin()) * d;
        prop_assume!(gap == 0.0 || (d - (r1 + r2)).abs() >= 1e-3);
        let geometric = (c1.dist(c2) - (r1 + r2)).abs() <= 1e-9;
        prop_assert_eq!(is_ext_tangent(&m(c1, r1), &m(c2, r2), RANK1_TOL).unwrap(), geometric);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn successor_matrix_is_descartes(r1 in 0.1..3.0f64, r2 in 0.1..3.0f64, r3 in 0.1..3.0f64,
                                     theta in 0.0..std::f64::consts::TAU, sx in -4.0..4.0f64, sy in -4.0..4.0f64) {
        let t = tangent_triple([r1, r2, r3], theta, Vec2::new(sx, sy));
        let (c4, r4) = descartes_inner(&t);
        let mats = t.map(|(c, r)| m(c, r));
        let b = successor_matrix(&mats[0], &mats[1], &mats[2]).unwrap();
        prop_assert!(params_close(&b, &m(c4, r4), 1e-9), "{:?} vs {:?}", params_of(&b), (c4, r4));
        let circles = t.map(|(c, r)| GenCircle::proper(c.x, c.y, r).unwrap());
        let s = successor_circle(&circles[0], &circles[1], &circles[2]).unwrap();
        prop_assert!(params_close(&circle_to_matrix(&s).unwrap(), &b, 1e-9));
    }

    #[test]
    fn rank1_round_trip_float(b in (-2.0..2.0f64, -2.0..2.0f64, 2.1..6.0f64),
                              alpha in prop::array::uniform3(-3.0..3.0f64),
                              p in prop::array::uniform3((-2.0..2.0f64, -2.0..2.0f64)),
                              g in (-1.0..1.0f64, -1.0..1.0f64), e in -1.0..1.0f64) {
        let p = p.map(|(x, y)| Vec2::new(x, y));
        prop_assume!((p[1] - p[0]).cross(p[2] - p[0]).abs() > 0.2);
        let b = Sym2::m_of(b.0, b.1, b.2);
        let patches = forward_patches(b, alpha, p, Vec2::new(g.0, g.1), e);
        let r = rank1_recover(p, patches, RANK1_TOL).unwrap();
        prop_assert!(r.b.max_abs_diff(&b) <= 1e-10, "{:?} vs {:?}", r.b, b);
        for i in 0..3 {
            prop_assert!((r.alpha[i] - alpha[i]).abs() <= 1e-10);
        }
    }

    #[test]
    fn rank1_round_trip_exact(b in prop::array::uniform3(small_rational()),
                              alpha in prop::array::uniform3(small_rational()),
                              p in prop::array::uniform3((small_rational(), small_rational())),
                              g in prop::array::uniform2(small_rational()), e in small_rational()) {
        let r = |(n, d): (i64, i64)| q(n, d);
        let p = p.map(|(x, y)| [r(x), r(y)]);
        let e1 = [&p[1][0] - &p[0][0], &p[1][1] - &p[0][1]];
        let e2 = [&p[2][0] - &p[0][0], &p[2][1] - &p[0][1]];
        prop_assume!(&e1[0] * &e2[1] != &e1[1] * &e2[0]);
        let b = b.map(r);
        let alpha = alpha.map(r);
        let patches = exact_forward(b.clone(), &alpha, &p, &g.map(r), &r(e));
        let (rb, ra) = rank1_recover_exact(&p, &patches).unwrap();
        prop_assert_eq!(rb, b);
        prop_assert_eq!(ra, alpha);
    }
}
