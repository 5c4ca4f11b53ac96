use proptest::prelude::*;
use sandstone::circles::{
    band_packing, circle_to_matrix, descartes_residual, downward_packing, matrix_to_circle, soddy_circles,
    tangency_point, tangency_residual, tangent_triple, validate_geometry, Frame,
};
use sandstone::{GenCircle, Packing, Vec2};

fn unit(theta: f64) -> Vec2 {
    Vec2::new(theta.cos(), theta.sin())
}

/// Circles externally tangent to the unit circle at the given angles and
/// to each other. With tᵢ = 1 − 1/(1 + rᵢ), tangency of i and j reads
/// tᵢtⱼ = sin²(θᵢⱼ/2).
fn touching_triple(theta: [f64; 3]) -> Option<[GenCircle; 3]> {
    let half = |i: usize, j: usize| ((theta[i] - theta[j]) / 2.0).sin().abs();
    let s = [half(1, 2), half(0, 2), half(0, 1)];
    let mut out = Vec::new();
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let t = s[k] * s[j] / s[i];
        if !(t > 1e-6 && t < 1.0 - 1e-6) {
            return None;
        }
        let d = 1.0 / (1.0 - t);
        let c = unit(theta[i]) * d;
        out.push(GenCircle::proper(c.x, c.y, d - 1.0).ok()?);
    }
    Some([out[0], out[1], out[2]])
}

/// Tangency points on the unit circle of the Soddy circles of {C, Cᵢ, Cⱼ}
/// other than Cₖ.
fn successor_points(theta: [f64; 3]) -> Option<[f64; 3]> {
    let c = GenCircle::proper(0.0, 0.0, 1.0).unwrap();
    let t = touching_triple(theta)?;
    let mut out = [0.0; 3];
    for k in 0..3 {
        let (i, j) = ((k + 1) % 3, (k + 2) % 3);
        let (s1, s2) = soddy_circles(&c, &t[i], &t[j]).ok()?;
        let same = |s: &GenCircle| match (s.center(), s.radius()) {
            (Some(o), Some(r)) => o.dist(t[k].center().unwrap()) + (r - t[k].radius().unwrap()).abs(),
            _ => f64::INFINITY,
        };
        let s = if same(&s1) > same(&s2) { s1 } else { s2 };
        let p = tangency_point(&c, &s)?;
        out[k] = p.y.atan2(p.x);
    }
    Some(out)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

fn assert_tangencies(p: &Packing, tol: f64) {
    for &(i, j) in &p.edges {
        let r = tangency_residual(&p.circles[i], &p.circles[j]);
        assert!(r <= tol, "edge ({i}, {j}) residual {r:e}");
    }
}

fn assert_levels(p: &Packing) {
    for (i, parents) in p.parents.iter().enumerate() {
        if let Some(t) = parents {
            let want = t.iter().map(|&j| p.levels[j]).max().unwrap() + 1;
            assert_eq!(p.levels[i], want);
        }
    }
}

#[test]
fn band_packing_tangencies_and_levels() {
    for frame in [Frame::Paper, Frame::Ford] {
        let p = band_packing(7, frame);
        assert_tangencies(&p, 1e-9);
        assert_levels(&p);
        for c in &p.configs {
            assert!(descartes_residual(p.config_curvatures(c)) <= 1e-9);
        }
    }
    for c in &band_packing(7, Frame::Paper).circles {
        if let (Some(o), Some(r)) = (c.center(), c.radius()) {
            assert!(o.x - r >= -1e-12 && o.x + r <= 2.0 + 1e-12);
        }
    }
}

#[test]
fn congruent_level_three_is_clean() {
    let t = tangent_triple(1.0, 1.0, 1.0).unwrap();
    let p = downward_packing(&t[0], &t[1], &t[2], 3).unwrap();
    assert_eq!(p.len(), 3 + 1 + 3 + 9);
    assert_eq!(validate_geometry(&p).total_violations(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn matrix_dictionary_round_trip(x in -10.0..10.0f64, y in -10.0..10.0f64, r in 1e-3..10.0f64) {
        let c = GenCircle::proper(x, y, r).unwrap();
        let back = matrix_to_circle(&circle_to_matrix(&c).unwrap()).unwrap();
        let (o, s) = (back.center().unwrap(), back.radius().unwrap());
        prop_assert!(o.dist(Vec2::new(x, y)) <= 1e-12 * (1.0 + x.abs() + y.abs()));
        prop_assert!((s - r).abs() <= 1e-12 * (1.0 + r));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn downward_packings_obey_descartes(r in prop::array::uniform3(0.1..3.0f64)) {
        let t = tangent_triple(r[0], r[1], r[2]).unwrap();
        let p = downward_packing(&t[0], &t[1], &t[2], 5).unwrap();
        prop_assert_eq!(p.len(), 3 + (1 + 3 + 9 + 27 + 81));
        for c in &p.configs {
            prop_assert!(descartes_residual(p.config_curvatures(c)) <= 1e-9);
        }
        assert_tangencies(&p, 1e-9);
        assert_levels(&p);
        // Closed discs meet only at tangency points.
        for i in 0..p.len() {
            for j in 0..i {
                let (a, b) = (&p.circles[i], &p.circles[j]);
                let d = a.center().unwrap().dist(b.center().unwrap());
                prop_assert!(d >= a.radius().unwrap() + b.radius().unwrap() - 1e-9);
            }
        }
        let report = validate_geometry(&p);
        prop_assert_eq!(report.total_violations(), 0);
        prop_assert!(report.median_residual <= 1e-8);
    }

    #[test]
    fn tangency_points_form_an_involution(base in 0.0..std::f64::consts::TAU,
                                          gaps in (1.7..2.5f64, 1.7..2.5f64)) {
        // Arcs far from equal leave no externally touching triple.
        let theta = [base, base + gaps.0, base + gaps.0 + gaps.1];
        prop_assume!(std::f64::consts::TAU - gaps.0 - gaps.1 > 1.7);
        let y = successor_points(theta);
        prop_assume!(y.is_some());
        let x = successor_points(y.unwrap());
        prop_assume!(x.is_some());
        let x = x.unwrap();
        for t in theta {
            let nearest = x.iter().map(|&a| angle_gap(a, t)).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= 1e-8, "{theta:?} -> {x:?}");
        }
    }
}
