use num_rational::Rational64;
use proptest::prelude::*;
use sandstone::gamma::{build_eta, c0, gamma_member, probe_matrix, raster_gamma, triangular_gram, C0Options, Rect};
use sandstone::{Lattice, QuadraticLift, RationalSym2};

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn mean(values: &[i32]) -> Rational64 {
    r(values.iter().map(|&v| v as i64).sum(), values.len() as i64)
}

/// Δ of ½xᵀGx on a lattice is Σ over neighbor offsets e of ½eᵀGe.
fn quadratic_laplacian(g: &RationalSym2, lattice: Lattice) -> Rational64 {
    let [g11, g12, g22] = g.entries();
    lattice
        .offsets()
        .iter()
        .map(|&(x, y)| (g11 * x * x + g12 * x * y * 2 + g22 * y * y) / 2)
        .sum()
}

fn rational() -> impl Strategy<Value = Rational64> {
    (-24i64..=24, 1i64..=6).prop_map(|(n, d)| r(n, d))
}

#[test]
fn eta_examples() {
    let id = RationalSym2::from_params(r(0, 1), r(0, 1), r(2, 1));
    assert_eq!(mean(&build_eta(&id, Lattice::Square).values), r(2, 1));
    let zero = RationalSym2::from_entries(r(0, 1), r(0, 1), r(0, 1));
    assert!(build_eta(&zero, Lattice::Square).values.iter().all(|&v| v == 0));
    let a = RationalSym2::from_params(r(1, 1), r(0, 1), r(5, 2));
    // Entries 7/4 and 3/4 give the 8-torus, but η is already 4-periodic.
    let eta = build_eta(&a, Lattice::Square);
    assert_eq!(eta.domain.width(), 8);
    assert_eq!(mean(&eta.values), r(5, 2));
    let t4 = QuadraticLift::new(a).eta_on(Lattice::Square, 4);
    for (x, y) in (0..8).flat_map(|y| (0..8).map(move |x| (x, y))) {
        assert_eq!(eta.values[y * 8 + x], t4.values[(y % 4) * 4 + x % 4]);
    }
    assert_eq!(mean(&t4.values), r(5, 2));
}

#[test]
fn membership_examples() {
    let m = |a: Rational64, c: Rational64| RationalSym2::from_params(a, r(0, 1), c);
    assert!(gamma_member(&m(r(0, 1), r(1, 1)), Lattice::Square).unwrap());
    assert!(!gamma_member(&m(r(0, 1), r(7, 2)), Lattice::Square).unwrap());
    assert!(gamma_member(&m(r(1, 1), r(47, 16)), Lattice::Square).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mean_of_eta_is_the_laplacian(g11 in rational(), g12 in rational(), g22 in rational(), tri in any::<bool>()) {
        let lattice = if tri { Lattice::Triangular } else { Lattice::Square };
        let g = RationalSym2::from_entries(g11, g12, g22);
        let eta = build_eta(&g, lattice);
        prop_assert_eq!(mean(&eta.values), quadratic_laplacian(&g, lattice));
        if !tri {
            prop_assert_eq!(mean(&eta.values), g11 + g22);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn eta_is_periodic(g11 in rational(), g12 in rational(), g22 in rational(), tri in any::<bool>()) {
        let lattice = if tri { Lattice::Triangular } else { Lattice::Square };
        let lift = QuadraticLift::new(RationalSym2::from_entries(g11, g12, g22));
        let n = lift.period;
        let small = lift.eta(lattice);
        let big = lift.eta_on(lattice, 2 * n);
        for (y, x) in (0..2 * n).flat_map(|y| (0..2 * n).map(move |x| (y, x))) {
            prop_assert_eq!(big.values[y * 2 * n + x], small.values[(y % n) * n + x % n]);
        }
        for (x, y) in [(0, 0), (3, -7), (-11, 5)] {
            prop_assert_eq!(lift.fractional_gap(x, y), lift.fractional_gap(x + n as i64, y));
            prop_assert_eq!(lift.fractional_gap(x, y), lift.fractional_gap(x, y - n as i64));
        }
    }

    #[test]
    fn membership_is_monotone_in_c(a in (-8i64..=8).prop_map(|n| r(n, 4)), b in (-8i64..=8).prop_map(|n| r(n, 4)),
                                   k in 0i64..16, dk in 1i64..16) {
        let lo = probe_matrix(a, b, r(2, 1) + r(k, 16), Lattice::Square);
        let hi = probe_matrix(a, b, r(2, 1) + r(k + dk, 16), Lattice::Square);
        if !gamma_member(&lo, Lattice::Square).unwrap() {
            prop_assert!(!gamma_member(&hi, Lattice::Square).unwrap());
        }
    }

    #[test]
    fn trace_facts(a in rational(), b in rational(), c in (1i64..=16).prop_map(|d| r(d, 16))) {
        let below = RationalSym2::from_params(a, b, r(2, 1) - c);
        let above = RationalSym2::from_params(a, b, r(3, 1) + c);
        prop_assert!(gamma_member(&below, Lattice::Square).unwrap());
        prop_assert!(!gamma_member(&above, Lattice::Square).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn intervals_nest(a in (0i64..=8).prop_map(|n| r(n, 4)), b in (0i64..=8).prop_map(|n| r(n, 4))) {
        let mut prev = c0(a, b, r(1, 2)).unwrap();
        for k in 2..=5 {
            let next = c0(a, b, r(1, 1 << k)).unwrap();
            prop_assert!(next.certified);
            prop_assert!(prev.lo <= next.lo && next.hi <= prev.hi);
            prop_assert!(r(2, 1) <= next.lo && next.hi <= r(3, 1));
            prev = next;
        }
    }
}

#[test]
fn triangular_gram_has_the_right_laplacian() {
    for (a, beta, c) in [(r(0, 1), r(0, 1), r(3, 1)), (r(1, 2), r(1, 3), r(7, 2)), (r(-2, 1), r(5, 4), r(4, 1))] {
        assert_eq!(quadratic_laplacian(&triangular_gram(a, beta, c), Lattice::Triangular), c);
    }
}

#[test]
fn raster_ignores_pool_size() {
    let rect = Rect {
        a0: r(0, 1),
        a1: r(2, 1),
        b0: r(0, 1),
        b1: r(1, 1),
    };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| raster_gamma(rect, (5, 3), r(1, 16), C0Options::default()).unwrap())
    };
    let (one, four) = (run(1), run(4));
    assert_eq!(one, four);
    assert_eq!(one.image(), four.image());
    assert_eq!(one.csv(), four.csv());
}
