//! Invariant suites run by `sandstone verify`, at pinned sizes and seeds.

use std::fmt;

use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::circles::{
    band_packing, circle_to_matrix, descartes_residual, downward_packing, tangent_triple, validate_geometry, Frame,
    GenCircle,
};
use crate::fractal::{build_triangulation, triangle_from_vertices};
use crate::gamma::{c0, density, eta_mean, gamma_member, QuadraticLift};
use crate::lattice::{single_pile, stabilize_with, ChipConfig, Domain, Lattice, Order, Status};
use crate::symmat::{RationalSym2, Sym2, Vec2};

pub const DEFAULT_SEED: u64 = 20100913;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Sandpile,
    Gamma,
    Geometry,
    Fractal,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Sandpile, Suite::Gamma, Suite::Geometry, Suite::Fractal];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Sandpile => "sandpile",
            Suite::Gamma => "gamma",
            Suite::Geometry => "geometry",
            Suite::Fractal => "fractal",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<9} {:<34} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite.name(),
            self.name,
            self.detail
        )
    }
}

fn check(suite: Suite, name: &str, passed: bool, detail: String) -> Check {
    Check {
        suite,
        name: name.to_string(),
        passed,
        detail,
    }
}

pub fn run(suite: Suite, seed: u64) -> Vec<Check> {
    match suite {
        Suite::Sandpile => sandpile(seed),
        Suite::Gamma => gamma(seed),
        Suite::Geometry => geometry(seed),
        Suite::Fractal => fractal(seed),
    }
}

/// Random torus configuration with mean below 2 chips per site.
pub fn random_torus(rng: &mut ChaCha8Rng) -> ChipConfig {
    let m = rng.gen_range(3..=9);
    ChipConfig::from_fn(Domain::Torus { m }, Lattice::Square, |_, _| rng.gen_range(-2..=5))
}

fn sandpile(seed: u64) -> Vec<Check> {
    let s = Suite::Sandpile;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let orders = [Order::RowMajor, Order::RandomSweep(seed), Order::Priority];
    let (mut agree, mut stable) = (0, 0);
    for _ in 0..100 {
        let eta = random_torus(&mut rng);
        let runs: Vec<_> = orders.iter().map(|&o| stabilize_with(&eta, o)).collect();
        let ok = match (&runs[0], &runs[1], &runs[2]) {
            (Ok(a), Ok(b), Ok(c)) => {
                if a.2 == Status::Stable {
                    stable += 1;
                    a == b && b == c
                } else {
                    a.2 == b.2 && b.2 == c.2
                }
            }
            _ => false,
        };
        agree += ok as usize;
    }
    out.push(check(
        s,
        "abelian determinism (3 orders)",
        agree == 100,
        format!("{agree}/100 agree, {stable} stable"),
    ));

    let mut same = 0;
    for _ in 0..50 {
        let eta = ChipConfig::from_fn(Domain::centered(12), Lattice::Square, |x, y| {
            if x.abs() <= 3 && y.abs() <= 3 {
                rng.gen_range(0..=12)
            } else {
                0
            }
        });
        let bulk = stabilize_with(&eta, Order::Fifo);
        let unit = stabilize_with(&eta, Order::FifoUnit);
        same += (bulk.is_ok() && bulk == unit) as usize;
    }
    out.push(check(s, "bulk toppling = unit toppling", same == 50, format!("{same}/50 equal")));

    let n = 1u64 << 14;
    let detail;
    let passed = match single_pile(n, Lattice::Square, None) {
        Ok((fin, _)) => {
            detail = format!("sum {} of {n}, max {}", fin.sum(), fin.max());
            fin.sum() == n as i64 && fin.is_stable()
        }
        Err(e) => {
            detail = e.to_string();
            false
        }
    };
    out.push(check(s, "single pile conservation", passed, detail));
    out
}

/// Random rational matrix with denominator ≤ 16 and trace numerator in
/// `trace` (in units of 1/d).
fn random_rational(rng: &mut ChaCha8Rng, trace: impl Fn(i64) -> (i64, i64)) -> RationalSym2 {
    let d = rng.gen_range(1..=16i64);
    let (t0, t1) = trace(d);
    let t = rng.gen_range(t0..=t1);
    let m11 = rng.gen_range(-2 * d..=2 * d);
    let m12 = rng.gen_range(-2 * d..=2 * d);
    RationalSym2::from_entries(
        Rational64::new(m11, d),
        Rational64::new(m12, d),
        Rational64::new(t - m11, d),
    )
}

fn gamma(seed: u64) -> Vec<Check> {
    let s = Suite::Gamma;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut ok = 0;
    for _ in 0..50 {
        let a = random_rational(&mut rng, |d| (-2 * d, 2 * d - 1));
        ok += matches!(gamma_member(&a, Lattice::Square), Ok(true)) as usize;
    }
    for _ in 0..50 {
        let a = random_rational(&mut rng, |d| (3 * d + 1, 4 * d));
        ok += matches!(gamma_member(&a, Lattice::Square), Ok(false)) as usize;
    }
    out.push(check(s, "trace bounds tr<2 in, tr>3 out", ok == 100, format!("{ok}/100")));

    let mut ok = 0;
    for _ in 0..100 {
        let a = random_rational(&mut rng, |d| (0, 4 * d));
        let eta = QuadraticLift::new(a).eta(Lattice::Square);
        ok += (eta_mean(&eta) == density(&a, Lattice::Square)) as usize;
    }
    out.push(check(s, "mean of eta equals trace", ok == 100, format!("{ok}/100 exact")));

    let mut ok = 0;
    for _ in 0..20 {
        let a = random_rational(&mut rng, |d| (0, 4 * d));
        let lift = QuadraticLift::new(a);
        let n = lift.period;
        let big = lift.eta_on(Lattice::Square, 2 * n);
        let small = lift.eta(Lattice::Square);
        let periodic = (0..2 * n as i64)
            .flat_map(|y| (0..2 * n as i64).map(move |x| (x, y)))
            .all(|(x, y)| big.get(x, y) == small.get(x % n as i64, y % n as i64));
        ok += periodic as usize;
    }
    out.push(check(s, "eta is 2n-periodic", ok == 20, format!("{ok}/20")));

    let q = |n, d| Rational64::new(n, d);
    let detail;
    let passed = match (c0(q(0, 1), q(0, 1), q(1, 64)), c0(q(1, 1), q(0, 1), q(1, 64))) {
        (Ok(flat), Ok(peak)) => {
            detail = format!("c0(0,0) ∈ [{}, {}], c0(1,0) ∈ [{}, {}]", flat.lo, flat.hi, peak.lo, peak.hi);
            flat.lo >= q(2, 1)
                && flat.hi <= q(65, 32)
                && flat.certified
                && peak.certified
                && peak.hi >= q(3, 1) - q(1, 16)
        }
        (Err(e), _) | (_, Err(e)) => {
            detail = e.to_string();
            false
        }
    };
    out.push(check(s, "c0 at (0,0) and (1,0)", passed, detail));

    let members: Vec<bool> = (0..=8)
        .map(|k| gamma_member(&RationalSym2::from_params(q(1, 2), q(1, 4), q(2, 1) + q(k, 8)), Lattice::Square))
        .collect::<Result<_, _>>()
        .unwrap_or_default();
    // Members first, then non-members, with at least one of each.
    let monotone = members.first() == Some(&true)
        && members.last() == Some(&false)
        && members.windows(2).all(|w| w[0] || !w[1]);
    out.push(check(
        s,
        "membership monotone in trace",
        monotone,
        format!("{members:?}"),
    ));
    out
}

/// Random pairwise tangent triple with radii in [0.1, 3].
pub fn random_triple(rng: &mut ChaCha8Rng) -> [GenCircle; 3] {
    let r = [0; 3].map(|_| rng.gen_range(0.1..3.0));
    tangent_triple(r[0], r[1], r[2]).expect("positive radii")
}

fn geometry(seed: u64) -> Vec<Check> {
    let s = Suite::Geometry;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let band = band_packing(10, Frame::Ford);
    let worst = band
        .configs
        .iter()
        .map(|c| descartes_residual(band.config_curvatures(c)))
        .fold(0.0, f64::max);
    out.push(check(
        s,
        "descartes identity (band, level 10)",
        worst <= 1e-9,
        format!("{} quadruples, worst {worst:.2e}", band.configs.len()),
    ));

    let mut missing = Vec::new();
    for qd in 1..=8i64 {
        for p in 0..=qd {
            if num_integer::gcd(p, qd) != 1 {
                continue;
            }
            let (x, r) = (2.0 * p as f64 / qd as f64, 1.0 / (qd * qd) as f64);
            let hit = band.circles.iter().any(|c| match *c {
                GenCircle::Proper { center, radius } => {
                    center.dist(Vec2::new(x, r)) <= 1e-9 && (radius - r).abs() <= 1e-9
                }
                GenCircle::Line { .. } => false,
            });
            if !hit {
                missing.push(format!("{p}/{qd}"));
            }
        }
    }
    out.push(check(
        s,
        "ford circles q ≤ 8",
        missing.is_empty(),
        if missing.is_empty() {
            "all present".into()
        } else {
            format!("missing {}", missing.join(" "))
        },
    ));

    let (mut violations, mut configs, mut worst_desc, mut worst_med) = (0, 0, 0.0f64, 0.0f64);
    let mut min_slack = f64::INFINITY;
    for _ in 0..20 {
        let t = random_triple(&mut rng);
        match downward_packing(&t[0], &t[1], &t[2], 4) {
            Ok(p) => {
                let rep = validate_geometry(&p);
                violations += rep.total_violations();
                configs += rep.configs_checked;
                worst_desc = worst_desc.max(rep.descartes_residual);
                worst_med = worst_med.max(rep.median_residual);
                min_slack = min_slack.min(rep.min_slack.iter().cloned().fold(f64::INFINITY, f64::min));
            }
            Err(_) => violations += 1,
        }
    }
    out.push(check(
        s,
        "angle bounds (20 triples, level 4)",
        violations == 0,
        format!("{configs} configs, {violations} violations, min slack {min_slack:.3e}"),
    ));
    out.push(check(
        s,
        "median lines and descartes",
        worst_med <= 1e-9 && worst_desc <= 1e-9,
        format!("median {worst_med:.2e}, descartes {worst_desc:.2e}"),
    ));
    out
}

fn fractal(seed: u64) -> Vec<Check> {
    let s = Suite::Fractal;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..10 {
        let v = [0; 3].map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        if let Ok(t) = triangle_from_vertices(v, 12) {
            worst = worst.max((t.area() / t.vertex_area() - 4.0 / 7.0).abs());
        }
    }
    out.push(check(
        s,
        "triangle area 4/7 (depth 12)",
        worst <= 1e-3,
        format!("worst deviation {worst:.2e}"),
    ));

    let gens: Vec<Sym2> = [(1.0, 0.0, 1.0), (1.0, 2.0, 1.0), (0.25, 1.0, 0.25)]
        .iter()
        .map(|&(x, y, r)| circle_to_matrix(&GenCircle::Proper { center: Vec2::new(x, y), radius: r }).expect("proper"))
        .collect();
    let gens = [gens[0], gens[1], gens[2]];
    match build_triangulation(&gens, 4, 12) {
        Ok(t) => {
            let ratios = t.subdivision_ratios().unwrap_or_default();
            let dev = ratios.iter().map(|r| (r - 4.0 / 21.0).abs()).fold(0.0, f64::max);
            out.push(check(
                s,
                "subdivision ratio 4/21 (level 4)",
                !ratios.is_empty() && dev <= 1e-3,
                format!("{} regions, worst deviation {dev:.2e}", ratios.len()),
            ));
            let c11 = t.verify_c11();
            out.push(check(
                s,
                "C^1,1 at meeting points",
                c11.relative() <= 1e-9,
                format!("{} points, relative {:.2e}", c11.points_checked, c11.relative()),
            ));
            let pm = t.packing_mismatch().unwrap_or(f64::INFINITY);
            out.push(check(s, "Hessians in downward packing", pm <= 1e-9, format!("worst {pm:.2e}")));
            let angles = t.meeting_angle_errors(14).unwrap_or_default();
            let wa = angles.iter().cloned().fold(0.0, f64::max);
            out.push(check(
                s,
                "right-angle meetings (depth 14)",
                !angles.is_empty() && wa <= 1e-6,
                format!("{} meetings, worst {wa:.2e}", angles.len()),
            ));
        }
        Err(e) => out.push(check(s, "build triangulation", false, e.to_string())),
    }
    out
}
