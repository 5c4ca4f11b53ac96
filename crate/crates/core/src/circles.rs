//! Generalized circles, the circle ↔ matrix dictionary, Soddy circles and
//! Apollonian packings.
//!
//! Soddy circles come from the complex Descartes relations
//! k₄ = Σk ± 2√(k₁k₂ + k₂k₃ + k₃k₁) and w₄ = Σw ± 2√(w₁w₂ + w₂w₃ + w₃w₁),
//! where w = k·z for a proper circle and w is the unit normal pointing away
//! from the configuration for a line. Inside a packing, new circles are
//! produced by the linear reflection x' = 2(x₁ + x₂ + x₃) − x₄ applied to
//! both k and w, which needs no branch selection.

use std::collections::{HashSet, VecDeque};
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::symmat::{Sym2, Vec2};
use crate::{Error, Result};

/// Tolerance for tangency and identity checks on generated packings.
pub const GEOM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GenCircle {
    Proper { center: Vec2, radius: f64 },
    /// The line {x : normal·x = offset}; normal has unit length.
    Line { normal: Vec2, offset: f64 },
}

impl GenCircle {
    pub fn proper(x: f64, y: f64, r: f64) -> Result<Self> {
        if !(r > 0.0) || !x.is_finite() || !y.is_finite() || !r.is_finite() {
            return Err(Error::Invalid(format!("radius {r} at ({x}, {y})")));
        }
        Ok(GenCircle::Proper {
            center: Vec2::new(x, y),
            radius: r,
        })
    }

    pub fn line(normal: Vec2, offset: f64) -> Result<Self> {
        let n = normal.norm();
        if !(n > 0.0) || !n.is_finite() || !offset.is_finite() {
            return Err(Error::Invalid("line normal must be nonzero".into()));
        }
        Ok(GenCircle::Line {
            normal: normal / n,
            offset: offset / n,
        })
    }

    pub fn is_line(&self) -> bool {
        matches!(self, GenCircle::Line { .. })
    }

    pub fn curvature(&self) -> f64 {
        match self {
            GenCircle::Proper { radius, .. } => 1.0 / radius,
            GenCircle::Line { .. } => 0.0,
        }
    }

    pub fn center(&self) -> Option<Vec2> {
        match self {
            GenCircle::Proper { center, .. } => Some(*center),
            GenCircle::Line { .. } => None,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            GenCircle::Proper { radius, .. } => Some(*radius),
            GenCircle::Line { .. } => None,
        }
    }

    /// Signed distance from the boundary: negative inside a disc, and on
    /// the normal side positive for a line.
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        match self {
            GenCircle::Proper { center, radius } => p.dist(*center) - radius,
            GenCircle::Line { normal, offset } => normal.dot(p) - offset,
        }
    }

    fn translate(&self, t: Vec2) -> GenCircle {
        match *self {
            GenCircle::Proper { center, radius } => GenCircle::Proper {
                center: center + t,
                radius,
            },
            GenCircle::Line { normal, offset } => GenCircle::Line {
                normal,
                offset: offset + normal.dot(t),
            },
        }
    }
}

/// m(C) = M(cx, cy, r + 2).
pub fn circle_to_matrix(c: &GenCircle) -> Result<Sym2> {
    match c {
        GenCircle::Proper { center, radius } => Ok(Sym2::m_of(center.x, center.y, radius + 2.0)),
        GenCircle::Line { .. } => Err(Error::LineHasNoMatrix),
    }
}

pub fn matrix_to_circle(a: &Sym2) -> Result<GenCircle> {
    let (x, y, c) = a.params();
    if c > 2.0 {
        Ok(GenCircle::Proper {
            center: Vec2::new(x, y),
            radius: c - 2.0,
        })
    } else {
        Err(Error::NoCircle)
    }
}

/// Point where two tangent circles touch; `None` for two lines.
pub fn tangency_point(a: &GenCircle, b: &GenCircle) -> Option<Vec2> {
    match (a, b) {
        (
            GenCircle::Proper { center: ca, radius: ra },
            GenCircle::Proper { center: cb, radius: rb },
        ) => {
            let d = cb.dist(*ca);
            if d == 0.0 {
                return None;
            }
            let u = (*cb - *ca) / d;
            // a inside b: touching point lies on the far side of a.
            if (d + ra - rb).abs() < (d - ra - rb).abs() && ra < rb {
                Some(*ca - u * *ra)
            } else {
                Some(*ca + u * *ra)
            }
        }
        (GenCircle::Proper { center, .. }, GenCircle::Line { normal, offset })
        | (GenCircle::Line { normal, offset }, GenCircle::Proper { center, .. }) => {
            Some(*center + *normal * (offset - normal.dot(*center)))
        }
        _ => None,
    }
}

/// Tangency defect of two generalized circles, relative to `scale`;
/// external and internal tangency both count.
pub fn tangency_residual(a: &GenCircle, b: &GenCircle) -> f64 {
    match (a, b) {
        (
            GenCircle::Proper { center: ca, radius: ra },
            GenCircle::Proper { center: cb, radius: rb },
        ) => {
            let d = ca.dist(*cb);
            let ext = (d - (ra + rb)).abs();
            let int = (d - (ra - rb).abs()).abs();
            ext.min(int) / ra.max(*rb)
        }
        (GenCircle::Proper { center, radius }, GenCircle::Line { normal, offset })
        | (GenCircle::Line { normal, offset }, GenCircle::Proper { center, radius }) => {
            ((normal.dot(*center) - offset).abs() - radius).abs() / radius
        }
        (GenCircle::Line { normal: n1, .. }, GenCircle::Line { normal: n2, .. }) => {
            1.0 - n1.dot(*n2).abs()
        }
    }
}

/// Descartes data (k, w) of a circle within a configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Kw {
    k: f64,
    w: Complex64,
}

fn kw_of(c: &GenCircle, interior: Vec2) -> Kw {
    match *c {
        GenCircle::Proper { center, radius } => Kw {
            k: 1.0 / radius,
            w: center.to_complex() / radius,
        },
        GenCircle::Line { normal, offset } => {
            // Orient the normal away from the configuration.
            let n = if normal.dot(interior) > offset { -normal } else { normal };
            Kw {
                k: 0.0,
                w: n.to_complex(),
            }
        }
    }
}

fn kw_to_circle(kw: Kw, anchor: &[GenCircle], scale: f64) -> Option<GenCircle> {
    if kw.k.abs() <= 1e-9 * scale {
        let n = Vec2::from_complex(kw.w);
        if !(n.norm() > 0.0) {
            return None;
        }
        let n = n.unit();
        // The line sits on the far side of every proper circle.
        let (c, r) = anchor.iter().find_map(|g| match g {
            GenCircle::Proper { center, radius } => Some((*center, *radius)),
            _ => None,
        })?;
        Some(GenCircle::Line {
            normal: n,
            offset: n.dot(c) + r,
        })
    } else {
        let z = kw.w / kw.k;
        Some(GenCircle::Proper {
            center: Vec2::from_complex(z),
            radius: 1.0 / kw.k.abs(),
        })
    }
}

fn config_interior(cs: &[GenCircle]) -> Result<Vec2> {
    let centers: Vec<Vec2> = cs.iter().filter_map(|c| c.center()).collect();
    if centers.is_empty() {
        return Err(Error::Invalid("at least one proper circle required".into()));
    }
    Ok(centers.iter().fold(Vec2::ZERO, |a, &c| a + c) / centers.len() as f64)
}

fn check_tangency_points(cs: &[GenCircle; 3]) -> Result<()> {
    let pts: Vec<Vec2> = [(0, 1), (1, 2), (2, 0)]
        .iter()
        .filter_map(|&(i, j)| tangency_point(&cs[i], &cs[j]))
        .collect();
    let scale = cs
        .iter()
        .filter_map(|c| c.radius())
        .fold(0.0f64, f64::max);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if pts[i].dist(pts[j]) <= 1e-12 * scale {
                return Err(Error::CoincidentTangency);
            }
        }
    }
    Ok(())
}

fn max_residual(c: &GenCircle, inputs: &[GenCircle; 3]) -> f64 {
    inputs
        .iter()
        .map(|i| tangency_residual(c, i))
        .fold(0.0, f64::max)
}

/// The two circles tangent to each member of a pairwise tangent triple.
/// The first returned circle carries the larger Descartes curvature, which
/// is the circle in the bounded gap whenever one exists.
pub fn soddy_circles(c1: &GenCircle, c2: &GenCircle, c3: &GenCircle) -> Result<(GenCircle, GenCircle)> {
    let cs = [*c1, *c2, *c3];
    check_tangency_points(&cs)?;
    let interior = config_interior(&cs)?;
    let kws = cs.map(|c| kw_of(&c, interior));
    let ksum: f64 = kws.iter().map(|q| q.k).sum();
    let kscale = kws.iter().map(|q| q.k.abs()).fold(0.0, f64::max);
    let kprod = kws[0].k * kws[1].k + kws[1].k * kws[2].k + kws[2].k * kws[0].k;
    let sk = 2.0 * kprod.max(0.0).sqrt();
    let wsum = kws[0].w + kws[1].w + kws[2].w;
    let sw = 2.0 * (kws[0].w * kws[1].w + kws[1].w * kws[2].w + kws[2].w * kws[0].w).sqrt();
    let candidate = |k: f64, w: Complex64| kw_to_circle(Kw { k, w }, &cs, kscale);
    let pick = |k: f64| -> Option<(GenCircle, f64, usize)> {
        (0..2)
            .filter_map(|s| {
                let w = if s == 0 { wsum + sw } else { wsum - sw };
                candidate(k, w).map(|c| (c, max_residual(&c, &cs), s))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
    };
    let (first, res1, s1) = pick(ksum + sk).ok_or(Error::CoincidentTangency)?;
    let second = if sk <= 1e-12 * kscale {
        let w = if s1 == 0 { wsum - sw } else { wsum + sw };
        let c = candidate(ksum - sk, w).ok_or(Error::CoincidentTangency)?;
        (c, max_residual(&c, &cs))
    } else {
        let (c, r, _) = pick(ksum - sk).ok_or(Error::CoincidentTangency)?;
        (c, r)
    };
    let worst = res1.max(second.1);
    if worst > 1e-6 {
        return Err(Error::Invalid(format!(
            "circles are not pairwise tangent (residual {worst:.3e})"
        )));
    }
    Ok((first, second.0))
}

fn strip_axis(normal: Vec2) -> Vec2 {
    let p = normal.perp();
    if p.y > 0.0 || (p.y == 0.0 && p.x > 0.0) {
        p
    } else {
        -p
    }
}

fn inside_triangle(p: Vec2, t: [Vec2; 3], tol: f64) -> bool {
    let s = (t[1] - t[0]).cross(t[2] - t[0]).signum();
    (0..3).all(|i| {
        let a = t[i];
        let b = t[(i + 1) % 3];
        s * (b - a).cross(p - a) >= -tol * (b - a).norm()
    })
}

/// The Soddy circle in the bounded gap of a pairwise externally tangent
/// triple. With two parallel lines both Soddy circles are congruent; the
/// one further along the strip axis (y > 0, or x > 0 for a horizontal
/// strip) is returned.
pub fn successor_circle(c1: &GenCircle, c2: &GenCircle, c3: &GenCircle) -> Result<GenCircle> {
    let cs = [*c1, *c2, *c3];
    let lines: Vec<Vec2> = cs
        .iter()
        .filter_map(|c| match c {
            GenCircle::Line { normal, .. } => Some(*normal),
            _ => None,
        })
        .collect();
    let (s1, s2) = soddy_circles(c1, c2, c3)?;
    if lines.len() >= 2 {
        let axis = strip_axis(lines[0]);
        let key = |c: &GenCircle| c.center().map(|p| p.dot(axis)).unwrap_or(f64::NEG_INFINITY);
        return Ok(if key(&s1) >= key(&s2) { s1 } else { s2 });
    }
    let center = s1.center().ok_or(Error::NoBoundedRegion)?;
    let tri = [
        tangency_point(&cs[0], &cs[1]).ok_or(Error::NoBoundedRegion)?,
        tangency_point(&cs[1], &cs[2]).ok_or(Error::NoBoundedRegion)?,
        tangency_point(&cs[2], &cs[0]).ok_or(Error::NoBoundedRegion)?,
    ];
    if inside_triangle(center, tri, 1e-12) {
        Ok(s1)
    } else {
        Err(Error::NoBoundedRegion)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PackingKind {
    Full,
    Downward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Lines x = 0, x = 2 and the unit circle at (1, 0).
    Paper,
    /// Lines y = 0, y = 2 and the unit circle at (0, 1).
    Ford,
}

/// A circle generated as the successor of `parents`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SuccessorConfig {
    pub parents: [usize; 3],
    pub child: usize,
}

#[derive(Clone, Debug)]
pub struct Packing {
    pub kind: PackingKind,
    pub circles: Vec<GenCircle>,
    pub levels: Vec<u32>,
    pub parents: Vec<Option<[usize; 3]>>,
    pub edges: Vec<(usize, usize)>,
    pub configs: Vec<SuccessorConfig>,
    kw: Vec<Kw>,
}

impl Packing {
    fn with_generators(kind: PackingKind, gens: [GenCircle; 3]) -> Result<Packing> {
        let interior = config_interior(&gens)?;
        Ok(Packing {
            kind,
            circles: gens.to_vec(),
            levels: vec![0; 3],
            parents: vec![None; 3],
            edges: vec![(0, 1), (1, 2), (0, 2)],
            configs: Vec::new(),
            kw: gens.iter().map(|g| kw_of(g, interior)).collect(),
        })
    }

    fn push(&mut self, c: GenCircle, kw: Kw, parents: [usize; 3]) -> usize {
        let idx = self.circles.len();
        let level = parents.iter().map(|&p| self.levels[p]).max().unwrap_or(0) + 1;
        self.circles.push(c);
        self.levels.push(level);
        self.parents.push(Some(parents));
        for p in parents {
            self.edges.push((p, idx));
        }
        self.configs.push(SuccessorConfig { parents, child: idx });
        self.kw.push(kw);
        idx
    }

    fn reflect(&self, triple: [usize; 3], opposite: usize) -> Kw {
        let s = triple.iter().fold(Kw { k: 0.0, w: Complex64::new(0.0, 0.0) }, |a, &i| Kw {
            k: a.k + self.kw[i].k,
            w: a.w + self.kw[i].w,
        });
        Kw {
            k: 2.0 * s.k - self.kw[opposite].k,
            w: s.w * 2.0 - self.kw[opposite].w,
        }
    }

    pub fn len(&self) -> usize {
        self.circles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circles.is_empty()
    }

    pub fn max_level(&self) -> u32 {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Copies of the packing shifted by multiples of 2 across its strip
    /// (x direction in the paper frame, y in the Ford frame).
    pub fn with_translates(&self, frame: Frame, copies: std::ops::RangeInclusive<i32>) -> Packing {
        let step = match frame {
            Frame::Paper => Vec2::new(2.0, 0.0),
            Frame::Ford => Vec2::new(0.0, 2.0),
        };
        let mut out = Packing {
            kind: self.kind,
            circles: Vec::new(),
            levels: Vec::new(),
            parents: Vec::new(),
            edges: Vec::new(),
            configs: Vec::new(),
            kw: Vec::new(),
        };
        for k in copies {
            let base = out.circles.len();
            let t = step * k as f64;
            out.circles.extend(self.circles.iter().map(|c| c.translate(t)));
            out.levels.extend_from_slice(&self.levels);
            out.parents
                .extend(self.parents.iter().map(|p| p.map(|q| q.map(|i| i + base))));
            out.edges
                .extend(self.edges.iter().map(|&(a, b)| (a + base, b + base)));
            out.configs.extend(self.configs.iter().map(|c| SuccessorConfig {
                parents: c.parents.map(|i| i + base),
                child: c.child + base,
            }));
            out.kw.extend(self.kw.iter().map(|q| Kw {
                k: q.k,
                w: q.w + t.to_complex() * q.k,
            }));
        }
        out
    }

    /// Signed Descartes curvatures of a successor quadruple.
    pub fn config_curvatures(&self, cfg: &SuccessorConfig) -> [f64; 4] {
        let p = cfg.parents;
        [self.kw[p[0]].k, self.kw[p[1]].k, self.kw[p[2]].k, self.kw[cfg.child].k]
    }

    pub fn to_json(&self) -> serde_json::Value {
        let items: Vec<serde_json::Value> = self
            .circles
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut o = match c {
                    GenCircle::Proper { center, radius } => serde_json::json!({
                        "kind": "proper",
                        "center": [center.x, center.y],
                        "radius": radius,
                    }),
                    GenCircle::Line { normal, offset } => serde_json::json!({
                        "kind": "line",
                        "normal": [normal.x, normal.y],
                        "offset": offset,
                        "radius": 0.0,
                    }),
                };
                o["level"] = serde_json::json!(self.levels[i]);
                o["parents"] = match self.parents[i] {
                    Some(p) => serde_json::json!(p),
                    None => serde_json::json!([]),
                };
                o
            })
            .collect();
        serde_json::Value::Array(items)
    }

    /// Stroke-only SVG of the packing clipped to `view` = (x0, y0, x1, y1).
    pub fn to_svg(&self, view: (f64, f64, f64, f64), px: u32) -> String {
        let (x0, y0, x1, y1) = view;
        let s = px as f64 / (x1 - x0).max(y1 - y0);
        let w = ((x1 - x0) * s).round() as u32;
        let h = ((y1 - y0) * s).round() as u32;
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        );
        let tx = |x: f64| (x - x0) * s;
        let ty = |y: f64| (y1 - y) * s;
        for c in &self.circles {
            match *c {
                GenCircle::Proper { center, radius } => {
                    if radius * s < 0.05 {
                        continue;
                    }
                    out.push_str(&format!(
                        "<circle cx=\"{:.4}\" cy=\"{:.4}\" r=\"{:.4}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.5\"/>\n",
                        tx(center.x),
                        ty(center.y),
                        radius * s
                    ));
                }
                GenCircle::Line { normal, offset } => {
                    let base = normal * offset;
                    let dir = normal.perp();
                    let span = 2.0 * ((x1 - x0).abs() + (y1 - y0).abs() + base.norm());
                    let a = base - dir * span;
                    let b = base + dir * span;
                    out.push_str(&format!(
                        "<line x1=\"{:.4}\" y1=\"{:.4}\" x2=\"{:.4}\" y2=\"{:.4}\" stroke=\"black\" stroke-width=\"0.5\"/>\n",
                        tx(a.x),
                        ty(a.y),
                        tx(b.x),
                        ty(b.y)
                    ));
                }
            }
        }
        out.push_str("</svg>\n");
        out
    }
}

fn quantize(c: &GenCircle) -> (i64, i64, i64) {
    let q = |v: f64| (v / GEOM_TOL).round() as i64;
    match *c {
        GenCircle::Proper { center, radius } => (q(center.x), q(center.y), q(radius)),
        GenCircle::Line { normal, offset } => (q(normal.x), q(normal.y), i64::MIN + q(offset)),
    }
}

pub fn band_generators(frame: Frame) -> [GenCircle; 3] {
    match frame {
        Frame::Paper => [
            GenCircle::Line {
                normal: Vec2::new(1.0, 0.0),
                offset: 0.0,
            },
            GenCircle::Line {
                normal: Vec2::new(1.0, 0.0),
                offset: 2.0,
            },
            GenCircle::Proper {
                center: Vec2::new(1.0, 0.0),
                radius: 1.0,
            },
        ],
        Frame::Ford => [
            GenCircle::Line {
                normal: Vec2::new(0.0, 1.0),
                offset: 0.0,
            },
            GenCircle::Line {
                normal: Vec2::new(0.0, 1.0),
                offset: 2.0,
            },
            GenCircle::Proper {
                center: Vec2::new(0.0, 1.0),
                radius: 1.0,
            },
        ],
    }
}

/// The full Apollonian packing of the strip between two parallel lines,
/// generated breadth first to `max_level`.
pub fn band_packing(max_level: u32, frame: Frame) -> Packing {
    let gens = band_generators(frame);
    let mut p = Packing::with_generators(PackingKind::Full, gens).expect("band generators");
    if max_level == 0 {
        return p;
    }
    let mut seen: HashSet<(i64, i64, i64)> = p.circles.iter().map(quantize).collect();
    let (s1, s2) = soddy_circles(&gens[0], &gens[1], &gens[2]).expect("band generators are tangent");
    let mut queue: VecDeque<([usize; 3], usize)> = VecDeque::new();
    let interior = config_interior(&gens).expect("band generators");
    for s in [s1, s2] {
        seen.insert(quantize(&s));
        let idx = p.push(s, kw_of(&s, interior), [0, 1, 2]);
        queue.extend([([idx, 0, 1], 2), ([idx, 1, 2], 0), ([idx, 0, 2], 1)]);
    }
    while let Some((t, opp)) = queue.pop_front() {
        let level = t.iter().map(|&i| p.levels[i]).max().unwrap() + 1;
        if level > max_level {
            continue;
        }
        let kw = p.reflect(t, opp);
        let Some(c) = kw_to_circle(kw, &p.circles[..1], 1.0) else {
            continue;
        };
        if !seen.insert(quantize(&c)) {
            continue;
        }
        let idx = p.push(c, kw, t);
        queue.extend([
            ([idx, t[0], t[1]], t[2]),
            ([idx, t[1], t[2]], t[0]),
            ([idx, t[0], t[2]], t[1]),
        ]);
    }
    p
}

/// Three pairwise externally tangent circles with the given radii: the
/// first centered at the origin, the second on the positive x-axis, the
/// third above.
pub fn tangent_triple(r1: f64, r2: f64, r3: f64) -> Result<[GenCircle; 3]> {
    let d = r1 + r2;
    let (d13, d23) = (r1 + r3, r2 + r3);
    let x = (d13 * d13 - d23 * d23 + d * d) / (2.0 * d);
    let y = (d13 * d13 - x * x).max(0.0).sqrt();
    Ok([
        GenCircle::proper(0.0, 0.0, r1)?,
        GenCircle::proper(d, 0.0, r2)?,
        GenCircle::proper(x, y, r3)?,
    ])
}

/// The downward packing of three pairwise externally tangent circles: each
/// triple only gains its successor.
pub fn downward_packing(c1: &GenCircle, c2: &GenCircle, c3: &GenCircle, max_level: u32) -> Result<Packing> {
    let gens = [*c1, *c2, *c3];
    let mut p = Packing::with_generators(PackingKind::Downward, gens)?;
    if max_level == 0 {
        soddy_circles(c1, c2, c3)?;
        return Ok(p);
    }
    let s = successor_circle(c1, c2, c3)?;
    let interior = config_interior(&gens)?;
    let first = p.push(s, kw_of(&s, interior), [0, 1, 2]);
    let mut frontier = vec![(first, [0usize, 1, 2])];
    for _ in 1..max_level {
        let mut next = Vec::with_capacity(frontier.len() * 3);
        for (x, t) in frontier {
            for (pair, opp) in [([t[0], t[1]], t[2]), ([t[1], t[2]], t[0]), ([t[0], t[2]], t[1])] {
                let triple = [x, pair[0], pair[1]];
                let kw = p.reflect(triple, opp);
                let c = kw_to_circle(kw, &p.circles[x..=x], 1.0).ok_or(Error::NoProperSuccessor)?;
                let idx = p.push(c, kw, triple);
                next.push((idx, triple));
            }
        }
        frontier = next;
    }
    Ok(p)
}

/// Worst-case outcome of the angle and median checks over a packing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometryReport {
    pub configs_checked: usize,
    /// Smallest slack of each of the four angle bounds (negative = violated).
    pub min_slack: [f64; 4],
    pub violations: [usize; 4],
    pub median_residual: f64,
    pub descartes_residual: f64,
    pub tangency_residual: f64,
}

impl GeometryReport {
    pub fn total_violations(&self) -> usize {
        self.violations.iter().sum()
    }

    fn merge(a: GeometryReport, b: GeometryReport) -> GeometryReport {
        let mut out = a;
        out.configs_checked += b.configs_checked;
        for i in 0..4 {
            out.min_slack[i] = a.min_slack[i].min(b.min_slack[i]);
            out.violations[i] += b.violations[i];
        }
        out.median_residual = a.median_residual.max(b.median_residual);
        out.descartes_residual = a.descartes_residual.max(b.descartes_residual);
        out.tangency_residual = a.tangency_residual.max(b.tangency_residual);
        out
    }

    fn empty() -> GeometryReport {
        GeometryReport {
            configs_checked: 0,
            min_slack: [f64::INFINITY; 4],
            violations: [0; 4],
            median_residual: 0.0,
            descartes_residual: 0.0,
            tangency_residual: 0.0,
        }
    }
}

/// Unsigned angle ∠aob in [0, π].
pub fn angle_at(a: Vec2, o: Vec2, b: Vec2) -> f64 {
    let u = a - o;
    let v = b - o;
    u.cross(v).atan2(u.dot(v)).abs()
}

/// Relative defect of 2Σk² = (Σk)².
pub fn descartes_residual(k: [f64; 4]) -> f64 {
    let s: f64 = k.iter().sum();
    let q: f64 = k.iter().map(|x| x * x).sum();
    (2.0 * q - s * s).abs() / (s * s).max(f64::MIN_POSITIVE)
}

/// Slacks of the four angle bounds for C₀, C₁, C₂ with successor C₃.
pub fn angle_bounds(c: [Vec2; 6]) -> [f64; 4] {
    let [c0, c1, c2, c3, c4, c5] = c;
    let mut args: Vec<f64> = [c0, c1, c2]
        .iter()
        .map(|p| (p.y - c3.y).atan2(p.x - c3.x))
        .collect();
    args.sort_by(f64::total_cmp);
    let gaps = [args[1] - args[0], args[2] - args[1], 2.0 * PI - (args[2] - args[0])];
    let b1 = PI - gaps.iter().cloned().fold(0.0, f64::max);
    let a4 = angle_at(c4, c0, c3);
    let a5 = angle_at(c5, c0, c3);
    let b2 = PI / 2.0 - a4.max(a5);
    let b3 = (a4 - 0.5 * a5).min(a5 - 0.5 * a4);
    let b4 = angle_at(c4, c3, c5) - 2.0 * (0.75f64).atan();
    [b1, b2, b3, b4]
}

/// Median-line check: with zᵢ² = pᵢ − c for the tangency points pᵢ on C of
/// the other Soddy circle, C₁, C₂ and the successor, the line through 0
/// along z₃ bisects the segment cut from L₀ = {i·z₀ + t·z₀} by the lines
/// along z₁ and z₂. Returns |sin| of the angle between z₃ and the midpoint.
pub fn median_residual(c: &GenCircle, other: &GenCircle, c1: &GenCircle, c2: &GenCircle, c3: &GenCircle) -> Option<f64> {
    let center = c.center()?;
    let z: Vec<Complex64> = [other, c1, c2, c3]
        .iter()
        .map(|x| tangency_point(c, x).map(|p| (p - center).to_complex().sqrt()))
        .collect::<Option<Vec<_>>>()?;
    let i = Complex64::new(0.0, 1.0);
    let meet = |zl: Complex64| {
        // z₀ t + i z₀ = zl s.
        let (a, b, cc, d) = (z[0].re, -zl.re, z[0].im, -zl.im);
        let rhs = -(i * z[0]);
        let det = a * d - b * cc;
        let s = (a * rhs.im - cc * rhs.re) / det;
        zl * s
    };
    let m = (meet(z[1]) + meet(z[2])) * 0.5;
    Some((z[3].conj() * m).im.abs() / (z[3].norm() * m.norm()))
}

fn check_config(p: &Packing, cfg: &SuccessorConfig) -> GeometryReport {
    let mut rep = GeometryReport::empty();
    rep.descartes_residual = descartes_residual(p.config_curvatures(cfg));
    let parents = cfg.parents.map(|i| p.circles[i]);
    let child = p.circles[cfg.child];
    if parents.iter().any(|c| c.is_line()) || child.is_line() {
        return rep;
    }
    for o in 0..3 {
        let c0 = parents[o];
        let c1 = parents[(o + 1) % 3];
        let c2 = parents[(o + 2) % 3];
        let (Ok(c4), Ok(c5)) = (successor_circle(&c0, &c1, &child), successor_circle(&c0, &c2, &child)) else {
            rep.violations[0] += 1;
            continue;
        };
        let centers = [c0, c1, c2, child, c4, c5].map(|c| c.center().unwrap());
        let slack = angle_bounds(centers);
        rep.configs_checked += 1;
        for k in 0..4 {
            rep.min_slack[k] = rep.min_slack[k].min(slack[k]);
            let strict = k == 1;
            if slack[k] < -1e-12 || (strict && slack[k] <= 0.0) {
                rep.violations[k] += 1;
            }
        }
        if let Ok((_, other)) = soddy_circles(&c0, &c1, &c2) {
            if let Some(r) = median_residual(&c0, &other, &c1, &c2, &child) {
                rep.median_residual = rep.median_residual.max(r);
            }
        }
    }
    rep
}

/// Checks every recorded successor configuration of the packing against the
/// four angle bounds and the median-line property, plus the Descartes
/// identity and tangency of every recorded edge.
pub fn validate_geometry(p: &Packing) -> GeometryReport {
    let mut rep = p
        .configs
        .par_iter()
        .map(|cfg| check_config(p, cfg))
        .reduce(GeometryReport::empty, GeometryReport::merge);
    rep.tangency_residual = p
        .edges
        .par_iter()
        .map(|&(a, b)| tangency_residual(&p.circles[a], &p.circles[b]))
        .reduce(|| 0.0, f64::max);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prop(x: f64, y: f64, r: f64) -> GenCircle {
        GenCircle::proper(x, y, r).unwrap()
    }

    fn close(c: &GenCircle, x: f64, y: f64, r: f64, tol: f64) -> bool {
        match c {
            GenCircle::Proper { center, radius } => {
                (center.x - x).abs() < tol && (center.y - y).abs() < tol && (radius - r).abs() < tol
            }
            _ => false,
        }
    }

    #[test]
    fn matrix_dictionary() {
        let c = prop(1.0, 0.0, 1.0);
        assert_eq!(circle_to_matrix(&c).unwrap(), Sym2::m_of(1.0, 0.0, 3.0));
        let eps = 1e-3;
        let back = matrix_to_circle(&Sym2::m_of(0.0, 0.0, 2.0 + eps)).unwrap();
        assert!(close(&back, 0.0, 0.0, eps, 1e-15));
        assert_eq!(matrix_to_circle(&Sym2::m_of(0.0, 0.0, 2.0)), Err(Error::NoCircle));
        let line = GenCircle::line(Vec2::new(0.0, 1.0), 0.0).unwrap();
        assert_eq!(circle_to_matrix(&line), Err(Error::LineHasNoMatrix));
    }

    #[test]
    fn soddy_between_vertical_lines() {
        let [l1, l2, c] = band_generators(Frame::Paper);
        let (a, b) = soddy_circles(&l1, &l2, &c).unwrap();
        let mut ys = [a.center().unwrap().y, b.center().unwrap().y];
        ys.sort_by(f64::total_cmp);
        assert!((ys[0] + 2.0).abs() < 1e-12 && (ys[1] - 2.0).abs() < 1e-12);
        assert!((a.radius().unwrap() - 1.0).abs() < 1e-12);
        let s = successor_circle(&l1, &l2, &c).unwrap();
        assert!(close(&s, 1.0, 2.0, 1.0, 1e-12));
    }

    #[test]
    fn soddy_between_horizontal_lines() {
        let [l1, l2, c] = band_generators(Frame::Ford);
        let (a, b) = soddy_circles(&l1, &l2, &c).unwrap();
        let mut xs = [a.center().unwrap().x, b.center().unwrap().x];
        xs.sort_by(f64::total_cmp);
        assert!((xs[0] + 2.0).abs() < 1e-12 && (xs[1] - 2.0).abs() < 1e-12);
        let s = successor_circle(&l1, &l2, &c).unwrap();
        assert!(close(&s, 2.0, 1.0, 1.0, 1e-12));
    }

    #[test]
    fn ford_successor() {
        let base = GenCircle::line(Vec2::new(0.0, 1.0), 0.0).unwrap();
        let a = prop(0.0, 1.0, 1.0);
        let b = prop(2.0, 1.0, 1.0);
        let (s, other) = soddy_circles(&base, &a, &b).unwrap();
        assert!(close(&s, 1.0, 0.25, 0.25, 1e-12));
        assert!(other.is_line());
        let succ = successor_circle(&base, &a, &b).unwrap();
        assert!(close(&succ, 1.0, 0.25, 0.25, 1e-12));
    }

    #[test]
    fn congruent_triple_successor() {
        let s3 = 3f64.sqrt();
        let s = successor_circle(&prop(0.0, 0.0, 1.0), &prop(2.0, 0.0, 1.0), &prop(1.0, s3, 1.0)).unwrap();
        assert!(close(&s, 1.0, s3 / 3.0, 2.0 / s3 - 1.0, 1e-12));
    }

    #[test]
    fn coincident_tangency_rejected() {
        let a = prop(0.0, 0.0, 1.0);
        let b = prop(2.0, 0.0, 1.0);
        let c = prop(3.0, 0.0, 2.0);
        assert_eq!(soddy_circles(&a, &b, &c), Err(Error::CoincidentTangency));
    }

    #[test]
    fn downward_counts() {
        let s3 = 3f64.sqrt();
        let g = [prop(0.0, 0.0, 1.0), prop(2.0, 0.0, 1.0), prop(1.0, s3, 1.0)];
        for (level, added) in [(0, 0), (1, 1), (2, 4), (3, 13), (4, 40)] {
            let p = downward_packing(&g[0], &g[1], &g[2], level).unwrap();
            assert_eq!(p.len() - 3, added);
        }
        let p = downward_packing(&g[0], &g[1], &g[2], 3).unwrap();
        for cfg in &p.configs {
            let expect = cfg.parents.iter().map(|&i| p.levels[i]).max().unwrap() + 1;
            assert_eq!(p.levels[cfg.child], expect);
        }
    }

    #[test]
    fn band_packing_levels_and_strip() {
        let p = band_packing(4, Frame::Paper);
        assert_eq!(p.len(), 3 + 2 * (1 + 3 + 9 + 27));
        for c in &p.circles {
            if let GenCircle::Proper { center, radius } = c {
                assert!(center.x - radius >= -1e-12 && center.x + radius <= 2.0 + 1e-12);
            }
        }
    }

    #[test]
    fn ford_circles_small_q() {
        let p = band_packing(4, Frame::Ford);
        for q in 1..=4i64 {
            for pn in 0..=q {
                if num_integer::gcd(pn, q) != 1 {
                    continue;
                }
                let (x, r) = (2.0 * pn as f64 / q as f64, 1.0 / (q * q) as f64);
                assert!(
                    p.circles.iter().any(|c| close(c, x, r, r, 1e-9)),
                    "missing Ford circle {pn}/{q}"
                );
            }
        }
    }

    #[test]
    fn symmetric_separation_angle() {
        let s3 = 3f64.sqrt();
        let g = [prop(0.0, 0.0, 1.0), prop(2.0, 0.0, 1.0), prop(1.0, s3, 1.0)];
        let p = downward_packing(&g[0], &g[1], &g[2], 3).unwrap();
        let rep = validate_geometry(&p);
        assert_eq!(rep.total_violations(), 0);
        assert!(rep.min_slack[3] >= 0.0);
        assert!(rep.median_residual < 1e-9);
        assert!(rep.descartes_residual < 1e-9);
        assert!(rep.tangency_residual < 1e-9);
    }

    #[test]
    fn median_on_ford_triple() {
        let c0 = prop(0.0, 1.0, 1.0);
        let c1 = prop(2.0, 1.0, 1.0);
        let c2 = prop(1.0, 0.25, 0.25);
        let base = GenCircle::line(Vec2::new(0.0, 1.0), 0.0).unwrap();
        // The other Soddy circle of this Ford triple is the base line.
        let (succ, rest) = soddy_circles(&c0, &c1, &c2).unwrap();
        assert!(rest.is_line());
        assert!(tangency_residual(&rest, &base) < 1e-9);
        for o in 0..3 {
            let t = [c0, c1, c2];
            let r = median_residual(&t[o], &rest, &t[(o + 1) % 3], &t[(o + 2) % 3], &succ).unwrap();
            assert!(r < 1e-9, "median residual {r}");
        }
    }
}
