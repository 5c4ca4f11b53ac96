//! Apollonian curves and triangles, and Apollonian triangulations carrying
//! piecewise-quadratic C^{1,1} solutions of the sandpile PDE.
//!
//! A curve is stored by its control triangle (start, apex, end). Subdivision
//! at the centroid s gives halves whose apexes are (2·start + apex)/3 and
//! (2·end + apex)/3, so refinement is exact affine arithmetic.
//!
//! A triangulation is a ternary tree of regions. A region is bounded by three
//! curves; curve m joins points[m+1] to points[m+2] and separates the region
//! from the domain of patch m. Patches m+1 and m+2 meet at points[m].

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::circles::{circle_to_matrix, downward_packing, matrix_to_circle};
use crate::symmat::{is_ext_tangent, rank1_recover, successor_matrix, QuadraticPatch, Sym2, Vec2};
use crate::{Error, Result};

/// Relative tolerance of every construction check.
pub const FIT_TOL: f64 = 1e-9;
/// Deepest curve refinement accepted; 2^24 + 1 points.
pub const MAX_DEPTH: u32 = 24;

fn check_depth(depth: u32) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::Invalid(format!("refinement depth {depth} exceeds {MAX_DEPTH}")));
    }
    Ok(())
}

/// Control triangle of an Apollonian curve running from `start` to `end`,
/// tangent to apex − start and end − apex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurveSpec {
    pub start: Vec2,
    pub apex: Vec2,
    pub end: Vec2,
}

impl CurveSpec {
    pub fn new(start: Vec2, apex: Vec2, end: Vec2) -> Result<Self> {
        let span = (end - start).norm().max((apex - start).norm());
        if !(span > 0.0) || (apex - start).cross(end - start).abs() <= 1e-14 * span * span {
            return Err(Error::Collinear);
        }
        Ok(CurveSpec { start, apex, end })
    }

    /// Centroid of the control triangle.
    pub fn split_point(&self) -> Vec2 {
        (self.start + self.apex + self.end) / 3.0
    }

    pub fn split(&self) -> (CurveSpec, CurveSpec) {
        let s = self.split_point();
        (
            CurveSpec {
                start: self.start,
                apex: (self.start * 2.0 + self.apex) / 3.0,
                end: s,
            },
            CurveSpec {
                start: s,
                apex: (self.end * 2.0 + self.apex) / 3.0,
                end: self.end,
            },
        )
    }

    pub fn reversed(&self) -> CurveSpec {
        CurveSpec {
            start: self.end,
            apex: self.apex,
            end: self.start,
        }
    }

    pub fn points(&self, depth: u32) -> Result<ApollonianCurve> {
        check_depth(depth)?;
        let n = (1usize << depth) + 1;
        let mut points = Vec::with_capacity(n);
        let mut tangents = Vec::with_capacity(n);
        points.push(self.start);
        tangents.push((self.apex - self.start).unit());
        refine(*self, depth, &mut points, &mut tangents);
        Ok(ApollonianCurve {
            spec: *self,
            depth,
            points,
            tangents,
        })
    }
}

fn refine(c: CurveSpec, depth: u32, points: &mut Vec<Vec2>, tangents: &mut Vec<Vec2>) {
    if depth == 0 {
        points.push(c.end);
        tangents.push((c.end - c.apex).unit());
        return;
    }
    let (l, r) = c.split();
    refine(l, depth - 1, points, tangents);
    refine(r, depth - 1, points, tangents);
}

/// A refined Apollonian curve: 2^depth + 1 points from p1 to p2.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApollonianCurve {
    pub spec: CurveSpec,
    pub depth: u32,
    pub points: Vec<Vec2>,
    /// Unit tangent in the direction of travel, exact from the subdivision.
    pub tangents: Vec<Vec2>,
}

impl ApollonianCurve {
    pub fn p1(&self) -> Vec2 {
        self.spec.start
    }

    pub fn p2(&self) -> Vec2 {
        self.spec.end
    }

    pub fn apex(&self) -> Vec2 {
        self.spec.apex
    }

    /// All turns between consecutive segments have one strict sign.
    pub fn is_convex(&self) -> bool {
        let turns: Vec<f64> = self
            .points
            .windows(3)
            .map(|w| (w[1] - w[0]).cross(w[2] - w[1]))
            .collect();
        turns.iter().all(|&t| t > 0.0) || turns.iter().all(|&t| t < 0.0)
    }

    pub fn distance_to(&self, x: Vec2) -> f64 {
        polyline_distance(&self.points, x)
    }
}

pub fn curve_points(p1: Vec2, p2: Vec2, apex: Vec2, depth: u32) -> Result<ApollonianCurve> {
    CurveSpec::new(p1, apex, p2)?.points(depth)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TriangleKind {
    Proper,
    Degenerate,
}

/// A proper triangle has three curves with apex at the vertex centroid;
/// curves[k] joins vertices[k+1] to vertices[k+2]. A degenerate triangle is
/// one curve plus its two tangent segments; its vertices are the curve's
/// endpoints and apex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApollonianTriangle {
    pub kind: TriangleKind,
    pub vertices: [Vec2; 3],
    pub curves: Vec<ApollonianCurve>,
}

impl ApollonianTriangle {
    /// Closed boundary polygon, first point not repeated.
    pub fn boundary(&self) -> Vec<Vec2> {
        match self.kind {
            TriangleKind::Proper => chain(&[&self.curves[0], &self.curves[1], &self.curves[2]]),
            TriangleKind::Degenerate => {
                let mut b = self.curves[0].points.clone();
                b.push(self.vertices[2]);
                b
            }
        }
    }

    pub fn area(&self) -> f64 {
        polygon_area(&self.boundary()).abs()
    }

    pub fn vertex_area(&self) -> f64 {
        triangle_area(self.vertices)
    }

    pub fn contains(&self, x: Vec2) -> bool {
        polygon_contains(&self.boundary(), x)
    }
}

/// Concatenates curves that meet end to start.
fn chain(curves: &[&ApollonianCurve]) -> Vec<Vec2> {
    let mut out = Vec::new();
    for c in curves {
        out.extend_from_slice(&c.points[..c.points.len() - 1]);
    }
    out
}

pub fn triangle_from_vertices(v: [Vec2; 3], depth: u32) -> Result<ApollonianTriangle> {
    let g = (v[0] + v[1] + v[2]) / 3.0;
    let curves = (0..3)
        .map(|k| curve_points(v[(k + 1) % 3], v[(k + 2) % 3], g, depth))
        .collect::<Result<Vec<_>>>()?;
    Ok(ApollonianTriangle {
        kind: TriangleKind::Proper,
        vertices: v,
        curves,
    })
}

pub fn degenerate_triangle(c: &CurveSpec, depth: u32) -> Result<ApollonianTriangle> {
    Ok(ApollonianTriangle {
        kind: TriangleKind::Degenerate,
        vertices: [c.start, c.end, c.apex],
        curves: vec![c.points(depth)?],
    })
}

pub fn triangle_area(v: [Vec2; 3]) -> f64 {
    0.5 * (v[1] - v[0]).cross(v[2] - v[0]).abs()
}

/// Signed shoelace area.
pub fn polygon_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>()
}

/// Even-odd rule.
pub fn polygon_contains(pts: &[Vec2], x: Vec2) -> bool {
    let n = pts.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (pts[i], pts[j]);
        if (a.y > x.y) != (b.y > x.y) && x.x < (b.x - a.x) * (x.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn polyline_distance(pts: &[Vec2], x: Vec2) -> f64 {
    if pts.len() == 1 {
        return pts[0].dist(x);
    }
    pts.windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            let t = if d.norm2() > 0.0 {
                ((x - w[0]).dot(d) / d.norm2()).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (w[0] + d * t).dist(x)
        })
        .fold(f64::INFINITY, f64::min)
}

fn line_intersection(p: Vec2, d: Vec2, q: Vec2, e: Vec2) -> Option<Vec2> {
    let den = d.cross(e);
    if den.abs() <= 1e-14 * d.norm() * e.norm() {
        return None;
    }
    Some(p + d * ((q - p).cross(e) / den))
}

/// Angle between two directions, in [0, π].
fn angle_between(u: Vec2, w: Vec2) -> f64 {
    u.cross(w).atan2(u.dot(w)).abs()
}

/// The starting configuration u₀ = ½xᵀA₄⁻x + ½(vᵢ·(x − pⱼ))² on the
/// degenerate triangle of patch i.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InitialData {
    pub a4: Sym2,
    /// Aᵢ = A₄⁻ + vᵢ⊗vᵢ.
    pub v: [Vec2; 3],
    /// Centroid 0, circumradius ½; pⱼ − pₖ ⊥ vᵢ.
    pub p: [Vec2; 3],
    pub patches: [QuadraticPatch; 3],
    /// curves[i] joins pⱼ to pₖ and bounds the degenerate triangle of patch i.
    pub curves: [CurveSpec; 3],
}

impl InitialData {
    /// Sign of (p₂ − p₁) × (p₃ − p₁).
    pub fn orientation(&self) -> f64 {
        (self.p[1] - self.p[0]).cross(self.p[2] - self.p[0]).signum()
    }

    pub fn degenerate_triangles(&self, depth: u32) -> Result<Vec<ApollonianTriangle>> {
        self.curves.iter().map(|c| degenerate_triangle(c, depth)).collect()
    }
}

pub fn initial_patches(a: &[Sym2; 3]) -> Result<InitialData> {
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        if !is_ext_tangent(&a[i], &a[j], FIT_TOL)? {
            return Err(Error::Invalid(format!(
                "generators {} and {} are not externally tangent",
                i + 1,
                j + 1
            )));
        }
    }
    let a4 = successor_matrix(&a[0], &a[1], &a[2])?;
    let a4m = a4.reflect_trace2();
    let c4 = a4.rho();
    let v = a.map(|ai| (ai.rho() - c4).sqrt());
    let lam = [v[1].cross(v[2]), v[2].cross(v[0]), v[0].cross(v[1])];
    // pⱼ − pₖ = λᵢ vᵢ^⊥ closes because Σ λᵢ vᵢ = 0.
    let raw = [Vec2::ZERO, -(v[2].perp() * lam[2]), v[1].perp() * lam[1]];
    let area = triangle_area(raw);
    let sides = [0, 1, 2].map(|i| raw[(i + 1) % 3].dist(raw[(i + 2) % 3]));
    let longest = sides.iter().cloned().fold(0.0, f64::max);
    if !(area > 1e-14 * longest * longest) {
        return Err(Error::Collinear);
    }
    let circumradius = sides[0] * sides[1] * sides[2] / (4.0 * area);
    let g = (raw[0] + raw[1] + raw[2]) / 3.0;
    let p = raw.map(|q| (q - g) * (0.5 / circumradius));
    let patches = [0, 1, 2].map(|i| {
        let s = v[i].dot(p[(i + 1) % 3]);
        QuadraticPatch::new(a4m + Sym2::outer(v[i]), -(v[i] * s), 0.5 * s * s)
    });
    let centers = a.map(|ai| ai.rho());
    let mut curves = [CurveSpec {
        start: Vec2::ZERO,
        apex: Vec2::ZERO,
        end: Vec2::ZERO,
    }; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let dk = (centers[j] - centers[i]).sqrt();
        let dj = (centers[k] - centers[i]).sqrt();
        let apex = line_intersection(p[k], dk, p[j], dj).ok_or(Error::Collinear)?;
        curves[i] = CurveSpec::new(p[j], apex, p[k])?;
    }
    Ok(InitialData {
        a4,
        v,
        p,
        patches,
        curves,
    })
}

/// Checks of one successor fit. Residuals are relative to 1 + the largest
/// value or gradient magnitude involved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FitDiagnostics {
    /// Value/gradient mismatch of the fitted patch at y₁, y₂, y₃.
    pub residual: f64,
    /// Spread of the linear and constant terms solved at each yᵢ separately.
    pub oracle_spread: f64,
    /// Largest |cos| between vᵢ and the side pⱼpₖ.
    pub perpendicularity: f64,
    /// |B recovered from the rank-one structure − B₀|.
    pub rank1_residual: f64,
    /// min aᵢ / 2β; the construction needs it above 1.
    pub hypothesis_margin: f64,
    /// Distance from X₀ to the point with trilinear coordinates
    /// ((tr Aᵢ − tr B)/tr Aᵢ)^(−1/2).
    pub printed_x0_offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SuccessorFit {
    pub b0: Sym2,
    pub x0: Vec2,
    pub y: [Vec2; 3],
    pub patch: QuadraticPatch,
    pub diagnostics: FitDiagnostics,
}

fn local_terms(q: &QuadraticPatch, h: &Sym2, y: Vec2) -> (Vec2, f64) {
    let g = q.gradient(y) - h.apply(y);
    let e = q.value(y) - 0.5 * h.quad(y) - g.dot(y);
    (g, e)
}

/// Fits the patch with Hessian B₀ = successor of the three Hessians, meeting
/// patch i at yᵢ. `points[m]` is where patches m+1 and m+2 meet.
pub fn fit_successor_patch(patches: &[QuadraticPatch; 3], points: &[Vec2; 3]) -> Result<SuccessorFit> {
    let mut scale = 1.0f64;
    let mut worst = 0.0f64;
    for m in 0..3 {
        let (q1, q2) = (&patches[(m + 1) % 3], &patches[(m + 2) % 3]);
        let (dv, dg) = q1.mismatch(q2, points[m]);
        worst = worst.max(dv).max(dg);
        scale = scale
            .max(q1.value(points[m]).abs())
            .max(q1.gradient(points[m]).norm());
    }
    if worst > FIT_TOL * scale {
        return Err(Error::IncompatiblePatches(worst));
    }

    let b0 = successor_matrix(&patches[0].h, &patches[1].h, &patches[2].h)?;
    let beta = b0.trace() - 2.0;
    let cb = b0.rho();
    let mut n = [Vec2::ZERO; 3];
    let mut a = [0.0; 3];
    let mut perpendicularity = 0.0f64;
    let mut hypothesis_margin = f64::INFINITY;
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        let v = (patches[i].h.rho() - cb).sqrt();
        a[i] = v.norm2();
        hypothesis_margin = hypothesis_margin.min(a[i] / (2.0 * beta));
        if a[i] <= 2.0 * beta {
            return Err(Error::DegenerateSuccessor);
        }
        let side = points[k] - points[j];
        perpendicularity = perpendicularity.max(v.dot(side).abs() / (v.norm() * side.norm()));
        let u = v.unit();
        n[i] = if u.dot(points[j] - points[i]) < 0.0 { -u } else { u };
    }
    if perpendicularity > 1e-8 {
        return Err(Error::FitResidual(perpendicularity));
    }

    let side_len = [0, 1, 2].map(|i| points[(i + 1) % 3].dist(points[(i + 2) % 3]));
    let weighted = |w: [f64; 3]| {
        let total: f64 = (0..3).map(|i| side_len[i] * w[i]).sum();
        (0..3).fold(Vec2::ZERO, |acc, i| acc + points[i] * (side_len[i] * w[i])) / total
    };
    let x0 = weighted([0, 1, 2].map(|i| ((a[i] - beta) / a[i]).sqrt()));
    let y = [0, 1, 2].map(|i| {
        let h = n[i].dot(points[(i + 1) % 3] - x0);
        let t = beta * h / (a[i] - beta);
        x0 + n[i] * (h + t)
    });

    let (g, e) = local_terms(&patches[0], &b0, y[0]);
    let patch = QuadraticPatch::new(b0, g, e);
    let mut residual = 0.0f64;
    let mut oracle_spread = 0.0f64;
    for i in 0..3 {
        let (dv, dg) = patch.mismatch(&patches[i], y[i]);
        residual = residual.max(dv).max(dg);
        scale = scale
            .max(patches[i].value(y[i]).abs())
            .max(patches[i].gradient(y[i]).norm());
        let (gi, ei) = local_terms(&patches[i], &b0, y[i]);
        oracle_spread = oracle_spread.max((gi - g).norm()).max((ei - e).abs());
    }
    residual /= scale;
    oracle_spread /= scale;
    if residual > FIT_TOL || oracle_spread > FIT_TOL {
        return Err(Error::FitResidual(residual.max(oracle_spread)));
    }

    let recovered = rank1_recover(*points, *patches, FIT_TOL)?;
    let rank1_residual = recovered.b.max_abs_diff(&b0) / (1.0 + b0.norm());
    if rank1_residual > FIT_TOL {
        return Err(Error::FitResidual(rank1_residual));
    }

    let tb = b0.trace();
    let printed = weighted([0, 1, 2].map(|i| {
        let ta = patches[i].h.trace();
        ((ta - tb) / ta).powf(-0.5)
    }));

    Ok(SuccessorFit {
        b0,
        x0,
        y,
        patch,
        diagnostics: FitDiagnostics {
            residual,
            oracle_spread,
            perpendicularity,
            rank1_residual,
            hypothesis_margin,
            printed_x0_offset: printed.dist(x0),
        },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionFit {
    pub b0: Sym2,
    pub x0: Vec2,
    pub y: [Vec2; 3],
    /// Index of the fitted patch.
    pub patch: usize,
    /// Child i is bounded by patches (fitted, j, k) and meets them at
    /// (pᵢ, yₖ, yⱼ).
    pub children: [usize; 3],
    pub diagnostics: FitDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    /// Level of the patch this region produces: one more than the highest
    /// level among its bounding patches.
    pub level: u32,
    pub patches: [usize; 3],
    pub points: [Vec2; 3],
    pub curves: [CurveSpec; 3],
    pub parent: Option<usize>,
    pub fit: Option<RegionFit>,
}

impl Region {
    pub fn boundary(&self, depth: u32) -> Result<Vec<Vec2>> {
        let c = self
            .curves
            .iter()
            .map(|c| c.points(depth))
            .collect::<Result<Vec<_>>>()?;
        Ok(chain(&[&c[0], &c[1], &c[2]]))
    }
}

/// Outcome of a point query.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vec2,
    pub patch: usize,
    /// Deepest region visited; `None` inside an initial degenerate triangle.
    pub region: Option<usize>,
    /// False when the point sits in an unfitted region and the nearest
    /// bounding patch was used.
    pub resolved: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct C11Report {
    pub points_checked: usize,
    pub max_value_mismatch: f64,
    pub max_gradient_mismatch: f64,
    /// 1 + the largest value or gradient magnitude at the checked points.
    pub scale: f64,
}

impl C11Report {
    pub fn relative(&self) -> f64 {
        self.max_value_mismatch.max(self.max_gradient_mismatch) / self.scale
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Triangulation {
    pub generators: [Sym2; 3],
    pub initial: InitialData,
    pub patches: Vec<QuadraticPatch>,
    pub patch_levels: Vec<u32>,
    /// Region 0 is the central region bounded by the three initial curves.
    pub regions: Vec<Region>,
    pub max_level: u32,
    /// Curve refinement used for point location, areas and export.
    pub depth: u32,
}

pub fn build_triangulation(a: &[Sym2; 3], max_level: u32, depth: u32) -> Result<Triangulation> {
    check_depth(depth)?;
    let initial = initial_patches(a)?;
    let mut patches = initial.patches.to_vec();
    let mut patch_levels = vec![0u32; 3];
    let mut regions = vec![Region {
        level: 1,
        patches: [0, 1, 2],
        points: initial.p,
        curves: initial.curves,
        parent: None,
        fit: None,
    }];
    let mut frontier = vec![0usize];
    for _ in 0..max_level {
        let fits: Vec<Result<SuccessorFit>> = frontier
            .par_iter()
            .map(|&r| {
                let reg = &regions[r];
                fit_successor_patch(&reg.patches.map(|i| patches[i]), &reg.points)
            })
            .collect();
        let mut next = Vec::with_capacity(frontier.len() * 3);
        for (&r, fit) in frontier.iter().zip(fits) {
            let fit = fit?;
            let reg = regions[r].clone();
            let diam = (0..3).map(|i| reg.points[i].dist(reg.points[(i + 1) % 3])).fold(0.0, f64::max);
            let split = [0, 1, 2].map(|i| reg.curves[i].split_point());
            let offset = (0..3).map(|i| split[i].dist(fit.y[i])).fold(0.0, f64::max);
            if offset > FIT_TOL * diam {
                return Err(Error::FitResidual(offset / diam));
            }
            let pid = patches.len();
            patches.push(fit.patch);
            patch_levels.push(reg.level);
            let base = regions.len();
            let y = fit.y;
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                let ids = [pid, reg.patches[j], reg.patches[k]];
                let level = ids.iter().map(|&q| patch_levels[q]).max().unwrap_or(0) + 1;
                regions.push(Region {
                    level,
                    patches: ids,
                    points: [reg.points[i], y[k], y[j]],
                    curves: [
                        CurveSpec::new(y[k], fit.x0, y[j])?,
                        reg.curves[j].split().1,
                        reg.curves[k].split().0,
                    ],
                    parent: Some(r),
                    fit: None,
                });
                next.push(base + i);
            }
            regions[r].fit = Some(RegionFit {
                b0: fit.b0,
                x0: fit.x0,
                y,
                patch: pid,
                children: [base, base + 1, base + 2],
                diagnostics: fit.diagnostics,
            });
        }
        frontier = next;
    }
    Ok(Triangulation {
        generators: *a,
        initial,
        patches,
        patch_levels,
        regions,
        max_level,
        depth,
    })
}

impl Triangulation {
    pub fn fitted_regions(&self) -> impl Iterator<Item = (usize, &Region, &RegionFit)> {
        self.regions
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.fit.as_ref().map(|f| (i, r, f)))
    }

    pub fn proper_triangle_count(&self) -> usize {
        self.fitted_regions().count()
    }

    /// Every triangle with the index of its patch: the three degenerate ones
    /// first, then one proper triangle per fitted region.
    pub fn triangles(&self) -> Result<Vec<(ApollonianTriangle, usize)>> {
        let mut out: Vec<(ApollonianTriangle, usize)> = self
            .initial
            .degenerate_triangles(self.depth)?
            .into_iter()
            .zip(0..3)
            .collect();
        let fits: Vec<&RegionFit> = self.fitted_regions().map(|(_, _, f)| f).collect();
        let proper = fits
            .par_iter()
            .map(|f| triangle_from_vertices(f.y, self.depth).map(|t| (t, f.patch)))
            .collect::<Result<Vec<_>>>()?;
        out.extend(proper);
        Ok(out)
    }

    pub fn evaluate(&self, x: Vec2) -> Result<Evaluation> {
        let at = |patch: usize, region: Option<usize>, resolved: bool| {
            let q = &self.patches[patch];
            Evaluation {
                value: q.value(x),
                gradient: q.gradient(x),
                patch,
                region,
                resolved,
            }
        };
        for (i, c) in self.initial.curves.iter().enumerate() {
            if degenerate_triangle(c, self.depth)?.contains(x) {
                return Ok(at(i, None, true));
            }
        }
        if !polygon_contains(&self.regions[0].boundary(self.depth)?, x) {
            return Err(Error::OutsideRegion(x.x, x.y));
        }
        let mut r = 0;
        loop {
            let reg = &self.regions[r];
            let Some(fit) = &reg.fit else {
                let mut best = (f64::INFINITY, reg.patches[0]);
                for m in 0..3 {
                    let d = reg.curves[m].points(self.depth)?.distance_to(x);
                    if d < best.0 {
                        best = (d, reg.patches[m]);
                    }
                }
                return Ok(at(best.1, Some(r), false));
            };
            if triangle_from_vertices(fit.y, self.depth)?.contains(x) {
                return Ok(at(fit.patch, Some(r), true));
            }
            r = fit.children[sector(fit.x0, &fit.y, x)];
        }
    }

    /// Value and gradient agreement of the two patches meeting at every
    /// meeting point of every region.
    pub fn verify_c11(&self) -> C11Report {
        let mut rep = C11Report {
            scale: 1.0,
            ..Default::default()
        };
        for reg in &self.regions {
            for m in 0..3 {
                let q1 = &self.patches[reg.patches[(m + 1) % 3]];
                let q2 = &self.patches[reg.patches[(m + 2) % 3]];
                let x = reg.points[m];
                let (dv, dg) = q1.mismatch(q2, x);
                rep.points_checked += 1;
                rep.max_value_mismatch = rep.max_value_mismatch.max(dv);
                rep.max_gradient_mismatch = rep.max_gradient_mismatch.max(dg);
                rep.scale = rep.scale.max(q1.value(x).abs()).max(q1.gradient(x).norm());
            }
        }
        rep
    }

    /// |angle − π/2| between the boundary tangents of the two triangles
    /// meeting at each meeting point, measured on curves refined to `depth`.
    pub fn meeting_angle_errors(&self, depth: u32) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        let initial = self
            .initial
            .curves
            .iter()
            .map(|c| c.points(depth))
            .collect::<Result<Vec<_>>>()?;
        // Degenerate triangles i and j touch at pₖ, the end of curve i and
        // the start of curve j.
        for i in 0..3 {
            let j = (i + 1) % 3;
            let ti = *initial[i].tangents.last().unwrap_or(&Vec2::ZERO);
            let tj = initial[j].tangents[0];
            out.push((angle_between(ti, tj) - FRAC_PI_2).abs());
        }
        let fits: Vec<(&Region, &RegionFit)> = self.fitted_regions().map(|(_, r, f)| (r, f)).collect();
        let per_region = fits
            .par_iter()
            .map(|(reg, fit)| {
                let mut errs = Vec::with_capacity(3);
                for i in 0..3 {
                    let side = reg.curves[i].points(depth)?;
                    let mid = side.tangents[side.tangents.len() / 2];
                    let v = curve_points(fit.y[i], fit.y[(i + 1) % 3], fit.x0, depth)?;
                    errs.push((angle_between(mid, v.tangents[0]) - FRAC_PI_2).abs());
                }
                Ok(errs)
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(per_region.into_iter().flatten());
        Ok(out)
    }

    /// area(V)/area(meeting-point triangle) for every fitted region.
    pub fn subdivision_ratios(&self) -> Result<Vec<f64>> {
        let fits: Vec<(&Region, &RegionFit)> = self.fitted_regions().map(|(_, r, f)| (r, f)).collect();
        fits.par_iter()
            .map(|(reg, fit)| Ok(triangle_from_vertices(fit.y, self.depth)?.area() / triangle_area(reg.points)))
            .collect()
    }

    /// Fraction of the convex closure Z covered by the degenerate triangles
    /// and the proper triangles of level ≤ k, for k = 0..=max_level.
    pub fn coverage(&self) -> Result<Vec<f64>> {
        let degenerate: f64 = self
            .initial
            .degenerate_triangles(self.depth)?
            .iter()
            .map(|t| t.area())
            .sum();
        let total = degenerate + polygon_area(&self.regions[0].boundary(self.depth)?).abs();
        let mut by_level = vec![0.0; self.max_level as usize + 1];
        for (_, reg, fit) in self.fitted_regions() {
            by_level[reg.level as usize] += triangle_from_vertices(fit.y, self.depth)?.area();
        }
        let mut acc = degenerate;
        Ok(by_level
            .iter()
            .map(|a| {
                acc += a;
                acc / total
            })
            .collect())
    }

    /// Largest distance from a patch Hessian to the nearest circle matrix of
    /// the downward packing of the generators.
    pub fn packing_mismatch(&self) -> Result<f64> {
        let c = self
            .generators
            .iter()
            .map(matrix_to_circle)
            .collect::<Result<Vec<_>>>()?;
        let packing = downward_packing(&c[0], &c[1], &c[2], self.max_level)?;
        let mats = packing
            .circles
            .iter()
            .map(circle_to_matrix)
            .collect::<Result<Vec<_>>>()?;
        Ok(self
            .patches
            .iter()
            .map(|q| {
                mats.iter()
                    .map(|m| m.max_abs_diff(&q.h))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max))
    }

    /// Triangles filled by Hessian trace, darker where Δu is larger;
    /// unfitted regions are left blank.
    pub fn to_svg(&self, px: u32) -> Result<String> {
        let tris = self.triangles()?;
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in &self.initial.curves {
            for q in [c.start, c.apex, c.end] {
                lo = Vec2::new(lo.x.min(q.x), lo.y.min(q.y));
                hi = Vec2::new(hi.x.max(q.x), hi.y.max(q.y));
            }
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y);
        let s = px as f64 / span;
        let (w, h) = (((hi.x - lo.x) * s).ceil() as u32, ((hi.y - lo.y) * s).ceil() as u32);
        let traces: Vec<f64> = self.patches.iter().map(|q| q.laplacian()).collect();
        let tmin = traces.iter().cloned().fold(f64::INFINITY, f64::min);
        let tmax = traces.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
        );
        for (t, patch) in &tris {
            let shade = if tmax > tmin {
                (230.0 - 200.0 * (traces[*patch] - tmin) / (tmax - tmin)).round() as u8
            } else {
                128
            };
            let pts: Vec<String> = t
                .boundary()
                .iter()
                .map(|q| format!("{:.3},{:.3}", (q.x - lo.x) * s, (hi.y - q.y) * s))
                .collect();
            let class = match t.kind {
                TriangleKind::Proper => "proper",
                TriangleKind::Degenerate => "degenerate",
            };
            out += &format!(
                "<polygon class=\"{class}\" points=\"{}\" fill=\"rgb({shade},{shade},{shade})\" stroke=\"none\"/>\n",
                pts.join(" ")
            );
        }
        out += "</svg>\n";
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let v2 = |v: Vec2| json!([v.x, v.y]);
        json!({
            "generators": self.generators.iter().map(|g| json!([g.m11, g.m12, g.m22])).collect::<Vec<_>>(),
            "max_level": self.max_level,
            "p": self.initial.p.iter().map(|&q| v2(q)).collect::<Vec<_>>(),
            "patches": self.patches.iter().zip(&self.patch_levels).map(|(q, l)| json!({
                "level": l,
                "coefficients": q.coefficients(),
            })).collect::<Vec<_>>(),
            "regions": self.regions.iter().map(|r| json!({
                "level": r.level,
                "patches": r.patches,
                "points": r.points.iter().map(|&q| v2(q)).collect::<Vec<_>>(),
                "parent": r.parent,
                "fit": r.fit.as_ref().map(|f| json!({
                    "patch": f.patch,
                    "x0": v2(f.x0),
                    "y": f.y.iter().map(|&q| v2(q)).collect::<Vec<_>>(),
                    "children": f.children,
                })),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Index i of the sector at x0 bounded by the rays toward yⱼ and yₖ.
fn sector(x0: Vec2, y: &[Vec2; 3], x: Vec2) -> usize {
    let d = x - x0;
    let mut best = (f64::NEG_INFINITY, 0);
    for i in 0..3 {
        let u = y[(i + 1) % 3] - x0;
        let w = y[(i + 2) % 3] - x0;
        let s = u.cross(w).signum();
        // Both signed margins are ≥ 0 inside the sector.
        let m = (s * u.cross(d) / u.norm()).min(s * d.cross(w) / w.norm());
        if m > best.0 {
            best = (m, i);
        }
    }
    best.1
}
