//! Python bindings. Rationals cross the boundary as `fractions.Fraction`
//! (ints and "p/q" strings are accepted on input); matrices as `Sym2`.

use num_rational::Rational64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use sandstone::circles::{self, Frame};
use sandstone::gamma::{self, C0Options, Rect};
use sandstone::lattice::{self, Domain};
use sandstone::symmat::{self, RANK1_TOL};
use sandstone::{fractal, ChipConfig, GenCircle, Lattice, Order, QuadraticPatch, Status, Vec2};

fn err(e: sandstone::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational64> {
    if let Ok(s) = obj.extract::<String>() {
        let (n, d) = s.split_once('/').unwrap_or((s.as_str(), "1"));
        let parse = |t: &str| t.trim().parse::<i64>().map_err(|_| PyValueError::new_err(format!("bad rational {s:?}")));
        let (n, d) = (parse(n)?, parse(d)?);
        if d == 0 {
            return Err(PyValueError::new_err("zero denominator"));
        }
        return Ok(Rational64::new(n, d));
    }
    let n: i64 = obj.getattr("numerator")?.extract()?;
    let d: i64 = obj.getattr("denominator")?.extract()?;
    Ok(Rational64::new(n, d))
}

fn fraction(py: Python<'_>, q: Rational64) -> PyResult<Py<PyAny>> {
    Ok(py.import("fractions")?.getattr("Fraction")?.call1((*q.numer(), *q.denom()))?.unbind())
}

fn parse_lattice(name: &str) -> PyResult<Lattice> {
    match name {
        "square" => Ok(Lattice::Square),
        "tri" | "triangular" => Ok(Lattice::Triangular),
        _ => Err(PyValueError::new_err(format!("unknown lattice {name:?}"))),
    }
}

fn parse_frame(name: &str) -> PyResult<Frame> {
    match name {
        "paper" => Ok(Frame::Paper),
        "ford" => Ok(Frame::Ford),
        _ => Err(PyValueError::new_err(format!("unknown frame {name:?}"))),
    }
}

fn parse_order(name: &str, seed: u64) -> PyResult<Order> {
    match name {
        "fifo" => Ok(Order::Fifo),
        "fifo_unit" => Ok(Order::FifoUnit),
        "row_major" => Ok(Order::RowMajor),
        "random" => Ok(Order::RandomSweep(seed)),
        "priority" => Ok(Order::Priority),
        _ => Err(PyValueError::new_err(format!("unknown order {name:?}"))),
    }
}

/// Real symmetric 2×2 matrix [[m11, m12], [m12, m22]].
#[pyclass(name = "Sym2", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PySym2(symmat::Sym2);

#[pymethods]
impl PySym2 {
    #[new]
    fn new(m11: f64, m12: f64, m22: f64) -> Self {
        PySym2(symmat::Sym2::new(m11, m12, m22))
    }

    /// M(a, b, c) = ½[[c + a, b], [b, c − a]].
    #[staticmethod]
    fn m_of(a: f64, b: f64, c: f64) -> Self {
        PySym2(symmat::m_of(a, b, c))
    }

    #[getter]
    fn m11(&self) -> f64 {
        self.0.m11
    }

    #[getter]
    fn m12(&self) -> f64 {
        self.0.m12
    }

    #[getter]
    fn m22(&self) -> f64 {
        self.0.m22
    }

    fn params(&self) -> (f64, f64, f64) {
        self.0.params()
    }

    fn trace(&self) -> f64 {
        self.0.trace()
    }

    fn det(&self) -> f64 {
        self.0.det()
    }

    /// The reflection M(a, b, c) ↦ M(a, b, 4 − c).
    fn reflect(&self) -> Self {
        PySym2(self.0.reflect_trace2())
    }

    #[pyo3(signature = (other, tol = None))]
    fn is_ext_tangent(&self, other: &PySym2, tol: Option<f64>) -> PyResult<bool> {
        symmat::is_ext_tangent(&self.0, &other.0, tol.unwrap_or(RANK1_TOL)).map_err(err)
    }

    fn circle(&self) -> PyResult<PyCircle> {
        circles::matrix_to_circle(&self.0).map(PyCircle).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Sym2({}, {}, {})", self.0.m11, self.0.m12, self.0.m22)
    }
}

/// A circle or a line, the latter given by unit normal and offset.
#[pyclass(name = "Circle", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyCircle(GenCircle);

#[pymethods]
impl PyCircle {
    #[staticmethod]
    fn proper(x: f64, y: f64, r: f64) -> PyResult<Self> {
        GenCircle::proper(x, y, r).map(PyCircle).map_err(err)
    }

    #[staticmethod]
    fn line(nx: f64, ny: f64, offset: f64) -> PyResult<Self> {
        GenCircle::line(Vec2::new(nx, ny), offset).map(PyCircle).map_err(err)
    }

    #[getter]
    fn is_line(&self) -> bool {
        self.0.is_line()
    }

    #[getter]
    fn curvature(&self) -> f64 {
        self.0.curvature()
    }

    #[getter]
    fn center(&self) -> Option<(f64, f64)> {
        self.0.center().map(|c| (c.x, c.y))
    }

    #[getter]
    fn radius(&self) -> Option<f64> {
        self.0.radius()
    }

    /// m(C) = M(cx, cy, r + 2).
    fn matrix(&self) -> PyResult<PySym2> {
        circles::circle_to_matrix(&self.0).map(PySym2).map_err(err)
    }

    fn __repr__(&self) -> String {
        match self.0 {
            GenCircle::Proper { center, radius } => format!("Circle(({}, {}), {})", center.x, center.y, radius),
            GenCircle::Line { normal, offset } => format!("Line(({}, {}), {})", normal.x, normal.y, offset),
        }
    }
}

/// Matrix of the proper successor of three pairwise tangent circle matrices.
#[pyfunction]
fn successor_matrix(a1: &PySym2, a2: &PySym2, a3: &PySym2) -> PyResult<PySym2> {
    symmat::successor_matrix(&a1.0, &a2.0, &a3.0).map(PySym2).map_err(err)
}

#[pyfunction]
fn successor_circle(c1: &PyCircle, c2: &PyCircle, c3: &PyCircle) -> PyResult<PyCircle> {
    circles::successor_circle(&c1.0, &c2.0, &c3.0).map(PyCircle).map_err(err)
}

/// Recovers (B, α) from three quadratic patches ((m11, m12, m22), (gx, gy), e)
/// agreeing at the points opposite each patch.
#[pyfunction]
fn rank1_recover(points: [(f64, f64); 3], patches: [((f64, f64, f64), (f64, f64), f64); 3]) -> PyResult<(PySym2, [f64; 3])> {
    let p = points.map(|(x, y)| Vec2::new(x, y));
    let q = patches.map(|((h11, h12, h22), (gx, gy), e)| {
        QuadraticPatch::new(symmat::Sym2::new(h11, h12, h22), Vec2::new(gx, gy), e)
    });
    let rec = symmat::rank1_recover(p, q, RANK1_TOL).map_err(err)?;
    Ok((PySym2(rec.b), rec.alpha))
}

#[pyclass(name = "Packing", frozen)]
struct PyPacking(circles::Packing);

#[pymethods]
impl PyPacking {
    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn circles(&self) -> Vec<PyCircle> {
        self.0.circles.iter().map(|&c| PyCircle(c)).collect()
    }

    #[getter]
    fn levels(&self) -> Vec<u32> {
        self.0.levels.clone()
    }

    /// Largest Descartes residual over the recorded successor configurations.
    fn descartes_residual(&self) -> f64 {
        self.0
            .configs
            .iter()
            .map(|c| circles::descartes_residual(self.0.config_curvatures(c)))
            .fold(0.0, f64::max)
    }

    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rep = circles::validate_geometry(&self.0);
        let d = PyDict::new(py);
        d.set_item("configs_checked", rep.configs_checked)?;
        d.set_item("violations", rep.violations)?;
        d.set_item("min_slack", rep.min_slack)?;
        d.set_item("median_residual", rep.median_residual)?;
        d.set_item("descartes_residual", rep.descartes_residual)?;
        d.set_item("tangency_residual", rep.tangency_residual)?;
        Ok(d)
    }

    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }

    fn to_svg(&self, view: (f64, f64, f64, f64), px: u32) -> String {
        self.0.to_svg(view, px)
    }
}

#[pyfunction]
#[pyo3(signature = (level, frame = "paper"))]
fn band_packing(level: u32, frame: &str) -> PyResult<PyPacking> {
    Ok(PyPacking(circles::band_packing(level, parse_frame(frame)?)))
}

#[pyfunction]
fn downward_packing(c1: &PyCircle, c2: &PyCircle, c3: &PyCircle, level: u32) -> PyResult<PyPacking> {
    circles::downward_packing(&c1.0, &c2.0, &c3.0, level).map(PyPacking).map_err(err)
}

/// Three mutually tangent circles with the given radii.
#[pyfunction]
fn tangent_triple(r1: f64, r2: f64, r3: f64) -> PyResult<[PyCircle; 3]> {
    circles::tangent_triple(r1, r2, r3).map(|t| t.map(PyCircle)).map_err(err)
}

/// A stabilized chip configuration on a window centered at the origin.
#[pyclass(name = "Sandpile", frozen)]
struct PySandpile(ChipConfig);

#[pymethods]
impl PySandpile {
    #[getter]
    fn width(&self) -> usize {
        self.0.domain.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.domain.height()
    }

    /// Row-major heights.
    fn values(&self) -> Vec<i32> {
        self.0.values.clone()
    }

    fn get(&self, x: i64, y: i64) -> Option<i32> {
        self.0.get(x, y)
    }

    fn total(&self) -> i64 {
        self.0.sum()
    }

    fn support_radius(&self) -> Option<i64> {
        self.0.support_radius()
    }

    /// P5 graymap of the heights, cropped to the support.
    fn pgm<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let cfg = self.0.crop(self.0.support_radius().unwrap_or(0) as usize);
        let (w, h, data) = lattice::render_heights(&cfg);
        let mut out = Vec::new();
        lattice::write_pgm(&mut out, w, h, &data).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyBytes::new(py, &out))
    }
}

/// Stabilizes n chips at the origin; returns the sandpile and the total
/// number of topplings.
#[pyfunction]
#[pyo3(signature = (n, lattice = "square", radius = None))]
fn single_pile(py: Python<'_>, n: u64, lattice: &str, radius: Option<usize>) -> PyResult<(PySandpile, i64)> {
    let l = parse_lattice(lattice)?;
    let (cfg, odo) = py.detach(|| lattice::single_pile(n, l, radius)).map_err(err)?;
    Ok((PySandpile(cfg), odo.total()))
}

/// Stabilizes a row-major m × m torus configuration. Returns the final
/// heights, the odometer and whether stabilization exists.
#[pyfunction]
#[pyo3(signature = (values, m, lattice = "square", order = "fifo", seed = 0))]
fn stabilize_torus(values: Vec<i32>, m: usize, lattice: &str, order: &str, seed: u64) -> PyResult<(Vec<i32>, Vec<i64>, bool)> {
    if values.len() != m * m {
        return Err(PyValueError::new_err(format!("expected {} values, got {}", m * m, values.len())));
    }
    let mut it = values.into_iter();
    let eta = ChipConfig::from_fn(Domain::Torus { m }, parse_lattice(lattice)?, |_, _| it.next().unwrap());
    let (cfg, odo, status) = lattice::stabilize_with(&eta, parse_order(order, seed)?).map_err(err)?;
    Ok((cfg.values, odo.values, status == Status::Stable))
}

/// Whether the probe matrix at (a, b, c) is stabilizable. On the triangular
/// lattice b is β = b/√3.
#[pyfunction]
#[pyo3(signature = (a, b, c, lattice = "square"))]
fn gamma_member(a: &Bound<'_, PyAny>, b: &Bound<'_, PyAny>, c: &Bound<'_, PyAny>, lattice: &str) -> PyResult<bool> {
    let l = parse_lattice(lattice)?;
    let m = gamma::probe_matrix(rational(a)?, rational(b)?, rational(c)?, l);
    gamma::gamma_member(&m, l).map_err(err)
}

fn interval<'py>(py: Python<'py>, c: &sandstone::C0Interval) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("lo", fraction(py, c.lo)?)?;
    d.set_item("hi", fraction(py, c.hi)?)?;
    d.set_item("certified", c.certified)?;
    d.set_item("probes", c.probes)?;
    Ok(d)
}

/// Certified bracket of the boundary height c0(a, b).
#[pyfunction]
#[pyo3(signature = (a, b, precision = None, lattice = "square", torus_cap = None))]
fn c0<'py>(
    py: Python<'py>,
    a: &Bound<'py, PyAny>,
    b: &Bound<'py, PyAny>,
    precision: Option<&Bound<'py, PyAny>>,
    lattice: &str,
    torus_cap: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let prec = precision.map(rational).transpose()?.unwrap_or(Rational64::new(1, 64));
    let mut opts = C0Options {
        lattice: parse_lattice(lattice)?,
        ..C0Options::default()
    };
    opts.torus_cap = torus_cap.unwrap_or(opts.torus_cap);
    let (a, b) = (rational(a)?, rational(b)?);
    let c = py.detach(|| gamma::c0_with(a, b, prec, opts)).map_err(err)?;
    interval(py, &c)
}

#[pyclass(name = "Raster", frozen)]
struct PyRaster(sandstone::BoundaryRaster);

#[pymethods]
impl PyRaster {
    #[getter]
    fn width(&self) -> usize {
        self.0.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height
    }

    fn all_certified(&self) -> bool {
        self.0.all_certified()
    }

    /// Largest violation of the 1-Lipschitz bound between adjacent pixels,
    /// net of precision; ≤ 0 when the bound holds.
    fn lipschitz_excess(&self) -> f64 {
        self.0.lipschitz_excess()
    }

    fn cell<'py>(&self, py: Python<'py>, i: usize, j: usize) -> PyResult<Bound<'py, PyDict>> {
        if i >= self.0.width || j >= self.0.height {
            return Err(PyValueError::new_err("pixel out of range"));
        }
        interval(py, self.0.cell(i, j))
    }

    fn csv(&self) -> String {
        self.0.csv()
    }

    fn pgm<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyBytes>> {
        let mut out = Vec::new();
        lattice::write_pgm(&mut out, self.0.width, self.0.height, &self.0.image())
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyBytes::new(py, &out))
    }
}

/// c0 over a grid of pixels spanning rect = (a0, a1, b0, b1).
#[pyfunction]
#[pyo3(signature = (rect, width, height, precision = None, lattice = "square", torus_cap = None))]
fn raster_gamma(
    py: Python<'_>,
    rect: [Bound<'_, PyAny>; 4],
    width: usize,
    height: usize,
    precision: Option<&Bound<'_, PyAny>>,
    lattice: &str,
    torus_cap: Option<usize>,
) -> PyResult<PyRaster> {
    let prec = precision.map(rational).transpose()?.unwrap_or(Rational64::new(1, 64));
    let rect = Rect {
        a0: rational(&rect[0])?,
        a1: rational(&rect[1])?,
        b0: rational(&rect[2])?,
        b1: rational(&rect[3])?,
    };
    let mut opts = C0Options {
        lattice: parse_lattice(lattice)?,
        ..C0Options::default()
    };
    opts.torus_cap = torus_cap.unwrap_or(opts.torus_cap);
    py.detach(|| gamma::raster_gamma(rect, (width, height), prec, opts))
        .map(PyRaster)
        .map_err(err)
}

/// Piecewise-quadratic solution on an Apollonian triangulation.
#[pyclass(name = "Triangulation", frozen)]
struct PyTriangulation(sandstone::Triangulation);

#[pymethods]
impl PyTriangulation {
    #[getter]
    fn regions(&self) -> usize {
        self.0.regions.len()
    }

    #[getter]
    fn patches(&self) -> usize {
        self.0.patches.len()
    }

    fn proper_triangle_count(&self) -> usize {
        self.0.proper_triangle_count()
    }

    /// (value, (gx, gy)) of the solution at (x, y).
    fn evaluate(&self, x: f64, y: f64) -> PyResult<(f64, (f64, f64))> {
        let e = self.0.evaluate(Vec2::new(x, y)).map_err(err)?;
        Ok((e.value, (e.gradient.x, e.gradient.y)))
    }

    /// Relative value/gradient mismatch between neighboring patches.
    fn c11_mismatch(&self) -> f64 {
        self.0.verify_c11().relative()
    }

    /// Largest distance from a patch Hessian to its packing circle's matrix.
    fn packing_mismatch(&self) -> PyResult<f64> {
        self.0.packing_mismatch().map_err(err)
    }

    fn subdivision_ratios(&self) -> PyResult<Vec<f64>> {
        self.0.subdivision_ratios().map_err(err)
    }

    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }

    fn to_svg(&self, px: u32) -> PyResult<String> {
        self.0.to_svg(px).map_err(err)
    }
}

/// Builds the triangulation from three pairwise tangent matrices.
#[pyfunction]
#[pyo3(signature = (matrices, levels = 4, depth = 10))]
fn build_triangulation(py: Python<'_>, matrices: [PySym2; 3], levels: u32, depth: u32) -> PyResult<PyTriangulation> {
    let a = matrices.map(|m| m.0);
    py.detach(|| fractal::build_triangulation(&a, levels, depth))
        .map(PyTriangulation)
        .map_err(err)
}

/// Area ratio of the Apollonian triangle on the given vertices to the
/// straight triangle.
#[pyfunction]
#[pyo3(signature = (vertices, depth = 12))]
fn area_ratio(vertices: [(f64, f64); 3], depth: u32) -> PyResult<f64> {
    let t = fractal::triangle_from_vertices(vertices.map(|(x, y)| Vec2::new(x, y)), depth).map_err(err)?;
    Ok(t.area() / t.vertex_area())
}

#[pymodule]
#[pyo3(name = "sandstone")]
fn sandstone_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySym2>()?;
    m.add_class::<PyCircle>()?;
    m.add_class::<PyPacking>()?;
    m.add_class::<PySandpile>()?;
    m.add_class::<PyRaster>()?;
    m.add_class::<PyTriangulation>()?;
    m.add_function(wrap_pyfunction!(successor_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(successor_circle, m)?)?;
    m.add_function(wrap_pyfunction!(rank1_recover, m)?)?;
    m.add_function(wrap_pyfunction!(band_packing, m)?)?;
    m.add_function(wrap_pyfunction!(downward_packing, m)?)?;
    m.add_function(wrap_pyfunction!(tangent_triple, m)?)?;
    m.add_function(wrap_pyfunction!(single_pile, m)?)?;
    m.add_function(wrap_pyfunction!(stabilize_torus, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_member, m)?)?;
    m.add_function(wrap_pyfunction!(c0, m)?)?;
    m.add_function(wrap_pyfunction!(raster_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(build_triangulation, m)?)?;
    m.add_function(wrap_pyfunction!(area_ratio, m)?)?;
    m.add("DEFAULT_SEED", sandstone::verify::DEFAULT_SEED)?;
    Ok(())
}
