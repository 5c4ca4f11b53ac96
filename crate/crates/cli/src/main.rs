//! `sandstone`: sandpile runs, Γ boundary rasters, Apollonian packings and
//! triangulations, and the verification suites.
//!
//! Exit codes: 0 ok, 1 verification or IO failure, 2 window overflow,
//! 3 precision not met, 4 bad input.

mod input;
mod output;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use sandstone::circles::{band_packing, downward_packing, tangency_residual, Frame, GEOM_TOL};
use sandstone::fractal::build_triangulation;
use sandstone::gamma::{raster_gamma, C0Options, Rect};
use sandstone::lattice::{render_heights, single_pile};
use sandstone::verify::{self, Suite, DEFAULT_SEED};
use sandstone::{Error, GenCircle, Lattice};

use input::parse_rational;

#[derive(Parser)]
#[command(name = "sandstone", version, about = "Sandpiles, the set Γ and Apollonian triangulations")]
struct Cli {
    /// Seed for the randomized verification suites.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads; all cores when unset. Outputs do not depend on it.
    #[arg(long, global = true, env = "SANDSTONE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stabilize N chips at the origin.
    Sandpile(SandpileArgs),
    /// Raster of c₀(a, b) over a parameter rectangle.
    Gamma(GammaArgs),
    /// Apollonian packing from three tangent generators.
    Packing(PackingArgs),
    /// Apollonian triangulation and its piecewise-quadratic solution.
    Fractal(FractalArgs),
    /// Run the invariant suites and print a PASS/FAIL table.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LatticeArg {
    Square,
    Tri,
}

impl From<LatticeArg> for Lattice {
    fn from(l: LatticeArg) -> Lattice {
        match l {
            LatticeArg::Square => Lattice::Square,
            LatticeArg::Tri => Lattice::Triangular,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameArg {
    Paper,
    Ford,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Frame {
        match f {
            FrameArg::Paper => Frame::Paper,
            FrameArg::Ford => Frame::Ford,
        }
    }
}

#[derive(Args)]
struct SandpileArgs {
    #[arg(long)]
    chips: u64,
    /// Height image over the support of the pile; PNG for a .png name,
    /// binary P5 otherwise.
    #[arg(long)]
    out: PathBuf,
    /// Odometer dump over the whole window; CSV for a .csv name, SANDODO1 binary otherwise.
    #[arg(long)]
    odometer: Option<PathBuf>,
    /// Window radius; overflow of the window is exit code 2.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long, value_enum, default_value = "square")]
    lattice: LatticeArg,
}

#[derive(Args)]
struct GammaArgs {
    /// a0 a1 b0 b1 as p/q rationals.
    #[arg(long, num_args = 4, value_names = ["A0", "A1", "B0", "B1"], value_parser = parse_rational, allow_negative_numbers = true, required = true)]
    rect: Vec<Rational64>,
    #[arg(long, num_args = 2, value_names = ["W", "H"], required = true)]
    grid: Vec<usize>,
    /// 1/2^k.
    #[arg(long, value_parser = parse_rational, default_value = "1/64")]
    precision: Rational64,
    #[arg(long, value_enum, default_value = "square")]
    lattice: LatticeArg,
    /// Gray image; PNG for a .png name, binary P5 otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Columns a,b,lo,hi,certified.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Largest torus side a probe may use.
    #[arg(long, default_value_t = sandstone::gamma::DEFAULT_TORUS_CAP)]
    torus_cap: usize,
}

#[derive(Args)]
struct PackingArgs {
    /// `band`, a JSON array of three circles, or @file.
    #[arg(long, default_value = "band")]
    generators: String,
    #[arg(long, default_value_t = 4)]
    levels: u32,
    /// Frame of the band generators.
    #[arg(long, value_enum, default_value = "paper")]
    frame: FrameArg,
    /// JSON for a .json name, SVG otherwise.
    #[arg(long)]
    out: PathBuf,
    /// Longer side of the SVG in pixels.
    #[arg(long, default_value_t = 800)]
    px: u32,
}

#[derive(Args)]
struct FractalArgs {
    /// `band`, a JSON array of three matrices or circles, or @file.
    #[arg(long, default_value = "band")]
    matrices: String,
    #[arg(long, default_value_t = 4)]
    levels: u32,
    /// Curve subdivision depth.
    #[arg(long, default_value_t = 10)]
    depth: u32,
    /// JSON for a .json name, SVG otherwise.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 800)]
    px: u32,
}

#[derive(Args)]
struct VerifyArgs {
    /// all, sandpile, gamma, geometry or fractal.
    #[arg(long, default_value = "all")]
    suite: String,
}

enum Failure {
    Verify(String),
    Overflow(String),
    Precision(String),
    BadInput(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) | Failure::Io(_) => 1,
            Failure::Overflow(_) => 2,
            Failure::Precision(_) => 3,
            Failure::BadInput(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Verify(m) | Failure::Overflow(m) | Failure::Precision(m) | Failure::BadInput(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::WindowOverflow(..) => Failure::Overflow(e.to_string()),
            Error::FitResidual(_) => Failure::Verify(e.to_string()),
            _ => Failure::BadInput(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(io_err(path))
}

type Run = Result<(), Failure>;

fn sandpile(a: SandpileArgs) -> Run {
    let lattice = Lattice::from(a.lattice);
    let (cfg, odo) = single_pile(a.chips, lattice, a.window)?;
    // The image covers the support of the pile, not the whole window.
    let support = cfg.support_radius().unwrap_or(0) as usize;
    let (w, h, img) = render_heights(&cfg.crop(support));
    output::write_gray(&a.out, w, h, &img).map_err(io_err(&a.out))?;
    if let Some(path) = &a.odometer {
        let mut f = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
        if output::is_csv(path) {
            odo.write_csv(&mut f)
        } else {
            odo.write_binary(&mut f)
        }
        .and_then(|_| f.flush())
        .map_err(io_err(path))?;
    }
    println!("lattice {}", lattice.name());
    println!("window radius {}", cfg.domain.width() / 2);
    println!("image {w}x{h}");
    println!("total topplings {}", odo.total());
    println!("max height {}", cfg.max());
    println!("sum = {}", cfg.sum());
    if cfg.sum() != a.chips as i64 {
        return Err(Failure::Verify(format!("chip sum {} differs from {}", cfg.sum(), a.chips)));
    }
    Ok(())
}

fn gamma(a: GammaArgs) -> Run {
    let rect = Rect {
        a0: a.rect[0],
        a1: a.rect[1],
        b0: a.rect[2],
        b1: a.rect[3],
    };
    let opts = C0Options {
        lattice: a.lattice.into(),
        torus_cap: a.torus_cap,
    };
    let raster = raster_gamma(rect, (a.grid[0], a.grid[1]), a.precision, opts)?;
    if let Some(path) = &a.out {
        output::write_gray(path, raster.width, raster.height, &raster.image()).map_err(io_err(path))?;
    }
    if let Some(path) = &a.csv {
        write_file(path, raster.csv().as_bytes())?;
    }
    let uncertified = raster.cells.iter().filter(|c| !c.certified).count();
    let probes: u64 = raster.cells.iter().map(|c| c.probes as u64).sum();
    println!("pixels {}x{}", raster.width, raster.height);
    println!("probes {probes}");
    println!("lipschitz excess {:.3e}", raster.lipschitz_excess());
    println!("uncertified {uncertified}");
    if raster.width * raster.height <= 16 {
        for j in 0..raster.height {
            for i in 0..raster.width {
                let (x, y) = raster.pixel(i, j);
                let c = raster.cell(i, j);
                println!("c0({x}, {y}) in [{}, {}]", c.lo, c.hi);
            }
        }
    }
    if uncertified > 0 {
        return Err(Failure::Precision(format!(
            "{uncertified} pixels wider than {} under torus cap {}",
            a.precision, a.torus_cap
        )));
    }
    Ok(())
}

fn check_tangent(g: &[GenCircle; 3]) -> Run {
    for (i, j) in [(0, 1), (1, 2), (0, 2)] {
        let r = tangency_residual(&g[i], &g[j]);
        if !(r <= GEOM_TOL) {
            return Err(Failure::BadInput(format!("generators {i} and {j} are not tangent (residual {r:.3e})")));
        }
    }
    Ok(())
}

/// Bounding box of the proper circles, or of the band when there are none.
fn packing_view(p: &sandstone::Packing) -> (f64, f64, f64, f64) {
    let mut v = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in &p.circles {
        if let (Some(o), Some(r)) = (c.center(), c.radius()) {
            v = (v.0.min(o.x - r), v.1.min(o.y - r), v.2.max(o.x + r), v.3.max(o.y + r));
        }
    }
    if v.0.is_finite() {
        let pad = 0.02 * (v.2 - v.0).max(v.3 - v.1);
        (v.0 - pad, v.1 - pad, v.2 + pad, v.3 + pad)
    } else {
        (-1.0, -1.0, 3.0, 3.0)
    }
}

fn packing(a: PackingArgs) -> Run {
    let p = match input::parse_circles(&a.generators).map_err(Failure::BadInput)? {
        None => band_packing(a.levels, a.frame.into()),
        Some(g) => {
            check_tangent(&g)?;
            downward_packing(&g[0], &g[1], &g[2], a.levels)?
        }
    };
    if output::is_json(&a.out) {
        let mut s = serde_json::to_string_pretty(&p.to_json()).map_err(|e| Failure::Io(e.to_string()))?;
        s.push('\n');
        write_file(&a.out, s.as_bytes())?;
    } else {
        write_file(&a.out, p.to_svg(packing_view(&p), a.px).as_bytes())?;
    }
    let report = sandstone::circles::validate_geometry(&p);
    println!("circles {}", p.len());
    println!("configurations {}", report.configs_checked);
    println!("descartes residual {:.3e}", report.descartes_residual);
    println!("tangency residual {:.3e}", report.tangency_residual);
    println!("angle bound violations {}", report.total_violations());
    Ok(())
}

fn fractal(a: FractalArgs) -> Run {
    let m = input::parse_matrices(&a.matrices).map_err(Failure::BadInput)?;
    let t = build_triangulation(&m, a.levels, a.depth)?;
    if output::is_json(&a.out) {
        let mut s = serde_json::to_string_pretty(&t.to_json()).map_err(|e| Failure::Io(e.to_string()))?;
        s.push('\n');
        write_file(&a.out, s.as_bytes())?;
    } else {
        write_file(&a.out, t.to_svg(a.px)?.as_bytes())?;
    }
    let c11 = t.verify_c11();
    let mismatch = t.packing_mismatch()?;
    let residual = t
        .fitted_regions()
        .map(|(_, _, f)| f.diagnostics.residual)
        .fold(0.0, f64::max);
    println!("regions {}", t.regions.len());
    println!("proper triangles {}", t.proper_triangle_count());
    println!("max fit residual {residual:.3e}");
    println!("c11 relative mismatch {:.3e} over {} points", c11.relative(), c11.points_checked);
    println!("hessian packing mismatch {mismatch:.3e}");
    let tol = 1e-8;
    if !(c11.relative() <= tol && mismatch <= tol) {
        return Err(Failure::Verify(format!("verification above {tol:e}")));
    }
    Ok(())
}

fn run_verify(a: VerifyArgs, seed: u64) -> Run {
    let suites: Vec<Suite> = if a.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::parse(&a.suite).ok_or_else(|| Failure::BadInput(format!("unknown suite '{}'", a.suite)))?]
    };
    let mut failed = 0;
    let mut total = 0;
    for s in suites {
        for c in verify::run(s, seed) {
            println!("{c}");
            total += 1;
            failed += usize::from(!c.passed);
        }
    }
    println!("{} of {total} checks passed (seed {seed})", total - failed);
    if failed > 0 {
        return Err(Failure::Verify(format!("{failed} checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(4) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("sandstone: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Sandpile(a) => sandpile(a),
        Command::Gamma(a) => gamma(a),
        Command::Packing(a) => packing(a),
        Command::Fractal(a) => fractal(a),
        Command::Verify(a) => run_verify(a, cli.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("sandstone: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
