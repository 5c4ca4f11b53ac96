//! Square and triangular lattices, chip configurations on windows and tori,
//! and the toppling engine.
//!
//! A site holding at least `degree` chips topples by sending one chip to
//! each neighbor. The engine topples ⌊h/degree⌋ times per visit; the final
//! configuration and the odometer do not depend on the processing order.
//! On a torus, a configuration is stabilizable iff some site never topples,
//! so the run is abandoned the moment every site has toppled.

use std::collections::{BinaryHeap, VecDeque};
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::symmat::Vec2;
use crate::{Error, Result};

const SQUARE_OFFSETS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
const TRIANGULAR_OFFSETS: [(i64, i64); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (-1, 1), (1, -1)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lattice {
    Square,
    Triangular,
}

impl Lattice {
    pub fn name(&self) -> &'static str {
        match self {
            Lattice::Square => "square",
            Lattice::Triangular => "triangular",
        }
    }

    /// Neighbor offsets in lattice coordinates; closed under negation.
    pub fn offsets(&self) -> &'static [(i64, i64)] {
        match self {
            Lattice::Square => &SQUARE_OFFSETS,
            Lattice::Triangular => &TRIANGULAR_OFFSETS,
        }
    }

    pub fn degree(&self) -> i32 {
        self.offsets().len() as i32
    }

    pub fn stable_max(&self) -> i32 {
        self.degree() - 1
    }

    /// Columns mapping lattice coordinates to the plane.
    pub fn basis(&self) -> [Vec2; 2] {
        match self {
            Lattice::Square => [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)],
            Lattice::Triangular => [Vec2::new(1.0, 0.0), Vec2::new(0.5, 3f64.sqrt() / 2.0)],
        }
    }

    pub fn embed(&self, x: i64, y: i64) -> Vec2 {
        let [e1, e2] = self.basis();
        e1 * x as f64 + e2 * y as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Sites (x, y) with origin.0 ≤ x < origin.0 + width, likewise for y.
    Window {
        width: usize,
        height: usize,
        origin: (i64, i64),
    },
    /// ℤ²/mℤ² in lattice coordinates.
    Torus { m: usize },
}

impl Domain {
    /// Square window of sites with |x|, |y| ≤ radius.
    pub fn centered(radius: usize) -> Domain {
        let side = 2 * radius + 1;
        Domain::Window {
            width: side,
            height: side,
            origin: (-(radius as i64), -(radius as i64)),
        }
    }

    pub fn width(&self) -> usize {
        match *self {
            Domain::Window { width, .. } => width,
            Domain::Torus { m } => m,
        }
    }

    pub fn height(&self) -> usize {
        match *self {
            Domain::Window { height, .. } => height,
            Domain::Torus { m } => m,
        }
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Domain::Torus { .. })
    }

    /// Row-major index of a site; torus coordinates are reduced mod m.
    pub fn index(&self, x: i64, y: i64) -> Option<usize> {
        match *self {
            Domain::Window { width, height, origin } => {
                let (dx, dy) = (x - origin.0, y - origin.1);
                if dx < 0 || dy < 0 || dx >= width as i64 || dy >= height as i64 {
                    None
                } else {
                    Some(dy as usize * width + dx as usize)
                }
            }
            Domain::Torus { m } => {
                let mm = m as i64;
                Some(y.rem_euclid(mm) as usize * m + x.rem_euclid(mm) as usize)
            }
        }
    }

    pub fn coords(&self, idx: usize) -> (i64, i64) {
        match *self {
            Domain::Window { width, origin, .. } => {
                ((idx % width) as i64 + origin.0, (idx / width) as i64 + origin.1)
            }
            Domain::Torus { m } => ((idx % m) as i64, (idx / m) as i64),
        }
    }

    fn on_boundary(&self, idx: usize) -> bool {
        match *self {
            Domain::Window { width, height, .. } => {
                let (x, y) = (idx % width, idx / width);
                x == 0 || y == 0 || x + 1 == width || y + 1 == height
            }
            Domain::Torus { .. } => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChipConfig {
    pub domain: Domain,
    pub lattice: Lattice,
    /// Row-major; negative counts are allowed.
    pub values: Vec<i32>,
}

impl ChipConfig {
    pub fn zeros(domain: Domain, lattice: Lattice) -> Self {
        ChipConfig {
            domain,
            lattice,
            values: vec![0; domain.len()],
        }
    }

    pub fn from_fn(domain: Domain, lattice: Lattice, mut f: impl FnMut(i64, i64) -> i32) -> Self {
        let values = (0..domain.len())
            .map(|i| {
                let (x, y) = domain.coords(i);
                f(x, y)
            })
            .collect();
        ChipConfig { domain, lattice, values }
    }

    pub fn get(&self, x: i64, y: i64) -> Option<i32> {
        self.domain.index(x, y).map(|i| self.values[i])
    }

    pub fn set(&mut self, x: i64, y: i64, v: i32) -> Result<()> {
        let i = self.domain.index(x, y).ok_or(Error::OutsideDomain(x, y))?;
        self.values[i] = v;
        Ok(())
    }

    pub fn sum(&self) -> i64 {
        self.values.iter().map(|&v| v as i64).sum()
    }

    pub fn max(&self) -> i32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn is_stable(&self) -> bool {
        let m = self.lattice.stable_max();
        self.values.iter().all(|&v| v <= m)
    }

    /// Smallest r with every nonzero site inside |x|, |y| ≤ r.
    pub fn support_radius(&self) -> Option<i64> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, _)| {
                let (x, y) = self.domain.coords(i);
                x.abs().max(y.abs())
            })
            .max()
    }

    /// The window |x|, |y| ≤ radius cut out of this configuration.
    pub fn crop(&self, radius: usize) -> ChipConfig {
        let d = Domain::centered(radius);
        ChipConfig::from_fn(d, self.lattice, |x, y| self.get(x, y).unwrap_or(0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Odometer {
    pub domain: Domain,
    /// Row-major toppling counts, all ≥ 0.
    pub values: Vec<i64>,
}

impl Odometer {
    pub fn get(&self, x: i64, y: i64) -> Option<i64> {
        self.domain.index(x, y).map(|i| self.values[i])
    }

    pub fn total(&self) -> i64 {
        self.values.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,v")?;
        for (i, v) in self.values.iter().enumerate() {
            let (x, y) = self.domain.coords(i);
            writeln!(w, "{x},{y},{v}")?;
        }
        Ok(())
    }

    /// "SANDODO1", then width, height as u64 and origin x, y as i64, then
    /// the values row-major as i64; all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"SANDODO1")?;
        w.write_all(&(self.domain.width() as u64).to_le_bytes())?;
        w.write_all(&(self.domain.height() as u64).to_le_bytes())?;
        let origin = self.domain.coords(0);
        w.write_all(&origin.0.to_le_bytes())?;
        w.write_all(&origin.1.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Stable,
    /// Torus only: every site toppled, so no stabilization exists.
    AbortedAllToppled,
}

/// Site processing order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Order {
    /// Queue of unstable sites, ⌊h/degree⌋ topplings per visit.
    Fifo,
    /// Queue of unstable sites, one toppling per visit.
    FifoUnit,
    /// Repeated row-major sweeps.
    RowMajor,
    /// Repeated sweeps in a seeded random permutation.
    RandomSweep(u64),
    /// Always the site with the most chips next.
    Priority,
}

/// Discrete Laplacian Σ_{y∼x} (u(y) − u(x)) of a row-major field.
pub fn laplacian(u: &[i64], domain: &Domain, lattice: Lattice, x: i64, y: i64) -> Result<i64> {
    let c = domain.index(x, y).ok_or(Error::OutsideDomain(x, y))?;
    let mut s = 0i64;
    for &(dx, dy) in lattice.offsets() {
        let n = domain
            .index(x + dx, y + dy)
            .ok_or(Error::OutsideDomain(x + dx, y + dy))?;
        s += u[n] - u[c];
    }
    Ok(s)
}

struct Engine {
    domain: Domain,
    deg: i32,
    chips: Vec<i32>,
    odo: Vec<i64>,
    untoppled: usize,
    neighbor_delta: Vec<isize>,
    offsets: &'static [(i64, i64)],
}

impl Engine {
    fn new(cfg: &ChipConfig) -> Self {
        let w = cfg.domain.width() as isize;
        let offsets = cfg.lattice.offsets();
        Engine {
            domain: cfg.domain,
            deg: cfg.lattice.degree(),
            chips: cfg.values.clone(),
            odo: vec![0; cfg.values.len()],
            untoppled: cfg.values.len(),
            neighbor_delta: offsets.iter().map(|&(dx, dy)| dx as isize + dy as isize * w).collect(),
            offsets,
        }
    }

    #[inline]
    fn for_neighbors(&self, idx: usize, mut f: impl FnMut(usize)) {
        match self.domain {
            Domain::Window { .. } => {
                for &d in &self.neighbor_delta {
                    f((idx as isize + d) as usize);
                }
            }
            Domain::Torus { m } => {
                let (x, y) = (idx % m, idx / m);
                for &(dx, dy) in self.offsets {
                    let nx = if dx == 1 && x + 1 == m {
                        0
                    } else if dx == -1 && x == 0 {
                        m - 1
                    } else {
                        (x as i64 + dx) as usize
                    };
                    let ny = if dy == 1 && y + 1 == m {
                        0
                    } else if dy == -1 && y == 0 {
                        m - 1
                    } else {
                        (y as i64 + dy) as usize
                    };
                    f(ny * m + nx);
                }
            }
        }
    }

    /// Topples `idx` k times. Returns Ok(true) when the torus run must stop.
    #[inline]
    fn topple(&mut self, idx: usize, k: i32, mut on_gain: impl FnMut(usize, i32)) -> Result<bool> {
        if self.domain.on_boundary(idx) {
            let (x, y) = self.domain.coords(idx);
            return Err(Error::WindowOverflow(x, y));
        }
        self.chips[idx] -= k * self.deg;
        if self.odo[idx] == 0 {
            self.untoppled -= 1;
        }
        self.odo[idx] += k as i64;
        let mut gained: [usize; 6] = [0; 6];
        let mut n = 0;
        self.for_neighbors_into(idx, &mut gained, &mut n);
        let chips = &mut self.chips;
        for &g in &gained[..n] {
            chips[g] += k;
            on_gain(g, chips[g]);
        }
        Ok(self.domain.is_torus() && self.untoppled == 0)
    }

    #[inline]
    fn for_neighbors_into(&self, idx: usize, out: &mut [usize; 6], n: &mut usize) {
        let mut c = 0;
        self.for_neighbors(idx, |g| {
            out[c] = g;
            c += 1;
        });
        *n = c;
    }

    fn run(&mut self, order: Order) -> Result<Status> {
        let deg = self.deg;
        match order {
            Order::Fifo | Order::FifoUnit => {
                let unit = order == Order::FifoUnit;
                let mut queued = vec![false; self.chips.len()];
                let mut queue: VecDeque<usize> = VecDeque::new();
                for (i, &h) in self.chips.iter().enumerate() {
                    if h >= deg {
                        queued[i] = true;
                        queue.push_back(i);
                    }
                }
                while let Some(i) = queue.pop_front() {
                    queued[i] = false;
                    let h = self.chips[i];
                    if h < deg {
                        continue;
                    }
                    let k = if unit { 1 } else { h / deg };
                    let stop = self.topple(i, k, |g, v| {
                        if v >= deg && !queued[g] {
                            queued[g] = true;
                            queue.push_back(g);
                        }
                    })?;
                    if stop {
                        return Ok(Status::AbortedAllToppled);
                    }
                    if self.chips[i] >= deg && !queued[i] {
                        queued[i] = true;
                        queue.push_back(i);
                    }
                }
                Ok(Status::Stable)
            }
            Order::RowMajor | Order::RandomSweep(_) => {
                let mut perm: Vec<usize> = (0..self.chips.len()).collect();
                if let Order::RandomSweep(seed) = order {
                    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                }
                loop {
                    let mut any = false;
                    for &i in &perm {
                        let h = self.chips[i];
                        if h >= deg {
                            any = true;
                            if self.topple(i, h / deg, |_, _| {})? {
                                return Ok(Status::AbortedAllToppled);
                            }
                        }
                    }
                    if !any {
                        return Ok(Status::Stable);
                    }
                }
            }
            Order::Priority => {
                let mut heap: BinaryHeap<(i32, std::cmp::Reverse<usize>)> = self
                    .chips
                    .iter()
                    .enumerate()
                    .filter(|(_, &h)| h >= deg)
                    .map(|(i, &h)| (h, std::cmp::Reverse(i)))
                    .collect();
                while let Some((h, std::cmp::Reverse(i))) = heap.pop() {
                    if self.chips[i] != h || h < deg {
                        continue;
                    }
                    let mut pushes = Vec::with_capacity(6);
                    if self.topple(i, h / deg, |g, v| {
                        if v >= deg {
                            pushes.push((v, std::cmp::Reverse(g)));
                        }
                    })? {
                        return Ok(Status::AbortedAllToppled);
                    }
                    heap.extend(pushes);
                    if self.chips[i] >= deg {
                        heap.push((self.chips[i], std::cmp::Reverse(i)));
                    }
                }
                Ok(Status::Stable)
            }
        }
    }
}

/// Stabilizes with the default FIFO order.
pub fn stabilize(eta: &ChipConfig) -> Result<(ChipConfig, Odometer, Status)> {
    stabilize_with(eta, Order::Fifo)
}

pub fn stabilize_with(eta: &ChipConfig, order: Order) -> Result<(ChipConfig, Odometer, Status)> {
    let mut e = Engine::new(eta);
    let status = e.run(order)?;
    Ok((
        ChipConfig {
            domain: eta.domain,
            lattice: eta.lattice,
            values: e.chips,
        },
        Odometer {
            domain: eta.domain,
            values: e.odo,
        },
        status,
    ))
}

/// Window radius used for a pile of n chips when none is given.
pub fn default_pile_radius(n: u64, lattice: Lattice) -> usize {
    let r = (n as f64).sqrt();
    let f = match lattice {
        Lattice::Square => 0.5,
        Lattice::Triangular => 0.6,
    };
    (f * r).ceil() as usize + 2
}

/// n chips at the origin, stabilized in a window of the given radius.
pub fn single_pile(n: u64, lattice: Lattice, radius: Option<usize>) -> Result<(ChipConfig, Odometer)> {
    let n32 = i32::try_from(n).map_err(|_| Error::Invalid(format!("{n} chips exceed the 32-bit chip range")))?;
    let radius = radius.unwrap_or_else(|| default_pile_radius(n, lattice));
    if lattice == Lattice::Square {
        return square_pile(n32, radius);
    }
    let mut eta = ChipConfig::zeros(Domain::centered(radius), lattice);
    eta.set(0, 0, n32)?;
    let (fin, odo, _) = stabilize(&eta)?;
    Ok((fin, odo))
}

/// Square-lattice pile via Gauss-Seidel sweeps over the quadrant x, y ≥ 0.
///
/// The result is unique, hence invariant under the reflections x ↦ −x and
/// y ↦ −y, so a quadrant site stands for its whole orbit and all orbit
/// members topple together. Storage is offset by one: index 0 holds the
/// mirror images of the sites at coordinate 1, so toppling a site at
/// coordinate 1 credits the axis site twice.
fn square_pile(n: i32, radius: usize) -> Result<(ChipConfig, Odometer)> {
    let w = radius + 3;
    let mut h = vec![0i32; w * w];
    let mut odo = vec![0i64; w * w];
    h[w + 1] = n;
    let mut hi = 1usize;
    loop {
        let mut any = false;
        let mut next_hi = hi;
        for y in 1..=hi {
            let row = y * w;
            for x in 1..=hi {
                let i = row + x;
                let k = h[i] >> 2;
                if k > 0 {
                    if x == radius + 1 || y == radius + 1 {
                        return Err(Error::WindowOverflow(x as i64 - 1, y as i64 - 1));
                    }
                    any = true;
                    h[i] -= 4 * k;
                    odo[i] += k as i64;
                    h[i + 1] += k;
                    h[i - 1] += k;
                    h[i + w] += k;
                    h[i - w] += k;
                    if x == 2 {
                        h[i - 1] += k;
                    }
                    if y == 2 {
                        h[i - w] += k;
                    }
                    next_hi = next_hi.max(x.max(y) + 1);
                }
            }
        }
        if !any {
            break;
        }
        hi = next_hi;
    }
    let domain = Domain::centered(radius);
    let side = 2 * radius + 1;
    let r = radius as i64;
    let mut values = vec![0i32; side * side];
    let mut odometer = vec![0i64; side * side];
    for y in -r..=r {
        for x in -r..=r {
            let q = (y.unsigned_abs() as usize + 1) * w + x.unsigned_abs() as usize + 1;
            let idx = (y + r) as usize * side + (x + r) as usize;
            values[idx] = h[q];
            odometer[idx] = odo[q];
        }
    }
    Ok((
        ChipConfig {
            domain,
            lattice: Lattice::Square,
            values,
        },
        Odometer {
            domain,
            values: odometer,
        },
    ))
}

/// Heights 0..=stable_max mapped to equally spaced gray levels 0..=255,
/// rows from the top (largest y) down.
pub fn render_heights(cfg: &ChipConfig) -> (usize, usize, Vec<u8>) {
    let (w, h) = (cfg.domain.width(), cfg.domain.height());
    let m = cfg.lattice.stable_max();
    let mut out = Vec::with_capacity(w * h);
    for row in (0..h).rev() {
        for col in 0..w {
            let v = cfg.values[row * w + col].clamp(0, m);
            out.push((v * 255 / m) as u8);
        }
    }
    (w, h, out)
}

/// Binary graymap: "P5\n<w> <h>\n255\n" then one byte per pixel.
pub fn write_pgm<W: Write>(mut w: W, width: usize, height: usize, data: &[u8]) -> io::Result<()> {
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pile(n: i32, r: usize) -> ChipConfig {
        let mut c = ChipConfig::zeros(Domain::centered(r), Lattice::Square);
        c.set(0, 0, n).unwrap();
        c
    }

    #[test]
    fn lattice_tables() {
        for l in [Lattice::Square, Lattice::Triangular] {
            let off = l.offsets();
            assert_eq!(l.stable_max(), l.degree() - 1);
            for &(x, y) in off {
                assert!(off.contains(&(-x, -y)));
            }
        }
        assert_eq!(Lattice::Triangular.stable_max(), 5);
        for &(x, y) in Lattice::Triangular.offsets() {
            assert!((Lattice::Triangular.embed(x, y).norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_examples() {
        let d = Domain::centered(3);
        let l = Lattice::Square;
        let mut u = vec![0i64; d.len()];
        u[d.index(0, 0).unwrap()] = 1;
        assert_eq!(laplacian(&u, &d, l, 0, 0).unwrap(), -4);
        assert_eq!(laplacian(&u, &d, l, 1, 0).unwrap(), 1);
        let c = vec![7i64; d.len()];
        assert_eq!(laplacian(&c, &d, l, 1, 1).unwrap(), 0);
        let sq: Vec<i64> = (0..d.len()).map(|i| d.coords(i).0.pow(2)).collect();
        for (x, y) in [(0, 0), (-2, 1), (2, -2)] {
            assert_eq!(laplacian(&sq, &d, l, x, y).unwrap(), 2);
        }
        assert!(matches!(laplacian(&sq, &d, l, 3, 0), Err(Error::OutsideDomain(4, 0))));
    }

    #[test]
    fn four_chips() {
        let (fin, odo, st) = stabilize(&pile(4, 2)).unwrap();
        assert_eq!(st, Status::Stable);
        assert_eq!(fin.get(0, 0), Some(0));
        for (x, y) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            assert_eq!(fin.get(x, y), Some(1));
        }
        assert_eq!(odo.get(0, 0), Some(1));
        assert_eq!(odo.total(), 1);
    }

    #[test]
    fn three_chips_stay() {
        let (fin, odo, _) = stabilize(&pile(3, 2)).unwrap();
        assert_eq!(fin, pile(3, 2));
        assert_eq!(odo.total(), 0);
    }

    #[test]
    fn overflow_is_an_error() {
        assert!(matches!(stabilize(&pile(100, 2)), Err(Error::WindowOverflow(..))));
    }

    #[test]
    fn quadrant_pile_matches_engine() {
        for (n, r) in [(3, 2), (4, 2), (1000, 20), (4097, 40)] {
            let (fin, odo) = single_pile(n as u64, Lattice::Square, Some(r)).unwrap();
            let (fin2, odo2, status) = stabilize(&pile(n, r)).unwrap();
            assert_eq!(status, Status::Stable);
            assert_eq!(fin, fin2, "n = {n}");
            assert_eq!(odo.values, odo2.values, "n = {n}");
        }
        assert!(matches!(
            single_pile(100, Lattice::Square, Some(2)),
            Err(Error::WindowOverflow(..))
        ));
    }

    #[test]
    fn dense_torus_aborts() {
        let d = Domain::Torus { m: 2 };
        let eta = ChipConfig::from_fn(d, Lattice::Square, |_, _| 4);
        assert_eq!(stabilize(&eta).unwrap().2, Status::AbortedAllToppled);
    }

    #[test]
    fn sparse_torus_stabilizes() {
        // 2m² edges on the m-torus; one chip fewer everywhere but one site.
        let m = 6;
        let d = Domain::Torus { m };
        let eta = ChipConfig::from_fn(d, Lattice::Square, |x, y| if (x, y) == (0, 0) { 1 } else { 2 });
        assert!(eta.sum() < 2 * (m * m) as i64);
        assert_eq!(stabilize(&eta).unwrap().2, Status::Stable);
    }

    #[test]
    fn odometer_relation() {
        let (fin, odo, _) = stabilize(&pile(300, 12)).unwrap();
        let eta = pile(300, 12);
        let d = fin.domain;
        for i in 0..d.len() {
            let (x, y) = d.coords(i);
            if let Ok(l) = laplacian(&odo.values, &d, Lattice::Square, x, y) {
                assert_eq!(fin.values[i] as i64, eta.values[i] as i64 + l);
            }
        }
        assert_eq!(fin.sum(), 300);
    }

    #[test]
    fn orders_agree_on_window() {
        let eta = pile(500, 14);
        let base = stabilize(&eta).unwrap();
        for order in [Order::FifoUnit, Order::RowMajor, Order::RandomSweep(3), Order::Priority] {
            assert_eq!(stabilize_with(&eta, order).unwrap(), base, "{order:?}");
        }
    }

    #[test]
    fn render_levels() {
        let mut c = ChipConfig::zeros(Domain::centered(1), Lattice::Square);
        c.set(-1, 1, 3).unwrap();
        c.set(0, 1, 1).unwrap();
        let (w, h, px) = render_heights(&c);
        assert_eq!((w, h), (3, 3));
        assert_eq!(&px[..3], &[255, 85, 0]);
        let mut buf = Vec::new();
        write_pgm(&mut buf, w, h, &px).unwrap();
        assert!(buf.starts_with(b"P5\n3 3\n255\n"));
        assert_eq!(buf.len(), 11 + 9);
    }

    #[test]
    fn binary_odometer_header() {
        let (_, odo, _) = stabilize(&pile(4, 1)).unwrap();
        let mut buf = Vec::new();
        odo.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"SANDODO1");
        assert_eq!(buf.len(), 8 + 32 + 8 * 9);
    }
}
