//! Discretization of the upper half-space: a uniform boundary lattice on the
//! torus [0,1)^n crossed with a geometric height ladder, sampled functions,
//! quadrature against the relevant measures, and fast region sums.
//!
//! Heights follow t_k = t_min * rho^k with rho = (t_max/t_min)^(1/(K-1)) and
//! exact endpoints; log spacing makes dt/t uniform per level so quadrature
//! error is scale-free. Cells are closed around their centers: region
//! membership is decided at the cell center (midpoint rule, no clipping),
//! and Delta t_k = t_k * ln(rho).
//!
//! Summation order is fixed everywhere (height-major, then boundary index,
//! compensated) so that repeated runs produce identical bytes. Region sums
//! are backed by per-level running sums held in double-double precision;
//! windows are differences of two entries, which keeps interval queries
//! within 1e-12 relative of brute force even against a large head.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kahan::{Accumulator, Dd};

/// Shape of the discretized upper half-space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// Boundary dimension, 1 or 2.
    pub n: usize,
    /// Boundary samples per axis.
    pub ny: usize,
    /// Height levels.
    pub t_levels: usize,
    pub t_min: f64,
    pub t_max: f64,
}

impl GridSpec {
    pub fn new(n: usize, ny: usize, t_levels: usize, t_min: f64, t_max: f64) -> Result<GridSpec> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidGridSpec(format!("n must be 1 or 2, got {n}")));
        }
        if ny < 2 {
            return Err(Error::InvalidGridSpec(format!("Ny must be >= 2, got {ny}")));
        }
        if t_levels < 2 {
            return Err(Error::InvalidGridSpec(format!(
                "t_levels must be >= 2, got {t_levels}"
            )));
        }
        if !(t_min > 0.0 && t_min < t_max) {
            return Err(Error::InvalidGridSpec(format!(
                "need 0 < t_min < t_max, got t_min={t_min}, t_max={t_max}"
            )));
        }
        if t_max >= TORUS_HEIGHT_CAP {
            return Err(Error::InvalidGridSpec(format!(
                "t_max={t_max} must stay below half the torus width"
            )));
        }
        Ok(GridSpec {
            n,
            ny,
            t_levels,
            t_min,
            t_max,
        })
    }

    /// Boundary nodes in total (ny for n=1, ny^2 for n=2).
    pub fn boundary_count(&self) -> usize {
        if self.n == 1 {
            self.ny
        } else {
            self.ny * self.ny
        }
    }

    pub fn cell_count(&self) -> usize {
        self.boundary_count() * self.t_levels
    }

    /// Boundary lattice pitch.
    pub fn dy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    /// Log-height step: ln(rho).
    pub fn log_step(&self) -> f64 {
        (self.t_max / self.t_min).ln() / (self.t_levels - 1) as f64
    }

    /// Height ladder with exact endpoints t_0 = t_min, t_{K-1} = t_max.
    pub fn heights(&self) -> Vec<f64> {
        let k = self.t_levels;
        let delta = self.log_step();
        let log_min = self.t_min.ln();
        (0..k)
            .map(|i| {
                if i == 0 {
                    self.t_min
                } else if i == k - 1 {
                    self.t_max
                } else {
                    (log_min + i as f64 * delta).exp()
                }
            })
            .collect()
    }

    /// Height of a virtual ladder index (any integer); agrees exactly with
    /// `heights()` on real indices and extends geometrically past both ends.
    pub fn virtual_height(&self, l: i64) -> f64 {
        let k = self.t_levels as i64;
        let delta = self.log_step();
        if l < 0 {
            (self.t_min.ln() + l as f64 * delta).exp()
        } else if l >= k {
            (self.t_max.ln() + (l - (k - 1)) as f64 * delta).exp()
        } else if l == 0 {
            self.t_min
        } else if l == k - 1 {
            self.t_max
        } else {
            (self.t_min.ln() + l as f64 * delta).exp()
        }
    }

    /// Boundary coordinates of node index b (row-major for n=2).
    pub fn boundary_point(&self, b: usize) -> [f64; 2] {
        let dy = self.dy();
        if self.n == 1 {
            [b as f64 * dy, 0.0]
        } else {
            [(b / self.ny) as f64 * dy, (b % self.ny) as f64 * dy]
        }
    }

    /// Flat value index of (boundary b, level k): level-major layout.
    #[inline]
    pub fn idx(&self, b: usize, k: usize) -> usize {
        k * self.boundary_count() + b
    }

    /// One refinement step: boundary pitch and log-height step both halve;
    /// every coarse node/height reappears exactly on the fine grid.
    pub fn refine(&self) -> GridSpec {
        GridSpec {
            n: self.n,
            ny: self.ny * 2,
            t_levels: 2 * self.t_levels - 1,
            t_min: self.t_min,
            t_max: self.t_max,
        }
    }

    /// Number of ladder steps strictly inside a height ratio: the largest L
    /// with L * log_step < ln(ratio). Boxes of height band (t/a2, a2*t)
    /// around level k therefore cover exactly levels [k-L, k+L].
    pub fn level_halfwidth(&self, ratio: f64) -> usize {
        let steps = ratio.ln() / self.log_step();
        let l = steps.ceil() - 1.0;
        l.max(0.0) as usize
    }

    /// Rejects grids whose configured apertures would wrap around the torus.
    pub fn check_torus_safety(&self, reach: f64) -> Result<()> {
        if self.t_max * reach >= TORUS_HEIGHT_CAP {
            return Err(Error::TorusSafety {
                t_max: self.t_max,
                factor: reach,
            });
        }
        Ok(())
    }
}

/// Heights may never reach half the torus width.
pub const TORUS_HEIGHT_CAP: f64 = 0.5;

/// Smallest wrapped index offset between boundary nodes along one axis.
#[inline]
pub fn wrapped_offset(ny: usize, a: usize, b: usize) -> usize {
    let d = if a >= b { a - b } else { b - a };
    d.min(ny - d)
}

/// Non-negative sampled function on a grid; values are stored level-major
/// (all boundary nodes of level 0, then level 1, ...). Complex inputs enter
/// as moduli: every functional in the crate reads |f| anyway.
#[derive(Clone, Debug)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(spec: GridSpec) -> GridFunction {
        GridFunction {
            values: vec![0.0; spec.cell_count()],
            spec,
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != spec.cell_count() {
            return Err(Error::InvalidGridSpec(format!(
                "value array has {} entries, spec wants {}",
                values.len(),
                spec.cell_count()
            )));
        }
        Ok(GridFunction { spec, values })
    }

    /// Samples an analytic field at the cell centers.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(&[f64; 2], f64) -> f64) -> GridFunction {
        let heights = spec.heights();
        let bc = spec.boundary_count();
        let mut values = Vec::with_capacity(spec.cell_count());
        for &t in &heights {
            for b in 0..bc {
                values.push(f(&spec.boundary_point(b), t));
            }
        }
        GridFunction { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, b: usize, k: usize) -> f64 {
        self.values[self.spec.idx(b, k)]
    }

    #[inline]
    pub fn set(&mut self, b: usize, k: usize, v: f64) {
        let i = self.spec.idx(b, k);
        self.values[i] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch);
        }
        Ok(GridFunction {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, lambda: f64) -> GridFunction {
        self.map(|v| lambda * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    /// Inclusive level range carrying nonzero values, if any.
    pub fn support_level_range(&self) -> Option<(usize, usize)> {
        let bc = self.spec.boundary_count();
        let mut lo = None;
        let mut hi = None;
        for k in 0..self.spec.t_levels {
            let row = &self.values[k * bc..(k + 1) * bc];
            if row.iter().any(|&v| v != 0.0) {
                if lo.is_none() {
                    lo = Some(k);
                }
                hi = Some(k);
            }
        }
        lo.map(|l| (l, hi.unwrap()))
    }

    /// Rotates the boundary lattice by whole cells (exact translation on the
    /// torus); `shift` is per-axis in cells, the second entry ignored for n=1.
    pub fn translate(&self, shift: [i64; 2]) -> GridFunction {
        let spec = self.spec;
        let ny = spec.ny as i64;
        let bc = spec.boundary_count();
        let mut out = vec![0.0; self.values.len()];
        let wrap = |v: i64| -> usize { v.rem_euclid(ny) as usize };
        for k in 0..spec.t_levels {
            for b in 0..bc {
                let nb = if spec.n == 1 {
                    wrap(b as i64 + shift[0])
                } else {
                    let iy = (b / spec.ny) as i64;
                    let iz = (b % spec.ny) as i64;
                    wrap(iy + shift[0]) * spec.ny + wrap(iz + shift[1])
                };
                out[spec.idx(nb, k)] = self.values[spec.idx(b, k)];
            }
        }
        GridFunction { spec, values: out }
    }
}

/// Density against which cells are weighted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeasureKind {
    /// dy dt
    Volume,
    /// dy dt / t
    Hyperbolic,
    /// dy dt / t^{n+1}
    Conical,
    /// dy dt * t^{-beta-1}
    Weighted(f64),
}

/// Per-cell quadrature weights: cell volume Delta y^n * Delta t_k times the
/// density at t_k; uniform across the boundary, so one weight per level.
#[derive(Clone, Debug)]
pub struct CellMeasure {
    spec: GridSpec,
    kind: MeasureKind,
    level_weight: Vec<f64>,
}

impl CellMeasure {
    pub fn new(spec: GridSpec, kind: MeasureKind) -> CellMeasure {
        let dyn_ = spec.dy().powi(spec.n as i32);
        let delta = spec.log_step();
        let level_weight = spec
            .heights()
            .iter()
            .map(|&t| {
                let density = match kind {
                    MeasureKind::Volume => 1.0,
                    MeasureKind::Hyperbolic => 1.0 / t,
                    MeasureKind::Conical => t.powi(-(spec.n as i32) - 1),
                    MeasureKind::Weighted(beta) => t.powf(-beta - 1.0),
                };
                dyn_ * (t * delta) * density
            })
            .collect();
        CellMeasure {
            spec,
            kind,
            level_weight,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn kind(&self) -> MeasureKind {
        self.kind
    }

    #[inline]
    pub fn level_weight(&self, k: usize) -> f64 {
        self.level_weight[k]
    }
}

/// Midpoint-rule quadrature of f over the cells whose center satisfies the
/// region predicate. Deterministic order: height-major, then boundary index.
pub fn integrate_region(
    f: &GridFunction,
    region: impl Fn(&Point) -> bool,
    m: &CellMeasure,
) -> Result<f64> {
    if f.spec != m.spec {
        return Err(Error::GridMismatch);
    }
    let spec = f.spec;
    let heights = spec.heights();
    let bc = spec.boundary_count();
    let mut total = Accumulator::new();
    for k in 0..spec.t_levels {
        let w = m.level_weight(k);
        let mut level = Accumulator::new();
        for b in 0..bc {
            let p = Point {
                y: spec.boundary_point(b),
                t: heights[k],
            };
            if region(&p) {
                level.add(f.at(b, k));
            }
        }
        total.add(w * level.value());
    }
    Ok(total.value())
}

/// Outcome of locating the lattice nodes that satisfy a contiguous wrapped
/// predicate along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelArc {
    Empty,
    Full,
    /// Inclusive unwrapped integer endpoints, hi - lo + 1 < ny.
    Arc(i64, i64),
}

/// Locates { i : pred(i) } for a predicate true exactly on a wrapped arc
/// around coordinate `x` of half-width about `r`. The seed interval comes
/// from the radius; the exact predicate then fixes the endpoints, so the
/// result agrees with brute force evaluating pred at every node.
pub fn scan_arc(ny: usize, dy: f64, x: f64, r: f64, pred: impl Fn(i64) -> bool) -> LevelArc {
    if !(r > 0.0) {
        return LevelArc::Empty;
    }
    if r > 0.5 {
        // every node is within torus distance 1/2 <= r
        return LevelArc::Full;
    }
    let mut lo = ((x - r) / dy).ceil() as i64;
    let mut hi = ((x + r) / dy).floor() as i64;
    let nyi = ny as i64;
    if hi - lo + 1 >= nyi - 4 {
        // near-full level: walk one whole period instead of trusting the seed
        let c = (x / dy).round() as i64;
        let start = c - nyi / 2;
        let flags: Vec<bool> = (0..nyi).map(|j| pred(start + j)).collect();
        let false_at = flags.iter().position(|&f| !f);
        let Some(f0) = false_at else {
            return LevelArc::Full;
        };
        // the true set is one arc; find its run starting after a false node
        let mut begin = None;
        let mut len = 0i64;
        for step in 1..=nyi {
            let j = ((f0 as i64 + step) % nyi) as usize;
            if flags[j] {
                if begin.is_none() {
                    begin = Some(f0 as i64 + step);
                }
                if begin.is_some() && len == (f0 as i64 + step) - begin.unwrap() {
                    len += 1;
                }
            } else if begin.is_some() {
                break;
            }
        }
        return match begin {
            None => LevelArc::Empty,
            Some(b0) => LevelArc::Arc(start + b0.rem_euclid(nyi), start + b0.rem_euclid(nyi) + len - 1),
        };
    }
    // endpoint fixups: the seed is correct within one node; loop bounds are
    // generous to absorb rounding in x +- r
    for _ in 0..6 {
        if pred(lo - 1) {
            lo -= 1;
        } else {
            break;
        }
    }
    while lo <= hi && !pred(lo) {
        lo += 1;
    }
    for _ in 0..6 {
        if pred(hi + 1) {
            hi += 1;
        } else {
            break;
        }
    }
    while hi >= lo && !pred(hi) {
        hi -= 1;
    }
    if lo > hi {
        return LevelArc::Empty;
    }
    if hi - lo + 1 >= nyi {
        return LevelArc::Full;
    }
    LevelArc::Arc(lo, hi)
}

/// Per-level running sums of a sampled function against a cell measure; any
/// boundary-interval x single-level sum is two table lookups. Prefixes are
/// kept in double-double so that small windows of large-level data still
/// come out to 1e-12 relative of brute force.
#[derive(Clone, Debug)]
pub struct PrefixTable {
    spec: GridSpec,
    level_weight: Vec<f64>,
    /// n=1: per level, ny+1 entries. n=2: per level, ny rows of ny+1 entries.
    prefix: Vec<Vec<Dd>>,
}

impl PrefixTable {
    pub fn build(f: &GridFunction, m: &CellMeasure) -> Result<PrefixTable> {
        if f.spec != m.spec {
            return Err(Error::GridMismatch);
        }
        let spec = f.spec;
        let ny = spec.ny;
        let mut prefix = Vec::with_capacity(spec.t_levels);
        for k in 0..spec.t_levels {
            if spec.n == 1 {
                let mut row = Vec::with_capacity(ny + 1);
                let mut cur = Dd::ZERO;
                row.push(cur);
                for b in 0..ny {
                    cur = cur.add_f64(f.at(b, k));
                    row.push(cur);
                }
                prefix.push(row);
            } else {
                let mut rows = Vec::with_capacity(ny * (ny + 1));
                for iy in 0..ny {
                    let mut cur = Dd::ZERO;
                    rows.push(cur);
                    for iz in 0..ny {
                        cur = cur.add_f64(f.at(iy * ny + iz, k));
                        rows.push(cur);
                    }
                }
                prefix.push(rows);
            }
        }
        Ok(PrefixTable {
            spec,
            level_weight: (0..spec.t_levels).map(|k| m.level_weight(k)).collect(),
            prefix,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    #[inline]
    pub fn level_weight(&self, k: usize) -> f64 {
        self.level_weight[k]
    }

    /// Raw (unweighted) sum over one axis-run b in [lo, hi] of wrapped
    /// indices, hi - lo + 1 <= ny; n=1 only.
    fn run_sum_1d(&self, k: usize, lo: i64, hi: i64) -> f64 {
        let ny = self.spec.ny as i64;
        let row = &self.prefix[k];
        let count = hi - lo + 1;
        debug_assert!(count >= 1 && count <= ny);
        let b0 = lo.rem_euclid(ny);
        let end = b0 + count;
        if end <= ny {
            row[end as usize].diff(row[b0 as usize])
        } else {
            let first = row[ny as usize].diff(row[b0 as usize]);
            let second = row[(end - ny) as usize].diff(row[0]);
            first + second
        }
    }

    /// Raw sum over an arc of one row (row index wrapped); works for both
    /// n=1 (row must be 0) and n=2.
    pub fn raw_row_arc_sum(&self, k: usize, row: i64, arc: LevelArc) -> f64 {
        match arc {
            LevelArc::Empty => 0.0,
            LevelArc::Full => {
                if self.spec.n == 1 {
                    debug_assert_eq!(row, 0);
                    let r = &self.prefix[k];
                    r[self.spec.ny].diff(r[0])
                } else {
                    let ny = self.spec.ny;
                    let iy = row.rem_euclid(ny as i64) as usize;
                    let r = &self.prefix[k];
                    r[iy * (ny + 1) + ny].diff(r[iy * (ny + 1)])
                }
            }
            LevelArc::Arc(lo, hi) => {
                if self.spec.n == 1 {
                    debug_assert_eq!(row, 0);
                    self.run_sum_1d(k, lo, hi)
                } else {
                    let ny = self.spec.ny as i64;
                    let iy = row.rem_euclid(ny) as usize;
                    let base = iy * (self.spec.ny + 1);
                    let r = &self.prefix[k];
                    let count = hi - lo + 1;
                    debug_assert!(count >= 1 && count <= ny);
                    let b0 = lo.rem_euclid(ny);
                    let end = b0 + count;
                    if end <= ny {
                        r[base + end as usize].diff(r[base + b0 as usize])
                    } else {
                        let first = r[base + self.spec.ny].diff(r[base + b0 as usize]);
                        let second = r[base + (end - ny) as usize].diff(r[base]);
                        first + second
                    }
                }
            }
        }
    }

    /// Raw full-level sum (n=1: the level; n=2: all rows, row-major order).
    pub fn raw_level_total(&self, k: usize) -> f64 {
        if self.spec.n == 1 {
            let r = &self.prefix[k];
            r[self.spec.ny].diff(r[0])
        } else {
            let ny = self.spec.ny;
            let r = &self.prefix[k];
            let mut acc = Accumulator::new();
            for iy in 0..ny {
                acc.add(r[iy * (ny + 1) + ny].diff(r[iy * (ny + 1)]));
            }
            acc.value()
        }
    }

    /// Raw sum of f over the boundary ball { z : pred-dist(z) holds } at one
    /// level, where the membership predicate is supplied by the caller and
    /// `radius` seeds the search around `center`. For n=2 the predicate
    /// receives the node index pair; rows outside reach are skipped via the
    /// row geometry of a Euclidean disc.
    pub fn raw_disc_sum(
        &self,
        k: usize,
        center: &[f64; 2],
        radius: f64,
        pred: &dyn Fn(&[f64; 2]) -> bool,
    ) -> f64 {
        let spec = self.spec;
        let dy = spec.dy();
        // seed slightly wide; membership stays predicate-exact via scan_arc
        let seed = radius * (1.0 + 1e-12);
        if spec.n == 1 {
            let arc = scan_arc(spec.ny, dy, center[0], seed, |i| {
                pred(&[i as f64 * dy, 0.0])
            });
            self.raw_row_arc_sum(k, 0, arc)
        } else {
            // rows whose axis-0 distance alone stays below the radius
            let rows = scan_arc(spec.ny, dy, center[0], seed, |i| {
                crate::geometry::torus_distance(1, &[i as f64 * dy, 0.0], &[center[0], 0.0])
                    < seed
            });
            let (rlo, rhi) = match rows {
                LevelArc::Empty => return 0.0,
                LevelArc::Full => (0, spec.ny as i64 - 1),
                LevelArc::Arc(lo, hi) => (lo, hi),
            };
            let mut acc = Accumulator::new();
            for iy in rlo..=rhi {
                let y0 = iy as f64 * dy;
                let d0 =
                    crate::geometry::torus_distance(1, &[y0, 0.0], &[center[0], 0.0]);
                if d0 >= seed {
                    continue;
                }
                let half = (seed * seed - d0 * d0).sqrt();
                let arc = scan_arc(spec.ny, dy, center[1], half, |iz| {
                    pred(&[y0, iz as f64 * dy])
                });
                acc.add(self.raw_row_arc_sum(k, iy, arc));
            }
            acc.value()
        }
    }
}

/// Per-level sparse tables answering boundary-interval maxima in O(1); used
/// for the essential-supremum Whitney average and the non-tangential
/// functional. Values are stored doubled so wrapped windows need one probe.
#[derive(Clone, Debug)]
pub struct RangeMaxTable {
    spec: GridSpec,
    /// n=1: per level, levels of a sparse table over the doubled axis.
    /// n=2: per (level, row), same structure, row-major.
    tables: Vec<Vec<Vec<f64>>>,
}

fn build_sparse(doubled: Vec<f64>) -> Vec<Vec<f64>> {
    let len = doubled.len();
    let mut levels = vec![doubled];
    let mut width = 1usize;
    while 2 * width <= len {
        let prev = levels.last().unwrap();
        let next: Vec<f64> = (0..=(len - 2 * width))
            .map(|i| prev[i].max(prev[i + width]))
            .collect();
        levels.push(next);
        width *= 2;
    }
    levels
}

fn sparse_query(levels: &[Vec<f64>], lo: usize, len: usize) -> f64 {
    debug_assert!(len >= 1);
    let j = (usize::BITS - 1 - len.leading_zeros()) as usize; // floor(log2 len)
    let w = 1usize << j;
    levels[j][lo].max(levels[j][lo + len - w])
}

impl RangeMaxTable {
    pub fn build(f: &GridFunction) -> RangeMaxTable {
        let spec = *f.spec();
        let ny = spec.ny;
        let mut tables = Vec::new();
        for k in 0..spec.t_levels {
            if spec.n == 1 {
                let mut doubled = Vec::with_capacity(2 * ny);
                for rep in 0..2 {
                    let _ = rep;
                    for b in 0..ny {
                        doubled.push(f.at(b, k));
                    }
                }
                tables.push(build_sparse(doubled));
            } else {
                for iy in 0..ny {
                    let mut doubled = Vec::with_capacity(2 * ny);
                    for rep in 0..2 {
                        let _ = rep;
                        for iz in 0..ny {
                            doubled.push(f.at(iy * ny + iz, k));
                        }
                    }
                    tables.push(build_sparse(doubled));
                }
            }
        }
        RangeMaxTable { spec, tables }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    fn table(&self, k: usize, row: i64) -> &Vec<Vec<f64>> {
        if self.spec.n == 1 {
            &self.tables[k]
        } else {
            let iy = row.rem_euclid(self.spec.ny as i64) as usize;
            &self.tables[k * self.spec.ny + iy]
        }
    }

    /// Max over an arc of one row; -inf on Empty so callers can fold.
    pub fn row_arc_max(&self, k: usize, row: i64, arc: LevelArc) -> f64 {
        let ny = self.spec.ny as i64;
        match arc {
            LevelArc::Empty => f64::NEG_INFINITY,
            LevelArc::Full => sparse_query(self.table(k, row), 0, self.spec.ny),
            LevelArc::Arc(lo, hi) => {
                let count = (hi - lo + 1).min(ny) as usize;
                let b0 = lo.rem_euclid(ny) as usize;
                sparse_query(self.table(k, row), b0, count)
            }
        }
    }

    /// Max over the boundary ball at one level, mirroring `raw_disc_sum`.
    pub fn disc_max(
        &self,
        k: usize,
        center: &[f64; 2],
        radius: f64,
        pred: &dyn Fn(&[f64; 2]) -> bool,
    ) -> f64 {
        let spec = self.spec;
        let dy = spec.dy();
        let seed = radius * (1.0 + 1e-12);
        if spec.n == 1 {
            let arc = scan_arc(spec.ny, dy, center[0], seed, |i| {
                pred(&[i as f64 * dy, 0.0])
            });
            self.row_arc_max(k, 0, arc)
        } else {
            let rows = scan_arc(spec.ny, dy, center[0], seed, |i| {
                crate::geometry::torus_distance(1, &[i as f64 * dy, 0.0], &[center[0], 0.0])
                    < seed
            });
            let (rlo, rhi) = match rows {
                LevelArc::Empty => return f64::NEG_INFINITY,
                LevelArc::Full => (0, spec.ny as i64 - 1),
                LevelArc::Arc(lo, hi) => (lo, hi),
            };
            let mut best = f64::NEG_INFINITY;
            for iy in rlo..=rhi {
                let y0 = iy as f64 * dy;
                let d0 =
                    crate::geometry::torus_distance(1, &[y0, 0.0], &[center[0], 0.0]);
                if d0 >= seed {
                    continue;
                }
                let half = (seed * seed - d0 * d0).sqrt();
                let arc = scan_arc(spec.ny, dy, center[1], half, |iz| {
                    pred(&[y0, iz as f64 * dy])
                });
                best = best.max(self.row_arc_max(k, iy, arc));
            }
            best
        }
    }
}

/// out[b] = max of vals over the circular window |i - b| <= half; half may
/// exceed the array (clamped to the full circle). Monotone-deque sweep, O(n).
pub fn circular_window_max(vals: &[f64], half: usize) -> Vec<f64> {
    let n = vals.len();
    if n == 0 {
        return Vec::new();
    }
    if 2 * half + 1 >= n {
        let m = vals.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v));
        return vec![m; n];
    }
    let mut out = vec![f64::NEG_INFINITY; n];
    // deque of indices into the virtually tripled array, values decreasing
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let at = |i: usize| vals[i % n];
    // window for b is [b - half + n, b + half + n] in tripled coordinates
    let mut next = n - half; // first index not yet pushed
    for b in 0..n {
        let hi = b + half + n;
        while next <= hi {
            while let Some(&back) = deque.back() {
                if at(back) <= at(next) {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(next);
            next += 1;
        }
        let lo = b + n - half;
        while let Some(&front) = deque.front() {
            if front < lo {
                deque.pop_front();
            } else {
                break;
            }
        }
        out[b] = at(*deque.front().expect("window nonempty"));
    }
    out
}

// ---------------------------------------------------------------------------
// Text import/export
// ---------------------------------------------------------------------------

/// Serializes a grid function: header `n,Ny,t_levels,t_min,t_max`, then one
/// line per cell `iy[,iz],k,value`, boundary-major. 17 significant digits
/// guarantee exact decimal round-trips. Lines starting with '#' are comments.
pub fn write_grid(f: &GridFunction, w: &mut dyn Write) -> Result<()> {
    let spec = f.spec();
    let mut buf = String::new();
    writeln!(
        buf,
        "{},{},{},{:.16e},{:.16e}",
        spec.n, spec.ny, spec.t_levels, spec.t_min, spec.t_max
    )
    .expect("string write");
    for b in 0..spec.boundary_count() {
        for k in 0..spec.t_levels {
            if spec.n == 1 {
                writeln!(buf, "{},{},{:.16e}", b, k, f.at(b, k)).expect("string write");
            } else {
                writeln!(
                    buf,
                    "{},{},{},{:.16e}",
                    b / spec.ny,
                    b % spec.ny,
                    k,
                    f.at(b, k)
                )
                .expect("string write");
            }
        }
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn write_grid_file(f: &GridFunction, path: &Path) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_grid(f, &mut file)?;
    file.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {what} from {s:?}"),
    })
}

/// Reads the text format produced by `write_grid`; cell lines may appear in
/// any order but each cell must appear exactly once.
pub fn read_grid(r: &mut dyn BufRead) -> Result<GridFunction> {
    let mut lines = r.lines().enumerate();
    let (header_no, header) = loop {
        match lines.next() {
            Some((i, line)) => {
                let line = line?;
                let t = line.trim();
                if t.is_empty() || t.starts_with('#') {
                    continue;
                }
                break (i + 1, line);
            }
            None => {
                return Err(Error::Parse {
                    line: 0,
                    msg: "empty input, expected a grid header".into(),
                })
            }
        }
    };
    let parts: Vec<&str> = header.trim().split(',').collect();
    if parts.len() != 5 {
        return Err(Error::Parse {
            line: header_no,
            msg: format!("header wants 5 fields, got {}", parts.len()),
        });
    }
    let n: usize = parse_field(parts[0], header_no, "n")?;
    let ny: usize = parse_field(parts[1], header_no, "Ny")?;
    let t_levels: usize = parse_field(parts[2], header_no, "t_levels")?;
    let t_min: f64 = parse_field(parts[3], header_no, "t_min")?;
    let t_max: f64 = parse_field(parts[4], header_no, "t_max")?;
    let spec = GridSpec::new(n, ny, t_levels, t_min, t_max)
        .map_err(|e| Error::Parse {
            line: header_no,
            msg: e.to_string(),
        })?;
    let mut values = vec![0.0f64; spec.cell_count()];
    let mut seen = vec![false; spec.cell_count()];
    let mut filled = 0usize;
    let want = if n == 1 { 3 } else { 4 };
    for (i, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let parts: Vec<&str> = t.split(',').collect();
        if parts.len() != want {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("cell line wants {want} fields, got {}", parts.len()),
            });
        }
        let iy: usize = parse_field(parts[0], lineno, "iy")?;
        let (b, koff) = if n == 1 {
            (iy, 1)
        } else {
            let iz: usize = parse_field(parts[1], lineno, "iz")?;
            if iz >= ny {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("iz={iz} out of range (Ny={ny})"),
                });
            }
            (iy * ny + iz, 2)
        };
        if iy >= ny {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("iy={iy} out of range (Ny={ny})"),
            });
        }
        let k: usize = parse_field(parts[koff], lineno, "k")?;
        if k >= t_levels {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("k={k} out of range (t_levels={t_levels})"),
            });
        }
        let v: f64 = parse_field(parts[koff + 1], lineno, "value")?;
        let idx = spec.idx(b, k);
        if seen[idx] {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("duplicate cell (b={b}, k={k})"),
            });
        }
        seen[idx] = true;
        filled += 1;
        values[idx] = v;
    }
    if filled != spec.cell_count() {
        return Err(Error::Parse {
            line: 0,
            msg: format!(
                "grid incomplete: {} of {} cells present",
                filled,
                spec.cell_count()
            ),
        });
    }
    GridFunction::from_values(spec, values)
}

pub fn read_grid_file(path: &Path) -> Result<GridFunction> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read_grid(&mut r)
}
