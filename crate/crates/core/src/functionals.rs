//! The tent quasi-norm pipeline: height weighting, Whitney box averages,
//! conical square functions, Carleson box functionals, non-tangential
//! maximal functions, boundary `L^p` collapse, and the pairing.
//!
//! Discrete membership is index arithmetic throughout: a node belongs to a
//! window when its wrapped integer offset `m` satisfies `m * dy < radius`
//! (and the analogous integer disc test for n = 2). Every window therefore
//! depends only on offsets, never on absolute coordinates, which makes all
//! functionals exactly translation invariant on the node lattice. The
//! predicate-driven single-point forms ([`conical_a`], [`carleson_c`],
//! [`nontangential_n`]) are reference implementations used in cross-checks.

use std::fmt;
use std::str::FromStr;

use num::rational::Ratio;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::exponent::{Avg, Exp};
use crate::geometry::{
    cone_contains, tent_contains, Ball, BoxParams, DerivedParams, Point, WhitneyParams,
};
use crate::grid::{
    circular_window_max, CellMeasure, GridFunction, GridSpec, LevelArc, MeasureKind, PrefixTable,
    RangeMaxTable,
};
use crate::kahan::{Accumulator, Dd};

// ---------------------------------------------------------------------------
// Norm specification
// ---------------------------------------------------------------------------

/// How a function whose support gets too close to the top or bottom height
/// levels is treated when a Whitney box would stick out of the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportPolicy {
    /// Reject with [`Error::SupportMargin`]; the default. Averages are then
    /// free of truncation bias.
    Strict,
    /// Silently restrict box numerators to the real levels. Only used for
    /// full-support auxiliary factors whose construction guarantees the
    /// truncation is harmless.
    Truncate,
}

/// The four shapes the outer functional can take, keyed by which of p, q are
/// finite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    /// p, q finite: boundary `L^p` of the conical `q`-functional.
    Conical,
    /// p = inf, q finite: supremum of the Carleson box functional.
    Carleson,
    /// p finite, q = inf: boundary `L^p` of the non-tangential maximum.
    NonTangential,
    /// p = q = inf: global supremum.
    Uniform,
}

/// Full description of one tent quasi-norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSpec {
    pub p: Exp,
    pub q: Exp,
    pub r: Avg,
    pub beta: f64,
    pub aperture: f64,
    pub whitney: WhitneyParams,
}

/// Whitney parameters used when a spec does not name its own.
pub fn default_whitney() -> WhitneyParams {
    WhitneyParams::new(0.25, 2.0).expect("default parameters are consistent")
}

impl NormSpec {
    /// Spec with aperture 1 and the default Whitney parameters.
    pub fn new(p: Exp, q: Exp, r: Avg, beta: f64) -> Result<NormSpec> {
        NormSpec::with_geometry(p, q, r, beta, 1.0, default_whitney())
    }

    pub fn with_geometry(
        p: Exp,
        q: Exp,
        r: Avg,
        beta: f64,
        aperture: f64,
        whitney: WhitneyParams,
    ) -> Result<NormSpec> {
        if !aperture.is_finite() || aperture <= 0.0 {
            return Err(Error::InvalidNormSpec(format!(
                "aperture {aperture} must be positive and finite"
            )));
        }
        if !beta.is_finite() {
            return Err(Error::InvalidNormSpec(format!("weight exponent {beta} must be finite")));
        }
        Ok(NormSpec {
            p,
            q,
            r,
            beta,
            aperture,
            whitney,
        })
    }

    pub fn category(&self) -> Category {
        match (self.p.is_inf(), self.q.is_inf()) {
            (false, false) => Category::Conical,
            (true, false) => Category::Carleson,
            (false, true) => Category::NonTangential,
            (true, true) => Category::Uniform,
        }
    }

    /// min(p, q, r); the space is normable exactly when this is >= 1.
    pub fn tau(&self) -> Exp {
        let pq = self.p.min(self.q);
        match self.r {
            Avg::Classical => pq,
            Avg::Exp(e) => pq.min(e),
        }
    }

    pub fn is_banach(&self) -> bool {
        self.tau().ge_one()
    }

    /// The spec of `|f|^{1/theta}`-type rescaling: exponents divide by theta,
    /// the weight multiplies. Exact in the rationals.
    pub fn rescale(&self, theta: Ratio<i64>) -> Result<NormSpec> {
        if theta <= Ratio::zero() || theta > Ratio::one() {
            return Err(Error::Precondition(format!("rescale power {theta} not in (0,1]")));
        }
        Ok(NormSpec {
            p: self.p.div_by(theta)?,
            q: self.q.div_by(theta)?,
            r: self.r.div_by(theta)?,
            beta: self.beta * ratio_f64(theta),
            aperture: self.aperture,
            whitney: self.whitney,
        })
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.p, self.q, self.r, self.beta)?;
        if self.aperture != 1.0 {
            write!(f, ":{}", self.aperture)?;
        }
        Ok(())
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    /// `p:q:r:beta` or `p:q:r:beta:aperture`; `r` may be `none`.
    fn from_str(s: &str) -> Result<NormSpec> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 4 && parts.len() != 5 {
            return Err(Error::InvalidNormSpec(format!(
                "`{s}`: expected p:q:r:beta or p:q:r:beta:aperture"
            )));
        }
        let p: Exp = parts[0].parse()?;
        let q: Exp = parts[1].parse()?;
        let r: Avg = parts[2].parse()?;
        let beta: f64 = parts[3]
            .trim()
            .parse()
            .map_err(|_| Error::InvalidNormSpec(format!("`{s}`: bad weight exponent `{}`", parts[3])))?;
        let aperture: f64 = if parts.len() == 5 {
            parts[4]
                .trim()
                .parse()
                .map_err(|_| Error::InvalidNormSpec(format!("`{s}`: bad aperture `{}`", parts[4])))?
        } else {
            1.0
        };
        NormSpec::with_geometry(p, q, r, beta, aperture, default_whitney())
    }
}

pub(crate) fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

// ---------------------------------------------------------------------------
// Index windows
// ---------------------------------------------------------------------------

/// Largest m >= 0 with m * dy < r, or -1 when even m = 0 fails (r <= 0).
/// Seeded by division, then fixed against the exact predicate.
pub(crate) fn index_halfwidth(dy: f64, r: f64) -> i64 {
    if !(r > 0.0) {
        return -1;
    }
    let mut m = (r / dy).floor() as i64;
    while m > 0 && (m as f64) * dy >= r {
        m -= 1;
    }
    while ((m + 1) as f64) * dy < r {
        m += 1;
    }
    m
}

/// Row decomposition of the index window of the given radius: a list of
/// (row offset, halfwidth) pairs. n = 1 yields the single row 0; n = 2 the
/// rows of the integer disc (mi*dy)^2 + (mz*dy)^2 < r^2. Empty when r <= 0.
pub(crate) fn window_rows(spec: &GridSpec, radius: f64) -> Vec<(i64, i64)> {
    let dy = spec.dy();
    if spec.n == 1 {
        let h = index_halfwidth(dy, radius);
        if h < 0 {
            return Vec::new();
        }
        return vec![(0, h)];
    }
    let h0 = index_halfwidth(dy, radius);
    if h0 < 0 {
        return Vec::new();
    }
    let r2 = radius * radius;
    let mut rows = Vec::with_capacity((2 * h0 + 1) as usize);
    for mi in -h0..=h0 {
        let d0 = (mi as f64) * dy;
        let pred = |m: i64| {
            let d1 = (m as f64) * dy;
            d0 * d0 + d1 * d1 < r2
        };
        // sqrt seed, then exact-predicate fixups; pred(0) holds because
        // |mi| <= h0 means d0 < radius
        let mut m = ((r2 - d0 * d0).max(0.0).sqrt() / dy).floor() as i64;
        while m > 0 && !pred(m) {
            m -= 1;
        }
        while pred(m + 1) {
            m += 1;
        }
        rows.push((mi, m));
    }
    rows
}

/// Number of lattice nodes in a row-decomposed window (exact integer in f64).
pub(crate) fn window_count(spec: &GridSpec, rows: &[(i64, i64)]) -> f64 {
    let nyi = spec.ny as i64;
    let mut c = 0i64;
    for &(_, h) in rows {
        c += (2 * h + 1).min(nyi);
    }
    c as f64
}

fn arc_for(ny: usize, center: i64, half: i64) -> LevelArc {
    if half < 0 {
        return LevelArc::Empty;
    }
    if 2 * half + 1 >= ny as i64 {
        return LevelArc::Full;
    }
    LevelArc::Arc(center - half, center + half)
}

/// Raw window sum of the tabulated function around boundary node b at level k.
fn window_sum(table: &PrefixTable, k: usize, b: usize, rows: &[(i64, i64)]) -> f64 {
    let spec = table.spec();
    if spec.n == 1 {
        let (_, h) = rows[0];
        table.raw_row_arc_sum(k, 0, arc_for(spec.ny, b as i64, h))
    } else {
        let ny = spec.ny;
        let by = (b / ny) as i64;
        let bz = (b % ny) as i64;
        let mut acc = Accumulator::new();
        for &(off, h) in rows {
            acc.add(table.raw_row_arc_sum(k, by + off, arc_for(ny, bz, h)));
        }
        acc.value()
    }
}

/// Window max analogue of [`window_sum`]; -inf over an empty window.
fn window_max(rmt: &RangeMaxTable, k: usize, b: usize, rows: &[(i64, i64)]) -> f64 {
    let spec = rmt.spec();
    if spec.n == 1 {
        let (_, h) = rows[0];
        rmt.row_arc_max(k, 0, arc_for(spec.ny, b as i64, h))
    } else {
        let ny = spec.ny;
        let by = (b / ny) as i64;
        let bz = (b % ny) as i64;
        let mut best = f64::NEG_INFINITY;
        for &(off, h) in rows {
            best = best.max(rmt.row_arc_max(k, by + off, arc_for(ny, bz, h)));
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Height weighting
// ---------------------------------------------------------------------------

/// Multiplies level k by t_k^{-beta}; the first stage of every norm.
pub fn weight_by_height(f: &GridFunction, beta: f64) -> GridFunction {
    if beta == 0.0 {
        return f.clone();
    }
    let spec = *f.spec();
    let heights = spec.heights();
    let bc = spec.boundary_count();
    let mut out = f.clone();
    for (k, &t) in heights.iter().enumerate() {
        let w = t.powf(-beta);
        for b in 0..bc {
            out.set(b, k, out.at(b, k) * w);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Whitney box averages
// ---------------------------------------------------------------------------

/// Precomputed per-level window geometry of the Whitney boxes of one
/// parameter pair, including the virtual-ladder denominators.
struct BoxGeometry {
    level_half: usize,
    rows: Vec<Vec<(i64, i64)>>,
    denominator: Vec<f64>,
}

impl BoxGeometry {
    fn new(spec: &GridSpec, params: &BoxParams) -> BoxGeometry {
        let l = spec.level_halfwidth(params.alpha2);
        let heights = spec.heights();
        let dyn_ = spec.dy().powi(spec.n as i32);
        let delta = spec.log_step();
        let mut rows = Vec::with_capacity(spec.t_levels);
        let mut denominator = Vec::with_capacity(spec.t_levels);
        for k in 0..spec.t_levels {
            let r = window_rows(spec, params.alpha1 * heights[k]);
            let count = window_count(spec, &r);
            // The denominator ranges over the virtual height ladder so that a
            // box hanging off the top or bottom still divides by its full
            // volume. Terms are shaped exactly like the numerator terms
            // (volume level weight times node count, same accumulation
            // order), so a constant function averages to itself with zero
            // rounding on interior boxes.
            let mut acc = Accumulator::new();
            for off in -(l as i64)..=(l as i64) {
                let t = spec.virtual_height(k as i64 + off);
                acc.add(dyn_ * (t * delta) * count);
            }
            denominator.push(acc.value());
            rows.push(r);
        }
        BoxGeometry {
            level_half: l,
            rows,
            denominator,
        }
    }
}

/// Finds a support cell violating the level margin, if any.
fn margin_violation(f: &GridFunction, level_half: usize) -> Option<(usize, usize)> {
    let (lo, hi) = f.support_level_range()?;
    let spec = f.spec();
    let bad_k = if lo < level_half {
        lo
    } else if hi + level_half > spec.t_levels - 1 {
        hi
    } else {
        return None;
    };
    let b = (0..spec.boundary_count()).find(|&b| f.at(b, bad_k) != 0.0)?;
    Some((b, bad_k))
}

/// The Whitney average W_r f: at each cell, the r-mean of |f| over the box
/// centered there (essential supremum when r = inf). Numerators range over
/// real cells; denominators over the virtual box volume, so averages carry no
/// truncation bias. Under [`SupportPolicy::Strict`] the support must keep a
/// `level_half` margin from both height ends.
pub fn whitney_average(
    f: &GridFunction,
    r: Exp,
    params: &BoxParams,
    policy: SupportPolicy,
) -> Result<GridFunction> {
    let spec = *f.spec();
    let geo = BoxGeometry::new(&spec, params);
    if policy == SupportPolicy::Strict {
        if let Some((b, k)) = margin_violation(f, geo.level_half) {
            return Err(Error::SupportMargin {
                b,
                k,
                t: spec.heights()[k],
            });
        }
    }
    let kc = spec.t_levels as i64;
    let l = geo.level_half as i64;
    let bc = spec.boundary_count();
    let mut out = GridFunction::zeros(spec);
    match r {
        Exp::Finite(_) => {
            let rv = r.value();
            let fr = f.map(|v| v.abs().powf(rv));
            let table = PrefixTable::build(&fr, &CellMeasure::new(spec, MeasureKind::Volume))?;
            for k in 0..spec.t_levels {
                let rows = &geo.rows[k];
                let den = geo.denominator[k];
                let klo = (k as i64 - l).max(0);
                let khi = (k as i64 + l).min(kc - 1);
                for b in 0..bc {
                    let mut acc = Accumulator::new();
                    for kk in klo..=khi {
                        acc.add(table.level_weight(kk as usize)
                            * window_sum(&table, kk as usize, b, rows));
                    }
                    let num = acc.value().max(0.0);
                    out.set(b, k, (num / den).powf(1.0 / rv));
                }
            }
        }
        Exp::Inf => {
            let fa = f.map(f64::abs);
            let rmt = RangeMaxTable::build(&fa);
            for k in 0..spec.t_levels {
                let rows = &geo.rows[k];
                let klo = (k as i64 - l).max(0);
                let khi = (k as i64 + l).min(kc - 1);
                for b in 0..bc {
                    let mut best = f64::NEG_INFINITY;
                    for kk in klo..=khi {
                        best = best.max(window_max(&rmt, kk as usize, b, rows));
                    }
                    out.set(b, k, best.max(0.0));
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Conical functional
// ---------------------------------------------------------------------------

/// Tabulated |g|^q against the conical measure; each aperture evaluation is
/// then one sweep of window sums.
pub struct ConicalEvaluator {
    q: f64,
    table: PrefixTable,
}

impl ConicalEvaluator {
    pub fn new(g: &GridFunction, q: Exp) -> Result<ConicalEvaluator> {
        if q.is_inf() {
            return Err(Error::InvalidNormSpec(
                "conical functional needs a finite exponent".into(),
            ));
        }
        let qv = q.value();
        let gq = g.map(|v| v.abs().powf(qv));
        let table = PrefixTable::build(&gq, &CellMeasure::new(*g.spec(), MeasureKind::Conical))?;
        Ok(ConicalEvaluator { q: qv, table })
    }

    /// The conical functional of the given aperture at every boundary node.
    pub fn eval_all(&self, aperture: f64) -> Vec<f64> {
        let spec = *self.table.spec();
        let heights = spec.heights();
        let bc = spec.boundary_count();
        let mut acc: Vec<Accumulator> = (0..bc).map(|_| Accumulator::new()).collect();
        for k in 0..spec.t_levels {
            let rows = window_rows(&spec, aperture * heights[k]);
            if rows.is_empty() {
                continue;
            }
            let w = self.table.level_weight(k);
            for (b, a) in acc.iter_mut().enumerate() {
                a.add(w * window_sum(&self.table, k, b, &rows));
            }
        }
        acc.into_iter()
            .map(|a| a.value().max(0.0).powf(1.0 / self.q))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Carleson functional
// ---------------------------------------------------------------------------

/// Index radii (as powers of two in units of dy) of the dyadic ball family.
fn ball_family(spec: &GridSpec) -> Vec<u32> {
    let dy = spec.dy();
    let mut js = Vec::new();
    let mut j = 0u32;
    loop {
        let radius = (1u64 << j) as f64 * dy;
        if radius > crate::geometry::TORUS_HALF_WIDTH {
            break;
        }
        js.push(j);
        j += 1;
    }
    js
}

/// Integer offsets of the disc of index radius 2^j (n = 2).
fn disc_offsets(j: u32) -> Vec<(i64, i64)> {
    let h = (1i64 << j) - 1;
    let r2 = 1i64 << (2 * j);
    let mut offs = Vec::new();
    for mi in -h..=h {
        for mz in -h..=h {
            if mi * mi + mz * mz < r2 {
                offs.push((mi, mz));
            }
        }
    }
    offs
}

/// Tabulated |g|^q against dy dt / t; evaluations sweep the dyadic ball
/// family with tents shrunk by `aperture * t`.
pub struct CarlesonEvaluator {
    q: f64,
    table: PrefixTable,
}

impl CarlesonEvaluator {
    pub fn new(g: &GridFunction, q: Exp) -> Result<CarlesonEvaluator> {
        if q.is_inf() {
            return Err(Error::InvalidNormSpec(
                "Carleson functional needs a finite exponent".into(),
            ));
        }
        let qv = q.value();
        let gq = g.map(|v| v.abs().powf(qv));
        let table = PrefixTable::build(&gq, &CellMeasure::new(*g.spec(), MeasureKind::Hyperbolic))?;
        Ok(CarlesonEvaluator { q: qv, table })
    }

    /// For each dyadic radius index j: the normalized tent value of the ball
    /// centered at every node.
    fn ball_matrix(&self, aperture: f64) -> Vec<(u32, Vec<f64>)> {
        let spec = *self.table.spec();
        let dy = spec.dy();
        let heights = spec.heights();
        let bc = spec.boundary_count();
        let mut out = Vec::new();
        for j in ball_family(&spec) {
            let radius = (1u64 << j) as f64 * dy;
            let volume = if spec.n == 1 {
                2.0 * radius
            } else {
                std::f64::consts::PI * radius * radius
            };
            let mut acc: Vec<Accumulator> = (0..bc).map(|_| Accumulator::new()).collect();
            for k in 0..spec.t_levels {
                // the tent over B(c, R) at height t is the ball of radius
                // R - aperture * t
                let rows = window_rows(&spec, radius - aperture * heights[k]);
                if rows.is_empty() {
                    continue;
                }
                let w = self.table.level_weight(k);
                for (b, a) in acc.iter_mut().enumerate() {
                    a.add(w * window_sum(&self.table, k, b, &rows));
                }
            }
            let vals: Vec<f64> = acc
                .into_iter()
                .map(|a| (a.value().max(0.0) / volume).powf(1.0 / self.q))
                .collect();
            out.push((j, vals));
        }
        out
    }

    /// Per-node functional: sup over family balls containing the node. Node
    /// b lies in the ball of index radius 2^j at center i exactly when the
    /// wrapped offset is < 2^j, so each radius is a circular window maximum.
    pub fn eval_all(&self, aperture: f64) -> Vec<f64> {
        let spec = *self.table.spec();
        let bc = spec.boundary_count();
        let mut out = vec![0.0f64; bc];
        for (j, vals) in self.ball_matrix(aperture) {
            if spec.n == 1 {
                let windowed = circular_window_max(&vals, (1usize << j) - 1);
                for b in 0..bc {
                    out[b] = out[b].max(windowed[b]);
                }
            } else {
                let ny = spec.ny as i64;
                let offs = disc_offsets(j);
                for by in 0..ny {
                    for bz in 0..ny {
                        let b = (by * ny + bz) as usize;
                        let mut best = out[b];
                        for &(mi, mz) in &offs {
                            let iy = (by + mi).rem_euclid(ny);
                            let iz = (bz + mz).rem_euclid(ny);
                            best = best.max(vals[(iy * ny + iz) as usize]);
                        }
                        out[b] = best;
                    }
                }
            }
        }
        out
    }

    /// Supremum over the whole ball family; the p = inf norm value.
    pub fn global(&self, aperture: f64) -> f64 {
        let mut best = 0.0f64;
        for (_, vals) in self.ball_matrix(aperture) {
            for v in vals {
                best = best.max(v);
            }
        }
        best
    }
}

// ---------------------------------------------------------------------------
// Non-tangential functional
// ---------------------------------------------------------------------------

pub struct NontangentialEvaluator {
    rmt: RangeMaxTable,
}

impl NontangentialEvaluator {
    pub fn new(g: &GridFunction) -> NontangentialEvaluator {
        NontangentialEvaluator {
            rmt: RangeMaxTable::build(&g.map(f64::abs)),
        }
    }

    /// sup of |g| over the cone of the given aperture at every node.
    pub fn eval_all(&self, aperture: f64) -> Vec<f64> {
        let spec = *self.rmt.spec();
        let heights = spec.heights();
        let bc = spec.boundary_count();
        let mut out = vec![f64::NEG_INFINITY; bc];
        for k in 0..spec.t_levels {
            let rows = window_rows(&spec, aperture * heights[k]);
            if rows.is_empty() {
                continue;
            }
            for (b, o) in out.iter_mut().enumerate() {
                *o = o.max(window_max(&self.rmt, k, b, &rows));
            }
        }
        out.into_iter().map(|v| v.max(0.0)).collect()
    }
}

// ---------------------------------------------------------------------------
// Boundary collapse and the norm
// ---------------------------------------------------------------------------

/// `L^p` norm of node values against the uniform boundary weight dy^n; max
/// when p = inf.
pub fn boundary_lp(spec: &GridSpec, vals: &[f64], p: Exp) -> f64 {
    match p {
        Exp::Inf => vals.iter().fold(0.0f64, |a, &v| a.max(v.abs())),
        Exp::Finite(_) => {
            let pv = p.value();
            let mut acc = Accumulator::new();
            for &v in vals {
                acc.add(v.abs().powf(pv));
            }
            let dyn_ = spec.dy().powi(spec.n as i32);
            (acc.value().max(0.0) * dyn_).powf(1.0 / pv)
        }
    }
}

/// The tent quasi-norm under the strict support policy.
pub fn tent_norm(f: &GridFunction, s: &NormSpec) -> Result<f64> {
    tent_norm_with(f, s, SupportPolicy::Strict)
}

/// The tent quasi-norm: weight by t^{-beta}, Whitney-average unless r is
/// `none`, apply the category functional, collapse the boundary.
pub fn tent_norm_with(f: &GridFunction, s: &NormSpec, policy: SupportPolicy) -> Result<f64> {
    let spec = f.spec();
    spec.check_torus_safety(s.aperture)?;
    let weighted = weight_by_height(f, s.beta);
    let averaged = match s.r {
        Avg::Classical => weighted,
        Avg::Exp(e) => whitney_average(&weighted, e, &s.whitney.as_box(), policy)?,
    };
    match s.category() {
        Category::Conical => {
            let ev = ConicalEvaluator::new(&averaged, s.q)?;
            Ok(boundary_lp(spec, &ev.eval_all(s.aperture), s.p))
        }
        Category::Carleson => {
            let ev = CarlesonEvaluator::new(&averaged, s.q)?;
            Ok(ev.global(s.aperture))
        }
        Category::NonTangential => {
            let ev = NontangentialEvaluator::new(&averaged);
            Ok(boundary_lp(spec, &ev.eval_all(s.aperture), s.p))
        }
        Category::Uniform => Ok(averaged.max_abs()),
    }
}

// ---------------------------------------------------------------------------
// Pairing
// ---------------------------------------------------------------------------

/// The bilinear pairing against the weighted measure dy dt * t^{-beta0-1}.
pub fn pairing(f: &GridFunction, h: &GridFunction, beta0: f64) -> Result<f64> {
    if f.spec() != h.spec() {
        return Err(Error::GridMismatch);
    }
    let spec = *f.spec();
    let m = CellMeasure::new(spec, MeasureKind::Weighted(beta0));
    let bc = spec.boundary_count();
    let mut total = Accumulator::new();
    for k in 0..spec.t_levels {
        let mut level = Accumulator::new();
        for b in 0..bc {
            level.add(f.at(b, k) * h.at(b, k));
        }
        total.add(m.level_weight(k) * level.value());
    }
    Ok(total.value())
}

// ---------------------------------------------------------------------------
// Power rescaling identity
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct PowerIdentity {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_error: f64,
}

/// Checks `|| |f|^{1/theta} ||_s^theta = || f ||_{s / theta}`, the exact
/// rescaling law of the quasi-norm family. Both sides traverse identical
/// cells, so the discrepancy is pure floating-point noise.
pub fn power_identity_check(
    f: &GridFunction,
    s: &NormSpec,
    theta: Ratio<i64>,
) -> Result<PowerIdentity> {
    if theta <= Ratio::zero() || theta > Ratio::one() {
        return Err(Error::Precondition(format!("power {theta} not in (0,1]")));
    }
    let th = ratio_f64(theta);
    let inv = *theta.denom() as f64 / *theta.numer() as f64;
    let g = f.map(|v| v.abs().powf(inv));
    let lhs = tent_norm(&g, s)?.powf(th);
    let rhs = tent_norm(f, &s.rescale(theta)?)?;
    let scale = lhs.abs().max(rhs.abs());
    let rel_error = if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    };
    Ok(PowerIdentity { lhs, rhs, rel_error })
}

// ---------------------------------------------------------------------------
// Aperture-change sandwich
// ---------------------------------------------------------------------------

/// Which pair of functionals the sandwich compares around the averaged
/// middle term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SandwichKind {
    Conical,
    Carleson,
    NonTangential,
}

/// Best discrete constants in `narrow <= K1 * averaged` and
/// `averaged <= K2 * wide`.
#[derive(Clone, Copy, Debug)]
pub struct SandwichConstants {
    pub lower: f64,
    pub upper: f64,
}

pub(crate) fn max_ratio(num: &[f64], den: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for (&n, &d) in num.iter().zip(den) {
        if n == 0.0 {
            continue;
        }
        if d == 0.0 {
            return f64::INFINITY;
        }
        best = best.max(n / d);
    }
    best
}

/// Pointwise sandwich of a plain functional at derived apertures around the
/// unit-aperture functional of the Whitney-averaged function:
///
/// * conical: narrow aperture alpha0, wide alpha_c, average exponent q;
/// * Carleson: narrow comparison runs the *wide* tent aperture alpha_t on
///   the raw function (tents shrink as the aperture grows), wide side
///   alpha0; average exponent q;
/// * non-tangential: narrow alpha0, wide alpha_c, essential-sup average.
///
/// Returns the best discrete constants of the two pointwise inequalities.
pub fn coincidence_sandwich(
    f: &GridFunction,
    kind: SandwichKind,
    q: Exp,
    d: &DerivedParams,
    policy: SupportPolicy,
) -> Result<SandwichConstants> {
    let spec = f.spec();
    let base = d.base.as_box();
    match kind {
        SandwichKind::Conical => {
            spec.check_torus_safety(d.alpha_c)?;
            let w = whitney_average(f, require_finite(q)?, &base, policy)?;
            let raw = ConicalEvaluator::new(f, q)?;
            let mid = ConicalEvaluator::new(&w, q)?.eval_all(1.0);
            Ok(SandwichConstants {
                lower: max_ratio(&raw.eval_all(d.alpha0), &mid),
                upper: max_ratio(&mid, &raw.eval_all(d.alpha_c)),
            })
        }
        SandwichKind::Carleson => {
            let w = whitney_average(f, require_finite(q)?, &base, policy)?;
            let raw = CarlesonEvaluator::new(f, q)?;
            let mid = CarlesonEvaluator::new(&w, q)?.eval_all(1.0);
            Ok(SandwichConstants {
                lower: max_ratio(&raw.eval_all(d.alpha_t), &mid),
                upper: max_ratio(&mid, &raw.eval_all(d.alpha0)),
            })
        }
        SandwichKind::NonTangential => {
            spec.check_torus_safety(d.alpha_c)?;
            let w = whitney_average(f, Exp::Inf, &base, policy)?;
            let raw = NontangentialEvaluator::new(f);
            let mid = NontangentialEvaluator::new(&w).eval_all(1.0);
            Ok(SandwichConstants {
                lower: max_ratio(&raw.eval_all(d.alpha0), &mid),
                upper: max_ratio(&mid, &raw.eval_all(d.alpha_c)),
            })
        }
    }
}

fn require_finite(q: Exp) -> Result<Exp> {
    if q.is_inf() {
        return Err(Error::InvalidNormSpec(
            "this sandwich kind needs a finite exponent".into(),
        ));
    }
    Ok(q)
}

/// Norm ratio under swapped Whitney parameters, holding everything else
/// fixed; finite and stable ratios witness parameter-independence.
pub fn whitney_param_ratio(f: &GridFunction, s: &NormSpec, alt: WhitneyParams) -> Result<f64> {
    if matches!(s.r, Avg::Classical) {
        return Err(Error::Precondition(
            "parameter comparison needs an averaged norm (r != none)".into(),
        ));
    }
    let base = tent_norm(f, s)?;
    if base == 0.0 {
        return Err(Error::Precondition(
            "zero norm in parameter-ratio comparison".into(),
        ));
    }
    let mut alt_spec = *s;
    alt_spec.whitney = alt;
    Ok(tent_norm(f, &alt_spec)? / base)
}

// ---------------------------------------------------------------------------
// Boundary averages: maximal function and ball-average extension
// ---------------------------------------------------------------------------

fn circ_prefix(vals: &[f64]) -> Vec<Dd> {
    let mut out = Vec::with_capacity(vals.len() + 1);
    let mut cur = Dd::ZERO;
    out.push(cur);
    for &v in vals {
        cur = cur.add_f64(v);
        out.push(cur);
    }
    out
}

/// Wrapped inclusive window sum; hi - lo + 1 <= n.
fn circ_window_sum(prefix: &[Dd], n: usize, lo: i64, hi: i64) -> f64 {
    let nyi = n as i64;
    let count = hi - lo + 1;
    debug_assert!(count >= 1 && count <= nyi);
    let b0 = lo.rem_euclid(nyi);
    let end = b0 + count;
    if end <= nyi {
        prefix[end as usize].diff(prefix[b0 as usize])
    } else {
        prefix[n].diff(prefix[b0 as usize]) + prefix[(end - nyi) as usize].diff(prefix[0])
    }
}

/// Node-count averages of |h| over the dyadic ball family around every
/// center, one vector per radius index.
fn ball_average_matrix(spec: &GridSpec, habs: &[f64]) -> Vec<(u32, Vec<f64>)> {
    let bc = spec.boundary_count();
    let ny = spec.ny;
    let mut out = Vec::new();
    if spec.n == 1 {
        let prefix = circ_prefix(habs);
        for j in ball_family(spec) {
            let half = (1i64 << j) - 1;
            let count = (2 * half + 1).min(ny as i64);
            let vals: Vec<f64> = (0..bc as i64)
                .map(|i| {
                    let s = if 2 * half + 1 >= ny as i64 {
                        prefix[ny].diff(prefix[0])
                    } else {
                        circ_window_sum(&prefix, ny, i - half, i + half)
                    };
                    s / count as f64
                })
                .collect();
            out.push((j, vals));
        }
    } else {
        let nyi = ny as i64;
        for j in ball_family(spec) {
            let offs = disc_offsets(j);
            let count = offs.len() as f64;
            let mut vals = Vec::with_capacity(bc);
            for by in 0..nyi {
                for bz in 0..nyi {
                    let mut acc = Accumulator::new();
                    for &(mi, mz) in &offs {
                        let iy = (by + mi).rem_euclid(nyi);
                        let iz = (bz + mz).rem_euclid(nyi);
                        acc.add(habs[(iy * nyi + iz) as usize]);
                    }
                    vals.push(acc.value() / count);
                }
            }
            out.push((j, vals));
        }
    }
    out
}

/// Discrete uncentered maximal function of a boundary array over the dyadic
/// ball family: at each node, the sup of ball averages of |h| over balls
/// containing the node.
pub fn hl_maximal(spec: &GridSpec, h: &[f64]) -> Result<Vec<f64>> {
    if h.len() != spec.boundary_count() {
        return Err(Error::GridMismatch);
    }
    let habs: Vec<f64> = h.iter().map(|v| v.abs()).collect();
    let bc = spec.boundary_count();
    let mut out = vec![0.0f64; bc];
    for (j, vals) in ball_average_matrix(spec, &habs) {
        if spec.n == 1 {
            let windowed = circular_window_max(&vals, (1usize << j) - 1);
            for b in 0..bc {
                out[b] = out[b].max(windowed[b]);
            }
        } else {
            let nyi = spec.ny as i64;
            let offs = disc_offsets(j);
            for by in 0..nyi {
                for bz in 0..nyi {
                    let b = (by * nyi + bz) as usize;
                    let mut best = out[b];
                    for &(mi, mz) in &offs {
                        let iy = (by + mi).rem_euclid(nyi);
                        let iz = (bz + mz).rem_euclid(nyi);
                        best = best.max(vals[(iy * nyi + iz) as usize]);
                    }
                    out[b] = best;
                }
            }
        }
    }
    Ok(out)
}

/// Harmonic-style extension of a boundary array into the half-space: the
/// value at (y, t) is the node-count average of h over the boundary ball of
/// radius t around y. Produces full-support fields (every node of the ball
/// of radius t_min still averages at least the node itself).
pub fn ball_average_field(spec: &GridSpec, h: &[f64]) -> Result<GridFunction> {
    if h.len() != spec.boundary_count() {
        return Err(Error::GridMismatch);
    }
    let heights = spec.heights();
    let dy = spec.dy();
    let ny = spec.ny;
    let mut out = GridFunction::zeros(*spec);
    if spec.n == 1 {
        let prefix = circ_prefix(h);
        for (k, &t) in heights.iter().enumerate() {
            let half = index_halfwidth(dy, t).max(0);
            let count = (2 * half + 1).min(ny as i64);
            for b in 0..ny as i64 {
                let s = if 2 * half + 1 >= ny as i64 {
                    prefix[ny].diff(prefix[0])
                } else {
                    circ_window_sum(&prefix, ny, b - half, b + half)
                };
                out.set(b as usize, k, s / count as f64);
            }
        }
    } else {
        let nyi = ny as i64;
        for (k, &t) in heights.iter().enumerate() {
            let rows = window_rows(spec, t);
            let count = window_count(spec, &rows);
            for by in 0..nyi {
                for bz in 0..nyi {
                    let mut acc = Accumulator::new();
                    for &(off, hw) in &rows {
                        let iy = (by + off).rem_euclid(nyi);
                        if 2 * hw + 1 >= nyi {
                            for iz in 0..nyi {
                                acc.add(h[(iy * nyi + iz) as usize]);
                            }
                        } else {
                            for mz in -hw..=hw {
                                let iz = (bz + mz).rem_euclid(nyi);
                                acc.add(h[(iy * nyi + iz) as usize]);
                            }
                        }
                    }
                    out.set((by * nyi + bz) as usize, k, acc.value() / count);
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Predicate-form reference implementations
// ---------------------------------------------------------------------------

/// Conical functional at one boundary point by direct predicate scan.
pub fn conical_a(g: &GridFunction, q: Exp, aperture: f64, x: &[f64; 2]) -> Result<f64> {
    if q.is_inf() {
        return Err(Error::InvalidNormSpec(
            "conical functional needs a finite exponent".into(),
        ));
    }
    let qv = q.value();
    let spec = g.spec();
    let m = CellMeasure::new(*spec, MeasureKind::Conical);
    let heights = spec.heights();
    let mut total = Accumulator::new();
    for k in 0..spec.t_levels {
        let mut level = Accumulator::new();
        for b in 0..spec.boundary_count() {
            let p = Point {
                y: spec.boundary_point(b),
                t: heights[k],
            };
            if cone_contains(spec.n, x, aperture, &p) {
                level.add(g.at(b, k).abs().powf(qv));
            }
        }
        total.add(m.level_weight(k) * level.value());
    }
    Ok(total.value().max(0.0).powf(1.0 / qv))
}

/// Carleson functional of one ball by direct predicate scan (open tent).
pub fn carleson_c(g: &GridFunction, q: Exp, aperture: f64, ball: &Ball) -> Result<f64> {
    if q.is_inf() {
        return Err(Error::InvalidNormSpec(
            "Carleson functional needs a finite exponent".into(),
        ));
    }
    let qv = q.value();
    let spec = g.spec();
    let m = CellMeasure::new(*spec, MeasureKind::Hyperbolic);
    let heights = spec.heights();
    let mut total = Accumulator::new();
    for k in 0..spec.t_levels {
        let mut level = Accumulator::new();
        for b in 0..spec.boundary_count() {
            let p = Point {
                y: spec.boundary_point(b),
                t: heights[k],
            };
            if tent_contains(spec.n, ball, aperture, false, &p) {
                level.add(g.at(b, k).abs().powf(qv));
            }
        }
        total.add(m.level_weight(k) * level.value());
    }
    Ok((total.value().max(0.0) / ball.volume(spec.n)).powf(1.0 / qv))
}

/// Non-tangential maximum at one boundary point by direct predicate scan.
pub fn nontangential_n(g: &GridFunction, aperture: f64, x: &[f64; 2]) -> f64 {
    let spec = g.spec();
    let heights = spec.heights();
    let mut best = 0.0f64;
    for k in 0..spec.t_levels {
        for b in 0..spec.boundary_count() {
            let p = Point {
                y: spec.boundary_point(b),
                t: heights[k],
            };
            if cone_contains(spec.n, x, aperture, &p) {
                best = best.max(g.at(b, k).abs());
            }
        }
    }
    best
}
