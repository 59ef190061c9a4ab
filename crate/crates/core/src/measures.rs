//! Discrete non-negative measures on the closed half-space: balayage onto
//! the boundary, the extension built from ball averages of the reciprocal
//! balayage, Carleson norms over the dyadic ball family, and the
//! factorization of a bounded measure into a boundary-controlled function
//! times a Carleson measure.
//!
//! Node-centered ball averages share the membership convention of the
//! half-space ball average in `functionals` (index windows); atom-centered
//! averages use the same open-ball predicate with exact torus distances.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exponent::Exp;
use crate::functionals::{
    ball_average_field, boundary_lp, window_count, window_rows, NontangentialEvaluator,
};
use crate::geometry::{torus_distance, Ball, Point, TORUS_HALF_WIDTH};
use crate::grid::{GridFunction, GridSpec};
use crate::kahan::Accumulator;

// ---------------------------------------------------------------------------
// Measures
// ---------------------------------------------------------------------------

/// One atom: a point of the open half-space and a positive mass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub point: Point,
    pub mass: f64,
}

/// A finite non-negative atomic measure on the half-space over the torus.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    n: usize,
    atoms: Vec<Atom>,
    total_mass: f64,
}

impl DiscreteMeasure {
    pub fn new(n: usize, atoms: Vec<Atom>) -> Result<DiscreteMeasure> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidMeasure(format!(
                "boundary dimension {n} not supported (1 or 2)"
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("a measure needs at least one atom".into()));
        }
        let mut acc = Accumulator::new();
        for (i, a) in atoms.iter().enumerate() {
            if !(a.mass > 0.0) || !a.mass.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} has non-positive or non-finite mass {}",
                    a.mass
                )));
            }
            if !(a.point.t > 0.0) || !a.point.t.is_finite() {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} has non-positive or non-finite height {}",
                    a.point.t
                )));
            }
            acc.add(a.mass);
        }
        Ok(DiscreteMeasure {
            n,
            atoms,
            total_mass: acc.value(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Same atoms with masses scaled by `lambda > 0`.
    pub fn scale(&self, lambda: f64) -> Result<DiscreteMeasure> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                point: a.point,
                mass: a.mass * lambda,
            })
            .collect();
        DiscreteMeasure::new(self.n, atoms)
    }

    /// Checks that the measure lives on the grid's height band and matches
    /// its dimension; grid-coupled operations require this.
    pub fn validate_for(&self, spec: &GridSpec) -> Result<()> {
        if self.n != spec.n {
            return Err(Error::GridMismatch);
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if a.point.t < spec.t_min || a.point.t > spec.t_max {
                return Err(Error::InvalidMeasure(format!(
                    "atom {i} height {} escapes the grid band [{}, {}]",
                    a.point.t, spec.t_min, spec.t_max
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Balayage and extension
// ---------------------------------------------------------------------------

/// Boundary sweep of the measure: the sum over atoms whose open cone shadow
/// covers `x` of mass / height^n.
pub fn balayage(mu: &DiscreteMeasure, x: &[f64; 2]) -> f64 {
    let mut acc = Accumulator::new();
    for a in &mu.atoms {
        if torus_distance(mu.n, x, &a.point.y) < a.point.t {
            acc.add(a.mass / a.point.t.powi(mu.n as i32));
        }
    }
    acc.value()
}

/// Balayage sampled at every boundary node of the grid.
pub fn balayage_on_grid(spec: &GridSpec, mu: &DiscreteMeasure) -> Result<Vec<f64>> {
    if mu.n != spec.n {
        return Err(Error::GridMismatch);
    }
    Ok((0..spec.boundary_count())
        .map(|b| balayage(mu, &spec.boundary_point(b)))
        .collect())
}

/// Extension value at an arbitrary half-space point: the node-count average
/// of the reciprocal balayage over the boundary nodes strictly inside
/// B(p.y, p.t). Returns +inf when the ball holds no node or the balayage
/// vanishes at one of its nodes; infinite values are legal and flag that
/// the point sees boundary the measure never shadows.
pub fn extension_at(spec: &GridSpec, abar: &[f64], p: &Point) -> f64 {
    let mut acc = Accumulator::new();
    let mut count = 0usize;
    for b in 0..spec.boundary_count() {
        if torus_distance(spec.n, &spec.boundary_point(b), &p.y) < p.t {
            if abar[b] == 0.0 {
                return f64::INFINITY;
            }
            acc.add(1.0 / abar[b]);
            count += 1;
        }
    }
    if count == 0 {
        return f64::INFINITY;
    }
    acc.value() / count as f64
}

/// Extension of the measure to the whole grid: at (y, t) the ball average
/// of the reciprocal balayage. Where the balayage is positive at every node
/// this is exactly the shared half-space ball average; where it vanishes
/// inside the ball the average is +inf.
pub fn extension_field(spec: &GridSpec, mu: &DiscreteMeasure) -> Result<GridFunction> {
    let abar = balayage_on_grid(spec, mu)?;
    if abar.iter().all(|&v| v > 0.0) {
        let inv: Vec<f64> = abar.iter().map(|&v| 1.0 / v).collect();
        return ball_average_field(spec, &inv);
    }
    // Same index windows as the shared average, with vanishing-balayage
    // nodes promoted to an infinite average instead of poisoning sums.
    let heights = spec.heights();
    let nyi = spec.ny as i64;
    let mut out = GridFunction::zeros(*spec);
    for (k, &t) in heights.iter().enumerate() {
        let rows = window_rows(spec, t);
        let count = window_count(spec, &rows);
        for b in 0..spec.boundary_count() {
            let (by, bz) = if spec.n == 1 {
                (0i64, b as i64)
            } else {
                ((b / spec.ny) as i64, (b % spec.ny) as i64)
            };
            let mut acc = Accumulator::new();
            let mut infinite = rows.is_empty();
            'rows: for &(off, hw) in &rows {
                let iy = if spec.n == 1 {
                    0
                } else {
                    (by + off).rem_euclid(nyi)
                };
                let mut push = |iz: i64| -> bool {
                    let v = abar[(iy * nyi + iz) as usize];
                    if v == 0.0 {
                        return false;
                    }
                    acc.add(1.0 / v);
                    true
                };
                if 2 * hw + 1 >= nyi {
                    for iz in 0..nyi {
                        if !push(iz) {
                            infinite = true;
                            break 'rows;
                        }
                    }
                } else {
                    for mz in -hw..=hw {
                        if !push((bz + mz).rem_euclid(nyi)) {
                            infinite = true;
                            break 'rows;
                        }
                    }
                }
            }
            out.set(
                b,
                k,
                if infinite {
                    f64::INFINITY
                } else {
                    acc.value() / count
                },
            );
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Carleson norm over the ball family
// ---------------------------------------------------------------------------

/// Dyadic ball radii anchored at the grid resolution: dy * 2^j up to half
/// the torus width (inclusive).
fn ball_radii(spec: &GridSpec) -> Vec<f64> {
    let mut radii = Vec::new();
    let mut r = spec.dy();
    while r <= TORUS_HALF_WIDTH {
        radii.push(r);
        r *= 2.0;
    }
    radii
}

/// sup over the ball family of measure(closed tent over B) / |B|.
pub fn carleson_norm_measure(spec: &GridSpec, nu: &DiscreteMeasure) -> Result<f64> {
    if nu.n != spec.n {
        return Err(Error::GridMismatch);
    }
    let radii = ball_radii(spec);
    let mut best = 0.0f64;
    for c in 0..spec.boundary_count() {
        let x = spec.boundary_point(c);
        // Closed-tent height of each atom over this center: the smallest
        // admissible radius that scoops it.
        let reach: Vec<f64> = nu
            .atoms
            .iter()
            .map(|a| torus_distance(nu.n, &x, &a.point.y) + a.point.t)
            .collect();
        for &r in &radii {
            let mut acc = Accumulator::new();
            for (a, &need) in nu.atoms.iter().zip(&reach) {
                if need <= r {
                    acc.add(a.mass);
                }
            }
            let vol = Ball::new(x, r)?.volume(spec.n);
            best = best.max(acc.value() / vol);
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Fubini-bound certification
// ---------------------------------------------------------------------------

/// Outcome of the extension-times-measure Carleson check. The Fubini bound
/// is the exact dimensional constant of the discrete chain — the ratio of
/// t^n to the volume of the boundary ball of radius t: 1/2 on the line,
/// 1/pi on the plane — which the measured value may exceed only by the
/// ball-family discretization slack.
#[derive(Clone, Debug)]
pub struct BalayageCheck {
    pub carleson_value: f64,
    pub fubini_bound: f64,
    /// Extension evaluated at each atom; finite because every atom shadows
    /// its own ball's nodes.
    pub atom_extensions: Vec<f64>,
}

fn fubini_bound(n: usize) -> f64 {
    match n {
        1 => 0.5,
        _ => 1.0 / std::f64::consts::PI,
    }
}

/// Weights the measure by its own extension and measures the Carleson norm
/// of the result, which the discrete Fubini argument bounds by the
/// dimensional constant.
pub fn check_balayage_bound(spec: &GridSpec, mu: &DiscreteMeasure) -> Result<BalayageCheck> {
    mu.validate_for(spec)?;
    let abar = balayage_on_grid(spec, mu)?;
    let exts: Vec<f64> = mu
        .atoms
        .iter()
        .map(|a| extension_at(spec, &abar, &a.point))
        .collect();
    let weighted = reweight(mu, &exts)?;
    let value = carleson_norm_measure(spec, &weighted)?;
    Ok(BalayageCheck {
        carleson_value: value,
        fubini_bound: fubini_bound(spec.n),
        atom_extensions: exts,
    })
}

fn reweight(mu: &DiscreteMeasure, factors: &[f64]) -> Result<DiscreteMeasure> {
    let atoms = mu
        .atoms
        .iter()
        .zip(factors)
        .map(|(a, &f)| Atom {
            point: a.point,
            mass: a.mass * f,
        })
        .collect();
    DiscreteMeasure::new(mu.n, atoms)
}

// ---------------------------------------------------------------------------
// Measure factorization
// ---------------------------------------------------------------------------

/// |d mu| split as the reciprocal extension (a boundary-controlled function
/// on the grid) times the extension-weighted measure (a Carleson measure).
#[derive(Clone, Debug)]
pub struct MeasureFactorization {
    /// Reciprocal extension sampled on the grid; 0 where the extension is
    /// infinite.
    pub boundary_factor: GridFunction,
    /// The measure reweighted by its extension at each atom.
    pub carleson_factor: DiscreteMeasure,
    pub atom_extensions: Vec<f64>,
    /// max over atoms of |(1/E)(E * mass) - mass|.
    pub reconstruction_error: f64,
    /// L^1 norm of the non-tangential maximal function of the boundary
    /// factor (the plain p = 1 tent norm).
    pub boundary_norm: f64,
    pub carleson_norm: f64,
    /// boundary_norm / total mass — the reported boundary-control constant.
    pub boundary_ratio: f64,
}

pub fn factorize_measure(spec: &GridSpec, mu: &DiscreteMeasure) -> Result<MeasureFactorization> {
    mu.validate_for(spec)?;
    let abar = balayage_on_grid(spec, mu)?;
    let exts: Vec<f64> = mu
        .atoms
        .iter()
        .map(|a| extension_at(spec, &abar, &a.point))
        .collect();
    let carleson_factor = reweight(mu, &exts)?;
    let field = extension_field(spec, mu)?;
    let boundary_factor = field.map(|e| if e.is_finite() { 1.0 / e } else { 0.0 });

    let mut recon = 0.0f64;
    for (a, &e) in mu.atoms.iter().zip(&exts) {
        recon = recon.max(((1.0 / e) * (e * a.mass) - a.mass).abs());
    }

    let nontan = NontangentialEvaluator::new(&boundary_factor).eval_all(1.0);
    let boundary_norm = boundary_lp(spec, &nontan, Exp::int(1));
    let carleson_norm = carleson_norm_measure(spec, &carleson_factor)?;
    let boundary_ratio = boundary_norm / mu.total_mass;

    Ok(MeasureFactorization {
        boundary_factor,
        carleson_factor,
        atom_extensions: exts,
        reconstruction_error: recon,
        boundary_norm,
        carleson_norm,
        boundary_ratio,
    })
}

// ---------------------------------------------------------------------------
// Measure-form embedding inequality
// ---------------------------------------------------------------------------

/// Measured constant of the inequality: integral of |f|^p against the
/// measure, over ||N(f)||_p^p times the measure's Carleson density.
#[derive(Clone, Debug)]
pub struct MeasureEmbedding {
    pub integral: f64,
    pub nontangential_lp_pow: f64,
    pub carleson_norm: f64,
    pub constant: f64,
}

/// Integrates |f|^p over the atoms (each atom reads the grid cell nearest
/// to it) and compares against the non-tangential route.
pub fn check_measure_embedding(
    f: &GridFunction,
    mu: &DiscreteMeasure,
    p: Exp,
) -> Result<MeasureEmbedding> {
    if p.is_inf() {
        return Err(Error::Precondition(
            "measure embedding check needs finite p".into(),
        ));
    }
    let spec = f.spec();
    mu.validate_for(spec)?;
    let pf = p.value();
    let mut acc = Accumulator::new();
    for a in &mu.atoms {
        let (b, k) = nearest_cell(spec, &a.point);
        acc.add(f.at(b, k).abs().powf(pf) * a.mass);
    }
    let integral = acc.value();
    let nontan = NontangentialEvaluator::new(f).eval_all(1.0);
    let nlp = boundary_lp(spec, &nontan, p).powf(pf);
    let cnorm = carleson_norm_measure(spec, mu)?;
    let denom = nlp * cnorm;
    let constant = if integral == 0.0 {
        0.0
    } else if denom == 0.0 {
        f64::INFINITY
    } else {
        integral / denom
    };
    Ok(MeasureEmbedding {
        integral,
        nontangential_lp_pow: nlp,
        carleson_norm: cnorm,
        constant,
    })
}

/// Grid cell whose center is nearest to the point (wrapping in space,
/// clamping in height).
fn nearest_cell(spec: &GridSpec, p: &Point) -> (usize, usize) {
    let dy = spec.dy();
    let nyi = spec.ny as i64;
    let wrap = |y: f64| -> usize { ((y / dy).round() as i64).rem_euclid(nyi) as usize };
    let b = if spec.n == 1 {
        wrap(p.y[0])
    } else {
        wrap(p.y[0]) * spec.ny + wrap(p.y[1])
    };
    let steps = (p.t / spec.t_min).ln() / spec.log_step();
    let k = (steps.round() as i64).clamp(0, spec.t_levels as i64 - 1) as usize;
    (b, k)
}

// ---------------------------------------------------------------------------
// Exact shadow integration (total-mass identity, one-dimensional)
// ---------------------------------------------------------------------------

/// Integral of the balayage over the whole circle, computed exactly from
/// the piecewise-constant structure: the breakpoints are the shadow
/// endpoints of the atoms. Equals 2 * total mass whenever every shadow is
/// shorter than the full circle.
pub fn balayage_total_mass(mu: &DiscreteMeasure) -> Result<f64> {
    if mu.n != 1 {
        return Err(Error::Precondition(
            "exact shadow integration is one-dimensional".into(),
        ));
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(2 * mu.atoms.len());
    for a in &mu.atoms {
        cuts.push((a.point.y[0] - a.point.t).rem_euclid(1.0));
        cuts.push((a.point.y[0] + a.point.t).rem_euclid(1.0));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let m = cuts.len();
    let mut acc = Accumulator::new();
    for i in 0..m {
        let lo = cuts[i];
        let hi = if i + 1 < m { cuts[i + 1] } else { cuts[0] + 1.0 };
        let len = hi - lo;
        if len <= 0.0 {
            continue;
        }
        let mid = ((lo + hi) / 2.0).rem_euclid(1.0);
        acc.add(balayage(mu, &[mid, 0.0]) * len);
    }
    Ok(acc.value())
}

// ---------------------------------------------------------------------------
// Text import/export
// ---------------------------------------------------------------------------

/// Reads a measure from text lines `y,t,mass` (one boundary coordinate) or
/// `y,z,t,mass` (two); the dimension is inferred from the field count of
/// the first data line. Blank lines and `#` comments are skipped;
/// non-positive masses are rejected.
pub fn read_measure(r: &mut dyn BufRead) -> Result<DiscreteMeasure> {
    let mut atoms = Vec::new();
    let mut n: Option<usize> = None;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let fields: Vec<&str> = s.split(',').collect();
        let dim = match fields.len() {
            3 => 1,
            4 => 2,
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("expected 3 or 4 comma-separated fields, got {other}"),
                })
            }
        };
        match n {
            None => n = Some(dim),
            Some(prev) if prev != dim => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("line has {dim} coordinates but the file started with {prev}"),
                })
            }
            _ => {}
        }
        let mut nums = [0.0f64; 4];
        for (j, field) in fields.iter().enumerate() {
            nums[j] = field.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad number `{field}`"),
            })?;
        }
        let (point, mass) = if dim == 1 {
            (Point::new1(nums[0], nums[1]), nums[2])
        } else {
            (Point::new2(nums[0], nums[1], nums[2]), nums[3])
        };
        if !(mass > 0.0) {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("mass must be positive, got {mass}"),
            });
        }
        atoms.push(Atom { point, mass });
    }
    DiscreteMeasure::new(n.unwrap_or(1), atoms)
}

pub fn write_measure(mu: &DiscreteMeasure, w: &mut dyn Write) -> Result<()> {
    for a in &mu.atoms {
        if mu.n == 1 {
            writeln!(w, "{},{},{}", a.point.y[0], a.point.t, a.mass)?;
        } else {
            writeln!(w, "{},{},{},{}", a.point.y[0], a.point.y[1], a.point.t, a.mass)?;
        }
    }
    Ok(())
}

pub fn read_measure_file(path: &Path) -> Result<DiscreteMeasure> {
    let file = std::fs::File::open(path)?;
    let mut reader = std::io::BufReader::new(file);
    read_measure(&mut reader)
}

pub fn write_measure_file(mu: &DiscreteMeasure, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    write_measure(mu, &mut out)?;
    std::fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Random corpus
// ---------------------------------------------------------------------------

/// Deterministic random measure on the grid's band. Heights start several
/// grid cells up (16 on the line, 4 in the plane, and inside the band) so
/// every atom ball averages enough nodes to keep the discrete Fubini excess
/// within a few percent; masses are uniform in [0.25, 2).
pub fn random_measure(spec: &GridSpec, atom_count: usize, seed: u64) -> Result<DiscreteMeasure> {
    if atom_count == 0 {
        return Err(Error::InvalidMeasure("atom count must be positive".into()));
    }
    let cells = if spec.n == 1 { 16.0 } else { 4.0 };
    let lo = (spec.t_min.max(cells * spec.dy())) * 1.02;
    let hi = spec.t_max * 0.98;
    if !(lo < hi) {
        return Err(Error::InvalidGridSpec(format!(
            "height band [{lo}, {hi}] too narrow for measure atoms; need t_max well above \
             {cells} boundary cells"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6d65_6173);
    let mut atoms = Vec::with_capacity(atom_count);
    for _ in 0..atom_count {
        let t = lo * (hi / lo).powf(rng.gen_range(0.0..1.0));
        let point = if spec.n == 1 {
            Point::new1(rng.gen_range(0.0..1.0), t)
        } else {
            Point::new2(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), t)
        };
        atoms.push(Atom {
            point,
            mass: rng.gen_range(0.25..2.0),
        });
    }
    DiscreteMeasure::new(spec.n, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_m() -> GridSpec {
        GridSpec::new(1, 256, 32, 0.01, 0.4).unwrap()
    }

    fn single_atom(y: f64, t: f64, mass: f64) -> DiscreteMeasure {
        DiscreteMeasure::new(
            1,
            vec![Atom {
                point: Point::new1(y, t),
                mass,
            }],
        )
        .unwrap()
    }

    #[test]
    fn measure_construction_validates() {
        assert!(DiscreteMeasure::new(1, vec![]).is_err());
        assert!(DiscreteMeasure::new(
            1,
            vec![Atom {
                point: Point::new1(0.2, 0.1),
                mass: 0.0
            }]
        )
        .is_err());
        assert!(DiscreteMeasure::new(
            1,
            vec![Atom {
                point: Point::new1(0.2, 0.0),
                mass: 1.0
            }]
        )
        .is_err());
        let mu = single_atom(0.2, 0.1, 1.5);
        assert_eq!(mu.total_mass(), 1.5);
        let spec = spec_m();
        assert!(mu.validate_for(&spec).is_ok());
        assert!(single_atom(0.2, 0.005, 1.0).validate_for(&spec).is_err());
    }

    #[test]
    fn balayage_matches_hand_values_and_wraps() {
        let mu = single_atom(0.3, 0.05, 2.0);
        assert_eq!(balayage(&mu, &[0.3, 0.0]), 40.0);
        assert_eq!(balayage(&mu, &[0.34, 0.0]), 40.0);
        assert_eq!(balayage(&mu, &[0.36, 0.0]), 0.0);
        let wrap = single_atom(0.01, 0.05, 2.0);
        assert_eq!(balayage(&wrap, &[0.98, 0.0]), 40.0);

        // Additivity over atoms at overlapping shadows.
        let both = DiscreteMeasure::new(
            1,
            vec![
                Atom {
                    point: Point::new1(0.3, 0.05),
                    mass: 2.0,
                },
                Atom {
                    point: Point::new1(0.32, 0.08),
                    mass: 1.0,
                },
            ],
        )
        .unwrap();
        let x = [0.31, 0.0];
        let expect = 2.0 / 0.05 + 1.0 / 0.08;
        assert!((balayage(&both, &x) - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn extension_single_atom_is_height_over_mass() {
        let spec = spec_m();
        // Atom centered exactly on a node: its ball sees exactly its shadow.
        let y0 = 64.0 / 256.0;
        let mu = single_atom(y0, 0.05, 2.0);
        let abar = balayage_on_grid(&spec, &mu).unwrap();
        let e = extension_at(&spec, &abar, &Point::new1(y0, 0.05));
        assert!((e - 0.025).abs() <= 1e-15, "E = {e}");
        // A point far above with partial shadow coverage averages through
        // unshadowed nodes.
        let far = extension_at(&spec, &abar, &Point::new1(0.75, 0.35));
        assert!(far.is_infinite());
    }

    #[test]
    fn extension_field_matches_pointwise_brute_force() {
        let spec = spec_m();
        let mu = DiscreteMeasure::new(
            1,
            vec![
                Atom {
                    point: Point::new1(0.25, 0.05),
                    mass: 2.0,
                },
                Atom {
                    point: Point::new1(0.7, 0.12),
                    mass: 0.5,
                },
            ],
        )
        .unwrap();
        let abar = balayage_on_grid(&spec, &mu).unwrap();
        assert!(abar.iter().any(|&v| v == 0.0), "fixture should leave gaps");
        let field = extension_field(&spec, &mu).unwrap();
        let heights = spec.heights();
        for &b in &[0usize, 40, 64, 100, 180, 250] {
            for &k in &[0usize, 10, 20, 31] {
                let brute = extension_at(
                    &spec,
                    &abar,
                    &Point::new1(spec.boundary_point(b)[0], heights[k]),
                );
                let got = field.at(b, k);
                if brute.is_infinite() {
                    assert!(got.is_infinite(), "({b},{k}): {got} vs inf");
                } else {
                    assert!(
                        (got - brute).abs() <= 1e-12 * brute.max(1.0),
                        "({b},{k}): {got} vs {brute}"
                    );
                }
            }
        }

        // Full-coverage measure takes the shared-average fast path and must
        // agree with the brute force as well.
        let cover = DiscreteMeasure::new(
            1,
            vec![
                Atom {
                    point: Point::new1(0.1, 0.39),
                    mass: 1.0,
                },
                Atom {
                    point: Point::new1(0.6, 0.39),
                    mass: 1.0,
                },
            ],
        )
        .unwrap();
        let abar_c = balayage_on_grid(&spec, &cover).unwrap();
        assert!(abar_c.iter().all(|&v| v > 0.0));
        let field_c = extension_field(&spec, &cover).unwrap();
        for &b in &[3usize, 77, 200] {
            for &k in &[0usize, 15, 31] {
                let brute = extension_at(
                    &spec,
                    &abar_c,
                    &Point::new1(spec.boundary_point(b)[0], heights[k]),
                );
                let got = field_c.at(b, k);
                assert!(
                    (got - brute).abs() <= 1e-12 * brute,
                    "({b},{k}): {got} vs {brute}"
                );
            }
        }
    }

    #[test]
    fn carleson_norm_single_atom_optimizes_over_the_family() {
        let spec = spec_m();
        // Mass M at a node with height exactly a family radius: the tightest
        // ball is centered there with radius t0, so the norm is M / (2 t0).
        let t0 = spec.dy() * 8.0;
        let mu = single_atom(64.0 / 256.0, t0, 1.7);
        let norm = carleson_norm_measure(&spec, &mu).unwrap();
        let expect = 1.7 / (2.0 * t0);
        assert!((norm - expect).abs() <= 1e-12 * expect, "{norm} vs {expect}");

        // Doubling masses doubles the norm exactly.
        let twice = carleson_norm_measure(&spec, &mu.scale(2.0).unwrap()).unwrap();
        assert_eq!(twice, 2.0 * norm);
    }

    #[test]
    fn balayage_bound_point_mass_is_exactly_half() {
        let spec = spec_m();
        let t0 = spec.dy() * 8.0;
        let mu = single_atom(64.0 / 256.0, t0, 2.0);
        let check = check_balayage_bound(&spec, &mu).unwrap();
        assert_eq!(check.fubini_bound, 0.5);
        assert!(
            (check.carleson_value - 0.5).abs() <= 1e-12,
            "value {}",
            check.carleson_value
        );
        assert!((check.atom_extensions[0] - t0 / 2.0).abs() <= 1e-15);
    }

    #[test]
    fn balayage_bound_random_measures_stay_bounded() {
        let spec = spec_m();
        for seed in 0..40u64 {
            let mu = random_measure(&spec, 10, seed).unwrap();
            let check = check_balayage_bound(&spec, &mu).unwrap();
            assert!(
                check.carleson_value <= check.fubini_bound + 0.05,
                "seed {seed}: {} > {}",
                check.carleson_value,
                check.fubini_bound + 0.05
            );
            for &e in &check.atom_extensions {
                assert!(e.is_finite() && e > 0.0);
            }
        }
    }

    #[test]
    fn factorize_measure_reconstructs_atomwise() {
        let spec = spec_m();
        let t0 = spec.dy() * 8.0;
        let mu = single_atom(64.0 / 256.0, t0, 2.0);
        let fact = factorize_measure(&spec, &mu).unwrap();
        assert!(fact.reconstruction_error <= 1e-13 * 2.0);
        assert!((fact.carleson_factor.atoms()[0].mass - t0).abs() <= 1e-15);
        assert!((fact.carleson_norm - 0.5).abs() <= 1e-12);
        assert!(fact.boundary_norm.is_finite() && fact.boundary_norm > 0.0);
        assert!(fact.boundary_ratio.is_finite());

        for seed in 100..120u64 {
            let mu = random_measure(&spec, 10, seed).unwrap();
            let fact = factorize_measure(&spec, &mu).unwrap();
            let max_mass = mu
                .atoms()
                .iter()
                .map(|a| a.mass)
                .fold(0.0f64, f64::max);
            assert!(fact.reconstruction_error <= 1e-13 * max_mass, "seed {seed}");
            assert!(fact.boundary_norm.is_finite() && fact.boundary_norm > 0.0);
            assert!(fact.carleson_norm.is_finite() && fact.carleson_norm > 0.0);
        }
    }

    #[test]
    fn total_mass_identity_is_exact_even_with_wrap() {
        let mu = DiscreteMeasure::new(
            1,
            vec![
                Atom {
                    point: Point::new1(0.01, 0.3),
                    mass: 1.3,
                },
                Atom {
                    point: Point::new1(0.5, 0.07),
                    mass: 0.4,
                },
                Atom {
                    point: Point::new1(0.52, 0.07),
                    mass: 2.0,
                },
            ],
        )
        .unwrap();
        let integral = balayage_total_mass(&mu).unwrap();
        let expect = 2.0 * mu.total_mass();
        assert!(
            (integral - expect).abs() <= 1e-10 * expect,
            "{integral} vs {expect}"
        );
    }

    #[test]
    fn measure_embedding_constant_is_scale_invariant() {
        let spec = spec_m();
        let mut f = GridFunction::zeros(spec);
        for b in 0..spec.boundary_count() {
            for k in 8..24 {
                f.set(b, k, 1.0 + (b % 7) as f64 * 0.2);
            }
        }
        let mu = random_measure(&spec, 10, 7).unwrap();
        let emb = check_measure_embedding(&f, &mu, Exp::int(2)).unwrap();
        assert!(emb.constant.is_finite() && emb.constant > 0.0);
        let emb2 = check_measure_embedding(&f.scale(2.0), &mu, Exp::int(2)).unwrap();
        assert!((emb2.constant - emb.constant).abs() <= 1e-12 * emb.constant);
        assert!(emb.integral <= emb.constant * emb.nontangential_lp_pow * emb.carleson_norm * (1.0 + 1e-12));
    }

    #[test]
    fn measure_io_roundtrips_and_rejects_bad_lines() {
        let mu = DiscreteMeasure::new(
            1,
            vec![
                Atom {
                    point: Point::new1(0.123456789, 0.05),
                    mass: 1.25,
                },
                Atom {
                    point: Point::new1(0.9, 0.11),
                    mass: 0.7,
                },
            ],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_measure(&mu, &mut buf).unwrap();
        let back = read_measure(&mut std::io::BufReader::new(&buf[..])).unwrap();
        assert_eq!(back.n(), 1);
        assert_eq!(back.atoms(), mu.atoms());

        let bad_mass = "0.5,0.1,-1.0\n";
        let err = read_measure(&mut std::io::BufReader::new(bad_mass.as_bytes())).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let bad_fields = "0.5,0.1\n";
        assert!(read_measure(&mut std::io::BufReader::new(bad_fields.as_bytes())).is_err());
        let mixed = "0.5,0.1,1.0\n0.5,0.5,0.1,1.0\n";
        assert!(read_measure(&mut std::io::BufReader::new(mixed.as_bytes())).is_err());
        // Two-coordinate lines infer the planar measure.
        let planar = "# comment\n0.5,0.25,0.1,1.0\n";
        let mu2 = read_measure(&mut std::io::BufReader::new(planar.as_bytes())).unwrap();
        assert_eq!(mu2.n(), 2);
    }

    #[test]
    fn two_dimensional_smoke() {
        let spec = GridSpec::new(2, 16, 10, 0.07, 0.4).unwrap();
        let mu = random_measure(&spec, 6, 3).unwrap();
        let check = check_balayage_bound(&spec, &mu).unwrap();
        assert_eq!(check.fubini_bound, 1.0 / std::f64::consts::PI);
        assert!(
            check.carleson_value <= check.fubini_bound * 1.35,
            "value {} vs bound {}",
            check.carleson_value,
            check.fubini_bound
        );
        let fact = factorize_measure(&spec, &mu).unwrap();
        let max_mass = mu.atoms().iter().map(|a| a.mass).fold(0.0f64, f64::max);
        assert!(fact.reconstruction_error <= 1e-13 * max_mass);
        assert!(fact.boundary_norm.is_finite() && fact.boundary_norm > 0.0);
    }
}
