//! Seeded analytic test fields. Each generator returns a `Field` — a pure
//! function of (y, t) — rather than a sampled array, so the same function can
//! be sampled on a refined grid or compared across translated grids without
//! interpolation artifacts.
//!
//! All fields are non-negative and vanish outside a height band chosen
//! strictly between two ladder levels. The band keeps enough levels clear at
//! both ends of the grid that Whitney boxes (and the boxes of iterated
//! averages, which widen by a sqrt-factor per round) of every support cell
//! stay on the real height ladder. Band edges sit at a 0.7 log-offset
//! between levels so no refinement lands a cell center exactly on an edge.

use crate::error::{Error, Result};
use crate::geometry::torus_distance;
use crate::grid::{GridFunction, GridSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// The generator families of the test corpus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    SmoothBumpMix,
    Slab,
    TentIndicator,
    LognormalNoise,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Generator::SmoothBumpMix => "smooth-bump-mix",
            Generator::Slab => "slab",
            Generator::TentIndicator => "tent-indicator",
            Generator::LognormalNoise => "lognormal-noise",
        };
        f.write_str(s)
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Generator> {
        match s {
            "smooth-bump-mix" => Ok(Generator::SmoothBumpMix),
            "slab" => Ok(Generator::Slab),
            "tent-indicator" => Ok(Generator::TentIndicator),
            "lognormal-noise" => Ok(Generator::LognormalNoise),
            other => Err(Error::Config(format!(
                "unknown generator {other:?}; expected one of smooth-bump-mix, slab, \
                 tent-indicator, lognormal-noise"
            ))),
        }
    }
}

/// A non-negative analytic function on the upper half-space, sampleable on
/// any grid that shares the height band it was built for.
#[derive(Clone)]
pub struct Field {
    name: String,
    eval: Arc<dyn Fn(&[f64; 2], f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Field({})", self.name)
    }
}

impl Field {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, y: &[f64; 2], t: f64) -> f64 {
        (self.eval)(y, t)
    }

    pub fn sample(&self, spec: GridSpec) -> GridFunction {
        GridFunction::from_fn(spec, |y, t| (self.eval)(y, t))
    }

    /// Indicator of the height band (a, b): the closed-form anchor fixture.
    pub fn slab(a: f64, b: f64) -> Field {
        Field {
            name: format!("slab({a},{b})"),
            eval: Arc::new(move |_, t| if t > a && t < b { 1.0 } else { 0.0 }),
        }
    }

    pub fn constant(c: f64, band: HeightBand) -> Field {
        Field {
            name: format!("const({c})"),
            eval: Arc::new(move |_, t| if band.contains(t) { c } else { 0.0 }),
        }
    }
}

/// Open height band (lo, hi) outside which a field vanishes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeightBand {
    pub lo: f64,
    pub hi: f64,
}

impl HeightBand {
    #[inline]
    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }
}

/// Height band leaving `margin_factor`-wide box room above and below: the
/// band edges sit between ladder levels so that every level in [m, K-1-m]
/// is inside and every other level is outside, where m is the level count a
/// box of height-ratio `margin_factor` can reach plus one spare level.
pub fn support_band(spec: &GridSpec, margin_factor: f64) -> Result<HeightBand> {
    let l = spec.level_halfwidth(margin_factor);
    let m = l + 1;
    let k = spec.t_levels;
    if 2 * m + 1 > k {
        return Err(Error::InvalidGridSpec(format!(
            "grid has {k} levels but the support margin needs {} per side",
            m
        )));
    }
    let h = spec.heights();
    let lo = h[m - 1].powf(0.3) * h[m].powf(0.7);
    let hi = h[k - m].powf(0.3) * h[k - 1 - m].powf(0.7);
    Ok(HeightBand { lo, hi })
}

fn mix_seed(generator: Generator, seed: u64) -> u64 {
    let tag = match generator {
        Generator::SmoothBumpMix => 0x736d_6f6f,
        Generator::Slab => 0x736c_6162,
        Generator::TentIndicator => 0x7465_6e74,
        Generator::LognormalNoise => 0x6c6f_676e,
    };
    seed ^ (tag as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Compactly supported unit bump, phi(0) = 1, support |s| < 1. The tail is
/// cut hard at exp(-40) so sampled values are either exactly zero or large
/// enough that the powers taken inside box averages never underflow.
fn bump(s: f64) -> f64 {
    let s2 = s * s;
    if s2 >= 1.0 {
        return 0.0;
    }
    let arg = 1.0 - 1.0 / (1.0 - s2);
    if arg <= -40.0 {
        0.0
    } else {
        arg.exp()
    }
}

/// Draws two log-uniform heights inside the band, both at non-aligned
/// offsets (integer ladder steps plus 0.55..0.95, which misses every dyadic
/// refinement level) and separated by more than 1.5 log steps. Errors when
/// the band is too narrow to separate them.
fn draw_separated_cuts(
    rng: &mut ChaCha8Rng,
    spec: &GridSpec,
    band: &HeightBand,
) -> Result<(f64, f64)> {
    let delta = spec.log_step();
    let lo_steps = (band.lo / spec.t_min).ln() / delta;
    let hi_steps = (band.hi / spec.t_min).ln() / delta;
    let lo_int = lo_steps.ceil() as i64;
    let hi_int = hi_steps.floor() as i64;
    // two integer steps apart guarantees a log gap of at least 1.6 steps
    if hi_int - lo_int < 3 {
        return Err(Error::InvalidGridSpec(format!(
            "height band spans only {} ladder steps; slab-style generators need 3",
            hi_int - lo_int
        )));
    }
    let j1 = rng.gen_range(lo_int..hi_int - 2);
    let j2 = rng.gen_range(j1 + 2..hi_int);
    let u1 = rng.gen_range(0.55..0.95);
    let u2 = rng.gen_range(0.55..0.95);
    let a = spec.t_min * ((j1 as f64 + u1) * delta).exp();
    let b = spec.t_min * ((j2 as f64 + u2) * delta).exp();
    Ok((a, b))
}

/// Deterministic seeded field of the requested family, supported in `band`.
///
/// Distinct (generator, seed) pairs give independent draws; the same pair
/// always rebuilds the identical field.
pub fn random_field(
    spec: &GridSpec,
    generator: Generator,
    seed: u64,
    band: HeightBand,
) -> Result<Field> {
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(generator, seed));
    let name = format!("{generator}#{seed}");
    Ok(match generator {
        Generator::SmoothBumpMix => {
            struct Bump {
                c: [f64; 2],
                w: f64,
                log_tau: f64,
                h: f64,
                amp: f64,
            }
            let count = rng.gen_range(3..=5);
            let log_lo = band.lo.ln();
            let log_hi = band.hi.ln();
            let bumps: Vec<Bump> = (0..count)
                .map(|_| {
                    let h = rng.gen_range(0.15..0.5) * (log_hi - log_lo) / 2.0;
                    let log_tau = rng.gen_range(log_lo + h..log_hi - h);
                    Bump {
                        c: [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)],
                        w: rng.gen_range(0.05..0.25),
                        log_tau,
                        h,
                        amp: rng.gen_range(0.4..2.5),
                    }
                })
                .collect();
            Field {
                name,
                eval: Arc::new(move |y, t| {
                    if !band.contains(t) {
                        return 0.0;
                    }
                    let lt = t.ln();
                    bumps
                        .iter()
                        .map(|b| {
                            b.amp
                                * bump(torus_distance(n, y, &b.c) / b.w)
                                * bump((lt - b.log_tau) / b.h)
                        })
                        .sum()
                }),
            }
        }
        Generator::Slab => {
            let (a, b) = draw_separated_cuts(&mut rng, spec, &band)?;
            Field {
                name,
                eval: Arc::new(move |_, t| if t > a && t < b { 1.0 } else { 0.0 }),
            }
        }
        Generator::TentIndicator => {
            let c = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            let radius = rng.gen_range((3.0 * band.lo).min(0.3)..0.45);
            Field {
                name,
                eval: Arc::new(move |y, t| {
                    if band.contains(t) && torus_distance(n, y, &c) + t < radius {
                        1.0
                    } else {
                        0.0
                    }
                }),
            }
        }
        Generator::LognormalNoise => {
            struct Mode {
                k: [i32; 2],
                omega: f64,
                theta: f64,
                phi: f64,
                amp: f64,
            }
            let (a, b) = draw_separated_cuts(&mut rng, spec, &band)?;
            let modes: Vec<Mode> = (0..4)
                .map(|_| Mode {
                    k: [rng.gen_range(1..=5), rng.gen_range(1..=5)],
                    omega: rng.gen_range(0.5..3.0) / (b / a).ln(),
                    theta: rng.gen_range(0.0..std::f64::consts::TAU),
                    phi: rng.gen_range(0.0..std::f64::consts::TAU),
                    amp: rng.gen_range(0.1..0.5),
                })
                .collect();
            let log_a = a.ln();
            Field {
                name,
                eval: Arc::new(move |y, t| {
                    if !(t > a && t < b) {
                        return 0.0;
                    }
                    let lt = t.ln() - log_a;
                    let mut s = 0.0;
                    for m in &modes {
                        let mut phase = std::f64::consts::TAU * m.k[0] as f64 * y[0] + m.theta;
                        if n == 2 {
                            phase += std::f64::consts::TAU * m.k[1] as f64 * y[1];
                        }
                        s += m.amp * phase.cos() * (m.omega * lt + m.phi).cos();
                    }
                    s.exp()
                }),
            }
        }
    })
}
