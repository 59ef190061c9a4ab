//! Geometry of the discretized upper half-space over the flat unit torus.
//!
//! The boundary is the torus [0,1)^n (n = 1 or 2) with the wrap-around
//! Euclidean metric; interior points carry a height t > 0. Three region
//! families drive every functional in the crate:
//!
//! * cones  Gamma_a(x)   = { (y,t) : |y - x| < a t }
//! * tents  T_a(B)       = { (y,t) : |y - c| + a t < radius(B) }   (closed: <=)
//! * boxes  W_{a1,a2}(y,t) = { (z,s) : |z - y| < a1 t, t/a2 < s < a2 t }
//!
//! Ties at exact equality resolve by the strict/closed flag, never by a
//! tolerance. All derived-parameter identities below hold with the strict
//! inequalities on the torus because only the triangle inequality and scalar
//! comparisons of heights enter their proofs; the randomized inclusion suite
//! re-checks them against sampled configurations.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Half the torus width; no ball radius may exceed it.
pub const TORUS_HALF_WIDTH: f64 = 0.5;

/// Wrapped distance of two boundary points; coordinates may be any reals.
pub fn torus_distance(n: usize, a: &[f64; 2], b: &[f64; 2]) -> f64 {
    debug_assert!(n == 1 || n == 2);
    let wrap = |d: f64| {
        let d = (d.abs()).rem_euclid(1.0);
        d.min(1.0 - d)
    };
    let d0 = wrap(a[0] - b[0]);
    if n == 1 {
        d0
    } else {
        let d1 = wrap(a[1] - b[1]);
        (d0 * d0 + d1 * d1).sqrt()
    }
}

/// Interior point: boundary coordinates plus height. For n = 1 the second
/// coordinate is ignored and kept at 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub y: [f64; 2],
    pub t: f64,
}

impl Point {
    pub fn new1(y: f64, t: f64) -> Point {
        Point { y: [y, 0.0], t }
    }

    pub fn new2(y0: f64, y1: f64, t: f64) -> Point {
        Point { y: [y0, y1], t }
    }
}

/// Boundary ball; radius capped at half the torus width so that membership
/// and volume are unambiguous.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Ball {
    pub fn new(center: [f64; 2], radius: f64) -> Result<Ball> {
        if !(radius > 0.0 && radius <= TORUS_HALF_WIDTH) {
            return Err(Error::InvalidBallRadius(radius));
        }
        Ok(Ball { center, radius })
    }

    /// Boundary volume: 2r for n = 1, pi r^2 for n = 2.
    pub fn volume(&self, n: usize) -> f64 {
        match n {
            1 => 2.0 * self.radius,
            _ => std::f64::consts::PI * self.radius * self.radius,
        }
    }
}

/// Whitney box shape: boundary half-width `alpha1 * t`, height band
/// `(t/alpha2, alpha2 t)`. This relaxed form only asks alpha1 > 0 and
/// alpha2 > 1; it admits inconsistent pairs, which some derived boxes are.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxParams {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl BoxParams {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<BoxParams> {
        if !(alpha1 > 0.0 && alpha2 > 1.0) {
            return Err(Error::InvalidBoxParams { alpha1, alpha2 });
        }
        Ok(BoxParams { alpha1, alpha2 })
    }
}

/// Consistent Whitney parameters: 0 < alpha1 < 1/alpha2 < 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WhitneyParams {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl WhitneyParams {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<WhitneyParams> {
        let inv = 1.0 / alpha2;
        if !(alpha1 > 0.0 && alpha1 < inv && inv < 1.0) {
            return Err(Error::InvalidWhitneyParams { alpha1, alpha2 });
        }
        Ok(WhitneyParams { alpha1, alpha2 })
    }

    pub fn as_box(&self) -> BoxParams {
        BoxParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
        }
    }
}

/// Constants derived from a consistent pair (alpha1, alpha2).
///
/// `star`/`double_star` are the shrunken consistent pairs used by the
/// iterated-average factorization; `w_star`/`w_double_star` are the box
/// shapes sandwiching the set of centers whose box contains a given point
/// (the latter pair need not be consistent, and consistency is not needed).
#[derive(Clone, Copy, Debug)]
pub struct DerivedParams {
    pub base: WhitneyParams,
    /// (1 - alpha1)/alpha2: aperture below which cones thread through boxes.
    pub alpha0: f64,
    /// alpha2 + alpha1*alpha2: aperture absorbing boxes around cone points.
    pub alpha_c: f64,
    /// alpha2 + alpha1/alpha2: tent dilation absorbing sandwich boxes.
    pub alpha_t: f64,
    /// alpha2 + alpha1: ball dilation swallowing every box ball.
    pub alpha_star_upper: f64,
    /// 1/alpha2 - alpha1: ball shrinkage contained in every box ball.
    pub alpha_star_lower: f64,
    pub star: WhitneyParams,
    pub double_star: WhitneyParams,
    pub w_star: WhitneyParams,
    pub w_double_star: BoxParams,
}

/// Computes all derived constants; the strict chain
/// 0 < a1** < a1* < a1 < 1/a2 < 1/a2* < 1/a2** < 1 is validated.
pub fn derive_params(base: &WhitneyParams) -> Result<DerivedParams> {
    let a1 = base.alpha1;
    let a2 = base.alpha2;
    let sq = a2.sqrt();
    let qr = a2.powf(0.25);
    let d = DerivedParams {
        base: *base,
        alpha0: (1.0 - a1) / a2,
        alpha_c: a2 + a1 * a2,
        alpha_t: a2 + a1 / a2,
        alpha_star_upper: a2 + a1,
        alpha_star_lower: 1.0 / a2 - a1,
        star: WhitneyParams::new(a1 / (1.0 + sq), sq)?,
        double_star: WhitneyParams::new(a1 / (2.0 * (1.0 + sq) * qr), qr)?,
        w_star: WhitneyParams::new(a1 / a2, a2)?,
        w_double_star: BoxParams::new(a1 * a2, a2)?,
    };
    if !chain_holds(&d) {
        return Err(Error::InvalidWhitneyParams {
            alpha1: a1,
            alpha2: a2,
        });
    }
    Ok(d)
}

/// The strict ordering of the derived apertures.
pub fn chain_holds(d: &DerivedParams) -> bool {
    let vals = [
        0.0,
        d.double_star.alpha1,
        d.star.alpha1,
        d.base.alpha1,
        1.0 / d.base.alpha2,
        1.0 / d.star.alpha2,
        1.0 / d.double_star.alpha2,
        1.0,
    ];
    vals.windows(2).all(|w| w[0] < w[1])
}

/// Largest boundary reach factor any suite operation multiplies a height by;
/// grids must keep `t_max * reach < 1/2`.
pub fn reach_factor(d: &DerivedParams) -> f64 {
    d.alpha_c
        .max(d.alpha_t)
        .max(d.alpha_star_upper)
        .max(d.base.alpha2)
}

/// (y,t) in Gamma_aperture(x)?
#[inline]
pub fn cone_contains(n: usize, x: &[f64; 2], aperture: f64, p: &Point) -> bool {
    torus_distance(n, x, &p.y) < aperture * p.t
}

/// (y,t) in the tent over `ball` at the given aperture? Open by default;
/// `closed` switches to non-strict, used for measure tents.
#[inline]
pub fn tent_contains(n: usize, ball: &Ball, aperture: f64, closed: bool, p: &Point) -> bool {
    let lhs = torus_distance(n, &ball.center, &p.y) + aperture * p.t;
    if closed {
        lhs <= ball.radius
    } else {
        lhs < ball.radius
    }
}

/// (z,s) in the box of shape `bp` centered at (y,t)?
#[inline]
pub fn box_contains(n: usize, center: &Point, bp: &BoxParams, p: &Point) -> bool {
    p.t > center.t / bp.alpha2
        && p.t < center.t * bp.alpha2
        && torus_distance(n, &center.y, &p.y) < bp.alpha1 * center.t
}

/// Lattice of centers whose base boxes jointly cover the primed box at
/// `center`. Requires the strict refinement chain
/// `0 < alpha1 < alpha1' < 1/alpha2' < 1/alpha2 < 1`; the count depends only
/// on the two parameter pairs, not on the center.
pub fn whitney_covering(
    n: usize,
    base: &WhitneyParams,
    primed: &WhitneyParams,
    center: &Point,
) -> Result<Vec<Point>> {
    if !(base.alpha1 < primed.alpha1 && primed.alpha2 > base.alpha2) {
        return Err(Error::InvalidBoxParams {
            alpha1: primed.alpha1,
            alpha2: primed.alpha2,
        });
    }
    let t = center.t;
    // Height ladder: base boxes span log-width 2 ln a2 around their center;
    // step by ln a2 so neighbouring boxes overlap by half.
    let span = 2.0 * primed.alpha2.ln();
    let m = (span / base.alpha2.ln()).ceil() as usize + 1;
    let step = span / m as f64;
    let log_lo = (t / primed.alpha2).ln();
    let mut points = Vec::new();
    for j in 0..m {
        let tb = (log_lo + (j as f64 + 0.5) * step).exp();
        // Boundary lattice: pitch a1*tb leaves every target point within
        // a1*tb/2 (n=1) or a1*tb/sqrt(2) (n=2) of a center.
        let pitch = base.alpha1 * tb;
        let reach = primed.alpha1 * t;
        let half = (reach / pitch).ceil() as i64;
        match n {
            1 => {
                for i in -half..=half {
                    points.push(Point {
                        y: [center.y[0] + i as f64 * pitch, 0.0],
                        t: tb,
                    });
                }
            }
            _ => {
                for i in -half..=half {
                    for l in -half..=half {
                        points.push(Point {
                            y: [center.y[0] + i as f64 * pitch, center.y[1] + l as f64 * pitch],
                            t: tb,
                        });
                    }
                }
            }
        }
    }
    Ok(points)
}

/// One of the ten sampled inclusion facts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inclusion {
    /// Points of the shrunken box around (z,s) have boxes containing (z,s).
    BoxDualityLower,
    /// Centers whose box contains (z,s) lie in the widened box around (z,s).
    BoxDualityUpper,
    /// Shrunken boxes around narrow-cone points stay in the unit cone.
    ConeLower,
    /// Boxes around unit-cone points stay in the widened cone.
    ConeUpper,
    /// Shrunken boxes around dilated-tent points stay in the unit tent.
    TentLower,
    /// Boxes around unit-tent points stay in the shrunken tent.
    TentUpper,
    /// Star boxes of star-box points stay in the base box.
    StarUnion,
    /// Star boxes of double-star points contain the double-star box.
    StarIntersection,
    /// The shrunken ball lies in the ball of every box point.
    BallIntersection,
    /// Balls of box points lie in the dilated ball.
    BallUnion,
}

pub const ALL_INCLUSIONS: [Inclusion; 10] = [
    Inclusion::BoxDualityLower,
    Inclusion::BoxDualityUpper,
    Inclusion::ConeLower,
    Inclusion::ConeUpper,
    Inclusion::TentLower,
    Inclusion::TentUpper,
    Inclusion::StarUnion,
    Inclusion::StarIntersection,
    Inclusion::BallIntersection,
    Inclusion::BallUnion,
];

impl Inclusion {
    pub fn name(self) -> &'static str {
        match self {
            Inclusion::BoxDualityLower => "box-duality-lower",
            Inclusion::BoxDualityUpper => "box-duality-upper",
            Inclusion::ConeLower => "cone-lower",
            Inclusion::ConeUpper => "cone-upper",
            Inclusion::TentLower => "tent-lower",
            Inclusion::TentUpper => "tent-upper",
            Inclusion::StarUnion => "star-union",
            Inclusion::StarIntersection => "star-intersection",
            Inclusion::BallIntersection => "ball-intersection",
            Inclusion::BallUnion => "ball-union",
        }
    }
}

/// Outcome of one randomized inclusion run.
#[derive(Clone, Debug)]
pub struct InclusionReport {
    pub inclusion: Inclusion,
    pub trials: u64,
    pub violations: u64,
    pub witness: Option<String>,
}

/// Samples a point uniformly in the ball of `radius` around `c`.
fn sample_near(rng: &mut ChaCha8Rng, n: usize, c: &[f64; 2], radius: f64) -> [f64; 2] {
    if n == 1 {
        [c[0] + rng.gen_range(-radius..radius), 0.0]
    } else {
        // polar sampling keeps the distribution uniform over the disc
        let r = radius * rng.gen::<f64>().sqrt();
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        [c[0] + r * phi.cos(), c[1] + r * phi.sin()]
    }
}

fn sample_in_box(rng: &mut ChaCha8Rng, n: usize, center: &Point, bp: &BoxParams) -> Point {
    let lo = (center.t / bp.alpha2).ln();
    let hi = (center.t * bp.alpha2).ln();
    let t = rng.gen_range(lo..hi).exp();
    Point {
        y: sample_near(rng, n, &center.y, bp.alpha1 * center.t),
        t,
    }
}

fn sample_height(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

/// Runs `trials` sampled configurations of one inclusion; any hypothesis
/// configuration whose conclusion fails is reported with a witness.
pub fn run_inclusion(
    n: usize,
    d: &DerivedParams,
    inclusion: Inclusion,
    trials: u64,
    seed: u64,
) -> InclusionReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (inclusion as u64).wrapping_mul(0x9e37_79b9));
    // keep every constructed length strictly below half the torus width
    let reach = reach_factor(d).max(1.0);
    let cap = 0.4 / (reach * d.base.alpha2);
    let base = d.base.as_box();
    let mut violations = 0u64;
    let mut witness = None;
    let fail = |p: &Point, q: &Point, viol: &mut u64, wit: &mut Option<String>| {
        *viol += 1;
        if wit.is_none() {
            *wit = Some(format!(
                "hyp=({:.6},{:.6},{:.6}) point=({:.6},{:.6},{:.6})",
                p.y[0], p.y[1], p.t, q.y[0], q.y[1], q.t
            ));
        }
    };
    for _ in 0..trials {
        let t0 = sample_height(&mut rng, cap * 1e-3, cap);
        let origin = Point {
            y: sample_near(&mut rng, n, &[0.5, 0.5], 0.45),
            t: t0,
        };
        // each arm re-verifies its hypothesis before testing the conclusion,
        // discarding the measure-zero samples that land exactly on a boundary
        match inclusion {
            Inclusion::BoxDualityLower => {
                // (y,t) in W_*(z,s)  =>  (z,s) in W(y,t)
                let zs = origin;
                let yt = sample_in_box(&mut rng, n, &zs, &d.w_star.as_box());
                if !box_contains(n, &zs, &d.w_star.as_box(), &yt) {
                    continue;
                }
                if !box_contains(n, &yt, &base, &zs) {
                    fail(&zs, &yt, &mut violations, &mut witness);
                }
            }
            Inclusion::BoxDualityUpper => {
                // (z,s) in W(y,t)  =>  (y,t) in W_**(z,s)
                let yt = origin;
                let zs = sample_in_box(&mut rng, n, &yt, &base);
                if !box_contains(n, &yt, &base, &zs) {
                    continue;
                }
                if !box_contains(n, &zs, &d.w_double_star, &yt) {
                    fail(&yt, &zs, &mut violations, &mut witness);
                }
            }
            Inclusion::ConeLower => {
                let x = sample_near(&mut rng, n, &[0.5, 0.5], 0.45);
                let zs = Point {
                    y: sample_near(&mut rng, n, &x, d.alpha0 * t0),
                    t: t0,
                };
                let yt = sample_in_box(&mut rng, n, &zs, &d.w_star.as_box());
                if !cone_contains(n, &x, d.alpha0, &zs)
                    || !box_contains(n, &zs, &d.w_star.as_box(), &yt)
                {
                    continue;
                }
                if !cone_contains(n, &x, 1.0, &yt) {
                    fail(&zs, &yt, &mut violations, &mut witness);
                }
            }
            Inclusion::ConeUpper => {
                let x = sample_near(&mut rng, n, &[0.5, 0.5], 0.45);
                let yt = Point {
                    y: sample_near(&mut rng, n, &x, t0),
                    t: t0,
                };
                let zs = sample_in_box(&mut rng, n, &yt, &base);
                if !cone_contains(n, &x, 1.0, &yt) || !box_contains(n, &yt, &base, &zs) {
                    continue;
                }
                if !cone_contains(n, &x, d.alpha_c, &zs) {
                    fail(&yt, &zs, &mut violations, &mut witness);
                }
            }
            Inclusion::TentLower => {
                // sample a ball large enough to hold the dilated tent point
                let radius = rng.gen_range((d.alpha_t * t0 * 1.0001)..TORUS_HALF_WIDTH);
                let ball = Ball {
                    center: sample_near(&mut rng, n, &[0.5, 0.5], 0.45),
                    radius,
                };
                let zs = Point {
                    y: sample_near(&mut rng, n, &ball.center, radius - d.alpha_t * t0),
                    t: t0,
                };
                let yt = sample_in_box(&mut rng, n, &zs, &d.w_star.as_box());
                if !tent_contains(n, &ball, d.alpha_t, false, &zs)
                    || !box_contains(n, &zs, &d.w_star.as_box(), &yt)
                {
                    continue;
                }
                if !tent_contains(n, &ball, 1.0, false, &yt) {
                    fail(&zs, &yt, &mut violations, &mut witness);
                }
            }
            Inclusion::TentUpper => {
                let radius = rng.gen_range((t0 * 1.0001)..TORUS_HALF_WIDTH);
                let ball = Ball {
                    center: sample_near(&mut rng, n, &[0.5, 0.5], 0.45),
                    radius,
                };
                let yt = Point {
                    y: sample_near(&mut rng, n, &ball.center, radius - t0),
                    t: t0,
                };
                let zs = sample_in_box(&mut rng, n, &yt, &base);
                if !tent_contains(n, &ball, 1.0, false, &yt)
                    || !box_contains(n, &yt, &base, &zs)
                {
                    continue;
                }
                if !tent_contains(n, &ball, d.alpha0, false, &zs) {
                    fail(&yt, &zs, &mut violations, &mut witness);
                }
            }
            Inclusion::StarUnion => {
                let yt = origin;
                let zs = sample_in_box(&mut rng, n, &yt, &d.star.as_box());
                let wu = sample_in_box(&mut rng, n, &zs, &d.star.as_box());
                if !box_contains(n, &yt, &d.star.as_box(), &zs)
                    || !box_contains(n, &zs, &d.star.as_box(), &wu)
                {
                    continue;
                }
                if !box_contains(n, &yt, &base, &wu) {
                    fail(&zs, &wu, &mut violations, &mut witness);
                }
            }
            Inclusion::StarIntersection => {
                let yt = origin;
                let zs = sample_in_box(&mut rng, n, &yt, &d.double_star.as_box());
                let wu = sample_in_box(&mut rng, n, &yt, &d.double_star.as_box());
                if !box_contains(n, &yt, &d.double_star.as_box(), &zs)
                    || !box_contains(n, &yt, &d.double_star.as_box(), &wu)
                {
                    continue;
                }
                if !box_contains(n, &zs, &d.star.as_box(), &wu) {
                    fail(&zs, &wu, &mut violations, &mut witness);
                }
            }
            Inclusion::BallIntersection => {
                let yt = origin;
                let zs = sample_in_box(&mut rng, n, &yt, &base);
                let x = sample_near(&mut rng, n, &yt.y, d.alpha_star_lower * yt.t);
                if !box_contains(n, &yt, &base, &zs)
                    || torus_distance(n, &x, &yt.y) >= d.alpha_star_lower * yt.t
                {
                    continue;
                }
                if torus_distance(n, &x, &zs.y) >= zs.t {
                    fail(&yt, &zs, &mut violations, &mut witness);
                }
            }
            Inclusion::BallUnion => {
                let yt = origin;
                let zs = sample_in_box(&mut rng, n, &yt, &base);
                let x = sample_near(&mut rng, n, &zs.y, zs.t);
                if !box_contains(n, &yt, &base, &zs) || torus_distance(n, &x, &zs.y) >= zs.t {
                    continue;
                }
                if torus_distance(n, &x, &yt.y) >= d.alpha_star_upper * yt.t {
                    fail(&yt, &zs, &mut violations, &mut witness);
                }
            }
        }
    }
    InclusionReport {
        inclusion,
        trials,
        violations,
        witness,
    }
}

/// Runs the whole inclusion suite.
pub fn run_inclusions(n: usize, d: &DerivedParams, trials: u64, seed: u64) -> Vec<InclusionReport> {
    ALL_INCLUSIONS
        .iter()
        .map(|&inc| run_inclusion(n, d, inc, trials, seed))
        .collect()
}

/// Draws random consistent parameter pairs and checks the derived chain on
/// each; returns the number of failures.
pub fn run_chain_check(trials: u64, seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc4a1_7e55);
    let mut failures = 0;
    for _ in 0..trials {
        let alpha2 = rng.gen_range(1.0f64.ln()..10.0f64.ln()).exp().max(1.0 + 1e-9);
        let alpha1 = rng.gen_range(1e-6..1.0) / alpha2;
        let Ok(base) = WhitneyParams::new(alpha1, alpha2) else {
            continue;
        };
        match derive_params(&base) {
            Ok(d) => {
                if !chain_holds(&d) {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    failures
}

/// Samples points of the primed box and checks each lies in some base box of
/// the covering; returns (covering size, violations).
pub fn check_covering(
    n: usize,
    base: &WhitneyParams,
    primed: &WhitneyParams,
    trials: u64,
    seed: u64,
) -> Result<(usize, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc07e_4a11);
    let mut violations = 0;
    let mut count = None;
    for _ in 0..trials.max(1) {
        let t = sample_height(&mut rng, 1e-3, 0.1 / primed.alpha2);
        let center = Point {
            y: sample_near(&mut rng, n, &[0.5, 0.5], 0.3),
            t,
        };
        let cover = whitney_covering(n, base, primed, &center)?;
        match count {
            None => count = Some(cover.len()),
            Some(c) => debug_assert_eq!(c, cover.len(), "covering size must be scale-free"),
        }
        let target = sample_in_box(&mut rng, n, &center, &primed.as_box());
        if !cover
            .iter()
            .any(|p| box_contains(n, p, &base.as_box(), &target))
        {
            violations += 1;
        }
    }
    Ok((count.unwrap_or(0), violations))
}
