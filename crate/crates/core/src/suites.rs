//! The seven verification suites and their deterministic orchestration.
//!
//! Each suite turns the library's checks into `CheckRecord`s; `run_suite`
//! drives the enabled suites (optionally across a small worker pool whose
//! size comes from the `TENTSPACE_THREADS` environment variable — the only
//! thing the environment may influence) and assembles the records into a
//! report whose bytes depend only on (config, seed). Check errors never
//! abort a run: they become FAIL records carrying the error as witness.

use std::time::Instant;

use num::rational::Ratio;

use crate::config::{RunConfig, Suite};
use crate::error::Result;
use crate::exponent::{Avg, Exp};
use crate::factorization::{
    carleson_embedding, check_general_multiplication, check_three_factor_multiplication,
    check_two_factor_multiplication, factorize_f1, factorize_f2, factorize_f3, factorize_general,
    power_split, FactorPair,
};
use crate::functionals::{
    coincidence_sandwich, power_identity_check, tent_norm, whitney_param_ratio, Category,
    NormSpec, SandwichKind,
};
use crate::generators::{random_field, support_band, Field, Generator};
use crate::geometry::{
    check_covering, derive_params, run_chain_check, run_inclusions, WhitneyParams,
};
use crate::grid::{GridFunction, GridSpec};
use crate::measures::{
    balayage_total_mass, check_balayage_bound, factorize_measure, random_measure, read_measure,
    write_measure, DiscreteMeasure,
};
use crate::report::{format_number, CheckRecord, VerificationReport};

// ---------------------------------------------------------------------------
// Record plumbing
// ---------------------------------------------------------------------------

enum Outcome {
    Pass(f64),
    Fail(f64, String),
}

fn finite(value: f64) -> Outcome {
    if value.is_finite() {
        Outcome::Pass(value)
    } else {
        Outcome::Fail(value, format!("value {} is not finite", format_number(value)))
    }
}

fn bounded(value: f64, limit: f64) -> Outcome {
    if value.is_finite() && value <= limit {
        Outcome::Pass(value)
    } else {
        Outcome::Fail(
            value,
            format!(
                "value {} exceeds {}",
                format_number(value),
                format_number(limit)
            ),
        )
    }
}

fn within_rel(value: f64, target: f64, tol: f64) -> Outcome {
    let rel = (value - target).abs() / target.abs();
    if rel <= tol {
        Outcome::Pass(value)
    } else {
        Outcome::Fail(
            value,
            format!(
                "value {} misses {} by a relative {}",
                format_number(value),
                format_number(target),
                format_number(rel)
            ),
        )
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

struct Checker {
    suite: &'static str,
    records: Vec<CheckRecord>,
}

impl Checker {
    fn new(suite: &'static str) -> Checker {
        Checker {
            suite,
            records: Vec::new(),
        }
    }

    fn run(
        &mut self,
        check: &str,
        anchor: &str,
        tolerance: f64,
        body: impl FnOnce() -> Result<Outcome>,
    ) {
        let start = Instant::now();
        let mut rec = match body() {
            Ok(Outcome::Pass(c)) => CheckRecord::pass(self.suite, check, anchor, c, tolerance),
            Ok(Outcome::Fail(c, w)) => {
                CheckRecord::fail(self.suite, check, anchor, c, tolerance, w)
            }
            Err(e) => CheckRecord::fail(
                self.suite,
                check,
                anchor,
                f64::NAN,
                tolerance,
                format!("error: {e}"),
            ),
        };
        rec.seconds = start.elapsed().as_secs_f64();
        self.records.push(rec);
    }
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

/// The default fixture set: one closed-form slab, one sparse tent
/// indicator, three rough lognormal-noise draws, two smooth bump mixes.
/// Every field vanishes outside a height band wide enough for a base box
/// composed with a shrunken box (height ratio alpha2^{3/2}), so strict
/// support-margin norms never clip.
fn corpus_fields(
    spec: &GridSpec,
    whitney: &WhitneyParams,
    seed: u64,
) -> Result<Vec<(&'static str, Field)>> {
    let band = support_band(spec, whitney.alpha2.powf(1.5))?;
    Ok(vec![
        ("slab", Field::slab(band.lo, band.hi)),
        (
            "tent-indicator",
            random_field(spec, Generator::TentIndicator, seed ^ 0x100, band)?,
        ),
        (
            "lognormal-a",
            random_field(spec, Generator::LognormalNoise, seed ^ 0x200, band)?,
        ),
        (
            "lognormal-b",
            random_field(spec, Generator::LognormalNoise, seed ^ 0x201, band)?,
        ),
        (
            "lognormal-c",
            random_field(spec, Generator::LognormalNoise, seed ^ 0x202, band)?,
        ),
        (
            "bumps-a",
            random_field(spec, Generator::SmoothBumpMix, seed ^ 0x300, band)?,
        ),
        (
            "bumps-b",
            random_field(spec, Generator::SmoothBumpMix, seed ^ 0x301, band)?,
        ),
    ])
}

fn pick<'a>(corpus: &'a [(&'static str, Field)], name: &str) -> &'a Field {
    &corpus
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("corpus is missing `{name}`"))
        .1
}

// ---------------------------------------------------------------------------
// Multiplier norm probe
// ---------------------------------------------------------------------------

/// Largest ratio `||v w||_{s0} / ||v||_{s1}` over a seeded probe corpus —
/// a LOWER bound on the multiplier norm of w between the two spaces. The
/// multiplication suite compares it against `||w||_{s2}` for the
/// complementary spec (the upper-bound direction).
pub fn estimate_multiplier_norm(
    w: &GridFunction,
    s1: &NormSpec,
    s0: &NormSpec,
    probes: u64,
    seed: u64,
) -> Result<f64> {
    if probes == 0 {
        return Err(crate::error::Error::Precondition(
            "multiplier probe needs at least one probe".into(),
        ));
    }
    let spec = w.spec();
    let margin = s0.whitney.alpha2.max(s1.whitney.alpha2).powf(1.5);
    let band = support_band(spec, margin)?;
    let mut best = 0.0f64;
    for i in 0..probes {
        let field = random_field(
            spec,
            Generator::LognormalNoise,
            seed.wrapping_add(i).wrapping_mul(0x9e37_79b9).wrapping_add(1),
            band,
        )?;
        let v = field.sample(*spec);
        let nv = tent_norm(&v, s1)?;
        if nv == 0.0 {
            continue;
        }
        let prod = v.zip_map(w, |a, b| a * b)?;
        best = best.max(tent_norm(&prod, s0)? / nv);
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

fn geometry_suite(cfg: &RunConfig, c: &mut Checker) -> Result<()> {
    let d = derive_params(&cfg.whitney)?;
    for rep in run_inclusions(cfg.grid.n, &d, cfg.trials, cfg.seed) {
        c.run(
            &format!("inclusion-{}", rep.inclusion.name()),
            "cone-tent-box-inclusions",
            0.0,
            || {
                Ok(if rep.violations == 0 {
                    Outcome::Pass(0.0)
                } else {
                    Outcome::Fail(
                        rep.violations as f64,
                        format!(
                            "{} violations in {} trials; first witness {}",
                            rep.violations,
                            rep.trials,
                            rep.witness.as_deref().unwrap_or("(none)")
                        ),
                    )
                })
            },
        );
    }
    c.run("parameter-chain", "whitney-parameter-chain", 0.0, || {
        let failures = run_chain_check(cfg.trials, cfg.seed);
        Ok(if failures == 0 {
            Outcome::Pass(0.0)
        } else {
            Outcome::Fail(failures as f64, format!("{failures} broken chains"))
        })
    });
    c.run("box-covering", "box-covering-absorption", 0.0, || {
        // shrunken-parameter boxes jointly cover the base box
        let (count, violations) =
            check_covering(cfg.grid.n, &d.star, &d.base, cfg.trials.min(2000), cfg.seed)?;
        Ok(if violations == 0 && count >= 1 {
            Outcome::Pass(count as f64)
        } else {
            Outcome::Fail(
                violations as f64,
                format!("{violations} uncovered samples (covering size {count})"),
            )
        })
    });
    Ok(())
}

fn functionals_suite(cfg: &RunConfig, c: &mut Checker) -> Result<()> {
    let corpus = corpus_fields(&cfg.grid, &cfg.whitney, cfg.seed)?;
    let tol = cfg.tolerance(Suite::Functionals);

    // Closed form: the indicator of a height slab (a, b) in the conical
    // p = q = r = 2, beta = 0 scale has quasi-norm sqrt(2 ln(b/a)) on the
    // line. Evaluated on the bundled fixture's grid, which is deep enough
    // to hold the slab with margin on both sides.
    c.run("slab-closed-form", "slab-quasi-norm-closed-form", tol, || {
        let spec = GridSpec::new(1, 256, 96, 0.012, 0.4)?;
        let slab = Field::slab(0.05, 0.1).sample(spec);
        let s = NormSpec::with_geometry(
            Exp::int(2),
            Exp::int(2),
            Avg::Exp(Exp::int(2)),
            0.0,
            1.0,
            cfg.whitney,
        )?;
        let measured = tent_norm(&slab, &s)?;
        let expected = (2.0 * 2.0f64.ln()).sqrt();
        Ok(within_rel(measured, expected, tol))
    });

    c.run("homogeneity", "quasi-norm-homogeneity", 1e-12, || {
        let mut worst = 0.0f64;
        for (name, field) in &corpus {
            let f = field.sample(cfg.grid);
            for s in &cfg.specs {
                let n1 = tent_norm(&f, s)?;
                let n2 = tent_norm(&f.scale(2.0), s)?;
                let d = rel_diff(n2, 2.0 * n1);
                if d > worst {
                    worst = d;
                }
                if d > 1e-12 {
                    return Ok(Outcome::Fail(
                        d,
                        format!("|| 2 {name} ||_{s} strays from 2 || {name} ||"),
                    ));
                }
            }
        }
        Ok(Outcome::Pass(worst))
    });

    c.run("lattice-monotonicity", "lattice-monotonicity", 0.0, || {
        let f = pick(&corpus, "lognormal-a").sample(cfg.grid);
        let bigger = pick(&corpus, "slab").sample(cfg.grid);
        let g = f.zip_map(&bigger, |a, b| a + b)?;
        let mut worst = 0.0f64;
        for s in &cfg.specs {
            let nf = tent_norm(&f, s)?;
            let ng = tent_norm(&g, s)?;
            if nf > ng {
                return Ok(Outcome::Fail(
                    nf / ng,
                    format!("|f| <= |g| but ||f||_{s} = {nf} > ||g||_{s} = {ng}"),
                ));
            }
            if ng > 0.0 {
                worst = worst.max(nf / ng);
            }
        }
        Ok(Outcome::Pass(worst))
    });

    c.run("power-rescaling", "power-rescaling-identity", 1e-10, || {
        let f = pick(&corpus, "lognormal-b").sample(cfg.grid);
        let mut worst = 0.0f64;
        for s in &cfg.specs {
            for theta in [Ratio::new(1, 2), Ratio::new(2, 3)] {
                let out = power_identity_check(&f, s, theta)?;
                worst = worst.max(out.rel_error);
                if out.rel_error > 1e-10 {
                    return Ok(Outcome::Fail(
                        out.rel_error,
                        format!("power identity at {s}, theta {theta}: {} vs {}", out.lhs, out.rhs),
                    ));
                }
            }
        }
        Ok(Outcome::Pass(worst))
    });

    c.run("category-dispatch", "norm-category-split", 0.0, || {
        let f = pick(&corpus, "slab").sample(cfg.grid);
        let two = Exp::int(2);
        let r2 = Avg::Exp(two);
        let cases = [
            (NormSpec::with_geometry(two, two, r2, 0.0, 1.0, cfg.whitney)?, Category::Conical),
            (
                NormSpec::with_geometry(Exp::Inf, two, r2, 0.0, 1.0, cfg.whitney)?,
                Category::Carleson,
            ),
            (
                NormSpec::with_geometry(two, Exp::Inf, r2, 0.0, 1.0, cfg.whitney)?,
                Category::NonTangential,
            ),
            (
                NormSpec::with_geometry(Exp::Inf, Exp::Inf, Avg::Exp(Exp::Inf), 0.0, 1.0, cfg.whitney)?,
                Category::Uniform,
            ),
        ];
        for (s, want) in &cases {
            if s.category() != *want {
                return Ok(Outcome::Fail(0.0, format!("{s} dispatched to {:?}", s.category())));
            }
            let n = tent_norm(&f, s)?;
            if !(n.is_finite() && n > 0.0) {
                return Ok(Outcome::Fail(n, format!("norm at {s} is {n}")));
            }
        }
        Ok(Outcome::Pass(cases.len() as f64))
    });
    Ok(())
}

fn coincidence_suite(cfg: &RunConfig, c: &mut Checker) -> Result<()> {
    let corpus = corpus_fields(&cfg.grid, &cfg.whitney, cfg.seed)?;
    let d = derive_params(&cfg.whitney)?;
    let tol = cfg.tolerance(Suite::Coincidence);
    let policy = crate::functionals::SupportPolicy::Strict;

    let kinds: [(&str, SandwichKind, Exp); 4] = [
        ("sandwich-conical-q1", SandwichKind::Conical, Exp::int(1)),
        ("sandwich-conical-q2", SandwichKind::Conical, Exp::int(2)),
        ("sandwich-carleson-q2", SandwichKind::Carleson, Exp::int(2)),
        ("sandwich-nontangential", SandwichKind::NonTangential, Exp::Inf),
    ];
    for (name, kind, q) in kinds {
        c.run(name, "aperture-averaging-sandwich", 0.0, || {
            let mut worst = 0.0f64;
            for (fname, field) in &corpus {
                let f = field.sample(cfg.grid);
                let k = coincidence_sandwich(&f, kind, q, &d, policy)?;
                if !k.lower.is_finite() || !k.upper.is_finite() {
                    return Ok(Outcome::Fail(
                        f64::INFINITY,
                        format!("{fname}: K1 = {}, K2 = {}", k.lower, k.upper),
                    ));
                }
                worst = worst.max(k.lower).max(k.upper);
            }
            Ok(Outcome::Pass(worst))
        });
    }

    c.run("sandwich-refinement", "aperture-averaging-sandwich", tol, || {
        let field = pick(&corpus, "slab");
        let coarse = field.sample(cfg.grid);
        let fine = field.sample(cfg.grid.refine());
        let a = coincidence_sandwich(&coarse, SandwichKind::Conical, Exp::int(2), &d, policy)?;
        let b = coincidence_sandwich(&fine, SandwichKind::Conical, Exp::int(2), &d, policy)?;
        let drift = rel_diff(a.lower, b.lower).max(rel_diff(a.upper, b.upper));
        Ok(bounded(drift, tol))
    });

    c.run("parameter-equivalence", "whitney-parameter-equivalence", 0.0, || {
        let s = NormSpec::with_geometry(
            Exp::int(2),
            Exp::int(2),
            Avg::Exp(Exp::int(2)),
            0.0,
            1.0,
            cfg.whitney,
        )?;
        let alts = [d.star, d.w_star];
        let mut worst = 0.0f64;
        for (fname, field) in &corpus {
            let f = field.sample(cfg.grid);
            for alt in &alts {
                let ratio = whitney_param_ratio(&f, &s, *alt)?;
                if !(ratio.is_finite() && ratio > 0.0) {
                    return Ok(Outcome::Fail(ratio, format!("{fname}: ratio {ratio}")));
                }
                worst = worst.max(ratio).max(1.0 / ratio);
            }
        }
        Ok(Outcome::Pass(worst))
    });
    Ok(())
}

fn factorization_suite(cfg: &RunConfig, c: &mut Checker) -> Result<()> {
    let corpus = corpus_fields(&cfg.grid, &cfg.whitney, cfg.seed)?;
    let tol = cfg.tolerance(Suite::Factorization);
    let two = Exp::int(2);
    let s_flat = NormSpec::with_geometry(two, two, Avg::Exp(two), 0.0, 1.0, cfg.whitney)?;
    let s_weighted = NormSpec::with_geometry(two, two, Avg::Exp(two), -0.5, 1.0, cfg.whitney)?;

    // (input name, spec) pairs for the reconstruction sweeps; F2 needs
    // inputs whose boundary conical profile never vanishes, so it sticks to
    // the full-width fields.
    let f1_inputs: [(&str, &NormSpec); 4] = [
        ("slab", &s_flat),
        ("lognormal-a", &s_flat),
        ("bumps-a", &s_flat),
        ("lognormal-a", &s_weighted),
    ];
    let f2_inputs: [(&str, &NormSpec); 3] =
        [("slab", &s_flat), ("lognormal-a", &s_flat), ("lognormal-b", &s_weighted)];

    let recon_of = |pair: &FactorPair, u: &GridFunction| pair.reconstruction_error / u.max_abs();

    c.run("f1-reconstruction", "sup-extension-split", 1e-12, || {
        let mut worst = 0.0f64;
        for (name, s) in &f1_inputs {
            let u = pick(&corpus, name).sample(cfg.grid);
            let pair = factorize_f1(&u, s)?;
            let rel = recon_of(&pair, &u);
            if rel > 1e-12 {
                return Ok(Outcome::Fail(rel, format!("{name} at {s}")));
            }
            worst = worst.max(rel);
        }
        Ok(Outcome::Pass(worst))
    });

    c.run("f1-constants", "sup-extension-split", 0.0, || {
        let mut worst = 0.0f64;
        for (name, s) in &f1_inputs {
            let u = pick(&corpus, name).sample(cfg.grid);
            let pair = factorize_f1(&u, s)?;
            for k in &pair.constants {
                if !k.value.is_finite() {
                    return Ok(Outcome::Fail(
                        k.value,
                        format!("{name} at {s}: constant {} = {}", k.name, k.value),
                    ));
                }
            }
            worst = worst.max(pair.constants.iter().map(|k| k.value).fold(0.0, f64::max));
        }
        Ok(Outcome::Pass(worst))
    });

    c.run("f1-norm-product", "sup-extension-split", 0.0, || {
        let mut worst = 0.0f64;
        for (name, s) in &f1_inputs {
            let u = pick(&corpus, name).sample(cfg.grid);
            let ratio = factorize_f1(&u, s)?.norm_product_ratio();
            if !ratio.is_finite() {
                return Ok(Outcome::Fail(ratio, format!("{name} at {s}")));
            }
            worst = worst.max(ratio);
        }
        Ok(Outcome::Pass(worst))
    });

    c.run("f2-reconstruction", "density-extension-split", 1e-12, || {
        let mut worst = 0.0f64;
        for (name, s) in &f2_inputs {
            let u = pick(&corpus, name).sample(cfg.grid);
            let pair = factorize_f2(&u, s, None)?;
            let rel = recon_of(&pair, &u);
            if rel > 1e-12 {
                return Ok(Outcome::Fail(rel, format!("{name} at {s}")));
            }
            worst = worst.max(rel);
        }
        Ok(Outcome::Pass(worst))
    });

    c.run("f2-constants", "density-extension-split", 0.0, || {
        let mut worst = 0.0f64;
        for (name, s) in &f2_inputs {
            let u = pick(&corpus, name).sample(cfg.grid);
            let pair = factorize_f2(&u, s, None)?;
            for k in &pair.constants {
                if !k.value.is_finite() {
                    return Ok(Outcome::Fail(
                        k.value,
                        format!("{name} at {s}: constant {} = {}", k.name, k.value),
                    ));
                }
                worst = worst.max(k.value);
            }
        }
        Ok(Outcome::Pass(worst))
    });

    c.run("f3-reconstruction", "three-factor-extremal-split", 1e-12, || {
        let mut worst = 0.0f64;
        for name in ["slab", "lognormal-a"] {
            let u = pick(&corpus, name).sample(cfg.grid);
            let triple = factorize_f3(&u, &s_flat)?;
            let rel = triple.reconstruction_error / u.max_abs();
            if rel > 1e-12 {
                return Ok(Outcome::Fail(rel, name.to_string()));
            }
            worst = worst.max(rel);
        }
        Ok(Outcome::Pass(worst))
    });

    c.run("f3-norm-product", "three-factor-extremal-split", 0.0, || {
        let u = pick(&corpus, "lognormal-a").sample(cfg.grid);
        let ratio = factorize_f3(&u, &s_flat)?.norm_product_ratio();
        Ok(finite(ratio))
    });

    c.run("power-split-identity", "power-split-identity", 1e-10, || {
        let u = pick(&corpus, "lognormal-a").sample(cfg.grid);
        let pair = power_split(&u, &s_weighted, Ratio::new(1, 2))?;
        Ok(bounded((pair.norm_product_ratio() - 1.0).abs(), 1e-10))
    });

    c.run("general-reconstruction", "holder-exponent-regrouping", 1e-12, || {
        let u = pick(&corpus, "lognormal-a").sample(cfg.grid);
        let four = Exp::int(4);
        let s0 = NormSpec::with_geometry(two, two, Avg::Exp(two), -1.0, 1.0, cfg.whitney)?;
        let s1 = NormSpec::with_geometry(four, four, Avg::Exp(four), -0.5, 1.0, cfg.whitney)?;
        let pair = factorize_general(&u, &s0, &s1, &s1)?;
        Ok(bounded(recon_of(&pair, &u), 1e-12))
    });

    c.run("general-norm-product", "holder-exponent-regrouping", 0.0, || {
        let u = pick(&corpus, "lognormal-b").sample(cfg.grid);
        let four = Exp::int(4);
        let s0 = NormSpec::with_geometry(two, two, Avg::Exp(two), -1.0, 1.0, cfg.whitney)?;
        let s1 = NormSpec::with_geometry(four, four, Avg::Exp(four), -0.5, 1.0, cfg.whitney)?;
        Ok(finite(factorize_general(&u, &s0, &s1, &s1)?.norm_product_ratio()))
    });

    c.run(
        "translation-invariance",
        "construction-translation-invariance",
        1e-10,
        || {
            let u = pick(&corpus, "lognormal-a").sample(cfg.grid);
            let shifted = u.translate([37, 0]);
            let a = factorize_f1(&u, &s_flat)?;
            let b = factorize_f1(&shifted, &s_flat)?;
            let mut drift = rel_diff(a.norm_product_ratio(), b.norm_product_ratio());
            for (ka, kb) in a.constants.iter().zip(&b.constants) {
                drift = drift.max(rel_diff(ka.value, kb.value));
            }
            Ok(bounded(drift, 1e-10))
        },
    );

    c.run(
        "refinement-stability",
        "construction-refinement-stability",
        tol,
        || {
            let field = pick(&corpus, "slab");
            let coarse = factorize_f1(&field.sample(cfg.grid), &s_flat)?;
            let fine = factorize_f1(&field.sample(cfg.grid.refine()), &s_flat)?;
            Ok(bounded(
                rel_diff(coarse.norm_product_ratio(), fine.norm_product_ratio()),
                tol,
            ))
        },
    );
    Ok(())
}

fn multiplication_suite(cfg: &RunConfig, c: &mut Checker) -> Result<()> {
    let corpus = corpus_fields(&cfg.grid, &cfg.whitney, cfg.seed)?;
    let tol = cfg.tolerance(Suite::Multiplication);
    let two = Exp::int(2);
    let f = pick(&corpus, "lognormal-a").sample(cfg.grid);
    let g = pick(&corpus, "slab").sample(cfg.grid);

    c.run("two-factor-flat", "two-factor-product-bound", 0.0, || {
        Ok(finite(check_two_factor_multiplication(&f, &g, two, two, 0.0)?.constant))
    });

    c.run("two-factor-weighted", "two-factor-product-bound", 0.0, || {
        Ok(finite(check_two_factor_multiplication(&f, &g, two, two, -0.5)?.constant))
    });

    c.run("carleson-embedding", "carleson-measure-embedding", 0.0, || {
        Ok(finite(carleson_embedding(&f, &g, two, two)?.constant))
    });

    let s0 = NormSpec::with_geometry(two, two, Avg::Exp(two), 0.0, 1.0, cfg.whitney)?;

    c.run("three-factor-pointwise", "box-holder-chain", 1e-12, || {
        let rep = check_three_factor_multiplication(&f, &g, &f, &s0)?;
        let pw = rep.pointwise_constant.unwrap_or(f64::NAN);
        Ok(bounded(pw, 1.0 + 1e-12))
    });

    c.run("three-factor-norms", "box-holder-chain", 0.0, || {
        Ok(finite(check_three_factor_multiplication(&f, &g, &f, &s0)?.constant))
    });

    c.run("general-product", "holder-product-bound", 0.0, || {
        let four = Exp::int(4);
        let sw = NormSpec::with_geometry(two, two, Avg::Exp(two), -0.5, 1.0, cfg.whitney)?;
        let s1 = NormSpec::with_geometry(four, four, Avg::Exp(four), -0.25, 1.0, cfg.whitney)?;
        let f2 = pick(&corpus, "bumps-a").sample(cfg.grid);
        Ok(finite(check_general_multiplication(&f, &f2, &sw, &s1, &s1)?.constant))
    });

    c.run("multiplier-lower-bound", "multiplier-norm-lower-bound", 0.0, || {
        let four = Exp::int(4);
        let s1 = NormSpec::with_geometry(four, four, Avg::Exp(four), 0.0, 1.0, cfg.whitney)?;
        let w = pick(&corpus, "bumps-a").sample(cfg.grid);
        let lower = estimate_multiplier_norm(&w, &s1, &s0, 5, cfg.seed ^ 0x77)?;
        let nw = tent_norm(&w, &s1)?;
        if nw == 0.0 {
            return Ok(Outcome::Fail(nw, "zero multiplier norm reference".into()));
        }
        Ok(finite(lower / nw))
    });

    c.run("refinement-stability", "product-refinement-stability", tol, || {
        let fine_spec = cfg.grid.refine();
        let ff = pick(&corpus, "lognormal-a").sample(fine_spec);
        let gf = pick(&corpus, "slab").sample(fine_spec);
        let coarse = check_two_factor_multiplication(&f, &g, two, two, 0.0)?.constant;
        let fine = check_two_factor_multiplication(&ff, &gf, two, two, 0.0)?.constant;
        Ok(bounded(rel_diff(coarse, fine), tol))
    });
    Ok(())
}

fn measures_suite(cfg: &RunConfig, c: &mut Checker) -> Result<()> {
    let spec = cfg.grid;
    let tol = cfg.tolerance(Suite::Measures);

    c.run("point-mass-half", "balayage-extension-carleson-bound", tol, || {
        let mut t0 = spec.dy();
        while t0 * 2.0 <= spec.t_max {
            t0 *= 2.0;
        }
        if t0 < spec.t_min || t0 > spec.t_max {
            return Ok(Outcome::Fail(
                t0,
                format!("no dyadic ball radius fits the band [{}, {}]", spec.t_min, spec.t_max),
            ));
        }
        let mu = DiscreteMeasure::new(
            spec.n,
            vec![crate::measures::Atom {
                point: crate::geometry::Point {
                    y: spec.boundary_point(0),
                    t: t0,
                },
                mass: 2.0,
            }],
        )?;
        let check = check_balayage_bound(&spec, &mu)?;
        Ok(within_rel(check.carleson_value, check.fubini_bound, tol))
    });

    let seeds: Vec<u64> = (0..25).map(|i| cfg.seed.wrapping_add(1000 + i)).collect();

    c.run("random-balayage-bound", "balayage-extension-carleson-bound", tol, || {
        let mut worst = 0.0f64;
        for &seed in &seeds {
            let mu = random_measure(&spec, 10, seed)?;
            let check = check_balayage_bound(&spec, &mu)?;
            if check.carleson_value > check.fubini_bound + tol {
                return Ok(Outcome::Fail(
                    check.carleson_value,
                    format!(
                        "seed {seed}: value {} above {}",
                        format_number(check.carleson_value),
                        format_number(check.fubini_bound + tol)
                    ),
                ));
            }
            worst = worst.max(check.carleson_value);
        }
        Ok(Outcome::Pass(worst))
    });

    if spec.n == 1 {
        c.run("total-mass-identity", "shadow-total-mass-identity", 1e-10, || {
            let mut worst = 0.0f64;
            for &seed in &seeds {
                let mu = random_measure(&spec, 10, seed)?;
                let integral = balayage_total_mass(&mu)?;
                worst = worst.max(rel_diff(integral, 2.0 * mu.total_mass()));
            }
            Ok(bounded(worst, 1e-10))
        });
    }

    c.run("measure-factorization", "measure-two-factor-split", 1e-13, || {
        let mut worst = 0.0f64;
        for &seed in &seeds[..12] {
            let mu = random_measure(&spec, 10, seed)?;
            let fact = factorize_measure(&spec, &mu)?;
            let max_mass = mu.atoms().iter().map(|a| a.mass).fold(0.0f64, f64::max);
            let rel = fact.reconstruction_error / max_mass;
            if rel > 1e-13 {
                return Ok(Outcome::Fail(rel, format!("seed {seed}: atomwise error")));
            }
            if !fact.boundary_norm.is_finite() || !fact.carleson_norm.is_finite() {
                return Ok(Outcome::Fail(
                    f64::INFINITY,
                    format!(
                        "seed {seed}: norms {} / {}",
                        format_number(fact.boundary_norm),
                        format_number(fact.carleson_norm)
                    ),
                ));
            }
            worst = worst.max(rel);
        }
        Ok(Outcome::Pass(worst))
    });

    c.run("boundary-control", "measure-two-factor-split", 0.0, || {
        let mut worst = 0.0f64;
        for &seed in &seeds[..12] {
            let mu = random_measure(&spec, 10, seed)?;
            worst = worst.max(factorize_measure(&spec, &mu)?.boundary_ratio);
        }
        Ok(finite(worst))
    });

    c.run("measure-io-roundtrip", "plumbing", 0.0, || {
        let mu = random_measure(&spec, 10, cfg.seed.wrapping_add(2000))?;
        let mut bytes = Vec::new();
        write_measure(&mu, &mut bytes)?;
        let back = read_measure(&mut std::io::BufReader::new(&bytes[..]))?;
        let mut again = Vec::new();
        write_measure(&back, &mut again)?;
        Ok(if bytes == again {
            Outcome::Pass(0.0)
        } else {
            Outcome::Fail(1.0, "re-serialization changed bytes".into())
        })
    });
    Ok(())
}

fn duality_suite(cfg: &RunConfig, c: &mut Checker) -> Result<()> {
    let corpus = corpus_fields(&cfg.grid, &cfg.whitney, cfg.seed)?;
    let tol = cfg.tolerance(Suite::Duality);
    let combos: [(i64, i64, i64); 3] = [(2, 2, 2), (4, 2, 2), (2, 4, 4)];
    let f_names = ["lognormal-a", "bumps-a", "slab"];
    let h_names = ["lognormal-b", "bumps-b", "tent-indicator"];

    let pair_specs = |p: i64, q: i64, r: i64, beta0: f64| -> Result<(NormSpec, NormSpec)> {
        let (p, q, r) = (Exp::int(p), Exp::int(q), Exp::int(r));
        let beta = beta0 / 2.0;
        let s_f = NormSpec::with_geometry(p, q, Avg::Exp(r), beta, 1.0, cfg.whitney)?;
        let s_h = NormSpec::with_geometry(
            p.conjugate()?,
            q.conjugate()?,
            Avg::Exp(r.conjugate()?),
            beta0 - beta,
            1.0,
            cfg.whitney,
        )?;
        Ok((s_f, s_h))
    };

    let measure_constant = |grid: GridSpec, s_f: &NormSpec, s_h: &NormSpec, beta0: f64| -> Result<f64> {
        let mut best = 0.0f64;
        for fname in f_names {
            let f = pick(&corpus, fname).sample(grid);
            let nf = tent_norm(&f, s_f)?;
            for hname in h_names {
                let h = pick(&corpus, hname).sample(grid);
                let nh = tent_norm(&h, s_h)?;
                let lhs = crate::functionals::pairing(&f, &h, beta0)?.abs();
                if lhs == 0.0 {
                    continue;
                }
                if nf == 0.0 || nh == 0.0 {
                    return Ok(f64::INFINITY);
                }
                best = best.max(lhs / (nf * nh));
            }
        }
        Ok(best)
    };

    for (p, q, r) in combos {
        for beta0 in [0.0f64, -1.0] {
            let name = format!("pairing-p{p}-q{q}-r{r}-beta{beta0}");
            c.run(&name, "weighted-pairing-bound", 0.0, || {
                let (s_f, s_h) = pair_specs(p, q, r, beta0)?;
                Ok(finite(measure_constant(cfg.grid, &s_f, &s_h, beta0)?))
            });
        }
    }

    c.run("pairing-refinement", "weighted-pairing-bound", tol, || {
        let (s_f, s_h) = pair_specs(2, 2, 2, 0.0)?;
        let coarse = measure_constant(cfg.grid, &s_f, &s_h, 0.0)?;
        let fine = measure_constant(cfg.grid.refine(), &s_f, &s_h, 0.0)?;
        Ok(bounded(rel_diff(coarse, fine), tol))
    });
    Ok(())
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

fn run_one(cfg: &RunConfig, suite: Suite) -> Vec<CheckRecord> {
    let mut c = Checker::new(suite.name());
    let outcome = match suite {
        Suite::Geometry => geometry_suite(cfg, &mut c),
        Suite::Functionals => functionals_suite(cfg, &mut c),
        Suite::Coincidence => coincidence_suite(cfg, &mut c),
        Suite::Factorization => factorization_suite(cfg, &mut c),
        Suite::Multiplication => multiplication_suite(cfg, &mut c),
        Suite::Measures => measures_suite(cfg, &mut c),
        Suite::Duality => duality_suite(cfg, &mut c),
    };
    if let Err(e) = outcome {
        c.records.push(CheckRecord::fail(
            suite.name(),
            "suite-setup",
            "plumbing",
            f64::NAN,
            0.0,
            format!("setup error: {e}"),
        ));
    }
    c.records
}

fn worker_threads() -> usize {
    std::env::var("TENTSPACE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or(1)
}

/// Runs every enabled suite and assembles the deterministic report. Suites
/// may execute on a worker pool; records are sorted by (suite, check), so
/// scheduling never reaches the output bytes.
pub fn run_suite(cfg: &RunConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let jobs = cfg.suites.clone();
    let threads = worker_threads().min(jobs.len().max(1));
    let mut records: Vec<CheckRecord> = Vec::new();
    if threads <= 1 {
        for &s in &jobs {
            records.extend(run_one(cfg, s));
        }
    } else {
        // round-robin buckets; assembly order is irrelevant post-sort
        let mut buckets: Vec<Vec<Suite>> = vec![Vec::new(); threads];
        for (i, &s) in jobs.iter().enumerate() {
            buckets[i % threads].push(s);
        }
        let results: Vec<Vec<CheckRecord>> = std::thread::scope(|scope| {
            let handles: Vec<_> = buckets
                .into_iter()
                .map(|bucket| {
                    scope.spawn(move || {
                        let mut out = Vec::new();
                        for s in bucket {
                            out.extend(run_one(cfg, s));
                        }
                        out
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("suite worker panicked"))
                .collect()
        });
        for r in results {
            records.extend(r);
        }
    }
    Ok(VerificationReport::new(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, RunConfig};
    use crate::generators::HeightBand;

    #[test]
    fn geometry_suite_passes_and_duplicates_bytes() {
        let cfg = parse_config("suites = geometry\ntrials = 1500\n").unwrap();
        let a = run_suite(&cfg).unwrap();
        assert!(a.all_passed(), "{}", a.human_table());
        assert!(a.records.len() >= 12);
        let b = run_suite(&cfg).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn functionals_suite_passes_on_defaults() {
        let cfg = parse_config("suites = functionals\ntrials = 100\n").unwrap();
        let rep = run_suite(&cfg).unwrap();
        assert!(rep.all_passed(), "{}", rep.human_table());
        assert_eq!(rep.records.len(), 5);
    }

    #[test]
    fn measures_suite_passes_on_defaults() {
        let cfg = parse_config("suites = measures\ntrials = 100\n").unwrap();
        let rep = run_suite(&cfg).unwrap();
        assert!(rep.all_passed(), "{}", rep.human_table());
        assert!(rep.records.iter().any(|r| r.check == "point-mass-half"));
    }

    #[test]
    fn suite_worker_pool_matches_sequential_bytes() {
        let cfg = parse_config("suites = geometry, functionals\ntrials = 400\n").unwrap();
        let seq = run_suite(&cfg).unwrap();
        std::env::set_var("TENTSPACE_THREADS", "2");
        let par = run_suite(&cfg);
        std::env::remove_var("TENTSPACE_THREADS");
        let par = par.unwrap();
        assert_eq!(seq.to_csv(), par.to_csv());
    }

    #[test]
    fn multiplier_probe_recovers_constant_multipliers() {
        let cfg = RunConfig::default_config();
        let spec = cfg.grid;
        let band = support_band(&spec, cfg.whitney.alpha2.powf(1.5)).unwrap();
        let w = Field::constant(3.0, HeightBand { lo: 0.0, hi: 1.0 }).sample(spec);
        let s = NormSpec::with_geometry(
            Exp::int(2),
            Exp::int(2),
            Avg::Exp(Exp::int(2)),
            0.0,
            1.0,
            cfg.whitney,
        )
        .unwrap();
        let est = estimate_multiplier_norm(&w, &s, &s, 3, 5).unwrap();
        assert!((est - 3.0).abs() <= 1e-12 * 3.0, "estimate {est}");
        let zero = Field::constant(0.0, band).sample(spec);
        // the zero multiplier collapses every probe ratio
        let est0 = estimate_multiplier_norm(&zero, &s, &s, 2, 5).unwrap();
        assert_eq!(est0, 0.0);
    }
}
