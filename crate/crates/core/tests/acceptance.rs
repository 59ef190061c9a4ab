//! Acceptance gate: one test per criterion, each emitting a single
//! PASS/FAIL line with the measured quantity and its stated tolerance.

use std::fmt::Display;
use std::process::Command;
use std::time::Instant;

use num::rational::Ratio;

use tentspace::exponent::{Avg, Exp};
use tentspace::factorization::{
    carleson_embedding, check_general_multiplication, check_three_factor_multiplication,
    check_two_factor_multiplication, factorize_f1, factorize_f2, factorize_f3, factorize_general,
};
use tentspace::functionals::{
    coincidence_sandwich, pairing, power_identity_check, tent_norm, Category, NormSpec,
    SandwichKind, SupportPolicy,
};
use tentspace::generators::{random_field, support_band, Field, Generator};
use tentspace::geometry::{
    derive_params, run_chain_check, run_inclusions, Point, WhitneyParams, ALL_INCLUSIONS,
};
use tentspace::grid::{GridFunction, GridSpec};
use tentspace::measures::{
    balayage_total_mass, check_balayage_bound, factorize_measure, random_measure, Atom,
    DiscreteMeasure,
};

fn conclude(name: &str, ok: bool, detail: impl Display) {
    if ok {
        println!("PASS {name}: {detail}");
    } else {
        println!("FAIL {name}: {detail}");
        panic!("{name} failed: {detail}");
    }
}

fn default_grid() -> GridSpec {
    GridSpec::new(1, 256, 64, 2f64.powi(-8), 2f64.powi(-3)).unwrap()
}

fn default_whitney() -> WhitneyParams {
    WhitneyParams::new(0.25, 2.0).unwrap()
}

fn spec(p: Exp, q: Exp, r: Avg, beta: f64) -> NormSpec {
    NormSpec::with_geometry(p, q, r, beta, 1.0, default_whitney()).unwrap()
}

fn two() -> Exp {
    Exp::int(2)
}

/// Seeded mixed-generator corpus; index i cycles through the four families.
fn corpus(grid: &GridSpec, count: usize, seed: u64) -> Vec<Field> {
    let band = support_band(grid, default_whitney().alpha2.powf(1.5)).unwrap();
    (0..count)
        .map(|i| {
            let generator = match i % 4 {
                0 => Generator::LognormalNoise,
                1 => Generator::SmoothBumpMix,
                2 => Generator::TentIndicator,
                _ => Generator::Slab,
            };
            random_field(grid, generator, seed + i as u64, band).unwrap()
        })
        .collect()
}

/// Full-width corpus (nonvanishing boundary conical profile): lognormals
/// and slabs only, as the extension-based construction requires.
fn full_width_corpus(grid: &GridSpec, count: usize, seed: u64) -> Vec<Field> {
    let band = support_band(grid, default_whitney().alpha2.powf(1.5)).unwrap();
    (0..count)
        .map(|i| {
            let generator = if i % 2 == 0 {
                Generator::LognormalNoise
            } else {
                Generator::Slab
            };
            random_field(grid, generator, seed + i as u64, band).unwrap()
        })
        .collect()
}

#[test]
fn criterion_01_geometric_inclusions_hold_on_random_samples() {
    let started = Instant::now();
    let d = derive_params(&default_whitney()).unwrap();
    let mut violations = 0u64;
    let mut ran = 0usize;
    for n in [1usize, 2] {
        for rep in run_inclusions(n, &d, 100_000, 90 + n as u64) {
            violations += rep.violations;
            ran += 1;
            assert_eq!(rep.trials, 100_000);
        }
    }
    assert_eq!(ran, 2 * ALL_INCLUSIONS.len());
    let secs = started.elapsed().as_secs_f64();
    conclude(
        "criterion-01-inclusions",
        violations == 0 && secs < 5.0,
        format!(
            "{ran} inclusion reports x 100000 trials, {violations} violations (tolerance 0), {secs:.2}s (limit 5s)"
        ),
    );
}

#[test]
fn criterion_02_derived_parameter_chain_is_exact() {
    let failures = run_chain_check(1_000, 17);
    conclude(
        "criterion-02-parameter-chain",
        failures == 0,
        format!("1000 random consistent parameter pairs, {failures} broken chains (tolerance 0)"),
    );
}

#[test]
fn criterion_03_slab_quasi_norm_matches_the_closed_form() {
    let expected = (2.0f64 * 2.0f64.ln()).sqrt();
    let s = spec(two(), two(), Avg::Exp(two()), 0.0);

    let base = GridSpec::new(1, 256, 96, 0.012, 0.4).unwrap();
    let slab = Field::slab(0.05, 0.1);
    let coarse = tent_norm(&slab.sample(base), &s).unwrap();
    let fine = tent_norm(&slab.sample(base.refine()), &s).unwrap();

    let rel_coarse = (coarse - expected).abs() / expected;
    let rel_fine = (fine - expected).abs() / expected;
    conclude(
        "criterion-03-slab-closed-form",
        rel_coarse <= 0.03 && rel_fine <= 0.015,
        format!(
            "closed form {expected:.6}: base grid {coarse:.6} (rel {rel_coarse:.4}, tol 0.03), refined {fine:.6} (rel {rel_fine:.4}, tol 0.015)"
        ),
    );
}

#[test]
fn criterion_04_quasi_norm_laws_hold_across_spec_combinations() {
    let grid = default_grid();
    let inf = Exp::Inf;
    // six combinations spanning all four categories, including the
    // negative weights -1 and -1/2
    let specs = [
        spec(two(), two(), Avg::Exp(two()), 0.0),
        spec(two(), two(), Avg::Exp(two()), -0.5),
        spec(Exp::int(4), two(), Avg::Exp(two()), -1.0),
        spec(inf, two(), Avg::Exp(two()), 0.0),
        spec(two(), inf, Avg::Exp(two()), 0.0),
        spec(inf, inf, Avg::Exp(inf), 0.0),
    ];
    let fields = corpus(&grid, 6, 400);
    let band = support_band(&grid, default_whitney().alpha2.powf(1.5)).unwrap();
    let slab = Field::slab(band.lo, band.hi).sample(grid);

    let mut max_homogeneity = 0.0f64;
    let mut monotonicity_ok = true;
    let mut max_power_err = 0.0f64;
    for field in &fields {
        let f = field.sample(grid);
        let g = f.zip_map(&slab, |a, b| a + b).unwrap();
        for s in &specs {
            let n1 = tent_norm(&f, s).unwrap();
            let n2 = tent_norm(&f.scale(2.0), s).unwrap();
            if n1 > 0.0 {
                max_homogeneity = max_homogeneity.max((n2 - 2.0 * n1).abs() / (2.0 * n1));
            }
            let ng = tent_norm(&g, s).unwrap();
            monotonicity_ok &= n1 <= ng;
        }
    }
    let power_field = fields[0].sample(grid);
    for s in &specs {
        for theta in [Ratio::new(1, 2), Ratio::new(2, 3)] {
            let out = power_identity_check(&power_field, s, theta).unwrap();
            max_power_err = max_power_err.max(out.rel_error);
        }
    }

    let categories_ok = {
        let cases = [
            (spec(two(), two(), Avg::Exp(two()), 0.0), Category::Conical),
            (spec(inf, two(), Avg::Exp(two()), 0.0), Category::Carleson),
            (
                spec(two(), inf, Avg::Exp(two()), 0.0),
                Category::NonTangential,
            ),
            (spec(inf, inf, Avg::Exp(inf), 0.0), Category::Uniform),
        ];
        cases.iter().all(|(s, want)| s.category() == *want)
    };

    conclude(
        "criterion-04-functional-laws",
        max_homogeneity <= 1e-12
            && monotonicity_ok
            && max_power_err <= 1e-10
            && categories_ok,
        format!(
            "6 specs x 6 fields: homogeneity {max_homogeneity:.2e} (tol 1e-12), monotonicity exact: {monotonicity_ok}, power identity {max_power_err:.2e} (tol 1e-10), all four categories dispatched: {categories_ok}"
        ),
    );
}

#[test]
fn criterion_05_aperture_sandwich_constants_are_finite_and_stable() {
    let grid = default_grid();
    let d = derive_params(&default_whitney()).unwrap();
    let fields = corpus(&grid, 100, 700);
    let kinds = [
        (SandwichKind::Conical, Exp::int(1)),
        (SandwichKind::Conical, two()),
        (SandwichKind::Carleson, two()),
        (SandwichKind::NonTangential, Exp::Inf),
    ];

    let mut worst = 0.0f64;
    let mut all_finite = true;
    for field in &fields {
        let f = field.sample(grid);
        for (kind, q) in kinds {
            let k = coincidence_sandwich(&f, kind, q, &d, SupportPolicy::Strict).unwrap();
            all_finite &= k.lower.is_finite() && k.upper.is_finite();
            worst = worst.max(k.lower).max(k.upper);
        }
    }

    let mut max_drift = 0.0f64;
    for field in fields.iter().take(3) {
        let a = coincidence_sandwich(
            &field.sample(grid),
            SandwichKind::Conical,
            two(),
            &d,
            SupportPolicy::Strict,
        )
        .unwrap();
        let b = coincidence_sandwich(
            &field.sample(grid.refine()),
            SandwichKind::Conical,
            two(),
            &d,
            SupportPolicy::Strict,
        )
        .unwrap();
        let drift = ((a.lower - b.lower).abs() / a.lower.abs().max(b.lower.abs()))
            .max((a.upper - b.upper).abs() / a.upper.abs().max(b.upper.abs()));
        max_drift = max_drift.max(drift);
    }

    conclude(
        "criterion-05-coincidence-sandwich",
        all_finite && max_drift <= 0.20,
        format!(
            "100 functions x 4 sandwich kinds (q in {{1, 2, inf}}): constants finite: {all_finite} (largest {worst:.4}), refinement drift {max_drift:.4} (tol 0.20)"
        ),
    );
}

#[test]
fn criterion_06_factorizations_reconstruct_on_a_50_function_corpus() {
    let started = Instant::now();
    let grid = default_grid();
    let s_flat = spec(two(), two(), Avg::Exp(two()), 0.0);
    let s_weighted = spec(two(), two(), Avg::Exp(two()), -0.5);
    let four = Exp::int(4);
    let s0_gen = spec(two(), two(), Avg::Exp(two()), -1.0);
    let s_half = spec(four, four, Avg::Exp(four), -0.5);

    let mixed = corpus(&grid, 50, 1100);
    let full = full_width_corpus(&grid, 25, 2200);

    let mut worst_recon = 0.0f64;
    let mut constants_finite = true;
    let mut check = |recon: f64, max_abs: f64, constants: &[tentspace::factorization::NamedConstant]| {
        worst_recon = worst_recon.max(recon / max_abs);
        constants_finite &= constants.iter().all(|k| k.value.is_finite());
    };

    for (i, field) in mixed.iter().enumerate() {
        let u = field.sample(grid);
        let s = if i % 2 == 0 { &s_flat } else { &s_weighted };
        let pair = factorize_f1(&u, s).unwrap();
        check(pair.reconstruction_error, u.max_abs(), &pair.constants);
    }
    for field in &full {
        let u = field.sample(grid);
        let pair = factorize_f2(&u, &s_flat, None).unwrap();
        check(pair.reconstruction_error, u.max_abs(), &pair.constants);
    }
    for field in full.iter().take(10) {
        let u = field.sample(grid);
        let triple = factorize_f3(&u, &s_flat).unwrap();
        check(triple.reconstruction_error, u.max_abs(), &triple.constants);
        let pair = factorize_general(&u, &s0_gen, &s_half, &s_half).unwrap();
        check(pair.reconstruction_error, u.max_abs(), &pair.constants);
    }

    // translation invariance of the construction's outputs
    let mut max_translation_drift = 0.0f64;
    for field in mixed.iter().take(5) {
        let u = field.sample(grid);
        let a = factorize_f1(&u, &s_flat).unwrap();
        let b = factorize_f1(&u.translate([37, 0]), &s_flat).unwrap();
        let mut drift = (a.norm_product_ratio() - b.norm_product_ratio()).abs()
            / a.norm_product_ratio().abs().max(b.norm_product_ratio().abs());
        for (ka, kb) in a.constants.iter().zip(&b.constants) {
            let scale = ka.value.abs().max(kb.value.abs());
            if scale > 0.0 {
                drift = drift.max((ka.value - kb.value).abs() / scale);
            }
        }
        max_translation_drift = max_translation_drift.max(drift);
    }

    // refinement stability of the factorization constant
    let mut max_refinement_drift = 0.0f64;
    for field in full.iter().take(2) {
        let coarse = factorize_f1(&field.sample(grid), &s_flat)
            .unwrap()
            .norm_product_ratio();
        let fine = factorize_f1(&field.sample(grid.refine()), &s_flat)
            .unwrap()
            .norm_product_ratio();
        max_refinement_drift =
            max_refinement_drift.max((coarse - fine).abs() / coarse.abs().max(fine.abs()));
    }

    let secs = started.elapsed().as_secs_f64();
    conclude(
        "criterion-06-factorizations",
        worst_recon <= 1e-12
            && constants_finite
            && max_translation_drift <= 1e-10
            && max_refinement_drift <= 0.20
            && secs < 60.0,
        format!(
            "95 constructions over 50 mixed + 25 full-width fields: reconstruction {worst_recon:.2e} (tol 1e-12), constants finite: {constants_finite}, translation drift {max_translation_drift:.2e} (tol 1e-10), refinement drift {max_refinement_drift:.4} (tol 0.20), {secs:.1}s (limit 60s)"
        ),
    );
}

#[test]
fn criterion_07_multiplication_bounds_hold_with_unit_pointwise_chain() {
    let grid = default_grid();
    let band = support_band(&grid, default_whitney().alpha2.powf(1.5)).unwrap();
    let f = random_field(&grid, Generator::LognormalNoise, 7100, band)
        .unwrap()
        .sample(grid);
    let g = Field::slab(band.lo, band.hi).sample(grid);
    let s0 = spec(two(), two(), Avg::Exp(two()), 0.0);

    let three = check_three_factor_multiplication(&f, &g, &f, &s0).unwrap();
    let pointwise = three.pointwise_constant.unwrap();

    let flat = check_two_factor_multiplication(&f, &g, two(), two(), 0.0).unwrap();
    let weighted = check_two_factor_multiplication(&f, &g, two(), two(), -0.5).unwrap();
    let embedding = carleson_embedding(&f, &g, two(), two()).unwrap();
    let four = Exp::int(4);
    let s_gen0 = spec(two(), two(), Avg::Exp(two()), -0.5);
    let s_gen1 = spec(four, four, Avg::Exp(four), -0.25);
    let general = check_general_multiplication(&f, &g, &s_gen0, &s_gen1, &s_gen1).unwrap();

    let fine = grid.refine();
    let f_fine = random_field(&grid, Generator::LognormalNoise, 7100, band)
        .unwrap()
        .sample(fine);
    let g_fine = Field::slab(band.lo, band.hi).sample(fine);
    let flat_fine = check_two_factor_multiplication(&f_fine, &g_fine, two(), two(), 0.0).unwrap();
    let general_fine =
        check_general_multiplication(&f_fine, &g_fine, &s_gen0, &s_gen1, &s_gen1).unwrap();
    let drift_two = (flat.constant - flat_fine.constant).abs()
        / flat.constant.abs().max(flat_fine.constant.abs());
    let drift_general = (general.constant - general_fine.constant).abs()
        / general.constant.abs().max(general_fine.constant.abs());

    let finite = three.constant.is_finite()
        && flat.constant.is_finite()
        && weighted.constant.is_finite()
        && embedding.constant.is_finite()
        && general.constant.is_finite();

    conclude(
        "criterion-07-multiplication",
        (pointwise - 1.0).abs() <= 1e-12 && finite && drift_two <= 0.20 && drift_general <= 0.20,
        format!(
            "pointwise chain constant {pointwise} (=1 to 1e-12); two-factor {:.4}/{:.4}, embedding {:.4}, three-factor {:.4}, general {:.4} all finite: {finite}; refinement drift two-factor {drift_two:.4}, general {drift_general:.4} (tol 0.20)",
            flat.constant, weighted.constant, embedding.constant, three.constant, general.constant
        ),
    );
}

#[test]
fn criterion_08_balayage_carleson_bound_and_total_mass() {
    let grid = default_grid();

    // point mass on a node with a dyadic ball radius: the bound is attained
    // exactly at one half
    let mut t0 = grid.dy();
    while t0 * 2.0 <= grid.t_max {
        t0 *= 2.0;
    }
    assert!(t0 >= grid.t_min);
    let mu0 = DiscreteMeasure::new(
        grid.n,
        vec![Atom {
            point: Point {
                y: grid.boundary_point(0),
                t: t0,
            },
            mass: 2.0,
        }],
    )
    .unwrap();
    let point_check = check_balayage_bound(&grid, &mu0).unwrap();
    let point_rel = (point_check.carleson_value - 0.5).abs() / 0.5;

    let mut worst = 0.0f64;
    let mut max_mass_defect = 0.0f64;
    for seed in 0..100u64 {
        let mu = random_measure(&grid, 10, 8000 + seed).unwrap();
        let check = check_balayage_bound(&grid, &mu).unwrap();
        worst = worst.max(check.carleson_value);
        let integral = balayage_total_mass(&mu).unwrap();
        max_mass_defect =
            max_mass_defect.max((integral - 2.0 * mu.total_mass()).abs() / (2.0 * mu.total_mass()));
    }

    conclude(
        "criterion-08-balayage",
        point_rel <= 0.05 && worst <= 0.55 && max_mass_defect <= 1e-10,
        format!(
            "point mass value {} (rel {point_rel:.2e} to 1/2, tol 0.05); 100 random 10-atom measures max {worst:.4} (bound 0.55); total-mass identity defect {max_mass_defect:.2e} (tol 1e-10)",
            point_check.carleson_value
        ),
    );
}

#[test]
fn criterion_09_measure_factorization_reconstructs_atomwise() {
    let grid = default_grid();
    let mut worst_rel = 0.0f64;
    let mut norms_finite = true;
    for seed in 0..100u64 {
        let mu = random_measure(&grid, 10, 9000 + seed).unwrap();
        let fact = factorize_measure(&grid, &mu).unwrap();
        let max_mass = mu.atoms().iter().map(|a| a.mass).fold(0.0f64, f64::max);
        worst_rel = worst_rel.max(fact.reconstruction_error / max_mass);
        norms_finite &= fact.boundary_norm.is_finite() && fact.carleson_norm.is_finite();
    }
    conclude(
        "criterion-09-measure-factorization",
        worst_rel <= 1e-13 && norms_finite,
        format!(
            "100 measures: atomwise reconstruction {worst_rel:.2e} (tol 1e-13), both factor norms finite: {norms_finite}"
        ),
    );
}

#[test]
fn criterion_10_weighted_pairing_is_bounded_by_dual_norms() {
    let grid = default_grid();
    let band = support_band(&grid, default_whitney().alpha2.powf(1.5)).unwrap();
    let fs: Vec<GridFunction> = [
        random_field(&grid, Generator::LognormalNoise, 501, band).unwrap(),
        random_field(&grid, Generator::SmoothBumpMix, 502, band).unwrap(),
        Field::slab(band.lo, band.hi),
    ]
    .iter()
    .map(|f| f.sample(grid))
    .collect();
    let hs: Vec<GridFunction> = [
        random_field(&grid, Generator::LognormalNoise, 601, band).unwrap(),
        random_field(&grid, Generator::SmoothBumpMix, 602, band).unwrap(),
        random_field(&grid, Generator::TentIndicator, 603, band).unwrap(),
    ]
    .iter()
    .map(|f| f.sample(grid))
    .collect();

    let mut all_finite = true;
    let mut best = 0.0f64;
    let mut nonzero_pairs = 0usize;
    for (p, q, r) in [(2i64, 2i64, 2i64), (4, 2, 2), (2, 4, 4)] {
        for beta0 in [0.0f64, -1.0] {
            let (pe, qe, re) = (Exp::int(p), Exp::int(q), Exp::int(r));
            let s_f = spec(pe, qe, Avg::Exp(re), beta0 / 2.0);
            let s_h = spec(
                pe.conjugate().unwrap(),
                qe.conjugate().unwrap(),
                Avg::Exp(re.conjugate().unwrap()),
                beta0 / 2.0,
            );
            for f in &fs {
                let nf = tent_norm(f, &s_f).unwrap();
                for h in &hs {
                    let nh = tent_norm(h, &s_h).unwrap();
                    let lhs = pairing(f, h, beta0).unwrap().abs();
                    if lhs == 0.0 {
                        continue;
                    }
                    nonzero_pairs += 1;
                    let c = lhs / (nf * nh);
                    all_finite &= c.is_finite();
                    best = best.max(c);
                }
            }
        }
    }

    conclude(
        "criterion-10-duality-pairing",
        all_finite && nonzero_pairs > 0,
        format!(
            "3 exponent triples x 2 weights x 9 function pairs: {nonzero_pairs} nonzero pairings, all pairing constants finite: {all_finite} (largest {best:.4})"
        ),
    );
}

#[test]
fn criterion_11_verify_cli_passes_deterministically() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/default.cfg");

    let run = |output: &std::path::Path| {
        Command::new(env!("CARGO_BIN_EXE_tentspace"))
            .arg("verify")
            .arg("--config")
            .arg(&config)
            .arg("--output")
            .arg(output)
            .output()
            .expect("verify run executes")
    };

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let first = run(&out_a);
    let second = run(&out_b);

    let csv_a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let csv_b = std::fs::read(dir.path().join("b.csv")).unwrap();
    let json_a = std::fs::read(dir.path().join("a.json")).unwrap();
    let json_b = std::fs::read(dir.path().join("b.json")).unwrap();
    let secs = started.elapsed().as_secs_f64();

    conclude(
        "criterion-11-verify-cli",
        first.status.success()
            && second.status.success()
            && csv_a == csv_b
            && json_a == json_b
            && secs < 120.0,
        format!(
            "exit codes {:?}/{:?}, CSV identical: {}, JSON identical: {}, {secs:.1}s (limit 120s)",
            first.status.code(),
            second.status.code(),
            csv_a == csv_b,
            json_a == json_b
        ),
    );
}
