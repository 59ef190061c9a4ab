//! Randomized structural invariants: exact rational exponent algebra,
//! grid file round-trips, derived-parameter ordering, and the scaling,
//! lattice, and translation laws of the quasi-norms.

use num::rational::Ratio;
use num::One;
use proptest::prelude::*;

use tentspace::exponent::{Avg, Exp};
use tentspace::functionals::{tent_norm, NormSpec};
use tentspace::generators::support_band;
use tentspace::geometry::{derive_params, WhitneyParams};
use tentspace::grid::{read_grid, write_grid, GridFunction, GridSpec};

fn finite_exp() -> impl Strategy<Value = Exp> {
    (1i64..20, 1i64..40).prop_map(|(den, extra)| Exp::new(den + extra, den).unwrap())
}

fn any_exp() -> impl Strategy<Value = Exp> {
    prop_oneof![
        Just(Exp::int(1)),
        Just(Exp::Inf),
        finite_exp(),
    ]
}

fn small_spec() -> impl Strategy<Value = GridSpec> {
    prop_oneof![
        ((16usize..=32), (10usize..=14))
            .prop_map(|(ny, k)| GridSpec::new(1, ny, k, 0.01, 0.15).unwrap()),
        ((8usize..=12), Just(10usize))
            .prop_map(|(ny, k)| GridSpec::new(2, ny, k, 0.01, 0.15).unwrap()),
    ]
}

fn norm_spec_pool(index: usize) -> NormSpec {
    let whitney = WhitneyParams::new(0.25, 2.0).unwrap();
    let two = Exp::int(2);
    let specs = [
        (two, two, Avg::Exp(two), 0.0),
        (two, two, Avg::Exp(two), -0.5),
        (Exp::Inf, two, Avg::Exp(two), 0.0),
        (two, Exp::Inf, Avg::Exp(two), 0.0),
        (Exp::Inf, Exp::Inf, Avg::Exp(Exp::Inf), 0.0),
    ];
    let (p, q, r, beta) = specs[index % specs.len()];
    NormSpec::with_geometry(p, q, r, beta, 1.0, whitney).unwrap()
}

/// A field whose support sits inside the band that keeps every averaging
/// window of the pooled specs on the grid.
fn banded_function(spec: GridSpec, raw: &[f64]) -> GridFunction {
    let band = support_band(&spec, 2.0f64.powf(1.5)).unwrap();
    let mut i = 0usize;
    GridFunction::from_fn(spec, |_, t| {
        if t >= band.lo && t <= band.hi {
            let v = raw[i % raw.len()];
            i += 1;
            v
        } else {
            0.0
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conjugation_is_an_involution_with_exact_reciprocal_sum(p in any_exp()) {
        let dual = p.conjugate().unwrap();
        prop_assert_eq!(dual.conjugate().unwrap(), p);
        prop_assert_eq!(p.recip() + dual.recip(), Ratio::one());
    }

    #[test]
    fn holder_composition_adds_reciprocals_exactly(a in finite_exp(), b in finite_exp()) {
        // results below one are legal: quasi-norm exponents are any
        // positive rationals
        let c = a.holder(b).unwrap();
        prop_assert_eq!(c.recip(), a.recip() + b.recip());
    }

    #[test]
    fn exponent_division_scales_the_reciprocal(p in any_exp(), num in 1i64..12, extra in 0i64..12) {
        let theta = Ratio::new(num, num + extra);
        let split = p.div_by(theta).unwrap();
        prop_assert_eq!(split.recip(), p.recip() * theta);
    }

    #[test]
    fn derived_parameters_shrink_along_the_chain(
        frac in 0.05f64..0.95,
        a2 in 1.05f64..4.0,
    ) {
        // consistency requires alpha1 < 1/alpha2
        let base = WhitneyParams::new(frac / a2, a2).unwrap();
        let d = derive_params(&base).unwrap();
        prop_assert!(d.alpha0 > 0.0 && d.alpha0 < 1.0);
        prop_assert!(d.star.alpha1 < base.alpha1);
        prop_assert!(d.star.alpha2 > 1.0 && d.star.alpha2 < base.alpha2);
        prop_assert!(d.double_star.alpha1 < d.star.alpha1);
        prop_assert!(d.double_star.alpha2 > 1.0 && d.double_star.alpha2 < d.star.alpha2);
        prop_assert!(d.alpha_star_lower <= d.alpha_star_upper);
        prop_assert!(d.alpha_c > 1.0 && d.alpha_t > 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn grid_files_round_trip_bit_for_bit(
        spec in small_spec(),
        raw in prop::collection::vec(
            prop_oneof![Just(0.0f64), Just(-0.0f64), -1e6f64..1e6, 1e-12f64..1e-6],
            1..48,
        ),
    ) {
        let mut i = 0usize;
        let f = GridFunction::from_fn(spec, |_, _| {
            let v = raw[i % raw.len()];
            i += 1;
            v
        });
        let mut bytes = Vec::new();
        write_grid(&f, &mut bytes).unwrap();
        let g = read_grid(&mut bytes.as_slice()).unwrap();
        prop_assert_eq!(g.spec(), f.spec());
        for (x, y) in f.values().iter().zip(g.values()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn quasi_norms_are_homogeneous_monotone_and_translation_invariant(
        spec in small_spec(),
        raw in prop::collection::vec(prop_oneof![Just(0.0f64), 0.5f64..100.0], 4..32),
        bump in prop::collection::vec(0.0f64..50.0, 4..32),
        which in 0usize..5,
        lambda in 0.25f64..8.0,
        shift in -40i64..40,
    ) {
        let s = norm_spec_pool(which);
        let f = banded_function(spec, &raw);
        let n1 = tent_norm(&f, &s).unwrap();

        let n_scaled = tent_norm(&f.scale(lambda), &s).unwrap();
        if n1 > 0.0 {
            prop_assert!((n_scaled - lambda * n1).abs() / (lambda * n1) <= 1e-12);
        } else {
            prop_assert_eq!(n_scaled, 0.0);
        }

        let g = f.zip_map(&banded_function(spec, &bump), |a, b| a + b).unwrap();
        let n2 = tent_norm(&g, &s).unwrap();
        prop_assert!(n1 <= n2);

        let n_moved = tent_norm(&f.translate([shift, 0]), &s).unwrap();
        let scale = n1.abs().max(n_moved.abs());
        if scale > 0.0 {
            prop_assert!((n1 - n_moved).abs() / scale <= 1e-12);
        }
    }
}
