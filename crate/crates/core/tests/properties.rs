use std::collections::HashSet;

use mahler_core::hyper::{pfq, HyperParams};
use mahler_core::lattice::kronecker_chi;
use mahler_core::lseries::NewformSpec;
use mahler_core::mahler::{f_at_k, Family};
use mahler_core::numkernel::{agreement_digits, hurwitz_zeta, upper_incomplete_gamma};
use mahler_core::qseries::{invert_s, s_level, IntSeries, Level};
use mahler_core::verify::{format_coeffs, parse_coeffs, registry, run_identity, RunOptions};
use mahler_core::PrecisionContext;
use proptest::prelude::*;
use rug::{Float, Integer, Rational};

fn rational(num: i64, den: i64) -> Rational {
    Rational::from((num, den))
}

fn pfq_value(upper: Vec<Rational>, lower: Vec<Rational>, x: Rational, digits: u32) -> Float {
    let params = HyperParams::new(upper, lower, x).unwrap();
    pfq(&params, &PrecisionContext::new(digits)).unwrap().value.into_inner()
}

const FUNDAMENTAL: [i64; 10] = [-3, -4, -7, -8, -24, 5, 8, 12, 24, 40];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pfq_is_symmetric_in_upper_parameters(
        a in proptest::collection::vec((1i64..40, 1i64..8), 3),
        b in proptest::collection::vec((1i64..40, 1i64..8), 2),
        x in -45i64..45,
        rot in 1usize..3,
    ) {
        let upper: Vec<Rational> = a.iter().map(|&(n, d)| rational(n, d)).collect();
        let lower: Vec<Rational> = b.iter().map(|&(n, d)| rational(n, d)).collect();
        let mut rotated = upper.clone();
        rotated.rotate_left(rot);
        let x = rational(x, 100);
        let v1 = pfq_value(upper, lower.clone(), x.clone(), 25);
        let v2 = pfq_value(rotated, lower, x, 25);
        prop_assert!(agreement_digits(&v1, &v2, 40) >= 25);
    }

    #[test]
    fn pfq_increases_with_positive_argument(
        a in proptest::collection::vec((1i64..20, 1i64..5), 5),
        x in 1i64..80,
    ) {
        let upper: Vec<Rational> = a.iter().map(|&(n, d)| rational(n, d)).collect();
        let lower = vec![Rational::from(2); 4];
        let lo = pfq_value(upper.clone(), lower.clone(), rational(x, 100), 20);
        let hi = pfq_value(upper, lower, rational(x + 1, 100), 20);
        prop_assert!(hi > lo);
    }

    #[test]
    fn kronecker_is_multiplicative(d in proptest::sample::select(FUNDAMENTAL.to_vec()), m in 1i64..2000, n in 1i64..2000) {
        prop_assert_eq!(kronecker_chi(d, m * n), kronecker_chi(d, m) * kronecker_chi(d, n));
    }

    #[test]
    fn kronecker_follows_euler_criterion(
        d in proptest::sample::select(FUNDAMENTAL.to_vec()),
        p in proptest::sample::select(vec![5i64, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97]),
    ) {
        prop_assume!(d % p != 0);
        let power = Integer::from(d).pow_mod(&Integer::from((p - 1) / 2), &Integer::from(p)).unwrap();
        let expected = if power == 1 { 1 } else { -1 };
        prop_assert_eq!(kronecker_chi(d, p), expected);
    }

    #[test]
    fn hurwitz_stable_under_doubling(s in 2u32..7, num in 1i64..20, den in 1i64..20) {
        prop_assume!(num <= den);
        let ctx = PrecisionContext::new(30);
        let sv = Float::with_val(ctx.working_bits(), s);
        let a = rational(num, den);
        let v1 = hurwitz_zeta(&sv, &a, &ctx).unwrap();
        let v2 = hurwitz_zeta(&sv, &a, &ctx.doubled()).unwrap();
        prop_assert!(agreement_digits(v1.value(), v2.value(), 60) >= 30);
    }

    #[test]
    fn incomplete_gamma_stable_under_doubling(s in 0u32..4, x in 1i64..4000) {
        let ctx = PrecisionContext::new(30);
        let xv = Float::with_val(ctx.working_bits(), x) / 100u32;
        let v1 = upper_incomplete_gamma(s, &xv, &ctx).unwrap();
        let v2 = upper_incomplete_gamma(s, &xv, &ctx.doubled()).unwrap();
        prop_assert!(agreement_digits(v1.value(), v2.value(), 60) >= 30);
    }

    #[test]
    fn invert_s_round_trips(level in proptest::sample::select(vec![2u32, 3, 4]), scale in 1i64..5000) {
        let level = Level::from_u32(level).unwrap();
        let ctx = PrecisionContext::new(25);
        let k = Float::with_val(ctx.working_bits(), level.boundary_value()) * Float::with_val(64, scale) / 10u32
            + level.boundary_value();
        let q = invert_s(level, &k, &ctx).unwrap();
        let back = s_level(level, &q, &ctx).unwrap();
        prop_assert!(agreement_digits(back.value(), &k, 40) >= 25);
    }

    #[test]
    fn measure_routes_agree_where_both_apply(num in 256i64..200_000, den in 1i64..4) {
        // f_at_k cross-checks the G-series against the hypergeometric route
        let k = rational(num, den);
        prop_assume!(k >= 256);
        prop_assert!(f_at_k(Family::F4, &k, &PrecisionContext::new(20)).is_ok());
    }

    #[test]
    fn series_division_inverts_multiplication(
        a in proptest::collection::vec(-50i64..50, 1..30),
        b in proptest::collection::vec(-50i64..50, 1..30),
    ) {
        let order = 29;
        let mut a = a;
        a.resize(order + 1, 0);
        let mut b = b;
        b.resize(order + 1, 0);
        b[0] = 1;
        let a = IntSeries::from_i64s(&a);
        let b = IntSeries::from_i64s(&b);
        prop_assert_eq!(a.mul(&b).div(&b).unwrap(), a);
    }

    #[test]
    fn coefficient_files_round_trip(label in proptest::sample::select(vec!["h", "f", "g", "g48", "g40"]), count in 1usize..300) {
        let spec = NewformSpec::named(label).unwrap();
        let parsed = parse_coeffs(&format_coeffs(&spec, count).unwrap()).unwrap();
        prop_assert_eq!(parsed.spec.coefficients(count).unwrap(), spec.coefficients(count).unwrap());
        prop_assert!(parsed.warnings.is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn raising_target_never_lowers_agreement(
        id in proptest::sample::select(vec!["A64", "A648", "C13-5", "R1", "L22-s3-216", "CP1-a"]),
        base in 15u32..30,
        extra in 1u32..20,
    ) {
        let opts = RunOptions::default();
        let low = run_identity(id, Some(base), &opts).unwrap();
        let high = run_identity(id, Some(base + extra), &opts).unwrap();
        prop_assert!(high.digits_agreed >= low.digits_agreed);
    }
}

#[test]
fn reports_are_byte_identical_without_timing() {
    let opts = RunOptions {
        no_timing: true,
        ..Default::default()
    };
    for id in ["A2304", "C13-1", "L26-3", "P21-ii"] {
        let a = run_identity(id, None, &opts).unwrap().to_json();
        let b = run_identity(id, None, &opts).unwrap().to_json();
        assert_eq!(a, b);
    }
}

#[test]
fn sides_use_disjoint_routes() {
    let shared_ok: HashSet<&str> = ["log", "exact"].into_iter().collect();
    let measure_side: HashSet<&str> = ["gseries", "hyper", "pfq", "levin-u", "thm31", "f-at-k", "log", "exact"]
        .into_iter()
        .collect();
    let l_side: HashSet<&str> = ["smoothed-fe", "hurwitz+fe", "hurwitz", "log", "exact"].into_iter().collect();
    let opts = RunOptions {
        no_timing: true,
        ..Default::default()
    };
    for spec in registry() {
        let r = run_identity(spec.id, Some(8), &opts).unwrap();
        let lhs: HashSet<&str> = r.lhs_method.split(',').collect();
        let rhs: HashSet<&str> = r.rhs_method.split(';').next().unwrap().split(',').collect();
        assert!(lhs.intersection(&rhs).all(|t| shared_ok.contains(t)), "{}: {lhs:?} / {rhs:?}", spec.id);
        if ["thm12", "cor13", "hyper", "qk", "conjectural"].contains(&spec.group) {
            assert!(lhs.is_subset(&measure_side), "{} lhs {lhs:?}", spec.id);
            assert!(rhs.is_subset(&l_side), "{} rhs {rhs:?}", spec.id);
        }
    }
}

