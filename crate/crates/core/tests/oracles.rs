//! Checks against values computed by independent means: MPFR's own special
//! functions, closed forms, brute-force products and direct quadrature.

use mahler_core::lattice::{epstein_sum, signed_lattice_sum, CharLabel, QuadForm, ThetaFormSpec};
use mahler_core::lseries::{dirichlet_l, newform_l3, NewformSpec};
use mahler_core::numkernel::{agreement_digits, const_pi, hurwitz_zeta, upper_incomplete_gamma};
use mahler_core::qseries::{eta_quotient_coeffs, eta_value, weber_f, weber_f1, CMPoint, EtaQuotientSpec};
use mahler_core::PrecisionContext;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};

const BITS: u32 = 256;

fn ctx(d: u32) -> PrecisionContext {
    PrecisionContext::new(d)
}

fn arctan_inverse(n: u32, terms: u32) -> Rational {
    let mut sum = Rational::new();
    for k in 0..terms {
        let t = Rational::from((1, 2 * k + 1)) / Rational::from(n).pow(2 * k + 1);
        if k % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
    }
    sum
}

#[test]
fn pi_matches_machin() {
    let machin = arctan_inverse(5, 80) * 16u32 - arctan_inverse(239, 30) * 4u32;
    let oracle = Float::with_val(BITS, &machin);
    let pi = const_pi(&ctx(60));
    assert!(agreement_digits(pi.value(), &oracle, 70) >= 60);
}

#[test]
fn exponential_integral_matches_quadrature() {
    // E₁(1) = ∫₀¹ e^{−1/t}/t dt by composite Simpson in f64
    let n = 20_000;
    let h = 1.0 / n as f64;
    let f = |t: f64| if t == 0.0 { 0.0 } else { (-1.0 / t).exp() / t };
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let quad = s * h / 3.0;
    let e1 = upper_incomplete_gamma(0, &Float::with_val(BITS, 1), &ctx(30)).unwrap();
    assert!((e1.to_f64() - quad).abs() < 1e-12, "{} vs {quad}", e1.to_f64());
}

#[test]
fn incomplete_gamma_matches_mpfr() {
    let c = ctx(40);
    for x in ["0.05", "0.7", "2.5", "11", "40"] {
        let xv = Float::with_val(BITS, Float::parse(x).unwrap());
        for s in 1..=3u32 {
            let ours = upper_incomplete_gamma(s, &xv, &c).unwrap();
            let mpfr = Float::with_val(BITS, s).gamma_inc(&xv);
            assert!(agreement_digits(ours.value(), &mpfr, 60) >= 40, "Γ({s}, {x})");
        }
        // MPFR's eint returns −E₁(−x) for negative arguments
        let e1 = upper_incomplete_gamma(0, &xv, &c).unwrap();
        let mpfr = -Float::with_val(BITS, -&xv).eint();
        assert!(agreement_digits(e1.value(), &mpfr, 60) >= 40, "E1({x})");
    }
}

#[test]
fn hurwitz_matches_closed_forms() {
    let c = ctx(40);
    let two = Float::with_val(BITS, 2);
    let pi = Float::with_val(BITS, Constant::Pi);
    let catalan = Float::with_val(BITS, Constant::Catalan);
    // ζ(2, 1/4) = π² + 8G
    let quarter = hurwitz_zeta(&two, &Rational::from((1, 4)), &c).unwrap();
    let expected = Float::with_val(BITS, &pi * &pi) + catalan * 8u32;
    assert!(agreement_digits(quarter.value(), &expected, 60) >= 40);
    // ζ(s, 1) = ζ(s)
    for s in [3u32, 5] {
        let sv = Float::with_val(BITS, s);
        let ours = hurwitz_zeta(&sv, &Rational::from(1), &c).unwrap();
        let mpfr = Float::with_val(BITS, s).zeta();
        assert!(agreement_digits(ours.value(), &mpfr, 60) >= 40);
    }
}

#[test]
fn printed_dirichlet_values() {
    let c = ctx(35);
    let pi2 = Float::with_val(BITS, Constant::Pi).square();
    let sqrt = |n: u32| Float::with_val(BITS, n).sqrt();
    let cases = [
        (1, Float::with_val(BITS, &pi2 / 6u32)),
        (8, Float::with_val(BITS, &pi2 / (sqrt(2) * 8u32))),
        (5, Float::with_val(BITS, &pi2 * 4u32) / (sqrt(5) * 25u32)),
        (24, Float::with_val(BITS, &pi2 / (sqrt(6) * 4u32))),
    ];
    for (d, expected) in cases {
        let l = dirichlet_l(CharLabel::new(d).unwrap(), 2, &c).unwrap();
        assert!(agreement_digits(l.value.value(), &expected, 60) >= 35, "L(chi_{d}, 2)");
    }
}

/// ∏ (1 − q^{dn})^{e} by repeated multiplication and geometric series.
fn brute_eta_product(factors: &[(u32, i32)], order: usize) -> Vec<i128> {
    let mut series = vec![0i128; order + 1];
    series[0] = 1;
    for &(d, e) in factors {
        let d = d as usize;
        for n in 1..=order / d {
            let step = d * n;
            for _ in 0..e.unsigned_abs() {
                if e > 0 {
                    for k in (step..=order).rev() {
                        series[k] -= series[k - step];
                    }
                } else {
                    for k in step..=order {
                        series[k] += series[k - step];
                    }
                }
            }
        }
    }
    series
}

#[test]
fn eta_quotients_match_brute_force_products() {
    const M: usize = 200;
    for spec in [
        EtaQuotientSpec::form_f(),
        EtaQuotientSpec::form_g(),
        EtaQuotientSpec::form_h(),
        EtaQuotientSpec::form_g48(),
        EtaQuotientSpec::new(vec![(1, 24)]).unwrap(),
        EtaQuotientSpec::new(vec![(1, -1), (2, 5), (4, -2)]).unwrap(),
    ] {
        let ours = eta_quotient_coeffs(&spec, M).unwrap().product;
        let brute = brute_eta_product(spec.factors(), M);
        for k in 0..=M {
            assert_eq!(ours.coeff(k).to_i128().unwrap(), brute[k], "{:?} at {k}", spec.factors());
        }
    }
}

#[test]
fn ramanujan_tau_values() {
    let delta = eta_quotient_coeffs(&EtaQuotientSpec::new(vec![(1, 24)]).unwrap(), 10)
        .unwrap()
        .product;
    let tau = [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920];
    for (k, t) in tau.iter().enumerate() {
        assert_eq!(*delta.coeff(k), *t);
    }
}

#[test]
fn weber_singular_values() {
    let c = ctx(40);
    let two_root = |num: u32, den: u32| Float::with_val(BITS, 2).pow(Float::with_val(BITS, num) / den);
    let tau = |n: u32| CMPoint::imaginary(n).unwrap();
    let close = |v: mahler_core::Real, expected: Float| agreement_digits(v.value(), &expected, 60) >= 40;

    assert!(close(weber_f(&tau(1), &c).unwrap(), two_root(1, 4)));
    assert!(close(weber_f(&tau(3), &c).unwrap(), two_root(1, 3)));
    assert!(close(weber_f1(&tau(2), &c).unwrap(), two_root(1, 4)));
    // 𝔣⁸ = 𝔣₁⁸ + 𝔣₂⁸ with 𝔣𝔣₁𝔣₂ = √2 forces 𝔣(√−2)⁸ = 2 + 2√2
    let eighth = Float::with_val(BITS, 2) + Float::with_val(BITS, 8).sqrt();
    assert!(close(weber_f(&tau(2), &c).unwrap(), eighth.pow(Float::with_val(BITS, 0.125))));
}

#[test]
fn eta_at_i_matches_gamma() {
    // η(i) = Γ(1/4) / (2π^{3/4})
    let c = ctx(40);
    let v = eta_value(&CMPoint::imaginary(1).unwrap(), &c).unwrap();
    let pi = Float::with_val(BITS, Constant::Pi);
    let expected = Float::with_val(BITS, 0.25).gamma() / (pi.pow(Float::with_val(BITS, 0.75)) * 2u32);
    assert!(agreement_digits(v.value(), &expected, 60) >= 40);
}

#[test]
fn epstein_factorizes_for_hexagonal_lattice() {
    // Σ′ (m² + mn + n²)^{−2} = 6ζ(2)L(χ₋₃, 2)
    let s = epstein_sum(&QuadForm::new(1, 1, 1).unwrap(), 2.0, 10).unwrap();
    let c = ctx(20);
    let l = dirichlet_l(CharLabel::new(-3).unwrap(), 2, &c).unwrap().value.to_f64();
    let expected = std::f64::consts::PI.powi(2) * l;
    assert!(((s.value - expected) / expected).abs() < 1e-9, "{} vs {expected}", s.value);
}

#[test]
fn lattice_sums_match_smoothed_l_values() {
    let c = ctx(20);
    for (theta, label) in [
        (ThetaFormSpec::h(), "h"),
        (ThetaFormSpec::f(), "f"),
        (ThetaFormSpec::g(), "g"),
        (ThetaFormSpec::g48(), "g48"),
    ] {
        let lattice = signed_lattice_sum(&theta, 3.0, 8).unwrap();
        let smoothed = newform_l3(&NewformSpec::named(label).unwrap(), &c).unwrap();
        let rel = (lattice.value - smoothed.value.to_f64()).abs() / smoothed.value.to_f64().abs();
        assert!(rel < 1e-8, "{label}: {} vs {}", lattice.value, smoothed.value);
    }
}
