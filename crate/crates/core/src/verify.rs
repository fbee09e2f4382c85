//! Identity registry, coefficient-file ingestion and digit-agreement
//! certification.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyper::{pfq, pfq_unit, HyperParams};
use crate::lattice::{epstein_sum, CharLabel, QuadForm};
use crate::lseries::{
    dirichlet_l, dirichlet_lprime_minus1, eisenstein_kronecker, newform_l3, newform_lprime0,
    CoeffSource, NewformSpec,
};
use crate::mahler::{f_at_k, f_gseries_at, f_hyper, mahler_integral, qk_mahler, Family, Integrand};
use crate::numkernel::{agreement_digits, bits_to_digits, format_decimal, PrecisionContext};
use crate::qseries::{s_level, CMPoint};

/// One evaluable quantity on either side of an identity.
#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    One,
    /// log n.
    Log(u32),
    /// f_j at the nome of τ = i·√im_sq, by G-series.
    GSeriesAt { family: Family, im_sq: Rational },
    /// f_j(k) through whichever route covers k.
    FAtK { family: Family, k: Rational },
    /// f_j(k) by the hypergeometric formula only.
    FHyper { family: Family, k: Rational },
    /// m(Q_{z−4}) by Rogers' f₃ composition.
    Qk { z: Rational },
    /// The family's ₅F₄ at x.
    Hyper { family: Family, x: Rational },
    /// s_j at τ = i·√im_sq.
    SValue { family: Family, im_sq: Rational },
    L3(String),
    LPrime0(String),
    LPrimeChi(i64),
    /// L(χ_a, 2)·L(χ_b, 2).
    LChiProduct(i64, i64),
    /// Σ′ (am² + bmn + cn²)^{−2}.
    Epstein(i64, i64, i64),
    /// The Eisenstein–Kronecker sum for the family at τ = i·√im_sq.
    EisensteinKronecker { family: Family, im_sq: Rational },
    Integral { integrand: Integrand, samples: u64, seed: u64 },
}

impl Quantity {
    fn method(&self) -> &'static str {
        match self {
            Quantity::One => "exact",
            Quantity::Log(_) => "log",
            Quantity::GSeriesAt { .. } => "gseries",
            Quantity::FAtK { .. } => "f-at-k",
            Quantity::FHyper { .. } => "hyper",
            Quantity::Qk { .. } => "thm31",
            Quantity::Hyper { x, .. } if *x == 1 || *x == -1 => "levin-u",
            Quantity::Hyper { .. } => "pfq",
            Quantity::SValue { .. } => "eta-product",
            Quantity::L3(_) | Quantity::LPrime0(_) => "smoothed-fe",
            Quantity::LPrimeChi(_) => "hurwitz+fe",
            Quantity::LChiProduct(..) => "hurwitz",
            Quantity::Epstein(..) => "epstein-shell",
            Quantity::EisensteinKronecker { .. } => "eisenstein-kronecker",
            Quantity::Integral { .. } => "qmc",
        }
    }

    fn form(&self) -> Option<&str> {
        match self {
            Quantity::L3(l) | Quantity::LPrime0(l) => Some(l),
            _ => None,
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::One => write!(f, "1"),
            Quantity::Log(n) => write!(f, "log({n})"),
            Quantity::GSeriesAt { family, im_sq } => write!(f, "{family}(s(q(i*sqrt({im_sq}))))"),
            Quantity::FAtK { family, k } | Quantity::FHyper { family, k } => write!(f, "{family}({k})"),
            Quantity::Qk { z } => write!(f, "m(Q_{})", Rational::from(z - 4)),
            Quantity::Hyper { family, x } => {
                let [a1, a2, a3] = family.hyper_upper();
                write!(f, "5F4({a1},{a2},{a3},1,1;2,2,2,2;{x})")
            }
            Quantity::SValue { family, im_sq } => {
                write!(f, "s{}(q(i*sqrt({im_sq})))", family.index())
            }
            Quantity::L3(l) => write!(f, "L({l},3)"),
            Quantity::LPrime0(l) => write!(f, "L'({l},0)"),
            Quantity::LPrimeChi(d) => write!(f, "L'(chi_{d},-1)"),
            Quantity::LChiProduct(a, b) => write!(f, "L(chi_{a},2)L(chi_{b},2)"),
            Quantity::Epstein(a, b, c) => write!(f, "S({a},{b},{c};2)"),
            Quantity::EisensteinKronecker { family, im_sq } => {
                write!(f, "EK_{}(i*sqrt({im_sq}))", family.dilation())
            }
            Quantity::Integral { integrand, .. } => write!(f, "integral[{integrand:?}]"),
        }
    }
}

/// r·√n·π^e.
#[derive(Clone, Debug, PartialEq)]
pub struct Coefficient {
    pub rational: Rational,
    pub sqrt: u32,
    pub pi_power: i32,
}

impl Coefficient {
    pub fn rational(r: Rational) -> Self {
        Coefficient {
            rational: r,
            sqrt: 1,
            pi_power: 0,
        }
    }

    fn to_float(&self, bits: u32) -> Float {
        let mut v = Float::with_val(bits, &self.rational);
        if self.sqrt != 1 {
            v *= Float::with_val(bits, self.sqrt).sqrt();
        }
        if self.pi_power != 0 {
            v *= Float::with_val(bits, Constant::Pi).pow(self.pi_power);
        }
        v
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rational)?;
        if self.sqrt != 1 {
            write!(f, "*sqrt({})", self.sqrt)?;
        }
        if self.pi_power != 0 {
            write!(f, "*pi^{}", self.pi_power)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: Coefficient,
    pub quantity: Quantity,
}

/// A linear combination of quantities.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Side(pub Vec<Term>);

impl Side {
    fn methods(&self) -> String {
        let mut seen = Vec::new();
        for t in &self.0 {
            let m = t.quantity.method();
            if !seen.contains(&m) {
                seen.push(m);
            }
        }
        seen.join(",")
    }

    fn forms(&self) -> impl Iterator<Item = &str> {
        self.0.iter().filter_map(|t| t.quantity.form())
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if t.coeff == Coefficient::rational(Rational::from(1)) {
                write!(f, "{}", t.quantity)?;
            } else {
                write!(f, "{}*{}", t.coeff, t.quantity)?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum IdentityStatus {
    Proved,
    Conjectural,
}

/// An identity with both sides as evaluation recipes.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentitySpec {
    pub id: &'static str,
    pub group: &'static str,
    pub status: IdentityStatus,
    pub lhs: Side,
    pub rhs: Side,
    /// Target used when the caller does not ask for one.
    pub default_digits: u32,
    /// Largest target the LHS route supports, if limited.
    pub digit_cap: Option<u32>,
    pub anchor: &'static str,
}

impl IdentitySpec {
    pub fn effective_target(&self, requested: Option<u32>) -> u32 {
        let t = requested.unwrap_or(self.default_digits);
        match self.digit_cap {
            Some(cap) => t.min(cap),
            None => t,
        }
    }

    pub fn forms(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.lhs.forms().chain(self.rhs.forms()).collect();
        out.dedup();
        out
    }
}

fn r(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn term(c: Rational, q: Quantity) -> Term {
    Term {
        coeff: Coefficient::rational(c),
        quantity: q,
    }
}

fn term_pi(c: Rational, sqrt: u32, pi_power: i32, q: Quantity) -> Term {
    Term {
        coeff: Coefficient {
            rational: c,
            sqrt,
            pi_power,
        },
        quantity: q,
    }
}

fn lp(label: &str) -> Quantity {
    Quantity::LPrime0(label.to_string())
}

fn lchi(d: i64) -> Quantity {
    Quantity::LPrimeChi(d)
}

fn gs(family: Family, im_sq: Rational) -> Side {
    Side(vec![term(r(1, 1), Quantity::GSeriesAt { family, im_sq })])
}

fn hyper(family: Family, x: Rational) -> Quantity {
    Quantity::Hyper { family, x }
}

fn build_registry() -> Vec<IdentitySpec> {
    use Family::{F2, F3, F4};
    use IdentityStatus::{Conjectural, Proved};
    let mut out = Vec::new();
    let mut push = |id, group, status, lhs, rhs, default_digits, digit_cap, anchor| {
        out.push(IdentitySpec {
            id,
            group,
            status,
            lhs,
            rhs,
            default_digits,
            digit_cap,
            anchor,
        })
    };

    // Mahler measures at CM points against newform and Dirichlet L-values
    let thm = |lhs, rhs: Vec<Term>| (lhs, Side(rhs));
    let rows: Vec<(&str, Side, Vec<Term>, &str)> = vec![
        ("A64", gs(F2, r(1, 4)), vec![term(r(8, 1), lp("h"))], "f2(64) = 8L'(h,0)"),
        (
            "A256",
            gs(F2, r(3, 4)),
            vec![term(r(4, 3), lp("g48")), term(r(8, 3), lchi(-4))],
            "f2(256) = (4/3)(L'(g48,0)+2L'(chi_-4,-1))",
        ),
        (
            "A216",
            gs(F3, r(2, 3)),
            vec![term(r(15, 4), lp("g24_1")), term(r(15, 4), lchi(-3))],
            "f3(216) = (15/4)(L'(g24_1,0)+L'(chi_-3,-1))",
        ),
        (
            "A1458",
            gs(F3, r(4, 3)),
            vec![term(r(135, 8), lp("g")), term(r(15, 4), lchi(-4))],
            "f3(1458) = (15/8)(9L'(g,0)+2L'(chi_-4,-1))",
        ),
        (
            "A648",
            gs(F4, r(1, 1)),
            vec![term(r(10, 1), lp("h")), term(r(5, 2), lchi(-4))],
            "f4(648) = (5/2)(4L'(h,0)+L'(chi_-4,-1))",
        ),
        (
            "A2304",
            gs(F4, r(3, 2)),
            vec![term(r(20, 3), lp("g24_2")), term(r(20, 3), lchi(-3))],
            "f4(2304) = (20/3)(L'(g24_2,0)+L'(chi_-3,-1))",
        ),
        (
            "A20736",
            gs(F4, r(5, 2)),
            vec![term(r(4, 1), lp("g40")), term(r(8, 5), lchi(-8))],
            "f4(20736) = (4/5)(5L'(g40,0)+2L'(chi_-8,-1))",
        ),
        (
            "A614656",
            gs(F4, r(9, 2)),
            vec![term(r(200, 3), lp("f")), term(r(40, 3), lchi(-3))],
            "f4(614656) = (40/3)(5L'(f,0)+L'(chi_-3,-1))",
        ),
    ];
    for (id, lhs, rhs, anchor) in rows {
        let (lhs, rhs) = thm(lhs, rhs);
        push(id, "thm12", Proved, lhs, rhs, 30, None, anchor);
    }

    // hypergeometric values
    let h = |family, x| Side(vec![term(r(1, 1), hyper(family, x))]);
    let log = |c: Rational, n: u32| term(c, Quantity::Log(n));
    let cor: Vec<(&str, Side, Vec<Term>, Option<u32>, &str)> = vec![
        (
            "C13-1",
            h(F2, r(1, 1)),
            vec![log(r(48, 1), 2), term(r(-64, 1), lp("h"))],
            Some(8),
            "5F4(3/2,3/2,3/2,1,1;2,2,2,2;1) = 48log2 - 64L'(h,0)",
        ),
        (
            "C13-2",
            h(F2, r(1, 4)),
            vec![log(r(256, 1), 2), term(r(-128, 3), lp("g48")), term(r(-256, 3), lchi(-4))],
            None,
            "5F4(3/2,3/2,3/2,1,1;2,2,2,2;1/4) = 256log2 - (128/3)(L'(g48,0)+2L'(chi_-4,-1))",
        ),
        (
            "C13-3",
            h(F3, r(1, 2)),
            vec![log(r(54, 1), 6), term(r(-135, 2), lp("g24_1")), term(r(-135, 2), lchi(-3))],
            None,
            "5F4(4/3,3/2,5/3,1,1;2,2,2,2;1/2) = 54log6 - (135/2)(L'(g24_1,0)+L'(chi_-3,-1))",
        ),
        (
            "C13-4",
            h(F3, r(2, 27)),
            vec![
                log(r(243, 2), 2),
                log(r(729, 1), 3),
                term(r(-32805, 16), lp("g")),
                term(r(-3645, 8), lchi(-4)),
            ],
            None,
            "5F4(4/3,3/2,5/3,1,1;2,2,2,2;2/27) = (243/2)log2 + 729log3 - (3645/16)(9L'(g,0)+2L'(chi_-4,-1))",
        ),
        (
            "C13-5",
            h(F4, r(32, 81)),
            vec![
                log(r(81, 1), 2),
                log(r(108, 1), 3),
                term(r(-270, 1), lp("h")),
                term(r(-135, 2), lchi(-4)),
            ],
            None,
            "5F4(5/4,3/2,7/4,1,1;2,2,2,2;32/81) = 81log2 + 108log3 - (135/2)(4L'(h,0)+L'(chi_-4,-1))",
        ),
        (
            "C13-6",
            h(F4, r(1, 9)),
            vec![
                log(r(768, 1), 2),
                log(r(192, 1), 3),
                term(r(-640, 1), lp("g24_2")),
                term(r(-640, 1), lchi(-3)),
            ],
            None,
            "5F4(5/4,3/2,7/4,1,1;2,2,2,2;1/9) = 768log2 + 192log3 - 640(L'(g24_2,0)+L'(chi_-3,-1))",
        ),
        (
            "C13-7",
            h(F4, r(1, 81)),
            vec![
                log(r(6912, 1), 2),
                log(r(3456, 1), 3),
                term(r(-3456, 1), lp("g40")),
                term(r(-6912, 5), lchi(-8)),
            ],
            None,
            "5F4(5/4,3/2,7/4,1,1;2,2,2,2;1/81) = 6912log2 + 3456log3 - (3456/5)(5L'(g40,0)+2L'(chi_-8,-1))",
        ),
        (
            "C13-8",
            h(F4, r(1, 2401)),
            vec![
                log(r(614656, 3), 2),
                log(r(307328, 3), 7),
                term(r(-15366400, 9), lp("f")),
                term(r(-3073280, 9), lchi(-3)),
            ],
            None,
            "5F4(5/4,3/2,7/4,1,1;2,2,2,2;1/2401) = (614656/3)log2 + (307328/3)log7 - (3073280/9)(5L'(f,0)+L'(chi_-3,-1))",
        ),
    ];
    for (id, lhs, rhs, cap, anchor) in cor {
        push(id, "cor13", Proved, lhs, Side(rhs), 25, cap, anchor);
    }

    push(
        "T1-hyperI",
        "hyper",
        Proved,
        h(F4, r(1, 1)),
        Side(vec![
            log(r(256, 3), 2),
            term_pi(r(-5120, 3), 2, -3, Quantity::L3("f".into())),
        ]),
        8,
        Some(8),
        "5F4(5/4,3/2,7/4,1,1;2,2,2,2;1) = (256/3)log2 - (5120sqrt2/3pi^3)L(f,3)",
    );
    push(
        "T1-hyperII",
        "hyper",
        Proved,
        h(F3, r(1, 1)),
        Side(vec![
            log(r(18, 1), 2),
            log(r(27, 1), 3),
            term_pi(r(-810, 1), 3, -3, Quantity::L3("g".into())),
        ]),
        8,
        Some(8),
        "5F4(4/3,3/2,5/3,1,1;2,2,2,2;1) = 18log2 + 27log3 - (810sqrt3/pi^3)L(g,3)",
    );

    push(
        "TR-1",
        "transform",
        Proved,
        h(F4, r(1, 1)),
        Side(vec![
            term(r(3, 12005), hyper(F4, r(1, 2401))),
            log(r(512, 15), 2),
            log(r(-128, 5), 7),
            term(r(256, 3), lchi(-3)),
        ]),
        8,
        Some(8),
        "5F4(5/4,..;1) = (3/12005)5F4(5/4,..;1/2401) + (512/15)log2 - (128/5)log7 + (256/3)L'(chi_-3,-1)",
    );
    push(
        "TR-2",
        "transform",
        Proved,
        h(F3, r(1, 1)),
        Side(vec![
            term(r(16, 243), hyper(F3, r(2, 27))),
            log(r(10, 1), 2),
            log(r(-21, 1), 3),
            term(r(30, 1), lchi(-4)),
        ]),
        8,
        Some(8),
        "5F4(4/3,..;1) = (16/243)5F4(4/3,..;2/27) + 10log2 - 21log3 + 30L'(chi_-4,-1)",
    );
    push(
        "TR-3",
        "transform",
        Proved,
        h(F2, r(1, 1)),
        Side(vec![
            term(r(32, 135), hyper(F4, r(32, 81))),
            log(r(144, 5), 2),
            log(r(-128, 5), 3),
            term(r(16, 1), lchi(-4)),
        ]),
        8,
        Some(8),
        "5F4(3/2,..;1) = (32/135)5F4(5/4,..;32/81) + (144/5)log2 - (128/5)log3 + 16L'(chi_-4,-1)",
    );

    // Bertin's family
    let qk = |c: Rational, z: i64| term(c, Quantity::Qk { z: Rational::from(z) });
    push(
        "B31",
        "qk",
        Proved,
        Side(vec![qk(r(2, 1), -32)]),
        Side(vec![term(r(16, 1), lp("g")), term(r(4, 1), lchi(-4))]),
        25,
        None,
        "2m(Q_-36) = 4m(Q_-6) + m(Q_0), with m(Q_-6) = (7L'(g,0)+2L'(chi_-4,-1))/2 and m(Q_0) = 2L'(g,0)",
    );
    push(
        "B32",
        "qk",
        Proved,
        Side(vec![qk(r(1, 4), 16)]),
        Side(vec![term_pi(r(12, 1), 3, -3, Quantity::L3("g".into()))]),
        25,
        None,
        "m(Q_0) = (12sqrt3/pi^3)L(g,3), with m(Q_0) = m(Q_12)/4",
    );
    push(
        "B33",
        "qk",
        Proved,
        Side(vec![qk(r(1, 1), 16)]),
        Side(vec![term(r(8, 1), lp("g"))]),
        25,
        None,
        "m(Q_12) = 4m(Q_0) = 8L'(g,0)",
    );
    push(
        "R1",
        "qk",
        Proved,
        gs(F3, r(1, 3)),
        Side(vec![term(r(15, 1), lp("g"))]),
        25,
        None,
        "f3(108) = 15L'(g,0)",
    );
    push(
        "CP1-a",
        "qk",
        Proved,
        Side(vec![qk(r(1, 1), -32)]),
        Side(vec![term(r(8, 1), lp("g")), term(r(2, 1), lchi(-4))]),
        25,
        None,
        "m(Q_-36) = 2(4L'(g,0)+L'(chi_-4,-1))",
    );
    push(
        "CP1-b",
        "qk",
        Proved,
        Side(vec![
            qk(r(1, 2), -32),
            qk(r(-1, 16), 16),
        ]),
        Side(vec![term(r(7, 2), lp("g")), term(r(1, 1), lchi(-4))]),
        25,
        None,
        "m(Q_-6) = (7L'(g,0)+2L'(chi_-4,-1))/2, via m(Q_-6) = (2m(Q_-36) - m(Q_0))/4 and m(Q_0) = m(Q_12)/4",
    );

    push(
        "SMYTH",
        "smyth",
        Proved,
        Side(vec![term(
            r(1, 1),
            Quantity::Integral {
                integrand: Integrand::Smyth,
                samples: 10_000_000,
                seed: 1,
            },
        )]),
        Side(vec![term(r(1, 1), lchi(-3))]),
        3,
        Some(3),
        "m(x+y+1) = (3sqrt3/4pi)L(chi_-3,2) = L'(chi_-3,-1)",
    );

    // numerically observed, needs user-supplied newform coefficients
    let conj = |family, k: i64| Side(vec![term(r(1, 1), Quantity::FHyper { family, k: Rational::from(k) })]);
    let conjectures: Vec<(&str, Side, Vec<Term>, &str)> = vec![
        (
            "S4-f2m64",
            conj(F2, -64),
            vec![term(r(2, 1), lp("g32")), term(r(2, 1), lchi(-4))],
            "f2(-64) ?= 2(L'(g32,0)+L'(chi_-4,-1))",
        ),
        (
            "S4-f2m512",
            conj(F2, -512),
            vec![term(r(1, 1), lp("g64")), term(r(1, 1), lchi(-8))],
            "f2(-512) ?= L'(g64,0)+L'(chi_-8,-1)",
        ),
        (
            "S4-f4m1024",
            conj(F4, -1024),
            vec![term(r(8, 1), lp("g20")), term(r(16, 5), lchi(-4))],
            "f4(-1024) ?= (8/5)(5L'(g20,0)+2L'(chi_-4,-1))",
        ),
        (
            "S4-f4m12288",
            conj(F4, -12288),
            vec![term(r(40, 9), lp("g36")), term(r(80, 9), lchi(-3))],
            "f4(-12288) ?= (40/9)(L'(g36,0)+2L'(chi_-3,-1))",
        ),
        (
            "S4-f4m82944",
            conj(F4, -82944),
            vec![term(r(40, 13), lp("g52")), term(r(80, 13), lchi(-4))],
            "f4(-82944) ?= (40/13)(L'(g52,0)+2L'(chi_-4,-1))",
        ),
    ];
    for (id, lhs, rhs, anchor) in conjectures {
        push(id, "conjectural", Conjectural, lhs, Side(rhs), 20, None, anchor);
    }

    // singular values of the modular parameters
    let svals: [(&str, Family, Rational, i64); 10] = [
        ("L22-s2-64", F2, r(1, 4), 64),
        ("L22-s2-256", F2, r(3, 4), 256),
        ("L22-s3-108", F3, r(1, 3), 108),
        ("L22-s3-216", F3, r(2, 3), 216),
        ("L22-s3-1458", F3, r(4, 3), 1458),
        ("L22-s4-256", F4, r(1, 2), 256),
        ("L22-s4-648", F4, r(1, 1), 648),
        ("L22-s4-2304", F4, r(3, 2), 2304),
        ("L22-s4-20736", F4, r(5, 2), 20736),
        ("L22-s4-614656", F4, r(9, 2), 614656),
    ];
    for (id, family, im_sq, k) in svals {
        push(
            id,
            "lemma22",
            Proved,
            Side(vec![term(r(1, 1), Quantity::SValue { family, im_sq })]),
            Side(vec![term(Rational::from(k), Quantity::One)]),
            30,
            None,
            "singular value of s_j",
        );
    }

    // direct Eisenstein–Kronecker sums against the G-series
    for (id, family, im_sq, anchor) in [
        ("P21-i", F2, r(1, 4), "f2(s2(q)) as an Eisenstein-Kronecker sum at tau = i/2"),
        ("P21-ii", F3, r(1, 3), "f3(s3(q)) as an Eisenstein-Kronecker sum at tau = i/sqrt3"),
        ("P21-iii", F4, r(1, 2), "f4(s4(q)) as an Eisenstein-Kronecker sum at tau = i/sqrt2"),
    ] {
        push(
            id,
            "prop21",
            Proved,
            Side(vec![term(r(1, 1), Quantity::EisensteinKronecker { family, im_sq: im_sq.clone() })]),
            gs(family, im_sq),
            4,
            Some(4),
            anchor,
        );
    }

    // L-value products against Epstein sum differences at t = 2
    let ep = |c: i64, a: i64, b: i64, cc: i64| term(Rational::from(c), Quantity::Epstein(a, b, cc));
    let lattice: Vec<(&str, Term, [Term; 2], &str)> = vec![
        (
            "L26-1",
            term(r(3, 4), Quantity::LChiProduct(1, -4)),
            [ep(1, 1, 0, 4), ep(-1, 2, 0, 2)],
            "2(1-3/2^t+2/2^2t)zeta(t)L(chi_-4,t) = S(1,0,4;t) - S(2,0,2;t)",
        ),
        (
            "L26-2",
            term(r(2, 1), Quantity::LChiProduct(8, -3)),
            [ep(1, 1, 0, 6), ep(-1, 2, 0, 3)],
            "2L(chi_8,t)L(chi_-3,t) = S(1,0,6;t) - S(2,0,3;t)",
        ),
        (
            "L26-3",
            term(r(2, 1), Quantity::LChiProduct(5, -8)),
            [ep(1, 1, 0, 10), ep(-1, 2, 0, 5)],
            "2L(chi_5,t)L(chi_-8,t) = S(1,0,10;t) - S(2,0,5;t)",
        ),
        (
            "L26-4",
            term(r(2, 1), Quantity::LChiProduct(12, -4)),
            [ep(1, 1, 0, 12), ep(-1, 3, 0, 4)],
            "2L(chi_12,t)L(chi_-4,t) = S(1,0,12;t) - S(3,0,4;t)",
        ),
        (
            "L26-5",
            term(r(2, 1), Quantity::LChiProduct(24, -3)),
            [ep(1, 1, 0, 18), ep(-1, 2, 0, 9)],
            "2L(chi_24,t)L(chi_-3,t) = S(1,0,18;t) - S(2,0,9;t)",
        ),
    ];
    for (id, lhs, [a, b], anchor) in lattice {
        push(id, "lemma26", Proved, Side(vec![lhs]), Side(vec![a, b]), 8, Some(8), anchor);
    }

    out
}

/// Every identity the tool knows, in registry order.
pub fn registry() -> &'static [IdentitySpec] {
    static REGISTRY: OnceLock<Vec<IdentitySpec>> = OnceLock::new();
    REGISTRY.get_or_init(build_registry)
}

pub fn find_identity(id: &str) -> Result<&'static IdentitySpec> {
    registry()
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::UnknownIdentity(id.to_string()))
}

/// Names accepted by [`Filter::Group`].
pub fn groups() -> Vec<&'static str> {
    let mut seen = Vec::new();
    for s in registry() {
        if !seen.contains(&s.group) {
            seen.push(s.group);
        }
    }
    seen
}

/// Which identities a run covers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Filter {
    All,
    Id(String),
    Group(String),
}

impl Filter {
    pub fn matches(&self, spec: &IdentitySpec) -> bool {
        match self {
            Filter::All => true,
            Filter::Id(id) => spec.id == id,
            Filter::Group(g) => spec.group == g || (g == "proved" && spec.status == IdentityStatus::Proved),
        }
    }
}

/// Settings shared by every identity in a run.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Newforms beyond the built-in seven, keyed by label.
    pub forms: BTreeMap<String, NewformSpec>,
    /// Report runtime_ms as 0 so reports are byte-identical across runs.
    pub no_timing: bool,
}

impl RunOptions {
    pub fn with_form(mut self, spec: NewformSpec) -> Self {
        self.forms.insert(spec.label().to_string(), spec);
        self
    }

    fn resolve(&self, label: &str) -> Result<NewformSpec> {
        if let Some(spec) = self.forms.get(label) {
            return Ok(spec.clone());
        }
        NewformSpec::named(label).map_err(|_| Error::MissingCoefficients(label.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ReportStatus {
    #[serde(rename = "verified")]
    Verified,
    #[serde(rename = "failed")]
    Failed,
    #[serde(rename = "conditional-skipped")]
    ConditionalSkipped,
}

impl fmt::Display for ReportStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportStatus::Verified => "verified",
            ReportStatus::Failed => "failed",
            ReportStatus::ConditionalSkipped => "conditional-skipped",
        })
    }
}

/// Outcome of one identity, serialized with a fixed field order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub id: String,
    pub status: ReportStatus,
    pub digits_agreed: u32,
    pub target_digits: u32,
    pub lhs: Option<String>,
    pub rhs: Option<String>,
    pub lhs_method: String,
    pub rhs_method: String,
    pub runtime_ms: u64,
    pub working_bits: u32,
    pub paper_anchor: String,
    #[serde(skip)]
    pub note: Option<String>,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Evaluates one quantity; low-precision routes come back as exact f64s.
fn evaluate(q: &Quantity, ctx: &PrecisionContext, opts: &RunOptions) -> Result<Float> {
    let bits = ctx.working_bits();
    let v = match q {
        Quantity::One => Float::with_val(bits, 1),
        Quantity::Log(n) => Float::with_val(bits, *n).ln(),
        Quantity::GSeriesAt { family, im_sq } => {
            let tau = CMPoint::imaginary(im_sq.clone())?;
            f_gseries_at(*family, &tau, ctx)?.value.into_inner()
        }
        Quantity::FAtK { family, k } => f_at_k(*family, k, ctx)?.value.into_inner(),
        Quantity::FHyper { family, k } => f_hyper(*family, k, ctx)?.value.into_inner(),
        Quantity::Qk { z } => qk_mahler(z, ctx)?.value.into_inner(),
        Quantity::Hyper { family, x } => {
            let params = HyperParams::five_f_four(family.hyper_upper(), x.clone());
            if *x == 1 || *x == -1 {
                pfq_unit(&params, ctx)?.value.into_inner()
            } else {
                pfq(&params, ctx)?.value.into_inner()
            }
        }
        Quantity::SValue { family, im_sq } => {
            let tau = CMPoint::imaginary(im_sq.clone())?;
            let q = tau.nome(&ctx.widened(16))?;
            s_level(family.level(), &q, ctx)?.into_inner()
        }
        Quantity::L3(label) => newform_l3(&opts.resolve(label)?, ctx)?.value.into_inner(),
        Quantity::LPrime0(label) => newform_lprime0(&opts.resolve(label)?, ctx)?.value.into_inner(),
        Quantity::LPrimeChi(d) => dirichlet_lprime_minus1(CharLabel::new(*d)?, ctx)?.value.into_inner(),
        Quantity::LChiProduct(a, b) => {
            let la = dirichlet_l(CharLabel::new(*a)?, 2, ctx)?.value.into_inner();
            let lb = dirichlet_l(CharLabel::new(*b)?, 2, ctx)?.value.into_inner();
            la * lb
        }
        Quantity::Epstein(a, b, c) => {
            let form = QuadForm::new(*a, *b, *c)?;
            Float::with_val(bits, epstein_sum(&form, 2.0, ctx.target_digits() + 2)?.value)
        }
        Quantity::EisensteinKronecker { family, im_sq } => {
            let tau = CMPoint::imaginary(im_sq.clone())?;
            Float::with_val(bits, eisenstein_kronecker(&tau, family.dilation(), ctx.target_digits() + 1)?.value)
        }
        Quantity::Integral {
            integrand,
            samples,
            seed,
        } => Float::with_val(bits, mahler_integral(*integrand, *samples, *seed)?.value),
    };
    Ok(Float::with_val(bits, v))
}

fn evaluate_side(side: &Side, ctx: &PrecisionContext, opts: &RunOptions) -> Result<Float> {
    let wide = ctx.widened(16);
    let bits = wide.working_bits();
    let mut sum = Float::new(bits);
    for t in &side.0 {
        let v = evaluate(&t.quantity, &wide, opts)
            .map_err(|e| e.context(format!("evaluating {}", t.quantity)))?;
        sum += t.coeff.to_float(bits) * v;
    }
    Ok(Float::with_val(ctx.working_bits(), sum))
}

/// Both sides of `spec` at an explicit precision, without certification.
pub fn evaluate_identity(spec: &IdentitySpec, ctx: &PrecisionContext, opts: &RunOptions) -> Result<(Float, Float)> {
    let id = spec.id;
    let lhs = evaluate_side(&spec.lhs, ctx, opts).map_err(|e| e.context(format!("{id} lhs")))?;
    let rhs = evaluate_side(&spec.rhs, ctx, opts).map_err(|e| e.context(format!("{id} rhs")))?;
    Ok((lhs, rhs))
}

/// Evaluates both sides of `id` and certifies their agreement.
pub fn run_identity(id: &str, target_digits: Option<u32>, opts: &RunOptions) -> Result<VerificationReport> {
    let spec = find_identity(id)?;
    let target = spec.effective_target(target_digits);
    let ctx = PrecisionContext::new(target);
    let start = Instant::now();
    let mut report = VerificationReport {
        id: spec.id.to_string(),
        status: ReportStatus::ConditionalSkipped,
        digits_agreed: 0,
        target_digits: target,
        lhs: None,
        rhs: None,
        lhs_method: spec.lhs.methods(),
        rhs_method: spec.rhs.methods(),
        runtime_ms: 0,
        working_bits: ctx.working_bits(),
        paper_anchor: spec.anchor.to_string(),
        note: None,
    };
    for label in spec.forms() {
        match opts.resolve(label) {
            Err(Error::MissingCoefficients(l)) => {
                report.note = Some(format!("no coefficients for {l}; supply a coefficient file"));
                return Ok(report);
            }
            // user-supplied character and sign are recorded, not inferred
            Ok(form) if matches!(form.source(), CoeffSource::Ingested(_)) => {
                report.rhs_method.push_str(&format!(
                    ";{}(N={},D={},eps={})",
                    form.label(),
                    form.level(),
                    form.character().d(),
                    form.epsilon()
                ));
            }
            _ => {}
        }
    }
    let (lhs, rhs) = evaluate_identity(spec, &ctx, opts)?;
    let digits = agreement_digits(&lhs, &rhs, bits_to_digits(ctx.working_bits()));
    let shown = bits_to_digits(ctx.working_bits()) as usize;
    report.lhs = Some(format_decimal(&lhs, shown));
    report.rhs = Some(format_decimal(&rhs, shown));
    report.digits_agreed = digits;
    report.status = if digits >= target {
        ReportStatus::Verified
    } else {
        ReportStatus::Failed
    };
    if !opts.no_timing {
        report.runtime_ms = start.elapsed().as_millis() as u64;
    }
    Ok(report)
}

/// A whole-registry run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub reports: Vec<VerificationReport>,
    pub exit_code: i32,
}

/// Runs every identity matching `filter`; exit code 0 iff none failed.
pub fn run_all(target_digits: Option<u32>, filter: &Filter, opts: &RunOptions) -> Result<RunSummary> {
    let selected: Vec<&IdentitySpec> = registry().iter().filter(|s| filter.matches(s)).collect();
    if selected.is_empty() {
        return Err(match filter {
            Filter::Id(id) => Error::UnknownIdentity(id.clone()),
            Filter::Group(g) => Error::UnknownIdentity(format!("group {g}")),
            Filter::All => Error::UnknownIdentity("(empty registry)".into()),
        });
    }
    let mut reports: Vec<VerificationReport> = selected
        .par_iter()
        .map(|spec| match run_identity(spec.id, target_digits, opts) {
            Ok(r) => r,
            Err(e) => {
                log::error!("{}: {e}", spec.id);
                VerificationReport {
                    id: spec.id.to_string(),
                    status: ReportStatus::Failed,
                    digits_agreed: 0,
                    target_digits: spec.effective_target(target_digits),
                    lhs: None,
                    rhs: None,
                    lhs_method: spec.lhs.methods(),
                    rhs_method: spec.rhs.methods(),
                    runtime_ms: 0,
                    working_bits: PrecisionContext::new(spec.effective_target(target_digits)).working_bits(),
                    paper_anchor: spec.anchor.to_string(),
                    note: Some(e.to_string()),
                }
            }
        })
        .collect();
    reports.sort_by(|a, b| a.id.cmp(&b.id));
    for r in &reports {
        if r.status == ReportStatus::ConditionalSkipped {
            log::warn!("{} skipped: {}", r.id, r.note.as_deref().unwrap_or(""));
        }
    }
    let failed = reports.iter().any(|r| r.status == ReportStatus::Failed);
    Ok(RunSummary {
        reports,
        exit_code: i32::from(failed),
    })
}

/// A parsed coefficient file.
#[derive(Clone, Debug)]
pub struct IngestedForm {
    pub spec: NewformSpec,
    pub source_note: Option<String>,
    /// Non-fatal findings, such as multiplicativity failures.
    pub warnings: Vec<String>,
}

/// Largest index used by the multiplicativity screen.
const HECKE_SCREEN: usize = 100;

/// Parses a coefficient file: a `# label N 3 D epsilon [note]` header and
/// `k a_k` rows with k = 1, 2, 3, ….
pub fn parse_coeffs(text: &str) -> Result<IngestedForm> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let hline = hline + 1;
    let header = header
        .trim()
        .strip_prefix('#')
        .ok_or(Error::Parse {
            line: hline,
            msg: "header must start with '#'".into(),
        })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 {
        return Err(Error::Parse {
            line: hline,
            msg: "header needs: label N 3 D epsilon".into(),
        });
    }
    let parse_int = |s: &str, what: &str| -> Result<i64> {
        s.parse::<i64>().map_err(|_| Error::Parse {
            line: hline,
            msg: format!("{what} `{s}` is not an integer"),
        })
    };
    let label = fields[0].to_string();
    let level = parse_int(fields[1], "level")?;
    let weight = parse_int(fields[2], "weight")?;
    let d = parse_int(fields[3], "character")?;
    let epsilon = parse_int(fields[4], "epsilon")?;
    if level <= 0 || level > u32::MAX as i64 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("level {level} out of range"),
        });
    }
    if weight != 3 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("weight must be 3, got {weight}"),
        });
    }
    if epsilon != 1 && epsilon != -1 {
        return Err(Error::Parse {
            line: hline,
            msg: format!("epsilon must be 1 or -1, got {epsilon}"),
        });
    }
    let character = CharLabel::new(d).map_err(|_| Error::Parse {
        line: hline,
        msg: "character label must be nonzero".into(),
    })?;
    let source_note = (fields.len() > 5).then(|| fields[5..].join(" "));

    let mut coeffs = vec![Integer::new()];
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.trim();
        if line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(k), Some(a), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                line: lineno,
                msg: "expected `k a_k`".into(),
            });
        };
        let k: usize = k.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("index `{k}` is not a positive integer"),
        })?;
        let a: Integer = a.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("coefficient `{a}` is not an integer"),
        })?;
        if k != coeffs.len() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected index {}, found {k}", coeffs.len()),
            });
        }
        coeffs.push(a);
    }
    if coeffs.len() < 2 {
        return Err(Error::InvalidCoefficients("no coefficient rows".into()));
    }
    if coeffs[1] != 1 {
        return Err(Error::InvalidCoefficients(format!("a(1) = {}, expected 1", coeffs[1])));
    }

    let mut warnings = Vec::new();
    let m = coeffs.len() - 1;
    'screen: for k in 2..=HECKE_SCREEN.min(m) {
        for l in (k + 1)..=HECKE_SCREEN.min(m) {
            if k * l > m || Integer::from(k).gcd(&Integer::from(l)) != 1 {
                continue;
            }
            let prod = Integer::from(&coeffs[k] * &coeffs[l]);
            if prod != coeffs[k * l] {
                warnings.push(format!(
                    "{label}: a({k})a({l}) = {prod} but a({}) = {}",
                    k * l,
                    coeffs[k * l]
                ));
                if warnings.len() >= 10 {
                    break 'screen;
                }
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let series = crate::qseries::IntSeries::new(coeffs);
    let spec = NewformSpec::new(
        label,
        level as u32,
        character,
        epsilon as i8,
        CoeffSource::Ingested(Arc::new(series)),
    )?;
    Ok(IngestedForm {
        spec,
        source_note,
        warnings,
    })
}

/// Reads and parses a coefficient file.
pub fn ingest_coeffs(path: &Path) -> Result<IngestedForm> {
    let text = std::fs::read_to_string(path)?;
    parse_coeffs(&text).map_err(|e| e.context(path.display().to_string()))
}

/// Writes a coefficient file in the format [`parse_coeffs`] reads.
pub fn format_coeffs(spec: &NewformSpec, count: usize) -> Result<String> {
    let coeffs = spec.coefficients(count)?;
    let mut out = format!(
        "# {} {} 3 {} {}\n",
        spec.label(),
        spec.level(),
        spec.character().d(),
        spec.epsilon()
    );
    for k in 1..=count {
        out.push_str(&format!("{k} {}\n", coeffs.coeff(k)));
    }
    Ok(out)
}

/// Labels referenced by the registry that have no built-in coefficients.
pub fn external_forms() -> Vec<&'static str> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for spec in registry() {
        for f in spec.forms() {
            if NewformSpec::named(f).is_err() && seen.insert(f) {
                out.push(f);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_shape() {
        let reg = registry();
        assert!(reg.len() >= 30);
        let ids: HashSet<&str> = reg.iter().map(|s| s.id).collect();
        assert_eq!(ids.len(), reg.len(), "ids are unique");
        let count = |g: &str| reg.iter().filter(|s| s.group == g).count();
        assert_eq!(count("thm12"), 8);
        assert_eq!(count("cor13"), 8);
        assert_eq!(count("hyper"), 2);
        assert_eq!(count("transform"), 3);
        assert_eq!(count("conjectural"), 5);
        assert_eq!(count("lemma22"), 10);
        assert_eq!(count("lemma26"), 5);
        assert!(reg
            .iter()
            .filter(|s| s.group == "conjectural")
            .all(|s| s.status == IdentityStatus::Conjectural));
    }

    #[test]
    fn external_forms_are_the_conjectural_ones() {
        let mut ext = external_forms();
        ext.sort();
        assert_eq!(ext, vec!["g20", "g32", "g36", "g52", "g64"]);
    }

    #[test]
    fn caps_apply() {
        let c = find_identity("C13-1").unwrap();
        assert_eq!(c.effective_target(Some(30)), 8);
        let a = find_identity("A64").unwrap();
        assert_eq!(a.effective_target(Some(40)), 40);
        assert_eq!(a.effective_target(None), 30);
    }

    #[test]
    fn unknown_identity() {
        assert!(matches!(
            run_identity("NOPE", None, &RunOptions::default()),
            Err(Error::UnknownIdentity(_))
        ));
    }

    #[test]
    fn conjectural_without_files_skips() {
        let r = run_identity("S4-f2m512", Some(20), &RunOptions::default()).unwrap();
        assert_eq!(r.status, ReportStatus::ConditionalSkipped);
        assert!(r.lhs.is_none());
    }

    #[test]
    fn report_field_order() {
        let r = run_identity("L22-s2-64", Some(20), &RunOptions { no_timing: true, ..Default::default() }).unwrap();
        let json = r.to_json();
        let keys = [
            "\"id\"",
            "\"status\"",
            "\"digits_agreed\"",
            "\"target_digits\"",
            "\"lhs\"",
            "\"rhs\"",
            "\"lhs_method\"",
            "\"rhs_method\"",
            "\"runtime_ms\"",
            "\"working_bits\"",
            "\"paper_anchor\"",
        ];
        let positions: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]), "{json}");
        assert!(json.contains("\"status\":\"verified\""));
    }

    #[test]
    fn parse_rejects_bad_files() {
        assert!(matches!(parse_coeffs(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_coeffs("h 16 3 -4 1\n1 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_coeffs("# h 16 2 -4 1\n1 1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_coeffs("# h 16 3 -4 1\n1 1\n3 0\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_coeffs("# h 16 3 -4 1\n1 1\n2 x\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_coeffs("# h 16 3 -4 1\n1 2\n2 0\n"),
            Err(Error::InvalidCoefficients(_))
        ));
    }

    #[test]
    fn round_trip_format() {
        let h = NewformSpec::named("h").unwrap();
        let text = format_coeffs(&h, 50).unwrap();
        let parsed = parse_coeffs(&text).unwrap();
        assert!(parsed.warnings.is_empty());
        assert_eq!(parsed.spec.coefficients(50).unwrap(), h.coefficients(50).unwrap());
        assert_eq!(parsed.spec.level(), 16);
    }

    #[test]
    fn multiplicativity_screen_warns() {
        let h = NewformSpec::named("h").unwrap();
        let mut text = format_coeffs(&h, 30).unwrap();
        // corrupt a(15) = a(3)a(5)
        text = text.replace("\n15 0\n", "\n15 7\n");
        let parsed = parse_coeffs(&text).unwrap();
        assert!(!parsed.warnings.is_empty());
    }
}
