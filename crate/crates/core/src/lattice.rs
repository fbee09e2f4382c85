//! Binary quadratic forms, representation numbers, Kronecker characters,
//! Epstein-type lattice sums and theta-series coefficient generation.

use std::fmt;

use rug::{Integer, Rational};

use crate::error::{Error, Result};
use crate::qseries::IntSeries;

/// An integer binary quadratic a·m² + b·mn + c·n², not necessarily definite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IntQuadratic {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl IntQuadratic {
    pub const fn new(a: i64, b: i64, c: i64) -> Self {
        IntQuadratic { a, b, c }
    }

    #[inline]
    pub fn eval(&self, m: i64, n: i64) -> i64 {
        self.a * m * m + self.b * m * n + self.c * n * n
    }
}

/// A positive definite form a·m² + b·mn + c·n².
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuadForm {
    a: i64,
    b: i64,
    c: i64,
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        if a <= 0 || b * b - 4 * a * c >= 0 {
            return Err(Error::Domain(format!(
                "{a}m² + {b}mn + {c}n² is not positive definite"
            )));
        }
        Ok(QuadForm { a, b, c })
    }

    pub fn coefficients(&self) -> (i64, i64, i64) {
        (self.a, self.b, self.c)
    }

    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    #[inline]
    pub fn eval(&self, m: i64, n: i64) -> i64 {
        self.a * m * m + self.b * m * n + self.c * n * n
    }

    pub fn as_quadratic(&self) -> IntQuadratic {
        IntQuadratic::new(self.a, self.b, self.c)
    }

    /// Visits every (m, n) ≠ (0, 0) with Q(m, n) ≤ bound, row by row in n
    /// and then m, so the order is deterministic.
    pub fn for_each_point(&self, bound: i64, mut visit: impl FnMut(i64, i64, i64)) {
        let (a, b, c) = (self.a as f64, self.b as f64, self.c as f64);
        let det = 4.0 * a * c - b * b;
        let n_max = ((4.0 * a * bound as f64 / det).sqrt()).floor() as i64 + 1;
        for n in -n_max..=n_max {
            // a m² + b n m + (c n² − bound) ≤ 0
            let nf = n as f64;
            let disc = b * b * nf * nf - 4.0 * a * (c * nf * nf - bound as f64);
            if disc < 0.0 {
                continue;
            }
            let root = disc.sqrt();
            let lo = ((-b * nf - root) / (2.0 * a)).floor() as i64 - 1;
            let hi = ((-b * nf + root) / (2.0 * a)).ceil() as i64 + 1;
            for m in lo..=hi {
                if m == 0 && n == 0 {
                    continue;
                }
                let v = self.eval(m, n);
                if v <= bound {
                    visit(m, n, v);
                }
            }
        }
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.a, self.b, self.c)
    }
}

/// The Kronecker symbol (D/·) as a character label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CharLabel(i64);

impl CharLabel {
    pub fn new(d: i64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("character label must be nonzero".into()));
        }
        Ok(CharLabel(d))
    }

    pub fn d(&self) -> i64 {
        self.0
    }

    pub fn modulus(&self) -> u64 {
        self.0.unsigned_abs()
    }

    pub fn chi(&self, n: i64) -> i8 {
        kronecker_chi(self.0, n)
    }

    /// χ(−1) = −1.
    pub fn is_odd(&self) -> bool {
        self.chi(-1) == -1
    }
}

impl fmt::Display for CharLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "χ_{}", self.0)
    }
}

/// Kronecker symbol (D/n).
pub fn kronecker_chi(d: i64, n: i64) -> i8 {
    if n == 0 {
        return if d == 1 || d == -1 { 1 } else { 0 };
    }
    let mut result: i8 = 1;
    let mut n = n;
    if n < 0 {
        n = -n;
        if d < 0 {
            result = -result;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if d % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 {
            let r = d.rem_euclid(8);
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        n >>= twos;
    }
    result * jacobi(d.rem_euclid(n), n)
}

/// Jacobi symbol (a/n) for odd n > 0.
fn jacobi(a: i64, n: i64) -> i8 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut result: i8 = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// R_Q(k) = #{(m, n) ∈ ℤ² : Q(m, n) = k}.
pub fn rep_count(q: &QuadForm, k: i64) -> u64 {
    if k <= 0 {
        return u64::from(k == 0);
    }
    let mut count = 0u64;
    q.for_each_point(k, |_, _, v| {
        if v == k {
            count += 1;
        }
    });
    count
}

/// Checks Dirichlet's formula R_{2m²+3n²}(k) = (1 − χ₋₃(k))·Σ_{l|k} χ₋₂₄(l)
/// for k coprime to 6.
pub fn convolution_rep_check(k: i64) -> Result<bool> {
    if k < 1 || k % 2 == 0 || k % 3 == 0 {
        return Err(Error::Domain(format!("{k} is not a positive integer coprime to 6")));
    }
    let q2 = QuadForm::new(2, 0, 3)?;
    let lhs = rep_count(&q2, k) as i64;
    let divisor_sum: i64 = (1..=k)
        .filter(|l| k % l == 0)
        .map(|l| kronecker_chi(-24, l) as i64)
        .sum();
    let rhs = (1 - kronecker_chi(-3, k) as i64) * divisor_sum;
    Ok(lhs == rhs)
}

/// One summand of a theta recipe: scale·Σ num(m,n)·q^{den(m,n)}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaTerm {
    pub numerator: IntQuadratic,
    pub denominator: QuadForm,
    pub scale: Rational,
}

/// Σ_t scale_t·Σ_{m,n} num_t(m,n)·q^{den_t(m,n)}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaFormSpec {
    label: String,
    terms: Vec<ThetaTerm>,
}

impl ThetaFormSpec {
    pub fn new(label: impl Into<String>, terms: Vec<ThetaTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Domain("theta recipe needs at least one term".into()));
        }
        Ok(ThetaFormSpec {
            label: label.into(),
            terms,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[ThetaTerm] {
        &self.terms
    }

    /// Terms of the shape ½·(p m² + r n²)·q^{A m² + C n²}.
    fn diagonal(label: &str, terms: &[(i64, i64, i64, i64)]) -> Self {
        let terms = terms
            .iter()
            .map(|&(p, r, a, c)| ThetaTerm {
                numerator: IntQuadratic::new(p, 0, r),
                denominator: QuadForm::new(a, 0, c).expect("definite"),
                scale: Rational::from((1, 2)),
            })
            .collect();
        ThetaFormSpec::new(label, terms).expect("nonempty")
    }

    pub fn h() -> Self {
        Self::diagonal("h", &[(1, -4, 1, 4)])
    }

    pub fn f() -> Self {
        Self::diagonal("f", &[(1, -2, 1, 2)])
    }

    pub fn g() -> Self {
        Self::diagonal("g", &[(1, -3, 1, 3)])
    }

    pub fn g48() -> Self {
        Self::diagonal("g48", &[(1, -12, 1, 12), (3, -4, 3, 4)])
    }

    /// The companion sum equal to g(τ) + 8g(4τ).
    pub fn g_plus_8g4() -> Self {
        Self::diagonal("g+8g(4τ)", &[(1, -12, 1, 12), (-3, 4, 3, 4)])
    }

    pub fn g24_1() -> Self {
        Self::diagonal("g24_1", &[(1, -6, 1, 6), (2, -3, 2, 3)])
    }

    pub fn g24_2() -> Self {
        Self::diagonal("g24_2", &[(1, -6, 1, 6), (3, -2, 3, 2)])
    }

    pub fn g40() -> Self {
        Self::diagonal("g40", &[(1, -10, 1, 10), (5, -2, 5, 2)])
    }

    /// Looks up one of the named recipes.
    pub fn named(label: &str) -> Result<Self> {
        match label {
            "h" => Ok(Self::h()),
            "f" => Ok(Self::f()),
            "g" => Ok(Self::g()),
            "g48" => Ok(Self::g48()),
            "g24_1" => Ok(Self::g24_1()),
            "g24_2" => Ok(Self::g24_2()),
            "g40" => Ok(Self::g40()),
            other => Err(Error::UnknownForm(other.to_string())),
        }
    }
}

/// Exact coefficients a(0..=M) of a theta recipe.
pub fn theta_coeffs(spec: &ThetaFormSpec, order: usize) -> Result<IntSeries> {
    let bound = order as i64;
    let mut total: Vec<Rational> = vec![Rational::new(); order + 1];
    for term in spec.terms() {
        let mut sums = vec![0i64; order + 1];
        term.denominator.for_each_point(bound, |m, n, v| {
            sums[v as usize] += term.numerator.eval(m, n);
        });
        for (acc, s) in total.iter_mut().zip(sums) {
            if s != 0 {
                *acc += Rational::from(&term.scale * Integer::from(s));
            }
        }
    }
    let mut coeffs = Vec::with_capacity(order + 1);
    for (k, c) in total.into_iter().enumerate() {
        if !c.is_integer() {
            return Err(Error::NonIntegralCoefficient {
                index: k,
                value: c.to_string(),
            });
        }
        coeffs.push(c.into_numer_denom().0);
    }
    Ok(IntSeries::new(coeffs))
}

/// A moderate-precision lattice sum with its error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSum {
    pub value: f64,
    pub error_estimate: f64,
    /// Largest shell Q(m, n) ≤ cutoff that was summed.
    pub cutoff: i64,
}

impl LatticeSum {
    pub fn digits(&self) -> u32 {
        if self.error_estimate <= 0.0 {
            return 16;
        }
        let rel = self.error_estimate / self.value.abs().max(1.0);
        (-rel.log10()).floor().clamp(0.0, 16.0) as u32
    }
}

/// Kahan-compensated running sum.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    #[inline]
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

const EPSTEIN_START: i64 = 10_000;
const EPSTEIN_CAP: i64 = 1 << 24;

/// Partial sums Σ weight/Q^t and weighted counts Σ weight over the three
/// nested regions Q ≤ K, Q ≤ 2K, Q ≤ 4K.
fn shell_sums(
    q: &QuadForm,
    k: i64,
    t: f64,
    weight: impl Fn(i64, i64) -> f64,
) -> [(f64, f64); 3] {
    let mut acc = [Compensated::default(); 3];
    let mut counts = [Compensated::default(); 3];
    q.for_each_point(4 * k, |m, n, v| {
        let w = weight(m, n);
        if w == 0.0 {
            return;
        }
        let term = w / (v as f64).powf(t);
        let shell = if v <= k {
            0
        } else if v <= 2 * k {
            1
        } else {
            2
        };
        acc[shell].add(term);
        counts[shell].add(w);
    });
    let mut out = [(0.0, 0.0); 3];
    let (mut s, mut c) = (0.0, 0.0);
    for i in 0..3 {
        s += acc[i].sum;
        c += counts[i].sum;
        out[i] = (s, c);
    }
    out
}

/// Shell sums at K, 2K, 4K with a tail model, growing K until the three
/// corrected sums agree to `digits`.
///
/// With W(x) the weighted point count up to x, the tail is
/// −K^{−t}·W(K) + t∫_K^∞ W(x)x^{−t−1}dx; the exact W(K) is used and the
/// integral comes from the smooth model `tail_integral`.
fn extrapolated_shells(
    q: &QuadForm,
    t: f64,
    digits: u32,
    weight: impl Fn(i64, i64) -> f64 + Copy,
    tail_integral: impl Fn(f64) -> f64,
) -> Result<LatticeSum> {
    let tol = 10f64.powi(-(digits as i32));
    let mut k = EPSTEIN_START;
    loop {
        let raw = shell_sums(q, k, t, weight);
        let corrected: Vec<f64> = raw
            .iter()
            .zip([k, 2 * k, 4 * k])
            .map(|(&(s, w), kk)| {
                let x = kk as f64;
                s - w * x.powf(-t) + tail_integral(x)
            })
            .collect();
        let value = corrected[2];
        let spread = (corrected[2] - corrected[1])
            .abs()
            .max((corrected[1] - corrected[0]).abs());
        let estimate = spread.max(value.abs() * 1e-15);
        let result = LatticeSum {
            value,
            error_estimate: estimate,
            cutoff: 4 * k,
        };
        if estimate <= tol * value.abs().max(1.0) {
            return Ok(result);
        }
        if 4 * k >= EPSTEIN_CAP {
            return Err(Error::PrecisionUnreachable(format!(
                "lattice sum over {q} reached {} digits at cutoff {}, wanted {digits}",
                result.digits(),
                result.cutoff
            )));
        }
        k *= 4;
    }
}

/// S(a,b,c;t) = Σ′ Q(m,n)^{−t}, for t ≥ 2, to about `digits` digits.
pub fn epstein_sum(q: &QuadForm, t: f64, digits: u32) -> Result<LatticeSum> {
    if !(t >= 2.0) {
        return Err(Error::Domain(format!("Epstein exponent must be >= 2, got {t}")));
    }
    let (a, b, c) = q.coefficients();
    // #{0 < Q ≤ x} ≈ Ax − 1 with A = 2π/√(4ac − b²)
    let density = 2.0 * std::f64::consts::PI / ((4 * a * c - b * b) as f64).sqrt();
    let tail = move |x: f64| t * density * x.powf(1.0 - t) / (t - 1.0) - x.powf(-t);
    extrapolated_shells(q, t, digits, |_, _| 1.0, tail)
}

/// Σ_terms scale·Σ′ num(m,n)/den(m,n)^s for s ≥ 3, to about `digits` digits.
///
/// The recipes in use have numerators that average to zero over each
/// ellipse, so the smooth part of the tail is zero.
pub fn signed_lattice_sum(spec: &ThetaFormSpec, s: f64, digits: u32) -> Result<LatticeSum> {
    if !(s >= 3.0) {
        return Err(Error::Domain(format!("signed lattice sum needs s >= 3, got {s}")));
    }
    let mut value = 0.0;
    let mut error = 0.0;
    let mut cutoff = 0;
    for term in spec.terms() {
        let scale = term.scale.to_f64();
        let num = term.numerator;
        let part = extrapolated_shells(
            &term.denominator,
            s,
            digits + 1,
            move |m, n| num.eval(m, n) as f64,
            |_| 0.0,
        )?;
        value += scale * part.value;
        error += scale.abs() * part.error_estimate;
        cutoff = cutoff.max(part.cutoff);
    }
    Ok(LatticeSum {
        value,
        error_estimate: error,
        cutoff,
    })
}
