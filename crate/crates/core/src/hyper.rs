//! Generalized hypergeometric series: certified truncation inside the unit
//! disc and Levin-u acceleration on the unit circle.

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::numkernel::{agreement_digits, bits_to_digits, PrecisionContext, Real};

/// The argument of a series, exact when possible.
#[derive(Clone, Debug, PartialEq)]
pub enum HyperArg {
    Exact(Rational),
    Approx(Float),
}

impl HyperArg {
    pub fn to_float(&self, bits: u32) -> Float {
        match self {
            HyperArg::Exact(r) => Float::with_val(bits, r),
            HyperArg::Approx(f) => Float::with_val(bits, f),
        }
    }

    fn abs_cmp_one(&self) -> std::cmp::Ordering {
        match self {
            HyperArg::Exact(r) => Rational::from(r.abs_ref()).cmp(&Rational::from(1)),
            HyperArg::Approx(f) => Float::with_val(f.prec(), f.abs_ref())
                .partial_cmp(&1)
                .unwrap_or(std::cmp::Ordering::Greater),
        }
    }
}

impl From<Rational> for HyperArg {
    fn from(r: Rational) -> Self {
        HyperArg::Exact(r)
    }
}

impl From<Float> for HyperArg {
    fn from(f: Float) -> Self {
        HyperArg::Approx(f)
    }
}

/// pFq(a₁..a_p; b₁..b_q; x).
#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    upper: Vec<Rational>,
    lower: Vec<Rational>,
    x: HyperArg,
}

impl HyperParams {
    pub fn new(upper: Vec<Rational>, lower: Vec<Rational>, x: impl Into<HyperArg>) -> Result<Self> {
        for b in &lower {
            if b.is_integer() && *b <= 0 {
                return Err(Error::Domain(format!("lower parameter {b} is a non-positive integer")));
            }
        }
        Ok(HyperParams {
            upper,
            lower,
            x: x.into(),
        })
    }

    /// ₅F₄(a₁, a₂, a₃, 1, 1; 2, 2, 2, 2; x), the shape behind every family.
    pub fn five_f_four(a: [Rational; 3], x: impl Into<HyperArg>) -> Self {
        let [a1, a2, a3] = a;
        HyperParams::new(
            vec![a1, a2, a3, Rational::from(1), Rational::from(1)],
            vec![Rational::from(2); 4],
            x,
        )
        .expect("lower parameters are positive")
    }

    pub fn upper(&self) -> &[Rational] {
        &self.upper
    }

    pub fn lower(&self) -> &[Rational] {
        &self.lower
    }

    pub fn x(&self) -> &HyperArg {
        &self.x
    }

    pub fn with_x(&self, x: impl Into<HyperArg>) -> Self {
        HyperParams {
            upper: self.upper.clone(),
            lower: self.lower.clone(),
            x: x.into(),
        }
    }

    /// σ = Σ b − Σ a.
    pub fn sigma(&self) -> Rational {
        let lower: Rational = self.lower.iter().sum();
        let upper: Rational = self.upper.iter().sum();
        lower - upper
    }

    /// Exact (Π(aᵢ+n))/(Π(bⱼ+n)·(n+1)), the term ratio without x.
    fn ratio(&self, n: u64) -> Rational {
        let mut num = Rational::from(1);
        for a in &self.upper {
            num *= Rational::from(a + n);
        }
        let mut den = Rational::from(n + 1);
        for b in &self.lower {
            den *= Rational::from(b + n);
        }
        num / den
    }

    /// Upper bound for the ratio at every index m ≥ n, valid once n exceeds
    /// every parameter in magnitude. Each upper parameter is paired with a
    /// lower one (the n! counts as b = 1); each pair is monotone toward 1.
    fn ratio_bound(&self, n: u64) -> Float {
        let mut lowers: Vec<Rational> = self.lower.clone();
        lowers.push(Rational::from(1));
        let mut bound = Rational::from(1);
        for (i, b) in lowers.iter().enumerate() {
            let pair = match self.upper.get(i) {
                Some(a) => Rational::from(a + n) / Rational::from(b + n),
                None => Rational::from(1) / Rational::from(b + n),
            };
            if pair > 1 {
                bound *= pair;
            }
        }
        Float::with_val(64, &bound)
    }

    fn monotone_from(&self) -> u64 {
        self.upper
            .iter()
            .chain(self.lower.iter())
            .map(|r| Rational::from(r.abs_ref()).ceil().into_numer_denom().0)
            .max()
            .and_then(|m: Integer| m.to_u64())
            .unwrap_or(0)
            + 2
    }

    fn terminates(&self) -> bool {
        self.upper.iter().any(|a| a.is_integer() && *a <= 0)
    }
}

/// Value of pFq for |x| < 1 with a certified truncation bound.
#[derive(Clone, Debug)]
pub struct HyperValue {
    pub value: Real,
    pub terms: u64,
    pub error_bound: Float,
}

/// pFq(a; b; x) for |x| < 1 by incremental term recurrence.
pub fn pfq(params: &HyperParams, ctx: &PrecisionContext) -> Result<HyperValue> {
    let p = params.upper.len();
    let q = params.lower.len();
    if p > q + 1 && !params.terminates() {
        return Err(Error::Divergent("p > q + 1".into()));
    }
    if p == q + 1 && params.x.abs_cmp_one() != std::cmp::Ordering::Less {
        let x = params.x.to_float(64);
        return Err(Error::Divergent(x.abs().to_string_radix(10, Some(10))));
    }
    let bits = ctx.working_bits() + 32;
    let x = params.x.to_float(bits);
    let x_abs = Float::with_val(64, x.abs_ref());
    let eps = Float::with_val(bits, 1) >> (ctx.working_bits() + 2);
    let start = params.monotone_from();

    let mut sum = Float::with_val(bits, 1);
    let mut term = Float::with_val(bits, 1);
    let mut n = 0u64;
    loop {
        let r = params.ratio(n);
        if r == 0 {
            return Ok(HyperValue {
                value: Real::new(Float::with_val(ctx.working_bits(), sum))?,
                terms: n + 1,
                error_bound: Float::with_val(ctx.working_bits(), 0),
            });
        }
        term *= Float::with_val(bits, &r);
        term *= &x;
        sum += &term;
        n += 1;
        if n >= start {
            let rho = Float::with_val(64, &x_abs * params.ratio_bound(n));
            if rho < 1 {
                let next = Float::with_val(bits, term.abs_ref()) * Float::with_val(bits, &rho);
                let tail = next / Float::with_val(64, 1u32 - &rho);
                let scale = Float::with_val(bits, sum.abs_ref()).max(&Float::with_val(bits, 1));
                if tail < Float::with_val(bits, &eps * &scale) {
                    return Ok(HyperValue {
                        value: Real::new(Float::with_val(ctx.working_bits(), &sum))?,
                        terms: n + 1,
                        error_bound: Float::with_val(ctx.working_bits(), tail),
                    });
                }
            }
        }
        if n > 50_000_000 {
            return Err(Error::PrecisionUnreachable(format!(
                "pFq did not reach 2^-{} after {n} terms",
                ctx.working_bits()
            )));
        }
    }
}

/// Value of a unit-argument series with its heuristic digit estimate.
#[derive(Clone, Debug)]
pub struct UnitValue {
    pub value: Real,
    pub digits: u32,
    pub order: usize,
}

/// Highest Levin transform order tried.
pub const LEVIN_MAX_ORDER: usize = 40;

/// pFq at x = ±1 with σ > 0, by the Levin u-transform.
///
/// The order giving the smallest change from the previous order wins; the
/// digit estimate is how far those two agree.
pub fn pfq_unit(params: &HyperParams, ctx: &PrecisionContext) -> Result<UnitValue> {
    let x = match params.x() {
        HyperArg::Exact(r) if *r == 1 || *r == -1 => r.clone(),
        other => {
            return Err(Error::Domain(format!(
                "pfq_unit needs x = ±1, got {}",
                other.to_float(64).to_string_radix(10, Some(10))
            )));
        }
    };
    if params.upper.len() != params.lower.len() + 1 {
        return Err(Error::Domain("pfq_unit needs p = q + 1".into()));
    }
    if params.sigma() <= 0 {
        return Err(Error::Divergent(format!("σ = {} at |x| = 1", params.sigma())));
    }
    let bits = 2 * ctx.working_bits() + 4 * LEVIN_MAX_ORDER as u32 + 64;
    let count = LEVIN_MAX_ORDER + 2;

    // partial sums S_j and terms a_j, j = 0..count
    let mut terms = Vec::with_capacity(count);
    let mut partial = Vec::with_capacity(count);
    let mut term = Float::with_val(bits, 1);
    let mut sum = Float::with_val(bits, 0);
    for n in 0..count as u64 {
        if n > 0 {
            term *= Float::with_val(bits, &params.ratio(n - 1));
            if x < 0 {
                term = -term;
            }
        }
        if term.is_zero() {
            // terminating series: the partial sum is exact
            return Ok(UnitValue {
                value: Real::new(Float::with_val(ctx.working_bits(), &sum))?,
                digits: ctx.target_digits(),
                order: 0,
            });
        }
        sum += &term;
        terms.push(term.clone());
        partial.push(sum.clone());
    }

    let mut best: Option<(Float, Float, usize)> = None;
    let mut previous: Option<Float> = None;
    for k in 1..=LEVIN_MAX_ORDER {
        let value = levin_u(&partial, &terms, k, bits);
        if let Some(prev) = &previous {
            let diff = Float::with_val(bits, &value - prev).abs();
            let better = match &best {
                Some((_, d, _)) => diff < *d,
                None => true,
            };
            if better {
                best = Some((value.clone(), diff, k));
            }
        }
        previous = Some(value);
    }
    let (value, _, order) = best.expect("at least two orders");
    let prev_value = levin_u(&partial, &terms, order - 1, bits);
    let digits = agreement_digits(&value, &prev_value, bits_to_digits(ctx.working_bits()));
    if digits < ctx.target_digits() {
        return Err(Error::AccelerationStagnation(format!(
            "orders {} and {order} agree to only {digits} digits, wanted {}",
            order - 1,
            ctx.target_digits()
        )));
    }
    Ok(UnitValue {
        value: Real::new(Float::with_val(ctx.working_bits(), value))?,
        digits,
        order,
    })
}

/// Levin u-transform of order k from S_0..S_k with ω_j = (j+1)·a_j.
fn levin_u(partial: &[Float], terms: &[Float], k: usize, bits: u32) -> Float {
    let beta = 1u64;
    let mut num = Float::new(bits);
    let mut den = Float::new(bits);
    let mut binom = Integer::from(1);
    let base = Float::with_val(bits, beta + k as u64);
    for j in 0..=k {
        let omega = Float::with_val(bits, &terms[j] * (beta + j as u64));
        let ratio = Float::with_val(bits, beta + j as u64) / &base;
        let mut weight = Float::with_val(bits, &binom) * ratio.pow(k as u32 - 1);
        if j % 2 == 1 {
            weight = -weight;
        }
        let w_over = weight / &omega;
        num += Float::with_val(bits, &w_over * &partial[j]);
        den += w_over;
        binom *= (k - j) as u64;
        binom /= (j + 1) as u64;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn zero_argument_is_one() {
        let ctx = PrecisionContext::new(30);
        let p = HyperParams::five_f_four([r(3, 2), r(3, 2), r(3, 2)], r(0, 1));
        let v = pfq(&p, &ctx).unwrap();
        assert_eq!(*v.value.value(), 1);
    }

    #[test]
    fn two_f_one_log() {
        let ctx = PrecisionContext::new(40);
        let p = HyperParams::new(vec![r(1, 1), r(1, 1)], vec![r(2, 1)], r(1, 2)).unwrap();
        let v = pfq(&p, &ctx).unwrap();
        let want = Float::with_val(200, 2).ln() * 2u32;
        assert!(agreement_digits(v.value.value(), &want, 100) >= 40);
    }

    #[test]
    fn rejects_bad_parameters() {
        let ctx = PrecisionContext::new(20);
        assert!(HyperParams::new(vec![r(1, 1)], vec![r(-2, 1)], r(1, 2)).is_err());
        let p = HyperParams::five_f_four([r(3, 2), r(3, 2), r(3, 2)], r(1, 1));
        assert!(matches!(pfq(&p, &ctx), Err(Error::Divergent(_))));
        let p = p.with_x(r(1, 3));
        assert!(pfq_unit(&p, &ctx).is_err());
    }

    #[test]
    fn terminating_series() {
        // ₂F₁(−2, 1; 1; x) = (1 − x)²
        let ctx = PrecisionContext::new(30);
        let p = HyperParams::new(vec![r(-2, 1), r(1, 1)], vec![r(1, 1)], r(1, 3)).unwrap();
        let v = pfq(&p, &ctx).unwrap();
        let want = Float::with_val(200, &r(4, 9));
        assert!(agreement_digits(v.value.value(), &want, 100) >= 30);
    }

    #[test]
    fn unit_argument_matches_reference() {
        let ctx = PrecisionContext::new(12);
        let p = HyperParams::five_f_four([r(3, 2), r(3, 2), r(3, 2)], r(1, 1));
        let v = pfq_unit(&p, &ctx).unwrap();
        let want = Float::with_val(200, Float::parse("1.42800197452632250465883646306").unwrap());
        assert!(agreement_digits(v.value.value(), &want, 60) >= 12);
    }

    #[test]
    fn alternating_unit_argument() {
        let ctx = PrecisionContext::new(20);
        let p = HyperParams::five_f_four([r(3, 2), r(3, 2), r(3, 2)], r(-1, 1));
        let v = pfq_unit(&p, &ctx).unwrap();
        let want = Float::with_val(200, Float::parse("0.844241815638609892747691328106").unwrap());
        assert!(agreement_digits(v.value.value(), &want, 60) >= 20, "{}", v.value);
    }

    #[test]
    fn sigma_of_families() {
        let p = HyperParams::five_f_four([r(5, 4), r(3, 2), r(7, 4)], r(1, 2));
        assert_eq!(p.sigma(), r(3, 2));
        let p = HyperParams::five_f_four([r(4, 3), r(3, 2), r(5, 3)], r(1, 2));
        assert_eq!(p.sigma(), r(3, 2));
    }
}
