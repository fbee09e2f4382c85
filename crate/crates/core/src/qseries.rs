//! Nome-based evaluators: Dedekind eta, Weber functions, the modular
//! parameters s₂/s₃/s₄ and their inverses, the G-series, and exact integer
//! q-expansions of eta quotients.
//!
//! Everything stays real. A point τ = re + i·√im_sq with re ∈ {0, 1/2} (mod 1)
//! has a real nome q = ±e^{−2π·Im τ}; the sign is carried by [`Nome`].

use std::fmt;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::numkernel::{PrecisionContext, Real};

/// τ = re + i·√im_sq in the upper half plane.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CMPoint {
    re: Rational,
    im_sq: Rational,
}

impl CMPoint {
    pub fn new(re: Rational, im_sq: Rational) -> Result<Self> {
        if im_sq <= 0 {
            return Err(Error::Domain(format!("Im(τ)² must be positive, got {im_sq}")));
        }
        Ok(CMPoint { re, im_sq })
    }

    /// τ = i·√im_sq.
    pub fn imaginary(im_sq: impl Into<Rational>) -> Result<Self> {
        CMPoint::new(Rational::new(), im_sq.into())
    }

    /// The point √(−n)/d, i.e. τ = i·√(n/d²).
    pub fn sqrt_neg(n: u32, d: u32) -> Self {
        CMPoint::imaginary(Rational::from((n, d * d))).expect("n/d² > 0")
    }

    pub fn re(&self) -> &Rational {
        &self.re
    }

    pub fn im_sq(&self) -> &Rational {
        &self.im_sq
    }

    pub fn is_imaginary(&self) -> bool {
        self.re == 0
    }

    /// Im(τ) at `bits` precision.
    pub fn im(&self, bits: u32) -> Float {
        Float::with_val(bits, &self.im_sq).sqrt()
    }

    /// τ·r for rational r > 0.
    pub fn scale(&self, r: &Rational) -> Result<Self> {
        if *r <= 0 {
            return Err(Error::Domain(format!("scale factor must be positive, got {r}")));
        }
        CMPoint::new(
            Rational::from(&self.re * r),
            Rational::from(&self.im_sq * Rational::from(r.square_ref())),
        )
    }

    /// τ + r.
    pub fn translate(&self, r: &Rational) -> Self {
        CMPoint {
            re: Rational::from(&self.re + r),
            im_sq: self.im_sq.clone(),
        }
    }

    /// Sign of the nome: +1 for re ≡ 0, −1 for re ≡ 1/2 (mod 1).
    pub fn nome_sign(&self) -> Result<i8> {
        let mut frac = self.re.clone();
        frac.fract_floor_mut(&mut Integer::new());
        if frac == 0 {
            Ok(1)
        } else if frac == Rational::from((1, 2)) {
            Ok(-1)
        } else {
            Err(Error::Domain(format!(
                "Re(τ) = {} does not give a real nome",
                self.re
            )))
        }
    }

    /// q = e^{2πiτ} as a signed real nome.
    pub fn nome(&self, ctx: &PrecisionContext) -> Result<Nome> {
        let sign = self.nome_sign()?;
        let bits = ctx.working_bits();
        let pi = Float::with_val(bits, Constant::Pi);
        let magnitude = (Float::with_val(bits, -(pi * 2u32)) * self.im(bits)).exp();
        Nome::new(magnitude, sign)
    }
}

impl fmt::Display for CMPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.re == 0 {
            write!(f, "i·√({})", self.im_sq)
        } else {
            write!(f, "{} + i·√({})", self.re, self.im_sq)
        }
    }
}

/// Real nome q = sign·magnitude with 0 < magnitude < 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Nome {
    magnitude: Float,
    sign: i8,
}

impl Nome {
    pub fn new(magnitude: Float, sign: i8) -> Result<Self> {
        if !(magnitude > 0 && magnitude < 1) {
            return Err(Error::Domain(format!("nome magnitude {magnitude} outside (0, 1)")));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::Domain(format!("nome sign must be ±1, got {sign}")));
        }
        Ok(Nome { magnitude, sign })
    }

    pub fn positive(q: Float) -> Result<Self> {
        Nome::new(q, 1)
    }

    pub fn magnitude(&self) -> &Float {
        &self.magnitude
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn precision(&self) -> u32 {
        self.magnitude.prec()
    }

    /// Signed value of q.
    pub fn value(&self) -> Float {
        if self.sign < 0 {
            -self.magnitude.clone()
        } else {
            self.magnitude.clone()
        }
    }

    pub fn negated(&self) -> Nome {
        Nome {
            magnitude: self.magnitude.clone(),
            sign: -self.sign,
        }
    }

    /// qⁿ.
    pub fn pow(&self, n: u32) -> Nome {
        let magnitude = Float::with_val(self.magnitude.prec(), (&self.magnitude).pow(n));
        let sign = if n % 2 == 0 { 1 } else { self.sign };
        Nome { magnitude, sign }
    }

    /// Im(τ) for the corresponding point, t = −ln|q| / 2π.
    pub fn im_tau(&self) -> Float {
        let bits = self.magnitude.prec();
        let pi = Float::with_val(bits, Constant::Pi);
        -Float::with_val(bits, self.magnitude.ln_ref()) / (pi * 2u32)
    }
}

/// Euler's function ∏_{n≥1}(1 − qⁿ) at a signed real nome, by the pentagonal
/// number series Σ_k (−1)^k q^{k(3k−1)/2}.
pub fn euler_product(q: &Nome, bits: u32) -> Float {
    let qv = Float::with_val(bits, q.value());
    let eps = Float::with_val(bits, 1) >> (bits + 4);
    let mut sum = Float::with_val(bits, 1);
    let mut k = 1u32;
    loop {
        let g1 = k * (3 * k - 1) / 2;
        let g2 = k * (3 * k + 1) / 2;
        let t1 = Float::with_val(bits, (&qv).pow(g1));
        let t2 = Float::with_val(bits, (&qv).pow(g2));
        let pair = t1 + t2;
        if k % 2 == 1 {
            sum -= &pair;
        } else {
            sum += &pair;
        }
        // the next pentagonal exponent is larger than g2, and terms decay
        // geometrically, so |pair| bounds the rest
        if Float::with_val(bits, pair.abs_ref()) < eps {
            break;
        }
        k += 1;
    }
    sum
}

/// The real factor of η(τ): e^{−2π·Im τ/24}·∏(1 − qⁿ).
///
/// For Re τ ≡ 1/2 the full value is this times the phase e^{πi/24}; for
/// Re τ ≡ 0 it is η(τ) itself.
pub fn eta_value(tau: &CMPoint, ctx: &PrecisionContext) -> Result<Real> {
    let bits = ctx.working_bits() + 16;
    let wide = ctx.widened(16);
    let q = tau.nome(&wide)?;
    let pi = Float::with_val(bits, Constant::Pi);
    let prefactor = (Float::with_val(bits, -(pi * 2u32)) * tau.im(bits) / 24u32).exp();
    let value = prefactor * euler_product(&q, bits);
    Real::new(Float::with_val(ctx.working_bits(), value))
}

fn require_imaginary(tau: &CMPoint, what: &str) -> Result<()> {
    if tau.is_imaginary() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} needs purely imaginary τ, got {tau}")))
    }
}

/// Weber's 𝔣(τ) = e^{−πi/24}·η((τ+1)/2)/η(τ) for purely imaginary τ.
pub fn weber_f(tau: &CMPoint, ctx: &PrecisionContext) -> Result<Real> {
    require_imaginary(tau, "𝔣")?;
    let wide = ctx.widened(16);
    let half = Rational::from((1, 2));
    let shifted = tau.translate(&Rational::from(1)).scale(&half)?;
    // η((τ+1)/2) = e^{πi/24}·(real factor); the phase cancels e^{−πi/24}
    let num = eta_value(&shifted, &wide)?.into_inner();
    let den = eta_value(tau, &wide)?.into_inner();
    Real::new(Float::with_val(ctx.working_bits(), num / den))
}

/// Weber's 𝔣₁(τ) = η(τ/2)/η(τ) for purely imaginary τ.
pub fn weber_f1(tau: &CMPoint, ctx: &PrecisionContext) -> Result<Real> {
    require_imaginary(tau, "𝔣₁")?;
    let wide = ctx.widened(16);
    let halved = tau.scale(&Rational::from((1, 2)))?;
    let num = eta_value(&halved, &wide)?.into_inner();
    let den = eta_value(tau, &wide)?.into_inner();
    Real::new(Float::with_val(ctx.working_bits(), num / den))
}

fn require_positive(q: &Nome, what: &str) -> Result<()> {
    if q.sign() > 0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} needs 0 < q < 1")))
    }
}

/// s₂(q) = −Δ(τ+1/2)/Δ(2τ+1) = (1/q)·(∏(1−(−q)ⁿ) / ∏(1−q²ⁿ))²⁴.
pub fn s2(q: &Nome, ctx: &PrecisionContext) -> Result<Real> {
    require_positive(q, "s₂")?;
    let bits = ctx.working_bits() + 16;
    let ratio = euler_product(&q.negated(), bits) / euler_product(&q.pow(2), bits);
    let value = ratio.pow(24u32) / Float::with_val(bits, q.magnitude());
    Real::new(Float::with_val(ctx.working_bits(), value))
}

/// s₃(q) = (27(η(3τ)/η(τ))⁶ + (η(τ)/η(3τ))⁶)².
pub fn s3(q: &Nome, ctx: &PrecisionContext) -> Result<Real> {
    require_positive(q, "s₃")?;
    let bits = ctx.working_bits() + 16;
    let qv = Float::with_val(bits, q.magnitude());
    // (η(3τ)/η(τ))⁶ = q^{1/2}·(P(q³)/P(q))⁶
    let r6 = (euler_product(&q.pow(3), bits) / euler_product(q, bits)).pow(6u32)
        * Float::with_val(bits, qv.sqrt_ref());
    let inner = Float::with_val(bits, &r6 * 27u32) + Float::with_val(bits, r6.recip_ref());
    Real::new(Float::with_val(ctx.working_bits(), inner.square()))
}

/// s₄(q) = Δ(2τ)/Δ(τ)·(16(η(τ)η(4τ)²/η(2τ)³)⁴ + (η(2τ)³/(η(τ)η(4τ)²))⁴)⁴.
pub fn s4(q: &Nome, ctx: &PrecisionContext) -> Result<Real> {
    require_positive(q, "s₄")?;
    let bits = ctx.working_bits() + 16;
    let qv = Float::with_val(bits, q.magnitude());
    let p1 = euler_product(q, bits);
    let p2 = euler_product(&q.pow(2), bits);
    let p4 = euler_product(&q.pow(4), bits);
    // Δ(2τ)/Δ(τ) = q·(P(q²)/P(q))²⁴
    let delta_ratio = Float::with_val(bits, &p2 / &p1).pow(24u32) * &qv;
    // (η(τ)η(4τ)²/η(2τ)³)⁴ = q^{1/2}·(P(q)P(q⁴)²/P(q²)³)⁴
    let a4 = (p1 * p4.square() / p2.pow(3u32)).pow(4u32) * Float::with_val(bits, qv.sqrt_ref());
    let inner = Float::with_val(bits, &a4 * 16u32) + Float::with_val(bits, a4.recip_ref());
    Real::new(Float::with_val(ctx.working_bits(), delta_ratio * inner.pow(4u32)))
}

/// Which of s₂, s₃, s₄.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Two,
    Three,
    Four,
}

impl Level {
    pub fn from_u32(level: u32) -> Result<Self> {
        match level {
            2 => Ok(Level::Two),
            3 => Ok(Level::Three),
            4 => Ok(Level::Four),
            other => Err(Error::Domain(format!("level must be 2, 3 or 4, got {other}"))),
        }
    }

    pub fn as_u32(self) -> u32 {
        match self {
            Level::Two => 2,
            Level::Three => 3,
            Level::Four => 4,
        }
    }

    /// Im(τ)² at the boundary of the admissible strip: 1/4, 1/3, 1/2.
    pub fn min_im_sq(self) -> Rational {
        match self {
            Level::Two => Rational::from((1, 4)),
            Level::Three => Rational::from((1, 3)),
            Level::Four => Rational::from((1, 2)),
        }
    }

    /// s_j at the boundary point: 64, 108, 256.
    pub fn boundary_value(self) -> u32 {
        match self {
            Level::Two => 64,
            Level::Three => 108,
            Level::Four => 256,
        }
    }

    /// Largest admissible nome e^{−2π·t_min}.
    pub fn q_boundary(self, ctx: &PrecisionContext) -> Nome {
        CMPoint::imaginary(self.min_im_sq())
            .expect("positive")
            .nome(ctx)
            .expect("imaginary point")
    }
}

/// s_j(q) for the given level.
pub fn s_level(level: Level, q: &Nome, ctx: &PrecisionContext) -> Result<Real> {
    match level {
        Level::Two => s2(q, ctx),
        Level::Three => s3(q, ctx),
        Level::Four => s4(q, ctx),
    }
}

/// Rogers' G(q) = −log|q| + 240 Σ n² log(1 − qⁿ), signed nome allowed.
pub fn g_series(q: &Nome, ctx: &PrecisionContext) -> Result<Real> {
    let bits = ctx.working_bits() + 16;
    let qv = Float::with_val(bits, q.value());
    let qabs = Float::with_val(bits, q.magnitude());
    let eps = Float::with_val(bits, 1) >> (bits + 8);
    let one_minus = Float::with_val(bits, 1u32 - &qabs);
    let mut sum = Float::new(bits);
    let mut qn = Float::with_val(bits, 1);
    let mut qn_abs = Float::with_val(bits, 1);
    let mut n = 1u64;
    loop {
        qn *= &qv;
        qn_abs *= &qabs;
        let term = Float::with_val(bits, -&qn).ln_1p() * (n * n);
        sum += term;
        // Σ_{m>n} m²|log(1 − q^m)| ≤ 240 n²|q|ⁿ/(1 − |q|) up to a constant
        let bound = Float::with_val(bits, &qn_abs * (240 * n * n)) / &one_minus;
        if bound < eps && n > 2 {
            break;
        }
        n += 1;
    }
    let value = sum * 240u32 - Float::with_val(bits, qabs.ln_ref());
    Real::new(Float::with_val(ctx.working_bits(), value))
}

/// Inverts s_j on the admissible real-nome interval (0, q_boundary]:
/// returns q with s_j(q) = k.
pub fn invert_s(level: Level, k: &Float, ctx: &PrecisionContext) -> Result<Nome> {
    if k.is_nan() || *k < level.boundary_value() {
        return Err(Error::Domain(format!(
            "s_{} only takes values >= {} on the admissible interval, got {k}",
            level.as_u32(),
            level.boundary_value()
        )));
    }
    let bits = ctx.working_bits() + 16;
    let wide = ctx.widened(16);
    let k = Float::with_val(bits, k);
    let q_hi = level.q_boundary(&wide);
    let tol = Float::with_val(bits, &k * ctx.epsilon());

    let s_hi = s_level(level, &q_hi, &wide)?.into_inner();
    if Float::with_val(bits, &s_hi - &k).abs() <= tol {
        return Ok(q_hi);
    }

    // lower end: s_j(q) ~ 1/q, so shrink until s_j(q_lo) >= k
    let mut q_lo = q_hi.clone();
    let mut s_lo = s_hi.clone();
    for _ in 0..4096 {
        if s_lo >= k {
            break;
        }
        q_lo = Nome::positive(Float::with_val(bits, q_lo.magnitude() >> 1))?;
        s_lo = s_level(level, &q_lo, &wide)?.into_inner();
    }
    let bracket_error = |lo: &Nome, hi: &Nome| Error::BracketFailure {
        level: level.as_u32(),
        q_lo: lo.magnitude().to_string_radix(10, Some(12)),
        q_hi: hi.magnitude().to_string_radix(10, Some(12)),
        target: k.to_string_radix(10, Some(12)),
    };
    if !(s_lo >= k && s_hi <= k) {
        return Err(bracket_error(&q_lo, &q_hi));
    }
    check_monotone(level, &q_lo, &q_hi).map_err(|_| bracket_error(&q_lo, &q_hi))?;

    // Solve ln s_j(e^{−u}) = ln k in u = −ln q; the map is close to the identity.
    let ln_k = Float::with_val(bits, k.ln_ref());
    let residual = |u: &Float, prec: u32| -> Result<Float> {
        let c = PrecisionContext::with_working_bits(ctx.target_digits(), prec.max(wide.working_bits()))
            .unwrap_or(wide);
        let q = Nome::positive(Float::with_val(prec, -u).exp())?;
        let s = s_level(level, &q, &c)?.into_inner();
        Ok(s.ln() - &ln_k)
    };
    let mut u_lo = -Float::with_val(bits, q_lo.magnitude().ln_ref()); // residual >= 0
    let mut u_hi = -Float::with_val(bits, q_hi.magnitude().ln_ref()); // residual <= 0
    std::mem::swap(&mut u_lo, &mut u_hi);
    // now u_lo = −ln q_hi (small u, s <= k), u_hi = −ln q_lo (large u, s >= k)

    // bisection to ~50 bits
    for _ in 0..200 {
        let width = Float::with_val(bits, &u_hi - &u_lo);
        if width < Float::with_val(bits, &u_hi >> 50) {
            break;
        }
        let mid = Float::with_val(bits, &u_lo + &u_hi) >> 1;
        let r = residual(&mid, bits)?;
        if r < 0 {
            u_lo = mid;
        } else {
            u_hi = mid;
        }
    }

    // secant refinement at full precision
    let mut x0 = u_lo;
    let mut x1 = u_hi;
    let mut f0 = residual(&x0, bits)?;
    let mut f1 = residual(&x1, bits)?;
    let step_tol = Float::with_val(bits, &x1 * ctx.epsilon());
    for _ in 0..100 {
        let denom = Float::with_val(bits, &f1 - &f0);
        if denom.is_zero() {
            break;
        }
        let step = Float::with_val(bits, &f1 * Float::with_val(bits, &x1 - &x0)) / denom;
        let x2 = Float::with_val(bits, &x1 - &step);
        x0 = std::mem::replace(&mut x1, x2);
        f0 = std::mem::replace(&mut f1, residual(&x1, bits)?);
        if step.abs() <= step_tol {
            break;
        }
    }
    let q = Float::with_val(ctx.working_bits(), (-x1).exp());
    Nome::positive(q)
}

/// Grid points used by the monotonicity screen in [`invert_s`].
const MONOTONE_GRID: usize = 100;

/// Confirms s_j is strictly decreasing in q on a log-spaced grid over
/// [q_lo, q_hi], evaluated at low precision.
pub fn check_monotone(level: Level, q_lo: &Nome, q_hi: &Nome) -> Result<()> {
    let ctx = PrecisionContext::new(15);
    let bits = ctx.working_bits();
    let ln_lo = Float::with_val(bits, q_lo.magnitude().ln_ref());
    let ln_hi = Float::with_val(bits, q_hi.magnitude().ln_ref());
    let mut prev: Option<Float> = None;
    for i in 0..=MONOTONE_GRID {
        let t = Float::with_val(bits, i) / MONOTONE_GRID as u32;
        let ln_q = Float::with_val(bits, &ln_lo + Float::with_val(bits, &ln_hi - &ln_lo) * t);
        let q = Nome::positive(ln_q.exp())?;
        let s = s_level(level, &q, &ctx)?.into_inner();
        if let Some(p) = &prev {
            if s >= *p {
                return Err(Error::Domain(format!(
                    "s_{} not monotone near q = {}",
                    level.as_u32(),
                    q.magnitude().to_f64()
                )));
            }
        }
        prev = Some(s);
    }
    Ok(())
}

/// Exact integer power series a(0..=M).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntSeries {
    coeffs: Vec<Integer>,
}

impl IntSeries {
    pub fn new(coeffs: Vec<Integer>) -> Self {
        assert!(!coeffs.is_empty(), "a series carries at least a(0)");
        IntSeries { coeffs }
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        IntSeries::new(coeffs.iter().map(|&c| Integer::from(c)).collect())
    }

    pub fn zero(order: usize) -> Self {
        IntSeries::new(vec![Integer::new(); order + 1])
    }

    pub fn one(order: usize) -> Self {
        let mut s = IntSeries::zero(order);
        s.coeffs[0] = Integer::from(1);
        s
    }

    /// Truncation order M.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &Integer {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    /// Coefficients as i64; panics if any does not fit.
    pub fn to_i64s(&self) -> Vec<i64> {
        self.coeffs
            .iter()
            .map(|c| c.to_i64().expect("coefficient exceeds i64"))
            .collect()
    }

    pub fn truncate(&self, order: usize) -> Self {
        IntSeries::new(self.coeffs[..=order.min(self.order())].to_vec())
    }

    fn nonzero_terms(&self) -> Vec<(usize, &Integer)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .collect()
    }

    pub fn add(&self, other: &IntSeries) -> IntSeries {
        let order = self.order().min(other.order());
        IntSeries::new(
            (0..=order)
                .map(|k| Integer::from(&self.coeffs[k] + &other.coeffs[k]))
                .collect(),
        )
    }

    pub fn scale(&self, factor: &Integer) -> IntSeries {
        IntSeries::new(self.coeffs.iter().map(|c| Integer::from(c * factor)).collect())
    }

    /// Product truncated to the smaller order. Sparse operands are cheap.
    pub fn mul(&self, other: &IntSeries) -> IntSeries {
        let order = self.order().min(other.order());
        let (sparse, dense) = if self.nonzero_terms().len() <= other.nonzero_terms().len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut out = vec![Integer::new(); order + 1];
        for (i, a) in sparse.nonzero_terms() {
            if i > order {
                break;
            }
            for (j, b) in dense.coeffs[..=order - i].iter().enumerate() {
                if *b != 0 {
                    out[i + j] += Integer::from(a * b);
                }
            }
        }
        IntSeries::new(out)
    }

    pub fn pow(&self, e: u32) -> IntSeries {
        let mut result = IntSeries::one(self.order());
        for _ in 0..e {
            result = result.mul(self);
        }
        result
    }

    /// Exact quotient self / divisor. The divisor's leading coefficient must
    /// be nonzero, and every step must divide exactly.
    pub fn div(&self, divisor: &IntSeries) -> Result<IntSeries> {
        let lead = divisor.coeffs[0].clone();
        if lead == 0 {
            return Err(Error::ZeroLeadingCoefficient);
        }
        let order = self.order().min(divisor.order());
        let terms: Vec<(usize, Integer)> = divisor
            .nonzero_terms()
            .into_iter()
            .filter(|(i, _)| *i > 0 && *i <= order)
            .map(|(i, c)| (i, c.clone()))
            .collect();
        let mut out: Vec<Integer> = Vec::with_capacity(order + 1);
        for n in 0..=order {
            let mut acc = self.coeffs[n].clone();
            for (i, c) in &terms {
                if *i > n {
                    break;
                }
                acc -= Integer::from(c * &out[n - i]);
            }
            if !acc.is_divisible(&lead) {
                return Err(Error::NonIntegralCoefficient {
                    index: n,
                    value: format!("{acc}/{lead}"),
                });
            }
            out.push(acc / &lead);
        }
        Ok(IntSeries::new(out))
    }

    /// Substitute q → q^d, keeping the truncation order.
    pub fn dilate(&self, d: usize) -> IntSeries {
        assert!(d >= 1);
        let order = self.order();
        let mut out = vec![Integer::new(); order + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            if k * d > order {
                break;
            }
            out[k * d] = c.clone();
        }
        IntSeries::new(out)
    }

    /// Multiply by q^shift, keeping the truncation order.
    pub fn shift(&self, shift: usize) -> IntSeries {
        let order = self.order();
        let mut out = vec![Integer::new(); order + 1];
        for k in shift..=order {
            out[k] = self.coeffs[k - shift].clone();
        }
        IntSeries::new(out)
    }
}

/// ∏_{n≥1}(1 − qⁿ) to order M from the pentagonal number theorem.
pub fn eta_coeffs(order: usize) -> IntSeries {
    let mut coeffs = vec![Integer::new(); order + 1];
    coeffs[0] = Integer::from(1);
    let mut k = 1usize;
    loop {
        let g1 = k * (3 * k - 1) / 2;
        if g1 > order {
            break;
        }
        let sign = if k % 2 == 1 { -1 } else { 1 };
        coeffs[g1] += sign;
        let g2 = k * (3 * k + 1) / 2;
        if g2 <= order {
            coeffs[g2] += sign;
        }
        k += 1;
    }
    IntSeries::new(coeffs)
}

/// ∏ η(dτ)^{e_d}.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EtaQuotientSpec {
    factors: Vec<(u32, i32)>,
}

impl EtaQuotientSpec {
    pub fn new(factors: Vec<(u32, i32)>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("empty eta quotient".into()));
        }
        for &(d, e) in &factors {
            if d == 0 || e == 0 {
                return Err(Error::Domain(format!("bad eta factor η({d}τ)^{e}")));
            }
        }
        Ok(EtaQuotientSpec { factors })
    }

    pub fn factors(&self) -> &[(u32, i32)] {
        &self.factors
    }

    /// Σ e_d / 2.
    pub fn weight(&self) -> Rational {
        Rational::from((self.factors.iter().map(|&(_, e)| e as i64).sum::<i64>(), 2))
    }

    /// Σ d·e_d / 24, the exponent of the leading q-power.
    pub fn leading_exponent(&self) -> Rational {
        Rational::from((
            self.factors
                .iter()
                .map(|&(d, e)| d as i64 * e as i64)
                .sum::<i64>(),
            24,
        ))
    }

    /// η(τ)²η(2τ)η(4τ)η(8τ)²
    pub fn form_f() -> Self {
        EtaQuotientSpec::new(vec![(1, 2), (2, 1), (4, 1), (8, 2)]).unwrap()
    }

    /// η(2τ)³η(6τ)³
    pub fn form_g() -> Self {
        EtaQuotientSpec::new(vec![(2, 3), (6, 3)]).unwrap()
    }

    /// η(4τ)⁶
    pub fn form_h() -> Self {
        EtaQuotientSpec::new(vec![(4, 6)]).unwrap()
    }

    /// η(4τ)⁹η(12τ)⁹ / (η(2τ)³η(6τ)³η(8τ)³η(24τ)³)
    pub fn form_g48() -> Self {
        EtaQuotientSpec::new(vec![(4, 9), (12, 9), (2, -3), (6, -3), (8, -3), (24, -3)]).unwrap()
    }
}

/// q-expansion of an eta quotient: q^{leading_exponent}·Σ_k product[k]·q^k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaExpansion {
    pub leading_exponent: Rational,
    pub product: IntSeries,
}

impl EtaExpansion {
    /// Absolute coefficients a(0..=M) when the leading exponent is a
    /// non-negative integer.
    pub fn q_expansion(&self) -> Option<IntSeries> {
        if !self.leading_exponent.is_integer() || self.leading_exponent < 0 {
            return None;
        }
        let shift = self.leading_exponent.numer().to_usize()?;
        Some(self.product.shift(shift))
    }
}

/// Exact expansion of ∏ η(dτ)^{e_d} to order M.
pub fn eta_quotient_coeffs(spec: &EtaQuotientSpec, order: usize) -> Result<EtaExpansion> {
    let mut numerator = IntSeries::one(order);
    let mut denominators = Vec::new();
    for &(d, e) in spec.factors() {
        let base = eta_coeffs(order).dilate(d as usize);
        if e > 0 {
            numerator = numerator.mul(&base.pow(e as u32));
        } else {
            denominators.push((base, e.unsigned_abs()));
        }
    }
    let mut product = numerator;
    for (base, e) in denominators {
        for _ in 0..e {
            product = product.div(&base)?;
        }
    }
    Ok(EtaExpansion {
        leading_exponent: spec.leading_exponent(),
        product,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::agreement_digits;

    #[test]
    fn cm_point_validation() {
        assert!(CMPoint::imaginary(0).is_err());
        assert!(CMPoint::imaginary(-1).is_err());
        let p = CMPoint::sqrt_neg(3, 3);
        assert_eq!(*p.im_sq(), Rational::from((1, 3)));
        assert_eq!(p.nome_sign().unwrap(), 1);
        let shifted = p.translate(&Rational::from((1, 2)));
        assert_eq!(shifted.nome_sign().unwrap(), -1);
        let odd = p.translate(&Rational::from((1, 3)));
        assert!(odd.nome(&PrecisionContext::new(10)).is_err());
    }

    #[test]
    fn nome_validation() {
        assert!(Nome::positive(Float::with_val(64, 0)).is_err());
        assert!(Nome::positive(Float::with_val(64, 1)).is_err());
        assert!(Nome::new(Float::with_val(64, 0.5), 0).is_err());
        let q = Nome::new(Float::with_val(64, 0.5), -1).unwrap();
        assert_eq!(q.pow(2).sign(), 1);
        assert_eq!(q.pow(3).sign(), -1);
    }

    #[test]
    fn eta_coeffs_small_orders() {
        assert_eq!(eta_coeffs(0).to_i64s(), vec![1]);
        assert_eq!(eta_coeffs(8).to_i64s(), vec![1, -1, -1, 0, 0, 1, 0, 1, 0]);
        assert_eq!(eta_coeffs(12).coeff(12).to_i64().unwrap(), -1);
    }

    #[test]
    fn series_division_errors() {
        let a = IntSeries::from_i64s(&[1, 2, 3]);
        let z = IntSeries::from_i64s(&[0, 1, 1]);
        assert!(matches!(a.div(&z), Err(Error::ZeroLeadingCoefficient)));
        let two = IntSeries::from_i64s(&[2, 1, 0]);
        assert!(matches!(a.div(&two), Err(Error::NonIntegralCoefficient { .. })));
        let p = eta_coeffs(30);
        assert_eq!(p.mul(&a.truncate(30)).div(&p).unwrap().truncate(2), a);
    }

    #[test]
    fn named_eta_quotients_start_correctly() {
        let h = eta_quotient_coeffs(&EtaQuotientSpec::form_h(), 9)
            .unwrap()
            .q_expansion()
            .unwrap();
        assert_eq!(h.to_i64s(), vec![0, 1, 0, 0, 0, -6, 0, 0, 0, 9]);
        let g48 = eta_quotient_coeffs(&EtaQuotientSpec::form_g48(), 9)
            .unwrap()
            .q_expansion()
            .unwrap();
        assert_eq!(g48.to_i64s(), vec![0, 1, 0, 3, 0, 0, 0, -2, 0, 9]);
        let g = eta_quotient_coeffs(&EtaQuotientSpec::form_g(), 9)
            .unwrap()
            .q_expansion()
            .unwrap();
        assert_eq!(g.to_i64s(), vec![0, 1, 0, -3, 0, 0, 0, 2, 0, 9]);
        assert_eq!(EtaQuotientSpec::form_f().weight(), 3);
        assert_eq!(EtaQuotientSpec::form_g48().weight(), 3);
    }

    #[test]
    fn non_integral_leading_exponent_has_no_q_expansion() {
        let eta = EtaQuotientSpec::new(vec![(1, 1)]).unwrap();
        let exp = eta_quotient_coeffs(&eta, 10).unwrap();
        assert_eq!(exp.leading_exponent, Rational::from((1, 24)));
        assert!(exp.q_expansion().is_none());
    }

    #[test]
    fn s_at_boundaries() {
        let ctx = PrecisionContext::new(30);
        for level in [Level::Two, Level::Three, Level::Four] {
            let q = level.q_boundary(&ctx);
            let s = s_level(level, &q, &ctx).unwrap();
            let target = Float::with_val(200, level.boundary_value());
            assert!(agreement_digits(s.value(), &target, 100) >= 30, "{level:?}");
        }
    }

    #[test]
    fn s_rejects_negative_nome() {
        let ctx = PrecisionContext::new(10);
        let q = Nome::new(Float::with_val(64, 0.01), -1).unwrap();
        assert!(s2(&q, &ctx).is_err());
        assert!(s3(&q, &ctx).is_err());
        assert!(s4(&q, &ctx).is_err());
    }

    #[test]
    fn invert_s_fixed_points_and_errors() {
        let ctx = PrecisionContext::new(30);
        let q = invert_s(Level::Two, &Float::with_val(64, 64), &ctx).unwrap();
        let e_pi = (-Float::with_val(200, Constant::Pi)).exp();
        assert!(agreement_digits(q.magnitude(), &e_pi, 100) >= 30);
        assert!(matches!(
            invert_s(Level::Three, &Float::with_val(64, 100), &ctx),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn g_series_small_nome_limit() {
        let ctx = PrecisionContext::new(40);
        let q = Nome::positive(Float::with_val(200, 10).pow(-30)).unwrap();
        let g = g_series(&q, &ctx).unwrap().into_inner();
        let log_q = Float::with_val(200, q.magnitude().ln_ref());
        assert!(Float::with_val(200, g + log_q).abs() < 1e-25);
    }
}
