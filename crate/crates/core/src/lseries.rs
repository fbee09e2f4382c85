//! Dirichlet L-values, weight-3 newform L-values by a smoothed sum, the
//! functional-equation conversions to L′(f,0) and L′(χ,−1), and the
//! Eisenstein–Kronecker double sums.

use std::fmt;
use std::sync::Arc;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::lattice::{theta_coeffs, CharLabel, ThetaFormSpec};
use crate::numkernel::{hurwitz_zeta, upper_incomplete_gamma, PrecisionContext, Real};
use crate::qseries::{eta_quotient_coeffs, CMPoint, EtaQuotientSpec, IntSeries, Level};

/// Where a newform's coefficients come from.
#[derive(Clone, Debug, PartialEq)]
pub enum CoeffSource {
    EtaQuotient(EtaQuotientSpec),
    Theta(ThetaFormSpec),
    /// Exact a(0..=M) supplied from outside.
    Ingested(Arc<IntSeries>),
}

/// A weight-3 newform with its functional-equation data.
#[derive(Clone, Debug, PartialEq)]
pub struct NewformSpec {
    label: String,
    level: u32,
    character: CharLabel,
    epsilon: i8,
    source: CoeffSource,
}

impl NewformSpec {
    pub fn new(
        label: impl Into<String>,
        level: u32,
        character: CharLabel,
        epsilon: i8,
        source: CoeffSource,
    ) -> Result<Self> {
        if level == 0 {
            return Err(Error::Domain("level must be positive".into()));
        }
        if epsilon != 1 && epsilon != -1 {
            return Err(Error::UnsupportedSign(epsilon as i32));
        }
        if let CoeffSource::Ingested(series) = &source {
            if series.order() < 1 || *series.coeff(1) != 1 {
                return Err(Error::InvalidCoefficients("a(1) must equal 1".into()));
            }
        }
        Ok(NewformSpec {
            label: label.into(),
            level,
            character,
            epsilon,
            source,
        })
    }

    /// The seven CM newforms, with coefficients from their theta recipes.
    pub fn named(label: &str) -> Result<Self> {
        let (level, d) = match label {
            "h" => (16, -4),
            "f" => (8, -8),
            "g" => (12, -3),
            "g48" => (48, -3),
            "g24_1" => (24, -24),
            "g24_2" => (24, -24),
            "g40" => (40, -40),
            other => return Err(Error::UnknownForm(other.to_string())),
        };
        let theta = ThetaFormSpec::named(label)?;
        NewformSpec::new(label, level, CharLabel::new(d)?, 1, CoeffSource::Theta(theta))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn character(&self) -> CharLabel {
        self.character
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    pub fn source(&self) -> &CoeffSource {
        &self.source
    }

    pub fn with_epsilon(&self, epsilon: i8) -> Result<Self> {
        NewformSpec::new(
            self.label.clone(),
            self.level,
            self.character,
            epsilon,
            self.source.clone(),
        )
    }

    pub fn with_source(&self, source: CoeffSource) -> Result<Self> {
        NewformSpec::new(self.label.clone(), self.level, self.character, self.epsilon, source)
    }

    /// a(0..=M).
    pub fn coefficients(&self, order: usize) -> Result<IntSeries> {
        match &self.source {
            CoeffSource::Theta(spec) => theta_coeffs(spec, order),
            CoeffSource::EtaQuotient(spec) => eta_quotient_coeffs(spec, order)?
                .q_expansion()
                .ok_or_else(|| {
                    Error::Domain(format!("{} has a fractional leading exponent", self.label))
                }),
            CoeffSource::Ingested(series) => {
                if series.order() < order {
                    return Err(Error::InsufficientCoefficients {
                        label: self.label.clone(),
                        required: order,
                        available: series.order(),
                    });
                }
                Ok(series.truncate(order))
            }
        }
    }
}

/// Which L-quantity a value represents.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LQuantity {
    NewformL3(String),
    NewformLPrime0(String),
    Dirichlet { d: i64, s: u32 },
    DirichletLPrimeMinus1(i64),
}

impl fmt::Display for LQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LQuantity::NewformL3(l) => write!(f, "L({l},3)"),
            LQuantity::NewformLPrime0(l) => write!(f, "L'({l},0)"),
            LQuantity::Dirichlet { d, s } => write!(f, "L(chi_{d},{s})"),
            LQuantity::DirichletLPrimeMinus1(d) => write!(f, "L'(chi_{d},-1)"),
        }
    }
}

/// An L-value with the method that produced it and an error bound.
#[derive(Clone, Debug)]
pub struct LValue {
    pub value: Real,
    pub quantity: LQuantity,
    pub method: &'static str,
    pub error_estimate: Float,
}

fn fundamental_modulus(d: CharLabel) -> Result<u64> {
    let r = d.d().rem_euclid(4);
    if r == 0 || r == 1 {
        Ok(d.modulus())
    } else {
        Err(Error::Domain(format!(
            "{d} is not periodic mod |D|; use a discriminant D ≡ 0, 1 (mod 4)"
        )))
    }
}

/// L(χ_D, s) = |D|^{−s}·Σ_{j=1}^{|D|} χ_D(j)·ζ(s, j/|D|).
pub fn dirichlet_l(d: CharLabel, s: u32, ctx: &PrecisionContext) -> Result<LValue> {
    if s < 2 {
        return Err(Error::Domain(format!("dirichlet_l needs s >= 2, got {s}")));
    }
    let modulus = fundamental_modulus(d)?;
    let wide = ctx.widened(8 + 64 - (modulus.leading_zeros()));
    let bits = wide.working_bits();
    let s_f = Float::with_val(bits, s);
    let mut sum = Float::new(bits);
    for j in 1..=modulus {
        let chi = d.chi(j as i64);
        if chi == 0 {
            continue;
        }
        let a = Rational::from((j, modulus));
        let z = hurwitz_zeta(&s_f, &a, &wide)?.into_inner();
        if chi > 0 {
            sum += z;
        } else {
            sum -= z;
        }
    }
    let value = sum / Float::with_val(bits, modulus).pow(s);
    let error = Float::with_val(ctx.working_bits(), value.abs_ref()) * ctx.epsilon();
    Ok(LValue {
        value: Real::new(Float::with_val(ctx.working_bits(), value))?,
        quantity: LQuantity::Dirichlet { d: d.d(), s },
        method: "hurwitz",
        error_estimate: error,
    })
}

/// L′(χ_D, −1) = |D|^{3/2}/(4π)·L(χ_D, 2) for odd χ_D.
pub fn dirichlet_lprime_minus1(d: CharLabel, ctx: &PrecisionContext) -> Result<LValue> {
    if !d.is_odd() {
        return Err(Error::Domain(format!("{d} is even; L′(χ,−1) = 0 conversion needs odd χ")));
    }
    let wide = ctx.widened(8);
    let bits = wide.working_bits();
    let l2 = dirichlet_l(d, 2, &wide)?.value.into_inner();
    let pi = Float::with_val(bits, Constant::Pi);
    let factor = Float::with_val(bits, d.modulus()).pow(3u32).sqrt() / (pi * 4u32);
    let value = Float::with_val(ctx.working_bits(), factor * l2);
    let error = Float::with_val(ctx.working_bits(), value.abs_ref()) * ctx.epsilon();
    Ok(LValue {
        value: Real::new(value)?,
        quantity: LQuantity::DirichletLPrimeMinus1(d.d()),
        method: "hurwitz+fe",
        error_estimate: error,
    })
}

/// Smallest K with Σ_{k>K} of the term majorant below 2^{−bits}.
///
/// Uses |a(k)| ≤ σ₁(k) ≤ k(1 + ln k), Γ(3,x) ≤ (x² + 2x + 2)e^{−x} and
/// E₁(x) ≤ e^{−x}/x.
pub fn required_terms(level: u32, working_bits: u32) -> usize {
    let sqrt_n = (level as f64).sqrt();
    let step = 2.0 * std::f64::consts::PI / sqrt_n;
    let c3 = step.powi(3) / 2.0;
    let target = -(working_bits as f64 + 8.0) * std::f64::consts::LN_2;
    let geometric = -(1.0 - (-step).exp()).ln();
    let mut k = 1usize;
    loop {
        let kf = k as f64;
        let x = step * kf;
        let gamma = (x * x + 2.0 * x + 2.0) / (2.0 * kf.powi(3));
        let e1 = c3 / x;
        let log_bound = (kf * (1.0 + kf.ln())).ln() + (gamma + e1).ln() - x + geometric;
        if log_bound < target {
            return k;
        }
        k += 1;
    }
}

/// L(f, 3) = Σ_k a(k)·[Γ(3, x_k)/(2k³) + ε·(2π/√N)³·E₁(x_k)/2],
/// x_k = 2πk/√N.
pub fn newform_l3(spec: &NewformSpec, ctx: &PrecisionContext) -> Result<LValue> {
    let k_max = required_terms(spec.level(), ctx.working_bits());
    newform_l3_truncated(spec, k_max, ctx)
}

/// The smoothed sum cut off at exactly `k_max` terms.
pub fn newform_l3_truncated(
    spec: &NewformSpec,
    k_max: usize,
    ctx: &PrecisionContext,
) -> Result<LValue> {
    let coeffs = spec.coefficients(k_max)?;
    let wide = ctx.widened(16);
    let bits = wide.working_bits();
    let pi = Float::with_val(bits, Constant::Pi);
    let sqrt_n = Float::with_val(bits, spec.level()).sqrt();
    let step = Float::with_val(bits, &pi * 2u32) / &sqrt_n;
    let e1_weight = Float::with_val(bits, (&step).pow(3u32)) / 2u32;
    let mut sum = Float::new(bits);
    for k in 1..=k_max {
        let a = coeffs.coeff(k);
        if *a == 0 {
            continue;
        }
        let x = Float::with_val(bits, &step * k as u32);
        let g3 = upper_incomplete_gamma(3, &x, &wide)?.into_inner();
        let e1 = upper_incomplete_gamma(0, &x, &wide)?.into_inner();
        let k3 = Float::with_val(bits, k).pow(3u32) * 2u32;
        let mut term = g3 / k3;
        let smoothed = Float::with_val(bits, &e1_weight * &e1);
        if spec.epsilon() > 0 {
            term += smoothed;
        } else {
            term -= smoothed;
        }
        sum += term * Float::with_val(bits, a);
    }
    let tail = tail_majorant(spec.level(), k_max);
    let error = Float::with_val(ctx.working_bits(), tail)
        + Float::with_val(ctx.working_bits(), sum.abs_ref()) * ctx.epsilon();
    Ok(LValue {
        value: Real::new(Float::with_val(ctx.working_bits(), sum))?,
        quantity: LQuantity::NewformL3(spec.label().to_string()),
        method: "smoothed-fe",
        error_estimate: error,
    })
}

/// Bound on the smoothed-sum tail beyond K, as an f64 (may underflow to 0).
fn tail_majorant(level: u32, k_max: usize) -> f64 {
    let step = 2.0 * std::f64::consts::PI / (level as f64).sqrt();
    let k = (k_max + 1) as f64;
    let x = step * k;
    let gamma = (x * x + 2.0 * x + 2.0) / (2.0 * k.powi(3));
    let e1 = step.powi(3) / (2.0 * x);
    k * (1.0 + k.ln()) * (gamma + e1) * (-x).exp() / (1.0 - (-step).exp())
}

/// L′(f, 0) = 2(√N/2π)³·L(f, 3) when ε = +1.
pub fn lprime0_from_l3(level: u32, epsilon: i8, l3: &Float, ctx: &PrecisionContext) -> Result<Real> {
    if epsilon != 1 {
        return Err(Error::UnsupportedSign(epsilon as i32));
    }
    let bits = ctx.working_bits() + 16;
    let pi = Float::with_val(bits, Constant::Pi);
    let ratio = Float::with_val(bits, level).sqrt() / (pi * 2u32);
    let factor = ratio.pow(3u32) * 2u32;
    Real::new(Float::with_val(ctx.working_bits(), factor * l3))
}

/// L′(f, 0) directly from the spec.
pub fn newform_lprime0(spec: &NewformSpec, ctx: &PrecisionContext) -> Result<LValue> {
    let wide = ctx.widened(8);
    let l3 = newform_l3(spec, &wide)?;
    let value = lprime0_from_l3(spec.level(), spec.epsilon(), l3.value.value(), ctx)?;
    let scale = value.to_f64().abs() / l3.value.to_f64().abs().max(f64::MIN_POSITIVE);
    let error = Float::with_val(ctx.working_bits(), &l3.error_estimate * scale)
        + Float::with_val(ctx.working_bits(), value.value().abs_ref()) * ctx.epsilon();
    Ok(LValue {
        value,
        quantity: LQuantity::NewformLPrime0(spec.label().to_string()),
        method: "smoothed-fe",
        error_estimate: error,
    })
}

/// Largest box half-width the Eisenstein–Kronecker evaluator will use.
pub const EK_DEFAULT_CAP: usize = 20_000;

/// Result of an Eisenstein–Kronecker evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EkSum {
    pub value: f64,
    pub error_estimate: f64,
    pub radius: usize,
}

/// The weighted double sum for one level, evaluated at τ over the box
/// |m|, |n| ≤ R with Richardson extrapolation in R.
///
/// `dilation` is 4, 3 or 2 for f₂, f₃, f₄ respectively.
pub fn eisenstein_kronecker(tau: &CMPoint, dilation: u32, digits: u32) -> Result<EkSum> {
    eisenstein_kronecker_capped(tau, dilation, digits, EK_DEFAULT_CAP)
}

pub fn eisenstein_kronecker_capped(
    tau: &CMPoint,
    dilation: u32,
    digits: u32,
    cap: usize,
) -> Result<EkSum> {
    let (level, weight, prefactor) = match dilation {
        4 => (Level::Two, 16.0, 2.0),
        3 => (Level::Three, 9.0, 15.0 / 4.0),
        2 => (Level::Four, 4.0, 10.0),
        other => {
            return Err(Error::Domain(format!("dilation must be 2, 3 or 4, got {other}")));
        }
    };
    if *tau.im_sq() < level.min_im_sq() {
        return Err(Error::Domain(format!(
            "Im(τ)² = {} is below {} for dilation {dilation}",
            tau.im_sq(),
            level.min_im_sq()
        )));
    }
    let re = tau.re().to_f64();
    let t = tau.im_sq().to_f64().sqrt();
    let j = dilation as f64;
    let kernel = move |m: f64, n: f64| -> f64 {
        let x = m * re + n;
        let r2 = x * x + m * m * t * t;
        (4.0 * x * x / r2 - 1.0) / (r2 * r2)
    };
    let summand = move |m: i64, n: i64| -> f64 {
        let (m, n) = (m as f64, n as f64);
        -kernel(m, n) + weight * kernel(j * m, n)
    };
    let scale = prefactor * t / std::f64::consts::PI.powi(3);
    let tol = 10f64.powi(-(digits as i32));

    let mut radius = 50usize;
    loop {
        if 4 * radius > cap {
            return Err(Error::PrecisionUnreachable(format!(
                "Eisenstein–Kronecker sum needs box radius beyond {cap} for {digits} digits"
            )));
        }
        let s = nested_box_sums(radius, summand);
        let r1 = (4.0 * s[1] - s[0]) / 3.0;
        let r2 = (4.0 * s[2] - s[1]) / 3.0;
        let value = scale * r2;
        let error = scale * (r2 - r1).abs();
        if error <= tol * value.abs().max(1.0) {
            return Ok(EkSum {
                value,
                error_estimate: error,
                radius: 4 * radius,
            });
        }
        radius *= 2;
    }
}

/// Sums over the boxes max(|m|,|n|) ≤ R, 2R, 4R, excluding the origin.
fn nested_box_sums(radius: usize, summand: impl Fn(i64, i64) -> f64) -> [f64; 3] {
    let r = radius as i64;
    let outer = 4 * r;
    let mut rings = [0.0f64; 3];
    let mut carries = [0.0f64; 3];
    for m in -outer..=outer {
        for n in -outer..=outer {
            if m == 0 && n == 0 {
                continue;
            }
            let size = m.abs().max(n.abs());
            let idx = if size <= r {
                0
            } else if size <= 2 * r {
                1
            } else {
                2
            };
            let y = summand(m, n) - carries[idx];
            let s = rings[idx] + y;
            carries[idx] = (s - rings[idx]) - y;
            rings[idx] = s;
        }
    }
    [rings[0], rings[0] + rings[1], rings[0] + rings[1] + rings[2]]
}
