//! The three-variable Mahler measure families f₂, f₃, f₄ by hypergeometric
//! series, by Rogers' G-series at a nome, and by direct torus integration;
//! Bertin's family Q_k through Rogers' f₃ composition.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::hyper::{pfq, pfq_unit, HyperParams};
use crate::numkernel::{agreement_digits, PrecisionContext, Real};
use crate::qseries::{g_series, invert_s, s_level, CMPoint, Level, Nome};

/// Which of f₂, f₃, f₄.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    F2,
    F3,
    F4,
}

impl Family {
    pub fn from_u32(j: u32) -> Result<Self> {
        match j {
            2 => Ok(Family::F2),
            3 => Ok(Family::F3),
            4 => Ok(Family::F4),
            other => Err(Error::Domain(format!("family must be 2, 3 or 4, got {other}"))),
        }
    }

    pub fn index(self) -> u32 {
        match self {
            Family::F2 => 2,
            Family::F3 => 3,
            Family::F4 => 4,
        }
    }

    pub fn level(self) -> Level {
        match self {
            Family::F2 => Level::Two,
            Family::F3 => Level::Three,
            Family::F4 => Level::Four,
        }
    }

    /// Upper parameters a₁, a₂, a₃ of the ₅F₄.
    pub fn hyper_upper(self) -> [Rational; 3] {
        let r = |n: i32, d: i32| Rational::from((n, d));
        match self {
            Family::F2 => [r(3, 2), r(3, 2), r(3, 2)],
            Family::F3 => [r(4, 3), r(3, 2), r(5, 3)],
            Family::F4 => [r(5, 4), r(3, 2), r(7, 4)],
        }
    }

    /// (r₁, r₂) in f(k) = log k − (r₁/k)·₅F₄(…; r₂/k).
    pub fn hyper_constants(self) -> (u32, u32) {
        match self {
            Family::F2 => (8, 64),
            Family::F3 => (12, 108),
            Family::F4 => (24, 256),
        }
    }

    /// Smallest |k| for which the hypergeometric formula is asserted.
    pub fn hyper_threshold(self) -> u32 {
        match self {
            Family::F2 => 64,
            Family::F3 => 128,
            Family::F4 => 256,
        }
    }

    /// The dilation j in the Eisenstein–Kronecker sum for this family.
    pub fn dilation(self) -> u32 {
        match self {
            Family::F2 => 4,
            Family::F3 => 3,
            Family::F4 => 2,
        }
    }

    /// f_j(s_j(q)) = c₁·G(q) + c₂·G(q^d), as (c₁, c₂, d).
    fn g_combination(self) -> (Rational, Rational, u32) {
        let r = |n: i32, d: i32| Rational::from((n, d));
        match self {
            Family::F2 => (r(-1, 15), r(4, 15), 4),
            Family::F3 => (r(-1, 8), r(3, 8), 3),
            Family::F4 => (r(-1, 3), r(2, 3), 2),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.index())
    }
}

/// How a measure value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Route {
    Hyper,
    GSeries,
    Integral,
    Thm31,
}

impl Route {
    pub fn tag(self) -> &'static str {
        match self {
            Route::Hyper => "hyper",
            Route::GSeries => "gseries",
            Route::Integral => "integral",
            Route::Thm31 => "thm31",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A Mahler measure value with its provenance.
#[derive(Clone, Debug)]
pub struct MeasureResult {
    pub value: Real,
    pub route: Route,
    pub error_estimate: Float,
    /// Digits the route vouches for.
    pub digits: u32,
    /// s_j(q) for G-series results.
    pub s_value: Option<Real>,
}

fn relative_error(value: &Float, ctx: &PrecisionContext) -> Float {
    let mag = Float::with_val(ctx.working_bits(), value.abs_ref()).max(&Float::with_val(64, 1));
    mag * ctx.target_tolerance()
}

/// f_j(k) = log|k| − (r₁/k)·₅F₄(a; 2,2,2,2; r₂/k) for |k| at or above the
/// family's threshold.
pub fn f_hyper(family: Family, k: &Rational, ctx: &PrecisionContext) -> Result<MeasureResult> {
    let (r1, r2) = family.hyper_constants();
    let threshold = family.hyper_threshold();
    if Rational::from(k.abs_ref()) < threshold {
        return Err(Error::Domain(format!(
            "{family} hypergeometric formula needs |k| >= {threshold}, got {k}"
        )));
    }
    let wide = ctx.widened(16);
    let bits = wide.working_bits();
    let x = Rational::from(r2) / k.clone();
    let params = HyperParams::five_f_four(family.hyper_upper(), x.clone());
    let (series, digits) = if x == 1 || x == -1 {
        let v = pfq_unit(&params, ctx)?;
        let digits = v.digits.min(ctx.target_digits());
        (v.value.into_inner(), digits)
    } else {
        let v = pfq(&params, &wide)?;
        (v.value.into_inner(), ctx.target_digits())
    };
    let log_k = Float::with_val(bits, &Rational::from(k.abs_ref())).ln();
    let coeff = Float::with_val(bits, &(Rational::from(r1) / k.clone()));
    let value = Float::with_val(ctx.working_bits(), log_k - coeff * Float::with_val(bits, &series));
    let error = if digits >= ctx.target_digits() {
        relative_error(&value, ctx)
    } else {
        let mag = Float::with_val(ctx.working_bits(), value.abs_ref()).max(&Float::with_val(64, 1));
        mag * Float::with_val(64, 10).pow(-(digits as i32))
    };
    Ok(MeasureResult {
        value: Real::new(value)?,
        route: Route::Hyper,
        error_estimate: error,
        digits,
        s_value: None,
    })
}

fn check_strip(family: Family, q: &Nome, ctx: &PrecisionContext) -> Result<()> {
    if q.sign() < 0 {
        return Err(Error::Domain(format!("{family} G-series needs 0 < q < 1")));
    }
    let boundary = family.level().q_boundary(&ctx.widened(16));
    // allow rounding slack at the boundary itself
    let slack = Float::with_val(ctx.working_bits(), boundary.magnitude()) * ctx.epsilon() * 16u32;
    let limit = Float::with_val(ctx.working_bits(), boundary.magnitude() + slack);
    if *q.magnitude() > limit {
        return Err(Error::Domain(format!(
            "{family} G-series needs Im(τ)² >= {}, nome {} is outside",
            family.level().min_im_sq(),
            q.magnitude().to_string_radix(10, Some(10))
        )));
    }
    Ok(())
}

/// f_j(s_j(q)) from Rogers' G-series, q in the admissible strip.
pub fn f_gseries(family: Family, q: &Nome, ctx: &PrecisionContext) -> Result<MeasureResult> {
    check_strip(family, q, ctx)?;
    let wide = ctx.widened(16);
    let bits = wide.working_bits();
    let (c1, c2, d) = family.g_combination();
    let g1 = g_series(q, &wide)?.into_inner();
    let gd = g_series(&q.pow(d), &wide)?.into_inner();
    let value = Float::with_val(bits, &c1) * g1 + Float::with_val(bits, &c2) * gd;
    let value = Float::with_val(ctx.working_bits(), value);
    let s = s_level(family.level(), q, ctx)?;
    Ok(MeasureResult {
        error_estimate: relative_error(&value, ctx),
        value: Real::new(value)?,
        route: Route::GSeries,
        digits: ctx.target_digits(),
        s_value: Some(s),
    })
}

/// f_j at the nome of a CM point, with the strip checked exactly.
pub fn f_gseries_at(family: Family, tau: &CMPoint, ctx: &PrecisionContext) -> Result<MeasureResult> {
    let min = family.level().min_im_sq();
    if !tau.is_imaginary() || *tau.im_sq() < min {
        return Err(Error::Domain(format!(
            "{family} G-series needs τ = i·t with t² >= {min}, got {tau}"
        )));
    }
    f_gseries(family, &tau.nome(&ctx.widened(16))?, ctx)
}

/// Digits a unit-argument hypergeometric value is asked for when it is only
/// a cross-check against the G-series.
const UNIT_CROSS_CHECK_DIGITS: u32 = 8;

/// f_j(k) by the best available route; when both apply they must agree.
pub fn f_at_k(family: Family, k: &Rational, ctx: &PrecisionContext) -> Result<MeasureResult> {
    let level = family.level();
    let in_gseries = *k >= level.boundary_value();
    let in_hyper = Rational::from(k.abs_ref()) >= family.hyper_threshold();
    match (in_gseries, in_hyper) {
        (false, false) => Err(Error::Unroutable(format!(
            "{family}({k}): below the G-series range (k >= {}) and the hypergeometric range (|k| >= {})",
            level.boundary_value(),
            family.hyper_threshold()
        ))),
        (false, true) => f_hyper(family, k, ctx),
        (true, in_hyper) => {
            let wide = ctx.widened(16);
            let target = Float::with_val(wide.working_bits(), k);
            let q = invert_s(level, &target, &wide)?;
            let gs = f_gseries(family, &q, ctx)?;
            if in_hyper {
                let (_, r2) = family.hyper_constants();
                let unit = Rational::from(r2) == *k;
                let hctx = if unit {
                    PrecisionContext::new(ctx.target_digits().min(UNIT_CROSS_CHECK_DIGITS))
                } else {
                    *ctx
                };
                let hy = f_hyper(family, k, &hctx)?;
                let needed = hy.digits.min(gs.digits).saturating_sub(1);
                let got = agreement_digits(gs.value.value(), hy.value.value(), ctx.target_digits() + 10);
                if got < needed {
                    return Err(Error::RouteDisagreement {
                        what: format!("{family}({k})"),
                        a: gs.value.to_decimal(needed as usize + 5),
                        b: hy.value.to_decimal(needed as usize + 5),
                    });
                }
            }
            Ok(gs)
        }
    }
}

/// Rogers' composition m(Q_{z−4}) = −(1/15)f₃((16−z)³/z²) + (8/15)f₃(−(4−z)³/z).
///
/// Accepted for z ≥ 16 or z ≤ −32, the two branches on which the first
/// argument map is monotone, and only when both f₃ arguments are routable.
pub fn qk_mahler(z: &Rational, ctx: &PrecisionContext) -> Result<MeasureResult> {
    if !(*z >= 16 || *z <= -32) {
        return Err(Error::Unroutable(format!(
            "z = {z} lies between the branch points -32 and 16 of the composition"
        )));
    }
    let z2 = Rational::from(z.square_ref());
    let a1 = Rational::from(16 - z.clone()).pow(3u32) / z2;
    let a2 = -(Rational::from(4 - z.clone()).pow(3u32)) / z.clone();
    let wide = ctx.widened(8);
    let eval = |arg: &Rational, which: &str| -> Result<MeasureResult> {
        if *arg == 0 {
            return Ok(MeasureResult {
                value: Real::new(Float::with_val(wide.working_bits(), 0))?,
                route: Route::Thm31,
                error_estimate: Float::with_val(wide.working_bits(), 0),
                digits: wide.target_digits(),
                s_value: None,
            });
        }
        f_at_k(Family::F3, arg, &wide).map_err(|e| match e {
            Error::Unroutable(msg) => Error::Unroutable(format!("{which} argument f3({arg}): {msg}")),
            other => other.context(format!("{which} argument f3({arg})")),
        })
    };
    let m1 = eval(&a1, "first")?;
    let m2 = eval(&a2, "second")?;
    let bits = wide.working_bits();
    let value = Float::with_val(bits, m1.value.value()) * Float::with_val(bits, &Rational::from((-1, 15)))
        + Float::with_val(bits, m2.value.value()) * Float::with_val(bits, &Rational::from((8, 15)));
    let error = Float::with_val(ctx.working_bits(), &m1.error_estimate) / 15u32
        + Float::with_val(ctx.working_bits(), &m2.error_estimate) * 8u32 / 15u32;
    Ok(MeasureResult {
        value: Real::new(Float::with_val(ctx.working_bits(), value))?,
        route: Route::Thm31,
        error_estimate: error,
        digits: m1.digits.min(m2.digits).min(ctx.target_digits()),
        s_value: None,
    })
}

/// A polynomial whose measure the torus integrator can estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integrand {
    /// 2·m((x+1/x)(y+1/y)(z+1/z) + root) with root² = k.
    F2 { k: f64, root_sign: i8 },
    /// m((x+1/x)²(y+1/y)²(1+z)³/z² − k).
    F3 { k: f64 },
    /// 4·m(x⁴ + y⁴ + z⁴ + 1 + k^{1/4}·xyz), real fourth root.
    F4 { k: f64 },
    /// m(Q_k), Bertin's fourteen-term Laurent polynomial minus k.
    Qk { k: f64 },
    /// m(x + y + 1).
    Smyth,
}

impl Integrand {
    fn dimension(&self) -> usize {
        match self {
            Integrand::Smyth => 2,
            _ => 3,
        }
    }

    fn prefactor(&self) -> f64 {
        match self {
            Integrand::F2 { .. } => 2.0,
            Integrand::F4 { .. } => 4.0,
            _ => 1.0,
        }
    }

    /// |P(e^{2πiθ})| at a point of the unit cube.
    fn modulus(&self, theta: &[f64; 3]) -> f64 {
        use std::f64::consts::TAU;
        let [a, b, c] = theta.map(|t| t * TAU);
        match *self {
            Integrand::F2 { k, root_sign } => {
                let prod = 8.0 * a.cos() * b.cos() * c.cos();
                let root = k.abs().sqrt() * root_sign as f64;
                if k >= 0.0 {
                    (prod + root).abs()
                } else {
                    prod.hypot(root)
                }
            }
            Integrand::F3 { k } => {
                // (1+z)³/z² = (2cos(c/2))³·e^{−ic/2} on |z| = 1
                let mag = 16.0 * a.cos().powi(2) * b.cos().powi(2) * 8.0 * (c / 2.0).cos().powi(3);
                let re = mag * (c / 2.0).cos() - k;
                let im = -mag * (c / 2.0).sin();
                re.hypot(im)
            }
            Integrand::F4 { k } => {
                let root = k.abs().powf(0.25) * if k < 0.0 { -1.0 } else { 1.0 };
                let re = (4.0 * a).cos() + (4.0 * b).cos() + (4.0 * c).cos() + 1.0 + root * (a + b + c).cos();
                let im = (4.0 * a).sin() + (4.0 * b).sin() + (4.0 * c).sin() + root * (a + b + c).sin();
                re.hypot(im)
            }
            Integrand::Qk { k } => {
                let s = a.cos() + b.cos() + c.cos() + (a + b).cos() + (b + c).cos() + (a + c).cos() + (a + b + c).cos();
                (2.0 * s - k).abs()
            }
            Integrand::Smyth => {
                let re = 1.0 + a.cos() + b.cos();
                let im = a.sin() + b.sin();
                re.hypot(im)
            }
        }
    }
}

/// Number of independently shifted batches in a torus estimate.
pub const QMC_BATCHES: usize = 16;

/// Result of a torus integration.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub std_error: f64,
    pub batch_means: Vec<f64>,
}

/// m(P) by a randomly shifted Kronecker lattice rule: 16 batches with
/// Cranley–Patterson shifts drawn from `seed + batch`, combined by median.
pub fn mahler_integral(poly: Integrand, samples: u64, seed: u64) -> Result<IntegralEstimate> {
    if samples < 10_000 {
        return Err(Error::Domain(format!("need at least 10000 samples, got {samples}")));
    }
    let per_batch = samples / QMC_BATCHES as u64;
    let alpha = [2f64.sqrt().fract(), 3f64.sqrt().fract(), 5f64.sqrt().fract()];
    let dim = poly.dimension();
    let batch_means: Vec<f64> = (0..QMC_BATCHES as u64)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(batch));
            let shift: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            let mut sum = 0.0f64;
            let mut carry = 0.0f64;
            for i in 0..per_batch {
                let mut theta = [0.0f64; 3];
                for d in 0..dim {
                    theta[d] = (shift[d] + i as f64 * alpha[d]).fract();
                }
                let mut modulus = poly.modulus(&theta);
                let mut jitter = 0;
                while !(modulus > 1e-300) && jitter < 8 {
                    // a zero of P: nudge off it deterministically
                    jitter += 1;
                    for t in theta.iter_mut().take(dim) {
                        *t = (*t + 1e-9 * jitter as f64).fract();
                    }
                    modulus = poly.modulus(&theta);
                }
                let y = modulus.max(1e-300).ln() - carry;
                let t = sum + y;
                carry = (t - sum) - y;
                sum = t;
            }
            poly.prefactor() * sum / per_batch as f64
        })
        .collect();
    let mut sorted = batch_means.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite batch means"));
    let median = (sorted[QMC_BATCHES / 2 - 1] + sorted[QMC_BATCHES / 2]) / 2.0;
    let mean = batch_means.iter().sum::<f64>() / QMC_BATCHES as f64;
    let var = batch_means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (QMC_BATCHES as f64 - 1.0);
    Ok(IntegralEstimate {
        value: median,
        std_error: (var / QMC_BATCHES as f64).sqrt(),
        batch_means,
    })
}

impl IntegralEstimate {
    pub fn into_measure(self) -> Result<MeasureResult> {
        let digits = if self.std_error > 0.0 {
            (-(self.std_error / self.value.abs().max(1.0)).log10()).floor().max(0.0) as u32
        } else {
            15
        };
        Ok(MeasureResult {
            value: Real::from_f64(self.value, 53)?,
            route: Route::Integral,
            error_estimate: Float::with_val(53, self.std_error),
            digits,
            s_value: None,
        })
    }
}
