use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rug::{Float, Rational};

use mahler_core::hyper::{pfq, pfq_unit, HyperParams};
use mahler_core::lattice::CharLabel;
use mahler_core::lseries::{dirichlet_l, dirichlet_lprime_minus1, newform_l3, newform_lprime0, NewformSpec};
use mahler_core::mahler::{f_at_k, mahler_integral, qk_mahler, Family, Integrand};
use mahler_core::numkernel::format_decimal;
use mahler_core::qseries::{g_series, s_level, CMPoint, Nome};
use mahler_core::verify::{self, Filter, RunOptions};
use mahler_core::PrecisionContext;

#[derive(Parser)]
#[command(name = "mahler", version, about = "Mahler measures, L-values and the identities between them")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run or list registered identities.
    Verify {
        #[command(subcommand)]
        action: VerifyAction,
    },
    /// Evaluate a single quantity.
    Eval(EvalArgs),
    /// Write the q-expansion of a built-in newform as a coefficient file.
    Coeffs {
        #[arg(long)]
        form: String,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate a Mahler measure by torus integration.
    Integrate {
        #[arg(long, value_enum)]
        family: IntegrandKind,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        k: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Sign of √k for the f2 family.
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        root_sign: i8,
    },
}

#[derive(Subcommand)]
enum VerifyAction {
    Run(RunArgs),
    List,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, conflicts_with = "filter")]
    id: Option<String>,
    /// Identity group, e.g. thm12, lemma22, conjectural.
    #[arg(long)]
    filter: Option<String>,
    /// Digit target; identities with a route cap use the smaller value.
    #[arg(long)]
    digits: Option<u32>,
    #[arg(long = "coeff-file")]
    coeff_files: Vec<PathBuf>,
    /// Write reports as JSON lines here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Report runtime_ms as 0 for byte-identical output.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuantityKind {
    #[value(name = "L3")]
    L3,
    #[value(name = "Lprime0")]
    Lprime0,
    Dirichlet,
    Pfq,
    F2,
    F3,
    F4,
    Qk,
    S2,
    S3,
    S4,
    #[value(name = "G")]
    G,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long, value_enum)]
    quantity: QuantityKind,
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    args: Vec<String>,
    #[arg(long, default_value_t = 30)]
    digits: u32,
    #[arg(long = "coeff-file")]
    coeff_files: Vec<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegrandKind {
    F2,
    F3,
    F4,
    Qk,
    Smyth,
}

/// Failures split by exit code.
enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<mahler_core::Error> for CliError {
    fn from(e: mahler_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { action } => match action {
            VerifyAction::Run(args) => verify_run(args),
            VerifyAction::List => verify_list(),
        },
        Command::Eval(args) => eval(args),
        Command::Coeffs { form, count, out } => coeffs(&form, count, out),
        Command::Integrate {
            family,
            k,
            samples,
            seed,
            root_sign,
        } => integrate(family, k, samples, seed, root_sign),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_forms(paths: &[PathBuf]) -> Result<RunOptions, CliError> {
    let mut opts = RunOptions::default();
    for path in paths {
        let form = verify::ingest_coeffs(path)?;
        for w in &form.warnings {
            eprintln!("warning: {w}");
        }
        opts = opts.with_form(form.spec);
    }
    Ok(opts)
}

fn verify_run(args: RunArgs) -> Result<u8, CliError> {
    let filter = match (args.id, args.filter) {
        (Some(id), _) => {
            verify::find_identity(&id).map_err(|e| usage(e.to_string()))?;
            Filter::Id(id)
        }
        (None, Some(g)) => {
            let groups = verify::groups();
            if g != "proved" && !groups.contains(&g.as_str()) {
                return Err(usage(format!("unknown group `{g}`; known: proved, {}", groups.join(", "))));
            }
            Filter::Group(g)
        }
        (None, None) => Filter::All,
    };
    let mut opts = load_forms(&args.coeff_files)?;
    opts.no_timing = args.no_timing;
    let summary = verify::run_all(args.digits, &filter, &opts)?;

    let mut lines = String::new();
    for r in &summary.reports {
        lines.push_str(&r.to_json());
        lines.push('\n');
        eprintln!(
            "{:<14} {:<20} {:>3}/{:<3} digits{}",
            r.id,
            r.status.to_string(),
            r.digits_agreed,
            r.target_digits,
            r.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default()
        );
    }
    match args.json {
        Some(path) => fs::write(&path, lines).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(lines.as_bytes()).context("writing reports")?,
    }
    Ok(summary.exit_code as u8)
}

fn verify_list() -> Result<u8, CliError> {
    for s in verify::registry() {
        let cap = s.digit_cap.map(|c| format!(" cap {c}")).unwrap_or_default();
        println!(
            "{:<14} {:<12} {:<11} {:>2} digits{cap}\n    {} = {}",
            s.id,
            s.group,
            format!("{:?}", s.status).to_lowercase(),
            s.default_digits,
            s.lhs,
            s.rhs
        );
    }
    Ok(0)
}

fn parse_rational(s: &str) -> Result<Rational, CliError> {
    s.parse::<Rational>()
        .map_err(|_| usage(format!("`{s}` is not a rational number (use p or p/q)")))
}

fn parse_i64(s: &str) -> Result<i64, CliError> {
    s.parse::<i64>().map_err(|_| usage(format!("`{s}` is not an integer")))
}

fn parse_list(s: &str) -> Result<Vec<Rational>, CliError> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| parse_rational(p.trim())).collect()
}

fn expect_args<'a>(args: &'a [String], n: usize, shape: &str) -> Result<&'a [String], CliError> {
    if args.len() != n {
        return Err(usage(format!("expected --args {shape}")));
    }
    Ok(args)
}

fn resolve_form(label: &str, opts: &RunOptions) -> Result<NewformSpec, CliError> {
    if let Some(spec) = opts.forms.get(label) {
        return Ok(spec.clone());
    }
    NewformSpec::named(label).map_err(|_| usage(format!("unknown form `{label}`; pass --coeff-file")))
}

fn eval(args: EvalArgs) -> Result<u8, CliError> {
    let ctx = PrecisionContext::new(args.digits);
    let opts = load_forms(&args.coeff_files)?;
    let a = &args.args;
    let (value, method): (Float, String) = match args.quantity {
        QuantityKind::L3 | QuantityKind::Lprime0 => {
            let a = expect_args(a, 1, "LABEL")?;
            let spec = resolve_form(&a[0], &opts)?;
            let v = if matches!(args.quantity, QuantityKind::L3) {
                newform_l3(&spec, &ctx)?
            } else {
                newform_lprime0(&spec, &ctx)?
            };
            (v.value.into_inner(), v.method.to_string())
        }
        QuantityKind::Dirichlet => {
            let a = expect_args(a, 2, "D S (S = -1 gives L'(chi_D,-1))")?;
            let d = CharLabel::new(parse_i64(&a[0])?).map_err(|e| usage(e.to_string()))?;
            let s = parse_i64(&a[1])?;
            let v = match s {
                -1 => dirichlet_lprime_minus1(d, &ctx)?,
                s if s >= 1 => dirichlet_l(d, s as u32, &ctx)?,
                _ => return Err(usage("S must be a positive integer or -1")),
            };
            (v.value.into_inner(), v.method.to_string())
        }
        QuantityKind::Pfq => {
            let a = expect_args(a, 3, "\"a1,a2,..\" \"b1,b2,..\" X")?;
            let x = parse_rational(&a[2])?;
            let params = HyperParams::new(parse_list(&a[0])?, parse_list(&a[1])?, x.clone())
                .map_err(|e| usage(e.to_string()))?;
            if x == 1 || x == -1 {
                let v = pfq_unit(&params, &ctx)?;
                (v.value.into_inner(), format!("levin-u (order {}, {} digits)", v.order, v.digits))
            } else {
                let v = pfq(&params, &ctx)?;
                (v.value.into_inner(), format!("pfq ({} terms)", v.terms))
            }
        }
        QuantityKind::F2 | QuantityKind::F3 | QuantityKind::F4 => {
            let a = expect_args(a, 1, "K")?;
            let family = match args.quantity {
                QuantityKind::F2 => Family::F2,
                QuantityKind::F3 => Family::F3,
                _ => Family::F4,
            };
            let v = f_at_k(family, &parse_rational(&a[0])?, &ctx)?;
            (v.value.into_inner(), v.route.tag().to_string())
        }
        QuantityKind::Qk => {
            let a = expect_args(a, 1, "K (the measure of Q_K)")?;
            let z = parse_rational(&a[0])? + 4;
            let v = qk_mahler(&z, &ctx)?;
            (v.value.into_inner(), v.route.tag().to_string())
        }
        QuantityKind::S2 | QuantityKind::S3 | QuantityKind::S4 => {
            let a = expect_args(a, 1, "T where tau = i*sqrt(T)")?;
            let family = match args.quantity {
                QuantityKind::S2 => Family::F2,
                QuantityKind::S3 => Family::F3,
                _ => Family::F4,
            };
            let tau = CMPoint::imaginary(parse_rational(&a[0])?).map_err(|e| usage(e.to_string()))?;
            let q = tau.nome(&ctx.widened(16))?;
            (s_level(family.level(), &q, &ctx)?.into_inner(), "eta-product".into())
        }
        QuantityKind::G => {
            let a = expect_args(a, 1, "Q with -1 < Q < 1")?;
            let q = parse_rational(&a[0])?;
            let sign = if q < 0 { -1 } else { 1 };
            let mag = Float::with_val(ctx.working_bits() + 16, &q).abs();
            let nome = Nome::new(mag, sign).map_err(|e| usage(e.to_string()))?;
            (g_series(&nome, &ctx)?.into_inner(), "gseries".into())
        }
    };
    println!("{}", format_decimal(&value, args.digits as usize));
    eprintln!("method: {method}");
    Ok(0)
}

fn coeffs(form: &str, count: usize, out: Option<PathBuf>) -> Result<u8, CliError> {
    if count == 0 {
        return Err(usage("--count must be positive"));
    }
    let spec = NewformSpec::named(form).map_err(|_| usage(format!("unknown form `{form}`")))?;
    let text = verify::format_coeffs(&spec, count)?;
    match out {
        Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn integrate(kind: IntegrandKind, k: f64, samples: u64, seed: u64, root_sign: i8) -> Result<u8, CliError> {
    if root_sign != 1 && root_sign != -1 {
        return Err(usage("--root-sign must be 1 or -1"));
    }
    let integrand = match kind {
        IntegrandKind::F2 => Integrand::F2 { k, root_sign },
        IntegrandKind::F3 => Integrand::F3 { k },
        IntegrandKind::F4 => Integrand::F4 { k },
        IntegrandKind::Qk => Integrand::Qk { k },
        IntegrandKind::Smyth => Integrand::Smyth,
    };
    let est = mahler_integral(integrand, samples, seed).map_err(|e| usage(e.to_string()))?;
    println!("{:.12}", est.value);
    eprintln!("std error: {:.3e} over {} batches", est.std_error, est.batch_means.len());
    Ok(0)
}
