use clap::{Args, Parser, Subcommand, ValueEnum};
use halo_core::decomp::{
    hensel_slope_factor, nh_decompose_finite, nh_decompose_noncommutative, slope_pairing_check, Decomposition,
};
use halo_core::halo::{
    assemble_up_matrix, char_series, coefficient_bound_check, halo_report, CharSeries, CoefficientBoundReport,
    UpAssembly, WeightProfile,
};
use halo_core::io::{
    assembly_from_json, character_from_json, fp_matrix_from_json, fp_matrix_to_json, format_element, format_fp,
    matrix_from_json, matrix_to_json, parse_fp, polygon_to_json, to_pretty,
};
use halo_core::mahler::{mahler_matrix, verify_lwx_bounds, Basis, CharacterSpec, DeltaShape, MonoidElement};
use halo_core::matrix::Matrix;
use halo_core::polygon::{
    hodge_polygon, lambda_check, newton_polygon, touching_vertices, Polygon, SlopeProfile, Q,
};
use halo_core::{Element, FpCtx, FpSeries, HaloError, RingDescriptor, RingElement, Valuation, Word};
use num_bigint::{BigInt, BigUint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

const DEFAULT_MINOR_CAP: u128 = 1 << 22;

/// Exact Newton–Hodge decompositions, Mahler-basis operators and halo scans.
#[derive(Parser)]
#[command(name = "halo", version)]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Newton or Hodge polygon of a square matrix.
    Polygon {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "newton")]
        mode: Mode,
        /// Largest number of minor pairs enumerated for Hodge values.
        #[arg(long, default_value_t = DEFAULT_MINOR_CAP)]
        cap: u128,
    },
    /// λ-flags and touching vertices of a matrix, or a seeded fuzz of the Mahler bounds.
    Check(CheckArgs),
    /// Newton–Hodge decomposition over F_p[[T]] at a touching vertex.
    Decompose {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        vertex: usize,
    },
    /// Decomposition over a group algebra, up to a power of the maximal ideal.
    DecomposeNc {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        vertex: usize,
        /// Exponent with `H(C,1) >= alpha` for the lower-left block.
        #[arg(long)]
        alpha: usize,
        /// Iteration budget; defaults to the p-precision.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Slope factorization of a polynomial over F_p[[T]] at slope `h`.
    Factor {
        /// `{"p", "t_prec", "coeffs": [c_0, c_1, ...]}` with coefficient strings.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_parser = parse_q)]
        slope: Q,
    },
    /// Slope pairing for `A B = T^k U`.
    Pairing {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Matrix of a monoid element on the (modified) Mahler basis.
    Mahler(MahlerArgs),
    /// Assembled compact operator in the modified basis.
    Assemble(AssemblyArgs),
    /// Characteristic series `det(I - XU)` of a matrix or an assembly.
    Charpoly(CharpolyArgs),
    /// Specialize an assembly's characteristic series over a grid of `v_p(T)`.
    Scan {
        #[command(flatten)]
        asm: AssemblyArgs,
        /// Comma list of rationals in (0, 1).
        #[arg(long, value_delimiter = ',', value_parser = parse_q, default_value = "1/4,1/3,1/2,2/3")]
        vt: Vec<Q>,
        #[arg(long, default_value_t = 12)]
        terms: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Newton,
    Hodge,
}

#[derive(Args)]
struct LambdaArgs {
    /// Comma list `λ_1,λ_2,...`.
    #[arg(long, value_delimiter = ',', conflicts_with = "profile")]
    lambda: Option<Vec<usize>>,
    /// `s,p`: generate `λ_n = ⌊n/s⌋ - ⌊n/(ps)⌋`.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    profile: Option<Vec<usize>>,
}

impl LambdaArgs {
    fn resolve(&self, len: usize) -> Result<SlopeProfile, HaloError> {
        match (&self.lambda, &self.profile) {
            (Some(l), _) => SlopeProfile::new(l.clone()),
            (None, Some(sp)) if sp.len() == 2 && sp[0] > 0 && sp[1] > 1 => {
                Ok(SlopeProfile::block_profile(sp[0], sp[1], len))
            }
            (None, Some(_)) => Err(HaloError::Parse("--profile takes s,p".into())),
            (None, None) => Err(HaloError::Parse("pass --lambda or --profile".into())),
        }
    }
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long = "in", required_unless_present = "lwx_fuzz")]
    input: Option<PathBuf>,
    #[command(flatten)]
    lambda: LambdaArgs,
    /// Number of random elements per shape for the Mahler bound fuzz.
    #[arg(long, conflicts_with = "input")]
    lwx_fuzz: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    p: u64,
    #[arg(long, default_value_t = 24)]
    size: usize,
    #[arg(long, default_value_t = DEFAULT_MINOR_CAP)]
    cap: u128,
}

#[derive(Args)]
struct MahlerArgs {
    /// `a,b,c,d`.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    delta: Vec<String>,
    #[arg(long, default_value_t = 3)]
    p: u64,
    #[arg(long, default_value_t = 8)]
    size: usize,
    /// `universal`, `trivial` or `file:<path>`.
    #[arg(long = "char", default_value = "universal")]
    character: String,
    #[arg(long, value_enum, default_value = "modified")]
    basis: BasisArg,
    #[arg(long)]
    p_prec: Option<u32>,
    #[arg(long)]
    t_prec: Option<usize>,
    /// Also check the valuation bounds entry by entry.
    #[arg(long)]
    bounds: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Plain,
    Modified,
}

#[derive(Args)]
struct AssemblyArgs {
    #[arg(long)]
    assembly: PathBuf,
    /// Basis size per block; defaults to the smallest allowed by the term count.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    p_prec: Option<u32>,
    #[arg(long)]
    t_prec: Option<usize>,
}

#[derive(Args)]
struct CharpolyArgs {
    #[arg(long = "in", conflicts_with = "assembly")]
    input: Option<PathBuf>,
    #[arg(long)]
    assembly: Option<PathBuf>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    p_prec: Option<u32>,
    #[arg(long)]
    t_prec: Option<usize>,
    #[arg(long, default_value_t = 8)]
    terms: usize,
    /// Bound profile for a plain matrix; assemblies use their own.
    #[command(flatten)]
    lambda: LambdaArgs,
}

fn parse_q(s: &str) -> Result<Q, String> {
    let s = s.trim();
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: i64 = n.trim().parse().map_err(|_| format!("bad rational {s}"))?;
    let d: i64 = d.trim().parse().map_err(|_| format!("bad rational {s}"))?;
    if d == 0 {
        return Err(format!("zero denominator in {s}"));
    }
    Ok(Q::new(n, d))
}

fn q_json(q: &Q) -> Value {
    json!([q.numer(), q.denom()])
}

fn valuation_json(v: &Valuation) -> Value {
    match v {
        Valuation::Exact(x) => json!(x),
        Valuation::AtLeastPrecision => json!("at-least-precision"),
    }
}

fn read_json(path: &Path) -> Result<Value, HaloError> {
    let text = std::fs::read_to_string(path).map_err(|e| HaloError::Parse(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| HaloError::Parse(format!("{}: {e}", path.display())))
}

/// Run output: the record plus warnings for the report envelope.
struct Outcome {
    result: Value,
    warnings: Vec<String>,
}

impl Outcome {
    fn plain(result: Value) -> Self {
        Outcome {
            result,
            warnings: vec![],
        }
    }
}

fn exit_status(e: &HaloError) -> (&'static str, u8) {
    use HaloError::*;
    match e {
        InvariantViolation(_)
        | ModifiedBasisOverflow { .. }
        | NoPairing(_)
        | GapViolation(_)
        | NotTouchingVertex(_)
        | HodgeSumMismatch(_)
        | NoSeparatingVertex(_)
        | HypothesisFailed(_)
        | ReductionHypothesisFailed(_) => ("invariant-violation", 2),
        PrecisionExhausted(_)
        | InsufficientGuardDigits { .. }
        | TailUnstable(_)
        | WindowTooSmall { .. }
        | IterationBudgetExceeded(_) => ("precision-exhausted", 3),
        _ => ("input-error", 4),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let command = command_name(&cli.cmd);
    let outcome = run(&cli.cmd);
    let (record, code) = match outcome {
        Ok(o) => (
            json!({"command": command, "status": "ok", "warnings": o.warnings, "result": o.result}),
            0u8,
        ),
        Err(e) => {
            let (status, code) = exit_status(&e);
            eprintln!("halo: {status}: {e}");
            (json!({"command": command, "status": status, "error": e.to_string()}), code)
        }
    };
    eprintln!("halo: elapsed {:.3}s", start.elapsed().as_secs_f64());
    let text = to_pretty(&record);
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("halo: cannot write {}: {e}", path.display());
                return ExitCode::from(4);
            }
        }
        None => print!("{text}"),
    }
    ExitCode::from(code)
}

fn command_name(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Polygon { .. } => "polygon",
        Cmd::Check(_) => "check",
        Cmd::Decompose { .. } => "decompose",
        Cmd::DecomposeNc { .. } => "decompose-nc",
        Cmd::Factor { .. } => "factor",
        Cmd::Pairing { .. } => "pairing",
        Cmd::Mahler(_) => "mahler",
        Cmd::Assemble(_) => "assemble",
        Cmd::Charpoly(_) => "charpoly",
        Cmd::Scan { .. } => "scan",
    }
}

fn run(cmd: &Cmd) -> Result<Outcome, HaloError> {
    match cmd {
        Cmd::Polygon { input, mode, cap } => polygon_cmd(input, *mode, *cap),
        Cmd::Check(a) => check_cmd(a),
        Cmd::Decompose { input, lambda, vertex } => decompose_cmd(input, lambda, *vertex),
        Cmd::DecomposeNc {
            input,
            lambda,
            vertex,
            alpha,
            budget,
        } => decompose_nc_cmd(input, lambda, *vertex, *alpha, *budget),
        Cmd::Factor { input, slope } => factor_cmd(input, *slope),
        Cmd::Pairing { a, b, u, k } => pairing_cmd(a, b, u, *k),
        Cmd::Mahler(a) => mahler_cmd(a),
        Cmd::Assemble(a) => assemble_cmd(a),
        Cmd::Charpoly(a) => charpoly_cmd(a),
        Cmd::Scan { asm, vt, terms } => scan_cmd(asm, vt, *terms),
    }
}

fn is_fp(v: &Value) -> bool {
    let ring = &v["ring"];
    ring["p_prec"].as_u64().unwrap_or(1) == 1 && ring["group"].is_null()
}

fn polygon_record(poly: &Polygon, warnings: &mut Vec<String>) -> Value {
    if poly.partial {
        warnings.push("PARTIAL: some values are only lower bounds".into());
    }
    polygon_to_json(poly)
}

fn polygon_cmd(input: &Path, mode: Mode, cap: u128) -> Result<Outcome, HaloError> {
    let v = read_json(input)?;
    let poly = match (is_fp(&v), mode) {
        (true, Mode::Newton) => newton_polygon(&fp_matrix_from_json(&v)?)?,
        (true, Mode::Hodge) => hodge_polygon(&fp_matrix_from_json(&v)?, cap)?,
        (false, Mode::Newton) => newton_polygon(&matrix_from_json::<u64>(&v)?)?,
        (false, Mode::Hodge) => hodge_polygon(&matrix_from_json::<u64>(&v)?, cap)?,
    };
    let mut warnings = vec![];
    let rec = polygon_record(&poly, &mut warnings);
    Ok(Outcome { result: rec, warnings })
}

fn check_cmd(a: &CheckArgs) -> Result<Outcome, HaloError> {
    if let Some(count) = a.lwx_fuzz {
        return lwx_fuzz(count, a.seed, a.p, a.size).map(Outcome::plain);
    }
    let input = a.input.as_ref().expect("clap requires --in");
    let v = read_json(input)?;
    if is_fp(&v) {
        let m = fp_matrix_from_json(&v)?;
        let lambda = a.lambda.resolve(m.rows())?;
        let flags = lambda_check(&m, &lambda)?;
        let touching = if flags.hodge_bounded && m.is_square() {
            Some(touching_vertices(&m, &lambda, a.cap)?)
        } else {
            None
        };
        Ok(Outcome::plain(json!({
            "hodge_bounded": flags.hodge_bounded,
            "strictly_hodge_bounded": flags.strictly_hodge_bounded,
            "lambda_stable": flags.lambda_stable,
            "touching_vertices": touching,
        })))
    } else {
        let m = matrix_from_json::<u64>(&v)?;
        let lambda = a.lambda.resolve(m.rows())?;
        let flags = lambda_check(&m, &lambda)?;
        Ok(Outcome::plain(json!({
            "hodge_bounded": flags.hodge_bounded,
            "strictly_hodge_bounded": flags.strictly_hodge_bounded,
            "lambda_stable": flags.lambda_stable,
        })))
    }
}

/// Random monoid elements of each bounded shape; entries in `[-50, 50)`.
pub fn random_delta(rng: &mut ChaCha8Rng, p: u64, shape: DeltaShape) -> MonoidElement {
    let pi = p as i64;
    loop {
        let unit = |rng: &mut ChaCha8Rng| loop {
            let x = rng.gen_range(-50..50i64);
            if x % pi != 0 {
                break x;
            }
        };
        let a = match shape {
            DeltaShape::PDividesA => pi * rng.gen_range(-16..17i64),
            DeltaShape::General => unit(rng),
        };
        let b = rng.gen_range(-50..50i64);
        let c = pi * rng.gen_range(-16..17i64);
        let d = unit(rng);
        if let Ok(m) = MonoidElement::new(a, b, c, d, p) {
            break m;
        }
    }
}

fn lwx_fuzz(count: usize, seed: u64, p: u64, size: usize) -> Result<Value, HaloError> {
    let prec = size as u32;
    if !<u64 as Word>::supports(p, prec) {
        return Err(HaloError::Invalid(format!("p^{prec} does not fit a machine word")));
    }
    let desc = RingDescriptor::<u64>::new(p, prec, size, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shapes = Vec::new();
    for shape in [DeltaShape::PDividesA, DeltaShape::General] {
        let (mut checked, mut unverified, mut violations) = (0usize, 0usize, Vec::new());
        for _ in 0..count {
            let d = random_delta(&mut rng, p, shape);
            let mm = mahler_matrix(&d, &CharacterSpec::universal(), &desc, size, Basis::Plain)?;
            let r = verify_lwx_bounds(&mm, &d);
            checked += r.checked;
            unverified += r.unverified;
            for v in r.violations {
                violations.push(json!({"delta": [d.a.to_string(), d.b.to_string(), d.c.to_string(), d.d.to_string()], "m": v.m, "n": v.n, "valuation": v.valuation, "bound": v.bound}));
            }
        }
        shapes.push(json!({
            "shape": format!("{shape:?}"),
            "elements": count,
            "entries_checked": checked,
            "entries_unverified": unverified,
            "violations": violations,
        }));
    }
    Ok(json!({"p": p, "size": size, "seed": seed, "shapes": shapes}))
}

fn decomposition_record<R: RingElement>(
    d: &Decomposition<R>,
    matrix: impl Fn(&Matrix<R>) -> Value,
) -> Value {
    let c = &d.certificates;
    let trace = d.trace.as_ref().map(|t| {
        json!({
            "step": t.step,
            "converged_at": t.converged_at,
            "lower_left": t.iterations.iter().map(|s| valuation_json(&s.lower_left_before)).collect::<Vec<_>>(),
            "gains": t.iterations.iter().map(|s| s.gain).collect::<Vec<_>>(),
            "depths": t.iterations.iter().map(|s| s.depth).collect::<Vec<_>>(),
        })
    });
    json!({
        "s": d.split,
        "W": matrix(&d.w),
        "result": matrix(&d.result),
        "certificates": {
            "w_lambda_stable": c.w_lambda_stable,
            "result_hodge_bounded": c.result_hodge_bounded,
            "residual_valuation": valuation_json(&c.residual_valuation),
            "round_trip": c.round_trip,
            "top_slopes_match": c.top_slopes_match,
            "congruence_depth": c.congruence_depth,
            "window_stable": c.window_stable,
            "all_ok": c.all_ok(),
        },
        "trace": trace,
    })
}

fn decompose_cmd(input: &Path, lambda: &LambdaArgs, vertex: usize) -> Result<Outcome, HaloError> {
    let v = read_json(input)?;
    if !is_fp(&v) {
        return Err(HaloError::Invalid("decompose works over F_p[[T]]; use decompose-nc for group rings".into()));
    }
    let m = fp_matrix_from_json(&v)?;
    let prof = lambda.resolve(m.rows())?;
    let d = nh_decompose_finite(&m, vertex, &prof)?;
    Ok(Outcome::plain(decomposition_record(&d, fp_matrix_to_json)))
}

fn decompose_nc_cmd(
    input: &Path,
    lambda: &LambdaArgs,
    vertex: usize,
    alpha: usize,
    budget: Option<usize>,
) -> Result<Outcome, HaloError> {
    let m = matrix_from_json::<u64>(&read_json(input)?)?;
    let prof = lambda.resolve(m.rows())?;
    let d = nh_decompose_noncommutative(&m, vertex, &prof, alpha, budget)?;
    Ok(Outcome::plain(decomposition_record(&d, matrix_to_json)))
}

fn factor_cmd(input: &Path, slope: Q) -> Result<Outcome, HaloError> {
    let v = read_json(input)?;
    let p = v["p"].as_u64().ok_or_else(|| HaloError::Parse("missing p".into()))?;
    let n = v["t_prec"].as_u64().ok_or_else(|| HaloError::Parse("missing t_prec".into()))? as usize;
    let ctx = FpCtx { p, t_prec: n };
    let coeffs: Vec<String> = serde_json::from_value(v["coeffs"].clone()).map_err(|e| HaloError::Parse(format!("coeffs: {e}")))?;
    let f: Vec<FpSeries> = coeffs.iter().map(|c| parse_fp(c, ctx)).collect::<Result<_, _>>()?;
    let (q, r) = hensel_slope_factor(&f, slope)?;
    let show = |x: &[FpSeries]| x.iter().map(format_fp).collect::<Vec<_>>();
    Ok(Outcome::plain(json!({"slope": q_json(&slope), "small": show(&q), "large": show(&r)})))
}

fn pairing_cmd(a: &Path, b: &Path, u: &Path, k: usize) -> Result<Outcome, HaloError> {
    let load = |p: &Path| read_json(p).and_then(|v| fp_matrix_from_json(&v));
    let r = slope_pairing_check(&load(a)?, &load(b)?, &load(u)?, k)?;
    Ok(Outcome::plain(json!({
        "k": r.k,
        "slopes_a": r.slopes_a.iter().map(q_json).collect::<Vec<_>>(),
        "slopes_b": r.slopes_b.iter().map(q_json).collect::<Vec<_>>(),
        "pairs": r.pairs.iter().map(|(x, y)| json!([q_json(x), q_json(y)])).collect::<Vec<_>>(),
    })))
}

fn character_arg(spec: &str, p: u64) -> Result<CharacterSpec, HaloError> {
    match spec.strip_prefix("file:") {
        Some(path) => character_from_json(&read_json(Path::new(path))?, p),
        None => character_from_json(&json!(spec), p),
    }
}

fn mahler_cmd(a: &MahlerArgs) -> Result<Outcome, HaloError> {
    if a.delta.len() != 4 {
        return Err(HaloError::Parse("--delta takes a,b,c,d".into()));
    }
    let e: Vec<BigInt> = a
        .delta
        .iter()
        .map(|x| x.trim().parse().map_err(|_| HaloError::Parse(format!("bad integer {x}"))))
        .collect::<Result<_, _>>()?;
    let d = MonoidElement::from_big([e[0].clone(), e[1].clone(), e[2].clone(), e[3].clone()], a.p)?;
    let chi = character_arg(&a.character, a.p)?;
    let m = a.p_prec.unwrap_or(a.size as u32 + 2);
    let n = a.t_prec.unwrap_or(a.size + 2);
    if <u64 as Word>::supports(a.p, m) {
        mahler_run::<u64>(a, &d, &chi, m, n)
    } else {
        mahler_run::<BigUint>(a, &d, &chi, m, n)
    }
}

fn mahler_run<W: Word>(a: &MahlerArgs, d: &MonoidElement, chi: &CharacterSpec, m: u32, n: usize) -> Result<Outcome, HaloError> {
    let desc = RingDescriptor::<W>::new(a.p, m, n, None)?;
    let basis = match a.basis {
        BasisArg::Plain => Basis::Plain,
        BasisArg::Modified => Basis::Modified,
    };
    let mm = mahler_matrix(d, chi, &desc, a.size, basis)?;
    let entries: Vec<Vec<String>> = (0..a.size)
        .map(|i| (0..a.size).map(|j| mm.entry(i, j).format()).collect())
        .collect();
    let mut result = json!({
        "ring": {"p": a.p, "p_prec": m, "t_prec": n, "group": Value::Null},
        "basis": match a.basis { BasisArg::Plain => "plain", BasisArg::Modified => "modified" },
        "delta": [d.a.to_string(), d.b.to_string(), d.c.to_string(), d.d.to_string()],
        "rows": a.size,
        "cols": a.size,
        "entries": entries,
    });
    if a.bounds {
        let plain = if matches!(a.basis, BasisArg::Plain) {
            mm
        } else {
            mahler_matrix(d, chi, &desc, a.size, Basis::Plain)?
        };
        let r = verify_lwx_bounds(&plain, d);
        result["bounds"] = json!({
            "shape": format!("{:?}", r.shape),
            "checked": r.checked,
            "unverified": r.unverified,
            "violations": r.violations.iter().map(|v| json!([v.m, v.n, v.valuation, v.bound])).collect::<Vec<_>>(),
            "passed": r.passed(),
        });
    }
    Ok(Outcome::plain(result))
}

/// Precision and size for an assembly: enough to see every `μ_n` for `n <= terms`.
fn assembly_setup(a: &AssemblyArgs, terms: usize) -> Result<(UpAssembly, usize, u32, usize), HaloError> {
    let asm = assembly_from_json(&read_json(&a.assembly)?)?;
    let mu = asm.weight_profile().mu(terms);
    let size = a.size.unwrap_or_else(|| (2 * terms).div_ceil(asm.s).max(2));
    let m = a.p_prec.unwrap_or(mu as u32 + 2);
    let n = a.t_prec.unwrap_or(mu + 2);
    Ok((asm, size, m, n))
}

fn assemble_cmd(a: &AssemblyArgs) -> Result<Outcome, HaloError> {
    let (asm, size, m, n) = assembly_setup(a, 4)?;
    let size = a.size.unwrap_or(size);
    if <u64 as Word>::supports(asm.p, m) {
        assemble_run::<u64>(&asm, size, m, n)
    } else {
        assemble_run::<BigUint>(&asm, size, m, n)
    }
}

fn assemble_run<W: Word>(asm: &UpAssembly, size: usize, m: u32, n: usize) -> Result<Outcome, HaloError> {
    let desc = RingDescriptor::<W>::new(asm.p, m, n, None)?;
    let op = assemble_up_matrix(asm, &desc, size)?;
    let entries: Vec<Vec<String>> = (0..op.dim())
        .map(|i| (0..op.dim()).map(|j| op.modified_entry(i, j).format()).collect())
        .collect();
    let mut warnings = vec![];
    if op.unverified > 0 {
        warnings.push(format!("{} entries have compactness bounds beyond the working precision", op.unverified));
    }
    Ok(Outcome {
        result: json!({
            "ring": {"p": asm.p, "p_prec": m, "t_prec": n, "group": Value::Null},
            "basis": "modified",
            "s": asm.s,
            "size": size,
            "degrees": op.degrees,
            "lambda": op.lambda,
            "rows": op.dim(),
            "cols": op.dim(),
            "entries": entries,
            "unverified": op.unverified,
        }),
        warnings,
    })
}

fn bound_record(r: &CoefficientBoundReport) -> Value {
    json!({
        "passed": r.passed(),
        "complete": r.statuses.iter().all(|s| s.complete),
        "tight": r.tight,
        "statuses": r.statuses.iter().map(|s| json!({"n": s.n, "mu": s.mu, "passed": s.passed, "complete": s.complete, "violation": s.violation})).collect::<Vec<_>>(),
    })
}

fn series_record<W: Word>(cs: &CharSeries<W>) -> Value {
    json!({
        "coeffs": cs.coeffs.iter().map(format_element).collect::<Vec<_>>(),
        "certified": cs.certified,
    })
}

fn charpoly_cmd(a: &CharpolyArgs) -> Result<Outcome, HaloError> {
    if let Some(path) = &a.assembly {
        let args = AssemblyArgs {
            assembly: path.clone(),
            size: a.size,
            p_prec: a.p_prec,
            t_prec: a.t_prec,
        };
        let (asm, size, m, n) = assembly_setup(&args, a.terms)?;
        return if <u64 as Word>::supports(asm.p, m) {
            assembly_series::<u64>(&asm, size, m, n, a.terms).map(|(cs, rep)| Outcome::plain(json!({"series": series_record(&cs), "bounds": bound_record(&rep)})))
        } else {
            assembly_series::<BigUint>(&asm, size, m, n, a.terms).map(|(cs, rep)| Outcome::plain(json!({"series": series_record(&cs), "bounds": bound_record(&rep)})))
        };
    }
    let path = a.input.as_ref().ok_or_else(|| HaloError::Parse("pass --in or --assembly".into()))?;
    let m: Matrix<Element> = matrix_from_json(&read_json(path)?)?;
    let c = m.charpoly_truncated(a.terms)?;
    let mut result = json!({"coeffs": c.iter().map(format_element).collect::<Vec<_>>()});
    if a.lambda.lambda.is_some() || a.lambda.profile.is_some() {
        let prof = a.lambda.resolve(a.terms.max(m.rows()))?;
        let mut mu = vec![0];
        for i in 0..a.terms.min(prof.len()) {
            mu.push(mu[i] + prof.get(i));
        }
        let cs = CharSeries::from_coeffs(c)?;
        result["bounds"] = bound_record(&coefficient_bound_check(&cs, &mu));
    }
    Ok(Outcome::plain(result))
}

fn assembly_series<W: Word>(
    asm: &UpAssembly,
    size: usize,
    m: u32,
    n: usize,
    terms: usize,
) -> Result<(CharSeries<W>, CoefficientBoundReport), HaloError> {
    let desc: Arc<RingDescriptor<W>> = RingDescriptor::new(asm.p, m, n, None)?;
    let op = assemble_up_matrix(asm, &desc, size)?;
    let cs = char_series(&op, terms)?;
    let rep = coefficient_bound_check(&cs, &op.profile.mu_sequence(terms));
    Ok((cs, rep))
}

fn scan_cmd(a: &AssemblyArgs, vt: &[Q], terms: usize) -> Result<Outcome, HaloError> {
    let (asm, size, m, n) = assembly_setup(a, terms)?;
    if <u64 as Word>::supports(asm.p, m) {
        scan_run::<u64>(&asm, size, m, n, vt, terms)
    } else {
        scan_run::<BigUint>(&asm, size, m, n, vt, terms)
    }
}

fn scan_run<W: Word>(asm: &UpAssembly, size: usize, m: u32, n: usize, vt: &[Q], terms: usize) -> Result<Outcome, HaloError> {
    let (cs, rep) = assembly_series::<W>(asm, size, m, n, terms)?;
    let h = halo_report(&cs, vt, asm.p)?;
    let mut warnings = vec![];
    if !h.flagged.is_empty() {
        warnings.push(format!("slope indices {:?} are uncertified at some grid point", h.flagged));
    }
    let tables: Vec<Value> = h
        .tables
        .iter()
        .map(|t| {
            json!({
                "v_t": q_json(&t.v_t),
                "values": t.values.iter().map(|v| json!({
                    "n": v.n,
                    "value": v.value.as_ref().map(q_json),
                    "lower_bound": q_json(&v.lower_bound),
                    "ambiguous": v.ambiguous,
                })).collect::<Vec<_>>(),
                "segments": t.segments.iter().map(|s| json!({
                    "start": s.start, "end": s.end, "slope": q_json(&s.slope), "certified": s.certified,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let families: Vec<Value> = h
        .families
        .iter()
        .map(|f| {
            let kind = match &f.kind {
                halo_core::halo::FamilyKind::Minus { level } => json!({"type": "-", "level": q_json(level)}),
                halo_core::halo::FamilyKind::Plus { l } => json!({"type": "+", "l": l}),
                halo_core::halo::FamilyKind::Fail => json!({"type": "FAIL"}),
            };
            json!({"start": f.start, "end": f.end, "kind": kind})
        })
        .collect();
    Ok(Outcome {
        result: json!({
            "p": asm.p,
            "s": asm.s,
            "size": size,
            "ring": {"p_prec": m, "t_prec": n},
            "profile": WeightProfile::single(asm.s, asm.p).mu_sequence(terms),
            "bounds": bound_record(&rep),
            "grid": vt.iter().map(q_json).collect::<Vec<_>>(),
            "tables": tables,
            "families": families,
            "flagged": h.flagged,
            "failures": h.failures,
            "plot": h.plot.iter().map(|(x, i, y)| json!([q_json(x), i, q_json(y)])).collect::<Vec<_>>(),
        }),
        warnings,
    })
}
