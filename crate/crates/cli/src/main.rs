//! `covalg`: JSON in, JSON report out.
//!
//! Exit codes: 0 when every requested check passes, 1 when a check fails,
//! 2 when the input cannot be read.

mod input;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use covalg_core::circle::TrigPolynomial;
use covalg_core::corpus::{example_2_3, example_3_1, shift_fixture, trivial_fixture};
use covalg_core::covariant::{verify_covariant, CovariantRep, Embedding};
use covalg_core::crossed::{property_star_check, CrossedProduct, CrossedProductElement};
use covalg_core::dynamics::topological_freedom_check;
use covalg_core::interactions::{derive_dual_from_projections, derive_dual_from_rep, Interaction, DEFAULT_X_MAX};
use covalg_core::{FiniteCStarAlgebra, Tolerance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use input::{fixture, load_element, load_interaction, load_rep, InputError};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Serialize)]
#[command(name = "covalg", version, about = "Checks for interactions, covariant representations and crossed products")]
struct Cli {
    /// Absolute tolerance on operator-norm residuals.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for every random sample.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random samples per identity.
    #[arg(long, global = true, default_value_t = 50)]
    samples: usize,
    #[arg(long = "x-max", visible_alias = "xmax", global = true)]
    x_max: Option<u32>,
    #[arg(long = "max-k", global = true, default_value_t = 3)]
    max_k: u32,
    /// Window `W` of the truncated regular representation.
    #[arg(long, global = true)]
    window: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize, Clone, Default)]
struct Sources {
    /// Interaction document `{"algebra", "V", "H" | "U1", ...}`.
    #[arg(long)]
    interaction: Option<PathBuf>,
    /// Built-in fixture instead of files: `shift:N` or `trivial`.
    #[arg(long)]
    fixture: Option<String>,
    /// Representation document `{"hilbert_dim", "sigma_images"?, "U1"}`.
    #[arg(long)]
    rep: Option<PathBuf>,
    /// Crossed-product element, a list of monomials.
    #[arg(long)]
    element: Option<PathBuf>,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Items (i)-(iv) for x = 1..=x_max.
    CheckInteraction(Sources),
    /// Completeness identities and commuting unit projections.
    CheckComplete(Sources),
    /// Reconstruct H from V and U1, or from V and the projections P.
    DeriveDual(Sources),
    /// Covariance of a representation against an interaction.
    VerifyRep(Sources),
    /// Norm enclosure of a crossed-product element.
    Norm(Sources),
    /// ‖E₀(a)‖ ≤ ‖(σ×U)(a)‖ for one element.
    PropertyStar(Sources),
    /// Fixed points of the induced partial dynamics.
    Topfree(Sources),
    /// Run a built-in example.
    Example(ExampleArgs),
}

#[derive(Args, Serialize)]
struct ExampleArgs {
    name: ExampleName,
    /// Weight for ex31: `half` or `sine`.
    #[arg(long, default_value = "half")]
    rho: String,
    /// Largest n for ex31, size for shift.
    #[arg(long)]
    n: Option<u32>,
    /// Grid size for ex31.
    #[arg(long, default_value_t = 1024)]
    grid: usize,
}

#[derive(Copy, Clone, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ExampleName {
    Ex23,
    Ex31,
    Shift,
    Trivial,
}

enum Failure {
    Input(String),
    Check(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.0)
    }
}

impl From<covalg_core::Error> for Failure {
    fn from(e: covalg_core::Error) -> Self {
        Failure::Check(e.to_string())
    }
}

type Outcome = Result<(bool, Value), Failure>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

struct Ctx {
    tol: Tolerance,
    samples: usize,
    x_max: Option<u32>,
    max_k: u32,
    window: Option<u32>,
    rng: ChaCha8Rng,
}

struct Resolved {
    algebra: FiniteCStarAlgebra,
    interaction: Option<Interaction>,
    rep: Option<CovariantRep>,
    doc_x_max: Option<u32>,
}

impl Resolved {
    fn interaction(&self) -> Result<&Interaction, Failure> {
        self.interaction
            .as_ref()
            .ok_or_else(|| Failure::Input("this command needs an interaction with \"H\" or \"U1\"".into()))
    }

    fn rep(&self) -> Result<&CovariantRep, Failure> {
        self.rep
            .as_ref()
            .ok_or_else(|| Failure::Input("this command needs --rep or a fixture".into()))
    }
}

fn resolve(src: &Sources, ctx: &mut Ctx) -> Result<Resolved, Failure> {
    let mut out = match (&src.fixture, &src.interaction) {
        (Some(name), None) => {
            let (algebra, interaction, rep) = fixture(name)?;
            Resolved {
                algebra,
                interaction: Some(interaction),
                rep: Some(rep),
                doc_x_max: None,
            }
        }
        (None, Some(path)) => {
            let doc = load_interaction(path, ctx.tol, &mut ctx.rng)?;
            let interaction = doc.interaction().ok();
            // A document with `U1` also defines the representation on ⊕ℂ^{nᵢ}.
            let rep = match &doc.u1 {
                Some(u) => Some(CovariantRep::new(Embedding::inclusion(&doc.algebra), u.clone(), ctx.tol)?),
                None => None,
            };
            Resolved {
                algebra: doc.algebra,
                interaction,
                rep,
                doc_x_max: doc.x_max,
            }
        }
        (Some(_), Some(_)) => return Err(Failure::Input("give either --fixture or --interaction".into())),
        (None, None) => return Err(Failure::Input("missing --interaction or --fixture".into())),
    };
    if let Some(path) = &src.rep {
        out.rep = Some(load_rep(path, &out.algebra, ctx.tol)?);
    }
    Ok(out)
}

fn x_max(ctx: &Ctx, r: &Resolved) -> u32 {
    ctx.x_max.or(r.doc_x_max).unwrap_or(DEFAULT_X_MAX)
}

fn element(src: &Sources, algebra: &FiniteCStarAlgebra) -> Result<CrossedProductElement, Failure> {
    let path = src
        .element
        .as_ref()
        .ok_or_else(|| Failure::Input("missing --element".into()))?;
    Ok(load_element(path, algebra)?)
}

fn run(command: &Command, ctx: &mut Ctx) -> Outcome {
    match command {
        Command::CheckInteraction(src) => {
            let r = resolve(src, ctx)?;
            let xm = x_max(ctx, &r);
            let report = r.interaction()?.check_interaction(xm, ctx.samples, ctx.tol, &mut ctx.rng);
            Ok((report.passed(), to_value(&report)))
        }
        Command::CheckComplete(src) => {
            let r = resolve(src, ctx)?;
            let xm = x_max(ctx, &r);
            let report = r.interaction()?.check_complete(xm, ctx.samples, ctx.tol, &mut ctx.rng)?;
            Ok((report.passed(), to_value(&report)))
        }
        Command::DeriveDual(src) => derive_dual(src, ctx),
        Command::VerifyRep(src) => {
            let r = resolve(src, ctx)?;
            let xm = x_max(ctx, &r);
            let rep = r.rep()?;
            let report = verify_covariant(rep, r.interaction()?, xm, ctx.samples, ctx.tol, &mut ctx.rng)?;
            let powers = rep.certify_all_powers(ctx.tol);
            Ok((report.passed(), json!({"report": report, "powers": powers})))
        }
        Command::Norm(src) => {
            let r = resolve(src, ctx)?;
            let a = element(src, &r.algebra)?;
            let i = r.interaction()?;
            let cp = CrossedProduct::new(i);
            let enclosure = cp.norm_enclosure(&a, ctx.max_k)?;
            let mut result = json!({"mode": cp.mode(), "enclosure": enclosure});
            let mut passed = enclosure.lower <= enclosure.upper + ctx.tol.eps;
            if let (Some(w), Some(rep)) = (ctx.window, &r.rep) {
                let m = rep.amplify_regular(w).evaluate(&a)?;
                let n = covalg_core::algebra::op_norm(&m);
                passed &= enclosure.lower <= n + ctx.tol.eps && n <= enclosure.upper + ctx.tol.eps;
                result["amplified_norm"] = json!(n);
                result["window"] = json!(w);
            }
            Ok((passed, result))
        }
        Command::PropertyStar(src) => {
            let r = resolve(src, ctx)?;
            let a = element(src, &r.algebra)?;
            let p = property_star_check(r.rep()?, &a, ctx.tol)?;
            Ok((p.holds, to_value(&p)))
        }
        Command::Topfree(src) => {
            let r = resolve(src, ctx)?;
            let xm = x_max(ctx, &r);
            let tf = topological_freedom_check(r.interaction()?, xm, ctx.tol)?;
            Ok((tf.verdict, to_value(&tf)))
        }
        Command::Example(args) => example(args, ctx),
    }
}

fn derive_dual(src: &Sources, ctx: &mut Ctx) -> Outcome {
    let path = src
        .interaction
        .as_ref()
        .ok_or_else(|| Failure::Input("derive-dual needs --interaction".into()))?;
    let doc = load_interaction(path, ctx.tol, &mut ctx.rng)?;
    let mut result = serde_json::Map::new();
    let from_rep = match &doc.u1 {
        Some(u) => {
            let h = derive_dual_from_rep(&doc.v, u, ctx.tol)?;
            result.insert("from_rep".into(), json!({"H": h.generator().to_spec()}));
            Some(h)
        }
        None => None,
    };
    let mut passed = true;
    if let Some(ps) = &doc.p {
        let table = derive_dual_from_projections(&doc.v, ps, ctx.tol)?;
        let maps: Vec<Value> = (0..=table.x_max())
            .map(|x| to_value(&table.map(x).expect("in range").to_spec()))
            .collect();
        let mut entry = json!({
            "maps": maps,
            "solve_residual": table.solve_residual,
            "sigma_min": table.sigma_min,
        });
        if let Some(h) = &from_rep {
            let deviation = (1..=table.x_max())
                .flat_map(|x| doc.algebra.basis().into_iter().map(move |e| (x, e)))
                .map(|(x, e)| table.apply(x, &e).expect("in range").distance(&h.apply(x, &e)))
                .fold(0.0, f64::max);
            passed &= ctx.tol.holds(deviation);
            entry["deviation_from_rep"] = json!(deviation);
        }
        result.insert("from_projections".into(), entry);
    }
    if result.is_empty() {
        return Err(Failure::Input("derive-dual needs \"U1\" or \"P\" in the document".into()));
    }
    Ok((passed, Value::Object(result)))
}

fn example(args: &ExampleArgs, ctx: &mut Ctx) -> Outcome {
    let tol = ctx.tol;
    match args.name {
        ExampleName::Ex23 => {
            let ex = example_2_3();
            let x1 = ex.pair.check_interaction(1, ctx.samples, tol, &mut ctx.rng);
            let x2 = ex.pair.check_interaction(2, ctx.samples, tol, &mut ctx.rng);
            let v1 = ex.pair.v_unit(1);
            let h1 = ex.pair.h_unit(1);
            let commutator_norm = v1.mul(&h1).sub(&h1.mul(&v1)).norm();
            let ii = x2.find("axiom_ii", Some(2), None).map(|c| c.residual_at_unit).unwrap_or(f64::NAN);
            let matches = x1.passed()
                && !x2.passed()
                && (ii - ex.expected.axiom_ii_residual_at_x2).abs() <= tol.eps
                && (commutator_norm - ex.expected.commutator_norm).abs() <= tol.eps;
            Ok((
                matches,
                json!({
                    "x1": x1,
                    "x2": x2,
                    "axiom_ii_residual_at_unit_x2": ii,
                    "commutator_norm": commutator_norm,
                    "expected": ex.expected,
                    "matches_expected": matches,
                }),
            ))
        }
        ExampleName::Ex31 => {
            let rho = TrigPolynomial::named(&args.rho)
                .ok_or_else(|| Failure::Input(format!("unknown rho {:?}; use half or sine", args.rho)))?;
            let n = args.n.unwrap_or(2);
            let ex = example_3_1(rho, n, args.grid, ctx.samples.min(20), ctx_seed(ctx))?;
            let passed = ex.report.interaction.passed() && ex.report.completeness_fails;
            Ok((passed, json!({"rho": args.rho, "n_max": n, "grid": args.grid, "report": ex.report})))
        }
        ExampleName::Shift => {
            let n = args.n.unwrap_or(4) as usize;
            let (_, i, rep) = shift_fixture(n)?;
            let xm = ctx.x_max.unwrap_or(DEFAULT_X_MAX);
            let ci = i.check_interaction(xm, ctx.samples, tol, &mut ctx.rng);
            let cc = i.check_complete(xm, ctx.samples, tol, &mut ctx.rng)?;
            let vc = verify_covariant(&rep, &i, xm, ctx.samples, tol, &mut ctx.rng)?;
            let tf = topological_freedom_check(&i, xm, tol)?;
            let passed = ci.passed() && cc.passed() && vc.passed() && tf.verdict;
            Ok((
                passed,
                json!({
                    "n": n,
                    "check_interaction": ci,
                    "check_complete": cc,
                    "verify_covariant": vc,
                    "topological_freedom": tf,
                }),
            ))
        }
        ExampleName::Trivial => {
            let (alg, i, rep) = trivial_fixture();
            let a = CrossedProductElement::one(&alg).sub(&CrossedProductElement::u(&alg, 1))?;
            let star = property_star_check(&rep, &a, tol)?;
            let tf = topological_freedom_check(&i, ctx.x_max.unwrap_or(DEFAULT_X_MAX), tol)?;
            let matches = !star.holds && !tf.verdict;
            Ok((
                matches,
                json!({
                    "element": a.to_json(),
                    "property_star": star,
                    "topological_freedom": tf,
                    "expected": "property (*) fails on 1 - U1 and every block is fixed",
                    "matches_expected": matches,
                }),
            ))
        }
    }
}

fn ctx_seed(ctx: &mut Ctx) -> u64 {
    use rand::RngCore;
    ctx.rng.next_u64()
}

fn emit(v: &Value) {
    use std::io::Write;
    // A closed pipe (e.g. `| head`) is not an error worth a panic.
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("json"));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            emit(&json!({"schema_version": SCHEMA_VERSION, "error": e.to_string().trim()}));
            return ExitCode::from(2);
        }
    };
    let tol = match Tolerance::new(cli.tol) {
        Ok(t) => t,
        Err(e) => {
            emit(&json!({"schema_version": SCHEMA_VERSION, "error": e.to_string()}));
            return ExitCode::from(2);
        }
    };
    let mut ctx = Ctx {
        tol,
        samples: cli.samples.max(1),
        x_max: cli.x_max,
        max_k: cli.max_k.max(1),
        window: cli.window,
        rng: ChaCha8Rng::seed_from_u64(cli.seed),
    };
    let start = Instant::now();
    let outcome = run(&cli.command, &mut ctx);
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let command = to_value(&cli.command);
    let name = command
        .as_object()
        .and_then(|o| o.keys().next().cloned())
        .unwrap_or_default();
    let args = json!({
        "tol": cli.tol,
        "seed": cli.seed,
        "samples": cli.samples,
        "x_max": cli.x_max,
        "max_k": cli.max_k,
        "window": cli.window,
        "command": command,
    });
    let (code, passed, result) = match outcome {
        Ok((passed, result)) => (if passed { 0 } else { 1 }, passed, result),
        Err(Failure::Check(msg)) => (1, false, json!({"error": msg})),
        Err(Failure::Input(msg)) => {
            emit(&json!({"schema_version": SCHEMA_VERSION, "command": name, "error": msg}));
            return ExitCode::from(2);
        }
    };
    emit(&json!({
        "schema_version": SCHEMA_VERSION,
        "command": name,
        "args": args,
        "passed": passed,
        "result": result,
        "timing_ms": elapsed_ms,
    }));
    ExitCode::from(code)
}
