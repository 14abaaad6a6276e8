//! Batch front end: JSON files in, JSON reports out.
//!
//! Exit status: 0 on success, 2 when a checked property fails (a
//! counterexample candidate), 1 on input errors.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::convexity::{self, ConvexityType, ImplicationOptions, NormEngine};
use crate::expr::{normalize_with_limit, LatticeExpr, NormalForm};
use crate::geometry::{fixtures, PreorderedSpace};
use crate::io;
use crate::norms::{self, Exponent, SearchParams};
use crate::universal::{self, FiniteLatticeHom, PositiveContraction};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_ASSERTION: i32 = 2;

/// Default relative tolerance of oracle cross-checks for finite `p`.
pub const P_ORACLE_TOL: f64 = 5e-3;
/// Default tolerance of oracle cross-checks for `p = ∞`.
pub const INF_ORACLE_TOL: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "freelat", version, about = "Norms and diagnostics of free p-convex Banach lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Space file, inline JSON, or a fixture name (SPACE-A, SPACE-B, SPACE-C, SPACE-E, CUBE-3).
    #[arg(long)]
    pub space: Option<String>,
    /// Exponent p in [1, inf].
    #[arg(long, default_value = "inf")]
    pub p: Exponent,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    /// Tuple size N of the finite-p search.
    #[arg(long)]
    pub tuple_size: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub grid_step: f64,
    /// Tolerance of the checked property; each command has its own default.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    fn params(&self) -> SearchParams {
        SearchParams {
            restarts: self.restarts,
            tuple_size: self.tuple_size,
            ..SearchParams::with_seed(self.seed)
        }
    }

    fn space(&self, positional: Option<&str>) -> anyhow::Result<PreorderedSpace> {
        let arg = positional
            .or(self.space.as_deref())
            .context("a space is required (--space)")?;
        load_space(arg)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Geometry of the space and the structural report on j.
    SpaceAnalyze {
        /// Space, as for --space.
        space_arg: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Norm of one element: exact for p = inf, a certified lower bound otherwise.
    Norm {
        /// Expression or normal-form file (or inline JSON).
        #[arg(long)]
        expr: String,
        /// Also run the brute-force oracle and compare.
        #[arg(long)]
        check_oracle: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Rewrites an expression into its sup-of-inf normal form.
    Normalize {
        #[arg(long)]
        expr: String,
        #[command(flatten)]
        common: Common,
    },
    /// Convexity implications (--convexity) or p-convexity of given elements (--expr, repeated).
    ConvexityCheck {
        #[arg(long)]
        convexity: Option<String>,
        #[arg(long)]
        expr: Vec<String>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Factors a positive contraction through the free lattice.
    Factor {
        #[arg(long)]
        expr: String,
        /// Positive contraction: {"p": .., "functionals": [[..], ..]}.
        #[arg(long)]
        tuple: String,
        /// Optional lattice homomorphism {"p", "source_dim", "map": [[σ, λ], ..]} for the composition law.
        #[arg(long)]
        psi: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Engine against brute-force oracle.
    OracleCompare {
        #[arg(long)]
        expr: String,
        #[command(flatten)]
        common: Common,
    },
}

/// Reads a file, or returns the argument itself when it is inline JSON.
fn read_source(arg: &str) -> anyhow::Result<(String, String)> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        return Ok((arg.to_string(), "<inline>".to_string()));
    }
    let text = std::fs::read_to_string(arg).with_context(|| format!("{arg}: cannot read file"))?;
    Ok((text, arg.to_string()))
}

fn parse<T: serde::de::DeserializeOwned>(arg: &str) -> anyhow::Result<(T, String)> {
    let (text, origin) = read_source(arg)?;
    Ok((io::parse_json(&text, &origin)?, origin))
}

pub fn load_space(arg: &str) -> anyhow::Result<PreorderedSpace> {
    if let Some(space) = fixtures::by_name(arg) {
        return Ok(space);
    }
    let (def, origin) = parse(arg)?;
    PreorderedSpace::from_definition(&def).with_context(|| format!("{origin}: invalid space"))
}

/// An element given either as an expression or as a normal-form file.
pub struct Element {
    pub expr: LatticeExpr,
    pub nf: NormalForm,
}

pub fn load_element(arg: &str) -> anyhow::Result<Element> {
    let (text, origin) = read_source(arg)?;
    let value: Value = io::parse_json(&text, &origin)?;
    if value.get("generators").is_some() {
        let nf: NormalForm = io::parse_json(&text, &origin)?;
        Ok(Element { expr: nf.to_expr(), nf })
    } else {
        let expr: LatticeExpr = io::parse_json(&text, &origin)?;
        expr.validate().with_context(|| format!("{origin}: invalid expression"))?;
        let nf = normalize_with_limit(&expr, convexity::NORMALIZE_BUDGET)
            .with_context(|| format!("{origin}: normalisation"))?;
        Ok(Element { expr, nf })
    }
}

fn emit(out: Option<&Path>, report: &Value) -> anyhow::Result<()> {
    match out {
        Some(path) => io::write_json(path, report)?,
        None => println!("{}", serde_json::to_string_pretty(report)?),
    }
    Ok(())
}

fn check_dim(space: &PreorderedSpace, nf: &NormalForm, origin: &str) -> anyhow::Result<()> {
    if nf.dim() != space.dim() {
        bail!("{origin}: element has dimension {} but the space has dimension {}", nf.dim(), space.dim());
    }
    Ok(())
}

/// Runs one command and returns its exit status. Errors are input errors.
pub fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::SpaceAnalyze { space_arg, common } => space_analyze(space_arg.as_deref(), &common),
        Command::Norm {
            expr,
            check_oracle,
            common,
        } => norm(&expr, check_oracle, &common),
        Command::Normalize { expr, common } => {
            let el = load_element(&expr)?;
            emit(common.out.as_deref(), &serde_json::to_value(&el.nf)?)?;
            Ok(EXIT_OK)
        }
        Command::ConvexityCheck {
            convexity,
            expr,
            trials,
            common,
        } => convexity_check(convexity.as_deref(), &expr, trials, &common),
        Command::Factor {
            expr,
            tuple,
            psi,
            common,
        } => factor(&expr, &tuple, psi.as_deref(), &common),
        Command::OracleCompare { expr, common } => oracle_compare(&expr, &common),
    }
}

fn space_analyze(positional: Option<&str>, common: &Common) -> anyhow::Result<i32> {
    let space = common.space(positional)?;
    let diag = universal::diagnostics(&space, common.seed)?;
    // trivial ⇒ not injective and ‖j‖ = 0; isometric ⇒ injective
    let consistent = (!diag.trivial.value || (!diag.injective.value && diag.j_norm.value == 0.0))
        && (!diag.isometric.value || diag.injective.value);
    let ok = consistent && diag.bipositive.value != Some(false);
    let report = json!({
        "command": "space-analyze",
        "space": space.definition(),
        "polar_ball_vertices": space.polar_ball().vertices(),
        "diagnostics": diag,
        "consistent": consistent,
        "seed": common.seed,
    });
    emit(common.out.as_deref(), &report)?;
    Ok(if ok { EXIT_OK } else { EXIT_ASSERTION })
}

fn oracle(space: &PreorderedSpace, nf: &NormalForm, p: Exponent, grid_step: f64) -> anyhow::Result<norms::NormEstimate> {
    Ok(match p {
        Exponent::Infinity => norms::norm_inf_oracle(space, nf, grid_step)?,
        Exponent::Finite(p) => norms::norm_p_oracle(space, nf, p, grid_step)?,
    })
}

fn engine(space: &PreorderedSpace, nf: &NormalForm, common: &Common) -> anyhow::Result<norms::NormEstimate> {
    Ok(match common.p {
        Exponent::Infinity => norms::norm_inf_exact(space, nf)?,
        Exponent::Finite(p) => norms::norm_p_lower(space, nf, p, &common.params())?,
    })
}

fn oracle_tol(common: &Common) -> f64 {
    common.tol.unwrap_or(match common.p {
        Exponent::Infinity => INF_ORACLE_TOL,
        Exponent::Finite(_) => P_ORACLE_TOL,
    })
}

/// Relative discrepancy, absolute below 1.
fn discrepancy(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn norm(expr: &str, check_oracle: bool, common: &Common) -> anyhow::Result<i32> {
    let space = common.space(None)?;
    let el = load_element(expr)?;
    check_dim(&space, &el.nf, expr)?;
    let est = engine(&space, &el.nf, common)?;
    let mut report = json!({
        "command": "norm",
        "p": common.p,
        "shape": [el.nf.m(), el.nf.n()],
        "estimate": est,
        "seed": common.seed,
        "restarts": common.restarts,
    });
    let mut ok = true;
    if check_oracle {
        let tol = oracle_tol(common);
        let reference = oracle(&space, &el.nf, common.p, common.grid_step)?;
        let d = discrepancy(est.value, reference.value);
        ok = d <= tol;
        report["oracle"] = json!({
            "estimate": reference,
            "grid_step": common.grid_step,
            "discrepancy": d,
            "tol": tol,
            "agrees": ok,
        });
    }
    emit(common.out.as_deref(), &report)?;
    Ok(if ok { EXIT_OK } else { EXIT_ASSERTION })
}

fn oracle_compare(expr: &str, common: &Common) -> anyhow::Result<i32> {
    let space = common.space(None)?;
    let el = load_element(expr)?;
    check_dim(&space, &el.nf, expr)?;
    let est = engine(&space, &el.nf, common)?;
    let reference = oracle(&space, &el.nf, common.p, common.grid_step)?;
    let tol = oracle_tol(common);
    let d = discrepancy(est.value, reference.value);
    let report = json!({
        "command": "oracle-compare",
        "p": common.p,
        "engine": est,
        "oracle": reference,
        "grid_step": common.grid_step,
        "max_discrepancy": d,
        "tol": tol,
        "agrees": d <= tol,
        "seed": common.seed,
        "restarts": common.restarts,
    });
    emit(common.out.as_deref(), &report)?;
    Ok(if d <= tol { EXIT_OK } else { EXIT_ASSERTION })
}

fn convexity_check(convexity: Option<&str>, exprs: &[String], trials: usize, common: &Common) -> anyhow::Result<i32> {
    let space = common.space(None)?;
    let params = common.params();
    if let Some(arg) = convexity {
        let (file, origin) = parse(arg)?;
        let ct = ConvexityType::from_file(file).with_context(|| format!("{origin}: invalid convexity type"))?;
        let tol = common.tol.unwrap_or(match common.p {
            Exponent::Infinity => 1e-9,
            Exponent::Finite(_) => P_ORACLE_TOL,
        });
        let engine = NormEngine::for_exponent(common.p, params);
        let opts = ImplicationOptions {
            trials,
            seed: common.seed,
            tol,
            ..Default::default()
        };
        let mut reports = Vec::new();
        let mut ok = true;
        for imp in &ct.implications {
            let r = convexity::check_implication(&space, &engine, imp, &opts)?;
            ok &= r.holds();
            reports.push(r);
        }
        let scalar = convexity::scalar_convexity_check(&ct, 1000, common.seed);
        let report = json!({
            "command": "convexity-check",
            "p": common.p,
            "scalar_convex": scalar,
            "implications": reports,
            "seed": common.seed,
            "restarts": common.restarts,
            "tol": tol,
        });
        emit(common.out.as_deref(), &report)?;
        return Ok(if ok && scalar { EXIT_OK } else { EXIT_ASSERTION });
    }
    if exprs.is_empty() {
        bail!("convexity-check needs --convexity or at least one --expr");
    }
    let elements = exprs.iter().map(|e| load_element(e)).collect::<anyhow::Result<Vec<_>>>()?;
    for (el, origin) in elements.iter().zip(exprs) {
        check_dim(&space, &el.nf, origin)?;
    }
    let fs: Vec<LatticeExpr> = elements.into_iter().map(|e| e.expr).collect();
    let tol = common.tol.unwrap_or(P_ORACLE_TOL);
    let r = convexity::p_convexity_check(&space, common.p, &fs, &params, tol)?;
    let ok = r.holds;
    let report = json!({
        "command": "convexity-check",
        "p_convexity": r,
        "seed": common.seed,
        "restarts": common.restarts,
        "tol": tol,
    });
    emit(common.out.as_deref(), &report)?;
    Ok(if ok { EXIT_OK } else { EXIT_ASSERTION })
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct TupleFile {
    p: Exponent,
    functionals: Vec<Vec<f64>>,
}

fn factor(expr: &str, tuple: &str, psi: Option<&str>, common: &Common) -> anyhow::Result<i32> {
    let space = common.space(None)?;
    let el = load_element(expr)?;
    check_dim(&space, &el.nf, expr)?;
    let (t, origin): (TupleFile, String) = parse(tuple)?;
    let phi = PositiveContraction::new(&space, t.p, t.functionals).with_context(|| origin.clone())?;
    let tol = common.tol.unwrap_or(1e-9);
    let contraction = universal::verify_contraction(&space, &phi, &el.nf, &common.params(), tol)?;
    let mut ok = contraction.holds;
    let mut report = json!({
        "command": "factor",
        "p": phi.p(),
        "factored": contraction.factored,
        "contraction": contraction,
        "seed": common.seed,
        "restarts": common.restarts,
        "tol": tol,
    });
    if let Some(arg) = psi {
        let (hom, origin): (FiniteLatticeHom, String) = parse(arg)?;
        let hom = FiniteLatticeHom::new(hom.p, hom.source_dim, hom.map).with_context(|| origin.clone())?;
        let composition = universal::compose_check(&space, &hom, &phi, &el.nf).with_context(|| origin.clone())?;
        ok &= composition.holds;
        report["composition"] = serde_json::to_value(composition)?;
    }
    emit(common.out.as_deref(), &report)?;
    Ok(if ok { EXIT_OK } else { EXIT_ASSERTION })
}
