//! Convexity implications and types, the positively homogeneous functional
//! calculus, and p-convexity checks on the realised lattices.
//!
//! A [`HomogeneousFunction`] `h: ℝ^n → ℝ` is either a lattice-linear
//! expression in `n` formal variables or the built-in `M · c_p(t)` with
//! `c_p(t) = (Σ |t_i|^p)^{1/p}`. In a lattice of functions on `B+` the
//! calculus is pointwise: `h(f_1, …, f_n)(x*) = h(f_1(x*), …, f_n(x*))`.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{self, normalize_with_limit, random_expr, Evaluable, HomogeneityReport, LatticeExpr};
use crate::geometry::PreorderedSpace;
use crate::norms::{self, Exponent, NormEstimate, SearchParams};

/// Antecedent tolerance: `a(f_1, …, f_n) <= 1e-9` on every sample point.
pub const ANTECEDENT_TOL: f64 = 1e-9;

/// Generator entries allowed when normalising inside the engines.
pub const NORMALIZE_BUDGET: usize = 20_000;

/// Grid step used when the ∞-engine has to fall back to the grid search.
const INF_FALLBACK_GRID: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub enum HomogeneousBody {
    Lattice(LatticeExpr),
    /// `constant · c_p`.
    Builtin { p: Exponent, constant: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousFunction {
    arity: usize,
    body: HomogeneousBody,
}

/// File form of a homogeneous function: `{"builtin": "c_p", "p": 2}` (with an
/// optional `"constant"`) or an expression whose generators have length
/// `arity`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HomogeneousFunctionFile {
    Builtin {
        builtin: String,
        p: Exponent,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constant: Option<f64>,
    },
    Expr(LatticeExpr),
}

impl HomogeneousFunction {
    pub fn lattice(expr: LatticeExpr) -> Result<Self> {
        let arity = expr.validate()?;
        Ok(Self {
            arity,
            body: HomogeneousBody::Lattice(expr),
        })
    }

    pub fn c_p(arity: usize, p: Exponent) -> Result<Self> {
        Self::c_p_scaled(arity, p, 1.0)
    }

    /// `constant · c_p` on `ℝ^arity`.
    pub fn c_p_scaled(arity: usize, p: Exponent, constant: f64) -> Result<Self> {
        if arity == 0 {
            return Err(Error::InvalidParameter("arity must be at least 1".into()));
        }
        if !(constant.is_finite() && constant >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "c_p constant must be finite and nonnegative, got {constant}"
            )));
        }
        Ok(Self {
            arity,
            body: HomogeneousBody::Builtin { p, constant },
        })
    }

    /// The `i`-th coordinate `t_i` (zero-based).
    pub fn coordinate(arity: usize, i: usize) -> Result<Self> {
        if i >= arity {
            return Err(Error::InvalidParameter(format!("coordinate {i} out of range for arity {arity}")));
        }
        let mut g = vec![0.0; arity];
        g[i] = 1.0;
        Self::lattice(LatticeExpr::Gen(g))
    }

    pub fn from_file(file: HomogeneousFunctionFile, arity: usize) -> Result<Self> {
        let h = match file {
            HomogeneousFunctionFile::Builtin { builtin, p, constant } => {
                if builtin != "c_p" {
                    return Err(Error::InvalidExpression(format!("unknown builtin `{builtin}`")));
                }
                Self::c_p_scaled(arity, p, constant.unwrap_or(1.0))?
            }
            HomogeneousFunctionFile::Expr(e) => Self::lattice(e)?,
        };
        if h.arity != arity {
            return Err(Error::InvalidExpression(format!(
                "function has arity {} but the implication has arity {arity}",
                h.arity
            )));
        }
        Ok(h)
    }

    pub fn to_file(&self) -> HomogeneousFunctionFile {
        match &self.body {
            HomogeneousBody::Lattice(e) => HomogeneousFunctionFile::Expr(e.clone()),
            HomogeneousBody::Builtin { p, constant } => HomogeneousFunctionFile::Builtin {
                builtin: "c_p".into(),
                p: *p,
                constant: (*constant != 1.0).then_some(*constant),
            },
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn body(&self) -> &HomogeneousBody {
        &self.body
    }

    /// Spot check of `h(t·u) = t·h(u)` at relative tolerance `1e-12`.
    pub fn homogeneity(&self, samples: usize, seed: u64) -> HomogeneityReport {
        expr::homogeneity_check(self, samples, seed)
    }

    /// `h(f_1, …, f_n)` as a lattice expression, when it is one: lattice
    /// bodies, `c_1` and `c_∞`.
    pub fn symbolic(&self, fs: &[LatticeExpr]) -> Result<Option<LatticeExpr>> {
        if fs.len() != self.arity {
            return Err(arity_mismatch(self.arity, fs.len()));
        }
        let abs = || fs.iter().cloned().map(LatticeExpr::abs).collect::<Vec<_>>();
        let out = match &self.body {
            HomogeneousBody::Lattice(e) => Some(e.substitute(fs)?),
            HomogeneousBody::Builtin { p, constant } => {
                // both are nonnegative; the zero branch records that in the
                // normal form
                let base = match p {
                    Exponent::Infinity => Some(LatticeExpr::sup(abs())),
                    Exponent::Finite(p) if *p == 1.0 => Some(LatticeExpr::add(abs())),
                    Exponent::Finite(_) => None,
                }
                .map(LatticeExpr::pos_part);
                base.map(|b| if *constant == 1.0 { b } else { LatticeExpr::scale(*constant, b) })
            }
        };
        Ok(out)
    }
}

fn arity_mismatch(expected: usize, got: usize) -> Error {
    Error::InvalidParameter(format!("arity mismatch: h takes {expected} arguments, got {got}"))
}

impl Evaluable for HomogeneousFunction {
    fn dim(&self) -> usize {
        self.arity
    }

    fn eval(&self, t: &[f64]) -> f64 {
        match &self.body {
            HomogeneousBody::Lattice(e) => e.eval(t),
            HomogeneousBody::Builtin { p, constant } => constant * p.lp_norm(t),
        }
    }

    fn gradient(&self, t: &[f64], out: &mut [f64]) {
        match &self.body {
            HomogeneousBody::Lattice(e) => e.gradient(t, out),
            HomogeneousBody::Builtin { p, constant } => {
                out.fill(0.0);
                match p {
                    Exponent::Infinity => {
                        let (mut best, mut arg) = (-1.0, 0);
                        for (i, x) in t.iter().enumerate() {
                            if x.abs() > best {
                                best = x.abs();
                                arg = i;
                            }
                        }
                        if best > 0.0 {
                            out[arg] = constant * t[arg].signum();
                        }
                    }
                    Exponent::Finite(p) => {
                        let c = norms::lp_norm(t, *p);
                        if c > 0.0 {
                            for (o, x) in out.iter_mut().zip(t) {
                                *o = constant * x.signum() * (x.abs() / c).powf(p - 1.0);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// `x* ↦ h(f_1(x*), …, f_n(x*))`, with the chain rule for gradients.
#[derive(Clone)]
pub struct Composite {
    h: HomogeneousFunction,
    fs: Vec<Arc<dyn Evaluable>>,
    dim: usize,
}

impl std::fmt::Debug for Composite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Composite")
            .field("h", &self.h)
            .field("arity", &self.fs.len())
            .field("dim", &self.dim)
            .finish()
    }
}

/// Pointwise functional calculus.
pub fn calculus_apply(h: &HomogeneousFunction, fs: Vec<Arc<dyn Evaluable>>) -> Result<Composite> {
    if fs.len() != h.arity {
        return Err(arity_mismatch(h.arity, fs.len()));
    }
    let dim = fs[0].dim();
    if let Some(f) = fs.iter().find(|f| f.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: f.dim() });
    }
    Ok(Composite { h: h.clone(), fs, dim })
}

impl Evaluable for Composite {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, xstar: &[f64]) -> f64 {
        let t: Vec<f64> = self.fs.iter().map(|f| f.eval(xstar)).collect();
        self.h.eval(&t)
    }

    fn gradient(&self, xstar: &[f64], out: &mut [f64]) {
        let t: Vec<f64> = self.fs.iter().map(|f| f.eval(xstar)).collect();
        let mut dh = vec![0.0; t.len()];
        self.h.gradient(&t, &mut dh);
        let mut g = vec![0.0; self.dim];
        out.fill(0.0);
        for (f, &c) in self.fs.iter().zip(&dh) {
            if c != 0.0 {
                f.gradient(xstar, &mut g);
                for (o, gi) in out.iter_mut().zip(&g) {
                    *o += c * gi;
                }
            }
        }
    }
}

/// A triple `(antecedents, consequents; n)`: whenever every antecedent
/// satisfies `a(x_1, …, x_n) <= 0`, each consequent `(c1, c2)` demands
/// `‖c1(x_1, …, x_n)‖ <= c2(‖x_1‖, …, ‖x_n‖)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityImplication {
    arity: usize,
    antecedents: Vec<HomogeneousFunction>,
    consequents: Vec<(HomogeneousFunction, HomogeneousFunction)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsequentFile {
    pub c1: HomogeneousFunctionFile,
    pub c2: HomogeneousFunctionFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImplicationFile {
    pub arity: usize,
    #[serde(default)]
    pub antecedents: Vec<HomogeneousFunctionFile>,
    pub consequents: Vec<ConsequentFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexityTypeFile {
    pub implications: Vec<ImplicationFile>,
}

/// Samples used to confirm that a consequent bound is increasing.
const INCREASING_SAMPLES: usize = 1000;

impl ConvexityImplication {
    pub fn new(
        arity: usize,
        antecedents: Vec<HomogeneousFunction>,
        consequents: Vec<(HomogeneousFunction, HomogeneousFunction)>,
    ) -> Result<Self> {
        if arity == 0 {
            return Err(Error::InvalidParameter("arity must be at least 1".into()));
        }
        let all = antecedents.iter().chain(consequents.iter().flat_map(|(a, b)| [a, b]));
        if let Some(h) = all.into_iter().find(|h| h.arity != arity) {
            return Err(arity_mismatch(arity, h.arity));
        }
        for (i, (_, c2)) in consequents.iter().enumerate() {
            if !check_increasing(c2, INCREASING_SAMPLES, 0) {
                return Err(Error::InvalidExpression(format!(
                    "consequent {i}: bound is not increasing on the positive orthant"
                )));
            }
        }
        Ok(Self {
            arity,
            antecedents,
            consequents,
        })
    }

    pub fn from_file(file: ImplicationFile) -> Result<Self> {
        let n = file.arity;
        let antecedents = file
            .antecedents
            .into_iter()
            .map(|a| HomogeneousFunction::from_file(a, n))
            .collect::<Result<_>>()?;
        let consequents = file
            .consequents
            .into_iter()
            .map(|c| Ok((HomogeneousFunction::from_file(c.c1, n)?, HomogeneousFunction::from_file(c.c2, n)?)))
            .collect::<Result<_>>()?;
        Self::new(n, antecedents, consequents)
    }

    pub fn to_file(&self) -> ImplicationFile {
        ImplicationFile {
            arity: self.arity,
            antecedents: self.antecedents.iter().map(HomogeneousFunction::to_file).collect(),
            consequents: self
                .consequents
                .iter()
                .map(|(a, b)| ConsequentFile {
                    c1: a.to_file(),
                    c2: b.to_file(),
                })
                .collect(),
        }
    }

    /// `p`-convexity with constant `m`: no antecedent and the single
    /// consequent `(c_p, m · c_p)`.
    pub fn p_convexity(p: Exponent, arity: usize, m: f64) -> Result<Self> {
        Self::new(
            arity,
            Vec::new(),
            vec![(HomogeneousFunction::c_p(arity, p)?, HomogeneousFunction::c_p_scaled(arity, p, m)?)],
        )
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn antecedents(&self) -> &[HomogeneousFunction] {
        &self.antecedents
    }

    pub fn consequents(&self) -> &[(HomogeneousFunction, HomogeneousFunction)] {
        &self.consequents
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvexityType {
    pub implications: Vec<ConvexityImplication>,
}

impl ConvexityType {
    pub fn new(implications: Vec<ConvexityImplication>) -> Self {
        Self { implications }
    }

    /// `p`-convexity with constant 1, one implication for each arity
    /// `1..=max_arity`.
    pub fn p_convex(p: Exponent, max_arity: usize) -> Result<Self> {
        let implications = (1..=max_arity)
            .map(|n| ConvexityImplication::p_convexity(p, n, 1.0))
            .collect::<Result<_>>()?;
        Ok(Self { implications })
    }

    pub fn from_file(file: ConvexityTypeFile) -> Result<Self> {
        let implications = file
            .implications
            .into_iter()
            .map(ConvexityImplication::from_file)
            .collect::<Result<_>>()?;
        Ok(Self { implications })
    }

    pub fn to_file(&self) -> ConvexityTypeFile {
        ConvexityTypeFile {
            implications: self.implications.iter().map(ConvexityImplication::to_file).collect(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_file(crate::io::parse_json(s, "<convexity type>")?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_file(crate::io::read_json(path.as_ref())?)
    }
}

/// Sampled monotonicity on the positive orthant: `h(t) <= h(s)` for random
/// `0 <= t <= s`.
pub fn check_increasing(h: &HomogeneousFunction, samples: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = h.arity;
    let mut t = vec![0.0; n];
    let mut s = vec![0.0; n];
    for k in 0..samples {
        for i in 0..n {
            t[i] = if rng.random_bool(0.2) { 0.0 } else { rng.random_range(0.0..=1.0) };
            s[i] = t[i];
        }
        if k % 2 == 0 {
            // bump a single coordinate
            let i = rng.random_range(0..n);
            s[i] += rng.random_range(0.0..=1.0);
        } else {
            for si in s.iter_mut() {
                *si += rng.random_range(0.0..=1.0);
            }
        }
        let (ht, hs) = (h.eval(&t), h.eval(&s));
        if ht > hs + 1e-12 * (1.0 + hs.abs()) {
            return false;
        }
    }
    true
}

/// Runs every implication with `E = ℝ` (norm `|·|`) on sampled scalars.
pub fn scalar_convexity_check(ct: &ConvexityType, samples: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for imp in &ct.implications {
        let n = imp.arity;
        for k in 0..samples {
            let t: Vec<f64> = (0..n)
                .map(|i| match k {
                    0 => 1.0,
                    1 => if i == 0 { 1.0 } else { 0.0 },
                    _ => rng.random_range(-1.0..=1.0),
                })
                .collect();
            if imp.antecedents.iter().any(|a| a.eval(&t) > ANTECEDENT_TOL) {
                continue;
            }
            let abs_t: Vec<f64> = t.iter().map(|x| x.abs()).collect();
            for (c1, c2) in &imp.consequents {
                let (lhs, rhs) = (c1.eval(&t).abs(), c2.eval(&abs_t));
                if lhs > rhs + 1e-12 * (1.0 + rhs.abs()) {
                    return false;
                }
            }
        }
    }
    true
}

/// Norm engine used on both sides of an implication.
#[derive(Debug, Clone)]
pub enum NormEngine {
    /// Exact ∞-norm. Functions that are not lattice expressions (such as
    /// `c_2` of lattice elements) fall back to the grid search.
    InfExact,
    /// Finite-p lower bound from the multi-start ascent.
    PLower { p: f64, params: SearchParams },
}

impl NormEngine {
    pub fn for_exponent(p: Exponent, params: SearchParams) -> Self {
        match p {
            Exponent::Infinity => NormEngine::InfExact,
            Exponent::Finite(p) => NormEngine::PLower { p, params },
        }
    }

    pub fn exponent(&self) -> Exponent {
        match self {
            NormEngine::InfExact => Exponent::Infinity,
            NormEngine::PLower { p, .. } => Exponent::Finite(*p),
        }
    }

    pub fn params(&self) -> Option<&SearchParams> {
        match self {
            NormEngine::InfExact => None,
            NormEngine::PLower { params, .. } => Some(params),
        }
    }

    /// Same engine with `factor` times as many restarts.
    pub fn boosted(&self, factor: usize) -> Self {
        match self {
            NormEngine::InfExact => NormEngine::InfExact,
            NormEngine::PLower { p, params } => NormEngine::PLower {
                p: *p,
                params: params.clone().restarts(params.restarts * factor),
            },
        }
    }

    /// Norm of a lattice expression, through its normal form when it fits
    /// the normalisation budget.
    pub fn norm_expr(&self, space: &PreorderedSpace, e: &LatticeExpr) -> Result<NormEstimate> {
        let exact = normalize_with_limit(e, NORMALIZE_BUDGET).and_then(|nf| match self {
            NormEngine::InfExact => norms::norm_inf_exact(space, &nf),
            NormEngine::PLower { p, params } => norms::norm_p_lower(space, &nf, *p, params),
        });
        match exact {
            Ok(est) => Ok(est),
            Err(Error::BudgetExceeded(msg)) => {
                log::warn!("{msg}; using the direct search");
                self.norm_evaluable(space, e)
            }
            Err(err) => Err(err),
        }
    }

    pub fn norm_evaluable(&self, space: &PreorderedSpace, f: &dyn Evaluable) -> Result<NormEstimate> {
        match self {
            NormEngine::InfExact => norms::norm_inf_oracle(space, f, INF_FALLBACK_GRID),
            NormEngine::PLower { p, params } => norms::pnorm_of_evaluable(space, f, *p, params),
        }
    }

    /// Norm of `h(f_1, …, f_n)`, symbolically when possible.
    pub fn norm_composite(
        &self,
        space: &PreorderedSpace,
        h: &HomogeneousFunction,
        fs: &[LatticeExpr],
    ) -> Result<NormEstimate> {
        if let Some(e) = h.symbolic(fs)? {
            return self.norm_expr(space, &e);
        }
        let parts: Vec<Arc<dyn Evaluable>> = fs.iter().map(|f| Arc::new(f.clone()) as Arc<dyn Evaluable>).collect();
        self.norm_evaluable(space, &calculus_apply(h, parts)?)
    }
}

#[derive(Debug, Clone)]
pub struct ImplicationOptions {
    pub trials: usize,
    pub seed: u64,
    /// Relative tolerance on `lhs <= rhs`.
    pub tol: f64,
    /// Sample points of `B+` for the antecedent filter.
    pub antecedent_points: usize,
    pub max_depth: usize,
}

impl Default for ImplicationOptions {
    fn default() -> Self {
        Self {
            trials: 50,
            seed: 0,
            tol: 1e-9,
            antecedent_points: 500,
            max_depth: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ImplicationCandidate {
    pub trial: usize,
    pub consequent: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub component_norms: Vec<f64>,
    pub functions: Vec<LatticeExpr>,
    /// Finite-p candidates survive a re-run with four times the restarts.
    pub rechecked: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImplicationReport {
    pub p: Exponent,
    pub seed: u64,
    pub restarts: Option<usize>,
    pub tol: f64,
    pub antecedent_tol: f64,
    pub antecedent_points: usize,
    pub trials: usize,
    pub filtered: usize,
    pub tested: usize,
    pub passes: usize,
    pub filter_rate: f64,
    pub candidates: Vec<ImplicationCandidate>,
}

impl ImplicationReport {
    pub fn holds(&self) -> bool {
        self.candidates.is_empty()
    }
}

enum TrialOutcome {
    Filtered,
    Tested(Vec<ImplicationCandidate>),
}

fn consequent_sides(
    space: &PreorderedSpace,
    engine: &NormEngine,
    c1: &HomogeneousFunction,
    c2: &HomogeneousFunction,
    fs: &[LatticeExpr],
) -> Result<(f64, f64, Vec<f64>)> {
    let lhs = engine.norm_composite(space, c1, fs)?.value;
    let norms = fs
        .iter()
        .map(|f| engine.norm_expr(space, f).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    Ok((lhs, c2.eval(&norms), norms))
}

/// Random tuples of lattice expressions, filtered by the antecedents on a
/// sample of `B+`, then tested against every consequent.
pub fn check_implication(
    space: &PreorderedSpace,
    engine: &NormEngine,
    imp: &ConvexityImplication,
    opts: &ImplicationOptions,
) -> Result<ImplicationReport> {
    let mut point_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points = space.sample_positive_part(opts.antecedent_points, &mut point_rng);
    let n = imp.arity;
    let finite = matches!(engine, NormEngine::PLower { .. });

    let outcomes: Vec<Result<TrialOutcome>> = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(trial as u64 + 1);
            let fs: Vec<LatticeExpr> = (0..n).map(|_| random_expr(space.dim(), opts.max_depth, &mut rng)).collect();
            let filtered = points.iter().any(|x| {
                let t: Vec<f64> = fs.iter().map(|f| f.eval(x)).collect();
                imp.antecedents.iter().any(|a| a.eval(&t) > ANTECEDENT_TOL)
            });
            if filtered {
                return Ok(TrialOutcome::Filtered);
            }
            let mut found = Vec::new();
            for (ci, (c1, c2)) in imp.consequents.iter().enumerate() {
                let violated = |lhs: f64, rhs: f64| lhs > rhs + opts.tol * rhs.abs().max(1e-300) + 1e-12;
                let (mut lhs, mut rhs, mut norms) = consequent_sides(space, engine, c1, c2, &fs)?;
                let mut rechecked = false;
                if violated(lhs, rhs) && finite {
                    (lhs, rhs, norms) = consequent_sides(space, &engine.boosted(4), c1, c2, &fs)?;
                    rechecked = true;
                }
                if violated(lhs, rhs) {
                    found.push(ImplicationCandidate {
                        trial,
                        consequent: ci,
                        lhs,
                        rhs,
                        component_norms: norms,
                        functions: fs.clone(),
                        rechecked,
                    });
                }
            }
            Ok(TrialOutcome::Tested(found))
        })
        .collect();

    let mut filtered = 0;
    let mut tested = 0;
    let mut passes = 0;
    let mut candidates = Vec::new();
    for outcome in outcomes {
        match outcome? {
            TrialOutcome::Filtered => filtered += 1,
            TrialOutcome::Tested(found) => {
                tested += 1;
                if found.is_empty() {
                    passes += 1;
                }
                candidates.extend(found);
            }
        }
    }
    Ok(ImplicationReport {
        p: engine.exponent(),
        seed: opts.seed,
        restarts: engine.params().map(|p| p.restarts),
        tol: opts.tol,
        antecedent_tol: ANTECEDENT_TOL,
        antecedent_points: points.len(),
        trials: opts.trials,
        filtered,
        tested,
        passes,
        filter_rate: if opts.trials == 0 { 0.0 } else { filtered as f64 / opts.trials as f64 },
        candidates,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PConvexityReport {
    pub p: Exponent,
    /// `‖(Σ |f_i|^p)^{1/p}‖`.
    pub lhs: f64,
    /// `(Σ ‖f_i‖^p)^{1/p}`.
    pub rhs: f64,
    pub component_norms: Vec<f64>,
    pub exact: bool,
    pub holds: bool,
    pub tol: f64,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
}

/// p-convexity with constant 1 on the given elements: `lhs <= rhs` up to the
/// relative tolerance `tol`.
pub fn p_convexity_check(
    space: &PreorderedSpace,
    p: Exponent,
    fs: &[LatticeExpr],
    params: &SearchParams,
    tol: f64,
) -> Result<PConvexityReport> {
    if fs.is_empty() {
        return Err(Error::InvalidParameter("at least one element is required".into()));
    }
    for f in fs {
        space.check_dim(f.validate()?)?;
    }
    let engine = NormEngine::for_exponent(p, params.clone());
    let component_norms = fs
        .iter()
        .map(|f| engine.norm_expr(space, f).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    let rhs = p.lp_norm(&component_norms);
    let h = HomogeneousFunction::c_p(fs.len(), p)?;
    let (lhs, exact) = match p {
        Exponent::Infinity => {
            let e = engine.norm_composite(space, &h, fs)?;
            (e.value, e.exact)
        }
        Exponent::Finite(_) => {
            let parts: Vec<Arc<dyn Evaluable>> = fs
                .iter()
                .map(|f| -> Result<Arc<dyn Evaluable>> {
                    Ok(match normalize_with_limit(f, NORMALIZE_BUDGET) {
                        Ok(nf) => Arc::new(nf),
                        Err(Error::BudgetExceeded(_)) => Arc::new(f.clone()),
                        Err(err) => return Err(err),
                    })
                })
                .collect::<Result<_>>()?;
            let e = engine.norm_evaluable(space, &calculus_apply(&h, parts)?)?;
            (e.value, false)
        }
    };
    Ok(PConvexityReport {
        p,
        lhs,
        rhs,
        component_norms,
        exact,
        holds: lhs <= rhs * (1.0 + tol) + 1e-12,
        tol,
        seed: engine.params().map(|p| p.seed),
        restarts: engine.params().map(|p| p.restarts),
    })
}
