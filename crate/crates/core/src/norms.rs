//! Norms in the free p-convex Banach lattice, realised on `B+`.
//!
//! * `p = ∞`: `‖f‖ = max over B+ of |f(x*)|`. For a `⋁⋀` form each row gives
//!   one LP (maximise a minimum of linear forms over a polytope), and the
//!   negative part is handled through [`negate_normal`](crate::expr::negate_normal).
//! * finite `p`: `‖f‖ = sup (Σ_i |f(x_i*)|^p)^{1/p}` over tuples of positive
//!   functionals with `max_{v ∈ B_X} Σ_i |x_i*(v)|^p <= 1`. This is a
//!   nonconvex problem; [`norm_p_lower`] runs a seeded multi-start ascent and
//!   reports a feasible tuple together with the value it attains.
//!
//! The `*_oracle` functions are brute-force references that share no code
//! path with the engines beyond evaluation of `f`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::expr::{self, negate_normal_with_limit, Evaluable, NormalForm};
use crate::geometry::{DualFunctional, PreorderedSpace, GEO_TOL};
use crate::linalg::{self, dot, Vector};
use crate::lp::{LinearProgram, Sense};

/// The exponent `p ∈ [1, ∞]`. Serialised as a number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else {
            Err(Error::InvalidParameter(format!("p must lie in [1, ∞], got {p}")))
        }
    }

    pub fn as_finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinity => None,
        }
    }

    /// `(Σ |v_i|^p)^{1/p}`, or `max |v_i|` for `p = ∞`.
    pub fn lp_norm(self, v: &[f64]) -> f64 {
        match self {
            Exponent::Finite(p) => lp_norm(v, p),
            Exponent::Infinity => linalg::norm_inf(v),
        }
    }
}

pub fn lp_norm(v: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else if p == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else {
        v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

#[inline]
fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x.abs()
    } else if p == 2.0 {
        x * x
    } else {
        x.abs().powf(p)
    }
}

/// Derivative of `|x|^p`, taken as 0 at `x = 0`.
#[inline]
fn dpow_abs(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        p * pow_abs(x, p - 1.0) * x.signum()
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            t => {
                let p: f64 = t
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse p = `{s}`")))?;
                Exponent::finite(p)
            }
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::finite(p).map_err(serde::de::Error::custom),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `max_v (Σ_i |x_i*(v)|^p)^{1/p}` over the ball vertices: the norm of the
/// operator `X → ℓ_p^N` with coordinates `x_i*`. Exact, since the inner sum is
/// convex in `v`.
pub fn adjoint_constraint(space: &PreorderedSpace, functionals: &[DualFunctional], p: f64) -> f64 {
    space
        .constraint_vertices()
        .iter()
        .map(|v| {
            let s: f64 = functionals.iter().map(|x| pow_abs(x.apply(v), p)).sum();
            s.powf(1.0 / p)
        })
        .fold(0.0, f64::max)
}

/// A tuple of positive functionals forming a positive contraction into
/// `ℓ_p^N` (for `p = ∞`: each functional lies in `B+`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleTuple {
    p: Exponent,
    functionals: Vec<DualFunctional>,
}

impl FeasibleTuple {
    pub fn new(space: &PreorderedSpace, p: Exponent, functionals: Vec<DualFunctional>) -> Result<Self> {
        if functionals.is_empty() {
            return Err(Error::Infeasible("empty tuple".into()));
        }
        for (i, x) in functionals.iter().enumerate() {
            space.check_dim(x.coords.len())?;
            if !x.is_positive(space) {
                return Err(Error::Infeasible(format!("functional {i} is not positive")));
            }
        }
        let bound = match p {
            Exponent::Finite(p) => adjoint_constraint(space, &functionals, p),
            Exponent::Infinity => functionals
                .iter()
                .map(|x| space.dual_norm(&x.coords))
                .fold(0.0, f64::max),
        };
        if bound > 1.0 + GEO_TOL {
            return Err(Error::Infeasible(format!("operator norm {bound} exceeds 1")));
        }
        Ok(Self { p, functionals })
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn functionals(&self) -> &[DualFunctional] {
        &self.functionals
    }

    pub fn len(&self) -> usize {
        self.functionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functionals.is_empty()
    }

    /// Operator norm of the tuple as a map into `ℓ_p^N`.
    pub fn operator_norm(&self, space: &PreorderedSpace) -> f64 {
        match self.p {
            Exponent::Finite(p) => adjoint_constraint(space, &self.functionals, p),
            Exponent::Infinity => self
                .functionals
                .iter()
                .map(|x| space.dual_norm(&x.coords))
                .fold(0.0, f64::max),
        }
    }
}

/// Evidence behind a [`NormEstimate`].
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `B+ = {0}`, so every element has norm 0.
    Trivial,
    /// Optimal LP vertex: `sign · f(witness)` equals the norm.
    LpVertex { witness: Vector, sign: f64, row: usize },
    /// Best point found by a grid search over `B+`.
    GridPoint { witness: Vector },
    /// A feasible tuple attaining the reported value.
    Tuple {
        functionals: Vec<Vector>,
        operator_norm: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub exact: bool,
    pub p: Exponent,
    pub certificate: Certificate,
    pub restarts_used: usize,
    pub seed: Option<u64>,
    pub tuple_size: Option<usize>,
}

impl NormEstimate {
    fn trivial(p: Exponent, exact: bool, seed: Option<u64>) -> Self {
        NormEstimate {
            value: 0.0,
            exact,
            p,
            certificate: Certificate::Trivial,
            restarts_used: 0,
            seed,
            tuple_size: None,
        }
    }
}

/// Parameters of the finite-p ascent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchParams {
    pub restarts: usize,
    pub steps: usize,
    pub step_size: f64,
    /// Tuple size `N`; defaults to `2mn` for normal forms.
    pub tuple_size: Option<usize>,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            restarts: 64,
            steps: 500,
            step_size: 0.1,
            tuple_size: None,
            seed: 0,
        }
    }
}

impl SearchParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn tuple_size(mut self, n: usize) -> Self {
        self.tuple_size = Some(n);
        self
    }
}

/// Shapes above this `m·n` make the `n^m` negative-part expansion costly.
pub const INF_ENGINE_WARN_SIZE: usize = 12;

/// Generator entries allowed in the negated form before [`norm_inf_exact`]
/// gives up with [`Error::BudgetExceeded`].
pub const NEGATION_BUDGET: usize = 50_000;

/// Exact `‖f‖` for `p = ∞`: `max(M+, M-)` with `M±` the maxima of `±f` over
/// `B+`, each a maximum over rows of one LP. Forms with a zero row are
/// nonnegative and skip `M-`.
pub fn norm_inf_exact(space: &PreorderedSpace, nf: &NormalForm) -> Result<NormEstimate> {
    space.check_dim(nf.dim())?;
    let bplus = space.dual_positive_part();
    if bplus.is_origin() {
        return Ok(NormEstimate::trivial(Exponent::Infinity, true, None));
    }
    if nf.m() * nf.n() > INF_ENGINE_WARN_SIZE {
        log::warn!(
            "normal form of shape {}x{} exceeds m·n = {INF_ENGINE_WARN_SIZE}; negative part expands to {}^{} rows",
            nf.m(),
            nf.n(),
            nf.n(),
            nf.m()
        );
    }
    let negated = if nf.has_zero_row() {
        None
    } else {
        Some(negate_normal_with_limit(nf, NEGATION_BUDGET)?)
    };
    let mut best: Option<(f64, Vector, f64, usize)> = None;
    let forms = std::iter::once((1.0, nf)).chain(negated.as_ref().map(|n| (-1.0, n)));
    for (sign, form) in forms {
        for (k, row) in form.rows().iter().enumerate() {
            let w = max_min_over_positive_part(space, row)?;
            if !bplus.contains(&w, GEO_TOL) {
                return Err(Error::Lp(format!("LP witness {w:?} lies outside B+")));
            }
            let v = sign * nf.eval(&w);
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, w, sign, k));
            }
        }
    }
    let (value, witness, sign, row) = best.expect("at least one row");
    Ok(NormEstimate {
        value: value.max(0.0),
        exact: true,
        p: Exponent::Infinity,
        certificate: Certificate::LpVertex { witness, sign, row },
        restarts_used: 0,
        seed: None,
        tuple_size: None,
    })
}

/// Solves `max t s.t. t <= ⟨x_l, x*⟩ ∀l, x* ∈ B+` and returns the optimal `x*`.
fn max_min_over_positive_part(space: &PreorderedSpace, row: &[Vector]) -> Result<Vector> {
    let d = space.dim();
    let mut obj = vec![0.0; d + 1];
    obj[d] = 1.0;
    let mut lp = LinearProgram::maximize(obj);
    for x in row {
        let mut r: Vec<f64> = x.iter().map(|c| -c).collect();
        r.push(1.0);
        lp.row(r, Sense::Le, 0.0);
    }
    for h in space.dual_positive_part().halfspaces() {
        let mut r = h.normal.clone();
        r.push(0.0);
        lp.row(r, Sense::Le, h.offset);
    }
    let sol = lp.solve()?;
    Ok(sol.x[..d].to_vec())
}

/// `‖j(x)‖ = max over B+ of x*(x)` for `x` in the wedge, by LP.
pub fn norm_of_generator_positive(space: &PreorderedSpace, x: &[f64]) -> Result<f64> {
    if !space.cone_membership(x)? {
        return Err(Error::NotPositive(x.to_vec()));
    }
    let mut lp = LinearProgram::maximize(x.to_vec());
    for h in space.dual_positive_part().halfspaces() {
        lp.row(h.normal.clone(), Sense::Le, h.offset);
    }
    Ok(lp.solve()?.objective.max(0.0))
}

/// Finite-p lower bound for a normal form, with `N = 2mn` unless overridden.
pub fn norm_p_lower(
    space: &PreorderedSpace,
    nf: &NormalForm,
    p: f64,
    params: &SearchParams,
) -> Result<NormEstimate> {
    space.check_dim(nf.dim())?;
    let n = params.tuple_size.unwrap_or(2 * nf.m() * nf.n());
    ascent_search(space, nf, p, n, params)
}

/// Finite-p lower bound for any positively homogeneous `f`, such as the
/// output of the functional calculus. `N` defaults to the number of
/// `±`-pairs of ball vertices.
pub fn pnorm_of_evaluable(
    space: &PreorderedSpace,
    f: &dyn Evaluable,
    p: f64,
    params: &SearchParams,
) -> Result<NormEstimate> {
    space.check_dim(f.dim())?;
    let report = expr::homogeneity_check_with_tol(f, 64, params.seed ^ 0x5eed, 1e-9);
    if !report.holds {
        let c = report.counterexample.expect("counterexample on failure");
        return Err(Error::NotHomogeneous(format!(
            "f({:?}·{}) = {} but {}·f(x*) = {}",
            c.xstar, c.t, c.scaled_value, c.t, c.value_times_t
        )));
    }
    let n = params
        .tuple_size
        .unwrap_or(space.constraint_vertices().len().max(1));
    ascent_search(space, f, p, n, params)
}

struct Restart {
    ratio: f64,
    functionals: Vec<Vector>,
}

/// Gradients sampled per ascent step are capped at this many.
const MAX_SAMPLES: usize = 8;

/// A restart ends once the sampling radius falls below this, or once
/// `log(S/G)` gains less than `STALL_GAIN` over `STALL_WINDOW` steps.
const MIN_RADIUS: f64 = 1e-6;
const STALL_WINDOW: usize = 20;
const STALL_GAIN: f64 = 1e-10;

/// Objective of the ascent, in the coordinates `w` (N × K, nonnegative):
/// functional `i` is `x_i = Σ_j w_ij u_j` with `u_j` the nonzero vertices of
/// `B+`. The ratio `S/G` with `S = Σ |f(x_i)|^p` and
/// `G = max_v Σ |x_i(v)|^p` is invariant under scaling of `w`, so feasibility
/// is restored afterwards by rescaling with `G^{-1/p}`.
///
/// Both `S` and `G` have kinks, and maximisers tend to sit on them. Each step
/// therefore samples gradients in a small ball around the iterate and moves
/// along the least-norm element of their convex hull (gradient sampling),
/// with backtracking on the exact ratio.
struct AscentProblem<'a> {
    f: &'a dyn Evaluable,
    p: f64,
    dim: usize,
    tuple: usize,
    cone_vertices: Vec<Vector>,
    ball: &'a [Vector],
}

struct Scratch {
    xs: Vec<f64>,
    fg: Vec<f64>,
}

impl AscentProblem<'_> {
    fn fill(&self, w: &[f64], xs: &mut [f64]) {
        let k = self.cone_vertices.len();
        xs.fill(0.0);
        for i in 0..self.tuple {
            let x = &mut xs[i * self.dim..(i + 1) * self.dim];
            for (j, u) in self.cone_vertices.iter().enumerate() {
                let c = w[i * k + j];
                if c != 0.0 {
                    for (xi, ui) in x.iter_mut().zip(u) {
                        *xi += c * ui;
                    }
                }
            }
        }
    }

    fn functionals(&self, w: &[f64]) -> Vec<Vector> {
        let mut xs = vec![0.0; self.tuple * self.dim];
        self.fill(w, &mut xs);
        xs.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    fn sums(&self, xs: &[f64]) -> (f64, f64, usize) {
        let s: f64 = xs.chunks(self.dim).map(|x| pow_abs(self.f.eval(x), self.p)).sum();
        let mut g = 0.0;
        let mut arg = 0;
        for (idx, v) in self.ball.iter().enumerate() {
            let t: f64 = xs.chunks(self.dim).map(|x| pow_abs(dot(x, v), self.p)).sum();
            if t > g {
                g = t;
                arg = idx;
            }
        }
        (s, g, arg)
    }

    /// `log S - log G`, or `-∞` when degenerate.
    fn log_ratio(&self, w: &[f64], sc: &mut Scratch) -> f64 {
        self.fill(w, &mut sc.xs);
        let (s, g, _) = self.sums(&sc.xs);
        if g <= 0.0 || s <= 0.0 {
            f64::NEG_INFINITY
        } else {
            s.ln() - g.ln()
        }
    }

    /// Gradient of `log S - log G` with respect to `w`. Where `S = 0` the
    /// gradient of `S` alone is returned.
    fn log_gradient(&self, w: &[f64], sc: &mut Scratch, out: &mut [f64]) {
        let k = self.cone_vertices.len();
        self.fill(w, &mut sc.xs);
        let (s, g, arg) = self.sums(&sc.xs);
        out.fill(0.0);
        if g <= 0.0 {
            return;
        }
        let (inv_s, inv_g) = if s > 0.0 { (1.0 / s, 1.0 / g) } else { (1.0, 0.0) };
        let v = &self.ball[arg];
        for (i, x) in sc.xs.chunks(self.dim).enumerate() {
            let fx = self.f.eval(x);
            self.f.gradient(x, &mut sc.fg);
            let ds = dpow_abs(fx, self.p) * inv_s;
            let dg = dpow_abs(dot(x, v), self.p) * inv_g;
            for (j, u) in self.cone_vertices.iter().enumerate() {
                out[i * k + j] = ds * dot(&sc.fg, u) - dg * dot(v, u);
            }
        }
    }

    fn initial_weights(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let k = self.cone_vertices.len();
        let mut w = vec![0.0; self.tuple * k];
        let first = rng.random_range(0..self.tuple);
        for i in 0..self.tuple {
            if i != first && rng.random_bool(0.5) {
                continue;
            }
            let scale: f64 = rng.random_range(0.05..=1.0);
            if rng.random_bool(0.5) {
                let j = rng.random_range(0..k);
                w[i * k + j] = scale;
            } else {
                for j in 0..k {
                    w[i * k + j] = scale * rng.random_range(0.0..=1.0);
                }
            }
        }
        normalize_weights(&mut w);
        w
    }

    fn run(&self, rng: &mut ChaCha8Rng, steps: usize, step0: f64) -> Restart {
        let mut sc = Scratch {
            xs: vec![0.0; self.tuple * self.dim],
            fg: vec![0.0; self.dim],
        };
        let mut w = self.initial_weights(rng);
        let n = w.len();
        let samples = (n + 1).min(MAX_SAMPLES);
        let mut grads = vec![vec![0.0; n]; samples + 1];
        let mut point = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut dir = vec![0.0; n];
        let mut phi = self.log_ratio(&w, &mut sc);
        let mut radius = 0.1;
        let mut last_step = step0;

        let mut checkpoint = phi;
        for step in 1..=steps {
            if radius < MIN_RADIUS {
                break;
            }
            if step % STALL_WINDOW == 0 {
                if phi - checkpoint < STALL_GAIN {
                    break;
                }
                checkpoint = phi;
            }
            self.log_gradient(&w, &mut sc, &mut grads[0]);
            for g in grads.iter_mut().skip(1) {
                sample_ball(rng, &w, radius, &mut point);
                self.log_gradient(&point, &mut sc, g);
            }
            min_norm_point(&grads, &mut dir);
            for (d, &wi) in dir.iter_mut().zip(&w) {
                if wi <= 0.0 && *d < 0.0 {
                    *d = 0.0;
                }
            }
            let dn = linalg::norm2(&dir);
            if !(dn > 1e-10) {
                radius *= 0.1;
                continue;
            }
            let mut t = (2.0 * last_step).min(step0);
            let mut accepted = false;
            while t >= 1e-10 {
                for ((x, wi), d) in trial.iter_mut().zip(&w).zip(&dir) {
                    *x = (wi + t * d / dn).max(0.0);
                }
                let next = self.log_ratio(&trial, &mut sc);
                if next > phi + 1e-8 * t * dn {
                    phi = next;
                    std::mem::swap(&mut w, &mut trial);
                    normalize_weights(&mut w);
                    accepted = true;
                    last_step = t;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                radius *= 0.5;
            }
        }
        Restart {
            ratio: if phi.is_finite() { phi.exp() } else { 0.0 },
            functionals: self.functionals(&w),
        }
    }
}

/// Uniform sample from the ball of the given radius around `w`, clamped to
/// the nonnegative orthant.
fn sample_ball(rng: &mut ChaCha8Rng, w: &[f64], radius: f64, out: &mut [f64]) {
    let mut n2 = 0.0;
    for o in out.iter_mut() {
        *o = rng.sample(StandardNormal);
        n2 += *o * *o;
    }
    let r = radius * rng.random::<f64>().powf(1.0 / out.len() as f64) / n2.sqrt().max(1e-300);
    for (o, wi) in out.iter_mut().zip(w) {
        *o = (wi + r * *o).max(0.0);
    }
}

/// Least-norm point of the convex hull of `points` (Wolfe's algorithm).
fn min_norm_point(points: &[Vector], out: &mut [f64]) {
    let sq = |x: &[f64]| dot(x, x);
    let scale = points.iter().map(|p| sq(p)).fold(0.0, f64::max);
    if scale == 0.0 {
        out.fill(0.0);
        return;
    }
    let tol = 1e-12 * scale;
    let combine = |set: &[usize], lambda: &[f64], out: &mut [f64]| {
        out.fill(0.0);
        for (&i, &l) in set.iter().zip(lambda) {
            for (o, pi) in out.iter_mut().zip(&points[i]) {
                *o += l * pi;
            }
        }
    };
    let start = (0..points.len())
        .min_by(|&a, &b| sq(&points[a]).total_cmp(&sq(&points[b])))
        .expect("nonempty");
    let mut set = vec![start];
    let mut lambda = vec![1.0];
    combine(&set, &lambda, out);

    for _ in 0..(4 * points.len() + 10) {
        let xx = sq(out);
        let j = (0..points.len())
            .min_by(|&a, &b| dot(out, &points[a]).total_cmp(&dot(out, &points[b])))
            .expect("nonempty");
        if dot(out, &points[j]) >= xx - tol || set.contains(&j) {
            return;
        }
        set.push(j);
        lambda.push(0.0);
        loop {
            // affine least-norm point over the current set
            let s = set.len();
            let mut a = vec![vec![0.0; s + 1]; s + 1];
            for r in 0..s {
                for c in 0..s {
                    a[r][c] = dot(&points[set[r]], &points[set[c]]);
                }
                a[r][s] = 1.0;
                a[s][r] = 1.0;
            }
            let mut b = vec![0.0; s + 1];
            b[s] = 1.0;
            let Some(sol) = linalg::solve(&a, &b) else {
                return;
            };
            let alpha = &sol[..s];
            if alpha.iter().all(|&x| x > 1e-12) {
                lambda.copy_from_slice(alpha);
                break;
            }
            let mut theta: f64 = 1.0;
            for (l, al) in lambda.iter().zip(alpha) {
                if *al <= 1e-12 && l - al > 0.0 {
                    theta = theta.min(l / (l - al));
                }
            }
            for (l, al) in lambda.iter_mut().zip(alpha) {
                *l = (1.0 - theta) * *l + theta * al;
            }
            let mut keep = 0;
            for idx in 0..set.len() {
                if lambda[idx] > 1e-12 {
                    set[keep] = set[idx];
                    lambda[keep] = lambda[idx];
                    keep += 1;
                }
            }
            set.truncate(keep);
            lambda.truncate(keep);
            if set.is_empty() {
                return;
            }
        }
        combine(&set, &lambda, out);
    }
}

fn normalize_weights(w: &mut [f64]) {
    let m = linalg::norm_inf(w);
    if m > 0.0 {
        for x in w.iter_mut() {
            *x /= m;
        }
    }
}

fn ascent_search(
    space: &PreorderedSpace,
    f: &dyn Evaluable,
    p: f64,
    tuple: usize,
    params: &SearchParams,
) -> Result<NormEstimate> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("finite p >= 1 required, got {p}")));
    }
    if tuple < 1 {
        return Err(Error::InvalidParameter("tuple size N must be at least 1".into()));
    }
    if params.restarts < 1 {
        return Err(Error::InvalidParameter("at least one restart is required".into()));
    }
    let exponent = Exponent::Finite(p);
    let cone_vertices: Vec<Vector> = space.dual_positive_part().nonzero_vertices().cloned().collect();
    if cone_vertices.is_empty() {
        let mut est = NormEstimate::trivial(exponent, false, Some(params.seed));
        est.tuple_size = Some(tuple);
        return Ok(est);
    }
    let problem = AscentProblem {
        f,
        p,
        dim: space.dim(),
        tuple,
        cone_vertices,
        ball: space.constraint_vertices(),
    };
    let results: Vec<Restart> = (0..params.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(r as u64);
            problem.run(&mut rng, params.steps, params.step_size)
        })
        .collect();
    // ties go to the lowest restart index
    let mut best = &results[0];
    for r in &results[1..] {
        if r.ratio > best.ratio {
            best = r;
        }
    }
    let tuple_est = certify_tuple(space, f, p, best.functionals.clone());
    Ok(NormEstimate {
        value: tuple_est.0,
        exact: false,
        p: exponent,
        certificate: Certificate::Tuple {
            functionals: tuple_est.1,
            operator_norm: tuple_est.2,
        },
        restarts_used: params.restarts,
        seed: Some(params.seed),
        tuple_size: Some(tuple),
    })
}

/// Rescales a tuple of positive functionals to operator norm 1 and returns
/// the value it attains, the rescaled tuple and its operator norm.
fn certify_tuple(
    space: &PreorderedSpace,
    f: &dyn Evaluable,
    p: f64,
    functionals: Vec<Vector>,
) -> (f64, Vec<Vector>, f64) {
    let as_dual: Vec<DualFunctional> = functionals.into_iter().map(DualFunctional::new).collect();
    let c = adjoint_constraint(space, &as_dual, p);
    if c <= 0.0 {
        let zeros = vec![vec![0.0; space.dim()]; as_dual.len()];
        return (0.0, zeros, 0.0);
    }
    let mut scaled: Vec<Vector> = as_dual.iter().map(|x| linalg::scale(&x.coords, 1.0 / c)).collect();
    let mut dual: Vec<DualFunctional> = scaled.iter().cloned().map(DualFunctional::new).collect();
    let mut op = adjoint_constraint(space, &dual, p);
    if op > 1.0 {
        // rounding: shrink by one more ulp-scale factor
        scaled = scaled.iter().map(|x| linalg::scale(x, 1.0 / op)).collect();
        dual = scaled.iter().cloned().map(DualFunctional::new).collect();
        op = adjoint_constraint(space, &dual, p);
    }
    let values: Vec<f64> = scaled.iter().map(|x| f.eval(x)).collect();
    (lp_norm(&values, p), scaled, op)
}

// ---------------------------------------------------------------------------
// Brute-force references
// ---------------------------------------------------------------------------

/// Upper limit on the number of candidate directions an oracle may use.
pub const ORACLE_BUDGET: usize = 250_000;

/// Levels of local refinement applied after the coarse grid.
const REFINE_LEVELS: usize = 6;

struct DirectionGrid<'a> {
    space: &'a PreorderedSpace,
    basis: Vec<Vector>,
}

impl<'a> DirectionGrid<'a> {
    fn new(space: &'a PreorderedSpace) -> Self {
        let basis = linalg::orthonormal_basis(space.dual_positive_part().vertices(), GEO_TOL);
        Self { space, basis }
    }

    fn positive(&self, theta: &[f64]) -> bool {
        self.space
            .cone_generators()
            .iter()
            .all(|g| dot(g, theta) >= -1e-12 * linalg::norm_inf(g).max(1.0))
    }

    /// Scales a positive direction onto the unit sphere of the dual norm.
    fn unit(&self, theta: Vector) -> Option<Vector> {
        let n = self.space.dual_norm(&theta);
        (n > 1e-14 && self.positive(&theta)).then(|| linalg::scale(&theta, 1.0 / n))
    }

    fn embed(&self, z: &[f64]) -> Vector {
        let mut theta = vec![0.0; self.space.dim()];
        for (zi, q) in z.iter().zip(&self.basis) {
            for (t, qi) in theta.iter_mut().zip(q) {
                *t += zi * qi;
            }
        }
        theta
    }

    /// Surface of `[-1, 1]^r` in span coordinates with spacing `step`, the
    /// nonzero vertices of `B+`, and points on segments between them.
    fn coarse(&self, step: f64) -> Result<Vec<Vector>> {
        let r = self.basis.len();
        let per_side = (2.0 / step).round().max(1.0) as usize + 1;
        let count = 2 * r * per_side.saturating_pow(r.saturating_sub(1) as u32);
        if count > ORACLE_BUDGET {
            return Err(Error::BudgetExceeded(format!(
                "{count} grid directions at step {step} in dimension {r}; use a coarser step or a smaller space"
            )));
        }
        let coord = |i: usize| -1.0 + 2.0 * i as f64 / (per_side - 1).max(1) as f64;
        let mut out = Vec::with_capacity(count);
        for face in 0..r {
            for s in [-1.0, 1.0] {
                let mut idx = vec![0usize; r.saturating_sub(1)];
                loop {
                    let mut z = Vec::with_capacity(r);
                    let mut it = idx.iter();
                    for c in 0..r {
                        z.push(if c == face { s } else { coord(*it.next().unwrap()) });
                    }
                    if let Some(t) = self.unit(self.embed(&z)) {
                        out.push(t);
                    }
                    let mut c = 0;
                    loop {
                        if c == idx.len() {
                            break;
                        }
                        idx[c] += 1;
                        if idx[c] < per_side {
                            break;
                        }
                        idx[c] = 0;
                        c += 1;
                    }
                    if c == idx.len() {
                        break;
                    }
                }
            }
        }
        let verts: Vec<Vector> = self
            .space
            .dual_positive_part()
            .nonzero_vertices()
            .cloned()
            .collect();
        for (a, u) in verts.iter().enumerate() {
            if let Some(t) = self.unit(u.clone()) {
                out.push(t);
            }
            for w in &verts[a + 1..] {
                let mut t = step;
                while t < 1.0 {
                    let mix: Vector = u.iter().zip(w).map(|(x, y)| (1.0 - t) * x + t * y).collect();
                    if let Some(d) = self.unit(mix) {
                        out.push(d);
                    }
                    t += step;
                }
            }
        }
        Ok(out)
    }

    /// Box of half-width `radius` and spacing `radius / 5` around `center`,
    /// within the span of `B+`.
    fn local(&self, center: &[f64], radius: f64) -> Vec<Vector> {
        let r = self.basis.len();
        let k: i64 = 5;
        let side = (2 * k + 1) as usize;
        let total = side.pow(r as u32);
        let mut out = Vec::with_capacity(total);
        for mut code in 0..total {
            let mut z = Vec::with_capacity(r);
            for _ in 0..r {
                let i = (code % side) as i64 - k;
                code /= side;
                z.push(radius * i as f64 / k as f64);
            }
            let delta = self.embed(&z);
            if let Some(t) = self.unit(linalg::add(center, &delta)) {
                out.push(t);
            }
        }
        out
    }
}

/// Reference value of `sup over B+ of |f|` by a direction grid with
/// successive local refinement around the best points. Returns a lower bound
/// (the best grid point), with no LP involved.
pub fn norm_inf_oracle(space: &PreorderedSpace, f: &dyn Evaluable, grid_step: f64) -> Result<NormEstimate> {
    space.check_dim(f.dim())?;
    check_step(grid_step)?;
    if space.dual_positive_part().is_origin() {
        return Ok(NormEstimate::trivial(Exponent::Infinity, false, None));
    }
    let grid = DirectionGrid::new(space);
    let mut pool = grid.coarse(grid_step)?;
    let mut radius = 2.0 * grid_step;
    let keep = 8;
    let mut best: Vec<(f64, Vector)> = Vec::new();
    for _ in 0..=REFINE_LEVELS {
        let mut scored: Vec<(f64, Vector)> = pool
            .into_iter()
            .chain(best.iter().map(|b| b.1.clone()))
            .map(|t| (f.eval(&t).abs(), t))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
        best.clear();
        for (v, t) in scored {
            if best.len() == keep {
                break;
            }
            if !best.iter().any(|(_, b)| linalg::approx_eq(b, &t, 1e-15)) {
                best.push((v, t));
            }
        }
        pool = best.iter().flat_map(|(_, t)| grid.local(t, radius)).collect();
        radius /= 5.0;
    }
    let (value, witness) = best.into_iter().next().expect("nonempty pool");
    Ok(NormEstimate {
        value,
        exact: false,
        p: Exponent::Infinity,
        certificate: Certificate::GridPoint { witness },
        restarts_used: 0,
        seed: None,
        tuple_size: None,
    })
}

fn check_step(step: f64) -> Result<()> {
    if step.is_finite() && step > 0.0 && step <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("grid step must lie in (0, 1], got {step}")))
    }
}

/// Reference value for finite `p` by exhaustive search over a direction grid.
///
/// Writing each functional as `x_i = μ_i^{1/p} θ_i` with `θ_i` a grid
/// direction, the problem over all tuples drawn from the grid (of any size)
/// is the LP `max Σ μ_i |f(θ_i)|^p` subject to
/// `Σ μ_i |θ_i(v)|^p <= 1` for every ball vertex `v`, `μ >= 0`. The grid is
/// then refined around the support of the optimum. The returned tuple is
/// feasible, so the value is a lower bound.
pub fn norm_p_oracle(space: &PreorderedSpace, f: &dyn Evaluable, p: f64, grid_step: f64) -> Result<NormEstimate> {
    space.check_dim(f.dim())?;
    check_step(grid_step)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParameter(format!("finite p >= 1 required, got {p}")));
    }
    let exponent = Exponent::Finite(p);
    if space.dual_positive_part().is_origin() {
        return Ok(NormEstimate::trivial(exponent, false, None));
    }
    let grid = DirectionGrid::new(space);
    let ball = space.constraint_vertices();

    let solve = |dirs: &[Vector]| -> Result<Vec<(f64, Vector)>> {
        let gains: Vec<f64> = dirs.iter().map(|t| pow_abs(f.eval(t), p)).collect();
        if gains.iter().all(|&g| g <= 0.0) {
            return Ok(Vec::new());
        }
        let mut lp = LinearProgram::maximize(gains);
        lp.nonnegative(0..dirs.len());
        for v in ball {
            lp.row(dirs.iter().map(|t| pow_abs(dot(t, v), p)).collect(), Sense::Le, 1.0);
        }
        let sol = lp.solve()?;
        Ok(sol
            .x
            .iter()
            .zip(dirs)
            .filter(|(mu, _)| **mu > 1e-13)
            .map(|(&mu, t)| (mu, t.clone()))
            .collect())
    };

    let mut support = solve(&grid.coarse(grid_step)?)?;
    let mut radius = 2.0 * grid_step;
    for _ in 0..REFINE_LEVELS {
        if support.is_empty() {
            break;
        }
        let mut dirs: Vec<Vector> = support.iter().map(|(_, t)| t.clone()).collect();
        for (_, t) in &support {
            dirs.extend(grid.local(t, radius));
        }
        support = solve(&dirs)?;
        radius /= 5.0;
    }
    if support.is_empty() {
        let mut est = NormEstimate::trivial(exponent, false, None);
        est.certificate = Certificate::Tuple {
            functionals: vec![vec![0.0; space.dim()]],
            operator_norm: 0.0,
        };
        return Ok(est);
    }
    let functionals: Vec<Vector> = support
        .iter()
        .map(|(mu, t)| linalg::scale(t, mu.powf(1.0 / p)))
        .collect();
    let tuple_len = functionals.len();
    let (value, functionals, operator_norm) = certify_tuple(space, f, p, functionals);
    Ok(NormEstimate {
        value,
        exact: false,
        p: exponent,
        certificate: Certificate::Tuple {
            functionals,
            operator_norm,
        },
        restarts_used: 0,
        seed: None,
        tuple_size: Some(tuple_len),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{LatticeExpr, FnEvaluable};
    use crate::geometry::fixtures::*;

    fn inf2(x: [f64; 2], y: [f64; 2]) -> NormalForm {
        NormalForm::new(vec![vec![x.to_vec(), y.to_vec()]]).unwrap()
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Infinity);
        assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::Finite(2.0));
        assert!("0.5".parse::<Exponent>().is_err());
        assert_eq!(serde_json::to_string(&Exponent::Infinity).unwrap(), "\"inf\"");
        let p: Exponent = serde_json::from_str("1.5").unwrap();
        assert_eq!(p, Exponent::Finite(1.5));
    }

    #[test]
    fn inf_exact_examples() {
        let b = space_b();
        let est = norm_inf_exact(&b, &inf2([1.0, 0.0], [0.0, 1.0])).unwrap();
        assert!(est.exact);
        assert!((est.value - 0.5).abs() < 1e-12, "{}", est.value);
        if let Certificate::LpVertex { witness, .. } = &est.certificate {
            assert!(linalg::approx_eq(witness, &[0.5, 0.5], 1e-9));
        } else {
            panic!("expected LP certificate");
        }

        let e = space_e();
        let est = norm_inf_exact(&e, &NormalForm::generator(vec![1.0, 0.0])).unwrap();
        assert_eq!(est.value, 0.0);

        let c = space_c();
        let est = norm_inf_exact(&c, &inf2([3.0, -1.0], [2.0, 2.0])).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(matches!(est.certificate, Certificate::Trivial));
    }

    #[test]
    fn adjoint_constraint_examples() {
        let a = space_a();
        let t = |v: &[[f64; 2]]| -> Vec<DualFunctional> {
            v.iter().map(|x| DualFunctional::new(x.to_vec())).collect()
        };
        // oracle: enumerate all four square vertices
        let brute = |fs: &[DualFunctional], p: f64| {
            a.ball_vertices()
                .iter()
                .map(|v| fs.iter().map(|x| x.apply(v).abs().powf(p)).sum::<f64>().powf(1.0 / p))
                .fold(0.0, f64::max)
        };
        let full = t(&[[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(brute(&full, 1.0), 2.0);
        assert_eq!(adjoint_constraint(&a, &full, 1.0), 2.0);
        let half = t(&[[0.5, 0.0], [0.0, 0.5]]);
        assert_eq!(adjoint_constraint(&a, &half, 1.0), brute(&half, 1.0));
        assert_eq!(adjoint_constraint(&a, &half, 1.0), 1.0);
        assert_eq!(adjoint_constraint(&a, &t(&[[0.0, 0.0]]), 2.0), 0.0);
    }

    #[test]
    fn feasible_tuple_validation() {
        let b = space_b();
        let ok = FeasibleTuple::new(
            &b,
            Exponent::Finite(1.0),
            vec![DualFunctional::new(vec![0.5, 0.0]), DualFunctional::new(vec![0.0, 0.5])],
        );
        assert!(ok.is_ok());
        let too_big = FeasibleTuple::new(
            &b,
            Exponent::Finite(1.0),
            vec![DualFunctional::new(vec![1.0, 0.0]), DualFunctional::new(vec![0.0, 1.0])],
        );
        assert!(matches!(too_big, Err(Error::Infeasible(_))));
        let negative = FeasibleTuple::new(&b, Exponent::Infinity, vec![DualFunctional::new(vec![-0.5, 0.0])]);
        assert!(matches!(negative, Err(Error::Infeasible(_))));
    }

    #[test]
    fn generator_positive_examples() {
        let b = space_b();
        // oracle: maximum of a linear functional over B+ is attained at a vertex
        for x in [[1.0, 1.0], [2.0, 0.0], [0.3, 1.7]] {
            let lp = norm_of_generator_positive(&b, &x).unwrap();
            assert!((lp - b.dual_positive_part().support(&x)).abs() < 1e-12);
        }
        assert!((norm_of_generator_positive(&b, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((norm_of_generator_positive(&b, &[2.0, 0.0]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(norm_of_generator_positive(&space_c(), &[1.0, 0.0]).unwrap(), 0.0);
        assert!(matches!(
            norm_of_generator_positive(&b, &[1.0, -1.0]),
            Err(Error::NotPositive(_))
        ));
    }

    #[test]
    fn p_lower_examples() {
        let params = SearchParams::with_seed(7);
        let est = norm_p_lower(&space_a(), &NormalForm::generator(vec![1.0, 1.0]), 1.0, &params).unwrap();
        assert!(!est.exact);
        assert!((est.value - 1.0).abs() < 1e-3, "{}", est.value);
        let est = norm_p_lower(&space_b(), &NormalForm::generator(vec![1.0, 1.0]), 2.0, &params).unwrap();
        assert!((est.value - 1.0).abs() < 1e-3, "{}", est.value);
        let est = norm_p_lower(&space_c(), &inf2([1.0, 0.0], [0.0, 1.0]), 2.0, &params).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn p_lower_rejects_bad_parameters() {
        let a = space_a();
        let nf = NormalForm::generator(vec![1.0, 0.0]);
        assert!(norm_p_lower(&a, &nf, 0.5, &SearchParams::default()).is_err());
        assert!(norm_p_lower(&a, &nf, 1.0, &SearchParams::default().tuple_size(0)).is_err());
    }

    #[test]
    fn certificate_is_feasible_and_attains_value() {
        let b = space_b();
        let nf = inf2([1.0, 0.0], [0.0, 1.0]);
        let est = norm_p_lower(&b, &nf, 1.5, &SearchParams::with_seed(3)).unwrap();
        let Certificate::Tuple { functionals, operator_norm } = &est.certificate else {
            panic!("tuple certificate expected");
        };
        assert!(*operator_norm <= 1.0 + 1e-9);
        let tuple = FeasibleTuple::new(
            &b,
            Exponent::Finite(1.5),
            functionals.iter().cloned().map(DualFunctional::new).collect(),
        )
        .unwrap();
        let values: Vec<f64> = tuple.functionals().iter().map(|x| nf.eval(&x.coords)).collect();
        assert!((lp_norm(&values, 1.5) - est.value).abs() < 1e-9);
    }

    #[test]
    fn search_is_reproducible() {
        let a = space_a();
        let nf = NormalForm::new(vec![
            vec![vec![1.0, -0.5], vec![0.2, 0.9]],
            vec![vec![-0.3, 0.4], vec![0.8, 0.1]],
        ])
        .unwrap();
        let params = SearchParams::with_seed(99).restarts(16);
        let x = norm_p_lower(&a, &nf, 2.0, &params).unwrap();
        let y = norm_p_lower(&a, &nf, 2.0, &params).unwrap();
        assert_eq!(x.value.to_bits(), y.value.to_bits());
    }

    #[test]
    fn evaluable_search_matches_normal_form_search() {
        let a = space_a();
        let nf = inf2([1.0, 0.3], [0.2, 1.0]);
        let params = SearchParams::with_seed(5).tuple_size(4);
        let x = norm_p_lower(&a, &nf, 2.0, &params).unwrap();
        let y = pnorm_of_evaluable(&a, &nf, 2.0, &params).unwrap();
        assert!((x.value - y.value).abs() <= 1e-9);
        let zero = FnEvaluable::new(2, |_: &[f64]| 0.0);
        assert_eq!(pnorm_of_evaluable(&a, &zero, 2.0, &params).unwrap().value, 0.0);
        let affine = FnEvaluable::new(2, |x: &[f64]| x[0] + 0.5);
        assert!(matches!(
            pnorm_of_evaluable(&a, &affine, 2.0, &params),
            Err(Error::NotHomogeneous(_))
        ));
    }

    #[test]
    fn oracle_examples() {
        let a = space_a();
        let est = norm_p_oracle(&a, &NormalForm::generator(vec![1.0, 0.0]), 1.0, 0.05).unwrap();
        assert!((est.value - 1.0).abs() <= 0.01, "{}", est.value);
        let b = space_b();
        let est = norm_p_oracle(&b, &inf2([1.0, 0.0], [0.0, 1.0]), 1.0, 0.05).unwrap();
        assert!((0.49..=0.51).contains(&est.value), "{}", est.value);
        let e = space_e();
        for p in [1.0, 2.0, 3.5] {
            let est = norm_p_oracle(&e, &NormalForm::generator(vec![1.0, 0.0]), p, 0.05).unwrap();
            assert_eq!(est.value, 0.0);
        }
        assert!(matches!(
            norm_p_oracle(&a, &NormalForm::generator(vec![1.0, 0.0]), 1.0, 1e-6),
            Err(Error::BudgetExceeded(_))
        ));
    }

    #[test]
    fn euclidean_calculus_reference() {
        // ‖(|δ_e1|^2 + |δ_e2|^2)^{1/2}‖_2 on the square: summing the two
        // vertex constraints bounds the objective by 1, attained at e1*.
        let a = space_a();
        let f = FnEvaluable::new(2, |x: &[f64]| (x[0] * x[0] + x[1] * x[1]).sqrt());
        let oracle = norm_p_oracle(&a, &f, 2.0, 0.05).unwrap();
        assert!((oracle.value - 1.0).abs() < 1e-6, "{}", oracle.value);
        let est = pnorm_of_evaluable(&a, &f, 2.0, &SearchParams::with_seed(1)).unwrap();
        assert!((est.value - oracle.value).abs() < 1e-3, "{}", est.value);
    }

    #[test]
    fn inf_oracle_matches_lp() {
        let b = space_b();
        let nf = inf2([1.0, 0.0], [0.0, 1.0]);
        let o = norm_inf_oracle(&b, &nf, 0.05).unwrap();
        assert!((o.value - 0.5).abs() < 1e-6);
        let e = LatticeExpr::abs(LatticeExpr::gen(vec![0.3, -0.9]));
        let o = norm_inf_oracle(&space_a(), &e, 0.05).unwrap();
        assert!((o.value - 0.9).abs() < 1e-9);
    }
}
