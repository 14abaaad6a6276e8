//! Lattice-linear expressions over the generators `δ_x` and their `⋁⋀` form.
//!
//! An expression is realised as a positively homogeneous function on the
//! dual space: a generator `δ_x` evaluates to `x*(x)`, and the lattice and
//! linear operations act pointwise.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, Vector};

/// A positively homogeneous real function on the dual space.
pub trait Evaluable: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, xstar: &[f64]) -> f64;

    /// A (sub)gradient at `xstar`, written into `out`. The default is a
    /// central difference.
    fn gradient(&self, xstar: &[f64], out: &mut [f64]) {
        let h = 1e-7 * linalg::norm_inf(xstar).max(1e-3);
        let mut probe = xstar.to_vec();
        for i in 0..xstar.len() {
            probe[i] = xstar[i] + h;
            let up = self.eval(&probe);
            probe[i] = xstar[i] - h;
            let down = self.eval(&probe);
            probe[i] = xstar[i];
            out[i] = (up - down) / (2.0 * h);
        }
    }
}

impl<T: Evaluable + ?Sized> Evaluable for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, xstar: &[f64]) -> f64 {
        (**self).eval(xstar)
    }
    fn gradient(&self, xstar: &[f64], out: &mut [f64]) {
        (**self).gradient(xstar, out)
    }
}

impl<T: Evaluable + ?Sized> Evaluable for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, xstar: &[f64]) -> f64 {
        (**self).eval(xstar)
    }
    fn gradient(&self, xstar: &[f64], out: &mut [f64]) {
        (**self).gradient(xstar, out)
    }
}

/// Wraps a closure as an [`Evaluable`] with finite-difference gradients.
pub struct FnEvaluable<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnEvaluable<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Evaluable for FnEvaluable<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, xstar: &[f64]) -> f64 {
        (self.f)(xstar)
    }
}

/// Expression tree. Leaves are always generators; the zero element is
/// `Gen(0)`.
///
/// JSON form uses one key per node, e.g.
/// `{"sup":[{"gen":[1,0]},{"scale":{"c":2,"of":{"gen":[1,1]}}}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeExpr {
    Gen(Vector),
    Scale { c: f64, of: Box<LatticeExpr> },
    Add(Vec<LatticeExpr>),
    Sup(Vec<LatticeExpr>),
    Inf(Vec<LatticeExpr>),
    Abs(Box<LatticeExpr>),
    PosPart(Box<LatticeExpr>),
    NegPart(Box<LatticeExpr>),
}

impl LatticeExpr {
    pub fn gen(x: impl Into<Vector>) -> Self {
        LatticeExpr::Gen(x.into())
    }

    pub fn zero(dim: usize) -> Self {
        LatticeExpr::Gen(vec![0.0; dim])
    }

    pub fn scale(c: f64, of: LatticeExpr) -> Self {
        LatticeExpr::Scale { c, of: Box::new(of) }
    }

    pub fn sup(children: Vec<LatticeExpr>) -> Self {
        LatticeExpr::Sup(children)
    }

    pub fn inf(children: Vec<LatticeExpr>) -> Self {
        LatticeExpr::Inf(children)
    }

    pub fn add(children: Vec<LatticeExpr>) -> Self {
        LatticeExpr::Add(children)
    }

    pub fn abs(of: LatticeExpr) -> Self {
        LatticeExpr::Abs(Box::new(of))
    }

    pub fn pos_part(of: LatticeExpr) -> Self {
        LatticeExpr::PosPart(Box::new(of))
    }

    pub fn neg_part(of: LatticeExpr) -> Self {
        LatticeExpr::NegPart(Box::new(of))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let e: Self = crate::io::parse_json(s, "<expression>")?;
        e.validate()?;
        Ok(e)
    }

    /// Checks that all leaves share one dimension, that node lists are
    /// nonempty and that scalars are finite. Returns the dimension.
    pub fn validate(&self) -> Result<usize> {
        let mut dim = None;
        self.validate_into(&mut dim)?;
        Ok(dim.expect("at least one leaf"))
    }

    fn validate_into(&self, dim: &mut Option<usize>) -> Result<()> {
        match self {
            LatticeExpr::Gen(x) => {
                if x.is_empty() {
                    return Err(Error::InvalidExpression("empty generator".into()));
                }
                if x.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidExpression(format!("non-finite generator {x:?}")));
                }
                match dim {
                    Some(d) if *d != x.len() => {
                        return Err(Error::DimensionMismatch {
                            expected: *d,
                            got: x.len(),
                        })
                    }
                    _ => *dim = Some(x.len()),
                }
                Ok(())
            }
            LatticeExpr::Scale { c, of } => {
                if !c.is_finite() {
                    return Err(Error::InvalidExpression("non-finite scale".into()));
                }
                of.validate_into(dim)
            }
            LatticeExpr::Add(cs) | LatticeExpr::Sup(cs) | LatticeExpr::Inf(cs) => {
                if cs.is_empty() {
                    return Err(Error::InvalidExpression("empty child list".into()));
                }
                cs.iter().try_for_each(|c| c.validate_into(dim))
            }
            LatticeExpr::Abs(c) | LatticeExpr::PosPart(c) | LatticeExpr::NegPart(c) => {
                c.validate_into(dim)
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            LatticeExpr::Gen(_) => 1,
            LatticeExpr::Scale { of, .. } => 1 + of.depth(),
            LatticeExpr::Add(cs) | LatticeExpr::Sup(cs) | LatticeExpr::Inf(cs) => {
                1 + cs.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
            LatticeExpr::Abs(c) | LatticeExpr::PosPart(c) | LatticeExpr::NegPart(c) => {
                1 + c.depth()
            }
        }
    }

    /// Pointwise value at `xstar`, with a dimension check.
    pub fn evaluate(&self, xstar: &[f64]) -> Result<f64> {
        let d = self.validate()?;
        if d != xstar.len() {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: xstar.len(),
            });
        }
        Ok(self.value(xstar))
    }

    fn value(&self, xstar: &[f64]) -> f64 {
        match self {
            LatticeExpr::Gen(x) => dot(x, xstar),
            LatticeExpr::Scale { c, of } => c * of.value(xstar),
            LatticeExpr::Add(cs) => cs.iter().map(|c| c.value(xstar)).sum(),
            LatticeExpr::Sup(cs) => cs
                .iter()
                .map(|c| c.value(xstar))
                .fold(f64::NEG_INFINITY, f64::max),
            LatticeExpr::Inf(cs) => cs
                .iter()
                .map(|c| c.value(xstar))
                .fold(f64::INFINITY, f64::min),
            LatticeExpr::Abs(c) => c.value(xstar).abs(),
            LatticeExpr::PosPart(c) => c.value(xstar).max(0.0),
            LatticeExpr::NegPart(c) => (-c.value(xstar)).max(0.0),
        }
    }

    fn value_and_gradient(&self, xstar: &[f64]) -> (f64, Vector) {
        match self {
            LatticeExpr::Gen(x) => (dot(x, xstar), x.clone()),
            LatticeExpr::Scale { c, of } => {
                let (v, g) = of.value_and_gradient(xstar);
                (c * v, linalg::scale(&g, *c))
            }
            LatticeExpr::Add(cs) => {
                let mut v = 0.0;
                let mut g = vec![0.0; xstar.len()];
                for c in cs {
                    let (cv, cg) = c.value_and_gradient(xstar);
                    v += cv;
                    g = linalg::add(&g, &cg);
                }
                (v, g)
            }
            LatticeExpr::Sup(cs) => cs
                .iter()
                .map(|c| c.value_and_gradient(xstar))
                .reduce(|a, b| if b.0 > a.0 { b } else { a })
                .expect("nonempty"),
            LatticeExpr::Inf(cs) => cs
                .iter()
                .map(|c| c.value_and_gradient(xstar))
                .reduce(|a, b| if b.0 < a.0 { b } else { a })
                .expect("nonempty"),
            LatticeExpr::Abs(c) => {
                let (v, g) = c.value_and_gradient(xstar);
                (v.abs(), linalg::scale(&g, sign(v)))
            }
            LatticeExpr::PosPart(c) => {
                let (v, g) = c.value_and_gradient(xstar);
                if v > 0.0 {
                    (v, g)
                } else {
                    (0.0, vec![0.0; xstar.len()])
                }
            }
            LatticeExpr::NegPart(c) => {
                let (v, g) = c.value_and_gradient(xstar);
                if v < 0.0 {
                    (-v, linalg::neg(&g))
                } else {
                    (0.0, vec![0.0; xstar.len()])
                }
            }
        }
    }

    /// Replaces every generator `Gen(c)` by `Σ_j c_j · f_j`.
    ///
    /// With `self` read as a lattice-linear function of formal variables
    /// `t_1..t_n` (where `Gen(e_j) = t_j`), this is the composition
    /// `self(f_1, ..., f_n)`.
    pub fn substitute(&self, fs: &[LatticeExpr]) -> Result<LatticeExpr> {
        Ok(match self {
            LatticeExpr::Gen(c) => {
                if c.len() != fs.len() {
                    return Err(Error::DimensionMismatch {
                        expected: fs.len(),
                        got: c.len(),
                    });
                }
                let terms: Vec<LatticeExpr> = c
                    .iter()
                    .zip(fs)
                    .filter(|(cj, _)| **cj != 0.0)
                    .map(|(&cj, f)| {
                        if cj == 1.0 {
                            f.clone()
                        } else {
                            LatticeExpr::scale(cj, f.clone())
                        }
                    })
                    .collect();
                match terms.len() {
                    0 => LatticeExpr::zero(fs[0].validate()?),
                    1 => terms.into_iter().next().unwrap(),
                    _ => LatticeExpr::Add(terms),
                }
            }
            LatticeExpr::Scale { c, of } => LatticeExpr::scale(*c, of.substitute(fs)?),
            LatticeExpr::Add(cs) => LatticeExpr::Add(sub_all(cs, fs)?),
            LatticeExpr::Sup(cs) => LatticeExpr::Sup(sub_all(cs, fs)?),
            LatticeExpr::Inf(cs) => LatticeExpr::Inf(sub_all(cs, fs)?),
            LatticeExpr::Abs(c) => LatticeExpr::abs(c.substitute(fs)?),
            LatticeExpr::PosPart(c) => LatticeExpr::pos_part(c.substitute(fs)?),
            LatticeExpr::NegPart(c) => LatticeExpr::neg_part(c.substitute(fs)?),
        })
    }
}

fn sub_all(cs: &[LatticeExpr], fs: &[LatticeExpr]) -> Result<Vec<LatticeExpr>> {
    cs.iter().map(|c| c.substitute(fs)).collect()
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Evaluable for LatticeExpr {
    fn dim(&self) -> usize {
        self.validate().unwrap_or(0)
    }
    fn eval(&self, xstar: &[f64]) -> f64 {
        self.value(xstar)
    }
    fn gradient(&self, xstar: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.value_and_gradient(xstar).1);
    }
}

/// `⋁_{k=1..m} ⋀_{l=1..n} δ_{x_kl}`, stored as a rectangular `m × n` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormalFormFile", into = "NormalFormFile")]
pub struct NormalForm {
    dim: usize,
    rows: Vec<Vec<Vector>>,
}

#[derive(Serialize, Deserialize)]
struct NormalFormFile {
    #[serde(default)]
    m: Option<usize>,
    #[serde(default)]
    n: Option<usize>,
    generators: Vec<Vec<Vector>>,
}

impl TryFrom<NormalFormFile> for NormalForm {
    type Error = Error;
    fn try_from(f: NormalFormFile) -> Result<Self> {
        let nf = NormalForm::new(f.generators)?;
        if f.m.is_some_and(|m| m != nf.m()) || f.n.is_some_and(|n| n != nf.n()) {
            return Err(Error::InvalidExpression(
                "declared shape does not match generators".into(),
            ));
        }
        Ok(nf)
    }
}

impl From<NormalForm> for NormalFormFile {
    fn from(nf: NormalForm) -> Self {
        NormalFormFile {
            m: Some(nf.m()),
            n: Some(nf.n()),
            generators: nf.rows,
        }
    }
}

impl NormalForm {
    /// Builds a normal form from possibly ragged rows. Duplicate entries in a
    /// row and duplicate rows are dropped; short rows are padded by repeating
    /// their last entry.
    pub fn new(rows: Vec<Vec<Vector>>) -> Result<Self> {
        let dim = rows
            .first()
            .and_then(|r| r.first())
            .map(|x| x.len())
            .ok_or_else(|| Error::InvalidExpression("empty normal form".into()))?;
        if dim == 0 {
            return Err(Error::InvalidExpression("zero-dimensional generator".into()));
        }
        for r in &rows {
            if r.is_empty() {
                return Err(Error::InvalidExpression("empty row in normal form".into()));
            }
            for x in r {
                if x.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: x.len(),
                    });
                }
                if x.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidExpression(format!("non-finite generator {x:?}")));
                }
            }
        }
        Ok(Self::from_rows_unchecked(dim, rows))
    }

    fn from_rows_unchecked(dim: usize, rows: Vec<Vec<Vector>>) -> Self {
        let rows = pad(canonical_rows(rows));
        Self { dim, rows }
    }

    /// The single generator `δ_x`.
    pub fn generator(x: Vector) -> Self {
        let dim = x.len();
        Self {
            dim,
            rows: vec![vec![x]],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.rows[0].len()
    }

    /// A row made of the zero generator only, which makes the form `>= 0`.
    pub fn has_zero_row(&self) -> bool {
        self.rows
            .iter()
            .any(|r| r.iter().all(|x| x.iter().all(|&c| c == 0.0)))
    }

    pub fn rows(&self) -> &[Vec<Vector>] {
        &self.rows
    }

    /// Row index and entry index of the active generator at `xstar`.
    fn active(&self, xstar: &[f64]) -> (f64, usize, usize) {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for (k, row) in self.rows.iter().enumerate() {
            let mut low = (f64::INFINITY, 0);
            for (l, x) in row.iter().enumerate() {
                let v = dot(x, xstar);
                if v < low.0 {
                    low = (v, l);
                }
            }
            if low.0 > best.0 {
                best = (low.0, k, low.1);
            }
        }
        best
    }

    pub fn evaluate(&self, xstar: &[f64]) -> Result<f64> {
        if xstar.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: xstar.len(),
            });
        }
        Ok(self.eval(xstar))
    }

    pub fn to_expr(&self) -> LatticeExpr {
        LatticeExpr::Sup(
            self.rows
                .iter()
                .map(|r| LatticeExpr::Inf(r.iter().cloned().map(LatticeExpr::Gen).collect()))
                .collect(),
        )
    }

    /// Every generator multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c >= 0.0, "scaled() needs a nonnegative factor");
        Self {
            dim: self.dim,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|x| linalg::scale(x, c)).collect())
                .collect(),
        }
    }
}

impl Evaluable for NormalForm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, xstar: &[f64]) -> f64 {
        self.active(xstar).0
    }
    fn gradient(&self, xstar: &[f64], out: &mut [f64]) {
        let (_, k, l) = self.active(xstar);
        out.copy_from_slice(&self.rows[k][l]);
    }
}

type Rows = Vec<Vec<Vector>>;

fn cmp_vec(a: &Vector, b: &Vector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Sorts and deduplicates entries inside each row (exact equality), then
/// drops repeated rows keeping the first occurrence. `-0.0` is folded into
/// `0.0` first so that equal vectors compare equal.
fn canonical_rows(rows: Rows) -> Rows {
    let mut out: Rows = Vec::with_capacity(rows.len());
    for mut row in rows {
        for x in row.iter_mut() {
            for c in x.iter_mut() {
                if *c == 0.0 {
                    *c = 0.0;
                }
            }
        }
        row.sort_by(cmp_vec);
        row.dedup();
        if !out.contains(&row) {
            out.push(row);
        }
    }
    out
}

fn pad(mut rows: Rows) -> Rows {
    let n = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    for r in rows.iter_mut() {
        let last = r.last().expect("nonempty row").clone();
        r.resize(n, last);
    }
    rows
}

struct Normalizer {
    limit: usize,
}

impl Normalizer {
    fn check(&self, rows: &Rows) -> Result<()> {
        let size: usize = rows.iter().map(|r| r.len()).sum();
        if size > self.limit {
            Err(Error::BudgetExceeded(format!(
                "normal form has more than {} generator entries",
                self.limit
            )))
        } else {
            Ok(())
        }
    }

    fn finish(&self, rows: Rows) -> Result<Rows> {
        let rows = canonical_rows(rows);
        self.check(&rows)?;
        Ok(rows)
    }

    fn run(&self, e: &LatticeExpr) -> Result<Rows> {
        match e {
            LatticeExpr::Gen(x) => Ok(vec![vec![x.clone()]]),
            LatticeExpr::Scale { c, of } => {
                let inner = self.run(of)?;
                if *c >= 0.0 {
                    Ok(scale_rows(&inner, *c))
                } else {
                    self.negate(&scale_rows(&inner, -c))
                }
            }
            LatticeExpr::Sup(cs) => {
                let mut out = Vec::new();
                for c in cs {
                    out.extend(self.run(c)?);
                }
                self.finish(out)
            }
            LatticeExpr::Inf(cs) => {
                let mut acc = self.run(&cs[0])?;
                for c in &cs[1..] {
                    let other = self.run(c)?;
                    let mut out = Vec::with_capacity(acc.len() * other.len());
                    for a in &acc {
                        for b in &other {
                            let mut row = a.clone();
                            row.extend(b.iter().cloned());
                            out.push(row);
                        }
                    }
                    acc = self.finish(out)?;
                }
                Ok(acc)
            }
            LatticeExpr::Add(cs) => {
                let mut acc = self.run(&cs[0])?;
                for c in &cs[1..] {
                    let other = self.run(c)?;
                    let mut out = Vec::with_capacity(acc.len() * other.len());
                    for a in &acc {
                        for b in &other {
                            let mut row = Vec::with_capacity(a.len() * b.len());
                            for x in a {
                                for y in b {
                                    row.push(linalg::add(x, y));
                                }
                            }
                            out.push(row);
                        }
                    }
                    acc = self.finish(out)?;
                }
                Ok(acc)
            }
            LatticeExpr::Abs(c) => {
                let f = self.run(c)?;
                let mut out = self.negate(&f)?;
                out.splice(0..0, f);
                self.finish(out)
            }
            LatticeExpr::PosPart(c) => {
                let f = self.run(c)?;
                let dim = f[0][0].len();
                let mut out = f;
                out.push(vec![vec![0.0; dim]]);
                self.finish(out)
            }
            LatticeExpr::NegPart(c) => {
                let f = self.run(c)?;
                let dim = f[0][0].len();
                let mut out = self.negate(&f)?;
                out.push(vec![vec![0.0; dim]]);
                self.finish(out)
            }
        }
    }

    /// `-⋁_k ⋀_l δ_{a_kl} = ⋀_k ⋁_l δ_{-a_kl}`, expanded over choice functions
    /// `k ↦ l(k)` into `⋁_l ⋀_k δ_{-a_{k,l(k)}}`.
    fn negate(&self, rows: &Rows) -> Result<Rows> {
        let mut acc: Rows = vec![Vec::new()];
        for row in rows {
            let mut next = Vec::with_capacity(acc.len() * row.len());
            for partial in &acc {
                for x in row {
                    let mut p = partial.clone();
                    p.push(linalg::neg(x));
                    next.push(p);
                }
            }
            acc = canonical_rows(next);
            self.check(&acc)?;
        }
        Ok(acc)
    }
}

fn scale_rows(rows: &Rows, c: f64) -> Rows {
    rows.iter()
        .map(|r| r.iter().map(|x| linalg::scale(x, c)).collect())
        .collect()
}

/// Rewrites `e` into an equivalent `⋁⋀` form.
///
/// The result can be exponentially larger than `e` in its nesting depth,
/// mainly through negations of wide forms; see [`normalize_with_limit`].
pub fn normalize(e: &LatticeExpr) -> Result<NormalForm> {
    normalize_with_limit(e, usize::MAX)
}

/// Like [`normalize`] but fails with [`Error::BudgetExceeded`] as soon as an
/// intermediate form holds more than `limit` generator entries.
pub fn normalize_with_limit(e: &LatticeExpr, limit: usize) -> Result<NormalForm> {
    let dim = e.validate()?;
    let rows = Normalizer { limit }.run(e)?;
    Ok(NormalForm::from_rows_unchecked(dim, rows))
}

/// The `⋁⋀` form of `-nf`. Its size is `n^m × m` before deduplication.
pub fn negate_normal(nf: &NormalForm) -> NormalForm {
    negate_normal_with_limit(nf, usize::MAX).expect("no limit")
}

/// Like [`negate_normal`] with the budget of [`normalize_with_limit`].
pub fn negate_normal_with_limit(nf: &NormalForm, limit: usize) -> Result<NormalForm> {
    let rows = Normalizer { limit }.negate(&nf.rows)?;
    Ok(NormalForm::from_rows_unchecked(nf.dim, rows))
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityReport {
    pub holds: bool,
    pub samples: usize,
    pub seed: u64,
    pub counterexample: Option<HomogeneityCounterexample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityCounterexample {
    pub xstar: Vector,
    pub t: f64,
    pub scaled_value: f64,
    pub value_times_t: f64,
}

/// Spot-checks `f(t x*) = t f(x*)` for random `x* ∈ [-1, 1]^d` and
/// `t ∈ [0, 2]`, to `tol` relative to the magnitude of the values.
pub fn homogeneity_check_with_tol(
    f: &dyn Evaluable,
    samples: usize,
    seed: u64,
    tol: f64,
) -> HomogeneityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = f.dim();
    for _ in 0..samples {
        let xstar: Vector = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let t = rng.random_range(0.0..=2.0);
        let scaled: Vector = linalg::scale(&xstar, t);
        let lhs = f.eval(&scaled);
        let rhs = t * f.eval(&xstar);
        if !((lhs - rhs).abs() <= tol * lhs.abs().max(rhs.abs()).max(1.0)) {
            return HomogeneityReport {
                holds: false,
                samples,
                seed,
                counterexample: Some(HomogeneityCounterexample {
                    xstar,
                    t,
                    scaled_value: lhs,
                    value_times_t: rhs,
                }),
            };
        }
    }
    HomogeneityReport {
        holds: true,
        samples,
        seed,
        counterexample: None,
    }
}

/// [`homogeneity_check_with_tol`] at tolerance `1e-12`.
pub fn homogeneity_check(f: &dyn Evaluable, samples: usize, seed: u64) -> HomogeneityReport {
    homogeneity_check_with_tol(f, samples, seed, 1e-12)
}

/// Random expression of depth at most `max_depth`, generator coordinates
/// uniform in `[-1, 1]`.
pub fn random_expr<R: Rng + ?Sized>(dim: usize, max_depth: usize, rng: &mut R) -> LatticeExpr {
    if max_depth <= 1 || rng.random_bool(0.3) {
        return LatticeExpr::Gen((0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect());
    }
    let sub = max_depth - 1;
    match rng.random_range(0..7) {
        0 => LatticeExpr::scale(rng.random_range(-2.0..=2.0), random_expr(dim, sub, rng)),
        1 => LatticeExpr::Add(vec![random_expr(dim, sub, rng), random_expr(dim, sub, rng)]),
        2 => LatticeExpr::Sup(vec![random_expr(dim, sub, rng), random_expr(dim, sub, rng)]),
        3 => LatticeExpr::Inf(vec![random_expr(dim, sub, rng), random_expr(dim, sub, rng)]),
        4 => LatticeExpr::abs(random_expr(dim, sub, rng)),
        5 => LatticeExpr::pos_part(random_expr(dim, sub, rng)),
        _ => LatticeExpr::neg_part(random_expr(dim, sub, rng)),
    }
}

/// Random `m × n` normal form with coordinates uniform in `[-1, 1]`.
pub fn random_normal_form<R: Rng + ?Sized>(dim: usize, m: usize, n: usize, rng: &mut R) -> NormalForm {
    let rows = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
                .collect()
        })
        .collect();
    NormalForm::new(rows).expect("well-formed random normal form")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(x: &[f64]) -> LatticeExpr {
        LatticeExpr::gen(x.to_vec())
    }

    #[test]
    fn evaluation_examples() {
        let e = LatticeExpr::inf(vec![g(&[1.0, 0.0]), g(&[0.0, 1.0])]);
        assert_eq!(e.evaluate(&[0.5, 0.5]).unwrap(), 0.5);
        assert_eq!(LatticeExpr::zero(2).evaluate(&[0.3, -0.7]).unwrap(), 0.0);
        assert_eq!(LatticeExpr::abs(g(&[1.0, 1.0])).evaluate(&[-1.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            e.evaluate(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn mixed_dimensions_rejected() {
        let e = LatticeExpr::sup(vec![g(&[1.0, 0.0]), g(&[1.0])]);
        assert!(e.validate().is_err());
        assert!(LatticeExpr::Sup(vec![]).validate().is_err());
    }

    #[test]
    fn normalize_abs() {
        let nf = normalize(&LatticeExpr::abs(g(&[1.0, 2.0]))).unwrap();
        assert_eq!((nf.m(), nf.n()), (2, 1));
        assert!(nf.rows().contains(&vec![vec![1.0, 2.0]]));
        assert!(nf.rows().contains(&vec![vec![-1.0, -2.0]]));
    }

    #[test]
    fn normalize_translation_distributes() {
        let e = LatticeExpr::add(vec![
            g(&[1.0, 0.0]),
            LatticeExpr::inf(vec![g(&[0.0, 1.0]), g(&[2.0, 2.0])]),
        ]);
        let nf = normalize(&e).unwrap();
        assert_eq!((nf.m(), nf.n()), (1, 2));
        let row = &nf.rows()[0];
        assert!(row.contains(&vec![1.0, 1.0]));
        assert!(row.contains(&vec![3.0, 2.0]));
    }

    #[test]
    fn normalize_distributivity() {
        let (x, y, z) = ([1.0, 0.0], [0.0, 1.0], [1.0, 1.0]);
        let e = LatticeExpr::inf(vec![LatticeExpr::sup(vec![g(&x), g(&y)]), g(&z)]);
        let nf = normalize(&e).unwrap();
        assert_eq!((nf.m(), nf.n()), (2, 2));
        for row in nf.rows() {
            assert!(row.contains(&z.to_vec()));
        }
    }

    #[test]
    fn padding_repeats_last_entry() {
        let nf = NormalForm::new(vec![
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec![vec![5.0]],
        ])
        .unwrap();
        assert_eq!((nf.m(), nf.n()), (2, 3));
        assert_eq!(nf.rows()[1], vec![vec![5.0]; 3]);
    }

    #[test]
    fn negate_normal_de_morgan() {
        let (x, y) = (vec![1.0, 0.0], vec![0.0, 1.0]);
        let single = negate_normal(&NormalForm::generator(x.clone()));
        assert_eq!(single.rows(), &[vec![vec![-1.0, 0.0]]]);

        let sup = NormalForm::new(vec![vec![x.clone()], vec![y.clone()]]).unwrap();
        let neg = negate_normal(&sup);
        assert_eq!((neg.m(), neg.n()), (1, 2));

        let inf = NormalForm::new(vec![vec![x, y]]).unwrap();
        let neg = negate_normal(&inf);
        assert_eq!((neg.m(), neg.n()), (2, 1));
    }

    #[test]
    fn negative_scale_is_eliminated() {
        let e = LatticeExpr::scale(-2.0, LatticeExpr::sup(vec![g(&[1.0, 0.0]), g(&[0.0, 1.0])]));
        let nf = normalize(&e).unwrap();
        for p in [[0.3, -0.2], [-1.0, 0.5], [0.0, 0.0]] {
            assert!((nf.eval(&p) - e.eval(&p)).abs() < 1e-15);
        }
    }

    #[test]
    fn pos_and_neg_parts() {
        let f = g(&[1.0, -1.0]);
        let pos = normalize(&LatticeExpr::pos_part(f.clone())).unwrap();
        let neg = normalize(&LatticeExpr::neg_part(f)).unwrap();
        assert_eq!(pos.eval(&[1.0, 0.0]), 1.0);
        assert_eq!(pos.eval(&[0.0, 1.0]), 0.0);
        assert_eq!(neg.eval(&[0.0, 1.0]), 1.0);
        assert_eq!(neg.eval(&[1.0, 0.0]), 0.0);
    }

    #[test]
    fn limit_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let wide = random_normal_form(2, 6, 6, &mut rng).to_expr();
        let e = LatticeExpr::abs(wide);
        assert!(matches!(normalize_with_limit(&e, 1000), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"sup":[{"gen":[1,0]},{"inf":[{"gen":[0,1]},{"scale":{"c":2,"of":{"gen":[1,1]}}}]}]}"#;
        let e = LatticeExpr::from_json_str(text).unwrap();
        assert_eq!(e.depth(), 4);
        assert_eq!(e.eval(&[0.5, 0.25]), 0.5);
        let back: LatticeExpr = serde_json::from_str(&serde_json::to_string(&e).unwrap()).unwrap();
        assert_eq!(back, e);

        let nf = normalize(&e).unwrap();
        let s = serde_json::to_string(&nf).unwrap();
        let nf2: NormalForm = serde_json::from_str(&s).unwrap();
        assert_eq!(nf, nf2);
        assert!(serde_json::from_str::<NormalForm>(r#"{"m":3,"generators":[[[1,0]]]}"#).is_err());
    }

    #[test]
    fn homogeneity_examples() {
        let x = g(&[0.3, -0.4]);
        assert!(homogeneity_check(&x, 200, 1).holds);
        let e = LatticeExpr::inf(vec![LatticeExpr::abs(x), g(&[1.0, 1.0])]);
        assert!(homogeneity_check(&e, 200, 2).holds);
        let affine = FnEvaluable::new(2, |p: &[f64]| p[0] + 1.0);
        let r = homogeneity_check(&affine, 10, 3);
        assert!(!r.holds);
        assert!(r.counterexample.is_some());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let e = random_expr(3, 4, &mut rng);
            let nf = normalize(&e).unwrap();
            let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut ga = vec![0.0; 3];
            let mut gn = vec![0.0; 3];
            let mut gf = vec![0.0; 3];
            e.gradient(&p, &mut ga);
            nf.gradient(&p, &mut gn);
            FnEvaluable::new(3, |q: &[f64]| e.eval(q)).gradient(&p, &mut gf);
            // at a generic point all three agree
            assert!(linalg::dist_inf(&ga, &gf) < 1e-5, "{ga:?} vs {gf:?}");
            assert!(linalg::dist_inf(&gn, &gf) < 1e-5, "{gn:?} vs {gf:?}");
        }
    }
}
