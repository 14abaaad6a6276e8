//! Finite-dimensional pre-ordered Banach spaces with polyhedral unit balls.
//!
//! A space is given by the vertices of its (symmetric) unit ball `B_X` and a
//! finite list of wedge generators. Everything else is derived by linear
//! programming or by vertex enumeration in the dual:
//!
//! * the dual ball `B_X* = {x*: |x*(v)| <= 1 for every ball vertex v}`,
//! * its positive part `B+ = B_X* ∩ {x*: x*(g) >= 0 for every generator g}`,
//! * gauges, wedge membership, point separation and the norming property.

use std::path::Path;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, Vector};
use crate::lp::{LinearProgram, Sense};

/// Global tolerance for membership and equality tests in the geometry layer.
pub const GEO_TOL: f64 = 1e-9;

/// `⟨normal, x⟩ <= offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vector,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vector, offset: f64) -> Self {
        Self { normal, offset }
    }

    fn slack_tol(&self, tol: f64) -> f64 {
        tol * linalg::norm_inf(&self.normal).max(1.0)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        dot(&self.normal, x) <= self.offset + self.slack_tol(tol)
    }
}

/// Bounded convex polytope carried in both vertex and halfspace form.
///
/// May be lower-dimensional (a segment in the plane, or the single point 0).
#[derive(Debug, Clone, Serialize)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vector>,
    halfspaces: Vec<Halfspace>,
}

impl Polytope {
    /// Builds the polytope `{x: ⟨a, x⟩ <= b}` and enumerates its vertices.
    ///
    /// Vertex enumeration is brute force over `dim`-subsets of the
    /// constraints, which is exact up to [`GEO_TOL`] and cheap for the small
    /// dimensions used here. The set must be bounded and nonempty.
    pub fn from_halfspaces(dim: usize, halfspaces: Vec<Halfspace>) -> Result<Self> {
        let mut hs: Vec<Halfspace> = Vec::with_capacity(halfspaces.len());
        for h in halfspaces {
            if h.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: h.normal.len(),
                });
            }
            if linalg::norm_inf(&h.normal) == 0.0 {
                if h.offset < 0.0 {
                    return Err(Error::InvalidSpace("empty halfspace system".into()));
                }
                continue;
            }
            if !hs.contains(&h) {
                hs.push(h);
            }
        }

        let mut vertices: Vec<Vector> = Vec::new();
        linalg::for_each_combination(hs.len(), dim, |idx| {
            let a: Vec<Vector> = idx.iter().map(|&i| hs[i].normal.clone()).collect();
            let b: Vec<f64> = idx.iter().map(|&i| hs[i].offset).collect();
            let Some(x) = linalg::solve(&a, &b) else {
                return;
            };
            if hs.iter().all(|h| h.contains(&x, GEO_TOL))
                && !vertices.iter().any(|v| linalg::approx_eq(v, &x, GEO_TOL))
            {
                vertices.push(x.iter().map(|c| clean(*c)).collect());
            }
        });
        if vertices.is_empty() {
            return Err(Error::InvalidSpace(
                "halfspace system is empty or unbounded".into(),
            ));
        }
        Ok(Self {
            dim,
            vertices,
            halfspaces: hs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// Vertices other than the origin.
    pub fn nonzero_vertices(&self) -> impl Iterator<Item = &Vector> {
        self.vertices
            .iter()
            .filter(|v| linalg::norm_inf(v) > GEO_TOL)
    }

    pub fn is_origin(&self) -> bool {
        self.nonzero_vertices().next().is_none()
    }

    /// Dimension of the linear span of the vertices.
    pub fn span_rank(&self) -> usize {
        linalg::rank(&self.vertices, GEO_TOL)
    }

    /// Membership through the halfspace description.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.contains(x, tol))
    }

    /// Membership in the convex hull of the vertices, decided by an LP that
    /// minimises the l1 residual of a convex combination.
    pub fn hull_contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        hull_contains(&self.vertices, x, tol)
    }

    /// Cross-membership check: every vertex satisfies every halfspace.
    /// Together with construction by enumeration this certifies that both
    /// descriptions denote the same set.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.vertices.iter().all(|v| self.contains(v, tol))
    }

    /// Two polytopes are equal when each one's vertices lie in the other.
    pub fn same_set(&self, other: &Polytope, tol: f64) -> Result<bool> {
        for v in &other.vertices {
            if !self.hull_contains(v, tol)? {
                return Ok(false);
            }
        }
        for v in &self.vertices {
            if !other.hull_contains(v, tol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Maximum of a linear functional over the polytope (attained at a vertex).
    pub fn support(&self, c: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| dot(v, c))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn clean(c: f64) -> f64 {
    if c.abs() < 1e-15 {
        0.0
    } else {
        c
    }
}

/// `x ∈ conv(points)` up to `tol`, via an l1-residual LP.
pub fn hull_contains(points: &[Vector], x: &[f64], tol: f64) -> Result<bool> {
    let d = x.len();
    let k = points.len();
    if k == 0 {
        return Ok(false);
    }
    // variables: λ (k), s+ (d), s- (d)
    let nv = k + 2 * d;
    let mut obj = vec![0.0; nv];
    for o in &mut obj[k..] {
        *o = 1.0;
    }
    let mut lp = LinearProgram::minimize(obj);
    lp.nonnegative(0..nv);
    for i in 0..d {
        let mut row = vec![0.0; nv];
        for (j, p) in points.iter().enumerate() {
            row[j] = p[i];
        }
        row[k + i] = 1.0;
        row[k + d + i] = -1.0;
        lp.row(row, Sense::Eq, x[i]);
    }
    let mut sum = vec![0.0; nv];
    for s in &mut sum[..k] {
        *s = 1.0;
    }
    lp.row(sum, Sense::Eq, 1.0);
    let sol = lp.solve()?;
    Ok(sol.objective <= tol * linalg::norm_inf(x).max(1.0))
}

/// A dual vector acting by the standard pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualFunctional {
    pub coords: Vector,
}

impl DualFunctional {
    pub fn new(coords: Vector) -> Self {
        Self { coords }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    /// `x*(x)`, which is also `δ_x(x*)`.
    #[inline]
    pub fn apply(&self, x: &[f64]) -> f64 {
        dot(&self.coords, x)
    }

    pub fn in_dual_ball(&self, space: &PreorderedSpace) -> bool {
        space.dual_norm(&self.coords) <= 1.0 + GEO_TOL
    }

    pub fn is_positive(&self, space: &PreorderedSpace) -> bool {
        space
            .cone_generators
            .iter()
            .all(|g| self.apply(g) >= -GEO_TOL * linalg::norm_inf(g).max(1.0))
    }
}

/// On-disk description of a space.
///
/// Either `ball_vertices` or the shorthand `ball` (`"linf"` or `"l1"`) must be
/// given. Smooth balls are not representable.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpaceDefinition {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ball_vertices: Vec<Vector>,
    #[serde(default)]
    pub cone_generators: Vec<Vector>,
}

/// A pre-ordered Banach space `(X, X+)` with a polyhedral unit ball.
///
/// Immutable after construction; the dual ball and its positive part are
/// computed once.
#[derive(Debug, Clone)]
pub struct PreorderedSpace {
    dim: usize,
    ball_vertices: Vec<Vector>,
    cone_generators: Vec<Vector>,
    /// Ball vertices with one representative per `±v` pair.
    constraint_vertices: Vec<Vector>,
    polar: Polytope,
    positive: Polytope,
}

impl PreorderedSpace {
    pub fn new(dim: usize, ball_vertices: Vec<Vector>, cone_generators: Vec<Vector>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpace("dimension must be positive".into()));
        }
        if ball_vertices.is_empty() {
            return Err(Error::InvalidSpace("ball has no vertices".into()));
        }
        for v in ball_vertices.iter().chain(&cone_generators) {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidSpace(format!("non-finite coordinate in {v:?}")));
            }
        }
        for v in &ball_vertices {
            let tol = GEO_TOL * linalg::norm_inf(v).max(1.0);
            if !ball_vertices
                .iter()
                .any(|w| v.iter().zip(w).all(|(a, b)| (a + b).abs() <= tol))
            {
                return Err(Error::InvalidSpace(format!(
                    "ball is not symmetric: -{v:?} is missing"
                )));
            }
        }
        if linalg::rank(&ball_vertices, GEO_TOL) < dim {
            return Err(Error::InvalidSpace(
                "ball is not full-dimensional".into(),
            ));
        }

        let mut constraint_vertices: Vec<Vector> = Vec::new();
        for v in &ball_vertices {
            if linalg::norm_inf(v) <= GEO_TOL {
                continue;
            }
            let dup = constraint_vertices.iter().any(|w| {
                linalg::approx_eq(w, v, GEO_TOL) || linalg::approx_eq(w, &linalg::neg(v), GEO_TOL)
            });
            if !dup {
                constraint_vertices.push(v.clone());
            }
        }

        let mut hs: Vec<Halfspace> = Vec::new();
        for v in &constraint_vertices {
            hs.push(Halfspace::new(v.clone(), 1.0));
            hs.push(Halfspace::new(linalg::neg(v), 1.0));
        }
        let polar = Polytope::from_halfspaces(dim, hs.clone())?;
        for g in &cone_generators {
            hs.push(Halfspace::new(linalg::neg(g), 0.0));
        }
        let positive = Polytope::from_halfspaces(dim, hs)?;

        Ok(Self {
            dim,
            ball_vertices,
            cone_generators,
            constraint_vertices,
            polar,
            positive,
        })
    }

    pub fn from_definition(def: &SpaceDefinition) -> Result<Self> {
        let vertices = match (&def.ball, def.ball_vertices.is_empty()) {
            (Some(_), false) => {
                return Err(Error::InvalidSpace(
                    "give either `ball` or `ball_vertices`, not both".into(),
                ))
            }
            (Some(name), true) => named_ball(def.dim, name)?,
            (None, _) => def.ball_vertices.clone(),
        };
        Self::new(def.dim, vertices, def.cone_generators.clone())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let def: SpaceDefinition = crate::io::parse_json(s, "<space>")?;
        Self::from_definition(&def)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let def: SpaceDefinition = crate::io::read_json(path.as_ref())?;
        Self::from_definition(&def)
    }

    pub fn definition(&self) -> SpaceDefinition {
        SpaceDefinition {
            dim: self.dim,
            ball: None,
            ball_vertices: self.ball_vertices.clone(),
            cone_generators: self.cone_generators.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ball_vertices(&self) -> &[Vector] {
        &self.ball_vertices
    }

    pub fn cone_generators(&self) -> &[Vector] {
        &self.cone_generators
    }

    /// One ball vertex per `±v` pair; the constraints `|x*(v)| <= 1`.
    pub fn constraint_vertices(&self) -> &[Vector] {
        &self.constraint_vertices
    }

    /// The dual unit ball `B_X*`.
    pub fn polar_ball(&self) -> &Polytope {
        &self.polar
    }

    /// `B+`: contractive functionals that are nonnegative on the wedge.
    pub fn dual_positive_part(&self) -> &Polytope {
        &self.positive
    }

    pub(crate) fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                got,
            })
        } else {
            Ok(())
        }
    }

    pub fn functional(&self, coords: Vector) -> Result<DualFunctional> {
        self.check_dim(coords.len())?;
        Ok(DualFunctional::new(coords))
    }

    /// `‖x*‖ = max over ball vertices of |x*(v)|`.
    pub fn dual_norm(&self, xstar: &[f64]) -> f64 {
        self.constraint_vertices
            .iter()
            .map(|v| dot(v, xstar).abs())
            .fold(0.0, f64::max)
    }

    /// Gauge of `B_X`: `min Σ λ_i` subject to `Σ λ_i v_i = x`, `λ >= 0`.
    pub fn space_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        if linalg::norm_inf(x) == 0.0 {
            return Ok(0.0);
        }
        let k = self.ball_vertices.len();
        let mut lp = LinearProgram::minimize(vec![1.0; k]);
        lp.nonnegative(0..k);
        for i in 0..self.dim {
            let row = self.ball_vertices.iter().map(|v| v[i]).collect();
            lp.row(row, Sense::Eq, x[i]);
        }
        Ok(lp.solve()?.objective)
    }

    /// Primal wedge test: is `x = Σ λ_i g_i` with `λ >= 0` solvable?
    pub fn cone_membership(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x.len())?;
        let tol = GEO_TOL * linalg::norm_inf(x).max(1.0);
        let k = self.cone_generators.len();
        if k == 0 {
            return Ok(linalg::norm_inf(x) <= tol);
        }
        let d = self.dim;
        let nv = k + 2 * d;
        let mut obj = vec![0.0; nv];
        for o in &mut obj[k..] {
            *o = 1.0;
        }
        let mut lp = LinearProgram::minimize(obj);
        lp.nonnegative(0..nv);
        for i in 0..d {
            let mut row = vec![0.0; nv];
            for (j, g) in self.cone_generators.iter().enumerate() {
                row[j] = g[i];
            }
            row[k + i] = 1.0;
            row[k + d + i] = -1.0;
            lp.row(row, Sense::Eq, x[i]);
        }
        Ok(lp.solve()?.objective <= tol)
    }

    /// Dual wedge test: `min over B+ of x*(x) >= -tol`.
    pub fn cone_membership_dual(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x.len())?;
        let tol = GEO_TOL * linalg::norm_inf(x).max(1.0);
        let min = self
            .positive
            .vertices()
            .iter()
            .map(|v| dot(v, x))
            .fold(f64::INFINITY, f64::min);
        Ok(min >= -tol)
    }

    /// The wedge is a cone iff no nonzero generator has its negative in the
    /// wedge.
    pub fn is_cone(&self) -> Result<bool> {
        for g in &self.cone_generators {
            if linalg::norm_inf(g) <= GEO_TOL {
                continue;
            }
            if self.cone_membership(&linalg::neg(g))? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `B+` separates the points of `X` iff its span is all of `X*`.
    pub fn separates_points(&self) -> bool {
        self.positive.span_rank() == self.dim
    }

    /// `conv(B+ ∪ -B+) = B_X*`.
    pub fn is_norming(&self) -> Result<bool> {
        let mut sym: Vec<Vector> = self.positive.vertices().to_vec();
        sym.extend(self.positive.vertices().iter().map(|v| linalg::neg(v)));
        for v in self.polar.vertices() {
            if !hull_contains(&sym, v, GEO_TOL)? {
                return Ok(false);
            }
        }
        for v in &sym {
            if !self.polar.contains(v, GEO_TOL) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Points of `B+`: its vertices, midpoints of vertex pairs, then random
    /// convex combinations of vertices until `count` points are collected.
    pub fn sample_positive_part<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<Vector> {
        let verts = self.positive.vertices();
        let mut out: Vec<Vector> = verts.to_vec();
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                out.push(linalg::scale(&linalg::add(&verts[i], &verts[j]), 0.5));
            }
        }
        while out.len() < count {
            let weights: Vec<f64> = verts.iter().map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = weights.iter().sum();
            let mut x = vec![0.0; self.dim];
            for (w, v) in weights.iter().zip(verts) {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += w / total * vi;
                }
            }
            out.push(x);
        }
        out
    }

    /// Treats the vertices of `B_X*` as the ball of a new space (no wedge).
    pub fn polar_as_space(&self) -> Result<PreorderedSpace> {
        PreorderedSpace::new(self.dim, self.polar.vertices().to_vec(), Vec::new())
    }
}

fn named_ball(dim: usize, name: &str) -> Result<Vec<Vector>> {
    match name {
        "linf" | "l_inf" | "cube" => {
            let mut out = Vec::with_capacity(1 << dim);
            for mask in 0..(1usize << dim) {
                out.push(
                    (0..dim)
                        .map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 })
                        .collect(),
                );
            }
            Ok(out)
        }
        "l1" | "cross" => {
            let mut out = Vec::with_capacity(2 * dim);
            for i in 0..dim {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; dim];
                    v[i] = s;
                    out.push(v);
                }
            }
            Ok(out)
        }
        other => Err(Error::InvalidSpace(format!(
            "ball `{other}` is not polyhedral or not known; give `ball_vertices`"
        ))),
    }
}

/// The two-dimensional reference spaces used in tests, examples and the CLI.
///
/// All four use the square `[-1, 1]^2` as unit ball.
pub mod fixtures {
    use super::PreorderedSpace;

    fn square() -> Vec<Vec<f64>> {
        vec![
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ]
    }

    /// Trivial wedge `{0}`.
    pub fn space_a() -> PreorderedSpace {
        PreorderedSpace::new(2, square(), vec![]).unwrap()
    }

    /// First quadrant.
    pub fn space_b() -> PreorderedSpace {
        PreorderedSpace::new(2, square(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    /// The whole plane.
    pub fn space_c() -> PreorderedSpace {
        PreorderedSpace::new(
            2,
            square(),
            vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
            ],
        )
        .unwrap()
    }

    /// Closed upper half-plane.
    pub fn space_e() -> PreorderedSpace {
        PreorderedSpace::new(
            2,
            square(),
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap()
    }

    /// `[-1, 1]^3` with the trivial wedge.
    pub fn cube3() -> PreorderedSpace {
        PreorderedSpace::from_definition(&super::SpaceDefinition {
            dim: 3,
            ball: Some("linf".into()),
            ball_vertices: vec![],
            cone_generators: vec![],
        })
        .unwrap()
    }

    /// Looks up a fixture by its name (`SPACE-A`, `SPACE-B`, `SPACE-C`,
    /// `SPACE-E`, `CUBE-3`), case-insensitively.
    pub fn by_name(name: &str) -> Option<PreorderedSpace> {
        match name.to_ascii_uppercase().as_str() {
            "SPACE-A" => Some(space_a()),
            "SPACE-B" => Some(space_b()),
            "SPACE-C" => Some(space_c()),
            "SPACE-E" => Some(space_e()),
            "CUBE-3" => Some(cube3()),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    /// Independent oracle: a point is a vertex of `{x: ⟨a_i, x⟩ <= b_i}` iff it
    /// is feasible and the active normals have full rank. Candidates are
    /// taken from a rational grid, which contains every vertex of the
    /// fixtures below.
    fn grid_vertices(poly_hs: &[Halfspace], dim: usize) -> Vec<Vector> {
        let steps: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.25).collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; dim];
        loop {
            let x: Vector = idx.iter().map(|&i| steps[i]).collect();
            let feasible = poly_hs.iter().all(|h| dot(&h.normal, &x) <= h.offset + 1e-12);
            if feasible {
                let active: Vec<Vector> = poly_hs
                    .iter()
                    .filter(|h| (dot(&h.normal, &x) - h.offset).abs() <= 1e-12)
                    .map(|h| h.normal.clone())
                    .collect();
                if linalg::rank(&active, 1e-12) == dim {
                    out.push(x);
                }
            }
            let mut k = 0;
            loop {
                if k == dim {
                    return out;
                }
                idx[k] += 1;
                if idx[k] < steps.len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    fn same_vertex_sets(a: &[Vector], b: &[Vector]) -> bool {
        a.len() == b.len()
            && a.iter().all(|v| b.iter().any(|w| linalg::approx_eq(v, w, 1e-9)))
    }

    #[test]
    fn polar_of_square_is_diamond() {
        let s = space_a();
        let p = s.polar_ball();
        let expected = grid_vertices(p.halfspaces(), 2);
        assert_eq!(expected.len(), 4);
        assert!(same_vertex_sets(p.vertices(), &expected));
        assert!(same_vertex_sets(
            p.vertices(),
            &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]]
        ));
        assert!(p.is_consistent(GEO_TOL));
    }

    #[test]
    fn polar_of_diamond_is_square() {
        let diamond = PreorderedSpace::new(
            2,
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            vec![],
        )
        .unwrap();
        let p = diamond.polar_ball();
        let expected = grid_vertices(p.halfspaces(), 2);
        assert!(same_vertex_sets(p.vertices(), &expected));
        assert!(same_vertex_sets(p.vertices(), space_a().ball_vertices()));
    }

    #[test]
    fn one_dimensional_ball_is_self_polar() {
        let s = PreorderedSpace::new(1, vec![vec![1.0], vec![-1.0]], vec![]).unwrap();
        assert!(same_vertex_sets(s.polar_ball().vertices(), &[vec![1.0], vec![-1.0]]));
    }

    #[test]
    fn positive_parts_of_fixtures() {
        let b = space_b();
        let expected = grid_vertices(b.dual_positive_part().halfspaces(), 2);
        assert!(same_vertex_sets(b.dual_positive_part().vertices(), &expected));
        assert!(same_vertex_sets(
            b.dual_positive_part().vertices(),
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]
        ));

        let c = space_c();
        assert!(c.dual_positive_part().is_origin());
        assert_eq!(c.dual_positive_part().vertices().len(), 1);

        let e = space_e();
        assert!(same_vertex_sets(
            e.dual_positive_part().vertices(),
            &[vec![0.0, 0.0], vec![0.0, 1.0]]
        ));
        assert_eq!(e.dual_positive_part().span_rank(), 1);
    }

    #[test]
    fn space_norm_examples() {
        let a = space_a();
        assert!((a.space_norm(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((a.space_norm(&[2.0, 0.0]).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(a.space_norm(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(a.space_norm(&[1.0]).is_err());
    }

    #[test]
    fn cone_tests() {
        assert!(space_b().is_cone().unwrap());
        assert!(!space_e().is_cone().unwrap());
        assert!(space_a().is_cone().unwrap());
        assert!(!space_c().is_cone().unwrap());

        let b = space_b();
        assert!(b.cone_membership(&[2.0, 3.0]).unwrap());
        assert!(!b.cone_membership(&[1.0, -1.0]).unwrap());
        assert!(b.cone_membership_dual(&[2.0, 3.0]).unwrap());
        assert!(!b.cone_membership_dual(&[1.0, -1.0]).unwrap());
        assert!(space_e().cone_membership(&[-5.0, 0.0]).unwrap());
        assert!(space_a().cone_membership(&[0.0, 0.0]).unwrap());
        assert!(!space_a().cone_membership(&[0.0, 1e-3]).unwrap());
    }

    #[test]
    fn separation_and_norming() {
        assert!(space_a().separates_points());
        assert!(!space_e().separates_points());
        assert!(!space_c().separates_points());
        assert!(space_b().separates_points());

        assert!(space_a().is_norming().unwrap());
        assert!(space_b().is_norming().unwrap());
        assert!(!space_e().is_norming().unwrap());
        assert!(!space_c().is_norming().unwrap());
    }

    #[test]
    fn rejects_bad_balls() {
        assert!(PreorderedSpace::new(2, vec![vec![1.0, 1.0], vec![-1.0, -1.0]], vec![]).is_err());
        assert!(PreorderedSpace::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![]).is_err());
        assert!(PreorderedSpace::new(0, vec![], vec![]).is_err());
        assert!(PreorderedSpace::new(2, vec![vec![1.0, 0.0, 0.0]], vec![]).is_err());
        let smooth = r#"{"dim": 2, "ball": "l2"}"#;
        assert!(matches!(
            PreorderedSpace::from_json_str(smooth),
            Err(Error::InvalidSpace(_))
        ));
    }

    #[test]
    fn json_definition() {
        let s = PreorderedSpace::from_json_str(
            r#"{"dim": 2, "ball_vertices": [[1,1],[1,-1],[-1,1],[-1,-1]], "cone_generators": [[1,0],[0,1]]}"#,
        )
        .unwrap();
        assert_eq!(s.dual_positive_part().vertices().len(), 3);
        let l1 = PreorderedSpace::from_json_str(r#"{"dim": 3, "ball": "l1"}"#).unwrap();
        assert_eq!(l1.polar_ball().vertices().len(), 8);
    }

    #[test]
    fn dual_functional_flags() {
        let b = space_b();
        let f = b.functional(vec![0.5, 0.5]).unwrap();
        assert!(f.in_dual_ball(&b));
        assert!(f.is_positive(&b));
        let g = DualFunctional::new(vec![1.0, -0.5]);
        assert!(!g.in_dual_ball(&b));
        assert!(!g.is_positive(&b));
        assert!(b.functional(vec![1.0]).is_err());
    }
}
