//! The universal property at desk scale: positive contractions `φ: X → ℓ_p^N`
//! factor through the free lattice by coordinatewise evaluation, the factor
//! map commutes with lattice homomorphisms `ψ: ℓ_p^N → ℓ_p^M`, and a
//! space-level report collects the structural facts about `j: X → FBL`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::convexity::NormEngine;
use crate::error::{Error, Result};
use crate::expr::{Evaluable, NormalForm};
use crate::geometry::{DualFunctional, PreorderedSpace, GEO_TOL};
use crate::linalg::{self, dot, Vector};
use crate::norms::{self, Exponent, FeasibleTuple, SearchParams};

/// Relative tolerance of the composition identity. Both sides are the same
/// evaluations with the weight applied before or after, so they agree up to
/// rounding.
pub const COMPOSE_TOL: f64 = 1e-12;

/// `φ: X → ℓ_p^N` given by its coordinate functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PositiveContraction {
    tuple: FeasibleTuple,
}

impl PositiveContraction {
    pub fn new(space: &PreorderedSpace, p: Exponent, functionals: Vec<Vector>) -> Result<Self> {
        let functionals = functionals.into_iter().map(DualFunctional::new).collect();
        Ok(Self {
            tuple: FeasibleTuple::new(space, p, functionals)?,
        })
    }

    pub fn from_tuple(tuple: FeasibleTuple) -> Self {
        Self { tuple }
    }

    pub fn tuple(&self) -> &FeasibleTuple {
        &self.tuple
    }

    pub fn p(&self) -> Exponent {
        self.tuple.p()
    }

    pub fn len(&self) -> usize {
        self.tuple.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuple.is_empty()
    }

    pub fn functionals(&self) -> &[DualFunctional] {
        self.tuple.functionals()
    }

    /// `φ(x) = (x_1*(x), …, x_N*(x))`.
    pub fn apply(&self, x: &[f64]) -> Vector {
        self.functionals().iter().map(|f| f.apply(x)).collect()
    }
}

/// Weighted coordinate map `ℓ_p^N → ℓ_p^M`: output `j` is `λ_j · v[σ(j)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteLatticeHom {
    pub p: Exponent,
    pub source_dim: usize,
    /// `(σ(j), λ_j)` for each output coordinate.
    pub map: Vec<(usize, f64)>,
}

impl FiniteLatticeHom {
    pub fn new(p: Exponent, source_dim: usize, map: Vec<(usize, f64)>) -> Result<Self> {
        for (j, &(s, l)) in map.iter().enumerate() {
            if s >= source_dim {
                return Err(Error::InvalidParameter(format!(
                    "output {j} reads coordinate {s} of a {source_dim}-dimensional source"
                )));
            }
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidParameter(format!("weight {l} of output {j} is not >= 0")));
            }
        }
        Ok(Self { p, source_dim, map })
    }

    pub fn identity(p: Exponent, n: usize) -> Self {
        Self {
            p,
            source_dim: n,
            map: (0..n).map(|i| (i, 1.0)).collect(),
        }
    }

    pub fn target_dim(&self) -> usize {
        self.map.len()
    }

    /// Norm of the map: the largest `ℓ_p` norm of the weights reading one
    /// source coordinate.
    pub fn norm(&self) -> f64 {
        let mut weights = vec![Vec::new(); self.source_dim];
        for &(s, l) in &self.map {
            weights[s].push(l);
        }
        weights.iter().map(|w| self.p.lp_norm(w)).fold(0.0, f64::max)
    }

    pub fn is_contractive(&self) -> bool {
        self.norm() <= 1.0 + GEO_TOL
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vector> {
        if v.len() != self.source_dim {
            return Err(Error::DimensionMismatch {
                expected: self.source_dim,
                got: v.len(),
            });
        }
        Ok(self.map.iter().map(|&(s, l)| l * v[s]).collect())
    }

    /// `ψ ∘ φ`, coordinate `j` being `λ_j · x_{σ(j)}*`.
    pub fn after(&self, space: &PreorderedSpace, phi: &PositiveContraction) -> Result<PositiveContraction> {
        if !self.is_contractive() {
            return Err(Error::InvalidParameter(format!(
                "lattice homomorphism has norm {} > 1",
                self.norm()
            )));
        }
        if phi.p() != self.p {
            return Err(Error::InvalidParameter(format!(
                "exponents differ: φ maps into ℓ_{} but ψ acts on ℓ_{}",
                phi.p(),
                self.p
            )));
        }
        if phi.len() != self.source_dim {
            return Err(Error::DimensionMismatch {
                expected: self.source_dim,
                got: phi.len(),
            });
        }
        let functionals = self
            .map
            .iter()
            .map(|&(s, l)| linalg::scale(&phi.functionals()[s].coords, l))
            .collect();
        PositiveContraction::new(space, self.p, functionals)
    }
}

/// `φ̄(𝔣) = (𝔣(x_1*), …, 𝔣(x_N*))`.
pub fn factor(space: &PreorderedSpace, phi: &PositiveContraction, nf: &NormalForm) -> Result<Vector> {
    space.check_dim(nf.dim())?;
    // φ may have been built against another space
    FeasibleTuple::new(space, phi.p(), phi.functionals().to_vec())?;
    Ok(phi.functionals().iter().map(|x| nf.eval(&x.coords)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub p: Exponent,
    pub factored: Vector,
    /// `‖φ̄(𝔣)‖` in `ℓ_p^N`.
    pub factored_norm: f64,
    pub engine_norm: f64,
    pub engine_exact: bool,
    /// The bound asserted against: the engine value, or for finite `p` the
    /// larger of it and the factored norm (itself a lower bound).
    pub reference: f64,
    /// The factored tuple beats the ascent; a weak engine run, not a failure.
    pub engine_below_factored: bool,
    pub holds: bool,
    pub tol: f64,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
}

/// Checks `‖φ̄(𝔣)‖ <= ‖𝔣‖ + tol` with the engine matching the exponent of φ.
pub fn verify_contraction(
    space: &PreorderedSpace,
    phi: &PositiveContraction,
    nf: &NormalForm,
    params: &SearchParams,
    tol: f64,
) -> Result<ContractionReport> {
    let factored = factor(space, phi, nf)?;
    let factored_norm = phi.p().lp_norm(&factored);
    let engine = NormEngine::for_exponent(phi.p(), params.clone());
    let est = match &engine {
        NormEngine::InfExact => norms::norm_inf_exact(space, nf)?,
        NormEngine::PLower { p, params } => norms::norm_p_lower(space, nf, *p, params)?,
    };
    let reference = if est.exact { est.value } else { est.value.max(factored_norm) };
    Ok(ContractionReport {
        p: phi.p(),
        factored,
        factored_norm,
        engine_norm: est.value,
        engine_exact: est.exact,
        reference,
        engine_below_factored: est.value < factored_norm,
        holds: factored_norm <= reference + tol,
        tol,
        seed: est.seed,
        restarts: engine.params().map(|p| p.restarts),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositionReport {
    /// `φ̄` of `ψ ∘ φ`, applied to `𝔣`.
    pub factor_of_composite: Vector,
    /// `ψ(φ̄(𝔣))`.
    pub composite_of_factor: Vector,
    pub max_abs_diff: f64,
    pub holds: bool,
    pub tol: f64,
}

/// The composition law `(ψ∘φ)‾ = ψ ∘ φ̄` on one element.
pub fn compose_check(
    space: &PreorderedSpace,
    psi: &FiniteLatticeHom,
    phi: &PositiveContraction,
    nf: &NormalForm,
) -> Result<CompositionReport> {
    let composite = psi.after(space, phi)?;
    let lhs = factor(space, &composite, nf)?;
    let rhs = psi.apply(&factor(space, phi, nf)?)?;
    let mut max_abs_diff: f64 = 0.0;
    let mut holds = true;
    for (a, b) in lhs.iter().zip(&rhs) {
        let d = (a - b).abs();
        max_abs_diff = max_abs_diff.max(d);
        holds &= d <= COMPOSE_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    }
    Ok(CompositionReport {
        factor_of_composite: lhs,
        composite_of_factor: rhs,
        max_abs_diff,
        holds,
        tol: COMPOSE_TOL,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Flag {
    pub value: bool,
    pub evidence: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorNorm {
    pub generator: Vector,
    /// `max over B+ of x*(x)`.
    pub formula: f64,
    /// `‖δ_x‖` from the exact ∞-engine.
    pub engine: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BipositivityCheck {
    /// `None` unless the wedge is a (closed) cone.
    pub value: Option<bool>,
    pub samples: usize,
    pub seed: u64,
    pub disagreements: usize,
    pub evidence: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    /// Orthonormal basis of `{x: x*(x) = 0 for all x* ∈ B+}`.
    pub basis: Vec<Vector>,
    pub evidence: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormOfJ {
    pub value: f64,
    pub evidence: String,
}

/// Structural facts about `j: X → FBL` for one space.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub dim: usize,
    pub positive_part_vertices: Vec<Vector>,
    /// `‖j(x)‖ = max over B+ of x*(x)` for `x` in the wedge, on each generator.
    pub positive_generator_norms: Vec<GeneratorNorm>,
    pub bipositive: BipositivityCheck,
    pub isometric: Flag,
    pub kernel: KernelReport,
    pub injective: Flag,
    pub trivial: Flag,
    pub j_norm: NormOfJ,
    pub cone: Flag,
}

/// Bipositivity samples used by [`diagnostics`].
pub const BIPOSITIVITY_SAMPLES: usize = 200;

pub fn diagnostics(space: &PreorderedSpace, seed: u64) -> Result<Diagnostics> {
    let d = space.dim();
    let bplus = space.dual_positive_part();
    let verts = bplus.vertices().to_vec();
    let trivial = bplus.is_origin();

    let mut rows = verts.clone();
    rows.extend((0..d).map(|i| {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        e
    }));
    let full = linalg::orthonormal_basis(&rows, GEO_TOL);
    let rank = bplus.span_rank();
    let kernel_basis = full[rank.min(full.len())..].to_vec();
    let injective = space.separates_points();
    let isometric = space.is_norming()?;
    let cone = space.is_cone()?;

    let j_norm = space
        .constraint_vertices()
        .iter()
        .flat_map(|v| verts.iter().map(move |u| dot(u, v).abs()))
        .fold(0.0, f64::max);

    let mut generator_norms = Vec::new();
    for g in space.cone_generators() {
        if linalg::norm_inf(g) == 0.0 {
            continue;
        }
        let formula = norms::norm_of_generator_positive(space, g)?;
        let engine = norms::norm_inf_exact(space, &NormalForm::generator(g.clone()))?.value;
        generator_norms.push(GeneratorNorm {
            generator: g.clone(),
            formula,
            engine,
        });
    }

    let disagreements = bipositivity_disagreements(space, BIPOSITIVITY_SAMPLES, seed)?;
    let bipositive = BipositivityCheck {
        value: cone.then_some(disagreements == 0),
        samples: BIPOSITIVITY_SAMPLES,
        seed,
        disagreements,
        evidence: format!(
            "{BIPOSITIVITY_SAMPLES} sampled x: `min over B+ of x*(x) >= 0` against wedge membership by LP, \
             {disagreements} disagreements"
        ),
    };

    Ok(Diagnostics {
        dim: d,
        positive_part_vertices: verts.clone(),
        positive_generator_norms: generator_norms,
        bipositive,
        isometric: Flag {
            value: isometric,
            evidence: "conv(B+ ∪ -B+) compared with B_X* vertex by vertex".into(),
        },
        kernel: KernelReport {
            evidence: format!("annihilator of span(B+), which has rank {rank}"),
            basis: kernel_basis,
        },
        injective: Flag {
            value: injective,
            evidence: format!("span(B+) has rank {rank} of {d}"),
        },
        trivial: Flag {
            value: trivial,
            evidence: format!("B+ has {} vertices{}", verts.len(), if trivial { ", all zero" } else { "" }),
        },
        j_norm: NormOfJ {
            value: j_norm,
            evidence: "max |x*(v)| over B+ vertices x* and ball vertices v".into(),
        },
        cone: Flag {
            value: cone,
            evidence: "no nonzero generator has its negative in the wedge".into(),
        },
    })
}

/// Compares the dual sign test with primal wedge membership on sampled `x`:
/// half uniform in the cube, half nonnegative combinations of generators,
/// some of them pushed slightly outside.
pub fn bipositivity_disagreements(space: &PreorderedSpace, samples: usize, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = space.dim();
    let gens = space.cone_generators();
    let mut disagreements = 0;
    for k in 0..samples {
        let x: Vector = if k % 2 == 0 || gens.is_empty() {
            (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect()
        } else {
            let mut x = vec![0.0; d];
            for g in gens {
                let c: f64 = rng.random_range(0.0..=1.0);
                for (xi, gi) in x.iter_mut().zip(g) {
                    *xi += c * gi;
                }
            }
            if k % 4 == 1 {
                for xi in x.iter_mut() {
                    *xi += rng.random_range(-0.05..=0.05);
                }
            }
            x
        };
        if space.cone_membership_dual(&x)? != space.cone_membership(&x)? {
            disagreements += 1;
        }
    }
    Ok(disagreements)
}
