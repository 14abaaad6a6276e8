//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! `cargo test -p freelat --test acceptance` runs all twelve; numeric
//! arguments after `--` select a subset, e.g. `-- 4 5`.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use freelat::convexity::{self, NormEngine};
use freelat::expr::{self, LatticeExpr, NormalForm};
use freelat::geometry::{fixtures, PreorderedSpace};
use freelat::norms::{self, Exponent, SearchParams};
use freelat::universal::{self, FiniteLatticeHom, PositiveContraction};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_point(rng: &mut ChaCha8Rng, d: usize, r: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-r..=r)).collect()
}

fn small_form(rng: &mut ChaCha8Rng, d: usize, max_m: usize, max_n: usize) -> NormalForm {
    let m = rng.random_range(1..=max_m);
    let n = rng.random_range(1..=max_n);
    expr::random_normal_form(d, m, n, rng)
}

fn generator(x: Vec<f64>) -> NormalForm {
    NormalForm::generator(x)
}

fn params(seed: u64) -> SearchParams {
    SearchParams::with_seed(seed)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn estimate(space: &PreorderedSpace, nf: &NormalForm, p: Exponent, seed: u64) -> f64 {
    match p {
        Exponent::Infinity => norms::norm_inf_exact(space, nf).unwrap().value,
        Exponent::Finite(p) => norms::norm_p_lower(space, nf, p, &params(seed)).unwrap().value,
    }
}

fn c1_isometry() -> Outcome {
    let mut rng = rng(1);
    let mut worst: f64 = 0.0;
    for space in [fixtures::space_a(), fixtures::cube3()] {
        for _ in 0..100 {
            let x = random_point(&mut rng, space.dim(), 2.0);
            let engine = norms::norm_inf_exact(&space, &generator(x.clone())).unwrap().value;
            let norm = space.space_norm(&x).unwrap();
            // both balls are cubes, so the norm is the max coordinate
            let cube = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            worst = worst.max((engine - norm).abs()).max((norm - cube).abs());
        }
    }
    Outcome::new(worst <= 1e-9, format!("200 points, worst |diff| {worst:.2e} (tol 1e-9)"))
}

fn c2_positive_generators() -> Outcome {
    let space = fixtures::space_b();
    let mut rng = rng(2);
    let mut worst: f64 = 0.0;
    let mut formula_err: f64 = 0.0;
    for i in 0..50 {
        let x: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..=2.0)).collect();
        let formula = norms::norm_of_generator_positive(&space, &x).unwrap();
        // B+ is the triangle with vertices 0, e1, e2
        formula_err = formula_err.max((formula - x[0].max(x[1])).abs());
        for p in [1.0, 2.0] {
            let est = norms::norm_p_lower(&space, &generator(x.clone()), p, &params(i).restarts(200)).unwrap();
            worst = worst.max(rel(est.value, formula));
        }
    }
    Outcome::new(
        worst <= 1e-3 && formula_err <= 1e-12,
        format!("50 points x 2 exponents, worst rel {worst:.2e} (tol 1e-3), formula vs max(x1,x2) {formula_err:.1e}"),
    )
}

fn c3_inf_oracle() -> Outcome {
    let mut rng = rng(3);
    let mut worst: f64 = 0.0;
    for k in 0..30 {
        let space = if k % 2 == 0 { fixtures::space_a() } else { fixtures::space_b() };
        let nf = small_form(&mut rng, 2, 3, 3);
        let exact = norms::norm_inf_exact(&space, &nf).unwrap().value;
        let oracle = norms::norm_inf_oracle(&space, &nf, 0.05).unwrap().value;
        worst = worst.max((exact - oracle).abs());
    }
    Outcome::new(worst <= 1e-3, format!("30 forms, worst |diff| {worst:.2e} (tol 1e-3)"))
}

struct FinitePInstance {
    label: String,
    space: PreorderedSpace,
    nf: NormalForm,
    p: f64,
    seed: u64,
    engine: f64,
    oracle: f64,
    elapsed: Duration,
}

fn finite_p_suite() -> &'static [FinitePInstance] {
    static SUITE: OnceLock<Vec<FinitePInstance>> = OnceLock::new();
    SUITE.get_or_init(|| {
        let mut rng = rng(4);
        let mut out = Vec::new();
        for (name, space) in [("SPACE-A", fixtures::space_a()), ("SPACE-B", fixtures::space_b())] {
            for k in 0..10 {
                let nf = small_form(&mut rng, 2, 2, 2);
                for p in [1.0, 2.0] {
                    let seed = out.len() as u64;
                    let start = Instant::now();
                    let engine = norms::norm_p_lower(&space, &nf, p, &params(seed)).unwrap().value;
                    let oracle = norms::norm_p_oracle(&space, &nf, p, 0.05).unwrap().value;
                    out.push(FinitePInstance {
                        label: format!("{name} form {k} p={p}"),
                        space: space.clone(),
                        nf: nf.clone(),
                        p,
                        seed,
                        engine,
                        oracle,
                        elapsed: start.elapsed(),
                    });
                }
            }
        }
        out
    })
}

fn c4_finite_p_oracle() -> Outcome {
    let suite = finite_p_suite();
    let mut worst = (0.0, "");
    let mut slowest = Duration::ZERO;
    for inst in suite {
        let r = if inst.oracle == 0.0 { inst.engine } else { rel(inst.engine, inst.oracle) };
        if r > worst.0 {
            worst = (r, inst.label.as_str());
        }
        slowest = slowest.max(inst.elapsed);
    }
    Outcome::new(
        worst.0 <= 5e-3 && slowest < Duration::from_secs(60),
        format!(
            "{} instances, worst rel {:.2e} at {} (tol 5e-3), slowest {slowest:.1?} (limit 60s)",
            suite.len(),
            worst.0,
            worst.1
        ),
    )
}

fn c5_tuple_size() -> Outcome {
    let suite = finite_p_suite();
    let mut worst: f64 = f64::NEG_INFINITY;
    for inst in suite {
        let n = 2 * inst.nf.m() * inst.nf.n();
        let bigger = norms::norm_p_lower(&inst.space, &inst.nf, inst.p, &params(inst.seed).tuple_size(n + 4))
            .unwrap()
            .value;
        let gain = if inst.engine == 0.0 { bigger } else { (bigger - inst.engine) / inst.engine };
        worst = worst.max(gain);
    }
    Outcome::new(
        worst < 1e-3,
        format!("{} instances, largest relative gain from N+4 {worst:.2e} (tol 1e-3)", suite.len()),
    )
}

fn c6_norm_axioms() -> Outcome {
    let mut rng = rng(6);
    let mut homogeneity: f64 = 0.0;
    let mut triangle: f64 = f64::NEG_INFINITY;
    let mut monotone: f64 = f64::NEG_INFINITY;
    let mut checks = 0;
    for k in 0..100u64 {
        let space = if k % 2 == 0 { fixtures::space_a() } else { fixtures::space_b() };
        let f = small_form(&mut rng, 2, 2, 1);
        let g = small_form(&mut rng, 2, 1, 2);
        let sum = expr::normalize(&LatticeExpr::add(vec![f.to_expr(), g.to_expr()])).unwrap();
        let pos = expr::normalize(&LatticeExpr::pos_part(g.to_expr())).unwrap();
        let neg = expr::normalize(&LatticeExpr::neg_part(f.to_expr())).unwrap();
        let scale = 2f64.powi(rng.random_range(-3..=3));
        for p in [Exponent::Infinity, Exponent::Finite(1.0), Exponent::Finite(2.0)] {
            let nf_ = estimate(&space, &f, p, k);
            let ng = estimate(&space, &g, p, k);
            let ns = estimate(&space, &sum, p, k);
            triangle = triangle.max((ns - (nf_ + ng)) / (nf_ + ng).max(1.0));
            let npos = estimate(&space, &pos, p, k);
            let nneg = estimate(&space, &neg, p, k);
            monotone = monotone
                .max((npos - ng) / ng.max(1.0))
                .max((nneg - nf_) / nf_.max(1.0));
            if k < 20 {
                let scaled = estimate(&space, &f.scaled(scale), p, k);
                homogeneity = homogeneity.max(rel(scaled, scale * nf_));
            }
            checks += 1;
        }
    }
    Outcome::new(
        homogeneity <= 1e-12 && triangle <= 1e-3 && monotone <= 1e-3,
        format!(
            "{checks} pair/exponent checks; homogeneity rel {homogeneity:.1e} (tol 1e-12), \
             triangle excess {triangle:.2e}, monotonicity excess {monotone:.2e} (tol 1e-3)"
        ),
    )
}

fn c7_p_convexity() -> Outcome {
    let mut rng = rng(7);
    let mut failures = Vec::new();
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut checks = 0;
    for (name, space) in [("SPACE-A", fixtures::space_a()), ("SPACE-B", fixtures::space_b())] {
        for p in [Exponent::Finite(1.0), Exponent::Finite(2.0), Exponent::Infinity] {
            for t in 0..50u64 {
                let fs: Vec<LatticeExpr> = (0..3).map(|_| small_form(&mut rng, 2, 2, 2).to_expr()).collect();
                let r = convexity::p_convexity_check(&space, p, &fs, &params(t), 5e-3).unwrap();
                worst = worst.max((r.lhs - r.rhs) / r.rhs.max(f64::MIN_POSITIVE));
                if !r.holds {
                    failures.push(format!("{name} p={p} triple {t}"));
                }
                checks += 1;
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "{checks} triples, {} failures{}, worst (lhs-rhs)/rhs {worst:.2e} (tol 5e-3)",
            failures.len(),
            failures.first().map(|f| format!(" (first: {f})")).unwrap_or_default()
        ),
    )
}

fn c8_degeneracy() -> Outcome {
    let space = fixtures::space_c();
    let mut rng = rng(8);
    let mut largest: f64 = 0.0;
    let mut count = 0;
    for k in 0..30u64 {
        let e = expr::random_expr(2, 3, &mut rng);
        for p in [Exponent::Infinity, Exponent::Finite(1.0), Exponent::Finite(2.0)] {
            let v = NormEngine::for_exponent(p, params(k)).norm_expr(&space, &e).unwrap().value;
            largest = largest.max(v.abs());
            count += 1;
        }
    }
    let d = universal::diagnostics(&space, 0).unwrap();
    Outcome::new(
        largest == 0.0 && d.trivial.value && d.j_norm.value == 0.0,
        format!(
            "{count} norms, largest {largest:e}; diagnostics trivial={} ||j||={}",
            d.trivial.value, d.j_norm.value
        ),
    )
}

fn c9_kernel() -> Outcome {
    let space = fixtures::space_e();
    let v = norms::norm_inf_exact(&space, &generator(vec![1.0, 0.0])).unwrap().value;
    let separates = space.separates_points();
    Outcome::new(
        v == 0.0 && !separates,
        format!("||delta_e1|| = {v:e}, separates_points = {separates}"),
    )
}

fn c10_bipositivity() -> Outcome {
    let space = fixtures::space_b();
    let disagreements = universal::bipositivity_disagreements(&space, 200, 10).unwrap();
    let d = universal::diagnostics(&space, 10).unwrap();
    Outcome::new(
        disagreements == 0 && d.bipositive.value == Some(true),
        format!(
            "200 samples, {disagreements} disagreements; diagnostics bipositive = {:?}",
            d.bipositive.value
        ),
    )
}

fn c11_normalization() -> Outcome {
    let mut rng = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let d = rng.random_range(1..=3);
        let e = expr::random_expr(d, 4, &mut rng);
        let nf = expr::normalize(&e).unwrap();
        for _ in 0..100 {
            let x = random_point(&mut rng, d, 1.0);
            let a = e.evaluate(&x).unwrap();
            let b = nf.evaluate(&x).unwrap();
            worst = worst.max((a - b).abs() / a.abs().max(1.0));
        }
    }
    Outcome::new(worst <= 1e-12, format!("1000 x 100 evaluations, worst diff {worst:.2e} (tol 1e-12)"))
}

fn random_contraction(rng: &mut ChaCha8Rng, space: &PreorderedSpace, p: Exponent) -> PositiveContraction {
    let verts = space.dual_positive_part().vertices().to_vec();
    let n = rng.random_range(1..=3);
    let mut fs: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let w: Vec<f64> = verts.iter().map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = w.iter().sum();
            let mut x = vec![0.0; space.dim()];
            for (wi, v) in w.iter().zip(&verts) {
                for (xj, vj) in x.iter_mut().zip(v) {
                    *xj += wi / total * vj;
                }
            }
            x
        })
        .collect();
    let functionals: Vec<_> = fs.iter().map(|x| space.functional(x.clone()).unwrap()).collect();
    let bound = match p {
        Exponent::Finite(p) => norms::adjoint_constraint(space, &functionals, p),
        Exponent::Infinity => 1.0,
    };
    let shrink = rng.random_range(0.5..=1.0) / bound.max(1.0);
    for x in &mut fs {
        x.iter_mut().for_each(|v| *v *= shrink);
    }
    PositiveContraction::new(space, p, fs).unwrap()
}

fn random_hom(rng: &mut ChaCha8Rng, p: Exponent, source: usize) -> FiniteLatticeHom {
    let m = rng.random_range(1..=3);
    let mut map: Vec<(usize, f64)> = (0..m)
        .map(|_| (rng.random_range(0..source), rng.random_range(0.0..=1.0)))
        .collect();
    let probe = FiniteLatticeHom::new(p, source, map.clone()).unwrap();
    let norm = probe.norm();
    if norm > 1.0 {
        map.iter_mut().for_each(|(_, l)| *l /= norm);
    }
    FiniteLatticeHom::new(p, source, map).unwrap()
}

fn c12_factorization() -> Outcome {
    let mut rng = rng(12);
    let mut composition_failures = 0;
    let mut worst_excess: f64 = f64::NEG_INFINITY;
    for k in 0..500u64 {
        let space = if k % 2 == 0 { fixtures::space_a() } else { fixtures::space_b() };
        let p = [Exponent::Infinity, Exponent::Finite(1.0), Exponent::Finite(2.0)][k as usize % 3];
        let phi = random_contraction(&mut rng, &space, p);
        let psi = random_hom(&mut rng, p, phi.len());
        let nf = small_form(&mut rng, 2, 2, 2);
        if !universal::compose_check(&space, &psi, &phi, &nf).unwrap().holds {
            composition_failures += 1;
        }
        let factored = p.lp_norm(&universal::factor(&space, &phi, &nf).unwrap());
        let engine = estimate(&space, &nf, p, k);
        worst_excess = worst_excess.max(factored - engine);
    }
    Outcome::new(
        composition_failures == 0 && worst_excess <= 1e-9,
        format!(
            "500 triples, {composition_failures} composition failures, \
             max ||phi(f)|| - engine {worst_excess:.2e} (tol 1e-9)"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("isometry on the trivial wedge", c1_isometry),
        ("norm of positive generators", c2_positive_generators),
        ("inf-norm engine vs grid oracle", c3_inf_oracle),
        ("finite-p engine vs grid oracle", c4_finite_p_oracle),
        ("tuple size 2mn suffices", c5_tuple_size),
        ("norm axioms on estimates", c6_norm_axioms),
        ("p-convexity constant 1", c7_p_convexity),
        ("degenerate space", c8_degeneracy),
        ("kernel of j", c9_kernel),
        ("bipositivity", c10_bipositivity),
        ("normalization soundness", c11_normalization),
        ("factorization and composition", c12_factorization),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let total = Instant::now();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} {id:>2} {name}: {} [{:.1?}]",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed()
        );
    }
    println!("acceptance: {failed} failed, total {:.1?}", total.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
