// SPDX-License-Identifier: MIT OR Apache-2.0

//! Property harness: every invariant of the pipeline checked on seeded
//! random instances, one pass/fail line each.
//!
//! Each property draws from its own generator seeded with `seed + index`, so
//! results do not depend on which other properties ran.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::editor::{attention_forward, edit_weights, run_job, ErasureJob, Mode, WeightBundle, WeightEntry};
use crate::io::npy::{decode, encode, Dtype};
use crate::oracle::{self, gaussian, make_concepts, measure, random_orthonormal, sweep, trend};
use crate::projector::{
    build_projector, compose_discriminative, erasure_operator, ProjectionOperator, Role,
};
use crate::spectra::{expansion_f, spectral_energies, thin_svd, tikhonov_g, Alpha, EmbeddingMatrix, SvdFactors};

/// Deliberate defects used as negative controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Perturbation {
    /// Adds an antisymmetric term to every forget operator before checking it.
    AsymmetricForget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub perturbation: Option<Perturbation>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: oracle::DEFAULT_SEED,
            perturbation: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyOutcome {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = std::result::Result<String, String>;

struct Ctx {
    rng: ChaCha8Rng,
    perturbation: Option<Perturbation>,
}

type Property = (&'static str, &'static str, fn(&mut Ctx) -> Check);

const PROPERTIES: &[Property] = &[
    ("spectra", "svd_reconstruction", svd_reconstruction),
    ("spectra", "svd_orthonormal_factors", svd_orthonormal_factors),
    ("spectra", "svd_gram_consistency", svd_gram_consistency),
    ("spectra", "expansion_limits", expansion_limits),
    ("spectra", "expansion_monotone_in_r", expansion_monotone_in_r),
    ("spectra", "expansion_monotone_in_alpha", expansion_monotone_in_alpha),
    ("spectra", "expansion_dominates_tikhonov", expansion_dominates_tikhonov),
    ("spectra", "filter_range", filter_range),
    ("spectra", "tikhonov_correspondence", tikhonov_correspondence),
    ("spectra", "energy_scale_invariance", energy_scale_invariance),
    ("projector", "forget_retain_symmetric", forget_retain_symmetric),
    ("projector", "forget_retain_eigenvalues_in_unit_interval", forget_retain_eigenvalues),
    ("projector", "discriminative_norm_bound", discriminative_norm_bound),
    ("projector", "orthogonal_unlearn_is_projector", orthogonal_unlearn_is_projector),
    ("projector", "monotone_suppression", monotone_suppression),
    ("projector", "embedding_scale_invariance", embedding_scale_invariance),
    ("editor", "noop_edit_idempotent", noop_edit_idempotent),
    ("editor", "weight_embedding_equivalence", weight_embedding_equivalence),
    ("editor", "attention_equivalence", attention_equivalence),
    ("editor", "sequential_matches_stacked_orthogonal", sequential_matches_stacked),
    ("editor", "non_editable_untouched", non_editable_untouched),
    ("oracle", "suppression_non_increasing", suppression_non_increasing),
    ("oracle", "retention_non_decreasing", retention_non_decreasing),
    ("oracle", "shared_content_preserved", shared_content_preserved),
    ("oracle", "disjoint_exact_erasure", disjoint_exact_erasure),
    ("oracle", "metrics_deterministic", metrics_deterministic),
    ("io", "npy_roundtrip_bytes", npy_roundtrip_bytes),
    ("io", "f4_widening_lossless", f4_widening_lossless),
];

pub fn property_names() -> Vec<String> {
    PROPERTIES.iter().map(|(m, n, _)| format!("{m}.{n}")).collect()
}

pub fn run_suite(opts: &VerifyOptions) -> Vec<PropertyOutcome> {
    PROPERTIES
        .iter()
        .enumerate()
        .map(|(i, (module, name, check))| {
            let mut ctx = Ctx {
                rng: ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64)),
                perturbation: opts.perturbation,
            };
            let (passed, detail) = match check(&mut ctx) {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            PropertyOutcome {
                module,
                name,
                passed,
                detail,
            }
        })
        .collect()
}

/// One `PASS`/`FAIL` line per property followed by a summary line.
pub fn render(outcomes: &[PropertyOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} {}.{}: {}", o.module, o.name, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let _ = writeln!(out, "{} properties, {} passed, {} failed", outcomes.len(), outcomes.len() - failed, failed);
    out
}

fn ensure(cond: bool, detail: String) -> Check {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lib<T>(r: crate::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{}: {e}", e.name()))
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.singular_values().max()
}

fn random_embedding(ctx: &mut Ctx, d: usize, n: usize) -> EmbeddingMatrix {
    EmbeddingMatrix::new(gaussian(&mut ctx.rng, d, n), "random").expect("gaussian draw is finite")
}

/// Shapes exercised by the SVD checks, including one encoder-width case.
fn svd_cases(ctx: &mut Ctx) -> Vec<EmbeddingMatrix> {
    let mut cases = vec![random_embedding(ctx, 768, 6)];
    for _ in 0..20 {
        let d = ctx.rng.gen_range(1..=64);
        let n = ctx.rng.gen_range(1..=12);
        cases.push(random_embedding(ctx, d, n));
    }
    cases
}

fn svd_reconstruction(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for e in svd_cases(ctx) {
        let f = lib(thin_svd(&e))?;
        let err = (f.reconstruct() - e.matrix()).norm() / f.sigma[0];
        worst = worst.max(err);
    }
    ensure(worst <= 1e-8, format!("max ‖UΣVᵀ − E‖_F / σ₁ = {worst:.3e} (bound 1e-8)"))
}

fn svd_orthonormal_factors(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for e in svd_cases(ctx) {
        let f = lib(thin_svd(&e))?;
        let k = f.rank();
        let eye = DMatrix::<f64>::identity(k, k);
        worst = worst
            .max(spectral_norm(&(f.u.transpose() * &f.u - &eye)))
            .max(spectral_norm(&(f.v.transpose() * &f.v - &eye)));
        if f.sigma.as_slice().windows(2).any(|w| w[1] > w[0]) {
            return Err(format!("singular values not descending for {}x{}", e.dim(), e.tokens()));
        }
    }
    ensure(worst <= 1e-10, format!("max ‖UᵀU − I‖₂, ‖VᵀV − I‖₂ = {worst:.3e} (bound 1e-10)"))
}

fn svd_gram_consistency(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for e in svd_cases(ctx) {
        let f = lib(thin_svd(&e))?;
        let gram = e.matrix().transpose() * e.matrix();
        let mut eig: Vec<f64> = SymmetricEigen::new(gram).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        for (s, l) in f.sigma.iter().zip(&eig) {
            worst = worst.max((s * s - l).abs() / l);
        }
    }
    ensure(worst <= 1e-8, format!("max relative |σ² − eig(EᵀE)| = {worst:.3e} (bound 1e-8)"))
}

fn expansion_limits(_: &mut Ctx) -> Check {
    for i in 0..1000 {
        let r = i as f64 / 999.0;
        let at_one = lib(expansion_f(r, Alpha::Finite(1.0)))?;
        let at_inf = lib(expansion_f(r, Alpha::Infinite))?;
        let hard = if r > 0.0 { 1.0 } else { 0.0 };
        if (at_one - r).abs() > 1e-12 || (at_inf - hard).abs() > 1e-12 {
            return Err(format!("limit violated at r = {r}"));
        }
    }
    Ok("f(r;1) = r and f(r;∞) = 1{r>0} on 1000 points".into())
}

fn grid_20() -> (Vec<f64>, Vec<f64>) {
    let rs = (1..=20).map(|i| i as f64 / 21.0).collect();
    let alphas = (0..20).map(|i| 1.0 + (i as f64).powi(2) * 0.75).collect();
    (rs, alphas)
}

fn expansion_monotone_in_r(_: &mut Ctx) -> Check {
    let (rs, alphas) = grid_20();
    for &a in &alphas {
        let vals = rs
            .iter()
            .map(|&r| expansion_f(r, Alpha::Finite(a)))
            .collect::<crate::Result<Vec<_>>>();
        if lib(vals)?.windows(2).any(|w| w[1] <= w[0]) {
            return Err(format!("f(·; {a}) not strictly increasing"));
        }
    }
    Ok("strictly increasing in r on a 20×20 grid".into())
}

fn expansion_monotone_in_alpha(_: &mut Ctx) -> Check {
    let (rs, alphas) = grid_20();
    for &r in &rs {
        let vals = alphas
            .iter()
            .map(|&a| expansion_f(r, Alpha::Finite(a)))
            .collect::<crate::Result<Vec<_>>>();
        if lib(vals)?.windows(2).any(|w| w[1] <= w[0]) {
            return Err(format!("f({r}; ·) not strictly increasing"));
        }
    }
    Ok("strictly increasing in α on a 20×20 grid".into())
}

fn expansion_dominates_tikhonov(ctx: &mut Ctx) -> Check {
    let mut cases = 0;
    for _ in 0..2000 {
        let r = if ctx.rng.gen_bool(0.05) { 0.0 } else { ctx.rng.gen_range(0.0..=1.0) };
        let a = if ctx.rng.gen_bool(0.1) { 1.0 } else { 1.0 + ctx.rng.gen_range(0.0..1e3f64) };
        let alpha = Alpha::Finite(a);
        let (f, g) = (lib(expansion_f(r, alpha))?, lib(tikhonov_g(r, alpha))?);
        if f < g {
            return Err(format!("f < g at r = {r}, α = {a}"));
        }
        if (r == 0.0) != (f == g) {
            return Err(format!("equality f = g should hold exactly when r = 0 (r = {r}, α = {a})"));
        }
        cases += 1;
    }
    Ok(format!("f ≥ g with equality iff r = 0 on {cases} samples"))
}

fn filter_range(ctx: &mut Ctx) -> Check {
    for _ in 0..2000 {
        let r: f64 = ctx.rng.gen_range(0.0..=1.0);
        let a = 1.0 + ctx.rng.gen_range(0.0..1e6f64);
        let alpha = Alpha::Finite(a);
        for v in [lib(expansion_f(r, alpha))?, lib(tikhonov_g(r, alpha))?, lib(expansion_f(r, Alpha::Infinite))?] {
            if !(0.0..=1.0).contains(&v) {
                return Err(format!("value {v} outside [0,1] at r = {r}, α = {a}"));
            }
        }
    }
    Ok("f, g ∈ [0,1] on 2000 samples".into())
}

fn tikhonov_correspondence(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = ctx.rng.gen_range(1..=16);
        let sigma: Vec<f64> = (0..k).map(|_| ctx.rng.gen_range(0.01..10.0)).collect();
        let r = lib(spectral_energies(&sigma))?;
        let total: f64 = sigma.iter().map(|s| s * s).sum();
        for a in [1.0, 2.0, 5.0, 100.0] {
            let lambda = total / a;
            for (ri, s) in r.iter().zip(&sigma) {
                let g = lib(tikhonov_g(*ri, Alpha::Finite(a)))?;
                worst = worst.max((g - s * s / (s * s + lambda)).abs());
            }
        }
    }
    ensure(worst <= 1e-12, format!("max |g − σ²/(σ²+λ)| = {worst:.3e} (bound 1e-12)"))
}

fn energy_scale_invariance(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k = ctx.rng.gen_range(1..=16);
        let sigma: Vec<f64> = (0..k).map(|_| ctx.rng.gen_range(0.0..10.0)).collect();
        let c = 10f64.powf(ctx.rng.gen_range(-6.0..6.0));
        let scaled: Vec<f64> = sigma.iter().map(|s| s * c).collect();
        let (a, b) = (lib(spectral_energies(&sigma))?, lib(spectral_energies(&scaled))?);
        let sum: f64 = a.iter().sum();
        worst = worst.max((sum - 1.0).abs());
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max deviation {worst:.3e} (bound 1e-12)"))
}

/// Random forget/retain operators of dimension ≤ 64 over the α grid.
fn random_operators(ctx: &mut Ctx, count: usize) -> std::result::Result<Vec<ProjectionOperator>, String> {
    let mut ops = Vec::with_capacity(count);
    for i in 0..count {
        let d = ctx.rng.gen_range(2..=64);
        let n = ctx.rng.gen_range(1..=d.min(12));
        let e = random_embedding(ctx, d, n);
        let alpha = Alpha::DEFAULT_GRID[i % Alpha::DEFAULT_GRID.len()];
        let role = if i % 2 == 0 { Role::Forget } else { Role::Retain };
        let mut op = lib(build_projector(&lib(thin_svd(&e))?, alpha, role))?;
        if ctx.perturbation == Some(Perturbation::AsymmetricForget) && role == Role::Forget {
            let mut m = op.matrix().clone();
            m[(0, 1)] += 1e-3;
            m[(1, 0)] -= 1e-3;
            op = lib(ProjectionOperator::from_matrix(m, role, alpha, op.source_labels().to_vec()))?;
        }
        ops.push(op);
    }
    Ok(ops)
}

fn forget_retain_symmetric(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for op in random_operators(ctx, 40)? {
        let m = op.matrix();
        worst = worst.max((m - m.transpose()).amax());
    }
    ensure(worst <= 1e-10, format!("max |P − Pᵀ| = {worst:.3e} (bound 1e-10)"))
}

fn forget_retain_eigenvalues(ctx: &mut Ctx) -> Check {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for op in random_operators(ctx, 40)? {
        let m = op.matrix();
        let sym = (m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym).eigenvalues;
        lo = lo.min(eig.min());
        hi = hi.max(eig.max());
    }
    ensure(
        lo >= -1e-10 && hi <= 1.0 + 1e-10,
        format!("eigenvalues within [{lo:.3e}, {hi:.12}]"),
    )
}

fn discriminative_norm_bound(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let d = ctx.rng.gen_range(2..=64);
        let nf = ctx.rng.gen_range(1..=d.min(10));
        let nr = ctx.rng.gen_range(1..=d.min(10));
        let alpha = Alpha::DEFAULT_GRID[i % Alpha::DEFAULT_GRID.len()];
        let ef = random_embedding(ctx, d, nf);
        // half the trials share directions between forget and retain
        let er = if i % 2 == 0 {
            let mut m = gaussian(&mut ctx.rng, d, nr);
            m.column_mut(0).copy_from(&ef.matrix().column(0));
            lib(EmbeddingMatrix::new(m, "retain"))?
        } else {
            random_embedding(ctx, d, nr)
        };
        let pf = lib(build_projector(&lib(thin_svd(&ef))?, alpha, Role::Forget))?;
        let pr = lib(build_projector(&lib(thin_svd(&er))?, alpha, Role::Retain))?;
        let dis = lib(compose_discriminative(&pf, Some(&pr)))?;
        worst = worst.max(spectral_norm(dis.matrix()));
    }
    ensure(worst <= 1.0 + 1e-10, format!("max ‖P_dis‖₂ = {worst:.12} over 200 trials"))
}

fn orthonormal_factors(u: DMatrix<f64>) -> SvdFactors {
    let k = u.ncols();
    SvdFactors {
        sigma: DVector::from_fn(k, |i, _| 1.0 / (1.0 + i as f64)),
        v: DMatrix::identity(k, k),
        u,
        label: "basis".into(),
    }
}

fn orthogonal_unlearn_is_projector(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let d = ctx.rng.gen_range(3..=48);
        let kf = ctx.rng.gen_range(1..d - 1);
        let kr = ctx.rng.gen_range(1..=d - kf);
        let q = random_orthonormal(&mut ctx.rng, d, kf + kr);
        let f = orthonormal_factors(q.columns(0, kf).into_owned());
        let r = orthonormal_factors(q.columns(kf, kr).into_owned());
        let p = lib(erasure_operator(&f, Some(&r), Alpha::Infinite))?.into_matrix();
        worst = worst
            .max((&p - p.transpose()).amax())
            .max((&p * &p - &p).amax());
    }
    ensure(worst <= 1e-10, format!("max asymmetry / idempotence defect {worst:.3e}"))
}

fn monotone_suppression(ctx: &mut Ctx) -> Check {
    for trial in 0..10 {
        let d = ctx.rng.gen_range(8..=40);
        let pair = lib(make_concepts(d, 4, 3, 1, ctx.rng.gen()))?;
        let forget = lib(thin_svd(&pair.e_f))?;
        let retain = lib(thin_svd(&pair.e_r))?;
        // unique forget direction: in span(basis_f), orthogonal to span(basis_r)
        let e = pair.basis_f.column(3).into_owned();
        let mut prev = f64::INFINITY;
        for alpha in Alpha::DEFAULT_GRID {
            let p = lib(erasure_operator(&forget, Some(&retain), alpha))?;
            let norm = (p.matrix() * &e).norm();
            if norm > prev + 1e-12 {
                return Err(format!("trial {trial}: ‖P e‖ rose to {norm:.6e} at α = {alpha}"));
            }
            prev = norm;
        }
    }
    Ok("‖P_unlearn(α) e‖ non-increasing on the α grid for 10 instances".into())
}

fn embedding_scale_invariance(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        let d = ctx.rng.gen_range(2..=64);
        let n = ctx.rng.gen_range(1..=d.min(10));
        let e = random_embedding(ctx, d, n);
        let c = 10f64.powf(ctx.rng.gen_range(-3.0..3.0));
        let alpha = Alpha::DEFAULT_GRID[i % Alpha::DEFAULT_GRID.len()];
        let a = lib(build_projector(&lib(thin_svd(&e))?, alpha, Role::Forget))?;
        let b = lib(build_projector(&lib(thin_svd(&lib(e.scaled(c))?))?, alpha, Role::Forget))?;
        worst = worst.max((a.matrix() - b.matrix()).amax());
    }
    ensure(worst <= 1e-10, format!("max |P(cE) − P(E)| = {worst:.3e} (bound 1e-10)"))
}

fn random_bundle(ctx: &mut Ctx, d: usize) -> WeightBundle {
    let entries = vec![
        WeightEntry { name: "attn.to_k".into(), matrix: gaussian(&mut ctx.rng, 24, d) },
        WeightEntry { name: "attn.to_v".into(), matrix: gaussian(&mut ctx.rng, 24, d) },
        WeightEntry { name: "attn.to_q".into(), matrix: gaussian(&mut ctx.rng, 24, d) },
        WeightEntry { name: "norm".into(), matrix: gaussian(&mut ctx.rng, 1, d) },
    ];
    WeightBundle::new(entries, vec!["attn.to_k".into(), "attn.to_v".into()], None).expect("valid bundle")
}

fn random_unlearn(ctx: &mut Ctx, d: usize, alpha: Alpha) -> std::result::Result<ProjectionOperator, String> {
    let n = ctx.rng.gen_range(1..=d.min(8));
    let ef = random_embedding(ctx, d, n);
    let er = random_embedding(ctx, d, n);
    lib(erasure_operator(&lib(thin_svd(&ef))?, Some(&lib(thin_svd(&er))?), alpha))
}

fn noop_edit_idempotent(ctx: &mut Ctx) -> Check {
    let b = random_bundle(ctx, 32);
    let id = ProjectionOperator::identity(32);
    let (once, _) = lib(edit_weights(&b, &id))?;
    let (twice, _) = lib(edit_weights(&once, &id))?;
    ensure(once == twice && once == b, "identity edit applied twice equals once".into())
}

fn weight_embedding_equivalence(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let d = ctx.rng.gen_range(2..=48);
        let m = ctx.rng.gen_range(1..=32);
        let w = gaussian(&mut ctx.rng, m, d);
        let p = random_unlearn(ctx, d, Alpha::DEFAULT_GRID[i % 7])?;
        let e = DVector::from_column_slice(gaussian(&mut ctx.rng, d, 1).as_slice());
        let lhs = (&w * p.matrix()) * &e;
        let rhs = &w * (p.matrix() * &e);
        worst = worst.max((lhs - rhs).norm() / (w.norm() * e.norm()));
    }
    ensure(worst <= 1e-8, format!("max ‖(WP)e − W(Pe)‖ / (‖W‖‖e‖) = {worst:.3e} over 500 cases"))
}

fn attention_equivalence(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let d = ctx.rng.gen_range(4..=48);
        let n = ctx.rng.gen_range(1..=8);
        let b = random_bundle(ctx, d);
        let p = random_unlearn(ctx, d, Alpha::DEFAULT_GRID[i % 7])?;
        let (edited, _) = lib(edit_weights(&b, &p))?;
        let e = random_embedding(ctx, d, n);
        let projected = lib(EmbeddingMatrix::new(p.matrix() * e.matrix(), "projected"))?;
        let q = DVector::from_column_slice(gaussian(&mut ctx.rng, 24, 1).as_slice());
        let (wk, wv) = (b.get("attn.to_k").unwrap(), b.get("attn.to_v").unwrap());
        let (ek, ev) = (edited.get("attn.to_k").unwrap(), edited.get("attn.to_v").unwrap());
        let lhs = lib(attention_forward(&q, ek, ev, &e))?;
        let rhs = lib(attention_forward(&q, wk, wv, &projected))?;
        worst = worst.max((&lhs - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE));
    }
    ensure(worst <= 1e-8, format!("max relative deviation {worst:.3e} over 50 cases"))
}

fn sequential_matches_stacked(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let d = 32;
        let concepts = 3;
        let per = 2;
        let q = random_orthonormal(&mut ctx.rng, d, concepts * per);
        let forget = (0..concepts)
            .map(|c| {
                let basis = q.columns(c * per, per).into_owned();
                let mix = gaussian(&mut ctx.rng, per, per + 1);
                EmbeddingMatrix::new(basis * mix, format!("c{c}"))
            })
            .collect::<crate::Result<Vec<_>>>();
        let forget = lib(forget)?;
        let targets = random_bundle(ctx, d);
        let mut job = ErasureJob { forget, retain: None, alpha: Alpha::Infinite, mode: Mode::Stacked, targets };
        let (stacked, _) = lib(run_job(&job))?;
        job.mode = Mode::Sequential;
        let (sequential, _) = lib(run_job(&job))?;
        for (a, b) in stacked.entries().iter().zip(sequential.entries()) {
            worst = worst.max((&a.matrix - &b.matrix).amax());
        }
    }
    ensure(worst <= 1e-8, format!("max |stacked − sequential| = {worst:.3e} (bound 1e-8)"))
}

fn non_editable_untouched(ctx: &mut Ctx) -> Check {
    let b = random_bundle(ctx, 16);
    let p = random_unlearn(ctx, 16, Alpha::Finite(2.0))?;
    let (edited, _) = lib(edit_weights(&b, &p))?;
    let bytes = |m: &DMatrix<f64>| m.iter().flat_map(|x| x.to_bits().to_le_bytes()).collect::<Vec<u8>>();
    for (a, e) in b.entries().iter().zip(edited.entries()) {
        if !b.is_editable(&a.name) && bytes(&a.matrix) != bytes(&e.matrix) {
            return Err(format!("`{}` changed", a.name));
        }
    }
    Ok("non-editable entries byte-identical".into())
}

/// Overlapping synthetic pairs used by the trade-off checks.
fn overlap_pairs(ctx: &mut Ctx) -> std::result::Result<Vec<oracle::SyntheticConceptPair>, String> {
    [(16, 4, 4, 2), (24, 5, 4, 1), (32, 6, 6, 3)]
        .iter()
        .map(|&(d, kf, kr, m)| lib(make_concepts(d, kf, kr, m, ctx.rng.gen())))
        .collect()
}

fn suppression_non_increasing(ctx: &mut Ctx) -> Check {
    for pair in overlap_pairs(ctx)? {
        let metrics = lib(sweep(&pair, &Alpha::DEFAULT_GRID))?;
        if !trend(&metrics, 1e-12).suppression_non_increasing {
            let col: Vec<String> = metrics.iter().map(|m| format!("{:.4e}", m.suppression_residual)).collect();
            return Err(format!("suppression_residual over α grid: [{}]", col.join(", ")));
        }
    }
    Ok("suppression_residual non-increasing over the α grid".into())
}

fn retention_non_decreasing(ctx: &mut Ctx) -> Check {
    for pair in overlap_pairs(ctx)? {
        let metrics = lib(sweep(&pair, &Alpha::DEFAULT_GRID))?;
        if !trend(&metrics, 1e-12).retention_non_decreasing {
            let col: Vec<String> = metrics.iter().map(|m| format!("{:.4e}", m.retention_error)).collect();
            return Err(format!(
                "retention_error over α grid (overlap {}): [{}]",
                pair.overlap(),
                col.join(", ")
            ));
        }
    }
    Ok("retention_error non-decreasing over the α grid".into())
}

fn shared_content_preserved(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for pair in overlap_pairs(ctx)? {
        worst = worst.max(lib(measure(&pair, Alpha::Infinite))?.shared_error);
    }
    ensure(worst <= 1e-8, format!("max shared_error at α = ∞: {worst:.3e} (bound 1e-8)"))
}

fn disjoint_exact_erasure(ctx: &mut Ctx) -> Check {
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let pair = lib(make_concepts(24, 4, 4, 0, ctx.rng.gen()))?;
        let m = lib(measure(&pair, Alpha::Infinite))?;
        worst = worst.max(m.suppression_residual).max(m.retention_error);
    }
    ensure(worst <= 1e-10, format!("max residual/retention error {worst:.3e} (bound 1e-10)"))
}

fn metrics_deterministic(ctx: &mut Ctx) -> Check {
    let seed = ctx.rng.gen();
    let a = lib(make_concepts(16, 4, 4, 2, seed).and_then(|p| sweep(&p, &Alpha::DEFAULT_GRID)))?;
    let b = lib(make_concepts(16, 4, 4, 2, seed).and_then(|p| sweep(&p, &Alpha::DEFAULT_GRID)))?;
    let bits = |v: &[oracle::ErasureMetrics]| {
        v.iter()
            .flat_map(|m| [m.suppression_residual, m.retention_error, m.shared_error])
            .map(f64::to_bits)
            .collect::<Vec<_>>()
    };
    ensure(bits(&a) == bits(&b), "identical seeds give bit-identical metrics".into())
}

fn npy_roundtrip_bytes(ctx: &mut Ctx) -> Check {
    let path = std::path::Path::new("<memory>");
    for _ in 0..50 {
        let rows = ctx.rng.gen_range(1..=40);
        let shape = if ctx.rng.gen_bool(0.3) { vec![rows] } else { vec![rows, ctx.rng.gen_range(1..=40)] };
        let n = shape.iter().product();
        let data: Vec<f64> = (0..n).map(|_| ctx.rng.gen_range(-1e3..1e3)).collect();
        for dtype in [Dtype::F32, Dtype::F64] {
            let bytes = lib(encode(&shape, &data, dtype))?;
            let back = lib(decode(&bytes, path))?;
            if lib(encode(&back.shape, &back.data, back.dtype))? != bytes {
                return Err(format!("{dtype} tensor of shape {shape:?} changed on rewrite"));
            }
        }
    }
    Ok("write(read(x)) = x for 100 random tensors".into())
}

fn f4_widening_lossless(ctx: &mut Ctx) -> Check {
    let path = std::path::Path::new("<memory>");
    let data: Vec<f64> = (0..256).map(|_| (ctx.rng.gen::<f32>() * 7.0) as f64).collect();
    let back = lib(decode(&lib(encode(&[256], &data, Dtype::F32))?, path))?;
    ensure(back.data == data, "f4 values widen to f64 exactly".into())
}
