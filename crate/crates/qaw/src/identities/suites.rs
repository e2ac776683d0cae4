//! Named verification suites, one per identity of the theory, with
//! deterministic parameter samplers.
//!
//! Every suite draws its parameters from an admissible sampler seeded by
//! `(suite id, seed, draw index)`, runs its checks, and emits one report
//! per draw. Runs are deterministic: the same seed yields byte-identical
//! reports. Draws whose parameters turn out inadmissible (branch
//! violations, pole collisions) are reported as skipped with the error tag.

use std::collections::BTreeMap;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::awcore::{
    aw_norm_n, aw_operator_apply, aw_poly, eigenvalue_mu, gaussian_g, gaussian_g_inv, h_tilde,
    quasiconstant_theta_inv, FiveTuple, ParamQuad,
};
use crate::awfunction::{awf_analytic, awf_phi, awf_phi_value};
use crate::error::{Error, Result};
use crate::identities::lemma_a::{
    lemma_a_prefactor_route_exact, lemma_a_sides_f64, random_draw as lemma_a_random_draw,
    verify_lemma_a,
};
use crate::identities::mm::{mm_lhs, mm_rhs, verify_appendix_b1, verify_appendix_b2};
use crate::identities::report::{TruncationMeta, VerificationReport};
use crate::policy::TruncationPolicy;
use crate::qseries::{phi_rs, qpoch_inf};
use crate::scalar::rel_err;
use crate::transforms::{
    awf_transform_j_on, k_const, linking_check, master_rhs, measure_circle_plus_residues,
    measure_m, measure_nu, poly_transform_f_on, poly_inverse_i, DiscreteFunction, MasterFormula,
    MeasureSpec, SymmetricFn, DEFAULT_BUDGET,
};

type C = Complex<f64>;
type Policy = TruncationPolicy<f64>;

/// Identity suites runnable through [`verify_suite`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Orthogonality,
    Thm22Bijection,
    AwfRoutes,
    Redpol,
    DualityPol,
    DualityFun,
    EigenPoly,
    EigenAwf,
    Prop41,
    Thm42Expansion,
    Prop43,
    Thm44Pair,
    Rem46TripleProduct,
    Rem46Rogers55,
    Thm53Master,
    Thm52IsometryGram,
    Cor54InversePair,
    Linking,
    Thm55Mm,
    LemmaA,
    AppB1,
    AppB2,
    FnOrthogonality,
}

impl Suite {
    pub fn all() -> &'static [Suite] {
        use Suite::*;
        &[
            Orthogonality,
            Thm22Bijection,
            AwfRoutes,
            Redpol,
            DualityPol,
            DualityFun,
            EigenPoly,
            EigenAwf,
            Prop41,
            Thm42Expansion,
            Prop43,
            Thm44Pair,
            Rem46TripleProduct,
            Rem46Rogers55,
            Thm53Master,
            Thm52IsometryGram,
            Cor54InversePair,
            Linking,
            Thm55Mm,
            LemmaA,
            AppB1,
            AppB2,
            FnOrthogonality,
        ]
    }

    pub fn id(&self) -> &'static str {
        use Suite::*;
        match self {
            Orthogonality => "orthogonality",
            Thm22Bijection => "thm22_bijection",
            AwfRoutes => "awf_routes",
            Redpol => "redpol",
            DualityPol => "duality_pol",
            DualityFun => "duality_fun",
            EigenPoly => "eigen_poly",
            EigenAwf => "eigen_awf",
            Prop41 => "prop41",
            Thm42Expansion => "thm42_expansion",
            Prop43 => "prop43",
            Thm44Pair => "thm44_pair",
            Rem46TripleProduct => "rem46_tripleproduct",
            Rem46Rogers55 => "rem46_rogers55",
            Thm53Master => "thm53_master",
            Thm52IsometryGram => "thm52_isometry_gram",
            Cor54InversePair => "cor54_inverse_pair",
            Linking => "linking",
            Thm55Mm => "thm55_mm",
            LemmaA => "lemmaA",
            AppB1 => "appB1",
            AppB2 => "appB2",
            FnOrthogonality => "fn_orthogonality",
        }
    }

    pub fn description(&self) -> &'static str {
        use Suite::*;
        match self {
            Orthogonality => "polynomial orthogonality against the closed norm",
            Thm22Bijection => "polynomial transform pair round-trip on finite families",
            AwfRoutes => "8W7 vs two-4phi3 routes of the Askey-Wilson function",
            Redpol => "polynomial reduction of the Askey-Wilson function",
            DualityPol => "duality of the Askey-Wilson polynomials",
            DualityFun => "duality of the Askey-Wilson function",
            EigenPoly => "difference-operator eigen-equation on polynomials",
            EigenAwf => "difference-operator eigen-equation on the function",
            Prop41 => "transform image of the analytic part (expansion coefficients)",
            Thm42Expansion => "expansion of the analytic part in polynomials",
            Prop43 => "transform of a polynomial against the inverse Gaussian",
            Thm44Pair => "polynomial master-formula pair round-trip",
            Rem46TripleProduct => "triple-product-type expansion of (dx,d/x;q)_inf",
            Rem46Rogers55 => "5phi5 limit of Rogers' very-well-poised summation",
            Thm53Master => "master formulas of the function transform",
            Thm52IsometryGram => "finite-family isometry Gram matrices",
            Cor54InversePair => "classical/strange subspace inverse pair",
            Linking => "linking of the function and polynomial transforms",
            Thm55Mm => "one-variable q-Macdonald-Mehta evaluation",
            LemmaA => "terminating-sum reduction lemma (exact rational)",
            AppB1 => "first direct proof of the q-Macdonald-Mehta integral",
            AppB2 => "second direct proof of the q-Macdonald-Mehta integral",
            FnOrthogonality => "orthogonality of the complement family f_n",
        }
    }

    pub fn from_id(s: &str) -> Option<Suite> {
        Suite::all().iter().copied().find(|x| x.id() == s)
    }

    pub fn default_draws(&self) -> usize {
        use Suite::*;
        match self {
            AwfRoutes => 1000,
            Thm55Mm => 16,
            LemmaA => 20,
            AppB1 | AppB2 => 8,
            Orthogonality | Thm22Bijection => 8,
            Prop41 => 20,
            Thm42Expansion => 50,
            Thm53Master => 4,
            Thm52IsometryGram => 2,
            Cor54InversePair => 2,
            Linking => 2,
            FnOrthogonality => 3,
            _ => 6,
        }
    }

    pub fn tolerance(&self) -> f64 {
        use Suite::*;
        match self {
            DualityPol | EigenPoly | Rem46Rogers55 | LemmaA | Thm55Mm | Thm42Expansion => 1e-10,
            Thm53Master | Cor54InversePair => 1e-8,
            Thm52IsometryGram => 1e-7,
            FnOrthogonality => 1e-6,
            AppB1 | AppB2 => 1e-9,
            _ => 1e-9,
        }
    }

    /// Policy tuned to the suite's tolerance: measure-heavy suites relax
    /// the internal target so tail certificates fire inside the f64
    /// precision horizon.
    fn policy(&self) -> Policy {
        use Suite::*;
        match self {
            Thm53Master | Thm52IsometryGram | Cor54InversePair | Linking => {
                Policy::with_rel_tol(1e-10)
            }
            _ => Policy::default(),
        }
    }
}

/// Listing of suite ids with descriptions, for the CLI.
pub fn list_suites() -> Vec<(&'static str, &'static str)> {
    Suite::all().iter().map(|s| (s.id(), s.description())).collect()
}

/// Common knobs of a suite run.
#[derive(Clone, Copy, Debug)]
pub struct SuiteParams {
    pub seed: u64,
    pub draws: Option<usize>,
    pub rel_tol: Option<f64>,
    pub max_terms: Option<usize>,
    pub weight_floor: f64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        Self { seed: 1, draws: None, rel_tol: None, max_terms: None, weight_floor: 1e-18 }
    }
}

fn fnv(s: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn draw_rng(suite: Suite, seed: u64, draw: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        fnv(suite.id()) ^ seed.wrapping_mul(0x9e3779b97f4a7c15) ^ (draw as u64).wrapping_mul(0xd1b54a32d192ed03),
    )
}

/// Runs a suite; reports are ordered by draw index.
pub fn verify_suite(suite: Suite, params: &SuiteParams) -> Vec<VerificationReport> {
    let draws = params.draws.unwrap_or_else(|| suite.default_draws());
    let mut policy = suite.policy();
    if let Some(rt) = params.rel_tol {
        policy.rel_tol = rt;
    }
    if let Some(mt) = params.max_terms {
        policy.max_terms = mt;
    }
    (0..draws)
        .into_par_iter()
        .map(|draw| run_draw(suite, params, &policy, draw))
        .collect()
}

fn meta(policy: &Policy, params: &SuiteParams, note: &str) -> TruncationMeta {
    let mut m = TruncationMeta::from_policy(policy);
    m.weight_floor = Some(params.weight_floor);
    m.note = note.to_string();
    m
}

struct ErrAcc {
    max: f64,
    count: usize,
}

impl ErrAcc {
    fn new() -> Self {
        Self { max: 0.0, count: 0 }
    }
    fn push(&mut self, e: f64) {
        self.max = if e.is_finite() { self.max.max(e) } else { f64::INFINITY };
        self.count += 1;
    }
    fn push_pair(&mut self, lhs: C, rhs: C) {
        self.push(rel_err(lhs, rhs));
    }
    /// Absolute comparison against an explicit scale.
    fn push_scaled(&mut self, lhs: C, rhs: C, scale: f64) {
        let d = (lhs - rhs).norm();
        self.push(d / scale.max(1e-300));
    }
}

fn run_draw(suite: Suite, params: &SuiteParams, policy: &Policy, draw: usize) -> VerificationReport {
    let mut rng = draw_rng(suite, params.seed, draw);
    let out = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        dispatch(suite, params, policy, draw, &mut rng)
    }));
    let tol = suite.tolerance();
    match out {
        Ok(Ok(rep)) => rep,
        Ok(Err(e)) => VerificationReport::skipped(
            suite.id(),
            BTreeMap::new(),
            draw,
            tol,
            meta(policy, params, ""),
            e.tag(),
        ),
        Err(_) => VerificationReport::skipped(
            suite.id(),
            BTreeMap::new(),
            draw,
            tol,
            meta(policy, params, ""),
            "Panic",
        ),
    }
}

fn dispatch(
    suite: Suite,
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    use Suite::*;
    match suite {
        Orthogonality => orthogonality_draw(params, policy, draw, rng),
        Thm22Bijection => thm22_draw(params, policy, draw, rng),
        AwfRoutes => awf_routes_draw(params, policy, draw, rng),
        Redpol => redpol_draw(params, policy, draw, rng),
        DualityPol => duality_pol_draw(params, policy, draw, rng),
        DualityFun => duality_fun_draw(params, policy, draw, rng),
        EigenPoly => eigen_poly_draw(params, policy, draw, rng),
        EigenAwf => eigen_awf_draw(params, policy, draw, rng),
        Prop41 => prop41_draw(params, policy, draw, rng),
        Thm42Expansion => thm42_draw(params, policy, draw, rng),
        Prop43 => prop43_draw(params, policy, draw, rng),
        Thm44Pair => thm44_draw(params, policy, draw, rng),
        Rem46TripleProduct => rem46_triple_draw(params, policy, draw, rng),
        Rem46Rogers55 => rem46_rogers_draw(params, policy, draw, rng),
        Thm53Master => thm53_draw(params, policy, draw, rng),
        Thm52IsometryGram => thm52_draw(params, policy, draw, rng),
        Cor54InversePair => cor54_draw(params, policy, draw, rng),
        Linking => linking_draw(params, policy, draw, rng),
        Thm55Mm => thm55_draw(params, policy, draw, rng),
        LemmaA => lemma_a_draw(params, policy, draw, rng),
        AppB1 => app_b1_draw(params, policy, draw, rng),
        AppB2 => app_b2_draw(params, policy, draw, rng),
        FnOrthogonality => fn_orth_draw(params, policy, draw, rng),
    }
}

// ---------------------------------------------------------------------
// samplers
// ---------------------------------------------------------------------

fn pick_q(rng: &mut ChaCha8Rng) -> f64 {
    [0.3, 0.5, 0.7, 0.9][rng.gen_range(0..4)]
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Rejects moduli whose q-ladder comes within 2% of the unit circle.
fn ladder_clears_circle(e: f64, q: f64) -> bool {
    let mut v = e.abs();
    if v > 1.0 {
        while v > 1.0 {
            if (v - 1.0).abs() < 0.02 {
                return false;
            }
            v *= q;
        }
    }
    (v - 1.0).abs() >= 0.02
}

/// V_pol draw: real, `d < 0 < a`, `abcd > 0`, pairwise products < 1.
/// With `allow_mass`, `|d|` may exceed one (a discrete mass appears).
fn draw_vpol(rng: &mut ChaCha8Rng, q: f64, lo: f64, hi: f64, allow_mass: bool) -> ParamQuad<f64> {
    loop {
        let a = log_uniform(rng, lo, hi);
        let b = log_uniform(rng, lo, hi);
        let c = -log_uniform(rng, lo, hi);
        let d = if allow_mass && rng.gen_bool(0.5) {
            let cap = 0.93 / a.max(b).max(c.abs());
            if cap < 1.1 {
                continue;
            }
            -log_uniform(rng, 1.08, cap.min(2.4))
        } else {
            -log_uniform(rng, lo, hi)
        };
        let quad = ParamQuad::from_reals(q, a, b, c, d).unwrap();
        let ok = [a * b, a * c, a * d, b * c, b * d, c * d].iter().all(|p| p.abs() < 0.96)
            && quad.params().iter().all(|e| ladder_clears_circle(e.norm(), q))
            && (a * b * c * d - q).abs() > 0.02
            && a * b * c * d > 1e-4;
        if ok {
            return quad;
        }
    }
}

/// Five-tuple draw satisfying the admissibility inequalities, generic and
/// with every relevant ladder clear of the unit circle (including the dual
/// tuple's ladders, so the dual measure is constructible too).
fn draw_51(rng: &mut ChaCha8Rng, q: f64) -> FiveTuple<f64> {
    loop {
        let d = log_uniform(rng, (1.6 * q).max(0.6), 2.6);
        let lb = (q / d) * 1.04;
        if lb > 0.85 {
            continue;
        }
        let b = log_uniform(rng, lb, 0.88);
        let c = log_uniform(rng, lb, 0.88);
        let hi_a = (d / q).min(1.0 / b).min(1.0 / c) * 0.93;
        let lo_a = b.max(c);
        if hi_a <= lo_a * 1.03 {
            continue;
        }
        let a = log_uniform(rng, lo_a, hi_a);
        let r = log_uniform(rng, 0.88, 1.14);
        let t = -q.sqrt() * r / d;
        let beta = FiveTuple::new(q, a, b, c, d, t).unwrap();
        if !beta.check_conditions().pass {
            continue;
        }
        let Ok(dual) = beta.dual() else { continue };
        let ladders_ok = |bb: &FiveTuple<f64>| {
            ladder_clears_circle(bb.a, q) && ladder_clears_circle((bb.d * bb.t).abs(), q)
        };
        if !(ladders_ok(&beta) && ladders_ok(&dual)) {
            continue;
        }
        // keep the polynomial-reduction prefactors nondegenerate
        if (a * d - 1.0).abs() < 0.03 || (a * d - q).abs() < 0.03 || (a * d / q - 1.0).abs() < 0.03 {
            continue;
        }
        return beta;
    }
}

fn draw_gamma(rng: &mut ChaCha8Rng) -> C {
    let r = log_uniform(rng, 0.5, 2.0);
    let th = rng.gen_range(0.0..std::f64::consts::TAU);
    C::from_polar(r, th)
}

fn draw_x_offpole(rng: &mut ChaCha8Rng, q: f64) -> C {
    loop {
        let r = log_uniform(rng, 0.6, 1.6);
        let th = rng.gen_range(0.05..std::f64::consts::PI - 0.05);
        let x = C::from_polar(r, th);
        // keep clear of the operator poles at +-1, +-q^{1/2}, +-q^{-1/2}
        let clear = [1.0, q.sqrt(), 1.0 / q.sqrt()]
            .iter()
            .all(|&p| (x.norm() - p).abs() > 0.02 || th > 0.15);
        if clear {
            return x;
        }
    }
}

fn base_params(quad: &ParamQuad<f64>, seed: u64, draw: usize) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    m.insert("q".into(), quad.q);
    m.insert("a_re".into(), quad.a.re);
    m.insert("a_im".into(), quad.a.im);
    m.insert("b_re".into(), quad.b.re);
    m.insert("b_im".into(), quad.b.im);
    m.insert("c_re".into(), quad.c.re);
    m.insert("c_im".into(), quad.c.im);
    m.insert("d_re".into(), quad.d.re);
    m.insert("d_im".into(), quad.d.im);
    m.insert("seed".into(), seed as f64);
    m.insert("draw".into(), draw as f64);
    m
}

fn beta_params(beta: &FiveTuple<f64>, seed: u64, draw: usize) -> BTreeMap<String, f64> {
    let mut m = base_params(&beta.quad(), seed, draw);
    m.insert("t".into(), beta.t);
    m
}

// ---------------------------------------------------------------------
// suite bodies
// ---------------------------------------------------------------------

fn orthogonality_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    // moduli at the low end destroy the attainable relative accuracy of
    // high-degree off-diagonal entries; sample the conditioned range
    let quad = draw_vpol(rng, q, 0.42, 0.9, true);
    let measure = measure_nu(&quad, policy)?;
    let mut acc = ErrAcc::new();
    let deg = 10usize;
    for n in 0..=deg {
        let f = |x: C| aw_poly(&quad, n, x);
        for m in 0..=deg {
            let v = poly_transform_f_on(&measure, &quad, &f, m, policy)?;
            let target = if n == m {
                1.0 / h_tilde(&quad, m)?
            } else {
                C::new(0.0, 0.0)
            };
            acc.push_scaled(v, target, (1.0 / h_tilde(&quad, m)?).norm());
        }
    }
    Ok(VerificationReport::from_result(
        Suite::Orthogonality.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::Orthogonality.tolerance(),
        meta(policy, params, &measure.truncation_note),
    ))
}

fn thm22_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let quad = draw_vpol(rng, q, 0.42, 0.9, true);
    let measure = measure_nu(&quad, policy)?;
    let mut acc = ErrAcc::new();
    let xs = [draw_x_offpole(rng, q), draw_x_offpole(rng, q)];
    for n in 0..=8usize {
        let f = |x: C| aw_poly(&quad, n, x);
        let coeffs: Result<Vec<(usize, C)>> = (0..=n + 2)
            .map(|m| Ok((m, poly_transform_f_on(&measure, &quad, &f, m, policy)?)))
            .collect();
        let g = DiscreteFunction::Finite(coeffs?);
        for &x in &xs {
            let v = poly_inverse_i(&quad, &g, x, policy)?;
            acc.push_pair(v, aw_poly(&quad, n, x)?);
        }
    }
    Ok(VerificationReport::from_result(
        Suite::Thm22Bijection.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::Thm22Bijection.tolerance(),
        meta(policy, params, &measure.truncation_note),
    ))
}

fn awf_routes_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let beta = draw_51(rng, q);
    let quad = beta.quad();
    let dual = quad.dual()?;
    let mut acc = ErrAcc::new();
    let mut tries = 0;
    while acc.count < 1 && tries < 60 {
        tries += 1;
        let gamma = draw_gamma(rng);
        let x = draw_gamma(rng);
        if (C::new(q, 0.0) / (dual.d * gamma)).norm() > 0.9 {
            continue;
        }
        match awf_phi(&quad, gamma, x, policy) {
            Ok(v) => {
                if let Some(agree) = v.agreement {
                    acc.push(agree);
                }
            }
            Err(Error::PoleAtNode(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    if acc.count == 0 {
        return Err(Error::InvalidParameter("no admissible route draw found".into()));
    }
    Ok(VerificationReport::from_result(
        Suite::AwfRoutes.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::AwfRoutes.tolerance(),
        meta(policy, params, ""),
    ))
}

fn redpol_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let beta = draw_51(rng, q);
    let quad = beta.quad();
    let qc = C::new(q, 0.0);
    let pref = qpoch_inf(qc * quad.a * quad.b * quad.c / quad.d, q, policy)
        / (qpoch_inf(quad.b * quad.c, q, policy)
            * qpoch_inf(qc / (quad.a * quad.d), q, policy)
            * qpoch_inf(qc * quad.a / quad.d, q, policy)
            * qpoch_inf(qc * quad.b / quad.d, q, policy)
            * qpoch_inf(qc * quad.c / quad.d, q, policy));
    let mut acc = ErrAcc::new();
    for m in 0..=5usize {
        let s = quad.spectral(m)?.value;
        let x = draw_gamma(rng);
        let lhs = awf_phi_value(&quad, s, x, policy)?;
        let rhs = pref * aw_poly(&quad, m, x)?;
        acc.push_pair(lhs, rhs);
    }
    Ok(VerificationReport::from_result(
        Suite::Redpol.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::Redpol.tolerance(),
        meta(policy, params, ""),
    ))
}

fn duality_pol_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let quad = draw_vpol(rng, q, 0.35, 0.9, false);
    let dual = quad.dual()?;
    let mut acc = ErrAcc::new();
    for (m, n) in [(0usize, 3usize), (1, 1), (2, 5), (4, 2), (8, 6), (10, 9)] {
        let s = quad.spectral(m)?.value;
        let v = dual.spectral(n)?.value;
        acc.push_pair(aw_poly(&quad, m, v)?, aw_poly(&dual, n, s)?);
    }
    let _ = policy;
    Ok(VerificationReport::from_result(
        Suite::DualityPol.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::DualityPol.tolerance(),
        meta(policy, params, ""),
    ))
}

fn duality_fun_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let beta = draw_51(rng, q);
    let quad = beta.quad();
    let dual = quad.dual()?;
    let mut acc = ErrAcc::new();
    for _ in 0..4 {
        let gamma = draw_gamma(rng);
        let x = draw_gamma(rng);
        let lhs = match awf_phi_value(&quad, gamma, x, policy) {
            Ok(v) => v,
            Err(Error::PoleAtNode(_)) => continue,
            Err(e) => return Err(e),
        };
        let rhs = match awf_phi_value(&dual, x, gamma, policy) {
            Ok(v) => v,
            Err(Error::PoleAtNode(_)) => continue,
            Err(e) => return Err(e),
        };
        acc.push_pair(lhs, rhs);
    }
    if acc.count == 0 {
        return Err(Error::InvalidParameter("all duality draws hit poles".into()));
    }
    Ok(VerificationReport::from_result(
        Suite::DualityFun.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::DualityFun.tolerance(),
        meta(policy, params, ""),
    ))
}

fn eigen_poly_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let quad = draw_vpol(rng, q, 0.3, 0.9, false);
    let mut acc = ErrAcc::new();
    for m in [0usize, 1, 3, 6, 9, 12] {
        let mu = eigenvalue_mu(&quad, quad.spectral(m)?.value)?;
        let f = |y: C| aw_poly(&quad, m, y);
        for j in 0..32 {
            let th = 0.08 + 2.9 * (j as f64) / 32.0;
            let r = 0.75 + 0.5 * ((j % 7) as f64) / 7.0;
            let x = C::from_polar(r, th);
            let lhs = aw_operator_apply(&quad, &f, x)?;
            let e = aw_poly(&quad, m, x)?;
            acc.push((lhs - mu * e).norm() / (1.0 + e.norm()));
        }
    }
    let _ = rng;
    Ok(VerificationReport::from_result(
        Suite::EigenPoly.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::EigenPoly.tolerance(),
        meta(policy, params, ""),
    ))
}

fn eigen_awf_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let beta = draw_51(rng, q);
    let quad = beta.quad();
    let mut acc = ErrAcc::new();
    for _ in 0..4 {
        let gamma = draw_gamma(rng);
        let x = draw_x_offpole(rng, q);
        let mu = eigenvalue_mu(&quad, gamma)?;
        let f = |y: C| awf_phi_value(&quad, gamma, y, policy);
        let lhs = match aw_operator_apply(&quad, &f, x) {
            Ok(v) => v,
            Err(Error::PoleAtNode(_)) => continue,
            Err(e) => return Err(e),
        };
        let phi = awf_phi_value(&quad, gamma, x, policy)?;
        acc.push((lhs - mu * phi).norm() / (1.0 + phi.norm()));
    }
    if acc.count == 0 {
        return Err(Error::InvalidParameter("all eigen draws hit poles".into()));
    }
    Ok(VerificationReport::from_result(
        Suite::EigenAwf.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::EigenAwf.tolerance(),
        meta(policy, params, ""),
    ))
}

/// Transform of the analytic part with sequential orthogonal deflation:
/// the degree-m image is computed from the residual of the lower-degree
/// projections, keeping the integrand scale comparable to the result.
fn deflated_phian_transform(
    tau_quad: &ParamQuad<f64>,
    base_quad: &ParamQuad<f64>,
    measure: &MeasureSpec<f64>,
    gamma: C,
    m_max: usize,
    policy: &Policy,
) -> Result<Vec<C>> {
    let mut coeffs: Vec<C> = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let tq = *tau_quad;
        let bq = *base_quad;
        let pol = *policy;
        let prior: Vec<(usize, C, C)> = coeffs
            .iter()
            .enumerate()
            .map(|(j, &cj)| Ok((j, cj, h_tilde(&tq, j)?)))
            .collect::<Result<_>>()?;
        let residual = move |x: C| -> Result<C> {
            let mut v = awf_analytic(&bq, gamma, x, &pol)?;
            for &(j, cj, hj) in &prior {
                v -= cj * hj * aw_poly(&tq, j, x)?;
            }
            Ok(v)
        };
        let c_m = poly_transform_f_on(measure, tau_quad, &residual, m, policy)?;
        coeffs.push(c_m);
    }
    Ok(coeffs)
}

fn prop41_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    // alpha chosen so that alpha_tau lies in the contour-admissible family
    let tau_quad = draw_vpol(rng, q, 0.35, 0.9, true);
    let base_quad = tau_quad.tau()?;
    let measure = measure_circle_plus_residues(&tau_quad, policy)?;
    let beta_like = FiveTuple::new(
        q,
        base_quad.a.re,
        base_quad.b.re,
        base_quad.c.re,
        base_quad.d.re,
        -1.0,
    )?;
    let mut acc = ErrAcc::new();
    let gamma = draw_gamma(rng);
    let coeffs = deflated_phian_transform(&tau_quad, &base_quad, &measure, gamma, 8, policy)?;
    for (m, &c_m) in coeffs.iter().enumerate() {
        let rhs = master_rhs(&beta_like, MasterFormula::Prop41, m, gamma, policy)?;
        // normalize by the degree-m scale so high degrees are compared
        // against their own magnitude
        acc.push_scaled(c_m, rhs, rhs.norm().max(c_m.norm()));
    }
    Ok(VerificationReport::from_result(
        Suite::Prop41.id(),
        base_params(&base_quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::Prop41.tolerance(),
        meta(policy, params, &measure.truncation_note),
    ))
}

fn thm42_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let beta = draw_51(rng, q);
    let quad = beta.quad();
    let gamma = draw_gamma(rng);
    let x = draw_gamma(rng);
    let lhs = crate::transforms::expansion_partial_sum(&quad, gamma, x, 40, policy)?;
    let rhs = awf_analytic(&quad, gamma, x, policy)?;
    let mut acc = ErrAcc::new();
    acc.push_pair(lhs, rhs);
    Ok(VerificationReport::from_result(
        Suite::Thm42Expansion.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::Thm42Expansion.tolerance(),
        meta(policy, params, ""),
    ))
}

fn prop43_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    thm44_like_draw(Suite::Prop43, params, policy, draw, rng, false)
}

fn thm44_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    thm44_like_draw(Suite::Thm44Pair, params, policy, draw, rng, true)
}

fn thm44_like_draw(
    suite: Suite,
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
    with_inverse: bool,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let quad = draw_vpol(rng, q, 0.4, 0.9, false);
    let tau_quad = quad.tau()?;
    let beta_like = FiveTuple::new(q, quad.a.re, quad.b.re, quad.c.re, quad.d.re, -1.0)?;
    let measure = measure_circle_plus_residues(&quad, policy)?;
    let mut acc = ErrAcc::new();
    for s_idx in 0..=4usize {
        let f = |x: C| -> Result<C> {
            Ok(aw_poly(&tau_quad, s_idx, x)? * gaussian_g_inv(&quad, x, policy)?)
        };
        // forward: F(E^tau_s G^{-1})(v) against the closed image, scaled by
        // the degree-s image size (the images decay super-geometrically)
        let mut scale: f64 = 0.0;
        let mut pairs = Vec::new();
        for v_idx in 0..=4usize {
            let v_val = quad.spectral(v_idx)?.value;
            let lhs = poly_transform_f_on(&measure, &quad, &f, v_idx, policy)?;
            let rhs = master_rhs(&beta_like, MasterFormula::Thm44F, s_idx, v_val, policy)?;
            scale = scale.max(lhs.norm()).max(rhs.norm());
            pairs.push((lhs, rhs));
        }
        for (lhs, rhs) in pairs {
            acc.push_scaled(lhs, rhs, scale);
        }
        if with_inverse {
            // backward: I of the closed image returns E^tau_s G^{-1}
            let b2 = beta_like;
            let pol = *policy;
            let g = DiscreteFunction::Dynamic(Box::new(move |m: usize| {
                let v_val = b2.quad().spectral(m)?.value;
                master_rhs(&b2, MasterFormula::Thm44F, s_idx, v_val, &pol)
            }));
            let x = draw_x_offpole(rng, q);
            let lhs = poly_inverse_i(&quad, &g, x, policy)?;
            let rhs = aw_poly(&tau_quad, s_idx, x)? * gaussian_g_inv(&quad, x, policy)?;
            acc.push_pair(lhs, rhs);
        }
    }
    Ok(VerificationReport::from_result(
        suite.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        suite.tolerance(),
        meta(policy, params, &measure.truncation_note),
    ))
}

fn rem46_triple_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let quad = draw_vpol(rng, q, 0.35, 0.9, false);
    let [a, b, c, d] = quad.params();
    let abcd = quad.abcd();
    let one = C::new(1.0, 0.0);
    let lead = one - abcd / q;
    let mut acc = ErrAcc::new();
    for j in 0..4 {
        let x = if j < 3 {
            C::from_polar(1.0, 0.4 + 0.8 * j as f64)
        } else {
            draw_gamma(rng)
        };
        let mut total = C::new(0.0, 0.0);
        let mut m = 0usize;
        loop {
            let mi = m as i32;
            let coef = (one - abcd * q.powi(2 * mi - 1))
                * crate::qseries::qpoch_finite(abcd / q, q, m)
                * crate::qseries::qpoch_finite(a * b, q, m)
                * crate::qseries::qpoch_finite(a * c, q, m)
                / (lead
                    * crate::qseries::qpoch_finite(C::new(q, 0.0), q, m)
                    * crate::qseries::qpoch_finite(b * d, q, m)
                    * crate::qseries::qpoch_finite(c * d, q, m))
                * (-d / (a * q.sqrt())).powi(mi)
                * q.powf((m * m) as f64 / 2.0);
            let term = coef * aw_poly(&quad, m, x)?;
            total += term;
            m += 1;
            if m > 8 && term.norm() < 1e-16 * total.norm().max(1e-30) || m > 400 {
                break;
            }
        }
        let lhs = total
            * (qpoch_inf(a * d, q, policy) * qpoch_inf(b * d, q, policy) * qpoch_inf(c * d, q, policy))
            / qpoch_inf(abcd, q, policy);
        let rhs = gaussian_g_inv(&quad, x, policy)?;
        acc.push_pair(lhs, rhs);
    }
    Ok(VerificationReport::from_result(
        Suite::Rem46TripleProduct.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::Rem46TripleProduct.tolerance(),
        meta(policy, params, ""),
    ))
}

fn rem46_rogers_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let quad = draw_vpol(rng, q, 0.3, 0.9, false);
    let [a, b, c, d] = quad.params();
    let at = quad.dual()?.a;
    let qc = C::new(q, 0.0);
    let lhs = phi_rs(
        &[at * at, qc * at, -(qc * at), a * b, a * c],
        &[at, -at, b * d, c * d, C::new(0.0, 0.0)],
        q,
        d / a,
        policy,
    )?;
    let rhs = qpoch_inf(quad.abcd(), q, policy) * qpoch_inf(d / a, q, policy)
        / (qpoch_inf(b * d, q, policy) * qpoch_inf(c * d, q, policy));
    let mut acc = ErrAcc::new();
    acc.push_pair(lhs, rhs);
    Ok(VerificationReport::from_result(
        Suite::Rem46Rogers55.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::Rem46Rogers55.tolerance(),
        meta(policy, params, ""),
    ))
}

/// Gamma points for the master-formula checks: a circle grid plus the
/// retained mass points of the dual measure whose closed-form image value
/// stays above the evaluation noise floor.
fn thm53_gamma_points(dual_measure: &MeasureSpec<f64>) -> Vec<C> {
    let mut pts: Vec<C> = (0..8)
        .map(|j| C::from_polar(1.0, 0.17 + std::f64::consts::PI * (j as f64 + 0.31) / 8.2))
        .collect();
    for mp in dual_measure.masses.iter().take(6) {
        pts.push(mp.point);
    }
    pts
}

fn thm53_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let beta = draw_51(rng, q);
    let quad = beta.quad();
    let tau_quad = quad.tau()?;
    let measure = measure_m(&beta, params.weight_floor, DEFAULT_BUDGET, policy)?;
    let k = k_const(&beta, policy)?;
    let dual_beta = beta.dual()?;
    let dual_measure = measure_m(&dual_beta, params.weight_floor, DEFAULT_BUDGET, policy)?;
    let s_max = 6usize;
    let mut acc = ErrAcc::new();
    let gammas = thm53_gamma_points(&dual_measure);

    // family integrands shared per gamma through the common phi factor
    let mut strange: Vec<Box<dyn SymmetricFn<f64>>> = Vec::new();
    let mut classical: Vec<Box<dyn SymmetricFn<f64>>> = Vec::new();
    for s in 0..=s_max {
        let tq = tau_quad;
        let b = beta;
        let pol = *policy;
        strange.push(Box::new(move |x: C| -> Result<C> {
            Ok(aw_poly(&tq, s, x)? * gaussian_g(&tq, x, &pol)?)
        }));
        classical.push(Box::new(move |x: C| -> Result<C> {
            Ok(aw_poly(&tq, s, x)?
                * gaussian_g_inv(&b.quad(), x, &pol)?
                * quasiconstant_theta_inv(&b, x, &pol)?)
        }));
    }
    let strange_refs: Vec<&dyn SymmetricFn<f64>> = strange.iter().map(|b| b.as_ref()).collect();
    let classical_refs: Vec<&dyn SymmetricFn<f64>> = classical.iter().map(|b| b.as_ref()).collect();

    for &gamma in &gammas {
        let pol = *policy;
        let qd = quad;
        let phi = move |x: C| awf_phi_value(&qd, gamma, x, &pol);
        let lhs_str = measure.integrate_batch(&phi, &strange_refs, policy)?;
        let lhs_cl = measure.integrate_batch(&phi, &classical_refs, policy)?;
        // per-gamma scale over the family, so vanishing image values at
        // dual mass points are compared against the family magnitude
        let mut rows = Vec::new();
        let mut scale: f64 = 0.0;
        for s in 0..=s_max {
            let r1 = master_rhs(&beta, MasterFormula::Thm53First, s, gamma, policy)?;
            let r2 = master_rhs(&beta, MasterFormula::Thm53Second, s, gamma, policy)?;
            let l1 = lhs_str[s] / k;
            let l2 = lhs_cl[s] / k;
            scale = scale.max(l1.norm()).max(r1.norm()).max(l2.norm()).max(r2.norm());
            rows.push((l1, r1, l2, r2));
        }
        for (l1, r1, l2, r2) in rows {
            acc.push_scaled(l1, r1, scale);
            acc.push_scaled(l2, r2, scale);
        }
    }
    Ok(VerificationReport::from_result(
        Suite::Thm53Master.id(),
        beta_params(&beta, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::Thm53Master.tolerance(),
        meta(policy, params, &measure.truncation_note),
    ))
}

fn thm52_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let beta = draw_51(rng, q);
    let quad = beta.quad();
    let tau_quad = quad.tau()?;
    let measure = measure_m(&beta, params.weight_floor, DEFAULT_BUDGET, policy)?;
    let dual_beta = beta.dual()?;
    let dual_measure = measure_m(&dual_beta, params.weight_floor, DEFAULT_BUDGET, policy)?;
    let k = k_const(&beta, policy)?;
    let u_max = 3usize; // 4 + 4 family members
    let n = 2 * (u_max + 1);

    // source family under m
    let mut fam: Vec<Box<dyn SymmetricFn<f64>>> = Vec::new();
    for u in 0..=u_max {
        let tq = tau_quad;
        let pol = *policy;
        fam.push(Box::new(move |x: C| -> Result<C> {
            Ok(aw_poly(&tq, u, x)? * gaussian_g(&tq, x, &pol)?)
        }));
    }
    for u in 0..=u_max {
        let tq = tau_quad;
        let b = beta;
        let pol = *policy;
        fam.push(Box::new(move |x: C| -> Result<C> {
            Ok(aw_poly(&tq, u, x)?
                * gaussian_g_inv(&b.quad(), x, &pol)?
                * quasiconstant_theta_inv(&b, x, &pol)?)
        }));
    }
    // image family under m^sigma: closed forms of the master formulas
    let mut img: Vec<Box<dyn SymmetricFn<f64>>> = Vec::new();
    for u in 0..=u_max {
        let b = beta;
        let pol = *policy;
        img.push(Box::new(move |g: C| master_rhs(&b, MasterFormula::Thm53First, u, g, &pol)));
    }
    for u in 0..=u_max {
        let b = beta;
        let pol = *policy;
        img.push(Box::new(move |g: C| master_rhs(&b, MasterFormula::Thm53Second, u, g, &pol)));
    }

    let mut g1 = vec![vec![C::new(0.0, 0.0); n]; n];
    let mut g2 = vec![vec![C::new(0.0, 0.0); n]; n];
    for i in 0..n {
        let fs: Vec<&dyn SymmetricFn<f64>> = fam[i..].iter().map(|b| b.as_ref()).collect();
        let row = measure.integrate_batch(fam[i].as_ref(), &fs, policy)?;
        for (jj, v) in row.into_iter().enumerate() {
            g1[i][i + jj] = v;
            g1[i + jj][i] = v;
        }
        let gs: Vec<&dyn SymmetricFn<f64>> = img[i..].iter().map(|b| b.as_ref()).collect();
        let row = dual_measure.integrate_batch(img[i].as_ref(), &gs, policy)?;
        for (jj, v) in row.into_iter().enumerate() {
            g2[i][i + jj] = v;
            g2[i + jj][i] = v;
        }
    }
    let mut acc = ErrAcc::new();
    for i in 0..n {
        for j in 0..n {
            let scale = (g1[i][i].norm() * g1[j][j].norm()).sqrt().max(g1[i][j].norm());
            acc.push_scaled(g1[i][j], g2[i][j], scale);
        }
    }
    // mixed-pairing biorthogonality at tighter tolerance, folded in scaled
    // by its own target: <E^tau_u G^{-1}Theta^{-1}, E^tau_s G^tau>_m =
    // delta_{su} N^tau / h^{tau sigma}(s)
    let ntau = aw_norm_n(&tau_quad, policy)?;
    let mut pair_acc = ErrAcc::new();
    for s in 0..=u_max {
        for u in 0..=u_max {
            let v = g1[s][u_max + 1 + u];
            let target = if s == u {
                ntau / h_tilde(&tau_quad, s)?
            } else {
                C::new(0.0, 0.0)
            };
            pair_acc.push_scaled(v, target, (ntau / h_tilde(&tau_quad, s)?).norm());
        }
    }
    // fold the pairing error in, normalized to the suite tolerance so a
    // 1e-8 pairing failure fails the 1e-7 gram report
    let folded = acc.max.max(pair_acc.max * (Suite::Thm52IsometryGram.tolerance() / 1e-8));
    let _ = (k, rng);
    Ok(VerificationReport::from_result(
        Suite::Thm52IsometryGram.id(),
        beta_params(&beta, params.seed, draw),
        draw,
        acc.count + pair_acc.count,
        folded,
        Suite::Thm52IsometryGram.tolerance(),
        meta(policy, params, &measure.truncation_note),
    ))
}

fn cor54_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let beta = draw_51(rng, q);
    let quad = beta.quad();
    let tau_quad = quad.tau()?;
    let dual_beta = beta.dual()?;
    let dual_measure = measure_m(&dual_beta, params.weight_floor, DEFAULT_BUDGET, policy)?;
    let k_dual = k_const(&dual_beta, policy)?;
    let mut acc = ErrAcc::new();
    for s in 0..=2usize {
        // forward image of the classical function by the closed form, then
        // the dual transform must return the original function
        let b = beta;
        let pol = *policy;
        let image = move |g: C| master_rhs(&b, MasterFormula::Thm53Second, s, g, &pol);
        for _ in 0..2 {
            let x = draw_x_offpole(rng, q);
            let back = awf_transform_j_on(&dual_measure, k_dual, &dual_beta, &image, x, policy)?;
            let orig = aw_poly(&tau_quad, s, x)?
                * gaussian_g_inv(&quad, x, policy)?
                * quasiconstant_theta_inv(&beta, x, policy)?;
            acc.push_scaled(back, orig, orig.norm().max(back.norm()).max(1e-6));
        }
    }
    Ok(VerificationReport::from_result(
        Suite::Cor54InversePair.id(),
        beta_params(&beta, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::Cor54InversePair.tolerance(),
        meta(policy, params, &dual_measure.truncation_note),
    ))
}

fn linking_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = pick_q(rng);
    let beta = draw_51(rng, q);
    let mut acc = ErrAcc::new();
    for v_idx in 0..4usize {
        for s_idx in 0..4usize {
            let chk = linking_check(&beta, v_idx, s_idx, params.weight_floor, policy)?;
            acc.push_scaled(chk.lhs, chk.rhs, chk.lhs.norm().max(chk.rhs.norm()).max(1e-10));
        }
    }
    Ok(VerificationReport::from_result(
        Suite::Linking.id(),
        beta_params(&beta, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        1e-9,
        meta(policy, params, ""),
    ))
}

fn thm55_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    // sweep q deterministically across draws so all four bases appear
    let q = [0.3, 0.5, 0.7, 0.9][draw % 4];
    let mut tries = 0;
    let (a, b, c, u) = loop {
        tries += 1;
        let mag = |rng: &mut ChaCha8Rng| log_uniform(rng, 0.12, 0.88);
        let complexify = tries % 3 == 0;
        let mk = |rng: &mut ChaCha8Rng, m: f64| -> C {
            if complexify {
                C::from_polar(m, rng.gen_range(0.0..std::f64::consts::TAU))
            } else {
                C::new(if rng.gen_bool(0.8) { m } else { -m }, 0.0)
            }
        };
        let (ma, mb, mc) = (mag(rng), mag(rng), mag(rng));
        let a = mk(rng, ma);
        let b = mk(rng, mb);
        let c = mk(rng, mc);
        let u = C::from_polar(
            log_uniform(rng, (q * 1.1f64).min(0.93), 0.95),
            if complexify { rng.gen_range(0.0..std::f64::consts::TAU) } else { 0.0 },
        );
        let prods_ok = [a * b, a * c, b * c]
            .iter()
            .all(|p| (p.norm() - 1.0).abs() > 0.05 && p.norm() < 1.0);
        if prods_ok && u.norm() > q * 1.05 && u.norm() < 0.97 {
            break (a, b, c, u);
        }
        if tries > 200 {
            return Err(Error::InvalidParameter("mm sampler exhausted".into()));
        }
    };
    let lhs = mm_lhs(a, b, c, u, q, policy)?;
    let rhs = mm_rhs(a, b, c, u, q, policy)?;
    let mut acc = ErrAcc::new();
    acc.push_pair(lhs, rhs);
    let mut p = BTreeMap::new();
    p.insert("q".into(), q);
    p.insert("a_re".into(), a.re);
    p.insert("a_im".into(), a.im);
    p.insert("b_re".into(), b.re);
    p.insert("b_im".into(), b.im);
    p.insert("c_re".into(), c.re);
    p.insert("c_im".into(), c.im);
    p.insert("u_re".into(), u.re);
    p.insert("u_im".into(), u.im);
    p.insert("seed".into(), params.seed as f64);
    p.insert("draw".into(), draw as f64);
    Ok(VerificationReport::from_result(
        Suite::Thm55Mm.id(),
        p,
        draw,
        acc.count,
        acc.max,
        Suite::Thm55Mm.tolerance(),
        meta(policy, params, ""),
    ))
}

fn lemma_a_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let m = draw % 11;
    let mut acc = ErrAcc::new();
    let mut draw_params = BTreeMap::new();
    let mut attempts = 0;
    loop {
        attempts += 1;
        let d = lemma_a_random_draw(rng);
        match (
            verify_lemma_a(m, &d),
            lemma_a_prefactor_route_exact(m, &d),
        ) {
            (Ok(exact), Ok(route)) => {
                acc.push(if exact { 0.0 } else { f64::INFINITY });
                acc.push(if route { 0.0 } else { f64::INFINITY });
                if m <= 4 {
                    let (l, r) = lemma_a_sides_f64(m, &d);
                    acc.push_pair(l, r);
                }
                let f = |r: &num_rational::BigRational| -> f64 {
                    r.numer().to_string().parse::<f64>().unwrap_or(f64::NAN)
                        / r.denom().to_string().parse::<f64>().unwrap_or(f64::NAN)
                };
                draw_params.insert("q".into(), f(&d.q));
                draw_params.insert("a".into(), f(&d.a));
                draw_params.insert("b".into(), f(&d.b));
                draw_params.insert("c".into(), f(&d.c));
                draw_params.insert("d".into(), f(&d.d));
                draw_params.insert("y".into(), f(&d.y));
                draw_params.insert("m".into(), m as f64);
                draw_params.insert("seed".into(), params.seed as f64);
                draw_params.insert("draw".into(), draw as f64);
                break;
            }
            _ if attempts < 30 => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Ok(VerificationReport::from_result(
        Suite::LemmaA.id(),
        draw_params,
        draw,
        acc.count,
        acc.max,
        Suite::LemmaA.tolerance(),
        meta(policy, params, "exact rational arithmetic; errors are exactly zero"),
    ))
}

fn app_b1_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = [0.3, 0.5, 0.7, 0.9][draw % 4];
    let mut tries = 0;
    let (a, b, c, u) = loop {
        tries += 1;
        if tries > 400 {
            return Err(Error::InvalidParameter("B1 sampler exhausted".into()));
        }
        let lo = (q / 0.80f64).powf(0.25).min(0.9);
        let a = C::new(log_uniform(rng, lo, 0.96), 0.0);
        let b = C::new(log_uniform(rng, lo, 0.96), 0.0);
        let c = C::new(log_uniform(rng, lo, 0.96), 0.0);
        let u = C::new(log_uniform(rng, (q * 1.08).max(lo), 0.96), 0.0);
        let abcu = (a * b * c * u).norm();
        if abcu > q * 1.03
            && [a, b, c, u].iter().all(|v| v.norm() < 0.97)
            && u.norm() > q * 1.05
        {
            break (a, b, c, u);
        }
    };
    let checks = verify_appendix_b1(a, b, c, u, q, policy)?;
    let mut acc = ErrAcc::new();
    let mut p = BTreeMap::new();
    for ck in &checks {
        // normalize each sub-check by its own tolerance against the
        // report-level tolerance
        acc.push(ck.rel_err * (Suite::AppB1.tolerance() / ck.tol));
        p.insert(format!("err:{}", ck.name), ck.rel_err);
    }
    p.insert("q".into(), q);
    p.insert("a".into(), a.re);
    p.insert("b".into(), b.re);
    p.insert("c".into(), c.re);
    p.insert("u".into(), u.re);
    p.insert("seed".into(), params.seed as f64);
    p.insert("draw".into(), draw as f64);
    Ok(VerificationReport::from_result(
        Suite::AppB1.id(),
        p,
        draw,
        checks.len(),
        acc.max,
        Suite::AppB1.tolerance(),
        meta(policy, params, ""),
    ))
}

fn app_b2_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = [0.3, 0.5, 0.7, 0.9][draw % 4];
    let a = C::new(log_uniform(rng, 0.3, 0.72), 0.0);
    let b = C::new(log_uniform(rng, 0.3, 0.72), 0.0);
    let c = C::new(log_uniform(rng, 0.3, 0.72), 0.0);
    let u = C::new(log_uniform(rng, (q * 1.1f64).min(0.9), 0.93), 0.0);
    let checks = verify_appendix_b2(a, b, c, u, q, policy)?;
    let mut acc = ErrAcc::new();
    let mut p = BTreeMap::new();
    for ck in &checks {
        acc.push(ck.rel_err * (Suite::AppB2.tolerance() / ck.tol));
        p.insert(format!("err:{}", ck.name), ck.rel_err);
    }
    p.insert("q".into(), q);
    p.insert("a".into(), a.re);
    p.insert("b".into(), b.re);
    p.insert("c".into(), c.re);
    p.insert("u".into(), u.re);
    p.insert("seed".into(), params.seed as f64);
    p.insert("draw".into(), draw as f64);
    Ok(VerificationReport::from_result(
        Suite::AppB2.id(),
        p,
        draw,
        checks.len(),
        acc.max,
        Suite::AppB2.tolerance(),
        meta(policy, params, ""),
    ))
}

fn fn_orth_draw(
    params: &SuiteParams,
    policy: &Policy,
    draw: usize,
    rng: &mut ChaCha8Rng,
) -> Result<VerificationReport> {
    let q = [0.3, 0.5, 0.5, 0.7][draw % 4];
    // V_pol with |d| > 1 so the complement family is nonempty
    let quad = loop {
        let cand = draw_vpol(rng, q, 0.35, 0.85, true);
        if cand.d.norm() > 1.05 {
            break cand;
        }
    };
    let d = quad.d;
    let n_set: Vec<usize> = (0..8)
        .take_while(|&n| (d.norm() * q.powi(n as i32)) > 1.0)
        .collect();
    let mut acc = ErrAcc::new();
    // spectral sums sum_m f_n(s_m) f_n'(s_m) h~(s_m) with f_n(s) = E_s(dq^n)
    let spectral_dot = |n1: usize, n2: usize| -> Result<C> {
        let x1 = d * q.powi(n1 as i32);
        let x2 = d * q.powi(n2 as i32);
        let mut total = C::new(0.0, 0.0);
        let mut m = 0usize;
        let mut small = 0usize;
        loop {
            let term = aw_poly(&quad, m, x1)? * aw_poly(&quad, m, x2)? * h_tilde(&quad, m)?;
            total += term;
            if m > 6 && term.norm() < 1e-13 * total.norm().max(1e-300) {
                small += 1;
                if small >= 2 {
                    return Ok(total);
                }
            } else {
                small = 0;
            }
            m += 1;
            if m > policy.max_terms {
                return Err(Error::NonConvergent {
                    tail: crate::Tail::Upper,
                    max_terms: policy.max_terms,
                });
            }
        }
    };
    let n_count = n_set.len();
    let mut diags = Vec::new();
    for &n in &n_set {
        // diagonal: N / Res(Delta(y)/y at d q^n)
        let dot = spectral_dot(n, n)?;
        let nconst = aw_norm_n(&quad, policy)?;
        let defl = DeflatedDeltaAt { quad, k: n, policy: *policy };
        let res = crate::transforms::residue_deflated(d * q.powi(n as i32), &defl)?;
        let target = nconst / res;
        acc.push_pair(dot, target);
        diags.push(dot.norm());
    }
    for i in 0..n_count {
        for j in 0..i {
            let dot = spectral_dot(n_set[i], n_set[j])?;
            let scale = (diags[i] * diags[j]).sqrt();
            acc.push_scaled(dot, C::new(0.0, 0.0), scale);
        }
    }
    Ok(VerificationReport::from_result(
        Suite::FnOrthogonality.id(),
        base_params(&quad, params.seed, draw),
        draw,
        acc.count,
        acc.max,
        Suite::FnOrthogonality.tolerance(),
        meta(policy, params, ""),
    ))
}

/// Deflated dual-weight evaluator for the `d`-ladder residues used by the
/// complement-family norms.
struct DeflatedDeltaAt {
    quad: ParamQuad<f64>,
    k: usize,
    policy: Policy,
}

impl SymmetricFn<f64> for DeflatedDeltaAt {
    fn eval(&self, y: C) -> Result<C> {
        use crate::qseries::{qpoch_inf_scaled, qpoch_inf_skip_scaled};
        let q = self.quad.q;
        let pol = &self.policy;
        let one = C::new(1.0, 0.0);
        let mut acc = qpoch_inf_scaled(y * y, q, pol);
        acc.mul_scaled(&qpoch_inf_scaled(one / (y * y), q, pol));
        let [a, b, c, d] = self.quad.params();
        for e in [a, b, c] {
            acc.div_scaled(&qpoch_inf_scaled(e * y, q, pol));
            acc.div_scaled(&qpoch_inf_scaled(e / y, q, pol));
        }
        acc.div_scaled(&qpoch_inf_scaled(d * y, q, pol));
        acc.div_scaled(&qpoch_inf_skip_scaled(d / y, q, self.k, pol));
        Ok(acc.value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identities::report::Status;

    #[test]
    fn suite_ids_round_trip() {
        for s in Suite::all() {
            assert_eq!(Suite::from_id(s.id()), Some(*s));
        }
        assert_eq!(Suite::from_id("nonsense"), None);
    }

    #[test]
    fn reports_are_deterministic_across_runs() {
        let params = SuiteParams { seed: 7, draws: Some(3), ..Default::default() };
        let r1 = verify_suite(Suite::DualityPol, &params);
        let r2 = verify_suite(Suite::DualityPol, &params);
        let j1 = serde_json::to_string(&r1).unwrap();
        let j2 = serde_json::to_string(&r2).unwrap();
        assert_eq!(j1, j2);
    }

    #[test]
    fn inadmissible_suite_parameters_are_skipped_not_crashed() {
        // a draws count of zero simply yields no reports; a poisoned seed
        // still yields structured reports
        let params = SuiteParams { seed: u64::MAX, draws: Some(2), ..Default::default() };
        let r = verify_suite(Suite::Redpol, &params);
        assert_eq!(r.len(), 2);
        for rep in r {
            assert!(matches!(rep.status, Status::Pass | Status::Skipped(_) | Status::Fail));
        }
    }
}
