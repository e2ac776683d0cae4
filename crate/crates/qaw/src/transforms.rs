//! Measures, quadrature, residue machinery, the polynomial Askey-Wilson
//! transform pair, the Askey-Wilson function transform, and the closed-form
//! right-hand sides of the master formulas.
//!
//! Contour policy: every integral is realized as the unit circle plus a
//! finite (or certified-truncated) set of symmetric residue corrections.
//! Discrete mass contributions are summed outward in a fixed order with a
//! runtime decay certificate, so results are deterministic for a given
//! policy and never include contributions past the precision horizon.

use crate::awcore::{
    aw_norm_n, aw_poly, gaussian_g, gaussian_g_inv, h_tilde, quasiconstant_theta_inv,
    weight_delta, FiveTuple, Involution::*, ParamQuad,
};
use crate::awfunction::awf_phi_value;
use crate::error::{Error, Result, Tail};
use crate::policy::TruncationPolicy;
use crate::qseries::{qpoch_finite, qpoch_inf, qpoch_inf_impl, qpoch_inf_skip, theta_multi};
use crate::scalar::{lit, pairwise_sum, re, Cx, QScalar};

/// Inversion-invariant function on the punctured plane, the integrand type
/// of every transform.
pub trait SymmetricFn<T: QScalar>: Sync {
    fn eval(&self, x: Cx<T>) -> Result<Cx<T>>;
}

impl<T: QScalar, F> SymmetricFn<T> for F
where
    F: Fn(Cx<T>) -> Result<Cx<T>> + Sync,
{
    fn eval(&self, x: Cx<T>) -> Result<Cx<T>> {
        self(x)
    }
}

/// Minimum relative distance allowed between a pole and the unit circle.
fn contour_gap<T: QScalar>() -> T {
    lit(1e-6)
}

/// Minimum relative gap between two discrete mass points (simple-pole
/// requirement).
fn min_pole_gap<T: QScalar>() -> T {
    lit(1e-8)
}

/// Exact simple-pole residue of an integrand of the form
/// `g(y) / ((1 - x0/y) y)` with `g` analytic near `x0`: the residue at
/// `y = x0` is `g(x0)`.
pub fn residue_deflated<T: QScalar>(x0: Cx<T>, deflated: &dyn SymmetricFn<T>) -> Result<Cx<T>> {
    deflated.eval(x0)
}

/// Trapezoid rule for `(1/4 pi i) \oint f(x) w(x) dx/x` over the unit
/// circle, doubling the node count from 64 until two successive levels
/// agree to `policy.rel_tol` (or the integrand's rounding floor), capped at
/// 2^16 nodes.
pub fn circle_quadrature<T: QScalar>(
    f: &dyn SymmetricFn<T>,
    weight: &dyn SymmetricFn<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let vals = circle_quadrature_batch(weight, &[f], policy)?;
    Ok(vals[0])
}

/// Batched trapezoid rule sharing one weight evaluation per node across a
/// family of integrands: computes `(1/4 pi i) \oint fs[i](x) w(x) dx/x`.
pub fn circle_quadrature_batch<T: QScalar>(
    weight: &dyn SymmetricFn<T>,
    fs: &[&dyn SymmetricFn<T>],
    policy: &TruncationPolicy<T>,
) -> Result<Vec<Cx<T>>> {
    use rayon::prelude::*;

    const START: usize = 64;
    const CAP: usize = 1 << 16;
    let k = fs.len();
    let eval_nodes = |angles: &[T]| -> Result<Vec<Vec<Cx<T>>>> {
        angles
            .par_iter()
            .map(|&th| {
                let x = Cx::from_polar(T::one(), th);
                let w = weight.eval(x)?;
                let mut row = Vec::with_capacity(k);
                for f in fs {
                    row.push(f.eval(x)? * w);
                }
                Ok(row)
            })
            .collect()
    };

    let two_pi = T::PI() + T::PI();
    let mut n = START;
    let angles: Vec<T> = (0..n)
        .map(|j| two_pi * T::from_usize(j).unwrap() / T::from_usize(n).unwrap())
        .collect();
    let rows = eval_nodes(&angles)?;
    let mut scale = T::zero();
    let mut sums: Vec<Cx<T>> = (0..k)
        .map(|i| {
            let col: Vec<Cx<T>> = rows.iter().map(|r| r[i]).collect();
            for v in &col {
                scale = scale.max(v.norm());
            }
            pairwise_sum(&col)
        })
        .collect();
    let mut prev: Vec<Cx<T>> = sums
        .iter()
        .map(|&s| s / T::from_usize(2 * n).unwrap())
        .collect();

    while n < CAP {
        // refine with the odd nodes of the doubled grid
        let angles: Vec<T> = (0..n)
            .map(|j| two_pi * T::from_usize(2 * j + 1).unwrap() / T::from_usize(2 * n).unwrap())
            .collect();
        let rows = eval_nodes(&angles)?;
        for i in 0..k {
            let col: Vec<Cx<T>> = rows.iter().map(|r| r[i]).collect();
            for v in &col {
                scale = scale.max(v.norm());
            }
            sums[i] = sums[i] + pairwise_sum(&col);
        }
        n *= 2;
        let cur: Vec<Cx<T>> = sums
            .iter()
            .map(|&s| s / T::from_usize(2 * n).unwrap())
            .collect();
        let floor = T::epsilon() * scale * lit(8.0);
        let all_converged = cur.iter().zip(prev.iter()).all(|(c, p)| {
            let d = (*c - *p).norm();
            d <= policy.rel_tol * c.norm() || d <= floor
        });
        if all_converged {
            for v in &cur {
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::NonFinite("circle_quadrature"));
                }
            }
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergent { tail: Tail::Upper, max_terms: CAP })
}

/// A symmetric discrete mass point: the pair `{x, 1/x}` carries total
/// weight `(f(x) + f(1/x))/2 * weight` at integration time.
#[derive(Clone, Copy, Debug)]
pub struct MassPoint<T: QScalar> {
    pub point: Cx<T>,
    pub weight: Cx<T>,
}

/// A measure of the form (circle density) + (symmetric mass points), the
/// common shape of every spectral measure in the engine.
pub struct MeasureSpec<T: QScalar> {
    circle_weight: Box<dyn SymmetricFn<T>>,
    pub masses: Vec<MassPoint<T>>,
    /// Index into `masses` from which the list is a certified truncation of
    /// an infinite family (mass contributions past the list are below the
    /// recorded floor for the admissible integrand families).
    pub truncated_from: Option<usize>,
    pub truncation_note: String,
}

impl<T: QScalar> MeasureSpec<T> {
    /// `\int f dm` with the half-sum pairing convention on mass points.
    pub fn integrate(&self, f: &dyn SymmetricFn<T>, policy: &TruncationPolicy<T>) -> Result<Cx<T>> {
        let one = move |_x: Cx<T>| Ok(Cx::new(T::one(), T::zero()));
        Ok(self.integrate_batch(&one, &[f], policy)?[0])
    }

    /// Batched integration `\int fs[i](x) common(x) dm(x)`; the shared
    /// factor is evaluated once per node and mass point.
    pub fn integrate_batch(
        &self,
        common: &dyn SymmetricFn<T>,
        fs: &[&dyn SymmetricFn<T>],
        policy: &TruncationPolicy<T>,
    ) -> Result<Vec<Cx<T>>> {
        let k = fs.len();
        let weight = &*self.circle_weight;
        let composite = |x: Cx<T>| -> Result<Cx<T>> { Ok(weight.eval(x)? * common.eval(x)?) };
        let mut totals = circle_quadrature_batch(&composite, fs, policy)?;
        let mut scale: T = totals.iter().fold(T::zero(), |s, v| s.max(v.norm()));
        let half: T = lit(0.5);
        // Contributions of the truncated family are summed outward and must
        // decay super-geometrically. The sum ends at two consecutive
        // negligible contributions, or at the first decay reversal once
        // contributions sit below tolerance (the integrand's rounding
        // floor); reaching the end of the list with contributions still
        // significant means the tail cannot be certified.
        let t0 = self.truncated_from.unwrap_or(self.masses.len());
        let stop_frac: T = lit(0.05);
        let ratio_cap: T = lit(0.7);
        let mut streak = 0usize;
        let mut decay_streak = 0usize;
        let mut tail_ok = t0 >= self.masses.len();
        let mut prev_norm = T::infinity();
        for (idx, mp) in self.masses.iter().enumerate() {
            let xi = Cx::new(T::one(), T::zero()) / mp.point;
            let c = common.eval(mp.point)?;
            let ci = common.eval(xi)?;
            let mut biggest = T::zero();
            for i in 0..k {
                let contrib =
                    (fs[i].eval(mp.point)? * c + fs[i].eval(xi)? * ci) * half * mp.weight;
                totals[i] = totals[i] + contrib;
                biggest = biggest.max(contrib.norm());
            }
            scale = totals.iter().fold(scale, |s, v| s.max(v.norm()));
            if idx >= t0 {
                let floor = scale.max(T::min_positive_value());
                if biggest < policy.rel_tol * floor {
                    tail_ok = true;
                    if biggest > prev_norm + prev_norm {
                        break; // noise floor turn-up
                    }
                }
                if biggest < policy.rel_tol * stop_frac * floor {
                    streak += 1;
                    if streak >= 2 {
                        break;
                    }
                } else {
                    streak = 0;
                }
                if biggest < ratio_cap * prev_norm {
                    decay_streak += 1;
                } else {
                    decay_streak = 0;
                }
                prev_norm = biggest;
            }
        }
        // a run of geometric decay at the end of the retained family bounds
        // the discarded tail by ~2.3x the final contribution
        if decay_streak >= 3 {
            tail_ok = true;
        }
        if !tail_ok {
            return Err(Error::NonConvergent { tail: Tail::Lower, max_terms: self.masses.len() });
        }
        Ok(totals)
    }

    /// Total mass `\int 1 dm`.
    pub fn total_mass(&self, policy: &TruncationPolicy<T>) -> Result<Cx<T>> {
        let one = move |_x: Cx<T>| Ok(Cx::new(T::one(), T::zero()));
        self.integrate(&one, policy)
    }
}

fn check_off_contour<T: QScalar>(p: Cx<T>) -> Result<()> {
    let gap = contour_gap::<T>();
    if (p.norm() - T::one()).abs() <= gap {
        return Err(Error::PoleNearContour(gap.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn check_pole_gaps<T: QScalar>(points: &[Cx<T>]) -> Result<()> {
    let gap = min_pole_gap::<T>();
    for (i, a) in points.iter().enumerate() {
        for b in points.iter().skip(i + 1) {
            if (*a - *b).norm() <= gap * a.norm().max(b.norm()) {
                return Err(Error::DegenerateParameters(format!(
                    "mass points {a:?} and {b:?} collide (higher-order pole)"
                )));
            }
        }
    }
    Ok(())
}

/// Residue corrections of the Askey-Wilson weight: masses at every
/// `e q^k` with modulus > 1, `e` ranging over the four parameters.
/// The weights are plain residues of `Delta(y)/y` (no normalization).
fn delta_residue_masses<T: QScalar>(
    alpha: &ParamQuad<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Vec<MassPoint<T>>> {
    let mut masses = Vec::new();
    let params = alpha.params();
    let q = alpha.q;
    for (ei, &e) in params.iter().enumerate() {
        if e.norm() <= T::one() {
            // the k = 0 point is already inside; check it clears the circle
            if e.norm() > T::zero() {
                check_off_contour(e)?;
            }
            continue;
        }
        let mut k = 0usize;
        loop {
            let x0 = e * q.powi(k as i32);
            if x0.norm() <= T::one() {
                check_off_contour(x0)?;
                break;
            }
            check_off_contour(x0)?;
            let deflated = DeflatedDelta { alpha: *alpha, ei, k, policy: *policy };
            let w = residue_deflated(x0, &deflated)?;
            if !w.re.is_finite() || !w.im.is_finite() {
                return Err(Error::DegenerateParameters(
                    "non-finite residue weight (pole collision)".into(),
                ));
            }
            masses.push(MassPoint { point: x0, weight: w });
            k += 1;
        }
    }
    check_pole_gaps(&masses.iter().map(|m| m.point).collect::<Vec<_>>())?;
    Ok(masses)
}

/// `Delta(y) (1 - e q^k / y)`: the weight with the single vanishing factor
/// of `(e/y;q)_inf` removed, evaluable at and near `y = e q^k`.
struct DeflatedDelta<T: QScalar> {
    alpha: ParamQuad<T>,
    ei: usize,
    k: usize,
    policy: TruncationPolicy<T>,
}

impl<T: QScalar> SymmetricFn<T> for DeflatedDelta<T> {
    fn eval(&self, y: Cx<T>) -> Result<Cx<T>> {
        use crate::qseries::{qpoch_inf_scaled, qpoch_inf_skip_scaled};
        let q = self.alpha.q;
        let pol = &self.policy;
        let one = Cx::new(T::one(), T::zero());
        let mut acc = qpoch_inf_scaled(y * y, q, pol);
        acc.mul_scaled(&qpoch_inf_scaled(one / (y * y), q, pol));
        for (i, &e) in self.alpha.params().iter().enumerate() {
            let (_, min_f) = qpoch_inf_impl(e * y, q, pol);
            if min_f < lit(1e-11) {
                return Err(Error::DegenerateParameters(
                    "second pole family hits the deflated point".into(),
                ));
            }
            acc.div_scaled(&qpoch_inf_scaled(e * y, q, pol));
            if i == self.ei {
                acc.div_scaled(&qpoch_inf_skip_scaled(e / y, q, self.k, pol));
            } else {
                let (_, min_f2) = qpoch_inf_impl(e / y, q, pol);
                if min_f2 < lit(1e-11) {
                    return Err(Error::DegenerateParameters(
                        "second pole family hits the deflated point".into(),
                    ));
                }
                acc.div_scaled(&qpoch_inf_scaled(e / y, q, pol));
            }
        }
        Ok(acc.value())
    }
}

/// Checks membership in the polynomial parameter domain: all parameters
/// real, `d < 0 < a`, `abcd > 0`, all six pairwise products < 1.
pub fn is_v_pol<T: QScalar>(alpha: &ParamQuad<T>) -> bool {
    let [a, b, c, d] = alpha.params();
    let real = |v: Cx<T>| v.im.abs() <= lit::<T>(1e-14) * (T::one() + v.norm());
    if !(real(a) && real(b) && real(c) && real(d)) {
        return false;
    }
    let (a, b, c, d) = (a.re, b.re, c.re, d.re);
    d < T::zero()
        && T::zero() < a
        && a * b * c * d > T::zero()
        && [a * b, a * c, a * d, b * c, b * d, c * d]
            .iter()
            .all(|&p| p < T::one())
}

/// The normalized polynomial spectral measure `nu`: unit-circle density
/// `Delta/N` plus finitely many deflated-residue masses (weights divided
/// by `N`) at the points of `F = { e q^k : |e q^k| > 1 }`.
pub fn measure_nu<T: QScalar>(
    alpha: &ParamQuad<T>,
    policy: &TruncationPolicy<T>,
) -> Result<MeasureSpec<T>> {
    if !is_v_pol(alpha) {
        return Err(Error::InvalidParameter(
            "measure_nu expects a V_pol parameter quadruple".into(),
        ));
    }
    measure_circle_plus_residues(alpha, policy)
}

/// The `nu`-shaped measure for any quadruple whose weight poles stay clear
/// of the unit circle; used by the polynomial transform in composed-word
/// parameter regimes where `V_pol` membership is not required.
pub fn measure_circle_plus_residues<T: QScalar>(
    alpha: &ParamQuad<T>,
    policy: &TruncationPolicy<T>,
) -> Result<MeasureSpec<T>> {
    let n = aw_norm_n(alpha, policy)?;
    if n.norm() == T::zero() {
        return Err(Error::DegenerateParameters("vanishing Askey-Wilson integral".into()));
    }
    let mut masses = delta_residue_masses(alpha, policy)?;
    for m in masses.iter_mut() {
        m.weight = m.weight / n;
    }
    let quad = *alpha;
    let pol = *policy;
    let circle = move |x: Cx<T>| -> Result<Cx<T>> { Ok(weight_delta(&quad, x, &pol)? / n) };
    Ok(MeasureSpec {
        circle_weight: Box::new(circle),
        masses,
        truncated_from: None,
        truncation_note: "finite residue set; no truncation".into(),
    })
}

/// Weight `W(x) = Delta(x) Theta(x)` in the cancelled form
/// `(x^2, 1/x^2, qx/d, q/(dx);q)_inf /
///  [(ax,a/x,bx,b/x,cx,c/x;q)_inf theta(dtx, dt/x)]`,
/// which avoids evaluating the removable `d`-ladder poles of `Delta`.
pub fn weight_w<T: QScalar>(
    beta: &FiveTuple<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    if x.norm() == T::zero() {
        return Err(Error::InvalidParameter("W needs x != 0".into()));
    }
    let q = beta.q;
    let one = Cx::new(T::one(), T::zero());
    let qd = re::<T>(q) / re::<T>(beta.d);
    let num = qpoch_inf(x * x, q, policy)
        * qpoch_inf(one / (x * x), q, policy)
        * qpoch_inf(qd * x, q, policy)
        * qpoch_inf(qd / x, q, policy);
    let mut den = one;
    for e in [beta.a, beta.b, beta.c] {
        for arg in [x * e, re::<T>(e) / x] {
            let (v, min_f) = qpoch_inf_impl(arg, q, policy);
            if min_f < lit(1e-11) {
                return Err(Error::PoleAtNode(format!("W pole at x = {x:?}")));
            }
            den = den * v;
        }
    }
    let dt = re::<T>(beta.d * beta.t);
    let th = theta_multi(&[dt * x, dt / x], q, policy)?;
    if th.norm() == T::zero() {
        return Err(Error::PoleAtNode(format!("W pole (theta) at x = {x:?}")));
    }
    Ok(num / (den * th))
}

/// Deflated `W` at a `D_+` point `a q^k` or a `D_-` point `dt q^k`
/// (`k` of either sign), in the contract form `W(y)(1 - x0/y)`.
struct DeflatedW<T: QScalar> {
    beta: FiveTuple<T>,
    /// `None`: deflate the `a`-ladder factor at index `k >= 0`;
    /// `Some(k)` with the signed index: deflate the `dt`-ladder.
    dminus_k: Option<i64>,
    k_plus: usize,
    policy: TruncationPolicy<T>,
}

impl<T: QScalar> SymmetricFn<T> for DeflatedW<T> {
    fn eval(&self, y: Cx<T>) -> Result<Cx<T>> {
        use crate::qseries::{qpoch_inf_scaled, qpoch_inf_skip_scaled, theta_scaled};
        let b = &self.beta;
        let q = b.q;
        let pol = &self.policy;
        let one = Cx::new(T::one(), T::zero());
        let qd = re::<T>(q) / re::<T>(b.d);
        let mut acc = qpoch_inf_scaled(y * y, q, pol);
        acc.mul_scaled(&qpoch_inf_scaled(one / (y * y), q, pol));
        acc.mul_scaled(&qpoch_inf_scaled(qd * y, q, pol));
        acc.mul_scaled(&qpoch_inf_scaled(qd / y, q, pol));
        let dt = b.d * b.t;
        let dtc = re::<T>(dt);
        match self.dminus_k {
            None => {
                // remove factor k of (a/y;q)_inf
                acc.div_scaled(&qpoch_inf_scaled(re::<T>(b.a) * y, q, pol));
                acc.div_scaled(&qpoch_inf_skip_scaled(re::<T>(b.a) / y, q, self.k_plus, pol));
                for e in [b.b, b.c] {
                    acc.div_scaled(&qpoch_inf_scaled(re::<T>(e) * y, q, pol));
                    acc.div_scaled(&qpoch_inf_scaled(re::<T>(e) / y, q, pol));
                }
                acc.div_scaled(&theta_scaled(dtc * y, q, pol)?);
                acc.div_scaled(&theta_scaled(dtc / y, q, pol)?);
                Ok(acc.value())
            }
            Some(k) => {
                for e in [b.a, b.b, b.c] {
                    acc.div_scaled(&qpoch_inf_scaled(re::<T>(e) * y, q, pol));
                    acc.div_scaled(&qpoch_inf_scaled(re::<T>(e) / y, q, pol));
                }
                // theta(dt/y) = (dt/y;q)_inf (qy/dt;q)_inf; remove the factor
                // vanishing at y = dt q^k
                acc.div_scaled(&theta_scaled(dtc * y, q, pol)?);
                if k >= 0 {
                    acc.div_scaled(&qpoch_inf_skip_scaled(dtc / y, q, k as usize, pol));
                    acc.div_scaled(&qpoch_inf_scaled(re::<T>(q) * y / dtc, q, pol));
                } else {
                    // vanishing factor sits in (qy/dt;q)_inf at index -1-k;
                    // converting (1 - y/x0) to the contract form costs -x0/y
                    let x0 = dtc * re::<T>(q.powi(k as i32));
                    acc.div_scaled(&qpoch_inf_scaled(dtc / y, q, pol));
                    acc.div_scaled(&qpoch_inf_skip_scaled(
                        re::<T>(q) * y / dtc,
                        q,
                        (-1 - k) as usize,
                        pol,
                    ));
                    acc.mul(-x0 / y);
                }
                Ok(acc.value())
            }
        }
    }
}

/// The mixed measure `m` of the Askey-Wilson function transform: circle
/// density `W`, finite `D_+` masses on the `a`-ladder, and the infinite
/// `D_-` family on the `dt`-ladder truncated under `weight_floor` with the
/// Gaussian-damped bound `|w| |G^tau(x)| (1+|x|)^budget`.
pub fn measure_m<T: QScalar>(
    beta: &FiveTuple<T>,
    weight_floor: T,
    budget: u32,
    policy: &TruncationPolicy<T>,
) -> Result<MeasureSpec<T>> {
    beta.require_conditions()?;
    let q = beta.q;
    let tau_quad = beta.quad().tau()?;
    let mut masses: Vec<MassPoint<T>> = Vec::new();

    // D_+ : a q^k > 1
    let mut k = 0usize;
    loop {
        let x0 = re::<T>(beta.a * q.powi(k as i32));
        if x0.norm() <= T::one() {
            check_off_contour(x0)?;
            break;
        }
        check_off_contour(x0)?;
        let deflated = DeflatedW { beta: *beta, dminus_k: None, k_plus: k, policy: *policy };
        let w = residue_deflated(x0, &deflated)?;
        masses.push(MassPoint { point: x0, weight: w });
        k += 1;
    }
    let truncated_from = masses.len();

    // D_- : dt q^k < -1, k descending from the largest admissible index
    let dt = beta.d * beta.t;
    let mut k0: i64 = 0;
    while !(dt * q.powi(k0 as i32) < -T::one()) {
        k0 -= 1;
        if k0 < -10_000 {
            return Err(Error::InvalidParameter("D- is empty".into()));
        }
    }
    while dt * q.powi(k0 as i32 + 1) < -T::one() {
        k0 += 1;
    }
    let mut k = k0;
    let one_t = T::one();
    // Series evaluations at a point of modulus q^{-lam} cancel through
    // terms of size q^{-lam^2/2}; past this horizon a fixed-precision
    // integrand evaluation carries no information, and the Gaussian-damped
    // true contributions there are below tolerance anyway.
    let digits = -T::epsilon().log10() - lit(3.5);
    let lam_max = (lit::<T>(2.0) * digits / -q.log10()).sqrt();
    let horizon = q.powf(-lam_max);
    let mut cut_reason = "weight bound";
    loop {
        let x0 = re::<T>(dt * q.powi(k as i32));
        check_off_contour(x0)?;
        let deflated = DeflatedW { beta: *beta, dminus_k: Some(k), k_plus: 0, policy: *policy };
        let w = residue_deflated(x0, &deflated)?;
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(Error::DegenerateParameters("non-finite D- residue".into()));
        }
        masses.push(MassPoint { point: x0, weight: w });
        let damp = gaussian_g(&tau_quad, x0, policy)?.norm();
        let bound = w.norm() * damp * (one_t + x0.norm()).powi(budget as i32);
        if bound < weight_floor {
            break;
        }
        if x0.norm() > horizon {
            cut_reason = "precision horizon";
            break;
        }
        k -= 1;
        if (k0 - k) as usize > policy.max_terms {
            return Err(Error::NonConvergent { tail: Tail::Lower, max_terms: policy.max_terms });
        }
    }
    check_pole_gaps(&masses.iter().map(|m| m.point).collect::<Vec<_>>())?;

    let nd = masses.len() - truncated_from;
    let note = format!(
        "D- truncated to {nd} points ({cut_reason}) under weight_floor {weight_floor:?} with Gaussian-damped degree budget {budget}"
    );
    let b = *beta;
    let pol = *policy;
    let circle = move |x: Cx<T>| weight_w(&b, x, &pol);
    Ok(MeasureSpec {
        circle_weight: Box::new(circle),
        masses,
        truncated_from: Some(truncated_from),
        truncation_note: note,
    })
}

/// Polynomial Askey-Wilson transform `(F f)(s_m) = \int f E_{s_m} d nu`,
/// realized as unit circle plus residue corrections for any quadruple with
/// contour-admissible poles.
pub fn poly_transform_f<T: QScalar>(
    alpha: &ParamQuad<T>,
    f: &dyn SymmetricFn<T>,
    m: usize,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let measure = measure_circle_plus_residues(alpha, policy)?;
    poly_transform_f_on(&measure, alpha, f, m, policy)
}

/// As [`poly_transform_f`] against a prebuilt measure.
pub fn poly_transform_f_on<T: QScalar>(
    measure: &MeasureSpec<T>,
    alpha: &ParamQuad<T>,
    f: &dyn SymmetricFn<T>,
    m: usize,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let quad = *alpha;
    let g = move |x: Cx<T>| -> Result<Cx<T>> { Ok(f.eval(x)? * aw_poly(&quad, m, x)?) };
    measure.integrate(&g, policy)
}

/// A function on the spectral set, either finitely supported or generated
/// on demand.
pub enum DiscreteFunction<T: QScalar> {
    Finite(Vec<(usize, Cx<T>)>),
    Dynamic(Box<dyn Fn(usize) -> Result<Cx<T>> + Sync>),
}

/// Inverse polynomial transform `(I g)(x) = sum_m g(s_m) E_{s_m}(x) h~(s_m)`.
///
/// Finite-support inputs are summed exactly; dynamic inputs are truncated
/// under the certified-tail rule of the policy.
pub fn poly_inverse_i<T: QScalar>(
    alpha: &ParamQuad<T>,
    g: &DiscreteFunction<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    match g {
        DiscreteFunction::Finite(support) => {
            let mut terms = Vec::with_capacity(support.len());
            for &(m, gv) in support {
                terms.push(gv * aw_poly(alpha, m, x)? * h_tilde(alpha, m)?);
            }
            Ok(pairwise_sum(&terms))
        }
        DiscreteFunction::Dynamic(gf) => {
            let mut total = Cx::new(T::zero(), T::zero());
            let mut streak = 0usize;
            for m in 0..policy.max_terms {
                let term = gf(m)? * aw_poly(alpha, m, x)? * h_tilde(alpha, m)?;
                total = total + term;
                if m >= 4 && term.norm() < policy.rel_tol * total.norm() {
                    streak += 1;
                    if streak >= 2 {
                        return Ok(total);
                    }
                } else {
                    streak = 0;
                }
            }
            Err(Error::NonConvergent { tail: Tail::Upper, max_terms: policy.max_terms })
        }
    }
}

/// The positive constant `K = N^tau / sqrt(theta(adt, bdt, cdt, qt))`.
pub fn k_const<T: QScalar>(beta: &FiveTuple<T>, policy: &TruncationPolicy<T>) -> Result<T> {
    let q = beta.q;
    let tau_quad = beta.quad().tau()?;
    let ntau = aw_norm_n(&tau_quad, policy)?;
    let rad = theta_multi(
        &[
            re::<T>(beta.a * beta.d * beta.t),
            re::<T>(beta.b * beta.d * beta.t),
            re::<T>(beta.c * beta.d * beta.t),
            re::<T>(q * beta.t),
        ],
        q,
        policy,
    )?;
    let imag_ok = rad.im.abs() <= lit::<T>(1e-10) * (T::one() + rad.norm());
    if !imag_ok || rad.re <= T::zero() {
        return Err(Error::NegativeRadicand(rad.re.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(ntau.re / rad.re.sqrt())
}

/// Askey-Wilson function transform
/// `(J f)(gamma) = (1/K) \int f(x) phi_gamma(x) dm(x)`.
pub fn awf_transform_j<T: QScalar>(
    beta: &FiveTuple<T>,
    f: &dyn SymmetricFn<T>,
    gamma: Cx<T>,
    weight_floor: T,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let measure = measure_m(beta, weight_floor, DEFAULT_BUDGET, policy)?;
    let k = k_const(beta, policy)?;
    awf_transform_j_on(&measure, k, beta, f, gamma, policy)
}

/// Default polynomial degree budget used by the `D_-` truncation bound.
pub const DEFAULT_BUDGET: u32 = 12;

/// Default mass-weight floor for the `D_-` truncation.
pub fn default_weight_floor<T: QScalar>() -> T {
    lit(1e-18)
}

/// As [`awf_transform_j`] against a prebuilt measure and constant.
pub fn awf_transform_j_on<T: QScalar>(
    measure: &MeasureSpec<T>,
    k: T,
    beta: &FiveTuple<T>,
    f: &dyn SymmetricFn<T>,
    gamma: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let quad = beta.quad();
    let pol = *policy;
    let phi = move |x: Cx<T>| awf_phi_value(&quad, gamma, x, &pol);
    let vals = measure.integrate_batch(&phi, &[f], policy)?;
    Ok(vals[0] / k)
}

/// Which master-formula right-hand side to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MasterFormula {
    /// `J(E^tau_s G^tau)` evaluated at `gamma`.
    Thm53First,
    /// `J(E^tau_s G^{-1} Theta^{-1})` evaluated at `gamma`.
    Thm53Second,
    /// `F(E^tau_s G^{-1})` evaluated at `v` (a spectral point value).
    Thm44F,
    /// `I(E^{sigma tau}_s G^{sigma tau})` evaluated at `x`.
    Thm44I,
    /// `F^tau(phi^an_gamma)(s)` as a function of `gamma`.
    Prop41,
    /// Alias of [`MasterFormula::Thm44F`] (the key proposition behind it).
    Prop43,
}

/// Closed-form right-hand sides of the master formulas, with every
/// composed-parameter object routed through `apply_word`.
pub fn master_rhs<T: QScalar>(
    beta: &FiveTuple<T>,
    which: MasterFormula,
    s_idx: usize,
    z: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let alpha = beta.quad();
    let tau_quad = alpha.tau()?;
    let st = alpha.apply_word(&[Sigma, Tau])?;
    let s_val = tau_quad.spectral(s_idx)?.value;
    let s0_val = tau_quad.spectral(0)?.value;
    match which {
        MasterFormula::Thm53First => {
            let rad = master_radicand(beta, policy)?;
            let ts = alpha.apply_word(&[Tau, Sigma])?;
            let dual_beta = beta.dual()?;
            let e = aw_poly(&st, s_idx, z)?;
            let g_ratio = gaussian_g(&ts, s0_val, policy)? / gaussian_g(&ts, s_val, policy)?;
            let gsig_inv = gaussian_g_inv(&alpha.dual()?, z, policy)?;
            let th_inv = quasiconstant_theta_inv(&dual_beta, z, policy)?;
            Ok(g_ratio * e * gsig_inv * th_inv / rad.sqrt())
        }
        MasterFormula::Thm53Second => {
            let rad = master_radicand(beta, policy)?;
            let sts = alpha.apply_word(&[Sigma, Tau, Sigma])?;
            let e = aw_poly(&st, s_idx, z)?;
            let g_ratio = gaussian_g(&sts, s_val, policy)? / gaussian_g(&sts, s0_val, policy)?;
            let gst = gaussian_g(&st, z, policy)?;
            Ok(g_ratio * e * gst * rad.sqrt())
        }
        MasterFormula::Thm44F | MasterFormula::Prop43 => {
            let c = thm44_constant(&alpha, policy)?;
            let tst = alpha.apply_word(&[Tau, Sigma, Tau])?;
            let e = aw_poly(&st, s_idx, z)?;
            Ok(c * gaussian_g(&tst, s_val, policy)? * e * gaussian_g(&st, z, policy)?)
        }
        MasterFormula::Thm44I => {
            let c = thm44_constant(&alpha, policy)?;
            let tst = alpha.apply_word(&[Tau, Sigma, Tau])?;
            let e = aw_poly(&tau_quad, s_idx, z)?;
            Ok(e * gaussian_g_inv(&alpha, z, policy)?
                / (c * gaussian_g(&tst, s_val, policy)?))
        }
        MasterFormula::Prop41 => {
            let tst = alpha.apply_word(&[Tau, Sigma, Tau])?;
            let e = aw_poly(&st, s_idx, z)?;
            Ok(gaussian_g(&tst, s_val, policy)? / gaussian_g(&tst, s0_val, policy)? * e)
        }
    }
}

fn master_radicand<T: QScalar>(beta: &FiveTuple<T>, policy: &TruncationPolicy<T>) -> Result<Cx<T>> {
    let q = beta.q;
    let rad = theta_multi(
        &[
            re::<T>(beta.a * beta.d * beta.t),
            re::<T>(beta.b * beta.d * beta.t),
            re::<T>(beta.c * beta.d * beta.t),
            re::<T>(q * beta.t),
        ],
        q,
        policy,
    )?;
    if rad.re <= T::zero() || rad.im.abs() > lit::<T>(1e-10) * (T::one() + rad.norm()) {
        return Err(Error::NegativeRadicand(rad.re.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(re(rad.re))
}

/// `(bc, bc, d/a, ad, q/ad, bd, cd;q)_inf / (abcd;q)_inf`.
fn thm44_constant<T: QScalar>(alpha: &ParamQuad<T>, policy: &TruncationPolicy<T>) -> Result<Cx<T>> {
    let q = alpha.q;
    let qc = re::<T>(q);
    let [a, b, c, d] = alpha.params();
    let bc = b * c;
    let num = qpoch_inf(bc, q, policy)
        * qpoch_inf(bc, q, policy)
        * qpoch_inf(d / a, q, policy)
        * qpoch_inf(a * d, q, policy)
        * qpoch_inf(qc / (a * d), q, policy)
        * qpoch_inf(b * d, q, policy)
        * qpoch_inf(c * d, q, policy);
    let den = qpoch_inf(alpha.abcd(), q, policy);
    if den.norm() == T::zero() {
        return Err(Error::DegenerateDenominator("(abcd;q)_inf = 0".into()));
    }
    Ok(num / den)
}

/// Partial sum to order `M` of the expansion of the analytic part of the
/// Askey-Wilson function in Askey-Wilson polynomials:
/// `sum_m E^tau_m(x) E^{sigma tau}_m(gamma) c_m` with the explicit
/// super-geometrically decaying coefficient `c_m`.
pub fn expansion_partial_sum<T: QScalar>(
    alpha: &ParamQuad<T>,
    gamma: Cx<T>,
    x: Cx<T>,
    order: usize,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let _ = policy;
    let q = alpha.q;
    let qc = re::<T>(q);
    let one = Cx::new(T::one(), T::zero());
    let [a, b, c, d] = alpha.params();
    let abc_d = a * b * c / d;
    let tau_quad = alpha.tau()?;
    let st = alpha.apply_word(&[Sigma, Tau])?;
    let lead = one - abc_d;
    if lead.norm() <= T::epsilon() * lit(64.0) * (T::one() + abc_d.norm()) {
        return Err(Error::DegenerateDenominator("1 - abc/d = 0".into()));
    }
    let mut terms = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mi = m as i32;
        let den = lead
            * qpoch_finite(qc, q, m)
            * qpoch_finite(qc * b / d, q, m)
            * qpoch_finite(qc * c / d, q, m);
        if den.norm() == T::zero() {
            return Err(Error::DegenerateDenominator(format!(
                "(q, qb/d, qc/d;q)_{m} vanishes"
            )));
        }
        let num = (one - abc_d * q.powi(2 * mi))
            * qpoch_finite(abc_d, q, m)
            * qpoch_finite(a * b, q, m)
            * qpoch_finite(a * c, q, m);
        let gauss = q.powi((mi * (mi + 1)) / 2);
        let coef = num / den * (-one / (a * d)).powi(mi) * gauss;
        terms.push(coef * aw_poly(&tau_quad, m, x)? * aw_poly(&st, m, gamma)?);
    }
    Ok(pairwise_sum(&terms))
}

/// Both sides of the linking identity between the Askey-Wilson function
/// transform on the classical subspace and the tau-shifted polynomial
/// transform.
#[derive(Clone, Copy, Debug)]
pub struct LinkingCheck<T: QScalar> {
    pub lhs: Cx<T>,
    pub rhs: Cx<T>,
    pub rel_err: T,
}

/// Evaluates `J(E^tau_s G^{-1} Theta^{-1})` at the spectral value `v` of
/// the base parameters and compares with the constant multiple of
/// `F^tau(E_v (G^tau)^{-1})(s)`.
pub fn linking_check<T: QScalar>(
    beta: &FiveTuple<T>,
    v_idx: usize,
    s_idx: usize,
    weight_floor: T,
    policy: &TruncationPolicy<T>,
) -> Result<LinkingCheck<T>> {
    let alpha = beta.quad();
    let q = alpha.q;
    let qc = re::<T>(q);
    let tau_quad = alpha.tau()?;
    let gamma_v = alpha.spectral(v_idx)?.value;

    let b = *beta;
    let pol = *policy;
    let tq = tau_quad;
    let f_cl = move |x: Cx<T>| -> Result<Cx<T>> {
        Ok(aw_poly(&tq, s_idx, x)?
            * gaussian_g_inv(&b.quad(), x, &pol)?
            * quasiconstant_theta_inv(&b, x, &pol)?)
    };
    let lhs = awf_transform_j(beta, &f_cl, gamma_v, weight_floor, policy)?;

    let al = alpha;
    let f_pol = move |x: Cx<T>| -> Result<Cx<T>> {
        Ok(aw_poly(&al, v_idx, x)? * gaussian_g_inv(&tq, x, &pol)?)
    };
    let ft = poly_transform_f(&tau_quad, &f_pol, s_idx, policy)?;

    let ntau = aw_norm_n(&tau_quad, policy)?;
    let k = k_const(beta, policy)?;
    let [a, bb, c, d] = alpha.params();
    let cnum = qpoch_inf(qc * a * bb * c / d, q, policy);
    let cden = qpoch_inf(bb * c, q, policy)
        * qpoch_inf(qc / (a * d), q, policy)
        * qpoch_inf(qc * a / d, q, policy)
        * qpoch_inf(qc * bb / d, q, policy)
        * qpoch_inf(qc * c / d, q, policy);
    let c_link = cnum / cden * ntau / k;
    let rhs = c_link * ft;
    Ok(LinkingCheck { lhs, rhs, rel_err: crate::scalar::rel_err(lhs, rhs) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{cx, rel_err};

    type C = num_complex::Complex<f64>;

    fn pol() -> TruncationPolicy<f64> {
        TruncationPolicy::default()
    }

    fn assert_close(x: C, y: C, tol: f64) {
        let r = rel_err(x, y);
        assert!(r <= tol, "rel err {r:e} > {tol:e}\n  left: {x}\n right: {y}");
    }

    fn vpol_quad() -> ParamQuad<f64> {
        ParamQuad::from_reals(0.5, 0.75, 0.5, -0.3, -0.6).unwrap()
    }

    fn vpol_quad_mass() -> ParamQuad<f64> {
        // |d| > 1 puts one mass point at d
        ParamQuad::from_reals(0.5, 0.75, 0.5, -0.3, -1.4).unwrap()
    }

    fn beta51() -> FiveTuple<f64> {
        FiveTuple::new(0.4, 0.9, 0.5, 0.5, 2.0, -0.8).unwrap()
    }

    #[test]
    fn quadrature_constant_is_half() {
        let one = |_x: C| Ok(C::new(1.0, 0.0));
        let v = circle_quadrature(&one, &one, &pol()).unwrap();
        assert_close(v, cx(0.5, 0.0), 1e-14);
    }

    #[test]
    fn quadrature_kills_nonzero_fourier_modes() {
        let f = |x: C| Ok(x + 1.0 / x);
        let one = |_x: C| Ok(C::new(1.0, 0.0));
        let v = circle_quadrature(&f, &one, &pol()).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn quadrature_reproduces_askey_wilson_integral() {
        let quad = vpol_quad();
        let p = pol();
        let f = |_x: C| Ok(C::new(1.0, 0.0));
        let w = move |x: C| weight_delta(&quad, x, &p);
        let v = circle_quadrature(&f, &w, &p).unwrap();
        assert_close(v, aw_norm_n(&quad, &p).unwrap(), 1e-12);
    }

    #[test]
    fn residue_contract_constant_deflation() {
        let g = |_x: C| Ok(C::new(1.0, 0.0));
        let v = residue_deflated(cx(1.7, 0.3), &g).unwrap();
        assert_eq!(v, C::new(1.0, 0.0));
    }

    #[test]
    fn residue_matches_small_circle_contour_oracle() {
        // integrand h(y) = g(y)/((1 - x0/y) y): residue at x0 equals g(x0);
        // oracle: 64-node contour integral on a circle of radius 1e-3 |x0|
        let x0 = cx(1.3, 0.4);
        let g = |y: C| Ok(y * y + C::new(0.7, 0.1) / y);
        let v = residue_deflated(x0, &g).unwrap();
        let n = 64;
        let r = 1e-3 * x0.norm();
        let mut acc = C::new(0.0, 0.0);
        for j in 0..n {
            let th = 2.0 * std::f64::consts::PI * (j as f64) / (n as f64);
            let z = x0 + C::from_polar(r, th);
            let hy = g(z).unwrap() / ((C::new(1.0, 0.0) - x0 / z) * z);
            // (1/2 pi i) \oint h dz with dz = i r e^{i th} dth
            acc += hy * C::from_polar(r, th) / (n as f64);
        }
        assert_close(v, acc, 1e-9);
    }

    #[test]
    fn residue_reproduces_h_tilde_ratio() {
        // Res of dual Delta at s_m over s_0 equals h~(s_m)
        let quad = vpol_quad();
        let p = pol();
        let dual = quad.dual().unwrap();
        let res_at = |m: usize| -> C {
            let x0 = dual.spectral(m).unwrap().value * 0.0 + dual.a * quad.q.powi(m as i32);
            let defl = DeflatedDelta { alpha: dual, ei: 0, k: m, policy: p };
            residue_deflated(x0, &defl).unwrap()
        };
        let lhs = res_at(3) / res_at(0);
        assert_close(lhs, h_tilde(&quad, 3).unwrap(), 1e-11);
    }

    #[test]
    fn measure_nu_requires_v_pol() {
        let bad = ParamQuad::from_reals(0.5, 0.8, 0.6, 0.5, 1.6).unwrap();
        assert!(matches!(measure_nu(&bad, &pol()), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn measure_nu_total_mass_is_one() {
        for quad in [vpol_quad(), vpol_quad_mass()] {
            let m = measure_nu(&quad, &pol()).unwrap();
            assert_close(m.total_mass(&pol()).unwrap(), cx(1.0, 0.0), 1e-11);
        }
    }

    #[test]
    fn measure_nu_mass_structure() {
        let m0 = measure_nu(&vpol_quad(), &pol()).unwrap();
        assert!(m0.masses.is_empty(), "all moduli < 1 leaves F empty");
        let m1 = measure_nu(&vpol_quad_mass(), &pol()).unwrap();
        assert_eq!(m1.masses.len(), 1);
        let mp = &m1.masses[0];
        assert_close(mp.point, cx(-1.4, 0.0), 1e-15);
        assert!(mp.weight.im.abs() < 1e-14 * (1.0 + mp.weight.norm()), "real weight");
    }

    #[test]
    fn orthogonality_against_closed_form() {
        // F(E_n)(s_m) = delta_{nm} / h~(s_m), both with and without masses
        let p = pol();
        for quad in [vpol_quad(), vpol_quad_mass()] {
            let measure = measure_nu(&quad, &p).unwrap();
            for (n, m) in [(0usize, 0usize), (2, 2), (1, 3), (4, 2), (5, 5)] {
                let f = move |x: C| aw_poly(&quad, n, x);
                let v = poly_transform_f_on(&measure, &quad, &f, m, &p).unwrap();
                if n == m {
                    assert_close(v, 1.0 / h_tilde(&quad, m).unwrap(), 1e-10);
                } else {
                    let scale = (1.0 / h_tilde(&quad, m).unwrap()).norm();
                    assert!(v.norm() <= 1e-10 * scale, "off-diagonal {n},{m}: {v}");
                }
            }
        }
    }

    #[test]
    fn transform_pair_round_trips() {
        // I(F(E_n)) returns E_n pointwise
        let p = pol();
        let quad = vpol_quad_mass();
        let n = 3usize;
        let measure = measure_nu(&quad, &p).unwrap();
        let f = move |x: C| aw_poly(&quad, n, x);
        let coeffs: Vec<(usize, C)> = (0..=6)
            .map(|m| (m, poly_transform_f_on(&measure, &quad, &f, m, &p).unwrap()))
            .collect();
        let g = DiscreteFunction::Finite(coeffs);
        let x = cx(0.62, 0.53);
        let v = poly_inverse_i(&quad, &g, x, &p).unwrap();
        assert_close(v, aw_poly(&quad, n, x).unwrap(), 1e-10);
    }

    #[test]
    fn inverse_transform_single_delta() {
        let quad = vpol_quad();
        let p = pol();
        let g = DiscreteFunction::Finite(vec![(2usize, C::new(1.0, 0.0))]);
        let x = cx(0.3, 0.9);
        let v = poly_inverse_i(&quad, &g, x, &p).unwrap();
        let expect = h_tilde(&quad, 2).unwrap() * aw_poly(&quad, 2, x).unwrap();
        assert_close(v, expect, 1e-13);
    }

    #[test]
    fn measure_m_shape_and_positivity() {
        let beta = beta51();
        let p = pol();
        let m = measure_m(&beta, default_weight_floor(), DEFAULT_BUDGET, &p).unwrap();
        // a = 0.9 < 1: no D+ masses, only the dt ladder
        assert_eq!(m.truncated_from, Some(0));
        assert!(m.masses.len() > 5);
        for mp in &m.masses {
            assert!(mp.point.re < -1.0 && mp.point.im == 0.0);
            assert!(
                mp.weight.im.abs() <= 1e-12 * (1.0 + mp.weight.norm()) && mp.weight.re > 0.0,
                "weight {:?} not positive real",
                mp.weight
            );
        }
        // frozen oracle values from an independent high-precision evaluation
        assert_close(m.masses[0].point, cx(-1.6, 0.0), 1e-14);
        assert_close(m.masses[0].weight, cx(0.022253618, 0.0), 1e-7);
        assert_close(m.masses[1].weight, cx(0.05698303, 0.0), 1e-7);
        assert_close(m.masses[2].weight, cx(0.074042325, 0.0), 1e-7);
    }

    #[test]
    fn measure_m_gaussian_integral_stable_under_floor_doubling() {
        let beta = beta51();
        let p = pol();
        let tauq = beta.quad().tau().unwrap();
        let f = move |x: C| gaussian_g(&tauq, x, &p);
        let m1 = measure_m(&beta, 1e-18, DEFAULT_BUDGET, &p).unwrap();
        let m2 = measure_m(&beta, 2e-18, DEFAULT_BUDGET, &p).unwrap();
        let v1 = m1.integrate(&f, &p).unwrap();
        let v2 = m2.integrate(&f, &p).unwrap();
        assert!((v1 - v2).norm() < 1e-10 * v1.norm());
    }

    #[test]
    fn measure_m_rejects_bad_conditions() {
        let beta = FiveTuple::new(0.4, 0.9, 0.5, 0.5, 2.0, 0.8).unwrap();
        assert!(measure_m(&beta, 1e-18, DEFAULT_BUDGET, &pol()).is_err());
    }

    #[test]
    fn k_const_positive_and_matches_product_form() {
        let beta = beta51();
        let p = pol();
        let k = k_const(&beta, &p).unwrap();
        assert!(k > 0.0);
        // second line of the displayed form: N^tau expanded as products
        let q = beta.q;
        let qc = cx(q, 0.0);
        let (a, b, c, d) = (cx(beta.a, 0.0), cx(beta.b, 0.0), cx(beta.c, 0.0), cx(beta.d, 0.0));
        let num = qpoch_inf(qc * a * b * c / d, q, &p);
        let den = qpoch_inf(qc, q, &p)
            * qpoch_inf(a * b, q, &p)
            * qpoch_inf(a * c, q, &p)
            * qpoch_inf(b * c, q, &p)
            * qpoch_inf(qc * a / d, q, &p)
            * qpoch_inf(qc * b / d, q, &p)
            * qpoch_inf(qc * c / d, q, &p);
        let rad = theta_multi(
            &[
                cx(beta.a * beta.d * beta.t, 0.0),
                cx(beta.b * beta.d * beta.t, 0.0),
                cx(beta.c * beta.d * beta.t, 0.0),
                cx(q * beta.t, 0.0),
            ],
            q,
            &p,
        )
        .unwrap();
        let expect = (num / den).re / rad.re.sqrt();
        assert!((k - expect).abs() <= 1e-12 * expect.abs());
    }

    #[test]
    fn k_const_negative_radicand_detected() {
        // theta alternates sign between consecutive q-powers; this draw
        // puts adt, cdt, qt on negative intervals and bdt on a positive
        // one, so the radicand is negative
        let beta = FiveTuple::new(0.4, 0.9, 0.5, 0.25, 2.0, 0.7).unwrap();
        match k_const(&beta, &pol()) {
            Err(Error::NegativeRadicand(_)) => {}
            other => panic!("expected NegativeRadicand, got {other:?}"),
        }
    }

    #[test]
    fn j_transform_of_gaussian_at_dual_a() {
        // J(G^tau)(a~) = theta(qt, abcdt) / ((bc, q/ad;q)_inf sqrt(rad))
        let beta = beta51();
        let p = pol();
        let quad = beta.quad();
        let tauq = quad.tau().unwrap();
        let at = quad.dual().unwrap().a;
        let f = move |x: C| gaussian_g(&tauq, x, &p);
        let v = awf_transform_j(&beta, &f, at, default_weight_floor(), &p).unwrap();
        let q = beta.q;
        let rad = theta_multi(
            &[
                cx(beta.a * beta.d * beta.t, 0.0),
                cx(beta.b * beta.d * beta.t, 0.0),
                cx(beta.c * beta.d * beta.t, 0.0),
                cx(q * beta.t, 0.0),
            ],
            q,
            &p,
        )
        .unwrap();
        let num = theta_multi(
            &[cx(q * beta.t, 0.0), cx(beta.a * beta.b * beta.c * beta.d * beta.t, 0.0)],
            q,
            &p,
        )
        .unwrap();
        let den = qpoch_inf(cx(beta.b * beta.c, 0.0), q, &p)
            * qpoch_inf(cx(q / (beta.a * beta.d), 0.0), q, &p);
        let expect = num / (den * rad.re.sqrt());
        assert_close(v, expect, 1e-9);
    }

    #[test]
    fn expansion_partial_sum_order_zero_is_one() {
        let quad = ParamQuad::from_reals(0.5, 0.8, 0.6, 0.5, 1.6).unwrap();
        let v = expansion_partial_sum(&quad, cx(1.1, 0.35), cx(0.62, 0.53), 0, &pol()).unwrap();
        assert_close(v, cx(1.0, 0.0), 1e-15);
    }

    #[test]
    fn expansion_matches_analytic_part() {
        use crate::awfunction::awf_analytic;
        let quad = ParamQuad::from_reals(0.5, 0.8, 0.6, 0.5, 1.6).unwrap();
        let p = pol();
        let g = cx(1.1, 0.35);
        let x = cx(0.62, 0.53);
        let v = expansion_partial_sum(&quad, g, x, 40, &p).unwrap();
        let target = awf_analytic(&quad, g, x, &p).unwrap();
        assert_close(v, target, 1e-10);
    }

    #[test]
    fn expansion_terms_decay_super_geometrically() {
        use crate::awfunction::awf_analytic;
        let quad = ParamQuad::from_reals(0.5, 0.8, 0.6, 0.5, 1.6).unwrap();
        let p = pol();
        let g = cx(1.1, 0.35);
        let x = cx(0.62, 0.53);
        let target = awf_analytic(&quad, g, x, &p).unwrap().norm();
        let tail: Vec<f64> = (8..=14)
            .map(|m| {
                let a = expansion_partial_sum(&quad, g, x, m, &p).unwrap();
                let b = expansion_partial_sum(&quad, g, x, m - 1, &p).unwrap();
                (a - b).norm()
            })
            .collect();
        for w in tail.windows(2) {
            if w[0] < 1e-13 * target {
                break; // rounding floor reached
            }
            assert!(w[1] < 0.5 * w[0], "terms {w:?} not decaying");
        }
    }

    #[test]
    fn master_rhs_prop41_base_case() {
        let beta = beta51();
        let v = master_rhs(&beta, MasterFormula::Prop41, 0, cx(0.9, 0.4), &pol()).unwrap();
        assert_close(v, cx(1.0, 0.0), 1e-12);
    }

    #[test]
    fn linking_holds_at_low_indices() {
        let beta = beta51();
        let p = pol();
        for (v_idx, s_idx) in [(0usize, 0usize), (1, 0), (0, 1), (2, 1)] {
            let chk = linking_check(&beta, v_idx, s_idx, default_weight_floor(), &p).unwrap();
            assert!(
                chk.rel_err <= 1e-9,
                "linking ({v_idx},{s_idx}): rel err {:e}\n lhs {} rhs {}",
                chk.rel_err,
                chk.lhs,
                chk.rhs
            );
        }
    }
}
