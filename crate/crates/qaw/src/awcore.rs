//! Parameter algebra and the Askey-Wilson polynomial layer.
//!
//! The four-tuple `alpha = (a,b,c,d)` together with the base `q` carries two
//! involutions: the duality map `sigma` (dual parameters, branch-sensitive)
//! and `tau` (`d -> q/d`). Words in `{sigma, tau}` generate every composed
//! parameter set the master formulas need; they are always computed by
//! [`ParamQuad::apply_word`], never hand-expanded.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::TruncationPolicy;
use crate::qseries::{qpoch_finite, qpoch_inf_impl, theta};
use crate::scalar::{lit, re, Cx, QScalar};

/// One letter of a parameter word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Involution {
    /// Duality: `(a,b,c,d) -> (a~, ab/a~, ac/a~, ad/a~)` with
    /// `a~ = sqrt(abcd/q)` on the principal branch.
    Sigma,
    /// `(a,b,c,d) -> (a,b,c,q/d)`.
    Tau,
}

/// Base `q` plus the four Askey-Wilson parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamQuad<T: QScalar> {
    pub q: T,
    pub a: Cx<T>,
    pub b: Cx<T>,
    pub c: Cx<T>,
    pub d: Cx<T>,
}

impl<T: QScalar> ParamQuad<T> {
    pub fn new(q: T, a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> Result<Self> {
        if !(q > T::zero() && q < T::one()) {
            return Err(Error::InvalidParameter(format!("q must lie in (0,1), got {q:?}")));
        }
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d)] {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::InvalidParameter(format!("parameter {name} is not finite")));
            }
        }
        Ok(Self { q, a, b, c, d })
    }

    /// Real four-tuple constructor.
    pub fn from_reals(q: T, a: T, b: T, c: T, d: T) -> Result<Self> {
        Self::new(q, re(a), re(b), re(c), re(d))
    }

    pub fn params(&self) -> [Cx<T>; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn abcd(&self) -> Cx<T> {
        self.a * self.b * self.c * self.d
    }

    /// Dual parameters (the sigma involution). Requires `Re(a) > 0` for the
    /// principal square-root branch and `abcd != 0`.
    pub fn dual(&self) -> Result<Self> {
        if !(self.a.re > T::zero()) {
            return Err(Error::BranchViolation { prefix: vec![] });
        }
        let abcd = self.abcd();
        if abcd.norm() == T::zero() {
            return Err(Error::DegenerateParameters("abcd = 0 has no dual".into()));
        }
        let at = (abcd / self.q).sqrt();
        Ok(Self { q: self.q, a: at, b: self.a * self.b / at, c: self.a * self.c / at, d: self.a * self.d / at })
    }

    /// The tau involution `d -> q/d`. Requires `d != 0`.
    pub fn tau(&self) -> Result<Self> {
        if self.d.norm() == T::zero() {
            return Err(Error::DegenerateParameters("tau needs d != 0".into()));
        }
        Ok(Self { q: self.q, a: self.a, b: self.b, c: self.c, d: re::<T>(self.q) / self.d })
    }

    /// Left-to-right composition of involutions: `apply_word([s, t])` first
    /// applies sigma, then tau. A sigma step with `Re(a) <= 0` fails with
    /// the offending prefix.
    pub fn apply_word(&self, word: &[Involution]) -> Result<Self> {
        let mut cur = *self;
        for (i, w) in word.iter().enumerate() {
            cur = match w {
                Involution::Sigma => cur.dual().map_err(|e| match e {
                    Error::BranchViolation { .. } => {
                        Error::BranchViolation { prefix: word[..=i].to_vec() }
                    }
                    other => other,
                })?,
                Involution::Tau => cur.tau()?,
            };
        }
        Ok(cur)
    }

    /// Spectral point `s_m = a~ q^m`.
    pub fn spectral(&self, m: usize) -> Result<SpectralPoint<T>> {
        let at = self.dual()?.a;
        Ok(SpectralPoint { m, value: at * self.q.powi(m as i32) })
    }
}

/// A point `s_m = a~ q^m` of the discrete spectral set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPoint<T: QScalar> {
    pub m: usize,
    pub value: Cx<T>,
}

/// Five-tuple `beta = (a,b,c,d,t)` of real parameters for the Askey-Wilson
/// function transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiveTuple<T: QScalar> {
    pub q: T,
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub t: T,
}

/// Outcome of the parameter-condition check for a [`FiveTuple`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub pass: bool,
    pub violations: Vec<String>,
}

impl<T: QScalar> FiveTuple<T> {
    pub fn new(q: T, a: T, b: T, c: T, d: T, t: T) -> Result<Self> {
        if !(q > T::zero() && q < T::one()) {
            return Err(Error::InvalidParameter(format!("q must lie in (0,1), got {q:?}")));
        }
        for (name, v) in [("a", a), ("b", b), ("c", c), ("d", d), ("t", t)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("parameter {name} is not finite")));
            }
        }
        Ok(Self { q, a, b, c, d, t })
    }

    pub fn quad(&self) -> ParamQuad<T> {
        ParamQuad { q: self.q, a: re(self.a), b: re(self.b), c: re(self.c), d: re(self.d) }
    }

    /// Dual five-tuple `(alpha~, t~)` with `t~ = 1/(adt)`.
    pub fn dual(&self) -> Result<Self> {
        let quad = self.quad().dual()?;
        let adt = self.a * self.d * self.t;
        if adt == T::zero() {
            return Err(Error::DegenerateParameters("adt = 0 has no dual t".into()));
        }
        for (name, v) in [("a~", quad.a), ("b~", quad.b), ("c~", quad.c), ("d~", quad.d)] {
            if v.im.abs() > lit::<T>(1e-12) * v.norm() {
                return Err(Error::DegenerateParameters(format!(
                    "dual parameter {name} is not real; abcd/q must be positive"
                )));
            }
        }
        Self::new(self.q, quad.a.re, quad.b.re, quad.c.re, quad.d.re, T::one() / adt)
    }

    /// Evaluates the six admissibility inequalities:
    /// `t < 0`, `0 < b,c <= a < d/q`, `bd >= q`, `cd >= q`, `ab < 1`,
    /// `ac < 1`.
    pub fn check_conditions(&self) -> ConditionReport {
        let mut violations = Vec::new();
        let q = self.q;
        if !(self.t < T::zero()) {
            violations.push("t<0".to_string());
        }
        if !(T::zero() < self.b && T::zero() < self.c
            && self.b <= self.a
            && self.c <= self.a
            && self.a < self.d / q)
        {
            violations.push("0<b,c<=a<d/q".to_string());
        }
        if !(self.b * self.d >= q) {
            violations.push("bd>=q".to_string());
        }
        if !(self.c * self.d >= q) {
            violations.push("cd>=q".to_string());
        }
        if !(self.a * self.b < T::one()) {
            violations.push("ab<1".to_string());
        }
        if !(self.a * self.c < T::one()) {
            violations.push("ac<1".to_string());
        }
        ConditionReport { pass: violations.is_empty(), violations }
    }

    /// Errors unless the tuple satisfies the admissibility conditions.
    pub fn require_conditions(&self) -> Result<()> {
        let rep = self.check_conditions();
        if rep.pass {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "five-tuple violates conditions: {}",
                rep.violations.join(", ")
            )))
        }
    }
}

/// Relative tolerance under which a point is considered to sit on a pole.
fn pole_eps<T: QScalar>() -> T {
    lit(1e-11)
}

/// Checks whether `x` or `1/x` lies on the geometric ladder `base * q^k`
/// (`k >= 0`), within the relative gap `eps`; ladders with `|base| = 0`
/// are empty.
pub(crate) fn on_ladder<T: QScalar>(x: Cx<T>, base: Cx<T>, q: T, eps: T) -> bool {
    let bn = base.norm();
    if bn == T::zero() {
        return false;
    }
    for x_or_inv in [x, Cx::new(T::one(), T::zero()) / x] {
        // candidate index from moduli; check the two nearest rungs
        let ratio = x_or_inv.norm() / bn;
        if ratio > T::one() + eps {
            continue;
        }
        let k_est = (ratio.ln() / q.ln()).round();
        let lo = if k_est < T::one() { 0 } else { k_est.to_f64().unwrap_or(0.0) as i64 as usize };
        for k in lo.saturating_sub(1)..=lo + 1 {
            let rung = base * q.powi(k as i32);
            if (x_or_inv - rung).norm() <= eps * rung.norm() {
                return true;
            }
        }
    }
    false
}

/// Askey-Wilson polynomial `E_{s_m}(x)`, normalized so `E(a) = 1`.
///
/// Evaluated by the three-term recurrence in the degree obtained from
/// duality; this path is uniformly stable in `m`, unlike the terminating
/// series form (see [`aw_poly_series`]), whose terms reach size
/// `q^{-m(m-1)/2}` and cancel catastrophically in fixed precision.
pub fn aw_poly<T: QScalar>(alpha: &ParamQuad<T>, m: usize, x: Cx<T>) -> Result<Cx<T>> {
    let one = Cx::new(T::one(), T::zero());
    if x.norm() == T::zero() {
        return Err(Error::InvalidParameter("aw_poly needs x != 0".into()));
    }
    if m == 0 {
        return Ok(one);
    }
    let q = alpha.q;
    let dual = alpha.dual()?;
    // recurrence coefficients are the dual C-function at s_j and 1/s_j
    let cfun = |y: Cx<T>| -> Result<Cx<T>> {
        let den = (one - y * y) * (one - y * y * q);
        if den.norm() <= T::epsilon() * lit(64.0) * (T::one() + y.norm() * y.norm()) {
            return Err(Error::DegenerateDenominator(
                "dual C-function pole in the degree recurrence".into(),
            ));
        }
        Ok((one - dual.a * y) * (one - dual.b * y) * (one - dual.c * y) * (one - dual.d * y) / den)
    };
    // mu(x) with respect to dual parameters: -1 - a^2 + a(x + 1/x); the
    // double dual of `a` is `a` itself on the admissible branch.
    let a = alpha.a;
    let mu = -one - a * a + a * (x + one / x);
    let s0 = dual.a;
    let a0 = cfun(s0)?;
    if a0.norm() == T::zero() {
        return Err(Error::DegenerateDenominator("C~(s_0) = 0".into()));
    }
    let mut em1 = one;
    let mut em = one + mu / a0;
    for j in 1..m {
        let sj = dual.a * q.powi(j as i32);
        let fwd = cfun(sj)?;
        let bwd = cfun(one / sj)?;
        if fwd.norm() == T::zero() {
            return Err(Error::DegenerateDenominator(format!("C~(s_{j}) = 0")));
        }
        let next = ((mu + fwd + bwd) * em - bwd * em1) / fwd;
        em1 = em;
        em = next;
    }
    if !em.re.is_finite() || !em.im.is_finite() {
        return Err(Error::NonFinite("aw_poly"));
    }
    Ok(em)
}

/// Askey-Wilson polynomial through its terminating balanced 4phi3 series.
///
/// Matches the defining presentation term by term, but the terms grow like
/// `q^{-m(m-1)/2}` before cancelling, so in fixed precision this is only
/// accurate for small degrees. It serves as the independent cross-check of
/// [`aw_poly`].
pub fn aw_poly_series<T: QScalar>(
    alpha: &ParamQuad<T>,
    m: usize,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let q = alpha.q;
    let abcd = alpha.abcd();
    let nums = [
        re::<T>(q.powi(-(m as i32))),
        abcd * q.powi(m as i32 - 1),
        alpha.a * x,
        alpha.a / x,
    ];
    let dens = [alpha.a * alpha.b, alpha.a * alpha.c, alpha.a * alpha.d];
    crate::qseries::phi_rs(&nums, &dens, q, re(q), policy)
}

/// Eigenvalue `mu(gamma) = -1 - a~^2 + a~ (gamma + 1/gamma)` of the
/// Askey-Wilson operator.
pub fn eigenvalue_mu<T: QScalar>(alpha: &ParamQuad<T>, gamma: Cx<T>) -> Result<Cx<T>> {
    if gamma.norm() == T::zero() {
        return Err(Error::InvalidParameter("mu needs gamma != 0".into()));
    }
    let one = Cx::new(T::one(), T::zero());
    let at = alpha.dual()?.a;
    Ok(-one - at * at + at * (gamma + one / gamma))
}

/// Coefficient `C(x)` of the Askey-Wilson operator.
pub fn aw_coefficient_c<T: QScalar>(alpha: &ParamQuad<T>, x: Cx<T>) -> Result<Cx<T>> {
    let one = Cx::new(T::one(), T::zero());
    let x2 = x * x;
    let den = (one - x2) * (one - x2 * alpha.q);
    if den.norm() <= pole_eps::<T>() * (T::one() + x2.norm()) * (T::one() + x2.norm()) {
        return Err(Error::PoleAtNode(format!("C(x) pole near x = {x:?}")));
    }
    Ok((one - alpha.a * x) * (one - alpha.b * x) * (one - alpha.c * x) * (one - alpha.d * x) / den)
}

/// Applies the Askey-Wilson second-order q-difference operator `L` to an
/// inversion-invariant function at `x`:
/// `C(x)(f(qx) - f(x)) + C(1/x)(f(x/q) - f(x))`.
pub fn aw_operator_apply<T: QScalar>(
    alpha: &ParamQuad<T>,
    f: &dyn crate::transforms::SymmetricFn<T>,
    x: Cx<T>,
) -> Result<Cx<T>> {
    let one = Cx::new(T::one(), T::zero());
    let cf = aw_coefficient_c(alpha, x)?;
    let cb = aw_coefficient_c(alpha, one / x)?;
    let fx = f.eval(x)?;
    let fq = f.eval(x * alpha.q)?;
    let fb = f.eval(x / alpha.q)?;
    Ok(cf * (fq - fx) + cb * (fb - fx))
}

/// Askey-Wilson weight
/// `Delta(x) = (x^2, 1/x^2;q)_inf / prod_e (ex, e/x;q)_inf`.
pub fn weight_delta<T: QScalar>(
    alpha: &ParamQuad<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    if x.norm() == T::zero() {
        return Err(Error::InvalidParameter("Delta needs x != 0".into()));
    }
    let one = Cx::new(T::one(), T::zero());
    let q = alpha.q;
    let num = qpoch_inf_impl(x * x, q, policy).0 * qpoch_inf_impl(one / (x * x), q, policy).0;
    let mut den = one;
    for e in alpha.params() {
        for arg in [e * x, e / x] {
            let (v, min_f) = qpoch_inf_impl(arg, q, policy);
            if min_f < pole_eps::<T>() {
                return Err(Error::PoleAtNode(format!("Delta pole at x = {x:?}")));
            }
            den = den * v;
        }
    }
    Ok(num / den)
}

/// Askey-Wilson integral
/// `N = (abcd;q)_inf / (q, ab, ac, ad, bc, bd, cd;q)_inf`.
pub fn aw_norm_n<T: QScalar>(alpha: &ParamQuad<T>, policy: &TruncationPolicy<T>) -> Result<Cx<T>> {
    let q = alpha.q;
    let [a, b, c, d] = alpha.params();
    let num = qpoch_inf_impl(alpha.abcd(), q, policy).0;
    let mut den = qpoch_inf_impl(re(q), q, policy).0;
    for p in [a * b, a * c, a * d, b * c, b * d, c * d] {
        let (v, min_f) = qpoch_inf_impl(p, q, policy);
        if min_f < pole_eps::<T>() {
            return Err(Error::DegenerateParameters(
                "pairwise parameter product on q^{-Z+}".into(),
            ));
        }
        den = den * v;
    }
    Ok(num / den)
}

/// Inverse quadratic norm
/// `h~(s_m) = [(1-q^{2m-1}abcd)(q^{-1}abcd, ab, ac, ad;q)_m]
///            / [(1-q^{-1}abcd)(q, bc, bd, cd;q)_m] * a^{-2m}`.
pub fn h_tilde<T: QScalar>(alpha: &ParamQuad<T>, m: usize) -> Result<Cx<T>> {
    let one = Cx::new(T::one(), T::zero());
    let q = alpha.q;
    let [a, b, c, d] = alpha.params();
    let abcd = alpha.abcd();
    if a.norm() == T::zero() {
        return Err(Error::DegenerateDenominator("h~ needs a != 0".into()));
    }
    let lead_den = one - abcd / q;
    if lead_den.norm() <= T::epsilon() * lit(64.0) * (T::one() + abcd.norm()) {
        return Err(Error::DegenerateDenominator("1 - abcd/q = 0".into()));
    }
    let num = (one - abcd * q.powi(2 * m as i32 - 1))
        * qpoch_finite(abcd / q, q, m)
        * qpoch_finite(a * b, q, m)
        * qpoch_finite(a * c, q, m)
        * qpoch_finite(a * d, q, m);
    let den = lead_den
        * qpoch_finite(re(q), q, m)
        * qpoch_finite(b * c, q, m)
        * qpoch_finite(b * d, q, m)
        * qpoch_finite(c * d, q, m);
    if den.norm() == T::zero() {
        return Err(Error::DegenerateDenominator("vanishing factor in h~".into()));
    }
    let apow = a.powi(-2 * (m as i32));
    Ok(num / den * apow)
}

/// Gaussian `G(x) = 1 / (dx, d/x;q)_inf`.
pub fn gaussian_g<T: QScalar>(
    alpha: &ParamQuad<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let v = gaussian_g_inv(alpha, x, policy)?;
    if v.norm() == T::zero() {
        return Err(Error::PoleAtNode(format!("Gaussian pole at x = {x:?}")));
    }
    let (num, min_f) = (Cx::new(T::one(), T::zero()), v.norm() / (T::one() + v.norm()));
    let _ = (num, min_f);
    Ok(Cx::new(T::one(), T::zero()) / v)
}

/// Inverse Gaussian `G(x)^{-1} = (dx, d/x;q)_inf`, valid everywhere
/// (vanishes where the Gaussian has poles).
pub fn gaussian_g_inv<T: QScalar>(
    alpha: &ParamQuad<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    if x.norm() == T::zero() {
        return Err(Error::InvalidParameter("Gaussian needs x != 0".into()));
    }
    let q = alpha.q;
    Ok(qpoch_inf_impl(alpha.d * x, q, policy).0 * qpoch_inf_impl(alpha.d / x, q, policy).0)
}

/// Quasi-constant `Theta(x) = theta(dx, d/x) / theta(dtx, dt/x)`; invariant
/// under `x -> qx` and `x -> 1/x`.
pub fn quasiconstant_theta<T: QScalar>(
    beta: &FiveTuple<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    if x.norm() == T::zero() {
        return Err(Error::InvalidParameter("quasi-constant needs x != 0".into()));
    }
    let q = beta.q;
    let d = re::<T>(beta.d);
    let dt = re::<T>(beta.d * beta.t);
    let num = theta(d * x, q, policy)? * theta(d / x, q, policy)?;
    let den = theta(dt * x, q, policy)? * theta(dt / x, q, policy)?;
    if den.norm() == T::zero() {
        return Err(Error::PoleAtNode(format!("quasi-constant pole at x = {x:?}")));
    }
    Ok(num / den)
}

/// Inverse quasi-constant `Theta(x)^{-1} = theta(dtx, dt/x) / theta(dx, d/x)`,
/// the form that vanishes on the discrete set `D_-`.
pub fn quasiconstant_theta_inv<T: QScalar>(
    beta: &FiveTuple<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    if x.norm() == T::zero() {
        return Err(Error::InvalidParameter("quasi-constant needs x != 0".into()));
    }
    let q = beta.q;
    let d = re::<T>(beta.d);
    let dt = re::<T>(beta.d * beta.t);
    let num = theta(dt * x, q, policy)? * theta(dt / x, q, policy)?;
    let den = theta(d * x, q, policy)? * theta(d / x, q, policy)?;
    if den.norm() == T::zero() {
        return Err(Error::PoleAtNode(format!(
            "theta(dx, d/x) vanishes at x = {x:?}"
        )));
    }
    Ok(num / den)
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

    fn generic_quad() -> ParamQuad<f64> {
        ParamQuad::new(0.5, cx(0.8, 0.0), cx(0.6, 0.0), cx(-0.4, 0.1), cx(0.9, 0.0)).unwrap()
    }

    #[test]
    fn sigma_is_an_involution() {
        let q = generic_quad();
        let back = q.dual().unwrap().dual().unwrap();
        for (x, y) in q.params().iter().zip(back.params().iter()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn tau_is_an_involution() {
        let q = generic_quad();
        let back = q.tau().unwrap().tau().unwrap();
        for (x, y) in q.params().iter().zip(back.params().iter()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn sts_equals_tst() {
        use Involution::*;
        let q = generic_quad();
        let sts = q.apply_word(&[Sigma, Tau, Sigma]).unwrap();
        let tst = q.apply_word(&[Tau, Sigma, Tau]).unwrap();
        for (x, y) in sts.params().iter().zip(tst.params().iter()) {
            assert!((x - y).norm() < 1e-14, "{x} vs {y}");
        }
    }

    #[test]
    fn empty_word_is_identity() {
        let q = generic_quad();
        let w = q.apply_word(&[]).unwrap();
        assert_eq!(q.params(), w.params());
    }

    #[test]
    fn branch_violation_reports_failing_prefix() {
        use Involution::*;
        let q = ParamQuad::new(0.5, cx(-0.8, 0.0), cx(0.6, 0.0), cx(0.4, 0.0), cx(0.9, 0.0)).unwrap();
        match q.apply_word(&[Tau, Sigma]) {
            Err(Error::BranchViolation { prefix }) => assert_eq!(prefix, vec![Tau, Sigma]),
            other => panic!("expected branch violation, got {other:?}"),
        }
    }

    #[test]
    fn dual_products_match_originals() {
        // a~ e~ = a e for e in {b, c, d}
        let q = generic_quad();
        let d = q.dual().unwrap();
        assert_close(d.a * d.b, q.a * q.b, 1e-15);
        assert_close(d.a * d.c, q.a * q.c, 1e-15);
        assert_close(d.a * d.d, q.a * q.d, 1e-15);
    }

    #[test]
    fn spectral_point_of_tau_word() {
        // s_m^tau = s_m^{sigma tau} = q^m sqrt(abc/d)
        use Involution::*;
        let q = ParamQuad::from_reals(0.5, 0.8, 0.6, 0.5, 1.6).unwrap();
        let m = 3usize;
        let st = q.apply_word(&[Sigma, Tau]).unwrap();
        let tq = q.tau().unwrap();
        let expect = (q.a * q.b * q.c / q.d).sqrt() * 0.5f64.powi(3);
        assert_close(tq.spectral(m).unwrap().value, expect, 1e-14);
        assert_close(st.spectral(m).unwrap().value, expect, 1e-14);
    }

    #[test]
    fn five_tuple_conditions_pass_and_dual_passes() {
        let b: FiveTuple<f64> = FiveTuple::new(0.4, 0.9, 0.5, 0.5, 2.0, -0.8).unwrap();
        assert!(b.check_conditions().pass);
        let bd = b.dual().unwrap();
        assert!(bd.check_conditions().pass);
        // involution
        let back = bd.dual().unwrap();
        for (x, y) in [
            (back.a, b.a),
            (back.b, b.b),
            (back.c, b.c),
            (back.d, b.d),
            (back.t, b.t),
        ] {
            let diff = (x - y).abs();
            assert!(diff < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn five_tuple_positive_t_fails_with_tag() {
        let b: FiveTuple<f64> = FiveTuple::new(0.4, 0.9, 0.5, 0.5, 2.0, 0.8).unwrap();
        let rep = b.check_conditions();
        assert!(!rep.pass);
        assert!(rep.violations.contains(&"t<0".to_string()));
    }

    #[test]
    fn aw_poly_degree_zero_is_one() {
        let q = generic_quad();
        assert_eq!(aw_poly(&q, 0, cx(0.3, 0.8)).unwrap(), C::new(1.0, 0.0));
    }

    #[test]
    fn aw_poly_is_inversion_invariant() {
        let q = ParamQuad::from_reals(0.5, 0.75, 0.5, -0.3, -0.6).unwrap();
        let x = cx(0.62, 0.53);
        for m in [1usize, 4, 9] {
            let v = aw_poly(&q, m, x).unwrap();
            let w = aw_poly(&q, m, 1.0 / x).unwrap();
            assert_close(v, w, 1e-12);
        }
    }

    #[test]
    fn aw_poly_matches_series_at_small_degree() {
        let q = ParamQuad::from_reals(0.5, 0.75, 0.5, -0.3, -0.6).unwrap();
        let x = cx(0.3, 0.9);
        for m in 0..=5 {
            let rec = aw_poly(&q, m, x).unwrap();
            let ser = aw_poly_series(&q, m, x, &pol()).unwrap();
            assert_close(rec, ser, 1e-11);
        }
    }

    #[test]
    fn aw_poly_is_normalized_at_a() {
        let q = ParamQuad::from_reals(0.5, 0.75, 0.5, -0.3, -0.6).unwrap();
        for m in [1usize, 3, 7] {
            assert_close(aw_poly(&q, m, q.a).unwrap(), C::new(1.0, 0.0), 1e-11);
        }
    }

    #[test]
    fn duality_of_polynomials() {
        // E_s(v) = E~_v(s) for s in S, v in S~
        let q = ParamQuad::from_reals(0.5, 0.75, 0.5, -0.3, -0.6).unwrap();
        let dual = q.dual().unwrap();
        for (m, n) in [(0usize, 2usize), (1, 1), (3, 1), (5, 4)] {
            let s = q.spectral(m).unwrap().value;
            let v = dual.spectral(n).unwrap().value;
            let lhs = aw_poly(&q, m, v).unwrap();
            let rhs = aw_poly(&dual, n, s).unwrap();
            assert_close(lhs, rhs, 1e-11);
        }
    }

    #[test]
    fn operator_annihilates_constants() {
        let q = generic_quad();
        let f = |_x: C| -> crate::Result<C> { Ok(C::new(1.0, 0.0)) };
        let v = aw_operator_apply(&q, &f, cx(0.4, 0.7)).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn operator_eigen_equation_on_polynomials() {
        let quad = ParamQuad::from_reals(0.5, 0.75, 0.5, -0.3, -0.6).unwrap();
        let x = cx(0.9, 0.4);
        for m in [1usize, 3, 6] {
            let f = move |y: C| aw_poly(&quad, m, y);
            let lhs = aw_operator_apply(&quad, &f, x).unwrap();
            let s = quad.spectral(m).unwrap().value;
            let mu = eigenvalue_mu(&quad, s).unwrap();
            let rhs = mu * aw_poly(&quad, m, x).unwrap();
            let scale = 1.0 + rhs.norm();
            assert!(
                (lhs - rhs).norm() <= 1e-11 * scale,
                "m={m}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn operator_rejects_pole_nodes() {
        let q = generic_quad();
        let f = |_x: C| -> crate::Result<C> { Ok(C::new(1.0, 0.0)) };
        for x in [cx(1.0, 0.0), cx(-1.0, 0.0), cx(0.5f64.sqrt(), 0.0), cx(1.0 / 0.5f64.sqrt(), 0.0)] {
            assert!(matches!(
                aw_operator_apply(&q, &f, x),
                Err(Error::PoleAtNode(_))
            ));
        }
    }

    #[test]
    fn eigenvalue_at_unit_gamma() {
        let q = generic_quad();
        let at = q.dual().unwrap().a;
        let v = eigenvalue_mu(&q, C::new(1.0, 0.0)).unwrap();
        let expect = -(C::new(1.0, 0.0) - at) * (C::new(1.0, 0.0) - at);
        assert_close(v, expect, 1e-14);
        // mu(gamma) = mu(1/gamma)
        let g = cx(0.7, 0.3);
        assert_close(
            eigenvalue_mu(&q, g).unwrap(),
            eigenvalue_mu(&q, 1.0 / g).unwrap(),
            1e-14,
        );
    }

    #[test]
    fn delta_is_inversion_invariant_and_vanishes_at_unit_points() {
        let q = ParamQuad::from_reals(0.5, 0.8, 0.6, -0.4, -0.55).unwrap();
        let x = cx(0.3, 0.8);
        let pol = pol();
        assert_close(
            weight_delta(&q, x, &pol).unwrap(),
            weight_delta(&q, 1.0 / x, &pol).unwrap(),
            1e-12,
        );
        for x in [cx(1.0, 0.0), cx(-1.0, 0.0)] {
            assert!(weight_delta(&q, x, &pol).unwrap().norm() < 1e-13);
        }
    }

    #[test]
    fn delta_matches_factor_by_factor_oracle() {
        use crate::qseries::qpoch_inf;
        let q = ParamQuad::from_reals(0.5, 0.75, 0.5, -0.3, -0.6).unwrap();
        let pol = pol();
        let x = cx(0.0, 1.0); // x = i
        let mut oracle = qpoch_inf(x * x, q.q, &pol) * qpoch_inf(1.0 / (x * x), q.q, &pol);
        for e in q.params() {
            oracle /= qpoch_inf(e * x, q.q, &pol) * qpoch_inf(e / x, q.q, &pol);
        }
        assert_close(weight_delta(&q, x, &pol).unwrap(), oracle, 1e-13);
    }

    #[test]
    fn norm_n_is_symmetric_and_degenerates_cleanly() {
        let pol = pol();
        let q1 = ParamQuad::from_reals(0.5, 0.8, 0.6, -0.4, -0.55).unwrap();
        let q2 = ParamQuad::from_reals(0.5, -0.4, 0.8, -0.55, 0.6).unwrap();
        assert_close(aw_norm_n(&q1, &pol).unwrap(), aw_norm_n(&q2, &pol).unwrap(), 1e-13);
        // a = 0 drops every a-factor
        let q0 = ParamQuad::from_reals(0.5, 0.0, 0.6, -0.4, -0.55).unwrap();
        let v = aw_norm_n(&q0, &pol).unwrap();
        use crate::qseries::qpoch_inf;
        let b: C = cx(0.6, 0.0);
        let c: C = cx(-0.4, 0.0);
        let d: C = cx(-0.55, 0.0);
        let expect = 1.0
            / (qpoch_inf(cx(0.5, 0.0), 0.5, &pol)
                * qpoch_inf(b * c, 0.5, &pol)
                * qpoch_inf(b * d, 0.5, &pol)
                * qpoch_inf(c * d, 0.5, &pol));
        assert_close(v, expect, 1e-13);
    }

    #[test]
    fn h_tilde_base_case_and_positivity() {
        let q = ParamQuad::from_reals(0.5, 0.75, 0.5, -0.3, -0.6).unwrap();
        assert_eq!(h_tilde(&q, 0).unwrap(), C::new(1.0, 0.0));
        for m in 1..=10 {
            let v = h_tilde(&q, m).unwrap();
            assert!(v.im.abs() < 1e-14_f64 && v.re > 0.0, "h~({m}) = {v}");
        }
    }

    #[test]
    fn gaussian_symmetry_and_tau_form() {
        let q = ParamQuad::from_reals(0.5, 0.8, 0.6, 0.5, 1.6).unwrap();
        let pol = pol();
        let x = cx(0.4, 0.7);
        assert_close(
            gaussian_g(&q, x, &pol).unwrap(),
            gaussian_g(&q, 1.0 / x, &pol).unwrap(),
            1e-13,
        );
        // G^tau(x) = 1/(qx/d, q/(dx); q)_inf
        use crate::qseries::qpoch_inf;
        let gt = gaussian_g(&q.tau().unwrap(), x, &pol).unwrap();
        let expect = 1.0
            / (qpoch_inf(x * 0.5 / q.d, 0.5, &pol) * qpoch_inf(cx::<f64>(0.5, 0.0) / (q.d * x), 0.5, &pol));
        assert_close(gt, expect, 1e-13);
    }

    #[test]
    fn gaussian_tau_decay_matches_product_oracle() {
        // |G^tau(q^{-k} u)| follows the long-product evaluation
        use crate::qseries::qpoch_inf;
        let q = ParamQuad::from_reals(0.4, 0.9, 0.5, 0.5, 2.0).unwrap();
        let pol = pol();
        let u = cx(0.7, 0.2);
        let mut norms = Vec::new();
        for k in 4i32..=12 {
            let x = u * 0.4f64.powi(-k);
            let gt = gaussian_g(&q.tau().unwrap(), x, &pol).unwrap();
            let oracle =
                1.0 / (qpoch_inf(x * 0.4 / 2.0, 0.4, &pol) * qpoch_inf(cx::<f64>(0.4 / 2.0, 0.0) / x, 0.4, &pol));
            assert_close(gt, oracle, 1e-12);
            norms.push(gt.norm());
        }
        // super-geometric: each step shrinks by an extra factor of ~q
        for w in norms.windows(3) {
            let r1 = w[1] / w[0];
            let r2 = w[2] / w[1];
            assert!(r2 < r1 * 0.5, "step ratios {r1:e} -> {r2:e} not tightening");
        }
    }

    #[test]
    fn quasiconstant_is_q_periodic_and_symmetric() {
        let b = FiveTuple::new(0.4, 0.9, 0.5, 0.5, 2.0, -0.8).unwrap();
        let pol = pol();
        let x = cx(0.35, 0.75);
        let v = quasiconstant_theta(&b, x, &pol).unwrap();
        assert_close(v, quasiconstant_theta(&b, 1.0 / x, &pol).unwrap(), 1e-12);
        assert_close(v, quasiconstant_theta(&b, x * 0.4, &pol).unwrap(), 1e-11);
    }

    #[test]
    fn quasiconstant_vanishing_and_poles() {
        let b = FiveTuple::new(0.4, 0.9, 0.5, 0.5, 2.0, -0.8).unwrap();
        let pol = pol();
        // Theta vanishes at x = d q^j
        for j in [-1i32, 0, 2] {
            let x = cx(2.0 * 0.4f64.powi(j), 0.0);
            let v = quasiconstant_theta(&b, x, &pol).unwrap();
            assert!(v.norm() < 1e-11, "Theta({x}) = {v}");
        }
        // and has poles where theta(dtx, dt/x) vanishes: x = dt q^j
        let xp = cx(-1.6 * 0.4, 0.0);
        assert!(matches!(
            quasiconstant_theta(&b, xp, &pol),
            Err(Error::PoleAtNode(_))
        ));
    }

    #[test]
    fn h_tilde_degenerate_abcd_rejected() {
        // abcd = q makes 1 - abcd/q vanish
        let q = ParamQuad::from_reals(0.5, 0.8, 0.5, 0.5, 2.5).unwrap();
        assert!(matches!(h_tilde(&q, 2), Err(Error::DegenerateDenominator(_))));
    }
}
