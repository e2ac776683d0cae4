//! The one-variable q-Macdonald-Mehta integral and the two direct proofs
//! of its evaluation, replayed numerically step by step.

use crate::error::{Error, Result, Tail};
use crate::policy::TruncationPolicy;
use crate::qseries::{phi_rs, psi_rs, qpoch_inf, qpoch_inf_impl, qpoch_inf_skip, theta, theta_multi};
use crate::scalar::{lit, re, rel_err, Cx, QScalar};
use crate::transforms::{circle_quadrature, residue_deflated, SymmetricFn};

/// The integrand of the q-Macdonald-Mehta integral (without the `1/x` of
/// the contour measure):
/// `(x^2,1/x^2;q)_inf / [(ax,a/x,bx,b/x,cx,c/x;q)_inf theta(ux,u/x)]`.
fn mm_weight<T: QScalar>(
    a: Cx<T>,
    b: Cx<T>,
    c: Cx<T>,
    u: Cx<T>,
    q: T,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let one = Cx::new(T::one(), T::zero());
    let num = qpoch_inf(x * x, q, policy) * qpoch_inf(one / (x * x), q, policy);
    let mut den = one;
    for e in [a, b, c] {
        for arg in [e * x, e / x] {
            let (v, min_f) = qpoch_inf_impl(arg, q, policy);
            if min_f < lit(1e-11) {
                return Err(Error::PoleAtNode(format!("MM integrand pole at {x:?}")));
            }
            den = den * v;
        }
    }
    let th = theta_multi(&[u * x, u / x], q, policy)?;
    if th.norm() == T::zero() {
        return Err(Error::PoleAtNode(format!("theta(ux, u/x) vanishes at {x:?}")));
    }
    Ok(num / (den * th))
}

/// Deflated MM integrand at the pole `x0 = u q^{-k}` (`k >= 1`), in the
/// contract form `g(y) / ((1 - x0/y) y)`.
struct DeflatedMm<T: QScalar> {
    a: Cx<T>,
    b: Cx<T>,
    c: Cx<T>,
    u: Cx<T>,
    q: T,
    k: usize,
    policy: TruncationPolicy<T>,
}

impl<T: QScalar> SymmetricFn<T> for DeflatedMm<T> {
    fn eval(&self, y: Cx<T>) -> Result<Cx<T>> {
        use crate::qseries::{qpoch_inf_scaled, qpoch_inf_skip_scaled, theta_scaled};
        let q = self.q;
        let pol = &self.policy;
        let one = Cx::new(T::one(), T::zero());
        let x0 = self.u * re::<T>(q.powi(-(self.k as i32)));
        // the partial products individually overflow the plain range at
        // deep poles, so the whole ratio is accumulated in scaled form
        let mut acc = qpoch_inf_scaled(y * y, q, pol);
        acc.mul_scaled(&qpoch_inf_scaled(one / (y * y), q, pol));
        for e in [self.a, self.b, self.c] {
            acc.div_scaled(&qpoch_inf_scaled(e * y, q, pol));
            acc.div_scaled(&qpoch_inf_scaled(e / y, q, pol));
        }
        // theta(u/y) = (u/y;q)_inf (qy/u;q)_inf vanishes at y = u q^{-k}
        // through factor k-1 of the second product, a (1 - y/x0) zero
        acc.div_scaled(&theta_scaled(self.u * y, q, pol)?);
        acc.div_scaled(&qpoch_inf_scaled(self.u / y, q, pol));
        acc.div_scaled(&qpoch_inf_skip_scaled(re::<T>(q) * y / self.u, q, self.k - 1, pol));
        acc.mul(-x0 / y);
        Ok(acc.value())
    }
}

/// Left-hand side of the q-Macdonald-Mehta evaluation: unit-circle
/// quadrature of the MM integrand plus the certified sum of deflated
/// residues at `x = u q^{-k}` (`k >= 1`).
pub fn mm_lhs<T: QScalar>(
    a: Cx<T>,
    b: Cx<T>,
    c: Cx<T>,
    u: Cx<T>,
    q: T,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let gap = lit::<T>(1e-6);
    let un = u.norm();
    if (un - T::one()).abs() <= gap || (un - q).abs() <= gap {
        return Err(Error::PoleNearContour(gap.to_f64().unwrap_or(f64::NAN)));
    }
    if !(un > q && un < T::one()) {
        return Err(Error::InvalidParameter("mm_lhs needs q < |u| < 1".into()));
    }
    let w = move |x: Cx<T>| mm_weight(a, b, c, u, q, x, policy);
    let one_f = move |_x: Cx<T>| Ok(Cx::new(T::one(), T::zero()));
    let mut total = circle_quadrature(&one_f, &w, policy)?;
    let mut streak = 0usize;
    for k in 1..=policy.max_terms {
        let deflated = DeflatedMm { a, b, c, u, q, k, policy: *policy };
        let x0 = u * re::<T>(q.powi(-(k as i32)));
        let r = residue_deflated(x0, &deflated)?;
        total = total + r;
        if r.norm() < policy.rel_tol * lit::<T>(0.05) * total.norm().max(T::min_positive_value()) {
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

/// Closed form `theta(abcu) / [(q,ab,ac,bc;q)_inf theta(au,bu,cu)]`.
pub fn mm_rhs<T: QScalar>(
    a: Cx<T>,
    b: Cx<T>,
    c: Cx<T>,
    u: Cx<T>,
    q: T,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let qc = re::<T>(q);
    let num = theta(a * b * c * u, q, policy)?;
    let den_poch = qpoch_inf(qc, q, policy)
        * qpoch_inf(a * b, q, policy)
        * qpoch_inf(a * c, q, policy)
        * qpoch_inf(b * c, q, policy);
    let den_theta = theta_multi(&[a * u, b * u, c * u], q, policy)?;
    if den_theta.norm() == T::zero() || den_poch.norm() == T::zero() {
        return Err(Error::PoleAtNode("theta zero in the MM closed form".into()));
    }
    Ok(num / (den_poch * den_theta))
}

/// Per-sub-check outcome of an appendix replay.
#[derive(Clone, Debug)]
pub struct SubCheck {
    pub name: &'static str,
    pub rel_err: f64,
    pub tol: f64,
}

impl SubCheck {
    pub fn ok(&self) -> bool {
        self.rel_err.is_finite() && self.rel_err <= self.tol
    }
}

fn sub<T: QScalar>(name: &'static str, lhs: Cx<T>, rhs: Cx<T>, tol: f64) -> SubCheck {
    SubCheck { name, rel_err: rel_err(lhs, rhs).to_f64().unwrap_or(f64::NAN), tol }
}

/// First direct proof: the circle part `L1` against its 3phi2 product form,
/// the residue part `L2` against its transformed 3phi2 form, and the sum
/// against the closed form. Parameters must satisfy `|abcu| > q` with all
/// four moduli below one.
pub fn verify_appendix_b1<T: QScalar>(
    a: Cx<T>,
    b: Cx<T>,
    c: Cx<T>,
    u: Cx<T>,
    q: T,
    policy: &TruncationPolicy<T>,
) -> Result<Vec<SubCheck>> {
    let qc = re::<T>(q);
    let one = Cx::new(T::one(), T::zero());
    if !((a * b * c * u).norm() > q) {
        return Err(Error::InvalidParameter("appendix B.1 needs |abcu| > q".into()));
    }
    for v in [a, b, c, u] {
        if !(v.norm() < T::one()) {
            return Err(Error::InvalidParameter("appendix B.1 needs moduli < 1".into()));
        }
    }
    // L1 by quadrature
    let w = move |x: Cx<T>| mm_weight(a, b, c, u, q, x, policy);
    let one_f = move |_x: Cx<T>| Ok(one);
    let l1_quad = circle_quadrature(&one_f, &w, policy)?;
    // L1 closed: Nassrallah-Rahman reduction to a 3phi2
    let abcu = a * b * c * u;
    let s1 = phi_rs(&[a * b, a * c, b * c], &[abcu, qc * a * b * c / u], q, qc, policy)?;
    let l1_pref = qpoch_inf(abcu, q, policy) * qpoch_inf(qc * a * b * c / u, q, policy)
        / (qpoch_inf(qc, q, policy)
            * qpoch_inf(a * b, q, policy)
            * qpoch_inf(a * c, q, policy)
            * qpoch_inf(b * c, q, policy)
            * qpoch_inf(a * u, q, policy)
            * qpoch_inf(qc * a / u, q, policy)
            * qpoch_inf(b * u, q, policy)
            * qpoch_inf(qc * b / u, q, policy)
            * qpoch_inf(c * u, q, policy)
            * qpoch_inf(qc * c / u, q, policy));
    let l1_closed = l1_pref * s1;

    // L2 as a certified residue sum
    let mut l2_quad = Cx::new(T::zero(), T::zero());
    let mut streak = 0usize;
    let mut done = false;
    for k in 1..=policy.max_terms {
        let deflated = DeflatedMm { a, b, c, u, q, k, policy: *policy };
        let x0 = u * re::<T>(q.powi(-(k as i32)));
        let r = residue_deflated(x0, &deflated)?;
        l2_quad = l2_quad + r;
        if r.norm()
            < policy.rel_tol * lit::<T>(0.05) * l2_quad.norm().max(T::min_positive_value())
        {
            streak += 1;
            if streak >= 2 {
                done = true;
                break;
            }
        } else {
            streak = 0;
        }
    }
    if !done {
        return Err(Error::NonConvergent { tail: Tail::Upper, max_terms: policy.max_terms });
    }
    // L2 closed form
    let u2q2 = u * u / re::<T>(q * q);
    let s2 = phi_rs(
        &[qc / (a * u), qc / (b * u), qc / (c * u)],
        &[qc * qc / (u * u), qc * qc / abcu],
        q,
        qc,
        policy,
    )?;
    let l2_pref = -(qpoch_inf(qc * qc / abcu, q, policy) * theta(u2q2, q, policy)?)
        / (qpoch_inf(qc, q, policy)
            * qpoch_inf(qc * a / u, q, policy)
            * qpoch_inf(qc * b / u, q, policy)
            * qpoch_inf(qc * c / u, q, policy)
            * qpoch_inf(u * u / q, q, policy)
            * theta_multi(&[a * u / q, b * u / q, c * u / q], q, policy)?);
    let l2_closed = l2_pref * s2;

    let rhs = mm_rhs(a, b, c, u, q, policy)?;
    Ok(vec![
        sub("L1 quadrature vs 3phi2 form", l1_quad, l1_closed, 1e-9),
        sub("L2 residue sum vs 3phi2 form", l2_quad, l2_closed, 1e-9),
        sub("L1+L2 vs closed form", l1_quad + l2_quad, rhs, 1e-10),
    ])
}

/// One parameter-ladder residue sum of the discrete MM form: the certified
/// sum over `k >= 0` of residues at `x = e q^k` (`e` one of `a,b,c`).
fn ladder_residue_sum<T: QScalar>(
    params: [Cx<T>; 3],
    which: usize,
    u: Cx<T>,
    q: T,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let one = Cx::new(T::one(), T::zero());
    let mut total = Cx::new(T::zero(), T::zero());
    let mut streak = 0usize;
    for k in 0..policy.max_terms {
        let e = params[which];
        let x0 = e * re::<T>(q.powi(k as i32));
        let deflated = move |y: Cx<T>| -> Result<Cx<T>> {
            use crate::qseries::{qpoch_inf_scaled, qpoch_inf_skip_scaled, theta_scaled};
            let mut acc = qpoch_inf_scaled(y * y, q, policy);
            acc.mul_scaled(&qpoch_inf_scaled(one / (y * y), q, policy));
            for (i, &p) in params.iter().enumerate() {
                acc.div_scaled(&qpoch_inf_scaled(p * y, q, policy));
                if i == which {
                    acc.div_scaled(&qpoch_inf_skip_scaled(p / y, q, k, policy));
                } else {
                    acc.div_scaled(&qpoch_inf_scaled(p / y, q, policy));
                }
            }
            acc.div_scaled(&theta_scaled(u * y, q, policy)?);
            acc.div_scaled(&theta_scaled(u / y, q, policy)?);
            Ok(acc.value())
        };
        let r = residue_deflated(x0, &deflated)?;
        total = total + r;
        if k >= 1
            && r.norm()
                < policy.rel_tol * lit::<T>(0.05) * total.norm().max(T::min_positive_value())
        {
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

/// The two-sided `u`-ladder residue sum over all integers `k`.
fn u_ladder_residue_sum<T: QScalar>(
    a: Cx<T>,
    b: Cx<T>,
    c: Cx<T>,
    u: Cx<T>,
    q: T,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let one = Cx::new(T::one(), T::zero());
    let qc = re::<T>(q);
    let residue_at = |k: i64| -> Result<Cx<T>> {
        let x0 = u * re::<T>(q.powi(k as i32));
        let deflated = move |y: Cx<T>| -> Result<Cx<T>> {
            use crate::qseries::{qpoch_inf_scaled, qpoch_inf_skip_scaled, theta_scaled};
            let mut acc = qpoch_inf_scaled(y * y, q, policy);
            acc.mul_scaled(&qpoch_inf_scaled(one / (y * y), q, policy));
            for p in [a, b, c] {
                acc.div_scaled(&qpoch_inf_scaled(p * y, q, policy));
                acc.div_scaled(&qpoch_inf_scaled(p / y, q, policy));
            }
            // theta(u/y) carries the pole; the vanishing factor sits in
            // (u/y;q)_inf for k >= 0 and in (qy/u;q)_inf for k < 0
            acc.div_scaled(&theta_scaled(u * y, q, policy)?);
            if k >= 0 {
                acc.div_scaled(&qpoch_inf_skip_scaled(u / y, q, k as usize, policy));
                acc.div_scaled(&qpoch_inf_scaled(qc * y / u, q, policy));
            } else {
                acc.div_scaled(&qpoch_inf_scaled(u / y, q, policy));
                acc.div_scaled(&qpoch_inf_skip_scaled(qc * y / u, q, (-1 - k) as usize, policy));
                acc.mul(-x0 / y);
            }
            Ok(acc.value())
        };
        residue_deflated(x0, &deflated)
    };
    let mut total = Cx::new(T::zero(), T::zero());
    for dir in [1i64, -1] {
        let mut streak = 0usize;
        let mut done = false;
        let mut k = if dir > 0 { 0 } else { -1 };
        for _ in 0..policy.max_terms {
            let r = residue_at(k)?;
            total = total + r;
            if r.norm()
                < policy.rel_tol * lit::<T>(0.05) * total.norm().max(T::min_positive_value())
            {
                streak += 1;
                if streak >= 2 {
                    done = true;
                    break;
                }
            } else {
                streak = 0;
            }
            k += dir;
        }
        if !done {
            return Err(Error::NonConvergent {
                tail: if dir > 0 { Tail::Upper } else { Tail::Lower },
                max_terms: policy.max_terms,
            });
        }
    }
    Ok(total)
}

/// The four-term meromorphic combination `f(chi)` of the second proof,
/// evaluated at `w = e^chi`.
fn b2_f<T: QScalar>(
    a: Cx<T>,
    b: Cx<T>,
    c: Cx<T>,
    w: Cx<T>,
    q: T,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let qc = re::<T>(q);
    let one = Cx::new(T::one(), T::zero());
    let ladder_term = |e: Cx<T>, f1: Cx<T>, f2: Cx<T>| -> Result<Cx<T>> {
        // term for e in {a,b,c} with the other two f1, f2:
        // (q/f1f2;q)_inf / (q, ef1, ef2;q)_inf
        //   * theta(1/e^2) / theta(f1/e, f2/e, e w, w/e)
        let pref = qpoch_inf(qc / (f1 * f2), q, policy)
            / (qpoch_inf(qc, q, policy)
                * qpoch_inf(e * f1, q, policy)
                * qpoch_inf(e * f2, q, policy));
        let num = theta(one / (e * e), q, policy)?;
        let den = theta_multi(&[f1 / e, f2 / e, e * w, w / e], q, policy)?;
        if den.norm() == T::zero() {
            return Err(Error::PoleAtNode("theta pole in f(chi)".into()));
        }
        Ok(pref * num / den)
    };
    let t1 = ladder_term(a, b, c)?;
    let t2 = ladder_term(b, a, c)?;
    let t3 = ladder_term(c, a, b)?;
    let pref4 = qpoch_inf(qc / (a * b), q, policy)
        * qpoch_inf(qc / (a * c), q, policy)
        * qpoch_inf(qc / (b * c), q, policy)
        / qpoch_inf(qc, q, policy);
    let den4 = theta_multi(&[a * w, b * w, c * w, a / w, b / w, c / w], q, policy)?;
    if den4.norm() == T::zero() {
        return Err(Error::PoleAtNode("theta pole in f(chi) fourth term".into()));
    }
    let t4 = pref4 * theta(one / (w * w), q, policy)? / den4;
    Ok(t1 + t2 + t3 + t4)
}

/// `h(chi) = theta(a w, b w, c w) / theta(abc w) * f(chi)`, the elliptic
/// combination that the proof shows is constant.
fn b2_h<T: QScalar>(
    a: Cx<T>,
    b: Cx<T>,
    c: Cx<T>,
    w: Cx<T>,
    q: T,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let num = theta_multi(&[a * w, b * w, c * w], q, policy)?;
    let den = theta(a * b * c * w, q, policy)?;
    if den.norm() == T::zero() {
        return Err(Error::PoleAtNode("theta(abc w) vanishes".into()));
    }
    Ok(num / den * b2_f(a, b, c, w, q, policy)?)
}

/// Second direct proof: ladder sums against their very-well-poised limit
/// forms and theta closed forms, ellipticity (constancy) of `h`, its value
/// at `w = 1/a`, and the final assembly `f(log u)/2 = mm_rhs`.
pub fn verify_appendix_b2<T: QScalar>(
    a: Cx<T>,
    b: Cx<T>,
    c: Cx<T>,
    u: Cx<T>,
    q: T,
    policy: &TruncationPolicy<T>,
) -> Result<Vec<SubCheck>> {
    let qc = re::<T>(q);
    let one = Cx::new(T::one(), T::zero());
    for v in [a, b, c] {
        if !(v.norm() < T::one()) {
            return Err(Error::InvalidParameter("appendix B.2 needs |a|,|b|,|c| < 1".into()));
        }
    }
    if !(u.norm() > q && u.norm() < T::one()) {
        return Err(Error::InvalidParameter("appendix B.2 needs q < |u| < 1".into()));
    }
    let mut checks = Vec::new();
    let params = [a, b, c];
    let names: [&'static str; 3] = [
        "a-ladder residues vs closed form",
        "b-ladder residues vs closed form",
        "c-ladder residues vs closed form",
    ];
    let names_55: [&'static str; 3] = [
        "a-ladder vs 5phi5 limit",
        "b-ladder vs 5phi5 limit",
        "c-ladder vs 5phi5 limit",
    ];
    for which in 0..3 {
        let e = params[which];
        let (f1, f2) = match which {
            0 => (b, c),
            1 => (a, c),
            _ => (a, b),
        };
        let direct = ladder_residue_sum(params, which, u, q, policy)?;
        // 5phi5 limit of Rogers' very-well-poised 6phi5 sum
        let s55 = phi_rs(
            &[e * e, qc * e, -(qc * e), e * f1, e * f2],
            &[e, -e, qc * e / f1, qc * e / f2, Cx::new(T::zero(), T::zero())],
            q,
            qc / (f1 * f2),
            policy,
        )?;
        let pref55 = qpoch_inf(one / (e * e), q, policy)
            / (qpoch_inf(qc, q, policy)
                * qpoch_inf(e * f1, q, policy)
                * qpoch_inf(f1 / e, q, policy)
                * qpoch_inf(e * f2, q, policy)
                * qpoch_inf(f2 / e, q, policy)
                * theta_multi(&[u * e, u / e], q, policy)?);
        let closed = qpoch_inf(qc / (f1 * f2), q, policy)
            / (qpoch_inf(qc, q, policy)
                * qpoch_inf(e * f1, q, policy)
                * qpoch_inf(e * f2, q, policy))
            * theta(one / (e * e), q, policy)?
            / theta_multi(&[f1 / e, f2 / e, e * u, u / e], q, policy)?;
        checks.push(sub(names_55[which], direct, pref55 * s55, 1e-9));
        checks.push(sub(names[which], direct, closed, 1e-9));
    }

    // two-sided u ladder: 5psi6 limit of Bailey's 6psi6 sum
    let u_direct = u_ladder_residue_sum(a, b, c, u, q, policy)?;
    let s56 = psi_rs(
        &[qc / u, -(qc / u), a / u, b / u, c / u],
        &[
            one / u,
            -(one / u),
            qc / (a * u),
            qc / (b * u),
            qc / (c * u),
            Cx::new(T::zero(), T::zero()),
        ],
        q,
        qc / (a * b * c * u),
        policy,
    )?;
    let pref56 = (one - one / (u * u))
        / (qpoch_inf(qc, q, policy)
            * qpoch_inf(qc, q, policy)
            * qpoch_inf(a * u, q, policy)
            * qpoch_inf(b * u, q, policy)
            * qpoch_inf(c * u, q, policy)
            * qpoch_inf(a / u, q, policy)
            * qpoch_inf(b / u, q, policy)
            * qpoch_inf(c / u, q, policy));
    let u_closed = qpoch_inf(qc / (a * b), q, policy)
        * qpoch_inf(qc / (a * c), q, policy)
        * qpoch_inf(qc / (b * c), q, policy)
        / qpoch_inf(qc, q, policy)
        * theta(one / (u * u), q, policy)?
        / theta_multi(&[a * u, b * u, c * u, a / u, b / u, c / u], q, policy)?;
    checks.push(sub("u-ladder vs 5psi6 limit", u_direct, pref56 * s56, 1e-9));
    checks.push(sub("u-ladder vs closed form", u_direct, u_closed, 1e-9));

    // ellipticity: h at six generic points has negligible spread
    let base = u * cx_rot::<T>(0.31);
    let mut hs = Vec::new();
    for j in 0..6 {
        let w = base * cx_rot::<T>(0.41 * j as f64) * re::<T>(lit::<T>(1.0) + lit::<T>(0.07) * T::from_usize(j).unwrap());
        hs.push(b2_h(a, b, c, w, q, policy)?);
    }
    let mut spread = T::zero();
    for i in 0..hs.len() {
        for j in i + 1..hs.len() {
            spread = spread.max(rel_err(hs[i], hs[j]));
        }
    }
    checks.push(SubCheck {
        name: "h constancy spread",
        rel_err: spread.to_f64().unwrap_or(f64::NAN),
        tol: 1e-9,
    });

    // h(-log a) = 2/(q, ab, ac, bc;q)_inf
    let h_at = b2_h(a, b, c, one / a, q, policy)?;
    let target = re::<T>(lit(2.0))
        / (qpoch_inf(qc, q, policy)
            * qpoch_inf(a * b, q, policy)
            * qpoch_inf(a * c, q, policy)
            * qpoch_inf(b * c, q, policy));
    checks.push(sub("h(-log a) closed value", h_at, target, 1e-10));

    // f(log u)/2 = mm_rhs
    let f_at_u = b2_f(a, b, c, u, q, policy)?;
    let rhs = mm_rhs(a, b, c, u, q, policy)?;
    checks.push(sub("f(log u)/2 vs closed form", f_at_u * re::<T>(lit(0.5)), rhs, 1e-10));

    // dversion: the fully discrete form reassembles the analytic LHS
    let ladders = ladder_residue_sum(params, 0, u, q, policy)?
        + ladder_residue_sum(params, 1, u, q, policy)?
        + ladder_residue_sum(params, 2, u, q, policy)?;
    let discrete = (ladders + u_direct) * re::<T>(lit(0.5));
    let lhs = mm_lhs(a, b, c, u, q, policy)?;
    checks.push(sub("discrete form vs contour form", discrete, lhs, 1e-9));

    Ok(checks)
}

fn cx_rot<T: QScalar>(angle: f64) -> Cx<T> {
    Cx::from_polar(T::one(), lit(angle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    fn pol() -> TruncationPolicy<f64> {
        TruncationPolicy::default()
    }

    #[test]
    fn mm_lhs_matches_rhs_reference_draw() {
        let p = pol();
        let (a, b, c, u) = (cx(0.3, 0.0), cx(0.2, 0.0), cx(0.1, 0.0), cx(0.7, 0.0));
        let lhs = mm_lhs(a, b, c, u, 0.5, &p).unwrap();
        let rhs = mm_rhs(a, b, c, u, 0.5, &p).unwrap();
        assert!(rel_err(lhs, rhs) < 1e-11, "{lhs} vs {rhs}");
        // frozen from an independent 30-digit evaluation
        assert!((lhs.re - 5363185826.0371544).abs() / 5363185826.0 < 1e-10);
        assert!(lhs.im.abs() < 1e-4 * lhs.re.abs());
    }

    #[test]
    fn mm_rhs_symmetric_in_abc() {
        let p = pol();
        let q = 0.5;
        let (a, b, c, u) = (cx(0.3, 0.1), cx(0.2, 0.0), cx(-0.4, 0.0), cx(0.7, 0.0));
        let v1 = mm_rhs(a, b, c, u, q, &p).unwrap();
        let v2 = mm_rhs(c, a, b, u, q, &p).unwrap();
        assert!(rel_err(v1, v2) < 1e-13);
    }

    #[test]
    fn mm_lhs_symmetric_in_abc() {
        let p = pol();
        let q = 0.5;
        let (a, b, c, u) = (cx(0.3, 0.0), cx(0.2, 0.0), cx(0.45, 0.0), cx(0.8, 0.0));
        let v1 = mm_lhs(a, b, c, u, q, &p).unwrap();
        let v2 = mm_lhs(b, c, a, u, q, &p).unwrap();
        assert!(rel_err(v1, v2) < 1e-12);
    }

    #[test]
    fn mm_rejects_contour_collisions() {
        let p = pol();
        let r = mm_lhs(cx(0.3, 0.0), cx(0.2, 0.0), cx(0.1, 0.0), cx(0.5 + 1e-8, 0.0), 0.5, &p);
        assert!(matches!(r, Err(Error::PoleNearContour(_))), "{r:?}");
    }

    #[test]
    fn mm_rhs_theta_reflection_bookkeeping() {
        // each of the four theta factors obeys theta(q/x) = theta(x), so
        // the closed form is unchanged when every argument is reflected
        let p = pol();
        let q = 0.5;
        let qc = cx::<f64>(q, 0.0);
        let (a, b, c) = (cx(0.3, 0.0), cx(0.2, 0.0), cx(0.1, 0.0));
        let u = cx(0.7, 0.0);
        let v1 = mm_rhs(a, b, c, u, q, &p).unwrap();
        let refl = theta(qc / (a * b * c * u), q, &p).unwrap()
            / (qpoch_inf(qc, q, &p)
                * qpoch_inf(a * b, q, &p)
                * qpoch_inf(a * c, q, &p)
                * qpoch_inf(b * c, q, &p)
                * theta(qc / (a * u), q, &p).unwrap()
                * theta(qc / (b * u), q, &p).unwrap()
                * theta(qc / (c * u), q, &p).unwrap());
        assert!(rel_err(v1, refl) < 1e-12, "{v1} vs {refl}");
    }

    #[test]
    fn appendix_b1_subchecks_pass() {
        let p = pol();
        let q = 0.5;
        // |abcu| = 0.75*0.85*0.9*0.93 > q
        let (a, b, c, u) = (cx(0.75, 0.0), cx(0.85, 0.0), cx(0.9, 0.0), cx(0.93, 0.0));
        let checks = verify_appendix_b1(a, b, c, u, q, &p).unwrap();
        for ck in &checks {
            assert!(ck.ok(), "{}: {:e} > {:e}", ck.name, ck.rel_err, ck.tol);
        }
    }

    #[test]
    fn appendix_b2_subchecks_pass() {
        let p = pol();
        let q = 0.5;
        let (a, b, c, u) = (cx(0.55, 0.0), cx(0.4, 0.0), cx(0.35, 0.0), cx(0.8, 0.0));
        let checks = verify_appendix_b2(a, b, c, u, q, &p).unwrap();
        for ck in &checks {
            assert!(ck.ok(), "{}: {:e} > {:e}", ck.name, ck.rel_err, ck.tol);
        }
    }
}
