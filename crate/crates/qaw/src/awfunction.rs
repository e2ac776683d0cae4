//! The Askey-Wilson function `phi_gamma(x)` and its analytic part.
//!
//! Two independent series representations are implemented: the
//! very-well-poised 8W7 form (valid for `|q / (d~ gamma)| < 1`) and the sum
//! of two balanced 4phi3 series coming from Bailey's three-term relation,
//! which extends meromorphically to all of `(gamma, x)`. Wherever both
//! converge they are cross-checked against each other.

use crate::awcore::{on_ladder, ParamQuad};
use crate::error::{Error, Result};
use crate::policy::TruncationPolicy;
use crate::qseries::{phi_rs, qpoch_inf_impl, w87};
use crate::scalar::{lit, re, rel_err, Cx, QScalar};

/// Which representation produced an [`AwfValue`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    W87,
    TwoPhi43,
    Both,
}

/// Value of the Askey-Wilson function together with route metadata.
#[derive(Clone, Copy, Debug)]
pub struct AwfValue<T: QScalar> {
    pub value: Cx<T>,
    pub route: Route,
    /// Relative discrepancy between the two routes when both were evaluated.
    pub agreement: Option<T>,
}

/// Maximum acceptable relative disagreement between the two routes.
fn route_tol<T: QScalar>() -> T {
    lit(1e-9)
}

/// Relative distance to a simple pole below which evaluation refuses to
/// proceed rather than extrapolate.
fn near_pole_eps<T: QScalar>() -> T {
    lit(1e-6)
}

fn check_away_from_poles<T: QScalar>(
    alpha: &ParamQuad<T>,
    gamma: Cx<T>,
    x: Cx<T>,
) -> Result<()> {
    if gamma.norm() == T::zero() || x.norm() == T::zero() {
        return Err(Error::InvalidParameter("phi needs gamma, x != 0".into()));
    }
    let q = alpha.q;
    let dual = alpha.dual()?;
    let eps = near_pole_eps::<T>();
    // simple poles at x^{+-1} = q^{1+k}/d and gamma^{+-1} = q^{1+k}/d~,
    // ladders starting at q/d and q/d~
    let pole_base_x = re::<T>(q) / alpha.d;
    let pole_base_g = re::<T>(q) / dual.d;
    if on_ladder(x, pole_base_x, q, eps) {
        return Err(Error::PoleAtNode(format!("x within {eps:?} of q^(1+k)/d")));
    }
    if on_ladder(gamma, pole_base_g, q, eps) {
        return Err(Error::PoleAtNode(format!("gamma within {eps:?} of q^(1+k)/d~")));
    }
    Ok(())
}

struct Pieces<T: QScalar> {
    term1: Cx<T>,
    /// second 4phi3 with the pole-carrying prefactor factored off:
    /// (ax, a/x, a~g, a~/g, qabc/d)_inf / (ab, ac, bc, qa/d, ad/q)_inf * 4phi3
    term2_analytic: Cx<T>,
    /// (qx/d, q/dx, qg/d~, q/(d~ g); q)_inf
    pole_factor: Cx<T>,
}

fn two_phi43_pieces<T: QScalar>(
    alpha: &ParamQuad<T>,
    gamma: Cx<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Pieces<T>> {
    let q = alpha.q;
    let qc = re::<T>(q);
    let dual = alpha.dual()?;
    let (a, b, c, d) = (alpha.a, alpha.b, alpha.c, alpha.d);
    let (at, dt) = (dual.a, dual.d);

    let inf = |v: Cx<T>| qpoch_inf_impl(v, q, policy);
    let guarded = |v: Cx<T>, what: &str| -> Result<Cx<T>> {
        let (val, min_f) = inf(v);
        if min_f < lit(1e-11) {
            return Err(Error::DegenerateParameters(format!(
                "vanishing infinite product {what} in phi prefactor"
            )));
        }
        Ok(val)
    };

    // first balanced 4phi3
    let s1 = phi_rs(&[a * x, a / x, at * gamma, at / gamma], &[a * b, a * c, a * d], q, qc, policy)?;
    let pref1 = inf(qc * a * b * c / d).0
        / (guarded(b * c, "(bc)")?
            * guarded(qc * a / d, "(qa/d)")?
            * guarded(qc * b / d, "(qb/d)")?
            * guarded(qc * c / d, "(qc/d)")?
            * guarded(qc / (a * d), "(q/ad)")?);
    let term1 = pref1 * s1;

    // second balanced 4phi3, with its pole factor kept separate
    let s2 = phi_rs(
        &[qc * x / d, qc / (d * x), qc * gamma / dt, qc / (dt * gamma)],
        &[qc * b / d, qc * c / d, qc * qc / (a * d)],
        q,
        qc,
        policy,
    )?;
    let pref2_analytic = inf(a * x).0 * inf(a / x).0 * inf(at * gamma).0 * inf(at / gamma).0
        * inf(qc * a * b * c / d).0
        / (guarded(a * b, "(ab)")?
            * guarded(a * c, "(ac)")?
            * guarded(b * c, "(bc)")?
            * guarded(qc * a / d, "(qa/d)")?
            * guarded(a * d / q, "(ad/q)")?);
    let pole_factor =
        inf(qc * x / d).0 * inf(qc / (d * x)).0 * inf(qc * gamma / dt).0 * inf(qc / (dt * gamma)).0;
    Ok(Pieces { term1, term2_analytic: pref2_analytic * s2, pole_factor })
}

fn phi_two_phi43<T: QScalar>(
    alpha: &ParamQuad<T>,
    gamma: Cx<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let p = two_phi43_pieces(alpha, gamma, x, policy)?;
    if p.pole_factor.norm() == T::zero() {
        return Err(Error::PoleAtNode("phi pole factor vanished".into()));
    }
    Ok(p.term1 + p.term2_analytic / p.pole_factor)
}

fn phi_w87<T: QScalar>(
    alpha: &ParamQuad<T>,
    gamma: Cx<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    let q = alpha.q;
    let qc = re::<T>(q);
    let dual = alpha.dual()?;
    let (a, b, c, d) = (alpha.a, alpha.b, alpha.c, alpha.d);
    let (at, bt, ct, dt) = (dual.a, dual.b, dual.c, dual.d);
    let inf = |v: Cx<T>| qpoch_inf_impl(v, q, policy).0;
    let pref = inf(qc * a * x * gamma / dt) * inf(qc * a * gamma / (dt * x)) * inf(qc * a * b * c / d)
        / (inf(at * bt * ct * gamma)
            * inf(qc * gamma / dt)
            * inf(qc * x / d)
            * inf(qc / (d * x))
            * inf(b * c)
            * inf(qc * b / d)
            * inf(qc * c / d));
    let series = w87(
        at * bt * ct * gamma / q,
        a * x,
        a / x,
        at * gamma,
        bt * gamma,
        ct * gamma,
        q,
        qc / (dt * gamma),
        policy,
    )?;
    Ok(pref * series)
}

/// Askey-Wilson function `phi_gamma(x)`.
///
/// The two-4phi3 representation is always evaluated; when
/// `|q/(d~ gamma)| < 0.95` the 8W7 representation is evaluated as well and
/// the two must agree to `1e-9` relative, otherwise the call fails with
/// [`Error::RouteDisagreement`].
pub fn awf_phi<T: QScalar>(
    alpha: &ParamQuad<T>,
    gamma: Cx<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<AwfValue<T>> {
    check_away_from_poles(alpha, gamma, x)?;
    let two43 = phi_two_phi43(alpha, gamma, x, policy)?;
    let dual = alpha.dual()?;
    let z = re::<T>(alpha.q) / (dual.d * gamma);
    if z.norm() < lit(0.95) {
        let w = phi_w87(alpha, gamma, x, policy)?;
        let agree = rel_err(two43, w);
        if agree > route_tol::<T>() {
            return Err(Error::RouteDisagreement {
                relerr: agree.to_f64().unwrap_or(f64::NAN),
                tol: route_tol::<T>().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(AwfValue { value: two43, route: Route::Both, agreement: Some(agree) })
    } else {
        Ok(AwfValue { value: two43, route: Route::TwoPhi43, agreement: None })
    }
}

/// Convenience accessor returning only the value of [`awf_phi`].
pub fn awf_phi_value<T: QScalar>(
    alpha: &ParamQuad<T>,
    gamma: Cx<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    check_away_from_poles(alpha, gamma, x)?;
    phi_two_phi43(alpha, gamma, x, policy)
}

/// Analytic part
/// `phi^an_gamma(x) = (qx/d, q/dx, q gamma/d~, q/(d~ gamma); q)_inf
///  * phi_gamma(x)`,
/// computed with the simple-pole factors cancelled before evaluation, so it
/// stays finite at the poles of `phi` itself.
pub fn awf_analytic<T: QScalar>(
    alpha: &ParamQuad<T>,
    gamma: Cx<T>,
    x: Cx<T>,
    policy: &TruncationPolicy<T>,
) -> Result<Cx<T>> {
    if gamma.norm() == T::zero() || x.norm() == T::zero() {
        return Err(Error::InvalidParameter("phi^an needs gamma, x != 0".into()));
    }
    let p = two_phi43_pieces(alpha, gamma, x, policy)?;
    let v = p.pole_factor * p.term1 + p.term2_analytic;
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::NonFinite("awf_analytic"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::awcore::{aw_operator_apply, aw_poly, eigenvalue_mu};
    use crate::qseries::qpoch_inf;
    use crate::scalar::cx;

    type C = Cx<f64>;

    fn pol() -> TruncationPolicy<f64> {
        TruncationPolicy::default()
    }

    fn quad51() -> ParamQuad<f64> {
        ParamQuad::from_reals(0.5, 0.8, 0.6, 0.5, 1.6).unwrap()
    }

    fn assert_close(x: C, y: C, tol: f64) {
        let r = rel_err(x, y);
        assert!(r <= tol, "rel err {r:e} > {tol:e}\n  left: {x}\n right: {y}");
    }

    #[test]
    fn routes_agree_and_report_it() {
        let alpha = quad51();
        let g = cx(1.1, 0.35);
        let x = cx(0.62, 0.53);
        let v = awf_phi(&alpha, g, x, &pol()).unwrap();
        assert_eq!(v.route, Route::Both);
        assert!(v.agreement.unwrap() < 1e-10);
    }

    #[test]
    fn inversion_invariance_in_x_and_gamma() {
        let alpha = quad51();
        let pol = pol();
        let g = cx(1.1, 0.35);
        let x = cx(0.62, 0.53);
        let v = awf_phi_value(&alpha, g, x, &pol).unwrap();
        assert_close(awf_phi_value(&alpha, g, 1.0 / x, &pol).unwrap(), v, 1e-11);
        assert_close(awf_phi_value(&alpha, 1.0 / g, x, &pol).unwrap(), v, 1e-11);
    }

    #[test]
    fn duality_under_dual_parameters() {
        let alpha = quad51();
        let pol = pol();
        let g = cx(1.1, 0.35);
        let x = cx(0.62, 0.53);
        let v = awf_phi_value(&alpha, g, x, &pol).unwrap();
        let dual = alpha.dual().unwrap();
        assert_close(awf_phi_value(&dual, x, g, &pol).unwrap(), v, 1e-11);
    }

    #[test]
    fn polynomial_reduction_at_spectral_points() {
        // phi_s = (qabc/d)_inf / (bc, q/ad, qa/d, qb/d, qc/d)_inf * E_s
        let alpha = quad51();
        let pol = pol();
        let x = cx(0.62, 0.53);
        let q = alpha.q;
        let qc: C = cx(q, 0.0);
        let pref = qpoch_inf(qc * alpha.a * alpha.b * alpha.c / alpha.d, q, &pol)
            / (qpoch_inf(alpha.b * alpha.c, q, &pol)
                * qpoch_inf(qc / (alpha.a * alpha.d), q, &pol)
                * qpoch_inf(qc * alpha.a / alpha.d, q, &pol)
                * qpoch_inf(qc * alpha.b / alpha.d, q, &pol)
                * qpoch_inf(qc * alpha.c / alpha.d, q, &pol));
        for m in [0usize, 2, 5] {
            let s = alpha.spectral(m).unwrap().value;
            let lhs = awf_phi_value(&alpha, s, x, &pol).unwrap();
            let rhs = pref * aw_poly(&alpha, m, x).unwrap();
            assert_close(lhs, rhs, 1e-10);
        }
    }

    #[test]
    fn eigen_equation() {
        let alpha = quad51();
        let pol = pol();
        let g = cx(1.1, 0.35);
        let x = cx(0.9, 0.4);
        let f = move |y: C| awf_phi_value(&alpha, g, y, &pol);
        let lhs = aw_operator_apply(&alpha, &f, x).unwrap();
        let rhs = eigenvalue_mu(&alpha, g).unwrap() * awf_phi_value(&alpha, g, x, &pol).unwrap();
        assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()), "{lhs} vs {rhs}");
    }

    #[test]
    fn analytic_part_is_finite_at_phi_poles() {
        let alpha = quad51();
        let pol = pol();
        let g = cx(1.1, 0.35);
        // x = q^{1+k}/d is a pole of phi but not of phi^an
        let xp = cx(alpha.q * alpha.q / alpha.d.re, 0.0);
        assert!(matches!(awf_phi(&alpha, g, xp, &pol), Err(Error::PoleAtNode(_))));
        let v = awf_analytic(&alpha, g, xp, &pol).unwrap();
        assert!(v.re.is_finite() && v.im.is_finite() && v.norm() > 0.0);
    }

    #[test]
    fn analytic_part_matches_definition_off_poles() {
        use crate::awcore::gaussian_g;
        use crate::awcore::Involution::*;
        let alpha = quad51();
        let pol = pol();
        let g = cx(1.1, 0.35);
        let x = cx(0.62, 0.53);
        let gt = gaussian_g(&alpha.tau().unwrap(), x, &pol).unwrap();
        let gst = gaussian_g(&alpha.apply_word(&[Sigma, Tau]).unwrap(), g, &pol).unwrap();
        let lhs = awf_analytic(&alpha, g, x, &pol).unwrap();
        let rhs = awf_phi_value(&alpha, g, x, &pol).unwrap() / (gt * gst);
        assert_close(lhs, rhs, 1e-11);
    }

    #[test]
    fn near_pole_evaluation_errors() {
        let alpha = quad51();
        let pol = pol();
        let g = cx(1.1, 0.35);
        // within 1e-7 relative of the pole at q^2/d
        let xp = cx((alpha.q * alpha.q / alpha.d.re) * (1.0 + 1e-7), 0.0);
        assert!(matches!(awf_phi(&alpha, g, xp, &pol), Err(Error::PoleAtNode(_))));
    }
}
