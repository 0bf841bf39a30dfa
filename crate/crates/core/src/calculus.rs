//! The S-functional calculus, the harmonic calculus `Df(T)`, their polynomial and
//! rational closed forms, and the H∞ extensions through a regularizer `e`.

use serde::Serialize;

use crate::contour::{
    contour_integrate, plan_contour_with_budget, Kernel, KernelKind, DEFAULT_MAX_NODES,
};
pub use crate::contour::{CalculusResult, Diagnostics, PlanEcho};
use crate::error::{Error, Result};
use crate::hnum::{ImaginaryUnit, Sector};
use crate::linalg::QMat;
use crate::poly::{Poly, Rational};
use crate::qop::{s_spectrum, sector_certificate, CommutingOperator, SectorCertificate, Side};
use crate::sfun::{make_regularizer, product, ClassTag, StemFunction};

/// `e(T)` counts as injective when `sigma_min >= INJECTIVITY * ||e(T)||`.
pub const INJECTIVITY: f64 = 1e-10;
/// Smallest tolerance requested from inner integrals of derived quantities.
pub const TOL_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct CalcOptions {
    /// Contour angle; defaults to the midpoint between the spectrum and the function's sector.
    pub phi: Option<f64>,
    pub unit: ImaginaryUnit,
    pub tol: f64,
    pub max_nodes: usize,
    pub side: Side,
    /// Precomputed resolvent constants for the contour angle.
    pub resolvent_consts: Option<SectorCertificate>,
    /// Regularizer power for the H∞ calculi.
    pub regularizer_n: Option<u32>,
}

impl Default for CalcOptions {
    fn default() -> Self {
        Self {
            phi: None,
            unit: ImaginaryUnit::E1,
            tol: 1e-8,
            max_nodes: DEFAULT_MAX_NODES,
            side: Side::Left,
            resolvent_consts: None,
            regularizer_n: None,
        }
    }
}

impl CalcOptions {
    /// Same options at tolerance `tol`, floored at [`TOL_FLOOR`].
    pub fn with_tol(&self, tol: f64) -> Self {
        Self {
            tol: tol.max(TOL_FLOOR),
            ..self.clone()
        }
    }
}

/// Contour angle in `(max Arg σ_S(T), θ)`.
pub fn contour_angle(t: &CommutingOperator, theta: f64, requested: Option<f64>) -> Result<f64> {
    let max_arg = s_spectrum(t)?.max_arg();
    if max_arg >= theta {
        return Err(Error::NotSectorial { theta, max_arg });
    }
    match requested {
        None => Ok(0.5 * (max_arg + theta)),
        Some(phi) if phi <= max_arg => Err(Error::NotSectorial { theta: phi, max_arg }),
        Some(phi) if phi >= theta => Err(Error::HypothesisViolation {
            condition: "contour angle",
            detail: format!("phi = {phi} must lie below the holomorphy angle {theta}"),
        }),
        Some(phi) => Ok(phi),
    }
}

/// Options with the contour angle and the resolvent constants fixed for `t` and `theta`.
fn prepared(t: &CommutingOperator, theta: f64, opts: &CalcOptions) -> Result<CalcOptions> {
    let phi = contour_angle(t, theta, opts.phi)?;
    let consts = match opts.resolvent_consts {
        Some(c) => c,
        None => sector_certificate(t, Sector::new(phi)?)?,
    };
    Ok(CalcOptions {
        phi: Some(phi),
        resolvent_consts: Some(consts),
        ..opts.clone()
    })
}

fn integrate(t: &CommutingOperator, f: &StemFunction, opts: &CalcOptions, kind: KernelKind) -> Result<CalculusResult> {
    let opts = prepared(t, f.sector().omega(), opts)?;
    let phi = opts.phi.expect("prepared options carry an angle");
    let consts = opts.resolvent_consts.expect("prepared options carry constants");
    let plan = plan_contour_with_budget(f.certificate(), consts, phi, opts.unit, opts.tol, kind, opts.max_nodes)?;
    let kernel = match kind {
        KernelKind::S => Kernel::SResolvent(t),
        KernelKind::Q => Kernel::Pencil(t),
    };
    contour_integrate(&plan, kernel, f, opts.side, kind.prefactor())
}

/// `f(T) = 1/(2π) ∫ S_L^{-1}(s,T) ds_J f(s)` (or the right-sided integral).
pub fn s_calc(t: &CommutingOperator, f: &StemFunction, opts: &CalcOptions) -> Result<CalculusResult> {
    if f.certificate().class_tag == ClassTag::F {
        return Err(Error::ClassMismatch {
            expected: "Psi".into(),
            found: "F".into(),
        });
    }
    integrate(t, f, opts, KernelKind::S)
}

/// `Df(T) = -1/π ∫ Q_{c,s}^{-1}(T) ds_J f(s)` (or the right-sided integral).
pub fn d_calc(t: &CommutingOperator, f: &StemFunction, opts: &CalcOptions) -> Result<CalculusResult> {
    if f.certificate().class_tag != ClassTag::PsiQ {
        return Err(Error::ClassMismatch {
            expected: "PsiQ".into(),
            found: f.certificate().class_tag.to_string(),
        });
    }
    integrate(t, f, opts, KernelKind::Q)
}

/// `q[T] = Σ q_j T^j` by Horner's rule.
pub fn poly_calc(q: &Poly, t: &CommutingOperator) -> QMat {
    poly_of(q, &t.to_qmat())
}

fn poly_of(q: &Poly, t: &QMat) -> QMat {
    let n = t.rows();
    let mut acc = QMat::zeros(n, n);
    for &c in q.coeffs().iter().rev() {
        acc = &(&acc * t) + &QMat::scalar(n, c.into());
    }
    acc
}

/// `Dp[T] = -2 Σ_i p_i Σ_{k<i} T^k T̄^{i-1-k}`.
pub fn d_poly_calc(p: &Poly, t: &CommutingOperator) -> QMat {
    let n = t.n();
    let deg = p.degree().unwrap_or(0);
    let tq = t.to_qmat();
    let tb = t.conj().to_qmat();
    let mut pow_t = vec![QMat::identity(n)];
    let mut pow_tb = vec![QMat::identity(n)];
    for k in 1..deg.max(1) {
        pow_t.push(&pow_t[k - 1] * &tq);
        pow_tb.push(&pow_tb[k - 1] * &tb);
    }
    let mut total = QMat::zeros(n, n);
    for (i, &c) in p.coeffs().iter().enumerate().skip(1) {
        if c == 0.0 {
            continue;
        }
        let mut inner = QMat::zeros(n, n);
        for k in 0..i {
            inner = &inner + &(&pow_t[k] * &pow_tb[i - 1 - k]);
        }
        total = &total + &inner.scale(c);
    }
    total.scale(-2.0)
}

/// Both closed forms of `D(p/q)(T)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RationalD {
    /// `(Dp[T] q[T] - p[T] Dq[T]) q[T]^{-1} q[T̄]^{-1}`.
    pub form1: QMat,
    /// `(Dp[T] q[T̄] - p[T̄] Dq[T]) q[T]^{-1} q[T̄]^{-1}`.
    pub form2: QMat,
}

impl RationalD {
    pub fn gap(&self) -> f64 {
        (&self.form1 - &self.form2).max_abs()
    }
}

/// Rejects denominators with a root in the closed sector spanned by the spectrum.
fn check_denominator(q: &Poly, t: &CommutingOperator) -> Result<()> {
    if q.is_zero() {
        return Err(Error::DomainError);
    }
    let Ok(spec) = s_spectrum(t) else {
        return Ok(());
    };
    let omega = spec.max_arg();
    let scale = q.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max);
    for z in q.roots() {
        if z.norm() <= 1e-12 * scale || z.im.atan2(z.re).abs() <= omega + 1e-12 {
            return Err(Error::ZeroInSector {
                root: format!("{z}"),
                omega,
            });
        }
    }
    Ok(())
}

fn singular_to(e: Error, q: &Poly) -> Error {
    match e {
        Error::SingularSystem => Error::ZeroInSector {
            root: format!("q = {:?} is not invertible at the operator", q.coeffs()),
            omega: f64::NAN,
        },
        other => other,
    }
}

/// `D(p/q)(T)` in closed form.
pub fn rational_d(p: &Poly, q: &Poly, t: &CommutingOperator) -> Result<RationalD> {
    check_denominator(q, t)?;
    let tb = t.conj();
    let (pt, ptb) = (poly_calc(p, t), poly_calc(p, &tb));
    let (qt, qtb) = (poly_calc(q, t), poly_calc(q, &tb));
    let (dp, dq) = (d_poly_calc(p, t), d_poly_calc(q, t));
    let m = &qt * &qtb;
    let n1 = &(&dp * &qt) - &(&pt * &dq);
    let n2 = &(&dp * &qtb) - &(&ptb * &dq);
    Ok(RationalD {
        form1: QMat::solve_right(&n1, &m).map_err(|e| singular_to(e, q))?,
        form2: QMat::solve_right(&n2, &m).map_err(|e| singular_to(e, q))?,
    })
}

/// `(p/q)(T) = p[T] q[T]^{-1}`.
pub fn rational_calc(r: &Rational, t: &CommutingOperator) -> Result<QMat> {
    check_denominator(&r.den, t)?;
    QMat::solve_right(&poly_calc(&r.num, t), &poly_calc(&r.den, t)).map_err(|e| singular_to(e, &r.den))
}

/// Smallest `n > 1 + α`, plus one.
pub fn default_regularizer_power(alpha: f64) -> u32 {
    (1.0 + alpha).floor() as u32 + 2
}

fn regularizer_for(f: &StemFunction, opts: &CalcOptions) -> Result<StemFunction> {
    let n = opts
        .regularizer_n
        .unwrap_or_else(|| default_regularizer_power(f.certificate().alpha_exp));
    make_regularizer(n)
}

fn regularized(e: &StemFunction, f: &StemFunction, class: ClassTag) -> Result<StemFunction> {
    if !e.is_intrinsic() {
        return Err(Error::NotIntrinsic);
    }
    let ef = product(e, f)?;
    let ok = match class {
        ClassTag::PsiQ => ef.certificate().class_tag == ClassTag::PsiQ,
        _ => ef.certificate().class_tag != ClassTag::F,
    };
    if !ok {
        return Err(Error::ProductNotDecaying(format!(
            "{} is in class {}",
            ef.label(),
            ef.certificate().class_tag
        )));
    }
    Ok(ef)
}

fn injective(value: &QMat) -> Result<f64> {
    let sv = value.singular_values();
    let norm = sv.iter().copied().fold(0.0, f64::max);
    let sigma_min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !(sigma_min >= INJECTIVITY * norm) || norm == 0.0 {
        return Err(Error::RegularizerSingular { sigma_min, norm });
    }
    Ok(sigma_min)
}

/// `e` vanishes at the origin, so `e(T)` has a kernel whenever `T` does.
fn reject_kernel(t: &CommutingOperator) -> Result<()> {
    if s_spectrum(t)?.contains_origin() {
        return Err(Error::RegularizerSingular {
            sigma_min: 0.0,
            norm: t.to_qmat().norm2(),
        });
    }
    Ok(())
}

fn combined_sector(e: &StemFunction, f: &StemFunction) -> f64 {
    e.sector().omega().min(f.sector().omega())
}

/// `f(T) = e(T)^{-1} (ef)(T)` with the regularizer from `opts` (or the default power).
pub fn hinf_s(t: &CommutingOperator, f: &StemFunction, opts: &CalcOptions) -> Result<CalculusResult> {
    let e = regularizer_for(f, opts)?;
    hinf_s_with(t, f, &e, opts)
}

pub fn hinf_s_with(
    t: &CommutingOperator,
    f: &StemFunction,
    e: &StemFunction,
    opts: &CalcOptions,
) -> Result<CalculusResult> {
    let ef = regularized(e, f, ClassTag::Psi)?;
    reject_kernel(t)?;
    let opts = prepared(t, combined_sector(e, f), opts)?;
    let tol = opts.tol;
    let coarse = s_calc(t, e, &opts.with_tol(tol / 10.0))?;
    let sigma = injective(&coarse.value)?;
    let inner = tol * sigma / 4.0;
    let eft = s_calc(t, &ef, &opts.with_tol(inner))?;
    let f_norm = eft.value.max_abs() / sigma;
    let e_tol = inner / f_norm.max(1.0);
    let et = if e_tol < tol / 10.0 {
        s_calc(t, e, &opts.with_tol(e_tol))?
    } else {
        coarse
    };
    let sigma = injective(&et.value)?;
    let value = QMat::solve_left(&et.value, &eft.value)?;
    let est_error = (eft.est_error + value.max_abs() * et.est_error) / sigma;
    let mut out = CalculusResult {
        value,
        est_error,
        form_gap: None,
        plan: None,
        diagnostics: Diagnostics::default(),
    };
    out.absorb(&eft);
    out.absorb(&et);
    out.diagnostics.residuals.push(("regularizer_sigma_min".into(), sigma));
    Ok(out)
}

/// `Df(T) = e(T̄)^{-1}(D(ef)(T) - f(T) De(T))`, with the second form
/// `e(T)^{-1}(D(ef)(T) - f(T̄) De(T))` reported through `form_gap`.
pub fn hinf_d(t: &CommutingOperator, f: &StemFunction, opts: &CalcOptions) -> Result<CalculusResult> {
    let e = regularizer_for(f, opts)?;
    hinf_d_with(t, f, &e, opts)
}

pub fn hinf_d_with(
    t: &CommutingOperator,
    f: &StemFunction,
    e: &StemFunction,
    opts: &CalcOptions,
) -> Result<CalculusResult> {
    if e.certificate().class_tag != ClassTag::PsiQ {
        return Err(Error::ClassMismatch {
            expected: "PsiQ".into(),
            found: e.certificate().class_tag.to_string(),
        });
    }
    let ef = regularized(e, f, ClassTag::PsiQ)?;
    reject_kernel(t)?;
    let tb = t.conj();
    let opts = prepared(t, combined_sector(e, f), opts)?;
    let tol = opts.tol;

    let coarse = opts.with_tol(tol / 10.0);
    let sigma = injective(&s_calc(t, e, &coarse)?.value)?.min(injective(&s_calc(&tb, e, &coarse)?.value)?);
    let inner = tol * sigma / 8.0;

    let de0 = d_calc(t, e, &opts.with_tol(inner))?;
    let de_scale = de0.value.max_abs().max(1.0);
    let ft = hinf_s_with(t, f, e, &opts.with_tol(inner / de_scale))?;
    let ftb = hinf_s_with(&tb, f, e, &opts.with_tol(inner / de_scale))?;
    let f_scale = ft.value.max_abs().max(ftb.value.max_abs()).max(1.0);
    let de = if f_scale > 1.0 {
        d_calc(t, e, &opts.with_tol(inner / f_scale))?
    } else {
        de0
    };
    let def = d_calc(t, &ef, &opts.with_tol(inner))?;

    let n1 = &def.value - &(&ft.value * &de.value);
    let n2 = &def.value - &(&ftb.value * &de.value);
    let v_scale = (n1.max_abs().max(n2.max_abs()) / sigma).max(1.0);
    let e_tol = opts.with_tol(inner / v_scale);
    let et = s_calc(t, e, &e_tol)?;
    let etb = s_calc(&tb, e, &e_tol)?;
    injective(&et.value)?;
    injective(&etb.value)?;

    let form1 = QMat::solve_left(&etb.value, &n1)?;
    let form2 = QMat::solve_left(&et.value, &n2)?;
    let gap = (&form1 - &form2).max_abs();
    let n_err = def.est_error + f_scale * de.est_error + de_scale * ft.est_error.max(ftb.est_error);
    let est_error = (n_err + form1.max_abs() * et.est_error.max(etb.est_error)) / sigma;
    let mut out = CalculusResult {
        value: form1,
        est_error,
        form_gap: Some(gap),
        plan: None,
        diagnostics: Diagnostics::default(),
    };
    for part in [&def, &de, &ft, &ftb, &et, &etb] {
        out.absorb(part);
    }
    out.diagnostics.residuals.push(("form_gap".into(), gap));
    out.diagnostics.residuals.push(("regularizer_sigma_min".into(), sigma));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hnum::Quaternion;
    use crate::qop::{build_diagonal, build_poly_family};
    use crate::sfun::{eval_slice, make_monomial, make_rational, spherical_cf_derivative, DEFAULT_SECTOR};
    use nalgebra::DMatrix;

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    fn rat(p: &[f64], q: &[f64]) -> Rational {
        Rational::new(Poly::new(p.to_vec()), Poly::new(q.to_vec()))
    }

    fn fun(p: &[f64], q: &[f64]) -> StemFunction {
        make_rational(&rat(p, q), None, Sector::new(DEFAULT_SECTOR).unwrap()).unwrap()
    }

    fn diag(e: &[Quaternion]) -> CommutingOperator {
        build_diagonal(e).unwrap()
    }

    fn close(a: &QMat, b: &QMat, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    const S2_OVER_1PS3: (&[f64], &[f64]) = (&[0.0, 0.0, 1.0], &[1.0, 3.0, 3.0, 1.0]);

    #[test]
    fn s_calc_examples() {
        let f = fun(&[0.0, 1.0], &[1.0, 2.0, 1.0]);
        let opts = CalcOptions::default();
        let r = s_calc(&diag(&[Quaternion::real(2.0)]), &f, &opts).unwrap();
        assert!((r.value[(0, 0)] - Quaternion::real(2.0 / 9.0)).abs() < 1e-8);

        let x = q(1.0, 1.0, 0.0, 0.0);
        let r = s_calc(&diag(&[Quaternion::real(2.0), x]), &f, &opts).unwrap();
        let expect = QMat::diagonal(&[Quaternion::real(2.0 / 9.0), eval_slice(&f, x).unwrap()]);
        assert!(close(&r.value, &expect, 1e-8), "{:?}", r.value);

        let e2 = make_regularizer(2).unwrap();
        let r = s_calc(&diag(&[x, Quaternion::real(3.0)]), &e2, &opts).unwrap();
        assert!(r.value.sigma_min() > 1e-3);
    }

    #[test]
    fn d_calc_examples() {
        let f = fun(S2_OVER_1PS3.0, S2_OVER_1PS3.1);
        let opts = CalcOptions::default();
        let r = d_calc(&diag(&[Quaternion::real(2.0)]), &f, &opts).unwrap();
        assert!(r.value.max_abs() < 1e-8);

        for x in [q(1.0, 0.5, 0.0, 0.0), q(0.8, 0.1, -0.3, 0.2)] {
            let r = d_calc(&diag(&[x]), &f, &opts).unwrap();
            let oracle = spherical_cf_derivative(&f, x).unwrap();
            assert!((r.value[(0, 0)] - oracle).abs() < 1e-8, "{} vs {}", r.value[(0, 0)], oracle);
        }
        assert!(matches!(
            d_calc(&diag(&[Quaternion::real(2.0)]), &make_monomial(1).unwrap(), &opts),
            Err(Error::ClassMismatch { .. })
        ));
    }

    #[test]
    fn poly_examples() {
        let t = diag(&[Quaternion::E1]);
        let v = poly_calc(&Poly::linear_power(1.0, 1.0, 3), &t);
        assert_eq!(v[(0, 0)], q(-2.0, 2.0, 0.0, 0.0));
        let t = diag(&[q(1.0, 2.0, 0.0, 0.0), Quaternion::real(3.0)]);
        assert_eq!(poly_calc(&Poly::constant(2.5), &t), QMat::scalar(2, Quaternion::real(2.5)));
        assert_eq!(poly_calc(&Poly::monomial(1), &t), t.to_qmat());

        assert_eq!(d_poly_calc(&Poly::monomial(1), &t), QMat::scalar(2, Quaternion::real(-2.0)));
        assert_eq!(d_poly_calc(&Poly::constant(4.0), &t), QMat::zeros(2, 2));
        assert_eq!(d_poly_calc(&Poly::monomial(2), &diag(&[Quaternion::E1])), QMat::zeros(1, 1));
    }

    #[test]
    fn rational_examples() {
        let (p, qq) = (Poly::monomial(2), Poly::linear_power(1.0, 1.0, 3));
        let r = rational_d(&p, &qq, &diag(&[Quaternion::real(2.0)])).unwrap();
        assert!(r.form1.max_abs() < 1e-15 && r.form2.max_abs() < 1e-15);
        let r = rational_d(&p, &qq, &diag(&[Quaternion::E1])).unwrap();
        assert!((r.form1[(0, 0)] - Quaternion::real(-0.5)).abs() < 1e-15);
        assert!((r.form2[(0, 0)] - Quaternion::real(-0.5)).abs() < 1e-15);
        let r = rational_d(&Poly::monomial(1), &Poly::constant(1.0), &diag(&[Quaternion::real(2.0)])).unwrap();
        assert_eq!(r.form1, QMat::scalar(1, Quaternion::real(-2.0)));

        assert!(matches!(
            rational_d(&p, &Poly::new(vec![-3.0, 1.0]), &diag(&[Quaternion::real(2.0)])),
            Err(Error::ZeroInSector { .. })
        ));
        let v = rational_calc(&rat(&[0.0, 1.0], &[1.0, 2.0, 1.0]), &diag(&[Quaternion::real(2.0)])).unwrap();
        assert!((v[(0, 0)] - Quaternion::real(2.0 / 9.0)).abs() < 1e-16);
    }

    #[test]
    fn polynomial_product_rule_is_exact() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let t = build_poly_family(
            &m,
            [Poly::monomial(1), Poly::new(vec![0.0, 0.3]), Poly::new(vec![0.0, 0.0, 0.2]), Poly::zero()],
        )
        .unwrap();
        let p = Poly::new(vec![1.0, -2.0, 0.5, 1.0]);
        let qq = Poly::new(vec![0.0, 3.0, 0.0, -1.0]);
        let lhs = d_poly_calc(&(&p * &qq), &t);
        let rhs = &(&d_poly_calc(&p, &t) * &poly_calc(&qq, &t)) + &(&poly_calc(&p, &t.conj()) * &d_poly_calc(&qq, &t));
        assert!((&lhs - &rhs).max_abs() < 1e-9 * lhs.max_abs());
    }

    #[test]
    fn hinf_s_examples() {
        let opts = CalcOptions {
            regularizer_n: Some(3),
            ..CalcOptions::default()
        };
        let id = make_monomial(1).unwrap();
        let r = hinf_s(&diag(&[Quaternion::real(2.0)]), &id, &opts).unwrap();
        assert!((r.value[(0, 0)] - Quaternion::real(2.0)).abs() < 1e-7, "{}", r.value[(0, 0)]);

        let t = diag(&[q(1.0, 1.0, 0.0, 0.0), Quaternion::real(3.0)]);
        let r = hinf_s(&t, &id, &opts).unwrap();
        assert!(close(&r.value, &t.to_qmat(), 1e-7), "{:?}", r.value);

        let f = fun(&[0.0, 1.0], &[1.0, 2.0, 1.0]);
        let t = diag(&[Quaternion::real(2.0)]);
        let a = hinf_s(&t, &f, &opts).unwrap();
        let b = s_calc(&t, &f, &opts).unwrap();
        assert!(close(&a.value, &b.value, 2.0 * opts.tol));
    }

    #[test]
    fn hinf_d_examples() {
        let opts = CalcOptions::default();
        let t = diag(&[Quaternion::real(2.0)]);
        let r = hinf_d(&t, &make_monomial(1).unwrap(), &CalcOptions { regularizer_n: Some(3), ..opts.clone() }).unwrap();
        assert!((r.value[(0, 0)] - Quaternion::real(-2.0)).abs() < 1e-7, "{}", r.value[(0, 0)]);
        assert!(r.form_gap.unwrap() < 1e-8);

        let r = hinf_d(&t, &make_monomial(2).unwrap(), &CalcOptions { regularizer_n: Some(4), ..opts.clone() }).unwrap();
        assert!((r.value[(0, 0)] - Quaternion::real(-8.0)).abs() < 1e-7, "{}", r.value[(0, 0)]);

        let t = diag(&[q(1.0, 2.0, 0.0, 0.0)]);
        let r = hinf_d(&t, &make_monomial(2).unwrap(), &opts).unwrap();
        assert!((r.value[(0, 0)] - Quaternion::real(-4.0)).abs() < 1e-7, "{}", r.value[(0, 0)]);
    }

    #[test]
    fn hinf_errors() {
        let opts = CalcOptions {
            regularizer_n: Some(3),
            ..CalcOptions::default()
        };
        assert!(matches!(
            hinf_d(&diag(&[Quaternion::real(2.0)]), &make_monomial(3).unwrap(), &opts),
            Err(Error::ProductNotDecaying(_))
        ));
        // e(T) is not injective on a non-injective operator
        let t = diag(&[Quaternion::real(0.0), Quaternion::real(2.0)]);
        assert!(matches!(
            hinf_s(&t, &make_monomial(1).unwrap(), &opts),
            Err(Error::RegularizerSingular { .. })
        ));
    }

    #[test]
    fn default_regularizer() {
        assert_eq!(default_regularizer_power(1.0), 4);
        assert_eq!(default_regularizer_power(2.0), 5);
    }
}
