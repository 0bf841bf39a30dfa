//! Slice hyperholomorphic functions given by stem pairs, their decay classes
//! and a pointwise Cauchy–Fueter operator.
//!
//! Every function here is a finite sum `f(s) = Σ r_k(s) c_k` (left) or
//! `Σ c_k r_k(s)` (right) with real rationals `r_k` and quaternion constants
//! `c_k`. On `s = u + J v` the stems are `α = Σ Re r_k(u+iv) c_k` and
//! `β = Σ Im r_k(u+iv) c_k`, so the Cauchy–Riemann system holds by construction.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hnum::{arg, decompose, ImaginaryUnit, Quaternion, Sector};
use crate::poly::{Poly, Rational};
use crate::qop::Side;

/// Holomorphy sector used when none is given.
pub const DEFAULT_SECTOR: f64 = 0.75 * PI;
/// Certificate fitting grid.
const FIT_RADII: usize = 64;
const FIT_RAYS: usize = 9;
const FIT_R_MIN: f64 = 1e-6;
const FIT_R_MAX: f64 = 1e6;
const FIT_SAFETY: f64 = 2.0;

pub type IntrinsicRational = Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassTag {
    /// `|f(s)| <= C |s|^{1+α} / (1 + |s|^{1+2α})`, the class of the harmonic calculus.
    PsiQ,
    /// `|f(s)| <= C |s|^α / (1 + |s|^{2α})`, the class of the S-calculus.
    Psi,
    /// `|f(s)| <= C (|s|^α + |s|^{-α})`, polynomial growth at 0 and infinity.
    F,
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::PsiQ => "PsiQ",
            Self::Psi => "Psi",
            Self::F => "F",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub class_tag: ClassTag,
    pub alpha_exp: f64,
    pub c_alpha: f64,
}

impl DecayCertificate {
    /// Envelope `|f(s)| <= C * envelope(|s|)` without the constant.
    pub fn envelope(&self, r: f64) -> f64 {
        let a = self.alpha_exp;
        match self.class_tag {
            ClassTag::PsiQ => r.powf(1.0 + a) / (1.0 + r.powf(1.0 + 2.0 * a)),
            ClassTag::Psi => r.powf(a) / (1.0 + r.powf(2.0 * a)),
            ClassTag::F => r.powf(a) + r.powf(-a),
        }
    }

    pub fn bound(&self, r: f64) -> f64 {
        self.c_alpha * self.envelope(r)
    }

    /// The same function seen as a member of Ψ (valid since `Ψ^Q ⊂ Ψ` with constant `2C`).
    pub fn as_psi(&self) -> Result<Self> {
        match self.class_tag {
            ClassTag::Psi => Ok(*self),
            ClassTag::PsiQ => Ok(Self {
                class_tag: ClassTag::Psi,
                alpha_exp: self.alpha_exp,
                c_alpha: 2.0 * self.c_alpha,
            }),
            ClassTag::F => Err(Error::ClassMismatch {
                expected: "Psi".into(),
                found: "F".into(),
            }),
        }
    }

    /// Checks `|f| <= bound` on a grid offset from the fitting grid.
    pub fn verify(&self, f: &StemFunction) -> bool {
        let ratio = max_ratio(f, self, f.sector.omega(), 0.5);
        ratio <= self.c_alpha * (1.0 + 1e-12)
    }
}

/// One summand `r(s) c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub r: Rational,
    pub c: Quaternion,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StemFunction {
    terms: Vec<Term>,
    side: Side,
    sector: Sector,
    cert: DecayCertificate,
    label: String,
}

/// Metadata echoed next to computed results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionInfo {
    pub label: String,
    pub side: Side,
    pub sector: f64,
    pub intrinsic: bool,
    pub certificate: DecayCertificate,
}

impl StemFunction {
    /// Builds a function from terms, classifying it (or checking `tag`) and fitting its certificate.
    pub fn from_terms(
        terms: Vec<Term>,
        side: Side,
        sector: Sector,
        tag: Option<ClassTag>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let terms: Vec<Term> = terms.into_iter().filter(|t| !t.r.num.is_zero()).collect();
        for t in &terms {
            if t.r.den.is_zero() {
                return Err(Error::DomainError);
            }
            if !t.c.is_finite() || t.r.num.coeffs().iter().chain(t.r.den.coeffs()).any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("function coefficients".into()));
            }
            check_zero_free(&t.r.den, sector)?;
        }
        let (ord0, d_inf) = term_orders(&terms);
        let (class_tag, alpha_exp) = classify(ord0, d_inf, tag)?;
        let mut f = Self {
            terms,
            side,
            sector,
            cert: DecayCertificate {
                class_tag,
                alpha_exp,
                c_alpha: 0.0,
            },
            label: label.into(),
        };
        let fitted = FIT_SAFETY * max_ratio(&f, &f.cert, sector.omega(), 0.0);
        if !fitted.is_finite() {
            return Err(Error::NonFinite("certificate constant".into()));
        }
        f.cert.c_alpha = fitted;
        if !f.cert.verify(&f) {
            return Err(Error::HypothesisViolation {
                condition: "certificate",
                detail: format!("{} bound not confirmed on the check grid", f.cert.class_tag),
            });
        }
        Ok(f)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn certificate(&self) -> &DecayCertificate {
        &self.cert
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Real coefficients: `f(C_J) ⊂ C_J` for every `J`.
    pub fn is_intrinsic(&self) -> bool {
        self.terms.iter().all(|t| t.c.im_abs() == 0.0)
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.iter().all(|t| t.r.is_polynomial())
    }

    pub fn info(&self) -> FunctionInfo {
        FunctionInfo {
            label: self.label.clone(),
            side: self.side,
            sector: self.sector.omega(),
            intrinsic: self.is_intrinsic(),
            certificate: self.cert,
        }
    }

    /// Same function, assembled as a right slice function.
    pub fn with_side(&self, side: Side) -> Self {
        Self {
            side,
            ..self.clone()
        }
    }

    /// Values `r_k(z)` of the scalar profiles.
    pub fn term_values(&self, z: Complex64) -> Vec<Complex64> {
        self.terms.iter().map(|t| t.r.eval_complex(z)).collect()
    }

    /// Stem pair `(α(u,v), β(u,v))`.
    pub fn alpha_beta(&self, u: f64, v: f64) -> (Quaternion, Quaternion) {
        let z = Complex64::new(u, v);
        let mut a = Quaternion::ZERO;
        let mut b = Quaternion::ZERO;
        for t in &self.terms {
            let w = t.r.eval_complex(z);
            a += t.c * w.re;
            b += t.c * w.im;
        }
        (a, b)
    }

    /// Evaluation at `z` in the slice `C_J`, without domain checks.
    pub fn eval_in_slice(&self, z: Complex64, unit: ImaginaryUnit) -> Quaternion {
        self.terms
            .iter()
            .map(|t| {
                let w = unit.embed(t.r.eval_complex(z));
                match self.side {
                    Side::Left => w * t.c,
                    Side::Right => t.c * w,
                }
            })
            .sum()
    }

    fn check_domain(&self, s: Quaternion) -> Result<()> {
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("evaluation point {s}")));
        }
        if s != Quaternion::ZERO && arg(s)? >= self.sector.omega() {
            return Err(Error::OutOfDomain(s));
        }
        let (u, v, _) = decompose(s);
        let z = Complex64::new(u, v);
        for t in &self.terms {
            let d = t.r.den.eval_complex(z);
            let scale = t.r.den.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max);
            if d.norm() <= 1e-14 * scale * (1.0 + z.norm()).powi(t.r.den.degree().unwrap_or(0) as i32) {
                return Err(Error::OutOfDomain(s));
            }
        }
        Ok(())
    }
}

/// `f(u + J v) = α + J β` (left) or `α + β J` (right).
pub fn eval_slice(f: &StemFunction, s: Quaternion) -> Result<Quaternion> {
    f.check_domain(s)?;
    let (u, v, unit) = decompose(s);
    Ok(f.eval_in_slice(Complex64::new(u, v), unit))
}

fn term_orders(terms: &[Term]) -> (i64, i64) {
    let ord0 = terms
        .iter()
        .filter_map(|t| t.r.order_at_zero())
        .min()
        .unwrap_or(i64::MAX / 4);
    let d_inf = terms
        .iter()
        .filter_map(|t| t.r.degree_at_infinity())
        .max()
        .unwrap_or(i64::MIN / 4);
    (ord0, d_inf)
}

/// Class and growth exponent from the order of vanishing at 0 and the degree at infinity.
fn classify(ord0: i64, d_inf: i64, tag: Option<ClassTag>) -> Result<(ClassTag, f64)> {
    let zero_fn = ord0 > 1 << 40;
    let psiq = if zero_fn { Some(1) } else { Some((ord0 - 1).min(-d_inf)).filter(|&a| a > 0) };
    let psi = if zero_fn { Some(1) } else { Some(ord0.min(-d_inf)).filter(|&a| a > 0) };
    let f_alpha = if zero_fn { 1 } else { d_inf.max(-ord0).max(1) };
    match tag {
        Some(ClassTag::PsiQ) => psiq.map(|a| (ClassTag::PsiQ, a as f64)).ok_or_else(|| {
            let mut failed = Vec::new();
            if d_inf > -1 {
                failed.push("(i) deg q >= deg p + 1");
            }
            if ord0 < 2 {
                failed.push("(ii) zero of order >= 2 at the origin");
            }
            Error::HypothesisViolation {
                condition: if d_inf > -1 { "(i)" } else { "(ii)" },
                detail: format!("failed: {}", failed.join("; ")),
            }
        }),
        Some(ClassTag::Psi) => psi.map(|a| (ClassTag::Psi, a as f64)).ok_or_else(|| {
            Error::HypothesisViolation {
                condition: if d_inf > -1 { "(i)" } else { "(ii)" },
                detail: format!("no decay: order {ord0} at 0, degree {d_inf} at infinity"),
            }
        }),
        Some(ClassTag::F) => Ok((ClassTag::F, f_alpha as f64)),
        None => Ok(psiq
            .map(|a| (ClassTag::PsiQ, a as f64))
            .or_else(|| psi.map(|a| (ClassTag::Psi, a as f64)))
            .unwrap_or((ClassTag::F, f_alpha as f64))),
    }
}

/// Roots of `q` in the closed sector (the origin included) violate condition (iii).
fn check_zero_free(q: &Poly, sector: Sector) -> Result<()> {
    let scale = q.coeffs().iter().map(|c| c.abs()).fold(0.0, f64::max);
    for z in q.roots() {
        let on_origin = z.norm() <= 1e-12 * scale.max(1.0);
        if on_origin || z.im.atan2(z.re).abs() <= sector.omega() + 1e-12 {
            return Err(Error::HypothesisViolation {
                condition: "(iii)",
                detail: format!("denominator vanishes at {z} inside the closed sector"),
            });
        }
    }
    Ok(())
}

/// `max |f(s)| / envelope(|s|)` over a log grid of rays in the sector; `shift` offsets the radii.
fn max_ratio(f: &StemFunction, cert: &DecayCertificate, omega: f64, shift: f64) -> f64 {
    let step = (FIT_R_MAX / FIT_R_MIN).ln() / (FIT_RADII - 1) as f64;
    let units = [ImaginaryUnit::E1, ImaginaryUnit::E2, ImaginaryUnit::E3];
    let intrinsic = f.is_intrinsic();
    let mut worst: f64 = 0.0;
    for k in 0..FIT_RAYS {
        let angle = -omega + 2.0 * omega * k as f64 / (FIT_RAYS - 1) as f64;
        for i in 0..FIT_RADII {
            let x = (i as f64 + shift).min((FIT_RADII - 1) as f64);
            let r = FIT_R_MIN * (x * step).exp();
            let z = Complex64::from_polar(r, angle);
            let mut m: f64 = 0.0;
            for unit in if intrinsic { &units[..1] } else { &units[..] } {
                m = m.max(f.eval_in_slice(z, *unit).abs());
            }
            worst = worst.max(m / cert.envelope(r));
        }
    }
    worst
}

/// `p / q` as a left slice function; `tag` selects the class to certify (classified when `None`).
pub fn make_rational(r: &IntrinsicRational, tag: Option<ClassTag>, sector: Sector) -> Result<StemFunction> {
    if r.den.is_zero() {
        return Err(Error::DomainError);
    }
    let label = format!("rational p={:?} q={:?}", r.num.coeffs(), r.den.coeffs());
    StemFunction::from_terms(
        vec![Term {
            r: r.clone(),
            c: Quaternion::ONE,
        }],
        Side::Left,
        sector,
        tag,
        label,
    )
}

/// `e(s) = s^n / (1 + s)^{2n-1}`.
pub fn make_regularizer(n: u32) -> Result<StemFunction> {
    if n == 0 {
        return Err(Error::Config("regularizer power must be at least 1".into()));
    }
    let r = Rational::new(
        Poly::monomial(n as usize),
        Poly::linear_power(1.0, 1.0, 2 * n as usize - 1),
    );
    let sector = Sector::new(DEFAULT_SECTOR)?;
    let mut f = make_rational(&r, None, sector)?;
    f.label = format!("regularizer n={n}");
    Ok(f)
}

/// `s^k`, a member of F.
pub fn make_monomial(k: u32) -> Result<StemFunction> {
    let r = Rational::polynomial(Poly::monomial(k as usize));
    let mut f = make_rational(&r, Some(ClassTag::F), Sector::new(DEFAULT_SECTOR)?)?;
    f.label = format!("monomial degree={k}");
    Ok(f)
}

/// Pointwise product `f g` with `f` intrinsic.
pub fn product(f: &StemFunction, g: &StemFunction) -> Result<StemFunction> {
    if !f.is_intrinsic() {
        return Err(Error::NotIntrinsic);
    }
    let mut terms = Vec::with_capacity(f.terms.len() * g.terms.len());
    for a in &f.terms {
        for b in &g.terms {
            terms.push(Term {
                r: &a.r * &b.r,
                c: b.c * a.c.s0,
            });
        }
    }
    let sector = Sector::new(f.sector.omega().min(g.sector.omega()))?;
    let label = format!("({})*({})", f.label, g.label);
    StemFunction::from_terms(terms, g.side, sector, None, label)
}

/// `f + g`; both must be assembled on the same side.
pub fn sum(f: &StemFunction, g: &StemFunction) -> Result<StemFunction> {
    if f.side != g.side {
        return Err(Error::HypothesisViolation {
            condition: "same side",
            detail: "cannot add a left and a right slice function".into(),
        });
    }
    let terms = f.terms.iter().chain(&g.terms).cloned().collect();
    let sector = Sector::new(f.sector.omega().min(g.sector.omega()))?;
    StemFunction::from_terms(terms, f.side, sector, None, format!("{}+{}", f.label, g.label))
}

/// `f + c` for a real constant `c`.
pub fn add_constant(f: &StemFunction, c: f64) -> Result<StemFunction> {
    let g = StemFunction::from_terms(
        vec![Term {
            r: Rational::constant(c),
            c: Quaternion::ONE,
        }],
        f.side,
        f.sector,
        Some(ClassTag::F),
        format!("{c}"),
    )?;
    sum(f, &g)
}

/// `D p(q) = -2 Σ_i p_i Σ_{k<i} q^k q̄^{i-1-k}`.
pub fn cf_derivative_poly(p: &Poly, q: Quaternion) -> Quaternion {
    let qb = q.conj();
    let mut total = Quaternion::ZERO;
    for (i, &c) in p.coeffs().iter().enumerate().skip(1) {
        let mut inner = Quaternion::ZERO;
        for k in 0..i {
            inner += q.powi(k as u32) * qb.powi((i - 1 - k) as u32);
        }
        total += inner * c;
    }
    total * -2.0
}

/// Central-difference `D g(q) = Σ e_a ∂_a g(q)` (left) or `Σ ∂_a g(q) e_a` (right) with step `h`.
pub fn cf_derivative_fd(
    g: impl Fn(Quaternion) -> Result<Quaternion>,
    q: Quaternion,
    h: f64,
    side: Side,
) -> Result<Quaternion> {
    let mut total = Quaternion::ZERO;
    for a in 0..4 {
        let e = Quaternion::basis(a);
        let d = (g(q + e * h)? - g(q - e * h)?) / (2.0 * h);
        total += match side {
            Side::Left => e * d,
            Side::Right => d * e,
        };
    }
    Ok(total)
}

/// `D f(q)`: exact monomial rule for polynomials, Richardson-extrapolated central
/// differences otherwise (step `1e-5 max(1, |q|)`, estimate must stay below `1e-6 max(1, |Df|)`).
pub fn pointwise_cf_derivative(f: &StemFunction, q: Quaternion) -> Result<Quaternion> {
    pointwise_cf_derivative_with(f, q, 1e-5 * q.abs().max(1.0), 1e-6)
}

pub fn pointwise_cf_derivative_with(f: &StemFunction, q: Quaternion, h: f64, tol: f64) -> Result<Quaternion> {
    if f.is_polynomial() {
        return Ok(f
            .terms
            .iter()
            .map(|t| {
                let d = cf_derivative_poly(&t.r.num, q) * (1.0 / t.r.den.coeffs()[0]);
                match f.side {
                    Side::Left => d * t.c,
                    Side::Right => t.c * d,
                }
            })
            .sum());
    }
    let g = |x: Quaternion| eval_slice(f, x);
    let coarse = cf_derivative_fd(g, q, h, f.side)?;
    let fine = cf_derivative_fd(g, q, h / 2.0, f.side)?;
    let extrapolated = (fine * 4.0 - coarse) / 3.0;
    let estimate = (extrapolated - fine).abs();
    let tolerance = tol * extrapolated.abs().max(1.0);
    if estimate > tolerance || !extrapolated.is_finite() {
        return Err(Error::StepTooLarge { estimate, tolerance });
    }
    Ok(extrapolated)
}

/// Closed form `D f(u + J v) = -2 β(u,v) / v` (limit `-2 r'(u)` on the real axis).
pub fn spherical_cf_derivative(f: &StemFunction, q: Quaternion) -> Result<Quaternion> {
    f.check_domain(q)?;
    let (u, v, _) = decompose(q);
    let z = Complex64::new(u, v);
    let mut total = Quaternion::ZERO;
    for t in &f.terms {
        let d = if v < 1e-6 * u.abs().max(1.0) {
            t.r.derivative().eval_complex(Complex64::new(u, 0.0)).re
        } else {
            t.r.eval_complex(z).im / v
        };
        total += t.c * (-2.0 * d);
    }
    Ok(total)
}

/// JSON description of a function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionSpec {
    Rational {
        p: Vec<f64>,
        q: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<ClassTag>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sector: Option<f64>,
    },
    Regularizer {
        n: u32,
    },
    Monomial {
        degree: u32,
    },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<StemFunction> {
        match self {
            Self::Rational { p, q, class, sector } => {
                let r = Rational::new(Poly::new(p.clone()), Poly::new(q.clone()));
                make_rational(&r, *class, Sector::new(sector.unwrap_or(DEFAULT_SECTOR))?)
            }
            Self::Regularizer { n } => make_regularizer(*n),
            Self::Monomial { degree } => make_monomial(*degree),
        }
    }
}
