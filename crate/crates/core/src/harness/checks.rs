//! The check registry.
//!
//! Every check draws its random instances from its own stream, seeded from the run seed
//! and the check name, so results do not depend on scheduling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::config::{Suite, SuiteConfig};
use crate::calculus::{
    d_calc, d_poly_calc, hinf_d, hinf_d_with, hinf_s, poly_calc, rational_calc, rational_d, s_calc, CalcOptions,
    CalculusResult,
};
use crate::contour::{integrate_fixed, plan_contour, Kernel, KernelKind};
use crate::error::{Error, Result};
use crate::hnum::{decompose, in_sector, qmul, ImaginaryUnit, Quaternion, Sector};
use crate::linalg::QMat;
use crate::poly::{Poly, Rational};
use crate::qop::{
    cauchy_kernel_left, cauchy_kernel_right, pencil_solve, resolvent_profile, s_resolvent, s_spectrum,
    sector_certificate, CommutingOperator, OperatorSpec, Side,
};
use crate::sfun::{
    add_constant, cf_derivative_fd, eval_slice, make_rational, make_regularizer, product, spherical_cf_derivative,
    sum, ClassTag, FunctionSpec, StemFunction, Term, DEFAULT_SECTOR,
};

/// Shared, read-only inputs of a run.
pub(crate) struct Ctx {
    pub cfg: SuiteConfig,
    pub operators: Vec<(String, OperatorSpec, CommutingOperator)>,
    pub functions: Vec<(FunctionSpec, StemFunction)>,
}

impl Ctx {
    pub fn new(cfg: &SuiteConfig, operators: &[OperatorSpec], functions: &[FunctionSpec]) -> Result<Self> {
        let mut ops = Vec::new();
        for (label, spec) in catalog() {
            let op = spec.build()?;
            ops.push((label.to_string(), spec, op));
        }
        for (i, spec) in operators.iter().enumerate() {
            ops.push((format!("config[{i}]"), spec.clone(), spec.build()?));
        }
        let functions = functions
            .iter()
            .map(|s| Ok((s.clone(), s.build()?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg: cfg.clone(),
            operators: ops,
            functions,
        })
    }

    fn catalog_op(&self, label: &str) -> &CommutingOperator {
        &self
            .operators
            .iter()
            .find(|o| o.0 == label)
            .expect("catalog operator present")
            .2
    }

    fn quad(&self) -> f64 {
        self.cfg.tolerances.quadrature
    }

    fn la(&self) -> f64 {
        self.cfg.tolerances.linear_algebra
    }

    fn fd(&self) -> f64 {
        self.cfg.tolerances.finite_difference
    }
}

/// Result of one check before it is turned into a report record.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub residual: f64,
    pub tolerance: f64,
    pub inputs: Value,
    pub detail: Option<String>,
    /// Side conditions (negative tests, required errors) that must hold besides the residual.
    pub conditions_ok: bool,
    pub max_nodes: usize,
}

impl Outcome {
    fn new(residual: f64, tolerance: f64, inputs: Value) -> Self {
        Self {
            residual,
            tolerance,
            inputs,
            detail: None,
            conditions_ok: true,
            max_nodes: 0,
        }
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    fn require(mut self, ok: bool, why: impl Into<String>) -> Self {
        if !ok {
            self.conditions_ok = false;
            let why = why.into();
            self.detail = Some(match self.detail.take() {
                Some(d) => format!("{d}; {why}"),
                None => why,
            });
        }
        self
    }

    fn nodes(mut self, n: usize) -> Self {
        self.max_nodes = n;
        self
    }

    pub fn pass(&self) -> bool {
        self.conditions_ok && self.residual.is_finite() && self.residual <= self.tolerance
    }
}

pub(crate) type CheckFn = fn(&Ctx, &mut ChaCha8Rng) -> Result<Outcome>;

pub(crate) struct CheckDef {
    pub suite: Suite,
    pub name: &'static str,
    pub identity: &'static str,
    /// Invariant ids from [`INVARIANTS`] this check exercises.
    pub covers: &'static [&'static str],
    pub run: CheckFn,
}

/// Every invariant the suites are expected to exercise, by module.
pub const INVARIANTS: &[(&str, &str)] = &[
    ("hnum", "qmul_associative_isometric"),
    ("hnum", "conj_antihomomorphism"),
    ("hnum", "unit_squares_to_minus_one"),
    ("hnum", "decompose_reconstructs"),
    ("hnum", "sector_axially_symmetric"),
    ("qop", "resolvent_set_axial"),
    ("qop", "left_right_resolvent"),
    ("qop", "resolvent_equation"),
    ("qop", "kernel_differentiation"),
    ("qop", "pencil_conjugation"),
    ("qop", "resolvent_estimate"),
    ("sfun", "representation_formula"),
    ("sfun", "intrinsic_preserves_slice"),
    ("sfun", "cauchy_reconstruction"),
    ("sfun", "fd_matches_analytic_d"),
    ("contour", "quadrature_order"),
    ("contour", "angle_independence"),
    ("contour", "unit_independence"),
    ("contour", "operand_order"),
    ("calculus", "linearity"),
    ("calculus", "conjugation_invariance"),
    ("calculus", "intrinsic_reality"),
    ("calculus", "commuting_components"),
    ("calculus", "commutant"),
    ("calculus", "mutual_commutation"),
    ("calculus", "product_rule"),
    ("calculus", "regularizer_independence"),
    ("calculus", "kernel_of_d"),
    ("calculus", "rational_oracle"),
    ("calculus", "polynomial_product_rule"),
    ("calculus", "hinf_identity"),
    ("calculus", "hinf_s_consistency"),
    ("calculus", "hinf_rational_equivalence"),
    ("harness", "determinism"),
    ("harness", "coverage"),
];

pub(crate) const REGISTRY: &[CheckDef] = &[
    CheckDef {
        suite: Suite::Algebra,
        name: "hnum.assoc_norm",
        identity: "(ab)c = a(bc), |ab| = |a||b|",
        covers: &["qmul_associative_isometric"],
        run: hnum_assoc_norm,
    },
    CheckDef {
        suite: Suite::Algebra,
        name: "hnum.conj_antihom",
        identity: "conj(ab) = conj(b) conj(a)",
        covers: &["conj_antihomomorphism"],
        run: hnum_conj_antihom,
    },
    CheckDef {
        suite: Suite::Algebra,
        name: "hnum.unit_square",
        identity: "J^2 = -1",
        covers: &["unit_squares_to_minus_one"],
        run: hnum_unit_square,
    },
    CheckDef {
        suite: Suite::Algebra,
        name: "hnum.decompose_roundtrip",
        identity: "s = u + J v",
        covers: &["decompose_reconstructs"],
        run: hnum_decompose_roundtrip,
    },
    CheckDef {
        suite: Suite::Algebra,
        name: "hnum.sector_axial",
        identity: "membership in S_omega depends only on [s]",
        covers: &["sector_axially_symmetric"],
        run: hnum_sector_axial,
    },
    CheckDef {
        suite: Suite::Algebra,
        name: "sfun.representation",
        identity: "f(u +- J v) = alpha +- J beta",
        covers: &["representation_formula"],
        run: sfun_representation,
    },
    CheckDef {
        suite: Suite::Algebra,
        name: "sfun.intrinsic_slice",
        identity: "intrinsic f maps C_J into C_J",
        covers: &["intrinsic_preserves_slice"],
        run: sfun_intrinsic_slice,
    },
    CheckDef {
        suite: Suite::Algebra,
        name: "harness.coverage",
        identity: "every invariant is exercised by a registered check",
        covers: &["coverage"],
        run: harness_coverage,
    },
    CheckDef {
        suite: Suite::Algebra,
        name: "harness.determinism",
        identity: "same seed and config give identical outcomes for any thread count",
        covers: &["determinism"],
        run: harness_determinism,
    },
    CheckDef {
        suite: Suite::Resolvent,
        name: "qop.resolvent_axial",
        identity: "s in rho_S(T) implies [s] in rho_S(T)",
        covers: &["resolvent_set_axial"],
        run: qop_resolvent_axial,
    },
    CheckDef {
        suite: Suite::Resolvent,
        name: "qop.left_right_resolvent",
        identity: "S_L^{-1}(s,T) s - T S_L^{-1}(s,T) = I = s S_R^{-1}(s,T) - S_R^{-1}(s,T) T",
        covers: &["left_right_resolvent"],
        run: qop_left_right_resolvent,
    },
    CheckDef {
        suite: Suite::Resolvent,
        name: "qop.resolvent_equation",
        identity: "Q_s^{-1} S_L^{-1}(p,s) + S_R^{-1}(s,p) Q_p^{-1} = Q_s^{-1} S_L^{-1}(p,T) + S_R^{-1}(s,T̄) Q_p^{-1} \
                   = Q_s^{-1} S_L^{-1}(p,T̄) + S_R^{-1}(s,T) Q_p^{-1}",
        covers: &["resolvent_equation"],
        run: qop_resolvent_equation,
    },
    CheckDef {
        suite: Suite::Resolvent,
        name: "qop.kernel_identity",
        identity: "D S_L^{-1}(s,q) = -2 (s^2 - 2 q0 s + |q|^2)^{-1}",
        covers: &["kernel_differentiation"],
        run: qop_kernel_identity,
    },
    CheckDef {
        suite: Suite::Resolvent,
        name: "qop.pencil_conjugation",
        identity: "Q_{c,s}^{-1}(T) = Q_{c,s}^{-1}(T̄)",
        covers: &["pencil_conjugation"],
        run: qop_pencil_conjugation,
    },
    CheckDef {
        suite: Suite::Resolvent,
        name: "qop.estimate",
        identity: "||Q_{c,s}^{-1}(T)|| <= C / |s|^2 outside the sector",
        covers: &["resolvent_estimate"],
        run: qop_estimate,
    },
    CheckDef {
        suite: Suite::Independence,
        name: "contour.angle_independence",
        identity: "Df(T) does not depend on the contour angle",
        covers: &["angle_independence"],
        run: contour_angle_independence,
    },
    CheckDef {
        suite: Suite::Independence,
        name: "contour.unit_independence",
        identity: "Df(T) does not depend on the imaginary unit",
        covers: &["unit_independence"],
        run: contour_unit_independence,
    },
    CheckDef {
        suite: Suite::Independence,
        name: "contour.order_sanity",
        identity: "halving panels shrinks the level difference at least fourfold",
        covers: &["quadrature_order"],
        run: contour_order_sanity,
    },
    CheckDef {
        suite: Suite::Independence,
        name: "contour.operand_order",
        identity: "kernel ds_J f differs from f ds_J kernel for non-intrinsic f; left = right for intrinsic f",
        covers: &["operand_order"],
        run: contour_operand_order,
    },
    CheckDef {
        suite: Suite::Independence,
        name: "sfun.cauchy_reconstruction",
        identity: "f(q) = 1/(2 pi) ∮ S_L^{-1}(s,q) ds_J f(s)",
        covers: &["cauchy_reconstruction"],
        run: sfun_cauchy_reconstruction,
    },
    CheckDef {
        suite: Suite::Product,
        name: "calculus.product_rule",
        identity: "D(fg)(T) = Df(T) g(T) + f(T̄) Dg(T) = Df(T) g(T̄) + f(T) Dg(T)",
        covers: &["product_rule"],
        run: calculus_product_rule,
    },
    CheckDef {
        suite: Suite::Product,
        name: "calculus.commutant",
        identity: "B Df(T) = Df(T) B for B commuting with every T_j",
        covers: &["commutant"],
        run: calculus_commutant,
    },
    CheckDef {
        suite: Suite::Product,
        name: "calculus.mutual_commutation",
        identity: "g(T) Df(T) = Df(T) g(T)",
        covers: &["mutual_commutation"],
        run: calculus_mutual_commutation,
    },
    CheckDef {
        suite: Suite::Product,
        name: "calculus.linearity",
        identity: "D(f+g)(T) = Df(T) + Dg(T)",
        covers: &["linearity"],
        run: calculus_linearity,
    },
    CheckDef {
        suite: Suite::Product,
        name: "calculus.poly_product_rule",
        identity: "D(pq)[T] = Dp[T] q[T] + p[T̄] Dq[T]",
        covers: &["polynomial_product_rule"],
        run: calculus_poly_product_rule,
    },
    CheckDef {
        suite: Suite::Rational,
        name: "calculus.rational_oracle",
        identity: "Df(T) = (Dp[T] q[T] - p[T] Dq[T]) q[T]^{-1} q[T̄]^{-1}",
        covers: &["rational_oracle"],
        run: calculus_rational_oracle,
    },
    CheckDef {
        suite: Suite::Rational,
        name: "calculus.conjugation",
        identity: "Df(T̄) = Df(T)",
        covers: &["conjugation_invariance"],
        run: calculus_conjugation,
    },
    CheckDef {
        suite: Suite::Rational,
        name: "calculus.intrinsic_reality",
        identity: "intrinsic f gives a real-component Df(T)",
        covers: &["intrinsic_reality"],
        run: calculus_intrinsic_reality,
    },
    CheckDef {
        suite: Suite::Rational,
        name: "calculus.commuting_components",
        identity: "components of f(T) and Df(T) commute",
        covers: &["commuting_components"],
        run: calculus_commuting_components,
    },
    CheckDef {
        suite: Suite::Rational,
        name: "sfun.fd_vs_analytic",
        identity: "central differences of D f converge to the analytic value at O(h^2)",
        covers: &["fd_matches_analytic_d"],
        run: sfun_fd_vs_analytic,
    },
    CheckDef {
        suite: Suite::Hinf,
        name: "hinf.identity",
        identity: "D s (T) = -2 I",
        covers: &["hinf_identity"],
        run: hinf_identity,
    },
    CheckDef {
        suite: Suite::Hinf,
        name: "calculus.regularizer_independence",
        identity: "hinf_d with e_n and e_{n+1} agree",
        covers: &["regularizer_independence"],
        run: calculus_regularizer_independence,
    },
    CheckDef {
        suite: Suite::Hinf,
        name: "calculus.kernel_of_d",
        identity: "Df(T) = D(f + c)(T)",
        covers: &["kernel_of_d"],
        run: calculus_kernel_of_d,
    },
    CheckDef {
        suite: Suite::Hinf,
        name: "hinf.s_consistency",
        identity: "e(T)^{-1} (ef)(T) = f(T)",
        covers: &["hinf_s_consistency"],
        run: hinf_s_consistency,
    },
    CheckDef {
        suite: Suite::Hinf,
        name: "hinf.rational_equivalence",
        identity: "harmonic H-infinity value of p/q equals the closed form",
        covers: &["hinf_rational_equivalence"],
        run: hinf_rational_equivalence,
    },
];

pub(crate) fn find(name: &str) -> Option<&'static CheckDef> {
    REGISTRY.iter().find(|c| c.name == name)
}

// ---------------------------------------------------------------------------
// instance generation

fn catalog() -> Vec<(&'static str, OperatorSpec)> {
    let m: Vec<Vec<f64>> = (0..4usize)
        .map(|i| {
            (0..4)
                .map(|j| match i.abs_diff(j) {
                    0 => 2.0,
                    1 => 1.0,
                    _ => 0.0,
                })
                .collect()
        })
        .collect();
    vec![
        ("diag(2)", OperatorSpec::Diagonal { entries: vec![Quaternion::real(2.0)] }),
        ("diag(1+2e1)", OperatorSpec::Diagonal { entries: vec![Quaternion::new(1.0, 2.0, 0.0, 0.0)] }),
        (
            "diag(1+e1,3)",
            OperatorSpec::Diagonal {
                entries: vec![Quaternion::new(1.0, 1.0, 0.0, 0.0), Quaternion::real(3.0)],
            },
        ),
        ("diag(e1)", OperatorSpec::Diagonal { entries: vec![Quaternion::E1] }),
        (
            "poly4",
            OperatorSpec::PolyFamily {
                m,
                p: [vec![0.0, 1.0], vec![0.0, 0.3], vec![0.0, 0.0, 0.2], vec![0.0]],
            },
        ),
    ]
}

fn rand_quaternion(rng: &mut ChaCha8Rng, scale: f64) -> Quaternion {
    Quaternion::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

fn rand_unit(rng: &mut ChaCha8Rng) -> ImaginaryUnit {
    loop {
        let j: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (j[0] * j[0] + j[1] * j[1] + j[2] * j[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return ImaginaryUnit::normalized(j[0], j[1], j[2]).expect("nonzero direction");
        }
    }
}

/// `u + J v` with `u in [0.5, 4]` and argument below `pi/6`.
fn rand_sectorial_entry(rng: &mut ChaCha8Rng) -> Quaternion {
    let u = rng.gen_range(0.5..4.0);
    let v = rng.gen_range(0.0..u * (PI / 6.0).tan());
    rand_unit(rng).embed(Complex64::new(u, v))
}

fn rand_diagonal(rng: &mut ChaCha8Rng) -> (OperatorSpec, CommutingOperator) {
    let n = rng.gen_range(1..=4);
    let entries: Vec<Quaternion> = (0..n).map(|_| rand_sectorial_entry(rng)).collect();
    let spec = OperatorSpec::Diagonal { entries };
    let op = spec.build().expect("diagonal operators always build");
    (spec, op)
}

/// Case `i` of a random family: every fifth case reuses a catalog or configured operator.
fn rand_operator(ctx: &Ctx, rng: &mut ChaCha8Rng, i: usize) -> (OperatorSpec, CommutingOperator) {
    if i % 5 == 4 {
        let k = rng.gen_range(0..ctx.operators.len());
        let (_, spec, op) = &ctx.operators[k];
        (spec.clone(), op.clone())
    } else {
        rand_diagonal(rng)
    }
}

fn poly_from_roots_inv(cs: &[f64]) -> Poly {
    cs.iter()
        .fold(Poly::constant(1.0), |acc, &c| &acc * &Poly::new(vec![1.0, 1.0 / c]))
}

/// `s^2 (a0 + a1 s) / prod_k (1 + s / c_k)` with four factors, a member of the decaying class.
fn rand_psiq_parts(rng: &mut ChaCha8Rng) -> (Poly, Poly) {
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let a0 = sign * rng.gen_range(0.5..2.0);
    let a1 = rng.gen_range(-1.0..1.0);
    let cs: Vec<f64> = (0..4).map(|_| rng.gen_range(0.5..3.0)).collect();
    (Poly::new(vec![0.0, 0.0, a0, a1]), poly_from_roots_inv(&cs))
}

fn sector() -> Sector {
    Sector::new(DEFAULT_SECTOR).expect("default sector is valid")
}

fn rational_fn(p: &Poly, q: &Poly, tag: Option<ClassTag>) -> Result<StemFunction> {
    make_rational(&Rational::new(p.clone(), q.clone()), tag, sector())
}

fn rand_psiq(rng: &mut ChaCha8Rng) -> Result<(Value, StemFunction)> {
    let (p, q) = rand_psiq_parts(rng);
    let f = rational_fn(&p, &q, None)?;
    Ok((json!({"p": p.coeffs(), "q": q.coeffs()}), f))
}

/// A left slice function with quaternionic coefficients (not intrinsic).
fn rand_non_intrinsic(rng: &mut ChaCha8Rng) -> Result<(Value, StemFunction)> {
    let (p1, q1) = rand_psiq_parts(rng);
    let (p2, q2) = rand_psiq_parts(rng);
    let c1 = Quaternion::real(1.0) + rand_quaternion(rng, 0.5);
    let c2 = rand_quaternion(rng, 1.0);
    let terms = vec![
        Term {
            r: Rational::new(p1.clone(), q1.clone()),
            c: c1,
        },
        Term {
            r: Rational::new(p2.clone(), q2.clone()),
            c: c2,
        },
    ];
    let f = StemFunction::from_terms(terms, Side::Left, sector(), None, "non-intrinsic")?;
    Ok((
        json!({"terms": [[p1.coeffs(), q1.coeffs(), c1], [p2.coeffs(), q2.coeffs(), c2]]}),
        f,
    ))
}

/// A point of the resolvent set: argument at least `max_arg + 0.3`, modulus in `[0.1, 10]`.
fn rand_resolvent_point(rng: &mut ChaCha8Rng, max_arg: f64) -> Quaternion {
    let r = 10f64.powf(rng.gen_range(-1.0..1.0));
    let a = rng.gen_range((max_arg + 0.3).min(PI - 0.05)..PI);
    rand_unit(rng).embed(Complex64::from_polar(r, a))
}

fn rel(diff: f64, scale: f64) -> f64 {
    diff / scale.max(1e-300)
}

fn gap(a: &QMat, b: &QMat) -> f64 {
    (a - b).max_abs()
}

fn scale_of(ms: &[&QMat]) -> f64 {
    ms.iter().map(|m| m.max_abs()).fold(1.0, f64::max)
}

fn nodes_of(rs: &[&CalculusResult]) -> usize {
    rs.iter().map(|r| r.diagnostics.max_nodes).max().unwrap_or(0)
}

fn opts(tol: f64) -> CalcOptions {
    CalcOptions::default().with_tol(tol)
}

// ---------------------------------------------------------------------------
// algebra

const ALGEBRA_SAMPLES: usize = 1000;

fn hnum_assoc_norm(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for _ in 0..ALGEBRA_SAMPLES {
        let (a, b, c) = (rand_quaternion(rng, 2.0), rand_quaternion(rng, 2.0), rand_quaternion(rng, 2.0));
        let scale = a.abs() * b.abs() * c.abs();
        worst = worst.max(rel((qmul(qmul(a, b), c) - qmul(a, qmul(b, c))).abs(), scale));
        worst = worst.max(rel((qmul(a, b).abs() - a.abs() * b.abs()).abs(), a.abs() * b.abs()));
    }
    Ok(Outcome::new(worst, 1e-12, json!({"samples": ALGEBRA_SAMPLES})))
}

fn hnum_conj_antihom(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for _ in 0..ALGEBRA_SAMPLES {
        let (a, b) = (rand_quaternion(rng, 1.0), rand_quaternion(rng, 1.0));
        worst = worst.max((qmul(a, b).conj() - qmul(b.conj(), a.conj())).abs());
    }
    Ok(Outcome::new(worst, 1e-13, json!({"samples": ALGEBRA_SAMPLES})))
}

fn hnum_unit_square(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for _ in 0..ALGEBRA_SAMPLES {
        let j = rand_unit(rng).to_quaternion();
        worst = worst.max((qmul(j, j) + Quaternion::ONE).abs());
    }
    Ok(Outcome::new(worst, 1e-13, json!({"samples": ALGEBRA_SAMPLES})))
}

fn hnum_decompose_roundtrip(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for i in 0..ALGEBRA_SAMPLES {
        let mag = 10f64.powi(rng.gen_range(-3..4));
        let mut s = rand_quaternion(rng, mag);
        if i % 10 == 0 {
            s = Quaternion::real(s.s0);
        }
        let (u, v, j) = decompose(s);
        let back = Quaternion::real(u) + qmul(j.to_quaternion(), Quaternion::real(v));
        worst = worst.max(rel((back - s).max_abs(), s.abs().max(f64::MIN_POSITIVE)));
    }
    Ok(Outcome::new(worst, 2.0 * f64::EPSILON, json!({"samples": ALGEBRA_SAMPLES})))
}

fn hnum_sector_axial(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut disagreements = 0usize;
    for _ in 0..200 {
        let omega = rng.gen_range(0.05..PI - 0.05);
        let sec = Sector::new(omega)?;
        let s = rand_quaternion(rng, 3.0);
        let (u, v, _) = decompose(s);
        let verdict = in_sector(s, sec)?;
        for _ in 0..5 {
            let other = rand_unit(rng).embed(Complex64::new(u, v));
            if in_sector(other, sec)? != verdict {
                disagreements += 1;
            }
        }
    }
    Ok(Outcome::new(disagreements as f64, 0.0, json!({"points": 200, "units": 5})))
}

fn sfun_representation(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut inputs = Vec::new();
    for _ in 0..20 {
        let (desc, f) = rand_non_intrinsic(rng)?;
        inputs.push(desc);
        for _ in 0..10 {
            let u = rng.gen_range(0.1..3.0);
            let v = rng.gen_range(0.1..3.0);
            let j = rand_unit(rng);
            let plus = eval_slice(&f, j.embed(Complex64::new(u, v)))?;
            let minus = eval_slice(&f, j.embed(Complex64::new(u, -v)))?;
            let (alpha, beta) = f.alpha_beta(u, v);
            let jq = j.to_quaternion();
            let scale = alpha.abs().max(beta.abs()).max(1.0);
            worst = worst
                .max(rel((plus - (alpha + jq * beta)).abs(), scale))
                .max(rel((minus - (alpha - jq * beta)).abs(), scale))
                .max(rel(((plus + minus) * 0.5 - alpha).abs(), scale));
        }
    }
    Ok(Outcome::new(worst, 1e-13, json!(inputs)))
}

fn sfun_intrinsic_slice(_: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut inputs = Vec::new();
    for _ in 0..20 {
        let (desc, f) = rand_psiq(rng)?;
        inputs.push(desc);
        for _ in 0..10 {
            let j = rand_unit(rng);
            let z = Complex64::from_polar(rng.gen_range(0.1..5.0), rng.gen_range(-2.0..2.0));
            let w = eval_slice(&f, j.embed(z))?;
            let along = j.project(w);
            let off = (w - j.embed(along)).abs();
            worst = worst.max(rel(off, w.abs().max(1.0)));
        }
    }
    Ok(Outcome::new(worst, 1e-13, json!(inputs)))
}

fn harness_coverage(_: &Ctx, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let missing = coverage_gaps();
    let out = Outcome::new(missing.len() as f64, 0.0, json!({"invariants": INVARIANTS.len(), "checks": REGISTRY.len()}));
    if missing.is_empty() {
        Ok(out)
    } else {
        Ok(out.detail(format!("uncovered: {}", missing.join(", "))))
    }
}

/// Invariants not covered by any check, plus coverage claims naming unknown invariants.
pub(crate) fn coverage_gaps() -> Vec<String> {
    let mut gaps = Vec::new();
    for (module, id) in INVARIANTS {
        if !REGISTRY.iter().any(|c| c.covers.contains(id)) {
            gaps.push(format!("{module}.{id}"));
        }
    }
    for c in REGISTRY {
        for id in c.covers {
            if !INVARIANTS.iter().any(|(_, i)| i == id) {
                gaps.push(format!("{} claims unknown {id}", c.name));
            }
        }
    }
    gaps
}

const DETERMINISM_PROBES: [&str; 2] = ["qop.resolvent_equation", "calculus.linearity"];

fn harness_determinism(ctx: &Ctx, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut mismatches = 0usize;
    for name in DETERMINISM_PROBES {
        let def = find(name).expect("probe is registered");
        let run_with = |threads: usize| -> Result<Outcome> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| (def.run)(ctx, &mut super::check_rng(ctx.cfg.seed, name)))
        };
        let a = run_with(1)?;
        let b = run_with(3)?;
        if a.residual.to_bits() != b.residual.to_bits() || a.inputs != b.inputs || a.max_nodes != b.max_nodes {
            mismatches += 1;
        }
    }
    Ok(Outcome::new(mismatches as f64, 0.0, json!({"probes": DETERMINISM_PROBES, "threads": [1, 3]})))
}

// ---------------------------------------------------------------------------
// resolvent

fn qop_resolvent_axial(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut inputs = Vec::new();
    for i in 0..50 {
        let (spec, t) = rand_operator(ctx, rng, i);
        let max_arg = s_spectrum(&t)?.max_arg();
        let s = rand_resolvent_point(rng, max_arg);
        let (u, v, _) = decompose(s);
        let moved = rand_unit(rng).embed(Complex64::new(u, v));
        inputs.push(json!([spec, s, moved]));
        let id = QMat::identity(t.n());
        let a = pencil_solve(&t, s, &id)?;
        let b = pencil_solve(&t, moved, &id)?;
        worst = worst.max(rel((a.norm2() - b.norm2()).abs(), a.norm2()));
    }
    Ok(Outcome::new(worst, ctx.la(), json!(inputs)))
}

fn qop_left_right_resolvent(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut inputs = Vec::new();
    for i in 0..50 {
        let (spec, t) = rand_operator(ctx, rng, i);
        let max_arg = s_spectrum(&t)?.max_arg();
        let s = rand_resolvent_point(rng, max_arg);
        inputs.push(json!([spec, s]));
        let n = t.n();
        let tq = t.to_qmat();
        let id = QMat::identity(n);
        let sl = s_resolvent(&t, s, Side::Left)?;
        let sr = s_resolvent(&t, s, Side::Right)?;
        let scale = scale_of(&[&sl, &sr]) * (s.abs() + tq.max_abs());
        let left_eq = &sl.mul_right(s) - &(&tq * &sl);
        let right_eq = &sr.mul_left(s) - &(&sr * &tq);
        let pencil = t.pencil(s)?;
        let q = pencil.as_qmat();
        let shifted = &QMat::scalar(n, s) - &t.conj().to_qmat();
        worst = worst
            .max(rel(gap(&left_eq, &id), scale))
            .max(rel(gap(&right_eq, &id), scale))
            .max(rel(gap(&(&sl * &q), &(&q * &sr)), shifted.max_abs().max(1.0)))
            .max(rel(gap(&(&sl * &q), &shifted), shifted.max_abs().max(1.0)));
    }
    Ok(Outcome::new(worst, ctx.la(), json!(inputs)))
}

/// Largest relative disagreement among the kernel form, both operator forms and the closed form.
fn resolvent_equation_residual(t: &CommutingOperator, s: Quaternion, p: Quaternion) -> Result<f64> {
    let n = t.n();
    let tb = t.conj();
    let qs = t.pencil(s)?.inverse();
    let qp = t.pencil(p)?.inverse();
    let kernel = &qs.mul_right(cauchy_kernel_left(p, s)?) + &qp.mul_left(cauchy_kernel_right(s, p)?);
    let form1 = &(&qs * &s_resolvent(t, p, Side::Left)?) + &(&s_resolvent(&tb, s, Side::Right)? * &qp);
    let form2 = &(&qs * &s_resolvent(&tb, p, Side::Left)?) + &(&s_resolvent(t, s, Side::Right)? * &qp);
    let middle = &QMat::scalar(n, p + s) - &QMat::from_real(t.component(0)).scale(2.0);
    let closed = &(&qs * &middle) * &qp;
    let scale = scale_of(&[&kernel, &form1, &form2, &closed]);
    let worst = [gap(&kernel, &form1), gap(&kernel, &form2), gap(&form1, &form2), gap(&form1, &closed)]
        .into_iter()
        .fold(0.0, f64::max);
    Ok(rel(worst, scale))
}

fn qop_resolvent_equation(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let cases = ctx.cfg.resolvent_cases;
    let mut worst: f64 = 0.0;
    let mut inputs = Vec::with_capacity(cases);
    for i in 0..cases {
        let (spec, t) = rand_operator(ctx, rng, i);
        let max_arg = s_spectrum(&t)?.max_arg();
        let s = rand_resolvent_point(rng, max_arg);
        let p = loop {
            let p = rand_resolvent_point(rng, max_arg);
            if (p.re() - s.re()).abs() + (p.im_abs() - s.im_abs()).abs() > 1e-3 {
                break p;
            }
        };
        inputs.push(json!([spec, s, p]));
        worst = worst.max(resolvent_equation_residual(&t, s, p)?);
    }
    Ok(Outcome::new(worst, 10.0 * ctx.la(), json!(inputs)).detail(format!("{cases} cases")))
}

fn kernel_fd_error(s: Quaternion, q: Quaternion, h: f64) -> Result<f64> {
    let fd = cf_derivative_fd(|x| cauchy_kernel_left(s, x), q, h, Side::Left)?;
    let exact = crate::hnum::qinv(s * s - s * (2.0 * q.re()) + Quaternion::real(q.norm_sqr()))? * -2.0;
    Ok(rel((fd - exact).abs(), exact.abs().max(1.0)))
}

fn qop_kernel_identity(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut worst_order = f64::INFINITY;
    let mut inputs = Vec::new();
    for _ in 0..50 {
        let q = rand_sectorial_entry(rng);
        let s = rand_resolvent_point(rng, PI / 6.0) * 2.0;
        inputs.push(json!([s, q]));
        worst = worst.max(kernel_fd_error(s, q, 1e-4)?);
        let coarse = kernel_fd_error(s, q, 1e-2)?;
        let fine = kernel_fd_error(s, q, 5e-3)?;
        if coarse > 1e-11 {
            worst_order = worst_order.min((coarse / fine).log2());
        }
    }
    Ok(Outcome::new(worst, ctx.fd(), json!(inputs))
        .detail(format!("observed order {worst_order:.3}"))
        .require(worst_order >= 1.8, "finite differences do not converge at second order"))
}

fn qop_pencil_conjugation(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut mismatches = 0usize;
    let mut inputs = Vec::new();
    for i in 0..50 {
        let (spec, t) = rand_operator(ctx, rng, i);
        let s = rand_resolvent_point(rng, s_spectrum(&t)?.max_arg());
        inputs.push(json!([spec, s]));
        if t.pencil(s)?.inverse() != t.conj().pencil(s)?.inverse() {
            mismatches += 1;
        }
    }
    Ok(Outcome::new(mismatches as f64, 0.0, json!(inputs)))
}

/// Relative growth of the running maximum of `|s|^2 ||Q^{-1}||` over the last decade of radii.
fn estimate_growth(t: &CommutingOperator, theta: f64) -> Result<(f64, f64)> {
    let angles: Vec<f64> = (0..=4)
        .map(|k| theta + (PI - theta) * k as f64 / 4.0)
        .collect();
    let per_decade = 10;
    let profile = resolvent_profile(t, &angles, 1e-4, 1e4, per_decade)?;
    let mut growth: f64 = 0.0;
    let mut sup: f64 = 0.0;
    for &a in &angles {
        let ray: Vec<_> = profile.iter().filter(|x| x.angle == a).collect();
        let split = ray.len() - per_decade - 1;
        let before = ray[..=split].iter().map(|x| x.scaled_q).fold(0.0, f64::max);
        let after = ray.iter().map(|x| x.scaled_q).fold(0.0, f64::max);
        if !after.is_finite() {
            return Err(Error::NonFinite("resolvent profile".into()));
        }
        growth = growth.max(after / before - 1.0);
        sup = sup.max(after);
    }
    Ok((growth, sup))
}

fn qop_estimate(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut growth: f64 = 0.0;
    let mut sup: f64 = 0.0;
    let mut inputs = Vec::new();
    let mut ops: Vec<(OperatorSpec, CommutingOperator)> =
        ctx.operators.iter().map(|(_, s, o)| (s.clone(), o.clone())).collect();
    for _ in 0..10 {
        ops.push(rand_diagonal(rng));
    }
    for (spec, t) in &ops {
        let max_arg = s_spectrum(t)?.max_arg();
        let theta = max_arg + (0.5 * (PI - max_arg)).min(0.3);
        inputs.push(json!([spec, theta]));
        let (g, s) = estimate_growth(t, theta)?;
        growth = growth.max(g);
        sup = sup.max(s);
    }
    Ok(Outcome::new(growth, 0.01, json!(inputs))
        .detail(format!("largest sampled |s|^2 ||Q^-1|| = {sup:.4e}"))
        .require(growth < 0.01, "running maximum still grows over the last decade"))
}

// ---------------------------------------------------------------------------
// independence

/// `Df(T)` over a grid of angles (rows) and units (columns).
fn independence_grid(
    ctx: &Ctx,
    t: &CommutingOperator,
    f: &StemFunction,
    units: &[ImaginaryUnit],
) -> Result<(Vec<Vec<CalculusResult>>, Vec<f64>)> {
    let max_arg = s_spectrum(t)?.max_arg();
    let theta = f.sector().omega();
    let k = ctx.cfg.phi_samples;
    let phis: Vec<f64> = (0..k)
        .map(|i| max_arg + (theta - max_arg) * (i as f64 + 1.0) / (k as f64 + 1.0))
        .collect();
    let mut grid = Vec::new();
    for &phi in &phis {
        let mut row = Vec::new();
        for &unit in units {
            let o = CalcOptions {
                phi: Some(phi),
                unit,
                ..opts(ctx.quad())
            };
            row.push(d_calc(t, f, &o)?);
        }
        grid.push(row);
    }
    Ok((grid, phis))
}

fn independence_units(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Vec<ImaginaryUnit> {
    let mut units = vec![ImaginaryUnit::E1];
    while units.len() < ctx.cfg.unit_samples {
        units.push(rand_unit(rng));
    }
    units
}

fn independence_check(ctx: &Ctx, rng: &mut ChaCha8Rng, same_unit: bool) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    let mut cases: Vec<(Value, CommutingOperator, StemFunction)> = Vec::new();
    for i in 0..ctx.cfg.independence_cases {
        let (spec, t) = rand_operator(ctx, rng, i);
        let (desc, f) = rand_psiq(rng)?;
        cases.push((json!([spec, desc]), t, f));
    }
    for (fspec, f) in &ctx.functions {
        if f.certificate().class_tag == ClassTag::PsiQ {
            for (_, spec, t) in &ctx.operators {
                cases.push((json!([spec, fspec]), t.clone(), f.clone()));
            }
        }
    }
    for (desc, t, f) in &cases {
        let units = independence_units(ctx, rng);
        inputs.push(json!([desc, units]));
        let (grid, _) = independence_grid(ctx, t, f, &units)?;
        let flat: Vec<(usize, usize, &CalculusResult)> = grid
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, r)| (i, j, r)))
            .collect();
        for (a, &(ia, ja, ra)) in flat.iter().enumerate() {
            nodes = nodes.max(ra.diagnostics.max_nodes);
            for &(ib, jb, rb) in &flat[a + 1..] {
                let relevant = if same_unit { ja == jb && ia != ib } else { ia == ib && ja != jb };
                if !relevant {
                    continue;
                }
                let scale = scale_of(&[&ra.value, &rb.value]);
                worst = worst.max(rel(gap(&ra.value, &rb.value), scale));
            }
        }
    }
    // every plan runs at the same tolerance, so 3 (tol_1 + tol_2) = 6 tol
    Ok(Outcome::new(worst, 6.0 * ctx.quad(), json!(inputs))
        .nodes(nodes)
        .detail(format!("{} cases", cases.len())))
}

fn contour_angle_independence(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    independence_check(ctx, rng, true)
}

fn contour_unit_independence(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    independence_check(ctx, rng, false)
}

fn contour_order_sanity(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst_ratio = f64::INFINITY;
    let mut inputs = Vec::new();
    for _ in 0..10 {
        let (spec, t) = rand_diagonal(rng);
        let (desc, f) = rand_psiq(rng)?;
        inputs.push(json!([spec, desc]));
        let phi = 0.5 * (s_spectrum(&t)?.max_arg() + f.sector().omega());
        let consts = sector_certificate(&t, Sector::new(phi)?)?;
        let plan = plan_contour(f.certificate(), consts, phi, ImaginaryUnit::E1, ctx.quad(), KernelKind::Q)?;
        let level = |p: usize| {
            integrate_fixed(&plan, p, Kernel::Pencil(&t), &f, Side::Left, KernelKind::Q.prefactor())
        };
        let mut panels = (plan.panels / 4).max(1);
        let mut prev = level(panels)?;
        let mut mid = level(2 * panels)?;
        loop {
            let fine = level(4 * panels)?;
            let e1 = gap(&mid, &prev);
            let e2 = gap(&fine, &mid);
            let scale = fine.max_abs().max(1.0);
            // stop once the finer difference is at roundoff level
            if e2 <= 1e-12 * scale || panels >= 64 {
                break;
            }
            worst_ratio = worst_ratio.min(e1 / e2);
            panels *= 2;
            prev = mid;
            mid = fine;
        }
    }
    let residual = if worst_ratio.is_finite() { 1.0 / worst_ratio } else { 0.0 };
    Ok(Outcome::new(residual, 0.25, json!(inputs)).detail(format!("smallest reduction factor {worst_ratio:.3e}")))
}

/// Quadrature sums `Σ K w f` and `Σ f w K` over the accepted nodes of a `d_calc` run.
fn ordered_sums(t: &CommutingOperator, f: &StemFunction, res: &CalculusResult) -> Result<(QMat, QMat)> {
    let echo = res.plan.as_ref().expect("quadrature result has a plan");
    let phi = echo.phi;
    let consts = sector_certificate(t, Sector::new(phi)?)?;
    let mut plan = plan_contour(f.certificate(), consts, phi, echo.unit, 1.0, KernelKind::Q)?;
    plan.eps = echo.eps;
    plan.r_max = echo.r_max;
    let panels = echo.nodes / plan.node_count(1);
    let n = t.n();
    let pref = KernelKind::Q.prefactor();
    let mut kwf = QMat::zeros(n, n);
    let mut fwk = QMat::zeros(n, n);
    for node in plan.nodes_at(panels) {
        let k = t.pencil_in_slice(node.z, echo.unit)?.inverse();
        let w = node.weight_quaternion(echo.unit);
        let fz = f.eval_in_slice(node.z, echo.unit);
        kwf = &kwf + &k.mul_right(w * fz * pref);
        fwk = &fwk + &k.mul_left(fz * w * pref);
    }
    Ok((kwf, fwk))
}

fn contour_operand_order(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut intrinsic_gap: f64 = 0.0;
    let mut smallest_swap = f64::INFINITY;
    let mut assembly_gap: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for _ in 0..5 {
        let (spec, t) = rand_diagonal(rng);
        let (desc, f) = rand_non_intrinsic(rng)?;
        let (desc_i, g) = rand_psiq(rng)?;
        inputs.push(json!([spec, desc, desc_i]));
        let o = opts(ctx.quad());
        let left = d_calc(&t, &f, &o)?;
        let (kwf, fwk) = ordered_sums(&t, &f, &left)?;
        let scale = scale_of(&[&left.value]);
        assembly_gap = assembly_gap.max(rel(gap(&kwf, &left.value), scale));
        smallest_swap = smallest_swap.min(rel(gap(&kwf, &fwk), scale));

        let gl = d_calc(&t, &g, &o)?;
        let gr = d_calc(&t, &g.with_side(Side::Right), &CalcOptions { side: Side::Right, ..o })?;
        intrinsic_gap = intrinsic_gap.max(rel(gap(&gl.value, &gr.value), scale_of(&[&gl.value, &gr.value])));
        nodes = nodes.max(nodes_of(&[&left, &gl, &gr]));
    }
    Ok(Outcome::new(intrinsic_gap, 3.0 * ctx.quad(), json!(inputs))
        .nodes(nodes)
        .detail(format!(
            "smallest swap effect {smallest_swap:.3e}, manual assembly gap {assembly_gap:.3e}"
        ))
        .require(smallest_swap > 1e-3, "swapping the operand order left the result unchanged")
        .require(assembly_gap <= 3.0 * ctx.quad(), "manual kernel ds_J f assembly disagrees with d_calc"))
}

fn sfun_cauchy_reconstruction(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    const N: usize = 256;
    let mut worst: f64 = 0.0;
    let mut inputs = Vec::new();
    for k in 0..20 {
        let (desc, f) = if k % 2 == 0 { rand_psiq(rng)? } else { rand_non_intrinsic(rng)? };
        let q = rand_unit(rng).embed(Complex64::new(rng.gen_range(1.0..2.0), rng.gen_range(0.0..0.8)));
        let j = rand_unit(rng);
        inputs.push(json!([desc, q, j]));
        let centre = q.re();
        let radius = q.im_abs() + 0.1;
        let mut acc = Quaternion::ZERO;
        for i in 0..N {
            let t = 2.0 * PI * i as f64 / N as f64;
            let z = Complex64::new(centre, 0.0) + Complex64::from_polar(radius, t);
            let s = j.embed(z);
            let w = j.embed(Complex64::from_polar(radius, t)) * (2.0 * PI / N as f64);
            acc += cauchy_kernel_left(s, q)? * w * f.eval_in_slice(z, j);
        }
        let value = acc * (1.0 / (2.0 * PI));
        let exact = eval_slice(&f, q)?;
        worst = worst.max(rel((value - exact).abs(), exact.abs().max(1.0)));
    }
    Ok(Outcome::new(worst, ctx.quad(), json!(inputs)))
}

// ---------------------------------------------------------------------------
// product

fn calculus_product_rule(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let f = make_regularizer(3)?;
    let inner = opts(ctx.la());
    let mut worst_rule: f64 = 0.0;
    let mut worst_forms: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for _ in 0..ctx.cfg.random_operators {
        let (spec, t) = rand_diagonal(rng);
        let (desc, g) = rand_psiq(rng)?;
        inputs.push(json!([spec, desc]));
        let tb = t.conj();
        let fg = product(&f, &g)?;
        let d_fg = d_calc(&t, &fg, &inner)?;
        let df = d_calc(&t, &f, &inner)?;
        let dg = d_calc(&t, &g, &inner)?;
        let ft = s_calc(&t, &f, &inner)?;
        let ftb = s_calc(&tb, &f, &inner)?;
        let gt = s_calc(&t, &g, &inner)?;
        let gtb = s_calc(&tb, &g, &inner)?;
        let form_a = &(&df.value * &gt.value) + &(&ftb.value * &dg.value);
        let form_b = &(&df.value * &gtb.value) + &(&ft.value * &dg.value);
        let scale = scale_of(&[&d_fg.value, &form_a, &form_b]);
        worst_rule = worst_rule
            .max(rel(gap(&d_fg.value, &form_a), scale))
            .max(rel(gap(&d_fg.value, &form_b), scale));
        worst_forms = worst_forms.max(rel(gap(&form_a, &form_b), scale));
        nodes = nodes.max(nodes_of(&[&d_fg, &df, &dg, &ft, &ftb, &gt, &gtb]));
    }
    let forms_tol = 10.0 * ctx.la();
    Ok(Outcome::new(worst_rule, ctx.quad(), json!(inputs))
        .nodes(nodes)
        .detail(format!("forms gap {worst_forms:.3e}"))
        .require(worst_forms <= forms_tol, format!("right-hand forms differ by more than {forms_tol:e}")))
}

/// A real matrix polynomial in the components of `t`.
fn rand_commutant(rng: &mut ChaCha8Rng, t: &CommutingOperator) -> QMat {
    let n = t.n();
    let mut b = nalgebra::DMatrix::<f64>::identity(n, n) * rng.gen_range(-1.0..1.0);
    for a in 0..4 {
        b += t.component(a) * rng.gen_range(-1.0..1.0);
    }
    b += t.component(1) * t.component(2) * rng.gen_range(-1.0..1.0);
    b += t.component(0) * t.component(0) * rng.gen_range(-1.0..1.0);
    QMat::from_real(&b)
}

fn calculus_commutant(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for i in 0..ctx.cfg.random_operators {
        let (spec, t) = rand_operator(ctx, rng, i);
        let (desc, f) = rand_psiq(rng)?;
        inputs.push(json!([spec, desc]));
        let b = rand_commutant(rng, &t);
        let df = d_calc(&t, &f, &opts(ctx.quad()))?;
        let scale = b.max_abs().max(1.0) * df.value.max_abs().max(1.0);
        worst = worst.max(rel(gap(&(&b * &df.value), &(&df.value * &b)), scale));
        nodes = nodes.max(df.diagnostics.max_nodes);
    }
    Ok(Outcome::new(worst, 10.0 * ctx.la(), json!(inputs)).nodes(nodes))
}

fn calculus_mutual_commutation(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for i in 0..ctx.cfg.random_operators {
        let (spec, t) = rand_operator(ctx, rng, i);
        let (df_desc, f) = rand_psiq(rng)?;
        let (g_desc, g) = rand_psiq(rng)?;
        inputs.push(json!([spec, df_desc, g_desc]));
        let o = opts(ctx.quad());
        let df = d_calc(&t, &f, &o)?;
        let gt = s_calc(&t, &g, &o)?;
        let scale = df.value.max_abs().max(1.0) * gt.value.max_abs().max(1.0);
        worst = worst.max(rel(gap(&(&gt.value * &df.value), &(&df.value * &gt.value)), scale));
        nodes = nodes.max(nodes_of(&[&df, &gt]));
    }
    Ok(Outcome::new(worst, 10.0 * ctx.la(), json!(inputs)).nodes(nodes))
}

fn calculus_linearity(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for i in 0..ctx.cfg.random_operators {
        let (spec, t) = rand_operator(ctx, rng, i);
        let (fd, f) = rand_psiq(rng)?;
        let (gd, g) = rand_psiq(rng)?;
        inputs.push(json!([spec, fd, gd]));
        let o = opts(ctx.quad());
        let dsum = d_calc(&t, &sum(&f, &g)?, &o)?;
        let df = d_calc(&t, &f, &o)?;
        let dg = d_calc(&t, &g, &o)?;
        let parts = &df.value + &dg.value;
        worst = worst.max(rel(gap(&dsum.value, &parts), scale_of(&[&dsum.value, &df.value, &dg.value])));
        nodes = nodes.max(nodes_of(&[&dsum, &df, &dg]));
    }
    Ok(Outcome::new(worst, 3.0 * ctx.quad(), json!(inputs)).nodes(nodes))
}

fn rand_poly(rng: &mut ChaCha8Rng) -> Poly {
    let deg = rng.gen_range(0..=4);
    Poly::new((0..=deg).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

fn calculus_poly_product_rule(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut inputs = Vec::new();
    for i in 0..4 * ctx.cfg.random_operators {
        let (spec, t) = rand_operator(ctx, rng, i);
        let (p, q) = (rand_poly(rng), rand_poly(rng));
        inputs.push(json!([spec, p.coeffs(), q.coeffs()]));
        let lhs = d_poly_calc(&(&p * &q), &t);
        let a = &d_poly_calc(&p, &t) * &poly_calc(&q, &t);
        let b = &poly_calc(&p, &t.conj()) * &d_poly_calc(&q, &t);
        let rhs = &a + &b;
        worst = worst.max(rel(gap(&lhs, &rhs), scale_of(&[&lhs, &a, &b])));
    }
    Ok(Outcome::new(worst, ctx.la(), json!(inputs)))
}

// ---------------------------------------------------------------------------
// rational

/// `(p, q)` of a configured function when it is a single real rational.
fn spec_parts(spec: &FunctionSpec) -> Option<(Poly, Poly)> {
    match spec {
        FunctionSpec::Rational { p, q, .. } => Some((Poly::new(p.clone()), Poly::new(q.clone()))),
        FunctionSpec::Regularizer { n } => {
            Some((Poly::monomial(*n as usize), Poly::linear_power(1.0, 1.0, 2 * *n as usize - 1)))
        }
        FunctionSpec::Monomial { degree } => Some((Poly::monomial(*degree as usize), Poly::constant(1.0))),
    }
}

fn calculus_rational_oracle(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let tol = ctx.quad() / 10.0;
    let mut worst: f64 = 0.0;
    let mut worst_case = String::new();
    let mut nodes = 0;
    let mut inputs = Vec::new();
    let mut cases: Vec<(String, CommutingOperator, Poly, Poly)> = Vec::new();
    let (p0, q0) = (Poly::monomial(2), Poly::linear_power(1.0, 1.0, 3));
    for label in ["diag(2)", "diag(1+2e1)", "poly4"] {
        cases.push((label.into(), ctx.catalog_op(label).clone(), p0.clone(), q0.clone()));
    }
    for (fspec, f) in &ctx.functions {
        if f.certificate().class_tag != ClassTag::PsiQ {
            continue;
        }
        if let Some((p, q)) = spec_parts(fspec) {
            for (label, _, t) in &ctx.operators {
                cases.push((label.clone(), t.clone(), p.clone(), q.clone()));
            }
        }
    }
    for i in 0..ctx.cfg.random_operators {
        let (_, t) = rand_operator(ctx, rng, i);
        let (p, q) = rand_psiq_parts(rng);
        cases.push((format!("random[{i}]"), t, p, q));
    }
    for (label, t, p, q) in &cases {
        inputs.push(json!([label, p.coeffs(), q.coeffs()]));
        let f = rational_fn(p, q, None)?;
        let oracle = rational_d(p, q, t)?;
        let quad = d_calc(t, &f, &opts(tol))?;
        let r = rel(gap(&quad.value, &oracle.form1), scale_of(&[&oracle.form1]));
        if r > worst {
            worst = r;
            worst_case = label.clone();
        }
        nodes = nodes.max(quad.diagnostics.max_nodes);
    }

    let f0 = rational_fn(&p0, &q0, None)?;
    let pinned_zero = d_calc(ctx.catalog_op("diag(2)"), &f0, &opts(tol))?;
    let pinned_half = d_calc(ctx.catalog_op("diag(e1)"), &f0, &opts(tol))?;
    let zero_err = pinned_zero.value.max_abs();
    let half_err = gap(&pinned_half.value, &QMat::scalar(1, Quaternion::real(-0.5)));
    nodes = nodes.max(nodes_of(&[&pinned_zero, &pinned_half]));
    Ok(Outcome::new(worst, 10.0 * tol, json!(inputs))
        .nodes(nodes)
        .detail(format!(
            "worst case {worst_case}; pinned diag(2) -> 0 off by {zero_err:.3e}, diag(e1) -> -1/2 off by {half_err:.3e}"
        ))
        .require(zero_err <= 10.0 * tol, "pinned value 0 at diag(2) missed")
        .require(half_err <= 10.0 * tol, "pinned value -1/2 at diag(e1) missed"))
}

fn calculus_conjugation(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut mismatches = 0usize;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for i in 0..ctx.cfg.random_operators {
        let (spec, t) = rand_operator(ctx, rng, i);
        let (desc, f) = if i % 2 == 0 { rand_psiq(rng)? } else { rand_non_intrinsic(rng)? };
        inputs.push(json!([spec, desc]));
        let o = opts(ctx.quad());
        let a = d_calc(&t, &f, &o)?;
        let b = d_calc(&t.conj(), &f, &o)?;
        if a.value != b.value {
            mismatches += 1;
        }
        nodes = nodes.max(nodes_of(&[&a, &b]));
    }
    Ok(Outcome::new(mismatches as f64, 0.0, json!(inputs)).nodes(nodes))
}

fn calculus_intrinsic_reality(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for i in 0..ctx.cfg.random_operators + ctx.operators.len() {
        let (spec, t) = match ctx.operators.get(i) {
            Some((_, spec, t)) => (spec.clone(), t.clone()),
            None => rand_diagonal(rng),
        };
        let (desc, f) = rand_psiq(rng)?;
        inputs.push(json!([spec, desc]));
        let df = d_calc(&t, &f, &opts(ctx.quad()))?;
        worst = worst.max(rel(df.value.max_imaginary(), df.value.max_abs().max(1.0)));
        nodes = nodes.max(df.diagnostics.max_nodes);
    }
    Ok(Outcome::new(worst, ctx.la(), json!(inputs)).nodes(nodes))
}

fn calculus_commuting_components(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for i in 0..ctx.cfg.random_operators {
        let (spec, t) = rand_operator(ctx, rng, i);
        let (desc, f) = if i % 2 == 0 { rand_psiq(rng)? } else { rand_non_intrinsic(rng)? };
        inputs.push(json!([spec, desc]));
        let o = opts(ctx.quad());
        let df = d_calc(&t, &f, &o)?;
        let ft = s_calc(&t, &f, &o)?;
        for r in [&df, &ft] {
            worst = worst.max(commutator_residual(&r.value));
        }
        nodes = nodes.max(nodes_of(&[&df, &ft]));
    }
    Ok(Outcome::new(worst, 10.0 * ctx.la(), json!(inputs)).nodes(nodes))
}

/// Largest `||C_a C_b - C_b C_a||_F` over component pairs, relative to the largest squared component norm.
fn commutator_residual(m: &QMat) -> f64 {
    let c = m.components();
    let scale = c.iter().map(|x| x.norm()).fold(1e-300, f64::max);
    let mut worst: f64 = 0.0;
    for a in 0..4 {
        for b in a + 1..4 {
            worst = worst.max((&c[a] * &c[b] - &c[b] * &c[a]).norm());
        }
    }
    worst / (scale * scale)
}

fn sfun_fd_vs_analytic(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut worst_order = f64::INFINITY;
    let mut inputs = Vec::new();
    for _ in 0..20 {
        let (desc, f) = rand_psiq(rng)?;
        let q = rand_unit(rng).embed(Complex64::new(rng.gen_range(0.5..2.0), rng.gen_range(0.1..1.0)));
        inputs.push(json!([desc, q]));
        let exact = spherical_cf_derivative(&f, q)?;
        let err = |h: f64| -> Result<f64> {
            let fd = cf_derivative_fd(|x| eval_slice(&f, x), q, h, Side::Left)?;
            Ok(rel((fd - exact).abs(), exact.abs().max(1.0)))
        };
        worst = worst.max(err(1e-4)?);
        let coarse = err(1e-2)?;
        let fine = err(5e-3)?;
        if coarse > 1e-11 {
            worst_order = worst_order.min((coarse / fine).log2());
        }
    }
    Ok(Outcome::new(worst, ctx.fd(), json!(inputs))
        .detail(format!("observed order {worst_order:.3}"))
        .require(worst_order >= 1.8, "finite differences do not converge at second order"))
}

// ---------------------------------------------------------------------------
// hinf

fn hinf_identity(ctx: &Ctx, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let f = crate::sfun::make_monomial(1)?;
    let mut worst: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for (label, _, t) in &ctx.operators {
        inputs.push(json!(label));
        let r = hinf_d(t, &f, &opts(ctx.quad()))?;
        worst = worst.max(gap(&r.value, &QMat::scalar(t.n(), Quaternion::real(-2.0))) / 2.0);
        worst_gap = worst_gap.max(r.form_gap.unwrap_or(f64::INFINITY));
        nodes = nodes.max(r.diagnostics.max_nodes);
    }
    let gap_tol = ctx.quad() / 10.0;
    Ok(Outcome::new(worst, ctx.quad(), json!(inputs))
        .nodes(nodes)
        .detail(format!("largest form gap {worst_gap:.3e}"))
        .require(worst_gap <= gap_tol, format!("forms differ by more than {gap_tol:e}")))
}

fn hinf_functions() -> Result<Vec<(&'static str, StemFunction)>> {
    Ok(vec![
        ("s", crate::sfun::make_monomial(1)?),
        ("s^2", crate::sfun::make_monomial(2)?),
        (
            "(1+s^3)/(2+s)",
            rational_fn(&Poly::new(vec![1.0, 0.0, 0.0, 1.0]), &Poly::new(vec![2.0, 1.0]), None)?,
        ),
    ])
}

fn calculus_regularizer_independence(ctx: &Ctx, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let tol = ctx.quad();
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for (fl, f) in hinf_functions()? {
        let n = crate::calculus::default_regularizer_power(f.certificate().alpha_exp);
        let (e1, e2) = (make_regularizer(n)?, make_regularizer(n + 1)?);
        for (label, _, t) in &ctx.operators {
            inputs.push(json!([fl, label, n]));
            let a = hinf_d_with(t, &f, &e1, &opts(tol))?;
            let b = hinf_d_with(t, &f, &e2, &opts(tol))?;
            worst = worst.max(rel(gap(&a.value, &b.value), scale_of(&[&a.value, &b.value])));
            nodes = nodes.max(nodes_of(&[&a, &b]));
        }
    }
    Ok(Outcome::new(worst, 3.0 * tol, json!(inputs)).nodes(nodes))
}

fn calculus_kernel_of_d(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let tol = ctx.quad();
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for (fl, f) in hinf_functions()? {
        let g = add_constant(&f, 1.0)?;
        for (label, _, t) in &ctx.operators {
            inputs.push(json!([fl, label]));
            let a = hinf_d(t, &f, &opts(tol))?;
            let b = hinf_d(t, &g, &opts(tol))?;
            worst = worst.max(rel(gap(&a.value, &b.value), scale_of(&[&a.value, &b.value])));
            nodes = nodes.max(nodes_of(&[&a, &b]));
        }
    }
    // a decaying function shifted by a constant leaves the decaying class
    let (p, q) = rand_psiq_parts(rng);
    let shifted = &p + &q;
    let rejected = matches!(
        rational_fn(&shifted, &q, Some(ClassTag::PsiQ)),
        Err(Error::HypothesisViolation { .. })
    ) && matches!(
        d_calc(ctx.catalog_op("diag(2)"), &rational_fn(&shifted, &q, None)?, &opts(tol)),
        Err(Error::ClassMismatch { .. })
    );
    Ok(Outcome::new(worst, 3.0 * tol, json!([inputs, [p.coeffs(), q.coeffs()]]))
        .nodes(nodes)
        .require(rejected, "f + 1 was accepted by the decaying-class calculus"))
}

fn hinf_s_consistency(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let tol = ctx.quad();
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    for (label, _, t) in &ctx.operators {
        let (desc, g) = rand_psiq(rng)?;
        inputs.push(json!([label, desc]));
        let a = hinf_s(t, &g, &opts(tol))?;
        let b = s_calc(t, &g, &opts(tol))?;
        worst = worst.max(rel(gap(&a.value, &b.value), scale_of(&[&a.value, &b.value])));
        for (_, f) in hinf_functions()? {
            let r = hinf_s(t, &f, &opts(tol))?;
            let oracle = f
                .terms()
                .iter()
                .map(|term| rational_calc(&term.r, t).map(|m| m.mul_right(term.c)))
                .try_fold(QMat::zeros(t.n(), t.n()), |acc, m| m.map(|m| &acc + &m))?;
            worst = worst.max(rel(gap(&r.value, &oracle), scale_of(&[&oracle])));
            nodes = nodes.max(r.diagnostics.max_nodes);
        }
        nodes = nodes.max(nodes_of(&[&a, &b]));
    }
    Ok(Outcome::new(worst, 3.0 * tol, json!(inputs)).nodes(nodes))
}

fn hinf_rational_equivalence(ctx: &Ctx, _: &mut ChaCha8Rng) -> Result<Outcome> {
    let tol = ctx.quad();
    let mut worst: f64 = 0.0;
    let mut nodes = 0;
    let mut inputs = Vec::new();
    let mut funcs: Vec<(Value, Poly, Poly)> = vec![
        (json!("s^2"), Poly::monomial(2), Poly::constant(1.0)),
        (
            json!("(1+s^3)/(2+s)"),
            Poly::new(vec![1.0, 0.0, 0.0, 1.0]),
            Poly::new(vec![2.0, 1.0]),
        ),
        (json!("(1+s)/(3+s)"), Poly::new(vec![1.0, 1.0]), Poly::new(vec![3.0, 1.0])),
    ];
    for (spec, f) in &ctx.functions {
        if f.certificate().class_tag != ClassTag::PsiQ {
            if let Some((p, q)) = spec_parts(spec) {
                funcs.push((json!(spec), p, q));
            }
        }
    }
    for (desc, p, q) in &funcs {
        let f = rational_fn(p, q, None)?;
        for (label, _, t) in &ctx.operators {
            inputs.push(json!([desc, label]));
            let r = hinf_d(t, &f, &opts(tol))?;
            let oracle = rational_d(p, q, t)?;
            worst = worst.max(rel(gap(&r.value, &oracle.form1), scale_of(&[&oracle.form1])));
            nodes = nodes.max(r.diagnostics.max_nodes);
        }
    }
    Ok(Outcome::new(worst, 3.0 * tol, json!(inputs)).nodes(nodes))
}
