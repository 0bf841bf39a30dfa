//! Quadrature along the sector boundary `∂(S_φ ∩ C_J)`.
//!
//! The path is `γ(t) = -t e^{Jφ}` for `t < 0` and `t e^{-Jφ}` for `t > 0`:
//! the upper ray is traversed inward, the lower ray outward. On each ray the
//! radius is substituted as `r = e^x` and integrated with composite 16-point
//! Gauss–Legendre panels; the two tails `(0, ε)` and `(R, ∞)` are dropped and
//! bounded analytically from the decay certificate.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hnum::{ImaginaryUnit, Quaternion};
use crate::linalg::{KahanAccumulator, QMat};
use crate::qop::{CommutingOperator, SectorCertificate, Side};
use crate::sfun::{ClassTag, DecayCertificate, StemFunction};

/// Default node budget per integral.
pub const DEFAULT_MAX_NODES: usize = 1 << 20;
const GL_ORDER: usize = 16;
/// Largest panel width in `log r` used for a plan.
const MAX_PANEL_WIDTH: f64 = 2.0;

/// Nodes and weights of the 16-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre() -> &'static [(f64, f64); GL_ORDER] {
    static RULE: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = [(0.0, 0.0); GL_ORDER];
        for i in 0..n / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule[i] = (-x, w);
            rule[n - 1 - i] = (x, w);
        }
        rule
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    /// `S_L^{-1}(s,T)` / `S_R^{-1}(s,T)`, decaying like `1/|s|`.
    S,
    /// `Q_{c,s}^{-1}(T)`, decaying like `1/|s|^2`.
    Q,
}

impl KernelKind {
    /// Prefactor of the corresponding calculus.
    pub fn prefactor(self) -> f64 {
        match self {
            Self::S => 1.0 / (2.0 * PI),
            Self::Q => -1.0 / PI,
        }
    }
}

/// A point on the path with its weight `γ'(t)/J · dt` (already including the Jacobian and
/// the quadrature weight), both in slice coordinates of `C_J`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourNode {
    pub z: Complex64,
    pub weight: Complex64,
}

impl ContourNode {
    pub fn point(&self, unit: ImaginaryUnit) -> Quaternion {
        unit.embed(self.z)
    }

    pub fn weight_quaternion(&self, unit: ImaginaryUnit) -> Quaternion {
        unit.embed(self.weight)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContourPlan {
    pub phi: f64,
    #[serde(rename = "J")]
    pub unit: ImaginaryUnit,
    pub eps: f64,
    #[serde(rename = "R")]
    pub r_max: f64,
    pub panels: usize,
    pub est_tail: f64,
    pub tol: f64,
    pub max_nodes: usize,
    pub kind: KernelKind,
}

impl ContourPlan {
    pub fn node_count(&self, panels: usize) -> usize {
        2 * GL_ORDER * panels
    }

    /// Nodes for `panels` panels per ray: upper ray first, then lower ray, radii increasing.
    pub fn nodes_at(&self, panels: usize) -> Vec<ContourNode> {
        let rule = gauss_legendre();
        let (a, b) = (self.eps.ln(), self.r_max.ln());
        let width = (b - a) / panels as f64;
        let up = Complex64::from_polar(1.0, self.phi);
        let down = up.conj();
        let i = Complex64::new(0.0, 1.0);
        // ds_J weights: J e^{Jφ} on the upper ray, -J e^{-Jφ} on the lower one
        let (w_up, w_down) = (i * up, -i * down);
        let mut out = Vec::with_capacity(self.node_count(panels));
        for (dir, wdir) in [(up, w_up), (down, w_down)] {
            for p in 0..panels {
                let mid = a + width * (p as f64 + 0.5);
                for &(x, w) in rule.iter() {
                    let r = (mid + 0.5 * width * x).exp();
                    out.push(ContourNode {
                        z: dir * r,
                        weight: wdir * (r * 0.5 * width * w),
                    });
                }
            }
        }
        out
    }

    pub fn nodes(&self) -> Vec<ContourNode> {
        self.nodes_at(self.panels)
    }
}

/// Tail constant `A` with `|integrand| <= A/2 · t^{α-1}` near 0 and `A/2 · t^{-1-α}` near infinity per ray.
fn tail_constant(cert: &DecayCertificate, consts: &SectorCertificate, kind: KernelKind) -> f64 {
    let ck = match kind {
        KernelKind::S => consts.c_theta,
        KernelKind::Q => consts.c_theta_q,
    };
    2.0 * kind.prefactor().abs() * ck * cert.c_alpha
}

/// Certificate in the class matching the kernel.
pub fn certificate_for(cert: &DecayCertificate, kind: KernelKind) -> Result<DecayCertificate> {
    match (kind, cert.class_tag) {
        (KernelKind::S, _) => cert.as_psi(),
        (KernelKind::Q, ClassTag::PsiQ) => Ok(*cert),
        (KernelKind::Q, found) => Err(Error::ClassMismatch {
            expected: "PsiQ".into(),
            found: found.to_string(),
        }),
    }
}

pub fn plan_contour(
    cert: &DecayCertificate,
    consts: SectorCertificate,
    phi: f64,
    unit: ImaginaryUnit,
    tol: f64,
    kind: KernelKind,
) -> Result<ContourPlan> {
    plan_contour_with_budget(cert, consts, phi, unit, tol, kind, DEFAULT_MAX_NODES)
}

pub fn plan_contour_with_budget(
    cert: &DecayCertificate,
    consts: SectorCertificate,
    phi: f64,
    unit: ImaginaryUnit,
    tol: f64,
    kind: KernelKind,
    max_nodes: usize,
) -> Result<ContourPlan> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tol}")));
    }
    if !(phi > 0.0 && phi < PI) {
        return Err(Error::InvalidSector(phi));
    }
    let cert = certificate_for(cert, kind)?;
    let alpha = cert.alpha_exp;
    let a = tail_constant(&cert, &consts, kind);
    if !a.is_finite() {
        return Err(Error::NonFinite("tail constant".into()));
    }
    // A ε^α / α < tol/4 and A R^{-α} / α < tol/4
    let (eps, r_max) = if a == 0.0 {
        (0.5, 2.0)
    } else {
        let x = (0.99 * alpha * tol / (4.0 * a)).powf(1.0 / alpha);
        (x.min(0.5), (1.0 / x).max(2.0))
    };
    let est_tail = a * (eps.powf(alpha) + r_max.powf(-alpha)) / alpha;

    let span = (r_max / eps).ln();
    let mut panels = (span / MAX_PANEL_WIDTH).ceil().max(1.0) as usize;
    // refine on the certificate envelope
    let kernel_power = match kind {
        KernelKind::S => 1.0,
        KernelKind::Q => 2.0,
    };
    let envelope = |x: f64| {
        let t = x.exp();
        a * cert.envelope(t) / t.powf(kernel_power) * t
    };
    let integrate = |p: usize| -> f64 {
        let width = span / p as f64;
        let mut acc = 0.0;
        for k in 0..p {
            let mid = eps.ln() + width * (k as f64 + 0.5);
            for &(x, w) in gauss_legendre() {
                acc += envelope(mid + 0.5 * width * x) * 0.5 * width * w;
            }
        }
        acc
    };
    let mut prev = integrate(panels);
    loop {
        if 2 * GL_ORDER * panels * 2 > max_nodes {
            return Err(Error::UnreachableTolerance {
                tol,
                nodes: max_nodes,
                estimate: f64::NAN,
            });
        }
        let next = integrate(2 * panels);
        if (next - prev).abs() < tol / 2.0 * next.abs().max(1.0) {
            break;
        }
        prev = next;
        panels *= 2;
    }
    Ok(ContourPlan {
        phi,
        unit,
        eps,
        r_max,
        panels,
        est_tail,
        tol,
        max_nodes,
        kind,
    })
}

/// The operator-valued part of the integrand.
#[derive(Clone, Copy)]
pub enum Kernel<'a> {
    /// `Q_{c,s}^{-1}(T)`.
    Pencil(&'a CommutingOperator),
    /// `S_L^{-1}(s,T)` for left assembly, `S_R^{-1}(s,T)` for right assembly.
    SResolvent(&'a CommutingOperator),
    /// Any quaternionic matrix-valued kernel, evaluated node by node in full quaternion arithmetic.
    Generic(&'a (dyn Fn(Quaternion) -> Result<QMat> + Sync)),
}

/// Echo of the plan that produced a value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanEcho {
    pub phi: f64,
    #[serde(rename = "J")]
    pub unit: ImaginaryUnit,
    pub eps: f64,
    #[serde(rename = "R")]
    pub r_max: f64,
    /// Nodes of the accepted refinement level.
    pub nodes: usize,
    /// Nodes evaluated over all refinement levels.
    pub nodes_evaluated: usize,
    pub est_tail: f64,
    pub est_quad_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Default)]
pub struct Diagnostics {
    /// Number of contour integrals behind the value.
    pub integrals: usize,
    /// Largest number of nodes spent on a single integral, over all its refinement levels.
    pub max_nodes: usize,
    pub nodes_evaluated: usize,
    pub residuals: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalculusResult {
    pub value: QMat,
    pub est_error: f64,
    pub form_gap: Option<f64>,
    pub plan: Option<PlanEcho>,
    pub diagnostics: Diagnostics,
}

impl CalculusResult {
    /// A closed-form value carrying no quadrature error.
    pub fn exact(value: QMat) -> Self {
        Self {
            value,
            est_error: 0.0,
            form_gap: None,
            plan: None,
            diagnostics: Diagnostics::default(),
        }
    }

    /// Merges the bookkeeping of the integrals a derived value depends on.
    pub fn absorb(&mut self, other: &CalculusResult) {
        self.diagnostics.integrals += other.diagnostics.integrals;
        self.diagnostics.max_nodes = self.diagnostics.max_nodes.max(other.diagnostics.max_nodes);
        self.diagnostics.nodes_evaluated += other.diagnostics.nodes_evaluated;
        if self.plan.is_none() {
            self.plan = other.plan.clone();
        }
    }
}

/// Compensated sum of complex matrices.
struct ComplexKahan {
    sum: DMatrix<Complex64>,
    comp: DMatrix<Complex64>,
}

impl ComplexKahan {
    fn new(n: usize, m: usize) -> Self {
        Self {
            sum: DMatrix::zeros(n, m),
            comp: DMatrix::zeros(n, m),
        }
    }

    fn add(&mut self, x: &DMatrix<Complex64>) {
        for k in 0..x.len() {
            for part in 0..2 {
                let pick = |c: Complex64| if part == 0 { c.re } else { c.im };
                let (s, c) = (pick(self.sum[k]), pick(self.comp[k]));
                let y = pick(x[k]) - c;
                let t = s + y;
                let nc = (t - s) - y;
                if part == 0 {
                    self.sum[k].re = t;
                    self.comp[k].re = nc;
                } else {
                    self.sum[k].im = t;
                    self.comp[k].im = nc;
                }
            }
        }
    }
}

fn singular(e: Error) -> Error {
    match e {
        Error::SpectralPoint { .. } => Error::KernelSingular(Box::new(e)),
        other => other,
    }
}

/// One refinement level of the integral.
fn integrate_level(
    nodes: &[ContourNode],
    unit: ImaginaryUnit,
    kernel: Kernel<'_>,
    f: &StemFunction,
    side: Side,
    prefactor: f64,
) -> Result<QMat> {
    let fast = f.is_intrinsic() || f.side() == side;
    match kernel {
        Kernel::Pencil(t) | Kernel::SResolvent(t) if fast => {
            let with_z = matches!(kernel, Kernel::SResolvent(_));
            let n = t.n();
            let terms = f.terms().len();
            // per node and term: pref·Q^{-1}·w·r_k(z) and (for S) the same times z
            let parts: Vec<Vec<DMatrix<Complex64>>> = nodes
                .par_iter()
                .map(|node| {
                    let pencil = t.pencil_in_slice(node.z, unit).map_err(singular)?;
                    let qi = pencil.inverse_complex();
                    let base = node.weight * prefactor;
                    let mut out = Vec::with_capacity(terms * 2);
                    for rk in f.term_values(node.z) {
                        let m = qi * (base * rk);
                        if with_z {
                            out.push(&m * node.z);
                        }
                        out.push(m);
                    }
                    if out.iter().any(|m| m.iter().any(|c| !(c.re.is_finite() && c.im.is_finite()))) {
                        return Err(Error::NonFinite(format!("integrand at {}", node.z)));
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            let slots = if with_z { 2 * terms } else { terms };
            let mut acc: Vec<ComplexKahan> = (0..slots).map(|_| ComplexKahan::new(n, n)).collect();
            for p in &parts {
                for (a, m) in acc.iter_mut().zip(p) {
                    a.add(m);
                }
            }
            let tbar = t.conj().to_qmat();
            let mut value = QMat::zeros(n, n);
            for (k, term) in f.terms().iter().enumerate() {
                let op = if with_z {
                    let zq = QMat::from_complex(&acc[2 * k].sum, unit);
                    let q = QMat::from_complex(&acc[2 * k + 1].sum, unit);
                    match side {
                        Side::Left => &zq - &(&tbar * &q),
                        Side::Right => &zq - &(&q * &tbar),
                    }
                } else {
                    QMat::from_complex(&acc[k].sum, unit)
                };
                value = match side {
                    Side::Left => &value + &op.mul_right(term.c),
                    Side::Right => &value + &op.mul_left(term.c),
                };
            }
            Ok(value)
        }
        _ => {
            let eval = |s: Quaternion| -> Result<QMat> {
                match kernel {
                    Kernel::Pencil(t) => Ok(t.pencil(s).map_err(singular)?.inverse()),
                    Kernel::SResolvent(t) => crate::qop::s_resolvent(t, s, side).map_err(singular),
                    Kernel::Generic(k) => k(s).map_err(singular),
                }
            };
            let parts: Vec<QMat> = nodes
                .par_iter()
                .map(|node| {
                    let s = node.point(unit);
                    let w = node.weight_quaternion(unit) * prefactor;
                    let fs = f.eval_in_slice(node.z, unit);
                    let k = eval(s)?;
                    let m = match side {
                        Side::Left => k.mul_right(w * fs),
                        Side::Right => k.mul_left(fs * w),
                    };
                    if !m.is_finite() {
                        return Err(Error::NonFinite(format!("integrand at {s}")));
                    }
                    Ok(m)
                })
                .collect::<Result<_>>()?;
            let (r, c) = parts.first().map(|m| (m.rows(), m.cols())).unwrap_or((0, 0));
            let mut acc = KahanAccumulator::new(r, c);
            for m in &parts {
                acc.add(m);
            }
            Ok(acc.value())
        }
    }
}

/// The quadrature sum at a fixed number of panels per ray, without refinement.
pub fn integrate_fixed(
    plan: &ContourPlan,
    panels: usize,
    kernel: Kernel<'_>,
    f: &StemFunction,
    side: Side,
    prefactor: f64,
) -> Result<QMat> {
    integrate_level(&plan.nodes_at(panels.max(1)), plan.unit, kernel, f, side, prefactor)
}

/// `prefactor · ∫ kernel ds_J f` (left) or `prefactor · ∫ f ds_J kernel` (right), refining
/// the plan's panels by doubling until consecutive levels differ by less than `tol/2 · max(1, |I|)`.
pub fn contour_integrate(
    plan: &ContourPlan,
    kernel: Kernel<'_>,
    f: &StemFunction,
    side: Side,
    prefactor: f64,
) -> Result<CalculusResult> {
    let mut panels = plan.panels;
    let mut evaluated = 0usize;
    let mut prev: Option<QMat> = None;
    let mut last_diff = f64::INFINITY;
    loop {
        let count = plan.node_count(panels);
        if evaluated + count > plan.max_nodes {
            return Err(Error::UnreachableTolerance {
                tol: plan.tol,
                nodes: evaluated,
                estimate: last_diff,
            });
        }
        let nodes = plan.nodes_at(panels);
        let value = integrate_level(&nodes, plan.unit, kernel, f, side, prefactor)?;
        evaluated += count;
        if let Some(p) = &prev {
            let diff = (&value - p).max_abs();
            let scale = value.max_abs().max(1.0);
            if diff < plan.tol / 2.0 * scale {
                let est_quad_err = diff;
                return Ok(CalculusResult {
                    value,
                    est_error: est_quad_err + plan.est_tail * prefactor.abs() / plan.kind.prefactor().abs(),
                    form_gap: None,
                    plan: Some(PlanEcho {
                        phi: plan.phi,
                        unit: plan.unit,
                        eps: plan.eps,
                        r_max: plan.r_max,
                        nodes: count,
                        nodes_evaluated: evaluated,
                        est_tail: plan.est_tail,
                        est_quad_err,
                    }),
                    diagnostics: Diagnostics {
                        integrals: 1,
                        max_nodes: evaluated,
                        nodes_evaluated: evaluated,
                        residuals: Vec::new(),
                    },
                });
            }
            last_diff = diff;
        }
        prev = Some(value);
        panels *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hnum::Sector;
    use crate::poly::{Poly, Rational};
    use crate::qop::{build_diagonal, sector_certificate};
    use crate::sfun::{make_rational, DEFAULT_SECTOR};

    fn rat(p: &[f64], q: &[f64]) -> StemFunction {
        let r = Rational::new(Poly::new(p.to_vec()), Poly::new(q.to_vec()));
        make_rational(&r, None, Sector::new(DEFAULT_SECTOR).unwrap()).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre();
        let w: f64 = rule.iter().map(|p| p.1).sum();
        assert!((w - 2.0).abs() < 1e-14);
        let x30: f64 = rule.iter().map(|&(x, w)| w * x.powi(30)).sum();
        assert!((x30 - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn plan_examples() {
        let cert = DecayCertificate {
            class_tag: ClassTag::PsiQ,
            alpha_exp: 1.0,
            c_alpha: 1.0,
        };
        let consts = SectorCertificate {
            c_theta: 1.0,
            c_theta_q: 1.0,
        };
        let plan = plan_contour(&cert, consts, 1.0, ImaginaryUnit::E1, 1e-8, KernelKind::Q).unwrap();
        // A = 2/π: eps = 0.99 tol π / 8, R = 1/eps
        let eps = 0.99 * 1e-8 * PI / 8.0;
        assert!((plan.eps / eps - 1.0).abs() < 1e-12);
        assert!((plan.r_max * eps - 1.0).abs() < 1e-12);
        assert!(plan.est_tail < 1e-8 / 2.0);

        let plan = plan_contour(&cert, consts, 1.0, ImaginaryUnit::E1, 1e300, KernelKind::Q).unwrap();
        assert_eq!(plan.panels, 1);
        assert_eq!((plan.eps, plan.r_max), (0.5, 2.0));

        let psi = DecayCertificate {
            class_tag: ClassTag::Psi,
            ..cert
        };
        assert!(matches!(
            plan_contour(&psi, consts, 1.0, ImaginaryUnit::E1, 1e-8, KernelKind::Q),
            Err(Error::ClassMismatch { .. })
        ));
        assert!(matches!(
            plan_contour_with_budget(&cert, consts, 1.0, ImaginaryUnit::E1, 1e-14, KernelKind::Q, 64),
            Err(Error::UnreachableTolerance { .. })
        ));
    }

    #[test]
    fn nodes_lie_on_the_rays() {
        let cert = DecayCertificate {
            class_tag: ClassTag::PsiQ,
            alpha_exp: 1.0,
            c_alpha: 1.0,
        };
        let consts = SectorCertificate {
            c_theta: 1.0,
            c_theta_q: 1.0,
        };
        let plan = plan_contour(&cert, consts, 0.9, ImaginaryUnit::E2, 1e-6, KernelKind::S).unwrap();
        for node in plan.nodes() {
            let a = node.z.arg().abs();
            assert!((a - 0.9).abs() < 1e-14);
            assert!(node.z.norm() >= plan.eps && node.z.norm() <= plan.r_max);
            let s = node.point(plan.unit);
            assert_eq!((s.s1, s.s3), (0.0, 0.0));
        }
    }

    fn resolvent_consts(t: &CommutingOperator, phi: f64) -> SectorCertificate {
        sector_certificate(t, Sector::new(phi).unwrap()).unwrap()
    }

    #[test]
    fn zero_kernel_gives_zero() {
        let t = build_diagonal(&[Quaternion::real(2.0)]).unwrap();
        let f = rat(&[0.0, 1.0], &[1.0, 2.0, 1.0]);
        let plan = plan_contour(
            f.certificate(),
            resolvent_consts(&t, 1.0),
            1.0,
            ImaginaryUnit::E1,
            1e-8,
            KernelKind::S,
        )
        .unwrap();
        let zero = |_: Quaternion| Ok(QMat::zeros(1, 1));
        let r = contour_integrate(&plan, Kernel::Generic(&zero), &f, Side::Left, 1.0).unwrap();
        assert_eq!(r.value, QMat::zeros(1, 1));
    }

    #[test]
    fn cauchy_integral_of_rational() {
        let t = build_diagonal(&[Quaternion::real(2.0)]).unwrap();
        let f = rat(&[0.0, 1.0], &[1.0, 2.0, 1.0]);
        let phi = 1.2;
        let plan = plan_contour(
            f.certificate(),
            resolvent_consts(&t, phi),
            phi,
            ImaginaryUnit::E1,
            1e-9,
            KernelKind::S,
        )
        .unwrap();
        let r = contour_integrate(&plan, Kernel::SResolvent(&t), &f, Side::Left, KernelKind::S.prefactor()).unwrap();
        assert!((r.value[(0, 0)] - Quaternion::real(2.0 / 9.0)).abs() < 1e-9, "{}", r.value[(0, 0)]);
        assert!(r.est_error < 1e-8);
    }

    #[test]
    fn harmonic_integral_zero_case() {
        let t = build_diagonal(&[Quaternion::real(2.0)]).unwrap();
        let f = rat(&[0.0, 0.0, 1.0], &[1.0, 3.0, 3.0, 1.0]);
        let phi = 1.2;
        let plan = plan_contour(
            f.certificate(),
            resolvent_consts(&t, phi),
            phi,
            ImaginaryUnit::E3,
            1e-9,
            KernelKind::Q,
        )
        .unwrap();
        let r = contour_integrate(&plan, Kernel::Pencil(&t), &f, Side::Left, KernelKind::Q.prefactor()).unwrap();
        assert!(r.value[(0, 0)].abs() < 1e-9, "{}", r.value[(0, 0)]);
    }

    #[test]
    fn fast_and_generic_paths_agree() {
        let t = build_diagonal(&[Quaternion::new(1.0, 0.5, 0.0, 0.3), Quaternion::real(3.0)]).unwrap();
        let base = rat(&[0.0, 0.0, 1.0], &[1.0, 3.0, 3.0, 1.0]);
        let f = StemFunction::from_terms(
            vec![crate::sfun::Term {
                r: base.terms()[0].r.clone(),
                c: Quaternion::new(1.0, 0.0, 2.0, -1.0),
            }],
            Side::Left,
            base.sector(),
            None,
            "g",
        )
        .unwrap();
        let unit = ImaginaryUnit::normalized(1.0, 1.0, 0.0).unwrap();
        let phi = 1.4;
        for (kind, side) in [(KernelKind::S, Side::Left), (KernelKind::Q, Side::Left)] {
            let plan = plan_contour(f.certificate(), resolvent_consts(&t, phi), phi, unit, 1e-8, kind).unwrap();
            let (fast_k, generic): (Kernel, Box<dyn Fn(Quaternion) -> Result<QMat> + Sync>) = match kind {
                KernelKind::S => (
                    Kernel::SResolvent(&t),
                    Box::new(|s| crate::qop::s_resolvent(&t, s, side)),
                ),
                KernelKind::Q => (Kernel::Pencil(&t), Box::new(|s| Ok(t.pencil(s)?.inverse()))),
            };
            let a = contour_integrate(&plan, fast_k, &f, side, kind.prefactor()).unwrap();
            let b = contour_integrate(&plan, Kernel::Generic(generic.as_ref()), &f, side, kind.prefactor()).unwrap();
            assert!((&a.value - &b.value).max_abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_point_on_contour_is_reported() {
        let t = build_diagonal(&[Quaternion::new(1.0, 1.0, 0.0, 0.0)]).unwrap();
        let f = rat(&[0.0, 0.0, 1.0], &[1.0, 3.0, 3.0, 1.0]);
        let consts = SectorCertificate {
            c_theta: 1.0,
            c_theta_q: 1.0,
        };
        let mut plan = plan_contour(f.certificate(), consts, PI / 4.0, ImaginaryUnit::E1, 1e-6, KernelKind::Q).unwrap();
        // put a node exactly on [1+e1]
        plan.eps = 2f64.sqrt() / 2.0;
        plan.r_max = 2f64.sqrt() * 2.0;
        plan.panels = 1;
        let hits = plan.nodes().iter().any(|n| (n.z - Complex64::new(1.0, 1.0)).norm() < 1e-12);
        if hits {
            assert!(matches!(
                contour_integrate(&plan, Kernel::Pencil(&t), &f, Side::Left, -1.0 / PI),
                Err(Error::KernelSingular(_))
            ));
        }
        let on = |_: Quaternion| -> Result<QMat> {
            Err(Error::SpectralPoint {
                s: Quaternion::ONE,
                sigma_min: 0.0,
                norm: 1.0,
            })
        };
        assert!(matches!(
            contour_integrate(&plan, Kernel::Generic(&on), &f, Side::Left, 1.0),
            Err(Error::KernelSingular(_))
        ));
    }
}
