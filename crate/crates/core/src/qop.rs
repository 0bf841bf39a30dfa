//! Operators `T = T0 + e1 T1 + e2 T2 + e3 T3` with commuting real components,
//! the pencil `Q_{c,s}(T) = s^2 I - 2 T0 s + |T|^2`, the S-resolvents and
//! the S-spectrum.
//!
//! Operators are bounded matrices, so `dom(T)` is the whole space and every
//! domain condition on `T^2`, `T_i T_j`, ... holds trivially.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hnum::{decompose, qinv, ImaginaryUnit, Quaternion, Sector, Sphere};
use crate::linalg::QMat;
use crate::poly::Poly;

/// Relative commutator residual accepted for the components.
pub const COMMUTATOR_TOL: f64 = 1e-10;
/// The pencil is singular when `sigma_min < PENCIL_SINGULAR * ||Q||`.
pub const PENCIL_SINGULAR: f64 = 1e-12;

/// Which S-resolvent (and which assembly order in contour integrals).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[default]
    Left,
    Right,
}

/// How an operator was built; determines whether its S-spectrum is known exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum Construction {
    Diagonal(Vec<Quaternion>),
    PolyFamily {
        m: DMatrix<f64>,
        p: [Poly; 4],
        eigenvalues: Vec<f64>,
    },
    Untagged,
}

#[derive(Clone, Debug)]
pub struct CommutingOperator {
    comps: [DMatrix<f64>; 4],
    abs_sq: DMatrix<f64>,
    construction: Construction,
}

/// JSON description of an operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    Diagonal {
        entries: Vec<Quaternion>,
    },
    PolyFamily {
        #[serde(rename = "M")]
        m: Vec<Vec<f64>>,
        p: [Vec<f64>; 4],
    },
}

impl OperatorSpec {
    pub fn build(&self) -> Result<CommutingOperator> {
        match self {
            Self::Diagonal { entries } => build_diagonal(entries),
            Self::PolyFamily { m, p } => {
                let n = m.len();
                if m.iter().any(|row| row.len() != n) {
                    return Err(Error::DimensionMismatch("M must be square".into()));
                }
                let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
                build_poly_family(&mat, p.clone().map(Poly::new))
            }
        }
    }
}

pub fn build_diagonal(entries: &[Quaternion]) -> Result<CommutingOperator> {
    if entries.is_empty() {
        return Err(Error::DimensionMismatch("empty diagonal".into()));
    }
    if entries.iter().any(|q| !q.is_finite()) {
        return Err(Error::NonFinite("diagonal entry".into()));
    }
    let n = entries.len();
    let comps = [0, 1, 2, 3].map(|a| {
        DMatrix::from_fn(n, n, |i, j| if i == j { entries[i].component(a) } else { 0.0 })
    });
    Ok(CommutingOperator::assemble(
        comps,
        Construction::Diagonal(entries.to_vec()),
    ))
}

/// `T_i = p_i(M)` for a symmetric matrix `M`.
pub fn build_poly_family(m: &DMatrix<f64>, p: [Poly; 4]) -> Result<CommutingOperator> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch("M must be square and nonempty".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("M".into()));
    }
    let residual = (m - m.transpose()).norm();
    if residual > 1e-12 * m.norm().max(1.0) {
        return Err(Error::NonSymmetric { residual });
    }
    let sym = (m + m.transpose()) * 0.5;
    let comps = [0, 1, 2, 3].map(|a| poly_of_matrix(&p[a], &sym));
    let eigenvalues = SymmetricEigen::new(sym.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    Ok(CommutingOperator::assemble(
        comps,
        Construction::PolyFamily {
            m: sym,
            p,
            eigenvalues,
        },
    ))
}

fn poly_of_matrix(p: &Poly, m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut acc = DMatrix::zeros(n, n);
    for &c in p.coeffs().iter().rev() {
        acc = &acc * m + DMatrix::identity(n, n) * c;
    }
    acc
}

impl CommutingOperator {
    fn assemble(comps: [DMatrix<f64>; 4], construction: Construction) -> Self {
        let abs_sq = comps.iter().fold(
            DMatrix::zeros(comps[0].nrows(), comps[0].ncols()),
            |acc, c| acc + c * c,
        );
        Self {
            comps,
            abs_sq,
            construction,
        }
    }

    /// Operator from raw components; they must commute pairwise.
    pub fn from_components(comps: [DMatrix<f64>; 4]) -> Result<Self> {
        let n = comps[0].nrows();
        if comps.iter().any(|c| c.nrows() != n || c.ncols() != n) || n == 0 {
            return Err(Error::DimensionMismatch("components must be equal square".into()));
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let r = (&comps[i] * &comps[j] - &comps[j] * &comps[i]).norm();
                if r > COMMUTATOR_TOL * comps[i].norm() * comps[j].norm() {
                    return Err(Error::NonCommuting { i, j, residual: r });
                }
            }
        }
        Ok(Self::assemble(comps, Construction::Untagged))
    }

    pub fn n(&self) -> usize {
        self.comps[0].nrows()
    }

    pub fn component(&self, i: usize) -> &DMatrix<f64> {
        &self.comps[i]
    }

    pub fn components(&self) -> &[DMatrix<f64>; 4] {
        &self.comps
    }

    /// `|T|^2 = T0^2 + T1^2 + T2^2 + T3^2`.
    pub fn abs_sq(&self) -> &DMatrix<f64> {
        &self.abs_sq
    }

    pub fn construction(&self) -> &Construction {
        &self.construction
    }

    pub fn to_qmat(&self) -> QMat {
        QMat::from_components(&self.comps)
    }

    /// `T0 - e1 T1 - e2 T2 - e3 T3`, with the construction data conjugated alongside.
    pub fn conj(&self) -> Self {
        let comps = [
            self.comps[0].clone(),
            -&self.comps[1],
            -&self.comps[2],
            -&self.comps[3],
        ];
        let construction = match &self.construction {
            Construction::Diagonal(e) => Construction::Diagonal(e.iter().map(|q| q.conj()).collect()),
            Construction::PolyFamily { m, p, eigenvalues } => Construction::PolyFamily {
                m: m.clone(),
                p: [p[0].clone(), -&p[1], -&p[2], -&p[3]],
                eigenvalues: eigenvalues.clone(),
            },
            Construction::Untagged => Construction::Untagged,
        };
        Self::assemble(comps, construction)
    }

    /// Quaternion "eigenvalues" of the generating data, when known.
    pub fn quaternion_eigenvalues(&self) -> Option<Vec<Quaternion>> {
        match &self.construction {
            Construction::Diagonal(e) => Some(e.clone()),
            Construction::PolyFamily { p, eigenvalues, .. } => Some(
                eigenvalues
                    .iter()
                    .map(|&l| Quaternion::new(p[0].eval(l), p[1].eval(l), p[2].eval(l), p[3].eval(l)))
                    .collect(),
            ),
            Construction::Untagged => None,
        }
    }

    /// Complex matrix of `Q_{c,s}(T)` for `s = u + J v`, in the coordinate `u + i v`.
    pub fn pencil_matrix(&self, z: Complex64) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            let diag = if i == j { z * z } else { Complex64::new(0.0, 0.0) };
            diag - z * (2.0 * self.comps[0][(i, j)]) + self.abs_sq[(i, j)]
        })
    }

    /// Factorizes `Q_{c,s}(T)`; fails with `SpectralPoint` on a numerically singular pencil.
    pub fn pencil(&self, s: Quaternion) -> Result<QPencil> {
        QPencil::new(self, s)
    }

    /// Pencil at `s = Re z + J Im z` for a fixed unit `J` (either sign of `Im z`).
    pub fn pencil_in_slice(&self, z: Complex64, unit: ImaginaryUnit) -> Result<QPencil> {
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite(format!("pencil point {z}")));
        }
        QPencil::factor(unit.embed(z), unit, self.pencil_matrix(z))
    }
}

/// `Q_{c,s}(T)` evaluated and factorized in the slice `C_J` containing `s`.
#[derive(Clone, Debug)]
pub struct QPencil {
    s: Quaternion,
    unit: ImaginaryUnit,
    matrix: DMatrix<Complex64>,
    inverse: DMatrix<Complex64>,
    norm: f64,
    sigma_min: f64,
}

impl QPencil {
    fn new(t: &CommutingOperator, s: Quaternion) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::NonFinite(format!("pencil point {s}")));
        }
        let (u, v, unit) = decompose(s);
        let z = Complex64::new(u, v);
        let matrix = t.pencil_matrix(z);
        Self::factor(s, unit, matrix)
    }

    fn factor(s: Quaternion, unit: ImaginaryUnit, matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = matrix.nrows();
        let fro = matrix.norm();
        let singular = |sigma_min: f64, norm: f64| Error::SpectralPoint { s, sigma_min, norm };
        let Some(inverse) = matrix.clone().lu().try_inverse() else {
            return Err(singular(0.0, fro));
        };
        let inv_fro = inverse.norm();
        if !inv_fro.is_finite() {
            return Err(singular(0.0, fro));
        }
        let rn = (n as f64).sqrt();
        // 1/||Q^-1||_F <= sigma_min <= sqrt(n)/||Q^-1||_F and ||Q||_F/sqrt(n) <= ||Q||_2 <= ||Q||_F
        let (sigma_min, norm) = if 1.0 / inv_fro >= PENCIL_SINGULAR * fro {
            (1.0 / inv_fro, fro)
        } else if rn / inv_fro < PENCIL_SINGULAR * fro / rn {
            return Err(singular(rn / inv_fro, fro / rn));
        } else {
            let sv = matrix.singular_values();
            let smax = sv.max();
            let smin = sv.min();
            if smin < PENCIL_SINGULAR * smax {
                return Err(singular(smin, smax));
            }
            (smin, smax)
        };
        Ok(Self {
            s,
            unit,
            matrix,
            inverse,
            norm,
            sigma_min,
        })
    }

    pub fn point(&self) -> Quaternion {
        self.s
    }

    pub fn unit(&self) -> ImaginaryUnit {
        self.unit
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn inverse_complex(&self) -> &DMatrix<Complex64> {
        &self.inverse
    }

    /// `Q_{c,s}^{-1}(T)` as a quaternionic matrix with entries in `C_J`.
    pub fn inverse(&self) -> QMat {
        QMat::from_complex(&self.inverse, self.unit)
    }

    pub fn as_qmat(&self) -> QMat {
        QMat::from_complex(&self.matrix, self.unit)
    }

    /// Lower bound on the smallest singular value (exact when it was close to the threshold).
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `Q^{-1} rhs`. Right-hand sides outside `C_J` are split as `Z1 + Z2 K`.
    pub fn solve(&self, rhs: &QMat) -> Result<QMat> {
        if rhs.rows() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "pencil of size {} against {} rows",
                self.matrix.nrows(),
                rhs.rows()
            )));
        }
        let (z1, z2) = rhs.split_slice(self.unit);
        let x1 = &self.inverse * z1;
        if z2.iter().all(|z| z.norm() == 0.0) {
            return Ok(QMat::from_complex(&x1, self.unit));
        }
        let x2 = &self.inverse * z2;
        Ok(QMat::join_slice(&x1, &x2, self.unit))
    }
}

pub fn pencil_solve(t: &CommutingOperator, s: Quaternion, rhs: &QMat) -> Result<QMat> {
    t.pencil(s)?.solve(rhs)
}

/// `S_L^{-1}(s,T) = (s I - T̄) Q_{c,s}^{-1}(T)` or `S_R^{-1}(s,T) = Q_{c,s}^{-1}(T) (s I - T̄)`.
pub fn s_resolvent(t: &CommutingOperator, s: Quaternion, side: Side) -> Result<QMat> {
    let pencil = t.pencil(s)?;
    Ok(s_resolvent_from(t, &pencil, side))
}

pub(crate) fn s_resolvent_from(t: &CommutingOperator, pencil: &QPencil, side: Side) -> QMat {
    let shifted = &QMat::scalar(t.n(), pencil.point()) - &t.conj().to_qmat();
    let qinv = pencil.inverse();
    match side {
        Side::Left => &shifted * &qinv,
        Side::Right => &qinv * &shifted,
    }
}

/// `s^2 - 2 q0 s + |q|^2`.
pub fn scalar_pencil(s: Quaternion, q: Quaternion) -> Quaternion {
    s * s - s * (2.0 * q.s0) + Quaternion::real(q.norm_sqr())
}

/// Left Cauchy kernel `(s - q̄)(s^2 - 2 q0 s + |q|^2)^{-1}`.
pub fn cauchy_kernel_left(s: Quaternion, q: Quaternion) -> Result<Quaternion> {
    Ok((s - q.conj()) * qinv(scalar_pencil(s, q))?)
}

/// Right Cauchy kernel `(s^2 - 2 q0 s + |q|^2)^{-1}(s - q̄)`.
pub fn cauchy_kernel_right(s: Quaternion, q: Quaternion) -> Result<Quaternion> {
    Ok(qinv(scalar_pencil(s, q))? * (s - q.conj()))
}

/// The S-spectrum as a list of spheres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub spheres: Vec<Sphere>,
    /// Angular distance `theta - max Arg` to the boundary of a queried sector.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rho_margin: Option<f64>,
}

impl SpectrumReport {
    /// Largest argument over the spectrum (0 for an empty or positive-real spectrum).
    pub fn max_arg(&self) -> f64 {
        self.spheres.iter().map(|s| s.arg()).fold(0.0, f64::max)
    }

    pub fn contains_origin(&self) -> bool {
        self.spheres.iter().any(|s| s.center == 0.0 && s.radius == 0.0)
    }

    pub fn with_margin(mut self, sector: Sector) -> Self {
        self.rho_margin = Some(sector.omega() - self.max_arg());
        self
    }

    /// Whether `s` lies on one of the spheres (within `tol`).
    pub fn contains(&self, s: Quaternion, tol: f64) -> bool {
        self.spheres.iter().any(|sp| sp.contains(s, tol))
    }
}

pub fn s_spectrum(t: &CommutingOperator) -> Result<SpectrumReport> {
    let eig = t.quaternion_eigenvalues().ok_or_else(|| {
        Error::Unsupported("S-spectrum needs a diagonal or polynomial-family construction".into())
    })?;
    let mut spheres: Vec<Sphere> = Vec::new();
    for q in eig {
        let sp = Sphere::of(q);
        if !spheres.iter().any(|o| o.contains(sp.point(ImaginaryUnit::E1), 1e-12)) {
            spheres.push(sp);
        }
    }
    spheres.sort_by(|a, b| {
        (a.center, a.radius)
            .partial_cmp(&(b.center, b.radius))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(SpectrumReport {
        spheres,
        rho_margin: None,
    })
}

/// Sampled resolvent constants for the complement of a sector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorCertificate {
    /// Bound for `|s| ||S^{-1}_{L,R}(s, T)||` and the same for `T̄`.
    pub c_theta: f64,
    /// Bound for `|s|^2 ||Q_{c,s}^{-1}(T)||`.
    pub c_theta_q: f64,
}

/// One sample of the resolvent norms along a ray.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolventSample {
    pub angle: f64,
    pub r: f64,
    /// `|s| max(||S_L^{-1}||, ||S_R^{-1}||)` over `T` and `T̄`.
    pub scaled_s: f64,
    pub norm_q_inv: f64,
    /// `|s|^2 ||Q_{c,s}^{-1}(T)||`.
    pub scaled_q: f64,
}

/// Norms of the resolvents along rays `r e^{±J angle}` for log-spaced `r`.
pub fn resolvent_profile(
    t: &CommutingOperator,
    angles: &[f64],
    r_min: f64,
    r_max: f64,
    per_decade: usize,
) -> Result<Vec<ResolventSample>> {
    let decades = (r_max / r_min).log10();
    let count = (decades * per_decade as f64).round() as usize + 1;
    let tbar = t.conj();
    let mut out = Vec::with_capacity(count * angles.len());
    for &angle in angles {
        for i in 0..count {
            let r = r_min * 10f64.powf(i as f64 / per_decade as f64);
            let s = ImaginaryUnit::E1.embed(Complex64::from_polar(r, angle));
            let pencil = t.pencil(s)?;
            let qinv_norm = pencil.inverse().norm2();
            let mut s_norm: f64 = 0.0;
            for op in [t, &tbar] {
                // Q_{c,s}(T̄) = Q_{c,s}(T)
                for side in [Side::Left, Side::Right] {
                    s_norm = s_norm.max(s_resolvent_from(op, &pencil, side).norm2());
                }
            }
            out.push(ResolventSample {
                angle,
                r,
                scaled_s: r * s_norm,
                norm_q_inv: qinv_norm,
                scaled_q: r * r * qinv_norm,
            });
        }
    }
    Ok(out)
}

/// Sample radii for the certificate: `[1e-6, 1e6]`, 6 per decade.
const CERT_R_MIN: f64 = 1e-6;
const CERT_R_MAX: f64 = 1e6;
const CERT_PER_DECADE: usize = 6;
/// Safety factor applied to sampled maxima.
const CERT_SAFETY: f64 = 2.0;

/// Estimates `C_theta` for `S_L^{-1}, S_R^{-1}` (of `T` and `T̄`) and for `Q_{c,s}^{-1}(T)`
/// on the complement of `S_theta`.
pub fn sector_certificate(t: &CommutingOperator, theta: Sector) -> Result<SectorCertificate> {
    let spec = s_spectrum(t)?;
    let max_arg = spec.max_arg();
    if max_arg >= theta.omega() {
        return Err(Error::NotSectorial {
            theta: theta.omega(),
            max_arg,
        });
    }
    let w = theta.omega();
    let mut angles = Vec::new();
    for k in 0..=4 {
        let a = w + (PI - w) * k as f64 / 4.0;
        angles.push(a);
        if k < 4 {
            angles.push(-a);
        }
    }
    let samples = resolvent_profile(t, &angles, CERT_R_MIN, CERT_R_MAX, CERT_PER_DECADE)?;
    let c_theta = samples.iter().map(|x| x.scaled_s).fold(0.0, f64::max);
    let c_theta_q = samples.iter().map(|x| x.scaled_q).fold(0.0, f64::max);
    Ok(SectorCertificate {
        c_theta: CERT_SAFETY * c_theta,
        c_theta_q: CERT_SAFETY * c_theta_q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    #[test]
    fn diagonal_construction() {
        let t = build_diagonal(&[q(2.0, 0.0, 0.0, 0.0)]).unwrap();
        assert_eq!(t.component(0)[(0, 0)], 2.0);
        assert!((1..4).all(|i| t.component(i)[(0, 0)] == 0.0));
        let t = build_diagonal(&[Quaternion::E1]).unwrap();
        assert_eq!(t.component(1)[(0, 0)], 1.0);
        assert_eq!(t.component(0)[(0, 0)], 0.0);
        assert!(build_diagonal(&[]).is_err());
    }

    #[test]
    fn diagonal_spectrum() {
        let t = build_diagonal(&[q(1.0, 2.0, 0.0, 0.0), q(3.0, 0.0, 0.0, 0.0)]).unwrap();
        let spec = s_spectrum(&t).unwrap();
        assert_eq!(
            spec.spheres,
            vec![
                Sphere { center: 1.0, radius: 2.0 },
                Sphere { center: 3.0, radius: 0.0 }
            ]
        );
        let spec = s_spectrum(&build_diagonal(&[Quaternion::E1]).unwrap()).unwrap();
        assert_eq!(spec.spheres, vec![Sphere { center: 0.0, radius: 1.0 }]);
    }

    #[test]
    fn poly_family_examples() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let t = build_poly_family(&m, [Poly::monomial(1), Poly::zero(), Poly::zero(), Poly::zero()])
            .unwrap();
        assert_eq!(t.component(0), &m);

        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let t = build_poly_family(
            &m,
            [Poly::monomial(1), Poly::constant(1.0), Poly::zero(), Poly::zero()],
        )
        .unwrap();
        assert_eq!(t.component(1), &DMatrix::identity(2, 2));
        assert!(t.to_qmat().component_commutator() < 1e-15);

        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let t = build_poly_family(
            &m,
            [Poly::monomial(1), Poly::monomial(1), Poly::zero(), Poly::zero()],
        )
        .unwrap();
        let spec = s_spectrum(&t).unwrap();
        assert_eq!(spec.spheres.len(), 2);
        assert!((spec.spheres[0].center - 1.0).abs() < 1e-14);
        assert!((spec.spheres[0].radius - 1.0).abs() < 1e-14);
        assert!((spec.spheres[1].center - 4.0).abs() < 1e-14);
        assert!((spec.spheres[1].radius - 4.0).abs() < 1e-14);

        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(
            build_poly_family(&bad, [Poly::monomial(1), Poly::zero(), Poly::zero(), Poly::zero()]),
            Err(Error::NonSymmetric { .. })
        ));
    }

    #[test]
    fn pencil_examples() {
        let t = build_diagonal(&[Quaternion::E1]).unwrap();
        let x = pencil_solve(&t, Quaternion::real(2.0), &QMat::identity(1)).unwrap();
        assert!((x[(0, 0)] - Quaternion::real(0.2)).abs() < 1e-16);
        assert!(matches!(
            pencil_solve(&t, Quaternion::E1, &QMat::identity(1)),
            Err(Error::SpectralPoint { .. })
        ));
        // every point of [e1] is spectral
        assert!(pencil_solve(&t, Quaternion::E3, &QMat::identity(1)).is_err());

        let t = build_diagonal(&[Quaternion::real(2.0)]).unwrap();
        let s = q(1.0, 1.0, 0.0, 0.0);
        let x = pencil_solve(&t, s, &QMat::identity(1)).unwrap();
        assert!((x[(0, 0)] - q(0.0, 0.5, 0.0, 0.0)).abs() < 1e-15);
        // scalar oracle
        let direct = qinv(scalar_pencil(s, Quaternion::real(2.0))).unwrap();
        assert!((x[(0, 0)] - direct).abs() < 1e-15);
    }

    #[test]
    fn pencil_solve_general_rhs() {
        let t = build_diagonal(&[q(1.0, 0.5, 0.0, 0.2), q(2.0, 0.0, 0.3, 0.0)]).unwrap();
        let s = q(0.4, 0.1, 1.2, -0.7);
        let rhs = QMat::from_fn(2, 1, |i, _| q(1.0 + i as f64, -0.5, 0.25, 2.0));
        let x = pencil_solve(&t, s, &rhs).unwrap();
        let back = &t.pencil(s).unwrap().as_qmat() * &x;
        assert!((back - rhs).max_abs() < 1e-13);
    }

    #[test]
    fn resolvent_examples() {
        let t = build_diagonal(&[Quaternion::E1]).unwrap();
        let r = s_resolvent(&t, Quaternion::real(2.0), Side::Left).unwrap();
        assert!((r[(0, 0)] - q(0.4, 0.2, 0.0, 0.0)).abs() < 1e-16);

        let t = build_diagonal(&[Quaternion::real(2.0)]).unwrap();
        for side in [Side::Left, Side::Right] {
            let r = s_resolvent(&t, Quaternion::real(3.0), side).unwrap();
            assert!((r[(0, 0)] - Quaternion::ONE).abs() < 1e-15);
        }

        let x = q(1.0, 1.0, 0.0, 0.0);
        let s = q(2.0, 1.0, 0.0, 0.0);
        let t = build_diagonal(&[x]).unwrap();
        let l = s_resolvent(&t, s, Side::Left).unwrap()[(0, 0)];
        let r = s_resolvent(&t, s, Side::Right).unwrap()[(0, 0)];
        assert!((l - r).abs() < 1e-15);
        assert!((l - cauchy_kernel_left(s, x).unwrap()).abs() < 1e-15);
        assert!((r - cauchy_kernel_right(s, x).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn certificate_examples() {
        let t = build_diagonal(&[Quaternion::real(2.0)]).unwrap();
        let c = sector_certificate(&t, Sector::new(PI / 2.0).unwrap()).unwrap();
        assert!(c.c_theta.is_finite() && c.c_theta_q.is_finite());
        // on the imaginary axis |s|^2/|s-2|^2 < 1
        assert!(c.c_theta_q <= 2.0 * 1.0 + 1e-12);

        let t = build_diagonal(&[Quaternion::real(-1.0)]).unwrap();
        assert!(matches!(
            sector_certificate(&t, Sector::new(PI / 2.0).unwrap()),
            Err(Error::NotSectorial { .. })
        ));
        let t = build_diagonal(&[Quaternion::E1]).unwrap();
        assert!(matches!(
            sector_certificate(&t, Sector::new(PI / 4.0).unwrap()),
            Err(Error::NotSectorial { .. })
        ));
    }

    #[test]
    fn untagged_spectrum_is_unsupported() {
        let i = DMatrix::<f64>::identity(2, 2);
        let z = DMatrix::<f64>::zeros(2, 2);
        let t = CommutingOperator::from_components([i, z.clone(), z.clone(), z]).unwrap();
        assert!(matches!(s_spectrum(&t), Err(Error::Unsupported(_))));
    }

    #[test]
    fn non_commuting_components_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let z = DMatrix::<f64>::zeros(2, 2);
        assert!(matches!(
            CommutingOperator::from_components([a, b, z.clone(), z]),
            Err(Error::NonCommuting { .. })
        ));
    }

    #[test]
    fn operator_json() {
        let spec: OperatorSpec =
            serde_json::from_str(r#"{"kind":"diagonal","entries":[[2,0,0,0]]}"#).unwrap();
        assert_eq!(spec.build().unwrap().n(), 1);
        let spec: OperatorSpec = serde_json::from_str(
            r#"{"kind":"poly_family","M":[[1,0],[0,2]],"p":[[0,1],[],[],[]]}"#,
        )
        .unwrap();
        assert_eq!(spec.build().unwrap().component(0)[(1, 1)], 2.0);
    }
}
