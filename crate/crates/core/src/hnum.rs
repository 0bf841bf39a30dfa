//! Quaternion scalars, imaginary units, sectors and the spheres `[s]`.
//!
//! Everything here is a plain `Copy` value; all operations are pure.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Moduli below this are treated as exact zeros by [`qinv`].
pub const SINGULAR_MODULUS: f64 = 1e-300;
/// Moduli below this are invertible but flagged as ill-conditioned.
pub const ILL_CONDITIONED_MODULUS: f64 = 1e-14;

/// A real quaternion `s0 + s1 e1 + s2 e2 + s3 e3`.
///
/// Serialized as the JSON array `[s0, s1, s2, s3]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl From<[f64; 4]> for Quaternion {
    fn from(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        q.to_array()
    }
}

impl From<f64> for Quaternion {
    fn from(x: f64) -> Self {
        Self::real(x)
    }
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const E1: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const E2: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const E3: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> Self {
        Self { s0, s1, s2, s3 }
    }

    pub const fn real(x: f64) -> Self {
        Self::new(x, 0.0, 0.0, 0.0)
    }

    /// The basis element `e_i` (`e_0 = 1`).
    pub fn basis(i: usize) -> Self {
        match i {
            0 => Self::ONE,
            1 => Self::E1,
            2 => Self::E2,
            3 => Self::E3,
            _ => panic!("quaternion basis index {i} out of range"),
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s0, self.s1, self.s2, self.s3]
    }

    pub fn component(self, i: usize) -> f64 {
        self.to_array()[i]
    }

    pub fn re(self) -> f64 {
        self.s0
    }

    /// Imaginary part `s1 e1 + s2 e2 + s3 e3`.
    pub fn im(self) -> Self {
        Self::new(0.0, self.s1, self.s2, self.s3)
    }

    pub fn conj(self) -> Self {
        Self::new(self.s0, -self.s1, -self.s2, -self.s3)
    }

    pub fn norm_sqr(self) -> f64 {
        self.s0 * self.s0 + self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3
    }

    pub fn abs(self) -> f64 {
        // hypot-style scaling keeps |s| finite for huge components
        let m = self
            .s0
            .abs()
            .max(self.s1.abs())
            .max(self.s2.abs())
            .max(self.s3.abs());
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        let q = self * (1.0 / m);
        m * q.norm_sqr().sqrt()
    }

    /// Modulus of the imaginary part.
    pub fn im_abs(self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.s0 * other.s0 + self.s1 * other.s1 + self.s2 * other.s2 + self.s3 * other.s3
    }

    pub fn is_finite(self) -> bool {
        self.s0.is_finite() && self.s1.is_finite() && self.s2.is_finite() && self.s3.is_finite()
    }

    pub fn is_real(self, tol: f64) -> bool {
        self.im_abs() <= tol
    }

    pub fn max_abs(self) -> f64 {
        self.s0
            .abs()
            .max(self.s1.abs())
            .max(self.s2.abs())
            .max(self.s3.abs())
    }

    /// Multiplicative inverse, see [`qinv`].
    pub fn inv(self) -> Result<Self> {
        qinv(self)
    }

    /// Integer power by repeated squaring.
    pub fn powi(self, mut k: u32) -> Self {
        let mut base = self;
        let mut acc = Self::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(
                f,
                "{:.p$}{:+.p$}e1{:+.p$}e2{:+.p$}e3",
                self.s0, self.s1, self.s2, self.s3
            ),
            None => write!(f, "{}{:+}e1{:+}e2{:+}e3", self.s0, self.s1, self.s2, self.s3),
        }
    }
}

/// Hamilton product.
pub fn qmul(a: Quaternion, b: Quaternion) -> Quaternion {
    Quaternion::new(
        a.s0 * b.s0 - a.s1 * b.s1 - a.s2 * b.s2 - a.s3 * b.s3,
        a.s0 * b.s1 + a.s1 * b.s0 + a.s2 * b.s3 - a.s3 * b.s2,
        a.s0 * b.s2 - a.s1 * b.s3 + a.s2 * b.s0 + a.s3 * b.s1,
        a.s0 * b.s3 + a.s1 * b.s2 - a.s2 * b.s1 + a.s3 * b.s0,
    )
}

/// Inverse `conj(a) / |a|^2`.
pub fn qinv(a: Quaternion) -> Result<Quaternion> {
    qinv_with_diagnostics(a).map(|(q, _)| q)
}

/// Like [`qinv`], also reporting whether `|a|` fell below [`ILL_CONDITIONED_MODULUS`].
pub fn qinv_with_diagnostics(a: Quaternion) -> Result<(Quaternion, bool)> {
    let m = a.abs();
    if !(m >= SINGULAR_MODULUS) {
        return Err(Error::ZeroDivision { modulus: m });
    }
    let ill = m < ILL_CONDITIONED_MODULUS;
    if ill {
        log::warn!("inverting quaternion of modulus {m:e}");
    }
    // scale first so |a|^2 cannot underflow
    let scaled = a * (1.0 / m);
    Ok((scaled.conj() * (1.0 / m), ill))
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.s0 + o.s0, self.s1 + o.s1, self.s2 + o.s2, self.s3 + o.s3)
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.s0 - o.s0, self.s1 - o.s1, self.s2 - o.s2, self.s3 - o.s3)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.s0, -self.s1, -self.s2, -self.s3)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        qmul(self, o)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    fn mul(self, x: f64) -> Self {
        Self::new(self.s0 * x, self.s1 * x, self.s2 * x, self.s3 * x)
    }
}

impl Mul<Quaternion> for f64 {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        q * self
    }
}

impl Div<f64> for Quaternion {
    type Output = Self;
    fn div(self, x: f64) -> Self {
        Self::new(self.s0 / x, self.s1 / x, self.s2 / x, self.s3 / x)
    }
}

impl AddAssign for Quaternion {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl SubAssign for Quaternion {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl std::iter::Sum for Quaternion {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, |a, b| a + b)
    }
}

/// A purely imaginary unit quaternion `J`, so `J^2 = -1`.
///
/// Serialized as `[j1, j2, j3]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct ImaginaryUnit {
    j: [f64; 3],
}

impl TryFrom<[f64; 3]> for ImaginaryUnit {
    type Error = Error;
    fn try_from(j: [f64; 3]) -> Result<Self> {
        Self::new(j[0], j[1], j[2])
    }
}

impl From<ImaginaryUnit> for [f64; 3] {
    fn from(u: ImaginaryUnit) -> Self {
        u.j
    }
}

impl ImaginaryUnit {
    pub const E1: Self = Self { j: [1.0, 0.0, 0.0] };
    pub const E2: Self = Self { j: [0.0, 1.0, 0.0] };
    pub const E3: Self = Self { j: [0.0, 0.0, 1.0] };

    /// Unit with the given components; they must already have norm 1 within 1e-14.
    pub fn new(j1: f64, j2: f64, j3: f64) -> Result<Self> {
        let n = (j1 * j1 + j2 * j2 + j3 * j3).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidUnit(format!("[{j1}, {j2}, {j3}] has norm {n}")));
        }
        Ok(Self { j: [j1, j2, j3] })
    }

    /// Normalizes an arbitrary nonzero direction.
    pub fn normalized(j1: f64, j2: f64, j3: f64) -> Result<Self> {
        let n = (j1 * j1 + j2 * j2 + j3 * j3).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidUnit(format!("[{j1}, {j2}, {j3}] has no direction")));
        }
        Ok(Self {
            j: [j1 / n, j2 / n, j3 / n],
        })
    }

    pub fn components(self) -> [f64; 3] {
        self.j
    }

    pub fn to_quaternion(self) -> Quaternion {
        Quaternion::new(0.0, self.j[0], self.j[1], self.j[2])
    }

    /// The point `a + J b` of the slice `C_J`.
    pub fn embed(self, z: Complex64) -> Quaternion {
        Quaternion::new(z.re, z.im * self.j[0], z.im * self.j[1], z.im * self.j[2])
    }

    /// Coordinates of `q` in `C_J` (projection; exact when `q` lies in the slice).
    pub fn project(self, q: Quaternion) -> Complex64 {
        Complex64::new(q.s0, q.s1 * self.j[0] + q.s2 * self.j[1] + q.s3 * self.j[2])
    }

    /// A unit `K` orthogonal to `J`; together with `J K` it spans the complement of `C_J`.
    pub fn orthogonal(self) -> Self {
        let [a, b, c] = self.j;
        // cross with the coordinate axis least aligned with J
        let k = if a.abs() <= b.abs() && a.abs() <= c.abs() {
            [0.0, c, -b]
        } else if b.abs() <= c.abs() {
            [-c, 0.0, a]
        } else {
            [b, -a, 0.0]
        };
        Self::normalized(k[0], k[1], k[2]).expect("orthogonal direction is nonzero")
    }

    pub fn neg(self) -> Self {
        Self {
            j: [-self.j[0], -self.j[1], -self.j[2]],
        }
    }
}

/// Splits `s = u + J v` with `v = |Im(s)| >= 0`.
///
/// Real `s` get the default unit `e1`.
pub fn decompose(s: Quaternion) -> (f64, f64, ImaginaryUnit) {
    let v = s.im_abs();
    if v == 0.0 {
        return (s.s0, 0.0, ImaginaryUnit::E1);
    }
    let j = ImaginaryUnit {
        j: [s.s1 / v, s.s2 / v, s.s3 / v],
    };
    (s.s0, v, j)
}

/// Principal argument in `[0, pi]` of the slice representative `u + i v`.
pub fn arg(s: Quaternion) -> Result<f64> {
    if s == Quaternion::ZERO {
        return Err(Error::DomainError);
    }
    let (u, v, _) = decompose(s);
    Ok(v.atan2(u))
}

/// The open sector `{ s != 0 : |Arg(s)| < omega }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Sector {
    omega: f64,
}

impl TryFrom<f64> for Sector {
    type Error = Error;
    fn try_from(omega: f64) -> Result<Self> {
        Self::new(omega)
    }
}

impl From<Sector> for f64 {
    fn from(s: Sector) -> Self {
        s.omega
    }
}

impl Sector {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega < PI) {
            return Err(Error::InvalidSector(omega));
        }
        Ok(Self { omega })
    }

    pub fn omega(self) -> f64 {
        self.omega
    }

    pub fn contains(self, s: Quaternion) -> Result<bool> {
        in_sector(s, self)
    }

    /// Membership in the closed sector (the origin included).
    pub fn closure_contains(self, s: Quaternion, tol: f64) -> bool {
        match arg(s) {
            Ok(a) => a <= self.omega + tol,
            Err(_) => true,
        }
    }
}

pub fn in_sector(s: Quaternion, sec: Sector) -> Result<bool> {
    Ok(arg(s)? < sec.omega)
}

/// The 2-sphere `[s] = Re(s) + S |Im(s)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    #[serde(serialize_with = "compact_f64")]
    pub center: f64,
    #[serde(serialize_with = "compact_f64")]
    pub radius: f64,
}

/// Integral values print without a fractional part (`2` rather than `2.0`).
fn compact_f64<S: serde::Serializer>(x: &f64, ser: S) -> std::result::Result<S::Ok, S::Error> {
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        ser.serialize_i64(*x as i64)
    } else {
        ser.serialize_f64(*x)
    }
}

impl Sphere {
    pub fn of(s: Quaternion) -> Self {
        Self {
            center: s.s0,
            radius: s.im_abs(),
        }
    }

    pub fn contains(self, s: Quaternion, tol: f64) -> bool {
        (s.s0 - self.center).abs() <= tol && (s.im_abs() - self.radius).abs() <= tol
    }

    /// Representative `center + J radius` in the slice `C_J`.
    pub fn point(self, j: ImaginaryUnit) -> Quaternion {
        j.embed(Complex64::new(self.center, self.radius))
    }

    /// Argument of the sphere's points; the origin counts as argument 0.
    pub fn arg(self) -> f64 {
        if self.center == 0.0 && self.radius == 0.0 {
            0.0
        } else {
            self.radius.atan2(self.center)
        }
    }

    pub fn modulus(self) -> f64 {
        self.center.hypot(self.radius)
    }
}
