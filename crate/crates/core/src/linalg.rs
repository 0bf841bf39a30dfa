//! Dense quaternionic matrices.
//!
//! Products follow the quaternion order of the factors, so `A * B` has entries
//! `sum_k a_ik b_kj`. Solves and norms go through the complex adjoint
//! embedding `A = A1 + A2 K  ->  [[A1, A2], [-conj A2, conj A1]]`.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hnum::{ImaginaryUnit, Quaternion};

#[derive(Clone, Debug, PartialEq)]
pub struct QMat {
    rows: usize,
    cols: usize,
    data: Vec<Quaternion>,
}

/// Nested-array JSON form `[[[s0,s1,s2,s3], ...], ...]`.
impl Serialize for QMat {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[Quaternion]> = self.data.chunks(self.cols.max(1)).collect();
        rows.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for QMat {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<Quaternion>> = Vec::deserialize(de)?;
        QMat::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Quaternion::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, Quaternion::ONE)
    }

    /// `q I`.
    pub fn scalar(n: usize, q: Quaternion) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = q;
        }
        m
    }

    pub fn diagonal(entries: &[Quaternion]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &q) in entries.iter().enumerate() {
            m[(i, i)] = q;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Quaternion) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Quaternion>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged quaternion matrix".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_real(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| Quaternion::real(m[(i, j)]))
    }

    /// `C0 + e1 C1 + e2 C2 + e3 C3`.
    pub fn from_components(c: &[DMatrix<f64>; 4]) -> Self {
        Self::from_fn(c[0].nrows(), c[0].ncols(), |i, j| {
            Quaternion::new(c[0][(i, j)], c[1][(i, j)], c[2][(i, j)], c[3][(i, j)])
        })
    }

    /// Maps a complex matrix into the slice `C_J`.
    pub fn from_complex(m: &DMatrix<Complex64>, unit: ImaginaryUnit) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| unit.embed(m[(i, j)]))
    }

    /// Writes `self = Z1 + Z2 K` with `Z1, Z2` over `C_J` and `K = unit.orthogonal()`.
    pub fn split_slice(&self, unit: ImaginaryUnit) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
        let j = unit.to_quaternion();
        let k = unit.orthogonal().to_quaternion();
        let jk = j * k;
        let mut z1 = DMatrix::zeros(self.rows, self.cols);
        let mut z2 = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for c in 0..self.cols {
                let q = self[(i, c)];
                let a = unit.project(q);
                let rest = q - unit.embed(a);
                z1[(i, c)] = a;
                z2[(i, c)] = Complex64::new(rest.dot(k), rest.dot(jk));
            }
        }
        (z1, z2)
    }

    /// Inverse of [`QMat::split_slice`].
    pub fn join_slice(z1: &DMatrix<Complex64>, z2: &DMatrix<Complex64>, unit: ImaginaryUnit) -> Self {
        let k = unit.orthogonal().to_quaternion();
        Self::from_fn(z1.nrows(), z1.ncols(), |i, c| {
            unit.embed(z1[(i, c)]) + unit.embed(z2[(i, c)]) * k
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Quaternion] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = &Quaternion> {
        self.data.iter()
    }

    /// Real component matrix `C_a`, `a = 0..3`.
    pub fn component(&self, a: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].component(a))
    }

    pub fn components(&self) -> [DMatrix<f64>; 4] {
        [0, 1, 2, 3].map(|a| self.component(a))
    }

    /// Entrywise conjugate; for `T = T0 + sum e_i T_i` this is `T0 - sum e_i T_i`.
    pub fn conj(&self) -> Self {
        self.map(Quaternion::conj)
    }

    pub fn map(&self, f: impl Fn(Quaternion) -> Quaternion) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&q| f(q)).collect(),
        }
    }

    pub fn scale(&self, x: f64) -> Self {
        self.map(|q| q * x)
    }

    /// Entries `a_ij q`.
    pub fn mul_right(&self, q: Quaternion) -> Self {
        self.map(|a| a * q)
    }

    /// Entries `q a_ij`.
    pub fn mul_left(&self, q: Quaternion) -> Self {
        self.map(|a| q * a)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|q| q.max_abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|q| q.is_finite())
    }

    /// Largest modulus among the imaginary parts of all entries.
    pub fn max_imaginary(&self) -> f64 {
        self.data.iter().map(|q| q.im_abs()).fold(0.0, f64::max)
    }

    /// Complex adjoint embedding over `C_{e1}` (size `2r x 2c`).
    pub fn adjoint(&self) -> DMatrix<Complex64> {
        let (a1, a2) = self.split_slice(ImaginaryUnit::E1);
        let (r, c) = (self.rows, self.cols);
        let mut m = DMatrix::zeros(2 * r, 2 * c);
        for i in 0..r {
            for j in 0..c {
                m[(i, j)] = a1[(i, j)];
                m[(i, c + j)] = a2[(i, j)];
                m[(r + i, j)] = -a2[(i, j)].conj();
                m[(r + i, c + j)] = a1[(i, j)].conj();
            }
        }
        m
    }

    /// Reads a quaternionic matrix back from its adjoint (first block row).
    pub fn from_adjoint(m: &DMatrix<Complex64>, rows: usize, cols: usize) -> Self {
        let a1 = m.view((0, 0), (rows, cols)).into_owned();
        let a2 = m.view((0, cols), (rows, cols)).into_owned();
        Self::join_slice(&a1, &a2, ImaginaryUnit::E1)
    }

    /// Singular values (each quaternionic value once, descending).
    pub fn singular_values(&self) -> Vec<f64> {
        if self.data.is_empty() {
            return Vec::new();
        }
        let sv = self.adjoint().singular_values();
        let mut v: Vec<f64> = sv.iter().copied().collect();
        v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        // the adjoint doubles every singular value
        v.into_iter().step_by(2).collect()
    }

    /// Spectral norm.
    pub fn norm2(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    /// `A^{-1} B` for square `A`.
    pub fn solve_left(a: &QMat, b: &QMat) -> Result<QMat> {
        if !a.is_square() || a.rows != b.rows {
            return Err(Error::DimensionMismatch(format!(
                "solve {}x{} against {}x{}",
                a.rows, a.cols, b.rows, b.cols
            )));
        }
        let x = a
            .adjoint()
            .lu()
            .solve(&b.adjoint())
            .ok_or(Error::SingularSystem)?;
        let out = QMat::from_adjoint(&x, b.rows, b.cols);
        if !out.is_finite() {
            return Err(Error::SingularSystem);
        }
        Ok(out)
    }

    /// `X A^{-1}` for square `A`.
    pub fn solve_right(x: &QMat, a: &QMat) -> Result<QMat> {
        if !a.is_square() || a.rows != x.cols {
            return Err(Error::DimensionMismatch(format!(
                "right-solve {}x{} against {}x{}",
                x.rows, x.cols, a.rows, a.cols
            )));
        }
        // Y A = X  <=>  adj(A)^T adj(Y)^T = adj(X)^T
        let yt = a
            .adjoint()
            .transpose()
            .lu()
            .solve(&x.adjoint().transpose())
            .ok_or(Error::SingularSystem)?;
        let out = QMat::from_adjoint(&yt.transpose(), x.rows, x.cols);
        if !out.is_finite() {
            return Err(Error::SingularSystem);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<QMat> {
        Self::solve_left(self, &Self::identity(self.rows))
    }

    /// Largest pairwise commutator residual of the real components,
    /// `||C_a C_b - C_b C_a||_F / max(||C_a|| ||C_b||, tiny)`.
    pub fn component_commutator(&self) -> f64 {
        let c = self.components();
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in a + 1..4 {
                let num = (&c[a] * &c[b] - &c[b] * &c[a]).norm();
                let den = (c[a].norm() * c[b].norm()).max(1e-300);
                worst = worst.max(num / den);
            }
        }
        worst
    }

    pub fn pow(&self, k: usize) -> QMat {
        let mut acc = QMat::identity(self.rows);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }
}

impl std::ops::Index<(usize, usize)> for QMat {
    type Output = Quaternion;
    fn index(&self, (i, j): (usize, usize)) -> &Quaternion {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Quaternion {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &QMat {
    type Output = QMat;
    fn mul(self, rhs: &QMat) -> QMat {
        assert_eq!(self.cols, rhs.rows, "quaternionic product dimension mismatch");
        let mut out = QMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Quaternion::ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }
}

impl Mul for QMat {
    type Output = QMat;
    fn mul(self, rhs: QMat) -> QMat {
        &self * &rhs
    }
}

impl Add for &QMat {
    type Output = QMat;
    fn add(self, rhs: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl Add for QMat {
    type Output = QMat;
    fn add(self, rhs: QMat) -> QMat {
        &self + &rhs
    }
}

impl Sub for &QMat {
    type Output = QMat;
    fn sub(self, rhs: &QMat) -> QMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl Sub for QMat {
    type Output = QMat;
    fn sub(self, rhs: QMat) -> QMat {
        &self - &rhs
    }
}

impl Neg for &QMat {
    type Output = QMat;
    fn neg(self) -> QMat {
        self.map(|q| -q)
    }
}

/// Compensated (Kahan) accumulator for quaternionic matrices; each real
/// coordinate is summed separately in insertion order.
#[derive(Clone, Debug)]
pub struct KahanAccumulator {
    rows: usize,
    cols: usize,
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl KahanAccumulator {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            sum: vec![0.0; 4 * rows * cols],
            comp: vec![0.0; 4 * rows * cols],
        }
    }

    pub fn add(&mut self, m: &QMat) {
        assert_eq!((m.rows, m.cols), (self.rows, self.cols));
        for (idx, q) in m.data.iter().enumerate() {
            for (a, x) in q.to_array().into_iter().enumerate() {
                let k = 4 * idx + a;
                let y = x - self.comp[k];
                let t = self.sum[k] + y;
                self.comp[k] = (t - self.sum[k]) - y;
                self.sum[k] = t;
            }
        }
    }

    pub fn value(&self) -> QMat {
        QMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .sum
                .chunks(4)
                .map(|c| Quaternion::new(c[0], c[1], c[2], c[3]))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> QMat {
        let mut x = seed as f64 * 0.7 + 0.3;
        QMat::from_fn(n, n, |_, _| {
            let mut c = [0.0; 4];
            for v in &mut c {
                x = (x * 7.31 + 0.19).fract();
                *v = 2.0 * x - 1.0;
            }
            Quaternion::from(c)
        })
    }

    #[test]
    fn adjoint_is_multiplicative() {
        let a = sample(3, 1);
        let b = sample(3, 2);
        let lhs = (&a * &b).adjoint();
        let rhs = a.adjoint() * b.adjoint();
        assert!((lhs - rhs).norm() < 1e-13);
        assert!((QMat::from_adjoint(&a.adjoint(), 3, 3) - a.clone()).max_abs() < 1e-15);
    }

    #[test]
    fn split_and_join_roundtrip() {
        let a = sample(2, 5);
        let u = ImaginaryUnit::normalized(0.3, -0.4, 0.8).unwrap();
        let (z1, z2) = a.split_slice(u);
        assert!((QMat::join_slice(&z1, &z2, u) - a).max_abs() < 1e-15);
    }

    #[test]
    fn solves() {
        let a = &sample(4, 3) + &QMat::scalar(4, Quaternion::real(3.0));
        let b = sample(4, 9);
        let x = QMat::solve_left(&a, &b).unwrap();
        assert!((&a * &x - b.clone()).max_abs() < 1e-12);
        let y = QMat::solve_right(&b, &a).unwrap();
        assert!((&y * &a - b).max_abs() < 1e-12);
        assert!(QMat::solve_left(&QMat::zeros(2, 2), &QMat::identity(2)).is_err());
    }

    #[test]
    fn singular_values_of_diagonal() {
        let d = QMat::diagonal(&[Quaternion::new(0.0, 3.0, 4.0, 0.0), Quaternion::real(2.0)]);
        let sv = d.singular_values();
        assert!((sv[0] - 5.0).abs() < 1e-14 && (sv[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kahan_matches_plain_sum() {
        let mut acc = KahanAccumulator::new(1, 1);
        let mut plain = 0.0;
        for k in 0..1000 {
            let x = 0.1 * (k as f64);
            acc.add(&QMat::scalar(1, Quaternion::real(x)));
            plain += x;
        }
        assert!((acc.value()[(0, 0)].s0 - 49950.0).abs() <= (plain - 49950.0).abs());
    }

    #[test]
    fn json_shape() {
        let m = QMat::diagonal(&[Quaternion::ONE, Quaternion::E1]);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(
            s,
            "[[[1.0,0.0,0.0,0.0],[0.0,0.0,0.0,0.0]],[[0.0,0.0,0.0,0.0],[0.0,1.0,0.0,0.0]]]"
        );
        assert_eq!(serde_json::from_str::<QMat>(&s).unwrap(), m);
    }
}
