//! Dense 2x2 complex matrices.
//!
//! Everything the coefficient layer needs lives here: arithmetic, adjoint,
//! determinant, inverse, Hermitian and PSD tests, the closed-form PSD square
//! root and the minimum-norm solve of `S F M = M`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

/// Complex scalar over `T`.
pub type Cx<T> = Complex<T>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatError {
    #[error("matrix is singular (|det| = {det_abs:e}, tolerance {tol:e})")]
    Singular { det_abs: f64, tol: f64 },
    #[error("matrix is not Hermitian (defect {defect:e}, tolerance {tol:e})")]
    NotHermitian { defect: f64, tol: f64 },
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("non-finite matrix entry")]
    NonFinite,
}

/// 2x2 complex matrix stored row-major.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Mat2<T> {
    pub e11: Cx<T>,
    pub e12: Cx<T>,
    pub e21: Cx<T>,
    pub e22: Cx<T>,
}

impl<T: Real> fmt::Debug for Mat2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}{:+}i, {}{:+}i], [{}{:+}i, {}{:+}i]]",
            self.e11.re,
            self.e11.im,
            self.e12.re,
            self.e12.im,
            self.e21.re,
            self.e21.im,
            self.e22.re,
            self.e22.im
        )
    }
}

#[inline]
fn c<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[inline]
fn cr<T: Real>(re: T) -> Cx<T> {
    Complex::new(re, T::zero())
}

/// Result of the Hermitian test: the largest entry of `M - M*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermFlag<T> {
    pub hermitian: bool,
    pub defect: T,
}

/// Minimum-norm solution of `S F M = M` with its residual `|S F M - M|_F`.
#[derive(Debug, Clone, Copy)]
pub struct Sandwich<T: Real> {
    pub f: Mat2<T>,
    pub residual: T,
    pub rank: usize,
}

impl<T: Real> Mat2<T> {
    pub fn new(e11: Cx<T>, e12: Cx<T>, e21: Cx<T>, e22: Cx<T>) -> Self {
        Self { e11, e12, e21, e22 }
    }

    pub fn from_real(a11: T, a12: T, a21: T, a22: T) -> Self {
        Self::new(cr(a11), cr(a12), cr(a21), cr(a22))
    }

    pub fn zero() -> Self {
        Self::from_real(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn identity() -> Self {
        Self::from_real(T::one(), T::zero(), T::zero(), T::one())
    }

    /// All four entries equal to one.
    pub fn ones() -> Self {
        Self::from_real(T::one(), T::one(), T::one(), T::one())
    }

    pub fn diag(d1: T, d2: T) -> Self {
        Self::from_real(d1, T::zero(), T::zero(), d2)
    }

    pub fn diag_cx(d1: Cx<T>, d2: Cx<T>) -> Self {
        Self::new(d1, Cx::new(T::zero(), T::zero()), Cx::new(T::zero(), T::zero()), d2)
    }

    /// Entry `(i, j)` with zero-based indices.
    pub fn get(&self, i: usize, j: usize) -> Cx<T> {
        match (i, j) {
            (0, 0) => self.e11,
            (0, 1) => self.e12,
            (1, 0) => self.e21,
            (1, 1) => self.e22,
            _ => panic!("Mat2 index ({i}, {j}) out of range"),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: Cx<T>) {
        match (i, j) {
            (0, 0) => self.e11 = v,
            (0, 1) => self.e12 = v,
            (1, 0) => self.e21 = v,
            (1, 1) => self.e22 = v,
            _ => panic!("Mat2 index ({i}, {j}) out of range"),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.e11 * s, self.e12 * s, self.e21 * s, self.e22 * s)
    }

    pub fn scale_cx(&self, s: Cx<T>) -> Self {
        Self::new(self.e11 * s, self.e12 * s, self.e21 * s, self.e22 * s)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::new(self.e11.conj(), self.e21.conj(), self.e12.conj(), self.e22.conj())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.e11, self.e21, self.e12, self.e22)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.e11.conj(), self.e12.conj(), self.e21.conj(), self.e22.conj())
    }

    pub fn det(&self) -> Cx<T> {
        self.e11 * self.e22 - self.e12 * self.e21
    }

    pub fn tr(&self) -> Cx<T> {
        self.e11 + self.e22
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        (self.e11.norm_sqr() + self.e12.norm_sqr() + self.e21.norm_sqr() + self.e22.norm_sqr())
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.e11
            .norm()
            .max(self.e12.norm())
            .max(self.e21.norm())
            .max(self.e22.norm())
    }

    pub fn is_finite(&self) -> bool {
        [self.e11, self.e12, self.e21, self.e22]
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `(M + M*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale(T::lit(0.5))
    }

    /// Default Hermitian tolerance `1e-10 (1 + |M|)`.
    pub fn tol_herm(&self) -> T {
        T::lit(1e-10) * (T::one() + self.norm())
    }

    /// Default singularity tolerance `1e-12 (1 + |M|)`.
    pub fn tol_sing(&self) -> T {
        T::lit(1e-12) * (T::one() + self.norm())
    }

    /// Largest entry of `M - M*` compared against `tol`.
    pub fn is_hermitian(&self, tol: T) -> HermFlag<T> {
        let defect = (*self - self.adjoint()).max_abs();
        HermFlag { hermitian: defect <= tol, defect }
    }

    /// Eigenvalues `(low, high)` of the Hermitian part.
    pub fn hermitian_eigenvalues(&self) -> (T, T) {
        let h = self.hermitian_part();
        let half = T::lit(0.5);
        let mid = (h.e11.re + h.e22.re) * half;
        let gap = (h.e11.re - h.e22.re) * half;
        let rad = (gap * gap + h.e12.norm_sqr()).sqrt();
        (mid - rad, mid + rad)
    }

    /// PSD test on a matrix that must be Hermitian within `tol_herm`.
    /// `tol` bounds how negative the smallest eigenvalue may be.
    pub fn is_psd(&self, tol: T) -> Result<bool, MatError> {
        if !self.is_finite() {
            return Err(MatError::NonFinite);
        }
        let flag = self.is_hermitian(self.tol_herm());
        if !flag.hermitian {
            return Err(MatError::NotHermitian {
                defect: flag.defect.to_f64().unwrap_or(f64::NAN),
                tol: self.tol_herm().to_f64().unwrap_or(f64::NAN),
            });
        }
        let (lo, _) = self.hermitian_eigenvalues();
        Ok(lo >= -tol)
    }

    pub fn inv(&self) -> Result<Self, MatError> {
        let d = self.det();
        let tol = self.tol_sing();
        if !d.re.is_finite() || !d.im.is_finite() {
            return Err(MatError::NonFinite);
        }
        if d.norm() <= tol {
            return Err(MatError::Singular {
                det_abs: d.norm().to_f64().unwrap_or(f64::NAN),
                tol: tol.to_f64().unwrap_or(f64::NAN),
            });
        }
        let inv_d = d.inv();
        Ok(Self::new(self.e22 * inv_d, -self.e12 * inv_d, -self.e21 * inv_d, self.e11 * inv_d))
    }

    /// Hermitian PSD square root by the closed form
    /// `S = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M))`.
    pub fn sqrt_psd(&self) -> Result<Self, MatError> {
        let tol = self.tol_herm();
        if !self.is_psd(tol)? {
            let (lo, _) = self.hermitian_eigenvalues();
            return Err(MatError::NotPsd { min_eig: lo.to_f64().unwrap_or(f64::NAN) });
        }
        let h = self.hermitian_part();
        let tr = h.e11.re + h.e22.re;
        let det = (h.e11.re * h.e22.re - h.e12.norm_sqr()).max(T::zero());
        let s = det.sqrt();
        let tau = tr + s + s;
        if tau <= T::min_positive_value() {
            return Ok(Self::zero());
        }
        let root = (h + Self::identity().scale(s)).scale(T::one() / tau.sqrt());
        Ok(root.hermitian_part())
    }

    /// Solution of `S F M = M`: `S^-1` when `S` is invertible, otherwise the
    /// minimum-norm least-squares solution.
    ///
    /// The singular case is vectorised as `(M^T kron S) vec F = vec M` and solved
    /// with a column-pivoted Householder QR followed by a second QR for the
    /// minimum-norm step.
    pub fn solve_sandwich(s: &Self, m: &Self) -> Sandwich<T> {
        // vec is column-major: [x11, x21, x12, x22]
        let mt = m.transpose();
        let mut k = [[cr(T::zero()); 4]; 4];
        for p in 0..2 {
            for q in 0..2 {
                let coef = mt.get(p, q);
                for i in 0..2 {
                    for j in 0..2 {
                        k[2 * p + i][2 * q + j] = coef * s.get(i, j);
                    }
                }
            }
        }
        let b = [m.e11, m.e21, m.e12, m.e22];
        let (x, rank) = lstsq_min_norm(k, b, T::lit(1e-10));
        let f = match s.inv() {
            Ok(inv) => inv,
            Err(_) => Self::new(x[0], x[2], x[1], x[3]),
        };
        let residual = (*s * f * *m - *m).norm();
        Sandwich { f, residual, rank }
    }

    /// Entries packed as `[re11, im11, re12, im12, re21, im21, re22, im22]`.
    pub fn to_flat(&self) -> [T; 8] {
        [
            self.e11.re,
            self.e11.im,
            self.e12.re,
            self.e12.im,
            self.e21.re,
            self.e21.im,
            self.e22.re,
            self.e22.im,
        ]
    }

    pub fn from_flat(v: &[T]) -> Self {
        Self::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7]))
    }

    pub fn write_flat(&self, out: &mut [T]) {
        out[..8].copy_from_slice(&self.to_flat());
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.e11 + o.e11, self.e12 + o.e12, self.e21 + o.e21, self.e22 + o.e22)
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.e11 - o.e11, self.e12 - o.e12, self.e21 - o.e21, self.e22 - o.e22)
    }
}

impl<T: Real> AddAssign for Mat2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Mat2<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.e11, -self.e12, -self.e21, -self.e22)
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.e11 * o.e11 + self.e12 * o.e21,
            self.e11 * o.e12 + self.e12 * o.e22,
            self.e21 * o.e11 + self.e22 * o.e21,
            self.e21 * o.e12 + self.e22 * o.e22,
        )
    }
}

impl<T: Real> Mul<T> for Mat2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        self.scale(s)
    }
}

impl<T: Real> Mul<Cx<T>> for Mat2<T> {
    type Output = Self;
    fn mul(self, s: Cx<T>) -> Self {
        self.scale_cx(s)
    }
}

/// Householder vector for `x`, returning `(v, alpha)` with `H x = alpha e1`
/// and `H = I - 2 v v*`. `v` is zero when `x` already vanishes.
fn householder<T: Real>(x: &[Cx<T>]) -> (Vec<Cx<T>>, Cx<T>) {
    let norm = x.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
    let zero = cr(T::zero());
    if norm == T::zero() {
        return (vec![zero; x.len()], zero);
    }
    let phase = if x[0].norm() > T::zero() { x[0] / x[0].norm() } else { cr(T::one()) };
    let alpha = -phase * norm;
    let mut v: Vec<Cx<T>> = x.to_vec();
    v[0] -= alpha;
    let vn = v.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
    if vn == T::zero() {
        return (vec![zero; x.len()], x[0]);
    }
    for z in v.iter_mut() {
        *z = *z / vn;
    }
    (v, alpha)
}

/// Minimum-norm least-squares solve of a square complex system.
/// Returns the solution and the numerical rank (relative tolerance `tol_rank`).
pub(crate) fn lstsq_min_norm<T: Real, const N: usize>(
    mut a: [[Cx<T>; N]; N],
    mut b: [Cx<T>; N],
    tol_rank: T,
) -> ([Cx<T>; N], usize) {
    let zero = cr(T::zero());
    let two = T::lit(2.0);
    let mut perm: [usize; N] = [0; N];
    for (i, p) in perm.iter_mut().enumerate() {
        *p = i;
    }
    let mut diag_abs = [T::zero(); N];
    for k in 0..N {
        // pivot on the largest remaining column norm
        let mut best = k;
        let mut best_norm = -T::one();
        for j in k..N {
            let cn = (k..N).map(|i| a[i][j].norm_sqr()).fold(T::zero(), |x, y| x + y);
            if cn > best_norm {
                best_norm = cn;
                best = j;
            }
        }
        if best != k {
            for row in a.iter_mut() {
                row.swap(k, best);
            }
            perm.swap(k, best);
        }
        let col: Vec<Cx<T>> = (k..N).map(|i| a[i][k]).collect();
        let (v, alpha) = householder(&col);
        if v.iter().any(|z| z.norm_sqr() > T::zero()) {
            for j in k..N {
                let mut dot = zero;
                for i in k..N {
                    dot += v[i - k].conj() * a[i][j];
                }
                for i in k..N {
                    a[i][j] -= v[i - k] * dot * two;
                }
            }
            let mut dot = zero;
            for i in k..N {
                dot += v[i - k].conj() * b[i];
            }
            for i in k..N {
                b[i] -= v[i - k] * dot * two;
            }
            a[k][k] = alpha;
            for row in a.iter_mut().skip(k + 1) {
                row[k] = zero;
            }
        }
        diag_abs[k] = a[k][k].norm();
    }
    let lead = diag_abs[0];
    let mut rank = 0;
    if lead > T::zero() {
        while rank < N && diag_abs[rank] > tol_rank * lead {
            rank += 1;
        }
    }
    let mut x = [zero; N];
    if rank == 0 {
        return (x, 0);
    }
    // W = R[0..rank][0..N]; factor W* = Q2 R2, then W y = c gives
    // R2* (Q2* y) = c, and the minimum-norm y has Q2* y = [u; 0].
    let mut w = vec![vec![zero; rank]; N];
    for i in 0..rank {
        for j in 0..N {
            w[j][i] = a[i][j].conj();
        }
    }
    let mut reflectors: Vec<Vec<Cx<T>>> = Vec::with_capacity(rank);
    for k in 0..rank {
        let col: Vec<Cx<T>> = (k..N).map(|i| w[i][k]).collect();
        let (v, alpha) = householder(&col);
        if v.iter().any(|z| z.norm_sqr() > T::zero()) {
            for j in k..rank {
                let mut dot = zero;
                for i in k..N {
                    dot += v[i - k].conj() * w[i][j];
                }
                for i in k..N {
                    w[i][j] -= v[i - k] * dot * two;
                }
            }
            w[k][k] = alpha;
        }
        reflectors.push(v);
    }
    // forward substitution with R2* (lower triangular)
    let mut u = vec![zero; N];
    for i in 0..rank {
        let mut acc = b[i];
        for j in 0..i {
            acc -= w[j][i].conj() * u[j];
        }
        u[i] = acc / w[i][i].conj();
    }
    // y = Q2 u = H_0 H_1 ... H_{rank-1} u
    for k in (0..rank).rev() {
        let v = &reflectors[k];
        let mut dot = zero;
        for i in k..N {
            dot += v[i - k].conj() * u[i];
        }
        for i in k..N {
            u[i] -= v[i - k] * dot * two;
        }
    }
    for (j, &p) in perm.iter().enumerate() {
        x[p] = u[j];
    }
    (x, rank)
}
