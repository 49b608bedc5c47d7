//! Small dense complex linear algebra and the Padé matrix exponential.
//!
//! Matrices here are at most a few dozen rows, so everything is row-major
//! `Vec` storage with naive kernels. The exponential is written once against
//! [`MatrixAlgebra`] and used both for plain dense matrices and for the
//! block lower-triangular Toeplitz generators of the counting hierarchies.

use std::ops::{Index, IndexMut};

use num_complex::Complex;

use crate::scalar::{cz, re, Real};

/// Operations needed by [`expm`].
pub trait MatrixAlgebra<T: Real>: Clone {
    fn identity_like(&self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    /// `self += s * other`
    fn add_scaled(&mut self, other: &Self, s: T);
    fn scale(&mut self, s: T);
    /// Induced 1-norm (max column sum).
    fn norm1(&self) -> T;
    /// `self⁻¹ · rhs`. A singular `self` yields non-finite entries.
    fn solve(&self, rhs: &Self) -> Self;
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![cz(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = re(T::one());
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds from row-major nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "rows must form a square matrix");
        Self { n, data: rows.iter().flatten().copied().collect() }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                let row = &self.data[i * self.n..(i + 1) * self.n];
                row.iter().zip(v).fold(cz(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (p, q) = (self.n, rhs.n);
        Self::from_fn(p * q, |i, j| self[(i / q, j / q)] * rhs[(i % q, j % q)])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Self { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        Self { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }

    pub fn scaled(&self, s: Complex<T>) -> Self {
        Self { n: self.n, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.n).fold(cz(), |acc, i| acc + self[(i, i)])
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        self.data.iter().zip(&rhs.data).map(|(a, b)| (a - b).norm()).fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n + j]
    }
}

/// LU factorization with partial pivoting.
pub(crate) struct Lu<T> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub(crate) fn new(a: &CMatrix<T>) -> Self {
        let n = a.n;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu[(x, k)].norm().partial_cmp(&lu[(y, k)].norm()).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap_or(k);
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - f * u;
                }
            }
        }
        Self { lu, perm }
    }

    pub(crate) fn solve_vec(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.lu.n;
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] = x[i] - self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] = x[i] - self.lu[(i, j)] * x[j];
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        x
    }

    pub(crate) fn solve_matrix(&self, b: &CMatrix<T>) -> CMatrix<T> {
        let n = b.n;
        let mut out = CMatrix::zeros(n);
        let mut col = vec![cz(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            let x = self.solve_vec(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }
}

impl<T: Real> MatrixAlgebra<T> for CMatrix<T> {
    fn identity_like(&self) -> Self {
        Self::identity(self.n)
    }

    fn mul(&self, rhs: &Self) -> Self {
        let n = self.n;
        assert_eq!(n, rhs.n);
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d = *d + a * b;
                }
            }
        }
        out
    }

    fn add_scaled(&mut self, other: &Self, s: T) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b * s;
        }
    }

    fn scale(&mut self, s: T) {
        for a in &mut self.data {
            *a = *a * s;
        }
    }

    fn norm1(&self) -> T {
        (0..self.n).map(|j| (0..self.n).fold(T::zero(), |acc, i| acc + self[(i, j)].norm())).fold(T::zero(), T::max)
    }

    fn solve(&self, rhs: &Self) -> Self {
        Lu::new(self).solve_matrix(rhs)
    }
}

/// Block lower-triangular Toeplitz matrix `Σ_j Sʲ ⊗ A_j`, where `S` is the
/// down-shift on `blocks.len()` levels. Closed under products and inverses,
/// so the exponential of a hierarchy generator stays in this form.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockToeplitz<T> {
    blocks: Vec<CMatrix<T>>,
}

impl<T: Real> BlockToeplitz<T> {
    /// `blocks[j]` sits on the j-th block sub-diagonal. All blocks must share a size.
    pub fn new(blocks: Vec<CMatrix<T>>) -> Self {
        assert!(!blocks.is_empty());
        let b = blocks[0].dim();
        assert!(blocks.iter().all(|m| m.dim() == b));
        Self { blocks }
    }

    pub fn levels(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, j: usize) -> &CMatrix<T> {
        &self.blocks[j]
    }

    /// Applies to a stacked vector of `levels()` blocks.
    pub fn apply(&self, x: &[Vec<Complex<T>>]) -> Vec<Vec<Complex<T>>> {
        assert_eq!(x.len(), self.levels());
        let b = self.blocks[0].dim();
        (0..x.len())
            .map(|j| {
                let mut acc = vec![cz(); b];
                for i in 0..=j {
                    for (a, v) in acc.iter_mut().zip(self.blocks[i].mul_vec(&x[j - i])) {
                        *a = *a + v;
                    }
                }
                acc
            })
            .collect()
    }

    /// Dense expansion, for cross-checks.
    pub fn to_dense(&self) -> CMatrix<T> {
        let b = self.blocks[0].dim();
        let l = self.levels();
        CMatrix::from_fn(b * l, |i, j| {
            let (bi, bj) = (i / b, j / b);
            if bi >= bj {
                self.blocks[bi - bj][(i % b, j % b)]
            } else {
                cz()
            }
        })
    }
}

impl<T: Real> MatrixAlgebra<T> for BlockToeplitz<T> {
    fn identity_like(&self) -> Self {
        let b = self.blocks[0].dim();
        let mut blocks = vec![CMatrix::zeros(b); self.levels()];
        blocks[0] = CMatrix::identity(b);
        Self { blocks }
    }

    fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.levels(), rhs.levels());
        let b = self.blocks[0].dim();
        let blocks = (0..self.levels())
            .map(|j| {
                let mut acc = CMatrix::zeros(b);
                for i in 0..=j {
                    acc.add_scaled(&self.blocks[i].mul(&rhs.blocks[j - i]), T::one());
                }
                acc
            })
            .collect();
        Self { blocks }
    }

    fn add_scaled(&mut self, other: &Self, s: T) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            a.add_scaled(b, s);
        }
    }

    fn scale(&mut self, s: T) {
        for a in &mut self.blocks {
            a.scale(s);
        }
    }

    fn norm1(&self) -> T {
        // The first block column contains every block, so it dominates.
        let b = self.blocks[0].dim();
        (0..b)
            .map(|j| {
                self.blocks
                    .iter()
                    .map(|m| (0..b).fold(T::zero(), |acc, i| acc + m[(i, j)].norm()))
                    .fold(T::zero(), |a, x| a + x)
            })
            .fold(T::zero(), T::max)
    }

    fn solve(&self, rhs: &Self) -> Self {
        let lu = Lu::new(&self.blocks[0]);
        let mut x: Vec<CMatrix<T>> = Vec::with_capacity(self.levels());
        for j in 0..self.levels() {
            let mut r = rhs.blocks[j].clone();
            for i in 1..=j {
                r.add_scaled(&self.blocks[i].mul(&x[j - i]), -T::one());
            }
            x.push(lu.solve_matrix(&r));
        }
        Self { blocks: x }
    }
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
// Backward-error bounds for double precision (Higham 2005, table 2.3).
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.539_398_330_063_23e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068e0)];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant
/// of degree 3, 5, 7, 9 or 13, chosen from the 1-norm.
pub fn expm<T: Real, A: MatrixAlgebra<T>>(a: &A) -> A {
    let norm = a.norm1().to_f64_lossy();
    let id = a.identity_like();
    if norm == 0.0 {
        return id;
    }
    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            return pade_low(a, coeffs, &id);
        }
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let mut scaled = a.clone();
    scaled.scale(T::lit(2f64.powi(-s)));
    let mut r = pade13(&scaled, &id);
    for _ in 0..s {
        r = r.mul(&r);
    }
    r
}

fn pade_low<T: Real, A: MatrixAlgebra<T>>(a: &A, b: &[f64], id: &A) -> A {
    let a2 = a.mul(a);
    let m = b.len() - 1;
    // Even powers A^0, A^2, ..., A^(m-1).
    let mut powers = vec![id.clone()];
    for k in 1..=m / 2 {
        let next = powers[k - 1].mul(&a2);
        powers.push(next);
    }
    let mut u_inner = id.clone();
    u_inner.scale(T::lit(b[1]));
    let mut v = id.clone();
    v.scale(T::lit(b[0]));
    for k in 1..=m / 2 {
        u_inner.add_scaled(&powers[k], T::lit(b[2 * k + 1]));
        v.add_scaled(&powers[k], T::lit(b[2 * k]));
    }
    finish_pade(a.mul(&u_inner), v)
}

fn pade13<T: Real, A: MatrixAlgebra<T>>(a: &A, id: &A) -> A {
    let b: Vec<T> = PADE13.iter().map(|&x| T::lit(x)).collect();
    let a2 = a.mul(a);
    let a4 = a2.mul(&a2);
    let a6 = a4.mul(&a2);

    let mut w1 = a6.clone();
    w1.scale(b[13]);
    w1.add_scaled(&a4, b[11]);
    w1.add_scaled(&a2, b[9]);
    let mut u_inner = a6.mul(&w1);
    u_inner.add_scaled(&a6, b[7]);
    u_inner.add_scaled(&a4, b[5]);
    u_inner.add_scaled(&a2, b[3]);
    u_inner.add_scaled(id, b[1]);
    let u = a.mul(&u_inner);

    let mut z1 = a6.clone();
    z1.scale(b[12]);
    z1.add_scaled(&a4, b[10]);
    z1.add_scaled(&a2, b[8]);
    let mut v = a6.mul(&z1);
    v.add_scaled(&a6, b[6]);
    v.add_scaled(&a4, b[4]);
    v.add_scaled(&a2, b[2]);
    v.add_scaled(id, b[0]);
    finish_pade(u, v)
}

fn finish_pade<T: Real, A: MatrixAlgebra<T>>(u: A, v: A) -> A {
    let mut p = v.clone();
    p.add_scaled(&u, T::one());
    let mut q = v;
    q.add_scaled(&u, -T::one());
    q.solve(&p)
}
