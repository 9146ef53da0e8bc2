//! Dense complex operator algebra.
//!
//! [`OperatorMatrix`] is the carrier for every operator in the crate
//! (`rho`, `A`, `P`, `T`, generators). Storage is row-major. Arithmetic
//! operators panic on dimension mismatch since they are only used on
//! operators already validated against one another; the public entry
//! points ([`commutator`], [`mat_exp`], ...) check dimensions and return
//! [`Error`](crate::Error) instead.

mod eig;
mod eigh;
mod expm;
mod lu;

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{real, Cx, Real};

pub use eig::{diagonalize, eig_pair_general, eig_pair_general_with, Diagonalization, EigenPair, ZSelection};
pub use eigh::{eig_hermitian, eig_hermitian_with, HermitianEigen};
pub use expm::mat_exp;
pub use lu::Lu;

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix<T: Real> {
    dim: usize,
    data: Vec<Cx<T>>,
}

/// Column vector `|phi>` or, when used as a bra, the row of components of
/// `<chi|` (stored without conjugation).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    entries: Vec<Cx<T>>,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn new(dim: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("operator dimension must be >= 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::BadShape { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be >= 1");
        Self { dim, data: vec![Cx::zero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { Cx::one() } else { Cx::zero() })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        assert!(dim > 0, "operator dimension must be >= 1");
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<Cx<T>>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::BadShape { expected: dim, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    /// Real matrix from `f64` rows; convenient for fixtures.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Cx<T>>> =
            rows.iter().map(|r| r.iter().map(|&x| real(T::lit(x))).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn from_diag(diag: &[Cx<T>]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { Cx::zero() })
    }

    pub fn from_real_diag(diag: &[T]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { real(diag[i]) } else { Cx::zero() })
    }

    /// `|phi><chi|` with the bra given by its (unconjugated) row components.
    pub fn outer(phi: &StateVector<T>, chi: &StateVector<T>) -> Self {
        assert_eq!(phi.dim(), chi.dim(), "outer product dimension mismatch");
        Self::from_fn(phi.dim(), |i, j| phi[i] * chi[j])
    }

    /// Block-diagonal assembly.
    pub fn block_diag(blocks: &[OperatorMatrix<T>]) -> Self {
        let dim: usize = blocks.iter().map(|b| b.dim).sum();
        let mut out = Self::zeros(dim);
        let mut offset = 0;
        for b in blocks {
            for i in 0..b.dim {
                for j in 0..b.dim {
                    out[(offset + i, offset + j)] = b[(i, j)];
                }
            }
            offset += b.dim;
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[Cx<T>] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn column(&self, j: usize) -> StateVector<T> {
        StateVector { entries: (0..self.dim).map(|i| self[(i, j)]).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.dim).map(|i| self[(i, i)]).fold(Cx::<T>::zero(), |acc, z| acc + z)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> T {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `|M - M^dagger|_F`.
    pub fn hermiticity_gap(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `|M - M^dagger|_F <= eps * max(1, |M|_F)`.
    pub fn is_hermitian(&self, eps: f64) -> bool {
        let scale = T::one().max(self.frobenius_norm());
        self.hermiticity_gap().as_f64() <= eps * scale.as_f64()
    }

    /// Hermitian part `(M + M^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half)
    }

    pub fn scale(&self, c: Cx<T>) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * c).collect() }
    }

    pub fn scale_real(&self, c: T) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * c).collect() }
    }

    /// `self + c * I`.
    pub fn add_identity(&self, c: Cx<T>) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out[(i, i)] += c;
        }
        out
    }

    /// `M |v>`.
    pub fn apply(&self, v: &StateVector<T>) -> StateVector<T> {
        assert_eq!(self.dim, v.dim(), "apply dimension mismatch");
        let entries = (0..self.dim)
            .map(|i| {
                self.row(i).iter().zip(&v.entries).fold(Cx::<T>::zero(), |acc, (&m, &x)| acc + m * x)
            })
            .collect();
        StateVector { entries }
    }

    /// Row vector times matrix, `c^T M`.
    pub fn apply_left(&self, c: &StateVector<T>) -> StateVector<T> {
        assert_eq!(self.dim, c.dim(), "apply_left dimension mismatch");
        let mut entries = vec![Cx::zero(); self.dim];
        for (i, &ci) in c.entries.iter().enumerate() {
            for (e, &m) in entries.iter_mut().zip(self.row(i)) {
                *e += ci * m;
            }
        }
        StateVector { entries }
    }

    /// `M^k` by repeated squaring.
    pub fn powi(&self, mut k: u32) -> Self {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Frobenius distance.
    pub fn distance(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "distance dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (*a - *b).norm_sqr()).sum::<T>().sqrt()
    }

    /// Converts to another precision through `f64`.
    pub fn cast<U: Real>(&self) -> OperatorMatrix<U> {
        OperatorMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .map(|z| Cx::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
        }
    }
}

impl<T: Real> Index<(usize, usize)> for OperatorMatrix<T> {
    type Output = Cx<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for OperatorMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Real> Mul for &OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;
    fn mul(self, rhs: Self) -> OperatorMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut out = vec![Cx::zero(); n * n];
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(&rhs.data[k * n..(k + 1) * n]) {
                    *o += a * b;
                }
            }
        }
        OperatorMatrix { dim: n, data: out }
    }
}

impl<T: Real> Add for &OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;
    fn add(self, rhs: Self) -> OperatorMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        OperatorMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Real> Sub for &OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;
    fn sub(self, rhs: Self) -> OperatorMatrix<T> {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        OperatorMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<T: Real> Neg for &OperatorMatrix<T> {
    type Output = OperatorMatrix<T>;
    fn neg(self) -> OperatorMatrix<T> {
        OperatorMatrix { dim: self.dim, data: self.data.iter().map(|z| -*z).collect() }
    }
}

impl<T: Real> AddAssign<&OperatorMatrix<T>> for OperatorMatrix<T> {
    fn add_assign(&mut self, rhs: &OperatorMatrix<T>) {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += *b;
        }
    }
}

impl<T: Real> SubAssign<&OperatorMatrix<T>> for OperatorMatrix<T> {
    fn sub_assign(&mut self, rhs: &OperatorMatrix<T>) {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= *b;
        }
    }
}

impl<T: Real> StateVector<T> {
    pub fn new(entries: Vec<Cx<T>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("state dimension must be >= 1".into()));
        }
        Ok(Self { entries })
    }

    pub fn from_real(entries: &[f64]) -> Self {
        assert!(!entries.is_empty(), "state dimension must be >= 1");
        Self { entries: entries.iter().map(|&x| real(T::lit(x))).collect() }
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut entries = vec![Cx::zero(); dim];
        entries[k] = Cx::one();
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Cx<T>] {
        &self.entries
    }

    pub fn norm(&self) -> T {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Bilinear pairing `sum_i a_i b_i`; equals `<chi|phi>` when `self`
    /// holds the row components of the bra.
    pub fn pair(&self, other: &Self) -> Cx<T> {
        assert_eq!(self.dim(), other.dim(), "pairing dimension mismatch");
        self.entries.iter().zip(&other.entries).fold(Cx::<T>::zero(), |acc, (a, b)| acc + *a * *b)
    }

    /// Hermitian inner product `<self|other>`.
    pub fn inner(&self, other: &Self) -> Cx<T> {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(Cx::<T>::zero(), |acc, (a, b)| acc + a.conj() * *b)
    }

    pub fn conj(&self) -> Self {
        Self { entries: self.entries.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, c: Cx<T>) -> Self {
        Self { entries: self.entries.iter().map(|&z| z * c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "difference dimension mismatch");
        Self { entries: self.entries.iter().zip(&other.entries).map(|(a, b)| *a - *b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim(), other.dim(), "sum dimension mismatch");
        Self { entries: self.entries.iter().zip(&other.entries).map(|(a, b)| *a + *b).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Unit-norm copy; rejects the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        Ok(self.scale(real(T::one() / n)))
    }

    pub fn cast<U: Real>(&self) -> StateVector<U> {
        StateVector {
            entries: self
                .entries
                .iter()
                .map(|z| Cx::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())))
                .collect(),
        }
    }
}

impl<T: Real> Index<usize> for StateVector<T> {
    type Output = Cx<T>;
    fn index(&self, i: usize) -> &Cx<T> {
        &self.entries[i]
    }
}

/// `AB - BA`.
pub fn commutator<T: Real>(a: &OperatorMatrix<T>, b: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
    a.check_dim(b)?;
    Ok(&(a * b) - &(b * a))
}

/// `AB + BA`.
pub fn anticommutator<T: Real>(
    a: &OperatorMatrix<T>,
    b: &OperatorMatrix<T>,
) -> Result<OperatorMatrix<T>> {
    a.check_dim(b)?;
    Ok(&(a * b) + &(b * a))
}

/// `(Tr M, Tr M^2, ..., Tr M^kmax)`.
pub fn trace_moments<T: Real>(m: &OperatorMatrix<T>, kmax: usize) -> Result<Vec<Cx<T>>> {
    if kmax == 0 {
        return Err(Error::InvalidParameter("kmax must be >= 1".into()));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite { context: "trace_moments" });
    }
    let mut out = Vec::with_capacity(kmax);
    let mut power = m.clone();
    out.push(power.trace());
    for _ in 1..kmax {
        power = &power * m;
        out.push(power.trace());
    }
    Ok(out)
}
