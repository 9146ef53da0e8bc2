//! One eigen-pair of a general (non-Hermitian) complex matrix.
//!
//! Eigenvalues come from the characteristic polynomial of the Householder
//! Hessenberg form, rooted with Aberth–Ehrlich iteration and polished by
//! Newton steps on `det(M - zI)` evaluated through LU of the original
//! matrix. The eigenvector is a null vector of `M - zI` obtained by Gaussian
//! elimination with complete pivoting.

use std::cmp::Ordering;

use num_traits::{One, Zero};

use super::{Lu, OperatorMatrix, StateVector};
use crate::error::{Error, Result};
use crate::scalar::{real, to_c64, Cx, Real};
use crate::tolerances::Tolerances;

const ABERTH_MAX_ITERATIONS: usize = 2000;
const NEWTON_MAX_ITERATIONS: usize = 30;

/// How the eigenvalue is chosen among all roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZSelection<T: Real> {
    /// Largest real part; ties (within tolerance) broken by largest imaginary part.
    Lexicographic,
    /// The root nearest to the given value.
    Pinned(Cx<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T: Real> {
    pub z: Cx<T>,
    /// Unit norm, first non-negligible component real positive.
    pub vector: StateVector<T>,
    /// Algebraic multiplicity of `z` as detected by root clustering.
    pub multiplicity: usize,
    /// `|Mv - zv|` for the unit vector.
    pub residual: T,
}

pub fn eig_pair_general<T: Real>(m: &OperatorMatrix<T>) -> Result<EigenPair<T>> {
    eig_pair_general_with(m, ZSelection::Lexicographic, &Tolerances::for_scalar::<T>())
}

pub fn eig_pair_general_with<T: Real>(
    m: &OperatorMatrix<T>,
    selection: ZSelection<T>,
    tol: &Tolerances,
) -> Result<EigenPair<T>> {
    let n = m.dim();
    if n > tol.eig_dim_cap {
        return Err(Error::DimensionCap { dim: n, cap: tol.eig_dim_cap });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite { context: "eig_pair_general input" });
    }
    let roots = eigenvalues(m, tol)?;
    let scale = T::one().max(m.frobenius_norm());
    let tie = T::lit(tol.eigen_tie) * scale;
    let (z, multiplicity) = match selection {
        ZSelection::Lexicographic => *roots
            .iter()
            .max_by(|a, b| lexicographic(a.0, b.0, tie))
            .expect("at least one root"),
        ZSelection::Pinned(target) => *roots
            .iter()
            .min_by(|a, b| {
                (a.0 - target).norm().partial_cmp(&(b.0 - target).norm()).unwrap_or(Ordering::Equal)
            })
            .expect("at least one root"),
    };

    let shifted = m.add_identity(-z);
    let raw = null_vector(&shifted, T::lit(tol.null_pivot) * scale);
    let vector = fix_phase(raw.normalized()?);
    let residual = shifted.apply(&vector).norm();
    let bound = T::lit(tol.eig_pair_residual) * m.frobenius_norm();
    if residual > bound {
        let zc = to_c64(z);
        return Err(Error::Defective { re: zc.re, im: zc.im, residual: residual.as_f64() });
    }
    Ok(EigenPair { z, vector, multiplicity, residual })
}

/// `M = V diag(values) V^{-1}` for a matrix with simple eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonalization<T: Real> {
    pub values: Vec<Cx<T>>,
    /// Unit eigenvectors as columns.
    pub vectors: OperatorMatrix<T>,
    pub inverse: OperatorMatrix<T>,
}

impl<T: Real> Diagonalization<T> {
    /// `f(M) v`.
    pub fn apply_function(&self, f: impl Fn(Cx<T>) -> Cx<T>, v: &StateVector<T>) -> StateVector<T> {
        let c = self.inverse.apply(v);
        let scaled: Vec<Cx<T>> = c.entries().iter().zip(&self.values).map(|(&x, &l)| x * f(l)).collect();
        self.vectors.apply(&StateVector::new(scaled).expect("non-empty"))
    }

    /// Row components of `v^T f(M)`.
    pub fn apply_function_left(&self, f: impl Fn(Cx<T>) -> Cx<T>, v: &StateVector<T>) -> StateVector<T> {
        let c = self.vectors.apply_left(v);
        let scaled: Vec<Cx<T>> = c.entries().iter().zip(&self.values).map(|(&x, &l)| x * f(l)).collect();
        self.inverse.apply_left(&StateVector::new(scaled).expect("non-empty"))
    }

    /// `|V|_1 |V^{-1}|_1`.
    pub fn condition(&self) -> T {
        self.vectors.one_norm() * self.inverse.one_norm()
    }
}

/// Eigendecomposition of a matrix whose eigenvalues are all simple and
/// whose eigenvector basis has condition number at most `max_condition`;
/// `None` otherwise.
pub fn diagonalize<T: Real>(
    m: &OperatorMatrix<T>,
    max_condition: f64,
    tol: &Tolerances,
) -> Result<Option<Diagonalization<T>>> {
    let n = m.dim();
    if n > tol.eig_dim_cap {
        return Err(Error::DimensionCap { dim: n, cap: tol.eig_dim_cap });
    }
    if !m.is_finite() {
        return Err(Error::NonFinite { context: "diagonalize input" });
    }
    let roots = eigenvalues(m, tol)?;
    if roots.len() != n {
        return Ok(None);
    }
    let scale = T::one().max(m.frobenius_norm());
    let bound = T::lit(tol.eig_pair_residual) * scale;
    let mut columns = Vec::with_capacity(n);
    for &(z, _) in &roots {
        let shifted = m.add_identity(-z);
        let v = match null_vector(&shifted, T::lit(tol.null_pivot) * scale).normalized() {
            Ok(v) => fix_phase(v),
            Err(_) => return Ok(None),
        };
        if shifted.apply(&v).norm() > bound {
            return Ok(None);
        }
        columns.push(v);
    }
    let vectors = OperatorMatrix::from_fn(n, |i, j| columns[j].entries()[i]);
    let inverse = match Lu::factor(&vectors) {
        Ok(lu) => lu.inverse(),
        Err(_) => return Ok(None),
    };
    let d = Diagonalization { values: roots.into_iter().map(|r| r.0).collect(), vectors, inverse };
    let cond = d.condition();
    Ok(if cond.is_finite() && cond.as_f64() <= max_condition { Some(d) } else { None })
}

/// All eigenvalues with multiplicities, clustered and polished.
pub(crate) fn eigenvalues<T: Real>(
    m: &OperatorMatrix<T>,
    tol: &Tolerances,
) -> Result<Vec<(Cx<T>, usize)>> {
    if m.dim() == 1 {
        return Ok(vec![(m[(0, 0)], 1)]);
    }
    let coeffs = characteristic_polynomial(&hessenberg(m));
    let raw = polynomial_roots(&coeffs);
    let scale = T::one().max(m.frobenius_norm());
    let radius = T::lit(tol.root_cluster) * scale;
    let clustered = cluster(&raw, radius);
    let polished: Vec<(Cx<T>, usize)> = clustered
        .iter()
        .enumerate()
        .map(|(i, &(z, mult))| {
            let nearest = clustered
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, (w, _))| (z - *w).norm())
                .fold(T::infinity(), T::min);
            (newton_polish(m, z, mult, nearest), mult)
        })
        .collect();
    // polishing can move neighbouring approximations onto one root
    let mut merged: Vec<(Cx<T>, usize)> = Vec::new();
    for (z, mult) in polished {
        if let Some(slot) = merged.iter_mut().find(|(w, _)| (z - *w).norm() <= radius) {
            let total = slot.1 + mult;
            slot.0 = (slot.0 * real(T::lit(slot.1 as f64)) + z * real(T::lit(mult as f64)))
                / real(T::lit(total as f64));
            slot.1 = total;
        } else {
            merged.push((z, mult));
        }
    }
    Ok(merged)
}

fn lexicographic<T: Real>(a: Cx<T>, b: Cx<T>, tie: T) -> Ordering {
    if (a.re - b.re).abs() > tie {
        a.re.partial_cmp(&b.re).unwrap_or(Ordering::Equal)
    } else {
        a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal)
    }
}

/// Unitary reduction to upper Hessenberg form by Householder reflections.
fn hessenberg<T: Real>(m: &OperatorMatrix<T>) -> OperatorMatrix<T> {
    let n = m.dim();
    let mut a = m.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Cx<T>> = (k + 1..n).map(|i| a[(i, k)]).collect();
        let tail: T = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail.is_zero() {
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail).sqrt();
        let phase = if x[0].is_zero() { Cx::one() } else { x[0] / x[0].norm() };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        for e in v.iter_mut() {
            *e /= vnorm;
        }
        let two = real(T::lit(2.0));
        // a <- (I - 2vv^dagger) a on rows k+1..n
        for j in 0..n {
            let dot = v
                .iter()
                .enumerate()
                .fold(Cx::<T>::zero(), |acc, (r, vr)| acc + vr.conj() * a[(k + 1 + r, j)]);
            for (r, vr) in v.iter().enumerate() {
                a[(k + 1 + r, j)] -= two * *vr * dot;
            }
        }
        // a <- a (I - 2vv^dagger) on columns k+1..n
        for i in 0..n {
            let dot =
                v.iter().enumerate().fold(Cx::<T>::zero(), |acc, (c, vc)| acc + a[(i, k + 1 + c)] * *vc);
            for (c, vc) in v.iter().enumerate() {
                a[(i, k + 1 + c)] -= two * dot * vc.conj();
            }
        }
        for i in k + 2..n {
            a[(i, k)] = Cx::zero();
        }
    }
    a
}

/// Monic `det(zI - H)` of an upper Hessenberg matrix, ascending coefficients.
fn characteristic_polynomial<T: Real>(h: &OperatorMatrix<T>) -> Vec<Cx<T>> {
    let n = h.dim();
    let mut polys: Vec<Vec<Cx<T>>> = vec![vec![Cx::one()]];
    for k in 1..=n {
        let prev = &polys[k - 1];
        let mut next = vec![Cx::zero(); k + 1];
        let d = h[(k - 1, k - 1)];
        for (i, &c) in prev.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= d * c;
        }
        let mut sub = Cx::one();
        for i in 1..k {
            sub *= h[(k - i, k - i - 1)];
            let coeff = h[(k - 1 - i, k - 1)] * sub;
            if coeff.is_zero() {
                continue;
            }
            for (j, &c) in polys[k - 1 - i].iter().enumerate() {
                next[j] -= coeff * c;
            }
        }
        polys.push(next);
    }
    polys.pop().expect("degree n polynomial")
}

fn horner<T: Real>(coeffs: &[Cx<T>], z: Cx<T>) -> (Cx<T>, Cx<T>) {
    let mut p = Cx::zero();
    let mut dp = Cx::zero();
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of a monic polynomial (ascending coefficients).
fn polynomial_roots<T: Real>(coeffs: &[Cx<T>]) -> Vec<Cx<T>> {
    let mut roots = Vec::new();
    let mut start = 0;
    // exact zero roots
    while start < coeffs.len() - 1 && coeffs[start].is_zero() {
        roots.push(Cx::zero());
        start += 1;
    }
    let p = &coeffs[start..];
    let degree = p.len() - 1;
    if degree == 0 {
        return roots;
    }
    if degree == 1 {
        roots.push(-p[0] / p[1]);
        return roots;
    }

    let center = -p[degree - 1] / real(T::lit(degree as f64));
    let shifted = taylor_shift(p, center);
    let radius = (1..=degree)
        .map(|k| shifted[degree - k].norm().powf(T::one() / T::lit(k as f64)))
        .fold(T::zero(), T::max);
    if radius.is_zero() {
        roots.extend(std::iter::repeat_n(center, degree));
        return roots;
    }

    let mut z: Vec<Cx<T>> = (0..degree)
        .map(|k| {
            let angle = T::lit(2.0 * std::f64::consts::PI * k as f64 / degree as f64 + 0.4);
            center + Cx::from_polar(radius, angle)
        })
        .collect();
    let eps = T::epsilon();
    for _ in 0..ABERTH_MAX_ITERATIONS {
        let mut moved = false;
        for i in 0..degree {
            let (val, der) = horner(p, z[i]);
            if val.is_zero() {
                continue;
            }
            let ratio = if der.is_zero() { Cx::new(radius * eps, T::zero()) } else { val / der };
            let repulsion = (0..degree)
                .filter(|&j| j != i)
                .map(|j| z[i] - z[j])
                .filter(|d| !d.is_zero())
                .fold(Cx::<T>::zero(), |acc, d| acc + Cx::<T>::one() / d);
            let denom = Cx::<T>::one() - ratio * repulsion;
            let step = if denom.is_zero() { ratio } else { ratio / denom };
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[i] -= step;
            if step.norm() > T::lit(4.0) * eps * (z[i].norm() + radius) {
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    roots.extend(z);
    roots
}

/// Coefficients of `p(w + c)`.
fn taylor_shift<T: Real>(p: &[Cx<T>], c: Cx<T>) -> Vec<Cx<T>> {
    let mut q = p.to_vec();
    let n = q.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let next = q[j + 1];
            q[j] += c * next;
        }
    }
    q
}

fn cluster<T: Real>(roots: &[Cx<T>], radius: T) -> Vec<(Cx<T>, usize)> {
    let n = roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (roots[i] - roots[j]).norm() <= radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<(usize, Cx<T>, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += roots[i];
                g.2 += 1;
            }
            None => groups.push((r, roots[i], 1)),
        }
    }
    groups.into_iter().map(|(_, sum, k)| (sum / real(T::lit(k as f64)), k)).collect()
}

/// Newton on `det(M - zI)`: `z <- z + m / tr((M - zI)^-1)`, with `m` the
/// cluster multiplicity. Steps larger than half the distance to the nearest
/// other root are refused.
fn newton_polish<T: Real>(m: &OperatorMatrix<T>, mut z: Cx<T>, mult: usize, nearest: T) -> Cx<T> {
    let limit = nearest * T::lit(0.5);
    let scale = T::one().max(m.frobenius_norm());
    let mut last_step = T::infinity();
    for _ in 0..NEWTON_MAX_ITERATIONS {
        let lu = match Lu::factor(&m.add_identity(-z)) {
            Ok(lu) => lu,
            Err(_) => break,
        };
        let trace_inv = lu.inverse().trace();
        if trace_inv.is_zero() || !(trace_inv.re.is_finite() && trace_inv.im.is_finite()) {
            break;
        }
        let step = real(T::lit(mult as f64)) / trace_inv;
        let size = step.norm();
        if !size.is_finite() || size >= limit || size >= last_step {
            break;
        }
        z += step;
        last_step = size;
        if size <= T::lit(4.0) * T::epsilon() * scale {
            break;
        }
    }
    z
}

/// A null vector of a (numerically) singular matrix. Gaussian elimination
/// with complete pivoting stops once the remaining block is below
/// `threshold`; at least one column is always left free. The free column
/// with the smallest original index is set to one, the others to zero.
fn null_vector<T: Real>(b: &OperatorMatrix<T>, threshold: T) -> StateVector<T> {
    let n = b.dim();
    let mut u = b.clone();
    let mut rows: Vec<usize> = (0..n).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    while rank < n - 1 {
        let mut best = (rank, rank, T::zero());
        for (ri, &r) in rows.iter().enumerate().skip(rank) {
            for (ci, &c) in cols.iter().enumerate().skip(rank) {
                let v = u[(r, c)].norm();
                if v > best.2 {
                    best = (ri, ci, v);
                }
            }
        }
        if best.2 <= threshold {
            break;
        }
        rows.swap(rank, best.0);
        cols.swap(rank, best.1);
        let (pr, pc) = (rows[rank], cols[rank]);
        let pivot = u[(pr, pc)];
        for &r in &rows[rank + 1..] {
            let f = u[(r, pc)] / pivot;
            if f.is_zero() {
                continue;
            }
            for &c in &cols[rank..] {
                let val = u[(pr, c)];
                u[(r, c)] -= f * val;
            }
        }
        rank += 1;
    }
    let free = *cols[rank..].iter().min().expect("at least one free column");
    let mut x = vec![Cx::zero(); n];
    x[free] = Cx::one();
    for i in (0..rank).rev() {
        let (r, c) = (rows[i], cols[i]);
        let s = cols[i + 1..].iter().fold(Cx::<T>::zero(), |acc, &j| acc + u[(r, j)] * x[j]);
        x[c] = -s / u[(r, c)];
    }
    StateVector::new(x).expect("non-empty")
}

/// Rotates the global phase so the first non-negligible component is real
/// and positive.
fn fix_phase<T: Real>(v: StateVector<T>) -> StateVector<T> {
    let max = v.entries().iter().map(|z| z.norm()).fold(T::zero(), T::max);
    let cutoff = max * T::lit(1e-8);
    match v.entries().iter().find(|z| z.norm() > cutoff) {
        Some(&lead) => {
            let phase = lead.conj() / lead.norm();
            let mut entries: Vec<Cx<T>> = v.entries().iter().map(|&z| z * phase).collect();
            let k = entries.iter().position(|z| z.norm() > cutoff).expect("lead exists");
            entries[k] = real(entries[k].re);
            StateVector::new(entries).expect("non-empty")
        }
        None => v,
    }
}
