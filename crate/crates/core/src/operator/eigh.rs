//! Hermitian eigensolver: cyclic complex Jacobi.

use num_traits::Zero;

use super::{OperatorMatrix, StateVector};
use crate::error::{Error, Result};
use crate::scalar::{real, Cx, Real};
use crate::tolerances::Tolerances;

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: OperatorMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(f(lambda)) V^dagger`.
    pub fn function(&self, f: impl Fn(T) -> Cx<T>) -> OperatorMatrix<T> {
        let n = self.dim();
        let fv: Vec<Cx<T>> = self.values.iter().map(|&l| f(l)).collect();
        OperatorMatrix::from_fn(n, |i, j| {
            (0..n).fold(Cx::<T>::zero(), |acc, k| {
                acc + self.vectors[(i, k)] * fv[k] * self.vectors[(j, k)].conj()
            })
        })
    }

    /// `f(M) |v>` without forming `f(M)`.
    pub fn apply_function(&self, f: impl Fn(T) -> Cx<T>, v: &StateVector<T>) -> StateVector<T> {
        let n = self.dim();
        // coefficients in the eigenbasis: V^dagger v
        let coeffs: Vec<Cx<T>> = (0..n)
            .map(|k| {
                (0..n).fold(Cx::<T>::zero(), |acc, i| acc + self.vectors[(i, k)].conj() * v[i])
                    * f(self.values[k])
            })
            .collect();
        let out = (0..n)
            .map(|i| (0..n).fold(Cx::<T>::zero(), |acc, k| acc + self.vectors[(i, k)] * coeffs[k]))
            .collect();
        StateVector::new(out).expect("non-empty")
    }

    /// `c^T f(M)` for a row vector `c`.
    pub fn apply_function_left(
        &self,
        f: impl Fn(T) -> Cx<T>,
        c: &StateVector<T>,
    ) -> StateVector<T> {
        let n = self.dim();
        // (c^T V)_k f_k (V^dagger)_{k j}
        let coeffs: Vec<Cx<T>> = (0..n)
            .map(|k| {
                (0..n).fold(Cx::<T>::zero(), |acc, i| acc + c[i] * self.vectors[(i, k)])
                    * f(self.values[k])
            })
            .collect();
        let out = (0..n)
            .map(|j| {
                (0..n).fold(Cx::<T>::zero(), |acc, k| acc + coeffs[k] * self.vectors[(j, k)].conj())
            })
            .collect();
        StateVector::new(out).expect("non-empty")
    }

    pub fn reconstruct(&self) -> OperatorMatrix<T> {
        self.function(real)
    }

    pub fn min_value(&self) -> T {
        self.values[0]
    }
}

pub fn eig_hermitian<T: Real>(m: &OperatorMatrix<T>) -> Result<HermitianEigen<T>> {
    eig_hermitian_with(m, &Tolerances::for_scalar::<T>())
}

pub fn eig_hermitian_with<T: Real>(
    m: &OperatorMatrix<T>,
    tol: &Tolerances,
) -> Result<HermitianEigen<T>> {
    if !m.is_finite() {
        return Err(Error::NonFinite { context: "eig_hermitian input" });
    }
    if !m.is_hermitian(tol.hermitian_input) {
        return Err(Error::NotHermitian { gap: m.hermiticity_gap().as_f64() });
    }
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = OperatorMatrix::identity(n);
    let threshold = T::lit(tol.jacobi_convergence.max(4.0 * T::epsilon().as_f64()))
        * m.frobenius_norm();

    let mut converged = false;
    for _ in 0..tol.jacobi_max_sweeps {
        if off_diagonal_mass(&a) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_mass(&a) > threshold {
        return Err(Error::NoConvergence {
            method: "Jacobi eigensolver",
            iterations: tol.jacobi_max_sweeps,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).expect("finite eigenvalues"));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = OperatorMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_mass<T: Real>(a: &OperatorMatrix<T>) -> T {
    let n = a.dim();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Annihilates `a[p][q]`: a phase on index `q` makes it real, then a real
/// Givens rotation in the `(p, q)` plane zeroes it.
fn rotate<T: Real>(a: &mut OperatorMatrix<T>, v: &mut OperatorMatrix<T>, p: usize, q: usize) {
    let n = a.dim();
    let apq = a[(p, q)];
    let r = apq.norm();
    if r.is_zero() {
        return;
    }
    let w = apq / r;
    let wc = w.conj();
    for k in 0..n {
        a[(k, q)] *= wc;
        v[(k, q)] *= wc;
    }
    for k in 0..n {
        a[(q, k)] *= w;
    }

    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (r + r);
    let t = {
        let sign = if tau >= T::zero() { T::one() } else { -T::one() };
        sign / (tau.abs() + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * s;
        a[(k, q)] = akp * s + akq * c;
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * s;
        v[(k, q)] = vkp * s + vkq * c;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * s;
        a[(q, k)] = apk * s + aqk * c;
    }
    a[(p, q)] = Cx::zero();
    a[(q, p)] = Cx::zero();
    a[(p, p)] = real(a[(p, p)].re);
    a[(q, q)] = real(a[(q, q)].re);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cxf;

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let m = OperatorMatrix::<f64>::from_real_diag(&[3.0, 1.0, 2.0]);
        let e = eig_hermitian(&m).unwrap();
        assert_close(&e.values, &[1.0, 2.0, 3.0], 0.0);
    }

    #[test]
    fn pauli_x() {
        let m = OperatorMatrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let e = eig_hermitian(&m).unwrap();
        assert_close(&e.values, &[-1.0, 1.0], 1e-15);
    }

    #[test]
    fn complex_entries_reconstruct() {
        let m = OperatorMatrix::<f64>::from_rows(&[
            vec![cxf(2.0, 0.0), cxf(1.0, -1.0), cxf(0.0, 0.5)],
            vec![cxf(1.0, 1.0), cxf(-1.0, 0.0), cxf(0.3, 0.0)],
            vec![cxf(0.0, -0.5), cxf(0.3, 0.0), cxf(0.5, 0.0)],
        ])
        .unwrap();
        let e = eig_hermitian(&m).unwrap();
        assert!(e.reconstruct().distance(&m) < 1e-13);
        let vtv = &e.vectors.adjoint() * &e.vectors;
        assert!(vtv.distance(&OperatorMatrix::identity(3)) < 1e-13);
        for k in 0..3 {
            let col = e.vectors.column(k);
            let res = m.apply(&col).sub(&col.scale(real(e.values[k]))).norm();
            assert!(res < 1e-11 * m.frobenius_norm());
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = OperatorMatrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn single_precision_path() {
        let m = OperatorMatrix::<f32>::from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let e = eig_hermitian(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-5 && (e.values[1] - 3.0).abs() < 1e-5);
    }
}
