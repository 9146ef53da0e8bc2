use num_traits::{One, Zero};

use super::{OperatorMatrix, StateVector};
use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// LU factorization with partial (row) pivoting, `PM = LU`.
#[derive(Debug, Clone)]
pub struct Lu<T: Real> {
    lu: OperatorMatrix<T>,
    perm: Vec<usize>,
    swaps: usize,
}

impl<T: Real> Lu<T> {
    /// Fails with [`Error::Singular`] on an exactly zero pivot.
    pub fn factor(m: &OperatorMatrix<T>) -> Result<Self> {
        let n = m.dim();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best.is_zero() || !best.is_finite() {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= factor * u;
                }
            }
        }
        Ok(Self { lu, perm, swaps })
    }

    pub fn determinant(&self) -> Cx<T> {
        let n = self.lu.dim();
        let mut det = (0..n).fold(Cx::<T>::one(), |acc: Cx<T>, i| acc * self.lu[(i, i)]);
        if self.swaps % 2 == 1 {
            det = -det;
        }
        det
    }

    pub fn solve(&self, b: &StateVector<T>) -> StateVector<T> {
        let n = self.lu.dim();
        let mut x: Vec<Cx<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[(i, i)];
        }
        StateVector::new(x).expect("non-empty")
    }

    /// Solves `M X = B` column by column.
    pub fn solve_matrix(&self, b: &OperatorMatrix<T>) -> OperatorMatrix<T> {
        let n = self.lu.dim();
        let cols: Vec<StateVector<T>> = (0..n).map(|j| self.solve(&b.column(j))).collect();
        OperatorMatrix::from_fn(n, |i, j| cols[j][i])
    }

    pub fn inverse(&self) -> OperatorMatrix<T> {
        self.solve_matrix(&OperatorMatrix::identity(self.lu.dim()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cxf;

    #[test]
    fn determinant_and_inverse() {
        let m = OperatorMatrix::<f64>::from_rows(&[
            vec![cxf(0.0, 0.0), cxf(2.0, 1.0)],
            vec![cxf(1.0, 0.0), cxf(3.0, 0.0)],
        ])
        .unwrap();
        let lu = Lu::factor(&m).unwrap();
        assert!((lu.determinant() - cxf(-2.0, -1.0)).norm() < 1e-15);
        let prod = &m * &lu.inverse();
        assert!(prod.distance(&OperatorMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn singular_is_reported() {
        let m = OperatorMatrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]).unwrap();
        assert!(matches!(Lu::factor(&m), Err(Error::Singular)));
    }
}
