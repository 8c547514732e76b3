//! Dense row-major matrices, LU factorization with partial pivoting and an
//! infinity-norm condition estimate.

use crate::error::{Error, Result};
use crate::par::Execution;

/// Pivots smaller than this are treated as zero.
pub const PIVOT_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::validation(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::validation("ragged rows"));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn nonzeros(&self) -> usize {
        self.data.iter().filter(|&&x| x != 0.0).count()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn require_square(&self) -> Result<()> {
        if self.rows == self.cols {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )))
        }
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `P·A = L·U`, stored compactly: strict lower part holds `L` (unit
/// diagonal implied), upper part holds `U`.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    n: usize,
    lu: Vec<f64>,
    /// `perm[i]` is the original row now in position `i`.
    perm: Vec<usize>,
}

impl LuFactorization {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        Self::new_with(a, Execution::default())
    }

    pub fn new_with(a: &DenseMatrix, exec: Execution) -> Result<Self> {
        a.require_square()?;
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot < PIVOT_FLOOR {
                return Err(Error::Singular { step: k, pivot });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let pivot = pivot_row[k];
            exec.for_each_chunk_mut(tail, n, |_, row| {
                let factor = row[k] / pivot;
                row[k] = factor;
                if factor != 0.0 {
                    for (x, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *x -= factor * u;
                    }
                }
            });
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if rhs.len() != n {
            return Err(Error::validation(format!(
                "right-hand side has length {}, expected {n}",
                rhs.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, y)| u * y).sum();
            x[i] = (x[i] - s) / row[i];
        }
        Ok(x)
    }

    /// `‖A⁻¹‖_∞` from column solves against unit vectors.
    pub fn inverse_norm_inf(&self, exec: Execution) -> f64 {
        let n = self.n;
        let columns = exec.map_range(n, |j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            self.solve(&e).expect("dimension checked")
        });
        (0..n)
            .map(|i| columns.iter().map(|c| c[i].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

pub fn solve(a: &DenseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    solve_with(a, rhs, Execution::default())
}

pub fn solve_with(a: &DenseMatrix, rhs: &[f64], exec: Execution) -> Result<Vec<f64>> {
    if rhs.len() != a.rows {
        return Err(Error::validation(format!(
            "right-hand side has length {}, expected {}",
            rhs.len(),
            a.rows
        )));
    }
    LuFactorization::new_with(a, exec)?.solve(rhs)
}

/// `‖A‖_∞·‖A⁻¹‖_∞`; `+∞` for singular matrices.
pub fn condition_estimate(a: &DenseMatrix) -> Result<f64> {
    a.require_square()?;
    Ok(match LuFactorization::new(a) {
        Ok(lu) => a.norm_inf() * lu.inverse_norm_inf(Execution::default()),
        Err(Error::Singular { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let x = solve(&DenseMatrix::identity(4), &[1.0, -2.0, 3.5, 0.0]).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.5, 0.0]);
    }

    #[test]
    fn small_systems() {
        let a = DenseMatrix::from_rows(&[vec![0.9]]).unwrap();
        let x = solve(&a, &[0.5]).unwrap();
        assert!((x[0] - 5.0 / 9.0).abs() < 1e-15);

        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = solve(&a, &[3.0, 4.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(solve(&a, &[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn singular_matrix_reports_step() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        match solve(&a, &[1.0, 1.0]) {
            Err(Error::Singular { step, .. }) => assert_eq!(step, 1),
            other => panic!("{other:?}"),
        }
        assert_eq!(condition_estimate(&a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn condition_examples() {
        assert_eq!(condition_estimate(&DenseMatrix::identity(5)).unwrap(), 1.0);
        let c = condition_estimate(&DenseMatrix::diagonal(&[1.0, 1e-6])).unwrap();
        assert!((c - 1e6).abs() < 1e-6);
    }

    #[test]
    fn shape_errors() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(solve(&a, &[1.0, 2.0]).is_err());
        assert!(solve(&DenseMatrix::identity(2), &[1.0]).is_err());
        assert!(DenseMatrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::from_row_major(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn execution_modes_agree_bitwise() {
        let n = 40;
        let data: Vec<f64> = (0..n * n)
            .map(|k| ((k * 7919 % 101) as f64 - 50.0) / 50.0 + if k % (n + 1) == 0 { 8.0 } else { 0.0 })
            .collect();
        let a = DenseMatrix::from_row_major(n, n, data).unwrap();
        let b: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let x1 = solve_with(&a, &b, Execution::Sequential).unwrap();
        let x2 = solve_with(&a, &b, Execution::Parallel).unwrap();
        assert_eq!(x1, x2);
    }
}
