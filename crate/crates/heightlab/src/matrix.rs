//! Exact linear algebra: rational matrices, and Hermite/Smith normal forms
//! over the integers for lattice and module-quotient computations.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense matrix of exact rationals, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigRational>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        QMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn row(&self, i: usize) -> &[BigRational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> QMatrix {
        let mut t = QMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = QMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let t = a * &other[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Determinant by fraction-free Gaussian elimination on a working copy.
    pub fn det(&self) -> BigRational {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = BigRational::one();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !m[(r, col)].is_zero());
            let Some(p) = pivot else {
                return BigRational::zero();
            };
            if p != col {
                m.swap_rows(p, col);
                det = -det;
            }
            let pv = m[(col, col)].clone();
            det *= &pv;
            for r in col + 1..n {
                let factor = &m[(r, col)] / &pv;
                if factor.is_zero() {
                    continue;
                }
                for c in col..n {
                    let t = &factor * &m[(col, c)];
                    m[(r, c)] -= t;
                }
            }
        }
        det
    }

    /// Trace of a square matrix.
    pub fn trace(&self) -> BigRational {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Row-reduce in place; returns the rank and pivot columns.
    pub fn row_reduce(&mut self) -> (usize, Vec<usize>) {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(p, r);
            let inv = BigRational::one() / self[(r, c)].clone();
            for j in c..self.cols {
                self[(r, j)] *= &inv;
            }
            for i in 0..self.rows {
                if i != r && !self[(i, c)].is_zero() {
                    let f = self[(i, c)].clone();
                    for j in c..self.cols {
                        let t = &f * &self[(r, j)];
                        self[(i, j)] -= t;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (r, pivots)
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce().0
    }

    /// Solve `self * x = b` for square invertible `self`.
    pub fn solve(&self, b: &[BigRational]) -> Option<Vec<BigRational>> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(self.rows, b.len());
        let n = self.rows;
        let mut aug = QMatrix::zeros(n, n + 1);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n)] = b[i].clone();
        }
        let (rank, pivots) = aug.row_reduce();
        if rank < n || pivots.iter().any(|&p| p == n) {
            return None;
        }
        Some((0..n).map(|i| aug[(i, n)].clone()).collect())
    }

    pub fn inverse(&self) -> Option<QMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = QMatrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = BigRational::one();
        }
        let (rank, _) = aug.row_reduce();
        if rank < n {
            return None;
        }
        let mut inv = QMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = aug[(i, n + j)].clone();
            }
        }
        Some(inv)
    }

    /// Exact rational Cholesky pivots of a symmetric matrix. Returns the
    /// diagonal of the LDL^T decomposition; `None` if a pivot is `<= 0`
    /// (matrix not positive definite).
    pub fn ldlt_pivots(&self) -> Option<Vec<BigRational>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut diag = Vec::with_capacity(n);
        for k in 0..n {
            let d = a[(k, k)].clone();
            if !d.is_positive() {
                return None;
            }
            for i in k + 1..n {
                let lik = &a[(i, k)] / &d;
                for j in k + 1..=i {
                    let t = &lik * &a[(j, k)];
                    a[(i, j)] -= t;
                }
            }
            diag.push(d);
        }
        Some(diag)
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense integer matrix, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigInt>,
}

impl ZMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ZMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        ZMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Row-style Hermite normal form (upper triangular up to column
    /// permutation of pivots). Returns the HNF with zero rows dropped.
    pub fn hermite_normal_form(&self) -> ZMatrix {
        let mut m = self.clone();
        let mut pivot_row = 0;
        for col in 0..m.cols {
            if pivot_row == m.rows {
                break;
            }
            // Euclidean reduction of the column below pivot_row.
            loop {
                let mut best: Option<(usize, BigInt)> = None;
                for r in pivot_row..m.rows {
                    let v = m[(r, col)].abs();
                    if !v.is_zero() && best.as_ref().map_or(true, |(_, b)| v < *b) {
                        best = Some((r, v));
                    }
                }
                let Some((r, _)) = best else {
                    break;
                };
                m.swap_rows(pivot_row, r);
                let pivot = m[(pivot_row, col)].clone();
                let mut done = true;
                for r in pivot_row + 1..m.rows {
                    if m[(r, col)].is_zero() {
                        continue;
                    }
                    let q = div_round_to_zero(&m[(r, col)], &pivot);
                    for j in 0..m.cols {
                        let t = &q * &m[(pivot_row, j)];
                        m[(r, j)] -= t;
                    }
                    if !m[(r, col)].is_zero() {
                        done = false;
                    }
                }
                if done {
                    break;
                }
            }
            if !m[(pivot_row, col)].is_zero() {
                if m[(pivot_row, col)].is_negative() {
                    for j in 0..m.cols {
                        let v = -m[(pivot_row, j)].clone();
                        m[(pivot_row, j)] = v;
                    }
                }
                // Reduce entries above the pivot.
                let pivot = m[(pivot_row, col)].clone();
                for r in 0..pivot_row {
                    let q = m[(r, col)].div_floor(&pivot);
                    if q.is_zero() {
                        continue;
                    }
                    for j in 0..m.cols {
                        let t = &q * &m[(pivot_row, j)];
                        m[(r, j)] -= t;
                    }
                }
                pivot_row += 1;
            }
        }
        // Drop zero rows.
        let rows: Vec<Vec<BigInt>> = (0..pivot_row)
            .map(|i| m.data[i * m.cols..(i + 1) * m.cols].to_vec())
            .collect();
        if rows.is_empty() {
            ZMatrix::zeros(0, self.cols)
        } else {
            ZMatrix::from_rows(rows)
        }
    }

    /// Elementary divisors (diagonal of the Smith normal form), nonzero
    /// entries only, each dividing the next.
    pub fn smith_diagonal(&self) -> Vec<BigInt> {
        let mut m = self.clone();
        let mut divisors = Vec::new();
        let mut top = 0;
        let mut left = 0;
        while top < m.rows && left < m.cols {
            // Find the nonzero entry of least absolute value in the
            // remaining block.
            let mut best: Option<(usize, usize, BigInt)> = None;
            for i in top..m.rows {
                for j in left..m.cols {
                    let v = m[(i, j)].abs();
                    if !v.is_zero() && best.as_ref().map_or(true, |(_, _, b)| v < *b) {
                        best = Some((i, j, v));
                    }
                }
            }
            let Some((pi, pj, _)) = best else {
                break;
            };
            m.swap_rows(top, pi);
            if pj != left {
                for i in 0..m.rows {
                    let a = i * m.cols + pj;
                    let b = i * m.cols + left;
                    m.data.swap(a, b);
                }
            }
            // Clear the pivot row and column.
            let mut clean = true;
            let pivot = m[(top, left)].clone();
            for i in top + 1..m.rows {
                if m[(i, left)].is_zero() {
                    continue;
                }
                let q = div_round_to_zero(&m[(i, left)], &pivot);
                for j in left..m.cols {
                    let t = &q * &m[(top, j)];
                    m[(i, j)] -= t;
                }
                if !m[(i, left)].is_zero() {
                    clean = false;
                }
            }
            for j in left + 1..m.cols {
                if m[(top, j)].is_zero() {
                    continue;
                }
                let q = div_round_to_zero(&m[(top, j)], &pivot);
                for i in top..m.rows {
                    let t = &q * &m[(i, left)];
                    m[(i, j)] -= t;
                }
                if !m[(top, j)].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // Enforce divisibility against the rest of the block.
            let mut divides_all = true;
            'outer: for i in top + 1..m.rows {
                for j in left + 1..m.cols {
                    if !(&m[(i, j)] % &pivot).is_zero() {
                        // Fold row i into the pivot row and restart the step.
                        for jj in left..m.cols {
                            let t = m[(i, jj)].clone();
                            m[(top, jj)] += t;
                        }
                        divides_all = false;
                        break 'outer;
                    }
                }
            }
            if !divides_all {
                continue;
            }
            divisors.push(pivot.abs());
            top += 1;
            left += 1;
        }
        divisors
    }
}

impl std::ops::Index<(usize, usize)> for ZMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ZMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

fn div_round_to_zero(a: &BigInt, b: &BigInt) -> BigInt {
    a / b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn zm(rows: &[&[i64]]) -> ZMatrix {
        ZMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat::int(x)).collect()).collect())
    }

    fn qm(rows: &[&[i64]]) -> QMatrix {
        QMatrix::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| rat::q(x)).collect()).collect(),
        )
    }

    #[test]
    fn det_and_solve() {
        let m = qm(&[&[2, 1], &[1, 1]]);
        assert_eq!(m.det(), rat::q(1));
        let x = m.solve(&[rat::q(3), rat::q(2)]).unwrap();
        assert_eq!(x, vec![rat::q(1), rat::q(1)]);
        assert_eq!(m.inverse().unwrap().mul(&m), QMatrix::identity(2));
    }

    #[test]
    fn smith_diagonal_examples() {
        // diag(1, 2) inside Z^2: index 2
        let d = zm(&[&[1, 0], &[0, 2]]).smith_diagonal();
        assert_eq!(d, vec![rat::int(1), rat::int(2)]);

        // Classic example with a nontrivial chain.
        let d = zm(&[&[2, 4, 4], &[-6, 6, 12], &[10, 4, 16]]).smith_diagonal();
        assert_eq!(d, vec![rat::int(2), rat::int(2), rat::int(156)]);
    }

    #[test]
    fn hnf_membership_shape() {
        let h = zm(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]).hermite_normal_form();
        // rank 2 lattice
        assert_eq!(h.rows, 2);
        let d = zm(&[&[2, 0], &[0, 3], &[1, 1]]).hermite_normal_form();
        assert_eq!(d.rows, 2);
        // That lattice is all of Z^2: (1,1)+(2,0)-(0,3)... check via SNF.
        let s = zm(&[&[2, 0], &[0, 3], &[1, 1]]).smith_diagonal();
        assert_eq!(s, vec![rat::int(1), rat::int(1)]);
    }

    #[test]
    fn ldlt_detects_non_pd() {
        assert!(qm(&[&[2, 0], &[0, 3]]).ldlt_pivots().is_some());
        assert!(qm(&[&[1, 2], &[2, 1]]).ldlt_pivots().is_none());
    }
}
