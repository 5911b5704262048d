//! Elimination kernels: exact integer determinants and ranks via
//! fraction-free (Bareiss) elimination, and Gauss-Jordan over an abstract
//! field for inversion, determinants and rank modulo p.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::gf::Field;

/// Dense matrix with exact integer entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    /// Exact determinant by Bareiss fraction-free elimination. All divisions
    /// in the recurrence are exact, so intermediates stay integral.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.data.clone();
        let idx = |i: usize, j: usize| i * n + j;
        let mut sign = 1i32;
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[idx(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !a[idx(i, k)].is_zero()) {
                    Some(i) => {
                        for j in 0..n {
                            a.swap(idx(k, j), idx(i, j));
                        }
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = a[idx(i, j)].clone() * &a[idx(k, k)]
                        - a[idx(i, k)].clone() * &a[idx(k, j)];
                    a[idx(i, j)] = num / &prev;
                }
                a[idx(i, k)] = BigInt::zero();
            }
            prev = a[idx(k, k)].clone();
        }
        let d = a[idx(n - 1, n - 1)].clone();
        if sign < 0 {
            -d
        } else {
            d
        }
    }

    /// Exact rank by fraction-free elimination with full pivot search.
    pub fn rank(&self) -> usize {
        let mut a = self.data.clone();
        let (rows, cols) = (self.rows, self.cols);
        let idx = |i: usize, j: usize| i * cols + j;
        let mut prev = BigInt::one();
        let mut rank = 0;
        let mut col = 0;
        while rank < rows && col < cols {
            // prefer small pivots to slow entry growth
            let piv = (rank..rows)
                .filter(|&i| !a[idx(i, col)].is_zero())
                .min_by_key(|&i| a[idx(i, col)].abs());
            let Some(piv) = piv else {
                col += 1;
                continue;
            };
            if piv != rank {
                for j in 0..cols {
                    a.swap(idx(rank, j), idx(piv, j));
                }
            }
            for i in rank + 1..rows {
                for j in col + 1..cols {
                    let num = a[idx(i, j)].clone() * &a[idx(rank, col)]
                        - a[idx(i, col)].clone() * &a[idx(rank, j)];
                    a[idx(i, j)] = num / &prev;
                }
                a[idx(i, col)] = BigInt::zero();
            }
            prev = a[idx(rank, col)].clone();
            rank += 1;
            col += 1;
        }
        rank
    }
}

/// Dense matrix over an abstract field.
#[derive(Debug, Clone)]
pub struct FieldMatrix<F: Field> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<F::Elem>,
}

impl<F: Field> FieldMatrix<F> {
    pub fn zeros(rows: usize, cols: usize, field: &F) -> Self {
        FieldMatrix {
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity(n: usize, field: &F) -> Self {
        let mut m = Self::zeros(n, n, field);
        for i in 0..n {
            m.set(i, i, field.one());
        }
        m
    }

    pub fn from_int(src: &IntMatrix, field: &F) -> Self {
        let mut m = Self::zeros(src.rows, src.cols, field);
        for i in 0..src.rows {
            for j in 0..src.cols {
                // stoichiometric entries are tiny; i64 always suffices
                let v = i64::try_from(src.get(i, j)).expect("entry fits i64");
                m.set(i, j, field.from_i64(v));
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> &F::Elem {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F::Elem) {
        self.data[i * self.cols + j] = v;
    }

    /// Gauss-Jordan inversion together with the determinant. Returns `None`
    /// for a singular matrix. Over GF(p) any nonzero pivot is exact, so
    /// partial pivoting (first nonzero) suffices.
    pub fn invert(&self, field: &F) -> Option<(Self, F::Elem)> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n, field);
        let mut det = field.one();
        for col in 0..n {
            let piv = (col..n).find(|&i| !field.is_zero(a.get(i, col)))?;
            if piv != col {
                for j in 0..n {
                    let t = a.get(col, j).clone();
                    a.set(col, j, a.get(piv, j).clone());
                    a.set(piv, j, t);
                    let t = inv.get(col, j).clone();
                    inv.set(col, j, inv.get(piv, j).clone());
                    inv.set(piv, j, t);
                }
                det = field.neg(&det);
            }
            let pval = a.get(col, col).clone();
            det = field.mul(&det, &pval);
            let pinv = field.inv(&pval).expect("pivot nonzero");
            for j in 0..n {
                a.set(col, j, field.mul(a.get(col, j), &pinv));
                inv.set(col, j, field.mul(inv.get(col, j), &pinv));
            }
            for i in 0..n {
                if i == col || field.is_zero(a.get(i, col)) {
                    continue;
                }
                let f = a.get(i, col).clone();
                for j in 0..n {
                    let v = field.sub(a.get(i, j), &field.mul(&f, a.get(col, j)));
                    a.set(i, j, v);
                    let v = field.sub(inv.get(i, j), &field.mul(&f, inv.get(col, j)));
                    inv.set(i, j, v);
                }
            }
        }
        Some((inv, det))
    }

    pub fn det(&self, field: &F) -> F::Elem {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = field.one();
        for col in 0..n {
            let Some(piv) = (col..n).find(|&i| !field.is_zero(a.get(i, col))) else {
                return field.zero();
            };
            if piv != col {
                for j in col..n {
                    let t = a.get(col, j).clone();
                    a.set(col, j, a.get(piv, j).clone());
                    a.set(piv, j, t);
                }
                det = field.neg(&det);
            }
            let pval = a.get(col, col).clone();
            det = field.mul(&det, &pval);
            let pinv = field.inv(&pval).expect("pivot nonzero");
            for i in col + 1..n {
                if field.is_zero(a.get(i, col)) {
                    continue;
                }
                let f = field.mul(a.get(i, col), &pinv);
                for j in col..n {
                    let v = field.sub(a.get(i, j), &field.mul(&f, a.get(col, j)));
                    a.set(i, j, v);
                }
            }
        }
        det
    }

    pub fn rank(&self, field: &F) -> usize {
        let mut a = self.clone();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        let mut col = 0;
        while rank < rows && col < cols {
            let Some(piv) = (rank..rows).find(|&i| !field.is_zero(a.get(i, col))) else {
                col += 1;
                continue;
            };
            if piv != rank {
                for j in col..cols {
                    let t = a.get(rank, j).clone();
                    a.set(rank, j, a.get(piv, j).clone());
                    a.set(piv, j, t);
                }
            }
            let pinv = field.inv(a.get(rank, col)).expect("pivot nonzero");
            for i in rank + 1..rows {
                if field.is_zero(a.get(i, col)) {
                    continue;
                }
                let f = field.mul(a.get(i, col), &pinv);
                for j in col..cols {
                    let v = field.sub(a.get(i, j), &field.mul(&f, a.get(rank, j)));
                    a.set(i, j, v);
                }
            }
            rank += 1;
            col += 1;
        }
        rank
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[F::Elem], field: &F) -> Vec<F::Elem> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let mut acc = field.zero();
                for j in 0..self.cols {
                    acc = field.add(&acc, &field.mul(self.get(i, j), &x[j]));
                }
                acc
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::PrimeField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn int_mat(rows: usize, cols: usize, v: &[i64]) -> IntMatrix {
        let mut m = IntMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, v[i * cols + j].into());
            }
        }
        m
    }

    #[test]
    fn bareiss_known_determinants() {
        assert_eq!(int_mat(1, 1, &[7]).det(), 7.into());
        assert_eq!(int_mat(2, 2, &[1, 2, 3, 4]).det(), (-2).into());
        assert_eq!(int_mat(3, 3, &[2, 0, 0, 0, 3, 0, 0, 0, 5]).det(), 30.into());
        // singular with zero leading pivot
        assert_eq!(int_mat(3, 3, &[0, 1, 1, 0, 2, 2, 1, 0, 3]).det(), 0.into());
        // row swap needed
        assert_eq!(int_mat(2, 2, &[0, 1, 1, 0]).det(), (-1).into());
    }

    #[test]
    fn rank_rectangular() {
        assert_eq!(int_mat(2, 3, &[1, 2, 3, 2, 4, 6]).rank(), 1);
        assert_eq!(int_mat(2, 3, &[1, 2, 3, 0, 1, 1]).rank(), 2);
        assert_eq!(int_mat(3, 2, &[1, 0, 0, 1, 1, 1]).rank(), 2);
        assert_eq!(IntMatrix::zeros(3, 4).rank(), 0);
    }

    #[test]
    fn field_det_matches_bareiss() {
        let field = PrimeField::new((1u128 << 61) - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for n in 1..=6 {
            for _ in 0..20 {
                let vals: Vec<i64> = (0..n * n).map(|_| rng.gen_range(-4..=4)).collect();
                let im = int_mat(n, n, &vals);
                let exact = im.det();
                let fm = FieldMatrix::from_int(&im, &field);
                let modular = fm.det(&field);
                let expect = field.from_i64(i64::try_from(&exact).unwrap());
                assert_eq!(modular, expect, "n={n} vals={vals:?}");
            }
        }
    }

    #[test]
    fn invert_round_trip_and_det() {
        let field = PrimeField::new(1_000_003);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for n in 1..=8 {
            let mut m = FieldMatrix::zeros(n, n, &field);
            loop {
                for i in 0..n {
                    for j in 0..n {
                        m.set(i, j, field.sample(&mut rng));
                    }
                }
                if m.invert(&field).is_some() {
                    break;
                }
            }
            let (inv, det) = m.invert(&field).unwrap();
            assert!(!field.is_zero(&det));
            // m * inv = I, checked column by column
            for j in 0..n {
                let col: Vec<u128> = (0..n).map(|i| *inv.get(i, j)).collect();
                let prod = m.mul_vec(&col, &field);
                for (i, v) in prod.iter().enumerate() {
                    assert_eq!(*v, if i == j { 1 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn singular_matrix_has_no_inverse() {
        let field = PrimeField::new(101);
        let im = int_mat(2, 2, &[1, 2, 2, 4]);
        let fm = FieldMatrix::from_int(&im, &field);
        assert!(fm.invert(&field).is_none());
        assert_eq!(fm.det(&field), 0);
        assert_eq!(fm.rank(&field), 1);
    }

    #[test]
    fn field_rank_matches_exact_rank() {
        let field = PrimeField::new((1u128 << 61) - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (r, c) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
            let vals: Vec<i64> = (0..r * c).map(|_| rng.gen_range(-2..=2)).collect();
            let im = int_mat(r, c, &vals);
            let fm = FieldMatrix::from_int(&im, &field);
            assert_eq!(im.rank(), fm.rank(&field));
        }
    }
}
