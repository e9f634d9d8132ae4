//! Smith normal form over the integers with unimodular transforms.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::matrix::{Data, ExactMatrix};
use super::{CoefficientRing, LinError};

/// `m = u * d * v` with `d` diagonal, `u`, `v` unimodular, and the diagonal
/// a divisibility chain `d_1 | d_2 | ...`.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    /// Nonzero diagonal entries, ascending divisibility, all positive.
    pub factors: Vec<BigInt>,
    pub u: ExactMatrix,
    pub v: ExactMatrix,
    rows: usize,
    cols: usize,
}

impl SmithDecomposition {
    /// The full `rows x cols` diagonal matrix `d`.
    pub fn diagonal_matrix(&self) -> ExactMatrix {
        let mut d = ExactMatrix::zeros(CoefficientRing::Integers, self.rows, self.cols);
        for (i, f) in self.factors.iter().enumerate() {
            d.set_bigint(i, i, f);
        }
        d
    }
}

struct Work {
    rows: usize,
    cols: usize,
    w: Vec<BigInt>,
    track: bool,
    u: Vec<BigInt>, // rows x rows
    v: Vec<BigInt>, // cols x cols
}

impl Work {
    fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.w[i * self.cols + j]
    }

    // w := E w with E = swap(i,k)  =>  u := u E^{-1} (swap columns i,k of u)
    fn swap_rows(&mut self, i: usize, k: usize) {
        if i == k {
            return;
        }
        for j in 0..self.cols {
            self.w.swap(i * self.cols + j, k * self.cols + j);
        }
        if self.track {
            for r in 0..self.rows {
                self.u.swap(r * self.rows + i, r * self.rows + k);
            }
        }
    }

    fn swap_cols(&mut self, j: usize, k: usize) {
        if j == k {
            return;
        }
        for i in 0..self.rows {
            self.w.swap(i * self.cols + j, i * self.cols + k);
        }
        if self.track {
            for c in 0..self.cols {
                self.v.swap(j * self.cols + c, k * self.cols + c);
            }
        }
    }

    // row_i -= q * row_k  =>  col_k(u) += q * col_i(u)
    fn row_sub(&mut self, i: usize, k: usize, q: &BigInt) {
        for j in 0..self.cols {
            let t = q * &self.w[k * self.cols + j];
            self.w[i * self.cols + j] -= t;
        }
        if self.track {
            for r in 0..self.rows {
                let t = q * &self.u[r * self.rows + i];
                self.u[r * self.rows + k] += t;
            }
        }
    }

    // row_i += row_k (used for the divisibility fix)
    fn row_add(&mut self, i: usize, k: usize) {
        let minus_one = BigInt::from(-1);
        self.row_sub(i, k, &minus_one);
    }

    // col_j -= q * col_k  =>  row_k(v) += q * row_j(v)
    fn col_sub(&mut self, j: usize, k: usize, q: &BigInt) {
        for i in 0..self.rows {
            let t = q * &self.w[i * self.cols + k];
            self.w[i * self.cols + j] -= t;
        }
        if self.track {
            for c in 0..self.cols {
                let t = q * &self.v[j * self.cols + c];
                self.v[k * self.cols + c] += t;
            }
        }
    }

    // negate row i  =>  negate column i of u
    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let x = std::mem::take(&mut self.w[i * self.cols + j]);
            self.w[i * self.cols + j] = -x;
        }
        if self.track {
            for r in 0..self.rows {
                let x = std::mem::take(&mut self.u[r * self.rows + i]);
                self.u[r * self.rows + i] = -x;
            }
        }
    }
}

/// Pivot choice: smallest nonzero absolute value, ties broken by lowest row
/// then lowest column.
fn find_pivot(w: &Work, k: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for i in k..w.rows {
        for j in k..w.cols {
            let x = w.at(i, j);
            if x.is_zero() {
                continue;
            }
            match &best {
                None => best = Some((i, j)),
                Some((bi, bj)) => {
                    if x.abs() < w.at(*bi, *bj).abs() {
                        best = Some((i, j));
                    }
                }
            }
        }
    }
    best
}

fn run(m: &ExactMatrix, track: bool) -> Result<(Vec<BigInt>, Work), LinError> {
    if m.ring() != CoefficientRing::Integers {
        return Err(LinError::UnsupportedRing(
            "smith normal form requires integer coefficients".into(),
        ));
    }
    let Data::Z(entries) = &m.data else { unreachable!() };
    let (rows, cols) = (m.rows(), m.cols());
    let mut w = Work {
        rows,
        cols,
        w: entries.clone(),
        track,
        u: if track { identity_vec(rows) } else { Vec::new() },
        v: if track { identity_vec(cols) } else { Vec::new() },
    };

    let dim = rows.min(cols);
    let mut k = 0usize;
    while k < dim {
        let Some((pi, pj)) = find_pivot(&w, k) else {
            break;
        };
        w.swap_rows(k, pi);
        w.swap_cols(k, pj);
        loop {
            // clear column k below the pivot
            let mut dirty = false;
            for i in k + 1..rows {
                if !w.at(i, k).is_zero() {
                    let q = w.at(i, k) / w.at(k, k);
                    w.row_sub(i, k, &q);
                    if !w.at(i, k).is_zero() {
                        dirty = true;
                    }
                }
            }
            // clear row k right of the pivot
            for j in k + 1..cols {
                if !w.at(k, j).is_zero() {
                    let q = w.at(k, j) / w.at(k, k);
                    w.col_sub(j, k, &q);
                    if !w.at(k, j).is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                // remainders became the new smallest entries; reselect
                let (pi, pj) = find_pivot(&w, k).expect("nonzero remainder exists");
                w.swap_rows(k, pi);
                w.swap_cols(k, pj);
                continue;
            }
            // divisibility: the pivot must divide everything below-right
            let pivot = w.at(k, k).clone();
            let offender = (k + 1..rows)
                .flat_map(|i| (k + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !(w.at(i, j) % &pivot).is_zero());
            match offender {
                Some((i, _)) => {
                    w.row_add(k, i);
                    let (pi, pj) = find_pivot(&w, k).expect("pivot survives row add");
                    w.swap_rows(k, pi);
                    w.swap_cols(k, pj);
                }
                None => break,
            }
        }
        if w.at(k, k).sign() == num_bigint::Sign::Minus {
            w.negate_row(k);
        }
        k += 1;
    }

    let mut factors = Vec::new();
    for i in 0..dim {
        if w.at(i, i).is_zero() {
            break;
        }
        factors.push(w.at(i, i).clone());
    }
    Ok((factors, w))
}

fn identity_vec(n: usize) -> Vec<BigInt> {
    let mut v = vec![BigInt::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = BigInt::from(1);
    }
    v
}

/// Full decomposition `m = u d v` with transforms.
pub fn smith_normal_form(m: &ExactMatrix) -> Result<SmithDecomposition, LinError> {
    let (factors, w) = run(m, true)?;
    let mut u = ExactMatrix::zeros(CoefficientRing::Integers, w.rows, w.rows);
    let mut v = ExactMatrix::zeros(CoefficientRing::Integers, w.cols, w.cols);
    for i in 0..w.rows {
        for j in 0..w.rows {
            u.set_bigint(i, j, &w.u[i * w.rows + j]);
        }
    }
    for i in 0..w.cols {
        for j in 0..w.cols {
            v.set_bigint(i, j, &w.v[i * w.cols + j]);
        }
    }
    Ok(SmithDecomposition { factors, u, v, rows: w.rows, cols: w.cols })
}

/// Invariant factors only (no transform bookkeeping); used on the torsion
/// path of integer cohomology.
pub(crate) fn invariant_factors(m: &ExactMatrix) -> Result<Vec<BigInt>, LinError> {
    Ok(run(m, false)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_integer::Integer;
    use num_traits::One;

    fn zmat(rows: usize, cols: usize, e: &[i64]) -> ExactMatrix {
        ExactMatrix::from_int_entries(CoefficientRing::Integers, rows, cols, e)
    }

    /// Determinant-divisor oracle: the product d_1 ... d_k equals the gcd of
    /// all k x k minors.
    fn minor_gcd_oracle(m: &ExactMatrix) -> Vec<BigInt> {
        fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for first in 0..n {
                for rest in combos(n, k - 1) {
                    if rest.iter().all(|&r| r > first) {
                        let mut c = vec![first];
                        c.extend(rest);
                        out.push(c);
                    }
                }
            }
            out
        }
        let dim = m.rows().min(m.cols());
        let mut divisors = vec![BigInt::one()];
        for k in 1..=dim {
            let mut g = BigInt::zero();
            for ri in combos(m.rows(), k) {
                for ci in combos(m.cols(), k) {
                    let sub = ExactMatrix::from_fn(CoefficientRing::Integers, k, k, |i, j| {
                        m.entry_to_string(ri[i], ci[j]).parse::<i64>().unwrap()
                    });
                    g = g.gcd(&sub.det_over_q().to_integer());
                }
            }
            if g.is_zero() {
                break;
            }
            divisors.push(g);
        }
        (1..divisors.len()).map(|k| &divisors[k] / &divisors[k - 1]).collect()
    }

    fn check_full(m: &ExactMatrix) {
        let s = smith_normal_form(m).unwrap();
        // exact reconstruction
        let prod = s.u.mul(&s.diagonal_matrix()).mul(&s.v);
        assert_eq!(&prod, m, "u d v must reproduce the input");
        // unimodular transforms
        assert_eq!(s.u.det_over_q().to_integer().abs(), BigInt::one());
        assert_eq!(s.v.det_over_q().to_integer().abs(), BigInt::one());
        // divisibility chain
        for pair in s.factors.windows(2) {
            assert!((&pair[1] % &pair[0]).is_zero(), "factors must form a chain");
        }
        // uniqueness against the independent oracle
        assert_eq!(s.factors, minor_gcd_oracle(m));
    }

    #[test]
    fn diag_two_three() {
        let m = zmat(2, 2, &[2, 0, 0, 3]);
        let s = smith_normal_form(&m).unwrap();
        assert_eq!(s.factors, vec![BigInt::one(), BigInt::from(6)]);
        check_full(&m);
    }

    #[test]
    fn identity_three() {
        let m = ExactMatrix::identity(CoefficientRing::Integers, 3);
        let s = smith_normal_form(&m).unwrap();
        assert_eq!(s.factors, vec![BigInt::one(); 3]);
    }

    #[test]
    fn zero_matrix_has_no_factors() {
        let m = ExactMatrix::zeros(CoefficientRing::Integers, 3, 2);
        let s = smith_normal_form(&m).unwrap();
        assert!(s.factors.is_empty());
    }

    #[test]
    fn rejects_non_integer_rings() {
        let m = ExactMatrix::identity(CoefficientRing::Rationals, 2);
        assert!(matches!(smith_normal_form(&m), Err(LinError::UnsupportedRing(_))));
    }

    #[test]
    fn random_matrices_match_minor_gcd_oracle() {
        // small deterministic pseudo-random integer matrices
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..40 {
            let rows = (next() % 4 + 1) as usize;
            let cols = (next() % 4 + 1) as usize;
            let entries: Vec<i64> =
                (0..rows * cols).map(|_| (next() % 11) as i64 - 5).collect();
            check_full(&zmat(rows, cols, &entries));
        }
    }
}
