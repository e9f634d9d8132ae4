//! Dense exact matrices over the three supported coefficient rings.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::field::{kernel_basis, rank as frank, rref, solve_columns, FMat, PrimeFieldCtx,
                   Rationals};
use super::CoefficientRing;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Data {
    Q(Vec<BigRational>),
    F(Vec<u64>),
    Z(Vec<BigInt>),
}

/// A `rows x cols` matrix with entries in a fixed [`CoefficientRing`].
///
/// Matrices arising from sheaves have small integer entries; the rational
/// backend only sees genuine fractions during row reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMatrix {
    ring: CoefficientRing,
    rows: usize,
    cols: usize,
    pub(crate) data: Data,
}

impl ExactMatrix {
    pub fn zeros(ring: CoefficientRing, rows: usize, cols: usize) -> Self {
        let data = match ring {
            CoefficientRing::Rationals => Data::Q(vec![BigRational::zero(); rows * cols]),
            CoefficientRing::PrimeField(_) => Data::F(vec![0; rows * cols]),
            CoefficientRing::Integers => Data::Z(vec![BigInt::zero(); rows * cols]),
        };
        ExactMatrix { ring, rows, cols, data }
    }

    pub fn identity(ring: CoefficientRing, n: usize) -> Self {
        let mut m = Self::zeros(ring, n, n);
        for i in 0..n {
            m.set_i64(i, i, 1);
        }
        m
    }

    pub fn from_int_entries(
        ring: CoefficientRing,
        rows: usize,
        cols: usize,
        entries: &[i64],
    ) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry grid does not match shape");
        let mut m = Self::zeros(ring, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set_i64(i, j, entries[i * cols + j]);
            }
        }
        m
    }

    pub fn from_fn(
        ring: CoefficientRing,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> i64,
    ) -> Self {
        let mut m = Self::zeros(ring, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set_i64(i, j, f(i, j));
            }
        }
        m
    }

    pub fn ring(&self) -> CoefficientRing {
        self.ring
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set_i64(&mut self, i: usize, j: usize, v: i64) {
        assert!(i < self.rows && j < self.cols, "index out of range");
        let idx = i * self.cols + j;
        match (&mut self.data, self.ring) {
            (Data::Q(a), _) => a[idx] = BigRational::from_integer(BigInt::from(v)),
            (Data::F(a), CoefficientRing::PrimeField(p)) => {
                a[idx] = (v.rem_euclid(p as i64)) as u64
            }
            (Data::Z(a), _) => a[idx] = BigInt::from(v),
            _ => unreachable!("ring/data mismatch"),
        }
    }

    pub(crate) fn set_bigint(&mut self, i: usize, j: usize, v: &BigInt) {
        let idx = i * self.cols + j;
        match (&mut self.data, self.ring) {
            (Data::Q(a), _) => a[idx] = BigRational::from_integer(v.clone()),
            (Data::F(a), CoefficientRing::PrimeField(p)) => {
                use num_traits::ToPrimitive;
                a[idx] = v.mod_floor(&BigInt::from(p)).to_u64().unwrap();
            }
            (Data::Z(a), _) => a[idx] = v.clone(),
            _ => unreachable!("ring/data mismatch"),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.data {
            Data::Q(a) => a.iter().all(|x| x.is_zero()),
            Data::F(a) => a.iter().all(|x| *x == 0),
            Data::Z(a) => a.iter().all(|x| x.is_zero()),
        }
    }

    /// Add `sign` times `block` into this matrix with upper-left corner at
    /// `(r0, c0)`. Used to assemble differentials from per-chain blocks.
    pub fn add_block(&mut self, r0: usize, c0: usize, block: &ExactMatrix, sign: i64) {
        assert_eq!(self.ring, block.ring, "ring mismatch in block assembly");
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols, "block overflow");
        for i in 0..block.rows {
            for j in 0..block.cols {
                let dst = (r0 + i) * self.cols + (c0 + j);
                let src = i * block.cols + j;
                match (&mut self.data, &block.data) {
                    (Data::Q(a), Data::Q(b)) => {
                        a[dst] += &b[src] * BigRational::from_integer(BigInt::from(sign))
                    }
                    (Data::F(a), Data::F(b)) => {
                        let CoefficientRing::PrimeField(p) = self.ring else { unreachable!() };
                        let s = (sign.rem_euclid(p as i64)) as u128;
                        a[dst] = ((a[dst] as u128 + b[src] as u128 * s) % p as u128) as u64;
                    }
                    (Data::Z(a), Data::Z(b)) => a[dst] += &b[src] * BigInt::from(sign),
                    _ => unreachable!("ring/data mismatch"),
                }
            }
        }
    }

    pub fn mul(&self, rhs: &ExactMatrix) -> ExactMatrix {
        assert_eq!(self.ring, rhs.ring, "ring mismatch in matrix product");
        assert_eq!(self.cols, rhs.rows, "shape mismatch in matrix product");
        let mut out = ExactMatrix::zeros(self.ring, self.rows, rhs.cols);
        match (&self.data, &rhs.data, &mut out.data) {
            (Data::Q(a), Data::Q(b), Data::Q(c)) => {
                mul_into(self.rows, self.cols, rhs.cols, a, b, c, &BigRational::zero())
            }
            (Data::Z(a), Data::Z(b), Data::Z(c)) => {
                mul_into(self.rows, self.cols, rhs.cols, a, b, c, &BigInt::zero())
            }
            (Data::F(a), Data::F(b), Data::F(c)) => {
                let CoefficientRing::PrimeField(p) = self.ring else { unreachable!() };
                let p = p as u128;
                for i in 0..self.rows {
                    for k in 0..self.cols {
                        let aik = a[i * self.cols + k] as u128;
                        if aik == 0 {
                            continue;
                        }
                        for j in 0..rhs.cols {
                            let t = aik * b[k * rhs.cols + j] as u128 % p;
                            let cur = &mut c[i * rhs.cols + j];
                            *cur = ((*cur as u128 + t) % p) as u64;
                        }
                    }
                }
            }
            _ => unreachable!("ring/data mismatch"),
        }
        out
    }

    /// Kronecker product, with the left factor indexing the coarse blocks.
    pub fn kron(&self, rhs: &ExactMatrix) -> ExactMatrix {
        assert_eq!(self.ring, rhs.ring, "ring mismatch in kronecker product");
        let mut out = ExactMatrix::zeros(self.ring, self.rows * rhs.rows, self.cols * rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        let r = i * rhs.rows + k;
                        let c = j * rhs.cols + l;
                        let idx = r * out.cols + c;
                        match (&self.data, &rhs.data, &mut out.data) {
                            (Data::Q(a), Data::Q(b), Data::Q(o)) => {
                                o[idx] = &a[i * self.cols + j] * &b[k * rhs.cols + l]
                            }
                            (Data::Z(a), Data::Z(b), Data::Z(o)) => {
                                o[idx] = &a[i * self.cols + j] * &b[k * rhs.cols + l]
                            }
                            (Data::F(a), Data::F(b), Data::F(o)) => {
                                let CoefficientRing::PrimeField(p) = self.ring else {
                                    unreachable!()
                                };
                                o[idx] = (a[i * self.cols + j] as u128
                                    * b[k * rhs.cols + l] as u128
                                    % p as u128) as u64;
                            }
                            _ => unreachable!("ring/data mismatch"),
                        }
                    }
                }
            }
        }
        out
    }

    /// Rank over the fraction field of the ring (over the integers this is
    /// the rank over the rationals).
    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        match &self.data {
            Data::F(a) => {
                let CoefficientRing::PrimeField(p) = self.ring else { unreachable!() };
                let ctx = PrimeFieldCtx { p };
                let mut m = FMat::<PrimeFieldCtx> { rows: self.rows, cols: self.cols, a: a.clone() };
                frank(&ctx, &mut m)
            }
            Data::Z(a) => bareiss_rank(self.rows, self.cols, a.clone()),
            Data::Q(a) => {
                // clear denominators row by row, then integer elimination
                let mut ints = Vec::with_capacity(a.len());
                for i in 0..self.rows {
                    let row = &a[i * self.cols..(i + 1) * self.cols];
                    let mut l = BigInt::one();
                    for x in row {
                        l = l.lcm(x.denom());
                    }
                    for x in row {
                        ints.push((x * BigRational::from_integer(l.clone())).to_integer());
                    }
                }
                bareiss_rank(self.rows, self.cols, ints)
            }
        }
    }

    /// Determinant via fraction-free elimination; square matrices only.
    #[cfg(test)]
    pub(crate) fn det_over_q(&self) -> BigRational {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let (ints, denom) = match &self.data {
            Data::Z(a) => (a.clone(), BigRational::one()),
            Data::Q(a) => {
                let mut ints = Vec::with_capacity(a.len());
                let mut denom = BigRational::one();
                for i in 0..self.rows {
                    let row = &a[i * self.cols..(i + 1) * self.cols];
                    let mut l = BigInt::one();
                    for x in row {
                        l = l.lcm(x.denom());
                    }
                    denom *= BigRational::from_integer(l.clone());
                    for x in row {
                        ints.push((x * BigRational::from_integer(l.clone())).to_integer());
                    }
                }
                (ints, denom)
            }
            Data::F(_) => panic!("determinant over a prime field is not needed here"),
        };
        BigRational::from_integer(bareiss_det(self.rows, ints)) / denom
    }

    /// Copy of the rectangular block with upper-left corner `(r0, c0)`.
    pub(crate) fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> ExactMatrix {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "submatrix out of range");
        let mut out = ExactMatrix::zeros(self.ring, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let src = (r0 + i) * self.cols + (c0 + j);
                let dst = i * cols + j;
                match (&self.data, &mut out.data) {
                    (Data::Q(a), Data::Q(b)) => b[dst] = a[src].clone(),
                    (Data::F(a), Data::F(b)) => b[dst] = a[src],
                    (Data::Z(a), Data::Z(b)) => b[dst] = a[src].clone(),
                    _ => unreachable!(),
                }
            }
        }
        out
    }

    #[cfg(test)]
    pub(crate) fn entry_to_string(&self, i: usize, j: usize) -> String {
        let idx = i * self.cols + j;
        match &self.data {
            Data::Q(a) => a[idx].to_string(),
            Data::F(a) => a[idx].to_string(),
            Data::Z(a) => a[idx].to_string(),
        }
    }
}

fn mul_into<T>(n: usize, m: usize, k: usize, a: &[T], b: &[T], c: &mut [T], zero: &T)
where
    T: Clone + PartialEq,
    for<'a> &'a T: std::ops::Mul<&'a T, Output = T>,
    for<'a> T: std::ops::AddAssign<T>,
{
    for i in 0..n {
        for l in 0..m {
            let ail = &a[i * m + l];
            if ail == zero {
                continue;
            }
            for j in 0..k {
                c[i * k + j] += ail * &b[l * k + j];
            }
        }
    }
}

/// Fraction-free Gaussian elimination rank with full pivoting on the entry of
/// smallest absolute value (ties by lowest row, then lowest column). Exact
/// over the integers.
pub(crate) fn bareiss_rank(rows: usize, cols: usize, mut a: Vec<BigInt>) -> usize {
    let mut prev = BigInt::one();
    let mut r = 0usize;
    let dim = rows.min(cols);
    let mut row_perm: Vec<usize> = (0..rows).collect();
    let mut col_perm: Vec<usize> = (0..cols).collect();
    while r < dim {
        // pick pivot
        let mut best: Option<(usize, usize)> = None;
        for i in r..rows {
            for j in r..cols {
                let v = &a[row_perm[i] * cols + col_perm[j]];
                if v.is_zero() {
                    continue;
                }
                match &best {
                    None => best = Some((i, j)),
                    Some((bi, bj)) => {
                        let bv = &a[row_perm[*bi] * cols + col_perm[*bj]];
                        if v.abs() < bv.abs() {
                            best = Some((i, j));
                        }
                    }
                }
            }
        }
        let Some((pi, pj)) = best else {
            break;
        };
        row_perm.swap(r, pi);
        col_perm.swap(r, pj);
        let pivot = a[row_perm[r] * cols + col_perm[r]].clone();
        for i in r + 1..rows {
            let air = a[row_perm[i] * cols + col_perm[r]].clone();
            for j in r + 1..cols {
                let arj = &a[row_perm[r] * cols + col_perm[j]];
                let aij = &a[row_perm[i] * cols + col_perm[j]];
                let num = aij * &pivot - &air * arj;
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "fraction-free division must be exact");
                a[row_perm[i] * cols + col_perm[j]] = q;
            }
            a[row_perm[i] * cols + col_perm[r]] = BigInt::zero();
        }
        prev = pivot;
        r += 1;
    }
    r
}

/// Determinant by the same fraction-free scheme; the last pivot is the
/// determinant up to the sign of the accumulated permutations.
#[cfg(test)]
pub(crate) fn bareiss_det(n: usize, mut a: Vec<BigInt>) -> BigInt {
    if n == 0 {
        return BigInt::one();
    }
    let mut prev = BigInt::one();
    let mut sign = 1i64;
    let mut row_perm: Vec<usize> = (0..n).collect();
    let mut col_perm: Vec<usize> = (0..n).collect();
    for r in 0..n {
        let mut best: Option<(usize, usize)> = None;
        for i in r..n {
            for j in r..n {
                let v = &a[row_perm[i] * n + col_perm[j]];
                if v.is_zero() {
                    continue;
                }
                match &best {
                    None => best = Some((i, j)),
                    Some((bi, bj)) => {
                        let bv = &a[row_perm[*bi] * n + col_perm[*bj]];
                        if v.abs() < bv.abs() {
                            best = Some((i, j));
                        }
                    }
                }
            }
        }
        let Some((pi, pj)) = best else {
            return BigInt::zero();
        };
        if pi != r {
            sign = -sign;
        }
        if pj != r {
            sign = -sign;
        }
        row_perm.swap(r, pi);
        col_perm.swap(r, pj);
        let pivot = a[row_perm[r] * n + col_perm[r]].clone();
        for i in r + 1..n {
            let air = a[row_perm[i] * n + col_perm[r]].clone();
            for j in r + 1..n {
                let arj = &a[row_perm[r] * n + col_perm[j]];
                let aij = &a[row_perm[i] * n + col_perm[j]];
                let num = aij * &pivot - &air * arj;
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero());
                a[row_perm[i] * n + col_perm[j]] = q;
            }
        }
        prev = pivot;
    }
    prev * BigInt::from(sign)
}

// ---- field-level helpers dispatching on the ring -------------------------

/// Basis of the right kernel over the fraction field; field rings only.
pub(crate) fn field_kernel_basis(m: &ExactMatrix) -> ExactMatrix {
    match &m.data {
        Data::Q(a) => {
            let mut fm = FMat::<Rationals> { rows: m.rows(), cols: m.cols(), a: a.clone() };
            let k = kernel_basis(&Rationals, &mut fm);
            ExactMatrix { ring: m.ring(), rows: k.rows, cols: k.cols, data: Data::Q(k.a) }
        }
        Data::F(a) => {
            let CoefficientRing::PrimeField(p) = m.ring() else { unreachable!() };
            let ctx = PrimeFieldCtx { p };
            let mut fm = FMat::<PrimeFieldCtx> { rows: m.rows(), cols: m.cols(), a: a.clone() };
            let k = kernel_basis(&ctx, &mut fm);
            ExactMatrix { ring: m.ring(), rows: k.rows, cols: k.cols, data: Data::F(k.a) }
        }
        Data::Z(_) => panic!("kernel basis requested over the integers"),
    }
}

/// Solve `a x = rhs` over a field; deterministic particular solution.
pub(crate) fn field_solve(a: &ExactMatrix, rhs: &ExactMatrix) -> Option<ExactMatrix> {
    assert_eq!(a.ring(), rhs.ring());
    match (&a.data, &rhs.data) {
        (Data::Q(aa), Data::Q(bb)) => {
            let fa = FMat::<Rationals> { rows: a.rows(), cols: a.cols(), a: aa.clone() };
            let fb = FMat::<Rationals> { rows: rhs.rows(), cols: rhs.cols(), a: bb.clone() };
            solve_columns(&Rationals, &fa, &fb).map(|x| ExactMatrix {
                ring: a.ring(),
                rows: x.rows,
                cols: x.cols,
                data: Data::Q(x.a),
            })
        }
        (Data::F(aa), Data::F(bb)) => {
            let CoefficientRing::PrimeField(p) = a.ring() else { unreachable!() };
            let ctx = PrimeFieldCtx { p };
            let fa = FMat::<PrimeFieldCtx> { rows: a.rows(), cols: a.cols(), a: aa.clone() };
            let fb = FMat::<PrimeFieldCtx> { rows: rhs.rows(), cols: rhs.cols(), a: bb.clone() };
            solve_columns(&ctx, &fa, &fb).map(|x| ExactMatrix {
                ring: a.ring(),
                rows: x.rows,
                cols: x.cols,
                data: Data::F(x.a),
            })
        }
        _ => panic!("field solve over the integers"),
    }
}

/// Reduced row echelon pivots of the augmented block `[a | b]`, returning the
/// pivot columns; field rings only.
pub(crate) fn field_rref_pivots(m: &ExactMatrix) -> Vec<usize> {
    match &m.data {
        Data::Q(a) => {
            let mut fm = FMat::<Rationals> { rows: m.rows(), cols: m.cols(), a: a.clone() };
            rref(&Rationals, &mut fm)
        }
        Data::F(a) => {
            let CoefficientRing::PrimeField(p) = m.ring() else { unreachable!() };
            let ctx = PrimeFieldCtx { p };
            let mut fm = FMat::<PrimeFieldCtx> { rows: m.rows(), cols: m.cols(), a: a.clone() };
            rref(&ctx, &mut fm)
        }
        Data::Z(_) => panic!("rref over the integers"),
    }
}

pub(crate) fn hstack(a: &ExactMatrix, b: &ExactMatrix) -> ExactMatrix {
    assert_eq!(a.ring(), b.ring());
    assert_eq!(a.rows(), b.rows());
    let mut out = ExactMatrix::zeros(a.ring(), a.rows(), a.cols() + b.cols());
    out.add_block(0, 0, a, 1);
    out.add_block(0, a.cols(), b, 1);
    out
}
