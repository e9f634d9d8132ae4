//! Generic dense row reduction over an abstract field.
//!
//! The two fields in play are the rationals (arbitrary-precision fractions)
//! and prime fields (machine residues); the algorithms are written once over
//! a small structure trait, in the style of ring-structure based matrix
//! libraries.

use num_rational::BigRational;
use num_traits::{One, Zero};

pub(crate) trait FieldStructure {
    type Elem: Clone + PartialEq + std::fmt::Debug;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// Multiplicative inverse; only called on nonzero elements.
    fn inv(&self, a: &Self::Elem) -> Self::Elem;
}

pub(crate) struct Rationals;

impl FieldStructure for Rationals {
    type Elem = BigRational;

    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn sub(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a - b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn inv(&self, a: &BigRational) -> BigRational {
        a.recip()
    }
}

pub(crate) struct PrimeFieldCtx {
    pub p: u64,
}

impl FieldStructure for PrimeFieldCtx {
    type Elem = u64;

    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.p - a
        }
    }
    fn sub(&self, a: &u64, b: &u64) -> u64 {
        (a + self.p - b) % self.p
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 * *b as u128) % self.p as u128) as u64
    }
    fn inv(&self, a: &u64) -> u64 {
        assert!(*a != 0, "inverse of zero");
        // Fermat: a^(p-2) mod p
        let mut base = *a as u128;
        let mut e = self.p - 2;
        let p = self.p as u128;
        let mut acc: u128 = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base % p;
            }
            base = base * base % p;
            e >>= 1;
        }
        acc as u64
    }
}

/// Dense row-major matrix over a field structure.
pub(crate) struct FMat<F: FieldStructure> {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<F::Elem>,
}

impl<F: FieldStructure> FMat<F> {
    pub fn zeros(f: &F, rows: usize, cols: usize) -> Self {
        FMat { rows, cols, a: vec![f.zero(); rows * cols] }
    }

    pub fn at(&self, i: usize, j: usize) -> &F::Elem {
        &self.a[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: F::Elem) {
        self.a[i * self.cols + j] = v;
    }

    pub fn hstack(f: &F, left: &FMat<F>, right: &FMat<F>) -> FMat<F> {
        assert_eq!(left.rows, right.rows);
        let mut out = FMat::zeros(f, left.rows, left.cols + right.cols);
        for i in 0..left.rows {
            for j in 0..left.cols {
                out.set(i, j, left.at(i, j).clone());
            }
            for j in 0..right.cols {
                out.set(i, left.cols + j, right.at(i, j).clone());
            }
        }
        out
    }
}

/// Reduce `m` to reduced row echelon form in place; returns the pivot columns.
pub(crate) fn rref<F: FieldStructure>(f: &F, m: &mut FMat<F>) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0usize;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(pr) = (r..m.rows).find(|&i| !f.is_zero(m.at(i, c))) else {
            continue;
        };
        if pr != r {
            for j in 0..m.cols {
                m.a.swap(pr * m.cols + j, r * m.cols + j);
            }
        }
        let inv = f.inv(m.at(r, c));
        for j in c..m.cols {
            let v = f.mul(m.at(r, j), &inv);
            m.set(r, j, v);
        }
        for i in 0..m.rows {
            if i == r || f.is_zero(m.at(i, c)) {
                continue;
            }
            let factor = m.at(i, c).clone();
            for j in c..m.cols {
                let t = f.mul(&factor, m.at(r, j));
                let v = f.sub(m.at(i, j), &t);
                m.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub(crate) fn rank<F: FieldStructure>(f: &F, m: &mut FMat<F>) -> usize {
    // forward elimination only
    let mut r = 0usize;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(pr) = (r..m.rows).find(|&i| !f.is_zero(m.at(i, c))) else {
            continue;
        };
        if pr != r {
            for j in c..m.cols {
                m.a.swap(pr * m.cols + j, r * m.cols + j);
            }
        }
        let inv = f.inv(m.at(r, c));
        for i in r + 1..m.rows {
            if f.is_zero(m.at(i, c)) {
                continue;
            }
            let factor = f.mul(m.at(i, c), &inv);
            for j in c..m.cols {
                let t = f.mul(&factor, m.at(r, j));
                let v = f.sub(m.at(i, j), &t);
                m.set(i, j, v);
            }
        }
        r += 1;
    }
    r
}

/// Basis of the right kernel, one column per free variable, in ascending
/// free-column order.
pub(crate) fn kernel_basis<F: FieldStructure>(f: &F, m: &mut FMat<F>) -> FMat<F> {
    let cols = m.cols;
    let pivots = rref(f, m);
    let piv_set: std::collections::BTreeSet<usize> = pivots.iter().copied().collect();
    let free: Vec<usize> = (0..cols).filter(|c| !piv_set.contains(c)).collect();
    let mut out = FMat::zeros(f, cols, free.len());
    for (k, &fc) in free.iter().enumerate() {
        out.set(fc, k, f.one());
        for (r, &pc) in pivots.iter().enumerate() {
            let v = m.at(r, fc);
            if !f.is_zero(v) {
                out.set(pc, k, f.neg(v));
            }
        }
    }
    out
}

/// Solve `a * x = rhs` column by column. Returns `None` if any column is
/// inconsistent; free variables are set to zero, so the solution is the
/// deterministic particular one.
pub(crate) fn solve_columns<F: FieldStructure>(
    f: &F,
    a: &FMat<F>,
    rhs: &FMat<F>,
) -> Option<FMat<F>> {
    assert_eq!(a.rows, rhs.rows, "solve shape mismatch");
    let mut aug = FMat::hstack(f, a, rhs);
    let pivots = rref(f, &mut aug);
    // any pivot in the rhs block means inconsistency
    if pivots.iter().any(|&c| c >= a.cols) {
        return None;
    }
    let mut x = FMat::zeros(f, a.cols, rhs.cols);
    for (r, &pc) in pivots.iter().enumerate() {
        for j in 0..rhs.cols {
            x.set(pc, j, aug.at(r, a.cols + j).clone());
        }
    }
    Some(x)
}
