//! Exact scalar arithmetic and homological linear algebra.
//!
//! Everything here is exact: rationals are arbitrary-precision fractions,
//! prime fields use machine residues, and the integer path goes through
//! Smith normal form. No floating point, no probabilistic shortcuts.

mod complex;
mod field;
mod matrix;
mod smith;

pub use complex::{CochainComplex, ModuleSummary};
pub use matrix::ExactMatrix;
pub use smith::{smith_normal_form, SmithDecomposition};

pub(crate) use complex::{classes_in, cohomology_reps, induced_on_cohomology};
pub(crate) use matrix::{field_kernel_basis, field_solve};

use num_bigint::BigInt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinError {
    #[error("unsupported ring for this operation: {0}")]
    UnsupportedRing(String),
    #[error("invalid cochain complex: {0}")]
    InvalidComplex(String),
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("cannot parse coefficient ring {0:?} (expected q, z, or fp:<prime>)")]
    BadRingSpec(String),
}

/// The coefficient ring every matrix, complex and sheaf is declared over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientRing {
    Rationals,
    PrimeField(u64),
    Integers,
}

impl CoefficientRing {
    /// Build a prime-field ring, checking primality by trial division.
    pub fn prime_field(p: u64) -> Result<Self, LinError> {
        if !is_prime(p) {
            return Err(LinError::NotPrime(p));
        }
        Ok(CoefficientRing::PrimeField(p))
    }

    pub fn is_field(&self) -> bool {
        !matches!(self, CoefficientRing::Integers)
    }

    /// Parse the CLI spelling: `q`, `z`, or `fp:<prime>`.
    pub fn parse(s: &str) -> Result<Self, LinError> {
        match s {
            "q" | "Q" => Ok(CoefficientRing::Rationals),
            "z" | "Z" => Ok(CoefficientRing::Integers),
            _ => {
                if let Some(rest) = s.strip_prefix("fp:") {
                    let p: u64 = rest.parse().map_err(|_| LinError::BadRingSpec(s.into()))?;
                    CoefficientRing::prime_field(p)
                } else {
                    Err(LinError::BadRingSpec(s.into()))
                }
            }
        }
    }
}

impl std::fmt::Display for CoefficientRing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoefficientRing::Rationals => write!(f, "q"),
            CoefficientRing::PrimeField(p) => write!(f, "fp:{p}"),
            CoefficientRing::Integers => write!(f, "z"),
        }
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.checked_mul(d).map(|s| s <= p).unwrap_or(false) {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Rewrite a multiset of nontrivial torsion orders as an invariant-factor
/// chain `t_1 | t_2 | ...`.
pub(crate) fn normalize_invariant_factors(factors: &[BigInt]) -> Vec<BigInt> {
    use num_traits::{One, Zero};
    use std::collections::BTreeMap;

    // prime -> exponents, one entry per incoming factor
    let mut table: BTreeMap<BigInt, Vec<u32>> = BTreeMap::new();
    let mut count = 0usize;
    for f in factors {
        let mut f = f.clone();
        if f.sign() == num_bigint::Sign::Minus {
            f = -f;
        }
        assert!(!f.is_zero(), "torsion orders must be nonzero");
        if f.is_one() {
            continue;
        }
        count += 1;
        let mut d = BigInt::from(2u32);
        while &d * &d <= f {
            let mut e = 0u32;
            while (&f % &d).is_zero() {
                f /= &d;
                e += 1;
            }
            if e > 0 {
                table.entry(d.clone()).or_default().push(e);
            }
            d += 1;
        }
        if !f.is_one() {
            table.entry(f).or_default().push(1);
        }
    }
    // the k-th largest factor collects the k-th largest exponent of each prime
    let mut chain = vec![BigInt::one(); count];
    for (p, mut exps) in table {
        exps.sort_unstable_by(|a, b| b.cmp(a));
        for (k, e) in exps.into_iter().enumerate() {
            chain[count - 1 - k] *= p.pow(e);
        }
    }
    chain.retain(|t| !t.is_one());
    chain
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_parsing() {
        assert_eq!(CoefficientRing::parse("q").unwrap(), CoefficientRing::Rationals);
        assert_eq!(CoefficientRing::parse("z").unwrap(), CoefficientRing::Integers);
        assert_eq!(CoefficientRing::parse("fp:5").unwrap(), CoefficientRing::PrimeField(5));
        assert!(matches!(CoefficientRing::parse("fp:6"), Err(LinError::NotPrime(6))));
        assert!(CoefficientRing::parse("r").is_err());
    }

    #[test]
    fn primality_by_trial_division() {
        let primes: Vec<u64> = (0..60).filter(|&p| is_prime(p)).collect();
        assert_eq!(primes, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]);
    }

    #[test]
    fn invariant_factor_normalization() {
        let v = |xs: &[i64]| xs.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
        assert_eq!(normalize_invariant_factors(&v(&[2, 3])), v(&[6]));
        assert_eq!(normalize_invariant_factors(&v(&[2, 4, 3])), v(&[2, 12]));
        assert_eq!(normalize_invariant_factors(&v(&[2, 2])), v(&[2, 2]));
        assert_eq!(normalize_invariant_factors(&v(&[1, 1])), v(&[]));
        assert_eq!(normalize_invariant_factors(&v(&[6, 4])), v(&[2, 12]));
    }
}
