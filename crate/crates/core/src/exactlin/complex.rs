//! Cochain complexes of exact matrices and their cohomology.

use num_bigint::BigInt;
use num_traits::One;

use super::matrix::{field_kernel_basis, field_rref_pivots, field_solve, hstack, ExactMatrix};
use super::smith::invariant_factors;
use super::{CoefficientRing, LinError};

/// The value of a cohomology group as a finitely generated module over the
/// coefficient ring: a free rank plus an invariant-factor chain. Over a field
/// the torsion list is always empty.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModuleSummary {
    pub free_rank: usize,
    pub torsion: Vec<BigInt>,
}

impl ModuleSummary {
    pub fn zero() -> Self {
        ModuleSummary::default()
    }

    pub fn free(rank: usize) -> Self {
        ModuleSummary { free_rank: rank, torsion: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }

    pub fn direct_sum(&self, other: &ModuleSummary) -> ModuleSummary {
        let mut tors = self.torsion.clone();
        tors.extend(other.torsion.iter().cloned());
        ModuleSummary {
            free_rank: self.free_rank + other.free_rank,
            torsion: super::normalize_invariant_factors(&tors),
        }
    }

    pub fn torsion_string(&self) -> String {
        self.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
    }
}

impl std::fmt::Display for ModuleSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        write!(f, "{}", self.free_rank)?;
        if !self.torsion.is_empty() {
            write!(f, "+[{}]", self.torsion_string())?;
        }
        Ok(())
    }
}

/// A bounded cochain complex: terms indexed `lo ..= hi`, with `d^i` mapping
/// term `i` to term `i + 1`. Construction validates shapes and `d o d = 0`.
#[derive(Debug, Clone)]
pub struct CochainComplex {
    ring: CoefficientRing,
    lo: i64,
    dims: Vec<usize>,
    maps: Vec<ExactMatrix>,
}

impl CochainComplex {
    pub fn new(
        ring: CoefficientRing,
        lo: i64,
        dims: Vec<usize>,
        maps: Vec<ExactMatrix>,
    ) -> Result<Self, LinError> {
        if dims.is_empty() {
            return Err(LinError::InvalidComplex("a complex needs at least one term".into()));
        }
        if maps.len() + 1 != dims.len() {
            return Err(LinError::InvalidComplex(format!(
                "{} terms require {} differentials, got {}",
                dims.len(),
                dims.len() - 1,
                maps.len()
            )));
        }
        for (k, d) in maps.iter().enumerate() {
            if d.ring() != ring {
                return Err(LinError::InvalidComplex(format!(
                    "differential at index {} is over {}, complex is over {}",
                    lo + k as i64,
                    d.ring(),
                    ring
                )));
            }
            if d.cols() != dims[k] || d.rows() != dims[k + 1] {
                return Err(LinError::ShapeMismatch(format!(
                    "differential at index {} has shape {}x{}, expected {}x{}",
                    lo + k as i64,
                    d.rows(),
                    d.cols(),
                    dims[k + 1],
                    dims[k]
                )));
            }
        }
        for k in 0..maps.len().saturating_sub(1) {
            if !maps[k + 1].mul(&maps[k]).is_zero() {
                return Err(LinError::InvalidComplex(format!(
                    "d at index {} composed with d at index {} is nonzero",
                    lo + k as i64 + 1,
                    lo + k as i64
                )));
            }
        }
        Ok(CochainComplex { ring, lo, dims, maps })
    }

    pub fn ring(&self) -> CoefficientRing {
        self.ring
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.dims.len() as i64 - 1
    }

    pub fn dim(&self, i: i64) -> usize {
        if i < self.lo || i > self.hi() {
            0
        } else {
            self.dims[(i - self.lo) as usize]
        }
    }

    /// The differential out of term `i`, when both endpoints are in range.
    pub fn differential(&self, i: i64) -> Option<&ExactMatrix> {
        if i < self.lo || i >= self.hi() {
            None
        } else {
            Some(&self.maps[(i - self.lo) as usize])
        }
    }

    fn rank_out(&self, i: i64) -> usize {
        self.differential(i).map(|d| d.rank()).unwrap_or(0)
    }

    /// Cohomology at index `i`. Outside the index range the summary is zero.
    /// Over the integers the torsion of `ker d^i / im d^{i-1}` equals the
    /// nontrivial invariant factors of `d^{i-1}`, because `ker d^i` is a
    /// saturated sublattice.
    pub fn cohomology_at(&self, i: i64) -> ModuleSummary {
        let dim = self.dim(i);
        if dim == 0 {
            return ModuleSummary::zero();
        }
        let rank_out = self.rank_out(i);
        let rank_in = self.rank_out(i - 1);
        let free_rank = dim - rank_out - rank_in;
        let torsion = match self.ring {
            CoefficientRing::Integers => match self.differential(i - 1) {
                Some(d) => invariant_factors(d)
                    .expect("integer complex")
                    .into_iter()
                    .filter(|f| !f.is_one())
                    .collect(),
                None => Vec::new(),
            },
            _ => Vec::new(),
        };
        ModuleSummary { free_rank, torsion }
    }

    pub fn all_cohomology(&self) -> Vec<(i64, ModuleSummary)> {
        (self.lo..=self.hi()).map(|i| (i, self.cohomology_at(i))).collect()
    }

    /// Alternating sum of term dimensions.
    pub fn euler_characteristic(&self) -> i64 {
        (self.lo..=self.hi())
            .map(|i| {
                let s = self.dim(i) as i64;
                if i.rem_euclid(2) == 0 {
                    s
                } else {
                    -s
                }
            })
            .sum()
    }
}

/// Column space of chosen cocycle representatives for `H^i` of a field
/// complex: a `dim_i x h` matrix. Basis choice is deterministic: kernel
/// columns of `d^i` that are pivots once the image of `d^{i-1}` is listed
/// first.
pub(crate) fn cohomology_reps(c: &CochainComplex, i: i64) -> ExactMatrix {
    assert!(c.ring().is_field(), "cohomology representatives need a field");
    let dim = c.dim(i);
    if dim == 0 {
        return ExactMatrix::zeros(c.ring(), 0, 0);
    }
    let kernel = match c.differential(i) {
        Some(d) => field_kernel_basis(d),
        None => ExactMatrix::identity(c.ring(), dim),
    };
    let boundary = match c.differential(i - 1) {
        Some(d) => d.clone(),
        None => ExactMatrix::zeros(c.ring(), dim, 0),
    };
    let aug = hstack(&boundary, &kernel);
    let pivots = field_rref_pivots(&aug);
    let chosen: Vec<usize> = pivots
        .iter()
        .filter(|&&p| p >= boundary.cols())
        .map(|&p| p - boundary.cols())
        .collect();
    let mut reps = ExactMatrix::zeros(c.ring(), dim, chosen.len());
    for (out_col, &ker_col) in chosen.iter().enumerate() {
        let col = submatrix_col(&kernel, ker_col);
        reps.add_block(0, out_col, &col, 1);
    }
    reps
}

fn submatrix_col(m: &ExactMatrix, j: usize) -> ExactMatrix {
    let mut out = ExactMatrix::zeros(m.ring(), m.rows(), 1);
    copy_column(m, j, &mut out);
    out
}

fn copy_column(src: &ExactMatrix, j: usize, dst: &mut ExactMatrix) {
    use super::matrix::Data;
    let cols = src.cols();
    match (&src.data, &mut dst.data) {
        (Data::Q(a), Data::Q(b)) => {
            for i in 0..src.rows() {
                b[i] = a[i * cols + j].clone();
            }
        }
        (Data::F(a), Data::F(b)) => {
            for i in 0..src.rows() {
                b[i] = a[i * cols + j];
            }
        }
        (Data::Z(a), Data::Z(b)) => {
            for i in 0..src.rows() {
                b[i] = a[i * cols + j].clone();
            }
        }
        _ => unreachable!(),
    }
}

/// Coordinates of cocycle columns in the chosen basis of `H^i(dst)`.
/// Each input column must be a cocycle at index `i`; its class is expressed
/// modulo the image of `d^{i-1}`.
pub(crate) fn classes_in(dst: &CochainComplex, i: i64, cocycles: &ExactMatrix) -> ExactMatrix {
    let reps = cohomology_reps(dst, i);
    let h = reps.cols();
    if cocycles.cols() == 0 || h == 0 {
        return ExactMatrix::zeros(dst.ring(), h, cocycles.cols());
    }
    let boundary = match dst.differential(i - 1) {
        Some(d) => d.clone(),
        None => ExactMatrix::zeros(dst.ring(), dst.dim(i), 0),
    };
    let basis = hstack(&boundary, &reps);
    let sol = field_solve(&basis, cocycles)
        .expect("cocycle classes must be expressible in the homology basis");
    let mut out = ExactMatrix::zeros(dst.ring(), h, cocycles.cols());
    block_copy(&sol, boundary.cols(), 0, h, cocycles.cols(), &mut out);
    out
}

fn block_copy(
    src: &ExactMatrix,
    r0: usize,
    c0: usize,
    rows: usize,
    cols: usize,
    dst: &mut ExactMatrix,
) {
    use super::matrix::Data;
    let sc = src.cols();
    let dc = dst.cols();
    match (&src.data, &mut dst.data) {
        (Data::Q(a), Data::Q(b)) => {
            for i in 0..rows {
                for j in 0..cols {
                    b[i * dc + j] = a[(r0 + i) * sc + (c0 + j)].clone();
                }
            }
        }
        (Data::F(a), Data::F(b)) => {
            for i in 0..rows {
                for j in 0..cols {
                    b[i * dc + j] = a[(r0 + i) * sc + (c0 + j)];
                }
            }
        }
        (Data::Z(a), Data::Z(b)) => {
            for i in 0..rows {
                for j in 0..cols {
                    b[i * dc + j] = a[(r0 + i) * sc + (c0 + j)].clone();
                }
            }
        }
        _ => unreachable!(),
    }
}

/// Matrix of the map induced on `H^i` by a chain-map component
/// `f_i : src^i -> dst^i`. The caller guarantees `f` commutes with the
/// differentials.
pub(crate) fn induced_on_cohomology(
    src: &CochainComplex,
    dst: &CochainComplex,
    f_i: &ExactMatrix,
    i: i64,
) -> ExactMatrix {
    let reps = cohomology_reps(src, i);
    let mapped = f_i.mul(&reps);
    classes_in(dst, i, &mapped)
}
