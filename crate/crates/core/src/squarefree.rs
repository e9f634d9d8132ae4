//! The bridge between sheaves and multigraded modules: degreewise evaluation
//! of the squarefree module attached to a sheaf, the stalkwise description of
//! the right adjoint on finite multigraded modules, the standard resolution,
//! and the two decomposition checkers used by the closed formulas.
//!
//! Graded shift convention, fixed globally: `M(b)_a = M_{a+b}`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cube_poset::{DegreeWindow, Face, Multidegree};
use crate::exactlin::{CochainComplex, CoefficientRing, ExactMatrix};
use crate::sheaf::Sheaf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModuleError {
    #[error("action at degree {degree} along {i} has shape {got}, expected {want}")]
    ActionShape { degree: String, i: usize, want: String, got: String },
    #[error("actions at degree {degree} along {i} and {j} do not commute")]
    NonCommutingActions { degree: String, i: usize, j: usize },
    #[error("action at degree {degree} along {i} is over the wrong ring")]
    ActionRing { degree: String, i: usize },
}

// ---- degreewise evaluation of the squarefree module ----------------------

/// Dimension of the degree-`alpha` piece of the squarefree module attached
/// to `f`: the stalk at the support of `alpha` when `alpha` is nonnegative,
/// zero otherwise.
pub fn pi_star_dim(f: &Sheaf, alpha: &Multidegree) -> usize {
    if alpha.is_nonneg() {
        f.stalk_rank(&alpha.support())
    } else {
        0
    }
}

/// Matrix of multiplication by the variable `j` from the degree-`alpha`
/// piece to the piece at `alpha + e_j`: the identity once the coordinate is
/// already positive, the sheaf restriction when it crosses zero, and the
/// zero map out of a vanishing piece.
pub fn pi_star_mult(f: &Sheaf, alpha: &Multidegree, j: usize) -> ExactMatrix {
    let target = alpha.plus_unit(j);
    let rows = pi_star_dim(f, &target);
    let cols = pi_star_dim(f, alpha);
    if rows == 0 || cols == 0 {
        return ExactMatrix::zeros(f.ring(), rows, cols);
    }
    let s = alpha.support();
    if alpha.get(j) > 0 {
        ExactMatrix::identity(f.ring(), cols)
    } else {
        f.restriction(&s, &s.with(j))
    }
}

/// Multiplication by `x_j^power` as a composite of single steps.
pub fn pi_star_mult_power(f: &Sheaf, alpha: &Multidegree, j: usize, power: u32) -> ExactMatrix {
    let mut at = alpha.clone();
    let mut m = ExactMatrix::identity(f.ring(), pi_star_dim(f, alpha));
    for _ in 0..power {
        m = pi_star_mult(f, &at, j).mul(&m);
        at = at.plus_unit(j);
    }
    m
}

// ---- finite multigraded modules -------------------------------------------

/// A finitely supported multigraded module: component dimensions per degree
/// plus variable actions on covering degrees. Actions into absent components
/// are zero; all action squares must commute.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMultigradedModule {
    n: usize,
    ring: CoefficientRing,
    components: BTreeMap<Multidegree, usize>,
    actions: BTreeMap<(Multidegree, usize), ExactMatrix>,
}

impl FiniteMultigradedModule {
    pub fn new(
        n: usize,
        ring: CoefficientRing,
        components: BTreeMap<Multidegree, usize>,
        actions: BTreeMap<(Multidegree, usize), ExactMatrix>,
    ) -> Result<Self, ModuleError> {
        let m = FiniteMultigradedModule { n, ring, components, actions };
        for ((a, i), mat) in &m.actions {
            let want_rows = m.component(&a.plus_unit(*i));
            let want_cols = m.component(a);
            if mat.ring() != ring {
                return Err(ModuleError::ActionRing { degree: a.label(), i: *i });
            }
            if mat.rows() != want_rows || mat.cols() != want_cols {
                return Err(ModuleError::ActionShape {
                    degree: a.label(),
                    i: *i,
                    want: format!("{}x{}", want_rows, want_cols),
                    got: format!("{}x{}", mat.rows(), mat.cols()),
                });
            }
        }
        let degrees: Vec<Multidegree> = m.components.keys().cloned().collect();
        for a in &degrees {
            for i in 1..=n {
                for j in i + 1..=n {
                    let via_i = m.action(&a.plus_unit(i), j).mul(&m.action(a, i));
                    let via_j = m.action(&a.plus_unit(j), i).mul(&m.action(a, j));
                    if via_i != via_j {
                        return Err(ModuleError::NonCommutingActions {
                            degree: a.label(),
                            i,
                            j,
                        });
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ring(&self) -> CoefficientRing {
        self.ring
    }

    pub fn component(&self, a: &Multidegree) -> usize {
        self.components.get(a).copied().unwrap_or(0)
    }

    pub fn degrees(&self) -> impl Iterator<Item = &Multidegree> {
        self.components.keys()
    }

    /// The action of `x_i` out of degree `a`, materialized as a zero matrix
    /// when it was not stored.
    pub fn action(&self, a: &Multidegree, i: usize) -> ExactMatrix {
        match self.actions.get(&(a.clone(), i)) {
            Some(m) => m.clone(),
            None => ExactMatrix::zeros(
                self.ring,
                self.component(&a.plus_unit(i)),
                self.component(a),
            ),
        }
    }

    /// The dual of `R/(x^l)` in one variable: one-dimensional components in
    /// degrees `1 - l ..= 0`, the variable acting as the identity within the
    /// range.
    pub fn socle_dual_univariate(l: i64, ring: CoefficientRing) -> Self {
        assert!(l >= 1);
        let mut components = BTreeMap::new();
        let mut actions = BTreeMap::new();
        for d in (1 - l)..=0 {
            components.insert(Multidegree::new(vec![d]), 1);
            if d < 0 {
                actions.insert(
                    (Multidegree::new(vec![d]), 1),
                    ExactMatrix::identity(ring, 1),
                );
            }
        }
        FiniteMultigradedModule::new(1, ring, components, actions)
            .expect("interval module is valid")
    }

    /// Tensor product over the base ring of univariate modules, one per
    /// coordinate. Components multiply; the action of `x_i` is a tensor of
    /// identities with the factor action.
    pub fn tensor(factors: &[FiniteMultigradedModule]) -> Self {
        let n = factors.len();
        assert!(factors.iter().all(|m| m.n == 1), "tensor factors must be univariate");
        let ring = factors.first().map(|m| m.ring).unwrap_or(CoefficientRing::Rationals);
        let mut components = BTreeMap::new();
        let mut degree_lists: Vec<Vec<i64>> = Vec::new();
        for m in factors {
            degree_lists.push(m.components.keys().map(|d| d.coords()[0]).collect());
        }
        let mut stack = vec![Vec::<i64>::new()];
        for list in &degree_lists {
            let mut next = Vec::new();
            for prefix in &stack {
                for &d in list {
                    let mut p = prefix.clone();
                    p.push(d);
                    next.push(p);
                }
            }
            stack = next;
        }
        for coords in &stack {
            let dim: usize = coords
                .iter()
                .enumerate()
                .map(|(i, &d)| factors[i].component(&Multidegree::new(vec![d])))
                .product();
            if dim > 0 {
                components.insert(Multidegree::new(coords.clone()), dim);
            }
        }
        let mut actions = BTreeMap::new();
        for a in components.keys() {
            for i in 1..=n {
                let mut mat = ExactMatrix::identity(ring, 1);
                for (k, factor) in factors.iter().enumerate() {
                    let d = Multidegree::new(vec![a.coords()[k]]);
                    let block = if k + 1 == i {
                        factor.action(&d, 1)
                    } else {
                        ExactMatrix::identity(ring, factor.component(&d))
                    };
                    mat = mat.kron(&block);
                }
                actions.insert((a.clone(), i), mat);
            }
        }
        FiniteMultigradedModule::new(n, ring, components, actions)
            .expect("tensor products of valid modules are valid")
    }
}

/// The graded sheaf attached to a finite multigraded module by the right
/// adjoint: the stalk at `p` in degree `a` is the component at `a + 1_p`,
/// and the transition toward `p + v` is the action of `x_v`.
#[derive(Debug, Clone)]
pub struct GradedSheafData {
    module: FiniteMultigradedModule,
}

pub fn pi_lower_star(module: &FiniteMultigradedModule) -> GradedSheafData {
    GradedSheafData { module: module.clone() }
}

impl GradedSheafData {
    pub fn n(&self) -> usize {
        self.module.n()
    }

    fn shifted(&self, p: &Face, a: &Multidegree) -> Multidegree {
        a.plus(&Multidegree::shift_vector(1, p, self.module.n()))
    }

    pub fn stalk_dim(&self, p: &Face, a: &Multidegree) -> usize {
        self.module.component(&self.shifted(p, a))
    }

    /// Degrees where the stalk at `p` is nonzero, ascending.
    pub fn stalk_degrees(&self, p: &Face) -> Vec<Multidegree> {
        let shift = Multidegree::shift_vector(-1, p, self.module.n());
        self.module.degrees().map(|d| d.plus(&shift)).collect()
    }

    /// Transition map at degree `a` along the covering relation `p -> p+v`.
    pub fn transition(&self, p: &Face, v: usize, a: &Multidegree) -> ExactMatrix {
        self.module.action(&self.shifted(p, a), v)
    }
}

// ---- box modules -----------------------------------------------------------

/// A multigraded module whose pieces are zero- or one-dimensional and
/// supported on a product of per-coordinate intervals (unbounded below where
/// needed). Multiplication between two in-support pieces is the canonical
/// isomorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBoxModule {
    n: usize,
    lower: Vec<Option<i64>>,
    upper: Vec<Option<i64>>,
}

impl MonomialBoxModule {
    /// Top local cohomology of the polynomial ring on the vertices of `p`,
    /// viewed in `n` variables: intervals `(-inf, -1]` on `p`, `{0}` off.
    pub fn lc_cofactor(p: &Face, n: usize) -> Self {
        let lower = (1..=n).map(|_| None).collect::<Vec<_>>();
        let mut lower = lower;
        let mut upper = Vec::with_capacity(n);
        for v in 1..=n {
            if p.contains(v) {
                lower[v - 1] = None;
                upper.push(Some(-1));
            } else {
                lower[v - 1] = Some(0);
                upper.push(Some(0));
            }
        }
        MonomialBoxModule { n, lower, upper }
    }

    /// Top local cohomology of the twisted module of top differential forms:
    /// intervals `(-inf, 0]` everywhere.
    pub fn top_forms_lc(n: usize) -> Self {
        MonomialBoxModule { n, lower: vec![None; n], upper: vec![Some(0); n] }
    }

    /// The finite socle-type module killed by the `l`-th powers of the
    /// variables: intervals `[1-l, 0]` everywhere.
    pub fn socle_box(l: i64, n: usize) -> Self {
        MonomialBoxModule { n, lower: vec![Some(1 - l); n], upper: vec![Some(0); n] }
    }

    /// The degreewise cofactor of the Ext decomposition for the pair
    /// `p <= q`: intervals `[1-l, -1]` on `p`, `{-l}` on `q - p`, `{0}` off
    /// `q`. For `l = 1` the `p`-interval is empty, so only `p` empty
    /// contributes.
    pub fn ext_cofactor(p: &Face, q: &Face, l: i64, n: usize) -> Self {
        assert!(p.subset_of(q));
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for v in 1..=n {
            if p.contains(v) {
                lower.push(Some(1 - l));
                upper.push(Some(-1));
            } else if q.contains(v) {
                lower.push(Some(-l));
                upper.push(Some(-l));
            } else {
                lower.push(Some(0));
                upper.push(Some(0));
            }
        }
        MonomialBoxModule { n, lower, upper }
    }

    pub fn dim(&self, a: &Multidegree) -> usize {
        let ok = a.coords().iter().enumerate().all(|(i, &c)| {
            self.lower[i].map(|l| l <= c).unwrap_or(true)
                && self.upper[i].map(|u| c <= u).unwrap_or(true)
        });
        usize::from(ok)
    }

    /// Rank of multiplication by `x_j` from the `a`-piece to the next one.
    pub fn mult_rank(&self, a: &Multidegree, j: usize) -> usize {
        self.dim(a) * self.dim(&a.plus_unit(j))
    }

    pub fn is_finite(&self) -> bool {
        self.lower.iter().all(|l| l.is_some())
    }
}

// ---- standard resolution ---------------------------------------------------

/// The chain-indexed resolution of a sheaf by sums of `E (x) k_{U_p}` pieces:
/// homological term `i` is indexed by the chains `p_0 < ... < p_i` with a
/// nonzero bottom stalk, carrying the bottom stalk over the up-set of the
/// top. Its image under the squarefree functor is a complex of free modules.
#[derive(Debug)]
pub struct StandardResolution<'a> {
    f: &'a Sheaf,
    /// terms[i]: chains of `i + 1` faces with nonzero bottom stalk
    terms: Vec<Vec<Vec<Face>>>,
}

pub fn standard_resolution(f: &Sheaf) -> StandardResolution<'_> {
    let all = crate::cube_poset::enumerate_chains(f.n(), |_| true);
    let terms = all
        .by_len
        .into_iter()
        .map(|level| {
            level.into_iter().filter(|c| f.stalk_rank(c.first().unwrap()) > 0).collect()
        })
        .collect();
    StandardResolution { f, terms }
}

impl<'a> StandardResolution<'a> {
    pub fn length(&self) -> usize {
        self.terms.len()
    }

    /// Number of chain summands in homological term `i`.
    pub fn term_summands(&self, i: usize) -> usize {
        self.terms.get(i).map(|t| t.len()).unwrap_or(0)
    }

    /// The stalk of the resolution at `x`, augmented by the stalk of the
    /// sheaf: a cochain complex over `-length ..= 1` that must be exact
    /// everywhere (its term at index `-i` is the `i`-th resolution term, and
    /// the term at index 1 is the stalk).
    pub fn stalk_complex_augmented(&self, x: &Face) -> CochainComplex {
        self.complex_with(
            |chain| {
                if chain.last().unwrap().subset_of(x) {
                    self.f.stalk_rank(chain.first().unwrap())
                } else {
                    0
                }
            },
            |chain| self.f.restriction(chain.first().unwrap(), x),
            self.f.stalk_rank(x),
        )
    }

    /// The degree-`alpha` piece of the free-module image of the resolution,
    /// augmented by the degree piece of the squarefree module itself:
    /// a cochain complex over `-length ..= 1`, exact everywhere.
    pub fn free_complex_augmented_at(&self, alpha: &Multidegree) -> CochainComplex {
        let present = |chain: &Vec<Face>| -> usize {
            // the generator sits in degree 1 on the top face
            let top = chain.last().unwrap();
            let ok = alpha.is_nonneg() && (1..=self.f.n()).all(|v| !top.contains(v) || alpha.get(v) >= 1);
            if ok {
                self.f.stalk_rank(chain.first().unwrap())
            } else {
                0
            }
        };
        self.complex_with(
            present,
            |chain| self.f.restriction(chain.first().unwrap(), &alpha.support()),
            pi_star_dim(self.f, alpha),
        )
    }

    /// Shared builder: a complex whose term `-i` sums `dim_of(chain)` over
    /// the chains of term `i`, with the bar-type differential, an
    /// augmentation given by `aug_block`, and the augmentation target of the
    /// given dimension at index 1.
    fn complex_with(
        &self,
        dim_of: impl Fn(&Vec<Face>) -> usize,
        aug_block: impl Fn(&Vec<Face>) -> ExactMatrix,
        target_dim: usize,
    ) -> CochainComplex {
        let ring = self.f.ring();
        let levels = self.terms.len();
        // dims and offsets per homological term
        let mut dims = vec![0usize; levels];
        let mut offsets: Vec<Vec<usize>> = Vec::with_capacity(levels);
        for (i, level) in self.terms.iter().enumerate() {
            let mut offs = Vec::with_capacity(level.len());
            for c in level {
                offs.push(dims[i]);
                dims[i] += dim_of(c);
            }
            offsets.push(offs);
        }
        // differential from homological term i to i - 1
        let mut maps: Vec<ExactMatrix> = Vec::new();
        for i in (1..levels).rev() {
            let mut d = ExactMatrix::zeros(ring, dims[i - 1], dims[i]);
            for (ci, chain) in self.terms[i].iter().enumerate() {
                let col0 = offsets[i][ci];
                if dim_of(chain) == 0 {
                    continue;
                }
                for j in 0..chain.len() {
                    let mut s = chain.clone();
                    s.remove(j);
                    let sign = if j % 2 == 0 { 1 } else { -1 };
                    let Ok(si) = self.terms[i - 1].binary_search(&s) else {
                        continue; // bottom stalk vanished
                    };
                    if dim_of(&s) == 0 {
                        continue;
                    }
                    let row0 = offsets[i - 1][si];
                    if j == 0 {
                        // dropping the bottom restricts the coefficient stalk
                        let r = self.f.restriction(&chain[0], &chain[1]);
                        d.add_block(row0, col0, &r, sign);
                    } else {
                        // dropping an inner face or the top keeps the
                        // coefficient; the carrier only grows
                        let id =
                            ExactMatrix::identity(ring, self.f.stalk_rank(chain.first().unwrap()));
                        d.add_block(row0, col0, &id, sign);
                    }
                }
            }
            maps.push(d);
        }
        // augmentation out of term 0
        let mut aug = ExactMatrix::zeros(ring, target_dim, dims[0]);
        for (ci, chain) in self.terms[0].iter().enumerate() {
            if dim_of(chain) == 0 {
                continue;
            }
            aug.add_block(0, offsets[0][ci], &aug_block(chain), 1);
        }
        maps.push(aug);
        let mut term_dims: Vec<usize> = dims.into_iter().rev().collect();
        term_dims.push(target_dim);
        CochainComplex::new(ring, -(levels as i64 - 1), term_dims, maps)
            .expect("standard resolution complexes are valid")
    }
}

// ---- decomposition checkers -------------------------------------------------

/// Outcome of a degreewise decomposition check.
#[derive(Debug, Clone, Default)]
pub struct PropReport {
    pub checked_dims: usize,
    pub checked_transitions: usize,
    pub mismatches: Vec<String>,
}

impl PropReport {
    pub fn is_ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Check, over a window, that the graded sheaf attached to the top local
/// cohomology of the twisted top-forms module decomposes stalkwise as the
/// sum over faces `q` of the corresponding top local cohomology cofactors
/// supported on the closure of `q`. Both stalk dimensions and transition
/// ranks are compared.
pub fn check_prop_a(n: usize, window: &DegreeWindow) -> PropReport {
    assert_eq!(window.n(), n);
    let big = MonomialBoxModule::top_forms_lc(n);
    let cofactors: Vec<(Face, MonomialBoxModule)> = (0..(1u32 << n))
        .map(|b| {
            let q = Face::from_bits(b as u16);
            let c = MonomialBoxModule::lc_cofactor(&q, n);
            (q, c)
        })
        .collect();
    let mut report = PropReport::default();
    for alpha in window.iter() {
        for bits in 0..(1u32 << n) {
            let p = Face::from_bits(bits as u16);
            let one_p = Multidegree::shift_vector(1, &p, n);
            let lhs = big.dim(&alpha.plus(&one_p));
            let rhs: usize = cofactors
                .iter()
                .filter(|(q, _)| p.subset_of(q))
                .map(|(_, c)| c.dim(&alpha))
                .sum();
            report.checked_dims += 1;
            if lhs != rhs {
                report.mismatches.push(format!(
                    "stalk {} degree {}: direct {} vs decomposed {}",
                    p.label(n),
                    alpha.label(),
                    lhs,
                    rhs
                ));
            }
            for v in 1..=n {
                if p.contains(v) {
                    continue;
                }
                let shifted = alpha.plus(&one_p);
                let lhs_rank = big.dim(&shifted) * big.dim(&shifted.plus_unit(v));
                let pv = p.with(v);
                let rhs_rank: usize = cofactors
                    .iter()
                    .filter(|(q, _)| pv.subset_of(q))
                    .map(|(_, c)| c.dim(&alpha))
                    .sum();
                report.checked_transitions += 1;
                if lhs_rank != rhs_rank {
                    report.mismatches.push(format!(
                        "transition {} +{} degree {}: direct rank {} vs decomposed {}",
                        p.label(n),
                        v,
                        alpha.label(),
                        lhs_rank,
                        rhs_rank
                    ));
                }
            }
        }
    }
    report
}

/// Complete (finite) check that the graded sheaf attached to the socle-type
/// module killed by `l`-th powers decomposes as the sum over pairs
/// `p <= q` of finite cofactors on the interval carriers. Stalk dimensions
/// and transition ranks are compared at every degree.
pub fn check_prop_b(n: usize, l: i64) -> PropReport {
    assert!(l >= 1);
    let big = MonomialBoxModule::socle_box(l, n);
    // summands: pairs p <= q with carrier {r : q - p <= r <= q}
    let mut summands: Vec<(Face, Face, MonomialBoxModule)> = Vec::new();
    for qb in 0..(1u32 << n) {
        let q = Face::from_bits(qb as u16);
        for p in q.subsets() {
            summands.push((p, q, MonomialBoxModule::ext_cofactor(&p, &q, l, n)));
        }
    }
    let window = DegreeWindow::cube(n, -l, 0);
    let mut report = PropReport::default();
    for alpha in window.iter() {
        for bits in 0..(1u32 << n) {
            let r = Face::from_bits(bits as u16);
            let one_r = Multidegree::shift_vector(1, &r, n);
            let lhs = big.dim(&alpha.plus(&one_r));
            let rhs: usize = summands
                .iter()
                .filter(|(p, q, _)| q.minus(p).subset_of(&r) && r.subset_of(q))
                .map(|(_, _, c)| c.dim(&alpha))
                .sum();
            report.checked_dims += 1;
            if lhs != rhs {
                report.mismatches.push(format!(
                    "stalk {} degree {}: direct {} vs decomposed {}",
                    r.label(n),
                    alpha.label(),
                    lhs,
                    rhs
                ));
            }
            for v in 1..=n {
                if r.contains(v) {
                    continue;
                }
                let shifted = alpha.plus(&one_r);
                let lhs_rank = big.dim(&shifted) * big.dim(&shifted.plus_unit(v));
                let rv = r.with(v);
                let rhs_rank: usize = summands
                    .iter()
                    .filter(|(p, q, _)| q.minus(p).subset_of(&r) && rv.subset_of(q))
                    .map(|(_, _, c)| c.dim(&alpha))
                    .sum();
                report.checked_transitions += 1;
                if lhs_rank != rhs_rank {
                    report.mismatches.push(format!(
                        "transition {} +{} degree {}: direct rank {} vs decomposed {}",
                        r.label(n),
                        v,
                        alpha.label(),
                        lhs_rank,
                        rhs_rank
                    ));
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube_poset::SRComplex;
    use crate::exactlin::ModuleSummary;
    use crate::sheaf::{Carrier, SupportedConstant};

    fn q() -> CoefficientRing {
        CoefficientRing::Rationals
    }

    fn md(c: &[i64]) -> Multidegree {
        Multidegree::new(c.to_vec())
    }

    #[test]
    fn squarefree_pieces_of_triangle_boundary() {
        let f = Sheaf::constant_on_complex(&SRComplex::triangle_boundary(), q());
        assert_eq!(pi_star_dim(&f, &md(&[1, 1, 0])), 1);
        assert_eq!(pi_star_dim(&f, &md(&[1, 1, 1])), 0);
        assert_eq!(pi_star_dim(&f, &md(&[-1, 0, 0])), 0);
    }

    #[test]
    fn squarefree_pieces_of_top_skyscraper() {
        let f = Sheaf::constant(
            &SupportedConstant { carrier: Carrier::Point(Face::top(2)), multiplicity: 1 },
            q(),
            2,
        );
        assert_eq!(pi_star_dim(&f, &md(&[1, 1])), 1);
        assert_eq!(pi_star_dim(&f, &md(&[3, 2])), 1);
        assert_eq!(pi_star_dim(&f, &md(&[1, 0])), 0);
        assert_eq!(pi_star_dim(&f, &md(&[0, 0])), 0);
    }

    #[test]
    fn multiplication_is_iso_once_positive() {
        let f = Sheaf::constant_on_complex(&SRComplex::triangle_boundary(), q());
        let w = DegreeWindow::cube(3, 0, 2);
        for alpha in w.iter() {
            for j in 1..=3 {
                if alpha.get(j) > 0 && pi_star_dim(&f, &alpha) > 0 {
                    let m = pi_star_mult(&f, &alpha, j);
                    if m.rows() == m.cols() && m.rows() > 0 {
                        assert_eq!(m, ExactMatrix::identity(q(), m.rows()));
                    }
                }
            }
        }
    }

    #[test]
    fn socle_dual_line_for_l_one() {
        let m = FiniteMultigradedModule::socle_dual_univariate(1, q());
        let sheaf_data = pi_lower_star(&m);
        // stalk at the closed point: degree 0 only
        assert_eq!(sheaf_data.stalk_dim(&Face::empty(), &md(&[0])), 1);
        assert_eq!(sheaf_data.stalk_dim(&Face::empty(), &md(&[-1])), 0);
        // stalk at the open point: degree -1 only
        assert_eq!(sheaf_data.stalk_dim(&Face::top(1), &md(&[-1])), 1);
        assert_eq!(sheaf_data.stalk_dim(&Face::top(1), &md(&[0])), 0);
        // transition vanishes degreewise
        for d in -2..=1 {
            let t = sheaf_data.transition(&Face::empty(), 1, &md(&[d]));
            assert!(t.is_zero() || t.rows() == 0 || t.cols() == 0);
        }
    }

    #[test]
    fn socle_dual_line_for_l_two() {
        let m = FiniteMultigradedModule::socle_dual_univariate(2, q());
        let s = pi_lower_star(&m);
        // stalk dims 2 and 2
        let dim_at = |p: &Face| -> usize {
            (-3..=1).map(|d| s.stalk_dim(p, &md(&[d]))).sum()
        };
        assert_eq!(dim_at(&Face::empty()), 2);
        assert_eq!(dim_at(&Face::top(1)), 2);
        // degree placement: closed stalk at {0, -1}, open stalk at {-1, -2}
        assert_eq!(s.stalk_dim(&Face::empty(), &md(&[0])), 1);
        assert_eq!(s.stalk_dim(&Face::empty(), &md(&[-1])), 1);
        assert_eq!(s.stalk_dim(&Face::top(1), &md(&[-1])), 1);
        assert_eq!(s.stalk_dim(&Face::top(1), &md(&[-2])), 1);
        // the only nonzero transition is at degree -1
        assert_eq!(s.transition(&Face::empty(), 1, &md(&[-1])).rank(), 1);
        assert_eq!(s.transition(&Face::empty(), 1, &md(&[-2])).rank(), 0);
        assert_eq!(s.transition(&Face::empty(), 1, &md(&[0])).rank(), 0);
    }

    #[test]
    fn non_commuting_actions_are_rejected() {
        // two-variable module with anticommuting actions
        let mut components = BTreeMap::new();
        components.insert(md(&[0, 0]), 1usize);
        components.insert(md(&[1, 0]), 1usize);
        components.insert(md(&[0, 1]), 1usize);
        components.insert(md(&[1, 1]), 1usize);
        let one = ExactMatrix::identity(q(), 1);
        let minus = ExactMatrix::from_int_entries(q(), 1, 1, &[-1]);
        let mut actions = BTreeMap::new();
        actions.insert((md(&[0, 0]), 1), one.clone());
        actions.insert((md(&[0, 0]), 2), one.clone());
        actions.insert((md(&[1, 0]), 2), one.clone());
        actions.insert((md(&[0, 1]), 1), minus);
        let err = FiniteMultigradedModule::new(2, q(), components, actions).unwrap_err();
        assert!(matches!(err, ModuleError::NonCommutingActions { .. }));
    }

    #[test]
    fn adjoint_respects_tensor_decomposition() {
        // the right adjoint of a tensor of univariate modules agrees
        // degreewise with the box product structure of the factors
        for n in 2..=3usize {
            for l in 1..=3i64 {
                let factor = FiniteMultigradedModule::socle_dual_univariate(l, q());
                let m = FiniteMultigradedModule::tensor(&vec![factor.clone(); n]);
                let joint = pi_lower_star(&m);
                let single = pi_lower_star(&factor);
                let w = DegreeWindow::cube(n, -l - 1, 1);
                for alpha in w.iter() {
                    for bits in 0..(1u16 << n) {
                        let p = Face::from_bits(bits);
                        let product: usize = (1..=n)
                            .map(|v| {
                                let pv =
                                    if p.contains(v) { Face::top(1) } else { Face::empty() };
                                single.stalk_dim(&pv, &md(&[alpha.get(v)]))
                            })
                            .product();
                        assert_eq!(joint.stalk_dim(&p, &alpha), product, "n={n} l={l}");
                    }
                }
            }
        }
    }

    #[test]
    fn standard_resolution_of_top_skyscraper_on_line() {
        let f = Sheaf::constant(
            &SupportedConstant { carrier: Carrier::Point(Face::top(1)), multiplicity: 1 },
            q(),
            1,
        );
        let res = standard_resolution(&f);
        // the only chains with nonzero bottom are those starting at the top
        assert_eq!(res.term_summands(0), 1);
        assert_eq!(res.term_summands(1), 0);
    }

    #[test]
    fn standard_resolution_of_constant_on_line() {
        let f = Sheaf::constant_on_complex(&SRComplex::full_simplex(1), q());
        let res = standard_resolution(&f);
        assert_eq!(res.term_summands(0), 2);
        assert_eq!(res.term_summands(1), 1);
        // stalkwise exactness at both points
        for bits in 0..2u16 {
            let x = Face::from_bits(bits);
            let c = res.stalk_complex_augmented(&x);
            for i in c.lo()..=c.hi() {
                assert!(c.cohomology_at(i).is_zero(), "stalk {} degree {}", x.label(1), i);
            }
        }
    }

    #[test]
    fn standard_resolution_is_stalkwise_exact() {
        for k in SRComplex::enumerate_all(2).unwrap() {
            let f = Sheaf::constant_on_complex(&k, q());
            let res = standard_resolution(&f);
            for bits in 0..4u16 {
                let x = Face::from_bits(bits);
                let c = res.stalk_complex_augmented(&x);
                for i in c.lo()..=c.hi() {
                    assert!(c.cohomology_at(i).is_zero());
                }
            }
        }
    }

    #[test]
    fn free_image_recovers_the_squarefree_module() {
        for k in SRComplex::enumerate_all(2).unwrap() {
            let f = Sheaf::constant_on_complex(&k, q());
            let res = standard_resolution(&f);
            let w = DegreeWindow::cube(2, 0, 3);
            for alpha in w.iter() {
                let c = res.free_complex_augmented_at(&alpha);
                for i in c.lo()..=c.hi() {
                    assert!(
                        c.cohomology_at(i).is_zero(),
                        "complex {:?} degree {} index {}",
                        k.facets(),
                        alpha.label(),
                        i
                    );
                }
            }
        }
    }

    #[test]
    fn prop_a_examples_on_the_line() {
        let report = check_prop_a(1, &DegreeWindow::cube(1, -3, 0));
        assert!(report.is_ok(), "{:?}", report.mismatches);
        // smoke the two quoted pieces: at the closed point, degree 0 and -2
        let big = MonomialBoxModule::top_forms_lc(1);
        assert_eq!(big.dim(&md(&[0])), 1);
        assert_eq!(big.dim(&md(&[-2])), 1);
    }

    #[test]
    fn prop_a_window_check_n2() {
        let report = check_prop_a(2, &DegreeWindow::cube(2, -2, 0));
        assert!(report.is_ok(), "{:?}", report.mismatches);
        assert!(report.checked_dims > 0 && report.checked_transitions > 0);
    }

    #[test]
    fn prop_b_complete_checks() {
        for n in 1..=2usize {
            for l in 1..=3i64 {
                let report = check_prop_b(n, l);
                assert!(report.is_ok(), "n={} l={}: {:?}", n, l, report.mismatches);
            }
        }
    }

    #[test]
    fn ext_cofactor_of_l_one_needs_empty_p() {
        let n = 2;
        let q_face = Face::top(n);
        let empty = Face::empty();
        let c = MonomialBoxModule::ext_cofactor(&empty, &q_face, 1, n);
        assert_eq!(c.dim(&md(&[-1, -1])), 1);
        // with p nonempty and l = 1 the p-interval is empty
        let c2 = MonomialBoxModule::ext_cofactor(&q_face, &q_face, 1, n);
        let w = DegreeWindow::cube(n, -2, 1);
        assert!(w.iter().all(|a| c2.dim(&a) == 0));
    }

    #[test]
    fn module_summary_display_is_stable() {
        let s = ModuleSummary::free(2);
        assert_eq!(s.to_string(), "2");
    }
}
