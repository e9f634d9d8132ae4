//! Closed-form evaluators: the Hochster-style decomposition of multigraded
//! local cohomology, its Hilbert series, the matching decomposition of Ext
//! against power ideals, and the module-structure maps (multiplication by a
//! variable) on the decomposed side.
//!
//! Degreewise evaluation only: no global module is ever materialized. For
//! local cohomology the degree selects a unique face (the negative support);
//! for Ext it selects a unique pair of faces.

use thiserror::Error;

use crate::cube_poset::{Face, Multidegree};
use crate::exactlin::{
    classes_in, cohomology_reps, field_solve, induced_on_cohomology, ExactMatrix, ModuleSummary,
};
use crate::sheaf::{mapping_cone_shifted, Sheaf};
use crate::squarefree::MonomialBoxModule;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HochsterError {
    #[error("{0} requires field coefficients")]
    UnsupportedRing(&'static str),
}

/// One summand of the local cohomology decomposition at a fixed index:
/// the supports cohomology at `face` tensored with the box cofactor.
#[derive(Debug, Clone)]
pub struct LcFormulaTerm {
    pub face: Face,
    pub summand: ModuleSummary,
    pub cofactor: MonomialBoxModule,
}

/// One summand of the Ext decomposition: a pair `p <= q`, the supports
/// cohomology at `p` of the interval avoiding `q - p`, and its finite box
/// cofactor.
#[derive(Debug, Clone)]
pub struct ExtFormulaTerm {
    pub p: Face,
    pub q: Face,
    pub summand: ModuleSummary,
    pub cofactor: MonomialBoxModule,
}

/// The degree-`alpha` piece of the `i`-th local cohomology of the squarefree
/// module of `f`, evaluated through the decomposition: zero whenever some
/// coordinate is positive, and otherwise the supports cohomology
/// `H^{i - |p|}` at the negative support `p`.
pub fn lc_formula(f: &Sheaf, i: i64, alpha: &Multidegree) -> ModuleSummary {
    if !alpha.pos_support().is_empty() {
        return ModuleSummary::zero();
    }
    let p = alpha.neg_support();
    f.local_cohomology_at_point(&p, i - p.cardinality() as i64)
}

/// The degree-`alpha` piece of `Ext^i` against the ideal of `l`-th powers of
/// the variables, through the decomposition. The degree determines the pair:
/// coordinates equal to `-l` form `q - p`, coordinates in `[1-l, -1]` form
/// `p`, all other coordinates must vanish. The value is the supports
/// cohomology at `p` of the face interval avoiding `q - p`.
pub fn ext_formula(f: &Sheaf, l: i64, i: i64, alpha: &Multidegree) -> ModuleSummary {
    assert!(l >= 1, "the power ideal needs l >= 1");
    let n = f.n();
    let mut p = Face::empty();
    let mut b = Face::empty();
    for v in 1..=n {
        let c = alpha.get(v);
        if c == 0 {
            continue;
        } else if c == -l {
            b = b.with(v);
        } else if 1 - l <= c && c <= -1 {
            p = p.with(v);
        } else {
            return ModuleSummary::zero();
        }
    }
    let q_card = (p.cardinality() + b.cardinality()) as i64;
    f.local_cohomology_with_avoid(&p, &b, i - q_card)
}

/// The full list of decomposition summands of the `i`-th local cohomology:
/// one term per face with nonvanishing supports cohomology.
pub fn lc_decomposition(f: &Sheaf, i: i64) -> Vec<LcFormulaTerm> {
    let n = f.n();
    (0..(1u32 << n))
        .map(|bits| Face::from_bits(bits as u16))
        .filter_map(|p| {
            let summand = f.local_cohomology_at_point(&p, i - p.cardinality() as i64);
            (!summand.is_zero()).then(|| LcFormulaTerm {
                face: p,
                summand,
                cofactor: MonomialBoxModule::lc_cofactor(&p, n),
            })
        })
        .collect()
}

/// The full list of Ext decomposition summands over pairs `p <= q`.
pub fn ext_decomposition(f: &Sheaf, l: i64, i: i64) -> Vec<ExtFormulaTerm> {
    assert!(l >= 1);
    let n = f.n();
    let mut out = Vec::new();
    for q_bits in 0..(1u32 << n) {
        let q = Face::from_bits(q_bits as u16);
        for p in q.subsets() {
            let b = q.minus(&p);
            // for l = 1 a nonempty p-interval is empty, so no such summand
            if l == 1 && !p.is_empty() {
                continue;
            }
            let summand = f.local_cohomology_with_avoid(&p, &b, i - q.cardinality() as i64);
            if !summand.is_zero() {
                out.push(ExtFormulaTerm {
                    p,
                    q,
                    summand,
                    cofactor: MonomialBoxModule::ext_cofactor(&p, &q, l, n),
                });
            }
        }
    }
    out
}

// ---- Hilbert series ---------------------------------------------------------

/// The Hilbert series of the `i`-th local cohomology, kept in decomposed
/// form: one coefficient module per face `p`, standing for the series
/// `prod_{v in p} t_v^{-1} / (1 - t_v^{-1})`. The coarse view substitutes a
/// single variable `u = t^{-1} / (1 - t^{-1})`.
#[derive(Debug, Clone)]
pub struct RationalSeries {
    n: usize,
    pub terms: Vec<LcFormulaTerm>,
}

pub fn hilbert_series(f: &Sheaf, i: i64) -> RationalSeries {
    RationalSeries { n: f.n(), terms: lc_decomposition(f, i) }
}

impl RationalSeries {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficients of the coarse single-variable form: entry `c` multiplies
    /// `u^c`, summing free ranks over the faces with `c` vertices.
    pub fn coarse(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.n + 1];
        for t in &self.terms {
            out[t.face.cardinality()] += t.summand.free_rank;
        }
        out
    }

    pub fn coarse_string(&self) -> String {
        let coarse = self.coarse();
        let mut parts = Vec::new();
        for (c, &coeff) in coarse.iter().enumerate() {
            if coeff == 0 {
                continue;
            }
            let part = match (c, coeff) {
                (0, _) => format!("{coeff}"),
                (1, 1) => "u".to_string(),
                (1, _) => format!("{coeff}u"),
                (_, 1) => format!("u^{c}"),
                _ => format!("{coeff}u^{c}"),
            };
            parts.push(part);
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(" + ")
        }
    }

    /// Coefficient of `t^alpha` in the expansion: the free rank at the face
    /// matching the negative support, when the degree is nonpositive.
    pub fn expansion_coeff(&self, alpha: &Multidegree) -> usize {
        if !alpha.pos_support().is_empty() {
            return 0;
        }
        let p = alpha.neg_support();
        self.terms.iter().find(|t| t.face == p).map(|t| t.summand.free_rank).unwrap_or(0)
    }

    /// Coefficients of the coarse expansion in powers of `s = t^{-1}` up to
    /// the given order: `u^c` expands as `sum_m binom(m-1, c-1) s^m`.
    pub fn coarse_expansion(&self, order: usize) -> Vec<usize> {
        let coarse = self.coarse();
        let mut out = vec![0usize; order + 1];
        out[0] = coarse[0];
        for (m, slot) in out.iter_mut().enumerate().skip(1) {
            for (c, &coeff) in coarse.iter().enumerate().skip(1) {
                *slot += coeff * binomial(m - 1, c - 1);
            }
        }
        out
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut acc = 1usize;
    for i in 0..k.min(n - k) {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

// ---- multiplication on the decomposed side ----------------------------------

/// The matrix of multiplication by `x_j` from the degree-`alpha` piece of the
/// decomposed local cohomology to the piece at `alpha + e_j`, in the
/// canonical cohomology bases. Within a face block (coordinate strictly
/// below -1) the map is the canonical identity; crossing `-1` lands in the
/// block of the smaller face through the connecting map of the support
/// triangle composed with excision; everything else is zero.
pub fn lc_mult_map(
    f: &Sheaf,
    i: i64,
    alpha: &Multidegree,
    j: usize,
) -> Result<ExactMatrix, HochsterError> {
    if !f.ring().is_field() {
        return Err(HochsterError::UnsupportedRing("lc_mult_map"));
    }
    let src = lc_formula(f, i, alpha).free_rank;
    let dst = lc_formula(f, i, &alpha.plus_unit(j)).free_rank;
    if src == 0 || dst == 0 {
        return Ok(ExactMatrix::zeros(f.ring(), dst, src));
    }
    // both pieces nonzero forces alpha <= 0 with alpha_j < 0
    let aj = alpha.get(j);
    debug_assert!(aj < 0);
    if aj < -1 {
        // same face block; the cofactor multiplication is the canonical
        // isomorphism between one-dimensional pieces
        debug_assert_eq!(src, dst);
        Ok(ExactMatrix::identity(f.ring(), src))
    } else {
        let p = alpha.neg_support();
        let k = i - p.cardinality() as i64;
        Ok(connecting_map(f, &p, j, k))
    }
}

/// The connecting map `H^k` supported at `p` on `U_p` to `H^{k+1}` supported
/// at `p - j` on `U_{p-j}`, realized on explicit cochains: identify the
/// supports on `U_p` with supports computed inside the punctured up-set of
/// `p - j` (excision, inverted by a deterministic solve), forget supports,
/// and include as the cone component of the triangle at `p - j`.
pub(crate) fn connecting_map(f: &Sheaf, p: &Face, j: usize, k: i64) -> ExactMatrix {
    assert!(p.contains(j), "the dropped vertex must lie in the face");
    let p_small = p.without(j);

    // supports at p over U_p
    let k1 = f.support_cone(p, &Face::empty());
    // sections over the punctured up-set of p - j and its double puncture
    let b3 = f.sections(|u| p_small.subset_of(u) && *u != p_small);
    let off2 = f.sections(|u| p_small.subset_of(u) && *u != p_small && u != p);
    let k2 = mapping_cone_shifted(f, &b3, &off2);
    // the triangle at p - j over its up-set
    let on3 = f.sections(|u| p_small.subset_of(u));
    let k3 = mapping_cone_shifted(f, &on3, &b3);

    // excision: restriction of both cone components onto the up-set of p
    let phi_k = {
        let rows = k1.cone.dim(k);
        let cols = k2.dim(k);
        let mut m = ExactMatrix::zeros(f.ring(), rows, cols);
        if k >= 0 {
            let top = b3.restriction_to(&k1.on, f, k as usize);
            m.add_block(0, 0, &top, 1);
        }
        if k >= 1 {
            let bottom = off2.restriction_to(&k1.off, f, (k - 1) as usize);
            m.add_block(k1.on.dim(k), b3.dim(k), &bottom, 1);
        }
        m
    };
    let phi_induced = induced_on_cohomology(&k2, &k1.cone, &phi_k, k);
    let h = phi_induced.rows();
    assert_eq!(phi_induced.cols(), h, "excision must identify the support cohomologies");
    let phi_inv = field_solve(&phi_induced, &ExactMatrix::identity(f.ring(), h))
        .expect("excision comparison is invertible");

    // cochain representatives in K2 of the canonical basis of H^k(K1)
    let reps2 = cohomology_reps(&k2, k);
    let src_cochains = reps2.mul(&phi_inv);

    // forget supports: the sections component occupies the top rows of the
    // cone term
    let projected = src_cochains.submatrix(0, 0, b3.dim(k), src_cochains.cols());

    // include as the second cone component of the triangle at p - j
    let mut included = ExactMatrix::zeros(f.ring(), k3.dim(k + 1), src_cochains.cols());
    included.add_block(on3.dim(k + 1), 0, &projected, 1);
    classes_in(&k3, k + 1, &included)
}
