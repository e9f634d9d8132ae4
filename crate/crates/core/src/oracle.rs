//! Brute-force recomputation of every invariant from first principles:
//! the degreewise Cech complex on the variables for local cohomology, the
//! Koszul complex on the `l`-th powers for Ext, induced multiplication maps,
//! and augmented simplicial cochains for reduced cohomology of complexes.
//!
//! Nothing here shares code with the closed-form evaluators; transparency
//! beats speed throughout.

use crate::cube_poset::{Face, Multidegree, SRComplex};
use crate::exactlin::{
    classes_in, cohomology_reps, CochainComplex, CoefficientRing, ExactMatrix, ModuleSummary,
};
use crate::sheaf::Sheaf;
use crate::squarefree::{pi_star_dim, pi_star_mult_power};

/// Sign of inserting `j` against the elements of `w` below it.
fn cech_sign(w: &Face, j: usize) -> i64 {
    let below = (1..j).filter(|&v| w.contains(v)).count();
    if below % 2 == 0 {
        1
    } else {
        -1
    }
}

/// The degree-`alpha` piece of the Cech complex of the squarefree module of
/// `f` on all `n` variables. The term at `W` is the stalk at
/// `pos(alpha) + W` when `neg(alpha)` is contained in `W`, else zero; the
/// component `W -> W + j` is the sheaf restriction with the usual sign.
pub struct CechPiece {
    pub complex: CochainComplex,
    /// subsets with their column offsets, per cohomological position
    layout: Vec<Vec<(Face, usize)>>,
}

pub fn cech_piece(f: &Sheaf, alpha: &Multidegree) -> CechPiece {
    let n = f.n();
    let pos = alpha.pos_support();
    let neg = alpha.neg_support();
    let term_face = |w: &Face| pos.union(w);
    let present = |w: &Face| neg.subset_of(w);
    let mut layout: Vec<Vec<(Face, usize)>> = vec![Vec::new(); n + 1];
    let mut dims = vec![0usize; n + 1];
    for bits in 0..(1u32 << n) {
        let w = Face::from_bits(bits as u16);
        if !present(&w) {
            continue;
        }
        let c = w.cardinality();
        layout[c].push((w, dims[c]));
        dims[c] += f.stalk_rank(&term_face(&w));
    }
    let mut maps = Vec::with_capacity(n);
    for c in 0..n {
        let mut d = ExactMatrix::zeros(f.ring(), dims[c + 1], dims[c]);
        for &(w, col) in &layout[c] {
            for j in 1..=n {
                if w.contains(j) {
                    continue;
                }
                let wj = w.with(j);
                let Some(&(_, row)) = layout[c + 1].iter().find(|(x, _)| *x == wj) else {
                    continue;
                };
                let r = f.restriction(&term_face(&w), &term_face(&wj));
                d.add_block(row, col, &r, cech_sign(&w, j));
            }
        }
        maps.push(d);
    }
    let complex =
        CochainComplex::new(f.ring(), 0, dims, maps).expect("Cech pieces are valid complexes");
    CechPiece { complex, layout }
}

/// Local cohomology at the maximal monomial degree piece, brute force.
pub fn cech_local_cohomology(f: &Sheaf, i: i64, alpha: &Multidegree) -> ModuleSummary {
    cech_piece(f, alpha).complex.cohomology_at(i)
}

impl CechPiece {
    /// The chain-map component at position `c` of multiplication by `x_j`
    /// into the piece of the target degree.
    fn mult_component(&self, f: &Sheaf, alpha: &Multidegree, j: usize, dst: &CechPiece, c: usize) -> ExactMatrix {
        let pos_src = alpha.pos_support();
        let target = alpha.plus_unit(j);
        let pos_dst = target.pos_support();
        let mut m = ExactMatrix::zeros(f.ring(), dst.complex.dim(c as i64), self.complex.dim(c as i64));
        for &(w, col) in &self.layout[c] {
            let src_face = pos_src.union(&w);
            if f.stalk_rank(&src_face) == 0 {
                continue;
            }
            let Some(&(_, row)) = dst.layout[c].iter().find(|(x, _)| *x == w) else {
                continue;
            };
            let dst_face = pos_dst.union(&w);
            if w.contains(j) || alpha.get(j) != 0 {
                // the faces agree; multiplication is invertible or already
                // positive, so the component is the identity
                debug_assert_eq!(src_face, dst_face);
                m.add_block(row, col, &ExactMatrix::identity(f.ring(), f.stalk_rank(&src_face)), 1);
            } else {
                // crossing zero in coordinate j restricts the stalk
                let r = f.restriction(&src_face, &dst_face);
                m.add_block(row, col, &r, 1);
            }
        }
        m
    }
}

/// Rank of the map induced by multiplication by `x_j` on `H^i` between the
/// Cech pieces at `alpha` and `alpha + e_j`. Field coefficients only. The
/// chain map is validated against both differentials before use.
pub fn cech_mult_rank(f: &Sheaf, i: i64, alpha: &Multidegree, j: usize) -> usize {
    assert!(f.ring().is_field(), "multiplication ranks are computed over fields");
    let src = cech_piece(f, alpha);
    let dst = cech_piece(f, &alpha.plus_unit(j));
    let n = f.n();
    // self-check: the componentwise multiplication commutes with d
    let comps: Vec<ExactMatrix> =
        (0..=n).map(|c| src.mult_component(f, alpha, j, &dst, c)).collect();
    for c in 0..n {
        let lhs = dst.complex.differential(c as i64).unwrap().mul(&comps[c]);
        let rhs = comps[c + 1].mul(src.complex.differential(c as i64).unwrap());
        assert_eq!(lhs, rhs, "multiplication chain map must commute with the differentials");
    }
    if i < 0 || i > n as i64 {
        return 0;
    }
    let reps = cohomology_reps(&src.complex, i);
    if reps.cols() == 0 {
        return 0;
    }
    let mapped = comps[i as usize].mul(&reps);
    classes_in(&dst.complex, i, &mapped).rank()
}

/// The degree-`alpha` piece of the Koszul-dual complex on the `l`-th powers
/// of the variables: position `|S|` holds the squarefree piece at
/// `alpha + l * 1_S`, and the component `S -> S + j` is multiplication by
/// `x_j^l` with the usual sign.
pub fn koszul_piece(f: &Sheaf, l: i64, alpha: &Multidegree) -> CochainComplex {
    assert!(l >= 1);
    let n = f.n();
    let mut layout: Vec<Vec<(Face, usize)>> = vec![Vec::new(); n + 1];
    let mut dims = vec![0usize; n + 1];
    let deg_of = |s: &Face| alpha.plus(&Multidegree::shift_vector(l, s, n));
    for bits in 0..(1u32 << n) {
        let s = Face::from_bits(bits as u16);
        let c = s.cardinality();
        layout[c].push((s, dims[c]));
        dims[c] += pi_star_dim(f, &deg_of(&s));
    }
    let mut maps = Vec::with_capacity(n);
    for c in 0..n {
        let mut d = ExactMatrix::zeros(f.ring(), dims[c + 1], dims[c]);
        for &(s, col) in &layout[c] {
            if pi_star_dim(f, &deg_of(&s)) == 0 {
                continue;
            }
            for j in 1..=n {
                if s.contains(j) {
                    continue;
                }
                let sj = s.with(j);
                let Some(&(_, row)) = layout[c + 1].iter().find(|(x, _)| *x == sj) else {
                    continue;
                };
                let m = pi_star_mult_power(f, &deg_of(&s), j, l as u32);
                d.add_block(row, col, &m, cech_sign(&s, j));
            }
        }
        maps.push(d);
    }
    CochainComplex::new(f.ring(), 0, dims, maps).expect("Koszul pieces are valid complexes")
}

/// Ext against the quotient by the `l`-th powers of the variables,
/// brute force through the Koszul complex.
pub fn koszul_ext(f: &Sheaf, l: i64, i: i64, alpha: &Multidegree) -> ModuleSummary {
    koszul_piece(f, l, alpha).cohomology_at(i)
}

// ---- simplicial reduced cohomology ----------------------------------------

/// Augmented simplicial cochain complex of a complex: position `c` holds the
/// faces of cardinality `c` (the empty face at position 0), so reduced
/// cohomology in degree `i` is the cohomology at position `i + 1`.
pub fn simplicial_cochain_complex(k: &SRComplex, ring: CoefficientRing) -> CochainComplex {
    let n = k.n();
    let mut layout: Vec<Vec<Face>> = vec![Vec::new(); n + 2];
    for f in k.faces() {
        layout[f.cardinality()].push(*f);
    }
    let dims: Vec<usize> = layout.iter().map(|l| l.len()).collect();
    let mut maps = Vec::with_capacity(n + 1);
    for c in 0..=n {
        let mut d = ExactMatrix::zeros(ring, dims[c + 1], dims[c]);
        for (col, w) in layout[c].iter().enumerate() {
            for j in 1..=n {
                if w.contains(j) {
                    continue;
                }
                let wj = w.with(j);
                let Some(row) = layout[c + 1].iter().position(|x| *x == wj) else {
                    continue;
                };
                d.add_block(row, col, &ExactMatrix::identity(ring, 1), cech_sign(w, j));
            }
        }
        maps.push(d);
    }
    CochainComplex::new(ring, 0, dims, maps).expect("simplicial cochains are valid complexes")
}

/// Reduced cohomology of a simplicial complex in reduced degree `i`
/// (so `i = -1` sees the irrelevant complex; the void complex is zero
/// everywhere).
pub fn reduced_cohomology(k: &SRComplex, i: i64, ring: CoefficientRing) -> ModuleSummary {
    simplicial_cochain_complex(k, ring).cohomology_at(i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube_poset::DegreeWindow;
    use num_bigint::BigInt;

    fn q() -> CoefficientRing {
        CoefficientRing::Rationals
    }

    fn md(c: &[i64]) -> Multidegree {
        Multidegree::new(c.to_vec())
    }

    #[test]
    fn socle_piece_of_the_polynomial_ring() {
        let f = Sheaf::constant_on_complex(&SRComplex::full_simplex(2), q());
        let h = cech_local_cohomology(&f, 2, &md(&[-1, -1]));
        assert_eq!(h, ModuleSummary::free(1));
    }

    #[test]
    fn circle_piece_at_the_origin() {
        // hand enumeration: term sizes (1, 3, 3, 0), first map injective,
        // second of rank 2, so the top cohomology has rank 3 - 2 = 1
        let f = Sheaf::constant_on_complex(&SRComplex::triangle_boundary(), q());
        let piece = cech_piece(&f, &md(&[0, 0, 0]));
        assert_eq!(
            (0..=3).map(|c| piece.complex.dim(c)).collect::<Vec<_>>(),
            vec![1, 3, 3, 0]
        );
        assert_eq!(piece.complex.cohomology_at(2), ModuleSummary::free(1));
        assert_eq!(piece.complex.cohomology_at(0), ModuleSummary::zero());
        assert_eq!(piece.complex.cohomology_at(1), ModuleSummary::zero());
    }

    #[test]
    fn zero_stalks_give_zero_pieces() {
        // positive support outside the complex kills every term
        let f = Sheaf::constant_on_complex(&SRComplex::triangle_boundary(), q());
        let alpha = md(&[1, 1, 1]);
        for i in 0..=3 {
            assert!(cech_local_cohomology(&f, i, &alpha).is_zero());
        }
    }

    #[test]
    fn koszul_socle_of_the_plane() {
        let f = Sheaf::constant_on_complex(&SRComplex::full_simplex(2), q());
        assert_eq!(koszul_ext(&f, 1, 2, &md(&[-1, -1])), ModuleSummary::free(1));
        // positive depth: no socle in the ring itself
        let w = DegreeWindow::cube(2, -2, 1);
        for l in 1..=3 {
            for alpha in w.iter() {
                assert!(koszul_ext(&f, l, 0, &alpha).is_zero());
            }
        }
    }

    #[test]
    fn koszul_matches_the_hand_checked_example() {
        // boundary of the triangle, squares of the variables: the piece at
        // (-2, 0, 0) cancels and the piece at (-1, 0, 0) survives
        let f = Sheaf::constant_on_complex(&SRComplex::triangle_boundary(), q());
        assert_eq!(koszul_ext(&f, 2, 2, &md(&[-2, 0, 0])), ModuleSummary::zero());
        assert_eq!(koszul_ext(&f, 2, 2, &md(&[-1, 0, 0])), ModuleSummary::free(1));
    }

    #[test]
    fn euler_characteristic_of_cech_pieces() {
        let f = Sheaf::constant_on_complex(&SRComplex::triangle_boundary(), q());
        let w = DegreeWindow::cube(3, -2, 1);
        for alpha in w.iter() {
            let piece = cech_piece(&f, &alpha);
            let from_dims = piece.complex.euler_characteristic();
            let from_cohomology: i64 = (0..=3)
                .map(|i| {
                    let s = piece.complex.cohomology_at(i).free_rank as i64;
                    if i % 2 == 0 {
                        s
                    } else {
                        -s
                    }
                })
                .sum();
            assert_eq!(from_dims, from_cohomology);
        }
    }

    #[test]
    fn koszul_stabilizes_to_cech() {
        // for l beyond the window width the Koszul piece equals the Cech one
        let f = Sheaf::constant_on_complex(&SRComplex::triangle_boundary(), q());
        let w = DegreeWindow::cube(3, -2, 0);
        for alpha in w.iter() {
            for i in 0..=3 {
                let via_koszul = koszul_ext(&f, 3, i, &alpha);
                let via_cech = cech_local_cohomology(&f, i, &alpha);
                assert_eq!(via_koszul, via_cech, "degree {} index {}", alpha.label(), i);
            }
        }
    }

    #[test]
    fn multiplication_rank_on_top_cohomology() {
        let f = Sheaf::constant_on_complex(&SRComplex::full_simplex(2), q());
        // x_1 between one-dimensional deep pieces is an isomorphism
        assert_eq!(cech_mult_rank(&f, 2, &md(&[-2, -1]), 1), 1);
        // into the vanishing piece the rank drops to zero
        assert_eq!(cech_mult_rank(&f, 2, &md(&[-1, -1]), 1), 0);
    }

    #[test]
    fn reduced_cohomology_of_fixtures() {
        // circle
        let s1 = SRComplex::triangle_boundary();
        assert_eq!(reduced_cohomology(&s1, 1, q()), ModuleSummary::free(1));
        assert_eq!(reduced_cohomology(&s1, 0, q()), ModuleSummary::zero());
        // irrelevant complex: rank one in reduced degree -1
        let irr = SRComplex::irrelevant(2);
        assert_eq!(reduced_cohomology(&irr, -1, q()), ModuleSummary::free(1));
        // void complex: zero everywhere
        let void = SRComplex::void(2);
        for i in -1..=2 {
            assert!(reduced_cohomology(&void, i, q()).is_zero());
        }
        // two points
        let pts = SRComplex::from_facets(
            2,
            &[Face::from_vertices(&[1], 2).unwrap(), Face::from_vertices(&[2], 2).unwrap()],
        )
        .unwrap();
        assert_eq!(reduced_cohomology(&pts, 0, q()), ModuleSummary::free(1));
    }

    #[test]
    fn projective_plane_torsion() {
        let k = SRComplex::projective_plane_6();
        // over the rationals the middle reduced cohomology vanishes
        assert!(reduced_cohomology(&k, 1, q()).is_zero());
        // over the two-element field it is one-dimensional
        assert_eq!(
            reduced_cohomology(&k, 1, CoefficientRing::PrimeField(2)),
            ModuleSummary::free(1)
        );
        // over the integers the torsion sits in reduced degree 2
        let h2 = reduced_cohomology(&k, 2, CoefficientRing::Integers);
        assert_eq!(h2.free_rank, 0);
        assert_eq!(h2.torsion, vec![BigInt::from(2)]);
    }

    #[test]
    fn supports_match_reduced_link_cohomology() {
        // the sheaf-side support cohomology against the simplicial oracle
        for k in SRComplex::enumerate_all(3).unwrap() {
            for ring in [q(), CoefficientRing::PrimeField(2)] {
                let f = Sheaf::constant_on_complex(&k, ring);
                for p in k.faces().copied().collect::<Vec<_>>() {
                    let link = k.link(&p).unwrap();
                    for i in 0..=4i64 {
                        assert_eq!(
                            f.local_cohomology_at_point(&p, i),
                            reduced_cohomology(&link, i - 1, ring),
                            "complex {:?}, p = {}, i = {}",
                            k.facets(),
                            p.label(3),
                            i
                        );
                    }
                }
            }
        }
    }
}
