//! Combinatorics of the poset of subsets of `{1..n}` with the Alexandroff
//! topology (open sets are upward closed): faces, simplicial complexes as
//! downward-closed families, links, chains and multidegrees.

use std::collections::BTreeSet;

use thiserror::Error;

/// Vertex bound: faces are bit sets in one machine word.
pub const MAX_VERTICES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PosetError {
    #[error("vertex {0} out of range 1..={1}")]
    VertexOutOfRange(usize, usize),
    #[error("vertex bound {0} exceeds the supported maximum {MAX_VERTICES}")]
    TooManyVertices(usize),
    #[error("face {0} is not in the complex")]
    NotAFace(String),
    #[error("exhaustive enumeration is limited to n <= {0}, got n = {1}")]
    EnumerationTooLarge(usize, usize),
}

/// A subset of `{1..n}`, stored as a bit set (vertex `i` is bit `i - 1`).
/// Ordering is by bitmask value, which fixes every enumeration order in the
/// crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Face(u16);

impl Face {
    pub fn empty() -> Self {
        Face(0)
    }

    pub fn from_bits(bits: u16) -> Self {
        Face(bits)
    }

    pub fn from_vertices(vertices: &[usize], n: usize) -> Result<Self, PosetError> {
        if n > MAX_VERTICES {
            return Err(PosetError::TooManyVertices(n));
        }
        let mut bits = 0u16;
        for &v in vertices {
            if v == 0 || v > n {
                return Err(PosetError::VertexOutOfRange(v, n));
            }
            bits |= 1 << (v - 1);
        }
        Ok(Face(bits))
    }

    /// The full face `{1..n}`.
    pub fn top(n: usize) -> Self {
        Face(if n == 0 { 0 } else { ((1u32 << n) - 1) as u16 })
    }

    pub fn bits(&self) -> u16 {
        self.0
    }

    pub fn cardinality(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, vertex: usize) -> bool {
        vertex >= 1 && self.0 >> (vertex - 1) & 1 == 1
    }

    pub fn subset_of(&self, other: &Face) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(&self, other: &Face) -> Face {
        Face(self.0 | other.0)
    }

    pub fn intersect(&self, other: &Face) -> Face {
        Face(self.0 & other.0)
    }

    pub fn minus(&self, other: &Face) -> Face {
        Face(self.0 & !other.0)
    }

    pub fn with(&self, vertex: usize) -> Face {
        Face(self.0 | 1 << (vertex - 1))
    }

    pub fn without(&self, vertex: usize) -> Face {
        Face(self.0 & !(1 << (vertex - 1)))
    }

    /// Complement inside `{1..n}`.
    pub fn complement(&self, n: usize) -> Face {
        Face(Face::top(n).0 & !self.0)
    }

    pub fn vertices(&self, n: usize) -> Vec<usize> {
        (1..=n).filter(|&v| self.contains(v)).collect()
    }

    /// All subsets of this face, ascending by bitmask.
    pub fn subsets(&self) -> Vec<Face> {
        let m = self.0;
        let mut out = Vec::with_capacity(1 << self.cardinality());
        let mut s = 0u16;
        loop {
            out.push(Face(s));
            if s == m {
                break;
            }
            s = (s.wrapping_sub(m)) & m;
        }
        out.sort_unstable();
        out
    }

    pub fn label(&self, n: usize) -> String {
        if self.is_empty() {
            "{}".to_string()
        } else {
            let vs: Vec<String> = self.vertices(n).iter().map(|v| v.to_string()).collect();
            format!("{{{}}}", vs.join(","))
        }
    }
}

/// A simplicial complex on `{1..n}`: a downward-closed family of faces.
/// The void complex (no faces at all) is allowed and distinct from the
/// irrelevant complex whose only face is the empty one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SRComplex {
    n: usize,
    faces: BTreeSet<Face>,
}

impl SRComplex {
    /// Downward closure of a facet list. An empty facet list gives the void
    /// complex.
    pub fn from_facets(n: usize, facets: &[Face]) -> Result<Self, PosetError> {
        if n > MAX_VERTICES {
            return Err(PosetError::TooManyVertices(n));
        }
        let top = Face::top(n);
        let mut faces = BTreeSet::new();
        for f in facets {
            if !f.subset_of(&top) {
                let extra = f.minus(&top);
                let v = (1..=MAX_VERTICES).find(|&v| extra.contains(v)).unwrap_or(0);
                return Err(PosetError::VertexOutOfRange(v, n));
            }
            faces.extend(f.subsets());
        }
        Ok(SRComplex { n, faces })
    }

    pub fn void(n: usize) -> Self {
        SRComplex { n, faces: BTreeSet::new() }
    }

    /// The complex whose only face is the empty face.
    pub fn irrelevant(n: usize) -> Self {
        let mut faces = BTreeSet::new();
        faces.insert(Face::empty());
        SRComplex { n, faces }
    }

    pub fn full_simplex(n: usize) -> Self {
        Self::from_facets(n, &[Face::top(n)]).expect("top face is in range")
    }

    /// Boundary of the triangle on three vertices.
    pub fn triangle_boundary() -> Self {
        let e = |a: usize, b: usize| Face::from_vertices(&[a, b], 3).unwrap();
        Self::from_facets(3, &[e(1, 2), e(1, 3), e(2, 3)]).unwrap()
    }

    /// The six-vertex triangulation of the real projective plane.
    pub fn projective_plane_6() -> Self {
        let t = |a: usize, b: usize, c: usize| Face::from_vertices(&[a, b, c], 6).unwrap();
        Self::from_facets(
            6,
            &[
                t(1, 2, 3),
                t(1, 3, 4),
                t(1, 4, 5),
                t(1, 5, 6),
                t(1, 2, 6),
                t(2, 3, 5),
                t(3, 4, 6),
                t(2, 4, 5),
                t(3, 5, 6),
                t(2, 4, 6),
            ],
        )
        .unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn contains(&self, f: &Face) -> bool {
        self.faces.contains(f)
    }

    pub fn is_void(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Faces in ascending bitmask order.
    pub fn faces(&self) -> impl Iterator<Item = &Face> {
        self.faces.iter()
    }

    /// Maximal faces, ascending by bitmask.
    pub fn facets(&self) -> Vec<Face> {
        self.faces
            .iter()
            .filter(|f| (1..=self.n).all(|v| f.contains(v) || !self.faces.contains(&f.with(v))))
            .copied()
            .collect()
    }

    pub fn is_downward_closed(&self) -> bool {
        self.faces.iter().all(|f| {
            (1..=self.n).filter(|&v| f.contains(v)).all(|v| self.faces.contains(&f.without(v)))
        })
    }

    /// The link of `p`: faces `q` disjoint from `p` with `q u p` in the
    /// complex. The empty face is included, so the link of a facet is the
    /// irrelevant complex, never the void one.
    pub fn link(&self, p: &Face) -> Result<SRComplex, PosetError> {
        if !self.contains(p) {
            return Err(PosetError::NotAFace(p.label(self.n)));
        }
        let faces = self
            .faces
            .iter()
            .filter(|q| q.intersect(p).is_empty() && self.contains(&q.union(p)))
            .copied()
            .collect();
        Ok(SRComplex { n: self.n, faces })
    }

    /// Every downward-closed family on `{1..n}`, exactly once, void complex
    /// included, ordered by the bitmask-of-faces encoding.
    pub fn enumerate_all(n: usize) -> Result<Vec<SRComplex>, PosetError> {
        const LIMIT: usize = 4;
        if n > LIMIT {
            return Err(PosetError::EnumerationTooLarge(LIMIT, n));
        }
        let face_total = 1usize << n;
        let mut out = Vec::new();
        'candidates: for mask in 0u32..(1u32 << face_total) {
            for f in 0..face_total {
                if mask >> f & 1 == 1 {
                    // every one-element-smaller subset must be present
                    let mut rem = f;
                    while rem != 0 {
                        let low = rem & rem.wrapping_neg();
                        if mask >> (f & !low) & 1 == 0 {
                            continue 'candidates;
                        }
                        rem &= !low;
                    }
                }
            }
            let faces = (0..face_total)
                .filter(|&f| mask >> f & 1 == 1)
                .map(|f| Face::from_bits(f as u16))
                .collect();
            out.push(SRComplex { n, faces });
        }
        Ok(out)
    }
}

/// An element of `Z^n`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multidegree(Vec<i64>);

impl Multidegree {
    pub fn new(coords: Vec<i64>) -> Self {
        Multidegree(coords)
    }

    pub fn zero(n: usize) -> Self {
        Multidegree(vec![0; n])
    }

    /// Coordinate `l` on the vertices of `p`, zero elsewhere.
    pub fn shift_vector(l: i64, p: &Face, n: usize) -> Self {
        Multidegree((1..=n).map(|v| if p.contains(v) { l } else { 0 }).collect())
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn get(&self, vertex: usize) -> i64 {
        self.0[vertex - 1]
    }

    pub fn pos_support(&self) -> Face {
        let mut bits = 0u16;
        for (i, &c) in self.0.iter().enumerate() {
            if c > 0 {
                bits |= 1 << i;
            }
        }
        Face::from_bits(bits)
    }

    pub fn neg_support(&self) -> Face {
        let mut bits = 0u16;
        for (i, &c) in self.0.iter().enumerate() {
            if c < 0 {
                bits |= 1 << i;
            }
        }
        Face::from_bits(bits)
    }

    pub fn is_nonneg(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    pub fn support(&self) -> Face {
        let mut bits = 0u16;
        for (i, &c) in self.0.iter().enumerate() {
            if c != 0 {
                bits |= 1 << i;
            }
        }
        Face::from_bits(bits)
    }

    pub fn plus(&self, other: &Multidegree) -> Multidegree {
        Multidegree(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn plus_unit(&self, vertex: usize) -> Multidegree {
        let mut c = self.0.clone();
        c[vertex - 1] += 1;
        Multidegree(c)
    }

    pub fn label(&self) -> String {
        let cs: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        format!("({})", cs.join(","))
    }
}

/// A finite product of per-coordinate integer ranges, iterated in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeWindow {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl DegreeWindow {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "window bounds must have equal length");
        DegreeWindow { lo, hi }
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: i64, hi: i64) -> Self {
        DegreeWindow { lo: vec![lo; n], hi: vec![hi; n] }
    }

    pub fn n(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn contains(&self, a: &Multidegree) -> bool {
        a.coords().iter().zip(self.lo.iter().zip(&self.hi)).all(|(&c, (&l, &h))| l <= c && c <= h)
    }

    /// All lattice points, lexicographic from `lo`.
    pub fn iter(&self) -> impl Iterator<Item = Multidegree> + '_ {
        let n = self.n();
        let mut cur = self.lo.clone();
        let mut done = self.lo.iter().zip(&self.hi).any(|(l, h)| l > h);
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = Multidegree::new(cur.clone());
            // odometer increment from the last coordinate
            let mut k = n;
            loop {
                if k == 0 {
                    done = true;
                    break;
                }
                k -= 1;
                if cur[k] < self.hi[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = self.lo[k];
            }
            if n == 0 {
                done = true;
            }
            Some(out)
        })
    }
}

/// Strictly increasing chains in a sub-poset, grouped by length and listed in
/// lexicographic bitmask order.
#[derive(Debug, Clone)]
pub struct ChainList {
    /// `by_len[k]` holds the chains with `k + 1` elements.
    pub by_len: Vec<Vec<Vec<Face>>>,
}

/// Enumerate the chains of the sub-poset selected by `member`, on `{1..n}`.
/// Chains are sequences `p_0 < p_1 < ... < p_k` of member faces; the listing
/// per length is lexicographic in the bitmask sequence.
pub fn enumerate_chains(n: usize, member: impl Fn(&Face) -> bool) -> ChainList {
    let faces: Vec<Face> =
        (0..1u32 << n).map(|b| Face::from_bits(b as u16)).filter(|f| member(f)).collect();
    let mut supersets: Vec<Vec<usize>> = vec![Vec::new(); faces.len()];
    for (i, f) in faces.iter().enumerate() {
        for (j, g) in faces.iter().enumerate() {
            if f != g && f.subset_of(g) {
                supersets[i].push(j);
            }
        }
    }
    let mut by_len: Vec<Vec<Vec<usize>>> = Vec::new();
    by_len.push((0..faces.len()).map(|i| vec![i]).collect());
    loop {
        let last = by_len.last().unwrap();
        let mut next = Vec::new();
        for chain in last {
            let top = *chain.last().unwrap();
            for &ext in &supersets[top] {
                let mut c = chain.clone();
                c.push(ext);
                next.push(c);
            }
        }
        if next.is_empty() {
            break;
        }
        by_len.push(next);
    }
    ChainList {
        by_len: by_len
            .into_iter()
            .map(|level| {
                level.into_iter().map(|c| c.into_iter().map(|i| faces[i]).collect()).collect()
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn face(vs: &[usize], n: usize) -> Face {
        Face::from_vertices(vs, n).unwrap()
    }

    #[test]
    fn triangle_boundary_has_seven_faces() {
        let k = SRComplex::triangle_boundary();
        assert_eq!(k.face_count(), 7);
        assert!(k.contains(&Face::empty()));
        assert!(!k.contains(&face(&[1, 2, 3], 3)));
    }

    #[test]
    fn full_simplex_has_all_subsets() {
        let k = SRComplex::full_simplex(3);
        assert_eq!(k.face_count(), 8);
    }

    #[test]
    fn redundant_facets_are_tolerated() {
        let k = SRComplex::from_facets(2, &[face(&[1], 2), face(&[1, 2], 2)]).unwrap();
        assert_eq!(k.face_count(), 4);
    }

    #[test]
    fn facet_out_of_range_is_rejected() {
        let err = SRComplex::from_facets(2, &[face(&[1, 3], 3)]).unwrap_err();
        assert!(matches!(err, PosetError::VertexOutOfRange(3, 2)));
    }

    #[test]
    fn link_of_vertex_in_triangle_boundary() {
        let k = SRComplex::triangle_boundary();
        let l = k.link(&face(&[1], 3)).unwrap();
        let expected: BTreeSet<Face> =
            [Face::empty(), face(&[2], 3), face(&[3], 3)].into_iter().collect();
        assert_eq!(l.faces().copied().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn link_of_edge_is_irrelevant() {
        let k = SRComplex::triangle_boundary();
        let l = k.link(&face(&[1, 2], 3)).unwrap();
        assert_eq!(l, SRComplex::irrelevant(3));
    }

    #[test]
    fn link_of_empty_face_is_the_complex() {
        let k = SRComplex::triangle_boundary();
        assert_eq!(k.link(&Face::empty()).unwrap(), k);
    }

    #[test]
    fn link_outside_complex_errors() {
        let k = SRComplex::triangle_boundary();
        assert!(k.link(&face(&[1, 2, 3], 3)).is_err());
    }

    #[test]
    fn link_size_counts_cofaces() {
        for k in SRComplex::enumerate_all(4).unwrap() {
            for p in k.faces().copied().collect::<Vec<_>>() {
                let link = k.link(&p).unwrap();
                let cofaces = k.faces().filter(|x| p.subset_of(x)).count();
                assert_eq!(link.face_count(), cofaces);
                assert!(link.is_downward_closed());
            }
        }
    }

    #[test]
    fn shift_vector_examples() {
        let p = face(&[1, 3], 3);
        assert_eq!(Multidegree::shift_vector(2, &p, 3).coords(), &[2, 0, 2]);
        assert_eq!(Multidegree::shift_vector(1, &Face::empty(), 3).coords(), &[0, 0, 0]);
        assert_eq!(Multidegree::shift_vector(0, &p, 3).coords(), &[0, 0, 0]);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(SRComplex::enumerate_all(0).unwrap().len(), 2);
        assert_eq!(SRComplex::enumerate_all(1).unwrap().len(), 3);
        assert_eq!(SRComplex::enumerate_all(2).unwrap().len(), 6);
        assert_eq!(SRComplex::enumerate_all(3).unwrap().len(), 20);
        assert_eq!(SRComplex::enumerate_all(4).unwrap().len(), 168);
        assert!(SRComplex::enumerate_all(5).is_err());
    }

    /// Independent oracle: complexes on n vertices are in bijection with
    /// antichains (their facet sets).
    #[test]
    fn enumeration_matches_antichain_count() {
        for n in 0..=4usize {
            let face_total = 1usize << n;
            let mut antichains = 0usize;
            'outer: for mask in 0u32..(1u32 << face_total) {
                let picked: Vec<usize> = (0..face_total).filter(|&f| mask >> f & 1 == 1).collect();
                for (ai, &a) in picked.iter().enumerate() {
                    for &b in &picked[ai + 1..] {
                        if a & b == a || a & b == b {
                            continue 'outer;
                        }
                    }
                }
                antichains += 1;
            }
            assert_eq!(SRComplex::enumerate_all(n).unwrap().len(), antichains);
        }
    }

    #[test]
    fn downward_closure_is_preserved() {
        for k in SRComplex::enumerate_all(3).unwrap() {
            assert!(k.is_downward_closed());
        }
    }

    #[test]
    fn rp2_has_the_right_face_vector() {
        let k = SRComplex::projective_plane_6();
        let count_card = |c: usize| k.faces().filter(|f| f.cardinality() == c).count();
        assert_eq!(count_card(0), 1);
        assert_eq!(count_card(1), 6);
        assert_eq!(count_card(2), 15);
        assert_eq!(count_card(3), 10);
        // closed surface: every edge lies in exactly two triangles
        for e in k.faces().filter(|f| f.cardinality() == 2) {
            let tris = k.faces().filter(|t| t.cardinality() == 3 && e.subset_of(t)).count();
            assert_eq!(tris, 2, "edge {} must bound two triangles", e.label(6));
        }
    }

    #[test]
    fn chain_enumeration_on_the_square() {
        let chains = enumerate_chains(2, |_| true);
        assert_eq!(chains.by_len[0].len(), 4);
        assert_eq!(chains.by_len[1].len(), 5);
        assert_eq!(chains.by_len[2].len(), 2);
        assert_eq!(chains.by_len.len(), 3);
        // lexicographic: the first two-element chain starts at the empty face
        assert_eq!(chains.by_len[1][0], vec![Face::empty(), Face::from_bits(1)]);
    }

    #[test]
    fn subsets_are_sorted_and_complete() {
        let f = face(&[1, 3], 4);
        let subs = f.subsets();
        assert_eq!(subs.len(), 4);
        assert!(subs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn window_iteration() {
        let w = DegreeWindow::cube(2, -1, 1);
        let pts: Vec<_> = w.iter().collect();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0].coords(), &[-1, -1]);
        assert_eq!(pts[8].coords(), &[1, 1]);
        assert!(pts.windows(2).all(|p| p[0] < p[1]));
        // the empty product has exactly one point
        let w0 = DegreeWindow::cube(0, -3, 1);
        assert_eq!(w0.iter().count(), 1);
    }
}
