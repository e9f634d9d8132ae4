//! Sheaves of finite free modules on the poset of subsets of `{1..n}`.
//!
//! A sheaf is a stalk rank per face plus a restriction matrix on every
//! covering relation; validation enforces that all covering squares commute.
//! Sections over a sub-poset are computed by the ordered-chain cochain
//! complex, and cohomology with supports at a point is the shifted mapping
//! cone of the restriction to the punctured sub-poset.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::cube_poset::{enumerate_chains, Face, SRComplex, MAX_VERTICES};
use crate::exactlin::{CochainComplex, CoefficientRing, ExactMatrix, ModuleSummary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SheafError {
    #[error("vertex bound {0} exceeds the supported maximum {MAX_VERTICES}")]
    TooManyVertices(usize),
    #[error("restriction at ({face}, +{vertex}) has shape {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    ShapeMismatch {
        face: String,
        vertex: usize,
        want_rows: usize,
        want_cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("missing restriction between positive-rank stalks at ({face}, +{vertex})")]
    MissingRestriction { face: String, vertex: usize },
    #[error("restriction square at {face} with vertices {i}, {j} does not commute")]
    NonCommutingSquare { face: String, i: usize, j: usize },
    #[error("restriction at ({face}, +{vertex}) is over {got}, sheaf is over {want}")]
    RingMismatch { face: String, vertex: usize, want: String, got: String },
    #[error("box product factors must live on one vertex")]
    BadBoxFactor,
    #[error("box product factors must share a coefficient ring")]
    MixedRings,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecomposeError {
    #[error("not injective: witness stalk at {label}: {detail}")]
    NotInjective { witness: Face, label: String, detail: String },
    #[error("injective decomposition requires field coefficients")]
    UnsupportedRing,
}

/// Carrier of a supported constant sheaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Carrier {
    /// Closure of a face: all subsets of it.
    Closed(Face),
    /// Smallest open set containing a face: all supersets of it.
    Open(Face),
    /// A single face.
    Point(Face),
    /// A downward-closed family.
    Subcomplex(SRComplex),
}

impl Carrier {
    fn contains(&self, f: &Face) -> bool {
        match self {
            Carrier::Closed(p) => f.subset_of(p),
            Carrier::Open(p) => p.subset_of(f),
            Carrier::Point(p) => f == p,
            Carrier::Subcomplex(k) => k.contains(f),
        }
    }
}

/// A constant sheaf of a given multiplicity on a carrier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportedConstant {
    pub carrier: Carrier,
    pub multiplicity: usize,
}

type ConeCache = RwLock<BTreeMap<(u16, u16), Arc<Vec<ModuleSummary>>>>;

/// A sheaf of finite free modules on the subset poset of `{1..n}`.
#[derive(Debug)]
pub struct Sheaf {
    n: usize,
    ring: CoefficientRing,
    stalks: Vec<usize>,
    /// restriction on the covering relation `p -> p + v`, keyed `(bits, v)`
    restr: BTreeMap<(u16, usize), ExactMatrix>,
    cone_cache: ConeCache,
}

impl Clone for Sheaf {
    fn clone(&self) -> Self {
        Sheaf {
            n: self.n,
            ring: self.ring,
            stalks: self.stalks.clone(),
            restr: self.restr.clone(),
            cone_cache: RwLock::new(BTreeMap::new()),
        }
    }
}

impl PartialEq for Sheaf {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.ring == other.ring
            && self.stalks == other.stalks
            && self.restr == other.restr
    }
}

impl Sheaf {
    /// Validated construction. Restrictions between stalks where either side
    /// has rank zero may be omitted; all covering squares must commute.
    pub fn new(
        n: usize,
        ring: CoefficientRing,
        stalk_ranks: &BTreeMap<Face, usize>,
        restrictions: &BTreeMap<(Face, usize), ExactMatrix>,
    ) -> Result<Self, SheafError> {
        if n > MAX_VERTICES {
            return Err(SheafError::TooManyVertices(n));
        }
        let mut stalks = vec![0usize; 1 << n];
        for (f, &r) in stalk_ranks {
            stalks[f.bits() as usize] = r;
        }
        let mut restr = BTreeMap::new();
        for p_bits in 0..(1u32 << n) {
            let p = Face::from_bits(p_bits as u16);
            for v in 1..=n {
                if p.contains(v) {
                    continue;
                }
                let q = p.with(v);
                let rows = stalks[q.bits() as usize];
                let cols = stalks[p_bits as usize];
                match restrictions.get(&(p, v)) {
                    Some(m) => {
                        if m.ring() != ring {
                            return Err(SheafError::RingMismatch {
                                face: p.label(n),
                                vertex: v,
                                want: ring.to_string(),
                                got: m.ring().to_string(),
                            });
                        }
                        if m.rows() != rows || m.cols() != cols {
                            return Err(SheafError::ShapeMismatch {
                                face: p.label(n),
                                vertex: v,
                                want_rows: rows,
                                want_cols: cols,
                                got_rows: m.rows(),
                                got_cols: m.cols(),
                            });
                        }
                        restr.insert((p.bits(), v), m.clone());
                    }
                    None => {
                        if rows > 0 && cols > 0 {
                            return Err(SheafError::MissingRestriction {
                                face: p.label(n),
                                vertex: v,
                            });
                        }
                        restr.insert((p.bits(), v), ExactMatrix::zeros(ring, rows, cols));
                    }
                }
            }
        }
        let sheaf = Sheaf { n, ring, stalks, restr, cone_cache: RwLock::new(BTreeMap::new()) };
        sheaf.check_squares()?;
        Ok(sheaf)
    }

    fn check_squares(&self) -> Result<(), SheafError> {
        for p_bits in 0..(1u32 << self.n) {
            let p = Face::from_bits(p_bits as u16);
            for i in 1..=self.n {
                if p.contains(i) {
                    continue;
                }
                for j in i + 1..=self.n {
                    if p.contains(j) {
                        continue;
                    }
                    let via_i = self.step(&p.with(i), j).mul(self.step(&p, i));
                    let via_j = self.step(&p.with(j), i).mul(self.step(&p, j));
                    if via_i != via_j {
                        return Err(SheafError::NonCommutingSquare {
                            face: p.label(self.n),
                            i,
                            j,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ring(&self) -> CoefficientRing {
        self.ring
    }

    pub fn stalk_rank(&self, f: &Face) -> usize {
        self.stalks[f.bits() as usize]
    }

    /// Restriction on the covering relation `p -> p + v`.
    pub fn step(&self, p: &Face, v: usize) -> &ExactMatrix {
        self.restr.get(&(p.bits(), v)).expect("covering restriction is materialized")
    }

    /// Restriction `F_p -> F_q` for `p` a subset of `q`, composed along the
    /// chain that adds the missing vertices in increasing order (the
    /// lexicographically smallest increasing chain; commutativity makes any
    /// chain agree).
    pub fn restriction(&self, p: &Face, q: &Face) -> ExactMatrix {
        assert!(p.subset_of(q), "restriction needs p <= q");
        let mut cur = ExactMatrix::identity(self.ring, self.stalk_rank(p));
        let mut at = *p;
        for v in 1..=self.n {
            if q.contains(v) && !at.contains(v) {
                cur = self.step(&at, v).mul(&cur);
                at = at.with(v);
            }
        }
        cur
    }

    /// Faces with nonzero stalk.
    pub fn support(&self) -> Vec<Face> {
        (0..(1u32 << self.n))
            .map(|b| Face::from_bits(b as u16))
            .filter(|f| self.stalk_rank(f) > 0)
            .collect()
    }

    /// Whether every stalk above `p` (inside the avoid-constraint) vanishes.
    fn vanishes_above(&self, p: &Face, avoid: &Face) -> bool {
        (0..(1u32 << self.n)).map(|b| Face::from_bits(b as u16)).all(|u| {
            !(p.subset_of(&u) && u.intersect(avoid).is_empty() && self.stalk_rank(&u) > 0)
        })
    }

    /// Constant sheaf of the given multiplicity on a carrier: identity
    /// restrictions inside the carrier, zero outside.
    pub fn constant(spec: &SupportedConstant, ring: CoefficientRing, n: usize) -> Sheaf {
        let mut stalk_ranks = BTreeMap::new();
        let mut restrictions = BTreeMap::new();
        for bits in 0..(1u32 << n) {
            let f = Face::from_bits(bits as u16);
            if spec.carrier.contains(&f) {
                stalk_ranks.insert(f, spec.multiplicity);
            }
        }
        for (&f, &r) in &stalk_ranks {
            for v in 1..=n {
                if f.contains(v) {
                    continue;
                }
                let q = f.with(v);
                if stalk_ranks.contains_key(&q) {
                    restrictions.insert((f, v), ExactMatrix::identity(ring, r));
                }
            }
        }
        Sheaf::new(n, ring, &stalk_ranks, &restrictions).expect("carriers are order-convex")
    }

    /// The constant sheaf on a simplicial complex.
    pub fn constant_on_complex(k: &SRComplex, ring: CoefficientRing) -> Sheaf {
        Sheaf::constant(
            &SupportedConstant { carrier: Carrier::Subcomplex(k.clone()), multiplicity: 1 },
            ring,
            k.n(),
        )
    }

    /// Direct sum of two sheaves on the same poset and ring.
    pub fn direct_sum(&self, other: &Sheaf) -> Sheaf {
        assert_eq!(self.n, other.n);
        assert_eq!(self.ring, other.ring);
        let mut stalk_ranks = BTreeMap::new();
        let mut restrictions = BTreeMap::new();
        for bits in 0..(1u32 << self.n) {
            let f = Face::from_bits(bits as u16);
            let r = self.stalk_rank(&f) + other.stalk_rank(&f);
            if r > 0 {
                stalk_ranks.insert(f, r);
            }
        }
        for bits in 0..(1u32 << self.n) {
            let f = Face::from_bits(bits as u16);
            for v in 1..=self.n {
                if f.contains(v) {
                    continue;
                }
                let a = self.step(&f, v);
                let b = other.step(&f, v);
                let mut m =
                    ExactMatrix::zeros(self.ring, a.rows() + b.rows(), a.cols() + b.cols());
                m.add_block(0, 0, a, 1);
                m.add_block(a.rows(), a.cols(), b, 1);
                restrictions.insert((f, v), m);
            }
        }
        Sheaf::new(self.n, self.ring, &stalk_ranks, &restrictions)
            .expect("direct sums of valid sheaves are valid")
    }

    /// External product of sheaves on the two-point poset: the stalk at
    /// `(p_1, ..., p_n)` is the tensor product of the factor stalks and the
    /// restrictions are tensor products of factor maps with identities.
    pub fn box_product(factors: &[Sheaf]) -> Result<Sheaf, SheafError> {
        let n = factors.len();
        if n > MAX_VERTICES {
            return Err(SheafError::TooManyVertices(n));
        }
        let Some(first) = factors.first() else {
            let mut stalk_ranks = BTreeMap::new();
            stalk_ranks.insert(Face::empty(), 1);
            return Ok(Sheaf::new(0, CoefficientRing::Rationals, &stalk_ranks, &BTreeMap::new())
                .expect("point sheaf"));
        };
        let ring = first.ring;
        for f in factors {
            if f.n != 1 {
                return Err(SheafError::BadBoxFactor);
            }
            if f.ring != ring {
                return Err(SheafError::MixedRings);
            }
        }
        let coord = |f: &Face, i: usize| -> Face {
            if f.contains(i) {
                Face::top(1)
            } else {
                Face::empty()
            }
        };
        let mut stalk_ranks = BTreeMap::new();
        for bits in 0..(1u32 << n) {
            let f = Face::from_bits(bits as u16);
            let r: usize = (1..=n).map(|i| factors[i - 1].stalk_rank(&coord(&f, i))).product();
            if r > 0 {
                stalk_ranks.insert(f, r);
            }
        }
        let mut restrictions = BTreeMap::new();
        for bits in 0..(1u32 << n) {
            let f = Face::from_bits(bits as u16);
            for v in 1..=n {
                if f.contains(v) {
                    continue;
                }
                let mut m = ExactMatrix::identity(ring, 1);
                for i in 1..=n {
                    let factor = &factors[i - 1];
                    let block = if i == v {
                        factor.step(&Face::empty(), 1).clone()
                    } else {
                        ExactMatrix::identity(ring, factor.stalk_rank(&coord(&f, i)))
                    };
                    m = m.kron(&block);
                }
                restrictions.insert((f, v), m);
            }
        }
        Sheaf::new(n, ring, &stalk_ranks, &restrictions)
    }

    // ---- sections and cohomology with supports ---------------------------

    /// Cochain complex of sections over the sub-poset selected by `member`,
    /// indexed by chain length (degree `d` holds chains of `d + 1` faces).
    pub fn sections_complex(&self, member: impl Fn(&Face) -> bool) -> CochainComplex {
        self.sections(member).complex
    }

    pub(crate) fn sections(&self, member: impl Fn(&Face) -> bool) -> SectionsComplex {
        let all = enumerate_chains(self.n, member);
        let degrees = self.n + 1;
        let mut chains: Vec<Vec<Vec<Face>>> = vec![Vec::new(); degrees];
        for (d, level) in all.by_len.into_iter().enumerate() {
            if d >= degrees {
                break;
            }
            chains[d] = level
                .into_iter()
                .filter(|c| self.stalk_rank(c.last().unwrap()) > 0)
                .collect();
        }
        let mut offsets: Vec<Vec<usize>> = Vec::with_capacity(degrees);
        let mut dims: Vec<usize> = Vec::with_capacity(degrees);
        for level in &chains {
            let mut offs = Vec::with_capacity(level.len());
            let mut total = 0usize;
            for c in level {
                offs.push(total);
                total += self.stalk_rank(c.last().unwrap());
            }
            offsets.push(offs);
            dims.push(total);
        }
        let mut maps = Vec::with_capacity(degrees - 1);
        for d in 0..degrees - 1 {
            let mut m = ExactMatrix::zeros(self.ring, dims[d + 1], dims[d]);
            for (ti, t) in chains[d + 1].iter().enumerate() {
                let row0 = offsets[d + 1][ti];
                let top = *t.last().unwrap();
                for j in 0..t.len() {
                    let mut s = t.clone();
                    s.remove(j);
                    let sign = if j % 2 == 0 { 1 } else { -1 };
                    let Ok(si) = chains[d].binary_search(&s) else {
                        continue; // source top has a zero stalk
                    };
                    let col0 = offsets[d][si];
                    if j + 1 == t.len() {
                        // dropping the top element applies the restriction
                        let sub_top = *s.last().unwrap();
                        let r = self.restriction(&sub_top, &top);
                        m.add_block(row0, col0, &r, sign);
                    } else {
                        let id = ExactMatrix::identity(self.ring, self.stalk_rank(&top));
                        m.add_block(row0, col0, &id, sign);
                    }
                }
            }
            maps.push(m);
        }
        let complex =
            CochainComplex::new(self.ring, 0, dims, maps).expect("section complexes are valid");
        SectionsComplex { complex, chains, offsets }
    }

    /// Shifted mapping cone computing cohomology supported at `p` of the
    /// sub-poset `{ u : p <= u, u disjoint from avoid }`. With an empty
    /// avoid set this is cohomology with supports at `p` of the open set
    /// `U_p`.
    pub(crate) fn support_cone(&self, p: &Face, avoid: &Face) -> SupportCone {
        let p = *p;
        let avoid = *avoid;
        let on = self.sections(|u| p.subset_of(u) && u.intersect(&avoid).is_empty());
        let off = self.sections(|u| p.subset_of(u) && u.intersect(&avoid).is_empty() && *u != p);
        let cone = mapping_cone_shifted(self, &on, &off);
        SupportCone { cone, on, off }
    }

    /// Cohomology with supports at `p` of `U_p`, cached per point.
    pub fn local_cohomology_at_point(&self, p: &Face, i: i64) -> ModuleSummary {
        self.local_cohomology_with_avoid(p, &Face::empty(), i)
    }

    /// Cohomology supported at `p` of the interval of faces containing `p`
    /// and avoiding `avoid`. Cached; safe for concurrent readers.
    pub fn local_cohomology_with_avoid(&self, p: &Face, avoid: &Face, i: i64) -> ModuleSummary {
        if i < 0 || i > self.n as i64 + 1 {
            return ModuleSummary::zero();
        }
        let key = (p.bits(), avoid.bits());
        if let Some(hit) = self.cone_cache.read().expect("cache lock").get(&key) {
            return hit[i as usize].clone();
        }
        let all: Vec<ModuleSummary> = if self.vanishes_above(p, avoid) {
            vec![ModuleSummary::zero(); self.n + 2]
        } else {
            let cone = self.support_cone(p, avoid).cone;
            (0..=(self.n as i64 + 1)).map(|d| cone.cohomology_at(d)).collect()
        };
        let arc = Arc::new(all);
        let out = arc[i as usize].clone();
        self.cone_cache.write().expect("cache lock").insert(key, arc);
        out
    }

    // ---- injective decomposition -----------------------------------------

    /// Decompose an injective sheaf of vector spaces as a sum of constant
    /// sheaves on closures, returning the multiplicity at each face.
    /// Fails with a witness stalk when the sheaf is not such a sum.
    pub fn decompose_injective(&self) -> Result<BTreeMap<Face, usize>, DecomposeError> {
        if !self.ring.is_field() {
            return Err(DecomposeError::UnsupportedRing);
        }
        let faces: Vec<Face> = (0..(1u32 << self.n)).map(|b| Face::from_bits(b as u16)).collect();

        // sections supported at x: kernel of the map to the covering stalks
        let mut socle: BTreeMap<Face, ExactMatrix> = BTreeMap::new();
        for &x in &faces {
            let rank = self.stalk_rank(&x);
            let covers: Vec<usize> = (1..=self.n).filter(|&v| !x.contains(v)).collect();
            let total: usize = covers.iter().map(|&v| self.stalk_rank(&x.with(v))).sum();
            let mut stacked = ExactMatrix::zeros(self.ring, total, rank);
            let mut row = 0;
            for &v in &covers {
                let m = self.step(&x, v);
                stacked.add_block(row, 0, m, 1);
                row += m.rows();
            }
            socle.insert(x, crate::exactlin::field_kernel_basis(&stacked));
        }

        // stalkwise dimension count
        for &p in &faces {
            let expect: usize =
                faces.iter().filter(|x| p.subset_of(x)).map(|x| socle[x].cols()).sum();
            if expect != self.stalk_rank(&p) {
                return Err(DecomposeError::NotInjective {
                    witness: p,
                    label: p.label(self.n),
                    detail: format!(
                        "stalk dimension {} but supported sections above sum to {}",
                        self.stalk_rank(&p),
                        expect
                    ),
                });
            }
        }

        // lift each socle basis to a compatible family on the closure of x
        let mut lifted: BTreeMap<Face, BTreeMap<Face, ExactMatrix>> = BTreeMap::new();
        for &x in &faces {
            let m_x = socle[&x].cols();
            if m_x == 0 {
                continue;
            }
            let mut family: BTreeMap<Face, ExactMatrix> = BTreeMap::new();
            family.insert(x, socle[&x].clone());
            let mut below: Vec<Face> = x.subsets();
            below.sort_by_key(|f| std::cmp::Reverse(f.cardinality()));
            for p in below {
                if p == x {
                    continue;
                }
                // constraints: restrict to each cover inside the closure of x,
                // vanish on covers leaving it
                let covers: Vec<usize> = (1..=self.n).filter(|&v| !p.contains(v)).collect();
                let total: usize = covers.iter().map(|&v| self.stalk_rank(&p.with(v))).sum();
                let mut a = ExactMatrix::zeros(self.ring, total, self.stalk_rank(&p));
                let mut rhs = ExactMatrix::zeros(self.ring, total, m_x);
                let mut row = 0;
                for &v in &covers {
                    let step = self.step(&p, v);
                    a.add_block(row, 0, step, 1);
                    let q = p.with(v);
                    if q.subset_of(&x) {
                        rhs.add_block(row, 0, &family[&q], 1);
                    }
                    row += step.rows();
                }
                match crate::exactlin::field_solve(&a, &rhs) {
                    Some(sol) => {
                        family.insert(p, sol);
                    }
                    None => {
                        return Err(DecomposeError::NotInjective {
                            witness: p,
                            label: p.label(self.n),
                            detail: format!(
                                "sections supported at {} do not extend over its closure",
                                x.label(self.n)
                            ),
                        })
                    }
                }
            }
            lifted.insert(x, family);
        }

        // the assembled comparison map must be an isomorphism on every stalk
        for &p in &faces {
            let rank = self.stalk_rank(&p);
            let cols: usize =
                faces.iter().filter(|x| p.subset_of(x)).map(|x| socle[x].cols()).sum();
            let mut phi = ExactMatrix::zeros(self.ring, rank, cols);
            let mut col = 0;
            for &x in &faces {
                if !p.subset_of(&x) || socle[&x].cols() == 0 {
                    continue;
                }
                let block = &lifted[&x][&p];
                phi.add_block(0, col, block, 1);
                col += block.cols();
            }
            if phi.rank() != rank {
                return Err(DecomposeError::NotInjective {
                    witness: p,
                    label: p.label(self.n),
                    detail: "assembled comparison map is singular on this stalk".into(),
                });
            }
        }

        Ok(faces
            .into_iter()
            .filter_map(|x| {
                let m = socle[&x].cols();
                (m > 0).then_some((x, m))
            })
            .collect())
    }

    /// Assemble a sum of constant sheaves on closures with the given
    /// multiplicities. The basis at each stalk is ordered by the carrier
    /// face, ascending.
    pub fn from_closure_multiplicities(
        n: usize,
        ring: CoefficientRing,
        mults: &BTreeMap<Face, usize>,
    ) -> Sheaf {
        let carriers: Vec<(Face, usize)> =
            mults.iter().filter(|(_, &m)| m > 0).map(|(f, &m)| (*f, m)).collect();
        let mut stalk_ranks = BTreeMap::new();
        for bits in 0..(1u32 << n) {
            let p = Face::from_bits(bits as u16);
            let r: usize = carriers.iter().filter(|(x, _)| p.subset_of(x)).map(|(_, m)| m).sum();
            if r > 0 {
                stalk_ranks.insert(p, r);
            }
        }
        let mut restrictions = BTreeMap::new();
        for bits in 0..(1u32 << n) {
            let p = Face::from_bits(bits as u16);
            for v in 1..=n {
                if p.contains(v) {
                    continue;
                }
                let q = p.with(v);
                let src: Vec<(Face, usize)> =
                    carriers.iter().filter(|(x, _)| p.subset_of(x)).copied().collect();
                let dst: Vec<(Face, usize)> =
                    carriers.iter().filter(|(x, _)| q.subset_of(x)).copied().collect();
                let rows: usize = dst.iter().map(|(_, m)| m).sum();
                let cols: usize = src.iter().map(|(_, m)| m).sum();
                let mut m = ExactMatrix::zeros(ring, rows, cols);
                let mut row = 0;
                for &(x, mx) in &dst {
                    let mut col = 0;
                    for &(y, my) in &src {
                        if x == y {
                            m.add_block(row, col, &ExactMatrix::identity(ring, mx), 1);
                        }
                        col += my;
                    }
                    row += mx;
                }
                restrictions.insert((p, v), m);
            }
        }
        Sheaf::new(n, ring, &stalk_ranks, &restrictions).expect("closure sums are valid sheaves")
    }

    // ---- pseudo-random sheaves -------------------------------------------

    /// A pseudo-random validated sheaf: a sum of constant sheaves on random
    /// order-convex intervals, conjugated by a random invertible change of
    /// basis at every stalk. Deterministic in the seed.
    pub fn random_gauged(
        n: usize,
        ring: CoefficientRing,
        max_rank: usize,
        pieces: usize,
        seed: u64,
    ) -> Sheaf {
        let mut rng = StdRng::seed_from_u64(seed);
        let top = Face::top(n).bits() as u32;
        // sample interval pieces until the rank cap holds
        let intervals: Vec<(Face, Face)> = loop {
            let candidate: Vec<(Face, Face)> = (0..pieces)
                .map(|_| {
                    let hi = Face::from_bits(rng.gen_range(0..=top) as u16);
                    let lo_subsets = hi.subsets();
                    let lo = lo_subsets[rng.gen_range(0..lo_subsets.len())];
                    (lo, hi)
                })
                .collect();
            let ok = (0..=top).all(|bits| {
                let f = Face::from_bits(bits as u16);
                candidate.iter().filter(|(lo, hi)| lo.subset_of(&f) && f.subset_of(hi)).count()
                    <= max_rank
            });
            if ok {
                break candidate;
            }
        };
        let mut stalk_ranks = BTreeMap::new();
        for bits in 0..=top {
            let f = Face::from_bits(bits as u16);
            let r =
                intervals.iter().filter(|(lo, hi)| lo.subset_of(&f) && f.subset_of(hi)).count();
            if r > 0 {
                stalk_ranks.insert(f, r);
            }
        }
        // gauges: invertible-by-construction change of basis per stalk
        let mut gauges: BTreeMap<Face, (ExactMatrix, ExactMatrix)> = BTreeMap::new();
        for (&f, &r) in &stalk_ranks {
            gauges.insert(f, random_gauge(ring, r, &mut rng));
        }
        let trivial = (ExactMatrix::identity(ring, 0), ExactMatrix::identity(ring, 0));
        let mut restrictions = BTreeMap::new();
        for bits in 0..=top {
            let p = Face::from_bits(bits as u16);
            for v in 1..=n {
                if p.contains(v) {
                    continue;
                }
                let q = p.with(v);
                let src: Vec<usize> = intervals
                    .iter()
                    .enumerate()
                    .filter(|(_, (lo, hi))| lo.subset_of(&p) && p.subset_of(hi))
                    .map(|(i, _)| i)
                    .collect();
                let dst: Vec<usize> = intervals
                    .iter()
                    .enumerate()
                    .filter(|(_, (lo, hi))| lo.subset_of(&q) && q.subset_of(hi))
                    .map(|(i, _)| i)
                    .collect();
                let mut m = ExactMatrix::zeros(ring, dst.len(), src.len());
                for (ri, d) in dst.iter().enumerate() {
                    for (ci, s) in src.iter().enumerate() {
                        if d == s {
                            m.set_i64(ri, ci, 1);
                        }
                    }
                }
                let gq = gauges.get(&q).unwrap_or(&trivial);
                let gp = gauges.get(&p).unwrap_or(&trivial);
                let gauged = gq.0.mul(&m).mul(&gp.1);
                restrictions.insert((p, v), gauged);
            }
        }
        Sheaf::new(n, ring, &stalk_ranks, &restrictions)
            .expect("gauged interval sums are valid sheaves")
    }
}

/// Random invertible matrix together with its exact inverse, built as a
/// product of elementary operations so it stays unimodular over the integers.
fn random_gauge(ring: CoefficientRing, r: usize, rng: &mut StdRng) -> (ExactMatrix, ExactMatrix) {
    let mut g = ExactMatrix::identity(ring, r);
    let mut ginv = ExactMatrix::identity(ring, r);
    if r >= 2 {
        for _ in 0..3 * r {
            let i = rng.gen_range(0..r);
            let mut j = rng.gen_range(0..r);
            while j == i {
                j = rng.gen_range(0..r);
            }
            let c: i64 = rng.gen_range(-2..=2);
            // g := E g, ginv := ginv E^{-1} with E adding c * row_j to row_i
            let mut e = ExactMatrix::identity(ring, r);
            e.set_i64(i, j, c);
            let mut einv = ExactMatrix::identity(ring, r);
            einv.set_i64(i, j, -c);
            g = e.mul(&g);
            ginv = ginv.mul(&einv);
        }
    }
    (g, ginv)
}

/// Sections complex together with its chain indexing, for building chain
/// maps between sub-posets.
#[derive(Debug, Clone)]
pub(crate) struct SectionsComplex {
    pub complex: CochainComplex,
    /// chains of `d + 1` member faces with nonzero top stalk, lexicographic
    chains: Vec<Vec<Vec<Face>>>,
    offsets: Vec<Vec<usize>>,
}

impl SectionsComplex {
    pub fn dim(&self, d: i64) -> usize {
        self.complex.dim(d)
    }

    /// The chain map of cochain restriction onto a smaller sub-poset: the
    /// identity on every chain of the smaller poset.
    pub fn restriction_to(&self, smaller: &SectionsComplex, f: &Sheaf, d: usize) -> ExactMatrix {
        let rows = smaller.complex.dim(d as i64);
        let cols = self.complex.dim(d as i64);
        let mut m = ExactMatrix::zeros(f.ring(), rows, cols);
        for (ti, chain) in smaller.chains[d].iter().enumerate() {
            let si = self.chains[d]
                .binary_search(chain)
                .expect("chains of a sub-poset embed in the larger poset");
            let rank = f.stalk_rank(chain.last().unwrap());
            m.add_block(
                smaller.offsets[d][ti],
                self.offsets[d][si],
                &ExactMatrix::identity(f.ring(), rank),
                1,
            );
        }
        m
    }
}

/// Mapping cone of the restriction `on -> off`, shifted so that term `m` is
/// `on^m + off^(m-1)` with differential `(a, b) -> (d a, -res a - d b)`.
pub(crate) fn mapping_cone_shifted(
    f: &Sheaf,
    on: &SectionsComplex,
    off: &SectionsComplex,
) -> CochainComplex {
    let n = f.n() as i64;
    let degrees = (n + 2) as usize; // 0 ..= n + 1
    let mut dims = Vec::with_capacity(degrees);
    for m in 0..degrees as i64 {
        dims.push(on.dim(m) + off.dim(m - 1));
    }
    let mut maps = Vec::with_capacity(degrees - 1);
    for m in 0..(degrees - 1) as i64 {
        let rows = on.dim(m + 1) + off.dim(m);
        let cols = on.dim(m) + off.dim(m - 1);
        let mut d = ExactMatrix::zeros(f.ring(), rows, cols);
        if let Some(d_on) = on.complex.differential(m) {
            d.add_block(0, 0, d_on, 1);
        }
        if on.dim(m) > 0 && off.dim(m) > 0 {
            let res = on.restriction_to(off, f, m as usize);
            d.add_block(on.dim(m + 1), 0, &res, -1);
        }
        if let Some(d_off) = off.complex.differential(m - 1) {
            d.add_block(on.dim(m + 1), on.dim(m), d_off, -1);
        }
        maps.push(d);
    }
    CochainComplex::new(f.ring(), 0, dims, maps).expect("mapping cones are valid complexes")
}

/// A support cone with access to its two section complexes.
#[derive(Debug)]
pub(crate) struct SupportCone {
    pub cone: CochainComplex,
    pub on: SectionsComplex,
    pub off: SectionsComplex,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> CoefficientRing {
        CoefficientRing::Rationals
    }

    fn face(vs: &[usize], n: usize) -> Face {
        Face::from_vertices(vs, n).unwrap()
    }

    #[test]
    fn constant_on_triangle_boundary() {
        let k = SRComplex::triangle_boundary();
        let f = Sheaf::constant_on_complex(&k, q());
        let ones = (0..8u16).filter(|&b| f.stalk_rank(&Face::from_bits(b)) == 1).count();
        assert_eq!(ones, 7);
        assert_eq!(f.stalk_rank(&Face::top(3)), 0);
    }

    #[test]
    fn skyscraper_at_the_open_point() {
        let f = Sheaf::constant(
            &SupportedConstant { carrier: Carrier::Point(Face::top(2)), multiplicity: 1 },
            q(),
            2,
        );
        assert_eq!(f.stalk_rank(&Face::top(2)), 1);
        assert_eq!(f.stalk_rank(&Face::empty()), 0);
    }

    #[test]
    fn closure_of_a_vertex() {
        let f = Sheaf::constant(
            &SupportedConstant { carrier: Carrier::Closed(face(&[1], 2)), multiplicity: 1 },
            q(),
            2,
        );
        assert_eq!(f.stalk_rank(&Face::empty()), 1);
        assert_eq!(f.stalk_rank(&face(&[1], 2)), 1);
        assert_eq!(f.stalk_rank(&face(&[2], 2)), 0);
        assert_eq!(f.stalk_rank(&Face::top(2)), 0);
    }

    #[test]
    fn non_commuting_square_is_rejected() {
        // ranks 1 everywhere on n = 2; one leg flips a sign
        let mut stalk_ranks = BTreeMap::new();
        for b in 0..4u16 {
            stalk_ranks.insert(Face::from_bits(b), 1usize);
        }
        let one = ExactMatrix::identity(q(), 1);
        let minus = ExactMatrix::from_int_entries(q(), 1, 1, &[-1]);
        let mut restrictions = BTreeMap::new();
        restrictions.insert((Face::empty(), 1), one.clone());
        restrictions.insert((Face::empty(), 2), one.clone());
        restrictions.insert((face(&[1], 2), 2), one.clone());
        restrictions.insert((face(&[2], 2), 1), minus);
        let err = Sheaf::new(2, q(), &stalk_ranks, &restrictions).unwrap_err();
        assert!(matches!(err, SheafError::NonCommutingSquare { .. }));
    }

    #[test]
    fn nonzero_map_through_zero_stalk_is_rejected() {
        // on the square, a route through a rank-zero stalk is the zero map,
        // so the other route must vanish too
        let mut stalk_ranks = BTreeMap::new();
        stalk_ranks.insert(Face::empty(), 1usize);
        stalk_ranks.insert(face(&[1], 2), 1usize);
        stalk_ranks.insert(Face::top(2), 1usize);
        let one = ExactMatrix::identity(q(), 1);
        let mut restrictions = BTreeMap::new();
        restrictions.insert((Face::empty(), 1), one.clone());
        restrictions.insert((face(&[1], 2), 2), one);
        let err = Sheaf::new(2, q(), &stalk_ranks, &restrictions).unwrap_err();
        assert!(matches!(err, SheafError::NonCommutingSquare { .. }));
    }

    #[test]
    fn sections_over_up_set_give_the_stalk() {
        // over U_p the cohomology is the stalk in degree 0 and nothing else
        let k = SRComplex::triangle_boundary();
        let f = Sheaf::constant_on_complex(&k, q());
        for p in (0..8u16).map(Face::from_bits) {
            let c = f.sections_complex(|u| p.subset_of(u));
            assert_eq!(c.cohomology_at(0).free_rank, f.stalk_rank(&p), "H^0 at {}", p.label(3));
            for i in 1..=4 {
                assert!(c.cohomology_at(i).is_zero(), "H^{i} over U_{}", p.label(3));
            }
        }
    }

    #[test]
    fn sections_over_whole_poset_of_constant_sheaf() {
        let f = Sheaf::constant_on_complex(&SRComplex::full_simplex(3), q());
        let c = f.sections_complex(|_| true);
        assert_eq!(c.cohomology_at(0), ModuleSummary::free(1));
        for i in 1..=4 {
            assert!(c.cohomology_at(i).is_zero());
        }
    }

    #[test]
    fn punctured_triangle_boundary_is_a_circle() {
        let k = SRComplex::triangle_boundary();
        let f = Sheaf::constant_on_complex(&k, q());
        let c = f.sections_complex(|u| !u.is_empty());
        assert_eq!(c.cohomology_at(0), ModuleSummary::free(1));
        assert_eq!(c.cohomology_at(1), ModuleSummary::free(1));
        assert!(c.cohomology_at(2).is_zero());
    }

    #[test]
    fn local_cohomology_at_top_of_full_simplex() {
        let f = Sheaf::constant_on_complex(&SRComplex::full_simplex(2), q());
        let top = Face::top(2);
        assert_eq!(f.local_cohomology_at_point(&top, 0), ModuleSummary::free(1));
        for i in 1..=3 {
            assert!(f.local_cohomology_at_point(&top, i).is_zero());
        }
    }

    #[test]
    fn local_cohomology_of_circle_at_empty_face() {
        let k = SRComplex::triangle_boundary();
        let f = Sheaf::constant_on_complex(&k, q());
        for i in 0..=4 {
            let h = f.local_cohomology_at_point(&Face::empty(), i);
            if i == 2 {
                assert_eq!(h, ModuleSummary::free(1));
            } else {
                assert!(h.is_zero(), "H^{i} should vanish");
            }
        }
    }

    #[test]
    fn local_cohomology_outside_the_complex_vanishes() {
        let k = SRComplex::triangle_boundary();
        let f = Sheaf::constant_on_complex(&k, q());
        let p = Face::top(3);
        for i in 0..=4 {
            assert!(f.local_cohomology_at_point(&p, i).is_zero());
        }
    }

    #[test]
    fn support_triangle_rank_identity() {
        // alternating ranks of the three complexes in the support triangle
        let k = SRComplex::triangle_boundary();
        for ring in [q(), CoefficientRing::PrimeField(2)] {
            let f = Sheaf::constant_on_complex(&k, ring);
            for p in (0..8u16).map(Face::from_bits) {
                let mut alt = 0i64;
                for i in 0..=4i64 {
                    let supp = f.local_cohomology_at_point(&p, i).free_rank as i64;
                    let on =
                        f.sections_complex(|u| p.subset_of(u)).cohomology_at(i).free_rank as i64;
                    let off = f
                        .sections_complex(|u| p.subset_of(u) && *u != p)
                        .cohomology_at(i)
                        .free_rank as i64;
                    let sign = if i % 2 == 0 { 1 } else { -1 };
                    alt += sign * (supp - on + off);
                }
                assert_eq!(alt, 0, "triangle defect at {}", p.label(3));
            }
        }
    }

    #[test]
    fn supports_at_edge_with_irrelevant_link() {
        // the link of a facet edge is the irrelevant complex, whose reduced
        // cohomology is k in degree -1; supports therefore sit in degree 0
        let k = SRComplex::triangle_boundary();
        let f = Sheaf::constant_on_complex(&k, q());
        let edge = face(&[1, 2], 3);
        for i in 0..=4 {
            let h = f.local_cohomology_at_point(&edge, i);
            if i == 0 {
                assert_eq!(h, ModuleSummary::free(1));
            } else {
                assert!(h.is_zero());
            }
        }
    }

    #[test]
    fn decompose_recovers_single_closure() {
        let n = 2;
        let p = face(&[1], n);
        let j = Sheaf::constant(
            &SupportedConstant { carrier: Carrier::Closed(p), multiplicity: 1 },
            q(),
            n,
        );
        let m = j.decompose_injective().unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[&p], 1);
    }

    #[test]
    fn zero_restriction_line_is_not_injective() {
        let mut stalk_ranks = BTreeMap::new();
        stalk_ranks.insert(Face::empty(), 1usize);
        stalk_ranks.insert(Face::top(1), 1usize);
        let mut restrictions = BTreeMap::new();
        restrictions.insert((Face::empty(), 1), ExactMatrix::zeros(q(), 1, 1));
        let j = Sheaf::new(1, q(), &stalk_ranks, &restrictions).unwrap();
        let err = j.decompose_injective().unwrap_err();
        assert!(matches!(err, DecomposeError::NotInjective { .. }));
    }

    #[test]
    fn decompose_round_trip_with_closures() {
        let n = 3;
        let mut mults = BTreeMap::new();
        mults.insert(face(&[1, 2], n), 2usize);
        mults.insert(face(&[3], n), 1usize);
        mults.insert(Face::empty(), 1usize);
        let assembled =
            Sheaf::from_closure_multiplicities(n, CoefficientRing::PrimeField(3), &mults);
        let recovered = assembled.decompose_injective().unwrap();
        assert_eq!(recovered, mults);
    }

    #[test]
    fn decompose_rejects_integers() {
        let j = Sheaf::constant_on_complex(&SRComplex::full_simplex(1), CoefficientRing::Integers);
        assert!(matches!(j.decompose_injective(), Err(DecomposeError::UnsupportedRing)));
    }

    #[test]
    fn box_of_skyscrapers_is_skyscraper_at_closed_point() {
        let sky0 = Sheaf::constant(
            &SupportedConstant { carrier: Carrier::Point(Face::empty()), multiplicity: 1 },
            q(),
            1,
        );
        let f = Sheaf::box_product(&[sky0.clone(), sky0]).unwrap();
        for b in 0..4u16 {
            let expect = if b == 0 { 1 } else { 0 };
            assert_eq!(f.stalk_rank(&Face::from_bits(b)), expect);
        }
    }

    #[test]
    fn box_of_constants_is_constant() {
        let k1 = Sheaf::constant_on_complex(&SRComplex::full_simplex(1), q());
        let f = Sheaf::box_product(&[k1.clone(), k1]).unwrap();
        let whole = Sheaf::constant_on_complex(&SRComplex::full_simplex(2), q());
        assert_eq!(f, whole);
    }

    #[test]
    fn box_skyscraper_with_constant_is_hyperplane() {
        let sky0 = Sheaf::constant(
            &SupportedConstant { carrier: Carrier::Point(Face::empty()), multiplicity: 1 },
            q(),
            1,
        );
        let k1 = Sheaf::constant_on_complex(&SRComplex::full_simplex(1), q());
        let f = Sheaf::box_product(&[sky0, k1]).unwrap();
        // constant on the faces avoiding vertex 1
        assert_eq!(f.stalk_rank(&Face::empty()), 1);
        assert_eq!(f.stalk_rank(&face(&[2], 2)), 1);
        assert_eq!(f.stalk_rank(&face(&[1], 2)), 0);
        assert_eq!(f.stalk_rank(&Face::top(2)), 0);
        // and the surviving restriction is the identity
        assert_eq!(f.restriction(&Face::empty(), &face(&[2], 2)), ExactMatrix::identity(q(), 1));
    }

    #[test]
    fn random_gauged_sheaves_validate_and_have_stalk_cohomology() {
        for seed in 0..10u64 {
            let f = Sheaf::random_gauged(3, CoefficientRing::PrimeField(5), 3, 4, seed);
            for p in (0..8u16).map(Face::from_bits) {
                let c = f.sections_complex(|u| p.subset_of(u));
                assert_eq!(c.cohomology_at(0).free_rank, f.stalk_rank(&p));
                for i in 1..=4 {
                    assert!(c.cohomology_at(i).is_zero());
                }
            }
        }
    }

    #[test]
    fn local_cohomology_cache_is_safe_for_concurrent_readers() {
        let k = SRComplex::triangle_boundary();
        let f = Sheaf::constant_on_complex(&k, q());
        let f = &f;
        let answers: Vec<Vec<ModuleSummary>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..4)
                .map(|_| {
                    scope.spawn(move || {
                        (0..8u16)
                            .flat_map(|b| {
                                let p = Face::from_bits(b);
                                (0..=4i64)
                                    .map(move |i| f.local_cohomology_at_point(&p, i))
                                    .collect::<Vec<_>>()
                            })
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for pair in answers.windows(2) {
            assert_eq!(pair[0], pair[1]);
        }
    }

    #[test]
    fn direct_sum_adds_stalks() {
        let k = SRComplex::triangle_boundary();
        let a = Sheaf::constant_on_complex(&k, q());
        let s = a.direct_sum(&a);
        assert_eq!(s.stalk_rank(&Face::empty()), 2);
        assert_eq!(s.stalk_rank(&Face::top(3)), 0);
    }
}
