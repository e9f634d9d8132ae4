//! Exact computation of multigraded local cohomology and Ext modules of
//! squarefree modules, viewed as sheaves on the Boolean poset, together with
//! brute-force Cech/Koszul oracles that recompute the same invariants from
//! first principles.
//!
//! The crate is organised in layers:
//!
//! * [`exactlin`] — exact scalars (rationals, prime fields, integers), dense
//!   matrices, Smith normal form, and cohomology of cochain complexes;
//! * [`cube_poset`] — faces, simplicial complexes and multidegrees on the
//!   poset of subsets of `{1..n}`;
//! * [`sheaf`] — sheaves of finite free modules on that poset, sections
//!   complexes and cohomology with supports;
//! * [`squarefree`] — the bridge between sheaves and multigraded modules;
//! * [`hochster`] — closed-form evaluators for local cohomology, Hilbert
//!   series, Ext and the module-structure maps;
//! * [`oracle`] — independent Cech and Koszul recomputations;
//! * [`cli`] — the command-line front end and verification sweeps.

pub mod cli;
pub mod cube_poset;
pub mod exactlin;
pub mod hochster;
pub mod oracle;
pub mod sheaf;
pub mod squarefree;
