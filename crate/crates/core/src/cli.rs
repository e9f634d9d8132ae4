//! Command-line front end: input parsing, formula and oracle tables, and the
//! verification sweeps that compare the two sides degree by degree.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use thiserror::Error;

use crate::cube_poset::{DegreeWindow, Face, Multidegree, PosetError, SRComplex};
use crate::exactlin::{CoefficientRing, ExactMatrix, LinError, ModuleSummary};
use crate::hochster::{ext_formula, hilbert_series, lc_formula, lc_mult_map};
use crate::oracle::{cech_local_cohomology, cech_mult_rank, koszul_ext, koszul_piece};
use crate::sheaf::{DecomposeError, Sheaf, SheafError};
use crate::squarefree::{check_prop_a, check_prop_b};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}: {msg}")]
    Input { path: String, msg: String },
    #[error("{0}")]
    Flag(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("io error on {path}: {err}")]
    Io { path: String, err: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Capacity(_) => EXIT_CAPACITY,
            _ => EXIT_INPUT,
        }
    }
}

impl From<PosetError> for CliError {
    fn from(e: PosetError) -> Self {
        match e {
            PosetError::EnumerationTooLarge(..) | PosetError::TooManyVertices(_) => {
                CliError::Capacity(e.to_string())
            }
            other => CliError::Flag(other.to_string()),
        }
    }
}

impl From<LinError> for CliError {
    fn from(e: LinError) -> Self {
        CliError::Flag(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Tsv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "tsv" => Ok(OutputFormat::Tsv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Flag(format!("unknown format {other:?} (tsv or json)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Lc,
    Ext,
    Series,
    OracleLc,
    OracleExt,
    VerifyLc,
    VerifyExt,
    VerifyProps,
    VerifyMulti,
    DecomposeInjective,
    Enumerate,
}

/// Which verify sweep `enumerate` fans complexes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnumerateCheck {
    Lc,
    Ext,
    Multi,
}

impl EnumerateCheck {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "lc" => Ok(EnumerateCheck::Lc),
            "ext" => Ok(EnumerateCheck::Ext),
            "multi" => Ok(EnumerateCheck::Multi),
            other => Err(CliError::Flag(format!("unknown check {other:?} (lc, ext or multi)"))),
        }
    }
}

/// A fully resolved job. Window bounds are kept as a per-coordinate spec and
/// stretched to the vertex count once the input is known.
#[derive(Debug, Clone)]
pub struct JobConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub coeff: CoefficientRing,
    pub window: Option<Vec<(i64, i64)>>,
    pub index: Option<i64>,
    pub l: i64,
    pub format: OutputFormat,
    pub jobs: usize,
    pub n: Option<usize>,
    pub check: EnumerateCheck,
}

impl JobConfig {
    pub fn new(command: Command) -> Self {
        JobConfig {
            command,
            input: None,
            coeff: CoefficientRing::Rationals,
            window: None,
            index: None,
            l: 1,
            format: OutputFormat::Tsv,
            jobs: 1,
            n: None,
            check: EnumerateCheck::Lc,
        }
    }
}

/// Parse the window flag: `lo..hi` for all coordinates, or a comma-separated
/// per-coordinate list.
pub fn parse_window_spec(s: &str) -> Result<Vec<(i64, i64)>, CliError> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let Some((lo, hi)) = part.split_once("..") else {
            return Err(CliError::Flag(format!("window part {part:?} is not lo..hi")));
        };
        let lo: i64 =
            lo.trim().parse().map_err(|_| CliError::Flag(format!("bad window bound {lo:?}")))?;
        let hi: i64 =
            hi.trim().parse().map_err(|_| CliError::Flag(format!("bad window bound {hi:?}")))?;
        if lo > hi {
            return Err(CliError::Flag(format!("window part {part:?} has lo > hi")));
        }
        out.push((lo, hi));
    }
    Ok(out)
}

fn resolve_window(
    spec: &Option<Vec<(i64, i64)>>,
    n: usize,
    default_lo: i64,
    default_hi: i64,
) -> Result<DegreeWindow, CliError> {
    match spec {
        None => Ok(DegreeWindow::cube(n, default_lo, default_hi)),
        Some(parts) if parts.len() == 1 => Ok(DegreeWindow::cube(n, parts[0].0, parts[0].1)),
        Some(parts) if parts.len() == n => {
            let lo = parts.iter().map(|p| p.0).collect();
            let hi = parts.iter().map(|p| p.1).collect();
            Ok(DegreeWindow::new(lo, hi))
        }
        Some(parts) => Err(CliError::Flag(format!(
            "window has {} parts but the input lives on {} vertices",
            parts.len(),
            n
        ))),
    }
}

// ---- input files -------------------------------------------------------------

/// Facet file: one facet per line as whitespace-separated 1-based vertex
/// indices; blank lines and `#` comments ignored; optional `n=<count>`
/// header (otherwise the vertex bound is the largest index seen).
pub fn parse_complex_file(path: &Path) -> Result<SRComplex, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), err: e.to_string() })?;
    parse_complex_text(&text, &path.display().to_string())
}

pub fn parse_complex_text(text: &str, path: &str) -> Result<SRComplex, CliError> {
    let mut declared_n: Option<usize> = None;
    let mut facet_rows: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut max_vertex = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("n=") {
            declared_n = Some(rest.trim().parse().map_err(|_| CliError::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("bad vertex bound {rest:?}"),
            })?);
            continue;
        }
        let mut verts = Vec::new();
        for tok in line.split_whitespace() {
            let v: usize = tok.parse().map_err(|_| CliError::Parse {
                path: path.into(),
                line: lineno + 1,
                msg: format!("bad vertex index {tok:?}"),
            })?;
            if v == 0 {
                return Err(CliError::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: "vertex indices are 1-based".into(),
                });
            }
            max_vertex = max_vertex.max(v);
            verts.push(v);
        }
        facet_rows.push((lineno + 1, verts));
    }
    let n = declared_n.unwrap_or(max_vertex);
    let mut facets = Vec::new();
    for (lineno, verts) in facet_rows {
        let f = Face::from_vertices(&verts, n).map_err(|e| CliError::Parse {
            path: path.into(),
            line: lineno,
            msg: e.to_string(),
        })?;
        facets.push(f);
    }
    SRComplex::from_facets(n, &facets).map_err(|e| CliError::Input {
        path: path.into(),
        msg: e.to_string(),
    })
}

/// Sheaf file: a JSON object with fields `n`, `coeff`, `stalks` (face label
/// to rank, the empty string labelling the empty face) and `restrictions`
/// (`"<face> + <vertex>"` to a row-major integer matrix). Missing faces mean
/// rank zero; a missing restriction between positive-rank stalks is a
/// validation error.
pub fn parse_sheaf_file(path: &Path) -> Result<Sheaf, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), err: e.to_string() })?;
    parse_sheaf_text(&text, &path.display().to_string())
}

pub fn parse_sheaf_text(text: &str, path: &str) -> Result<Sheaf, CliError> {
    let bad = |msg: String| CliError::Input { path: path.into(), msg };
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| bad(format!("invalid json: {e}")))?;
    let obj = v.as_object().ok_or_else(|| bad("top level must be an object".into()))?;
    let n = obj
        .get("n")
        .and_then(|x| x.as_u64())
        .ok_or_else(|| bad("missing or non-integer field n".into()))? as usize;
    let coeff_str = obj
        .get("coeff")
        .and_then(|x| x.as_str())
        .ok_or_else(|| bad("missing field coeff".into()))?;
    let ring = CoefficientRing::parse(coeff_str).map_err(|e| bad(e.to_string()))?;

    let parse_face = |s: &str| -> Result<Face, CliError> {
        let verts: Result<Vec<usize>, _> =
            s.split_whitespace().map(|t| t.parse::<usize>()).collect();
        let verts = verts.map_err(|_| bad(format!("bad face label {s:?}")))?;
        Face::from_vertices(&verts, n).map_err(|e| bad(format!("face {s:?}: {e}")))
    };

    let mut stalk_ranks = BTreeMap::new();
    if let Some(stalks) = obj.get("stalks") {
        let stalks =
            stalks.as_object().ok_or_else(|| bad("stalks must be an object".into()))?;
        for (key, val) in stalks {
            let rank = val
                .as_u64()
                .ok_or_else(|| bad(format!("stalk rank at {key:?} must be an integer")))?;
            stalk_ranks.insert(parse_face(key)?, rank as usize);
        }
    }

    let mut restrictions = BTreeMap::new();
    if let Some(restr) = obj.get("restrictions") {
        let restr =
            restr.as_object().ok_or_else(|| bad("restrictions must be an object".into()))?;
        for (key, val) in restr {
            let Some((face_part, vertex_part)) = key.rsplit_once('+') else {
                return Err(bad(format!(
                    "restriction key {key:?} must look like \"<face> + <vertex>\""
                )));
            };
            let face = parse_face(face_part.trim())?;
            let vertex: usize = vertex_part
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad added vertex in key {key:?}")))?;
            if vertex == 0 || vertex > n {
                return Err(bad(format!("added vertex {vertex} out of range 1..={n} in {key:?}")));
            }
            if face.contains(vertex) {
                return Err(bad(format!("added vertex {vertex} already lies in the face in {key:?}")));
            }
            let entries = val
                .as_array()
                .ok_or_else(|| bad(format!("matrix at {key:?} must be an array")))?;
            let ints: Result<Vec<i64>, _> = entries
                .iter()
                .map(|e| e.as_i64().ok_or_else(|| bad(format!("non-integer entry at {key:?}"))))
                .collect();
            let ints = ints?;
            let rows = stalk_ranks.get(&face.with(vertex)).copied().unwrap_or(0);
            let cols = stalk_ranks.get(&face).copied().unwrap_or(0);
            if ints.len() != rows * cols {
                return Err(bad(format!(
                    "matrix at {key:?} has {} entries, expected {}x{}",
                    ints.len(),
                    rows,
                    cols
                )));
            }
            restrictions.insert((face, vertex), ExactMatrix::from_int_entries(ring, rows, cols, &ints));
        }
    }

    Sheaf::new(n, ring, &stalk_ranks, &restrictions).map_err(|e| match e {
        SheafError::TooManyVertices(k) => CliError::Capacity(format!("{k} vertices")),
        other => CliError::Input { path: path.into(), msg: other.to_string() },
    })
}

/// Load an input file, sniffing the format: JSON objects are sheaf files,
/// everything else is a facet list turned into a constant sheaf.
pub fn load_input(path: &Path, ring: CoefficientRing) -> Result<(Sheaf, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), err: e.to_string() })?;
    let name = path.display().to_string();
    if text.trim_start().starts_with('{') {
        Ok((parse_sheaf_text(&text, &name)?, name))
    } else {
        let k = parse_complex_text(&text, &name)?;
        Ok((Sheaf::constant_on_complex(&k, ring), name))
    }
}

// ---- verification sweeps -------------------------------------------------------

/// A single disagreement between the decomposed formula and the brute-force
/// oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub context: String,
    pub l: Option<i64>,
    pub i: i64,
    pub alpha: Vec<i64>,
    pub j: Option<usize>,
    pub formula: String,
    pub oracle: String,
}

impl Mismatch {
    fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Tsv => {
                let l = self.l.map(|l| format!("\tl={l}")).unwrap_or_default();
                let j = self.j.map(|j| format!("\tj={j}")).unwrap_or_default();
                format!(
                    "mismatch\t{}{}\ti={}\talpha=({}){}\tformula={}\toracle={}",
                    self.context,
                    l,
                    self.i,
                    self.alpha.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
                    j,
                    self.formula,
                    self.oracle
                )
            }
            OutputFormat::Json => serde_json::json!({
                "mismatch": {
                    "context": self.context,
                    "l": self.l,
                    "i": self.i,
                    "alpha": self.alpha,
                    "j": self.j,
                    "formula": self.formula,
                    "oracle": self.oracle,
                }
            })
            .to_string(),
        }
    }
}

/// Compare the local cohomology formula against the Cech oracle over a
/// window. Oracle pieces depend on the degree only through its sign pattern,
/// so they are evaluated once per pattern.
pub fn verify_lc_sweep(
    f: &Sheaf,
    context: &str,
    window: &DegreeWindow,
    indices: &[i64],
) -> Vec<Mismatch> {
    let mut oracle_memo: HashMap<(u16, u16), Vec<ModuleSummary>> = HashMap::new();
    let mut out = Vec::new();
    for alpha in window.iter() {
        let key = (alpha.pos_support().bits(), alpha.neg_support().bits());
        let per_i = oracle_memo.entry(key).or_insert_with(|| {
            let piece = crate::oracle::cech_piece(f, &alpha);
            (0..=(f.n() as i64 + 1)).map(|i| piece.complex.cohomology_at(i)).collect()
        });
        for &i in indices {
            let formula = lc_formula(f, i, &alpha);
            let oracle = if i < 0 {
                ModuleSummary::zero()
            } else {
                per_i.get(i as usize).cloned().unwrap_or_else(ModuleSummary::zero)
            };
            if formula != oracle {
                out.push(Mismatch {
                    context: context.to_string(),
                    l: None,
                    i,
                    alpha: alpha.coords().to_vec(),
                    j: None,
                    formula: formula.to_string(),
                    oracle: oracle.to_string(),
                });
            }
        }
    }
    out
}

/// Compare the Ext formula against the Koszul oracle over a window.
pub fn verify_ext_sweep(
    f: &Sheaf,
    context: &str,
    l: i64,
    window: &DegreeWindow,
    indices: &[i64],
) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for alpha in window.iter() {
        let piece = koszul_piece(f, l, &alpha);
        for &i in indices {
            let formula = ext_formula(f, l, i, &alpha);
            let oracle = piece.cohomology_at(i);
            if formula != oracle {
                out.push(Mismatch {
                    context: context.to_string(),
                    l: Some(l),
                    i,
                    alpha: alpha.coords().to_vec(),
                    j: None,
                    formula: formula.to_string(),
                    oracle: oracle.to_string(),
                });
            }
        }
    }
    out
}

/// Compare the rank of the decomposed multiplication map against the Cech
/// chain-map rank, for every coordinate direction.
pub fn verify_multi_sweep(
    f: &Sheaf,
    context: &str,
    window: &DegreeWindow,
    indices: &[i64],
) -> Vec<Mismatch> {
    let mut out = Vec::new();
    for alpha in window.iter() {
        for &i in indices {
            for j in 1..=f.n() {
                let formula = lc_mult_map(f, i, &alpha, j)
                    .expect("multiplication sweep runs over fields")
                    .rank();
                let oracle = cech_mult_rank(f, i, &alpha, j);
                if formula != oracle {
                    out.push(Mismatch {
                        context: context.to_string(),
                        l: None,
                        i,
                        alpha: alpha.coords().to_vec(),
                        j: Some(j),
                        formula: formula.to_string(),
                        oracle: oracle.to_string(),
                    });
                }
            }
        }
    }
    out
}

/// Run a closure over items on a small worker pool, preserving input order.
/// With one job the items are processed inline.
pub fn parallel_map<T: Sync, R: Send>(
    jobs: usize,
    items: &[T],
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= items.len() {
                    break;
                }
                let r = f(&items[idx]);
                *slots[idx].lock().expect("worker slot") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("worker slot").expect("every slot filled"))
        .collect()
}

// ---- tables -------------------------------------------------------------------

fn summary_row(
    format: OutputFormat,
    i: i64,
    alpha: &Multidegree,
    s: &ModuleSummary,
) -> String {
    match format {
        OutputFormat::Tsv => format!(
            "{}\t({})\t{}\t{}",
            i,
            alpha.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
            s.free_rank,
            s.torsion_string()
        ),
        OutputFormat::Json => serde_json::json!({
            "i": i,
            "alpha": alpha.coords(),
            "free": s.free_rank,
            "torsion": s.torsion.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
        })
        .to_string(),
    }
}

fn indices_for(job: &JobConfig, n: usize) -> Vec<i64> {
    match job.index {
        Some(i) => vec![i],
        None => (0..=n as i64 + 1).collect(),
    }
}

// ---- the driver ----------------------------------------------------------------

/// Execute a job, writing the report; returns the process exit code.
pub fn run(job: &JobConfig, out: &mut dyn Write) -> i32 {
    match run_inner(job, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            e.exit_code()
        }
    }
}

fn run_inner(job: &JobConfig, out: &mut dyn Write) -> Result<i32, CliError> {
    if job.l < 1 && matches!(job.command, Command::Ext | Command::OracleExt | Command::VerifyExt)
    {
        return Err(CliError::Flag("l must be at least 1".into()));
    }
    match job.command {
        Command::Lc | Command::OracleLc => {
            let (f, _) = required_input(job)?;
            let n = f.n();
            let window = resolve_window(&job.window, n, -(n as i64) - 1, 1)?;
            let indices = indices_for(job, n);
            for alpha in window.iter() {
                for &i in &indices {
                    let s = if job.command == Command::Lc {
                        lc_formula(&f, i, &alpha)
                    } else {
                        cech_local_cohomology(&f, i, &alpha)
                    };
                    if !s.is_zero() {
                        writeln!(out, "{}", summary_row(job.format, i, &alpha, &s))
                            .map_err(io_broke)?;
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Ext | Command::OracleExt => {
            let (f, _) = required_input(job)?;
            let n = f.n();
            let window = resolve_window(&job.window, n, -job.l - 1, 1)?;
            let indices = indices_for(job, n);
            for alpha in window.iter() {
                for &i in &indices {
                    let s = if job.command == Command::Ext {
                        ext_formula(&f, job.l, i, &alpha)
                    } else {
                        koszul_ext(&f, job.l, i, &alpha)
                    };
                    if !s.is_zero() {
                        writeln!(out, "{}", summary_row(job.format, i, &alpha, &s))
                            .map_err(io_broke)?;
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::Series => {
            let (f, _) = required_input(job)?;
            let indices = indices_for(job, f.n());
            for &i in &indices {
                let s = hilbert_series(&f, i);
                match job.format {
                    OutputFormat::Tsv => {
                        for t in &s.terms {
                            writeln!(
                                out,
                                "{}\t{}\t{}\t{}",
                                i,
                                t.face.label(f.n()),
                                t.summand.free_rank,
                                t.summand.torsion_string()
                            )
                            .map_err(io_broke)?;
                        }
                        writeln!(out, "{}\tcoarse\t{}", i, s.coarse_string()).map_err(io_broke)?;
                    }
                    OutputFormat::Json => {
                        let terms: Vec<serde_json::Value> = s
                            .terms
                            .iter()
                            .map(|t| {
                                serde_json::json!({
                                    "face": t.face.vertices(f.n()),
                                    "free": t.summand.free_rank,
                                    "torsion": t.summand.torsion.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                                })
                            })
                            .collect();
                        writeln!(
                            out,
                            "{}",
                            serde_json::json!({
                                "i": i,
                                "terms": terms,
                                "coarse": s.coarse_string(),
                            })
                        )
                        .map_err(io_broke)?;
                    }
                }
            }
            Ok(EXIT_OK)
        }
        Command::VerifyLc => {
            let (f, name) = required_input(job)?;
            let n = f.n();
            let window = resolve_window(&job.window, n, -(n as i64) - 1, 1)?;
            let indices = indices_for(job, n);
            let mismatches = verify_lc_sweep(&f, &name, &window, &indices);
            report_mismatches(job, out, &mismatches, "local cohomology")
        }
        Command::VerifyExt => {
            let (f, name) = required_input(job)?;
            let n = f.n();
            let window = resolve_window(&job.window, n, -job.l - 1, 1)?;
            let indices = indices_for(job, n);
            let mismatches = verify_ext_sweep(&f, &name, job.l, &window, &indices);
            report_mismatches(job, out, &mismatches, "ext")
        }
        Command::VerifyMulti => {
            let (f, name) = required_input(job)?;
            if !f.ring().is_field() {
                return Err(CliError::Flag(
                    "multiplication ranks are only defined over field coefficients".into(),
                ));
            }
            let n = f.n();
            let window = resolve_window(&job.window, n, -(n as i64) - 1, 0)?;
            let indices = indices_for(job, n);
            let mismatches = verify_multi_sweep(&f, &name, &window, &indices);
            report_mismatches(job, out, &mismatches, "multiplication")
        }
        Command::VerifyProps => {
            let n = job
                .n
                .ok_or_else(|| CliError::Flag("verify-props needs --n".into()))?;
            if n > 4 {
                return Err(CliError::Capacity(format!(
                    "decomposition checks are limited to n <= 4, got {n}"
                )));
            }
            let window = resolve_window(&job.window, n, -3, 0)?;
            let a = check_prop_a(n, &window);
            let mut failed = false;
            for m in &a.mismatches {
                failed = true;
                writeln!(out, "prop-a\t{m}").map_err(io_broke)?;
            }
            writeln!(
                out,
                "prop-a checked {} stalk dims, {} transitions: {}",
                a.checked_dims,
                a.checked_transitions,
                if a.is_ok() { "ok" } else { "MISMATCH" }
            )
            .map_err(io_broke)?;
            for l in 1..=job.l.max(1) {
                let b = check_prop_b(n, l);
                for m in &b.mismatches {
                    failed = true;
                    writeln!(out, "prop-b l={l}\t{m}").map_err(io_broke)?;
                }
                writeln!(
                    out,
                    "prop-b l={} checked {} stalk dims, {} transitions: {}",
                    l,
                    b.checked_dims,
                    b.checked_transitions,
                    if b.is_ok() { "ok" } else { "MISMATCH" }
                )
                .map_err(io_broke)?;
            }
            Ok(if failed { EXIT_MISMATCH } else { EXIT_OK })
        }
        Command::DecomposeInjective => {
            let (f, _) = required_input(job)?;
            match f.decompose_injective() {
                Ok(mults) => {
                    for (face, m) in &mults {
                        match job.format {
                            OutputFormat::Tsv => {
                                writeln!(out, "{}\t{}", face.label(f.n()), m).map_err(io_broke)?
                            }
                            OutputFormat::Json => writeln!(
                                out,
                                "{}",
                                serde_json::json!({
                                    "face": face.vertices(f.n()),
                                    "multiplicity": m
                                })
                            )
                            .map_err(io_broke)?,
                        }
                    }
                    Ok(EXIT_OK)
                }
                Err(DecomposeError::UnsupportedRing) => Err(CliError::Flag(
                    "injective decomposition requires field coefficients".into(),
                )),
                Err(e @ DecomposeError::NotInjective { .. }) => {
                    writeln!(out, "{e}").map_err(io_broke)?;
                    Ok(EXIT_MISMATCH)
                }
            }
        }
        Command::Enumerate => {
            let n = job.n.ok_or_else(|| CliError::Flag("enumerate needs --n".into()))?;
            let complexes = SRComplex::enumerate_all(n)?;
            let indices = indices_for(job, n);
            let window = match job.check {
                EnumerateCheck::Ext => resolve_window(&job.window, n, -job.l - 1, 1)?,
                EnumerateCheck::Multi => resolve_window(&job.window, n, -(n as i64) - 1, 0)?,
                EnumerateCheck::Lc => resolve_window(&job.window, n, -(n as i64) - 1, 1)?,
            };
            if job.check == EnumerateCheck::Multi && !job.coeff.is_field() {
                return Err(CliError::Flag(
                    "multiplication ranks are only defined over field coefficients".into(),
                ));
            }
            let results: Vec<Vec<Mismatch>> =
                parallel_map(job.jobs, &complexes, |k| {
                    let f = Sheaf::constant_on_complex(k, job.coeff);
                    let context = facet_label(k);
                    match job.check {
                        EnumerateCheck::Lc => verify_lc_sweep(&f, &context, &window, &indices),
                        EnumerateCheck::Ext => {
                            verify_ext_sweep(&f, &context, job.l, &window, &indices)
                        }
                        EnumerateCheck::Multi => {
                            verify_multi_sweep(&f, &context, &window, &indices)
                        }
                    }
                });
            let mismatches: Vec<Mismatch> = results.into_iter().flatten().collect();
            writeln!(
                out,
                "checked {} complexes on {} vertices over {}",
                complexes.len(),
                n,
                job.coeff
            )
            .map_err(io_broke)?;
            report_mismatches(job, out, &mismatches, "enumerate")
        }
    }
}

fn facet_label(k: &SRComplex) -> String {
    let facets: Vec<String> = k.facets().iter().map(|f| f.label(k.n())).collect();
    if k.is_void() {
        "void".to_string()
    } else {
        facets.join(" ")
    }
}

fn required_input(job: &JobConfig) -> Result<(Sheaf, String), CliError> {
    let path = job
        .input
        .as_ref()
        .ok_or_else(|| CliError::Flag("this command needs --input".into()))?;
    load_input(path, job.coeff)
}

fn report_mismatches(
    job: &JobConfig,
    out: &mut dyn Write,
    mismatches: &[Mismatch],
    what: &str,
) -> Result<i32, CliError> {
    for m in mismatches {
        writeln!(out, "{}", m.render(job.format)).map_err(io_broke)?;
    }
    if mismatches.is_empty() {
        writeln!(out, "{what}: ok").map_err(io_broke)?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "{what}: {} mismatches", mismatches.len()).map_err(io_broke)?;
        Ok(EXIT_MISMATCH)
    }
}

fn io_broke(e: std::io::Error) -> CliError {
    CliError::Io { path: "<output>".into(), err: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(name: &str, content: &str) -> PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("hochster-test-{}-{}", std::process::id(), name));
        std::fs::write(&p, content).unwrap();
        p
    }

    #[test]
    fn facet_file_round_trip() {
        let p = write_temp("facets.txt", "1 2\n1 3\n2 3\n");
        let k = parse_complex_file(&p).unwrap();
        assert_eq!(k, SRComplex::triangle_boundary());
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn facet_file_bad_token_points_at_the_line() {
        let p = write_temp("bad.txt", "1 2\n1 x\n");
        let err = parse_complex_file(&p).unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn facet_file_header_and_comments() {
        let p = write_temp("hdr.txt", "# a square\nn=4\n1 2\n\n3 4 # comment\n");
        let k = parse_complex_file(&p).unwrap();
        assert_eq!(k.n(), 4);
        assert_eq!(k.facets().len(), 2);
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn sheaf_file_shape_mismatch_names_the_pair() {
        let text = r#"{
            "n": 2,
            "coeff": "q",
            "stalks": {"": 2, "1": 3},
            "restrictions": {" + 1": [1, 0, 0, 1, 0, 0], "1 + 2": []}
        }"#;
        // 3x2 demanded; give a wrong-length matrix instead
        let bad = text.replace("[1, 0, 0, 1, 0, 0]", "[1, 0, 0, 1]");
        let err = parse_sheaf_text(&bad, "inline").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 3x2"), "{msg}");
    }

    #[test]
    fn sheaf_file_parses_and_validates() {
        let text = r#"{
            "n": 1,
            "coeff": "fp:5",
            "stalks": {"": 1, "1": 1},
            "restrictions": {" + 1": [2]}
        }"#;
        let f = parse_sheaf_text(text, "inline").unwrap();
        assert_eq!(f.ring(), CoefficientRing::PrimeField(5));
        assert_eq!(f.stalk_rank(&Face::empty()), 1);
    }

    #[test]
    fn window_spec_parsing() {
        assert_eq!(parse_window_spec("-3..1").unwrap(), vec![(-3, 1)]);
        assert_eq!(
            parse_window_spec("-3..1,-2..0").unwrap(),
            vec![(-3, 1), (-2, 0)]
        );
        assert!(parse_window_spec("3..1").is_err());
        assert!(parse_window_spec("x..1").is_err());
    }

    #[test]
    fn verify_lc_on_a_small_input_is_clean() {
        let p = write_temp("verify.txt", "1 2\n1 3\n2 3\n");
        let mut job = JobConfig::new(Command::VerifyLc);
        job.input = Some(p.clone());
        let mut buf = Vec::new();
        let code = run(&job, &mut buf);
        assert_eq!(code, EXIT_OK, "{}", String::from_utf8_lossy(&buf));
        assert!(String::from_utf8(buf).unwrap().contains("ok"));
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn runs_are_deterministic() {
        let p = write_temp("det.txt", "1 2\n2 3\n");
        let mut job = JobConfig::new(Command::Lc);
        job.input = Some(p.clone());
        let mut a = Vec::new();
        let mut b = Vec::new();
        assert_eq!(run(&job, &mut a), EXIT_OK);
        assert_eq!(run(&job, &mut b), EXIT_OK);
        assert_eq!(a, b);
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn parallel_and_serial_enumerate_agree() {
        let mut job = JobConfig::new(Command::Enumerate);
        job.n = Some(2);
        job.check = EnumerateCheck::Lc;
        let mut serial = Vec::new();
        assert_eq!(run(&job, &mut serial), EXIT_OK);
        job.jobs = 4;
        let mut parallel = Vec::new();
        assert_eq!(run(&job, &mut parallel), EXIT_OK);
        assert_eq!(serial, parallel);
    }

    #[test]
    fn enumerate_capacity_refusal() {
        let mut job = JobConfig::new(Command::Enumerate);
        job.n = Some(9);
        let mut buf = Vec::new();
        assert_eq!(run(&job, &mut buf), EXIT_CAPACITY);
    }

    #[test]
    fn missing_input_is_an_input_error() {
        let job = JobConfig::new(Command::Lc);
        let mut buf = Vec::new();
        assert_eq!(run(&job, &mut buf), EXIT_INPUT);
    }

    #[test]
    fn verify_props_runs_clean() {
        let mut job = JobConfig::new(Command::VerifyProps);
        job.n = Some(2);
        job.l = 3;
        let mut buf = Vec::new();
        assert_eq!(run(&job, &mut buf), EXIT_OK);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("prop-a checked"));
        assert!(text.contains("prop-b l=3"));
    }

    #[test]
    fn lc_table_contains_the_origin_entry() {
        let p = write_temp("table.txt", "1 2\n1 3\n2 3\n");
        let mut job = JobConfig::new(Command::Lc);
        job.input = Some(p.clone());
        job.index = Some(2);
        job.window = Some(vec![(-2, 0)]);
        let mut buf = Vec::new();
        assert_eq!(run(&job, &mut buf), EXIT_OK);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().any(|l| l.starts_with("2\t(0,0,0)\t1")), "{text}");
        std::fs::remove_file(p).ok();
    }

    #[test]
    fn decompose_injective_cli_paths() {
        let good = r#"{
            "n": 1,
            "coeff": "q",
            "stalks": {"": 1, "1": 1},
            "restrictions": {" + 1": [1]}
        }"#;
        let p = write_temp("inj.json", good);
        let mut job = JobConfig::new(Command::DecomposeInjective);
        job.input = Some(p.clone());
        let mut buf = Vec::new();
        assert_eq!(run(&job, &mut buf), EXIT_OK);
        assert!(String::from_utf8(buf).unwrap().contains("{1}\t1"));
        std::fs::remove_file(p).ok();

        let bad = good.replace("[1]", "[0]");
        let p = write_temp("noninj.json", &bad);
        job.input = Some(p.clone());
        let mut buf = Vec::new();
        assert_eq!(run(&job, &mut buf), EXIT_MISMATCH);
        assert!(String::from_utf8(buf).unwrap().contains("not injective"));
        std::fs::remove_file(p).ok();
    }
}
