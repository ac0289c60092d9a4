//! Coupling-tensor documents: the canonical JSON interchange format and an
//! adapter for spin–spin coupling sections of quantum-chemistry text output.
//!
//! The producer grammar is keyword anchored. A pair starts at a line such as
//!
//! ```text
//!  NUCLEUS A = C    0 NUCLEUS B = C    1
//! ```
//!
//! and each mechanism block is a header line followed by nine numbers in row
//! order X, Y, Z:
//!
//! ```text
//!  Fermi-contact contribution (Hz)
//!       28.9120     0.0000     0.0000
//!        0.0000    28.9120     0.0000
//!        0.0000     0.0000    28.9120
//! ```
//!
//! Headers are recognised by keyword: `SD/FC` or `cross` (cross term),
//! `Total`, `Diamagnetic`, `Paramagnetic`, `Spin-Dipolar`, `Fermi`, checked in
//! that order. Matrices are stored as printed: row index is the first
//! nucleus' spin component. A pair printed as (B, A) with B > A is stored as
//! (A, B) with every block transposed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::geometry::{Atom, Cluster, GeometryError};
use crate::tensor::{CouplingTensor, Mat3, Mechanism, MechanismSet, TensorError, Vec3, SUM_TOLERANCE_HZ};

/// Frame label given to every tensor read from a document.
pub const LAB_FRAME: &str = "lab";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdapterError {
    #[error("no coupling section found")]
    NoCouplingSection,
    #[error("line {line}: {mechanism} block of pair ({a}, {b}) has {found} numbers, expected 9")]
    BlockArity {
        line: usize,
        a: usize,
        b: usize,
        mechanism: String,
        found: usize,
    },
    #[error("line {line}: pair ({a}, {b}) has a second {mechanism} block")]
    DuplicateBlock {
        line: usize,
        a: usize,
        b: usize,
        mechanism: String,
    },
    #[error("line {line}: pair ({a}, {b}) is missing the {mechanism} contribution")]
    MissingMechanism {
        line: usize,
        a: usize,
        b: usize,
        mechanism: Mechanism,
    },
    #[error("line {line}: duplicate entry for pair ({a}, {b})")]
    DuplicatePair { line: usize, a: usize, b: usize },
    #[error("line {line}: couplings must be in Hz, found `{unit}`")]
    Units { line: usize, unit: String },
    #[error("line {line}: atom index {index} outside the {origin} range of {count} atoms")]
    IndexRange {
        line: usize,
        index: usize,
        origin: IndexOrigin,
        count: usize,
    },
    #[error("line {line}: {source}")]
    Tensor { line: usize, source: TensorError },
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> AdapterError {
    AdapterError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// One coupled pair with its mechanism contributions (lab frame, Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub a: usize,
    pub b: usize,
    pub mechanisms: MechanismSet,
    /// Where the entry came from; not serialized.
    pub provenance: Option<String>,
}

impl Coupling {
    pub fn new(a: usize, b: usize, mechanisms: MechanismSet) -> Self {
        Self {
            a,
            b,
            mechanisms,
            provenance: None,
        }
    }

    /// Declared total, or the assembled sum when none was declared.
    pub fn total(&self) -> CouplingTensor {
        self.mechanisms.total()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DocumentError {
    #[error("pair ({a}, {b}): first index must be smaller than second")]
    Order { a: usize, b: usize },
    #[error("pair ({a}, {b}) appears more than once")]
    Duplicate { a: usize, b: usize },
    #[error("pair ({a}, {b}): declared total differs from the mechanism sum by {discrepancy:.2e} Hz")]
    TotalMismatch { a: usize, b: usize, discrepancy: f64 },
    #[error("pair ({a}, {b}) refers to atom {index}, which is not in the atom list")]
    UnknownAtom { a: usize, b: usize, index: usize },
    #[error("atom index {0} appears more than once")]
    DuplicateAtom(usize),
}

/// Serialized form of per-pair mechanism sets. Units are always Hz.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingDocument {
    atoms: Option<Vec<Atom>>,
    couplings: Vec<Coupling>,
}

impl CouplingDocument {
    /// Validates and sorts couplings by `(a, b)`.
    pub fn new(atoms: Option<Vec<Atom>>, mut couplings: Vec<Coupling>) -> Result<Self, DocumentError> {
        let mut known = BTreeSet::new();
        if let Some(atoms) = &atoms {
            for atom in atoms {
                if !known.insert(atom.index) {
                    return Err(DocumentError::DuplicateAtom(atom.index));
                }
            }
        }
        couplings.sort_by_key(|c| (c.a, c.b));
        for (i, c) in couplings.iter().enumerate() {
            let (a, b) = (c.a, c.b);
            if a >= b {
                return Err(DocumentError::Order { a, b });
            }
            if i > 0 && (couplings[i - 1].a, couplings[i - 1].b) == (a, b) {
                return Err(DocumentError::Duplicate { a, b });
            }
            if atoms.is_some() {
                for index in [a, b] {
                    if !known.contains(&index) {
                        return Err(DocumentError::UnknownAtom { a, b, index });
                    }
                }
            }
            let assembly = c.mechanisms.assemble_total();
            if !assembly.within_tolerance() {
                return Err(DocumentError::TotalMismatch {
                    a,
                    b,
                    discrepancy: assembly.max_discrepancy().unwrap_or_default(),
                });
            }
        }
        Ok(Self { atoms, couplings })
    }

    pub fn units(&self) -> &'static str {
        "Hz"
    }

    pub fn atoms(&self) -> Option<&[Atom]> {
        self.atoms.as_deref()
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&Coupling> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.couplings
            .binary_search_by_key(&key, |c| (c.a, c.b))
            .ok()
            .map(|i| &self.couplings[i])
    }

    /// The embedded atom list as a cluster (no bond graph), if present.
    pub fn cluster(&self) -> Option<Result<Cluster, GeometryError>> {
        self.atoms.as_ref().map(|a| Cluster::new(a.clone()))
    }
}

/// Whether producer atom indices start at 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexOrigin {
    ZeroBased,
    OneBased,
}

impl std::fmt::Display for IndexOrigin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IndexOrigin::ZeroBased => "0-based",
            IndexOrigin::OneBased => "1-based",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseReport {
    pub pairs_found: usize,
    pub warnings: Vec<Warning>,
    /// Pairs without a usable declared total, whose total is the mechanism sum.
    pub totals_recomputed: usize,
    pub index_origin: IndexOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BlockKind {
    Mechanism(Mechanism),
    Total,
}

impl BlockKind {
    fn name(self) -> String {
        match self {
            BlockKind::Mechanism(m) => m.key().to_owned(),
            BlockKind::Total => "total".to_owned(),
        }
    }
}

fn pair_header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)nucleus\s*a\s*[=:]?\s*([a-z]{1,3})\s*(\d+)\s*[,;:]?\s*nucleus\s*b\s*[=:]?\s*([a-z]{1,3})\s*(\d+)",
        )
        .expect("static regex")
    })
}

fn unit_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^(hz|khz|mhz|ghz|a\.?u\.?|ppm|rad/s|cm-1|cm\^-1|1/cm)$").expect("static regex"))
}

fn classify_header(line: &str) -> Option<BlockKind> {
    let l = line.to_ascii_lowercase();
    let looks_like_header = l.contains("contribution") || l.contains("tensor") || l.contains("term") || l.contains('(');
    if !looks_like_header {
        return None;
    }
    if l.contains("sd/fc") || l.contains("cross") {
        Some(BlockKind::Mechanism(Mechanism::SdFc))
    } else if l.contains("total") {
        Some(BlockKind::Total)
    } else if l.contains("diamagnetic") {
        Some(BlockKind::Mechanism(Mechanism::Dso))
    } else if l.contains("paramagnetic") {
        Some(BlockKind::Mechanism(Mechanism::Pso))
    } else if l.contains("spin-dipolar") || l.contains("spin dipolar") {
        Some(BlockKind::Mechanism(Mechanism::Sd))
    } else if l.contains("fermi") {
        Some(BlockKind::Mechanism(Mechanism::Fc))
    } else {
        None
    }
}

fn check_units(line: &str, line_no: usize) -> Result<(), AdapterError> {
    let mut rest = line;
    while let Some(open) = rest.find('(') {
        let after = &rest[open + 1..];
        let Some(close) = after.find(')') else { break };
        let token = after[..close].trim();
        if unit_re().is_match(token) && !token.eq_ignore_ascii_case("hz") {
            return Err(AdapterError::Units {
                line: line_no,
                unit: token.to_owned(),
            });
        }
        rest = &after[close + 1..];
    }
    Ok(())
}

fn parse_number(token: &str) -> Option<f64> {
    token
        .parse()
        .ok()
        .or_else(|| token.replace(['D', 'd'], "e").parse().ok())
}

fn is_axis_label(token: &str) -> bool {
    matches!(token.trim_end_matches(':'), "X" | "Y" | "Z" | "x" | "y" | "z")
}

/// Numbers on a matrix line, allowing a leading axis label. `None` if the
/// line is not a matrix line; `Some(vec![])` for an `X Y Z` column header.
fn numeric_tokens(line: &str) -> Option<Vec<f64>> {
    let mut tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.is_empty() {
        return None;
    }
    if tokens.iter().all(|t| is_axis_label(t)) {
        return Some(Vec::new());
    }
    if is_axis_label(tokens[0]) {
        tokens.remove(0);
    }
    tokens.iter().map(|t| parse_number(t)).collect()
}

fn atom_line(line: &str) -> Option<(String, Vec3)> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != 4 || !tokens[0].chars().next()?.is_ascii_alphabetic() {
        return None;
    }
    let xyz: Option<Vec<f64>> = tokens[1..].iter().map(|t| parse_number(t)).collect();
    let xyz = xyz?;
    Some((tokens[0].to_owned(), Vec3::new(xyz[0], xyz[1], xyz[2])))
}

struct RawPair {
    line: usize,
    a: usize,
    b: usize,
    elements: (String, String),
    blocks: BTreeMap<BlockKindKey, (usize, Mat3)>,
}

type BlockKindKey = u8;

fn block_key(kind: BlockKind) -> BlockKindKey {
    match kind {
        BlockKind::Mechanism(m) => m as u8,
        BlockKind::Total => 255,
    }
}

/// Reads the spin–spin coupling section of producer text output.
pub fn parse_producer_output(text: &str) -> Result<(CouplingDocument, ParseReport), AdapterError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut warnings = Vec::new();
    let mut atoms: Option<Vec<(String, Vec3)>> = None;
    let mut pairs: Vec<RawPair> = Vec::new();

    let mut i = 0;
    while i < lines.len() {
        let line = lines[i];
        let line_no = i + 1;
        let upper = line.to_ascii_uppercase();

        if upper.contains("CARTESIAN COORDINATES") && upper.contains("ANGSTROEM") {
            let mut section = Vec::new();
            i += 1;
            while i < lines.len() {
                let l = lines[i].trim();
                if l.is_empty() || l.chars().all(|c| c == '-') {
                    i += 1;
                    continue;
                }
                match atom_line(l) {
                    Some(atom) => section.push(atom),
                    None => break,
                }
                i += 1;
            }
            atoms = Some(section);
            continue;
        }

        if let Some(caps) = pair_header_re().captures(line) {
            let a = caps[2]
                .parse()
                .map_err(|_| schema(format!("line {line_no}"), "atom index too large"))?;
            let b = caps[4]
                .parse()
                .map_err(|_| schema(format!("line {line_no}"), "atom index too large"))?;
            pairs.push(RawPair {
                line: line_no,
                a,
                b,
                elements: (caps[1].to_owned(), caps[3].to_owned()),
                blocks: BTreeMap::new(),
            });
            i += 1;
            continue;
        }

        if let (Some(kind), Some(current)) = (classify_header(line), pairs.last_mut()) {
            check_units(line, line_no)?;
            let mut numbers = Vec::new();
            let mut j = i + 1;
            while j < lines.len() {
                if lines[j].trim().is_empty() {
                    j += 1;
                    continue;
                }
                match numeric_tokens(lines[j]) {
                    Some(v) => numbers.extend(v),
                    None => break,
                }
                j += 1;
            }
            if numbers.len() != 9 {
                return Err(AdapterError::BlockArity {
                    line: line_no,
                    a: current.a,
                    b: current.b,
                    mechanism: kind.name(),
                    found: numbers.len(),
                });
            }
            let m = Mat3::from_row_slice(&numbers);
            if current.blocks.insert(block_key(kind), (line_no, m)).is_some() {
                return Err(AdapterError::DuplicateBlock {
                    line: line_no,
                    a: current.a,
                    b: current.b,
                    mechanism: kind.name(),
                });
            }
            i = j;
            continue;
        }
        i += 1;
    }

    if pairs.is_empty() {
        return Err(AdapterError::NoCouplingSection);
    }

    let index_origin = detect_origin(&pairs, atoms.as_deref(), &mut warnings)?;
    let shift = match index_origin {
        IndexOrigin::ZeroBased => 1,
        IndexOrigin::OneBased => 0,
    };

    let mut totals_recomputed = 0;
    let mut seen = BTreeSet::new();
    let mut couplings = Vec::with_capacity(pairs.len());
    for raw in pairs {
        let (mut a, mut b) = (raw.a + shift, raw.b + shift);
        let swapped = a > b;
        if swapped {
            std::mem::swap(&mut a, &mut b);
            warnings.push(Warning {
                line: raw.line,
                message: format!("pair printed as ({b}, {a}); stored as ({a}, {b}) with transposed blocks"),
            });
        }
        if a == b {
            return Err(AdapterError::DuplicatePair { line: raw.line, a, b });
        }
        if !seen.insert((a, b)) {
            return Err(AdapterError::DuplicatePair { line: raw.line, a, b });
        }
        if let Some(list) = &atoms {
            let (ea, eb) = if swapped {
                (&raw.elements.1, &raw.elements.0)
            } else {
                (&raw.elements.0, &raw.elements.1)
            };
            for (index, element) in [(a, ea), (b, eb)] {
                if !list[index - 1].0.eq_ignore_ascii_case(element) {
                    warnings.push(Warning {
                        line: raw.line,
                        message: format!(
                            "pair header names {element}{index} but the atom list has {}",
                            list[index - 1].0
                        ),
                    });
                }
            }
        }

        let tensor = |m: &Mat3, line: usize| {
            let m = if swapped { m.transpose() } else { *m };
            CouplingTensor::new(m, LAB_FRAME).map_err(|source| AdapterError::Tensor { line, source })
        };
        let mut parts = Vec::with_capacity(5);
        for mechanism in Mechanism::ALL {
            let (line, m) =
                raw.blocks
                    .get(&block_key(BlockKind::Mechanism(mechanism)))
                    .ok_or(AdapterError::MissingMechanism {
                        line: raw.line,
                        a,
                        b,
                        mechanism,
                    })?;
            parts.push(tensor(m, *line)?);
        }
        let parts: [CouplingTensor; 5] = parts.try_into().expect("five mechanisms");
        let declared = match raw.blocks.get(&block_key(BlockKind::Total)) {
            Some((line, m)) => Some((*line, tensor(m, *line)?)),
            None => None,
        };

        let without_total =
            MechanismSet::from_array(parts, None).map_err(|source| AdapterError::Tensor { line: raw.line, source })?;
        let mechanisms = match declared {
            None => {
                totals_recomputed += 1;
                warnings.push(Warning {
                    line: raw.line,
                    message: format!("pair ({a}, {b}) has no total block; using the mechanism sum"),
                });
                without_total
            }
            Some((line, total)) => {
                let discrepancy = (total.values() - without_total.assemble_total().total.values()).amax();
                if discrepancy > SUM_TOLERANCE_HZ {
                    totals_recomputed += 1;
                    warnings.push(Warning {
                        line,
                        message: format!(
                            "pair ({a}, {b}): declared total differs from the mechanism sum by {discrepancy:.2e} Hz; using the sum"
                        ),
                    });
                    without_total
                } else {
                    let [dso, pso, fc, sd, sdfc] = Mechanism::ALL.map(|m| without_total.get(m).clone());
                    MechanismSet::new(dso, pso, fc, sd, sdfc, Some(total))
                        .map_err(|source| AdapterError::Tensor { line, source })?
                }
            }
        };
        couplings.push(Coupling {
            a,
            b,
            mechanisms,
            provenance: Some(format!("producer output, line {}", raw.line)),
        });
    }

    let doc_atoms = atoms.map(|list| {
        list.into_iter()
            .enumerate()
            .map(|(k, (element, position))| Atom::new(k + 1, element, position))
            .collect()
    });
    let pairs_found = couplings.len();
    let doc = CouplingDocument::new(doc_atoms, couplings).map_err(|e| schema("document", e.to_string()))?;
    Ok((
        doc,
        ParseReport {
            pairs_found,
            warnings,
            totals_recomputed,
            index_origin,
        },
    ))
}

fn detect_origin(
    pairs: &[RawPair],
    atoms: Option<&[(String, Vec3)]>,
    warnings: &mut Vec<Warning>,
) -> Result<IndexOrigin, AdapterError> {
    let indices = pairs.iter().flat_map(|p| [(p.line, p.a), (p.line, p.b)]);
    let Some(atoms) = atoms else {
        warnings.push(Warning {
            line: pairs[0].line,
            message: "no atom list; assuming 0-based atom indices".to_owned(),
        });
        return Ok(IndexOrigin::ZeroBased);
    };
    let count = atoms.len();
    let min = indices.clone().map(|(_, i)| i).min().unwrap_or(0);
    let max = indices.clone().map(|(_, i)| i).max().unwrap_or(0);
    let origin = if min == 0 {
        IndexOrigin::ZeroBased
    } else if max == count {
        IndexOrigin::OneBased
    } else {
        warnings.push(Warning {
            line: pairs[0].line,
            message: "atom index origin is ambiguous; assuming 0-based".to_owned(),
        });
        IndexOrigin::ZeroBased
    };
    let (lo, hi) = match origin {
        IndexOrigin::ZeroBased => (0, count.saturating_sub(1)),
        IndexOrigin::OneBased => (1, count),
    };
    for (line, index) in indices {
        if count == 0 || index < lo || index > hi {
            return Err(AdapterError::IndexRange {
                line,
                index,
                origin,
                count,
            });
        }
    }
    Ok(origin)
}

fn number_json(x: f64) -> String {
    serde_json::to_string(&x).expect("finite f64 serializes")
}

fn matrix_json(m: &Mat3) -> String {
    let rows: Vec<String> = (0..3)
        .map(|r| {
            let cells: Vec<String> = (0..3).map(|c| number_json(m[(r, c)])).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// Deterministic canonical JSON. Couplings are sorted by `(a, b)` and every
/// number is the shortest decimal that parses back to the same `f64`.
pub fn write_canonical(doc: &CouplingDocument) -> String {
    let mut out = String::from("{\n  \"units\": \"Hz\",\n");
    if let Some(atoms) = doc.atoms() {
        out.push_str("  \"atoms\": [");
        for (k, atom) in atoms.iter().enumerate() {
            let sep = if k == 0 { "\n" } else { ",\n" };
            let p = &atom.position;
            let _ = write!(
                out,
                "{sep}    {{\"index\": {}, \"element\": {}, \"xyz\": [{}, {}, {}]}}",
                atom.index,
                serde_json::to_string(&atom.element).expect("string serializes"),
                number_json(p.x),
                number_json(p.y),
                number_json(p.z)
            );
        }
        out.push_str(if atoms.is_empty() { "],\n" } else { "\n  ],\n" });
    }
    out.push_str("  \"couplings\": [");
    for (k, c) in doc.couplings().iter().enumerate() {
        out.push_str(if k == 0 { "\n" } else { ",\n" });
        let _ = write!(
            out,
            "    {{\n      \"a\": {},\n      \"b\": {},\n      \"mechanisms\": {{\n",
            c.a, c.b
        );
        for (mi, m) in Mechanism::ALL.iter().enumerate() {
            let comma = if mi + 1 < Mechanism::ALL.len() { "," } else { "" };
            let _ = writeln!(
                out,
                "        \"{}\": {}{comma}",
                m.key(),
                matrix_json(c.mechanisms.get(*m).values())
            );
        }
        out.push_str("      }");
        if let Some(total) = c.mechanisms.declared_total() {
            let _ = write!(out, ",\n      \"total\": {}", matrix_json(total.values()));
        }
        out.push_str("\n    }");
    }
    out.push_str(if doc.couplings().is_empty() {
        "]\n}\n"
    } else {
        "\n  ]\n}\n"
    });
    out
}

fn expect_object<'a>(v: &'a Value, path: &str, allowed: &[&str]) -> Result<&'a Map<String, Value>, AdapterError> {
    let obj = v.as_object().ok_or_else(|| schema(path, "expected an object"))?;
    if let Some(extra) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(schema(format!("{path}.{extra}"), "unknown field"));
    }
    Ok(obj)
}

fn required<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, AdapterError> {
    obj.get(key)
        .ok_or_else(|| schema(format!("{path}.{key}"), "missing field"))
}

fn read_index(v: &Value, path: &str) -> Result<usize, AdapterError> {
    v.as_u64()
        .filter(|&i| i >= 1)
        .map(|i| i as usize)
        .ok_or_else(|| schema(path, "expected a positive integer"))
}

fn read_number(v: &Value, path: &str) -> Result<f64, AdapterError> {
    v.as_f64().ok_or_else(|| schema(path, "expected a number"))
}

fn read_vec3(v: &Value, path: &str) -> Result<Vec3, AdapterError> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(path, "expected an array of 3 numbers"))?;
    if arr.len() != 3 {
        return Err(schema(path, format!("expected 3 numbers, found {}", arr.len())));
    }
    let mut out = [0.0; 3];
    for (k, x) in arr.iter().enumerate() {
        out[k] = read_number(x, &format!("{path}[{k}]"))?;
    }
    Ok(Vec3::from(out))
}

fn read_matrix(v: &Value, path: &str) -> Result<CouplingTensor, AdapterError> {
    let rows = v
        .as_array()
        .ok_or_else(|| schema(path, "expected a 3×3 nested array"))?;
    if rows.len() != 3 {
        return Err(schema(path, format!("expected 3 rows, found {}", rows.len())));
    }
    let mut m = Mat3::zeros();
    for (r, row) in rows.iter().enumerate() {
        let row = read_vec3(row, &format!("{path}[{r}]"))?;
        m.set_row(r, &row.transpose());
    }
    CouplingTensor::new(m, LAB_FRAME).map_err(|e| schema(path, e.to_string()))
}

/// Parses and validates a canonical document.
pub fn read_canonical(text: &str) -> Result<CouplingDocument, AdapterError> {
    let root: Value = serde_json::from_str(text).map_err(|e| AdapterError::Json(e.to_string()))?;
    let top = expect_object(&root, "$", &["units", "atoms", "couplings"])?;

    match required(top, "units", "$")?.as_str() {
        Some("Hz") => {}
        Some(other) => return Err(schema("$.units", format!("expected \"Hz\", found \"{other}\""))),
        None => return Err(schema("$.units", "expected the string \"Hz\"")),
    }

    let atoms = match top.get("atoms") {
        None => None,
        Some(v) => {
            let arr = v.as_array().ok_or_else(|| schema("$.atoms", "expected an array"))?;
            let mut atoms = Vec::with_capacity(arr.len());
            let mut seen = BTreeSet::new();
            for (k, item) in arr.iter().enumerate() {
                let path = format!("$.atoms[{k}]");
                let obj = expect_object(item, &path, &["index", "element", "xyz"])?;
                let index = read_index(required(obj, "index", &path)?, &format!("{path}.index"))?;
                if !seen.insert(index) {
                    return Err(schema(format!("{path}.index"), format!("duplicate atom index {index}")));
                }
                let element = required(obj, "element", &path)?
                    .as_str()
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| schema(format!("{path}.element"), "expected a non-empty string"))?;
                let xyz = read_vec3(required(obj, "xyz", &path)?, &format!("{path}.xyz"))?;
                atoms.push(Atom::new(index, element, xyz));
            }
            Some(atoms)
        }
    };

    let arr = required(top, "couplings", "$")?
        .as_array()
        .ok_or_else(|| schema("$.couplings", "expected an array"))?;
    let mut couplings = Vec::with_capacity(arr.len());
    let mut seen = BTreeSet::new();
    for (k, item) in arr.iter().enumerate() {
        let path = format!("$.couplings[{k}]");
        let obj = expect_object(item, &path, &["a", "b", "mechanisms", "total"])?;
        let a = read_index(required(obj, "a", &path)?, &format!("{path}.a"))?;
        let b = read_index(required(obj, "b", &path)?, &format!("{path}.b"))?;
        if a >= b {
            return Err(schema(&path, format!("a ({a}) must be smaller than b ({b})")));
        }
        if !seen.insert((a, b)) {
            return Err(schema(&path, format!("duplicate pair ({a}, {b})")));
        }
        if let Some(atoms) = &atoms {
            for index in [a, b] {
                if !atoms.iter().any(|at| at.index == index) {
                    return Err(schema(&path, format!("atom {index} is not in $.atoms")));
                }
            }
        }
        let mpath = format!("{path}.mechanisms");
        let mobj = expect_object(
            required(obj, "mechanisms", &path)?,
            &mpath,
            &Mechanism::ALL.map(Mechanism::key),
        )?;
        let mut parts = Vec::with_capacity(5);
        for m in Mechanism::ALL {
            let v = required(mobj, m.key(), &mpath)?;
            parts.push(read_matrix(v, &format!("{mpath}.{}", m.key()))?);
        }
        let parts: [CouplingTensor; 5] = parts.try_into().expect("five mechanisms");
        let total = obj
            .get("total")
            .map(|v| read_matrix(v, &format!("{path}.total")))
            .transpose()?;
        let mechanisms = MechanismSet::from_array(parts, total).map_err(|e| schema(&path, e.to_string()))?;
        let assembly = mechanisms.assemble_total();
        if !assembly.within_tolerance() {
            return Err(schema(
                format!("{path}.total"),
                format!(
                    "differs from the mechanism sum by {:.2e} Hz (tolerance {SUM_TOLERANCE_HZ:e})",
                    assembly.max_discrepancy().unwrap_or_default()
                ),
            ));
        }
        couplings.push(Coupling::new(a, b, mechanisms));
    }
    CouplingDocument::new(atoms, couplings).map_err(|e| schema("$", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_set() -> MechanismSet {
        let z = CouplingTensor::zeros(LAB_FRAME).unwrap();
        MechanismSet::from_array(std::array::from_fn(|_| z.clone()), None).unwrap()
    }

    const MINIMAL: &str = r#"{"units": "Hz", "couplings": [{"a": 1, "b": 2, "mechanisms": {
        "dso": [[0,0,0],[0,0,0],[0,0,0]], "pso": [[0,0,0],[0,0,0],[0,0,0]],
        "fc": [[0,0,0],[0,0,0],[0,0,0]], "sd": [[0,0,0],[0,0,0],[0,0,0]],
        "sdfc": [[0,0,0],[0,0,0],[0,0,0]]}}]}"#;

    #[test]
    fn minimal_canonical_document() {
        let doc = read_canonical(MINIMAL).unwrap();
        assert_eq!(doc.couplings().len(), 1);
        assert_eq!(doc.get(2, 1).unwrap().total().values(), &Mat3::zeros());
        assert!(doc.atoms().is_none());
    }

    #[test]
    fn wrong_arity_names_path() {
        let bad = MINIMAL.replacen("\"fc\": [[0,0,0],[0,0,0],[0,0,0]]", "\"fc\": [[0,0],[0,0],[0,0]]", 1);
        let err = read_canonical(&bad).unwrap_err();
        assert_eq!(
            err,
            AdapterError::Schema {
                path: "$.couplings[0].mechanisms.fc[0]".into(),
                message: "expected 3 numbers, found 2".into()
            }
        );
        let bad = MINIMAL.replacen("\"fc\": [[0,0,0],[0,0,0],[0,0,0]]", "\"fc\": [[0,0,0],[0,0,0]]", 1);
        assert!(read_canonical(&bad).unwrap_err().to_string().contains("mechanisms.fc"));
    }

    #[test]
    fn canonical_schema_errors() {
        let missing = MINIMAL.replacen("\"sd\": [[0,0,0],[0,0,0],[0,0,0]],", "", 1);
        assert!(
            matches!(read_canonical(&missing), Err(AdapterError::Schema { path, .. }) if path == "$.couplings[0].mechanisms.sd")
        );
        let reversed = MINIMAL.replacen("\"a\": 1, \"b\": 2", "\"a\": 2, \"b\": 1", 1);
        assert!(
            matches!(read_canonical(&reversed), Err(AdapterError::Schema { path, .. }) if path == "$.couplings[0]")
        );
        let units = MINIMAL.replacen("\"Hz\"", "\"MHz\"", 1);
        assert!(matches!(read_canonical(&units), Err(AdapterError::Schema { path, .. }) if path == "$.units"));
        assert!(matches!(read_canonical("{"), Err(AdapterError::Json(_))));
        let extra = MINIMAL.replacen("\"units\"", "\"unit\": 1, \"units\"", 1);
        assert!(matches!(read_canonical(&extra), Err(AdapterError::Schema { path, .. }) if path == "$.unit"));
    }

    #[test]
    fn duplicate_pairs_rejected() {
        let item = r#"{"a": 1, "b": 2, "mechanisms": {"dso": [[0,0,0],[0,0,0],[0,0,0]], "pso": [[0,0,0],[0,0,0],[0,0,0]], "fc": [[0,0,0],[0,0,0],[0,0,0]], "sd": [[0,0,0],[0,0,0],[0,0,0]], "sdfc": [[0,0,0],[0,0,0],[0,0,0]]}}"#;
        let text = format!(r#"{{"units": "Hz", "couplings": [{item}, {item}]}}"#);
        let err = read_canonical(&text).unwrap_err();
        assert!(err.to_string().contains("duplicate pair (1, 2)"), "{err}");
    }

    #[test]
    fn mismatched_total_is_a_schema_error() {
        let text = MINIMAL.replacen("}}]}", "}, \"total\": [[1,0,0],[0,0,0],[0,0,0]]}]}", 1);
        assert!(
            matches!(read_canonical(&text), Err(AdapterError::Schema { path, .. }) if path == "$.couplings[0].total")
        );
    }

    #[test]
    fn empty_document_round_trips() {
        let doc = CouplingDocument::new(None, vec![]).unwrap();
        let text = write_canonical(&doc);
        assert_eq!(text, "{\n  \"units\": \"Hz\",\n  \"couplings\": []\n}\n");
        assert_eq!(read_canonical(&text).unwrap(), doc);
    }

    #[test]
    fn shortest_round_trip_numbers() {
        let t = CouplingTensor::diagonal(29.7988, 0.1 + 0.2, -0.0, LAB_FRAME).unwrap();
        let z = CouplingTensor::zeros(LAB_FRAME).unwrap();
        let set = MechanismSet::new(t, z.clone(), z.clone(), z.clone(), z, None).unwrap();
        let doc = CouplingDocument::new(None, vec![Coupling::new(1, 2, set)]).unwrap();
        let text = write_canonical(&doc);
        assert!(text.contains("29.7988"));
        let back = read_canonical(&text).unwrap();
        let v = back.couplings()[0].mechanisms.get(Mechanism::Dso).values();
        assert_eq!(v[(0, 0)], 29.7988);
        assert_eq!(v[(1, 1)], 0.1 + 0.2);
        assert_eq!(write_canonical(&back), text);
    }

    #[test]
    fn document_validation() {
        let err = CouplingDocument::new(None, vec![Coupling::new(3, 3, zero_set())]).unwrap_err();
        assert_eq!(err, DocumentError::Order { a: 3, b: 3 });
        let atoms = vec![Atom::new(1, "C", Vec3::zeros())];
        let err = CouplingDocument::new(Some(atoms), vec![Coupling::new(1, 2, zero_set())]).unwrap_err();
        assert_eq!(err, DocumentError::UnknownAtom { a: 1, b: 2, index: 2 });
    }

    #[test]
    fn header_classification() {
        let m = |s| classify_header(s);
        assert_eq!(
            m(" Spin-dipolar/Fermi contact cross term contribution (Hz)"),
            Some(BlockKind::Mechanism(Mechanism::SdFc))
        );
        assert_eq!(
            m(" SD/FC contribution (Hz)"),
            Some(BlockKind::Mechanism(Mechanism::SdFc))
        );
        assert_eq!(
            m(" Spin-Dipolar contribution (Hz)"),
            Some(BlockKind::Mechanism(Mechanism::Sd))
        );
        assert_eq!(
            m(" Fermi-contact contribution (Hz)"),
            Some(BlockKind::Mechanism(Mechanism::Fc))
        );
        assert_eq!(
            m(" Diamagnetic contribution (Hz)"),
            Some(BlockKind::Mechanism(Mechanism::Dso))
        );
        assert_eq!(
            m(" Paramagnetic contribution (Hz)"),
            Some(BlockKind::Mechanism(Mechanism::Pso))
        );
        assert_eq!(m(" Total spin-spin coupling tensor (Hz)"), Some(BlockKind::Total));
        assert_eq!(m("TOTAL RUN TIME: 0 days 1 hours"), None);
    }

    #[test]
    fn non_hz_units_are_fatal() {
        assert_eq!(
            check_units(" Fermi-contact contribution (MHz)", 7),
            Err(AdapterError::Units {
                line: 7,
                unit: "MHz".into()
            })
        );
        assert!(check_units(" Fermi-contact contribution (Hz)", 7).is_ok());
        assert!(check_units(" Total (isotropic part)", 7).is_ok());
    }

    #[test]
    fn fortran_exponents_and_axis_labels() {
        assert_eq!(numeric_tokens("X  1.0D-01 2 3"), Some(vec![0.1, 2.0, 3.0]));
        assert_eq!(numeric_tokens("   X   Y   Z"), Some(vec![]));
        assert_eq!(numeric_tokens(" Fermi-contact"), None);
    }

    #[test]
    fn empty_text_has_no_section() {
        assert_eq!(parse_producer_output("").unwrap_err(), AdapterError::NoCouplingSection);
        assert_eq!(AdapterError::NoCouplingSection.to_string(), "no coupling section found");
    }
}
