//! Cluster geometry: XYZ input and output, ideal diamond-lattice clusters,
//! the bond graph, pair enumeration with bond-path order, and classification
//! of bond directions against the cluster axis.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::tensor::{bond_frame_rotation, Rotation, TensorError, Vec3};

/// Nearest-neighbour C–C distance in diamond, Å.
pub const DIAMOND_BOND_LENGTH: f64 = 1.545;

/// Default bonding cutoff, Å. Sits between the diamond first-neighbour
/// (1.54 Å) and second-neighbour (2.52 Å) distances.
pub const DEFAULT_MAX_BOND: f64 = 1.70;

/// `arccos(−1/3)` in degrees.
pub const TETRAHEDRAL_ANGLE_DEG: f64 = 109.471_220_634_490_69;

const COINCIDENT: f64 = 1e-6;
const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("line 1: missing atom count")]
    MissingCount,
    #[error("line 1: malformed atom count `{0}`")]
    BadCount(String),
    #[error("atom count mismatch: header declares {declared}, found {found} atom lines")]
    CountMismatch { declared: usize, found: usize },
    #[error("line {line}: expected `element x y z`, got `{text}`")]
    BadAtomLine { line: usize, text: String },
    #[error("line {line}: non-numeric coordinate `{text}`")]
    BadCoordinate { line: usize, text: String },
    #[error("atom {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("atom index {0} appears more than once")]
    DuplicateIndex(usize),
    #[error("no atom with index {0}")]
    UnknownAtom(usize),
    #[error("atoms {a} and {b} are at the same position")]
    CoincidentAtoms { a: usize, b: usize },
    #[error("reference axis has zero length")]
    ZeroAxis,
    #[error("direction is not a unit vector (|u| = {0})")]
    NotUnit(f64),
    #[error("bond graph has not been built")]
    NoBondGraph,
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("lattice constant must be positive, got {0}")]
    NonPositiveLatticeConstant(f64),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    /// 1-based label, as in the cluster figures.
    pub index: usize,
    pub element: String,
    /// Å.
    pub position: Vec3,
}

impl Atom {
    pub fn new(index: usize, element: impl Into<String>, position: Vec3) -> Self {
        Self {
            index,
            element: element.into(),
            position,
        }
    }

    /// `"C12"`-style label.
    pub fn label(&self) -> String {
        format!("{}{}", self.element, self.index)
    }
}

/// Orientation class of a bond (or any pair direction) relative to the
/// cluster axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondClass {
    NearParallel,
    Tetrahedral,
    Other,
}

impl BondClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BondClass::NearParallel => "near_parallel",
            BondClass::Tetrahedral => "tetrahedral",
            BondClass::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "near_parallel" | "nearparallel" | "parallel" => Some(BondClass::NearParallel),
            "tetrahedral" => Some(BondClass::Tetrahedral),
            "other" => Some(BondClass::Other),
            _ => None,
        }
    }
}

impl fmt::Display for BondClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Angular tolerances for [`classify_bond`], degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassTolerances {
    pub parallel_deg: f64,
    pub tetrahedral_deg: f64,
}

impl Default for ClassTolerances {
    fn default() -> Self {
        Self {
            parallel_deg: 15.0,
            tetrahedral_deg: 15.0,
        }
    }
}

/// Acute angle between two unit directions, degrees in `[0, 90]`.
pub fn axis_angle(u: &Vec3, axis: &Vec3) -> Result<f64, GeometryError> {
    for v in [u, axis] {
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(GeometryError::NotUnit(n));
        }
    }
    Ok(u.dot(axis).abs().min(1.0).acos().to_degrees())
}

/// Classifies the direction `u` against `axis`.
///
/// The folded angle θ ∈ [0°, 90°] is `NearParallel` when θ ≤ `parallel_deg`,
/// `Tetrahedral` when it is within `tetrahedral_deg` of 180° − 109.47°
/// (the fold of both 109.47° and 70.53°), and `Other` otherwise.
pub fn classify_bond(u: &Vec3, axis: &Vec3, tol: &ClassTolerances) -> Result<BondClass, GeometryError> {
    axis_angle(u, axis).map(|theta| class_for_angle(theta, tol))
}

fn class_for_angle(theta: f64, tol: &ClassTolerances) -> BondClass {
    if theta <= tol.parallel_deg {
        BondClass::NearParallel
    } else if (theta - (180.0 - TETRAHEDRAL_ANGLE_DEG)).abs() <= tol.tetrahedral_deg {
        BondClass::Tetrahedral
    } else {
        BondClass::Other
    }
}

/// One unordered atom pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
    /// Å.
    pub distance: f64,
    /// Fewest bonds connecting `a` and `b`; `None` when disconnected.
    pub n: Option<u32>,
    /// Folded angle between the a→b direction and the cluster axis, degrees.
    pub angle_to_axis: f64,
    pub class: BondClass,
}

impl Pair {
    pub fn is_bonded(&self) -> bool {
        self.n == Some(1)
    }
}

/// A set of atoms with an optional bond graph and a reference axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    atoms: Vec<Atom>,
    slots: BTreeMap<usize, usize>,
    bonds: Option<Vec<BTreeSet<usize>>>,
    axis: Vec3,
}

impl Cluster {
    pub fn new(atoms: Vec<Atom>) -> Result<Self, GeometryError> {
        let mut slots = BTreeMap::new();
        for (slot, atom) in atoms.iter().enumerate() {
            if !(atom.position.iter().all(|x| x.is_finite())) {
                return Err(GeometryError::NonFinite { index: atom.index });
            }
            if slots.insert(atom.index, slot).is_some() {
                return Err(GeometryError::DuplicateIndex(atom.index));
            }
        }
        Ok(Self {
            atoms,
            slots,
            bonds: None,
            axis: Vec3::z(),
        })
    }

    /// Replaces the reference axis; the vector is normalized.
    pub fn with_axis(mut self, axis: Vec3) -> Result<Self, GeometryError> {
        let n = axis.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(GeometryError::ZeroAxis);
        }
        self.axis = axis / n;
        Ok(self)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn axis(&self) -> &Vec3 {
        &self.axis
    }

    pub fn atom(&self, index: usize) -> Result<&Atom, GeometryError> {
        self.slots
            .get(&index)
            .map(|&s| &self.atoms[s])
            .ok_or(GeometryError::UnknownAtom(index))
    }

    pub fn has_bond_graph(&self) -> bool {
        self.bonds.is_some()
    }

    /// Connects every pair of atoms at most `max_bond` Å apart.
    pub fn build_bond_graph(mut self, max_bond: f64) -> Result<Self, GeometryError> {
        let n = self.atoms.len();
        let mut adj = vec![BTreeSet::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (self.atoms[j].position - self.atoms[i].position).norm();
                if d < COINCIDENT {
                    return Err(GeometryError::CoincidentAtoms {
                        a: self.atoms[i].index,
                        b: self.atoms[j].index,
                    });
                }
                if d <= max_bond {
                    adj[i].insert(j);
                    adj[j].insert(i);
                }
            }
        }
        self.bonds = Some(adj);
        Ok(self)
    }

    /// Atom indices bonded to `index`, ascending by slot.
    pub fn neighbors(&self, index: usize) -> Result<Vec<usize>, GeometryError> {
        let bonds = self.bonds.as_ref().ok_or(GeometryError::NoBondGraph)?;
        let slot = *self.slots.get(&index).ok_or(GeometryError::UnknownAtom(index))?;
        Ok(bonds[slot].iter().map(|&s| self.atoms[s].index).collect())
    }

    /// Number of bonds in the graph.
    pub fn bond_count(&self) -> Result<usize, GeometryError> {
        let bonds = self.bonds.as_ref().ok_or(GeometryError::NoBondGraph)?;
        Ok(bonds.iter().map(BTreeSet::len).sum::<usize>() / 2)
    }

    fn bfs_from(&self, slot: usize) -> Vec<Option<u32>> {
        let bonds = self.bonds.as_ref().expect("bond graph checked by caller");
        let mut dist = vec![None; self.atoms.len()];
        dist[slot] = Some(0);
        let mut queue = VecDeque::from([slot]);
        while let Some(s) = queue.pop_front() {
            let d = dist[s].unwrap();
            for &t in &bonds[s] {
                if dist[t].is_none() {
                    dist[t] = Some(d + 1);
                    queue.push_back(t);
                }
            }
        }
        dist
    }

    fn make_pair(&self, sa: usize, sb: usize, n: Option<u32>, tol: &ClassTolerances) -> Result<Pair, GeometryError> {
        let (a, b) = (&self.atoms[sa], &self.atoms[sb]);
        let delta = b.position - a.position;
        let distance = delta.norm();
        if distance < COINCIDENT {
            return Err(GeometryError::CoincidentAtoms { a: a.index, b: b.index });
        }
        let angle_to_axis = axis_angle(&(delta / distance), &self.axis)?;
        Ok(Pair {
            a: a.index,
            b: b.index,
            distance,
            n,
            angle_to_axis,
            class: class_for_angle(angle_to_axis, tol),
        })
    }

    /// Pair record for atoms `a` and `b` (in either order; the result has
    /// `a < b`).
    pub fn pair(&self, a: usize, b: usize, tol: &ClassTolerances) -> Result<Pair, GeometryError> {
        if self.bonds.is_none() {
            return Err(GeometryError::NoBondGraph);
        }
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let sa = *self.slots.get(&a).ok_or(GeometryError::UnknownAtom(a))?;
        let sb = *self.slots.get(&b).ok_or(GeometryError::UnknownAtom(b))?;
        if sa == sb {
            return Err(GeometryError::CoincidentAtoms { a, b });
        }
        let n = self.bfs_from(sa)[sb];
        self.make_pair(sa, sb, n, tol)
    }

    /// Every unordered pair of atoms whose element matches `element`
    /// (case-insensitive), sorted by `(a, b)`.
    pub fn enumerate_pairs(&self, element: &str, tol: &ClassTolerances) -> Result<Vec<Pair>, GeometryError> {
        if self.bonds.is_none() {
            return Err(GeometryError::NoBondGraph);
        }
        let mut members: Vec<usize> = (0..self.atoms.len())
            .filter(|&s| self.atoms[s].element.eq_ignore_ascii_case(element))
            .collect();
        members.sort_by_key(|&s| self.atoms[s].index);

        let mut pairs = Vec::with_capacity(members.len() * members.len().saturating_sub(1) / 2);
        for (i, &sa) in members.iter().enumerate() {
            let dist = self.bfs_from(sa);
            for &sb in &members[i + 1..] {
                pairs.push(self.make_pair(sa, sb, dist[sb], tol)?);
            }
        }
        Ok(pairs)
    }

    /// Bond-frame rotation for the a→b direction.
    pub fn bond_frame_for_pair(&self, a: usize, b: usize) -> Result<Rotation, GeometryError> {
        let pa = self.atom(a)?.position;
        let pb = self.atom(b)?.position;
        let d = pb - pa;
        let norm = d.norm();
        if norm < COINCIDENT {
            return Err(GeometryError::CoincidentAtoms { a, b });
        }
        Ok(bond_frame_rotation(&(d / norm))?)
    }

    /// Applies `rotation` to every position and to the axis.
    pub fn rotated(&self, rotation: &Rotation) -> Self {
        let mut out = self.clone();
        for atom in &mut out.atoms {
            atom.position = rotation.apply(&atom.position);
        }
        out.axis = rotation.apply(&self.axis);
        out
    }
}

/// Parses standard XYZ text. Atoms are indexed 1..N in file order; the bond
/// graph is left unbuilt and the axis is `(0, 0, 1)`.
pub fn parse_xyz(text: &str) -> Result<Cluster, GeometryError> {
    let mut lines = text.lines().enumerate();
    let count_line = lines
        .next()
        .map(|(_, l)| l.trim())
        .filter(|l| !l.is_empty())
        .ok_or(GeometryError::MissingCount)?;
    let declared: usize = count_line
        .parse()
        .map_err(|_| GeometryError::BadCount(count_line.to_owned()))?;
    // comment line
    lines.next();

    let mut atoms = Vec::with_capacity(declared);
    for (i, line) in lines {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(GeometryError::BadAtomLine {
                line: line_no,
                text: trimmed.to_owned(),
            });
        }
        let mut xyz = [0.0; 3];
        for (k, field) in fields[1..4].iter().enumerate() {
            xyz[k] = field.parse().map_err(|_| GeometryError::BadCoordinate {
                line: line_no,
                text: (*field).to_owned(),
            })?;
        }
        atoms.push(Atom::new(atoms.len() + 1, fields[0], Vec3::from(xyz)));
    }
    if atoms.len() != declared {
        return Err(GeometryError::CountMismatch {
            declared,
            found: atoms.len(),
        });
    }
    Cluster::new(atoms)
}

fn fmt_coord(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_owned()
    } else {
        s
    }
}

/// Writes XYZ text with coordinates to 6 decimals. Atom order is preserved.
pub fn write_xyz(cluster: &Cluster, comment: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", cluster.len());
    let _ = writeln!(out, "{}", comment.replace(['\n', '\r'], " "));
    for atom in cluster.atoms() {
        let p = &atom.position;
        let _ = writeln!(
            out,
            "{:<2} {:>12} {:>12} {:>12}",
            atom.element,
            fmt_coord(p.x),
            fmt_coord(p.y),
            fmt_coord(p.z)
        );
    }
    out
}

/// Crystal direction mapped onto the cluster axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrystalAxis {
    /// ⟨001⟩: the cubic axis.
    Cubic001,
    /// ⟨111⟩: a C–C bond direction.
    Bond111,
}

impl CrystalAxis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "001" | "100" | "010" => Some(CrystalAxis::Cubic001),
            "111" => Some(CrystalAxis::Bond111),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    /// Cubic lattice constant, Å.
    pub lattice_constant: f64,
    /// Sites within this distance of the origin site are kept, Å.
    pub radius: f64,
    pub orientation: CrystalAxis,
}

impl LatticeSpec {
    /// Diamond with the default lattice constant `4·d_CC/√3` (3.568 Å).
    pub fn new(radius: f64, orientation: CrystalAxis) -> Self {
        Self {
            lattice_constant: lattice_constant_for_bond(DIAMOND_BOND_LENGTH),
            radius,
            orientation,
        }
    }

    pub fn bond_length(&self) -> f64 {
        self.lattice_constant * 3f64.sqrt() / 4.0
    }
}

/// Cubic lattice constant of diamond with nearest-neighbour distance `d_cc`.
pub fn lattice_constant_for_bond(d_cc: f64) -> f64 {
    4.0 * d_cc / 3f64.sqrt()
}

const FCC: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]];

fn orientation_rotation(axis: CrystalAxis) -> Rotation {
    match axis {
        CrystalAxis::Cubic001 => Rotation::identity(),
        CrystalAxis::Bond111 => {
            bond_frame_rotation(&Vec3::new(1.0, 1.0, 1.0).normalize()).expect("(1,1,1)/√3 is a unit vector")
        }
    }
}

fn sort_key(p: &Vec3) -> [i64; 3] {
    [p.x, p.y, p.z].map(|v| (v * 1e6).round() as i64)
}

fn cluster_from_positions(mut positions: Vec<Vec3>, element: &str) -> Cluster {
    positions.sort_by_key(sort_key);
    let atoms = positions
        .into_iter()
        .enumerate()
        .map(|(i, p)| Atom::new(i + 1, element, p))
        .collect();
    Cluster::new(atoms).expect("generated positions are finite and uniquely indexed")
}

/// All diamond sites within `spec.radius` of the origin site, rotated so the
/// requested crystal direction lies along `(0, 0, 1)`, ordered
/// lexicographically by rotated coordinates and indexed from 1.
pub fn generate_diamond_cluster(spec: &LatticeSpec) -> Result<Cluster, GeometryError> {
    if spec.radius.is_nan() || spec.radius <= 0.0 {
        return Err(GeometryError::NonPositiveRadius(spec.radius));
    }
    if spec.lattice_constant.is_nan() || spec.lattice_constant <= 0.0 {
        return Err(GeometryError::NonPositiveLatticeConstant(spec.lattice_constant));
    }
    let a = spec.lattice_constant;
    let cells = (spec.radius / a).ceil() as i64 + 1;
    let rotation = orientation_rotation(spec.orientation);
    let cutoff = spec.radius + 1e-9;

    let mut positions = Vec::new();
    for i in -cells..=cells {
        for j in -cells..=cells {
            for k in -cells..=cells {
                for shift in [0.0, 0.25] {
                    for site in FCC {
                        let p = Vec3::new(
                            i as f64 + site[0] + shift,
                            j as f64 + site[1] + shift,
                            k as f64 + site[2] + shift,
                        ) * a;
                        if p.norm() <= cutoff {
                            positions.push(rotation.apply(&p));
                        }
                    }
                }
            }
        }
    }
    Ok(cluster_from_positions(positions, "C"))
}

/// Carbon skeleton of ideal adamantane (C₁₀) cut from the diamond lattice
/// with bond length `d_cc`, centred on the cage centre. Bridgehead carbons
/// come first (indices 1–4), then the six methylene carbons.
pub fn adamantane(d_cc: f64) -> Cluster {
    let a = lattice_constant_for_bond(d_cc);
    let frac = [
        [0.25, 0.25, 0.25],
        [0.75, 0.75, 0.25],
        [0.75, 0.25, 0.75],
        [0.25, 0.75, 0.75],
        [0.5, 0.5, 0.0],
        [0.5, 0.0, 0.5],
        [0.0, 0.5, 0.5],
        [0.5, 0.5, 1.0],
        [0.5, 1.0, 0.5],
        [1.0, 0.5, 0.5],
    ];
    let atoms = frac
        .iter()
        .enumerate()
        .map(|(i, f)| Atom::new(i + 1, "C", (Vec3::from(*f) - Vec3::repeat(0.5)) * a))
        .collect();
    Cluster::new(atoms).expect("fixed adamantane coordinates")
}

/// A ⟨111⟩ diamond cluster hosting an NV-like defect: the origin site becomes
/// the vacancy (removed) and its neighbour on the +Z bond becomes nitrogen.
/// Returns the cluster (re-indexed 1..N) and the vacancy position.
pub fn nv_center_cluster(radius: f64) -> Result<(Cluster, Vec3), GeometryError> {
    let spec = LatticeSpec::new(radius, CrystalAxis::Bond111);
    let full = generate_diamond_cluster(&spec)?;
    let vacancy = Vec3::zeros();
    let nitrogen = Vec3::new(0.0, 0.0, spec.bond_length());
    let atoms = full
        .atoms()
        .iter()
        .filter(|at| at.position.norm() > COINCIDENT)
        .enumerate()
        .map(|(i, at)| {
            let element = if (at.position - nitrogen).norm() < 1e-6 {
                "N"
            } else {
                "C"
            };
            Atom::new(i + 1, element, at.position)
        })
        .collect();
    Ok((Cluster::new(atoms)?, vacancy))
}
