//! Per-pair reports joining coupling documents with cluster geometry.
//!
//! Each pair's total tensor is turned into its bond frame (Z along the bond).
//! The transverse X/Y axes of that frame are a convention, so the report
//! diagonalizes the symmetric part of the transverse 2×2 block and lists its
//! larger eigenvalue as `j_xx` and the smaller as `j_yy`. The result depends
//! only on the tensor and the bond, not on how the cluster sits in the lab.

use std::fmt::Write as _;

use serde_json::json;
use thiserror::Error;

use crate::geometry::{BondClass, ClassTolerances, Cluster, GeometryError};
use crate::orca::CouplingDocument;
use crate::tensor::{CouplingTensor, Rotation, TensorError, Vec3};

/// Pairs with an atom within this distance (Å) of the vacancy are flagged.
/// The comparison is inclusive.
pub const NEAR_VACANCY_ANGSTROM: f64 = 1.7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("pair ({a}, {b}): atom {index} is not in the geometry")]
    MissingAtom { a: usize, b: usize, index: usize },
    #[error("pair ({a}, {b}): {source}")]
    Geometry { a: usize, b: usize, source: GeometryError },
    #[error("pair ({a}, {b}): {source}")]
    Tensor { a: usize, b: usize, source: TensorError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReportRow {
    pub a: usize,
    pub b: usize,
    pub label: String,
    pub n: Option<u32>,
    pub class: BondClass,
    pub j_xx: f64,
    pub j_yy: f64,
    pub j_zz: f64,
    pub j_iso: f64,
    pub delta_j: f64,
    pub distance: f64,
    pub vacancy_distance: Option<f64>,
    pub near_vacancy: Option<bool>,
}

/// Which pairs a report keeps. The default keeps everything.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairFilter {
    pub order: Option<u32>,
    pub classes: Option<Vec<BondClass>>,
}

impl PairFilter {
    pub fn order(n: u32) -> Self {
        Self {
            order: Some(n),
            classes: None,
        }
    }

    pub fn with_classes(mut self, classes: Vec<BondClass>) -> Self {
        self.classes = Some(classes);
        self
    }

    pub fn accepts(&self, n: Option<u32>, class: BondClass) -> bool {
        self.order.is_none_or(|order| n == Some(order)) && self.classes.as_ref().is_none_or(|c| c.contains(&class))
    }
}

/// `[j_xx, j_yy, j_zz]` of `total` after rotating it into the bond frame.
pub fn bond_frame_diagonal(total: &CouplingTensor, bond: &Rotation) -> Result<[f64; 3], TensorError> {
    let t = total.rotate(bond, "bond")?;
    let v = t.values();
    let (p, q) = (v[(0, 0)], v[(1, 1)]);
    let off = 0.5 * (v[(0, 1)] + v[(1, 0)]);
    let mean = 0.5 * (p + q);
    let radius = (0.25 * (p - q).powi(2) + off * off).sqrt();
    Ok([mean + radius, mean - radius, v[(2, 2)]])
}

fn row_for(
    doc_pair: (usize, usize),
    total: &CouplingTensor,
    cluster: &Cluster,
    tol: &ClassTolerances,
) -> Result<PairReportRow, ReportError> {
    let (a, b) = doc_pair;
    for index in [a, b] {
        if cluster.atom(index).is_err() {
            return Err(ReportError::MissingAtom { a, b, index });
        }
    }
    let geometry = |source| ReportError::Geometry { a, b, source };
    let pair = cluster.pair(a, b, tol).map_err(geometry)?;
    let frame = cluster.bond_frame_for_pair(a, b).map_err(geometry)?;
    let [j_xx, j_yy, j_zz] =
        bond_frame_diagonal(total, &frame).map_err(|source| ReportError::Tensor { a, b, source })?;
    let label = format!(
        "{}-{}",
        cluster.atom(a).map_err(geometry)?.label(),
        cluster.atom(b).map_err(geometry)?.label()
    );
    Ok(PairReportRow {
        a,
        b,
        label,
        n: pair.n,
        class: pair.class,
        j_xx,
        j_yy,
        j_zz,
        j_iso: (j_xx + j_yy + j_zz) / 3.0,
        delta_j: j_zz - 0.5 * (j_xx + j_yy),
        distance: pair.distance,
        vacancy_distance: None,
        near_vacancy: None,
    })
}

/// Bond-frame diagonals, isotropic constants and anisotropies for every pair
/// of `doc` accepted by `filter`, sorted by `(a, b)`. The cluster needs a bond
/// graph.
pub fn table1_report(
    doc: &CouplingDocument,
    cluster: &Cluster,
    filter: &PairFilter,
    tol: &ClassTolerances,
) -> Result<Vec<PairReportRow>, ReportError> {
    let mut rows = Vec::new();
    for c in doc.couplings() {
        let row = row_for((c.a, c.b), &c.total(), cluster, tol)?;
        if filter.accepts(row.n, row.class) {
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    JIso,
    JXx,
    JYy,
    JZz,
}

impl Quantity {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "j_iso" => Some(Self::JIso),
            "j_xx" => Some(Self::JXx),
            "j_yy" => Some(Self::JYy),
            "j_zz" => Some(Self::JZz),
            _ => None,
        }
    }

    pub fn of(self, row: &PairReportRow) -> f64 {
        match self {
            Self::JIso => row.j_iso,
            Self::JXx => row.j_xx,
            Self::JYy => row.j_yy,
            Self::JZz => row.j_zz,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarSeries {
    pub label: String,
    pub value: f64,
    pub group: Option<u32>,
}

/// One bar per pair, ordered by bond order `n` (disconnected pairs last),
/// then by `(a, b)`.
pub fn bar_data(
    doc: &CouplingDocument,
    cluster: &Cluster,
    quantity: Quantity,
    tol: &ClassTolerances,
) -> Result<Vec<BarSeries>, ReportError> {
    let mut rows = table1_report(doc, cluster, &PairFilter::default(), tol)?;
    rows.sort_by_key(|r| (r.n.unwrap_or(u32::MAX), r.a, r.b));
    Ok(rows
        .iter()
        .map(|r| BarSeries {
            label: r.label.clone(),
            value: quantity.of(r),
            group: r.n,
        })
        .collect())
}

/// Annotates rows with the distance from the nearer atom to `vacancy`.
pub fn annotate_vacancy(rows: &mut [PairReportRow], cluster: &Cluster, vacancy: &Vec3) {
    for row in rows {
        let d = [row.a, row.b]
            .iter()
            .filter_map(|&i| cluster.atom(i).ok())
            .map(|atom| (atom.position - vacancy).norm())
            .fold(f64::INFINITY, f64::min);
        row.vacancy_distance = Some(d);
        row.near_vacancy = Some(d <= NEAR_VACANCY_ANGSTROM);
    }
}

pub fn vacancy_proximity_report(
    doc: &CouplingDocument,
    cluster: &Cluster,
    filter: &PairFilter,
    tol: &ClassTolerances,
    vacancy: &Vec3,
) -> Result<Vec<PairReportRow>, ReportError> {
    let mut rows = table1_report(doc, cluster, filter, tol)?;
    annotate_vacancy(&mut rows, cluster, vacancy);
    Ok(rows)
}

/// Mean isotropic constant of `rows`, `None` when empty.
pub fn mean_j_iso(rows: &[PairReportRow]) -> Option<f64> {
    (!rows.is_empty()).then(|| rows.iter().map(|r| r.j_iso).sum::<f64>() / rows.len() as f64)
}

/// Each row's `j_iso` divided by the mean `j_iso` of the rows selected as
/// baseline. `None` when the baseline is empty.
pub fn baseline_ratios(rows: &[PairReportRow], is_baseline: impl Fn(&PairReportRow) -> bool) -> Option<Vec<f64>> {
    let baseline: Vec<PairReportRow> = rows.iter().filter(|r| is_baseline(r)).cloned().collect();
    let mean = mean_j_iso(&baseline)?;
    Some(rows.iter().map(|r| r.j_iso / mean).collect())
}

fn hz(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_owned()
    } else {
        s
    }
}

fn order_str(n: Option<u32>) -> String {
    n.map_or_else(|| "inf".to_owned(), |n| n.to_string())
}

/// Report CSV, Hz to 2 decimals. Vacancy columns appear when any row has them.
pub fn rows_to_csv(rows: &[PairReportRow]) -> String {
    let vacancy = rows.iter().any(|r| r.vacancy_distance.is_some());
    let mut out = String::from("a,b,n,class,j_xx_hz,j_yy_hz,j_zz_hz,j_iso_hz,delta_j_hz,distance_angstrom");
    if vacancy {
        out.push_str(",vacancy_distance_angstrom,near_vacancy");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.4}",
            r.a,
            r.b,
            order_str(r.n),
            r.class,
            hz(r.j_xx),
            hz(r.j_yy),
            hz(r.j_zz),
            hz(r.j_iso),
            hz(r.delta_j),
            r.distance
        );
        if vacancy {
            let d = r.vacancy_distance.map_or_else(String::new, |d| format!("{d:.4}"));
            let flag = r.near_vacancy.map_or_else(String::new, |f| f.to_string());
            let _ = write!(out, ",{d},{flag}");
        }
        out.push('\n');
    }
    out
}

/// Report rows as a JSON array at full precision.
pub fn rows_to_json(rows: &[PairReportRow]) -> String {
    let items: Vec<_> = rows
        .iter()
        .map(|r| {
            json!({
                "a": r.a,
                "b": r.b,
                "label": r.label,
                "n": r.n,
                "class": r.class.as_str(),
                "j_xx_hz": r.j_xx,
                "j_yy_hz": r.j_yy,
                "j_zz_hz": r.j_zz,
                "j_iso_hz": r.j_iso,
                "delta_j_hz": r.delta_j,
                "distance_angstrom": r.distance,
                "vacancy_distance_angstrom": r.vacancy_distance,
                "near_vacancy": r.near_vacancy,
            })
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&items).expect("report rows serialize");
    s.push('\n');
    s
}

pub fn bars_to_csv(bars: &[BarSeries]) -> String {
    let mut out = String::from("label,group_n,value_hz\n");
    for bar in bars {
        let _ = writeln!(out, "{},{},{}", bar.label, order_str(bar.group), hz(bar.value));
    }
    out
}
