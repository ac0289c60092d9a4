//! Exact 3×3 algebra for indirect spin–spin coupling tensors.
//!
//! A [`CouplingTensor`] is a real 3×3 matrix in Hz tagged with the name of
//! the frame it is expressed in. Row and column indices run over X, Y, Z.
//! Tensors are never symmetrized behind the caller's back: the antisymmetric
//! part of a computed coupling tensor is kept and reported by
//! [`CouplingTensor::decompose`].
//!
//! Rotations are active and right-handed. A tensor transforms as
//! `J' = R J Rᵀ`, so [`bond_frame_rotation`] returns the matrix whose rows are
//! the bond-frame axes written in lab coordinates.

use std::fmt;

use nalgebra::{Matrix3, Unit, Vector3};
use thiserror::Error;

pub type Mat3 = Matrix3<f64>;
pub type Vec3 = Vector3<f64>;

/// Allowed element-wise discrepancy between a declared total and the sum of
/// the five mechanism contributions. Producer matrices are printed to four
/// decimals, so five rounded addends plus a rounded total stay below this.
pub const SUM_TOLERANCE_HZ: f64 = 5e-4;

/// Orthogonality and determinant tolerance for [`Rotation`].
pub const ROTATION_TOLERANCE: f64 = 1e-12;

/// A bond closer than this (as `|u × x̂|`) to the lab X axis takes its frame
/// from lab Y instead.
pub const BOND_AXIS_FALLBACK: f64 = 1e-6;

const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("tensor entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("frame label is empty")]
    EmptyFrame,
    #[error("{mechanism} contribution is in frame `{found}`, expected `{expected}`")]
    FrameMismatch {
        mechanism: Mechanism,
        expected: String,
        found: String,
    },
    #[error("declared total is in frame `{found}`, expected `{expected}`")]
    TotalFrameMismatch { expected: String, found: String },
    #[error("not a proper rotation: |RᵀR - I| = {orthogonality:.3e}, det = {det}")]
    NotARotation { orthogonality: f64, det: f64 },
    #[error("direction vector has zero length")]
    ZeroVector,
    #[error("direction vector is not normalized (|u| = {0})")]
    NotNormalized(f64),
}

/// Cartesian axis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// The five physical contributions to an indirect coupling tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mechanism {
    /// Diamagnetic spin–orbit.
    Dso,
    /// Paramagnetic spin–orbit.
    Pso,
    /// Fermi contact.
    Fc,
    /// Spin–dipolar.
    Sd,
    /// Spin–dipolar / Fermi-contact cross term.
    SdFc,
}

impl Mechanism {
    pub const ALL: [Mechanism; 5] = [
        Mechanism::Dso,
        Mechanism::Pso,
        Mechanism::Fc,
        Mechanism::Sd,
        Mechanism::SdFc,
    ];

    /// Key used in the canonical interchange format.
    pub fn key(self) -> &'static str {
        match self {
            Mechanism::Dso => "dso",
            Mechanism::Pso => "pso",
            Mechanism::Fc => "fc",
            Mechanism::Sd => "sd",
            Mechanism::SdFc => "sdfc",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.key() == key)
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// A 3×3 coupling tensor in Hz with a named reference frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTensor {
    values: Mat3,
    frame: String,
}

impl CouplingTensor {
    pub fn new(values: Mat3, frame: impl Into<String>) -> Result<Self, TensorError> {
        let frame = frame.into();
        if frame.is_empty() {
            return Err(TensorError::EmptyFrame);
        }
        for row in 0..3 {
            for col in 0..3 {
                if !values[(row, col)].is_finite() {
                    return Err(TensorError::NonFinite { row, col });
                }
            }
        }
        Ok(Self { values, frame })
    }

    /// Builds a tensor from row-major nested arrays (rows X, Y, Z).
    pub fn from_rows(rows: [[f64; 3]; 3], frame: impl Into<String>) -> Result<Self, TensorError> {
        Self::new(Mat3::from_fn(|r, c| rows[r][c]), frame)
    }

    pub fn zeros(frame: impl Into<String>) -> Result<Self, TensorError> {
        Self::new(Mat3::zeros(), frame)
    }

    pub fn diagonal(xx: f64, yy: f64, zz: f64, frame: impl Into<String>) -> Result<Self, TensorError> {
        Self::new(Mat3::from_diagonal(&Vec3::new(xx, yy, zz)), frame)
    }

    pub fn values(&self) -> &Mat3 {
        &self.values
    }

    pub fn frame(&self) -> &str {
        &self.frame
    }

    pub fn get(&self, k: Axis, l: Axis) -> f64 {
        self.values[(k.index(), l.index())]
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = &self.values;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    /// `(J_XX, J_YY, J_ZZ)`.
    pub fn diag(&self) -> [f64; 3] {
        [self.values[(0, 0)], self.values[(1, 1)], self.values[(2, 2)]]
    }

    /// Same values, different frame label.
    pub fn relabel(&self, frame: impl Into<String>) -> Result<Self, TensorError> {
        Self::new(self.values, frame)
    }

    /// Isotropic constant `J_iso = Tr J / 3`.
    pub fn isotropic(&self) -> f64 {
        self.values.trace() / 3.0
    }

    /// Axial anisotropy `ΔJ = J_ZZ − (J_XX + J_YY)/2`, evaluated in whatever
    /// frame the tensor is in. Meaningful when Z is the symmetry axis, which
    /// for a one-bond coupling is the bond frame.
    pub fn axial_anisotropy(&self) -> f64 {
        let [xx, yy, zz] = self.diag();
        zz - (xx + yy) / 2.0
    }

    /// Rank-0/1/2 split of the tensor.
    pub fn decompose(&self) -> TensorSummary {
        let j = &self.values;
        let j_iso = self.isotropic();
        let sym = (j + j.transpose()) * 0.5;
        let sym_traceless = sym - Mat3::identity() * j_iso;
        let antisym = Vec3::new(
            (j[(1, 2)] - j[(2, 1)]) / 2.0,
            (j[(2, 0)] - j[(0, 2)]) / 2.0,
            (j[(0, 1)] - j[(1, 0)]) / 2.0,
        );
        let eig = sym.symmetric_eigenvalues();
        let span = eig.max() - eig.min();
        TensorSummary {
            j_iso,
            delta_j: self.axial_anisotropy(),
            antisym,
            sym_traceless,
            span,
        }
    }

    /// `J' = R J Rᵀ`, relabelled to `new_frame`.
    pub fn rotate(&self, rotation: &Rotation, new_frame: impl Into<String>) -> Result<Self, TensorError> {
        let r = rotation.matrix();
        Self::new(r * self.values * r.transpose(), new_frame)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.norm()
    }
}

/// Invariants of a coupling tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSummary {
    pub j_iso: f64,
    pub delta_j: f64,
    /// Dual vector of the antisymmetric part, `(a_X, a_Y, a_Z)`.
    pub antisym: Vec3,
    pub sym_traceless: Mat3,
    /// Largest minus smallest eigenvalue of the symmetric part.
    pub span: f64,
}

impl TensorSummary {
    /// `J_iso·I + sym_traceless + A`, where `A` is the antisymmetric matrix
    /// whose dual vector is `antisym`.
    pub fn reconstruct(&self) -> Mat3 {
        let a = &self.antisym;
        let anti = Mat3::new(0.0, a.z, -a.y, -a.z, 0.0, a.x, a.y, -a.x, 0.0);
        Mat3::identity() * self.j_iso + self.sym_traceless + anti
    }
}

/// A proper rotation matrix (orthogonal, det = +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Rotation {
    pub fn new(matrix: Mat3) -> Result<Self, TensorError> {
        let orthogonality = (matrix.transpose() * matrix - Mat3::identity()).amax();
        let det = matrix.determinant();
        if !(orthogonality <= ROTATION_TOLERANCE && (det - 1.0).abs() <= ROTATION_TOLERANCE) {
            return Err(TensorError::NotARotation { orthogonality, det });
        }
        Ok(Self(matrix))
    }

    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Counterclockwise rotation by `angle` radians about `axis`, looking from
    /// the tip of `axis` toward the origin.
    pub fn about_axis(axis: &Vec3, angle: f64) -> Result<Self, TensorError> {
        let norm = axis.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(TensorError::ZeroVector);
        }
        let axis = Unit::new_normalize(*axis);
        Ok(Self(nalgebra::Rotation3::from_axis_angle(&axis, angle).into_inner()))
    }

    /// `Rz(alpha) · Ry(beta) · Rz(gamma)`, angles in radians.
    pub fn from_euler_zyz(alpha: f64, beta: f64, gamma: f64) -> Self {
        let rz = |t: f64| nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), t).into_inner();
        let ry = nalgebra::Rotation3::from_axis_angle(&Vec3::y_axis(), beta).into_inner();
        Self(rz(alpha) * ry * rz(gamma))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }

    /// `self · other`: apply `other` first.
    pub fn compose(&self, other: &Rotation) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }
}

/// Rotation taking the unit bond direction `u` to `(0, 0, 1)`.
///
/// The new Y axis is `u × x̂` normalized, so the new X axis is the component
/// of lab X orthogonal to the bond. Bonds within [`BOND_AXIS_FALLBACK`] of
/// lab X keep lab Y (projected) as their Y axis instead; for `u = x̂` this is
/// a −90° rotation about Y.
pub fn bond_frame_rotation(u: &Vec3) -> Result<Rotation, TensorError> {
    let norm = u.norm();
    if norm == 0.0 {
        return Err(TensorError::ZeroVector);
    }
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(TensorError::NotNormalized(norm));
    }
    let z = u / norm;
    let cross = z.cross(&Vec3::x());
    let y = if cross.norm() < BOND_AXIS_FALLBACK {
        let ly = Vec3::y();
        (ly - z * z.dot(&ly)).normalize()
    } else {
        cross.normalize()
    };
    let x = y.cross(&z);
    Rotation::new(Mat3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]))
}

/// Mechanism contributions for one nuclear pair, all in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismSet {
    dso: CouplingTensor,
    pso: CouplingTensor,
    fc: CouplingTensor,
    sd: CouplingTensor,
    sdfc: CouplingTensor,
    total: Option<CouplingTensor>,
}

/// Result of [`MechanismSet::assemble_total`].
#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub total: CouplingTensor,
    /// `declared − sum`, element-wise, when a total was declared.
    pub discrepancy: Option<Mat3>,
}

impl Assembly {
    pub fn max_discrepancy(&self) -> Option<f64> {
        self.discrepancy.map(|d| d.amax())
    }

    pub fn within_tolerance(&self) -> bool {
        self.max_discrepancy().is_none_or(|d| d <= SUM_TOLERANCE_HZ)
    }
}

impl MechanismSet {
    pub fn new(
        dso: CouplingTensor,
        pso: CouplingTensor,
        fc: CouplingTensor,
        sd: CouplingTensor,
        sdfc: CouplingTensor,
        total: Option<CouplingTensor>,
    ) -> Result<Self, TensorError> {
        let frame = dso.frame().to_owned();
        let others = [
            (Mechanism::Pso, &pso),
            (Mechanism::Fc, &fc),
            (Mechanism::Sd, &sd),
            (Mechanism::SdFc, &sdfc),
        ];
        for (mechanism, t) in others {
            if t.frame() != frame {
                return Err(TensorError::FrameMismatch {
                    mechanism,
                    expected: frame,
                    found: t.frame().to_owned(),
                });
            }
        }
        if let Some(t) = &total {
            if t.frame() != frame {
                return Err(TensorError::TotalFrameMismatch {
                    expected: frame,
                    found: t.frame().to_owned(),
                });
            }
        }
        Ok(Self {
            dso,
            pso,
            fc,
            sd,
            sdfc,
            total,
        })
    }

    /// Builds a set from an array indexed in [`Mechanism::ALL`] order.
    pub fn from_array(parts: [CouplingTensor; 5], total: Option<CouplingTensor>) -> Result<Self, TensorError> {
        let [dso, pso, fc, sd, sdfc] = parts;
        Self::new(dso, pso, fc, sd, sdfc, total)
    }

    pub fn frame(&self) -> &str {
        self.dso.frame()
    }

    pub fn get(&self, mechanism: Mechanism) -> &CouplingTensor {
        match mechanism {
            Mechanism::Dso => &self.dso,
            Mechanism::Pso => &self.pso,
            Mechanism::Fc => &self.fc,
            Mechanism::Sd => &self.sd,
            Mechanism::SdFc => &self.sdfc,
        }
    }

    pub fn declared_total(&self) -> Option<&CouplingTensor> {
        self.total.as_ref()
    }

    pub fn without_total(&self) -> Self {
        Self {
            total: None,
            ..self.clone()
        }
    }

    /// Element-wise sum of the five contributions, with the per-element
    /// discrepancy against the declared total if there is one.
    pub fn assemble_total(&self) -> Assembly {
        let sum = Mechanism::ALL
            .iter()
            .fold(Mat3::zeros(), |acc, &m| acc + self.get(m).values());
        let discrepancy = self.total.as_ref().map(|t| t.values() - sum);
        let total = CouplingTensor {
            values: sum,
            frame: self.frame().to_owned(),
        };
        Assembly { total, discrepancy }
    }

    /// The declared total if present, otherwise the assembled sum.
    pub fn total(&self) -> CouplingTensor {
        match &self.total {
            Some(t) => t.clone(),
            None => self.assemble_total().total,
        }
    }

    /// Rotates every member (and the declared total) into `new_frame`.
    pub fn rotate(&self, rotation: &Rotation, new_frame: &str) -> Result<Self, TensorError> {
        let r = |t: &CouplingTensor| t.rotate(rotation, new_frame);
        Ok(Self {
            dso: r(&self.dso)?,
            pso: r(&self.pso)?,
            fc: r(&self.fc)?,
            sd: r(&self.sd)?,
            sdfc: r(&self.sdfc)?,
            total: self.total.as_ref().map(r).transpose()?,
        })
    }
}
