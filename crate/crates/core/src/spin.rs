//! Exact two-spin-½ NMR simulation.
//!
//! The Hamiltonian, in Hz, is
//!
//! ```text
//! H/h = −(ν_a I₁·n + ν_b I₂·n) + I₁·K·I₂,   ν_x = γ_x B / 2π + offset_x,   K = R (J + D) Rᵀ
//! ```
//!
//! with `n` the field direction (lab Z unless a [`LabFrame`] says otherwise)
//! and `R` the crystal orientation. Lines are transitions between eigenstates
//! with intensity `|⟨f| d·(I₁ + I₂) |i⟩|²` for detection axis `d` (lab X by
//! default). Populations are taken as equal.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;
use serde_json::Value;
use thiserror::Error;

use crate::tensor::{CouplingTensor, Mat3, Rotation, TensorError, Vec3};

/// Number of coupled spins. The basis dimension is `2^SPIN_COUNT`.
pub const SPIN_COUNT: usize = 2;
pub const BASIS_DIM: usize = 1 << SPIN_COUNT;

/// ¹³C gyromagnetic ratio, rad·s⁻¹·T⁻¹.
pub const GAMMA_13C: f64 = 6.728_284e7;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// μ₀/4π, T·m·A⁻¹.
pub const MU0_OVER_4PI: f64 = 1e-7;

/// Lines weaker than this are dropped.
pub const INTENSITY_FLOOR: f64 = 1e-12;
/// Lines closer than this are merged, unless eigenvalue round-off at the
/// problem's energy scale is larger (see [`merge_tolerance`]).
pub const MERGE_TOLERANCE_HZ: f64 = 1e-9;

const SYMMETRY_TOLERANCE: f64 = 1e-9;
const LAB: &str = "lab";

pub type HermitianMatrix = Matrix4<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("internuclear vector has zero length")]
    ZeroVector,
    #[error("dipolar tensor is not symmetric (largest asymmetry {0:.3e} Hz)")]
    DipolarNotSymmetric(f64),
    #[error("dipolar tensor is not traceless (trace {0:.3e} Hz)")]
    DipolarNotTraceless(f64),
    #[error("J tensor is in frame `{j}` but dipolar tensor is in frame `{d}`")]
    FrameMismatch { j: String, d: String },
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("sweep needs at least one step")]
    ZeroSteps,
    #[error("{0} must be a non-zero vector")]
    BadDirection(&'static str),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("spin system at {path}: {message}")]
    Schema { path: String, message: String },
}

/// Magnitude `b = (μ₀/4π) γ_a γ_b ħ / (2π r³)` in Hz for `r` in Å.
pub fn dipolar_prefactor_hz(r_angstrom: f64, gamma_a: f64, gamma_b: f64) -> f64 {
    let r = r_angstrom * 1e-10;
    MU0_OVER_4PI * gamma_a * gamma_b * HBAR / (2.0 * PI * r.powi(3))
}

/// Direct dipolar coupling tensor `D = −b (3êêᵀ − I)` in Hz, lab frame.
pub fn dipolar_tensor(r_vec: &Vec3, gamma_a: f64, gamma_b: f64) -> Result<CouplingTensor, SpinError> {
    let r = r_vec.norm();
    if !r.is_finite() {
        return Err(SpinError::NonFinite("internuclear vector"));
    }
    if r == 0.0 {
        return Err(SpinError::ZeroVector);
    }
    let e = r_vec / r;
    let b = dipolar_prefactor_hz(r, gamma_a, gamma_b);
    let d = (e * e.transpose() * 3.0 - Mat3::identity()) * -b;
    Ok(CouplingTensor::new(d, LAB)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    gamma_a: f64,
    gamma_b: f64,
    offset_a_hz: f64,
    offset_b_hz: f64,
    j_tensor: CouplingTensor,
    d_tensor: CouplingTensor,
    description: String,
}

impl SpinSystem {
    pub fn new(
        gamma_a: f64,
        gamma_b: f64,
        offset_a_hz: f64,
        offset_b_hz: f64,
        j_tensor: CouplingTensor,
        d_tensor: CouplingTensor,
    ) -> Result<Self, SpinError> {
        for (value, name) in [
            (gamma_a, "gamma_a"),
            (gamma_b, "gamma_b"),
            (offset_a_hz, "offset_a_hz"),
            (offset_b_hz, "offset_b_hz"),
        ] {
            if !value.is_finite() {
                return Err(SpinError::NonFinite(name));
            }
        }
        if j_tensor.frame() != d_tensor.frame() {
            return Err(SpinError::FrameMismatch {
                j: j_tensor.frame().to_owned(),
                d: d_tensor.frame().to_owned(),
            });
        }
        let d = d_tensor.values();
        let asym = (d - d.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE {
            return Err(SpinError::DipolarNotSymmetric(asym));
        }
        if d.trace().abs() > SYMMETRY_TOLERANCE {
            return Err(SpinError::DipolarNotTraceless(d.trace()));
        }
        Ok(Self {
            gamma_a,
            gamma_b,
            offset_a_hz,
            offset_b_hz,
            j_tensor,
            d_tensor,
            description: String::new(),
        })
    }

    /// Homonuclear ¹³C pair with scalar coupling only.
    pub fn scalar_13c(offset_a_hz: f64, offset_b_hz: f64, j_iso_hz: f64) -> Result<Self, SpinError> {
        Self::new(
            GAMMA_13C,
            GAMMA_13C,
            offset_a_hz,
            offset_b_hz,
            CouplingTensor::diagonal(j_iso_hz, j_iso_hz, j_iso_hz, LAB)?,
            CouplingTensor::zeros(LAB)?,
        )
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn gamma_a(&self) -> f64 {
        self.gamma_a
    }

    pub fn gamma_b(&self) -> f64 {
        self.gamma_b
    }

    pub fn offset_a_hz(&self) -> f64 {
        self.offset_a_hz
    }

    pub fn offset_b_hz(&self) -> f64 {
        self.offset_b_hz
    }

    pub fn j_tensor(&self) -> &CouplingTensor {
        &self.j_tensor
    }

    pub fn d_tensor(&self) -> &CouplingTensor {
        &self.d_tensor
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    /// Total coupling `J + D` in the crystal frame.
    pub fn coupling(&self) -> Mat3 {
        self.j_tensor.values() + self.d_tensor.values()
    }

    /// Resonance frequencies `(ν_a, ν_b)` in Hz at field `field_t`.
    pub fn larmor_hz(&self, field_t: f64) -> (f64, f64) {
        (
            self.gamma_a * field_t / (2.0 * PI) + self.offset_a_hz,
            self.gamma_b * field_t / (2.0 * PI) + self.offset_b_hz,
        )
    }

    /// Reads the JSON spin-system document.
    pub fn from_json(text: &str) -> Result<Self, SpinError> {
        let root: Value = serde_json::from_str(text).map_err(|e| SpinError::Json(e.to_string()))?;
        let obj = root.as_object().ok_or_else(|| schema("$", "expected an object"))?;
        const KEYS: [&str; 8] = [
            "gamma_a",
            "gamma_b",
            "offset_a_hz",
            "offset_b_hz",
            "j_tensor_hz",
            "r_vec_angstrom",
            "d_tensor_hz",
            "description",
        ];
        if let Some(extra) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(schema(format!("$.{extra}"), "unknown field"));
        }
        let number = |key: &str| -> Result<f64, SpinError> {
            obj.get(key)
                .ok_or_else(|| schema(format!("$.{key}"), "missing field"))?
                .as_f64()
                .ok_or_else(|| schema(format!("$.{key}"), "expected a number"))
        };
        let gamma_a = number("gamma_a")?;
        let gamma_b = number("gamma_b")?;
        let offset_a = number("offset_a_hz")?;
        let offset_b = number("offset_b_hz")?;
        let j = obj
            .get("j_tensor_hz")
            .ok_or_else(|| schema("$.j_tensor_hz", "missing field"))?;
        let j = CouplingTensor::new(json_matrix(j, "$.j_tensor_hz")?, LAB)?;
        let d = match (obj.get("r_vec_angstrom"), obj.get("d_tensor_hz")) {
            (Some(r), None) => dipolar_tensor(&json_vector(r, "$.r_vec_angstrom")?, gamma_a, gamma_b)?,
            (None, Some(d)) => CouplingTensor::new(json_matrix(d, "$.d_tensor_hz")?, LAB)?,
            _ => return Err(schema("$", "exactly one of r_vec_angstrom and d_tensor_hz is required")),
        };
        let description = match obj.get("description") {
            None => String::new(),
            Some(v) => v
                .as_str()
                .ok_or_else(|| schema("$.description", "expected a string"))?
                .to_owned(),
        };
        Ok(Self::new(gamma_a, gamma_b, offset_a, offset_b, j, d)?.with_description(description))
    }
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> SpinError {
    SpinError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn json_vector(v: &Value, path: &str) -> Result<Vec3, SpinError> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(path, "expected an array of 3 numbers"))?;
    if arr.len() != 3 {
        return Err(schema(path, format!("expected 3 numbers, found {}", arr.len())));
    }
    let mut out = Vec3::zeros();
    for (k, x) in arr.iter().enumerate() {
        out[k] = x
            .as_f64()
            .ok_or_else(|| schema(format!("{path}[{k}]"), "expected a number"))?;
    }
    Ok(out)
}

fn json_matrix(v: &Value, path: &str) -> Result<Mat3, SpinError> {
    let rows = v
        .as_array()
        .ok_or_else(|| schema(path, "expected a 3×3 nested array"))?;
    if rows.len() != 3 {
        return Err(schema(path, format!("expected 3 rows, found {}", rows.len())));
    }
    let mut m = Mat3::zeros();
    for (r, row) in rows.iter().enumerate() {
        m.set_row(r, &json_vector(row, &format!("{path}[{r}]"))?.transpose());
    }
    Ok(m)
}

/// Crystal orientation relative to the lab: tensors are rotated by it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation(pub Rotation);

impl Orientation {
    pub fn identity() -> Self {
        Self(Rotation::identity())
    }

    /// ZYZ Euler angles in degrees.
    pub fn from_euler_deg(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self(Rotation::from_euler_zyz(
            alpha.to_radians(),
            beta.to_radians(),
            gamma.to_radians(),
        ))
    }

    pub fn rotation(&self) -> &Rotation {
        &self.0
    }
}

impl Default for Orientation {
    fn default() -> Self {
        Self::identity()
    }
}

/// Field direction and detection axis in the lab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabFrame {
    field_direction: Vec3,
    detection_axis: Vec3,
}

impl LabFrame {
    pub fn new(field_direction: Vec3, detection_axis: Vec3) -> Result<Self, SpinError> {
        let unit = |v: Vec3, name| {
            let n = v.norm();
            if n.is_finite() && n > 0.0 {
                Ok(v / n)
            } else {
                Err(SpinError::BadDirection(name))
            }
        };
        Ok(Self {
            field_direction: unit(field_direction, "field direction")?,
            detection_axis: unit(detection_axis, "detection axis")?,
        })
    }

    pub fn field_direction(&self) -> &Vec3 {
        &self.field_direction
    }

    pub fn detection_axis(&self) -> &Vec3 {
        &self.detection_axis
    }
}

impl Default for LabFrame {
    fn default() -> Self {
        Self {
            field_direction: Vec3::z(),
            detection_axis: Vec3::x(),
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pauli_half() -> [Matrix2<Complex64>; 3] {
    let z = c(0.0, 0.0);
    [
        Matrix2::new(z, c(0.5, 0.0), c(0.5, 0.0), z),
        Matrix2::new(z, c(0.0, -0.5), c(0.0, 0.5), z),
        Matrix2::new(c(0.5, 0.0), z, z, c(-0.5, 0.0)),
    ]
}

fn kron(a: &Matrix2<Complex64>, b: &Matrix2<Complex64>) -> HermitianMatrix {
    HermitianMatrix::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// Spin operators `[I₁x, I₁y, I₁z]` and `[I₂x, I₂y, I₂z]` in the product
/// basis |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩.
pub fn spin_operators() -> ([HermitianMatrix; 3], [HermitianMatrix; 3]) {
    let s = pauli_half();
    let one = Matrix2::identity();
    (s.map(|m| kron(&m, &one)), s.map(|m| kron(&one, &m)))
}

fn project(ops: &[HermitianMatrix; 3], v: &Vec3) -> HermitianMatrix {
    ops[0] * c(v.x, 0.0) + ops[1] * c(v.y, 0.0) + ops[2] * c(v.z, 0.0)
}

/// `H/h` in Hz with the field along lab Z.
pub fn build_hamiltonian(sys: &SpinSystem, field_t: f64, orient: &Orientation) -> HermitianMatrix {
    build_hamiltonian_in(sys, field_t, orient, &LabFrame::default())
}

pub fn build_hamiltonian_in(sys: &SpinSystem, field_t: f64, orient: &Orientation, lab: &LabFrame) -> HermitianMatrix {
    let (i1, i2) = spin_operators();
    let (nu_a, nu_b) = sys.larmor_hz(field_t);
    let r = orient.rotation().matrix();
    let k = r * sys.coupling() * r.transpose();
    let n = lab.field_direction();
    let mut h = -(project(&i1, n) * c(nu_a, 0.0) + project(&i2, n) * c(nu_b, 0.0));
    for p in 0..3 {
        for q in 0..3 {
            if k[(p, q)] != 0.0 {
                h += i1[p] * i2[q] * c(k[(p, q)], 0.0);
            }
        }
    }
    h
}

/// Detection operator `d·(I₁ + I₂)`.
pub fn detection_operator(lab: &LabFrame) -> HermitianMatrix {
    let (i1, i2) = spin_operators();
    project(&i1, lab.detection_axis()) + project(&i2, lab.detection_axis())
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigensystem(h: &HermitianMatrix) -> (Vec<f64>, HermitianMatrix) {
    let sym = (h + h.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..BASIS_DIM).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = HermitianMatrix::from_fn(|r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// Line-merge tolerance for a problem whose eigenvalues reach `max_abs_energy`.
/// Double-precision eigenvalues carry absolute noise proportional to the
/// largest energy, which exceeds [`MERGE_TOLERANCE_HZ`] at high field.
pub fn merge_tolerance(max_abs_energy: f64) -> f64 {
    MERGE_TOLERANCE_HZ.max(64.0 * f64::EPSILON * max_abs_energy)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub frequency_hz: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub lines: Vec<Line>,
    pub field_t: f64,
}

impl Spectrum {
    pub fn total_intensity(&self) -> f64 {
        self.lines.iter().map(|l| l.intensity).sum()
    }

    /// `frequency_hz,intensity` CSV with shortest round-trip numbers.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_hz,intensity\n");
        self.write_rows(&mut out);
        out
    }

    fn write_rows(&self, out: &mut String) {
        for line in &self.lines {
            out.push_str(&format!("{},{}\n", line.frequency_hz, line.intensity));
        }
    }
}

pub fn spectrum(sys: &SpinSystem, field_t: f64, orient: &Orientation) -> Spectrum {
    spectrum_in(sys, field_t, orient, &LabFrame::default())
}

pub fn spectrum_in(sys: &SpinSystem, field_t: f64, orient: &Orientation, lab: &LabFrame) -> Spectrum {
    let h = build_hamiltonian_in(sys, field_t, orient, lab);
    let (energies, vectors) = eigensystem(&h);
    let moments = vectors.adjoint() * detection_operator(lab) * vectors;
    let scale = energies.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let tol = merge_tolerance(scale);

    let mut raw = Vec::new();
    for i in 0..BASIS_DIM {
        for f in i + 1..BASIS_DIM {
            let frequency_hz = (energies[f] - energies[i]).abs();
            let intensity = moments[(f, i)].norm_sqr();
            if frequency_hz >= tol && intensity >= INTENSITY_FLOOR {
                raw.push(Line {
                    frequency_hz,
                    intensity,
                });
            }
        }
    }
    raw.sort_by(|x, y| x.frequency_hz.total_cmp(&y.frequency_hz));

    let mut lines: Vec<Line> = Vec::with_capacity(raw.len());
    let mut last_raw = f64::NEG_INFINITY;
    for line in raw {
        match lines.last_mut() {
            Some(prev) if line.frequency_hz - last_raw < tol => {
                let w = prev.intensity + line.intensity;
                prev.frequency_hz = (prev.frequency_hz * prev.intensity + line.frequency_hz * line.intensity) / w;
                prev.intensity = w;
            }
            _ => lines.push(line),
        }
        last_raw = line.frequency_hz;
    }
    Spectrum { lines, field_t }
}

/// Spectra with the crystal turned about `axis` by `k·360°/steps`,
/// `k = 0..steps`, applied after `base`. Angles are returned in radians.
pub fn orientation_sweep(
    sys: &SpinSystem,
    field_t: f64,
    base: &Orientation,
    axis: &Vec3,
    steps: usize,
) -> Result<Vec<(f64, Spectrum)>, SpinError> {
    if steps == 0 {
        return Err(SpinError::ZeroSteps);
    }
    if !axis.norm().is_normal() {
        return Err(SpinError::BadDirection("sweep axis"));
    }
    (0..steps)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / steps as f64;
            let turn = Rotation::about_axis(axis, angle)?;
            let orient = Orientation(turn.compose(base.rotation()));
            Ok((angle, spectrum(sys, field_t, &orient)))
        })
        .collect()
}

/// CSV for a sweep: one `# angle=<deg>` comment line and one
/// `frequency_hz,intensity` block per angle.
pub fn sweep_to_csv(sweep: &[(f64, Spectrum)]) -> String {
    let mut out = String::new();
    for (angle, spec) in sweep {
        out.push_str(&format!("# angle={}\n", angle.to_degrees()));
        out.push_str("frequency_hz,intensity\n");
        spec.write_rows(&mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const LOW_FIELD: f64 = 1e-3;

    fn ab_quartet(nu_a: f64, nu_b: f64, j: f64) -> [(f64, f64); 4] {
        let mean = (nu_a + nu_b) / 2.0;
        let c = 0.5 * ((nu_b - nu_a).powi(2) + j * j).sqrt();
        let s = j / (2.0 * c);
        [
            (mean - c - j / 2.0, (1.0 - s) / 4.0),
            (mean - c + j / 2.0, (1.0 + s) / 4.0),
            (mean + c - j / 2.0, (1.0 + s) / 4.0),
            (mean + c + j / 2.0, (1.0 - s) / 4.0),
        ]
    }

    #[test]
    fn prefactor_at_one_bond_distance() {
        let b = dipolar_prefactor_hz(1.54, GAMMA_13C, GAMMA_13C);
        assert!((b - 2080.0).abs() / 2080.0 < 0.01, "{b}");
    }

    #[test]
    fn dipolar_tensor_is_traceless_and_axial() {
        let d = dipolar_tensor(&Vec3::new(0.0, 0.0, 1.54), GAMMA_13C, GAMMA_13C).unwrap();
        let b = dipolar_prefactor_hz(1.54, GAMMA_13C, GAMMA_13C);
        assert!((d.get(crate::tensor::Axis::Z, crate::tensor::Axis::Z) + 2.0 * b).abs() < 1e-9);
        assert!((d.get(crate::tensor::Axis::X, crate::tensor::Axis::X) - b).abs() < 1e-9);
        assert!(d.values().trace().abs() < 1e-9);
        assert_eq!(dipolar_tensor(&Vec3::zeros(), 1.0, 1.0), Err(SpinError::ZeroVector));
    }

    #[test]
    fn zero_field_triplet_singlet() {
        let sys = SpinSystem::scalar_13c(0.0, 0.0, 30.0).unwrap();
        let (e, _) = eigensystem(&build_hamiltonian(&sys, 0.0, &Orientation::identity()));
        assert!((e[0] + 22.5).abs() < 1e-12);
        for t in &e[1..] {
            assert!((t - 7.5).abs() < 1e-12);
        }
        assert!(spectrum(&sys, 0.0, &Orientation::identity()).lines.is_empty());
    }

    #[test]
    fn documented_ab_example() {
        let larmor = GAMMA_13C * LOW_FIELD / (2.0 * PI);
        let sys = SpinSystem::scalar_13c(0.0, 100.0, 30.0).unwrap();
        let spec = spectrum(&sys, LOW_FIELD, &Orientation::identity());
        assert_eq!(spec.lines.len(), 4);
        let mean = larmor + 50.0;
        let offsets: Vec<f64> = spec.lines.iter().map(|l| l.frequency_hz - mean).collect();
        for (got, want) in offsets.iter().zip([-67.2015, -37.2015, 37.2015, 67.2015]) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
        for (line, (f, i)) in spec.lines.iter().zip(ab_quartet(larmor, larmor + 100.0, 30.0)) {
            assert!((line.frequency_hz - f).abs() < 1e-9);
            assert!((line.intensity - i).abs() < 1e-9);
        }
    }

    #[test]
    fn a2_gives_one_line_at_high_field() {
        let sys = SpinSystem::scalar_13c(0.0, 0.0, 35.0).unwrap();
        let spec = spectrum(&sys, 9.4, &Orientation::identity());
        assert_eq!(spec.lines.len(), 1);
        let larmor = GAMMA_13C * 9.4 / (2.0 * PI);
        assert!((spec.lines[0].frequency_hz - larmor).abs() < 1e-5);
        assert!((spec.lines[0].intensity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let j = CouplingTensor::from_rows([[1.0, 2.0, 3.0], [-4.0, 5.0, 6.0], [7.0, 8.0, -9.0]], LAB).unwrap();
        let d = dipolar_tensor(&Vec3::new(1.0, 0.3, -0.2), GAMMA_13C, GAMMA_13C).unwrap();
        let sys = SpinSystem::new(GAMMA_13C, GAMMA_13C, 10.0, -5.0, j, d).unwrap();
        let h = build_hamiltonian(&sys, 0.01, &Orientation::from_euler_deg(10.0, 20.0, 30.0));
        assert!((h - h.adjoint()).camax() < 1e-12);
    }

    #[test]
    fn system_validation() {
        let j = CouplingTensor::zeros(LAB).unwrap();
        let bad = CouplingTensor::diagonal(1.0, 0.0, 0.0, LAB).unwrap();
        assert!(matches!(
            SpinSystem::new(1.0, 1.0, 0.0, 0.0, j.clone(), bad),
            Err(SpinError::DipolarNotTraceless(_))
        ));
        let asym = CouplingTensor::from_rows([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]], LAB).unwrap();
        assert!(matches!(
            SpinSystem::new(1.0, 1.0, 0.0, 0.0, j.clone(), asym),
            Err(SpinError::DipolarNotSymmetric(_))
        ));
        let other = CouplingTensor::zeros("bond").unwrap();
        assert!(matches!(
            SpinSystem::new(1.0, 1.0, 0.0, 0.0, j, other),
            Err(SpinError::FrameMismatch { .. })
        ));
    }

    #[test]
    fn system_json() {
        let text = r#"{"gamma_a": 67282840.0, "gamma_b": 67282840.0, "offset_a_hz": 0, "offset_b_hz": 100,
            "j_tensor_hz": [[30,0,0],[0,30,0],[0,0,30]], "r_vec_angstrom": [0, 0, 1.54], "description": "pair"}"#;
        let sys = SpinSystem::from_json(text).unwrap();
        assert_eq!(sys.description(), "pair");
        assert!(sys.d_tensor().values().trace().abs() < 1e-9);

        let both = text.replace(
            "\"description\"",
            "\"d_tensor_hz\": [[0,0,0],[0,0,0],[0,0,0]], \"description\"",
        );
        assert!(matches!(SpinSystem::from_json(&both), Err(SpinError::Schema { .. })));
        let short = text.replace("[0, 0, 1.54]", "[0, 1.54]");
        assert!(SpinSystem::from_json(&short)
            .unwrap_err()
            .to_string()
            .contains("$.r_vec_angstrom"));
    }

    #[test]
    fn sweep_angles_and_single_step() {
        let sys = SpinSystem::scalar_13c(0.0, 100.0, 30.0).unwrap();
        assert_eq!(
            orientation_sweep(&sys, LOW_FIELD, &Orientation::identity(), &Vec3::x(), 0),
            Err(SpinError::ZeroSteps)
        );
        let one = orientation_sweep(&sys, LOW_FIELD, &Orientation::identity(), &Vec3::x(), 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].0, 0.0);
        assert_eq!(one[0].1, spectrum(&sys, LOW_FIELD, &Orientation::identity()));
        let four = orientation_sweep(&sys, LOW_FIELD, &Orientation::identity(), &Vec3::x(), 4).unwrap();
        let angles: Vec<f64> = four.iter().map(|(a, _)| a.to_degrees().round()).collect();
        assert_eq!(angles, [0.0, 90.0, 180.0, 270.0]);
    }

    #[test]
    fn csv_layout() {
        let spec = Spectrum {
            lines: vec![Line {
                frequency_hz: 12.5,
                intensity: 0.25,
            }],
            field_t: 0.0,
        };
        assert_eq!(spec.to_csv(), "frequency_hz,intensity\n12.5,0.25\n");
        assert_eq!(
            sweep_to_csv(&[(PI / 2.0, spec)]),
            "# angle=90\nfrequency_hz,intensity\n12.5,0.25\n"
        );
    }
}
