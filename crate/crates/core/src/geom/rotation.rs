use std::ops::{Mul, Neg};

use serde::{Deserialize, Serialize};

use super::{GeomError, Vector3, EPS_ANTIPODAL, EPS_TRACE};
use crate::{scalar, Real};

/// Row-major 3×3 rotation matrix.
///
/// Constructors do not validate orthonormality; use
/// [`RotationMatrix::is_special_orthogonal`] where an input is untrusted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationMatrix<T> {
    rows: [[T; 3]; 3],
}

impl<T: Real> RotationMatrix<T> {
    pub fn identity() -> Self {
        let o = T::one();
        let z = T::zero();
        Self::from_rows([[o, z, z], [z, o, z], [z, z, o]])
    }

    pub fn from_rows(rows: [[T; 3]; 3]) -> Self {
        Self { rows }
    }

    /// Basis vectors as columns: `[c0 c1 c2]`.
    pub fn from_columns(c0: Vector3<T>, c1: Vector3<T>, c2: Vector3<T>) -> Self {
        Self::from_rows([
            [c0.x, c1.x, c2.x],
            [c0.y, c1.y, c2.y],
            [c0.z, c1.z, c2.z],
        ])
    }

    pub fn about_x(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let o = T::one();
        let z = T::zero();
        Self::from_rows([[o, z, z], [z, c, -s], [z, s, c]])
    }

    pub fn about_y(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let o = T::one();
        let z = T::zero();
        Self::from_rows([[c, z, s], [z, o, z], [-s, z, c]])
    }

    pub fn about_z(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let o = T::one();
        let z = T::zero();
        Self::from_rows([[c, -s, z], [s, c, z], [z, z, o]])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.rows[row][col]
    }

    pub fn rows(&self) -> &[[T; 3]; 3] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Vector3<T> {
        Vector3::from(self.rows[i])
    }

    pub fn column(&self, j: usize) -> Vector3<T> {
        Vector3::new(self.rows[0][j], self.rows[1][j], self.rows[2][j])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.rows;
        Self::from_rows([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> T {
        self.rows[0][0] + self.rows[1][1] + self.rows[2][2]
    }

    pub fn determinant(&self) -> T {
        let m = &self.rows;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// `R · v`.
    pub fn apply(&self, v: &Vector3<T>) -> Vector3<T> {
        Vector3::new(
            self.row(0).dot(v),
            self.row(1).dot(v),
            self.row(2).dot(v),
        )
    }

    /// `Rᵀ · v` without materializing the transpose.
    pub fn apply_transpose(&self, v: &Vector3<T>) -> Vector3<T> {
        Vector3::new(
            self.column(0).dot(v),
            self.column(1).dot(v),
            self.column(2).dot(v),
        )
    }

    pub fn is_special_orthogonal(&self, tol: T) -> bool {
        let rt = self.transpose();
        let gram = mat_mul(&rt.rows, &self.rows);
        let id = Self::identity();
        let mut max_dev = T::zero();
        for (gram_row, id_row) in gram.iter().zip(&id.rows) {
            for (g, e) in gram_row.iter().zip(id_row) {
                let dev = (*g - *e).abs();
                if dev > max_dev {
                    max_dev = dev;
                }
            }
        }
        max_dev <= tol && (self.determinant() - T::one()).abs() <= tol
    }

    /// Axis-angle form with the angle in `[0, π]`.
    ///
    /// Zero rotations return the fixed canonical axis `(0, 0, 1)`. At a half
    /// turn the two antipodal axes describe the same rotation; the returned
    /// axis is the one whose first nonzero component is positive.
    pub fn to_axis_angle(&self) -> AxisAngle<T> {
        let m = &self.rows;
        // Twice the sine of the angle times the axis.
        let skew = Vector3::new(
            m[2][1] - m[1][2],
            m[0][2] - m[2][0],
            m[1][0] - m[0][1],
        );
        let n = skew.norm();
        let angle = n.atan2(self.trace() - T::one());
        if angle <= T::zero() {
            return AxisAngle::identity();
        }
        let near_half_turn = n < scalar::<T>(1e-11) || T::PI() - angle < scalar::<T>(1e-9);
        let axis = if !near_half_turn && n > scalar::<T>(1e-11) {
            skew / n
        } else {
            // Symmetric extraction: (R + Rᵀ)/2 − cos β·I = (1 − cos β)·ŵŵᵀ.
            let c = ((self.trace() - T::one()) / scalar(2.0))
                .max(-T::one())
                .min(T::one());
            let half = scalar::<T>(0.5);
            let b = [
                [m[0][0] - c, (m[0][1] + m[1][0]) * half, (m[0][2] + m[2][0]) * half],
                [(m[1][0] + m[0][1]) * half, m[1][1] - c, (m[1][2] + m[2][1]) * half],
                [(m[2][0] + m[0][2]) * half, (m[2][1] + m[1][2]) * half, m[2][2] - c],
            ];
            let mut pivot = 0;
            for i in 1..3 {
                if b[i][i] > b[pivot][pivot] {
                    pivot = i;
                }
            }
            let w_pivot = b[pivot][pivot].max(T::zero()).sqrt();
            if w_pivot == T::zero() {
                return AxisAngle::identity();
            }
            let raw = Vector3::new(b[pivot][0], b[pivot][1], b[pivot][2]) / w_pivot;
            let axis = raw.normalized();
            if n > scalar::<T>(1e-11) {
                // True axis sign still recoverable from the skew part.
                if skew.dot(&axis) < T::zero() {
                    -axis
                } else {
                    axis
                }
            } else {
                canonical_half_turn_sign(axis)
            }
        };
        AxisAngle { axis, angle }
    }

    /// Unit quaternion of this rotation via the trace formula, falling back
    /// to the largest-diagonal pivot when the scalar part vanishes (half
    /// turns, where the trace formula divides by ~0).
    pub fn to_quaternion(&self) -> UnitQuaternion<T> {
        let m = &self.rows;
        let tr = self.trace();
        let quarter = scalar::<T>(0.25);
        let q = if tr > -T::one() + scalar::<T>(EPS_TRACE) {
            let w = scalar::<T>(0.5) * (T::one() + tr).sqrt();
            let k = quarter / w;
            UnitQuaternion {
                w,
                x: (m[2][1] - m[1][2]) * k,
                y: (m[0][2] - m[2][0]) * k,
                z: (m[1][0] - m[0][1]) * k,
            }
        } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
            let s = (T::one() + m[0][0] - m[1][1] - m[2][2]).sqrt();
            let k = scalar::<T>(0.5) / s;
            UnitQuaternion {
                w: (m[2][1] - m[1][2]) * k,
                x: s * scalar(0.5),
                y: (m[0][1] + m[1][0]) * k,
                z: (m[0][2] + m[2][0]) * k,
            }
        } else if m[1][1] >= m[2][2] {
            let s = (T::one() - m[0][0] + m[1][1] - m[2][2]).sqrt();
            let k = scalar::<T>(0.5) / s;
            UnitQuaternion {
                w: (m[0][2] - m[2][0]) * k,
                x: (m[0][1] + m[1][0]) * k,
                y: s * scalar(0.5),
                z: (m[1][2] + m[2][1]) * k,
            }
        } else {
            let s = (T::one() - m[0][0] - m[1][1] + m[2][2]).sqrt();
            let k = scalar::<T>(0.5) / s;
            UnitQuaternion {
                w: (m[1][0] - m[0][1]) * k,
                x: (m[0][2] + m[2][0]) * k,
                y: (m[1][2] + m[2][1]) * k,
                z: s * scalar(0.5),
            }
        };
        q.normalized()
    }
}

impl<T: Real> Mul for RotationMatrix<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::from_rows(mat_mul(&self.rows, &rhs.rows))
    }
}

fn mat_mul<T: Real>(a: &[[T; 3]; 3], b: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

/// Half-turn axes come in antipodal pairs; pick the representative whose
/// first component above noise level is positive.
fn canonical_half_turn_sign<T: Real>(axis: Vector3<T>) -> Vector3<T> {
    let tol = scalar::<T>(1e-9);
    for c in [axis.x, axis.y, axis.z] {
        if c.abs() > tol {
            return if c < T::zero() { -axis } else { axis };
        }
    }
    axis
}

/// Rotation as a unit axis and an angle in `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAngle<T> {
    pub axis: Vector3<T>,
    pub angle: T,
}

impl<T: Real> AxisAngle<T> {
    /// Canonical axis reported for zero rotations.
    pub fn canonical_axis() -> Vector3<T> {
        Vector3::new(T::zero(), T::zero(), T::one())
    }

    pub fn identity() -> Self {
        Self {
            axis: Self::canonical_axis(),
            angle: T::zero(),
        }
    }

    pub fn new(axis: Vector3<T>, angle: T) -> Self {
        Self { axis, angle }
    }

    /// Rotation vector `β·ŵ`.
    pub fn to_rotation_vector(&self) -> Vector3<T> {
        self.axis.scale(self.angle)
    }

    pub fn from_rotation_vector(v: &Vector3<T>) -> Self {
        let angle = v.norm();
        if angle <= T::zero() {
            return Self::identity();
        }
        Self {
            axis: *v / angle,
            angle,
        }
    }
}

/// Scalar-first unit quaternion `(w, x, y, z)`.
///
/// `q` and `−q` represent the same rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuaternion<T> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> UnitQuaternion<T> {
    pub fn identity() -> Self {
        Self {
            w: T::one(),
            x: T::zero(),
            y: T::zero(),
            z: T::zero(),
        }
    }

    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn norm(&self) -> T {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            w: self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn dot(&self, other: &Self) -> T {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    /// `(cos β/2, ŵ sin β/2)`.
    pub fn from_axis_angle(aa: &AxisAngle<T>) -> Self {
        let half = aa.angle * scalar(0.5);
        let (s, c) = half.sin_cos();
        Self {
            w: c,
            x: aa.axis.x * s,
            y: aa.axis.y * s,
            z: aa.axis.z * s,
        }
    }

    /// Axis-angle with the same canonicalization as
    /// [`RotationMatrix::to_axis_angle`]: angle in `[0, π]`, canonical axis
    /// at zero, first-nonzero-positive axis at half turns.
    pub fn to_axis_angle(&self) -> AxisAngle<T> {
        let v = Vector3::new(self.x, self.y, self.z);
        let vn = v.norm();
        if vn <= T::zero() {
            return AxisAngle::identity();
        }
        let angle = scalar::<T>(2.0) * vn.atan2(self.w.abs());
        let axis = v / vn;
        let axis = if self.w.abs() < scalar::<T>(1e-11) {
            canonical_half_turn_sign(axis)
        } else if self.w < T::zero() {
            -axis
        } else {
            axis
        };
        AxisAngle { axis, angle }
    }

    /// The rotation matrix of this quaternion; identical for `q` and `−q`.
    pub fn to_matrix(&self) -> RotationMatrix<T> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let two = scalar::<T>(2.0);
        let one = T::one();
        RotationMatrix::from_rows([
            [
                one - two * y * y - two * z * z,
                two * x * y - two * z * w,
                two * x * z + two * y * w,
            ],
            [
                two * x * y + two * z * w,
                one - two * x * x - two * z * z,
                two * y * z - two * x * w,
            ],
            [
                two * x * z - two * y * w,
                two * y * z + two * x * w,
                one - two * x * x - two * y * y,
            ],
        ])
    }

    pub fn from_matrix(m: &RotationMatrix<T>) -> Self {
        m.to_quaternion()
    }

    /// `q · v · q⁻¹`.
    pub fn rotate_vector(&self, v: &Vector3<T>) -> Vector3<T> {
        let u = Vector3::new(self.x, self.y, self.z);
        let t = u.cross(v).scale(scalar(2.0));
        *v + t.scale(self.w) + u.cross(&t)
    }
}

impl<T: Real> Mul for UnitQuaternion<T> {
    type Output = Self;

    /// Hamilton product.
    fn mul(self, r: Self) -> Self {
        Self {
            w: self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            x: self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            y: self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            z: self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        }
    }
}

impl<T: Real> Neg for UnitQuaternion<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// Euler-angle composition orders (intrinsic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EulerConvention {
    /// `Rz(φ)·Ry(ψ)·Rx(θ)` — the default.
    #[default]
    Zyx,
    /// `Rx(φ)·Ry(ψ)·Rz(θ)`.
    Xyz,
    /// `Rz(φ)·Rx(ψ)·Rz(θ)`.
    Zxz,
}

/// Euler angles with their composition convention carried alongside; no
/// implicit convention exists at any API boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles<T> {
    pub phi: T,
    pub psi: T,
    pub theta: T,
    pub convention: EulerConvention,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(phi: T, psi: T, theta: T, convention: EulerConvention) -> Self {
        Self {
            phi,
            psi,
            theta,
            convention,
        }
    }

    pub fn to_matrix(&self) -> RotationMatrix<T> {
        match self.convention {
            EulerConvention::Zyx => {
                RotationMatrix::about_z(self.phi)
                    * RotationMatrix::about_y(self.psi)
                    * RotationMatrix::about_x(self.theta)
            }
            EulerConvention::Xyz => {
                RotationMatrix::about_x(self.phi)
                    * RotationMatrix::about_y(self.psi)
                    * RotationMatrix::about_z(self.theta)
            }
            EulerConvention::Zxz => {
                RotationMatrix::about_z(self.phi)
                    * RotationMatrix::about_x(self.psi)
                    * RotationMatrix::about_z(self.theta)
            }
        }
    }

    pub fn to_quaternion(&self) -> UnitQuaternion<T> {
        self.to_matrix().to_quaternion()
    }
}

/// Minimal rotation taking unit vector `a` onto unit vector `b`:
/// `R = I + [c]ₓ + [c]ₓ²/(1 + a·b)` with `c = a × b`. The rotation axis is
/// perpendicular to both vectors. Antipodal inputs have no unique minimal
/// rotation and are rejected.
pub fn rotation_between_vectors<T: Real>(
    a: &Vector3<T>,
    b: &Vector3<T>,
) -> Result<RotationMatrix<T>, GeomError> {
    let d = a.dot(b);
    if d < -T::one() + scalar::<T>(EPS_ANTIPODAL) {
        return Err(GeomError::AntipodalVectors);
    }
    let c = a.cross(b);
    let k = T::one() / (T::one() + d);
    let cx = skew(&c);
    let cx2 = mat_mul(&cx, &cx);
    let mut rows = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let id = if i == j { T::one() } else { T::zero() };
            rows[i][j] = id + cx[i][j] + cx2[i][j] * k;
        }
    }
    Ok(RotationMatrix::from_rows(rows))
}

fn skew<T: Real>(c: &Vector3<T>) -> [[T; 3]; 3] {
    let z = T::zero();
    [[z, -c.z, c.y], [c.z, z, -c.x], [-c.y, c.x, z]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Rodrigues formula, kept independent of the conversion code it checks.
    fn rodrigues(axis: Vector3<f64>, angle: f64) -> RotationMatrix<f64> {
        let (s, c) = angle.sin_cos();
        let k = skew(&axis);
        let k2 = mat_mul(&k, &k);
        let mut rows = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                rows[i][j] = id + s * k[i][j] + (1.0 - c) * k2[i][j];
            }
        }
        RotationMatrix::from_rows(rows)
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
        // Shoemake's uniform quaternion sampling.
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let u3: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        UnitQuaternion::new(
            (u1).sqrt() * u3.cos(),
            (1.0 - u1).sqrt() * u2.sin(),
            (1.0 - u1).sqrt() * u2.cos(),
            (u1).sqrt() * u3.sin(),
        )
    }

    fn max_matrix_dev(a: &RotationMatrix<f64>, b: &RotationMatrix<f64>) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                dev = dev.max((a.get(i, j) - b.get(i, j)).abs());
            }
        }
        dev
    }

    #[test]
    fn euler_zero_is_identity() {
        let e = EulerAngles::new(0.0, 0.0, 0.0, EulerConvention::Zyx);
        assert_eq!(e.to_matrix(), RotationMatrix::identity());
    }

    #[test]
    fn euler_zyx_first_angle_rotates_about_z() {
        let e = EulerAngles::new(std::f64::consts::FRAC_PI_2, 0.0, 0.0, EulerConvention::Zyx);
        let m = e.to_matrix();
        let v = m.apply(&Vector3::new(1.0, 0.0, 0.0));
        assert!((v - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-12);
        let oracle = rodrigues(Vector3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2);
        assert!(max_matrix_dev(&m, &oracle) < 1e-12);
    }

    #[test]
    fn euler_round_trips_through_axis_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for convention in [
            EulerConvention::Zyx,
            EulerConvention::Xyz,
            EulerConvention::Zxz,
        ] {
            for _ in 0..100 {
                let e = EulerAngles::new(
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-1.5..1.5),
                    rng.gen_range(-3.0..3.0),
                    convention,
                );
                let m = e.to_matrix();
                let aa = m.to_axis_angle();
                let back = rodrigues(aa.axis, aa.angle);
                assert!(max_matrix_dev(&m, &back) < 1e-9);
            }
        }
    }

    #[test]
    fn axis_angle_of_identity_is_canonical() {
        let aa = RotationMatrix::<f64>::identity().to_axis_angle();
        assert_eq!(aa.angle, 0.0);
        assert_eq!(aa.axis, AxisAngle::canonical_axis());
    }

    #[test]
    fn axis_angle_single_axis_case() {
        let m = RotationMatrix::about_x(std::f64::consts::FRAC_PI_2);
        let aa = m.to_axis_angle();
        assert!((aa.angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!((aa.axis - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn axis_angle_half_turn_about_diagonal() {
        let axis = Vector3::new(1.0, 1.0, 1.0).normalized();
        let m = rodrigues(axis, std::f64::consts::PI);
        let aa = m.to_axis_angle();
        assert!((aa.angle - std::f64::consts::PI).abs() < 1e-9);
        assert!((aa.axis - axis).norm() < 1e-9);
    }

    #[test]
    fn half_turn_axis_sign_is_first_nonzero_positive() {
        // Axis with a negative leading component: the reported axis flips.
        let axis = Vector3::new(-1.0, 1.0, 0.5).normalized();
        let m = rodrigues(axis, std::f64::consts::PI);
        let aa = m.to_axis_angle();
        assert!(aa.axis.x > 0.0);
        assert!((aa.axis + axis).norm() < 1e-9);
    }

    #[test]
    fn quaternion_from_axis_angle_examples() {
        let q = UnitQuaternion::from_axis_angle(&AxisAngle::new(Vector3::new(0.0, 0.0, 1.0), 0.0));
        assert_eq!((q.w, q.x, q.y, q.z), (1.0, 0.0, 0.0, 0.0));

        let q = UnitQuaternion::from_axis_angle(&AxisAngle::new(
            Vector3::new(0.0, 0.0, 1.0),
            std::f64::consts::PI,
        ));
        assert!(q.w.abs() < 1e-12 && (q.z - 1.0).abs() < 1e-12);

        let q = UnitQuaternion::from_axis_angle(&AxisAngle::new(
            Vector3::new(1.0, 0.0, 0.0),
            std::f64::consts::FRAC_PI_2,
        ));
        let r = 0.5f64.sqrt();
        assert!((q.w - r).abs() < 1e-12 && (q.x - r).abs() < 1e-12);
        assert!(q.y.abs() < 1e-12 && q.z.abs() < 1e-12);
    }

    #[test]
    fn quaternion_matrix_examples() {
        assert_eq!(
            UnitQuaternion::<f64>::identity().to_matrix(),
            RotationMatrix::identity()
        );
        // Half turn about z.
        let m = UnitQuaternion::new(0.0, 0.0, 0.0, 1.0).to_matrix();
        let expect = RotationMatrix::from_rows([
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]);
        assert!(max_matrix_dev(&m, &expect) < 1e-15);
    }

    #[test]
    fn matrix_to_quaternion_identity_and_half_turn() {
        let q = RotationMatrix::<f64>::identity().to_quaternion();
        assert!((q.w - 1.0).abs() < 1e-15);

        let half_turn = RotationMatrix::<f64>::from_rows([
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]);
        let q = half_turn.to_quaternion();
        assert!(q.w.abs() < 1e-9);
        assert!(q.x.abs() < 1e-9 && q.y.abs() < 1e-9);
        assert!((q.z.abs() - 1.0).abs() < 1e-9);
        assert!(max_matrix_dev(&q.to_matrix(), &half_turn) < 1e-9);
    }

    #[test]
    fn quaternion_matrix_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let q = random_rotation(&mut rng);
            let m = q.to_matrix();
            let back = m.to_quaternion().to_matrix();
            assert!(max_matrix_dev(&m, &back) < 1e-9);
        }
    }

    #[test]
    fn negated_quaternion_same_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let q = random_rotation(&mut rng);
            assert!(max_matrix_dev(&q.to_matrix(), &(-q).to_matrix()) < 1e-12);
        }
    }

    #[test]
    fn axis_angle_quaternion_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..500 {
            let q = random_rotation(&mut rng);
            let from_quat = q.to_axis_angle();
            let from_matrix = q.to_matrix().to_axis_angle();
            assert!((from_quat.angle - from_matrix.angle).abs() < 1e-9);
            assert!((from_quat.axis - from_matrix.axis).norm() < 1e-7);
        }
    }

    #[test]
    fn rotation_between_parallel_vectors_is_identity() {
        let a = Vector3::new(1.0, 0.0, 0.0);
        let r = rotation_between_vectors(&a, &a).unwrap();
        assert_eq!(r, RotationMatrix::identity());
    }

    #[test]
    fn rotation_between_basis_vectors() {
        let a = Vector3::new(1.0, 0.0, 0.0);
        let b = Vector3::new(0.0, 1.0, 0.0);
        let r = rotation_between_vectors(&a, &b).unwrap();
        let oracle = rodrigues(Vector3::new(0.0, 0.0, 1.0), std::f64::consts::FRAC_PI_2);
        assert!(max_matrix_dev(&r, &oracle) < 1e-12);
        assert!((r.apply(&a) - b).norm() < 1e-12);
    }

    #[test]
    fn rotation_between_antipodal_vectors_fails() {
        let a = Vector3::new(1.0, 0.0, 0.0);
        let b = Vector3::new(-1.0, 0.0, 0.0);
        assert_eq!(
            rotation_between_vectors(&a, &b),
            Err(GeomError::AntipodalVectors)
        );
    }

    #[test]
    fn rotation_between_random_pairs_maps_a_to_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut checked = 0;
        while checked < 1000 {
            let a = Vector3::new(
                rng.gen_range(-1.0..1.0f64),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let b = Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if a.norm() < 0.1 || b.norm() < 0.1 {
                continue;
            }
            let a = a.normalized();
            let b = b.normalized();
            if a.dot(&b) < -0.99 {
                continue;
            }
            let r = rotation_between_vectors(&a, &b).unwrap();
            assert!((r.apply(&a) - b).norm() < 1e-9);
            assert!(r.is_special_orthogonal(1e-9));
            // Minimal rotation: axis perpendicular to both endpoints.
            let aa = r.to_axis_angle();
            if aa.angle > 1e-6 {
                assert!(aa.axis.dot(&a).abs() < 1e-7);
                assert!(aa.axis.dot(&b).abs() < 1e-7);
            }
            checked += 1;
        }
    }

    #[test]
    fn swapped_and_negated_inputs_give_same_minimal_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..100 {
            let a = Vector3::new(
                rng.gen_range(-1.0..1.0f64),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalized();
            let b = Vector3::new(
                rng.gen_range(-1.0..1.0f64),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            )
            .normalized();
            if a.dot(&b) < -0.9 {
                continue;
            }
            let r = rotation_between_vectors(&a, &b).unwrap();
            let r_neg = rotation_between_vectors(&(-a), &(-b)).unwrap();
            assert!(max_matrix_dev(&r, &r_neg) < 1e-12);
        }
    }

    #[test]
    fn rotate_vector_matches_matrix_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let q = random_rotation(&mut rng);
            let v = Vector3::new(
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            );
            let via_quat = q.rotate_vector(&v);
            let via_matrix = q.to_matrix().apply(&v);
            assert!((via_quat - via_matrix).norm() < 1e-12);
        }
    }
}
