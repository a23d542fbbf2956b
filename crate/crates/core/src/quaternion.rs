//! Hamilton quaternions, unit quaternions as 3D rotations, and the
//! structure-of-arrays [`QuaternionVector`] used for embeddings.
//!
//! Every kernel is a pure function over `f64`. The Hamilton product has two
//! independent implementations ([`hamilton`] expands the sixteen bilinear
//! terms, [`hamilton_3d`] goes through dot and cross products) so that each
//! can be checked against the other. Likewise [`rodrigues_oracle`] rotates a
//! 3D vector without any quaternion arithmetic and serves as the reference
//! for [`UnitQuaternion::rotate`].

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Squared norms below this are treated as zero.
pub const ZERO_NORM_SQR: f64 = 1e-12;

/// Allowed deviation of a rotation axis from unit length.
pub const AXIS_TOLERANCE: f64 = 1e-9;

pub type Vector3 = [f64; 3];

/// `a + b i + c j + d k`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Quaternion { a, b, c, d }
    }

    #[inline]
    pub const fn real(a: f64) -> Self {
        Quaternion::new(a, 0.0, 0.0, 0.0)
    }

    /// Pure quaternion `0 + v`.
    #[inline]
    pub const fn pure(v: Vector3) -> Self {
        Quaternion::new(0.0, v[0], v[1], v[2])
    }

    #[inline]
    pub const fn from_parts(a: f64, v: Vector3) -> Self {
        Quaternion::new(a, v[0], v[1], v[2])
    }

    /// Real (scalar) part.
    #[inline]
    pub fn re(&self) -> f64 {
        self.a
    }

    /// Imaginary part as a 3D vector.
    #[inline]
    pub fn im(&self) -> Vector3 {
        [self.b, self.c, self.d]
    }

    #[inline]
    pub fn to_array(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    #[inline]
    pub fn conjugate(self) -> Self {
        conjugate(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        norm(self)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        inner(self, self)
    }

    pub fn inverse(self) -> Result<Self> {
        inverse(self)
    }

    pub fn normalize(self) -> Result<UnitQuaternion> {
        normalize(self)
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(self, other: Quaternion) -> f64 {
        let d = self - other;
        d.a.abs().max(d.b.abs()).max(d.c.abs()).max(d.d.abs())
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn neg(self) -> Quaternion {
        Quaternion::new(-self.a, -self.b, -self.c, -self.d)
    }
}

/// Hamilton product.
impl Mul for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, o: Quaternion) -> Quaternion {
        hamilton(self, o)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Quaternion;
    #[inline]
    fn mul(self, s: f64) -> Quaternion {
        self.scale(s)
    }
}

#[inline]
pub fn conjugate(q: Quaternion) -> Quaternion {
    Quaternion::new(q.a, -q.b, -q.c, -q.d)
}

#[inline]
pub fn inner(q1: Quaternion, q2: Quaternion) -> f64 {
    q1.a * q2.a + q1.b * q2.b + q1.c * q2.c + q1.d * q2.d
}

#[inline]
pub fn norm(q: Quaternion) -> f64 {
    libm::sqrt(inner(q, q))
}

/// `conj(q) / |q|^2`.
pub fn inverse(q: Quaternion) -> Result<Quaternion> {
    let n2 = inner(q, q);
    if !(n2 >= ZERO_NORM_SQR) {
        return Err(Error::ZeroNorm);
    }
    Ok(conjugate(q).scale(1.0 / n2))
}

/// Hamilton product, expanded term by term.
#[inline]
pub fn hamilton(q1: Quaternion, q2: Quaternion) -> Quaternion {
    let Quaternion { a: a1, b: b1, c: c1, d: d1 } = q1;
    let Quaternion { a: a2, b: b2, c: c2, d: d2 } = q2;
    Quaternion::new(
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )
}

#[inline]
pub fn dot3(u: Vector3, v: Vector3) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

#[inline]
pub fn cross3(u: Vector3, v: Vector3) -> Vector3 {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

#[inline]
pub fn norm3(v: Vector3) -> f64 {
    libm::sqrt(dot3(v, v))
}

/// Hamilton product through the scalar/vector decomposition:
/// `(a1 a2 - v1.v2, a1 v2 + a2 v1 + v1 x v2)`.
pub fn hamilton_3d(q1: Quaternion, q2: Quaternion) -> Quaternion {
    let (a1, v1) = (q1.re(), q1.im());
    let (a2, v2) = (q2.re(), q2.im());
    let x = cross3(v1, v2);
    Quaternion::from_parts(
        a1 * a2 - dot3(v1, v2),
        [
            a1 * v2[0] + a2 * v1[0] + x[0],
            a1 * v2[1] + a2 * v1[1] + x[1],
            a1 * v2[2] + a2 * v1[2] + x[2],
        ],
    )
}

/// Largest coordinate gap between `conj(q1 q2 [q3])` and the reversed
/// product of conjugates. Accepts two or three factors; anything else
/// yields `NaN`.
pub fn conj_product_identity_check(qs: &[Quaternion]) -> f64 {
    match *qs {
        [q1, q2] => {
            let lhs = conjugate(hamilton(q1, q2));
            let rhs = hamilton(conjugate(q2), conjugate(q1));
            lhs.max_abs_diff(rhs)
        }
        [q1, q2, q3] => {
            let lhs = conjugate(hamilton(hamilton(q1, q2), q3));
            let rhs = hamilton(hamilton(conjugate(q3), conjugate(q2)), conjugate(q1));
            lhs.max_abs_diff(rhs)
        }
        _ => f64::NAN,
    }
}

/// `q / |q|`.
pub fn normalize(q: Quaternion) -> Result<UnitQuaternion> {
    let n2 = inner(q, q);
    if !(n2 >= ZERO_NORM_SQR) {
        return Err(Error::ZeroNorm);
    }
    Ok(UnitQuaternion(q.scale(1.0 / libm::sqrt(n2))))
}

fn check_axis(u: Vector3) -> Result<()> {
    let n = norm3(u);
    if (n - 1.0).abs() > AXIS_TOLERANCE || !n.is_finite() {
        return Err(Error::BadAxis { norm: n });
    }
    Ok(())
}

/// Rotate `v` by `angle` radians about the unit axis `u` using Rodrigues'
/// formula `v_perp cos + (u x v) sin + v_par`. Independent of all quaternion
/// code in this module.
pub fn rodrigues_oracle(v: Vector3, u: Vector3, angle: f64) -> Result<Vector3> {
    check_axis(u)?;
    let along = dot3(u, v);
    let par = [u[0] * along, u[1] * along, u[2] * along];
    let perp = [v[0] - par[0], v[1] - par[1], v[2] - par[2]];
    let uxv = cross3(u, v);
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    Ok([
        perp[0] * c + uxv[0] * s + par[0],
        perp[1] * c + uxv[1] * s + par[1],
        perp[2] * c + uxv[2] * s + par[2],
    ])
}

/// A quaternion of norm one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion(Quaternion);

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion(Quaternion::ONE);

    /// `cos(angle/2) + u sin(angle/2)`; `angle` is the full rotation angle.
    pub fn from_axis_angle(u: Vector3, angle: f64) -> Result<Self> {
        check_axis(u)?;
        let half = 0.5 * angle;
        let (s, c) = (libm::sin(half), libm::cos(half));
        Ok(UnitQuaternion(Quaternion::new(c, u[0] * s, u[1] * s, u[2] * s)))
    }

    #[inline]
    pub fn quaternion(&self) -> Quaternion {
        self.0
    }

    /// Inverse of a unit quaternion, i.e. its conjugate.
    #[inline]
    pub fn inverse(&self) -> UnitQuaternion {
        UnitQuaternion(conjugate(self.0))
    }

    /// Composition `self * other` (apply `other` first when rotating).
    pub fn compose(&self, other: &UnitQuaternion) -> Result<UnitQuaternion> {
        normalize(hamilton(self.0, other.0))
    }

    /// Sandwich product `q x conj(q)`.
    #[inline]
    pub fn rotate(&self, x: Quaternion) -> Quaternion {
        rotate(x, self)
    }
}

impl From<UnitQuaternion> for Quaternion {
    fn from(u: UnitQuaternion) -> Quaternion {
        u.0
    }
}

#[inline]
pub fn unit_from_axis_angle(u: Vector3, angle: f64) -> Result<UnitQuaternion> {
    UnitQuaternion::from_axis_angle(u, angle)
}

/// `q x q^-1`, written as `q x conj(q)` since `q` is unit.
#[inline]
pub fn rotate(x: Quaternion, q: &UnitQuaternion) -> Quaternion {
    hamilton(hamilton(q.0, x), conjugate(q.0))
}

/// `k` quaternions stored as four contiguous channels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuaternionVector {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
}

impl QuaternionVector {
    pub fn zeros(k: usize) -> Self {
        QuaternionVector {
            a: alloc::vec![0.0; k],
            b: alloc::vec![0.0; k],
            c: alloc::vec![0.0; k],
            d: alloc::vec![0.0; k],
        }
    }

    pub fn from_channels(a: Vec<f64>, b: Vec<f64>, c: Vec<f64>, d: Vec<f64>) -> Result<Self> {
        let k = a.len();
        if k == 0 || b.len() != k || c.len() != k || d.len() != k {
            return Err(Error::ShapeMismatch(alloc::format!(
                "channel lengths {}/{}/{}/{}",
                a.len(),
                b.len(),
                c.len(),
                d.len()
            )));
        }
        Ok(QuaternionVector { a, b, c, d })
    }

    pub fn from_quaternions(qs: &[Quaternion]) -> Self {
        qs.iter().copied().collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.a.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    #[inline]
    pub fn get(&self, m: usize) -> Quaternion {
        Quaternion::new(self.a[m], self.b[m], self.c[m], self.d[m])
    }

    #[inline]
    pub fn set(&mut self, m: usize, q: Quaternion) {
        self.a[m] = q.a;
        self.b[m] = q.b;
        self.c[m] = q.c;
        self.d[m] = q.d;
    }

    pub fn iter(&self) -> impl Iterator<Item = Quaternion> + '_ {
        (0..self.len()).map(move |m| self.get(m))
    }

    /// Coordinates flattened channel by channel: `a.., b.., c.., d..`.
    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.a.iter().chain(&self.b).chain(&self.c).chain(&self.d).copied()
    }

    pub fn map(&self, f: impl Fn(Quaternion) -> Quaternion) -> Self {
        self.iter().map(f).collect()
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Quaternion, Quaternion) -> Quaternion) -> Result<Self> {
        self.check_len(other)?;
        Ok((0..self.len()).map(|m| f(self.get(m), other.get(m))).collect())
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "quaternion vectors of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }

    pub fn conjugate(&self) -> Self {
        self.map(conjugate)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|q| q.scale(s))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn hamilton(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, hamilton)
    }

    pub fn hamilton_3d(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, hamilton_3d)
    }

    /// Per-coordinate inner products.
    pub fn inner(&self, other: &Self) -> Result<Vec<f64>> {
        self.check_len(other)?;
        Ok((0..self.len()).map(|m| inner(self.get(m), other.get(m))).collect())
    }

    /// Per-coordinate norms.
    pub fn norms(&self) -> Vec<f64> {
        self.iter().map(norm).collect()
    }

    pub fn inverse(&self) -> Result<Self> {
        self.iter().map(inverse).collect()
    }

    /// Coordinate-wise normalization.
    pub fn normalize(&self) -> Result<Self> {
        self.iter().map(|q| normalize(q).map(Quaternion::from)).collect()
    }

    /// Rotate coordinate `m` by `normalize(rot[m])`.
    pub fn rotate_by(&self, rot: &Self) -> Result<Self> {
        self.check_len(rot)?;
        (0..self.len())
            .map(|m| Ok(rotate(self.get(m), &normalize(rot.get(m))?)))
            .collect()
    }

    /// Euclidean norm over all `4k` real coordinates.
    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.flat().map(|x| x * x).sum::<f64>())
    }
}

impl FromIterator<Quaternion> for QuaternionVector {
    fn from_iter<I: IntoIterator<Item = Quaternion>>(iter: I) -> Self {
        let mut v = QuaternionVector::default();
        for q in iter {
            v.a.push(q.a);
            v.b.push(q.b);
            v.c.push(q.c);
            v.d.push(q.d);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn q(a: f64, b: f64, c: f64, d: f64) -> Quaternion {
        Quaternion::new(a, b, c, d)
    }

    fn close(x: Quaternion, y: Quaternion, tol: f64) -> bool {
        x.max_abs_diff(y) <= tol
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(conjugate(q(1., 2., 3., 4.)), q(1., -2., -3., -4.));
        assert_eq!(conjugate(Quaternion::real(5.)), Quaternion::real(5.));
        assert_eq!(conjugate(Quaternion::I), -Quaternion::I);
    }

    #[test]
    fn inner_and_norm_examples() {
        assert_eq!(inner(q(1., 1., 0., 0.), q(1., 1., 0., 0.)), 2.0);
        assert_eq!(inner(Quaternion::I, Quaternion::J), 0.0);
        assert_eq!(inner(q(1., 2., 3., 4.), q(1., 2., 3., 4.)), 30.0);
        assert_eq!(norm(q(1., 2., 2., 4.)), 5.0);
        assert_eq!(norm(Quaternion::ZERO), 0.0);
        for theta in [0.1, 1.0, 2.5, -4.0] {
            let r = q(libm::cos(theta / 2.), 0., 0., libm::sin(theta / 2.));
            assert!((norm(r) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(inverse(Quaternion::real(2.)).unwrap(), Quaternion::real(0.5));
        assert_eq!(inverse(Quaternion::I).unwrap(), -Quaternion::I);
        let inv = inverse(q(1., 1., 0., 0.)).unwrap();
        assert_eq!(inv, q(0.5, -0.5, 0., 0.));
        // (1+i)(0.5-0.5i) = 0.5 - 0.5i + 0.5i - 0.5 i^2 = 1
        assert_eq!(hamilton(q(1., 1., 0., 0.), inv), Quaternion::ONE);
        assert_eq!(inverse(Quaternion::ZERO), Err(Error::ZeroNorm));
        assert_eq!(inverse(q(1e-7, 0., 0., 0.)), Err(Error::ZeroNorm));
    }

    #[test]
    fn hamilton_examples() {
        assert_eq!(hamilton(Quaternion::I, Quaternion::J), Quaternion::K);
        assert_eq!(hamilton(Quaternion::J, Quaternion::I), -Quaternion::K);
        // (1+i)(1+j) = 1 + j + i + ij = 1 + i + j + k
        assert_eq!(hamilton(q(1., 1., 0., 0.), q(1., 0., 1., 0.)), q(1., 1., 1., 1.));
        assert_eq!(hamilton_3d(Quaternion::I, Quaternion::J), Quaternion::K);
        assert_eq!(hamilton_3d(Quaternion::I, Quaternion::I), Quaternion::real(-1.));
        assert_eq!(hamilton_3d(q(1., 1., 0., 0.), q(1., 0., 1., 0.)), q(1., 1., 1., 1.));
    }

    #[test]
    fn basis_table() {
        let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
        let m1 = Quaternion::real(-1.);
        assert_eq!(i * i, m1);
        assert_eq!(j * j, m1);
        assert_eq!(k * k, m1);
        assert_eq!(i * j * k, m1);
        assert_eq!(j * k, i);
        assert_eq!(k * i, j);
    }

    #[test]
    fn conj_identity_examples() {
        assert_eq!(conj_product_identity_check(&[Quaternion::I, Quaternion::J]), 0.0);
        let x = q(0.3, -1.2, 2.0, 0.7);
        assert_eq!(conj_product_identity_check(&[x, Quaternion::ONE]), 0.0);
        assert!(conj_product_identity_check(&[x]).is_nan());
    }

    #[test]
    fn axis_angle_examples() {
        let k = unit_from_axis_angle([0., 0., 1.], PI).unwrap().quaternion();
        assert!(close(k, Quaternion::K, 1e-15));
        let one = unit_from_axis_angle([1., 0., 0.], 0.).unwrap().quaternion();
        assert_eq!(one, Quaternion::ONE);
        let h = unit_from_axis_angle([0., 1., 0.], FRAC_PI_2).unwrap().quaternion();
        assert!(close(h, q(SQRT_2 / 2., 0., SQRT_2 / 2., 0.), 1e-15));
        assert!(matches!(unit_from_axis_angle([1., 1., 0.], 1.0), Err(Error::BadAxis { .. })));
        assert!(matches!(unit_from_axis_angle([0., 0., 0.], 1.0), Err(Error::BadAxis { .. })));
    }

    #[test]
    fn rotate_examples() {
        let quarter = unit_from_axis_angle([0., 0., 1.], FRAC_PI_2).unwrap();
        let expected = rodrigues_oracle([1., 0., 0.], [0., 0., 1.], FRAC_PI_2).unwrap();
        let out = rotate(Quaternion::I, &quarter);
        assert!(close(out, Quaternion::pure(expected), 1e-15));
        assert!(close(out, Quaternion::J, 1e-15));

        let x = q(0.5, -1., 2., 3.);
        assert_eq!(rotate(x, &UnitQuaternion::IDENTITY), x);

        let any = unit_from_axis_angle([0.6, 0., 0.8], 1.234).unwrap();
        assert!(close(rotate(Quaternion::real(3.), &any), Quaternion::real(3.), 1e-15));
    }

    #[test]
    fn rodrigues_examples() {
        let v = rodrigues_oracle([1., 0., 0.], [0., 0., 1.], FRAC_PI_2).unwrap();
        assert!((v[0]).abs() < 1e-15 && (v[1] - 1.).abs() < 1e-15 && v[2] == 0.);
        let w = [0.3, -2.0, 5.0];
        assert_eq!(rodrigues_oracle(w, [0., 1., 0.], 0.).unwrap(), w);
        let h = rodrigues_oracle([1., 1., 0.], [0., 0., 1.], PI).unwrap();
        assert!((h[0] + 1.).abs() < 1e-15 && (h[1] + 1.).abs() < 1e-15);
        assert!(rodrigues_oracle(w, [2., 0., 0.], 1.).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(Quaternion::real(2.)).unwrap().quaternion(), Quaternion::ONE);
        let n = normalize(q(0., 3., 0., 4.)).unwrap().quaternion();
        assert!(close(n, q(0., 0.6, 0., 0.8), 1e-15));
        let x = q(0.1, 7., -3., 2.);
        let once = normalize(x).unwrap().quaternion();
        let twice = normalize(once).unwrap().quaternion();
        assert!(close(once, twice, 1e-15));
        assert_eq!(normalize(Quaternion::ZERO), Err(Error::ZeroNorm));
    }

    #[test]
    fn vector_forms_are_coordinatewise() {
        let x = QuaternionVector::from_quaternions(&[q(1., 2., 3., 4.), Quaternion::I]);
        let y = QuaternionVector::from_quaternions(&[Quaternion::J, Quaternion::J]);
        let p = x.hamilton(&y).unwrap();
        assert_eq!(p.get(1), Quaternion::K);
        assert_eq!(p, x.hamilton_3d(&y).unwrap());
        assert_eq!(x.conjugate().get(0), q(1., -2., -3., -4.));
        assert_eq!(x.inner(&x).unwrap(), alloc::vec![30.0, 1.0]);
        assert_eq!(x.norms()[1], 1.0);
        let short = QuaternionVector::from_quaternions(&[Quaternion::I]);
        assert!(matches!(x.add(&short), Err(Error::ShapeMismatch(_))));
        assert!(QuaternionVector::from_channels(alloc::vec![], alloc::vec![], alloc::vec![], alloc::vec![]).is_err());
        let z = QuaternionVector::zeros(2);
        assert_eq!(z.normalize(), Err(Error::ZeroNorm));
        let flat: Vec<f64> = x.flat().collect();
        assert_eq!(flat, alloc::vec![1., 0., 2., 1., 3., 0., 4., 0.]);
    }
}
