//! Small fixed-size linear algebra: 3-vectors, a symmetric 3x3 eigensolver,
//! and order-stable reductions.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// A 3-vector in camera space (x right, y down, z forward).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    #[inline]
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, rhs: Self) -> T {
        self.x * rhs.x + self.y * rhs.y + self.z * rhs.z
    }

    #[inline]
    pub fn cross(self, rhs: Self) -> Self {
        Self::new(
            self.y * rhs.z - self.z * rhs.y,
            self.z * rhs.x - self.x * rhs.z,
            self.x * rhs.y - self.y * rhs.x,
        )
    }

    #[inline]
    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    /// Unit vector in the same direction, or `None` when the norm is zero or
    /// not finite.
    #[inline]
    pub fn try_normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() && n.is_finite() {
            Some(self / n)
        } else {
            None
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl<T: Scalar> Add for Vec3<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl<T: Scalar> AddAssign for Vec3<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Scalar> Sub for Vec3<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl<T: Scalar> Neg for Vec3<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

impl<T: Scalar> Mul<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Scalar> Div<T> for Vec3<T> {
    type Output = Self;
    #[inline]
    fn div(self, s: T) -> Self {
        Self::new(self.x / s, self.y / s, self.z / s)
    }
}

/// Angle between two vectors in radians via `atan2(|a x b|, a . b)`, which
/// stays accurate for very small angles where `acos` saturates.
pub fn angle_between<T: Scalar>(a: Vec3<T>, b: Vec3<T>) -> T {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Signed doubled area of the 2D triangle `(a, b, c)`: `cross2(b - a, c - a)`.
#[inline]
pub fn cross2<T: Scalar>(a: (T, T), b: (T, T), c: (T, T)) -> T {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let (acx, acy) = (c.0 - a.0, c.1 - a.1);
    abx * acy - aby * acx
}

/// Sums a slice with fixed-order pairwise recursion, so the result does not
/// depend on chunking or thread count.
pub fn pairwise_sum<T: Scalar>(values: &[T]) -> T {
    if values.len() <= 32 {
        let mut acc = T::zero();
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Mean of a slice via pairwise summation. Returns `None` for empty input.
pub fn pairwise_mean<T: Scalar>(values: &[T]) -> Option<T> {
    if values.is_empty() {
        None
    } else {
        Some(pairwise_sum(values) / T::from_count(values.len()))
    }
}

/// Eigendecomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order with matching unit eigenvectors.
pub fn sym_eigen3<T: Scalar>(m: [[T; 3]; 3]) -> ([T; 3], [Vec3<T>; 3]) {
    let mut a = m;
    // v accumulates the rotations; starts as identity.
    let mut v = [[T::zero(); 3]; 3];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = T::one();
    }

    let scale = {
        let mut s = T::zero();
        for row in &a {
            for &x in row {
                s = s.max(x.abs());
            }
        }
        s.max(T::min_positive_value())
    };
    let tol = T::epsilon() * scale;

    for _sweep in 0..50 {
        let off = (a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2]).sqrt();
        if off <= tol {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() <= tol * T::cast(1e-3) {
                continue;
            }
            // Classic Jacobi rotation zeroing a[p][q].
            let theta = (a[q][q] - a[p][p]) / (T::cast(2.0) * a[p][q]);
            let t = {
                let abs_theta = theta.abs();
                let tt = T::one() / (abs_theta + (theta * theta + T::one()).sqrt());
                if theta < T::zero() {
                    -tt
                } else {
                    tt
                }
            };
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;

            let app = a[p][p];
            let aqq = a[q][q];
            let apq = a[p][q];
            a[p][p] = app - t * apq;
            a[q][q] = aqq + t * apq;
            a[p][q] = T::zero();
            a[q][p] = T::zero();
            let r = 3 - p - q; // the row/column not being rotated
            let arp = a[r][p];
            let arq = a[r][q];
            a[r][p] = c * arp - s * arq;
            a[p][r] = a[r][p];
            a[r][q] = s * arp + c * arq;
            a[q][r] = a[r][q];
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }

    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| a[i][i].partial_cmp(&a[j][j]).expect("finite eigenvalues"));
    let eigenvalues = [
        a[order[0]][order[0]],
        a[order[1]][order[1]],
        a[order[2]][order[2]],
    ];
    let eigenvectors = [
        Vec3::new(v[0][order[0]], v[1][order[0]], v[2][order[0]]),
        Vec3::new(v[0][order[1]], v[1][order[1]], v[2][order[1]]),
        Vec3::new(v[0][order[2]], v[1][order[2]], v[2][order[2]]),
    ];
    (eigenvalues, eigenvectors)
}
