//! Small fixed-size vector and quaternion algebra.
//!
//! A quaternion is stored as scalar part plus vector part. Pure vectors embed
//! as quaternions with zero scalar part; under that embedding the quaternion
//! product carries both the dot and the cross product:
//! `a * b = (a0*b0 - a.v, b.v ; a0*b.v + b0*a.v + a.v x b.v)`.

use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3 { x, y, z }
}

impl Vec3 {
    pub const ZERO: Vec3 = vec3(0.0, 0.0, 0.0);

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector in the same direction; `None` for (near-)zero input.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n < 1e-300 {
            None
        } else {
            Some(self / n)
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Vec3 {
        vec3(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        vec3(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        vec3(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        vec3(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        vec3(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        vec3(self.x / s, self.y / s, self.z / s)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quat {
    /// Scalar part.
    pub s: f64,
    /// Vector part.
    pub v: Vec3,
}

pub const fn quat(s: f64, x: f64, y: f64, z: f64) -> Quat {
    Quat { s, v: vec3(x, y, z) }
}

impl Quat {
    pub const ZERO: Quat = quat(0.0, 0.0, 0.0, 0.0);

    pub fn scalar(s: f64) -> Quat {
        Quat { s, v: Vec3::ZERO }
    }

    pub fn vector(v: Vec3) -> Quat {
        Quat { s: 0.0, v }
    }

    /// Quaternionic conjugate: scalar part kept, vector part negated.
    pub fn conj(self) -> Quat {
        Quat { s: self.s, v: -self.v }
    }

    pub fn norm_sq(self) -> f64 {
        self.s * self.s + self.v.norm_sq()
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.s, self.v.x, self.v.y, self.v.z]
    }

    pub fn from_array(a: [f64; 4]) -> Quat {
        quat(a[0], a[1], a[2], a[3])
    }
}

impl Add for Quat {
    type Output = Quat;
    fn add(self, o: Quat) -> Quat {
        Quat { s: self.s + o.s, v: self.v + o.v }
    }
}

impl AddAssign for Quat {
    fn add_assign(&mut self, o: Quat) {
        *self = *self + o;
    }
}

impl Sub for Quat {
    type Output = Quat;
    fn sub(self, o: Quat) -> Quat {
        Quat { s: self.s - o.s, v: self.v - o.v }
    }
}

impl Neg for Quat {
    type Output = Quat;
    fn neg(self) -> Quat {
        Quat { s: -self.s, v: -self.v }
    }
}

impl Mul<f64> for Quat {
    type Output = Quat;
    fn mul(self, k: f64) -> Quat {
        Quat { s: self.s * k, v: self.v * k }
    }
}

/// Hamilton product.
impl Mul for Quat {
    type Output = Quat;
    fn mul(self, o: Quat) -> Quat {
        Quat {
            s: self.s * o.s - self.v.dot(o.v),
            v: self.v * o.s + o.v * self.s + self.v.cross(o.v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_pure_vectors_packs_dot_and_cross() {
        let a = Quat::vector(vec3(1.0, 2.0, 3.0));
        let b = Quat::vector(vec3(-4.0, 0.5, 2.0));
        let p = a * b;
        assert_eq!(p.s, -a.v.dot(b.v));
        assert_eq!(p.v, a.v.cross(b.v));
    }

    #[test]
    fn norm_is_multiplicative() {
        let a = quat(0.3, -1.0, 2.0, 0.7);
        let b = quat(-2.0, 0.1, 0.4, 1.5);
        let lhs = (a * b).norm();
        let rhs = a.norm() * b.norm();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }

    #[test]
    fn conjugate_reverses_products() {
        let a = quat(1.0, 2.0, -1.0, 0.5);
        let b = quat(0.2, -0.3, 1.1, 4.0);
        let lhs = (a * b).conj();
        let rhs = b.conj() * a.conj();
        assert!((lhs - rhs).norm() < 1e-14);
    }
}
