//! Fixed-size 2×2 algebra for the augmented per-SMA blocks.

use std::ops::{Add, Index, Mul, Neg, Sub};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2<T>(pub [T; 2]);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2<T>(pub [[T; 2]; 2]);

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self([x, y])
    }

    pub fn zero() -> Self {
        Self([T::zero(); 2])
    }

    pub fn scale(self, s: T) -> Self {
        Self([self.0[0] * s, self.0[1] * s])
    }

    pub fn dot(self, other: Self) -> T {
        self.0[0] * other.0[0] + self.0[1] * other.0[1]
    }

    /// Outer product `self * other^T`.
    pub fn outer(self, other: Self) -> Mat2<T> {
        Mat2([
            [self.0[0] * other.0[0], self.0[0] * other.0[1]],
            [self.0[1] * other.0[0], self.0[1] * other.0[1]],
        ])
    }

    pub fn le(self, other: Self) -> bool {
        self.0[0] <= other.0[0] && self.0[1] <= other.0[1]
    }

    pub fn max_abs(self) -> T {
        self.0[0].abs().max(self.0[1].abs())
    }
}

impl<T: Scalar> Mat2<T> {
    pub fn identity() -> Self {
        Self([[T::one(), T::zero()], [T::zero(), T::one()]])
    }

    pub fn zero() -> Self {
        Self([[T::zero(); 2]; 2])
    }

    pub fn scale(self, s: T) -> Self {
        let m = self.0;
        Self([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn transpose(self) -> Self {
        let m = self.0;
        Self([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn entries(self) -> impl Iterator<Item = (usize, usize, T)> {
        let m = self.0;
        (0..2).flat_map(move |r| (0..2).map(move |c| (r, c, m[r][c])))
    }
}

impl<T: Scalar> Index<usize> for Vec2<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self([-self.0[0], -self.0[1]])
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(-T::one())
    }
}

impl<T: Scalar> Mul<Vec2<T>> for Mat2<T> {
    type Output = Vec2<T>;
    fn mul(self, v: Vec2<T>) -> Vec2<T> {
        let m = self.0;
        Vec2([m[0][0] * v.0[0] + m[0][1] * v.0[1], m[1][0] * v.0[0] + m[1][1] * v.0[1]])
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        let mut out = [[T::zero(); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Self(out)
    }
}
