//! Truncated Taylor jets in a single variable.
//!
//! A jet of length `n` stores the normalized Taylor coefficients
//! `c_k = f^(k)(s0) / k!` for `k < n`. Arithmetic is the usual truncated
//! power-series arithmetic, so any expression built from jets carries exact
//! derivatives (up to rounding) of the same expression at `s0`.
//!
//! Jets are `Copy` with a fixed inline capacity so that quadrature can push
//! them through integrands without allocating.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Maximum number of coefficients a jet can carry.
pub const MAX_JET_LEN: usize = 8;

#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    len: usize,
    c: [f64; MAX_JET_LEN],
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.coeffs()).finish()
    }
}

impl Jet {
    pub fn constant(value: f64, len: usize) -> Self {
        assert!((1..=MAX_JET_LEN).contains(&len), "jet length {len} out of range");
        let mut c = [0.0; MAX_JET_LEN];
        c[0] = value;
        Jet { len, c }
    }

    /// The identity function expanded at `s0`.
    pub fn variable(s0: f64, len: usize) -> Self {
        let mut j = Self::constant(s0, len);
        if len > 1 {
            j.c[1] = 1.0;
        }
        j
    }

    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        let mut j = Self::constant(0.0, coeffs.len());
        j.c[..coeffs.len()].copy_from_slice(coeffs);
        j
    }

    /// Jet of `f(s0 + h)` from its normalized coefficients generated by `gen(k)`.
    pub fn from_fn(len: usize, mut gen: impl FnMut(usize) -> f64) -> Self {
        let mut j = Self::constant(0.0, len);
        for k in 0..len {
            j.c[k] = gen(k);
        }
        j
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    #[inline]
    pub fn coeff(&self, k: usize) -> f64 {
        if k < self.len {
            self.c[k]
        } else {
            0.0
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.len]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.coeff(k) * fact
    }

    #[inline]
    pub fn set_value(&mut self, v: f64) {
        self.c[0] = v;
    }

    #[inline]
    pub fn scale(mut self, a: f64) -> Self {
        for v in &mut self.c[..self.len] {
            *v *= a;
        }
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn recip(self) -> Self {
        let a0 = self.c[0];
        let mut out = Self::constant(0.0, self.len);
        out.c[0] = 1.0 / a0;
        for k in 1..self.len {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * out.c[k - j];
            }
            out.c[k] = -acc / a0;
        }
        out
    }

    pub fn powi(self, mut n: u32) -> Self {
        let mut base = self;
        let mut acc = Self::constant(1.0, self.len);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base;
            }
            n >>= 1;
            if n > 0 {
                base = base * base;
            }
        }
        acc
    }

    pub fn exp(self) -> Self {
        let mut out = Self::constant(self.c[0].exp(), self.len);
        // k e_k = sum_{j=1}^{k} j a_j e_{k-j}
        for k in 1..self.len {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * out.c[k - j];
            }
            out.c[k] = acc / k as f64;
        }
        out
    }

    pub fn ln(self) -> Self {
        let a0 = self.c[0];
        let mut out = Self::constant(a0.ln(), self.len);
        // a0 k l_k = k a_k - sum_{j=1}^{k-1} j l_j a_{k-j}
        for k in 1..self.len {
            let mut acc = k as f64 * self.c[k];
            for j in 1..k {
                acc -= j as f64 * out.c[j] * self.c[k - j];
            }
            out.c[k] = acc / (k as f64 * a0);
        }
        out
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.len, rhs.len);
        for k in 0..self.len {
            self.c[k] += rhs.c[k];
        }
        self
    }
}

impl AddAssign for Jet {
    #[inline]
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(mut self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.len, rhs.len);
        for k in 0..self.len {
            self.c[k] -= rhs.c[k];
        }
        self
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        debug_assert_eq!(self.len, rhs.len);
        let mut out = Jet::constant(0.0, self.len);
        for i in 0..self.len {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..self.len - i {
                out.c[i + j] += self.c[i] * rhs.c[j];
            }
        }
        out
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    #[inline]
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}
