//! C^∞ cutoff building blocks and a small truncated-Taylor ("jet") number type
//! used to differentiate them exactly.
//!
//! Everything here is written against [`Real`] so the same formula serves both
//! plain evaluation (`f64`) and derivative evaluation ([`Jet`]).

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number of Taylor coefficients carried by a [`Jet`] (derivatives 0..=4).
pub const JET_LEN: usize = 5;

/// Arithmetic needed by the smooth profiles.
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn constant(value: f64) -> Self;
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn zero() -> Self {
        Self::constant(0.0)
    }
}

impl Real for f64 {
    fn constant(value: f64) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
}

/// Truncated Taylor expansion `Σ c_k (x - x0)^k`, k < [`JET_LEN`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; JET_LEN]);

impl Jet {
    /// The independent variable at `x0`.
    pub fn variable(x0: f64) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = x0;
        c[1] = 1.0;
        Jet(c)
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let factorial: f64 = (1..=k).map(|i| i as f64).product();
        self.0[k] * factorial
    }

    fn recip(self) -> Self {
        let a = self.0;
        let mut r = [0.0; JET_LEN];
        r[0] = 1.0 / a[0];
        for k in 1..JET_LEN {
            let s: f64 = (1..=k).map(|i| a[i] * r[k - i]).sum();
            r[k] = -s / a[0];
        }
        Jet(r)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let mut c = self.0;
        c.iter_mut().zip(rhs.0).for_each(|(a, b)| *a += b);
        Jet(c)
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet(self.0.map(|v| -v))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate().take(JET_LEN - i) {
                c[i + j] += a * b;
            }
        }
        Jet(c)
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Real for Jet {
    fn constant(value: f64) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = value;
        Jet(c)
    }
    fn value(&self) -> f64 {
        self.0[0]
    }
    fn exp(self) -> Self {
        // exp(a0 + h) = e^{a0} · exp(h), with h nilpotent of order JET_LEN.
        let mut h = self;
        h.0[0] = 0.0;
        let mut term = Jet::constant(1.0);
        let mut sum = Jet::constant(1.0);
        for k in 1..JET_LEN {
            term = term * h * Jet::constant(1.0 / k as f64);
            sum = sum + term;
        }
        sum * Jet::constant(self.0[0].exp())
    }
}

/// `exp(-1/t)` for `t > 0`, zero otherwise.
pub fn flat_exp<T: Real>(t: T) -> T {
    if t.value() <= 0.0 {
        T::zero()
    } else {
        (-(T::constant(1.0) / t)).exp()
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, `S(t) + S(1 - t) = 1`.
pub fn smoothstep<T: Real>(t: T) -> T {
    if t.value() <= 0.0 {
        return T::zero();
    }
    if t.value() >= 1.0 {
        return T::constant(1.0);
    }
    let a = flat_exp(t);
    let b = flat_exp(T::constant(1.0) - t);
    a / (a + b)
}
