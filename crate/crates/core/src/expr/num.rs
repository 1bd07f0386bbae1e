use std::fmt;

use num::rational::Rational64;
use num::traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Signed, ToPrimitive, Zero};

/// Numeric constant stored in an expression tree.
///
/// Rationals stay exact through constant folding; any overflow or
/// transcendental input falls back to `Float`.
#[derive(Clone, Copy, Debug)]
pub enum Num {
    Rational(Rational64),
    Float(f64),
}

#[allow(clippy::should_implement_trait)]
impl Num {
    pub const ZERO: Num = Num::Rational(Rational64::new_raw(0, 1));
    pub const ONE: Num = Num::Rational(Rational64::new_raw(1, 1));

    pub fn int(n: i64) -> Num {
        Num::Rational(Rational64::from_integer(n))
    }

    pub fn ratio(n: i64, d: i64) -> Num {
        assert!(d != 0, "zero denominator in rational constant");
        Num::Rational(Rational64::new(n, d))
    }

    /// Integers representable exactly become rationals, everything else a float.
    pub fn from_f64(x: f64) -> Num {
        if x.is_finite() && x.fract() == 0.0 && x.abs() < 9.0e15 {
            Num::int(x as i64)
        } else {
            Num::Float(x)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Num::Rational(r) => *r.numer() as f64 / *r.denom() as f64,
            Num::Float(x) => x,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Num::Rational(r) => r.is_zero(),
            Num::Float(x) => x == 0.0,
        }
    }

    pub fn is_one(self) -> bool {
        match self {
            Num::Rational(r) => r == Rational64::from_integer(1),
            Num::Float(x) => x == 1.0,
        }
    }

    pub fn is_negative(self) -> bool {
        match self {
            Num::Rational(r) => r.is_negative(),
            Num::Float(x) => x < 0.0,
        }
    }

    pub fn is_integer(self) -> bool {
        match self {
            Num::Rational(r) => r.is_integer(),
            Num::Float(_) => false,
        }
    }

    pub fn neg(self) -> Num {
        match self {
            Num::Rational(r) => match r.numer().checked_neg() {
                Some(n) => Num::Rational(Rational64::new_raw(n, *r.denom())),
                None => Num::Float(-self.to_f64()),
            },
            Num::Float(x) => Num::Float(-x),
        }
    }

    pub fn abs(self) -> Num {
        if self.is_negative() {
            self.neg()
        } else {
            self
        }
    }

    fn combine(
        self,
        other: Num,
        exact: impl Fn(&Rational64, &Rational64) -> Option<Rational64>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Num {
        match (self, other) {
            (Num::Rational(a), Num::Rational(b)) => match exact(&a, &b) {
                Some(r) => Num::Rational(r),
                None => Num::Float(float(self.to_f64(), other.to_f64())),
            },
            _ => Num::Float(float(self.to_f64(), other.to_f64())),
        }
    }

    pub fn add(self, other: Num) -> Num {
        self.combine(other, |a, b| a.checked_add(b), |a, b| a + b)
    }

    pub fn sub(self, other: Num) -> Num {
        self.combine(other, |a, b| a.checked_sub(b), |a, b| a - b)
    }

    pub fn mul(self, other: Num) -> Num {
        self.combine(other, |a, b| a.checked_mul(b), |a, b| a * b)
    }

    /// `None` when dividing by zero.
    pub fn div(self, other: Num) -> Option<Num> {
        if other.is_zero() {
            return None;
        }
        Some(self.combine(other, |a, b| a.checked_div(b), |a, b| a / b))
    }

    /// Integer power; `None` for a negative power of zero.
    pub fn powi(self, n: i32) -> Option<Num> {
        if n < 0 {
            return Num::ONE.div(self.powi(-n)?);
        }
        let mut acc = Num::ONE;
        for _ in 0..n {
            acc = acc.mul(self);
        }
        Some(acc)
    }

    /// Rational with small denominator within `tol` of `x`, if any.
    pub fn snap(x: f64, max_denominator: i64, tol: f64) -> Num {
        for d in 1..=max_denominator {
            let n = (x * d as f64).round();
            if (n / d as f64 - x).abs() <= tol && n.abs() < 1.0e15 {
                return Num::ratio(n as i64, d);
            }
        }
        Num::Float(x)
    }

    pub(crate) fn to_i64(self) -> Option<i64> {
        match self {
            Num::Rational(r) if r.is_integer() => r.numer().to_i64(),
            _ => None,
        }
    }
}

impl PartialEq for Num {
    fn eq(&self, other: &Num) -> bool {
        match (self, other) {
            (Num::Rational(a), Num::Rational(b)) => a == b,
            _ => self.to_f64() == other.to_f64(),
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Rational(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Num::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Num::Float(x) => write!(f, "{:?}", x),
        }
    }
}
