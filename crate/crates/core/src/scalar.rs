//! Double-double real scalar.
//!
//! A value is stored as an unevaluated sum `hi + lo` of two `f64` with
//! `|lo| <= ulp(hi) / 2`, giving roughly 32 significant decimal digits.
//! Products use Dekker splitting rather than hardware FMA so results are
//! bit-identical on every target.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::{BigInt, Sign};
use num_traits::{Num, One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Clone, Copy, Debug, Default)]
pub struct Scalar {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

impl Scalar {
    pub const ZERO: Scalar = Scalar { hi: 0.0, lo: 0.0 };
    pub const ONE: Scalar = Scalar { hi: 1.0, lo: 0.0 };
    pub const TWO: Scalar = Scalar { hi: 2.0, lo: 0.0 };
    pub const PI: Scalar = Scalar {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };
    pub const FRAC_PI_2: Scalar = Scalar {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123_233_995_736_766e-17,
    };
    pub const LN_2: Scalar = Scalar {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };
    /// Unit roundoff, 2^-104.
    pub const EPSILON: f64 = 4.930_380_657_631_324e-32;

    #[inline]
    pub const fn from_f64(x: f64) -> Scalar {
        Scalar { hi: x, lo: 0.0 }
    }

    /// Builds a value from two components, renormalizing them.
    #[inline]
    pub fn from_parts(hi: f64, lo: f64) -> Scalar {
        let (h, l) = two_sum(hi, lo);
        Scalar { hi: h, lo: l }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    #[inline]
    pub fn is_sign_negative(self) -> bool {
        self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0)
    }

    /// -1, 0 or +1.
    #[inline]
    pub fn signum(self) -> i32 {
        if self.hi > 0.0 {
            1
        } else if self.hi < 0.0 {
            -1
        } else {
            0
        }
    }

    #[inline]
    pub fn abs(self) -> Scalar {
        if self.is_sign_negative() {
            -self
        } else {
            self
        }
    }

    pub fn max(self, other: Scalar) -> Scalar {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Scalar) -> Scalar {
        if other < self {
            other
        } else {
            self
        }
    }

    #[inline]
    pub fn sqr(self) -> Scalar {
        self * self
    }

    /// Exact multiplication by a power of two.
    #[inline]
    pub fn ldexp(self, exp: i32) -> Scalar {
        let f = 2f64.powi(exp);
        Scalar {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn recip(self) -> Scalar {
        Scalar::ONE / self
    }

    pub fn powi(self, n: i32) -> Scalar {
        if n == 0 {
            return Scalar::ONE;
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Scalar::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base = base.sqr();
            e >>= 1;
        }
        acc
    }

    pub fn sqrt(self) -> Scalar {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Scalar::ZERO
            } else {
                Scalar::from_f64(f64::NAN)
            };
        }
        let x = Scalar::from_f64(self.hi.sqrt());
        x + (self - x.sqr()) / (x * 2.0)
    }

    pub fn hypot(self, other: Scalar) -> Scalar {
        (self.sqr() + other.sqr()).sqrt()
    }

    pub fn round(self) -> Scalar {
        let h = self.hi.round();
        if h == self.hi {
            let l = self.lo.round();
            Scalar::from_parts(h, l)
        } else if (h - self.hi).abs() == 0.5 && self.lo != 0.0 {
            // hi sits on a half-integer; lo decides.
            if self.lo > 0.0 {
                Scalar::from_f64(self.hi.floor() + 1.0)
            } else {
                Scalar::from_f64(self.hi.ceil() - 1.0)
            }
        } else {
            Scalar::from_f64(h)
        }
    }

    pub fn exp(self) -> Scalar {
        if self.hi > 709.0 {
            return Scalar::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Scalar::ZERO;
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = (self - Scalar::LN_2 * k).ldexp(-10);
        // expm1 by Taylor on |r| < 3.4e-4, then (1+s)^2 - 1 = s (s + 2) ten times.
        let mut term = r;
        let mut s = r;
        for i in 2..=12 {
            term = term * r / (i as f64);
            s += term;
        }
        for _ in 0..10 {
            s = s * (s + 2.0);
        }
        (s + 1.0).ldexp(k as i32)
    }

    pub fn ln(self) -> Scalar {
        if self.hi <= 0.0 {
            return Scalar::from_f64(f64::NAN);
        }
        let mut y = Scalar::from_f64(self.hi.ln());
        for _ in 0..2 {
            y = y + self * (-y).exp() - 1.0;
        }
        y
    }

    /// Reduces to `r` in [-pi/4, pi/4] with `self = r + k*pi/2`; returns (r, k mod 4).
    fn reduce_quarter_turns(self) -> (Scalar, i64) {
        let k = (self / Scalar::FRAC_PI_2).round();
        let r = self - Scalar::FRAC_PI_2 * k;
        (r, (k.to_f64() as i64).rem_euclid(4))
    }

    fn sin_taylor(r: Scalar) -> Scalar {
        let r2 = r.sqr();
        let mut term = r;
        let mut sum = r;
        let mut n = 1.0;
        for _ in 0..16 {
            term = -term * r2 / ((n + 1.0) * (n + 2.0));
            n += 2.0;
            sum += term;
        }
        sum
    }

    fn cos_taylor(r: Scalar) -> Scalar {
        let r2 = r.sqr();
        let mut term = Scalar::ONE;
        let mut sum = Scalar::ONE;
        let mut n = 0.0;
        for _ in 0..16 {
            term = -term * r2 / ((n + 1.0) * (n + 2.0));
            n += 2.0;
            sum += term;
        }
        sum
    }

    pub fn sin(self) -> Scalar {
        let (r, k) = self.reduce_quarter_turns();
        match k {
            0 => Self::sin_taylor(r),
            1 => Self::cos_taylor(r),
            2 => -Self::sin_taylor(r),
            _ => -Self::cos_taylor(r),
        }
    }

    pub fn cos(self) -> Scalar {
        let (r, k) = self.reduce_quarter_turns();
        match k {
            0 => Self::cos_taylor(r),
            1 => -Self::sin_taylor(r),
            2 => -Self::cos_taylor(r),
            _ => Self::sin_taylor(r),
        }
    }

    /// Decimal scientific notation with exactly `digits` significant digits
    /// (correctly rounded from the exact binary value).
    pub fn to_decimal(self, digits: usize) -> String {
        if !self.is_finite() {
            return format!("{}", self.to_f64());
        }
        if self.is_zero() {
            return format!("0.{}e+00", "0".repeat(digits.saturating_sub(1)));
        }
        let (mantissa, exp10) = exact_decimal(self);
        let neg = mantissa.sign() == Sign::Minus;
        let mut s = mantissa.magnitude().to_str_radix(10);
        let mut exp = exp10 + s.len() as i64 - 1;
        if s.len() > digits {
            let round_up = s.as_bytes()[digits] >= b'5';
            s.truncate(digits);
            if round_up {
                let bumped = (s.parse::<num_bigint::BigUint>().unwrap() + 1u32).to_str_radix(10);
                if bumped.len() > digits {
                    exp += 1;
                    s = bumped[..digits].to_string();
                } else {
                    s = bumped;
                }
            }
        } else {
            while s.len() < digits {
                s.push('0');
            }
        }
        let (head, tail) = s.split_at(1);
        format!(
            "{}{}.{}e{}{:02}",
            if neg { "-" } else { "" },
            head,
            tail,
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    }

    /// Shortest decimal string with at least 34 significant digits that
    /// parses back to exactly this value.
    pub fn to_exact_string(self) -> String {
        let mut digits = 34;
        loop {
            let s = self.to_decimal(digits);
            match s.parse::<Scalar>() {
                Ok(back) if back.hi.to_bits() == self.hi.to_bits() && back.lo.to_bits() == self.lo.to_bits() => {
                    return s
                }
                _ if digits >= 800 => return s,
                _ => digits += 4,
            }
        }
    }
}

/// Decomposes a finite f64 into (integer mantissa, binary exponent).
fn decompose(x: f64) -> (i64, i32) {
    if x == 0.0 {
        return (0, 0);
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = (bits & ((1u64 << 52) - 1)) as i64;
    if exp == 0 {
        (sign * frac, -1074)
    } else {
        (sign * (frac | (1i64 << 52)), exp - 1075)
    }
}

/// Exact value as `mantissa * 10^exp10`.
fn exact_decimal(x: Scalar) -> (BigInt, i64) {
    let parts = [decompose(x.hi), decompose(x.lo)];
    let emin = parts.iter().filter(|p| p.0 != 0).map(|p| p.1).min().unwrap_or(0);
    let mut n = BigInt::zero();
    for (m, e) in parts {
        if m != 0 {
            n += BigInt::from(m) << ((e - emin) as usize);
        }
    }
    if emin >= 0 {
        (n << (emin as usize), 0)
    } else {
        let k = (-emin) as u32;
        (n * BigInt::from(5).pow(k), emin as i64)
    }
}

fn pow10(k: u32) -> BigInt {
    BigInt::from(10).pow(k)
}

impl FromStr for Scalar {
    type Err = Error;

    fn from_str(text: &str) -> Result<Scalar, Error> {
        let bad = || Error::Parse(format!("invalid scalar literal {text:?}"));
        let s = text.trim();
        let hi: f64 = s.parse().map_err(|_| bad())?;
        if !hi.is_finite() {
            return Err(bad());
        }
        // Exact decimal value M * 10^E of the literal.
        let (body, exp_part) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (neg, body) = match body.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, body.strip_prefix('+').unwrap_or(body)),
        };
        let (int_part, frac_part) = match body.find('.') {
            Some(i) => (&body[..i], &body[i + 1..]),
            None => (body, ""),
        };
        let digits: String = format!("{int_part}{frac_part}");
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let mut m = BigInt::parse_bytes(digits.as_bytes(), 10).ok_or_else(bad)?;
        if neg {
            m = -m;
        }
        let e10 = exp_part - frac_part.len() as i64;
        if m.is_zero() {
            return Ok(Scalar::ZERO);
        }

        // r = M*10^E - hi, as K / D with integers.
        let (hm, he) = decompose(hi);
        let a = (-e10).max(0) as u32;
        let b = (-he).max(0) as usize;
        let x_scaled = if e10 >= 0 {
            (m * pow10(e10 as u32)) << b
        } else {
            m << b
        };
        let h_scaled = (BigInt::from(hm) << ((he + b as i32) as usize)) * pow10(a);
        let k = x_scaled - h_scaled;
        if k.is_zero() {
            return Ok(Scalar::from_f64(hi));
        }
        let d = pow10(a) << b;
        let kd = k.magnitude().to_str_radix(10).len() as i64;
        let dd = d.to_str_radix(10).len() as i64;
        let t = (25 + dd - kd).max(0) as u32;
        let q = (k * pow10(t)) / d;
        let lo: f64 = format!("{}e-{}", q, t).parse().map_err(|_| bad())?;
        let (h, l) = quick_two_sum(hi, lo);
        Ok(Scalar { hi: h, lo: l })
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "{}", self.to_decimal(p.max(1))),
            None => write!(f, "{}", self.to_decimal(34)),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_exact_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Scalar, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Scalar {
        Scalar::from_f64(x)
    }
}

impl From<i32> for Scalar {
    fn from(x: i32) -> Scalar {
        Scalar::from_f64(x as f64)
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Scalar) -> bool {
        self.hi == other.hi && self.lo == other.lo
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Scalar) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl PartialEq<f64> for Scalar {
    fn eq(&self, other: &f64) -> bool {
        self.hi == *other && self.lo == 0.0
    }
}

impl PartialOrd<f64> for Scalar {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.partial_cmp(&Scalar::from_f64(*other))
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    #[inline]
    fn neg(self) -> Scalar {
        Scalar {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Scalar {
    type Output = Scalar;
    #[inline]
    fn add(self, rhs: Scalar) -> Scalar {
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        Scalar { hi, lo }
    }
}

impl Add<f64> for Scalar {
    type Output = Scalar;
    #[inline]
    fn add(self, rhs: f64) -> Scalar {
        let (s1, s2) = two_sum(self.hi, rhs);
        let (hi, lo) = quick_two_sum(s1, s2 + self.lo);
        Scalar { hi, lo }
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    #[inline]
    fn sub(self, rhs: Scalar) -> Scalar {
        self + (-rhs)
    }
}

impl Sub<f64> for Scalar {
    type Output = Scalar;
    #[inline]
    fn sub(self, rhs: f64) -> Scalar {
        self + (-rhs)
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    #[inline]
    fn mul(self, rhs: Scalar) -> Scalar {
        let (p1, p2) = two_prod(self.hi, rhs.hi);
        let p2 = p2 + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Scalar { hi, lo }
    }
}

impl Mul<f64> for Scalar {
    type Output = Scalar;
    #[inline]
    fn mul(self, rhs: f64) -> Scalar {
        let (p1, p2) = two_prod(self.hi, rhs);
        let (hi, lo) = quick_two_sum(p1, p2 + self.lo * rhs);
        Scalar { hi, lo }
    }
}

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * q1;
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * q2;
        let q3 = r.hi / rhs.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        Scalar { hi: q1, lo: q2 } + q3
    }
}

impl Div<f64> for Scalar {
    type Output = Scalar;
    fn div(self, rhs: f64) -> Scalar {
        self / Scalar::from_f64(rhs)
    }
}

impl Rem for Scalar {
    type Output = Scalar;
    fn rem(self, rhs: Scalar) -> Scalar {
        let q = self / rhs;
        let t = Scalar::from_parts(q.hi.trunc(), if q.hi.fract() == 0.0 { q.lo.trunc() } else { 0.0 });
        self - rhs * t
    }
}

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:tt $rhs:ty),*) => {$(
        impl $tr<$rhs> for Scalar {
            #[inline]
            fn $m(&mut self, rhs: $rhs) { *self = *self $op rhs; }
        }
    )*};
}
assign_ops!(
    AddAssign add_assign + Scalar, AddAssign add_assign + f64,
    SubAssign sub_assign - Scalar, SubAssign sub_assign - f64,
    MulAssign mul_assign * Scalar, MulAssign mul_assign * f64,
    DivAssign div_assign / Scalar, DivAssign div_assign / f64
);

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::ZERO, |a, b| a + b)
    }
}

impl Zero for Scalar {
    fn zero() -> Scalar {
        Scalar::ZERO
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for Scalar {
    fn one() -> Scalar {
        Scalar::ONE
    }
}

impl Num for Scalar {
    type FromStrRadixErr = Error;
    fn from_str_radix(s: &str, radix: u32) -> Result<Scalar, Error> {
        if radix != 10 {
            return Err(Error::Parse(format!("radix {radix} unsupported")));
        }
        s.parse()
    }
}

/// Complex number over [`Scalar`].
pub type ComplexScalar = num_complex::Complex<Scalar>;

pub fn cabs(z: ComplexScalar) -> Scalar {
    z.re.hypot(z.im)
}
