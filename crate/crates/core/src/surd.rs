//! Exact quadratic surds `(p + q·√d) / r` and their continued fractions.
//!
//! All arithmetic is carried out in `i128` with overflow checks. A surd with
//! `q = 0` is a rational number; it is stored with `d = 1`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use crate::dd::Dd;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadraticSurd {
    p: i128,
    q: i128,
    d: i128,
    r: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn isqrt(n: i128) -> i128 {
    debug_assert!(n >= 0);
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as i128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn is_square(n: i128) -> bool {
    n >= 0 && {
        let s = isqrt(n);
        s * s == n
    }
}

trait Checked: Sized {
    fn add_c(self, o: Self) -> Result<Self>;
    fn sub_c(self, o: Self) -> Result<Self>;
    fn mul_c(self, o: Self) -> Result<Self>;
}

impl Checked for i128 {
    fn add_c(self, o: i128) -> Result<i128> {
        self.checked_add(o).ok_or(Error::Overflow)
    }
    fn sub_c(self, o: i128) -> Result<i128> {
        self.checked_sub(o).ok_or(Error::Overflow)
    }
    fn mul_c(self, o: i128) -> Result<i128> {
        self.checked_mul(o).ok_or(Error::Overflow)
    }
}

impl QuadraticSurd {
    /// Builds `(p + q√d)/r`, pulling square factors out of `d` and reducing by the
    /// common gcd. `d` must be positive; it may be a perfect square only when `q = 0`.
    pub fn new(p: i128, q: i128, d: i128, r: i128) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidSurd("denominator r must be non-zero".into()));
        }
        if q != 0 {
            if d <= 0 {
                return Err(Error::InvalidSurd(format!("radicand d must be positive (got {d})")));
            }
            if is_square(d) {
                return Err(Error::InvalidSurd(format!(
                    "radicand d = {d} is a perfect square; pass q = 0 for rationals"
                )));
            }
        }
        let (mut q, mut d) = (q, if q == 0 { 1 } else { d });
        // square-free part of d
        if q != 0 {
            let mut f = 2i128;
            while f * f <= d {
                while d % (f * f) == 0 {
                    d /= f * f;
                    q = q.mul_c(f)?;
                }
                f += 1;
            }
        }
        let (mut p, mut r) = (p, r);
        if r < 0 {
            p = p.checked_neg().ok_or(Error::Overflow)?;
            q = q.checked_neg().ok_or(Error::Overflow)?;
            r = r.checked_neg().ok_or(Error::Overflow)?;
        }
        let g = gcd(gcd(p, q), r);
        if g > 1 {
            p /= g;
            q /= g;
            r /= g;
        }
        Ok(QuadraticSurd { p, q, d, r })
    }

    pub fn integer(n: i128) -> Self {
        QuadraticSurd { p: n, q: 0, d: 1, r: 1 }
    }

    pub fn rational(p: i128, r: i128) -> Result<Self> {
        Self::new(p, 0, 1, r)
    }

    /// `√n` for a positive non-square `n`.
    pub fn sqrt(n: i128) -> Result<Self> {
        Self::new(0, 1, n, 1)
    }

    /// The golden ratio `(1 + √5)/2`.
    pub fn golden_ratio() -> Self {
        QuadraticSurd { p: 1, q: 1, d: 5, r: 2 }
    }

    /// `φ⁻¹ = (√5 − 1)/2`.
    pub fn inverse_golden_ratio() -> Self {
        QuadraticSurd { p: -1, q: 1, d: 5, r: 2 }
    }

    pub fn parts(&self) -> (i128, i128, i128, i128) {
        (self.p, self.q, self.d, self.r)
    }

    pub fn is_rational(&self) -> bool {
        self.q == 0
    }

    pub fn is_zero(&self) -> bool {
        self.p == 0 && self.q == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.to_dd().to_f64()
    }

    pub(crate) fn to_dd(self) -> Dd {
        let root = if self.q == 0 { Dd::ZERO } else { Dd::sqrt_int(self.d as u64).mul_f64(self.q as f64) };
        (root + Dd::from_f64(self.p as f64)).div_f64(self.r as f64)
    }

    fn common_d(&self, o: &Self) -> Result<i128> {
        match (self.q == 0, o.q == 0) {
            (true, true) => Ok(1),
            (true, false) => Ok(o.d),
            (false, true) => Ok(self.d),
            (false, false) if self.d == o.d => Ok(self.d),
            _ => {
                Err(Error::InvalidSurd(format!("cannot combine surds over different radicands {} and {}", self.d, o.d)))
            }
        }
    }

    pub fn checked_add(&self, o: &Self) -> Result<Self> {
        let d = self.common_d(o)?;
        let p = self.p.mul_c(o.r)?.add_c(o.p.mul_c(self.r)?)?;
        let q = self.q.mul_c(o.r)?.add_c(o.q.mul_c(self.r)?)?;
        Self::new(p, q, d, self.r.mul_c(o.r)?)
    }

    pub fn checked_neg(&self) -> Result<Self> {
        Self::new(-self.p, -self.q, self.d, self.r)
    }

    pub fn checked_sub(&self, o: &Self) -> Result<Self> {
        self.checked_add(&o.checked_neg()?)
    }

    pub fn checked_mul(&self, o: &Self) -> Result<Self> {
        let d = self.common_d(o)?;
        let p = self.p.mul_c(o.p)?.add_c(self.q.mul_c(o.q)?.mul_c(d)?)?;
        let q = self.p.mul_c(o.q)?.add_c(self.q.mul_c(o.p)?)?;
        Self::new(p, q, d, self.r.mul_c(o.r)?)
    }

    pub fn checked_div(&self, o: &Self) -> Result<Self> {
        if o.is_zero() {
            return Err(Error::InvalidSurd("division by zero".into()));
        }
        let d = self.common_d(o)?;
        // x / y = x · conj(y) · r_y / (p_y² − q_y² d)
        let norm = o.p.mul_c(o.p)?.sub_c(o.q.mul_c(o.q)?.mul_c(d)?)?;
        let conj = Self::new(o.p.mul_c(o.r)?, o.q.mul_c(o.r)?.checked_neg().ok_or(Error::Overflow)?, d, 1)?;
        let num = self.checked_mul(&conj)?;
        Self::new(num.p, num.q, num.d, num.r.mul_c(norm)?)
    }

    /// Exact floor.
    pub fn floor(&self) -> Result<i128> {
        if self.q == 0 {
            return Ok(floor_div(self.p, self.r));
        }
        // q√d = sign(q)·√(q²d)
        let big = self.q.mul_c(self.q)?.mul_c(self.d)?;
        let s = isqrt(big);
        if self.q > 0 {
            // floor((p + √big)/r) with √big irrational
            Ok(floor_div(self.p.add_c(s)?, self.r))
        } else {
            // (p − √big)/r ; floor(p − √big) = p − s − 1
            Ok(floor_div(self.p.sub_c(s)?.sub_c(1)?, self.r))
        }
    }

    /// The first `n` partial quotients of the regular continued fraction.
    ///
    /// Irrational surds are expanded through the `(P + √D)/Q` recurrence with
    /// `Q | D − P²`, which keeps every state integral and makes the eventual
    /// period detectable as a repeated `(P, Q)` pair. Rationals terminate early
    /// and are flagged.
    pub fn continued_fraction(&self, n: usize) -> Result<ContinuedFraction> {
        if n == 0 {
            return Err(Error::InsufficientData("requested zero partial quotients".into()));
        }
        if self.q == 0 {
            let (mut num, mut den) = (self.p, self.r);
            let mut quotients = Vec::new();
            while den != 0 && quotients.len() < n {
                let a = floor_div(num, den);
                quotients.push(a);
                let rem = num.sub_c(a.mul_c(den)?)?;
                num = den;
                den = rem;
            }
            return Ok(ContinuedFraction { quotients, rational: true, preperiod: None, period: None });
        }

        let sign = self.q.signum();
        let mut big_d = self.q.mul_c(self.q)?.mul_c(self.d)?;
        let mut pp = sign * self.p;
        let mut qq = sign * self.r;
        if (big_d - pp.mul_c(pp)?) % qq != 0 {
            let f = qq.abs();
            pp = pp.mul_c(f)?;
            qq = qq.mul_c(f)?;
            big_d = big_d.mul_c(f.mul_c(f)?)?;
        }
        let s = isqrt(big_d);

        let mut seen: HashMap<(i128, i128), usize> = HashMap::new();
        let mut preperiod = None;
        let mut period = None;
        let mut quotients = Vec::with_capacity(n);
        while quotients.len() < n {
            if period.is_none() {
                if let Some(&first) = seen.get(&(pp, qq)) {
                    preperiod = Some(first);
                    period = Some(quotients.len() - first);
                } else {
                    seen.insert((pp, qq), quotients.len());
                }
            }
            let a = if qq > 0 { floor_div(pp.add_c(s)?, qq) } else { -floor_div(pp.add_c(s)?, -qq) - 1 };
            quotients.push(a);
            let next_p = a.mul_c(qq)?.sub_c(pp)?;
            let next_q = big_d.sub_c(next_p.mul_c(next_p)?)? / qq;
            pp = next_p;
            qq = next_q;
        }
        Ok(ContinuedFraction { quotients, rational: false, preperiod, period })
    }
}

impl PartialOrd for QuadraticSurd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for QuadraticSurd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.q == 0 {
            if self.r == 1 {
                write!(f, "{}", self.p)
            } else {
                write!(f, "{}/{}", self.p, self.r)
            }
        } else {
            write!(f, "({} + {}√{})/{}", self.p, self.q, self.d, self.r)
        }
    }
}

/// Partial quotients of a continued fraction together with the detected period.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFraction {
    pub quotients: Vec<i128>,
    /// The expansion terminated (input was rational).
    pub rational: bool,
    /// Index of the first quotient of the repeating block.
    pub preperiod: Option<usize>,
    pub period: Option<usize>,
}

impl ContinuedFraction {
    /// Largest partial quotient after the integer part.
    pub fn max_tail_quotient(&self) -> Option<i128> {
        self.quotients.iter().skip(1).copied().max()
    }

    /// Eventually periodic expansions have bounded partial quotients, i.e. the
    /// number is badly approximable.
    pub fn is_badly_approximable(&self) -> bool {
        !self.rational && self.period.is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_all_ones() {
        let cf = QuadraticSurd::golden_ratio().continued_fraction(20).unwrap();
        assert!(cf.quotients.iter().all(|&a| a == 1));
        assert_eq!(cf.period, Some(1));
        assert!(!cf.rational);
    }

    #[test]
    fn sqrt2_is_one_then_twos() {
        let cf = QuadraticSurd::sqrt(2).unwrap().continued_fraction(12).unwrap();
        assert_eq!(cf.quotients[0], 1);
        assert!(cf.quotients[1..].iter().all(|&a| a == 2));
        assert_eq!(cf.period, Some(1));
        assert_eq!(cf.preperiod, Some(1));
    }

    #[test]
    fn rational_terminates() {
        let x = QuadraticSurd::new(7, 0, 5, 3).unwrap();
        let cf = x.continued_fraction(10).unwrap();
        assert_eq!(cf.quotients, vec![2, 3]);
        assert!(cf.rational);
        assert!(!cf.is_badly_approximable());
    }

    #[test]
    fn negative_rational_uses_floor() {
        let cf = QuadraticSurd::rational(-7, 3).unwrap().continued_fraction(10).unwrap();
        // -7/3 = -3 + 2/3 = [-3; 1, 2]
        assert_eq!(cf.quotients, vec![-3, 1, 2]);
    }

    #[test]
    fn sqrt7_period_four() {
        // √7 = [2; 1, 1, 1, 4]
        let cf = QuadraticSurd::sqrt(7).unwrap().continued_fraction(9).unwrap();
        assert_eq!(cf.quotients, vec![2, 1, 1, 1, 4, 1, 1, 1, 4]);
        assert_eq!(cf.period, Some(4));
    }

    #[test]
    fn negative_surd_expansion() {
        // -φ⁻¹ = (1 - √5)/2 ≈ -0.618 = [-1; 2, 1, 1, ...]
        let x = QuadraticSurd::inverse_golden_ratio().checked_neg().unwrap();
        let cf = x.continued_fraction(8).unwrap();
        assert_eq!(cf.quotients, vec![-1, 2, 1, 1, 1, 1, 1, 1]);
        assert!(cf.is_badly_approximable());
    }

    #[test]
    fn normalization_pulls_square_factors() {
        let a = QuadraticSurd::new(0, 1, 8, 1).unwrap();
        let b = QuadraticSurd::new(0, 2, 2, 1).unwrap();
        assert_eq!(a, b);
        let c = QuadraticSurd::new(2, 2, 5, 4).unwrap();
        assert_eq!(c, QuadraticSurd::golden_ratio());
    }

    #[test]
    fn field_operations() {
        let phi = QuadraticSurd::golden_ratio();
        let inv = QuadraticSurd::inverse_golden_ratio();
        assert_eq!(phi.checked_mul(&inv).unwrap(), QuadraticSurd::integer(1));
        assert_eq!(QuadraticSurd::integer(1).checked_div(&inv).unwrap(), phi);
        assert_eq!(phi.checked_sub(&inv).unwrap(), QuadraticSurd::integer(1));
        // φ² = φ + 1
        assert_eq!(phi.checked_mul(&phi).unwrap(), phi.checked_add(&QuadraticSurd::integer(1)).unwrap());
    }

    #[test]
    fn floor_is_exact() {
        assert_eq!(QuadraticSurd::golden_ratio().floor().unwrap(), 1);
        assert_eq!(QuadraticSurd::inverse_golden_ratio().checked_neg().unwrap().floor().unwrap(), -1);
        assert_eq!(QuadraticSurd::sqrt(99).unwrap().floor().unwrap(), 9);
        assert_eq!(QuadraticSurd::new(0, -1, 99, 1).unwrap().floor().unwrap(), -10);
    }

    #[test]
    fn invalid_inputs() {
        assert!(QuadraticSurd::new(1, 1, 4, 1).is_err());
        assert!(QuadraticSurd::new(1, 1, 5, 0).is_err());
        assert!(QuadraticSurd::new(1, 1, -5, 1).is_err());
        assert!(QuadraticSurd::golden_ratio().checked_add(&QuadraticSurd::sqrt(2).unwrap()).is_err());
    }

    #[test]
    fn dd_value_matches() {
        let v = QuadraticSurd::inverse_golden_ratio().to_dd();
        let want = (5f64.sqrt() - 1.0) / 2.0;
        assert!((v.to_f64() - want).abs() < 1e-16);
    }
}
