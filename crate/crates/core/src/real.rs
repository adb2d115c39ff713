//! Ball arithmetic over dyadic numbers.
//!
//! A [`Real`] is a midpoint `mid * 2^exp` together with a radius `rad * 2^exp`
//! and represents every number in `[mid - rad, mid + rad] * 2^exp`. Every
//! operation rounds the midpoint to the working precision and widens the
//! radius so that the true result stays inside the enclosure.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{CheckedSub, One, Signed, ToPrimitive, Zero};

/// Guard bits added on top of the requested working precision.
const GUARD: u32 = 8;

#[derive(Clone, PartialEq, Eq)]
pub struct Real {
    mid: BigInt,
    rad: BigUint,
    exp: i64,
    prec: u32,
}

impl Real {
    pub fn zero(prec: u32) -> Self {
        Real { mid: BigInt::zero(), rad: BigUint::zero(), exp: 0, prec }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_int(1, prec)
    }

    pub fn from_int(v: i64, prec: u32) -> Self {
        Real { mid: BigInt::from(v), rad: BigUint::zero(), exp: 0, prec }.normalized()
    }

    pub fn from_bigint(v: BigInt, prec: u32) -> Self {
        Real { mid: v, rad: BigUint::zero(), exp: 0, prec }.normalized()
    }

    /// `mid * 2^exp`, exact up to rounding to `prec` bits.
    pub fn from_dyadic(mid: BigInt, exp: i64, prec: u32) -> Self {
        Real { mid, rad: BigUint::zero(), exp, prec }.normalized()
    }

    /// Enclosure of `num / den`.
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        Self::from_bigint(num.clone(), prec + GUARD)
            .div(&Self::from_bigint(den.clone(), prec + GUARD))
            .expect("exact nonzero denominator")
            .with_prec(prec)
    }

    /// Exact conversion of a finite `f64`.
    pub fn from_f64(v: f64, prec: u32) -> Self {
        assert!(v.is_finite());
        if v == 0.0 {
            return Self::zero(prec);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), raw_exp - 1075) };
        Self::from_dyadic(BigInt::from(m) * sign, e, prec)
    }

    /// The enclosure `[lo, hi]` given as dyadic endpoints sharing an exponent.
    fn from_endpoints(lo: BigInt, hi: BigInt, exp: i64, prec: u32) -> Self {
        debug_assert!(lo <= hi);
        let rad = (&hi - &lo).to_biguint().expect("ordered endpoints");
        Real { mid: lo + hi, rad, exp: exp - 1, prec }.normalized()
    }

    /// Smallest enclosure containing both `a` and `b`.
    pub fn hull(a: &Real, b: &Real) -> Real {
        let prec = a.prec.max(b.prec);
        let e = a.exp.min(b.exp);
        let (alo, ahi) = a.endpoints_at(e);
        let (blo, bhi) = b.endpoints_at(e);
        Real::from_endpoints(alo.min(blo), ahi.max(bhi), e, prec)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn with_prec(mut self, prec: u32) -> Self {
        self.prec = prec;
        self.normalized()
    }

    /// Widens the radius by `2^e`.
    pub fn add_error_exp(mut self, e: i64) -> Self {
        if e >= self.exp {
            self.rad += BigUint::one() << ((e - self.exp) as u64);
            self
        } else {
            let shift = (self.exp - e) as u64;
            let mid = self.mid << shift;
            let rad = (self.rad << shift) + BigUint::one();
            Real { mid, rad, exp: e, prec: self.prec }.normalized()
        }
    }

    /// Widens the radius by the absolute value of `err` (midpoint plus radius).
    pub fn add_error(self, err: &Real) -> Self {
        let bound = err.abs_upper();
        let prec = self.prec;
        let widened =
            Real { mid: BigInt::zero(), rad: bound.mid.magnitude().clone() + &bound.rad, exp: bound.exp, prec };
        self.add(&widened).with_prec(prec)
    }

    fn normalized(mut self) -> Self {
        if self.mid.is_zero() && self.rad.is_zero() {
            self.exp = 0;
            return self;
        }
        let limit = (self.prec + GUARD) as u64;
        let bits = self.mid.bits().max(self.rad.bits().saturating_sub(8));
        if bits > limit {
            let s = bits - limit;
            let (q, r) = self.mid.div_mod_floor(&(BigInt::one() << s));
            let rounded = !r.is_zero();
            self.mid = q;
            let (rq, rr) = self.rad.div_rem(&(BigUint::one() << s));
            self.rad = rq;
            if !rr.is_zero() {
                self.rad += 1u32;
            }
            if rounded {
                self.rad += 1u32;
            }
            self.exp += s as i64;
        }
        self
    }

    /// Midpoint and radius re-expressed at exponent `e`, rounding outward.
    fn at_exp(&self, e: i64) -> (BigInt, BigUint) {
        if e <= self.exp {
            let s = (self.exp - e) as u64;
            (&self.mid << s, &self.rad << s)
        } else {
            let s = (e - self.exp) as u64;
            let (q, r) = self.mid.div_mod_floor(&(BigInt::one() << s));
            let mut rad = &self.rad >> s;
            rad += 1u32;
            if !r.is_zero() {
                rad += 1u32;
            }
            (q, rad)
        }
    }

    /// Position of the most significant bit of the enclosure's magnitude.
    fn top(&self) -> i64 {
        let m = self.mid.magnitude() + &self.rad;
        m.bits() as i64 + self.exp
    }

    pub fn is_exact_zero(&self) -> bool {
        self.mid.is_zero() && self.rad.is_zero()
    }

    pub fn add(&self, other: &Real) -> Real {
        let prec = self.prec.max(other.prec);
        if other.is_exact_zero() {
            return self.clone().with_prec(prec);
        }
        if self.is_exact_zero() {
            return other.clone().with_prec(prec);
        }
        let floor = self.top().max(other.top()) - (prec + 2 * GUARD) as i64;
        let e = self.exp.min(other.exp).max(floor);
        let (m1, r1) = self.at_exp(e);
        let (m2, r2) = other.at_exp(e);
        Real { mid: m1 + m2, rad: r1 + r2, exp: e, prec }.normalized()
    }

    pub fn neg(&self) -> Real {
        Real { mid: -&self.mid, rad: self.rad.clone(), exp: self.exp, prec: self.prec }
    }

    pub fn sub(&self, other: &Real) -> Real {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Real) -> Real {
        let prec = self.prec.max(other.prec);
        let rad = self.mid.magnitude() * &other.rad + other.mid.magnitude() * &self.rad + &self.rad * &other.rad;
        Real { mid: &self.mid * &other.mid, rad, exp: self.exp + other.exp, prec }.normalized()
    }

    pub fn mul_int(&self, k: i64) -> Real {
        self.mul(&Real::from_int(k, self.prec))
    }

    /// Quotient enclosure; `None` when the divisor's enclosure contains zero.
    pub fn div(&self, other: &Real) -> Option<Real> {
        let prec = self.prec.max(other.prec);
        let den_lo = other.mid.magnitude().checked_sub(&other.rad).filter(|d| !d.is_zero())?;
        if self.is_exact_zero() {
            return Some(Real::zero(prec));
        }
        let target = (prec + 2 * GUARD) as i64;
        let s = (target + other.mid.bits() as i64 - self.mid.bits() as i64).max(0) as u64;
        let num = &self.mid << s;
        let (q, rem) = num.div_rem(&other.mid);
        if rem.is_zero() && self.rad.is_zero() && other.rad.is_zero() {
            return Some(
                Real { mid: q, rad: BigUint::zero(), exp: self.exp - other.exp - s as i64, prec }.normalized(),
            );
        }
        let qmag = q.magnitude() + 1u32;
        let err_num = (&self.rad << s) + &qmag * &other.rad;
        let (mut rad, rem) = err_num.div_rem(&den_lo);
        if !rem.is_zero() {
            rad += 1u32;
        }
        rad += 1u32;
        Some(Real { mid: q, rad, exp: self.exp - other.exp - s as i64, prec }.normalized())
    }

    pub fn recip(&self) -> Option<Real> {
        Real::one(self.prec).div(self)
    }

    /// `self^k` for `k >= 0`.
    pub fn powi(&self, k: u32) -> Real {
        let mut result = Real::one(self.prec);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Lower and upper endpoints as integers at the shared exponent.
    fn endpoints(&self) -> (BigInt, BigInt) {
        let r = BigInt::from_biguint(Sign::Plus, self.rad.clone());
        (&self.mid - &r, &self.mid + r)
    }

    pub fn sqrt(&self) -> Option<Real> {
        let (lo, hi) = self.endpoints();
        if lo.is_negative() {
            return None;
        }
        let prec = self.prec;
        // scale so that the square root carries about prec + GUARD bits
        let want = 2 * (prec + 2 * GUARD) as i64;
        let mut shift = (want - hi.bits() as i64).max(0);
        if (self.exp - shift).is_odd() {
            shift += 1;
        }
        let e = self.exp - shift;
        let lo_s = (lo.to_biguint().unwrap()) << shift as u64;
        let hi_s = (hi.to_biguint().unwrap()) << shift as u64;
        let a = lo_s.sqrt();
        let mut b = hi_s.sqrt();
        if &b * &b < hi_s {
            b += 1u32;
        }
        Some(Real::from_endpoints(BigInt::from(a), BigInt::from(b), e / 2, prec))
    }

    /// Natural logarithm; `None` unless the enclosure is strictly positive.
    pub fn ln(&self) -> Option<Real> {
        if !self.is_positive() {
            return None;
        }
        let (lo, hi) = self.endpoints();
        let work = self.prec + 2 * GUARD;
        let l = ln_dyadic(&lo, self.exp, work);
        let h = ln_dyadic(&hi, self.exp, work);
        let (ll, _) = l.endpoints_at(l.exp.min(h.exp));
        let (_, hh) = h.endpoints_at(l.exp.min(h.exp));
        Some(Real::from_endpoints(ll, hh, l.exp.min(h.exp), self.prec))
    }

    fn endpoints_at(&self, e: i64) -> (BigInt, BigInt) {
        let (m, r) = self.at_exp(e);
        let r = BigInt::from_biguint(Sign::Plus, r);
        (&m - &r, m + r)
    }

    pub fn is_positive(&self) -> bool {
        self.mid.is_positive() && self.mid.magnitude() > &self.rad
    }

    pub fn is_negative(&self) -> bool {
        self.mid.is_negative() && self.mid.magnitude() > &self.rad
    }

    pub fn contains_zero(&self) -> bool {
        !self.is_positive() && !self.is_negative()
    }

    /// Certain comparison: `Some(Less)` only if every point of `self` is
    /// below every point of `other`; `None` when the enclosures overlap.
    pub fn cmp_certain(&self, other: &Real) -> Option<Ordering> {
        let d = self.sub(other);
        if d.is_positive() {
            Some(Ordering::Greater)
        } else if d.is_negative() {
            Some(Ordering::Less)
        } else if d.is_exact_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn lt(&self, other: &Real) -> bool {
        self.cmp_certain(other) == Some(Ordering::Less)
    }

    pub fn gt(&self, other: &Real) -> bool {
        self.cmp_certain(other) == Some(Ordering::Greater)
    }

    pub fn overlaps(&self, other: &Real) -> bool {
        self.sub(other).contains_zero()
    }

    /// Whether the enclosure certainly lies in `[0, inf)`.
    pub fn is_nonnegative(&self) -> bool {
        let r = BigInt::from_biguint(Sign::Plus, self.rad.clone());
        self.mid >= r
    }

    /// Whether every point of `self` lies within `[lo, hi]`.
    pub fn within(&self, lo: &Real, hi: &Real) -> bool {
        self.sub(lo).is_nonnegative() && hi.sub(self).is_nonnegative()
    }

    pub fn pow2(e: i64, prec: u32) -> Real {
        Real { mid: BigInt::one(), rad: BigUint::zero(), exp: e, prec }
    }

    /// Upper bound of `|x|` over the enclosure, as an exact dyadic.
    pub fn abs_upper(&self) -> Real {
        Real {
            mid: BigInt::from_biguint(Sign::Plus, self.mid.magnitude() + &self.rad),
            rad: BigUint::zero(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    pub fn abs(&self) -> Real {
        if self.mid.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Lower endpoint as an exact dyadic number.
    pub fn lower(&self) -> Real {
        let (lo, _) = self.endpoints();
        Real { mid: lo, rad: BigUint::zero(), exp: self.exp, prec: self.prec }
    }

    /// Upper endpoint as an exact dyadic number.
    pub fn upper(&self) -> Real {
        let (_, hi) = self.endpoints();
        Real { mid: hi, rad: BigUint::zero(), exp: self.exp, prec: self.prec }
    }

    /// The midpoint as an exact number with zero radius.
    pub fn midpoint(&self) -> Real {
        Real { mid: self.mid.clone(), rad: BigUint::zero(), exp: self.exp, prec: self.prec }
    }

    /// Twice the radius, i.e. the width of the enclosure.
    pub fn width(&self) -> Real {
        Real {
            mid: BigInt::from_biguint(Sign::Plus, &self.rad << 1u32),
            rad: BigUint::zero(),
            exp: self.exp,
            prec: self.prec,
        }
    }

    /// Binary logarithm of the radius (negative infinity for exact values).
    pub fn log2_radius(&self) -> f64 {
        if self.rad.is_zero() {
            f64::NEG_INFINITY
        } else {
            big_log2(&self.rad) + self.exp as f64
        }
    }

    pub fn to_f64(&self) -> f64 {
        dyadic_to_f64(&self.mid, self.exp)
    }

    pub fn radius_f64(&self) -> f64 {
        dyadic_to_f64(&BigInt::from_biguint(Sign::Plus, self.rad.clone()), self.exp)
    }

    /// Decimal rendering of the midpoint with `sig` significant digits
    /// (round half away from zero).
    pub fn to_decimal(&self, sig: usize) -> String {
        format_dyadic(&self.mid, self.exp, sig)
    }
}

fn big_log2(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 64 {
        return v.to_f64().unwrap().log2();
    }
    let top = (v >> (bits - 64)).to_f64().unwrap();
    top.log2() + (bits - 64) as f64
}

fn dyadic_to_f64(m: &BigInt, e: i64) -> f64 {
    if m.is_zero() {
        return 0.0;
    }
    let bits = m.bits() as i64;
    let (top, e) = if bits > 64 { (m >> (bits - 64) as u64, e + bits - 64) } else { (m.clone(), e) };
    let t = top.to_f64().unwrap();
    if e > 1023 {
        t * 2f64.powi(1023) * 2f64.powi((e - 1023) as i32)
    } else if e < -1022 {
        t * 2f64.powi(-1022) * 2f64.powi((e + 1022).max(-1100) as i32)
    } else {
        t * 2f64.powi(e as i32)
    }
}

fn format_dyadic(m: &BigInt, e: i64, sig: usize) -> String {
    if m.is_zero() {
        return "0".to_string();
    }
    let neg = m.is_negative();
    let mag = m.magnitude().clone();
    // exact rational num/den for |value|
    let (num, den) = if e >= 0 { (mag << e as u64, BigUint::one()) } else { (mag, BigUint::one() << (-e) as u64) };
    let approx = big_log2(&num) - big_log2(&den);
    let mut d10 = (approx * std::f64::consts::LOG10_2).floor() as i64;
    // scaled = |value| * 10^(sig - 1 - d10), rounded; adjust d10 so scaled has sig digits
    let ten = BigUint::from(10u32);
    let lower = ten.pow(sig as u32 - 1);
    let upper = ten.pow(sig as u32);
    let digits = loop {
        let k = sig as i64 - 1 - d10;
        let (n, d) =
            if k >= 0 { (&num * ten.pow(k as u32), den.clone()) } else { (num.clone(), &den * ten.pow((-k) as u32)) };
        let (q, r) = n.div_rem(&d);
        let q = if (&r << 1u32) >= d { q + 1u32 } else { q };
        if q < lower {
            d10 -= 1;
        } else if q >= upper {
            d10 += 1;
        } else {
            break q;
        }
    };
    let s = digits.to_str_radix(10);
    let body = if (-5..21).contains(&d10) {
        if d10 >= 0 {
            let int_len = (d10 + 1) as usize;
            if int_len >= s.len() {
                format!("{}{}", s, "0".repeat(int_len - s.len()))
            } else {
                format!("{}.{}", &s[..int_len], &s[int_len..])
            }
        } else {
            format!("0.{}{}", "0".repeat((-d10 - 1) as usize), s)
        }
    } else {
        format!("{}.{}e{}", &s[..1], &s[1..], d10)
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Rigorous enclosure of `ln(m * 2^e)` for `m > 0`.
fn ln_dyadic(m: &BigInt, e: i64, prec: u32) -> Real {
    let bits = m.bits() as i64;
    // m * 2^e = y * 2^k with y in [1, 2)
    let k = bits - 1 + e;
    let y = Real::from_dyadic(m.clone(), -(bits - 1), prec);
    let one = Real::one(prec);
    let z = y.sub(&one).div(&y.add(&one)).expect("positive denominator");
    let ln_y = atanh_series(&z, prec).mul_int(2);
    if k == 0 {
        return ln_y;
    }
    let third = Real::one(prec).div(&Real::from_int(3, prec)).unwrap();
    let ln2 = atanh_series(&third, prec).mul_int(2);
    ln2.mul_int(k).add(&ln_y)
}

/// `atanh(z)` for `0 <= z <= 1/3`, with the truncation tail folded into the radius.
fn atanh_series(z: &Real, prec: u32) -> Real {
    let z2 = z.mul(z);
    let mut term = z.clone();
    let mut sum = z.clone();
    // (1/3)^(2t) < 2^-(prec + 4) once 3.17 t > prec + 4
    let terms = (prec as f64 / 3.16).ceil() as u32 + 3;
    for i in 1..=terms {
        term = term.mul(&z2);
        sum = sum.add(&term.div(&Real::from_int(2 * i as i64 + 1, prec)).unwrap());
    }
    // tail <= z^(2T+3) / (1 - z^2) <= (1/3)^(2T+3) * 9/8 < 2^-(3.17 (2T+3) - 1)
    let tail_exp = -((3.16 * (2 * terms + 3) as f64) as i64) + 1;
    sum.add_error_exp(tail_exp)
}

impl serde::Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:.3e}", self.to_decimal(25), self.radius_f64())
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal(20))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: f64) -> Real {
        Real::from_f64(v, 128)
    }

    #[test]
    fn arithmetic_encloses_exact_results() {
        let third = Real::one(128).div(&Real::from_int(3, 128)).unwrap();
        let back = third.mul_int(3);
        assert!(back.overlaps(&Real::one(128)));
        assert!(back.log2_radius() < -120.0);
        assert!(r(0.5).add(&r(0.25)).cmp_certain(&r(0.75)) == Some(Ordering::Equal));
        assert!(r(2.0).sub(&r(3.0)).is_negative());
    }

    #[test]
    fn division_by_ball_containing_zero() {
        let z = Real::zero(64).add_error_exp(-10);
        assert!(r(1.0).div(&z).is_none());
    }

    #[test]
    fn sqrt_five_squares_back() {
        let s = Real::from_int(5, 256).sqrt().unwrap();
        assert!(s.mul(&s).overlaps(&Real::from_int(5, 256)));
        assert!(s.log2_radius() < -250.0);
        assert!((s.to_f64() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ln_matches_f64() {
        for v in [0.3, 1.0, 1.5, 2.0, 7.25, 1e-3] {
            let l = r(v).ln().unwrap();
            assert!((l.to_f64() - v.ln()).abs() < 1e-14, "{v}");
            assert!(l.log2_radius() < -110.0);
        }
        assert!(r(0.0).ln().is_none());
    }

    #[test]
    fn ln_of_e_is_one() {
        // e = sum 1/k!
        let prec = 200;
        let mut e = Real::zero(prec);
        let mut term = Real::one(prec);
        for k in 1..80 {
            e = e.add(&term);
            term = term.div(&Real::from_int(k, prec)).unwrap();
        }
        let one = e.ln().unwrap();
        assert!((one.sub(&Real::one(prec))).abs().to_f64() < 1e-50);
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(r(0.5).to_decimal(5), "0.50000");
        assert_eq!(r(1.25).to_decimal(3), "1.25");
        assert_eq!(r(-2.0).to_decimal(3), "-2.00");
        assert_eq!(r(1234.5).to_decimal(4), "1235");
        assert_eq!(r(1e-7).to_decimal(3), "1.00e-7");
        assert_eq!(r(0.0).to_decimal(3), "0");
        assert_eq!(r(9.9996).to_decimal(4), "10.00");
    }

    #[test]
    fn powers_and_reciprocals() {
        let x = r(1.5);
        assert!(x.powi(4).overlaps(&r(5.0625)));
        assert!(x.recip().unwrap().mul(&x).overlaps(&Real::one(128)));
    }
}
