//! The maps `T±(x) = βx + α mod 1`, their digit expansions, the projection
//! back to `[0, 1]`, and kneading invariants of the critical point
//! `p = (1 - α)/β`.
//!
//! All real quantities are balls. A branch that cannot be decided at the
//! working precision yields [`Error::PrecisionExhausted`]; callers go
//! through [`with_precision`] to retry at doubled precision.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Number;
use crate::real::Real;
use crate::words::{EventuallyPeriodicWord, FiniteWord};

pub const DEFAULT_BITS: u32 = 128;
pub const MAX_BITS: u32 = 4096;
pub const DEFAULT_MAX_LEN: usize = 512;

/// Orbit points whose enclosure is wider than `2^-ORBIT_RADIUS_LOG2` are not
/// used for revisit claims; the orbit is recomputed at higher precision.
const ORBIT_RADIUS_LOG2: f64 = -40.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Side> {
        match s {
            "plus" | "+" => Ok(Side::Plus),
            "minus" | "-" => Ok(Side::Minus),
            _ => Err(Error::Number { text: s.into(), reason: "side must be plus or minus".into() }),
        }
    }
}

/// Which part of the parameter region a point lies in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fiber {
    /// `α = 0`: the greedy β-shift.
    Greedy,
    /// `α = 2 - β`: the lazy β-shift.
    Lazy,
    Interior,
}

/// A point `(β, α)` with `1 < β < 2` and `0 <= α <= 2 - β`.
#[derive(Clone, Debug)]
pub struct Params {
    beta: Real,
    alpha: Real,
    fiber: Fiber,
}

impl Params {
    /// Validates membership at the enclosure level. An `α` enclosure that
    /// touches a boundary line is snapped onto it.
    pub fn new(beta: Real, alpha: Real) -> Result<Self> {
        let prec = beta.prec().max(alpha.prec());
        let one = Real::one(prec);
        let two = Real::from_int(2, prec);
        if !(beta.gt(&one) && beta.lt(&two)) {
            return Err(Error::Domain(format!("beta = {beta:?} is not certainly inside (1, 2)")));
        }
        let slack = two.sub(&beta).sub(&alpha);
        if alpha.is_negative() || slack.is_negative() {
            return Err(Error::Domain(format!("alpha = {alpha:?} is outside [0, 2 - beta]")));
        }
        let (alpha, fiber) = if alpha.contains_zero() {
            (Real::zero(prec), Fiber::Greedy)
        } else if slack.contains_zero() {
            (two.sub(&beta), Fiber::Lazy)
        } else {
            (alpha, Fiber::Interior)
        };
        Ok(Params { beta, alpha, fiber })
    }

    pub fn from_f64(beta: f64, alpha: f64, prec: u32) -> Result<Self> {
        Params::new(Real::from_f64(beta, prec), Real::from_f64(alpha, prec))
    }

    pub fn beta(&self) -> &Real {
        &self.beta
    }

    pub fn alpha(&self) -> &Real {
        &self.alpha
    }

    pub fn fiber(&self) -> Fiber {
        self.fiber
    }

    pub fn prec(&self) -> u32 {
        self.beta.prec().max(self.alpha.prec())
    }
}

/// Anything that can produce [`Params`] at a requested precision.
pub trait ParamSource: Sync {
    fn params(&self, bits: u32) -> Result<Params>;
    /// Whether asking for more bits can tighten the enclosures.
    fn refinable(&self) -> bool {
        true
    }
}

impl ParamSource for Params {
    fn params(&self, _bits: u32) -> Result<Params> {
        Ok(self.clone())
    }

    fn refinable(&self) -> bool {
        false
    }
}

/// Parameters given by exact expressions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactParams {
    pub beta: Number,
    pub alpha: Number,
}

impl ExactParams {
    pub fn new(beta: Number, alpha: Number) -> Self {
        ExactParams { beta, alpha }
    }

    pub fn parse(beta: &str, alpha: &str) -> Result<Self> {
        Ok(ExactParams { beta: beta.parse()?, alpha: alpha.parse()? })
    }

    /// `(φ, 1 - φ/2)`, whose kneading invariants are `(011)` and `(100)`.
    pub fn golden() -> Self {
        ExactParams::parse("phi", "1 - phi/2").unwrap()
    }
}

impl ParamSource for ExactParams {
    fn params(&self, bits: u32) -> Result<Params> {
        Params::new(self.beta.eval(bits)?, self.alpha.eval(bits)?)
    }
}

impl fmt::Display for ExactParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(beta = {}, alpha = {})", self.beta, self.alpha)
    }
}

/// Precision schedule: start at `start` bits and double up to `cap`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision {
    pub start: u32,
    pub cap: u32,
}

impl Default for Precision {
    fn default() -> Self {
        Precision { start: DEFAULT_BITS, cap: MAX_BITS }
    }
}

impl Precision {
    pub fn new(start: u32) -> Self {
        Precision { start: start.max(32), cap: MAX_BITS.max(start) }
    }

    pub fn fixed(bits: u32) -> Self {
        Precision { start: bits, cap: bits }
    }
}

/// Runs `f` at increasing precision until it stops reporting
/// [`Error::PrecisionExhausted`].
pub fn with_precision<S, T, F>(source: &S, precision: Precision, mut f: F) -> Result<T>
where
    S: ParamSource + ?Sized,
    F: FnMut(&Params) -> Result<T>,
{
    let mut bits = precision.start;
    loop {
        let params = source.params(bits)?;
        match f(&params) {
            Err(Error::PrecisionExhausted { .. }) if bits < precision.cap && source.refinable() => {
                bits = (bits * 2).min(precision.cap);
            }
            other => return other,
        }
    }
}

/// A point of `[0, 1]`; the critical point is kept symbolic so that the
/// explicit values `T+(p) = 0` and `T-(p) = 1` apply exactly.
#[derive(Clone, Debug)]
pub enum Point {
    Critical,
    Value(Real),
}

pub fn critical_point(params: &Params) -> Real {
    Real::one(params.prec()).sub(&params.alpha).div(&params.beta).expect("beta > 1")
}

/// Position of `x` relative to the critical point, if decidable.
fn locate(params: &Params, p: &Real, x: &Point) -> Result<Ordering> {
    match x {
        Point::Critical => Ok(Ordering::Equal),
        Point::Value(v) => v
            .cmp_certain(p)
            .ok_or_else(|| Error::precision(params.prec(), "orbit point cannot be separated from the critical point")),
    }
}

fn digit(ord: Ordering, side: Side) -> u8 {
    match (ord, side) {
        (Ordering::Less, _) => 0,
        (Ordering::Greater, _) => 1,
        (Ordering::Equal, Side::Plus) => 1,
        (Ordering::Equal, Side::Minus) => 0,
    }
}

fn step(params: &Params, x: &Point, ord: Ordering, side: Side) -> Point {
    match (ord, x) {
        (Ordering::Equal, _) => Point::Value(match side {
            Side::Plus => Real::zero(params.prec()),
            Side::Minus => Real::one(params.prec()),
        }),
        (_, Point::Critical) => unreachable!("critical point compares equal"),
        (Ordering::Less, Point::Value(v)) => Point::Value(params.beta.mul(v).add(&params.alpha)),
        (Ordering::Greater, Point::Value(v)) => {
            Point::Value(params.beta.mul(v).add(&params.alpha).sub(&Real::one(params.prec())))
        }
    }
}

fn check_unit_interval(params: &Params, x: &Point) -> Result<()> {
    if let Point::Value(v) = x {
        let prec = params.prec();
        if v.is_negative() || v.gt(&Real::one(prec)) {
            return Err(Error::Domain(format!("x = {v:?} is outside [0, 1]")));
        }
    }
    Ok(())
}

/// One application of `T±`.
pub fn apply_map(params: &Params, x: &Point, side: Side) -> Result<Point> {
    check_unit_interval(params, x)?;
    let p = critical_point(params);
    let ord = locate(params, &p, x)?;
    Ok(step(params, x, ord, side))
}

/// First `n` digits of `τ±(x)`.
///
/// Along the orbit of the critical point, a point that cannot be separated
/// from `p` is taken to be `p` itself when the periodic word spelled so far
/// projects onto `p`.
pub fn expand(params: &Params, x: &Point, n: usize, side: Side) -> Result<FiniteWord> {
    check_unit_interval(params, x)?;
    let p = critical_point(params);
    let from_critical = matches!(x, Point::Critical);
    let mut letters = Vec::with_capacity(n);
    let mut cur = x.clone();
    for i in 0..n {
        let ord = match locate(params, &p, &cur) {
            Ok(ord) => ord,
            Err(e) => {
                let Point::Value(v) = &cur else { return Err(e) };
                if !from_critical || v.log2_radius() > ORBIT_RADIUS_LOG2 {
                    return Err(e);
                }
                let word = EventuallyPeriodicWord::periodic(FiniteWord::new(letters.clone()))?;
                if !project(params, &word).overlaps(&p) {
                    return Err(e);
                }
                cur = Point::Critical;
                Ordering::Equal
            }
        };
        letters.push(digit(ord, side));
        if i + 1 < n {
            cur = step(params, &cur, ord, side);
        }
    }
    Ok(FiniteWord::new(letters))
}

/// `π(w) = α/(1 - β) + Σ w_k β^-k`, summed in closed form.
pub fn project(params: &Params, w: &EventuallyPeriodicWord) -> Real {
    let prec = params.prec();
    let one = Real::one(prec);
    let inv = params.beta.recip().expect("beta > 1");
    let series = word_series(&inv, w);
    let offset = params.alpha.div(&one.sub(&params.beta)).expect("beta > 1");
    offset.add(&series)
}

/// `Σ_k w_k r^k` for `0 < r < 1`.
pub(crate) fn word_series(r: &Real, w: &EventuallyPeriodicWord) -> Real {
    let prec = r.prec();
    let one = Real::one(prec);
    // Horner over the period: S_per = Σ_{k=1}^{P} v_k r^k
    let mut per = Real::zero(prec);
    for &b in w.period().letters().iter().rev() {
        per = per.add(&Real::from_int(b as i64, prec)).mul(r);
    }
    let rp = r.powi(w.period_len() as u32);
    let cycle = per.div(&one.sub(&rp)).expect("r < 1");
    let mut acc = cycle;
    for &b in w.preperiod().letters().iter().rev() {
        acc = acc.add(&Real::from_int(b as i64, prec)).mul(r);
    }
    // acc currently holds Σ pre_k r^k + r^a * cycle, built from the back
    acc
}

/// Prefixes of the lower (`τ-(p)`) and upper (`τ+(p)`) kneading invariants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KneadingPair {
    pub lower: FiniteWord,
    pub upper: FiniteWord,
}

impl KneadingPair {
    pub fn computed_length(&self) -> usize {
        self.lower.len().min(self.upper.len())
    }
}

pub fn kneading(params: &Params, n: usize) -> Result<KneadingPair> {
    Ok(KneadingPair {
        lower: expand(params, &Point::Critical, n, Side::Minus)?,
        upper: expand(params, &Point::Critical, n, Side::Plus)?,
    })
}

/// Outcome of searching one kneading orbit for a certified return.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "word", rename_all = "snake_case")]
pub enum Itinerary {
    /// The orbit returns to the critical point.
    Periodic(EventuallyPeriodicWord),
    /// The orbit enters a cycle avoiding the critical point.
    EventuallyPeriodic(EventuallyPeriodicWord),
    /// No return within the step budget.
    NotFound { steps: usize },
}

impl Itinerary {
    pub fn word(&self) -> Option<&EventuallyPeriodicWord> {
        match self {
            Itinerary::Periodic(w) | Itinerary::EventuallyPeriodic(w) => Some(w),
            Itinerary::NotFound { .. } => None,
        }
    }
}

/// Follows the orbit of `p` under `T±` for up to `max_len` steps looking for
/// a return to `p` or to an earlier orbit point. Every candidate is
/// confirmed by checking that the projection of the proposed word
/// reproduces `p`.
pub fn detect_itinerary(params: &Params, side: Side, max_len: usize) -> Result<Itinerary> {
    let p = critical_point(params);
    let mut digits = vec![digit(Ordering::Equal, side)];
    let first = step(params, &Point::Critical, Ordering::Equal, side);
    let Point::Value(x1) = first else { unreachable!() };
    let mut orbit: Vec<(Real, f64)> = vec![(x1.clone(), x1.to_f64())];
    let confirm = |w: &EventuallyPeriodicWord| project(params, w).overlaps(&p);
    for m in 1..max_len {
        let (x, xf) = orbit[m - 1].clone();
        if x.log2_radius() > ORBIT_RADIUS_LOG2 {
            return Err(Error::precision(params.prec(), format!("orbit enclosure too wide after {m} steps")));
        }
        let ord = match x.cmp_certain(&p) {
            Some(Ordering::Equal) | None => {
                let word = EventuallyPeriodicWord::periodic(FiniteWord::new(digits.clone()))?;
                if confirm(&word) {
                    return Ok(Itinerary::Periodic(word));
                }
                return Err(Error::precision(params.prec(), "orbit point overlaps the critical point"));
            }
            Some(ord) => ord,
        };
        for i in 1..m {
            let (ref y, yf) = orbit[i - 1];
            if (yf - xf).abs() > 1e-9 || !y.overlaps(&x) {
                continue;
            }
            let pre = FiniteWord::new(digits[..i].to_vec());
            let per = FiniteWord::new(digits[i..m].to_vec());
            let word = EventuallyPeriodicWord::new(pre, per)?;
            if confirm(&word) {
                return Ok(Itinerary::EventuallyPeriodic(word));
            }
        }
        digits.push(digit(ord, side));
        let Point::Value(next) = step(params, &Point::Value(x), ord, side) else { unreachable!() };
        let f = next.to_f64();
        orbit.push((next, f));
    }
    Ok(Itinerary::NotFound { steps: max_len })
}

/// Both kneading invariants, when each is detected eventually periodic and
/// the resulting pair passes the admissibility test.
pub fn detect_kneading_period(
    params: &Params,
    max_len: usize,
) -> Result<Option<(EventuallyPeriodicWord, EventuallyPeriodicWord)>> {
    let lower = detect_itinerary(params, Side::Minus, max_len)?;
    let upper = detect_itinerary(params, Side::Plus, max_len)?;
    match (lower.word(), upper.word()) {
        (Some(l), Some(u)) => {
            let report = crate::admissibility::is_admissible(l, u);
            if !report.admissible {
                return Err(Error::precision(params.prec(), format!("detected pair {l}, {u} is not admissible")));
            }
            Ok(Some((l.clone(), u.clone())))
        }
        _ => Ok(None),
    }
}

/// A lazily extended kneading invariant `τ±(p)`, recomputed at higher
/// precision whenever more digits are requested.
pub struct KneadingDigits<'a> {
    source: &'a dyn ParamSource,
    side: Side,
    precision: Precision,
    digits: Vec<u8>,
}

impl<'a> KneadingDigits<'a> {
    pub fn new(source: &'a dyn ParamSource, side: Side, precision: Precision) -> Self {
        KneadingDigits { source, side, precision, digits: Vec::new() }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// At least `n` digits (more may be returned).
    pub fn prefix(&mut self, n: usize) -> Result<&[u8]> {
        if self.digits.len() < n {
            let want = n.max(2 * self.digits.len()).max(16);
            let beta = self.source.params(self.precision.start)?.beta().to_f64();
            // each step loses about log2(beta) bits
            let needed = (want as f64 * beta.log2()).ceil() as u32 + 96;
            let start = self.precision.start.max(needed.next_multiple_of(64));
            let precision =
                Precision { start: start.min(self.precision.cap.max(start)), cap: self.precision.cap.max(start) };
            let side = self.side;
            let word = with_precision(self.source, precision, |params| expand(params, &Point::Critical, want, side))
                .map_err(|e| match e {
                    Error::PrecisionExhausted { .. } => {
                        Error::CallbackExhausted { needed: n, available: self.digits.len() }
                    }
                    other => other,
                })?;
            if !word.letters().starts_with(&self.digits) {
                return Err(Error::Invariant("kneading digits changed under precision refinement".into()));
            }
            self.digits = word.letters().to_vec();
        }
        Ok(&self.digits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden(bits: u32) -> Params {
        ExactParams::golden().params(bits).unwrap()
    }

    fn w(s: &str) -> EventuallyPeriodicWord {
        s.parse().unwrap()
    }

    #[test]
    fn critical_point_examples() {
        let p = critical_point(&golden(256));
        assert!(p.sub(&Real::from_f64(0.5, 256)).abs().to_f64() < 1e-70);
        let g = Params::from_f64(1.5, 0.0, 128).unwrap();
        assert!(critical_point(&g).overlaps(&Real::from_ratio(&2.into(), &3.into(), 128)));
        let l = ExactParams::parse("3/2", "1/2").unwrap().params(128).unwrap();
        assert_eq!(l.fiber(), Fiber::Lazy);
        assert!(critical_point(&l).overlaps(&Real::from_ratio(&1.into(), &3.into(), 128)));
    }

    #[test]
    fn map_values() {
        let g = golden(256);
        let Point::Value(v) = apply_map(&g, &Point::Critical, Side::Plus).unwrap() else { panic!() };
        assert_eq!(v.to_f64(), 0.0);
        let Point::Value(v) = apply_map(&g, &Point::Value(Real::one(256)), Side::Minus).unwrap() else { panic!() };
        assert!((v.to_f64() - 0.8090169943749474).abs() < 1e-15);
        let Point::Value(v) = apply_map(&g, &Point::Value(Real::zero(256)), Side::Plus).unwrap() else { panic!() };
        assert!(v.overlaps(g.alpha()));
    }

    #[test]
    fn ambiguous_branch_is_reported() {
        let g = golden(128);
        let half = Real::from_f64(0.5, 128);
        assert!(matches!(apply_map(&g, &Point::Value(half), Side::Plus), Err(Error::PrecisionExhausted { .. })));
        assert!(matches!(apply_map(&g, &Point::Value(Real::from_f64(1.5, 128)), Side::Plus), Err(Error::Domain(_))));
    }

    #[test]
    fn golden_expansions() {
        let g = golden(256);
        assert_eq!(expand(&g, &Point::Critical, 6, Side::Minus).unwrap().to_string(), "011011");
        assert_eq!(expand(&g, &Point::Critical, 6, Side::Plus).unwrap().to_string(), "100100");
        let k = kneading(&g, 9).unwrap();
        assert_eq!((k.lower.to_string(), k.upper.to_string()), ("011011011".into(), "100100100".into()));
    }

    #[test]
    fn projections() {
        let g = Params::from_f64(1.7, 0.2, 128).unwrap();
        let z = project(&g, &w("(0)"));
        assert!((z.to_f64() - 0.2 / (1.0 - 1.7)).abs() < 1e-15);
        let o = project(&g, &w("(1)"));
        assert!((o.to_f64() - (0.2 / (1.0 - 1.7) + 1.0 / 0.7)).abs() < 1e-14);
        let gold = golden(256);
        let p = project(&gold, &w("(011)"));
        assert!(p.overlaps(&critical_point(&gold)));
        assert!(p.sub(&Real::from_f64(0.5, 256)).abs().to_f64() < 1e-70);
        let pre = project(&g, &w("10(01)"));
        let direct: f64 = (1..200).map(|k| w("10(01)").letter(k - 1) as f64 * 1.7f64.powi(-(k as i32))).sum();
        assert!((pre.to_f64() - 0.2 / (1.0 - 1.7) - direct).abs() < 1e-14);
    }

    #[test]
    fn golden_kneading_detected() {
        let g = golden(256);
        assert_eq!(detect_itinerary(&g, Side::Minus, 512).unwrap(), Itinerary::Periodic(w("(011)")));
        assert_eq!(detect_kneading_period(&g, 512).unwrap(), Some((w("(011)"), w("(100)"))));
    }

    #[test]
    fn greedy_golden_lower_invariant() {
        // p = 1/φ, T-(p) = 1, T(1) = φ - 1 = p
        let g = ExactParams::parse("phi", "0").unwrap().params(256).unwrap();
        assert_eq!(g.fiber(), Fiber::Greedy);
        assert_eq!(detect_itinerary(&g, Side::Minus, 512).unwrap(), Itinerary::Periodic(w("(01)")));
        assert_eq!(detect_itinerary(&g, Side::Plus, 512).unwrap(), Itinerary::EventuallyPeriodic(w("1(0)")));
    }

    #[test]
    fn generic_parameters_have_no_detected_period() {
        let src = ExactParams::parse("1.7234871", "0.1234567").unwrap();
        let r = with_precision(&src, Precision::default(), |p| detect_kneading_period(p, 512)).unwrap();
        assert_eq!(r, None);
    }

    #[test]
    fn precision_escalation_reaches_long_orbits() {
        let src = ExactParams::parse("1.9", "0.05").unwrap();
        assert!(matches!(
            with_precision(&src, Precision::fixed(128), |p| detect_itinerary(p, Side::Minus, 512)),
            Err(Error::PrecisionExhausted { .. })
        ));
        assert!(matches!(
            with_precision(&src, Precision::default(), |p| detect_itinerary(p, Side::Minus, 512)),
            Ok(Itinerary::NotFound { .. })
        ));
    }

    #[test]
    fn lazy_digits_extend_consistently() {
        let src = ExactParams::parse("1.3", "0.4").unwrap();
        let mut d = KneadingDigits::new(&src, Side::Minus, Precision::default());
        let short = d.prefix(20).unwrap().to_vec();
        let long = d.prefix(600).unwrap().to_vec();
        assert!(long.len() >= 600);
        assert_eq!(&long[..short.len()], &short[..]);
        assert_eq!(&long[..2], &[0, 1]);
    }

    #[test]
    fn domain_checks() {
        assert!(Params::from_f64(2.0, 0.0, 64).is_err());
        assert!(Params::from_f64(1.5, 0.6, 64).is_err());
        assert!(Params::from_f64(1.5, -0.1, 64).is_err());
        assert_eq!(Params::from_f64(1.5, 0.25, 64).unwrap().fiber(), Fiber::Interior);
    }
}
