//! Approximation of arbitrary parameters by parameters whose shift is of
//! finite type: cut the kneading invariants, close them up into periodic
//! words, and solve back for the slope and offset.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::Serialize;

use crate::admissibility;
use crate::dynamics::{self, Fiber, Itinerary, KneadingDigits, ParamSource, Params, Precision, Side};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::subshift::{self, SftCertificate, SubshiftAutomaton};
use crate::words::{EventuallyPeriodicWord, FiniteWord};

pub const DEFAULT_MAX_CUT: usize = 2000;
/// How far past the cut the extension index is searched for.
const MAX_EXTENSION: usize = 1 << 16;

/// An infinite binary word read one letter at a time.
pub trait DigitSource {
    /// Letter at 0-based position `i`.
    fn letter(&mut self, i: usize) -> Result<u8>;

    /// The word itself, when it is known to be purely periodic.
    fn periodic_word(&self) -> Option<EventuallyPeriodicWord> {
        None
    }
}

impl DigitSource for EventuallyPeriodicWord {
    fn letter(&mut self, i: usize) -> Result<u8> {
        Ok(EventuallyPeriodicWord::letter(self, i))
    }

    fn periodic_word(&self) -> Option<EventuallyPeriodicWord> {
        self.is_periodic().then(|| self.clone())
    }
}

/// A finite prefix; asking beyond its end fails.
impl DigitSource for FiniteWord {
    fn letter(&mut self, i: usize) -> Result<u8> {
        if i < self.len() {
            Ok(self.get(i))
        } else {
            Err(Error::CallbackExhausted { needed: i + 1, available: self.len() })
        }
    }
}

impl DigitSource for KneadingDigits<'_> {
    fn letter(&mut self, i: usize) -> Result<u8> {
        Ok(self.prefix(i + 1)?[i])
    }
}

struct Complemented<'a>(&'a mut dyn DigitSource);

impl DigitSource for Complemented<'_> {
    fn letter(&mut self, i: usize) -> Result<u8> {
        Ok(1 - self.0.letter(i)?)
    }

    fn periodic_word(&self) -> Option<EventuallyPeriodicWord> {
        self.0.periodic_word().map(|w| w.complement())
    }
}

/// Record of one periodization, with 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeriodizationTrace {
    pub side: Side,
    pub n: usize,
    pub j: usize,
    pub k: usize,
    pub result: EventuallyPeriodicWord,
    /// The first `k + 1` letters of the input.
    pub prefix: FiniteWord,
}

impl PeriodizationTrace {
    /// Re-checks the defining index equations against the stored prefix.
    pub fn verify(&self) -> bool {
        let w = match self.side {
            Side::Minus => self.prefix.clone(),
            Side::Plus => self.prefix.complement(),
        };
        let at = |m: usize| w.get(m - 1);
        let (n, j, k) = (self.n, self.j, self.k);
        if w.len() != k + 1 || n < 3 || k < n || j == 0 || j > n || at(n) != 0 {
            return false;
        }
        let overlap = |jj: usize| (1..=n - jj).all(|t| at(jj + t) == at(t));
        let extension = |kk: usize| at(kk + 1) == 0 && at(kk - j + 1) == 1;
        let minimal_j = (1..j).all(|jj| !overlap(jj));
        let minimal_k = (n..k).all(|kk| !extension(kk));
        let expected = EventuallyPeriodicWord::periodic(self.prefix.prefix(k)).unwrap();
        overlap(j) && minimal_j && extension(k) && minimal_k && expected == self.result
    }
}

fn periodize(source: &mut dyn DigitSource, n: usize, side: Side) -> Result<PeriodizationTrace> {
    if source.periodic_word().is_some() {
        return Err(Error::AlreadyPeriodic);
    }
    if n < 3 {
        return Err(Error::InvalidPrefix(format!("cut index {n} is below 3")));
    }
    let mut at = |m: usize| source.letter(m - 1);
    if at(1)? != 0 {
        return Err(Error::InvalidPrefix("a lower kneading word starts with 0".into()));
    }
    if at(n)? != 0 {
        return Err(Error::InvalidPrefix(format!("letter {n} must be 0 at the cut")));
    }
    let mut j = n;
    'search: for jj in 1..n {
        for t in 1..=n - jj {
            if at(jj + t)? != at(t)? {
                continue 'search;
            }
        }
        j = jj;
        break;
    }
    let mut k = n;
    loop {
        if at(k + 1)? == 0 && at(k - j + 1)? == 1 {
            break;
        }
        k += 1;
        if k > n + MAX_EXTENSION {
            return Err(Error::InvalidPrefix(format!("no extension index within {MAX_EXTENSION} letters of the cut")));
        }
    }
    let letters: Vec<u8> = (1..=k + 1).map(&mut at).collect::<Result<_>>()?;
    let prefix = FiniteWord::new(letters);
    let result = EventuallyPeriodicWord::periodic(prefix.prefix(k))?;
    Ok(PeriodizationTrace { side, n, j, k, result, prefix })
}

/// Closes the lower kneading word up into a periodic word agreeing with it
/// on the first `k + 1` letters, where `n` is a cut with `ω_n = 0`.
pub fn periodize_lower(source: &mut dyn DigitSource, n: usize) -> Result<PeriodizationTrace> {
    periodize(source, n, Side::Minus)
}

/// The mirror image of [`periodize_lower`] for the upper word, at a cut
/// with `ν_n = 1`.
pub fn periodize_upper(source: &mut dyn DigitSource, n: usize) -> Result<PeriodizationTrace> {
    let mut flipped = Complemented(source);
    let mut t = periodize(&mut flipped, n, Side::Plus)?;
    t.result = t.result.complement();
    t.prefix = t.prefix.complement();
    Ok(t)
}

/// The slope whose entropy matches the pair: the Perron root of its
/// automaton, with width about `2^(-bits/2)`.
pub fn recover_beta(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord, bits: u32) -> Result<Real> {
    let aut = subshift::build_automaton(omega, nu)?;
    Ok(aut.spectral_radius(bits))
}

/// The offset that makes `ω` project onto the critical point:
/// `a = 1 - b + b(b - 1) Σ ω_k b^-k`.
pub fn recover_alpha(b: &Real, omega: &EventuallyPeriodicWord) -> Real {
    let prec = b.prec();
    let one = Real::one(prec);
    let s = dynamics::word_series(&b.recip().expect("b > 1"), omega);
    one.sub(b).add(&b.mul(&b.sub(&one)).mul(&s))
}

/// Parameters recovered from an automaton and a lower word, recomputed at
/// whatever precision is asked for.
pub struct RecoveredParams {
    automaton: SubshiftAutomaton,
    lower: EventuallyPeriodicWord,
    cache: Mutex<HashMap<u32, Real>>,
}

impl RecoveredParams {
    pub fn new(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord) -> Result<Self> {
        Ok(RecoveredParams {
            automaton: subshift::build_automaton(omega, nu)?,
            lower: omega.clone(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn automaton(&self) -> &SubshiftAutomaton {
        &self.automaton
    }

    /// `b` with radius about `2^-bits`.
    pub fn beta(&self, bits: u32) -> Real {
        let mut cache = self.cache.lock().unwrap();
        cache.entry(bits).or_insert_with(|| self.automaton.spectral_radius(2 * bits).with_prec(bits)).clone()
    }

    pub fn alpha(&self, bits: u32) -> Real {
        recover_alpha(&self.beta(bits), &self.lower)
    }
}

impl ParamSource for RecoveredParams {
    fn params(&self, bits: u32) -> Result<Params> {
        Params::new(self.beta(bits), self.alpha(bits))
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Validation {
    Confirmed,
    Reduced { lower: EventuallyPeriodicWord, upper: EventuallyPeriodicWord, b: Real, a: Real },
}

/// Recomputes the kneading invariants at the recovered parameters. If they
/// differ from the pair, the recomputed pair must be periodic and recover
/// the same parameters.
pub fn validate_pair(
    source: &dyn ParamSource,
    omega: &EventuallyPeriodicWord,
    nu: &EventuallyPeriodicWord,
    precision: Precision,
    max_len: usize,
) -> Result<Validation> {
    let max_len = max_len.max(2 * (omega.orbit_len() + nu.orbit_len()) + 16);
    let (lower, upper) = dynamics::with_precision(source, precision, |p| {
        if p.fiber() != Fiber::Interior {
            return Err(Error::Domain("recovered parameters lie on the boundary".into()));
        }
        Ok((dynamics::detect_itinerary(p, Side::Minus, max_len)?, dynamics::detect_itinerary(p, Side::Plus, max_len)?))
    })?;
    let (Itinerary::Periodic(l), Itinerary::Periodic(u)) = (&lower, &upper) else {
        return Err(Error::ReductionFailed(format!(
            "kneading invariants at the recovered parameters are not periodic: {lower:?}, {upper:?}"
        )));
    };
    if l == omega && u == nu {
        return Ok(Validation::Confirmed);
    }
    let bits = precision.start;
    let before = source.params(bits)?;
    let again = RecoveredParams::new(l, u)?;
    let (b, a) = (again.beta(bits), again.alpha(bits));
    if !b.overlaps(before.beta()) || !a.overlaps(before.alpha()) {
        return Err(Error::ReductionFailed(format!("pair {l}, {u} recovers different parameters")));
    }
    Ok(Validation::Reduced { lower: l.clone(), upper: u.clone(), b, a })
}

#[derive(Clone, Copy, Debug)]
pub struct ApproxConfig {
    pub precision: Precision,
    pub max_len: usize,
    pub max_cut: usize,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig { precision: Precision::default(), max_len: dynamics::DEFAULT_MAX_LEN, max_cut: DEFAULT_MAX_CUT }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SftApproximation {
    pub beta: Real,
    pub alpha: Real,
    pub target_b: Real,
    pub target_a: Real,
    pub pair: (EventuallyPeriodicWord, EventuallyPeriodicWord),
    pub certificate: SftCertificate,
    pub err_beta: Real,
    pub err_alpha: Real,
    /// The scan index; 0 when the input is already of finite type.
    pub n_used: usize,
    pub lower_trace: Option<PeriodizationTrace>,
    pub upper_trace: Option<PeriodizationTrace>,
    pub validation: Option<Validation>,
}

impl SftApproximation {
    /// `4(b - β)/(β - 1)^2 + 6/(β^n (β - 1))` for the recorded cut.
    pub fn alpha_error_bound(&self) -> Real {
        alpha_bound(&self.beta, &self.target_b, self.n_used)
    }
}

fn alpha_bound(beta: &Real, b: &Real, n: usize) -> Real {
    let prec = beta.prec();
    let one = Real::one(prec);
    let bm1 = beta.sub(&one);
    let first = Real::from_int(4, prec).mul(&b.sub(beta)).div(&bm1.mul(&bm1)).expect("beta > 1");
    let second = Real::from_int(6, prec).div(&beta.powi(n as u32).mul(&bm1)).expect("beta > 1");
    first.add(&second)
}

/// One kneading invariant as seen by the scan.
enum Known<'a> {
    Periodic(EventuallyPeriodicWord),
    Word(EventuallyPeriodicWord),
    Stream(KneadingDigits<'a>),
}

impl Known<'_> {
    fn source(&mut self) -> &mut dyn DigitSource {
        match self {
            Known::Periodic(w) | Known::Word(w) => w,
            Known::Stream(s) => s,
        }
    }

    /// First 1-based index at or after `n` carrying `letter`.
    fn next_cut(&mut self, n: usize, letter: u8) -> Result<usize> {
        let src = self.source();
        let mut m = n;
        while src.letter(m - 1)? != letter {
            m += 1;
            if m > n + MAX_EXTENSION {
                return Err(Error::InvalidPrefix(format!("no admissible cut within {MAX_EXTENSION} letters")));
            }
        }
        Ok(m)
    }
}

fn certainly_below(x: &Real, eps: &Real) -> bool {
    x.abs_upper().lt(eps)
}

/// Finds parameters within `eps` of the source (in both coordinates) whose
/// shift is of finite type, together with its certificate.
pub fn approximate_sft(source: &dyn ParamSource, eps: &Real, config: &ApproxConfig) -> Result<SftApproximation> {
    let params = source.params(config.precision.start)?;
    if params.fiber() != Fiber::Interior {
        return Err(Error::Domain("boundary parameters are classified, not approximated".into()));
    }
    if !eps.is_positive() {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let bits = config.precision.start;
    let (beta, alpha) = (params.beta().clone(), params.alpha().clone());
    let zero = Real::zero(bits);

    let (lower, upper) = dynamics::with_precision(source, config.precision, |p| {
        Ok((
            dynamics::detect_itinerary(p, Side::Minus, config.max_len)?,
            dynamics::detect_itinerary(p, Side::Plus, config.max_len)?,
        ))
    })?;
    if let (Itinerary::Periodic(l), Itinerary::Periodic(u)) = (&lower, &upper) {
        let certificate = certificate_for(l, u, bits)?;
        return Ok(SftApproximation {
            beta: beta.clone(),
            alpha: alpha.clone(),
            target_b: beta,
            target_a: alpha,
            pair: (l.clone(), u.clone()),
            certificate,
            err_beta: zero.clone(),
            err_alpha: zero,
            n_used: 0,
            lower_trace: None,
            upper_trace: None,
            validation: None,
        });
    }
    let known = |it: Itinerary, side: Side| match it {
        Itinerary::Periodic(w) => Known::Periodic(w),
        Itinerary::EventuallyPeriodic(w) => Known::Word(w),
        Itinerary::NotFound { .. } => Known::Stream(KneadingDigits::new(source, side, config.precision)),
    };
    let mut lo = known(lower, Side::Minus);
    let mut up = known(upper, Side::Plus);

    let mut last_cuts = None;
    for n in 3..=config.max_cut {
        let (lower_trace, omega) = match &mut lo {
            Known::Periodic(w) => (None, w.clone()),
            other => {
                let cut = other.next_cut(n, 0)?;
                let t = periodize_lower(other.source(), cut)?;
                let w = t.result.clone();
                (Some(t), w)
            }
        };
        let (upper_trace, nu) = match &mut up {
            Known::Periodic(w) => (None, w.clone()),
            other => {
                let cut = other.next_cut(n, 1)?;
                let t = periodize_upper(other.source(), cut)?;
                let w = t.result.clone();
                (Some(t), w)
            }
        };
        let cuts = (lower_trace.as_ref().map(|t| t.n), upper_trace.as_ref().map(|t| t.n));
        if last_cuts == Some(cuts) {
            continue;
        }
        last_cuts = Some(cuts);
        if !admissibility::check_condition1(&omega, &nu) || !admissibility::check_condition2(&omega, &nu) {
            return Err(Error::Invariant(format!("periodized pair {omega}, {nu} violates the membership conditions")));
        }
        let recovered = RecoveredParams::new(&omega, &nu)?;
        let b = recovered.beta(bits);
        let a = recovered.alpha(bits);
        let (err_beta, err_alpha) = (b.sub(&beta), a.sub(&alpha));
        if !certainly_below(&err_beta, eps) || !certainly_below(&err_alpha, eps) {
            continue;
        }
        let tenth = eps.div(&Real::from_int(10, bits)).unwrap();
        if !b.width().lt(&tenth) || !a.width().lt(&tenth) {
            return Err(Error::precision(bits, "recovered parameters are too coarse for the tolerance"));
        }
        if b.lt(&beta) {
            return Err(Error::Invariant(format!("recovered slope {b} is below the source slope {beta}")));
        }
        if Params::new(b.clone(), a.clone()).map(|p| p.fiber()) != Ok(Fiber::Interior) {
            continue;
        }
        let validation = validate_pair(&recovered, &omega, &nu, config.precision, config.max_len)?;
        let (omega, nu, b, a) = match &validation {
            Validation::Confirmed => (omega, nu, b, a),
            Validation::Reduced { lower, upper, b, a } => (lower.clone(), upper.clone(), b.clone(), a.clone()),
        };
        let (err_beta, err_alpha) = (b.sub(&beta), a.sub(&alpha));
        let bound = alpha_bound(&beta, &b, n);
        if err_alpha.abs().gt(&bound) {
            return Err(Error::Invariant(format!("offset error {err_alpha} exceeds the bound {bound} at cut {n}")));
        }
        let certificate = certificate_for(&omega, &nu, bits)?;
        return Ok(SftApproximation {
            beta,
            alpha,
            target_b: b,
            target_a: a,
            pair: (omega, nu),
            certificate,
            err_beta: err_beta.abs(),
            err_alpha: err_alpha.abs(),
            n_used: n,
            lower_trace,
            upper_trace,
            validation: Some(validation),
        });
    }
    Err(Error::NoProgress { max_cut: config.max_cut })
}

fn certificate_for(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord, bits: u32) -> Result<SftCertificate> {
    let report = admissibility::is_admissible(omega, nu);
    if !report.periodically_admissible {
        return Err(Error::Invariant(format!("pair {omega}, {nu} is not periodically admissible")));
    }
    match subshift::certify(omega, nu, bits)? {
        Some(c) => Ok(c),
        None => Err(Error::Invariant(format!("pair {omega}, {nu} does not define a shift of finite type"))),
    }
}
