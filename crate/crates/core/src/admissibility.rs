//! Membership in the two-interval sets `Ω±(ω, ν)` and the four conditions
//! under which a pair of words is the kneading pair of some map.

use std::cmp::Ordering;

use serde::Serialize;

use crate::dynamics::Side;
use crate::real::Real;
use crate::subshift;
use crate::words::{EventuallyPeriodicWord, FiniteWord};

/// Whether `σ^i(xi)` satisfies the two-interval condition of `side`.
fn shift_in_omega(
    omega: &EventuallyPeriodicWord,
    nu: &EventuallyPeriodicWord,
    xi: &EventuallyPeriodicWord,
    i: usize,
    side: Side,
) -> bool {
    let lo0 = xi.cmp_shifted(i, nu, 1) != Ordering::Less; // σν ⪯ x
    let hi0 = xi.cmp_shifted(i, omega, 0);
    let lo1 = xi.cmp_shifted(i, nu, 0);
    let hi1 = xi.cmp_shifted(i, omega, 1) != Ordering::Greater; // x ⪯ σω
    match side {
        Side::Plus => (lo0 && hi0 == Ordering::Less) || (lo1 != Ordering::Less && hi1),
        Side::Minus => (lo0 && hi0 != Ordering::Greater) || (lo1 == Ordering::Greater && hi1),
    }
}

/// `ξ ∈ Ω±(ω, ν)`: every shift of `ξ` lies in one of the two order intervals.
pub fn member_omega(
    omega: &EventuallyPeriodicWord,
    nu: &EventuallyPeriodicWord,
    xi: &EventuallyPeriodicWord,
    side: Side,
) -> bool {
    (0..xi.orbit_len()).all(|i| shift_in_omega(omega, nu, xi, i, side))
}

pub fn check_condition1(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord) -> bool {
    omega.letter(0) == 0 && nu.letter(0) == 1
}

pub fn check_condition2(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord) -> bool {
    member_omega(omega, nu, omega, Side::Minus) && member_omega(omega, nu, nu, Side::Plus)
}

/// Exponential growth rate of the joint language, decided exactly from the
/// automaton; returns `(rate > 0, rate)`.
pub fn check_condition3(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord) -> (bool, Real) {
    match subshift::build_automaton(omega, nu) {
        Ok(aut) => {
            let positive = aut.has_positive_entropy();
            (positive, aut.entropy(crate::dynamics::DEFAULT_BITS))
        }
        Err(_) => (false, Real::zero(crate::dynamics::DEFAULT_BITS)),
    }
}

/// Follows the unique parse of `w` over the blocks `{xi, zeta}` (which
/// start with different letters). Succeeds when the parse position
/// revisits an earlier phase of `w`.
fn parses(w: &EventuallyPeriodicWord, xi: &[u8], zeta: &[u8]) -> bool {
    let pre = w.preperiod_len();
    let per = w.period_len();
    let canon = |i: usize| if i < pre { i } else { pre + (i - pre) % per };
    let mut seen = vec![false; pre + per];
    let mut pos = 0usize;
    loop {
        let c = canon(pos);
        if seen[c] {
            return true;
        }
        seen[c] = true;
        let block = if w.letter(pos) == xi[0] { xi } else { zeta };
        if block[0] != w.letter(pos) {
            return false;
        }
        if (0..block.len()).any(|t| w.letter(pos + t) != block[t]) {
            return false;
        }
        pos = c + block.len();
    }
}

fn block_pair_violates(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord, xi: &[u8], zeta: &[u8]) -> bool {
    if xi[..2] != [0, 1] || zeta[..2] != [1, 0] {
        return false;
    }
    if !parses(omega, xi, zeta) || !parses(nu, xi, zeta) {
        return false;
    }
    let bx = EventuallyPeriodicWord::periodic(FiniteWord::new(xi.to_vec())).unwrap();
    let bz = EventuallyPeriodicWord::periodic(FiniteWord::new(zeta.to_vec())).unwrap();
    check_condition2(&bx, &bz) && (omega != &bx || nu != &bz)
}

fn search_bound(w: &EventuallyPeriodicWord) -> usize {
    w.preperiod_len() + 2 * w.period_len()
}

/// Condition (4): returns `(true, None)` when no two-block factorization
/// contradicts minimality, else `(false, Some((ξ, ζ)))`.
pub fn check_condition4(
    omega: &EventuallyPeriodicWord,
    nu: &EventuallyPeriodicWord,
) -> (bool, Option<(FiniteWord, FiniteWord)>) {
    let (bx, bz) = (search_bound(omega), search_bound(nu));
    let omega_prefix = omega.prefix(bx.max(3));
    let nu_prefix = nu.prefix(bz.max(3));
    for lx in 3..=bx {
        let xi = &omega_prefix.letters()[..lx];
        for lz in 3..=bz {
            let zeta = &nu_prefix.letters()[..lz];
            if block_pair_violates(omega, nu, xi, zeta) {
                return (false, Some((FiniteWord::new(xi.to_vec()), FiniteWord::new(zeta.to_vec()))));
            }
        }
    }
    (true, None)
}

/// Condition (4) by enumerating every pair of blocks up to the same length
/// bound, not only prefixes. Exponential; meant for cross-checking.
pub fn check_condition4_exhaustive(
    omega: &EventuallyPeriodicWord,
    nu: &EventuallyPeriodicWord,
) -> (bool, Option<(FiniteWord, FiniteWord)>) {
    let (bx, bz) = (search_bound(omega), search_bound(nu));
    let words = |len: usize, head: [u8; 2]| {
        (0u64..1 << (len - 2)).map(move |m| {
            let mut v = head.to_vec();
            v.extend((0..len - 2).map(|t| ((m >> t) & 1) as u8));
            v
        })
    };
    for lx in 3..=bx {
        for xi in words(lx, [0, 1]) {
            for lz in 3..=bz {
                for zeta in words(lz, [1, 0]) {
                    if block_pair_violates(omega, nu, &xi, &zeta) {
                        return (false, Some((FiniteWord::new(xi), FiniteWord::new(zeta))));
                    }
                }
            }
        }
    }
    (true, None)
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub cond1: bool,
    pub cond2: bool,
    pub cond3: bool,
    pub entropy: Real,
    pub cond4: bool,
    pub witness: Option<(FiniteWord, FiniteWord)>,
    pub admissible: bool,
    pub periodically_admissible: bool,
}

pub fn is_admissible(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord) -> AdmissibilityReport {
    let cond1 = check_condition1(omega, nu);
    let cond2 = cond1 && check_condition2(omega, nu);
    let (cond3, entropy) = check_condition3(omega, nu);
    let (cond4, witness) = if cond2 { check_condition4(omega, nu) } else { (false, None) };
    let admissible = cond1 && cond2 && cond3 && cond4;
    AdmissibilityReport {
        cond1,
        cond2,
        cond3,
        entropy,
        cond4,
        witness,
        admissible,
        periodically_admissible: admissible && omega.is_periodic() && nu.is_periodic(),
    }
}

/// What can be said about a pair known only through finite prefixes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrefixReport {
    pub cond1: bool,
    /// Membership conditions hold on every comparison decidable within the
    /// prefixes; `false` means falsified.
    pub cond2_not_falsified: bool,
    pub checked_len: usize,
}

/// Checks the first two conditions on what the prefixes determine. A
/// comparison that runs off the end of a prefix counts as undecided.
pub fn check_prefixes(omega: &FiniteWord, nu: &FiniteWord) -> PrefixReport {
    let n = omega.len().min(nu.len());
    let cond1 = n > 0 && omega.get(0) == 0 && nu.get(0) == 1;
    let w = omega.letters();
    let v = nu.letters();
    // compare x[i..] with y[j..]; None if undecided within the prefixes
    let cmp = |x: &[u8], i: usize, y: &[u8], j: usize| -> Option<Ordering> {
        let len = (x.len() - i).min(y.len() - j.min(y.len()));
        (0..len).find(|&t| x[i + t] != y[j + t]).map(|t| x[i + t].cmp(&y[j + t]))
    };
    let ok = |x: &[u8], i: usize, side: Side| {
        let lo0 = cmp(x, i, v, 1).map(|o| o != Ordering::Less);
        let hi0 = cmp(x, i, w, 0);
        let lo1 = cmp(x, i, v, 0);
        let hi1 = cmp(x, i, w, 1).map(|o| o != Ordering::Greater);
        let or = |a: Option<bool>, b: Option<bool>| match (a, b) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        };
        let and = |a: Option<bool>, b: Option<bool>| match (a, b) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        };
        let (first, second) = match side {
            Side::Plus => (and(lo0, hi0.map(|o| o == Ordering::Less)), and(lo1.map(|o| o != Ordering::Less), hi1)),
            Side::Minus => {
                (and(lo0, hi0.map(|o| o != Ordering::Greater)), and(lo1.map(|o| o == Ordering::Greater), hi1))
            }
        };
        or(first, second) != Some(false)
    };
    let cond2 = (1..w.len()).all(|i| ok(w, i, Side::Minus)) && (1..v.len()).all(|i| ok(v, i, Side::Plus));
    PrefixReport { cond1, cond2_not_falsified: cond2, checked_len: n }
}
