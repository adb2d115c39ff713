//! The language of the subshift cut out by a pair of bound words, as a
//! finite automaton: word counts, Perron root, minimal forbidden words and
//! the finite-type/sofic classification of the maps.
//!
//! A sequence belongs to the shift when each of its shifts lies in
//! `[σν, ω]` or in `[ν, σω]`. Reading letters left to right, every
//! position opens a constraint which tracks whether the suffix read so far
//! still agrees with the lower or upper end of each interval. A constraint
//! is discharged as soon as it falls strictly inside one interval, and the
//! word is rejected when it has left both. Since the bounds are eventually
//! periodic the set of pending constraints ranges over a finite set.

use std::collections::{HashMap, VecDeque};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::admissibility::{self, member_omega};
use crate::dynamics::{self, Fiber, Itinerary, ParamSource, Params, Precision, Side};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::words::{EventuallyPeriodicWord, FiniteWord};

/// Upper limit on the number of states explored before minimization.
pub const MAX_STATES: usize = 1 << 20;
/// Upper limit on the number of minimal forbidden words enumerated.
pub const MAX_FORBIDDEN: usize = 1 << 16;

const RELEASED: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Bound {
    Dead,
    /// Still equal to a prefix of the lower and/or upper end; `RELEASED`
    /// marks an end that has already been passed strictly.
    Tight {
        lo: u32,
        hi: u32,
    },
}

type Constraint = [Bound; 2];

struct Bounds {
    /// `[lower0, upper0, lower1, upper1]`
    words: [EventuallyPeriodicWord; 4],
}

impl Bounds {
    fn new(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord) -> Self {
        Bounds { words: [nu.shift(1), omega.clone(), nu.clone(), omega.shift(1)] }
    }

    fn next_phase(&self, k: usize, i: u32) -> u32 {
        let w = &self.words[k];
        let (pre, per) = (w.preperiod_len() as u32, w.period_len() as u32);
        let j = i + 1;
        if j < pre {
            j
        } else {
            pre + (j - pre) % per
        }
    }

    /// `None` means the constraint is satisfied for good.
    fn step(&self, c: &Constraint, letter: u8) -> Option<Constraint> {
        let mut out = *c;
        for (side, b) in out.iter_mut().enumerate() {
            let Bound::Tight { lo, hi } = *b else { continue };
            let (lw, uw) = (2 * side, 2 * side + 1);
            let mut nlo = lo;
            let mut nhi = hi;
            let mut dead = false;
            if lo != RELEASED {
                let l = self.words[lw].letter(lo as usize);
                if letter > l {
                    nlo = RELEASED;
                } else if letter == l {
                    nlo = self.next_phase(lw, lo);
                } else {
                    dead = true;
                }
            }
            if hi != RELEASED {
                let u = self.words[uw].letter(hi as usize);
                if letter < u {
                    nhi = RELEASED;
                } else if letter == u {
                    nhi = self.next_phase(uw, hi);
                } else {
                    dead = true;
                }
            }
            *b = if dead {
                Bound::Dead
            } else if nlo == RELEASED && nhi == RELEASED {
                return None;
            } else {
                Bound::Tight { lo: nlo, hi: nhi }
            };
        }
        Some(out)
    }
}

/// A deterministic automaton whose finite paths from `initial` spell
/// exactly the finite factors of the shift. Every state lies on an
/// infinite path, and no two states have the same future.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubshiftAutomaton {
    next: Vec<[Option<u32>; 2]>,
    initial: Option<u32>,
}

pub fn build_automaton(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord) -> Result<SubshiftAutomaton> {
    let bounds = Bounds::new(omega, nu);
    let fresh: Constraint = [Bound::Tight { lo: 0, hi: 0 }; 2];
    let mut index: HashMap<Vec<Constraint>, u32> = HashMap::new();
    let mut states: Vec<Vec<Constraint>> = vec![Vec::new()];
    let mut next: Vec<[Option<u32>; 2]> = Vec::new();
    index.insert(Vec::new(), 0);
    let mut queue = VecDeque::from([0u32]);
    while let Some(s) = queue.pop_front() {
        let mut row = [None, None];
        'letters: for letter in 0..2u8 {
            let mut out = Vec::with_capacity(states[s as usize].len() + 1);
            for c in states[s as usize].iter().chain(std::iter::once(&fresh)) {
                match bounds.step(c, letter) {
                    None => {}
                    Some([Bound::Dead, Bound::Dead]) => continue 'letters,
                    Some(c) => out.push(c),
                }
            }
            out.sort_unstable();
            out.dedup();
            let id = match index.get(&out) {
                Some(&id) => id,
                None => {
                    let id = states.len() as u32;
                    if states.len() >= MAX_STATES {
                        return Err(Error::EscalationFailed { limit: MAX_STATES });
                    }
                    index.insert(out.clone(), id);
                    states.push(out);
                    queue.push_back(id);
                    id
                }
            };
            row[letter as usize] = Some(id);
        }
        if next.len() <= s as usize {
            next.resize(s as usize + 1, [None, None]);
        }
        next[s as usize] = row;
    }
    next.resize(states.len(), [None, None]);
    Ok(SubshiftAutomaton::trimmed(next, 0))
}

impl SubshiftAutomaton {
    /// Restricts to states with an infinite future, then merges states with
    /// equal futures.
    fn trimmed(next: Vec<[Option<u32>; 2]>, initial: u32) -> Self {
        let n = next.len();
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut outdeg = vec![0u32; n];
        for (s, row) in next.iter().enumerate() {
            for t in row.iter().flatten() {
                preds[*t as usize].push(s as u32);
                outdeg[s] += 1;
            }
        }
        let mut alive = vec![true; n];
        let mut stack: Vec<usize> = (0..n).filter(|&s| outdeg[s] == 0).collect();
        while let Some(s) = stack.pop() {
            if !alive[s] {
                continue;
            }
            alive[s] = false;
            for &p in &preds[s] {
                outdeg[p as usize] -= 1;
                if outdeg[p as usize] == 0 {
                    stack.push(p as usize);
                }
            }
        }
        if !alive[initial as usize] {
            return SubshiftAutomaton { next: Vec::new(), initial: None };
        }
        // keep states reachable from the initial one
        let mut id = vec![u32::MAX; n];
        let mut order = vec![initial as usize];
        id[initial as usize] = 0;
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            for t in next[s].iter().flatten() {
                let t = *t as usize;
                if alive[t] && id[t] == u32::MAX {
                    id[t] = order.len() as u32;
                    order.push(t);
                }
            }
            i += 1;
        }
        let compact: Vec<[Option<u32>; 2]> =
            order.iter().map(|&s| next[s].map(|t| t.filter(|&t| alive[t as usize]).map(|t| id[t as usize]))).collect();
        SubshiftAutomaton { next: compact, initial: Some(0) }.minimized()
    }

    fn minimized(self) -> Self {
        let n = self.next.len();
        if n == 0 {
            return self;
        }
        let mut class = vec![0u32; n];
        let mut count = 1usize;
        loop {
            let mut sigs: HashMap<(u32, u32, u32), u32> = HashMap::new();
            let mut refined = vec![0u32; n];
            for s in 0..n {
                let f = |t: Option<u32>| t.map_or(u32::MAX, |t| class[t as usize]);
                let key = (class[s], f(self.next[s][0]), f(self.next[s][1]));
                let k = sigs.len() as u32;
                refined[s] = *sigs.entry(key).or_insert(k);
            }
            let new_count = sigs.len();
            class = refined;
            if new_count == count {
                break;
            }
            count = new_count;
        }
        // renumber classes in order of first appearance from the initial state
        let mut rep = vec![u32::MAX; count];
        let mut order = Vec::with_capacity(count);
        let start = self.initial.unwrap() as usize;
        rep[class[start] as usize] = 0;
        order.push(start);
        let mut i = 0;
        while i < order.len() {
            let s = order[i];
            for t in self.next[s].iter().flatten() {
                let c = class[*t as usize] as usize;
                if rep[c] == u32::MAX {
                    rep[c] = order.len() as u32;
                    order.push(*t as usize);
                }
            }
            i += 1;
        }
        let next = order.iter().map(|&s| self.next[s].map(|t| t.map(|t| rep[class[t as usize] as usize]))).collect();
        SubshiftAutomaton { next, initial: Some(0) }
    }

    pub fn num_states(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        self.initial.is_none()
    }

    pub fn initial(&self) -> Option<usize> {
        self.initial.map(|s| s as usize)
    }

    pub fn transition(&self, state: usize, letter: u8) -> Option<usize> {
        self.next[state][letter as usize].map(|t| t as usize)
    }

    /// `adjacency[i][j]` is the number of letters leading from `i` to `j`.
    pub fn adjacency(&self) -> Vec<Vec<u8>> {
        let n = self.num_states();
        let mut a = vec![vec![0u8; n]; n];
        for (s, row) in self.next.iter().enumerate() {
            for t in row.iter().flatten() {
                a[s][*t as usize] += 1;
            }
        }
        a
    }

    /// Whether `word` is a factor of the shift.
    pub fn accepts(&self, word: &[u8]) -> bool {
        let Some(mut s) = self.initial() else { return false };
        for &b in word {
            match self.transition(s, b) {
                Some(t) => s = t,
                None => return false,
            }
        }
        true
    }

    /// Number of words of length `n` in the language.
    pub fn count_words(&self, n: usize) -> BigUint {
        let Some(init) = self.initial() else { return BigUint::zero() };
        let mut v = vec![BigUint::zero(); self.num_states()];
        v[init] = BigUint::one();
        for _ in 0..n {
            let mut w = vec![BigUint::zero(); v.len()];
            for (s, x) in v.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for t in self.next[s].iter().flatten() {
                    w[*t as usize] += x;
                }
            }
            v = w;
        }
        v.into_iter().sum()
    }

    fn components(&self) -> Vec<Vec<usize>> {
        strongly_connected(&self.next)
    }

    fn internal_edges(&self, comp: &[usize], pos: &[u32]) -> Vec<Vec<usize>> {
        comp.iter()
            .map(|&s| {
                self.next[s]
                    .iter()
                    .flatten()
                    .map(|&t| pos[t as usize])
                    .filter(|&j| j != u32::MAX)
                    .map(|j| j as usize)
                    .collect()
            })
            .collect()
    }

    /// Whether the number of words grows exponentially.
    pub fn has_positive_entropy(&self) -> bool {
        let mut pos = vec![u32::MAX; self.num_states()];
        self.components().iter().any(|comp| {
            for (i, &s) in comp.iter().enumerate() {
                pos[s] = i as u32;
            }
            let edges = self.internal_edges(comp, &pos);
            let branching = edges.iter().any(|e| e.len() > 1);
            for &s in comp {
                pos[s] = u32::MAX;
            }
            branching
        })
    }

    /// Enclosure of the Perron root of the adjacency matrix, of width at
    /// most about `2^(-bits/2)`.
    pub fn spectral_radius(&self, bits: u32) -> Real {
        self.perron(bits, first_return_root)
    }

    /// The same enclosure from Collatz–Wielandt bounds along a power
    /// iteration. Slow when the spectral gap is small.
    pub fn spectral_radius_power(&self, bits: u32) -> Real {
        self.perron(bits, perron_root)
    }

    fn perron(&self, bits: u32, root: fn(&[Vec<usize>], u32) -> Real) -> Real {
        let mut lo: Option<Real> = None;
        let mut hi: Option<Real> = None;
        let mut pos = vec![u32::MAX; self.num_states()];
        for comp in self.components() {
            for (i, &s) in comp.iter().enumerate() {
                pos[s] = i as u32;
            }
            let edges = self.internal_edges(&comp, &pos);
            for &s in &comp {
                pos[s] = u32::MAX;
            }
            if edges.iter().all(|e| e.is_empty()) {
                continue;
            }
            let r = if edges.iter().all(|e| e.len() == 1) { Real::one(bits) } else { root(&edges, bits) };
            let (l, h) = (r.lower(), r.upper());
            lo = Some(lo.map_or(l.clone(), |x| max_exact(x, l)));
            hi = Some(hi.map_or(h.clone(), |x| max_exact(x, h)));
        }
        match (lo, hi) {
            (Some(l), Some(h)) => Real::hull(&l, &h).with_prec(bits),
            _ => Real::zero(bits),
        }
    }

    /// Natural logarithm of the Perron root; zero for a shift without
    /// exponential growth.
    pub fn entropy(&self, bits: u32) -> Real {
        if !self.has_positive_entropy() {
            return Real::zero(bits);
        }
        self.spectral_radius(bits).ln().expect("Perron root exceeds one")
    }

    /// Minimal forbidden words, or `None` when there are infinitely many
    /// (the shift is not of finite type).
    pub fn minimal_forbidden_words(&self) -> Result<Option<Vec<FiniteWord>>> {
        let Some(init) = self.initial else { return Ok(Some(vec![FiniteWord::empty()])) };
        let mut found: Vec<FiniteWord> = (0..2u8)
            .filter(|&b| self.next[init as usize][b as usize].is_none())
            .map(|b| FiniteWord::new(vec![b]))
            .collect();
        // a node: (q, p0, p1) = (δ(x), δ(0x), δ(1x)), with p = q pruned
        type Node = (u32, [Option<u32>; 2]);
        let prune = |(q, ps): Node| -> Node { (q, ps.map(|p| p.filter(|&p| p != q))) };
        let start = prune((init, self.next[init as usize]));
        let children = |(q, ps): Node| -> Vec<(u8, Node, [bool; 2])> {
            let mut out = Vec::new();
            for b in 0..2u8 {
                let Some(q2) = self.next[q as usize][b as usize] else { continue };
                let mut emit = [false; 2];
                let mut ps2 = [None; 2];
                for a in 0..2 {
                    if let Some(p) = ps[a] {
                        match self.next[p as usize][b as usize] {
                            Some(p2) => ps2[a] = Some(p2),
                            None => emit[a] = true,
                        }
                    }
                }
                out.push((b, prune((q2, ps2)), emit));
            }
            out
        };
        let active = |(_, ps): &Node| ps.iter().any(Option::is_some);
        // cycle check over the finite node graph
        let mut color: HashMap<Node, u8> = HashMap::new();
        let mut stack: Vec<(Node, usize)> = Vec::new();
        if active(&start) {
            color.insert(start, 1);
            stack.push((start, 0));
        }
        while let Some((node, i)) = stack.pop() {
            let ch = children(node);
            if i < ch.len() {
                stack.push((node, i + 1));
                let child = ch[i].1;
                if !active(&child) {
                    continue;
                }
                match color.get(&child) {
                    Some(1) => return Ok(None),
                    Some(_) => {}
                    None => {
                        color.insert(child, 1);
                        stack.push((child, 0));
                    }
                }
            } else {
                color.insert(node, 2);
            }
        }
        // enumerate the (acyclic) paths
        let mut path: Vec<u8> = Vec::new();
        let mut stack: Vec<(Node, usize, usize)> = Vec::new();
        if active(&start) {
            stack.push((start, 0, 0));
        }
        while let Some((node, i, depth)) = stack.pop() {
            path.truncate(depth);
            let ch = children(node);
            if i >= ch.len() {
                continue;
            }
            stack.push((node, i + 1, depth));
            let (b, child, emit) = ch[i];
            for (a, e) in emit.iter().enumerate() {
                if *e {
                    let mut w = Vec::with_capacity(depth + 2);
                    w.push(a as u8);
                    w.extend_from_slice(&path);
                    w.push(b);
                    found.push(FiniteWord::new(w));
                    if found.len() > MAX_FORBIDDEN {
                        return Err(Error::EscalationFailed { limit: MAX_FORBIDDEN });
                    }
                }
            }
            if active(&child) {
                path.push(b);
                stack.push((child, 0, depth + 1));
            }
        }
        found.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.letters().cmp(y.letters())));
        found.dedup();
        Ok(Some(found))
    }

    pub fn is_finite_type(&self) -> Result<bool> {
        Ok(self.minimal_forbidden_words()?.is_some())
    }
}

fn max_exact(a: Real, b: Real) -> Real {
    if a.cmp_certain(&b) == Some(std::cmp::Ordering::Less) {
        b
    } else {
        a
    }
}

/// Tarjan's algorithm, iteratively; components come out in reverse
/// topological order.
fn strongly_connected(next: &[[Option<u32>; 2]]) -> Vec<Vec<usize>> {
    let n = next.len();
    let mut index = vec![u32::MAX; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0u32;
    for root in 0..n {
        if index[root] != u32::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut i)) = call.last_mut() {
            if *i < 2 {
                let e = *i;
                *i += 1;
                if let Some(w) = next[v][e] {
                    let w = w as usize;
                    if index[w] == u32::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Period of an irreducible graph: gcd of `level(u) + 1 - level(v)` over
/// edges `u -> v`, with levels from a breadth-first search.
fn graph_period(edges: &[Vec<usize>]) -> u64 {
    let mut level = vec![u64::MAX; edges.len()];
    level[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &v in &edges[u] {
            if level[v] == u64::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0u64;
    for (u, e) in edges.iter().enumerate() {
        for &v in e {
            let d = (level[u] + 1).abs_diff(level[v]);
            g = num_integer::gcd(g, d);
        }
    }
    g
}

/// An irreducible graph seen from its branching vertices. Every cycle
/// passes through one of them, and each of their out-edges continues along
/// a forced path of `len` edges to the next branching vertex `to`.
struct FirstReturn {
    excursions: Vec<Vec<(usize, u32)>>,
    lengths: Vec<u32>,
}

impl FirstReturn {
    fn new(edges: &[Vec<usize>]) -> Self {
        let m = edges.len();
        let mut rome = vec![usize::MAX; m];
        let mut count = 0;
        for (u, e) in edges.iter().enumerate() {
            if e.len() > 1 {
                rome[u] = count;
                count += 1;
            }
        }
        let mut excursions = vec![Vec::new(); count];
        let mut lengths = Vec::new();
        for (u, e) in edges.iter().enumerate() {
            if rome[u] == usize::MAX {
                continue;
            }
            for &first in e {
                let (mut v, mut len) = (first, 1u32);
                while rome[v] == usize::MAX {
                    v = edges[v][0];
                    len += 1;
                }
                excursions[rome[u]].push((rome[v], len));
                lengths.push(len);
            }
        }
        lengths.sort_unstable();
        lengths.dedup();
        FirstReturn { excursions, lengths }
    }

    fn dim(&self) -> usize {
        self.excursions.len()
    }

    /// `I - M(x)` where `M(x)[i][j]` sums `x^-len` over excursions `i -> j`.
    fn matrix_f64(&self, x: f64) -> Vec<Vec<f64>> {
        let r = self.dim();
        let mut b = vec![vec![0.0; r]; r];
        for (i, ex) in self.excursions.iter().enumerate() {
            b[i][i] = 1.0;
            for &(j, len) in ex {
                b[i][j] -= x.powi(-(len as i32));
            }
        }
        b
    }

    fn matrix(&self, x: &Real) -> Vec<Vec<Real>> {
        let prec = x.prec();
        let y = x.recip().expect("x > 0");
        let mut pow: HashMap<u32, Real> = HashMap::new();
        let mut cur = Real::one(prec);
        let mut at = 0u32;
        for &len in &self.lengths {
            cur = cur.mul(&y.powi(len - at));
            at = len;
            pow.insert(len, cur.clone());
        }
        let r = self.dim();
        let mut b = vec![vec![Real::zero(prec); r]; r];
        for (i, ex) in self.excursions.iter().enumerate() {
            b[i][i] = Real::one(prec);
            for &(j, len) in ex {
                b[i][j] = b[i][j].sub(&pow[&len]);
            }
        }
        b
    }
}

/// Gaussian elimination without pivoting on the Z-matrix `I - M(x)`: all
/// pivots are positive exactly when `ρ(M(x)) < 1`, that is when `x`
/// exceeds the Perron root. Returns the sign verdict and the determinant.
fn pivot_test_f64(mut b: Vec<Vec<f64>>) -> (bool, f64) {
    let r = b.len();
    let mut det = 1.0;
    for k in 0..r {
        let p = b[k][k];
        det *= p;
        if p <= 0.0 {
            return (false, det);
        }
        for i in k + 1..r {
            let f = b[i][k] / p;
            if f == 0.0 {
                continue;
            }
            for j in k + 1..r {
                b[i][j] -= f * b[k][j];
            }
        }
    }
    (true, det)
}

/// `Some(true)` if `x` is certainly above the Perron root, `Some(false)` if
/// certainly not above it, `None` if undecided; also the determinant.
fn pivot_test(mut b: Vec<Vec<Real>>) -> (Option<bool>, Real) {
    let r = b.len();
    let prec = b[0][0].prec();
    let mut det = Real::one(prec);
    for k in 0..r {
        let p = b[k][k].clone();
        det = det.mul(&p);
        if p.is_negative() {
            return (Some(false), det);
        }
        if !p.is_positive() {
            return (None, det);
        }
        let inv = p.recip().unwrap();
        for i in k + 1..r {
            if b[i][k].is_exact_zero() {
                continue;
            }
            let f = b[i][k].mul(&inv);
            for j in k + 1..r {
                if b[k][j].is_exact_zero() {
                    continue;
                }
                b[i][j] = b[i][j].sub(&f.mul(&b[k][j]));
            }
        }
    }
    (Some(true), det)
}

/// Perron root of an irreducible graph that is not a single cycle,
/// bracketed by two certified pivot tests on the first-return matrix.
fn first_return_root(edges: &[Vec<usize>], bits: u32) -> Real {
    let fr = FirstReturn::new(edges);
    let (mut lo, mut hi) = (1.0f64, 2.0f64 + 1e-9);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pivot_test_f64(fr.matrix_f64(mid)).0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let prec = bits + 64;
    let exact = |v: &Real| v.midpoint().with_prec(prec);
    let g = |x: &Real| pivot_test(fr.matrix(x)).1.midpoint();
    // secant refinement of the determinant's root
    let mut x0 = Real::from_f64(lo, prec);
    let mut x1 = Real::from_f64(hi, prec);
    let (mut g0, mut g1) = (g(&x0), g(&x1));
    let goal = -(bits as f64) / 2.0 - 8.0;
    for _ in 0..40 {
        let denom = g1.sub(&g0);
        if denom.contains_zero() {
            break;
        }
        let Some(step) = g1.mul(&x1.sub(&x0)).div(&denom) else { break };
        let x2 = exact(&x1.sub(&step));
        let moved = x2.sub(&x1).abs().to_f64();
        x0 = x1;
        g0 = g1;
        x1 = x2;
        g1 = g(&x1);
        if moved == 0.0 || moved.log2() < goal {
            break;
        }
    }
    let center = if x1.within(&Real::from_f64(lo - 1e-9, prec), &Real::from_f64(hi + 1e-9, prec)) {
        x1
    } else {
        Real::from_f64(0.5 * (lo + hi), prec)
    };
    let mut delta = -((bits as i64 + 1) / 2) - 2;
    loop {
        let d = Real::pow2(delta, prec);
        let below = exact(&center.sub(&d));
        let above = exact(&center.add(&d));
        let ok_below = pivot_test(fr.matrix(&below)).0 == Some(false);
        let ok_above = pivot_test(fr.matrix(&above)).0 == Some(true);
        if ok_below && ok_above {
            return Real::hull(&below, &above).with_prec(bits);
        }
        if delta > -8 {
            // the root lies in [1, 2] in every case
            return Real::hull(&Real::one(prec), &Real::from_int(2, prec)).with_prec(bits);
        }
        delta += 4;
    }
}

/// Collatz–Wielandt enclosure of the Perron root of an irreducible
/// nonnegative integer matrix given by adjacency lists. Primitive
/// matrices are iterated directly, imprimitive ones shifted by the identity.
fn perron_root(edges: &[Vec<usize>], bits: u32) -> Real {
    let m = edges.len();
    let shift: u32 = if graph_period(edges) == 1 { 0 } else { 1 };
    let apply_f = |v: &[f64]| -> Vec<f64> {
        let mut w: Vec<f64> = v.iter().map(|x| x * shift as f64).collect();
        for (u, e) in edges.iter().enumerate() {
            for &t in e {
                w[u] += v[t];
            }
        }
        w
    };
    // cheap floating point warm start
    let mut v = vec![1.0f64; m];
    let budget = (50_000_000 / m.max(1)).clamp(100, 200_000);
    for _ in 0..budget {
        let w = apply_f(&v);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (a, b) in w.iter().zip(&v) {
            let r = a / b;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let top = w.iter().cloned().fold(0.0, f64::max);
        v = w.into_iter().map(|x| (x / top).max(1e-300)).collect();
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    // exact integer iteration with fixed-point vectors
    let frac = bits + 64;
    let scale = 2f64.powi(52);
    let mut x: Vec<BigInt> = v
        .iter()
        .map(|&f| {
            let mant = BigInt::from((f * scale).round().max(1.0) as u64);
            let s = frac as i64 - 52;
            if s >= 0 {
                mant << s as usize
            } else {
                (mant >> (-s) as usize).max(BigInt::one())
            }
        })
        .collect();
    let prec = bits + 32;
    let target = -(bits as f64) / 2.0;
    let mut best: Option<Real> = None;
    for _ in 0..budget.max(1000) {
        let mut y: Vec<BigInt> = x.iter().map(|xi| xi * shift).collect();
        for (u, e) in edges.iter().enumerate() {
            for &t in e {
                y[u] += &x[t];
            }
        }
        // min and max of y_i / x_i by cross multiplication
        let (mut imin, mut imax) = (0usize, 0usize);
        for i in 1..m {
            if &y[i] * &x[imin] < &y[imin] * &x[i] {
                imin = i;
            }
            if &y[i] * &x[imax] > &y[imax] * &x[i] {
                imax = i;
            }
        }
        let lo = Real::from_ratio(&y[imin], &x[imin], prec).lower();
        let hi = Real::from_ratio(&y[imax], &x[imax], prec).upper();
        let enc = Real::hull(&lo, &hi).sub(&Real::from_int(shift as i64, prec));
        let done = enc.log2_radius() + 1.0 <= target;
        best = Some(match best {
            Some(b) if b.log2_radius() < enc.log2_radius() => b,
            _ => enc,
        });
        if done {
            break;
        }
        let top = y.iter().max().unwrap().bits();
        let keep = frac as u64 + 1;
        x = if top > keep {
            let s = top - keep;
            y.into_iter().map(|yi| (yi >> s as usize).max(BigInt::one())).collect()
        } else {
            y
        };
    }
    best.unwrap().with_prec(bits)
}

/// Counts length-`n` words `u` for which some `u t` lies in `Ω+ ∪ Ω-`,
/// with tails `t` running over the shifts of the two bound words.
pub fn count_words_bruteforce(omega: &EventuallyPeriodicWord, nu: &EventuallyPeriodicWord, n: usize) -> u64 {
    assert!(n < 40, "brute force over 2^{n} words");
    let tails: Vec<EventuallyPeriodicWord> = omega.shifts().chain(nu.shifts()).collect();
    let ok = |m: u64| {
        let u = FiniteWord::new((0..n).map(|i| ((m >> (n - 1 - i)) & 1) as u8).collect());
        tails.iter().any(|t| {
            let x = t.prepend(&u);
            member_omega(omega, nu, &x, Side::Plus) || member_omega(omega, nu, &x, Side::Minus)
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..1u64 << n).into_par_iter().filter(|&m| ok(m)).count() as u64
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..1u64 << n).filter(|&m| ok(m)).count() as u64
    }
}

pub fn count_words_matrix(aut: &SubshiftAutomaton, n: usize) -> BigUint {
    aut.count_words(n)
}

pub fn spectral_radius(aut: &SubshiftAutomaton, bits: u32) -> Real {
    aut.spectral_radius(bits)
}

/// Evidence that a pair of bound words defines a shift of finite type.
#[derive(Clone, Debug, Serialize)]
pub struct SftCertificate {
    pub pair: (EventuallyPeriodicWord, EventuallyPeriodicWord),
    pub forbidden: Vec<FiniteWord>,
    /// Length of the longest forbidden word minus one.
    pub memory: usize,
    pub entropy: Real,
}

/// Certificate for the shift of `pair`; `None` if it is not of finite type.
pub fn forbidden_words(
    aut: &SubshiftAutomaton,
    pair: (&EventuallyPeriodicWord, &EventuallyPeriodicWord),
    bits: u32,
) -> Result<Option<SftCertificate>> {
    let Some(forbidden) = aut.minimal_forbidden_words()? else { return Ok(None) };
    let memory = forbidden.iter().map(|w| w.len()).max().unwrap_or(1).saturating_sub(1);
    Ok(Some(SftCertificate { pair: (pair.0.clone(), pair.1.clone()), forbidden, memory, entropy: aut.entropy(bits) }))
}

pub fn certify(
    omega: &EventuallyPeriodicWord,
    nu: &EventuallyPeriodicWord,
    bits: u32,
) -> Result<Option<SftCertificate>> {
    let aut = build_automaton(omega, nu)?;
    forbidden_words(&aut, (omega, nu), bits)
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    FiniteType { certificate: SftCertificate },
    Sofic { lower: EventuallyPeriodicWord, upper: EventuallyPeriodicWord },
    Undetermined { prefix_len: usize },
}

impl Classification {
    pub fn is_finite_type(&self) -> bool {
        matches!(self, Classification::FiniteType { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Classification::FiniteType { .. } => "finite_type",
            Classification::Sofic { .. } => "sofic",
            Classification::Undetermined { .. } => "undetermined",
        }
    }

    pub fn certificate(&self) -> Option<&SftCertificate> {
        match self {
            Classification::FiniteType { certificate } => Some(certificate),
            _ => None,
        }
    }
}

fn finite_type(lower: &EventuallyPeriodicWord, upper: &EventuallyPeriodicWord, bits: u32) -> Result<Classification> {
    match certify(lower, upper, bits)? {
        Some(certificate) if certificate.entropy.is_positive() => Ok(Classification::FiniteType { certificate }),
        _ => Err(Error::Invariant(format!("kneading pair {lower}, {upper} does not define a shift of finite type"))),
    }
}

/// Classification at fixed parameters; see [`classify`] for escalation.
pub fn classify_shift(params: &Params, max_len: usize) -> Result<Classification> {
    let bits = params.prec();
    let lower = dynamics::detect_itinerary(params, Side::Minus, max_len)?;
    let upper = dynamics::detect_itinerary(params, Side::Plus, max_len)?;
    let decisive = match params.fiber() {
        Fiber::Greedy => &lower,
        Fiber::Lazy => &upper,
        Fiber::Interior => {
            return match (&lower, &upper) {
                (Itinerary::Periodic(l), Itinerary::Periodic(u)) => {
                    if !admissibility::is_admissible(l, u).periodically_admissible {
                        return Err(Error::precision(bits, format!("detected pair {l}, {u} is not admissible")));
                    }
                    finite_type(l, u, bits)
                }
                (Itinerary::NotFound { .. }, _) | (_, Itinerary::NotFound { .. }) => {
                    Ok(Classification::Undetermined { prefix_len: max_len })
                }
                (l, u) => {
                    Ok(Classification::Sofic { lower: l.word().unwrap().clone(), upper: u.word().unwrap().clone() })
                }
            };
        }
    };
    match (decisive, lower.word(), upper.word()) {
        (Itinerary::Periodic(_), Some(l), Some(u)) => finite_type(l, u, bits),
        (Itinerary::EventuallyPeriodic(_), Some(l), Some(u)) => {
            Ok(Classification::Sofic { lower: l.clone(), upper: u.clone() })
        }
        _ => Ok(Classification::Undetermined { prefix_len: max_len }),
    }
}

/// [`classify_shift`] with precision escalation.
pub fn classify<S: ParamSource + ?Sized>(source: &S, precision: Precision, max_len: usize) -> Result<Classification> {
    dynamics::with_precision(source, precision, |p| classify_shift(p, max_len))
}

impl SftCertificate {
    /// Entropy as a float, for reports.
    pub fn entropy_f64(&self) -> f64 {
        self.entropy.to_f64()
    }
}
