//! Order-ℓ hierarchies of subsets of ℤ: pieces and holes, certification
//! against explicit witnesses, synthetic generation, and the density and
//! small-piece bounds that order-ℓ families satisfy.

use num::rational::BigRational;
use num::{One, Zero};
use rand::Rng;

use crate::check::{all_ok, Flag, Verdict};
use crate::dynamics::Point;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::rational::{int, pow, rat};
use crate::tower::{LevelWalker, Tower};

/// Finite subset of ℤ stored as sorted, disjoint, non-adjacent runs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntSet {
    runs: Vec<Interval>,
}

impl IntSet {
    pub fn empty() -> Self {
        IntSet { runs: Vec::new() }
    }

    pub fn from_interval(i: Interval) -> Self {
        IntSet::from_runs(vec![i])
    }

    pub fn from_sorted(values: &[i64]) -> Self {
        let mut runs: Vec<Interval> = Vec::new();
        for &v in values {
            match runs.last_mut() {
                Some(r) if v <= r.hi + 1 => r.hi = r.hi.max(v),
                _ => runs.push(Interval::new(v, v)),
            }
        }
        IntSet { runs }
    }

    pub fn from_runs(mut runs: Vec<Interval>) -> Self {
        runs.retain(|r| !r.is_empty());
        runs.sort();
        let mut out: Vec<Interval> = Vec::with_capacity(runs.len());
        for r in runs {
            match out.last_mut() {
                Some(last) if r.lo <= last.hi + 1 => last.hi = last.hi.max(r.hi),
                _ => out.push(r),
            }
        }
        IntSet { runs: out }
    }

    /// `within` minus the given holes.
    pub fn complement_within(within: Interval, holes: &[Interval]) -> Self {
        let holes = IntSet::from_runs(holes.to_vec());
        let mut runs = Vec::new();
        let mut at = within.lo;
        for h in holes.runs_within(within) {
            if h.lo > at {
                runs.push(Interval::new(at, h.lo - 1));
            }
            at = h.hi + 1;
        }
        if at <= within.hi {
            runs.push(Interval::new(at, within.hi));
        }
        IntSet { runs }
    }

    pub fn runs(&self) -> &[Interval] {
        &self.runs
    }

    pub fn len(&self) -> u64 {
        self.runs.iter().map(|r| r.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn contains(&self, v: i64) -> bool {
        let i = self.runs.partition_point(|r| r.hi < v);
        i < self.runs.len() && self.runs[i].lo <= v
    }

    /// Runs clipped to `within`.
    pub fn runs_within(&self, within: Interval) -> impl Iterator<Item = Interval> + '_ {
        let start = self.runs.partition_point(|r| r.hi < within.lo);
        self.runs[start..]
            .iter()
            .take_while(move |r| r.lo <= within.hi)
            .map(move |r| r.intersect(&within))
    }

    pub fn restrict(&self, within: Interval) -> IntSet {
        IntSet { runs: self.runs_within(within).collect() }
    }

    pub fn count_within(&self, within: Interval) -> u64 {
        self.runs_within(within).map(|r| r.len()).sum()
    }

    pub fn intersect(&self, other: &IntSet) -> IntSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.runs.len() && j < other.runs.len() {
            let x = self.runs[i].intersect(&other.runs[j]);
            if !x.is_empty() {
                out.push(x);
            }
            if self.runs[i].hi < other.runs[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntSet { runs: out }
    }

    /// First element of `self ∩ within` missing from `other`.
    pub fn first_missing_within(&self, other: &IntSet, within: Interval) -> Option<i64> {
        for r in self.runs_within(within) {
            let mut at = r.lo;
            for o in other.runs_within(r) {
                if o.lo > at {
                    return Some(at);
                }
                at = o.hi + 1;
            }
            if at <= r.hi {
                return Some(at);
            }
        }
        None
    }

    pub fn to_vec(&self) -> Vec<i64> {
        self.runs.iter().flat_map(|r| r.iter()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    Piece,
    Hole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub kind: RunKind,
    pub interval: Interval,
}

/// Maximal runs of F ∩ I (pieces) and of I \ F (holes), in order.
pub fn pieces_and_holes(f: &IntSet, within: Interval) -> Vec<Run> {
    let mut out = Vec::new();
    if within.is_empty() {
        return out;
    }
    let mut at = within.lo;
    for p in f.runs_within(within) {
        if p.lo > at {
            out.push(Run { kind: RunKind::Hole, interval: Interval::new(at, p.lo - 1) });
        }
        out.push(Run { kind: RunKind::Piece, interval: p });
        at = p.hi + 1;
    }
    if at <= within.hi {
        out.push(Run { kind: RunKind::Hole, interval: Interval::new(at, within.hi) });
    }
    out
}

/// The sequences (c_ℓ), (s_ℓ) together with the η and d they are checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderParams {
    pub c: Vec<u128>,
    pub s: Vec<u128>,
    pub eta: BigRational,
    pub d: usize,
}

impl OrderParams {
    /// c_m = h_{n_{ℓ̄+m-1}}, s_m = h_{n_{ℓ̄+m-1} - k(ℓ̄+m-1)} + 1 for m = 1..=levels.
    pub fn from_tower(tower: &Tower, lbar: usize, levels: usize, d: usize) -> Result<Self> {
        let p = tower.params();
        let mut c = Vec::new();
        let mut s = Vec::new();
        for m in 1..=levels {
            let ell = lbar + m - 1;
            let n = p.n_of(ell).filter(|_| ell >= 1).ok_or(Error::LSeqExhausted { ell })?;
            let k = p.k_of(ell)?;
            c.push(tower.height(n)?);
            s.push(tower.height(n - k)? + 1);
        }
        Ok(OrderParams { c, s, eta: p.eta_value(), d })
    }

    pub fn k1(&self) -> BigRational {
        let one = BigRational::one();
        (&one + int(2) / &self.eta) / (&one - &self.eta) * int(self.d as u64)
    }

    /// s_m/c_m < η²/(d(η+1)), m one-based.
    pub fn cs_cond1(&self, m: usize) -> bool {
        let eta = &self.eta;
        rat(self.s[m - 1], self.c[m - 1]) < eta * eta / (int(self.d as u64) * (eta + BigRational::one()))
    }

    /// c_m/c_{m+1} < η/K1, m one-based.
    pub fn cs_cond2(&self, m: usize) -> bool {
        rat(self.c[m - 1], self.c[m]) < &self.eta / self.k1()
    }

    /// Both conditions for every index used by an order-`ell` family.
    pub fn conditions(&self, ell: usize) -> Vec<Flag> {
        let mut out = Vec::new();
        for m in 1..=ell.min(self.c.len()) {
            out.push(Flag::new(format!("cs_cond1[{m}]"), self.cs_cond1(m)));
        }
        for m in 1..ell.min(self.c.len()) {
            out.push(Flag::new(format!("cs_cond2[{m}]"), self.cs_cond2(m)));
        }
        out
    }

    /// Small-piece bound K1·(c/c_1 + Σ_{m=1}^{ℓ-1} (c_m/c_{m+1})/(1-η)^{2m+2}).
    pub fn small_piece_bound(&self, ell: usize, c: u128) -> BigRational {
        let q = BigRational::one() - &self.eta;
        let mut sum = rat(c, self.c[0]);
        for m in 1..ell {
            sum += rat(self.c[m - 1], self.c[m]) / pow(&q, 2 * m as u64 + 2);
        }
        self.k1() * sum
    }

    pub fn density_bound(&self, ell: usize) -> BigRational {
        pow(&(BigRational::one() - &self.eta), 2 * ell as u64)
    }
}

/// Witness F' for recursion level `level` (2..=ℓ).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderWitness {
    pub level: usize,
    pub set: IntSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderFailureKind {
    HoleTooLarge,
    PieceTooSmall,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderFailure {
    pub level: usize,
    pub kind: OrderFailureKind,
    /// The offending hole or piece.
    pub run: Interval,
    pub limit: u128,
    /// Interval inside which the level was being checked.
    pub context: Interval,
}

fn check_level_runs(set: &IntSet, within: Interval, level: usize, c: u128, s: u128) -> Option<OrderFailure> {
    let runs = pieces_and_holes(set, within);
    for (i, r) in runs.iter().enumerate() {
        match r.kind {
            RunKind::Hole if r.interval.len() as u128 > s => {
                return Some(OrderFailure {
                    level,
                    kind: OrderFailureKind::HoleTooLarge,
                    run: r.interval,
                    limit: s,
                    context: within,
                });
            }
            RunKind::Piece if i > 0 && i + 1 < runs.len() && (r.interval.len() as u128) < c => {
                return Some(OrderFailure {
                    level,
                    kind: OrderFailureKind::PieceTooSmall,
                    run: r.interval,
                    limit: c,
                    context: within,
                });
            }
            _ => {}
        }
    }
    None
}

fn check_recursive(
    f: &IntSet,
    within: Interval,
    level: usize,
    params: &OrderParams,
    witnesses: &[OrderWitness],
) -> Option<OrderFailure> {
    let (c, s) = (params.c[level - 1], params.s[level - 1]);
    if level == 1 {
        return check_level_runs(f, within, 1, c, s);
    }
    let w = &witnesses[level - 2].set;
    if let Some(fail) = check_level_runs(w, within, level, c, s) {
        return Some(fail);
    }
    w.runs_within(within).find_map(|piece| check_recursive(f, piece, level - 1, params, witnesses))
}

/// Checks that F is of order ℓ inside I with witnesses for levels 2..=ℓ.
/// Returns the first failing clause, or `None` when the definition holds.
pub fn check_order(
    f: &IntSet,
    within: Interval,
    ell: usize,
    params: &OrderParams,
    witnesses: &[OrderWitness],
) -> Result<Option<OrderFailure>> {
    if ell == 0 || params.c.len() < ell || params.s.len() < ell {
        return Err(Error::Precondition(format!("order {ell} needs c_1..c_{ell} and s_1..s_{ell}")));
    }
    if witnesses.len() != ell - 1 {
        return Err(Error::MalformedWitness {
            level: witnesses.len() + 2,
            reason: format!("expected {} witnesses", ell - 1),
        });
    }
    for (i, w) in witnesses.iter().enumerate() {
        if w.level != i + 2 {
            return Err(Error::MalformedWitness { level: w.level, reason: "witness levels must be 2..=l".into() });
        }
        if let Some(v) = f.first_missing_within(&w.set, within) {
            return Err(Error::MalformedWitness { level: w.level, reason: format!("{v} is in F but not in F'") });
        }
    }
    Ok(check_recursive(f, within, ell, params, witnesses))
}

/// Set with the witnesses certifying its order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedSet {
    pub set: IntSet,
    pub witnesses: Vec<OrderWitness>,
}

/// Visits of `p`'s orbit to C_{n_ℓ̄} on I and the intermediate-tower witnesses.
pub fn witnesses_from_orbit(tower: &Tower, p: Point, lbar: usize, ell: usize, within: Interval) -> Result<OrderedSet> {
    let params = tower.params();
    let stage = |m: usize| {
        let l = lbar + m - 1;
        params.n_of(l).filter(|_| l >= 1).ok_or(Error::LSeqExhausted { ell: l })
    };
    let n_top = {
        let l = lbar + ell;
        params.n_of(l).ok_or(Error::LSeqExhausted { ell: l })?
    };
    if n_top > p.trunc {
        return Err(Error::StageOutOfRange { n: n_top, trunc: p.trunc });
    }
    let start = p.idx as i128 + within.lo as i128;
    let h = tower.height(p.trunc)? as i128;
    if start < 0 || start + within.len() as i128 > h {
        return Err(Error::OutOfTruncation { overshoot: 0, lo: -(p.idx as i128), hi: h - 1 - p.idx as i128 });
    }
    let mut walker = LevelWalker::new(tower, p.trunc, start as u128)?;
    match walker.level(n_top) {
        Some(a) if a + (within.len() as u128) <= tower.h(n_top) => {}
        _ => return Err(Error::Precondition(format!("orbit does not climb into tower {n_top} along {within}"))),
    }
    let stages: Vec<usize> = (1..=ell).map(stage).collect::<Result<_>>()?;
    let mut members: Vec<Vec<Interval>> = vec![Vec::new(); ell];
    for j in within.iter() {
        for (m, &n) in stages.iter().enumerate() {
            if walker.level(n).is_some() {
                match members[m].last_mut() {
                    Some(r) if r.hi + 1 == j => r.hi = j,
                    _ => members[m].push(Interval::new(j, j)),
                }
            }
        }
        if j < within.hi {
            walker.advance();
        }
    }
    let mut sets = members.into_iter().map(|runs| IntSet { runs });
    let set = sets.next().unwrap();
    let witnesses = sets.enumerate().map(|(i, s)| OrderWitness { level: i + 2, set: s }).collect();
    Ok(OrderedSet { set, witnesses })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub visits: u64,
    pub len: u64,
    pub density: BigRational,
    pub density_bound: BigRational,
    pub density_ok: bool,
    pub proportion: BigRational,
    pub proportion_bound: BigRational,
    pub proportion_ok: bool,
    pub hypotheses: Vec<Flag>,
    pub verdict: Verdict,
}

/// Small-piece statistics of F ∩ I: (|F∩I|, points in pieces of size ≤ c).
pub fn small_piece_mass(f: &IntSet, within: Interval, c: u128) -> (u64, u64) {
    let mut total = 0;
    let mut small = 0;
    for r in f.runs_within(within) {
        total += r.len();
        if r.len() as u128 <= c {
            small += r.len();
        }
    }
    (total, small)
}

/// Density of F = ∩F_i in I and the proportion of F∩I lying in pieces of size ≤ c,
/// against the bounds that hold for order-ℓ families.
pub fn check_lemma_bounds(
    families: &[OrderedSet],
    within: Interval,
    ell: usize,
    params: &OrderParams,
    c: u128,
) -> Result<LemmaReport> {
    if families.is_empty() {
        return Err(Error::Precondition("no sets".into()));
    }
    if within.is_empty() {
        return Err(Error::Precondition("empty interval".into()));
    }
    let mut hypotheses = vec![
        Flag::new("interval_length", int(within.len()) >= &params.eta * int(params.c[ell - 1])),
        Flag::new("c_positive", c >= 1),
    ];
    for (i, fam) in families.iter().enumerate() {
        let certified = matches!(check_order(&fam.set, within, ell, params, &fam.witnesses), Ok(None));
        hypotheses.push(Flag::new(format!("order_certified[{i}]"), certified));
    }
    hypotheses.extend(params.conditions(ell));

    let mut f = families[0].set.restrict(within);
    for fam in &families[1..] {
        f = f.intersect(&fam.set);
    }
    let (visits, small) = small_piece_mass(&f, within, c);
    let len = within.len();
    let density = rat(visits, len);
    let proportion = if visits == 0 { BigRational::zero() } else { rat(small, visits) };
    let density_bound = params.density_bound(ell);
    let proportion_bound = params.small_piece_bound(ell, c);
    let density_ok = density >= density_bound;
    let proportion_ok = proportion <= proportion_bound;
    let verdict = Verdict::from_parts(all_ok(&hypotheses), density_ok && proportion_ok);
    Ok(LemmaReport {
        visits,
        len,
        density,
        density_bound,
        density_ok,
        proportion,
        proportion_bound,
        proportion_ok,
        hypotheses,
        verdict,
    })
}

/// Shape of generated instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenStyle {
    /// Chance that a slot between two pieces becomes a hole.
    pub hole_prob: f64,
    /// Pieces have length in [c_m, spread·c_m].
    pub spread: u128,
    /// Every hole has size s_m and every inner piece size c_m.
    pub adversarial: bool,
}

impl Default for GenStyle {
    fn default() -> Self {
        GenStyle { hole_prob: 0.5, spread: 4, adversarial: false }
    }
}

fn gen_holes<R: Rng + ?Sized>(
    level: usize,
    within: Interval,
    params: &OrderParams,
    style: &GenStyle,
    rng: &mut R,
    holes: &mut [Vec<Interval>],
) {
    if within.is_empty() || level == 0 {
        return;
    }
    let (c, s) = (params.c[level - 1], params.s[level - 1]);
    let spread = style.spread.max(1);
    let mut at = within.lo as i128;
    let end = within.hi as i128;
    let mut piece_start = at;
    // The first piece touches the boundary and may be short.
    let first = if style.adversarial { c } else { rng.gen_range(1..=c * spread) };
    at += first as i128;
    let mut level_holes = Vec::new();
    while at <= end {
        if style.adversarial || rng.gen_bool(style.hole_prob) {
            let size = if style.adversarial { s } else { rng.gen_range(1..=s) };
            let hole = Interval::new(at as i64, (at + size as i128 - 1).min(end) as i64);
            level_holes.push(hole);
            let piece = Interval::new(piece_start as i64, at as i64 - 1);
            gen_holes(level - 1, piece, params, style, rng, holes);
            at += size as i128;
            piece_start = at;
        }
        let len = if style.adversarial { c } else { rng.gen_range(c..=c * spread) };
        at += len as i128;
    }
    if piece_start <= end {
        gen_holes(level - 1, Interval::new(piece_start as i64, end as i64), params, style, rng, holes);
    }
    holes[level - 1].extend(level_holes);
}

/// Synthetic order-ℓ set inside `within` with its witnesses.
pub fn random_order_instance<R: Rng + ?Sized>(
    ell: usize,
    params: &OrderParams,
    within: Interval,
    style: &GenStyle,
    rng: &mut R,
) -> OrderedSet {
    let mut holes: Vec<Vec<Interval>> = vec![Vec::new(); ell];
    gen_holes(ell, within, params, style, rng, &mut holes);
    // W_m = I minus the holes of levels m..=ℓ.
    let mut acc: Vec<Interval> = Vec::new();
    let mut sets = vec![IntSet::empty(); ell];
    for m in (1..=ell).rev() {
        acc.extend_from_slice(&holes[m - 1]);
        sets[m - 1] = IntSet::complement_within(within, &acc);
    }
    let mut it = sets.into_iter();
    let set = it.next().unwrap();
    let witnesses = it.enumerate().map(|(i, s)| OrderWitness { level: i + 2, set: s }).collect();
    OrderedSet { set, witnesses }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params1() -> OrderParams {
        OrderParams { c: vec![5, 40, 400], s: vec![2, 6, 30], eta: rat(1, 4), d: 1 }
    }

    #[test]
    fn pieces_and_holes_examples() {
        let i = Interval::new(0, 6);
        let runs = pieces_and_holes(&IntSet::from_interval(i), i);
        assert_eq!(runs, vec![Run { kind: RunKind::Piece, interval: i }]);
        let runs = pieces_and_holes(&IntSet::empty(), i);
        assert_eq!(runs, vec![Run { kind: RunKind::Hole, interval: i }]);
        let f = IntSet::from_sorted(&[0, 1, 5]);
        let got: Vec<_> = pieces_and_holes(&f, i).iter().map(|r| (r.kind, r.interval)).collect();
        assert_eq!(
            got,
            vec![
                (RunKind::Piece, Interval::new(0, 1)),
                (RunKind::Hole, Interval::new(2, 4)),
                (RunKind::Piece, Interval::new(5, 5)),
                (RunKind::Hole, Interval::new(6, 6)),
            ]
        );
    }

    #[test]
    fn order_one_clauses() {
        let p = params1();
        let i = Interval::new(0, 29);
        // pieces 0..=4, 7..=12, 14..=29 with holes of size 2 and 1
        let f = IntSet::from_runs(vec![Interval::new(0, 4), Interval::new(7, 12), Interval::new(14, 29)]);
        assert_eq!(check_order(&f, i, 1, &p, &[]), Ok(None));
        let wide = IntSet::from_runs(vec![Interval::new(0, 4), Interval::new(8, 12), Interval::new(14, 29)]);
        let fail = check_order(&wide, i, 1, &p, &[]).unwrap().unwrap();
        assert_eq!(fail.kind, OrderFailureKind::HoleTooLarge);
        assert_eq!(fail.run, Interval::new(5, 7));
        let short = IntSet::from_runs(vec![Interval::new(0, 4), Interval::new(7, 9), Interval::new(11, 29)]);
        let fail = check_order(&short, i, 1, &p, &[]).unwrap().unwrap();
        assert_eq!((fail.kind, fail.run), (OrderFailureKind::PieceTooSmall, Interval::new(7, 9)));
    }

    #[test]
    fn witness_must_contain_f() {
        let p = params1();
        let i = Interval::new(0, 99);
        let f = IntSet::from_interval(i);
        let w = OrderWitness { level: 2, set: IntSet::from_interval(Interval::new(0, 50)) };
        assert!(matches!(check_order(&f, i, 2, &p, &[w]), Err(Error::MalformedWitness { level: 2, .. })));
    }

    #[test]
    fn generated_instances_certify() {
        let p = params1();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for ell in 1..=3 {
            for _ in 0..50 {
                let i = Interval::with_len(rng.gen_range(-500..500), rng.gen_range(1..5000));
                let inst = random_order_instance(ell, &p, i, &GenStyle::default(), &mut rng);
                assert_eq!(check_order(&inst.set, i, ell, &p, &inst.witnesses), Ok(None));
            }
        }
    }

    #[test]
    fn zero_holes_gives_full_set() {
        let p = params1();
        let i = Interval::new(0, 999);
        let style = GenStyle { hole_prob: 0.0, ..Default::default() };
        let inst = random_order_instance(2, &p, i, &style, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(inst.set, IntSet::from_interval(i));
    }

    #[test]
    fn same_seed_same_instance() {
        let p = params1();
        let i = Interval::new(0, 999);
        let a = random_order_instance(3, &p, i, &GenStyle::default(), &mut ChaCha8Rng::seed_from_u64(8));
        let b = random_order_instance(3, &p, i, &GenStyle::default(), &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(a, b);
    }

    #[test]
    fn full_sets_have_density_one() {
        let p = params1();
        let i = Interval::new(0, 99);
        let fam = OrderedSet { set: IntSet::from_interval(i), witnesses: vec![] };
        let r = check_lemma_bounds(&[fam.clone(), fam], i, 1, &p, 10).unwrap();
        assert_eq!(r.density, rat(1, 1));
        assert_eq!(r.proportion, rat(0, 1));
    }

    #[test]
    fn intset_ops() {
        let a = IntSet::from_sorted(&[1, 2, 3, 7, 8, 10]);
        assert_eq!(a.runs(), &[Interval::new(1, 3), Interval::new(7, 8), Interval::new(10, 10)]);
        assert_eq!(a.len(), 6);
        assert!(a.contains(8) && !a.contains(9));
        let b = IntSet::from_runs(vec![Interval::new(2, 8)]);
        assert_eq!(a.intersect(&b).to_vec(), vec![2, 3, 7, 8]);
        assert_eq!(a.first_missing_within(&b, Interval::new(0, 20)), Some(1));
        assert_eq!(a.first_missing_within(&b, Interval::new(2, 9)), None);
        assert_eq!(IntSet::complement_within(Interval::new(0, 9), &[Interval::new(3, 4)]).to_vec(), vec![0, 1, 2, 5, 6, 7, 8, 9]);
    }
}
