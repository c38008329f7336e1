//! n-crossings of product orbits, Γ counts on aligned n-intervals, the
//! true/fake classification of shifted windows, and empirical checks of the
//! crossing-level bounds.

use std::ops::RangeInclusive;

use num::rational::BigRational;
use num::Zero;

use crate::check::{all_ok, Flag, Verdict};
use crate::dynamics::{Point, ProductPoint};
use crate::error::{Error, Result};
use crate::hierarchy::OrderParams;
use crate::interval::Interval;
use crate::params::DerivedConstants;
use crate::rational::{biguint_pow, int, pow, rat};
use crate::tower::{SpacerPos, Tower};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Crossing {
    pub n: usize,
    pub interval: Interval,
    /// t_n per coordinate; `None` at the truncation stage.
    pub tvec: Vec<Option<u8>>,
    pub substantial: bool,
    pub synchronized: bool,
    /// Cut by the scanning window, so maximality is not established.
    pub partial: bool,
}

impl Crossing {
    pub fn len(&self) -> u64 {
        self.interval.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interval.is_empty()
    }
}

/// I_n = {-⌊h_n/2⌋, …, -⌊h_n/2⌋ + h_n - 1}.
pub fn centered_interval(h: u128) -> Interval {
    let half = (h / 2) as i64;
    Interval::with_len(-half, h as u64)
}

/// Aligned intervals {k·h, …, (k+1)·h - 1} meeting `range`.
pub fn n_intervals(h: u128, range: Interval) -> Vec<Interval> {
    if range.is_empty() || h == 0 {
        return Vec::new();
    }
    let h = h as i64;
    let (a, b) = (range.lo.div_euclid(h), range.hi.div_euclid(h));
    (a..=b).map(|k| Interval::with_len(k * h, h as u64)).collect()
}

pub fn visit_set(tower: &Tower, x: &ProductPoint, n: usize, window: Interval) -> Result<crate::hierarchy::IntSet> {
    let mut runs: Vec<Interval> = Vec::new();
    scan_membership(tower, x, n, window, |j, inside| {
        if inside {
            match runs.last_mut() {
                Some(r) if r.hi + 1 == j => r.hi = j,
                _ => runs.push(Interval::new(j, j)),
            }
        }
    })?;
    Ok(crate::hierarchy::IntSet::from_runs(runs))
}

fn scan_membership(
    tower: &Tower,
    x: &ProductPoint,
    n: usize,
    window: Interval,
    mut f: impl FnMut(i64, bool),
) -> Result<()> {
    tower.check_window(x, window)?;
    if window.is_empty() {
        return Ok(());
    }
    if n > x.trunc {
        return Err(Error::StageOutOfRange { n, trunc: x.trunc });
    }
    let mut w = tower.product_walker(x, window.lo)?;
    loop {
        let j = w.shift();
        f(j, w.all_in(n));
        if j == window.hi {
            return Ok(());
        }
        w.advance();
    }
}

/// Γ = #{j ∈ interval : (T^{×d})^j x ∈ C_n^d}.
pub fn gamma_count(tower: &Tower, x: &ProductPoint, n: usize, interval: Interval) -> Result<u64> {
    let mut count = 0;
    scan_membership(tower, x, n, interval, |_, inside| count += inside as u64)?;
    Ok(count)
}

/// Prefix sums of the C_n^d indicator over a window.
#[derive(Debug, Clone)]
pub struct GammaTable {
    pub n: usize,
    pub window: Interval,
    prefix: Vec<u64>,
}

impl GammaTable {
    pub fn new(tower: &Tower, x: &ProductPoint, n: usize, window: Interval) -> Result<Self> {
        let mut prefix = Vec::with_capacity(window.len() as usize + 1);
        prefix.push(0);
        let mut acc = 0;
        scan_membership(tower, x, n, window, |_, inside| {
            acc += inside as u64;
            prefix.push(acc);
        })?;
        Ok(GammaTable { n, window, prefix })
    }

    /// Count over `i ∩ window`.
    pub fn count(&self, i: Interval) -> u64 {
        let c = i.intersect(&self.window);
        if c.is_empty() {
            return 0;
        }
        let a = (c.lo - self.window.lo) as usize;
        let b = (c.hi - self.window.lo) as usize + 1;
        self.prefix[b] - self.prefix[a]
    }
}

/// Maximal runs of C_n^d membership with constant t_n vectors inside `window`.
pub fn crossings(tower: &Tower, x: &ProductPoint, n: usize, window: Interval) -> Result<Vec<Crossing>> {
    tower.check_window(x, window)?;
    if window.is_empty() {
        return Ok(Vec::new());
    }
    if n > x.trunc {
        return Err(Error::StageOutOfRange { n, trunc: x.trunc });
    }
    let h = tower.h(n);
    let eta = tower.params().eta_value();
    let i_n = centered_interval(h);
    let substantial = |iv: Interval| int(iv.intersect(&i_n).len()) >= &eta * int(h);

    let mut out = Vec::new();
    let mut w = tower.product_walker(x, window.lo)?;
    let mut cur: Option<(i64, Vec<Option<u8>>, bool)> = None;
    let finish = |start: i64, end: i64, tvec: Vec<Option<u8>>, partial: bool, out: &mut Vec<Crossing>| {
        let interval = Interval::new(start, end);
        let synchronized = tvec.windows(2).all(|p| p[0] == p[1]);
        out.push(Crossing { n, interval, tvec, substantial: substantial(interval), synchronized, partial });
    };
    loop {
        let j = w.shift();
        let inside = w.all_in(n);
        if let Some((start, tvec, partial)) = cur.take() {
            let same = inside && w.coords().iter().zip(&tvec).all(|(c, t)| c.subcolumn(n) == *t);
            if same {
                cur = Some((start, tvec, partial));
            } else {
                finish(start, j - 1, tvec, partial, &mut out);
            }
        }
        if inside && cur.is_none() {
            let tvec = w.coords().iter().map(|c| c.subcolumn(n)).collect();
            // At the truncation stage t_N is unknown, so edge levels certify nothing.
            let at_bottom = n < x.trunc && w.coords().iter().any(|c| c.level(n) == Some(0));
            cur = Some((j, tvec, j == window.lo && !at_bottom));
        }
        if j == window.hi {
            if let Some((start, tvec, partial)) = cur.take() {
                let at_top = n < x.trunc && w.coords().iter().any(|c| c.level(n) == Some(h - 1));
                finish(start, j, tvec, partial || !at_top, &mut out);
            }
            return Ok(out);
        }
        w.advance();
    }
}

/// True when `window` lies inside a single n-crossing.
pub fn inside_one_crossing(tower: &Tower, x: &ProductPoint, n: usize, window: Interval) -> Result<bool> {
    let cs = crossings(tower, x, n, window)?;
    Ok(cs.len() == 1 && cs[0].interval == window)
}

/// Position of a coordinate after a shift, relative to tower n' and its fake copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordClass {
    InTower { level: u128, t: Option<u8> },
    Fake { block: SpacerPos, offset: u128 },
    Outside,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShiftClass {
    True,
    /// Coordinates sitting in the fake tower n'.
    Fake(Vec<usize>),
    /// No coordinate is fake but these are outside C_{n'}.
    Unclassified(Vec<usize>),
}

/// Class of T^{r·h_{n'}} p, n' = n_ℓ - k(ℓ).
pub fn classify_coord_at(tower: &Tower, p: Point, ell: usize, r: i64) -> Result<CoordClass> {
    let np = tower.fake_stage(ell)?;
    let q = tower.iterate(p, r as i128 * tower.h(np) as i128)?;
    if let Some(level) = tower.level(q, np) {
        return Ok(CoordClass::InTower { level, t: tower.subcolumn(q, np) });
    }
    Ok(match tower.fake_position(q, ell)? {
        Some((block, offset)) => CoordClass::Fake { block, offset },
        None => CoordClass::Outside,
    })
}

pub fn classify_crossing_at(tower: &Tower, x: &ProductPoint, ell: usize, r: i64) -> Result<ShiftClass> {
    let mut fake = Vec::new();
    let mut outside = Vec::new();
    for i in 0..x.d() {
        match classify_coord_at(tower, x.coord(i), ell, r)? {
            CoordClass::InTower { .. } => {}
            CoordClass::Fake { .. } => fake.push(i),
            CoordClass::Outside => outside.push(i),
        }
    }
    Ok(if !fake.is_empty() {
        ShiftClass::Fake(fake)
    } else if outside.is_empty() {
        ShiftClass::True
    } else {
        ShiftClass::Unclassified(outside)
    })
}

/// Candidate range {n_ℓ - k(ℓ) + p1 + 2p2, …, +d} for n_good(ℓ).
pub fn n_good_candidates(tower: &Tower, d: usize, ell: usize) -> Result<RangeInclusive<usize>> {
    let params = tower.params();
    let consts = DerivedConstants::new(d, params.eta_value())?;
    let lo = tower.fake_stage(ell)? + consts.p1 as usize + 2 * consts.p2 as usize;
    Ok(lo..=lo + d)
}

/// Smallest candidate n with {h_n, …, 2h_n} inside one n_ℓ-crossing.
pub fn find_n_good(tower: &Tower, x: &ProductPoint, ell: usize) -> Result<usize> {
    let range = n_good_candidates(tower, x.d(), ell)?;
    let n_ell = tower.params().n_of(ell).ok_or(Error::LSeqExhausted { ell })?;
    if *range.end() >= n_ell {
        return Err(Error::Precondition(format!(
            "candidates {}..={} reach n_{ell} = {n_ell}",
            range.start(),
            range.end()
        )));
    }
    find_n_good_in(tower, x, ell, range)
}

/// The n_good search over an explicit candidate range.
pub fn find_n_good_in(tower: &Tower, x: &ProductPoint, ell: usize, candidates: RangeInclusive<usize>) -> Result<usize> {
    let n_ell = tower.params().n_of(ell).filter(|_| ell >= 1).ok_or(Error::LSeqExhausted { ell })?;
    for n in candidates {
        let h = tower.height(n)? as i64;
        if inside_one_crossing(tower, x, n_ell, Interval::new(h, 2 * h))? {
            return Ok(n);
        }
    }
    Err(Error::NotFound)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theta1Pair {
    pub first: Interval,
    pub second: Interval,
    pub gamma_first: u64,
    pub gamma_second: u64,
    /// Second interval only partly inside the crossing; Γ taken on the overlap.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theta1Report {
    pub n: usize,
    pub ell: usize,
    pub lbar: usize,
    pub theta1: BigRational,
    pub pairs: usize,
    pub boundary_pairs: usize,
    pub min_ratio: Option<BigRational>,
    pub max_ratio: Option<BigRational>,
    pub failures: Vec<Theta1Pair>,
    pub hypotheses: Vec<Flag>,
    /// Reported but not required for the bound.
    pub notes: Vec<Flag>,
    pub verdict: Verdict,
}

/// choice_of_lb: K1·c/h_{n_ℓ̄} + K2/3^{ℓ̄} < ε, with c = c_min.
pub fn choice_of_lb(tower: &Tower, consts: &DerivedConstants, lbar: usize) -> Result<bool> {
    let n = tower.params().n_of(lbar).ok_or(Error::LSeqExhausted { ell: lbar })?;
    let h = tower.height(n)?;
    let lhs = &consts.k1 * rat(consts.c_min, h) + &consts.k2 / int(biguint_pow(3, lbar as u64));
    Ok(lhs < consts.epsilon)
}

/// newcondlb: (K1 + K2)/3^{ℓ̄} < η.
pub fn newcondlb(consts: &DerivedConstants, lbar: usize) -> bool {
    (&consts.k1 + &consts.k2) / int(biguint_pow(3, lbar as u64)) < consts.eta
}

fn stage(tower: &Tower, ell: usize) -> Result<usize> {
    let n = tower.params().n_of(ell).ok_or(Error::LSeqExhausted { ell })?;
    if n > tower.trunc() {
        return Err(Error::StageOutOfRange { n, trunc: tower.trunc() });
    }
    Ok(n)
}

/// Ratios Γ(I2)/Γ(I1), Γ at C^d_{n_ℓ̄}, over consecutive aligned n-intervals
/// inside one n_ℓ-crossing of the window, plus the one-sided boundary pairs.
pub fn verify_theta1(
    tower: &Tower,
    x: &ProductPoint,
    n: usize,
    ell: usize,
    lbar: usize,
    window: Interval,
) -> Result<Theta1Report> {
    let params = tower.params();
    let consts = DerivedConstants::new(x.d(), params.eta_value())?;
    let n_ell = stage(tower, ell)?;
    let n_lbar = stage(tower, lbar)?;
    let mut hypotheses = vec![Flag::new("l_above_lbar_plus_one", ell > lbar + 1)];
    let range_ok = match params.n_of(ell.saturating_sub(1)) {
        Some(n_prev) if ell >= 2 => n_prev + consts.p1 as usize <= n + params.k_of(ell - 1)? && n < n_ell,
        _ => false,
    };
    hypotheses.push(Flag::new("n_range", range_ok));
    let notes = vec![
        Flag::new("choice_of_lb", choice_of_lb(tower, &consts, lbar)?),
        Flag::new("newcondlb", newcondlb(&consts, lbar)),
    ];

    let h = tower.height(n)?;
    let gamma = GammaTable::new(tower, x, n_lbar, window)?;
    let theta1 = consts.theta1.clone();
    let inside_bound = |g1: u64, g2: u64| {
        let (a, b) = (int(g1), int(g2));
        &theta1 * &a < b && &theta1 * &b < a
    };

    let mut pairs = 0;
    let mut boundary_pairs = 0;
    let mut failures = Vec::new();
    let mut min_ratio: Option<BigRational> = None;
    let mut max_ratio: Option<BigRational> = None;
    for c in crossings(tower, x, n_ell, window)? {
        let inner: Vec<Interval> =
            n_intervals(h, c.interval).into_iter().filter(|i| c.interval.contains_interval(i)).collect();
        for p in inner.windows(2) {
            let (g1, g2) = (gamma.count(p[0]), gamma.count(p[1]));
            pairs += 1;
            if g1 > 0 {
                let r = rat(g2, g1);
                if min_ratio.as_ref().is_none_or(|m| &r < m) {
                    min_ratio = Some(r.clone());
                }
                if max_ratio.as_ref().is_none_or(|m| &r > m) {
                    max_ratio = Some(r);
                }
            }
            if !inside_bound(g1, g2) {
                failures.push(Theta1Pair { first: p[0], second: p[1], gamma_first: g1, gamma_second: g2, boundary: false });
            }
        }
        // One-sided pairs at crossing ends whose maximality is known.
        let ends = [
            (inner.first(), -(h as i64), c.interval.lo > window.lo || !c.partial),
            (inner.last(), h as i64, c.interval.hi < window.hi || !c.partial),
        ];
        for (first, step, known) in ends {
            let Some(&first) = first else { continue };
            let second = first.shift(step);
            let overlap = second.intersect(&c.interval);
            if !known || overlap.is_empty() || c.interval.contains_interval(&second) {
                continue;
            }
            boundary_pairs += 1;
            let (g1, g2) = (gamma.count(first), gamma.count(overlap));
            if !(&theta1 * int(g2) < int(g1)) {
                failures.push(Theta1Pair { first, second: overlap, gamma_first: g1, gamma_second: g2, boundary: true });
            }
        }
    }
    if pairs + boundary_pairs == 0 {
        return Err(Error::NotFound);
    }
    let verdict = Verdict::from_parts(all_ok(&hypotheses), failures.is_empty());
    Ok(Theta1Report {
        n,
        ell,
        lbar,
        theta1,
        pairs,
        boundary_pairs,
        min_ratio,
        max_ratio,
        failures,
        hypotheses,
        notes,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theta2Check {
    pub gamma_sub: u64,
    pub gamma_whole: u64,
    pub holds: bool,
    pub hypotheses: Vec<Flag>,
    pub verdict: Verdict,
}

/// Γ(J) ≥ θ2(M)·Γ(I) for J ⊂ I, |J| ≥ η·h_n, |I| ≤ M·h_n, I inside an n_ℓ-crossing.
#[allow(clippy::too_many_arguments)]
pub fn verify_theta2(
    tower: &Tower,
    x: &ProductPoint,
    n: usize,
    ell: usize,
    lbar: usize,
    whole: Interval,
    sub: Interval,
    m: u64,
) -> Result<Theta2Check> {
    let params = tower.params();
    let consts = DerivedConstants::new(x.d(), params.eta_value())?;
    let n_ell = stage(tower, ell)?;
    let n_lbar = stage(tower, lbar)?;
    let h = tower.height(n)?;
    let range_ok = match params.n_of(ell.saturating_sub(1)) {
        Some(n_prev) if ell >= 2 => {
            n_prev + (consts.p1 + consts.p2) as usize <= n + params.k_of(ell - 1)? && n < n_ell
        }
        _ => false,
    };
    let hypotheses = vec![
        Flag::new("l_above_lbar_plus_one", ell > lbar + 1),
        Flag::new("n_range", range_ok),
        Flag::new("sub_inside", whole.contains_interval(&sub)),
        Flag::new("sub_length", int(sub.len()) >= &consts.eta * int(h)),
        Flag::new("whole_length", (whole.len() as u128) <= m as u128 * h),
        Flag::new("in_crossing", inside_one_crossing(tower, x, n_ell, whole)?),
    ];
    let gamma = GammaTable::new(tower, x, n_lbar, whole)?;
    let (gs, gw) = (gamma.count(sub), gamma.count(whole));
    let holds = gw == 0 || consts.theta2(m).at_most(&rat(gs, gw));
    let verdict = Verdict::from_parts(all_ok(&hypotheses), holds);
    Ok(Theta2Check { gamma_sub: gs, gamma_whole: gw, holds, hypotheses, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingStats {
    pub len: u64,
    pub visits: u64,
    pub density: BigRational,
    pub density_bound: BigRational,
    pub density_ok: bool,
    pub small_visits: u64,
    pub proportion: BigRational,
    pub proportion_bound: BigRational,
    pub proportion_ok: bool,
    pub hypotheses: Vec<Flag>,
    pub verdict: Verdict,
}

/// Density of C^d_{n_ℓ̄} visits in I and the share of those visits lying in
/// n_ℓ̄-crossings of size ≤ c, against (1-η)^{2ℓ} and K1·c/h_{n_ℓ̄} + K2/3^{ℓ̄}.
/// Crossings meeting I are measured at full size; the scan extends up to
/// h_{n_ℓ̄} past each end of I, clipped to the truncation.
pub fn verify_crossing_stats(
    tower: &Tower,
    x: &ProductPoint,
    lbar: usize,
    ell: usize,
    c: u128,
    within: Interval,
) -> Result<CrossingStats> {
    if within.is_empty() {
        return Err(Error::Precondition("empty interval".into()));
    }
    let params = tower.params();
    let consts = DerivedConstants::new(x.d(), params.eta_value())?;
    let n_lbar = stage(tower, lbar)?;
    let n_top = stage(tower, lbar + ell)?;
    let n_prev = stage(tower, lbar + ell - 1)?;
    let h_lbar = tower.h(n_lbar);
    let order = OrderParams::from_tower(tower, lbar, ell, x.d())?;

    let mut hypotheses = vec![
        Flag::new("in_crossing", inside_one_crossing(tower, x, n_top, within)?),
        Flag::new("length", int(within.len()) >= &consts.eta * int(tower.h(n_prev))),
        Flag::new("c_range", (1..=h_lbar).contains(&c)),
    ];
    hypotheses.extend(order.conditions(ell));

    let valid = tower.valid_shifts(x)?;
    let pad = h_lbar as i64;
    let scan = Interval::new(within.lo - pad, within.hi + pad).intersect(&valid);
    let mut visits = 0;
    let mut small = 0;
    for cr in crossings(tower, x, n_lbar, scan)? {
        let inside = cr.interval.intersect(&within).len();
        visits += inside;
        if (cr.len() as u128) <= c {
            small += inside;
        }
    }
    let len = within.len();
    let density = rat(visits, len);
    let density_bound = pow(&(int(1) - &consts.eta), 2 * ell as u64);
    let proportion = if visits == 0 { BigRational::zero() } else { rat(small, visits) };
    let proportion_bound = &consts.k1 * rat(c, h_lbar) + &consts.k2 / int(biguint_pow(3, lbar as u64));
    let density_ok = density >= density_bound;
    let proportion_ok = proportion <= proportion_bound;
    let verdict = Verdict::from_parts(all_ok(&hypotheses), density_ok && proportion_ok);
    Ok(CrossingStats {
        len,
        visits,
        density,
        density_bound,
        density_ok,
        small_visits: small,
        proportion,
        proportion_bound,
        proportion_ok,
        hypotheses,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubstantialReport {
    pub n: usize,
    pub covered: u64,
    pub len: u64,
    pub fraction: BigRational,
    pub bound: BigRational,
    pub coverage_ok: bool,
    pub substantial: usize,
    pub all_synchronized: bool,
    /// When every substantial crossing is synchronized: at most two of them,
    /// each of size ≥ (1-(d+2)η)·h_n. Vacuous otherwise.
    pub synchronized_clause_ok: bool,
    pub hypotheses: Vec<Flag>,
    pub verdict: Verdict,
}

/// Share of I_n covered by substantial n-crossings against 1 - (d+2)η, for
/// n_{ℓ-1} ≤ n ≤ n_ℓ - ℓ.
pub fn substantial_coverage(tower: &Tower, x: &ProductPoint, ell: usize, n: usize) -> Result<SubstantialReport> {
    let params = tower.params();
    let d = x.d();
    let eta = params.eta_value();
    if ell == 0 {
        return Err(Error::LSeqExhausted { ell });
    }
    let n_ell = stage(tower, ell)?;
    let n_prev = params.n_of(ell - 1).ok_or(Error::LSeqExhausted { ell: ell - 1 })?;
    let h = tower.height(n)?;
    let i_n = centered_interval(h);
    let valid = tower.valid_shifts(x)?;
    let pad = h as i64;
    let scan = Interval::new(i_n.lo - pad, i_n.hi + pad);

    let mut hypotheses = vec![
        Flag::new("n_range", n_prev <= n && n + ell <= n_ell),
        Flag::new("scan_inside_truncation", valid.contains_interval(&scan)),
    ];
    if !valid.contains_interval(&i_n) {
        return Err(Error::OutOfTruncation { overshoot: 0, lo: valid.lo as i128, hi: valid.hi as i128 });
    }
    hypotheses.push(Flag::new("in_crossing", inside_one_crossing(tower, x, n_ell, i_n)?));
    if n == n_prev && ell >= 2 {
        let k = params.k_of(ell - 1)?;
        hypotheses.push(Flag::new("k_large", rat(1u8, biguint_pow(3, k as u64)) < &eta / int(2 * d as u64)));
    }

    let scan = scan.intersect(&valid);
    let sizes_bound = (int(1) - int(d as u64 + 2) * &eta) * int(h);
    let mut covered = 0;
    let mut substantial = 0;
    let mut all_synchronized = true;
    let mut big_enough = true;
    for c in crossings(tower, x, n, scan)?.into_iter().filter(|c| c.substantial) {
        substantial += 1;
        covered += c.interval.intersect(&i_n).len();
        all_synchronized &= c.synchronized;
        big_enough &= int(c.len()) >= sizes_bound;
    }
    let fraction = rat(covered, h);
    let bound = int(1) - int(d as u64 + 2) * &eta;
    let coverage_ok = fraction >= bound;
    let synchronized_clause_ok = !all_synchronized || (substantial <= 2 && big_enough);
    let verdict = Verdict::from_parts(all_ok(&hypotheses), coverage_ok && synchronized_clause_ok);
    Ok(SubstantialReport {
        n,
        covered,
        len: h as u64,
        fraction,
        bound,
        coverage_ok,
        substantial,
        all_synchronized,
        synchronized_clause_ok,
        hypotheses,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ConstructionParams;

    fn tower(trunc: usize) -> Tower {
        Tower::new(ConstructionParams::default().with_trunc(trunc)).unwrap()
    }

    fn pair(t: &Tower, a: u128, b: u128) -> ProductPoint {
        let n = t.trunc();
        ProductPoint::new(&[t.point(n, a).unwrap(), t.point(n, b).unwrap()]).unwrap()
    }

    #[test]
    fn hand_traced_pair() {
        let t = tower(4);
        let x = pair(&t, 10, 90);
        let w = Interval::new(-10, 35);
        let f = visit_set(&t, &x, 3, w).unwrap();
        assert!(f.runs()[0] == Interval::new(-10, 29));
        assert!(!f.contains(30));
        let cs = crossings(&t, &x, 3, w).unwrap();
        assert_eq!(cs[0].interval, Interval::new(-10, 29));
        assert_eq!(cs[0].tvec, vec![Some(1), Some(2)]);
        assert!(!cs[0].synchronized && !cs[0].partial);
        assert_eq!(cs[0].len(), 40);
        assert_eq!(gamma_count(&t, &x, 3, Interval::new(-10, 29)).unwrap(), 40);
    }

    #[test]
    fn full_truncation_single_partial_crossing() {
        let t = tower(4);
        let x = ProductPoint::new(&[t.point(4, 100).unwrap()]).unwrap();
        let w = Interval::new(-50, 50);
        let cs = crossings(&t, &x, 4, w).unwrap();
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].interval, w);
        assert_eq!(cs[0].tvec, vec![None]);
        assert!(cs[0].partial);
        assert_eq!(visit_set(&t, &x, 4, w).unwrap().len(), w.len());
        let full = t.valid_shifts(&x).unwrap();
        let cs = crossings(&t, &x, 4, full).unwrap();
        assert_eq!(cs.len(), 1);
        assert!(cs[0].partial && cs[0].interval == full);
    }

    #[test]
    fn window_errors() {
        let t = tower(4);
        let x = pair(&t, 10, 90);
        assert!(matches!(crossings(&t, &x, 3, Interval::new(-11, 0)), Err(Error::OutOfTruncation { .. })));
        assert!(matches!(visit_set(&t, &x, 3, Interval::new(0, 151)), Err(Error::OutOfTruncation { .. })));
    }

    #[test]
    fn n_interval_cutting() {
        assert_eq!(n_intervals(40, Interval::new(0, 79)), vec![Interval::new(0, 39), Interval::new(40, 79)]);
        assert_eq!(n_intervals(40, Interval::new(1, 40)).len(), 2);
        assert_eq!(n_intervals(40, Interval::new(-1, 0)), vec![Interval::new(-40, -1), Interval::new(0, 39)]);
        assert!(n_intervals(13, Interval::new(-100, 100)).iter().all(|i| i.len() == 13));
    }

    #[test]
    fn gamma_additive_and_table_agrees() {
        let t = tower(6);
        let x = pair(&t, 500, 1200);
        let w = Interval::new(-400, 700);
        let table = GammaTable::new(&t, &x, 2, w).unwrap();
        let whole = gamma_count(&t, &x, 2, w).unwrap();
        let a = gamma_count(&t, &x, 2, Interval::new(-400, 99)).unwrap();
        let b = gamma_count(&t, &x, 2, Interval::new(100, 700)).unwrap();
        assert_eq!(whole, a + b);
        assert_eq!(table.count(w), whole);
        assert_eq!(table.count(Interval::new(100, 700)), b);
    }

    #[test]
    fn crossings_are_maximal_diagonal_runs() {
        let t = tower(6);
        let x = pair(&t, 500, 1200);
        let w = Interval::new(-400, 700);
        let cs = crossings(&t, &x, 2, w).unwrap();
        let h = t.h(2);
        for c in &cs {
            assert!(c.len() as u128 <= h);
            let start: Vec<u128> =
                (0..2).map(|i| t.level(t.iterate(x.coord(i), c.interval.lo as i128).unwrap(), 2).unwrap()).collect();
            for j in c.interval.iter() {
                for (i, s) in start.iter().enumerate() {
                    let p = t.iterate(x.coord(i), j as i128).unwrap();
                    assert_eq!(t.level(p, 2), Some(s + (j - c.interval.lo) as u128));
                }
            }
            if !c.partial {
                assert!(start.contains(&0));
            }
        }
        for p in cs.windows(2) {
            assert!(p[0].interval.hi < p[1].interval.lo);
        }
    }

    #[test]
    fn classify_examples() {
        let t = tower(5);
        // n_1 = 3, k(1) = 0: the fake tower is 3 and the blocks sit in tower 4.
        let inside = t.point(5, t.embed(3, 5, &[1, 2]).unwrap()).unwrap();
        assert_eq!(classify_coord_at(&t, inside, 1, 0).unwrap(), CoordClass::InTower { level: 5, t: Some(1) });
        let in_block = t.point(5, t.embed(4, 50, &[2]).unwrap()).unwrap();
        assert!(matches!(classify_coord_at(&t, in_block, 1, 0).unwrap(), CoordClass::Fake { block: SpacerPos::After1, offset: 10 }));
        let x = ProductPoint::new(&[inside, in_block]).unwrap();
        assert_eq!(classify_crossing_at(&t, &x, 1, 0).unwrap(), ShiftClass::Fake(vec![1]));
        let y = ProductPoint::new(&[inside, inside]).unwrap();
        assert_eq!(classify_crossing_at(&t, &y, 1, 0).unwrap(), ShiftClass::True);
    }

    #[test]
    fn n_good_needs_room_below_n_ell() {
        let t = tower(12);
        let x = ProductPoint::new(&[t.point(12, 1000).unwrap()]).unwrap();
        assert!(matches!(find_n_good(&t, &x, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn theta1_on_deep_point() {
        let t = tower(15);
        let p = t.lift(t.point(9, 39000).unwrap(), 15, &crate::dynamics::Extension::AllMiddle).unwrap();
        let x = ProductPoint::new(&[p]).unwrap();
        let w = Interval::new(-200_000, 200_000);
        let r = verify_theta1(&t, &x, 9, 3, 1, w).unwrap();
        assert!(r.pairs > 0);
        assert!(r.failures.is_empty(), "{:?}", r.failures);
        assert_eq!(r.verdict, Verdict::Pass);
    }
}
