//! Empirical measures along product orbits and the statistics computed from
//! their n-box counts.

use std::collections::BTreeMap;

use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::dynamics::{ProductPoint, TwistSpec};
use crate::error::{Error, Result};
use crate::hierarchy::IntSet;
use crate::interval::Interval;
use crate::rational::{biguint_pow, int, rat};
use crate::tower::{LevelWalker, Tower};

/// γ_J for a base point; positions are recomputed by walking the orbit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalMeasure {
    pub base: ProductPoint,
    pub support: IntSet,
}

/// Counts of γ on the n-boxes it charges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxCounts {
    pub n: usize,
    pub h: u128,
    pub d: usize,
    pub counts: BTreeMap<Vec<u128>, u64>,
    /// γ(C_n^d).
    pub in_cn: u64,
    /// γ(X^d) = |J|.
    pub mass: u64,
}

pub fn empirical(tower: &Tower, x: &ProductPoint, support: IntSet) -> Result<EmpiricalMeasure> {
    for run in support.runs() {
        tower.check_window(x, *run)?;
    }
    Ok(EmpiricalMeasure { base: x.clone(), support })
}

impl EmpiricalMeasure {
    pub fn mass(&self) -> u64 {
        self.support.len()
    }

    pub fn box_counts(&self, tower: &Tower, n: usize) -> Result<BoxCounts> {
        Ok(self.box_counts_multi(tower, &[n])?.pop().unwrap())
    }

    /// Box counts at several stages from one pass over the support.
    pub fn box_counts_multi(&self, tower: &Tower, ns: &[usize]) -> Result<Vec<BoxCounts>> {
        let d = self.base.d();
        let mut out = Vec::with_capacity(ns.len());
        for &n in ns {
            if n > self.base.trunc {
                return Err(Error::StageOutOfRange { n, trunc: self.base.trunc });
            }
            out.push(BoxCounts { n, h: tower.h(n), d, counts: BTreeMap::new(), in_cn: 0, mass: self.mass() });
        }
        let mut key = vec![0u128; d];
        for run in self.support.runs() {
            let mut w = tower.product_walker(&self.base, run.lo)?;
            loop {
                for bc in out.iter_mut() {
                    if fill_key(w.coords(), bc.n, &mut key) {
                        bc.in_cn += 1;
                        match bc.counts.get_mut(&key[..]) {
                            Some(c) => *c += 1,
                            None => {
                                bc.counts.insert(key.clone(), 1);
                            }
                        }
                    }
                }
                if w.shift() == run.hi {
                    break;
                }
                w.advance();
            }
        }
        Ok(out)
    }
}

fn fill_key(walkers: &[LevelWalker<'_>], n: usize, key: &mut [u128]) -> bool {
    for (k, w) in key.iter_mut().zip(walkers) {
        match w.level(n) {
            Some(l) => *k = l,
            None => return false,
        }
    }
    true
}

/// The n-diagonal of a box: its level vector minus the smallest entry.
pub fn diagonal_id(key: &[u128]) -> Vec<u128> {
    let m = key.iter().copied().min().unwrap_or(0);
    key.iter().map(|k| k - m).collect()
}

impl BoxCounts {
    pub fn count_box(&self, key: &[u128]) -> u64 {
        self.counts.get(key).copied().unwrap_or(0)
    }

    pub fn count_cn(&self) -> u64 {
        self.in_cn
    }

    pub fn ratio(&self, key: &[u128]) -> Result<BigRational> {
        if self.in_cn == 0 {
            return Err(Error::ZeroMass);
        }
        Ok(rat(self.count_box(key), self.in_cn))
    }

    /// Largest difference of box counts along one charged diagonal, zero boxes included.
    pub fn diagonal_spread(&self) -> u64 {
        // Per diagonal: charged boxes, smallest and largest charged count.
        let mut diags: BTreeMap<Vec<u128>, (u128, u64, u64)> = BTreeMap::new();
        for (key, &c) in &self.counts {
            let e = diags.entry(diagonal_id(key)).or_insert((0, u64::MAX, 0));
            e.0 += 1;
            e.1 = e.1.min(c);
            e.2 = e.2.max(c);
        }
        diags
            .iter()
            .map(|(diag, &(charged, lo, hi))| {
                let boxes = self.h - diag.iter().max().copied().unwrap_or(0);
                if charged < boxes { hi } else { hi - lo }
            })
            .max()
            .unwrap_or(0)
    }

    /// γ(∂C_n^d)/γ(C_n^d), ∂ = some level in {0, h_n - 1}.
    pub fn edge_ratio(&self) -> Result<BigRational> {
        if self.in_cn == 0 {
            return Err(Error::ZeroMass);
        }
        let edge: u64 = self
            .counts
            .iter()
            .filter(|(k, _)| k.iter().any(|&l| l == 0 || l == self.h - 1))
            .map(|(_, c)| c)
            .sum();
        Ok(rat(edge, self.in_cn))
    }

    /// Share of the C_n^d mass on boxes (j, j+e_2, …, j+e_d).
    pub fn graph_support_fraction(&self, e: &[i64]) -> Result<BigRational> {
        if e.len() + 1 != self.d {
            return Err(Error::Precondition(format!("need {} offsets", self.d - 1)));
        }
        if self.in_cn == 0 {
            return Err(Error::ZeroMass);
        }
        let on: u64 = self
            .counts
            .iter()
            .filter(|(k, _)| k[1..].iter().zip(e).all(|(&l, &ei)| l as i128 == k[0] as i128 + ei as i128))
            .map(|(_, c)| c)
            .sum();
        Ok(rat(on, self.in_cn))
    }

    /// max over n-boxes of |γ(B)/γ(C_n^d) - 1/h_n^d|.
    pub fn product_distance(&self) -> Result<BigRational> {
        if self.in_cn == 0 {
            return Err(Error::ZeroMass);
        }
        let boxes = int(biguint_pow(self.h as u64, self.d as u64));
        let uniform = BigRational::one() / &boxes;
        let mut best = if int(self.counts.len() as u64) < boxes { uniform.clone() } else { BigRational::zero() };
        for &c in self.counts.values() {
            let dev = (rat(c, self.in_cn) - &uniform).abs();
            if dev > best {
                best = dev;
            }
        }
        Ok(best)
    }
}

/// max over n-boxes of the difference of normalized counts.
pub fn box_ratio_distance(a: &BoxCounts, b: &BoxCounts) -> Result<BigRational> {
    if a.in_cn == 0 || b.in_cn == 0 {
        return Err(Error::ZeroMass);
    }
    let mut best = BigRational::zero();
    for key in a.counts.keys().chain(b.counts.keys()) {
        let dev = (a.ratio(key)? - b.ratio(key)?).abs();
        if dev > best {
            best = dev;
        }
    }
    Ok(best)
}

/// Σ_J 1_B / Σ_J 1_{C_n^d} along the orbit of x.
pub fn hopf_ratio(tower: &Tower, x: &ProductPoint, key: &[u128], n: usize, j: Interval) -> Result<BigRational> {
    empirical(tower, x, IntSet::from_interval(j))?.box_counts(tower, n)?.ratio(key)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistCounterexample {
    pub key: Vec<u128>,
    pub count_j: u64,
    pub count_j_prime: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistLevel {
    pub m: usize,
    pub boxes_checked: usize,
    pub counterexample: Option<TwistCounterexample>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistReport {
    pub levels: Vec<TwistLevel>,
}

impl TwistReport {
    pub fn ok(&self) -> bool {
        self.levels.iter().all(|l| l.counterexample.is_none())
    }
}

/// γ_{J'}(S^{-1}B) = γ_J(B) for every m ≤ m_max and every m-box B ⊂ Ω_m
/// charged on either side.
pub fn verify_twist_invariance(
    tower: &Tower,
    x: &ProductPoint,
    j: Interval,
    j_prime: Interval,
    spec: &TwistSpec,
    m_max: usize,
) -> Result<TwistReport> {
    if spec.d() != x.d() {
        return Err(Error::BadTwistSpec);
    }
    let ms: Vec<usize> = (0..=m_max).collect();
    let a = empirical(tower, x, IntSet::from_interval(j))?.box_counts_multi(tower, &ms)?;
    let b = empirical(tower, x, IntSet::from_interval(j_prime))?.box_counts_multi(tower, &ms)?;
    let mut levels = Vec::new();
    for (ca, cb) in a.iter().zip(&b) {
        let h = ca.h;
        let mut keys: BTreeMap<Vec<u128>, ()> = BTreeMap::new();
        for k in ca.counts.keys().filter(|k| k.iter().all(|&l| l != 0)) {
            keys.insert(k.clone(), ());
        }
        for k in cb.counts.keys() {
            // B = S(k) must be an m-box inside Ω_m.
            let img: Vec<u128> = k.iter().enumerate().map(|(i, &l)| if spec.moves(i) { l + 1 } else { l }).collect();
            if img.iter().all(|&l| l != 0 && l < h) {
                keys.insert(img, ());
            }
        }
        let mut counterexample = None;
        for key in keys.keys() {
            let pre: Vec<u128> = key.iter().enumerate().map(|(i, &l)| if spec.moves(i) { l - 1 } else { l }).collect();
            let (c1, c2) = (ca.count_box(key), cb.count_box(&pre));
            if c1 != c2 {
                counterexample = Some(TwistCounterexample { key: key.clone(), count_j: c1, count_j_prime: c2 });
                break;
            }
        }
        levels.push(TwistLevel { m: ca.n, boxes_checked: keys.len(), counterexample });
    }
    Ok(TwistReport { levels })
}

/// Concrete instance of the twisting scenario at a normal stage n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistScenario {
    pub x: ProductPoint,
    pub n: usize,
    pub j: Interval,
    pub j_prime: Interval,
    pub spec: TwistSpec,
}

/// x_1 in subcolumn 1 and x_2 in subcolumn 2 of tower n, both at level `a`,
/// embedded through middle subcolumns up to the truncation. J keeps both
/// coordinates in levels 1..h_n-1 and J' = J + h_n.
pub fn twist_example(tower: &Tower, n: usize, a: u128) -> Result<TwistScenario> {
    if tower.params().special_index(n).is_some() {
        return Err(Error::Precondition(format!("stage {n} is special")));
    }
    let trunc = tower.trunc();
    if trunc < n + 2 {
        return Err(Error::StageOutOfRange { n: n + 2, trunc });
    }
    let h = tower.height(n)?;
    if a == 0 || a >= h {
        return Err(Error::LevelOutOfRange { n, j: a, h });
    }
    let tail = vec![2u8; trunc - n - 1];
    let point = |t: u8| -> Result<crate::dynamics::Point> {
        let mut digits = vec![t];
        digits.extend_from_slice(&tail);
        tower.point(trunc, tower.embed(n, a, &digits)?)
    };
    let x = ProductPoint::new(&[point(1)?, point(2)?])?;
    let j = Interval::new(1 - a as i64, (h - 1 - a) as i64);
    let j_prime = j.shift(h as i64);
    Ok(TwistScenario { x, n, j, j_prime, spec: TwistSpec::new(2, &[1])? })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatErgReport {
    pub r: u64,
    pub trunc: usize,
    /// 3^{-N}·Σ S_r(j₀)² over starting levels in B with a full r-orbit in tower N.
    pub first: BigRational,
    /// (3^{-N}·Σ S_r(j₀))² over the same levels.
    pub second: BigRational,
    pub m_hat: BigRational,
    /// Range of the ratio over all completions of the omitted levels.
    pub lower: BigRational,
    pub upper: BigRational,
    pub boundary_error: BigRational,
    /// h_N ≥ 4r.
    pub depth_ok: bool,
}

/// Return-count moments for B = C_0 (the single level of tower 0, μ(B) = 1).
pub fn rational_ergodicity_stat(tower: &Tower, r: u64, trunc: usize) -> Result<RatErgReport> {
    let h = tower.height(trunc)?;
    if r == 0 {
        return Err(Error::Precondition("r must be positive".into()));
    }
    if h <= r as u128 {
        return Err(Error::Precondition(format!("h_{trunc} = {h} does not exceed r = {r}")));
    }
    let h = h as usize;
    let r = r as usize;
    // prefix[j] = #{i < j : level i of tower N lies in C_0}
    let mut prefix = Vec::with_capacity(h + 1);
    prefix.push(0u64);
    let mut w = LevelWalker::new(tower, trunc, 0)?;
    for j in 0..h {
        let inside = w.level(0).is_some() as u64;
        prefix.push(prefix[j] + inside);
        if j + 1 < h {
            w.advance();
        }
    }
    let mut sum: u128 = 0;
    let mut sq: u128 = 0;
    for j0 in 0..h - r {
        if prefix[j0 + 1] > prefix[j0] {
            let s = (prefix[j0 + r] - prefix[j0]) as u128;
            sum += s;
            sq += s * s;
        }
    }
    let omitted = prefix[h] - prefix[h - r];
    let scale = int(biguint_pow(3, trunc as u64));
    let first = int(sq) / &scale;
    let mean = int(sum) / &scale;
    let second = &mean * &mean;
    let m_hat = &first / &second;
    let m_o = int(omitted) / &scale;
    let rr = int(r as u64);
    let lower = &first / ((&mean + &m_o * &rr) * (&mean + &m_o * &rr));
    let upper = (&first + &m_o * &rr * &rr) / &second;
    let boundary_error = std::cmp::max((&m_hat - &lower).abs(), (&upper - &m_hat).abs());
    Ok(RatErgReport {
        r: r as u64,
        trunc,
        first,
        second,
        m_hat,
        lower,
        upper,
        boundary_error,
        depth_ok: h >= 4 * r,
    })
}
