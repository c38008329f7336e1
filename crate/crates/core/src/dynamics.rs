//! Points of X and X^d at a finite truncation and the maps acting on them.
//!
//! A point is its level index in tower N. The finite model agrees with T on
//! every orbit segment that stays below the top of tower N; leaving the tower
//! is reported as an error value so the caller can lift.

use std::ops::RangeInclusive;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::tower::{LevelWalker, SpacerPos, Tower};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Point {
    pub trunc: usize,
    pub idx: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProductPoint {
    pub trunc: usize,
    pub coords: Vec<u128>,
}

impl ProductPoint {
    pub fn new(points: &[Point]) -> Result<Self> {
        let trunc = points.first().ok_or(Error::Precondition("empty product point".into()))?.trunc;
        if points.iter().any(|p| p.trunc != trunc) {
            return Err(Error::TruncationMismatch);
        }
        Ok(ProductPoint { trunc, coords: points.iter().map(|p| p.idx).collect() })
    }

    pub fn d(&self) -> usize {
        self.coords.len()
    }

    pub fn coord(&self, i: usize) -> Point {
        Point { trunc: self.trunc, idx: self.coords[i] }
    }
}

/// Partition of the coordinates into G0 (fixed) and G1 (moved by T).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistSpec {
    g1: Vec<bool>,
}

impl TwistSpec {
    /// `g1` lists zero-based coordinates moved by T.
    pub fn new(d: usize, g1: &[usize]) -> Result<Self> {
        let mut mask = vec![false; d];
        for &i in g1 {
            if i >= d {
                return Err(Error::BadTwistSpec);
            }
            mask[i] = true;
        }
        let moved = mask.iter().filter(|&&b| b).count();
        if moved == 0 || moved == d {
            return Err(Error::BadTwistSpec);
        }
        Ok(TwistSpec { g1: mask })
    }

    pub fn d(&self) -> usize {
        self.g1.len()
    }

    pub fn moves(&self, i: usize) -> bool {
        self.g1[i]
    }

    pub fn swapped(&self) -> TwistSpec {
        TwistSpec { g1: self.g1.iter().map(|b| !b).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extension {
    /// t = 2 at every new stage.
    AllMiddle,
    Digits(Vec<u8>),
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowCheck {
    pub ok: bool,
    pub reason: Option<String>,
}

impl Tower {
    pub fn point(&self, trunc: usize, idx: u128) -> Result<Point> {
        let h = self.height(trunc)?;
        if idx >= h {
            return Err(Error::LevelOutOfRange { n: trunc, j: idx, h });
        }
        Ok(Point { trunc, idx })
    }

    pub fn step(&self, p: Point) -> Result<Point> {
        if p.idx + 1 >= self.height(p.trunc)? {
            Err(Error::TopOfTruncation)
        } else {
            Ok(Point { idx: p.idx + 1, ..p })
        }
    }

    pub fn iterate(&self, p: Point, k: i128) -> Result<Point> {
        let h = self.height(p.trunc)? as i128;
        let at = p.idx as i128 + k;
        if at < 0 || at >= h {
            let overshoot = if at < 0 { at } else { at - (h - 1) };
            return Err(Error::OutOfTruncation {
                overshoot,
                lo: -(p.idx as i128),
                hi: h - 1 - p.idx as i128,
            });
        }
        Ok(Point { idx: at as u128, ..p })
    }

    pub fn level(&self, p: Point, n: usize) -> Option<u128> {
        if n > p.trunc {
            return None;
        }
        self.level_at(p.trunc, p.idx, n)
    }

    pub fn subcolumn(&self, p: Point, n: usize) -> Option<u8> {
        self.subcolumn_at(p.trunc, p.idx, n)
    }

    pub fn lift(&self, p: Point, to: usize, ext: &Extension) -> Result<Point> {
        if to < p.trunc {
            return Err(Error::StageOutOfRange { n: to, trunc: p.trunc });
        }
        self.height(to)?;
        let len = to - p.trunc;
        let digits = match ext {
            Extension::AllMiddle => vec![2; len],
            Extension::Digits(ds) => {
                if ds.len() != len {
                    return Err(Error::DigitCount { expected: len, got: ds.len() });
                }
                ds.clone()
            }
            Extension::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..len).map(|_| rng.gen_range(1..=3u8)).collect()
            }
        };
        Ok(Point { trunc: to, idx: self.embed(p.trunc, p.idx, &digits)? })
    }

    pub fn random_point<R: Rng + ?Sized>(&self, trunc: usize, rng: &mut R) -> Result<Point> {
        let h = self.height(trunc)?;
        Ok(Point { trunc, idx: rng.gen_range(0..h) })
    }

    /// Central-occurrence window condition for every ℓ in `ells`: for
    /// n_{ℓ-1} ≤ n ≤ n_ℓ - ℓ, the occurrence of tower n inside tower n_ℓ
    /// containing p is neither among the first nor the last hundred.
    pub fn xinfty_window_ok(&self, p: Point, ells: RangeInclusive<usize>) -> WindowCheck {
        let fail = |reason: String| WindowCheck { ok: false, reason: Some(reason) };
        let params = self.params();
        for ell in ells {
            let (Some(prev), Some(cur)) = (params.n_of(ell.saturating_sub(1)), params.n_of(ell)) else {
                return fail(format!("n_{ell} not listed"));
            };
            if ell == 0 || cur > p.trunc {
                return fail(format!("tower n_{ell} = {cur} not inside truncation {}", p.trunc));
            }
            if self.level(p, prev).is_none() {
                return fail(format!("point outside C_{prev} (l = {ell})"));
            }
            let j = self.level(p, cur).expect("C_prev is inside C_cur");
            if cur < ell {
                continue;
            }
            for n in prev..=(cur - ell) {
                let count = match 3u128.checked_pow((cur - n) as u32) {
                    Some(c) => c,
                    None => return fail(format!("3^{} overflows", cur - n)),
                };
                let rank = match self.occurrence_index(n, cur, j) {
                    Ok(Some(r)) => r,
                    _ => return fail(format!("no occurrence of tower {n} (l = {ell})")),
                };
                if rank < 100 || rank + 100 >= count {
                    return fail(format!(
                        "occurrence {rank} of {count} of tower {n} in tower {cur} is within 100 of an end"
                    ));
                }
            }
        }
        WindowCheck { ok: true, reason: None }
    }

    pub fn step_product(&self, x: &ProductPoint) -> Result<ProductPoint> {
        let h = self.height(x.trunc)?;
        if x.coords.iter().any(|&c| c + 1 >= h) {
            return Err(Error::TopOfTruncation);
        }
        Ok(ProductPoint { trunc: x.trunc, coords: x.coords.iter().map(|c| c + 1).collect() })
    }

    pub fn twist(&self, x: &ProductPoint, spec: &TwistSpec) -> Result<ProductPoint> {
        if spec.d() != x.d() {
            return Err(Error::BadTwistSpec);
        }
        let h = self.height(x.trunc)?;
        let mut coords = x.coords.clone();
        for (i, c) in coords.iter_mut().enumerate() {
            if spec.moves(i) {
                if *c + 1 >= h {
                    return Err(Error::TopOfTruncation);
                }
                *c += 1;
            }
        }
        Ok(ProductPoint { trunc: x.trunc, coords })
    }

    /// Shifts j for which every coordinate of T^j x stays inside tower N.
    pub fn valid_shifts(&self, x: &ProductPoint) -> Result<Interval> {
        let h = self.height(x.trunc)?;
        let max = *x.coords.iter().max().ok_or(Error::Precondition("empty product point".into()))?;
        let min = *x.coords.iter().min().unwrap();
        Ok(Interval::new(-(min as i64), (h - 1 - max) as i64))
    }

    pub fn check_window(&self, x: &ProductPoint, window: Interval) -> Result<()> {
        let valid = self.valid_shifts(x)?;
        if window.is_empty() || valid.contains_interval(&window) {
            return Ok(());
        }
        let overshoot = if window.lo < valid.lo { window.lo - valid.lo } else { window.hi - valid.hi };
        Err(Error::OutOfTruncation { overshoot: overshoot as i128, lo: valid.lo as i128, hi: valid.hi as i128 })
    }

    /// Walkers for every coordinate positioned at shift `start`.
    pub fn product_walker(&self, x: &ProductPoint, start: i64) -> Result<ProductWalker<'_>> {
        self.check_window(x, Interval::new(start, start))?;
        let walkers = x
            .coords
            .iter()
            .map(|&c| LevelWalker::new(self, x.trunc, (c as i128 + start as i128) as u128))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductWalker { j: start, walkers })
    }

    /// n' = n_ℓ - k(ℓ), the height index of the spacer blocks added at stage n_ℓ.
    pub fn fake_stage(&self, ell: usize) -> Result<usize> {
        let n = self.params().n_of(ell).filter(|_| ell >= 1).ok_or(Error::LSeqExhausted { ell })?;
        Ok(n - self.params().k_of(ell)?)
    }

    /// Fake-tower block and offset of p at special stage n_ℓ.
    pub fn fake_position(&self, p: Point, ell: usize) -> Result<Option<(SpacerPos, u128)>> {
        let n = self.params().n_of(ell).filter(|_| ell >= 1).ok_or(Error::LSeqExhausted { ell })?;
        if n + 1 > p.trunc {
            return Err(Error::StageOutOfRange { n: n + 1, trunc: p.trunc });
        }
        match self.level(p, n + 1) {
            Some(j) => self.fake_level(ell, j),
            None => Ok(None),
        }
    }

    /// Level on C_n extended to the fake copies of tower n' = n_ℓ - k(ℓ);
    /// the flag is true when the level comes from a fake tower. Needs n ≤ n'.
    pub fn extended_level(&self, p: Point, ell: usize, n: usize) -> Result<Option<(u128, bool)>> {
        let np = self.fake_stage(ell)?;
        if n > np {
            return Err(Error::Precondition(format!("stage {n} above fake stage {np}")));
        }
        if let Some(j) = self.level(p, n) {
            return Ok(Some((j, false)));
        }
        Ok(self
            .fake_position(p, ell)?
            .and_then(|(_, off)| self.level_at(np, off, n))
            .map(|j| (j, true)))
    }

    /// t_n extended to the fake copies of tower n'; needs n < n'.
    pub fn extended_subcolumn(&self, p: Point, ell: usize, n: usize) -> Result<Option<u8>> {
        let np = self.fake_stage(ell)?;
        if n >= np {
            return Err(Error::Precondition(format!("stage {n} not below fake stage {np}")));
        }
        if self.level(p, n).is_some() {
            return Ok(self.subcolumn(p, n));
        }
        Ok(self.fake_position(p, ell)?.and_then(|(_, off)| self.subcolumn_at(np, off, n)))
    }
}

/// e with x2 = T^e x1 inside the shared truncation.
pub fn detect_offset(x1: Point, x2: Point) -> Option<i128> {
    (x1.trunc == x2.trunc).then(|| x2.idx as i128 - x1.idx as i128)
}

/// Synchronized walkers for the coordinates of a product orbit.
#[derive(Debug, Clone)]
pub struct ProductWalker<'a> {
    j: i64,
    walkers: Vec<LevelWalker<'a>>,
}

impl<'a> ProductWalker<'a> {
    /// Current shift j.
    #[inline]
    pub fn shift(&self) -> i64 {
        self.j
    }

    #[inline]
    pub fn coords(&self) -> &[LevelWalker<'a>] {
        &self.walkers
    }

    #[inline]
    pub fn advance(&mut self) -> bool {
        let mut ok = true;
        for w in &mut self.walkers {
            ok &= w.advance();
        }
        self.j += 1;
        ok
    }

    /// True when every coordinate is in tower n.
    #[inline]
    pub fn all_in(&self, n: usize) -> bool {
        self.walkers.iter().all(|w| w.level(n).is_some())
    }

    pub fn levels(&self, n: usize) -> Option<Vec<u128>> {
        self.walkers.iter().map(|w| w.level(n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ConstructionParams;

    fn tower(trunc: usize) -> Tower {
        Tower::new(ConstructionParams::default().with_trunc(trunc)).unwrap()
    }

    #[test]
    fn step_examples() {
        let t = tower(4);
        let p = t.point(4, 0).unwrap();
        assert_eq!(t.step(p).unwrap().idx, 1);
        let p = t.step(t.point(4, 39).unwrap()).unwrap();
        assert_eq!(p.idx, 40);
        assert_eq!(t.level(p, 3), None);
        assert_eq!(t.step(t.point(4, 240).unwrap()), Err(Error::TopOfTruncation));
    }

    #[test]
    fn iterate_examples() {
        let t = tower(4);
        let p = t.point(4, 10).unwrap();
        assert_eq!(t.iterate(p, -10).unwrap().idx, 0);
        assert!(matches!(t.iterate(p, -11), Err(Error::OutOfTruncation { overshoot: -1, .. })));
        assert!(matches!(t.iterate(p, 241), Err(Error::OutOfTruncation { .. })));
    }

    #[test]
    fn level_examples() {
        let t = tower(4);
        let p = t.point(4, 165).unwrap();
        assert_eq!(t.level(p, 2), Some(4));
        assert_eq!(t.subcolumn(p, 2), Some(1));
        assert_eq!(t.level(t.point(4, 50).unwrap(), 3), None);
        assert_eq!(t.level(p, 4), Some(165));
        assert_eq!(t.subcolumn(p, 4), None);
    }

    #[test]
    fn lift_examples() {
        let t = tower(6);
        let p = t.point(1, 0).unwrap();
        assert_eq!(t.lift(p, 2, &Extension::AllMiddle).unwrap().idx, 4);
        let q = t.point(3, 17).unwrap();
        assert_eq!(t.lift(q, 6, &Extension::Digits(vec![1, 1, 1])).unwrap().idx, 17);
        assert_eq!(
            t.lift(q, 6, &Extension::Digits(vec![1])),
            Err(Error::DigitCount { expected: 3, got: 1 })
        );
        let r = t.lift(q, 6, &Extension::Random(9)).unwrap();
        assert_eq!(r, t.lift(q, 6, &Extension::Random(9)).unwrap());
        for n in 0..=3 {
            assert_eq!(t.level(r, n), t.level(q, n));
        }
    }

    #[test]
    fn random_point_reproducible() {
        let t = tower(5);
        let a = t.random_point(5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = t.random_point(5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(t.random_point(0, &mut ChaCha8Rng::seed_from_u64(3)).unwrap().idx, 0);
    }

    #[test]
    fn random_point_uniform_on_tower_one() {
        let t = tower(1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 100_000u32;
        let mut counts = [0u32; 4];
        for _ in 0..draws {
            counts[t.random_point(1, &mut rng).unwrap().idx as usize] += 1;
        }
        let mean = draws as f64 / 4.0;
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 5.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn window_condition() {
        let t = tower(35);
        let zero = t.point(35, 0).unwrap();
        assert!(!t.xinfty_window_ok(zero, 5..=5).ok);
        let base = t.point(24, 0).unwrap();
        let mid = t.lift(base, 35, &Extension::AllMiddle).unwrap();
        assert!(t.xinfty_window_ok(mid, 5..=5).ok);
        let last = t.lift(base, 35, &Extension::Digits(vec![3; 11])).unwrap();
        assert!(!t.xinfty_window_ok(last, 5..=5).ok);
        // Ranks of tower n inside tower n_l never exceed 3^l for l <= 4, so no point qualifies.
        assert!(!t.xinfty_window_ok(mid, 4..=4).ok);
    }

    #[test]
    fn twist_examples() {
        let t = tower(4);
        let x = ProductPoint { trunc: 4, coords: vec![10, 90] };
        let spec = TwistSpec::new(2, &[1]).unwrap();
        assert_eq!(t.twist(&x, &spec).unwrap().coords, vec![10, 91]);
        let both = t.twist(&t.twist(&x, &spec).unwrap(), &spec.swapped()).unwrap();
        assert_eq!(both, t.step_product(&x).unwrap());
        assert_eq!(TwistSpec::new(2, &[0, 1]), Err(Error::BadTwistSpec));
        assert_eq!(TwistSpec::new(2, &[]), Err(Error::BadTwistSpec));
    }

    #[test]
    fn offsets() {
        let t = tower(4);
        let a = t.point(4, 10).unwrap();
        assert_eq!(detect_offset(a, t.point(4, 15).unwrap()), Some(5));
        assert_eq!(detect_offset(a, a), Some(0));
        assert_eq!(detect_offset(a, t.point(3, 10).unwrap()), None);
    }

    #[test]
    fn extended_maps_on_fake_tower() {
        let t = tower(10);
        // ℓ = 2: n_2 = 8, k = 1, fake stage 7; after1 block is [h_8, h_8 + h_7) in tower 9.
        let off = 1234u128;
        let j9 = t.h(8) + off;
        let p = t.point(9, j9).unwrap();
        assert_eq!(t.level(p, 7), None);
        assert_eq!(t.fake_position(p, 2).unwrap(), Some((SpacerPos::After1, off)));
        assert_eq!(t.extended_level(p, 2, 7).unwrap(), Some((off, true)));
        assert_eq!(t.extended_level(p, 2, 4).unwrap().map(|x| x.0), t.level_at(7, off, 4));
        assert_eq!(t.extended_subcolumn(p, 2, 4).unwrap(), t.subcolumn_at(7, off, 4));
    }
}
