//! Heights, stage layouts, and the digit calculus of the symbolic model.
//!
//! Tower n+1 is laid out in its own level coordinates as a short list of
//! segments: three copies of tower n (subcolumns 1..3) and spacer blocks.
//! Everything here is arithmetic on those segment lists; no per-level table
//! is ever built.

use num::rational::BigRational;

use crate::error::{Error, Result};
use crate::params::{heights_checked, ConstructionParams};
use crate::rational::rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SpacerPos {
    After1,
    After2,
    Extra2,
    After3,
}

impl SpacerPos {
    pub fn name(self) -> &'static str {
        match self {
            SpacerPos::After1 => "after1",
            SpacerPos::After2 => "after2",
            SpacerPos::Extra2 => "extra2",
            SpacerPos::After3 => "after3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Sub(u8),
    Spacer(SpacerPos),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: u128,
    pub len: u128,
}

impl Segment {
    pub fn end(&self) -> u128 {
        self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageLayout {
    pub n: usize,
    pub segments: Vec<Segment>,
}

impl StageLayout {
    fn build(n: usize, h: u128, s: Option<u128>) -> Self {
        let mut segments = Vec::with_capacity(7);
        let mut at = 0u128;
        let mut push = |kind, len| {
            segments.push(Segment { kind, start: at, len });
            at += len;
        };
        match s {
            None => {
                push(SegmentKind::Sub(1), h);
                push(SegmentKind::Sub(2), h);
                push(SegmentKind::Spacer(SpacerPos::Extra2), 1);
                push(SegmentKind::Sub(3), h);
            }
            Some(s) => {
                push(SegmentKind::Sub(1), h);
                push(SegmentKind::Spacer(SpacerPos::After1), s);
                push(SegmentKind::Sub(2), h);
                push(SegmentKind::Spacer(SpacerPos::After2), s);
                push(SegmentKind::Spacer(SpacerPos::Extra2), 1);
                push(SegmentKind::Sub(3), h);
                push(SegmentKind::Spacer(SpacerPos::After3), s);
            }
        }
        StageLayout { n, segments }
    }

    /// Index of the segment containing `j`, if `j` is below the top.
    #[inline]
    pub fn locate(&self, j: u128) -> Option<usize> {
        self.segments.iter().position(|s| j < s.end())
    }

    pub fn total(&self) -> u128 {
        self.segments.last().map_or(0, |s| s.end())
    }

    /// Start offset of subcolumn `t`.
    pub fn sub_start(&self, t: u8) -> u128 {
        self.segments
            .iter()
            .find(|s| s.kind == SegmentKind::Sub(t))
            .map(|s| s.start)
            .expect("every layout has three subcolumns")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelClass {
    Child(u128),
    Spacer(SpacerPos, u128),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainStep {
    pub m: usize,
    pub class: LevelClass,
    /// t_m when `class` is a child.
    pub t: Option<u8>,
}

#[derive(Debug, Clone)]
pub struct Tower {
    params: ConstructionParams,
    h: Vec<u128>,
    layouts: Vec<StageLayout>,
}

impl Tower {
    pub fn new(params: ConstructionParams) -> Result<Self> {
        let params = params.validated()?;
        let h = heights_checked(&params)?;
        let mut layouts = Vec::with_capacity(params.trunc);
        for n in 0..params.trunc {
            let s = match params.special_index(n) {
                Some(ell) => Some(h[n - params.k_of(ell)?]),
                None => None,
            };
            layouts.push(StageLayout::build(n, h[n], s));
        }
        Ok(Tower { params, h, layouts })
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn trunc(&self) -> usize {
        self.params.trunc
    }

    pub fn heights(&self) -> &[u128] {
        &self.h
    }

    #[inline]
    pub fn h(&self, n: usize) -> u128 {
        self.h[n]
    }

    pub fn height(&self, n: usize) -> Result<u128> {
        self.h.get(n).copied().ok_or(Error::StageOutOfRange { n, trunc: self.trunc() })
    }

    pub fn layout(&self, n: usize) -> Result<&StageLayout> {
        self.layouts.get(n).ok_or(Error::StageOutOfRange { n, trunc: self.trunc() })
    }

    /// Size s of the spacer blocks added at stage `n`, if special.
    pub fn spacer_block(&self, n: usize) -> Option<u128> {
        let ell = self.params.special_index(n)?;
        let k = self.params.k_of(ell).ok()?;
        Some(self.h[n - k])
    }

    fn check_stage(&self, n: usize) -> Result<()> {
        if n > self.trunc() {
            Err(Error::StageOutOfRange { n, trunc: self.trunc() })
        } else {
            Ok(())
        }
    }

    fn check_level(&self, n: usize, j: u128) -> Result<()> {
        self.check_stage(n)?;
        if j >= self.h[n] {
            Err(Error::LevelOutOfRange { n, j, h: self.h[n] })
        } else {
            Ok(())
        }
    }

    /// The projection p_n on a level of tower n+1, refined with spacer identity.
    pub fn project(&self, n: usize, j: u128) -> Result<LevelClass> {
        if n >= self.trunc() {
            return Err(Error::StageOutOfRange { n, trunc: self.trunc() });
        }
        self.check_level(n + 1, j)?;
        Ok(self.project_unchecked(n, j).0)
    }

    #[inline]
    pub(crate) fn project_unchecked(&self, n: usize, j: u128) -> (LevelClass, Option<u8>) {
        let layout = &self.layouts[n];
        let seg = layout.segments[layout.locate(j).expect("level below top")];
        match seg.kind {
            SegmentKind::Sub(t) => (LevelClass::Child(j - seg.start), Some(t)),
            SegmentKind::Spacer(p) => (LevelClass::Spacer(p, j - seg.start), None),
        }
    }

    /// Chain (m, class, t_m) for m = top-1 down to `n_lo`, stopping at the first spacer.
    pub fn decompose(&self, top: usize, j: u128, n_lo: usize) -> Result<Vec<ChainStep>> {
        self.check_level(top, j)?;
        let mut out = Vec::with_capacity(top.saturating_sub(n_lo));
        let mut cur = j;
        for m in (n_lo..top).rev() {
            let (class, t) = self.project_unchecked(m, cur);
            out.push(ChainStep { m, class, t });
            match class {
                LevelClass::Child(c) => cur = c,
                LevelClass::Spacer(..) => break,
            }
        }
        Ok(out)
    }

    /// j_n of the tower-`top` level `j`, or `None` if a spacer is hit above stage n.
    #[inline]
    pub fn level_at(&self, top: usize, j: u128, n: usize) -> Option<u128> {
        let mut cur = j;
        for m in (n..top).rev() {
            match self.project_unchecked(m, cur).0 {
                LevelClass::Child(c) => cur = c,
                LevelClass::Spacer(..) => return None,
            }
        }
        Some(cur)
    }

    /// t_n of the tower-`top` level `j`; defined iff j_n is defined and n < top.
    pub fn subcolumn_at(&self, top: usize, j: u128, n: usize) -> Option<u8> {
        if n >= top {
            return None;
        }
        let above = self.level_at(top, j, n + 1)?;
        self.project_unchecked(n, above).1
    }

    /// j_top from j_n and digits t_n..t_{top-1}; top = n + digits.len().
    pub fn embed(&self, n: usize, j: u128, digits: &[u8]) -> Result<u128> {
        self.check_level(n, j)?;
        self.check_stage(n + digits.len())?;
        let mut cur = j;
        for (i, &t) in digits.iter().enumerate() {
            if !(1..=3).contains(&t) {
                return Err(Error::BadDigit(t));
            }
            cur += self.layouts[n + i].sub_start(t);
        }
        Ok(cur)
    }

    /// Rank of the occurrence of tower n containing level `j` of tower `top`.
    pub fn occurrence_index(&self, n: usize, top: usize, j: u128) -> Result<Option<u128>> {
        self.check_level(top, j)?;
        if n > top {
            return Err(Error::StageOutOfRange { n, trunc: top });
        }
        let chain = self.decompose(top, j, n)?;
        let mut rank: u128 = 0;
        for step in &chain {
            match step.t {
                Some(t) => {
                    rank = rank
                        .checked_mul(3)
                        .and_then(|r| r.checked_add((t - 1) as u128))
                        .ok_or(Error::HeightOverflow { n: top })?;
                }
                None => return Ok(None),
            }
        }
        Ok(Some(rank))
    }

    /// Start offset (in tower `top`) of the occurrence of tower n with the given rank.
    pub fn occurrence_start(&self, n: usize, top: usize, rank: u128) -> Result<u128> {
        let digits = rank_digits(rank, top - n)?;
        self.embed(n, 0, &digits)
    }

    /// For each level of tower n, the number of tower-`top` levels whose chain lands in it.
    pub fn level_census(&self, n: usize, top: usize) -> Result<Vec<u128>> {
        self.check_stage(top)?;
        if n > top {
            return Err(Error::StageOutOfRange { n, trunc: top });
        }
        let mut counts = vec![0u128; self.h[n] as usize];
        let mut w = LevelWalker::new(self, top, 0)?;
        loop {
            if let Some(j) = w.level(n) {
                counts[j as usize] += 1;
            }
            if !w.advance() {
                break;
            }
        }
        Ok(counts)
    }

    /// Offset inside an s-block at special stage n_ℓ, for level `j` of tower n_ℓ+1.
    pub fn fake_level(&self, ell: usize, j: u128) -> Result<Option<(SpacerPos, u128)>> {
        let n = self.params.n_of(ell).filter(|_| ell >= 1).ok_or(Error::LSeqExhausted { ell })?;
        if n >= self.trunc() {
            return Err(Error::StageOutOfRange { n: n + 1, trunc: self.trunc() });
        }
        self.check_level(n + 1, j)?;
        Ok(match self.project_unchecked(n, j).0 {
            LevelClass::Spacer(SpacerPos::Extra2, _) | LevelClass::Child(_) => None,
            LevelClass::Spacer(p, off) => Some((p, off)),
        })
    }

    /// μ(C_n) = h_n / 3^n.
    pub fn measure_of_tower(&self, n: usize) -> Result<BigRational> {
        let h = self.height(n)?;
        Ok(rat(h, num::pow(num::BigInt::from(3u8), n)))
    }
}

/// Base-3 digits t_n..t_{n+len-1} (each in 1..=3) of an occurrence rank.
pub fn rank_digits(rank: u128, len: usize) -> Result<Vec<u8>> {
    let mut digits = vec![1u8; len];
    let mut r = rank;
    for d in digits.iter_mut() {
        *d = (r % 3) as u8 + 1;
        r /= 3;
    }
    if r != 0 {
        return Err(Error::Precondition(format!("rank {rank} needs more than {len} digits")));
    }
    Ok(digits)
}

/// Steps through consecutive levels of one tower while keeping the whole
/// digit chain current. Each step costs O(1) amortized.
#[derive(Debug, Clone)]
pub struct LevelWalker<'a> {
    tower: &'a Tower,
    top: usize,
    idx: u128,
    low: usize,
    base: Vec<u128>,
    seg: Vec<u8>,
}

impl<'a> LevelWalker<'a> {
    pub fn new(tower: &'a Tower, top: usize, idx: u128) -> Result<Self> {
        tower.check_level(top, idx)?;
        let mut w = LevelWalker {
            tower,
            top,
            idx,
            low: top,
            base: vec![0; top + 1],
            seg: vec![0; top.max(1)],
        };
        w.reset(idx);
        Ok(w)
    }

    fn reset(&mut self, idx: u128) {
        self.idx = idx;
        self.base[self.top] = 0;
        self.low = 0;
        for m in (0..self.top).rev() {
            let layout = &self.tower.layouts[m];
            let j = idx - self.base[m + 1];
            let s = layout.locate(j).expect("level below top");
            self.seg[m] = s as u8;
            let seg = layout.segments[s];
            match seg.kind {
                SegmentKind::Sub(_) => self.base[m] = self.base[m + 1] + seg.start,
                SegmentKind::Spacer(_) => {
                    self.low = m + 1;
                    return;
                }
            }
        }
    }

    #[inline]
    pub fn idx(&self) -> u128 {
        self.idx
    }

    pub fn top(&self) -> usize {
        self.top
    }

    /// Lowest stage whose tower contains the current level.
    #[inline]
    pub fn lowest_stage(&self) -> usize {
        self.low
    }

    #[inline]
    pub fn level(&self, n: usize) -> Option<u128> {
        if n >= self.low && n <= self.top {
            Some(self.idx - self.base[n])
        } else {
            None
        }
    }

    #[inline]
    pub fn subcolumn(&self, n: usize) -> Option<u8> {
        if n >= self.low && n < self.top {
            match self.tower.layouts[n].segments[self.seg[n] as usize].kind {
                SegmentKind::Sub(t) => Some(t),
                SegmentKind::Spacer(_) => None,
            }
        } else {
            None
        }
    }

    /// Spacer block and offset at stage `low-1`, when the level is outside tower 0.
    pub fn spacer(&self) -> Option<(usize, SpacerPos, u128)> {
        if self.low == 0 {
            return None;
        }
        let m = self.low - 1;
        let seg = self.tower.layouts[m].segments[self.seg[m] as usize];
        match seg.kind {
            SegmentKind::Spacer(p) => Some((m, p, self.idx - self.base[self.low] - seg.start)),
            SegmentKind::Sub(_) => None,
        }
    }

    /// Moves to the next level; returns false at the top of the tower.
    #[inline]
    pub fn advance(&mut self) -> bool {
        let h = &self.tower.h;
        if self.idx + 1 >= h[self.top] {
            return false;
        }
        self.idx += 1;
        let mut m = self.low.saturating_sub(1);
        loop {
            let j = self.idx - self.base[m + 1];
            if j >= h[m + 1] {
                m += 1;
                continue;
            }
            let layout = &self.tower.layouts[m];
            let s = self.seg[m] as usize;
            if j < layout.segments[s].end() {
                return true;
            }
            let next = s + 1;
            self.seg[m] = next as u8;
            match layout.segments[next].kind {
                SegmentKind::Sub(_) => {
                    for mm in (0..=m).rev() {
                        self.base[mm] = self.idx;
                        if mm < m {
                            self.seg[mm] = 0;
                        }
                    }
                    self.low = 0;
                }
                SegmentKind::Spacer(_) => self.low = m + 1,
            }
            return true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower(trunc: usize) -> Tower {
        Tower::new(ConstructionParams::default().with_trunc(trunc)).unwrap()
    }

    #[test]
    fn heights_examples() {
        let t = tower(9);
        assert_eq!(t.height(1), Ok(4));
        assert_eq!(t.height(4), Ok(241));
        assert_eq!(t.height(9), Ok(78244));
        assert!(t.height(10).is_err());
    }

    #[test]
    fn project_examples() {
        let t = tower(4);
        assert_eq!(t.project(1, 8), Ok(LevelClass::Spacer(SpacerPos::Extra2, 0)));
        assert_eq!(t.project(3, 165), Ok(LevelClass::Child(4)));
        assert_eq!(t.project(3, 50), Ok(LevelClass::Spacer(SpacerPos::After1, 10)));
        assert!(t.project(3, 241).is_err());
    }

    #[test]
    fn layout_lengths_sum_to_height() {
        let t = tower(12);
        for n in 0..12 {
            let l = t.layout(n).unwrap();
            assert_eq!(l.total(), t.h(n + 1));
            for s in &l.segments {
                if let SegmentKind::Sub(_) = s.kind {
                    assert_eq!(s.len, t.h(n));
                }
            }
        }
    }

    #[test]
    fn decompose_examples() {
        let t = tower(4);
        let c = t.decompose(4, 165, 0).unwrap();
        let got: Vec<_> = c.iter().map(|s| (s.m, s.class, s.t)).collect();
        assert_eq!(
            got,
            vec![
                (3, LevelClass::Child(4), Some(3)),
                (2, LevelClass::Child(4), Some(1)),
                (1, LevelClass::Child(0), Some(2)),
                (0, LevelClass::Child(0), Some(1)),
            ]
        );
        let c = t.decompose(4, 50, 0).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].class, LevelClass::Spacer(SpacerPos::After1, 10));
        for s in t.decompose(4, 0, 0).unwrap() {
            assert_eq!((s.class, s.t), (LevelClass::Child(0), Some(1)));
        }
    }

    #[test]
    fn embed_examples() {
        let t = tower(4);
        assert_eq!(t.embed(3, 4, &[3]), Ok(165));
        assert_eq!(t.embed(1, 0, &[2, 1, 1]), Ok(4));
        assert_eq!(t.embed(2, 7, &[1, 1]), Ok(7));
        assert_eq!(t.embed(2, 7, &[4, 1]), Err(Error::BadDigit(4)));
    }

    #[test]
    fn occurrence_examples() {
        let t = tower(4);
        assert_eq!(t.occurrence_index(3, 4, 165), Ok(Some(2)));
        assert_eq!(t.occurrence_index(2, 4, 0), Ok(Some(0)));
        assert_eq!(t.occurrence_index(3, 4, 50), Ok(None));
        assert_eq!(t.occurrence_start(1, 4, 26).unwrap(), t.embed(1, 0, &[3, 3, 3]).unwrap());
    }

    #[test]
    fn census_examples() {
        let t = tower(4);
        assert_eq!(t.level_census(1, 4).unwrap(), vec![27; 4]);
        assert_eq!(t.level_census(0, 4).unwrap(), vec![81]);
        assert!(t.level_census(4, 4).unwrap().iter().all(|&c| c == 1));
    }

    #[test]
    fn fake_level_examples() {
        let t = tower(4);
        assert_eq!(t.fake_level(1, 50), Ok(Some((SpacerPos::After1, 10))));
        assert_eq!(t.fake_level(1, 160), Ok(None));
        assert_eq!(t.fake_level(1, 10), Ok(None));
        assert_eq!(t.fake_level(1, 240), Ok(Some((SpacerPos::After3, 39))));
    }

    #[test]
    fn tower_measures() {
        let t = tower(4);
        assert_eq!(t.measure_of_tower(0), Ok(rat(1, 1)));
        assert_eq!(t.measure_of_tower(4), Ok(rat(241, 81)));
        let growth = t.measure_of_tower(4).unwrap() / t.measure_of_tower(3).unwrap();
        assert!(growth >= rat(2, 1));
    }

    #[test]
    fn walker_matches_direct_projection() {
        let t = tower(9);
        let top = 9;
        let mut w = LevelWalker::new(&t, top, 0).unwrap();
        loop {
            let j = w.idx();
            for n in 0..=top {
                assert_eq!(w.level(n), t.level_at(top, j, n), "idx {j} stage {n}");
                assert_eq!(w.subcolumn(n), t.subcolumn_at(top, j, n), "idx {j} stage {n}");
            }
            if !w.advance() {
                break;
            }
        }
        assert_eq!(w.idx(), t.h(top) - 1);
    }

    #[test]
    fn walker_from_spacer_start() {
        let t = tower(6);
        let mut w = LevelWalker::new(&t, 6, 45).unwrap();
        assert_eq!(w.spacer().map(|s| (s.0, s.1)), Some((3, SpacerPos::After1)));
        for _ in 0..1000 {
            let j = w.idx();
            for n in 0..=6 {
                assert_eq!(w.level(n), t.level_at(6, j, n));
            }
            w.advance();
        }
    }
}
