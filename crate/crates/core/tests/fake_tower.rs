//! Exhaustive scans of the fake tower n' = n_ℓ - k(ℓ) inside tower 11.

use nfc_core::crossings::{classify_coord_at, CoordClass};
use nfc_core::tower::SpacerPos;
use nfc_core::{ConstructionParams, LevelWalker, Point, Tower};

const TRUNC: usize = 11;

fn tower() -> Tower {
    Tower::new(ConstructionParams::default().with_trunc(TRUNC)).unwrap()
}

fn spacer_len_one(t: &Tower, p: Point) -> bool {
    let w = LevelWalker::new(t, p.trunc, p.idx).unwrap();
    matches!(w.spacer(), Some((_, SpacerPos::Extra2, _)))
}

// With k(ℓ) ≥ 1 the shift before a fake position is in the last copy of tower
// n' (t = 3) and the shift after is in the first (t = 1). At block offset 0 the
// shift after can instead land on a one-level extra spacer.
#[test]
fn neighbours_of_fake_positions() {
    let t = tower();
    let ell = 2;
    let np = t.fake_stage(ell).unwrap();
    assert_eq!(np, 7);
    let hp = t.h(np);
    let (mut fakes, mut on_spacer) = (0, 0);
    for idx in hp..t.h(TRUNC) - hp {
        let p = t.point(TRUNC, idx).unwrap();
        let Some((_, offset)) = t.fake_position(p, ell).unwrap() else { continue };
        fakes += 1;
        assert!(
            matches!(classify_coord_at(&t, p, ell, -1).unwrap(), CoordClass::InTower { t: Some(3), .. }),
            "idx {idx}"
        );
        match classify_coord_at(&t, p, ell, 1).unwrap() {
            CoordClass::InTower { t: Some(1), .. } => {}
            CoordClass::Outside => {
                assert_eq!(offset, 0, "idx {idx}");
                assert!(spacer_len_one(&t, t.iterate(p, hp as i128).unwrap()), "idx {idx}");
                on_spacer += 1;
            }
            other => panic!("idx {idx}: {other:?}"),
        }
    }
    assert!(fakes > 0 && on_spacer > 0);
}

// At most one fake shift among ⌊h_{n_ℓ}/h_{n'}⌋ consecutive shifts.
#[test]
fn fake_shifts_are_isolated() {
    let t = tower();
    for ell in [1, 2] {
        let np = t.fake_stage(ell).unwrap();
        let n_ell = t.params().n_of(ell).unwrap();
        let hp = t.h(np) as i128;
        let window = (t.h(n_ell) / t.h(np)) as i64;
        assert!(window >= 1);
        for start in (0..t.h(TRUNC)).step_by(97) {
            let p = t.point(TRUNC, start).unwrap();
            let max_r = ((t.h(TRUNC) as i128 - 1 - start as i128) / hp).min(200) as i64;
            let fake: Vec<i64> = (0..=max_r)
                .filter(|&r| matches!(classify_coord_at(&t, p, ell, r).unwrap(), CoordClass::Fake { .. }))
                .collect();
            assert!(fake.windows(2).all(|w| w[1] - w[0] >= window), "l={ell} start={start} {fake:?}");
        }
    }
}
