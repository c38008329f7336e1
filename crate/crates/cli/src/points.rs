//! Point specs: `idx:I`, `middle:DEPTH:IDX`, `random:DEPTH`, `shift:E`.
//!
//! Depth-based specs are lifted to the truncation through middle subcolumns.
//! `shift:E` is T^E of the first point.

use nfc_core::{Extension, Point, ProductPoint, Tower};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

fn num<T: std::str::FromStr>(spec: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::usage(format!("point spec `{spec}`: bad number `{v}`")))
}

pub fn parse_point(t: &Tower, spec: &str, first: Option<Point>, rng: &mut ChaCha8Rng) -> Result<Point, CliError> {
    let trunc = t.trunc();
    let parts: Vec<&str> = spec.split(':').collect();
    let lift = |p: Point| t.lift(p, trunc, &Extension::AllMiddle).map_err(CliError::from);
    let depth_ok = |depth: usize| {
        if depth > trunc {
            Err(CliError::usage(format!("point spec `{spec}`: depth {depth} exceeds truncation {trunc}")))
        } else {
            Ok(depth)
        }
    };
    match parts.as_slice() {
        ["idx", i] => Ok(t.point(trunc, num(spec, i)?)?),
        ["middle", depth, i] => {
            let depth = depth_ok(num(spec, depth)?)?;
            lift(t.point(depth, num(spec, i)?)?)
        }
        ["random", depth] => {
            let depth = depth_ok(num(spec, depth)?)?;
            lift(t.random_point(depth, rng)?)
        }
        ["shift", e] => {
            let base = first.ok_or_else(|| CliError::usage("shift:E needs a preceding point"))?;
            Ok(t.iterate(base, num::<i128>(spec, e)?)?)
        }
        _ => Err(CliError::usage(format!("unknown point spec `{spec}`"))),
    }
}

/// Resolves the specs in order; with none given, `d` random points at depth min(12, N).
pub fn product_point(t: &Tower, specs: &[String], d: usize, rng: &mut ChaCha8Rng) -> Result<ProductPoint, CliError> {
    let defaults: Vec<String>;
    let specs = if specs.is_empty() {
        defaults = vec![format!("random:{}", t.trunc().min(12)); d];
        &defaults
    } else {
        specs
    };
    let mut pts = Vec::with_capacity(specs.len());
    for s in specs {
        let p = parse_point(t, s, pts.first().copied(), rng)?;
        pts.push(p);
    }
    Ok(ProductPoint::new(&pts)?)
}
