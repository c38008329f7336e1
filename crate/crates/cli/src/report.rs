//! `nfc report <which>`: one table per experiment, with the bound, the measured
//! values, a verdict and the hypothesis flags.

use std::io::Write;

use nfc_core::check::{Flag, Verdict};
use nfc_core::crossings::{verify_crossing_stats, verify_theta1};
use nfc_core::hierarchy::{
    check_lemma_bounds, random_order_instance, witnesses_from_orbit, GenStyle, IntSet, LemmaReport, OrderParams,
    OrderedSet,
};
use nfc_core::measures::{empirical, hopf_ratio, rational_ergodicity_stat, twist_example, verify_twist_invariance};
use nfc_core::rational::int;
use nfc_core::{Error, Interval, LevelWalker, Point, ProductPoint, Tower};
use num::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::commands::{exit_code, finish, meta, tower, tower_and_point};
use crate::config::Settings;
use crate::output::{rational, Cell, Table};
use crate::points::parse_point;
use crate::{CliError, Which};

/// A failed precondition becomes a hypothesis-not-satisfied report; anything
/// else aborts the run.
enum Fail {
    Unmet(String),
    Cli(CliError),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        match e {
            Error::Precondition(_)
            | Error::NotFound
            | Error::LSeqExhausted { .. }
            | Error::StageOutOfRange { .. }
            | Error::LevelOutOfRange { .. }
            | Error::EtaOutOfRange { .. }
            | Error::ZeroMass => Fail::Unmet(e.to_string()),
            other => Fail::Cli(other.into()),
        }
    }
}

impl From<CliError> for Fail {
    fn from(e: CliError) -> Self {
        Fail::Cli(e)
    }
}

struct Outcome {
    table: Table,
    verdict: Verdict,
    hypotheses: Vec<Flag>,
    notes: Vec<String>,
}

/// Any bound failure wins; otherwise a missing hypothesis.
fn combine(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut out = Verdict::Pass;
    for v in vs {
        out = match (out, v) {
            (Verdict::BoundFailure, _) | (_, Verdict::BoundFailure) => Verdict::BoundFailure,
            (Verdict::HypothesisNotSatisfied, _) | (_, Verdict::HypothesisNotSatisfied) => {
                Verdict::HypothesisNotSatisfied
            }
            _ => Verdict::Pass,
        };
    }
    out
}

fn name(which: Which) -> &'static str {
    match which {
        Which::Theta1 => "theta1",
        Which::CrossingStats => "crossing-stats",
        Which::Hierarchy => "hierarchy",
        Which::Edge => "edge",
        Which::Hopf => "hopf",
        Which::Product => "product",
        Which::Graph => "graph",
        Which::TwistExample => "twist-example",
        Which::Ratergo => "ratergo",
    }
}

pub fn run(which: Which, s: &Settings, out: &mut impl Write) -> Result<u8, CliError> {
    let result = match which {
        Which::Theta1 => theta1(s),
        Which::CrossingStats => crossing_stats(s),
        Which::Hierarchy => hierarchy(s),
        Which::Edge => edge(s),
        Which::Hopf => hopf(s),
        Which::Product => product(s),
        Which::Graph => graph(s),
        Which::TwistExample => twist(s),
        Which::Ratergo => ratergo(s),
    };
    let command = format!("report {}", name(which));
    let o = match result {
        Ok(o) => o,
        Err(Fail::Cli(e)) => return Err(e),
        Err(Fail::Unmet(reason)) => {
            let mut table = Table::new(&["reason"]);
            table.push(vec![reason.clone().into()]);
            Outcome {
                table,
                verdict: Verdict::HypothesisNotSatisfied,
                hypotheses: vec![Flag::new("preconditions", false)],
                notes: vec![reason],
            }
        }
    };
    finish(out, s, meta(s, &command, Some(o.verdict), &o.hypotheses, &o.notes), &o.table)?;
    Ok(exit_code(o.verdict))
}

fn stage(t: &Tower, ell: usize) -> Result<usize, Fail> {
    t.params().n_of(ell).ok_or_else(|| Fail::Unmet(format!("no n_{ell} in n_seq")))
}

fn prefixed(prefix: &str, flags: &[Flag]) -> Vec<Flag> {
    flags.iter().map(|f| Flag::new(format!("{prefix}{}", f.name), f.ok)).collect()
}

fn opt_rational(r: &Option<BigRational>) -> [Cell; 2] {
    match r {
        Some(r) => rational(r),
        None => [Cell::Empty, Cell::Empty],
    }
}

fn bound_table() -> Table {
    let mut t = Table::with_rationals(&["quantity"], &["value"]);
    t.columns.push("relation".into());
    t.columns.push("bound".into());
    t.columns.push("bound_decimal".into());
    t.columns.push("ok".into());
    t
}

fn bound_row(t: &mut Table, quantity: &str, value: &BigRational, relation: &str, bound: &BigRational, ok: bool) {
    let mut row: Vec<Cell> = vec![quantity.into()];
    row.extend(rational(value));
    row.push(relation.into());
    row.extend(rational(bound));
    row.push(ok.into());
    t.push(row);
}

fn theta1(s: &Settings) -> Result<Outcome, Fail> {
    let (t, x) = tower_and_point(s)?;
    let ell = s.exp.ell.unwrap_or(3);
    let lbar = s.exp.lbar.unwrap_or(1);
    let n_ell = stage(&t, ell)?;
    let (lo, hi) = match (s.exp.ns, s.exp.n) {
        (Some(r), _) => r,
        (None, Some(n)) => (n, n),
        (None, None) => (n_ell.saturating_sub(1), n_ell.saturating_sub(1)),
    };
    let valid = t.valid_shifts(&x)?;
    let mut table = Table::with_rationals(&["n", "pairs", "boundary_pairs", "failures"], &["min_ratio", "max_ratio", "theta1"]);
    table.columns.push("verdict".into());
    let (mut verdicts, mut hypotheses, mut notes) = (Vec::new(), Vec::new(), Vec::new());
    for n in lo..=hi {
        let h = t.height(n)? as i64;
        let window = s.exp.window.unwrap_or_else(|| Interval::new(-4 * h, 4 * h).intersect(&valid));
        match verify_theta1(&t, &x, n, ell, lbar, window) {
            Ok(rep) => {
                let mut row: Vec<Cell> =
                    vec![n.into(), rep.pairs.into(), rep.boundary_pairs.into(), rep.failures.len().into()];
                row.extend(opt_rational(&rep.min_ratio));
                row.extend(opt_rational(&rep.max_ratio));
                row.extend(rational(&rep.theta1));
                row.push(rep.verdict.name().into());
                table.push(row);
                verdicts.push(rep.verdict);
                hypotheses.extend(prefixed(&format!("n={n}:"), &rep.hypotheses));
                if n == lo {
                    notes.extend(rep.notes.iter().map(|f| format!("{} = {}", f.name, f.ok)));
                }
            }
            Err(Error::NotFound) => {
                notes.push(format!("n={n}: no consecutive n-interval pairs inside an n_{ell}-crossing of {window}"));
                verdicts.push(Verdict::HypothesisNotSatisfied);
                hypotheses.push(Flag::new(format!("n={n}:pairs_found"), false));
            }
            Err(e) => return Err(e.into()),
        }
    }
    notes.push("bound: theta1 < gamma(I2)/gamma(I1) < 1/theta1".into());
    Ok(Outcome { table, verdict: combine(verdicts), hypotheses, notes })
}

fn crossing_stats(s: &Settings) -> Result<Outcome, Fail> {
    let (t, x) = tower_and_point(s)?;
    let lbar = s.exp.lbar.unwrap_or(1);
    let ell = s.exp.ell.unwrap_or(1);
    let h_lbar = t.height(stage(&t, lbar)?)?;
    let h_prev = t.height(stage(&t, lbar + ell - 1)?)?;
    let c = s.exp.c.map_or(h_lbar, u128::from);
    let within = match s.exp.window {
        Some(w) => w,
        None => Interval::with_len(0, 2 * h_prev as u64).intersect(&t.valid_shifts(&x)?),
    };
    t.check_window(&x, within)?;
    let st = verify_crossing_stats(&t, &x, lbar, ell, c, within)?;
    let mut table = bound_table();
    bound_row(&mut table, "density", &st.density, ">=", &st.density_bound, st.density_ok);
    bound_row(&mut table, "small_crossing_proportion", &st.proportion, "<=", &st.proportion_bound, st.proportion_ok);
    let notes = vec![format!("interval {within}, {} visits, c = {c}", st.visits)];
    Ok(Outcome { table, verdict: st.verdict, hypotheses: st.hypotheses, notes })
}

fn lemma_table(rep: &LemmaReport) -> Table {
    let mut table = bound_table();
    bound_row(&mut table, "density", &rep.density, ">=", &rep.density_bound, rep.density_ok);
    bound_row(&mut table, "small_piece_proportion", &rep.proportion, "<=", &rep.proportion_bound, rep.proportion_ok);
    table
}

fn hierarchy(s: &Settings) -> Result<Outcome, Fail> {
    let t = tower(s)?;
    let lbar = s.exp.lbar.unwrap_or(1);
    let ell = s.exp.ell.unwrap_or(2);
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let (families, within, params, mode): (Vec<OrderedSet>, Interval, OrderParams, &str) = if s.exp.points.is_empty() {
        let count = s.exp.count.unwrap_or(s.params.d).max(1);
        let params = OrderParams::from_tower(&t, lbar, ell, count)?;
        let within = s.exp.window.unwrap_or_else(|| Interval::with_len(0, 4 * params.c[ell - 1] as u64));
        let fams =
            (0..count).map(|_| random_order_instance(ell, &params, within, &GenStyle::default(), &mut rng)).collect();
        (fams, within, params, "synthetic")
    } else {
        let params = OrderParams::from_tower(&t, lbar, ell, s.exp.points.len())?;
        let within = s.exp.window.unwrap_or_else(|| Interval::with_len(0, params.c[ell - 1] as u64));
        let mut fams = Vec::new();
        let mut first: Option<Point> = None;
        for spec in &s.exp.points {
            let p = parse_point(&t, spec, first, &mut rng)?;
            first.get_or_insert(p);
            fams.push(witnesses_from_orbit(&t, p, lbar, ell, within)?);
        }
        (fams, within, params, "orbit")
    };
    let c = s.exp.c.map_or(params.c[0], u128::from);
    let rep = check_lemma_bounds(&families, within, ell, &params, c)?;
    let notes = vec![format!("{mode} families: {}, interval {within}, c = {c}", families.len())];
    Ok(Outcome { table: lemma_table(&rep), verdict: rep.verdict, hypotheses: rep.hypotheses, notes })
}

fn edge(s: &Settings) -> Result<Outcome, Fail> {
    let mut s = s.clone();
    if s.exp.points.is_empty() {
        s.exp.points = vec!["idx:0".into(); s.params.d];
    }
    let (t, x) = tower_and_point(&s)?;
    let (lo, hi) = s.exp.ns.unwrap_or((1, t.trunc().min(6)));
    let window = match s.exp.window {
        Some(w) => w,
        None => {
            let v = t.valid_shifts(&x)?;
            Interval::new(v.lo.max(0), v.hi)
        }
    };
    t.check_window(&x, window)?;
    let ns: Vec<usize> = (lo..=hi).collect();
    let counts = empirical(&t, &x, IntSet::from_interval(window))?.box_counts_multi(&t, &ns)?;
    let mut table = Table::with_rationals(&["n", "charged"], &["delta"]);
    table.columns.push("increase".into());
    let mut prev: Option<BigRational> = None;
    let mut inversions = 0;
    for bc in &counts {
        let delta = bc.edge_ratio()?;
        let up = prev.as_ref().is_some_and(|p| &delta > p);
        inversions += usize::from(up);
        let mut row: Vec<Cell> = vec![bc.n.into(), bc.in_cn.into()];
        row.extend(rational(&delta));
        row.push(up.into());
        table.push(row);
        prev = Some(delta);
    }
    let hypotheses = vec![Flag::new("window_nonempty", !window.is_empty())];
    let verdict = Verdict::from_parts(hypotheses[0].ok, inversions <= 1);
    let notes = vec![format!("window {window}; bound: delta nonincreasing in n up to one inversion ({inversions} seen)")];
    Ok(Outcome { table, verdict, hypotheses, notes })
}

fn hopf(s: &Settings) -> Result<Outcome, Fail> {
    let (t, x) = tower_and_point(s)?;
    let key: Vec<u128> = s
        .exp
        .key
        .as_ref()
        .ok_or_else(|| CliError::usage("hopf needs --key"))?
        .iter()
        .map(|&k| k as u128)
        .collect();
    let n = s.exp.n.unwrap_or(2);
    let h = t.height(n)?;
    let hypotheses = vec![
        Flag::new("key_length", key.len() == x.d()),
        Flag::new("key_in_tower", key.iter().all(|&k| k < h)),
    ];
    if !hypotheses.iter().all(|f| f.ok) {
        let mut table = Table::new(&["reason"]);
        table.push(vec![format!("key must hold {} levels below h_{n} = {h}", x.d()).into()]);
        return Ok(Outcome { table, verdict: Verdict::HypothesisNotSatisfied, hypotheses, notes: vec![] });
    }
    let window = match s.exp.window {
        Some(w) => w,
        None => Interval::new(0, 99_999).intersect(&t.valid_shifts(&x)?),
    };
    t.check_window(&x, window)?;
    let ratio = hopf_ratio(&t, &x, &key, n, window)?;
    let mut table = Table::with_rationals(&["n", "key", "window"], &["ratio"]);
    let key_s = key.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(";");
    let mut row: Vec<Cell> = vec![n.into(), key_s.into(), window.to_string().into()];
    row.extend(rational(&ratio));
    table.push(row);
    let notes = vec!["reported quantity; no bound is tested".into()];
    Ok(Outcome { table, verdict: Verdict::Pass, hypotheses, notes })
}

fn product(s: &Settings) -> Result<Outcome, Fail> {
    let (t, x) = tower_and_point(s)?;
    let n = s.exp.n.unwrap_or(2);
    let windows = s.exp.windows.clone().unwrap_or_else(|| vec![10_000, 100_000, 1_000_000]);
    let hypotheses = vec![Flag::new("d_at_least_2", x.d() >= 2), Flag::new("two_windows", windows.len() >= 2)];
    let mut table = Table::with_rationals(&["window"], &["distance"]);
    let mut dists = Vec::new();
    for &len in &windows {
        let j = Interval::with_len(0, len);
        t.check_window(&x, j)?;
        let dist = empirical(&t, &x, IntSet::from_interval(j))?.box_counts(&t, n)?.product_distance()?;
        let mut row: Vec<Cell> = vec![len.into()];
        row.extend(rational(&dist));
        table.push(row);
        dists.push(dist);
    }
    let trend = matches!((dists.first(), dists.last()), (Some(a), Some(b)) if b < a);
    let verdict = Verdict::from_parts(hypotheses.iter().all(|f| f.ok), trend);
    let notes = vec![format!("stage {n}; bound: distance at the longest window below the shortest")];
    Ok(Outcome { table, verdict, hypotheses, notes })
}

/// Smallest min(level, h_n - 1 - level) of x_1 over J per stage; `None` once it leaves tower n.
fn margins(t: &Tower, x: &ProductPoint, j: Interval) -> Result<Vec<Option<u128>>, Fail> {
    let start = (x.coords[0] as i128 + j.lo as i128) as u128;
    let mut w = LevelWalker::new(t, x.trunc, start)?;
    let mut out: Vec<Option<u128>> = (0..=x.trunc).map(|n| Some(t.h(n))).collect();
    for k in j.iter() {
        for (n, m) in out.iter_mut().enumerate() {
            *m = match (*m, w.level(n)) {
                (Some(m), Some(l)) => Some(m.min(l.min(t.h(n) - 1 - l))),
                _ => None,
            };
        }
        if k < j.hi {
            w.advance();
        }
    }
    Ok(out)
}

fn graph(s: &Settings) -> Result<Outcome, Fail> {
    let mut s = s.clone();
    if s.exp.points.is_empty() {
        let depth = s.params.trunc.min(12);
        s.exp.points = vec![format!("random:{depth}"), "shift:3".into()];
    }
    let (t, x) = tower_and_point(&s)?;
    if x.d() < 2 {
        return Err(Fail::Unmet("graph needs d >= 2".into()));
    }
    let offsets: Vec<i64> = x.coords[1..].iter().map(|&c| c as i64 - x.coords[0] as i64).collect();
    let reach = offsets.iter().map(|e| e.unsigned_abs() as u128).max().unwrap_or(0);
    let window = match s.exp.window {
        Some(w) => w,
        None => Interval::new(-1000, 1000).intersect(&t.valid_shifts(&x)?),
    };
    t.check_window(&x, window)?;
    let (lo, hi) = s.exp.ns.unwrap_or((0, t.trunc()));
    let ns: Vec<usize> = (lo..=hi).collect();
    let margin = margins(&t, &x, window)?;
    let counts = empirical(&t, &x, IntSet::from_interval(window))?.box_counts_multi(&t, &ns)?;
    let mut table = Table::with_rationals(&["n"], &["fraction"]);
    for c in ["margin", "qualifying", "spread", "ok"] {
        table.columns.push(c.into());
    }
    let mut bounds_ok = true;
    for bc in &counts {
        let fraction = if bc.in_cn == 0 { None } else { Some(bc.graph_support_fraction(&offsets)?) };
        let m = margin.get(bc.n).copied().flatten();
        let qualifying = m.is_some_and(|m| m > reach);
        let spread = bc.diagonal_spread();
        let ok = (!qualifying || fraction.as_ref() == Some(&int(1))) && spread <= 1;
        bounds_ok &= ok;
        let mut row: Vec<Cell> = vec![bc.n.into()];
        row.extend(opt_rational(&fraction));
        row.extend([m.into(), qualifying.into(), spread.into(), ok.into()]);
        table.push(row);
    }
    let offsets_s = offsets.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(";");
    let notes = vec![format!(
        "offsets {offsets_s}, window {window}; bound: fraction = 1 where the margin exceeds max |e|, diagonal spread <= 1"
    )];
    let verdict = Verdict::from_parts(true, bounds_ok);
    Ok(Outcome { table, verdict, hypotheses: vec![Flag::new("d_at_least_2", true)], notes })
}

fn twist(s: &Settings) -> Result<Outcome, Fail> {
    let mut params = s.params.clone();
    if params.d != 2 {
        if s.d_explicit {
            return Err(Fail::Unmet(format!("twist example needs d = 2, got {}", params.d)));
        }
        params.d = 2;
    }
    let t = Tower::new(params).map_err(CliError::from)?;
    let n = s.exp.n.unwrap_or(4);
    let a = u128::from(s.exp.a.unwrap_or(1));
    let sc = twist_example(&t, n, a)?;
    let rep = verify_twist_invariance(&t, &sc.x, sc.j, sc.j_prime, &sc.spec, n)?;
    let bad = verify_twist_invariance(&t, &sc.x, sc.j, sc.j_prime, &sc.spec.swapped(), n)?;
    let mut table = Table::new(&["m", "boxes_checked", "invariant", "swapped_boxes_checked", "swapped_fails"]);
    for (l, b) in rep.levels.iter().zip(&bad.levels) {
        table.push(vec![
            l.m.into(),
            l.boxes_checked.into(),
            l.counterexample.is_none().into(),
            b.boxes_checked.into(),
            b.counterexample.is_some().into(),
        ]);
    }
    let verdict = Verdict::from_parts(true, rep.ok() && !bad.ok());
    let notes = vec![format!(
        "J = {}, J' = {}; bound: invariance for every m <= {n}, swapped spec breaks it",
        sc.j, sc.j_prime
    )];
    let hypotheses = vec![Flag::new("normal_stage", true)];
    Ok(Outcome { table, verdict, hypotheses, notes })
}

fn ratergo(s: &Settings) -> Result<Outcome, Fail> {
    let t = tower(s)?;
    let rs = s.exp.r.clone().unwrap_or_else(|| vec![40, 121, 241, 724]);
    let big = t.trunc();
    let mut table = Table::with_rationals(&["r", "trunc"], &["m_hat", "lower", "upper", "boundary_error"]);
    for c in ["depth_ok", "bound", "ok"] {
        table.columns.push(c.into());
    }
    let (mut hypotheses, mut all_ok) = (Vec::new(), true);
    for &r in &rs {
        let rep = rational_ergodicity_stat(&t, r, big)?;
        let ok = rep.m_hat >= int(1) && rep.m_hat <= int(144);
        all_ok &= ok;
        hypotheses.push(Flag::new(format!("r={r}:depth_ok"), rep.depth_ok));
        let mut row: Vec<Cell> = vec![r.into(), big.into()];
        for v in [&rep.m_hat, &rep.lower, &rep.upper, &rep.boundary_error] {
            row.extend(rational(v));
        }
        row.extend([rep.depth_ok.into(), Cell::Int(144), ok.into()]);
        table.push(row);
    }
    let verdict = Verdict::from_parts(hypotheses.iter().all(|f| f.ok), all_ok);
    let notes = vec!["B = tower 0; bound: 1 <= M_hat <= 144".into()];
    Ok(Outcome { table, verdict, hypotheses, notes })
}
