//! validate, heights, decompose, orbit, crossings.

use std::io::Write;

use nfc_core::check::{Flag, Verdict};
use nfc_core::crossings::crossings as scan_crossings;
use nfc_core::rational::{int, rat};
use nfc_core::{Interval, LevelClass, ProductPoint, Tower};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{Format, Settings};
use crate::output::{emit, rational, Cell, Table};
use crate::points::product_point;
use crate::CliError;

pub fn meta(s: &Settings, command: &str, verdict: Option<Verdict>, hypotheses: &[Flag], notes: &[String]) -> Value {
    let mut m = json!({
        "tool": "nfc",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": s.echo(),
    });
    if let Some(v) = verdict {
        m["verdict"] = json!(v.name());
        m["hypotheses"] = Value::Array(hypotheses.iter().map(|f| json!({"name": f.name, "ok": f.ok})).collect());
    }
    if !notes.is_empty() {
        m["notes"] = json!(notes);
    }
    m
}

/// Table to stdout; for CSV the verdict and failing hypotheses go to stderr.
pub fn finish(out: &mut impl Write, s: &Settings, meta: Value, table: &Table) -> Result<(), CliError> {
    emit(out, s.output, meta.clone(), table)?;
    if s.output == Format::Csv {
        if let Some(v) = meta.get("verdict").and_then(Value::as_str) {
            eprintln!("verdict: {v}");
        }
        for h in meta.get("hypotheses").and_then(Value::as_array).into_iter().flatten() {
            if h["ok"] == json!(false) {
                eprintln!("hypothesis not satisfied: {}", h["name"].as_str().unwrap_or_default());
            }
        }
        for n in meta.get("notes").and_then(Value::as_array).into_iter().flatten() {
            eprintln!("note: {}", n.as_str().unwrap_or_default());
        }
    }
    Ok(())
}

pub fn exit_code(v: Verdict) -> u8 {
    match v {
        Verdict::Pass => 0,
        Verdict::BoundFailure => 1,
        Verdict::HypothesisNotSatisfied => 2,
    }
}

pub fn tower(s: &Settings) -> Result<Tower, CliError> {
    Ok(Tower::new(s.params.clone())?)
}

/// Tower and product point; with explicit points their count sets d.
pub fn tower_and_point(s: &Settings) -> Result<(Tower, ProductPoint), CliError> {
    let mut s = s.clone();
    let given = s.exp.points.len();
    if given > 0 && given != s.params.d {
        if s.d_explicit {
            return Err(CliError::usage(format!("{given} point specs given but d = {}", s.params.d)));
        }
        s.params.d = given;
    }
    let t = tower(&s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let x = product_point(&t, &s.exp.points, s.params.d, &mut rng)?;
    Ok((t, x))
}

pub fn tvec_string(tvec: &[Option<u8>]) -> String {
    tvec.iter().map(|t| t.map_or("-".to_string(), |v| v.to_string())).collect::<Vec<_>>().join(";")
}

fn joined<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

pub fn validate(s: &Settings, out: &mut impl Write) -> Result<u8, CliError> {
    let report = s.params.validate().map_err(|e| CliError::config(e.to_string()))?;
    let mut t = Table::new(&["check", "index", "passed", "detail"]);
    for c in &report.checks {
        t.push(vec![c.name.into(), c.index.into(), c.passed.into(), c.detail.clone().into()]);
    }
    let verdict = if report.accepted() { Verdict::Pass } else { Verdict::BoundFailure };
    let mut m = meta(s, "validate", None, &[], &report.notes);
    m["verdict"] = json!(if report.accepted() { "pass" } else { "fail" });
    emit(out, s.output, m, &t)?;
    if !report.accepted() {
        eprintln!("validation failed: {}", report.failures_summary());
    }
    Ok(exit_code(verdict))
}

pub fn heights(s: &Settings, out: &mut impl Write) -> Result<u8, CliError> {
    let tw = tower(s)?;
    let mut t = Table::with_rationals(&["n", "h", "special", "s"], &["mu", "growth"]);
    t.columns.push("special_growth".into());
    let mut prev = None;
    for n in 0..=tw.trunc() {
        let mu = tw.measure_of_tower(n)?;
        let mut row: Vec<Cell> =
            vec![n.into(), tw.h(n).into(), s.params.special_index(n).into(), tw.spacer_block(n).into()];
        row.extend(rational(&mu));
        match &prev {
            Some(p) => {
                let g = &mu / p;
                row.extend(rational(&g));
                let after_special = s.params.special_index(n - 1).is_some();
                row.push(Cell::from(after_special.then(|| g >= int(2))));
            }
            None => row.extend([Cell::Empty, Cell::Empty, Cell::Empty]),
        }
        t.push(row);
        prev = Some(mu);
    }
    let notes = vec!["mu = h_n / 3^n; special_growth is set on rows following a special stage".to_string()];
    finish(out, s, meta(s, "heights", None, &[], &notes), &t)?;
    Ok(0)
}

pub fn decompose(s: &Settings, out: &mut impl Write) -> Result<u8, CliError> {
    let tw = tower(s)?;
    let idx = s.exp.idx.ok_or_else(|| CliError::usage("decompose needs --idx"))? as u128;
    let lo = s.exp.lo.unwrap_or(0);
    let mut t = Table::new(&["m", "class", "value", "t"]);
    for step in tw.decompose(tw.trunc(), idx, lo)? {
        let (class, value) = match step.class {
            LevelClass::Child(j) => ("child".to_string(), j),
            LevelClass::Spacer(p, off) => (format!("spacer:{}", p.name()), off),
        };
        t.push(vec![step.m.into(), class.into(), value.into(), step.t.into()]);
    }
    finish(out, s, meta(s, "decompose", None, &[], &[]), &t)?;
    Ok(0)
}

pub fn orbit(s: &Settings, out: &mut impl Write) -> Result<u8, CliError> {
    let (tw, x) = tower_and_point(s)?;
    let n = s.exp.n.unwrap_or(0);
    if n > tw.trunc() {
        return Err(CliError::usage(format!("stage {n} exceeds truncation {}", tw.trunc())));
    }
    let valid = tw.valid_shifts(&x)?;
    let window = s.exp.window.unwrap_or_else(|| Interval::new(0, 19).intersect(&valid));
    tw.check_window(&x, window)?;
    let mut t = Table::new(&["shift", "idx", "levels", "tvec"]);
    if !window.is_empty() {
        let mut w = tw.product_walker(&x, window.lo)?;
        loop {
            let coords = w.coords();
            let levels = joined(coords.iter().map(|c| c.level(n).map_or("-".to_string(), |l| l.to_string())));
            let tvec: Vec<Option<u8>> = coords.iter().map(|c| c.subcolumn(n)).collect();
            t.push(vec![
                w.shift().into(),
                joined(coords.iter().map(|c| c.idx())).into(),
                levels.into(),
                tvec_string(&tvec).into(),
            ]);
            if w.shift() >= window.hi {
                break;
            }
            w.advance();
        }
    }
    finish(out, s, meta(s, "orbit", None, &[], &[]), &t)?;
    Ok(0)
}

pub fn crossings(s: &Settings, out: &mut impl Write) -> Result<u8, CliError> {
    let (tw, x) = tower_and_point(s)?;
    let n = s.exp.n.unwrap_or(tw.trunc());
    let window = match s.exp.window {
        Some(w) => w,
        None => tw.valid_shifts(&x)?,
    };
    tw.check_window(&x, window)?;
    let mut t = Table::with_rationals(&["lo", "hi", "size", "tvec", "substantial", "synchronized", "partial"], &["relative_size"]);
    let h = tw.height(n)?;
    for c in scan_crossings(&tw, &x, n, window)? {
        let mut row: Vec<Cell> = vec![
            c.interval.lo.into(),
            c.interval.hi.into(),
            c.len().into(),
            tvec_string(&c.tvec).into(),
            c.substantial.into(),
            c.synchronized.into(),
            c.partial.into(),
        ];
        row.extend(rational(&rat(c.len(), h)));
        t.push(row);
    }
    finish(out, s, meta(s, "crossings", None, &[], &[]), &t)?;
    Ok(0)
}
