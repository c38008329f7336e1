//! Config file ingestion and flag merging (flag > file > default).

use std::fs;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use nfc_core::{ConstructionParams, Interval};
use num::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Keys accepted in a config document. Construction keys n_seq and l_seq are required.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n_seq: Vec<usize>,
    pub l_seq: Vec<usize>,
    pub trunc: Option<usize>,
    pub d: Option<usize>,
    /// "default" or a fraction "p/q".
    pub eta: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<Format>,
    pub window: Option<String>,
    pub points: Option<Vec<String>>,
    pub n: Option<usize>,
    pub ell: Option<usize>,
    pub lbar: Option<usize>,
    pub c: Option<u64>,
    pub r: Option<Vec<u64>>,
    pub a: Option<u64>,
    pub idx: Option<u64>,
    pub lo: Option<usize>,
    pub key: Option<Vec<u64>>,
    pub windows: Option<Vec<u64>>,
    pub ns: Option<String>,
    pub count: Option<usize>,
}

/// Experiment keys after merging.
#[derive(Debug, Clone, Default)]
pub struct Experiment {
    pub window: Option<Interval>,
    pub points: Vec<String>,
    pub n: Option<usize>,
    pub ell: Option<usize>,
    pub lbar: Option<usize>,
    pub c: Option<u64>,
    pub r: Option<Vec<u64>>,
    pub a: Option<u64>,
    pub idx: Option<u64>,
    pub lo: Option<usize>,
    pub key: Option<Vec<u64>>,
    pub windows: Option<Vec<u64>>,
    pub ns: Option<(usize, usize)>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub params: ConstructionParams,
    /// d came from a flag or the file rather than the default.
    pub d_explicit: bool,
    pub seed: u64,
    pub output: Format,
    pub exp: Experiment,
}

/// Values given on the command line; `None` defers to the file, then the default.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trunc: Option<usize>,
    pub d: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<Format>,
    pub exp: Experiment,
}

pub fn parse_window(s: &str) -> Result<Interval, CliError> {
    let (a, b) = s.split_once("..").ok_or_else(|| CliError::usage(format!("window `{s}` is not A..B")))?;
    let parse = |v: &str| v.trim().parse::<i64>().map_err(|_| CliError::usage(format!("bad window bound `{v}`")));
    let (lo, hi) = (parse(a)?, parse(b)?);
    if hi < lo {
        return Err(CliError::usage(format!("empty window `{s}`")));
    }
    Ok(Interval::new(lo, hi))
}

/// "A..B" inclusive stage range.
pub fn parse_stage_range(s: &str) -> Result<(usize, usize), CliError> {
    let (a, b) = s.split_once("..").ok_or_else(|| CliError::usage(format!("range `{s}` is not A..B")))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| CliError::usage(format!("bad stage `{v}`")));
    let (lo, hi) = (parse(a)?, parse(b)?);
    if hi < lo {
        return Err(CliError::usage(format!("empty range `{s}`")));
    }
    Ok((lo, hi))
}

pub fn parse_list(s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(|v| v.trim().parse::<u64>().map_err(|_| CliError::usage(format!("bad list entry `{v}`"))))
        .collect()
}

fn parse_eta(s: &str) -> Result<Option<BigRational>, CliError> {
    if s == "default" {
        return Ok(None);
    }
    BigRational::from_str(s).map(Some).map_err(|_| CliError::config(format!("eta `{s}` is not a fraction p/q")))
}

pub fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

pub fn merge(file: Option<FileConfig>, flags: Overrides) -> Result<Settings, CliError> {
    let mut params = ConstructionParams::default();
    let mut seed = None;
    let mut output = None;
    let mut exp = Experiment::default();
    let mut d_explicit = flags.d.is_some();
    if let Some(f) = file {
        d_explicit |= f.d.is_some();
        params.n_seq = f.n_seq;
        params.l_seq = f.l_seq;
        if let Some(t) = f.trunc {
            params.trunc = t;
        }
        if let Some(d) = f.d {
            params.d = d;
        }
        if let Some(e) = &f.eta {
            params.eta = parse_eta(e)?;
        }
        seed = f.seed;
        output = f.output;
        exp = Experiment {
            window: f.window.as_deref().map(parse_window).transpose()?,
            points: f.points.unwrap_or_default(),
            n: f.n,
            ell: f.ell,
            lbar: f.lbar,
            c: f.c,
            r: f.r,
            a: f.a,
            idx: f.idx,
            lo: f.lo,
            key: f.key,
            windows: f.windows,
            ns: f.ns.as_deref().map(parse_stage_range).transpose()?,
            count: f.count,
        };
    }
    if let Some(t) = flags.trunc {
        params.trunc = t;
    }
    if let Some(d) = flags.d {
        params.d = d;
    }
    let o = flags.exp;
    let exp = Experiment {
        window: pick(o.window, exp.window),
        points: if o.points.is_empty() { exp.points } else { o.points },
        n: pick(o.n, exp.n),
        ell: pick(o.ell, exp.ell),
        lbar: pick(o.lbar, exp.lbar),
        c: pick(o.c, exp.c),
        r: pick(o.r, exp.r),
        a: pick(o.a, exp.a),
        idx: pick(o.idx, exp.idx),
        lo: pick(o.lo, exp.lo),
        key: pick(o.key, exp.key),
        windows: pick(o.windows, exp.windows),
        ns: pick(o.ns, exp.ns),
        count: pick(o.count, exp.count),
    };
    Ok(Settings {
        params,
        d_explicit,
        seed: pick(flags.seed, seed).unwrap_or(0),
        output: pick(flags.output, output).unwrap_or_default(),
        exp,
    })
}

impl Settings {
    /// Echo for report metadata.
    pub fn echo(&self) -> Value {
        let p = &self.params;
        json!({
            "n_seq": p.n_seq,
            "l_seq": p.l_seq,
            "trunc": p.trunc,
            "d": p.d,
            "eta": nfc_core::rational::fraction_string(&p.eta_value()),
            "seed": self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(json: &str) -> FileConfig {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn window_parsing() {
        assert_eq!(parse_window("-10..35").unwrap(), Interval::new(-10, 35));
        assert_eq!(parse_window("3..3").unwrap(), Interval::new(3, 3));
        assert!(parse_window("4..3").is_err());
        assert!(parse_window("4-3").is_err());
    }

    #[test]
    fn precedence_flag_file_default() {
        let f = file(r#"{"n_seq": [3, 8, 15], "l_seq": [1, 2, 8], "trunc": 9, "seed": 5, "n": 4}"#);
        let flags = Overrides { trunc: Some(6), exp: Experiment { n: Some(2), ..Default::default() }, ..Default::default() };
        let s = merge(Some(f), flags).unwrap();
        assert_eq!(s.params.trunc, 6);
        assert_eq!(s.seed, 5);
        assert_eq!(s.exp.n, Some(2));
        assert_eq!(s.params.d, 1);
        assert!(!s.d_explicit);
        assert_eq!(s.output, Format::Csv);
    }

    #[test]
    fn eta_forms() {
        let s = merge(Some(file(r#"{"n_seq": [3], "l_seq": [1, 2], "eta": "1/300"}"#)), Overrides::default()).unwrap();
        assert_eq!(s.params.eta, Some(BigRational::new(1.into(), 300.into())));
        let s = merge(Some(file(r#"{"n_seq": [3], "l_seq": [1, 2], "eta": "default"}"#)), Overrides::default()).unwrap();
        assert_eq!(s.params.eta, None);
        assert!(merge(Some(file(r#"{"n_seq": [3], "l_seq": [1, 2], "eta": "tiny"}"#)), Overrides::default()).is_err());
    }
}
