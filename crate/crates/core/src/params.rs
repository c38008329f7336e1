//! Construction parameters, their validation, and the constants derived from `d` and `eta`.

use std::fmt;

use num::bigint::BigUint;
use num::rational::BigRational;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{biguint_pow, int, pow, rat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstructionParams {
    /// Special stages n_1 < n_2 < ...
    pub n_seq: Vec<usize>,
    /// l_0 = 1 < l_1 < ...
    pub l_seq: Vec<usize>,
    /// Largest tower built.
    pub trunc: usize,
    pub d: usize,
    /// `None` selects the default 1/(128 d).
    pub eta: Option<BigRational>,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        ConstructionParams {
            n_seq: vec![3, 8, 15, 24, 35],
            l_seq: vec![1, 2, 8, 44],
            trunc: 12,
            d: 1,
            eta: None,
        }
    }
}

impl ConstructionParams {
    pub fn with_trunc(mut self, trunc: usize) -> Self {
        self.trunc = trunc;
        self
    }

    pub fn with_d(mut self, d: usize) -> Self {
        self.d = d;
        self
    }

    /// n_ℓ for ℓ ≥ 1, with n_0 = 0.
    pub fn n_of(&self, ell: usize) -> Option<usize> {
        if ell == 0 {
            Some(0)
        } else {
            self.n_seq.get(ell - 1).copied()
        }
    }

    /// If stage `n` is special, the ℓ with n = n_ℓ.
    pub fn special_index(&self, n: usize) -> Option<usize> {
        self.n_seq.iter().position(|&m| m == n).map(|i| i + 1)
    }

    /// The unique k with l_k ≤ ℓ < l_{k+1}.
    pub fn k_of(&self, ell: usize) -> Result<usize> {
        if ell == 0 {
            return Err(Error::LSeqExhausted { ell });
        }
        self.l_seq
            .windows(2)
            .position(|w| w[0] <= ell && ell < w[1])
            .ok_or(Error::LSeqExhausted { ell })
    }

    pub fn eta_value(&self) -> BigRational {
        match &self.eta {
            Some(e) => e.clone(),
            None => rat(1, 128 * self.d.max(1) as u64),
        }
    }

    /// Largest truncation whose stage types are all determined: stages past the
    /// last listed n_L stay normal up to n_L + 2(L+1) because n_{L+1} > n_L + 2(L+1).
    pub fn max_determined_trunc(&self) -> usize {
        let l = self.n_seq.len();
        self.n_seq.last().map_or(0, |&nl| nl + 2 * (l + 1) + 1)
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        if self.n_seq.is_empty() || self.l_seq.is_empty() {
            return Err(Error::NoStages);
        }
        let mut checks = Vec::new();
        let mut push = |name: &'static str, index: Option<usize>, passed: bool, detail: String| {
            checks.push(Check { name, index, passed, detail })
        };

        push("d_positive", None, self.d >= 1, format!("d = {}", self.d));
        push(
            "l_seq_starts_at_one",
            None,
            self.l_seq[0] == 1,
            format!("l_0 = {}", self.l_seq[0]),
        );
        match self.l_seq.windows(2).position(|w| w[0] >= w[1]) {
            Some(i) => push("l_seq_increasing", Some(i + 1), false, format!("l_{} <= l_{}", i + 1, i)),
            None => push("l_seq_increasing", None, true, String::new()),
        }
        match self.n_seq.windows(2).position(|w| w[0] >= w[1]) {
            Some(i) => push("n_seq_increasing", Some(i + 2), false, format!("n_{} <= n_{}", i + 2, i + 1)),
            None => push("n_seq_increasing", None, true, String::new()),
        }

        for k in 0..self.l_seq.len().saturating_sub(1) {
            let (a, b) = (self.l_seq[k], self.l_seq[k + 1]);
            let gap = b.saturating_sub(a) as u64;
            let ok = b > a && growth_condition_holds(k as u64, gap);
            push(
                "condition_lk",
                Some(k),
                ok,
                format!("(1 + 7^-{k})^{gap} >= 2"),
            );
        }

        for ell in 1..=self.n_seq.len() {
            let prev = self.n_of(ell - 1).unwrap();
            let cur = self.n_of(ell).unwrap();
            push(
                "condition_nl",
                Some(ell),
                cur > prev + 2 * ell,
                format!("n_{ell} = {cur} > n_{} + 2*{ell} = {} (n_0 = 0)", ell - 1, prev + 2 * ell),
            );
        }

        let eta = self.eta_value();
        let d = self.d.max(1) as u64;
        let eta_ok = eta > BigRational::zero()
            && eta < rat(1, 100 * d)
            && (BigRational::one() - &eta) * (BigRational::one() - &eta) > rat(1, 2);
        push("eta_range", None, eta_ok, format!("eta = {eta}"));

        let max_trunc = self.max_determined_trunc();
        push(
            "trunc_determined",
            None,
            self.trunc <= max_trunc,
            format!("trunc = {} <= {}", self.trunc, max_trunc),
        );

        for (i, &n) in self.n_seq.iter().enumerate() {
            if n < self.trunc {
                let ell = i + 1;
                let ok = self.k_of(ell).map(|k| k <= n).unwrap_or(false);
                push("k_defined", Some(ell), ok, format!("k({ell}) needed for stage {n}"));
            }
        }

        let fits = heights_checked(self).is_ok();
        push("heights_fit_u128", None, fits, format!("h_{} < 2^128", self.trunc));

        Ok(ValidationReport {
            checks,
            notes: vec!["n_0 is taken as 0 in condition_nl".to_string()],
        })
    }

    /// Validates and returns an error carrying the failing checks otherwise.
    pub fn validated(self) -> Result<Self> {
        let report = self.validate()?;
        if report.accepted() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(report.failures_summary()))
        }
    }

    pub fn constants(&self) -> Result<DerivedConstants> {
        DerivedConstants::new(self.d, self.eta_value())
    }
}

/// (1 + 7^-k)^gap ≥ 2, decided exactly.
fn growth_condition_holds(k: u64, gap: u64) -> bool {
    let seven_k = biguint_pow(7, k);
    // Bernoulli: gap ≥ 7^k already gives 1 + gap·7^-k ≥ 2.
    if BigUint::from(gap) >= seven_k {
        return true;
    }
    // (1+x)^g ≤ e^{gx} < 2 when gx ≤ 69/100.
    if BigUint::from(gap) * 100u32 <= &seven_k * 69u32 {
        return false;
    }
    let lhs = num::pow(&seven_k + 1u32, gap as usize);
    let rhs = num::pow(seven_k, gap as usize) * 2u32;
    lhs >= rhs
}

pub(crate) fn heights_checked(p: &ConstructionParams) -> Result<Vec<u128>> {
    let mut h: Vec<u128> = vec![1];
    for n in 0..p.trunc {
        let hn = h[n];
        let next = match p.special_index(n) {
            None => hn.checked_mul(3).and_then(|x| x.checked_add(1)),
            Some(ell) => {
                let k = p.k_of(ell)?;
                if k > n {
                    return Err(Error::InvalidParams(format!("k({ell}) = {k} exceeds stage {n}")));
                }
                let s = h[n - k];
                hn.checked_mul(3)
                    .and_then(|x| x.checked_add(s.checked_mul(3)?))
                    .and_then(|x| x.checked_add(1))
            }
        };
        h.push(next.ok_or(Error::HeightOverflow { n: n + 1 })?);
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub index: Option<usize>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn failures_summary(&self) -> String {
        self.failures()
            .map(|c| match c.index {
                Some(i) => format!("{}[{}]: {}", c.name, i, c.detail),
                None => format!("{}: {}", c.name, c.detail),
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// θ₂(M) = θ₁^e / q with e = 7^{p2}·M and q = e + 2, kept unexpanded.
///
/// The exponent is in the hundreds of thousands for realistic η, so the
/// rational itself is only materialized on request.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta2 {
    pub theta1: BigRational,
    pub exponent: u64,
    pub divisor: u64,
}

impl Theta2 {
    pub fn exact(&self) -> BigRational {
        pow(&self.theta1, self.exponent) / int(self.divisor)
    }

    /// θ₂ ≤ r, decided exactly. Uses θ₁^e ≤ θ₁^k for k ≤ e before expanding.
    pub fn at_most(&self, r: &BigRational) -> bool {
        let k = self.exponent.min(64);
        let coarse = pow(&self.theta1, k) / int(self.divisor);
        if &coarse <= r {
            return true;
        }
        if k == self.exponent {
            return false;
        }
        &self.exact() <= r
    }

    pub fn log10(&self) -> f64 {
        self.exponent as f64 * crate::rational::to_f64(&self.theta1).log10() - (self.divisor as f64).log10()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedConstants {
    pub d: usize,
    pub eta: BigRational,
    pub epsilon: BigRational,
    pub c_min: u64,
    pub p1: u32,
    pub p2: u32,
    pub k1: BigRational,
    pub k2: BigRational,
    pub theta1: BigRational,
}

impl DerivedConstants {
    pub fn new(d: usize, eta: BigRational) -> Result<Self> {
        let one = BigRational::one();
        let dd = d.max(1) as u64;
        if !(eta > BigRational::zero()
            && eta < rat(1, 100 * dd)
            && (&one - &eta) * (&one - &eta) > rat(1, 2))
        {
            return Err(Error::EtaOutOfRange { eta: eta.to_string() });
        }
        let epsilon = &eta / int(4);
        // smallest c with (c-1)/c > 1-ε, i.e. c > 1/ε
        let inv = epsilon.recip();
        let c_min = (inv.floor().to_integer() + 1u32)
            .try_into()
            .map_err(|_| Error::EtaOutOfRange { eta: eta.to_string() })?;

        let mut p1 = 0u32;
        while !(3u128.pow(p1) > 2 * dd as u128 + 1 && p1 as u64 > dd) {
            p1 += 1;
        }
        // 3^{-p2} < η/3  ⇔  3^{p2}·η > 3
        let mut p2 = 0u32;
        while int(biguint_pow(3, p2 as u64)) * &eta <= int(3) {
            p2 += 1;
        }

        let k1 = (&one + int(2) / &eta) / (&one - &eta) * int(dd);
        let k2 = &k1 * int(6);
        let q = &one - &eta;
        let theta1 = &q / (int(2 * dd) / pow(&q, 2 * dd) + &one);
        Ok(DerivedConstants { d, eta, epsilon, c_min, p1, p2, k1, k2, theta1 })
    }

    pub fn theta2(&self, m: u64) -> Theta2 {
        let e = 7u64.pow(self.p2) * m;
        Theta2 { theta1: self.theta1.clone(), exponent: e, divisor: e + 2 }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let idx = c.index.map(|i| format!("[{i}]")).unwrap_or_default();
            writeln!(f, "{} {}{} {}", if c.passed { "ok  " } else { "FAIL" }, c.name, idx, c.detail)?;
        }
        Ok(())
    }
}
