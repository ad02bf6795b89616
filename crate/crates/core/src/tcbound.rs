//! Lower bounds for `b(n, e)` and for the topological complexity of
//! `L^{2n+1}(2^e)`.
//!
//! Whenever `0 <= t < e` and `alpha(m) = t + e`, `b(m + 2^t - 1, e) >= 2m - 2^t`;
//! together with `b(n+1, e) >= b(n, e)` this gives the bound reported here.
//! `TC` then lies between `2b(n, e)` and `2b(n, e) + 1`; only the lower end
//! is computed.

use serde::Serialize;
use thiserror::Error;

use crate::twolocal::alpha;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BoundError {
    #[error("e must be in 1..=62 (got {0})")]
    BadExponent(u32),
    #[error("lens space dimension must be odd (got {0})")]
    EvenDimension(u64),
}

/// An instance `(m, t)` with `alpha(m) = t + e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Witness {
    pub m: u64,
    pub t: u32,
}

impl Witness {
    /// The `n` at which the instance first applies.
    pub fn threshold(self) -> u64 {
        self.m + (1 << self.t) - 1
    }

    pub fn bound(self) -> u64 {
        2 * self.m - (1 << self.t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub n: u64,
    pub e: u32,
    pub b_lower: u64,
    /// every instance attaining `b_lower`, sorted; empty when no instance applies
    pub witnesses: Vec<Witness>,
    /// lower bound for `TC(L^{2n+1}(2^e))`
    pub tc_lower: u64,
}

fn check_e(e: u32) -> Result<(), BoundError> {
    if (1..=62).contains(&e) {
        Ok(())
    } else {
        Err(BoundError::BadExponent(e))
    }
}

/// All instances with threshold at most `n`.
pub fn instances(n: u64, e: u32) -> Result<Vec<Witness>, BoundError> {
    check_e(e)?;
    let mut out = Vec::new();
    for t in 0..e {
        let shift = (1u64 << t) - 1;
        if shift > n {
            break;
        }
        out.extend(
            (1..=n - shift)
                .filter(|&m| alpha(m) == t + e)
                .map(|m| Witness { m, t }),
        );
    }
    Ok(out)
}

pub fn b_lower(n: u64, e: u32) -> Result<BoundReport, BoundError> {
    let all = instances(n, e)?;
    let best = all.iter().map(|w| w.bound()).max().unwrap_or(0);
    let mut witnesses: Vec<Witness> = if best == 0 {
        Vec::new()
    } else {
        all.into_iter().filter(|w| w.bound() == best).collect()
    };
    witnesses.sort();
    Ok(BoundReport {
        n,
        e,
        b_lower: best,
        witnesses,
        tc_lower: 2 * best,
    })
}

/// Lower bound for `TC(L^{dim}(2^e))`, `dim` odd.
pub fn tc_lower(dim: u64, e: u32) -> Result<u64, BoundError> {
    if dim.is_multiple_of(2) {
        return Err(BoundError::EvenDimension(dim));
    }
    Ok(b_lower((dim - 1) / 2, e)?.tc_lower)
}

/// Reports for `n = 0..=n_max`, built in one pass over the instances.
pub fn bound_table(e: u32, n_max: u64) -> Result<Vec<BoundReport>, BoundError> {
    let mut all = instances(n_max, e)?;
    all.sort_by_key(|w| w.threshold());
    let mut out = Vec::with_capacity(n_max as usize + 1);
    let mut next = all.iter().peekable();
    let mut best = 0u64;
    let mut witnesses: Vec<Witness> = Vec::new();
    for n in 0..=n_max {
        while let Some(w) = next.next_if(|w| w.threshold() <= n) {
            if w.bound() > best {
                best = w.bound();
                witnesses.clear();
            }
            if w.bound() == best {
                witnesses.push(*w);
            }
        }
        witnesses.sort();
        out.push(BoundReport {
            n,
            e,
            b_lower: best,
            witnesses: witnesses.clone(),
            tc_lower: 2 * best,
        });
    }
    Ok(out)
}

/// One CSV/JSON row: the smallest witness stands for the report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundRow {
    pub n: u64,
    pub e: u32,
    pub b_lower: u64,
    pub tc_lower: u64,
    pub witness_m: Option<u64>,
    pub witness_t: Option<u32>,
}

impl From<&BoundReport> for BoundRow {
    fn from(r: &BoundReport) -> Self {
        let w = r.witnesses.first();
        BoundRow {
            n: r.n,
            e: r.e,
            b_lower: r.b_lower,
            tc_lower: r.tc_lower,
            witness_m: w.map(|w| w.m),
            witness_t: w.map(|w| w.t),
        }
    }
}

pub const CSV_HEADER: &str = "n,e,b_lower,tc_lower,witness_m,witness_t";

pub fn to_csv(reports: &[BoundReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(BoundRow::from(r)).expect("in-memory csv write");
    }
    let mut s = String::from_utf8(w.into_inner().expect("in-memory csv flush")).unwrap();
    if reports.is_empty() {
        s = format!("{CSV_HEADER}\n");
    }
    s
}
