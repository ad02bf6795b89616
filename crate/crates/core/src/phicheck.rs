//! The homomorphisms `φ_k : M_e → Z/2^{k+e-1}` (k = 2..5) that certify
//! `2^{e-k} u^{3·2^{k-1}-3}[0,0] ≠ 0`, checked against every relation of the
//! relevant grading with exact integers.
//!
//! Values live in `data/phi_tables.txt` as lines `k i j value`, nonzero
//! entries only. The k = 5 block lists `i <= j` and is mirrored on load.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::twolocal::{binom_big, nu_big};

pub const PHI_DATA: &str = include_str!("../data/phi_tables.txt");

/// SHA-256 of [`PHI_DATA`].
pub const PHI_CHECKSUM: &str = "d364d8596960a4c2351f06387401708c792d9eda0b3978b9e76441dba94b66e0";

/// Largest exponent accepted by the congruence checks.
pub const MAX_E: u32 = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhiError {
    #[error("no table for k = {0}; tables exist for k = 2..5")]
    NoTable(u32),
    #[error("need k <= e <= {max} (got k={k}, e={e})", max = MAX_E)]
    BadExponent { k: u32, e: u32 },
    #[error("phi data line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("identity check needs e >= 2 (got {0})")]
    BadIndnExponent(u32),
}

/// Values `φ_k(i, j) = φ_k(u^{D-i-j}[i,j])`, where `D = 3·2^{k-1} - 3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiTable {
    k: u32,
    values: BTreeMap<(usize, usize), i64>,
}

impl PhiTable {
    pub fn k(&self) -> u32 {
        self.k
    }

    /// The grading `D` carrying `φ_k`.
    pub fn grading(&self) -> usize {
        3 * (1 << (self.k - 1)) - 3
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.values.get(&(i, j)).copied().unwrap_or(0)
    }

    /// Nonzero entries in `(i, j)` order.
    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), i64)> + '_ {
        self.values.iter().map(|(&p, &v)| (p, v))
    }

    pub fn is_symmetric(&self) -> bool {
        self.values.iter().all(|(&(i, j), &v)| self.get(j, i) == v)
    }
}

pub fn parse_phi_tables(text: &str) -> Result<Vec<PhiTable>, PhiError> {
    let mut tables: Vec<PhiTable> = (2..=5)
        .map(|k| PhiTable {
            k,
            values: BTreeMap::new(),
        })
        .collect();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| PhiError::Parse {
            line: n + 1,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(bad("expected `k i j value`"));
        }
        let k: u32 = fields[0].parse().map_err(|_| bad("bad k"))?;
        let i: usize = fields[1].parse().map_err(|_| bad("bad i"))?;
        let j: usize = fields[2].parse().map_err(|_| bad("bad j"))?;
        let v: i64 = fields[3].parse().map_err(|_| bad("bad value"))?;
        if !(2..=5).contains(&k) {
            return Err(bad("k outside 2..5"));
        }
        let table = &mut tables[k as usize - 2];
        if i + j > table.grading() {
            return Err(bad("i + j past the grading"));
        }
        let mut put = |p: (usize, usize)| match table.values.insert(p, v) {
            Some(old) if old != v => Err(bad("conflicting duplicate")),
            _ => Ok(()),
        };
        put((i, j))?;
        if k == 5 {
            if i > j {
                return Err(bad("k = 5 lists i <= j only"));
            }
            put((j, i))?;
        }
    }
    Ok(tables)
}

pub fn phi_data_checksum() -> String {
    Sha256::digest(PHI_DATA.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn tables() -> &'static [PhiTable] {
    static TABLES: OnceLock<Vec<PhiTable>> = OnceLock::new();
    TABLES.get_or_init(|| parse_phi_tables(PHI_DATA).expect("bundled phi data parses"))
}

pub fn phi_table(k: u32) -> Result<&'static PhiTable, PhiError> {
    match k {
        2..=5 => Ok(&tables()[k as usize - 2]),
        _ => Err(PhiError::NoTable(k)),
    }
}

/// Which family of relations: `A` lowers `i`, `B` lowers `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    A,
    B,
}

/// `binom(2^e, ℓ+1)` for `ℓ = 0..=count-1`.
fn series(e: u32, count: usize) -> Vec<BigInt> {
    (0..count as u64)
        .map(|l| BigInt::from(binom_big(1 << e, l + 1)))
        .collect()
}

/// `φ_k` applied to the relation indexed by `(i, j)`, as an exact integer.
pub fn relation_value(table: &PhiTable, e: u32, family: Family, i: usize, j: usize) -> BigInt {
    let top = match family {
        Family::A => i,
        Family::B => j,
    };
    let c = series(e, top + 1);
    relation_value_with(table, &c, family, i, j)
}

fn relation_value_with(
    table: &PhiTable,
    c: &[BigInt],
    family: Family,
    i: usize,
    j: usize,
) -> BigInt {
    let top = match family {
        Family::A => i,
        Family::B => j,
    };
    (0..=top)
        .filter_map(|l| {
            let v = match family {
                Family::A => table.get(i - l, j),
                Family::B => table.get(i, j - l),
            };
            (v != 0).then(|| &c[l] * v)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhiReport {
    pub k: u32,
    pub e: u32,
    pub modulus_log2: u32,
    pub relations_checked: usize,
    /// relations whose image is not divisible by `2^{k+e-1}`
    pub failures: Vec<(Family, usize, usize)>,
    pub nondegenerate: bool,
}

impl PhiReport {
    pub fn passes(&self) -> bool {
        self.failures.is_empty() && self.nondegenerate
    }
}

fn check_ke(k: u32, e: u32) -> Result<&'static PhiTable, PhiError> {
    let table = phi_table(k)?;
    if e < k || e > MAX_E {
        return Err(PhiError::BadExponent { k, e });
    }
    Ok(table)
}

fn divisible(n: &BigInt, bits: u32) -> bool {
    n.is_zero() || nu_big(n).unwrap() >= bits
}

/// Checks both relation families over the whole grading.
pub fn phi_report(k: u32, e: u32) -> Result<PhiReport, PhiError> {
    let table = check_ke(k, e)?;
    let d = table.grading();
    let c = series(e, d + 1);
    let bits = k + e - 1;
    let mut failures = Vec::new();
    let mut checked = 0;
    for i in 0..=d {
        for j in 0..=d - i {
            for family in [Family::A, Family::B] {
                checked += 1;
                if !divisible(&relation_value_with(table, &c, family, i, j), bits) {
                    failures.push((family, i, j));
                }
            }
        }
    }
    Ok(PhiReport {
        k,
        e,
        modulus_log2: bits,
        relations_checked: checked,
        failures,
        nondegenerate: verify_nondegeneracy(k, e)?,
    })
}

pub fn verify_phi(k: u32, e: u32) -> Result<bool, PhiError> {
    Ok(phi_report(k, e)?.failures.is_empty())
}

/// `2^{e-k} φ_k(0,0) ≡ 2^{k+e-2}` mod `2^{k+e-1}`.
pub fn verify_nondegeneracy(k: u32, e: u32) -> Result<bool, PhiError> {
    let table = check_ke(k, e)?;
    let modulus = BigInt::one() << (k + e - 1);
    let image = (BigInt::from(table.get(0, 0)) << (e - k)) % &modulus;
    Ok(image == BigInt::one() << (k + e - 2))
}

/// The hand-checked relation `(k, e, i, j) = (3, 3, 5, 4)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WorkedCase {
    pub k: u32,
    pub e: u32,
    pub i: usize,
    pub j: usize,
    pub value: String,
    pub modulus: u64,
    pub vanishes: bool,
}

pub fn worked_case() -> WorkedCase {
    let table = phi_table(3).unwrap();
    let value = relation_value(table, 3, Family::A, 5, 4);
    WorkedCase {
        k: 3,
        e: 3,
        i: 5,
        j: 4,
        vanishes: divisible(&value, 5),
        value: value.to_string(),
        modulus: 32,
    }
}

/// `ν(binom(2^{e+1}, ℓ) - 2 binom(2^e, ℓ))`.
pub fn indn_lhs(e: u32, l: u64) -> u32 {
    let a = BigInt::from(binom_big(1 << (e + 1), l));
    let b = BigInt::from(binom_big(1 << e, l)) * 2;
    nu_big(&(a - b)).expect("difference is nonzero for 1 < l < 2^(e+1)")
}

/// `2e + 1 - floor(log2(ℓ-1)) - ν(ℓ)`.
pub fn indn_rhs(e: u32, l: u64) -> u32 {
    2 * e + 1 - (l - 1).ilog2() - l.trailing_zeros()
}

/// The identity for every `1 < ℓ < 2^{e+1}`.
pub fn verify_indn(e: u32) -> Result<bool, PhiError> {
    if !(2..=MAX_E).contains(&e) {
        return Err(PhiError::BadIndnExponent(e));
    }
    let mut a = BigUint::one(); // binom(2^{e+1}, ℓ)
    let mut b = BigUint::one(); // binom(2^e, ℓ)
    let (n2, n1) = (1u64 << (e + 1), 1u64 << e);
    for l in 1..n2 {
        a = a * (n2 - l + 1) / l;
        b = if l <= n1 {
            b * (n1 - l + 1) / l
        } else {
            BigUint::zero()
        };
        if l == 1 {
            continue;
        }
        let diff = BigInt::from(a.clone()) - BigInt::from(b.clone()) * 2;
        if nu_big(&diff).ok() != Some(indn_rhs(e, l)) {
            return Ok(false);
        }
    }
    Ok(true)
}
