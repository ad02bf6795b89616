//! Graded presentation matrices for `G_d`, the grading-`2d` part of `M_e`.
//!
//! Generators of `G_d` are `u^k[i,j]` with `k + i + j = d`, ordered by `k`
//! and then by `i`:
//!
//! ```text
//! [0,d], ..., [d,0], u[0,d-1], ..., u[d-1,0], ..., u^d[0,0]
//! ```
//!
//! Each generator `u^m[i,j]` of `G_{d}` with `m + i + j = d` gives two
//! relations, one per tensor factor:
//!
//! ```text
//! A(m,i,j) = sum_l binom(2^e, l+1) u^{m+l} [i-l, j]
//! B(m,i,j) = sum_l binom(2^e, l+1) u^{m+l} [i, j-l]
//! ```

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::localhnf::SparseRow;
use crate::poly::{p_poly, Poly};
use crate::twolocal::{binom_mod, Ring2k};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresentationError {
    #[error("precision 2^{bits} cannot certify cokernel queries for e = {e}; need K > e")]
    PrecisionTooLow { e: u32, bits: u32 },
    #[error("torsion exponent e = {0} must be at least 1")]
    BadExponent(u32),
}

/// The generator `u^k [i, j]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Generator {
    pub k: usize,
    pub i: usize,
    pub j: usize,
}

/// Flat indexing of the generators of `G_d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GeneratorIndex {
    d: usize,
}

impl GeneratorIndex {
    pub fn new(d: usize) -> Self {
        GeneratorIndex { d }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `(d + 1)(d + 2) / 2`.
    pub fn len(&self) -> usize {
        (self.d + 1) * (self.d + 2) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// First flat index of the `u^k` block, `sum_{m<k} (d + 1 - m)`.
    pub fn block_start(&self, k: usize) -> usize {
        k * (self.d + 1) - k * k.saturating_sub(1) / 2
    }

    /// Number of generators carrying `u^k`.
    pub fn block_len(&self, k: usize) -> usize {
        self.d + 1 - k
    }

    pub fn index(&self, k: usize, i: usize, j: usize) -> Option<usize> {
        (k + i + j == self.d).then(|| self.block_start(k) + i)
    }

    pub fn generator(&self, idx: usize) -> Generator {
        assert!(idx < self.len(), "generator index out of range");
        let mut k = 0;
        while self.block_start(k + 1) <= idx {
            k += 1;
        }
        let i = idx - self.block_start(k);
        Generator {
            k,
            i,
            j: self.d - k - i,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Generator> + '_ {
        (0..=self.d).flat_map(move |k| {
            (0..=self.d - k).map(move |i| Generator {
                k,
                i,
                j: self.d - k - i,
            })
        })
    }
}

/// Sparse relation matrix of `G_d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedPresentation {
    pub e: u32,
    pub d: usize,
    pub ring: Ring2k,
    pub gens: GeneratorIndex,
    pub rows: Vec<SparseRow>,
}

impl GradedPresentation {
    pub fn ncols(&self) -> usize {
        self.gens.len()
    }

    /// Text dump: header `e d K nrows ncols`, then `row col residue` per
    /// nonzero entry.
    pub fn dump(&self) -> String {
        dump_rows(self.e, self.d, self.ring, &self.rows, self.ncols())
    }
}

pub fn dump_rows(e: u32, d: usize, ring: Ring2k, rows: &[SparseRow], ncols: usize) -> String {
    let mut out = String::new();
    writeln!(out, "{} {} {} {} {}", e, d, ring.bits(), rows.len(), ncols).unwrap();
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            writeln!(out, "{r} {c} {v}").unwrap();
        }
    }
    out
}

fn sorted_row(mut entries: Vec<(usize, u64)>, ring: Ring2k) -> SparseRow {
    entries.sort_unstable_by_key(|&(c, _)| c);
    let mut row: SparseRow = Vec::with_capacity(entries.len());
    for (c, v) in entries {
        match row.last_mut() {
            Some(last) if last.0 == c => last.1 = ring.add(last.1, v),
            _ => row.push((c, v)),
        }
    }
    row.retain(|&(_, v)| v != 0);
    row
}

fn check_params(e: u32, ring: Ring2k) -> Result<(), PresentationError> {
    if e == 0 {
        return Err(PresentationError::BadExponent(e));
    }
    if ring.bits() <= e {
        return Err(PresentationError::PrecisionTooLow {
            e,
            bits: ring.bits(),
        });
    }
    Ok(())
}

/// `binom(2^e, l + 1)` for `l = 0 .. 2^e - 1`, reduced in `ring`.
fn series_coefficients(e: u32, ring: Ring2k, count: usize) -> Vec<u64> {
    let top = 1u64 << e;
    (0..count.min(top as usize))
        .map(|l| binom_mod(top, l as u64 + 1, ring).residue())
        .collect()
}

/// Both relation families for `G_d`, in the order
/// `A(0,*,*), B(0,*,*), A(1,*,*), B(1,*,*), ...` with `i` ascending.
pub fn build_grading(
    e: u32,
    d: usize,
    ring: Ring2k,
) -> Result<GradedPresentation, PresentationError> {
    check_params(e, ring)?;
    let gens = GeneratorIndex::new(d);
    let coeffs = series_coefficients(e, ring, d + 1);
    let mut rows = Vec::with_capacity((d + 1) * (d + 2));
    for m in 0..=d {
        push_relations(&gens, &coeffs, m, ring, &mut rows);
    }
    Ok(GradedPresentation {
        e,
        d,
        ring,
        gens,
        rows,
    })
}

/// The `2(d+1)` relations of `G_d` with no leading power of `u`. The others
/// are the relations of `G_{d-1}` moved right by `d + 1` columns.
pub fn top_relations(e: u32, d: usize, ring: Ring2k) -> Result<Vec<SparseRow>, PresentationError> {
    check_params(e, ring)?;
    let gens = GeneratorIndex::new(d);
    let coeffs = series_coefficients(e, ring, d + 1);
    let mut rows = Vec::with_capacity(2 * (d + 1));
    push_relations(&gens, &coeffs, 0, ring, &mut rows);
    Ok(rows)
}

fn push_relations(
    gens: &GeneratorIndex,
    coeffs: &[u64],
    m: usize,
    ring: Ring2k,
    rows: &mut Vec<SparseRow>,
) {
    let d = gens.d;
    for i in 0..=d - m {
        let j = d - m - i;
        let entries = (0..=i.min(coeffs.len() - 1))
            .map(|l| (gens.index(m + l, i - l, j).unwrap(), coeffs[l]))
            .collect();
        rows.push(sorted_row(entries, ring));
    }
    for i in 0..=d - m {
        let j = d - m - i;
        let entries = (0..=j.min(coeffs.len() - 1))
            .map(|l| (gens.index(m + l, i, j - l).unwrap(), coeffs[l]))
            .collect();
        rows.push(sorted_row(entries, ring));
    }
}

/// One block row of a polynomial matrix: `height` numeric rows, and a
/// polynomial in each listed column block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyRow {
    pub height: usize,
    pub entries: Vec<(usize, Poly)>,
}

/// Expands polynomial rows into numeric rows over the generators of `G_d`.
/// Column block `j` has width `d + 1 - j`; blocks past `d` are ignored.
pub fn expand_poly_rows(rows: &[PolyRow], d: usize, ring: Ring2k) -> Vec<SparseRow> {
    let gens = GeneratorIndex::new(d);
    let mut out = Vec::new();
    for prow in rows {
        for r in 0..prow.height {
            let mut entries = Vec::new();
            for (block, p) in &prow.entries {
                if *block > d {
                    continue;
                }
                let width = gens.block_len(*block);
                let start = gens.block_start(*block);
                for (k, c) in p.terms() {
                    if k > r {
                        break;
                    }
                    if r - k < width {
                        entries.push((start + r - k, c));
                    }
                }
            }
            out.push(sorted_row(entries, ring));
        }
    }
    out
}

/// The polynomial relation matrix with `2(d + 1)` rows: row `2m` carries
/// `binom(2^e, l+1) x^l` in column block `m + l`, row `2m + 1` carries
/// `binom(2^e, l+1)`. Both have height `d + 1 - m`.
pub fn inl_poly_matrix(e: u32, d: usize, ring: Ring2k) -> Result<Vec<PolyRow>, PresentationError> {
    check_params(e, ring)?;
    let coeffs = series_coefficients(e, ring, d + 1);
    let mut rows = Vec::with_capacity(2 * (d + 1));
    for m in 0..=d {
        let height = d + 1 - m;
        let shifted = coeffs
            .iter()
            .enumerate()
            .take(d + 1 - m)
            .map(|(l, &c)| (m + l, Poly::from_residues(ring, vec![c]).shift(l)))
            .collect();
        let flat = coeffs
            .iter()
            .enumerate()
            .take(d + 1 - m)
            .map(|(l, &c)| (m + l, Poly::from_residues(ring, vec![c])))
            .collect();
        rows.push(PolyRow {
            height,
            entries: shifted,
        });
        rows.push(PolyRow {
            height,
            entries: flat,
        });
    }
    Ok(rows)
}

/// A square upper-triangular matrix of polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMatrix {
    ring: Ring2k,
    entries: Vec<Vec<Poly>>,
}

impl PolyMatrix {
    pub fn zero(ring: Ring2k, n: usize) -> Self {
        PolyMatrix {
            ring,
            entries: vec![vec![Poly::zero(ring); n]; n],
        }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn ring(&self) -> Ring2k {
        self.ring
    }

    pub fn entry(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: Poly) {
        assert!(i <= j, "entries below the diagonal stay zero");
        self.entries[i][j] = p;
    }

    /// Block rows for the restriction to the first `d + 1` columns.
    pub fn restrict(&self, d: usize) -> Vec<PolyRow> {
        assert!(d < self.size());
        (0..=d)
            .map(|i| PolyRow {
                height: d + 1 - i,
                entries: (i..=d)
                    .filter(|&j| !self.entries[i][j].is_zero())
                    .map(|j| (j, self.entries[i][j].clone()))
                    .collect(),
            })
            .collect()
    }

    pub fn expand(&self, d: usize) -> Vec<SparseRow> {
        expand_poly_rows(&self.restrict(d), d, self.ring)
    }

    /// 2-adic valuations of the diagonal.
    pub fn diagonal_valuations(&self) -> Vec<u32> {
        (0..self.size())
            .map(|i| self.ring.valuation(self.entries[i][i].coeff(0)))
            .collect()
    }
}

/// SHA-256 of the dump of `table1_poly_matrix` expanded at `d = 22`, K = 8.
pub const TABLE1_CHECKSUM: &str =
    "0b4ca59cfcd8e0a671000b06b99e55f71b696bdfcc0e06bda88c791b9da2dcb0";

pub fn table1_checksum(ring: Ring2k) -> String {
    let m = table1_poly_matrix(ring);
    let rows = m.expand(22);
    let ncols = GeneratorIndex::new(22).len();
    let digest = Sha256::digest(dump_rows(4, 22, ring, &rows, ncols).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// The reduced polynomial presentation of `M_4`, 23 x 23.
pub fn table1_poly_matrix(ring: Ring2k) -> PolyMatrix {
    let p = |n: usize| p_poly(ring, n);
    let ps = |n: usize, m: usize| p_poly(ring, n).subst(m);
    let x = |k: usize| Poly::x_pow(ring, k);
    let c = |v: i64| Poly::constant(ring, v);

    let mut t = PolyMatrix::zero(ring, 23);
    for (i, v) in [16, 8, 8, 8, 4, 4, 4, 4, 4, 4]
        .into_iter()
        .chain([2; 12])
        .chain([1])
        .enumerate()
    {
        t.set(i, i, c(v));
    }

    t.set(0, 3, c(4) * x(1) * p(2));
    t.set(0, 7, c(2) * x(1) * p(6));
    t.set(0, 15, x(1) * p(14));
    t.set(0, 20, x(7) * ps(4, 2));
    t.set(0, 21, x(5) * ps(2, 2) * ps(4, 3));

    t.set(1, 3, c(4) * p(3));
    t.set(1, 7, c(2) * p(7));
    t.set(1, 15, p(15));
    t.set(1, 20, x(6) * p(8));
    t.set(1, 21, x(4) * ps(2, 12));

    t.set(2, 8, c(2) * x(2) * ps(2, 2));
    t.set(2, 9, c(2) * x(1) * p(6));
    t.set(2, 16, x(2) * ps(6, 2));
    t.set(2, 17, x(1) * p(6) * ps(3, 4));
    t.set(2, 19, x(3) * p(3) * ps(2, 2) * ps(2, 7));
    t.set(2, 20, x(4) * p(4) * ps(2, 7));
    t.set(2, 21, x(1) * p(2) * ps(2, 16) + x(8) * ps(2, 3));

    t.set(3, 9, c(2) * x(2) * ps(2, 2));
    t.set(3, 17, x(2) * ps(6, 2));
    t.set(3, 20, x(5) * ps(2, 3) * ps(2, 4));
    t.set(3, 21, x(4) * ps(2, 7) * p(4));

    t.set(4, 8, c(2) * ps(3, 2));
    t.set(4, 9, c(2) * x(1) * ps(2, 3));
    t.set(4, 16, ps(7, 2));
    t.set(4, 17, x(1) * ps(2, 3) * ps(3, 4));
    t.set(4, 19, x(3) * ps(2, 2) * ps(2, 7));
    t.set(4, 20, x(4) * ps(2, 2) * ps(2, 6));
    t.set(4, 21, x(1) * ps(2, 9) * (c(1) + x(2) * p(3) + x(6)));

    t.set(5, 9, c(2) * ps(3, 2));
    t.set(5, 17, ps(7, 2));
    t.set(5, 20, x(5) * p(2) * ps(2, 4));
    t.set(5, 21, x(4) * ps(2, 2) * ps(2, 6));

    t.set(6, 18, x(4) * ps(2, 4));
    t.set(6, 20, x(2) * ps(6, 2));
    t.set(6, 21, x(5) * p(2) * ps(2, 4));

    t.set(7, 19, x(4) * ps(2, 4));
    t.set(7, 21, x(2) * ps(6, 2));

    t.set(8, 20, x(4) * ps(2, 4));
    t.set(9, 21, x(4) * ps(2, 4));

    t.set(10, 18, ps(3, 4));
    t.set(10, 20, x(2) * ps(2, 6));
    t.set(11, 19, ps(3, 4));
    t.set(11, 21, x(2) * ps(2, 6));
    t.set(12, 20, ps(3, 4));
    t.set(13, 21, ps(3, 4));
    t
}

/// Diagonal 2-adic valuations `v(0..=3*2^{e-1}-2)` of the reduced matrix of
/// `M_e`: `v(0) = e`, then for each `s`, `e - s` on `[2^{s+1}-2, 3*2^s-2)` and
/// `e - 1 - s` on `[3*2^s-2, 2^{s+2}-2)`.
pub fn genthm_diagonal(e: u32) -> Vec<u32> {
    assert!(e >= 1);
    let len = 3 * (1usize << (e - 1)) - 1;
    let mut v = vec![0u32; len];
    v[0] = e;
    for s in 0..e {
        let p = 1usize << s;
        for (j, slot) in v.iter_mut().enumerate().skip(1) {
            if (2 * p - 2..3 * p - 2).contains(&j) {
                *slot = e - s;
            } else if (3 * p - 2..4 * p - 2).contains(&j) {
                *slot = e - 1 - s;
            }
        }
    }
    v
}

/// Last grading covered by `genthm_diagonal(e)`: `3 * 2^{e-1} - 2`.
pub fn top_grading(e: u32) -> usize {
    3 * (1usize << (e - 1)) - 2
}

/// Per-column diagonal valuations of the numeric presentation of `G_d`
/// obtained from block diagonal valuations `v`: block `j` repeats `v(j)`
/// `d + 1 - j` times.
pub fn expanded_diagonal(v: &[u32], d: usize) -> Vec<u32> {
    (0..=d)
        .flat_map(|j| std::iter::repeat_n(v[j], d + 1 - j))
        .collect()
}
