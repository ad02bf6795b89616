//! Row echelonization over `Z/2^K`.
//!
//! `Z/2^K` is local: every element is a unit times a power of 2, so picking
//! the pivot of least valuation in a column lets it divide every other entry
//! of that column. Columns are processed left to right. After a pivot row is
//! chosen it is scaled so the pivot is exactly `2^v`, and every other active
//! row with an entry in that column is cleared.
//!
//! Because `Z/2^K` has zero divisors, `2^{K-v}` times a pivot row vanishes in
//! the pivot column but need not vanish elsewhere. That multiple is fed back
//! as a new active row so the echelon rows generate every span element that
//! starts to the right of a pivot (a Howell basis). Without it membership
//! tests would be wrong for matrices whose true cokernel exponent reaches
//! `2^K`.
//!
//! Finally each pivot row is reduced against the later pivot rows so that its
//! entry in every later pivot column `c` lies in `[0, 2^{v_c})`. The result is
//! canonical: row order of the input only matters through tie-breaking.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::twolocal::Ring2k;

/// Sparse row: `(column, residue)` pairs, strictly increasing in column,
/// residues nonzero.
pub type SparseRow = Vec<(usize, u64)>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EchelonError {
    #[error("column {0} has no pivot; the cokernel is not finite at this precision")]
    PivotlessColumn(usize),
    #[error("element order reaches 2^{0}; precision exhausted")]
    PrecisionExhausted(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pivot {
    pub column: usize,
    pub valuation: u32,
}

/// Echelon form of a row lattice over `Z/2^K`: one reduced row per pivot,
/// pivot entry exactly `2^valuation`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Echelon {
    ring: Ring2k,
    ncols: usize,
    pivots: Vec<Pivot>,
    rows: Vec<SparseRow>,
    /// column -> index into `pivots`, `usize::MAX` when pivotless
    slot: Vec<usize>,
}

/// `a - q * b` on sparse rows.
fn sub_multiple(a: &[(usize, u64)], q: u64, b: &[(usize, u64)], ring: Ring2k) -> SparseRow {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(usize::MAX, |x| x.0);
        let cb = b.get(j).map_or(usize::MAX, |x| x.0);
        if ca < cb {
            out.push(a[i]);
            i += 1;
        } else {
            let bv = ring.mul(q, b[j].1);
            let v = if ca == cb {
                let v = ring.sub(a[i].1, bv);
                i += 1;
                v
            } else {
                ring.neg(bv)
            };
            j += 1;
            if v != 0 {
                out.push((cb, v));
            }
        }
    }
    out
}

fn scale(row: &[(usize, u64)], q: u64, ring: Ring2k) -> SparseRow {
    row.iter()
        .filter_map(|&(c, v)| {
            let w = ring.mul(v, q);
            (w != 0).then_some((c, w))
        })
        .collect()
}

fn clean(row: &[(usize, u64)], ring: Ring2k) -> SparseRow {
    row.iter()
        .map(|&(c, v)| (c, ring.reduce(v)))
        .filter(|&(_, v)| v != 0)
        .collect()
}

/// Active rows waiting for their leading column, keyed by original index so
/// ties break toward the lowest index.
type Bucket = BTreeMap<usize, SparseRow>;

pub fn echelonize(rows: &[SparseRow], ncols: usize, ring: Ring2k) -> Echelon {
    let mut buckets: Vec<Bucket> = vec![Bucket::new(); ncols];
    let mut next_id = rows.len();
    for (idx, row) in rows.iter().enumerate() {
        let row = clean(row, ring);
        if let Some(&(c, _)) = row.first() {
            assert!(c < ncols, "entry in column {c} beyond ncols = {ncols}");
            buckets[c].insert(idx, row);
        }
    }

    let mut pivots = Vec::new();
    let mut prows: Vec<SparseRow> = Vec::new();
    for col in 0..ncols {
        let bucket = std::mem::take(&mut buckets[col]);
        if bucket.is_empty() {
            continue;
        }
        let (&pid, _) = bucket
            .iter()
            .min_by_key(|(&id, r)| (ring.valuation(r[0].1), id))
            .unwrap();
        let mut bucket = bucket;
        let prow = bucket.remove(&pid).unwrap();
        let (v, odd) = ring.split(prow[0].1).unwrap();
        let prow = scale(&prow, ring.inv_unit(odd).unwrap(), ring);
        debug_assert_eq!(prow[0].1, 1 << v);

        for (id, row) in bucket {
            let q = row[0].1 >> v;
            let reduced = sub_multiple(&row, q, &prow, ring);
            debug_assert!(reduced.first().is_none_or(|&(c, _)| c > col));
            if let Some(&(c, _)) = reduced.first() {
                buckets[c].insert(id, reduced);
            }
        }
        let saturated = scale(&prow, ring.pow2(ring.bits() - v), ring);
        if let Some(&(c, _)) = saturated.first() {
            buckets[c].insert(next_id, saturated);
            next_id += 1;
        }
        pivots.push(Pivot {
            column: col,
            valuation: v,
        });
        prows.push(prow);
    }

    let mut slot = vec![usize::MAX; ncols];
    for (p, piv) in pivots.iter().enumerate() {
        slot[piv.column] = p;
    }
    let mut ech = Echelon {
        ring,
        ncols,
        pivots,
        rows: prows,
        slot,
    };
    ech.back_reduce();
    ech
}

/// Incremental construction of an [`Echelon`] by inserting vectors one at a
/// time into a triangular basis kept indexed by pivot column.
///
/// Each inserted vector is reduced densely against the current pivot rows.
/// When it reaches a column whose pivot it cannot be reduced by (or a column
/// with no pivot), it becomes the pivot there; a displaced pivot row, after
/// elimination against the newcomer, is queued for insertion, and so is the
/// newcomer's `2^{K-v}` multiple. [`EchelonBuilder::finish`] applies the same
/// Hermite reduction as [`echelonize`], so both routes give identical output.
pub struct EchelonBuilder {
    ring: Ring2k,
    ncols: usize,
    /// pivot valuation and row per column
    table: Vec<Option<(u32, SparseRow)>>,
}

impl EchelonBuilder {
    pub fn new(ncols: usize, ring: Ring2k) -> Self {
        EchelonBuilder {
            ring,
            ncols,
            table: vec![None; ncols],
        }
    }

    /// Seeds the builder with the rows of an existing echelon moved right by
    /// `offset` columns.
    pub fn with_shifted(base: &Echelon, offset: usize, ncols: usize) -> Self {
        assert!(base.ncols + offset <= ncols);
        let mut b = Self::new(ncols, base.ring);
        for (piv, row) in base.pivots.iter().zip(base.shifted_rows(offset)) {
            b.table[piv.column + offset] = Some((piv.valuation, row));
        }
        b
    }

    pub fn insert(&mut self, row: &[(usize, u64)]) {
        let ring = self.ring;
        let mut queue: Vec<SparseRow> = vec![clean(row, ring)];
        while let Some(v) = queue.pop() {
            let Some(&(first, _)) = v.first() else {
                continue;
            };
            let mut dense = vec![0u64; self.ncols - first];
            for &(c, x) in &v {
                dense[c - first] = x;
            }
            for off in 0..dense.len() {
                let a = dense[off];
                if a == 0 {
                    continue;
                }
                let col = off + first;
                let av = a.trailing_zeros();
                if let Some((w, prow)) = &self.table[col] {
                    if av >= *w {
                        let mult = a >> w;
                        for &(c, x) in prow {
                            let slot = &mut dense[c - first];
                            *slot = ring.sub(*slot, ring.mul(mult, x));
                        }
                        continue;
                    }
                }
                let inv = ring.inv_unit(a >> av).unwrap();
                let new_row: SparseRow = dense[off..]
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &x)| {
                        let y = ring.mul(x, inv);
                        (y != 0).then_some((col + i, y))
                    })
                    .collect();
                if let Some((w, old)) = self.table[col].take() {
                    queue.push(sub_multiple(&old, 1 << (w - av), &new_row, ring));
                }
                let saturated = scale(&new_row, ring.pow2(ring.bits() - av), ring);
                if !saturated.is_empty() {
                    queue.push(saturated);
                }
                self.table[col] = Some((av, new_row));
                break;
            }
        }
    }

    pub fn finish(self) -> Echelon {
        let mut pivots = Vec::new();
        let mut rows = Vec::new();
        let mut slot = vec![usize::MAX; self.ncols];
        for (col, entry) in self.table.into_iter().enumerate() {
            if let Some((valuation, row)) = entry {
                slot[col] = pivots.len();
                pivots.push(Pivot {
                    column: col,
                    valuation,
                });
                rows.push(row);
            }
        }
        let mut ech = Echelon {
            ring: self.ring,
            ncols: self.ncols,
            pivots,
            rows,
            slot,
        };
        ech.back_reduce();
        ech
    }
}

impl Echelon {
    pub fn ring(&self) -> Ring2k {
        self.ring
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn pivots(&self) -> &[Pivot] {
        &self.pivots
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    /// Echelon rows with every column index moved right by `offset`.
    pub fn shifted_rows(&self, offset: usize) -> impl Iterator<Item = SparseRow> + '_ {
        self.rows
            .iter()
            .map(move |r| r.iter().map(|&(c, v)| (c + offset, v)).collect())
    }

    pub fn pivot_valuations(&self) -> Vec<u32> {
        self.pivots.iter().map(|p| p.valuation).collect()
    }

    pub fn pivot_at(&self, column: usize) -> Option<Pivot> {
        self.slot
            .get(column)
            .and_then(|&s| self.pivots.get(s))
            .copied()
    }

    pub fn first_pivotless_column(&self) -> Option<usize> {
        self.slot.iter().position(|&s| s == usize::MAX)
    }

    /// Bottom-up Hermite reduction of the entries above each pivot.
    fn back_reduce(&mut self) {
        let ring = self.ring;
        for p in (0..self.rows.len()).rev() {
            let start = self.pivots[p].column;
            let mut dense = vec![0u64; self.ncols - start];
            for &(c, v) in &self.rows[p] {
                dense[c - start] = v;
            }
            for q in p + 1..self.pivots.len() {
                let Pivot { column, valuation } = self.pivots[q];
                let mult = dense[column - start] >> valuation;
                if mult == 0 {
                    continue;
                }
                for &(c, v) in &self.rows[q] {
                    let slot = &mut dense[c - start];
                    *slot = ring.sub(*slot, ring.mul(mult, v));
                }
            }
            self.rows[p] = dense
                .into_iter()
                .enumerate()
                .filter(|&(_, v)| v != 0)
                .map(|(i, v)| (i + start, v))
                .collect();
        }
    }

    /// Canonical residue of `v` modulo the row lattice: every pivot-column
    /// entry is brought into `[0, 2^{v_c})`.
    pub fn reduce_vector(&self, v: &[(usize, u64)]) -> SparseRow {
        let ring = self.ring;
        let Some(&(first, _)) = v.first() else {
            return Vec::new();
        };
        let mut dense = vec![0u64; self.ncols - first];
        for &(c, x) in v {
            dense[c - first] = ring.add(dense[c - first], ring.reduce(x));
        }
        let start = self.pivots.partition_point(|p| p.column < first);
        for (piv, row) in self.pivots[start..].iter().zip(&self.rows[start..]) {
            let mult = dense[piv.column - first] >> piv.valuation;
            if mult == 0 {
                continue;
            }
            for &(c, x) in row {
                let slot = &mut dense[c - first];
                *slot = ring.sub(*slot, ring.mul(mult, x));
            }
        }
        dense
            .into_iter()
            .enumerate()
            .filter(|&(_, x)| x != 0)
            .map(|(i, x)| (i + first, x))
            .collect()
    }

    pub fn is_zero_in_coker(&self, v: &[(usize, u64)]) -> bool {
        self.reduce_vector(v).is_empty()
    }

    /// Least `a` with `2^a v` in the row lattice. Orders of `2^K` or more
    /// cannot be certified at this precision.
    pub fn element_order_log2(&self, v: &[(usize, u64)]) -> Result<u32, EchelonError> {
        let ring = self.ring;
        for a in 0..ring.bits() {
            let scaled = scale(v, ring.pow2(a), ring);
            if self.is_zero_in_coker(&scaled) {
                return Ok(a);
            }
        }
        Err(EchelonError::PrecisionExhausted(ring.bits()))
    }

    /// `log2 |(Z/2^K)^n / rows|` under the requirement that every column
    /// has a pivot (so the cokernel is the true finite group).
    pub fn coker_order_log2(&self) -> Result<u32, EchelonError> {
        if let Some(c) = self.first_pivotless_column() {
            return Err(EchelonError::PivotlessColumn(c));
        }
        Ok(self.pivots.iter().map(|p| p.valuation).sum())
    }

    /// `log2 |(Z/2^K)^n / rows|`, counting each pivotless column as `K`.
    pub fn quotient_order_log2(&self) -> u32 {
        let free = (self.ncols - self.pivots.len()) as u32;
        self.pivots.iter().map(|p| p.valuation).sum::<u32>() + free * self.ring.bits()
    }
}

/// Mutual membership of two row sets.
pub fn lattices_equal(a: &[SparseRow], b: &[SparseRow], ncols: usize, ring: Ring2k) -> bool {
    let ea = echelonize(a, ncols, ring);
    let eb = echelonize(b, ncols, ring);
    a.iter().all(|r| eb.is_zero_in_coker(r)) && b.iter().all(|r| ea.is_zero_in_coker(r))
}
